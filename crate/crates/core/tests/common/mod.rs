#![allow(dead_code)]

use std::path::PathBuf;

use picdna_core::codec::{pnm, Image};

pub fn data_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/data")
}

pub fn fixture(name: &str) -> Image {
    pnm::read(&data_dir().join(name)).unwrap_or_else(|e| panic!("{name}: {e}"))
}

/// The 768x512 gray fixture plus the two 512x512 ones.
pub fn natural_images() -> Vec<(&'static str, Image)> {
    ["motorcycle.pgm", "camera.pgm", "moon.pgm"]
        .into_iter()
        .map(|n| (n, fixture(n)))
        .collect()
}

/// Central crop of a fixture.
pub fn crop(img: &Image, w: usize, h: usize) -> Image {
    let x0 = (img.width() - w) / 2;
    let y0 = (img.height() - h) / 2;
    let mut s = Vec::with_capacity(w * h * img.channels());
    for c in 0..img.channels() {
        let p = img.plane(c);
        for y in y0..y0 + h {
            s.extend_from_slice(&p[y * img.width() + x0..y * img.width() + x0 + w]);
        }
    }
    Image::new(w, h, img.channels(), s).unwrap()
}
