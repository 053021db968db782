#![allow(dead_code)]

use std::path::{Path, PathBuf};
use std::sync::Arc;

use picdna_core::codec::{pnm, Image};
use picdna_core::pool::{build_pool, OligoPool};
use picdna_core::primers::generate_registry;
use picdna_core::reconstruct::DecodeParams;
use picdna_core::{ErrorRates, SamplingMode};
use picdna_gateway::Session;
use tokio::net::TcpListener;

pub const LEVELS: usize = 4;
pub const QUALITY: u16 = 2;

fn fixture(name: &str) -> Image {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../core/tests/data").join(name);
    pnm::read(&path).unwrap_or_else(|e| panic!("{name}: {e}"))
}

fn crop(img: &Image, w: usize, h: usize) -> Image {
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

/// Three small crops, one of them in color.
pub fn images() -> Vec<Image> {
    vec![
        crop(&fixture("camera.pgm"), 64, 48),
        crop(&fixture("chelsea.ppm"), 48, 48),
        crop(&fixture("coins.pgm"), 64, 64),
    ]
}

pub fn pool() -> OligoPool {
    let imgs: Vec<(usize, Image)> = images().into_iter().enumerate().collect();
    let registry = generate_registry(LEVELS, imgs.len(), 31).unwrap();
    build_pool(&imgs, LEVELS, QUALITY, &registry).unwrap()
}

/// Exact coverage 2 through a clean channel.
pub fn clean_params() -> DecodeParams {
    DecodeParams {
        coverage: 2.0,
        rates: ErrorRates::ZERO,
        seed: 4,
        mode: SamplingMode::Exact,
        ..DecodeParams::default()
    }
}

/// Writes the fixtures as PNM files into `dir`.
pub fn write_images(dir: &Path) {
    for (i, img) in images().iter().enumerate() {
        let ext = if img.channels() == 3 { "ppm" } else { "pgm" };
        pnm::write(&dir.join(format!("img{i}.{ext}")), img).unwrap();
    }
}

/// Serves a session on an ephemeral port; returns the base URL.
pub async fn spawn(session: Session) -> String {
    let listener = TcpListener::bind("127.0.0.1:0").await.unwrap();
    let addr = listener.local_addr().unwrap();
    tokio::spawn(picdna_gateway::http::serve(listener, Arc::new(session)));
    format!("http://{addr}")
}
