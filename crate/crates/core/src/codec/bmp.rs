//! Uncompressed 24-bit BMP output.

use super::Image;

pub fn encode(img: &Image) -> Vec<u8> {
    let (w, h) = (img.width(), img.height());
    let row = (3 * w).div_ceil(4) * 4;
    let raster = row * h;
    let file_len = 54 + raster;
    let mut out = Vec::with_capacity(file_len);
    out.extend_from_slice(b"BM");
    out.extend_from_slice(&(file_len as u32).to_le_bytes());
    out.extend_from_slice(&[0; 4]);
    out.extend_from_slice(&54u32.to_le_bytes());
    out.extend_from_slice(&40u32.to_le_bytes());
    out.extend_from_slice(&(w as i32).to_le_bytes());
    out.extend_from_slice(&(h as i32).to_le_bytes());
    out.extend_from_slice(&1u16.to_le_bytes());
    out.extend_from_slice(&24u16.to_le_bytes());
    out.extend_from_slice(&0u32.to_le_bytes());
    out.extend_from_slice(&(raster as u32).to_le_bytes());
    out.extend_from_slice(&2835i32.to_le_bytes());
    out.extend_from_slice(&2835i32.to_le_bytes());
    out.extend_from_slice(&[0; 8]);

    let n = img.pixels();
    let s = img.samples();
    let px = |c: usize, i: usize| if img.channels() == 1 { s[i] } else { s[c * n + i] };
    // bottom-up rows, BGR order
    for y in (0..h).rev() {
        let start = out.len();
        for x in 0..w {
            let i = y * w + x;
            out.extend_from_slice(&[px(2, i), px(1, i), px(0, i)]);
        }
        out.resize(start + row, 0);
    }
    out
}
