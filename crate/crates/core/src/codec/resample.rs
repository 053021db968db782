//! Catmull-Rom bicubic upsampling.

use super::{CodecError, Image};

const A: f64 = -0.5;

pub fn cubic_weight(t: f64) -> f64 {
    let t = t.abs();
    if t <= 1.0 {
        (A + 2.0) * t * t * t - (A + 3.0) * t * t + 1.0
    } else if t < 2.0 {
        A * t * t * t - 5.0 * A * t * t + 8.0 * A * t - 4.0 * A
    } else {
        0.0
    }
}

/// Source taps and weights for every destination coordinate on one axis,
/// pixel-center aligned and clamped at the edges.
fn axis_taps(src: usize, dst: usize) -> Vec<([usize; 4], [f64; 4])> {
    let scale = src as f64 / dst as f64;
    (0..dst)
        .map(|i| {
            let pos = (i as f64 + 0.5) * scale - 0.5;
            let base = pos.floor();
            let frac = pos - base;
            let mut idx = [0usize; 4];
            let mut w = [0f64; 4];
            for m in 0..4 {
                let off = m as i64 - 1;
                idx[m] = (base as i64 + off).clamp(0, src as i64 - 1) as usize;
                w[m] = cubic_weight(frac - off as f64);
            }
            (idx, w)
        })
        .collect()
}

/// Resizes `img` to `target_w` x `target_h` (each at least the source size).
pub fn upsample_bicubic(img: &Image, target_w: usize, target_h: usize) -> Result<Image, CodecError> {
    if target_w < img.width() || target_h < img.height() {
        return Err(CodecError::InvalidParameter(format!(
            "cannot upsample {}x{} to smaller {target_w}x{target_h}",
            img.width(),
            img.height()
        )));
    }
    if (target_w, target_h) == (img.width(), img.height()) {
        return Ok(img.clone());
    }
    let (sw, sh) = (img.width(), img.height());
    let xt = axis_taps(sw, target_w);
    let yt = axis_taps(sh, target_h);
    let mut samples = Vec::with_capacity(target_w * target_h * img.channels());
    let mut rows = vec![0f64; target_w * sh];
    for c in 0..img.channels() {
        let plane = img.plane(c);
        for y in 0..sh {
            let src_row = &plane[y * sw..(y + 1) * sw];
            for (x, (idx, w)) in xt.iter().enumerate() {
                rows[y * target_w + x] = (0..4).map(|m| w[m] * f64::from(src_row[idx[m]])).sum();
            }
        }
        for (idx, w) in &yt {
            for x in 0..target_w {
                let v: f64 = (0..4).map(|m| w[m] * rows[idx[m] * target_w + x]).sum();
                samples.push(v.round().clamp(0.0, 255.0) as u8);
            }
        }
    }
    Image::new(target_w, target_h, img.channels(), samples)
}
