use super::{CodecError, Image};

/// Peak signal-to-noise ratio in dB over all samples; identical images
/// give `f64::INFINITY`.
pub fn psnr(a: &Image, b: &Image) -> Result<f64, CodecError> {
    if (a.width(), a.height(), a.channels()) != (b.width(), b.height(), b.channels()) {
        return Err(CodecError::Mismatch(format!(
            "{}x{}x{} vs {}x{}x{}",
            a.width(),
            a.height(),
            a.channels(),
            b.width(),
            b.height(),
            b.channels()
        )));
    }
    let sse: u64 = a
        .samples()
        .iter()
        .zip(b.samples())
        .map(|(&x, &y)| {
            let d = i64::from(x) - i64::from(y);
            (d * d) as u64
        })
        .sum();
    if sse == 0 {
        return Ok(f64::INFINITY);
    }
    let mse = sse as f64 / a.samples().len() as f64;
    Ok(10.0 * (255.0f64 * 255.0 / mse).log10())
}
