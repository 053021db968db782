//! Resolution-layered wavelet image codec.
//!
//! An image is decomposed by `D` levels of the reversible LeGall 5/3 lifting
//! transform. The coarsest low-pass band (`LL_D`) forms layer 0, the
//! thumbnail; layer `k >= 1` carries the three detail bands of level
//! `D - k + 1`, so decoding layers `0..=k` yields the image at scale
//! `1 / 2^(D - k)`. Every layer is serialized as a self-contained
//! [`LayerContainer`].

mod bitio;
pub mod bmp;
pub mod container;
pub mod dwt;
pub mod layers;
pub mod metrics;
pub mod pnm;
pub mod resample;
pub mod rice;

pub use container::{Band, LayerContainer, SubbandRecord};
pub use dwt::{dwt_forward, dwt_inverse, Plane, SubbandPyramid};
pub use layers::{decode_layers, encode_layers, LayeredStream};
pub use metrics::psnr;
pub use resample::upsample_bicubic;

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum CodecError {
    #[error("image {width}x{height} is too small for {levels} decomposition levels")]
    Dimension {
        width: usize,
        height: usize,
        levels: usize,
    },
    #[error("inconsistent subband structure: {0}")]
    Structure(String),
    #[error("invalid image: {0}")]
    InvalidImage(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("layer {0} is missing")]
    MissingLayer(usize),
    #[error("corrupt layer container: {0}")]
    Parse(String),
    #[error("layer container truncated: need {needed} bytes, have {available}")]
    Truncated { needed: usize, available: usize },
    #[error("image size mismatch: {0}")]
    Mismatch(String),
    #[error("netpbm: {0}")]
    Pnm(String),
}

/// An 8-bit raster with 1 or 3 channels, stored channel-planar and
/// row-major within each plane.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Image {
    width: usize,
    height: usize,
    channels: usize,
    samples: Vec<u8>,
}

impl Image {
    pub fn new(
        width: usize,
        height: usize,
        channels: usize,
        samples: Vec<u8>,
    ) -> Result<Self, CodecError> {
        if width == 0 || height == 0 {
            return Err(CodecError::InvalidImage(format!(
                "dimensions must be positive, got {width}x{height}"
            )));
        }
        if channels != 1 && channels != 3 {
            return Err(CodecError::InvalidImage(format!(
                "expected 1 or 3 channels, got {channels}"
            )));
        }
        if samples.len() != width * height * channels {
            return Err(CodecError::InvalidImage(format!(
                "expected {} samples, got {}",
                width * height * channels,
                samples.len()
            )));
        }
        Ok(Self {
            width,
            height,
            channels,
            samples,
        })
    }

    pub fn filled(width: usize, height: usize, channels: usize, value: u8) -> Result<Self, CodecError> {
        Self::new(width, height, channels, vec![value; width * height * channels])
    }

    /// Builds an image from interleaved samples (`RGBRGB...`).
    pub fn from_interleaved(
        width: usize,
        height: usize,
        channels: usize,
        interleaved: &[u8],
    ) -> Result<Self, CodecError> {
        if interleaved.len() != width * height * channels {
            return Err(CodecError::InvalidImage(format!(
                "expected {} samples, got {}",
                width * height * channels,
                interleaved.len()
            )));
        }
        let n = width * height;
        let mut samples = vec![0u8; interleaved.len()];
        for (i, px) in interleaved.chunks_exact(channels).enumerate() {
            for (c, &v) in px.iter().enumerate() {
                samples[c * n + i] = v;
            }
        }
        Self::new(width, height, channels, samples)
    }

    pub fn to_interleaved(&self) -> Vec<u8> {
        let n = self.width * self.height;
        let mut out = vec![0u8; self.samples.len()];
        for i in 0..n {
            for c in 0..self.channels {
                out[i * self.channels + c] = self.samples[c * n + i];
            }
        }
        out
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn pixels(&self) -> usize {
        self.width * self.height
    }

    pub fn samples(&self) -> &[u8] {
        &self.samples
    }

    pub fn plane(&self, channel: usize) -> &[u8] {
        let n = self.pixels();
        &self.samples[channel * n..(channel + 1) * n]
    }

    pub fn into_samples(self) -> Vec<u8> {
        self.samples
    }
}
