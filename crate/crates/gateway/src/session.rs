//! In-memory state of a serving process: the pool, the thumbnails and one
//! decode cache per image.

use std::sync::{Mutex, OnceLock};

use picdna_core::codec::{psnr, upsample_bicubic, Image};
use picdna_core::costs::{CostInputs, CostReport};
use picdna_core::pool::OligoPool;
use picdna_core::reconstruct::decoder::pool_thumbnails;
use picdna_core::reconstruct::{
    decode_image, DecodeParams, DecodeStep, DecoderCache, ProgressiveDecoder, Thumbnail,
};

use crate::error::GatewayError;

/// Outcome of one decode request.
#[derive(Debug, Clone)]
pub struct Decoded {
    pub image: Image,
    pub step: DecodeStep,
    /// Against the noise-free full decode, after upsampling; `None` when
    /// the two are identical.
    pub psnr: Option<f64>,
}

pub struct Session {
    pool: OligoPool,
    params: DecodeParams,
    thumbnails: OnceLock<Result<Vec<Thumbnail>, String>>,
    caches: Vec<Mutex<DecoderCache>>,
    references: Vec<OnceLock<Result<Image, String>>>,
}

/// Rejects channel settings that could never sequence.
pub fn check_params(params: &DecodeParams) -> Result<(), GatewayError> {
    params.rates.validate()?;
    if !params.coverage.is_finite() || params.coverage < 0.0 {
        return Err(GatewayError::InvalidParameters(format!("coverage {}", params.coverage)));
    }
    Ok(())
}

impl Session {
    /// `params` is the channel used for thumbnails and the default for
    /// decode requests that leave fields out.
    pub fn new(pool: OligoPool, params: DecodeParams) -> Result<Self, GatewayError> {
        check_params(&params)?;
        let n = pool.registry.num_images();
        Ok(Self {
            pool,
            params,
            thumbnails: OnceLock::new(),
            caches: (0..n).map(|_| Mutex::new(DecoderCache::default())).collect(),
            references: (0..n).map(|_| OnceLock::new()).collect(),
        })
    }

    pub fn pool(&self) -> &OligoPool {
        &self.pool
    }

    pub fn params(&self) -> &DecodeParams {
        &self.params
    }

    pub fn num_levels(&self) -> usize {
        self.pool.codec.num_levels
    }

    /// Parses an image id and checks that the pool holds the image.
    pub fn image_id(&self, raw: &str) -> Result<usize, GatewayError> {
        raw.parse::<usize>()
            .ok()
            .filter(|&id| id < self.caches.len() && self.pool.manifest_entry(id, 0).is_some())
            .ok_or_else(|| GatewayError::UnknownImage(raw.to_string()))
    }

    /// Thumbnails of every image, extracted on first use.
    pub fn thumbnails(&self) -> Result<&[Thumbnail], GatewayError> {
        self.thumbnails
            .get_or_init(|| {
                pool_thumbnails(&self.pool, &self.params)
                    .map(|(t, _)| t)
                    .map_err(|e| e.to_string())
            })
            .as_deref()
            .map_err(|e| GatewayError::Internal(e.clone()))
    }

    /// Noise-free full decode of image `id`.
    pub fn reference(&self, id: usize) -> Result<&Image, GatewayError> {
        self.references[id]
            .get_or_init(|| {
                let pair = self.pool.registry.image_pairs[id];
                decode_image(&self.pool, &pair, self.num_levels() - 1, &DecodeParams::noiseless())
                    .map(|(img, _)| img)
                    .map_err(|e| e.to_string())
            })
            .as_ref()
            .map_err(|e| GatewayError::Internal(e.clone()))
    }

    /// Decodes image `id` up to `target`, sequencing only layers missing
    /// from its cache. Layers recovered before a failure stay cached.
    pub fn decode(&self, id: usize, target: usize, params: &DecodeParams) -> Result<Decoded, GatewayError> {
        check_params(params)?;
        let pair = self.pool.registry.image_pairs[id];
        let mut cache = self.caches[id].lock().map_err(|_| GatewayError::Internal("poisoned cache".into()))?;
        let mut decoder = ProgressiveDecoder::resume(&self.pool, &pair, std::mem::take(&mut *cache))?;
        let result = decoder.decode(target, params);
        *cache = decoder.into_cache();
        drop(cache);
        let (image, step) = result?;
        let reference = self.reference(id)?;
        let full = upsample_bicubic(&image, reference.width(), reference.height())?;
        let db = psnr(&full, reference)?;
        Ok(Decoded {
            image,
            step,
            psnr: db.is_finite().then_some(db),
        })
    }

    /// Image at `level` rebuilt from cached layers only.
    pub fn cached_image(&self, id: usize, level: usize) -> Result<Image, GatewayError> {
        let pair = self.pool.registry.image_pairs[id];
        let cache = self.caches[id].lock().map_err(|_| GatewayError::Internal("poisoned cache".into()))?;
        let decoder = ProgressiveDecoder::resume(&self.pool, &pair, cache.clone())?;
        decoder
            .cached_image(level)
            .ok_or(GatewayError::NotDecoded { image: id, level })
    }

    /// Highest level decoded so far for image `id`.
    pub fn decoded_level(&self, id: usize) -> Option<usize> {
        self.caches[id].lock().ok()?.layers.len().checked_sub(1)
    }

    /// Cost report of image `id` at the session's uniform coverage.
    pub fn cost_report(&self, id: usize) -> Result<CostReport, GatewayError> {
        let reference = self.reference(id)?;
        let pixels = (reference.width() * reference.height()) as u64;
        let levels = self.num_levels();
        let (inputs, ids) =
            CostInputs::from_manifest(&self.pool.manifest, levels, &vec![self.params.coverage; levels], pixels)?;
        let row = ids
            .iter()
            .position(|&i| i == id)
            .ok_or_else(|| GatewayError::UnknownImage(id.to_string()))?;
        Ok(CostReport::compute(&inputs, row)?)
    }
}
