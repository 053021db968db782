//! Progressive decoding of one image, layer by layer.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::layer::{recover_layer, LayerFailure};
use super::{cluster_reads, extract_thumbnails, trim_reads, Thumbnail, ThumbnailSummary};
use crate::channel::{sequence, ChannelError, ErrorRates, ReadSet, SamplingMode};
use crate::codec::{decode_layers, CodecError, Image, LayerContainer};
use crate::costs::{CostError, CostInputs, CostReport};
use crate::pool::{OligoPool, OLIGO_LEN};
use crate::primers::{PrimerPair, PrimerRegistry, DEFAULT_TAU};

#[derive(Debug, Error)]
pub enum DecodeError {
    #[error("primer pair is not an image pair of this pool")]
    UnknownPair,
    #[error("level {requested} requested, pool has levels 0..{levels}")]
    Level { requested: usize, levels: usize },
    #[error(transparent)]
    Channel(#[from] ChannelError),
    #[error("layer {layer} failed: {failure}")]
    Layer {
        layer: usize,
        failure: LayerFailure,
        /// Highest level still decodable from the layers recovered so far.
        partial: Option<Box<(usize, Image)>>,
        /// Layers sequenced by the failing request, the failed one last.
        trace: Vec<LayerTrace>,
    },
    #[error(transparent)]
    Codec(#[from] CodecError),
    #[error(transparent)]
    Cost(#[from] CostError),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", default)]
pub struct DecodeParams {
    pub coverage: f64,
    pub rates: ErrorRates,
    pub seed: u64,
    pub mode: SamplingMode,
    pub tau: usize,
}

impl Default for DecodeParams {
    fn default() -> Self {
        Self {
            coverage: 5.0,
            rates: ErrorRates::default(),
            seed: 0,
            mode: SamplingMode::Poisson,
            tau: DEFAULT_TAU,
        }
    }
}

impl DecodeParams {
    /// Exact coverage 1 through an error-free channel.
    pub fn noiseless() -> Self {
        Self {
            coverage: 1.0,
            rates: ErrorRates::ZERO,
            mode: SamplingMode::Exact,
            ..Self::default()
        }
    }
}

/// Sequencing seed of layer `k`, so that each layer sees the same reads
/// whether it is decoded alone or as part of a larger request.
pub fn layer_seed(seed: u64, layer: usize) -> u64 {
    let mut z = seed ^ (layer as u64 + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Sequencing spent on one layer.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct LayerCost {
    pub layer: usize,
    pub oligos_selected: usize,
    pub reads: usize,
    /// Reads times the nominal oligo length.
    pub nucleotides: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct LayerTrace {
    pub layer: usize,
    pub oligos_selected: usize,
    pub reads_seen: usize,
    pub rejected_reads: usize,
    pub unidentified_reads: usize,
    pub clusters_formed: usize,
    pub consensus_failures: usize,
    pub rescued_blocks: usize,
    pub blocks_recovered: usize,
    pub blocks_expected: usize,
    pub bytes_recovered: usize,
    pub recovered: bool,
}

/// Selects, sequences and rebuilds layer `layer` of image `image_id`.
pub fn sequence_and_recover_layer(
    pool: &OligoPool,
    image_id: usize,
    layer: usize,
    params: &DecodeParams,
) -> Result<(Result<LayerContainer, LayerFailure>, LayerCost, LayerTrace), ChannelError> {
    let pair = pool.registry.image_pairs[image_id];
    let selection = pool.select_layer_of_image(layer, &pair, params.tau);
    let reads = sequence(
        &selection,
        params.coverage,
        &params.rates,
        layer_seed(params.seed, layer),
        params.mode,
    )?;
    let (container, stats, rejected, unidentified) = recover_from_reads(&reads, &pool.registry, image_id, layer, params.tau);
    let cost = LayerCost {
        layer,
        oligos_selected: selection.len(),
        reads: reads.len(),
        nucleotides: (reads.len() * OLIGO_LEN) as u64,
    };
    let trace = LayerTrace {
        layer,
        oligos_selected: selection.len(),
        reads_seen: reads.len(),
        rejected_reads: rejected,
        unidentified_reads: unidentified,
        clusters_formed: stats.clusters_formed,
        consensus_failures: stats.consensus_failures,
        rescued_blocks: stats.rescued_blocks,
        blocks_recovered: stats.blocks_recovered,
        blocks_expected: pool.manifest_entry(image_id, layer).map_or(0, |m| m.oligos),
        bytes_recovered: stats.bytes_recovered,
        recovered: container.is_ok(),
    };
    Ok((container, cost, trace))
}

/// Reconstruction proper: sees only the reads and the registry.
fn recover_from_reads(
    reads: &ReadSet,
    registry: &PrimerRegistry,
    image_id: usize,
    layer: usize,
    tau: usize,
) -> (Result<LayerContainer, LayerFailure>, super::LayerStats, usize, usize) {
    let (trimmed, rejected) = trim_reads(reads, registry, tau);
    let clustering = cluster_reads(&trimmed, registry, tau);
    let (container, stats) = recover_layer(&clustering, image_id, layer, registry);
    (container, stats, rejected, clustering.unidentified)
}

/// Result of one decode request.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct DecodeStep {
    pub image_id: usize,
    pub level: usize,
    pub width: usize,
    pub height: usize,
    /// Layers sequenced by this request only.
    pub layer_costs: Vec<LayerCost>,
    /// All nucleotides sequenced for this image so far.
    pub cumulative_nucleotides: u64,
    /// `cumulative_nucleotides` per pixel of the full-size image.
    pub cumulative_read_cost: f64,
    pub cost_report: CostReport,
    pub trace: Vec<LayerTrace>,
}

/// Recovered layers and sequencing spent on one image, detached from the
/// pool so it can outlive a decoder.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct DecoderCache {
    pub layers: Vec<LayerContainer>,
    pub spent: Vec<LayerCost>,
}

/// Keeps recovered layers of one image between requests so that a deeper
/// request only sequences the layers it is missing.
#[derive(Debug, Clone)]
pub struct ProgressiveDecoder<'a> {
    pool: &'a OligoPool,
    image_id: usize,
    layers: Vec<LayerContainer>,
    spent: Vec<LayerCost>,
}

impl<'a> ProgressiveDecoder<'a> {
    pub fn new(pool: &'a OligoPool, image_pair: &PrimerPair) -> Result<Self, DecodeError> {
        Self::resume(pool, image_pair, DecoderCache::default())
    }

    /// Continues from layers recovered earlier for the same image.
    pub fn resume(pool: &'a OligoPool, image_pair: &PrimerPair, cache: DecoderCache) -> Result<Self, DecodeError> {
        let image_id = pool.registry.image_id_of(image_pair).ok_or(DecodeError::UnknownPair)?;
        Ok(Self {
            pool,
            image_id,
            layers: cache.layers,
            spent: cache.spent,
        })
    }

    pub fn into_cache(self) -> DecoderCache {
        DecoderCache {
            layers: self.layers,
            spent: self.spent,
        }
    }

    /// Image at `level` from cached layers only, without sequencing.
    pub fn cached_image(&self, level: usize) -> Option<Image> {
        if level >= self.layers.len() {
            return None;
        }
        decode_layers(&self.layers, level).ok()
    }

    pub fn image_id(&self) -> usize {
        self.image_id
    }

    /// Highest level decodable without further sequencing.
    pub fn decoded_level(&self) -> Option<usize> {
        self.layers.len().checked_sub(1)
    }

    /// Every sequencing run so far, failed layers included.
    pub fn spent(&self) -> &[LayerCost] {
        &self.spent
    }

    pub fn cumulative_nucleotides(&self) -> u64 {
        self.spent.iter().map(|c| c.nucleotides).sum()
    }

    fn partial(&self) -> Option<Box<(usize, Image)>> {
        let level = self.decoded_level()?;
        decode_layers(&self.layers, level).ok().map(|img| Box::new((level, img)))
    }

    /// Decodes up to `target`, sequencing layers above the cached ones.
    pub fn decode(&mut self, target: usize, params: &DecodeParams) -> Result<(Image, DecodeStep), DecodeError> {
        let levels = self.pool.codec.num_levels;
        if target >= levels {
            return Err(DecodeError::Level {
                requested: target,
                levels,
            });
        }
        let mut layer_costs = Vec::new();
        let mut trace = Vec::new();
        for k in self.layers.len()..=target {
            let (container, cost, t) = sequence_and_recover_layer(self.pool, self.image_id, k, params)?;
            self.spent.push(cost);
            layer_costs.push(cost);
            trace.push(t);
            match container {
                Ok(c) => self.layers.push(c),
                Err(failure) => {
                    return Err(DecodeError::Layer {
                        layer: k,
                        failure,
                        partial: self.partial(),
                        trace,
                    })
                }
            }
        }
        let image = decode_layers(&self.layers, target)?;
        let base = &self.layers[0];
        let pixels = u64::from(base.width) * u64::from(base.height);
        let (inputs, ids) = CostInputs::from_manifest(&self.pool.manifest, levels, &vec![params.coverage; levels], pixels)?;
        let row = ids.iter().position(|&i| i == self.image_id).ok_or(DecodeError::UnknownPair)?;
        let cost_report = CostReport::compute(&inputs, row)?;
        let cumulative_nucleotides = self.cumulative_nucleotides();
        let step = DecodeStep {
            image_id: self.image_id,
            level: target,
            width: image.width(),
            height: image.height(),
            layer_costs,
            cumulative_nucleotides,
            cumulative_read_cost: cumulative_nucleotides as f64 / pixels as f64,
            cost_report,
            trace,
        };
        Ok((image, step))
    }
}

/// One-shot progressive decode of the image tagged by `image_pair`.
pub fn decode_image(
    pool: &OligoPool,
    image_pair: &PrimerPair,
    target: usize,
    params: &DecodeParams,
) -> Result<(Image, DecodeStep), DecodeError> {
    ProgressiveDecoder::new(pool, image_pair)?.decode(target, params)
}

/// PCR-selects the thumbnail layer of the whole pool, sequences it and
/// extracts every thumbnail.
pub fn pool_thumbnails(pool: &OligoPool, params: &DecodeParams) -> Result<(Vec<Thumbnail>, ThumbnailSummary), ChannelError> {
    let selection = pool.select(&pool.registry.layer_pairs[..1], params.tau, 1);
    let reads = sequence(
        &selection,
        params.coverage,
        &params.rates,
        layer_seed(params.seed, 0),
        params.mode,
    )?;
    Ok(extract_thumbnails(&reads, &pool.registry, params.tau))
}
