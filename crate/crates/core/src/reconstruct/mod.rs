//! Decoding: primer trimming, clustering, consensus and progressive image
//! reconstruction.
//!
//! Everything here works from sequenced reads and the primer registry. The
//! [`decoder`] drives the physical steps (PCR selection and sequencing) on
//! an [`OligoPool`](crate::pool::OligoPool) but hands only the resulting
//! [`ReadSet`] to the reconstruction functions.

pub mod cluster;
pub mod consensus;
pub mod decoder;
pub mod layer;
pub mod trim;

use rayon::prelude::*;
use serde::Serialize;

use crate::channel::ReadSet;
use crate::codec::{decode_layers, Image};
use crate::primers::{PrimerPair, PrimerRegistry};

pub use cluster::{cluster_reads, Cluster, ClusterKey, Clustering};
pub use consensus::{consensus, vote, ConsensusFailure};
pub use decoder::{
    decode_image, DecodeError, DecodeParams, DecodeStep, DecoderCache, LayerCost, LayerTrace, ProgressiveDecoder,
};
pub use layer::{recover_layer, LayerFailure, LayerStats};
pub use trim::{trim_and_identify, RejectReason, TrimmedRead};

/// Trims every read; returns the accepted reads in input order and the
/// number rejected.
pub fn trim_reads(reads: &ReadSet, registry: &PrimerRegistry, tau: usize) -> (Vec<TrimmedRead>, usize) {
    let results: Vec<_> = reads
        .reads
        .par_iter()
        .map(|r| trim_and_identify(r, registry, tau))
        .collect();
    let total = results.len();
    let kept: Vec<TrimmedRead> = results.into_iter().filter_map(Result::ok).collect();
    let rejected = total - kept.len();
    (kept, rejected)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Thumbnail {
    pub image_id: usize,
    /// The decoded thumbnail and the image primer pair its reads snapped to.
    pub result: Result<(Image, PrimerPair), LayerFailure>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct ThumbnailSummary {
    pub reads_seen: usize,
    pub rejected_reads: usize,
    pub unidentified_reads: usize,
}

/// Decodes the thumbnail layer of every registry image from `reads`.
/// Images whose layer cannot be rebuilt are reported, not dropped.
pub fn extract_thumbnails(reads: &ReadSet, registry: &PrimerRegistry, tau: usize) -> (Vec<Thumbnail>, ThumbnailSummary) {
    let (trimmed, rejected) = trim_reads(reads, registry, tau);
    let thumbs: Vec<TrimmedRead> = trimmed.into_iter().filter(|t| t.layer_id == 0).collect();
    let clustering = cluster_reads(&thumbs, registry, tau);
    let out = (0..registry.num_images())
        .map(|image_id| {
            let (container, _) = recover_layer(&clustering, image_id, 0, registry);
            let result = container.and_then(|c| {
                decode_layers(&[c], 0)
                    .map(|img| (img, registry.image_pairs[image_id]))
                    .map_err(LayerFailure::Container)
            });
            Thumbnail { image_id, result }
        })
        .collect();
    let summary = ThumbnailSummary {
        reads_seen: reads.len(),
        rejected_reads: rejected,
        unidentified_reads: clustering.unidentified,
    };
    (out, summary)
}
