//! Rebuilding one layer container from clustered reads.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use super::cluster::Clustering;
use super::consensus::{consensus, rescue};
use crate::codec::{CodecError, LayerContainer};
use crate::primers::PrimerRegistry;
use crate::transcoder::{DataBlock, PAYLOAD_BYTES};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum LayerFailure {
    #[error("no reads")]
    NoReads,
    #[error("block {index} could not be recovered")]
    MissingBlock { index: u32 },
    #[error("container: {0}")]
    Container(CodecError),
}

/// What happened to one (image, layer) during recovery.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct LayerStats {
    pub clusters_formed: usize,
    pub consensus_failures: usize,
    pub rescued_blocks: usize,
    pub blocks_recovered: usize,
    pub bytes_recovered: usize,
}

/// Indices below `limit` that are absent from `have`.
fn holes(have: &BTreeMap<u32, DataBlock>, limit: u32) -> Vec<u32> {
    (0..limit).filter(|i| !have.contains_key(i)).collect()
}

enum Assembly {
    Done(LayerContainer),
    Missing(Vec<u32>),
    Broken(CodecError),
}

fn assemble(have: &BTreeMap<u32, DataBlock>) -> Assembly {
    let end = have.keys().next_back().map_or(0, |&i| i + 1);
    let gaps = holes(have, end);
    if !gaps.is_empty() {
        return Assembly::Missing(gaps);
    }
    let stream: Vec<u8> = have.values().flat_map(|b| b.payload).collect();
    match LayerContainer::parse(&stream) {
        Ok((c, _)) => Assembly::Done(c),
        Err(CodecError::Truncated { needed, .. }) => {
            let blocks = needed.div_ceil(PAYLOAD_BYTES) as u32;
            Assembly::Missing((end..blocks.max(end + 1)).collect())
        }
        Err(e) => Assembly::Broken(e),
    }
}

/// Runs consensus on every keyed cluster of `(image, layer)`, rescues
/// missing indices from the rescue pool, and parses the container.
pub fn recover_layer(
    clustering: &Clustering,
    image: usize,
    layer: usize,
    registry: &PrimerRegistry,
) -> (Result<LayerContainer, LayerFailure>, LayerStats) {
    let keyed: Vec<_> = clustering.keyed(image, layer).collect();
    let rescue_pool = clustering.rescue(image, layer);
    let mut stats = LayerStats {
        clusters_formed: keyed.len() + usize::from(rescue_pool.is_some()),
        ..LayerStats::default()
    };
    if keyed.is_empty() && rescue_pool.is_none() {
        return (Err(LayerFailure::NoReads), stats);
    }
    let outcomes: Vec<_> = keyed.par_iter().map(|c| consensus(c, registry)).collect();
    let mut have = BTreeMap::new();
    for o in outcomes {
        match o {
            Ok(b) => {
                have.entry(b.index).or_insert(b);
            }
            Err(_) => stats.consensus_failures += 1,
        }
    }
    let result = loop {
        match assemble(&have) {
            Assembly::Done(c) => break Ok(c),
            Assembly::Broken(e) => break Err(LayerFailure::Container(e)),
            Assembly::Missing(gaps) => {
                let recovered = rescue_pool.map(|p| rescue(p, &gaps, registry)).unwrap_or_default();
                if recovered.is_empty() {
                    break Err(LayerFailure::MissingBlock { index: gaps[0] });
                }
                stats.rescued_blocks += recovered.len();
                for b in recovered {
                    have.entry(b.index).or_insert(b);
                }
            }
        }
    };
    stats.blocks_recovered = have.len();
    stats.bytes_recovered = have.len() * PAYLOAD_BYTES;
    (result, stats)
}
