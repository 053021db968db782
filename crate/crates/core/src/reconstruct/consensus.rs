//! Per-cluster consensus.

use std::collections::BTreeMap;

use thiserror::Error;

use super::cluster::{Cluster, ClusterKey};
use crate::dna::ALPHABET;
use crate::primers::PrimerRegistry;
use crate::transcoder::{header_from_nucleotides, DataBlock, BLOCK_NTS};

#[derive(Debug, Error, Clone, Copy, PartialEq, Eq)]
#[error("no CRC-valid block for image {} layer {} index {:?}", key.image, key.layer, key.index)]
pub struct ConsensusFailure {
    pub key: ClusterKey,
}

/// Plurality vote over the members of the most common length. Equally
/// common lengths go to the one closest to a full block, then the shorter.
/// Ties between bases go to the alphabetically first.
pub fn vote(members: &[Vec<u8>]) -> Option<Vec<u8>> {
    let mut by_len: BTreeMap<usize, usize> = BTreeMap::new();
    for m in members {
        *by_len.entry(m.len()).or_default() += 1;
    }
    let (&len, _) = by_len
        .iter()
        .max_by_key(|&(&l, &n)| (n, std::cmp::Reverse((l.abs_diff(BLOCK_NTS), l))))?;
    let modal: Vec<&Vec<u8>> = members.iter().filter(|m| m.len() == len).collect();
    let voted = (0..len)
        .map(|i| {
            let mut counts = [0usize; 4];
            for m in &modal {
                if let Some(slot) = ALPHABET.iter().position(|&b| b == m[i]) {
                    counts[slot] += 1;
                }
            }
            let mut best = 0;
            for s in 1..4 {
                if counts[s] > counts[best] {
                    best = s;
                }
            }
            ALPHABET[best]
        })
        .collect();
    Some(voted)
}

fn accept(nts: &[u8], prev: u8, key: &ClusterKey) -> Option<DataBlock> {
    let block = DataBlock::from_nucleotides(nts, prev).ok()?;
    (block.verify() && key.index.is_none_or(|i| i == block.index)).then_some(block)
}

/// Vote, decode and CRC-check; on failure fall back to the first member
/// that decodes to a valid block. A keyed cluster only accepts blocks
/// carrying its own index.
pub fn consensus(cluster: &Cluster, registry: &PrimerRegistry) -> Result<DataBlock, ConsensusFailure> {
    let fail = ConsensusFailure { key: cluster.key };
    let prev = registry
        .image_pairs
        .get(cluster.key.image)
        .ok_or(fail)?
        .left
        .last();
    if let Some(block) = vote(&cluster.members).and_then(|v| accept(&v, prev, &cluster.key)) {
        return Ok(block);
    }
    cluster
        .members
        .iter()
        .find_map(|m| accept(m, prev, &cluster.key))
        .ok_or(fail)
}

/// Second attempt for blocks missing from an (image, layer): members of the
/// rescue pool are grouped by the index their header decodes to, and each
/// wanted index gets its own consensus.
pub fn rescue(pool: &Cluster, wanted: &[u32], registry: &PrimerRegistry) -> Vec<DataBlock> {
    let Some(pair) = registry.image_pairs.get(pool.key.image) else {
        return Vec::new();
    };
    let prev = pair.left.last();
    let mut groups: BTreeMap<u32, Vec<Vec<u8>>> = BTreeMap::new();
    for m in &pool.members {
        if let Ok((index, _)) = header_from_nucleotides(m, prev) {
            if wanted.contains(&index) {
                groups.entry(index).or_default().push(m.clone());
            }
        }
    }
    groups
        .into_iter()
        .filter_map(|(index, members)| {
            let c = Cluster {
                key: ClusterKey {
                    index: Some(index),
                    ..pool.key
                },
                members,
            };
            consensus(&c, registry).ok()
        })
        .collect()
}
