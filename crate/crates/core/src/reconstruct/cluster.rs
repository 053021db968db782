//! Grouping trimmed reads by (image, layer, block index).

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::Serialize;

use super::trim::TrimmedRead;
use crate::primers::{PrimerRegistry, Role, Side};
use crate::transcoder::DataBlock;

/// `index` is `None` for the rescue pool of an (image, layer): reads whose
/// block failed to decode or failed its CRC.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct ClusterKey {
    pub image: usize,
    pub layer: usize,
    pub index: Option<u32>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Cluster {
    pub key: ClusterKey,
    pub members: Vec<Vec<u8>>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Clustering {
    /// Ordered by key; each rescue pool sorts before the keyed clusters of
    /// its (image, layer).
    pub clusters: Vec<Cluster>,
    /// Reads whose inner windows did not snap to one image pair.
    pub unidentified: usize,
}

impl Clustering {
    pub fn keyed(&self, image: usize, layer: usize) -> impl Iterator<Item = &Cluster> {
        self.clusters
            .iter()
            .filter(move |c| c.key.image == image && c.key.layer == layer && c.key.index.is_some())
    }

    pub fn rescue(&self, image: usize, layer: usize) -> Option<&Cluster> {
        self.clusters.iter().find(|c| {
            c.key
                == ClusterKey {
                    image,
                    layer,
                    index: None,
                }
        })
    }
}

/// Image id both inner windows snap to, if they agree.
pub fn snap_image(read: &TrimmedRead, registry: &PrimerRegistry, tau: usize) -> Option<usize> {
    let (l, r) = &read.observed_image_pair;
    let (li, _) = registry.nearest_in(Role::Image, Side::Left, l, tau).ok()?;
    let (ri, _) = registry.nearest_in(Role::Image, Side::Right, r, tau).ok()?;
    (li == ri).then_some(li)
}

fn key_for(read: &TrimmedRead, registry: &PrimerRegistry, tau: usize) -> Option<ClusterKey> {
    let image = snap_image(read, registry, tau)?;
    let prev = registry.image_pairs[image].left.last();
    let index = DataBlock::from_nucleotides(&read.inner_block, prev)
        .ok()
        .filter(DataBlock::verify)
        .map(|b| b.index);
    Some(ClusterKey {
        image,
        layer: read.layer_id,
        index,
    })
}

pub fn cluster_reads(trimmed: &[TrimmedRead], registry: &PrimerRegistry, tau: usize) -> Clustering {
    let keys: Vec<Option<ClusterKey>> = trimmed.par_iter().map(|t| key_for(t, registry, tau)).collect();
    let mut groups: BTreeMap<ClusterKey, Vec<Vec<u8>>> = BTreeMap::new();
    let mut unidentified = 0;
    for (t, key) in trimmed.iter().zip(keys) {
        match key {
            Some(k) => groups.entry(k).or_default().push(t.inner_block.clone()),
            None => unidentified += 1,
        }
    }
    Clustering {
        clusters: groups
            .into_iter()
            .map(|(key, members)| Cluster { key, members })
            .collect(),
        unidentified,
    }
}
