//! Primer generation and fuzzy matching.
//!
//! Every oligo carries two primer pairs: the outer pair names its resolution
//! layer, the inner pair names its image. Primers are 20-mers with GC content
//! in `[0.40, 0.60]`, no homopolymer longer than 3, and a Hamming distance of
//! at least 8 from every other registry primer and from its reverse
//! complement. With matching tolerance `tau = 3` a primer corrupted by up to
//! three edits therefore still snaps back to its original.

use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::{dna, edit};

pub const PRIMER_LEN: usize = 20;
pub const MIN_DISTANCE: usize = 8;
pub const MAX_HOMOPOLYMER: usize = 3;
pub const GC_MIN: f64 = 0.40;
pub const GC_MAX: f64 = 0.60;
pub const DEFAULT_TAU: usize = 3;
pub const MAX_DRAWS: usize = 1_000_000;
pub const MAX_PRIMERS: usize = 4096;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum PrimerError {
    #[error("cannot place {requested} primers: gave up after {draws} candidate draws")]
    Capacity { requested: usize, draws: usize },
    #[error("invalid registry request: {0}")]
    InvalidRequest(String),
    #[error("invalid primer {0:?}")]
    InvalidPrimer(String),
    #[error("no registry primer within distance {tau} (closest is {distance})")]
    Unidentified { tau: usize, distance: usize },
    #[error("malformed registry: {0}")]
    Malformed(String),
}

#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Primer([u8; PRIMER_LEN]);

impl Primer {
    pub fn new(seq: &[u8]) -> Result<Self, PrimerError> {
        if seq.len() != PRIMER_LEN || !dna::is_valid(seq) {
            return Err(PrimerError::InvalidPrimer(String::from_utf8_lossy(seq).into_owned()));
        }
        let mut a = [0u8; PRIMER_LEN];
        a.copy_from_slice(seq);
        Ok(Self(a))
    }

    pub fn as_bytes(&self) -> &[u8] {
        &self.0
    }

    pub fn last(&self) -> u8 {
        self.0[PRIMER_LEN - 1]
    }

    pub fn reverse_complement(&self) -> Primer {
        let rc = dna::reverse_complement(&self.0);
        Primer::new(&rc).expect("reverse complement of a primer is a primer")
    }

    /// Homopolymer and GC constraints (distance is a registry property).
    pub fn satisfies_composition(&self) -> bool {
        let gc = dna::gc_fraction(&self.0);
        dna::max_homopolymer(&self.0) <= MAX_HOMOPOLYMER && (GC_MIN..=GC_MAX).contains(&gc)
    }
}

impl fmt::Debug for Primer {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Primer({self})")
    }
}

impl fmt::Display for Primer {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(std::str::from_utf8(&self.0).expect("ACGT is ASCII"))
    }
}

impl Serialize for Primer {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Primer {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        Primer::new(s.as_bytes()).map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct PrimerPair {
    pub left: Primer,
    pub right: Primer,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    Layer,
    Image,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Left,
    Right,
}

/// Position of a primer in the registry. Ordering follows generation
/// order: layer pairs by level, then image pairs, left before right.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PrimerId {
    pub role: Role,
    pub index: usize,
    pub side: Side,
}

/// Edit distance from `window` to `primer`, if within `tau`.
pub fn match_primer(window: &[u8], primer: &Primer, tau: usize) -> Option<usize> {
    edit::levenshtein_within(window, primer.as_bytes(), tau)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PrimerRegistry {
    pub seed: u64,
    pub layer_pairs: Vec<PrimerPair>,
    pub image_pairs: Vec<PrimerPair>,
}

fn far_from_all(candidate: &Primer, accepted: &[Primer]) -> bool {
    accepted.iter().all(|p| {
        dna::hamming(candidate.as_bytes(), p.as_bytes()) >= MIN_DISTANCE
            && dna::hamming(candidate.as_bytes(), p.reverse_complement().as_bytes()) >= MIN_DISTANCE
    })
}

/// Draws `n_levels + n_images` primer pairs by seeded rejection sampling
/// (ChaCha8 stream seeded from `seed`).
pub fn generate_registry(n_levels: usize, n_images: usize, seed: u64) -> Result<PrimerRegistry, PrimerError> {
    if n_levels == 0 || n_images == 0 {
        return Err(PrimerError::InvalidRequest(
            "need at least one level and one image".into(),
        ));
    }
    let requested = 2 * (n_levels + n_images);
    if requested > MAX_PRIMERS {
        return Err(PrimerError::InvalidRequest(format!(
            "{requested} primers requested, at most {MAX_PRIMERS} supported"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut accepted: Vec<Primer> = Vec::with_capacity(requested);
    let mut draws = 0;
    while accepted.len() < requested {
        if draws == MAX_DRAWS {
            return Err(PrimerError::Capacity { requested, draws });
        }
        draws += 1;
        let mut seq = [0u8; PRIMER_LEN];
        for b in seq.iter_mut() {
            *b = dna::ALPHABET[rng.random_range(0..4)];
        }
        let candidate = Primer(seq);
        if candidate.satisfies_composition() && far_from_all(&candidate, &accepted) {
            accepted.push(candidate);
        }
    }
    let pairs: Vec<PrimerPair> = accepted
        .chunks_exact(2)
        .map(|c| PrimerPair {
            left: c[0],
            right: c[1],
        })
        .collect();
    Ok(PrimerRegistry {
        seed,
        layer_pairs: pairs[..n_levels].to_vec(),
        image_pairs: pairs[n_levels..].to_vec(),
    })
}

impl PrimerRegistry {
    pub fn num_levels(&self) -> usize {
        self.layer_pairs.len()
    }

    pub fn num_images(&self) -> usize {
        self.image_pairs.len()
    }

    pub fn pairs(&self, role: Role) -> &[PrimerPair] {
        match role {
            Role::Layer => &self.layer_pairs,
            Role::Image => &self.image_pairs,
        }
    }

    pub fn get(&self, id: PrimerId) -> Option<&Primer> {
        let pair = self.pairs(id.role).get(id.index)?;
        Some(match id.side {
            Side::Left => &pair.left,
            Side::Right => &pair.right,
        })
    }

    /// All primers with their ids, in id order.
    pub fn primers(&self) -> impl Iterator<Item = (PrimerId, &Primer)> {
        [Role::Layer, Role::Image].into_iter().flat_map(move |role| {
            self.pairs(role).iter().enumerate().flat_map(move |(index, pair)| {
                [(Side::Left, &pair.left), (Side::Right, &pair.right)]
                    .into_iter()
                    .map(move |(side, p)| (PrimerId { role, index, side }, p))
            })
        })
    }

    /// Index of the image pair equal to `pair`, if registered.
    pub fn image_id_of(&self, pair: &PrimerPair) -> Option<usize> {
        self.image_pairs.iter().position(|p| p == pair)
    }

    /// Closest registry primer to `observed` over all roles and sides.
    /// Ties go to the lowest id.
    pub fn nearest_registry_primer(&self, observed: &[u8], tau: usize) -> Result<(PrimerId, usize), PrimerError> {
        nearest_of(self.primers(), observed, tau)
    }

    /// Like [`Self::nearest_registry_primer`], restricted to one role and side.
    pub fn nearest_in(&self, role: Role, side: Side, observed: &[u8], tau: usize) -> Result<(usize, usize), PrimerError> {
        let candidates = self.primers().filter(|(id, _)| id.role == role && id.side == side);
        nearest_of(candidates, observed, tau).map(|(id, d)| (id.index, d))
    }

    /// Smallest Hamming distance between two distinct registry primers,
    /// including each primer against the others' reverse complements.
    pub fn min_separation(&self) -> usize {
        let all: Vec<&Primer> = self.primers().map(|(_, p)| p).collect();
        let mut best = usize::MAX;
        for (i, a) in all.iter().enumerate() {
            for b in &all[i + 1..] {
                best = best
                    .min(dna::hamming(a.as_bytes(), b.as_bytes()))
                    .min(dna::hamming(a.as_bytes(), b.reverse_complement().as_bytes()));
            }
        }
        best
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&RegistryDoc::from(self)).expect("registry serializes")
    }

    pub fn from_json(s: &str) -> Result<Self, PrimerError> {
        let doc: RegistryDoc = serde_json::from_str(s).map_err(|e| PrimerError::Malformed(e.to_string()))?;
        doc.try_into()
    }
}

fn nearest_of<'a>(
    candidates: impl Iterator<Item = (PrimerId, &'a Primer)>,
    observed: &[u8],
    tau: usize,
) -> Result<(PrimerId, usize), PrimerError> {
    let mut best: Option<(PrimerId, usize)> = None;
    for (id, p) in candidates {
        let d = edit::levenshtein(observed, p.as_bytes());
        if best.is_none_or(|(bid, bd)| (d, id) < (bd, bid)) {
            best = Some((id, d));
        }
    }
    match best {
        Some((id, d)) if d <= tau => Ok((id, d)),
        Some((_, d)) => Err(PrimerError::Unidentified { tau, distance: d }),
        None => Err(PrimerError::Unidentified {
            tau,
            distance: usize::MAX,
        }),
    }
}

#[derive(Serialize, Deserialize)]
struct LayerPairDoc {
    k: usize,
    left: Primer,
    right: Primer,
}

#[derive(Serialize, Deserialize)]
struct ImagePairDoc {
    i: usize,
    left: Primer,
    right: Primer,
}

/// JSON shape: `{seed, layerPairs: [{k, left, right}], imagePairs: [{i, left, right}]}`.
#[derive(Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub(crate) struct RegistryDoc {
    seed: u64,
    layer_pairs: Vec<LayerPairDoc>,
    image_pairs: Vec<ImagePairDoc>,
}

impl From<&PrimerRegistry> for RegistryDoc {
    fn from(r: &PrimerRegistry) -> Self {
        Self {
            seed: r.seed,
            layer_pairs: r
                .layer_pairs
                .iter()
                .enumerate()
                .map(|(k, p)| LayerPairDoc {
                    k,
                    left: p.left,
                    right: p.right,
                })
                .collect(),
            image_pairs: r
                .image_pairs
                .iter()
                .enumerate()
                .map(|(i, p)| ImagePairDoc {
                    i,
                    left: p.left,
                    right: p.right,
                })
                .collect(),
        }
    }
}

impl TryFrom<RegistryDoc> for PrimerRegistry {
    type Error = PrimerError;

    fn try_from(doc: RegistryDoc) -> Result<Self, PrimerError> {
        let mut layers = doc.layer_pairs;
        layers.sort_by_key(|p| p.k);
        let mut images = doc.image_pairs;
        images.sort_by_key(|p| p.i);
        for (n, p) in layers.iter().enumerate() {
            if p.k != n {
                return Err(PrimerError::Malformed(format!("layer pair {n} is missing")));
            }
        }
        for (n, p) in images.iter().enumerate() {
            if p.i != n {
                return Err(PrimerError::Malformed(format!("image pair {n} is missing")));
            }
        }
        Ok(PrimerRegistry {
            seed: doc.seed,
            layer_pairs: layers
                .into_iter()
                .map(|p| PrimerPair {
                    left: p.left,
                    right: p.right,
                })
                .collect(),
            image_pairs: images
                .into_iter()
                .map(|p| PrimerPair {
                    left: p.left,
                    right: p.right,
                })
                .collect(),
        })
    }
}

impl Serialize for PrimerRegistry {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        RegistryDoc::from(self).serialize(s)
    }
}

impl<'de> Deserialize<'de> for PrimerRegistry {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        RegistryDoc::deserialize(d)?
            .try_into()
            .map_err(serde::de::Error::custom)
    }
}
