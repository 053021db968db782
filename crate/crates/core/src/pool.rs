//! Oligo assembly, the multi-image pool and simulated PCR selection.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::codec::{encode_layers, CodecError, Image};
use crate::primers::{match_primer, PrimerPair, PrimerRegistry, PRIMER_LEN};
use crate::transcoder::{blocks_from_stream, DataBlock, BLOCK_NTS};
use crate::dna;

pub const OLIGO_LEN: usize = 4 * PRIMER_LEN + BLOCK_NTS;
pub const BLOCK_START: usize = 2 * PRIMER_LEN;
pub const BLOCK_END: usize = BLOCK_START + BLOCK_NTS;

#[derive(Debug, Error)]
pub enum PoolError {
    #[error(transparent)]
    Codec(#[from] CodecError),
    #[error("image {0} has no primer pair in the registry")]
    UnknownImage(usize),
    #[error("duplicate image id {0}")]
    DuplicateImage(usize),
    #[error("registry has {available} layer pairs, {needed} needed")]
    NotEnoughLayers { needed: usize, available: usize },
    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },
    #[error("inconsistent pool: {0}")]
    Inconsistent(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
}

/// Ground-truth origin of an oligo. Used by tests and the FASTA headers,
/// never by reconstruction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Provenance {
    pub image: usize,
    pub layer: usize,
    pub block: u32,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Oligo {
    pub sequence: Vec<u8>,
    pub provenance: Provenance,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ManifestEntry {
    pub image: usize,
    pub layer: usize,
    pub oligos: usize,
    pub layer_bytes: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct CodecParams {
    pub num_levels: usize,
    pub q: u16,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OligoPool {
    pub oligos: Vec<Oligo>,
    pub registry: PrimerRegistry,
    /// Sorted by (image, layer).
    pub manifest: Vec<ManifestEntry>,
    pub codec: CodecParams,
}

/// Concatenates the five oligo fields. The block's rotating code continues
/// from the last base of the image-left primer.
pub fn assemble_oligo(layer_pair: &PrimerPair, image_pair: &PrimerPair, block: &DataBlock) -> Vec<u8> {
    let mut seq = Vec::with_capacity(OLIGO_LEN);
    seq.extend_from_slice(layer_pair.left.as_bytes());
    seq.extend_from_slice(image_pair.left.as_bytes());
    seq.extend(block.to_nucleotides(image_pair.left.last()));
    seq.extend_from_slice(image_pair.right.as_bytes());
    seq.extend_from_slice(layer_pair.right.as_bytes());
    seq
}

/// Fields of an error-free oligo, cut at their nominal offsets:
/// (layer left, image left, block, image right, layer right).
pub fn split_fields(seq: &[u8]) -> Option<[&[u8]; 5]> {
    if seq.len() != OLIGO_LEN {
        return None;
    }
    Some([
        &seq[..PRIMER_LEN],
        &seq[PRIMER_LEN..BLOCK_START],
        &seq[BLOCK_START..BLOCK_END],
        &seq[BLOCK_END..BLOCK_END + PRIMER_LEN],
        &seq[BLOCK_END + PRIMER_LEN..],
    ])
}

/// Encodes every image, cuts each layer into blocks and wraps the blocks
/// into oligos. Oligos are ordered by image, layer and block index.
pub fn build_pool(
    images: &[(usize, Image)],
    num_levels: usize,
    q: u16,
    registry: &PrimerRegistry,
) -> Result<OligoPool, PoolError> {
    if registry.num_levels() < num_levels {
        return Err(PoolError::NotEnoughLayers {
            needed: num_levels,
            available: registry.num_levels(),
        });
    }
    let mut seen = std::collections::BTreeSet::new();
    for (id, _) in images {
        if *id >= registry.num_images() {
            return Err(PoolError::UnknownImage(*id));
        }
        if !seen.insert(*id) {
            return Err(PoolError::DuplicateImage(*id));
        }
    }

    let per_image: Vec<(Vec<Oligo>, Vec<ManifestEntry>)> = images
        .par_iter()
        .map(|(id, img)| -> Result<_, PoolError> {
            let stream = encode_layers(img, num_levels, q)?;
            let image_pair = &registry.image_pairs[*id];
            let mut oligos = Vec::new();
            let mut manifest = Vec::new();
            for (layer, bytes) in stream.layer_bytes().iter().enumerate() {
                let layer_pair = &registry.layer_pairs[layer];
                let blocks = blocks_from_stream(bytes);
                manifest.push(ManifestEntry {
                    image: *id,
                    layer,
                    oligos: blocks.len(),
                    layer_bytes: bytes.len(),
                });
                oligos.extend(blocks.iter().map(|b| Oligo {
                    sequence: assemble_oligo(layer_pair, image_pair, b),
                    provenance: Provenance {
                        image: *id,
                        layer,
                        block: b.index,
                    },
                }));
            }
            Ok((oligos, manifest))
        })
        .collect::<Result<_, _>>()?;

    let mut oligos = Vec::new();
    let mut manifest = Vec::new();
    for (o, m) in per_image {
        oligos.extend(o);
        manifest.extend(m);
    }
    oligos.sort_by_key(|o| o.provenance);
    manifest.sort_by_key(|m| (m.image, m.layer));
    Ok(OligoPool {
        oligos,
        registry: registry.clone(),
        manifest,
        codec: CodecParams { num_levels, q },
    })
}

fn window_matches(window: &[u8], pair_side: &crate::primers::Primer, tau: usize) -> bool {
    if tau == 0 {
        window == pair_side.as_bytes()
    } else {
        match_primer(window, pair_side, tau).is_some()
    }
}

fn outer_matches(seq: &[u8], pair: &PrimerPair, tau: usize) -> bool {
    seq.len() >= 2 * PRIMER_LEN
        && window_matches(&seq[..PRIMER_LEN], &pair.left, tau)
        && window_matches(&seq[seq.len() - PRIMER_LEN..], &pair.right, tau)
}

fn inner_matches(seq: &[u8], pair: &PrimerPair, tau: usize) -> bool {
    seq.len() >= 4 * PRIMER_LEN
        && window_matches(&seq[PRIMER_LEN..2 * PRIMER_LEN], &pair.left, tau)
        && window_matches(
            &seq[seq.len() - 2 * PRIMER_LEN..seq.len() - PRIMER_LEN],
            &pair.right,
            tau,
        )
}

fn amplify<'a>(selected: impl Iterator<Item = &'a Oligo>, amplification: usize) -> Vec<Oligo> {
    selected
        .flat_map(|o| std::iter::repeat_n(o, amplification))
        .cloned()
        .collect()
}

/// Keeps every oligo whose outer or inner primer windows match one of
/// `pairs` within edit distance `tau`, each copied `amplification` times.
pub fn pcr_select(oligos: &[Oligo], pairs: &[PrimerPair], tau: usize, amplification: usize) -> Vec<Oligo> {
    let hit = |o: &&Oligo| {
        pairs
            .iter()
            .any(|p| outer_matches(&o.sequence, p, tau) || inner_matches(&o.sequence, p, tau))
    };
    amplify(oligos.iter().filter(hit), amplification)
}

/// Keeps oligos carrying both `layer_pair` (outer) and `image_pair` (inner).
pub fn pcr_select_both(
    oligos: &[Oligo],
    layer_pair: &PrimerPair,
    image_pair: &PrimerPair,
    tau: usize,
    amplification: usize,
) -> Vec<Oligo> {
    let hit = |o: &&Oligo| outer_matches(&o.sequence, layer_pair, tau) && inner_matches(&o.sequence, image_pair, tau);
    amplify(oligos.iter().filter(hit), amplification)
}

impl OligoPool {
    pub fn len(&self) -> usize {
        self.oligos.len()
    }

    pub fn is_empty(&self) -> bool {
        self.oligos.is_empty()
    }

    pub fn select(&self, pairs: &[PrimerPair], tau: usize, amplification: usize) -> Vec<Oligo> {
        pcr_select(&self.oligos, pairs, tau, amplification)
    }

    pub fn select_layer_of_image(&self, layer: usize, image_pair: &PrimerPair, tau: usize) -> Vec<Oligo> {
        pcr_select_both(&self.oligos, &self.registry.layer_pairs[layer], image_pair, tau, 1)
    }

    /// Image ids present in the manifest, ascending.
    pub fn image_ids(&self) -> Vec<usize> {
        let mut ids: Vec<usize> = self.manifest.iter().map(|m| m.image).collect();
        ids.dedup();
        ids
    }

    pub fn manifest_entry(&self, image: usize, layer: usize) -> Option<&ManifestEntry> {
        self.manifest.iter().find(|m| m.image == image && m.layer == layer)
    }

    /// Oligo count per layer summed over images.
    pub fn layer_totals(&self) -> Vec<usize> {
        let mut totals = vec![0; self.codec.num_levels];
        for m in &self.manifest {
            totals[m.layer] += m.oligos;
        }
        totals
    }

    /// Checks that the manifest agrees with the oligos actually present.
    pub fn check_manifest(&self) -> Result<(), PoolError> {
        let mut counts: BTreeMap<(usize, usize), usize> = BTreeMap::new();
        for o in &self.oligos {
            *counts.entry((o.provenance.image, o.provenance.layer)).or_default() += 1;
        }
        for m in &self.manifest {
            let actual = counts.remove(&(m.image, m.layer)).unwrap_or(0);
            if actual != m.oligos {
                return Err(PoolError::Inconsistent(format!(
                    "image {} layer {}: manifest says {} oligos, pool holds {actual}",
                    m.image, m.layer, m.oligos
                )));
            }
        }
        if let Some(((image, layer), n)) = counts.into_iter().next() {
            return Err(PoolError::Inconsistent(format!(
                "{n} oligos of image {image} layer {layer} are missing from the manifest"
            )));
        }
        Ok(())
    }
}

/// `pool.fasta` -> `pool.meta.json`.
pub fn sidecar_path(path: &Path) -> PathBuf {
    path.with_extension("meta.json")
}

#[derive(Serialize, Deserialize)]
struct PoolMeta {
    registry: PrimerRegistry,
    manifest: Vec<ManifestEntry>,
    codec: CodecParams,
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> PoolError + '_ {
    move |source| PoolError::Io {
        path: path.to_path_buf(),
        source,
    }
}

pub fn pool_to_fasta(pool: &OligoPool) -> String {
    let mut out = String::with_capacity(pool.oligos.len() * (OLIGO_LEN + 20));
    for o in &pool.oligos {
        let p = o.provenance;
        let _ = writeln!(out, ">img{}_L{}_b{:05}", p.image, p.layer, p.block);
        out.push_str(std::str::from_utf8(&o.sequence).expect("ACGT"));
        out.push('\n');
    }
    out
}

/// Parses a provenance tag such as `img7_L2_b00013`.
pub fn parse_tag(tag: &str) -> Option<Provenance> {
    let rest = tag.strip_prefix("img")?;
    let (image, rest) = rest.split_once("_L")?;
    let (layer, block) = rest.split_once("_b")?;
    let digits = |s: &str| !s.is_empty() && s.bytes().all(|b| b.is_ascii_digit());
    if !digits(image) || !digits(layer) || !digits(block) {
        return None;
    }
    Some(Provenance {
        image: image.parse().ok()?,
        layer: layer.parse().ok()?,
        block: block.parse().ok()?,
    })
}

fn parse_fasta(text: &str, path: &Path) -> Result<Vec<Oligo>, PoolError> {
    let err = |line: usize, message: String| PoolError::Parse {
        path: path.to_path_buf(),
        line,
        message,
    };
    let mut oligos = Vec::new();
    let mut pending: Option<(usize, Provenance)> = None;
    for (n, raw) in text.lines().enumerate() {
        let line_no = n + 1;
        let line = raw.trim_end_matches('\r');
        if line.is_empty() {
            continue;
        }
        if let Some(tag) = line.strip_prefix('>') {
            if let Some((at, _)) = pending {
                return Err(err(at, "record has no sequence".into()));
            }
            let prov = parse_tag(tag.trim()).ok_or_else(|| err(line_no, format!("bad record header {tag:?}")))?;
            pending = Some((line_no, prov));
        } else {
            let (_, provenance) = pending
                .take()
                .ok_or_else(|| err(line_no, "sequence line without a header".into()))?;
            let seq = line.as_bytes();
            if !dna::is_valid(seq) {
                return Err(err(line_no, "sequence holds a non-ACGT symbol".into()));
            }
            if seq.len() != OLIGO_LEN {
                return Err(err(line_no, format!("oligo has {} nt, expected {OLIGO_LEN}", seq.len())));
            }
            oligos.push(Oligo {
                sequence: seq.to_vec(),
                provenance,
            });
        }
    }
    if let Some((at, _)) = pending {
        return Err(err(at, "record has no sequence".into()));
    }
    Ok(oligos)
}

/// Writes the FASTA file at `path` and its JSON sidecar next to it.
pub fn save_pool(pool: &OligoPool, path: &Path) -> Result<(), PoolError> {
    std::fs::write(path, pool_to_fasta(pool)).map_err(io_err(path))?;
    let meta = PoolMeta {
        registry: pool.registry.clone(),
        manifest: pool.manifest.clone(),
        codec: pool.codec,
    };
    let side = sidecar_path(path);
    let json = serde_json::to_string_pretty(&meta).expect("metadata serializes");
    std::fs::write(&side, json).map_err(io_err(&side))
}

pub fn load_pool(path: &Path) -> Result<OligoPool, PoolError> {
    let text = std::fs::read_to_string(path).map_err(io_err(path))?;
    let oligos = parse_fasta(&text, path)?;
    let side = sidecar_path(path);
    let json = std::fs::read_to_string(&side).map_err(io_err(&side))?;
    let meta: PoolMeta = serde_json::from_str(&json).map_err(|e| PoolError::Parse {
        path: side.clone(),
        line: e.line(),
        message: e.to_string(),
    })?;
    let mut manifest = meta.manifest;
    manifest.sort_by_key(|m| (m.image, m.layer));
    let pool = OligoPool {
        oligos,
        registry: meta.registry,
        manifest,
        codec: meta.codec,
    };
    if pool.manifest.iter().any(|m| m.layer >= pool.codec.num_levels || m.image >= pool.registry.num_images()) {
        return Err(PoolError::Inconsistent("manifest refers to unknown images or layers".into()));
    }
    if pool.registry.num_levels() < pool.codec.num_levels {
        return Err(PoolError::NotEnoughLayers {
            needed: pool.codec.num_levels,
            available: pool.registry.num_levels(),
        });
    }
    pool.check_manifest()?;
    Ok(pool)
}
