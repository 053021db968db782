//! Primer trimming and layer identification.

use thiserror::Error;

use crate::edit::{prefix_distances, suffix_distances};
use crate::primers::{Primer, PrimerRegistry, Role, Side, PRIMER_LEN};
use crate::transcoder::BLOCK_NTS;

/// A read with its four primer windows located.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TrimmedRead {
    pub layer_id: usize,
    /// Inner (image) primer windows as read, left then right.
    pub observed_image_pair: (Vec<u8>, Vec<u8>),
    pub inner_block: Vec<u8>,
}

#[derive(Debug, Error, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum RejectReason {
    #[error("read too short to hold four primers")]
    TooShort,
    #[error("no layer primer at the left end")]
    NoLeftLayerPrimer,
    #[error("no layer primer at the right end")]
    NoRightLayerPrimer,
    #[error("left end names layer {left}, right end names layer {right}")]
    LayerDisagreement { left: usize, right: usize },
}

/// Best primer of a candidate set against one read end: `(id, distance)`
/// and that primer's distance for every window length.
fn best_end(
    candidates: &[(usize, &Primer)],
    read: &[u8],
    tau: usize,
    from_left: bool,
) -> Option<(usize, usize, Vec<usize>)> {
    let min_len = PRIMER_LEN.saturating_sub(tau);
    let max_len = PRIMER_LEN + tau;
    let mut best: Option<(usize, usize, Vec<usize>)> = None;
    for &(id, p) in candidates {
        let d = if from_left {
            prefix_distances(p.as_bytes(), read, max_len)
        } else {
            suffix_distances(p.as_bytes(), read, max_len)
        };
        let Some(m) = d.iter().skip(min_len).min().copied() else {
            continue;
        };
        if best.as_ref().is_none_or(|(_, bd, _)| m < *bd) {
            best = Some((id, m, d));
        }
    }
    best
}

fn side_candidates(registry: &PrimerRegistry, role: Role, side: Side) -> Vec<(usize, &Primer)> {
    registry
        .pairs(role)
        .iter()
        .enumerate()
        .map(|(i, p)| {
            (
                i,
                match side {
                    Side::Left => &p.left,
                    Side::Right => &p.right,
                },
            )
        })
        .collect()
}

/// Length-indexed distance row, or `usize::MAX / 4` beyond its end.
fn at(row: &[usize], len: usize) -> usize {
    row.get(len).copied().unwrap_or(usize::MAX / 4)
}

/// Locates the layer primers at both read ends, then places the four
/// window boundaries jointly so that the summed primer distance is minimal,
/// preferring a block of nominal length and windows of nominal length.
pub fn trim_and_identify(read: &[u8], registry: &PrimerRegistry, tau: usize) -> Result<TrimmedRead, RejectReason> {
    let min_len = PRIMER_LEN.saturating_sub(tau);
    let max_len = PRIMER_LEN + tau;
    if read.len() < 4 * min_len {
        return Err(RejectReason::TooShort);
    }
    let layer_left = side_candidates(registry, Role::Layer, Side::Left);
    let layer_right = side_candidates(registry, Role::Layer, Side::Right);
    let (kl, dl, outer_l) = best_end(&layer_left, read, tau, true).ok_or(RejectReason::TooShort)?;
    if dl > tau {
        return Err(RejectReason::NoLeftLayerPrimer);
    }
    let (kr, dr, outer_r) = best_end(&layer_right, read, tau, false).ok_or(RejectReason::TooShort)?;
    if dr > tau {
        return Err(RejectReason::NoRightLayerPrimer);
    }
    if kl != kr {
        return Err(RejectReason::LayerDisagreement { left: kl, right: kr });
    }

    // Pick the image primer closest to the inner windows at the most
    // likely outer cut, then align all four cuts against the chosen primers.
    let lo0 = (min_len..=max_len.min(read.len())).min_by_key(|&l| (outer_l[l], l.abs_diff(PRIMER_LEN))).unwrap();
    let ro0 = (min_len..=max_len.min(read.len())).min_by_key(|&l| (outer_r[l], l.abs_diff(PRIMER_LEN))).unwrap();
    if lo0 + ro0 > read.len() {
        return Err(RejectReason::TooShort);
    }
    let image_left = side_candidates(registry, Role::Image, Side::Left);
    let image_right = side_candidates(registry, Role::Image, Side::Right);
    let (il_id, _, _) = best_end(&image_left, &read[lo0..], tau, true).ok_or(RejectReason::TooShort)?;
    let (ir_id, _, _) = best_end(&image_right, &read[..read.len() - ro0], tau, false).ok_or(RejectReason::TooShort)?;
    let p_il = image_left[il_id].1;
    let p_ir = image_right[ir_id].1;

    let outer_range: Vec<usize> = (min_len..=max_len).filter(|&l| l < read.len()).collect();
    let inner_l: Vec<Vec<usize>> = outer_range
        .iter()
        .map(|&lo| prefix_distances(p_il.as_bytes(), &read[lo..], max_len))
        .collect();
    let inner_r: Vec<Vec<usize>> = outer_range
        .iter()
        .map(|&ro| suffix_distances(p_ir.as_bytes(), &read[..read.len() - ro], max_len))
        .collect();

    let mut best: Option<((usize, usize, usize), [usize; 4])> = None;
    for (a, &lo) in outer_range.iter().enumerate() {
        for il in min_len..=max_len {
            let left_cost = outer_l[lo] + at(&inner_l[a], il);
            for (b, &ro) in outer_range.iter().enumerate() {
                for ir in min_len..=max_len {
                    let used = lo + il + ro + ir;
                    if used > read.len() {
                        continue;
                    }
                    let cost = left_cost + at(&inner_r[b], ir) + at(&outer_r, ro);
                    let block_dev = (read.len() - used).abs_diff(BLOCK_NTS);
                    let shape = [lo, il, ir, ro].iter().map(|x| x.abs_diff(PRIMER_LEN)).sum();
                    let score = (cost, block_dev, shape);
                    if best.as_ref().is_none_or(|(s, _)| score < *s) {
                        best = Some((score, [lo, il, ir, ro]));
                    }
                }
            }
        }
    }
    let (_, [lo, il, ir, ro]) = best.ok_or(RejectReason::TooShort)?;
    let block_start = lo + il;
    let block_end = read.len() - ro - ir;
    Ok(TrimmedRead {
        layer_id: kl,
        observed_image_pair: (read[lo..block_start].to_vec(), read[block_end..read.len() - ro].to_vec()),
        inner_block: read[block_start..block_end].to_vec(),
    })
}
