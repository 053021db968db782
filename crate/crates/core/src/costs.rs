//! Read-cost model.
//!
//! For target image `I` and level `K`, with `nucs(i, k)` the nucleotides
//! sequenced for layer `k` of image `i` (coverage times oligo count times
//! oligo length):
//!
//! ```text
//! Rc      = sum_i sum_k        nucs(i, k) / pixels
//! RcPd(K) = sum_i sum_{k<=K}   nucs(i, k) / pixels
//! RcRa(K) = (sum_i nucs(i, 0) + sum_{1<=k<=K} nucs(I, k)) / pixels
//! Gpd(K)  = Rc / RcPd(K)
//! Gra(K)  = Rc / RcRa(K)
//! ```
//!
//! `Gpd` prices a decode that reads every image up to level `K`; `Gra`
//! prices reading all thumbnails, then only the target image's layers.

use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::channel::{ErrorRates, SamplingMode};
use crate::pool::{ManifestEntry, OligoPool, OLIGO_LEN};
use crate::reconstruct::decoder::{decode_image, DecodeParams};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CostError {
    #[error("index out of range: {0}")]
    Index(String),
    #[error("input image has no pixels")]
    ZeroPixels,
    #[error("zero denominator in {0}")]
    ZeroDenominator(&'static str),
    #[error("malformed cost inputs: {0}")]
    Shape(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct CostInputs {
    pub n_images: usize,
    pub n_levels: usize,
    /// `oligo_count[i][k]`: oligos of layer `k` of image `i`.
    pub oligo_count: Vec<Vec<u64>>,
    pub oligo_length: usize,
    /// Per-layer coverage.
    pub coverage: Vec<f64>,
    pub input_pixels: u64,
}

impl CostInputs {
    pub fn new(
        oligo_count: Vec<Vec<u64>>,
        oligo_length: usize,
        coverage: Vec<f64>,
        input_pixels: u64,
    ) -> Result<Self, CostError> {
        let n_levels = coverage.len();
        if oligo_count.iter().any(|row| row.len() != n_levels) {
            return Err(CostError::Shape("every image needs one count per level".into()));
        }
        if coverage.iter().any(|c| !c.is_finite() || *c < 0.0) {
            return Err(CostError::Shape("coverage must be finite and nonnegative".into()));
        }
        if input_pixels == 0 {
            return Err(CostError::ZeroPixels);
        }
        Ok(Self {
            n_images: oligo_count.len(),
            n_levels,
            oligo_count,
            oligo_length,
            coverage,
            input_pixels,
        })
    }

    /// Counts from a pool manifest. Rows follow ascending image id; the ids
    /// are returned alongside.
    pub fn from_manifest(
        manifest: &[ManifestEntry],
        n_levels: usize,
        coverage: &[f64],
        input_pixels: u64,
    ) -> Result<(Self, Vec<usize>), CostError> {
        let mut ids: Vec<usize> = manifest.iter().map(|m| m.image).collect();
        ids.sort_unstable();
        ids.dedup();
        let mut counts = vec![vec![0u64; n_levels]; ids.len()];
        for m in manifest {
            let row = ids.binary_search(&m.image).expect("id collected above");
            let cell = counts[row]
                .get_mut(m.layer)
                .ok_or_else(|| CostError::Index(format!("layer {} of {n_levels}", m.layer)))?;
            *cell += m.oligos as u64;
        }
        Ok((Self::new(counts, OLIGO_LEN, coverage.to_vec(), input_pixels)?, ids))
    }

    /// Two-row inputs reproducing given cumulative oligo counts: row 0 is
    /// the target image, row 1 everything else. `pool_cumulative[k]` counts
    /// all oligos through layer `k`; `random_access_cumulative[k]` counts
    /// all thumbnails plus the target's layers `1..=k`. All thumbnails are
    /// placed in row 1 since only their sum matters.
    pub fn from_cumulative(
        pool_cumulative: &[u64],
        random_access_cumulative: &[u64],
        coverage: &[f64],
        input_pixels: u64,
    ) -> Result<Self, CostError> {
        let n = pool_cumulative.len();
        if random_access_cumulative.len() != n || coverage.len() != n || n == 0 {
            return Err(CostError::Shape("cumulative rows and coverage must have equal, nonzero length".into()));
        }
        if pool_cumulative[0] != random_access_cumulative[0] {
            return Err(CostError::Shape("both rows must start with the thumbnail total".into()));
        }
        let mut target = vec![0u64; n];
        let mut rest = vec![0u64; n];
        rest[0] = pool_cumulative[0];
        for k in 1..n {
            let all = pool_cumulative[k]
                .checked_sub(pool_cumulative[k - 1])
                .ok_or_else(|| CostError::Shape("pool counts must be nondecreasing".into()))?;
            let mine = random_access_cumulative[k]
                .checked_sub(random_access_cumulative[k - 1])
                .ok_or_else(|| CostError::Shape("random-access counts must be nondecreasing".into()))?;
            target[k] = mine;
            rest[k] = all
                .checked_sub(mine)
                .ok_or_else(|| CostError::Shape(format!("target exceeds pool at layer {k}")))?;
        }
        Self::new(vec![target, rest], OLIGO_LEN, coverage.to_vec(), input_pixels)
    }

    fn check(&self, image: usize, level: usize) -> Result<(), CostError> {
        if image >= self.n_images {
            return Err(CostError::Index(format!("image {image} of {}", self.n_images)));
        }
        if level >= self.n_levels {
            return Err(CostError::Index(format!("level {level} of {}", self.n_levels)));
        }
        Ok(())
    }

    /// Nucleotides to sequence for layer `k` of image `i`.
    pub fn nucs(&self, i: usize, k: usize) -> Result<f64, CostError> {
        self.check(i, k)?;
        Ok(self.coverage[k] * self.oligo_count[i][k] as f64 * self.oligo_length as f64)
    }

    fn nucs_unchecked(&self, i: usize, k: usize) -> f64 {
        self.coverage[k] * self.oligo_count[i][k] as f64 * self.oligo_length as f64
    }

    /// Pool-wide nucleotides through layer `level`.
    pub fn cumulative_nucleotides(&self, level: usize) -> f64 {
        (0..self.n_images)
            .flat_map(|i| (0..=level).map(move |k| (i, k)))
            .map(|(i, k)| self.nucs_unchecked(i, k))
            .sum()
    }

    /// Nucleotides of all thumbnails plus image `image`'s layers `1..=level`.
    pub fn random_access_nucleotides(&self, image: usize, level: usize) -> f64 {
        let thumbs: f64 = (0..self.n_images).map(|i| self.nucs_unchecked(i, 0)).sum();
        thumbs + (1..=level).map(|k| self.nucs_unchecked(image, k)).sum::<f64>()
    }

    /// `(Rc, RcPd(level), RcRa(level))` in nucleotides per pixel.
    pub fn read_cost_variants(&self, image: usize, level: usize) -> Result<(f64, f64, f64), CostError> {
        self.check(image, level)?;
        if self.input_pixels == 0 {
            return Err(CostError::ZeroPixels);
        }
        let px = self.input_pixels as f64;
        Ok((
            self.cumulative_nucleotides(self.n_levels - 1) / px,
            self.cumulative_nucleotides(level) / px,
            self.random_access_nucleotides(image, level) / px,
        ))
    }

    /// `(Gpd(level), Gra(level))`.
    pub fn gains(&self, image: usize, level: usize) -> Result<(f64, f64), CostError> {
        let (rc, pd, ra) = self.read_cost_variants(image, level)?;
        if pd == 0.0 {
            return Err(CostError::ZeroDenominator("RcPd"));
        }
        if ra == 0.0 {
            return Err(CostError::ZeroDenominator("RcRa"));
        }
        Ok((rc / pd, rc / ra))
    }
}

/// Costs and gains of one target image at every level.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct CostReport {
    pub image: usize,
    pub coverage: Vec<f64>,
    /// Pool-wide oligos through each level.
    pub cumulative_oligos: Vec<u64>,
    /// All thumbnails plus the target's oligos through each level.
    pub random_access_oligos: Vec<u64>,
    /// Pool-wide nucleotides through each level.
    pub cumulative_nucleotides: Vec<f64>,
    pub random_access_nucleotides: Vec<f64>,
    pub rc: f64,
    pub rc_pd: Vec<f64>,
    pub rc_ra: Vec<f64>,
    pub gpd: Vec<f64>,
    pub gra: Vec<f64>,
}

impl CostReport {
    pub fn compute(inputs: &CostInputs, image: usize) -> Result<Self, CostError> {
        let levels = inputs.n_levels;
        if levels == 0 {
            return Err(CostError::Shape("no levels".into()));
        }
        let mut report = CostReport {
            image,
            coverage: inputs.coverage.clone(),
            cumulative_oligos: Vec::with_capacity(levels),
            random_access_oligos: Vec::with_capacity(levels),
            cumulative_nucleotides: Vec::with_capacity(levels),
            random_access_nucleotides: Vec::with_capacity(levels),
            rc: 0.0,
            rc_pd: Vec::with_capacity(levels),
            rc_ra: Vec::with_capacity(levels),
            gpd: Vec::with_capacity(levels),
            gra: Vec::with_capacity(levels),
        };
        let thumbs: u64 = inputs.oligo_count.iter().map(|r| r[0]).sum();
        for k in 0..levels {
            let (rc, pd, ra) = inputs.read_cost_variants(image, k)?;
            let (gpd, gra) = inputs.gains(image, k)?;
            report.rc = rc;
            report.cumulative_oligos.push(inputs.oligo_count.iter().map(|r| r[..=k].iter().sum::<u64>()).sum());
            report
                .random_access_oligos
                .push(thumbs + inputs.oligo_count[image][1..=k].iter().sum::<u64>());
            report.cumulative_nucleotides.push(inputs.cumulative_nucleotides(k));
            report.random_access_nucleotides.push(inputs.random_access_nucleotides(image, k));
            report.rc_pd.push(pd);
            report.rc_ra.push(ra);
            report.gpd.push(gpd);
            report.gra.push(gra);
        }
        Ok(report)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    /// Aligned text table, one column per level. Oligo rows are cumulative
    /// through the level.
    pub fn to_table(&self) -> String {
        let fmt_gain = |g: f64| format!("{}", round_sig(g, 3));
        let rows: Vec<(&str, Vec<String>)> = vec![
            ("Level", (0..self.gpd.len()).map(|k| k.to_string()).collect()),
            ("# Oligos (PD)", self.cumulative_oligos.iter().map(u64::to_string).collect()),
            ("# Oligos (RA)", self.random_access_oligos.iter().map(u64::to_string).collect()),
            ("Coverage", self.coverage.iter().map(|c| format!("{}", round_sig(*c, 3))).collect()),
            ("RcPd (nt/px)", self.rc_pd.iter().map(|v| format!("{v:.3}")).collect()),
            ("RcRa (nt/px)", self.rc_ra.iter().map(|v| format!("{v:.3}")).collect()),
            ("Gpd", self.gpd.iter().map(|&g| fmt_gain(g)).collect()),
            ("Gra", self.gra.iter().map(|&g| fmt_gain(g)).collect()),
        ];
        let label_w = rows.iter().map(|(l, _)| l.len()).max().unwrap_or(0);
        let col_w = rows
            .iter()
            .flat_map(|(_, v)| v.iter().map(String::len))
            .max()
            .unwrap_or(0);
        let mut out = String::new();
        for (label, values) in rows {
            let _ = write!(out, "{label:<label_w$}");
            for v in values {
                let _ = write!(out, " | {v:>col_w$}");
            }
            out.push('\n');
        }
        let _ = writeln!(out, "Rc = {:.3} nt/px", self.rc);
        out
    }
}

/// Rounds to `digits` significant digits.
pub fn round_sig(x: f64, digits: i32) -> f64 {
    if x == 0.0 || !x.is_finite() {
        return x;
    }
    let scale = 10f64.powi(digits - 1 - x.abs().log10().floor() as i32);
    (x * scale).round() / scale
}

/// CSV with one `readCost,psnr` line per point.
pub fn read_cost_psnr_csv(points: &[(f64, f64)]) -> String {
    let mut out = String::from("readCost,psnr\n");
    for (cost, psnr) in points {
        let _ = writeln!(out, "{cost},{psnr}");
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct SweepRow {
    pub coverage: f64,
    pub trials: usize,
    pub successes: usize,
    pub success_rate: f64,
}

/// Decodes image `image` up to `level` for every coverage and `seed_count`
/// seeds, reporting the fraction of successful decodes per coverage.
pub fn coverage_sweep(
    pool: &OligoPool,
    image: usize,
    level: usize,
    rates: &ErrorRates,
    coverages: &[f64],
    seed_count: usize,
    mode: SamplingMode,
) -> Result<Vec<SweepRow>, CostError> {
    if coverages.is_empty() {
        return Err(CostError::Shape("empty coverage list".into()));
    }
    let pair = *pool
        .registry
        .image_pairs
        .get(image)
        .ok_or_else(|| CostError::Index(format!("image {image}")))?;
    let cells: Vec<(usize, u64)> = (0..coverages.len())
        .flat_map(|c| (0..seed_count as u64).map(move |s| (c, s)))
        .collect();
    let outcomes: Vec<(usize, bool)> = cells
        .par_iter()
        .map(|&(c, seed)| {
            let params = DecodeParams {
                coverage: coverages[c],
                rates: *rates,
                seed,
                mode,
                ..DecodeParams::default()
            };
            (c, decode_image(pool, &pair, level, &params).is_ok())
        })
        .collect();
    Ok(coverages
        .iter()
        .enumerate()
        .map(|(c, &coverage)| {
            let successes = outcomes.iter().filter(|&&(cc, ok)| cc == c && ok).count();
            SweepRow {
                coverage,
                trials: seed_count,
                successes,
                success_rate: if seed_count == 0 {
                    0.0
                } else {
                    successes as f64 / seed_count as f64
                },
            }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const POOL: [u64; 5] = [2878, 8539, 25288, 69358, 151958];
    const RA: [u64; 5] = [2878, 3114, 3812, 5648, 9090];

    #[test]
    fn nucs_arithmetic() {
        let inputs = CostInputs::new(vec![vec![10, 82_600]], 272, vec![1.0, 1.5], 100).unwrap();
        assert_eq!(inputs.nucs(0, 0).unwrap(), 2720.0);
        assert_eq!(inputs.nucs(0, 1).unwrap(), 1.5 * 82_600.0 * 272.0);
        let zero = CostInputs::new(vec![vec![10]], 272, vec![0.0], 100).unwrap();
        assert_eq!(zero.nucs(0, 0).unwrap(), 0.0);
        assert!(inputs.nucs(1, 0).is_err());
        assert!(inputs.nucs(0, 2).is_err());
    }

    #[test]
    fn contract_errors() {
        assert_eq!(CostInputs::new(vec![vec![1]], 272, vec![1.0], 0), Err(CostError::ZeroPixels));
        assert!(CostInputs::new(vec![vec![1, 2]], 272, vec![1.0], 1).is_err());
        let zero = CostInputs::new(vec![vec![0, 0]], 272, vec![1.0, 1.0], 1).unwrap();
        assert!(matches!(zero.gains(0, 0), Err(CostError::ZeroDenominator(_))));
        assert!(CostInputs::from_cumulative(&[5, 4], &[5, 5], &[1.0, 1.0], 1).is_err());
        assert!(CostInputs::from_cumulative(&[5, 9], &[4, 5], &[1.0, 1.0], 1).is_err());
    }

    #[test]
    fn cumulative_decomposition_reproduces_counts() {
        let inputs = CostInputs::from_cumulative(&POOL, &RA, &[1.0; 5], 768 * 512).unwrap();
        let r = CostReport::compute(&inputs, 0).unwrap();
        assert_eq!(r.cumulative_oligos, POOL);
        assert_eq!(r.random_access_oligos, RA);
        assert!((r.gpd[0] - 151958.0 / 2878.0).abs() < 1e-12);
        assert!((r.gra[3] - 151958.0 / 5648.0).abs() < 1e-12);
        assert_eq!(r.gpd[4], 1.0);
        let table = r.to_table();
        assert!(table.contains("52.8"));
        assert!(table.lines().next().unwrap().starts_with("Level"));
    }

    #[test]
    fn single_image_collapses_random_access() {
        let inputs = CostInputs::new(vec![vec![7, 20, 90]], 272, vec![1.0, 2.0, 1.5], 64).unwrap();
        let (_, pd, ra) = inputs.read_cost_variants(0, 0).unwrap();
        assert_eq!(pd, ra);
        for k in 0..3 {
            let (gpd, gra) = inputs.gains(0, k).unwrap();
            assert!((gpd - gra).abs() < 1e-12);
        }
    }

    #[test]
    fn sig_rounding_and_csv() {
        assert_eq!(round_sig(52.798, 3), 52.8);
        assert_eq!(round_sig(6.0149, 3), 6.01);
        assert_eq!(round_sig(0.0, 3), 0.0);
        assert_eq!(read_cost_psnr_csv(&[(1.5, 20.0)]), "readCost,psnr\n1.5,20\n");
    }

    fn arb_inputs() -> impl Strategy<Value = (CostInputs, usize)> {
        (1usize..5, 1usize..6).prop_flat_map(|(n_images, n_levels)| {
            (
                proptest::collection::vec(proptest::collection::vec(1u64..10_000, n_levels), n_images),
                proptest::collection::vec(0.1f64..8.0, n_levels),
                1u64..1_000_000,
                0..n_images,
            )
                .prop_map(|(counts, cov, px, target)| (CostInputs::new(counts, 272, cov, px).unwrap(), target))
        })
    }

    proptest! {
        #[test]
        fn gain_invariants((inputs, target) in arb_inputs(), lambda in 0.01f64..100.0) {
            let r = CostReport::compute(&inputs, target).unwrap();
            let last = inputs.n_levels - 1;
            prop_assert!((r.gpd[last] - 1.0).abs() < 1e-12);
            prop_assert!((r.gra[0] - r.gpd[0]).abs() <= 1e-12 * r.gpd[0]);
            for k in 1..inputs.n_levels {
                prop_assert!(r.gpd[k] <= r.gpd[k - 1] * (1.0 + 1e-12));
                prop_assert!(r.gra[k] <= r.gra[k - 1] * (1.0 + 1e-12));
                prop_assert!(r.gra[k] >= r.gpd[k] * (1.0 - 1e-12));
            }
            let mut scaled = inputs.clone();
            scaled.coverage.iter_mut().for_each(|c| *c *= lambda);
            let s = CostReport::compute(&scaled, target).unwrap();
            for k in 0..inputs.n_levels {
                prop_assert!((s.gpd[k] - r.gpd[k]).abs() <= 1e-9 * r.gpd[k]);
                prop_assert!((s.gra[k] - r.gra[k]).abs() <= 1e-9 * r.gra[k]);
            }
        }
    }
}
