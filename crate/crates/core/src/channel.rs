//! Sequencing simulator: coverage sampling followed by independent
//! substitution, insertion and deletion noise on every read.
//!
//! A [`ReadSet`] holds bare nucleotide strings. The ground-truth
//! provenance of the sequenced oligos does not survive sequencing:
//!
//! ```compile_fail
//! # use picdna_core::channel::*;
//! # let reads = ReadSet::default();
//! let _ = reads.reads[0].provenance;
//! ```

use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dna;
use crate::pool::Oligo;

pub const MAX_RATE: f64 = 0.2;

#[derive(Debug, Error)]
pub enum ChannelError {
    #[error("invalid error rates: {0}")]
    Rates(String),
    #[error("invalid coverage {0}")]
    Coverage(f64),
    #[error("exact sampling needs a positive integer coverage, got {0}")]
    NonIntegerCoverage(f64),
    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ErrorRates {
    pub sub: f64,
    pub ins: f64,
    pub del: f64,
}

impl Default for ErrorRates {
    fn default() -> Self {
        Self {
            sub: 0.004,
            ins: 0.002,
            del: 0.006,
        }
    }
}

impl ErrorRates {
    pub const ZERO: ErrorRates = ErrorRates {
        sub: 0.0,
        ins: 0.0,
        del: 0.0,
    };

    pub fn new(sub: f64, ins: f64, del: f64) -> Result<Self, ChannelError> {
        let r = Self { sub, ins, del };
        r.validate()?;
        Ok(r)
    }

    pub fn validate(&self) -> Result<(), ChannelError> {
        for (name, v) in [("sub", self.sub), ("ins", self.ins), ("del", self.del)] {
            if !(0.0..=MAX_RATE).contains(&v) {
                return Err(ChannelError::Rates(format!("{name} = {v} outside [0, {MAX_RATE}]")));
            }
        }
        Ok(())
    }

    pub fn is_zero(&self) -> bool {
        self.sub == 0.0 && self.ins == 0.0 && self.del == 0.0
    }

    /// Total per-position event probability.
    pub fn total(&self) -> f64 {
        self.sub + self.ins + self.del
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SamplingMode {
    #[default]
    Poisson,
    Exact,
}

/// Passes `seq` through the noise model. Each position draws one uniform
/// number `u`: `u < del` drops the base, the next `ins` of probability
/// mass inserts a random base before it, the next `sub` replaces it with
/// one of the three other bases.
pub fn corrupt<R: Rng + ?Sized>(seq: &[u8], rates: &ErrorRates, rng: &mut R) -> Vec<u8> {
    if rates.is_zero() {
        return seq.to_vec();
    }
    let mut out = Vec::with_capacity(seq.len() + 4);
    let ins_edge = rates.del + rates.ins;
    let sub_edge = ins_edge + rates.sub;
    for &b in seq {
        let u: f64 = rng.random();
        if u < rates.del {
            continue;
        }
        if u < ins_edge {
            out.push(dna::ALPHABET[rng.random_range(0..4)]);
            out.push(b);
        } else if u < sub_edge {
            let alt: Vec<u8> = dna::ALPHABET.iter().copied().filter(|&x| x != b).collect();
            out.push(alt[rng.random_range(0..alt.len())]);
        } else {
            out.push(b);
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ReadSet {
    pub reads: Vec<Vec<u8>>,
    pub seed: u64,
    pub rates: ErrorRates,
    pub nominal_coverage: f64,
    pub mode: SamplingMode,
}

fn substream(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Samples reads from `selection`. Oligo `n` draws from its own ChaCha8
/// stream `n`, so the result does not depend on thread count; the final
/// read order is shuffled by a further stream.
pub fn sequence(
    selection: &[Oligo],
    coverage: f64,
    rates: &ErrorRates,
    seed: u64,
    mode: SamplingMode,
) -> Result<ReadSet, ChannelError> {
    rates.validate()?;
    if !coverage.is_finite() || coverage < 0.0 {
        return Err(ChannelError::Coverage(coverage));
    }
    if mode == SamplingMode::Exact && (coverage < 1.0 || coverage.fract() != 0.0) {
        return Err(ChannelError::NonIntegerCoverage(coverage));
    }
    let poisson = match mode {
        SamplingMode::Poisson if coverage > 0.0 => {
            Some(Poisson::new(coverage).map_err(|_| ChannelError::Coverage(coverage))?)
        }
        _ => None,
    };
    let mut reads: Vec<Vec<u8>> = selection
        .par_iter()
        .enumerate()
        .flat_map_iter(|(n, oligo)| {
            let mut rng = substream(seed, n as u64);
            let copies = match (mode, &poisson) {
                (SamplingMode::Exact, _) => coverage as usize,
                (SamplingMode::Poisson, Some(p)) => p.sample(&mut rng) as usize,
                (SamplingMode::Poisson, None) => 0,
            };
            (0..copies)
                .map(|_| corrupt(&oligo.sequence, rates, &mut rng))
                .collect::<Vec<_>>()
        })
        .collect();
    reads.shuffle(&mut substream(seed, u64::MAX));
    Ok(ReadSet {
        reads,
        seed,
        rates: *rates,
        nominal_coverage: coverage,
        mode,
    })
}

#[derive(Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
struct ReadSetMeta {
    seed: u64,
    rates: ErrorRates,
    nominal_coverage: f64,
    mode: SamplingMode,
}

impl ReadSet {
    pub fn len(&self) -> usize {
        self.reads.len()
    }

    pub fn is_empty(&self) -> bool {
        self.reads.is_empty()
    }

    pub fn total_nucleotides(&self) -> usize {
        self.reads.iter().map(Vec::len).sum()
    }

    pub fn to_fasta(&self) -> String {
        let mut out = String::new();
        for (n, r) in self.reads.iter().enumerate() {
            out.push_str(&format!(">r{n}\n"));
            out.push_str(std::str::from_utf8(r).expect("ACGT"));
            out.push('\n');
        }
        out
    }

    pub fn sidecar_json(&self) -> String {
        serde_json::to_string_pretty(&ReadSetMeta {
            seed: self.seed,
            rates: self.rates,
            nominal_coverage: self.nominal_coverage,
            mode: self.mode,
        })
        .expect("metadata serializes")
    }

    /// Writes `path` (FASTA) and `<stem>.meta.json`.
    pub fn save(&self, path: &Path) -> Result<(), ChannelError> {
        let io = |p: &Path| {
            let p = p.to_path_buf();
            move |source| ChannelError::Io { path: p, source }
        };
        std::fs::write(path, self.to_fasta()).map_err(io(path))?;
        let side = path.with_extension("meta.json");
        std::fs::write(&side, self.sidecar_json()).map_err(io(&side))
    }

    pub fn load(path: &Path) -> Result<Self, ChannelError> {
        let io = |p: &Path| {
            let p = p.to_path_buf();
            move |source| ChannelError::Io { path: p, source }
        };
        let text = std::fs::read_to_string(path).map_err(io(path))?;
        let err = |line: usize, message: &str| ChannelError::Parse {
            path: path.to_path_buf(),
            line,
            message: message.to_string(),
        };
        let mut reads = Vec::new();
        let mut expect_seq = false;
        for (n, line) in text.lines().enumerate() {
            if line.starts_with('>') {
                if expect_seq {
                    reads.push(Vec::new());
                }
                expect_seq = true;
            } else if expect_seq {
                if !dna::is_valid(line.as_bytes()) {
                    return Err(err(n + 1, "non-ACGT symbol in read"));
                }
                reads.push(line.as_bytes().to_vec());
                expect_seq = false;
            } else if !line.is_empty() {
                return Err(err(n + 1, "sequence line without a header"));
            }
        }
        if expect_seq {
            reads.push(Vec::new());
        }
        let side = path.with_extension("meta.json");
        let json = std::fs::read_to_string(&side).map_err(io(&side))?;
        let meta: ReadSetMeta = serde_json::from_str(&json).map_err(|e| ChannelError::Parse {
            path: side.clone(),
            line: e.line(),
            message: e.to_string(),
        })?;
        Ok(ReadSet {
            reads,
            seed: meta.seed,
            rates: meta.rates,
            nominal_coverage: meta.nominal_coverage,
            mode: meta.mode,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pool::Provenance;

    fn random_oligos(n: usize, len: usize, seed: u64) -> Vec<Oligo> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n)
            .map(|i| Oligo {
                sequence: (0..len).map(|_| dna::ALPHABET[rng.random_range(0..4)]).collect(),
                provenance: Provenance {
                    image: 0,
                    layer: 0,
                    block: i as u32,
                },
            })
            .collect()
    }

    #[test]
    fn rate_validation() {
        assert!(ErrorRates::new(0.2, 0.0, 0.0).is_ok());
        assert!(ErrorRates::new(0.21, 0.0, 0.0).is_err());
        assert!(ErrorRates::new(0.0, -0.01, 0.0).is_err());
        assert!(ErrorRates::new(0.0, 0.0, f64::NAN).is_err());
        let d = ErrorRates::default();
        assert_eq!((d.sub, d.ins, d.del), (0.004, 0.002, 0.006));
    }

    #[test]
    fn zero_rates_and_full_deletion() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let s = b"ACGTTGCA".to_vec();
        assert_eq!(corrupt(&s, &ErrorRates::ZERO, &mut rng), s);
        let del = ErrorRates::new(0.0, 0.0, 0.2).unwrap();
        let all = ErrorRates { del: 1.0, ..del };
        assert!(corrupt(&s, &all, &mut rng).is_empty());
    }

    #[test]
    fn event_partition_is_exclusive() {
        // every event kind alone changes the length in its own way
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let s = vec![b'A'; 100];
        let ins = ErrorRates { sub: 0.0, ins: 1.0, del: 0.0 };
        let out = corrupt(&s, &ins, &mut rng);
        assert_eq!(out.len(), 200);
        assert!(out.chunks(2).all(|c| c[1] == b'A'));
        let sub = ErrorRates { sub: 1.0, ins: 0.0, del: 0.0 };
        let out = corrupt(&s, &sub, &mut rng);
        assert_eq!(out.len(), 100);
        assert!(out.iter().all(|&b| b != b'A'));
    }

    #[test]
    fn substitution_count_matches_binomial_mean() {
        let rates = ErrorRates::new(0.01, 0.0, 0.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let oligo = &random_oligos(1, 272, 4)[0].sequence;
        let trials = 10_000;
        let total: usize = (0..trials)
            .map(|_| {
                let r = corrupt(oligo, &rates, &mut rng);
                crate::edit::levenshtein(&r, oligo)
            })
            .sum();
        let mean = total as f64 / trials as f64;
        assert!((mean - 2.72).abs() / 2.72 < 0.05, "mean edit distance {mean}");
    }

    #[test]
    fn exact_mode_returns_the_selection() {
        let sel = random_oligos(50, 272, 5);
        let rs = sequence(&sel, 1.0, &ErrorRates::ZERO, 9, SamplingMode::Exact).unwrap();
        let mut got = rs.reads.clone();
        let mut want: Vec<Vec<u8>> = sel.iter().map(|o| o.sequence.clone()).collect();
        got.sort();
        want.sort();
        assert_eq!(got, want);
        let rs3 = sequence(&sel, 3.0, &ErrorRates::ZERO, 9, SamplingMode::Exact).unwrap();
        assert_eq!(rs3.len(), 150);
        assert!(matches!(
            sequence(&sel, 1.5, &ErrorRates::ZERO, 9, SamplingMode::Exact),
            Err(ChannelError::NonIntegerCoverage(_))
        ));
        assert!(sequence(&sel, 0.0, &ErrorRates::ZERO, 9, SamplingMode::Exact).is_err());
    }

    #[test]
    fn poisson_coverage_law_of_large_numbers() {
        let sel = random_oligos(10_000, 272, 6);
        let rs = sequence(&sel, 1.67, &ErrorRates::default(), 10, SamplingMode::Poisson).unwrap();
        let n = rs.len() as f64;
        assert!((n - 16_700.0).abs() / 16_700.0 < 0.03, "{n} reads");
        let nts = rs.total_nucleotides() as f64;
        let expected = 1.67 * 272.0 * 10_000.0;
        assert!((nts - expected).abs() / expected < 0.03);
        assert!(sequence(&sel, 0.0, &ErrorRates::default(), 10, SamplingMode::Poisson)
            .unwrap()
            .is_empty());
        assert!(sequence(&sel, -1.0, &ErrorRates::default(), 10, SamplingMode::Poisson).is_err());
    }

    #[test]
    fn sequencing_is_deterministic_and_seed_sensitive() {
        let sel = random_oligos(300, 272, 7);
        let a = sequence(&sel, 2.5, &ErrorRates::default(), 77, SamplingMode::Poisson).unwrap();
        let b = sequence(&sel, 2.5, &ErrorRates::default(), 77, SamplingMode::Poisson).unwrap();
        assert_eq!(a.to_fasta(), b.to_fasta());
        assert_eq!(a.sidecar_json(), b.sidecar_json());
        let c = sequence(&sel, 2.5, &ErrorRates::default(), 78, SamplingMode::Poisson).unwrap();
        assert_ne!(a.to_fasta(), c.to_fasta());

        let pool = rayon::ThreadPoolBuilder::new().num_threads(3).build().unwrap();
        let d = pool.install(|| sequence(&sel, 2.5, &ErrorRates::default(), 77, SamplingMode::Poisson).unwrap());
        assert_eq!(a, d);
    }

    #[test]
    fn readset_file_round_trip() {
        let sel = random_oligos(40, 272, 8);
        let rs = sequence(&sel, 2.0, &ErrorRates::default(), 5, SamplingMode::Poisson).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("reads.fasta");
        rs.save(&path).unwrap();
        let meta: serde_json::Value =
            serde_json::from_str(&std::fs::read_to_string(dir.path().join("reads.meta.json")).unwrap()).unwrap();
        assert_eq!(meta["nominalCoverage"], 2.0);
        assert_eq!(meta["mode"], "poisson");
        assert_eq!(meta["rates"]["del"], 0.006);
        assert_eq!(ReadSet::load(&path).unwrap(), rs);
    }
}
