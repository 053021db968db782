//! Acceptance criteria of the simulator, one PASS/FAIL line each.
//!
//! Criteria listed in `KNOWN_RED` are reported but do not fail the run; the
//! run fails if any other criterion fails or if a known-red one starts
//! passing, so the list cannot go stale.

mod common;

use std::collections::BTreeSet;
use std::process::ExitCode;
use std::time::Instant;

use picdna_core::channel::{sequence, ErrorRates, ReadSet, SamplingMode};
use picdna_core::codec::{psnr, upsample_bicubic, Image};
use picdna_core::costs::{round_sig, CostInputs, CostReport};
use picdna_core::pool::{build_pool, OligoPool, BLOCK_END, BLOCK_START, OLIGO_LEN};
use picdna_core::primers::generate_registry;
use picdna_core::reconstruct::decoder::sequence_and_recover_layer;
use picdna_core::reconstruct::{decode_image, DecodeParams, ProgressiveDecoder};

use common::{crop, fixture, natural_images};

const KNOWN_RED: [u8; 3] = [1, 2, 7];

const POOL_OLIGOS: [u64; 5] = [2878, 8539, 25288, 69358, 151958];
const RA_OLIGOS: [u64; 5] = [2878, 3114, 3812, 5648, 9090];
const THEORETICAL_GPD: [f64; 5] = [52.8, 17.8, 6.01, 2.19, 1.00];
const THEORETICAL_GRA: [f64; 5] = [52.8, 48.8, 39.9, 27.1, 17.0];
const OBSERVED_COVERAGE: [f64; 5] = [1.67, 2.0, 1.96, 1.88, 1.5];
const OBSERVED_GPD: [f64; 5] = [52.5, 15.6, 5.13, 1.93, 1.0];
const OBSERVED_GRA: [f64; 5] = [52.5, 47.8, 38.4, 26.5, 17.8];
const OBSERVED_TOLERANCE: f64 = 0.05;
const SIG_DIGITS: i32 = 3;
const THUMBNAIL_GAP_DB: f64 = 15.0;
const MONOTONE_QUANTIZERS: [u16; 4] = [1, 2, 4, 8];
const NOISE_COVERAGE: f64 = 5.0;
const NOISE_SEEDS: u64 = 10;
const NOISE_MIN_BLOCK_RECOVERY: f64 = 0.99;
const NOISE_MIN_FULL_DECODES: usize = 9;
const LEVELS: usize = 5;

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: impl Into<String>) -> Verdict {
    Verdict {
        pass,
        detail: detail.into(),
    }
}

fn fmt_row(v: &[f64]) -> String {
    let cells: Vec<String> = v.iter().map(|x| format!("{x:.4}")).collect();
    format!("[{}]", cells.join(", "))
}

/// The three natural fixtures in one lossless pool.
fn lossless_pool() -> (OligoPool, Vec<(usize, Image)>) {
    let images: Vec<(usize, Image)> = natural_images().into_iter().map(|(_, img)| img).enumerate().collect();
    let registry = generate_registry(LEVELS, images.len(), 2024).unwrap();
    (build_pool(&images, LEVELS, 1, &registry).unwrap(), images)
}

fn theoretical_gains() -> Verdict {
    let inputs = CostInputs::from_cumulative(&POOL_OLIGOS, &RA_OLIGOS, &[1.0; 5], 768 * 512).unwrap();
    let r = CostReport::compute(&inputs, 0).unwrap();
    let same = |got: &[f64], want: &[f64]| {
        got.iter()
            .zip(want)
            .all(|(&g, &w)| (round_sig(g, SIG_DIGITS) - w).abs() <= 1e-9 * w)
    };
    let pass = same(&r.gpd, &THEORETICAL_GPD) && same(&r.gra, &THEORETICAL_GRA);
    verdict(pass, format!("Gpd {} Gra {}", fmt_row(&r.gpd), fmt_row(&r.gra)))
}

fn observed_gains() -> Verdict {
    let inputs = CostInputs::from_cumulative(&POOL_OLIGOS, &RA_OLIGOS, &OBSERVED_COVERAGE, 768 * 512).unwrap();
    let r = CostReport::compute(&inputs, 0).unwrap();
    let worst = |got: &[f64], want: &[f64]| {
        got.iter()
            .zip(want)
            .map(|(g, w)| (g - w).abs() / w)
            .fold(0.0f64, f64::max)
    };
    let (dp, da) = (worst(&r.gpd, &OBSERVED_GPD), worst(&r.gra, &OBSERVED_GRA));
    verdict(
        dp <= OBSERVED_TOLERANCE && da <= OBSERVED_TOLERANCE,
        format!(
            "Gpd {} (worst {:.2}%), Gra {} (worst {:.2}%)",
            fmt_row(&r.gpd),
            dp * 100.0,
            fmt_row(&r.gra),
            da * 100.0
        ),
    )
}

fn losslessness(pool: &OligoPool, images: &[(usize, Image)]) -> Verdict {
    let mut notes = Vec::new();
    let mut pass = true;
    for (id, img) in images {
        let t = Instant::now();
        let pair = pool.registry.image_pairs[*id];
        let ok = matches!(decode_image(pool, &pair, LEVELS - 1, &DecodeParams::noiseless()), Ok((got, _)) if &got == img);
        pass &= ok;
        notes.push(format!("image {id} {}x{} {} in {:.1?}", img.width(), img.height(), if ok { "exact" } else { "differs" }, t.elapsed()));
    }
    verdict(pass, notes.join("; "))
}

/// PSNR of every level against the original, each upsampled to full size.
fn psnr_curve(pool: &OligoPool, id: usize, original: &Image) -> Vec<f64> {
    let pair = pool.registry.image_pairs[id];
    let mut dec = ProgressiveDecoder::new(pool, &pair).unwrap();
    (0..LEVELS)
        .map(|k| {
            let (img, _) = dec.decode(k, &DecodeParams::noiseless()).unwrap();
            let full = upsample_bicubic(&img, original.width(), original.height()).unwrap();
            psnr(&full, original).unwrap()
        })
        .collect()
}

/// PSNR must not drop from level to level at any quantizer; the thumbnail
/// gap is held against the lossless full decode.
fn monotonicity(lossless: &OligoPool, images: &[(usize, Image)]) -> Verdict {
    let mut pass = true;
    let mut notes = Vec::new();
    for q in MONOTONE_QUANTIZERS {
        let lossy;
        let pool = if q == 1 {
            lossless
        } else {
            lossy = build_pool(images, LEVELS, q, &lossless.registry).unwrap();
            &lossy
        };
        for (id, img) in images {
            let curve = psnr_curve(pool, *id, img);
            let monotone = curve.windows(2).all(|w| w[1] >= w[0]);
            let gap = curve[LEVELS - 1] - curve[0];
            pass &= monotone && (q != 1 || gap >= THUMBNAIL_GAP_DB);
            notes.push(format!("q{q} image {id} {} gap {gap:.1} dB", fmt_row(&curve)));
        }
    }
    verdict(pass, notes.join("; "))
}

fn selectivity(pool: &OligoPool) -> Verdict {
    let mut pass = true;
    for (i, pair) in pool.registry.image_pairs.iter().enumerate() {
        let got: BTreeSet<_> = pool.select(std::slice::from_ref(pair), 0, 1).into_iter().map(|o| o.provenance).collect();
        let want: BTreeSet<_> = pool.oligos.iter().filter(|o| o.provenance.image == i).map(|o| o.provenance).collect();
        let manifest: usize = pool.manifest.iter().filter(|m| m.image == i).map(|m| m.oligos).sum();
        pass &= got == want && got.len() == manifest;
    }
    let thumbs: BTreeSet<_> = pool.select(&pool.registry.layer_pairs[..1], 0, 1).into_iter().map(|o| o.provenance).collect();
    let want: BTreeSet<_> = pool.oligos.iter().filter(|o| o.provenance.layer == 0).map(|o| o.provenance).collect();
    let manifest: usize = pool.manifest.iter().filter(|m| m.layer == 0).map(|m| m.oligos).sum();
    pass &= thumbs == want && thumbs.len() == manifest;
    verdict(pass, format!("{} images, {} thumbnail oligos", pool.registry.num_images(), thumbs.len()))
}

fn constraints(pool: &OligoPool) -> Verdict {
    let lengths = pool.oligos.iter().all(|o| o.sequence.len() == OLIGO_LEN);
    // the block continues the rotating code from the last image-primer base
    let payload_runs = pool
        .oligos
        .iter()
        .all(|o| o.sequence[BLOCK_START - 1..BLOCK_END].windows(2).all(|w| w[0] != w[1]));
    let primers: Vec<Vec<u8>> = pool.registry.primers().map(|(_, p)| p.as_bytes().to_vec()).collect();
    let gc_ok = primers.iter().all(|p| {
        let gc = p.iter().filter(|&&b| b == b'G' || b == b'C').count() as f64 / p.len() as f64;
        (0.40..=0.60).contains(&gc)
    });
    let run_ok = primers.iter().all(|p| {
        let mut run = 1;
        let mut longest = 1;
        for w in p.windows(2) {
            run = if w[0] == w[1] { run + 1 } else { 1 };
            longest = longest.max(run);
        }
        longest <= 3
    });
    let revcomp = |s: &[u8]| -> Vec<u8> {
        s.iter()
            .rev()
            .map(|b| match b {
                b'A' => b'T',
                b'T' => b'A',
                b'C' => b'G',
                _ => b'C',
            })
            .collect()
    };
    let ham = |a: &[u8], b: &[u8]| a.iter().zip(b).filter(|(x, y)| x != y).count();
    let mut min_dist = usize::MAX;
    for (i, a) in primers.iter().enumerate() {
        for b in &primers[i + 1..] {
            min_dist = min_dist.min(ham(a, b)).min(ham(a, &revcomp(b)));
        }
    }
    let pass = lengths && payload_runs && gc_ok && run_ok && min_dist >= 8;
    verdict(
        pass,
        format!(
            "{} oligos, {} primers, lengths {lengths}, payload runs {payload_runs}, GC {gc_ok}, homopolymer {run_ok}, min distance {min_dist}",
            pool.oligos.len(),
            primers.len()
        ),
    )
}

fn noise_robustness() -> Verdict {
    let img = crop(&fixture("camera.pgm"), 256, 256);
    let registry = generate_registry(LEVELS, 1, 77).unwrap();
    let pool = build_pool(&[(0, img)], LEVELS, 4, &registry).unwrap();
    let pair = registry.image_pairs[0];
    let mut recovered = 0;
    let mut expected = 0;
    let mut full = 0;
    for seed in 0..NOISE_SEEDS {
        let params = DecodeParams {
            coverage: NOISE_COVERAGE,
            seed,
            ..DecodeParams::default()
        };
        for layer in 0..LEVELS {
            let (_, _, trace) = sequence_and_recover_layer(&pool, 0, layer, &params).unwrap();
            recovered += trace.blocks_recovered;
            expected += trace.blocks_expected;
        }
        full += usize::from(decode_image(&pool, &pair, LEVELS - 1, &params).is_ok());
    }
    let rate = recovered as f64 / expected as f64;
    verdict(
        rate >= NOISE_MIN_BLOCK_RECOVERY && full >= NOISE_MIN_FULL_DECODES,
        format!(
            "{} oligos, block recovery {recovered}/{expected} = {rate:.4}, full decodes {full}/{NOISE_SEEDS}",
            pool.oligos.len()
        ),
    )
}

fn determinism(pool: &OligoPool) -> Verdict {
    let pair = pool.registry.image_pairs[1];
    let selection = pool.select_layer_of_image(1, &pair, 3);
    let rates = ErrorRates::default();
    let reads = |seed| sequence(&selection, 4.0, &rates, seed, SamplingMode::Poisson).unwrap();
    let (a, b, c): (ReadSet, ReadSet, ReadSet) = (reads(5), reads(5), reads(6));
    // reads carry sequences only; this binding fails to compile otherwise
    let _: &Vec<Vec<u8>> = &a.reads;
    let same_reads = a.to_fasta() == b.to_fasta() && a.sidecar_json() == b.sidecar_json();
    let seed_matters = a.to_fasta() != c.to_fasta();

    let params = DecodeParams {
        coverage: 3.0,
        rates: ErrorRates::ZERO,
        seed: 8,
        ..DecodeParams::default()
    };
    let run = || match decode_image(pool, &pair, 2, &params) {
        Ok((img, step)) => Ok((img, serde_json::to_string(&step).unwrap())),
        Err(e) => Err(e.to_string()),
    };
    let same_decode = run() == run();
    let cost = |p: &OligoPool| {
        let (inputs, _) = CostInputs::from_manifest(&p.manifest, LEVELS, &OBSERVED_COVERAGE, 768 * 512).unwrap();
        CostReport::compute(&inputs, 0).unwrap().to_json()
    };
    let same_cost = cost(pool) == cost(pool);
    verdict(
        same_reads && seed_matters && same_decode && same_cost,
        format!("reads {same_reads}, seed sensitivity {seed_matters}, decode {same_decode}, cost JSON {same_cost}"),
    )
}

fn iterative_reuse(pool: &OligoPool) -> Verdict {
    let pair = pool.registry.image_pairs[2];
    let params = DecodeParams {
        coverage: 2.0,
        rates: ErrorRates::ZERO,
        seed: 12,
        mode: SamplingMode::Exact,
        ..DecodeParams::default()
    };
    let mut dec = ProgressiveDecoder::new(pool, &pair).unwrap();
    let (_, first) = dec.decode(1, &params).unwrap();
    let (img_iter, second) = dec.decode(3, &params).unwrap();
    let (img_once, once) = decode_image(pool, &pair, 3, &params).unwrap();
    let second_layers: Vec<usize> = second.layer_costs.iter().map(|c| c.layer).collect();
    let first_layers: Vec<usize> = first.layer_costs.iter().map(|c| c.layer).collect();
    let drift = second.cumulative_nucleotides.abs_diff(once.cumulative_nucleotides);
    let pass = first_layers == [0, 1] && second_layers == [2, 3] && drift <= OLIGO_LEN as u64 && img_iter == img_once;
    verdict(
        pass,
        format!(
            "second call sequenced layers {second_layers:?}, cumulative {} nt vs one-shot {} nt",
            second.cumulative_nucleotides, once.cumulative_nucleotides
        ),
    )
}

type Criterion<'a> = (u8, &'static str, Box<dyn Fn() -> Verdict + 'a>);

fn main() -> ExitCode {
    let (pool, images) = lossless_pool();
    let criteria: Vec<Criterion> = vec![
        (1, "theoretical gains to 3 significant digits", Box::new(theoretical_gains)),
        (2, "observed gains within 5%", Box::new(observed_gains)),
        (3, "end-to-end losslessness", Box::new(|| losslessness(&pool, &images))),
        (4, "progressive PSNR monotonicity", Box::new(|| monotonicity(&pool, &images))),
        (5, "random-access selectivity", Box::new(|| selectivity(&pool))),
        (6, "sequence constraints", Box::new(|| constraints(&pool))),
        (7, "noise robustness at coverage 5", Box::new(noise_robustness)),
        (8, "honesty and determinism", Box::new(|| determinism(&pool))),
        (9, "iterative decode reuse", Box::new(|| iterative_reuse(&pool))),
    ];
    let mut unexpected = Vec::new();
    for (id, name, check) in criteria {
        let t = Instant::now();
        let v = check();
        let tag = if v.pass { "PASS" } else { "FAIL" };
        let known = if KNOWN_RED.contains(&id) { " [known red]" } else { "" };
        println!("{tag} {id} {name}{known}: {} ({:.1?})", v.detail, t.elapsed());
        if v.pass == KNOWN_RED.contains(&id) {
            unexpected.push(id);
        }
    }
    if unexpected.is_empty() {
        ExitCode::SUCCESS
    } else {
        println!("unexpected outcome for criteria {unexpected:?}");
        ExitCode::FAILURE
    }
}
