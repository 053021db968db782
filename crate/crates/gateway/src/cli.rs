//! `picdna` command line.

use std::fs;
use std::io::Write;
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use clap::{Args, Parser, Subcommand, ValueEnum};
use picdna_core::channel::{ErrorRates, SamplingMode};
use picdna_core::codec::{bmp, pnm, Image};
use picdna_core::costs::{coverage_sweep, round_sig, CostInputs, CostReport};
use picdna_core::pool::{build_pool, load_pool, save_pool, OligoPool};
use picdna_core::primers::{generate_registry, DEFAULT_TAU};
use picdna_core::reconstruct::decoder::pool_thumbnails;
use picdna_core::reconstruct::{DecodeError, DecodeParams, ProgressiveDecoder};
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::error::GatewayError;
use crate::session::{check_params, Session};

#[derive(Debug, Parser)]
#[command(name = "picdna", version, about = "Progressive image storage on simulated DNA oligo pools")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Encode a directory of PGM/PPM images into an oligo pool.
    Encode(EncodeArgs),
    /// Sequence the thumbnail layer and write every thumbnail.
    Thumbnails(ThumbnailArgs),
    /// Progressively decode one image.
    Decode(DecodeArgs),
    /// Print the read-cost report of a pool, or check published counts.
    Cost(CostArgs),
    /// Decode success rate over a coverage grid.
    Sweep(SweepArgs),
    /// Serve the HTTP API.
    Serve(ServeArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum Mode {
    Poisson,
    Exact,
}

impl From<Mode> for SamplingMode {
    fn from(m: Mode) -> Self {
        match m {
            Mode::Poisson => SamplingMode::Poisson,
            Mode::Exact => SamplingMode::Exact,
        }
    }
}

/// Sequencing channel settings.
#[derive(Debug, Clone, Args)]
pub struct ChannelArgs {
    /// Substitution probability per base.
    #[arg(long, env = "PICDNA_SUB", default_value_t = ErrorRates::default().sub)]
    pub sub: f64,
    /// Insertion probability per base.
    #[arg(long, env = "PICDNA_INS", default_value_t = ErrorRates::default().ins)]
    pub ins: f64,
    /// Deletion probability per base.
    #[arg(long = "del", env = "PICDNA_DEL", default_value_t = ErrorRates::default().del)]
    pub del: f64,
    /// Read-count sampling per selected oligo.
    #[arg(long, env = "PICDNA_MODE", value_enum, default_value_t = Mode::Poisson)]
    pub mode: Mode,
    /// Primer edit-distance tolerance.
    #[arg(long, env = "PICDNA_TAU", default_value_t = DEFAULT_TAU)]
    pub tau: usize,
}

impl ChannelArgs {
    fn params(&self, coverage: f64, seed: u64) -> Result<DecodeParams, GatewayError> {
        let params = DecodeParams {
            coverage,
            rates: ErrorRates {
                sub: self.sub,
                ins: self.ins,
                del: self.del,
            },
            seed,
            mode: self.mode.into(),
            tau: self.tau,
        };
        check_params(&params)?;
        Ok(params)
    }
}

#[derive(Debug, Args)]
pub struct EncodeArgs {
    /// Directory of .pgm/.ppm images, encoded in file-name order.
    #[arg(long, env = "PICDNA_INPUT")]
    pub input: PathBuf,
    #[arg(long, env = "PICDNA_LEVELS", default_value_t = 5)]
    pub levels: usize,
    /// Quantization step of the detail bands; 1 is lossless.
    #[arg(long, env = "PICDNA_QUALITY", default_value_t = 1)]
    pub quality: u16,
    /// Primer generation seed.
    #[arg(long, env = "PICDNA_SEED", default_value_t = 0)]
    pub seed: u64,
    /// Pool FASTA path; the metadata sidecar is written next to it.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct ThumbnailArgs {
    #[arg(long, env = "PICDNA_POOL")]
    pub pool: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, env = "PICDNA_COVERAGE", default_value_t = 5.0)]
    pub coverage: f64,
    #[arg(long, env = "PICDNA_SEED", default_value_t = 0)]
    pub seed: u64,
    #[command(flatten)]
    pub channel: ChannelArgs,
}

#[derive(Debug, Args)]
pub struct DecodeArgs {
    #[arg(long, env = "PICDNA_POOL")]
    pub pool: PathBuf,
    #[arg(long, env = "PICDNA_IMAGE")]
    pub image: usize,
    /// Target resolution level; defaults to full size.
    #[arg(long, env = "PICDNA_LEVEL")]
    pub level: Option<usize>,
    #[arg(long, env = "PICDNA_COVERAGE", default_value_t = 5.0)]
    pub coverage: f64,
    #[arg(long, env = "PICDNA_SEED", default_value_t = 0)]
    pub seed: u64,
    #[command(flatten)]
    pub channel: ChannelArgs,
    /// Output image: .bmp, otherwise PGM/PPM.
    #[arg(long)]
    pub out: PathBuf,
    /// Per-layer decode trace and cost report as JSON.
    #[arg(long)]
    pub trace: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct CostArgs {
    #[arg(long, env = "PICDNA_POOL", required_unless_present = "table1_check")]
    pub pool: Option<PathBuf>,
    /// Target image of the random-access rows.
    #[arg(long, default_value_t = 0)]
    pub image: usize,
    /// One coverage for every layer, or one per layer, comma separated.
    #[arg(long, default_value = "1")]
    pub coverage: String,
    /// Print JSON instead of the text table.
    #[arg(long)]
    pub json: bool,
    /// Check gains computed from published cumulative counts.
    #[arg(long = "table1-check")]
    pub table1_check: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[arg(long, env = "PICDNA_POOL")]
    pub pool: PathBuf,
    #[arg(long, env = "PICDNA_IMAGE")]
    pub image: usize,
    /// Target level; defaults to full size.
    #[arg(long)]
    pub level: Option<usize>,
    /// `a..b` for every integer from a to b, or a comma-separated list.
    #[arg(long, default_value = "1..8")]
    pub coverages: String,
    /// Seeds per coverage.
    #[arg(long, default_value_t = 10)]
    pub seeds: usize,
    #[command(flatten)]
    pub channel: ChannelArgs,
}

#[derive(Debug, Args)]
pub struct ServeArgs {
    #[arg(long, env = "PICDNA_POOL")]
    pub pool: PathBuf,
    #[arg(long, env = "PICDNA_PORT", default_value_t = 8080)]
    pub port: u16,
    #[arg(long, env = "PICDNA_HOST", default_value = "127.0.0.1")]
    pub host: String,
    /// Default coverage for thumbnails and decode requests.
    #[arg(long, env = "PICDNA_COVERAGE", default_value_t = 5.0)]
    pub coverage: f64,
    #[arg(long, env = "PICDNA_SEED", default_value_t = 0)]
    pub seed: u64,
    #[command(flatten)]
    pub channel: ChannelArgs,
}

fn existing(path: &Path, what: &str) -> Result<(), GatewayError> {
    if path.exists() {
        Ok(())
    } else {
        Err(GatewayError::Usage(format!("{what} {} does not exist", path.display())))
    }
}

fn open_pool(path: &Path) -> Result<OligoPool, GatewayError> {
    existing(path, "pool")?;
    Ok(load_pool(path)?)
}

fn emit(out: &mut dyn Write, text: &str) -> Result<(), GatewayError> {
    writeln!(out, "{text}").map_err(|e| GatewayError::io(Path::new("<stdout>"), e))
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<(), GatewayError> {
    fs::write(path, bytes).map_err(|e| GatewayError::io(path, e))
}

/// BMP for a `.bmp` path, PGM/PPM otherwise.
fn write_image(path: &Path, img: &Image) -> Result<(), GatewayError> {
    let is_bmp = path
        .extension()
        .is_some_and(|e| e.eq_ignore_ascii_case("bmp"));
    if is_bmp {
        write_file(path, &bmp::encode(img))
    } else {
        write_file(path, &pnm::encode(img))
    }
}

/// `a..b` (inclusive, unit steps) or `x,y,z`.
pub fn parse_coverages(spec: &str) -> Result<Vec<f64>, GatewayError> {
    let bad = || GatewayError::Usage(format!("coverage list {spec:?}"));
    let values: Vec<f64> = if let Some((a, b)) = spec.split_once("..") {
        let (a, b): (u32, u32) = (a.trim().parse().map_err(|_| bad())?, b.trim().parse().map_err(|_| bad())?);
        (a..=b).map(f64::from).collect()
    } else {
        spec.split(',')
            .map(|v| v.trim().parse::<f64>().map_err(|_| bad()))
            .collect::<Result<_, _>>()?
    };
    if values.is_empty() || values.iter().any(|v| !v.is_finite() || *v < 0.0) {
        return Err(bad());
    }
    Ok(values)
}

fn encode(args: &EncodeArgs, out: &mut dyn Write) -> Result<(), GatewayError> {
    existing(&args.input, "input directory")?;
    let mut files: Vec<PathBuf> = fs::read_dir(&args.input)
        .map_err(|e| GatewayError::io(&args.input, e))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| {
            p.extension()
                .and_then(|e| e.to_str())
                .is_some_and(|e| e.eq_ignore_ascii_case("pgm") || e.eq_ignore_ascii_case("ppm"))
        })
        .collect();
    files.sort();
    if files.is_empty() {
        return Err(GatewayError::Usage(format!("no .pgm or .ppm files in {}", args.input.display())));
    }
    let images = files
        .iter()
        .enumerate()
        .map(|(i, f)| Ok((i, pnm::read(f)?)))
        .collect::<Result<Vec<_>, GatewayError>>()?;
    let registry = generate_registry(args.levels, images.len(), args.seed)
        .map_err(|e| GatewayError::InvalidParameters(e.to_string()))?;
    let pool = build_pool(&images, args.levels, args.quality, &registry)?;
    save_pool(&pool, &args.out)?;
    let listing: Vec<_> = files
        .iter()
        .zip(&images)
        .map(|(f, (i, img))| {
            json!({
                "imageId": i,
                "file": f.file_name().map(|n| n.to_string_lossy().into_owned()),
                "width": img.width(),
                "height": img.height(),
                "channels": img.channels(),
            })
        })
        .collect();
    let summary = json!({
        "pool": args.out,
        "oligos": pool.oligos.len(),
        "layerTotals": pool.layer_totals(),
        "images": listing,
    });
    emit(out, &summary.to_string())
}

fn thumbnails(args: &ThumbnailArgs, out: &mut dyn Write) -> Result<(), GatewayError> {
    let pool = open_pool(&args.pool)?;
    let params = args.channel.params(args.coverage, args.seed)?;
    fs::create_dir_all(&args.out).map_err(|e| GatewayError::io(&args.out, e))?;
    let (thumbs, summary) = pool_thumbnails(&pool, &params)?;
    let mut failed = Vec::new();
    let mut listing = Vec::new();
    for t in &thumbs {
        match &t.result {
            Ok((img, pair)) => {
                let ext = if img.channels() == 3 { "ppm" } else { "pgm" };
                let path = args.out.join(format!("thumb_{}.{ext}", t.image_id));
                write_image(&path, img)?;
                listing.push(json!({
                    "imageId": t.image_id,
                    "file": path,
                    "primerPairId": pool.registry.image_id_of(pair),
                }));
            }
            Err(f) => {
                failed.push(t.image_id);
                listing.push(json!({ "imageId": t.image_id, "error": f.to_string() }));
            }
        }
    }
    emit(out, &json!({ "thumbnails": listing, "summary": summary }).to_string())?;
    if failed.is_empty() {
        Ok(())
    } else {
        Err(GatewayError::ThumbnailsIncomplete(failed))
    }
}

fn decode(args: &DecodeArgs, out: &mut dyn Write) -> Result<(), GatewayError> {
    let pool = open_pool(&args.pool)?;
    let params = args.channel.params(args.coverage, args.seed)?;
    let pair = *pool
        .registry
        .image_pairs
        .get(args.image)
        .ok_or_else(|| GatewayError::UnknownImage(args.image.to_string()))?;
    let level = args.level.unwrap_or(pool.codec.num_levels - 1);
    let mut decoder = ProgressiveDecoder::new(&pool, &pair)?;
    match decoder.decode(level, &params) {
        Ok((img, step)) => {
            write_image(&args.out, &img)?;
            if let Some(trace) = &args.trace {
                write_file(trace, serde_json::to_string_pretty(&step).expect("step serializes").as_bytes())?;
            }
            let summary = json!({
                "imageId": step.image_id,
                "level": step.level,
                "width": step.width,
                "height": step.height,
                "out": args.out,
                "cumulativeNucleotides": step.cumulative_nucleotides,
                "cumulativeReadCost": step.cumulative_read_cost,
                "gpd": step.cost_report.gpd[level],
                "gra": step.cost_report.gra[level],
            });
            emit(out, &summary.to_string())
        }
        Err(e) => {
            if let (Some(path), DecodeError::Layer { layer, failure, trace, .. }) = (&args.trace, &e) {
                let doc = json!({ "failedLayer": layer, "failure": failure.to_string(), "trace": trace });
                write_file(path, serde_json::to_string_pretty(&doc).expect("trace serializes").as_bytes())?;
            }
            Err(e.into())
        }
    }
}

/// One expected row set of a published-count check.
#[derive(Debug, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct TableCheck {
    pub name: String,
    pub coverage: Vec<f64>,
    pub gpd: Vec<f64>,
    pub gra: Vec<f64>,
    /// Compare after rounding to this many significant digits...
    pub significant_digits: Option<i32>,
    /// ...or within this relative tolerance.
    pub relative_tolerance: Option<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct TableSpec {
    /// Oligos of all images through each layer.
    pub pool_oligos: Vec<u64>,
    /// All thumbnails plus one image's layers through each layer.
    pub random_access_oligos: Vec<u64>,
    pub checks: Vec<TableCheck>,
}

#[derive(Debug, Serialize)]
struct RowOutcome<'a> {
    check: &'a str,
    gain: &'static str,
    pass: bool,
    got: Vec<f64>,
    expected: &'a [f64],
}

fn row_matches(got: &[f64], want: &[f64], check: &TableCheck) -> Result<bool, GatewayError> {
    if got.len() != want.len() {
        return Ok(false);
    }
    let ok = |g: f64, w: f64| match (check.significant_digits, check.relative_tolerance) {
        (Some(d), None) => (round_sig(g, d) - w).abs() <= 1e-9 * w.abs().max(1.0),
        (None, Some(t)) => (g - w).abs() <= t * w.abs(),
        _ => false,
    };
    if check.significant_digits.is_some() == check.relative_tolerance.is_some() {
        return Err(GatewayError::InvalidParameters(format!(
            "check {:?} needs exactly one of significantDigits and relativeTolerance",
            check.name
        )));
    }
    Ok(got.iter().zip(want).all(|(&g, &w)| ok(g, w)))
}

fn table_check(path: &Path, out: &mut dyn Write) -> Result<(), GatewayError> {
    existing(path, "table check")?;
    let text = fs::read_to_string(path).map_err(|e| GatewayError::io(path, e))?;
    let spec: TableSpec =
        serde_json::from_str(&text).map_err(|e| GatewayError::InvalidParameters(format!("{}: {e}", path.display())))?;
    let mut failed = Vec::new();
    for check in &spec.checks {
        let inputs = CostInputs::from_cumulative(&spec.pool_oligos, &spec.random_access_oligos, &check.coverage, 1)?;
        let report = CostReport::compute(&inputs, 0)?;
        for (gain, got, want) in [("Gpd", &report.gpd, &check.gpd), ("Gra", &report.gra, &check.gra)] {
            let pass = row_matches(got, want, check)?;
            let shown: Vec<f64> = got.iter().map(|&g| round_sig(g, 4)).collect();
            emit(
                out,
                &format!(
                    "{} {} {gain}: got {shown:?} expected {want:?}",
                    if pass { "PASS" } else { "FAIL" },
                    check.name
                ),
            )?;
            let outcome = RowOutcome {
                check: &check.name,
                gain,
                pass,
                got: got.clone(),
                expected: want,
            };
            emit(out, &serde_json::to_string(&outcome).expect("outcome serializes"))?;
            if !pass {
                failed.push(format!("{} {gain}", check.name));
            }
        }
    }
    if failed.is_empty() {
        Ok(())
    } else {
        Err(GatewayError::TableMismatch(failed.join(", ")))
    }
}

fn cost(args: &CostArgs, out: &mut dyn Write) -> Result<(), GatewayError> {
    if let Some(check) = &args.table1_check {
        return table_check(check, out);
    }
    let path = args.pool.as_ref().expect("clap requires --pool without --table1-check");
    let pool = open_pool(path)?;
    let levels = pool.codec.num_levels;
    let mut coverage = parse_coverages(&args.coverage)?;
    if coverage.len() == 1 {
        coverage = vec![coverage[0]; levels];
    }
    if coverage.len() != levels {
        return Err(GatewayError::Usage(format!("need 1 or {levels} coverages, got {}", coverage.len())));
    }
    let pair = *pool
        .registry
        .image_pairs
        .get(args.image)
        .ok_or_else(|| GatewayError::UnknownImage(args.image.to_string()))?;
    let (full, _) = picdna_core::reconstruct::decode_image(&pool, &pair, levels - 1, &DecodeParams::noiseless())?;
    let pixels = (full.width() * full.height()) as u64;
    let (inputs, ids) = CostInputs::from_manifest(&pool.manifest, levels, &coverage, pixels)?;
    let row = ids
        .iter()
        .position(|&i| i == args.image)
        .ok_or_else(|| GatewayError::UnknownImage(args.image.to_string()))?;
    let report = CostReport::compute(&inputs, row)?;
    if args.json {
        emit(out, &report.to_json())
    } else {
        emit(out, report.to_table().trim_end())
    }
}

fn sweep(args: &SweepArgs, out: &mut dyn Write) -> Result<(), GatewayError> {
    let pool = open_pool(&args.pool)?;
    let coverages = parse_coverages(&args.coverages)?;
    let params = args.channel.params(1.0, 0)?;
    let level = args.level.unwrap_or(pool.codec.num_levels - 1);
    if level >= pool.codec.num_levels {
        return Err(GatewayError::InvalidParameters(format!("level {level}")));
    }
    if args.image >= pool.registry.num_images() {
        return Err(GatewayError::UnknownImage(args.image.to_string()));
    }
    let rows = coverage_sweep(&pool, args.image, level, &params.rates, &coverages, args.seeds, params.mode)?;
    for r in rows {
        emit(out, &serde_json::to_string(&r).expect("row serializes"))?;
    }
    Ok(())
}

fn serve(args: &ServeArgs, out: &mut dyn Write) -> Result<(), GatewayError> {
    let pool = open_pool(&args.pool)?;
    let params = args.channel.params(args.coverage, args.seed)?;
    let session = Arc::new(Session::new(pool, params)?);
    let addr: SocketAddr = format!("{}:{}", args.host, args.port)
        .parse()
        .map_err(|_| GatewayError::Usage(format!("bad host {:?}", args.host)))?;
    let runtime = tokio::runtime::Runtime::new().map_err(|e| GatewayError::Internal(e.to_string()))?;
    runtime.block_on(async {
        let listener = tokio::net::TcpListener::bind(addr)
            .await
            .map_err(|e| GatewayError::io(Path::new(&addr.to_string()), e))?;
        let local = listener.local_addr().map_err(|e| GatewayError::Internal(e.to_string()))?;
        emit(out, &json!({ "listening": local.to_string() }).to_string())?;
        out.flush().map_err(|e| GatewayError::io(Path::new("<stdout>"), e))?;
        crate::http::serve(listener, session)
            .await
            .map_err(|e| GatewayError::Internal(e.to_string()))
    })
}

pub fn run(cli: &Cli, out: &mut dyn Write) -> Result<(), GatewayError> {
    match &cli.command {
        Command::Encode(a) => encode(a, out),
        Command::Thumbnails(a) => thumbnails(a, out),
        Command::Decode(a) => decode(a, out),
        Command::Cost(a) => cost(a, out),
        Command::Sweep(a) => sweep(a, out),
        Command::Serve(a) => serve(a, out),
    }
}

/// Parses `argv`, runs the command and returns the process exit status.
/// Failures print one JSON error line on stderr.
pub fn main_with<I, T>(argv: I) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return 0;
        }
        Err(e) => {
            let err = GatewayError::Usage(e.render().to_string().trim().to_string());
            eprintln!("{}", err.to_json_line());
            return err.exit_code();
        }
    };
    let stdout = std::io::stdout();
    let mut lock = stdout.lock();
    match run(&cli, &mut lock) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("{}", e.to_json_line());
            e.exit_code()
        }
    }
}
