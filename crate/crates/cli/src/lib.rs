#![allow(clippy::neg_cmp_op_on_partial_ord)]

//! The `corm` command-line tool.
//!
//! Every command reads a TOML spec file, writes its reports into `--out`
//! and exits with a code drawn from the verdict lattice:
//!
//! | code | meaning                                  |
//! |------|------------------------------------------|
//! | 0    | well posed / all checks pass             |
//! | 1    | ill posed / a check fails                |
//! | 2    | inconclusive or numerical failure        |
//! | 64   | usage error, unreadable or invalid input |

use std::ffi::OsString;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicBool, Ordering};

use clap::{Args, Parser, Subcommand};
use corm_core::expcorm::{sample_points, verify_exp_intensity};
use corm_core::integrability::conditions_csv;
use corm_core::quad::DerivativeConfig;
use corm_core::sim::{draw_replication, validate_tails, SimOptions, Truncation};
use corm_core::tails::{
    log_grid, tail_table_csv, verify_tail_factorization, RvVerdict, TailsConfig,
};
use corm_core::{check_corm, load_spec, CheckOptions, CormSpec, Error, Posedness, QuadConfig};
use serde::Serialize;
use sha2::{Digest, Sha256};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAIL: i32 = 1;
pub const EXIT_INCONCLUSIVE: i32 = 2;
pub const EXIT_USAGE: i32 = 64;

#[derive(Parser, Debug)]
#[command(
    name = "corm",
    version,
    about = "Well-posedness, intensities and simulation of compound random measures"
)]
struct Cli {
    /// Suppress the summary on stdout; reports are still written.
    #[arg(long, short, global = true)]
    quiet: bool,
    #[command(subcommand)]
    command: Command,
}

static QUIET: AtomicBool = AtomicBool::new(false);

macro_rules! say {
    ($($arg:tt)*) => {
        if !QUIET.load(Ordering::Relaxed) {
            println!($($arg)*);
        }
    };
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Decide whether the spec defines a vector of CRMs.
    Check(CheckArgs),
    /// Tabulate marginal tail integrals and estimate their index.
    Tails(TailsArgs),
    /// Compare the exponential-score intensity with its derivative form.
    VerifyIntensity(VerifyArgs),
    /// Draw truncated series realisations and validate tail counts.
    Simulate(SimulateArgs),
}

#[derive(Args, Debug)]
struct Common {
    /// Spec file (TOML).
    #[arg(long)]
    spec: PathBuf,
    /// Output directory for reports.
    #[arg(long, default_value = "corm-out")]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct CheckArgs {
    #[command(flatten)]
    common: Common,
    /// Also evaluate the joint Lévy integral by nested quadrature (d ≤ 3).
    #[arg(long)]
    direct: bool,
}

#[derive(Args, Debug)]
struct TailsArgs {
    #[command(flatten)]
    common: Common,
    /// Log-spaced threshold grid `lo:hi:n`.
    #[arg(long, default_value = "1e-6:1e-1:50", value_parser = parse_grid)]
    grid: Grid,
    /// Allowed gap between estimated and directing index.
    #[arg(long, default_value_t = 0.02)]
    tol: f64,
    /// Run even if the spec is not well posed.
    #[arg(long)]
    force: bool,
}

#[derive(Args, Debug)]
struct VerifyArgs {
    #[command(flatten)]
    common: Common,
    /// Dimensions to test, comma separated; defaults to the spec dimension.
    #[arg(long, value_delimiter = ',')]
    d: Vec<usize>,
    /// Relative tolerance; a point passes when its deviation is strictly
    /// below it.
    #[arg(long, default_value_t = 1e-5)]
    tol: f64,
    /// Random points per dimension.
    #[arg(long, default_value_t = 20)]
    points: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args, Debug)]
struct SimulateArgs {
    #[command(flatten)]
    common: Common,
    /// Monte Carlo replications.
    #[arg(long, default_value_t = 1000)]
    reps: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Jumps below this are dropped.
    #[arg(long, default_value_t = 1e-8)]
    truncation: f64,
    #[arg(long, default_value_t = 100_000)]
    max_atoms: usize,
    /// Thresholds for the tail-count validation, comma separated.
    #[arg(long, value_delimiter = ',', default_value = "0.5,1,2,5")]
    thresholds: Vec<f64>,
    /// Run even if the spec is not well posed.
    #[arg(long)]
    force: bool,
}

#[derive(Debug, Clone, Copy)]
struct Grid {
    lo: f64,
    hi: f64,
    n: usize,
}

fn parse_grid(s: &str) -> Result<Grid, String> {
    let parts: Vec<&str> = s.split(':').collect();
    let [lo, hi, n] = parts[..] else {
        return Err(format!("expected lo:hi:n, got `{s}`"));
    };
    let lo: f64 = lo.parse().map_err(|e| format!("lo: {e}"))?;
    let hi: f64 = hi.parse().map_err(|e| format!("hi: {e}"))?;
    let n: usize = n.parse().map_err(|e| format!("n: {e}"))?;
    if n < 2 || !(lo > 0.0) || !(hi > lo) || !hi.is_finite() {
        return Err(format!("grid needs 0 < lo < hi < ∞ and n ≥ 2, got `{s}`"));
    }
    Ok(Grid { lo, hi, n })
}

/// Run metadata written next to every report.
#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: Vec<String>,
    pub spec_path: String,
    pub spec_sha256: String,
    pub seed: Option<u64>,
    pub quad: QuadConfig,
    pub outputs: Vec<String>,
    pub exit_code: i32,
    pub timestamp: String,
}

/// Failure that maps to an exit code.
#[derive(Debug)]
struct Failure {
    code: i32,
    message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::SpecFile(_)
            | Error::InvalidArgument(_)
            | Error::NonPositiveParameter { .. }
            | Error::InvalidIndex { .. }
            | Error::DimensionMismatch { .. }
            | Error::NotNormalised { .. }
            | Error::UnsupportedFamily(_)
            | Error::NonExponentialScores
            | Error::DegenerateGrid(_) => EXIT_USAGE,
            Error::IllPosedSpec(_) => EXIT_FAIL,
            _ => EXIT_INCONCLUSIVE,
        };
        Failure {
            code,
            message: e.to_string(),
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure {
            code: EXIT_INCONCLUSIVE,
            message: format!("i/o error: {e}"),
        }
    }
}

fn usage(message: impl Into<String>) -> Failure {
    Failure {
        code: EXIT_USAGE,
        message: message.into(),
    }
}

/// Collects report files and writes them atomically with a manifest.
struct Reports {
    dir: PathBuf,
    files: Vec<(String, String)>,
}

impl Reports {
    fn new(dir: &Path) -> Self {
        Self {
            dir: dir.to_owned(),
            files: Vec::new(),
        }
    }

    fn add(&mut self, name: impl Into<String>, contents: String) {
        self.files.push((name.into(), contents));
    }

    fn write(mut self, mut manifest: RunManifest) -> Result<(), Failure> {
        std::fs::create_dir_all(&self.dir)?;
        manifest.outputs = self.files.iter().map(|f| f.0.clone()).collect();
        let json = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
        self.files.push(("manifest.json".into(), json + "\n"));
        for (name, contents) in &self.files {
            let mut tmp = tempfile::NamedTempFile::new_in(&self.dir)?;
            tmp.write_all(contents.as_bytes())?;
            tmp.persist(self.dir.join(name)).map_err(|e| e.error)?;
        }
        Ok(())
    }
}

fn json<T: Serialize>(value: &T) -> String {
    serde_json::to_string_pretty(value).expect("report serializes") + "\n"
}

struct Loaded {
    spec: CormSpec,
    path: String,
    sha256: String,
}

fn load(path: &Path) -> Result<Loaded, Failure> {
    let bytes = std::fs::read(path).map_err(|e| usage(format!("{}: {e}", path.display())))?;
    let spec = load_spec(path)?;
    Ok(Loaded {
        spec,
        path: path.display().to_string(),
        sha256: Sha256::digest(&bytes)
            .iter()
            .map(|b| format!("{b:02x}"))
            .collect(),
    })
}

fn manifest(command: &[String], loaded: &Loaded, seed: Option<u64>, exit_code: i32) -> RunManifest {
    RunManifest {
        tool: "corm",
        version: env!("CARGO_PKG_VERSION"),
        command: command.to_vec(),
        spec_path: loaded.path.clone(),
        spec_sha256: loaded.sha256.clone(),
        seed,
        quad: QuadConfig::default(),
        outputs: Vec::new(),
        exit_code,
        timestamp: chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true),
    }
}

fn posedness_name(p: Posedness) -> &'static str {
    match p {
        Posedness::WellPosed => "well-posed",
        Posedness::IllPosed => "ill-posed",
        Posedness::Inconclusive => "inconclusive",
    }
}

/// Refuses ill-posed and inconclusive specs unless forced.
fn gate(spec: &CormSpec, force: bool) -> Result<(), Failure> {
    if force {
        return Ok(());
    }
    let v = check_corm(spec, &CheckOptions::default())?;
    match v.multivariate {
        Posedness::WellPosed => Ok(()),
        p => Err(Failure {
            code: p.exit_code(),
            message: format!(
                "spec is {}; rerun with --force to proceed anyway",
                posedness_name(p)
            ),
        }),
    }
}

fn cmd_check(args: &CheckArgs, command: &[String]) -> Result<i32, Failure> {
    let loaded = load(&args.common.spec)?;
    let options = CheckOptions {
        direct: args.direct,
        ..CheckOptions::default()
    };
    let verdict = check_corm(&loaded.spec, &options)?;
    for m in &verdict.marginals {
        say!(
            "marginal {}: {} x {}: {}",
            m.j,
            m.score,
            m.directing,
            posedness_name(m.overall)
        );
    }
    if let Some(d) = &verdict.direct {
        say!(
            "joint integral: {:e} (bound {:e}, within: {})",
            d.result.value,
            d.bound,
            d.within_bound
        );
    }
    say!("verdict: {}", posedness_name(verdict.multivariate));
    let code = verdict.multivariate.exit_code();
    let mut reports = Reports::new(&args.common.out);
    reports.add("verdict.json", json(&verdict));
    reports.add("conditions.csv", conditions_csv(&verdict));
    reports.write(manifest(command, &loaded, None, code))?;
    Ok(code)
}

#[derive(Serialize)]
struct TailsSummary<'a> {
    j: usize,
    directing_index: f64,
    moment: f64,
    max_factor_deviation: f64,
    index_matches: bool,
    diagnostic: &'a corm_core::RvDiagnostic,
}

fn cmd_tails(args: &TailsArgs, command: &[String]) -> Result<i32, Failure> {
    let loaded = load(&args.common.spec)?;
    gate(&loaded.spec, args.force)?;
    let config = TailsConfig {
        grid: log_grid(args.grid.lo, args.grid.hi, args.grid.n)?,
        index_tol: args.tol,
        ..TailsConfig::default()
    };
    let spec = &loaded.spec;
    let mut reports = Reports::new(&args.common.out);
    let mut summaries = Vec::new();
    let mut code = EXIT_OK;
    for j in 0..spec.dim() {
        let r = verify_tail_factorization(j + 1, spec.score.marginal(j), &spec.directing, &config)?;
        let estimate = match r.diagnostic.verdict {
            RvVerdict::RegularlyVarying { index } => format!("{index:.4}"),
            RvVerdict::NotDetected => "not detected".into(),
        };
        say!(
            "marginal {}: index {} (directing {}), factor {:.6e}, max factor deviation {:.2e}",
            j + 1,
            estimate,
            r.directing_index,
            r.moment,
            r.max_factor_deviation
        );
        if !r.index_matches {
            // a slowly varying directing tail is not separable from a small
            // positive index on a finite grid
            let this = if r.directing_index == 0.0 {
                EXIT_INCONCLUSIVE
            } else {
                EXIT_FAIL
            };
            code = code.max(this);
        }
        reports.add(format!("tails_{}.csv", j + 1), tail_table_csv(&r.table));
        summaries.push(json(&TailsSummary {
            j: r.j,
            directing_index: r.directing_index,
            moment: r.moment,
            max_factor_deviation: r.max_factor_deviation,
            index_matches: r.index_matches,
            diagnostic: &r.diagnostic,
        }));
    }
    reports.add("rv_index.json", format!("[\n{}]\n", summaries.join(",\n")));
    reports.write(manifest(command, &loaded, None, code))?;
    Ok(code)
}

fn cmd_verify(args: &VerifyArgs, command: &[String]) -> Result<i32, Failure> {
    let loaded = load(&args.common.spec)?;
    if !loaded.spec.score.all_standard_exponential() {
        return Err(Error::NonExponentialScores.into());
    }
    if args.points == 0 {
        return Err(usage("--points must be at least 1"));
    }
    if !(args.tol >= 0.0) {
        return Err(usage("--tol must be non-negative"));
    }
    let dims = if args.d.is_empty() {
        vec![loaded.spec.dim()]
    } else {
        args.d.clone()
    };
    if dims.contains(&0) {
        return Err(usage("dimensions must be at least 1"));
    }
    let points: Vec<Vec<f64>> = dims
        .iter()
        .flat_map(|&d| sample_points(d, args.points, args.seed ^ d as u64))
        .collect();
    let report = verify_exp_intensity(
        &loaded.spec.directing,
        &points,
        args.tol,
        &QuadConfig::default(),
        &DerivativeConfig::default(),
    )?;
    let failed = report.rows.iter().filter(|r| !r.pass).count();
    say!(
        "{}: {} points, {} failed, max relative deviation {:.3e} (tol {:e})",
        report.directing,
        report.rows.len(),
        failed,
        report.max_rel_dev,
        args.tol
    );
    let code = if report.all_pass { EXIT_OK } else { EXIT_FAIL };
    let mut reports = Reports::new(&args.common.out);
    reports.add("intensity.csv", report.to_csv());
    reports.write(manifest(command, &loaded, Some(args.seed), code))?;
    Ok(code)
}

fn cmd_simulate(args: &SimulateArgs, command: &[String]) -> Result<i32, Failure> {
    if args.reps < 2 {
        return Err(usage("--reps must be at least 2"));
    }
    let loaded = load(&args.common.spec)?;
    gate(&loaded.spec, args.force)?;
    let options = SimOptions {
        truncation: Truncation {
            min_jump: args.truncation,
            max_atoms: args.max_atoms,
            strict: false,
        },
        force: true,
    };
    let spec = &loaded.spec;
    let draw = draw_replication(spec, &options.truncation, args.seed, 0)?;
    let report = validate_tails(spec, &args.thresholds, args.reps, args.seed, &options)?;
    for r in &report.rows {
        say!(
            "j={} y={}: mean {:.4} expected {:.4} ({:+.2} se){}",
            r.j,
            r.y,
            r.mean_count,
            r.expected,
            r.deviation,
            if r.excluded {
                " [excluded: truncation bias]"
            } else {
                ""
            }
        );
    }
    say!(
        "{:.1}% of thresholds within {} standard errors",
        100.0 * report.fraction_within,
        report.z_limit
    );
    let code = if report.pass { EXIT_OK } else { EXIT_FAIL };
    let mut reports = Reports::new(&args.common.out);
    reports.add("atoms.csv", draw.to_csv(spec.dim()));
    reports.add("sim_report.csv", report.to_csv());
    reports.write(manifest(command, &loaded, Some(args.seed), code))?;
    Ok(code)
}

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let args: Vec<OsString> = args.into_iter().map(Into::into).collect();
    let cli = match Cli::try_parse_from(&args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    QUIET.store(cli.quiet, Ordering::Relaxed);
    let command: Vec<String> = args
        .iter()
        .skip(1)
        .map(|a| a.to_string_lossy().into_owned())
        .collect();
    let result = match &cli.command {
        Command::Check(a) => cmd_check(a, &command),
        Command::Tails(a) => cmd_tails(a, &command),
        Command::VerifyIntensity(a) => cmd_verify(a, &command),
        Command::Simulate(a) => cmd_simulate(a, &command),
    };
    match result {
        Ok(code) => code,
        Err(f) => {
            eprintln!("error: {}", f.message);
            f.code
        }
    }
}
