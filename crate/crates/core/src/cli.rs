//! Command-line front end.
//!
//! Exit codes: 0 success, 1 a `diagnose` check failed, 2 malformed config
//! or usage (including over-budget word enumerations), 3 non-convergence,
//! 4 condition alpha or beta fails under `validate`, 5 I/O and other
//! runtime errors.

use std::ffi::OsString;
use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use serde_json::json;

use crate::codespace::{project_from_box, CodeStream};
use crate::config::SystemConfig;
use crate::error::Error;
use crate::geometry::{hausdorff, PointSet};
use crate::render::{chaos_game, rasterize};
use crate::system::{
    attractor, check_proof_inequalities, falsify_beta, hutchinson_iterates, random_cloud,
    validate_alpha, AttractorResult, IFSSystem, RateCertificate,
};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CHECK_FAILED: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_NONCONVERGENCE: i32 = 3;
pub const EXIT_COUNTEREXAMPLE: i32 = 4;
pub const EXIT_RUNTIME: i32 = 5;

/// Cap on points kept per iterate by `certify --against`.
const CERTIFY_MAX_POINTS: usize = 1 << 22;

#[derive(Debug, Parser)]
#[command(
    name = "convex-ifs",
    version,
    about = "Attractors of convex-contraction iterated function systems"
)]
struct Cli {
    /// Worker threads; numeric results do not depend on it.
    #[arg(long, global = true, env = "CONVEX_IFS_THREADS")]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Check condition alpha and search for beta counterexamples.
    Validate {
        config: PathBuf,
        #[arg(long, default_value_t = 100_000)]
        samples: usize,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Run the attractor engine and write the cloud as CSV.
    Attract {
        config: PathBuf,
        #[arg(short, long)]
        output: PathBuf,
        #[arg(long)]
        report: Option<PathBuf>,
        #[command(flatten)]
        engine: EngineArgs,
    },
    /// Print the rate certificate for n = 0..=N.
    Certify {
        config: PathBuf,
        #[arg(short = 'n', long = "steps", default_value_t = 20)]
        steps: usize,
        /// Reference cloud (CSV) to measure h(F^n(B_0), REF) against.
        #[arg(long)]
        against: Option<PathBuf>,
        /// Decimation radius for the measured iterates.
        #[arg(long, default_value_t = 0.0)]
        eps: f64,
        #[arg(long)]
        start: Option<String>,
    },
    /// Approximate the point with address `--word`.
    Project {
        config: PathBuf,
        /// `preamble|cycle`, e.g. `1|2` for 1222...
        #[arg(long)]
        word: String,
        #[arg(long)]
        tol: Option<f64>,
    },
    /// Rasterize a chaos-game orbit (or the deterministic cloud) to PGM.
    Render {
        config: PathBuf,
        #[arg(short, long)]
        output: PathBuf,
        #[arg(long, default_value = "512x512")]
        size: String,
        #[arg(long, default_value_t = 100_000)]
        iters: usize,
        #[arg(long, default_value_t = 100)]
        burn_in: usize,
        #[arg(long)]
        seed: Option<u64>,
        /// Draw the attractor-engine cloud instead of a random orbit.
        #[arg(long)]
        deterministic: bool,
        /// Also write the plotted points as CSV.
        #[arg(long)]
        points: Option<PathBuf>,
    },
    /// Tabulate x_k, y_k and check the contraction inequalities.
    Diagnose {
        config: PathBuf,
        #[arg(long, default_value_t = 12)]
        depth: usize,
        /// Number of random (Y, Z) pairs.
        #[arg(long, default_value_t = 1)]
        pairs: usize,
        /// Points per random cloud.
        #[arg(long, default_value_t = 3)]
        points: usize,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, default_value_t = 1e-12)]
        slack: f64,
    },
}

#[derive(Debug, Args)]
struct EngineArgs {
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long)]
    eps: Option<f64>,
    #[arg(long)]
    max_iter: Option<usize>,
    /// Starting points separated by `;`, coordinates by `,` (e.g. `0.9;0.2`).
    #[arg(long)]
    start: Option<String>,
}

/// JSON report written by `attract --report`.
#[derive(Debug, Serialize)]
pub struct AttractReport {
    pub converged: bool,
    pub iterations: usize,
    pub points: usize,
    pub step_gap: f64,
    pub rate_bound: f64,
    pub decimation_budget: f64,
    pub cloud_file: String,
}

impl AttractReport {
    fn new(r: &AttractorResult, converged: bool, cloud_file: &Path) -> Self {
        AttractReport {
            converged,
            iterations: r.iterations,
            points: r.cloud.len(),
            step_gap: r.step_gap,
            rate_bound: r.rate_bound,
            decimation_budget: r.decimation_budget,
            cloud_file: cloud_file.display().to_string(),
        }
    }
}

struct Failure {
    code: i32,
    message: String,
}

impl Failure {
    fn new(code: i32, message: impl Into<String>) -> Self {
        Failure {
            code,
            message: message.into(),
        }
    }

    fn config(e: impl std::fmt::Display) -> Self {
        Failure::new(EXIT_CONFIG, format!("config error: {e}"))
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match &e {
            Error::Parse(_) | Error::BudgetExceeded { .. } => EXIT_CONFIG,
            Error::AttractorNonConvergence(_)
            | Error::ProjectionNonConvergence { .. }
            | Error::PicardNonConvergence { .. } => EXIT_NONCONVERGENCE,
            _ => EXIT_RUNTIME,
        };
        Failure::new(code, e.to_string())
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::new(EXIT_RUNTIME, e.to_string())
    }
}

type CmdResult = std::result::Result<i32, Failure>;

/// Parses `argv` (including the program name), runs the command and
/// returns the process exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    if let Some(n) = cli.threads {
        // Fails harmlessly if a pool was already installed in this process.
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global();
    }
    let stdout = std::io::stdout();
    let mut out = stdout.lock();
    match dispatch(cli.command, &mut out) {
        Ok(code) => code,
        Err(f) => {
            let _ = out.flush();
            eprintln!("error: {}", f.message);
            f.code
        }
    }
}

fn load(path: &Path) -> std::result::Result<(SystemConfig, IFSSystem), Failure> {
    let cfg = SystemConfig::load(path).map_err(Failure::config)?;
    let system = cfg.build().map_err(Failure::config)?;
    Ok((cfg, system))
}

fn parse_points(text: &str, dim: usize) -> std::result::Result<PointSet, Failure> {
    let mut coords = Vec::new();
    for (k, p) in text.split(';').enumerate() {
        let v: Vec<f64> = p
            .split(',')
            .map(|t| t.trim().parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| Failure::new(EXIT_CONFIG, format!("--start point {k}: {e}")))?;
        if v.len() != dim {
            return Err(Failure::new(
                EXIT_CONFIG,
                format!(
                    "--start point {k}: expected {dim} coordinates, got {}",
                    v.len()
                ),
            ));
        }
        coords.extend(v);
    }
    PointSet::new(dim, coords).map_err(|e| Failure::new(EXIT_CONFIG, format!("--start: {e}")))
}

fn start_cloud(cfg: &SystemConfig, start: Option<&str>) -> std::result::Result<PointSet, Failure> {
    match start {
        Some(s) => parse_points(s, cfg.dim),
        None => cfg.start_cloud().map_err(Failure::config),
    }
}

fn write_csv(path: &Path, cloud: &PointSet) -> std::io::Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    cloud.write_csv(&mut w)?;
    w.flush()
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> std::io::Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    serde_json::to_writer_pretty(&mut w, value)?;
    writeln!(w)?;
    w.flush()
}

fn print_json(out: &mut dyn Write, value: &serde_json::Value) -> std::io::Result<()> {
    writeln!(
        out,
        "{}",
        serde_json::to_string(value).expect("json value serializes")
    )
}

/// Rounds to the decimal grid `10^-k` with `10^-k <= tol`, so the printed
/// value moves by at most `tol / 2`.
fn round_to_tol(coords: &[f64], tol: f64) -> Vec<f64> {
    let k = (-tol.log10()).ceil().clamp(0.0, 15.0) as i32;
    let scale = 10f64.powi(k);
    coords.iter().map(|x| (x * scale).round() / scale).collect()
}

fn parse_size(s: &str) -> std::result::Result<(usize, usize), Failure> {
    let bad = || Failure::new(EXIT_CONFIG, format!("--size must be WxH, got {s:?}"));
    let (w, h) = s.split_once(['x', 'X']).ok_or_else(bad)?;
    Ok((
        w.trim().parse().map_err(|_| bad())?,
        h.trim().parse().map_err(|_| bad())?,
    ))
}

fn dispatch(command: Command, out: &mut dyn Write) -> CmdResult {
    match command {
        Command::Validate {
            config,
            samples,
            seed,
        } => {
            let (cfg, system) = load(&config)?;
            let ids = cfg.member_ids();
            let d = match validate_alpha(system.table()) {
                Ok(d) => d,
                Err(Error::AlphaViolation { i, j, value }) => {
                    print_json(
                        out,
                        &json!({"status": "alpha_violation", "i": ids[i], "j": ids[j], "d_ij": value}),
                    )?;
                    return Ok(EXIT_COUNTEREXAMPLE);
                }
                Err(e) => return Err(e.into()),
            };
            let seed = seed.unwrap_or(cfg.defaults.seed);
            match falsify_beta(&system, samples, seed) {
                Some(cx) => {
                    print_json(
                        out,
                        &json!({
                            "status": "counterexample",
                            "i": ids[cx.i], "j": ids[cx.j],
                            "x": cx.x, "y": cx.y, "lhs": cx.lhs, "rhs": cx.rhs,
                        }),
                    )?;
                    Ok(EXIT_COUNTEREXAMPLE)
                }
                None => {
                    print_json(
                        out,
                        &json!({"status": "ok", "d": d, "samples": samples, "seed": seed}),
                    )?;
                    Ok(EXIT_OK)
                }
            }
        }
        Command::Attract {
            config,
            output,
            report,
            engine,
        } => {
            let (cfg, system) = load(&config)?;
            let b0 = start_cloud(&cfg, engine.start.as_deref())?;
            let mut opts = cfg.defaults.attractor_options();
            opts.tol = engine.tol.unwrap_or(opts.tol);
            opts.eps_decimate = engine.eps.unwrap_or(opts.eps_decimate);
            opts.max_iter = engine.max_iter.unwrap_or(opts.max_iter);
            let (result, converged) = match attractor(&system, &b0, &opts) {
                Ok(r) => (r, true),
                Err(Error::AttractorNonConvergence(r)) => (*r, false),
                Err(e) => return Err(e.into()),
            };
            write_csv(&output, &result.cloud)?;
            let rep = AttractReport::new(&result, converged, &output);
            if let Some(path) = report {
                write_json(&path, &rep)?;
            }
            print_json(out, &serde_json::to_value(&rep).expect("report serializes"))?;
            if converged {
                Ok(EXIT_OK)
            } else {
                Err(Failure::new(
                    EXIT_NONCONVERGENCE,
                    format!(
                        "no convergence after {} iterations (step gap {}); last iterate written",
                        result.iterations, result.step_gap
                    ),
                ))
            }
        }
        Command::Certify {
            config,
            steps,
            against,
            eps,
            start,
        } => {
            let (cfg, system) = load(&config)?;
            let b0 = start_cloud(&cfg, start.as_deref())?;
            let cert = RateCertificate::new(&system, &b0)?;
            print_json(out, &json!({"d": cert.d, "x0": cert.x0, "x1": cert.x1}))?;
            let measured = match against {
                Some(path) => {
                    let reference = PointSet::read_csv(BufReader::new(File::open(&path)?))
                        .map_err(|e| {
                            Failure::new(EXIT_CONFIG, format!("{}: {e}", path.display()))
                        })?;
                    let iterates =
                        hutchinson_iterates(&system, &b0, steps, eps, CERTIFY_MAX_POINTS)?;
                    Some(
                        iterates
                            .iter()
                            .map(|b| hausdorff(b, &reference))
                            .collect::<crate::error::Result<Vec<_>>>()?,
                    )
                }
                None => None,
            };
            for n in 0..=steps {
                let mut row = json!({"n": n, "bound": cert.bound(n)});
                if let Some(m) = &measured {
                    row["measured"] = m.get(n).map_or(serde_json::Value::Null, |&v| json!(v));
                }
                print_json(out, &row)?;
            }
            Ok(EXIT_OK)
        }
        Command::Project { config, word, tol } => {
            let (cfg, system) = load(&config)?;
            let stream: CodeStream = word
                .parse()
                .map_err(|e| Failure::new(EXIT_CONFIG, format!("--word: {e}")))?;
            stream
                .check_symbols(system.len())
                .map_err(|e| Failure::new(EXIT_CONFIG, format!("--word: {e}")))?;
            let tol = tol.unwrap_or(cfg.defaults.tol);
            let r = project_from_box(&system, &stream, tol)?;
            print_json(
                out,
                &json!({
                    "word": stream.to_string(),
                    "point": round_to_tol(r.point.coords(), tol),
                    "raw": r.point.coords(),
                    "depth": r.depth,
                    "residual": r.residual_diam,
                }),
            )?;
            Ok(EXIT_OK)
        }
        Command::Render {
            config,
            output,
            size,
            iters,
            burn_in,
            seed,
            deterministic,
            points,
        } => {
            let (cfg, system) = load(&config)?;
            let (w, h) = parse_size(&size)?;
            let cloud = if deterministic {
                let b0 = cfg.start_cloud().map_err(Failure::config)?;
                attractor(&system, &b0, &cfg.defaults.attractor_options())?.cloud
            } else {
                chaos_game(&system, iters, burn_in, seed.unwrap_or(cfg.defaults.seed))
                    .map_err(|e| Failure::new(EXIT_CONFIG, e.to_string()))?
            };
            let raster = rasterize(&cloud, w, h, system.domain())
                .map_err(|e| Failure::new(EXIT_CONFIG, e.to_string()))?;
            let mut f = BufWriter::new(File::create(&output)?);
            raster.write_pgm(&mut f)?;
            if let Some(p) = points {
                write_csv(&p, &cloud)?;
            }
            print_json(
                out,
                &json!({"width": w, "height": h, "plotted": raster.total(), "dropped": raster.dropped(), "image": output.display().to_string()}),
            )?;
            Ok(EXIT_OK)
        }
        Command::Diagnose {
            config,
            depth,
            pairs,
            points,
            seed,
            slack,
        } => {
            let (cfg, system) = load(&config)?;
            let seed = seed.unwrap_or(cfg.defaults.seed);
            let mut all_pass = true;
            for p in 0..pairs as u64 {
                let y = random_cloud(system.domain(), points, seed.wrapping_add(2 * p));
                let z = random_cloud(system.domain(), points, seed.wrapping_add(2 * p + 1));
                let report = check_proof_inequalities(&system, &y, &z, depth, slack)?;
                writeln!(out, "pair {p}: d = {}", report.d)?;
                writeln!(
                    out,
                    "{:>3}  {:>24}  {:>24}  {:>24}",
                    "k", "x_k", "y_k", "h(F^k Y, F^k Z)"
                )?;
                for k in 0..=depth {
                    let yk = report
                        .diagnostics
                        .y(k)
                        .map_or_else(|| "-".to_string(), |v| format!("{v:.16e}"));
                    writeln!(
                        out,
                        "{k:>3}  {:>24.16e}  {yk:>24}  {:>24.16e}",
                        report.diagnostics.x[k], report.hausdorff[k]
                    )?;
                }
                for v in &report.violations {
                    writeln!(
                        out,
                        "violation {:?} at k = {}: {} > {}",
                        v.check, v.k, v.lhs, v.rhs
                    )?;
                }
                writeln!(
                    out,
                    "pair {p}: {}",
                    if report.passes() { "PASS" } else { "FAIL" }
                )?;
                all_pass &= report.passes();
            }
            Ok(if all_pass { EXIT_OK } else { EXIT_CHECK_FAILED })
        }
    }
}
