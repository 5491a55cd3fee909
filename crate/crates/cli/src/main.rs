//! `encctl`: design, transform, simulate and cost encrypted controllers.
//!
//! Exit codes: 0 success, 1 other failure, 2 invalid configuration,
//! 3 infeasible design, 4 plaintext range violation in strict mode.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde::Serialize;

use encctl_core::design::design;
use encctl_core::sim::{cost_report, error_metrics, run_encrypted, run_nominal, write_csv, ControllerKind};
use encctl_core::{selftest, Error, RangeMode, RunConfig};

const EXIT_FAILURE: u8 = 1;
const EXIT_CONFIG: u8 = 2;
const EXIT_INFEASIBLE: u8 = 3;
const EXIT_RANGE: u8 = 4;

/// Sweep grid used by `simulate --sweep`.
const SWEEP_INV_L: [f64; 3] = [2e2, 2e3, 2e4];
const SWEEP_INV_S: [f64; 3] = [1e3, 1e4, 1e5];

#[derive(Parser)]
#[command(name = "encctl", version, about = "Encrypted linear dynamic controllers over BGV")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(clap::Args, Clone)]
struct ConfigArgs {
    /// JSON config file, or the name of a bundled preset (`f16`, `toy`).
    #[arg(long, default_value = "f16")]
    config: String,
    /// Overrides the range policy of the config.
    #[arg(long, value_parser = parse_mode)]
    mode: Option<RangeMode>,
}

#[derive(Subcommand)]
enum Cmd {
    /// Golden-vector checks; runs offline without a config.
    Selftest,
    /// Error budget, minimum plaintext moduli and the feasibility verdict as JSON.
    Design(ConfigArgs),
    /// The shift-register realization of the controller as JSON.
    Transform(ConfigArgs),
    /// Closed-loop run written as a CSV trace.
    Simulate {
        #[command(flatten)]
        cfg: ConfigArgs,
        #[arg(long, value_parser = parse_kind)]
        kind: Option<ControllerKind>,
        /// Horizon in steps.
        #[arg(long = "T")]
        t: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        /// Output CSV, or output directory with `--sweep`.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Runs the 3x3 grid of `(1/L, 1/s)` concurrently.
        #[arg(long)]
        sweep: bool,
        /// Writes zero in the wall-clock column so repeated runs are byte-identical.
        #[arg(long)]
        no_timing: bool,
    },
    /// Measured per-step operations next to the analytic cost formulas, as JSON.
    Analyze {
        #[command(flatten)]
        cfg: ConfigArgs,
        /// Steps measured per encrypted kind.
        #[arg(long = "T", default_value_t = 3)]
        t: usize,
        #[arg(long)]
        seed: Option<u64>,
    },
}

fn parse_kind(s: &str) -> Result<ControllerKind, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn parse_mode(s: &str) -> Result<RangeMode, String> {
    serde_json::from_value(serde_json::Value::String(s.into()))
        .map_err(|_| format!("unknown mode {s:?} (expected strict or wraparound-demo)"))
}

struct Failure {
    code: u8,
    msg: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e.root_cause() {
            Error::Config(_) => EXIT_CONFIG,
            Error::RangeExceeded { .. } => EXIT_RANGE,
            Error::SInvalid { .. } | Error::Unstable(_) | Error::NotControllable | Error::NotObservable => {
                EXIT_INFEASIBLE
            }
            _ => EXIT_FAILURE,
        };
        Failure { code, msg: e.to_string() }
    }
}

fn io_failure(path: &Path, e: std::io::Error) -> Failure {
    Failure { code: EXIT_FAILURE, msg: format!("{}: {e}", path.display()) }
}

fn load(args: &ConfigArgs) -> Result<RunConfig, Failure> {
    let path = Path::new(&args.config);
    let mut cfg = if path.exists() {
        let text = fs::read_to_string(path).map_err(|e| Failure { code: EXIT_CONFIG, msg: format!("{}: {e}", path.display()) })?;
        RunConfig::from_json(&text)?
    } else {
        RunConfig::preset(&args.config)?
    };
    if let Some(mode) = args.mode {
        cfg.mode = mode;
    }
    Ok(cfg)
}

fn print_json<T: Serialize>(v: &T) {
    println!("{}", serde_json::to_string_pretty(v).expect("report serializes"));
}

fn cmd_selftest() -> Result<(), Failure> {
    let report = selftest::run();
    for c in &report.checks {
        println!("{} {}: {}", if c.pass { "PASS" } else { "FAIL" }, c.name, c.detail);
    }
    if report.pass {
        println!("selftest: PASS");
        Ok(())
    } else {
        Err(Failure { code: EXIT_FAILURE, msg: "selftest: FAIL".into() })
    }
}

fn cmd_design(args: &ConfigArgs) -> Result<(), Failure> {
    let cfg = load(args)?;
    let s = cfg.setup()?;
    let (l, sc) = (s.quant.l, s.quant.s);
    let report = design(&s.plant, &s.ctrl, &s.tc, l, sc, s.bgv.n, s.bgv.p)?;
    print_json(&report);
    if report.feasible {
        Ok(())
    } else {
        Err(Failure {
            code: EXIT_INFEASIBLE,
            msg: format!("infeasible: {}", report.reason.unwrap_or_default()),
        })
    }
}

fn cmd_transform(args: &ConfigArgs) -> Result<(), Failure> {
    let cfg = load(args)?;
    let s = cfg.setup()?;
    print_json(&s.tc.summary());
    Ok(())
}

#[derive(Serialize)]
struct RunSummary {
    kind: ControllerKind,
    inv_l: f64,
    inv_s: f64,
    steps: usize,
    max_err: f64,
    max_u_err: f64,
    epsilon: Option<f64>,
    epsilon_note: Option<String>,
    mean_step_ms: f64,
    out: Option<PathBuf>,
}

fn simulate_one(
    cfg: &RunConfig,
    kind: ControllerKind,
    t: usize,
    seed: u64,
    out: Option<&Path>,
    timing: bool,
) -> Result<RunSummary, Failure> {
    let s = cfg.setup()?;
    let trace = run_encrypted(&s, kind, t, seed)?;
    let reference = run_nominal(&s.plant, &s.ctrl, t)?;
    let metrics = error_metrics(&trace, &reference);
    let report = design(&s.plant, &s.ctrl, &s.tc, s.quant.l, s.quant.s, s.bgv.n, s.bgv.p)?;
    if let Some(path) = out {
        let file = fs::File::create(path).map_err(|e| io_failure(path, e))?;
        write_csv(&trace, std::io::BufWriter::new(file), timing)?;
    }
    Ok(RunSummary {
        kind,
        inv_l: cfg.quantization.inv_l,
        inv_s: cfg.quantization.inv_s,
        steps: t,
        max_err: metrics.max_err,
        max_u_err: metrics.max_u_err,
        epsilon: report.epsilon,
        epsilon_note: report.epsilon.is_none().then(|| report.reason.unwrap_or_default()),
        mean_step_ms: trace.mean_wall_ns() / 1e6,
        out: out.map(Path::to_path_buf),
    })
}

fn cmd_simulate(
    args: &ConfigArgs,
    kind: Option<ControllerKind>,
    t: Option<usize>,
    seed: Option<u64>,
    out: Option<PathBuf>,
    sweep: bool,
    no_timing: bool,
) -> Result<(), Failure> {
    let mut cfg = load(args)?;
    if let Some(k) = kind {
        cfg.kind = k;
    }
    if let Some(t) = t {
        cfg.horizon = t;
    }
    if let Some(seed) = seed {
        cfg.encryption.seed = seed;
    }
    let (kind, t, seed) = (cfg.kind, cfg.horizon, cfg.encryption.seed);
    if !sweep {
        let summary = simulate_one(&cfg, kind, t, seed, out.as_deref(), !no_timing)?;
        print_json(&summary);
        return Ok(());
    }
    if let Some(dir) = &out {
        fs::create_dir_all(dir).map_err(|e| io_failure(dir, e))?;
    }
    let points: Vec<(f64, f64)> = SWEEP_INV_L.iter().flat_map(|&l| SWEEP_INV_S.iter().map(move |&s| (l, s))).collect();
    let results: Vec<Result<RunSummary, Failure>> = std::thread::scope(|scope| {
        let handles: Vec<_> = points
            .iter()
            .enumerate()
            .map(|(i, &(inv_l, inv_s))| {
                let mut c = cfg.clone();
                c.quantization.inv_l = inv_l;
                c.quantization.inv_s = inv_s;
                let path = out.as_ref().map(|d| d.join(format!("{kind}_L{inv_l}_s{inv_s}.csv")));
                scope.spawn(move || simulate_one(&c, kind, t, seed.wrapping_add(i as u64), path.as_deref(), !no_timing))
            })
            .collect();
        handles.into_iter().map(|h| h.join().expect("sweep worker panicked")).collect()
    });
    let mut report = Vec::new();
    let mut first_err = None;
    for (&(inv_l, inv_s), r) in points.iter().zip(results) {
        match r {
            Ok(s) => report.push(SweepPoint { inv_l, inv_s, summary: Some(s), error: None }),
            Err(f) => {
                report.push(SweepPoint { inv_l, inv_s, summary: None, error: Some(f.msg.clone()) });
                first_err.get_or_insert(f);
            }
        }
    }
    print_json(&report);
    first_err.map_or(Ok(()), Err)
}

#[derive(Serialize)]
struct SweepPoint {
    inv_l: f64,
    inv_s: f64,
    summary: Option<RunSummary>,
    error: Option<String>,
}

fn cmd_analyze(args: &ConfigArgs, t: usize, seed: Option<u64>) -> Result<(), Failure> {
    let cfg = load(args)?;
    let s = cfg.setup()?;
    let seed = seed.unwrap_or(cfg.encryption.seed);
    let general = run_encrypted(&s, ControllerKind::General, t, seed)?;
    let packed = if s.packed_layout().is_ok() { Some(run_encrypted(&s, ControllerKind::Packed, t, seed)?) } else { None };
    let report = cost_report(s.tc.n, s.tc.h, s.tc.l, s.bgv.p, s.bgv.q, cfg.nu).with_measurements(Some(&general), packed.as_ref());
    print_json(&report);
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let res = match &cli.cmd {
        Cmd::Selftest => cmd_selftest(),
        Cmd::Design(a) => cmd_design(a),
        Cmd::Transform(a) => cmd_transform(a),
        Cmd::Simulate { cfg, kind, t, seed, out, sweep, no_timing } => {
            cmd_simulate(cfg, *kind, *t, *seed, out.clone(), *sweep, *no_timing)
        }
        Cmd::Analyze { cfg, t, seed } => cmd_analyze(cfg, *t, *seed),
    };
    let _ = std::io::stdout().flush();
    match res {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("encctl: {}", f.msg);
            ExitCode::from(f.code)
        }
    }
}
