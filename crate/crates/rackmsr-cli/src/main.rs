use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

use rackmsr::codes::{RackCode, SweepMode};
use rackmsr::config::{build_code, Bundle, ConfigError, LambdaChoice, RunConfig};
use rackmsr::identities;
use rackmsr::lambdas::check_constraints;
use rackmsr::repair::{self, RepairError};

mod report;

#[derive(Parser)]
#[command(name = "rackmsr", version, about = "Rack-aware MSR array codes: build, verify, repair, report")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Construct a code from a JSON config and write a bundle.
    Build {
        config: PathBuf,
        #[arg(short, long, default_value = "bundle.json")]
        out: PathBuf,
        /// Overrides the config's coefficient search seed.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Run verification suites on a bundle.
    Verify {
        bundle: PathBuf,
        /// `exhaustive`, `sample N`, or `none`.
        #[arg(long, num_args = 1..=2, value_names = ["MODE", "N"], default_values_t = ["exhaustive".to_string()])]
        mds: Vec<String>,
        /// Check the folded codes for every w.
        #[arg(long)]
        folded: bool,
        /// Run the randomized kernel identity suites.
        #[arg(long)]
        kernels: bool,
        /// Instances per kernel suite.
        #[arg(long, default_value_t = 50)]
        instances: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Encode a random message, erase nodes in one rack, and repair them.
    Repair {
        bundle: PathBuf,
        #[arg(long)]
        host: Option<usize>,
        #[arg(long, value_delimiter = ',')]
        failed: Option<Vec<usize>>,
        #[arg(long, value_delimiter = ',')]
        helpers: Option<Vec<usize>>,
        #[arg(long)]
        extra: Option<usize>,
        /// Failure count when --failed is not given; random per trial otherwise.
        #[arg(long)]
        h: Option<usize>,
        #[arg(long, default_value_t = 1)]
        trials: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Tabulate measured repair ratios for a list of bundles.
    Report {
        bundles: Vec<PathBuf>,
        #[arg(long, value_enum, default_value_t = report::Format::Text)]
        format: report::Format,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

/// Outcome of a command; the variant fixes the exit code.
enum Failure {
    Property(Value),
    Invalid(String),
    Exhausted(String),
}

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Self {
        if e.is_exhaustion() {
            Failure::Exhausted(e.to_string())
        } else {
            Failure::Invalid(e.to_string())
        }
    }
}

fn read(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| Failure::Invalid(format!("{}: {e}", path.display())))
}

fn read_bundle(path: &Path) -> Result<Bundle, Failure> {
    Ok(Bundle::from_json(&read(path)?)?)
}

/// Writes to stdout, ignoring a closed pipe.
fn emit(text: &str) {
    let _ = std::io::stdout().lock().write_all(text.as_bytes());
}

fn print(v: &Value) {
    emit(&format!("{}\n", serde_json::to_string_pretty(v).expect("json")));
}

fn cmd_build(config: &Path, out: &Path, seed: Option<u64>) -> Result<(), Failure> {
    let mut cfg = RunConfig::from_json(&read(config)?)?;
    if let Some(seed) = seed {
        cfg.lambdas.seed = seed;
    }
    let code = build_code(&cfg)?;
    let bundle = Bundle::from_code(&code);
    fs::write(out, bundle.to_json()).map_err(|e| Failure::Invalid(format!("{}: {e}", out.display())))?;
    let mode = match cfg.lambdas.mode {
        LambdaChoice::Explicit => "explicit",
        LambdaChoice::Greedy => "greedy",
        LambdaChoice::Random => "random",
        LambdaChoice::Auto => "auto",
    };
    print(&json!({
        "q": code.field.q(),
        "l": code.params.l,
        "threshold_q": code.params.field_threshold().to_string(),
        "lambda_mode": mode,
        "lambdas": serde_json::to_value(&code.lambdas.mode).expect("json"),
        "parity_hash": bundle.parity_hash,
        "bundle": out.display().to_string(),
    }));
    Ok(())
}

fn suite(name: &str, cases: usize, failures: Vec<String>) -> Value {
    json!({ "name": name, "cases": cases, "failures": failures, "pass": failures.is_empty() })
}

fn coefficient_suite(bundle: &Bundle) -> Result<(Value, RackCode), Failure> {
    let loaded = bundle.load()?;
    let (p, f, set) = (&loaded.params, &loaded.field, &loaded.lambdas);
    let mut failures = Vec::new();
    let v = set.verified;
    if !(v.orbits_distinct && v.powers_distinct) {
        let span = (f.q() as usize - 1) / p.u;
        let logs: Vec<Option<u32>> = set.lambdas.iter().map(|x| x.log()).collect();
        for j in 0..logs.len() {
            for i in 0..j {
                match (logs[i], logs[j]) {
                    (Some(a), Some(b)) if a as usize % span == b as usize % span => {
                        failures.push(format!("λ_{i} and λ_{j} share a θ-orbit"));
                    }
                    _ => {}
                }
            }
        }
    }
    if !v.in_pool {
        failures.push("coefficient outside the pool".to_string());
    }
    let group_len = p.group * p.s;
    let mut cases = 0;
    for a in 0..p.n_tilde {
        let check = check_constraints(p, f, &set.lambdas[a * group_len..(a + 1) * group_len], set.theta)
            .map_err(|e| Failure::Invalid(e.to_string()))?;
        cases += check.checked;
        if let Some(case) = check.first_failure {
            failures.push(format!("group {a}: singular {case}"));
        }
    }
    // built even when the checks fail, so later suites show where it breaks
    let code = RackCode::build_unchecked(p, f, set).map_err(|e| Failure::Invalid(e.to_string()))?;
    Ok((suite("coefficients", cases, failures), code))
}

fn parse_mds(args: &[String], seed: u64) -> Result<Option<SweepMode>, Failure> {
    match args {
        [m] if m == "exhaustive" => Ok(Some(SweepMode::Exhaustive)),
        [m] if m == "none" => Ok(None),
        [m, n] if m == "sample" => {
            let count = n.parse().map_err(|_| Failure::Invalid(format!("bad sample count {n:?}")))?;
            Ok(Some(SweepMode::Sample { count, seed }))
        }
        _ => Err(Failure::Invalid(format!("--mds expects `exhaustive`, `sample N` or `none`, got {args:?}"))),
    }
}

fn cmd_verify(
    path: &Path,
    mds: &[String],
    folded: bool,
    kernels: bool,
    instances: usize,
    seed: u64,
) -> Result<(), Failure> {
    let mode = parse_mds(mds, seed)?;
    let bundle = read_bundle(path)?;
    let (coeffs, code) = coefficient_suite(&bundle)?;
    let mut suites = vec![coeffs];
    let hash = code.parity_hash();
    let bad = if hash == bundle.parity_hash {
        vec![]
    } else {
        vec![format!("stored {} != built {hash}", bundle.parity_hash)]
    };
    suites.push(suite("parity_hash", 1, bad));
    if let Some(mode) = mode {
        let rep = code.mds_sweep(mode);
        let mut s = suite("mds", rep.checked, rep.failures.iter().map(|f| format!("erasure {f:?}")).collect());
        s["total_patterns"] = json!(rep.total_patterns.to_string());
        suites.push(s);
    }
    if folded {
        for w in 0..code.params.u {
            let rep = code
                .folded_mds_check(w, mode.unwrap_or(SweepMode::Exhaustive))
                .map_err(|e| Failure::Invalid(e.to_string()))?;
            let fails = rep.failures.iter().map(|f| format!("racks {f:?}")).collect();
            suites.push(suite(&format!("folded_mds_w{w}"), rep.checked, fails));
        }
        let rep = identities::fold_projection(&code).map_err(|e| Failure::Invalid(e.to_string()))?;
        suites.push(suite(&rep.name, rep.cases, rep.failures));
    }
    if kernels {
        for rep in identities::run_all(seed, instances).map_err(|e| Failure::Invalid(e.to_string()))? {
            suites.push(suite(&rep.name, rep.cases, rep.failures));
        }
    }
    let pass = suites.iter().all(|s| s["pass"] == json!(true));
    let out = json!({ "bundle": path.display().to_string(), "pass": pass, "suites": suites });
    if pass {
        print(&out);
        Ok(())
    } else {
        Err(Failure::Property(out))
    }
}

fn repair_failure(e: RepairError) -> Failure {
    match e {
        RepairError::Singular { .. } | RepairError::Code(_) | RepairError::Mat(_) => {
            Failure::Property(json!({ "error": e.to_string() }))
        }
        e => Failure::Invalid(e.to_string()),
    }
}

struct RepairArgs {
    host: Option<usize>,
    failed: Option<Vec<usize>>,
    helpers: Option<Vec<usize>>,
    extra: Option<usize>,
    h: Option<usize>,
    trials: usize,
    seed: u64,
}

fn cmd_repair(path: &Path, args: RepairArgs) -> Result<(), Failure> {
    let code = read_bundle(path)?.open()?;
    let p = code.params.clone();
    if args.trials == 0 {
        return Err(Failure::Invalid("--trials must be at least 1".into()));
    }
    if let Some(h) = args.h {
        if h == 0 || h > p.h_max {
            return Err(Failure::Invalid(format!("h={h} outside [1, {}]", p.h_max)));
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(args.seed);
    let mut ledgers = Vec::with_capacity(args.trials);
    for _ in 0..args.trials {
        let host = args.host.unwrap_or_else(|| rng.gen_range(0..p.n_bar));
        let failed = match &args.failed {
            Some(f) => f.clone(),
            None => {
                let h = args.h.unwrap_or_else(|| rng.gen_range(1..=p.h_max));
                let mut all: Vec<usize> = (0..p.u).collect();
                all.shuffle(&mut rng);
                all.truncate(h);
                all.sort_unstable();
                all
            }
        };
        let helpers = match &args.helpers {
            Some(h) => h.clone(),
            None => {
                let mut others: Vec<usize> = (0..p.n_bar).filter(|&r| r != host).collect();
                others.shuffle(&mut rng);
                others.truncate(p.d_bar);
                others.sort_unstable();
                others
            }
        };
        let extra = match args.extra {
            Some(e) => Some(e),
            None if failed.len() > p.u - p.v => repair::default_extra(&code, host, &helpers),
            None => None,
        };
        let plan = repair::plan(&code, host, &failed, &helpers, extra).map_err(repair_failure)?;
        let word = code
            .encode(&code.random_message(&mut rng))
            .map_err(|e| Failure::Property(json!({ "error": e.to_string() })))?;
        let res = repair::repair(&code, &word, &plan).map_err(repair_failure)?;
        let mut v = serde_json::to_value(res.ledger()).expect("json");
        v["host"] = json!(host);
        v["failed"] = json!(plan.failed);
        v["helpers"] = json!(plan.helpers);
        v["extra"] = json!(plan.extra);
        ledgers.push(v);
    }
    let exact = ledgers.iter().filter(|v| v["exact"] == json!(true)).count();
    let out = if args.trials == 1 {
        ledgers.pop().expect("one trial")
    } else {
        let stat = |key: &str| {
            let xs: Vec<u64> = ledgers.iter().filter_map(|v| v[key].as_u64()).collect();
            json!({ "min": xs.iter().min(), "max": xs.iter().max(), "total": xs.iter().sum::<u64>() })
        };
        let count = |key: &str| ledgers.iter().filter(|v| v[key] == json!(true)).count();
        json!({
            "trials": args.trials,
            "exact": exact,
            "bandwidth": stat("bandwidth"),
            "access": stat("access"),
            "optimal_bw": count("optimal_bw"),
            "optimal_access": count("optimal_access"),
            "failures": ledgers.iter().filter(|v| v["exact"] != json!(true)).cloned().collect::<Vec<_>>(),
        })
    };
    if exact == args.trials {
        print(&out);
        Ok(())
    } else {
        Err(Failure::Property(out))
    }
}

fn cmd_report(paths: &[PathBuf], format: report::Format, seed: u64) -> Result<(), Failure> {
    let mut rows = Vec::with_capacity(paths.len());
    for path in paths {
        let code = read_bundle(path)?.open()?;
        rows.push(report::measure(&code, seed).map_err(repair_failure)?);
    }
    match format {
        report::Format::Text => emit(&report::render_text(&rows)),
        report::Format::Json => print(&serde_json::to_value(&rows).expect("json")),
    }
    Ok(())
}

fn init_threads() {
    if let Some(n) = std::env::var("RACKMSR_THREADS").ok().and_then(|v| v.parse::<usize>().ok()) {
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build_global();
    }
}

fn main() -> ExitCode {
    init_threads();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Build { config, out, seed } => cmd_build(&config, &out, seed),
        Command::Verify { bundle, mds, folded, kernels, instances, seed } => {
            cmd_verify(&bundle, &mds, folded, kernels, instances, seed)
        }
        Command::Repair { bundle, host, failed, helpers, extra, h, trials, seed } => {
            cmd_repair(&bundle, RepairArgs { host, failed, helpers, extra, h, trials, seed })
        }
        Command::Report { bundles, format, seed } => cmd_report(&bundles, format, seed),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Property(v)) => {
            print(&v);
            ExitCode::from(1)
        }
        Err(Failure::Invalid(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Exhausted(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(3)
        }
    }
}
