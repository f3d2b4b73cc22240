//! `rnn-iqc`: certify, sweep and inspect ReLU recurrent networks.
//!
//! Exit codes: 0 success, 1 config or usage error, 2 sweep failure fraction
//! above the configured threshold, 3 inclusion-audit violation, 4 stored
//! certificate rejected.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use rnn_iqc::certify::{run_test, StoredCertificate, DEFAULT_VERIFY_TOL};
use rnn_iqc::dynamics::{empirical_gain_lower_bound, hinf_norm};
use rnn_iqc::sweep::{
    compare_regions, emit_outputs, failure_fraction, inclusion_audit, load_config, region_pairs, run_sweep,
    SweepConfig,
};
use rnn_iqc::{certificate_gain_bound, Status, TestId};

const EXIT_USAGE: u8 = 1;
const EXIT_FAILURES: u8 = 2;
const EXIT_AUDIT: u8 = 3;
const EXIT_REJECTED: u8 = 4;

#[derive(Parser)]
#[command(name = "rnn-iqc", version, about = "l2 stability certificates for ReLU recurrent networks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Common {
    /// TOML sweep/model config; defaults to the built-in benchmark model.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Comma-separated tests (SG, I, II, III, IV or their long names).
    #[arg(long, global = true, value_delimiter = ',')]
    tests: Option<Vec<String>>,
    #[arg(long, global = true, allow_negative_numbers = true)]
    a: Option<f64>,
    #[arg(long, global = true, allow_negative_numbers = true)]
    b: Option<f64>,
    /// Worker threads (0 = all cores).
    #[arg(long, global = true)]
    workers: Option<usize>,
    #[arg(long, global = true)]
    seed: Option<u64>,
}

#[derive(Subcommand)]
enum Command {
    /// Run tests at a single (a, b) point; prints one JSON line per test.
    Certify {
        #[command(flatten)]
        common: Common,
        /// Directory receiving one certificate JSON per feasible test.
        #[arg(long)]
        dump_dir: Option<PathBuf>,
        /// Also report the certificate gain bound and a simulated lower bound.
        #[arg(long)]
        gain: bool,
    },
    /// Sweep the configured (a, b) grid.
    Sweep {
        #[command(flatten)]
        common: Common,
    },
    /// Print the H-infinity norm of the linear part at (a, b).
    Norm {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 1e-6)]
        tol: f64,
    },
    /// Re-verify a stored certificate file.
    CheckCert {
        path: PathBuf,
        #[arg(long, default_value_t = DEFAULT_VERIFY_TOL)]
        tol: f64,
    },
}

fn config_from(common: &Common, default_tests: &[TestId]) -> Result<SweepConfig> {
    let mut cfg = match &common.config {
        Some(p) => load_config(p)?,
        None => SweepConfig::paper(default_tests.to_vec()),
    };
    if let Some(ts) = &common.tests {
        let mut tests = ts
            .iter()
            .map(|t| t.parse::<TestId>())
            .collect::<Result<Vec<_>, _>>()?;
        tests.sort();
        tests.dedup();
        if tests.is_empty() {
            bail!("--tests must name at least one test");
        }
        cfg.tests = tests;
    }
    if let Some(w) = common.workers {
        cfg.parallelism = w;
    }
    if let Some(s) = common.seed {
        cfg.seed = s;
    }
    Ok(cfg)
}

/// The single point selected by `--a/--b`, falling back to the grid origin.
fn point(common: &Common, cfg: &SweepConfig) -> (f64, f64) {
    let a = common.a.unwrap_or(if common.config.is_some() { cfg.grid.a_min } else { 0.0 });
    let b = common.b.unwrap_or(if common.config.is_some() { cfg.grid.b_min } else { 0.0 });
    (a, b)
}

const ALL_FOUR: [TestId; 4] = [TestId::SSG, TestId::L2P_SSG, TestId::SSG_ZF_POL, TestId::SSG_ZF_POL_COP];

fn cmd_norm(common: &Common, tol: f64) -> Result<u8> {
    let cfg = config_from(common, &ALL_FOUR)?;
    let (a, b) = point(common, &cfg);
    let model = cfg.model.instantiate(a, b)?;
    println!("{:.6}", hinf_norm(&model, tol)?);
    Ok(0)
}

fn cmd_certify(common: &Common, dump_dir: Option<&Path>, gain: bool) -> Result<u8> {
    let cfg = config_from(common, &ALL_FOUR)?;
    let (a, b) = point(common, &cfg);
    let model = cfg.model.instantiate(a, b)?;
    if let Some(d) = dump_dir {
        std::fs::create_dir_all(d).with_context(|| format!("creating {}", d.display()))?;
    }
    for &test in &cfg.tests {
        let r = run_test(&model, test, &cfg.certify)?;
        let mut line = serde_json::to_value(&r)?;
        line["a"] = a.into();
        line["b"] = b.into();
        if let (Some(cert), true) = (&r.certificate, r.outcome == Status::Feasible) {
            if gain {
                line["gain_bound"] = certificate_gain_bound(cert, &model).ok().into();
                line["empirical_gain"] = empirical_gain_lower_bound(&model, 200, 200, cfg.seed)?.into();
            }
            if let Some(d) = dump_dir {
                let path = d.join(format!("cert_{}_a{a}_b{b}.json", test.name()));
                StoredCertificate {
                    test,
                    model: model.clone(),
                    certificate: cert.clone(),
                }
                .save(&path)?;
                line["certificate_path"] = path.display().to_string().into();
            }
        }
        println!("{line}");
    }
    Ok(0)
}

fn cmd_sweep(common: &Common) -> Result<u8> {
    let cfg = config_from(common, &ALL_FOUR)?;
    eprintln!(
        "sweeping {} points x {} tests",
        cfg.grid.len(),
        cfg.tests.len()
    );
    let records = run_sweep(&cfg)?;
    let maps: Vec<_> = region_pairs(&cfg.tests)
        .into_iter()
        .map(|(x, y)| compare_regions(&records, x, y))
        .collect();
    for m in &maps {
        println!("{}", m.summary());
    }
    for p in emit_outputs(&records, &maps, &cfg)? {
        eprintln!("wrote {}", p.display());
    }

    let mut code = 0;
    let frac = failure_fraction(&records);
    println!("solver failures: {:.2}%", 100.0 * frac);
    for audit in inclusion_audit(&records, &cfg.tests) {
        let (w, s) = audit.pair;
        println!(
            "audit {w} => {s}: {} violations, {} excluded",
            audit.violations.len(),
            audit.excluded.len()
        );
        for (a, b) in &audit.violations {
            eprintln!("error: inclusion {w} => {s} violated at a={a}, b={b}");
        }
        if !audit.violations.is_empty() {
            code = EXIT_AUDIT;
        }
    }
    if code == 0 && frac > cfg.failure_threshold {
        eprintln!(
            "error: failure fraction {frac:.4} exceeds threshold {}",
            cfg.failure_threshold
        );
        code = EXIT_FAILURES;
    }
    Ok(code)
}

fn cmd_check_cert(path: &Path, tol: f64) -> Result<u8> {
    let stored = StoredCertificate::load(path)?;
    let report = stored.verify(tol)?;
    println!("{}", serde_json::to_string(&report)?);
    Ok(if report.verified { 0 } else { EXIT_REJECTED })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let res = match &cli.command {
        Command::Norm { common, tol } => cmd_norm(common, *tol),
        Command::Certify { common, dump_dir, gain } => cmd_certify(common, dump_dir.as_deref(), *gain),
        Command::Sweep { common } => cmd_sweep(common),
        Command::CheckCert { path, tol } => cmd_check_cert(path, *tol),
    };
    match res {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(EXIT_USAGE)
        }
    }
}
