use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;

use cw4_core::certifier::{self, BoundCertificate, CertifyOptions};
use cw4_core::constraints::{Evaluation, Mode, Tolerances};
use cw4_core::optimizer::{self, SolverConfig, Strategy};
use cw4_core::ParameterSet;

const EXIT_FAIL: u8 = 1;
const EXIT_INPUT: u8 = 2;

#[derive(Parser)]
#[command(name = "cw4", version, about = "Certify and search for bounds on omega(kappa)")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check a certificate file at a given rho.
    Verify(VerifyArgs),
    /// Print the bound implied by a certificate file.
    Bound(BoundArgs),
    /// Search for a parameter set and write it as a certificate file.
    Optimize(OptimizeArgs),
    /// Optimize over a list of kappa values and write a CSV summary.
    Sweep(SweepArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Text,
    Kv,
}

#[derive(Args)]
struct ModeArgs {
    /// legacy, loss_outer or loss_recursive.
    #[arg(long, default_value = "loss_recursive", value_parser = parse_mode)]
    mode: Mode,
    /// Overrides the kappa stored in the file.
    #[arg(long)]
    kappa: Option<f64>,
}

#[derive(Args)]
struct VerifyArgs {
    file: PathBuf,
    /// Defaults to the implied bound of the file.
    #[arg(long)]
    rho: Option<f64>,
    #[command(flatten)]
    common: ModeArgs,
    #[arg(long, default_value_t = Tolerances::default().eq_linear)]
    tol_eq: f64,
    #[arg(long, default_value_t = Tolerances::default().eq_entropy)]
    tol_eq_log: f64,
    #[arg(long, default_value_t = Tolerances::default().ineq)]
    tol_ineq: f64,
    #[arg(long, default_value_t = 0.0)]
    certify_margin: f64,
    #[arg(long, value_enum, default_value = "text")]
    format: Format,
}

#[derive(Args)]
struct BoundArgs {
    file: PathBuf,
    #[command(flatten)]
    common: ModeArgs,
}

#[derive(Args)]
struct SearchArgs {
    #[arg(long, default_value = "loss_recursive", value_parser = parse_mode)]
    mode: Mode,
    #[arg(long, default_value_t = 4)]
    starts: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = SolverConfig::default().max_iters)]
    max_iters: usize,
    /// Warm start.
    #[arg(long)]
    from: Option<PathBuf>,
    /// penalized-direct or bisection-feasibility.
    #[arg(long, default_value = "penalized-direct", value_parser = parse_strategy)]
    strategy: Strategy,
    #[arg(long, default_value_t = SolverConfig::default().lower_bound)]
    lower_bound: f64,
}

#[derive(Args)]
struct OptimizeArgs {
    #[arg(long)]
    kappa: f64,
    #[command(flatten)]
    search: SearchArgs,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct SweepArgs {
    #[arg(long, value_delimiter = ',', required = true)]
    kappas: Vec<String>,
    #[command(flatten)]
    search: SearchArgs,
    /// CSV destination.
    #[arg(long)]
    out: PathBuf,
    /// Where per-kappa certificate files go; defaults to the CSV's directory.
    #[arg(long)]
    dir: Option<PathBuf>,
}

fn parse_mode(s: &str) -> Result<Mode, String> {
    s.parse().map_err(|e: cw4_core::Error| e.to_string())
}

fn parse_strategy(s: &str) -> Result<Strategy, String> {
    s.parse().map_err(|e: cw4_core::Error| e.to_string())
}

/// Exit code 2 on unreadable or malformed input.
fn load(path: &Path) -> Result<ParameterSet, ExitCode> {
    let text = fs::read_to_string(path).map_err(|e| {
        eprintln!("error: cannot read {}: {e}", path.display());
        ExitCode::from(EXIT_INPUT)
    })?;
    ParameterSet::parse(&text).map_err(|e| {
        eprintln!("error: {}: {e}", path.display());
        ExitCode::from(EXIT_INPUT)
    })
}

fn load_with_kappa(path: &Path, kappa: Option<f64>) -> Result<ParameterSet, ExitCode> {
    let mut p = load(path)?;
    if let Some(k) = kappa {
        if k != p.kappa {
            log::warn!("kappa {} from the command line overrides {} in the file", k, p.kappa);
        }
        p.kappa = k;
    }
    Ok(p)
}

fn verify(a: VerifyArgs) -> ExitCode {
    let p = match load_with_kappa(&a.file, a.common.kappa) {
        Ok(p) => p,
        Err(code) => return code,
    };
    let ev = Evaluation::of(&p);
    let rho = match a.rho {
        Some(r) => r,
        None => certifier::bound_from_evaluation(&ev).unwrap_or(f64::INFINITY),
    };
    let opts = CertifyOptions {
        tolerances: Tolerances {
            eq_linear: a.tol_eq,
            eq_entropy: a.tol_eq_log,
            ineq: a.tol_ineq,
        },
        certify_margin: a.certify_margin,
    };
    let c = certifier::certify_evaluation(&p, &ev, a.common.mode, rho, &opts);
    match a.format {
        Format::Text => print!("{}", certifier::render_text(&c)),
        Format::Kv => print!("{}", certifier::render_key_values(&c)),
    }
    if c.passed {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(EXIT_FAIL)
    }
}

fn bound(a: BoundArgs) -> ExitCode {
    let p = match load_with_kappa(&a.file, a.common.kappa) {
        Ok(p) => p,
        Err(code) => return code,
    };
    let mode = a.common.mode;
    match certifier::implied_bound(&p, mode) {
        Ok(rho) => {
            let c = certifier::certify(&p, mode, rho, &CertifyOptions::default());
            if !c.passed {
                eprintln!("error: implied bound {rho} failed re-certification");
                return ExitCode::from(EXIT_FAIL);
            }
            let q = &c.quantities;
            println!("rho = {rho:.7}");
            println!("Gamma = {:.7}", q.gamma);
            println!("H(A) = {:.7}", q.h_a);
            println!("H(B) = {:.7}", q.h_b);
            println!("chi = {:.7}", q.chi);
            println!("sum alpha*chi = {:.7}", q.sum_alpha_chi);
            println!("Delta_x = {:.7}", q.delta_x);
            println!("Delta_z = {:.7}", q.delta_z);
            println!("CERTIFIED omega({}) <= {rho:.7} [{mode}]", p.kappa);
            ExitCode::SUCCESS
        }
        Err(e) => {
            println!("REJECTED: {e}");
            ExitCode::from(EXIT_FAIL)
        }
    }
}

fn config(s: &SearchArgs, kappa: f64) -> SolverConfig {
    SolverConfig {
        mode: s.mode,
        kappa,
        starts: s.starts,
        max_iters: s.max_iters,
        seed: s.seed,
        lower_bound: s.lower_bound,
        strategy: s.strategy,
        ..SolverConfig::default()
    }
}

fn certificate_file(c: &BoundCertificate) -> String {
    let status = if c.passed { "certified" } else { "infeasible" };
    format!(
        "# {status}: mode = {}, kappa = {}, rho = {}\n{}",
        c.mode,
        c.kappa,
        c.rho,
        c.params.serialize()
    )
}

fn warm_start(s: &SearchArgs) -> Result<Option<ParameterSet>, ExitCode> {
    s.from.as_deref().map(load).transpose()
}

fn optimize(a: OptimizeArgs) -> anyhow::Result<ExitCode> {
    let warm = match warm_start(&a.search) {
        Ok(w) => w,
        Err(code) => return Ok(code),
    };
    let cfg = config(&a.search, a.kappa);
    if let Err(e) = cfg.validate() {
        eprintln!("error: {e}");
        return Ok(ExitCode::from(EXIT_INPUT));
    }
    let out = optimizer::optimize(&cfg, warm.as_ref())?;
    fs::write(&a.out, certificate_file(&out.certificate))
        .with_context(|| format!("writing {}", a.out.display()))?;
    print!("{}", certifier::render_text(&out.certificate));
    if !out.boundary_active.is_empty() {
        println!("at lower bound: {}", out.boundary_active.join(" "));
    }
    Ok(if out.feasible {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(EXIT_FAIL)
    })
}

struct Row {
    kappa: f64,
    rho: Option<f64>,
    margin: Option<f64>,
    file: PathBuf,
}

fn sweep_row(cfg: &SolverConfig, warm: Option<&ParameterSet>, dir: &Path) -> anyhow::Result<Row> {
    let file = dir.join(format!("kappa_{}.cert", cfg.kappa));
    let out = optimizer::optimize(cfg, warm)?;
    fs::write(&file, certificate_file(&out.certificate))
        .with_context(|| format!("writing {}", file.display()))?;
    // re-read what was written so the row reflects the file on disk
    let p = ParameterSet::parse(&fs::read_to_string(&file)?)?;
    let c = certifier::certify(&p, cfg.mode, out.certificate.rho, &CertifyOptions::default());
    Ok(Row {
        kappa: cfg.kappa,
        rho: c.passed.then_some(c.rho),
        margin: c.passed.then_some(c.margin()),
        file,
    })
}

fn sweep(a: SweepArgs) -> anyhow::Result<ExitCode> {
    let mut kappas = Vec::new();
    for k in a.kappas.iter().map(|s| s.trim()).filter(|s| !s.is_empty()) {
        match k.parse::<f64>() {
            Ok(v) => kappas.push(v),
            Err(_) => {
                eprintln!("error: '{k}' is not a number");
                return Ok(ExitCode::from(EXIT_INPUT));
            }
        }
    }
    if kappas.is_empty() {
        eprintln!("error: --kappas needs at least one value");
        return Ok(ExitCode::from(EXIT_INPUT));
    }
    kappas.sort_by(f64::total_cmp);
    kappas.dedup();
    let configs: Vec<SolverConfig> = kappas.iter().map(|&k| config(&a.search, k)).collect();
    for c in &configs {
        if let Err(e) = c.validate() {
            eprintln!("error: {e}");
            return Ok(ExitCode::from(EXIT_INPUT));
        }
    }
    let warm = match warm_start(&a.search) {
        Ok(w) => w,
        Err(code) => return Ok(code),
    };
    let dir = match &a.dir {
        Some(d) => d.clone(),
        None => a
            .out
            .parent()
            .filter(|p| !p.as_os_str().is_empty())
            .map(Path::to_path_buf)
            .unwrap_or_else(|| PathBuf::from(".")),
    };
    fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;

    let rows: Vec<anyhow::Result<Row>> = configs
        .par_iter()
        .map(|c| sweep_row(c, warm.as_ref(), &dir))
        .collect();

    let mut w = csv::Writer::from_path(&a.out).with_context(|| format!("writing {}", a.out.display()))?;
    w.write_record(["kappa", "rho", "margin", "file"])?;
    let fmt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
    for (k, r) in kappas.iter().zip(rows) {
        match r {
            Ok(r) => {
                w.write_record([
                    r.kappa.to_string(),
                    fmt(r.rho),
                    fmt(r.margin),
                    r.file.display().to_string(),
                ])?;
                match r.rho {
                    Some(rho) => println!("CERTIFIED omega({}) <= {rho:.7}", r.kappa),
                    None => println!("kappa {}: no feasible point found", r.kappa),
                }
            }
            Err(e) => {
                log::error!("kappa {k}: {e:#}");
                w.write_record([k.to_string(), String::new(), String::new(), String::new()])?;
            }
        }
    }
    w.flush()?;
    Ok(ExitCode::SUCCESS)
}

fn init_threads() -> anyhow::Result<()> {
    if let Ok(v) = std::env::var("CW4_THREADS") {
        let n: usize = v
            .parse()
            .ok()
            .filter(|&n| n > 0)
            .with_context(|| format!("CW4_THREADS must be a positive integer, got '{v}'"))?;
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    if let Err(e) = init_threads() {
        eprintln!("error: {e:#}");
        return ExitCode::from(EXIT_INPUT);
    }
    let result = match cli.command {
        Command::Verify(a) => Ok(verify(a)),
        Command::Bound(a) => Ok(bound(a)),
        Command::Optimize(a) => optimize(a),
        Command::Sweep(a) => sweep(a),
    };
    result.unwrap_or_else(|e| {
        eprintln!("error: {e:#}");
        ExitCode::from(EXIT_FAIL)
    })
}
