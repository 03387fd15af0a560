//! `kirchhoff`: Nash-Moser solver for the forced Kirchhoff equation.
//!
//! Exit codes: 0 on success, 2 when the parameters are rejected as resonant
//! (or the iteration is otherwise refused), 1 on errors.

mod config;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::Parser;
use serde_json::{json, Value};

use config::{apply_override, Command, RunConfig};
use kirchhoff_core::field::{Field, TimeProfile};
use kirchhoff_core::hill::{liouville_oracle, solve_hill};
use kirchhoff_core::kirchhoff::{convert_scaling, ScalingDirection};
use kirchhoff_core::nashmoser::{solve, verify_solution, Grid};
use kirchhoff_core::sweep::{measure_curve, records_to_csv, sweep_omega};

#[derive(Parser, Debug)]
#[command(name = "kirchhoff", version, about)]
struct Cli {
    /// Command to run; overrides `command` in the config file.
    #[arg(value_enum)]
    command: Option<Command>,
    /// JSON configuration file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Override a config entry, e.g. `--set problem.omega=0.7`.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
    /// Worker threads for `sweep`.
    #[arg(long)]
    workers: Option<usize>,
    /// Output directory; overrides `output_dir`.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Random seed; overrides `seed`.
    #[arg(long)]
    seed: Option<u64>,
}

enum Outcome {
    Done,
    Rejected,
}

fn load(cli: &Cli) -> Result<RunConfig> {
    let mut root = match &cli.config {
        Some(path) => {
            let text = fs::read_to_string(path)
                .with_context(|| format!("cannot read config {}", path.display()))?;
            serde_json::from_str(&text)
                .with_context(|| format!("config {} is not valid JSON", path.display()))?
        }
        None => json!({}),
    };
    for o in &cli.overrides {
        apply_override(&mut root, o)?;
    }
    if let Some(out) = &cli.out {
        root["output_dir"] = Value::String(out.display().to_string());
    }
    if let Some(seed) = cli.seed {
        root["seed"] = json!(seed);
    }
    RunConfig::from_value(&root, cli.command)
}

fn write(dir: &Path, name: &str, contents: &str) -> Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("cannot create {}", dir.display()))?;
    let path = dir.join(name);
    fs::write(&path, contents).with_context(|| format!("cannot write {}", path.display()))
}

fn pretty(v: &Value) -> String {
    serde_json::to_string_pretty(v).expect("JSON values serialize")
}

/// Prints `x` rounded to 14 significant digits.
fn short(x: f64) -> String {
    format!("{:.13e}", x)
        .parse::<f64>()
        .map(|v| v.to_string())
        .unwrap_or_else(|_| x.to_string())
}

fn run_hill(cfg: &RunConfig) -> Result<Outcome> {
    let h = cfg.hill.as_ref().expect("checked");
    let alpha = TimeProfile::from_cos_sin(h.mean, &h.cos, &h.sin);
    let spec = solve_hill(&alpha, h.l, h.mdisc)?;
    write(&cfg.output_dir, "hill.csv", &spec.to_csv())?;
    let mut report = spec.to_json_value();
    if h.liouville {
        report["liouville_p"] = json!(liouville_oracle(&alpha, h.l, h.mdisc)?);
    }
    write(&cfg.output_dir, "hill.json", &pretty(&report))?;
    for (l, p) in spec.frequencies().iter().enumerate() {
        println!("p_{l} = {p:.12}");
    }
    Ok(Outcome::Done)
}

fn run_solve(cfg: &RunConfig) -> Result<Outcome> {
    let pd = cfg.problem.as_ref().expect("checked");
    let out = solve(pd, &cfg.solver)?;
    let dir = &cfg.output_dir;
    write(dir, "trace.csv", &out.trace.to_csv())?;
    let mut report = json!({
        "status": out.status,
        "symmetry": out.symmetry,
        "final_residual": out.final_residual,
        "confirm_residual": out.confirm_residual,
        "problem": pd.to_json_value(),
        "solver": cfg.solver,
        "seed": cfg.seed,
    });
    if let Some((k, b)) = out.envelope_fit(pd.mu, pd.gamma, cfg.solver.chi) {
        report["envelope"] = json!({"k_fit": k, "b_fit": b});
    }
    if let Some(u) = &out.solution {
        write(dir, "solution.json", &u.to_json())?;
        report["verification"] = serde_json::to_value(verify_solution(pd, u, Grid::default())?)?;
    }
    write(dir, "outcome.json", &pretty(&report))?;
    println!("status: {}", out.status.label());
    if let Some((j, l)) = out.status.offender() {
        println!("offender: j = {j}, l = {l}");
    }
    if let Some(r) = out.final_residual {
        println!("residual: {r:e}");
    }
    Ok(if out.status.is_converged() {
        Outcome::Done
    } else {
        Outcome::Rejected
    })
}

fn run_sweep(cfg: &RunConfig, workers: Option<usize>) -> Result<Outcome> {
    let pd = cfg.problem.as_ref().expect("checked");
    let sweep = cfg.sweep.as_ref().expect("checked");
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.unwrap_or(0))
        .build()
        .context("cannot start worker pool")?;
    let records = pool.install(|| sweep_omega(sweep, pd))?;
    write(&cfg.output_dir, "sweep.csv", &records_to_csv(&records, true))?;
    match measure_curve(&records) {
        Ok(curve) => {
            write(&cfg.output_dir, "measure.csv", &curve.to_csv())?;
            for &(g, f, n) in &curve.points {
                println!("gamma = {g}: accepted {f:.4} of {n}");
            }
            println!("fitted slope: {}", curve.slope);
        }
        Err(e) => println!("measure curve skipped: {e}"),
    }
    Ok(Outcome::Done)
}

fn run_verify(cfg: &RunConfig) -> Result<Outcome> {
    let pd = cfg.problem.as_ref().expect("checked");
    let v = cfg.verify.as_ref().expect("checked");
    let text = fs::read_to_string(&v.solution)
        .with_context(|| format!("cannot read solution {}", v.solution.display()))?;
    let u = Field::from_json(&text).context("solution file")?;
    let report = verify_solution(pd, &u, v.grid)?;
    write(&cfg.output_dir, "verification.json", &pretty(&serde_json::to_value(&report)?))?;
    println!("coefficient residual: {:e}", report.coeff_residual);
    println!("pointwise residual: {:e}", report.pointwise_residual);
    Ok(Outcome::Done)
}

fn run_convert(cfg: &RunConfig) -> Result<Outcome> {
    let c = cfg.convert.as_ref().expect("checked");
    if let Some(eps) = c.epsilon {
        let (mu, _) = convert_scaling(eps, ScalingDirection::PhysicalToScaled, None)?;
        println!("mu = {}", short(mu));
    } else if let Some(mu) = c.mu {
        let (eps, _) = convert_scaling(mu, ScalingDirection::ScaledToPhysical, None)?;
        println!("epsilon = {}", short(eps));
    }
    Ok(Outcome::Done)
}

fn run(cli: &Cli) -> Result<Outcome> {
    let cfg = load(cli)?;
    match cfg.command {
        Command::Hill => run_hill(&cfg),
        Command::Solve => run_solve(&cfg),
        Command::Sweep => run_sweep(&cfg, cli.workers),
        Command::Verify => run_verify(&cfg),
        Command::Convert => run_convert(&cfg),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(Outcome::Done) => ExitCode::SUCCESS,
        Ok(Outcome::Rejected) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
