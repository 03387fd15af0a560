//! Run configuration: JSON file plus `--set key=value` overrides.

use std::path::PathBuf;
use std::sync::Arc;

use anyhow::{anyhow, bail, Context, Result};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use kirchhoff_core::basis::{enumerate_modes, DomainSpec};
use kirchhoff_core::field::{Field, TimeProfile};
use kirchhoff_core::kirchhoff::ProblemData;
use kirchhoff_core::nashmoser::{Grid, SolverParams};
use kirchhoff_core::sweep::SweepConfig;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Command {
    Hill,
    Solve,
    Sweep,
    Verify,
    Convert,
}

/// One forcing term `label ↦ mean + Σ cos[i] cos((i+1)t) + Σ sin[i] sin((i+1)t)`.
#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ForcingTerm {
    pub label: Vec<i64>,
    #[serde(default)]
    pub mean: f64,
    #[serde(default)]
    pub cos: Vec<f64>,
    #[serde(default)]
    pub sin: Vec<f64>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemBlock {
    pub domain: DomainSpec,
    pub omega: f64,
    pub mu: f64,
    pub gamma: f64,
    /// Defaults to `solver.s1 − 1`.
    pub tau: Option<f64>,
    pub forcing: Vec<ForcingTerm>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HillBlock {
    #[serde(default)]
    pub mean: f64,
    #[serde(default)]
    pub cos: Vec<f64>,
    #[serde(default)]
    pub sin: Vec<f64>,
    pub l: usize,
    pub mdisc: usize,
    #[serde(default)]
    pub liouville: bool,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConvertBlock {
    pub epsilon: Option<f64>,
    pub mu: Option<f64>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VerifyBlock {
    pub solution: PathBuf,
    #[serde(default)]
    pub grid: Grid,
}

/// Fully parsed configuration.
#[derive(Clone, Debug)]
pub struct RunConfig {
    pub command: Command,
    pub problem: Option<ProblemData>,
    pub solver: SolverParams,
    pub sweep: Option<SweepConfig>,
    pub hill: Option<HillBlock>,
    pub convert: Option<ConvertBlock>,
    pub verify: Option<VerifyBlock>,
    pub output_dir: PathBuf,
    pub seed: u64,
}

/// Sets `a.b.c = value` in a JSON tree, creating objects on the way.
pub fn apply_override(root: &mut Value, assignment: &str) -> Result<()> {
    let (key, raw) = assignment
        .split_once('=')
        .ok_or_else(|| anyhow!("override `{assignment}` is not of the form key=value"))?;
    let value = serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_string()));
    let mut node = root;
    let parts: Vec<&str> = key.split('.').collect();
    for (i, part) in parts.iter().enumerate() {
        if part.is_empty() {
            bail!("override key `{key}` has an empty component");
        }
        let obj = node
            .as_object_mut()
            .ok_or_else(|| anyhow!("override `{key}`: `{}` is not an object", parts[..i].join(".")))?;
        if i + 1 == parts.len() {
            obj.insert(part.to_string(), value);
            return Ok(());
        }
        node = obj
            .entry(part.to_string())
            .or_insert_with(|| Value::Object(Default::default()));
    }
    unreachable!("split yields at least one component")
}

fn block<T: DeserializeOwned>(root: &Value, key: &str) -> Result<Option<T>> {
    match root.get(key) {
        None | Some(Value::Null) => Ok(None),
        Some(v) => serde_json::from_value(v.clone())
            .map(Some)
            .with_context(|| format!("invalid `{key}` block")),
    }
}

fn build_problem(p: ProblemBlock, solver: &SolverParams) -> Result<ProblemData> {
    let cutoff = p
        .forcing
        .iter()
        .map(|t| t.label.iter().map(|&m| (m * m) as f64).sum::<f64>())
        .fold(1.0, f64::max);
    let cutoff = match &p.domain {
        DomainSpec::DirichletBox { sides } => {
            // λ² = Σ (π m_i / L_i)²
            let scale = sides
                .iter()
                .map(|l| (std::f64::consts::PI / l).powi(2))
                .fold(0.0, f64::max);
            (cutoff * scale).sqrt()
        }
        _ => cutoff.sqrt(),
    };
    let table = Arc::new(
        enumerate_modes(&p.domain, cutoff * (1.0 + 1e-12))
            .context("problem.domain: cannot enumerate modes")?,
    );
    let mut forcing = Field::zero(p.domain.clone(), table, solver.sigma);
    for (i, t) in p.forcing.iter().enumerate() {
        let profile = TimeProfile::from_cos_sin(t.mean, &t.cos, &t.sin);
        let existing = forcing
            .modes()
            .index_of(&t.label)
            .and_then(|j| forcing.profile(j).cloned())
            .unwrap_or_else(TimeProfile::zero);
        forcing
            .set_by_label(&t.label, &existing + &profile)
            .with_context(|| format!("problem.forcing[{i}]: label {:?}", t.label))?;
    }
    let pd = ProblemData {
        domain: p.domain,
        forcing,
        omega: p.omega,
        mu: p.mu,
        gamma: p.gamma,
        tau: p.tau.unwrap_or_else(|| solver.tau()),
    };
    pd.validate().context("problem")?;
    Ok(pd)
}

impl RunConfig {
    /// Parses the JSON tree after overrides have been applied.
    pub fn from_value(root: &Value, command: Option<Command>) -> Result<Self> {
        if !root.is_object() {
            bail!("configuration must be a JSON object");
        }
        let command = match command {
            Some(c) => c,
            None => block::<Command>(root, "command")?
                .ok_or_else(|| anyhow!("no command given on the command line or in `command`"))?,
        };
        let seed: u64 = block(root, "seed")?.unwrap_or(0);
        let mut solver: SolverParams = block(root, "solver")?.unwrap_or_default();
        if root.get("solver").and_then(|s| s.get("seed")).is_none() {
            solver.seed = seed;
        }
        let problem = match block::<ProblemBlock>(root, "problem")? {
            Some(p) => {
                let d = p.domain.dimension();
                solver.validate(d).context("solver")?;
                Some(build_problem(p, &solver)?)
            }
            None => None,
        };
        let mut sweep: Option<SweepConfig> = block(root, "sweep")?;
        if let Some(s) = sweep.as_mut() {
            if root.get("sweep").and_then(|v| v.get("solver")).is_none() {
                s.solver = solver.clone();
            }
            if root.get("sweep").and_then(|v| v.get("seed")).is_none() {
                s.seed = seed;
            }
            s.validate().context("sweep")?;
        }
        let cfg = RunConfig {
            command,
            problem,
            solver,
            sweep,
            hill: block(root, "hill")?,
            convert: block(root, "convert")?,
            verify: block(root, "verify")?,
            output_dir: block(root, "output_dir")?.unwrap_or_else(|| PathBuf::from("out")),
            seed,
        };
        cfg.check_required()?;
        Ok(cfg)
    }

    fn check_required(&self) -> Result<()> {
        let need = |ok: bool, what: &str| {
            if ok {
                Ok(())
            } else {
                Err(anyhow!("command `{:?}` needs a `{what}` block", self.command))
            }
        };
        match self.command {
            Command::Hill => need(self.hill.is_some(), "hill"),
            Command::Solve => need(self.problem.is_some(), "problem"),
            Command::Sweep => {
                need(self.problem.is_some(), "problem")?;
                need(self.sweep.is_some(), "sweep")
            }
            Command::Verify => {
                need(self.problem.is_some(), "problem")?;
                need(self.verify.is_some(), "verify")
            }
            Command::Convert => {
                let c = self
                    .convert
                    .as_ref()
                    .ok_or_else(|| anyhow!("command `convert` needs a `convert` block"))?;
                if c.epsilon.is_some() == c.mu.is_some() {
                    bail!("convert: give exactly one of `epsilon` or `mu`");
                }
                Ok(())
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn overrides_create_nested_keys() {
        let mut v = serde_json::json!({"problem": {"omega": 0.5}});
        apply_override(&mut v, "problem.omega=1").unwrap();
        apply_override(&mut v, "solver.m_time=32").unwrap();
        apply_override(&mut v, "output_dir=runs/a").unwrap();
        assert_eq!(v["problem"]["omega"], 1);
        assert_eq!(v["solver"]["m_time"], 32);
        assert_eq!(v["output_dir"], "runs/a");
        assert!(apply_override(&mut v, "novalue").is_err());
        assert!(apply_override(&mut v, "problem.omega.x=1").is_err());
    }
}
