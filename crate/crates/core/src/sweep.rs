//! Parameter-plane sweeps and grid-counting measure estimates.

use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{sigma_s_norm, NormParams};
use crate::kirchhoff::ProblemData;
use crate::nashmoser::{solve, SolveStatus, SolverParams};

/// Minimum number of grid points per γ stratum for a measure estimate.
pub const MIN_STRATUM: usize = 100;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub omega_interval: (f64, f64),
    pub n_omega: usize,
    /// Fixed μ values. When empty, `n_mu` values are drawn log-uniformly
    /// from `(δ γ 10^{-decades}, δ γ)` for each γ.
    #[serde(default)]
    pub mu_values: Vec<f64>,
    pub gamma_values: Vec<f64>,
    #[serde(default)]
    pub solver: SolverParams,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_delta")]
    pub delta_emp: f64,
    #[serde(default = "default_n_mu")]
    pub n_mu: usize,
    #[serde(default = "default_decades")]
    pub mu_decades: f64,
}

fn default_delta() -> f64 {
    0.1
}

fn default_n_mu() -> usize {
    4
}

fn default_decades() -> f64 {
    2.0
}

impl SweepConfig {
    pub fn validate(&self) -> Result<()> {
        let (a, b) = self.omega_interval;
        if !(a > 0.0 && a < b && b.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "sweep.omega_interval must satisfy 0 < a < b, got ({a}, {b})"
            )));
        }
        if self.n_omega < 2 {
            return Err(Error::InvalidInput("sweep.n_omega must be >= 2".into()));
        }
        if self.gamma_values.is_empty() || self.gamma_values.iter().any(|&g| !(g > 0.0)) {
            return Err(Error::InvalidInput(
                "sweep.gamma_values must be a nonempty list of positive reals".into(),
            ));
        }
        if self.mu_values.iter().any(|&m| !(m > 0.0)) {
            return Err(Error::InvalidInput("sweep.mu_values must be positive".into()));
        }
        if self.mu_values.is_empty() && (self.n_mu < 1 || !(self.delta_emp > 0.0)) {
            return Err(Error::InvalidInput(
                "sweep needs mu_values or n_mu >= 1 with delta_emp > 0".into(),
            ));
        }
        Ok(())
    }

    /// Uniform grid including both endpoints.
    pub fn omegas(&self) -> Vec<f64> {
        let (a, b) = self.omega_interval;
        let n = self.n_omega;
        (0..n)
            .map(|i| a + (b - a) * i as f64 / (n - 1) as f64)
            .collect()
    }

    /// μ values used for stratum `γ`.
    pub fn mus_for(&self, gamma: f64, stratum: usize) -> Vec<f64> {
        if !self.mu_values.is_empty() {
            return self.mu_values.clone();
        }
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed.wrapping_add(stratum as u64));
        let top = (self.delta_emp * gamma).ln();
        let bottom = top - self.mu_decades * std::f64::consts::LN_10;
        (0..self.n_mu)
            .map(|_| rng.gen_range(bottom..top).exp())
            .collect()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRecord {
    pub omega: f64,
    pub mu: f64,
    pub gamma: f64,
    pub status: SolveStatus,
    pub rejection_stage: Option<usize>,
    pub offender: Option<(usize, usize)>,
    pub final_residual: Option<f64>,
    pub norm_u: Option<f64>,
    pub wall_ms: f64,
}

impl SweepRecord {
    pub fn accepted(&self) -> bool {
        self.status.is_converged()
    }
}

fn run_point(pd_template: &ProblemData, solver: &SolverParams, omega: f64, mu: f64, gamma: f64) -> SweepRecord {
    let start = Instant::now();
    let pd = ProblemData {
        omega,
        mu,
        gamma,
        ..pd_template.clone()
    };
    let (status, final_residual, norm_u) = match solve(&pd, solver) {
        Ok(out) => {
            let norm = out
                .solution
                .as_ref()
                .map(|u| sigma_s_norm(u, NormParams::new(solver.sigma, 0.0)));
            (out.status, out.final_residual, norm)
        }
        Err(e) => (
            SolveStatus::Diverged {
                stage: 0,
                reason: e.to_string(),
            },
            None,
            None,
        ),
    };
    SweepRecord {
        omega,
        mu,
        gamma,
        rejection_stage: status.stage(),
        offender: status.offender(),
        status,
        final_residual,
        norm_u,
        wall_ms: start.elapsed().as_secs_f64() * 1e3,
    }
}

/// Solves at every grid point; records are sorted by `(γ, μ, ω)`.
pub fn sweep_omega(cfg: &SweepConfig, pd_template: &ProblemData) -> Result<Vec<SweepRecord>> {
    cfg.validate()?;
    let omegas = cfg.omegas();
    let mut points = Vec::new();
    for (s, &gamma) in cfg.gamma_values.iter().enumerate() {
        for mu in cfg.mus_for(gamma, s) {
            for &omega in &omegas {
                points.push((omega, mu, gamma));
            }
        }
    }
    let mut records: Vec<SweepRecord> = points
        .par_iter()
        .map(|&(omega, mu, gamma)| run_point(pd_template, &cfg.solver, omega, mu, gamma))
        .collect();
    records.sort_by(|a, b| {
        a.gamma
            .total_cmp(&b.gamma)
            .then(a.mu.total_cmp(&b.mu))
            .then(a.omega.total_cmp(&b.omega))
    });
    Ok(records)
}

fn opt<T: ToString>(v: Option<T>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// CSV with columns
/// `omega,mu,gamma,status,rejection_stage,offender_j,offender_l,final_residual,norm_u,wall_ms`.
///
/// With `timing = false` the wall-time column is left empty so that the
/// output is reproducible byte for byte.
pub fn records_to_csv(records: &[SweepRecord], timing: bool) -> String {
    let mut s = String::from(
        "omega,mu,gamma,status,rejection_stage,offender_j,offender_l,final_residual,norm_u,wall_ms\n",
    );
    for r in records {
        s.push_str(&format!(
            "{:?},{:?},{:?},{},{},{},{},{},{},{}\n",
            r.omega,
            r.mu,
            r.gamma,
            r.status.label(),
            opt(r.rejection_stage),
            opt(r.offender.map(|o| o.0)),
            opt(r.offender.map(|o| o.1)),
            opt(r.final_residual.map(|x| format!("{x:e}"))),
            opt(r.norm_u.map(|x| format!("{x:e}"))),
            if timing { format!("{:.3}", r.wall_ms) } else { String::new() },
        ));
    }
    s
}

/// Accepted fraction per γ and the through-origin slope of `1 − fraction`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MeasureCurve {
    /// `(γ, accepted fraction, points)`, ascending in γ.
    pub points: Vec<(f64, f64, usize)>,
    /// `C̄_emp = Σ γ (1−f) / Σ γ²`.
    pub slope: f64,
}

impl MeasureCurve {
    pub fn to_csv(&self) -> String {
        let mut s = String::from("gamma,fraction,fitted_slope\n");
        for &(g, f, _) in &self.points {
            s.push_str(&format!("{g:?},{f:?},{:?}\n", self.slope));
        }
        s
    }

    /// Whether the rejected fraction is nondecreasing in γ.
    pub fn rejection_monotone(&self) -> bool {
        self.points.windows(2).all(|w| w[1].1 <= w[0].1)
    }
}

/// Pools μ values within each γ stratum.
pub fn measure_curve(records: &[SweepRecord]) -> Result<MeasureCurve> {
    let mut gammas: Vec<f64> = records.iter().map(|r| r.gamma).collect();
    gammas.sort_by(f64::total_cmp);
    gammas.dedup();
    if gammas.len() < 2 {
        return Err(Error::InsufficientData(format!(
            "need at least 2 distinct gamma values, got {}",
            gammas.len()
        )));
    }
    let mut points = Vec::with_capacity(gammas.len());
    for &g in &gammas {
        let stratum: Vec<&SweepRecord> = records.iter().filter(|r| r.gamma == g).collect();
        if stratum.len() < MIN_STRATUM {
            return Err(Error::InsufficientData(format!(
                "gamma = {g} has {} points, need {MIN_STRATUM}",
                stratum.len()
            )));
        }
        let acc = stratum.iter().filter(|r| r.accepted()).count();
        points.push((g, acc as f64 / stratum.len() as f64, stratum.len()));
    }
    let num: f64 = points.iter().map(|&(g, f, _)| g * (1.0 - f)).sum();
    let den: f64 = points.iter().map(|&(g, _, _)| g * g).sum();
    Ok(MeasureCurve {
        points,
        slope: num / den,
    })
}
