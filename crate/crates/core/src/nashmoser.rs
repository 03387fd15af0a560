//! Outer Nash-Moser iteration, verification and uniqueness probes.
//!
//! Starting from `u_0 = 0`, stage `n` screens the Hill spectrum of `μ a_n`
//! at cutoff `N_{n+1} = min(exp(χ^{n+1}), N_cap)` and, if the screen passes,
//! sets `u_{n+1} = u_n − F'(u_n)⁻¹ P_{n+1} F(u_n)`. The torus problem is
//! split into the spatial-mean equation, solved exactly, and the Dirichlet
//! machinery on the remaining modes.

use std::sync::Arc;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::basis::{enumerate_modes, ModeTable};
use crate::error::{Error, Result};
use crate::field::{project, sigma_s_norm, Field, NormParams, TimeProfile};
use crate::kirchhoff::{residual, ProblemData};
use crate::linsolve::{
    check_nonresonance, invert_linearized, LinearizationSetup, LinearizedContext, TimeSymmetry,
};

/// Time symmetry requested for a solve.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SymmetryChoice {
    /// Use the largest symmetry of the forcing.
    #[default]
    Auto,
    Full,
    HalfWaveOdd,
}

/// Tuning of the outer iteration.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverParams {
    pub sigma: f64,
    /// Forcing regularity.
    pub s0: f64,
    /// Solution regularity; the default `τ` is `s1 − 1`.
    pub s1: f64,
    pub chi: f64,
    /// Last stage index.
    pub n_max: usize,
    /// Ceiling on `N_n`.
    pub n_cap: f64,
    /// Time band of the iterates.
    pub m_time: usize,
    pub residual_tol: f64,
    pub neumann_tol: f64,
    pub neumann_max_terms: usize,
    /// Re-solve with `2·m_time` before declaring convergence.
    pub confirm: bool,
    pub symmetry: SymmetryChoice,
    pub seed: u64,
}

impl Default for SolverParams {
    fn default() -> Self {
        SolverParams {
            sigma: 0.0,
            s0: 2.5,
            s1: 2.2,
            chi: 1.3,
            n_max: 12,
            n_cap: 64.0,
            m_time: 64,
            residual_tol: 1e-12,
            neumann_tol: 1e-13,
            neumann_max_terms: 200,
            confirm: true,
            symmetry: SymmetryChoice::Auto,
            seed: 0,
        }
    }
}

impl SolverParams {
    pub fn tau(&self) -> f64 {
        self.s1 - 1.0
    }

    /// Cutoff `N_n = min(exp(χⁿ), N_cap)`.
    pub fn cutoff(&self, n: usize) -> f64 {
        let e = self.chi.powi(n as i32);
        if e > 700.0 {
            self.n_cap
        } else {
            e.exp().min(self.n_cap)
        }
    }

    /// Checks the constraints for a domain of dimension `d`.
    pub fn validate(&self, d: usize) -> Result<()> {
        let d = d as f64;
        let bad = |m: String| Err(Error::InvalidInput(m));
        if !(self.sigma >= 0.0 && self.sigma.is_finite()) {
            return bad(format!("solver.sigma must be >= 0, got {}", self.sigma));
        }
        if !(self.s0 > 2.0 * d) {
            return bad(format!("solver.s0 must exceed 2d = {}, got {}", 2.0 * d, self.s0));
        }
        if !(self.s1 > 1.0 + d && self.s1 < 1.0 + self.s0 / 2.0) {
            return bad(format!(
                "solver.s1 must lie in ({}, {}), got {}",
                1.0 + d,
                1.0 + self.s0 / 2.0,
                self.s1
            ));
        }
        if !(self.chi > 1.0 && self.chi < 2.0) {
            return bad(format!("solver.chi must lie in (1, 2), got {}", self.chi));
        }
        if !(self.n_cap >= 1.0 && self.n_cap.is_finite()) {
            return bad(format!("solver.n_cap must be >= 1, got {}", self.n_cap));
        }
        if self.m_time < 2 {
            return bad(format!("solver.m_time must be >= 2, got {}", self.m_time));
        }
        if !(self.residual_tol > 0.0 && self.neumann_tol > 0.0) {
            return bad("solver tolerances must be > 0".into());
        }
        if self.neumann_max_terms == 0 {
            return bad("solver.neumann_max_terms must be >= 1".into());
        }
        Ok(())
    }
}

/// One completed stage of the iteration.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StageRecord {
    pub n: usize,
    /// `N_{n+1}` used by the screen and the truncation.
    pub cutoff: f64,
    /// `‖h_{n+1}‖_{σ,0}`.
    pub h_norm: f64,
    /// `‖u_{n+1}‖_{σ,τ+1}`.
    pub u_norm: f64,
    /// `‖F(u_n)‖_{σ,τ−1}`.
    pub residual_in: f64,
    /// `‖F(u_{n+1})‖_{σ,τ−1}`.
    pub residual_out: f64,
    pub min_margin: f64,
    pub neumann_terms: usize,
    pub wall_ms: f64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct IterationTrace {
    pub records: Vec<StageRecord>,
    pub seed: u64,
}

impl IterationTrace {
    pub fn to_csv(&self) -> String {
        let mut s = String::from(
            "n,cutoff,h_norm,u_norm,residual_in,residual_out,min_margin,neumann_terms,wall_ms\n",
        );
        for r in &self.records {
            s.push_str(&format!(
                "{},{},{:e},{:e},{:e},{:e},{:e},{},{:.3}\n",
                r.n,
                r.cutoff,
                r.h_norm,
                r.u_norm,
                r.residual_in,
                r.residual_out,
                r.min_margin,
                r.neumann_terms,
                r.wall_ms
            ));
        }
        s
    }

    /// Residuals `‖F(u_0)‖, ‖F(u_1)‖, …`.
    pub fn residuals(&self) -> Vec<f64> {
        let mut out: Vec<f64> = self.records.first().map(|r| r.residual_in).into_iter().collect();
        out.extend(self.records.iter().map(|r| r.residual_out));
        out
    }
}

/// Verdict of a solve.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SolveStatus {
    Converged,
    /// The screen or a divisor check failed at `stage`.
    ResonanceRejected { stage: usize, j: usize, l: usize },
    /// The Neumann series or its inverse contract failed at `stage`.
    NeumannRejected { stage: usize },
    /// The iterate left the region where the linearization is defined.
    Diverged { stage: usize, reason: String },
    /// `n_max` reached, or the doubled-band re-solve disagreed.
    BudgetExhausted,
}

impl SolveStatus {
    pub fn is_converged(&self) -> bool {
        matches!(self, SolveStatus::Converged)
    }

    pub fn is_rejection(&self) -> bool {
        !self.is_converged()
    }

    pub fn label(&self) -> &'static str {
        match self {
            SolveStatus::Converged => "converged",
            SolveStatus::ResonanceRejected { .. } => "resonance_rejected",
            SolveStatus::NeumannRejected { .. } => "neumann_rejected",
            SolveStatus::Diverged { .. } => "diverged",
            SolveStatus::BudgetExhausted => "budget_exhausted",
        }
    }

    pub fn stage(&self) -> Option<usize> {
        match *self {
            SolveStatus::ResonanceRejected { stage, .. }
            | SolveStatus::NeumannRejected { stage }
            | SolveStatus::Diverged { stage, .. } => Some(stage),
            _ => None,
        }
    }

    pub fn offender(&self) -> Option<(usize, usize)> {
        match *self {
            SolveStatus::ResonanceRejected { j, l, .. } => Some((j, l)),
            _ => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SolveOutcome {
    pub status: SolveStatus,
    /// Present iff converged.
    pub solution: Option<Field>,
    pub trace: IterationTrace,
    pub symmetry: TimeSymmetry,
    /// `‖F(u)‖_{σ,τ−1}` of the last iterate.
    pub final_residual: Option<f64>,
    /// Final residual of the re-solve with doubled time band.
    pub confirm_residual: Option<f64>,
}

impl SolveOutcome {
    /// `(K, b)` of the least-squares envelope `‖h_k‖ ≈ K (μ/γ) exp(−b χ^k)`.
    pub fn envelope_fit(&self, mu: f64, gamma: f64, chi: f64) -> Option<(f64, f64)> {
        fit_envelope(&self.trace, mu, gamma, chi)
    }

    pub fn to_json_value(&self) -> serde_json::Value {
        serde_json::json!({
            "status": self.status,
            "symmetry": self.symmetry,
            "final_residual": self.final_residual,
            "confirm_residual": self.confirm_residual,
            "trace": self.trace,
            "solution": self.solution.as_ref().map(Field::to_json_value),
        })
    }
}

/// Fits `log(‖h_k‖ γ/μ) = log K − b χ^k` over the steps above roundoff.
pub fn fit_envelope(trace: &IterationTrace, mu: f64, gamma: f64, chi: f64) -> Option<(f64, f64)> {
    let hmax = trace.records.iter().map(|r| r.h_norm).fold(0.0, f64::max);
    let pts: Vec<(f64, f64)> = trace
        .records
        .iter()
        .filter(|r| r.h_norm > 1e-15 * hmax && r.h_norm > 0.0)
        .map(|r| (chi.powi(r.n as i32 + 1), (r.h_norm * gamma / mu).ln()))
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let slope = sxy / sxx;
    Some(((my - slope * mx).exp(), -slope))
}

/// Whether `‖F_{n+1}‖ ≤ c ‖F_n‖^{1.5}` holds for every step that starts
/// below `start` and ends above the roundoff `floor`.
pub fn newton_rate_holds(trace: &IterationTrace, c: f64, start: f64, floor: f64) -> bool {
    let r = trace.residuals();
    r.windows(2)
        .filter(|w| w[0] < start && w[1] > floor)
        .all(|w| w[1] <= c * w[0].powf(1.5))
}

fn resolve_symmetry(choice: SymmetryChoice, g: &Field) -> Result<TimeSymmetry> {
    let detected = TimeSymmetry::detect(g);
    match choice {
        SymmetryChoice::Auto => Ok(detected),
        SymmetryChoice::Full => Ok(TimeSymmetry::Full),
        SymmetryChoice::HalfWaveOdd => {
            if g.is_zero() || detected == TimeSymmetry::HalfWaveOdd {
                Ok(TimeSymmetry::HalfWaveOdd)
            } else {
                Err(Error::InvalidInput(
                    "half-wave-odd symmetry requested for a forcing with even harmonics".into(),
                ))
            }
        }
    }
}

fn working_table(pd: &ProblemData, params: &SolverParams) -> Result<Arc<ModeTable>> {
    let have = pd.forcing.modes();
    if have.cutoff() >= params.n_cap {
        Ok(have.clone())
    } else {
        Ok(Arc::new(enumerate_modes(&pd.domain, params.n_cap)?))
    }
}

struct RunResult {
    status: SolveStatus,
    u: Field,
    trace: IterationTrace,
    final_residual: f64,
}

fn iterate(
    pd: &ProblemData,
    params: &SolverParams,
    symmetry: TimeSymmetry,
    m_time: usize,
) -> Result<RunResult> {
    let table = working_table(pd, params)?;
    let mut forcing = pd.forcing.with_modes(table.clone())?;
    forcing.set_sigma(params.sigma);
    let pd = ProblemData {
        forcing,
        ..pd.clone()
    };
    let rnorm = NormParams::new(params.sigma, pd.tau - 1.0);
    let unorm = NormParams::new(params.sigma, pd.tau + 1.0);
    let hnorm = NormParams::new(params.sigma, 0.0);
    let setup = LinearizationSetup {
        omega: pd.omega,
        mu: pd.mu,
        gamma: pd.gamma,
        tau: pd.tau,
        sigma: params.sigma,
        symmetry,
    };

    let mut u = pd.forcing.zero_like();
    let mut trace = IterationTrace {
        records: Vec::new(),
        seed: params.seed,
    };
    let mut f_u = residual(&pd, &u)?;
    let mut r = sigma_s_norm(&f_u, rnorm);
    let done = |status, u, trace, r| {
        Ok(RunResult {
            status,
            u,
            trace,
            final_residual: r,
        })
    };
    if r < params.residual_tol {
        return done(SolveStatus::Converged, u, trace, r);
    }

    for n in 0..=params.n_max {
        let start = Instant::now();
        let cutoff = params.cutoff(n + 1);
        let ctx = match LinearizedContext::at(setup, &u, table.clone(), cutoff, m_time) {
            Ok(c) => c,
            Err(e @ (Error::WeightNotPositive { .. } | Error::InvalidInput(_))) => {
                return done(
                    SolveStatus::Diverged {
                        stage: n,
                        reason: e.to_string(),
                    },
                    u,
                    trace,
                    r,
                )
            }
            Err(e) => return Err(e),
        };
        let report = check_nonresonance(&ctx, pd.gamma, pd.tau, cutoff)?;
        if let Some((j, l, _)) = report.offender {
            return done(SolveStatus::ResonanceRejected { stage: n, j, l }, u, trace, r);
        }
        let rhs = project(&f_u, cutoff).truncate_time(m_time).scale(-1.0);
        let sol = match invert_linearized(
            &ctx,
            &u,
            &rhs,
            params.neumann_max_terms,
            params.neumann_tol,
        ) {
            Ok(s) => s,
            Err(Error::NonResonanceViolated { j, l, .. }) => {
                return done(SolveStatus::ResonanceRejected { stage: n, j, l }, u, trace, r)
            }
            Err(Error::NeumannDiverging { .. } | Error::InverseContract { .. }) => {
                return done(SolveStatus::NeumannRejected { stage: n }, u, trace, r)
            }
            Err(e) => return Err(e),
        };
        let h = sol.solution;
        u = u.add(&h);
        f_u = residual(&pd, &u)?;
        let r_new = sigma_s_norm(&f_u, rnorm);
        trace.records.push(StageRecord {
            n,
            cutoff,
            h_norm: sigma_s_norm(&h, hnorm),
            u_norm: sigma_s_norm(&u, unorm),
            residual_in: r,
            residual_out: r_new,
            min_margin: report.min_margin,
            neumann_terms: sol.terms,
            wall_ms: start.elapsed().as_secs_f64() * 1e3,
        });
        r = r_new;
        if !r.is_finite() {
            return done(
                SolveStatus::Diverged {
                    stage: n,
                    reason: "non-finite residual".into(),
                },
                u,
                trace,
                r,
            );
        }
        if r < params.residual_tol {
            return done(SolveStatus::Converged, u, trace, r);
        }
    }
    done(SolveStatus::BudgetExhausted, u, trace, r)
}

/// Runs the iteration and, on convergence, the doubled-band confirmation.
fn solve_confirmed(
    pd: &ProblemData,
    params: &SolverParams,
    symmetry: TimeSymmetry,
) -> Result<(RunResult, Option<f64>)> {
    let mut run = iterate(pd, params, symmetry, params.m_time)?;
    let mut confirm = None;
    if params.confirm && run.status.is_converged() && !run.trace.records.is_empty() {
        let check = iterate(pd, params, symmetry, 2 * params.m_time)?;
        confirm = Some(check.final_residual);
        let agree = check.status.is_converged()
            && (check.final_residual - run.final_residual).abs() < 10.0 * params.residual_tol;
        if !agree {
            run.status = SolveStatus::BudgetExhausted;
        }
    }
    Ok((run, confirm))
}

fn outcome(run: RunResult, confirm: Option<f64>, symmetry: TimeSymmetry) -> SolveOutcome {
    let converged = run.status.is_converged();
    SolveOutcome {
        status: run.status,
        solution: converged.then_some(run.u),
        trace: run.trace,
        symmetry,
        final_residual: Some(run.final_residual),
        confirm_residual: confirm,
    }
}

/// Solves the Dirichlet problem.
pub fn solve_dirichlet(pd: &ProblemData, params: &SolverParams) -> Result<SolveOutcome> {
    if pd.domain.is_periodic() {
        return Err(Error::InvalidInput(
            "solve_dirichlet needs a Dirichlet domain".into(),
        ));
    }
    pd.validate()?;
    params.validate(pd.domain.dimension())?;
    let symmetry = resolve_symmetry(params.symmetry, &pd.forcing)?;
    let (run, confirm) = solve_confirmed(pd, params, symmetry)?;
    Ok(outcome(run, confirm, symmetry))
}

/// Exact solution of `ω² y'' = μ g_0` with zero mean.
pub fn solve_mean_equation(omega: f64, mu: f64, g0: &TimeProfile) -> TimeProfile {
    let w2 = omega * omega;
    g0.map_harmonics(|k, c| {
        if k == 0 {
            c * 0.0
        } else {
            -c * (mu / (w2 * (k * k) as f64))
        }
    })
}

/// Solves the torus problem by the spatial-mean / complement split.
pub fn solve_periodic(pd: &ProblemData, params: &SolverParams) -> Result<SolveOutcome> {
    if !pd.domain.is_periodic() {
        return Err(Error::InvalidInput("solve_periodic needs a torus".into()));
    }
    pd.validate()?;
    params.validate(pd.domain.dimension())?;

    let zero_label = vec![0i64; pd.domain.dimension()];
    let j0 = pd
        .forcing
        .modes()
        .index_of(&zero_label)
        .ok_or_else(|| Error::InvalidInput("mode table lacks the constant mode".into()))?;
    let y = pd
        .forcing
        .profile(j0)
        .map(|g0| solve_mean_equation(pd.omega, pd.mu, g0));
    let g_w = pd.forcing.retain_modes(|_, lambda| lambda > 0.0);
    let pd_w = ProblemData {
        forcing: g_w,
        ..pd.clone()
    };
    let symmetry = resolve_symmetry(params.symmetry, &pd_w.forcing)?;
    let (mut run, confirm) = solve_confirmed(&pd_w, params, symmetry)?;
    if let Some(y) = y.filter(|y| !y.is_zero()) {
        let jy = run
            .u
            .modes()
            .index_of(&zero_label)
            .ok_or_else(|| Error::InvalidInput("mode table lacks the constant mode".into()))?;
        run.u.set_profile(jy, y)?;
    }
    let full = ProblemData {
        forcing: pd.forcing.with_modes(run.u.modes().clone())?,
        ..pd.clone()
    };
    let r = residual(&full, &run.u)?;
    run.final_residual = sigma_s_norm(&r, NormParams::new(params.sigma, pd.tau - 1.0));
    Ok(outcome(run, confirm, symmetry))
}

/// Dispatches on the boundary condition.
pub fn solve(pd: &ProblemData, params: &SolverParams) -> Result<SolveOutcome> {
    if pd.domain.is_periodic() {
        solve_periodic(pd, params)
    } else {
        solve_dirichlet(pd, params)
    }
}

/// Collocation grid for [`verify_solution`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Grid {
    /// Points per spatial dimension.
    pub nx: usize,
    pub nt: usize,
}

impl Default for Grid {
    fn default() -> Self {
        Grid { nx: 32, nt: 64 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    /// `‖F(u)‖_{σ,τ−1}`.
    pub coeff_residual: f64,
    /// Max of the pointwise residual over the grid.
    pub pointwise_residual: f64,
    /// `‖u‖_{σ,s1} γ/μ`.
    pub norm_ratio: f64,
    /// `‖u_tt‖_{σ,s1−2} γ ω²/μ`.
    pub accel_ratio: f64,
    pub grid: Grid,
}

fn grid_points(pd: &ProblemData, nx: usize) -> Vec<Vec<f64>> {
    let cell = pd.domain.cell();
    let periodic = pd.domain.is_periodic();
    let axis = |len: f64| -> Vec<f64> {
        (0..nx)
            .map(|i| {
                if periodic {
                    len * i as f64 / nx as f64
                } else {
                    len * (i as f64 + 0.5) / nx as f64
                }
            })
            .collect()
    };
    let mut pts: Vec<Vec<f64>> = vec![Vec::new()];
    for &len in &cell {
        let ax = axis(len);
        pts = pts
            .into_iter()
            .flat_map(|p| {
                ax.iter().map(move |&x| {
                    let mut q = p.clone();
                    q.push(x);
                    q
                })
            })
            .collect();
    }
    pts
}

/// Coefficient and pointwise residuals of `u`, plus the norm ratios with
/// `s1 = τ + 1`.
pub fn verify_solution(pd: &ProblemData, u: &Field, grid: Grid) -> Result<VerificationReport> {
    let sigma = u.sigma();
    let s1 = pd.tau + 1.0;
    let table = if u.modes().len() >= pd.forcing.modes().len() {
        u.modes().clone()
    } else {
        pd.forcing.modes().clone()
    };
    let u = u.with_modes(table.clone())?;
    let full = ProblemData {
        forcing: pd.forcing.with_modes(table.clone())?,
        ..pd.clone()
    };
    let coeff_residual = sigma_s_norm(&residual(&full, &u)?, NormParams::new(sigma, pd.tau - 1.0));

    let mut modes: Vec<usize> = u.profiles().map(|(j, _)| j).collect();
    modes.extend(full.forcing.profiles().map(|(j, _)| j));
    modes.sort_unstable();
    modes.dedup();

    let ts: Vec<f64> = (0..grid.nt)
        .map(|m| 2.0 * std::f64::consts::PI * m as f64 / grid.nt as f64)
        .collect();
    let zero = TimeProfile::zero();
    let w2 = pd.omega * pd.omega;
    // pointwise samples of u_j, u_j'' and g_j
    let samples: Vec<(f64, Vec<f64>, Vec<f64>, Vec<f64>)> = modes
        .iter()
        .map(|&j| {
            let p = u.profile(j).unwrap_or(&zero);
            let pp = p.second_derivative();
            let g = full.forcing.profile(j).unwrap_or(&zero);
            (
                table.lambda(j).unwrap_or(0.0),
                ts.iter().map(|&t| p.eval(t)).collect(),
                ts.iter().map(|&t| pp.eval(t)).collect(),
                ts.iter().map(|&t| g.eval(t)).collect(),
            )
        })
        .collect();
    let a: Vec<f64> = (0..grid.nt)
        .map(|m| samples.iter().map(|(l, v, _, _)| l * l * v[m] * v[m]).sum())
        .collect();
    let per_mode: Vec<Vec<f64>> = samples
        .iter()
        .map(|(l, v, vpp, g)| {
            (0..grid.nt)
                .map(|m| w2 * vpp[m] + l * l * v[m] * (1.0 + pd.mu * a[m]) - pd.mu * g[m])
                .collect()
        })
        .collect();
    let pts = grid_points(pd, grid.nx);
    let mut pointwise: f64 = 0.0;
    for x in &pts {
        let phi: Vec<f64> = modes
            .iter()
            .map(|&j| pd.domain.eigenfunction(&table.get(j).expect("tabulated").label, x))
            .collect();
        for m in 0..grid.nt {
            let v: f64 = per_mode.iter().zip(&phi).map(|(r, f)| r[m] * f).sum();
            pointwise = pointwise.max(v.abs());
        }
    }

    let utt = u.map_profiles(|_, _, p| p.second_derivative());
    Ok(VerificationReport {
        coeff_residual,
        pointwise_residual: pointwise,
        norm_ratio: sigma_s_norm(&u, NormParams::new(sigma, s1)) * pd.gamma / pd.mu,
        accel_ratio: sigma_s_norm(&utt, NormParams::new(sigma, s1 - 2.0)) * pd.gamma * w2
            / pd.mu,
        grid,
    })
}

/// Result of [`uniqueness_probe`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProbeReport {
    /// `‖v_final − u*‖_{σ,0}` per perturbation; `None` when Newton failed.
    pub deviations: Vec<Option<f64>>,
    pub tolerance: f64,
}

impl ProbeReport {
    pub fn passed(&self) -> bool {
        self.deviations
            .iter()
            .all(|d| d.is_some_and(|d| d < self.tolerance))
    }
}

/// Largest harmonic of the random perturbations.
const PROBE_HARMONICS: usize = 3;
const PROBE_TOL: f64 = 1e-8;
const PROBE_STEPS: usize = 30;

fn random_perturbation(
    u: &Field,
    modes: &[usize],
    symmetry: TimeSymmetry,
    radius: f64,
    norm: NormParams,
    rng: &mut ChaCha8Rng,
) -> Result<Field> {
    let mut dv = u.zero_like();
    for &j in modes {
        let mut p = TimeProfile::with_harmonics(PROBE_HARMONICS);
        for k in 0..=PROBE_HARMONICS {
            if symmetry == TimeSymmetry::HalfWaveOdd && k % 2 == 0 {
                continue;
            }
            let re = rng.gen_range(-1.0..1.0);
            let im = if k == 0 { 0.0 } else { rng.gen_range(-1.0..1.0) };
            p.set_coeff(k, num_complex::Complex64::new(re, im));
        }
        dv.set_profile(j, p)?;
    }
    let n = sigma_s_norm(&dv, norm);
    Ok(if n > 0.0 { dv.scale(radius / n) } else { dv })
}

fn plain_newton(
    pd: &ProblemData,
    params: &SolverParams,
    setup: LinearizationSetup,
    v0: Field,
) -> Result<Field> {
    let rnorm = NormParams::new(params.sigma, pd.tau - 1.0);
    let cutoff = v0
        .profiles()
        .chain(pd.forcing.profiles())
        .map(|(j, _)| v0.lambda(j))
        .fold(1.0, f64::max);
    let mut v = v0;
    for _ in 0..PROBE_STEPS {
        let f = residual(pd, &v)?;
        if sigma_s_norm(&f, rnorm) < params.residual_tol {
            return Ok(v);
        }
        let ctx = LinearizedContext::at(setup, &v, v.modes().clone(), cutoff, params.m_time)?;
        let rhs = f.truncate_time(params.m_time).scale(-1.0);
        let h = invert_linearized(&ctx, &v, &rhs, params.neumann_max_terms, params.neumann_tol)?;
        v = v.add(&h.solution);
    }
    Err(Error::InvalidInput("plain Newton did not converge".into()))
}

/// Perturbs `u_star` by `n` seeded random fields of `‖·‖_{σ,τ+1}` size
/// `radius` and checks that plain Newton returns to it within `1e-8`.
///
/// Perturbations live on the modes of `u_star` and the forcing, in the
/// harmonics `≤ 3` allowed by the solve's time symmetry.
pub fn uniqueness_probe(
    pd: &ProblemData,
    params: &SolverParams,
    u_star: &Field,
    n_perturbations: usize,
    radius: f64,
) -> Result<ProbeReport> {
    if radius == 0.0 {
        return Ok(ProbeReport {
            deviations: vec![Some(0.0); n_perturbations],
            tolerance: PROBE_TOL,
        });
    }
    let symmetry = resolve_symmetry(params.symmetry, &pd.forcing)?;
    let setup = LinearizationSetup {
        omega: pd.omega,
        mu: pd.mu,
        gamma: pd.gamma,
        tau: pd.tau,
        sigma: params.sigma,
        symmetry,
    };
    let pd = ProblemData {
        forcing: pd.forcing.with_modes(u_star.modes().clone())?,
        ..pd.clone()
    };
    let mut modes: Vec<usize> = u_star
        .profiles()
        .chain(pd.forcing.profiles())
        .filter(|&(j, _)| u_star.lambda(j) > 0.0)
        .map(|(j, _)| j)
        .collect();
    modes.sort_unstable();
    modes.dedup();
    let norm = NormParams::new(params.sigma, pd.tau + 1.0);
    let dist = NormParams::new(params.sigma, 0.0);
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let mut deviations = Vec::with_capacity(n_perturbations);
    for _ in 0..n_perturbations {
        let dv = random_perturbation(u_star, &modes, symmetry, radius, norm, &mut rng)?;
        let d = plain_newton(&pd, params, setup, u_star.add(&dv))
            .ok()
            .map(|v| sigma_s_norm(&v.sub(u_star), dist));
        deviations.push(d);
    }
    Ok(ProbeReport {
        deviations,
        tolerance: PROBE_TOL,
    })
}
