//! Small-divisor screening and inversion of `F'(u) = D + S`.
//!
//! `D_j z = ω² z'' + λ_j² ρ z` with `ρ = 1 + μ a` is diagonalized by the Hill
//! eigenfunctions of `α = μ a`: in the Galerkin space of harmonics up to
//! `Mdisc`,
//!
//! ```text
//! D_j⁻¹ z = Σ_l ψ_l (∫ z ψ_l dt) / (λ_j² − ω² p_l²).
//! ```
//!
//! The coupling `S h = −2μ Δu ∫∇u·∇h` is handled by the Neumann series for
//! `(I + S D⁻¹)⁻¹`.

use std::sync::Arc;

use nalgebra::DVector;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::basis::ModeTable;
use crate::error::{Error, Result};
use crate::field::{
    gradient_energy, gradient_pairing, h1_norm, multiply_profiles, sigma_s_norm, Field, NormParams,
    TimeProfile,
};
use crate::hill::{solve_hill, HillSpectrum, Parity};

pub mod dense;

/// Relative accuracy demanded of `F'(u)[F'(u)⁻¹ h] = h`.
pub const INVERSE_CONTRACT_TOL: f64 = 1e-9;

/// Hill components below this fraction of the largest one are treated as
/// unexcited and are neither inverted nor screened.
pub const PROJECTION_FLOOR: f64 = 1e-13;

/// Successive Neumann terms must shrink by at least this factor.
pub const NEUMANN_RATIO_LIMIT: f64 = 0.9;

/// Time-harmonic subspace the iteration is confined to.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum TimeSymmetry {
    /// All harmonics.
    #[default]
    Full,
    /// Odd harmonics only, `u(t+π) = −u(t)`; invariant under the cubic
    /// nonlinearity whenever the forcing has the same symmetry.
    HalfWaveOdd,
}

impl TimeSymmetry {
    /// Whether an eigenfunction of the given parity can be excited.
    pub fn admits(self, parity: Parity) -> bool {
        match self {
            TimeSymmetry::Full => true,
            TimeSymmetry::HalfWaveOdd => parity != Parity::Even,
        }
    }

    /// Largest symmetry shared by every profile of `g`.
    pub fn detect(g: &Field) -> Self {
        if !g.is_zero() && g.profiles().all(|(_, p)| p.is_half_wave_odd()) {
            TimeSymmetry::HalfWaveOdd
        } else {
            TimeSymmetry::Full
        }
    }
}

/// Outcome of the non-resonance screen at one stage.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResonanceReport {
    pub satisfied: bool,
    /// `min |ω p_l − λ_j| − γ/λ_j^τ` over the checked pairs.
    pub min_margin: f64,
    /// First violating `(j, l, |ω p_l − λ_j|)`.
    pub offender: Option<(usize, usize, f64)>,
    pub l_range_used: usize,
    pub cutoff_n: f64,
}

/// Everything needed to invert `F'(u)` at one iterate.
#[derive(Clone, Debug)]
pub struct LinearizedContext {
    pub omega: f64,
    pub mu: f64,
    pub gamma: f64,
    pub tau: f64,
    pub sigma: f64,
    /// `a(t) = ∫|∇u|²` of the iterate.
    pub a: TimeProfile,
    /// Hill spectrum of `α = μ a` resolved up to the screen's `l_max`.
    pub screen: HillSpectrum,
    /// Hill spectrum of `α = μ a` in the inversion band.
    pub spectrum: HillSpectrum,
    pub modes: Arc<ModeTable>,
    pub cutoff: f64,
    pub symmetry: TimeSymmetry,
}

/// Number of Hill indices that can violate the gap below cutoff `N`,
/// `ceil(3(N+γ)/ω) + 1` (from `p_l ≥ l/3`).
pub fn l_max(cutoff: f64, gamma: f64, omega: f64) -> usize {
    (3.0 * (cutoff + gamma) / omega).ceil() as usize + 1
}

/// Parameters shared by every linearization of one solve.
#[derive(Clone, Copy, Debug)]
pub struct LinearizationSetup {
    pub omega: f64,
    pub mu: f64,
    pub gamma: f64,
    pub tau: f64,
    pub sigma: f64,
    pub symmetry: TimeSymmetry,
}

impl LinearizedContext {
    /// Linearizes at `u`. The screen spectrum resolves every Hill index
    /// that can matter below `cutoff`; inversion happens in the band `m_time`.
    pub fn at(
        setup: LinearizationSetup,
        u: &Field,
        modes: Arc<ModeTable>,
        cutoff: f64,
        m_time: usize,
    ) -> Result<Self> {
        if m_time < 2 || u.bandwidth() > m_time {
            return Err(Error::DiscretizationTooCoarse {
                mdisc: m_time,
                required: u.bandwidth().max(2),
            });
        }
        let lm = l_max(cutoff, setup.gamma, setup.omega);
        let m_screen = m_time.max(2 * lm);
        let a = gradient_energy(u, 2 * u.bandwidth());
        if h1_norm(&a) >= 1.0 {
            return Err(Error::InvalidInput(format!(
                "gradient energy ‖a‖_H1 = {:.3e} outside the unit ball",
                h1_norm(&a)
            )));
        }
        let alpha = a.scale(setup.mu);
        let screen = solve_hill(&alpha, lm, m_screen)?;
        let spectrum = if m_screen == m_time {
            screen.clone()
        } else {
            solve_hill(&alpha, m_time / 2, m_time)?
        };
        Ok(Self::with_spectra(setup, a, screen, spectrum, modes, cutoff))
    }

    pub fn with_spectra(
        setup: LinearizationSetup,
        a: TimeProfile,
        screen: HillSpectrum,
        spectrum: HillSpectrum,
        modes: Arc<ModeTable>,
        cutoff: f64,
    ) -> Self {
        LinearizedContext {
            omega: setup.omega,
            mu: setup.mu,
            gamma: setup.gamma,
            tau: setup.tau,
            sigma: setup.sigma,
            a,
            screen,
            spectrum,
            modes,
            cutoff,
            symmetry: setup.symmetry,
        }
    }

    pub fn mdisc(&self) -> usize {
        self.spectrum.mdisc
    }

    /// Working cap that keeps every product of the linear solve exact.
    pub fn m_work(&self) -> usize {
        3 * self.mdisc().max(self.a.bandwidth())
    }

    /// Norm `‖·‖_{σ,τ−1}` in which the Neumann series is controlled.
    pub fn rhs_norm(&self) -> NormParams {
        NormParams::new(self.sigma, self.tau - 1.0)
    }

    fn rho(&self) -> TimeProfile {
        &TimeProfile::constant(1.0) + &self.a.scale(self.mu)
    }
}

/// Screens `|ω p_l − λ_j| > γ/λ_j^τ` for all `λ_j ≤ N` and all `l` that can
/// violate it.
pub fn check_nonresonance(
    ctx: &LinearizedContext,
    gamma: f64,
    tau: f64,
    cutoff: f64,
) -> Result<ResonanceReport> {
    let lm = l_max(cutoff, gamma, ctx.omega);
    if ctx.screen.l_trusted < lm {
        return Err(Error::SpectrumTooShort(format!(
            "screen at N = {cutoff} needs l up to {lm}, spectrum trusts {}",
            ctx.screen.l_trusted
        )));
    }
    let pairs: Vec<(usize, f64)> = ctx
        .screen
        .all_eigenpairs()
        .take(lm + 1)
        .filter(|&(_, _, par)| ctx.symmetry.admits(par))
        .map(|(l, e, _)| (l, e.max(0.0).sqrt()))
        .collect();
    let mut min_margin = f64::INFINITY;
    let mut offender = None;
    for entry in ctx.modes.entries() {
        let lambda = entry.lambda;
        if lambda == 0.0 || lambda > cutoff {
            continue;
        }
        let threshold = gamma / lambda.powf(tau);
        for &(l, p) in &pairs {
            let gap = (ctx.omega * p - lambda).abs();
            let margin = gap - threshold;
            if margin <= 0.0 && offender.is_none() {
                offender = Some((entry.j, l, gap));
            }
            min_margin = min_margin.min(margin);
        }
    }
    Ok(ResonanceReport {
        satisfied: min_margin > 0.0,
        min_margin,
        offender,
        l_range_used: lm,
        cutoff_n: cutoff,
    })
}

fn invert_mode(ctx: &LinearizedContext, j: usize, lambda: f64, z: &TimeProfile) -> Result<TimeProfile> {
    if z.bandwidth() > ctx.mdisc() {
        return Err(Error::SpectrumTooShort(format!(
            "mode {j} has time bandwidth {} beyond Mdisc = {}",
            z.bandwidth(),
            ctx.mdisc()
        )));
    }
    let threshold = ctx.gamma * lambda.powf(1.0 - ctx.tau);
    let w2 = ctx.omega * ctx.omega;
    let mut out = TimeProfile::zero();
    for block in ctx.spectrum.blocks() {
        let c = block.basis.coords(z);
        if c.iter().all(|&x| x == 0.0) {
            continue;
        }
        let mut proj = block.vectors.tr_mul(&c);
        let floor = PROJECTION_FLOOR * proj.amax();
        for (l, val) in proj.iter_mut().enumerate() {
            if val.abs() <= floor {
                *val = 0.0;
                continue;
            }
            let divisor = lambda * lambda - w2 * block.eigenvalues[l];
            if !(divisor.abs() >= threshold) || lambda == 0.0 {
                return Err(Error::NonResonanceViolated {
                    j,
                    l: block.global_index[l],
                    divisor: divisor.abs(),
                    threshold,
                });
            }
            *val /= divisor;
        }
        let y: DVector<f64> = &block.vectors * proj;
        out = &out + &block.basis.synthesize(&y);
    }
    Ok(out)
}

/// `D⁻¹ h`, mode by mode, with a divisor check duplicating the screen.
pub fn invert_d(ctx: &LinearizedContext, h: &Field) -> Result<Field> {
    let jobs: Vec<(usize, f64, &TimeProfile)> = h
        .profiles()
        .filter(|(_, p)| !p.is_zero())
        .map(|(j, p)| (j, h.lambda(j), p))
        .collect();
    let solved: Vec<(usize, TimeProfile)> = jobs
        .par_iter()
        .map(|&(j, lambda, p)| invert_mode(ctx, j, lambda, p).map(|y| (j, y)))
        .collect::<Result<_>>()?;
    let mut out = h.zero_like();
    for (j, y) in solved {
        out.set_profile(j, y)?;
    }
    Ok(out)
}

/// Galerkin action of `D`: `ω² y'' + λ² ρ y`, truncated to `Mdisc`.
pub fn apply_d(ctx: &LinearizedContext, y: &Field) -> Field {
    let rho = ctx.rho();
    let w2 = ctx.omega * ctx.omega;
    let m = ctx.mdisc();
    y.map_profiles(|_, lambda, p| {
        let mass = multiply_profiles(p, &rho, m).scale(lambda * lambda);
        &p.second_derivative().scale(w2).truncate(m) + &mass
    })
}

/// `S h = −μ Δu ∫ 2∇u·∇h`, exact within the context's working cap.
pub fn apply_s(ctx: &LinearizedContext, u: &Field, h: &Field) -> Result<Field> {
    let m_work = ctx.m_work();
    let required = 3 * u.bandwidth().max(h.bandwidth());
    if m_work < required {
        return Err(Error::AliasingBudgetExceeded { m_work, required });
    }
    let pair = gradient_pairing(u, h, m_work);
    let c = 2.0 * ctx.mu;
    Ok(u.map_profiles(|_, lambda, p| multiply_profiles(p, &pair, m_work).scale(c * lambda * lambda)))
}

/// Galerkin action of `F'(u) = D + S` in the context's band.
pub fn apply_linearized(ctx: &LinearizedContext, u: &Field, h: &Field) -> Result<Field> {
    let s = apply_s(ctx, u, h)?.truncate_time(ctx.mdisc());
    Ok(apply_d(ctx, h).add(&s))
}

/// Result of a Neumann-series inversion.
#[derive(Clone, Debug)]
pub struct NeumannSolution {
    pub solution: Field,
    pub terms: usize,
    /// Largest observed ratio of successive term norms.
    pub max_ratio: f64,
    /// `‖F'(u) x − h‖ / ‖h‖` in `‖·‖_{σ,τ−1}`.
    pub contract_residual: f64,
}

/// `F'(u)⁻¹ h = D⁻¹ (I + S D⁻¹)⁻¹ h` by the Neumann series.
pub fn invert_linearized(
    ctx: &LinearizedContext,
    u: &Field,
    h: &Field,
    max_terms: usize,
    contraction_tol: f64,
) -> Result<NeumannSolution> {
    let norm = ctx.rhs_norm();
    let h_norm = sigma_s_norm(h, norm);
    if h_norm == 0.0 {
        return Ok(NeumannSolution {
            solution: h.zero_like(),
            terms: 0,
            max_ratio: 0.0,
            contract_residual: 0.0,
        });
    }
    let m = ctx.mdisc();
    let mut w = h.clone();
    let mut term = h.clone();
    let mut prev = h_norm;
    let mut terms = 0;
    let mut max_ratio: f64 = 0.0;
    loop {
        let next = apply_s(ctx, u, &invert_d(ctx, &term)?)?
            .truncate_time(m)
            .scale(-1.0);
        let n = sigma_s_norm(&next, norm);
        if n == 0.0 {
            break;
        }
        terms += 1;
        let ratio = n / prev;
        max_ratio = max_ratio.max(ratio);
        if ratio > NEUMANN_RATIO_LIMIT || terms > max_terms {
            return Err(Error::NeumannDiverging { ratio, terms });
        }
        w = w.add(&next);
        term = next;
        prev = n;
        if n < contraction_tol * h_norm {
            break;
        }
    }
    let solution = invert_d(ctx, &w)?;
    let check = apply_linearized(ctx, u, &solution)?.sub(h);
    let contract_residual = sigma_s_norm(&check, norm) / h_norm;
    if !(contract_residual <= INVERSE_CONTRACT_TOL) {
        return Err(Error::InverseContract {
            relative: contract_residual,
        });
    }
    Ok(NeumannSolution {
        solution,
        terms,
        max_ratio,
        contract_residual,
    })
}

/// `γ ‖D⁻¹h‖_{σ,0} / ‖h‖_{σ,τ−1}`, the empirical constant of the D-inverse bound.
pub fn d_inverse_constant(ctx: &LinearizedContext, h: &Field) -> Result<f64> {
    let y = invert_d(ctx, h)?;
    let num = sigma_s_norm(&y, NormParams::new(ctx.sigma, 0.0));
    let den = sigma_s_norm(h, ctx.rhs_norm());
    Ok(ctx.gamma * num / den)
}
