//! The Kirchhoff map `F(u) = L_ω u − μ f(u) − μ g` and its pieces.
//!
//! With `−Δφ_j = λ_j² φ_j` every operator acts profile-wise:
//! `(L_ω u)_j = ω² u_j'' + λ_j² u_j` and `f(u)_j = −λ_j² u_j a(t)` where
//! `a = Σ λ_i² u_i²` is the gradient energy.

use serde::{Deserialize, Serialize};

use crate::basis::DomainSpec;
use crate::error::{Error, Result};
use crate::field::{gradient_energy, gradient_pairing, multiply_profiles, Field, TimeProfile};

/// Forced Kirchhoff problem in rescaled, time-normalized form.
#[derive(Clone, Debug, PartialEq)]
pub struct ProblemData {
    pub domain: DomainSpec,
    pub forcing: Field,
    pub omega: f64,
    pub mu: f64,
    pub gamma: f64,
    pub tau: f64,
}

/// Space-time mean tolerance for the periodic solvability condition.
pub const MEAN_TOL: f64 = 1e-12;

impl ProblemData {
    pub fn validate(&self) -> Result<()> {
        self.domain.validate()?;
        if self.forcing.domain() != &self.domain {
            return Err(Error::InvalidInput(
                "forcing lives on a different domain".into(),
            ));
        }
        if !(self.omega > 0.0 && self.omega.is_finite()) {
            return Err(Error::InvalidInput(format!("omega must be > 0, got {}", self.omega)));
        }
        if !(self.mu > 0.0 && self.mu.is_finite()) {
            return Err(Error::InvalidInput(format!("mu must be > 0, got {}", self.mu)));
        }
        let d = self.domain.dimension() as f64;
        if !(self.tau > d && self.tau.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "tau must exceed the dimension {d}, got {}",
                self.tau
            )));
        }
        let gamma_max = if self.domain.is_periodic() {
            1.0
        } else {
            self.forcing.modes().lambda(1).unwrap_or(1.0)
        };
        if !(self.gamma > 0.0 && self.gamma < gamma_max) {
            return Err(Error::InvalidInput(format!(
                "gamma must lie in (0, {gamma_max}), got {}",
                self.gamma
            )));
        }
        if self.domain.is_periodic() {
            let mean = self.forcing.space_time_mean();
            if mean.abs() > MEAN_TOL {
                return Err(Error::MeanNotZero { mean });
            }
        }
        Ok(())
    }

    pub fn to_json_value(&self) -> serde_json::Value {
        serde_json::json!({
            "domain": self.domain,
            "omega": self.omega,
            "mu": self.mu,
            "gamma": self.gamma,
            "tau": self.tau,
            "forcing": self.forcing.to_json_value(),
        })
    }

    pub fn from_json_value(v: &serde_json::Value) -> Result<Self> {
        let num = |k: &str| {
            v.get(k)
                .and_then(serde_json::Value::as_f64)
                .ok_or_else(|| Error::InvalidInput(format!("problem: missing numeric field `{k}`")))
        };
        let domain: DomainSpec = serde_json::from_value(
            v.get("domain")
                .cloned()
                .ok_or_else(|| Error::InvalidInput("problem: missing `domain`".into()))?,
        )
        .map_err(|e| Error::InvalidInput(format!("problem.domain: {e}")))?;
        let forcing = Field::from_json_value(
            v.get("forcing")
                .cloned()
                .ok_or_else(|| Error::InvalidInput("problem: missing `forcing`".into()))?,
        )?;
        let pd = ProblemData {
            domain,
            forcing,
            omega: num("omega")?,
            mu: num("mu")?,
            gamma: num("gamma")?,
            tau: num("tau")?,
        };
        Ok(pd)
    }
}

fn check_budget(m_work: usize, bandwidth: usize) -> Result<()> {
    let required = 3 * bandwidth;
    if m_work < required {
        Err(Error::AliasingBudgetExceeded { m_work, required })
    } else {
        Ok(())
    }
}

/// `L_ω u = ω² u_tt − Δu`.
pub fn apply_dalembert(omega: f64, u: &Field) -> Field {
    let w2 = omega * omega;
    u.map_profiles(|_, lambda, p| {
        p.map_harmonics(|k, c| (lambda * lambda - w2 * (k * k) as f64) * c)
    })
}

/// `f(u) = Δu ∫|∇u|²`, computed exactly within the working cap `m_work`.
pub fn apply_f(u: &Field, m_work: usize) -> Result<Field> {
    check_budget(m_work, u.bandwidth())?;
    let a = gradient_energy(u, m_work);
    Ok(u.map_profiles(|_, lambda, p| multiply_profiles(p, &a, m_work).scale(-lambda * lambda)))
}

/// `f'(u)[h] = Δh ∫|∇u|² + 2 Δu ∫∇u·∇h`.
pub fn apply_f_prime(u: &Field, h: &Field, m_work: usize) -> Result<Field> {
    check_budget(m_work, u.bandwidth().max(h.bandwidth()))?;
    let a = gradient_energy(u, m_work);
    let pair = gradient_pairing(u, h, m_work).scale(2.0);
    let first = h.map_profiles(|_, lambda, p| multiply_profiles(p, &a, m_work).scale(-lambda * lambda));
    let second =
        u.map_profiles(|_, lambda, p| multiply_profiles(p, &pair, m_work).scale(-lambda * lambda));
    Ok(first.add(&second))
}

/// `Q(u,h) = Δu ∫|∇h|² + Δh ∫(2∇u·∇h + |∇h|²)`.
pub fn quadratic_remainder(u: &Field, h: &Field, m_work: usize) -> Result<Field> {
    check_budget(m_work, u.bandwidth().max(h.bandwidth()))?;
    let eh = gradient_energy(h, m_work);
    let mixed = &gradient_pairing(u, h, m_work).scale(2.0) + &eh;
    let first = u.map_profiles(|_, lambda, p| multiply_profiles(p, &eh, m_work).scale(-lambda * lambda));
    let second =
        h.map_profiles(|_, lambda, p| multiply_profiles(p, &mixed, m_work).scale(-lambda * lambda));
    Ok(first.add(&second))
}

/// Working cap that makes every cubic product of `u` exact.
pub fn exact_work_cap(u: &Field) -> usize {
    3 * u.bandwidth().max(1)
}

/// `F(u) = L_ω u − μ f(u) − μ g`, evaluated without truncation.
pub fn residual(pd: &ProblemData, u: &Field) -> Result<Field> {
    residual_with_cap(pd, u, exact_work_cap(u))
}

/// `F(u)` with an explicit working cap.
pub fn residual_with_cap(pd: &ProblemData, u: &Field, m_work: usize) -> Result<Field> {
    let f = apply_f(u, m_work)?;
    Ok(apply_dalembert(pd.omega, u)
        .sub(&f.scale(pd.mu))
        .sub(&pd.forcing.scale(pd.mu)))
}

/// Direction of the amplitude rescaling between the physical and the
/// normalized problem.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum ScalingDirection {
    PhysicalToScaled,
    ScaledToPhysical,
}

/// `μ = ε^{2/3}`, `u_scaled = ε^{-1/3} u_phys` and the inverse map.
///
/// Time normalization `t → ωt` is carried by `ProblemData::omega` and does
/// not touch the stored profiles.
pub fn convert_scaling(
    value: f64,
    direction: ScalingDirection,
    u: Option<&Field>,
) -> Result<(f64, Option<Field>)> {
    if !(value > 0.0 && value.is_finite()) {
        return Err(Error::DomainError(format!(
            "amplitude parameter must be positive, got {value}"
        )));
    }
    match direction {
        ScalingDirection::PhysicalToScaled => {
            let eps = value;
            let c = eps.cbrt();
            Ok((c * c, u.map(|f| f.scale(1.0 / c))))
        }
        ScalingDirection::ScaledToPhysical => {
            let mu = value;
            let eps = mu * mu.sqrt();
            Ok((eps, u.map(|f| f.scale(mu.sqrt()))))
        }
    }
}

/// Time profile of a single mode, for building forcings by hand.
pub fn single_mode_field(base: &Field, j: usize, profile: TimeProfile) -> Result<Field> {
    base.zero_like().with_profile(j, profile)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::basis::enumerate_modes;
    use std::sync::Arc;

    fn base() -> Field {
        let d = DomainSpec::DirichletInterval;
        let t = Arc::new(enumerate_modes(&d, 4.0).unwrap());
        Field::zero(d, t, 0.0)
    }

    fn close(a: &Field, b: &Field, tol: f64) -> bool {
        a.max_coeff_diff(b) < tol
    }

    #[test]
    fn dalembert_examples() {
        let u = single_mode_field(&base(), 1, TimeProfile::cos(1, 1.0)).unwrap();
        assert!(apply_dalembert(1.0, &u).is_zero());
        let v = apply_dalembert(0.5, &u);
        assert!(close(&v, &u.scale(0.75), 1e-16));

        let d = DomainSpec::Torus { dim: 1 };
        let t = Arc::new(enumerate_modes(&d, 2.0).unwrap());
        let c = Field::zero(d, t, 0.0)
            .with_profile(0, TimeProfile::constant(2.0))
            .unwrap();
        assert!(apply_dalembert(1.3, &c).is_zero());
    }

    #[test]
    fn f_examples() {
        let c = 0.6;
        let u = single_mode_field(&base(), 1, TimeProfile::constant(c)).unwrap();
        let f = apply_f(&u, 3).unwrap();
        assert!((f.profile(1).unwrap().mean() + c * c * c).abs() < 1e-15);
        assert!(apply_f(&base(), 0).unwrap().is_zero());

        let w = single_mode_field(&base(), 1, TimeProfile::cos(1, 1.0)).unwrap();
        let f = apply_f(&w, 3).unwrap();
        let want = &TimeProfile::cos(1, -0.75) + &TimeProfile::cos(3, -0.25);
        assert!((f.profile(1).unwrap() - &want).max_abs_coeff() < 1e-16);
        assert!(matches!(
            apply_f(&w, 2),
            Err(Error::AliasingBudgetExceeded { .. })
        ));
    }

    #[test]
    fn f_prime_and_remainder_at_zero() {
        let h = single_mode_field(&base(), 2, TimeProfile::from_cos_sin(0.1, &[0.3], &[0.2]))
            .unwrap();
        let zero = base();
        assert!(apply_f_prime(&zero, &h, 6).unwrap().is_zero());
        let q = quadratic_remainder(&zero, &h, 6).unwrap();
        assert!(close(&q, &apply_f(&h, 6).unwrap(), 1e-16));
        assert!(quadratic_remainder(&h, &zero, 6).unwrap().is_zero());
    }

    #[test]
    fn euler_identity() {
        let u = base()
            .with_profile(1, TimeProfile::from_cos_sin(0.2, &[0.4, 0.1], &[0.3]))
            .unwrap()
            .with_profile(3, TimeProfile::cos(1, 0.25))
            .unwrap();
        let lhs = apply_f_prime(&u, &u, 6).unwrap();
        let rhs = apply_f(&u, 6).unwrap().scale(3.0);
        assert!(close(&lhs, &rhs, 1e-14));
    }

    #[test]
    fn residual_at_zero() {
        let g = single_mode_field(&base(), 1, TimeProfile::cos(1, 1.0)).unwrap();
        let pd = ProblemData {
            domain: DomainSpec::DirichletInterval,
            forcing: g.clone(),
            omega: 0.5,
            mu: 1e-3,
            gamma: 0.1,
            tau: 1.5,
        };
        pd.validate().unwrap();
        let r = residual(&pd, &base()).unwrap();
        assert!(close(&r, &g.scale(-1e-3), 1e-18));
    }

    #[test]
    fn scaling_examples() {
        let (mu, _) = convert_scaling(0.001, ScalingDirection::PhysicalToScaled, None).unwrap();
        assert!((mu - 0.01).abs() < 1e-15);
        let (eps, _) = convert_scaling(0.04, ScalingDirection::ScaledToPhysical, None).unwrap();
        assert!((eps - 0.008).abs() < 1e-15);
        assert!(convert_scaling(0.0, ScalingDirection::PhysicalToScaled, None).is_err());
        assert!(convert_scaling(-1.0, ScalingDirection::ScaledToPhysical, None).is_err());
    }

    #[test]
    fn validation() {
        let g = single_mode_field(&base(), 1, TimeProfile::cos(1, 1.0)).unwrap();
        let mut pd = ProblemData {
            domain: DomainSpec::DirichletInterval,
            forcing: g,
            omega: 1.0,
            mu: 0.1,
            gamma: 1.0,
            tau: 1.5,
        };
        assert!(pd.validate().is_err());
        pd.gamma = 0.5;
        pd.tau = 1.0;
        assert!(pd.validate().is_err());
        pd.tau = 1.5;
        assert!(pd.validate().is_ok());
    }
}
