//! Coefficient-space space-time functions and the `X_{σ,s}` norms.
//!
//! A [`TimeProfile`] is a real trigonometric polynomial stored through its
//! nonnegative complex Fourier coefficients `ĉ_0..ĉ_M`; negative harmonics
//! follow from `ĉ_{-k} = conj(ĉ_k)`. A [`Field`] attaches one profile to each
//! spatial mode. The H¹(𝕋) norm is the sequence norm `Σ (1+k²)|ĉ_k|²`.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::ops::{Add, Mul, Neg, Sub};
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::basis::{enumerate_modes, DomainSpec, ModeTable};
use crate::error::{Error, Result};

/// Algebra constant of the sequence H¹(𝕋) norm: `‖ab‖ ≤ K_ALG ‖a‖ ‖b‖`.
///
/// The sharp value is `sqrt(sup_k Σ_m (1+k²)/((1+m²)(1+(k-m)²)))`, whose
/// supremum is the `k → ∞` limit `sqrt(2π coth π) ≈ 2.5113`.
pub const K_ALG: f64 = 2.52;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Real 2π-periodic trigonometric polynomial.
#[derive(Clone, Debug, PartialEq)]
pub struct TimeProfile {
    coeffs: Vec<Complex64>,
}

impl Default for TimeProfile {
    fn default() -> Self {
        Self::zero()
    }
}

impl TimeProfile {
    /// Builds a profile from `ĉ_0..ĉ_M`; the imaginary part of `ĉ_0` is dropped.
    pub fn new(mut coeffs: Vec<Complex64>) -> Self {
        if coeffs.is_empty() {
            coeffs.push(ZERO);
        }
        coeffs[0].im = 0.0;
        TimeProfile { coeffs }
    }

    pub fn zero() -> Self {
        TimeProfile { coeffs: vec![ZERO] }
    }

    pub fn constant(c: f64) -> Self {
        TimeProfile {
            coeffs: vec![Complex64::new(c, 0.0)],
        }
    }

    /// `amp · cos(k t)`.
    pub fn cos(k: usize, amp: f64) -> Self {
        let mut p = Self::with_harmonics(k);
        if k == 0 {
            p.coeffs[0].re = amp;
        } else {
            p.coeffs[k] = Complex64::new(amp / 2.0, 0.0);
        }
        p
    }

    /// `amp · sin(k t)`.
    pub fn sin(k: usize, amp: f64) -> Self {
        let mut p = Self::with_harmonics(k);
        if k > 0 {
            p.coeffs[k] = Complex64::new(0.0, -amp / 2.0);
        }
        p
    }

    /// `a0 + Σ cos[i] cos((i+1)t) + Σ sin[i] sin((i+1)t)`.
    pub fn from_cos_sin(a0: f64, cos: &[f64], sin: &[f64]) -> Self {
        let m = cos.len().max(sin.len());
        let mut p = Self::with_harmonics(m);
        p.coeffs[0].re = a0;
        for (i, c) in cos.iter().enumerate() {
            p.coeffs[i + 1].re += c / 2.0;
        }
        for (i, s) in sin.iter().enumerate() {
            p.coeffs[i + 1].im -= s / 2.0;
        }
        p
    }

    pub fn with_harmonics(m: usize) -> Self {
        TimeProfile {
            coeffs: vec![ZERO; m + 1],
        }
    }

    /// Stored harmonic cap `M`.
    pub fn harmonics(&self) -> usize {
        self.coeffs.len() - 1
    }

    /// Highest harmonic with a nonzero coefficient.
    pub fn bandwidth(&self) -> usize {
        self.coeffs
            .iter()
            .rposition(|c| c.re != 0.0 || c.im != 0.0)
            .unwrap_or(0)
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    /// `ĉ_k` for any integer `k`, zero outside the stored band.
    pub fn coeff(&self, k: i64) -> Complex64 {
        let idx = k.unsigned_abs() as usize;
        match self.coeffs.get(idx) {
            None => ZERO,
            Some(c) if k < 0 => c.conj(),
            Some(c) => *c,
        }
    }

    pub fn set_coeff(&mut self, k: usize, c: Complex64) {
        if k >= self.coeffs.len() {
            self.coeffs.resize(k + 1, ZERO);
        }
        self.coeffs[k] = if k == 0 { Complex64::new(c.re, 0.0) } else { c };
    }

    pub fn mean(&self) -> f64 {
        self.coeffs[0].re
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|c| c.re == 0.0 && c.im == 0.0)
    }

    /// True when every even harmonic (including the mean) vanishes, i.e.
    /// `y(t + π) = -y(t)`.
    pub fn is_half_wave_odd(&self) -> bool {
        self.coeffs
            .iter()
            .step_by(2)
            .all(|c| c.re == 0.0 && c.im == 0.0)
    }

    /// True when every odd harmonic vanishes, i.e. `y` is π-periodic.
    pub fn is_half_wave_even(&self) -> bool {
        self.coeffs
            .iter()
            .skip(1)
            .step_by(2)
            .all(|c| c.re == 0.0 && c.im == 0.0)
    }

    pub fn eval(&self, t: f64) -> f64 {
        let mut acc = self.coeffs[0].re;
        for (k, c) in self.coeffs.iter().enumerate().skip(1) {
            let (s, co) = (k as f64 * t).sin_cos();
            acc += 2.0 * (c.re * co - c.im * s);
        }
        acc
    }

    /// Values on the uniform grid `t_m = 2πm/n`. Requires `n > 2·bandwidth`.
    pub fn samples(&self, n: usize) -> Vec<f64> {
        let bw = self.bandwidth();
        assert!(n > 2 * bw, "grid of {n} points aliases bandwidth {bw}");
        let mut buf = vec![ZERO; n];
        buf[0] = self.coeffs[0];
        for k in 1..=bw {
            buf[k] += self.coeffs[k];
            buf[n - k] += self.coeffs[k].conj();
        }
        FftPlanner::new().plan_fft_inverse(n).process(&mut buf);
        buf.into_iter().map(|c| c.re).collect()
    }

    /// Interpolates uniform samples, keeping harmonics `0..=m` (`m < n/2`).
    pub fn from_samples(values: &[f64], m: usize) -> Self {
        let n = values.len();
        assert!(2 * m < n, "cannot resolve {m} harmonics from {n} samples");
        let mut buf: Vec<Complex64> = values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        FftPlanner::new().plan_fft_forward(n).process(&mut buf);
        let scale = 1.0 / n as f64;
        TimeProfile::new(buf[..=m].iter().map(|c| c * scale).collect())
    }

    /// Drops harmonics above `m`.
    pub fn truncate(&self, m: usize) -> Self {
        let keep = (m + 1).min(self.coeffs.len());
        TimeProfile {
            coeffs: self.coeffs[..keep].to_vec(),
        }
    }

    /// `y''`.
    pub fn second_derivative(&self) -> Self {
        self.map_harmonics(|k, c| -((k * k) as f64) * c)
    }

    pub fn map_harmonics(&self, f: impl Fn(usize, Complex64) -> Complex64) -> Self {
        TimeProfile::new(
            self.coeffs
                .iter()
                .enumerate()
                .map(|(k, &c)| f(k, c))
                .collect(),
        )
    }

    pub fn scale(&self, s: f64) -> Self {
        TimeProfile {
            coeffs: self.coeffs.iter().map(|c| c * s).collect(),
        }
    }

    fn zip_with(&self, other: &Self, f: impl Fn(Complex64, Complex64) -> Complex64) -> Self {
        let n = self.coeffs.len().max(other.coeffs.len());
        let get = |v: &[Complex64], k: usize| v.get(k).copied().unwrap_or(ZERO);
        TimeProfile::new(
            (0..n)
                .map(|k| f(get(&self.coeffs, k), get(&other.coeffs, k)))
                .collect(),
        )
    }

    /// `(Σ_{k∈ℤ} (1+k²)|ĉ_k|²)^{1/2}`.
    pub fn h1_norm(&self) -> f64 {
        h1_norm(self)
    }

    /// `(Σ_{k∈ℤ} |ĉ_k|²)^{1/2}`.
    pub fn l2_norm(&self) -> f64 {
        let tail: f64 = self.coeffs.iter().skip(1).map(|c| c.norm_sqr()).sum();
        (self.coeffs[0].norm_sqr() + 2.0 * tail).sqrt()
    }

    /// Largest coefficient modulus; used for coefficient equality checks.
    pub fn max_abs_coeff(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm()).fold(0.0, f64::max)
    }
}

impl Add for &TimeProfile {
    type Output = TimeProfile;
    fn add(self, rhs: &TimeProfile) -> TimeProfile {
        self.zip_with(rhs, |a, b| a + b)
    }
}

impl Sub for &TimeProfile {
    type Output = TimeProfile;
    fn sub(self, rhs: &TimeProfile) -> TimeProfile {
        self.zip_with(rhs, |a, b| a - b)
    }
}

impl Neg for &TimeProfile {
    type Output = TimeProfile;
    fn neg(self) -> TimeProfile {
        self.scale(-1.0)
    }
}

impl Mul<f64> for &TimeProfile {
    type Output = TimeProfile;
    fn mul(self, rhs: f64) -> TimeProfile {
        self.scale(rhs)
    }
}

pub fn h1_norm(y: &TimeProfile) -> f64 {
    let tail: f64 = y
        .coeffs
        .iter()
        .enumerate()
        .skip(1)
        .map(|(k, c)| (1.0 + (k * k) as f64) * c.norm_sqr())
        .sum();
    (y.coeffs[0].norm_sqr() + 2.0 * tail).sqrt()
}

/// Exact product of two trigonometric polynomials, truncated to `|k| ≤ m_out`.
pub fn multiply_profiles(a: &TimeProfile, b: &TimeProfile, m_out: usize) -> TimeProfile {
    let ma = a.bandwidth() as i64;
    let mb = b.bandwidth() as i64;
    let top = (m_out as i64).min(ma + mb);
    let mut out = vec![ZERO; m_out + 1];
    for k in 0..=top {
        let lo = (-ma).max(k - mb);
        let hi = ma.min(k + mb);
        let mut acc = ZERO;
        for p in lo..=hi {
            acc += a.coeff(p) * b.coeff(k - p);
        }
        out[k as usize] = acc;
    }
    TimeProfile::new(out)
}

/// Norm index pair `(σ, s)` for `‖·‖_{σ,s}`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NormParams {
    pub sigma: f64,
    pub s: f64,
}

impl NormParams {
    pub fn new(sigma: f64, s: f64) -> Self {
        NormParams { sigma, s }
    }

    /// Weight `λ^{2s} e^{2σλ}`; the zero mode (λ = 0) carries weight 1.
    pub fn weight(&self, lambda: f64) -> f64 {
        if lambda == 0.0 {
            1.0
        } else {
            lambda.powf(2.0 * self.s) * (2.0 * self.sigma * lambda).exp()
        }
    }
}

/// A space-time function `Σ_j u_j(t) φ_j(x)`; absent modes are zero.
#[derive(Clone, Debug, PartialEq)]
pub struct Field {
    domain: DomainSpec,
    modes: Arc<ModeTable>,
    profiles: BTreeMap<usize, TimeProfile>,
    sigma: f64,
}

impl Field {
    pub fn zero(domain: DomainSpec, modes: Arc<ModeTable>, sigma: f64) -> Self {
        Field {
            domain,
            modes,
            profiles: BTreeMap::new(),
            sigma,
        }
    }

    /// Zero field over the same domain and mode table.
    pub fn zero_like(&self) -> Self {
        Field::zero(self.domain.clone(), self.modes.clone(), self.sigma)
    }

    pub fn domain(&self) -> &DomainSpec {
        &self.domain
    }

    pub fn modes(&self) -> &Arc<ModeTable> {
        &self.modes
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn set_sigma(&mut self, sigma: f64) {
        self.sigma = sigma;
    }

    pub fn set_profile(&mut self, j: usize, profile: TimeProfile) -> Result<()> {
        if self.modes.get(j).is_none() {
            return Err(Error::InvalidInput(format!(
                "mode {j} is not in the table (cutoff {})",
                self.modes.cutoff()
            )));
        }
        self.profiles.insert(j, profile);
        Ok(())
    }

    pub fn with_profile(mut self, j: usize, profile: TimeProfile) -> Result<Self> {
        self.set_profile(j, profile)?;
        Ok(self)
    }

    /// Sets the profile of the mode with the given label.
    pub fn set_by_label(&mut self, label: &[i64], profile: TimeProfile) -> Result<usize> {
        let j = self.modes.index_of(label).ok_or_else(|| {
            Error::InvalidInput(format!(
                "label {label:?} not in the mode table (cutoff {})",
                self.modes.cutoff()
            ))
        })?;
        self.set_profile(j, profile)?;
        Ok(j)
    }

    pub fn profile(&self, j: usize) -> Option<&TimeProfile> {
        self.profiles.get(&j)
    }

    /// Stored `(j, u_j)` pairs in mode order.
    pub fn profiles(&self) -> impl Iterator<Item = (usize, &TimeProfile)> {
        self.profiles.iter().map(|(&j, p)| (j, p))
    }

    pub fn lambda(&self, j: usize) -> f64 {
        self.modes.lambda(j).expect("stored modes are tabulated")
    }

    pub fn is_zero(&self) -> bool {
        self.profiles.values().all(TimeProfile::is_zero)
    }

    /// Largest nonzero harmonic over all profiles.
    pub fn bandwidth(&self) -> usize {
        self.profiles
            .values()
            .map(TimeProfile::bandwidth)
            .max()
            .unwrap_or(0)
    }

    /// Applies `f(j, λ_j, u_j)` to every stored profile.
    pub fn map_profiles(&self, f: impl Fn(usize, f64, &TimeProfile) -> TimeProfile) -> Field {
        let profiles = self
            .profiles
            .iter()
            .map(|(&j, p)| (j, f(j, self.lambda(j), p)))
            .collect();
        Field {
            profiles,
            ..self.zero_like()
        }
    }

    fn combine(&self, other: &Field, f: impl Fn(&TimeProfile, &TimeProfile) -> TimeProfile) -> Field {
        assert_eq!(self.domain, other.domain, "fields live on different domains");
        let mut out = if other.modes.cutoff() > self.modes.cutoff() {
            other.zero_like()
        } else {
            self.zero_like()
        };
        let zero = TimeProfile::zero();
        let keys: std::collections::BTreeSet<usize> = self
            .profiles
            .keys()
            .chain(other.profiles.keys())
            .copied()
            .collect();
        for j in keys {
            let a = self.profiles.get(&j).unwrap_or(&zero);
            let b = other.profiles.get(&j).unwrap_or(&zero);
            out.profiles.insert(j, f(a, b));
        }
        out
    }

    pub fn add(&self, other: &Field) -> Field {
        self.combine(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Field) -> Field {
        self.combine(other, |a, b| a - b)
    }

    pub fn scale(&self, s: f64) -> Field {
        self.map_profiles(|_, _, p| p.scale(s))
    }

    /// Keeps only the modes accepted by `keep(j, λ_j)`.
    pub fn retain_modes(&self, keep: impl Fn(usize, f64) -> bool) -> Field {
        let profiles = self
            .profiles
            .iter()
            .filter(|(&j, _)| keep(j, self.lambda(j)))
            .map(|(&j, p)| (j, p.clone()))
            .collect();
        Field {
            profiles,
            ..self.zero_like()
        }
    }

    /// Drops time harmonics above `m` in every profile.
    pub fn truncate_time(&self, m: usize) -> Field {
        self.map_profiles(|_, _, p| p.truncate(m))
    }

    /// Re-homes the field on a larger mode table of the same domain.
    pub fn with_modes(&self, modes: Arc<ModeTable>) -> Result<Field> {
        let mut out = Field::zero(self.domain.clone(), modes, self.sigma);
        for (j, p) in self.profiles() {
            let label = &self.modes.get(j).expect("tabulated").label;
            out.set_by_label(label, p.clone())?;
        }
        Ok(out)
    }

    /// Largest coefficient difference against `other`.
    pub fn max_coeff_diff(&self, other: &Field) -> f64 {
        self.sub(other)
            .profiles
            .values()
            .map(TimeProfile::max_abs_coeff)
            .fold(0.0, f64::max)
    }

    /// Mean over space and time, `(2π)^{-(d+1)} ∫∫ u`.
    pub fn space_time_mean(&self) -> f64 {
        match &self.domain {
            DomainSpec::Torus { dim } => self
                .profiles
                .iter()
                .find(|(&j, _)| self.lambda(j) == 0.0)
                .map(|(_, p)| p.mean() * (2.0 * PI).powf(-(*dim as f64) / 2.0))
                .unwrap_or(0.0),
            _ => {
                // Dirichlet: mean of each sine product over the box.
                let cell = self.domain.cell();
                let vol: f64 = cell.iter().product();
                let mut acc = 0.0;
                for (j, p) in self.profiles() {
                    let label = &self.modes.get(j).expect("tabulated").label;
                    let integral: f64 = label
                        .iter()
                        .zip(&cell)
                        .map(|(&m, &l)| {
                            if m % 2 == 0 {
                                0.0
                            } else {
                                (2.0 / l).sqrt() * 2.0 * l / (m as f64 * PI)
                            }
                        })
                        .product();
                    acc += p.mean() * integral;
                }
                acc / vol
            }
        }
    }

    pub fn to_json_value(&self) -> serde_json::Value {
        let modes: Vec<ModeCoeffs> = self
            .profiles()
            .map(|(j, p)| {
                let e = self.modes.get(j).expect("tabulated");
                ModeCoeffs {
                    j,
                    label: e.label.clone(),
                    lambda: e.lambda,
                    coeffs: p.coeffs.iter().map(|c| [c.re, c.im]).collect(),
                }
            })
            .collect();
        serde_json::to_value(FieldJson {
            domain: self.domain.clone(),
            sigma: self.sigma,
            cutoff: Some(self.modes.cutoff()),
            modes,
        })
        .expect("field serializes")
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_json_value()).expect("field serializes")
    }

    pub fn from_json_value(v: serde_json::Value) -> Result<Field> {
        let raw: FieldJson =
            serde_json::from_value(v).map_err(|e| Error::InvalidInput(format!("field: {e}")))?;
        let max_lambda = raw.modes.iter().map(|m| m.lambda).fold(0.0, f64::max);
        let cutoff = raw.cutoff.unwrap_or(max_lambda).max(max_lambda).max(1.0);
        let table = Arc::new(enumerate_modes(&raw.domain, cutoff)?);
        let mut field = Field::zero(raw.domain, table, raw.sigma);
        for m in raw.modes {
            let entry = field.modes.get(m.j).ok_or_else(|| {
                Error::InvalidInput(format!("mode j = {} outside table", m.j))
            })?;
            if entry.label != m.label {
                return Err(Error::InvalidInput(format!(
                    "mode j = {} has label {:?}, expected {:?}",
                    m.j, m.label, entry.label
                )));
            }
            let coeffs = m
                .coeffs
                .iter()
                .map(|c| Complex64::new(c[0], c[1]))
                .collect();
            field.profiles.insert(m.j, TimeProfile::new(coeffs));
        }
        Ok(field)
    }

    pub fn from_json(s: &str) -> Result<Field> {
        let v: serde_json::Value =
            serde_json::from_str(s).map_err(|e| Error::InvalidInput(format!("field: {e}")))?;
        Self::from_json_value(v)
    }
}

#[derive(Serialize, Deserialize)]
struct ModeCoeffs {
    j: usize,
    label: Vec<i64>,
    lambda: f64,
    coeffs: Vec<[f64; 2]>,
}

#[derive(Serialize, Deserialize)]
struct FieldJson {
    domain: DomainSpec,
    sigma: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    cutoff: Option<f64>,
    modes: Vec<ModeCoeffs>,
}

/// `‖u‖_{σ,s}² = Σ_j ‖u_j‖²_{H¹} λ_j^{2s} e^{2σλ_j}`.
pub fn sigma_s_norm(u: &Field, p: NormParams) -> f64 {
    u.profiles()
        .map(|(j, prof)| {
            let h = h1_norm(prof);
            h * h * p.weight(u.lambda(j))
        })
        .sum::<f64>()
        .sqrt()
}

/// Spatial truncation `P_N`: zeroes every mode with `λ_j > N`.
pub fn project(u: &Field, cutoff: f64) -> Field {
    u.retain_modes(|_, lambda| lambda <= cutoff)
}

/// `a(t) = ∫_Ω |∇u|² dx = Σ_j λ_j² u_j(t)²`, truncated to `m_out`.
pub fn gradient_energy(u: &Field, m_out: usize) -> TimeProfile {
    gradient_pairing(u, u, m_out)
}

/// `∫_Ω ∇u·∇h dx = Σ_j λ_j² u_j(t) h_j(t)`, truncated to `m_out`.
pub fn gradient_pairing(u: &Field, h: &Field, m_out: usize) -> TimeProfile {
    let mut acc = TimeProfile::with_harmonics(m_out);
    for (j, uj) in u.profiles() {
        let Some(hj) = h.profile(j) else { continue };
        let l = u.lambda(j);
        if l == 0.0 {
            continue;
        }
        let prod = multiply_profiles(uj, hj, m_out);
        acc = &acc + &prod.scale(l * l);
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::*;

    fn interval(cutoff: f64) -> (DomainSpec, Arc<ModeTable>) {
        let d = DomainSpec::DirichletInterval;
        let t = Arc::new(enumerate_modes(&d, cutoff).unwrap());
        (d, t)
    }

    #[test]
    fn h1_examples() {
        assert_eq!(h1_norm(&TimeProfile::zero()), 0.0);
        assert!((h1_norm(&TimeProfile::cos(1, 1.0)) - 1.0).abs() < 1e-15);
        let y = &TimeProfile::constant(1.0) + &TimeProfile::sin(2, 1.0);
        assert!((h1_norm(&y) - 3.5f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn norm_examples() {
        let (d, t) = interval(3.0);
        let u = Field::zero(d.clone(), t.clone(), 0.0)
            .with_profile(1, TimeProfile::cos(1, 1.0))
            .unwrap();
        assert!((sigma_s_norm(&u, NormParams::new(0.0, 2.0)) - 1.0).abs() < 1e-15);
        assert!((sigma_s_norm(&u, NormParams::new(1.0, 2.0)) - 1f64.exp()).abs() < 1e-14);
        let v = Field::zero(d, t, 0.0)
            .with_profile(2, TimeProfile::constant(1.0))
            .unwrap();
        assert!((sigma_s_norm(&v, NormParams::new(0.0, 3.0)) - 8.0).abs() < 1e-13);
        assert_eq!(sigma_s_norm(&v.zero_like(), NormParams::new(0.3, 1.0)), 0.0);
    }

    #[test]
    fn projection_examples() {
        let (d, t) = interval(5.0);
        let mut u = Field::zero(d, t, 0.0);
        for j in [1, 2, 5] {
            u.set_profile(j, TimeProfile::cos(1, 1.0)).unwrap();
        }
        let p = project(&u, 3.0);
        assert_eq!(p.profiles().map(|(j, _)| j).collect::<Vec<_>>(), vec![1, 2]);
        assert_eq!(project(&u, 5.0), u);
    }

    #[test]
    fn product_examples() {
        let c = TimeProfile::cos(1, 1.0);
        let sq = multiply_profiles(&c, &c, 2);
        let want = &TimeProfile::constant(0.5) + &TimeProfile::cos(2, 0.5);
        assert!((&sq - &want).max_abs_coeff() < 1e-16);
        let b = TimeProfile::from_cos_sin(0.3, &[0.1, -0.2], &[0.4]);
        let one = multiply_profiles(&TimeProfile::constant(1.0), &b, 2);
        assert_eq!(one, b);
        let cut = multiply_profiles(&c, &c, 1);
        assert!((&cut - &TimeProfile::constant(0.5)).max_abs_coeff() < 1e-16);
    }

    #[test]
    fn gradient_energy_examples() {
        let (d, t) = interval(3.0);
        let u = Field::zero(d.clone(), t.clone(), 0.0)
            .with_profile(1, TimeProfile::constant(0.7))
            .unwrap();
        let a = gradient_energy(&u, 4);
        assert!((a.mean() - 0.49).abs() < 1e-15 && a.bandwidth() == 0);
        assert!(gradient_energy(&u.zero_like(), 4).is_zero());
        let w = Field::zero(d.clone(), t.clone(), 0.0)
            .with_profile(1, TimeProfile::cos(1, 1.0))
            .unwrap();
        let a = gradient_energy(&w, 4);
        let want = &TimeProfile::constant(0.5) + &TimeProfile::cos(2, 0.5);
        assert!((&a - &want).max_abs_coeff() < 1e-16);
        // disjoint supports pair to zero
        let h = Field::zero(d, t, 0.0)
            .with_profile(2, TimeProfile::cos(1, 1.0))
            .unwrap();
        assert!(gradient_pairing(&w, &h, 4).is_zero());
    }

    #[test]
    fn samples_roundtrip() {
        let y = TimeProfile::from_cos_sin(0.25, &[1.0, 0.0, -0.5], &[0.0, 0.3]);
        let s = y.samples(16);
        for (m, v) in s.iter().enumerate() {
            let t = 2.0 * PI * m as f64 / 16.0;
            assert!((v - y.eval(t)).abs() < 1e-14);
        }
        let back = TimeProfile::from_samples(&s, 3);
        assert!((&back - &y).max_abs_coeff() < 1e-15);
    }

    #[test]
    fn json_roundtrip() {
        let (d, t) = interval(4.0);
        let u = Field::zero(d, t, 0.2)
            .with_profile(3, TimeProfile::from_cos_sin(0.1, &[0.5], &[0.25]))
            .unwrap();
        let back = Field::from_json(&u.to_json()).unwrap();
        assert_eq!(back, u);
    }

    #[test]
    fn torus_zero_mode_mean() {
        let d = DomainSpec::Torus { dim: 1 };
        let t = Arc::new(enumerate_modes(&d, 2.0).unwrap());
        let u = Field::zero(d, t, 0.0)
            .with_profile(0, TimeProfile::constant(1.0))
            .unwrap()
            .with_profile(1, TimeProfile::constant(3.0))
            .unwrap();
        assert!((u.space_time_mean() - (2.0 * PI).powf(-0.5)).abs() < 1e-15);
    }
}
