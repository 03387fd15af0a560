//! Weighted periodic Hill problems `y'' + p²(1+α(t)) y = 0`.
//!
//! The eigenproblem is discretized by Galerkin projection on the real
//! trigonometric basis `{1/√(2π), cos kt/√π, sin kt/√π}` up to harmonic
//! `Mdisc`: stiffness `diag(k²)` against the mass matrix of `1+α`. When `α`
//! is π-periodic the problem splits exactly into an even-harmonic and an
//! odd-harmonic block, which are solved separately and tagged.
//!
//! [`liouville_oracle`] computes the same eigenvalues by an independent
//! route: the Liouville change of variable turns the weighted problem into
//! a Schrödinger-form problem `−z'' + c² Q z = c² p² z`.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{multiply_profiles, TimeProfile};

/// Relative gap below which two eigenvalues are treated as a double pair.
pub const DEGENERACY_GAP: f64 = 1e-11;

/// Harmonic class of an eigenfunction.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Parity {
    /// Only even harmonics: π-periodic.
    Even,
    /// Only odd harmonics: `y(t+π) = −y(t)`.
    Odd,
    /// No harmonic restriction.
    Mixed,
}

/// Element of the orthonormal real trigonometric basis.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TrigFn {
    Const,
    Cos(usize),
    Sin(usize),
}

impl TrigFn {
    pub fn harmonic(self) -> usize {
        match self {
            TrigFn::Const => 0,
            TrigFn::Cos(k) | TrigFn::Sin(k) => k,
        }
    }

    /// Position in the full ordering `const, cos 1, sin 1, cos 2, …`.
    pub fn canonical_rank(self) -> usize {
        match self {
            TrigFn::Const => 0,
            TrigFn::Cos(k) => 2 * k - 1,
            TrigFn::Sin(k) => 2 * k,
        }
    }

    /// `(k, w)` pairs with `φ(t) = Σ w e^{ikt}`.
    fn exponentials(self) -> [(i64, Complex64); 2] {
        let a = 1.0 / (2.0 * PI.sqrt());
        match self {
            TrigFn::Const => [
                (0, Complex64::new(1.0 / (2.0 * PI).sqrt(), 0.0)),
                (0, Complex64::new(0.0, 0.0)),
            ],
            TrigFn::Cos(k) => [
                (k as i64, Complex64::new(a, 0.0)),
                (-(k as i64), Complex64::new(a, 0.0)),
            ],
            TrigFn::Sin(k) => [
                (k as i64, Complex64::new(0.0, -a)),
                (-(k as i64), Complex64::new(0.0, a)),
            ],
        }
    }
}

/// An ordered subset of the orthonormal trigonometric basis.
#[derive(Clone, Debug, PartialEq)]
pub struct TrigBasis {
    fns: Vec<TrigFn>,
    parity: Parity,
}

impl TrigBasis {
    fn build(m: usize, parity: Parity) -> Self {
        let mut fns = Vec::new();
        if parity != Parity::Odd {
            fns.push(TrigFn::Const);
        }
        for k in 1..=m {
            let take = match parity {
                Parity::Mixed => true,
                Parity::Even => k % 2 == 0,
                Parity::Odd => k % 2 == 1,
            };
            if take {
                fns.push(TrigFn::Cos(k));
                fns.push(TrigFn::Sin(k));
            }
        }
        TrigBasis { fns, parity }
    }

    /// All harmonics `0..=m`.
    pub fn full(m: usize) -> Self {
        Self::build(m, Parity::Mixed)
    }

    /// Even harmonics `0, 2, …, ≤ m`.
    pub fn even(m: usize) -> Self {
        Self::build(m, Parity::Even)
    }

    /// Odd harmonics `1, 3, …, ≤ m`.
    pub fn odd(m: usize) -> Self {
        Self::build(m, Parity::Odd)
    }

    pub fn len(&self) -> usize {
        self.fns.len()
    }

    pub fn is_empty(&self) -> bool {
        self.fns.is_empty()
    }

    pub fn functions(&self) -> &[TrigFn] {
        &self.fns
    }

    pub fn parity(&self) -> Parity {
        self.parity
    }

    pub fn max_harmonic(&self) -> usize {
        self.fns.iter().map(|f| f.harmonic()).max().unwrap_or(0)
    }

    /// L² inner products `∫₀^{2π} y φ_a dt` of a profile with each basis function.
    pub fn coords(&self, y: &TimeProfile) -> DVector<f64> {
        let sq = PI.sqrt();
        DVector::from_iterator(
            self.fns.len(),
            self.fns.iter().map(|f| match *f {
                TrigFn::Const => (2.0 * PI).sqrt() * y.coeff(0).re,
                TrigFn::Cos(k) => 2.0 * sq * y.coeff(k as i64).re,
                TrigFn::Sin(k) => -2.0 * sq * y.coeff(k as i64).im,
            }),
        )
    }

    /// `Σ v_a φ_a` as a profile.
    pub fn synthesize(&self, v: &DVector<f64>) -> TimeProfile {
        let mut p = TimeProfile::with_harmonics(self.max_harmonic());
        let a = 1.0 / (2.0 * PI.sqrt());
        for (f, &c) in self.fns.iter().zip(v.iter()) {
            match *f {
                TrigFn::Const => {
                    let cur = p.coeff(0);
                    p.set_coeff(0, cur + Complex64::new(c / (2.0 * PI).sqrt(), 0.0));
                }
                TrigFn::Cos(k) => {
                    let cur = p.coeff(k as i64);
                    p.set_coeff(k, cur + Complex64::new(c * a, 0.0));
                }
                TrigFn::Sin(k) => {
                    let cur = p.coeff(k as i64);
                    p.set_coeff(k, cur + Complex64::new(0.0, -c * a));
                }
            }
        }
        p
    }

    /// Galerkin matrix of multiplication by `w`: `∫ w φ_a φ_b dt`.
    pub fn multiplication_matrix(&self, w: &TimeProfile) -> DMatrix<f64> {
        let n = self.fns.len();
        let exps: Vec<_> = self.fns.iter().map(|f| f.exponentials()).collect();
        let mut m = DMatrix::zeros(n, n);
        for a in 0..n {
            for b in a..n {
                let mut acc = Complex64::new(0.0, 0.0);
                for &(p, wp) in &exps[a] {
                    for &(q, wq) in &exps[b] {
                        acc += wp * wq * w.coeff(-(p + q));
                    }
                }
                let v = 2.0 * PI * acc.re;
                m[(a, b)] = v;
                m[(b, a)] = v;
            }
        }
        m
    }

    /// Stiffness `∫ φ_a' φ_b' dt = k² δ_ab`.
    pub fn stiffness(&self) -> DVector<f64> {
        DVector::from_iterator(
            self.fns.len(),
            self.fns.iter().map(|f| (f.harmonic() * f.harmonic()) as f64),
        )
    }
}

/// Eigen-decomposition of one Galerkin block; columns of `vectors` are
/// orthonormal in `L²_α`.
#[derive(Clone, Debug)]
pub struct GalerkinBlock {
    pub basis: TrigBasis,
    pub eigenvalues: Vec<f64>,
    pub vectors: DMatrix<f64>,
    /// Position of each column in the merged spectrum.
    pub global_index: Vec<usize>,
}

/// Eigenpairs of the weighted Hill problem for a given coefficient `α`.
#[derive(Clone, Debug)]
pub struct HillSpectrum {
    pub alpha: TimeProfile,
    /// Trusted index range `0..=l_trusted`.
    pub l_trusted: usize,
    pub mdisc: usize,
    /// `p_l²`, ascending, for `l = 0..=l_trusted`.
    pub eigenvalues: Vec<f64>,
    pub eigenfunctions: Vec<TimeProfile>,
    pub parities: Vec<Parity>,
    blocks: Vec<GalerkinBlock>,
    all_eigenvalues: Vec<f64>,
    all_parities: Vec<Parity>,
}

impl HillSpectrum {
    pub fn p(&self, l: usize) -> f64 {
        self.eigenvalues[l].max(0.0).sqrt()
    }

    /// `p_l` for the trusted range.
    pub fn frequencies(&self) -> Vec<f64> {
        self.eigenvalues.iter().map(|e| e.max(0.0).sqrt()).collect()
    }

    pub fn blocks(&self) -> &[GalerkinBlock] {
        &self.blocks
    }

    /// Every computed eigenvalue, trusted or not, with its parity.
    pub fn all_eigenpairs(&self) -> impl Iterator<Item = (usize, f64, Parity)> + '_ {
        self.all_eigenvalues
            .iter()
            .zip(&self.all_parities)
            .enumerate()
            .map(|(l, (&e, &p))| (l, e, p))
    }

    /// True when the even/odd block split is available.
    pub fn is_split(&self) -> bool {
        self.blocks.iter().all(|b| b.basis.parity() != Parity::Mixed)
    }

    /// CSV rows `l,p_l,p_l²`.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("l,p,p2\n");
        for (l, e) in self.eigenvalues.iter().enumerate() {
            s.push_str(&format!("{l},{:.17e},{:.17e}\n", e.max(0.0).sqrt(), e));
        }
        s
    }

    pub fn to_json_value(&self) -> serde_json::Value {
        let fns: Vec<_> = self
            .eigenfunctions
            .iter()
            .zip(&self.eigenvalues)
            .zip(&self.parities)
            .enumerate()
            .map(|(l, ((f, e), par))| {
                serde_json::json!({
                    "l": l,
                    "p": e.max(0.0).sqrt(),
                    "p2": e,
                    "parity": par,
                    "coeffs": f.coeffs().iter().map(|c| [c.re, c.im]).collect::<Vec<_>>(),
                })
            })
            .collect();
        serde_json::json!({
            "mdisc": self.mdisc,
            "L": self.l_trusted,
            "alpha": self.alpha.coeffs().iter().map(|c| [c.re, c.im]).collect::<Vec<_>>(),
            "eigenpairs": fns,
        })
    }
}

/// `max |y|` on `8·max(M,1)` uniform points, inflated by 1%.
pub fn sup_norm_estimate(y: &TimeProfile) -> f64 {
    let n = 8 * y.bandwidth().max(1);
    y.samples(n).into_iter().map(f64::abs).fold(0.0, f64::max) * 1.01
}

fn check_weight(alpha: &TimeProfile) -> Result<()> {
    let sup = sup_norm_estimate(alpha);
    if !(sup < 0.5) {
        return Err(Error::WeightNotPositive { sup });
    }
    Ok(())
}

struct Eigen {
    eigenvalues: DVector<f64>,
    eigenvectors: DMatrix<f64>,
}

fn symmetric_eigen(c: &DMatrix<f64>) -> Result<Eigen> {
    let n = c.nrows();
    let m = faer::Mat::<f64>::from_fn(n, n, |i, j| c[(i, j)]);
    let e = m
        .self_adjoint_eigen(faer::Side::Lower)
        .map_err(|e| Error::InvalidInput(format!("symmetric eigensolver failed: {e:?}")))?;
    let (u, s) = (e.U(), e.S());
    Ok(Eigen {
        eigenvalues: DVector::from_fn(n, |i, _| s[i]),
        eigenvectors: DMatrix::from_fn(n, n, |i, j| u[(i, j)]),
    })
}

/// Index of the first significant coefficient, used for sign and order.
fn leading_index(v: &[f64], basis: &TrigBasis) -> Option<usize> {
    let scale = v.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    let mut best: Option<(usize, usize)> = None;
    for (i, (&x, f)) in v.iter().zip(basis.functions()).enumerate() {
        if x.abs() > 1e-8 * scale {
            let r = f.canonical_rank();
            if best.map_or(true, |(_, br)| r < br) {
                best = Some((i, r));
            }
        }
    }
    best.map(|(i, _)| i)
}

fn solve_block(alpha: &TimeProfile, basis: TrigBasis) -> Result<GalerkinBlock> {
    let n = basis.len();
    let one_plus = &TimeProfile::constant(1.0) + alpha;
    let mass = basis.multiplication_matrix(&one_plus);
    let stiff = basis.stiffness();
    let chol = mass
        .clone()
        .cholesky()
        .ok_or(Error::WeightNotPositive { sup: f64::NAN })?;
    let l = chol.l();
    let linv = l
        .solve_lower_triangular(&DMatrix::identity(n, n))
        .expect("Cholesky factor is nonsingular");
    // C = L^{-1} K L^{-T}
    let mut scaled = linv.clone();
    for (j, mut col) in scaled.column_iter_mut().enumerate() {
        col *= stiff[j];
    }
    let mut c = &scaled * linv.transpose();
    let ct = c.transpose();
    c = (c + ct) * 0.5;
    let eig = symmetric_eigen(&c)?;
    let vectors = linv.transpose() * &eig.eigenvectors;

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let mut vals: Vec<f64> = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let mut vecs = DMatrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        vecs.set_column(dst, &vectors.column(src));
    }

    // Constants are an exact null vector.
    if let Some(ci) = basis.functions().iter().position(|f| *f == TrigFn::Const) {
        let mut v0 = DVector::zeros(n);
        v0[ci] = 1.0 / mass[(ci, ci)].sqrt();
        vecs.set_column(0, &v0);
        vals[0] = 0.0;
    }

    let rayleigh = |v: &DVector<f64>| -> f64 {
        v.iter().zip(stiff.iter()).map(|(x, k)| x * x * k).sum::<f64>()
    };

    let mut i = 0;
    while i < n {
        let mut j = i + 1;
        while j < n && (vals[j] - vals[i]).abs() < DEGENERACY_GAP * vals[i].abs().max(1.0) {
            j += 1;
        }
        if j - i == 2 {
            let v1: DVector<f64> = vecs.column(i).into();
            let v2: DVector<f64> = vecs.column(i + 1).into();
            let joint: Vec<f64> = v1.iter().zip(v2.iter()).map(|(a, b)| a.hypot(*b)).collect();
            if let Some(k) = leading_index(&joint, &basis) {
                let r = joint[k];
                let (cs, sn) = (v1[k] / r, v2[k] / r);
                let a = &v1 * cs + &v2 * sn;
                let mut b = &v2 * cs - &v1 * sn;
                // re-orthogonalize b against a in L²_α
                let ma = &mass * &a;
                let na = a.dot(&ma).sqrt();
                let a = a / na;
                let ma = ma / na;
                b -= &a * b.dot(&ma);
                let nb = b.dot(&(&mass * &b)).sqrt();
                b /= nb;
                vals[i] = rayleigh(&a);
                vals[i + 1] = rayleigh(&b);
                vecs.set_column(i, &a);
                vecs.set_column(i + 1, &b);
            }
        }
        for c in i..j {
            let col: Vec<f64> = vecs.column(c).iter().copied().collect();
            if let Some(k) = leading_index(&col, &basis) {
                if col[k] < 0.0 {
                    vecs.column_mut(c).neg_mut();
                }
            }
        }
        i = j;
    }

    if alpha.is_zero() {
        // p² = k² exactly
        for v in vals.iter_mut() {
            *v = v.round();
        }
    }

    Ok(GalerkinBlock {
        basis,
        eigenvalues: vals,
        vectors: vecs,
        global_index: Vec::new(),
    })
}

/// Solves the weighted Hill problem for `α`, keeping the lowest `L+1`
/// eigenpairs as trusted.
pub fn solve_hill(alpha: &TimeProfile, l_count: usize, mdisc: usize) -> Result<HillSpectrum> {
    if l_count == 0 {
        return Err(Error::InvalidInput("L must be >= 1".into()));
    }
    if mdisc < 2 * l_count {
        return Err(Error::DiscretizationTooCoarse {
            mdisc,
            required: 2 * l_count,
        });
    }
    check_weight(alpha)?;

    let mut blocks = if alpha.is_half_wave_even() {
        vec![
            solve_block(alpha, TrigBasis::even(mdisc))?,
            solve_block(alpha, TrigBasis::odd(mdisc))?,
        ]
    } else {
        vec![solve_block(alpha, TrigBasis::full(mdisc))?]
    };

    // Merge, keeping degenerate pairs of a block adjacent and in block order.
    struct Group {
        value: f64,
        lead_rank: usize,
        members: Vec<(usize, usize)>,
    }
    let mut groups: Vec<Group> = Vec::new();
    for (bi, b) in blocks.iter().enumerate() {
        let n = b.eigenvalues.len();
        let mut i = 0;
        while i < n {
            let mut j = i + 1;
            while j < n
                && (b.eigenvalues[j] - b.eigenvalues[i]).abs()
                    < DEGENERACY_GAP * b.eigenvalues[i].abs().max(1.0)
            {
                j += 1;
            }
            let col: Vec<f64> = b.vectors.column(i).iter().copied().collect();
            let lead_rank = leading_index(&col, &b.basis)
                .map(|k| b.basis.functions()[k].canonical_rank())
                .unwrap_or(usize::MAX);
            groups.push(Group {
                value: b.eigenvalues[i],
                lead_rank,
                members: (i..j).map(|c| (bi, c)).collect(),
            });
            i = j;
        }
    }
    groups.sort_by(|a, b| {
        a.value
            .total_cmp(&b.value)
            .then(a.lead_rank.cmp(&b.lead_rank))
    });

    for b in blocks.iter_mut() {
        b.global_index = vec![0; b.eigenvalues.len()];
    }
    let mut all_eigenvalues = Vec::new();
    let mut all_parities = Vec::new();
    let mut flat = Vec::new();
    for g in &groups {
        for &(bi, c) in &g.members {
            let l = all_eigenvalues.len();
            blocks[bi].global_index[c] = l;
            all_eigenvalues.push(blocks[bi].eigenvalues[c]);
            all_parities.push(blocks[bi].basis.parity());
            flat.push((bi, c));
        }
    }

    let keep = l_count + 1;
    let mut eigenvalues = Vec::with_capacity(keep);
    let mut eigenfunctions = Vec::with_capacity(keep);
    let mut parities = Vec::with_capacity(keep);
    for &(bi, c) in flat.iter().take(keep) {
        let b = &blocks[bi];
        eigenvalues.push(b.eigenvalues[c]);
        eigenfunctions.push(b.basis.synthesize(&b.vectors.column(c).into()));
        parities.push(b.basis.parity());
    }

    Ok(HillSpectrum {
        alpha: alpha.clone(),
        l_trusted: l_count,
        mdisc,
        eigenvalues,
        eigenfunctions,
        parities,
        blocks,
        all_eigenvalues,
        all_parities,
    })
}

/// `∫₀^{2π} u v (1+α) dt`, exact on coefficients.
pub fn weighted_inner(u: &TimeProfile, v: &TimeProfile, alpha: &TimeProfile) -> f64 {
    let m = u.bandwidth() + v.bandwidth() + alpha.bandwidth();
    let uv = multiply_profiles(u, v, m);
    let q = &TimeProfile::constant(1.0) + alpha;
    2.0 * PI * multiply_profiles(&uv, &q, 0).mean()
}

/// `∫ u'v' dt + (u, v)_{L²_α}`.
pub fn weighted_h1_inner(u: &TimeProfile, v: &TimeProfile, alpha: &TimeProfile) -> f64 {
    let du = u.map_harmonics(|k, c| Complex64::new(0.0, k as f64) * c);
    let dv = v.map_harmonics(|k, c| Complex64::new(0.0, k as f64) * c);
    weighted_inner(&du, &dv, &TimeProfile::zero()) + weighted_inner(u, v, alpha)
}

/// Eigenvalues `p_l` obtained through the Liouville change of variable.
///
/// With `q = 1+α`, `c = (1/2π)∫√q` and `ξ = g(t) = (1/c)∫₀ᵗ √q`, the
/// problem becomes `z'' + c²[p² − Q(f(ξ))] z = 0` with
/// `Q = −(5/16) q'²/q³ + (1/4) q''/q²`, solved here on a plain Fourier basis.
pub fn liouville_oracle(alpha: &TimeProfile, l_count: usize, mdisc: usize) -> Result<Vec<f64>> {
    if l_count == 0 {
        return Err(Error::InvalidInput("L must be >= 1".into()));
    }
    if mdisc < 2 * l_count {
        return Err(Error::DiscretizationTooCoarse {
            mdisc,
            required: 2 * l_count,
        });
    }
    check_weight(alpha)?;

    let grid = (8 * mdisc).max(1024).next_power_of_two();
    let q = &TimeProfile::constant(1.0) + alpha;
    let dq = q.map_harmonics(|k, c| Complex64::new(0.0, k as f64) * c);
    let ddq = q.second_derivative();

    let sqrt_q: Vec<f64> = q.samples(grid).into_iter().map(f64::sqrt).collect();
    let s_hat = TimeProfile::from_samples(&sqrt_q, grid / 2 - 1);
    let c = s_hat.mean();

    // g(t) = t + (1/c) Σ_{k≥1} 2 Re(ŝ_k (e^{ikt} − 1)/(ik))
    let tail: Vec<(f64, Complex64)> = s_hat
        .coeffs()
        .iter()
        .enumerate()
        .skip(1)
        .filter(|(_, s)| s.norm() > 1e-18)
        .map(|(k, &s)| (k as f64, s / Complex64::new(0.0, k as f64)))
        .collect();
    let g = |t: f64| -> f64 {
        let mut acc = 0.0;
        for &(k, w) in &tail {
            let e = Complex64::new((k * t).cos() - 1.0, (k * t).sin());
            acc += 2.0 * (w * e).re;
        }
        t + acc / c
    };

    let potential: Vec<f64> = (0..grid)
        .map(|m| {
            let xi = 2.0 * PI * m as f64 / grid as f64;
            let mut t = xi;
            for _ in 0..50 {
                let step = (g(t) - xi) / (q.eval(t).sqrt() / c);
                t -= step;
                if step.abs() < 1e-15 {
                    break;
                }
            }
            let (qt, q1, q2) = (q.eval(t), dq.eval(t), ddq.eval(t));
            c * c * (-5.0 / 16.0 * q1 * q1 / (qt * qt * qt) + 0.25 * q2 / (qt * qt))
        })
        .collect();
    let v_hat = TimeProfile::from_samples(&potential, grid / 2 - 1);

    let basis = TrigBasis::full(mdisc);
    let mut h = basis.multiplication_matrix(&v_hat);
    for (i, k2) in basis.stiffness().iter().enumerate() {
        h[(i, i)] += k2;
    }
    let mut e: Vec<f64> = symmetric_eigen(&h)?.eigenvalues.iter().copied().collect();
    e.sort_by(f64::total_cmp);
    Ok(e.into_iter()
        .take(l_count + 1)
        .map(|x| x.max(0.0).sqrt() / c)
        .collect())
}
