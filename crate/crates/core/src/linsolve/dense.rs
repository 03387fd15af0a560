//! Dense reference solver for the linearized operator.
//!
//! Assembles the Galerkin matrix of `F'(u)` over (active modes) × (full
//! trigonometric basis up to `Mdisc`) with every time integral evaluated by
//! trapezoidal quadrature on pointwise samples, then solves by LU. It shares
//! no code path with the Hill diagonalization or the coefficient
//! convolutions, and serves as the oracle for [`super::invert_d`] and
//! [`super::invert_linearized`].

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::field::{Field, TimeProfile};
use crate::hill::{TrigBasis, TrigFn};

fn basis_value(f: TrigFn, t: f64) -> f64 {
    match f {
        TrigFn::Const => 1.0 / (2.0 * PI).sqrt(),
        TrigFn::Cos(k) => (k as f64 * t).cos() / PI.sqrt(),
        TrigFn::Sin(k) => (k as f64 * t).sin() / PI.sqrt(),
    }
}

struct Quadrature {
    weight: f64,
    nodes: Vec<f64>,
    table: DMatrix<f64>,
}

impl Quadrature {
    /// Exact for trigonometric polynomials of degree below `points`.
    fn new(basis: &TrigBasis, points: usize) -> Self {
        let nodes: Vec<f64> = (0..points)
            .map(|m| 2.0 * PI * m as f64 / points as f64)
            .collect();
        let table = DMatrix::from_fn(points, basis.len(), |m, a| {
            basis_value(basis.functions()[a], nodes[m])
        });
        Quadrature {
            weight: 2.0 * PI / points as f64,
            nodes,
            table,
        }
    }

    /// `∫ w φ_a φ_b dt` for pointwise weight samples `w`.
    fn weighted_gram(&self, w: &[f64]) -> DMatrix<f64> {
        let mut scaled = self.table.clone();
        for (m, mut row) in scaled.row_iter_mut().enumerate() {
            row *= w[m] * self.weight;
        }
        self.table.tr_mul(&scaled)
    }

    fn samples(&self, y: &TimeProfile) -> Vec<f64> {
        self.nodes.iter().map(|&t| y.eval(t)).collect()
    }

    fn project(&self, y: &TimeProfile) -> DVector<f64> {
        let s = DVector::from_vec(self.samples(y));
        self.table.tr_mul(&s) * self.weight
    }
}

fn synthesize(basis: &TrigBasis, v: &[f64]) -> TimeProfile {
    let mut p = TimeProfile::with_harmonics(basis.max_harmonic());
    for (f, &c) in basis.functions().iter().zip(v) {
        let add = match *f {
            TrigFn::Const => TimeProfile::constant(c / (2.0 * PI).sqrt()),
            TrigFn::Cos(k) => TimeProfile::cos(k, c / PI.sqrt()),
            TrigFn::Sin(k) => TimeProfile::sin(k, c / PI.sqrt()),
        };
        p = &p + &add;
    }
    p
}

/// Solves `ω² y'' + λ² (1 + μ a) y = z` in the band `Mdisc` by dense LU.
pub fn dense_invert_mode(
    omega: f64,
    mu: f64,
    a: &TimeProfile,
    lambda: f64,
    z: &TimeProfile,
    mdisc: usize,
) -> Result<TimeProfile> {
    let basis = TrigBasis::full(mdisc);
    let quad = Quadrature::new(&basis, 2 * (2 * mdisc + a.bandwidth()) + 8);
    let rho: Vec<f64> = quad.samples(a).iter().map(|v| 1.0 + mu * v).collect();
    let mut m = quad.weighted_gram(&rho) * (lambda * lambda);
    for (i, f) in basis.functions().iter().enumerate() {
        let k = f.harmonic() as f64;
        m[(i, i)] -= omega * omega * k * k;
    }
    let rhs = quad.project(z);
    let sol = m
        .lu()
        .solve(&rhs)
        .ok_or_else(|| Error::InvalidInput("dense D_j is singular".into()))?;
    Ok(synthesize(&basis, sol.as_slice()))
}

/// Solves `F'(u) x = h` for the full coupled operator by dense LU.
///
/// Unknowns are the modes present in `u` or `h`; all other modes decouple
/// with zero right-hand side.
pub fn dense_invert_linearized(
    omega: f64,
    mu: f64,
    u: &Field,
    h: &Field,
    mdisc: usize,
) -> Result<Field> {
    let mut modes: Vec<usize> = u.profiles().map(|(j, _)| j).collect();
    modes.extend(h.profiles().map(|(j, _)| j));
    modes.sort_unstable();
    modes.dedup();

    let basis = TrigBasis::full(mdisc);
    let nb = basis.len();
    let bw = u.bandwidth();
    let quad = Quadrature::new(&basis, 2 * (2 * mdisc + 2 * bw) + 8);

    let zero = TimeProfile::zero();
    let samples: Vec<Vec<f64>> = modes
        .iter()
        .map(|&j| quad.samples(u.profile(j).unwrap_or(&zero)))
        .collect();
    let table = if u.modes().len() >= h.modes().len() { u } else { h };
    let lambdas: Vec<f64> = modes.iter().map(|&j| table.lambda(j)).collect();

    // a(t) pointwise
    let npts = quad.nodes.len();
    let mut a = vec![0.0; npts];
    for (s, &l) in samples.iter().zip(&lambdas) {
        for (acc, v) in a.iter_mut().zip(s) {
            *acc += l * l * v * v;
        }
    }

    let n = modes.len() * nb;
    let mut mat = DMatrix::zeros(n, n);
    let rho: Vec<f64> = a.iter().map(|v| 1.0 + mu * v).collect();
    for (bi, &li) in lambdas.iter().enumerate() {
        let mut block = quad.weighted_gram(&rho) * (li * li);
        for (i, f) in basis.functions().iter().enumerate() {
            let k = f.harmonic() as f64;
            block[(i, i)] -= omega * omega * k * k;
        }
        for (bk, &lk) in lambdas.iter().enumerate() {
            let w: Vec<f64> = samples[bi]
                .iter()
                .zip(&samples[bk])
                .map(|(x, y)| x * y)
                .collect();
            let mut coupling = quad.weighted_gram(&w) * (2.0 * mu * li * li * lk * lk);
            if bi == bk {
                coupling += &block;
            }
            mat.view_mut((bi * nb, bk * nb), (nb, nb))
                .copy_from(&coupling);
        }
    }

    let mut rhs = DVector::zeros(n);
    for (bi, &j) in modes.iter().enumerate() {
        if let Some(p) = h.profile(j) {
            rhs.rows_mut(bi * nb, nb).copy_from(&quad.project(p));
        }
    }
    let sol = mat
        .lu()
        .solve(&rhs)
        .ok_or_else(|| Error::InvalidInput("dense F'(u) is singular".into()))?;

    let mut out = table.zero_like();
    for (bi, &j) in modes.iter().enumerate() {
        let p = synthesize(&basis, &sol.as_slice()[bi * nb..(bi + 1) * nb]);
        out.set_profile(j, p)?;
    }
    Ok(out)
}
