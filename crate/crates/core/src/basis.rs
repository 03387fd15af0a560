//! Laplacian spectra of the supported domains and the mode numbering.
//!
//! Dirichlet modes are numbered from `j = 1`, torus modes from `j = 0` (the
//! constant mode). Within a table the frequencies are nondecreasing and ties
//! are broken by the lexicographic order of the integer label.

use std::cmp::Ordering;
use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Hard cap on the number of modes a single table may hold.
pub const MAX_MODES: usize = 200_000;

/// Spatial domain with a closed-form Laplacian spectrum.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind")]
pub enum DomainSpec {
    /// `(0, π)` with homogeneous Dirichlet conditions.
    DirichletInterval,
    /// Product of intervals `(0, L_i)`, Dirichlet on the boundary.
    DirichletBox { sides: Vec<f64> },
    /// The flat torus `(ℝ / 2πℤ)^d`.
    Torus { dim: usize },
}

impl DomainSpec {
    /// Box with `dim` sides of length π.
    pub fn unit_box(dim: usize) -> Self {
        DomainSpec::DirichletBox {
            sides: vec![PI; dim],
        }
    }

    pub fn dimension(&self) -> usize {
        match self {
            DomainSpec::DirichletInterval => 1,
            DomainSpec::DirichletBox { sides } => sides.len(),
            DomainSpec::Torus { dim } => *dim,
        }
    }

    pub fn is_periodic(&self) -> bool {
        matches!(self, DomainSpec::Torus { .. })
    }

    /// Index of the first mode in a table for this domain.
    pub fn first_index(&self) -> usize {
        if self.is_periodic() {
            0
        } else {
            1
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            DomainSpec::DirichletInterval => Ok(()),
            DomainSpec::DirichletBox { sides } => {
                if sides.is_empty() {
                    return Err(Error::DomainError("box needs at least one side".into()));
                }
                if sides.iter().any(|l| !(l.is_finite() && *l > 0.0)) {
                    return Err(Error::DomainError(format!(
                        "box sides must be finite and positive, got {sides:?}"
                    )));
                }
                Ok(())
            }
            DomainSpec::Torus { dim } => {
                if *dim == 0 {
                    Err(Error::DomainError("torus dimension must be >= 1".into()))
                } else {
                    Ok(())
                }
            }
        }
    }

    /// Side lengths of the fundamental cell.
    pub fn cell(&self) -> Vec<f64> {
        match self {
            DomainSpec::DirichletInterval => vec![PI],
            DomainSpec::DirichletBox { sides } => sides.clone(),
            DomainSpec::Torus { dim } => vec![2.0 * PI; *dim],
        }
    }

    fn lambda_sq(&self, label: &[i64]) -> f64 {
        match self {
            DomainSpec::DirichletInterval => (label[0] * label[0]) as f64,
            DomainSpec::DirichletBox { sides } => label
                .iter()
                .zip(sides)
                .map(|(&j, &l)| {
                    let w = j as f64 * PI / l;
                    w * w
                })
                .sum(),
            DomainSpec::Torus { .. } => label.iter().map(|&m| (m * m) as f64).sum(),
        }
    }

    /// Value of the L²-normalized eigenfunction with the given label at `x`.
    ///
    /// Torus modes use the real basis: the zero label is the constant
    /// `(2π)^{-d/2}`, a label whose first nonzero entry is positive is
    /// `√2 cos(m·x)`, otherwise `√2 sin(-m·x)`, both scaled by `(2π)^{-d/2}`.
    pub fn eigenfunction(&self, label: &[i64], x: &[f64]) -> f64 {
        match self {
            DomainSpec::DirichletInterval => (2.0 / PI).sqrt() * (label[0] as f64 * x[0]).sin(),
            DomainSpec::DirichletBox { sides } => label
                .iter()
                .zip(sides)
                .zip(x)
                .map(|((&j, &l), &xi)| (2.0 / l).sqrt() * (j as f64 * PI * xi / l).sin())
                .product(),
            DomainSpec::Torus { dim } => {
                let norm = (2.0 * PI).powf(-(*dim as f64) / 2.0);
                match label.iter().find(|&&m| m != 0) {
                    None => norm,
                    Some(&first) => {
                        let phase: f64 = label.iter().zip(x).map(|(&m, &xi)| m as f64 * xi).sum();
                        if first > 0 {
                            norm * 2f64.sqrt() * phase.cos()
                        } else {
                            norm * 2f64.sqrt() * (-phase).sin()
                        }
                    }
                }
            }
        }
    }
}

/// One Laplacian mode: `-Δφ = λ² φ`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModeEntry {
    pub j: usize,
    pub label: Vec<i64>,
    pub lambda: f64,
}

/// All modes with `λ ≤ cutoff`, in the canonical order.
#[derive(Clone, Debug, PartialEq)]
pub struct ModeTable {
    entries: Vec<ModeEntry>,
    cutoff: f64,
    first_index: usize,
}

impl ModeTable {
    pub fn entries(&self) -> &[ModeEntry] {
        &self.entries
    }

    pub fn cutoff(&self) -> f64 {
        self.cutoff
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn first_index(&self) -> usize {
        self.first_index
    }

    pub fn get(&self, j: usize) -> Option<&ModeEntry> {
        j.checked_sub(self.first_index)
            .and_then(|i| self.entries.get(i))
    }

    pub fn lambda(&self, j: usize) -> Option<f64> {
        self.get(j).map(|e| e.lambda)
    }

    /// Index of the mode with the given label, if tabulated.
    pub fn index_of(&self, label: &[i64]) -> Option<usize> {
        self.entries
            .iter()
            .find(|e| e.label == label)
            .map(|e| e.j)
    }

    pub fn lambdas(&self) -> impl Iterator<Item = f64> + '_ {
        self.entries.iter().map(|e| e.lambda)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(&self.entries).expect("mode entries serialize")
    }

    /// Rebuilds a table from its JSON array form.
    pub fn from_json(s: &str) -> Result<Self> {
        let entries: Vec<ModeEntry> =
            serde_json::from_str(s).map_err(|e| Error::InvalidInput(e.to_string()))?;
        let first_index = entries.first().map(|e| e.j).unwrap_or(1);
        let cutoff = entries.iter().map(|e| e.lambda).fold(0.0, f64::max);
        Ok(ModeTable {
            entries,
            cutoff,
            first_index,
        })
    }
}

fn lattice_points(domain: &DomainSpec, cutoff: f64) -> Result<Vec<Vec<i64>>> {
    let d = domain.dimension();
    let ranges: Vec<(i64, i64)> = match domain {
        DomainSpec::DirichletInterval => vec![(1, cutoff.floor() as i64)],
        DomainSpec::DirichletBox { sides } => sides
            .iter()
            .map(|l| (1, (cutoff * l / PI).floor() as i64))
            .collect(),
        DomainSpec::Torus { .. } => {
            let m = cutoff.floor() as i64;
            vec![(-m, m); d]
        }
    };
    let candidates = ranges
        .iter()
        .map(|&(lo, hi)| (hi - lo + 1).max(0) as f64)
        .product::<f64>();
    if candidates > 64.0 * MAX_MODES as f64 {
        return Err(Error::CapacityExceeded {
            cap: MAX_MODES,
            cutoff,
        });
    }
    if ranges.iter().any(|&(lo, hi)| hi < lo) {
        return Ok(Vec::new());
    }

    let cutoff_sq = cutoff * cutoff;
    let mut out = Vec::new();
    let mut cur: Vec<i64> = ranges.iter().map(|r| r.0).collect();
    loop {
        if domain.lambda_sq(&cur) <= cutoff_sq * (1.0 + 1e-14) {
            out.push(cur.clone());
            if out.len() > MAX_MODES {
                return Err(Error::CapacityExceeded {
                    cap: MAX_MODES,
                    cutoff,
                });
            }
        }
        // odometer increment, last coordinate fastest
        let mut axis = d;
        loop {
            if axis == 0 {
                return Ok(out);
            }
            axis -= 1;
            if cur[axis] < ranges[axis].1 {
                cur[axis] += 1;
                for (c, r) in cur.iter_mut().zip(&ranges).skip(axis + 1) {
                    *c = r.0;
                }
                break;
            }
        }
    }
}

/// Lists every mode with `λ ≤ cutoff`, sorted by `λ` then by label.
pub fn enumerate_modes(domain: &DomainSpec, cutoff: f64) -> Result<ModeTable> {
    domain.validate()?;
    if !(cutoff > 0.0 && cutoff.is_finite()) {
        return Err(Error::DomainError(format!(
            "cutoff must be positive and finite, got {cutoff}"
        )));
    }
    let mut labelled: Vec<(f64, Vec<i64>)> = lattice_points(domain, cutoff)?
        .into_iter()
        .map(|l| (domain.lambda_sq(&l), l))
        .collect();
    labelled.sort_by(|a, b| match a.0.partial_cmp(&b.0) {
        Some(Ordering::Equal) | None => a.1.cmp(&b.1),
        Some(o) => o,
    });
    let first_index = domain.first_index();
    let entries = labelled
        .into_iter()
        .enumerate()
        .map(|(i, (lsq, label))| ModeEntry {
            j: first_index + i,
            label,
            lambda: lsq.sqrt(),
        })
        .collect();
    Ok(ModeTable {
        entries,
        cutoff,
        first_index,
    })
}

/// Empirical constants `C ≤ C'` with `C j^{1/d} ≤ λ_j ≤ C' j^{1/d}` for
/// `1 ≤ j ≤ jmax`.
pub fn weyl_envelope(domain: &DomainSpec, jmax: usize) -> Result<(f64, f64)> {
    if jmax == 0 {
        return Err(Error::InvalidInput("jmax must be >= 1".into()));
    }
    let first = domain.first_index();
    let mut cutoff = 2.0;
    let table = loop {
        let t = enumerate_modes(domain, cutoff)?;
        if let Some(e) = t.get(jmax) {
            // Everything below λ_jmax is complete once the table reaches it.
            if e.lambda < cutoff {
                break t;
            }
        }
        cutoff *= 1.5;
    };
    let d = domain.dimension() as f64;
    let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
    for j in 1.max(first)..=jmax {
        let lambda = table.lambda(j).expect("table covers jmax");
        let r = lambda / (j as f64).powf(1.0 / d);
        lo = lo.min(r);
        hi = hi.max(r);
    }
    Ok((lo, hi))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn interval_modes() {
        let t = enumerate_modes(&DomainSpec::DirichletInterval, 3.5).unwrap();
        let l: Vec<f64> = t.lambdas().collect();
        assert_eq!(l, vec![1.0, 2.0, 3.0]);
        let labels: Vec<_> = t.entries().iter().map(|e| e.label.clone()).collect();
        assert_eq!(labels, vec![vec![1], vec![2], vec![3]]);
        assert_eq!(t.first_index(), 1);
        assert_eq!(t.lambda(2), Some(2.0));
    }

    #[test]
    fn torus_1d_ordering() {
        let t = enumerate_modes(&DomainSpec::Torus { dim: 1 }, 1.5).unwrap();
        let l: Vec<f64> = t.lambdas().collect();
        assert_eq!(l, vec![0.0, 1.0, 1.0]);
        let labels: Vec<_> = t.entries().iter().map(|e| e.label.clone()).collect();
        assert_eq!(labels, vec![vec![0], vec![-1], vec![1]]);
        assert_eq!(t.get(0).unwrap().j, 0);
    }

    #[test]
    fn torus_2d_unit_ball() {
        let t = enumerate_modes(&DomainSpec::Torus { dim: 2 }, 1.0).unwrap();
        assert_eq!(t.len(), 5);
        assert_eq!(t.entries()[0].label, vec![0, 0]);
        let l: Vec<f64> = t.lambdas().collect();
        assert_eq!(l, vec![0.0, 1.0, 1.0, 1.0, 1.0]);
    }

    #[test]
    fn interval_weyl_is_exact() {
        let (c, cp) = weyl_envelope(&DomainSpec::DirichletInterval, 100).unwrap();
        assert_eq!(c, 1.0);
        assert_eq!(cp, 1.0);
    }

    #[test]
    fn bad_inputs() {
        assert!(enumerate_modes(&DomainSpec::DirichletInterval, 0.0).is_err());
        assert!(enumerate_modes(&DomainSpec::Torus { dim: 0 }, 1.0).is_err());
        assert!(matches!(
            enumerate_modes(&DomainSpec::Torus { dim: 3 }, 1e4),
            Err(Error::CapacityExceeded { .. })
        ));
    }

    #[test]
    fn box_eigenfunctions_are_normalized() {
        let dom = DomainSpec::unit_box(2);
        let n = 64;
        let h = PI / n as f64;
        let mut acc = 0.0;
        for a in 0..n {
            for b in 0..n {
                let x = [(a as f64 + 0.5) * h, (b as f64 + 0.5) * h];
                acc += dom.eigenfunction(&[1, 2], &x).powi(2) * h * h;
            }
        }
        assert!((acc - 1.0).abs() < 1e-10);
    }
}
