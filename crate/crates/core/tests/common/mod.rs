#![allow(dead_code)]

use std::sync::Arc;

use kirchhoff_core::basis::{enumerate_modes, DomainSpec};
use kirchhoff_core::field::{Field, TimeProfile};
use num_complex::Complex64;
use rand::Rng;

pub fn table(domain: &DomainSpec, cutoff: f64) -> Arc<kirchhoff_core::basis::ModeTable> {
    Arc::new(enumerate_modes(domain, cutoff).unwrap())
}

pub fn random_profile<R: Rng>(rng: &mut R, m: usize, amp: f64) -> TimeProfile {
    let mut c = vec![Complex64::new(0.0, 0.0); m + 1];
    c[0] = Complex64::new(amp * rng.gen_range(-1.0..1.0), 0.0);
    for (k, ck) in c.iter_mut().enumerate().skip(1) {
        let s = amp / (1 + k * k) as f64;
        *ck = Complex64::new(s * rng.gen_range(-1.0..1.0), s * rng.gen_range(-1.0..1.0));
    }
    TimeProfile::new(c)
}

/// Random field on every tabulated mode with `λ ≤ cutoff`, `m` harmonics.
pub fn random_field<R: Rng>(
    rng: &mut R,
    domain: &DomainSpec,
    cutoff: f64,
    m: usize,
    amp: f64,
) -> Field {
    let t = table(domain, cutoff);
    let mut u = Field::zero(domain.clone(), t.clone(), 0.0);
    for e in t.entries() {
        let decay = 1.0 / (1.0 + e.lambda).powi(2);
        u.set_profile(e.j, random_profile(rng, m, amp * decay)).unwrap();
    }
    u
}

pub fn rel_diff(a: &Field, b: &Field) -> f64 {
    let scale = a
        .profiles()
        .flat_map(|(_, p)| p.coeffs().iter().map(|c| c.norm()))
        .fold(0.0, f64::max)
        .max(1e-300);
    a.max_coeff_diff(b) / scale
}
