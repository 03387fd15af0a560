//! End-to-end acceptance checks. Prints one PASS/FAIL line per criterion and
//! exits nonzero when any fails.

use std::f64::consts::PI;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::process::Command;
use std::sync::Arc;
use std::time::Instant;

use kirchhoff_core::basis::{enumerate_modes, DomainSpec, ModeTable};
use kirchhoff_core::field::{project, sigma_s_norm, Field, NormParams, TimeProfile};
use kirchhoff_core::hill::{liouville_oracle, solve_hill, sup_norm_estimate};
use kirchhoff_core::kirchhoff::{convert_scaling, ProblemData, ScalingDirection};
use kirchhoff_core::linsolve::dense::{dense_invert_linearized, dense_invert_mode};
use kirchhoff_core::linsolve::{
    check_nonresonance, invert_d, invert_linearized, LinearizationSetup, LinearizedContext,
    TimeSymmetry,
};
use kirchhoff_core::nashmoser::{
    fit_envelope, newton_rate_holds, solve, uniqueness_probe, SolveOutcome, SolveStatus,
    SolverParams,
};
use kirchhoff_core::sweep::{measure_curve, sweep_omega, SweepConfig};
use kirchhoff_core::Error;
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Check = Result<String, String>;

fn ensure(ok: bool, msg: impl Into<String>) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn table(d: &DomainSpec, cutoff: f64) -> Arc<ModeTable> {
    Arc::new(enumerate_modes(d, cutoff).unwrap())
}

fn random_profile<R: Rng>(rng: &mut R, m: usize, amp: f64) -> TimeProfile {
    let mut c = vec![Complex64::new(0.0, 0.0); m + 1];
    c[0] = Complex64::new(amp * rng.gen_range(-1.0..1.0), 0.0);
    for (k, ck) in c.iter_mut().enumerate().skip(1) {
        let s = amp / (k * k) as f64;
        *ck = Complex64::new(s * rng.gen_range(-1.0..1.0), s * rng.gen_range(-1.0..1.0));
    }
    TimeProfile::new(c)
}

/// Random weight with at most 4 harmonics and sup norm below 1/2.
fn random_alpha<R: Rng>(rng: &mut R) -> TimeProfile {
    loop {
        let a = random_profile(rng, 4, 0.3);
        if sup_norm_estimate(&a) < 0.5 {
            return a;
        }
    }
}

fn fine_sup(y: &TimeProfile) -> f64 {
    y.samples(8192).into_iter().map(f64::abs).fold(0.0, f64::max)
}

fn single_mode(omega: f64, mu: f64) -> ProblemData {
    let d = DomainSpec::DirichletInterval;
    let g = Field::zero(d.clone(), table(&d, 1.0), 0.0)
        .with_profile(1, TimeProfile::cos(1, 1.0))
        .unwrap();
    ProblemData {
        domain: d,
        forcing: g,
        omega,
        mu,
        gamma: 0.1,
        tau: 1.5,
    }
}

fn single_mode_run(mu: f64) -> SolveOutcome {
    solve(&single_mode(0.5, mu), &SolverParams::default()).unwrap()
}

fn c1_hill_exactness() -> Check {
    let spec = solve_hill(&TimeProfile::zero(), 10, 64).map_err(|e| e.to_string())?;
    let expected = [0.0, 1.0, 1.0, 2.0, 2.0, 3.0, 3.0, 4.0, 4.0, 5.0, 5.0];
    let p = spec.frequencies();
    ensure(p.len() >= expected.len(), format!("only {} values", p.len()))?;
    let err = expected
        .iter()
        .zip(&p)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    ensure(err < 1e-10, format!("max error {err:e}"))?;
    Ok(format!("max error {err:e}"))
}

fn c2_hill_bounds() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let runs: Vec<(TimeProfile, Vec<f64>)> = (0..50)
        .map(|_| {
            let a = random_alpha(&mut rng);
            let p = solve_hill(&a, 12, 48).unwrap().frequencies();
            (a, p)
        })
        .collect();
    let mut violations = 0;
    let mut pairs = 0;
    for (_, p) in &runs {
        for l in 1..=12 {
            let lf = l as f64;
            if !(p[l] >= lf / 3.0 && p[l] <= 2.0 * lf) {
                violations += 1;
            }
        }
    }
    for (i, (a, pa)) in runs.iter().enumerate() {
        for (b, pb) in &runs[i + 1..] {
            pairs += 1;
            let dist = fine_sup(&(a - b));
            for l in 1..=12 {
                if (pa[l] - pb[l]).abs() > 2.0 * l as f64 * dist {
                    violations += 1;
                }
            }
        }
    }
    ensure(violations == 0, format!("{violations} violations"))?;
    Ok(format!("50 weights, {pairs} pairs, 0 violations"))
}

fn c3_liouville() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut worst: f64 = 0.0;
    for _ in 0..10 {
        let a = random_alpha(&mut rng);
        let direct = solve_hill(&a, 6, 48).map_err(|e| e.to_string())?;
        let lv = liouville_oracle(&a, 6, 48).map_err(|e| e.to_string())?;
        for l in 1..=6 {
            worst = worst.max((direct.p(l) - lv[l]).abs() / direct.p(l));
        }
    }
    ensure(worst < 1e-8, format!("max relative difference {worst:e}"))?;
    Ok(format!("max relative difference {worst:e}"))
}

fn c4_dense_oracles() -> Check {
    const N: f64 = 8.0;
    const MDISC: usize = 32;
    let d = DomainSpec::DirichletInterval;
    let modes = table(&d, N);
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let (mut worst_d, mut worst_l, mut worst_contract): (f64, f64, f64) = (0.0, 0.0, 0.0);
    let mut done = 0;
    let mut attempts = 0;
    while done < 20 {
        attempts += 1;
        ensure(attempts < 2000, "could not find 20 non-resonant instances")?;
        let mu = rng.gen_range(0.02..0.05);
        let mut u = Field::zero(d.clone(), modes.clone(), 0.0);
        for j in 1..=3 {
            u.set_profile(j, random_profile(&mut rng, 2, 0.2 / (j * j) as f64))
                .unwrap();
        }
        let mut h = Field::zero(d.clone(), modes.clone(), 0.0);
        for j in 1..=8 {
            h.set_profile(j, random_profile(&mut rng, 4, 1.0)).unwrap();
        }
        let omega = rng.gen_range(0.3..3.0);
        let setup = LinearizationSetup {
            omega,
            mu,
            gamma: 0.05,
            tau: 1.5,
            sigma: 0.0,
            symmetry: TimeSymmetry::Full,
        };
        let ctx = LinearizedContext::at(setup, &u, modes.clone(), N, MDISC)
            .map_err(|e| e.to_string())?;
        if !check_nonresonance(&ctx, 0.05, 1.5, N)
            .map_err(|e| e.to_string())?
            .satisfied
        {
            continue;
        }
        done += 1;
        let y = invert_d(&ctx, &h).map_err(|e| e.to_string())?;
        for (j, hj) in h.profiles() {
            let dense = dense_invert_mode(omega, mu, &ctx.a, h.lambda(j), hj, MDISC)
                .map_err(|e| e.to_string())?;
            let diff = (y.profile(j).unwrap() - &dense).max_abs_coeff() / dense.max_abs_coeff();
            worst_d = worst_d.max(diff);
        }
        let x = invert_linearized(&ctx, &u, &h, 200, 1e-14).map_err(|e| e.to_string())?;
        worst_contract = worst_contract.max(x.contract_residual);
        let dense = dense_invert_linearized(omega, mu, &u, &h, MDISC).map_err(|e| e.to_string())?;
        let scale = dense.max_coeff_diff(&dense.zero_like());
        worst_l = worst_l.max(x.solution.max_coeff_diff(&dense) / scale);
    }
    let detail = format!(
        "D⁻¹ {worst_d:e}, F'⁻¹ {worst_l:e}, contract {worst_contract:e} over 20 instances"
    );
    ensure(worst_d < 1e-8 && worst_l < 1e-8 && worst_contract <= 1e-9, detail.clone())?;
    Ok(detail)
}

fn c5_smoothing() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let domains = [
        DomainSpec::DirichletInterval,
        DomainSpec::DirichletBox {
            sides: vec![PI, 2.0],
        },
        DomainSpec::Torus { dim: 1 },
        DomainSpec::Torus { dim: 2 },
    ];
    let mut violations = 0;
    let mut checks = 0;
    for i in 0..100 {
        let d = &domains[i % domains.len()];
        let t = table(d, 12.0);
        let sigma = rng.gen_range(0.0..0.3);
        let s = rng.gen_range(0.0..3.0);
        let mut u = Field::zero(d.clone(), t.clone(), sigma);
        for e in t.entries() {
            let amp = 1.0 / (1.0 + e.lambda).powi(2);
            u.set_profile(e.j, random_profile(&mut rng, 3, amp)).unwrap();
        }
        for alpha in [0.5, 1.0, 2.0] {
            for n in [2.0f64, 4.0, 8.0] {
                checks += 2;
                let p = project(&u, n);
                let s1_lhs = sigma_s_norm(&p, NormParams::new(sigma, s + alpha));
                let s1_rhs = n.powf(alpha) * sigma_s_norm(&u, NormParams::new(sigma, s));
                if s1_lhs > s1_rhs * (1.0 + 1e-12) {
                    violations += 1;
                }
                let s2_lhs = sigma_s_norm(&u.sub(&p), NormParams::new(sigma, s));
                let s2_rhs = n.powf(-alpha) * sigma_s_norm(&u, NormParams::new(sigma, s + alpha));
                if s2_lhs > s2_rhs * (1.0 + 1e-12) {
                    violations += 1;
                }
            }
        }
    }
    ensure(violations == 0, format!("{violations} of {checks} violated"))?;
    Ok(format!("{checks} inequalities, 0 violations"))
}

/// Periodic spectral second-derivative matrix on `n` (even) points.
fn d2_matrix(n: usize) -> DMatrix<f64> {
    let h = 2.0 * PI / n as f64;
    DMatrix::from_fn(n, n, |i, j| {
        if i == j {
            -PI * PI / (3.0 * h * h) - 1.0 / 6.0
        } else {
            let k = i as f64 - j as f64;
            let sign = if (i + j) % 2 == 0 { 1.0 } else { -1.0 };
            -sign * 0.5 / (k * h / 2.0).sin().powi(2)
        }
    })
}

/// Solves `ω² v'' + v (1 + μ v²) = μ cos t` by collocation and damped Newton
/// among half-wave-odd functions `v(t + π) = −v(t)`.
///
/// For `ω = 1/2` the second harmonic lies in the kernel of the linear part, so
/// periodic solutions are only unique inside that class.
fn scalar_ode(omega: f64, mu: f64, n: usize) -> Result<Vec<f64>, String> {
    let half = n / 2;
    let ts: Vec<f64> = (0..n).map(|i| 2.0 * PI * i as f64 / n as f64).collect();
    let d2 = d2_matrix(n) * (omega * omega);
    // v = [w; −w], equations on the first half
    let d2_half = DMatrix::from_fn(half, half, |i, j| d2[(i, j)] - d2[(i, j + half)]);
    let rhs = DVector::from_iterator(half, ts[..half].iter().map(|t| mu * t.cos()));
    let mut w = DVector::from_iterator(
        half,
        ts[..half].iter().map(|t| mu / (1.0 - omega * omega) * t.cos()),
    );
    let resid = |w: &DVector<f64>| &d2_half * w + w.map(|x| x + mu * x * x * x) - &rhs;
    let mut r = resid(&w);
    for _ in 0..50 {
        if r.amax() < 1e-17 {
            break;
        }
        let mut jac = d2_half.clone();
        for i in 0..half {
            jac[(i, i)] += 1.0 + 3.0 * mu * w[i] * w[i];
        }
        let step = jac.lu().solve(&r).ok_or("singular collocation Jacobian")?;
        let mut damping = 1.0;
        loop {
            let trial = &w - &step * damping;
            let rt = resid(&trial);
            if rt.norm() < r.norm() || damping < 1e-4 {
                w = trial;
                r = rt;
                break;
            }
            damping *= 0.5;
        }
    }
    ensure(r.amax() < 1e-14, format!("collocation Newton stalled at {:e}", r.amax()))?;
    Ok(w.iter().copied().chain(w.iter().map(|x| -x)).collect())
}

fn c6_single_mode() -> Check {
    let out = single_mode_run(1e-3);
    ensure(
        out.status == SolveStatus::Converged,
        format!("status {}", out.status.label()),
    )?;
    let u = out.solution.as_ref().unwrap();
    let residual = out.final_residual.unwrap();
    let v = scalar_ode(0.5, 1e-3, 256)?;
    let u1 = u.profile(1).unwrap();
    let diff = v
        .iter()
        .enumerate()
        .map(|(i, &vi)| (u1.eval(2.0 * PI * i as f64 / 256.0) - vi).abs())
        .fold(0.0, f64::max);
    let others = u
        .profiles()
        .filter(|&(j, _)| j != 1)
        .map(|(_, p)| p.max_abs_coeff())
        .fold(0.0, f64::max);
    let detail = format!("sup diff {diff:e}, residual {residual:e}, other modes {others:e}");
    ensure(diff < 1e-8 && residual < 1e-10 && others == 0.0, detail.clone())?;
    Ok(detail)
}

fn c7_newton_rate() -> Check {
    let out = single_mode_run(1e-3);
    let rates = newton_rate_holds(&out.trace, 1.0, 1e-2, 1e-20);
    let fit = fit_envelope(&out.trace, 1e-3, 0.1, SolverParams::default().chi);
    let detail = format!("residuals {:?}, fit {fit:?}", out.trace.residuals());
    ensure(rates, format!("rate violated: {detail}"))?;
    match fit {
        Some((_, b)) if b > 0.0 => Ok(detail),
        _ => Err(format!("no positive b_fit: {detail}")),
    }
}

fn c8_rejection() -> Check {
    let out = solve(&single_mode(1.0, 1e-3), &SolverParams::default()).map_err(|e| e.to_string())?;
    ensure(
        out.status.stage() == Some(0) && out.status.offender() == Some((1, 1)),
        format!("status {:?}", out.status),
    )?;
    let cfg = format!("{}/examples/single_mode.json", env!("CARGO_MANIFEST_DIR"));
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let o = Command::new(env!("CARGO_BIN_EXE_kirchhoff"))
        .args(["--config", &cfg, "--set", "problem.omega=1", "--out"])
        .arg(dir.path())
        .output()
        .map_err(|e| e.to_string())?;
    ensure(o.status.code() == Some(2), format!("exit code {:?}", o.status.code()))?;
    Ok("stage 0, offender (1,1), exit code 2".into())
}

fn c9_periodic() -> Check {
    let d = DomainSpec::Torus { dim: 1 };
    let t = table(&d, 2.0);
    // g(x,t) = cos t, i.e. √(2π) cos t on the normalized constant mode
    let root = (2.0 * PI).sqrt();
    let mut g = Field::zero(d.clone(), t.clone(), 0.0);
    g.set_by_label(&[0], TimeProfile::cos(1, root)).unwrap();
    let pd = ProblemData {
        domain: d.clone(),
        forcing: g.clone(),
        omega: 1.0,
        mu: 0.1,
        gamma: 0.1,
        tau: 1.5,
    };
    let out = solve(&pd, &SolverParams::default()).map_err(|e| e.to_string())?;
    ensure(out.status.is_converged(), format!("status {}", out.status.label()))?;
    let u = out.solution.unwrap();
    let j0 = u.modes().index_of(&[0]).unwrap();
    let y = u.profile(j0).unwrap().scale(1.0 / root);
    let err = (&y - &TimeProfile::cos(1, -0.1)).max_abs_coeff();
    let w = u
        .profiles()
        .filter(|&(j, _)| j != j0)
        .map(|(_, p)| p.max_abs_coeff())
        .fold(0.0, f64::max);
    let mean = u.space_time_mean();
    ensure(
        err < 1e-14 && w == 0.0 && mean == 0.0,
        format!("y error {err:e}, W {w:e}, mean {mean:e}"),
    )?;

    let mut bad = g;
    bad.set_by_label(&[0], &TimeProfile::cos(1, root) + &TimeProfile::constant(0.3))
        .unwrap();
    let refused = solve(&ProblemData { forcing: bad, ..pd }, &SolverParams::default());
    ensure(
        matches!(refused, Err(Error::MeanNotZero { .. })),
        format!("nonzero-mean forcing gave {refused:?}"),
    )?;
    Ok(format!("y error {err:e}, W = 0, mean = 0, MeanNotZero raised"))
}

fn sweep_config(n_omega: usize) -> SweepConfig {
    SweepConfig {
        omega_interval: (1.1, 2.9),
        n_omega,
        mu_values: vec![1e-3],
        gamma_values: vec![0.02, 0.05, 0.1],
        solver: SolverParams {
            m_time: 16,
            n_cap: 16.0,
            ..Default::default()
        },
        seed: 10,
        delta_emp: 0.1,
        n_mu: 1,
        mu_decades: 2.0,
    }
}

fn c10_measure_trend() -> Check {
    let pd = single_mode(1.5, 1e-3);
    let coarse = measure_curve(&sweep_omega(&sweep_config(2000), &pd).map_err(|e| e.to_string())?)
        .map_err(|e| e.to_string())?;
    let fine = measure_curve(&sweep_omega(&sweep_config(4000), &pd).map_err(|e| e.to_string())?)
        .map_err(|e| e.to_string())?;
    let fractions: Vec<f64> = coarse.points.iter().map(|p| p.1).collect();
    let change = (fine.slope / coarse.slope - 1.0).abs();
    let detail = format!(
        "accepted {fractions:?}, slope {:.4} -> {:.4} ({:.1}%)",
        coarse.slope,
        fine.slope,
        100.0 * change
    );
    ensure(
        coarse.rejection_monotone()
            && fine.rejection_monotone()
            && coarse.slope.is_finite()
            && change <= 0.25,
        detail.clone(),
    )?;
    Ok(detail)
}

fn c11_uniqueness() -> Check {
    let pd = single_mode(0.5, 1e-3);
    let params = SolverParams::default();
    let out = solve(&pd, &params).map_err(|e| e.to_string())?;
    let u = out.solution.ok_or("criterion 6 run did not converge")?;
    let radius = 0.1 * sigma_s_norm(&u, NormParams::new(params.sigma, pd.tau + 1.0));
    let probe = uniqueness_probe(&pd, &params, &u, 10, radius).map_err(|e| e.to_string())?;
    let worst = probe
        .deviations
        .iter()
        .map(|d| d.unwrap_or(f64::INFINITY))
        .fold(0.0, f64::max);
    ensure(probe.passed(), format!("deviations {:?}", probe.deviations))?;
    Ok(format!("10 perturbations, max deviation {worst:e}"))
}

fn c12_scaling() -> Check {
    let mut worst: f64 = 0.0;
    for eps in [1e-9, 1e-6, 1e-3, 0.1, 0.5] {
        let (mu, _) = convert_scaling(eps, ScalingDirection::PhysicalToScaled, None)
            .map_err(|e| e.to_string())?;
        let (back, _) = convert_scaling(mu, ScalingDirection::ScaledToPhysical, None)
            .map_err(|e| e.to_string())?;
        worst = worst.max((back - eps).abs() / eps);
    }
    let norm = |mu: f64| {
        single_mode_run(mu)
            .solution
            .map(|u| sigma_s_norm(&u, NormParams::new(0.0, 0.0)))
    };
    let (full, half) = (norm(1e-3), norm(5e-4));
    let ratio = match (full, half) {
        (Some(a), Some(b)) => b / a,
        _ => return Err("a scaling run did not converge".into()),
    };
    let detail = format!("round trip {worst:e}, norm ratio {ratio:.6}");
    ensure(worst <= 1e-15 && (0.45..=0.55).contains(&ratio), detail.clone())?;
    Ok(detail)
}

fn main() {
    let checks: [(&str, fn() -> Check); 12] = [
        ("hill exactness", c1_hill_exactness),
        ("hill comparison and Lipschitz bounds", c2_hill_bounds),
        ("liouville cross-check", c3_liouville),
        ("dense linear-solver equivalence", c4_dense_oracles),
        ("smoothing inequalities", c5_smoothing),
        ("single-mode end-to-end", c6_single_mode),
        ("newton rate", c7_newton_rate),
        ("resonance rejection", c8_rejection),
        ("periodic boundary conditions", c9_periodic),
        ("measure trend", c10_measure_trend),
        ("uniqueness probe", c11_uniqueness),
        ("scaling identities", c12_scaling),
    ];
    let mut failed = 0;
    for (i, (name, check)) in checks.iter().enumerate() {
        let start = Instant::now();
        let result = catch_unwind(AssertUnwindSafe(check))
            .unwrap_or_else(|_| Err("panicked".to_string()));
        let secs = start.elapsed().as_secs_f64();
        match result {
            Ok(detail) => println!("PASS {:>2} {name}: {detail} [{secs:.2}s]", i + 1),
            Err(detail) => {
                failed += 1;
                println!("FAIL {:>2} {name}: {detail} [{secs:.2}s]", i + 1);
            }
        }
    }
    println!("{} of {} criteria passed", checks.len() - failed, checks.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
