//! Acceptance suite. Prints one line per criterion and exits non-zero if any fails.

mod common;

use std::f64::consts::PI;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use distvp::driver::{self, RunSettings};
use distvp::geometry::{brute_force_distance, interpolated_set_is_convex, linear_interpolation_is_convex};
use distvp::probe::{locus, locus_metrics, Plane};
use distvp::verify::{gradcheck, thermo_audit, AuditConfig};
use distvp::{ArcBoundary, MaterialParams, MaterialState, Vec2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;

type Criterion = (&'static str, fn() -> Outcome);

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn prestrained(p: &MaterialParams, hoop: bool) -> Result<(MaterialState, driver::Trajectory, Duration), String> {
    let program = if hoop { driver::hoop_prestrain() } else { driver::axial_prestrain() };
    let start = Instant::now();
    let traj = driver::run(p, &MaterialState::virgin(), &program, &RunSettings::default()).map_err(|e| e.to_string())?;
    Ok((traj.final_state, traj, start.elapsed()))
}

fn prestrain_saturation() -> Outcome {
    let p = common::alloy_egg();
    let (_, traj, elapsed) = prestrained(&p, false)?;
    let last = traj.last();
    let closed = 1.0 - (-p.c_d * p.kappa_d * last.p).exp();
    check(
        (last.alpha - 0.999993).abs() <= 5e-6 && (last.alpha - closed).abs() <= 1e-6 && elapsed.as_secs_f64() < 10.0,
        format!("alpha = {:.9}, closed form {closed:.9}, {:.2} s", last.alpha, elapsed.as_secs_f64()),
    )
}

fn virgin_circle() -> Outcome {
    let p = common::alloy_egg();
    let l = locus(&p, &MaterialState::virgin(), Plane::AxialTorsion, 0.0, 0.0, 720).map_err(|e| e.to_string())?;
    let dev = l.polygon().iter().map(|q| ((q.a * q.a + q.b * q.b).sqrt() - 7.4).abs()).fold(0.0, f64::max);
    check(dev < 1e-6, format!("max radial deviation {dev:.3e} MPa"))
}

fn hardening_limits() -> Outcome {
    let p = common::alloy_egg();
    let program = driver::uniaxial_prestrain("11", 0.5, 1e-3);
    let traj = driver::run(&p, &MaterialState::virgin(), &program, &RunSettings::default()).map_err(|e| e.to_string())?;
    let last = traj.last();
    let rel = |x: f64, target: f64| (x - target).abs() / target;
    let errs = [rel(last.r, p.gamma / p.beta), rel(last.x_k.norm(), 1.0 / p.kappa_k), rel(last.x_d.norm(), 1.0 / p.kappa_d)];
    check(
        errs.iter().all(|&e| e <= 1e-3),
        format!("R = {:.6}, |X_k| = {:.6}, |X_d| = {:.6}", last.r, last.x_k.norm(), last.x_d.norm()),
    )
}

fn dissipation_audit() -> Outcome {
    let start = Instant::now();
    let report = thermo_audit(&common::alloy_egg(), &AuditConfig::default()).map_err(|e| e.to_string())?;
    let elapsed = start.elapsed().as_secs_f64();
    check(
        report.passes() && report.programs >= 10_000 && elapsed < 300.0,
        format!(
            "{} programs, {} steps, {} violations, min scaled terms {:?}, {elapsed:.1} s",
            report.programs,
            report.steps,
            report.violations.len(),
            report.min_scaled_terms
        ),
    )
}

fn gradient() -> Outcome {
    let r = gradcheck(&common::alloy_egg(), 1000, 1).map_err(|e| e.to_string())?;
    check(
        r.passes(1e-5) && r.min_theta < 1e-3 && r.max_theta > PI - 1e-3,
        format!(
            "max rel error {:.3e}, norm defect {:.3e}, theta in [{:.2e}, pi - {:.2e}]",
            r.max_rel_error,
            r.max_norm_defect,
            r.min_theta,
            PI - r.max_theta
        ),
    )
}

fn geometry_oracle() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut worst: f64 = 0.0;
    let mut failed = 0;
    for _ in 0..1000 {
        let shape = common::random_shape(&mut rng);
        let rmax = common::boundary_rmax(&shape);
        let alpha = rng.random_range(0.0..=1.0);
        let th = rng.random_range(-PI..PI);
        let y = rng.random_range(0.0..2.0 * rmax) * Vec2::new(th.cos(), th.sin());
        let d = shape.distance_to_scaled(alpha, y).map_err(|e| e.to_string())?;
        let gap = (d - brute_force_distance(&shape, alpha, y, 100_000)).abs();
        if gap > 1e-6 + 2.0 * PI * alpha * rmax / 1e5 {
            failed += 1;
        }
        worst = worst.max(gap);
    }
    let egg = ArcBoundary::egg();
    let grid: Vec<f64> = (0..=20).map(|i| i as f64 * 0.05).collect();
    let mut convex = true;
    let mut linear_fails = false;
    for &a in &grid {
        convex &= interpolated_set_is_convex(&egg, a).map_err(|e| e.to_string())?;
        linear_fails |= !linear_interpolation_is_convex(&egg, a).map_err(|e| e.to_string())?;
    }
    check(
        failed == 0 && convex && linear_fails,
        format!("{failed} of 1000 distances off (worst gap {worst:.2e}), interpolated convex: {convex}, linear counterexample found: {linear_fails}"),
    )
}

fn hoop_symmetry() -> Outcome {
    let p = common::alloy_egg();
    let (state, _, _) = prestrained(&p, true)?;
    let mut worst: f64 = 0.0;
    let mut larger = true;
    for c in [5.0, 10.0, 15.0] {
        let plus = locus(&p, &state, Plane::HoopTorsion, c, 0.0, 720).map_err(|e| e.to_string())?;
        let minus = locus(&p, &state, Plane::HoopTorsion, -c, 0.0, 720).map_err(|e| e.to_string())?;
        let (mp, mm) = (locus_metrics(&plus), locus_metrics(&minus));
        worst = worst
            .max((mp.area - mm.area).abs())
            .max((mp.forward_extent - mm.forward_extent).abs())
            .max((mp.backward_extent - mm.backward_extent).abs());
        let top = |l: &distvp::probe::YieldLocus| l.polygon().iter().map(|q| q.a).fold(f64::MIN, f64::max);
        larger &= top(&plus) > top(&minus);
    }
    check(worst < 1e-6 && larger, format!("largest pair mismatch {worst:.2e} MPa, yields later for positive sigma_11: {larger}"))
}

fn axial_distortion() -> Outcome {
    let p = common::alloy_egg();
    let (state, traj, _) = prestrained(&p, false)?;
    let alpha = traj.last().alpha;
    let k_ratio = 1.0 / p.shape.k_sat_pi();
    let mut metrics = Vec::new();
    for f in [0.0, 0.5, 1.0, 2.0] {
        let l = locus(&p, &state, Plane::AxialTorsion, 0.0, f, 720).map_err(|e| e.to_string())?;
        metrics.push(locus_metrics(&l));
    }
    let extent_ratio = metrics[0].forward_extent / metrics[0].backward_extent;
    let extent_ok = (extent_ratio / k_ratio - 1.0).abs() <= 10.0 * (1.0 - alpha) + 1e-9;
    let base = (metrics[0].distortion_ratio - 1.0).abs();
    let fades = metrics[1..].iter().all(|m| (m.distortion_ratio - 1.0).abs() < base);
    let ratios: Vec<String> = metrics.iter().map(|m| format!("{:.3}", m.distortion_ratio)).collect();
    check(
        extent_ok && fades,
        format!("extent ratio {extent_ratio:.6} vs {k_ratio:.6}, distortion ratios [{}]", ratios.join(", ")),
    )
}

fn chaboche_reduction() -> Outcome {
    let p = MaterialParams { c_d: 0.0, ..common::alloy_egg() };
    let program = common::uniaxial_cycle(&[0.01, -0.01, 0.005], 1e-3);
    let traj = driver::run(&p, &MaterialState::virgin(), &program, &RunSettings { dt: None, sample_every: 1 })
        .map_err(|e| e.to_string())?;
    let times: Vec<f64> = traj.rows.iter().map(|r| r.t).collect();
    let eps11: Vec<f64> = traj.rows.iter().map(|r| r.eps.c[0]).collect();
    let oracle = common::af_voce_uniaxial(&p, &times, &eps11);
    let worst = traj
        .rows
        .iter()
        .zip(&oracle)
        .map(|(r, s)| (r.sigma.c[0] - s).abs() / s.abs().max(p.k0))
        .fold(0.0, f64::max);
    check(worst <= 1e-8, format!("{} points, worst relative gap {worst:.2e}", oracle.len()))
}

fn main() -> ExitCode {
    let criteria: [Criterion; 9] = [
        ("prestrain saturation", prestrain_saturation),
        ("virgin yield circle", virgin_circle),
        ("hardening limits", hardening_limits),
        ("dissipation audit", dissipation_audit),
        ("flow direction gradient", gradient),
        ("geometry oracle", geometry_oracle),
        ("hoop prestrain symmetry", hoop_symmetry),
        ("axial prestrain distortion", axial_distortion),
        ("Chaboche reduction", chaboche_reduction),
    ];
    let mut failures = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        match run() {
            Ok(detail) => println!("[PASS] {}. {name}: {detail}", i + 1),
            Err(detail) => {
                failures += 1;
                println!("[FAIL] {}. {name}: {detail}", i + 1);
            }
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failures, criteria.len());
    if failures == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
