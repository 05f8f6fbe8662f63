//! Randomized self-checks: flow direction against finite differences, and the
//! sign of every dissipation term along random loading programs.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::driver::{self, DriverError, LoadingSegment, RunSettings};
use crate::geometry::ArcBoundary;
use crate::material::{
    derived_at_stress, flow_direction, FlowRule, Hardening, MaterialError, MaterialParams, MaterialState,
};
use crate::tensor::{SymTensor2, COMPONENTS};

/// Random traceless tensor of unit norm.
pub fn random_unit_deviator<R: Rng>(rng: &mut R) -> SymTensor2 {
    loop {
        let t = SymTensor2::new(std::array::from_fn(|_| rng.random_range(-1.0..1.0))).dev();
        let n = t.norm();
        if n > 1e-3 {
            return t * (1.0 / n);
        }
    }
}

/// Unit deviator orthogonal to the unit deviator `u`.
fn orthogonal_unit_deviator<R: Rng>(rng: &mut R, u: &SymTensor2) -> SymTensor2 {
    loop {
        let t = random_unit_deviator(rng);
        let t = t - t.dot(u) * *u;
        let n = t.norm();
        if n > 1e-3 {
            return t * (1.0 / n);
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GradSample {
    pub sigma: SymTensor2,
    pub x_k: SymTensor2,
    pub x_d: SymTensor2,
    pub r: f64,
    pub alpha: f64,
    pub theta: f64,
    pub f: f64,
    pub rel_error: f64,
    pub norm_defect: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GradcheckReport {
    pub samples: usize,
    pub max_rel_error: f64,
    pub max_norm_defect: f64,
    pub min_theta: f64,
    pub max_theta: f64,
    pub worst: Option<GradSample>,
}

impl GradcheckReport {
    pub fn passes(&self, tol: f64) -> bool {
        self.max_rel_error < tol && self.max_norm_defect < 1e-10
    }
}

/// Random plastic point: hardening, then a stress at prescribed angle and
/// non-dimensional overstress. A fifth of the angles lie within 1e-3 of 0 and
/// another fifth within 1e-3 of pi.
fn random_plastic_point<R: Rng>(params: &MaterialParams, rng: &mut R) -> Result<(Hardening, SymTensor2), MaterialError> {
    let axis = random_unit_deviator(rng);
    let alpha: f64 = rng.random_range(0.0..=1.0);
    let x_d = if params.kappa_d > 0.0 { axis * (alpha / params.kappa_d) } else { SymTensor2::ZERO };
    let alpha = if params.kappa_d > 0.0 { alpha } else { 0.0 };
    let x_k_max = if params.kappa_k > 0.0 { 1.0 / params.kappa_k } else { 10.0 * params.k0 };
    let x_k = random_unit_deviator(rng) * rng.random_range(0.0..x_k_max);
    let r_max = if params.beta > 0.0 { params.gamma / params.beta } else { params.k0 };
    let r = rng.random_range(0.0..=r_max);
    let theta = match rng.random_range(0..5) {
        0 => rng.random_range(0.0..1e-3),
        1 => PI - rng.random_range(0.0..1e-3),
        _ => rng.random_range(0.0..PI),
    };
    let f_bar = rng.random_range(0.02..0.5);
    let radius = params.shape.level_radius(theta, alpha, f_bar)?;
    let tangent = orthogonal_unit_deviator(rng, &axis);
    let scale = (2.0f64 / 3.0).sqrt() * (params.k0 + r);
    let sigma_eff = (scale * radius) * (theta.cos() * axis + theta.sin() * tangent);
    let pressure = rng.random_range(-100.0..100.0);
    let sigma = sigma_eff + x_k + x_d + pressure * SymTensor2::IDENTITY;
    Ok((Hardening { x_k, x_d, r, alpha }, sigma))
}

/// Compares the analytic flow direction with central differences of `f`
/// over `samples` random plastic states.
pub fn gradcheck(params: &MaterialParams, samples: usize, seed: u64) -> Result<GradcheckReport, MaterialError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let points = (0..samples)
        .map(|_| random_plastic_point(params, &mut rng))
        .collect::<Result<Vec<_>, _>>()?;
    let results = points
        .par_iter()
        .map(|(h, sigma)| -> Result<GradSample, MaterialError> {
            let d = derived_at_stress(params, h, *sigma)?;
            let n = flow_direction(params, &d)?;
            let step = 1e-6 * (params.k0 + h.r);
            let f_at = |s: SymTensor2| derived_at_stress(params, h, s).map(|d| d.f);
            let mut fd = [0.0; 6];
            for (k, slot) in fd.iter_mut().enumerate() {
                // Shear basis tensors carry 1/2 on both off-diagonal entries, so the
                // directional derivative equals the tensor component itself.
                let e = SymTensor2::unit(k, if k < 3 { 1.0 } else { 0.5 });
                *slot = (f_at(*sigma + step * e)? - f_at(*sigma - step * e)?) / (2.0 * step);
            }
            let fd = SymTensor2::new(fd);
            let analytic = match params.flow_rule {
                FlowRule::Normality => n,
                FlowRule::Radial => {
                    let mut p = params.clone();
                    p.flow_rule = FlowRule::Normality;
                    flow_direction(&p, &d)?
                }
            };
            Ok(GradSample {
                sigma: *sigma,
                x_k: h.x_k,
                x_d: h.x_d,
                r: h.r,
                alpha: h.alpha,
                theta: d.theta,
                f: d.f,
                rel_error: fd.max_abs_diff(&analytic) / analytic.c.iter().fold(0.0, |m: f64, v| m.max(v.abs())),
                norm_defect: (n.norm() - 1.0).abs(),
            })
        })
        .collect::<Result<Vec<_>, _>>()?;

    let worst = results
        .iter()
        .copied()
        .max_by(|a, b| a.rel_error.total_cmp(&b.rel_error));
    Ok(GradcheckReport {
        samples,
        max_rel_error: worst.map_or(0.0, |w| w.rel_error),
        max_norm_defect: results.iter().map(|s| s.norm_defect).fold(0.0, f64::max),
        min_theta: results.iter().map(|s| s.theta).fold(f64::INFINITY, f64::min),
        max_theta: results.iter().map(|s| s.theta).fold(f64::NEG_INFINITY, f64::max),
        worst,
    })
}

/// Settings of the randomized dissipation audit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AuditConfig {
    pub programs: usize,
    pub seed: u64,
    /// Viscosity used for the audit, chosen so that the random strain rates
    /// produce overstresses comparable to the yield stress.
    pub eta: f64,
    /// Relative tolerance on each term, scaled by `K0 * lambda`.
    pub tol: f64,
}

impl Default for AuditConfig {
    fn default() -> Self {
        Self { programs: 10_000, seed: 1, eta: 1.0, tol: 1e-12 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AuditViolation {
    pub program: usize,
    pub t: f64,
    pub lambda: f64,
    pub terms: [f64; 4],
    pub total: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AuditReport {
    pub programs: usize,
    pub steps: usize,
    pub plastic_steps: usize,
    /// Smallest value of each term divided by `K0 * lambda` over plastic steps.
    pub min_scaled_terms: [f64; 4],
    pub min_scaled_total: f64,
    pub violations: Vec<AuditViolation>,
}

impl AuditReport {
    pub fn passes(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Random non-proportional strain program: 2 to 4 segments, each a straight
/// line in strain space of length U(5e-4, 3e-3) at a rate of order 1/s.
pub fn random_program<R: Rng>(rng: &mut R) -> Vec<LoadingSegment> {
    let n = rng.random_range(2..=4);
    (0..n)
        .map(|_| {
            let dir = SymTensor2::new(std::array::from_fn(|_| rng.random_range(-1.0..1.0)));
            let dir = dir * (1.0 / dir.norm());
            let amplitude = rng.random_range(5e-4..3e-3);
            let rate = rng.random_range(0.3..3.0);
            let duration = amplitude / rate;
            let strain_rate: BTreeMap<String, f64> = COMPONENTS
                .iter()
                .zip(dir.c)
                .map(|(l, v)| (l.to_string(), v * rate))
                .collect();
            LoadingSegment { duration, strain_rate, stress: BTreeMap::new() }
        })
        .collect()
}

/// Runs `config.programs` random strain programs, cycling through the egg and
/// the disc shape and both flow rules, and checks every step's dissipation.
pub fn thermo_audit(base: &MaterialParams, config: &AuditConfig) -> Result<AuditReport, DriverError> {
    let variants: Vec<MaterialParams> = [ArcBoundary::egg(), ArcBoundary::unit_half_disc()]
        .into_iter()
        .flat_map(|shape| {
            [FlowRule::Normality, FlowRule::Radial].map(|rule| MaterialParams {
                shape: shape.clone(),
                flow_rule: rule,
                eta: config.eta,
                ..base.clone()
            })
        })
        .collect();
    let results = (0..config.programs)
        .into_par_iter()
        .map(|i| -> Result<AuditReport, DriverError> {
            let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
            rng.set_stream(i as u64);
            let program = random_program(&mut rng);
            let params = &variants[i % variants.len()];
            let traj = driver::run(params, &MaterialState::virgin(), &program, &RunSettings { dt: None, sample_every: 1 })?;
            let mut report = AuditReport {
                programs: 1,
                steps: traj.steps,
                plastic_steps: 0,
                min_scaled_terms: [f64::INFINITY; 4],
                min_scaled_total: f64::INFINITY,
                violations: Vec::new(),
            };
            for row in traj.rows.iter().filter(|r| r.lambda > 0.0) {
                report.plastic_steps += 1;
                let scale = params.k0 * row.lambda;
                let terms = row.dissipation.terms();
                for (m, t) in report.min_scaled_terms.iter_mut().zip(terms) {
                    *m = m.min(t / scale);
                }
                report.min_scaled_total = report.min_scaled_total.min(row.dissipation.total / scale);
                let floor = -config.tol * scale;
                if row.dissipation.total < floor || terms.iter().any(|&t| t < floor) {
                    report.violations.push(AuditViolation {
                        program: i,
                        t: row.t,
                        lambda: row.lambda,
                        terms,
                        total: row.dissipation.total,
                    });
                }
            }
            Ok(report)
        })
        .collect::<Result<Vec<_>, _>>()?;

    let mut total = AuditReport {
        programs: 0,
        steps: 0,
        plastic_steps: 0,
        min_scaled_terms: [f64::INFINITY; 4],
        min_scaled_total: f64::INFINITY,
        violations: Vec::new(),
    };
    for r in results {
        total.programs += r.programs;
        total.steps += r.steps;
        total.plastic_steps += r.plastic_steps;
        for (m, v) in total.min_scaled_terms.iter_mut().zip(r.min_scaled_terms) {
            *m = m.min(v);
        }
        total.min_scaled_total = total.min_scaled_total.min(r.min_scaled_total);
        total.violations.extend(r.violations);
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn circle_gradient_is_radial_and_exact() {
        let p = MaterialParams::reference_alloy(ArcBoundary::unit_half_disc());
        let r = gradcheck(&p, 100, 3).unwrap();
        assert!(r.passes(1e-6), "{r:?}");
    }

    #[test]
    fn egg_gradient_small_run() {
        let p = MaterialParams::reference_alloy(ArcBoundary::egg());
        let r = gradcheck(&p, 200, 11).unwrap();
        assert!(r.passes(1e-5), "{r:?}");
        assert!(r.min_theta < 1e-3 && r.max_theta > PI - 1e-3);
    }

    #[test]
    fn gradcheck_is_deterministic() {
        let p = MaterialParams::reference_alloy(ArcBoundary::egg());
        assert_eq!(gradcheck(&p, 20, 5).unwrap(), gradcheck(&p, 20, 5).unwrap());
    }

    #[test]
    fn small_audit() {
        let p = MaterialParams::reference_alloy(ArcBoundary::egg());
        let r = thermo_audit(&p, &AuditConfig { programs: 16, ..AuditConfig::default() }).unwrap();
        assert!(r.passes(), "{:?}", r.violations.first());
        assert!(r.plastic_steps > 0);
        assert_eq!(r.programs, 16);
    }

    #[test]
    fn random_programs_are_reproducible() {
        let a = random_program(&mut ChaCha8Rng::seed_from_u64(9));
        let b = random_program(&mut ChaCha8Rng::seed_from_u64(9));
        assert_eq!(a, b);
        assert!((2..=4).contains(&a.len()));
    }
}
