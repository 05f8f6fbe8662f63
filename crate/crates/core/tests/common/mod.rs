//! Independent oracles shared by the integration suites.
#![allow(dead_code)]

use std::f64::consts::PI;

use distvp::driver::{self, LoadingSegment, RunSettings, Trajectory};
use distvp::geometry::{chain_arcs, ArcBoundary};
use distvp::{MaterialParams, MaterialState, SymTensor2};
use rand::Rng;

/// Classical uniaxial Armstrong-Frederick backstress with Voce isotropic
/// hardening and a Perzyna overstress, integrated with forward Euler on the
/// given time grid and axial strain history. Returns the axial stress at each
/// grid point.
pub fn af_voce_uniaxial(params: &MaterialParams, times: &[f64], eps11: &[f64]) -> Vec<f64> {
    let e = 9.0 * params.k * params.mu / (3.0 * params.k + params.mu);
    let (mut ep, mut x, mut r) = (0.0f64, 0.0f64, 0.0f64);
    let mut out = Vec::with_capacity(times.len());
    for i in 0..times.len() {
        let sigma = e * (eps11[i] - ep);
        out.push(sigma);
        if i + 1 == times.len() {
            break;
        }
        let dt = times[i + 1] - times[i];
        let over = (sigma - x).abs() - (params.k0 + r);
        if over <= 0.0 {
            continue;
        }
        let lambda = ((2.0f64 / 3.0).sqrt() * over / params.k0_ref).powf(params.m) / params.eta;
        let dep = (2.0f64 / 3.0).sqrt() * lambda * (sigma - x).signum() * dt;
        let dx = 1.5 * params.c_k * dep - 1.5f64.sqrt() * params.c_k * params.kappa_k * dep.abs() * x;
        let ds = (sigma - x).abs() * dep.abs() / (params.k0 + r);
        let dr = (params.gamma - params.beta * r) * ds;
        ep += dep;
        x += dx;
        r += dr;
    }
    out
}

/// Random valid arc shape with one to four arcs.
pub fn random_shape<R: Rng>(rng: &mut R) -> ArcBoundary {
    loop {
        let n = rng.random_range(1..=4);
        if n == 1 {
            let r = rng.random_range(0.55..3.0);
            let arcs = chain_arcs(&[0.0, PI], &[r]).unwrap();
            if let Ok(s) = ArcBoundary::build(&arcs) {
                return s;
            }
            continue;
        }
        let mut angles: Vec<f64> = (0..n - 1).map(|_| rng.random_range(0.1..PI - 0.1)).collect();
        angles.sort_by(f64::total_cmp);
        if angles.windows(2).any(|w| w[1] - w[0] < 0.05) {
            continue;
        }
        let mut phis = vec![0.0];
        phis.extend(angles);
        phis.push(PI);
        let mut radii: Vec<f64> = (0..n - 1).map(|_| rng.random_range(0.2..4.0)).collect();
        // The last radius closes the chain on the x-axis.
        let lift: f64 = radii.iter().enumerate().map(|(i, r)| r * (phis[i + 1].sin() - phis[i].sin())).sum();
        let last = lift / phis[n - 1].sin();
        if !(last > 0.05 && last < 20.0) {
            continue;
        }
        radii.push(last);
        let Ok(mut arcs) = chain_arcs(&phis, &radii) else { continue };
        arcs[n - 1].end[1] = 0.0;
        if let Ok(s) = ArcBoundary::build(&arcs) {
            let k = s.k_sat_pi();
            if (0.3..3.0).contains(&k) {
                return s;
            }
        }
    }
}

/// Largest distance of the boundary from the origin.
pub fn boundary_rmax(shape: &ArcBoundary) -> f64 {
    shape.boundary_points(4000).iter().map(|p| p.norm()).fold(0.0, f64::max)
}

/// Free energy from the conjugate forces of a trajectory row.
pub fn free_energy_from_forces(params: &MaterialParams, row: &driver::TrajectoryRow) -> f64 {
    let s = row.sigma;
    let dev = s.dev();
    let elastic = s.trace().powi(2) / (18.0 * params.k) + dev.dot(&dev) / (4.0 * params.mu);
    let kin = if params.c_k > 0.0 { row.x_k.dot(&row.x_k) / (2.0 * params.c_k) } else { 0.0 };
    let dist = if params.c_d > 0.0 { row.x_d.dot(&row.x_d) / (2.0 * params.c_d) } else { 0.0 };
    let iso = if params.gamma > 0.0 { row.r * row.r / (2.0 * params.gamma) } else { 0.0 };
    elastic + kin + dist + iso
}

pub fn alloy_egg() -> MaterialParams {
    MaterialParams::reference_alloy(ArcBoundary::egg())
}

pub fn run_all_rows(params: &MaterialParams, program: &[LoadingSegment]) -> Trajectory {
    driver::run(params, &MaterialState::virgin(), program, &RunSettings { dt: None, sample_every: 1 }).unwrap()
}

pub fn uniaxial_cycle(strains: &[f64], rate: f64) -> Vec<LoadingSegment> {
    let mut prev = 0.0;
    strains
        .iter()
        .map(|&target| {
            let seg = driver::uniaxial_prestrain("11", target - prev, rate).remove(0);
            prev = target;
            seg
        })
        .collect()
}

pub fn tensor_gap(a: &SymTensor2, b: &SymTensor2) -> f64 {
    (*a - *b).norm()
}
