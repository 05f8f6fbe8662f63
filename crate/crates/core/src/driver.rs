//! Loading programs on a single material point under strain, stress or mixed control.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::material::{
    self, apply_rates, compute_derived, rates_at, stable_dt, Dissipation, MaterialError,
    MaterialParams, MaterialState, DEFAULT_STRAIN_RATE,
};
use crate::tensor::SymTensor2;

/// Largest inelastic arc-length increment per step.
pub const MAX_DP_PER_STEP: f64 = 1e-5;

/// Largest stress increment per step as a fraction of the current yield stress.
pub const MAX_STRESS_FRACTION: f64 = 0.01;

/// Smallest step before a rejected step becomes an error, in seconds.
pub const DT_FLOOR: f64 = 1e-14;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DriverError {
    #[error("invalid loading program: {0}")]
    InvalidProgram(String),
    #[error("control pattern makes the elastic solve singular")]
    SingularControl,
    #[error("step rejected at t = {t} with dt = {dt}: {reason}")]
    StepRejected { t: f64, dt: f64, reason: String },
    #[error(transparent)]
    Material(#[from] MaterialError),
}

/// Control of one strain component during a segment.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Control {
    StrainRate(f64),
    StressTarget(f64),
}

/// One loading segment. Components listed in neither map are held at zero stress.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LoadingSegment {
    pub duration: f64,
    #[serde(default)]
    pub strain_rate: BTreeMap<String, f64>,
    #[serde(default)]
    pub stress: BTreeMap<String, f64>,
}

impl LoadingSegment {
    /// Per-component control in storage order.
    pub fn controls(&self) -> Result<[Control; 6], DriverError> {
        let mut out = [Control::StressTarget(0.0); 6];
        let mut seen = [false; 6];
        for (map, is_strain) in [(&self.strain_rate, true), (&self.stress, false)] {
            for (label, &v) in map {
                let i = SymTensor2::index_of(label)
                    .ok_or_else(|| DriverError::InvalidProgram(format!("unknown component {label:?}")))?;
                if seen[i] {
                    return Err(DriverError::InvalidProgram(format!("component {label} given twice")));
                }
                if !v.is_finite() {
                    return Err(DriverError::InvalidProgram(format!("component {label} is not finite")));
                }
                seen[i] = true;
                out[i] = if is_strain { Control::StrainRate(v) } else { Control::StressTarget(v) };
            }
        }
        Ok(out)
    }

    fn validate(&self) -> Result<[Control; 6], DriverError> {
        if !(self.duration.is_finite() && self.duration > 0.0) {
            return Err(DriverError::InvalidProgram(format!(
                "segment duration {} must be positive",
                self.duration
            )));
        }
        let c = self.controls()?;
        if !c.iter().any(|c| matches!(c, Control::StrainRate(_))) {
            return Err(DriverError::InvalidProgram(
                "every segment needs at least one strain-controlled component".into(),
            ));
        }
        Ok(c)
    }
}

/// Uniaxial stress ramp along component `11` or `22` to the given total strain.
pub fn uniaxial_prestrain(component: &str, strain: f64, rate: f64) -> Vec<LoadingSegment> {
    vec![LoadingSegment {
        duration: strain.abs() / rate.abs(),
        strain_rate: BTreeMap::from([(component.to_string(), rate.abs() * strain.signum())]),
        stress: BTreeMap::new(),
    }]
}

/// 2 % axial prestrain under uniaxial stress at the default rate.
pub fn axial_prestrain() -> Vec<LoadingSegment> {
    uniaxial_prestrain("11", 0.02, DEFAULT_STRAIN_RATE)
}

/// 2 % hoop prestrain under uniaxial stress at the default rate.
pub fn hoop_prestrain() -> Vec<LoadingSegment> {
    uniaxial_prestrain("22", 0.02, DEFAULT_STRAIN_RATE)
}

pub fn parse_program(text: &str) -> Result<Vec<LoadingSegment>, DriverError> {
    let program: Vec<LoadingSegment> =
        serde_json::from_str(text).map_err(|e| DriverError::InvalidProgram(e.to_string()))?;
    for seg in &program {
        seg.validate()?;
    }
    Ok(program)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunSettings {
    /// Upper bound on the step; the automatic policy may take smaller steps.
    pub dt: Option<f64>,
    /// Record every n-th step. The final state is always recorded.
    pub sample_every: usize,
}

impl Default for RunSettings {
    fn default() -> Self {
        Self { dt: None, sample_every: 1000 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrajectoryRow {
    pub t: f64,
    pub eps: SymTensor2,
    pub sigma: SymTensor2,
    pub x_k: SymTensor2,
    pub x_d: SymTensor2,
    pub r: f64,
    pub alpha: f64,
    pub theta: f64,
    pub f: f64,
    pub p: f64,
    pub s: f64,
    pub s_d: f64,
    pub lambda: f64,
    pub dissipation: Dissipation,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub rows: Vec<TrajectoryRow>,
    pub final_state: MaterialState,
    pub steps: usize,
    pub rejected_steps: usize,
}

pub const CSV_HEADER: &str = "t,eps11,eps22,eps33,eps12,eps13,eps23,sig11,sig22,sig33,sig12,sig13,sig23,p,s,s_d,alpha,R,f,diss";

impl Trajectory {
    pub fn last(&self) -> &TrajectoryRow {
        self.rows.last().expect("a trajectory has at least one row")
    }

    /// Smallest total dissipation over all rows.
    pub fn min_dissipation(&self) -> f64 {
        self.rows.iter().map(|r| r.dissipation.total).fold(f64::INFINITY, f64::min)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::with_capacity(64 + self.rows.len() * 20 * 24);
        out.push_str(CSV_HEADER);
        out.push('\n');
        for r in &self.rows {
            let values = std::iter::once(r.t)
                .chain(r.eps.c)
                .chain(r.sigma.c)
                .chain([r.p, r.s, r.s_d, r.alpha, r.r, r.f, r.dissipation.total]);
            for (i, v) in values.enumerate() {
                if i > 0 {
                    out.push(',');
                }
                write!(out, "{v:.16e}").expect("writing to a String cannot fail");
            }
            out.push('\n');
        }
        out
    }
}

/// Resolves the unknown strain components of a segment from the stress targets.
struct MixedControl {
    known: Vec<usize>,
    unknown: Vec<usize>,
    rates: [f64; 6],
    targets: [f64; 6],
    /// `C_UU^-1`
    inv_uu: DMatrix<f64>,
    /// `C_UK`
    c_uk: DMatrix<f64>,
}

fn stiffness(params: &MaterialParams) -> [[f64; 6]; 6] {
    let lame = params.lame();
    let mut c = [[0.0; 6]; 6];
    for i in 0..3 {
        c[i][..3].fill(lame);
        c[i][i] += 2.0 * params.mu;
        c[i + 3][i + 3] = 2.0 * params.mu;
    }
    c
}

impl MixedControl {
    fn new(params: &MaterialParams, controls: &[Control; 6]) -> Result<Self, DriverError> {
        let mut known = Vec::new();
        let mut unknown = Vec::new();
        let mut rates = [0.0; 6];
        let mut targets = [0.0; 6];
        for (i, c) in controls.iter().enumerate() {
            match *c {
                Control::StrainRate(r) => {
                    known.push(i);
                    rates[i] = r;
                }
                Control::StressTarget(s) => {
                    unknown.push(i);
                    targets[i] = s;
                }
            }
        }
        let c = stiffness(params);
        let c_uu = DMatrix::from_fn(unknown.len(), unknown.len(), |a, b| c[unknown[a]][unknown[b]]);
        let c_uk = DMatrix::from_fn(unknown.len(), known.len(), |a, b| c[unknown[a]][known[b]]);
        let inv_uu = if unknown.is_empty() {
            c_uu
        } else {
            let scale = c_uu.amax();
            let det = c_uu.determinant() / scale.powi(unknown.len() as i32);
            if det.is_nan() || det.abs() <= 1e-12 {
                return Err(DriverError::SingularControl);
            }
            c_uu.try_inverse().ok_or(DriverError::SingularControl)?
        };
        Ok(Self { known, unknown, rates, targets, inv_uu, c_uk })
    }

    /// Strain at segment time `tau` given the strain at the segment start.
    fn strain(&self, start: &SymTensor2, tau: f64, eps_i: &SymTensor2) -> SymTensor2 {
        let mut eps = *start;
        for &i in &self.known {
            eps.c[i] = start.c[i] + self.rates[i] * tau;
        }
        if self.unknown.is_empty() {
            return eps;
        }
        let ee_k = nalgebra::DVector::from_iterator(
            self.known.len(),
            self.known.iter().map(|&i| eps.c[i] - eps_i.c[i]),
        );
        let rhs = nalgebra::DVector::from_iterator(
            self.unknown.len(),
            self.unknown.iter().map(|&i| self.targets[i]),
        ) - &self.c_uk * ee_k;
        let ee_u = &self.inv_uu * rhs;
        for (a, &i) in self.unknown.iter().enumerate() {
            eps.c[i] = eps_i.c[i] + ee_u[a];
        }
        eps
    }

    /// Norm of the deviatoric part of the prescribed strain rate.
    fn deviatoric_rate(&self) -> f64 {
        SymTensor2::new(self.rates).dev().norm()
    }
}

fn row(t: f64, eps: SymTensor2, state: &MaterialState, d: &material::DerivedQuantities, r: &material::StateRates) -> TrajectoryRow {
    TrajectoryRow {
        t,
        eps,
        sigma: d.sigma,
        x_k: d.x_k,
        x_d: d.x_d,
        r: d.r,
        alpha: d.alpha,
        theta: d.theta,
        f: d.f,
        p: state.p,
        s: state.s,
        s_d: state.s_d,
        lambda: r.lambda,
        dissipation: r.dissipation,
    }
}

/// Integrates a loading program with forward Euler and adaptive steps.
///
/// The step is the smallest of the configured step, the time left in the
/// segment, the explicit stability bound, the step giving an inelastic
/// arc-length increment of [`MAX_DP_PER_STEP`], and the step giving a
/// deviatoric stress increment of [`MAX_STRESS_FRACTION`] of `K0 + R`.
/// Rejected steps are retried with half the step.
pub fn run(
    params: &MaterialParams,
    initial: &MaterialState,
    program: &[LoadingSegment],
    settings: &RunSettings,
) -> Result<Trajectory, DriverError> {
    if let Some(dt) = settings.dt {
        if !(dt.is_finite() && dt > 0.0) {
            return Err(DriverError::InvalidProgram(format!("dt = {dt} must be positive")));
        }
    }
    if settings.sample_every == 0 {
        return Err(DriverError::InvalidProgram("sample_every must be at least 1".into()));
    }
    if program.is_empty() {
        return Err(DriverError::InvalidProgram("program has no segments".into()));
    }
    initial.validate(params)?;
    let controls = program.iter().map(|s| s.validate()).collect::<Result<Vec<_>, _>>()?;

    let mut state = *initial;
    let mut rows = Vec::new();
    let mut t0 = 0.0;
    // A resumed state starts unloaded.
    let mut eps_start = initial.eps_i;
    let mut steps = 0usize;
    let mut rejected = 0usize;

    for (seg, ctl) in program.iter().zip(&controls) {
        let mixed = MixedControl::new(params, ctl)?;
        let dev_rate = mixed.deviatoric_rate();
        let mut tau = 0.0;
        while tau < seg.duration {
            let eps = mixed.strain(&eps_start, tau, &state.eps_i);
            let d = compute_derived(params, &state, &eps)?;
            let rates = rates_at(params, &state, &d)?;
            if steps.is_multiple_of(settings.sample_every) {
                rows.push(row(t0 + tau, eps, &state, &d, &rates));
            }

            let mut dt = settings.dt.unwrap_or(f64::INFINITY).min(stable_dt(params, &d));
            if rates.lambda > 0.0 {
                dt = dt.min(MAX_DP_PER_STEP / rates.lambda);
            }
            if dev_rate > 0.0 {
                dt = dt.min(MAX_STRESS_FRACTION * (params.k0 + d.r) / (2.0 * params.mu * dev_rate));
            }
            let remaining = seg.duration - tau;
            let mut finishes = dt >= remaining;
            dt = dt.min(remaining);
            loop {
                match apply_rates(params, &state, &d, &rates, dt) {
                    Ok(next) => {
                        state = next;
                        break;
                    }
                    Err(MaterialError::StepRejected(reason)) => {
                        rejected += 1;
                        dt *= 0.5;
                        finishes = false;
                        if dt < DT_FLOOR {
                            return Err(DriverError::StepRejected { t: t0 + tau, dt, reason });
                        }
                    }
                    Err(e) => return Err(e.into()),
                }
            }
            tau = if finishes { seg.duration } else { tau + dt };
            steps += 1;
        }
        eps_start = mixed.strain(&eps_start, seg.duration, &state.eps_i);
        t0 += seg.duration;
    }

    // Final state, strain resolved with the last segment's control.
    let last_controls = controls.last().expect("program is not empty");
    let eps_final = MixedControl::new(params, last_controls)?.strain(&eps_start, 0.0, &state.eps_i);
    let d = compute_derived(params, &state, &eps_final)?;
    let rates = rates_at(params, &state, &d)?;
    if rows.last().is_none_or(|r| r.t < t0) {
        rows.push(row(t0, eps_final, &state, &d, &rates));
    }
    Ok(Trajectory { rows, final_state: state, steps, rejected_steps: rejected })
}
