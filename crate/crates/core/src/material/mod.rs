//! Small-strain viscoplasticity with isotropic, kinematic and distortional hardening.
//!
//! Stresses follow from a free energy split into an elastic part, two
//! microstructural parts driving the backstresses `X_k` and `X_d`, and an
//! isotropic part driving `R`. The yield surface is the interpolated arc shape
//! from [`crate::geometry`], oriented along `X_d`, scaled by `sqrt(2/3)(K0 + R)`
//! and centred at `X_k + X_d`. Inelastic flow follows a Perzyna overstress law.
//!
//! Identification hints: `‖X_k‖` and `‖X_d‖` saturate at `1/kappa_k` and
//! `1/kappa_d`, reached over an inelastic arc-length of order `(c_k kappa_k)^-1`
//! and `(c_d kappa_d)^-1`. `R` saturates at `gamma / beta`.

mod params;

pub use params::{
    load_shape, FlowRule, MaterialParams, ParamsFile, BUILTIN_EGG, BUILTIN_UNIT_DISC,
    DEFAULT_STRAIN_RATE, ETA_REG, K0_REF,
};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{GeometryError, Vec2};
use crate::tensor::SymTensor2;

/// Slack allowed on `alpha = kappa_d ‖X_d‖` before a state counts as corrupt.
pub const ALPHA_CORRUPT_TOL: f64 = 1e-9;

/// Slack on `alpha` after an explicit step before the step is rejected.
pub const ALPHA_STEP_TOL: f64 = 1e-6;

/// Below this `sin(theta)` the tangential part of the normal is dropped.
pub const SIN_THETA_CUTOFF: f64 = 1e-8;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MaterialError {
    #[error("invalid material parameters: {0}")]
    InvalidParams(String),
    #[error("invalid state: {0}")]
    InvalidState(String),
    #[error("state corrupt: alpha = {0} exceeds 1")]
    StateCorrupt(f64),
    #[error("effective stress deviator is zero; the flow direction is undefined")]
    ZeroEffectiveStress,
    #[error("explicit step rejected: {0}")]
    StepRejected(String),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

/// Strain-like internal variables.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct MaterialState {
    pub eps_i: SymTensor2,
    pub eps_ki: SymTensor2,
    pub eps_di: SymTensor2,
    pub s: f64,
    pub s_d: f64,
    pub p: f64,
}

impl MaterialState {
    pub fn virgin() -> Self {
        Self::default()
    }

    /// Checks the invariants a state must satisfy before integration starts.
    pub fn validate(&self, params: &MaterialParams) -> Result<(), MaterialError> {
        let scalars_ok = [self.s, self.s_d, self.p].iter().all(|v| v.is_finite());
        let tensors_ok = [self.eps_i, self.eps_ki, self.eps_di].iter().all(|t| t.is_finite());
        if !(scalars_ok && tensors_ok) {
            return Err(MaterialError::InvalidState("non-finite entries".into()));
        }
        for (name, t) in [("eps_i", self.eps_i), ("eps_ki", self.eps_ki), ("eps_di", self.eps_di)] {
            if t.trace().abs() > 1e-12 * (1.0 + t.norm()) {
                return Err(MaterialError::InvalidState(format!("{name} is not traceless")));
            }
        }
        if self.p < 0.0 || self.s_d < 0.0 || self.s < self.s_d {
            return Err(MaterialError::InvalidState("require s >= s_d >= 0 and p >= 0".into()));
        }
        hardening(params, self)?;
        Ok(())
    }
}

/// A state tagged with the hash of the parameters that produced it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StateSnapshot {
    pub state: MaterialState,
    pub params_hash: String,
}

impl StateSnapshot {
    pub fn new(state: MaterialState, params: &MaterialParams) -> Self {
        Self { state, params_hash: params.hash() }
    }

    /// The state, provided it belongs to `params` and is valid for them.
    pub fn state_for(&self, params: &MaterialParams) -> Result<MaterialState, MaterialError> {
        let expected = params.hash();
        if self.params_hash != expected {
            return Err(MaterialError::InvalidState(format!(
                "snapshot was produced with parameters {} but {} are loaded",
                self.params_hash, expected
            )));
        }
        self.state.validate(params)?;
        Ok(self.state)
    }
}

/// Hardening variables conjugate to the internal state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Hardening {
    pub x_k: SymTensor2,
    pub x_d: SymTensor2,
    pub r: f64,
    pub alpha: f64,
}

/// Everything the flow rule needs at one stress point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DerivedQuantities {
    pub sigma: SymTensor2,
    pub x_k: SymTensor2,
    pub x_d: SymTensor2,
    pub r: f64,
    pub sigma_eff_dev: SymTensor2,
    pub theta: f64,
    pub alpha: f64,
    /// Overstress in MPa.
    pub f: f64,
    /// Non-dimensional overstress.
    pub f_bar: f64,
    pub y2d: Vec2,
}

/// The four terms of the internal dissipation and their sum.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Dissipation {
    /// `sigma_eff : d eps_i - R d s`
    pub inelastic: f64,
    /// `X_k : d eps_ki`
    pub kinematic: f64,
    /// `X_d : d eps_di`
    pub distortional: f64,
    /// `R d s_d`
    pub isotropic: f64,
    pub total: f64,
}

impl Dissipation {
    pub fn terms(&self) -> [f64; 4] {
        [self.inelastic, self.kinematic, self.distortional, self.isotropic]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct StateRates {
    pub d_eps_i: SymTensor2,
    pub d_eps_ki: SymTensor2,
    pub d_eps_di: SymTensor2,
    pub d_s: f64,
    pub d_s_d: f64,
    pub d_p: f64,
    pub lambda: f64,
    pub dissipation: Dissipation,
}

/// Elastic stress for a given elastic strain.
pub fn elastic_stress(params: &MaterialParams, eps_e: &SymTensor2) -> SymTensor2 {
    params.k * eps_e.trace() * SymTensor2::IDENTITY + 2.0 * params.mu * eps_e.dev()
}

/// Inverse of [`elastic_stress`].
pub fn elastic_strain(params: &MaterialParams, sigma: &SymTensor2) -> SymTensor2 {
    sigma.trace() / (9.0 * params.k) * SymTensor2::IDENTITY + sigma.dev() * (0.5 / params.mu)
}

pub fn hardening(params: &MaterialParams, state: &MaterialState) -> Result<Hardening, MaterialError> {
    let x_k = params.c_k * (state.eps_i - state.eps_ki).dev();
    let x_d = params.c_d * (state.eps_i - state.eps_di).dev();
    let r = params.gamma * (state.s - state.s_d);
    let alpha = params.kappa_d * x_d.norm();
    if alpha.is_nan() || alpha > 1.0 + ALPHA_CORRUPT_TOL {
        return Err(MaterialError::StateCorrupt(alpha));
    }
    Ok(Hardening { x_k, x_d, r, alpha: alpha.min(1.0) })
}

/// Angle between the effective stress deviator and `X_d`, in `[0, pi]`,
/// and the unit tangential direction when it is defined.
fn angle_to_axis(sigma_eff_dev: &SymTensor2, x_d: &SymTensor2) -> (f64, Option<SymTensor2>) {
    let ns = sigma_eff_dev.norm();
    let nx = x_d.norm();
    if ns == 0.0 || nx == 0.0 {
        return (0.0, None);
    }
    let r_eff = *sigma_eff_dev * (1.0 / ns);
    let along = x_d.dot(&r_eff);
    let tangential = *x_d - along * r_eff;
    let nt = tangential.norm();
    let theta = nt.atan2(along);
    let dir = (nt > 0.0).then(|| tangential * (1.0 / nt));
    (theta, dir)
}

/// Overstress and related quantities at stress `sigma` with frozen hardening.
pub fn derived_at_stress(
    params: &MaterialParams,
    h: &Hardening,
    sigma: SymTensor2,
) -> Result<DerivedQuantities, MaterialError> {
    let sigma_eff_dev = sigma.dev() - h.x_k - h.x_d;
    let (theta, _) = angle_to_axis(&sigma_eff_dev, &h.x_d);
    let scale = (2.0f64 / 3.0).sqrt() * (params.k0 + h.r);
    let y2d = sigma_eff_dev.norm() / scale * Vec2::new(theta.cos(), theta.sin());
    let f_bar = params.shape.overstress_nd(h.alpha, y2d)?;
    Ok(DerivedQuantities {
        sigma,
        x_k: h.x_k,
        x_d: h.x_d,
        r: h.r,
        sigma_eff_dev,
        theta,
        alpha: h.alpha,
        f: scale * f_bar,
        f_bar,
        y2d,
    })
}

pub fn compute_derived(
    params: &MaterialParams,
    state: &MaterialState,
    eps: &SymTensor2,
) -> Result<DerivedQuantities, MaterialError> {
    let h = hardening(params, state)?;
    let sigma = elastic_stress(params, &(*eps - state.eps_i));
    derived_at_stress(params, &h, sigma)
}

/// Unit, traceless direction of inelastic flow.
pub fn flow_direction(params: &MaterialParams, d: &DerivedQuantities) -> Result<SymTensor2, MaterialError> {
    let ns = d.sigma_eff_dev.norm();
    if ns == 0.0 {
        return Err(MaterialError::ZeroEffectiveStress);
    }
    let r_eff = d.sigma_eff_dev * (1.0 / ns);
    if params.flow_rule == FlowRule::Radial {
        return Ok(r_eff);
    }
    let (theta, tangent) = angle_to_axis(&d.sigma_eff_dev, &d.x_d);
    let tangent = match tangent {
        Some(t) if theta.sin() >= SIN_THETA_CUTOFF => t,
        _ => return Ok(r_eff),
    };
    let n = params.shape.outward_normal(d.alpha, d.y2d)?;
    let (c, s) = (theta.cos(), theta.sin());
    let radial = n.x * c + n.y * s;
    let tangential = n.x * s - n.y * c;
    Ok(radial * r_eff + tangential * tangent)
}

pub fn dissipation_rate(d: &DerivedQuantities, rates: &StateRates) -> Dissipation {
    let sigma_eff = d.sigma - d.x_k - d.x_d;
    let inelastic = sigma_eff.dot(&rates.d_eps_i) - d.r * rates.d_s;
    let kinematic = d.x_k.dot(&rates.d_eps_ki);
    let distortional = d.x_d.dot(&rates.d_eps_di);
    let isotropic = d.r * rates.d_s_d;
    Dissipation {
        inelastic,
        kinematic,
        distortional,
        isotropic,
        total: inelastic + kinematic + distortional + isotropic,
    }
}

/// Rates of all internal variables at a derived point.
pub fn rates_at(
    params: &MaterialParams,
    state: &MaterialState,
    d: &DerivedQuantities,
) -> Result<StateRates, MaterialError> {
    if d.f <= 0.0 {
        return Ok(StateRates::default());
    }
    let lambda = (d.f / params.k0_ref).powf(params.m) / params.eta;
    let n = flow_direction(params, d)?;
    let d_eps_i = lambda * n;
    let d_s = d.sigma_eff_dev.dot(&d_eps_i) / (params.k0 + d.r);
    let mut rates = StateRates {
        d_eps_i,
        d_eps_ki: (lambda * params.kappa_k) * d.x_k,
        d_eps_di: (lambda * params.kappa_d) * d.x_d,
        d_s,
        d_s_d: params.beta * d_s * (state.s - state.s_d),
        d_p: lambda,
        lambda,
        dissipation: Dissipation::default(),
    };
    rates.dissipation = dissipation_rate(d, &rates);
    Ok(rates)
}

pub fn compute_rates(
    params: &MaterialParams,
    state: &MaterialState,
    eps: &SymTensor2,
) -> Result<StateRates, MaterialError> {
    let d = compute_derived(params, state, eps)?;
    rates_at(params, state, &d)
}

/// Helmholtz free energy per unit volume.
pub fn free_energy(params: &MaterialParams, state: &MaterialState, eps: &SymTensor2) -> f64 {
    let eps_e = *eps - state.eps_i;
    let tr = eps_e.trace();
    let ek = (state.eps_i - state.eps_ki).dev();
    let ed = (state.eps_i - state.eps_di).dev();
    let se = state.s - state.s_d;
    0.5 * params.k * tr * tr
        + params.mu * eps_e.dev().dot(&eps_e.dev())
        + 0.5 * params.c_k * ek.dot(&ek)
        + 0.5 * params.c_d * ed.dot(&ed)
        + 0.5 * params.gamma * se * se
}

/// Result of one explicit step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepOutcome {
    pub state: MaterialState,
    pub derived: DerivedQuantities,
    pub rates: StateRates,
}

/// Forward-Euler update from rates evaluated at `(state, eps)`.
pub fn advance(
    params: &MaterialParams,
    state: &MaterialState,
    eps: &SymTensor2,
    dt: f64,
) -> Result<StepOutcome, MaterialError> {
    let derived = compute_derived(params, state, eps)?;
    let rates = rates_at(params, state, &derived)?;
    let state = apply_rates(params, state, &derived, &rates, dt)?;
    Ok(StepOutcome { state, derived, rates })
}

/// Applies precomputed rates over `dt` and checks the result.
pub fn apply_rates(
    params: &MaterialParams,
    state: &MaterialState,
    derived: &DerivedQuantities,
    rates: &StateRates,
    dt: f64,
) -> Result<MaterialState, MaterialError> {
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(MaterialError::StepRejected(format!("dt = {dt} must be positive")));
    }
    if rates.lambda == 0.0 {
        return Ok(*state);
    }
    let floor = -1e-10 * params.k0 * rates.lambda;
    if rates.dissipation.total < floor {
        return Err(MaterialError::StepRejected(format!(
            "dissipation {:e} below {floor:e}",
            rates.dissipation.total
        )));
    }
    let next = MaterialState {
        eps_i: (state.eps_i + dt * rates.d_eps_i).dev(),
        eps_ki: (state.eps_ki + dt * rates.d_eps_ki).dev(),
        eps_di: (state.eps_di + dt * rates.d_eps_di).dev(),
        s: state.s + dt * rates.d_s,
        s_d: state.s_d + dt * rates.d_s_d,
        p: state.p + dt * rates.d_p,
    };
    let alpha = params.kappa_d * (params.c_d * (next.eps_i - next.eps_di).dev()).norm();
    if alpha > 1.0 + ALPHA_STEP_TOL {
        return Err(MaterialError::StepRejected(format!(
            "alpha would reach {alpha} from {}",
            derived.alpha
        )));
    }
    Ok(next)
}

/// Forward-Euler step with the strain history given as a function of time.
pub fn step_explicit<F>(
    params: &MaterialParams,
    state: &MaterialState,
    eps_fn: F,
    t: f64,
    dt: f64,
) -> Result<MaterialState, MaterialError>
where
    F: Fn(f64) -> SymTensor2,
{
    advance(params, state, &eps_fn(t), dt).map(|o| o.state)
}

/// Largest step for which the explicit update of the overstress stays stable,
/// with a safety factor of 1/2. Infinite in the elastic range.
pub fn stable_dt(params: &MaterialParams, d: &DerivedQuantities) -> f64 {
    if d.f <= 0.0 {
        return f64::INFINITY;
    }
    let slope = params.m * (d.f / params.k0_ref).powf(params.m - 1.0) / (params.eta * params.k0_ref);
    1.0 / (params.inelastic_stiffness() * slope)
}
