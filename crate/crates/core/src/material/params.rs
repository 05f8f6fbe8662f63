use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::MaterialError;
use crate::geometry::{ArcBoundary, ShapeFile};

/// Viscosity substituted for `eta = 0`, in seconds.
///
/// The integrator is explicit, so its step is bounded by roughly
/// `eta * k0 / (2 mu + c_k + c_d + gamma)`. Together with the default strain rate
/// of 1e-4 1/s this value keeps `f / (K0 + R)` near 3e-4 while a 2 % prestrain
/// still finishes in well under a million steps.
pub const ETA_REG: f64 = 20.0;

/// Strain rate used by the built-in loading programs, 1/s.
pub const DEFAULT_STRAIN_RATE: f64 = 1e-4;

/// Reference stress of the Perzyna rule, MPa.
pub const K0_REF: f64 = 1.0;

/// Built-in shape names accepted in `shape_file`.
pub const BUILTIN_EGG: &str = "builtin:egg";
pub const BUILTIN_UNIT_DISC: &str = "builtin:unit_disc";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
pub enum FlowRule {
    #[default]
    #[serde(alias = "normality")]
    Normality,
    #[serde(alias = "radial")]
    Radial,
}

/// Material parameters in MPa, seconds and their products.
#[derive(Debug, Clone, PartialEq)]
pub struct MaterialParams {
    pub k: f64,
    pub mu: f64,
    pub c_k: f64,
    pub c_d: f64,
    pub gamma: f64,
    pub k0: f64,
    pub m: f64,
    pub eta: f64,
    pub kappa_k: f64,
    pub kappa_d: f64,
    pub beta: f64,
    pub k0_ref: f64,
    pub rho: f64,
    pub shape: ArcBoundary,
    pub flow_rule: FlowRule,
}

/// On-disk parameter file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParamsFile {
    pub k: f64,
    pub mu: f64,
    pub c_k: f64,
    pub c_d: f64,
    pub gamma: f64,
    #[serde(rename = "K0")]
    pub k0: f64,
    pub m: f64,
    pub eta: f64,
    pub kappa_k: f64,
    pub kappa_d: f64,
    pub beta: f64,
    pub shape_file: String,
    #[serde(default)]
    pub flow_rule: FlowRule,
}

impl MaterialParams {
    /// Aluminium alloy parameter set with the regularized viscosity.
    pub fn reference_alloy(shape: ArcBoundary) -> Self {
        Self {
            k: 69_000.0,
            mu: 26_000.0,
            c_k: 1_010.0,
            c_d: 5_000.0,
            gamma: 245.0,
            k0: 7.4,
            m: 1.0,
            eta: ETA_REG,
            kappa_k: 0.02,
            kappa_d: 0.1,
            beta: 35.0,
            k0_ref: K0_REF,
            rho: 1.0,
            shape,
            flow_rule: FlowRule::Normality,
        }
    }

    pub fn reference_alloy_file() -> ParamsFile {
        ParamsFile {
            k: 69_000.0,
            mu: 26_000.0,
            c_k: 1_010.0,
            c_d: 5_000.0,
            gamma: 245.0,
            k0: 7.4,
            m: 1.0,
            eta: 0.0,
            kappa_k: 0.02,
            kappa_d: 0.1,
            beta: 35.0,
            shape_file: BUILTIN_EGG.into(),
            flow_rule: FlowRule::Normality,
        }
    }

    /// Builds validated parameters from a file record. Relative shape paths
    /// are resolved against `base_dir`. `eta = 0` is replaced by [`ETA_REG`].
    pub fn from_file(file: &ParamsFile, base_dir: Option<&Path>) -> Result<Self, MaterialError> {
        let shape = load_shape(&file.shape_file, base_dir)?;
        let mut eta = file.eta;
        if eta == 0.0 {
            log::warn!("eta = 0 replaced by the viscous regularization eta = {ETA_REG} s");
            eta = ETA_REG;
        }
        let params = Self {
            k: file.k,
            mu: file.mu,
            c_k: file.c_k,
            c_d: file.c_d,
            gamma: file.gamma,
            k0: file.k0,
            m: file.m,
            eta,
            kappa_k: file.kappa_k,
            kappa_d: file.kappa_d,
            beta: file.beta,
            k0_ref: K0_REF,
            rho: 1.0,
            shape,
            flow_rule: file.flow_rule,
        };
        params.validate()?;
        Ok(params)
    }

    pub fn from_json(text: &str, base_dir: Option<&Path>) -> Result<Self, MaterialError> {
        let file: ParamsFile =
            serde_json::from_str(text).map_err(|e| MaterialError::InvalidParams(e.to_string()))?;
        Self::from_file(&file, base_dir)
    }

    pub fn load(path: &Path) -> Result<Self, MaterialError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| MaterialError::InvalidParams(format!("{}: {e}", path.display())))?;
        Self::from_json(&text, path.parent())
    }

    pub fn validate(&self) -> Result<(), MaterialError> {
        let named = [
            ("k", self.k),
            ("mu", self.mu),
            ("c_k", self.c_k),
            ("c_d", self.c_d),
            ("gamma", self.gamma),
            ("kappa_k", self.kappa_k),
            ("kappa_d", self.kappa_d),
            ("beta", self.beta),
        ];
        for (name, v) in named {
            if !(v.is_finite() && v >= 0.0) {
                return Err(MaterialError::InvalidParams(format!("{name} = {v} must be >= 0")));
            }
        }
        if !(self.mu > 0.0 && self.k > 0.0) {
            return Err(MaterialError::InvalidParams("k and mu must be positive".into()));
        }
        if !(self.k0.is_finite() && self.k0 > 0.0) {
            return Err(MaterialError::InvalidParams(format!("K0 = {} must be > 0", self.k0)));
        }
        if !(self.m.is_finite() && self.m >= 1.0) {
            return Err(MaterialError::InvalidParams(format!("m = {} must be >= 1", self.m)));
        }
        if !(self.eta.is_finite() && self.eta > 0.0) {
            return Err(MaterialError::InvalidParams(format!("eta = {} must be > 0", self.eta)));
        }
        if self.c_d > 0.0 && self.kappa_d == 0.0 {
            return Err(MaterialError::InvalidParams(
                "kappa_d = 0 leaves the distortion parameter unbounded".into(),
            ));
        }
        Ok(())
    }

    /// Young's modulus.
    pub fn young(&self) -> f64 {
        9.0 * self.k * self.mu / (3.0 * self.k + self.mu)
    }

    /// Lamé's first parameter.
    pub fn lame(&self) -> f64 {
        self.k - 2.0 * self.mu / 3.0
    }

    /// Sum of the moduli acting on the inelastic strain: the stiffness that
    /// limits the explicit step.
    pub fn inelastic_stiffness(&self) -> f64 {
        2.0 * self.mu + self.c_k + self.c_d + self.gamma
    }

    /// SHA-256 of the parameter values and the shape, used to tie state
    /// snapshots to the parameters that produced them.
    pub fn hash(&self) -> String {
        #[derive(Serialize)]
        struct Canonical<'a> {
            values: [f64; 13],
            flow_rule: FlowRule,
            shape: &'a ShapeFile,
        }
        let shape = self.shape.to_shape_file();
        let canonical = Canonical {
            values: [
                self.k, self.mu, self.c_k, self.c_d, self.gamma, self.k0, self.m, self.eta,
                self.kappa_k, self.kappa_d, self.beta, self.k0_ref, self.rho,
            ],
            flow_rule: self.flow_rule,
            shape: &shape,
        };
        let bytes = serde_json::to_vec(&canonical).expect("plain data serializes");
        hex::encode(Sha256::digest(&bytes))
    }
}

/// Resolves a shape reference: a built-in name or a JSON file path.
pub fn load_shape(reference: &str, base_dir: Option<&Path>) -> Result<ArcBoundary, MaterialError> {
    match reference {
        BUILTIN_EGG => Ok(ArcBoundary::egg()),
        BUILTIN_UNIT_DISC => Ok(ArcBoundary::unit_half_disc()),
        path => {
            let mut p = PathBuf::from(path);
            if p.is_relative() {
                if let Some(dir) = base_dir {
                    p = dir.join(p);
                }
            }
            let text = std::fs::read_to_string(&p)
                .map_err(|e| MaterialError::InvalidParams(format!("{}: {e}", p.display())))?;
            Ok(ArcBoundary::from_json(&text)?)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reference_alloy_file_round_trips() {
        let file = MaterialParams::reference_alloy_file();
        let text = serde_json::to_string(&file).unwrap();
        assert!(text.contains("\"K0\":7.4"));
        let params = MaterialParams::from_json(&text, None).unwrap();
        assert_eq!(params, MaterialParams::reference_alloy(ArcBoundary::egg()));
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let mut v = serde_json::to_value(MaterialParams::reference_alloy_file()).unwrap();
        v["K_0"] = 7.4.into();
        let err = MaterialParams::from_json(&v.to_string(), None).unwrap_err();
        assert!(matches!(err, MaterialError::InvalidParams(_)));
    }

    #[test]
    fn bad_values_are_rejected() {
        let mut file = MaterialParams::reference_alloy_file();
        file.m = 0.5;
        assert!(MaterialParams::from_file(&file, None).is_err());
        let mut file = MaterialParams::reference_alloy_file();
        file.k0 = 0.0;
        assert!(MaterialParams::from_file(&file, None).is_err());
        let mut file = MaterialParams::reference_alloy_file();
        file.shape_file = "/nonexistent/shape.json".into();
        assert!(MaterialParams::from_file(&file, None).is_err());
    }

    #[test]
    fn hash_tracks_values_and_shape() {
        let a = MaterialParams::reference_alloy(ArcBoundary::egg());
        let mut b = a.clone();
        assert_eq!(a.hash(), b.hash());
        b.beta = 34.0;
        assert_ne!(a.hash(), b.hash());
        let c = MaterialParams::reference_alloy(ArcBoundary::unit_half_disc());
        assert_ne!(a.hash(), c.hash());
        assert_eq!(a.hash().len(), 64);
    }

    #[test]
    fn young_modulus() {
        let p = MaterialParams::reference_alloy(ArcBoundary::egg());
        assert!((p.young() - 69_296.0).abs() < 1.0);
        assert_eq!(p.inelastic_stiffness(), 58_255.0);
    }
}
