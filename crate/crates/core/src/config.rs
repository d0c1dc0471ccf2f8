//! Run configuration: TOML with `medium`, `atom`, `sweep`, `mesh`, `methods`,
//! `modes`, `identities`, `oracle` and `output` tables.
//!
//! Every key has a default, so an empty file is a valid Case 1-A run.

use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::fem::MassScheme;
use crate::medium::{MediumError, MediumSpec, SLAB_THICKNESS};
use crate::mesh::{default_padding, MeshError, PmlSpec};
use crate::micromodes::BathConfig;
use crate::purcell::Methods;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {source}")]
    Read {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("config parse error: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("config serialization error: {0}")]
    Serialize(#[from] toml::ser::Error),
    #[error("invalid config: {0}")]
    Invalid(String),
    #[error(transparent)]
    Medium(#[from] MediumError),
    #[error(transparent)]
    Mesh(#[from] MeshError),
}

fn invalid<T>(msg: impl Into<String>) -> Result<T, ConfigError> {
    Err(ConfigError::Invalid(msg.into()))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MediumPreset {
    /// `γ = 50`
    Case1,
    /// `γ = 5`
    Case2,
    Vacuum,
    /// All of `omega_p`, `omega_0`, `gamma` must be given.
    Custom,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum AtomPreset {
    /// Slab center.
    A,
    /// One slab thickness from the center, outside the slab.
    B,
    /// Position given by `atom.x`.
    #[serde(rename = "custom")]
    Custom,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MediumConfig {
    pub preset: MediumPreset,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub omega_p: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub omega_0: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gamma: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub slab_half_length: Option<f64>,
}

impl Default for MediumConfig {
    fn default() -> Self {
        Self {
            preset: MediumPreset::Case1,
            omega_p: None,
            omega_0: None,
            gamma: None,
            slab_half_length: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AtomConfig {
    pub position: AtomPreset,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub x: Option<f64>,
    /// Where the thermal-equilibrium balance is evaluated; defaults to the B position.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tec_point: Option<f64>,
}

impl Default for AtomConfig {
    fn default() -> Self {
        Self {
            position: AtomPreset::A,
            x: None,
            tec_point: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepConfig {
    pub min: f64,
    pub max: f64,
    pub count: usize,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            min: 300.0,
            max: 700.0,
            count: 101,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MeshConfig {
    pub ppw: f64,
    /// Vacuum gap between slab face and PML; defaults to one slab thickness plus two
    /// wavelengths at the sweep minimum.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub padding: Option<f64>,
    /// Defaults to two wavelengths at the sweep minimum.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub pml_thickness: Option<f64>,
    pub pml_order: f64,
    pub pml_reflection: f64,
    pub mass: MassScheme,
    pub points_per_element: usize,
}

impl Default for MeshConfig {
    fn default() -> Self {
        Self {
            ppw: 80.0,
            padding: None,
            pml_thickness: None,
            pml_order: 3.0,
            pml_reflection: 1e-10,
            mass: MassScheme::default(),
            points_per_element: crate::greens::DEFAULT_POINTS_PER_ELEMENT,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModesConfig {
    pub ppw: f64,
    pub bath: BathConfig,
    /// Lorentzian width; defaults to four vacuum box-mode spacings.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub eta: Option<f64>,
    /// Frequencies at which the effective susceptibility is checked.
    pub calibration_points: usize,
}

impl Default for ModesConfig {
    fn default() -> Self {
        Self {
            ppw: 15.0,
            bath: BathConfig::default(),
            eta: None,
            calibration_points: 41,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IdentitiesConfig {
    /// Coarse verification mesh resolution.
    pub ppw: f64,
    pub frequencies: Vec<f64>,
    pub dof_cap: usize,
    pub ddgt_threshold: f64,
    pub tec_threshold: f64,
    /// The lossless identity must fail by at least this much to count as demonstrated.
    pub lossless_min: f64,
}

impl Default for IdentitiesConfig {
    fn default() -> Self {
        Self {
            ppw: 15.0,
            frequencies: vec![300.0, 500.0, 700.0],
            dof_cap: crate::identities::DEFAULT_DOF_CAP,
            ddgt_threshold: 1e-10,
            tec_threshold: 0.01,
            lossless_min: 0.5,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OracleConfig {
    pub count: usize,
    pub tolerance: f64,
}

impl Default for OracleConfig {
    fn default() -> Self {
        Self {
            count: 11,
            tolerance: 5e-3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputConfig {
    /// Purcell spectrum CSV; stdout when absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub path: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mesh_dump: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub oracle_csv: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub modes_csv: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub medium: MediumConfig,
    pub atom: AtomConfig,
    pub sweep: SweepConfig,
    pub mesh: MeshConfig,
    pub methods: Methods,
    pub modes: ModesConfig,
    pub identities: IdentitiesConfig,
    pub oracle: OracleConfig,
    pub output: OutputConfig,
}

/// One of the four reference scenarios: loss case 1 or 2, atom at A or B.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CasePreset {
    pub medium: MediumPreset,
    pub atom: AtomPreset,
}

impl FromStr for CasePreset {
    type Err = ConfigError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let up = s.trim().to_ascii_uppercase();
        let (medium, atom) = match up.as_str() {
            "1A" => (MediumPreset::Case1, AtomPreset::A),
            "1B" => (MediumPreset::Case1, AtomPreset::B),
            "2A" => (MediumPreset::Case2, AtomPreset::A),
            "2B" => (MediumPreset::Case2, AtomPreset::B),
            _ => return invalid(format!("unknown case `{s}` (expected 1A, 1B, 2A or 2B)")),
        };
        Ok(Self { medium, atom })
    }
}

impl RunConfig {
    pub fn from_toml_str(text: &str) -> Result<Self, ConfigError> {
        let cfg: RunConfig = toml::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Read {
            path: path.to_owned(),
            source,
        })?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml_string(&self) -> Result<String, ConfigError> {
        Ok(toml::to_string(self)?)
    }

    /// A reference scenario with every other setting at its default.
    pub fn preset(case: CasePreset) -> Self {
        let mut cfg = Self::default();
        cfg.apply_case(case);
        cfg
    }

    /// Empty slab, atom at the center.
    pub fn vacuum() -> Self {
        let mut cfg = Self::default();
        cfg.medium.preset = MediumPreset::Vacuum;
        cfg
    }

    /// Selects the medium and atom presets, dropping any overrides of either.
    pub fn apply_case(&mut self, case: CasePreset) {
        self.medium = MediumConfig {
            preset: case.medium,
            ..MediumConfig::default()
        };
        self.atom.position = case.atom;
        self.atom.x = None;
    }

    pub fn medium_spec(&self) -> Result<MediumSpec, ConfigError> {
        let m = &self.medium;
        let base = match m.preset {
            MediumPreset::Case1 => MediumSpec::case1(),
            MediumPreset::Case2 => MediumSpec::case2(),
            MediumPreset::Vacuum => MediumSpec::vacuum(),
            MediumPreset::Custom => {
                if m.omega_p.is_none() || m.omega_0.is_none() || m.gamma.is_none() {
                    return invalid("medium.preset = \"custom\" needs omega_p, omega_0 and gamma");
                }
                MediumSpec::case1()
            }
        };
        Ok(MediumSpec::new(
            m.omega_p.unwrap_or(base.omega_p),
            m.omega_0.unwrap_or(base.omega_0),
            m.gamma.unwrap_or(base.gamma),
            m.slab_half_length.unwrap_or(base.slab_half_length),
        )?)
    }

    pub fn atom_position(&self) -> Result<f64, ConfigError> {
        match self.atom.position {
            AtomPreset::A => Ok(0.0),
            AtomPreset::B => Ok(SLAB_THICKNESS),
            AtomPreset::Custom => match self.atom.x {
                Some(x) if x.is_finite() => Ok(x),
                _ => invalid("atom.position = \"custom\" needs a finite atom.x"),
            },
        }
    }

    pub fn tec_point(&self) -> f64 {
        self.atom.tec_point.unwrap_or(SLAB_THICKNESS)
    }

    pub fn frequencies(&self) -> Vec<f64> {
        crate::purcell::linspace(self.sweep.min, self.sweep.max, self.sweep.count)
    }

    pub fn padding(&self) -> Result<f64, ConfigError> {
        match self.mesh.padding {
            Some(p) => Ok(p),
            None => Ok(default_padding(&self.medium_spec()?, self.sweep.min)),
        }
    }

    pub fn pml(&self) -> Result<PmlSpec, ConfigError> {
        let d = self
            .mesh
            .pml_thickness
            .unwrap_or_else(|| PmlSpec::for_band(self.sweep.min).thickness);
        Ok(PmlSpec::new(
            d,
            self.mesh.pml_order,
            self.mesh.pml_reflection,
        )?)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let s = &self.sweep;
        if s.count == 0 {
            return invalid("sweep.count must be >= 1");
        }
        if !(s.min > 0.0 && s.min.is_finite() && s.max.is_finite()) {
            return invalid("sweep bounds must be finite and positive");
        }
        if s.count == 1 {
            if s.min > s.max {
                return invalid("sweep.min must not exceed sweep.max");
            }
        } else if !(s.min < s.max) {
            return invalid("sweep.min must be < sweep.max");
        }
        if !self.methods.any() {
            return invalid(
                "at least one of methods.sfa, modified_ln, original_ln, modes must be enabled",
            );
        }
        if !(self.mesh.ppw >= 10.0) {
            return invalid(format!("mesh.ppw must be >= 10 (got {})", self.mesh.ppw));
        }
        if self.mesh.points_per_element < 2 {
            return invalid("mesh.points_per_element must be >= 2");
        }
        if let Some(p) = self.mesh.padding {
            if !(p > 0.0) {
                return invalid("mesh.padding must be > 0");
            }
        }
        let medium = self.medium_spec()?;
        self.atom_position()?;
        self.pml()?;
        if self.methods.modes {
            self.modes
                .bath
                .validate(&medium)
                .map_err(|e| ConfigError::Invalid(e.to_string()))?;
            if let Some(eta) = self.modes.eta {
                if !(eta > 0.0) {
                    return invalid("modes.eta must be > 0");
                }
            }
        }
        if self.oracle.count == 0 || !(self.oracle.tolerance > 0.0) {
            return invalid("oracle.count must be >= 1 and oracle.tolerance > 0");
        }
        if self.identities.frequencies.iter().any(|k| !(*k > 0.0)) {
            return invalid("identities.frequencies must be positive");
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_file_is_case_1a() {
        let c = RunConfig::from_toml_str("").unwrap();
        assert_eq!(c.medium_spec().unwrap(), MediumSpec::case1());
        assert_eq!(c.atom_position().unwrap(), 0.0);
        assert_eq!(c.frequencies().len(), 101);
        assert!(!c.methods.modes);
    }

    #[test]
    fn dotted_keys_and_presets() {
        let c = RunConfig::from_toml_str(
            "medium.preset = \"case2\"\natom.position = \"B\"\nsweep.count = 1\nsweep.min = 500.0\nsweep.max = 500.0\n",
        )
        .unwrap();
        assert_eq!(c.medium_spec().unwrap().gamma, 5.0);
        assert_eq!(c.atom_position().unwrap(), SLAB_THICKNESS);
        assert_eq!(c.frequencies(), vec![500.0]);
        assert_eq!(RunConfig::preset("2b".parse().unwrap()), {
            let mut d = RunConfig::default();
            d.medium.preset = MediumPreset::Case2;
            d.atom.position = AtomPreset::B;
            d
        });
    }

    #[test]
    fn round_trip() {
        let mut c = RunConfig::preset("1B".parse().unwrap());
        c.medium.gamma = Some(12.5);
        c.mesh.padding = Some(0.1);
        c.output.path = Some("out/spec.csv".into());
        c.methods.modes = true;
        c.modes.eta = Some(30.0);
        let text = c.to_toml_string().unwrap();
        assert_eq!(RunConfig::from_toml_str(&text).unwrap(), c);
    }

    #[test]
    fn rejects_bad_input() {
        for bad in [
            "sweep.count = 0",
            "sweep.min = 700.0\nsweep.max = 300.0",
            "methods.sfa = false\nmethods.modified_ln = false\nmethods.original_ln = false",
            "mesh.ppw = 5.0",
            "medium.preset = \"custom\"",
            "atom.position = \"custom\"",
            "medium.gamma = -1.0",
            "unknown.key = 1",
            "mesh.bogus = 1",
        ] {
            assert!(RunConfig::from_toml_str(bad).is_err(), "{bad}");
        }
        assert!("3C".parse::<CasePreset>().is_err());
    }

    #[test]
    fn custom_medium() {
        let c = RunConfig::from_toml_str(
            "medium.preset = \"custom\"\nmedium.omega_p = 50.0\nmedium.omega_0 = 400.0\nmedium.gamma = 10.0\n",
        )
        .unwrap();
        let m = c.medium_spec().unwrap();
        assert_eq!((m.omega_p, m.omega_0, m.gamma), (50.0, 400.0, 10.0));
    }
}
