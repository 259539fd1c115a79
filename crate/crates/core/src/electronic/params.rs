//! Tight-binding parameter sets.
//!
//! A parameter file is TOML:
//!
//! ```toml
//! name = "vogl-sp3s*"
//! tier = "sp3s*"            # "s", "sp3s*" or "sp3d5s*"
//! eta = 2.0                 # Harrison exponent
//! provenance = "..."
//!
//! [eta_overrides]           # optional, per integral key
//! p_p_pi = 3.0
//!
//! [[materials]]
//! name = "GaAs"
//! cation = "Ga"
//! anion = "As"
//! bond_length = 0.2448      # nm, reference length for scaling
//! valence_band_offset = 0.0 # eV, added to every on-site energy
//! gamma_cb_target = 1.55    # optional, eV, before the offset
//! [materials.onsite_cation] # keys s, p, d, sstar
//! [materials.onsite_anion]
//! [materials.integrals]     # <cation shell>_<anion shell>_<sigma|pi|delta>
//! [materials.lowdin_cation] # optional, eV per unit bond strain, by shell
//! [materials.lowdin_anion]
//! ```

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::basis::{BasisTier, Bond, Shell};
use super::slater_koster::Integrals;

#[derive(Debug, Error)]
pub enum ParamError {
    #[error("cannot read parameter file {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("parameter file does not parse: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("parameter set {set}: material {material} lacks {key}")]
    Missing {
        set: String,
        material: String,
        key: String,
    },
    #[error("parameter set {set}: {message}")]
    Invalid { set: String, message: String },
    #[error("no tight-binding material for bond {cation}-{anion}")]
    NoBondMaterial { cation: String, anion: String },
    #[error("unknown bundled parameter set {0:?}")]
    UnknownBundled(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TbMaterial {
    pub name: String,
    pub cation: String,
    pub anion: String,
    pub bond_length: f64,
    #[serde(default)]
    pub valence_band_offset: f64,
    #[serde(default)]
    pub gamma_cb_target: Option<f64>,
    pub onsite_cation: BTreeMap<String, f64>,
    pub onsite_anion: BTreeMap<String, f64>,
    pub integrals: BTreeMap<String, f64>,
    #[serde(default)]
    pub lowdin_cation: BTreeMap<String, f64>,
    #[serde(default)]
    pub lowdin_anion: BTreeMap<String, f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TbParameterSet {
    pub name: String,
    pub tier: BasisTier,
    #[serde(default = "default_eta")]
    pub eta: f64,
    #[serde(default)]
    pub eta_overrides: BTreeMap<String, f64>,
    #[serde(default)]
    pub provenance: String,
    pub materials: Vec<TbMaterial>,
}

fn default_eta() -> f64 {
    2.0
}

pub const BUNDLED: [(&str, &str); 2] = [
    ("vogl-sp3s*", include_str!("../../data/tb/vogl_sp3s.toml")),
    ("toy-s", include_str!("../../data/tb/toy_s.toml")),
];

pub fn integral_key(on_cation: Shell, on_anion: Shell, bond: Bond) -> String {
    format!("{}_{}_{}", on_cation.as_str(), on_anion.as_str(), bond.as_str())
}

/// Bond types that exist between two shells.
pub fn bonds_between(a: Shell, b: Shell) -> &'static [Bond] {
    match a.l().min(b.l()) {
        0 => &[Bond::Sigma],
        1 => &[Bond::Sigma, Bond::Pi],
        _ => &[Bond::Sigma, Bond::Pi, Bond::Delta],
    }
}

/// Per-material parameters unpacked into fixed arrays, indexed by shell.
#[derive(Debug, Clone, PartialEq)]
pub struct ResolvedMaterial {
    pub name: String,
    pub cation: String,
    pub anion: String,
    pub bond_length: f64,
    pub onsite_cation: [f64; 4],
    pub onsite_anion: [f64; 4],
    pub lowdin_cation: [f64; 4],
    pub lowdin_anion: [f64; 4],
    /// Cation at the origin, anion at the neighbour.
    pub integrals: Integrals,
    pub eta: Integrals,
    pub gamma_cb_target: Option<f64>,
}

impl TbParameterSet {
    pub fn from_toml(text: &str) -> Result<TbParameterSet, ParamError> {
        let set: TbParameterSet = toml::from_str(text)?;
        set.validate()?;
        Ok(set)
    }

    pub fn load(path: &Path) -> Result<TbParameterSet, ParamError> {
        let text = std::fs::read_to_string(path).map_err(|source| ParamError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_toml(&text)
    }

    pub fn bundled(name: &str) -> Result<TbParameterSet, ParamError> {
        BUNDLED
            .iter()
            .find(|(n, _)| *n == name)
            .map(|(_, text)| Self::from_toml(text))
            .unwrap_or_else(|| Err(ParamError::UnknownBundled(name.to_string())))
    }

    fn invalid(&self, message: impl Into<String>) -> ParamError {
        ParamError::Invalid {
            set: self.name.clone(),
            message: message.into(),
        }
    }

    pub fn validate(&self) -> Result<(), ParamError> {
        if !(self.eta > 0.0) {
            return Err(self.invalid(format!("eta must be positive, got {}", self.eta)));
        }
        if let Some((k, v)) = self.eta_overrides.iter().find(|(_, v)| !(**v >= 0.0)) {
            return Err(self.invalid(format!("eta override {k} = {v} is negative")));
        }
        if self.materials.is_empty() {
            return Err(self.invalid("no materials"));
        }
        for m in &self.materials {
            if !(m.bond_length > 0.0) {
                return Err(self.invalid(format!("{}: bond length must be positive", m.name)));
            }
            self.resolve(m, self.tier)?;
        }
        Ok(())
    }

    fn lookup(&self, m: &TbMaterial, table: &BTreeMap<String, f64>, key: &str, what: &str) -> Result<f64, ParamError> {
        table.get(key).copied().ok_or_else(|| ParamError::Missing {
            set: self.name.clone(),
            material: m.name.clone(),
            key: format!("{what}.{key}"),
        })
    }

    /// Unpack `m` for `tier`, failing on the first entry the tier needs but
    /// the file lacks.
    pub fn resolve(&self, m: &TbMaterial, tier: BasisTier) -> Result<ResolvedMaterial, ParamError> {
        let mut r = ResolvedMaterial {
            name: m.name.clone(),
            cation: m.cation.clone(),
            anion: m.anion.clone(),
            bond_length: m.bond_length,
            onsite_cation: [0.0; 4],
            onsite_anion: [0.0; 4],
            lowdin_cation: [0.0; 4],
            lowdin_anion: [0.0; 4],
            integrals: [[[0.0; 3]; 4]; 4],
            eta: [[[0.0; 3]; 4]; 4],
            gamma_cb_target: m.gamma_cb_target,
        };
        for &sh in tier.shells() {
            let k = sh.as_str();
            r.onsite_cation[sh as usize] =
                self.lookup(m, &m.onsite_cation, k, "onsite_cation")? + m.valence_band_offset;
            r.onsite_anion[sh as usize] =
                self.lookup(m, &m.onsite_anion, k, "onsite_anion")? + m.valence_band_offset;
            r.lowdin_cation[sh as usize] = m.lowdin_cation.get(k).copied().unwrap_or(0.0);
            r.lowdin_anion[sh as usize] = m.lowdin_anion.get(k).copied().unwrap_or(0.0);
        }
        for &a in tier.shells() {
            for &b in tier.shells() {
                for &bond in bonds_between(a, b) {
                    let key = integral_key(a, b, bond);
                    r.integrals[a as usize][b as usize][bond as usize] =
                        self.lookup(m, &m.integrals, &key, "integrals")?;
                    r.eta[a as usize][b as usize][bond as usize] =
                        self.eta_overrides.get(&key).copied().unwrap_or(self.eta);
                }
            }
        }
        Ok(r)
    }

    pub fn material(&self, name: &str) -> Option<&TbMaterial> {
        self.materials.iter().find(|m| m.name == name)
    }

    pub fn material_for_bond(&self, cation: &str, anion: &str) -> Result<&TbMaterial, ParamError> {
        self.materials
            .iter()
            .find(|m| m.cation == cation && m.anion == anion)
            .ok_or_else(|| ParamError::NoBondMaterial {
                cation: cation.into(),
                anion: anion.into(),
            })
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("parameter sets serialize")
    }
}
