//! Species / material database file.
//!
//! The file is TOML with a `schema_version` field. Orbital densities are
//! normally derived at load time from the `[[calibration]]` table; a species
//! may instead carry explicit `densities` entries, which take precedence.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::calibration::{
    calibrate_orbital_densities, deduce_bulk_densities, AtomicRatio, BulkCalibrationInput,
    CalibrationError, OrbitalDensities, ReferencePair, ReferenceSite,
};
use super::constants::PhysicalConstants;

pub const SCHEMA_VERSION: u32 = 1;

const BUNDLED: &str = include_str!("../../data/default_database.toml");

#[derive(Debug, Error)]
pub enum DatabaseError {
    #[error("cannot read database {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("database schema error: {0}")]
    Schema(String),
    #[error("unsupported schema_version {0} (expected {SCHEMA_VERSION})")]
    Version(u32),
    #[error("species {species}: {message}")]
    InvalidSpecies { species: String, message: String },
    #[error("material {material}: {message}")]
    InvalidMaterial { material: String, message: String },
    #[error("calibration of {atom} in {host}: {source}")]
    Calibration {
        atom: String,
        host: String,
        source: CalibrationError,
    },
    #[error("constants must be finite and positive")]
    InvalidConstants,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Isotope {
    pub mass_number: u32,
    pub abundance: f64,
    pub spin: f64,
    pub g_factor: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NuclearSpecies {
    pub name: String,
    /// Nuclear spin quantum number I.
    pub spin: f64,
    pub g_factor: f64,
    /// phi_s*(0) / phi_s(0), signed.
    pub orbital_ratio: f64,
    /// Calibrated orbital densities keyed by host material.
    pub densities: BTreeMap<String, OrbitalDensities>,
    pub isotopes: Vec<Isotope>,
}

impl NuclearSpecies {
    pub fn densities_in(&self, host: &str) -> Option<&OrbitalDensities> {
        self.densities.get(host)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MaterialRecord {
    pub name: String,
    pub cation: String,
    pub anion: String,
    /// nm
    pub lattice_constant: f64,
    /// Keating bond-stretch constant, eV/nm^2.
    pub keating_alpha: f64,
    /// Keating bond-bend constant, eV/nm^2.
    pub keating_beta: f64,
    pub tb_parameter_set: String,
    pub electron_g: f64,
}

impl MaterialRecord {
    /// Ideal nearest-neighbour distance sqrt(3) a / 4, nm.
    pub fn bond_length(&self) -> f64 {
        self.lattice_constant * 3f64.sqrt() / 4.0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationRecord {
    pub atom: String,
    pub host: String,
    pub reference_site: ReferenceSite,
    pub atomic_ratio: f64,
    pub alpha: f64,
    pub beta: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReferenceRecord {
    pub host: String,
    pub cation_density: f64,
    pub anion_density: f64,
}

impl ReferenceRecord {
    pub fn pair(&self) -> ReferencePair {
        ReferencePair {
            cation_density: self.cation_density,
            anion_density: self.anion_density,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Database {
    pub schema_version: u32,
    pub constants: PhysicalConstants,
    pub reference: Option<ReferenceRecord>,
    pub calibration: Vec<CalibrationRecord>,
    pub species: BTreeMap<String, NuclearSpecies>,
    pub materials: BTreeMap<String, MaterialRecord>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawDatabase {
    schema_version: u32,
    constants: PhysicalConstants,
    reference: Option<ReferenceRecord>,
    #[serde(default)]
    calibration: Vec<CalibrationRecord>,
    species: Vec<RawSpecies>,
    materials: Vec<MaterialRecord>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSpecies {
    name: String,
    spin: f64,
    g_factor: f64,
    orbital_ratio: f64,
    #[serde(default)]
    isotopes: Vec<Isotope>,
    #[serde(default)]
    densities: Vec<RawDensity>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawDensity {
    host: String,
    s: f64,
    s_star: f64,
}

pub fn load_database(path: &Path) -> Result<Database, DatabaseError> {
    let text = std::fs::read_to_string(path).map_err(|source| DatabaseError::Io {
        path: path.display().to_string(),
        source,
    })?;
    Database::from_toml(&text)
}

fn species_err(species: &str, message: impl Into<String>) -> DatabaseError {
    DatabaseError::InvalidSpecies {
        species: species.to_string(),
        message: message.into(),
    }
}

fn is_half_integer(v: f64) -> bool {
    v >= 0.0 && ((2.0 * v) - (2.0 * v).round()).abs() < 1e-12
}

impl Database {
    pub fn bundled() -> Database {
        Database::from_toml(BUNDLED).expect("bundled database is valid")
    }

    pub fn bundled_source() -> &'static str {
        BUNDLED
    }

    pub fn from_toml(text: &str) -> Result<Database, DatabaseError> {
        let raw: RawDatabase =
            toml::from_str(text).map_err(|e| DatabaseError::Schema(e.to_string()))?;
        if raw.schema_version != SCHEMA_VERSION {
            return Err(DatabaseError::Version(raw.schema_version));
        }
        if !raw.constants.is_valid() {
            return Err(DatabaseError::InvalidConstants);
        }

        let mut species = BTreeMap::new();
        for s in raw.species {
            if !is_half_integer(s.spin) {
                return Err(species_err(&s.name, format!("spin {} is not a half-integer", s.spin)));
            }
            if !s.g_factor.is_finite() {
                return Err(species_err(&s.name, "g factor is not finite"));
            }
            for iso in &s.isotopes {
                if !is_half_integer(iso.spin) || !(0.0..=1.0).contains(&iso.abundance) {
                    return Err(species_err(
                        &s.name,
                        format!("isotope {} has invalid spin or abundance", iso.mass_number),
                    ));
                }
            }
            let mut densities = BTreeMap::new();
            for d in s.densities {
                if !(d.s >= 0.0) || !(d.s_star >= 0.0) {
                    return Err(species_err(
                        &s.name,
                        format!("negative orbital density in host {}", d.host),
                    ));
                }
                densities.insert(
                    d.host,
                    OrbitalDensities {
                        s: d.s,
                        s_star: d.s_star,
                    },
                );
            }
            let name = s.name.clone();
            let record = NuclearSpecies {
                name: s.name,
                spin: s.spin,
                g_factor: s.g_factor,
                orbital_ratio: s.orbital_ratio,
                densities,
                isotopes: s.isotopes,
            };
            if species.insert(name.clone(), record).is_some() {
                return Err(species_err(&name, "duplicate species"));
            }
        }

        if let Some(reference) = &raw.reference {
            for d in [reference.cation_density, reference.anion_density] {
                if !(d > 0.0) {
                    return Err(DatabaseError::Schema(format!(
                        "reference {} densities must be positive",
                        reference.host
                    )));
                }
            }
        }

        // Derive orbital densities for every calibration row not overridden.
        for row in &raw.calibration {
            let reference = raw.reference.as_ref().ok_or_else(|| {
                DatabaseError::Schema("calibration rows require a [reference] table".into())
            })?;
            let sp = species
                .get_mut(&row.atom)
                .ok_or_else(|| species_err(&row.atom, "calibration refers to unknown species"))?;
            let wrap = |source| DatabaseError::Calibration {
                atom: row.atom.clone(),
                host: row.host.clone(),
                source,
            };
            let bulk = deduce_bulk_densities(
                &reference.pair(),
                &[AtomicRatio {
                    label: format!("{} in {}", row.atom, row.host),
                    site: row.reference_site,
                    ratio: row.atomic_ratio,
                }],
            )
            .map_err(wrap)?[0];
            let input = BulkCalibrationInput {
                bulk_density: bulk,
                alpha: row.alpha,
                beta: row.beta,
            };
            let dens = calibrate_orbital_densities(&input, sp.orbital_ratio).map_err(wrap)?;
            sp.densities.entry(row.host.clone()).or_insert(dens);
        }

        let mut materials = BTreeMap::new();
        for m in raw.materials {
            let err = |message: &str| DatabaseError::InvalidMaterial {
                material: m.name.clone(),
                message: message.to_string(),
            };
            if !(m.lattice_constant > 0.0) {
                return Err(err("lattice constant must be positive"));
            }
            if !(m.keating_alpha > 0.0 && m.keating_beta > 0.0) {
                return Err(err("Keating constants must be positive"));
            }
            if m.electron_g == 0.0 || !m.electron_g.is_finite() {
                return Err(err("electron g factor must be finite and nonzero"));
            }
            for sp in [&m.cation, &m.anion] {
                if !species.contains_key(sp) {
                    return Err(err(&format!("references unknown species {sp}")));
                }
            }
            materials.insert(m.name.clone(), m);
        }

        Ok(Database {
            schema_version: raw.schema_version,
            constants: raw.constants,
            reference: raw.reference,
            calibration: raw.calibration,
            species,
            materials,
        })
    }

    pub fn species(&self, name: &str) -> Option<&NuclearSpecies> {
        self.species.get(name)
    }

    pub fn material(&self, name: &str) -> Option<&MaterialRecord> {
        self.materials.get(name)
    }

    /// Material whose cation/anion pair matches, if any.
    pub fn material_for_pair(&self, cation: &str, anion: &str) -> Option<&MaterialRecord> {
        self.materials
            .values()
            .find(|m| m.cation == cation && m.anion == anion)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bundled_spins() {
        let db = Database::bundled();
        assert_eq!(db.species("In").unwrap().spin, 4.5);
        assert_eq!(db.species("Ga").unwrap().spin, 1.5);
        assert_eq!(db.species("As").unwrap().spin, 1.5);
        assert!(db.material("GaAs").is_some());
        assert!(db.material_for_pair("In", "As").unwrap().name == "InAs");
    }

    #[test]
    fn densities_follow_ratio_invariant() {
        let db = Database::bundled();
        for sp in db.species.values() {
            for d in sp.densities.values() {
                let lhs = sp.orbital_ratio * sp.orbital_ratio * d.s;
                assert!(((lhs - d.s_star) / d.s_star).abs() < 1e-6);
            }
        }
    }

    #[test]
    fn empty_file_is_schema_error() {
        assert!(matches!(
            Database::from_toml(""),
            Err(DatabaseError::Schema(_))
        ));
    }

    #[test]
    fn negative_density_names_species() {
        let text = Database::bundled_source().replace(
            "orbital_ratio = 0.53\n",
            "orbital_ratio = 0.53\ndensities = [ { host = \"InAs\", s = -1.0, s_star = 1.0 } ]\n",
        );
        let err = Database::from_toml(&text).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("In"), "{msg}");
        assert!(matches!(err, DatabaseError::InvalidSpecies { ref species, .. } if species == "In"));
    }

    #[test]
    fn missing_species_in_material_rejected() {
        let text = Database::bundled_source().replace("cation = \"Ga\"", "cation = \"Al\"");
        assert!(matches!(
            Database::from_toml(&text),
            Err(DatabaseError::InvalidMaterial { .. })
        ));
    }

    #[test]
    fn load_is_idempotent() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("db.toml");
        std::fs::write(&path, Database::bundled_source()).unwrap();
        let a = load_database(&path).unwrap();
        let b = load_database(&path).unwrap();
        assert_eq!(a, b);
        assert!(load_database(&dir.path().join("missing.toml")).is_err());
    }
}
