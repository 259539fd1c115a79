//! Orbital contact densities from bulk conduction-band data.
//!
//! The bulk contact density of an atom is written as
//! `|psi(0)|^2 = |alpha phi_s(0) + beta phi_s*(0)|^2`, and the second
//! equation needed to split it comes from fixing `phi_s*(0) / phi_s(0)` to the
//! free-atom orbital ratio `r`.

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Slack on `alpha^2 + beta^2 <= 1` for coefficients tabulated to three decimals.
const SINGULAR_EPS: f64 = 1.0e-12;

#[derive(Debug, Error, PartialEq)]
pub enum CalibrationError {
    #[error("singular calibration: alpha + beta * r = {0:e}")]
    Singular(f64),
    #[error("bulk density must be positive, got {0:e}")]
    NonPositiveDensity(f64),
    #[error("atomic ratio for {site} must be positive, got {ratio}")]
    NonPositiveRatio { site: String, ratio: f64 },
}

/// Squared orbital values at the nucleus, in cm^-3.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OrbitalDensities {
    pub s: f64,
    pub s_star: f64,
}

impl OrbitalDensities {
    /// Signed orbital amplitudes `(phi_s(0), phi_s*(0))`, with `phi_s(0) > 0`
    /// and the sign of `phi_s*(0)` taken from `ratio`.
    pub fn amplitudes(&self, ratio: f64) -> (f64, f64) {
        let s = self.s.sqrt();
        (s, self.s_star.sqrt().copysign(if ratio == 0.0 { 1.0 } else { ratio }))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BulkCalibrationInput {
    /// Bulk conduction density at the nucleus, cm^-3.
    pub bulk_density: f64,
    pub alpha: f64,
    pub beta: f64,
}

pub fn calibrate_orbital_densities(
    input: &BulkCalibrationInput,
    ratio: f64,
) -> Result<OrbitalDensities, CalibrationError> {
    if !(input.bulk_density > 0.0) {
        return Err(CalibrationError::NonPositiveDensity(input.bulk_density));
    }
    let mix = input.alpha + input.beta * ratio;
    if mix.abs() < SINGULAR_EPS {
        return Err(CalibrationError::Singular(mix));
    }
    let s = input.bulk_density / (mix * mix);
    Ok(OrbitalDensities {
        s,
        s_star: ratio * ratio * s,
    })
}

/// Forward relation: bulk density from orbital densities and coefficients.
pub fn compose_bulk_density(densities: &OrbitalDensities, ratio: f64, alpha: f64, beta: f64) -> f64 {
    let (phi_s, phi_ss) = densities.amplitudes(ratio);
    let psi = alpha * phi_s + beta * phi_ss;
    psi * psi
}

/// Which measured InSb site a bulk density is scaled from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ReferenceSite {
    Cation,
    Anion,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReferencePair {
    pub cation_density: f64,
    pub anion_density: f64,
}

impl ReferencePair {
    pub fn density(&self, site: ReferenceSite) -> f64 {
        match site {
            ReferenceSite::Cation => self.cation_density,
            ReferenceSite::Anion => self.anion_density,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AtomicRatio {
    pub label: String,
    pub site: ReferenceSite,
    pub ratio: f64,
}

/// Bulk densities as `reference density x atomic ratio`, one per entry.
pub fn deduce_bulk_densities(
    reference: &ReferencePair,
    ratios: &[AtomicRatio],
) -> Result<Vec<f64>, CalibrationError> {
    for d in [reference.cation_density, reference.anion_density] {
        if !(d > 0.0) {
            return Err(CalibrationError::NonPositiveDensity(d));
        }
    }
    ratios
        .iter()
        .map(|r| {
            if !(r.ratio > 0.0) {
                Err(CalibrationError::NonPositiveRatio {
                    site: r.label.clone(),
                    ratio: r.ratio,
                })
            } else {
                Ok(reference.density(r.site) * r.ratio)
            }
        })
        .collect()
}
