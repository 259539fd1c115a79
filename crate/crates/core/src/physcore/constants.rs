use serde::{Deserialize, Serialize};

/// Gauss per tesla.
pub const GAUSS_PER_TESLA: f64 = 1.0e4;

/// Fundamental constants in Gaussian-CGS units.
///
/// Magnetons are stored in erg/G and the reduced Planck constant in erg*s.
/// Conversions to eV and tesla happen only at the reporting boundary.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhysicalConstants {
    pub bohr_magneton: f64,
    pub nuclear_magneton: f64,
    pub reduced_planck: f64,
    pub erg_per_ev: f64,
}

impl Default for PhysicalConstants {
    fn default() -> Self {
        PhysicalConstants {
            bohr_magneton: 9.274_010_078_3e-21,
            nuclear_magneton: 5.050_783_746_1e-24,
            reduced_planck: 1.054_571_817e-27,
            erg_per_ev: 1.602_176_634e-12,
        }
    }
}

impl PhysicalConstants {
    pub fn is_valid(&self) -> bool {
        [
            self.bohr_magneton,
            self.nuclear_magneton,
            self.reduced_planck,
            self.erg_per_ev,
        ]
        .iter()
        .all(|v| v.is_finite() && *v > 0.0)
    }

    pub fn erg_to_ev(&self, erg: f64) -> f64 {
        erg / self.erg_per_ev
    }

    pub fn ev_to_erg(&self, ev: f64) -> f64 {
        ev * self.erg_per_ev
    }

    /// Bohr magneton in eV/T.
    pub fn bohr_magneton_ev_per_tesla(&self) -> f64 {
        self.bohr_magneton * GAUSS_PER_TESLA / self.erg_per_ev
    }

    /// Reduced Planck constant in eV*s.
    pub fn reduced_planck_ev_s(&self) -> f64 {
        self.reduced_planck / self.erg_per_ev
    }

    /// Prefactor (16 pi / 3) mu_B mu_N of the contact coupling, in erg*cm^3.
    pub fn contact_prefactor(&self) -> f64 {
        16.0 * std::f64::consts::PI / 3.0 * self.bohr_magneton * self.nuclear_magneton
    }
}
