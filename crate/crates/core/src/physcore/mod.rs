//! Physical constants, nuclear species and materials, and the bulk
//! calibration of s / s* orbital densities at the nucleus.

pub mod calibration;
pub mod constants;
pub mod database;

pub use calibration::{
    calibrate_orbital_densities, compose_bulk_density, deduce_bulk_densities, AtomicRatio,
    BulkCalibrationInput, CalibrationError, OrbitalDensities, ReferencePair, ReferenceSite,
};
pub use constants::{PhysicalConstants, GAUSS_PER_TESLA};
pub use database::{
    load_database, Database, DatabaseError, Isotope, MaterialRecord, NuclearSpecies,
};
