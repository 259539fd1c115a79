//! Atomistic zinc-blende structure of a lens-shaped dot in a buffer, with
//! alloy and interface disorder realizations.

mod io;
mod lens;
mod structure;

pub use io::{counts, read_structure, structure_table, write_structure, StructureCounts, StructureIoError, StructureMeta};
pub use lens::Lens;
pub use structure::{
    build_realization, build_structure, classify_point, AtomisticStructure, Boundary, Compound,
    DisorderMode, DisorderSpec, DotGeometry, GeometryError, Margins, Region, Sublattice,
    NO_NEIGHBOR, TETRAHEDRAL,
};

use rayon::prelude::*;

/// `n` realizations per geometry. Realization `i` of a geometry is built from
/// the stream `(base_seed, i)` and nothing else.
pub fn ensemble<'a>(
    geometries: &'a [DotGeometry],
    disorder: &'a DisorderSpec,
    n: usize,
    base_seed: u64,
) -> Result<impl Iterator<Item = Result<AtomisticStructure, GeometryError>> + 'a, GeometryError> {
    if n == 0 {
        return Err(GeometryError::Invalid("ensemble size must be >= 1".into()));
    }
    Ok(geometries.iter().flat_map(move |g| {
        (0..n as u64).map(move |i| build_realization(g, disorder, base_seed, i))
    }))
}

/// Same members as [`ensemble`], built in parallel.
pub fn ensemble_parallel(
    geometries: &[DotGeometry],
    disorder: &DisorderSpec,
    n: usize,
    base_seed: u64,
) -> Result<Vec<AtomisticStructure>, GeometryError> {
    if n == 0 {
        return Err(GeometryError::Invalid("ensemble size must be >= 1".into()));
    }
    let jobs: Vec<(&DotGeometry, u64)> = geometries
        .iter()
        .flat_map(|g| (0..n as u64).map(move |i| (g, i)))
        .collect();
    jobs.into_par_iter()
        .map(|(g, i)| build_realization(g, disorder, base_seed, i))
        .collect()
}

/// Fraction of dot-region cation sites with identical species in `a` and `b`.
pub fn cation_overlap(a: &AtomisticStructure, b: &AtomisticStructure) -> f64 {
    let mut same = 0usize;
    let mut total = 0usize;
    for i in 0..a.len().min(b.len()) {
        if a.sublattice[i] == Sublattice::Cation && a.region[i] == Region::Dot {
            total += 1;
            if a.species_name(i) == b.species_name(i) {
                same += 1;
            }
        }
    }
    if total == 0 {
        1.0
    } else {
        same as f64 / total as f64
    }
}
