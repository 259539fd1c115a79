//! Keating valence-force-field strain relaxation.

mod keating;
mod relax;

use std::path::{Path, PathBuf};

pub use keating::{vff_energy, vff_forces, vff_gradient, BondParams, StrainError, VffModel, VffTerms};
pub use relax::{
    bond_geometry, relax, relax_partial, unrelaxed, BondGeometry, RegionStrain, RelaxOptions,
    RelaxationResult, StrainBoundary, StrainSummary,
};

use crate::geometry::{write_structure, StructureIoError};

/// Writes the relaxed structure under `stem` plus `<stem>.strain.json`.
pub fn write_relaxation(
    result: &RelaxationResult,
    model: &VffModel,
    stem: &Path,
) -> Result<Vec<PathBuf>, StructureIoError> {
    let (table, meta) = write_structure(&result.structure, stem)?;
    let summary = result
        .summary(model)
        .map_err(|e| StructureIoError::Parse {
            line: 0,
            message: e.to_string(),
        })?;
    let mut path = stem.as_os_str().to_owned();
    path.push(".strain.json");
    let path = PathBuf::from(path);
    std::fs::write(&path, serde_json::to_string_pretty(&summary)?).map_err(|source| StructureIoError::Io {
        path: path.display().to_string(),
        source,
    })?;
    Ok(vec![table, meta, path])
}
