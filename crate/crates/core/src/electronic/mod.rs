//! Tight-binding electronic structure: parameter sets, Slater-Koster
//! Hamiltonian assembly on the relaxed structure and the folded-spectrum
//! eigensolver for the conduction ground state.

pub mod basis;
pub mod hamiltonian;
pub mod params;
pub mod slater_koster;
pub mod solver;
pub mod wavefunction;

pub use basis::{BasisTier, Bond, Orbital, Shell, SHELLS};
pub use hamiltonian::{
    assemble, bulk_bands, bulk_hamiltonian, gamma_conduction_edge, gamma_valence_edge, AssembleError,
    AssembleOptions, SparseHamiltonian, NO_BOND,
};
pub use params::{ParamError, ResolvedMaterial, TbMaterial, TbParameterSet, BUNDLED};
pub use slater_koster::{check_direction, reversed, sk_element, slater_koster_block, strain_scale, Integrals, SkError};
pub use solver::{
    auto_window, solve_dense, solve_folded, solve_ground_conduction, start_vector, GapWindow, GroundReport, SolveReport,
    SolverError, SolverOptions,
};
pub use wavefunction::{
    read_wavefunction, wavefunction_paths, write_wavefunction, WaveFunction, WaveFunctionError, WaveFunctionMeta,
};
