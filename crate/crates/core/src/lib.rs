//! Hyperfine coupling between a quantum-dot electron and its nuclear-spin
//! bath, computed from an atomistic tight-binding model, together with the
//! resulting nuclear-field statistics and qubit error budget.
//!
//! The crate is organised as a pipeline:
//!
//! - [`geometry`] builds the zinc-blende lens-shaped dot in a buffer,
//! - [`strain`] relaxes it with a Keating valence force field,
//! - [`electronic`] assembles the tight-binding Hamiltonian and finds the
//!   conduction ground state,
//! - [`hyperfine`] turns that state into per-nucleus couplings,
//! - [`spinbath`] evaluates the effective nuclear field and its fluctuations,
//! - [`errorbudget`] converts field fluctuations into operation errors,
//! - [`pipeline`] orchestrates all of the above with caching.

pub mod electronic;
pub mod errorbudget;
pub mod geometry;
pub mod hyperfine;
pub mod physcore;
pub mod pipeline;
pub mod rng;
pub mod spinbath;
pub mod strain;
