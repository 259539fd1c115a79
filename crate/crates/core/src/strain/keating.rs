//! Keating valence force field.
//!
//! `E = sum_bonds (3 a / 8 d0^2) (r.r - d0^2)^2
//!    + sum_angles (3 b / 8 d0 d0') (r1.r2 + d0 d0' / 3)^2`
//!
//! Mixed vertices use the geometric mean of the two bond-bend constants.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{AtomisticStructure, Sublattice, NO_NEIGHBOR};
use crate::physcore::Database;

#[derive(Debug, Error, PartialEq)]
pub enum StrainError {
    #[error("no VFF parameters for bond {cation}-{anion}")]
    MissingParameters { cation: String, anion: String },
    #[error("invalid VFF parameters for {0}")]
    InvalidParameters(String),
    #[error("tolerance must be positive")]
    BadTolerance,
    #[error("relaxation did not converge after {iterations} iterations (gradient norm {gradient_norm:e} eV/nm)")]
    NotConverged {
        iterations: usize,
        gradient_norm: f64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BondParams {
    /// Ideal bond length, nm.
    pub d0: f64,
    /// Bond-stretch constant, eV/nm^2.
    pub alpha: f64,
    /// Bond-bend constant, eV/nm^2.
    pub beta: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VffModel {
    /// Keyed by (cation, anion).
    pub bonds: BTreeMap<(String, String), BondParams>,
    pub provenance: String,
}

impl VffModel {
    pub fn from_database(db: &Database) -> Result<VffModel, StrainError> {
        let mut bonds = BTreeMap::new();
        for m in db.materials.values() {
            let p = BondParams {
                d0: m.bond_length(),
                alpha: m.keating_alpha,
                beta: m.keating_beta,
            };
            if !(p.d0 > 0.0 && p.alpha > 0.0 && p.beta > 0.0) {
                return Err(StrainError::InvalidParameters(m.name.clone()));
            }
            bonds.insert((m.cation.clone(), m.anion.clone()), p);
        }
        Ok(VffModel {
            bonds,
            provenance: "Keating constants from the species database".into(),
        })
    }

    pub fn params(&self, cation: &str, anion: &str) -> Result<BondParams, StrainError> {
        self.bonds
            .get(&(cation.to_string(), anion.to_string()))
            .copied()
            .ok_or_else(|| StrainError::MissingParameters {
                cation: cation.into(),
                anion: anion.into(),
            })
    }
}

#[derive(Debug, Clone, Copy)]
struct BondTerm {
    i: u32,
    j: u32,
    shift: [f64; 3],
    c: f64,
    d0sq: f64,
}

#[derive(Debug, Clone, Copy)]
struct AngleTerm {
    vertex: u32,
    j: u32,
    shift_j: [f64; 3],
    k: u32,
    shift_k: [f64; 3],
    c: f64,
    offset: f64,
}

/// Bond and angle terms of a structure, resolved against a model.
#[derive(Debug, Clone)]
pub struct VffTerms {
    bonds: Vec<BondTerm>,
    angles: Vec<AngleTerm>,
    n_sites: usize,
}

const CHUNK: usize = 4096;

fn sub(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

fn dot(a: [f64; 3], b: [f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

fn rel(pos: &[[f64; 3]], i: u32, j: u32, shift: [f64; 3]) -> [f64; 3] {
    let pi = pos[i as usize];
    let pj = pos[j as usize];
    [pj[0] + shift[0] - pi[0], pj[1] + shift[1] - pi[1], pj[2] + shift[2] - pi[2]]
}

impl VffTerms {
    pub fn new(structure: &AtomisticStructure, model: &VffModel) -> Result<VffTerms, StrainError> {
        let l = structure.box_size();
        let n = structure.len();
        // Per-slot parameters for every site.
        let mut slot: Vec<[Option<BondParams>; 4]> = vec![[None; 4]; n];
        let mut cache: BTreeMap<(u8, u8), BondParams> = BTreeMap::new();
        for i in 0..n {
            for k in 0..4 {
                let j = structure.neighbors[i][k];
                if j == NO_NEIGHBOR {
                    continue;
                }
                let (c, a) = match structure.sublattice[i] {
                    Sublattice::Cation => (i, j as usize),
                    Sublattice::Anion => (j as usize, i),
                };
                let key = (structure.species[c], structure.species[a]);
                let p = match cache.get(&key) {
                    Some(p) => *p,
                    None => {
                        let p = model.params(structure.species_name(c), structure.species_name(a))?;
                        cache.insert(key, p);
                        p
                    }
                };
                slot[i][k] = Some(p);
            }
        }
        let shift_of = |i: usize, k: usize| {
            let img = structure.images[i][k];
            [img[0] as f64 * l[0], img[1] as f64 * l[1], img[2] as f64 * l[2]]
        };

        let mut bonds = Vec::with_capacity(2 * n);
        for (i, k) in structure.bonds() {
            let p = slot[i][k].expect("bond has parameters");
            bonds.push(BondTerm {
                i: i as u32,
                j: structure.neighbors[i][k],
                shift: shift_of(i, k),
                c: 3.0 * p.alpha / (8.0 * p.d0 * p.d0),
                d0sq: p.d0 * p.d0,
            });
        }
        let mut angles = Vec::with_capacity(6 * n);
        for i in 0..n {
            for a in 0..4 {
                for b in (a + 1)..4 {
                    let (Some(pa), Some(pb)) = (slot[i][a], slot[i][b]) else {
                        continue;
                    };
                    let d0d0 = pa.d0 * pb.d0;
                    let beta = (pa.beta * pb.beta).sqrt();
                    angles.push(AngleTerm {
                        vertex: i as u32,
                        j: structure.neighbors[i][a],
                        shift_j: shift_of(i, a),
                        k: structure.neighbors[i][b],
                        shift_k: shift_of(i, b),
                        c: 3.0 * beta / (8.0 * d0d0),
                        offset: d0d0 / 3.0,
                    });
                }
            }
        }
        Ok(VffTerms {
            bonds,
            angles,
            n_sites: n,
        })
    }

    pub fn n_bonds(&self) -> usize {
        self.bonds.len()
    }

    pub fn energy(&self, pos: &[[f64; 3]]) -> f64 {
        let eb: Vec<f64> = self
            .bonds
            .par_chunks(CHUNK)
            .map(|chunk| {
                chunk
                    .iter()
                    .map(|b| {
                        let r = rel(pos, b.i, b.j, b.shift);
                        let x = dot(r, r) - b.d0sq;
                        b.c * x * x
                    })
                    .sum::<f64>()
            })
            .collect();
        let ea: Vec<f64> = self
            .angles
            .par_chunks(CHUNK)
            .map(|chunk| {
                chunk
                    .iter()
                    .map(|a| {
                        let r1 = rel(pos, a.vertex, a.j, a.shift_j);
                        let r2 = rel(pos, a.vertex, a.k, a.shift_k);
                        let x = dot(r1, r2) + a.offset;
                        a.c * x * x
                    })
                    .sum::<f64>()
            })
            .collect();
        eb.iter().sum::<f64>() + ea.iter().sum::<f64>()
    }

    /// dE/dR for every site, eV/nm.
    pub fn gradient(&self, pos: &[[f64; 3]]) -> Vec<[f64; 3]> {
        let mut g = vec![[0.0; 3]; self.n_sites];
        for b in &self.bonds {
            let r = rel(pos, b.i, b.j, b.shift);
            let f = 4.0 * b.c * (dot(r, r) - b.d0sq);
            for d in 0..3 {
                g[b.j as usize][d] += f * r[d];
                g[b.i as usize][d] -= f * r[d];
            }
        }
        for a in &self.angles {
            let r1 = rel(pos, a.vertex, a.j, a.shift_j);
            let r2 = rel(pos, a.vertex, a.k, a.shift_k);
            let f = 2.0 * a.c * (dot(r1, r2) + a.offset);
            for d in 0..3 {
                g[a.j as usize][d] += f * r2[d];
                g[a.k as usize][d] += f * r1[d];
                g[a.vertex as usize][d] -= f * (r1[d] + r2[d]);
            }
        }
        g
    }

    /// Coefficients `[e0..e4]` of the quartic `E(pos + t dir)`.
    pub fn line_polynomial(&self, pos: &[[f64; 3]], dir: &[[f64; 3]]) -> [f64; 5] {
        let mut e = [0.0; 5];
        let mut add = |c: f64, p0: f64, p1: f64, p2: f64| {
            e[0] += c * p0 * p0;
            e[1] += c * 2.0 * p0 * p1;
            e[2] += c * (p1 * p1 + 2.0 * p0 * p2);
            e[3] += c * 2.0 * p1 * p2;
            e[4] += c * p2 * p2;
        };
        for b in &self.bonds {
            let r = rel(pos, b.i, b.j, b.shift);
            let dr = sub(dir[b.j as usize], dir[b.i as usize]);
            add(b.c, dot(r, r) - b.d0sq, 2.0 * dot(r, dr), dot(dr, dr));
        }
        for a in &self.angles {
            let r1 = rel(pos, a.vertex, a.j, a.shift_j);
            let r2 = rel(pos, a.vertex, a.k, a.shift_k);
            let d1 = sub(dir[a.j as usize], dir[a.vertex as usize]);
            let d2 = sub(dir[a.k as usize], dir[a.vertex as usize]);
            add(a.c, dot(r1, r2) + a.offset, dot(r1, d2) + dot(d1, r2), dot(d1, d2));
        }
        e
    }
}

pub fn vff_energy(structure: &AtomisticStructure, model: &VffModel) -> Result<f64, StrainError> {
    Ok(VffTerms::new(structure, model)?.energy(&structure.positions))
}

/// Per-site forces, `-dE/dR`, eV/nm.
pub fn vff_forces(structure: &AtomisticStructure, model: &VffModel) -> Result<Vec<[f64; 3]>, StrainError> {
    let g = VffTerms::new(structure, model)?.gradient(&structure.positions);
    Ok(g.into_iter().map(|v| [-v[0], -v[1], -v[2]]).collect())
}

/// Per-site energy gradient, eV/nm.
pub fn vff_gradient(structure: &AtomisticStructure, model: &VffModel) -> Result<Vec<[f64; 3]>, StrainError> {
    Ok(VffTerms::new(structure, model)?.gradient(&structure.positions))
}
