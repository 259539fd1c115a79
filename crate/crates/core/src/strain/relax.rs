//! Nonlinear conjugate-gradient relaxation with an exact quartic line search.

use serde::{Deserialize, Serialize};

use super::keating::{StrainError, VffModel, VffTerms};
use crate::geometry::{AtomisticStructure, Region};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum StrainBoundary {
    /// Sites whose ideal position lies within `shell` nm of a box face are fixed.
    Pinned { shell: f64 },
    /// Nothing is fixed; the structure's own topology supplies periodicity.
    Free,
}

impl Default for StrainBoundary {
    fn default() -> Self {
        StrainBoundary::Pinned { shell: 0.3 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RelaxOptions {
    /// Largest per-atom gradient magnitude accepted as converged, eV/nm.
    pub tol: f64,
    pub max_iter: usize,
    pub boundary: StrainBoundary,
}

impl Default for RelaxOptions {
    fn default() -> Self {
        RelaxOptions {
            tol: 1e-6,
            max_iter: 20_000,
            boundary: StrainBoundary::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BondGeometry {
    pub cation: u32,
    pub slot: u8,
    pub length: f64,
    /// Direction cosines (l, m, n) from cation to anion.
    pub cosines: [f64; 3],
}

#[derive(Debug, Clone, PartialEq)]
pub struct RelaxationResult {
    pub structure: AtomisticStructure,
    pub energy: f64,
    pub gradient_norm: f64,
    pub iterations: usize,
    pub converged: bool,
    pub bonds: Vec<BondGeometry>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegionStrain {
    pub bonds: usize,
    /// Mean of (d - d0)/d0.
    pub mean: f64,
    pub std: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StrainSummary {
    pub energy: f64,
    pub gradient_norm: f64,
    pub iterations: usize,
    pub converged: bool,
    pub dot: RegionStrain,
    pub interface: RegionStrain,
    pub buffer: RegionStrain,
}

/// Largest per-site gradient magnitude over free sites.
fn gradient_norm(g: &[[f64; 3]], free: &[bool]) -> f64 {
    g.iter()
        .zip(free)
        .filter(|(_, f)| **f)
        .map(|(v, _)| (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt())
        .fold(0.0, f64::max)
}

fn free_mask(s: &AtomisticStructure, boundary: StrainBoundary) -> Vec<bool> {
    match boundary {
        StrainBoundary::Free => vec![true; s.len()],
        StrainBoundary::Pinned { shell } => {
            let l = s.box_size();
            let q = 0.25 * s.geometry.lattice_constant;
            (0..s.len())
                .map(|i| {
                    (0..3).all(|d| {
                        let x = s.lattice[i][d] as f64 * q;
                        x >= shell - 1e-9 && l[d] - x > shell + 1e-9
                    })
                })
                .collect()
        }
    }
}

/// Real roots of `c3 t^3 + c2 t^2 + c1 t + c0`.
fn cubic_roots(c3: f64, c2: f64, c1: f64, c0: f64) -> Vec<f64> {
    let scale = c3.abs().max(c2.abs()).max(c1.abs()).max(c0.abs());
    if scale == 0.0 {
        return vec![];
    }
    if c3.abs() <= 1e-14 * scale {
        if c2.abs() <= 1e-14 * scale {
            return if c1 != 0.0 { vec![-c0 / c1] } else { vec![] };
        }
        let disc = c1 * c1 - 4.0 * c2 * c0;
        if disc < 0.0 {
            return vec![];
        }
        let q = -0.5 * (c1 + c1.signum() * disc.sqrt());
        let mut r = vec![q / c2];
        if q != 0.0 {
            r.push(c0 / q);
        }
        return r;
    }
    let (a, b, c) = (c2 / c3, c1 / c3, c0 / c3);
    let q = (a * a - 3.0 * b) / 9.0;
    let r = (2.0 * a * a * a - 9.0 * a * b + 27.0 * c) / 54.0;
    let mut roots = if r * r < q * q * q {
        let theta = (r / (q * q * q).sqrt()).clamp(-1.0, 1.0).acos();
        let s = -2.0 * q.sqrt();
        vec![
            s * (theta / 3.0).cos() - a / 3.0,
            s * ((theta + std::f64::consts::TAU) / 3.0).cos() - a / 3.0,
            s * ((theta - std::f64::consts::TAU) / 3.0).cos() - a / 3.0,
        ]
    } else {
        let big = -r.signum() * (r.abs() + (r * r - q * q * q).sqrt()).cbrt();
        let small = if big != 0.0 { q / big } else { 0.0 };
        vec![big + small - a / 3.0]
    };
    for t in &mut roots {
        for _ in 0..3 {
            let f = ((c3 * *t + c2) * *t + c1) * *t + c0;
            let df = (3.0 * c3 * *t + 2.0 * c2) * *t + c1;
            if df != 0.0 {
                *t -= f / df;
            }
        }
    }
    roots
}

fn eval_quartic(e: &[f64; 5], t: f64) -> f64 {
    (((e[4] * t + e[3]) * t + e[2]) * t + e[1]) * t + e[0]
}

/// Step length minimising the quartic along the search direction, if any
/// positive step lowers it.
pub(crate) fn quartic_step(e: &[f64; 5]) -> Option<f64> {
    let roots = cubic_roots(4.0 * e[4], 3.0 * e[3], 2.0 * e[2], e[1]);
    roots
        .into_iter()
        .filter(|t| *t > 0.0 && t.is_finite())
        .map(|t| (t, eval_quartic(e, t)))
        .filter(|(_, v)| *v <= e[0])
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .map(|(t, _)| t)
}

pub fn bond_geometry(s: &AtomisticStructure) -> Vec<BondGeometry> {
    s.bonds()
        .map(|(i, k)| {
            let r = s.bond_vector_with(&s.positions, i, k);
            let d = (r[0] * r[0] + r[1] * r[1] + r[2] * r[2]).sqrt();
            BondGeometry {
                cation: i as u32,
                slot: k as u8,
                length: d,
                cosines: [r[0] / d, r[1] / d, r[2] / d],
            }
        })
        .collect()
}

/// Relax `structure` to the Keating minimum. A run that exhausts `max_iter`
/// returns `NotConverged` with the final norm.
pub fn relax(
    structure: &AtomisticStructure,
    model: &VffModel,
    opts: &RelaxOptions,
) -> Result<RelaxationResult, StrainError> {
    match relax_partial(structure, model, opts)? {
        r if r.converged => Ok(r),
        r => Err(StrainError::NotConverged {
            iterations: r.iterations,
            gradient_norm: r.gradient_norm,
        }),
    }
}

/// Like [`relax`] but returns the last iterate even when not converged.
pub fn relax_partial(
    structure: &AtomisticStructure,
    model: &VffModel,
    opts: &RelaxOptions,
) -> Result<RelaxationResult, StrainError> {
    if !(opts.tol > 0.0) {
        return Err(StrainError::BadTolerance);
    }
    let terms = VffTerms::new(structure, model)?;
    let free = free_mask(structure, opts.boundary);
    let mut pos = structure.positions.clone();
    let n = pos.len();

    let project = |g: &mut Vec<[f64; 3]>| {
        for (v, f) in g.iter_mut().zip(&free) {
            if !*f {
                *v = [0.0; 3];
            }
        }
    };
    let dotv = |a: &[[f64; 3]], b: &[[f64; 3]]| -> f64 {
        a.iter().zip(b).map(|(x, y)| x[0] * y[0] + x[1] * y[1] + x[2] * y[2]).sum()
    };

    let mut g = terms.gradient(&pos);
    project(&mut g);
    let mut energy = terms.energy(&pos);
    let mut gnorm = gradient_norm(&g, &free);
    let mut dir: Vec<[f64; 3]> = g.iter().map(|v| [-v[0], -v[1], -v[2]]).collect();
    let mut gg = dotv(&g, &g);
    let mut iterations = 0;
    let mut stalled = 0;

    while gnorm > opts.tol && iterations < opts.max_iter {
        iterations += 1;
        let poly = terms.line_polynomial(&pos, &dir);
        let step = quartic_step(&poly);
        let Some(t) = step else {
            // Not a descent direction; restart along steepest descent.
            stalled += 1;
            if stalled > 2 {
                break;
            }
            dir = g.iter().map(|v| [-v[0], -v[1], -v[2]]).collect();
            continue;
        };
        stalled = 0;
        for i in 0..n {
            for d in 0..3 {
                pos[i][d] += t * dir[i][d];
            }
        }
        let new_energy = terms.energy(&pos);
        let mut g_new = terms.gradient(&pos);
        project(&mut g_new);
        let gg_new = dotv(&g_new, &g_new);
        // Polak-Ribiere with automatic restart.
        let cross = dotv(&g_new, &g);
        let beta = ((gg_new - cross) / gg).max(0.0);
        for i in 0..n {
            for d in 0..3 {
                dir[i][d] = -g_new[i][d] + beta * dir[i][d];
            }
        }
        if dotv(&dir, &g_new) >= 0.0 {
            dir = g_new.iter().map(|v| [-v[0], -v[1], -v[2]]).collect();
        }
        g = g_new;
        gg = gg_new;
        gnorm = gradient_norm(&g, &free);
        energy = new_energy;
        log::trace!("vff iter {iterations}: E = {energy:e} eV, |g| = {gnorm:e}");
    }

    let relaxed = structure.with_positions(pos);
    let bonds = bond_geometry(&relaxed);
    Ok(RelaxationResult {
        converged: gnorm <= opts.tol,
        structure: relaxed,
        energy,
        gradient_norm: gnorm,
        iterations,
        bonds,
    })
}

/// Unrelaxed pass-through used when strain is disabled.
pub fn unrelaxed(structure: &AtomisticStructure, model: &VffModel) -> Result<RelaxationResult, StrainError> {
    let terms = VffTerms::new(structure, model)?;
    let g = terms.gradient(&structure.positions);
    Ok(RelaxationResult {
        energy: terms.energy(&structure.positions),
        gradient_norm: gradient_norm(&g, &vec![true; structure.len()]),
        iterations: 0,
        converged: false,
        bonds: bond_geometry(structure),
        structure: structure.clone(),
    })
}

impl RelaxationResult {
    pub fn summary(&self, model: &VffModel) -> Result<StrainSummary, StrainError> {
        let s = &self.structure;
        let mut acc = [(0usize, 0.0f64, 0.0f64); 3];
        for b in &self.bonds {
            let c = b.cation as usize;
            let a = s.neighbors[c][b.slot as usize] as usize;
            let d0 = model.params(s.species_name(c), s.species_name(a))?.d0;
            let dev = (b.length - d0) / d0;
            let slot = match s.region[c] {
                Region::Dot => 0,
                Region::Interface => 1,
                Region::Buffer => 2,
            };
            acc[slot].0 += 1;
            acc[slot].1 += dev;
            acc[slot].2 += dev * dev;
        }
        let stat = |(n, s1, s2): (usize, f64, f64)| {
            if n == 0 {
                return RegionStrain {
                    bonds: 0,
                    mean: 0.0,
                    std: 0.0,
                };
            }
            let mean = s1 / n as f64;
            RegionStrain {
                bonds: n,
                mean,
                std: (s2 / n as f64 - mean * mean).max(0.0).sqrt(),
            }
        };
        Ok(StrainSummary {
            energy: self.energy,
            gradient_norm: self.gradient_norm,
            iterations: self.iterations,
            converged: self.converged,
            dot: stat(acc[0]),
            interface: stat(acc[1]),
            buffer: stat(acc[2]),
        })
    }
}
