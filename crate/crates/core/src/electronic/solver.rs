//! Folded-spectrum eigensolver.
//!
//! The states of `H` nearest a target energy `sigma` are the lowest states of
//! `(H - sigma)^2`, found here with thick-restart Lanczos and full
//! reorthogonalization. Each restart keeps the best Ritz vectors, so memory
//! stays at `basis_size` vectors.

use nalgebra::{DMatrix, SymmetricEigen};
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::basis::BasisTier;
use super::hamiltonian::{gamma_conduction_edge, gamma_valence_edge, SparseHamiltonian};
use super::params::{ParamError, TbParameterSet};
use super::wavefunction::WaveFunction;
use crate::geometry::AtomisticStructure;

#[derive(Debug, Error, PartialEq)]
pub enum SolverError {
    #[error("eigensolver did not converge after {matvecs} products; residuals {residuals:?} eV")]
    NotConverged { matvecs: usize, residuals: Vec<f64> },
    #[error("no conduction state found folding at {sigmas:?} eV")]
    NoConductionState { sigmas: Vec<f64> },
    #[error("invalid solver settings: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverOptions {
    /// Target energy, eV. `None` places it automatically.
    pub sigma: Option<f64>,
    pub n_states: usize,
    /// Residual `|H psi - E psi|` accepted as converged, eV.
    pub tol: f64,
    pub basis_size: usize,
    /// Budget of Hamiltonian products.
    pub max_matvecs: usize,
    pub seed: u64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            sigma: None,
            n_states: 2,
            tol: 1e-6,
            basis_size: 40,
            max_matvecs: 400_000,
            seed: 0x5eed,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveReport {
    pub sigma: f64,
    /// Ordered by distance from `sigma`.
    pub states: Vec<WaveFunction>,
    pub matvecs: usize,
    pub restarts: usize,
    /// The nearest state has s character below one half.
    pub valence_like: bool,
}

const CHUNK: usize = 8192;

fn dot(a: &[f64], b: &[f64]) -> f64 {
    let parts: Vec<f64> = a
        .par_chunks(CHUNK)
        .zip(b.par_chunks(CHUNK))
        .map(|(x, y)| x.iter().zip(y).map(|(p, q)| p * q).sum::<f64>())
        .collect();
    parts.iter().sum()
}

fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    y.par_chunks_mut(CHUNK)
        .zip(x.par_chunks(CHUNK))
        .for_each(|(yc, xc)| yc.iter_mut().zip(xc).for_each(|(p, q)| *p += alpha * q));
}

fn scale(alpha: f64, x: &mut [f64]) {
    x.par_chunks_mut(CHUNK).for_each(|c| c.iter_mut().for_each(|v| *v *= alpha));
}

/// Orthogonalize `w` against `basis`; returns the projection coefficients
/// summed over both passes.
fn orthogonalize(basis: &[Vec<f64>], w: &mut [f64]) -> Vec<f64> {
    let mut coef = vec![0.0; basis.len()];
    let before = dot(w, w).sqrt();
    for pass in 0..2 {
        let c: Vec<f64> = basis.iter().map(|v| dot(v, w)).collect();
        for (v, ci) in basis.iter().zip(&c) {
            axpy(-ci, v, w);
        }
        for (acc, ci) in coef.iter_mut().zip(&c) {
            *acc += ci;
        }
        // A second pass is only needed after heavy cancellation.
        if pass == 0 && dot(w, w).sqrt() > 0.7 * before {
            break;
        }
    }
    coef
}

struct Folded<'a> {
    h: &'a SparseHamiltonian,
    sigma: f64,
    tmp: Vec<f64>,
    products: usize,
}

impl Folded<'_> {
    fn apply(&mut self, x: &[f64], y: &mut [f64]) {
        self.h.apply_shifted(x, &mut self.tmp, self.sigma);
        self.h.apply_shifted(&self.tmp, y, self.sigma);
        self.products += 2;
    }
}

/// Rayleigh quotient and residual norm of a unit vector.
fn rayleigh(h: &SparseHamiltonian, x: &[f64], hx: &mut [f64]) -> (f64, f64) {
    h.apply(x, hx);
    let e = dot(x, hx);
    let mut r = hx.to_vec();
    axpy(-e, x, &mut r);
    (e, dot(&r, &r).sqrt())
}

/// Smooth start vector: a Gaussian envelope on s orbitals around the lens
/// centre plus seeded noise on every component.
pub fn start_vector(s: &AtomisticStructure, norb: usize, seed: u64) -> Vec<f64> {
    let c = s.lens.center();
    let wr = (0.5 * s.lens.base_radius).max(1.0);
    let wz = (0.5 * s.lens.height).max(1.0);
    let mut rng = crate::rng::stream(seed, 0x57a7);
    let mut v = vec![0.0; s.len() * norb];
    for i in 0..s.len() {
        let p = s.positions[i];
        let g = (-((p[0] - c[0]).powi(2) + (p[1] - c[1]).powi(2)) / (2.0 * wr * wr)
            - (p[2] - c[2]).powi(2) / (2.0 * wz * wz))
            .exp();
        for k in 0..norb {
            let noise = 1e-3 * (2.0 * rng.random::<f64>() - 1.0);
            v[i * norb + k] = noise + if k == 0 { g } else { 0.0 };
        }
    }
    v
}

/// Lowest `opts.n_states` states of `(H - sigma)^2`.
pub fn solve_folded(
    h: &SparseHamiltonian,
    sigma: f64,
    opts: &SolverOptions,
    start: Option<Vec<f64>>,
) -> Result<SolveReport, SolverError> {
    let n = h.dim();
    let k = opts.n_states;
    if k == 0 || k >= n {
        return Err(SolverError::Invalid(format!("n_states must be in 1..{n}")));
    }
    if !(opts.tol > 0.0) {
        return Err(SolverError::Invalid("tolerance must be positive".into()));
    }
    let m = opts.basis_size.min(n).max(k + 2);
    let keep = (k + (m - k) / 2).min(m - 1).max(k);

    let mut rng = crate::rng::stream(opts.seed, 0x1a2c);
    let mut v0 = start.unwrap_or_else(|| (0..n).map(|_| 2.0 * rng.random::<f64>() - 1.0).collect());
    if v0.len() != n {
        return Err(SolverError::Invalid("start vector has the wrong length".into()));
    }
    let nrm = dot(&v0, &v0).sqrt();
    if nrm == 0.0 {
        return Err(SolverError::Invalid("start vector is zero".into()));
    }
    scale(1.0 / nrm, &mut v0);

    let mut op = Folded {
        h,
        sigma,
        tmp: vec![0.0; n],
        products: 0,
    };
    let mut basis: Vec<Vec<f64>> = vec![v0];
    let mut t = DMatrix::<f64>::zeros(m, m);
    let mut locked = 0usize;
    let mut restarts = 0usize;
    let mut hx = vec![0.0; n];
    let mut residuals;

    loop {
        let mut last = vec![0.0; n];
        let mut last_beta = 0.0;
        for j in locked..m {
            let mut w = vec![0.0; n];
            op.apply(&basis[j], &mut w);
            let c = orthogonalize(&basis, &mut w);
            for (i, ci) in c.iter().enumerate() {
                t[(i, j)] = *ci;
                t[(j, i)] = *ci;
            }
            let mut beta = dot(&w, &w).sqrt();
            if beta < 1e-13 * t[(j, j)].abs().max(1.0) {
                // Invariant subspace: continue with a fresh orthogonal direction.
                w = (0..n).map(|_| 2.0 * rng.random::<f64>() - 1.0).collect();
                orthogonalize(&basis, &mut w);
                let b = dot(&w, &w).sqrt();
                scale(1.0 / b, &mut w);
                beta = 0.0;
            } else {
                scale(1.0 / beta, &mut w);
            }
            if j + 1 < m {
                t[(j + 1, j)] = beta;
                t[(j, j + 1)] = beta;
                basis.push(w);
            } else {
                last = w;
                last_beta = beta;
            }
        }

        let eig = SymmetricEigen::new(t.clone());
        let mut order: Vec<usize> = (0..m).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));

        // Ritz vectors for the kept set.
        let ritz: Vec<Vec<f64>> = order[..keep]
            .iter()
            .map(|&col| {
                let mut x = vec![0.0; n];
                for (j, v) in basis.iter().enumerate() {
                    axpy(eig.eigenvectors[(j, col)], v, &mut x);
                }
                let nx = dot(&x, &x).sqrt();
                scale(1.0 / nx, &mut x);
                x
            })
            .collect();

        residuals = Vec::with_capacity(k);
        let mut energies = Vec::with_capacity(k);
        for x in &ritz[..k] {
            let (e, r) = rayleigh(h, x, &mut hx);
            op.products += 1;
            energies.push(e);
            residuals.push(r);
        }
        log::debug!(
            "lanczos restart {restarts}: {} products, residuals {:?}",
            op.products,
            residuals
        );
        if residuals.iter().all(|r| *r <= opts.tol) {
            let states: Vec<WaveFunction> = ritz
                .into_iter()
                .take(k)
                .zip(energies.iter().zip(&residuals))
                .map(|(x, (e, r))| WaveFunction::new(h.tier, *e, *r, x))
                .collect();
            let valence_like = states[0].s_character() < 0.5;
            if valence_like {
                log::warn!(
                    "state nearest sigma = {sigma} eV has s character {:.3}; sigma may sit below the gap",
                    states[0].s_character()
                );
            }
            return Ok(SolveReport {
                sigma,
                states,
                matvecs: op.products,
                restarts,
                valence_like,
            });
        }
        if op.products >= opts.max_matvecs {
            return Err(SolverError::NotConverged {
                matvecs: op.products,
                residuals,
            });
        }

        // Thick restart: kept Ritz vectors plus the last residual direction.
        t.fill(0.0);
        for (i, &col) in order[..keep].iter().enumerate() {
            t[(i, i)] = eig.eigenvalues[col];
            let coupling = last_beta * eig.eigenvectors[(m - 1, col)];
            t[(i, keep)] = coupling;
            t[(keep, i)] = coupling;
        }
        basis = ritz;
        basis.push(last);
        locked = keep;
        restarts += 1;
    }
}

/// Reference solution by dense diagonalization; the `n_states` eigenpairs
/// nearest `sigma`.
pub fn solve_dense(h: &SparseHamiltonian, sigma: f64, n_states: usize) -> SolveReport {
    let eig = SymmetricEigen::new(h.to_dense());
    let mut order: Vec<usize> = (0..h.dim()).collect();
    order.sort_by(|&a, &b| {
        (eig.eigenvalues[a] - sigma)
            .abs()
            .total_cmp(&(eig.eigenvalues[b] - sigma).abs())
    });
    let mut hx = vec![0.0; h.dim()];
    let states: Vec<WaveFunction> = order[..n_states]
        .iter()
        .map(|&c| {
            let x: Vec<f64> = eig.eigenvectors.column(c).iter().copied().collect();
            let (e, r) = rayleigh(h, &x, &mut hx);
            WaveFunction::new(h.tier, e, r, x)
        })
        .collect();
    let valence_like = states.first().is_some_and(|s| s.s_character() < 0.5);
    SolveReport {
        sigma,
        states,
        matvecs: 0,
        restarts: 0,
        valence_like,
    }
}

/// Where to look for the conduction ground state.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GapWindow {
    /// Initial folding energy, eV.
    pub sigma: f64,
    /// States above this energy count as conduction states, eV.
    pub midgap: f64,
}

/// Offset of the folding energy below the band bottom for tiers without a gap.
const BELOW_BAND: f64 = 1.0;

fn dot_material_name(s: &AtomisticStructure, params: &TbParameterSet) -> Result<String, ParamError> {
    let dot = &s.geometry.dot;
    Ok(match params.material(&dot.name) {
        Some(m) => m.name.clone(),
        None => params.material_for_bond(&dot.cation, &dot.anion)?.name.clone(),
    })
}

/// Gap window from the bulk band edges of the dot material at Gamma. The fold
/// starts at the conduction edge; the midgap separates valence from
/// conduction states. A tier without valence bands folds below the band, so
/// every state counts as conduction.
pub fn auto_window(s: &AtomisticStructure, params: &TbParameterSet, tier: BasisTier) -> Result<GapWindow, ParamError> {
    let name = dot_material_name(s, params)?;
    let cb = gamma_conduction_edge(params, &name, tier)?;
    Ok(match gamma_valence_edge(params, &name, tier)? {
        Some(vb) => GapWindow {
            sigma: cb,
            midgap: 0.5 * (vb + cb),
        },
        None => GapWindow {
            sigma: cb - BELOW_BAND,
            midgap: cb - BELOW_BAND,
        },
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct GroundReport {
    /// Lowest conduction state.
    pub ground: WaveFunction,
    /// Conduction states found by the last fold, ascending in energy.
    pub conduction: Vec<WaveFunction>,
    /// Folding energies tried, in order.
    pub sigmas: Vec<f64>,
    pub matvecs: usize,
    pub valence_like: bool,
}

const MAX_REFOLDS: usize = 6;

/// Lowest conduction state. Folds at `window.sigma`, then moves the fold
/// until the states returned bracket the gap: the lowest conduction state is
/// certain once the band of returned states reaches down to the midgap.
pub fn solve_ground_conduction(
    h: &SparseHamiltonian,
    window: GapWindow,
    opts: &SolverOptions,
    start: Option<Vec<f64>>,
) -> Result<GroundReport, SolverError> {
    if !(window.sigma.is_finite() && window.midgap.is_finite()) {
        return Err(SolverError::Invalid(format!("gap window {window:?} is not finite")));
    }
    let mut sigma = window.sigma;
    let mut start = start;
    let mut sigmas = Vec::new();
    let mut matvecs = 0;
    let mut valence_like = false;
    let mut best: Option<(WaveFunction, Vec<WaveFunction>)> = None;
    for _ in 0..MAX_REFOLDS {
        sigmas.push(sigma);
        let r = solve_folded(h, sigma, opts, start.take())?;
        matvecs += r.matvecs;
        valence_like |= r.valence_like;
        let reach = r.states.iter().map(|w| (w.energy - sigma).abs()).fold(0.0, f64::max);
        let mut conduction: Vec<WaveFunction> = r.states.iter().filter(|w| w.energy > window.midgap).cloned().collect();
        conduction.sort_by(|a, b| a.energy.total_cmp(&b.energy));
        if conduction.is_empty() {
            // Only valence states in reach: step up past the nearest one.
            sigma += reach.max(1e-3);
            continue;
        }
        let ground = conduction[0].clone();
        if sigma - reach <= window.midgap {
            return Ok(GroundReport {
                ground,
                conduction,
                sigmas,
                matvecs,
                valence_like,
            });
        }
        sigma = 0.5 * (ground.energy + window.midgap);
        start = Some(ground.coeffs.clone());
        best = Some((ground, conduction));
    }
    match best {
        Some((ground, conduction)) => {
            log::warn!("lowest conduction state not bracketed after {MAX_REFOLDS} folds; keeping E = {} eV", ground.energy);
            Ok(GroundReport {
                ground,
                conduction,
                sigmas,
                matvecs,
                valence_like,
            })
        }
        None => Err(SolverError::NoConductionState { sigmas }),
    }
}
