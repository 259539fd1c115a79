//! Nuclear spin bath: effective field, its fluctuation under the four
//! inhomogeneity sources, and the derived Zeeman spread and T2*.
//!
//! Fields are carried in tesla; the summary table reports gauss.

use std::fmt::Write as _;
use std::path::Path;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::electronic::WaveFunction;
use crate::geometry::{AtomisticStructure, Region, Sublattice};
use crate::hyperfine::HyperfineMap;
use crate::physcore::{Database, PhysicalConstants, GAUSS_PER_TESLA};
use crate::rng;

#[derive(Debug, Error)]
pub enum SpinBathError {
    #[error("unknown nuclear species {0}")]
    UnknownSpecies(String),
    #[error("length mismatch: {what} has {got} entries, expected {expected}")]
    Length { what: &'static str, got: usize, expected: usize },
    #[error("alloy fraction {0} outside [0, 1]")]
    BadFraction(f64),
    #[error("need at least {need} {what}, got {got}")]
    TooFew { what: &'static str, need: usize, got: usize },
    #[error("polarization direction must be a nonzero finite vector")]
    BadDirection,
    #[error("g_e must be finite and nonzero")]
    BadGFactor,
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "mode")]
pub enum SpinMode {
    UnpolarizedSample { seed: u64, draw: u64 },
    Polarized { direction: [f64; 3] },
}

/// Per-site nuclear spin expectation values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NuclearSpinConfig {
    pub mode: SpinMode,
    pub spins: Vec<[f64; 3]>,
}

/// Nuclear spin quantum number of every site.
pub fn spin_values(s: &AtomisticStructure, db: &Database) -> Result<Vec<f64>, SpinBathError> {
    let table: Vec<f64> = s
        .species_names
        .iter()
        .map(|n| db.species(n).map(|sp| sp.spin).ok_or_else(|| SpinBathError::UnknownSpecies(n.clone())))
        .collect::<Result<_, _>>()?;
    Ok(s.species.iter().map(|&k| table[k as usize]).collect())
}

fn unit(v: [f64; 3]) -> Result<[f64; 3], SpinBathError> {
    let n = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
    if !(n.is_finite() && n > 0.0) {
        return Err(SpinBathError::BadDirection);
    }
    Ok([v[0] / n, v[1] / n, v[2] / n])
}

/// One unpolarized draw: a uniform random axis and a uniform projection
/// `m` in `{-I, ..., I}`, scaled by `sqrt(3)` so that `E|<I>|^2 = I(I+1)`.
pub fn draw_unpolarized(spins: &[f64], seed: u64, draw: u64) -> Vec<[f64; 3]> {
    let mut r = rng::stream(seed, draw);
    let k3 = 3f64.sqrt();
    spins
        .iter()
        .map(|&i| {
            let z: f64 = 2.0 * r.random::<f64>() - 1.0;
            let phi: f64 = std::f64::consts::TAU * r.random::<f64>();
            let levels = (2.0 * i).round() as u32 + 1;
            let m = -i + r.random_range(0..levels) as f64;
            let rho = (1.0 - z * z).max(0.0).sqrt();
            let a = k3 * m;
            [a * rho * phi.cos(), a * rho * phi.sin(), a * z]
        })
        .collect()
}

pub fn sample_unpolarized(s: &AtomisticStructure, db: &Database, seed: u64) -> Result<NuclearSpinConfig, SpinBathError> {
    let spins = spin_values(s, db)?;
    Ok(NuclearSpinConfig {
        mode: SpinMode::UnpolarizedSample { seed, draw: 0 },
        spins: draw_unpolarized(&spins, seed, 0),
    })
}

/// Every nucleus fully polarized along `direction`.
pub fn polarized(s: &AtomisticStructure, db: &Database, direction: [f64; 3]) -> Result<NuclearSpinConfig, SpinBathError> {
    let n = unit(direction)?;
    let spins = spin_values(s, db)?;
    Ok(NuclearSpinConfig {
        mode: SpinMode::Polarized { direction: n },
        spins: spins.iter().map(|&i| [i * n[0], i * n[1], i * n[2]]).collect(),
    })
}

fn check_g(g_e: f64) -> Result<(), SpinBathError> {
    if g_e.is_finite() && g_e != 0.0 {
        Ok(())
    } else {
        Err(SpinBathError::BadGFactor)
    }
}

/// `B_N = sum_j A_j <I_j> / (g_e mu_B)`, tesla.
pub fn field_from(coupling: &[f64], spins: &[[f64; 3]], g_e: f64, c: &PhysicalConstants) -> Result<[f64; 3], SpinBathError> {
    check_g(g_e)?;
    if spins.len() != coupling.len() {
        return Err(SpinBathError::Length {
            what: "spin config",
            got: spins.len(),
            expected: coupling.len(),
        });
    }
    let mut b = [0.0; 3];
    for (a, v) in coupling.iter().zip(spins) {
        for k in 0..3 {
            b[k] += a * v[k];
        }
    }
    let scale = 1.0 / (g_e * c.bohr_magneton_ev_per_tesla());
    Ok([b[0] * scale, b[1] * scale, b[2] * scale])
}

pub fn effective_field(map: &HyperfineMap, config: &NuclearSpinConfig, g_e: f64, c: &PhysicalConstants) -> Result<[f64; 3], SpinBathError> {
    field_from(&map.coupling, &config.spins, g_e, c)
}

pub fn norm(v: [f64; 3]) -> f64 {
    (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Source {
    RandomSpins,
    SizeDistribution,
    Alloy,
    Interface,
}

impl Source {
    pub fn label(self) -> &'static str {
        match self {
            Source::RandomSpins => "unpolarized",
            Source::SizeDistribution => "size",
            Source::Alloy => "alloy",
            Source::Interface => "interface",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum Method {
    ClosedForm,
    MonteCarlo {
        samples: usize,
        /// Jackknife standard error of the spread, tesla. NaN below three samples.
        stderr_t: f64,
        degenerate: bool,
    },
    MultiGeometry { geometries: Vec<String> },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum Direction {
    Random,
    Along { n: [f64; 3] },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FieldStatistics {
    pub source: Source,
    pub method: Method,
    /// Mean field, tesla.
    pub mean_field_t: [f64; 3],
    pub delta_b_t: f64,
    pub direction: Direction,
    pub delta_e_ev: f64,
    /// `None` when the spread vanishes.
    pub t2_star_s: Option<f64>,
}

impl FieldStatistics {
    fn new(source: Source, method: Method, mean: [f64; 3], delta_b_t: f64, direction: Direction, g_e: f64, c: &PhysicalConstants) -> Self {
        let (de, t2) = dephasing(delta_b_t, g_e, c);
        FieldStatistics {
            source,
            method,
            mean_field_t: mean,
            delta_b_t,
            direction,
            delta_e_ev: de,
            t2_star_s: t2,
        }
    }

    pub fn delta_b_gauss(&self) -> f64 {
        self.delta_b_t * GAUSS_PER_TESLA
    }

    pub fn stderr_t(&self) -> Option<f64> {
        match self.method {
            Method::MonteCarlo { stderr_t, .. } => Some(stderr_t),
            _ => None,
        }
    }
}

/// Zeeman spread `g_e mu_B dB` (eV) and `T2* = hbar / dE` (s).
pub fn dephasing(delta_b_t: f64, g_e: f64, c: &PhysicalConstants) -> (f64, Option<f64>) {
    let de = (g_e * c.bohr_magneton_ev_per_tesla() * delta_b_t).abs();
    let t2 = if de > 0.0 { Some(c.reduced_planck_ev_s() / de) } else { None };
    (de, t2)
}

/// `sqrt(sum A_j^2 w_j) / (g_e mu_B)` for per-site variances `w_j`.
fn weighted_spread(coupling: &[f64], var: &[f64], g_e: f64, c: &PhysicalConstants) -> Result<f64, SpinBathError> {
    check_g(g_e)?;
    if var.len() != coupling.len() {
        return Err(SpinBathError::Length {
            what: "variance list",
            got: var.len(),
            expected: coupling.len(),
        });
    }
    let s: f64 = coupling.iter().zip(var).map(|(a, w)| a * a * w).sum();
    Ok(s.sqrt() / (g_e * c.bohr_magneton_ev_per_tesla()).abs())
}

/// Closed-form random-spin spread from couplings and spin quantum numbers.
pub fn unpolarized_closed_form(coupling: &[f64], spins: &[f64], g_e: f64, c: &PhysicalConstants) -> Result<FieldStatistics, SpinBathError> {
    let var: Vec<f64> = spins.iter().map(|i| i * (i + 1.0)).collect();
    let db = weighted_spread(coupling, &var, g_e, c)?;
    Ok(FieldStatistics::new(Source::RandomSpins, Method::ClosedForm, [0.0; 3], db, Direction::Random, g_e, c))
}

pub fn delta_unpolarized_closed_form(map: &HyperfineMap, s: &AtomisticStructure, db: &Database, g_e: f64) -> Result<FieldStatistics, SpinBathError> {
    unpolarized_closed_form(&map.coupling, &spin_values(s, db)?, g_e, &db.constants)
}

/// Spread of a set of field samples with its jackknife standard error.
pub fn statistics_from_samples(samples: &[[f64; 3]], g_e: f64, c: &PhysicalConstants) -> Result<FieldStatistics, SpinBathError> {
    let n = samples.len();
    if n < 2 {
        return Err(SpinBathError::TooFew {
            what: "samples",
            need: 2,
            got: n,
        });
    }
    let nf = n as f64;
    let mut mean = [0.0; 3];
    for b in samples {
        for k in 0..3 {
            mean[k] += b[k] / nf;
        }
    }
    let d2: Vec<f64> = samples
        .iter()
        .map(|b| (0..3).map(|k| (b[k] - mean[k]).powi(2)).sum())
        .collect();
    let q: f64 = d2.iter().sum();
    let sigma = (q / (nf - 1.0)).sqrt();
    let stderr = if n >= 3 {
        let loo: Vec<f64> = d2
            .iter()
            .map(|d| ((q - d * nf / (nf - 1.0)).max(0.0) / (nf - 2.0)).sqrt())
            .collect();
        let m = loo.iter().sum::<f64>() / nf;
        ((nf - 1.0) / nf * loo.iter().map(|v| (v - m).powi(2)).sum::<f64>()).sqrt()
    } else {
        f64::NAN
    };
    let method = Method::MonteCarlo {
        samples: n,
        stderr_t: stderr,
        degenerate: sigma == 0.0,
    };
    Ok(FieldStatistics::new(Source::RandomSpins, method, mean, sigma, Direction::Random, g_e, c))
}

/// Field of each unpolarized draw `0..n`, one random stream per draw.
pub fn unpolarized_samples(coupling: &[f64], spins: &[f64], g_e: f64, c: &PhysicalConstants, n: usize, seed: u64) -> Result<Vec<[f64; 3]>, SpinBathError> {
    check_g(g_e)?;
    if spins.len() != coupling.len() {
        return Err(SpinBathError::Length {
            what: "spin list",
            got: spins.len(),
            expected: coupling.len(),
        });
    }
    (0..n as u64)
        .into_par_iter()
        .map(|d| field_from(coupling, &draw_unpolarized(spins, seed, d), g_e, c))
        .collect()
}

pub fn unpolarized_monte_carlo(
    coupling: &[f64],
    spins: &[f64],
    g_e: f64,
    c: &PhysicalConstants,
    n: usize,
    seed: u64,
) -> Result<FieldStatistics, SpinBathError> {
    if n < 2 {
        return Err(SpinBathError::TooFew {
            what: "samples",
            need: 2,
            got: n,
        });
    }
    statistics_from_samples(&unpolarized_samples(coupling, spins, g_e, c, n, seed)?, g_e, c)
}

pub fn delta_unpolarized_monte_carlo(
    map: &HyperfineMap,
    s: &AtomisticStructure,
    db: &Database,
    g_e: f64,
    n: usize,
    seed: u64,
) -> Result<FieldStatistics, SpinBathError> {
    unpolarized_monte_carlo(&map.coupling, &spin_values(s, db)?, g_e, &db.constants, n, seed)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "mode")]
pub enum DisorderSource {
    Alloy { x: f64 },
    Interface,
}

fn cation_spins(s: &AtomisticStructure, db: &Database) -> Result<(f64, f64), SpinBathError> {
    let get = |n: &str| db.species(n).map(|sp| sp.spin).ok_or_else(|| SpinBathError::UnknownSpecies(n.to_string()));
    Ok((get(&s.geometry.dot.cation)?, get(&s.geometry.buffer.cation)?))
}

/// Per-site variance of the polarized spin for a disorder source; zero on
/// anions.
pub fn disorder_variance(s: &AtomisticStructure, db: &Database, source: DisorderSource) -> Result<Vec<f64>, SpinBathError> {
    let (i_dot, i_buf) = cation_spins(s, db)?;
    let d2 = (i_dot - i_buf).powi(2);
    let (w, region) = match source {
        DisorderSource::Alloy { x } => {
            if !(0.0..=1.0).contains(&x) {
                return Err(SpinBathError::BadFraction(x));
            }
            (x * (1.0 - x) * d2, Region::Dot)
        }
        DisorderSource::Interface => (0.25 * d2, Region::Interface),
    };
    Ok((0..s.len())
        .map(|j| {
            if s.sublattice[j] == Sublattice::Cation && s.region[j] == region {
                w
            } else {
                0.0
            }
        })
        .collect())
}

/// Polarized-bath spread from cation occupancy disorder with the couplings
/// held fixed.
pub fn delta_disorder(
    map: &HyperfineMap,
    s: &AtomisticStructure,
    db: &Database,
    g_e: f64,
    source: DisorderSource,
    direction: [f64; 3],
) -> Result<FieldStatistics, SpinBathError> {
    let var = disorder_variance(s, db, source)?;
    let spread = weighted_spread(&map.coupling, &var, g_e, &db.constants)?;
    let cfg = polarized(s, db, direction)?;
    let mean = effective_field(map, &cfg, g_e, &db.constants)?;
    let src = match source {
        DisorderSource::Alloy { .. } => Source::Alloy,
        DisorderSource::Interface => Source::Interface,
    };
    let n = unit(direction)?;
    Ok(FieldStatistics::new(src, Method::ClosedForm, mean, spread, Direction::Along { n }, g_e, &db.constants))
}

/// Polarized field of one geometry.
pub fn polarized_field(map: &HyperfineMap, s: &AtomisticStructure, db: &Database, g_e: f64, direction: [f64; 3]) -> Result<[f64; 3], SpinBathError> {
    effective_field(map, &polarized(s, db, direction)?, g_e, &db.constants)
}

/// Population standard deviation of `|B_N|` over per-geometry polarized
/// fields.
pub fn delta_size(fields: &[(String, [f64; 3])], g_e: f64, c: &PhysicalConstants) -> Result<FieldStatistics, SpinBathError> {
    if fields.len() < 2 {
        return Err(SpinBathError::TooFew {
            what: "geometries",
            need: 2,
            got: fields.len(),
        });
    }
    let n = fields.len() as f64;
    let mags: Vec<f64> = fields.iter().map(|(_, b)| norm(*b)).collect();
    let m = mags.iter().sum::<f64>() / n;
    let sd = (mags.iter().map(|v| (v - m).powi(2)).sum::<f64>() / n).sqrt();
    let mut mean = [0.0; 3];
    for (_, b) in fields {
        for k in 0..3 {
            mean[k] += b[k] / n;
        }
    }
    let dir = unit(mean).map(|n| Direction::Along { n }).unwrap_or(Direction::Random);
    let method = Method::MultiGeometry {
        geometries: fields.iter().map(|(id, _)| id.clone()).collect(),
    };
    Ok(FieldStatistics::new(Source::SizeDistribution, method, mean, sd, dir, g_e, c))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DensityFluctuation {
    /// `(a, b, |<a|b>|)` for every pair `a < b`.
    pub overlaps: Vec<(usize, usize, f64)>,
    /// Mean over pairs and sites of `|rho_a - rho_b|`, over the mean site
    /// density.
    pub relative: f64,
    /// Mean over pairs and sites of `|rho_a - rho_b|`, over the total
    /// density of one state.
    pub per_site_of_total: f64,
}

impl DensityFluctuation {
    pub fn min_overlap(&self) -> f64 {
        self.overlaps.iter().map(|o| o.2).fold(f64::INFINITY, f64::min)
    }
}

/// Pairwise overlaps and site-density fluctuation of normalized states on a
/// common grid.
pub fn overlap_and_density_fluctuation(wfs: &[WaveFunction]) -> Result<DensityFluctuation, SpinBathError> {
    if wfs.len() < 2 {
        return Err(SpinBathError::TooFew {
            what: "wavefunctions",
            need: 2,
            got: wfs.len(),
        });
    }
    let len = wfs[0].coeffs.len();
    for w in wfs {
        if w.coeffs.len() != len || w.n_sites != wfs[0].n_sites {
            return Err(SpinBathError::Length {
                what: "wavefunction",
                got: w.coeffs.len(),
                expected: len,
            });
        }
    }
    let n = wfs[0].n_sites;
    let dens: Vec<Vec<f64>> = wfs
        .iter()
        .map(|w| {
            let z = w.norm_sq();
            (0..n).map(|j| w.site_weight(j) / z).collect()
        })
        .collect();
    let mut overlaps = Vec::new();
    let mut diff = 0.0;
    for a in 0..wfs.len() {
        for b in a + 1..wfs.len() {
            let ov = wfs[a].overlap(&wfs[b]).expect("grid checked") / (wfs[a].norm_sq() * wfs[b].norm_sq()).sqrt();
            overlaps.push((a, b, ov));
            diff += dens[a].iter().zip(&dens[b]).map(|(x, y)| (x - y).abs()).sum::<f64>() / n as f64;
        }
    }
    let pairs = overlaps.len() as f64;
    let mean_abs = diff / pairs;
    let mean_density = 1.0 / n as f64;
    Ok(DensityFluctuation {
        overlaps,
        relative: mean_abs / mean_density,
        per_site_of_total: mean_abs,
    })
}

/// Table of field spreads in gauss, Zeeman spreads in eV and T2* in s.
pub fn table(rows: &[FieldStatistics]) -> String {
    let mut out = String::from("# source\tdB_N_G\tdE_eV\tT2star_s\tmethod\tstderr_G\n");
    for r in rows {
        let (method, err) = match &r.method {
            Method::ClosedForm => ("closed-form".to_string(), "-".to_string()),
            Method::MonteCarlo { samples, stderr_t, .. } => (format!("monte-carlo({samples})"), format!("{:.6e}", stderr_t * GAUSS_PER_TESLA)),
            Method::MultiGeometry { geometries } => (format!("multi-geometry({})", geometries.len()), "-".to_string()),
        };
        let t2 = r.t2_star_s.map(|t| format!("{t:.6e}")).unwrap_or_else(|| "inf".into());
        let _ = writeln!(
            out,
            "{}\t{:.6e}\t{:.6e}\t{}\t{}\t{}",
            r.source.label(),
            r.delta_b_gauss(),
            r.delta_e_ev,
            t2,
            method,
            err
        );
    }
    out
}

pub fn write_table(rows: &[FieldStatistics], path: &Path) -> Result<(), SpinBathError> {
    std::fs::write(path, table(rows))?;
    Ok(())
}
