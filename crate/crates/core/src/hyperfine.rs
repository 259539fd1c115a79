//! Per-nucleus contact hyperfine couplings from a conduction wavefunction.
//!
//! `A_j = (16 pi / 3) mu_B mu_N g_j |psi(R_j)|^2` with
//! `|psi(R_j)|^2 = |alpha_j phi_s(0) + beta_j phi_s*(0)|^2`. Only the s and s*
//! amplitudes reach the nucleus; p and d amplitudes are ignored.

use std::fmt::Write as _;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::electronic::WaveFunction;
use crate::geometry::{AtomisticStructure, Sublattice, NO_NEIGHBOR};
use crate::physcore::{Database, NuclearSpecies, OrbitalDensities};

#[derive(Debug, Error)]
pub enum HyperfineError {
    #[error("species {0} is not in the database")]
    UnknownSpecies(String),
    #[error("no calibrated densities for {atom} in {host}")]
    Uncalibrated { atom: String, host: String },
    #[error("site {0} has no bonds to infer its host from")]
    NoHost(usize),
    #[error("wavefunction has {wavefunction} sites, structure {structure}")]
    Length { wavefunction: usize, structure: usize },
    #[error("no sites within half a bond of the {0} axis")]
    EmptySelection(&'static str),
    #[error("empty coupling map")]
    EmptyMap,
    #[error("fraction must lie in (0, 1), got {0}")]
    BadFraction(f64),
    #[error("cannot write {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
}

/// `|alpha phi_s(0) + beta phi_s*(0)|^2`, cm^-3. The sign of `phi_s*(0)`
/// relative to `phi_s(0)` follows `ratio`.
pub fn contact_density(alpha: f64, beta: f64, densities: &OrbitalDensities, ratio: f64) -> f64 {
    let (phi_s, phi_ss) = densities.amplitudes(ratio);
    let psi = alpha * phi_s + beta * phi_ss;
    psi * psi
}

fn species<'a>(db: &'a Database, name: &str) -> Result<&'a NuclearSpecies, HyperfineError> {
    db.species
        .get(name)
        .ok_or_else(|| HyperfineError::UnknownSpecies(name.to_string()))
}

fn densities_in(sp: &NuclearSpecies, host: &str) -> Result<OrbitalDensities, HyperfineError> {
    sp.densities_in(host).copied().ok_or_else(|| HyperfineError::Uncalibrated {
        atom: sp.name.clone(),
        host: host.to_string(),
    })
}

/// Orbital densities at `site`. A cation takes those of its own compound; an
/// anion averages over the compounds of its bonded cations.
pub fn site_densities(s: &AtomisticStructure, db: &Database, site: usize) -> Result<OrbitalDensities, HyperfineError> {
    let sp = species(db, s.species_name(site))?;
    if s.sublattice[site] == Sublattice::Cation {
        return densities_in(sp, &s.cation_compound(site).name);
    }
    let mut acc = OrbitalDensities { s: 0.0, s_star: 0.0 };
    let mut n = 0usize;
    for &j in &s.neighbors[site] {
        if j == NO_NEIGHBOR {
            continue;
        }
        let d = densities_in(sp, &s.cation_compound(j as usize).name)?;
        acc.s += d.s;
        acc.s_star += d.s_star;
        n += 1;
    }
    if n == 0 {
        return Err(HyperfineError::NoHost(site));
    }
    acc.s /= n as f64;
    acc.s_star /= n as f64;
    Ok(acc)
}

/// Contact density of `wf` at `site`, cm^-3.
pub fn site_contact_density(
    wf: &WaveFunction,
    s: &AtomisticStructure,
    db: &Database,
    site: usize,
) -> Result<f64, HyperfineError> {
    let sp = species(db, s.species_name(site))?;
    let d = site_densities(s, db, site)?;
    Ok(contact_density(wf.alpha(site), wf.beta(site), &d, sp.orbital_ratio))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MapSummary {
    pub max_coupling_ev: f64,
    pub argmax: usize,
    pub argmax_species: String,
    pub argmax_sublattice: Sublattice,
    /// Distance of the argmax site from the lens centre, nm.
    pub argmax_distance_nm: f64,
    /// Anion couplings over the mean of their bonded cations, summed over
    /// anions above one percent of the maximum.
    pub anion_cation_ratio: f64,
    /// Sites with `A_j > 0.01 max A_j`.
    pub reach_count: usize,
    pub dot_sites: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HyperfineMap {
    /// `A_j`, eV.
    pub coupling: Vec<f64>,
    /// `|psi(R_j)|^2`, cm^-3.
    pub density: Vec<f64>,
    pub structure_id: String,
    pub wavefunction_id: String,
    pub summary: MapSummary,
}

pub fn coupling_map(wf: &WaveFunction, s: &AtomisticStructure, db: &Database) -> Result<HyperfineMap, HyperfineError> {
    if wf.n_sites != s.len() {
        return Err(HyperfineError::Length {
            wavefunction: wf.n_sites,
            structure: s.len(),
        });
    }
    let pre = db.constants.contact_prefactor();
    let pairs: Vec<(f64, f64)> = (0..s.len())
        .into_par_iter()
        .map(|j| {
            let rho = site_contact_density(wf, s, db, j)?;
            let g = species(db, s.species_name(j))?.g_factor;
            Ok((rho, db.constants.erg_to_ev(pre * g * rho)))
        })
        .collect::<Result<_, HyperfineError>>()?;
    let (density, coupling): (Vec<f64>, Vec<f64>) = pairs.into_iter().unzip();
    from_couplings(coupling, density, s)
}

/// Map from precomputed couplings, filling in the summary.
pub fn from_couplings(coupling: Vec<f64>, density: Vec<f64>, s: &AtomisticStructure) -> Result<HyperfineMap, HyperfineError> {
    let summary = summarize(&coupling, s)?;
    Ok(HyperfineMap {
        coupling,
        density,
        structure_id: String::new(),
        wavefunction_id: String::new(),
        summary,
    })
}

fn summarize(a: &[f64], s: &AtomisticStructure) -> Result<MapSummary, HyperfineError> {
    if a.is_empty() {
        return Err(HyperfineError::EmptyMap);
    }
    if a.len() != s.len() {
        return Err(HyperfineError::Length {
            wavefunction: a.len(),
            structure: s.len(),
        });
    }
    let mut argmax = 0;
    for (j, v) in a.iter().enumerate() {
        if *v > a[argmax] {
            argmax = j;
        }
    }
    let max = a[argmax];
    let c = s.lens.center();
    let p = s.positions[argmax];
    let dist = ((p[0] - c[0]).powi(2) + (p[1] - c[1]).powi(2) + (p[2] - c[2]).powi(2)).sqrt();

    let mut num = 0.0;
    let mut den = 0.0;
    for j in 0..s.len() {
        if s.sublattice[j] != Sublattice::Anion || a[j] <= 0.01 * max {
            continue;
        }
        let nb: Vec<f64> = s.neighbors[j].iter().filter(|&&k| k != NO_NEIGHBOR).map(|&k| a[k as usize]).collect();
        if nb.is_empty() {
            continue;
        }
        num += a[j];
        den += nb.iter().sum::<f64>() / nb.len() as f64;
    }
    Ok(MapSummary {
        max_coupling_ev: max,
        argmax,
        argmax_species: s.species_name(argmax).to_string(),
        argmax_sublattice: s.sublattice[argmax],
        argmax_distance_nm: dist,
        anion_cation_ratio: if den > 0.0 { num / den } else { f64::NAN },
        reach_count: a.iter().filter(|&&v| v > 0.01 * max).count(),
        dot_sites: s.region_count(crate::geometry::Region::Dot),
    })
}

/// Number of sites with `A_j > fraction * max A_j`.
pub fn reach_count(map: &HyperfineMap, fraction: f64) -> Result<usize, HyperfineError> {
    if !(fraction > 0.0 && fraction < 1.0) {
        return Err(HyperfineError::BadFraction(fraction));
    }
    let max = map.coupling.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !max.is_finite() {
        return Err(HyperfineError::EmptyMap);
    }
    Ok(map.coupling.iter().filter(|&&v| v > fraction * max).count())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Axis {
    X,
    Z,
}

impl Axis {
    pub fn as_str(self) -> &'static str {
        match self {
            Axis::X => "x",
            Axis::Z => "z",
        }
    }

    fn index(self) -> usize {
        match self {
            Axis::X => 0,
            Axis::Z => 2,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Profile {
    pub axis: Axis,
    /// `(coordinate relative to the lens centre in nm, A_j in eV)`, ascending.
    pub points: Vec<(f64, f64)>,
    /// Where the axis crosses the dot surface, nm from the lens centre.
    pub interfaces: Vec<f64>,
}

/// Couplings of sites within half a bond length of a line through the lens
/// centre. With `bin_width > 0` the points are averaged in bins.
pub fn profile(map: &HyperfineMap, s: &AtomisticStructure, axis: Axis, bin_width: f64) -> Result<Profile, HyperfineError> {
    let c = s.lens.center();
    let half_bond = 0.5 * s.geometry.lattice_constant * 3f64.sqrt() / 4.0;
    let ax = axis.index();
    let mut pts: Vec<(f64, f64)> = (0..s.len())
        .filter(|&j| {
            let p = s.positions[j];
            let off: f64 = (0..3).filter(|&k| k != ax).map(|k| (p[k] - c[k]).powi(2)).sum();
            off.sqrt() <= half_bond
        })
        .map(|j| (s.positions[j][ax] - c[ax], map.coupling[j]))
        .collect();
    if pts.is_empty() {
        return Err(HyperfineError::EmptySelection(axis.as_str()));
    }
    pts.sort_by(|a, b| a.0.total_cmp(&b.0));
    if bin_width > 0.0 {
        let mut binned: Vec<(f64, f64, usize)> = Vec::new();
        for (x, v) in pts {
            let b = (x / bin_width).floor();
            match binned.last_mut() {
                Some(last) if last.0 == b => {
                    last.1 += v;
                    last.2 += 1;
                }
                _ => binned.push((b, v, 1)),
            }
        }
        pts = binned
            .into_iter()
            .map(|(b, v, n)| ((b + 0.5) * bin_width, v / n as f64))
            .collect();
    }
    Ok(Profile {
        axis,
        points: pts,
        interfaces: surface_crossings(s, axis),
    })
}

fn surface_crossings(s: &AtomisticStructure, axis: Axis) -> Vec<f64> {
    let lens = &s.lens;
    if lens.is_degenerate() {
        return Vec::new();
    }
    let c = lens.center();
    let ax = axis.index();
    let at = |t: f64| {
        let mut p = c;
        p[ax] += t;
        lens.contains(p)
    };
    let reach = lens.base_radius.max(lens.height) * 2.0;
    let find = |sign: f64| {
        let (mut lo, mut hi) = (0.0, reach);
        for _ in 0..60 {
            let mid = 0.5 * (lo + hi);
            if at(sign * mid) {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        sign * 0.5 * (lo + hi)
    };
    vec![find(-1.0), find(1.0)]
}

/// 1/e decay length of a profile outside the dot, from a least-squares fit
/// of `ln A` against distance beyond the interface. `None` when fewer than
/// two positive points lie outside.
pub fn decay_length(p: &Profile) -> Option<f64> {
    let (lo, hi) = match p.interfaces.as_slice() {
        [lo, hi] => (*lo, *hi),
        _ => return None,
    };
    let pts: Vec<(f64, f64)> = p
        .points
        .iter()
        .filter(|(x, v)| *v > 0.0 && (*x < lo || *x > hi))
        .map(|(x, v)| (if *x > hi { x - hi } else { lo - x }, v.ln()))
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    if sxx == 0.0 {
        return None;
    }
    let slope = sxy / sxx;
    (slope < 0.0).then(|| -1.0 / slope)
}

fn write_file(path: &Path, text: &str) -> Result<(), HyperfineError> {
    std::fs::write(path, text).map_err(|source| HyperfineError::Io {
        path: path.display().to_string(),
        source,
    })
}

/// Columnar map export: site, element, region, x, y, z (nm), A (eV).
pub fn map_table(map: &HyperfineMap, s: &AtomisticStructure) -> String {
    let mut out = String::from("# site element region x_nm y_nm z_nm A_eV\n");
    for j in 0..s.len() {
        let p = s.positions[j];
        writeln!(
            out,
            "{j} {} {} {:.6} {:.6} {:.6} {:.9e}",
            s.species_name(j),
            s.region[j].as_str(),
            p[0],
            p[1],
            p[2],
            map.coupling[j]
        )
        .expect("string write");
    }
    out
}

pub fn write_map(map: &HyperfineMap, s: &AtomisticStructure, path: &Path) -> Result<(), HyperfineError> {
    write_file(path, &map_table(map, s))
}

/// Two-column series with the interface positions as comment lines.
pub fn profile_table(p: &Profile) -> String {
    let mut out = format!("# axis {} through the lens centre\n", p.axis.as_str());
    for x in &p.interfaces {
        writeln!(out, "# interface {x:.6}").expect("string write");
    }
    out.push_str("# position_nm A_eV\n");
    for (x, v) in &p.points {
        writeln!(out, "{x:.6} {v:.9e}").expect("string write");
    }
    out
}

pub fn write_profile(p: &Profile, path: &Path) -> Result<(), HyperfineError> {
    write_file(path, &profile_table(p))
}
