//! Bond-indexed sparse tight-binding Hamiltonian.

use std::collections::BTreeMap;

use nalgebra::{Complex, DMatrix};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::basis::BasisTier;
use super::params::{ParamError, ResolvedMaterial, TbParameterSet};
use super::slater_koster::{slater_koster_block, strain_scale, Integrals, SkError};
use crate::geometry::{AtomisticStructure, Sublattice, NO_NEIGHBOR, TETRAHEDRAL};

pub const NO_BOND: u32 = u32::MAX;

#[derive(Debug, Error)]
pub enum AssembleError {
    #[error(transparent)]
    Params(#[from] ParamError),
    #[error("bond {cation}-{anion}: {source}")]
    Geometry {
        cation: usize,
        anion: usize,
        source: SkError,
    },
    #[error("site {0} has no bonds")]
    Isolated(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AssembleOptions {
    /// Scale two-center integrals by `(d0/d)^eta` with the actual bond length.
    pub harrison: bool,
    /// Add the linear on-site strain shift when the parameter set has one.
    pub lowdin: bool,
}

impl Default for AssembleOptions {
    fn default() -> Self {
        AssembleOptions {
            harrison: true,
            lowdin: true,
        }
    }
}

impl AssembleOptions {
    /// Bulk integrals everywhere regardless of bond geometry.
    pub fn unstrained() -> Self {
        AssembleOptions {
            harrison: false,
            lowdin: false,
        }
    }
}

/// Real symmetric Hamiltonian stored as on-site diagonals plus one
/// `norb x norb` block per bond (cation orbitals as rows). The anion side of
/// every bond reads the transpose of the same block, so the matrix is exactly
/// symmetric by construction.
///
/// Vector layout is site-major: entry `site * norb + orbital`.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseHamiltonian {
    pub tier: BasisTier,
    pub n_sites: usize,
    pub onsite: Vec<f64>,
    pub blocks: Vec<f64>,
    /// `[cation, anion]` of each bond.
    pub bond_sites: Vec<[u32; 2]>,
    /// Bond index per site and neighbour slot, `NO_BOND` where cut.
    pub adjacency: Vec<[u32; 4]>,
    pub is_cation: Vec<bool>,
}

impl SparseHamiltonian {
    pub fn norb(&self) -> usize {
        self.tier.norb()
    }

    pub fn dim(&self) -> usize {
        self.n_sites * self.norb()
    }

    pub fn n_bonds(&self) -> usize {
        self.bond_sites.len()
    }

    pub fn storage_order(&self) -> String {
        format!(
            "site-major, {} orbitals per site ({}), bond blocks cation-row",
            self.norb(),
            self.tier
                .orbitals()
                .iter()
                .map(|o| o.as_str())
                .collect::<Vec<_>>()
                .join(",")
        )
    }

    fn block(&self, b: usize) -> &[f64] {
        let nn = self.norb() * self.norb();
        &self.blocks[b * nn..(b + 1) * nn]
    }

    /// `y = (H - shift) x`.
    pub fn apply_shifted(&self, x: &[f64], y: &mut [f64], shift: f64) {
        let no = self.norb();
        assert_eq!(x.len(), self.dim());
        assert_eq!(y.len(), self.dim());
        y.par_chunks_mut(no).enumerate().for_each(|(i, yi)| {
            let xi = &x[i * no..(i + 1) * no];
            let di = &self.onsite[i * no..(i + 1) * no];
            for a in 0..no {
                yi[a] = (di[a] - shift) * xi[a];
            }
            for &b in &self.adjacency[i] {
                if b == NO_BOND {
                    continue;
                }
                let blk = self.block(b as usize);
                let [c, an] = self.bond_sites[b as usize];
                if self.is_cation[i] {
                    let xj = &x[an as usize * no..(an as usize + 1) * no];
                    for a in 0..no {
                        let row = &blk[a * no..(a + 1) * no];
                        let mut s = 0.0;
                        for k in 0..no {
                            s += row[k] * xj[k];
                        }
                        yi[a] += s;
                    }
                } else {
                    let xj = &x[c as usize * no..(c as usize + 1) * no];
                    for k in 0..no {
                        let row = &blk[k * no..(k + 1) * no];
                        let xk = xj[k];
                        for a in 0..no {
                            yi[a] += row[a] * xk;
                        }
                    }
                }
            }
        });
    }

    pub fn apply(&self, x: &[f64], y: &mut [f64]) {
        self.apply_shifted(x, y, 0.0)
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let no = self.norb();
        let n = self.dim();
        let mut h = DMatrix::zeros(n, n);
        for i in 0..self.n_sites {
            for a in 0..no {
                h[(i * no + a, i * no + a)] += self.onsite[i * no + a];
            }
        }
        for (b, &[c, an]) in self.bond_sites.iter().enumerate() {
            let blk = self.block(b);
            for a in 0..no {
                for k in 0..no {
                    let v = blk[a * no + k];
                    h[(c as usize * no + a, an as usize * no + k)] += v;
                    h[(an as usize * no + k, c as usize * no + a)] += v;
                }
            }
        }
        h
    }

    /// Same Hamiltonian with every on-site energy moved by `c`.
    pub fn shifted(&self, c: f64) -> SparseHamiltonian {
        let mut out = self.clone();
        for e in &mut out.onsite {
            *e += c;
        }
        out
    }
}

fn scaled_integrals(m: &ResolvedMaterial, d: f64, harrison: bool) -> Result<Integrals, SkError> {
    if !harrison {
        return Ok(m.integrals);
    }
    let mut v = m.integrals;
    for a in 0..4 {
        for b in 0..4 {
            for t in 0..3 {
                if v[a][b][t] != 0.0 {
                    v[a][b][t] = strain_scale(v[a][b][t], m.bond_length, d, m.eta[a][b][t])?;
                }
            }
        }
    }
    Ok(v)
}

pub fn assemble(
    s: &AtomisticStructure,
    params: &TbParameterSet,
    tier: BasisTier,
    opts: &AssembleOptions,
) -> Result<SparseHamiltonian, AssembleError> {
    let no = tier.norb();
    let n = s.len();

    // Resolved material per (cation species, anion species) present.
    let mut materials: Vec<ResolvedMaterial> = Vec::new();
    let mut by_pair: BTreeMap<(u8, u8), usize> = BTreeMap::new();
    let mut bond_sites = Vec::new();
    let mut bond_material = Vec::new();
    let mut adjacency = vec![[NO_BOND; 4]; n];
    for (i, k) in s.bonds() {
        let j = s.neighbors[i][k] as usize;
        let key = (s.species[i], s.species[j]);
        let idx = match by_pair.get(&key) {
            Some(&x) => x,
            None => {
                let m = params.material_for_bond(s.species_name(i), s.species_name(j))?;
                materials.push(params.resolve(m, tier)?);
                by_pair.insert(key, materials.len() - 1);
                materials.len() - 1
            }
        };
        adjacency[i][k] = bond_sites.len() as u32;
        bond_sites.push([i as u32, j as u32]);
        bond_material.push(idx);
    }
    // The anion slot k bond is the cation slot k bond seen from the other end.
    for j in 0..n {
        if s.sublattice[j] != Sublattice::Anion {
            continue;
        }
        for k in 0..4 {
            let c = s.neighbors[j][k];
            if c != NO_NEIGHBOR {
                adjacency[j][k] = adjacency[c as usize][k];
            }
        }
    }

    let bond_geom: Vec<(f64, [f64; 3])> = s
        .bonds()
        .map(|(i, k)| {
            let r = s.bond_vector_with(&s.positions, i, k);
            let d = (r[0] * r[0] + r[1] * r[1] + r[2] * r[2]).sqrt();
            (d, [r[0] / d, r[1] / d, r[2] / d])
        })
        .collect();

    let nn = no * no;
    let mut blocks = vec![0.0; bond_sites.len() * nn];
    blocks
        .par_chunks_mut(nn)
        .enumerate()
        .try_for_each(|(b, out)| -> Result<(), AssembleError> {
            let m = &materials[bond_material[b]];
            let (d, dir) = bond_geom[b];
            let err = |source| AssembleError::Geometry {
                cation: bond_sites[b][0] as usize,
                anion: bond_sites[b][1] as usize,
                source,
            };
            let v = scaled_integrals(m, d, opts.harrison).map_err(err)?;
            let blk = slater_koster_block(dir, &v, tier).map_err(err)?;
            out.copy_from_slice(&blk);
            Ok(())
        })?;

    let shells: Vec<usize> = tier.orbitals().iter().map(|o| o.shell() as usize).collect();
    let mut onsite = vec![0.0; n * no];
    onsite
        .par_chunks_mut(no)
        .enumerate()
        .try_for_each(|(i, out)| -> Result<(), AssembleError> {
            let cation = s.sublattice[i] == Sublattice::Cation;
            let mut count = 0usize;
            let mut strain = 0.0;
            let mut e = [0.0; 4];
            let mut lw = [0.0; 4];
            for &b in &adjacency[i] {
                if b == NO_BOND {
                    continue;
                }
                let m = &materials[bond_material[b as usize]];
                let (src, lsrc) = if cation {
                    (&m.onsite_cation, &m.lowdin_cation)
                } else {
                    (&m.onsite_anion, &m.lowdin_anion)
                };
                for sh in 0..4 {
                    e[sh] += src[sh];
                    lw[sh] += lsrc[sh];
                }
                strain += (bond_geom[b as usize].0 - m.bond_length) / m.bond_length;
                count += 1;
            }
            if count == 0 {
                return Err(AssembleError::Isolated(i));
            }
            let inv = 1.0 / count as f64;
            let eps = strain * inv;
            for (a, &sh) in shells.iter().enumerate() {
                out[a] = e[sh] * inv;
                if opts.lowdin {
                    out[a] += lw[sh] * inv * eps;
                }
            }
            Ok(())
        })?;

    Ok(SparseHamiltonian {
        tier,
        n_sites: n,
        onsite,
        blocks,
        bond_sites,
        adjacency,
        is_cation: s.sublattice.iter().map(|&x| x == Sublattice::Cation).collect(),
    })
}

/// Two-atom Bloch Hamiltonian of bulk `material` at wavevector `k` (1/nm),
/// cation at the origin and anion at `a/4 (1,1,1)`.
pub fn bulk_hamiltonian(
    params: &TbParameterSet,
    material: &str,
    tier: BasisTier,
    k: [f64; 3],
) -> Result<DMatrix<Complex<f64>>, ParamError> {
    let tb = params.material(material).ok_or_else(|| ParamError::Invalid {
        set: params.name.clone(),
        message: format!("no material {material}"),
    })?;
    let m = params.resolve(tb, tier)?;
    let no = tier.norb();
    let quarter = m.bond_length / 3f64.sqrt();
    let mut h = DMatrix::<Complex<f64>>::zeros(2 * no, 2 * no);
    for (a, o) in tier.orbitals().iter().enumerate() {
        h[(a, a)] = Complex::new(m.onsite_cation[o.shell() as usize], 0.0);
        h[(no + a, no + a)] = Complex::new(m.onsite_anion[o.shell() as usize], 0.0);
    }
    let inv = 1.0 / 3f64.sqrt();
    for t in TETRAHEDRAL {
        let dir = [t[0] as f64 * inv, t[1] as f64 * inv, t[2] as f64 * inv];
        let d = [t[0] as f64 * quarter, t[1] as f64 * quarter, t[2] as f64 * quarter];
        let phase = Complex::from_polar(1.0, k[0] * d[0] + k[1] * d[1] + k[2] * d[2]);
        let blk = slater_koster_block(dir, &m.integrals, tier).expect("unit direction");
        for a in 0..no {
            for b in 0..no {
                let v = phase * blk[a * no + b];
                h[(a, no + b)] += v;
                h[(no + b, a)] += v.conj();
            }
        }
    }
    Ok(h)
}

/// Ascending band energies of bulk `material` at `k`.
pub fn bulk_bands(params: &TbParameterSet, material: &str, tier: BasisTier, k: [f64; 3]) -> Result<Vec<f64>, ParamError> {
    let h = bulk_hamiltonian(params, material, tier, k)?;
    let mut e: Vec<f64> = h.symmetric_eigenvalues().iter().copied().collect();
    e.sort_by(f64::total_cmp);
    Ok(e)
}

/// Lowest conduction band energy at Gamma.
pub fn gamma_conduction_edge(params: &TbParameterSet, material: &str, tier: BasisTier) -> Result<f64, ParamError> {
    Ok(bulk_bands(params, material, tier, [0.0; 3])?[tier.valence_bands()])
}

/// Highest valence band energy at Gamma, if the tier has valence bands.
pub fn gamma_valence_edge(params: &TbParameterSet, material: &str, tier: BasisTier) -> Result<Option<f64>, ParamError> {
    let v = tier.valence_bands();
    if v == 0 {
        return Ok(None);
    }
    Ok(Some(bulk_bands(params, material, tier, [0.0; 3])?[v - 1]))
}
