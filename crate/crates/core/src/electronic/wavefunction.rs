use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::basis::BasisTier;

#[derive(Debug, Error)]
pub enum WaveFunctionError {
    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("bad sidecar: {0}")]
    Meta(#[from] serde_json::Error),
    #[error("array holds {found} values, sidecar promises {expected}")]
    Length { expected: usize, found: usize },
    #[error("wavefunctions live on different grids ({0} vs {1} values)")]
    GridMismatch(usize, usize),
}

/// One eigenstate, site-major amplitudes `coeffs[site * norb + orbital]`.
#[derive(Debug, Clone, PartialEq)]
pub struct WaveFunction {
    pub tier: BasisTier,
    pub n_sites: usize,
    /// eV.
    pub energy: f64,
    /// `|H psi - E psi|`, eV.
    pub residual: f64,
    pub coeffs: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WaveFunctionMeta {
    pub tier: BasisTier,
    pub orbitals: Vec<String>,
    pub layout: String,
    pub n_sites: usize,
    pub norb: usize,
    pub energy_ev: f64,
    pub residual_ev: f64,
    pub s_character: f64,
}

impl WaveFunction {
    pub fn new(tier: BasisTier, energy: f64, residual: f64, mut coeffs: Vec<f64>) -> WaveFunction {
        let norb = tier.norb();
        assert_eq!(coeffs.len() % norb, 0);
        // Fix the arbitrary global sign: largest amplitude positive.
        let mut best = 0usize;
        for (i, c) in coeffs.iter().enumerate() {
            if c.abs() > coeffs[best].abs() {
                best = i;
            }
        }
        if coeffs.get(best).is_some_and(|c| *c < 0.0) {
            coeffs.iter_mut().for_each(|c| *c = -*c);
        }
        WaveFunction {
            tier,
            n_sites: coeffs.len() / norb,
            energy,
            residual,
            coeffs,
        }
    }

    pub fn norb(&self) -> usize {
        self.tier.norb()
    }

    pub fn site(&self, site: usize) -> &[f64] {
        let n = self.norb();
        &self.coeffs[site * n..(site + 1) * n]
    }

    /// s amplitude at `site`.
    pub fn alpha(&self, site: usize) -> f64 {
        self.coeffs[site * self.norb() + self.tier.s_index()]
    }

    /// s* amplitude at `site`, zero for tiers without s*.
    pub fn beta(&self, site: usize) -> f64 {
        match self.tier.s_star_index() {
            Some(k) => self.coeffs[site * self.norb() + k],
            None => 0.0,
        }
    }

    pub fn site_weight(&self, site: usize) -> f64 {
        self.site(site).iter().map(|c| c * c).sum()
    }

    pub fn norm_sq(&self) -> f64 {
        self.coeffs.iter().map(|c| c * c).sum()
    }

    /// Weight on s and s* orbitals.
    pub fn s_character(&self) -> f64 {
        (0..self.n_sites)
            .map(|i| self.alpha(i).powi(2) + self.beta(i).powi(2))
            .sum::<f64>()
            / self.norm_sq()
    }

    pub fn overlap(&self, other: &WaveFunction) -> Result<f64, WaveFunctionError> {
        if self.coeffs.len() != other.coeffs.len() {
            return Err(WaveFunctionError::GridMismatch(self.coeffs.len(), other.coeffs.len()));
        }
        Ok(self.coeffs.iter().zip(&other.coeffs).map(|(a, b)| a * b).sum::<f64>().abs())
    }

    pub fn meta(&self) -> WaveFunctionMeta {
        WaveFunctionMeta {
            tier: self.tier,
            orbitals: self.tier.orbitals().iter().map(|o| o.as_str().to_string()).collect(),
            layout: "little-endian f64, site-major, orbital fastest".into(),
            n_sites: self.n_sites,
            norb: self.norb(),
            energy_ev: self.energy,
            residual_ev: self.residual,
            s_character: self.s_character(),
        }
    }
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> WaveFunctionError + '_ {
    move |source| WaveFunctionError::Io {
        path: path.display().to_string(),
        source,
    }
}

pub fn wavefunction_paths(stem: &Path) -> (PathBuf, PathBuf) {
    let mut bin = stem.as_os_str().to_owned();
    bin.push(".bin");
    let mut meta = stem.as_os_str().to_owned();
    meta.push(".json");
    (PathBuf::from(bin), PathBuf::from(meta))
}

pub fn write_wavefunction(wf: &WaveFunction, stem: &Path) -> Result<(PathBuf, PathBuf), WaveFunctionError> {
    let (bin, meta) = wavefunction_paths(stem);
    let mut bytes = Vec::with_capacity(wf.coeffs.len() * 8);
    for c in &wf.coeffs {
        bytes.extend_from_slice(&c.to_le_bytes());
    }
    std::fs::File::create(&bin)
        .and_then(|mut f| f.write_all(&bytes))
        .map_err(io_err(&bin))?;
    std::fs::write(&meta, serde_json::to_string_pretty(&wf.meta())?).map_err(io_err(&meta))?;
    Ok((bin, meta))
}

pub fn read_wavefunction(stem: &Path) -> Result<WaveFunction, WaveFunctionError> {
    let (bin, meta_path) = wavefunction_paths(stem);
    let meta: WaveFunctionMeta =
        serde_json::from_str(&std::fs::read_to_string(&meta_path).map_err(io_err(&meta_path))?)?;
    let mut bytes = Vec::new();
    std::fs::File::open(&bin)
        .and_then(|mut f| f.read_to_end(&mut bytes))
        .map_err(io_err(&bin))?;
    let expected = meta.n_sites * meta.norb;
    if bytes.len() != expected * 8 {
        return Err(WaveFunctionError::Length {
            expected,
            found: bytes.len() / 8,
        });
    }
    let coeffs = bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
        .collect();
    Ok(WaveFunction {
        tier: meta.tier,
        n_sites: meta.n_sites,
        energy: meta.energy_ev,
        residual: meta.residual_ev,
        coeffs,
    })
}
