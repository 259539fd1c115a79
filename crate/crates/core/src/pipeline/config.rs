//! Run configuration.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::electronic::{BasisTier, SolverOptions, TbParameterSet};
use crate::errorbudget::OperationParams;
use crate::geometry::{Boundary, DisorderSpec, DotGeometry, Margins};
use crate::physcore::{load_database, Database};
use crate::strain::{RelaxOptions, StrainBoundary};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GeometryConfig {
    /// nm.
    pub base_diameter: f64,
    /// nm.
    pub height: f64,
    pub dot: String,
    pub buffer: String,
    pub margins: Margins,
    pub box_cells: Option<[usize; 3]>,
    pub wetting_layer: bool,
    pub boundary: Boundary,
}

impl Default for GeometryConfig {
    fn default() -> Self {
        GeometryConfig {
            base_diameter: 8.0,
            height: 3.0,
            dot: "InAs".into(),
            buffer: "GaAs".into(),
            margins: Margins {
                lateral: 2.0,
                below: 2.0,
                above: 2.0,
            },
            box_cells: None,
            wetting_layer: false,
            boundary: Boundary::Periodic,
        }
    }
}

impl GeometryConfig {
    pub fn build(&self, db: &Database) -> Result<DotGeometry, crate::geometry::GeometryError> {
        self.resized(db, self.base_diameter, self.height)
    }

    pub fn resized(&self, db: &Database, d: f64, h: f64) -> Result<DotGeometry, crate::geometry::GeometryError> {
        let mut g = DotGeometry::from_database(db, d, h, &self.dot, &self.buffer)?;
        g.margins = self.margins;
        g.box_cells = self.box_cells;
        g.wetting_layer = self.wetting_layer;
        g.boundary = self.boundary;
        g.validate()?;
        Ok(g)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DisorderKind {
    None,
    Alloy,
    Interface,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DisorderConfig {
    pub mode: DisorderKind,
    /// Buffer-cation fraction in alloy mode.
    pub x: f64,
    /// nm.
    pub interface_thickness: f64,
}

impl Default for DisorderConfig {
    fn default() -> Self {
        DisorderConfig {
            mode: DisorderKind::None,
            x: 0.5,
            interface_thickness: 1.25,
        }
    }
}

impl DisorderConfig {
    pub fn spec(&self) -> DisorderSpec {
        let mut d = match self.mode {
            DisorderKind::None => DisorderSpec::default(),
            DisorderKind::Alloy => DisorderSpec::alloy(self.x),
            DisorderKind::Interface => DisorderSpec::interface(self.interface_thickness),
        };
        d.interface_thickness = self.interface_thickness;
        d
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StrainConfig {
    pub enabled: bool,
    /// eV/nm.
    pub tol: f64,
    pub max_iter: usize,
    pub boundary: StrainBoundary,
}

impl Default for StrainConfig {
    fn default() -> Self {
        let r = RelaxOptions::default();
        StrainConfig {
            enabled: false,
            tol: r.tol,
            max_iter: r.max_iter,
            boundary: r.boundary,
        }
    }
}

impl StrainConfig {
    pub fn options(&self) -> RelaxOptions {
        RelaxOptions {
            tol: self.tol,
            max_iter: self.max_iter,
            boundary: self.boundary,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ElectronicConfig {
    pub tier: BasisTier,
    /// Parameter file; the bundled set for the tier when absent.
    pub parameters: Option<PathBuf>,
    pub sigma: Option<f64>,
    pub n_states: usize,
    /// eV.
    pub tol: f64,
    pub basis_size: usize,
    pub max_matvecs: usize,
}

impl Default for ElectronicConfig {
    fn default() -> Self {
        let s = SolverOptions::default();
        ElectronicConfig {
            tier: BasisTier::SOnly,
            parameters: None,
            sigma: None,
            n_states: s.n_states,
            tol: s.tol,
            basis_size: s.basis_size,
            max_matvecs: s.max_matvecs,
        }
    }
}

impl ElectronicConfig {
    pub fn solver(&self, seed: u64) -> SolverOptions {
        SolverOptions {
            sigma: self.sigma,
            n_states: self.n_states,
            tol: self.tol,
            basis_size: self.basis_size,
            max_matvecs: self.max_matvecs,
            seed,
        }
    }

    pub fn bundled_name(tier: BasisTier) -> Option<&'static str> {
        match tier {
            BasisTier::SOnly => Some("toy-s"),
            BasisTier::Sp3s => Some("vogl-sp3s*"),
            BasisTier::Sp3d5s => None,
        }
    }

    pub fn load_parameters(&self, base: &Path) -> Result<TbParameterSet, String> {
        match &self.parameters {
            Some(p) => TbParameterSet::load(&resolve(base, p)).map_err(|e| e.to_string()),
            None => match Self::bundled_name(self.tier) {
                Some(n) => TbParameterSet::bundled(n).map_err(|e| e.to_string()),
                None => Err(format!("no bundled parameter set for tier {}", self.tier.as_str())),
            },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BathSource {
    Unpolarized,
    Size,
    Alloy,
    Interface,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BathConfig {
    pub sources: Vec<BathSource>,
    /// Monte Carlo draws for the random-spin source; 0 skips the check.
    pub samples: i64,
    pub g_e: f64,
    /// Buffer-cation fraction of the alloy dots.
    pub alloy_x: f64,
    /// Alloy realizations solved for the alloy map and the freezing check.
    pub alloy_realizations: usize,
    /// `[diameter, height]` pairs in nm; empty picks the base geometry
    /// scaled by 14/15 and 16/15 in diameter and 5.5/6 and 6.5/6 in height.
    pub size_geometries: Vec<[f64; 2]>,
    pub polarization: [f64; 3],
}

impl Default for BathConfig {
    fn default() -> Self {
        BathConfig {
            sources: vec![BathSource::Unpolarized, BathSource::Size, BathSource::Alloy, BathSource::Interface],
            samples: 1000,
            g_e: 2.0,
            alloy_x: 0.5,
            alloy_realizations: 3,
            size_geometries: Vec::new(),
            polarization: [0.0, 0.0, 1.0],
        }
    }
}

impl BathConfig {
    pub fn has(&self, s: BathSource) -> bool {
        self.sources.contains(&s)
    }

    pub fn size_list(&self, g: &GeometryConfig) -> Vec<[f64; 2]> {
        if !self.size_geometries.is_empty() {
            return self.size_geometries.clone();
        }
        let (d, h) = (g.base_diameter, g.height);
        vec![[d * 14.0 / 15.0, h * 5.5 / 6.0], [d, h], [d * 16.0 / 15.0, h * 6.5 / 6.0]]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BudgetSource {
    Unpolarized,
    Size,
    Alloy,
    Interface,
    Fixed,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BudgetConfig {
    /// Bath source whose Zeeman spread enters the budget; `fixed` uses
    /// `params.delta_ez`.
    pub source: BudgetSource,
    pub params: OperationParams,
}

impl Default for BudgetConfig {
    fn default() -> Self {
        BudgetConfig {
            source: BudgetSource::Unpolarized,
            params: OperationParams::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    /// Output directory, relative to the config file.
    pub output: PathBuf,
    /// Species and materials database; the bundled one when absent.
    pub database: Option<PathBuf>,
    pub geometry: GeometryConfig,
    pub disorder: DisorderConfig,
    pub strain: StrainConfig,
    pub electronic: ElectronicConfig,
    pub bath: BathConfig,
    pub budget: BudgetConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            seed: 1,
            output: PathBuf::from("out"),
            database: None,
            geometry: GeometryConfig::default(),
            disorder: DisorderConfig::default(),
            strain: StrainConfig::default(),
            electronic: ElectronicConfig::default(),
            bath: BathConfig::default(),
            budget: BudgetConfig::default(),
        }
    }
}

fn resolve(base: &Path, p: &Path) -> PathBuf {
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        base.join(p)
    }
}

/// A parsed config and the directory its relative paths resolve against.
#[derive(Debug, Clone, PartialEq)]
pub struct LoadedConfig {
    pub config: RunConfig,
    pub base: PathBuf,
}

impl LoadedConfig {
    pub fn output_dir(&self) -> PathBuf {
        resolve(&self.base, &self.config.output)
    }

    pub fn database(&self) -> Result<Database, String> {
        match &self.config.database {
            Some(p) => load_database(&resolve(&self.base, p)).map_err(|e| e.to_string()),
            None => Ok(Database::bundled()),
        }
    }

    pub fn parameters(&self) -> Result<TbParameterSet, String> {
        self.config.electronic.load_parameters(&self.base)
    }
}

pub fn defaults_toml() -> String {
    toml::to_string_pretty(&RunConfig::default()).expect("default config serializes")
}

pub fn parse(text: &str, base: &Path) -> Result<LoadedConfig, Vec<String>> {
    let config: RunConfig = toml::from_str(text).map_err(|e| vec![e.to_string()])?;
    Ok(LoadedConfig {
        config,
        base: base.to_path_buf(),
    })
}

pub fn load(path: &Path) -> Result<LoadedConfig, Vec<String>> {
    let text = std::fs::read_to_string(path).map_err(|e| vec![format!("{}: {e}", path.display())])?;
    let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
    parse(&text, &base)
}

/// Checks every cross-field constraint and collects all failures.
pub fn validate(lc: &LoadedConfig) -> Result<(), Vec<String>> {
    let c = &lc.config;
    let mut errs = Vec::new();
    if c.output.as_os_str().is_empty() {
        errs.push("output: must not be empty".into());
    }
    let db = match &c.database {
        Some(p) if !resolve(&lc.base, p).is_file() => {
            errs.push(format!("database: file {} does not exist", p.display()));
            None
        }
        _ => match lc.database() {
            Ok(db) => Some(db),
            Err(e) => {
                errs.push(format!("database: {e}"));
                None
            }
        },
    };
    if let Some(db) = &db {
        if let Err(e) = c.geometry.build(db) {
            errs.push(format!("geometry: {e}"));
        }
        if c.bath.has(BathSource::Size) {
            for (k, [d, h]) in c.bath.size_list(&c.geometry).iter().enumerate() {
                if let Err(e) = c.geometry.resized(db, *d, *h) {
                    errs.push(format!("bath.size_geometries[{k}]: {e}"));
                }
            }
        }
    }
    if let Err(e) = c.disorder.spec().validate() {
        errs.push(format!("disorder: {e}"));
    }
    if !(c.strain.tol > 0.0) {
        errs.push(format!("strain.tol must be positive, got {}", c.strain.tol));
    }
    if let StrainBoundary::Pinned { shell } = c.strain.boundary {
        if !(shell >= 0.0) {
            errs.push(format!("strain.boundary.shell must be >= 0, got {shell}"));
        }
    }
    let e = &c.electronic;
    match &e.parameters {
        Some(p) if !resolve(&lc.base, p).is_file() => {
            errs.push(format!("electronic.parameters: file {} does not exist", p.display()));
        }
        None if ElectronicConfig::bundled_name(e.tier).is_none() => {
            errs.push(format!("electronic.parameters: required for tier {}", e.tier.as_str()));
        }
        _ => {}
    }
    if e.n_states == 0 {
        errs.push("electronic.n_states must be >= 1".into());
    }
    if !(e.tol > 0.0) {
        errs.push(format!("electronic.tol must be positive, got {}", e.tol));
    }
    if e.basis_size < e.n_states + 3 {
        errs.push(format!("electronic.basis_size must be >= n_states + 3, got {}", e.basis_size));
    }
    if let Some(s) = e.sigma {
        if !s.is_finite() {
            errs.push("electronic.sigma must be finite".into());
        }
    }
    let b = &c.bath;
    if b.sources.is_empty() {
        errs.push("bath.sources must name at least one source".into());
    }
    if b.samples < 0 {
        errs.push(format!("bath.samples must be >= 0, got {}", b.samples));
    } else if b.samples == 1 {
        errs.push("bath.samples must be 0 or >= 2".into());
    }
    if !(b.g_e.is_finite() && b.g_e != 0.0) {
        errs.push("bath.g_e must be finite and nonzero".into());
    }
    if !(0.0..=1.0).contains(&b.alloy_x) {
        errs.push(format!("bath.alloy_x {} outside [0, 1]", b.alloy_x));
    }
    if b.has(BathSource::Alloy) && b.alloy_realizations == 0 {
        errs.push("bath.alloy_realizations must be >= 1 when the alloy source is selected".into());
    }
    if b.has(BathSource::Size) && b.size_list(&c.geometry).len() < 2 {
        errs.push("bath.size_geometries needs at least two entries".into());
    }
    if !b.polarization.iter().all(|v| v.is_finite()) || b.polarization.iter().all(|v| *v == 0.0) {
        errs.push("bath.polarization must be a nonzero vector".into());
    }
    for m in c.budget.params.validate() {
        errs.push(m);
    }
    let src = match c.budget.source {
        BudgetSource::Unpolarized => Some(BathSource::Unpolarized),
        BudgetSource::Size => Some(BathSource::Size),
        BudgetSource::Alloy => Some(BathSource::Alloy),
        BudgetSource::Interface => Some(BathSource::Interface),
        BudgetSource::Fixed => None,
    };
    match src {
        Some(s) if !b.has(s) => errs.push(format!("budget.source {s:?} is not among bath.sources")),
        None if c.budget.params.delta_ez.is_none() => errs.push("budget.params.delta_ez is required with budget.source = \"fixed\"".into()),
        _ => {}
    }
    if errs.is_empty() {
        Ok(())
    } else {
        Err(errs)
    }
}
