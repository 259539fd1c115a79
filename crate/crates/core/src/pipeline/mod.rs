//! Staged pipeline: geometry, strain, electronic, hyperfine, spin bath and
//! error budget, with per-stage input hashing so unchanged stages are
//! reloaded instead of recomputed.

mod config;
mod report;

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

pub use config::{
    defaults_toml, load, parse, validate, BathConfig, BathSource, BudgetConfig, BudgetSource, DisorderConfig, DisorderKind,
    ElectronicConfig, GeometryConfig, LoadedConfig, RunConfig, StrainConfig,
};
pub use report::{read_outputs, report, RunOutputs};

use crate::electronic::{
    assemble, auto_window, read_wavefunction, solve_ground_conduction, start_vector, write_wavefunction, AssembleOptions, WaveFunction,
};
use crate::errorbudget::{self, ErrorBudget};
use crate::geometry::{build_realization, read_structure, write_structure, AtomisticStructure, DisorderSpec, DotGeometry};
use crate::hyperfine::{self, Axis, HyperfineMap, MapSummary};
use crate::physcore::{Database, PhysicalConstants};
use crate::rng::derive_seed;
use crate::spinbath::{self, DensityFluctuation, DisorderSource, FieldStatistics};
use crate::strain::{relax, unrelaxed, write_relaxation, VffModel};

pub const MANIFEST: &str = "manifest.json";
const LOCK: &str = ".lock";

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("invalid configuration:\n  {}", .0.join("\n  "))]
    Validation(Vec<String>),
    #[error("stage {stage} failed: {message}")]
    Stage { stage: String, message: String },
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("output directory {0} is locked by another run (remove {0}/.lock if stale)")]
    Locked(String),
    #[error("{0}")]
    Report(String),
}

impl PipelineError {
    /// Process exit code: 1 validation, 2 stage failure, 3 I/O.
    pub fn exit_code(&self) -> i32 {
        match self {
            PipelineError::Validation(_) => 1,
            PipelineError::Stage { .. } | PipelineError::Report(_) => 2,
            PipelineError::Io { .. } | PipelineError::Locked(_) => 3,
        }
    }
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> PipelineError + '_ {
    move |source| PipelineError::Io {
        path: path.display().to_string(),
        source,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Stage {
    Geometry,
    Strain,
    Electronic,
    Hyperfine,
    Spinbath,
    Errorbudget,
}

impl Stage {
    pub const ALL: [Stage; 6] = [
        Stage::Geometry,
        Stage::Strain,
        Stage::Electronic,
        Stage::Hyperfine,
        Stage::Spinbath,
        Stage::Errorbudget,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Stage::Geometry => "geometry",
            Stage::Strain => "strain",
            Stage::Electronic => "electronic",
            Stage::Hyperfine => "hyperfine",
            Stage::Spinbath => "spinbath",
            Stage::Errorbudget => "errorbudget",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StageStatus {
    Completed,
    Skipped,
    Failed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutputRecord {
    /// Relative to the output directory.
    pub path: String,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageRecord {
    /// Stage path such as `hyperfine` or `alloy-1/electronic`.
    pub name: String,
    pub input_hash: String,
    pub outputs: Vec<OutputRecord>,
    pub status: StageStatus,
    pub seconds: f64,
    pub error: Option<String>,
}

impl StageRecord {
    pub fn output_hash(&self) -> String {
        let mut h = Sha256::new();
        for o in &self.outputs {
            h.update(o.path.as_bytes());
            h.update(o.sha256.as_bytes());
        }
        hex::encode(h.finalize())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RunStatus {
    Running,
    Complete,
    Failed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub version: String,
    pub master_seed: u64,
    pub config_hash: String,
    pub status: RunStatus,
    pub stages: Vec<StageRecord>,
}

impl RunManifest {
    pub fn stage(&self, name: &str) -> Option<&StageRecord> {
        self.stages.iter().find(|s| s.name == name)
    }

    pub fn read(dir: &Path) -> Result<RunManifest, PipelineError> {
        let p = dir.join(MANIFEST);
        let text = std::fs::read_to_string(&p).map_err(io_err(&p))?;
        serde_json::from_str(&text).map_err(|e| PipelineError::Report(format!("{}: {e}", p.display())))
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

fn hash_key(key: &impl Serialize) -> String {
    let mut v = serde_json::to_vec(key).expect("stage key serializes");
    v.extend_from_slice(env!("CARGO_PKG_VERSION").as_bytes());
    sha256_hex(&v)
}

struct Lock(PathBuf);

impl Lock {
    fn acquire(dir: &Path) -> Result<Lock, PipelineError> {
        let p = dir.join(LOCK);
        match std::fs::OpenOptions::new().write(true).create_new(true).open(&p) {
            Ok(_) => Ok(Lock(p)),
            Err(e) if e.kind() == std::io::ErrorKind::AlreadyExists => Err(PipelineError::Locked(dir.display().to_string())),
            Err(e) => Err(io_err(&p)(e)),
        }
    }
}

impl Drop for Lock {
    fn drop(&mut self) {
        let _ = std::fs::remove_file(&self.0);
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ElectronicSummary {
    pub sites: usize,
    pub dim: usize,
    pub ground_energy_ev: f64,
    /// Conduction states of the last fold, ascending, eV.
    pub conduction_ev: Vec<f64>,
    /// Spacing of the two lowest conduction states, eV.
    pub level_spacing_ev: Option<f64>,
    pub residual_ev: f64,
    pub s_character: f64,
    pub sigmas_ev: Vec<f64>,
    pub matvecs: usize,
    pub valence_like: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SizeField {
    pub id: String,
    pub base_diameter: f64,
    pub height: f64,
    pub field_t: [f64; 3],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BathResult {
    pub g_e: f64,
    /// One row per requested source.
    pub rows: Vec<FieldStatistics>,
    /// Random-spin spread by sampling, a check on the closed form.
    pub monte_carlo: Option<FieldStatistics>,
    /// `(MC - closed) / stderr`.
    pub monte_carlo_z: Option<f64>,
    /// Fully polarized field of the base dot, tesla.
    pub polarized_field_t: [f64; 3],
    pub size_fields: Vec<SizeField>,
    pub freezing: Option<DensityFluctuation>,
    pub map_summary: MapSummary,
    pub alloy_map_summary: Option<MapSummary>,
}

impl BathResult {
    pub fn row(&self, s: spinbath::Source) -> Option<&FieldStatistics> {
        self.rows.iter().find(|r| r.source == s)
    }
}

/// Structure, state and coupling map of one dot.
pub struct Chain {
    pub structure: AtomisticStructure,
    pub wavefunction: WaveFunction,
    pub electronic: ElectronicSummary,
    pub map: HyperfineMap,
    pub wavefunction_hash: String,
    pub map_hash: String,
}

#[derive(Debug, Clone, Copy, Default)]
pub struct RunOptions {
    /// Last stage to run.
    pub until: Option<Stage>,
}

struct Runner<'a> {
    lc: &'a LoadedConfig,
    out: PathBuf,
    previous: Option<RunManifest>,
    manifest: RunManifest,
    db: Database,
    db_hash: String,
}

fn write_json(path: &Path, v: &impl Serialize) -> Result<PathBuf, String> {
    let text = serde_json::to_string_pretty(v).map_err(|e| e.to_string())?;
    std::fs::write(path, text).map_err(|e| format!("{}: {e}", path.display()))?;
    Ok(path.to_path_buf())
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T, String> {
    let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
    serde_json::from_str(&text).map_err(|e| format!("{}: {e}", path.display()))
}

impl Runner<'_> {
    fn save_manifest(&self) -> Result<(), PipelineError> {
        let p = self.out.join(MANIFEST);
        let tmp = self.out.join(".manifest.json.tmp");
        let text = serde_json::to_string_pretty(&self.manifest).expect("manifest serializes");
        std::fs::write(&tmp, text).map_err(io_err(&tmp))?;
        std::fs::rename(&tmp, &p).map_err(io_err(&p))
    }

    fn cached(&self, name: &str, input_hash: &str) -> Option<StageRecord> {
        let rec = self.previous.as_ref()?.stage(name)?;
        if rec.input_hash != input_hash || rec.status == StageStatus::Failed {
            return None;
        }
        for o in &rec.outputs {
            let bytes = std::fs::read(self.out.join(&o.path)).ok()?;
            if sha256_hex(&bytes) != o.sha256 {
                return None;
            }
        }
        Some(rec.clone())
    }

    /// Runs or reloads one stage. Returns the value and the stage's output
    /// hash.
    fn stage<T>(
        &mut self,
        name: &str,
        key: &impl Serialize,
        compute: impl FnOnce(&Path) -> Result<(T, Vec<PathBuf>), String>,
        load: impl FnOnce(&Path) -> Result<T, String>,
    ) -> Result<(T, String), PipelineError> {
        let input_hash = hash_key(key);
        let dir = self.out.join(name);
        if let Some(rec) = self.cached(name, &input_hash) {
            match load(&dir) {
                Ok(v) => {
                    log::info!("[{name}] unchanged, reusing cached outputs");
                    let hash = rec.output_hash();
                    self.manifest.stages.push(StageRecord {
                        status: StageStatus::Skipped,
                        ..rec
                    });
                    self.save_manifest()?;
                    return Ok((v, hash));
                }
                Err(e) => log::warn!("[{name}] cached outputs unreadable ({e}); recomputing"),
            }
        }
        std::fs::create_dir_all(&dir).map_err(io_err(&dir))?;
        log::info!("[{name}] running");
        let t0 = Instant::now();
        let result = compute(&dir);
        let seconds = t0.elapsed().as_secs_f64();
        match result {
            Ok((v, paths)) => {
                let mut outputs = Vec::new();
                for p in paths {
                    let bytes = std::fs::read(&p).map_err(io_err(&p))?;
                    let rel = p.strip_prefix(&self.out).unwrap_or(&p);
                    outputs.push(OutputRecord {
                        path: rel.to_string_lossy().replace('\\', "/"),
                        sha256: sha256_hex(&bytes),
                    });
                }
                let rec = StageRecord {
                    name: name.to_string(),
                    input_hash,
                    outputs,
                    status: StageStatus::Completed,
                    seconds,
                    error: None,
                };
                let hash = rec.output_hash();
                log::info!("[{name}] done in {seconds:.1} s");
                self.manifest.stages.push(rec);
                self.save_manifest()?;
                Ok((v, hash))
            }
            Err(message) => {
                log::error!("[{name}] {message}");
                self.manifest.stages.push(StageRecord {
                    name: name.to_string(),
                    input_hash,
                    outputs: Vec::new(),
                    status: StageStatus::Failed,
                    seconds,
                    error: Some(message.clone()),
                });
                self.manifest.status = RunStatus::Failed;
                self.save_manifest()?;
                Err(PipelineError::Stage {
                    stage: name.to_string(),
                    message,
                })
            }
        }
    }

    fn fail(&mut self, name: &str, message: String) -> PipelineError {
        self.manifest.stages.push(StageRecord {
            name: name.to_string(),
            input_hash: String::new(),
            outputs: Vec::new(),
            status: StageStatus::Failed,
            seconds: 0.0,
            error: Some(message.clone()),
        });
        self.manifest.status = RunStatus::Failed;
        let _ = self.save_manifest();
        PipelineError::Stage {
            stage: name.to_string(),
            message,
        }
    }

    fn parameter_key(&mut self, name: &str) -> Result<String, PipelineError> {
        let e = &self.lc.config.electronic;
        match &e.parameters {
            Some(p) => {
                let path = if p.is_absolute() { p.clone() } else { self.lc.base.join(p) };
                std::fs::read(&path)
                    .map(|b| sha256_hex(&b))
                    .map_err(|err| self.fail(name, format!("{}: {err}", path.display())))
            }
            None => Ok(format!("bundled:{}", ElectronicConfig::bundled_name(e.tier).unwrap_or("-"))),
        }
    }

    /// Geometry through hyperfine for one dot. Stage names are prefixed
    /// with `prefix/` unless it is empty.
    fn chain(
        &mut self,
        prefix: &str,
        geometry: &DotGeometry,
        disorder: &DisorderSpec,
        stream: u64,
        start: Option<(&WaveFunction, &str)>,
        until: Stage,
    ) -> Result<Option<Chain>, PipelineError> {
        let name = |s: Stage| if prefix.is_empty() { s.as_str().to_string() } else { format!("{prefix}/{}", s.as_str()) };
        let cfg = self.lc.config.clone();
        let seed = derive_seed(cfg.seed, "geometry");

        let (structure, g_hash) = self.stage(
            &name(Stage::Geometry),
            &(geometry, disorder, seed, stream),
            |dir| {
                let s = build_realization(geometry, disorder, seed, stream).map_err(|e| e.to_string())?;
                let (a, b) = write_structure(&s, &dir.join("structure")).map_err(|e| e.to_string())?;
                log::info!("[geometry] {} sites, {} in the dot", s.len(), s.region_count(crate::geometry::Region::Dot));
                Ok((s, vec![a, b]))
            },
            |dir| read_structure(&dir.join("structure")).map_err(|e| e.to_string()),
        )?;
        if until == Stage::Geometry {
            return Ok(None);
        }

        let db = &self.db;
        let strain_cfg = cfg.strain;
        let (structure, s_hash) = {
            let db_hash = self.db_hash.clone();
            let db = db.clone();
            self.stage(
                &name(Stage::Strain),
                &(&g_hash, &strain_cfg, &db_hash),
                |dir| {
                    let model = VffModel::from_database(&db).map_err(|e| e.to_string())?;
                    let r = if strain_cfg.enabled {
                        relax(&structure, &model, &strain_cfg.options()).map_err(|e| e.to_string())?
                    } else {
                        unrelaxed(&structure, &model).map_err(|e| e.to_string())?
                    };
                    log::info!("[strain] energy {:.6e} eV after {} iterations", r.energy, r.iterations);
                    let paths = write_relaxation(&r, &model, &dir.join("relaxed")).map_err(|e| e.to_string())?;
                    Ok((r.structure, paths))
                },
                |dir| read_structure(&dir.join("relaxed")).map_err(|e| e.to_string()),
            )?
        };
        if until == Stage::Strain {
            return Ok(None);
        }

        let e_name = name(Stage::Electronic);
        let pkey = self.parameter_key(&e_name)?;
        let warm = start.filter(|(w, _)| w.n_sites == structure.len());
        let solver = cfg.electronic.solver(derive_seed(cfg.seed, "electronic"));
        let e_cfg = cfg.electronic.clone();
        let lc = self.lc.clone();
        let ((wavefunction, electronic), e_hash) = self.stage(
            &e_name,
            &(&s_hash, &e_cfg, &pkey, strain_cfg.enabled, warm.map(|w| w.1)),
            |dir| {
                let params = lc.parameters()?;
                let opts = if strain_cfg.enabled { AssembleOptions::default() } else { AssembleOptions::unstrained() };
                let h = assemble(&structure, &params, e_cfg.tier, &opts).map_err(|e| e.to_string())?;
                let mut window = auto_window(&structure, &params, e_cfg.tier).map_err(|e| e.to_string())?;
                if let Some(s) = e_cfg.sigma {
                    window.sigma = s;
                }
                let v0 = match warm {
                    Some((w, _)) => w.coeffs.clone(),
                    None => start_vector(&structure, h.norb(), solver.seed),
                };
                log::info!("[electronic] dimension {}, fold at {:.4} eV", h.dim(), window.sigma);
                let r = solve_ground_conduction(&h, window, &solver, Some(v0)).map_err(|e| e.to_string())?;
                let en: Vec<f64> = r.conduction.iter().map(|w| w.energy).collect();
                let summary = ElectronicSummary {
                    sites: structure.len(),
                    dim: h.dim(),
                    ground_energy_ev: r.ground.energy,
                    level_spacing_ev: if en.len() > 1 { Some(en[1] - en[0]) } else { None },
                    conduction_ev: en,
                    residual_ev: r.ground.residual,
                    s_character: r.ground.s_character(),
                    sigmas_ev: r.sigmas,
                    matvecs: r.matvecs,
                    valence_like: r.valence_like,
                };
                log::info!("[electronic] E0 = {:.6} eV after {} products", summary.ground_energy_ev, summary.matvecs);
                let (a, b) = write_wavefunction(&r.ground, &dir.join("ground")).map_err(|e| e.to_string())?;
                let c = write_json(&dir.join("electronic.json"), &summary)?;
                Ok(((r.ground, summary), vec![a, b, c]))
            },
            |dir| {
                let wf = read_wavefunction(&dir.join("ground")).map_err(|e| e.to_string())?;
                Ok((wf, read_json(&dir.join("electronic.json"))?))
            },
        )?;
        if until == Stage::Electronic {
            return Ok(None);
        }

        let db = self.db.clone();
        let db_hash = self.db_hash.clone();
        let (map, m_hash) = self.stage(
            &name(Stage::Hyperfine),
            &(&e_hash, &s_hash, &db_hash),
            |dir| {
                let mut map = hyperfine::coupling_map(&wavefunction, &structure, &db).map_err(|e| e.to_string())?;
                map.structure_id = s_hash.clone();
                map.wavefunction_id = e_hash.clone();
                let mut paths = vec![write_json(&dir.join("map.json"), &map)?];
                let tsv = dir.join("map.tsv");
                hyperfine::write_map(&map, &structure, &tsv).map_err(|e| e.to_string())?;
                paths.push(tsv);
                for axis in [Axis::X, Axis::Z] {
                    let p = hyperfine::profile(&map, &structure, axis, 0.0).map_err(|e| e.to_string())?;
                    let path = dir.join(format!("profile_{}.tsv", axis.as_str()));
                    hyperfine::write_profile(&p, &path).map_err(|e| e.to_string())?;
                    paths.push(path);
                }
                let s = &map.summary;
                log::info!("[hyperfine] max A = {:.3e} eV on {} at {:.2} nm", s.max_coupling_ev, s.argmax_species, s.argmax_distance_nm);
                Ok((map, paths))
            },
            |dir| read_json(&dir.join("map.json")),
        )?;
        Ok(Some(Chain {
            structure,
            wavefunction,
            electronic,
            map,
            wavefunction_hash: e_hash,
            map_hash: m_hash,
        }))
    }
}

fn bath(
    cfg: &RunConfig,
    db: &Database,
    main: &Chain,
    sizes: &[(SizeField, Option<&Chain>)],
    alloys: &[Chain],
) -> Result<BathResult, String> {
    let b = &cfg.bath;
    let c: &PhysicalConstants = &db.constants;
    let g = b.g_e;
    let err = |e: spinbath::SpinBathError| e.to_string();
    let mut rows = Vec::new();
    let mut mc = None;
    let mut z = None;
    let mut sizes_out = Vec::new();
    let mut freezing = None;
    let polarized = spinbath::polarized_field(&main.map, &main.structure, db, g, b.polarization).map_err(err)?;
    let mut sources = b.sources.clone();
    sources.sort();
    sources.dedup();
    for src in sources {
        match src {
            BathSource::Unpolarized => {
                let closed = spinbath::delta_unpolarized_closed_form(&main.map, &main.structure, db, g).map_err(err)?;
                if b.samples >= 2 {
                    let m = spinbath::delta_unpolarized_monte_carlo(
                        &main.map,
                        &main.structure,
                        db,
                        g,
                        b.samples as usize,
                        derive_seed(cfg.seed, "bath"),
                    )
                    .map_err(err)?;
                    z = m.stderr_t().filter(|s| *s > 0.0).map(|s| (m.delta_b_t - closed.delta_b_t) / s);
                    mc = Some(m);
                }
                rows.push(closed);
            }
            BathSource::Size => {
                let mut fields = Vec::new();
                for (sf, chain) in sizes {
                    let ch = chain.unwrap_or(main);
                    let f = spinbath::polarized_field(&ch.map, &ch.structure, db, g, b.polarization).map_err(err)?;
                    sizes_out.push(SizeField { field_t: f, ..sf.clone() });
                    fields.push((sf.id.clone(), f));
                }
                rows.push(spinbath::delta_size(&fields, g, c).map_err(err)?);
            }
            BathSource::Alloy => {
                let first = alloys.first().ok_or("alloy source needs at least one realization")?;
                rows.push(
                    spinbath::delta_disorder(&first.map, &first.structure, db, g, DisorderSource::Alloy { x: b.alloy_x }, b.polarization)
                        .map_err(err)?,
                );
                if alloys.len() >= 2 {
                    let wfs: Vec<WaveFunction> = alloys.iter().map(|a| a.wavefunction.clone()).collect();
                    freezing = Some(spinbath::overlap_and_density_fluctuation(&wfs).map_err(err)?);
                }
            }
            BathSource::Interface => {
                rows.push(
                    spinbath::delta_disorder(&main.map, &main.structure, db, g, DisorderSource::Interface, b.polarization).map_err(err)?,
                );
            }
        }
    }
    Ok(BathResult {
        g_e: g,
        rows,
        monte_carlo: mc,
        monte_carlo_z: z,
        polarized_field_t: polarized,
        size_fields: sizes_out,
        freezing,
        map_summary: main.map.summary.clone(),
        alloy_map_summary: alloys.first().map(|a| a.map.summary.clone()),
    })
}

fn budget_input(cfg: &RunConfig, bath: &BathResult) -> Option<f64> {
    let src = match cfg.budget.source {
        BudgetSource::Unpolarized => spinbath::Source::RandomSpins,
        BudgetSource::Size => spinbath::Source::SizeDistribution,
        BudgetSource::Alloy => spinbath::Source::Alloy,
        BudgetSource::Interface => spinbath::Source::Interface,
        BudgetSource::Fixed => return None,
    };
    bath.row(src).map(|r| r.delta_e_ev)
}

/// Runs the configured pipeline into its output directory.
pub fn run(lc: &LoadedConfig, opts: RunOptions) -> Result<RunManifest, PipelineError> {
    validate(lc).map_err(PipelineError::Validation)?;
    let cfg = &lc.config;
    let until = opts.until.unwrap_or(Stage::Errorbudget);
    let out = lc.output_dir();
    std::fs::create_dir_all(&out).map_err(io_err(&out))?;
    let _lock = Lock::acquire(&out)?;
    let db = lc.database().map_err(|e| PipelineError::Validation(vec![format!("database: {e}")]))?;
    let db_hash = match &cfg.database {
        Some(p) => {
            let path = if p.is_absolute() { p.clone() } else { lc.base.join(p) };
            sha256_hex(&std::fs::read(&path).map_err(io_err(&path))?)
        }
        None => sha256_hex(Database::bundled_source().as_bytes()),
    };
    let previous = RunManifest::read(&out).ok();
    let mut r = Runner {
        lc,
        out: out.clone(),
        previous,
        manifest: RunManifest {
            version: env!("CARGO_PKG_VERSION").to_string(),
            master_seed: cfg.seed,
            config_hash: hash_key(cfg),
            status: RunStatus::Running,
            stages: Vec::new(),
        },
        db: db.clone(),
        db_hash,
    };
    r.save_manifest()?;

    let geometry = cfg.geometry.build(&db).map_err(|e| PipelineError::Validation(vec![format!("geometry: {e}")]))?;
    let disorder = cfg.disorder.spec();
    let chain_until = until.min(Stage::Hyperfine);
    let main = r.chain("", &geometry, &disorder, 0, None, chain_until)?;
    let main = match main {
        Some(m) if until >= Stage::Spinbath => m,
        _ => {
            r.manifest.status = RunStatus::Complete;
            r.save_manifest()?;
            return Ok(r.manifest);
        }
    };

    let b = &cfg.bath;
    let mut size_chains: Vec<(SizeField, Option<Chain>)> = Vec::new();
    if b.has(BathSource::Size) {
        for (k, [d, h]) in b.size_list(&cfg.geometry).into_iter().enumerate() {
            let sf = SizeField {
                id: format!("size-{k}"),
                base_diameter: d,
                height: h,
                field_t: [0.0; 3],
            };
            let same = d == cfg.geometry.base_diameter && h == cfg.geometry.height;
            if same {
                size_chains.push((sf, None));
                continue;
            }
            let g = cfg.geometry.resized(&db, d, h).map_err(|e| PipelineError::Validation(vec![format!("size geometry: {e}")]))?;
            let ch = r.chain(&sf.id, &g, &disorder, 0, None, Stage::Hyperfine)?.expect("full chain");
            size_chains.push((sf, Some(ch)));
        }
    }
    let mut alloys = Vec::new();
    if b.has(BathSource::Alloy) {
        let spec = DisorderSpec {
            interface_thickness: disorder.interface_thickness,
            ..DisorderSpec::alloy(b.alloy_x)
        };
        for k in 0..b.alloy_realizations {
            let start = Some((&main.wavefunction, main.wavefunction_hash.as_str()));
            let ch = r.chain(&format!("alloy-{k}"), &geometry, &spec, k as u64 + 1, start, Stage::Hyperfine)?.expect("full chain");
            alloys.push(ch);
        }
    }

    let mut key_maps = vec![main.map_hash.clone()];
    key_maps.extend(size_chains.iter().filter_map(|(_, c)| c.as_ref().map(|c| c.map_hash.clone())));
    key_maps.extend(alloys.iter().flat_map(|c| [c.map_hash.clone(), c.wavefunction_hash.clone()]));
    let sizes: Vec<(SizeField, Option<&Chain>)> = size_chains.iter().map(|(s, c)| (s.clone(), c.as_ref())).collect();
    let db_hash = r.db_hash.clone();
    let (bath_result, bath_hash) = r.stage(
        Stage::Spinbath.as_str(),
        &(&key_maps, b, cfg.seed, &db_hash),
        |dir| {
            let res = bath(cfg, &db, &main, &sizes, &alloys)?;
            let table = dir.join("table.tsv");
            spinbath::write_table(&res.rows, &table).map_err(|e| e.to_string())?;
            for row in &res.rows {
                log::info!("[spinbath] {}: {:.4e} G", row.source.label(), row.delta_b_gauss());
            }
            Ok((res.clone(), vec![write_json(&dir.join("bath.json"), &res)?, table]))
        },
        |dir| read_json(&dir.join("bath.json")),
    )?;

    if until >= Stage::Errorbudget {
        let dez = budget_input(cfg, &bath_result);
        let c = db.constants;
        r.stage(
            Stage::Errorbudget.as_str(),
            &(&bath_hash, &cfg.budget),
            |dir| {
                let b = errorbudget::evaluate(&cfg.budget.params, dez, &c).map_err(|e| e.to_string())?;
                let txt = dir.join("budget.txt");
                std::fs::write(&txt, errorbudget::report(&b)).map_err(|e| e.to_string())?;
                Ok((b.clone(), vec![write_json(&dir.join("budget.json"), &b)?, txt]))
            },
            |dir| read_json::<ErrorBudget>(&dir.join("budget.json")),
        )?;
    }
    r.manifest.status = RunStatus::Complete;
    r.save_manifest()?;
    Ok(r.manifest)
}

/// One line per stage: name, status, seconds.
pub fn manifest_table(m: &RunManifest) -> String {
    let mut out = String::new();
    for s in &m.stages {
        let st = match s.status {
            StageStatus::Completed => "completed",
            StageStatus::Skipped => "skipped",
            StageStatus::Failed => "FAILED",
        };
        let _ = writeln!(out, "{:<24} {:<10} {:>9.2} s", s.name, st, s.seconds);
    }
    out
}
