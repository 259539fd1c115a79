use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::lens::Lens;
use crate::physcore::Database;
use crate::rng;

#[derive(Debug, Error, PartialEq)]
pub enum GeometryError {
    #[error("invalid geometry: {0}")]
    Invalid(String),
    #[error("buffer box {box_nm:?} nm cannot hold the lens plus margin (needs {needed_nm:?} nm)")]
    BufferTooSmall {
        box_nm: [f64; 3],
        needed_nm: [f64; 3],
    },
    #[error("invalid disorder: {0}")]
    Disorder(String),
    #[error("unknown material {0}")]
    UnknownMaterial(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Sublattice {
    Cation,
    Anion,
}

impl Sublattice {
    pub fn as_str(self) -> &'static str {
        match self {
            Sublattice::Cation => "cation",
            Sublattice::Anion => "anion",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Region {
    Dot,
    Interface,
    Buffer,
}

impl Region {
    pub fn as_str(self) -> &'static str {
        match self {
            Region::Dot => "dot",
            Region::Interface => "interface",
            Region::Buffer => "buffer",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Boundary {
    #[default]
    Periodic,
    Open,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Compound {
    pub name: String,
    pub cation: String,
    pub anion: String,
}

/// Margins of buffer material around the lens, nm.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Margins {
    pub lateral: f64,
    pub below: f64,
    pub above: f64,
}

impl Default for Margins {
    fn default() -> Self {
        Margins {
            lateral: 12.0,
            below: 10.0,
            above: 10.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DotGeometry {
    /// Base diameter, nm.
    pub base_diameter: f64,
    /// Cap height, nm.
    pub height: f64,
    pub dot: Compound,
    pub buffer: Compound,
    /// Lattice constant of the substrate-registered grid, nm.
    pub lattice_constant: f64,
    pub margins: Margins,
    /// Explicit box size in conventional cells; derived from margins if absent.
    pub box_cells: Option<[usize; 3]>,
    pub wetting_layer: bool,
    pub boundary: Boundary,
}

impl DotGeometry {
    /// Geometry with materials and the buffer lattice constant taken from the
    /// database.
    pub fn from_database(
        db: &Database,
        base_diameter: f64,
        height: f64,
        dot_material: &str,
        buffer_material: &str,
    ) -> Result<DotGeometry, GeometryError> {
        let get = |name: &str| {
            db.material(name)
                .ok_or_else(|| GeometryError::UnknownMaterial(name.to_string()))
        };
        let dot = get(dot_material)?;
        let buffer = get(buffer_material)?;
        Ok(DotGeometry {
            base_diameter,
            height,
            dot: Compound {
                name: dot.name.clone(),
                cation: dot.cation.clone(),
                anion: dot.anion.clone(),
            },
            buffer: Compound {
                name: buffer.name.clone(),
                cation: buffer.cation.clone(),
                anion: buffer.anion.clone(),
            },
            lattice_constant: buffer.lattice_constant,
            margins: Margins::default(),
            box_cells: None,
            wetting_layer: false,
            boundary: Boundary::Periodic,
        })
    }

    pub fn validate(&self) -> Result<(), GeometryError> {
        let bad = |m: &str| Err(GeometryError::Invalid(m.to_string()));
        if !(self.base_diameter >= 0.0 && self.height >= 0.0) {
            return bad("diameter and height must be non-negative");
        }
        if self.height > self.base_diameter {
            return bad("height must not exceed base diameter");
        }
        if !(self.lattice_constant > 0.0) {
            return bad("lattice constant must be positive");
        }
        let m = self.margins;
        if !(m.lateral >= 0.0 && m.below >= 0.0 && m.above >= 0.0) {
            return bad("margins must be non-negative");
        }
        if self.dot.anion != self.buffer.anion {
            return bad("dot and buffer must share the anion");
        }
        Ok(())
    }

    fn needed_extent(&self) -> [f64; 3] {
        let lateral = self.base_diameter + 2.0 * self.margins.lateral;
        let wl = if self.wetting_layer {
            0.5 * self.lattice_constant
        } else {
            0.0
        };
        [
            lateral,
            lateral,
            self.margins.below + wl + self.height + self.margins.above,
        ]
    }

    pub fn resolved_cells(&self) -> Result<[usize; 3], GeometryError> {
        let need = self.needed_extent();
        let a = self.lattice_constant;
        match self.box_cells {
            Some(cells) => {
                let box_nm = [cells[0] as f64 * a, cells[1] as f64 * a, cells[2] as f64 * a];
                if cells.iter().any(|&c| c == 0) || (0..3).any(|k| box_nm[k] + 1e-9 < need[k]) {
                    return Err(GeometryError::BufferTooSmall {
                        box_nm,
                        needed_nm: need,
                    });
                }
                Ok(cells)
            }
            None => {
                let mut cells = [0usize; 3];
                for k in 0..3 {
                    cells[k] = ((need[k] / a - 1e-9).ceil() as usize).max(1);
                }
                // Even lateral counts put the lens axis on a lattice column.
                for c in cells.iter_mut().take(2) {
                    if *c % 2 == 1 {
                        *c += 1;
                    }
                }
                Ok(cells)
            }
        }
    }

    /// Lens placed laterally at the box centre, base plane midway between
    /// two atomic planes so no site lies on it.
    pub fn lens(&self, cells: [usize; 3]) -> Lens {
        let a = self.lattice_constant;
        let quarter = 0.25 * a;
        let wl = if self.wetting_layer { 0.5 * a } else { 0.0 };
        let free = cells[2] as f64 * a - (self.margins.below + wl + self.height + self.margins.above);
        let z_raw = self.margins.below + wl + 0.5 * free.max(0.0);
        let z_base = (z_raw / quarter).floor() * quarter + 0.5 * quarter;
        Lens {
            base_center: [0.5 * cells[0] as f64 * a, 0.5 * cells[1] as f64 * a, z_base],
            base_radius: 0.5 * self.base_diameter,
            height: self.height,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum DisorderMode {
    None,
    /// Each dot cation is replaced by the buffer cation with probability x.
    Alloy { x: f64 },
    /// Each interface cation is dot or buffer cation with probability 1/2.
    Interface,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DisorderSpec {
    pub mode: DisorderMode,
    /// Interface thickness, nm.
    pub interface_thickness: f64,
}

impl Default for DisorderSpec {
    fn default() -> Self {
        DisorderSpec {
            mode: DisorderMode::None,
            interface_thickness: 1.25,
        }
    }
}

impl DisorderSpec {
    pub fn alloy(x: f64) -> Self {
        DisorderSpec {
            mode: DisorderMode::Alloy { x },
            ..Default::default()
        }
    }

    pub fn interface(thickness: f64) -> Self {
        DisorderSpec {
            mode: DisorderMode::Interface,
            interface_thickness: thickness,
        }
    }

    pub fn validate(&self) -> Result<(), GeometryError> {
        if !(self.interface_thickness >= 0.0) {
            return Err(GeometryError::Disorder("interface thickness must be >= 0".into()));
        }
        if let DisorderMode::Alloy { x } = self.mode {
            if !(0.0..=1.0).contains(&x) {
                return Err(GeometryError::Disorder(format!("alloy fraction {x} outside [0, 1]")));
            }
        }
        Ok(())
    }
}

/// Quarter-cell offsets from a cation to its four anion neighbours.
pub const TETRAHEDRAL: [[i32; 3]; 4] = [[1, 1, 1], [1, -1, -1], [-1, 1, -1], [-1, -1, 1]];

const FCC: [[i32; 3]; 4] = [[0, 0, 0], [0, 2, 2], [2, 0, 2], [2, 2, 0]];

pub const NO_NEIGHBOR: u32 = u32::MAX;

/// Zinc-blende sites of one dot-in-buffer realization.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AtomisticStructure {
    pub geometry: DotGeometry,
    pub disorder: DisorderSpec,
    pub seed: u64,
    pub stream: u64,
    pub cells: [usize; 3],
    pub lens: Lens,
    /// Species table; `species` indexes into it.
    pub species_names: Vec<String>,
    pub positions: Vec<[f64; 3]>,
    /// Ideal lattice coordinates in units of a/4.
    pub lattice: Vec<[i32; 3]>,
    pub species: Vec<u8>,
    pub sublattice: Vec<Sublattice>,
    pub region: Vec<Region>,
    /// Neighbour `k` of a cation sits at `+TETRAHEDRAL[k]`, of an anion at
    /// `-TETRAHEDRAL[k]`. `NO_NEIGHBOR` marks a cut bond at an open face.
    pub neighbors: Vec<[u32; 4]>,
    /// Periodic image (in box lengths) to add to the neighbour position.
    pub images: Vec<[[i8; 3]; 4]>,
}

/// Region of a point given the lens and interface thickness.
pub fn classify_point(lens: &Lens, thickness: f64, p: [f64; 3]) -> Region {
    if lens.contains(p) {
        Region::Dot
    } else if thickness > 0.0 && !lens.is_degenerate() && lens.distance_to_surface(p) <= thickness {
        Region::Interface
    } else {
        Region::Buffer
    }
}

pub fn build_structure(
    geometry: &DotGeometry,
    disorder: &DisorderSpec,
    seed: u64,
) -> Result<AtomisticStructure, GeometryError> {
    build_realization(geometry, disorder, seed, 0)
}

/// Realization `stream` of the random stream family keyed by `seed`.
pub fn build_realization(
    geometry: &DotGeometry,
    disorder: &DisorderSpec,
    seed: u64,
    stream: u64,
) -> Result<AtomisticStructure, GeometryError> {
    geometry.validate()?;
    disorder.validate()?;
    let cells = geometry.resolved_cells()?;
    let lens = geometry.lens(cells);
    let a = geometry.lattice_constant;
    let quarter = 0.25 * a;

    let species_names = vec![
        geometry.dot.cation.clone(),
        geometry.buffer.cation.clone(),
        geometry.dot.anion.clone(),
    ];
    const DOT_CATION: u8 = 0;
    const BUF_CATION: u8 = 1;
    const ANION: u8 = 2;

    let n_sites = 8 * cells[0] * cells[1] * cells[2];
    let mut s = AtomisticStructure {
        geometry: geometry.clone(),
        disorder: *disorder,
        seed,
        stream,
        cells,
        lens,
        species_names,
        positions: Vec::with_capacity(n_sites),
        lattice: Vec::with_capacity(n_sites),
        species: Vec::with_capacity(n_sites),
        sublattice: Vec::with_capacity(n_sites),
        region: Vec::with_capacity(n_sites),
        neighbors: Vec::new(),
        images: Vec::new(),
    };

    let wl_bottom = lens.base_center[2] - 0.5 * a;
    let mut rng = rng::stream(seed, stream);
    for cz in 0..cells[2] as i32 {
        for cy in 0..cells[1] as i32 {
            for cx in 0..cells[0] as i32 {
                for f in FCC {
                    for (sub, shift) in [(Sublattice::Cation, 0), (Sublattice::Anion, 1)] {
                        let q = [4 * cx + f[0] + shift, 4 * cy + f[1] + shift, 4 * cz + f[2] + shift];
                        let p = [q[0] as f64 * quarter, q[1] as f64 * quarter, q[2] as f64 * quarter];
                        let mut region = classify_point(&lens, disorder.interface_thickness, p);
                        if geometry.wetting_layer
                            && region == Region::Buffer
                            && p[2] > wl_bottom
                            && p[2] < lens.base_center[2]
                        {
                            region = Region::Dot;
                        }
                        let species = match sub {
                            Sublattice::Anion => ANION,
                            Sublattice::Cation => {
                                let base = if region == Region::Dot { DOT_CATION } else { BUF_CATION };
                                match disorder.mode {
                                    DisorderMode::None => base,
                                    DisorderMode::Alloy { x } => {
                                        if region == Region::Dot {
                                            let u: f64 = rng.random();
                                            if u < x {
                                                BUF_CATION
                                            } else {
                                                DOT_CATION
                                            }
                                        } else {
                                            base
                                        }
                                    }
                                    DisorderMode::Interface => {
                                        if region == Region::Interface {
                                            if rng.random::<bool>() {
                                                DOT_CATION
                                            } else {
                                                BUF_CATION
                                            }
                                        } else {
                                            base
                                        }
                                    }
                                }
                            }
                        };
                        s.positions.push(p);
                        s.lattice.push(q);
                        s.species.push(species);
                        s.sublattice.push(sub);
                        s.region.push(region);
                    }
                }
            }
        }
    }
    s.rebuild_topology();
    Ok(s)
}

impl AtomisticStructure {
    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    pub fn box_size(&self) -> [f64; 3] {
        let a = self.geometry.lattice_constant;
        [
            self.cells[0] as f64 * a,
            self.cells[1] as f64 * a,
            self.cells[2] as f64 * a,
        ]
    }

    pub fn species_name(&self, site: usize) -> &str {
        &self.species_names[self.species[site] as usize]
    }

    pub fn region_count(&self, region: Region) -> usize {
        self.region.iter().filter(|&&r| r == region).count()
    }

    /// Host compound of a cation site (by its species).
    pub fn cation_compound(&self, site: usize) -> &Compound {
        if self.species_name(site) == self.geometry.dot.cation {
            &self.geometry.dot
        } else {
            &self.geometry.buffer
        }
    }

    pub fn is_interior(&self, site: usize) -> bool {
        self.neighbors[site].iter().all(|&n| n != NO_NEIGHBOR)
    }

    /// Vector from `site` to its neighbour in slot `k` using the current positions.
    pub fn bond_vector(&self, site: usize, k: usize) -> Option<[f64; 3]> {
        let j = self.neighbors[site][k];
        if j == NO_NEIGHBOR {
            return None;
        }
        Some(self.bond_vector_with(&self.positions, site, k))
    }

    /// Bond vector for arbitrary positions on the same topology.
    pub fn bond_vector_with(&self, positions: &[[f64; 3]], site: usize, k: usize) -> [f64; 3] {
        let j = self.neighbors[site][k] as usize;
        let img = self.images[site][k];
        let l = self.box_size();
        let pi = positions[site];
        let pj = positions[j];
        [
            pj[0] + img[0] as f64 * l[0] - pi[0],
            pj[1] + img[1] as f64 * l[1] - pi[1],
            pj[2] + img[2] as f64 * l[2] - pi[2],
        ]
    }

    /// Each bond once, as (cation, slot) pairs.
    pub fn bonds(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        (0..self.len())
            .filter(move |&i| self.sublattice[i] == Sublattice::Cation)
            .flat_map(move |i| (0..4).filter(move |&k| self.neighbors[i][k] != NO_NEIGHBOR).map(move |k| (i, k)))
    }

    pub fn with_positions(&self, positions: Vec<[f64; 3]>) -> AtomisticStructure {
        assert_eq!(positions.len(), self.len());
        AtomisticStructure {
            positions,
            ..self.clone()
        }
    }

    /// Neighbour lists from the ideal lattice coordinates.
    pub fn rebuild_topology(&mut self) {
        let dims = [
            4 * self.cells[0] as i32,
            4 * self.cells[1] as i32,
            4 * self.cells[2] as i32,
        ];
        let flat = |q: [i32; 3]| -> usize {
            (q[0] + dims[0] * (q[1] + dims[1] * q[2])) as usize
        };
        let mut index = vec![NO_NEIGHBOR; (dims[0] * dims[1] * dims[2]) as usize];
        for (i, q) in self.lattice.iter().enumerate() {
            index[flat(*q)] = i as u32;
        }
        let periodic = self.geometry.boundary == Boundary::Periodic;
        let n = self.len();
        self.neighbors = vec![[NO_NEIGHBOR; 4]; n];
        self.images = vec![[[0i8; 3]; 4]; n];
        for i in 0..n {
            let sign = match self.sublattice[i] {
                Sublattice::Cation => 1,
                Sublattice::Anion => -1,
            };
            for (k, t) in TETRAHEDRAL.iter().enumerate() {
                let mut q = [0i32; 3];
                let mut img = [0i8; 3];
                let mut ok = true;
                for d in 0..3 {
                    let v = self.lattice[i][d] + sign * t[d];
                    if v < 0 || v >= dims[d] {
                        if !periodic {
                            ok = false;
                        }
                        img[d] = if v < 0 { -1 } else { 1 };
                        q[d] = v.rem_euclid(dims[d]);
                    } else {
                        q[d] = v;
                    }
                }
                if !ok {
                    continue;
                }
                let j = index[flat(q)];
                if j != NO_NEIGHBOR {
                    self.neighbors[i][k] = j;
                    self.images[i][k] = img;
                }
            }
        }
    }

    /// Region of a site recomputed from its ideal position.
    pub fn classify_region(&self, site: usize) -> Region {
        let quarter = 0.25 * self.geometry.lattice_constant;
        let q = self.lattice[site];
        let p = [q[0] as f64 * quarter, q[1] as f64 * quarter, q[2] as f64 * quarter];
        classify_point(&self.lens, self.disorder.interface_thickness, p)
    }
}
