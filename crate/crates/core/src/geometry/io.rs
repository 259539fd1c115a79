//! Columnar structure export.
//!
//! `<stem>.tsv` holds one row per site:
//! `index element x y z sublattice region`, coordinates in nm written with
//! shortest round-trip formatting. `<stem>.meta.json` carries the geometry,
//! disorder, seed and counts needed to rebuild the topology on import.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::lens::Lens;
use super::structure::{AtomisticStructure, DisorderSpec, DotGeometry, Region, Sublattice};

#[derive(Debug, Error)]
pub enum StructureIoError {
    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("bad metadata: {0}")]
    Meta(#[from] serde_json::Error),
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StructureCounts {
    pub total: usize,
    pub dot: usize,
    pub interface: usize,
    pub buffer: usize,
    pub by_species: BTreeMap<String, usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StructureMeta {
    pub geometry: DotGeometry,
    pub disorder: DisorderSpec,
    pub seed: u64,
    pub stream: u64,
    pub cells: [usize; 3],
    pub lens: Lens,
    pub species_names: Vec<String>,
    pub counts: StructureCounts,
}

pub fn counts(s: &AtomisticStructure) -> StructureCounts {
    let mut by_species = BTreeMap::new();
    for i in 0..s.len() {
        *by_species.entry(s.species_name(i).to_string()).or_insert(0) += 1;
    }
    StructureCounts {
        total: s.len(),
        dot: s.region_count(Region::Dot),
        interface: s.region_count(Region::Interface),
        buffer: s.region_count(Region::Buffer),
        by_species,
    }
}

pub fn paths(stem: &Path) -> (PathBuf, PathBuf) {
    let mut table = stem.as_os_str().to_owned();
    table.push(".tsv");
    let mut meta = stem.as_os_str().to_owned();
    meta.push(".meta.json");
    (PathBuf::from(table), PathBuf::from(meta))
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> StructureIoError + '_ {
    move |source| StructureIoError::Io {
        path: path.display().to_string(),
        source,
    }
}

pub fn structure_table(s: &AtomisticStructure) -> String {
    let mut out = String::with_capacity(s.len() * 64);
    out.push_str("# index\telement\tx_nm\ty_nm\tz_nm\tsublattice\tregion\n");
    for i in 0..s.len() {
        let p = s.positions[i];
        let _ = writeln!(
            out,
            "{}\t{}\t{}\t{}\t{}\t{}\t{}",
            i,
            s.species_name(i),
            p[0],
            p[1],
            p[2],
            s.sublattice[i].as_str(),
            s.region[i].as_str()
        );
    }
    out
}

/// Writes `<stem>.tsv` and `<stem>.meta.json`; returns both paths.
pub fn write_structure(s: &AtomisticStructure, stem: &Path) -> Result<(PathBuf, PathBuf), StructureIoError> {
    let (table, meta) = paths(stem);
    let mut f = std::fs::File::create(&table).map_err(io_err(&table))?;
    f.write_all(structure_table(s).as_bytes()).map_err(io_err(&table))?;
    let m = StructureMeta {
        geometry: s.geometry.clone(),
        disorder: s.disorder,
        seed: s.seed,
        stream: s.stream,
        cells: s.cells,
        lens: s.lens,
        species_names: s.species_names.clone(),
        counts: counts(s),
    };
    std::fs::write(&meta, serde_json::to_string_pretty(&m)?).map_err(io_err(&meta))?;
    Ok((table, meta))
}

pub fn read_structure(stem: &Path) -> Result<AtomisticStructure, StructureIoError> {
    let (table, meta_path) = paths(stem);
    let meta: StructureMeta =
        serde_json::from_str(&std::fs::read_to_string(&meta_path).map_err(io_err(&meta_path))?)?;
    let text = std::fs::read_to_string(&table).map_err(io_err(&table))?;

    let quarter = 0.25 * meta.geometry.lattice_constant;
    let n = meta.counts.total;
    let mut s = AtomisticStructure {
        geometry: meta.geometry,
        disorder: meta.disorder,
        seed: meta.seed,
        stream: meta.stream,
        cells: meta.cells,
        lens: meta.lens,
        species_names: meta.species_names,
        positions: Vec::with_capacity(n),
        lattice: Vec::with_capacity(n),
        species: Vec::with_capacity(n),
        sublattice: Vec::with_capacity(n),
        region: Vec::with_capacity(n),
        neighbors: Vec::new(),
        images: Vec::new(),
    };
    for (lineno, line) in text.lines().enumerate() {
        if line.starts_with('#') || line.trim().is_empty() {
            continue;
        }
        let bad = |message: String| StructureIoError::Parse {
            line: lineno + 1,
            message,
        };
        let cols: Vec<&str> = line.split('\t').collect();
        if cols.len() != 7 {
            return Err(bad(format!("expected 7 columns, found {}", cols.len())));
        }
        let idx: usize = cols[0].parse().map_err(|e| bad(format!("index: {e}")))?;
        if idx != s.positions.len() {
            return Err(bad(format!("index {idx} out of order")));
        }
        let sp = s
            .species_names
            .iter()
            .position(|n| n == cols[1])
            .ok_or_else(|| bad(format!("unknown element {}", cols[1])))?;
        let mut p = [0.0; 3];
        for d in 0..3 {
            p[d] = cols[2 + d].parse().map_err(|e| bad(format!("coordinate: {e}")))?;
        }
        let sub = match cols[5] {
            "cation" => Sublattice::Cation,
            "anion" => Sublattice::Anion,
            other => return Err(bad(format!("sublattice {other}"))),
        };
        let region = match cols[6] {
            "dot" => Region::Dot,
            "interface" => Region::Interface,
            "buffer" => Region::Buffer,
            other => return Err(bad(format!("region {other}"))),
        };
        s.lattice.push([
            (p[0] / quarter).round() as i32,
            (p[1] / quarter).round() as i32,
            (p[2] / quarter).round() as i32,
        ]);
        s.positions.push(p);
        s.species.push(sp as u8);
        s.sublattice.push(sub);
        s.region.push(region);
    }
    if s.positions.len() != n {
        return Err(StructureIoError::Parse {
            line: 0,
            message: format!("expected {n} sites, found {}", s.positions.len()),
        });
    }
    s.rebuild_topology();
    Ok(s)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{build_structure, Margins};
    use crate::physcore::Database;

    #[test]
    fn round_trip_is_bit_exact() {
        let db = Database::bundled();
        let mut g = DotGeometry::from_database(&db, 3.0, 1.5, "InAs", "GaAs").unwrap();
        g.margins = Margins {
            lateral: 1.0,
            below: 1.0,
            above: 1.0,
        };
        let s = build_structure(&g, &DisorderSpec::alloy(0.4), 5).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let stem = dir.path().join("s");
        write_structure(&s, &stem).unwrap();
        let back = read_structure(&stem).unwrap();
        assert_eq!(s, back);

        // perturbed positions also survive exactly
        let moved: Vec<[f64; 3]> = s
            .positions
            .iter()
            .enumerate()
            .map(|(i, p)| [p[0] + 1e-3 * (i as f64).sin(), p[1] - 2e-3 / 3.0, p[2] + 0.01])
            .collect();
        let r = s.with_positions(moved);
        write_structure(&r, &stem).unwrap();
        assert_eq!(read_structure(&stem).unwrap(), r);
    }
}
