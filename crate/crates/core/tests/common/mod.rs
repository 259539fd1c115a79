#![allow(dead_code)]

use qdot_hf::geometry::{build_structure, AtomisticStructure, Boundary, DisorderSpec, DotGeometry, Margins};
use qdot_hf::physcore::Database;

pub fn db() -> Database {
    Database::bundled()
}

/// Bulk `material` on the lattice constant of `lattice_of`.
pub fn bulk(material: &str, lattice_of: &str, cells: usize, boundary: Boundary) -> AtomisticStructure {
    let db = db();
    let mut g = DotGeometry::from_database(&db, 0.0, 0.0, material, material).unwrap();
    g.lattice_constant = db.material(lattice_of).unwrap().lattice_constant;
    g.box_cells = Some([cells; 3]);
    g.margins = Margins {
        lateral: 0.0,
        below: 0.0,
        above: 0.0,
    };
    g.boundary = boundary;
    build_structure(&g, &DisorderSpec::default(), 1).unwrap()
}

/// Small InAs lens in GaAs.
pub fn small_dot(diameter: f64, height: f64, margin: f64, boundary: Boundary) -> AtomisticStructure {
    let db = db();
    let mut g = DotGeometry::from_database(&db, diameter, height, "InAs", "GaAs").unwrap();
    g.margins = Margins {
        lateral: margin,
        below: margin,
        above: margin,
    };
    g.boundary = boundary;
    build_structure(&g, &DisorderSpec::default(), 1).unwrap()
}

/// Deterministic pseudo-random displacement in [-amp, amp]^3 per site.
pub fn jiggle(s: &AtomisticStructure, amp: f64, seed: u64) -> AtomisticStructure {
    use rand::Rng;
    let mut rng = qdot_hf::rng::stream(seed, 99);
    let p = s
        .positions
        .iter()
        .map(|p| {
            [
                p[0] + amp * (2.0 * rng.random::<f64>() - 1.0),
                p[1] + amp * (2.0 * rng.random::<f64>() - 1.0),
                p[2] + amp * (2.0 * rng.random::<f64>() - 1.0),
            ]
        })
        .collect();
    s.with_positions(p)
}
