mod common;

use common::{bulk, db, jiggle, small_dot};
use proptest::prelude::*;
use qdot_hf::geometry::{AtomisticStructure, Boundary, Region};
use qdot_hf::strain::{
    relax, vff_energy, vff_forces, vff_gradient, RelaxOptions, StrainError, VffModel,
};

fn model() -> VffModel {
    VffModel::from_database(&db()).unwrap()
}

fn scaled(s: &AtomisticStructure, f: f64) -> AtomisticStructure {
    let mut out = s.with_positions(s.positions.iter().map(|p| [p[0] * f, p[1] * f, p[2] * f]).collect());
    out.geometry.lattice_constant *= f;
    out
}

/// Energy of a uniformly scaled perfect crystal with `n` sites: every bond
/// has length `d`, every angle stays tetrahedral so `r1.r2 = -d^2/3`.
fn uniform_energy(n: usize, alpha: f64, beta: f64, d0: f64, d: f64) -> f64 {
    let x = d * d - d0 * d0;
    let bonds = 2.0 * n as f64 * 3.0 * alpha / (8.0 * d0 * d0) * x * x;
    let angles = 6.0 * n as f64 * 3.0 * beta / (8.0 * d0 * d0) * (x / 3.0).powi(2);
    bonds + angles
}

fn finite_difference_error(s: &AtomisticStructure, m: &VffModel) -> f64 {
    let g = vff_gradient(s, m).unwrap();
    let h = 1e-5;
    let mut worst: f64 = 0.0;
    let gmax = g.iter().flatten().fold(0.0f64, |a, v| a.max(v.abs()));
    for i in (0..s.len()).step_by((s.len() / 40).max(1)) {
        for d in 0..3 {
            let mut p = s.positions.clone();
            p[i][d] += h;
            let ep = vff_energy(&s.with_positions(p.clone()), m).unwrap();
            p[i][d] -= 2.0 * h;
            let em = vff_energy(&s.with_positions(p), m).unwrap();
            let fd = (ep - em) / (2.0 * h);
            worst = worst.max((fd - g[i][d]).abs());
        }
    }
    worst / gmax
}

#[test]
fn ideal_bulk_has_zero_energy_and_force() {
    let s = bulk("GaAs", "GaAs", 2, Boundary::Periodic);
    let m = model();
    assert!(vff_energy(&s, &m).unwrap().abs() < 1e-20);
    let f = vff_forces(&s, &m).unwrap();
    assert!(f.iter().flatten().all(|v| v.abs() < 1e-12));
}

#[test]
fn hydrostatic_compression_matches_uniform_form() {
    let s = bulk("GaAs", "GaAs", 2, Boundary::Periodic);
    let m = model();
    let p = m.params("Ga", "As").unwrap();
    for eps in [-0.01, 0.01, -0.005] {
        let e = vff_energy(&scaled(&s, 1.0 + eps), &m).unwrap();
        let want = uniform_energy(s.len(), p.alpha, p.beta, p.d0, p.d0 * (1.0 + eps));
        assert!(e > 0.0);
        assert!((e - want).abs() < 1e-9 * want, "{e} vs {want}");
    }
    // leading-order quadratic: curvature from +-1% agrees with +-0.5% to O(eps^2)
    let e = |x: f64| vff_energy(&scaled(&s, 1.0 + x), &m).unwrap();
    let c1 = (e(0.01) + e(-0.01)) / (2.0 * 0.01f64.powi(2));
    let c2 = (e(0.005) + e(-0.005)) / (2.0 * 0.005f64.powi(2));
    assert!((c1 / c2 - 1.0).abs() < 1e-3);
    assert!(((e(0.01) - e(-0.01)) / (e(0.01) + e(-0.01))).abs() < 0.05);
}

#[test]
fn inas_on_gaas_lattice_is_strained() {
    let s = bulk("InAs", "GaAs", 2, Boundary::Periodic);
    let m = model();
    let p = m.params("In", "As").unwrap();
    let d = 3f64.sqrt() / 4.0 * db().material("GaAs").unwrap().lattice_constant;
    let want = uniform_energy(s.len(), p.alpha, p.beta, p.d0, d);
    let e = vff_energy(&s, &m).unwrap();
    assert!(e > 0.0);
    assert!((e - want).abs() < 1e-9 * want);
    // mismatch of about 7 %
    assert!((p.d0 / d - 1.0 - 0.0716).abs() < 1e-3);
}

#[test]
fn missing_parameters_are_reported() {
    let s = bulk("GaAs", "GaAs", 1, Boundary::Periodic);
    let mut m = model();
    m.bonds.retain(|k, _| k.0 != "Ga");
    assert_eq!(
        vff_energy(&s, &m),
        Err(StrainError::MissingParameters {
            cation: "Ga".into(),
            anion: "As".into()
        })
    );
}

#[test]
fn gradient_matches_finite_differences() {
    let m = model();
    let s = jiggle(&small_dot(2.0, 1.0, 0.6, Boundary::Periodic), 0.01, 3);
    assert!(finite_difference_error(&s, &m) < 1e-6);
    let s = jiggle(&small_dot(2.0, 1.0, 0.6, Boundary::Open), 0.01, 4);
    assert!(finite_difference_error(&s, &m) < 1e-6);
}

#[test]
fn single_displacement_is_restored() {
    let s = bulk("GaAs", "GaAs", 2, Boundary::Periodic);
    let m = model();
    let i = s.len() / 2;
    let dx = [3e-4, -1e-4, 2e-4];
    let mut p = s.positions.clone();
    for d in 0..3 {
        p[i][d] += dx[d];
    }
    let f = vff_forces(&s.with_positions(p), &m).unwrap()[i];
    let cos = (f[0] * dx[0] + f[1] * dx[1] + f[2] * dx[2])
        / ((f[0] * f[0] + f[1] * f[1] + f[2] * f[2]).sqrt() * (dx[0] * dx[0] + dx[1] * dx[1] + dx[2] * dx[2]).sqrt());
    assert!(cos < -0.999, "{cos}");
}

#[test]
fn rigid_motion_leaves_energy_unchanged() {
    let m = model();
    let s = jiggle(&small_dot(2.0, 1.0, 0.6, Boundary::Open), 0.02, 5);
    let e0 = vff_energy(&s, &m).unwrap();
    let (a, b) = (0.3f64, 1.1f64);
    let moved: Vec<[f64; 3]> = s
        .positions
        .iter()
        .map(|p| {
            let x = a.cos() * p[0] - a.sin() * p[1];
            let y = a.sin() * p[0] + a.cos() * p[1];
            let z = p[2];
            let y2 = b.cos() * y - b.sin() * z;
            let z2 = b.sin() * y + b.cos() * z;
            [x + 1.7, y2 - 0.4, z2 + 12.0]
        })
        .collect();
    let e1 = vff_energy(&s.with_positions(moved), &m).unwrap();
    assert!(((e1 - e0) / e0).abs() < 1e-10, "{e0} {e1}");
}

#[test]
fn ideal_bulk_relaxes_in_zero_iterations() {
    let s = bulk("GaAs", "GaAs", 2, Boundary::Periodic);
    let r = relax(&s, &model(), &RelaxOptions::default()).unwrap();
    assert_eq!(r.iterations, 0);
    assert_eq!(r.structure.positions, s.positions);
}

#[test]
fn perturbed_interior_returns_to_ideal() {
    let s = bulk("GaAs", "GaAs", 3, Boundary::Periodic);
    let shell = 0.3;
    let l = s.box_size();
    let q = 0.25 * s.geometry.lattice_constant;
    let interior: Vec<bool> = s
        .lattice
        .iter()
        .map(|c| (0..3).all(|d| c[d] as f64 * q >= shell && l[d] - c[d] as f64 * q > shell))
        .collect();
    let p = jiggle(&s, 0.01, 8);
    let moved = s
        .positions
        .iter()
        .zip(&p.positions)
        .zip(&interior)
        .map(|((a, b), i)| if *i { *b } else { *a })
        .collect();
    let r = relax(&s.with_positions(moved), &model(), &RelaxOptions::default()).unwrap();
    assert!(r.iterations > 0);
    let worst = r
        .structure
        .positions
        .iter()
        .zip(&s.positions)
        .flat_map(|(a, b)| (0..3).map(move |d| (a[d] - b[d]).abs()))
        .fold(0.0, f64::max);
    assert!(worst < 1e-4, "{worst}");
}

#[test]
fn dot_bonds_expand_and_relax_is_idempotent() {
    let m = model();
    let s = small_dot(4.0, 2.0, 1.2, Boundary::Periodic);
    let opts = RelaxOptions::default();
    let r = relax(&s, &m, &opts).unwrap();
    assert!(r.energy < vff_energy(&s, &m).unwrap());
    let d_gaas = m.params("Ga", "As").unwrap().d0;
    let d_inas = m.params("In", "As").unwrap().d0;
    let inas: Vec<f64> = r
        .bonds
        .iter()
        .filter(|b| r.structure.region[b.cation as usize] == Region::Dot && r.structure.species_name(b.cation as usize) == "In")
        .map(|b| b.length)
        .collect();
    let mean = inas.iter().sum::<f64>() / inas.len() as f64;
    assert!(mean > d_gaas && mean < d_inas, "{mean}");
    for b in &r.bonds {
        let c = b.cosines;
        assert!((c[0] * c[0] + c[1] * c[1] + c[2] * c[2] - 1.0).abs() < 1e-12);
    }
    assert_eq!(r.structure.neighbors, s.neighbors);

    let again = relax(&r.structure, &m, &opts).unwrap();
    assert_eq!(again.iterations, 0);

    let summary = r.summary(&m).unwrap();
    assert!(summary.dot.mean < 0.0);
    assert!(summary.dot.bonds > 0);
}

#[test]
fn exhausted_iterations_report_norm() {
    let s = jiggle(&bulk("GaAs", "GaAs", 2, Boundary::Periodic), 0.01, 9);
    let opts = RelaxOptions {
        max_iter: 2,
        ..Default::default()
    };
    match relax(&s, &model(), &opts) {
        Err(StrainError::NotConverged { iterations, gradient_norm }) => {
            assert_eq!(iterations, 2);
            assert!(gradient_norm > 1e-6);
        }
        other => panic!("{other:?}"),
    }
    let bad = RelaxOptions {
        tol: 0.0,
        ..Default::default()
    };
    assert_eq!(relax(&s, &model(), &bad).unwrap_err(), StrainError::BadTolerance);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(6))]
    #[test]
    fn gradient_is_consistent_on_random_structures(seed in 0u64..1000, amp in 0.001f64..0.03) {
        let s = jiggle(&small_dot(1.6, 0.8, 0.5, Boundary::Periodic), amp, seed);
        prop_assert!(finite_difference_error(&s, &model()) < 1e-6);
    }
}
