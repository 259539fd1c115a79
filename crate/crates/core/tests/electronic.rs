mod common;

use common::{bulk, small_dot};
use nalgebra::{DMatrix, SymmetricEigen};
use proptest::prelude::*;
use qdot_hf::electronic::*;
use qdot_hf::geometry::{Boundary, Sublattice, NO_NEIGHBOR};

const TOL: f64 = 1e-12;

fn vogl() -> TbParameterSet {
    TbParameterSet::bundled("vogl-sp3s*").unwrap()
}

fn toy() -> TbParameterSet {
    TbParameterSet::bundled("toy-s").unwrap()
}

fn unit(v: [f64; 3]) -> [f64; 3] {
    let n = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
    [v[0] / n, v[1] / n, v[2] / n]
}

fn ints(shell_a: Shell, shell_b: Shell, v: [f64; 3]) -> Integrals {
    let mut out = [[[0.0; 3]; 4]; 4];
    out[shell_a as usize][shell_b as usize] = v;
    out
}

fn sorted_eigs(m: DMatrix<f64>) -> Vec<f64> {
    let mut e: Vec<f64> = SymmetricEigen::new(m).eigenvalues.iter().copied().collect();
    e.sort_by(f64::total_cmp);
    e
}

fn sorted(mut v: Vec<f64>) -> Vec<f64> {
    v.sort_by(f64::total_cmp);
    v
}

fn close_all(a: &[f64], b: &[f64], tol: f64) -> bool {
    a.len() == b.len() && a.iter().zip(b).all(|(x, y)| (x - y).abs() <= tol)
}

fn sub_block(dir: [f64; 3], v: &Integrals, rows: &[Orbital], cols: &[Orbital]) -> DMatrix<f64> {
    DMatrix::from_fn(rows.len(), cols.len(), |i, j| sk_element(rows[i], cols[j], dir, v))
}

const P: [Orbital; 3] = [Orbital::Px, Orbital::Py, Orbital::Pz];
const D: [Orbital; 5] = [Orbital::Dxy, Orbital::Dyz, Orbital::Dzx, Orbital::Dx2y2, Orbital::Dz2];

#[test]
fn sp3s_block_along_111_matches_hand_values() {
    let p = vogl();
    let m = p.resolve(p.material("GaAs").unwrap(), BasisTier::Sp3s).unwrap();
    let v = m.integrals;
    let r = 1.0 / 3f64.sqrt();
    let blk = slater_koster_block([r, r, r], &v, BasisTier::Sp3s).unwrap();
    let at = |a: usize, b: usize| blk[a * 5 + b];
    let (ss, sp, ps, pps, ppp, xp, px) = (
        v[0][0][0], v[0][1][0], v[1][0][0], v[1][1][0], v[1][1][1], v[3][1][0], v[1][3][0],
    );
    assert!((at(0, 0) - ss).abs() < TOL);
    for k in 1..4 {
        // s on the origin, p on the neighbour along +dir.
        assert!((at(0, k) - r * sp).abs() < TOL);
        // p on the origin, s on the neighbour.
        assert!((at(k, 0) + r * ps).abs() < TOL);
        assert!((at(4, k) - r * xp).abs() < TOL);
        assert!((at(k, 4) + r * px).abs() < TOL);
        assert!((at(k, k) - (pps / 3.0 + 2.0 * ppp / 3.0)).abs() < TOL);
        for j in 1..4 {
            if j != k {
                assert!((at(k, j) - (pps - ppp) / 3.0).abs() < TOL);
            }
        }
    }
}

#[test]
fn axial_bond_couples_only_matching_symmetry() {
    let dir = [0.0, 0.0, 1.0];
    let v = ints(Shell::D, Shell::D, [-1.0, 0.5, -0.25]);
    let b = sub_block(dir, &v, &D, &D);
    // dz2 is sigma, dyz and dzx are pi, dxy and dx2-y2 are delta.
    let expect = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![-0.25, 0.5, 0.5, -0.25, -1.0]));
    assert!((b - expect).abs().max() < TOL);

    let v = ints(Shell::P, Shell::D, [2.0, 3.0, 0.0]);
    let b = sub_block(dir, &v, &P, &D);
    let mut expect = DMatrix::zeros(3, 5);
    expect[(0, 2)] = 3.0; // px with dzx
    expect[(1, 1)] = 3.0; // py with dyz
    expect[(2, 4)] = 2.0; // pz with dz2
    assert!((b - expect).abs().max() < TOL);
}

#[test]
fn reverse_bond_block_is_transpose() {
    let mut v: Integrals = [[[0.0; 3]; 4]; 4];
    let mut x = 0.3;
    for a in 0..4 {
        for b in 0..4 {
            for t in 0..3 {
                x = (x * 7.3 + 0.11) % 2.0 - 1.0;
                v[a][b][t] = x;
            }
        }
    }
    let dir = unit([0.3, -0.7, 0.4]);
    let back = [-dir[0], -dir[1], -dir[2]];
    let tier = BasisTier::Sp3d5s;
    let n = tier.norb();
    let fwd = slater_koster_block(dir, &v, tier).unwrap();
    let rev = slater_koster_block(back, &reversed(&v), tier).unwrap();
    for a in 0..n {
        for b in 0..n {
            assert!((fwd[a * n + b] - rev[b * n + a]).abs() < TOL, "{a} {b}");
        }
    }
}

#[test]
fn unnormalized_direction_is_rejected() {
    let v = [[[0.0; 3]; 4]; 4];
    assert!(matches!(
        slater_koster_block([1.0, 1.0, 0.0], &v, BasisTier::Sp3s),
        Err(SkError::Unnormalized(_))
    ));
}

#[test]
fn strain_scale_follows_power_law() {
    assert!((strain_scale(-1.0, 0.25, 0.5, 2.0).unwrap() + 0.25).abs() < TOL);
    assert!((strain_scale(3.0, 0.3, 0.2, 3.0).unwrap() - 3.0 * 1.5f64.powi(3)).abs() < 1e-12);
    assert_eq!(strain_scale(1.7, 0.25, 0.3, 0.0).unwrap(), 1.7);
    assert!(strain_scale(1.0, 0.25, 0.0, 2.0).is_err());
}

fn arb_dir() -> impl Strategy<Value = [f64; 3]> {
    (-1.0f64..1.0, -1.0f64..1.0, -1.0f64..1.0)
        .prop_filter("nonzero", |(x, y, z)| x * x + y * y + z * z > 0.01)
        .prop_map(|(x, y, z)| unit([x, y, z]))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn pp_block_has_rotation_invariant_spectrum(dir in arb_dir(), s in -3.0f64..3.0, p in -3.0f64..3.0) {
        let b = sub_block(dir, &ints(Shell::P, Shell::P, [s, p, 0.0]), &P, &P);
        prop_assert!(close_all(&sorted_eigs(b), &sorted(vec![s, p, p]), 1e-10));
    }

    #[test]
    fn dd_block_has_rotation_invariant_spectrum(
        dir in arb_dir(), s in -3.0f64..3.0, p in -3.0f64..3.0, d in -3.0f64..3.0
    ) {
        let b = sub_block(dir, &ints(Shell::D, Shell::D, [s, p, d]), &D, &D);
        prop_assert!(close_all(&sorted_eigs(b), &sorted(vec![s, p, p, d, d]), 1e-10));
    }

    #[test]
    fn pd_block_has_rotation_invariant_singular_values(dir in arb_dir(), s in -3.0f64..3.0, p in -3.0f64..3.0) {
        let b = sub_block(dir, &ints(Shell::P, Shell::D, [s, p, 0.0]), &P, &D);
        let gram = &b * b.transpose();
        prop_assert!(close_all(&sorted_eigs(gram), &sorted(vec![s * s, p * p, p * p]), 1e-10));
    }

    #[test]
    fn s_rows_have_rotation_invariant_norm(dir in arb_dir(), v in -3.0f64..3.0) {
        let sp = sub_block(dir, &ints(Shell::S, Shell::P, [v, 0.0, 0.0]), &[Orbital::S], &P);
        let sd = sub_block(dir, &ints(Shell::S, Shell::D, [v, 0.0, 0.0]), &[Orbital::S], &D);
        prop_assert!((sp.norm() - v.abs()).abs() < 1e-10);
        prop_assert!((sd.norm() - v.abs()).abs() < 1e-10);
    }
}

#[test]
fn bundled_sets_load_and_roundtrip() {
    for (name, _) in BUNDLED {
        let p = TbParameterSet::bundled(name).unwrap();
        let again = TbParameterSet::from_toml(&p.to_toml()).unwrap();
        assert_eq!(p, again);
    }
    assert!(matches!(TbParameterSet::bundled("nope"), Err(ParamError::UnknownBundled(_))));
}

#[test]
fn tier_beyond_the_set_reports_missing_key() {
    let p = toy();
    let m = p.material("GaAs").unwrap();
    match p.resolve(m, BasisTier::Sp3s) {
        Err(ParamError::Missing { key, .. }) => assert_eq!(key, "onsite_cation.p"),
        other => panic!("{other:?}"),
    }
}

#[test]
fn toy_band_bottom_matches_closed_form() {
    // Two-site cell at Gamma: [[ec, 4v], [4v, ea]].
    let p = toy();
    for (name, ec, ea) in [("GaAs", 4.9f64, 3.9f64), ("InAs", 4.0, 3.0)] {
        let e = gamma_conduction_edge(&p, name, BasisTier::SOnly).unwrap();
        let exact = 0.5 * (ec + ea) - (0.25 * (ec - ea) * (ec - ea) + 16.0).sqrt();
        assert!((e - exact).abs() < 1e-12, "{name}: {e} vs {exact}");
    }
}

#[test]
fn gamma_edges_match_targets() {
    for p in [vogl(), toy()] {
        for m in &p.materials {
            let target = m.gamma_cb_target.unwrap() + m.valence_band_offset;
            let e = gamma_conduction_edge(&p, &m.name, p.tier).unwrap();
            assert!((e - target).abs() < 0.05, "{} {}: {e} vs {target}", p.name, m.name);
        }
    }
    let gap = gamma_conduction_edge(&vogl(), "GaAs", BasisTier::Sp3s).unwrap()
        - gamma_valence_edge(&vogl(), "GaAs", BasisTier::Sp3s).unwrap().unwrap();
    assert!((gap - 1.55).abs() < 0.05, "GaAs gap {gap}");
}

#[test]
fn conventional_cell_folds_gamma_and_x() {
    let p = vogl();
    let tier = BasisTier::Sp3s;
    let s = bulk("GaAs", "GaAs", 1, Boundary::Periodic);
    let h = assemble(&s, &p, tier, &AssembleOptions::unstrained()).unwrap();
    let supercell = sorted_eigs(h.to_dense());

    let a = qdot_hf::physcore::Database::bundled().material("GaAs").unwrap().lattice_constant;
    let g = 2.0 * std::f64::consts::PI / a;
    let mut folded = Vec::new();
    for k in [[0.0, 0.0, 0.0], [g, 0.0, 0.0], [0.0, g, 0.0], [0.0, 0.0, g]] {
        folded.extend(bulk_bands(&p, "GaAs", tier, k).unwrap());
    }
    let folded = sorted(folded);
    assert_eq!(supercell.len(), folded.len());
    assert!(close_all(&supercell, &folded, 1e-8), "{supercell:?}\n{folded:?}");
}

#[test]
fn hamiltonian_is_symmetric_and_bond_sparse() {
    let s = small_dot(2.0, 1.0, 0.6, Boundary::Open);
    let h = assemble(&s, &vogl(), BasisTier::Sp3s, &AssembleOptions::default()).unwrap();
    let m = h.to_dense();
    assert_eq!(m, m.transpose());
    let no = h.norb();
    for i in 0..s.len() {
        let mut linked = vec![i];
        linked.extend(s.neighbors[i].iter().filter(|&&j| j != NO_NEIGHBOR).map(|&j| j as usize));
        for j in 0..s.len() {
            if linked.contains(&j) {
                continue;
            }
            for a in 0..no {
                for b in 0..no {
                    assert_eq!(m[(i * no + a, j * no + b)], 0.0);
                }
            }
        }
    }
    // Sparse product agrees with the dense matrix.
    let x: Vec<f64> = (0..h.dim()).map(|i| ((i * 37 % 101) as f64 - 50.0) / 50.0).collect();
    let mut y = vec![0.0; h.dim()];
    h.apply(&x, &mut y);
    let dense = &m * nalgebra::DVector::from_vec(x);
    let err = y.iter().zip(dense.iter()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    assert!(err < 1e-12, "{err}");
}

#[test]
fn interface_anion_averages_neighbour_materials() {
    let s = small_dot(3.0, 1.5, 0.6, Boundary::Open);
    let h = assemble(&s, &toy(), BasisTier::SOnly, &AssembleOptions::unstrained()).unwrap();
    let mut seen = 0;
    for i in 0..s.len() {
        if s.sublattice[i] != Sublattice::Anion {
            continue;
        }
        let nb: Vec<usize> = s.neighbors[i].iter().filter(|&&j| j != NO_NEIGHBOR).map(|&j| j as usize).collect();
        let n_in = nb.iter().filter(|&&j| s.species_name(j) == "In").count();
        let expect = (3.0 * n_in as f64 + 3.9 * (nb.len() - n_in) as f64) / nb.len() as f64;
        assert!((h.onsite[i] - expect).abs() < 1e-12);
        if n_in > 0 && n_in < nb.len() {
            seen += 1;
        }
    }
    assert!(seen > 0);
}

#[test]
fn harrison_and_lowdin_on_uniform_strain() {
    // InAs squeezed onto the GaAs lattice: every bond has the same length.
    let s = bulk("InAs", "GaAs", 2, Boundary::Periodic);
    let mut p = toy();
    let m = p.materials.iter_mut().find(|m| m.name == "InAs").unwrap();
    m.lowdin_cation.insert("s".into(), 2.0);
    m.lowdin_anion.insert("s".into(), -1.0);
    let d0 = m.bond_length;
    let (d, _) = {
        let r = s.bond_vector(0, 0).unwrap();
        ((r[0] * r[0] + r[1] * r[1] + r[2] * r[2]).sqrt(), ())
    };
    let eps = (d - d0) / d0;
    assert!(eps < -0.06);

    let h = assemble(&s, &p, BasisTier::SOnly, &AssembleOptions::default()).unwrap();
    for b in &h.blocks {
        assert!((b + (d0 / d).powi(2)).abs() < 1e-12);
    }
    for i in 0..s.len() {
        let expect = if h.is_cation[i] { 4.0 + 2.0 * eps } else { 3.0 - eps };
        assert!((h.onsite[i] - expect).abs() < 1e-12);
    }

    let plain = assemble(&s, &p, BasisTier::SOnly, &AssembleOptions::unstrained()).unwrap();
    assert!(plain.blocks.iter().all(|b| *b == -1.0));
    assert!(plain.onsite.iter().zip(&plain.is_cation).all(|(e, c)| *e == if *c { 4.0 } else { 3.0 }));
}

#[test]
fn ideal_bulk_is_unchanged_by_strain_terms() {
    let s = bulk("GaAs", "GaAs", 2, Boundary::Periodic);
    let a = assemble(&s, &vogl(), BasisTier::Sp3s, &AssembleOptions::default()).unwrap();
    let b = assemble(&s, &vogl(), BasisTier::Sp3s, &AssembleOptions::unstrained()).unwrap();
    let diff = a.blocks.iter().zip(&b.blocks).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
    assert!(diff < 1e-5, "{diff}");
}

#[test]
fn missing_bond_material_is_reported() {
    let mut p = toy();
    p.materials.retain(|m| m.name == "GaAs");
    let s = small_dot(2.0, 1.0, 0.6, Boundary::Open);
    match assemble(&s, &p, BasisTier::SOnly, &AssembleOptions::default()) {
        Err(AssembleError::Params(ParamError::NoBondMaterial { cation, anion })) => {
            assert_eq!((cation.as_str(), anion.as_str()), ("In", "As"));
        }
        other => panic!("{other:?}"),
    }
}

fn opts(n_states: usize, tol: f64) -> SolverOptions {
    SolverOptions {
        n_states,
        tol,
        ..SolverOptions::default()
    }
}

fn toy_dot(d: f64, h: f64, margin: f64) -> (qdot_hf::geometry::AtomisticStructure, SparseHamiltonian, GapWindow) {
    let s = small_dot(d, h, margin, Boundary::Periodic);
    let p = toy();
    let ham = assemble(&s, &p, BasisTier::SOnly, &AssembleOptions::default()).unwrap();
    let w = auto_window(&s, &p, BasisTier::SOnly).unwrap();
    (s, ham, w)
}

#[test]
fn lanczos_matches_dense_on_toy_dot() {
    let (s, h, w) = toy_dot(2.0, 1.0, 0.6);
    assert!(h.dim() <= 2000);
    let dense = solve_dense(&h, w.sigma, 3);
    let lz = solve_folded(&h, w.sigma, &opts(3, 1e-8), Some(start_vector(&s, 1, 3))).unwrap();
    for (a, b) in lz.states.iter().zip(&dense.states) {
        assert!(a.residual <= 1e-8);
        assert!((a.energy - b.energy).abs() < 1e-9, "{} vs {}", a.energy, b.energy);
        assert!((a.norm_sq() - 1.0).abs() < 1e-10);
    }
    for i in 0..3 {
        for j in 0..i {
            assert!(lz.states[i].overlap(&lz.states[j]).unwrap() < 1e-8);
        }
    }
    // The ground state is nondegenerate; its vector agrees too.
    assert!((lz.states[0].overlap(&dense.states[0]).unwrap() - 1.0).abs() < 1e-8);
    assert!(!lz.valence_like);
}

#[test]
fn lanczos_matches_dense_on_sp3s_bulk() {
    let s = bulk("GaAs", "GaAs", 2, Boundary::Periodic);
    let p = vogl();
    let h = assemble(&s, &p, BasisTier::Sp3s, &AssembleOptions::unstrained()).unwrap();
    let sigma = 1.3;
    let dense = solve_dense(&h, sigma, 2);
    let lz = solve_folded(&h, sigma, &opts(2, 1e-7), None).unwrap();
    for (a, b) in lz.states.iter().zip(&dense.states) {
        assert!(a.residual <= 1e-7);
        assert!((a.energy - b.energy).abs() < 1e-9, "{} vs {}", a.energy, b.energy);
    }
    // Closest state to a mid-gap target is the conduction edge.
    let cb = gamma_conduction_edge(&p, "GaAs", BasisTier::Sp3s).unwrap();
    assert!((lz.states[0].energy - cb).abs() < 1e-9);
    assert!(lz.states[0].s_character() > 0.99);
}

#[test]
fn rayleigh_quotient_equals_energy() {
    let (s, h, w) = toy_dot(3.0, 1.5, 0.6);
    let r = solve_folded(&h, w.sigma, &opts(2, 1e-7), Some(start_vector(&s, 1, 5))).unwrap();
    for wf in &r.states {
        let mut hx = vec![0.0; h.dim()];
        h.apply(&wf.coeffs, &mut hx);
        let q: f64 = wf.coeffs.iter().zip(&hx).map(|(a, b)| a * b).sum();
        assert!((q - wf.energy).abs() <= 1e-7);
    }
}

#[test]
fn gauge_shift_moves_energies_only() {
    let (_, h, w) = toy_dot(3.0, 1.5, 0.6);
    let c = 2.75;
    let a = solve_folded(&h, w.sigma, &opts(1, 1e-9), None).unwrap();
    let b = solve_folded(&h.shifted(c), w.sigma + c, &opts(1, 1e-9), None).unwrap();
    assert!((b.states[0].energy - a.states[0].energy - c).abs() < 1e-9);
    assert!((a.states[0].overlap(&b.states[0]).unwrap() - 1.0).abs() < 1e-9);
}

#[test]
fn diagonal_hamiltonian_returns_onsite_levels() {
    let s = bulk("GaAs", "GaAs", 1, Boundary::Periodic);
    let mut h = assemble(&s, &toy(), BasisTier::SOnly, &AssembleOptions::default()).unwrap();
    h.blocks.iter_mut().for_each(|b| *b = 0.0);
    for (i, e) in h.onsite.iter_mut().enumerate() {
        *e = i as f64;
    }
    let r = solve_folded(&h, 2.2, &opts(2, 1e-10), None).unwrap();
    assert!((r.states[0].energy - 2.0).abs() < 1e-10);
    assert!((r.states[1].energy - 3.0).abs() < 1e-10);
    assert!((r.states[0].site_weight(2) - 1.0).abs() < 1e-10);
}

#[test]
fn invalid_solver_settings_are_rejected() {
    let (_, h, _) = toy_dot(3.0, 1.5, 0.6);
    assert!(matches!(solve_folded(&h, 0.0, &opts(0, 1e-6), None), Err(SolverError::Invalid(_))));
    assert!(matches!(solve_folded(&h, 0.0, &opts(1, 0.0), None), Err(SolverError::Invalid(_))));
    assert!(matches!(
        solve_folded(&h, 0.0, &opts(1, 1e-6), Some(vec![0.0; h.dim()])),
        Err(SolverError::Invalid(_))
    ));
    let tight = SolverOptions {
        max_matvecs: 10,
        basis_size: 4,
        ..opts(1, 1e-14)
    };
    assert!(matches!(solve_folded(&h, 0.0, &tight, None), Err(SolverError::NotConverged { .. })));
}

#[test]
fn level_spacing_grows_as_dot_shrinks() {
    let levels = |d: f64, h: f64| {
        let (s, ham, w) = toy_dot(d, h, 1.0);
        let r = solve_ground_conduction(&ham, w, &opts(2, 1e-8), Some(start_vector(&s, 1, 1))).unwrap();
        (r.ground.energy, r.conduction[1].energy - r.conduction[0].energy)
    };
    let (e_small, gap_small) = levels(3.0, 1.5);
    let (e_large, gap_large) = levels(5.0, 2.5);
    assert!(e_large < e_small, "{e_large} vs {e_small}");
    assert!(gap_large > 0.0);
    assert!(gap_small > gap_large, "{gap_small} vs {gap_large}");
}

#[test]
fn sp3s_dot_ground_state_is_s_like() {
    let s = small_dot(2.0, 1.0, 0.6, Boundary::Periodic);
    let p = vogl();
    let tier = BasisTier::Sp3s;
    let h = assemble(&s, &p, tier, &AssembleOptions::default()).unwrap();
    let w = auto_window(&s, &p, tier).unwrap();
    let r = solve_ground_conduction(&h, w, &opts(2, 1e-6), Some(start_vector(&s, tier.norb(), 1))).unwrap();
    let wf = &r.ground;
    assert!(wf.residual <= 1e-6);
    assert!(wf.energy > w.midgap);
    assert!(wf.energy < gamma_conduction_edge(&p, "GaAs", tier).unwrap());
    assert!(wf.s_character() > 0.9, "{}", wf.s_character());
    // Sign convention: the largest amplitude is positive.
    let big = wf.coeffs.iter().copied().fold(0.0f64, |m, c| if c.abs() > m.abs() { c } else { m });
    assert!(big > 0.0);
}

#[test]
fn refold_finds_conduction_state_past_valence_states() {
    // Folding at the dot's own conduction edge lands nearer the valence
    // states of this tiny dot; the search must step over them.
    let s = small_dot(2.0, 1.0, 0.6, Boundary::Periodic);
    let p = vogl();
    let tier = BasisTier::Sp3s;
    let h = assemble(&s, &p, tier, &AssembleOptions::default()).unwrap();
    let w = auto_window(&s, &p, tier).unwrap();
    let low = GapWindow {
        sigma: w.midgap,
        ..w
    };
    let a = solve_ground_conduction(&h, w, &opts(2, 1e-6), None).unwrap();
    let b = solve_ground_conduction(&h, low, &opts(2, 1e-6), None).unwrap();
    assert!(b.sigmas.len() > 1);
    assert!((a.ground.energy - b.ground.energy).abs() < 1e-6);
}

#[test]
fn wavefunction_roundtrips_through_files() {
    let dir = tempfile::tempdir().unwrap();
    let coeffs: Vec<f64> = (0..20).map(|i| (i as f64 * 0.37).sin()).collect();
    let wf = WaveFunction::new(BasisTier::Sp3s, 1.234567890123, 3e-9, coeffs);
    let stem = dir.path().join("psi");
    write_wavefunction(&wf, &stem).unwrap();
    let back = read_wavefunction(&stem).unwrap();
    assert_eq!(wf, back);

    let (bin, _) = wavefunction_paths(&stem);
    std::fs::write(&bin, [0u8; 16]).unwrap();
    assert!(matches!(read_wavefunction(&stem), Err(WaveFunctionError::Length { .. })));
}
