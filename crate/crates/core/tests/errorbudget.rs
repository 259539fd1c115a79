use proptest::prelude::*;
use qdot_hf::errorbudget::*;
use qdot_hf::physcore::PhysicalConstants;

const MU_B: f64 = 5.788_381_806e-5;

fn c() -> PhysicalConstants {
    PhysicalConstants::default()
}

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= 4.0 * f64::EPSILON * b.abs()
}

#[test]
fn swap_error_values() {
    assert!(close(swap_error(1e-6, 1e-4).unwrap(), 1e-4));
    assert_eq!(swap_error(0.0, 1e-4).unwrap(), 0.0);
    assert_eq!(swap_error(3e-4, 3e-4).unwrap(), 1.0);
    assert_eq!(swap_error(1e-6, 0.0), Err(BudgetError::NonPositive("J", 0.0)));
    assert!(swap_error(1e-6, -1.0).is_err());
}

#[test]
fn leakage_values() {
    assert!(close(leakage(1e-3, 0.1).unwrap(), 1e-4));
    assert_eq!(leakage(0.0, 0.1).unwrap(), 0.0);
    assert_eq!(leakage(0.1, 0.1).unwrap(), 1.0);
    assert!(leakage(1e-3, 0.0).is_err());
}

#[test]
fn exchange_window() {
    let w = j_window(1e-6, 0.1, 1e-4).unwrap();
    assert!(close(w.j_min, 1e-4) && close(w.j_max, 1e-3));
    assert!(!w.empty);
    let point = j_window(1e-5, 0.1, 1e-4).unwrap();
    assert!(close(point.j_min, point.j_max) && !point.empty);
    let none = j_window(2e-5, 0.1, 1e-4).unwrap();
    assert!(none.empty && !none.contains(none.j_min));
    assert!(j_window(1e-6, 0.1, 0.0).is_err());
}

#[test]
fn precession_values() {
    let w = precession(1.0, 0.01, 0.01, 2.0, &c());
    let want = 2.0 * MU_B * (1.01f64 * 1.01 + 1e-4).sqrt();
    assert!((w - want).abs() < 1e-9 * want);
    assert!((w - 1.169e-4).abs() < 1e-3 * 1.169e-4);
    assert_eq!(precession(1.0, 0.2, 0.0, 2.0, &c()), 2.0 * c().bohr_magneton_ev_per_tesla() * 1.2);
    assert_eq!(precession(0.0, 0.0, 0.0, 2.0, &c()), 0.0);
}

#[test]
fn detuning_values() {
    let g = 2.0 * c().bohr_magneton_ev_per_tesla();
    assert_eq!(detuning_error(1e-4, 1e-4, 1e-3, 2.0, &c()).unwrap(), 0.0);
    assert!(close(detuning_error(g * 1e-5, 0.0, 1e-3, 2.0, &c()).unwrap(), 1e-4));
    assert!(close(detuning_error(g * 1e-3, 0.0, 1e-3, 2.0, &c()).unwrap(), 1.0));
    assert!(detuning_error(0.0, 0.0, 0.0, 2.0, &c()).is_err());
}

#[test]
fn drift_limits() {
    let t = drift_tolerances(1.0, 1e-3, 0.01, 1e-4).unwrap();
    assert!(close(t.parallel_t, 1e-5));
    assert!(close(t.perpendicular_t.unwrap(), 1e-3));
    assert!(!t.weak_static_field);
    let loose = drift_tolerances(1.0, 1e-3, 0.01, 1.0 - 1e-15).unwrap();
    assert!((loose.parallel_t - 1e-3).abs() < 1e-15);
    assert!((loose.perpendicular_t.unwrap() - 0.1).abs() < 1e-13);
    let t0 = drift_tolerances(1.0, 1e-3, 0.0, 1e-4).unwrap();
    assert!(close(t0.parallel_t, 1e-5) && t0.perpendicular_t.is_none());
    assert!(drift_tolerances(0.05, 1e-3, 0.01, 1e-4).unwrap().weak_static_field);
    assert!(drift_tolerances(1.0, 1e-3, 0.01, 0.0).is_err());
}

#[test]
fn budget_evaluation() {
    let p = OperationParams::default();
    assert!(p.validate().is_empty());
    let b = evaluate(&p, Some(1e-6), &c()).unwrap();
    assert_eq!(b.delta_ez, 1e-6);
    assert!(b.window.contains(p.j));
    assert!(b.swap_error.pass && b.leakage.pass);
    // Default drifts sit well inside the tolerances.
    assert!(b.detuning_error.pass, "{}", b.detuning_error.value);
    let fixed = OperationParams { delta_ez: Some(2e-6), ..p };
    assert_eq!(evaluate(&fixed, Some(1e-6), &c()).unwrap().delta_ez, 2e-6);
    let bad = OperationParams { delta_ez: Some(1e-4), ..p };
    let b = evaluate(&bad, None, &c()).unwrap();
    assert!(b.window.empty && !b.all_pass());
    let r = report(&b);
    assert!(r.contains("no admissible J"));
    assert!(r.contains("FAIL"));
    let broken = OperationParams { j: -1.0, threshold: 2.0, ..p };
    assert_eq!(broken.validate().len(), 2);
}

proptest! {
    #[test]
    fn ratios_are_scale_invariant(dez in 1e-9f64..1e-3, j in 1e-6f64..1e-2, dee in 1e-3f64..1.0, k in 1e-3f64..1e3) {
        let s = swap_error(dez, j).unwrap();
        let l = leakage(j, dee).unwrap();
        prop_assert!((swap_error(k * dez, k * j).unwrap() - s).abs() <= 1e-12 * s);
        prop_assert!((leakage(k * j, k * dee).unwrap() - l).abs() <= 1e-12 * l);
    }

    #[test]
    fn detuning_is_symmetric(a in -1e-3f64..1e-3, b in -1e-3f64..1e-3, bac in 1e-5f64..1e-1) {
        prop_assert_eq!(detuning_error(a, b, bac, 2.0, &c()).unwrap(), detuning_error(b, a, bac, 2.0, &c()).unwrap());
    }

    #[test]
    fn window_edges_are_sharp(dez in 1e-9f64..1e-6, dee in 1e-2f64..1.0, eps in 1e-6f64..1e-2) {
        let w = j_window(dez, dee, eps).unwrap();
        prop_assume!(!w.empty && w.j_max > 1.05 * w.j_min);
        for j in [w.j_min * 1.0001, w.j_max * 0.9999, (w.j_min * w.j_max).sqrt()] {
            prop_assert!(swap_error(dez, j).unwrap() <= eps);
            prop_assert!(leakage(j, dee).unwrap() <= eps);
        }
        prop_assert!(swap_error(dez, 0.99 * w.j_min).unwrap() > eps);
        prop_assert!(leakage(1.01 * w.j_max, dee).unwrap() > eps);
    }

    #[test]
    fn tolerances_saturate_threshold(b0 in 0.5f64..5.0, bac in 1e-4f64..1e-2, bperp in 1e-3f64..0.05, eps in 1e-6f64..1e-2) {
        let t = drift_tolerances(b0, bac, bperp, eps).unwrap();
        let c = c();
        let par = linear_detuning(b0, bperp, t.parallel_t, 0.0, 2.0, &c);
        let perp = linear_detuning(b0, bperp, 0.0, t.perpendicular_t.unwrap(), 2.0, &c);
        for d in [par, perp] {
            let e = detuning_error(d, 0.0, bac, 2.0, &c).unwrap();
            prop_assert!((e - eps).abs() <= 1e-12 * eps);
        }
    }
}
