//! Operation error budget for exchange and ESR gates.
//!
//! Energies in eV, fields in tesla. Frequencies are carried as energies
//! (`hbar omega`).

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::physcore::PhysicalConstants;

#[derive(Debug, Error, PartialEq)]
pub enum BudgetError {
    #[error("{0} must be positive, got {1}")]
    NonPositive(&'static str, f64),
    #[error("threshold must lie in (0, 1), got {0}")]
    Threshold(f64),
}

fn positive(name: &'static str, v: f64) -> Result<(), BudgetError> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(BudgetError::NonPositive(name, v))
    }
}

/// `(dE_Z / J)^2`.
pub fn swap_error(delta_ez: f64, j: f64) -> Result<f64, BudgetError> {
    positive("J", j)?;
    Ok((delta_ez / j).powi(2))
}

/// `(J / dE_e)^2`.
pub fn leakage(j: f64, delta_ee: f64) -> Result<f64, BudgetError> {
    positive("orbital spacing", delta_ee)?;
    Ok((j / delta_ee).powi(2))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct JWindow {
    pub j_min: f64,
    pub j_max: f64,
    pub empty: bool,
}

impl JWindow {
    pub fn contains(&self, j: f64) -> bool {
        !self.empty && j >= self.j_min && j <= self.j_max
    }
}

/// Exchange energies for which both swap error and leakage stay below `eps`.
pub fn j_window(delta_ez: f64, delta_ee: f64, eps: f64) -> Result<JWindow, BudgetError> {
    positive("threshold", eps)?;
    let r = eps.sqrt();
    let j_min = delta_ez.abs() / r;
    let j_max = delta_ee * r;
    Ok(JWindow {
        j_min,
        j_max,
        empty: j_min > j_max,
    })
}

/// Electron precession energy `g_e mu_B |B_0 + B_N|`.
pub fn precession(b0: f64, b_par: f64, b_perp: f64, g_e: f64, c: &PhysicalConstants) -> f64 {
    g_e * c.bohr_magneton_ev_per_tesla() * ((b0 + b_par).powi(2) + b_perp.powi(2)).sqrt()
}

/// `(w_ac - w_e)^2 / (g_e mu_B B_ac)^2`.
pub fn detuning_error(w_ac: f64, w_e: f64, b_ac: f64, g_e: f64, c: &PhysicalConstants) -> Result<f64, BudgetError> {
    positive("B_ac", b_ac)?;
    let rabi = g_e * c.bohr_magneton_ev_per_tesla() * b_ac;
    Ok(((w_ac - w_e) / rabi).powi(2))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DriftTolerances {
    pub parallel_t: f64,
    /// `None` when the perpendicular nuclear field vanishes.
    pub perpendicular_t: Option<f64>,
    /// `B_0 / B_N_perp` below 10, where the linearization is poor.
    pub weak_static_field: bool,
}

/// Largest nuclear-field drifts keeping the linearized detuning error at
/// `eps`, each with the other drift zero.
pub fn drift_tolerances(b0: f64, b_ac: f64, b_perp: f64, eps: f64) -> Result<DriftTolerances, BudgetError> {
    positive("B_0", b0)?;
    positive("B_ac", b_ac)?;
    if !(eps > 0.0 && eps < 1.0) {
        return Err(BudgetError::Threshold(eps));
    }
    let par = eps.sqrt() * b_ac;
    let perp = if b_perp == 0.0 { None } else { Some(par * (b0 / b_perp.abs())) };
    let weak = b_perp != 0.0 && b0 / b_perp.abs() < 10.0;
    if weak {
        log::warn!("B_0/B_N_perp = {:.3} < 10; drift tolerances are approximate", b0 / b_perp.abs());
    }
    Ok(DriftTolerances {
        parallel_t: par,
        perpendicular_t: perp,
        weak_static_field: weak,
    })
}

/// Linearized detuning `g_e mu_B (dB_par + B_perp/B_0 dB_perp)`, eV.
pub fn linear_detuning(b0: f64, b_perp: f64, d_par: f64, d_perp: f64, g_e: f64, c: &PhysicalConstants) -> f64 {
    g_e * c.bohr_magneton_ev_per_tesla() * (d_par + b_perp / b0 * d_perp)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OperationParams {
    /// Exchange energy, eV.
    pub j: f64,
    /// Orbital level spacing, eV.
    pub delta_ee: f64,
    /// Zeeman-splitting difference, eV; taken from the bath stage when absent.
    pub delta_ez: Option<f64>,
    pub b0: f64,
    pub b_ac: f64,
    /// ESR drive energy; tuned to the undrifted precession when absent.
    pub omega_ac: Option<f64>,
    pub b_par: f64,
    pub b_perp: f64,
    pub drift_par: f64,
    pub drift_perp: f64,
    pub threshold: f64,
    pub g_e: f64,
}

impl Default for OperationParams {
    fn default() -> Self {
        OperationParams {
            j: 3e-4,
            delta_ee: 0.1,
            delta_ez: None,
            b0: 1.0,
            b_ac: 1e-3,
            omega_ac: None,
            b_par: 0.01,
            b_perp: 0.01,
            drift_par: 1e-6,
            drift_perp: 1e-4,
            threshold: 1e-4,
            g_e: 2.0,
        }
    }
}

impl OperationParams {
    pub fn validate(&self) -> Vec<String> {
        let mut errs = Vec::new();
        for (name, v) in [("j", self.j), ("delta_ee", self.delta_ee), ("b0", self.b0), ("b_ac", self.b_ac)] {
            if !(v > 0.0 && v.is_finite()) {
                errs.push(format!("budget.{name} must be positive, got {v}"));
            }
        }
        if !(self.threshold > 0.0 && self.threshold < 1.0) {
            errs.push(format!("budget.threshold must lie in (0, 1), got {}", self.threshold));
        }
        if let Some(v) = self.delta_ez {
            if !(v >= 0.0 && v.is_finite()) {
                errs.push(format!("budget.delta_ez must be >= 0, got {v}"));
            }
        }
        if !(self.g_e.is_finite() && self.g_e != 0.0) {
            errs.push("budget.g_e must be finite and nonzero".into());
        }
        errs
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Item {
    pub value: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorBudget {
    pub inputs: OperationParams,
    /// Zeeman spread actually used, eV.
    pub delta_ez: f64,
    pub swap_error: Item,
    pub leakage: Item,
    pub detuning_error: Item,
    pub omega_e: f64,
    pub omega_ac: f64,
    pub window: JWindow,
    pub tolerances: DriftTolerances,
}

impl ErrorBudget {
    pub fn all_pass(&self) -> bool {
        self.swap_error.pass && self.leakage.pass && self.detuning_error.pass
    }
}

/// Evaluate every budget item. `delta_ez` overrides the parameter's value
/// when the latter is absent.
pub fn evaluate(p: &OperationParams, delta_ez: Option<f64>, c: &PhysicalConstants) -> Result<ErrorBudget, BudgetError> {
    if !(p.threshold > 0.0 && p.threshold < 1.0) {
        return Err(BudgetError::Threshold(p.threshold));
    }
    let dez = p.delta_ez.or(delta_ez).unwrap_or(0.0);
    let eps = p.threshold;
    let item = |v: f64| Item { value: v, pass: v <= eps };
    let swap = swap_error(dez, p.j)?;
    let leak = leakage(p.j, p.delta_ee)?;
    let w_ac = p.omega_ac.unwrap_or_else(|| precession(p.b0, p.b_par, p.b_perp, p.g_e, c));
    let w_e = precession(p.b0, p.b_par + p.drift_par, p.b_perp + p.drift_perp, p.g_e, c);
    let det = detuning_error(w_ac, w_e, p.b_ac, p.g_e, c)?;
    Ok(ErrorBudget {
        inputs: *p,
        delta_ez: dez,
        swap_error: item(swap),
        leakage: item(leak),
        detuning_error: item(det),
        omega_e: w_e,
        omega_ac: w_ac,
        window: j_window(dez, p.delta_ee, eps)?,
        tolerances: drift_tolerances(p.b0, p.b_ac, p.b_perp, eps)?,
    })
}

/// Human-readable budget table.
pub fn report(b: &ErrorBudget) -> String {
    let verdict = |i: &Item| if i.pass { "ok" } else { "FAIL" };
    let mut out = String::new();
    let _ = writeln!(out, "threshold           {:.3e}", b.inputs.threshold);
    let _ = writeln!(out, "dE_Z (eV)           {:.3e}", b.delta_ez);
    let _ = writeln!(out, "J (eV)              {:.3e}", b.inputs.j);
    let _ = writeln!(out, "swap error          {:.3e}  {}", b.swap_error.value, verdict(&b.swap_error));
    let _ = writeln!(out, "leakage             {:.3e}  {}", b.leakage.value, verdict(&b.leakage));
    let _ = writeln!(out, "detuning error      {:.3e}  {}", b.detuning_error.value, verdict(&b.detuning_error));
    if b.window.empty {
        let _ = writeln!(out, "J window            no admissible J");
    } else {
        let _ = writeln!(out, "J window (eV)       [{:.3e}, {:.3e}]", b.window.j_min, b.window.j_max);
    }
    let _ = writeln!(out, "max dB_N par (T)    {:.3e}", b.tolerances.parallel_t);
    match b.tolerances.perpendicular_t {
        Some(v) => {
            let _ = writeln!(out, "max dB_N perp (T)   {v:.3e}");
        }
        None => {
            let _ = writeln!(out, "max dB_N perp (T)   inf");
        }
    }
    out
}
