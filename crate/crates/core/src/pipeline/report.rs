use std::fmt::Write as _;
use std::path::Path;

use super::{read_json, BathResult, PipelineError, RunManifest, StageStatus};
use crate::errorbudget::{self, ErrorBudget};
use crate::physcore::GAUSS_PER_TESLA;

pub struct RunOutputs {
    pub manifest: RunManifest,
    pub bath: Option<BathResult>,
    pub budget: Option<ErrorBudget>,
}

fn done(m: &RunManifest, name: &str) -> bool {
    m.stage(name).is_some_and(|s| s.status != StageStatus::Failed)
}

pub fn read_outputs(dir: &Path) -> Result<RunOutputs, PipelineError> {
    let manifest = RunManifest::read(dir)?;
    let bath = if done(&manifest, "spinbath") {
        Some(read_json(&dir.join("spinbath/bath.json")).map_err(PipelineError::Report)?)
    } else {
        None
    };
    let budget = if done(&manifest, "errorbudget") {
        Some(read_json(&dir.join("errorbudget/budget.json")).map_err(PipelineError::Report)?)
    } else {
        None
    };
    Ok(RunOutputs { manifest, bath, budget })
}

/// Field-spread table and budget verdicts of a finished run.
pub fn report(dir: &Path) -> Result<String, PipelineError> {
    let o = read_outputs(dir)?;
    let bath = o
        .bath
        .ok_or_else(|| PipelineError::Report(format!("{}: no completed spin-bath stage to report", dir.display())))?;
    let mut out = String::new();
    let _ = writeln!(out, "master seed {}  version {}", o.manifest.master_seed, o.manifest.version);
    let _ = writeln!(out);
    let _ = writeln!(out, "{:<14} {:>12} {:>12} {:>12}  method", "source", "dB_N (G)", "dE (eV)", "T2* (s)");
    for r in &bath.rows {
        let t2 = r.t2_star_s.map(|t| format!("{t:.3e}")).unwrap_or_else(|| "inf".into());
        let method = match &r.method {
            crate::spinbath::Method::ClosedForm => "closed form".to_string(),
            crate::spinbath::Method::MonteCarlo { samples, .. } => format!("monte carlo, {samples} draws"),
            crate::spinbath::Method::MultiGeometry { geometries } => format!("{} geometries", geometries.len()),
        };
        let _ = writeln!(
            out,
            "{:<14} {:>12.3e} {:>12.3e} {:>12}  {}",
            r.source.label(),
            r.delta_b_gauss(),
            r.delta_e_ev,
            t2,
            method
        );
    }
    if let Some(mc) = &bath.monte_carlo {
        let _ = writeln!(
            out,
            "sampled random-spin spread {:.3e} G (stderr {:.1e} G)",
            mc.delta_b_gauss(),
            mc.stderr_t().unwrap_or(f64::NAN) * GAUSS_PER_TESLA
        );
    }
    let s = &bath.map_summary;
    let _ = writeln!(
        out,
        "max A_j {:.3e} eV on {} ({:.2} nm from centre); anion/cation ratio {:.2}",
        s.max_coupling_ev, s.argmax_species, s.argmax_distance_nm, s.anion_cation_ratio
    );
    let pb = super::spinbath::norm(bath.polarized_field_t);
    let _ = writeln!(out, "polarized |B_N| {:.3e} T", pb);
    if let Some(f) = &bath.freezing {
        let _ = writeln!(
            out,
            "alloy realizations: min overlap {:.5}, density fluctuation {:.3e} of mean",
            f.min_overlap(),
            f.relative
        );
    }
    if let Some(b) = &o.budget {
        let _ = writeln!(out);
        out.push_str(&errorbudget::report(b));
        if b.window.empty {
            let _ = writeln!(out, "verdict: no admissible J");
        } else if b.all_pass() {
            let _ = writeln!(out, "verdict: all operations within threshold");
        } else {
            let _ = writeln!(out, "verdict: budget exceeded");
        }
    }
    Ok(out)
}
