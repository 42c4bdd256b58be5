//! Trajectory CSV export and the JSON run manifest.
//!
//! Output is deterministic: identical inputs produce byte-identical files
//! (floats use Rust's shortest round-trip formatting, field order is fixed).

use std::io::Write;
use std::path::Path;

use serde::Serialize;

use crate::bracket::ConstraintId;
use crate::dynamics::{DriftStats, IntegratorOptions, Trajectory};
use crate::error::Result;
use crate::model::RotatorKind;

/// Column-safe name of a constraint residual.
fn residual_column(id: ConstraintId) -> &'static str {
    match id {
        ConstraintId::NullCone => "res_kk",
        ConstraintId::Projection => "res_chik",
        ConstraintId::MassSpin => "res_mass_spin",
        ConstraintId::SpinFixed => "res_cj_fixed",
        ConstraintId::MassFixed => "res_cm_fixed",
    }
}

/// Writes the trajectory as CSV with a header row.
pub fn write_trajectory_csv<W: Write>(traj: &Trajectory, mut out: W) -> Result<()> {
    let ids = ConstraintId::set_for(traj.kind);
    let mut header: Vec<String> = vec!["t".into()];
    for block in ["x", "p", "k", "chi"] {
        for mu in 0..4 {
            header.push(format!("{block}{mu}"));
        }
    }
    header.extend(["c_m".into(), "c_j".into(), "tanh_psi".into(), "rho".into()]);
    header.extend(ids.iter().map(|&id| residual_column(id).to_string()));
    if traj.kind == RotatorKind::Fundamental {
        header.push("omega_gauge".into());
    }
    header.push("torsion".into());
    writeln!(out, "{}", header.join(","))?;

    for s in &traj.samples {
        let mut row: Vec<String> = vec![s.t.to_string()];
        for v in s.state.to_array() {
            row.push(v.to_string());
        }
        row.push(s.casimirs.c_m.to_string());
        row.push(s.casimirs.c_j.to_string());
        row.push(s.tanh_psi.to_string());
        row.push(s.rho.to_string());
        for r in &s.residuals {
            row.push(r.to_string());
        }
        if traj.kind == RotatorKind::Fundamental {
            row.push(s.omega_gauge.map(|w| w.to_string()).unwrap_or_default());
        }
        row.push(s.torsion.map(|v| v.to_string()).unwrap_or_default());
        writeln!(out, "{}", row.join(","))?;
    }
    Ok(())
}

/// Everything needed to re-run a simulation exactly, plus its drift summary.
#[derive(Clone, Debug, Serialize)]
pub struct RunManifest {
    pub version: String,
    pub family: String,
    pub kind: RotatorKind,
    pub m: f64,
    pub ell: f64,
    /// Operating point for phenomenological rotators.
    pub q: Option<f64>,
    pub profile: Option<String>,
    pub axis: [f64; 3],
    pub phase: f64,
    pub integrator: IntegratorOptions,
    pub seed: Option<u64>,
    pub samples: usize,
    pub drift: DriftStats,
    /// Mean observables over the run.
    pub tanh_psi_mean: f64,
    pub tanh_psi_std: f64,
    pub rho_mean: f64,
}

impl RunManifest {
    pub fn from_trajectory(
        traj: &Trajectory,
        m: f64,
        ell: f64,
        q: Option<f64>,
        axis: [f64; 3],
        phase: f64,
        seed: Option<u64>,
    ) -> Self {
        let n = traj.samples.len() as f64;
        let mean_psi = traj.samples.iter().map(|s| s.tanh_psi).sum::<f64>() / n;
        let var_psi = traj.samples.iter().map(|s| (s.tanh_psi - mean_psi).powi(2)).sum::<f64>()
            / n.max(1.0);
        let mean_rho = traj.samples.iter().map(|s| s.rho).sum::<f64>() / n;
        RunManifest {
            version: env!("CARGO_PKG_VERSION").to_string(),
            family: traj.family.clone(),
            kind: traj.kind,
            m,
            ell,
            q,
            profile: traj.profile.clone(),
            axis,
            phase,
            integrator: traj.options,
            seed,
            samples: traj.samples.len(),
            drift: traj.drift_stats(),
            tanh_psi_mean: mean_psi,
            tanh_psi_std: var_psi.sqrt(),
            rho_mean: mean_rho,
        }
    }

    pub fn write_json(&self, path: &Path) -> Result<()> {
        let file = std::fs::File::create(path)?;
        serde_json::to_writer_pretty(file, self)?;
        Ok(())
    }
}

/// Writes the trajectory CSV to a file path.
pub fn write_trajectory_file(traj: &Trajectory, path: &Path) -> Result<()> {
    let file = std::fs::File::create(path)?;
    write_trajectory_csv(traj, std::io::BufWriter::new(file))
}
