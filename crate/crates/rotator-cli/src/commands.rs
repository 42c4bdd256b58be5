//! The four subcommands: simulate, verify, sweep, hessian.

use std::path::PathBuf;

use rayon::prelude::*;
use serde::Serialize;

use rotator_core::analysis::{
    angular_velocity, fill_torsion, hessian_rank, rapidity_from_q, rho_from_casimirs, HessianMode,
    Observables, RankReport,
};
use rotator_core::dynamics::{initial_state, integrate, GaugeProfile};
use rotator_core::export::{write_trajectory_file, RunManifest};
use rotator_core::minkowski::FourVector;
use rotator_core::model::{GFamily, RotatorKind, RotatorSpec};
use rotator_core::sphere::{SphereModel, SphereState};
use rotator_core::verify::{run_suite, VerifyReport, VerifyScenario};

use crate::config::Scenario;

/// Simulate a single trajectory; writes CSV plus a JSON run manifest and
/// prints a one-line drift summary.
pub fn simulate(scenario: &Scenario, csv_name: &str, manifest_name: &str) -> anyhow::Result<()> {
    let s0 = initial_state(&scenario.spec, scenario.q, scenario.axis, scenario.phase)?;
    let profile =
        if scenario.spec.is_fundamental() { Some(&scenario.profile) } else { None };
    let mut traj = integrate(&scenario.spec, &s0, profile, scenario.options)?;
    fill_torsion(&mut traj)?;

    std::fs::create_dir_all(&scenario.out_dir)?;
    let csv_path = scenario.out_dir.join(csv_name);
    let manifest_path = scenario.out_dir.join(manifest_name);
    write_trajectory_file(&traj, &csv_path)?;
    let manifest = RunManifest::from_trajectory(
        &traj,
        scenario.spec.m(),
        scenario.spec.ell(),
        (!scenario.spec.is_fundamental()).then_some(scenario.q),
        scenario.axis,
        scenario.phase,
        Some(scenario.seed),
    );
    manifest.write_json(&manifest_path)?;

    let drift = traj.drift_stats();
    println!(
        "simulate {}: {} samples, max residual {:.3e}, Casimir drift ({:.3e}, {:.3e}), \
         tanh psi mean {:.6} -> {}",
        traj.family,
        traj.samples.len(),
        drift.max_constraint_residual,
        drift.casimir_mass_drift,
        drift.casimir_spin_drift,
        manifest.tanh_psi_mean,
        csv_path.display(),
    );
    if !scenario.spec.is_fundamental() {
        let c = scenario.spec.casimirs_from_q(scenario.q)?;
        println!(
            "  orbit radius rho = {:.9}, angular velocity omega = {:.9}",
            rho_from_casimirs(&scenario.spec, c),
            angular_velocity(&scenario.spec, c)?,
        );
    }
    if traj.samples.len() >= 5 {
        let mid = traj.samples.len() / 2;
        let obs = Observables::from_window(&scenario.spec, &traj.samples[mid - 2..=mid + 2])?;
        println!(
            "  midpoint observables: tanh psi = {:.9}, rho = {:.9}, omega = {:.9}, \
             torsion = {:.3e}",
            obs.tanh_psi, obs.rho, obs.omega, obs.torsion_residual
        );
    }
    Ok(())
}

/// Run the invariant suite; writes a JSON report. Returns false when any
/// check fails.
pub fn verify(
    scenario: Option<&Scenario>,
    seed: u64,
    inject_corruption: bool,
    report_name: &str,
    out_dir: &PathBuf,
) -> anyhow::Result<bool> {
    let scenarios: Vec<VerifyScenario> = match scenario {
        Some(sc) => {
            let mut v = VerifyScenario::new(sc.spec.clone());
            v.q = sc.q;
            v.profile = sc.profile.clone();
            v.seed = seed;
            v.inject_corruption = inject_corruption;
            vec![v]
        }
        None => rotator_core::verify::default_scenarios()?
            .into_iter()
            .map(|mut v| {
                v.seed = seed;
                v.inject_corruption = inject_corruption;
                v
            })
            .collect(),
    };

    let reports: Vec<VerifyReport> =
        scenarios.iter().map(run_suite).collect::<rotator_core::Result<_>>()?;
    let mut all_pass = true;
    for report in &reports {
        for check in &report.checks {
            println!(
                "verify [{}] {:<24} {} (measured {:.3e}, tolerance {:.3e})",
                report.family,
                check.name,
                if check.pass { "PASS" } else { "FAIL" },
                check.measured,
                check.tolerance,
            );
            if !check.pass {
                println!("  detail: {}", check.detail);
            }
        }
        all_pass &= report.pass;
    }

    std::fs::create_dir_all(out_dir)?;
    let path = out_dir.join(report_name);
    let file = std::fs::File::create(&path)?;
    serde_json::to_writer_pretty(file, &reports)?;
    println!("verify report -> {}", path.display());
    Ok(all_pass)
}

/// One row of a phenomenological Q sweep.
#[derive(Serialize)]
struct SweepRow {
    q: f64,
    c_m: f64,
    c_j: f64,
    f: f64,
    f_prime: f64,
    rho: f64,
    omega: f64,
    tanh_psi: f64,
}

/// Observables over a Q grid (phenomenological) written as plot-ready CSV.
pub fn sweep_q(
    scenario: &Scenario,
    q_min: f64,
    q_max: f64,
    points: usize,
    out_name: &str,
) -> anyhow::Result<()> {
    let spec = &scenario.spec;
    if spec.is_fundamental() {
        anyhow::bail!("sweep over Q applies to phenomenological rotators; use --profiles");
    }
    if !(q_min > 0.0 && q_max > q_min && points >= 1) {
        anyhow::bail!("sweep grid: need 0 < q-min < q-max and at least one point");
    }
    let qs: Vec<f64> = (0..points)
        .map(|i| {
            if points == 1 {
                q_min
            } else {
                q_min + (q_max - q_min) * i as f64 / (points - 1) as f64
            }
        })
        .collect();

    let rows: Vec<SweepRow> = qs
        .par_iter()
        .map(|&q| -> anyhow::Result<SweepRow> {
            let c = spec.casimirs_from_q(q)?;
            let (f, f1, _) = spec.mass_spin_curve()?.eval(c.c_j)?;
            Ok(SweepRow {
                q,
                c_m: c.c_m,
                c_j: c.c_j,
                f,
                f_prime: f1,
                rho: rho_from_casimirs(spec, c),
                omega: angular_velocity(spec, c)?,
                tanh_psi: rapidity_from_q(spec, q)?,
            })
        })
        .collect::<anyhow::Result<_>>()?;

    std::fs::create_dir_all(&scenario.out_dir)?;
    let path = scenario.out_dir.join(out_name);
    let mut out = String::from("q,c_m,c_j,f,f_prime,rho,omega,tanh_psi\n");
    for r in &rows {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{}\n",
            r.q, r.c_m, r.c_j, r.f, r.f_prime, r.rho, r.omega, r.tanh_psi
        ));
    }
    std::fs::write(&path, out)?;
    println!("sweep: {} rows -> {}", rows.len(), path.display());
    Ok(())
}

/// Per-profile trajectory summaries (fundamental): fixed Casimirs, drifting
/// positions.
pub fn sweep_profiles(
    scenario: &Scenario,
    profiles: &[String],
    out_name: &str,
) -> anyhow::Result<()> {
    let spec = &scenario.spec;
    if !spec.is_fundamental() {
        anyhow::bail!("profile sweeps apply to fundamental rotators; use --q-min/--q-max");
    }
    let parsed: Vec<GaugeProfile> = profiles
        .iter()
        .map(|p| GaugeProfile::parse(p).map_err(anyhow::Error::from))
        .collect::<anyhow::Result<_>>()?;

    let s0 = initial_state(spec, scenario.q, scenario.axis, scenario.phase)?;
    let runs: Vec<_> = parsed
        .par_iter()
        .map(|profile| integrate(spec, &s0, Some(profile), scenario.options))
        .collect::<rotator_core::Result<_>>()?;

    std::fs::create_dir_all(&scenario.out_dir)?;
    let path = scenario.out_dir.join(out_name);
    let mut out =
        String::from("c_m_final,c_j_final,max_residual,separation_from_first,profile\n");
    let reference = &runs[0];
    for (label, traj) in profiles.iter().zip(&runs) {
        let last = traj.samples.last().unwrap();
        let drift = traj.drift_stats();
        let separation = traj
            .samples
            .iter()
            .zip(&reference.samples)
            .map(|(a, b)| {
                let d = a.state.x - b.state.x;
                (d.x * d.x + d.y * d.y + d.z * d.z).sqrt()
            })
            .fold(0.0f64, f64::max);
        // Profile labels may contain commas; keep them quoted and last.
        out.push_str(&format!(
            "{},{},{},{},\"{label}\"\n",
            last.casimirs.c_m, last.casimirs.c_j, drift.max_constraint_residual, separation
        ));
    }
    std::fs::write(&path, out)?;
    println!("sweep: {} profiles -> {}", profiles.len(), path.display());
    Ok(())
}

#[derive(Serialize)]
struct HessianEntry {
    system: String,
    expected_rank: usize,
    report: RankReport,
    null_residuals: Option<[f64; 2]>,
}

/// Rank diagnostics for the configured family (or the standard fixtures)
/// plus the light-cone example model.
pub fn hessian(scenario: Option<&Scenario>, out_dir: &PathBuf, out_name: &str) -> anyhow::Result<bool> {
    let xdot = FourVector::new(1.0, 0.1, 0.0, 0.05);
    let k = FourVector::new(1.0, 1.0, 0.0, 0.0);
    let kdot = FourVector::new(0.0, 0.0, 0.5, 0.2);

    let specs: Vec<RotatorSpec> = match scenario {
        Some(sc) => vec![sc.spec.clone()],
        None => vec![
            RotatorSpec::new(1.0, 1.0, GFamily::Quadratic)?,
            RotatorSpec::new(1.0, 1.0, GFamily::FundamentalPlus)?,
            RotatorSpec::new(1.0, 1.0, GFamily::FundamentalMinus)?,
        ],
    };

    let mut entries = Vec::new();
    let mut all_ok = true;
    for spec in &specs {
        let expected = match spec.kind() {
            RotatorKind::Phenomenological => 5,
            RotatorKind::Fundamental => 4,
        };
        let report = hessian_rank(spec, xdot, k, kdot, HessianMode::Dual)?;
        let ok = report.rank == expected && !report.indeterminate;
        all_ok &= ok;
        println!(
            "hessian [{}] rank {} (expected {expected}), gap {:.3e} {}",
            spec.family().label(),
            report.rank,
            report.gap_ratio,
            if ok { "PASS" } else { "FAIL" },
        );
        entries.push(HessianEntry {
            system: spec.family().label(),
            expected_rank: expected,
            report,
            null_residuals: None,
        });
    }

    let model = SphereModel::new(FourVector::new(1.0, 0.0, 0.0, 0.0))?;
    let s0 = SphereState {
        q: FourVector::new(1.0, 1.0, 0.0, 0.0),
        qdot: FourVector::new(0.0, 0.0, 1.0, 0.0),
    };
    model.validate(&s0)?;
    let (report, null_res) = model.hessian_report(s0.q);
    let ok = report.rank == 2 && null_res[0] < 1e-8 && null_res[1] < 1e-8;
    all_ok &= ok;
    println!(
        "hessian [light-cone example] rank {} (expected 2), null residuals {:.2e}/{:.2e} {}",
        report.rank,
        null_res[0],
        null_res[1],
        if ok { "PASS" } else { "FAIL" },
    );
    entries.push(HessianEntry {
        system: "light-cone-example".into(),
        expected_rank: 2,
        report,
        null_residuals: Some(null_res),
    });

    std::fs::create_dir_all(out_dir)?;
    let path = out_dir.join(out_name);
    let file = std::fs::File::create(&path)?;
    serde_json::to_writer_pretty(file, &entries)?;
    println!("hessian report -> {}", path.display());
    Ok(all_ok)
}
