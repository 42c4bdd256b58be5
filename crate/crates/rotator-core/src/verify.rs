//! The full invariant suite behind the `verify` command: constraint
//! algebra, first-class reports, regularity determinants, Casimir
//! round-trips, rapidity identities, oracle comparisons, Hessian ranks, and
//! the fundamental-rotator gauge paradox, each as a PASS/FAIL check with a
//! measured value and tolerance.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::analysis::{
    angular_velocity, hessian_rank, rapidity_from_q, rho_from_casimirs, HessianMode,
};
use crate::bracket::{
    expected_regularity_determinant, first_class_report, poisson_bracket, regularity_determinant,
    Constraint, ConstraintId, PhaseState,
};
use crate::dynamics::{
    bracket_eom, fundamental_eom, initial_state, integrate,
    phenom_closed_form, phenom_eom, CmFundamentalHamiltonian, CmHamiltonian, GaugeProfile,
    IntegratorOptions,
};
use crate::error::Result;
use crate::minkowski::{boost_along_axis, dot, FourVector};
use crate::model::{GFamily, RotatorKind, RotatorSpec};
use crate::sphere::{SphereModel, SphereState};

/// One verification check.
#[derive(Clone, Debug, Serialize)]
pub struct CheckResult {
    pub name: String,
    pub pass: bool,
    /// Worst measured deviation (or the measured quantity itself).
    pub measured: f64,
    pub tolerance: f64,
    pub detail: String,
}

impl CheckResult {
    fn bound(name: &str, measured: f64, tolerance: f64, detail: impl Into<String>) -> Self {
        CheckResult {
            name: name.into(),
            pass: measured.abs() < tolerance,
            measured,
            tolerance,
            detail: detail.into(),
        }
    }
}

/// Machine-readable verification report.
#[derive(Clone, Debug, Serialize)]
pub struct VerifyReport {
    pub family: String,
    pub kind: RotatorKind,
    pub seed: u64,
    pub corrupted: bool,
    pub checks: Vec<CheckResult>,
    pub pass: bool,
}

/// Scenario the suite runs against.
#[derive(Clone, Debug)]
pub struct VerifyScenario {
    pub spec: RotatorSpec,
    /// Operating point for phenomenological rotators.
    pub q: f64,
    /// Gauge profile for fundamental rotators.
    pub profile: GaugeProfile,
    pub seed: u64,
    /// Test mode: corrupt a state before the first-class check to exercise
    /// the failure path.
    pub inject_corruption: bool,
}

impl VerifyScenario {
    pub fn new(spec: RotatorSpec) -> Self {
        VerifyScenario {
            q: 0.5,
            profile: GaugeProfile::Constant(1.0),
            seed: 20120055,
            inject_corruption: false,
            spec,
        }
    }
}

/// Draws an on-surface state: a center-of-momentum construction moved along
/// the gauge orbit (chi shifted by a multiple of k, k rescaled with chi
/// compensated) and boosted along random axes. All of these preserve the
/// constraint surface exactly.
pub fn random_on_surface_state(
    spec: &RotatorSpec,
    q: f64,
    rng: &mut impl Rng,
) -> Result<PhaseState<f64>> {
    let axis = [rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)];
    let axis = if axis.iter().map(|a| a * a).sum::<f64>() < 1e-4 { [1.0, 0.0, 0.0] } else { axis };
    let phase = rng.gen_range(0.0..std::f64::consts::TAU);
    let mut s = initial_state(spec, q, axis, phase)?;

    // Gauge orbit: chi -> chi + nu k leaves every constraint intact.
    let nu = rng.gen_range(-0.5..0.5);
    s.chi = s.chi + s.k.scale(nu);
    // Projective rescale with compensated chi keeps C_J fixed.
    let lambda = rng.gen_range(0.5..2.0);
    s.k = s.k.scale(lambda);
    s.chi = s.chi.scale(1.0 / lambda);

    for axis in 1..4 {
        let xi = rng.gen_range(-0.8..0.8);
        s = PhaseState::new(
            boost_along_axis(s.x, axis, xi),
            boost_along_axis(s.p, axis, xi),
            boost_along_axis(s.k, axis, xi),
            boost_along_axis(s.chi, axis, xi),
        );
    }
    Ok(s)
}

/// Draws an on-surface state in the center-of-momentum gauge (no rescale,
/// no chi shift), as produced by `initial_state` plus boosts.
pub fn random_cm_state(
    spec: &RotatorSpec,
    q: f64,
    rng: &mut impl Rng,
) -> Result<PhaseState<f64>> {
    let axis = [rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)];
    let axis = if axis.iter().map(|a| a * a).sum::<f64>() < 1e-4 { [0.0, 1.0, 0.0] } else { axis };
    let phase = rng.gen_range(0.0..std::f64::consts::TAU);
    let mut s = initial_state(spec, q, axis, phase)?;
    for axis in 1..4 {
        let xi = rng.gen_range(-0.8..0.8);
        s = PhaseState::new(
            boost_along_axis(s.x, axis, xi),
            boost_along_axis(s.p, axis, xi),
            boost_along_axis(s.k, axis, xi),
            boost_along_axis(s.chi, axis, xi),
        );
    }
    Ok(s)
}

/// Runs the whole suite for a scenario.
pub fn run_suite(scenario: &VerifyScenario) -> Result<VerifyReport> {
    let spec = &scenario.spec;
    let mut rng = ChaCha8Rng::seed_from_u64(scenario.seed);
    let mut checks = vec![
        check_constraint_algebra(spec, scenario.q, &mut rng)?,
        check_first_class(spec, scenario.q, scenario.inject_corruption, &mut rng)?,
        check_regularity(spec, scenario.q, &mut rng)?,
        check_casimir_roundtrip(spec, &mut rng)?,
        check_hamiltonian_consistency(spec, scenario.q, &scenario.profile, &mut rng)?,
        check_hessian_rank(spec)?,
    ];
    match spec.kind() {
        RotatorKind::Phenomenological => {
            checks.push(check_rapidity_identity(spec)?);
            checks.push(check_closed_form_match(spec, scenario.q)?);
        }
        RotatorKind::Fundamental => {
            checks.push(check_fundamental_paradox(spec, &scenario.profile)?);
            checks.push(check_indeterminacy(spec)?);
        }
    }
    checks.push(check_sphere()?);

    let pass = checks.iter().all(|c| c.pass);
    Ok(VerifyReport {
        family: spec.family().label(),
        kind: spec.kind(),
        seed: scenario.seed,
        corrupted: scenario.inject_corruption,
        checks,
        pass,
    })
}

fn check_constraint_algebra(
    spec: &RotatorSpec,
    q: f64,
    rng: &mut impl Rng,
) -> Result<CheckResult> {
    let mut worst: f64 = 0.0;
    let mut detail = String::new();
    for _ in 0..20 {
        let s = random_on_surface_state(spec, q, rng)?;
        let phi1 = Constraint { spec, id: ConstraintId::NullCone };
        let phi2 = Constraint { spec, id: ConstraintId::Projection };
        let b12 = poisson_bracket(&phi1, &phi2, &s)? - 2.0 * dot(s.k, s.k);
        worst = worst.max(b12.abs());
        match spec.kind() {
            RotatorKind::Phenomenological => {
                let phi3 = Constraint { spec, id: ConstraintId::MassSpin };
                let b23 = poisson_bracket(&phi2, &phi3, &s)?;
                let pk = dot(s.p, s.k);
                let c_j = -4.0 * dot(s.chi, s.chi) * pk * pk
                    / (spec.m().powi(4) * spec.ell() * spec.ell());
                let (_, f1, _) = spec.mass_spin_curve()?.eval(c_j)?;
                let expected = 16.0 * pk * pk / (spec.m().powi(4) * spec.ell() * spec.ell())
                    * (-f1)
                    * dot(s.chi, s.k);
                let b31 = poisson_bracket(&phi3, &phi1, &s)? - expected;
                worst = worst.max(b23.abs()).max(b31.abs());
                detail = "{phi1,phi2}-2phi1, {phi2,phi3}, {phi3,phi1}-closed form".into();
            }
            RotatorKind::Fundamental => {
                let report = first_class_report(spec, &s)?;
                for row in &report.brackets {
                    for &b in row {
                        worst = worst.max(b.abs());
                    }
                }
                detail = "all 4x4 constraint brackets on-surface".into();
            }
        }
    }
    Ok(CheckResult::bound("constraint_algebra", worst, 1e-8, detail))
}

fn check_first_class(
    spec: &RotatorSpec,
    q: f64,
    corrupt: bool,
    rng: &mut impl Rng,
) -> Result<CheckResult> {
    let mut s = random_on_surface_state(spec, q, rng)?;
    if corrupt {
        // Push k off the null cone: phi1 = kk becomes 1.
        let shift = (s.k.t * s.k.t + 1.0).sqrt() - s.k.t;
        s.k.t += shift;
    }
    let report = first_class_report(spec, &s)?;
    let detail = if report.pass {
        format!("{}x{} bracket matrix vanishes on-surface", report.labels.len(), report.labels.len())
    } else {
        report.failures.join("; ")
    };
    Ok(CheckResult {
        name: "first_class".into(),
        pass: report.pass,
        measured: report
            .brackets
            .iter()
            .flatten()
            .fold(0.0f64, |a, b| a.max(b.abs())),
        tolerance: 1e-7,
        detail,
    })
}

fn check_regularity(spec: &RotatorSpec, q: f64, rng: &mut impl Rng) -> Result<CheckResult> {
    let mut worst: f64 = 0.0;
    for _ in 0..20 {
        let s = random_on_surface_state(spec, q, rng)?;
        let (alpha, beta, gamma) =
            (rng.gen_range(0.5..2.0), rng.gen_range(0.5..2.0), rng.gen_range(0.5..2.0));
        let det = regularity_determinant(spec, &s, alpha, beta, gamma)?;
        let expected = expected_regularity_determinant(spec, &s, alpha, beta, gamma)?;
        worst = worst.max((det - expected).abs() / expected.abs().max(1e-300));
    }
    Ok(CheckResult::bound(
        "regularity_determinant",
        worst,
        1e-7,
        "gradient Gram determinant vs closed form, relative",
    ))
}

fn check_casimir_roundtrip(spec: &RotatorSpec, rng: &mut impl Rng) -> Result<CheckResult> {
    let mut worst: f64 = 0.0;
    for _ in 0..30 {
        let q = rng.gen_range(0.15..0.85);
        // Random timelike xdot, null k, cone-tangent spacelike kdot scaled
        // to reach the drawn Q.
        let v = [rng.gen_range(-0.6..0.6), rng.gen_range(-0.6..0.6), rng.gen_range(-0.6..0.6)];
        let gamma = (1.0 + v.iter().map(|x| x * x).sum::<f64>()).sqrt();
        let xdot = FourVector::new(gamma, v[0], v[1], v[2]);
        let axis = [rng.gen_range(-1.0f64..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)];
        let norm = axis.iter().map(|a| a * a).sum::<f64>().sqrt().max(1e-3);
        let k = FourVector::new(1.0, axis[0] / norm, axis[1] / norm, axis[2] / norm);
        // Any spatial vector orthogonal to the spatial part of k is
        // cone-tangent.
        let helper =
            if (axis[0] / norm).abs() < 0.9 { [1.0, 0.0, 0.0] } else { [0.0, 1.0, 0.0] };
        let kn = [axis[0] / norm, axis[1] / norm, axis[2] / norm];
        let e = [
            kn[1] * helper[2] - kn[2] * helper[1],
            kn[2] * helper[0] - kn[0] * helper[2],
            kn[0] * helper[1] - kn[1] * helper[0],
        ];
        let en = e.iter().map(|x| x * x).sum::<f64>().sqrt();
        let kx = dot(k, xdot);
        let mag = q * kx.abs() / spec.ell();
        let kdot = FourVector::new(0.0, mag * e[0] / en, mag * e[1] / en, mag * e[2] / en);

        let (p, chi) = spec.momenta(xdot, k, kdot)?;
        let from_momenta = spec.casimirs_from_momenta(p, k, chi)?;
        let from_q = spec.casimirs_from_q(q)?;
        worst = worst.max((from_momenta.c_m - from_q.c_m).abs() / from_q.c_m.abs());
        worst = worst.max((from_momenta.c_j - from_q.c_j).abs() / from_q.c_j.abs().max(1e-300));
    }
    Ok(CheckResult::bound(
        "casimir_roundtrip",
        worst,
        1e-10,
        "momenta-route vs Q-route Casimirs, relative",
    ))
}

fn check_rapidity_identity(spec: &RotatorSpec) -> Result<CheckResult> {
    let mut worst: f64 = 0.0;
    let mut superluminal = false;
    for i in 0..50 {
        let q = 0.1 + 0.8 * i as f64 / 49.0;
        let c = spec.casimirs_from_q(q)?;
        let rho_omega = rho_from_casimirs(spec, c) * angular_velocity(spec, c)?;
        let from_g = rapidity_from_q(spec, q)?;
        worst = worst.max((rho_omega - from_g).abs());
        worst = worst.max((rho_omega.abs() - from_g.abs()).abs());
        superluminal |= from_g.abs() >= 1.0;
    }
    let mut check = CheckResult::bound(
        "rapidity_identity",
        worst,
        1e-10,
        "tanh psi = rho*omega = QG'/(2G-QG') over a 50-point Q sweep",
    );
    check.pass &= !superluminal;
    Ok(check)
}

fn check_closed_form_match(spec: &RotatorSpec, q: f64) -> Result<CheckResult> {
    let s0 = initial_state(spec, q, [1.0, 0.0, 0.0], 0.0)?;
    let opts = IntegratorOptions { t_final: 5.0, dt: 1e-3, ..Default::default() };
    let traj = integrate(spec, &s0, None, opts)?;
    let mut worst: f64 = 0.0;
    for s in traj.samples.iter().step_by(200) {
        let exact = phenom_closed_form(spec, &s0, s.t)?;
        worst = worst.max((s.state.x - exact.x).max_abs());
    }
    Ok(CheckResult::bound("closed_form_match", worst, 1e-8, "RK4 vs analytic solution, T = 5"))
}

fn check_hamiltonian_consistency(
    spec: &RotatorSpec,
    q: f64,
    profile: &GaugeProfile,
    rng: &mut impl Rng,
) -> Result<CheckResult> {
    let mut worst: f64 = 0.0;
    for _ in 0..20 {
        let s = random_on_surface_state(spec, q, rng)?;
        let (from_bracket, hand) = match spec.kind() {
            RotatorKind::Phenomenological => {
                let h = CmHamiltonian { spec };
                (bracket_eom(&h, &s)?, phenom_eom(spec, &s)?)
            }
            RotatorKind::Fundamental => {
                let omega = profile.omega(0.0);
                let h = CmFundamentalHamiltonian { spec, omega };
                (bracket_eom(&h, &s)?, fundamental_eom(spec, &s, profile, 0.0)?)
            }
        };
        for (a, b) in from_bracket.to_array().iter().zip(hand.to_array().iter()) {
            worst = worst.max((a - b).abs());
        }
    }
    Ok(CheckResult::bound(
        "hamiltonian_consistency",
        worst,
        1e-8,
        "bracket-generated flow vs hand-coded equations of motion",
    ))
}

fn check_hessian_rank(spec: &RotatorSpec) -> Result<CheckResult> {
    let expected = match spec.kind() {
        RotatorKind::Phenomenological => 5,
        RotatorKind::Fundamental => 4,
    };
    let report = hessian_rank(
        spec,
        FourVector::new(1.0, 0.1, 0.0, 0.05),
        FourVector::new(1.0, 1.0, 0.0, 0.0),
        FourVector::new(0.0, 0.0, 0.5, 0.2),
        HessianMode::Dual,
    )?;
    Ok(CheckResult {
        name: "hessian_rank".into(),
        pass: report.rank == expected && !report.indeterminate,
        measured: report.rank as f64,
        tolerance: expected as f64,
        detail: format!(
            "rank {} (expected {expected}), spectral gap {:.3e}",
            report.rank, report.gap_ratio
        ),
    })
}

fn check_fundamental_paradox(spec: &RotatorSpec, profile: &GaugeProfile) -> Result<CheckResult> {
    let s0 = initial_state(spec, 0.0, [1.0, 0.0, 0.0], 0.0)?;
    let opts = IntegratorOptions { t_final: 10.0, dt: 1e-3, ..Default::default() };
    let traj = integrate(spec, &s0, Some(profile), opts)?;
    let mut worst: f64 = 0.0;
    for s in &traj.samples {
        let gauge = 0.5 * spec.ell() * s.omega_gauge.unwrap_or(f64::NAN);
        worst = worst.max((s.tanh_psi - gauge).abs());
    }
    Ok(CheckResult::bound(
        "fundamental_paradox",
        worst,
        1e-8,
        "tanh psi(t) equals the gauge variable l*omega(t)/2 pointwise",
    ))
}

fn check_indeterminacy(spec: &RotatorSpec) -> Result<CheckResult> {
    let s0 = initial_state(spec, 0.0, [1.0, 0.0, 0.0], 0.0)?;
    let opts = IntegratorOptions { t_final: 10.0, dt: 1e-3, ..Default::default() };
    let a = integrate(spec, &s0, Some(&GaugeProfile::Constant(1.0)), opts)?;
    let b = integrate(
        spec,
        &s0,
        Some(&GaugeProfile::Sinusoid { offset: 1.0, amplitude: 0.5, frequency: 1.0 }),
        opts,
    )?;
    let mut separation: f64 = 0.0;
    for (sa, sb) in a.samples.iter().zip(&b.samples) {
        let d = sa.state.x - sb.state.x;
        separation = separation.max((d.x * d.x + d.y * d.y + d.z * d.z).sqrt());
    }
    let residuals_ok = a.drift_stats().max_constraint_residual < 1e-9
        && b.drift_stats().max_constraint_residual < 1e-9;
    Ok(CheckResult {
        name: "indeterminacy".into(),
        pass: separation > 0.1 * spec.ell() && residuals_ok,
        measured: separation,
        tolerance: 0.1 * spec.ell(),
        detail: "identical initial data, different gauge profiles: trajectories diverge \
                 while staying on the constraint surface"
            .into(),
    })
}

fn check_sphere() -> Result<CheckResult> {
    let model = SphereModel::new(FourVector::new(1.0, 0.0, 0.0, 0.0))?;
    let s0 = SphereState {
        q: FourVector::new(1.0, 1.0, 0.0, 0.0),
        qdot: FourVector::new(0.0, 0.0, 1.0, 0.0),
    };
    let samples = model.integrate(&s0, 10.0, 1e-3)?;
    let mut worst: f64 = 0.0;
    for s in &samples {
        for r in s.residuals {
            worst = worst.max(r.abs());
        }
    }
    let (report, null_res) = model.hessian_report(s0.q);
    let rank_ok = report.rank == 2 && null_res[0] < 1e-8 && null_res[1] < 1e-8;
    Ok(CheckResult {
        name: "sphere_example".into(),
        pass: worst < 1e-9 && rank_ok,
        measured: worst,
        tolerance: 1e-9,
        detail: format!(
            "cone constraints preserved; acceleration operator rank {} with null residuals \
             {:.2e}, {:.2e}",
            report.rank, null_res[0], null_res[1]
        ),
    })
}

/// Builds the standard pair of scenarios (quadratic and fundamental+) used
/// by the command-line `verify` default.
pub fn default_scenarios() -> Result<Vec<VerifyScenario>> {
    Ok(vec![
        VerifyScenario::new(RotatorSpec::new(1.0, 1.0, GFamily::Quadratic)?),
        VerifyScenario::new(RotatorSpec::new(1.0, 1.0, GFamily::FundamentalPlus)?),
    ])
}
