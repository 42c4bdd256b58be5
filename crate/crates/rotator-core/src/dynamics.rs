//! Gauge-fixed Hamiltonian dynamics: multiplier formulas in the
//! center-of-momentum gauge, equations of motion for both rotator kinds,
//! on-surface initial-state construction, RK4 integration with drift
//! logging, and the closed-form solution oracles.
//!
//! The time variable is the proper time of the center-of-momentum frame
//! throughout (gauge `p.xdot = sqrt(pp)`).

use serde::Serialize;

use crate::analysis::rapidity;
use crate::bracket::{
    eval_constraints, gradient, casimir_value, Casimir, PhaseFunction, PhaseState,
    BLOCK_CHI, BLOCK_K, BLOCK_P, BLOCK_X,
};
use crate::error::{CoreError, Result};
use crate::minkowski::{dot, FourVector, METRIC_SIGNS};
use crate::model::{CasimirPair, RotatorKind, RotatorSpec};
use crate::scalar::Scalar;

/// Gauge frequency profile `omega_tilde(t)` for fundamental rotators: a
/// deterministic callable of the center-of-momentum proper time only.
#[derive(Clone, Debug)]
pub enum GaugeProfile {
    /// Constant frequency.
    Constant(f64),
    /// `offset + amplitude * sin(frequency * t)`.
    Sinusoid { offset: f64, amplitude: f64, frequency: f64 },
    /// Natural cubic spline through `(t, omega)` nodes, clamped to the end
    /// values outside the node range.
    Spline(CubicSpline),
}

impl GaugeProfile {
    /// Frequency at time `t`.
    pub fn omega(&self, t: f64) -> f64 {
        match self {
            GaugeProfile::Constant(c) => *c,
            GaugeProfile::Sinusoid { offset, amplitude, frequency } => {
                offset + amplitude * (frequency * t).sin()
            }
            GaugeProfile::Spline(s) => s.eval(t),
        }
    }

    /// Accumulated rotation phase `integral_0^t omega(s) ds`, exact for
    /// every builtin profile (the spline integrates piecewise in closed
    /// form).
    pub fn phase(&self, t: f64) -> f64 {
        match self {
            GaugeProfile::Constant(c) => c * t,
            GaugeProfile::Sinusoid { offset, amplitude, frequency } => {
                if *frequency == 0.0 {
                    offset * t
                } else {
                    offset * t + amplitude * (1.0 - (frequency * t).cos()) / frequency
                }
            }
            GaugeProfile::Spline(s) => s.integral(t),
        }
    }

    pub fn label(&self) -> String {
        match self {
            GaugeProfile::Constant(c) => format!("const:{c}"),
            GaugeProfile::Sinusoid { offset, amplitude, frequency } => {
                format!("sin:{offset},{amplitude},{frequency}")
            }
            GaugeProfile::Spline(s) => {
                let nodes: Vec<String> =
                    s.t.iter().zip(&s.w).map(|(t, w)| format!("{t}:{w}")).collect();
                format!("spline:{}", nodes.join(","))
            }
        }
    }

    /// Parses "const:c", "sin:offset,amplitude,frequency", or
    /// "spline:t0:w0,t1:w1,...".
    pub fn parse(s: &str) -> Result<Self> {
        let bad = |msg: String| CoreError::Domain(format!("profile: {msg}"));
        if let Some(rest) = s.strip_prefix("const:") {
            let c = rest.parse::<f64>().map_err(|_| bad(format!("bad constant '{rest}'")))?;
            return Ok(GaugeProfile::Constant(c));
        }
        if let Some(rest) = s.strip_prefix("sin:") {
            let parts: Vec<&str> = rest.split(',').collect();
            if parts.len() != 3 {
                return Err(bad(format!("sinusoid needs offset,amplitude,frequency, got '{rest}'")));
            }
            let nums: std::result::Result<Vec<f64>, _> =
                parts.iter().map(|p| p.trim().parse::<f64>()).collect();
            let nums = nums.map_err(|_| bad(format!("bad sinusoid numbers in '{rest}'")))?;
            return Ok(GaugeProfile::Sinusoid {
                offset: nums[0],
                amplitude: nums[1],
                frequency: nums[2],
            });
        }
        if let Some(rest) = s.strip_prefix("spline:") {
            let mut t = Vec::new();
            let mut w = Vec::new();
            for pair in rest.split(',') {
                let Some((ts, ws)) = pair.split_once(':') else {
                    return Err(bad(format!("spline node '{pair}' must be t:omega")));
                };
                t.push(ts.trim().parse::<f64>().map_err(|_| bad(format!("bad node time '{ts}'")))?);
                w.push(ws.trim().parse::<f64>().map_err(|_| bad(format!("bad node value '{ws}'")))?);
            }
            return Ok(GaugeProfile::Spline(CubicSpline::natural(t, w)?));
        }
        Err(bad(format!("unknown profile '{s}' (expected const:, sin:, or spline:)")))
    }
}

/// Natural cubic spline with an exact piecewise antiderivative.
#[derive(Clone, Debug)]
pub struct CubicSpline {
    t: Vec<f64>,
    w: Vec<f64>,
    /// Polynomial coefficients (a, b, c, d) per segment in (t - t_i).
    coef: Vec<[f64; 4]>,
    /// Cumulative integral from t[0] to each node.
    cum: Vec<f64>,
}

impl CubicSpline {
    /// Builds a natural spline through strictly increasing nodes.
    pub fn natural(t: Vec<f64>, w: Vec<f64>) -> Result<Self> {
        let n = t.len();
        if n < 2 || w.len() != n {
            return Err(CoreError::Domain(
                "spline: need at least two (t, omega) nodes of equal length".into(),
            ));
        }
        if t.windows(2).any(|p| p[1] <= p[0]) {
            return Err(CoreError::Domain("spline: node times must be strictly increasing".into()));
        }

        // Second derivatives from the natural-spline tridiagonal system.
        let mut m = vec![0.0; n];
        if n > 2 {
            let h: Vec<f64> = t.windows(2).map(|p| p[1] - p[0]).collect();
            let mut diag = vec![0.0; n - 2];
            let mut rhs = vec![0.0; n - 2];
            let mut upper = vec![0.0; n - 2];
            for i in 1..n - 1 {
                diag[i - 1] = 2.0 * (h[i - 1] + h[i]);
                upper[i - 1] = h[i];
                rhs[i - 1] =
                    6.0 * ((w[i + 1] - w[i]) / h[i] - (w[i] - w[i - 1]) / h[i - 1]);
            }
            // Thomas forward sweep (lower diagonal equals h[i-1]).
            for i in 1..n - 2 {
                let factor = h[i] / diag[i - 1];
                diag[i] -= factor * upper[i - 1];
                rhs[i] -= factor * rhs[i - 1];
            }
            m[n - 2] = rhs[n - 3] / diag[n - 3];
            for i in (1..n - 2).rev() {
                m[i] = (rhs[i - 1] - upper[i - 1] * m[i]) / diag[i - 1];
            }
        }

        let mut coef = Vec::with_capacity(n - 1);
        for i in 0..n - 1 {
            let h = t[i + 1] - t[i];
            coef.push([
                w[i],
                (w[i + 1] - w[i]) / h - h * (2.0 * m[i] + m[i + 1]) / 6.0,
                m[i] / 2.0,
                (m[i + 1] - m[i]) / (6.0 * h),
            ]);
        }
        let mut cum = vec![0.0; n];
        for i in 0..n - 1 {
            let h = t[i + 1] - t[i];
            let [a, b, c, d] = coef[i];
            cum[i + 1] = cum[i]
                + a * h
                + b * h * h / 2.0
                + c * h * h * h / 3.0
                + d * h * h * h * h / 4.0;
        }
        Ok(CubicSpline { t, w, coef, cum })
    }

    pub fn eval(&self, x: f64) -> f64 {
        let n = self.t.len();
        if x <= self.t[0] {
            return self.w[0];
        }
        if x >= self.t[n - 1] {
            return self.w[n - 1];
        }
        let i = self.segment(x);
        let dt = x - self.t[i];
        let [a, b, c, d] = self.coef[i];
        a + b * dt + c * dt * dt + d * dt * dt * dt
    }

    /// Integral from t[0]... extended by the clamped constant outside the
    /// node range; callers integrate from 0 via `integral(t) - integral(0)`.
    fn raw_integral(&self, x: f64) -> f64 {
        let n = self.t.len();
        if x <= self.t[0] {
            return self.w[0] * (x - self.t[0]);
        }
        if x >= self.t[n - 1] {
            return self.cum[n - 1] + self.w[n - 1] * (x - self.t[n - 1]);
        }
        let i = self.segment(x);
        let dt = x - self.t[i];
        let [a, b, c, d] = self.coef[i];
        self.cum[i] + a * dt + b * dt * dt / 2.0 + c * dt * dt * dt / 3.0 + d * dt * dt * dt * dt / 4.0
    }

    /// Integral of the spline from 0 to `x`.
    pub fn integral(&self, x: f64) -> f64 {
        self.raw_integral(x) - self.raw_integral(0.0)
    }

    fn segment(&self, x: f64) -> usize {
        match self.t.binary_search_by(|v| v.partial_cmp(&x).unwrap()) {
            Ok(i) => i.min(self.t.len() - 2),
            Err(i) => i - 1,
        }
    }
}

/// Gauge multipliers in the center-of-momentum gauge.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub enum GaugeCoefficients {
    Phenomenological { u1: f64, u2: f64, u3: f64, omega: f64 },
    Fundamental { u1: f64, u2: f64, u3: f64, u4: f64, omega: f64 },
}

/// On-surface initial state in the center-of-momentum gauge.
///
/// `q` selects the phenomenological operating point (ignored for fundamental
/// rotators, whose Casimirs are fixed); `axis` is the spatial direction of
/// the null vector k; `phase` orients chi in the plane orthogonal to it.
pub fn initial_state(
    spec: &RotatorSpec,
    q: f64,
    axis: [f64; 3],
    phase: f64,
) -> Result<PhaseState<f64>> {
    let casimirs = match spec.kind() {
        RotatorKind::Phenomenological => {
            let c = spec.casimirs_from_q(q)?;
            if c.c_j <= 0.0 {
                return Err(CoreError::Domain(format!(
                    "Q = {q}: zero spin (G'(Q) = 0) is outside the valid rotator range"
                )));
            }
            // The mass-spin curve must cover this operating point.
            spec.mass_spin_curve()?.eval(c.c_j)?;
            c
        }
        RotatorKind::Fundamental => CasimirPair { c_m: 1.0, c_j: 1.0 },
    };

    let norm = (axis[0] * axis[0] + axis[1] * axis[1] + axis[2] * axis[2]).sqrt();
    if norm < 1e-12 {
        return Err(CoreError::Domain("axis: spatial axis must be nonzero".into()));
    }
    let n = [axis[0] / norm, axis[1] / norm, axis[2] / norm];

    // Orthonormal pair spanning the plane orthogonal to n.
    let helper = if n[0].abs() < 0.9 { [1.0, 0.0, 0.0] } else { [0.0, 1.0, 0.0] };
    let cross = |a: [f64; 3], b: [f64; 3]| {
        [a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]]
    };
    let normalize = |a: [f64; 3]| {
        let l = (a[0] * a[0] + a[1] * a[1] + a[2] * a[2]).sqrt();
        [a[0] / l, a[1] / l, a[2] / l]
    };
    let e1 = normalize(cross(n, helper));
    let e2 = cross(n, e1);
    let m_hat = [
        phase.cos() * e1[0] + phase.sin() * e2[0],
        phase.cos() * e1[1] + phase.sin() * e2[1],
        phase.cos() * e1[2] + phase.sin() * e2[2],
    ];

    let m = spec.m();
    let ell = spec.ell();
    let p0 = m * casimirs.c_m.sqrt();
    // pk = p0, so chi chi = -m^4 l^2 C_J / (4 pk^2) = -(m l / 2)^2 C_J / C_M.
    let chi_mag = 0.5 * m * ell * (casimirs.c_j / casimirs.c_m).sqrt();

    Ok(PhaseState::new(
        FourVector::zero(),
        FourVector::new(p0, 0.0, 0.0, 0.0),
        FourVector::new(1.0, n[0], n[1], n[2]),
        FourVector::new(0.0, chi_mag * m_hat[0], chi_mag * m_hat[1], chi_mag * m_hat[2]),
    ))
}

/// Gauge multipliers `(u1, u2, u3)` for phenomenological rotators in the
/// center-of-momentum gauge.
pub fn phenom_gauge_coefficients(
    spec: &RotatorSpec,
    s: &PhaseState<f64>,
) -> Result<GaugeCoefficients> {
    let casimirs = spec.casimirs_from_momenta(s.p, s.k, s.chi)?;
    let omega = crate::analysis::angular_velocity(spec, casimirs)?;
    let (_, f1, _) = spec.mass_spin_curve()?.eval(casimirs.c_j)?;
    let f_cj = -f1;

    let pp = dot(s.p, s.p);
    let pk = dot(s.p, s.k);
    let pchi = dot(s.p, s.chi);
    let chichi = dot(s.chi, s.chi);
    if chichi >= 0.0 || pp <= 0.0 {
        return Err(CoreError::Domain(format!(
            "gauge coefficients need timelike p and spacelike chi (pp = {pp}, chichi = {chichi})"
        )));
    }
    let root = (-chichi * pp).sqrt();
    let m = spec.m();
    let ell = spec.ell();

    Ok(GaugeCoefficients::Phenomenological {
        u1: -0.5 * (pchi * pchi - pp * chichi) / (pk * root) * omega,
        u2: pchi / root * omega,
        u3: m.powi(4) * ell * ell / (8.0 * pk * root) * omega / f_cj,
        omega,
    })
}

/// Gauge multipliers `(u1..u4)` for fundamental rotators, with
/// `u4 = l omega_tilde(t) / 2`.
pub fn fundamental_gauge_coefficients(
    spec: &RotatorSpec,
    s: &PhaseState<f64>,
    profile: &GaugeProfile,
    t: f64,
) -> Result<GaugeCoefficients> {
    let omega = profile.omega(t);
    let u4 = 0.5 * spec.ell() * omega;
    if u4.abs() >= 1.0 {
        return Err(CoreError::SuperluminalGauge(format!(
            "l omega/2 = {u4} at t = {t}: |tanh psi| must stay below 1"
        )));
    }
    let m = spec.m();
    let ell = spec.ell();
    let pk = dot(s.p, s.k);
    let pchi = dot(s.p, s.chi);
    if pk == 0.0 {
        return Err(CoreError::Degenerate("pk: gauge coefficients need pk != 0".into()));
    }
    Ok(GaugeCoefficients::Fundamental {
        u1: -(m.powi(3) / (2.0 * pk * pk))
            * (1.0 + 4.0 * pk * pk * pchi * pchi / (m.powi(6) * ell * ell))
            * u4,
        u2: 4.0 * pk * pchi / (m.powi(3) * ell * ell) * u4,
        u3: 0.5 * m * u4,
        u4,
        omega,
    })
}

/// Phase-space derivative of the gauge-fixed phenomenological flow.
///
/// `p` is exactly conserved; the remaining components rotate the null
/// direction and its conjugate at the Casimir-determined frequency.
pub fn phenom_eom(spec: &RotatorSpec, s: &PhaseState<f64>) -> Result<PhaseState<f64>> {
    let casimirs = spec.casimirs_from_momenta(s.p, s.k, s.chi)?;
    let omega = crate::analysis::angular_velocity(spec, casimirs)?;
    let rho = crate::analysis::rho_from_casimirs(spec, casimirs);

    let pp = dot(s.p, s.p);
    let pk = dot(s.p, s.k);
    let pchi = dot(s.p, s.chi);
    let chichi = dot(s.chi, s.chi);
    if pp <= 0.0 || chichi >= 0.0 {
        return Err(CoreError::Domain(format!(
            "flow needs timelike p and spacelike chi (pp = {pp}, chichi = {chichi})"
        )));
    }
    let sqrt_pp = pp.sqrt();
    let root = (-chichi * pp).sqrt();

    let n = (s.k.scale(pp) - s.p.scale(pk)).scale(1.0 / (pk * sqrt_pp));
    let swing = s.k.scale(pchi) - s.chi.scale(pk);

    let xdot = s.p.scale(1.0 / sqrt_pp) + n.scale(rho * omega);
    let kdot = swing.scale(omega / root);
    let chidot = n.scale(omega * (-chichi).sqrt()) + swing.scale(omega * pchi / (pk * root));

    Ok(PhaseState::new(xdot, FourVector::zero(), kdot, chidot))
}

/// Phase-space derivative of the fundamental flow under the gauge profile.
pub fn fundamental_eom(
    spec: &RotatorSpec,
    s: &PhaseState<f64>,
    profile: &GaugeProfile,
    t: f64,
) -> Result<PhaseState<f64>> {
    let GaugeCoefficients::Fundamental { u4, omega, .. } =
        fundamental_gauge_coefficients(spec, s, profile, t)?
    else {
        unreachable!()
    };
    let m = spec.m();
    let ell = spec.ell();
    let pk = dot(s.p, s.k);
    let pchi = dot(s.p, s.chi);

    let radial = s.k.scale(m / pk) - s.p.scale(1.0 / m);
    let swing = s.k.scale(pchi) - s.chi.scale(pk);

    let xdot = s.p.scale(1.0 / m) + radial.scale(u4);
    let kdot = swing.scale(2.0 * omega * pk / (m.powi(3) * ell));
    let chidot = (radial + swing.scale(4.0 * pk * pchi / (m.powi(5) * ell * ell)))
        .scale(m * m * ell * omega / (2.0 * pk));

    Ok(PhaseState::new(xdot, FourVector::zero(), kdot, chidot))
}

/// One recorded integration step.
#[derive(Clone, Debug, Serialize)]
pub struct TrajectorySample {
    pub t: f64,
    #[serde(skip)]
    pub state: PhaseState<f64>,
    pub casimirs: CasimirPair,
    pub tanh_psi: f64,
    pub rho: f64,
    /// Primary-constraint residuals in the kind's conventional order.
    pub residuals: Vec<f64>,
    /// Gauge frequency at this time (fundamental rotators only).
    pub omega_gauge: Option<f64>,
    /// Torsion residual over the surrounding window; filled by
    /// `analysis::fill_torsion` after integration, None at the edges.
    pub torsion: Option<f64>,
}

/// Integration settings.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct IntegratorOptions {
    pub t_final: f64,
    pub dt: f64,
    /// Post-step projection of (k, chi) back to the constraint surface.
    /// Off by default so drift stays measurable.
    pub stabilize: bool,
    /// Abort when any relative constraint residual exceeds this.
    pub abort_threshold: f64,
    /// Record every n-th step (the initial and final states always).
    pub stride: usize,
}

impl Default for IntegratorOptions {
    fn default() -> Self {
        IntegratorOptions {
            t_final: 10.0,
            dt: 1e-3,
            stabilize: false,
            abort_threshold: 1e-6,
            stride: 1,
        }
    }
}

/// Worst-case drift figures over a trajectory.
#[derive(Clone, Debug, Serialize)]
pub struct DriftStats {
    pub max_constraint_residual: f64,
    pub casimir_mass_drift: f64,
    pub casimir_spin_drift: f64,
    /// max |p(t) - p(0)| by component.
    pub momentum_drift: f64,
    /// Gauge conditions: max |p.xdot - sqrt(pp)|, |pk - sqrt(pp)|, |p.chi|.
    pub gauge_proper_time: f64,
    pub gauge_pk: f64,
    pub gauge_pchi: f64,
}

/// An integrated trajectory with metadata and per-sample diagnostics.
#[derive(Clone, Debug)]
pub struct Trajectory {
    pub samples: Vec<TrajectorySample>,
    pub kind: RotatorKind,
    pub family: String,
    pub profile: Option<String>,
    pub options: IntegratorOptions,
    /// Per-sample p.xdot - sqrt(pp), the proper-time gauge violation.
    gauge_proper_time_raw: Vec<f64>,
}

impl Trajectory {
    /// Worst-case drift over all samples, relative to the initial sample.
    pub fn drift_stats(&self) -> DriftStats {
        let first = &self.samples[0];
        let mut stats = DriftStats {
            max_constraint_residual: 0.0,
            casimir_mass_drift: 0.0,
            casimir_spin_drift: 0.0,
            momentum_drift: 0.0,
            gauge_proper_time: 0.0,
            gauge_pk: 0.0,
            gauge_pchi: 0.0,
        };
        for s in &self.samples {
            for r in &s.residuals {
                stats.max_constraint_residual = stats.max_constraint_residual.max(r.abs());
            }
            stats.casimir_mass_drift =
                stats.casimir_mass_drift.max((s.casimirs.c_m - first.casimirs.c_m).abs());
            stats.casimir_spin_drift =
                stats.casimir_spin_drift.max((s.casimirs.c_j - first.casimirs.c_j).abs());
            stats.momentum_drift =
                stats.momentum_drift.max((s.state.p - first.state.p).max_abs());
            let pp = dot(s.state.p, s.state.p).sqrt();
            stats.gauge_pk = stats.gauge_pk.max((dot(s.state.p, s.state.k) - pp).abs());
            stats.gauge_pchi = stats.gauge_pchi.max(dot(s.state.p, s.state.chi).abs());
        }
        stats.gauge_proper_time = self.max_proper_time_violation();
        stats
    }

    fn max_proper_time_violation(&self) -> f64 {
        self.gauge_proper_time_raw.iter().fold(0.0f64, |a, &v| a.max(v.abs()))
    }

    fn new(
        kind: RotatorKind,
        family: String,
        profile: Option<String>,
        options: IntegratorOptions,
    ) -> Self {
        Trajectory { samples: Vec::new(), kind, family, profile, options, gauge_proper_time_raw: Vec::new() }
    }
}

/// RK4 integration of the gauge-fixed flow with per-step constraint and
/// Casimir logging.
pub fn integrate(
    spec: &RotatorSpec,
    s0: &PhaseState<f64>,
    profile: Option<&GaugeProfile>,
    options: IntegratorOptions,
) -> Result<Trajectory> {
    if options.dt <= 0.0 || options.t_final <= 0.0 {
        return Err(CoreError::Domain(format!(
            "integrator: need positive dt and t_final, got dt = {}, T = {}",
            options.dt, options.t_final
        )));
    }
    let profile = match spec.kind() {
        RotatorKind::Fundamental => Some(profile.ok_or_else(|| {
            CoreError::Domain("integrator: fundamental rotators need a gauge profile".into())
        })?),
        RotatorKind::Phenomenological => None,
    };

    let deriv = |t: f64, s: &PhaseState<f64>| -> Result<PhaseState<f64>> {
        match profile {
            Some(pr) => fundamental_eom(spec, s, pr, t),
            None => phenom_eom(spec, s),
        }
    };

    let initial_set = eval_constraints(spec, s0)?;
    if !initial_set.on_surface() {
        return Err(CoreError::Domain(format!(
            "integrator: initial state is off-surface (max relative residual {:.3e})",
            initial_set.max_relative()
        )));
    }
    let cj_target = casimir_value(spec, Casimir::Spin, s0);

    let steps = (options.t_final / options.dt).round() as usize;
    let stride = options.stride.max(1);
    let mut traj = Trajectory::new(
        spec.kind(),
        spec.family().label(),
        profile.map(|p| p.label()),
        options,
    );

    let mut s = *s0;
    record_sample(spec, &mut traj, 0.0, &s, profile, &deriv)?;
    for i in 0..steps {
        let t = i as f64 * options.dt;
        s = rk4_step(&deriv, t, &s, options.dt)?;
        if options.stabilize {
            project_to_surface(spec, &mut s, cj_target)?;
        }
        let t_next = (i + 1) as f64 * options.dt;
        if (i + 1) % stride == 0 || i + 1 == steps {
            record_sample(spec, &mut traj, t_next, &s, profile, &deriv)?;
            let last = traj.samples.last().unwrap();
            let worst = last.residuals.iter().fold(0.0f64, |a, r| a.max(r.abs()));
            if worst > options.abort_threshold {
                return Err(CoreError::IntegrationAbort {
                    t: t_next,
                    reason: format!(
                        "constraint residual {worst:.3e} exceeded abort threshold {:.3e}",
                        options.abort_threshold
                    ),
                });
            }
        }
    }
    Ok(traj)
}

fn rk4_step<F>(deriv: &F, t: f64, s: &PhaseState<f64>, dt: f64) -> Result<PhaseState<f64>>
where
    F: Fn(f64, &PhaseState<f64>) -> Result<PhaseState<f64>>,
{
    let axpy = |s: &PhaseState<f64>, d: &PhaseState<f64>, h: f64| {
        let mut out = s.to_array();
        let da = d.to_array();
        for (o, dv) in out.iter_mut().zip(da.iter()) {
            *o += h * dv;
        }
        PhaseState::from_array(out)
    };
    let k1 = deriv(t, s)?;
    let k2 = deriv(t + 0.5 * dt, &axpy(s, &k1, 0.5 * dt))?;
    let k3 = deriv(t + 0.5 * dt, &axpy(s, &k2, 0.5 * dt))?;
    let k4 = deriv(t + dt, &axpy(s, &k3, dt))?;

    let mut out = s.to_array();
    let (a1, a2, a3, a4) = (k1.to_array(), k2.to_array(), k3.to_array(), k4.to_array());
    for i in 0..16 {
        out[i] += dt / 6.0 * (a1[i] + 2.0 * a2[i] + 2.0 * a3[i] + a4[i]);
    }
    Ok(PhaseState::from_array(out))
}

fn record_sample<F>(
    spec: &RotatorSpec,
    traj: &mut Trajectory,
    t: f64,
    s: &PhaseState<f64>,
    profile: Option<&GaugeProfile>,
    deriv: &F,
) -> Result<()>
where
    F: Fn(f64, &PhaseState<f64>) -> Result<PhaseState<f64>>,
{
    let set = eval_constraints(spec, s)?;
    let casimirs = spec.casimirs_from_momenta(s.p, s.k, s.chi)?;
    let d = deriv(t, s)?;
    let tanh_psi = rapidity(s.p, s.k, d.x)?;
    traj.gauge_proper_time_raw.push(dot(s.p, d.x) - dot(s.p, s.p).sqrt());
    traj.samples.push(TrajectorySample {
        t,
        state: *s,
        casimirs,
        tanh_psi,
        rho: crate::analysis::rho_from_casimirs(spec, casimirs),
        residuals: set.residuals,
        omega_gauge: profile.map(|p| p.omega(t)),
        torsion: None,
    });
    Ok(())
}

/// Projects (k, chi) back to the constraint surface: restore the null cone
/// and the k-scale, then re-orthogonalize chi against p and k and rescale
/// its norm to the target Casimir spin.
pub fn project_to_surface(
    spec: &RotatorSpec,
    s: &mut PhaseState<f64>,
    cj_target: f64,
) -> Result<()> {
    let pp = dot(s.p, s.p);
    let sqrt_pp = pp.sqrt();

    // k: exact null vector with the same spatial direction, rescaled so
    // pk = sqrt(pp).
    let spatial = s.k.spatial_norm();
    if spatial == 0.0 {
        return Err(CoreError::Degenerate("projection: k has no spatial part".into()));
    }
    let k_null = FourVector::new(spatial, s.k.x, s.k.y, s.k.z);
    let pk_raw = dot(s.p, k_null);
    let k = k_null.scale(sqrt_pp / pk_raw);
    let pk = sqrt_pp;

    // chi: two-step Gram-Schmidt against k and p (solve for the additive
    // combination alpha p + beta k restoring k.chi = p.chi = 0).
    let alpha = -dot(s.k, s.chi) / pk; // uses exact kk = 0
    let beta = -(dot(s.p, s.chi) + alpha * pp) / pk;
    let mut chi = s.chi + s.p.scale(alpha) + k.scale(beta);

    let chichi = dot(chi, chi);
    let target = -spec.m().powi(4) * spec.ell() * spec.ell() * cj_target / (4.0 * pk * pk);
    if chichi >= 0.0 {
        return Err(CoreError::Degenerate("projection: chi lost its spacelike character".into()));
    }
    chi = chi.scale((target / chichi).sqrt());

    s.k = k;
    s.chi = chi;
    Ok(())
}

/// Exact phenomenological solution: inertial drift of the
/// center-of-momentum frame plus uniform circular motion of fixed radius
/// and frequency.
///
/// Requires a center-of-momentum-gauge start (`pk = sqrt(pp)`, `p.chi = 0`),
/// which [`initial_state`] produces and boosts preserve.
pub fn phenom_closed_form(
    spec: &RotatorSpec,
    s0: &PhaseState<f64>,
    t: f64,
) -> Result<PhaseState<f64>> {
    let casimirs = spec.casimirs_from_momenta(s0.p, s0.k, s0.chi)?;
    let omega = crate::analysis::angular_velocity(spec, casimirs)?;
    let rho = crate::analysis::rho_from_casimirs(spec, casimirs);
    closed_form_rotation(s0, omega * t, rho, t)
}

/// Exact fundamental solution for an arbitrary gauge profile, driven by the
/// accumulated phase `theta(t)`; the orbit radius is `l/2`.
pub fn fundamental_closed_form(
    spec: &RotatorSpec,
    s0: &PhaseState<f64>,
    profile: &GaugeProfile,
    t: f64,
) -> Result<PhaseState<f64>> {
    let theta = profile.phase(t);
    closed_form_rotation(s0, theta, 0.5 * spec.ell(), t)
}

fn closed_form_rotation(
    s0: &PhaseState<f64>,
    theta: f64,
    radius: f64,
    t: f64,
) -> Result<PhaseState<f64>> {
    let pp = dot(s0.p, s0.p);
    let pk = dot(s0.p, s0.k);
    let pchi = dot(s0.p, s0.chi);
    let sqrt_pp = pp.sqrt();
    if (pk - sqrt_pp).abs() > 1e-9 * sqrt_pp || pchi.abs() > 1e-9 {
        return Err(CoreError::Domain(format!(
            "closed form requires a center-of-momentum-gauge start (pk = sqrt(pp), p.chi = 0); \
             got pk - sqrt(pp) = {:.3e}, p.chi = {:.3e}",
            pk - sqrt_pp,
            pchi
        )));
    }
    let chichi = dot(s0.chi, s0.chi);
    if chichi >= 0.0 {
        return Err(CoreError::Degenerate("closed form: chi must be spacelike".into()));
    }
    let chi_norm = (-chichi).sqrt();

    let n0 = (s0.k.scale(pp) - s0.p.scale(pk)).scale(1.0 / (pk * sqrt_pp));
    let m0 = s0.chi.scale(1.0 / chi_norm);

    let (sin, cos) = theta.sin_cos();
    let n = n0.scale(cos) - m0.scale(sin);
    let m_hat = m0.scale(cos) + n0.scale(sin);

    let x = s0.x
        + s0.p.scale(t / sqrt_pp)
        + n0.scale(radius * sin)
        + m0.scale(radius * (cos - 1.0));
    let k = s0.p.scale(1.0 / sqrt_pp) + n;
    let chi = m_hat.scale(chi_norm);
    Ok(PhaseState::new(x, s0.p, k, chi))
}

/// Center-of-momentum Hamiltonian of phenomenological rotators.
///
/// A pure constraint combination: it vanishes on the surface, and its
/// canonical flow reproduces [`phenom_eom`] there.
pub struct CmHamiltonian<'a> {
    pub spec: &'a RotatorSpec,
}

impl PhaseFunction for CmHamiltonian<'_> {
    fn eval<T: Scalar>(&self, s: &PhaseState<T>) -> T {
        let spec = self.spec;
        let curve = spec.mass_spin_curve().expect("phenomenological rotator");
        let c_m = casimir_value(spec, Casimir::Mass, s);
        let c_j = casimir_value(spec, Casimir::Spin, s);
        let f = c_j.lift_c2(&|cj| curve.eval_raw(cj));
        let f1 = c_j.lift_c2(&|cj| {
            let (_, d1, d2) = curve.eval_raw(cj);
            (d1, d2, 0.0)
        });

        let m = T::scalar(spec.m());
        let scale4 = T::scalar(spec.m().powi(4) * spec.ell() * spec.ell());
        let kk = dot(s.k, s.k);
        let kchi = dot(s.k, s.chi);
        let pp = dot(s.p, s.p);
        let pk = dot(s.p, s.k);
        let pchi = dot(s.p, s.chi);
        let chichi = dot(s.chi, s.chi);
        let four = T::scalar(4.0);
        let eight = T::scalar(8.0);

        let prefactor = T::scalar(0.5) * m * f1 * f.sqrt() / (f - c_j * f1);
        let bracket = (c_m - f) / f1 + four * (pchi * pchi - pp * chichi) * kk / scale4
            - eight * pk * pchi * kchi / scale4;
        prefactor * bracket
    }
}

/// Center-of-momentum Hamiltonian of fundamental rotators with the gauge
/// frequency fixed at a value `omega`.
pub struct CmFundamentalHamiltonian<'a> {
    pub spec: &'a RotatorSpec,
    pub omega: f64,
}

impl PhaseFunction for CmFundamentalHamiltonian<'_> {
    fn eval<T: Scalar>(&self, s: &PhaseState<T>) -> T {
        let spec = self.spec;
        let m = T::scalar(spec.m());
        let ell = T::scalar(spec.ell());
        let m2 = m * m;
        let scale4 = m2 * m2 * ell * ell;
        let kk = dot(s.k, s.k);
        let kchi = dot(s.k, s.chi);
        let pp = dot(s.p, s.p);
        let pk = dot(s.p, s.k);
        let pchi = dot(s.p, s.chi);
        let chichi = dot(s.chi, s.chi);
        let four = T::scalar(4.0);
        let eight = T::scalar(8.0);
        let half = T::scalar(0.5);
        let quarter = T::scalar(0.25);

        let head = half * m * (pp / m2 - T::one());
        let tail = quarter * m * ell * T::scalar(self.omega)
            * (pp / m2 + four * pk * pk * chichi / scale4
                + four * (pchi * pchi - pp * chichi) * kk / scale4
                - eight * pk * pchi * kchi / scale4);
        head - tail
    }
}

/// Equations of motion generated by an arbitrary Hamiltonian through the
/// canonical bracket: the cross-validation route for the hand-coded flows.
pub fn bracket_eom<H: PhaseFunction>(h: &H, s: &PhaseState<f64>) -> Result<PhaseState<f64>> {
    let g = gradient(h, s)?;
    let mut xdot = [0.0; 4];
    let mut pdot = [0.0; 4];
    let mut kdot = [0.0; 4];
    let mut chidot = [0.0; 4];
    for mu in 0..4 {
        let e = METRIC_SIGNS[mu];
        xdot[mu] = e * g[BLOCK_P + mu];
        pdot[mu] = -e * g[BLOCK_X + mu];
        kdot[mu] = e * g[BLOCK_CHI + mu];
        chidot[mu] = -e * g[BLOCK_K + mu];
    }
    Ok(PhaseState::new(
        FourVector::from_array(xdot),
        FourVector::from_array(pdot),
        FourVector::from_array(kdot),
        FourVector::from_array(chidot),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::minkowski::boost_along_axis;
    use crate::model::GFamily;

    fn quadratic() -> RotatorSpec {
        RotatorSpec::new(1.0, 1.0, GFamily::Quadratic).unwrap()
    }

    fn fundamental() -> RotatorSpec {
        RotatorSpec::new(1.0, 1.0, GFamily::FundamentalPlus).unwrap()
    }

    fn boost_state(s: &PhaseState<f64>, axis: usize, xi: f64) -> PhaseState<f64> {
        PhaseState::new(
            boost_along_axis(s.x, axis, xi),
            boost_along_axis(s.p, axis, xi),
            boost_along_axis(s.k, axis, xi),
            boost_along_axis(s.chi, axis, xi),
        )
    }

    #[test]
    fn initial_state_fundamental_base() {
        let spec = fundamental();
        let s = initial_state(&spec, 0.0, [1.0, 0.0, 0.0], -std::f64::consts::FRAC_PI_2).unwrap();
        assert_eq!(s.p, FourVector::new(1.0, 0.0, 0.0, 0.0));
        assert_eq!(s.k, FourVector::new(1.0, 1.0, 0.0, 0.0));
        assert!((s.chi.y - 0.5).abs() < 1e-15);
        assert!(s.chi.t.abs() < 1e-15 && s.chi.x.abs() < 1e-15 && s.chi.z.abs() < 1e-15);

        let set = eval_constraints(&spec, &s).unwrap();
        for r in &set.residuals {
            assert!(r.abs() < 1e-14);
        }
    }

    #[test]
    fn initial_state_quadratic_q_half() {
        let spec = quadratic();
        let s = initial_state(&spec, 0.5, [1.0, 0.0, 0.0], 0.0).unwrap();
        assert!((s.p.t - 0.75f64.sqrt()).abs() < 1e-15);
        assert!((dot(s.chi, s.chi) + 1.0 / 3.0).abs() < 1e-15);
        let set = eval_constraints(&spec, &s).unwrap();
        for r in &set.residuals {
            assert!(r.abs() < 1e-14);
        }
    }

    #[test]
    fn initial_state_rejects_zero_spin_and_bad_axis() {
        let spec = quadratic();
        assert!(initial_state(&spec, 0.0, [1.0, 0.0, 0.0], 0.0).is_err());
        assert!(initial_state(&spec, 0.5, [0.0, 0.0, 0.0], 0.0).is_err());
    }

    #[test]
    fn phenom_gauge_coefficients_examples() {
        let spec = quadratic();
        let s = initial_state(&spec, 0.5, [1.0, 0.0, 0.0], 0.3).unwrap();
        let GaugeCoefficients::Phenomenological { u2, omega, .. } =
            phenom_gauge_coefficients(&spec, &s).unwrap()
        else {
            panic!("kind");
        };
        assert_eq!(u2, 0.0); // p.chi = 0 in the cm gauge
        assert!((omega - 0.375).abs() < 1e-10);

        // tanh psi = rho * omega = 0.25 at this operating point.
        let d = phenom_eom(&spec, &s).unwrap();
        let tanh_psi = rapidity(s.p, s.k, d.x).unwrap();
        assert!((tanh_psi - 0.25).abs() < 1e-12);
    }

    #[test]
    fn fundamental_gauge_coefficients_examples() {
        let spec = fundamental();
        let s = initial_state(&spec, 0.0, [1.0, 0.0, 0.0], 0.0).unwrap();
        let profile = GaugeProfile::Constant(1.0);
        let GaugeCoefficients::Fundamental { u1, u2, u3, u4, .. } =
            fundamental_gauge_coefficients(&spec, &s, &profile, 0.0).unwrap()
        else {
            panic!("kind");
        };
        assert_eq!(u4, 0.5);
        assert_eq!(u3, 0.25);
        assert_eq!(u2, 0.0);
        assert!((u1 + 0.25).abs() < 1e-15);

        // Frozen rotation: every multiplier vanishes with the frequency.
        let zero = GaugeProfile::Constant(0.0);
        let GaugeCoefficients::Fundamental { u1, u2, u3, u4, .. } =
            fundamental_gauge_coefficients(&spec, &s, &zero, 0.0).unwrap()
        else {
            panic!("kind");
        };
        assert_eq!((u1, u2, u3, u4), (0.0, 0.0, 0.0, 0.0));

        // |l omega / 2| >= 1 is superluminal.
        let fast = GaugeProfile::Constant(2.5);
        assert!(fundamental_gauge_coefficients(&spec, &s, &fast, 0.0).is_err());
    }

    #[test]
    fn phenom_eom_frozen_values() {
        let spec = quadratic();
        let s = initial_state(&spec, 0.5, [1.0, 0.0, 0.0], -std::f64::consts::FRAC_PI_2).unwrap();
        let d = phenom_eom(&spec, &s).unwrap();
        assert_eq!(d.p, FourVector::zero());
        // xdot = p/sqrt(pp) + rho omega n with rho omega = 0.25, n = x-hat.
        assert!((d.x.t - 1.0).abs() < 1e-12);
        assert!((d.x.x - 0.25).abs() < 1e-12);
        assert!(d.x.y.abs() < 1e-15 && d.x.z.abs() < 1e-15);
        // Proper-time gauge: p.xdot = sqrt(pp).
        assert!((dot(s.p, d.x) - dot(s.p, s.p).sqrt()).abs() < 1e-13);
    }

    #[test]
    fn fundamental_eom_frozen_values() {
        let spec = fundamental();
        let s = initial_state(&spec, 0.0, [1.0, 0.0, 0.0], 0.0).unwrap();
        let profile = GaugeProfile::Constant(1.0);
        let d = fundamental_eom(&spec, &s, &profile, 0.0).unwrap();
        assert!((d.x.t - 1.0).abs() < 1e-15);
        assert!((d.x.x - 0.5).abs() < 1e-15);
        assert_eq!(d.p, FourVector::zero());
        // k stays on the null cone: k.kdot = 0 when kk = k.chi = 0.
        assert!(dot(s.k, d.k).abs() < 1e-15);

        // Zero profile freezes the rotation entirely.
        let zero = GaugeProfile::Constant(0.0);
        let d0 = fundamental_eom(&spec, &s, &zero, 0.0).unwrap();
        assert_eq!(d0.k, FourVector::zero());
        assert_eq!(d0.chi, FourVector::zero());
        assert_eq!(d0.x, s.p.scale(1.0 / spec.m()));
    }

    #[test]
    fn closed_form_initial_condition_and_periodicity() {
        let spec = quadratic();
        let s0 = initial_state(&spec, 0.5, [0.0, 0.0, 1.0], 0.7).unwrap();
        let at0 = phenom_closed_form(&spec, &s0, 0.0).unwrap();
        assert_eq!(at0, s0);

        let omega = 0.375;
        let period = 2.0 * std::f64::consts::PI / omega;
        let s1 = phenom_closed_form(&spec, &s0, period).unwrap();
        assert!((s1.k - s0.k).max_abs() < 1e-12);
        assert!((s1.chi - s0.chi).max_abs() < 1e-12);
    }

    #[test]
    fn closed_form_orbit_radius() {
        let spec = quadratic();
        let s0 = initial_state(&spec, 0.5, [1.0, 0.0, 0.0], 0.0).unwrap();
        // Spatial orbit: |x_perp - center| = rho = 2/3 at every time.
        let omega = 0.375;
        let mut max_r: f64 = 0.0;
        let mut min_r = f64::INFINITY;
        for i in 0..100 {
            let t = i as f64 * 2.0 * std::f64::consts::PI / omega / 100.0;
            let s = phenom_closed_form(&spec, &s0, t).unwrap();
            // Center of the circle is at -rho * m0 relative to x(0).
            let m0 = s0.chi.scale(1.0 / (-dot(s0.chi, s0.chi)).sqrt());
            let center = s0.x - m0.scale(2.0 / 3.0);
            let rel = s.x - center;
            let r = (rel.x * rel.x + rel.y * rel.y + rel.z * rel.z).sqrt();
            max_r = max_r.max(r);
            min_r = min_r.min(r);
        }
        assert!((max_r - 2.0 / 3.0).abs() < 1e-12);
        assert!((min_r - 2.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn closed_form_requires_cm_gauge() {
        let spec = quadratic();
        let mut s0 = initial_state(&spec, 0.5, [1.0, 0.0, 0.0], 0.0).unwrap();
        s0.k = s0.k.scale(2.0);
        s0.chi = s0.chi.scale(0.5);
        assert!(phenom_closed_form(&spec, &s0, 1.0).is_err());
    }

    #[test]
    fn rk4_matches_closed_form_and_momentum_is_exact() {
        let spec = quadratic();
        let s0 = initial_state(&spec, 0.5, [1.0, 0.0, 0.0], 0.0).unwrap();
        let period = 2.0 * std::f64::consts::PI / 0.375;
        let opts = IntegratorOptions { t_final: period, dt: period / 1000.0, ..Default::default() };
        let traj = integrate(&spec, &s0, None, opts).unwrap();

        let mut max_err: f64 = 0.0;
        for sample in &traj.samples {
            let exact = phenom_closed_form(&spec, &s0, sample.t).unwrap();
            max_err = max_err.max((sample.state.x - exact.x).max_abs());
            assert_eq!(sample.state.p, s0.p); // bitwise: pdot = 0 exactly
        }
        assert!(max_err < 1e-8, "max position error {max_err}");
        let drift = traj.drift_stats();
        assert!(drift.max_constraint_residual < 1e-9);
        assert_eq!(drift.casimir_mass_drift, 0.0);
        assert!(drift.casimir_spin_drift < 1e-9);
        assert_eq!(drift.momentum_drift, 0.0);
    }

    #[test]
    fn rk4_is_fourth_order() {
        let spec = quadratic();
        let s0 = initial_state(&spec, 0.5, [1.0, 0.0, 0.0], 0.0).unwrap();
        let period = 2.0 * std::f64::consts::PI / 0.375;
        let error_at = |n: usize| {
            let opts = IntegratorOptions {
                t_final: period,
                dt: period / n as f64,
                abort_threshold: 1.0,
                ..Default::default()
            };
            let traj = integrate(&spec, &s0, None, opts).unwrap();
            let last = traj.samples.last().unwrap();
            let exact = phenom_closed_form(&spec, &s0, last.t).unwrap();
            (last.state.x - exact.x).max_abs()
        };
        let ratio = error_at(50) / error_at(100);
        assert!((13.0..20.0).contains(&ratio), "order-4 error ratio was {ratio}");
    }

    #[test]
    fn fundamental_constant_profile_is_a_circle_of_radius_half_ell() {
        let spec = fundamental();
        let s0 = initial_state(&spec, 0.0, [1.0, 0.0, 0.0], 0.0).unwrap();
        let profile = GaugeProfile::Constant(1.0);
        let opts = IntegratorOptions { t_final: 10.0, dt: 1e-3, ..Default::default() };
        let traj = integrate(&spec, &s0, Some(&profile), opts).unwrap();

        let m0 = s0.chi.scale(1.0 / (-dot(s0.chi, s0.chi)).sqrt());
        let center = s0.x - m0.scale(0.5);
        for sample in traj.samples.iter().step_by(500) {
            // Subtract the inertial drift before measuring the circle.
            let rel = sample.state.x - s0.p.scale(sample.t / spec.m()) - center;
            let r = (rel.x * rel.x + rel.y * rel.y + rel.z * rel.z).sqrt();
            assert!((r - 0.5).abs() < 1e-8, "radius {r} at t = {}", sample.t);
        }
    }

    #[test]
    fn fundamental_rk4_matches_sinusoid_closed_form() {
        let spec = fundamental();
        let s0 = initial_state(&spec, 0.0, [0.0, 1.0, 0.0], 0.2).unwrap();
        let profile = GaugeProfile::Sinusoid { offset: 1.0, amplitude: 0.5, frequency: 1.0 };
        let opts = IntegratorOptions { t_final: 10.0, dt: 1e-3, ..Default::default() };
        let traj = integrate(&spec, &s0, Some(&profile), opts).unwrap();
        let mut max_err: f64 = 0.0;
        for sample in traj.samples.iter().step_by(100) {
            let exact = fundamental_closed_form(&spec, &s0, &profile, sample.t).unwrap();
            max_err = max_err.max((sample.state.x - exact.x).max_abs());
            max_err = max_err.max((sample.state.k - exact.k).max_abs());
            max_err = max_err.max((sample.state.chi - exact.chi).max_abs());
        }
        assert!(max_err < 1e-8, "max error vs closed form {max_err}");
    }

    #[test]
    fn fundamental_zero_profile_is_inertial() {
        let spec = fundamental();
        let s0 = initial_state(&spec, 0.0, [1.0, 0.0, 0.0], 0.0).unwrap();
        let profile = GaugeProfile::Constant(0.0);
        let s = fundamental_closed_form(&spec, &s0, &profile, 7.5).unwrap();
        assert_eq!(s.k, s0.k);
        assert_eq!(s.chi, s0.chi);
        assert!((s.x - s0.p.scale(7.5)).max_abs() < 1e-15);
    }

    #[test]
    fn stabilized_integration_keeps_residuals_at_round_off() {
        let spec = fundamental();
        let s0 = initial_state(&spec, 0.0, [1.0, 0.0, 0.0], 0.0).unwrap();
        let profile = GaugeProfile::Constant(1.2);
        let opts =
            IntegratorOptions { t_final: 5.0, dt: 1e-3, stabilize: true, ..Default::default() };
        let traj = integrate(&spec, &s0, Some(&profile), opts).unwrap();
        assert!(traj.drift_stats().max_constraint_residual < 1e-12);
    }

    #[test]
    fn hamiltonians_vanish_on_surface() {
        let spec = quadratic();
        let s = initial_state(&spec, 0.5, [1.0, 0.0, 0.0], 0.0).unwrap();
        let h = CmHamiltonian { spec: &spec };
        assert!(h.eval(&s).abs() < 1e-14);

        let fspec = fundamental();
        let fs = initial_state(&fspec, 0.0, [1.0, 0.0, 0.0], 0.0).unwrap();
        let hf = CmFundamentalHamiltonian { spec: &fspec, omega: 0.8 };
        assert!(hf.eval(&fs).abs() < 1e-14);
    }

    #[test]
    fn bracket_eom_matches_hand_coded_phenom() {
        let spec = quadratic();
        let base = initial_state(&spec, 0.5, [0.3, 0.8, 0.5], 1.1).unwrap();
        for s in [base, boost_state(&base, 1, 0.6), boost_state(&base, 3, -0.4)] {
            let h = CmHamiltonian { spec: &spec };
            let from_bracket = bracket_eom(&h, &s).unwrap();
            let hand = phenom_eom(&spec, &s).unwrap();
            for (a, b) in from_bracket.to_array().iter().zip(hand.to_array().iter()) {
                assert!((a - b).abs() < 1e-8, "bracket {a} vs hand {b}");
            }
        }
    }

    #[test]
    fn bracket_eom_matches_hand_coded_fundamental() {
        let spec = fundamental();
        let base = initial_state(&spec, 0.0, [0.1, -0.5, 0.9], 2.0).unwrap();
        let profile = GaugeProfile::Constant(0.9);
        for s in [base, boost_state(&base, 2, 0.5)] {
            let h = CmFundamentalHamiltonian { spec: &spec, omega: 0.9 };
            let from_bracket = bracket_eom(&h, &s).unwrap();
            let hand = fundamental_eom(&spec, &s, &profile, 0.0).unwrap();
            for (a, b) in from_bracket.to_array().iter().zip(hand.to_array().iter()) {
                assert!((a - b).abs() < 1e-8, "bracket {a} vs hand {b}");
            }
        }
    }

    #[test]
    fn profile_parse_and_phase() {
        let c = GaugeProfile::parse("const:1.5").unwrap();
        assert_eq!(c.omega(3.0), 1.5);
        assert_eq!(c.phase(2.0), 3.0);

        let s = GaugeProfile::parse("sin:1,0.5,2").unwrap();
        assert!((s.omega(0.25) - (1.0 + 0.5 * 0.5f64.sin())).abs() < 1e-15);
        // Exact antiderivative of 1 + 0.5 sin(2t).
        let t = 1.7;
        assert!((s.phase(t) - (t + 0.25 * (1.0 - (2.0 * t).cos()))).abs() < 1e-15);

        assert!(GaugeProfile::parse("wobble:1").is_err());
        assert!(GaugeProfile::parse("sin:1,2").is_err());
    }

    #[test]
    fn spline_profile_interpolates_and_integrates() {
        let profile =
            GaugeProfile::parse("spline:0:1,1:0.5,2:1.5,3:0.8,4:1.2").unwrap();
        // Node values are reproduced exactly.
        assert!((profile.omega(1.0) - 0.5).abs() < 1e-15);
        assert!((profile.omega(3.0) - 0.8).abs() < 1e-15);
        // Clamped outside the node range.
        assert_eq!(profile.omega(10.0), 1.2);

        // Simpson is exact on cubics, so segment-aligned panels reproduce
        // the closed-form phase to round-off.
        let simpson = |a: f64, b: f64| {
            (b - a) / 6.0
                * (profile.omega(a) + 4.0 * profile.omega(0.5 * (a + b)) + profile.omega(b))
        };
        let quad = |t: f64| {
            let mut knots: Vec<f64> = [0.0, 1.0, 2.0, 3.0, 4.0]
                .iter()
                .copied()
                .filter(|&k| k < t)
                .collect();
            knots.push(t);
            knots.windows(2).map(|w| simpson(w[0], w[1])).sum::<f64>()
        };
        for t in [0.5, 1.7, 3.9, 6.0] {
            let numeric = quad(t);
            assert!(
                (profile.phase(t) - numeric).abs() < 1e-12,
                "phase({t}) = {} vs {numeric}",
                profile.phase(t)
            );
        }
    }

    #[test]
    fn trajectory_gauge_conditions_hold() {
        let spec = quadratic();
        let s0 = initial_state(&spec, 0.5, [1.0, 0.0, 0.0], 0.0).unwrap();
        let opts = IntegratorOptions { t_final: 20.0, dt: 2e-3, ..Default::default() };
        let traj = integrate(&spec, &s0, None, opts).unwrap();
        let drift = traj.drift_stats();
        assert!(drift.gauge_proper_time < 1e-9);
        assert!(drift.gauge_pk < 1e-9);
        assert!(drift.gauge_pchi < 1e-9);
    }
}

#[cfg(test)]
mod conservation_tests {
    use super::*;
    use crate::minkowski::wedge_pairing;
    use crate::model::GFamily;

    #[test]
    fn spin_wedge_pairings_are_conserved() {
        // The wedge p ^ k ^ chi paired against fixed test vectors is a
        // surrogate for the conserved spin vector.
        let spec = RotatorSpec::new(1.0, 1.0, GFamily::Quadratic).unwrap();
        let s0 = initial_state(&spec, 0.5, [0.2, 1.0, -0.4], 0.9).unwrap();
        let period = 2.0 * std::f64::consts::PI / 0.375;
        let opts = IntegratorOptions {
            t_final: 10.0 * period,
            dt: period / 1000.0,
            ..Default::default()
        };
        let traj = integrate(&spec, &s0, None, opts).unwrap();

        let probes = [
            FourVector::new(0.3, 1.0, -0.7, 0.2),
            FourVector::new(1.0, 0.1, 0.4, -0.9),
        ];
        for probe in probes {
            let first = wedge_pairing(probe, s0.p, s0.k, s0.chi);
            for s in traj.samples.iter().step_by(500) {
                let value = wedge_pairing(probe, s.state.p, s.state.k, s.state.chi);
                assert!((value - first).abs() < 1e-9, "wedge drift {}", value - first);
            }
        }
    }

    #[test]
    fn custom_callable_family_matches_polynomial_route() {
        // The same quartic G supplied as coefficients and as callables must
        // agree through the Lagrangian, Casimirs, and rank analysis.
        let coeffs = vec![1.0, 0.0, 0.5, 0.0, 0.25];
        let poly = RotatorSpec::new(1.0, 1.0, GFamily::Polynomial(coeffs)).unwrap();
        let custom = RotatorSpec::new(
            1.0,
            1.0,
            GFamily::Custom {
                g: std::sync::Arc::new(|q| 1.0 + 0.5 * q * q + 0.25 * q.powi(4)),
                g1: std::sync::Arc::new(|q| q + q.powi(3)),
                g2: std::sync::Arc::new(|q| 1.0 + 3.0 * q * q),
            },
        )
        .unwrap();
        assert_eq!(custom.kind(), RotatorKind::Phenomenological);

        let xdot: FourVector<f64> = FourVector::new(1.0, 0.1, 0.0, 0.05);
        let k = FourVector::new(1.0, 1.0, 0.0, 0.0);
        let kdot = FourVector::new(0.0, 0.0, 0.4, 0.1);
        let la = poly.lagrangian(xdot, k, kdot).unwrap();
        let lb = custom.lagrangian(xdot, k, kdot).unwrap();
        assert!((la - lb).abs() < 1e-14);

        let ca = poly.casimirs_from_q(0.4).unwrap();
        let cb = custom.casimirs_from_q(0.4).unwrap();
        assert!((ca.c_m - cb.c_m).abs() < 1e-14 && (ca.c_j - cb.c_j).abs() < 1e-14);

        let ra = crate::analysis::hessian_rank(
            &poly, xdot, k, kdot, crate::analysis::HessianMode::Dual,
        )
        .unwrap();
        let rb = crate::analysis::hessian_rank(
            &custom, xdot, k, kdot, crate::analysis::HessianMode::Dual,
        )
        .unwrap();
        assert_eq!(ra.rank, 5);
        assert_eq!(rb.rank, 5);
    }
}
