//! Canonical Poisson brackets on the (x, p, k, chi) phase space, primary
//! constraints, first-class verification, and the regularity determinant.
//!
//! Bracket convention: elementary brackets are `{x^mu, p^nu} = eta^{mu nu}`
//! and `{k^mu, chi^nu} = eta^{mu nu}`, calibrated so the displayed
//! constraint-algebra identities hold (see the unit tests, which pin them).

use nalgebra::DMatrix;
use serde::Serialize;

use crate::error::{CoreError, Result};
use crate::minkowski::{dot, FourVector, METRIC_SIGNS};
use crate::model::{RotatorKind, RotatorSpec};
use crate::scalar::{Dual, Scalar};

/// Offsets of the four blocks in the flattened 16-component phase point.
pub const BLOCK_X: usize = 0;
pub const BLOCK_P: usize = 4;
pub const BLOCK_K: usize = 8;
pub const BLOCK_CHI: usize = 12;

/// A phase-space point (position, momentum, null direction, its conjugate).
///
/// Off-surface states are legal inputs everywhere; constraint residuals are
/// computed, never assumed.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PhaseState<T> {
    pub x: FourVector<T>,
    pub p: FourVector<T>,
    pub k: FourVector<T>,
    pub chi: FourVector<T>,
}

impl<T: Scalar> PhaseState<T> {
    pub fn new(x: FourVector<T>, p: FourVector<T>, k: FourVector<T>, chi: FourVector<T>) -> Self {
        PhaseState { x, p, k, chi }
    }

    pub fn to_array(self) -> [T; 16] {
        let mut out = [T::zero(); 16];
        out[..4].copy_from_slice(&self.x.to_array());
        out[4..8].copy_from_slice(&self.p.to_array());
        out[8..12].copy_from_slice(&self.k.to_array());
        out[12..16].copy_from_slice(&self.chi.to_array());
        out
    }

    pub fn from_array(a: [T; 16]) -> Self {
        PhaseState {
            x: FourVector::new(a[0], a[1], a[2], a[3]),
            p: FourVector::new(a[4], a[5], a[6], a[7]),
            k: FourVector::new(a[8], a[9], a[10], a[11]),
            chi: FourVector::new(a[12], a[13], a[14], a[15]),
        }
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.p.is_finite() && self.k.is_finite() && self.chi.is_finite()
    }
}

impl PhaseState<f64> {
    /// Lifts to dual numbers with component `seed` carrying the unit
    /// derivative.
    pub fn seeded(&self, seed: usize) -> PhaseState<Dual<f64>> {
        let a = self.to_array();
        let mut d = [Dual::constant(0.0); 16];
        for (i, &v) in a.iter().enumerate() {
            d[i] = if i == seed { Dual::variable(v) } else { Dual::constant(v) };
        }
        PhaseState::from_array(d)
    }
}

/// A scalar function on phase space, evaluable on any [`Scalar`] so that
/// gradients come from dual numbers rather than hand-coded derivatives.
pub trait PhaseFunction {
    fn eval<T: Scalar>(&self, s: &PhaseState<T>) -> T;
}

/// Gradient of `f` with respect to the 16 contravariant phase components.
pub fn gradient<F: PhaseFunction>(f: &F, s: &PhaseState<f64>) -> Result<[f64; 16]> {
    let mut grad = [0.0; 16];
    for (i, gi) in grad.iter_mut().enumerate() {
        let v = f.eval(&s.seeded(i));
        if !v.eps.is_finite() {
            return Err(CoreError::Numeric(format!(
                "gradient: non-finite derivative in phase component {i}"
            )));
        }
        *gi = v.eps;
    }
    Ok(grad)
}

/// Central-difference gradient (cross-check mode), step `1e-6 * scale`.
pub fn gradient_fd<F: PhaseFunction>(f: &F, s: &PhaseState<f64>) -> Result<[f64; 16]> {
    let a = s.to_array();
    let mut grad = [0.0; 16];
    for i in 0..16 {
        let h = 1e-6 * a[i].abs().max(1.0);
        let mut hi = a;
        let mut lo = a;
        hi[i] += h;
        lo[i] -= h;
        let d = (f.eval(&PhaseState::from_array(hi)) - f.eval(&PhaseState::from_array(lo)))
            / (2.0 * h);
        if !d.is_finite() {
            return Err(CoreError::Numeric(format!(
                "fd gradient: non-finite derivative in phase component {i}"
            )));
        }
        grad[i] = d;
    }
    Ok(grad)
}

fn contract_brackets(gf: &[f64; 16], gg: &[f64; 16]) -> f64 {
    let mut sum = 0.0;
    for mu in 0..4 {
        let e = METRIC_SIGNS[mu];
        sum += e
            * (gf[BLOCK_X + mu] * gg[BLOCK_P + mu] - gf[BLOCK_P + mu] * gg[BLOCK_X + mu]
                + gf[BLOCK_K + mu] * gg[BLOCK_CHI + mu]
                - gf[BLOCK_CHI + mu] * gg[BLOCK_K + mu]);
    }
    sum
}

/// Canonical Poisson bracket `{f, g}` at `s`, gradients by dual numbers.
pub fn poisson_bracket<F: PhaseFunction, G: PhaseFunction>(
    f: &F,
    g: &G,
    s: &PhaseState<f64>,
) -> Result<f64> {
    Ok(contract_brackets(&gradient(f, s)?, &gradient(g, s)?))
}

/// Bracket value on a generic scalar (gradients through `Dual<T>`), so a
/// bracket can itself be bracketed again.
pub fn bracket_value<T: Scalar, F: PhaseFunction, G: PhaseFunction>(
    f: &F,
    g: &G,
    s: &PhaseState<T>,
) -> T {
    fn grad_at<T: Scalar, F: PhaseFunction>(f: &F, s: &PhaseState<T>) -> [T; 16] {
        let a = s.to_array();
        let mut grad = [T::zero(); 16];
        for (i, gi) in grad.iter_mut().enumerate() {
            let mut seeded = a.map(Dual::constant);
            seeded[i] = Dual::variable(a[i]);
            *gi = f.eval(&PhaseState::from_array(seeded)).eps;
        }
        grad
    }
    let gf = grad_at(f, s);
    let gg = grad_at(g, s);
    let mut sum = T::zero();
    for mu in 0..4 {
        let e = T::scalar(METRIC_SIGNS[mu]);
        sum = sum
            + e * (gf[BLOCK_X + mu] * gg[BLOCK_P + mu] - gf[BLOCK_P + mu] * gg[BLOCK_X + mu]
                + gf[BLOCK_K + mu] * gg[BLOCK_CHI + mu]
                - gf[BLOCK_CHI + mu] * gg[BLOCK_K + mu]);
    }
    sum
}

/// The bracket `{f, g}` packaged as a phase function, for nested brackets
/// such as the Jacobi identity.
pub struct BracketFn<'a, F, G> {
    pub f: &'a F,
    pub g: &'a G,
}

impl<F: PhaseFunction, G: PhaseFunction> PhaseFunction for BracketFn<'_, F, G> {
    fn eval<T: Scalar>(&self, s: &PhaseState<T>) -> T {
        bracket_value(self.f, self.g, s)
    }
}

/// Poisson bracket with central-difference gradients (cross-check mode).
pub fn poisson_bracket_fd<F: PhaseFunction, G: PhaseFunction>(
    f: &F,
    g: &G,
    s: &PhaseState<f64>,
) -> Result<f64> {
    Ok(contract_brackets(&gradient_fd(f, s)?, &gradient_fd(g, s)?))
}

/// Dimensionless Casimir mass or spin as a phase function.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Casimir {
    Mass,
    Spin,
}

/// Evaluates a Casimir invariant generically.
pub fn casimir_value<T: Scalar>(spec: &RotatorSpec, which: Casimir, s: &PhaseState<T>) -> T {
    let m2 = T::scalar(spec.m() * spec.m());
    match which {
        Casimir::Mass => dot(s.p, s.p) / m2,
        Casimir::Spin => {
            let pk = dot(s.p, s.k);
            let ell2 = T::scalar(spec.ell() * spec.ell());
            -T::scalar(4.0) * dot(s.chi, s.chi) * pk * pk / (m2 * m2 * ell2)
        }
    }
}

/// Casimir invariant as a [`PhaseFunction`].
pub struct CasimirFn<'a> {
    pub spec: &'a RotatorSpec,
    pub which: Casimir,
}

impl PhaseFunction for CasimirFn<'_> {
    fn eval<T: Scalar>(&self, s: &PhaseState<T>) -> T {
        casimir_value(self.spec, self.which, s)
    }
}

/// Identity of a primary constraint.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum ConstraintId {
    /// kk = 0: the direction is null.
    NullCone,
    /// chi k = 0: projection invariance.
    Projection,
    /// C_M - f(C_J) = 0: the mass-spin relation (phenomenological only).
    MassSpin,
    /// C_J - 1 = 0 (fundamental only).
    SpinFixed,
    /// C_M - 1 = 0 (fundamental only).
    MassFixed,
}

impl ConstraintId {
    /// Constraint list for a rotator kind, in the conventional order.
    pub fn set_for(kind: RotatorKind) -> &'static [ConstraintId] {
        match kind {
            RotatorKind::Phenomenological => {
                &[ConstraintId::NullCone, ConstraintId::Projection, ConstraintId::MassSpin]
            }
            RotatorKind::Fundamental => &[
                ConstraintId::NullCone,
                ConstraintId::Projection,
                ConstraintId::SpinFixed,
                ConstraintId::MassFixed,
            ],
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            ConstraintId::NullCone => "kk",
            ConstraintId::Projection => "chi.k",
            ConstraintId::MassSpin => "C_M - f(C_J)",
            ConstraintId::SpinFixed => "C_J - 1",
            ConstraintId::MassFixed => "C_M - 1",
        }
    }
}

/// One primary constraint as a [`PhaseFunction`].
pub struct Constraint<'a> {
    pub spec: &'a RotatorSpec,
    pub id: ConstraintId,
}

impl PhaseFunction for Constraint<'_> {
    fn eval<T: Scalar>(&self, s: &PhaseState<T>) -> T {
        match self.id {
            ConstraintId::NullCone => dot(s.k, s.k),
            ConstraintId::Projection => dot(s.chi, s.k),
            ConstraintId::SpinFixed => casimir_value(self.spec, Casimir::Spin, s) - T::one(),
            ConstraintId::MassFixed => casimir_value(self.spec, Casimir::Mass, s) - T::one(),
            ConstraintId::MassSpin => {
                let curve = self
                    .spec
                    .mass_spin_curve()
                    .expect("MassSpin constraint requires a phenomenological rotator");
                let c_m = casimir_value(self.spec, Casimir::Mass, s);
                let c_j = casimir_value(self.spec, Casimir::Spin, s);
                c_m - c_j.lift_c2(&|cj| curve.eval_raw(cj))
            }
        }
    }
}

/// Total Hamiltonian: a linear combination of the primary constraints with
/// fixed multiplier values (the multipliers are functions of time only, so
/// they bracket as constants).
pub struct TotalHamiltonian<'a> {
    pub spec: &'a RotatorSpec,
    /// One multiplier per constraint of the rotator kind.
    pub multipliers: Vec<f64>,
}

impl PhaseFunction for TotalHamiltonian<'_> {
    fn eval<T: Scalar>(&self, s: &PhaseState<T>) -> T {
        let ids = ConstraintId::set_for(self.spec.kind());
        assert_eq!(ids.len(), self.multipliers.len(), "one multiplier per constraint");
        let mut sum = T::zero();
        for (&id, &u) in ids.iter().zip(&self.multipliers) {
            sum = sum + Constraint { spec: self.spec, id }.eval(s) * T::scalar(u);
        }
        sum
    }
}

/// A coordinate projection, e.g. `x^2` or `chi^0`, as a phase function.
pub struct Coordinate {
    /// Block offset: one of [`BLOCK_X`], [`BLOCK_P`], [`BLOCK_K`], [`BLOCK_CHI`].
    pub block: usize,
    pub mu: usize,
}

impl PhaseFunction for Coordinate {
    fn eval<T: Scalar>(&self, s: &PhaseState<T>) -> T {
        s.to_array()[self.block + self.mu]
    }
}

/// The six independent phase-variable scalars, in the order
/// `kk, pk, k.chi, pp, p.chi, chi.chi`.
pub fn six_scalars<T: Scalar>(s: &PhaseState<T>) -> [T; 6] {
    [
        dot(s.k, s.k),
        dot(s.p, s.k),
        dot(s.k, s.chi),
        dot(s.p, s.p),
        dot(s.p, s.chi),
        dot(s.chi, s.chi),
    ]
}

/// Polynomial in the six invariant scalars; the workhorse of the bracket
/// property tests.
#[derive(Clone, Debug)]
pub struct ScalarPoly {
    /// (coefficient, powers of the six scalars).
    pub terms: Vec<(f64, [u32; 6])>,
}

impl PhaseFunction for ScalarPoly {
    fn eval<T: Scalar>(&self, s: &PhaseState<T>) -> T {
        let vals = six_scalars(s);
        let mut sum = T::zero();
        for (coef, powers) in &self.terms {
            let mut term = T::scalar(*coef);
            for (v, &pw) in vals.iter().zip(powers) {
                if pw > 0 {
                    term = term * v.powi(pw as i32);
                }
            }
            sum = sum + term;
        }
        sum
    }
}

/// Evaluated residuals of the primary constraint set at a state.
#[derive(Clone, Debug, Serialize)]
pub struct ConstraintSet {
    pub kind: RotatorKind,
    pub ids: Vec<ConstraintId>,
    pub residuals: Vec<f64>,
    /// Dimensional scale of each constraint at this state, for tolerances.
    pub scales: Vec<f64>,
}

impl ConstraintSet {
    /// Largest residual relative to its scale.
    pub fn max_relative(&self) -> f64 {
        self.residuals
            .iter()
            .zip(&self.scales)
            .map(|(r, s)| r.abs() / s.max(1e-300))
            .fold(0.0, f64::max)
    }

    /// On-surface test at the report tolerance `1e-10 * scale`.
    pub fn on_surface(&self) -> bool {
        self.max_relative() < 1e-10
    }
}

/// Evaluates every primary constraint of the rotator kind at `s`.
pub fn eval_constraints(spec: &RotatorSpec, s: &PhaseState<f64>) -> Result<ConstraintSet> {
    if dot(s.p, s.k) == 0.0 {
        return Err(CoreError::Degenerate("pk: constraint evaluation needs pk != 0".into()));
    }
    let ids = ConstraintId::set_for(spec.kind());
    let mut residuals = Vec::with_capacity(ids.len());
    let mut scales = Vec::with_capacity(ids.len());
    let k_mag = s.k.max_abs().max(1e-300);
    let chi_mag = s.chi.max_abs().max(1e-300);
    for &id in ids {
        let value = Constraint { spec, id }.eval(s);
        if !value.is_finite() {
            return Err(CoreError::Numeric(format!(
                "constraint {} is non-finite at this state",
                id.label()
            )));
        }
        residuals.push(value);
        scales.push(match id {
            ConstraintId::NullCone => k_mag * k_mag,
            ConstraintId::Projection => k_mag * chi_mag,
            // Casimir combinations are dimensionless and O(1).
            _ => 1.0,
        });
    }
    Ok(ConstraintSet { kind: spec.kind(), ids: ids.to_vec(), residuals, scales })
}

/// Pairwise bracket matrix of the primary constraints with a PASS verdict.
#[derive(Clone, Debug, Serialize)]
pub struct FirstClassReport {
    pub kind: RotatorKind,
    pub labels: Vec<String>,
    /// brackets[i][j] = {phi_i, phi_j}.
    pub brackets: Vec<Vec<f64>>,
    /// Scale used for each entry's tolerance.
    pub scales: Vec<Vec<f64>>,
    pub constraint_residuals: Vec<f64>,
    pub on_surface: bool,
    pub pass: bool,
    pub failures: Vec<String>,
}

/// Bracket tolerance (relative to gradient scales) for first-class PASS.
pub const FIRST_CLASS_TOL: f64 = 1e-7;

/// Computes all pairwise constraint brackets and checks they vanish
/// on-surface.
pub fn first_class_report(spec: &RotatorSpec, s: &PhaseState<f64>) -> Result<FirstClassReport> {
    let set = eval_constraints(spec, s)?;
    let ids = ConstraintId::set_for(spec.kind());
    let n = ids.len();

    let grads: Vec<[f64; 16]> = ids
        .iter()
        .map(|&id| gradient(&Constraint { spec, id }, s))
        .collect::<Result<_>>()?;
    let norms: Vec<f64> =
        grads.iter().map(|g| g.iter().map(|v| v * v).sum::<f64>().sqrt()).collect();

    let mut brackets = vec![vec![0.0; n]; n];
    let mut scales = vec![vec![0.0; n]; n];
    let mut failures = Vec::new();
    let on_surface = set.on_surface();
    for i in 0..n {
        for j in 0..n {
            let b = contract_brackets(&grads[i], &grads[j]);
            let scale = (norms[i] * norms[j]).max(1.0);
            brackets[i][j] = b;
            scales[i][j] = scale;
            if on_surface && i < j && b.abs() >= FIRST_CLASS_TOL * scale {
                failures.push(format!(
                    "{{{}, {}}} = {b:.3e} does not vanish on-surface",
                    ids[i].label(),
                    ids[j].label()
                ));
            }
        }
    }
    if !on_surface {
        let (worst_idx, worst) = set
            .residuals
            .iter()
            .zip(&set.scales)
            .map(|(r, s)| r.abs() / s.max(1e-300))
            .enumerate()
            .max_by(|a, b| a.1.partial_cmp(&b.1).unwrap())
            .unwrap();
        failures.push(format!(
            "state is off-surface: constraint {} = {:.3e} (relative {:.3e}); bracket matrix \
             reported without a first-class verdict",
            ids[worst_idx].label(),
            set.residuals[worst_idx],
            worst
        ));
    }
    Ok(FirstClassReport {
        kind: spec.kind(),
        labels: ids.iter().map(|id| id.label().to_string()).collect(),
        brackets,
        scales,
        constraint_residuals: set.residuals,
        on_surface,
        pass: on_surface && failures.is_empty(),
        failures,
    })
}

/// Determinant of the constraint-gradient Gram matrix
/// `J_mn = eta^{mu nu} (a dphi_m/dp dphi_n/dp + b ... dk + c ... dchi)`.
///
/// A nonzero value certifies the constraints are regular and independent.
pub fn regularity_determinant(
    spec: &RotatorSpec,
    s: &PhaseState<f64>,
    alpha: f64,
    beta: f64,
    gamma: f64,
) -> Result<f64> {
    let ids = ConstraintId::set_for(spec.kind());
    let n = ids.len();
    let grads: Vec<[f64; 16]> = ids
        .iter()
        .map(|&id| gradient(&Constraint { spec, id }, s))
        .collect::<Result<_>>()?;

    let mut j = DMatrix::zeros(n, n);
    for a in 0..n {
        for b in 0..n {
            let mut sum = 0.0;
            for mu in 0..4 {
                let e = METRIC_SIGNS[mu];
                sum += e
                    * (alpha * grads[a][BLOCK_P + mu] * grads[b][BLOCK_P + mu]
                        + beta * grads[a][BLOCK_K + mu] * grads[b][BLOCK_K + mu]
                        + gamma * grads[a][BLOCK_CHI + mu] * grads[b][BLOCK_CHI + mu]);
            }
            j[(a, b)] = sum;
        }
    }
    Ok(j.determinant())
}

/// Closed-form on-surface value of the regularity determinant, used as the
/// oracle for [`regularity_determinant`].
pub fn expected_regularity_determinant(
    spec: &RotatorSpec,
    s: &PhaseState<f64>,
    alpha: f64,
    beta: f64,
    gamma: f64,
) -> Result<f64> {
    let _ = gamma;
    match spec.kind() {
        RotatorKind::Phenomenological => {
            let chichi = dot(s.chi, s.chi);
            let c_j = casimir_value(spec, Casimir::Spin, s);
            let (_, f1, _) = spec.mass_spin_curve()?.eval(c_j)?;
            let f_cj = -f1;
            Ok(-16.0 * beta.powi(3) * chichi * c_j * c_j * f_cj * f_cj)
        }
        RotatorKind::Fundamental => {
            let pk = dot(s.p, s.k);
            let m = spec.m();
            let ell = spec.ell();
            Ok(16.0 * m * m * ell * ell / (pk * pk) * alpha * beta.powi(3))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::GFamily;

    fn v(t: f64, x: f64, y: f64, z: f64) -> FourVector<f64> {
        FourVector::new(t, x, y, z)
    }

    fn quadratic() -> RotatorSpec {
        RotatorSpec::new(1.0, 1.0, GFamily::Quadratic).unwrap()
    }

    fn fundamental() -> RotatorSpec {
        RotatorSpec::new(1.0, 1.0, GFamily::FundamentalPlus).unwrap()
    }

    /// On-surface fundamental base state (all four residuals exactly zero).
    fn fundamental_base() -> PhaseState<f64> {
        PhaseState::new(
            FourVector::zero(),
            v(1.0, 0.0, 0.0, 0.0),
            v(1.0, 1.0, 0.0, 0.0),
            v(0.0, 0.0, 0.5, 0.0),
        )
    }

    /// On-surface quadratic state at Q = 0.5: C_M = 0.75, C_J = 1.
    fn quadratic_base() -> PhaseState<f64> {
        let c_m: f64 = 0.75;
        PhaseState::new(
            FourVector::zero(),
            v(c_m.sqrt(), 0.0, 0.0, 0.0),
            v(1.0, 1.0, 0.0, 0.0),
            v(0.0, 0.0, (1.0f64 / 3.0).sqrt(), 0.0),
        )
    }

    /// Generic off-surface state with every scalar nonzero.
    fn off_surface() -> PhaseState<f64> {
        PhaseState::new(
            v(0.3, -0.2, 0.9, 0.1),
            v(1.2, 0.1, -0.3, 0.2),
            v(1.1, 0.8, 0.3, -0.2),
            v(0.2, -0.1, 0.6, 0.3),
        )
    }

    #[test]
    fn bracket_of_function_with_itself_vanishes() {
        let spec = quadratic();
        let s = off_surface();
        for id in [ConstraintId::NullCone, ConstraintId::Projection] {
            let f = Constraint { spec: &spec, id };
            assert_eq!(poisson_bracket(&f, &f, &s).unwrap(), 0.0);
        }
    }

    #[test]
    fn bracket_identity_phi1_phi2() {
        // {kk, chi k} = 2 kk, on and off surface.
        let spec = quadratic();
        for s in [quadratic_base(), off_surface()] {
            let phi1 = Constraint { spec: &spec, id: ConstraintId::NullCone };
            let phi2 = Constraint { spec: &spec, id: ConstraintId::Projection };
            let b = poisson_bracket(&phi1, &phi2, &s).unwrap();
            assert!((b - 2.0 * dot(s.k, s.k)).abs() < 1e-9, "b = {b}");
        }
    }

    #[test]
    fn bracket_identity_phi2_phi3_vanishes_identically() {
        let spec = quadratic();
        for s in [quadratic_base(), mildly_off_surface()] {
            let phi2 = Constraint { spec: &spec, id: ConstraintId::Projection };
            let phi3 = Constraint { spec: &spec, id: ConstraintId::MassSpin };
            let b = poisson_bracket(&phi2, &phi3, &s).unwrap();
            assert!(b.abs() < 1e-12, "b = {b}");
        }
    }

    /// Off-surface but with C_J inside the invertible range so f is defined.
    fn mildly_off_surface() -> PhaseState<f64> {
        let mut s = quadratic_base();
        s.k = v(1.05, 1.0, 0.02, 0.0); // kk != 0
        s.chi = v(0.01, 0.0, 0.58, 0.01); // k.chi != 0
        s
    }

    #[test]
    fn bracket_identity_phi3_phi1() {
        // {phi3, phi1} = (16 (pk)^2 / m^4 l^2) F_{G,C_J} phi2.
        let spec = quadratic();
        for s in [quadratic_base(), mildly_off_surface()] {
            let phi1 = Constraint { spec: &spec, id: ConstraintId::NullCone };
            let phi3 = Constraint { spec: &spec, id: ConstraintId::MassSpin };
            let b = poisson_bracket(&phi3, &phi1, &s).unwrap();

            let pk = dot(s.p, s.k);
            let c_j = casimir_value(&spec, Casimir::Spin, &s);
            let (_, f1, _) = spec.mass_spin_curve().unwrap().eval(c_j).unwrap();
            let expected = 16.0 * pk * pk * (-f1) * dot(s.chi, s.k);
            assert!(
                (b - expected).abs() < 1e-8 * expected.abs().max(1.0),
                "b = {b}, expected {expected}"
            );
        }
    }

    #[test]
    fn fundamental_bracket_matrix_vanishes_on_surface() {
        let spec = fundamental();
        let report = first_class_report(&spec, &fundamental_base()).unwrap();
        assert!(report.pass, "failures: {:?}", report.failures);
        for row in &report.brackets {
            for &b in row {
                assert!(b.abs() < 1e-8);
            }
        }
    }

    #[test]
    fn phenomenological_first_class_on_surface() {
        let spec = quadratic();
        let report = first_class_report(&spec, &quadratic_base()).unwrap();
        assert!(report.pass, "failures: {:?}", report.failures);
    }

    #[test]
    fn off_surface_report_carries_identity_value() {
        // State with phi1 = kk = 1: {phi1, phi2} must report 2.0.
        let spec = fundamental();
        let mut s = fundamental_base();
        s.k = v(2.0f64.sqrt(), 1.0, 0.0, 0.0);
        let report = first_class_report(&spec, &s).unwrap();
        assert!(!report.pass);
        assert!((report.brackets[0][1] - 2.0).abs() < 1e-9);
    }

    #[test]
    fn eval_constraints_examples() {
        let spec = fundamental();
        let set = eval_constraints(&spec, &fundamental_base()).unwrap();
        assert!(set.on_surface());
        for r in &set.residuals {
            assert!(r.abs() < 1e-14);
        }

        // chi = (0,0,1,0): chi chi = -1, C_J = 4, residual phi3 = 3.
        let mut s = fundamental_base();
        s.chi = v(0.0, 0.0, 1.0, 0.0);
        let set = eval_constraints(&spec, &s).unwrap();
        assert!((set.residuals[2] - 3.0).abs() < 1e-14);

        // Null cone is scale invariant.
        let mut s = fundamental_base();
        s.k = s.k.scale(2.0);
        let set = eval_constraints(&spec, &s).unwrap();
        assert_eq!(set.residuals[0], 0.0);
    }

    #[test]
    fn eval_constraints_rejects_pk_zero() {
        let spec = fundamental();
        let mut s = fundamental_base();
        s.p = FourVector::zero();
        assert!(eval_constraints(&spec, &s).is_err());
    }

    #[test]
    fn regularity_determinant_phenomenological() {
        let spec = quadratic();
        let s = quadratic_base();
        let det = regularity_determinant(&spec, &s, 1.0, 1.0, 1.0).unwrap();
        let expected = expected_regularity_determinant(&spec, &s, 1.0, 1.0, 1.0).unwrap();
        // Hand value at this state: -16 * (-1/3) * 1 * (1/16) = 1/3.
        assert!((expected - 1.0 / 3.0).abs() < 1e-12);
        assert!((det - expected).abs() < 1e-7 * expected.abs());
    }

    #[test]
    fn regularity_determinant_fundamental() {
        let spec = fundamental();
        let s = fundamental_base();
        let det = regularity_determinant(&spec, &s, 1.0, 1.0, 1.0).unwrap();
        assert!((det - 16.0).abs() < 1e-7 * 16.0);
        let expected = expected_regularity_determinant(&spec, &s, 1.0, 1.0, 1.0).unwrap();
        assert!((det - expected).abs() < 1e-7 * 16.0);
    }

    #[test]
    fn regularity_determinant_zero_spin_degenerates() {
        let spec = fundamental();
        let mut s = fundamental_base();
        s.chi = FourVector::zero();
        let det = regularity_determinant(&spec, &s, 1.0, 1.0, 1.0).unwrap();
        assert!(det.abs() < 1e-12);
    }

    #[test]
    fn total_hamiltonian_brackets_with_casimirs() {
        // {C_M, H_T} = 0 identically; {C_J, H_T} ~ 0 on-surface.
        let spec = quadratic();
        let h = TotalHamiltonian { spec: &spec, multipliers: vec![0.7, -0.3, 1.3] };
        let cm = CasimirFn { spec: &spec, which: Casimir::Mass };
        let cj = CasimirFn { spec: &spec, which: Casimir::Spin };

        for s in [quadratic_base(), mildly_off_surface()] {
            let b = poisson_bracket(&cm, &h, &s).unwrap();
            assert!(b.abs() < 1e-10, "{{C_M, H_T}} = {b}");
        }
        let b = poisson_bracket(&cj, &h, &quadratic_base()).unwrap();
        assert!(b.abs() < 1e-9, "{{C_J, H_T}} on-surface = {b}");
    }

    #[test]
    fn dual_and_fd_brackets_agree() {
        let spec = quadratic();
        let s = mildly_off_surface();
        let phi3 = Constraint { spec: &spec, id: ConstraintId::MassSpin };
        let phi1 = Constraint { spec: &spec, id: ConstraintId::NullCone };
        let b_dual = poisson_bracket(&phi3, &phi1, &s).unwrap();
        let b_fd = poisson_bracket_fd(&phi3, &phi1, &s).unwrap();
        assert!((b_dual - b_fd).abs() < 1e-6 * b_dual.abs().max(1.0));
    }

    #[test]
    fn coordinate_brackets_reproduce_elementary_convention() {
        // {x^mu, p^nu} = eta^{mu nu}.
        let s = off_surface();
        for (mu, &sign) in METRIC_SIGNS.iter().enumerate() {
            for nu in 0..4 {
                let f = Coordinate { block: BLOCK_X, mu };
                let g = Coordinate { block: BLOCK_P, mu: nu };
                let b = poisson_bracket(&f, &g, &s).unwrap();
                let expected = if mu == nu { sign } else { 0.0 };
                assert_eq!(b, expected);
            }
        }
    }
}
