//! The rotator family: G(Q) evaluation, Lagrangian, momenta, Casimir
//! invariants, and the numeric mass-spin relation `C_M = f(C_J)`.

use std::fmt;
use std::sync::Arc;

use serde::Serialize;

use crate::error::{CoreError, Result};
use crate::minkowski::{dot, FourVector};
use crate::scalar::Scalar;

/// Callable triple for user-supplied families.
pub type CurveFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// The shape function G(Q) enumerating the rotator family.
#[derive(Clone)]
pub enum GFamily {
    /// G(Q) = 1 + Q^2.
    Quadratic,
    /// G(Q) = 1 + Q.
    FundamentalPlus,
    /// G(Q) = 1 - Q.
    FundamentalMinus,
    /// G(Q) = sum c_i Q^i with exact derivative coefficients.
    Polynomial(Vec<f64>),
    /// User-supplied (G, G', G'') callables.
    Custom { g: CurveFn, g1: CurveFn, g2: CurveFn },
}

impl fmt::Debug for GFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label())
    }
}

impl GFamily {
    /// Evaluates (G, G', G'') at a real argument.
    pub fn triple(&self, q: f64) -> (f64, f64, f64) {
        match self {
            GFamily::Quadratic => (1.0 + q * q, 2.0 * q, 2.0),
            GFamily::FundamentalPlus => (1.0 + q, 1.0, 0.0),
            GFamily::FundamentalMinus => (1.0 - q, -1.0, 0.0),
            GFamily::Polynomial(c) => {
                let horner = |coeffs: &[f64], x: f64| {
                    coeffs.iter().rev().fold(0.0, |acc, &ci| acc * x + ci)
                };
                let d1: Vec<f64> =
                    c.iter().enumerate().skip(1).map(|(i, &ci)| i as f64 * ci).collect();
                let d2: Vec<f64> =
                    d1.iter().enumerate().skip(1).map(|(i, &ci)| i as f64 * ci).collect();
                (horner(c, q), horner(&d1, q), horner(&d2, q))
            }
            GFamily::Custom { g, g1, g2 } => (g(q), g1(q), g2(q)),
        }
    }

    /// Evaluates G on a generic scalar (dual-friendly).
    pub fn g_of<T: Scalar>(&self, q: T) -> T {
        q.lift_c2(&|x| self.triple(x))
    }

    /// Human-readable family name for manifests and reports.
    pub fn label(&self) -> String {
        match self {
            GFamily::Quadratic => "quadratic".into(),
            GFamily::FundamentalPlus => "fundamental+".into(),
            GFamily::FundamentalMinus => "fundamental-".into(),
            GFamily::Polynomial(c) => {
                let coeffs: Vec<String> = c.iter().map(|x| x.to_string()).collect();
                format!("poly:{}", coeffs.join(","))
            }
            GFamily::Custom { .. } => "custom".into(),
        }
    }

    /// Parses "quadratic", "fundamental+", "fundamental-", or "poly:c0,c1,...".
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "quadratic" => Ok(GFamily::Quadratic),
            "fundamental+" => Ok(GFamily::FundamentalPlus),
            "fundamental-" => Ok(GFamily::FundamentalMinus),
            _ => {
                if let Some(list) = s.strip_prefix("poly:") {
                    let coeffs: std::result::Result<Vec<f64>, _> =
                        list.split(',').map(|tok| tok.trim().parse::<f64>()).collect();
                    match coeffs {
                        Ok(c) if !c.is_empty() => Ok(GFamily::Polynomial(c)),
                        _ => Err(CoreError::Domain(format!(
                            "family: cannot parse polynomial coefficients from '{list}'"
                        ))),
                    }
                } else {
                    Err(CoreError::Domain(format!(
                        "family: unknown family '{s}' (expected quadratic, fundamental+, \
                         fundamental-, or poly:c0,c1,...)"
                    )))
                }
            }
        }
    }
}

/// Whether the family has a mass-spin relation or fixed Casimirs.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum RotatorKind {
    /// G'' not identically zero: Casimirs are related by `C_M = f(C_J)`.
    Phenomenological,
    /// G linear: both Casimirs are fixed parameters (normalized to 1).
    Fundamental,
}

/// Casimir invariants of the Poincare group in units of m and l.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct CasimirPair {
    pub c_m: f64,
    pub c_j: f64,
}

/// A rotator: mass m, length l, and shape function G, classified at
/// construction. Immutable afterwards; safe to share across tasks.
#[derive(Clone, Debug)]
pub struct RotatorSpec {
    m: f64,
    ell: f64,
    family: GFamily,
    kind: RotatorKind,
    q_range: (f64, f64),
    curve: Option<MassSpinCurve>,
    warnings: Vec<String>,
}

/// Default Q-grid bounds for the mass-spin tabulation.
pub const DEFAULT_Q_RANGE: (f64, f64) = (1e-3, 10.0);
/// Default number of log-spaced Q-grid nodes.
pub const DEFAULT_Q_NODES: usize = 512;

/// Relative threshold below which G'' is treated as identically zero.
const FUNDAMENTAL_G2_TOL: f64 = 1e-10;

impl RotatorSpec {
    /// Builds and validates a rotator with the default Q range.
    pub fn new(m: f64, ell: f64, family: GFamily) -> Result<Self> {
        Self::with_q_range(m, ell, family, DEFAULT_Q_RANGE, DEFAULT_Q_NODES)
    }

    /// Builds with an explicit Q range and grid resolution.
    pub fn with_q_range(
        m: f64,
        ell: f64,
        family: GFamily,
        q_range: (f64, f64),
        nodes: usize,
    ) -> Result<Self> {
        if !(m > 0.0 && m.is_finite()) {
            return Err(CoreError::Domain(format!("m: mass must be positive, got {m}")));
        }
        if !(ell > 0.0 && ell.is_finite()) {
            return Err(CoreError::Domain(format!("ell: length must be positive, got {ell}")));
        }
        if !(q_range.0 > 0.0 && q_range.1 > q_range.0) {
            return Err(CoreError::Domain(format!(
                "q_range: need 0 < min < max, got ({}, {})",
                q_range.0, q_range.1
            )));
        }

        let mut warnings = Vec::new();
        let kind = classify(&family, q_range, &mut warnings)?;

        let curve = match kind {
            RotatorKind::Phenomenological => {
                Some(MassSpinCurve::build(&family, q_range, nodes, &mut warnings)?)
            }
            RotatorKind::Fundamental => {
                let (g0, g1, _) = family.triple(0.0);
                if (g0 - 1.0).abs() > 1e-12 || (g1.abs() - 1.0).abs() > 1e-12 {
                    return Err(CoreError::Domain(format!(
                        "family: fundamental rotators must be normalized to G(0) = 1 and \
                         |G'(0)| = 1 (absorb scales into m and ell); got G(0) = {g0}, \
                         G'(0) = {g1}"
                    )));
                }
                None
            }
        };

        Ok(RotatorSpec { m, ell, family, kind, q_range, curve, warnings })
    }

    pub fn m(&self) -> f64 {
        self.m
    }

    pub fn ell(&self) -> f64 {
        self.ell
    }

    pub fn family(&self) -> &GFamily {
        &self.family
    }

    pub fn kind(&self) -> RotatorKind {
        self.kind
    }

    pub fn is_fundamental(&self) -> bool {
        self.kind == RotatorKind::Fundamental
    }

    pub fn q_range(&self) -> (f64, f64) {
        self.q_range
    }

    /// Construction warnings (near-fundamental classification, grid trims).
    pub fn warnings(&self) -> &[String] {
        &self.warnings
    }

    /// Evaluates (G, G', G'') with domain validation.
    // Negated comparisons keep NaN inputs on the error path.
    #[allow(clippy::neg_cmp_op_on_partial_ord)]
    pub fn eval_family(&self, q: f64) -> Result<(f64, f64, f64)> {
        if !(q >= 0.0 && q.is_finite()) {
            return Err(CoreError::Domain(format!("Q: need a finite Q >= 0, got {q}")));
        }
        let (g, g1, g2) = self.family.triple(q);
        if !(g > 0.0) {
            return Err(CoreError::Domain(format!("G(Q): positivity violated at Q = {q}: G = {g}")));
        }
        if !(g > q * g1) {
            return Err(CoreError::Domain(format!(
                "G(Q) > Q G'(Q): mass positivity violated at Q = {q} (G = {g}, Q G' = {})",
                q * g1
            )));
        }
        Ok((g, g1, g2))
    }

    /// The Lagrangian integrand `-m sqrt(xdot xdot) sqrt(G(Q))` with
    /// `Q = sqrt(-l^2 kdot kdot / (k xdot)^2)`.
    pub fn lagrangian<T: Scalar>(
        &self,
        xdot: FourVector<T>,
        k: FourVector<T>,
        kdot: FourVector<T>,
    ) -> Result<T> {
        let xx = dot(xdot, xdot);
        let kx = dot(k, xdot);
        let kk = dot(k, k);
        let kdkd = dot(kdot, kdot);
        let scale = (k.to_array().iter().fold(0.0f64, |a, c| a.max(c.real_part().abs()))).max(1.0);
        if xx.real_part() <= 0.0 {
            return Err(CoreError::Domain(format!(
                "xdot: four-velocity must be timelike (xdot xdot > 0), got {}",
                xx.real_part()
            )));
        }
        if kk.real_part().abs() > 1e-10 * scale * scale {
            return Err(CoreError::Domain(format!(
                "k: direction must be null (kk = 0), got kk = {}",
                kk.real_part()
            )));
        }
        if kx.real_part() == 0.0 {
            return Err(CoreError::Domain("k xdot: contraction must be nonzero".into()));
        }
        if kdkd.real_part() > 0.0 {
            return Err(CoreError::Domain(format!(
                "kdot: must be spacelike or zero (kdot kdot <= 0), got {}",
                kdkd.real_part()
            )));
        }
        let ell2 = T::scalar(self.ell * self.ell);
        let q = (-(ell2 * kdkd) / (kx * kx)).sqrt();
        self.eval_family(q.real_part())?;
        let g = self.family.g_of(q);
        Ok(-T::scalar(self.m) * xx.sqrt() * g.sqrt())
    }

    /// Canonical momenta (p, chi) from Lagrangian velocities.
    ///
    /// Requires strictly spacelike kdot; the chi formula divides by
    /// `kdot kdot`.
    pub fn momenta<T: Scalar>(
        &self,
        xdot: FourVector<T>,
        k: FourVector<T>,
        kdot: FourVector<T>,
    ) -> Result<(FourVector<T>, FourVector<T>)> {
        let kdkd = dot(kdot, kdot);
        if kdkd.real_part() >= 0.0 {
            return Err(CoreError::Degenerate(format!(
                "kdot: momenta need strictly spacelike kdot (kdot kdot < 0), got {}",
                kdkd.real_part()
            )));
        }
        // Validate the remaining preconditions through the Lagrangian path.
        self.lagrangian(xdot, k, kdot)?;

        let xx = dot(xdot, xdot);
        let kx = dot(k, xdot);
        let ell2 = T::scalar(self.ell * self.ell);
        let q = (-(ell2 * kdkd) / (kx * kx)).sqrt();
        let g = self.family.g_of(q);
        let g_sqrt = g.sqrt();
        let xx_sqrt = xx.sqrt();
        let m = T::scalar(self.m);

        // Q G'(Q), with G' threaded through the dual levels.
        let qg1 = q * q.lift_c2(&|x| {
            let (_, g1, g2) = self.family.triple(x);
            (g1, g2, 0.0)
        });

        let half = T::scalar(0.5);
        let p = xdot.scale(m * g_sqrt / xx_sqrt)
            - k.scale(m * half * qg1 / g_sqrt * xx_sqrt / kx);
        let chi = kdot.scale(m * half * qg1 / g_sqrt * xx_sqrt / kdkd);
        Ok((p, chi))
    }

    /// Casimir invariants from phase-space momenta:
    /// `C_M = pp/m^2`, `C_J = chi chi (pk)^2 / (-m^4 l^2 / 4)`.
    pub fn casimirs_from_momenta(
        &self,
        p: FourVector<f64>,
        k: FourVector<f64>,
        chi: FourVector<f64>,
    ) -> Result<CasimirPair> {
        let pk = dot(p, k);
        if pk == 0.0 {
            return Err(CoreError::Degenerate("pk: Casimir spin needs pk != 0".into()));
        }
        let m2 = self.m * self.m;
        let c_m = dot(p, p) / m2;
        let c_j = -4.0 * dot(chi, chi) * pk * pk / (m2 * m2 * self.ell * self.ell);
        Ok(CasimirPair { c_m, c_j })
    }

    /// Casimir invariants along the family parametrization:
    /// `C_M = G - Q G'`, `C_J = G'^2`.
    pub fn casimirs_from_q(&self, q: f64) -> Result<CasimirPair> {
        if !(q >= 0.0 && q.is_finite()) {
            return Err(CoreError::Domain(format!("Q: need a finite Q >= 0, got {q}")));
        }
        let (g, g1, _) = self.family.triple(q);
        let c_m = g - q * g1;
        if c_m <= 0.0 {
            return Err(CoreError::Domain(format!(
                "C_M: G - Q G' must be positive, got {c_m} at Q = {q}"
            )));
        }
        Ok(CasimirPair { c_m, c_j: g1 * g1 })
    }

    /// The mass-spin relation `C_J -> (f, f', f'')`.
    ///
    /// Classification error for fundamental rotators, whose Casimirs are
    /// unrelated fixed parameters.
    pub fn mass_spin_curve(&self) -> Result<&MassSpinCurve> {
        self.curve.as_ref().ok_or_else(|| {
            CoreError::Classification(
                "mass-spin relation does not exist for fundamental rotators \
                 (Casimirs are fixed parameters)"
                    .into(),
            )
        })
    }
}

fn classify(
    family: &GFamily,
    q_range: (f64, f64),
    warnings: &mut Vec<String>,
) -> Result<RotatorKind> {
    // Exact shortcuts first.
    match family {
        GFamily::Quadratic => return Ok(RotatorKind::Phenomenological),
        GFamily::FundamentalPlus | GFamily::FundamentalMinus => {
            return Ok(RotatorKind::Fundamental)
        }
        GFamily::Polynomial(c) => {
            if c.iter().skip(2).all(|&ci| ci == 0.0) {
                let g1 = c.get(1).copied().unwrap_or(0.0);
                if g1 == 0.0 {
                    return Err(CoreError::Domain(
                        "family: G'(Q) must not vanish identically (structureless point \
                         particle excluded)"
                            .into(),
                    ));
                }
                return Ok(RotatorKind::Fundamental);
            }
        }
        GFamily::Custom { .. } => {}
    }

    // Numeric probe over the range for polynomial tails and custom curves.
    let n = 64;
    let (lo, hi) = q_range;
    let ratio = (hi / lo).powf(1.0 / (n - 1) as f64);
    let mut max_g1 = 0.0f64;
    let mut near_fundamental = true;
    let mut q = lo;
    for _ in 0..n {
        let (_, g1, g2) = family.triple(q);
        max_g1 = max_g1.max(g1.abs());
        if g2.abs() > FUNDAMENTAL_G2_TOL * g1.abs().max(f64::EPSILON) / q {
            near_fundamental = false;
        }
        q *= ratio;
    }
    if max_g1 == 0.0 {
        return Err(CoreError::Domain(
            "family: G'(Q) must not vanish identically (structureless point particle \
             excluded)"
                .into(),
        ));
    }
    if near_fundamental {
        warnings.push(
            "family classified as fundamental: |G''| below the rank-transition threshold \
             over the whole Q range"
                .into(),
        );
        return Ok(RotatorKind::Fundamental);
    }
    Ok(RotatorKind::Phenomenological)
}

/// Numeric inversion of the parametric curve `Q -> (C_J, C_M)`.
///
/// A log-spaced grid trimmed to the family's validity range supplies a
/// monotone cubic initial guess; a safeguarded Newton solve on
/// `G'(Q)^2 = C_J` then pins Q, from which f, f', f'' follow in closed form
/// along the parametrization.
#[derive(Clone, Debug)]
pub struct MassSpinCurve {
    family: GFamily,
    /// Nodes sorted by ascending C_J.
    cj: Vec<f64>,
    q: Vec<f64>,
    /// PCHIP slopes dQ/dC_J at nodes, for the initial guess.
    slopes: Vec<f64>,
}

impl MassSpinCurve {
    fn build(
        family: &GFamily,
        q_range: (f64, f64),
        nodes: usize,
        warnings: &mut Vec<String>,
    ) -> Result<Self> {
        let n = nodes.max(16);
        let (lo, hi) = q_range;
        let ratio = (hi / lo).powf(1.0 / (n - 1) as f64);

        let mut qs = Vec::with_capacity(n);
        let mut cjs = Vec::with_capacity(n);
        let mut q = lo;
        for _ in 0..n {
            let (g, g1, _) = family.triple(q);
            let valid = g > 0.0 && g - q * g1 > 0.0 && g1 != 0.0;
            if !valid {
                break;
            }
            qs.push(q);
            cjs.push(g1 * g1);
            q *= ratio;
        }
        if qs.len() < n {
            warnings.push(format!(
                "mass-spin grid trimmed to Q in [{:.3e}, {:.3e}] where G > Q G' > ... holds \
                 ({} of {} nodes kept)",
                qs.first().copied().unwrap_or(f64::NAN),
                qs.last().copied().unwrap_or(f64::NAN),
                qs.len(),
                n
            ));
        }
        if qs.len() < 8 {
            return Err(CoreError::Inversion(format!(
                "mass-spin curve: fewer than 8 valid grid nodes in Q range [{lo}, {hi}]"
            )));
        }

        let increasing = cjs[1] > cjs[0];
        for w in cjs.windows(2) {
            let ok = if increasing { w[1] > w[0] } else { w[1] < w[0] };
            if !ok {
                return Err(CoreError::Inversion(
                    "mass-spin curve: C_J(Q) is not monotone on the requested range; \
                     restrict q_range to a monotone branch"
                        .into(),
                ));
            }
        }
        let (mut cj, mut qv) = (cjs, qs);
        if !increasing {
            cj.reverse();
            qv.reverse();
        }
        let slopes = pchip_slopes(&cj, &qv);

        let curve = MassSpinCurve { family: family.clone(), cj, q: qv, slopes };
        curve.verify_consistency()?;
        Ok(curve)
    }

    /// C_J interval covered by the tabulation.
    pub fn cj_range(&self) -> (f64, f64) {
        (self.cj[0], *self.cj.last().unwrap())
    }

    /// Evaluates `(f, f', f'')` at `c_j`, or a domain error outside the
    /// tabulated range.
    pub fn eval(&self, c_j: f64) -> Result<(f64, f64, f64)> {
        let (lo, hi) = self.cj_range();
        if !(c_j >= lo && c_j <= hi) {
            return Err(CoreError::Domain(format!(
                "C_J = {c_j} outside the invertible range [{lo:.6e}, {hi:.6e}] of this family"
            )));
        }
        Ok(self.eval_at(c_j))
    }

    /// Evaluates without range checking; returns NaNs outside the range so
    /// dual-number pipelines surface the failure as a numeric error.
    pub fn eval_raw(&self, c_j: f64) -> (f64, f64, f64) {
        let (lo, hi) = self.cj_range();
        if !(c_j >= lo && c_j <= hi) {
            return (f64::NAN, f64::NAN, f64::NAN);
        }
        self.eval_at(c_j)
    }

    /// The parameter Q with `G'(Q)^2 = c_j`.
    pub fn q_of(&self, c_j: f64) -> Result<f64> {
        self.eval(c_j).map(|_| self.solve_q(c_j))
    }

    fn eval_at(&self, c_j: f64) -> (f64, f64, f64) {
        let q = self.solve_q(c_j);
        let (g, g1, g2) = self.family.triple(q);
        let f = g - q * g1;
        let f1 = -q / (2.0 * g1);
        let f2 = -(g1 - q * g2) / (4.0 * g1.powi(3) * g2);
        (f, f1, f2)
    }

    /// Safeguarded Newton on `G'(Q)^2 - c_j = 0`, seeded by the PCHIP guess
    /// and bracketed by the enclosing grid interval.
    fn solve_q(&self, c_j: f64) -> f64 {
        let i = match self.cj.binary_search_by(|x| x.partial_cmp(&c_j).unwrap()) {
            Ok(i) => return self.q[i],
            Err(i) => i.clamp(1, self.cj.len() - 1),
        };
        let (c0, c1) = (self.cj[i - 1], self.cj[i]);
        let (mut lo, mut hi) = (self.q[i - 1].min(self.q[i]), self.q[i - 1].max(self.q[i]));
        let mut q = pchip_eval(c_j, c0, c1, self.q[i - 1], self.q[i], self.slopes[i - 1], self.slopes[i])
            .clamp(lo, hi);

        let residual = |q: f64| {
            let (_, g1, _) = self.family.triple(q);
            g1 * g1 - c_j
        };
        // Orient the bracket so residual(lo) <= 0 <= residual(hi).
        if residual(lo) > 0.0 {
            std::mem::swap(&mut lo, &mut hi);
        }
        for _ in 0..60 {
            let (_, g1, g2) = self.family.triple(q);
            let r = g1 * g1 - c_j;
            if r.abs() <= 1e-15 * c_j.max(1.0) {
                break;
            }
            let dr = 2.0 * g1 * g2;
            let mut next = q - r / dr;
            let (blo, bhi) = (lo.min(hi), lo.max(hi));
            if !(next.is_finite() && next > blo && next < bhi) {
                next = 0.5 * (lo + hi);
            }
            if r > 0.0 {
                hi = q;
            } else {
                lo = q;
            }
            if (next - q).abs() <= f64::EPSILON * q.abs() {
                q = next;
                break;
            }
            q = next;
        }
        q
    }

    /// Enforces `Q^2 = 4 C_J f'(C_J)^2` at every grid node.
    fn verify_consistency(&self) -> Result<()> {
        for (&cj, &q) in self.cj.iter().zip(&self.q) {
            let (_, f1, _) = self.eval_at(cj);
            let lhs = q * q;
            let rhs = 4.0 * cj * f1 * f1;
            if (lhs - rhs).abs() > 1e-6 * lhs.abs().max(1e-300) {
                return Err(CoreError::Inversion(format!(
                    "mass-spin curve consistency Q^2 = 4 C_J f'^2 violated at C_J = {cj}: \
                     {lhs} vs {rhs}"
                )));
            }
        }
        Ok(())
    }
}

/// Fritsch-Carlson monotone cubic slopes for nodes (x, y).
fn pchip_slopes(x: &[f64], y: &[f64]) -> Vec<f64> {
    let n = x.len();
    let h: Vec<f64> = x.windows(2).map(|w| w[1] - w[0]).collect();
    let delta: Vec<f64> = (0..n - 1).map(|i| (y[i + 1] - y[i]) / h[i]).collect();
    let mut m = vec![0.0; n];

    m[0] = endpoint_slope(h[0], h[1], delta[0], delta[1]);
    m[n - 1] = endpoint_slope(h[n - 2], h[n - 3], delta[n - 2], delta[n - 3]);
    for i in 1..n - 1 {
        if delta[i - 1] * delta[i] <= 0.0 {
            m[i] = 0.0;
        } else {
            let w1 = 2.0 * h[i] + h[i - 1];
            let w2 = h[i] + 2.0 * h[i - 1];
            m[i] = (w1 + w2) / (w1 / delta[i - 1] + w2 / delta[i]);
        }
    }
    m
}

fn endpoint_slope(h0: f64, h1: f64, d0: f64, d1: f64) -> f64 {
    let m = ((2.0 * h0 + h1) * d0 - h0 * d1) / (h0 + h1);
    if m * d0 <= 0.0 {
        0.0
    } else if d0 * d1 < 0.0 && m.abs() > 3.0 * d0.abs() {
        3.0 * d0
    } else {
        m
    }
}

/// Cubic Hermite evaluation on one interval.
fn pchip_eval(x: f64, x0: f64, x1: f64, y0: f64, y1: f64, m0: f64, m1: f64) -> f64 {
    let h = x1 - x0;
    let s = (x - x0) / h;
    let s2 = s * s;
    let s3 = s2 * s;
    y0 * (2.0 * s3 - 3.0 * s2 + 1.0)
        + m0 * h * (s3 - 2.0 * s2 + s)
        + y1 * (-2.0 * s3 + 3.0 * s2)
        + m1 * h * (s3 - s2)
}
