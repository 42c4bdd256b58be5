//! Observables (rapidity, curvature radius, angular velocity, torsion) and
//! Hessian-rank diagnostics separating phenomenological from fundamental
//! rotators.

use nalgebra::DMatrix;
use serde::Serialize;

use crate::dynamics::TrajectorySample;
use crate::error::{CoreError, Result};
use crate::minkowski::{curvature_gram, dot, project_orthogonal, FourVector};
use crate::model::{CasimirPair, RotatorSpec};
use crate::scalar::Dual;

/// Singular value threshold: sigma_i counts as nonzero iff
/// `sigma_i > RANK_SV_THRESHOLD * sigma_1`.
pub const RANK_SV_THRESHOLD: f64 = 1e-8;
/// Required spectral gap between the last kept and first dropped singular
/// value for an unambiguous rank.
pub const RANK_GAP_MIN: f64 = 1e2;

/// Window-centered observables of a rotator trajectory.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct Observables {
    pub tanh_psi: f64,
    pub rho: f64,
    pub omega: f64,
    pub torsion_residual: f64,
    pub casimirs: CasimirPair,
}

impl Observables {
    /// Evaluates the observables on a uniform sample window (at least 5
    /// samples, centered quantities plus the window torsion).
    pub fn from_window(spec: &RotatorSpec, window: &[TrajectorySample]) -> Result<Self> {
        let (c, _) = stencil_center(window)?;
        let center = &window[c];
        let omega = match spec.kind() {
            crate::model::RotatorKind::Phenomenological => {
                angular_velocity(spec, center.casimirs)?
            }
            crate::model::RotatorKind::Fundamental => center.omega_gauge.unwrap_or(f64::NAN),
        };
        let obs = Observables {
            tanh_psi: center.tanh_psi,
            rho: center.rho,
            omega,
            torsion_residual: torsion_residual(window)?,
            casimirs: center.casimirs,
        };
        if obs.tanh_psi.abs() >= 1.0 {
            return Err(CoreError::Domain(format!(
                "tanh psi = {}: superluminal window",
                obs.tanh_psi
            )));
        }
        if obs.casimirs.c_j > 0.0 && obs.rho <= 0.0 {
            return Err(CoreError::Degenerate("rho must be positive for nonzero spin".into()));
        }
        Ok(obs)
    }
}

/// Rapidity of rotation with respect to the center-of-momentum frame:
/// `tanh(psi) = (pk * p.xdot - pp * k.xdot) / (pk * p.xdot)`.
///
/// Flags `|tanh psi| >= 1` as superluminal.
pub fn rapidity(
    p: FourVector<f64>,
    k: FourVector<f64>,
    xdot: FourVector<f64>,
) -> Result<f64> {
    let pk = dot(p, k);
    let px = dot(p, xdot);
    if px == 0.0 {
        return Err(CoreError::Degenerate("p.xdot: rapidity needs p.xdot != 0".into()));
    }
    if pk <= 0.0 {
        return Err(CoreError::Domain(format!("pk: rapidity convention assumes pk > 0, got {pk}")));
    }
    let value = (pk * px - dot(p, p) * dot(k, xdot)) / (pk * px);
    if value.abs() >= 1.0 {
        return Err(CoreError::Domain(format!(
            "tanh psi = {value}: superluminal rotation speed"
        )));
    }
    Ok(value)
}

/// Curvature radius from the Casimir invariants: `rho = (l/2) sqrt(C_J)/C_M`.
pub fn rho_from_casimirs(spec: &RotatorSpec, c: CasimirPair) -> f64 {
    0.5 * spec.ell() * c.c_j.sqrt() / c.c_m
}

/// Angular velocity of the circular motion, phenomenological rotators only:
/// `omega = (2/l) C_M sqrt(C_J) F_{G,C_J} / (C_M F_{G,C_M} + C_J F_{G,C_J})`
/// with `F = C_M - f(C_J)`.
pub fn angular_velocity(spec: &RotatorSpec, c: CasimirPair) -> Result<f64> {
    let curve = spec.mass_spin_curve()?;
    let (_, f1, _) = curve.eval(c.c_j)?;
    let f_cj = -f1;
    let denom = c.c_m + c.c_j * f_cj;
    if denom.abs() < 1e-12 {
        return Err(CoreError::Feasibility(format!(
            "angular velocity denominator C_M F_CM + C_J F_CJ = {denom} underflows; \
             G violates the admissibility conditions"
        )));
    }
    Ok(2.0 / spec.ell() * c.c_m * c.c_j.sqrt() * f_cj / denom)
}

/// Rapidity along the family parametrization: `tanh psi = QG'/(2G - QG')`.
pub fn rapidity_from_q(spec: &RotatorSpec, q: f64) -> Result<f64> {
    let (g, g1, _) = spec.eval_family(q)?;
    Ok(q * g1 / (2.0 * g - q * g1))
}

/// Rapidity in the mass-spin notation: `tanh psi = C_J f'/(C_J f' - f)`.
pub fn rapidity_from_casimirs(spec: &RotatorSpec, c: CasimirPair) -> Result<f64> {
    let (f, f1, _) = spec.mass_spin_curve()?.eval(c.c_j)?;
    Ok(c.c_j * f1 / (c.c_j * f1 - f))
}

/// Kinematic vs Casimir curvature-radius estimates over a uniform window.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct CurvatureEstimate {
    /// From finite-difference derivatives of the sampled worldline.
    pub kinematic: f64,
    /// From `(l/2) sqrt(C_J)/C_M` at the window center.
    pub casimir: f64,
}

fn stencil_center(window: &[TrajectorySample]) -> Result<(usize, f64)> {
    if window.len() < 5 {
        return Err(CoreError::Domain(format!(
            "window: derivative stencils need >= 5 samples, got {}",
            window.len()
        )));
    }
    let c = window.len() / 2;
    let c = c.clamp(2, window.len() - 3);
    let h = window[1].t - window[0].t;
    for w in window.windows(2) {
        if ((w[1].t - w[0].t) - h).abs() > 1e-9 * h.abs().max(1e-300) {
            return Err(CoreError::Domain("window: samples must be uniformly spaced".into()));
        }
    }
    Ok((c, h))
}

fn stencil_derivatives(
    window: &[TrajectorySample],
    c: usize,
    h: f64,
) -> (FourVector<f64>, FourVector<f64>, FourVector<f64>) {
    let xs: Vec<FourVector<f64>> = (c - 2..=c + 2).map(|i| window[i].state.x).collect();
    let d1 = (xs[0] - xs[1].scale(8.0) + xs[3].scale(8.0) - xs[4]).scale(1.0 / (12.0 * h));
    let d2 = (-xs[0] + xs[1].scale(16.0) - xs[2].scale(30.0) + xs[3].scale(16.0) - xs[4])
        .scale(1.0 / (12.0 * h * h));
    let d3 = (-xs[0] + xs[1].scale(2.0) - xs[3].scale(2.0) + xs[4]).scale(1.0 / (2.0 * h * h * h));
    (d1, d2, d3)
}

/// Curvature radius of the center-of-momentum trajectory from a sample
/// window, alongside the Casimir closed form.
pub fn curvature_radius(spec: &RotatorSpec, window: &[TrajectorySample]) -> Result<CurvatureEstimate> {
    let (c, h) = stencil_center(window)?;
    let center = &window[c];
    let p = center.state.p;
    let (d1, d2, _) = stencil_derivatives(window, c, h);
    let v1 = project_orthogonal(d1, p)?;
    let v2 = project_orthogonal(d2, p)?;
    let speed_sq = -dot(v1, v1);
    let gram = curvature_gram(v1, v2);
    if gram <= 0.0 || speed_sq <= 0.0 {
        return Err(CoreError::Degenerate(
            "curvature: window has vanishing transverse acceleration (zero spin?)".into(),
        ));
    }
    let kinematic = speed_sq.powf(1.5) / gram.sqrt();
    let casimir = rho_from_casimirs(spec, center.casimirs);
    Ok(CurvatureEstimate { kinematic, casimir })
}

/// Normalized 3x3 Gram determinant of the projected worldline derivatives;
/// values near zero certify the motion is planar (vanishing torsion).
pub fn torsion_residual(window: &[TrajectorySample]) -> Result<f64> {
    let (c, h) = stencil_center(window)?;
    let p = window[c].state.p;
    let (d1, d2, d3) = stencil_derivatives(window, c, h);
    let a = project_orthogonal(d1, p)?;
    let b = project_orthogonal(d2, p)?;
    let cc = project_orthogonal(d3, p)?;

    let g = |u: FourVector<f64>, v: FourVector<f64>| dot(u, v);
    let det = g(a, a) * (g(b, b) * g(cc, cc) - g(b, cc) * g(b, cc))
        - g(a, b) * (g(a, b) * g(cc, cc) - g(b, cc) * g(a, cc))
        + g(a, cc) * (g(a, b) * g(b, cc) - g(b, b) * g(a, cc));
    let norm = (-g(a, a)) * (-g(b, b)) * (-g(cc, cc));
    if norm <= 0.0 {
        return Err(CoreError::Degenerate(
            "torsion: projected derivatives are not all spacelike".into(),
        ));
    }
    Ok(det.abs() / norm)
}

/// Fills the per-sample torsion residual of a trajectory from rolling
/// 5-sample windows (the two samples at each edge stay empty).
pub fn fill_torsion(traj: &mut crate::dynamics::Trajectory) -> Result<()> {
    let n = traj.samples.len();
    if n < 5 {
        return Ok(());
    }
    let mut values = vec![None; n];
    for (i, slot) in values.iter_mut().enumerate().take(n - 2).skip(2) {
        *slot = Some(torsion_residual(&traj.samples[i - 2..=i + 2])?);
    }
    for (s, v) in traj.samples.iter_mut().zip(values) {
        s.torsion = v;
    }
    Ok(())
}

/// Rank diagnostics of a symmetric matrix via its singular spectrum.
#[derive(Clone, Debug, Serialize)]
pub struct RankReport {
    pub rank: usize,
    /// Singular values, descending.
    pub singular_values: Vec<f64>,
    /// sigma_rank / sigma_(rank+1); infinite when the tail is exactly zero.
    pub gap_ratio: f64,
    /// Set when the spectral gap at the threshold is below [`RANK_GAP_MIN`].
    pub indeterminate: bool,
    /// Evaluation is meaningful on the null cone `kk = 0` only; rank off the
    /// cone may differ and is reported, not asserted.
    pub note: &'static str,
}

/// Rank of a square matrix from its singular values.
pub fn rank_from_matrix(mat: &DMatrix<f64>) -> RankReport {
    let mut sv: Vec<f64> = mat.clone().svd(false, false).singular_values.iter().copied().collect();
    sv.sort_by(|a, b| b.partial_cmp(a).unwrap());
    let sigma1 = sv[0].max(1e-300);
    let rank = sv.iter().filter(|&&s| s > RANK_SV_THRESHOLD * sigma1).count();
    let gap_ratio = if rank == 0 || rank == sv.len() || sv[rank] == 0.0 {
        f64::INFINITY
    } else {
        sv[rank - 1] / sv[rank]
    };
    RankReport {
        rank,
        singular_values: sv,
        gap_ratio,
        indeterminate: gap_ratio < RANK_GAP_MIN,
        note: "rank evaluated on the null cone kk = 0, where the Lagrangian is defined",
    }
}

/// Differentiation mode for the velocity Hessian.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum HessianMode {
    /// Exact second derivatives from nested dual numbers (default).
    Dual,
    /// Central differences of the dual gradient, Richardson-extrapolated
    /// once; cross-check mode.
    FiniteDifference,
}

/// 8x8 Hessian of the Lagrangian with respect to the velocities
/// `(xdot, kdot)` at fixed `k`.
pub fn velocity_hessian(
    spec: &RotatorSpec,
    xdot: FourVector<f64>,
    k: FourVector<f64>,
    kdot: FourVector<f64>,
    mode: HessianMode,
) -> Result<DMatrix<f64>> {
    let v0: [f64; 8] = {
        let mut v = [0.0; 8];
        v[..4].copy_from_slice(&xdot.to_array());
        v[4..].copy_from_slice(&kdot.to_array());
        v
    };
    // Validate the kinematic point once on plain floats.
    spec.lagrangian(xdot, k, kdot)?;

    match mode {
        HessianMode::Dual => {
            let mut h = DMatrix::zeros(8, 8);
            for i in 0..8 {
                for j in 0..=i {
                    let vars: Vec<Dual<Dual<f64>>> = (0..8)
                        .map(|m| {
                            Dual::new(
                                Dual::new(v0[m], if m == i { 1.0 } else { 0.0 }),
                                Dual::new(if m == j { 1.0 } else { 0.0 }, 0.0),
                            )
                        })
                        .collect();
                    let xd = FourVector::new(vars[0], vars[1], vars[2], vars[3]);
                    let kd = FourVector::new(vars[4], vars[5], vars[6], vars[7]);
                    let l = spec.lagrangian(xd, FourVector::from_f64(k.to_array()), kd)?;
                    let val = l.eps.eps;
                    if !val.is_finite() {
                        return Err(CoreError::Numeric(format!(
                            "hessian: non-finite entry ({i}, {j})"
                        )));
                    }
                    h[(i, j)] = val;
                    h[(j, i)] = val;
                }
            }
            Ok(h)
        }
        HessianMode::FiniteDifference => {
            let grad = |v: &[f64; 8]| -> Result<[f64; 8]> {
                let mut g = [0.0; 8];
                for (m, gm) in g.iter_mut().enumerate() {
                    let vars: Vec<Dual<f64>> = (0..8)
                        .map(|n| {
                            if n == m {
                                Dual::variable(v[n])
                            } else {
                                Dual::constant(v[n])
                            }
                        })
                        .collect();
                    let xd = FourVector::new(vars[0], vars[1], vars[2], vars[3]);
                    let kd = FourVector::new(vars[4], vars[5], vars[6], vars[7]);
                    *gm = spec
                        .lagrangian(xd, FourVector::from_f64(k.to_array()), kd)?
                        .eps;
                }
                Ok(g)
            };
            let column = |j: usize, h: f64| -> Result<[f64; 8]> {
                let mut hi = v0;
                let mut lo = v0;
                hi[j] += h;
                lo[j] -= h;
                let (gh, gl) = (grad(&hi)?, grad(&lo)?);
                let mut d = [0.0; 8];
                for m in 0..8 {
                    d[m] = (gh[m] - gl[m]) / (2.0 * h);
                }
                Ok(d)
            };
            let mut h = DMatrix::zeros(8, 8);
            for j in 0..8 {
                let step = 1e-5 * v0[j].abs().max(1.0);
                let d1 = column(j, step)?;
                let d2 = column(j, step / 2.0)?;
                for m in 0..8 {
                    // One Richardson pass: O(h^4).
                    h[(m, j)] = (4.0 * d2[m] - d1[m]) / 3.0;
                }
            }
            // Symmetrize to wash out stencil asymmetry.
            let ht = h.transpose();
            Ok((h + ht) * 0.5)
        }
    }
}

/// Rank of the velocity Hessian at a kinematic point.
///
/// The quadratic form is restricted to the physical velocity variations of
/// a system living on the null cone: arbitrary `delta xdot` plus
/// `delta kdot` tangent to the cone (`k . delta kdot = 0`). On that
/// subspace the rank separates the two rotator kinds; unrestricted
/// directions off the cone tangent would mask two null directions (the
/// velocity itself and the pure k-shift of chi).
pub fn hessian_rank(
    spec: &RotatorSpec,
    xdot: FourVector<f64>,
    k: FourVector<f64>,
    kdot: FourVector<f64>,
    mode: HessianMode,
) -> Result<RankReport> {
    let scale = k.max_abs() * kdot.max_abs();
    if dot(k, kdot).abs() > 1e-10 * scale.max(1e-300) {
        return Err(CoreError::Domain(format!(
            "kdot: rank analysis needs a cone-tangent velocity (k.kdot = 0), got {}",
            dot(k, kdot)
        )));
    }
    let h = velocity_hessian(spec, xdot, k, kdot, mode)?;
    let basis = cone_tangent_basis(k);
    let restricted = basis.transpose() * h * &basis;
    Ok(rank_from_matrix(&restricted))
}

/// Euclidean-orthonormal basis (8x7) of the velocity variations with
/// `k . delta kdot = 0`: the four xdot directions plus three kdot
/// directions orthogonal to the covariant components of k.
fn cone_tangent_basis(k: FourVector<f64>) -> DMatrix<f64> {
    // Covariant components: the Minkowski functional b -> k.b is the
    // Euclidean inner product with (k_t, -k_x, -k_y, -k_z).
    let g = [k.t, -k.x, -k.y, -k.z];
    let g_norm = g.iter().map(|v| v * v).sum::<f64>().sqrt();
    let g: Vec<f64> = g.iter().map(|v| v / g_norm).collect();

    // Project the coordinate directions off g and keep the three strongest.
    let mut candidates: Vec<(f64, Vec<f64>)> = (0..4)
        .map(|j| {
            let mut v = vec![0.0; 4];
            v[j] = 1.0;
            for i in 0..4 {
                v[i] -= g[j] * g[i];
            }
            (v.iter().map(|x| x * x).sum::<f64>(), v)
        })
        .collect();
    candidates.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap());
    let mut tangent: Vec<Vec<f64>> = Vec::with_capacity(3);
    for (_, mut v) in candidates {
        if tangent.len() == 3 {
            break;
        }
        for t in &tangent {
            let proj: f64 = v.iter().zip(t).map(|(a, b)| a * b).sum();
            for i in 0..4 {
                v[i] -= proj * t[i];
            }
        }
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 1e-8 {
            tangent.push(v.iter().map(|x| x / norm).collect());
        }
    }

    let mut basis = DMatrix::zeros(8, 7);
    for i in 0..4 {
        basis[(i, i)] = 1.0;
    }
    for (c, t) in tangent.iter().enumerate() {
        for i in 0..4 {
            basis[(4 + i, 4 + c)] = t[i];
        }
    }
    basis
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

    #[test]
    fn rapidity_comoving_vanishes() {
        let p = v(2.0, 0.0, 0.0, 0.0);
        let k = v(1.0, 1.0, 0.0, 0.0);
        assert_eq!(rapidity(p, k, p.scale(0.3)).unwrap(), 0.0);
    }

    #[test]
    fn rapidity_flags_superluminal() {
        let p = v(1.0, 0.0, 0.0, 0.0);
        let k = v(1.0, 1.0, 0.0, 0.0);
        // xdot with k.xdot < 0 drives tanh psi above 1.
        assert!(rapidity(p, k, v(1.0, 2.0, 0.0, 0.0)).is_err());
    }

    #[test]
    fn angular_velocity_quadratic() {
        let spec = quadratic();
        let c = spec.casimirs_from_q(0.5).unwrap();
        let omega = angular_velocity(&spec, c).unwrap();
        assert!((omega - 0.375).abs() < 1e-10);

        // tanh psi = rho * omega = QG'/(2G - QG') = 0.25.
        let rho = rho_from_casimirs(&spec, c);
        assert!((rho - 2.0 / 3.0).abs() < 1e-12);
        assert!((rho * omega - 0.25).abs() < 1e-10);
        assert!((rapidity_from_q(&spec, 0.5).unwrap() - 0.25).abs() < 1e-12);
        assert!((rapidity_from_casimirs(&spec, c).unwrap() - 0.25).abs() < 1e-10);
    }

    #[test]
    fn rapidity_identity_over_q_sweep() {
        let spec = quadratic();
        for i in 0..50 {
            let q = 0.1 + 0.8 * (i as f64) / 49.0;
            let c = spec.casimirs_from_q(q).unwrap();
            let rho_omega =
                rho_from_casimirs(&spec, c) * angular_velocity(&spec, c).unwrap();
            let from_g = rapidity_from_q(&spec, q).unwrap();
            assert!((rho_omega - from_g).abs() < 1e-10, "Q = {q}");
            assert!(from_g.abs() < 1.0);
        }
    }

    #[test]
    fn hessian_rank_quadratic_is_five() {
        let spec = quadratic();
        let report = hessian_rank(
            &spec,
            v(1.0, 0.1, 0.0, 0.05),
            v(1.0, 1.0, 0.0, 0.0),
            v(0.0, 0.0, 0.5, 0.2),
            HessianMode::Dual,
        )
        .unwrap();
        assert_eq!(report.rank, 5, "spectrum: {:?}", report.singular_values);
        assert!(report.gap_ratio >= RANK_GAP_MIN);
        assert!(!report.indeterminate);
    }

    #[test]
    fn hessian_rank_fundamental_is_four() {
        for family in [GFamily::FundamentalPlus, GFamily::FundamentalMinus] {
            let spec = RotatorSpec::new(1.0, 1.0, family).unwrap();
            let report = hessian_rank(
                &spec,
                v(1.0, 0.1, 0.0, 0.05),
                v(1.0, 1.0, 0.0, 0.0),
                v(0.0, 0.0, 0.5, 0.2),
                HessianMode::Dual,
            )
            .unwrap();
            assert_eq!(report.rank, 4, "spectrum: {:?}", report.singular_values);
            assert!(report.gap_ratio >= RANK_GAP_MIN);
        }
    }

    #[test]
    fn hessian_modes_agree() {
        let spec = quadratic();
        let (xd, k, kd) = (v(1.0, 0.1, 0.0, 0.0), v(1.0, 1.0, 0.0, 0.0), v(0.0, 0.0, 0.5, 0.0));
        let hd = velocity_hessian(&spec, xd, k, kd, HessianMode::Dual).unwrap();
        let hf = velocity_hessian(&spec, xd, k, kd, HessianMode::FiniteDifference).unwrap();
        let diff = (&hd - &hf).norm() / hd.norm();
        assert!(diff < 1e-7, "relative difference {diff}");
    }

    #[test]
    fn hessian_annihilates_velocity_direction() {
        // Degree-1 homogeneity: H . (xdot, kdot) = 0 for every family.
        for family in [GFamily::Quadratic, GFamily::FundamentalPlus] {
            let spec = RotatorSpec::new(1.0, 1.0, family).unwrap();
            let (xd, k, kd) =
                (v(1.0, 0.1, 0.0, 0.05), v(1.0, 1.0, 0.0, 0.0), v(0.0, 0.0, 0.5, 0.2));
            let h = velocity_hessian(&spec, xd, k, kd, HessianMode::Dual).unwrap();
            let vel = nalgebra::DVector::from_vec(vec![
                xd.t, xd.x, xd.y, xd.z, kd.t, kd.x, kd.y, kd.z,
            ]);
            let residual = (&h * &vel).norm();
            assert!(residual < 1e-12 * h.norm(), "residual {residual}");
        }
    }

    #[test]
    fn hessian_rank_invariant_under_k_rescaling() {
        let spec = quadratic();
        let (xd, k, kd) = (v(1.0, 0.1, 0.0, 0.05), v(1.0, 1.0, 0.0, 0.0), v(0.0, 0.0, 0.5, 0.2));
        let r1 = hessian_rank(&spec, xd, k, kd, HessianMode::Dual).unwrap();
        let r2 = hessian_rank(&spec, xd, k.scale(2.0), kd.scale(2.0), HessianMode::Dual).unwrap();
        assert_eq!(r1.rank, r2.rank);
    }
}
