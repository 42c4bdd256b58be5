//! Light-cone-constrained particle: a minimal projection-invariant model
//! whose Lagrange-multiplier dynamics and rank-2 Hessian illustrate how the
//! null-cone and projection constraints arise.
//!
//! The model: positions q on the light cone `qq = 0`, a constant timelike
//! vector w, and `L = -1/2 qdot qdot / (wq)^2` extended by the multiplier
//! term `1/2 Lambda qq`.

use nalgebra::DMatrix;
use serde::Serialize;

use crate::analysis::{rank_from_matrix, RankReport};
use crate::error::{CoreError, Result};
use crate::minkowski::{dot, FourVector};

/// The model's fixed data: the constant timelike vector w.
#[derive(Clone, Copy, Debug)]
pub struct SphereModel {
    pub w: FourVector<f64>,
}

/// Instantaneous state (q, qdot).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SphereState {
    pub q: FourVector<f64>,
    pub qdot: FourVector<f64>,
}

/// One recorded sphere-model integration step.
#[derive(Clone, Debug, Serialize)]
pub struct SphereSample {
    pub t: f64,
    #[serde(skip)]
    pub state: SphereState,
    /// Residuals (qq, q.qdot, pq).
    pub residuals: [f64; 3],
    pub multiplier: f64,
}

impl SphereModel {
    pub fn new(w: FourVector<f64>) -> Result<Self> {
        if dot(w, w) <= 0.0 {
            return Err(CoreError::Domain(format!(
                "w: must be timelike (ww > 0), got ww = {}",
                dot(w, w)
            )));
        }
        Ok(SphereModel { w })
    }

    /// Validates a light-cone initial state: qq = 0, wq != 0, spacelike
    /// qdot tangent to the cone (q.qdot = 0).
    pub fn validate(&self, s: &SphereState) -> Result<()> {
        let scale = s.q.max_abs().powi(2).max(1e-300);
        if dot(s.q, s.q).abs() > 1e-10 * scale {
            return Err(CoreError::Domain(format!(
                "q: must lie on the light cone (qq = 0), got qq = {}",
                dot(s.q, s.q)
            )));
        }
        if dot(self.w, s.q) == 0.0 {
            return Err(CoreError::Degenerate("wq = 0: the projective chart breaks down".into()));
        }
        if dot(s.qdot, s.qdot) >= 0.0 {
            return Err(CoreError::Domain(format!(
                "qdot: must be spacelike (qdot qdot < 0), got {}",
                dot(s.qdot, s.qdot)
            )));
        }
        let vscale = (s.q.max_abs() * s.qdot.max_abs()).max(1e-300);
        if dot(s.q, s.qdot).abs() > 1e-10 * vscale {
            return Err(CoreError::Domain(format!(
                "qdot: must be tangent to the cone (q.qdot = 0), got {}",
                dot(s.q, s.qdot)
            )));
        }
        Ok(())
    }

    /// `L = -1/2 qdot qdot / (wq)^2`.
    pub fn lagrangian(&self, q: FourVector<f64>, qdot: FourVector<f64>) -> Result<f64> {
        let wq = dot(self.w, q);
        if wq == 0.0 {
            return Err(CoreError::Degenerate("wq = 0: Lagrangian undefined".into()));
        }
        Ok(-0.5 * dot(qdot, qdot) / (wq * wq))
    }

    /// Conjugate momentum `p = qdot / (wq)^2`.
    pub fn momentum(&self, q: FourVector<f64>, qdot: FourVector<f64>) -> FourVector<f64> {
        let wq = dot(self.w, q);
        qdot.scale(1.0 / (wq * wq))
    }

    /// The Lagrange multiplier closing the equations of motion, resolved to
    /// a function of (q, qdot) alone by the gauge choice `w.qddot = 0`
    /// (which keeps wq linear in time and is scale-equivariant):
    /// `Lambda = (2 (w.qdot)^2 - qdot.qdot ww) / (wq)^4`.
    pub fn multiplier(&self, q: FourVector<f64>, qdot: FourVector<f64>) -> f64 {
        let wq = dot(self.w, q);
        let wqd = dot(self.w, qdot);
        (2.0 * wqd * wqd - dot(qdot, qdot) * dot(self.w, self.w)) / wq.powi(4)
    }

    /// `qddot = 2 (w.qdot)/(wq) qdot - (qdot.qdot)/(wq) w - Lambda (wq)^2 q`.
    pub fn acceleration(&self, q: FourVector<f64>, qdot: FourVector<f64>) -> FourVector<f64> {
        let wq = dot(self.w, q);
        let lambda = self.multiplier(q, qdot);
        qdot.scale(2.0 * dot(self.w, qdot) / wq) - self.w.scale(dot(qdot, qdot) / wq)
            - q.scale(lambda * wq * wq)
    }

    /// RK4 integration of the second-order system with per-step residual
    /// logging.
    pub fn integrate(&self, s0: &SphereState, t_final: f64, dt: f64) -> Result<Vec<SphereSample>> {
        self.validate(s0)?;
        if dt <= 0.0 || t_final <= 0.0 {
            return Err(CoreError::Domain("integrator: need positive dt and t_final".into()));
        }
        let deriv = |s: &SphereState| SphereState { q: s.qdot, qdot: self.acceleration(s.q, s.qdot) };
        let axpy = |s: &SphereState, d: &SphereState, h: f64| SphereState {
            q: s.q + d.q.scale(h),
            qdot: s.qdot + d.qdot.scale(h),
        };

        let steps = (t_final / dt).round() as usize;
        let mut samples = Vec::with_capacity(steps + 1);
        let mut s = *s0;
        let record = |t: f64, s: &SphereState| {
            let p = self.momentum(s.q, s.qdot);
            SphereSample {
                t,
                state: *s,
                residuals: [dot(s.q, s.q), dot(s.q, s.qdot), dot(p, s.q)],
                multiplier: self.multiplier(s.q, s.qdot),
            }
        };
        samples.push(record(0.0, &s));
        for i in 0..steps {
            let k1 = deriv(&s);
            let k2 = deriv(&axpy(&s, &k1, 0.5 * dt));
            let k3 = deriv(&axpy(&s, &k2, 0.5 * dt));
            let k4 = deriv(&axpy(&s, &k3, dt));
            s = SphereState {
                q: s.q + (k1.q + k2.q.scale(2.0) + k3.q.scale(2.0) + k4.q).scale(dt / 6.0),
                qdot: s.qdot
                    + (k1.qdot + k2.qdot.scale(2.0) + k3.qdot.scale(2.0) + k4.qdot)
                        .scale(dt / 6.0),
            };
            samples.push(record((i + 1) as f64 * dt, &s));
        }
        Ok(samples)
    }

    /// The acceleration operator of the projected equations of motion,
    /// `delta - (w (x) q + q (x) w)/wq + ww q (x) q/(wq)^2` with one index
    /// lowered; on the cone it annihilates both q and w.
    pub fn hessian_operator(&self, q: FourVector<f64>) -> DMatrix<f64> {
        let wq = dot(self.w, q);
        let ww = dot(self.w, self.w);
        let lower = |v: FourVector<f64>| [v.t, -v.x, -v.y, -v.z];
        let q_up = q.to_array();
        let w_up = self.w.to_array();
        let q_lo = lower(q);
        let w_lo = lower(self.w);

        let mut m = DMatrix::zeros(4, 4);
        for nu in 0..4 {
            for mu in 0..4 {
                let delta = if nu == mu { 1.0 } else { 0.0 };
                m[(nu, mu)] = delta - w_up[nu] * q_lo[mu] / wq - q_up[nu] * w_lo[mu] / wq
                    + ww * q_up[nu] * q_lo[mu] / (wq * wq);
            }
        }
        m
    }

    /// Rank diagnostics plus the null-vector residuals `|H q|`, `|H w|`
    /// (relative to `|H|`).
    pub fn hessian_report(&self, q: FourVector<f64>) -> (RankReport, [f64; 2]) {
        let h = self.hessian_operator(q);
        let apply = |v: FourVector<f64>| {
            let arr = v.to_array();
            let mut out = [0.0; 4];
            for nu in 0..4 {
                out[nu] = (0..4).map(|mu| h[(nu, mu)] * arr[mu]).sum();
            }
            out.iter().map(|x| x * x).sum::<f64>().sqrt()
        };
        let h_norm = h.norm();
        let residuals = [apply(q) / h_norm, apply(self.w) / h_norm];
        (rank_from_matrix(&h), residuals)
    }
}
