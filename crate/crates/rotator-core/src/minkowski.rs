//! Minkowski four-vector algebra with fixed signature (+,-,-,-).
//!
//! Components are stored contravariant; the metric enters only through
//! [`dot`]. Natural units, c = 1.

use std::ops::{Add, Index, Mul, Neg, Sub};

use crate::error::CoreError;
use crate::scalar::Scalar;

/// A four-vector `(t, x, y, z)` with contravariant components.
#[derive(Clone, Copy, Debug, PartialEq, Default)]
pub struct FourVector<T> {
    pub t: T,
    pub x: T,
    pub y: T,
    pub z: T,
}

/// Diagonal of the metric tensor, applied inside [`dot`].
pub const METRIC_SIGNS: [f64; 4] = [1.0, -1.0, -1.0, -1.0];

impl<T: Scalar> FourVector<T> {
    pub fn new(t: T, x: T, y: T, z: T) -> Self {
        FourVector { t, x, y, z }
    }

    pub fn zero() -> Self {
        FourVector { t: T::zero(), x: T::zero(), y: T::zero(), z: T::zero() }
    }

    pub fn from_array(a: [T; 4]) -> Self {
        FourVector { t: a[0], x: a[1], y: a[2], z: a[3] }
    }

    pub fn to_array(self) -> [T; 4] {
        [self.t, self.x, self.y, self.z]
    }

    /// Builds from `f64` components, converting into the scalar type.
    pub fn from_f64(a: [f64; 4]) -> Self {
        FourVector {
            t: T::scalar(a[0]),
            x: T::scalar(a[1]),
            y: T::scalar(a[2]),
            z: T::scalar(a[3]),
        }
    }

    /// Minkowski square `dot(v, v)`.
    pub fn norm_sq(self) -> T {
        dot(self, self)
    }

    /// Euclidean norm of the spatial part.
    pub fn spatial_norm(self) -> T {
        (self.x * self.x + self.y * self.y + self.z * self.z).sqrt()
    }

    pub fn scale(self, s: T) -> Self {
        FourVector { t: self.t * s, x: self.x * s, y: self.y * s, z: self.z * s }
    }

    pub fn is_finite(self) -> bool {
        self.t.is_finite() && self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }
}

impl FourVector<f64> {
    /// Maximum absolute component, a convenient magnitude scale.
    pub fn max_abs(self) -> f64 {
        self.t.abs().max(self.x.abs()).max(self.y.abs()).max(self.z.abs())
    }
}

impl<T: Scalar> Index<usize> for FourVector<T> {
    type Output = T;
    fn index(&self, i: usize) -> &T {
        match i {
            0 => &self.t,
            1 => &self.x,
            2 => &self.y,
            3 => &self.z,
            _ => panic!("four-vector index {i} out of range"),
        }
    }
}

impl<T: Scalar> Add for FourVector<T> {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        FourVector { t: self.t + o.t, x: self.x + o.x, y: self.y + o.y, z: self.z + o.z }
    }
}

impl<T: Scalar> Sub for FourVector<T> {
    type Output = Self;
    fn sub(self, o: Self) -> Self {
        FourVector { t: self.t - o.t, x: self.x - o.x, y: self.y - o.y, z: self.z - o.z }
    }
}

impl<T: Scalar> Neg for FourVector<T> {
    type Output = Self;
    fn neg(self) -> Self {
        FourVector { t: -self.t, x: -self.x, y: -self.y, z: -self.z }
    }
}

impl<T: Scalar> Mul<T> for FourVector<T> {
    type Output = Self;
    fn mul(self, s: T) -> Self {
        self.scale(s)
    }
}

/// Signature-correct scalar product `a.t b.t - a.x b.x - a.y b.y - a.z b.z`.
pub fn dot<T: Scalar>(a: FourVector<T>, b: FourVector<T>) -> T {
    a.t * b.t - a.x * b.x - a.y * b.y - a.z * b.z
}

/// Projects `y` onto the subspace orthogonal to `p`: `y - (yp/pp) p`.
///
/// Rejects degenerate `p` with `pp = 0`.
pub fn project_orthogonal<T: Scalar>(
    y: FourVector<T>,
    p: FourVector<T>,
) -> Result<FourVector<T>, CoreError> {
    let pp = dot(p, p);
    if pp.real_part() == 0.0 {
        return Err(CoreError::Degenerate(
            "project_orthogonal: projector direction is null (pp = 0)".into(),
        ));
    }
    Ok(y - p.scale(dot(y, p) / pp))
}

/// 2x2 Gram determinant `aa*bb - (ab)^2` of Minkowski products.
pub fn curvature_gram<T: Scalar>(a: FourVector<T>, b: FourVector<T>) -> T {
    let aa = dot(a, a);
    let bb = dot(b, b);
    let ab = dot(a, b);
    aa * bb - ab * ab
}

/// Square of the Pauli-Lubanski spin pseudovector: minus the determinant of
/// the 3x3 matrix of mutual scalar products of `p`, `chi`, `k`.
///
/// On the surface `kk = 0`, `k chi = 0` this reduces to `(pk)^2 chi chi`.
pub fn pauli_lubanski_sq<T: Scalar>(
    p: FourVector<T>,
    k: FourVector<T>,
    chi: FourVector<T>,
) -> T {
    let pp = dot(p, p);
    let pc = dot(p, chi);
    let pk = dot(p, k);
    let cc = dot(chi, chi);
    let ck = dot(chi, k);
    let kk = dot(k, k);
    let det = pp * (cc * kk - ck * ck) - pc * (pc * kk - ck * pk) + pk * (pc * ck - cc * pk);
    -det
}

/// Determinant of the 4x4 matrix whose rows are the raw components of
/// `a, b, c, d`; the Levi-Civita pairing used as a conservation surrogate
/// for the wedge `b ^ c ^ d` against a fixed test vector `a`.
pub fn wedge_pairing<T: Scalar>(
    a: FourVector<T>,
    b: FourVector<T>,
    c: FourVector<T>,
    d: FourVector<T>,
) -> T {
    let m = [a.to_array(), b.to_array(), c.to_array(), d.to_array()];
    let det3 = |r: [[T; 4]; 3], cols: [usize; 3]| -> T {
        r[0][cols[0]] * (r[1][cols[1]] * r[2][cols[2]] - r[1][cols[2]] * r[2][cols[1]])
            - r[0][cols[1]] * (r[1][cols[0]] * r[2][cols[2]] - r[1][cols[2]] * r[2][cols[0]])
            + r[0][cols[2]] * (r[1][cols[0]] * r[2][cols[1]] - r[1][cols[1]] * r[2][cols[0]])
    };
    let sub = [m[1], m[2], m[3]];
    m[0][0] * det3(sub, [1, 2, 3]) - m[0][1] * det3(sub, [0, 2, 3])
        + m[0][2] * det3(sub, [0, 1, 3])
        - m[0][3] * det3(sub, [0, 1, 2])
}

/// Boost with rapidity `xi` along a coordinate axis (1 = x, 2 = y, 3 = z).
/// Test helper for generating moving-frame states.
pub fn boost_along_axis(v: FourVector<f64>, axis: usize, xi: f64) -> FourVector<f64> {
    let (ch, sh) = (xi.cosh(), xi.sinh());
    let mut a = v.to_array();
    let (t, s) = (a[0], a[axis]);
    a[0] = ch * t + sh * s;
    a[axis] = sh * t + ch * s;
    FourVector::from_array(a)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v(t: f64, x: f64, y: f64, z: f64) -> FourVector<f64> {
        FourVector::new(t, x, y, z)
    }

    #[test]
    fn dot_signature() {
        assert_eq!(dot(v(1.0, 0.0, 0.0, 0.0), v(1.0, 0.0, 0.0, 0.0)), 1.0);
        assert_eq!(dot(v(1.0, 1.0, 0.0, 0.0), v(1.0, 1.0, 0.0, 0.0)), 0.0);
        assert_eq!(dot(v(1.0, 0.0, 0.0, 0.0), v(1.0, 1.0, 0.0, 0.0)), 1.0);
    }

    #[test]
    fn projection_examples() {
        let e0 = v(1.0, 0.0, 0.0, 0.0);
        assert_eq!(project_orthogonal(e0, e0).unwrap(), FourVector::zero());
        assert_eq!(project_orthogonal(v(0.0, 1.0, 0.0, 0.0), e0).unwrap(), v(0.0, 1.0, 0.0, 0.0));
        assert_eq!(
            project_orthogonal(v(1.0, 1.0, 0.0, 0.0), v(2.0, 0.0, 0.0, 0.0)).unwrap(),
            v(0.0, 1.0, 0.0, 0.0)
        );
    }

    #[test]
    fn projection_rejects_null_direction() {
        let err = project_orthogonal(v(1.0, 0.0, 0.0, 0.0), v(1.0, 1.0, 0.0, 0.0));
        assert!(err.is_err());
    }

    #[test]
    fn curvature_gram_examples() {
        let a = v(0.0, 1.0, 0.0, 0.0);
        assert_eq!(curvature_gram(a, a), 0.0);
        assert_eq!(curvature_gram(a, v(0.0, 0.0, 1.0, 0.0)), 1.0);
        assert_eq!(curvature_gram(v(0.0, 2.0, 0.0, 0.0), v(0.0, 0.0, 3.0, 0.0)), 36.0);
    }

    #[test]
    fn pauli_lubanski_examples() {
        let p = v(1.0, 0.0, 0.0, 0.0);
        let k = v(1.0, 1.0, 0.0, 0.0);
        let chi = v(0.0, 0.0, 0.5, 0.0);
        assert!((pauli_lubanski_sq(p, k, chi) + 0.25).abs() < 1e-15);
        assert_eq!(pauli_lubanski_sq(p, k, FourVector::zero()), 0.0);
        assert_eq!(pauli_lubanski_sq(p, FourVector::zero(), chi), 0.0);
    }

    #[test]
    fn boost_preserves_interval() {
        let a = v(2.0, 0.3, -0.4, 1.1);
        for axis in 1..4 {
            let b = boost_along_axis(a, axis, 0.8);
            assert!((b.norm_sq() - a.norm_sq()).abs() < 1e-12);
        }
    }
}
