use super::{check_unit, Builder, ModifiedTokens, StepOp, TransformResult};
use crate::embedding::EmbeddingSnapshot;
use crate::error::{Error, Result};
use crate::linalg;
use crate::scalar::Scalar;

/// The rotation plane `span(v1, v2)` with orthonormal basis `u1 = v1`,
/// `u2 ∝ v2 - <v1, v2> v1`, and `phi1` the angle of `v2` from `u1`, in `(0, π)`.
#[derive(Debug, Clone, PartialEq)]
pub struct OscarPlane<T> {
    pub u1: Vec<T>,
    pub u2: Vec<T>,
    /// The second direction before the rotation.
    pub v2: Vec<T>,
    pub phi1: T,
}

/// Rotated in-plane angle for a point at angle `phi` in `[0, π]` above the
/// `u1` axis: `[0, phi1]` stretches linearly onto `[0, π/2]` and `[phi1, π]`
/// onto `[π/2, π]`, so `v1` and `-v1` stay put and `v2` lands at `π/2`.
pub fn oscar_angle<T: Scalar>(phi: T, phi1: T) -> T {
    let half_pi = T::FRAC_PI_2();
    if phi <= phi1 {
        half_pi * (phi / phi1)
    } else {
        half_pi + half_pi * (phi - phi1) / (T::PI() - phi1)
    }
}

/// Image of the in-plane angle `phi` in `(-π, π]` (with `b >= 0` meaning
/// `phi >= 0`): the upper half follows [`oscar_angle`], the lower half follows
/// its antipode.
pub fn oscar_target<T: Scalar>(phi: T, phi1: T) -> T {
    if phi >= T::zero() {
        oscar_angle(phi, phi1)
    } else {
        oscar_angle(phi + T::PI(), phi1) - T::PI()
    }
}

impl<T: Scalar> OscarPlane<T> {
    pub fn new(v1: &[T], v2: &[T]) -> Result<Self> {
        let c = linalg::dot(v1, v2);
        if c.abs() >= T::one() - T::lit(1e-9) {
            return Err(Error::Degenerate("concept directions are parallel".into()));
        }
        let u2 = linalg::orthogonalize(v2, &[v1])
            .ok_or_else(|| Error::Degenerate("concept directions are parallel".into()))?;
        let phi1 = linalg::dot(v2, &u2).atan2(c);
        Ok(Self {
            u1: v1.to_vec(),
            u2,
            v2: v2.to_vec(),
            phi1,
        })
    }

    /// In-plane coordinates `(a, b)` of `x`.
    pub fn coords(&self, x: &[T]) -> (T, T) {
        (linalg::dot(x, &self.u1), linalg::dot(x, &self.u2))
    }

    /// Rotates the in-plane part of `x`; coordinates where both basis vectors
    /// vanish are never written. Points below the `u1` axis move like their
    /// antipodes, so the map is odd and every line through the origin stays a line.
    pub fn rotate(&self, x: &mut [T]) {
        let (a, b) = self.coords(x);
        let r = a.hypot(b);
        if r == T::zero() {
            return;
        }
        let target = oscar_target(b.atan2(a), self.phi1);
        let (s, c) = target.sin_cos();
        let (na, nb) = (r * c, r * s);
        let (da, db) = (na - a, nb - b);
        for ((xi, &p), &q) in x.iter_mut().zip(&self.u1).zip(&self.u2) {
            if p != T::zero() || q != T::zero() {
                *xi += da * p + db * q;
            }
        }
    }
}

/// Graded rotation in `span(v1, v2)` that makes `v2` orthogonal to `v1`
/// while fixing `±v1`; everything orthogonal to the plane is untouched.
pub fn oscar<T: Scalar>(snapshot: &EmbeddingSnapshot<T>, v1: &[T], v2: &[T]) -> Result<TransformResult<T>> {
    let v1 = check_unit(v1, snapshot.dim())?;
    let v2 = check_unit(v2, snapshot.dim())?;
    let plane = OscarPlane::new(&v1, &v2)?;
    let mut b = Builder::new(snapshot);
    b.apply(
        StepOp::Rotate(plane),
        "rotate",
        "Rotate within the plane of both concept directions: words near the first direction barely move, words near the second turn with it until the two directions are orthogonal.",
        ModifiedTokens::All,
        None,
    );
    Ok(b.finish(None))
}
