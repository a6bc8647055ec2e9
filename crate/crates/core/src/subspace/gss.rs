use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// `(√5 − 1) / 2`, the bracket shrink factor per step.
pub const INV_PHI: f64 = 0.618_033_988_749_894_9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Minimum<T> {
    pub argmin: T,
    pub value: T,
    pub evaluations: usize,
}

/// Golden-section search for the minimum of a unimodal `f` on `[lo, hi]`.
///
/// Shrinks the bracket until its width is at most `tol` and returns the best
/// interior probe, so `|argmin - x*| <= tol` whenever `f` is unimodal.
pub fn golden_section_search<T, F>(mut f: F, lo: T, hi: T, tol: T) -> Result<Minimum<T>>
where
    T: Scalar,
    F: FnMut(T) -> T,
{
    if !lo.is_finite() || !hi.is_finite() || lo >= hi {
        return Err(Error::InvalidArgument(format!("empty search interval [{lo}, {hi}]")));
    }
    if tol.is_nan() || tol <= T::zero() {
        return Err(Error::InvalidArgument(format!("tolerance must be positive, got {tol}")));
    }
    let r = T::lit(INV_PHI);
    let mut evaluations = 0;
    let mut eval = |x: T| -> Result<T> {
        evaluations += 1;
        let y = f(x);
        if y.is_finite() {
            Ok(y)
        } else {
            Err(Error::NonFinite { at: x.to_f64_lossy() })
        }
    };

    let (mut a, mut b) = (lo, hi);
    let mut c = b - r * (b - a);
    let mut d = a + r * (b - a);
    let mut fc = eval(c)?;
    let mut fd = eval(d)?;
    while b - a > tol {
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - r * (b - a);
            fc = eval(c)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + r * (b - a);
            fd = eval(d)?;
        }
        // guard against a bracket that floating point can no longer shrink
        if c >= d && b - a > tol {
            break;
        }
    }
    let (argmin, value) = if fc <= fd { (c, fc) } else { (d, fd) };
    Ok(Minimum {
        argmin,
        value,
        evaluations,
    })
}
