use crate::error::{Error, Result};
use crate::linalg;
use crate::scalar::Scalar;

/// Soft-margin linear SVM settings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SvmConfig {
    /// Hinge-loss weight (regularization `1/C`).
    pub c: f64,
    pub max_epochs: usize,
    /// Stop when the spread of projected gradients falls below this.
    pub tolerance: f64,
}

impl Default for SvmConfig {
    fn default() -> Self {
        Self {
            c: 1.0,
            max_epochs: 10_000,
            tolerance: 1e-6,
        }
    }
}

/// L2-regularized hinge-loss linear SVM with an intercept, trained by dual
/// coordinate descent over the training points in their given order.
///
/// The intercept is learned as the weight of a constant feature `1`, so it is
/// regularized together with the normal.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearSvm<T> {
    pub weights: Vec<T>,
    pub bias: T,
    pub epochs: usize,
}

impl<T: Scalar> LinearSvm<T> {
    /// Trains with `positive` labelled +1 and `negative` labelled -1.
    pub fn train(positive: &[&[T]], negative: &[&[T]], cfg: &SvmConfig) -> Result<Self> {
        if positive.is_empty() || negative.is_empty() {
            return Err(Error::InvalidArgument("both classes need at least one point".into()));
        }
        let d = positive[0].len();
        let points: Vec<(&[T], T)> = positive
            .iter()
            .map(|p| (*p, T::one()))
            .chain(negative.iter().map(|p| (*p, -T::one())))
            .collect();
        let c = T::lit(cfg.c);
        let tol = T::lit(cfg.tolerance);
        let diag: Vec<T> = points.iter().map(|(x, _)| linalg::dot(x, x) + T::one()).collect();

        let mut alpha = vec![T::zero(); points.len()];
        let mut w = vec![T::zero(); d];
        let mut b = T::zero();

        for epoch in 1..=cfg.max_epochs {
            let mut pg_max = T::neg_infinity();
            let mut pg_min = T::infinity();
            for (i, (x, y)) in points.iter().enumerate() {
                let g = *y * (linalg::dot(&w, x) + b) - T::one();
                let pg = if alpha[i] == T::zero() {
                    g.min(T::zero())
                } else if alpha[i] == c {
                    g.max(T::zero())
                } else {
                    g
                };
                pg_max = pg_max.max(pg);
                pg_min = pg_min.min(pg);
                if pg != T::zero() {
                    let old = alpha[i];
                    let new = (old - g / diag[i]).max(T::zero()).min(c);
                    let delta = (new - old) * *y;
                    if delta != T::zero() {
                        alpha[i] = new;
                        linalg::axpy(delta, x, &mut w);
                        b += delta;
                    }
                }
            }
            if pg_max - pg_min <= tol {
                return Ok(Self {
                    weights: w,
                    bias: b,
                    epochs: epoch,
                });
            }
        }
        Err(Error::NotConverged {
            iterations: cfg.max_epochs,
        })
    }

    pub fn decision(&self, x: &[T]) -> T {
        linalg::dot(&self.weights, x) + self.bias
    }

    /// Fraction of points on their own side of the boundary (ties count as errors).
    pub fn accuracy(&self, positive: &[&[T]], negative: &[&[T]]) -> f64 {
        let ok = positive.iter().filter(|x| self.decision(x) > T::zero()).count()
            + negative.iter().filter(|x| self.decision(x) < T::zero()).count();
        ok as f64 / (positive.len() + negative.len()) as f64
    }

    /// `w / ||w||`, or `None` when the classifier has collapsed to its intercept.
    pub fn unit_normal(&self) -> Option<Vec<T>> {
        let n = linalg::norm(&self.weights);
        if n <= T::epsilon() * T::lit(1e3) {
            return None;
        }
        Some(self.weights.iter().map(|&x| x / n).collect())
    }
}

/// Best accuracy of any threshold rule `score > t` (either orientation)
/// separating positive from negative scores.
pub fn best_threshold_accuracy<T: Scalar>(positive: &[T], negative: &[T]) -> f64 {
    let n = positive.len() + negative.len();
    if n == 0 {
        return 0.0;
    }
    let mut all: Vec<(T, bool)> = positive
        .iter()
        .map(|&s| (s, true))
        .chain(negative.iter().map(|&s| (s, false)))
        .collect();
    all.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap_or(std::cmp::Ordering::Equal));

    // threshold below everything: all predicted positive
    let mut pos_above = positive.len();
    let mut neg_above = negative.len();
    let mut best = pos_above.max(neg_above);
    let mut i = 0;
    while i < all.len() {
        let v = all[i].0;
        while i < all.len() && all[i].0 == v {
            if all[i].1 {
                pos_above -= 1;
            } else {
                neg_above -= 1;
            }
            i += 1;
        }
        let neg_below = negative.len() - neg_above;
        let pos_below = positive.len() - pos_above;
        best = best.max(pos_above + neg_below).max(neg_above + pos_below);
    }
    best as f64 / n as f64
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn separates_symmetric_pair() {
        let svm = LinearSvm::<f64>::train(&[&[1.0, 0.0]], &[&[-1.0, 0.0]], &SvmConfig::default()).unwrap();
        assert_eq!(svm.accuracy(&[&[1.0, 0.0]], &[&[-1.0, 0.0]]), 1.0);
        let n = svm.unit_normal().unwrap();
        assert!((n[0] - 1.0).abs() < 1e-9 && n[1].abs() < 1e-9);
        assert!(svm.bias.abs() < 1e-9);
    }

    #[test]
    fn coincident_classes_collapse() {
        let z: &[f64] = &[0.0, 0.0];
        let svm = LinearSvm::train(&[z, z], &[z], &SvmConfig::default()).unwrap();
        assert!(svm.unit_normal().is_none());
    }

    #[test]
    fn iteration_cap_reports_non_convergence() {
        let cfg = SvmConfig {
            max_epochs: 1,
            ..SvmConfig::default()
        };
        let p: &[f64] = &[1.0, 0.3];
        let q: &[f64] = &[0.9, 0.35];
        let r: &[f64] = &[-0.2, 1.0];
        assert!(matches!(
            LinearSvm::train(&[p, r], &[q], &cfg),
            Err(Error::NotConverged { iterations: 1 })
        ));
    }

    #[test]
    fn threshold_accuracy() {
        assert_eq!(best_threshold_accuracy(&[3.0f64, 4.0], &[1.0, 2.0]), 1.0);
        // reversed orientation also counts
        assert_eq!(best_threshold_accuracy(&[1.0f64, 2.0], &[3.0, 4.0]), 1.0);
        // all equal -> majority class
        assert_eq!(best_threshold_accuracy(&[0.0f64, 0.0, 0.0], &[0.0, 0.0]), 0.6);
        assert_eq!(best_threshold_accuracy(&[1.0f64, 3.0], &[-1.0, 1.0]), 0.75);
    }
}
