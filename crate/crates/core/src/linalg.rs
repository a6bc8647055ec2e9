//! Small dense linear-algebra kernels over slices.
//!
//! Everything here is deterministic: fixed loop orders, no threading, so the
//! same inputs always produce bit-identical outputs.

use crate::scalar::Scalar;

#[inline]
pub fn dot<T: Scalar>(a: &[T], b: &[T]) -> T {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).fold(T::zero(), |acc, (&x, &y)| acc + x * y)
}

#[inline]
pub fn norm<T: Scalar>(a: &[T]) -> T {
    dot(a, a).sqrt()
}

pub fn sub<T: Scalar>(a: &[T], b: &[T]) -> Vec<T> {
    a.iter().zip(b).map(|(&x, &y)| x - y).collect()
}

pub fn scaled<T: Scalar>(a: &[T], s: T) -> Vec<T> {
    a.iter().map(|&x| x * s).collect()
}

/// `y += alpha * x`
#[inline]
pub fn axpy<T: Scalar>(alpha: T, x: &[T], y: &mut [T]) {
    for (yi, &xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

/// `x - <v, x> v`, the component of `x` orthogonal to unit `v`.
pub fn project_out<T: Scalar>(x: &[T], v: &[T]) -> Vec<T> {
    let c = dot(v, x);
    x.iter().zip(v).map(|(&xi, &vi)| xi - c * vi).collect()
}

/// Returns `a / ||a||`, or `None` for a (numerically) zero vector.
pub fn normalized<T: Scalar>(a: &[T]) -> Option<Vec<T>> {
    let n = norm(a);
    if n.is_nan() || n <= T::min_positive_value() || !n.is_finite() {
        return None;
    }
    Some(a.iter().map(|&x| x / n).collect())
}

/// Cosine similarity. `None` when either vector is zero.
pub fn cosine<T: Scalar>(a: &[T], b: &[T]) -> Option<T> {
    let na = norm(a);
    let nb = norm(b);
    if na == T::zero() || nb == T::zero() {
        return None;
    }
    let c = dot(a, b) / (na * nb);
    Some(c.max(-T::one()).min(T::one()))
}

/// Component-wise mean of a non-empty list of rows.
pub fn mean<T: Scalar>(rows: &[&[T]]) -> Vec<T> {
    let d = rows[0].len();
    let mut acc = vec![T::zero(); d];
    for r in rows {
        for (a, &x) in acc.iter_mut().zip(r.iter()) {
            *a += x;
        }
    }
    let n = T::count(rows.len());
    acc.iter_mut().for_each(|a| *a /= n);
    acc
}

/// Flips `v` so that its largest-magnitude component is positive.
/// Ties go to the lowest index.
pub fn canonicalize_sign<T: Scalar>(v: &mut [T]) {
    let mut best = 0;
    for (i, x) in v.iter().enumerate() {
        if x.abs() > v[best].abs() {
            best = i;
        }
    }
    if v.get(best).is_some_and(|x| *x < T::zero()) {
        v.iter_mut().for_each(|x| *x = -*x);
    }
}

/// Symmetric eigendecomposition by the cyclic Jacobi method.
///
/// `a` is a row-major `n x n` symmetric matrix. Returns eigenvalues in
/// descending order and the matching unit eigenvectors.
pub fn symmetric_eigen<T: Scalar>(a: &[T], n: usize) -> (Vec<T>, Vec<Vec<T>>) {
    assert_eq!(a.len(), n * n);
    let mut m = a.to_vec();
    let mut v = vec![T::zero(); n * n];
    for i in 0..n {
        v[i * n + i] = T::one();
    }

    let scale = m.iter().fold(T::zero(), |acc, x| acc + *x * *x).sqrt();
    let two = T::lit(2.0);
    for _sweep in 0..100 {
        let off = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .fold(T::zero(), |acc, (i, j)| acc + m[i * n + j] * m[i * n + j]);
        if off.sqrt() <= T::epsilon() * scale || off == T::zero() {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = m[p * n + q];
                if apq == T::zero() {
                    continue;
                }
                let app = m[p * n + p];
                let aqq = m[q * n + q];
                let theta = (aqq - app) / (two * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + T::one()).sqrt());
                let c = T::one() / (t * t + T::one()).sqrt();
                let s = t * c;
                for k in 0..n {
                    let mkp = m[k * n + p];
                    let mkq = m[k * n + q];
                    m[k * n + p] = c * mkp - s * mkq;
                    m[k * n + q] = s * mkp + c * mkq;
                }
                for k in 0..n {
                    let mpk = m[p * n + k];
                    let mqk = m[q * n + k];
                    m[p * n + k] = c * mpk - s * mqk;
                    m[q * n + k] = s * mpk + c * mqk;
                }
                for k in 0..n {
                    let vkp = v[k * n + p];
                    let vkq = v[k * n + q];
                    v[k * n + p] = c * vkp - s * vkq;
                    v[k * n + q] = s * vkp + c * vkq;
                }
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    // stable sort keeps index order among equal eigenvalues
    order.sort_by(|&i, &j| {
        m[j * n + j]
            .partial_cmp(&m[i * n + i])
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    let values = order.iter().map(|&i| m[i * n + i]).collect();
    let vectors = order.iter().map(|&j| (0..n).map(|k| v[k * n + j]).collect()).collect();
    (values, vectors)
}

/// A principal axis: unit direction and the variance-like eigenvalue behind it.
#[derive(Debug, Clone)]
pub struct PrincipalAxis<T> {
    pub direction: Vec<T>,
    pub eigenvalue: T,
}

/// Top-`k` principal axes of `rows` (second-moment matrix, optionally after
/// mean-centering). Uses the `n x n` Gram matrix when there are fewer rows than
/// dimensions and the `d x d` scatter matrix otherwise. Axes with a numerically
/// zero eigenvalue are dropped, so fewer than `k` may be returned. Signs are
/// canonicalized.
pub fn principal_axes<T: Scalar>(rows: &[&[T]], center: bool, k: usize) -> Vec<PrincipalAxis<T>> {
    if rows.is_empty() {
        return Vec::new();
    }
    let d = rows[0].len();
    let n = rows.len();
    let data: Vec<Vec<T>> = if center {
        let mu = mean(rows);
        rows.iter().map(|r| sub(r, &mu)).collect()
    } else {
        rows.iter().map(|r| r.to_vec()).collect()
    };
    let total: T = data.iter().map(|r| dot(r, r)).fold(T::zero(), |a, b| a + b);
    if total == T::zero() {
        return Vec::new();
    }
    let cutoff = total * T::epsilon() * T::count(n.max(d)) * T::lit(16.0);

    let mut axes = Vec::new();
    if n <= d {
        let mut gram = vec![T::zero(); n * n];
        for i in 0..n {
            for j in i..n {
                let g = dot(&data[i], &data[j]);
                gram[i * n + j] = g;
                gram[j * n + i] = g;
            }
        }
        let (vals, vecs) = symmetric_eigen(&gram, n);
        for (lambda, u) in vals.into_iter().zip(vecs).take(k) {
            if lambda <= cutoff {
                break;
            }
            let mut dir = vec![T::zero(); d];
            for (ui, row) in u.iter().zip(&data) {
                axpy(*ui, row, &mut dir);
            }
            if let Some(mut dir) = normalized(&dir) {
                canonicalize_sign(&mut dir);
                axes.push(PrincipalAxis {
                    direction: dir,
                    eigenvalue: lambda,
                });
            }
        }
    } else {
        let mut scatter = vec![T::zero(); d * d];
        for row in &data {
            for i in 0..d {
                let ri = row[i];
                for j in i..d {
                    scatter[i * d + j] += ri * row[j];
                }
            }
        }
        for i in 0..d {
            for j in 0..i {
                scatter[i * d + j] = scatter[j * d + i];
            }
        }
        let (vals, vecs) = symmetric_eigen(&scatter, d);
        for (lambda, mut dir) in vals.into_iter().zip(vecs).take(k) {
            if lambda <= cutoff {
                break;
            }
            canonicalize_sign(&mut dir);
            axes.push(PrincipalAxis {
                direction: dir,
                eigenvalue: lambda,
            });
        }
    }
    axes
}

/// Removes from `v` its components along each (unit) vector in `basis`, then
/// normalizes. `None` if nothing is left.
pub fn orthogonalize<T: Scalar>(v: &[T], basis: &[&[T]]) -> Option<Vec<T>> {
    let mut out = v.to_vec();
    // two passes of modified Gram-Schmidt
    for _ in 0..2 {
        for b in basis {
            let c = dot(&out, b);
            axpy(-c, b, &mut out);
        }
    }
    let n = norm(&out);
    if n <= T::lit(1e-7) * norm(v).max(T::one()) {
        return None;
    }
    out.iter_mut().for_each(|x| *x /= n);
    Some(out)
}

/// Deterministic unit vector orthogonal to every vector in `basis`:
/// the first standard basis vector (by smallest overlap) that survives
/// orthogonalization.
pub fn any_orthogonal<T: Scalar>(d: usize, basis: &[&[T]]) -> Vec<T> {
    let mut candidates: Vec<usize> = (0..d).collect();
    let overlap = |i: usize| basis.iter().fold(T::zero(), |acc, b| acc + b[i].abs());
    candidates.sort_by(|&i, &j| overlap(i).partial_cmp(&overlap(j)).unwrap_or(std::cmp::Ordering::Equal));
    for i in candidates {
        let mut e = vec![T::zero(); d];
        e[i] = T::one();
        if let Some(mut u) = orthogonalize(&e, basis) {
            canonicalize_sign(&mut u);
            return u;
        }
    }
    unreachable!("basis of fewer than d vectors always has an orthogonal complement")
}
