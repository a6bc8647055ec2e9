//! Bias scores: WEAT effect size and the Embedding Coherence Test.

use serde::{Deserialize, Serialize};

use crate::embedding::{EmbeddingSnapshot, SnapshotId, WordSet};
use crate::error::{Error, Result};
use crate::linalg;
use crate::scalar::Scalar;

/// Target sets `X`, `Y` and attribute sets `A`, `B`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeatSets {
    pub x: WordSet,
    pub y: WordSet,
    pub a: WordSet,
    pub b: WordSet,
}

impl WeatSets {
    pub fn new(x: WordSet, y: WordSet, a: WordSet, b: WordSet) -> Result<Self> {
        let s = Self { x, y, a, b };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, set) in [("X", &self.x), ("Y", &self.y), ("A", &self.a), ("B", &self.b)] {
            if set.is_empty() {
                return Err(Error::InvalidArgument(format!("WEAT set {name} is empty")));
            }
        }
        if let Some(t) = self.x.iter().find(|t| self.y.contains(t)) {
            return Err(Error::InvalidArgument(format!("`{t}` is in both X and Y")));
        }
        if let Some(t) = self.a.iter().find(|t| self.b.contains(t)) {
            return Err(Error::InvalidArgument(format!("`{t}` is in both A and B")));
        }
        Ok(())
    }

    /// All tokens: X, Y, A, B in order.
    pub fn tokens(&self) -> impl Iterator<Item = &str> {
        self.x
            .iter()
            .chain(self.y.iter())
            .chain(self.a.iter())
            .chain(self.b.iter())
    }
}

/// A metric value plus a flag for degenerate inputs (zero vectors, zero spread).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Score<T> {
    pub value: T,
    #[serde(default)]
    pub degenerate: bool,
}

/// Word sets used for a before/after metric report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricSets {
    pub weat: WeatSets,
    /// ECT compares the means of `weat.x` and `weat.y` against these words.
    pub ect_attributes: WordSet,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricReport<T> {
    pub weat: Score<T>,
    pub ect: Score<T>,
    pub snapshot_id: SnapshotId,
    pub sets: MetricSets,
}

fn cos_or_zero<T: Scalar>(a: &[T], b: &[T], degenerate: &mut bool) -> T {
    match linalg::cosine(a, b) {
        Some(c) => c,
        None => {
            *degenerate = true;
            T::zero()
        }
    }
}

/// WEAT effect size on raw vectors. Uses the population standard deviation of
/// the per-word association scores over `X ∪ Y`; zero spread yields 0 flagged
/// as degenerate.
pub fn weat_effect_size<T: Scalar>(x: &[&[T]], y: &[&[T]], a: &[&[T]], b: &[&[T]]) -> Score<T> {
    let mut degenerate = false;
    let mean_cos = |w: &[T], set: &[&[T]], flag: &mut bool| {
        let sum = set.iter().fold(T::zero(), |acc, v| acc + cos_or_zero(v, w, flag));
        sum / T::count(set.len())
    };
    let mut assoc = |w: &[T]| mean_cos(w, a, &mut degenerate) - mean_cos(w, b, &mut degenerate);
    let sx: Vec<T> = x.iter().map(|w| assoc(w)).collect();
    let sy: Vec<T> = y.iter().map(|w| assoc(w)).collect();

    let mean = |v: &[T]| v.iter().fold(T::zero(), |acc, &s| acc + s) / T::count(v.len());
    let diff = mean(&sx) - mean(&sy);

    // Population variance as the mean squared pairwise difference, summed in
    // sorted order: the result is then invariant (bit for bit) under swapping
    // X/Y or A/B, which keeps the statistic exactly antisymmetric.
    let all: Vec<T> = sx.iter().chain(&sy).copied().collect();
    let n = all.len();
    let mut sq: Vec<T> = Vec::with_capacity(n * (n - 1) / 2);
    for i in 0..n {
        for j in (i + 1)..n {
            let d = all[i] - all[j];
            sq.push(d * d);
        }
    }
    sq.sort_by(|p, q| p.partial_cmp(q).unwrap_or(std::cmp::Ordering::Equal));
    let var = sq.iter().fold(T::zero(), |acc, &s| acc + s) / T::count(n * n);
    let sd = var.sqrt();
    let scale = all.iter().fold(T::one(), |m, s| m.max(s.abs()));
    if sd <= T::epsilon() * scale {
        return Score {
            value: T::zero(),
            degenerate: true,
        };
    }
    Score {
        value: diff / sd,
        degenerate,
    }
}

/// WEAT effect size for `sets` on `snapshot`.
pub fn weat<T: Scalar>(snapshot: &EmbeddingSnapshot<T>, sets: &WeatSets) -> Result<Score<T>> {
    sets.validate()?;
    // resolve everything up front so all missing tokens are reported together
    snapshot.resolve(sets.tokens())?;
    let x = snapshot.get_vectors(&sets.x)?;
    let y = snapshot.get_vectors(&sets.y)?;
    let a = snapshot.get_vectors(&sets.a)?;
    let b = snapshot.get_vectors(&sets.b)?;
    Ok(weat_effect_size(&x, &y, &a, &b))
}

/// Fractional (average) ranks, 1-based.
pub fn average_ranks<T: Scalar>(values: &[T]) -> Vec<T> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&i, &j| values[i].partial_cmp(&values[j]).unwrap_or(std::cmp::Ordering::Equal));
    let mut ranks = vec![T::zero(); values.len()];
    let mut start = 0;
    while start < order.len() {
        let mut end = start + 1;
        while end < order.len() && values[order[end]] == values[order[start]] {
            end += 1;
        }
        // positions start..end share rank (start+1 + end) / 2
        let r = T::count(start + 1 + end) / T::lit(2.0);
        for &i in &order[start..end] {
            ranks[i] = r;
        }
        start = end;
    }
    ranks
}

/// Spearman correlation with average ranks for ties. A constant input has no
/// defined correlation; it is reported as 0 and flagged.
pub fn spearman<T: Scalar>(a: &[T], b: &[T]) -> Score<T> {
    let ra = average_ranks(a);
    let rb = average_ranks(b);
    let n = T::count(a.len());
    let ma = ra.iter().fold(T::zero(), |s, &x| s + x) / n;
    let mb = rb.iter().fold(T::zero(), |s, &x| s + x) / n;
    // canonical summation order so permuting the inputs cannot change the result
    let mut pairs: Vec<(T, T)> = ra.iter().copied().zip(rb.iter().copied()).collect();
    pairs.sort_by(|p, q| p.partial_cmp(q).unwrap_or(std::cmp::Ordering::Equal));
    let mut cov = T::zero();
    let mut va = T::zero();
    let mut vb = T::zero();
    for &(x, y) in &pairs {
        cov += (x - ma) * (y - mb);
        va += (x - ma) * (x - ma);
        vb += (y - mb) * (y - mb);
    }
    if va == T::zero() || vb == T::zero() {
        return Score {
            value: T::zero(),
            degenerate: true,
        };
    }
    let r = cov / (va * vb).sqrt();
    Score {
        value: r.max(-T::one()).min(T::one()),
        degenerate: false,
    }
}

/// ECT on raw vectors: Spearman correlation between the cosine similarities of
/// `mean(x)` and of `mean(y)` to each attribute vector.
pub fn ect_score<T: Scalar>(x: &[&[T]], y: &[&[T]], attributes: &[&[T]]) -> Score<T> {
    let mut degenerate = false;
    let m = linalg::mean(x);
    let f = linalg::mean(y);
    let sm: Vec<T> = attributes.iter().map(|w| cos_or_zero(&m, w, &mut degenerate)).collect();
    let sf: Vec<T> = attributes.iter().map(|w| cos_or_zero(&f, w, &mut degenerate)).collect();
    let mut s = spearman(&sm, &sf);
    s.degenerate |= degenerate;
    s
}

/// Embedding Coherence Test for groups `x`, `y` against `attributes`.
pub fn ect<T: Scalar>(
    snapshot: &EmbeddingSnapshot<T>,
    x: &WordSet,
    y: &WordSet,
    attributes: &WordSet,
) -> Result<Score<T>> {
    if attributes.len() < 2 {
        return Err(Error::InvalidArgument("ECT needs at least 2 attribute words".into()));
    }
    if x.is_empty() || y.is_empty() {
        return Err(Error::InvalidArgument("ECT groups must be non-empty".into()));
    }
    snapshot.resolve(x.iter().chain(y.iter()).chain(attributes.iter()))?;
    let xv = snapshot.get_vectors(x)?;
    let yv = snapshot.get_vectors(y)?;
    let av = snapshot.get_vectors(attributes)?;
    Ok(ect_score(&xv, &yv, &av))
}

/// WEAT and ECT together for one snapshot.
pub fn report<T: Scalar>(snapshot: &EmbeddingSnapshot<T>, sets: &MetricSets) -> Result<MetricReport<T>> {
    let weat = weat(snapshot, &sets.weat)?;
    let ect = ect(snapshot, &sets.weat.x, &sets.weat.y, &sets.ect_attributes)?;
    Ok(MetricReport {
        weat,
        ect,
        snapshot_id: snapshot.id().clone(),
        sets: sets.clone(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ws(tokens: &[&str]) -> WordSet {
        WordSet::new("", tokens.iter().copied()).unwrap()
    }

    #[test]
    fn weat_two_dimensional_hand_example() {
        // s(x)=1, s(y)=-1, population sd 1 -> effect size 2
        let s = weat_effect_size::<f64>(&[&[1.0, 0.0]], &[&[0.0, 1.0]], &[&[1.0, 0.0]], &[&[0.0, 1.0]]);
        assert!((s.value - 2.0).abs() < 1e-15);
        assert!(!s.degenerate);
    }

    #[test]
    fn weat_identical_attributes_is_degenerate_zero() {
        let v: &[f64] = &[0.3, 0.7];
        let s = weat_effect_size(&[v, v], &[v, v], &[&[1.0, 0.0]], &[&[1.0, 0.0]]);
        assert_eq!(s.value, 0.0);
        assert!(s.degenerate);
    }

    #[test]
    fn weat_through_snapshot() {
        let snap = EmbeddingSnapshot::from_rows([
            ("x", vec![1.0f64, 0.0]),
            ("y", vec![0.0, 1.0]),
            ("a", vec![1.0, 0.0]),
            ("b", vec![0.0, 1.0]),
        ])
        .unwrap();
        let sets = WeatSets::new(ws(&["x"]), ws(&["y"]), ws(&["a"]), ws(&["b"])).unwrap();
        assert!((weat(&snap, &sets).unwrap().value - 2.0).abs() < 1e-15);

        let bad = WeatSets {
            x: ws(&["x", "nope"]),
            y: ws(&["y"]),
            a: ws(&["a"]),
            b: ws(&["zip"]),
        };
        match weat(&snap, &bad) {
            Err(Error::UnknownTokens(m)) => assert_eq!(m, vec!["nope", "zip"]),
            other => panic!("{other:?}"),
        }
        assert!(WeatSets::new(ws(&["x"]), ws(&["x"]), ws(&["a"]), ws(&["b"])).is_err());
    }

    #[test]
    fn ect_examples() {
        let snap = EmbeddingSnapshot::from_rows([
            ("m", vec![1.0f64, 0.2]),
            ("f", vec![0.1, 1.0]),
            ("p", vec![1.0, 0.0]),
            ("q", vec![0.0, 1.0]),
            ("r", vec![0.7, 0.7]),
        ])
        .unwrap();
        let same = ect(&snap, &ws(&["m"]), &ws(&["m"]), &ws(&["p", "q", "r"])).unwrap();
        assert_eq!(same.value, 1.0);
        // m is closer to p than q, f the other way round -> opposite order
        let opp = ect(&snap, &ws(&["m"]), &ws(&["f"]), &ws(&["p", "q"])).unwrap();
        assert_eq!(opp.value, -1.0);
        assert!(ect(&snap, &ws(&["m"]), &ws(&["f"]), &ws(&["p"])).is_err());
    }

    #[test]
    fn average_ranks_share_ties() {
        assert_eq!(average_ranks(&[10.0f64, 20.0, 20.0, 5.0]), vec![2.0, 3.5, 3.5, 1.0]);
    }

    #[test]
    fn spearman_of_constant_is_flagged() {
        let s = spearman(&[1.0f64, 1.0, 1.0], &[1.0, 2.0, 3.0]);
        assert!(s.degenerate);
        assert_eq!(s.value, 0.0);
    }
}
