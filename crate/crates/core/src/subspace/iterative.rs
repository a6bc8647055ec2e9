use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::{group_vectors, normalized_difference, ConceptDirection, Seeds, SubspaceMethod};
use crate::embedding::{EmbeddingSnapshot, WordSet};
use crate::error::{Error, Result};
use crate::linalg;
use crate::metrics::{weat_effect_size, WeatSets};
use crate::scalar::Scalar;

use super::gss::golden_section_search;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterativeConfig {
    #[serde(default = "default_rounds")]
    pub rounds: usize,
    #[serde(default = "default_tolerance")]
    pub gss_tolerance: f64,
    /// Sets whose post-projection WEAT magnitude is minimized.
    pub weat: WeatSets,
}

fn default_rounds() -> usize {
    2
}

fn default_tolerance() -> f64 {
    1e-3
}

impl IterativeConfig {
    pub fn new(weat: WeatSets) -> Self {
        Self {
            rounds: default_rounds(),
            gss_tolerance: default_tolerance(),
            weat,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.rounds == 0 {
            return Err(Error::InvalidArgument("rounds must be at least 1".into()));
        }
        if !(self.gss_tolerance > 0.0 && self.gss_tolerance < 1.0) {
            return Err(Error::InvalidArgument(format!(
                "gss_tolerance must lie in (0, 1), got {}",
                self.gss_tolerance
            )));
        }
        self.weat.validate()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SeedGroup {
    F,
    M,
}

/// One inner update: the centroid of `group` moved a fraction `alpha` toward `token`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterativeStep<T> {
    pub round: usize,
    pub group: SeedGroup,
    pub token: String,
    pub alpha: T,
    pub objective: T,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterativeOutcome<T> {
    pub direction: ConceptDirection<T>,
    /// Objective at the two-means starting point.
    pub initial_objective: T,
    pub final_objective: T,
    pub steps: Vec<IterativeStep<T>>,
}

struct Objective<'s, T> {
    x: Vec<&'s [T]>,
    y: Vec<&'s [T]>,
    a: Vec<&'s [T]>,
    b: Vec<&'s [T]>,
}

impl<T: Scalar> Objective<'_, T> {
    /// `|WEAT|` after projecting the WEAT words along `f - m`; a degenerate
    /// direction scores `T::max_value()`.
    fn eval(&self, f: &[T], m: &[T]) -> T {
        let Ok(v) = normalized_difference(f, m) else {
            return T::max_value();
        };
        let proj = |rows: &[&[T]]| -> Vec<Vec<T>> { rows.iter().map(|r| linalg::project_out(r, &v)).collect() };
        let (x, y, a, b) = (proj(&self.x), proj(&self.y), proj(&self.a), proj(&self.b));
        weat_effect_size(&refs(&x), &refs(&y), &refs(&a), &refs(&b)).value.abs()
    }
}

fn refs<T>(rows: &[Vec<T>]) -> Vec<&[T]> {
    rows.iter().map(Vec::as_slice).collect()
}

fn lerp<T: Scalar>(from: &[T], to: &[T], alpha: T) -> Vec<T> {
    from.iter()
        .zip(to)
        .map(|(&p, &q)| (T::one() - alpha) * p + alpha * q)
        .collect()
}

/// Refines the two-means direction by moving each group centroid toward its
/// seed words one at a time, choosing each step by golden-section search on
/// the post-projection WEAT magnitude.
///
/// Each round first walks `m` through the tokens of `m_set` in order, then
/// `f` through `f_set`. A step is accepted only if it strictly improves the
/// objective, so the result is never worse than the starting point.
pub fn identify_iterative<T: Scalar>(
    snapshot: &EmbeddingSnapshot<T>,
    f_set: &WordSet,
    m_set: &WordSet,
    cfg: &IterativeConfig,
) -> Result<IterativeOutcome<T>> {
    cfg.validate()?;
    snapshot.resolve(f_set.iter().chain(m_set.iter()).chain(cfg.weat.tokens()))?;
    let (fv, mv) = group_vectors(snapshot, f_set, m_set)?;
    let objective = Objective {
        x: snapshot.get_vectors(&cfg.weat.x)?,
        y: snapshot.get_vectors(&cfg.weat.y)?,
        a: snapshot.get_vectors(&cfg.weat.a)?,
        b: snapshot.get_vectors(&cfg.weat.b)?,
    };

    let mut f = linalg::mean(&fv);
    let mut m = linalg::mean(&mv);
    normalized_difference(&f, &m)?;
    let initial = objective.eval(&f, &m);
    let mut best = initial;
    let tol = T::lit(cfg.gss_tolerance);
    let mut steps = Vec::new();

    for round in 0..cfg.rounds {
        for group in [SeedGroup::M, SeedGroup::F] {
            let (rows, set) = match group {
                SeedGroup::M => (&mv, m_set),
                SeedGroup::F => (&fv, f_set),
            };
            for (x, token) in rows.iter().zip(set.iter()) {
                let current = match group {
                    SeedGroup::M => m.clone(),
                    SeedGroup::F => f.clone(),
                };
                if current.as_slice() == *x {
                    continue;
                }
                let mut memo: HashMap<u64, T> = HashMap::new();
                let mut score = |alpha: T| -> T {
                    let key = alpha.to_f64_lossy().to_bits();
                    *memo.entry(key).or_insert_with(|| {
                        let moved = lerp(&current, x, alpha);
                        match group {
                            SeedGroup::M => objective.eval(&f, &moved),
                            SeedGroup::F => objective.eval(&moved, &m),
                        }
                    })
                };
                let min = golden_section_search(&mut score, T::zero(), T::one(), tol)?;
                let end = score(T::one());
                let (alpha, value) = if end < min.value {
                    (T::one(), end)
                } else {
                    (min.argmin, min.value)
                };
                if value < best {
                    best = value;
                    let moved = lerp(&current, x, alpha);
                    match group {
                        SeedGroup::M => m = moved,
                        SeedGroup::F => f = moved,
                    }
                    steps.push(IterativeStep {
                        round,
                        group,
                        token: token.to_string(),
                        alpha,
                        objective: value,
                    });
                }
            }
        }
    }

    let vector = normalized_difference(&f, &m)?;
    Ok(IterativeOutcome {
        direction: ConceptDirection {
            vector,
            method: SubspaceMethod::Iterative,
            seeds: Seeds::Groups {
                f: f_set.clone(),
                m: m_set.clone(),
            },
            label: String::new(),
        },
        initial_objective: initial,
        final_objective: best,
        steps,
    })
}
