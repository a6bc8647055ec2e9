use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use super::{check_unit, modified_for, token_list, Builder, ModifiedTokens, RowSelection, StepOp, TransformResult};
use crate::embedding::{EmbeddingSnapshot, PairedWordSet, WordSet};
use crate::error::{Error, Result};
use crate::linalg;
use crate::scalar::Scalar;

/// Which words hard debiasing projects (besides equalizing the pairs).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HdTargets {
    /// Every word except the definitional and equalize words.
    All,
    /// Only these words (definitional and equalize words are still skipped).
    Only(WordSet),
}

/// Equalized pair `(a', b')`: the midpoint loses its `v` component while the
/// signed separation along `v` is kept.
pub(crate) fn equalize_pair<T: Scalar>(v: &[T], a: &[T], b: &[T]) -> (Vec<T>, Vec<T>) {
    let two = T::lit(2.0);
    let mu: Vec<T> = a.iter().zip(b).map(|(&x, &y)| (x + y) / two).collect();
    let nu = linalg::project_out(&mu, v);
    let half = (linalg::dot(a, v) - linalg::dot(b, v)) / two;
    let pa = nu.iter().zip(v).map(|(&n, &vi)| n + half * vi).collect();
    let pb = nu.iter().zip(v).map(|(&n, &vi)| n - half * vi).collect();
    (pa, pb)
}

/// Hard debiasing: project every non-definitional word along `v`, then
/// re-center each equalize pair on the orthogonal complement.
pub fn hard_debias<T: Scalar>(
    snapshot: &EmbeddingSnapshot<T>,
    v: &[T],
    definitional: &WordSet,
    equalize: &PairedWordSet,
    targets: &HdTargets,
) -> Result<TransformResult<T>> {
    let v = check_unit(v, snapshot.dim())?;
    if let Some(t) = equalize.tokens().find(|t| definitional.contains(t)) {
        return Err(Error::InvalidArgument(format!(
            "`{t}` is both definitional and in an equalize pair"
        )));
    }
    let mut seen = HashSet::new();
    if let Some(t) = equalize.tokens().find(|t| !seen.insert(*t)) {
        return Err(Error::InvalidArgument(format!(
            "`{t}` appears in more than one equalize pair"
        )));
    }
    let def_rows = snapshot.resolve(definitional.iter())?;
    let pair_rows = snapshot.resolve(equalize.tokens())?;
    let fixed: HashSet<usize> = def_rows.iter().chain(&pair_rows).copied().collect();
    let rows = match targets {
        HdTargets::All => RowSelection::all_except(fixed.iter().copied().collect()),
        HdTargets::Only(set) => RowSelection::only(
            snapshot
                .resolve(set.iter())?
                .into_iter()
                .filter(|r| !fixed.contains(r))
                .collect(),
        ),
    };

    let mut equalized: Vec<(usize, Vec<T>)> = Vec::with_capacity(pair_rows.len());
    for p in pair_rows.chunks_exact(2) {
        let (a, b) = equalize_pair(&v, snapshot.row(p[0]), snapshot.row(p[1]));
        equalized.push((p[0], a));
        equalized.push((p[1], b));
    }
    equalized.sort_by_key(|(r, _)| *r);

    let modified = modified_for(snapshot, &rows);
    let mut b = Builder::new(snapshot);
    b.apply(
        StepOp::Project {
            direction: v.clone(),
            rows,
        },
        "project",
        "Project every word except the definitional words and the equalize pairs onto the orthogonal complement of the concept direction.",
        modified,
        None,
    );
    b.apply(
        StepOp::Equalize { direction: v, rows: equalized },
        "equalize",
        "Move each equalize pair so its midpoint has no component along the concept direction, keeping the pair as far apart along it as before.",
        ModifiedTokens::Only(token_list(snapshot, &pair_rows)),
        None,
    );
    Ok(b.finish(None))
}
