use super::{check_unit, modified_for, Builder, RowSelection, StepOp, TransformResult};
use crate::embedding::{EmbeddingSnapshot, WordSet};
use crate::error::Result;
use crate::scalar::Scalar;

/// Removes the component along `v` from every row not in `exclude`.
///
/// Rows whose component along `v` is already at rounding level are left
/// untouched, so applying the projection twice is bit-identical to once.
pub fn linear_projection<T: Scalar>(
    snapshot: &EmbeddingSnapshot<T>,
    v: &[T],
    exclude: &WordSet,
) -> Result<TransformResult<T>> {
    let v = check_unit(v, snapshot.dim())?;
    let rows = RowSelection::all_except(snapshot.resolve(exclude.iter())?);
    let modified = modified_for(snapshot, &rows);
    let mut b = Builder::new(snapshot);
    b.apply(
        StepOp::Project { direction: v, rows },
        "project",
        "Remove the component along the concept direction from every word, collapsing them onto its orthogonal complement.",
        modified,
        None,
    );
    Ok(b.finish(None))
}
