//! Bias-mitigation transforms.
//!
//! Every transform is recorded as a list of [`StepOp`]s, each a pure function
//! of one row. Applying the ops in order to any subset of rows reproduces the
//! transformed rows bit for bit, which is how the view pipeline draws
//! intermediate states without copying the whole matrix per step.

mod hd;
mod inlp;
mod job;
mod lp;
mod oscar;

pub use hd::{hard_debias, HdTargets};
pub use inlp::{inlp, InlpConfig, InlpStop, InlpTermination};
pub use job::{identify_direction, run_job, DebiasJob, HdScope, IterativeSettings, JobOutput, JobSeeds, Method};
pub use lp::linear_projection;
pub use oscar::{oscar, oscar_angle, oscar_target, OscarPlane};

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::embedding::{EmbeddingSnapshot, SnapshotId};
use crate::error::{Error, Result};
use crate::linalg;
use crate::scalar::Scalar;

/// Rows an operation applies to, as sorted row indices.
#[derive(Debug, Clone, PartialEq)]
pub enum RowSelection {
    AllExcept(Vec<usize>),
    Only(Vec<usize>),
}

impl RowSelection {
    pub fn all_except(mut rows: Vec<usize>) -> Self {
        rows.sort_unstable();
        rows.dedup();
        Self::AllExcept(rows)
    }

    pub fn only(mut rows: Vec<usize>) -> Self {
        rows.sort_unstable();
        rows.dedup();
        Self::Only(rows)
    }

    pub fn contains(&self, row: usize) -> bool {
        match self {
            Self::AllExcept(r) => r.binary_search(&row).is_err(),
            Self::Only(r) => r.binary_search(&row).is_ok(),
        }
    }
}

/// One replayable row operation.
#[derive(Debug, Clone, PartialEq)]
pub enum StepOp<T> {
    /// `x - <v, x> v` on the selected rows.
    Project { direction: Vec<T>, rows: RowSelection },
    /// Replaces the listed rows (sorted by index) with precomputed vectors.
    Equalize {
        direction: Vec<T>,
        rows: Vec<(usize, Vec<T>)>,
    },
    /// Graded in-plane rotation on every row.
    Rotate(OscarPlane<T>),
}

/// Removes the component of `row` along unit `v`, leaving rows already
/// orthogonal to `v` up to rounding untouched so a second pass is a no-op.
pub(crate) fn project_row<T: Scalar>(v: &[T], row: &mut [T]) {
    let c = linalg::dot(v, row);
    let slack = T::count(4 * row.len() + 8) * T::epsilon() * linalg::norm(row);
    if c.abs() <= slack {
        return;
    }
    linalg::axpy(-c, v, row);
}

impl<T: Scalar> StepOp<T> {
    /// Applies this op to row `index` in place.
    pub fn apply_row(&self, index: usize, row: &mut [T]) {
        match self {
            StepOp::Project { direction, rows } => {
                if rows.contains(index) {
                    project_row(direction, row);
                }
            }
            StepOp::Equalize { rows, .. } => {
                if let Ok(i) = rows.binary_search_by_key(&index, |(r, _)| *r) {
                    row.copy_from_slice(&rows[i].1);
                }
            }
            StepOp::Rotate(plane) => plane.rotate(row),
        }
    }

    /// Applies this op to a free vector that is not a vocabulary row
    /// (such as a concept direction): selections and replacements do not apply.
    pub fn apply_free(&self, v: &mut [T]) {
        match self {
            StepOp::Project { direction, .. } => project_row(direction, v),
            StepOp::Equalize { .. } => {}
            StepOp::Rotate(plane) => plane.rotate(v),
        }
    }

    /// Stable textual fingerprint used to derive snapshot ids.
    fn fingerprint(&self) -> String {
        fn bits<T: Scalar>(out: &mut String, v: &[T]) {
            for x in v {
                let _ = write!(out, "{:x},", x.to_f64_lossy().to_bits());
            }
            out.push(';');
        }
        let mut s = String::new();
        match self {
            StepOp::Project { direction, rows } => {
                let (tag, idx) = match rows {
                    RowSelection::AllExcept(r) => ("except", r),
                    RowSelection::Only(r) => ("only", r),
                };
                let _ = write!(s, "project;{tag}:{idx:?};");
                bits(&mut s, direction);
            }
            StepOp::Equalize { direction, rows } => {
                s.push_str("equalize;");
                bits(&mut s, direction);
                for (r, v) in rows {
                    let _ = write!(s, "{r}:");
                    bits(&mut s, v);
                }
            }
            StepOp::Rotate(p) => {
                s.push_str("rotate;");
                bits(&mut s, &p.u1);
                bits(&mut s, &p.u2);
                bits(&mut s, &[p.phi1]);
            }
        }
        s
    }
}

/// Which tokens a step changed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModifiedTokens {
    None,
    All,
    AllExcept(Vec<String>),
    Only(Vec<String>),
}

/// Human-readable record of one transform step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepDescriptor<T> {
    pub label: String,
    pub description: String,
    /// Directions in effect during this step.
    pub directions: Vec<Vec<T>>,
    pub modified: ModifiedTokens,
    /// Classifier accuracy that justified (or stopped) this step.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub accuracy: Option<f64>,
    /// Index into [`TransformResult::ops`] if this step changed vectors.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub op_index: Option<usize>,
    /// Snapshot state after this step.
    pub snapshot_id: SnapshotId,
}

#[derive(Debug, Clone)]
pub struct TransformResult<T> {
    pub output: EmbeddingSnapshot<T>,
    pub steps: Vec<StepDescriptor<T>>,
    pub ops: Vec<StepOp<T>>,
    /// Stopping details, for nullspace projection only.
    pub termination: Option<InlpTermination>,
}

impl<T: Scalar> TransformResult<T> {
    /// Snapshot id after each op, in order.
    pub fn op_snapshot_ids(&self) -> Vec<SnapshotId> {
        let mut ids = vec![None; self.ops.len()];
        for s in &self.steps {
            if let Some(i) = s.op_index {
                ids[i] = Some(s.snapshot_id.clone());
            }
        }
        ids.into_iter().map(|i| i.expect("every op has a step")).collect()
    }
}

/// Accumulates ops over a working copy of the matrix.
pub(crate) struct Builder<'s, T> {
    base: &'s EmbeddingSnapshot<T>,
    data: Vec<T>,
    id: SnapshotId,
    ops: Vec<StepOp<T>>,
    steps: Vec<StepDescriptor<T>>,
}

impl<'s, T: Scalar> Builder<'s, T> {
    pub fn new(base: &'s EmbeddingSnapshot<T>) -> Self {
        Self {
            base,
            data: base.data().to_vec(),
            id: base.id().clone(),
            ops: Vec::new(),
            steps: Vec::new(),
        }
    }

    pub fn row(&self, i: usize) -> &[T] {
        let d = self.base.dim();
        &self.data[i * d..(i + 1) * d]
    }

    pub fn apply(
        &mut self,
        op: StepOp<T>,
        label: impl Into<String>,
        description: impl Into<String>,
        modified: ModifiedTokens,
        accuracy: Option<f64>,
    ) {
        let d = self.base.dim();
        for (i, row) in self.data.chunks_exact_mut(d).enumerate() {
            op.apply_row(i, row);
        }
        self.id = self.id.derive(&op.fingerprint());
        let directions = match &op {
            StepOp::Project { direction, .. } | StepOp::Equalize { direction, .. } => vec![direction.clone()],
            StepOp::Rotate(p) => vec![p.u1.clone(), p.v2.clone()],
        };
        self.steps.push(StepDescriptor {
            label: label.into(),
            description: description.into(),
            directions,
            modified,
            accuracy,
            op_index: Some(self.ops.len()),
            snapshot_id: self.id.clone(),
        });
        self.ops.push(op);
    }

    /// Records a step that changes nothing (e.g. a stopping check).
    pub fn note(
        &mut self,
        label: impl Into<String>,
        description: impl Into<String>,
        directions: Vec<Vec<T>>,
        accuracy: Option<f64>,
    ) {
        self.steps.push(StepDescriptor {
            label: label.into(),
            description: description.into(),
            directions,
            modified: ModifiedTokens::None,
            accuracy,
            op_index: None,
            snapshot_id: self.id.clone(),
        });
    }

    pub fn finish(self, termination: Option<InlpTermination>) -> TransformResult<T> {
        let output = self.base.derive_with_id(self.id, self.data);
        TransformResult {
            output,
            steps: self.steps,
            ops: self.ops,
            termination,
        }
    }
}

/// Accepts a unit direction; renormalizes (with a warning) within `1e-6`,
/// otherwise rejects it.
pub fn check_unit<T: Scalar>(v: &[T], dim: usize) -> Result<Vec<T>> {
    if v.len() != dim {
        return Err(Error::DimensionMismatch {
            line: 0,
            expected: dim,
            found: v.len(),
        });
    }
    let n = linalg::norm(v);
    let dev = (n - T::one()).abs();
    if dev <= T::epsilon() * T::lit(16.0) {
        return Ok(v.to_vec());
    }
    if dev <= T::unit_tolerance() {
        log::warn!("direction norm {n} is not exactly 1; renormalizing");
        return Ok(v.iter().map(|&x| x / n).collect());
    }
    Err(Error::NonUnitDirection { norm: n.to_f64_lossy() })
}

pub(crate) fn token_list<T: Scalar>(snapshot: &EmbeddingSnapshot<T>, rows: &[usize]) -> Vec<String> {
    rows.iter().map(|&r| snapshot.tokens()[r].clone()).collect()
}

pub(crate) fn modified_for<T: Scalar>(snapshot: &EmbeddingSnapshot<T>, sel: &RowSelection) -> ModifiedTokens {
    match sel {
        RowSelection::AllExcept(r) if r.is_empty() => ModifiedTokens::All,
        RowSelection::AllExcept(r) => ModifiedTokens::AllExcept(token_list(snapshot, r)),
        RowSelection::Only(r) => ModifiedTokens::Only(token_list(snapshot, r)),
    }
}
