use serde::{Deserialize, Serialize};

use super::{Builder, ModifiedTokens, RowSelection, StepOp, TransformResult};
use crate::embedding::{EmbeddingSnapshot, WordSet};
use crate::error::{Error, Result};
use crate::linalg;
use crate::scalar::Scalar;
use crate::subspace::{best_threshold_accuracy, LinearSvm, SvmConfig};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InlpConfig {
    pub max_iters: usize,
    /// Stop once the best threshold accuracy along the normal is at most this.
    pub accuracy_floor: f64,
    #[serde(skip)]
    pub svm: SvmConfig,
}

impl Default for InlpConfig {
    fn default() -> Self {
        Self {
            max_iters: 35,
            accuracy_floor: 0.55,
            svm: SvmConfig::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InlpStop {
    FloorReached,
    IterationCap,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InlpTermination {
    pub rounds: usize,
    pub reason: InlpStop,
    /// Accuracy of the classifier trained after the last projection (for
    /// `FloorReached`) or of the last projected classifier (for `IterationCap`).
    pub final_accuracy: f64,
    /// Accuracy of the first classifier, on the untouched vectors.
    pub initial_accuracy: f64,
}

/// Classifier normal and best threshold accuracy on the current rows, or
/// `None` for the normal when the classifier collapsed (majority accuracy).
fn round_classifier<T: Scalar>(f: &[&[T]], m: &[&[T]], svm: &SvmConfig) -> Result<(Option<Vec<T>>, f64)> {
    let model = LinearSvm::train(f, m, svm)?;
    match model.unit_normal() {
        None => {
            let n = f.len() + m.len();
            Ok((None, f.len().max(m.len()) as f64 / n as f64))
        }
        Some(v) => {
            let fs: Vec<T> = f.iter().map(|x| linalg::dot(&v, x)).collect();
            let ms: Vec<T> = m.iter().map(|x| linalg::dot(&v, x)).collect();
            let acc = best_threshold_accuracy(&fs, &ms);
            Ok((Some(v), acc))
        }
    }
}

/// Iterative nullspace projection: repeatedly train a linear classifier on
/// the current `f`/`m` vectors and project the whole vocabulary along its
/// normal, until the groups are no longer separable above `accuracy_floor`.
pub fn inlp<T: Scalar>(
    snapshot: &EmbeddingSnapshot<T>,
    f: &WordSet,
    m: &WordSet,
    cfg: &InlpConfig,
) -> Result<TransformResult<T>> {
    if f.is_empty() || m.is_empty() {
        return Err(Error::InvalidArgument("both seed groups must be non-empty".into()));
    }
    if let Some(t) = f.iter().find(|t| m.contains(t)) {
        return Err(Error::InvalidArgument(format!("`{t}` is in both seed groups")));
    }
    if cfg.max_iters == 0 {
        return Err(Error::InvalidArgument("max_iters must be at least 1".into()));
    }
    let f_rows = snapshot.resolve(f.iter())?;
    let m_rows = snapshot.resolve(m.iter())?;
    let mut b = Builder::new(snapshot);
    let mut initial = None;
    let mut last = 0.0;

    for round in 0..cfg.max_iters {
        let fv: Vec<&[T]> = f_rows.iter().map(|&r| b.row(r)).collect();
        let mv: Vec<&[T]> = m_rows.iter().map(|&r| b.row(r)).collect();
        let (normal, acc) = round_classifier(&fv, &mv, &cfg.svm)?;
        initial.get_or_insert(acc);
        last = acc;
        let v = match normal {
            Some(v) if acc > cfg.accuracy_floor => v,
            normal => {
                b.note(
                    "stop",
                    format!(
                        "The best classifier now reaches accuracy {acc:.3}, no better than the {:.2} floor; no direction is left to remove.",
                        cfg.accuracy_floor
                    ),
                    normal.into_iter().collect(),
                    Some(acc),
                );
                let term = InlpTermination {
                    rounds: round,
                    reason: InlpStop::FloorReached,
                    final_accuracy: acc,
                    initial_accuracy: initial.unwrap_or(acc),
                };
                return Ok(b.finish(Some(term)));
            }
        };
        b.apply(
            StepOp::Project {
                direction: v,
                rows: RowSelection::AllExcept(Vec::new()),
            },
            format!("round {}", round + 1),
            format!(
                "A linear classifier separates the two groups with accuracy {acc:.3}; project every word along its normal."
            ),
            ModifiedTokens::All,
            Some(acc),
        );
    }
    let term = InlpTermination {
        rounds: cfg.max_iters,
        reason: InlpStop::IterationCap,
        final_accuracy: last,
        initial_accuracy: initial.unwrap_or(last),
    };
    b.note(
        "stop",
        format!("Stopped after the iteration cap of {} rounds.", cfg.max_iters),
        Vec::new(),
        Some(last),
    );
    Ok(b.finish(Some(term)))
}
