//! One-dimensional concept subspaces identified from seed words.

mod gss;
mod iterative;
mod svm;

pub use gss::{golden_section_search, Minimum, INV_PHI};
pub use iterative::{identify_iterative, IterativeConfig, IterativeOutcome, IterativeStep};
pub use svm::{best_threshold_accuracy, LinearSvm, SvmConfig};

use serde::{Deserialize, Serialize};

use crate::embedding::{EmbeddingSnapshot, PairedWordSet, WordSet};
use crate::error::{Error, Result};
use crate::linalg;
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SubspaceMethod {
    Pca,
    PairedPca,
    TwoMeans,
    ClassifierNormal,
    Iterative,
}

impl std::str::FromStr for SubspaceMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "pca" => Self::Pca,
            "paired-pca" | "paired_pca" => Self::PairedPca,
            "two-means" | "two_means" | "2-means" => Self::TwoMeans,
            "classifier" | "classifier_normal" | "classifier-normal" => Self::ClassifierNormal,
            "iterative" => Self::Iterative,
            other => return Err(Error::InvalidArgument(format!("unknown subspace method `{other}`"))),
        })
    }
}

/// The seed words a direction was computed from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Seeds {
    Single { set: WordSet },
    Groups { f: WordSet, m: WordSet },
    Pairs { pairs: PairedWordSet },
}

impl Seeds {
    /// Every seed token in order (F before M, pairs flattened).
    pub fn tokens(&self) -> Vec<&str> {
        match self {
            Seeds::Single { set } => set.iter().collect(),
            Seeds::Groups { f, m } => f.iter().chain(m.iter()).collect(),
            Seeds::Pairs { pairs } => pairs.tokens().collect(),
        }
    }
}

/// Unit direction in embedding space plus its provenance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConceptDirection<T> {
    pub vector: Vec<T>,
    pub method: SubspaceMethod,
    pub seeds: Seeds,
    pub label: String,
}

impl<T: Scalar> ConceptDirection<T> {
    /// Wraps an arbitrary vector, normalizing it.
    pub fn from_vector(v: &[T], method: SubspaceMethod, seeds: Seeds, label: impl Into<String>) -> Result<Self> {
        let vector = linalg::normalized(v).ok_or_else(|| Error::Degenerate("zero direction".into()))?;
        Ok(Self {
            vector,
            method,
            seeds,
            label: label.into(),
        })
    }

    pub fn dim(&self) -> usize {
        self.vector.len()
    }
}

/// Unit top principal component of the mean-centred seed vectors.
pub fn identify_pca<T: Scalar>(snapshot: &EmbeddingSnapshot<T>, seeds: &WordSet) -> Result<ConceptDirection<T>> {
    if seeds.len() < 2 {
        return Err(Error::InvalidArgument("PCA needs at least 2 seed words".into()));
    }
    let rows = snapshot.get_vectors(seeds)?;
    let axis = linalg::principal_axes(&rows, true, 1)
        .into_iter()
        .next()
        .ok_or_else(|| Error::Degenerate("seed vectors have zero covariance".into()))?;
    Ok(ConceptDirection {
        vector: axis.direction,
        method: SubspaceMethod::Pca,
        seeds: Seeds::Single { set: seeds.clone() },
        label: String::new(),
    })
}

/// Unit top principal component of the (uncentred) pair differences `a - b`.
pub fn identify_paired_pca<T: Scalar>(
    snapshot: &EmbeddingSnapshot<T>,
    pairs: &PairedWordSet,
) -> Result<ConceptDirection<T>> {
    if pairs.is_empty() {
        return Err(Error::InvalidArgument("paired PCA needs at least one pair".into()));
    }
    let idx = snapshot.resolve(pairs.tokens())?;
    let diffs: Vec<Vec<T>> = idx
        .chunks_exact(2)
        .map(|p| linalg::sub(snapshot.row(p[0]), snapshot.row(p[1])))
        .collect();
    let refs: Vec<&[T]> = diffs.iter().map(Vec::as_slice).collect();
    let axis = linalg::principal_axes(&refs, false, 1)
        .into_iter()
        .next()
        .ok_or_else(|| Error::Degenerate("all pair differences are zero".into()))?;
    Ok(ConceptDirection {
        vector: axis.direction,
        method: SubspaceMethod::PairedPca,
        seeds: Seeds::Pairs { pairs: pairs.clone() },
        label: String::new(),
    })
}

type GroupRows<'s, T> = (Vec<&'s [T]>, Vec<&'s [T]>);

fn group_vectors<'s, T: Scalar>(
    snapshot: &'s EmbeddingSnapshot<T>,
    f: &WordSet,
    m: &WordSet,
) -> Result<GroupRows<'s, T>> {
    if f.is_empty() || m.is_empty() {
        return Err(Error::InvalidArgument("both seed groups must be non-empty".into()));
    }
    snapshot.resolve(f.iter().chain(m.iter()))?;
    Ok((snapshot.get_vectors(f)?, snapshot.get_vectors(m)?))
}

/// `(f - m) / ||f - m||` for two group centroids, or a degenerate error when they coincide.
pub(crate) fn normalized_difference<T: Scalar>(f: &[T], m: &[T]) -> Result<Vec<T>> {
    let diff = linalg::sub(f, m);
    linalg::normalized(&diff).ok_or_else(|| Error::Degenerate("group means coincide".into()))
}

/// Normalized difference of the group means, pointing from `m` to `f`.
pub fn identify_two_means<T: Scalar>(
    snapshot: &EmbeddingSnapshot<T>,
    f: &WordSet,
    m: &WordSet,
) -> Result<ConceptDirection<T>> {
    let (fv, mv) = group_vectors(snapshot, f, m)?;
    let vector = normalized_difference(&linalg::mean(&fv), &linalg::mean(&mv))?;
    Ok(ConceptDirection {
        vector,
        method: SubspaceMethod::TwoMeans,
        seeds: Seeds::Groups {
            f: f.clone(),
            m: m.clone(),
        },
        label: String::new(),
    })
}

/// Unit normal of a linear SVM separating `f` (positive side) from `m`.
pub fn identify_classifier_normal<T: Scalar>(
    snapshot: &EmbeddingSnapshot<T>,
    f: &WordSet,
    m: &WordSet,
) -> Result<ConceptDirection<T>> {
    if let Some(t) = f.iter().find(|t| m.contains(t)) {
        return Err(Error::InvalidArgument(format!("`{t}` is in both seed groups")));
    }
    let (fv, mv) = group_vectors(snapshot, f, m)?;
    let svm = LinearSvm::train(&fv, &mv, &SvmConfig::default())?;
    let vector = svm
        .unit_normal()
        .ok_or_else(|| Error::Degenerate("classifier normal is zero".into()))?;
    Ok(ConceptDirection {
        vector,
        method: SubspaceMethod::ClassifierNormal,
        seeds: Seeds::Groups {
            f: f.clone(),
            m: m.clone(),
        },
        label: String::new(),
    })
}
