//! Subspace-selection comparison: each identification method on name lists,
//! followed by linear projection, scored with ECT and the adjective WEAT.

use serde::{Deserialize, Serialize};

use crate::embedding::{EmbeddingSnapshot, WordSet};
use crate::error::Result;
use crate::metrics::{report, MetricSets, WeatSets};
use crate::presets;
use crate::scalar::Scalar;
use crate::subspace::{
    identify_classifier_normal, identify_iterative, identify_pca, identify_two_means, IterativeConfig,
};
use crate::transforms::linear_projection;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonConfig {
    pub names_f: WordSet,
    pub names_m: WordSet,
    /// Objective for the iterative method.
    pub training: WeatSets,
    /// Sets the rows are scored with.
    pub test: MetricSets,
    pub rounds: usize,
    pub gss_tolerance: f64,
}

impl Default for ComparisonConfig {
    fn default() -> Self {
        Self {
            names_f: presets::female_names(),
            names_m: presets::male_names(),
            training: presets::gender_weat(),
            test: MetricSets {
                weat: presets::adjective_weat(),
                ect_attributes: presets::occupations(),
            },
            rounds: 2,
            gss_tolerance: 1e-3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonRow {
    pub method: String,
    pub ect: f64,
    pub weat: f64,
}

/// Rows in order: baseline, PCA, 2-means, classifier, iterative.
pub fn compare_subspaces<T: Scalar>(
    snapshot: &EmbeddingSnapshot<T>,
    cfg: &ComparisonConfig,
) -> Result<Vec<ComparisonRow>> {
    let (f, m) = (&cfg.names_f, &cfg.names_m);
    snapshot.resolve(
        f.iter()
            .chain(m.iter())
            .chain(cfg.training.tokens())
            .chain(cfg.test.weat.tokens())
            .chain(cfg.test.ect_attributes.iter()),
    )?;
    let row = |method: &str, s: &EmbeddingSnapshot<T>| -> Result<ComparisonRow> {
        let r = report(s, &cfg.test)?;
        Ok(ComparisonRow {
            method: method.to_string(),
            ect: r.ect.value.to_f64_lossy(),
            weat: r.weat.value.to_f64_lossy(),
        })
    };
    let none = WordSet::new("none", Vec::<String>::new())?;
    let after_lp = |method: &str, v: &[T]| -> Result<ComparisonRow> {
        let out = linear_projection(snapshot, v, &none)?;
        row(method, &out.output)
    };

    let union = WordSet::new("names", f.iter().chain(m.iter()).map(str::to_string))?;
    let iterative_cfg = IterativeConfig {
        rounds: cfg.rounds,
        gss_tolerance: cfg.gss_tolerance,
        ..IterativeConfig::new(cfg.training.clone())
    };
    Ok(vec![
        row("Baseline", snapshot)?,
        after_lp("PCA", &identify_pca(snapshot, &union)?.vector)?,
        after_lp("2-means", &identify_two_means(snapshot, f, m)?.vector)?,
        after_lp(
            "Classifier (1-step)",
            &identify_classifier_normal(snapshot, f, m)?.vector,
        )?,
        after_lp(
            "Iterative Subspace",
            &identify_iterative(snapshot, f, m, &iterative_cfg)?.direction.vector,
        )?,
    ])
}

/// Plain-text table with one row per method.
pub fn format_table(rows: &[ComparisonRow]) -> String {
    let mut out = format!("{:<22}{:>8}{:>12}\n", "Method", "ECT", "WEAT(adj)");
    for r in rows {
        out.push_str(&format!("{:<22}{:>8.3}{:>12.3}\n", r.method, r.ect, r.weat));
    }
    out
}
