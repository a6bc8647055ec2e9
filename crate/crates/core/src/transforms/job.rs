use serde::{Deserialize, Serialize};

use super::{hard_debias, inlp, linear_projection, oscar, HdTargets, InlpConfig, TransformResult};
use crate::embedding::{EmbeddingSnapshot, PairedWordSet, WordSet};
use crate::error::{Error, Result};
use crate::metrics::{MetricSets, WeatSets};
use crate::presets;
use crate::scalar::Scalar;
use crate::subspace::{
    identify_classifier_normal, identify_iterative, identify_paired_pca, identify_pca, identify_two_means,
    ConceptDirection, IterativeConfig, IterativeOutcome, SubspaceMethod,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Lp,
    Hd,
    Inlp,
    Oscar,
}

impl std::str::FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "lp" => Self::Lp,
            "hd" => Self::Hd,
            "inlp" => Self::Inlp,
            "oscar" => Self::Oscar,
            other => return Err(Error::InvalidArgument(format!("unknown method `{other}`"))),
        })
    }
}

/// Which words hard debiasing projects.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HdScope {
    /// The whole vocabulary.
    #[default]
    All,
    /// Only the words named in the job.
    Sets,
}

impl std::str::FromStr for HdScope {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "all" => Ok(Self::All),
            "sets" => Ok(Self::Sets),
            other => Err(Error::InvalidArgument(format!("unknown scope `{other}`"))),
        }
    }
}

/// Seed words for one concept direction. Two-group methods read `f` and `m`,
/// paired PCA reads `pairs`, and PCA reads `set` (or `f ∪ m` when `set` is absent).
///
/// Deserializes from `{"f": .., "m": .., "pairs": .., "set": ..}` or from a
/// bare word list, which becomes `set`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(from = "SeedsRepr")]
pub struct JobSeeds {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub f: Option<WordSet>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub m: Option<WordSet>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pairs: Option<PairedWordSet>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub set: Option<WordSet>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct SeedFields {
    #[serde(default)]
    f: Option<WordSet>,
    #[serde(default)]
    m: Option<WordSet>,
    #[serde(default)]
    pairs: Option<PairedWordSet>,
    #[serde(default)]
    set: Option<WordSet>,
}

#[derive(Deserialize)]
#[serde(untagged)]
enum SeedsRepr {
    Fields(SeedFields),
    Set(WordSet),
}

impl From<SeedsRepr> for JobSeeds {
    fn from(r: SeedsRepr) -> Self {
        match r {
            SeedsRepr::Fields(s) => Self {
                f: s.f,
                m: s.m,
                pairs: s.pairs,
                set: s.set,
            },
            SeedsRepr::Set(set) => Self {
                set: Some(set),
                ..Self::default()
            },
        }
    }
}

impl JobSeeds {
    pub fn groups(f: WordSet, m: WordSet) -> Self {
        Self {
            f: Some(f),
            m: Some(m),
            ..Self::default()
        }
    }

    pub fn single(set: WordSet) -> Self {
        Self {
            set: Some(set),
            ..Self::default()
        }
    }

    pub fn pairs(pairs: PairedWordSet) -> Self {
        Self {
            pairs: Some(pairs),
            ..Self::default()
        }
    }

    /// The set PCA runs on.
    fn pca_set(&self) -> Option<WordSet> {
        if let Some(s) = &self.set {
            return Some(s.clone());
        }
        let (f, m) = (self.f.as_ref()?, self.m.as_ref()?);
        let mut tokens: Vec<&str> = f.iter().collect();
        tokens.extend(m.iter().filter(|t| !f.contains(t)));
        WordSet::new("seeds", tokens).ok()
    }

    /// Every seed token, without duplicates, in field order.
    pub fn tokens(&self) -> Vec<String> {
        let mut out: Vec<String> = Vec::new();
        let mut push = |t: &str| {
            if !out.iter().any(|o| o == t) {
                out.push(t.to_string());
            }
        };
        for set in [&self.f, &self.m, &self.set].into_iter().flatten() {
            set.iter().for_each(&mut push);
        }
        if let Some(p) = &self.pairs {
            p.tokens().for_each(&mut push);
        }
        out
    }

    fn check(&self, method: SubspaceMethod, what: &str) -> Result<()> {
        let ok = match method {
            SubspaceMethod::Pca => self.pca_set().is_some_and(|s| s.len() >= 2),
            SubspaceMethod::PairedPca => self.pairs.as_ref().is_some_and(|p| !p.is_empty()),
            _ => self.f.as_ref().is_some_and(|s| !s.is_empty()) && self.m.as_ref().is_some_and(|s| !s.is_empty()),
        };
        if ok {
            Ok(())
        } else {
            let need = match method {
                SubspaceMethod::Pca => "at least 2 words in `set` (or `f` and `m`)",
                SubspaceMethod::PairedPca => "non-empty `pairs`",
                _ => "non-empty `f` and `m` groups",
            };
            Err(Error::InvalidJob(format!("{what} with {method:?} needs {need}")))
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterativeSettings {
    #[serde(default = "default_rounds")]
    pub rounds: usize,
    #[serde(default = "default_gss_tolerance")]
    pub gss_tolerance: f64,
    /// Objective sets; the gender/career defaults when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub weat: Option<WeatSets>,
}

fn default_rounds() -> usize {
    2
}

fn default_gss_tolerance() -> f64 {
    1e-3
}

impl Default for IterativeSettings {
    fn default() -> Self {
        Self {
            rounds: default_rounds(),
            gss_tolerance: default_gss_tolerance(),
            weat: None,
        }
    }
}

impl IterativeSettings {
    pub fn config(&self) -> IterativeConfig {
        IterativeConfig {
            rounds: self.rounds,
            gss_tolerance: self.gss_tolerance,
            weat: self.weat.clone().unwrap_or_else(presets::gender_weat),
        }
    }
}

fn default_max_iters() -> usize {
    35
}

fn default_floor() -> f64 {
    0.55
}

fn empty_set() -> WordSet {
    WordSet::new("evaluation", Vec::<String>::new()).expect("empty set is valid")
}

/// One declarative debiasing run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DebiasJob {
    pub method: Method,
    /// Defaults to `classifier_normal` for INLP and `two_means` otherwise.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub subspace_method: Option<SubspaceMethod>,
    pub seeds: JobSeeds,
    /// Pairs to equalize (HD).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub equalize: Option<PairedWordSet>,
    /// Seeds of the second concept (OSCaR).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub second_subspace_seeds: Option<JobSeeds>,
    /// Method for the second concept; defaults to `subspace_method`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub second_subspace_method: Option<SubspaceMethod>,
    #[serde(default = "empty_set")]
    pub evaluation: WordSet,
    /// Words LP leaves untouched; HD also keeps them fixed.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub exclude: Option<WordSet>,
    #[serde(default = "default_max_iters")]
    pub inlp_max_iters: usize,
    #[serde(default = "default_floor")]
    pub inlp_accuracy_floor: f64,
    #[serde(default)]
    pub hd_scope: HdScope,
    #[serde(default)]
    pub iterative: IterativeSettings,
    /// Sets for the before/after metric report.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub metrics: Option<MetricSets>,
    #[serde(default)]
    pub label: String,
}

impl DebiasJob {
    pub fn new(method: Method, seeds: JobSeeds) -> Self {
        Self {
            method,
            subspace_method: None,
            seeds,
            equalize: None,
            second_subspace_seeds: None,
            second_subspace_method: None,
            evaluation: empty_set(),
            exclude: None,
            inlp_max_iters: default_max_iters(),
            inlp_accuracy_floor: default_floor(),
            hd_scope: HdScope::All,
            iterative: IterativeSettings::default(),
            metrics: None,
            label: String::new(),
        }
    }

    pub fn subspace(&self) -> SubspaceMethod {
        self.subspace_method.unwrap_or(match self.method {
            Method::Inlp => SubspaceMethod::ClassifierNormal,
            _ => SubspaceMethod::TwoMeans,
        })
    }

    pub fn second_subspace(&self) -> SubspaceMethod {
        self.second_subspace_method.unwrap_or_else(|| self.subspace())
    }

    /// Checks method/parameter consistency. Token resolution happens at run time.
    pub fn validate(&self) -> Result<()> {
        let sub = self.subspace();
        match self.method {
            Method::Hd if self.equalize.is_none() => {
                return Err(Error::InvalidJob("hd requires an equalize set".into()));
            }
            Method::Oscar if self.second_subspace_seeds.is_none() => {
                return Err(Error::InvalidJob("oscar requires second_subspace_seeds".into()));
            }
            Method::Inlp if sub != SubspaceMethod::ClassifierNormal => {
                return Err(Error::InvalidJob(
                    "inlp requires subspace_method classifier_normal".into(),
                ));
            }
            _ => {}
        }
        self.seeds.check(sub, "seeds")?;
        if let Some(second) = &self.second_subspace_seeds {
            if self.method != Method::Oscar {
                return Err(Error::InvalidJob("second_subspace_seeds only applies to oscar".into()));
            }
            second.check(self.second_subspace(), "second_subspace_seeds")?;
        }
        if self.equalize.is_some() && self.method != Method::Hd {
            return Err(Error::InvalidJob("equalize only applies to hd".into()));
        }
        if self.method == Method::Inlp {
            if self.inlp_max_iters == 0 {
                return Err(Error::InvalidJob("inlp_max_iters must be at least 1".into()));
            }
            if !(0.0..=1.0).contains(&self.inlp_accuracy_floor) {
                return Err(Error::InvalidJob("inlp_accuracy_floor must lie in [0, 1]".into()));
            }
        }
        if self.method == Method::Hd {
            let def = self.definitional();
            if let Some(t) = self.equalize.iter().flat_map(|p| p.tokens()).find(|t| def.contains(t)) {
                return Err(Error::InvalidJob(format!("`{t}` is both a seed and an equalize word")));
            }
        }
        if sub == SubspaceMethod::Iterative || self.second_subspace() == SubspaceMethod::Iterative {
            self.iterative
                .config()
                .validate()
                .map_err(|e| Error::InvalidJob(e.to_string()))?;
        }
        if let Some(m) = &self.metrics {
            m.weat.validate().map_err(|e| Error::InvalidJob(e.to_string()))?;
            if m.ect_attributes.len() < 2 {
                return Err(Error::InvalidJob("ECT needs at least 2 attribute words".into()));
            }
        }
        Ok(())
    }

    /// Words HD keeps fixed: all seeds plus `exclude`.
    pub fn definitional(&self) -> WordSet {
        let mut tokens = self.seeds.tokens();
        for t in self.exclude.iter().flat_map(|e| e.iter()) {
            if !tokens.iter().any(|o| o == t) {
                tokens.push(t.to_string());
            }
        }
        WordSet::new("definitional", tokens).expect("tokens came from valid sets")
    }

    /// Every word the job names: seeds, second seeds, equalize, evaluation, exclude.
    pub fn named_tokens(&self) -> Vec<String> {
        let mut out = self.seeds.tokens();
        let mut push = |t: &str| {
            if !out.iter().any(|o| o == t) {
                out.push(t.to_string());
            }
        };
        if let Some(s) = &self.second_subspace_seeds {
            s.tokens().iter().for_each(|t| push(t));
        }
        self.equalize.iter().flat_map(|p| p.tokens()).for_each(&mut push);
        self.evaluation.iter().for_each(&mut push);
        self.exclude.iter().flat_map(|e| e.iter()).for_each(&mut push);
        out
    }
}

/// Transform output plus the concept directions it used.
#[derive(Debug, Clone)]
pub struct JobOutput<T> {
    /// One direction (two for OSCaR). For INLP this is the seed classifier
    /// direction; the per-round normals are in the transform steps.
    pub directions: Vec<ConceptDirection<T>>,
    pub iterative: Option<IterativeOutcome<T>>,
    pub transform: TransformResult<T>,
}

/// Identifies one direction from job-style seeds.
pub fn identify_direction<T: Scalar>(
    snapshot: &EmbeddingSnapshot<T>,
    method: SubspaceMethod,
    seeds: &JobSeeds,
    settings: &IterativeSettings,
) -> Result<(ConceptDirection<T>, Option<IterativeOutcome<T>>)> {
    let missing = || Error::InvalidJob(format!("missing seeds for {method:?}"));
    let groups = || {
        Ok::<_, Error>((
            seeds.f.as_ref().ok_or_else(missing)?,
            seeds.m.as_ref().ok_or_else(missing)?,
        ))
    };
    Ok(match method {
        SubspaceMethod::Pca => (identify_pca(snapshot, &seeds.pca_set().ok_or_else(missing)?)?, None),
        SubspaceMethod::PairedPca => (
            identify_paired_pca(snapshot, seeds.pairs.as_ref().ok_or_else(missing)?)?,
            None,
        ),
        SubspaceMethod::TwoMeans => {
            let (f, m) = groups()?;
            (identify_two_means(snapshot, f, m)?, None)
        }
        SubspaceMethod::ClassifierNormal => {
            let (f, m) = groups()?;
            (identify_classifier_normal(snapshot, f, m)?, None)
        }
        SubspaceMethod::Iterative => {
            let (f, m) = groups()?;
            let out = identify_iterative(snapshot, f, m, &settings.config())?;
            (out.direction.clone(), Some(out))
        }
    })
}

/// Resolves every named token up front so a job fails with the complete
/// missing-token list before any work is done.
fn resolve_all<T: Scalar>(snapshot: &EmbeddingSnapshot<T>, job: &DebiasJob) -> Result<()> {
    let mut names = job.named_tokens();
    if let Some(m) = &job.metrics {
        names.extend(m.weat.tokens().map(str::to_string));
        names.extend(m.ect_attributes.iter().map(str::to_string));
    }
    if job.subspace() == SubspaceMethod::Iterative || job.second_subspace() == SubspaceMethod::Iterative {
        names.extend(job.iterative.config().weat.tokens().map(str::to_string));
    }
    let mut seen = std::collections::HashSet::new();
    names.retain(|t| seen.insert(t.clone()));
    snapshot.resolve(names.iter().map(String::as_str)).map(|_| ())
}

/// Identifies the job's direction(s) and applies its transform.
pub fn run_job<T: Scalar>(snapshot: &EmbeddingSnapshot<T>, job: &DebiasJob) -> Result<JobOutput<T>> {
    job.validate()?;
    resolve_all(snapshot, job)?;
    let label = |d: &mut ConceptDirection<T>| {
        if d.label.is_empty() {
            d.label = job.label.clone();
        }
    };
    if job.method == Method::Inlp {
        let (f, m) = (
            job.seeds.f.as_ref().expect("validated"),
            job.seeds.m.as_ref().expect("validated"),
        );
        let (mut dir, _) = identify_direction(snapshot, SubspaceMethod::ClassifierNormal, &job.seeds, &job.iterative)?;
        label(&mut dir);
        let cfg = InlpConfig {
            max_iters: job.inlp_max_iters,
            accuracy_floor: job.inlp_accuracy_floor,
            ..InlpConfig::default()
        };
        let transform = inlp(snapshot, f, m, &cfg)?;
        return Ok(JobOutput {
            directions: vec![dir],
            iterative: None,
            transform,
        });
    }

    let (mut dir, iterative) = identify_direction(snapshot, job.subspace(), &job.seeds, &job.iterative)?;
    label(&mut dir);
    let transform = match job.method {
        Method::Lp => {
            let exclude = job.exclude.clone().unwrap_or_else(empty_set);
            linear_projection(snapshot, &dir.vector, &exclude)?
        }
        Method::Hd => {
            let targets = match job.hd_scope {
                HdScope::All => HdTargets::All,
                HdScope::Sets => {
                    HdTargets::Only(WordSet::new("scope", job.named_tokens()).expect("tokens came from valid sets"))
                }
            };
            let equalize = job.equalize.as_ref().expect("validated");
            hard_debias(snapshot, &dir.vector, &job.definitional(), equalize, &targets)?
        }
        Method::Oscar => {
            let second_seeds = job.second_subspace_seeds.as_ref().expect("validated");
            let (second, _) = identify_direction(snapshot, job.second_subspace(), second_seeds, &job.iterative)?;
            let transform = oscar(snapshot, &dir.vector, &second.vector)?;
            return Ok(JobOutput {
                directions: vec![dir, second],
                iterative,
                transform,
            });
        }
        Method::Inlp => unreachable!("handled above"),
    };
    Ok(JobOutput {
        directions: vec![dir],
        iterative,
        transform,
    })
}
