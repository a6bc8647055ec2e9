//! Default word lists for the gender examples and the subspace comparison.

use crate::embedding::{PairedWordSet, WordSet};
use crate::metrics::{MetricSets, WeatSets};
use crate::subspace::SubspaceMethod;
use crate::transforms::{DebiasJob, JobSeeds, Method};

pub const MALE_TERMS: &[&str] = &["male", "man", "boy", "brother", "he", "him", "his", "son"];
pub const FEMALE_TERMS: &[&str] = &["female", "woman", "girl", "sister", "she", "her", "hers", "daughter"];
pub const CAREER_ATTRIBUTES: &[&str] = &["doctor", "engineer", "lawyer", "mathematician", "banker"];
pub const HOME_ATTRIBUTES: &[&str] = &["homemaker", "receptionist", "dancer", "maid", "nurse"];
pub const STRONG_ADJECTIVES: &[&str] = &["strong", "intelligent", "brave", "important"];
pub const SOFT_ADJECTIVES: &[&str] = &["pretty", "beautiful", "shy", "homely"];

/// Classifier seed lists for the nullspace-projection example.
pub const INLP_MALE: &[&str] = &[
    "man", "he", "him", "his", "guy", "boy", "grandpa", "uncle", "brother", "son", "nephew", "Mr",
];
pub const INLP_FEMALE: &[&str] = &[
    "woman", "she", "her", "hers", "gal", "girl", "grandma", "aunt", "sister", "daughter", "niece",
];

pub const OSCAR_GENDER: &[&str] = &["he", "his", "him", "she", "her", "hers", "man", "woman"];
pub const OSCAR_OCCUPATION: &[&str] = &[
    "engineer",
    "scientist",
    "lawyer",
    "banker",
    "nurse",
    "homemaker",
    "maid",
    "receptionist",
];
pub const OSCAR_EVALUATION: &[&str] = &["grandma", "grandpa", "programmer"];

pub const ROYALTY_F: &[&str] = &["king", "queen"];
pub const ROYALTY_M: &[&str] = &["man", "woman"];
pub const ROYALTY_EVALUATION: &[&str] = &[
    "obnoxious",
    "considerate",
    "plain",
    "fancy",
    "attentive",
    "important",
    "majestic",
];

/// Single-token occupation words, one per line.
pub const OCCUPATIONS: &str = include_str!("../data/occupations.txt");
/// Common given names, capitalized as in the news-trained vocabulary.
pub const NAMES_MALE: &str = include_str!("../data/names_male_cased.txt");
pub const NAMES_FEMALE: &str = include_str!("../data/names_female_cased.txt");

/// Path of the bundled 300-d news embedding subset (glove_text layout, unit rows).
pub fn fixture_path() -> std::path::PathBuf {
    std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("data/w2v_gnews_fixture.txt")
}

pub fn word_set(label: &str, tokens: &[&str]) -> WordSet {
    WordSet::new(label, tokens.iter().copied()).expect("preset lists are valid")
}

/// Parses a one-token-per-line list (blank lines and `#` comments skipped).
pub fn word_set_from_lines(label: &str, text: &str) -> WordSet {
    WordSet::new(
        label,
        text.lines()
            .map(str::trim)
            .filter(|l| !l.is_empty() && !l.starts_with('#')),
    )
    .expect("preset lists are valid")
}

pub fn occupations() -> WordSet {
    word_set_from_lines("occupations", OCCUPATIONS)
}

pub fn male_names() -> WordSet {
    word_set_from_lines("male names", NAMES_MALE)
}

pub fn female_names() -> WordSet {
    word_set_from_lines("female names", NAMES_FEMALE)
}

/// Gender targets against career/home attributes.
pub fn gender_weat() -> WeatSets {
    WeatSets {
        x: word_set("male terms", MALE_TERMS),
        y: word_set("female terms", FEMALE_TERMS),
        a: word_set("career", CAREER_ATTRIBUTES),
        b: word_set("home", HOME_ATTRIBUTES),
    }
}

/// Gender targets against the adjective attributes.
pub fn adjective_weat() -> WeatSets {
    WeatSets {
        x: word_set("male terms", MALE_TERMS),
        y: word_set("female terms", FEMALE_TERMS),
        a: word_set("strong adjectives", STRONG_ADJECTIVES),
        b: word_set("soft adjectives", SOFT_ADJECTIVES),
    }
}

/// Default report: gender WEAT plus ECT over the occupation list.
pub fn default_metric_sets() -> MetricSets {
    MetricSets {
        weat: gender_weat(),
        ect_attributes: occupations(),
    }
}

/// Male/female pairs for paired PCA.
pub fn gender_pairs() -> PairedWordSet {
    PairedWordSet::new([("man", "woman"), ("he", "she"), ("brother", "sister")]).expect("valid pairs")
}

/// A named, ready-to-run job.
#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
pub struct PresetJob {
    pub name: String,
    pub job: DebiasJob,
}

fn preset(name: &str, job: DebiasJob) -> PresetJob {
    let mut job = job;
    job.label = name.to_string();
    PresetJob {
        name: name.to_string(),
        job,
    }
}

/// Gender walk-throughs for each transform, plus the royalty example.
pub fn preset_jobs() -> Vec<PresetJob> {
    let gender = || JobSeeds::groups(word_set("female", &["woman", "she"]), word_set("male", &["man", "he"]));
    let occupations_eval = word_set(
        "occupations",
        &[
            "receptionist",
            "nurse",
            "scientist",
            "mathematician",
            "banker",
            "engineer",
        ],
    );

    let mut lp = DebiasJob::new(Method::Lp, gender());
    lp.evaluation = occupations_eval.clone();

    let mut hd = DebiasJob::new(Method::Hd, gender());
    hd.equalize = Some(PairedWordSet::new([("boy", "girl"), ("brother", "sister")]).expect("valid pairs"));
    hd.evaluation = occupations_eval;

    let mut inlp = DebiasJob::new(
        Method::Inlp,
        JobSeeds::groups(word_set("female", INLP_FEMALE), word_set("male", INLP_MALE)),
    );
    inlp.evaluation = word_set("evaluation", &["nurse", "engineer"]);

    let mut oscar = DebiasJob::new(Method::Oscar, JobSeeds::single(word_set("gender", OSCAR_GENDER)));
    oscar.subspace_method = Some(SubspaceMethod::Pca);
    oscar.second_subspace_seeds = Some(JobSeeds::single(word_set("occupation", OSCAR_OCCUPATION)));
    oscar.evaluation = word_set("evaluation", OSCAR_EVALUATION);

    let mut royalty = DebiasJob::new(
        Method::Lp,
        JobSeeds::groups(word_set("royal", ROYALTY_F), word_set("common", ROYALTY_M)),
    );
    royalty.evaluation = word_set("evaluation", ROYALTY_EVALUATION);

    vec![
        preset("gender-lp", lp),
        preset("gender-hd", hd),
        preset("gender-inlp", inlp),
        preset("gender-occupation-oscar", oscar),
        preset("royalty-lp", royalty),
    ]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lists_parse() {
        assert_eq!(male_names().len(), 12);
        assert_eq!(female_names().len(), 12);
        assert!(occupations().len() > 200);
        gender_weat().validate().unwrap();
        adjective_weat().validate().unwrap();
        for p in preset_jobs() {
            p.job.validate().unwrap();
        }
    }
}
