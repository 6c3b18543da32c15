//! Deterministic synthetic corpora in the competition layout.
//!
//! The generators produce splits with pinned sizes, class balances, and
//! average post lengths, and a class-dependent vocabulary so that the
//! generated task is actually learnable. Everything is a pure function of
//! the seed, which keeps fixtures, smoke runs, and acceptance checks
//! reproducible without shipping any third-party data.

use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::{DatasetSplit, Label, LabeledPost, Result, SplitName};

/// Filler vocabulary shared by both classes.
const SHARED_WORDS: &[&str] = &[
    "the", "a", "of", "to", "in", "for", "on", "and", "with", "as", "at", "from", "by", "about",
    "covid", "covid19", "coronavirus", "virus", "pandemic", "outbreak", "cases", "deaths",
    "health", "people", "today", "new", "update", "report", "reports", "news", "says", "said",
    "government", "country", "state", "city", "world", "public", "week", "month", "day",
    "number", "total", "rise", "spread", "testing", "tests", "positive", "negative", "patients",
    "hospital", "doctors", "lockdown", "quarantine", "mask", "masks", "distancing", "symptoms",
    "infection", "infected", "recovered", "response", "measures", "officials", "during", "after",
    "before", "amid", "over", "under", "more", "less", "than", "this", "that", "will", "have",
    "has", "are", "is", "was", "were", "been", "being", "not", "now", "latest", "breaking",
];

/// Words that predominantly occur in REAL posts.
const REAL_WORDS: &[&str] = &[
    "confirmed", "ministry", "official", "study", "guidelines", "vaccine", "trial", "data",
    "statistics", "briefing", "announced", "statement", "according", "research", "evidence",
    "published", "journal", "surveillance", "advisory", "bulletin", "registry", "protocol",
    "laboratory", "clinical", "epidemiology", "samples", "screening", "verified", "figures",
    "tally", "press", "conference", "secretary", "department", "district", "administered",
    "doses", "immunization", "helpline", "notification",
];

/// Words that predominantly occur in FAKE posts.
const FAKE_WORDS: &[&str] = &[
    "cure", "miracle", "secret", "exposed", "hoax", "conspiracy", "shocking", "garlic",
    "bleach", "cow", "urine", "microchip", "5g", "towers", "bioweapon", "plandemic", "wuhan",
    "lab", "leaked", "truth", "hidden", "agenda", "depopulation", "forced", "chip", "magnet",
    "detox", "alkaline", "remedy", "herbal", "instant", "guaranteed", "banned", "suppressed",
    "they", "dont", "want", "you", "know", "wake",
];

/// Source verdicts emitted by the fact-check export generator, with the row
/// count for each. The fake-side counts sum to 7501 and the real side to 122,
/// matching the published totals for the external dataset.
const FAKECOVID_VERDICTS: &[(&str, Label, usize)] = &[
    ("false", Label::Fake, 6205),
    ("partially false", Label::Fake, 701),
    ("misleading", Label::Fake, 399),
    ("mostly false", Label::Fake, 131),
    ("no evidence", Label::Fake, 65),
    ("true", Label::Real, 86),
    ("mostly true", Label::Real, 24),
    ("correct", Label::Real, 12),
];

/// Knobs for the synthetic generators.
#[derive(Debug, Clone, PartialEq)]
pub struct SynthOptions {
    /// Base RNG seed; every derived artifact is a pure function of it.
    pub seed: u64,
    /// Probability that a token is drawn from the class-specific vocabulary
    /// rather than the shared one. Higher values make the task easier.
    pub signal_strength: f64,
    /// Probability that a token is replaced by a URL or @-mention, so the
    /// preprocessing options have something to strip.
    pub noise_token_rate: f64,
}

impl Default for SynthOptions {
    fn default() -> Self {
        Self {
            seed: 2020,
            signal_strength: 0.35,
            noise_token_rate: 0.04,
        }
    }
}

/// Paths of a generated three-split corpus.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CorpusFiles {
    pub train: PathBuf,
    pub validation: PathBuf,
    pub test: PathBuf,
}

/// Generates one split with exact class counts and a mean whitespace-token
/// count within 1/n of `avg_words_target`.
pub fn generate_split(
    name: SplitName,
    n_real: usize,
    n_fake: usize,
    avg_words_target: f64,
    options: &SynthOptions,
) -> Result<DatasetSplit> {
    let n = n_real + n_fake;
    let mut rng = ChaCha8Rng::seed_from_u64(
        options.seed ^ split_salt(&name) ^ ((n as u64) << 32) ^ n_real as u64,
    );

    let mut labels = vec![Label::Real; n_real];
    labels.extend(std::iter::repeat(Label::Fake).take(n_fake));
    labels.shuffle(&mut rng);

    // Post lengths: an error-accumulator keeps the running sum on target, and
    // jitter is applied in +j/-j pairs so it cancels exactly.
    let mut lengths = Vec::with_capacity(n);
    let mut carry = 0.0f64;
    let mut pending_jitter: Option<i64> = None;
    for i in 0..n {
        carry += avg_words_target;
        let base = carry.floor() as i64;
        carry -= base as f64;
        let jitter = match pending_jitter.take() {
            Some(j) => -j,
            None if i + 1 < n => {
                let j = rng.gen_range(-5i64..=5);
                pending_jitter = Some(j);
                j
            }
            None => 0,
        };
        lengths.push((base + jitter).max(3) as usize);
    }

    let mut posts = Vec::with_capacity(n);
    for (i, (label, len)) in labels.iter().zip(&lengths).enumerate() {
        let text = generate_text(*label, *len, options, &mut rng);
        posts.push(LabeledPost::new((i + 1).to_string(), text, *label));
    }
    DatasetSplit::new(name, posts)
}

/// Generates the train/validation/test corpus with the published statistics
/// (6420 = 3360 real + 3060 fake at ~27.0 words; two 2140-post splits of
/// 1120 real + 1020 fake at ~26.79 and ~27.46 words) and writes them as
/// `train.csv`, `validation.csv`, `test.csv` under `dir`.
pub fn generate_competition_corpus(dir: &Path, options: &SynthOptions) -> Result<CorpusFiles> {
    let files = CorpusFiles {
        train: dir.join("train.csv"),
        validation: dir.join("validation.csv"),
        test: dir.join("test.csv"),
    };
    let train = generate_split(SplitName::Train, 3360, 3060, 27.0, options)?;
    let validation = generate_split(SplitName::Validation, 1120, 1020, 26.79, options)?;
    let test = generate_split(SplitName::Test, 1120, 1020, 27.46, options)?;
    crate::save_split(&train, &files.train)?;
    crate::save_split(&validation, &files.validation)?;
    crate::save_split(&test, &files.test)?;
    Ok(files)
}

/// Generates a fact-check export CSV of 7623 rows whose verdicts collapse to
/// 7501 FAKE and 122 REAL under the default mapping. Columns:
/// `csv_id,source_title,class`.
pub fn generate_fakecovid_export(path: &Path, options: &SynthOptions) -> Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(options.seed ^ 0xFC_0519);
    let mut entries: Vec<(&str, Label)> = Vec::new();
    for (verdict, label, count) in FAKECOVID_VERDICTS {
        entries.extend(std::iter::repeat((*verdict, *label)).take(*count));
    }
    entries.shuffle(&mut rng);

    let rows: Vec<Vec<String>> = entries
        .iter()
        .enumerate()
        .map(|(i, (verdict, label))| {
            let len = rng.gen_range(6..=14);
            let title = generate_text(*label, len, options, &mut rng);
            vec![(i + 1).to_string(), title, verdict.to_string()]
        })
        .collect();
    crate::io::write_rows(path, &["csv_id", "source_title", "class"], &rows)
}

fn generate_text(label: Label, len: usize, options: &SynthOptions, rng: &mut ChaCha8Rng) -> String {
    let class_words = match label {
        Label::Real => REAL_WORDS,
        Label::Fake => FAKE_WORDS,
    };
    let mut words = Vec::with_capacity(len);
    for _ in 0..len {
        let roll: f64 = rng.gen();
        if roll < options.noise_token_rate {
            if rng.gen_bool(0.5) {
                words.push(format!("https://t.co/{:06x}", rng.gen_range(0..0xff_ffffu32)));
            } else {
                words.push(format!("@user{}", rng.gen_range(1..10_000u32)));
            }
        } else if roll < options.noise_token_rate + options.signal_strength {
            words.push((*class_words.choose(rng).unwrap()).to_string());
        } else {
            words.push((*SHARED_WORDS.choose(rng).unwrap()).to_string());
        }
    }
    words.join(" ")
}

fn split_salt(name: &SplitName) -> u64 {
    match name {
        SplitName::Train => 0x5452,
        SplitName::Validation => 0x5641,
        SplitName::Test => 0x5445,
        SplitName::External => 0x4558,
        SplitName::Custom => 0x4355,
    }
}
