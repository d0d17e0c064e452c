//! Unigram and bigram language model with add-one smoothing, the
//! perplexity metric, and the seeded train/test split.

use std::collections::{BTreeMap, HashMap};
use std::fmt::{self, Write as _};
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use thiserror::Error;

use crate::pipeline::UNK;

pub const BOS_TOKEN: &str = "<s>";
pub const EOS_TOKEN: &str = "</s>";

#[derive(Debug, Error)]
pub enum LmError {
    #[error("corpus is empty")]
    EmptyCorpus,
    #[error("training set is empty")]
    EmptyTraining,
    #[error("test set is empty")]
    EmptyTest,
    #[error("train fraction {0} is outside [0, 1]")]
    BadFraction(f64),
    #[error("model text, line {line}: {message}")]
    Format { line: usize, message: String },
}

pub type Result<T> = std::result::Result<T, LmError>;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SplitSpec {
    pub train_fraction: f64,
    pub seed: u64,
}

impl Default for SplitSpec {
    fn default() -> Self {
        SplitSpec {
            train_fraction: 0.8,
            seed: 0,
        }
    }
}

/// Raised when the split leaves the training side empty.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DegenerateSplit;

impl fmt::Display for DegenerateSplit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("degenerate split: the training set is empty")
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Split<T> {
    pub train: Vec<T>,
    pub test: Vec<T>,
    pub warning: Option<DegenerateSplit>,
}

/// Shuffles `0..n` with the seed; the first `⌊fraction·n⌋` go to train.
pub fn split_indices(n: usize, spec: &SplitSpec) -> Result<Split<usize>> {
    if n == 0 {
        return Err(LmError::EmptyCorpus);
    }
    if !(0.0..=1.0).contains(&spec.train_fraction) {
        return Err(LmError::BadFraction(spec.train_fraction));
    }
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(&mut ChaCha8Rng::seed_from_u64(spec.seed));
    let n_train = ((n as f64) * spec.train_fraction + 1e-9).floor() as usize;
    let test = idx.split_off(n_train.min(n));
    let warning = if idx.is_empty() {
        log::warn!("degenerate split: {n} sentence(s) leave the training set empty");
        Some(DegenerateSplit)
    } else {
        None
    };
    Ok(Split {
        train: idx,
        test,
        warning,
    })
}

pub fn split<T: Clone>(corpus: &[T], spec: &SplitSpec) -> Result<Split<T>> {
    let s = split_indices(corpus.len(), spec)?;
    let pick = |ix: &[usize]| ix.iter().map(|&i| corpus[i].clone()).collect();
    Ok(Split {
        train: pick(&s.train),
        test: pick(&s.test),
        warning: s.warning,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Scoring {
    Bigrams,
    /// Unigrams and bigrams.
    #[default]
    Everygrams,
}

impl fmt::Display for Scoring {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Scoring::Bigrams => "bigrams",
            Scoring::Everygrams => "everygrams",
        })
    }
}

impl FromStr for Scoring {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "bigrams" => Ok(Scoring::Bigrams),
            "everygrams" => Ok(Scoring::Everygrams),
            _ => Err(format!(
                "unknown scoring {s:?} (expected bigrams or everygrams)"
            )),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PerplexityReport {
    pub perplexity: f64,
    /// Number of scored ngrams.
    pub n: usize,
    /// Σ ln P over the scored ngrams.
    pub log_prob_sum: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NgramModel {
    tokens: Vec<String>,
    ids: HashMap<String, usize>,
    unigrams: Vec<u64>,
    bigrams: HashMap<(usize, usize), u64>,
    /// Σ_w c(h, w) per history h.
    history: Vec<u64>,
    n_train: u64,
}

fn padded(sentence: &str) -> impl Iterator<Item = &str> {
    std::iter::once(BOS_TOKEN)
        .chain(sentence.split_whitespace())
        .chain(std::iter::once(EOS_TOKEN))
}

type Counts = (HashMap<String, u64>, HashMap<(String, String), u64>);

fn merge(mut a: Counts, b: Counts) -> Counts {
    for (k, v) in b.0 {
        *a.0.entry(k).or_default() += v;
    }
    for (k, v) in b.1 {
        *a.1.entry(k).or_default() += v;
    }
    a
}

impl NgramModel {
    /// Counts padded unigrams and bigrams over `train`.
    pub fn fit<S: AsRef<str> + Sync>(train: &[S]) -> Result<Self> {
        if train.is_empty() {
            return Err(LmError::EmptyTraining);
        }
        let (uni, bi) = train
            .par_iter()
            .fold(Counts::default, |mut acc, s| {
                let toks: Vec<&str> = padded(s.as_ref()).collect();
                for t in &toks {
                    *acc.0.entry(t.to_string()).or_default() += 1;
                }
                for w in toks.windows(2) {
                    *acc.1
                        .entry((w[0].to_string(), w[1].to_string()))
                        .or_default() += 1;
                }
                acc
            })
            .reduce(Counts::default, merge);
        let vocab: Vec<String> = uni
            .keys()
            .cloned()
            .chain([BOS_TOKEN, EOS_TOKEN, UNK].map(String::from))
            .collect();
        let bigrams = bi.into_iter().map(|((a, b), c)| (a, b, c));
        Self::from_counts(vocab, uni, bigrams)
    }

    fn from_counts(
        vocab: impl IntoIterator<Item = String>,
        uni: HashMap<String, u64>,
        bigrams: impl IntoIterator<Item = (String, String, u64)>,
    ) -> Result<Self> {
        let mut tokens: Vec<String> = vocab.into_iter().collect();
        tokens.sort();
        tokens.dedup();
        let ids: HashMap<String, usize> = tokens
            .iter()
            .enumerate()
            .map(|(i, t)| (t.clone(), i))
            .collect();
        let mut unigrams = vec![0; tokens.len()];
        for (t, c) in uni {
            unigrams[ids[&t]] += c;
        }
        let mut history = vec![0; tokens.len()];
        let mut bi = HashMap::new();
        for (a, b, c) in bigrams {
            let key = (ids[&a], ids[&b]);
            history[key.0] += c;
            *bi.entry(key).or_default() += c;
        }
        let n_train = unigrams.iter().sum();
        Ok(NgramModel {
            tokens,
            ids,
            unigrams,
            bigrams: bi,
            history,
            n_train,
        })
    }

    pub fn vocab_size(&self) -> usize {
        self.tokens.len()
    }

    pub fn vocabulary(&self) -> impl Iterator<Item = &str> {
        self.tokens.iter().map(String::as_str)
    }

    pub fn contains(&self, w: &str) -> bool {
        self.ids.contains_key(w)
    }

    /// Total padded training tokens.
    pub fn n_train(&self) -> u64 {
        self.n_train
    }

    fn id(&self, w: &str) -> usize {
        self.ids.get(w).copied().unwrap_or_else(|| self.ids[UNK])
    }

    pub fn unigram_count(&self, w: &str) -> u64 {
        self.ids.get(w).map_or(0, |&i| self.unigrams[i])
    }

    pub fn bigram_count(&self, h: &str, w: &str) -> u64 {
        match (self.ids.get(h), self.ids.get(w)) {
            (Some(&a), Some(&b)) => self.bigrams.get(&(a, b)).copied().unwrap_or(0),
            _ => 0,
        }
    }

    fn p_bigram(&self, h: usize, w: usize) -> f64 {
        let c = self.bigrams.get(&(h, w)).copied().unwrap_or(0);
        (c as f64 + 1.0) / (self.history[h] as f64 + self.tokens.len() as f64)
    }

    fn p_unigram(&self, w: usize) -> f64 {
        (self.unigrams[w] as f64 + 1.0) / (self.n_train as f64 + self.tokens.len() as f64)
    }

    /// P(w | h) with add-one smoothing; unknown tokens count as `<UNK>`.
    pub fn prob(&self, h: &str, w: &str) -> f64 {
        self.p_bigram(self.id(h), self.id(w))
    }

    pub fn unigram_prob(&self, w: &str) -> f64 {
        self.p_unigram(self.id(w))
    }

    pub fn perplexity<S: AsRef<str>>(
        &self,
        test: &[S],
        scoring: Scoring,
    ) -> Result<PerplexityReport> {
        if test.is_empty() {
            return Err(LmError::EmptyTest);
        }
        let mut n = 0;
        let mut sum = 0.0;
        for s in test {
            let ids: Vec<usize> = padded(s.as_ref()).map(|t| self.id(t)).collect();
            if scoring == Scoring::Everygrams {
                for &w in &ids {
                    sum += self.p_unigram(w).ln();
                    n += 1;
                }
            }
            for pair in ids.windows(2) {
                sum += self.p_bigram(pair[0], pair[1]).ln();
                n += 1;
            }
        }
        Ok(PerplexityReport {
            perplexity: (-sum / n as f64).exp(),
            n,
            log_prob_sum: sum,
        })
    }

    /// Serializes the counts: `#vocab`, `#unigrams` and `#bigrams`
    /// sections, tab-separated.
    pub fn to_text(&self) -> String {
        let mut out = String::from("#vocab\n");
        for t in &self.tokens {
            out.push_str(t);
            out.push('\n');
        }
        out.push_str("#unigrams\n");
        for (t, &c) in self.tokens.iter().zip(&self.unigrams) {
            if c > 0 {
                let _ = writeln!(out, "{t}\t{c}");
            }
        }
        out.push_str("#bigrams\n");
        let sorted: BTreeMap<(&str, &str), u64> = self
            .bigrams
            .iter()
            .map(|(&(a, b), &c)| ((self.tokens[a].as_str(), self.tokens[b].as_str()), c))
            .collect();
        for ((a, b), c) in sorted {
            let _ = writeln!(out, "{a}\t{b}\t{c}");
        }
        out
    }

    /// Parses [`to_text`](Self::to_text) output. Counts must be consistent:
    /// each history's bigram total equals its unigram count, except for
    /// `</s>`, which starts no bigram.
    pub fn from_text(text: &str) -> Result<Self> {
        let err = |line: usize, m: String| LmError::Format { line, message: m };
        let mut section = "";
        let mut vocab = Vec::new();
        let mut uni = HashMap::new();
        let mut bi = Vec::new();
        for (i, line) in text.lines().enumerate() {
            let ln = i + 1;
            if line.is_empty() {
                continue;
            }
            if matches!(line, "#vocab" | "#unigrams" | "#bigrams") {
                section = line;
                continue;
            }
            let fields: Vec<&str> = line.split('\t').collect();
            let count = |s: &str| {
                s.parse::<u64>()
                    .map_err(|_| err(ln, format!("bad count {s:?}")))
            };
            match (section, fields.as_slice()) {
                ("#vocab", [t]) => vocab.push(t.to_string()),
                ("#unigrams", [t, c]) => {
                    uni.insert(t.to_string(), count(c)?);
                }
                ("#bigrams", [a, b, c]) => bi.push((a.to_string(), b.to_string(), count(c)?)),
                ("", _) => return Err(err(ln, "data before the first section header".into())),
                _ => return Err(err(ln, format!("wrong field count for {section}"))),
            }
        }
        let known: std::collections::HashSet<&String> = vocab.iter().collect();
        for r in [BOS_TOKEN, EOS_TOKEN, UNK] {
            if !known.contains(&r.to_string()) {
                return Err(err(0, format!("vocabulary lacks {r}")));
            }
        }
        if let Some(t) = uni
            .keys()
            .chain(bi.iter().flat_map(|(a, b, _)| [a, b]))
            .find(|t| !known.contains(t))
        {
            return Err(err(0, format!("token {t:?} is not in the vocabulary")));
        }
        let model = Self::from_counts(vocab, uni, bi)?;
        for (i, t) in model.tokens.iter().enumerate() {
            let expected = if t == EOS_TOKEN { 0 } else { model.unigrams[i] };
            if model.history[i] != expected {
                return Err(err(
                    0,
                    format!(
                        "bigrams starting with {t:?} sum to {} not {expected}",
                        model.history[i]
                    ),
                ));
            }
        }
        Ok(model)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hand_counts() {
        let m = NgramModel::fit(&["a b"]).unwrap();
        assert_eq!(m.unigram_count("a"), 1);
        assert_eq!(m.unigram_count("b"), 1);
        assert_eq!(m.bigram_count("<s>", "a"), 1);
        assert_eq!(m.bigram_count("a", "b"), 1);
        assert_eq!(m.bigram_count("b", "</s>"), 1);
        assert_eq!(m.vocab_size(), 5);
        assert_eq!(m.n_train(), 4);
        assert!((m.prob("a", "b") - 1.0 / 3.0).abs() < 1e-15);
        assert!((m.prob("b", "a") - 1.0 / 6.0).abs() < 1e-15);
        assert_eq!(m.prob("zz", "a"), m.prob(UNK, "a"));
    }

    #[test]
    fn empty_inputs() {
        assert!(matches!(
            NgramModel::fit::<&str>(&[]),
            Err(LmError::EmptyTraining)
        ));
        let m = NgramModel::fit(&["a"]).unwrap();
        assert!(matches!(
            m.perplexity::<&str>(&[], Scoring::Bigrams),
            Err(LmError::EmptyTest)
        ));
        assert!(matches!(
            split::<u8>(&[], &SplitSpec::default()),
            Err(LmError::EmptyCorpus)
        ));
    }

    #[test]
    fn hand_perplexity() {
        let m = NgramModel::fit(&["a b"]).unwrap();
        let r = m.perplexity(&["a b"], Scoring::Bigrams).unwrap();
        assert_eq!(r.n, 3);
        assert!((r.perplexity - 3.0).abs() < 1e-9);
        let e = m.perplexity(&["a b"], Scoring::Everygrams).unwrap();
        assert_eq!(e.n, 7);
        let expect = -(3.0 * (2.0f64 / 6.0).ln() + 4.0 * (2.0f64 / 9.0).ln()) / 7.0;
        assert!((e.perplexity - expect.exp()).abs() < 1e-9);
    }

    #[test]
    fn split_sizes() {
        let corpus: Vec<u32> = (0..10).collect();
        let s = split(&corpus, &SplitSpec::default()).unwrap();
        assert_eq!((s.train.len(), s.test.len(), s.warning), (8, 2, None));
        assert_eq!(s, split(&corpus, &SplitSpec::default()).unwrap());
        let one = split(&[1], &SplitSpec::default()).unwrap();
        assert_eq!(
            (one.train.len(), one.test.len(), one.warning),
            (0, 1, Some(DegenerateSplit))
        );
        for n in 1..200 {
            let s = split_indices(
                n,
                &SplitSpec {
                    seed: 7,
                    ..Default::default()
                },
            )
            .unwrap();
            assert_eq!(s.train.len(), n * 4 / 5);
        }
    }

    #[test]
    fn text_round_trip() {
        let m = NgramModel::fit(&["a b", "b b c", ""]).unwrap();
        let back = NgramModel::from_text(&m.to_text()).unwrap();
        assert_eq!(m, back);
    }

    #[test]
    fn import_checks() {
        assert!(NgramModel::from_text("#vocab\n<s>\n</s>\n").is_err());
        assert!(NgramModel::from_text("a\t1\n").is_err());
        let bad = "#vocab\n<s>\n</s>\n<UNK>\n#unigrams\n<s>\t2\n#bigrams\n<s>\t</s>\t1\n";
        assert!(NgramModel::from_text(bad).is_err());
        let stray = "#vocab\n<s>\n</s>\n<UNK>\n#unigrams\nx\t1\n";
        assert!(NgramModel::from_text(stray).is_err());
    }
}
