use std::collections::BTreeSet;

use proptest::prelude::*;

use textnorm::lm::{split, split_indices, NgramModel, Scoring, SplitSpec, BOS_TOKEN, EOS_TOKEN};
use textnorm::pipeline::UNK;

/// Brute-force model: counts by scanning the padded training corpus for
/// every query.
struct Oracle {
    padded: Vec<Vec<String>>,
    vocab: BTreeSet<String>,
}

impl Oracle {
    fn new(train: &[String]) -> Self {
        let padded: Vec<Vec<String>> = train.iter().map(|s| pad(s)).collect();
        let mut vocab: BTreeSet<String> = padded.iter().flatten().cloned().collect();
        vocab.extend([BOS_TOKEN, EOS_TOKEN, UNK].map(String::from));
        Oracle { padded, vocab }
    }

    fn map(&self, w: &str) -> String {
        if self.vocab.contains(w) {
            w.to_string()
        } else {
            UNK.to_string()
        }
    }

    fn count(&self, w: &str) -> usize {
        self.padded.iter().flatten().filter(|t| *t == w).count()
    }

    fn count2(&self, h: &str, w: &str) -> usize {
        self.padded
            .iter()
            .flat_map(|s| s.windows(2))
            .filter(|p| p[0] == h && p[1] == w)
            .count()
    }

    fn followed(&self, h: &str) -> usize {
        self.padded
            .iter()
            .flat_map(|s| s.windows(2))
            .filter(|p| p[0] == h)
            .count()
    }

    fn p2(&self, h: &str, w: &str) -> f64 {
        (self.count2(h, w) + 1) as f64 / (self.followed(h) + self.vocab.len()) as f64
    }

    fn p1(&self, w: &str) -> f64 {
        let total: usize = self.padded.iter().map(Vec::len).sum();
        (self.count(w) + 1) as f64 / (total + self.vocab.len()) as f64
    }

    fn perplexity(&self, test: &[String], scoring: Scoring) -> f64 {
        let mut logs = Vec::new();
        for s in test {
            let toks: Vec<String> = pad(s).iter().map(|t| self.map(t)).collect();
            if scoring == Scoring::Everygrams {
                logs.extend(toks.iter().map(|t| self.p1(t).ln()));
            }
            logs.extend(toks.windows(2).map(|p| self.p2(&p[0], &p[1]).ln()));
        }
        (-logs.iter().sum::<f64>() / logs.len() as f64).exp()
    }
}

fn pad(s: &str) -> Vec<String> {
    std::iter::once(BOS_TOKEN)
        .chain(s.split(' ').filter(|t| !t.is_empty()))
        .chain(std::iter::once(EOS_TOKEN))
        .map(String::from)
        .collect()
}

fn sentence() -> impl Strategy<Value = String> {
    proptest::collection::vec(
        prop::sample::select(vec!["a", "b", "c", "dd", "e", "f"]),
        0..6,
    )
    .prop_map(|v| v.join(" "))
}

fn corpus(max: usize) -> impl Strategy<Value = Vec<String>> {
    proptest::collection::vec(sentence(), 1..max)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn matches_brute_force(train in corpus(12), test in proptest::collection::vec(
        proptest::collection::vec(prop::sample::select(vec!["a", "b", "zz", "dd"]), 0..5).prop_map(|v| v.join(" ")), 1..5)) {
        let m = NgramModel::fit(&train).unwrap();
        let o = Oracle::new(&train);
        prop_assert_eq!(m.vocab_size(), o.vocab.len());
        for scoring in [Scoring::Bigrams, Scoring::Everygrams] {
            let pp = m.perplexity(&test, scoring).unwrap().perplexity;
            let expect = o.perplexity(&test, scoring);
            prop_assert!((pp - expect).abs() <= 1e-9 * expect, "{} vs {}", pp, expect);
        }
        for h in &o.vocab {
            for w in &o.vocab {
                prop_assert!((m.prob(h, w) - o.p2(h, w)).abs() < 1e-15);
            }
            prop_assert!((m.unigram_prob(h) - o.p1(h)).abs() < 1e-15);
        }
    }

    #[test]
    fn doubled_corpus_matches_oracle(train in corpus(8), test in corpus(4)) {
        let doubled: Vec<String> = train.iter().chain(&train).cloned().collect();
        let pp = NgramModel::fit(&doubled).unwrap().perplexity(&test, Scoring::Everygrams).unwrap().perplexity;
        let expect = Oracle::new(&doubled).perplexity(&test, Scoring::Everygrams);
        prop_assert!((pp - expect).abs() <= 1e-9 * expect);
    }

    #[test]
    fn conditionals_normalize(train in corpus(20)) {
        let m = NgramModel::fit(&train).unwrap();
        let v: Vec<String> = m.vocabulary().map(String::from).collect();
        for h in v.iter().chain([&"unseen".to_string()]) {
            let total: f64 = v.iter().map(|w| m.prob(h, w)).sum();
            prop_assert!((total - 1.0).abs() < 1e-9);
        }
        let uni: f64 = v.iter().map(|w| m.unigram_prob(w)).sum();
        prop_assert!((uni - 1.0).abs() < 1e-9);
    }

    #[test]
    fn perplexity_properties(train in corpus(10), test in corpus(6)) {
        let m = NgramModel::fit(&train).unwrap();
        let r = m.perplexity(&test, Scoring::Everygrams).unwrap();
        prop_assert!(r.perplexity > 0.0 && r.perplexity.is_finite());
        prop_assert_eq!(r.perplexity.to_bits(), m.perplexity(&test, Scoring::Everygrams).unwrap().perplexity.to_bits());
        prop_assert!((r.perplexity - (-r.log_prob_sum / r.n as f64).exp()).abs() < 1e-12 * r.perplexity);
        let mut rev = test.clone();
        rev.reverse();
        let pr = m.perplexity(&rev, Scoring::Everygrams).unwrap().perplexity;
        prop_assert!((pr - r.perplexity).abs() < 1e-9 * r.perplexity);
    }

    #[test]
    fn fit_is_order_invariant(train in corpus(10)) {
        let mut rev = train.clone();
        rev.reverse();
        prop_assert_eq!(NgramModel::fit(&train).unwrap().to_text(), NgramModel::fit(&rev).unwrap().to_text());
    }

    #[test]
    fn text_format_round_trips(train in corpus(10), test in corpus(4)) {
        let m = NgramModel::fit(&train).unwrap();
        let back = NgramModel::from_text(&m.to_text()).unwrap();
        prop_assert_eq!(back.to_text(), m.to_text());
        prop_assert_eq!(
            back.perplexity(&test, Scoring::Everygrams).unwrap().perplexity.to_bits(),
            m.perplexity(&test, Scoring::Everygrams).unwrap().perplexity.to_bits()
        );
    }

    #[test]
    fn split_partitions(n in 1usize..300, seed in any::<u64>()) {
        let spec = SplitSpec { train_fraction: 0.8, seed };
        let s = split_indices(n, &spec).unwrap();
        prop_assert_eq!(s.train.len(), n * 4 / 5);
        let mut all: Vec<usize> = s.train.iter().chain(&s.test).copied().collect();
        all.sort_unstable();
        prop_assert_eq!(all, (0..n).collect::<Vec<_>>());
        prop_assert_eq!(s.warning.is_some(), n * 4 / 5 == 0);
        prop_assert_eq!(split_indices(n, &spec).unwrap(), s);
    }
}

#[test]
fn split_examples() {
    let corpus: Vec<u32> = (0..10).collect();
    let s = split(&corpus, &SplitSpec::default()).unwrap();
    assert_eq!((s.train.len(), s.test.len()), (8, 2));
    let one = split(&[1], &SplitSpec::default()).unwrap();
    assert_eq!((one.train.len(), one.test.len()), (0, 1));
    assert!(one.warning.is_some());
    assert!(split::<u32>(&[], &SplitSpec::default()).is_err());
}
