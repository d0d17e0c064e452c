//! Base-versus-experiment runs: normalize a corpus with and without the
//! language rules, fit a language model to each result, and compare
//! perplexities and rejection rates.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rayon::prelude::*;
use serde::Deserialize;
use thiserror::Error;

use crate::corpus::{read_ac, CorpusError, CorpusSource, CorpusWarning, SourceKind};
use crate::lm::{split_indices, LmError, NgramModel, Scoring, SplitSpec};
use crate::pipeline::{FilterMode, Normalizer, PipelineError};
use crate::rules::{
    load_profiles, Direction, Language, LanguageProfile, ProfileOptions, RuleError,
};

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error("no sentences left after filtering ({language}, {label})")]
    EmptyAfterFiltering { language: String, label: String },
    #[error("corpus is empty")]
    EmptyCorpus,
    #[error("manifest: {0}")]
    Manifest(String),
    #[error("report table, line {line}: {message}")]
    Table { line: usize, message: String },
    #[error(transparent)]
    Lm(#[from] LmError),
    #[error(transparent)]
    Pipeline(#[from] PipelineError),
    #[error(transparent)]
    Corpus(#[from] CorpusError),
    #[error(transparent)]
    Rules(#[from] RuleError),
}

pub type Result<T> = std::result::Result<T, ExperimentError>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum RelativeDivisor {
    /// Number of scored test ngrams.
    #[default]
    Ngrams,
    /// Base perplexity.
    Base,
}

impl fmt::Display for RelativeDivisor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            RelativeDivisor::Ngrams => "ngrams",
            RelativeDivisor::Base => "base",
        })
    }
}

impl FromStr for RelativeDivisor {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "ngrams" => Ok(RelativeDivisor::Ngrams),
            "base" => Ok(RelativeDivisor::Base),
            _ => Err(format!("unknown divisor {s:?} (expected ngrams or base)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ExperimentSpec {
    pub split: SplitSpec,
    pub scoring: Scoring,
    pub divisor: RelativeDivisor,
    pub mode: FilterMode,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentReport {
    pub language: String,
    pub source: String,
    pub base_pp: f64,
    pub exp_pp: f64,
    pub raw_diff: f64,
    pub relative_diff: f64,
    pub diff_from_median: f64,
    pub n_test_ngrams: usize,
    pub kept: usize,
    pub rejected: usize,
    pub pct_rejected: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Metrics {
    pub raw: f64,
    pub relative: f64,
    pub from_median: f64,
}

pub fn median(xs: &[f64]) -> Option<f64> {
    if xs.is_empty() {
        return None;
    }
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    let m = v.len() / 2;
    Some(if v.len() % 2 == 1 {
        v[m]
    } else {
        (v[m - 1] + v[m]) / 2.0
    })
}

pub fn relative_diff(
    raw: f64,
    base_pp: f64,
    n_test_ngrams: usize,
    divisor: RelativeDivisor,
) -> f64 {
    match divisor {
        RelativeDivisor::Ngrams => raw / n_test_ngrams as f64,
        RelativeDivisor::Base => raw / base_pp,
    }
}

/// `median − relative`.
pub fn diff_from_median(median: f64, relative: f64) -> f64 {
    median - relative
}

/// The three derived columns. `all_relative_diffs` are the relative
/// differences of every experiment in the run; when empty, this one is the
/// whole run.
pub fn compute_metrics(
    base_pp: f64,
    exp_pp: f64,
    n_test_ngrams: usize,
    all_relative_diffs: &[f64],
    divisor: RelativeDivisor,
) -> Metrics {
    let raw = exp_pp - base_pp;
    let relative = relative_diff(raw, base_pp, n_test_ngrams, divisor);
    let med = median(all_relative_diffs).unwrap_or(relative);
    Metrics {
        raw,
        relative,
        from_median: diff_from_median(med, relative),
    }
}

/// Kept and rejected sentence counts.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RejectionRate {
    pub kept: usize,
    pub rejected: usize,
}

impl RejectionRate {
    pub fn total(&self) -> usize {
        self.kept + self.rejected
    }

    pub fn percent(&self) -> f64 {
        100.0 * self.rejected as f64 / self.total() as f64
    }

    /// The percentage in hundredths, rounded half up in exact arithmetic.
    pub fn hundredths(&self) -> u128 {
        let (r, t) = (self.rejected as u128, self.total() as u128);
        (20000 * r + t) / (2 * t)
    }
}

impl fmt::Display for RejectionRate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let h = self.hundredths();
        write!(f, "{}.{:02}", h / 100, h % 100)
    }
}

pub fn rejection_stats(kept: usize, rejected: usize) -> Result<RejectionRate> {
    if kept + rejected == 0 {
        return Err(ExperimentError::EmptyCorpus);
    }
    Ok(RejectionRate { kept, rejected })
}

/// Normalizes `sentences` twice, drops rejected ones, splits both results
/// with the same permutation and compares the two language models.
/// `diff_from_median` is left at 0; see [`set_medians`].
pub fn run_experiment<S: AsRef<str> + Sync>(
    source: &str,
    sentences: &[S],
    profile: &LanguageProfile,
    spec: &ExperimentSpec,
) -> Result<ExperimentReport> {
    let base = Normalizer::base(profile.clone(), spec.mode).normalize_all(sentences)?;
    let exp = Normalizer::new(profile.clone(), spec.mode).normalize_all(sentences)?;
    let (mut base_kept, mut exp_kept) = (Vec::new(), Vec::new());
    for (b, e) in base.into_iter().zip(exp) {
        debug_assert_eq!(b.status, e.status);
        if b.is_kept() {
            base_kept.push(b.text);
            exp_kept.push(e.text);
        }
    }
    let kept = base_kept.len();
    let rejected = sentences.len() - kept;
    if kept == 0 {
        return Err(ExperimentError::EmptyAfterFiltering {
            language: profile.language().to_string(),
            label: source.to_string(),
        });
    }
    let split = split_indices(kept, &spec.split)?;
    let score = |texts: &[String]| -> Result<crate::lm::PerplexityReport> {
        let train: Vec<&str> = split.train.iter().map(|&i| texts[i].as_str()).collect();
        let test: Vec<&str> = split.test.iter().map(|&i| texts[i].as_str()).collect();
        Ok(NgramModel::fit(&train)?.perplexity(&test, spec.scoring)?)
    };
    let b = score(&base_kept)?;
    let e = score(&exp_kept)?;
    let m = compute_metrics(b.perplexity, e.perplexity, b.n, &[], spec.divisor);
    Ok(ExperimentReport {
        language: profile.language().to_string(),
        source: source.to_string(),
        base_pp: b.perplexity,
        exp_pp: e.perplexity,
        raw_diff: m.raw,
        relative_diff: m.relative,
        diff_from_median: m.from_median,
        n_test_ngrams: b.n,
        kept,
        rejected,
        pct_rejected: rejection_stats(kept, rejected)?.percent(),
    })
}

/// Fills `diff_from_median` from the median over all `reports`.
pub fn set_medians(reports: &mut [ExperimentReport]) {
    let rel: Vec<f64> = reports.iter().map(|r| r.relative_diff).collect();
    if let Some(m) = median(&rel) {
        for r in reports {
            r.diff_from_median = diff_from_median(m, r.relative_diff);
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SourceSummary {
    pub source: String,
    pub count: usize,
    pub mean_pct: f64,
    pub median_pct: f64,
}

/// Mean and median rejection percentage per source label.
pub fn summarize_by_source(reports: &[ExperimentReport]) -> Vec<SourceSummary> {
    let mut groups: BTreeMap<&str, Vec<f64>> = BTreeMap::new();
    for r in reports {
        groups.entry(&r.source).or_default().push(r.pct_rejected);
    }
    groups
        .into_iter()
        .map(|(source, v)| SourceSummary {
            source: source.to_string(),
            count: v.len(),
            mean_pct: v.iter().sum::<f64>() / v.len() as f64,
            median_pct: median(&v).expect("non-empty group"),
        })
        .collect()
}

pub const TSV_HEADER: [&str; 11] = [
    "language",
    "source",
    "base_pp",
    "exp_pp",
    "raw_diff",
    "relative_diff",
    "diff_from_median",
    "n_test_ngrams",
    "kept",
    "rejected",
    "pct_rejected",
];

impl ExperimentReport {
    pub fn rejection(&self) -> RejectionRate {
        RejectionRate {
            kept: self.kept,
            rejected: self.rejected,
        }
    }

    /// Display precision: 2 decimals for perplexities and percentages, 8
    /// for relative metrics.
    pub fn display_fields(&self) -> [String; 11] {
        let pct = if self.kept + self.rejected > 0 {
            self.rejection().to_string()
        } else {
            format!("{:.2}", self.pct_rejected)
        };
        [
            self.language.clone(),
            self.source.clone(),
            format!("{:.2}", self.base_pp),
            format!("{:.2}", self.exp_pp),
            format!("{:.2}", self.raw_diff),
            format!("{:.8}", self.relative_diff),
            format!("{:.8}", self.diff_from_median),
            self.n_test_ngrams.to_string(),
            self.kept.to_string(),
            self.rejected.to_string(),
            pct,
        ]
    }
}

pub fn to_tsv(reports: &[ExperimentReport]) -> String {
    let mut out = TSV_HEADER.join("\t");
    out.push('\n');
    for r in reports {
        out.push_str(&r.display_fields().join("\t"));
        out.push('\n');
    }
    out
}

/// Reads a table written by [`to_tsv`]. Values carry display precision.
pub fn parse_tsv(text: &str) -> Result<Vec<ExperimentReport>> {
    let mut lines = text
        .lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty());
    let err = |line: usize, m: String| ExperimentError::Table {
        line: line + 1,
        message: m,
    };
    match lines.next() {
        Some((_, h)) if h.split('\t').eq(TSV_HEADER) => {}
        Some((i, _)) => return Err(err(i, "unexpected header".into())),
        None => return Ok(Vec::new()),
    }
    lines
        .map(|(i, l)| {
            let f: Vec<&str> = l.split('\t').collect();
            if f.len() != TSV_HEADER.len() {
                return Err(err(
                    i,
                    format!("expected {} fields, found {}", TSV_HEADER.len(), f.len()),
                ));
            }
            let num = |k: usize| {
                f[k].parse::<f64>()
                    .map_err(|_| err(i, format!("bad {} {:?}", TSV_HEADER[k], f[k])))
            };
            let int = |k: usize| {
                f[k].parse::<usize>()
                    .map_err(|_| err(i, format!("bad {} {:?}", TSV_HEADER[k], f[k])))
            };
            Ok(ExperimentReport {
                language: f[0].to_string(),
                source: f[1].to_string(),
                base_pp: num(2)?,
                exp_pp: num(3)?,
                raw_diff: num(4)?,
                relative_diff: num(5)?,
                diff_from_median: num(6)?,
                n_test_ngrams: int(7)?,
                kept: int(8)?,
                rejected: int(9)?,
                pct_rejected: num(10)?,
            })
        })
        .collect()
}

fn align(rows: &[Vec<String>]) -> String {
    let widths: Vec<usize> = (0..rows[0].len())
        .map(|c| rows.iter().map(|r| r[c].chars().count()).max().unwrap_or(0))
        .collect();
    let mut out = String::new();
    for r in rows {
        let cells: Vec<String> = r
            .iter()
            .zip(&widths)
            .enumerate()
            .map(|(i, (cell, &w))| {
                if i < 2 {
                    format!("{cell:<w$}")
                } else {
                    format!("{cell:>w$}")
                }
            })
            .collect();
        out.push_str(cells.join("  ").trim_end());
        out.push('\n');
    }
    out
}

pub fn render_table(reports: &[ExperimentReport]) -> String {
    let mut rows = vec![TSV_HEADER.iter().map(|s| s.to_string()).collect::<Vec<_>>()];
    rows.extend(reports.iter().map(|r| r.display_fields().to_vec()));
    align(&rows)
}

pub fn render_summary(summaries: &[SourceSummary]) -> String {
    let mut rows = vec![vec![
        "source".to_string(),
        "n".into(),
        "mean_pct".into(),
        "median_pct".into(),
    ]];
    rows.extend(summaries.iter().map(|s| {
        vec![
            s.source.clone(),
            s.count.to_string(),
            format!("{:.2}", s.mean_pct),
            format!("{:.2}", s.median_pct),
        ]
    }));
    align(&rows)
}

/// One corpus in a [`Manifest`].
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ManifestEntry {
    /// A built-in language or a profile from the manifest's profile file.
    pub language: String,
    /// Report label; also the grouping key for the per-source summary.
    pub source: String,
    pub kind: String,
    pub path: PathBuf,
    pub line_limit: Option<usize>,
    pub direction: Option<String>,
    /// AC word list, read for statistics only.
    pub words: Option<PathBuf>,
    #[serde(default)]
    pub expand: bool,
}

/// A batch of experiments sharing one spec:
///
/// ```toml
/// seed = 0
/// scoring = "everygrams"
/// relative_divisor = "ngrams"
///
/// [[experiment]]
/// language = "amharic"
/// source = "UD"
/// kind = "ud"
/// path = "am_att-ud-test.conllu"
/// ```
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Manifest {
    #[serde(default)]
    pub seed: u64,
    pub train_fraction: Option<f64>,
    pub scoring: Option<String>,
    pub relative_divisor: Option<String>,
    pub filter_mode: Option<String>,
    /// TOML profile file.
    pub profiles: Option<PathBuf>,
    #[serde(default, rename = "experiment")]
    pub experiments: Vec<ManifestEntry>,
}

/// A warning raised while reading one corpus of a run.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SourceWarning {
    pub language: String,
    pub source: String,
    pub path: PathBuf,
    pub warning: CorpusWarning,
}

#[derive(Debug, Default)]
pub struct RunOutput {
    pub reports: Vec<ExperimentReport>,
    pub warnings: Vec<SourceWarning>,
    /// Experiments that could not produce a report, e.g. nothing survived
    /// filtering.
    pub failures: Vec<(ManifestEntry, ExperimentError)>,
}

impl Manifest {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| ExperimentError::Manifest(e.to_string()))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| ExperimentError::Manifest(format!("{}: {e}", path.display())))?;
        let mut m = Self::from_toml(&text)?;
        let base = path.parent().unwrap_or_else(|| Path::new(""));
        m.resolve_paths(base);
        Ok(m)
    }

    /// Makes relative paths relative to `base`.
    pub fn resolve_paths(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        if let Some(p) = self.profiles.as_mut() {
            fix(p);
        }
        for e in &mut self.experiments {
            fix(&mut e.path);
            if let Some(w) = e.words.as_mut() {
                fix(w);
            }
        }
    }

    pub fn spec(&self) -> Result<ExperimentSpec> {
        let bad = ExperimentError::Manifest;
        Ok(ExperimentSpec {
            split: SplitSpec {
                train_fraction: self.train_fraction.unwrap_or(0.8),
                seed: self.seed,
            },
            scoring: self
                .scoring
                .as_deref()
                .map(str::parse)
                .transpose()
                .map_err(bad)?
                .unwrap_or_default(),
            divisor: self
                .relative_divisor
                .as_deref()
                .map(str::parse)
                .transpose()
                .map_err(bad)?
                .unwrap_or_default(),
            mode: self
                .filter_mode
                .as_deref()
                .map(str::parse)
                .transpose()
                .map_err(bad)?
                .unwrap_or_default(),
        })
    }

    /// Runs every experiment in parallel, then fills in the run median.
    pub fn run(&self) -> Result<RunOutput> {
        let spec = self.spec()?;
        let named = match &self.profiles {
            Some(p) => load_profiles(p)?,
            None => BTreeMap::new(),
        };
        let results: Vec<_> = self
            .experiments
            .par_iter()
            .map(|e| {
                let mut warnings = Vec::new();
                let r = run_entry(e, &named, &spec, &mut warnings);
                (e, r, warnings)
            })
            .collect();
        let mut out = RunOutput::default();
        for (e, r, w) in results {
            out.warnings.extend(w);
            match r {
                Ok(rep) => out.reports.push(rep),
                Err(err) => out.failures.push((e.clone(), err)),
            }
        }
        set_medians(&mut out.reports);
        Ok(out)
    }
}

/// Resolves a language name against named profiles, then built-ins.
pub fn resolve_profile(
    language: &str,
    direction: Option<&str>,
    named: &BTreeMap<String, LanguageProfile>,
) -> Result<LanguageProfile> {
    if let Some(p) = named.get(language) {
        if direction.is_some() {
            return Err(ExperimentError::Manifest(format!(
                "profile {language:?} comes from the profile file; set its direction there"
            )));
        }
        return Ok(p.clone());
    }
    let lang: Language = language.parse()?;
    let direction = direction.map(Direction::from_str).transpose()?;
    Ok(LanguageProfile::with_options(
        lang,
        &ProfileOptions {
            direction,
            ..Default::default()
        },
    )?)
}

fn run_entry(
    e: &ManifestEntry,
    named: &BTreeMap<String, LanguageProfile>,
    spec: &ExperimentSpec,
    warnings: &mut Vec<SourceWarning>,
) -> Result<ExperimentReport> {
    let profile = resolve_profile(&e.language, e.direction.as_deref(), named)?;
    let kind: SourceKind = e.kind.parse().map_err(ExperimentError::Manifest)?;
    let corpus = if kind == SourceKind::AcBigrams {
        read_ac(e.words.as_deref(), &e.path, e.expand)?.0
    } else {
        CorpusSource::new(kind, &e.path, e.line_limit)?.read()?
    };
    warnings.extend(corpus.warnings.iter().map(|w| SourceWarning {
        language: e.language.clone(),
        source: e.source.clone(),
        path: e.path.clone(),
        warning: w.clone(),
    }));
    let mut sentences = corpus.sentences;
    if let Some(n) = e.line_limit {
        sentences.truncate(n);
    }
    run_experiment(&e.source, &sentences, &profile, spec)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejection_rounding() {
        assert_eq!(rejection_stats(1047, 27).unwrap().to_string(), "2.51");
        assert_eq!(rejection_stats(8, 171).unwrap().to_string(), "95.53");
        assert_eq!(rejection_stats(41276, 8724).unwrap().to_string(), "17.45");
        assert_eq!(rejection_stats(10, 0).unwrap().to_string(), "0.00");
        assert_eq!(rejection_stats(0, 3).unwrap().to_string(), "100.00");
        assert_eq!(rejection_stats(7, 1).unwrap().to_string(), "12.50");
        assert_eq!(rejection_stats(1999, 1).unwrap().to_string(), "0.05");
        assert!(matches!(
            rejection_stats(0, 0),
            Err(ExperimentError::EmptyCorpus)
        ));
    }

    #[test]
    fn metric_columns() {
        let m = compute_metrics(2248.49, 2241.58, 2288, &[], RelativeDivisor::Ngrams);
        assert_eq!(format!("{:.2}", m.raw), "-6.91");
        assert_eq!(m.from_median, 0.0);
        assert_eq!(
            format!("{:.8}", diff_from_median(-0.00003489, -0.00302080)),
            "0.00298591"
        );
        assert_eq!(diff_from_median(-0.00003489, 0.0), -0.00003489);
        let b = compute_metrics(200.0, 150.0, 10, &[], RelativeDivisor::Base);
        assert_eq!(b.relative, -0.25);
        assert_eq!(median(&[3.0, 1.0, 2.0, 10.0]), Some(2.5));
        assert_eq!(median(&[]), None);
    }

    #[test]
    fn source_summaries() {
        let rep = |source: &str, pct: f64| ExperimentReport {
            language: "x".into(),
            source: source.into(),
            base_pp: 1.0,
            exp_pp: 1.0,
            raw_diff: 0.0,
            relative_diff: 0.0,
            diff_from_median: 0.0,
            n_test_ngrams: 1,
            kept: 0,
            rejected: 0,
            pct_rejected: pct,
        };
        let s = summarize_by_source(&[
            rep("AC", 17.45),
            rep("UD", 2.51),
            rep("AC", 18.48),
            rep("UD", 5.02),
        ]);
        assert_eq!(s.len(), 2);
        assert!((s[0].mean_pct - 17.965).abs() < 1e-12 && (s[0].median_pct - 17.965).abs() < 1e-12);
        assert!((s[1].mean_pct - 3.765).abs() < 1e-12 && (s[1].median_pct - 3.765).abs() < 1e-12);
        let one = summarize_by_source(&[rep("OSCAR", 95.53)]);
        assert_eq!((one[0].mean_pct, one[0].median_pct), (95.53, 95.53));
    }

    #[test]
    fn empty_cascade_changes_nothing() {
        let so = LanguageProfile::builtin(Language::Somali).unwrap();
        let sentences: Vec<String> = (0..50)
            .map(|i| format!("waa {} maxay {}", i % 7, "x".repeat(i % 5 + 1)))
            .collect();
        let r = run_experiment("LCC", &sentences, &so, &ExperimentSpec::default()).unwrap();
        assert_eq!(r.raw_diff, 0.0);
        assert_eq!(r.base_pp, r.exp_pp);
        assert_eq!((r.kept, r.rejected), (50, 0));
    }

    #[test]
    fn nothing_survives() {
        let so = LanguageProfile::builtin(Language::Somali).unwrap();
        let r = run_experiment("OSCAR", &["собака"], &so, &ExperimentSpec::default());
        assert!(matches!(
            r,
            Err(ExperimentError::EmptyAfterFiltering { .. })
        ));
    }

    #[test]
    fn tsv_round_trip() {
        let so = LanguageProfile::builtin(Language::Somali).unwrap();
        let sentences: Vec<String> = (0..20).map(|i| format!("a{} b", i % 3)).collect();
        let mut reps =
            vec![run_experiment("LCC", &sentences, &so, &ExperimentSpec::default()).unwrap()];
        set_medians(&mut reps);
        let text = to_tsv(&reps);
        let back = parse_tsv(&text).unwrap();
        assert_eq!(to_tsv(&back), text);
        assert!(render_table(&back).lines().count() == 2);
        assert!(parse_tsv("nope\n").is_err());
    }

    #[test]
    fn manifest_spec() {
        let m = Manifest::from_toml(
            "seed = 3\nscoring = \"bigrams\"\nrelative_divisor = \"base\"\n[[experiment]]\nlanguage = \"zulu\"\nsource = \"UD\"\nkind = \"ud\"\npath = \"x.conllu\"\n",
        )
        .unwrap();
        let s = m.spec().unwrap();
        assert_eq!(
            (s.split.seed, s.scoring, s.divisor, s.mode),
            (
                3,
                Scoring::Bigrams,
                RelativeDivisor::Base,
                FilterMode::Sentence
            )
        );
        assert_eq!(m.experiments.len(), 1);
        assert!(Manifest::from_toml("scoring = \"trigrams\"\n")
            .unwrap()
            .spec()
            .is_err());
        assert!(Manifest::from_toml("bogus = 1\n").is_err());
    }
}
