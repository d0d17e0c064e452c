use std::collections::BTreeMap;
use std::fs::File;
use std::io::{self, BufRead, BufWriter, Read, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use serde_json::json;

use textnorm::corpus::{CorpusSource, CorpusWarning, SourceKind};
use textnorm::experiment::{
    parse_tsv, rejection_stats, render_summary, render_table, resolve_profile, summarize_by_source,
    to_tsv, ExperimentSpec, Manifest, ManifestEntry, RelativeDivisor,
};
use textnorm::lm::{split, NgramModel, Scoring, SplitSpec};
use textnorm::pipeline::{invalid_tokens, preprocess, FilterMode, Normalizer};
use textnorm::rules::{load_profiles, LanguageProfile};

#[derive(Parser)]
#[command(
    name = "textnorm",
    version,
    about = "Text normalization and corpus quality tools"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Normalize sentences, one per line.
    Normalize(NormalizeArgs),
    /// Count kept and rejected sentences per corpus.
    Stats(StatsArgs),
    /// Perplexity of a bigram model.
    Eval(EvalArgs),
    /// Compare base and experiment normalizers.
    Experiment(ExperimentArgs),
    /// Render an experiment table.
    Report(ReportArgs),
}

#[derive(Args)]
struct ProfileArgs {
    /// Built-in language (name or code), or a profile from --profiles.
    #[arg(long, short)]
    language: Option<String>,
    /// Orthography direction for Hausa or Igbo.
    #[arg(long)]
    direction: Option<String>,
    /// TOML file of `[profile.NAME]` tables.
    #[arg(long)]
    profiles: Option<PathBuf>,
}

impl ProfileArgs {
    fn profile(&self) -> Result<LanguageProfile> {
        let named = match &self.profiles {
            Some(p) => load_profiles(p)?,
            None => BTreeMap::new(),
        };
        match &self.language {
            Some(l) => Ok(resolve_profile(l, self.direction.as_deref(), &named)?),
            None if self.direction.is_some() => bail!("--direction needs --language"),
            None => Ok(LanguageProfile::generic()),
        }
    }
}

#[derive(Args)]
struct InputArgs {
    /// ud, lcc, oscar, ac-words, ac-bigrams (or ac) or plain.
    #[arg(long, default_value = "plain")]
    source_kind: SourceKind,
    /// Maximum number of sentences read.
    #[arg(long)]
    line_limit: Option<usize>,
    /// JSON-lines log of skipped or malformed input lines.
    #[arg(long)]
    log: Option<PathBuf>,
}

#[derive(Args)]
struct NormalizeArgs {
    #[command(flatten)]
    profile: ProfileArgs,
    #[command(flatten)]
    input: InputArgs,
    #[arg(long, default_value = "sentence")]
    filter_mode: FilterMode,
    /// Skip the language-specific rules.
    #[arg(long)]
    no_rules: bool,
    /// JSON-lines file receiving rejected sentences.
    #[arg(long)]
    rejected: Option<PathBuf>,
    /// Print every intermediate step instead of the result.
    #[arg(long)]
    trace: bool,
    #[arg(long, short)]
    output: Option<PathBuf>,
    /// Input file; standard input when absent or `-`.
    file: Option<PathBuf>,
}

#[derive(Args)]
struct StatsArgs {
    #[command(flatten)]
    profile: ProfileArgs,
    #[command(flatten)]
    input: InputArgs,
    #[arg(long, default_value = "sentence")]
    filter_mode: FilterMode,
    /// Source label of the rows; defaults to the file name.
    #[arg(long)]
    source: Option<String>,
    #[arg(required = true)]
    files: Vec<PathBuf>,
}

#[derive(Args)]
struct EvalArgs {
    /// Training sentences, already normalized.
    #[arg(long)]
    train: PathBuf,
    /// Test sentences; without it, --train is split.
    #[arg(long)]
    test: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 0.8)]
    train_fraction: f64,
    #[arg(long, default_value = "everygrams")]
    scoring: Scoring,
    /// Write the fitted counts here.
    #[arg(long)]
    save_model: Option<PathBuf>,
}

#[derive(Args)]
struct ExperimentArgs {
    /// TOML manifest listing the experiments; flags below override its spec.
    #[arg(long, conflicts_with_all = ["file", "language"])]
    manifest: Option<PathBuf>,
    #[command(flatten)]
    profile: ProfileArgs,
    #[arg(long, default_value = "plain")]
    source_kind: SourceKind,
    /// Source label in the report; defaults to the source kind.
    #[arg(long)]
    source: Option<String>,
    #[arg(long)]
    line_limit: Option<usize>,
    /// AC word list, for ac-bigrams input.
    #[arg(long)]
    words: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    filter_mode: Option<FilterMode>,
    #[arg(long)]
    scoring: Option<Scoring>,
    #[arg(long)]
    relative_divisor: Option<RelativeDivisor>,
    /// TSV output; standard output when absent.
    #[arg(long, short)]
    output: Option<PathBuf>,
    /// JSON-lines log of skipped lines and failed experiments.
    #[arg(long)]
    log: Option<PathBuf>,
    file: Option<PathBuf>,
}

#[derive(Args)]
struct ReportArgs {
    /// Table written by `experiment`.
    file: PathBuf,
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("textnorm: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn run(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::Normalize(a) => normalize(a),
        Command::Stats(a) => stats(a),
        Command::Eval(a) => eval(a),
        Command::Experiment(a) => experiment(a),
        Command::Report(a) => report(a),
    }
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(path).with_context(|| {
        format!("cannot create {}", path.display())
    })?))
}

fn output(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(create(p)?),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

/// JSON-lines sink; a no-op without a path.
struct Log(Option<BufWriter<File>>);

impl Log {
    fn open(path: Option<&Path>) -> Result<Self> {
        Ok(Log(path.map(create).transpose()?))
    }

    fn write(&mut self, v: serde_json::Value) -> Result<()> {
        if let Some(w) = &mut self.0 {
            writeln!(w, "{v}")?;
        }
        Ok(())
    }

    fn warnings(&mut self, path: &Path, ws: &[CorpusWarning]) -> Result<()> {
        for w in ws {
            self.write(json!({ "path": path, "warning": w }))?;
        }
        Ok(())
    }

    fn finish(self) -> Result<()> {
        if let Some(mut w) = self.0 {
            w.flush()?;
        }
        Ok(())
    }
}

fn read_stdin(warnings: &mut Vec<CorpusWarning>) -> Result<Vec<String>> {
    let mut r = io::stdin().lock();
    let mut out = Vec::new();
    let mut buf = Vec::new();
    while {
        buf.clear();
        r.read_until(b'\n', &mut buf)?
    } > 0
    {
        while matches!(buf.last(), Some(b'\n' | b'\r')) {
            buf.pop();
        }
        match String::from_utf8(std::mem::take(&mut buf)) {
            Ok(s) => out.push(s),
            Err(e) => {
                warnings.push(CorpusWarning::InvalidUtf8 {
                    line: out.len() + 1,
                });
                out.push(String::from_utf8_lossy(e.as_bytes()).into_owned());
            }
        }
    }
    Ok(out)
}

fn read_input(path: Option<&Path>, input: &InputArgs, log: &mut Log) -> Result<Vec<String>> {
    let (mut sentences, warnings, shown) = match path {
        None => {
            if input.source_kind != SourceKind::Plain {
                bail!("standard input must be plain text");
            }
            let mut w = Vec::new();
            (read_stdin(&mut w)?, w, PathBuf::from("-"))
        }
        Some(p) => {
            let c = CorpusSource::new(input.source_kind, p, input.line_limit)?.read()?;
            (c.sentences, c.warnings, p.to_path_buf())
        }
    };
    log.warnings(&shown, &warnings)?;
    if let Some(n) = input.line_limit {
        sentences.truncate(n);
    }
    Ok(sentences)
}

fn normalize(a: NormalizeArgs) -> Result<ExitCode> {
    let profile = a.profile.profile()?;
    let mut log = Log::open(a.input.log.as_deref())?;
    let file = a.file.as_deref().filter(|p| *p != Path::new("-"));
    let sentences = read_input(file, &a.input, &mut log)?;
    let normalizer = if a.no_rules {
        Normalizer::base(profile.clone(), a.filter_mode)
    } else {
        Normalizer::new(profile.clone(), a.filter_mode)
    };
    let mut out = output(a.output.as_deref())?;
    if a.trace {
        for s in &sentences {
            let t = normalizer.trace(s)?;
            for (i, step) in t.steps.iter().enumerate() {
                writeln!(out, "{}\t{step}", i + 1)?;
            }
            writeln!(out)?;
        }
        out.flush()?;
        return Ok(ExitCode::SUCCESS);
    }
    let results = normalizer.normalize_all(&sentences)?;
    let mut sidecar = Log::open(a.rejected.as_deref())?;
    let mut rejected = 0;
    for (i, r) in results.iter().enumerate() {
        if r.is_kept() {
            writeln!(out, "{}", r.text)?;
        } else {
            rejected += 1;
            sidecar.write(json!({
                "line": i + 1,
                "text": sentences[i],
                "invalid_tokens": invalid_tokens(&preprocess(&sentences[i]), &profile),
            }))?;
        }
    }
    out.flush()?;
    sidecar.finish()?;
    log.finish()?;
    if rejected > 0 {
        eprintln!(
            "textnorm: rejected {rejected} of {} sentences",
            results.len()
        );
    }
    Ok(ExitCode::SUCCESS)
}

fn stats(a: StatsArgs) -> Result<ExitCode> {
    let profile = a.profile.profile()?;
    let mut log = Log::open(a.input.log.as_deref())?;
    let normalizer = Normalizer::base(profile.clone(), a.filter_mode);
    let mut out = output(None)?;
    writeln!(out, "language\tsource\tkept\trejected\tpct_rejected")?;
    for f in &a.files {
        let sentences = read_input(Some(f), &a.input, &mut log)?;
        let results = normalizer.normalize_all(&sentences)?;
        let kept = results.iter().filter(|r| r.is_kept()).count();
        let rate = rejection_stats(kept, results.len() - kept)
            .with_context(|| format!("{} has no sentences", f.display()))?;
        let label = a.source.clone().unwrap_or_else(|| {
            f.file_name()
                .unwrap_or_default()
                .to_string_lossy()
                .into_owned()
        });
        writeln!(
            out,
            "{}\t{label}\t{}\t{}\t{rate}",
            profile.language(),
            rate.kept,
            rate.rejected
        )?;
    }
    out.flush()?;
    log.finish()?;
    Ok(ExitCode::SUCCESS)
}

fn read_lines(path: &Path) -> Result<Vec<String>> {
    Ok(CorpusSource::new(SourceKind::Plain, path, None)?
        .read()?
        .sentences)
}

fn eval(a: EvalArgs) -> Result<ExitCode> {
    let (train, test) = match &a.test {
        Some(t) => (read_lines(&a.train)?, read_lines(t)?),
        None => {
            let s = split(
                &read_lines(&a.train)?,
                &SplitSpec {
                    train_fraction: a.train_fraction,
                    seed: a.seed,
                },
            )?;
            if let Some(w) = s.warning {
                eprintln!("textnorm: {w}");
            }
            (s.train, s.test)
        }
    };
    let model = NgramModel::fit(&train)?;
    let r = model.perplexity(&test, a.scoring)?;
    if let Some(p) = &a.save_model {
        let mut w = create(p)?;
        w.write_all(model.to_text().as_bytes())?;
        w.flush()?;
    }
    println!("perplexity\t{:.2}", r.perplexity);
    println!("ngrams\t{}", r.n);
    println!("vocabulary\t{}", model.vocab_size());
    Ok(ExitCode::SUCCESS)
}

fn experiment(a: ExperimentArgs) -> Result<ExitCode> {
    let mut manifest = match &a.manifest {
        Some(p) => Manifest::load(p)?,
        None => {
            let Some(file) = &a.file else {
                bail!("give a corpus file or --manifest")
            };
            let Some(language) = &a.profile.language else {
                bail!("--language is required without --manifest")
            };
            let mut m = Manifest::from_toml("")?;
            m.profiles = a.profile.profiles.clone();
            m.experiments.push(ManifestEntry {
                language: language.clone(),
                source: a
                    .source
                    .clone()
                    .unwrap_or_else(|| a.source_kind.to_string()),
                kind: a.source_kind.to_string(),
                path: file.clone(),
                line_limit: a.line_limit,
                direction: a.profile.direction.clone(),
                words: a.words.clone(),
                expand: false,
            });
            m
        }
    };
    if let Some(s) = a.seed {
        manifest.seed = s;
    }
    let base: ExperimentSpec = manifest.spec()?;
    manifest.scoring = Some(a.scoring.unwrap_or(base.scoring).to_string());
    manifest.relative_divisor = Some(a.relative_divisor.unwrap_or(base.divisor).to_string());
    manifest.filter_mode = Some(a.filter_mode.unwrap_or(base.mode).to_string());

    let run = manifest.run()?;
    let mut log = Log::open(a.log.as_deref())?;
    for w in &run.warnings {
        log.write(json!({ "language": w.language, "source": w.source, "path": w.path, "warning": w.warning }))?;
    }
    for (e, err) in &run.failures {
        eprintln!("textnorm: {} {}: {err}", e.language, e.source);
        log.write(json!({ "language": e.language, "source": e.source, "path": e.path, "error": err.to_string() }))?;
    }
    log.finish()?;
    let mut out = output(a.output.as_deref())?;
    out.write_all(to_tsv(&run.reports).as_bytes())?;
    out.flush()?;
    Ok(if run.failures.is_empty() {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(2)
    })
}

fn report(a: ReportArgs) -> Result<ExitCode> {
    let mut text = String::new();
    File::open(&a.file)
        .with_context(|| format!("cannot open {}", a.file.display()))?
        .read_to_string(&mut text)?;
    let reports = parse_tsv(&text)?;
    if reports.is_empty() {
        bail!("{} has no rows", a.file.display());
    }
    print!("{}", render_table(&reports));
    println!();
    print!("{}", render_summary(&summarize_by_source(&reports)));
    Ok(ExitCode::SUCCESS)
}
