//! Readers for the supported corpus formats and a plain-text writer.
//!
//! Readers never fail on content: malformed lines are skipped or repaired
//! and reported as [`CorpusWarning`]s. Only I/O errors are fatal. Paths
//! ending in `.gz` are decompressed transparently.

use std::fmt;
use std::fs::File;
use std::io::{self, BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use flate2::read::MultiGzDecoder;
use flate2::write::GzEncoder;
use flate2::Compression;
use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error("line limit must be at least 1")]
    InvalidLineLimit,
    #[error("sentence {0} contains a line break and cannot be written one per line")]
    Multiline(usize),
}

pub type Result<T> = std::result::Result<T, CorpusError>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum SourceKind {
    /// CoNLL-U with `# text = ` comments.
    Ud,
    /// `ID<TAB>sentence` lines.
    Lcc,
    /// One document line per unit.
    Oscar,
    /// `token count` lines.
    AcWords,
    /// `token token count` lines.
    AcBigrams,
    /// One sentence per line, kept verbatim.
    Plain,
}

impl SourceKind {
    pub fn as_str(self) -> &'static str {
        match self {
            SourceKind::Ud => "ud",
            SourceKind::Lcc => "lcc",
            SourceKind::Oscar => "oscar",
            SourceKind::AcWords => "ac-words",
            SourceKind::AcBigrams => "ac-bigrams",
            SourceKind::Plain => "plain",
        }
    }
}

impl fmt::Display for SourceKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SourceKind {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s.to_lowercase().replace('_', "-").as_str() {
            "ud" | "conllu" => Ok(SourceKind::Ud),
            "lcc" => Ok(SourceKind::Lcc),
            "oscar" => Ok(SourceKind::Oscar),
            "ac-words" => Ok(SourceKind::AcWords),
            "ac" | "ac-bigrams" => Ok(SourceKind::AcBigrams),
            "plain" | "text" => Ok(SourceKind::Plain),
            _ => Err(format!("unknown source kind {s:?}")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CorpusWarning {
    /// A CoNLL-U sentence block without a `# text = ` comment.
    MissingText { line: usize },
    /// An LCC line without a tab, kept whole.
    NoTab { line: usize },
    /// A frequency-list line that does not parse; skipped.
    MalformedLine { line: usize, content: String },
    /// Bytes that are not UTF-8; replaced with U+FFFD.
    InvalidUtf8 { line: usize },
}

impl fmt::Display for CorpusWarning {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CorpusWarning::MissingText { line } => {
                write!(f, "line {line}: sentence block has no text comment")
            }
            CorpusWarning::NoTab { line } => write!(f, "line {line}: no tab, using the whole line"),
            CorpusWarning::MalformedLine { line, content } => {
                write!(f, "line {line}: malformed line {content:?}")
            }
            CorpusWarning::InvalidUtf8 { line } => write!(f, "line {line}: invalid UTF-8 replaced"),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Corpus {
    pub sentences: Vec<String>,
    pub warnings: Vec<CorpusWarning>,
}

/// Type and token totals of an AC word list.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct WordStats {
    pub types: usize,
    pub tokens: u64,
}

/// Where and how to read one corpus.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CorpusSource {
    pub kind: SourceKind,
    pub path: PathBuf,
    pub line_limit: Option<usize>,
}

impl CorpusSource {
    pub fn new(
        kind: SourceKind,
        path: impl Into<PathBuf>,
        line_limit: Option<usize>,
    ) -> Result<Self> {
        if line_limit == Some(0) {
            return Err(CorpusError::InvalidLineLimit);
        }
        Ok(CorpusSource {
            kind,
            path: path.into(),
            line_limit,
        })
    }

    /// Reads the sentences. AC word lists yield their tokens, one per line.
    pub fn read(&self) -> Result<Corpus> {
        let mut c = match self.kind {
            SourceKind::Ud => read_ud(&self.path)?,
            SourceKind::Lcc => read_lcc(&self.path)?,
            SourceKind::Oscar => return read_oscar(&self.path, self.line_limit),
            SourceKind::AcBigrams => read_ac(None, &self.path, false)?.0,
            SourceKind::AcWords => read_ac_words_as_sentences(&self.path)?,
            SourceKind::Plain => read_plain(&self.path)?,
        };
        if let Some(n) = self.line_limit {
            c.sentences.truncate(n);
        }
        Ok(c)
    }
}

fn io_err(path: &Path) -> impl FnOnce(io::Error) -> CorpusError + '_ {
    move |source| CorpusError::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn is_gz(path: &Path) -> bool {
    path.extension()
        .is_some_and(|e| e.eq_ignore_ascii_case("gz"))
}

fn open(path: &Path) -> Result<Box<dyn BufRead>> {
    let f = File::open(path).map_err(io_err(path))?;
    Ok(if is_gz(path) {
        Box::new(BufReader::new(MultiGzDecoder::new(f)))
    } else {
        Box::new(BufReader::new(f))
    })
}

/// Calls `f(line_number, line)` for each line, without the terminator.
fn for_each_line(
    path: &Path,
    warnings: &mut Vec<CorpusWarning>,
    mut f: impl FnMut(usize, &str) -> bool,
) -> Result<()> {
    let mut r = open(path)?;
    let mut buf = Vec::new();
    let mut n = 0;
    loop {
        buf.clear();
        if r.read_until(b'\n', &mut buf).map_err(io_err(path))? == 0 {
            return Ok(());
        }
        n += 1;
        while matches!(buf.last(), Some(b'\n' | b'\r')) {
            buf.pop();
        }
        let line = match std::str::from_utf8(&buf) {
            Ok(s) => std::borrow::Cow::Borrowed(s),
            Err(_) => {
                warnings.push(CorpusWarning::InvalidUtf8 { line: n });
                String::from_utf8_lossy(&buf)
            }
        };
        if !f(n, &line) {
            return Ok(());
        }
    }
}

/// One sentence per `# text = ` comment.
pub fn read_ud(path: impl AsRef<Path>) -> Result<Corpus> {
    let mut warnings = Vec::new();
    let mut sentences = Vec::new();
    let mut missing = Vec::new();
    // (text seen, first token line) for the current block
    let mut block: (bool, Option<usize>) = (false, None);
    fn close(block: &mut (bool, Option<usize>), missing: &mut Vec<usize>) {
        if let (false, Some(l)) = *block {
            missing.push(l);
        }
        *block = (false, None);
    }
    for_each_line(path.as_ref(), &mut warnings, |n, line| {
        let t = line.trim_end();
        if t.is_empty() {
            close(&mut block, &mut missing);
        } else if let Some(c) = t.strip_prefix('#') {
            if let Some(text) = c.trim_start().strip_prefix("text") {
                if let Some(text) = text.trim_start().strip_prefix('=') {
                    if !block.0 {
                        sentences.push(text.trim().to_string());
                        block.0 = true;
                    }
                }
            }
        } else if block.1.is_none() {
            block.1 = Some(n);
        }
        true
    })?;
    close(&mut block, &mut missing);
    for line in missing {
        log::warn!("conllu block at line {line} has no text comment");
        warnings.push(CorpusWarning::MissingText { line });
    }
    warnings.sort_by_key(warning_line);
    Ok(Corpus {
        sentences,
        warnings,
    })
}

fn warning_line(w: &CorpusWarning) -> usize {
    match w {
        CorpusWarning::MissingText { line }
        | CorpusWarning::NoTab { line }
        | CorpusWarning::MalformedLine { line, .. }
        | CorpusWarning::InvalidUtf8 { line } => *line,
    }
}

/// The text after the first tab of each line.
pub fn read_lcc(path: impl AsRef<Path>) -> Result<Corpus> {
    let mut warnings = Vec::new();
    let mut sentences = Vec::new();
    let mut no_tab = Vec::new();
    for_each_line(path.as_ref(), &mut warnings, |n, line| {
        if line.trim().is_empty() {
            return true;
        }
        match line.split_once('\t') {
            Some((_, s)) => sentences.push(s.to_string()),
            None => {
                no_tab.push(CorpusWarning::NoTab { line: n });
                sentences.push(line.to_string());
            }
        }
        true
    })?;
    warnings.extend(no_tab);
    warnings.sort_by_key(warning_line);
    Ok(Corpus {
        sentences,
        warnings,
    })
}

/// Non-blank lines, at most `line_limit` of them.
pub fn read_oscar(path: impl AsRef<Path>, line_limit: Option<usize>) -> Result<Corpus> {
    if line_limit == Some(0) {
        return Err(CorpusError::InvalidLineLimit);
    }
    let mut warnings = Vec::new();
    let mut sentences = Vec::new();
    let limit = line_limit.unwrap_or(usize::MAX);
    for_each_line(path.as_ref(), &mut warnings, |_, line| {
        if !line.trim().is_empty() {
            sentences.push(line.to_string());
        }
        sentences.len() < limit
    })?;
    Ok(Corpus {
        sentences,
        warnings,
    })
}

fn parse_freq_line(line: &str, arity: usize) -> Option<(Vec<&str>, u64)> {
    let fields: Vec<&str> = line.split_whitespace().collect();
    if fields.len() != arity + 1 {
        return None;
    }
    let count = fields[arity].parse().ok()?;
    Some((fields[..arity].to_vec(), count))
}

fn read_freq(
    path: &Path,
    arity: usize,
    mut f: impl FnMut(Vec<&str>, u64),
) -> Result<Vec<CorpusWarning>> {
    let mut warnings = Vec::new();
    let mut bad = Vec::new();
    for_each_line(path, &mut warnings, |n, line| {
        if line.trim().is_empty() {
            return true;
        }
        match parse_freq_line(line, arity) {
            Some((toks, c)) => f(toks, c),
            None => bad.push(CorpusWarning::MalformedLine {
                line: n,
                content: line.to_string(),
            }),
        }
        true
    })?;
    warnings.extend(bad);
    warnings.sort_by_key(warning_line);
    Ok(warnings)
}

fn read_ac_words_as_sentences(path: &Path) -> Result<Corpus> {
    let mut sentences = Vec::new();
    let warnings = read_freq(path, 1, |t, _| sentences.push(t[0].to_string()))?;
    Ok(Corpus {
        sentences,
        warnings,
    })
}

/// Each bigram line becomes one two-token sentence, repeated `count` times
/// when `expand` is set. The word list, when given, only feeds statistics.
pub fn read_ac(
    words: Option<&Path>,
    bigrams: impl AsRef<Path>,
    expand: bool,
) -> Result<(Corpus, Option<WordStats>)> {
    let stats = match words {
        Some(p) => {
            let mut s = WordStats::default();
            read_freq(p, 1, |_, c| {
                s.types += 1;
                s.tokens += c;
            })?;
            Some(s)
        }
        None => None,
    };
    let mut sentences = Vec::new();
    let warnings = read_freq(bigrams.as_ref(), 2, |t, c| {
        let s = format!("{} {}", t[0], t[1]);
        let reps = if expand { c } else { 1 };
        for _ in 0..reps {
            sentences.push(s.clone());
        }
    })?;
    Ok((
        Corpus {
            sentences,
            warnings,
        },
        stats,
    ))
}

/// Reads one sentence per line; empty lines are sentences too.
pub fn read_plain(path: impl AsRef<Path>) -> Result<Corpus> {
    let mut sentences = Vec::new();
    let mut warnings = Vec::new();
    for_each_line(path.as_ref(), &mut warnings, |_, line| {
        sentences.push(line.to_string());
        true
    })?;
    Ok(Corpus {
        sentences,
        warnings,
    })
}

/// Writes one sentence per line, gzip-compressed for `.gz` paths.
pub fn write_plain<S: AsRef<str>>(path: impl AsRef<Path>, sentences: &[S]) -> Result<()> {
    let path = path.as_ref();
    if let Some(i) = sentences
        .iter()
        .position(|s| s.as_ref().contains(['\n', '\r']))
    {
        return Err(CorpusError::Multiline(i));
    }
    let f = File::create(path).map_err(io_err(path))?;
    let mut w: Box<dyn Write> = if is_gz(path) {
        Box::new(GzEncoder::new(BufWriter::new(f), Compression::default()))
    } else {
        Box::new(BufWriter::new(f))
    };
    for s in sentences {
        writeln!(w, "{}", s.as_ref()).map_err(io_err(path))?;
    }
    w.flush().map_err(io_err(path))
}
