//! Article loading, sentence segmentation and span-to-sentence label projection.
//!
//! Articles are `article<ID>.txt` files whose first line is the title. Span
//! annotations use byte offsets into the raw file. Each sentence receives at most
//! one technique: the one whose overlapping span starts first, with ties on the
//! start offset broken by a seeded RNG.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::fs;
use std::ops::Range;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rand::seq::IndexedRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::analysis::{behavior_stats, BehaviorStats};
use crate::text::mix_seed;
use crate::{Error, Result};

macro_rules! techniques {
    ($($variant:ident => $canonical:literal, $display:literal;)*) => {
        /// Sentence label: no propaganda, or one of the 18 techniques.
        #[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
        pub enum TechniqueLabel {
            $($variant),*
        }

        impl TechniqueLabel {
            /// Every label in the fixed class order; `NonPropaganda` first.
            pub const ALL: [TechniqueLabel; 19] = [$(TechniqueLabel::$variant),*];

            /// Annotation-file spelling.
            pub fn as_str(self) -> &'static str {
                match self {
                    $(TechniqueLabel::$variant => $canonical),*
                }
            }

            /// Human-readable name used in reports.
            pub fn display_name(self) -> &'static str {
                match self {
                    $(TechniqueLabel::$variant => $display),*
                }
            }
        }
    };
}

techniques! {
    NonPropaganda => "non-propaganda", "Non-propaganda";
    NameCalling => "Name_Calling,Labeling", "Name Calling";
    Repetition => "Repetition", "Repetition";
    Slogans => "Slogans", "Slogans";
    AppealToFear => "Appeal_to_fear-prejudice", "Appeal to Fear";
    Doubt => "Doubt", "Doubt";
    Exaggeration => "Exaggeration,Minimisation", "Exaggeration";
    FlagWaving => "Flag-Waving", "Flag-Waving";
    LoadedLanguage => "Loaded_Language", "Loaded Language";
    ReductioAdHitlerum => "Reductio_ad_hitlerum", "Reduction ad Hitlerum";
    Bandwagon => "Bandwagon", "Bandwagon";
    CausalOversimplification => "Causal_Oversimplification", "Causal Oversimplification";
    Obfuscation => "Obfuscation,Intentional_Vagueness,Confusion", "Obfuscation, Intentional Vagueness, Confusion";
    AppealToAuthority => "Appeal_to_Authority", "Appeal to Authority";
    BlackAndWhiteFallacy => "Black-and-White_Fallacy", "Black-and-White Fallacy";
    ThoughtTerminatingCliches => "Thought-terminating_Cliches", "Thought-terminating Cliches";
    RedHerring => "Red_Herring", "Red Herring";
    StrawMen => "Straw_Men", "Straw Men";
    Whataboutism => "Whataboutism", "Whataboutism";
}

impl TechniqueLabel {
    /// The 18 techniques, without `NonPropaganda`.
    pub fn techniques() -> &'static [TechniqueLabel] {
        &Self::ALL[1..]
    }

    /// Position in [`TechniqueLabel::ALL`].
    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Option<Self> {
        Self::ALL.get(i).copied()
    }

    pub fn is_propaganda(self) -> bool {
        self != TechniqueLabel::NonPropaganda
    }
}

impl fmt::Display for TechniqueLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for TechniqueLabel {
    type Err = Error;

    /// Accepts the annotation spelling or the display name.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        Self::ALL
            .iter()
            .copied()
            .find(|t| t.as_str() == s || t.display_name() == s)
            .ok_or_else(|| Error::validation(format!("unknown technique {s:?}")))
    }
}

impl Serialize for TechniqueLabel {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(self.as_str())
    }
}

impl<'de> Deserialize<'de> for TechniqueLabel {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Dev,
    Test,
}

impl Split {
    pub fn as_str(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Dev => "dev",
            Split::Test => "test",
        }
    }
}

impl fmt::Display for Split {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Split {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "train" => Ok(Split::Train),
            "dev" | "development" => Ok(Split::Dev),
            "test" => Ok(Split::Test),
            other => Err(Error::validation(format!("unknown split {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Sentence {
    /// 1-based; 1 is the title.
    pub index: usize,
    pub text: String,
    /// Byte range in the raw article text.
    pub range: Range<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Article {
    pub article_id: String,
    pub raw: String,
    pub title: String,
    pub body: String,
    pub sentences: Vec<Sentence>,
}

impl Article {
    /// Builds an article from raw text and segments it.
    pub fn from_raw(article_id: impl Into<String>, raw: impl Into<String>) -> Result<Self> {
        let article_id = article_id.into();
        let raw = raw.into();
        if raw.trim().is_empty() {
            return Err(Error::validation(format!("article {article_id} is empty")));
        }
        let title_end = raw.find('\n').unwrap_or(raw.len());
        let title = raw[..title_end].trim().to_string();
        if title.is_empty() {
            return Err(Error::validation(format!(
                "article {article_id} has an empty title line"
            )));
        }
        let body = raw.get(title_end + 1..).unwrap_or("").to_string();
        let mut article = Article {
            article_id,
            raw,
            title,
            body,
            sentences: Vec::new(),
        };
        article.sentences = segment_sentences(&article);
        Ok(article)
    }

    pub fn n_sentences(&self) -> usize {
        self.sentences.len()
    }

    /// Sentence by 1-based index.
    pub fn sentence(&self, index: usize) -> Option<&Sentence> {
        index.checked_sub(1).and_then(|i| self.sentences.get(i))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SpanAnnotation {
    pub technique: TechniqueLabel,
    pub begin: usize,
    pub end: usize,
}

/// Annotations grouped by article id.
pub type SpanIndex = BTreeMap<String, Vec<SpanAnnotation>>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SentenceRecord {
    pub article_id: String,
    #[serde(rename = "index")]
    pub sentence_index: usize,
    #[serde(rename = "n")]
    pub n_sentences: usize,
    pub text: String,
    pub label: TechniqueLabel,
    pub split: Option<Split>,
}

/// Loads every `article<ID>.txt` in `dir`, sorted by id (numeric ids first, in
/// numeric order). Other files are ignored.
pub fn load_articles(dir: impl AsRef<Path>) -> Result<Vec<Article>> {
    let dir = dir.as_ref();
    let entries = fs::read_dir(dir).map_err(|e| Error::io(dir, e))?;
    let mut found: Vec<(String, PathBuf)> = Vec::new();
    for entry in entries {
        let entry = entry.map_err(|e| Error::io(dir, e))?;
        let name = entry.file_name();
        let Some(name) = name.to_str() else { continue };
        if let Some(id) = name
            .strip_prefix("article")
            .and_then(|s| s.strip_suffix(".txt"))
            .filter(|id| !id.is_empty())
        {
            found.push((id.to_string(), entry.path()));
        }
    }
    found.sort_by(|a, b| id_order(&a.0, &b.0));
    found
        .into_iter()
        .map(|(id, path)| {
            let raw = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
            Article::from_raw(id, raw)
                .map_err(|e| Error::validation(format!("{}: {e}", path.display())))
        })
        .collect()
}

fn id_order(a: &str, b: &str) -> std::cmp::Ordering {
    match (a.parse::<u64>(), b.parse::<u64>()) {
        (Ok(x), Ok(y)) => x.cmp(&y),
        (Ok(_), Err(_)) => std::cmp::Ordering::Less,
        (Err(_), Ok(_)) => std::cmp::Ordering::Greater,
        _ => a.cmp(b),
    }
}

/// Parses `article_id<TAB>technique<TAB>begin<TAB>end` rows. Blank lines are skipped.
pub fn parse_spans(content: &str, context: &str) -> Result<SpanIndex> {
    let mut out = SpanIndex::new();
    for (lineno, line) in content.lines().enumerate() {
        let line_no = lineno + 1;
        let parse_err = |message: String| Error::Parse {
            context: context.to_string(),
            line: line_no,
            message,
        };
        if line.trim().is_empty() {
            continue;
        }
        let cols: Vec<&str> = line.split('\t').collect();
        if cols.len() != 4 {
            return Err(parse_err(format!("expected 4 tab-separated columns, got {}", cols.len())));
        }
        let technique: TechniqueLabel = cols[1].parse().map_err(|e: Error| parse_err(e.to_string()))?;
        if technique == TechniqueLabel::NonPropaganda {
            return Err(parse_err("spans cannot carry the non-propaganda label".into()));
        }
        let offset = |s: &str, what: &str| {
            s.trim()
                .parse::<usize>()
                .map_err(|_| parse_err(format!("bad {what} offset {s:?}")))
        };
        let begin = offset(cols[2], "begin")?;
        let end = offset(cols[3], "end")?;
        if begin >= end {
            return Err(Error::validation(format!(
                "{context}, line {line_no}: empty or inverted span {begin}..{end}"
            )));
        }
        out.entry(cols[0].trim().to_string())
            .or_default()
            .push(SpanAnnotation { technique, begin, end });
    }
    Ok(out)
}

pub fn load_spans(path: impl AsRef<Path>) -> Result<SpanIndex> {
    let path = path.as_ref();
    let content = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_spans(&content, &path.display().to_string())
}

const TERMINALS: [char; 3] = ['.', '!', '?'];
const CLOSERS: [char; 7] = ['"', '\'', '”', '’', ')', ']', '»'];
const ABBREVIATIONS: [&str; 24] = [
    "mr", "mrs", "ms", "dr", "prof", "sr", "jr", "st", "vs", "etc", "inc", "ltd", "co", "corp",
    "gen", "gov", "sen", "rep", "lt", "col", "sgt", "jan", "feb", "e.g",
];

/// Rule-based segmentation.
///
/// The title (first line, trimmed) is sentence 1. The body is split on newlines,
/// then after a run of terminal punctuation (`.`, `!`, `?`, plus trailing closing
/// quotes/brackets) that is followed by whitespace, unless the run is a single
/// `.` after a known abbreviation or the next word starts lowercase. Pieces are
/// trimmed and empty pieces dropped, so every non-whitespace byte of the body is
/// covered by exactly one range.
pub fn segment_sentences(article: &Article) -> Vec<Sentence> {
    let raw = article.raw.as_str();
    let title_line_end = raw.find('\n').unwrap_or(raw.len());
    let mut ranges = Vec::new();
    if let Some(r) = trimmed(raw, 0..title_line_end) {
        ranges.push(r);
    }
    let mut line_start = title_line_end + 1;
    while line_start < raw.len() {
        let line_end = raw[line_start..].find('\n').map_or(raw.len(), |p| line_start + p);
        split_line(raw, line_start..line_end, &mut ranges);
        line_start = line_end + 1;
    }
    ranges
        .into_iter()
        .enumerate()
        .map(|(i, range)| Sentence {
            index: i + 1,
            text: raw[range.clone()].to_string(),
            range,
        })
        .collect()
}

fn trimmed(raw: &str, range: Range<usize>) -> Option<Range<usize>> {
    let s = &raw[range.clone()];
    let lead = s.len() - s.trim_start().len();
    let t = s.trim();
    (!t.is_empty()).then(|| range.start + lead..range.start + lead + t.len())
}

fn split_line(raw: &str, line: Range<usize>, out: &mut Vec<Range<usize>>) {
    let text = &raw[line.clone()];
    let chars: Vec<(usize, char)> = text.char_indices().collect();
    let mut piece_start = 0;
    let mut i = 0;
    while i < chars.len() {
        if !TERMINALS.contains(&chars[i].1) {
            i += 1;
            continue;
        }
        let run_start = i;
        let mut j = i;
        while j < chars.len() && TERMINALS.contains(&chars[j].1) {
            j += 1;
        }
        while j < chars.len() && CLOSERS.contains(&chars[j].1) {
            j += 1;
        }
        let at_end = j == chars.len();
        if !at_end && !chars[j].1.is_whitespace() {
            i = j;
            continue;
        }
        let boundary = chars.get(j).map_or(text.len(), |&(b, _)| b);
        let single_period = j - run_start == 1 && chars[run_start].1 == '.';
        let suppressed = !at_end
            && ((single_period && preceded_by_abbreviation(&text[..chars[run_start].0]))
                || next_word_is_lowercase(&text[boundary..]));
        if !suppressed {
            if let Some(r) = trimmed(raw, line.start + piece_start..line.start + boundary) {
                out.push(r);
            }
            piece_start = boundary;
        }
        i = j;
    }
    if let Some(r) = trimmed(raw, line.start + piece_start..line.end) {
        out.push(r);
    }
}

fn preceded_by_abbreviation(before: &str) -> bool {
    let word = before
        .rsplit(|c: char| c.is_whitespace() || c == '(' || c == '"')
        .next()
        .unwrap_or("")
        .to_lowercase();
    ABBREVIATIONS.contains(&word.as_str()) || word == "u.s" || word == "u.k" || word == "i.e"
}

fn next_word_is_lowercase(after: &str) -> bool {
    after
        .trim_start()
        .chars()
        .next()
        .is_some_and(|c| c.is_lowercase())
}

/// Projects span annotations onto sentences.
///
/// A sentence overlapped by at least one span takes the technique of the span
/// with the smallest begin offset; when several overlapping spans share that
/// offset with different techniques, one is drawn uniformly from an RNG seeded
/// by `(seed, article_id, sentence index)`, so adding a span never affects a
/// sentence it does not overlap. Records come back without a split.
pub fn project_labels(
    article: &Article,
    spans: &[SpanAnnotation],
    seed: u64,
) -> Result<Vec<SentenceRecord>> {
    let len = article.raw.len();
    if let Some(bad) = spans.iter().find(|s| s.begin >= s.end || s.end > len) {
        return Err(Error::validation(format!(
            "span {}..{} ({}) is outside article {} (length {len})",
            bad.begin, bad.end, bad.technique, article.article_id
        )));
    }
    let n = article.n_sentences();
    let records = article
        .sentences
        .iter()
        .map(|sentence| {
            let overlapping = spans
                .iter()
                .filter(|s| s.begin < sentence.range.end && sentence.range.start < s.end);
            let first = overlapping.clone().map(|s| s.begin).min();
            let label = match first {
                None => TechniqueLabel::NonPropaganda,
                Some(first) => {
                    let tied: Vec<TechniqueLabel> = overlapping
                        .filter(|s| s.begin == first)
                        .map(|s| s.technique)
                        .collect::<BTreeSet<_>>()
                        .into_iter()
                        .collect();
                    if tied.len() == 1 {
                        tied[0]
                    } else {
                        let key = format!("{}#{}", article.article_id, sentence.index);
                        let mut rng = ChaCha8Rng::seed_from_u64(mix_seed(seed, &key));
                        *tied.choose(&mut rng).expect("non-empty tie set")
                    }
                }
            };
            SentenceRecord {
                article_id: article.article_id.clone(),
                sentence_index: sentence.index,
                n_sentences: n,
                text: sentence.text.clone(),
                label,
                split: None,
            }
        })
        .collect();
    Ok(records)
}

/// Projects every article; articles without annotations are all `NonPropaganda`.
/// Annotations for unknown articles are rejected.
pub fn project_corpus(articles: &[Article], spans: &SpanIndex, seed: u64) -> Result<Vec<SentenceRecord>> {
    let known: BTreeSet<&str> = articles.iter().map(|a| a.article_id.as_str()).collect();
    if let Some(id) = spans.keys().find(|id| !known.contains(id.as_str())) {
        return Err(Error::validation(format!("spans reference unknown article {id}")));
    }
    let mut out = Vec::new();
    for article in articles {
        let article_spans = spans.get(&article.article_id).map_or(&[][..], Vec::as_slice);
        out.extend(project_labels(article, article_spans, seed)?);
    }
    Ok(out)
}

pub type SplitSpec = BTreeMap<String, Split>;

/// Parses `article_id<TAB>split` rows.
pub fn parse_split_spec(content: &str, context: &str) -> Result<SplitSpec> {
    let mut out = SplitSpec::new();
    for (lineno, line) in content.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let parse_err = |message: String| Error::Parse {
            context: context.to_string(),
            line: lineno + 1,
            message,
        };
        let (id, split) = line
            .split_once('\t')
            .ok_or_else(|| parse_err("expected article_id<TAB>split".into()))?;
        let split: Split = split.parse().map_err(|e: Error| parse_err(e.to_string()))?;
        if let Some(prev) = out.insert(id.trim().to_string(), split) {
            if prev != split {
                return Err(parse_err(format!("article {id} assigned to both {prev} and {split}")));
            }
        }
    }
    Ok(out)
}

pub fn load_split_spec(path: impl AsRef<Path>) -> Result<SplitSpec> {
    let path = path.as_ref();
    let content = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_split_spec(&content, &path.display().to_string())
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct DataSplit {
    pub train: Vec<SentenceRecord>,
    pub dev: Vec<SentenceRecord>,
    pub test: Vec<SentenceRecord>,
}

impl DataSplit {
    pub fn counts(&self) -> (usize, usize, usize) {
        (self.train.len(), self.dev.len(), self.test.len())
    }

    pub fn part(&self, split: Split) -> &[SentenceRecord] {
        match split {
            Split::Train => &self.train,
            Split::Dev => &self.dev,
            Split::Test => &self.test,
        }
    }

    /// All records, in train, dev, test order.
    pub fn into_records(self) -> Vec<SentenceRecord> {
        let mut all = self.train;
        all.extend(self.dev);
        all.extend(self.test);
        all
    }
}

/// Partitions records by article; every article id must be mapped.
pub fn split_dataset(records: Vec<SentenceRecord>, spec: &SplitSpec) -> Result<DataSplit> {
    let mut out = DataSplit::default();
    for mut record in records {
        let split = *spec.get(&record.article_id).ok_or_else(|| {
            Error::validation(format!("article {} has no split assignment", record.article_id))
        })?;
        record.split = Some(split);
        match split {
            Split::Train => out.train.push(record),
            Split::Dev => out.dev.push(record),
            Split::Test => out.test.push(record),
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusStats {
    pub articles: usize,
    pub sentences: usize,
    pub propaganda_sentences: usize,
    /// Count per label, in class order (includes non-propaganda).
    pub per_label: BTreeMap<String, usize>,
    pub behavior: BehaviorStats,
}

pub fn corpus_stats(records: &[SentenceRecord]) -> CorpusStats {
    let mut per_label: BTreeMap<String, usize> =
        TechniqueLabel::ALL.iter().map(|t| (t.as_str().to_string(), 0)).collect();
    for r in records {
        *per_label.get_mut(r.label.as_str()).expect("all labels present") += 1;
    }
    let articles: BTreeSet<&str> = records.iter().map(|r| r.article_id.as_str()).collect();
    CorpusStats {
        articles: articles.len(),
        sentences: records.len(),
        propaganda_sentences: records.iter().filter(|r| r.label.is_propaganda()).count(),
        per_label,
        behavior: behavior_stats(records),
    }
}

/// Writes records as JSON lines.
pub fn write_jsonl<T: Serialize>(path: impl AsRef<Path>, items: &[T]) -> Result<()> {
    let path = path.as_ref();
    let mut buf = String::new();
    for item in items {
        buf.push_str(&serde_json::to_string(item)?);
        buf.push('\n');
    }
    fs::write(path, buf).map_err(|e| Error::io(path, e))
}

pub fn read_records_jsonl(path: impl AsRef<Path>) -> Result<Vec<SentenceRecord>> {
    let path = path.as_ref();
    let content = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    content
        .lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            serde_json::from_str(l).map_err(|e| Error::Parse {
                context: path.display().to_string(),
                line: i + 1,
                message: e.to_string(),
            })
        })
        .collect()
}

/// TSV equivalent of the JSONL record file: `article_id index n label split text`.
pub fn write_records_tsv(path: impl AsRef<Path>, records: &[SentenceRecord]) -> Result<()> {
    let path = path.as_ref();
    let mut w = csv::WriterBuilder::new()
        .delimiter(b'\t')
        .from_path(path)?;
    w.write_record(["article_id", "index", "n", "label", "split", "text"])?;
    for r in records {
        w.write_record([
            r.article_id.as_str(),
            &r.sentence_index.to_string(),
            &r.n_sentences.to_string(),
            r.label.as_str(),
            r.split.map_or("", Split::as_str),
            r.text.as_str(),
        ])?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Groups records by article id, keeping input order within each article.
pub fn group_by_article(records: &[SentenceRecord]) -> HashMap<&str, Vec<&SentenceRecord>> {
    let mut out: HashMap<&str, Vec<&SentenceRecord>> = HashMap::new();
    for r in records {
        out.entry(r.article_id.as_str()).or_default().push(r);
    }
    out
}
