//! Feature families, schema, assembly and standardization.
//!
//! Column layout, in order:
//!
//! | group  | dims | content                                                        |
//! |--------|------|----------------------------------------------------------------|
//! | `rp`   | 1    | relative position `i / n`                                      |
//! | `sim`  | 1    | cosine similarity of sentence and title encodings              |
//! | `stn`  | 10   | stance probabilities then one-hot labels, each in the order related, unrelated, agree, disagree, discuss |
//! | `dp`   | 27   | constituent label counts                                       |
//! | `sent` | 4    | positive, neutral, negative, compound                          |
//! | `doc`  | 1    | document-level propaganda score                                |
//! | `emb`  | d    | sentence encoding (optional)                                   |

use std::collections::HashMap;
use std::fmt;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::corpus::{Article, SentenceRecord, Split, TechniqueLabel};
use crate::exec::Exec;
use crate::providers::{
    Providers, SentenceEncoding, SentimentScores, StanceClass, StanceDistribution, SyntaxLabel,
    SyntaxProfile,
};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FeatureGroup {
    Rp,
    Sim,
    Stn,
    Dp,
    Sent,
    Doc,
    Emb,
}

impl FeatureGroup {
    /// Canonical order.
    pub const ALL: [FeatureGroup; 7] = [
        FeatureGroup::Rp,
        FeatureGroup::Sim,
        FeatureGroup::Stn,
        FeatureGroup::Dp,
        FeatureGroup::Sent,
        FeatureGroup::Doc,
        FeatureGroup::Emb,
    ];

    /// The six interpretable families (everything except `emb`).
    pub const INTERPRETABLE: [FeatureGroup; 6] = [
        FeatureGroup::Rp,
        FeatureGroup::Sim,
        FeatureGroup::Stn,
        FeatureGroup::Dp,
        FeatureGroup::Sent,
        FeatureGroup::Doc,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            FeatureGroup::Rp => "rp",
            FeatureGroup::Sim => "sim",
            FeatureGroup::Stn => "stn",
            FeatureGroup::Dp => "dp",
            FeatureGroup::Sent => "sent",
            FeatureGroup::Doc => "doc",
            FeatureGroup::Emb => "emb",
        }
    }

    fn column_names(self, emb_dim: usize) -> Vec<String> {
        match self {
            FeatureGroup::Rp | FeatureGroup::Sim | FeatureGroup::Doc => vec![self.as_str().to_string()],
            FeatureGroup::Stn => ["p", "b"]
                .iter()
                .flat_map(|kind| STANCE_NAMES.iter().map(move |c| format!("stn_{kind}_{c}")))
                .collect(),
            FeatureGroup::Dp => SyntaxLabel::ALL.iter().map(|l| format!("dp_{}", l.as_str())).collect(),
            FeatureGroup::Sent => SENT_NAMES.iter().map(|n| format!("sent_{n}")).collect(),
            FeatureGroup::Emb => (0..emb_dim).map(|i| format!("emb_{i}")).collect(),
        }
    }
}

impl fmt::Display for FeatureGroup {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for FeatureGroup {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim().to_ascii_lowercase();
        FeatureGroup::ALL
            .iter()
            .copied()
            .find(|g| g.as_str() == s)
            .ok_or_else(|| Error::validation(format!("unknown feature group {s:?}")))
    }
}

/// Parses a comma-separated group list such as `rp,sim,stn`.
pub fn parse_groups(list: &str) -> Result<Vec<FeatureGroup>> {
    list.split(',').filter(|s| !s.trim().is_empty()).map(str::parse).collect()
}

const STANCE_NAMES: [&str; 5] = ["related", "unrelated", "agree", "disagree", "discuss"];
const SENT_NAMES: [&str; 4] = ["positive", "neutral", "negative", "compound"];

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeatureColumn {
    pub name: String,
    pub group: FeatureGroup,
}

/// Ordered, grouped feature columns.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct FeatureSchema {
    columns: Vec<FeatureColumn>,
}

impl FeatureSchema {
    /// Schema for a set of groups, laid out in canonical order. `emb_dim` is
    /// only used when `Emb` is selected and must then be positive.
    pub fn new(groups: &[FeatureGroup], emb_dim: usize) -> Result<Self> {
        if groups.is_empty() {
            return Err(Error::validation("at least one feature group is required"));
        }
        if groups.contains(&FeatureGroup::Emb) && emb_dim == 0 {
            return Err(Error::validation("embedding group needs a positive dimension"));
        }
        let columns = FeatureGroup::ALL
            .iter()
            .filter(|g| groups.contains(g))
            .flat_map(|&g| g.column_names(emb_dim).into_iter().map(move |name| FeatureColumn { name, group: g }))
            .collect();
        Ok(FeatureSchema { columns })
    }

    /// Validates a deserialized column list.
    pub fn from_columns(columns: Vec<FeatureColumn>) -> Result<Self> {
        let schema = FeatureSchema { columns };
        let groups = schema.groups();
        let emb_dim = schema.group_range(FeatureGroup::Emb).map_or(0, |r| r.len());
        let expected = FeatureSchema::new(&groups, emb_dim)?;
        if expected != schema {
            return Err(Error::validation("feature schema is not in canonical layout"));
        }
        Ok(schema)
    }

    pub fn columns(&self) -> &[FeatureColumn] {
        &self.columns
    }

    pub fn len(&self) -> usize {
        self.columns.len()
    }

    pub fn is_empty(&self) -> bool {
        self.columns.is_empty()
    }

    pub fn names(&self) -> Vec<&str> {
        self.columns.iter().map(|c| c.name.as_str()).collect()
    }

    pub fn position(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c.name == name)
    }

    /// Groups present, in canonical order.
    pub fn groups(&self) -> Vec<FeatureGroup> {
        let mut gs: Vec<FeatureGroup> = Vec::new();
        for c in &self.columns {
            if gs.last() != Some(&c.group) {
                gs.push(c.group);
            }
        }
        gs
    }

    pub fn contains(&self, group: FeatureGroup) -> bool {
        self.columns.iter().any(|c| c.group == group)
    }

    /// Column range of a group; groups are contiguous.
    pub fn group_range(&self, group: FeatureGroup) -> Option<std::ops::Range<usize>> {
        let start = self.columns.iter().position(|c| c.group == group)?;
        let len = self.columns[start..].iter().take_while(|c| c.group == group).count();
        Some(start..start + len)
    }

    pub fn emb_dim(&self) -> usize {
        self.group_range(FeatureGroup::Emb).map_or(0, |r| r.len())
    }

    /// SHA-256 over the `name<TAB>group` lines.
    pub fn fingerprint(&self) -> String {
        let mut h = Sha256::new();
        for c in &self.columns {
            h.update(c.name.as_bytes());
            h.update(b"\t");
            h.update(c.group.as_str().as_bytes());
            h.update(b"\n");
        }
        h.finalize().iter().map(|b| format!("{b:02x}")).collect()
    }

    pub fn without(&self, group: FeatureGroup) -> Result<FeatureSchema> {
        if !self.contains(group) {
            return Err(Error::validation(format!("feature group {group} is not in the schema")));
        }
        let columns: Vec<FeatureColumn> = self.columns.iter().filter(|c| c.group != group).cloned().collect();
        if columns.is_empty() {
            return Err(Error::validation(format!("dropping {group} leaves no features")));
        }
        Ok(FeatureSchema { columns })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureVector {
    pub schema: FeatureSchema,
    pub values: Vec<f64>,
}

/// Row-major matrix of feature values.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    pub schema: FeatureSchema,
    data: Vec<f64>,
}

impl FeatureMatrix {
    pub fn new(schema: FeatureSchema, data: Vec<f64>) -> Result<Self> {
        if schema.is_empty() || !data.len().is_multiple_of(schema.len()) {
            return Err(Error::validation(format!(
                "{} values do not fill rows of width {}",
                data.len(),
                schema.len()
            )));
        }
        if data.iter().any(|x| !x.is_finite()) {
            return Err(Error::validation("feature matrix contains non-finite values"));
        }
        Ok(FeatureMatrix { schema, data })
    }

    pub fn from_rows(schema: FeatureSchema, rows: &[Vec<f64>]) -> Result<Self> {
        if let Some(bad) = rows.iter().find(|r| r.len() != schema.len()) {
            return Err(Error::validation(format!(
                "row of width {} does not match schema width {}",
                bad.len(),
                schema.len()
            )));
        }
        Self::new(schema, rows.concat())
    }

    pub fn n_rows(&self) -> usize {
        self.data.len() / self.schema.len()
    }

    pub fn n_cols(&self) -> usize {
        self.schema.len()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        let w = self.n_cols();
        &self.data[i * w..(i + 1) * w]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks(self.n_cols())
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        self.rows().map(|r| r[j]).collect()
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    /// Rows selected by index, in the given order.
    pub fn select_rows(&self, indices: &[usize]) -> FeatureMatrix {
        let data = indices.iter().flat_map(|&i| self.row(i).iter().copied()).collect();
        FeatureMatrix { schema: self.schema.clone(), data }
    }

    /// Appends rows of another matrix with the same schema.
    pub fn vstack(&self, other: &FeatureMatrix) -> Result<FeatureMatrix> {
        if self.schema != other.schema {
            return Err(Error::validation("cannot stack matrices with different schemas"));
        }
        let mut data = self.data.clone();
        data.extend_from_slice(&other.data);
        Ok(FeatureMatrix { schema: self.schema.clone(), data })
    }
}

/// Drops every column of `group`.
pub fn drop_group(matrix: &FeatureMatrix, group: FeatureGroup) -> Result<FeatureMatrix> {
    let schema = matrix.schema.without(group)?;
    let keep: Vec<usize> = (0..matrix.n_cols())
        .filter(|&j| matrix.schema.columns()[j].group != group)
        .collect();
    let data = matrix.rows().flat_map(|r| keep.iter().map(move |&j| r[j])).collect();
    Ok(FeatureMatrix { schema, data })
}

pub fn relative_position(index: usize, n: usize) -> Result<f64> {
    if index == 0 || index > n {
        return Err(Error::validation(format!("sentence index {index} outside 1..={n}")));
    }
    Ok(index as f64 / n as f64)
}

/// `u·v / (|u||v|)`, or 0 when either vector has zero norm.
pub fn cosine_similarity(u: &[f64], v: &[f64]) -> Result<f64> {
    if u.len() != v.len() {
        return Err(Error::validation(format!("dimension mismatch: {} vs {}", u.len(), v.len())));
    }
    let (mut dot, mut nu, mut nv) = (0.0, 0.0, 0.0);
    for (a, b) in u.iter().zip(v) {
        dot += a * b;
        nu += a * a;
        nv += b * b;
    }
    if nu == 0.0 || nv == 0.0 {
        return Ok(0.0);
    }
    Ok((dot / (nu.sqrt() * nv.sqrt())).clamp(-1.0, 1.0))
}

/// Five probabilities then five one-hot labels, both in the order
/// related, unrelated, agree, disagree, discuss.
pub fn stance_features(d: &StanceDistribution) -> [f64; 10] {
    let arg = d.argmax();
    let related_label = arg != StanceClass::Unrelated;
    let one = |b: bool| if b { 1.0 } else { 0.0 };
    [
        d.related(),
        d.unrelated,
        d.agree,
        d.disagree,
        d.discuss,
        one(related_label),
        one(arg == StanceClass::Unrelated),
        one(arg == StanceClass::Agree),
        one(arg == StanceClass::Disagree),
        one(arg == StanceClass::Discuss),
    ]
}

pub fn syntax_features(profile: &SyntaxProfile) -> [f64; 27] {
    let mut out = [0.0; 27];
    for (slot, label) in out.iter_mut().zip(SyntaxLabel::ALL) {
        *slot = f64::from(profile.get(label));
    }
    out
}

pub fn sentiment_features(s: &SentimentScores) -> [f64; 4] {
    [s.positive, s.neutral, s.negative, s.compound]
}

/// Which groups to extract.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeatureConfig {
    pub groups: Vec<FeatureGroup>,
}

impl Default for FeatureConfig {
    fn default() -> Self {
        FeatureConfig { groups: FeatureGroup::INTERPRETABLE.to_vec() }
    }
}

impl FeatureConfig {
    pub fn with_embeddings() -> Self {
        FeatureConfig { groups: FeatureGroup::ALL.to_vec() }
    }

    pub fn schema(&self, providers: &Providers) -> Result<FeatureSchema> {
        FeatureSchema::new(&self.groups, providers.encoder.dim())
    }

    fn has(&self, g: FeatureGroup) -> bool {
        self.groups.contains(&g)
    }
}

/// Per-article values shared by all of its sentences.
pub struct ArticleContext<'a> {
    article: &'a Article,
    providers: &'a Providers,
    config: &'a FeatureConfig,
    schema: FeatureSchema,
    title_encoding: Option<SentenceEncoding>,
    doc_score: Option<f64>,
}

impl<'a> ArticleContext<'a> {
    pub fn new(article: &'a Article, providers: &'a Providers, config: &'a FeatureConfig) -> Result<Self> {
        let schema = config.schema(providers)?;
        let at = |what: &str| format!("article {} ({what})", article.article_id);
        let title_encoding = if config.has(FeatureGroup::Sim) {
            Some(
                providers
                    .encoder
                    .encode(&article.title)
                    .map_err(|source| Error::ProviderAt { context: at("title encoding"), source })?,
            )
        } else {
            None
        };
        let doc_score = if config.has(FeatureGroup::Doc) {
            Some(
                providers
                    .doc
                    .score_article(article)
                    .map_err(|source| Error::ProviderAt { context: at("document score"), source })?
                    .0,
            )
        } else {
            None
        };
        Ok(ArticleContext { article, providers, config, schema, title_encoding, doc_score })
    }

    pub fn schema(&self) -> &FeatureSchema {
        &self.schema
    }

    /// Raw (unstandardized) features of the sentence with 1-based `index`.
    pub fn sentence_features(&self, index: usize) -> Result<Vec<f64>> {
        let article = self.article;
        let n = article.n_sentences();
        let sentence = article.sentence(index).ok_or_else(|| {
            Error::validation(format!("article {} has no sentence {index} (n = {n})", article.article_id))
        })?;
        let text = sentence.text.as_str();
        let ctx = || format!("article {} sentence {index}", article.article_id);
        let wrap = |source| Error::ProviderAt { context: ctx(), source };
        let is_title = index == 1;
        let mut out = Vec::with_capacity(self.schema.len());
        let mut encoding: Option<SentenceEncoding> = None;
        let p = self.providers;

        if self.config.has(FeatureGroup::Rp) {
            out.push(relative_position(index, n)?);
        }
        if self.config.has(FeatureGroup::Sim) {
            if is_title {
                out.push(1.0);
            } else {
                let e = p.encoder.encode(text).map_err(wrap)?;
                let title = self.title_encoding.as_ref().expect("title encoded when sim is enabled");
                out.push(cosine_similarity(&title.0, &e.0)?);
                encoding = Some(e);
            }
        }
        if self.config.has(FeatureGroup::Stn) {
            let d = p.stance.stance(text, &article.title).map_err(wrap)?;
            out.extend(stance_features(&d));
        }
        if self.config.has(FeatureGroup::Dp) {
            out.extend(syntax_features(&p.syntax.syntax(text).map_err(wrap)?));
        }
        if self.config.has(FeatureGroup::Sent) {
            out.extend(sentiment_features(&p.sentiment.sentiment(text).map_err(wrap)?));
        }
        if let Some(doc) = self.doc_score {
            out.push(doc);
        }
        if self.config.has(FeatureGroup::Emb) {
            let e = match encoding {
                Some(e) => e,
                None => p.encoder.encode(text).map_err(wrap)?,
            };
            out.extend(e.0);
        }
        if out.len() != self.schema.len() {
            return Err(Error::validation(format!(
                "{}: assembled {} values for a schema of width {}",
                ctx(),
                out.len(),
                self.schema.len()
            )));
        }
        if out.iter().any(|x| !x.is_finite()) {
            return Err(Error::validation(format!("{}: non-finite feature value", ctx())));
        }
        Ok(out)
    }
}

/// Features for one sentence record.
pub fn assemble(
    record: &SentenceRecord,
    article: &Article,
    providers: &Providers,
    config: &FeatureConfig,
) -> Result<FeatureVector> {
    if record.article_id != article.article_id {
        return Err(Error::validation(format!(
            "record from article {} paired with article {}",
            record.article_id, article.article_id
        )));
    }
    let ctx = ArticleContext::new(article, providers, config)?;
    let values = ctx.sentence_features(record.sentence_index)?;
    Ok(FeatureVector { schema: ctx.schema, values })
}

/// Identifies a feature row.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RowKey {
    pub article_id: String,
    pub index: usize,
    pub n: usize,
    pub label: TechniqueLabel,
    pub split: Option<Split>,
}

impl From<&SentenceRecord> for RowKey {
    fn from(r: &SentenceRecord) -> Self {
        RowKey {
            article_id: r.article_id.clone(),
            index: r.sentence_index,
            n: r.n_sentences,
            label: r.label,
            split: r.split,
        }
    }
}

/// Feature matrix plus the identity and gold label of every row.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureTable {
    pub keys: Vec<RowKey>,
    pub matrix: FeatureMatrix,
}

impl FeatureTable {
    pub fn labels(&self) -> Vec<TechniqueLabel> {
        self.keys.iter().map(|k| k.label).collect()
    }

    /// Rows whose split is one of `splits`, in table order.
    pub fn select_splits(&self, splits: &[Split]) -> FeatureTable {
        let idx: Vec<usize> = (0..self.keys.len())
            .filter(|&i| self.keys[i].split.is_some_and(|s| splits.contains(&s)))
            .collect();
        FeatureTable {
            keys: idx.iter().map(|&i| self.keys[i].clone()).collect(),
            matrix: self.matrix.select_rows(&idx),
        }
    }

    pub fn drop_group(&self, group: FeatureGroup) -> Result<FeatureTable> {
        Ok(FeatureTable { keys: self.keys.clone(), matrix: drop_group(&self.matrix, group)? })
    }

    pub fn len(&self) -> usize {
        self.keys.len()
    }

    pub fn is_empty(&self) -> bool {
        self.keys.is_empty()
    }

    /// Writes `features.csv` (key columns, then one column per feature) and
    /// `schema.json` into `dir`.
    pub fn write(&self, dir: impl AsRef<Path>) -> Result<()> {
        let dir = dir.as_ref();
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let csv_path = dir.join(FEATURES_CSV);
        let mut w = csv::Writer::from_path(&csv_path)?;
        let mut header: Vec<&str> = KEY_COLUMNS.to_vec();
        header.extend(self.matrix.schema.names());
        w.write_record(&header)?;
        for (key, row) in self.keys.iter().zip(self.matrix.rows()) {
            let mut rec = vec![
                key.article_id.clone(),
                key.index.to_string(),
                key.n.to_string(),
                key.label.as_str().to_string(),
                key.split.map_or(String::new(), |s| s.to_string()),
            ];
            rec.extend(row.iter().map(|v| v.to_string()));
            w.write_record(&rec)?;
        }
        w.flush().map_err(|e| Error::io(&csv_path, e))?;
        let schema_path = dir.join(SCHEMA_JSON);
        let json = serde_json::to_string_pretty(&self.matrix.schema)?;
        fs::write(&schema_path, json + "\n").map_err(|e| Error::io(&schema_path, e))
    }

    pub fn read(dir: impl AsRef<Path>) -> Result<FeatureTable> {
        let dir = dir.as_ref();
        let schema_path = dir.join(SCHEMA_JSON);
        let schema_text = fs::read_to_string(&schema_path).map_err(|e| Error::io(&schema_path, e))?;
        let schema = FeatureSchema::from_columns(serde_json::from_str(&schema_text)?)?;
        let csv_path = dir.join(FEATURES_CSV);
        let file = fs::File::open(&csv_path).map_err(|e| Error::io(&csv_path, e))?;
        let mut r = csv::Reader::from_reader(file);
        let header: Vec<String> = r.headers()?.iter().map(str::to_string).collect();
        let mut expected: Vec<&str> = KEY_COLUMNS.to_vec();
        expected.extend(schema.names());
        if header != expected {
            return Err(Error::validation(format!("{}: header does not match schema", csv_path.display())));
        }
        let context = csv_path.display().to_string();
        let mut keys = Vec::new();
        let mut data = Vec::new();
        for (i, rec) in r.records().enumerate() {
            let rec = rec?;
            let line = i + 2;
            let perr = |message: String| Error::Parse { context: context.clone(), line, message };
            let num = |s: &str| s.parse::<usize>().map_err(|_| perr(format!("bad integer {s:?}")));
            let split = match &rec[4] {
                "" => None,
                s => Some(s.parse().map_err(|e: Error| perr(e.to_string()))?),
            };
            keys.push(RowKey {
                article_id: rec[0].to_string(),
                index: num(&rec[1])?,
                n: num(&rec[2])?,
                label: rec[3].parse().map_err(|e: Error| perr(e.to_string()))?,
                split,
            });
            for v in rec.iter().skip(KEY_COLUMNS.len()) {
                data.push(v.parse::<f64>().map_err(|_| perr(format!("bad number {v:?}")))?);
            }
        }
        Ok(FeatureTable { keys, matrix: FeatureMatrix::new(schema, data)? })
    }
}

pub const FEATURES_CSV: &str = "features.csv";
pub const SCHEMA_JSON: &str = "schema.json";
const KEY_COLUMNS: [&str; 5] = ["article_id", "index", "n", "label", "split"];

/// Assembles features for every record. Work fans out per article, then per sentence.
pub fn assemble_corpus(
    articles: &[Article],
    records: &[SentenceRecord],
    providers: &Providers,
    config: &FeatureConfig,
    exec: Exec,
) -> Result<FeatureTable> {
    let schema = config.schema(providers)?;
    let by_id: HashMap<&str, usize> = articles.iter().enumerate().map(|(i, a)| (a.article_id.as_str(), i)).collect();
    let contexts: Vec<Result<ArticleContext<'_>>> =
        exec.map_range(articles.len(), |i| ArticleContext::new(&articles[i], providers, config));
    let contexts: Vec<ArticleContext<'_>> = contexts.into_iter().collect::<Result<_>>()?;
    let rows: Vec<Result<Vec<f64>>> = exec.map(records, |r| {
        let &ai = by_id
            .get(r.article_id.as_str())
            .ok_or_else(|| Error::validation(format!("no article {} for record", r.article_id)))?;
        contexts[ai].sentence_features(r.sentence_index)
    });
    let rows: Vec<Vec<f64>> = rows.into_iter().collect::<Result<_>>()?;
    Ok(FeatureTable {
        keys: records.iter().map(RowKey::from).collect(),
        matrix: FeatureMatrix::from_rows(schema, &rows)?,
    })
}

/// Per-column z-scoring with population standard deviation. Zero-variance
/// columns map to 0.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Standardizer {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

impl Standardizer {
    pub fn unfitted() -> Self {
        Self::default()
    }

    pub fn is_fitted(&self) -> bool {
        !self.mean.is_empty()
    }

    pub fn fit(matrix: &FeatureMatrix) -> Result<Self> {
        let n = matrix.n_rows();
        if n == 0 {
            return Err(Error::validation("cannot fit a standardizer on zero rows"));
        }
        let w = matrix.n_cols();
        let mut mean = vec![0.0; w];
        for row in matrix.rows() {
            for (m, x) in mean.iter_mut().zip(row) {
                *m += x;
            }
        }
        mean.iter_mut().for_each(|m| *m /= n as f64);
        let mut var = vec![0.0; w];
        for row in matrix.rows() {
            for ((v, x), m) in var.iter_mut().zip(row).zip(&mean) {
                *v += (x - m) * (x - m);
            }
        }
        let std = var.into_iter().map(|v| (v / n as f64).sqrt()).collect();
        Ok(Standardizer { mean, std })
    }

    fn check(&self, width: usize) -> Result<()> {
        if !self.is_fitted() {
            return Err(Error::State("standardizer used before fit".into()));
        }
        if width != self.mean.len() {
            return Err(Error::validation(format!(
                "standardizer fitted on {} columns, got {width}",
                self.mean.len()
            )));
        }
        Ok(())
    }

    pub fn transform_row(&self, row: &[f64]) -> Result<Vec<f64>> {
        self.check(row.len())?;
        Ok(row
            .iter()
            .zip(self.mean.iter().zip(&self.std))
            .map(|(x, (m, s))| if *s > 0.0 { (x - m) / s } else { 0.0 })
            .collect())
    }

    pub fn transform(&self, matrix: &FeatureMatrix, exec: Exec) -> Result<FeatureMatrix> {
        self.check(matrix.n_cols())?;
        let w = matrix.n_cols();
        let mut data = matrix.data.clone();
        exec.for_each_row(&mut data, w, |_, row| {
            for (x, (m, s)) in row.iter_mut().zip(self.mean.iter().zip(&self.std)) {
                *x = if *s > 0.0 { (*x - m) / s } else { 0.0 };
            }
        });
        Ok(FeatureMatrix { schema: matrix.schema.clone(), data })
    }

    /// Inverse of [`Standardizer::transform_row`]; zero-variance columns come back as their mean.
    pub fn inverse_transform_row(&self, row: &[f64]) -> Result<Vec<f64>> {
        self.check(row.len())?;
        Ok(row
            .iter()
            .zip(self.mean.iter().zip(&self.std))
            .map(|(z, (m, s))| z * s + m)
            .collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::project_labels;

    fn schema(groups: &[FeatureGroup]) -> FeatureSchema {
        FeatureSchema::new(groups, 64).unwrap()
    }

    #[test]
    fn schema_widths() {
        let base = schema(&FeatureGroup::INTERPRETABLE);
        assert_eq!(base.len(), 44);
        assert_eq!(schema(&FeatureGroup::ALL).len(), 108);
        assert_eq!(base.group_range(FeatureGroup::Dp), Some(12..39));
        assert_eq!(base.names()[2], "stn_p_related");
        assert_eq!(base.names()[7], "stn_b_related");
        assert_eq!(base.names()[38], "dp_unknown");
        // order given does not matter
        let shuffled = FeatureSchema::new(&[FeatureGroup::Doc, FeatureGroup::Rp], 0).unwrap();
        assert_eq!(shuffled.names(), ["rp", "doc"]);
        assert!(FeatureSchema::new(&[], 0).is_err());
        assert!(FeatureSchema::new(&[FeatureGroup::Emb], 0).is_err());
    }

    #[test]
    fn fingerprint_tracks_columns() {
        let a = schema(&FeatureGroup::INTERPRETABLE);
        assert_eq!(a.fingerprint(), a.clone().fingerprint());
        assert_ne!(a.fingerprint(), a.without(FeatureGroup::Rp).unwrap().fingerprint());
        assert_eq!(a.fingerprint().len(), 64);
    }

    #[test]
    fn relative_position_cases() {
        assert_eq!(relative_position(1, 10).unwrap(), 0.1);
        assert_eq!(relative_position(10, 10).unwrap(), 1.0);
        assert!(relative_position(0, 10).is_err());
        assert!(relative_position(11, 10).is_err());
    }

    #[test]
    fn cosine_cases() {
        assert!((cosine_similarity(&[0.3, 0.4], &[0.3, 0.4]).unwrap() - 1.0).abs() < 1e-12);
        assert_eq!(cosine_similarity(&[1.0, 0.0], &[0.0, 1.0]).unwrap(), 0.0);
        assert_eq!(cosine_similarity(&[0.0, 0.0], &[5.0, 1.0]).unwrap(), 0.0);
        assert!(cosine_similarity(&[1.0], &[1.0, 2.0]).is_err());
    }

    #[test]
    fn stance_blocks() {
        let d = StanceDistribution::new(1.0, 0.0, 0.0, 0.0).unwrap();
        assert_eq!(stance_features(&d), [0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0]);
        let d = StanceDistribution::new(0.1, 0.5, 0.1, 0.3).unwrap();
        let f = stance_features(&d);
        assert!((f[0] - 0.9).abs() < 1e-12);
        assert_eq!(&f[5..], &[1.0, 0.0, 1.0, 0.0, 0.0]);
        let d = StanceDistribution::new(0.25, 0.25, 0.25, 0.25).unwrap();
        assert_eq!(&stance_features(&d)[5..], &[0.0, 1.0, 0.0, 0.0, 0.0]);
    }

    #[test]
    fn syntax_block_placement() {
        assert_eq!(syntax_features(&SyntaxProfile::default()), [0.0; 27]);
        let mut p = SyntaxProfile::default();
        p.add(SyntaxLabel::Np, 2);
        p.add(SyntaxLabel::Vp, 1);
        let v = syntax_features(&p);
        let np = SyntaxLabel::ALL.iter().position(|&l| l == SyntaxLabel::Np).unwrap();
        let vp = SyntaxLabel::ALL.iter().position(|&l| l == SyntaxLabel::Vp).unwrap();
        assert_eq!(v[np], 2.0);
        assert_eq!(v[vp], 1.0);
        assert_eq!(v.iter().sum::<f64>(), 3.0);
    }

    #[test]
    fn sentiment_block() {
        assert_eq!(sentiment_features(&SentimentScores::NEUTRAL), [0.0, 1.0, 0.0, 0.0]);
    }

    #[test]
    fn assemble_title_and_widths() {
        let article = Article::from_raw("5", "Evil plan revealed\nThe plan is evil. Rain falls.").unwrap();
        let records = project_labels(&article, &[], 0).unwrap();
        let providers = Providers::reference(64);
        let config = FeatureConfig::default();
        let title = assemble(&records[0], &article, &providers, &config).unwrap();
        assert_eq!(title.values.len(), 44);
        assert_eq!(title.values[1], 1.0);
        assert_eq!(title.values[0], 1.0 / 3.0);
        let with_emb = assemble(&records[2], &article, &providers, &FeatureConfig::with_embeddings()).unwrap();
        assert_eq!(with_emb.values.len(), 108);
        let wrong = Article::from_raw("6", "x\ny").unwrap();
        assert!(assemble(&records[0], &wrong, &providers, &config).is_err());
    }

    #[test]
    fn standardizer_z_scores() {
        let s = FeatureSchema::new(&[FeatureGroup::Rp, FeatureGroup::Sim], 0).unwrap();
        let m = FeatureMatrix::from_rows(s, &[vec![1.0, 5.0], vec![2.0, 5.0], vec![3.0, 5.0]]).unwrap();
        let st = Standardizer::fit(&m).unwrap();
        let z = st.transform(&m, Exec::Sequential).unwrap();
        let col = z.column(0);
        assert!((col[0] + 1.2247).abs() < 1e-3 && col[1].abs() < 1e-12 && (col[2] - 1.2247).abs() < 1e-3);
        assert_eq!(z.column(1), vec![0.0; 3]);
        assert!(matches!(Standardizer::unfitted().transform(&m, Exec::Sequential), Err(Error::State(_))));
        let back = st.inverse_transform_row(z.row(2)).unwrap();
        assert!((back[0] - 3.0).abs() < 1e-12);
    }

    #[test]
    fn drop_groups() {
        let base = schema(&FeatureGroup::INTERPRETABLE);
        let m = FeatureMatrix::new(base.clone(), (0..88).map(f64::from).collect()).unwrap();
        let no_dp = drop_group(&m, FeatureGroup::Dp).unwrap();
        assert_eq!(no_dp.n_cols(), 17);
        assert_eq!(drop_group(&m, FeatureGroup::Sent).unwrap().n_cols(), 40);
        assert!(drop_group(&m, FeatureGroup::Emb).is_err());
        let remaining: Vec<&str> = no_dp.schema.names();
        let expected: Vec<&str> = base.columns().iter().filter(|c| c.group != FeatureGroup::Dp).map(|c| c.name.as_str()).collect();
        assert_eq!(remaining, expected);
        assert_eq!(no_dp.row(1)[12], 44.0 + 39.0);
    }

    #[test]
    fn table_round_trip() {
        let article = Article::from_raw("5", "Evil plan revealed\nThe plan is evil. Rain falls.").unwrap();
        let records = project_labels(&article, &[], 0).unwrap();
        let providers = Providers::reference(8);
        let table = assemble_corpus(&[article], &records, &providers, &FeatureConfig::with_embeddings(), Exec::Parallel).unwrap();
        let dir = tempfile::tempdir().unwrap();
        table.write(dir.path()).unwrap();
        let back = FeatureTable::read(dir.path()).unwrap();
        assert_eq!(back, table);
    }
}
