//! Per-sentence explanations: prediction, feature evidence, and a rationale
//! ranked by the feature/technique covariance matrix.
//!
//! JSON report layout:
//!
//! ```text
//! { "documents": [ {
//!     "article_id", "title",
//!     "sentences": [ {
//!         "article_id", "index", "text", "predicted", "technique", "propaganda",
//!         "scores": [{class, score}],
//!         "evidence": {position, title_similarity, stance, syntax, sentiment, doc_score},
//!         "standardized": [{name, value}],
//!         "rationale": [{feature, covariance, technique, value, standardized}]
//!     } ],
//!     "failures": [{index, text, error}],
//!     "summary": {sentences, propaganda_sentences, histogram, doc_score}
//! } ] }
//! ```
//!
//! Evidence values are raw; standardized values live under `standardized`.
//! Blocks for feature groups absent from the model are `null`.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::analysis::CovarianceMatrix;
use crate::corpus::{Article, TechniqueLabel};
use crate::exec::Exec;
use crate::features::{ArticleContext, FeatureConfig, FeatureVector};
use crate::model::TrainedModel;
use crate::providers::{Providers, SyntaxLabel};
use crate::{Error, Result};

/// Number of syntactic labels listed in the evidence block.
pub const SYNTAX_EVIDENCE: usize = 5;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassScore {
    pub class: String,
    pub score: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StanceEvidence {
    pub label: String,
    pub related: f64,
    pub unrelated: f64,
    pub agree: f64,
    pub disagree: f64,
    pub discuss: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntaxCount {
    pub label: String,
    pub count: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SentimentEvidence {
    pub positive: f64,
    pub neutral: f64,
    pub negative: f64,
    pub compound: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Evidence {
    pub position: Option<f64>,
    pub title_similarity: Option<f64>,
    pub stance: Option<StanceEvidence>,
    pub syntax: Option<Vec<SyntaxCount>>,
    pub sentiment: Option<SentimentEvidence>,
    pub doc_score: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NamedValue {
    pub name: String,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RationaleEntry {
    pub feature: String,
    /// `|cov|` from the covariance matrix.
    pub covariance: f64,
    /// Technique column the covariance was read from.
    pub technique: TechniqueLabel,
    /// Raw feature value of this sentence.
    pub value: f64,
    pub standardized: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SentenceExplanation {
    pub article_id: String,
    pub index: usize,
    pub text: String,
    /// Model class name.
    pub predicted: String,
    /// Predicted technique; `None` for a binary model's propaganda class.
    pub technique: Option<TechniqueLabel>,
    pub propaganda: bool,
    pub scores: Vec<ClassScore>,
    pub evidence: Evidence,
    pub standardized: Vec<NamedValue>,
    pub rationale: Vec<RationaleEntry>,
}

/// Identifies the sentence being explained.
#[derive(Debug, Clone, Copy)]
pub struct SentenceRef<'a> {
    pub article_id: &'a str,
    pub index: usize,
    pub text: &'a str,
}

fn value_of(fv: &FeatureVector, name: &str) -> Option<f64> {
    fv.schema.position(name).map(|j| fv.values[j])
}

fn evidence(fv: &FeatureVector) -> Evidence {
    let get = |name: &str| value_of(fv, name);
    let stance = get("stn_p_related").map(|related| {
        let base = ["unrelated", "agree", "disagree", "discuss"];
        let label = base
            .iter()
            .find(|c| get(&format!("stn_b_{c}")) == Some(1.0))
            .unwrap_or(&"unrelated");
        let p = |c: &str| get(&format!("stn_p_{c}")).unwrap_or(0.0);
        StanceEvidence {
            label: label.to_string(),
            related,
            unrelated: p("unrelated"),
            agree: p("agree"),
            disagree: p("disagree"),
            discuss: p("discuss"),
        }
    });
    let syntax = get("dp_S").map(|_| {
        let mut counts: Vec<SyntaxCount> = SyntaxLabel::ALL
            .iter()
            .filter_map(|l| {
                let count = get(&format!("dp_{}", l.as_str()))?;
                (count > 0.0).then(|| SyntaxCount { label: l.as_str().to_string(), count })
            })
            .collect();
        // stable sort keeps label order among equal counts
        counts.sort_by(|a, b| b.count.total_cmp(&a.count));
        counts.truncate(SYNTAX_EVIDENCE);
        counts
    });
    let sentiment = get("sent_positive").map(|positive| SentimentEvidence {
        positive,
        neutral: get("sent_neutral").unwrap_or(0.0),
        negative: get("sent_negative").unwrap_or(0.0),
        compound: get("sent_compound").unwrap_or(0.0),
    });
    Evidence {
        position: get("rp"),
        title_similarity: get("sim"),
        stance,
        syntax,
        sentiment,
        doc_score: get("doc"),
    }
}

/// Explains one sentence from its raw feature vector.
///
/// The rationale holds the `k` features with the largest unmasked `|cov|` for
/// the predicted technique. For a binary model's propaganda class each
/// feature's strongest unmasked technique is used. Non-propaganda predictions
/// get an empty rationale.
pub fn explain_sentence(
    sentence: SentenceRef<'_>,
    fv: &FeatureVector,
    model: &TrainedModel,
    cm: &CovarianceMatrix,
    k: usize,
) -> Result<SentenceExplanation> {
    let names = fv.schema.names();
    if cm.features.len() != names.len() || cm.features.iter().zip(&names).any(|(a, b)| a != b) {
        return Err(Error::validation("covariance matrix was computed on a different feature schema"));
    }
    let prediction = model.predict_vector(fv)?;
    let z = model.standardizer.transform_row(&fv.values)?;
    let technique = model.technique(&prediction);
    let propaganda = model.is_propaganda(&prediction);

    let mut rationale = Vec::new();
    if propaganda && k > 0 {
        for (f, name) in names.iter().enumerate() {
            let candidate = match technique {
                Some(t) => cm.is_unmasked(f, t).then(|| (t, cm.get(f, t).unwrap_or(0.0))),
                None => cm
                    .techniques
                    .iter()
                    .enumerate()
                    .filter(|&(j, _)| cm.mask[f][j])
                    .map(|(j, &t)| (t, cm.values[f][j]))
                    .reduce(|a, b| if b.1 > a.1 { b } else { a }),
            };
            if let Some((t, cov)) = candidate {
                rationale.push(RationaleEntry {
                    feature: name.to_string(),
                    covariance: cov,
                    technique: t,
                    value: fv.values[f],
                    standardized: z[f],
                });
            }
        }
        rationale.sort_by(|a, b| b.covariance.total_cmp(&a.covariance));
        rationale.truncate(k);
    }

    Ok(SentenceExplanation {
        article_id: sentence.article_id.to_string(),
        index: sentence.index,
        text: sentence.text.to_string(),
        predicted: model.class_name(&prediction).to_string(),
        technique,
        propaganda,
        scores: model
            .classes
            .iter()
            .zip(&prediction.scores)
            .map(|(c, &s)| ClassScore { class: c.clone(), score: s })
            .collect(),
        evidence: evidence(fv),
        standardized: names
            .iter()
            .zip(&z)
            .map(|(n, &v)| NamedValue { name: n.to_string(), value: v })
            .collect(),
        rationale,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SentenceFailure {
    pub index: usize,
    pub text: String,
    pub error: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DocumentSummary {
    pub sentences: usize,
    pub propaganda_sentences: usize,
    /// Predicted class → count, propaganda classes only.
    pub histogram: BTreeMap<String, usize>,
    pub doc_score: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DocumentExplanation {
    pub article_id: String,
    pub title: String,
    pub sentences: Vec<SentenceExplanation>,
    pub failures: Vec<SentenceFailure>,
    pub summary: DocumentSummary,
}

/// Explains every sentence of `article`. Provider failures on a sentence are
/// recorded in `failures` and the remaining sentences are still explained.
pub fn explain_document(
    article: &Article,
    model: &TrainedModel,
    cm: &CovarianceMatrix,
    providers: &Providers,
    k: usize,
    exec: Exec,
) -> Result<DocumentExplanation> {
    let config = FeatureConfig { groups: model.groups.clone() };
    let ctx = ArticleContext::new(article, providers, &config)?;
    let results: Vec<Result<SentenceExplanation>> = exec.map(&article.sentences, |s| {
        let values = ctx.sentence_features(s.index)?;
        let fv = FeatureVector { schema: ctx.schema().clone(), values };
        let sref = SentenceRef { article_id: &article.article_id, index: s.index, text: &s.text };
        explain_sentence(sref, &fv, model, cm, k)
    });
    let mut sentences = Vec::new();
    let mut failures = Vec::new();
    for (s, r) in article.sentences.iter().zip(results) {
        match r {
            Ok(e) => sentences.push(e),
            Err(e @ (Error::ProviderAt { .. } | Error::Provider(_))) => {
                failures.push(SentenceFailure { index: s.index, text: s.text.clone(), error: e.to_string() })
            }
            Err(e) => return Err(e),
        }
    }
    let mut histogram = BTreeMap::new();
    for e in sentences.iter().filter(|e| e.propaganda) {
        *histogram.entry(e.predicted.clone()).or_insert(0) += 1;
    }
    let doc_score = providers.doc.score_article(article).ok().map(|d| d.0);
    let summary = DocumentSummary {
        sentences: article.sentences.len(),
        propaganda_sentences: sentences.iter().filter(|e| e.propaganda).count(),
        histogram,
        doc_score,
    };
    Ok(DocumentExplanation {
        article_id: article.article_id.clone(),
        title: article.title.clone(),
        sentences,
        failures,
        summary,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Json,
    Html,
}

impl ReportFormat {
    pub fn extension(self) -> &'static str {
        match self {
            ReportFormat::Json => "json",
            ReportFormat::Html => "html",
        }
    }
}

impl FromStr for ReportFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "json" => Ok(ReportFormat::Json),
            "html" => Ok(ReportFormat::Html),
            other => Err(Error::validation(format!("unknown report format {other:?} (json|html)"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub documents: Vec<DocumentExplanation>,
}

pub fn render_report(documents: &[DocumentExplanation], format: ReportFormat) -> Result<String> {
    match format {
        ReportFormat::Json => {
            let report = Report { documents: documents.to_vec() };
            Ok(serde_json::to_string_pretty(&report)? + "\n")
        }
        ReportFormat::Html => Ok(render_html(documents)),
    }
}

pub fn parse_report_json(text: &str) -> Result<Report> {
    Ok(serde_json::from_str(text)?)
}

fn escape(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            '\'' => out.push_str("&#39;"),
            c => out.push(c),
        }
    }
    out
}

fn class_color(e: &SentenceExplanation) -> String {
    if !e.propaganda {
        return "#f4f4f4".to_string();
    }
    let i = e.technique.map_or(0, TechniqueLabel::index);
    let hue = (i * 360 / TechniqueLabel::ALL.len() + 10) % 360;
    format!("hsl({hue}, 70%, 82%)")
}

fn num(x: f64) -> String {
    format!("{x:.4}")
}

const STYLE: &str = "body{font-family:sans-serif;max-width:60em;margin:2em auto;line-height:1.4}
.sentence{margin:.3em 0;padding:.3em .5em;border-radius:4px}
.sentence summary{cursor:pointer}
.sentence .tag{font-size:.8em;font-weight:bold;margin-right:.5em}
.failed{background:#fff0f0;border:1px dashed #c00}
table{border-collapse:collapse;font-size:.85em;margin:.3em 0}
td,th{border:1px solid #ccc;padding:1px 6px;text-align:left}
.summary{font-size:.9em;color:#444}";

fn render_html(documents: &[DocumentExplanation]) -> String {
    let mut h = String::new();
    h.push_str("<!DOCTYPE html>\n<html><head><meta charset=\"utf-8\"><title>Propaganda explanation report</title>\n<style>");
    h.push_str(STYLE);
    h.push_str("</style></head><body>\n");
    if documents.is_empty() {
        h.push_str("<p>No documents.</p>\n");
    }
    for d in documents {
        let _ = writeln!(h, "<section class=\"document\" id=\"article-{}\">", escape(&d.article_id));
        let _ = writeln!(h, "<h2>{}</h2>", escape(&d.title));
        let s = &d.summary;
        let hist: Vec<String> = s.histogram.iter().map(|(k, v)| format!("{} ({v})", escape(k))).collect();
        let _ = writeln!(
            h,
            "<p class=\"summary\">article {} &middot; {} sentences &middot; {} propaganda &middot; document score {} &middot; {}</p>",
            escape(&d.article_id),
            s.sentences,
            s.propaganda_sentences,
            s.doc_score.map_or("n/a".to_string(), num),
            if hist.is_empty() { "no techniques".to_string() } else { hist.join(", ") }
        );
        let mut items: Vec<(usize, String)> = d.sentences.iter().map(|e| (e.index, sentence_html(e))).collect();
        items.extend(d.failures.iter().map(|f| {
            (
                f.index,
                format!(
                    "<div class=\"sentence failed\" data-index=\"{}\"><span class=\"tag\">error</span>{} <em>{}</em></div>\n",
                    f.index,
                    escape(&f.text),
                    escape(&f.error)
                ),
            )
        }));
        items.sort_by_key(|(i, _)| *i);
        for (_, html) in items {
            h.push_str(&html);
        }
        h.push_str("</section>\n");
    }
    h.push_str("</body></html>\n");
    h
}

fn sentence_html(e: &SentenceExplanation) -> String {
    let mut h = String::new();
    let _ = write!(
        h,
        "<div class=\"sentence\" data-index=\"{}\" data-label=\"{}\" style=\"background:{}\"><details><summary><span class=\"tag\">{}</span>{}</summary>\n",
        e.index,
        escape(&e.predicted),
        class_color(e),
        escape(match e.technique {
            Some(t) => t.display_name(),
            None => &e.predicted,
        }),
        escape(&e.text)
    );
    h.push_str("<table>");
    let ev = &e.evidence;
    let mut row = |k: &str, v: String| {
        let _ = write!(h, "<tr><th>{k}</th><td>{v}</td></tr>");
    };
    if let Some(p) = ev.position {
        row("relative position", num(p));
    }
    if let Some(s) = ev.title_similarity {
        row("title similarity", num(s));
    }
    if let Some(s) = &ev.stance {
        row(
            "stance",
            format!(
                "{} (related {}, unrelated {}, agree {}, disagree {}, discuss {})",
                s.label,
                num(s.related),
                num(s.unrelated),
                num(s.agree),
                num(s.disagree),
                num(s.discuss)
            ),
        );
    }
    if let Some(syn) = &ev.syntax {
        let v: Vec<String> = syn.iter().map(|c| format!("{} {}", c.label, c.count)).collect();
        row("syntax", escape(&v.join(", ")));
    }
    if let Some(s) = &ev.sentiment {
        row(
            "sentiment",
            format!("pos {}, neu {}, neg {}, compound {}", num(s.positive), num(s.neutral), num(s.negative), num(s.compound)),
        );
    }
    if let Some(d) = ev.doc_score {
        row("document score", num(d));
    }
    h.push_str("</table>\n");
    if !e.rationale.is_empty() {
        h.push_str("<table><tr><th>feature</th><th>|cov|</th><th>technique</th><th>value</th></tr>");
        for r in &e.rationale {
            let _ = write!(
                h,
                "<tr><td>{}</td><td>{}</td><td>{}</td><td>{}</td></tr>",
                escape(&r.feature),
                num(r.covariance),
                escape(r.technique.display_name()),
                num(r.value)
            );
        }
        h.push_str("</table>\n");
    }
    h.push_str("</details></div>\n");
    h
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn format_parsing() {
        assert_eq!("JSON".parse::<ReportFormat>().unwrap(), ReportFormat::Json);
        assert!("pdf".parse::<ReportFormat>().unwrap_err().is_validation());
    }

    #[test]
    fn empty_report() {
        let json = render_report(&[], ReportFormat::Json).unwrap();
        assert_eq!(parse_report_json(&json).unwrap().documents.len(), 0);
        let html = render_report(&[], ReportFormat::Html).unwrap();
        assert!(html.starts_with("<!DOCTYPE html>") && !html.contains("class=\"sentence"));
    }

    #[test]
    fn escaping() {
        assert_eq!(escape("<a href=\"x\">&'"), "&lt;a href=&quot;x&quot;&gt;&amp;&#39;");
    }
}
