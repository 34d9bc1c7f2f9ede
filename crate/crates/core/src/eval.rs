//! Precision / recall / F1, confusion matrices, and table rendering.
//!
//! Metrics are stored as fractions in `[0, 1]` and rendered as percentages
//! with two decimals. A zero denominator yields 0.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::corpus::TechniqueLabel;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassMetrics {
    pub class: String,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub support: usize,
}

impl ClassMetrics {
    /// Builds metrics from precision and recall, deriving F1.
    pub fn from_pr(class: impl Into<String>, precision: f64, recall: f64, support: usize) -> Self {
        ClassMetrics { class: class.into(), precision, recall, f1: f1_score(precision, recall), support }
    }
}

/// Harmonic mean of `p` and `r`; 0 when both are 0.
pub fn f1_score(p: f64, r: f64) -> f64 {
    if p + r > 0.0 {
        2.0 * p * r / (p + r)
    } else {
        0.0
    }
}

fn check_lengths(a: usize, b: usize) -> Result<()> {
    if a != b {
        return Err(Error::validation(format!("{a} gold labels but {b} predictions")));
    }
    Ok(())
}

/// One-vs-rest metrics of `cls`.
pub fn prf<T: PartialEq>(y_true: &[T], y_pred: &[T], cls: &T, name: impl Into<String>) -> Result<ClassMetrics> {
    check_lengths(y_true.len(), y_pred.len())?;
    let (mut tp, mut fp, mut fnn) = (0usize, 0usize, 0usize);
    for (t, p) in y_true.iter().zip(y_pred) {
        match (t == cls, p == cls) {
            (true, true) => tp += 1,
            (false, true) => fp += 1,
            (true, false) => fnn += 1,
            _ => {}
        }
    }
    let ratio = |num: usize, den: usize| if den == 0 { 0.0 } else { num as f64 / den as f64 };
    Ok(ClassMetrics::from_pr(name, ratio(tp, tp + fp), ratio(tp, tp + fnn), tp + fnn))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Averages {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub support: usize,
}

/// Support-weighted mean of precision, recall and F1.
pub fn weighted_average(metrics: &[ClassMetrics]) -> Result<Averages> {
    let total: usize = metrics.iter().map(|m| m.support).sum();
    if total == 0 {
        return Err(Error::validation("weighted average needs positive total support"));
    }
    let w = |f: fn(&ClassMetrics) -> f64| {
        metrics.iter().map(|m| f(m) * m.support as f64).sum::<f64>() / total as f64
    };
    Ok(Averages { precision: w(|m| m.precision), recall: w(|m| m.recall), f1: w(|m| m.f1), support: total })
}

/// `confusion[gold][predicted]` over the 19 labels in class order.
pub fn confusion(y_true: &[TechniqueLabel], y_pred: &[TechniqueLabel]) -> Result<Vec<Vec<usize>>> {
    check_lengths(y_true.len(), y_pred.len())?;
    let k = TechniqueLabel::ALL.len();
    let mut m = vec![vec![0; k]; k];
    for (t, p) in y_true.iter().zip(y_pred) {
        m[t.index()][p.index()] += 1;
    }
    Ok(m)
}

/// Canonical results file content.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalResults {
    pub per_class: Vec<ClassMetrics>,
    pub weighted: Averages,
    pub confusion: Vec<Vec<usize>>,
    /// Positive-class metrics for binary evaluation.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub positive: Option<ClassMetrics>,
}

/// 18-way (plus non-propaganda) evaluation: 19 per-class rows in class order.
pub fn evaluate_multiclass(y_true: &[TechniqueLabel], y_pred: &[TechniqueLabel]) -> Result<EvalResults> {
    let confusion = confusion(y_true, y_pred)?;
    let per_class = TechniqueLabel::ALL
        .iter()
        .map(|c| prf(y_true, y_pred, c, c.display_name()))
        .collect::<Result<Vec<_>>>()?;
    let weighted = weighted_average(&per_class)?;
    Ok(EvalResults { per_class, weighted, confusion, positive: None })
}

pub const BINARY_CLASSES: [&str; 2] = ["non-propaganda", "propaganda"];

/// Propaganda vs non-propaganda; `positive` holds the propaganda-class row.
pub fn evaluate_binary(y_true: &[bool], y_pred: &[bool]) -> Result<EvalResults> {
    check_lengths(y_true.len(), y_pred.len())?;
    let mut confusion = vec![vec![0; 2]; 2];
    for (&t, &p) in y_true.iter().zip(y_pred) {
        confusion[t as usize][p as usize] += 1;
    }
    let per_class = vec![
        prf(y_true, y_pred, &false, BINARY_CLASSES[0])?,
        prf(y_true, y_pred, &true, BINARY_CLASSES[1])?,
    ];
    let weighted = weighted_average(&per_class)?;
    Ok(EvalResults { positive: Some(per_class[1].clone()), per_class, weighted, confusion })
}

/// A named P/R/F1 row, as in model-comparison and ablation tables.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreRow {
    pub name: String,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

impl ScoreRow {
    pub fn from_metrics(name: impl Into<String>, m: &ClassMetrics) -> Self {
        ScoreRow { name: name.into(), precision: m.precision, recall: m.recall, f1: m.f1 }
    }
}

/// A rendered table: header plus string cells.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

fn pct(x: f64) -> String {
    format!("{:.2}", x * 100.0)
}

impl Table {
    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.header)?;
        for r in &self.rows {
            w.write_record(r)?;
        }
        let bytes = w.into_inner().map_err(|e| Error::validation(e.to_string()))?;
        Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
    }

    pub fn from_csv(text: &str) -> Result<Table> {
        let mut r = csv::Reader::from_reader(text.as_bytes());
        let header = r.headers()?.iter().map(str::to_string).collect();
        let rows = r
            .records()
            .map(|rec| rec.map(|rec| rec.iter().map(str::to_string).collect()))
            .collect::<std::result::Result<_, _>>()?;
        Ok(Table { header, rows })
    }

    /// Aligned plain text: first column left-aligned, the rest right-aligned.
    pub fn to_text(&self) -> String {
        let ncol = self.header.len();
        let mut width = vec![0; ncol];
        for r in std::iter::once(&self.header).chain(&self.rows) {
            for (w, c) in width.iter_mut().zip(r) {
                *w = (*w).max(c.chars().count());
            }
        }
        let mut out = String::new();
        let line = |out: &mut String, r: &[String]| {
            for (j, c) in r.iter().enumerate() {
                if j == 0 {
                    let _ = write!(out, "{c:<w$}", w = width[0]);
                } else {
                    let _ = write!(out, "  {c:>w$}", w = width[j]);
                }
            }
            out.push('\n');
        };
        line(&mut out, &self.header);
        let total: usize = width.iter().sum::<usize>() + 2 * ncol.saturating_sub(1);
        out.push_str(&"-".repeat(total));
        out.push('\n');
        for r in &self.rows {
            line(&mut out, r);
        }
        out
    }
}

/// Model comparison layout: model × P/R/F1.
pub fn comparison_table(rows: &[ScoreRow]) -> Table {
    score_table("Model", rows)
}

/// Ablation layout: removed group × P/R/F1.
pub fn ablation_table(rows: &[ScoreRow]) -> Table {
    score_table("Ablations", rows)
}

fn score_table(first: &str, rows: &[ScoreRow]) -> Table {
    Table {
        header: [first, "P", "R", "F1"].map(String::from).to_vec(),
        rows: rows.iter().map(|r| vec![r.name.clone(), pct(r.precision), pct(r.recall), pct(r.f1)]).collect(),
    }
}

/// Per-class layout with support, closed by the weighted-average row.
pub fn per_class_table(results: &EvalResults) -> Table {
    let mut rows: Vec<Vec<String>> = results
        .per_class
        .iter()
        .map(|m| vec![m.class.clone(), pct(m.precision), pct(m.recall), pct(m.f1), m.support.to_string()])
        .collect();
    let w = &results.weighted;
    rows.push(vec!["weighted avg".into(), pct(w.precision), pct(w.recall), pct(w.f1), w.support.to_string()]);
    Table { header: ["Techniques", "P", "R", "F1", "#"].map(String::from).to_vec(), rows }
}
