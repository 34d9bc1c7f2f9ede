//! Feature/technique association and article-level behavior statistics.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::corpus::{SentenceRecord, TechniqueLabel};
use crate::exec::Exec;
use crate::features::FeatureMatrix;
use crate::{Error, Result};

pub const DEFAULT_THRESHOLD: f64 = 0.001;

/// Covariance between a real feature and a binary indicator:
/// `p(1-p)(E[f|t=1] - E[f|t=0])` with `p = mean(t)`. Zero when `t` is constant.
pub fn mixed_covariance(f: &[f64], t: &[bool]) -> Result<f64> {
    if f.len() != t.len() {
        return Err(Error::validation(format!("length mismatch: {} values, {} indicators", f.len(), t.len())));
    }
    if f.is_empty() {
        return Err(Error::validation("mixed covariance needs at least one row"));
    }
    let (mut sum1, mut n1, mut sum0) = (0.0, 0usize, 0.0);
    for (&x, &on) in f.iter().zip(t) {
        if on {
            sum1 += x;
            n1 += 1;
        } else {
            sum0 += x;
        }
    }
    let n = f.len();
    if n1 == 0 || n1 == n {
        return Ok(0.0);
    }
    let p = n1 as f64 / n as f64;
    let mean1 = sum1 / n1 as f64;
    let mean0 = sum0 / (n - n1) as f64;
    Ok(p * (1.0 - p) * (mean1 - mean0))
}

/// Absolute covariances, features × the 18 techniques.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CovarianceMatrix {
    pub features: Vec<String>,
    pub techniques: Vec<TechniqueLabel>,
    /// Positive instances per technique.
    pub counts: Vec<usize>,
    /// `values[feature][technique]`, all ≥ 0.
    pub values: Vec<Vec<f64>>,
    /// `mask[f][t]` is true when the entry reaches the threshold.
    pub mask: Vec<Vec<bool>>,
    pub threshold: f64,
}

impl CovarianceMatrix {
    pub fn technique_column(&self, technique: TechniqueLabel) -> Option<usize> {
        self.techniques.iter().position(|&t| t == technique)
    }

    pub fn get(&self, feature: usize, technique: TechniqueLabel) -> Option<f64> {
        let j = self.technique_column(technique)?;
        self.values.get(feature).map(|row| row[j])
    }

    pub fn is_unmasked(&self, feature: usize, technique: TechniqueLabel) -> bool {
        self.technique_column(technique)
            .and_then(|j| self.mask.get(feature).map(|row| row[j]))
            .unwrap_or(false)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Ok(serde_json::from_str(&text)?)
    }
}

/// `|mixed_covariance|` of every feature column against every technique indicator.
/// Expects standardized features. Parallel over features.
pub fn covariance_matrix(
    matrix: &FeatureMatrix,
    labels: &[TechniqueLabel],
    threshold: f64,
    exec: Exec,
) -> Result<CovarianceMatrix> {
    if labels.len() != matrix.n_rows() {
        return Err(Error::validation(format!(
            "{} labels for {} feature rows",
            labels.len(),
            matrix.n_rows()
        )));
    }
    if !(threshold >= 0.0) {
        return Err(Error::validation(format!("threshold must be non-negative, got {threshold}")));
    }
    let techniques = TechniqueLabel::techniques().to_vec();
    let indicators: Vec<Vec<bool>> =
        techniques.iter().map(|&t| labels.iter().map(|&l| l == t).collect()).collect();
    let counts = indicators.iter().map(|ind| ind.iter().filter(|&&b| b).count()).collect();
    let rows: Vec<Result<Vec<f64>>> = exec.map_range(matrix.n_cols(), |j| {
        let column = matrix.column(j);
        indicators
            .iter()
            .map(|ind| mixed_covariance(&column, ind).map(f64::abs))
            .collect()
    });
    let values: Vec<Vec<f64>> = rows.into_iter().collect::<Result<_>>()?;
    let mask = values.iter().map(|row| row.iter().map(|&v| v >= threshold).collect()).collect();
    Ok(CovarianceMatrix {
        features: matrix.schema.names().into_iter().map(str::to_string).collect(),
        techniques,
        counts,
        values,
        mask,
        threshold,
    })
}

/// Fraction of articles with at least one propaganda sentence among the first
/// five, the first three, and the title.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BehaviorStats {
    pub first5: f64,
    pub first3: f64,
    pub title: f64,
}

pub fn behavior_stats(records: &[SentenceRecord]) -> BehaviorStats {
    let mut per_article: BTreeMap<&str, [bool; 3]> = BTreeMap::new();
    for r in records {
        let flags = per_article.entry(r.article_id.as_str()).or_default();
        if r.label.is_propaganda() {
            flags[0] |= r.sentence_index <= 5;
            flags[1] |= r.sentence_index <= 3;
            flags[2] |= r.sentence_index == 1;
        }
    }
    let n = per_article.len();
    if n == 0 {
        return BehaviorStats { first5: 0.0, first3: 0.0, title: 0.0 };
    }
    let frac = |k: usize| per_article.values().filter(|f| f[k]).count() as f64 / n as f64;
    BehaviorStats { first5: frac(0), first3: frac(1), title: frac(2) }
}

/// Writes `covariance.csv`, `covariance.svg` and `covariance.json` into `out_dir`.
/// Masked cells are empty in the CSV and blank in the SVG.
pub fn export_heatmap(cm: &CovarianceMatrix, out_dir: impl AsRef<Path>) -> Result<Vec<PathBuf>> {
    let dir = out_dir.as_ref();
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let write = |name: &str, content: String| -> Result<PathBuf> {
        let path = dir.join(name);
        fs::write(&path, content).map_err(|e| Error::io(&path, e))?;
        Ok(path)
    };
    Ok(vec![
        write("covariance.csv", heatmap_csv(cm)?)?,
        write("covariance.svg", heatmap_svg(cm))?,
        write("covariance.json", serde_json::to_string_pretty(cm)? + "\n")?,
    ])
}

fn column_header(t: TechniqueLabel, count: usize) -> String {
    format!("{} ({count})", t.display_name())
}

pub fn heatmap_csv(cm: &CovarianceMatrix) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header = vec!["feature".to_string()];
    header.extend(cm.techniques.iter().zip(&cm.counts).map(|(&t, &c)| column_header(t, c)));
    w.write_record(&header)?;
    for ((name, row), mask) in cm.features.iter().zip(&cm.values).zip(&cm.mask) {
        let mut rec = vec![name.clone()];
        rec.extend(row.iter().zip(mask).map(|(v, &keep)| if keep { format!("{v:.6}") } else { String::new() }));
        w.write_record(&rec)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::validation(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

fn xml_escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

/// Self-contained SVG: rows are features, columns techniques, darker is larger.
pub fn heatmap_svg(cm: &CovarianceMatrix) -> String {
    const CELL: usize = 18;
    const LEFT: usize = 150;
    const TOP: usize = 210;
    let max = cm
        .values
        .iter()
        .zip(&cm.mask)
        .flat_map(|(r, m)| r.iter().zip(m).filter(|(_, &k)| k).map(|(v, _)| *v))
        .fold(0.0_f64, f64::max);
    let width = LEFT + CELL * cm.techniques.len() + 20;
    let height = TOP + CELL * cm.features.len() + 20;
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" font-family="sans-serif" font-size="10">"#
    );
    let _ = writeln!(s, r#"<rect width="{width}" height="{height}" fill="white"/>"#);
    for (j, (&t, &c)) in cm.techniques.iter().zip(&cm.counts).enumerate() {
        let x = LEFT + j * CELL + CELL / 2;
        let _ = writeln!(
            s,
            r#"<text x="{x}" y="{}" transform="rotate(-60 {x} {})">{}</text>"#,
            TOP - 6,
            TOP - 6,
            xml_escape(&column_header(t, c))
        );
    }
    for (i, name) in cm.features.iter().enumerate() {
        let y = TOP + i * CELL;
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{}" text-anchor="end">{}</text>"#,
            LEFT - 4,
            y + CELL - 5,
            xml_escape(name)
        );
        for j in 0..cm.techniques.len() {
            let x = LEFT + j * CELL;
            let fill = if cm.mask[i][j] {
                let level = if max > 0.0 { cm.values[i][j] / max } else { 0.0 };
                let shade = (255.0 - 200.0 * level).round() as u8;
                format!("rgb({shade},{shade},255)")
            } else {
                "white".to_string()
            };
            let _ = writeln!(
                s,
                r##"<rect x="{x}" y="{y}" width="{CELL}" height="{CELL}" fill="{fill}" stroke="#ddd"><title>{}: {:.6}</title></rect>"##,
                xml_escape(name),
                cm.values[i][j]
            );
        }
    }
    s.push_str("</svg>\n");
    s
}
