//! RBF-SVM classifiers: training, prediction, grid search and ablation.
//!
//! Binary mode trains one machine on propaganda vs non-propaganda. Multiclass
//! mode trains one-vs-rest machines for every label present in training, in
//! the fixed class order, and predicts the argmax (ties go to the earlier class).

use std::fmt;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::corpus::TechniqueLabel;
use crate::eval::{evaluate_binary, evaluate_multiclass, EvalResults, BINARY_CLASSES};
use crate::exec::Exec;
use crate::features::{FeatureGroup, FeatureMatrix, FeatureTable, FeatureVector, Standardizer};
use crate::svm::{rbf, solve, BinaryProblem, SolverParams};
use crate::{Error, Result};

pub const MODEL_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    #[default]
    Binary,
    Multiclass,
}

impl Mode {
    pub fn as_str(self) -> &'static str {
        match self {
            Mode::Binary => "binary",
            Mode::Multiclass => "multiclass",
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "binary" => Ok(Mode::Binary),
            "multiclass" => Ok(Mode::Multiclass),
            other => Err(Error::validation(format!("unknown mode {other:?} (binary|multiclass)"))),
        }
    }
}

/// NonPropaganda → false, any technique → true.
pub fn to_binary(labels: &[TechniqueLabel]) -> Vec<bool> {
    labels.iter().map(|l| l.is_propaganda()).collect()
}

/// One binary discriminant: `f(x) = Σ coefᵢ·K(svᵢ, x) + bias` on standardized `x`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Machine {
    /// Positive class of this machine.
    pub class: String,
    pub support_vectors: Vec<Vec<f64>>,
    pub dual_coef: Vec<f64>,
    pub bias: f64,
    pub iterations: usize,
    pub kkt_gap: f64,
}

impl Machine {
    pub fn decision(&self, x: &[f64], gamma: f64) -> f64 {
        self.support_vectors
            .iter()
            .zip(&self.dual_coef)
            .map(|(sv, a)| a * rbf(sv, x, gamma))
            .sum::<f64>()
            + self.bias
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainedModel {
    pub version: u32,
    pub mode: Mode,
    pub gamma: f64,
    #[serde(rename = "C")]
    pub c: f64,
    pub class_weighting: bool,
    pub classes: Vec<String>,
    pub machines: Vec<Machine>,
    pub standardizer: Standardizer,
    pub schema_fingerprint: String,
    pub groups: Vec<FeatureGroup>,
    pub feature_names: Vec<String>,
    pub n_features: usize,
    pub seed: u64,
}

/// Class index plus one score per class.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    pub class: usize,
    pub scores: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainParams {
    pub gamma: f64,
    pub c: f64,
    /// Scale `C` per class by `n / (2·n_class)`.
    pub class_weighting: bool,
    pub seed: u64,
    pub solver: SolverParams,
}

impl TrainParams {
    pub fn new(gamma: f64, c: f64) -> Self {
        TrainParams { gamma, c, class_weighting: false, seed: 0, solver: SolverParams::default() }
    }
}

/// Trains on raw (unstandardized) features; the standardizer is fitted here
/// and stored with the model.
pub fn train_svm(
    x: &FeatureMatrix,
    labels: &[TechniqueLabel],
    mode: Mode,
    params: &TrainParams,
    exec: Exec,
) -> Result<TrainedModel> {
    if labels.len() != x.n_rows() {
        return Err(Error::validation(format!("{} labels for {} rows", labels.len(), x.n_rows())));
    }
    if !(params.gamma > 0.0 && params.gamma.is_finite()) || !(params.c > 0.0 && params.c.is_finite()) {
        return Err(Error::validation(format!("gamma and C must be positive, got {} and {}", params.gamma, params.c)));
    }
    if x.data().iter().any(|v| !v.is_finite()) {
        return Err(Error::validation("feature matrix contains non-finite values"));
    }
    let (classes, targets): (Vec<String>, Vec<Vec<bool>>) = match mode {
        Mode::Binary => {
            let y = to_binary(labels);
            (BINARY_CLASSES.iter().map(|s| s.to_string()).collect(), vec![y])
        }
        Mode::Multiclass => {
            let present: Vec<TechniqueLabel> =
                TechniqueLabel::ALL.iter().copied().filter(|c| labels.contains(c)).collect();
            let targets = present.iter().map(|c| labels.iter().map(|l| l == c).collect()).collect();
            (present.iter().map(|c| c.as_str().to_string()).collect(), targets)
        }
    };
    if classes.len() < 2 || targets.iter().any(|y| y.iter().all(|&b| b) || !y.iter().any(|&b| b)) {
        return Err(Error::validation("training labels contain a single class"));
    }
    let standardizer = Standardizer::fit(x)?;
    let z = standardizer.transform(x, exec)?;
    let dim = z.n_cols();
    let n = z.n_rows();
    let machine_classes: Vec<String> = match mode {
        Mode::Binary => vec![classes[1].clone()],
        Mode::Multiclass => classes.clone(),
    };
    // One-vs-rest machines are independent; parallelize across them when there are several.
    let (outer, inner) = if targets.len() > 1 { (exec, Exec::Sequential) } else { (Exec::Sequential, exec) };
    let jobs: Vec<usize> = (0..targets.len()).collect();
    let machines: Vec<Result<Machine>> = outer.map(&jobs, |&k| {
        let y = &targets[k];
        let mut problem = BinaryProblem::new(z.data(), dim, y, params.c);
        if params.class_weighting {
            let pos = y.iter().filter(|&&b| b).count() as f64;
            let (wp, wn) = (n as f64 / (2.0 * pos), n as f64 / (2.0 * (n as f64 - pos)));
            problem.c = y.iter().map(|&b| params.c * if b { wp } else { wn }).collect();
        }
        let sol = solve(&problem, params.gamma, &params.solver, inner)?;
        let mut support_vectors = Vec::new();
        let mut dual_coef = Vec::new();
        for (i, &a) in sol.alpha.iter().enumerate() {
            if a > 0.0 {
                support_vectors.push(z.row(i).to_vec());
                dual_coef.push(if y[i] { a } else { -a });
            }
        }
        Ok(Machine {
            class: machine_classes[k].clone(),
            support_vectors,
            dual_coef,
            bias: -sol.rho,
            iterations: sol.iterations,
            kkt_gap: sol.kkt_gap,
        })
    });
    Ok(TrainedModel {
        version: MODEL_VERSION,
        mode,
        gamma: params.gamma,
        c: params.c,
        class_weighting: params.class_weighting,
        classes,
        machines: machines.into_iter().collect::<Result<_>>()?,
        standardizer,
        schema_fingerprint: x.schema.fingerprint(),
        groups: x.schema.groups(),
        feature_names: x.schema.names().into_iter().map(str::to_string).collect(),
        n_features: dim,
        seed: params.seed,
    })
}

impl TrainedModel {
    fn check_schema(&self, fingerprint: &str, width: usize) -> Result<()> {
        if width != self.n_features {
            return Err(Error::validation(format!(
                "model expects {} features, got {width}",
                self.n_features
            )));
        }
        if fingerprint != self.schema_fingerprint {
            return Err(Error::validation("feature schema does not match the model"));
        }
        Ok(())
    }

    /// Scores and argmax for one raw row whose schema has already been checked.
    fn predict_checked(&self, raw: &[f64]) -> Result<Prediction> {
        let z = self.standardizer.transform_row(raw)?;
        let scores: Vec<f64> = match self.mode {
            Mode::Binary => {
                let f = self.machines[0].decision(&z, self.gamma);
                vec![-f, f]
            }
            Mode::Multiclass => self.machines.iter().map(|m| m.decision(&z, self.gamma)).collect(),
        };
        let mut class = 0;
        for (k, &s) in scores.iter().enumerate() {
            if s > scores[class] {
                class = k;
            }
        }
        Ok(Prediction { class, scores })
    }

    pub fn predict(&self, x: &FeatureMatrix, exec: Exec) -> Result<Vec<Prediction>> {
        self.check_schema(&x.schema.fingerprint(), x.n_cols())?;
        exec.map_range(x.n_rows(), |i| self.predict_checked(x.row(i))).into_iter().collect()
    }

    pub fn predict_vector(&self, fv: &FeatureVector) -> Result<Prediction> {
        self.check_schema(&fv.schema.fingerprint(), fv.values.len())?;
        self.predict_checked(&fv.values)
    }

    pub fn class_name(&self, p: &Prediction) -> &str {
        &self.classes[p.class]
    }

    /// Predicted technique; binary models only know `NonPropaganda` vs "some technique" and return `None` for the latter.
    pub fn technique(&self, p: &Prediction) -> Option<TechniqueLabel> {
        match self.mode {
            Mode::Binary => (p.class == 0).then_some(TechniqueLabel::NonPropaganda),
            Mode::Multiclass => self.classes[p.class].parse().ok(),
        }
    }

    pub fn is_propaganda(&self, p: &Prediction) -> bool {
        match self.mode {
            Mode::Binary => p.class == 1,
            Mode::Multiclass => self.classes[p.class] != TechniqueLabel::NonPropaganda.as_str(),
        }
    }

    pub fn predict_binary(&self, x: &FeatureMatrix, exec: Exec) -> Result<Vec<bool>> {
        Ok(self.predict(x, exec)?.iter().map(|p| self.is_propaganda(p)).collect())
    }

    /// Multiclass labels; an error for binary models.
    pub fn predict_labels(&self, x: &FeatureMatrix, exec: Exec) -> Result<Vec<TechniqueLabel>> {
        if self.mode != Mode::Multiclass {
            return Err(Error::validation("technique labels need a multiclass model"));
        }
        self.predict(x, exec)?
            .iter()
            .map(|p| self.classes[p.class].parse())
            .collect()
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let json = serde_json::to_string_pretty(self)?;
        fs::write(path, json + "\n").map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let m: TrainedModel = serde_json::from_str(&text)?;
        if m.version != MODEL_VERSION {
            return Err(Error::validation(format!("unsupported model version {}", m.version)));
        }
        Ok(m)
    }
}

/// Evaluates `model` on the gold labels of `table`.
pub fn evaluate_model(model: &TrainedModel, table: &FeatureTable, exec: Exec) -> Result<EvalResults> {
    let gold = table.labels();
    match model.mode {
        Mode::Binary => evaluate_binary(&to_binary(&gold), &model.predict_binary(&table.matrix, exec)?),
        Mode::Multiclass => evaluate_multiclass(&gold, &model.predict_labels(&table.matrix, exec)?),
    }
}

/// Precision, recall and F1 as fractions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Prf {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

/// The selection metric: positive-class scores for binary, weighted averages for multiclass.
pub fn headline(results: &EvalResults) -> Prf {
    match &results.positive {
        Some(p) => Prf { precision: p.precision, recall: p.recall, f1: p.f1 },
        None => Prf { precision: results.weighted.precision, recall: results.weighted.recall, f1: results.weighted.f1 },
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Grid {
    pub gamma: Vec<f64>,
    #[serde(rename = "C", alias = "c")]
    pub c: Vec<f64>,
}

impl Default for Grid {
    fn default() -> Self {
        Grid { gamma: vec![1e-3, 1e-4], c: vec![10.0, 100.0] }
    }
}

impl Grid {
    pub fn validate(&self) -> Result<()> {
        if self.gamma.is_empty() || self.c.is_empty() {
            return Err(Error::validation("grid must contain at least one gamma and one C"));
        }
        if self.gamma.iter().chain(&self.c).any(|v| !(*v > 0.0 && v.is_finite())) {
            return Err(Error::validation("grid values must be positive and finite"));
        }
        Ok(())
    }

    /// `(gamma, C)` pairs, gamma-major.
    pub fn points(&self) -> Vec<(f64, f64)> {
        self.gamma.iter().flat_map(|&g| self.c.iter().map(move |&c| (g, c))).collect()
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let g: Grid = serde_json::from_str(&text)?;
        g.validate()?;
        Ok(g)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub mode: Mode,
    /// Restrict training to these groups; `None` uses every column of the table.
    pub groups: Option<Vec<FeatureGroup>>,
    pub seed: u64,
    pub grid: Grid,
    pub class_weighting: bool,
    /// KKT tolerance of the solver.
    pub eps: f64,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig { mode: Mode::Binary, groups: None, seed: 0, grid: Grid::default(), class_weighting: false, eps: 1e-3 }
    }
}

impl ExperimentConfig {
    fn params(&self, gamma: f64, c: f64) -> TrainParams {
        TrainParams {
            gamma,
            c,
            class_weighting: self.class_weighting,
            seed: self.seed,
            solver: SolverParams { eps: self.eps, ..SolverParams::default() },
        }
    }

    /// Drops every group of `table` not listed in `groups`.
    pub fn restrict(&self, table: &FeatureTable) -> Result<FeatureTable> {
        let Some(groups) = &self.groups else { return Ok(table.clone()) };
        for g in groups {
            if !table.matrix.schema.contains(*g) {
                return Err(Error::validation(format!("feature group {g} is not in the feature table")));
            }
        }
        let mut out = table.clone();
        for g in table.matrix.schema.groups() {
            if !groups.contains(&g) {
                out = out.drop_group(g)?;
            }
        }
        Ok(out)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridScore {
    pub gamma: f64,
    #[serde(rename = "C")]
    pub c: f64,
    pub dev: Prf,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridSearchResult {
    pub best: GridScore,
    pub table: Vec<GridScore>,
    pub model: TrainedModel,
}

/// Index of the best row: max dev F1, ties to smaller C, then smaller gamma.
pub fn select_best(table: &[GridScore]) -> Option<usize> {
    (0..table.len()).reduce(|best, i| {
        let (a, b) = (&table[i], &table[best]);
        let better = a.dev.f1 > b.dev.f1
            || (a.dev.f1 == b.dev.f1 && (a.c < b.c || (a.c == b.c && a.gamma < b.gamma)));
        if better {
            i
        } else {
            best
        }
    })
}

/// Trains one model per grid point on `train` and scores it on `dev`.
pub fn grid_search(
    train: &FeatureTable,
    dev: &FeatureTable,
    config: &ExperimentConfig,
    exec: Exec,
) -> Result<GridSearchResult> {
    config.grid.validate()?;
    if dev.is_empty() {
        return Err(Error::validation("grid search needs a non-empty development set"));
    }
    let train = config.restrict(train)?;
    let dev = config.restrict(dev)?;
    let labels = train.labels();
    let points = config.grid.points();
    let runs: Vec<Result<(GridScore, TrainedModel)>> = exec.map(&points, |&(gamma, c)| {
        let model = train_svm(&train.matrix, &labels, config.mode, &config.params(gamma, c), Exec::Sequential)?;
        let dev_scores = headline(&evaluate_model(&model, &dev, Exec::Sequential)?);
        Ok((GridScore { gamma, c, dev: dev_scores }, model))
    });
    let runs: Vec<(GridScore, TrainedModel)> = runs.into_iter().collect::<Result<_>>()?;
    let table: Vec<GridScore> = runs.iter().map(|(s, _)| *s).collect();
    let best_i = select_best(&table).expect("grid is non-empty");
    let (best, model) = runs.into_iter().nth(best_i).expect("index in range");
    Ok(GridSearchResult { best, table, model })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AblationMethod {
    Retrain,
    /// Predictions from thresholding the document-level score.
    DocThreshold,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AblationRow {
    /// `None` for the full feature set.
    pub dropped: Option<FeatureGroup>,
    pub method: AblationMethod,
    pub gamma: Option<f64>,
    #[serde(rename = "C")]
    pub c: Option<f64>,
    pub threshold: Option<f64>,
    pub dev: Prf,
    pub test: Prf,
}

impl AblationRow {
    pub fn name(&self) -> String {
        match self.dropped {
            None => "All".to_string(),
            Some(g) => format!("- {g}"),
        }
    }
}

/// Threshold on the `doc` column maximizing binary F1 on `dev`. Sentences with
/// `doc >= threshold` are predicted propaganda. Candidates are the distinct dev
/// values plus +inf; ties go to the smaller threshold.
pub fn fit_doc_threshold(doc: &[f64], gold: &[bool]) -> Result<(f64, Prf)> {
    let mut candidates: Vec<f64> = doc.to_vec();
    candidates.push(f64::INFINITY);
    candidates.sort_by(f64::total_cmp);
    candidates.dedup();
    let mut best: Option<(f64, Prf)> = None;
    for t in candidates {
        let pred: Vec<bool> = doc.iter().map(|&d| d >= t).collect();
        let prf = headline(&evaluate_binary(gold, &pred)?);
        if best.is_none_or(|(_, b)| prf.f1 > b.f1) {
            best = Some((t, prf));
        }
    }
    best.ok_or_else(|| Error::validation("no rows to fit a threshold on"))
}

/// Base row plus one row per dropped group. In binary mode, dropping `sent`
/// scores the document-level score thresholded on dev instead of retraining.
pub fn run_ablation(
    train: &FeatureTable,
    dev: &FeatureTable,
    test: &FeatureTable,
    config: &ExperimentConfig,
    drops: &[FeatureGroup],
    exec: Exec,
) -> Result<Vec<AblationRow>> {
    let train = config.restrict(train)?;
    let dev = config.restrict(dev)?;
    let test = config.restrict(test)?;
    for g in drops {
        if !train.matrix.schema.contains(*g) {
            return Err(Error::validation(format!("cannot drop {g}: not in the feature set")));
        }
    }
    let base_config = ExperimentConfig { groups: None, ..config.clone() };
    let mut jobs: Vec<Option<FeatureGroup>> = vec![None];
    jobs.extend(drops.iter().copied().map(Some));
    let rows: Vec<Result<AblationRow>> = exec.map(&jobs, |&dropped| {
        if dropped == Some(FeatureGroup::Sent) && config.mode == Mode::Binary {
            return doc_threshold_row(&dev, &test);
        }
        let (tr, dv, ts) = match dropped {
            None => (train.clone(), dev.clone(), test.clone()),
            Some(g) => (train.drop_group(g)?, dev.drop_group(g)?, test.drop_group(g)?),
        };
        let gs = grid_search(&tr, &dv, &base_config, Exec::Sequential)?;
        let test_scores = headline(&evaluate_model(&gs.model, &ts, Exec::Sequential)?);
        Ok(AblationRow {
            dropped,
            method: AblationMethod::Retrain,
            gamma: Some(gs.best.gamma),
            c: Some(gs.best.c),
            threshold: None,
            dev: gs.best.dev,
            test: test_scores,
        })
    });
    rows.into_iter().collect()
}

fn doc_threshold_row(dev: &FeatureTable, test: &FeatureTable) -> Result<AblationRow> {
    let j = dev
        .matrix
        .schema
        .position("doc")
        .ok_or_else(|| Error::validation("the sent ablation needs the doc feature"))?;
    let (threshold, dev_scores) = fit_doc_threshold(&dev.matrix.column(j), &to_binary(&dev.labels()))?;
    let pred: Vec<bool> = test.matrix.column(j).iter().map(|&d| d >= threshold).collect();
    let test_scores = headline(&evaluate_binary(&to_binary(&test.labels()), &pred)?);
    Ok(AblationRow {
        dropped: Some(FeatureGroup::Sent),
        method: AblationMethod::DocThreshold,
        gamma: None,
        c: None,
        threshold: Some(threshold),
        dev: dev_scores,
        test: test_scores,
    })
}
