//! One function per subcommand. Every stage reads files, writes files and a
//! manifest; nothing is carried between invocations.

use std::fs;
use std::io::{self, BufReader};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::json;

use propscope::analysis::{covariance_matrix, export_heatmap, CovarianceMatrix};
use propscope::corpus::{
    corpus_stats, load_articles, load_spans, load_split_spec, project_corpus, read_records_jsonl, split_dataset,
    write_jsonl, write_records_tsv, Split,
};
use propscope::eval::{ablation_table, comparison_table, per_class_table, ScoreRow, Table};
use propscope::exec::Exec;
use propscope::explain::{explain_document, render_report, ReportFormat};
use propscope::features::{assemble_corpus, parse_groups, FeatureConfig, FeatureGroup, FeatureTable, Standardizer};
use propscope::model::{evaluate_model, grid_search, headline, run_ablation, ExperimentConfig, Grid, Mode, TrainedModel};
use propscope::providers::{remote::serve_lines, ProviderConfig, Providers};
use propscope::{Error, Result};

use crate::manifest::Manifest;

/// Contents of the `--config` file. Relative paths are resolved against the
/// file's directory.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub articles: Option<PathBuf>,
    pub spans: Option<PathBuf>,
    pub splits: Option<PathBuf>,
    pub out: Option<PathBuf>,
    pub seed: Option<u64>,
    pub providers: ProviderConfig,
    pub experiment: ExperimentConfig,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut c: RunConfig = serde_json::from_str(&text)
            .map_err(|e| Error::validation(format!("{}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new(""));
        for p in [&mut c.articles, &mut c.spans, &mut c.splits, &mut c.out].into_iter().flatten() {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
        if let Some(cmd) = c.providers.command.as_mut() {
            // a relative program path next to the config file
            if let Some(first) = cmd.first_mut() {
                if first.contains('/') && Path::new(first).is_relative() {
                    *first = base.join(&*first).display().to_string();
                }
            }
        }
        Ok(c)
    }
}

/// Resolved shared settings.
pub struct Context {
    pub config: RunConfig,
    pub seed: u64,
    pub out: Option<PathBuf>,
    pub exec: Exec,
}

impl Context {
    fn out_dir(&self) -> Result<&Path> {
        let out = self.out.as_deref().ok_or_else(|| Error::validation("missing --out (or `out` in the config file)"))?;
        fs::create_dir_all(out).map_err(|e| Error::io(out, e))?;
        Ok(out)
    }

    fn providers(&self) -> Result<(Providers, ProviderConfig)> {
        let cfg = self.config.providers.clone().with_url_override(std::env::var("PROVIDER_URL").ok());
        Ok((Providers::from_config(&cfg)?, cfg))
    }

    fn experiment(&self, mode: Option<Mode>, grid: Option<&str>, groups: Option<&str>) -> Result<ExperimentConfig> {
        let mut e = self.config.experiment.clone();
        e.seed = self.seed;
        if let Some(m) = mode {
            e.mode = m;
        }
        match grid {
            None => {}
            Some("default") => e.grid = Grid::default(),
            Some(path) => e.grid = Grid::load(existing(Path::new(path), "--grid")?)?,
        }
        if let Some(g) = groups {
            e.groups = Some(group_list(g)?);
        }
        e.grid.validate()?;
        Ok(e)
    }
}

fn existing<'a>(path: &'a Path, what: &str) -> Result<&'a Path> {
    if path.exists() {
        Ok(path)
    } else {
        Err(Error::validation(format!("{what}: {} does not exist", path.display())))
    }
}

fn required<'a>(flag: &'a Option<PathBuf>, fallback: &'a Option<PathBuf>, what: &str) -> Result<&'a Path> {
    let p = flag
        .as_deref()
        .or(fallback.as_deref())
        .ok_or_else(|| Error::validation(format!("missing --{what} (or `{what}` in the config file)")))?;
    existing(p, &format!("--{what}"))
}

fn group_list(s: &str) -> Result<Vec<FeatureGroup>> {
    let groups = parse_groups(s)?;
    if groups.is_empty() {
        return Err(Error::validation("empty feature group list"));
    }
    Ok(groups)
}

fn write(dir: &Path, name: &str, content: impl AsRef<[u8]>) -> Result<String> {
    let path = dir.join(name);
    fs::write(&path, content).map_err(|e| Error::io(&path, e))?;
    Ok(name.to_string())
}

fn write_json(dir: &Path, name: &str, value: &impl Serialize) -> Result<String> {
    write(dir, name, serde_json::to_string_pretty(value)? + "\n")
}

fn write_table(dir: &Path, stem: &str, table: &Table) -> Result<Vec<String>> {
    Ok(vec![write(dir, &format!("{stem}.csv"), table.to_csv()?)?, write(dir, &format!("{stem}.txt"), table.to_text())?])
}

fn read_features(path: &Path) -> Result<FeatureTable> {
    FeatureTable::read(existing(path, "--features")?)
}

fn split_part(table: &FeatureTable, split: Split) -> Result<FeatureTable> {
    let part = table.select_splits(&[split]);
    if part.is_empty() {
        return Err(Error::validation(format!("feature table has no {split} rows")));
    }
    Ok(part)
}

// prepare

#[derive(Debug, clap::Args)]
pub struct PrepareArgs {
    /// Directory of article<ID>.txt files.
    #[arg(long)]
    pub articles: Option<PathBuf>,
    /// Span annotations: article_id, technique, begin, end (tab-separated).
    #[arg(long)]
    pub spans: Option<PathBuf>,
    /// Split assignment: article_id, split (tab-separated).
    #[arg(long)]
    pub splits: Option<PathBuf>,
}

#[derive(Serialize)]
struct PrepareStats {
    all: propscope::corpus::CorpusStats,
    splits: Option<SplitCounts>,
    train_dev: Option<propscope::corpus::CorpusStats>,
}

#[derive(Serialize)]
struct SplitCounts {
    train: usize,
    dev: usize,
    test: usize,
}

pub fn prepare(ctx: &Context, args: &PrepareArgs) -> Result<()> {
    let articles_dir = required(&args.articles, &ctx.config.articles, "articles")?;
    let spans_path = required(&args.spans, &ctx.config.spans, "spans")?;
    let splits_path = match args.splits.as_ref().or(ctx.config.splits.as_ref()) {
        Some(p) => Some(existing(p, "--splits")?),
        None => None,
    };
    let out = ctx.out_dir()?;
    let articles = load_articles(articles_dir)?;
    let spans = load_spans(spans_path)?;
    let records = project_corpus(&articles, &spans, ctx.seed)?;
    let all = corpus_stats(&records);
    let (mut records, splits, train_dev) = match splits_path {
        Some(p) => {
            let split = split_dataset(records, &load_split_spec(p)?)?;
            let (train, dev, test) = split.counts();
            let td: Vec<_> = split.train.iter().chain(&split.dev).cloned().collect();
            let td_stats = corpus_stats(&td);
            (split.into_records(), Some(SplitCounts { train, dev, test }), Some(td_stats))
        }
        None => (records, None, None),
    };
    // keep the article order of the corpus
    let order: std::collections::HashMap<&str, usize> =
        articles.iter().enumerate().map(|(i, a)| (a.article_id.as_str(), i)).collect();
    records.sort_by_key(|r| (order[r.article_id.as_str()], r.sentence_index));

    write_jsonl(out.join("sentences.jsonl"), &records)?;
    write_records_tsv(out.join("sentences.tsv"), &records)?;
    let mut outputs = vec!["sentences.jsonl".to_string(), "sentences.tsv".to_string()];
    outputs.push(write_json(out, "stats.json", &PrepareStats { all, splits, train_dev })?);

    let mut m = Manifest::new(
        "prepare",
        ctx.seed,
        json!({"articles": articles_dir, "spans": spans_path, "splits": splits_path}),
    );
    m.input(articles_dir)?;
    m.input(spans_path)?;
    if let Some(p) = splits_path {
        m.input(p)?;
    }
    m.write(out, &outputs)
}

// features

#[derive(Debug, clap::Args)]
pub struct FeaturesArgs {
    /// Sentence records from `prepare`.
    #[arg(long)]
    pub records: PathBuf,
    /// Directory of article<ID>.txt files.
    #[arg(long)]
    pub articles: Option<PathBuf>,
    /// Comma-separated feature groups.
    #[arg(long, default_value = "rp,sim,stn,dp,sent,doc")]
    pub groups: String,
}

pub fn features(ctx: &Context, args: &FeaturesArgs) -> Result<()> {
    let records_path = existing(&args.records, "--records")?;
    let articles_dir = required(&args.articles, &ctx.config.articles, "articles")?;
    let config = FeatureConfig { groups: group_list(&args.groups)? };
    let out = ctx.out_dir()?;
    let (providers, provider_config) = ctx.providers()?;
    let records = read_records_jsonl(records_path)?;
    let articles = load_articles(articles_dir)?;
    let table = assemble_corpus(&articles, &records, &providers, &config, ctx.exec)?;
    table.write(out)?;
    let mut m = Manifest::new(
        "features",
        ctx.seed,
        json!({"records": records_path, "articles": articles_dir, "groups": config.groups, "providers": provider_config}),
    );
    m.input(records_path)?;
    m.input(articles_dir)?;
    m.write(out, &[propscope::features::FEATURES_CSV.to_string(), propscope::features::SCHEMA_JSON.to_string()])
}

// covariance

#[derive(Debug, clap::Args)]
pub struct CovarianceArgs {
    /// Feature directory from `features`.
    #[arg(long)]
    pub features: PathBuf,
    /// Splits whose rows enter the statistics.
    #[arg(long, default_value = "train,dev")]
    pub splits: String,
    /// Entries below this |cov| are masked.
    #[arg(long, default_value_t = propscope::analysis::DEFAULT_THRESHOLD)]
    pub threshold: f64,
}

pub fn covariance(ctx: &Context, args: &CovarianceArgs) -> Result<()> {
    let splits: Vec<Split> = args.splits.split(',').filter(|s| !s.trim().is_empty()).map(str::parse).collect::<Result<_>>()?;
    let table = read_features(&args.features)?;
    let rows = table.select_splits(&splits);
    if rows.is_empty() {
        return Err(Error::validation(format!("no rows in splits {}", args.splits)));
    }
    let out = ctx.out_dir()?;
    let z = Standardizer::fit(&rows.matrix)?.transform(&rows.matrix, ctx.exec)?;
    let cm: CovarianceMatrix = covariance_matrix(&z, &rows.labels(), args.threshold, ctx.exec)?;
    let written = export_heatmap(&cm, out)?;
    let outputs: Vec<String> =
        written.iter().filter_map(|p| p.file_name().map(|n| n.to_string_lossy().into_owned())).collect();
    let mut m = Manifest::new(
        "covariance",
        ctx.seed,
        json!({"features": args.features, "splits": splits, "threshold": args.threshold, "rows": rows.len()}),
    );
    m.input(&args.features)?;
    m.write(out, &outputs)
}

// train

#[derive(Debug, clap::Args)]
pub struct TrainArgs {
    /// Feature directory from `features`; needs train and dev rows.
    #[arg(long)]
    pub features: PathBuf,
    #[arg(long)]
    pub mode: Option<Mode>,
    /// `default` or a JSON file {"gamma": [...], "C": [...]}.
    #[arg(long)]
    pub grid: Option<String>,
    /// Restrict to these feature groups.
    #[arg(long)]
    pub groups: Option<String>,
}

#[derive(Serialize)]
struct GridReport<'a> {
    best: &'a propscope::model::GridScore,
    table: &'a [propscope::model::GridScore],
}

pub fn train(ctx: &Context, args: &TrainArgs) -> Result<()> {
    let experiment = ctx.experiment(args.mode, args.grid.as_deref(), args.groups.as_deref())?;
    let table = read_features(&args.features)?;
    let (train, dev) = (split_part(&table, Split::Train)?, split_part(&table, Split::Dev)?);
    let out = ctx.out_dir()?;
    let result = grid_search(&train, &dev, &experiment, ctx.exec)?;
    result.model.save(out.join("model.json"))?;
    let mut outputs = vec!["model.json".to_string()];
    outputs.push(write_json(out, "grid.json", &GridReport { best: &result.best, table: &result.table })?);
    let grid_table = Table {
        header: ["gamma", "C", "P", "R", "F1", "selected"].map(String::from).to_vec(),
        rows: result
            .table
            .iter()
            .map(|s| {
                vec![
                    s.gamma.to_string(),
                    s.c.to_string(),
                    format!("{:.2}", 100.0 * s.dev.precision),
                    format!("{:.2}", 100.0 * s.dev.recall),
                    format!("{:.2}", 100.0 * s.dev.f1),
                    (s == &result.best).to_string(),
                ]
            })
            .collect(),
    };
    outputs.extend(write_table(out, "grid", &grid_table)?);
    let mut m = Manifest::new("train", ctx.seed, json!({"features": args.features, "experiment": experiment}));
    m.input(&args.features)?;
    m.write(out, &outputs)
}

// evaluate

#[derive(Debug, clap::Args)]
pub struct EvaluateArgs {
    /// Model file from `train`.
    #[arg(long)]
    pub model: PathBuf,
    /// Feature directory from `features`.
    #[arg(long)]
    pub features: PathBuf,
    /// Split to evaluate on.
    #[arg(long, default_value = "test")]
    pub split: Split,
    /// Row name in the comparison table.
    #[arg(long, default_value = "SVM")]
    pub name: String,
}

pub fn evaluate(ctx: &Context, args: &EvaluateArgs) -> Result<()> {
    let model = TrainedModel::load(existing(&args.model, "--model")?)?;
    let table = read_features(&args.features)?;
    let restrict = ExperimentConfig { groups: Some(model.groups.clone()), ..ExperimentConfig::default() };
    let part = restrict.restrict(&split_part(&table, args.split)?)?;
    let out = ctx.out_dir()?;
    let results = evaluate_model(&model, &part, ctx.exec)?;
    let mut outputs = vec![write_json(out, "results.json", &results)?];
    outputs.extend(write_table(out, "per_class", &per_class_table(&results))?);
    let h = headline(&results);
    let row = ScoreRow { name: args.name.clone(), precision: h.precision, recall: h.recall, f1: h.f1 };
    outputs.extend(write_table(out, "comparison", &comparison_table(&[row]))?);
    let mut m = Manifest::new(
        "evaluate",
        model.seed,
        json!({"model": args.model, "features": args.features, "split": args.split, "mode": model.mode}),
    );
    m.input(&args.model)?;
    m.input(&args.features)?;
    m.write(out, &outputs)
}

// ablate

#[derive(Debug, clap::Args)]
pub struct AblateArgs {
    /// Feature directory from `features`; needs train, dev and test rows.
    #[arg(long)]
    pub features: PathBuf,
    /// Comma-separated groups to drop, one ablation row each.
    #[arg(long)]
    pub drop: String,
    #[arg(long)]
    pub mode: Option<Mode>,
    /// `default` or a JSON file {"gamma": [...], "C": [...]}.
    #[arg(long)]
    pub grid: Option<String>,
    /// Restrict the base feature set to these groups.
    #[arg(long)]
    pub groups: Option<String>,
}

pub fn ablate(ctx: &Context, args: &AblateArgs) -> Result<()> {
    let experiment = ctx.experiment(args.mode, args.grid.as_deref(), args.groups.as_deref())?;
    let drops = group_list(&args.drop)?;
    let table = read_features(&args.features)?;
    let (train, dev, test) =
        (split_part(&table, Split::Train)?, split_part(&table, Split::Dev)?, split_part(&table, Split::Test)?);
    let out = ctx.out_dir()?;
    let rows = run_ablation(&train, &dev, &test, &experiment, &drops, ctx.exec)?;
    let mut outputs = vec![write_json(out, "ablation.json", &rows)?];
    let score_rows: Vec<ScoreRow> = rows
        .iter()
        .map(|r| ScoreRow { name: r.name(), precision: r.test.precision, recall: r.test.recall, f1: r.test.f1 })
        .collect();
    outputs.extend(write_table(out, "ablation", &ablation_table(&score_rows))?);
    let mut m = Manifest::new(
        "ablate",
        ctx.seed,
        json!({"features": args.features, "drop": drops, "experiment": experiment}),
    );
    m.input(&args.features)?;
    m.write(out, &outputs)
}

// explain

#[derive(Debug, clap::Args)]
pub struct ExplainArgs {
    /// Model file from `train`.
    #[arg(long)]
    pub model: PathBuf,
    /// covariance.json from `covariance`, computed on the model's feature groups.
    #[arg(long)]
    pub covariance: PathBuf,
    /// Directory of article<ID>.txt files.
    #[arg(long)]
    pub articles: Option<PathBuf>,
    /// Comma-separated article ids; all articles when omitted.
    #[arg(long)]
    pub ids: Option<String>,
    #[arg(long, default_value = "json")]
    pub format: ReportFormat,
    /// Rationale length.
    #[arg(long, default_value_t = 5)]
    pub topk: usize,
}

pub fn explain(ctx: &Context, args: &ExplainArgs) -> Result<()> {
    let model = TrainedModel::load(existing(&args.model, "--model")?)?;
    let cm = CovarianceMatrix::load(existing(&args.covariance, "--covariance")?)?;
    let articles_dir = required(&args.articles, &ctx.config.articles, "articles")?;
    let mut articles = load_articles(articles_dir)?;
    if let Some(ids) = &args.ids {
        let wanted: Vec<&str> = ids.split(',').map(str::trim).filter(|s| !s.is_empty()).collect();
        if let Some(missing) = wanted.iter().find(|id| !articles.iter().any(|a| a.article_id == **id)) {
            return Err(Error::validation(format!("no article {missing} in {}", articles_dir.display())));
        }
        articles.retain(|a| wanted.contains(&a.article_id.as_str()));
    }
    let out = ctx.out_dir()?;
    let (providers, provider_config) = ctx.providers()?;
    let docs = articles
        .iter()
        .map(|a| explain_document(a, &model, &cm, &providers, args.topk, ctx.exec))
        .collect::<Result<Vec<_>>>()?;
    let name = format!("report.{}", args.format.extension());
    let outputs = vec![write(out, &name, render_report(&docs, args.format)?)?];
    let mut m = Manifest::new(
        "explain",
        model.seed,
        json!({
            "model": args.model,
            "covariance": args.covariance,
            "articles": articles_dir,
            "ids": args.ids,
            "format": args.format.extension(),
            "topk": args.topk,
            "providers": provider_config,
        }),
    );
    m.input(&args.model)?;
    m.input(&args.covariance)?;
    m.input(articles_dir)?;
    m.write(out, &outputs)
}

// serve-providers

/// Answers protocol requests on stdin/stdout with the configured backends.
pub fn serve_providers(ctx: &Context) -> Result<()> {
    let providers = Providers::from_config(&ctx.config.providers)?;
    let stdin = io::stdin();
    serve_lines(&providers, BufReader::new(stdin.lock()), io::stdout().lock())
        .map_err(|e| Error::io("<stdio>", e))
}
