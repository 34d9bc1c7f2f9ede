//! Interfaces to the external models consumed by feature extraction.
//!
//! Each model sits behind a narrow trait. The `reference` backends are small,
//! deterministic stand-ins that run offline; [`remote`] speaks a JSON-lines
//! protocol to an external process or HTTP endpoint.

mod lexicon;
pub mod reference;
pub mod remote;
pub mod sentiment;
pub mod syntax;

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::corpus::Article;
use crate::{Error, Result};

pub use reference::{HashingEncoder, LexicalStance, SentimentDocScorer};
pub use remote::{RemoteProvider, Transport};
pub use sentiment::LexiconSentiment;
pub use syntax::{ChunkSyntax, SyntaxLabel};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ProviderError {
    #[error("provider timed out after {0} ms")]
    Timeout(u64),
    #[error("provider unavailable: {0}")]
    Unavailable(String),
    #[error("protocol violation: {0}")]
    Protocol(String),
    #[error("provider reported error: {0}")]
    Remote(String),
}

impl ProviderError {
    /// Timeouts and connection failures may succeed on retry; protocol violations never do.
    pub fn is_retryable(&self) -> bool {
        matches!(self, ProviderError::Timeout(_) | ProviderError::Unavailable(_))
    }
}

pub type ProviderResult<T> = std::result::Result<T, ProviderError>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct SentenceEncoding(pub Vec<f64>);

impl SentenceEncoding {
    pub fn dim(&self) -> usize {
        self.0.len()
    }
}

/// Stance of a sentence towards the article title over the four base classes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StanceDistribution {
    pub unrelated: f64,
    pub agree: f64,
    pub disagree: f64,
    pub discuss: f64,
}

/// Base stance classes, in tie-break order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StanceClass {
    Unrelated,
    Agree,
    Disagree,
    Discuss,
}

impl StanceClass {
    pub fn as_str(self) -> &'static str {
        match self {
            StanceClass::Unrelated => "unrelated",
            StanceClass::Agree => "agree",
            StanceClass::Disagree => "disagree",
            StanceClass::Discuss => "discuss",
        }
    }
}

impl StanceDistribution {
    pub const TOLERANCE: f64 = 1e-9;

    pub fn new(unrelated: f64, agree: f64, disagree: f64, discuss: f64) -> ProviderResult<Self> {
        let d = StanceDistribution { unrelated, agree, disagree, discuss };
        d.validate()?;
        Ok(d)
    }

    pub fn validate(&self) -> ProviderResult<()> {
        let p = self.base();
        if p.iter().any(|x| !x.is_finite() || *x < 0.0) {
            return Err(ProviderError::Protocol(format!("invalid stance probabilities {p:?}")));
        }
        let sum: f64 = p.iter().sum();
        if (sum - 1.0).abs() > Self::TOLERANCE {
            return Err(ProviderError::Protocol(format!("stance probabilities sum to {sum}")));
        }
        Ok(())
    }

    /// `[unrelated, agree, disagree, discuss]`.
    pub fn base(&self) -> [f64; 4] {
        [self.unrelated, self.agree, self.disagree, self.discuss]
    }

    /// Union of agree, disagree and discuss.
    pub fn related(&self) -> f64 {
        self.agree + self.disagree + self.discuss
    }

    /// Most probable base class; ties resolve to the earlier of
    /// unrelated, agree, disagree, discuss.
    pub fn argmax(&self) -> StanceClass {
        const ORDER: [StanceClass; 4] =
            [StanceClass::Unrelated, StanceClass::Agree, StanceClass::Disagree, StanceClass::Discuss];
        let p = self.base();
        let mut best = 0;
        for i in 1..4 {
            if p[i] > p[best] {
                best = i;
            }
        }
        ORDER[best]
    }
}

/// Counts of constituent labels.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct SyntaxProfile(pub BTreeMap<SyntaxLabel, u32>);

impl SyntaxProfile {
    pub fn get(&self, label: SyntaxLabel) -> u32 {
        self.0.get(&label).copied().unwrap_or(0)
    }

    pub fn add(&mut self, label: SyntaxLabel, n: u32) {
        if n > 0 {
            *self.0.entry(label).or_default() += n;
        }
    }

    pub fn total(&self) -> u32 {
        self.0.values().sum()
    }

    /// Counts in the fixed label order.
    pub fn to_vec(&self) -> Vec<u32> {
        SyntaxLabel::ALL.iter().map(|&l| self.get(l)).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SentimentScores {
    pub positive: f64,
    pub neutral: f64,
    pub negative: f64,
    pub compound: f64,
}

impl SentimentScores {
    pub const NEUTRAL: SentimentScores =
        SentimentScores { positive: 0.0, neutral: 1.0, negative: 0.0, compound: 0.0 };

    pub fn validate(&self) -> ProviderResult<()> {
        let probs = [self.positive, self.neutral, self.negative];
        let in_unit = probs.iter().all(|p| p.is_finite() && (0.0..=1.0).contains(p));
        let sum: f64 = probs.iter().sum();
        if !in_unit || (sum - 1.0).abs() > 1e-6 || !(-1.0..=1.0).contains(&self.compound) {
            return Err(ProviderError::Protocol(format!("invalid sentiment scores {self:?}")));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DocScore(pub f64);

impl DocScore {
    pub fn new(score: f64) -> ProviderResult<Self> {
        if !(0.0..=1.0).contains(&score) {
            return Err(ProviderError::Protocol(format!("document score {score} outside [0, 1]")));
        }
        Ok(DocScore(score))
    }
}

pub trait SentenceEncoder: Send + Sync {
    fn dim(&self) -> usize;
    fn encode(&self, text: &str) -> ProviderResult<SentenceEncoding>;
}

pub trait StanceClassifier: Send + Sync {
    fn stance(&self, sentence: &str, title: &str) -> ProviderResult<StanceDistribution>;
}

pub trait SyntaxAnalyzer: Send + Sync {
    fn syntax(&self, sentence: &str) -> ProviderResult<SyntaxProfile>;
}

pub trait SentimentAnalyzer: Send + Sync {
    fn sentiment(&self, sentence: &str) -> ProviderResult<SentimentScores>;
}

/// Document-level propaganda score, broadcast to every sentence of the article.
pub trait DocumentScorer: Send + Sync {
    fn doc_score(&self, sentences: &[&str]) -> ProviderResult<DocScore>;

    fn score_article(&self, article: &Article) -> ProviderResult<DocScore> {
        let texts: Vec<&str> = article.sentences.iter().map(|s| s.text.as_str()).collect();
        self.doc_score(&texts)
    }
}

/// One of each provider.
#[derive(Clone)]
pub struct Providers {
    pub encoder: Arc<dyn SentenceEncoder>,
    pub stance: Arc<dyn StanceClassifier>,
    pub syntax: Arc<dyn SyntaxAnalyzer>,
    pub sentiment: Arc<dyn SentimentAnalyzer>,
    pub doc: Arc<dyn DocumentScorer>,
}

impl fmt::Debug for Providers {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Providers").field("encoder_dim", &self.encoder.dim()).finish_non_exhaustive()
    }
}

impl Providers {
    /// The offline reference backends.
    pub fn reference(encoding_dim: usize) -> Self {
        Providers {
            encoder: Arc::new(HashingEncoder::new(encoding_dim)),
            stance: Arc::new(LexicalStance),
            syntax: Arc::new(ChunkSyntax),
            sentiment: Arc::new(LexiconSentiment),
            doc: Arc::new(SentimentDocScorer::default()),
        }
    }

    /// Every operation served by one remote provider.
    pub fn remote(provider: RemoteProvider) -> Self {
        let p = Arc::new(provider);
        Providers {
            encoder: p.clone(),
            stance: p.clone(),
            syntax: p.clone(),
            sentiment: p.clone(),
            doc: p,
        }
    }

    pub fn from_config(config: &ProviderConfig) -> Result<Self> {
        match config.backend {
            Backend::Reference => Ok(Self::reference(config.encoding_dim)),
            Backend::Subprocess => {
                let command = config
                    .command
                    .as_deref()
                    .filter(|c| !c.is_empty())
                    .ok_or_else(|| Error::validation("subprocess provider needs a non-empty `command`"))?;
                let transport = remote::SubprocessTransport::spawn(command, config.timeout())?;
                Ok(Self::remote(RemoteProvider::new(Box::new(transport), config.encoding_dim)))
            }
            Backend::Http => {
                let url = config
                    .url
                    .as_deref()
                    .ok_or_else(|| Error::validation("http provider needs a `url`"))?;
                let transport = remote::HttpTransport::new(url, config.timeout());
                Ok(Self::remote(RemoteProvider::new(Box::new(transport), config.encoding_dim)))
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Backend {
    #[default]
    Reference,
    Subprocess,
    Http,
}

/// Provider configuration file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProviderConfig {
    pub backend: Backend,
    /// Program and arguments for the subprocess backend.
    pub command: Option<Vec<String>>,
    pub url: Option<String>,
    pub encoding_dim: usize,
    pub timeout_ms: u64,
}

impl Default for ProviderConfig {
    fn default() -> Self {
        ProviderConfig {
            backend: Backend::Reference,
            command: None,
            url: None,
            encoding_dim: reference::DEFAULT_ENCODING_DIM,
            timeout_ms: 30_000,
        }
    }
}

impl ProviderConfig {
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Ok(serde_json::from_str(&text)?)
    }

    /// Applies a `PROVIDER_URL`-style override: the URL wins and selects the HTTP backend.
    pub fn with_url_override(mut self, url: Option<String>) -> Self {
        if let Some(url) = url.filter(|u| !u.is_empty()) {
            self.backend = Backend::Http;
            self.url = Some(url);
        }
        self
    }

    pub fn timeout(&self) -> std::time::Duration {
        std::time::Duration::from_millis(self.timeout_ms)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn related_is_union_of_three() {
        let d = StanceDistribution::new(1.0, 0.0, 0.0, 0.0).unwrap();
        assert_eq!(d.related(), 0.0);
        let d = StanceDistribution::new(0.1, 0.5, 0.1, 0.3).unwrap();
        assert!((d.related() - 0.9).abs() < 1e-12);
        assert_eq!(d.argmax(), StanceClass::Agree);
        let u = StanceDistribution::new(0.25, 0.25, 0.25, 0.25).unwrap();
        assert_eq!(u.argmax(), StanceClass::Unrelated);
    }

    #[test]
    fn invalid_distributions_rejected() {
        assert!(StanceDistribution::new(0.5, 0.6, 0.0, 0.0).is_err());
        assert!(StanceDistribution::new(-0.1, 1.1, 0.0, 0.0).is_err());
        assert!(DocScore::new(1.5).is_err());
        let bad = SentimentScores { positive: 0.5, neutral: 0.6, negative: 0.0, compound: 0.0 };
        assert!(bad.validate().is_err());
        assert!(SentimentScores::NEUTRAL.validate().is_ok());
    }

    #[test]
    fn retryability() {
        assert!(ProviderError::Timeout(10).is_retryable());
        assert!(ProviderError::Unavailable("x".into()).is_retryable());
        assert!(!ProviderError::Protocol("x".into()).is_retryable());
    }

    #[test]
    fn config_url_override() {
        let c = ProviderConfig::default().with_url_override(Some("http://h:1/p".into()));
        assert_eq!(c.backend, Backend::Http);
        assert_eq!(c.url.as_deref(), Some("http://h:1/p"));
        let c = ProviderConfig::default().with_url_override(None);
        assert_eq!(c.backend, Backend::Reference);
        let parsed: ProviderConfig =
            serde_json::from_str(r#"{"backend":"subprocess","command":["x"],"encoding_dim":8}"#).unwrap();
        assert_eq!(parsed.encoding_dim, 8);
        assert!(serde_json::from_str::<ProviderConfig>(r#"{"bogus":1}"#).is_err());
    }
}
