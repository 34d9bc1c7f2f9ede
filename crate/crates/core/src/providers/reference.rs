//! Deterministic offline backends for encoding, stance and document scoring.

use std::collections::BTreeSet;

use super::sentiment::score as sentiment_score;
use super::{
    DocScore, DocumentScorer, ProviderResult, SentenceEncoder, SentenceEncoding, StanceClassifier,
    StanceDistribution,
};
use crate::text::{fnv1a, words};

pub const DEFAULT_ENCODING_DIM: usize = 64;

/// Feature-hashed character trigrams of each lowercased word (padded with
/// spaces), L2-normalized. Empty input encodes to the zero vector.
#[derive(Debug, Clone, Copy)]
pub struct HashingEncoder {
    dim: usize,
}

impl HashingEncoder {
    pub fn new(dim: usize) -> Self {
        assert!(dim > 0, "encoding dimension must be positive");
        HashingEncoder { dim }
    }
}

impl Default for HashingEncoder {
    fn default() -> Self {
        Self::new(DEFAULT_ENCODING_DIM)
    }
}

impl SentenceEncoder for HashingEncoder {
    fn dim(&self) -> usize {
        self.dim
    }

    fn encode(&self, text: &str) -> ProviderResult<SentenceEncoding> {
        let mut v = vec![0.0; self.dim];
        for w in words(text) {
            let padded: Vec<char> = format!(" {w} ").chars().collect();
            for gram in padded.windows(3) {
                let s: String = gram.iter().collect();
                v[(fnv1a(s.as_bytes()) % self.dim as u64) as usize] += 1.0;
            }
        }
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 0.0 {
            v.iter_mut().for_each(|x| *x /= norm);
        }
        Ok(SentenceEncoding(v))
    }
}

const STOPWORDS: &[&str] = &[
    "a", "an", "the", "and", "or", "but", "of", "in", "on", "at", "to", "for", "with", "by",
    "from", "is", "are", "was", "were", "be", "been", "it", "its", "this", "that", "these",
    "those", "as", "he", "she", "they", "we", "i", "you", "his", "her", "their", "our", "has",
    "have", "had", "will", "would", "s",
];
const REFUTATION_CUES: &[&str] = &[
    "not", "no", "never", "false", "fake", "deny", "denies", "denied", "hoax", "untrue",
    "debunked", "wrong", "refute", "refuted", "lie", "lies",
];
const HEDGE_CUES: &[&str] = &[
    "reportedly", "allegedly", "said", "says", "according", "claim", "claims", "claimed",
    "suggest", "suggests", "may", "might", "could", "whether", "reports", "question",
];

/// Lexical-overlap stance heuristic.
///
/// With `j` the Jaccard overlap of the non-stopword vocabularies of sentence and
/// title, `related = min(1, 2j)` and `unrelated = 1 - related`. The related mass
/// is shared in proportion to the weights agree = 1, disagree = 0.6·d,
/// discuss = 0.25 + 0.6·h, where `d` is the absolute difference in refutation
/// cue counts between sentence and title (capped at 3) and `h` the excess of
/// hedging cues in the sentence over the title (capped at 3).
#[derive(Debug, Clone, Copy, Default)]
pub struct LexicalStance;

impl StanceClassifier for LexicalStance {
    fn stance(&self, sentence: &str, title: &str) -> ProviderResult<StanceDistribution> {
        let sw = words(sentence);
        let tw = words(title);
        let content = |ws: &[String]| -> BTreeSet<String> {
            ws.iter().filter(|w| !STOPWORDS.contains(&w.as_str())).cloned().collect()
        };
        let (s, t) = (content(&sw), content(&tw));
        let jaccard = if s.is_empty() || t.is_empty() {
            0.0
        } else {
            s.intersection(&t).count() as f64 / s.union(&t).count() as f64
        };
        let related = (2.0 * jaccard).min(1.0);
        let count = |ws: &[String], cues: &[&str]| ws.iter().filter(|w| cues.contains(&w.as_str())).count() as f64;
        let refute = (count(&sw, REFUTATION_CUES) - count(&tw, REFUTATION_CUES)).abs().min(3.0);
        let hedge = (count(&sw, HEDGE_CUES) - count(&tw, HEDGE_CUES)).clamp(0.0, 3.0);
        let (wa, wd, wc) = (1.0, 0.6 * refute, 0.25 + 0.6 * hedge);
        let total = wa + wd + wc;
        Ok(StanceDistribution {
            unrelated: 1.0 - related,
            agree: related * wa / total,
            disagree: related * wd / total,
            discuss: related * wc / total,
        })
    }
}

/// Logistic squash of the mean absolute compound sentiment over the article's
/// sentences: `1 / (1 + exp(-gain · mean|compound|))`.
#[derive(Debug, Clone, Copy)]
pub struct SentimentDocScorer {
    pub gain: f64,
}

impl Default for SentimentDocScorer {
    fn default() -> Self {
        SentimentDocScorer { gain: 1.0 }
    }
}

impl DocumentScorer for SentimentDocScorer {
    fn doc_score(&self, sentences: &[&str]) -> ProviderResult<DocScore> {
        let mean = if sentences.is_empty() {
            0.0
        } else {
            sentences.iter().map(|s| sentiment_score(s).compound.abs()).sum::<f64>() / sentences.len() as f64
        };
        DocScore::new(1.0 / (1.0 + (-self.gain * mean).exp()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::providers::StanceClass;

    fn cosine(a: &[f64], b: &[f64]) -> f64 {
        let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
        dot / (a.iter().map(|x| x * x).sum::<f64>().sqrt() * b.iter().map(|x| x * x).sum::<f64>().sqrt())
    }

    #[test]
    fn encoder_is_deterministic_and_normalized() {
        let e = HashingEncoder::default();
        let a = e.encode("the cat").unwrap();
        assert_eq!(a, e.encode("the cat").unwrap());
        assert_eq!(a.dim(), 64);
        assert!((cosine(&a.0, &e.encode("the cat").unwrap().0) - 1.0).abs() < 1e-12);
        assert!((a.0.iter().map(|x| x * x).sum::<f64>() - 1.0).abs() < 1e-12);
        assert_eq!(e.encode("").unwrap().0, vec![0.0; 64]);
    }

    #[test]
    fn stance_identical_text_agrees() {
        let title = "Senators deny the new tax plan will pass";
        let d = LexicalStance.stance(title, title).unwrap();
        d.validate().unwrap();
        assert_eq!(d.argmax(), StanceClass::Agree);
        assert_eq!(d.unrelated, 0.0);
        assert!((d.agree - 0.8).abs() < 1e-12);
        assert!((d.discuss - 0.2).abs() < 1e-12);
    }

    #[test]
    fn stance_unrelated_and_refuting() {
        let title = "Senators approve the new tax plan";
        let far = LexicalStance.stance("Rain is expected tomorrow.", title).unwrap();
        assert_eq!(far.unrelated, 1.0);
        let refute = LexicalStance.stance("Senators did not approve the tax plan, a hoax.", title).unwrap();
        refute.validate().unwrap();
        assert!(refute.disagree > 0.0);
        let empty = LexicalStance.stance("Anything", "").unwrap();
        assert_eq!(empty.argmax(), StanceClass::Unrelated);
    }

    #[test]
    fn doc_score_of_neutral_text_is_half() {
        let s = SentimentDocScorer::default();
        assert_eq!(s.doc_score(&["", ""]).unwrap().0, 0.5);
        assert_eq!(s.doc_score(&[]).unwrap().0, 0.5);
        let hot = s.doc_score(&["Evil traitors destroy everything!"]).unwrap().0;
        assert!(hot > 0.5 && hot < 1.0);
    }
}
