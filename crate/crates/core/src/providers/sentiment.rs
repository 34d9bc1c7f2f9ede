//! Lexicon-based reference sentiment analyzer.

use super::lexicon::{is_negator, valence, BOOSTERS, DAMPENERS};
use super::{ProviderResult, SentimentAnalyzer, SentimentScores};
use crate::text::{tokenize, TokenKind};

const BOOST: f64 = 0.293;
const CAPS_BOOST: f64 = 0.733;
const NEGATION_SCALE: f64 = -0.74;
const EXCLAMATION_BOOST: f64 = 0.292;
const NORMALIZATION_ALPHA: f64 = 15.0;

/// Polarity-lexicon sentiment with rule-based modifiers.
///
/// Each word takes its lexicon valence. A preceding booster/dampener shifts it
/// by ±0.293 away from/towards zero, an all-caps word in mixed-case text adds
/// 0.733, and a negator within the three preceding words scales it by -0.74.
/// Words before a contrastive "but" are halved and words after it scaled by 1.5.
/// Up to four `!` add 0.292 each in the direction of the sum `s`.
///
/// `compound = s / sqrt(s² + 15)`. For the proportions, a positive valence `v`
/// contributes `v + 1` to the positive mass, a negative one `|v - 1|` to the
/// negative mass, and every other word 1 to the neutral mass; the three are
/// normalized to sum to one. Text without words is neutral `(0, 1, 0, 0)`.
#[derive(Debug, Clone, Copy, Default)]
pub struct LexiconSentiment;

impl SentimentAnalyzer for LexiconSentiment {
    fn sentiment(&self, sentence: &str) -> ProviderResult<SentimentScores> {
        Ok(score(sentence))
    }
}

pub(crate) fn score(text: &str) -> SentimentScores {
    let tokens = tokenize(text);
    let words: Vec<&str> = tokens.iter().filter(|t| t.kind != TokenKind::Punct).map(|t| t.text).collect();
    if words.is_empty() {
        return SentimentScores::NEUTRAL;
    }
    let lower: Vec<String> = words.iter().map(|w| w.to_lowercase()).collect();
    let mixed_case = words.iter().any(|w| w.chars().any(char::is_lowercase));
    let but_at = lower.iter().position(|w| w == "but");

    let mut valences = vec![0.0; words.len()];
    for (i, w) in lower.iter().enumerate() {
        let Some(mut v) = valence(w) else { continue };
        let sign = v.signum();
        if i > 0 {
            if BOOSTERS.contains(&lower[i - 1].as_str()) {
                v += sign * BOOST;
            } else if DAMPENERS.contains(&lower[i - 1].as_str()) {
                v -= sign * BOOST;
            }
        }
        let is_caps = words[i].chars().count() > 1 && words[i].chars().all(|c| !c.is_lowercase());
        if mixed_case && is_caps {
            v += sign * CAPS_BOOST;
        }
        if lower[i.saturating_sub(3)..i].iter().any(|p| is_negator(p)) {
            v *= NEGATION_SCALE;
        }
        if let Some(b) = but_at {
            v *= match i.cmp(&b) {
                std::cmp::Ordering::Less => 0.5,
                std::cmp::Ordering::Greater => 1.5,
                std::cmp::Ordering::Equal => 1.0,
            };
        }
        valences[i] = v;
    }

    let mut sum: f64 = valences.iter().sum();
    if sum != 0.0 {
        let bangs = tokens.iter().filter(|t| t.text == "!").count().min(4);
        sum += sum.signum() * EXCLAMATION_BOOST * bangs as f64;
    }
    let compound = (sum / (sum * sum + NORMALIZATION_ALPHA).sqrt()).clamp(-1.0, 1.0);

    let (mut pos, mut neg, mut neu) = (0.0, 0.0, 0.0);
    for &v in &valences {
        if v > 0.0 {
            pos += v + 1.0;
        } else if v < 0.0 {
            neg += (v - 1.0).abs();
        } else {
            neu += 1.0;
        }
    }
    let total = pos + neg + neu;
    SentimentScores {
        positive: pos / total,
        neutral: neu / total,
        negative: neg / total,
        compound,
    }
}

#[cfg(test)]
mod tests {
    use super::super::lexicon::VALENCES;
    use super::*;

    #[test]
    fn lexicon_lookup() {
        for (w, v) in VALENCES {
            assert_eq!(valence(w), Some(*v), "{w}");
        }
        assert_eq!(valence("table"), None);
    }

    #[test]
    fn empty_is_neutral() {
        assert_eq!(score(""), SentimentScores::NEUTRAL);
        assert_eq!(score("?!"), SentimentScores::NEUTRAL);
    }

    #[test]
    fn polarity_signs() {
        assert!(score("glorious heroes love freedom").compound > 0.0);
        assert!(score("evil corrupt traitors").compound < 0.0);
        assert!(score("not good").compound < 0.0);
        let plain = score("a great day").compound;
        assert!(score("a very great day").compound > plain);
        assert!(score("a GREAT day").compound > plain);
        assert!(score("a great day!").compound > plain);
    }

    #[test]
    fn proportions_sum_to_one() {
        for s in ["The cat sat.", "Evil, evil, EVIL liars!", "good but terrible", "x"] {
            let r = score(s);
            r.validate().unwrap();
        }
    }
}
