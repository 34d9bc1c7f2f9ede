//! Constituent labels and the rule-based reference chunker.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::{ProviderResult, SyntaxAnalyzer, SyntaxProfile};
use crate::text::{tokenize, TokenKind};

macro_rules! syntax_labels {
    ($($variant:ident => $name:literal),* $(,)?) => {
        /// Clause- and phrase-level constituent labels, plus `Unknown` for
        /// anything that maps to none of them. Declaration order is the
        /// serialization order.
        #[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
        pub enum SyntaxLabel {
            $($variant),*
        }

        impl SyntaxLabel {
            pub const ALL: [SyntaxLabel; 27] = [$(SyntaxLabel::$variant),*];

            pub fn as_str(self) -> &'static str {
                match self {
                    $(SyntaxLabel::$variant => $name),*
                }
            }
        }
    };
}

syntax_labels! {
    // clause level
    S => "S", Sbar => "SBAR", Sbarq => "SBARQ", Sinv => "SINV", Sq => "SQ",
    // phrase level
    Adjp => "ADJP", Advp => "ADVP", Conjp => "CONJP", Frag => "FRAG", Intj => "INTJ",
    Lst => "LST", Nac => "NAC", Np => "NP", Nx => "NX", Pp => "PP", Prn => "PRN",
    Prt => "PRT", Qp => "QP", Rrc => "RRC", Ucp => "UCP", Vp => "VP", Whadjp => "WHADJP",
    Whadvp => "WHADVP", Whnp => "WHNP", Whpp => "WHPP", X => "X",
    Unknown => "unknown",
}

impl SyntaxLabel {
    pub fn is_clause(self) -> bool {
        matches!(self, SyntaxLabel::S | SyntaxLabel::Sbar | SyntaxLabel::Sbarq | SyntaxLabel::Sinv | SyntaxLabel::Sq)
    }
}

impl fmt::Display for SyntaxLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SyntaxLabel {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        SyntaxLabel::ALL
            .iter()
            .copied()
            .find(|l| l.as_str() == s)
            .ok_or_else(|| format!("unknown syntax label {s:?}"))
    }
}

impl Serialize for SyntaxLabel {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(self.as_str())
    }
}

impl<'de> Deserialize<'de> for SyntaxLabel {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        String::deserialize(d)?.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Tag {
    Det,
    Pron,
    Prep,
    Cc,
    Subord,
    WhNoun,
    WhAdv,
    Aux,
    Neg,
    Intj,
    Adv,
    Adj,
    Verb,
    Num,
    Noun,
    Punct,
}

const DETERMINERS: &[&str] = &[
    "the", "a", "an", "this", "these", "those", "each", "every", "some", "any", "no", "all",
    "both", "either", "neither", "another", "such", "my", "your", "his", "her", "its", "our",
    "their", "many", "much", "few", "several", "most", "more", "less",
];
const PRONOUNS: &[&str] = &[
    "i", "you", "he", "she", "it", "we", "they", "me", "him", "us", "them", "myself",
    "yourself", "himself", "herself", "itself", "ourselves", "themselves", "mine", "yours",
    "ours", "theirs", "everyone", "everybody", "someone", "somebody", "nobody", "nothing",
    "everything", "something", "anything", "anyone", "one",
];
const PREPOSITIONS: &[&str] = &[
    "of", "in", "on", "at", "by", "for", "with", "from", "to", "into", "onto", "over", "under",
    "about", "against", "between", "through", "during", "before", "after", "above", "below",
    "without", "within", "among", "across", "toward", "towards", "upon", "than", "like", "via",
    "despite", "behind", "beyond", "along", "around", "near", "per", "amid",
];
const COORDINATORS: &[&str] = &["and", "or", "but", "nor", "yet"];
const SUBORDINATORS: &[&str] = &[
    "because", "although", "though", "while", "if", "unless", "since", "whether", "that",
    "whereas", "until", "once",
];
const WH_NOUNS: &[&str] = &["who", "whom", "whose", "what", "which"];
const WH_ADVERBS: &[&str] = &["where", "when", "why", "how"];
const AUXILIARIES: &[&str] = &[
    "am", "is", "are", "was", "were", "be", "been", "being", "do", "does", "did", "have", "has",
    "had", "will", "would", "shall", "should", "can", "could", "may", "might", "must", "isn't",
    "aren't", "wasn't", "weren't", "don't", "doesn't", "didn't", "won't", "wouldn't", "can't",
    "couldn't", "shouldn't", "haven't", "hasn't", "hadn't",
];
const NEGATIONS: &[&str] = &["not", "never"];
const INTERJECTIONS: &[&str] = &[
    "oh", "wow", "hey", "alas", "ah", "ouch", "hooray", "yes", "yeah", "ugh", "bravo", "oops",
];
const ADVERBS: &[&str] = &[
    "very", "really", "quite", "too", "also", "just", "only", "even", "still", "already",
    "always", "often", "now", "then", "here", "there", "soon", "again", "almost", "perhaps",
    "maybe", "indeed", "however", "therefore", "thus", "rather", "so", "ever", "once", "yet",
    "nearly", "about",
];
const ADJECTIVES: &[&str] = &[
    "good", "bad", "new", "old", "great", "big", "small", "large", "high", "low", "long",
    "young", "important", "real", "true", "false", "best", "better", "worse", "worst", "free",
    "full", "sure", "clear", "whole", "major", "own", "evil", "corrupt", "sick", "brave",
    "fake", "strong", "weak", "rich", "poor", "safe", "proud", "wrong", "right", "last",
    "first", "next", "other", "same", "different", "certain", "early", "late", "hard", "easy",
    "huge", "tiny", "dead", "vile", "crazy", "stupid", "nice", "happy", "sad", "angry",
    "afraid", "open", "local", "national", "federal", "foreign", "recent", "entire",
];
const VERBS: &[&str] = &[
    "say", "said", "says", "tell", "told", "tells", "make", "made", "makes", "go", "went",
    "gone", "goes", "come", "came", "comes", "take", "took", "taken", "takes", "give", "gave",
    "given", "gives", "know", "knew", "known", "knows", "think", "thought", "thinks", "see",
    "saw", "seen", "sees", "want", "wants", "get", "got", "gets", "find", "found", "finds",
    "sit", "sat", "sits", "run", "ran", "runs", "become", "became", "becomes", "leave", "left",
    "leaves", "feel", "felt", "feels", "put", "puts", "bring", "brought", "brings", "begin",
    "began", "begun", "keep", "kept", "keeps", "hold", "held", "holds", "write", "wrote",
    "written", "stand", "stood", "stands", "hear", "heard", "hears", "let", "lets", "mean",
    "meant", "means", "meet", "met", "pay", "paid", "pays", "lose", "lost", "loses", "win",
    "won", "wins", "buy", "bought", "sell", "sold", "send", "sent", "build", "built", "fall",
    "fell", "fallen", "speak", "spoke", "spoken", "lead", "led", "leads", "show", "shows",
    "shown", "seem", "seems", "call", "calls", "try", "tries", "ask", "asks", "need", "needs",
    "use", "uses", "work", "works", "claim", "claims", "deny", "denies", "destroy", "destroys",
    "attack", "attacks", "support", "supports", "believe", "believes", "love", "loves", "hate",
    "hates", "fight", "fought", "fights", "kill", "kills", "help", "helps", "stop", "stops",
    "look", "looks", "happen", "happens", "protect", "protects", "warn", "warns", "report",
    "reports", "agree", "agrees", "vote", "votes", "lie", "lied", "lies", "ruin", "ruins",
    "threaten", "threatens", "rise", "rose", "risen", "grow", "grew", "grown",
];
const NUMBER_WORDS: &[&str] = &[
    "two", "three", "four", "five", "six", "seven", "eight", "nine", "ten", "hundred",
    "thousand", "million", "billion", "dozens", "hundreds", "thousands", "millions",
];
const QUANTIFIERS: &[&str] = &["about", "around", "nearly", "almost", "over", "roughly", "approximately", "$"];
const PARTICLES: &[&str] = &["up", "out", "off", "down", "away", "back"];
const MULTIWORD_CONJUNCTIONS: &[&[&str]] = &[
    &["as", "well", "as"],
    &["rather", "than"],
    &["not", "only"],
    &["but", "also"],
    &["instead", "of"],
];

fn base_tag(lower: &str, kind: TokenKind) -> Tag {
    let in_list = |list: &[&str]| list.contains(&lower);
    match kind {
        TokenKind::Number => return Tag::Num,
        TokenKind::Punct => return Tag::Punct,
        TokenKind::Word => {}
    }
    if in_list(INTERJECTIONS) {
        Tag::Intj
    } else if in_list(WH_NOUNS) {
        Tag::WhNoun
    } else if in_list(WH_ADVERBS) {
        Tag::WhAdv
    } else if in_list(AUXILIARIES) {
        Tag::Aux
    } else if in_list(NEGATIONS) || lower.ends_with("n't") {
        Tag::Neg
    } else if in_list(DETERMINERS) {
        Tag::Det
    } else if in_list(PRONOUNS) {
        Tag::Pron
    } else if in_list(SUBORDINATORS) {
        Tag::Subord
    } else if in_list(COORDINATORS) {
        Tag::Cc
    } else if in_list(PREPOSITIONS) {
        Tag::Prep
    } else if in_list(NUMBER_WORDS) {
        Tag::Num
    } else if in_list(VERBS) {
        Tag::Verb
    } else if in_list(ADVERBS) || (lower.len() > 4 && lower.ends_with("ly")) {
        Tag::Adv
    } else if in_list(ADJECTIVES) || has_adjective_suffix(lower) {
        Tag::Adj
    } else if (lower.len() > 4 && lower.ends_with("ed")) || (lower.len() > 5 && lower.ends_with("ing")) {
        Tag::Verb
    } else {
        Tag::Noun
    }
}

fn has_adjective_suffix(w: &str) -> bool {
    const SUFFIXES: [&str; 9] = ["ous", "ful", "ive", "able", "ible", "less", "ish", "ical", "ic"];
    (w.len() > 5 && SUFFIXES.iter().any(|s| w.ends_with(s))) || (w.len() > 6 && w.ends_with("al"))
}

/// Rule-based chunker. Tokens get a coarse part of speech from closed-class
/// word lists and suffixes; maximal runs are then grouped into NP, VP, PP,
/// ADJP, ADVP, QP, PRT, INTJ, PRN, CONJP and WH phrases. Clause labels come
/// from sentence shape: SQ for auxiliary-initial questions, SBARQ+SQ for
/// wh-questions, SBAR+S per subordinate or relative clause, SINV for
/// `..., said the ...` quotations, S for a declarative root with a verb, FRAG
/// for verbless input, LST for list markers. Coordinators and leftovers count
/// as `unknown`, and a non-empty sentence always has at least one count.
#[derive(Debug, Clone, Copy, Default)]
pub struct ChunkSyntax;

impl SyntaxAnalyzer for ChunkSyntax {
    fn syntax(&self, sentence: &str) -> ProviderResult<SyntaxProfile> {
        Ok(chunk(sentence))
    }
}

pub(crate) fn chunk(sentence: &str) -> SyntaxProfile {
    use SyntaxLabel as L;
    let mut profile = SyntaxProfile::default();
    let tokens = tokenize(sentence);
    if tokens.is_empty() {
        return profile;
    }
    let lower: Vec<String> = tokens.iter().map(|t| t.lower()).collect();
    let mut tags: Vec<Tag> = tokens
        .iter()
        .zip(&lower)
        .map(|(t, l)| base_tag(l, t.kind))
        .collect();

    // Context fixes: "to" before a verb is infinitival, third-person verbs after pronouns,
    // "-ing"/"-ed" forms after determiners are nominal.
    for i in 0..tags.len() {
        let prev = i.checked_sub(1).map(|p| tags[p]);
        match tags[i] {
            Tag::Noun if prev == Some(Tag::Pron) && lower[i].ends_with('s') && lower[i].len() > 2 => {
                tags[i] = Tag::Verb
            }
            Tag::Verb if matches!(prev, Some(Tag::Det | Tag::Adj)) => tags[i] = Tag::Noun,
            _ => {}
        }
    }

    let words: Vec<usize> = (0..tags.len()).filter(|&i| tags[i] != Tag::Punct).collect();
    let is_question = tokens.last().is_some_and(|t| t.text == "?");
    let first_word = words.first().map(|&i| tags[i]);

    if let Some(&first) = words.first() {
        let marker = tokens[first].kind == TokenKind::Number
            && tokens.get(first + 1).is_some_and(|t| t.text == "." || t.text == ")");
        let bullet = tokens[0].kind == TokenKind::Punct && matches!(tokens[0].text, "-" | "•" | "*");
        if marker || bullet {
            profile.add(L::Lst, 1);
        }
    }

    let mut has_vp = false;
    let mut i = 0;
    while i < tags.len() {
        if let Some(len) = multiword_conjunction(&lower[i..]) {
            profile.add(L::Conjp, 1);
            i += len;
            continue;
        }
        let tag = tags[i];
        let next = tags.get(i + 1).copied();
        match tag {
            Tag::Punct => {
                if tokens[i].text == "(" {
                    if tokens[i + 1..].iter().any(|t| t.text == ")") {
                        profile.add(L::Prn, 1);
                    }
                } else if (tokens[i].text == "," || is_closing_quote(tokens[i].text))
                    && matches!(lower.get(i + 1).map(String::as_str), Some("said" | "says"))
                    && matches!(tags.get(i + 2), Some(Tag::Det | Tag::Noun | Tag::Pron))
                {
                    profile.add(L::Sinv, 1);
                }
                i += 1;
            }
            Tag::Intj => {
                profile.add(L::Intj, 1);
                i += 1;
            }
            Tag::Prep if matches!(next, Some(Tag::WhNoun)) => {
                profile.add(L::Whpp, 1);
                profile.add(L::Sbar, 1);
                profile.add(L::S, 1);
                i += 2;
            }
            Tag::WhNoun | Tag::WhAdv => {
                let initial = words.first() == Some(&i);
                if tag == Tag::WhAdv && lower[i] == "how" && matches!(next, Some(Tag::Adj | Tag::Adv)) {
                    profile.add(L::Whadjp, 1);
                    i += 2;
                } else {
                    profile.add(if tag == Tag::WhNoun { L::Whnp } else { L::Whadvp }, 1);
                    i += 1;
                }
                if !(initial && is_question) {
                    profile.add(L::Sbar, 1);
                    profile.add(L::S, 1);
                }
            }
            Tag::Subord => {
                profile.add(L::Sbar, 1);
                profile.add(L::S, 1);
                i += 1;
            }
            Tag::Cc => {
                profile.add(L::Unknown, 1);
                i += 1;
            }
            Tag::Prep if lower[i] == "to" && matches!(next, Some(Tag::Verb | Tag::Aux)) => {
                i += 1;
            }
            Tag::Prep => {
                profile.add(L::Pp, 1);
                i += 1;
            }
            Tag::Aux | Tag::Verb | Tag::Neg => {
                let mut j = i;
                let mut saw_verbal = false;
                while j < tags.len() {
                    match tags[j] {
                        Tag::Aux | Tag::Verb => saw_verbal = true,
                        Tag::Neg => {}
                        Tag::Adv if tags.get(j + 1).is_some_and(|t| matches!(t, Tag::Verb | Tag::Aux)) => {}
                        _ => break,
                    }
                    j += 1;
                }
                if saw_verbal {
                    profile.add(L::Vp, 1);
                    has_vp = true;
                } else {
                    profile.add(L::Advp, 1);
                }
                if tags[j - 1] == Tag::Verb
                    && lower.get(j).is_some_and(|w| PARTICLES.contains(&w.as_str()))
                    && !tags.get(j + 1).is_some_and(|t| matches!(t, Tag::Det | Tag::Noun | Tag::Pron))
                {
                    profile.add(L::Prt, 1);
                    j += 1;
                }
                i = j;
            }
            Tag::Adv => {
                let mut j = i;
                while j < tags.len() && tags[j] == Tag::Adv {
                    j += 1;
                }
                if matches!(tags.get(j), Some(Tag::Adj)) && !matches!(tags.get(j + 1), Some(Tag::Noun | Tag::Num)) {
                    while j < tags.len() && tags[j] == Tag::Adj {
                        j += 1;
                    }
                    profile.add(L::Adjp, 1);
                } else if !matches!(tags.get(j), Some(Tag::Det | Tag::Adj | Tag::Noun | Tag::Num)) {
                    profile.add(L::Advp, 1);
                }
                i = j;
            }
            Tag::Det | Tag::Pron | Tag::Adj | Tag::Num | Tag::Noun => {
                let mut j = i;
                let mut nominal = false;
                let mut numeric = false;
                while j < tags.len() {
                    match tags[j] {
                        Tag::Det | Tag::Adj => {}
                        Tag::Noun | Tag::Pron => nominal = true,
                        Tag::Num => {
                            nominal = true;
                            numeric = true;
                        }
                        _ => break,
                    }
                    j += 1;
                    if tags[j - 1] == Tag::Pron {
                        break;
                    }
                }
                let all_adj = tags[i..j].iter().all(|&t| t == Tag::Adj);
                if all_adj {
                    profile.add(L::Adjp, 1);
                } else {
                    profile.add(L::Np, 1);
                    if !nominal && tags[i..j].contains(&Tag::Adj) {
                        profile.add(L::Adjp, 1);
                    }
                }
                let quantified = i > 0 && QUANTIFIERS.contains(&lower[i - 1].as_str());
                if numeric && (quantified || tags[i..j].iter().filter(|&&t| t == Tag::Num).count() > 1) {
                    profile.add(L::Qp, 1);
                }
                i = j;
            }
        }
    }

    match (is_question, first_word) {
        (true, Some(Tag::Aux)) => profile.add(L::Sq, 1),
        (true, Some(Tag::WhNoun | Tag::WhAdv)) => {
            profile.add(L::Sbarq, 1);
            profile.add(L::Sq, 1);
        }
        _ if has_vp => profile.add(L::S, 1),
        _ if !words.is_empty() => profile.add(L::Frag, 1),
        _ => {}
    }
    if profile.total() == 0 {
        profile.add(L::Unknown, 1);
    }
    profile
}

fn is_closing_quote(s: &str) -> bool {
    matches!(s, "\"" | "”" | "'" | "’")
}

fn multiword_conjunction(words: &[String]) -> Option<usize> {
    MULTIWORD_CONJUNCTIONS.iter().find_map(|pat| {
        (words.len() >= pat.len() && pat.iter().zip(words).all(|(p, w)| p == w)).then_some(pat.len())
    })
}
