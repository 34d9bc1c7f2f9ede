//! Bundled polarity lexicon: word -> valence on a [-4, 4] scale.

use std::collections::HashMap;
use std::sync::LazyLock;

pub(crate) const VALENCES: &[(&str, f64)] = &[
    // positive
    ("admire", 2.1), ("amazing", 2.8), ("awesome", 3.1), ("beautiful", 2.9), ("benefit", 2.0),
    ("best", 3.2), ("better", 1.9), ("brave", 2.4), ("brilliant", 2.8), ("calm", 1.3),
    ("celebrate", 2.7), ("charming", 2.6), ("cheer", 2.3), ("clean", 1.7), ("comfort", 1.5),
    ("confident", 2.2), ("courage", 2.2), ("courageous", 2.4), ("delight", 2.9), ("dignity", 1.8),
    ("eager", 1.5), ("effective", 2.1), ("enjoy", 2.2), ("excellent", 2.7), ("exciting", 2.2),
    ("fair", 1.3), ("faith", 1.8), ("fantastic", 2.6), ("favorite", 2.0), ("free", 2.3),
    ("freedom", 3.2), ("friend", 2.2), ("friendly", 2.2), ("generous", 2.3), ("glad", 2.0),
    ("glorious", 3.2), ("glory", 2.7), ("good", 1.9), ("great", 3.1), ("happy", 2.7),
    ("harmony", 1.7), ("heal", 1.4), ("healthy", 1.7), ("help", 1.7), ("hero", 2.6),
    ("heroes", 2.3), ("heroic", 2.6), ("honest", 2.3), ("honor", 2.2), ("hope", 1.9),
    ("hopeful", 1.6), ("incredible", 2.8), ("inspire", 2.2), ("joy", 2.8), ("justice", 2.4),
    ("kind", 2.4), ("love", 3.2), ("loved", 2.9), ("loyal", 2.1), ("lucky", 1.8),
    ("magnificent", 3.4), ("nice", 1.8), ("noble", 2.0), ("patriot", 2.0), ("patriotic", 2.0),
    ("peace", 2.5), ("peaceful", 2.2), ("perfect", 2.7), ("pleasant", 2.3), ("pride", 1.4),
    ("proud", 2.1), ("prosper", 2.1), ("prosperity", 2.4), ("protect", 1.6), ("pure", 1.9),
    ("respect", 2.1), ("safe", 1.9), ("safety", 1.8), ("save", 2.2), ("secure", 1.4),
    ("smart", 1.7), ("strong", 2.3), ("success", 2.7), ("successful", 2.8), ("super", 2.9),
    ("support", 1.7), ("terrific", 3.0), ("thank", 1.5), ("thanks", 1.9), ("triumph", 2.9),
    ("true", 1.8), ("trust", 2.3), ("truth", 1.3), ("united", 1.8), ("valuable", 2.1),
    ("victory", 2.8), ("wealth", 2.2), ("welcome", 2.0), ("win", 2.8), ("winner", 2.8),
    ("wins", 2.7), ("wise", 2.1), ("wonderful", 2.7), ("worthy", 1.9),
    // negative
    ("abuse", -3.2), ("afraid", -2.2), ("alarming", -2.1), ("angry", -2.3), ("anger", -2.7),
    ("annoying", -1.7), ("arrogant", -2.2), ("attack", -2.1), ("attacks", -2.1), ("awful", -2.0),
    ("bad", -2.5), ("betray", -3.2), ("betrayal", -3.0), ("bitter", -1.8), ("blame", -1.4),
    ("bloody", -1.9), ("brutal", -3.1), ("catastrophe", -3.4), ("chaos", -2.7), ("cheat", -2.3),
    ("collapse", -2.2), ("corrupt", -3.0), ("corruption", -2.8), ("coward", -2.4),
    ("cowardly", -2.5), ("crazy", -1.4), ("crime", -2.5), ("criminal", -2.4), ("criminals", -2.4),
    ("crisis", -3.1), ("cruel", -2.8), ("damage", -2.2), ("danger", -2.4), ("dangerous", -2.1),
    ("dead", -3.3), ("death", -2.9), ("deceit", -2.0), ("deceive", -1.7), ("decline", -1.1),
    ("deny", -1.0), ("despicable", -3.2), ("destroy", -2.5), ("destroyed", -2.6),
    ("destruction", -2.7), ("die", -2.9), ("disaster", -3.1), ("disgrace", -2.2),
    ("disgraceful", -2.5), ("disgusting", -2.4), ("dishonest", -2.7), ("doom", -1.7),
    ("dread", -2.0), ("dumb", -2.3), ("enemy", -2.5), ("enemies", -2.2), ("evil", -3.4),
    ("fail", -2.5), ("failed", -2.3), ("failure", -2.3), ("fake", -2.1), ("false", -1.7),
    ("fear", -2.2), ("filthy", -2.6), ("fool", -1.9), ("fraud", -2.8), ("greed", -1.7),
    ("greedy", -1.3), ("guilty", -1.8), ("hate", -2.7), ("hatred", -3.2), ("hell", -3.6),
    ("horrible", -2.5), ("horrific", -3.4), ("hostile", -1.6), ("hurt", -2.4), ("idiot", -2.3),
    ("illegal", -2.6), ("incompetent", -2.1), ("insane", -1.7), ("kill", -3.7), ("killed", -3.5),
    ("killer", -3.3), ("liar", -3.1), ("liars", -2.4), ("lie", -1.6), ("lies", -1.8),
    ("lost", -1.3), ("mad", -2.2), ("massacre", -3.5), ("menace", -2.2), ("miserable", -2.2),
    ("murder", -3.7), ("nasty", -2.6), ("outrage", -2.3), ("outrageous", -2.0), ("pathetic", -2.4),
    ("poison", -2.5), ("poor", -2.1), ("problem", -1.7), ("radical", -1.0), ("rage", -2.6),
    ("rape", -3.7), ("ruin", -2.8), ("ruined", -2.4), ("sad", -2.1), ("scandal", -1.9),
    ("scary", -2.2), ("shame", -2.1), ("shameful", -2.2), ("sick", -2.3), ("sinister", -2.2),
    ("slaughter", -3.1), ("stupid", -2.4), ("suffer", -2.5), ("terrible", -2.1),
    ("terror", -3.0), ("terrorist", -3.7), ("terrorists", -3.1), ("threat", -2.4),
    ("threaten", -2.5), ("tragedy", -3.4), ("tragic", -3.1), ("traitor", -3.0),
    ("traitors", -2.9), ("treason", -2.5), ("ugly", -2.3), ("victim", -1.9), ("violence", -3.1),
    ("violent", -2.9), ("vicious", -3.2), ("vile", -3.1), ("war", -2.9), ("weak", -1.9),
    ("wicked", -2.4), ("worse", -2.1), ("worst", -3.1), ("worthless", -2.4), ("wrong", -2.1),
];

pub(crate) const BOOSTERS: &[&str] = &[
    "absolutely", "completely", "deeply", "enormously", "entirely", "especially", "extremely",
    "hugely", "incredibly", "most", "really", "so", "totally", "truly", "utterly", "very",
];

pub(crate) const DAMPENERS: &[&str] = &[
    "barely", "hardly", "marginally", "partly", "scarcely", "slightly", "somewhat",
];

pub(crate) const NEGATORS: &[&str] = &[
    "not", "no", "never", "none", "nobody", "nothing", "neither", "nor", "without", "cannot",
];

static INDEX: LazyLock<HashMap<&'static str, f64>> = LazyLock::new(|| VALENCES.iter().copied().collect());

pub(crate) fn valence(word: &str) -> Option<f64> {
    INDEX.get(word).copied()
}

pub(crate) fn is_negator(word: &str) -> bool {
    NEGATORS.contains(&word) || word.ends_with("n't")
}
