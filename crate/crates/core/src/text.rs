//! Shared tokenization and hashing helpers.

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum TokenKind {
    Word,
    Number,
    Punct,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) struct Token<'a> {
    pub text: &'a str,
    pub kind: TokenKind,
}

impl Token<'_> {
    pub fn lower(&self) -> String {
        self.text.to_lowercase()
    }
}

/// Splits text into words (letters with inner apostrophes or hyphens), numbers
/// (digits with inner `.`/`,`) and single punctuation characters.
pub(crate) fn tokenize(text: &str) -> Vec<Token<'_>> {
    let chars: Vec<(usize, char)> = text.char_indices().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let (start, c) = chars[i];
        if c.is_whitespace() {
            i += 1;
            continue;
        }
        let (kind, mut j) = if c.is_alphabetic() {
            (TokenKind::Word, i + 1)
        } else if c.is_ascii_digit() {
            (TokenKind::Number, i + 1)
        } else {
            let end = chars.get(i + 1).map_or(text.len(), |&(b, _)| b);
            out.push(Token {
                text: &text[start..end],
                kind: TokenKind::Punct,
            });
            i += 1;
            continue;
        };
        while j < chars.len() {
            let cj = chars[j].1;
            let next_ok = |pred: fn(char) -> bool| chars.get(j + 1).is_some_and(|&(_, n)| pred(n));
            let continues = match kind {
                TokenKind::Word => {
                    cj.is_alphanumeric()
                        || (matches!(cj, '\'' | '’' | '-') && next_ok(char::is_alphabetic))
                }
                _ => {
                    cj.is_ascii_digit()
                        || (matches!(cj, '.' | ',') && next_ok(|n| n.is_ascii_digit()))
                }
            };
            if !continues {
                break;
            }
            j += 1;
        }
        let end = chars.get(j).map_or(text.len(), |&(b, _)| b);
        out.push(Token {
            text: &text[start..end],
            kind,
        });
        i = j;
    }
    out
}

/// Lowercased word tokens only.
pub(crate) fn words(text: &str) -> Vec<String> {
    tokenize(text)
        .into_iter()
        .filter(|t| t.kind == TokenKind::Word)
        .map(|t| t.lower())
        .collect()
}

const FNV_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
const FNV_PRIME: u64 = 0x0000_0100_0000_01b3;

/// 64-bit FNV-1a. Stable across platforms and releases, unlike `DefaultHasher`.
pub(crate) fn fnv1a(bytes: &[u8]) -> u64 {
    bytes.iter().fold(FNV_OFFSET, |h, &b| (h ^ u64::from(b)).wrapping_mul(FNV_PRIME))
}

/// Derives an independent RNG seed from a base seed and a key.
pub(crate) fn mix_seed(seed: u64, key: &str) -> u64 {
    let mut buf = seed.to_le_bytes().to_vec();
    buf.extend_from_slice(key.as_bytes());
    fnv1a(&buf)
}
