//! Sentence segmentation, tokenization, and n-gram extraction.
//!
//! Everything here is deterministic and pure; all metric modules build on
//! these primitives so hypotheses and references are always tokenized the
//! same way.

use std::collections::HashMap;
use std::collections::HashSet;

use crate::error::{Error, Result};

/// A lowercased word or punctuation mark.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Token(String);

impl Token {
    /// Construct from already-lowercased text. Empty or whitespace-bearing
    /// input is a caller bug.
    pub fn new(text: impl Into<String>) -> Self {
        let text = text.into();
        debug_assert!(!text.is_empty());
        debug_assert!(!text.chars().any(char::is_whitespace));
        Token(text)
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl std::fmt::Display for Token {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

/// One sentence of a document: its position, raw span, and token sequence.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Sentence {
    pub index: usize,
    pub raw: String,
    pub tokens: Vec<Token>,
}

impl Sentence {
    pub fn from_raw(index: usize, raw: impl Into<String>) -> Self {
        let raw = raw.into();
        let tokens = tokenize(&raw);
        Sentence { index, raw, tokens }
    }
}

/// Abbreviations whose trailing period does not end a sentence.
///
/// Matching is case-insensitive on the whole whitespace-delimited word
/// ending at the period, so `U.S.` covers the final period of "U.S." but
/// not of "US.".
#[derive(Debug, Clone)]
pub struct AbbreviationList {
    entries: HashSet<String>,
}

pub const DEFAULT_ABBREVIATIONS: &str = include_str!("../data/abbreviations.txt");

impl Default for AbbreviationList {
    fn default() -> Self {
        Self::parse(DEFAULT_ABBREVIATIONS)
    }
}

impl AbbreviationList {
    /// Parse the one-per-line file format; `#` starts a comment.
    pub fn parse(contents: &str) -> Self {
        let entries = contents
            .lines()
            .map(|l| l.split('#').next().unwrap_or("").trim())
            .filter(|l| !l.is_empty())
            .map(|l| l.to_lowercase())
            .collect();
        AbbreviationList { entries }
    }

    pub fn load(path: &std::path::Path) -> Result<Self> {
        let contents = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Ok(Self::parse(&contents))
    }

    pub fn contains(&self, word: &str) -> bool {
        self.entries.contains(&word.to_lowercase())
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// Split raw text into sentences.
///
/// A boundary occurs after `.`, `!` or `?` (optionally followed by a closing
/// `"`) when the next character is whitespace, unless the word ending at a
/// `.` is a known abbreviation. Empty input yields an empty list.
pub fn segment_sentences(text: &str, abbreviations: &AbbreviationList) -> Vec<Sentence> {
    let chars: Vec<char> = text.chars().collect();
    let mut sentences = Vec::new();
    let mut start = 0usize;
    let mut i = 0usize;

    let push = |sentences: &mut Vec<Sentence>, start: usize, end: usize| {
        let raw: String = chars[start..end].iter().collect();
        let raw = raw.trim();
        if !raw.is_empty() {
            sentences.push(Sentence::from_raw(sentences.len(), raw));
        }
    };

    while i < chars.len() {
        let c = chars[i];
        if c == '.' || c == '!' || c == '?' {
            let mut end = i + 1;
            if end < chars.len() && chars[end] == '"' {
                end += 1;
            }
            let at_eot = end >= chars.len();
            let followed_by_ws = !at_eot && chars[end].is_whitespace();
            if followed_by_ws || at_eot {
                let abbrev = c == '.' && {
                    // the whitespace-delimited word ending at this period
                    let mut w_start = i;
                    while w_start > start && !chars[w_start - 1].is_whitespace() {
                        w_start -= 1;
                    }
                    let word: String = chars[w_start..=i].iter().collect();
                    abbreviations.contains(&word)
                };
                if !abbrev {
                    push(&mut sentences, start, end);
                    start = end;
                    i = end;
                    continue;
                }
            }
        }
        i += 1;
    }
    push(&mut sentences, start, chars.len());
    sentences
}

/// Segment with the default abbreviation list.
pub fn segment(text: &str) -> Vec<Sentence> {
    segment_sentences(text, &AbbreviationList::default())
}

/// Lowercase and split into word and punctuation tokens.
///
/// Splits on whitespace, then peels leading and trailing punctuation off
/// each chunk one character at a time. Internal punctuation (apostrophes,
/// hyphens, abbreviation periods) stays inside the word.
pub fn tokenize(s: &str) -> Vec<Token> {
    let mut tokens = Vec::new();
    for chunk in s.to_lowercase().split_whitespace() {
        let chars: Vec<char> = chunk.chars().collect();
        let mut lo = 0;
        let mut hi = chars.len();
        while lo < hi && !chars[lo].is_alphanumeric() {
            lo += 1;
        }
        while hi > lo && !chars[hi - 1].is_alphanumeric() {
            hi -= 1;
        }
        for &c in &chars[..lo] {
            tokens.push(Token::new(c.to_string()));
        }
        if lo < hi {
            tokens.push(Token::new(chars[lo..hi].iter().collect::<String>()));
        }
        for &c in &chars[hi..] {
            tokens.push(Token::new(c.to_string()));
        }
    }
    tokens
}

/// A multiset of contiguous n-token windows.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NGramMultiset {
    n: usize,
    counts: HashMap<Vec<Token>, usize>,
    total: usize,
}

impl NGramMultiset {
    pub fn order(&self) -> usize {
        self.n
    }

    /// Sum of multiplicities; equals `max(0, |tokens| - n + 1)`.
    pub fn total(&self) -> usize {
        self.total
    }

    pub fn count(&self, gram: &[Token]) -> usize {
        self.counts.get(gram).copied().unwrap_or(0)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&[Token], usize)> {
        self.counts.iter().map(|(k, &v)| (k.as_slice(), v))
    }

    /// Clipped overlap with another multiset of the same order.
    pub fn overlap(&self, other: &NGramMultiset) -> usize {
        debug_assert_eq!(self.n, other.n);
        self.counts
            .iter()
            .map(|(gram, &c)| c.min(other.count(gram)))
            .sum()
    }
}

/// Extract all contiguous n-grams with multiplicity. Rejects `n == 0`.
pub fn ngrams(tokens: &[Token], n: usize) -> Result<NGramMultiset> {
    if n == 0 {
        return Err(Error::ZeroNgramOrder);
    }
    let mut counts: HashMap<Vec<Token>, usize> = HashMap::new();
    let mut total = 0;
    if tokens.len() >= n {
        for window in tokens.windows(n) {
            *counts.entry(window.to_vec()).or_insert(0) += 1;
            total += 1;
        }
    }
    Ok(NGramMultiset { n, counts, total })
}

/// Convenience: tokenize each string of an iterator into one flat token list.
pub fn tokenize_joined<'a>(parts: impl IntoIterator<Item = &'a str>) -> Vec<Token> {
    let mut out = Vec::new();
    for p in parts {
        out.extend(tokenize(p));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toks(s: &str) -> Vec<String> {
        tokenize(s).into_iter().map(|t| t.0).collect()
    }

    #[test]
    fn segments_one_sentence_per_terminator() {
        let s = segment("A. B? C!");
        let raws: Vec<&str> = s.iter().map(|x| x.raw.as_str()).collect();
        assert_eq!(raws, vec!["A.", "B?", "C!"]);
        assert_eq!(s[2].index, 2);
    }

    #[test]
    fn empty_input_yields_empty_list() {
        assert!(segment("").is_empty());
        assert!(segment("   \n ").is_empty());
    }

    #[test]
    fn abbreviations_do_not_split() {
        let s = segment("Mr. Smith left. He ran.");
        assert_eq!(s.len(), 2);
        assert_eq!(s[0].raw, "Mr. Smith left.");
        let s = segment("He works in the U.S. Senate. It sits today.");
        assert_eq!(s.len(), 2);
    }

    #[test]
    fn closing_quote_stays_with_sentence() {
        let s = segment("\"Stop!\" she said. He stopped.");
        assert_eq!(s.len(), 3);
        assert_eq!(s[0].raw, "\"Stop!\"");
    }

    #[test]
    fn unterminated_tail_becomes_final_sentence() {
        let s = segment("One. two without end");
        assert_eq!(s.len(), 2);
        assert_eq!(s[1].raw, "two without end");
    }

    #[test]
    fn segmentation_is_lossless_and_idempotent() {
        let input = "Mr. Smith left. \"Why?\" asked Dr. Jones. Nobody knew!";
        let first = segment(input);
        let joined = first
            .iter()
            .map(|s| s.raw.as_str())
            .collect::<Vec<_>>()
            .join(" ");
        let second = segment(&joined);
        assert_eq!(
            first.iter().map(|s| &s.raw).collect::<Vec<_>>(),
            second.iter().map(|s| &s.raw).collect::<Vec<_>>()
        );
    }

    #[test]
    fn tokenize_basics() {
        assert_eq!(toks("The cat sat."), vec!["the", "cat", "sat", "."]);
        assert_eq!(toks("don't stop"), vec!["don't", "stop"]);
        assert_eq!(toks("\"Hello,\" he said"), vec!["\"", "hello", ",", "\"", "he", "said"]);
        assert_eq!(toks(""), Vec::<String>::new());
        assert_eq!(toks("..."), vec![".", ".", "."]);
    }

    #[test]
    fn tokenize_idempotent_under_canonical_join() {
        for s in ["The cat sat.", "\"Why?\" -- he asked, don't know."] {
            let once = toks(s);
            let joined = once.join(" ");
            assert_eq!(toks(&joined), once);
        }
    }

    #[test]
    fn ngram_counts_by_hand() {
        let t = tokenize("a b a b");
        let g = ngrams(&t, 2).unwrap();
        assert_eq!(g.count(&tokenize("a b")), 2);
        assert_eq!(g.count(&tokenize("b a")), 1);
        assert_eq!(g.total(), 3);
    }

    #[test]
    fn ngram_window_longer_than_sequence() {
        let g = ngrams(&tokenize("a"), 2).unwrap();
        assert_eq!(g.total(), 0);
    }

    #[test]
    fn ngram_order_zero_rejected() {
        assert!(matches!(ngrams(&tokenize("a"), 0), Err(Error::ZeroNgramOrder)));
    }

    #[test]
    fn ngram_total_matches_formula() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        let words: Vec<String> = (0..20).map(|_| format!("w{}", rng.gen_range(0..6))).collect();
        let tokens = tokenize(&words.join(" "));
        for n in [1usize, 2, 4] {
            let g = ngrams(&tokens, n).unwrap();
            // brute-force window enumeration
            let expected = if tokens.len() >= n { tokens.len() - n + 1 } else { 0 };
            assert_eq!(g.total(), expected);
            assert_eq!(g.iter().map(|(_, c)| c).sum::<usize>(), expected);
        }
    }

    #[test]
    fn abbreviation_file_format() {
        let list = AbbreviationList::parse("# header\nMr.\n  Dr. # inline\n\n");
        assert!(list.contains("mr."));
        assert!(list.contains("Dr."));
        assert!(!list.contains("St."));
    }
}
