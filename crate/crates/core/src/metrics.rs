//! Jensen-Shannon divergence, target vocabulary covered, and type-token ratio.

use std::collections::HashSet;
use std::fmt;
use std::io::BufRead;
use std::str::FromStr;

use rustc_hash::{FxHashMap, FxHashSet};
use serde::{Deserialize, Serialize};

use crate::corpus::TokenStream;
use crate::error::{Error, Result};
use crate::ngram::Distribution;

const BUNDLED_LEXICON: &str = include_str!("../data/content_lexicon.tsv");

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PosTag {
    Noun,
    Verb,
    Adjective,
    Other,
}

impl PosTag {
    pub fn is_content(self) -> bool {
        !matches!(self, PosTag::Other)
    }
}

impl FromStr for PosTag {
    type Err = Error;

    /// Accepts the coarse names and Penn Treebank tags (`NN*`, `VB*`, `JJ*`;
    /// any other Penn tag maps to `other`).
    fn from_str(s: &str) -> Result<Self> {
        let upper = s.to_ascii_uppercase();
        Ok(match upper.as_str() {
            "NOUN" | "N" | "PROPN" => PosTag::Noun,
            "VERB" | "V" => PosTag::Verb,
            "ADJECTIVE" | "ADJ" | "A" => PosTag::Adjective,
            "OTHER" => PosTag::Other,
            t if t.starts_with("NN") => PosTag::Noun,
            t if t.starts_with("VB") => PosTag::Verb,
            t if t.starts_with("JJ") => PosTag::Adjective,
            t if !t.is_empty() && t.chars().all(|c| c.is_ascii_uppercase() || "$.,:()'`#-".contains(c)) => {
                PosTag::Other
            }
            _ => return Err(Error::Argument(format!("unknown POS tag {s:?}"))),
        })
    }
}

fn looks_alphabetic(token: &str) -> bool {
    token.chars().any(char::is_alphabetic)
        && token
            .chars()
            .all(|c| c.is_alphabetic() || matches!(c, '\'' | '\u{2019}' | '-'))
}

/// Word-to-coarse-tag lookup used to pick out content words.
///
/// Unknown alphabetic tokens count as content words; anything else unknown
/// (numbers, punctuation, placeholders) does not.
#[derive(Debug, Clone)]
pub struct ContentWordLexicon {
    tags: FxHashMap<String, PosTag>,
    source_name: String,
}

impl ContentWordLexicon {
    pub fn bundled() -> Self {
        Self::parse(BUNDLED_LEXICON.as_bytes(), "bundled")
            .expect("bundled lexicon is well formed")
    }

    pub fn empty(source_name: impl Into<String>) -> Self {
        ContentWordLexicon {
            tags: FxHashMap::default(),
            source_name: source_name.into(),
        }
    }

    /// Parses `word<TAB>tag` lines. Words are lowercased.
    pub fn parse<R: BufRead>(input: R, source_name: impl Into<String>) -> Result<Self> {
        let mut tags = FxHashMap::default();
        for (i, line) in input.lines().enumerate() {
            let line = line?;
            let line = line.trim_end_matches('\r');
            if line.is_empty() {
                continue;
            }
            let (word, tag) = line
                .split_once('\t')
                .ok_or_else(|| Error::parse(i + 1, "expected word<TAB>tag"))?;
            let tag: PosTag = tag.trim().parse().map_err(|e: Error| Error::parse(i + 1, e.to_string()))?;
            tags.insert(word.to_lowercase(), tag);
        }
        Ok(ContentWordLexicon {
            tags,
            source_name: source_name.into(),
        })
    }

    pub fn insert(&mut self, word: &str, tag: PosTag) {
        self.tags.insert(word.to_lowercase(), tag);
    }

    pub fn source_name(&self) -> &str {
        &self.source_name
    }

    pub fn len(&self) -> usize {
        self.tags.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tags.is_empty()
    }

    pub fn tag(&self, token: &str) -> Option<PosTag> {
        self.tags
            .get(token)
            .or_else(|| self.tags.get(&token.to_lowercase()))
            .copied()
    }

    pub fn is_content_word(&self, token: &str) -> bool {
        match self.tag(token) {
            Some(tag) => tag.is_content(),
            None => looks_alphabetic(token),
        }
    }
}

pub fn filter_content_words(tokens: &TokenStream, lexicon: &ContentWordLexicon) -> TokenStream {
    TokenStream::from_tokens(
        tokens
            .iter()
            .filter(|t| lexicon.is_content_word(t))
            .cloned(),
    )
}

/// Externally POS-annotated corpus: `token<TAB>tag` lines, one token per
/// line, documents separated by blank lines.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct TaggedCorpus {
    pub docs: Vec<Vec<(String, PosTag)>>,
}

impl TaggedCorpus {
    pub fn parse<R: BufRead>(input: R) -> Result<Self> {
        let mut docs = Vec::new();
        let mut current = Vec::new();
        for (i, line) in input.lines().enumerate() {
            let line = line?;
            let line = line.trim_end_matches('\r');
            if line.is_empty() {
                if !current.is_empty() {
                    docs.push(std::mem::take(&mut current));
                }
                continue;
            }
            let (token, tag) = line
                .split_once('\t')
                .ok_or_else(|| Error::parse(i + 1, "expected token<TAB>tag"))?;
            let tag = tag.trim().parse().map_err(|e: Error| Error::parse(i + 1, e.to_string()))?;
            current.push((token.to_string(), tag));
        }
        if !current.is_empty() {
            docs.push(current);
        }
        Ok(TaggedCorpus { docs })
    }

    /// Checks that the annotation tokens match `corpus` token for token,
    /// ignoring empty documents on either side.
    pub fn check_aligned(&self, corpus: &[TokenStream]) -> Result<()> {
        let annotated = self.docs.iter().map(|d| d.iter().map(|(t, _)| t.as_str()));
        let tokenized = corpus.iter().filter(|d| !d.is_empty());
        let mut n = 0;
        for (doc_idx, (a, b)) in annotated.zip(tokenized).enumerate() {
            let b = b.iter().map(String::as_str);
            if !a.clone().eq(b.clone()) {
                let pos = a.zip(b).position(|(x, y)| x != y).unwrap_or(0);
                return Err(Error::Data(format!(
                    "POS annotations diverge from the tokenized corpus in document {doc_idx} at token {pos}"
                )));
            }
            n += 1;
        }
        let expected = corpus.iter().filter(|d| !d.is_empty()).count();
        if n != self.docs.len() || n != expected {
            return Err(Error::Data(format!(
                "POS annotations cover {} documents, tokenized corpus has {expected}",
                self.docs.len()
            )));
        }
        Ok(())
    }

    pub fn content_types(&self) -> FxHashSet<String> {
        self.docs
            .iter()
            .flatten()
            .filter(|(_, tag)| tag.is_content())
            .map(|(t, _)| t.clone())
            .collect()
    }
}

/// Content-word types of a corpus.
pub fn content_types<'a, I>(docs: I, lexicon: &ContentWordLexicon) -> FxHashSet<String>
where
    I: IntoIterator<Item = &'a TokenStream>,
{
    let mut types = FxHashSet::default();
    for doc in docs {
        for t in doc {
            if !types.contains(t.as_str()) && lexicon.is_content_word(t) {
                types.insert(t.clone());
            }
        }
    }
    types
}

/// Fraction of `target_types` that occur in `source`.
pub fn coverage<'a, I>(target_types: &FxHashSet<String>, source: I) -> Result<f64>
where
    I: IntoIterator<Item = &'a str>,
{
    if target_types.is_empty() {
        return Err(Error::EmptyVocabulary);
    }
    let mut found: HashSet<&str> = HashSet::new();
    for t in source {
        if let Some(hit) = target_types.get(t) {
            found.insert(hit.as_str());
            if found.len() == target_types.len() {
                break;
            }
        }
    }
    Ok(found.len() as f64 / target_types.len() as f64)
}

/// Target vocabulary covered: |V_t ∩ V_s| / |V_t| over content-word types,
/// with the content filter applied to both sides.
pub fn tvc<'a, 'b, T, S>(target: T, source: S, lexicon: &ContentWordLexicon) -> Result<f64>
where
    T: IntoIterator<Item = &'a TokenStream>,
    S: IntoIterator<Item = &'b TokenStream>,
{
    let vt = content_types(target, lexicon);
    let source_content = source
        .into_iter()
        .flat_map(|d| d.iter())
        .filter(|t| lexicon.is_content_word(t))
        .map(String::as_str);
    coverage(&vt, source_content)
}

/// Distinct token types over total tokens.
pub fn ttr<'a, I>(docs: I) -> Result<f64>
where
    I: IntoIterator<Item = &'a TokenStream>,
{
    let mut types: FxHashSet<&str> = FxHashSet::default();
    let mut total = 0usize;
    for doc in docs {
        total += doc.token_count();
        types.extend(doc.iter().map(String::as_str));
    }
    if total == 0 {
        return Err(Error::EmptyCorpus("type-token ratio of zero tokens".into()));
    }
    Ok(types.len() as f64 / total as f64)
}

fn shared_term(a: f64, b: f64) -> f64 {
    let m = 0.5 * (a + b);
    0.5 * (a * (a / m).log2()) + 0.5 * (b * (b / m).log2())
}

/// Jensen-Shannon divergence in bits, so the value lies in [0, 1].
///
/// Terms present on one side only contribute half their probability (their
/// mixture weight is exactly half). The evaluation order is fixed by the sorted
/// term lists, which makes `jsd(p, q)` and `jsd(q, p)` bit-identical.
pub fn jsd(p: &Distribution, q: &Distribution) -> Result<f64> {
    if p.pooling() != q.pooling() {
        return Err(Error::Argument(format!(
            "cannot compare distributions with pooling {} and {}",
            p.pooling(),
            q.pooling()
        )));
    }
    let (pt, qt) = (p.terms(), q.terms());
    let (mut i, mut j) = (0, 0);
    let mut only_p = 0.0;
    let mut only_q = 0.0;
    let mut shared = 0.0;
    let mut any_shared = false;
    while i < pt.len() && j < qt.len() {
        match pt[i].0.cmp(&qt[j].0) {
            std::cmp::Ordering::Less => {
                only_p += pt[i].1;
                i += 1;
            }
            std::cmp::Ordering::Greater => {
                only_q += qt[j].1;
                j += 1;
            }
            std::cmp::Ordering::Equal => {
                shared += shared_term(pt[i].1, qt[j].1);
                any_shared = true;
                i += 1;
                j += 1;
            }
        }
    }
    if !any_shared {
        return Ok(1.0);
    }
    only_p += pt[i..].iter().map(|t| t.1).sum::<f64>();
    only_q += qt[j..].iter().map(|t| t.1).sum::<f64>();
    let value = (0.5 * only_p + 0.5 * only_q) + shared;
    Ok(value.clamp(0.0, 1.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Measure {
    Ppl,
    JsdPooled,
    Jsd1,
    Jsd2,
    Jsd3,
    Tvc,
    Ttr,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Direction {
    HigherIsMoreSimilar,
    LowerIsMoreSimilar,
    Diversity,
}

impl Measure {
    pub const ALL: [Measure; 7] = [
        Measure::Ppl,
        Measure::JsdPooled,
        Measure::Jsd1,
        Measure::Jsd2,
        Measure::Jsd3,
        Measure::Tvc,
        Measure::Ttr,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Measure::Ppl => "ppl",
            Measure::JsdPooled => "jsd_pooled",
            Measure::Jsd1 => "jsd_1",
            Measure::Jsd2 => "jsd_2",
            Measure::Jsd3 => "jsd_3",
            Measure::Tvc => "tvc",
            Measure::Ttr => "ttr",
        }
    }

    pub fn direction(self) -> Direction {
        match self {
            Measure::Ppl | Measure::JsdPooled | Measure::Jsd1 | Measure::Jsd2 | Measure::Jsd3 => {
                Direction::LowerIsMoreSimilar
            }
            Measure::Tvc => Direction::HigherIsMoreSimilar,
            Measure::Ttr => Direction::Diversity,
        }
    }

    /// Maps a raw value onto a scale where larger means more similar:
    /// `-ln(ppl)` for perplexity, `1 - jsd` for divergences. `None` for TTR,
    /// which measures diversity rather than similarity.
    pub fn similarity(self, value: f64) -> Option<f64> {
        match self {
            Measure::Ppl => Some(-value.ln()),
            Measure::JsdPooled | Measure::Jsd1 | Measure::Jsd2 | Measure::Jsd3 => Some(1.0 - value),
            Measure::Tvc => Some(value),
            Measure::Ttr => None,
        }
    }

    /// Checks the value range implied by the measure.
    pub fn validate(self, value: f64) -> Result<()> {
        let ok = match self {
            Measure::Ppl => value > 0.0 && value.is_finite(),
            Measure::JsdPooled | Measure::Jsd1 | Measure::Jsd2 | Measure::Jsd3 | Measure::Tvc => {
                (0.0..=1.0).contains(&value)
            }
            Measure::Ttr => value > 0.0 && value <= 1.0,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::Data(format!("{} value {value} out of range", self.name())))
        }
    }
}

impl fmt::Display for Measure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Measure {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "jsd" => Ok(Measure::JsdPooled),
            _ => Measure::ALL
                .into_iter()
                .find(|m| m.name() == s)
                .ok_or_else(|| Error::Argument(format!("unknown measure {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeasureValue {
    pub measure: Measure,
    pub value: f64,
    pub direction: Direction,
}

impl MeasureValue {
    pub fn new(measure: Measure, value: f64) -> Result<Self> {
        measure.validate(value)?;
        Ok(MeasureValue {
            measure,
            value,
            direction: measure.direction(),
        })
    }
}
