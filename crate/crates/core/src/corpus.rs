//! Corpus ingestion, tokenization and social-media normalization.
//!
//! Every measure in this crate is computed over word tokens produced here, so
//! the tokenizer is deliberately simple and fully deterministic: split on
//! Unicode whitespace, peel punctuation off into single-character tokens,
//! keep word-interior apostrophes and hyphens, and lowercase everything except
//! the two protected placeholders.

use std::fmt;
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Placeholder substituted for `@user` mentions.
pub const TWITTER_USER: &str = "[TwitterUser]";
/// Placeholder substituted for URLs.
pub const URL: &str = "[URL]";

const PROTECTED: [&str; 2] = [TWITTER_USER, URL];

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Document {
    pub id: String,
    pub text: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NormalizationMode {
    #[default]
    None,
    Twitter,
}

impl fmt::Display for NormalizationMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            NormalizationMode::None => "none",
            NormalizationMode::Twitter => "twitter",
        })
    }
}

impl FromStr for NormalizationMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "none" => Ok(NormalizationMode::None),
            "twitter" => Ok(NormalizationMode::Twitter),
            other => Err(Error::Argument(format!(
                "unknown normalization mode {other:?} (expected none or twitter)"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct TokenizerConfig {
    pub lowercase: bool,
    pub normalization: NormalizationMode,
    pub keep_punctuation_tokens: bool,
}

impl Default for TokenizerConfig {
    fn default() -> Self {
        TokenizerConfig {
            lowercase: true,
            normalization: NormalizationMode::None,
            keep_punctuation_tokens: true,
        }
    }
}

impl TokenizerConfig {
    /// Stable string identifying this tokenizer; stored with trained models
    /// so that scoring can refuse text tokenized differently.
    pub fn fingerprint(&self) -> String {
        format!(
            "word-v1;lowercase={};normalize={};punct={}",
            self.lowercase, self.normalization, self.keep_punctuation_tokens
        )
    }

    pub fn from_fingerprint(fp: &str) -> Result<Self> {
        let bad = || Error::Config(format!("unrecognized tokenizer fingerprint {fp:?}"));
        let mut parts = fp.split(';');
        if parts.next() != Some("word-v1") {
            return Err(bad());
        }
        let mut config = TokenizerConfig::default();
        let mut seen = 0;
        for part in parts {
            let (key, value) = part.split_once('=').ok_or_else(bad)?;
            match key {
                "lowercase" => config.lowercase = value.parse().map_err(|_| bad())?,
                "normalize" => config.normalization = value.parse().map_err(|_| bad())?,
                "punct" => config.keep_punctuation_tokens = value.parse().map_err(|_| bad())?,
                _ => return Err(bad()),
            }
            seen += 1;
        }
        if seen != 3 {
            return Err(bad());
        }
        Ok(config)
    }

    pub fn tokenize(&self, text: &str) -> TokenStream {
        tokenize(text, self)
    }
}

/// An ordered, non-empty-token sequence for one document.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct TokenStream {
    tokens: Vec<String>,
    tokenizer: Option<TokenizerConfig>,
}

impl TokenStream {
    /// Wraps pre-tokenized text. Empty strings are dropped.
    pub fn from_tokens<I, S>(tokens: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        TokenStream {
            tokens: tokens
                .into_iter()
                .map(Into::into)
                .filter(|t| !t.is_empty())
                .collect(),
            tokenizer: None,
        }
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    pub fn token_count(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    /// The tokenizer that produced this stream, if it came from [`tokenize`].
    pub fn tokenizer(&self) -> Option<&TokenizerConfig> {
        self.tokenizer.as_ref()
    }

    pub fn iter(&self) -> std::slice::Iter<'_, String> {
        self.tokens.iter()
    }

    pub fn into_tokens(self) -> Vec<String> {
        self.tokens
    }
}

impl<'a> IntoIterator for &'a TokenStream {
    type Item = &'a String;
    type IntoIter = std::slice::Iter<'a, String>;

    fn into_iter(self) -> Self::IntoIter {
        self.tokens.iter()
    }
}

fn is_url(token: &str) -> bool {
    ["http://", "https://", "www."].iter().any(|prefix| {
        token.len() >= prefix.len()
            && token.as_bytes()[..prefix.len()].eq_ignore_ascii_case(prefix.as_bytes())
    })
}

fn is_user_mention(token: &str) -> bool {
    token.starts_with('@') && token.chars().any(|c| c != '@')
}

/// Replaces `@user` tokens with `[TwitterUser]` and URL tokens with `[URL]`.
///
/// Only whitespace-delimited tokens are considered; whitespace itself is
/// copied through unchanged.
pub fn normalize_tweet(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    let mut rest = text;
    while !rest.is_empty() {
        let ws_end = rest
            .find(|c: char| !c.is_whitespace())
            .unwrap_or(rest.len());
        out.push_str(&rest[..ws_end]);
        rest = &rest[ws_end..];
        let tok_end = rest.find(char::is_whitespace).unwrap_or(rest.len());
        let token = &rest[..tok_end];
        if is_user_mention(token) {
            out.push_str(TWITTER_USER);
        } else if is_url(token) {
            out.push_str(URL);
        } else {
            out.push_str(token);
        }
        rest = &rest[tok_end..];
    }
    out
}

fn is_word_joiner(c: char) -> bool {
    matches!(c, '\'' | '\u{2019}' | '-')
}

/// Splits `text` into word and punctuation tokens according to `config`.
pub fn tokenize(text: &str, config: &TokenizerConfig) -> TokenStream {
    let normalized;
    let text = match config.normalization {
        NormalizationMode::Twitter => {
            normalized = normalize_tweet(text);
            normalized.as_str()
        }
        NormalizationMode::None => text,
    };

    let mut tokens = Vec::new();
    let mut word = String::new();
    let flush = |word: &mut String, tokens: &mut Vec<String>| {
        if !word.is_empty() {
            let w = std::mem::take(word);
            tokens.push(if config.lowercase { w.to_lowercase() } else { w });
        }
    };

    for chunk in text.split_whitespace() {
        let mut i = 0;
        while i < chunk.len() {
            let rest = &chunk[i..];
            if let Some(special) = PROTECTED.iter().find(|p| rest.starts_with(*p)) {
                flush(&mut word, &mut tokens);
                tokens.push((*special).to_string());
                i += special.len();
                continue;
            }
            let c = rest.chars().next().expect("non-empty remainder");
            let clen = c.len_utf8();
            if c.is_alphanumeric() {
                word.push(c);
            } else if is_word_joiner(c)
                && !word.is_empty()
                && rest[clen..].chars().next().is_some_and(char::is_alphanumeric)
            {
                word.push(c);
            } else {
                flush(&mut word, &mut tokens);
                if config.keep_punctuation_tokens {
                    tokens.push(c.to_string());
                }
            }
            i += clen;
        }
        flush(&mut word, &mut tokens);
    }

    TokenStream {
        tokens,
        tokenizer: Some(*config),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum CorpusFormat {
    /// One document per line.
    #[default]
    TextLines,
    /// JSON object per line with a `"text"` string field and optional `"id"`.
    JsonlText,
}

impl FromStr for CorpusFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "text" | "text-lines" => Ok(CorpusFormat::TextLines),
            "jsonl" | "jsonl-text-field" => Ok(CorpusFormat::JsonlText),
            other => Err(Error::Argument(format!(
                "unknown corpus format {other:?} (expected text-lines or jsonl-text-field)"
            ))),
        }
    }
}

/// Streaming document reader. Blank lines are skipped; ids default to the
/// 0-based line number.
pub struct CorpusReader<R> {
    lines: std::io::Lines<R>,
    format: CorpusFormat,
    line_no: usize,
    path: PathBuf,
}

impl<R: BufRead> CorpusReader<R> {
    pub fn new(reader: R, format: CorpusFormat) -> Self {
        CorpusReader {
            lines: reader.lines(),
            format,
            line_no: 0,
            path: PathBuf::from("<reader>"),
        }
    }

    fn parse_json(&self, line: &str, line_no: usize) -> Result<Document> {
        let malformed = |message: String| Error::MalformedJson {
            line: line_no + 1,
            message,
        };
        let value: serde_json::Value =
            serde_json::from_str(line).map_err(|e| malformed(e.to_string()))?;
        let obj = value
            .as_object()
            .ok_or_else(|| malformed("expected a JSON object".into()))?;
        let text = obj
            .get("text")
            .and_then(|t| t.as_str())
            .ok_or_else(|| malformed("missing string field \"text\"".into()))?;
        let id = match obj.get("id") {
            None | Some(serde_json::Value::Null) => line_no.to_string(),
            Some(serde_json::Value::String(s)) => s.clone(),
            Some(serde_json::Value::Number(n)) => n.to_string(),
            Some(_) => return Err(malformed("field \"id\" must be a string or number".into())),
        };
        Ok(Document {
            id,
            text: text.replace(['\n', '\r'], " "),
        })
    }
}

impl<R: BufRead> Iterator for CorpusReader<R> {
    type Item = Result<Document>;

    fn next(&mut self) -> Option<Self::Item> {
        loop {
            let line = match self.lines.next()? {
                Ok(line) => line,
                Err(e) => return Some(Err(Error::io(&self.path, e))),
            };
            let line_no = self.line_no;
            self.line_no += 1;
            let line = line.strip_suffix('\r').unwrap_or(&line);
            if line.is_empty() {
                continue;
            }
            return Some(match self.format {
                CorpusFormat::TextLines => Ok(Document {
                    id: line_no.to_string(),
                    text: line.to_string(),
                }),
                CorpusFormat::JsonlText => self.parse_json(line, line_no),
            });
        }
    }
}

pub fn read_corpus(
    path: impl AsRef<Path>,
    format: CorpusFormat,
) -> Result<CorpusReader<BufReader<File>>> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut reader = CorpusReader::new(BufReader::new(file), format);
    reader.path = path.to_path_buf();
    Ok(reader)
}

/// A tokenized corpus held in memory, document order preserved.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Corpus {
    pub ids: Vec<String>,
    pub docs: Vec<TokenStream>,
}

impl Corpus {
    pub fn new(ids: Vec<String>, docs: Vec<TokenStream>) -> Self {
        assert_eq!(ids.len(), docs.len(), "one id per document");
        Corpus { ids, docs }
    }

    /// Builds a corpus from token streams, numbering documents from zero.
    pub fn from_streams(docs: Vec<TokenStream>) -> Self {
        let ids = (0..docs.len()).map(|i| i.to_string()).collect();
        Corpus { ids, docs }
    }

    /// Tokenizes documents in parallel; output order matches input order.
    pub fn tokenize_documents(docs: Vec<Document>, config: &TokenizerConfig) -> Self {
        let docs_tok = docs.par_iter().map(|d| tokenize(&d.text, config)).collect();
        let ids = docs.into_iter().map(|d| d.id).collect();
        Corpus {
            ids,
            docs: docs_tok,
        }
    }

    pub fn load(path: impl AsRef<Path>, format: CorpusFormat, config: &TokenizerConfig) -> Result<Self> {
        let docs = read_corpus(path, format)?.collect::<Result<Vec<_>>>()?;
        Ok(Corpus::tokenize_documents(docs, config))
    }

    pub fn len(&self) -> usize {
        self.docs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.docs.is_empty()
    }

    pub fn token_count(&self) -> usize {
        self.docs.iter().map(TokenStream::token_count).sum()
    }

    pub fn doc_lengths(&self) -> Vec<usize> {
        self.docs.iter().map(TokenStream::token_count).collect()
    }

    /// Sub-corpus made of the documents at `indices`, in that order.
    pub fn select(&self, indices: &[usize]) -> Corpus {
        Corpus {
            ids: indices.iter().map(|&i| self.ids[i].clone()).collect(),
            docs: indices.iter().map(|&i| self.docs[i].clone()).collect(),
        }
    }
}
