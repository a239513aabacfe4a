//! Interpolated modified Kneser-Ney trigram language model.
//!
//! Training works on a sentence-marker [`NgramTable`]. Adjusted counts are the
//! raw counts at the top order and for n-grams starting with `<s>`, and
//! continuation counts (number of distinct left extensions) everywhere else.
//! Each order gets three discounts estimated from counts-of-counts. The
//! unigram level interpolates with the uniform distribution over the
//! vocabulary, which is how `<unk>` receives its probability.
//!
//! The trained model is stored in backoff form (log10 probabilities plus
//! log10 backoff weights), which is exactly what the ARPA format holds, so a
//! model written to disk and read back scores text identically.

use std::f64::consts::LN_10;
use std::io::{BufRead, Write};

use rayon::prelude::*;
use rustc_hash::FxHashMap;
use serde::{Deserialize, Serialize};

use crate::corpus::{TokenStream, TokenizerConfig};
use crate::error::{Error, Result};
use crate::ngram::{BoundaryPolicy, NgramTable, Vocab, BOS, EOS};

pub const UNK: &str = "<unk>";

/// Stand-in log10 probability for words that are never predicted (`<s>`).
const IMPOSSIBLE_LOG10: f64 = -99.0;
/// Largest discount allowed; discounts live in [0, 1).
const MAX_DISCOUNT: f64 = 1.0 - f64::EPSILON / 2.0;
const FALLBACK_DISCOUNT: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum DiscountMode {
    /// Estimate D1, D2, D3+ per order from counts-of-counts.
    CountOfCounts,
    /// One discount for every order and count band.
    Fixed(f64),
}

impl std::str::FromStr for DiscountMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s == "auto" || s == "count-of-counts" {
            return Ok(DiscountMode::CountOfCounts);
        }
        let value = s
            .strip_prefix("fixed:")
            .ok_or_else(|| Error::Argument(format!("discounts must be auto or fixed:D, got {s:?}")))?;
        let d: f64 = value
            .parse()
            .map_err(|_| Error::Argument(format!("unparseable discount {value:?}")))?;
        if !(0.0..1.0).contains(&d) {
            return Err(Error::Argument(format!("fixed discount must be in [0, 1), got {d}")));
        }
        Ok(DiscountMode::Fixed(d))
    }
}

impl std::fmt::Display for DiscountMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            DiscountMode::CountOfCounts => f.write_str("auto"),
            DiscountMode::Fixed(d) => write!(f, "fixed:{d}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct KnConfig {
    pub discount_mode: DiscountMode,
    /// Minimum raw count for an n-gram of order two or three to be stored.
    pub min_count: u64,
    pub tokenizer: Option<TokenizerConfig>,
}

impl Default for KnConfig {
    fn default() -> Self {
        KnConfig {
            discount_mode: DiscountMode::CountOfCounts,
            min_count: 1,
            tokenizer: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Discounts {
    pub d1: f64,
    pub d2: f64,
    pub d3_plus: f64,
}

impl Discounts {
    fn uniform(d: f64) -> Self {
        Discounts {
            d1: d,
            d2: d,
            d3_plus: d,
        }
    }

    fn for_count(&self, count: u64) -> f64 {
        match count {
            0 => 0.0,
            1 => self.d1,
            2 => self.d2,
            _ => self.d3_plus,
        }
    }

    /// Estimates from counts-of-counts `n[k-1] = #{grams with count k}`.
    /// Returns `None` when the estimate is undefined.
    pub fn estimate(n: [u64; 4]) -> Option<Self> {
        let [n1, n2, n3, n4] = n.map(|c| c as f64);
        if n1 == 0.0 || n2 == 0.0 || n3 == 0.0 {
            return None;
        }
        let y = n1 / (n1 + 2.0 * n2);
        let clamp = |d: f64| d.clamp(0.0, MAX_DISCOUNT);
        Some(Discounts {
            d1: clamp(1.0 - 2.0 * y * n2 / n1),
            d2: clamp(2.0 - 3.0 * y * n3 / n2),
            d3_plus: clamp(3.0 - 4.0 * y * n4 / n3),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct BigramEntry {
    log10_prob: Option<f64>,
    log10_backoff: f64,
}

/// Band tallies for one context: how much mass the discounts free up.
#[derive(Debug, Clone, Copy, Default)]
struct ContextMass {
    total: u64,
    bands: [u64; 3],
    pruned: u64,
}

impl ContextMass {
    fn add(&mut self, adjusted: u64, stored: bool) {
        self.total += adjusted;
        if stored {
            self.bands[(adjusted.min(3) - 1) as usize] += 1;
        } else {
            self.pruned += adjusted;
        }
    }

    fn backoff(&self, d: &Discounts) -> f64 {
        let freed = d.d1 * self.bands[0] as f64
            + d.d2 * self.bands[1] as f64
            + d.d3_plus * self.bands[2] as f64
            + self.pruned as f64;
        freed / self.total as f64
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct KneserNeyModel {
    vocab: Vocab,
    bos: u32,
    eos: u32,
    unk: u32,
    order: usize,
    unigram: Vec<f64>,
    unigram_backoff: Vec<f64>,
    bigrams: FxHashMap<[u32; 2], BigramEntry>,
    trigrams: FxHashMap<[u32; 3], f64>,
    discounts: Vec<Discounts>,
    tokenizer: Option<TokenizerConfig>,
    warnings: Vec<String>,
}

/// Trains an interpolated modified Kneser-Ney model on a 3-gram table with
/// sentence markers.
pub fn train_kn(table: &NgramTable, config: &KnConfig) -> Result<KneserNeyModel> {
    if table.max_order() != 3 || table.boundary() != BoundaryPolicy::SentenceMarkers {
        return Err(Error::Argument(format!(
            "Kneser-Ney training needs a max_order=3 table with sentence markers, got max_order={} boundary={}",
            table.max_order(),
            table.boundary()
        )));
    }
    if table.total(2) == 0 || table.total(3) == 0 {
        return Err(Error::EmptyCorpus("n-gram table has no counts".into()));
    }
    if config.min_count == 0 {
        return Err(Error::Argument("min_count must be at least 1".into()));
    }
    if let DiscountMode::Fixed(d) = config.discount_mode {
        if !(0.0..1.0).contains(&d) {
            return Err(Error::Argument(format!("fixed discount must be in [0, 1), got {d}")));
        }
    }

    let mut vocab = table.vocab().clone();
    let bos = vocab.intern(BOS);
    let eos = vocab.intern(EOS);
    let unk = vocab.intern(UNK);
    let vsize = vocab.len();
    let min_count = config.min_count;

    // Top order: raw counts. n-grams predicting <s> are padding artefacts.
    let tri_raw: Vec<([u32; 3], u64)> = table
        .order_counts(3)
        .iter()
        .filter(|(g, _)| g[2] != bos)
        .map(|(g, &c)| ([g[0], g[1], g[2]], c))
        .collect();

    let mut continuation2: FxHashMap<[u32; 2], u64> = FxHashMap::default();
    for (g, _) in &tri_raw {
        *continuation2.entry([g[1], g[2]]).or_insert(0) += 1;
    }
    // (v, w) -> (adjusted, raw)
    let bi_adj: Vec<([u32; 2], u64, u64)> = table
        .order_counts(2)
        .iter()
        .filter(|(g, _)| g[1] != bos)
        .map(|(g, &raw)| {
            let key = [g[0], g[1]];
            let adjusted = if g[0] == bos {
                raw
            } else {
                continuation2.get(&key).copied().unwrap_or(0)
            };
            (key, adjusted, raw)
        })
        .filter(|&(_, adjusted, _)| adjusted > 0)
        .collect();
    drop(continuation2);

    let mut uni_adj = vec![0u64; vsize];
    for (g, _, _) in &bi_adj {
        uni_adj[g[1] as usize] += 1;
    }

    let counts_of_counts = |values: &mut dyn Iterator<Item = u64>| {
        let mut n = [0u64; 4];
        for v in values {
            if (1..=4).contains(&v) {
                n[v as usize - 1] += 1;
            }
        }
        n
    };
    let coc = [
        counts_of_counts(&mut uni_adj.iter().copied()),
        counts_of_counts(&mut bi_adj.iter().map(|e| e.1)),
        counts_of_counts(&mut tri_raw.iter().map(|e| e.1)),
    ];
    let mut warnings = Vec::new();
    let discounts: Vec<Discounts> = coc
        .iter()
        .enumerate()
        .map(|(i, n)| match config.discount_mode {
            DiscountMode::Fixed(d) => Discounts::uniform(d),
            DiscountMode::CountOfCounts => Discounts::estimate(*n).unwrap_or_else(|| {
                warnings.push(format!(
                    "order {}: degenerate counts-of-counts {:?}, using fixed discount {FALLBACK_DISCOUNT}",
                    i + 1,
                    n
                ));
                Discounts::uniform(FALLBACK_DISCOUNT)
            }),
        })
        .collect();

    // Unigrams, interpolated with the uniform distribution over the
    // vocabulary (everything except <s>).
    let predictable = (vsize - 1) as f64;
    let mut uni_mass = ContextMass::default();
    for (id, &a) in uni_adj.iter().enumerate() {
        if a > 0 && id as u32 != bos {
            uni_mass.add(a, true);
        }
    }
    if uni_mass.total == 0 {
        return Err(Error::EmptyCorpus("no unigram continuation counts".into()));
    }
    let gamma1 = uni_mass.backoff(&discounts[0]);
    let a1_total = uni_mass.total as f64;
    let p1: Vec<f64> = uni_adj
        .iter()
        .enumerate()
        .map(|(id, &a)| {
            if id as u32 == bos {
                0.0
            } else {
                (a as f64 - discounts[0].for_count(a)).max(0.0) / a1_total + gamma1 / predictable
            }
        })
        .collect();

    // Bigram level.
    let mut bi_ctx: FxHashMap<u32, ContextMass> = FxHashMap::default();
    for &(g, adjusted, raw) in &bi_adj {
        bi_ctx.entry(g[0]).or_default().add(adjusted, raw >= min_count);
    }
    let gamma2: FxHashMap<u32, f64> = bi_ctx
        .iter()
        .map(|(&v, m)| (v, m.backoff(&discounts[1])))
        .collect();
    let p2_full = |v: u32, w: u32, stored: Option<f64>| -> f64 {
        match gamma2.get(&v) {
            Some(&g) => stored.unwrap_or(0.0) + g * p1[w as usize],
            None => p1[w as usize],
        }
    };
    let mut p2_stored: FxHashMap<[u32; 2], f64> = FxHashMap::default();
    for &(g, adjusted, raw) in &bi_adj {
        if raw >= min_count {
            let m = &bi_ctx[&g[0]];
            let d = discounts[1].for_count(adjusted);
            p2_stored.insert(g, (adjusted as f64 - d) / m.total as f64);
        }
    }

    // Trigram level.
    let mut tri_ctx: FxHashMap<[u32; 2], ContextMass> = FxHashMap::default();
    for &(g, c) in &tri_raw {
        tri_ctx.entry([g[0], g[1]]).or_default().add(c, c >= min_count);
    }
    let mut trigrams: FxHashMap<[u32; 3], f64> = FxHashMap::default();
    trigrams.reserve(tri_raw.len());
    for &(g, c) in &tri_raw {
        if c < min_count {
            continue;
        }
        let m = &tri_ctx[&[g[0], g[1]]];
        let d = discounts[2].for_count(c);
        let gamma3 = m.backoff(&discounts[2]);
        let lower = p2_full(g[1], g[2], p2_stored.get(&[g[1], g[2]]).copied());
        let p = (c as f64 - d) / m.total as f64 + gamma3 * lower;
        trigrams.insert(g, p.log10());
    }
    drop(tri_raw);

    let mut bigrams: FxHashMap<[u32; 2], BigramEntry> = FxHashMap::default();
    for (&g, &stored) in &p2_stored {
        bigrams.insert(
            g,
            BigramEntry {
                log10_prob: Some(p2_full(g[0], g[1], Some(stored)).log10()),
                log10_backoff: 0.0,
            },
        );
    }
    for (ctx, m) in &tri_ctx {
        let backoff = m.backoff(&discounts[2]).log10();
        bigrams
            .entry(*ctx)
            .or_insert(BigramEntry {
                log10_prob: None,
                log10_backoff: 0.0,
            })
            .log10_backoff = backoff;
    }

    let unigram: Vec<f64> = p1
        .iter()
        .enumerate()
        .map(|(id, &p)| if id as u32 == bos { IMPOSSIBLE_LOG10 } else { p.log10() })
        .collect();
    let mut unigram_backoff = vec![0.0; vsize];
    for (&v, &g) in &gamma2 {
        unigram_backoff[v as usize] = g.log10();
    }

    Ok(KneserNeyModel {
        vocab,
        bos,
        eos,
        unk,
        order: 3,
        unigram,
        unigram_backoff,
        bigrams,
        trigrams,
        discounts,
        tokenizer: config.tokenizer,
        warnings,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PerplexityResult {
    pub perplexity: f64,
    pub scored_token_count: u64,
    pub oov_count: u64,
    /// Natural-log probability of the whole corpus.
    pub total_log_prob: f64,
}

impl KneserNeyModel {
    pub fn discounts(&self) -> &[Discounts] {
        &self.discounts
    }

    pub fn warnings(&self) -> &[String] {
        &self.warnings
    }

    pub fn tokenizer(&self) -> Option<&TokenizerConfig> {
        self.tokenizer.as_ref()
    }

    pub fn set_tokenizer(&mut self, tokenizer: Option<TokenizerConfig>) {
        self.tokenizer = tokenizer;
    }

    pub fn order(&self) -> usize {
        self.order
    }

    /// Words the model can predict: every unigram except `<s>`, including
    /// `</s>` and `<unk>`.
    pub fn vocabulary(&self) -> impl Iterator<Item = &str> + '_ {
        self.vocab
            .words()
            .iter()
            .enumerate()
            .filter(move |(id, _)| *id as u32 != self.bos)
            .map(|(_, w)| w.as_str())
    }

    fn id(&self, word: &str) -> u32 {
        self.vocab.get(word).unwrap_or(self.unk)
    }

    fn log10_cond(&self, context: &[u32], w: u32) -> f64 {
        match *context {
            [.., u, v] if self.order >= 3 => {
                if let Some(&p) = self.trigrams.get(&[u, v, w]) {
                    return p;
                }
                let backoff = self.bigrams.get(&[u, v]).map_or(0.0, |e| e.log10_backoff);
                backoff + self.log10_cond(&[v], w)
            }
            [.., v] if self.order >= 2 => {
                if let Some(p) = self.bigrams.get(&[v, w]).and_then(|e| e.log10_prob) {
                    return p;
                }
                self.unigram_backoff[v as usize] + self.unigram[w as usize]
            }
            _ => self.unigram[w as usize],
        }
    }

    /// p(word | context) for a context of up to two words (earlier words are
    /// ignored). Unknown words map to `<unk>`.
    pub fn prob(&self, context: &[&str], word: &str) -> f64 {
        let ctx: Vec<u32> = context.iter().map(|w| self.id(w)).collect();
        10f64.powf(self.log10_cond(&ctx, self.id(word)))
    }

    fn check_tokenizer(&self, doc: &TokenStream) -> Result<()> {
        match (self.tokenizer.as_ref(), doc.tokenizer()) {
            (Some(m), Some(d)) if m != d => Err(Error::Config(format!(
                "tokenizer fingerprint mismatch: model was trained with {:?}, text tokenized with {:?}",
                m.fingerprint(),
                d.fingerprint()
            ))),
            _ => Ok(()),
        }
    }

    /// Returns (natural-log probability, scored tokens, OOV tokens).
    fn score(&self, doc: &TokenStream) -> (f64, u64, u64) {
        let mut ctx = [self.bos; 2];
        let mut log_prob = 0.0;
        let mut oov = 0;
        for token in doc.tokens() {
            let w = match self.vocab.get(token) {
                Some(id) if id != self.bos => id,
                _ => {
                    oov += 1;
                    self.unk
                }
            };
            log_prob += self.log10_cond(&ctx, w) * LN_10;
            ctx = [ctx[1], w];
        }
        log_prob += self.log10_cond(&ctx, self.eos) * LN_10;
        (log_prob, doc.token_count() as u64 + 1, oov)
    }

    /// Sum of ln p(w_i | w_{i-2} w_{i-1}) over the padded document, `</s>`
    /// included.
    pub fn sequence_log_prob(&self, doc: &TokenStream) -> Result<f64> {
        self.check_tokenizer(doc)?;
        Ok(self.score(doc).0)
    }

    /// Corpus perplexity. Documents are scored in parallel and summed in
    /// document order, so the result does not depend on the thread count.
    pub fn perplexity(&self, corpus: &[TokenStream]) -> Result<PerplexityResult> {
        if corpus.is_empty() {
            return Err(Error::EmptyCorpus("cannot compute perplexity of an empty corpus".into()));
        }
        corpus.iter().try_for_each(|d| self.check_tokenizer(d))?;
        let scores: Vec<(f64, u64, u64)> = corpus.par_iter().map(|d| self.score(d)).collect();
        let mut total_log_prob = 0.0;
        let mut scored = 0;
        let mut oov = 0;
        for (lp, n, o) in scores {
            total_log_prob += lp;
            scored += n;
            oov += o;
        }
        Ok(PerplexityResult {
            perplexity: (-total_log_prob / scored as f64).exp(),
            scored_token_count: scored,
            oov_count: oov,
            total_log_prob,
        })
    }
}

pub fn sequence_log_prob(model: &KneserNeyModel, doc: &TokenStream) -> Result<f64> {
    model.sequence_log_prob(doc)
}

pub fn perplexity(model: &KneserNeyModel, corpus: &[TokenStream]) -> Result<PerplexityResult> {
    model.perplexity(corpus)
}

/// Model metadata written next to the ARPA file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSidecar {
    pub format: String,
    pub discounts: Vec<Discounts>,
    pub tokenizer_fingerprint: Option<String>,
    pub boundary_policy: BoundaryPolicy,
    pub warnings: Vec<String>,
}

const SIDECAR_FORMAT: &str = "corpus-affinity-kn v1";

fn fmt_log(x: f64) -> String {
    if x <= IMPOSSIBLE_LOG10 {
        "-99".to_string()
    } else {
        format!("{x}")
    }
}

impl KneserNeyModel {
    pub fn sidecar(&self) -> ModelSidecar {
        ModelSidecar {
            format: SIDECAR_FORMAT.to_string(),
            discounts: self.discounts.clone(),
            tokenizer_fingerprint: self.tokenizer.map(|t| t.fingerprint()),
            boundary_policy: BoundaryPolicy::SentenceMarkers,
            warnings: self.warnings.clone(),
        }
    }

    fn words_of(&self, ids: &[u32]) -> String {
        ids.iter().map(|&id| self.vocab.word(id)).collect::<Vec<_>>().join(" ")
    }

    /// Writes the model as an ARPA file. Entries within an order are sorted
    /// bytewise and numbers use the shortest exact decimal form.
    pub fn write_arpa<W: Write>(&self, mut out: W) -> Result<()> {
        let mut uni: Vec<(String, String)> = (0..self.vocab.len() as u32)
            .map(|id| {
                let bo = self.unigram_backoff[id as usize];
                let mut line = format!("{}\t{}", fmt_log(self.unigram[id as usize]), self.vocab.word(id));
                if bo != 0.0 && self.order > 1 {
                    line.push_str(&format!("\t{bo}"));
                }
                (self.vocab.word(id).to_string(), line)
            })
            .collect();
        uni.sort_unstable_by(|a, b| a.0.cmp(&b.0));

        let mut bi: Vec<(String, String)> = self
            .bigrams
            .iter()
            .map(|(g, e)| {
                let key = self.words_of(g);
                let mut line = format!("{}\t{key}", fmt_log(e.log10_prob.unwrap_or(IMPOSSIBLE_LOG10)));
                if e.log10_backoff != 0.0 && self.order > 2 {
                    line.push_str(&format!("\t{}", e.log10_backoff));
                }
                (key, line)
            })
            .collect();
        bi.sort_unstable_by(|a, b| a.0.cmp(&b.0));

        let mut tri: Vec<(String, String)> = self
            .trigrams
            .iter()
            .map(|(g, &p)| {
                let key = self.words_of(g);
                let line = format!("{}\t{key}", fmt_log(p));
                (key, line)
            })
            .collect();
        tri.sort_unstable_by(|a, b| a.0.cmp(&b.0));

        let sections = [uni, bi, tri];
        let sections = &sections[..self.order];
        writeln!(out, "\\data\\")?;
        for (i, s) in sections.iter().enumerate() {
            writeln!(out, "ngram {}={}", i + 1, s.len())?;
        }
        for (i, s) in sections.iter().enumerate() {
            writeln!(out)?;
            writeln!(out, "\\{}-grams:", i + 1)?;
            for (_, line) in s {
                writeln!(out, "{line}")?;
            }
        }
        writeln!(out)?;
        writeln!(out, "\\end\\")?;
        out.flush()?;
        Ok(())
    }

    /// Reads an ARPA model of order 1 to 3 together with its sidecar.
    /// `<unk>` and `</s>` must be present among the unigrams.
    pub fn read_arpa<R: BufRead>(input: R, sidecar: Option<&ModelSidecar>) -> Result<Self> {
        let mut expected: Vec<usize> = Vec::new();
        let mut section = 0usize;
        let mut in_data = false;
        let mut vocab = Vocab::default();
        let mut uni: Vec<(u32, f64, f64)> = Vec::new();
        let mut bigrams: FxHashMap<[u32; 2], BigramEntry> = FxHashMap::default();
        let mut trigrams: FxHashMap<[u32; 3], f64> = FxHashMap::default();
        let mut seen = [0usize; 3];
        let mut ended = false;

        for (i, line) in input.lines().enumerate() {
            let line_no = i + 1;
            let line = line?;
            let line = line.trim_end();
            if line.is_empty() {
                continue;
            }
            if line == "\\data\\" {
                in_data = true;
                continue;
            }
            if line == "\\end\\" {
                ended = true;
                break;
            }
            if let Some(n) = line.strip_prefix('\\').and_then(|l| l.strip_suffix("-grams:")) {
                section = n.parse().map_err(|_| Error::parse(line_no, "bad section header"))?;
                if section == 0 || section > expected.len() || section > 3 {
                    return Err(Error::parse(line_no, format!("unexpected section {section}")));
                }
                in_data = false;
                continue;
            }
            if in_data {
                let header = line
                    .strip_prefix("ngram ")
                    .and_then(|r| r.split_once('='))
                    .ok_or_else(|| Error::parse(line_no, "expected `ngram N=COUNT`"))?;
                let n: usize = header.0.trim().parse().map_err(|_| Error::parse(line_no, "bad order"))?;
                let c: usize = header.1.trim().parse().map_err(|_| Error::parse(line_no, "bad count"))?;
                if n != expected.len() + 1 {
                    return Err(Error::parse(line_no, "n-gram counts out of order"));
                }
                expected.push(c);
                continue;
            }
            if section == 0 {
                return Err(Error::parse(line_no, "entry outside of any section"));
            }
            let mut fields = line.split('\t');
            let prob: f64 = fields
                .next()
                .and_then(|p| p.parse().ok())
                .ok_or_else(|| Error::parse(line_no, "bad probability"))?;
            let words: Vec<&str> = fields
                .next()
                .ok_or_else(|| Error::parse(line_no, "missing n-gram"))?
                .split(' ')
                .collect();
            let backoff: f64 = match fields.next() {
                Some(b) => b.parse().map_err(|_| Error::parse(line_no, "bad backoff"))?,
                None => 0.0,
            };
            if words.len() != section || words.iter().any(|w| w.is_empty()) {
                return Err(Error::parse(line_no, "n-gram length does not match section"));
            }
            let ids: Vec<u32> = words.iter().map(|w| vocab.intern(w)).collect();
            seen[section - 1] += 1;
            match section {
                1 => uni.push((ids[0], prob, backoff)),
                2 => {
                    bigrams.insert(
                        [ids[0], ids[1]],
                        BigramEntry {
                            log10_prob: (prob > IMPOSSIBLE_LOG10).then_some(prob),
                            log10_backoff: backoff,
                        },
                    );
                }
                _ => {
                    trigrams.insert([ids[0], ids[1], ids[2]], prob);
                }
            }
        }
        if !ended {
            return Err(Error::parse(0, "missing \\end\\ marker"));
        }
        if expected.is_empty() {
            return Err(Error::parse(0, "missing \\data\\ section"));
        }
        for (n, &c) in expected.iter().enumerate() {
            if seen[n] != c {
                return Err(Error::parse(
                    0,
                    format!("header declares {c} {}-grams, found {}", n + 1, seen[n]),
                ));
            }
        }
        let mut unigram = vec![IMPOSSIBLE_LOG10; vocab.len()];
        let mut unigram_backoff = vec![0.0; vocab.len()];
        let mut has_unigram = vec![false; vocab.len()];
        for (id, p, b) in uni {
            unigram[id as usize] = p;
            unigram_backoff[id as usize] = b;
            has_unigram[id as usize] = true;
        }
        if has_unigram.iter().any(|h| !h) {
            return Err(Error::parse(0, "n-gram uses a word missing from the unigrams"));
        }
        let unk = vocab
            .get(UNK)
            .ok_or_else(|| Error::parse(0, "model has no <unk> unigram"))?;
        let eos = vocab
            .get(EOS)
            .ok_or_else(|| Error::parse(0, "model has no </s> unigram"))?;
        let bos = vocab.intern(BOS);
        if unigram.len() < vocab.len() {
            unigram.push(IMPOSSIBLE_LOG10);
            unigram_backoff.push(0.0);
        }

        let (discounts, tokenizer, warnings) = match sidecar {
            Some(s) => {
                if s.format != SIDECAR_FORMAT {
                    return Err(Error::Config(format!("unsupported model sidecar format {:?}", s.format)));
                }
                let tokenizer = s
                    .tokenizer_fingerprint
                    .as_deref()
                    .map(TokenizerConfig::from_fingerprint)
                    .transpose()?;
                (s.discounts.clone(), tokenizer, s.warnings.clone())
            }
            None => (Vec::new(), None, Vec::new()),
        };

        Ok(KneserNeyModel {
            vocab,
            bos,
            eos,
            unk,
            order: expected.len(),
            unigram,
            unigram_backoff,
            bigrams,
            trigrams,
            discounts,
            tokenizer,
            warnings,
        })
    }

    pub fn len_at(&self, order: usize) -> usize {
        match order {
            1 => self.vocab.len(),
            2 => self.bigrams.values().filter(|e| e.log10_prob.is_some()).count(),
            3 => self.trigrams.len(),
            _ => 0,
        }
    }
}
