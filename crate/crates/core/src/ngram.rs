//! N-gram counting (orders 1 to 3), table merging, the count-table text
//! format, and conversion of counts into term distributions.

use std::fmt;
use std::io::{BufRead, Write};
use std::str::FromStr;

use rayon::prelude::*;
use rustc_hash::FxHashMap;
use serde::{Deserialize, Serialize};

use crate::corpus::TokenStream;
use crate::error::{Error, Result};

pub const BOS: &str = "<s>";
pub const EOS: &str = "</s>";
pub const MAX_ORDER: usize = 3;

const COUNTS_MAGIC: &str = "corpus-affinity-counts v1";

/// Word ids of an n-gram; positions past the order hold [`PAD`].
pub type Gram = [u32; MAX_ORDER];
pub const PAD: u32 = u32::MAX;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BoundaryPolicy {
    None,
    #[serde(rename = "markers")]
    SentenceMarkers,
}

impl fmt::Display for BoundaryPolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            BoundaryPolicy::None => "none",
            BoundaryPolicy::SentenceMarkers => "markers",
        })
    }
}

impl FromStr for BoundaryPolicy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "none" => Ok(BoundaryPolicy::None),
            "markers" | "sentence-markers" => Ok(BoundaryPolicy::SentenceMarkers),
            other => Err(Error::Argument(format!(
                "unknown boundary policy {other:?} (expected none or markers)"
            ))),
        }
    }
}

/// String interner mapping words to dense ids.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Vocab {
    words: Vec<String>,
    index: FxHashMap<String, u32>,
}

impl Vocab {
    pub fn intern(&mut self, word: &str) -> u32 {
        if let Some(&id) = self.index.get(word) {
            return id;
        }
        let id = u32::try_from(self.words.len()).expect("vocabulary exceeds u32 ids");
        assert!(id != PAD, "vocabulary exceeds u32 ids");
        self.words.push(word.to_string());
        self.index.insert(word.to_string(), id);
        id
    }

    pub fn get(&self, word: &str) -> Option<u32> {
        self.index.get(word).copied()
    }

    pub fn word(&self, id: u32) -> &str {
        &self.words[id as usize]
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    pub fn words(&self) -> &[String] {
        &self.words
    }
}

/// Counts of all 1..=`max_order` grams of a corpus.
///
/// With [`BoundaryPolicy::SentenceMarkers`], orders above one are counted over
/// the document padded with `max_order - 1` leading `<s>` and one trailing
/// `</s>`; unigrams are always counted over the bare tokens.
#[derive(Debug, Clone)]
pub struct NgramTable {
    max_order: usize,
    boundary: BoundaryPolicy,
    vocab: Vocab,
    counts: Vec<FxHashMap<Gram, u64>>,
    totals: Vec<u64>,
}

impl NgramTable {
    pub fn new(max_order: usize, boundary: BoundaryPolicy) -> Result<Self> {
        if !(1..=MAX_ORDER).contains(&max_order) {
            return Err(Error::Argument(format!(
                "max_order must be in [1, {MAX_ORDER}], got {max_order}"
            )));
        }
        Ok(NgramTable {
            max_order,
            boundary,
            vocab: Vocab::default(),
            counts: vec![FxHashMap::default(); max_order],
            totals: vec![0; max_order],
        })
    }

    pub fn max_order(&self) -> usize {
        self.max_order
    }

    pub fn boundary(&self) -> BoundaryPolicy {
        self.boundary
    }

    pub fn vocab(&self) -> &Vocab {
        &self.vocab
    }

    /// Sum of counts at `order` (1-based).
    pub fn total(&self, order: usize) -> u64 {
        self.totals.get(order.wrapping_sub(1)).copied().unwrap_or(0)
    }

    /// Number of distinct n-grams at `order`.
    pub fn distinct(&self, order: usize) -> usize {
        self.counts.get(order.wrapping_sub(1)).map_or(0, |m| m.len())
    }

    /// Raw id-keyed counts for `order`.
    pub fn order_counts(&self, order: usize) -> &FxHashMap<Gram, u64> {
        &self.counts[order - 1]
    }

    pub fn add_document(&mut self, tokens: &[String]) {
        let ids: Vec<u32> = tokens.iter().map(|t| self.vocab.intern(t)).collect();
        for &id in &ids {
            *self.counts[0].entry([id, PAD, PAD]).or_insert(0) += 1;
        }
        self.totals[0] += ids.len() as u64;
        if self.max_order == 1 {
            return;
        }

        let padded: Vec<u32> = match self.boundary {
            BoundaryPolicy::None => ids,
            BoundaryPolicy::SentenceMarkers => {
                let bos = self.vocab.intern(BOS);
                let eos = self.vocab.intern(EOS);
                let mut p = vec![bos; self.max_order - 1];
                p.extend_from_slice(&ids);
                p.push(eos);
                p
            }
        };
        for n in 2..=self.max_order {
            let map = &mut self.counts[n - 1];
            let mut added = 0;
            for window in padded.windows(n) {
                let mut gram = [PAD; MAX_ORDER];
                gram[..n].copy_from_slice(window);
                *map.entry(gram).or_insert(0) += 1;
                added += 1;
            }
            self.totals[n - 1] += added;
        }
    }

    fn add_gram(&mut self, order: usize, gram: Gram, count: u64) {
        *self.counts[order - 1].entry(gram).or_insert(0) += count;
        self.totals[order - 1] += count;
    }

    /// Adds every count of `other` into `self`.
    pub fn merge_from(&mut self, other: &NgramTable) -> Result<()> {
        self.check_compatible(other)?;
        let remap: Vec<u32> = other.vocab.words.iter().map(|w| self.vocab.intern(w)).collect();
        for (order, map) in other.counts.iter().enumerate() {
            for (gram, &count) in map {
                let mut g = [PAD; MAX_ORDER];
                for (dst, &src) in g.iter_mut().zip(&gram[..=order]) {
                    *dst = remap[src as usize];
                }
                self.add_gram(order + 1, g, count);
            }
        }
        Ok(())
    }

    fn check_compatible(&self, other: &NgramTable) -> Result<()> {
        if self.max_order != other.max_order || self.boundary != other.boundary {
            return Err(Error::Argument(format!(
                "cannot merge tables with different configurations (max_order {} / {}, boundary {} / {})",
                self.max_order, other.max_order, self.boundary, other.boundary
            )));
        }
        Ok(())
    }

    pub fn gram_to_string(&self, order: usize, gram: &Gram) -> String {
        let mut s = String::new();
        for (i, &id) in gram[..order].iter().enumerate() {
            if i > 0 {
                s.push(' ');
            }
            s.push_str(self.vocab.word(id));
        }
        s
    }

    fn parse_gram(&self, ngram: &str) -> Option<(usize, Gram)> {
        let mut gram = [PAD; MAX_ORDER];
        let mut n = 0;
        for word in ngram.split(' ') {
            if n == MAX_ORDER {
                return None;
            }
            gram[n] = self.vocab.get(word)?;
            n += 1;
        }
        Some((n, gram))
    }

    /// Count of a space-joined n-gram; zero when absent.
    pub fn count(&self, ngram: &str) -> u64 {
        match self.parse_gram(ngram) {
            Some((n, gram)) if n <= self.max_order => {
                self.counts[n - 1].get(&gram).copied().unwrap_or(0)
            }
            _ => 0,
        }
    }

    /// All n-grams of `order` with their counts, sorted bytewise by n-gram.
    pub fn sorted_entries(&self, order: usize) -> Vec<(String, u64)> {
        let mut entries: Vec<(String, u64)> = self.counts[order - 1]
            .iter()
            .map(|(g, &c)| (self.gram_to_string(order, g), c))
            .collect();
        entries.sort_unstable_by(|a, b| a.0.cmp(&b.0));
        entries
    }

    pub fn write_counts<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(
            out,
            "{COUNTS_MAGIC} max_order={} boundary={}",
            self.max_order, self.boundary
        )?;
        for order in 1..=self.max_order {
            for (ngram, count) in self.sorted_entries(order) {
                writeln!(out, "{order}\t{count}\t{ngram}")?;
            }
        }
        out.flush()?;
        Ok(())
    }

    pub fn read_counts<R: BufRead>(input: R) -> Result<Self> {
        let mut lines = input.lines();
        let header = lines
            .next()
            .ok_or_else(|| Error::parse(1, "missing header"))??;
        let rest = header
            .strip_prefix(COUNTS_MAGIC)
            .ok_or_else(|| Error::parse(1, format!("expected header {COUNTS_MAGIC:?}")))?;
        let mut max_order = None;
        let mut boundary = None;
        for field in rest.split_whitespace() {
            match field.split_once('=') {
                Some(("max_order", v)) => {
                    max_order = Some(v.parse::<usize>().map_err(|e| Error::parse(1, e.to_string()))?)
                }
                Some(("boundary", v)) => {
                    boundary = Some(v.parse::<BoundaryPolicy>().map_err(|e| Error::parse(1, e.to_string()))?)
                }
                _ => return Err(Error::parse(1, format!("unexpected header field {field:?}"))),
            }
        }
        let (Some(max_order), Some(boundary)) = (max_order, boundary) else {
            return Err(Error::parse(1, "header needs max_order and boundary"));
        };
        let mut table = NgramTable::new(max_order, boundary).map_err(|e| Error::parse(1, e.to_string()))?;

        for (i, line) in lines.enumerate() {
            let line_no = i + 2;
            let line = line?;
            let mut parts = line.splitn(3, '\t');
            let (Some(order), Some(count), Some(ngram)) = (parts.next(), parts.next(), parts.next())
            else {
                return Err(Error::parse(line_no, "expected ORDER<TAB>COUNT<TAB>NGRAM"));
            };
            let order: usize = order.parse().map_err(|_| Error::parse(line_no, "bad order"))?;
            let count: u64 = count.parse().map_err(|_| Error::parse(line_no, "bad count"))?;
            let words: Vec<&str> = ngram.split(' ').collect();
            if order == 0 || order > max_order || words.len() != order || count == 0 {
                return Err(Error::parse(line_no, "n-gram does not match its order"));
            }
            if words.iter().any(|w| w.is_empty()) {
                return Err(Error::parse(line_no, "empty token in n-gram"));
            }
            let mut gram = [PAD; MAX_ORDER];
            for (slot, w) in gram.iter_mut().zip(&words) {
                *slot = table.vocab.intern(w);
            }
            if table.counts[order - 1].contains_key(&gram) {
                return Err(Error::parse(line_no, format!("duplicate n-gram {ngram:?}")));
            }
            table.add_gram(order, gram, count);
        }
        Ok(table)
    }
}

impl PartialEq for NgramTable {
    /// Tables are equal when they hold the same n-gram strings with the same
    /// counts, regardless of internal id assignment.
    fn eq(&self, other: &Self) -> bool {
        if self.max_order != other.max_order
            || self.boundary != other.boundary
            || self.totals != other.totals
            || self.counts.iter().zip(&other.counts).any(|(a, b)| a.len() != b.len())
        {
            return false;
        }
        let remap: Vec<Option<u32>> = self.vocab.words.iter().map(|w| other.vocab.get(w)).collect();
        self.counts.iter().enumerate().all(|(order, map)| {
            map.iter().all(|(gram, &count)| {
                let mut g = [PAD; MAX_ORDER];
                for (dst, &src) in g.iter_mut().zip(&gram[..=order]) {
                    match remap[src as usize] {
                        Some(id) => *dst = id,
                        None => return false,
                    }
                }
                other.counts[order].get(&g) == Some(&count)
            })
        })
    }
}

/// Counts every contiguous n-gram of `docs` for orders `1..=max_order`.
pub fn count_ngrams<'a, I>(docs: I, max_order: usize, boundary: BoundaryPolicy) -> Result<NgramTable>
where
    I: IntoIterator<Item = &'a TokenStream>,
{
    let mut table = NgramTable::new(max_order, boundary)?;
    for doc in docs {
        table.add_document(doc.tokens());
    }
    Ok(table)
}

/// Parallel [`count_ngrams`]: documents are sharded across the rayon pool and
/// the shard tables merged. Counts are identical to the sequential result.
pub fn count_ngrams_parallel(
    docs: &[TokenStream],
    max_order: usize,
    boundary: BoundaryPolicy,
) -> Result<NgramTable> {
    let empty = NgramTable::new(max_order, boundary)?;
    let shards = rayon::current_num_threads().max(1);
    if shards == 1 || docs.len() < 2 {
        return count_ngrams(docs, max_order, boundary);
    }
    let chunk = docs.len().div_ceil(shards * 2).max(1);
    docs.par_chunks(chunk)
        .map(|c| count_ngrams(c, max_order, boundary))
        .try_reduce(
            || empty.clone(),
            |a, b| merge_tables(a, b),
        )
}

/// Sums two tables n-gram by n-gram.
pub fn merge_tables(a: NgramTable, b: NgramTable) -> Result<NgramTable> {
    a.check_compatible(&b)?;
    let (mut big, small) = if a.distinct_total() >= b.distinct_total() {
        (a, b)
    } else {
        (b, a)
    };
    big.merge_from(&small)?;
    Ok(big)
}

impl NgramTable {
    fn distinct_total(&self) -> usize {
        self.counts.iter().map(|m| m.len()).sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Pooling {
    #[serde(rename = "1")]
    Order1,
    #[serde(rename = "2")]
    Order2,
    #[serde(rename = "3")]
    Order3,
    #[serde(rename = "pooled")]
    Pooled,
}

impl Pooling {
    fn orders(self, max_order: usize) -> std::ops::RangeInclusive<usize> {
        match self {
            Pooling::Order1 => 1..=1,
            Pooling::Order2 => 2..=2,
            Pooling::Order3 => 3..=3,
            Pooling::Pooled => 1..=max_order.min(MAX_ORDER),
        }
    }
}

impl fmt::Display for Pooling {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Pooling::Order1 => "1",
            Pooling::Order2 => "2",
            Pooling::Order3 => "3",
            Pooling::Pooled => "pooled",
        })
    }
}

impl FromStr for Pooling {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "1" | "order-1" => Ok(Pooling::Order1),
            "2" | "order-2" => Ok(Pooling::Order2),
            "3" | "order-3" => Ok(Pooling::Order3),
            "pooled" | "pooled-1-to-3" => Ok(Pooling::Pooled),
            other => Err(Error::Argument(format!(
                "unknown pooling {other:?} (expected 1, 2, 3 or pooled)"
            ))),
        }
    }
}

/// A probability distribution over n-gram terms, stored sorted by term.
#[derive(Debug, Clone, PartialEq)]
pub struct Distribution {
    pooling: Pooling,
    terms: Vec<(String, f64)>,
}

impl Distribution {
    /// Builds a distribution from (term, probability) pairs. Terms must be
    /// unique, probabilities in (0, 1] and summing to one within 1e-9.
    pub fn new(pooling: Pooling, terms: impl IntoIterator<Item = (String, f64)>) -> Result<Self> {
        let mut terms: Vec<(String, f64)> = terms.into_iter().collect();
        if terms.is_empty() {
            return Err(Error::EmptyCorpus("distribution has empty support".into()));
        }
        terms.sort_unstable_by(|a, b| a.0.cmp(&b.0));
        if terms.windows(2).any(|w| w[0].0 == w[1].0) {
            return Err(Error::Argument("duplicate term in distribution".into()));
        }
        if let Some((t, p)) = terms.iter().find(|(_, p)| !(*p > 0.0 && *p <= 1.0)) {
            return Err(Error::Argument(format!("probability of {t:?} out of (0, 1]: {p}")));
        }
        let sum: f64 = terms.iter().map(|(_, p)| p).sum();
        if (sum - 1.0).abs() > 1e-9 {
            return Err(Error::Argument(format!("probabilities sum to {sum}, not 1")));
        }
        Ok(Distribution { pooling, terms })
    }

    pub fn pooling(&self) -> Pooling {
        self.pooling
    }

    /// Terms with probabilities, sorted bytewise by term.
    pub fn terms(&self) -> &[(String, f64)] {
        &self.terms
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn prob(&self, term: &str) -> f64 {
        self.terms
            .binary_search_by(|(t, _)| t.as_str().cmp(term))
            .map_or(0.0, |i| self.terms[i].1)
    }

    /// Keeps the `k` most probable terms (ties by term) and renormalizes.
    /// This is an approximation intended for very large supports.
    pub fn top_k(&self, k: usize) -> Result<Distribution> {
        if k == 0 {
            return Err(Error::Argument("top-k must be at least 1".into()));
        }
        if k >= self.terms.len() {
            return Ok(self.clone());
        }
        let mut ranked: Vec<&(String, f64)> = self.terms.iter().collect();
        ranked.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
        ranked.truncate(k);
        let mass: f64 = {
            let mut kept: Vec<f64> = ranked.iter().map(|(_, p)| *p).collect();
            kept.sort_by(f64::total_cmp);
            kept.iter().sum()
        };
        let mut terms: Vec<(String, f64)> =
            ranked.into_iter().map(|(t, p)| (t.clone(), p / mass)).collect();
        terms.sort_unstable_by(|a, b| a.0.cmp(&b.0));
        Ok(Distribution {
            pooling: self.pooling,
            terms,
        })
    }
}

/// Relative frequencies of the orders selected by `pooling`. Pooled mode
/// normalizes jointly over all orders `1..=min(max_order, 3)`.
pub fn to_distribution(table: &NgramTable, pooling: Pooling) -> Result<Distribution> {
    let orders = pooling.orders(table.max_order);
    if *orders.end() > table.max_order {
        return Err(Error::Argument(format!(
            "pooling {pooling} needs order {} but table has max_order {}",
            orders.end(),
            table.max_order
        )));
    }
    let total: u64 = orders.clone().map(|n| table.total(n)).sum();
    if total == 0 {
        return Err(Error::EmptyCorpus(format!(
            "no n-grams for pooling {pooling}"
        )));
    }
    let denom = total as f64;
    let mut terms = Vec::with_capacity(orders.clone().map(|n| table.distinct(n)).sum());
    for n in orders {
        for (gram, &count) in &table.counts[n - 1] {
            terms.push((table.gram_to_string(n, gram), count as f64 / denom));
        }
    }
    terms.sort_unstable_by(|a, b| a.0.cmp(&b.0));
    Ok(Distribution { pooling, terms })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ts(words: &[&str]) -> TokenStream {
        TokenStream::from_tokens(words.iter().copied())
    }

    #[test]
    fn counts_without_boundaries() {
        let docs = [ts(&["a", "b", "a"])];
        let t = count_ngrams(&docs, 2, BoundaryPolicy::None).unwrap();
        assert_eq!(t.sorted_entries(1), [("a".into(), 2), ("b".into(), 1)]);
        assert_eq!(t.sorted_entries(2), [("a b".into(), 1), ("b a".into(), 1)]);
        assert_eq!((t.total(1), t.total(2)), (3, 2));
    }

    #[test]
    fn empty_stream_has_zero_totals() {
        let t = count_ngrams(&[], 3, BoundaryPolicy::SentenceMarkers).unwrap();
        assert_eq!((t.total(1), t.total(2), t.total(3)), (0, 0, 0));
    }

    #[test]
    fn sentence_markers_pad_higher_orders_only() {
        let docs = [ts(&["a"])];
        let t = count_ngrams(&docs, 2, BoundaryPolicy::SentenceMarkers).unwrap();
        assert_eq!(t.sorted_entries(1), [("a".into(), 1)]);
        assert_eq!(t.sorted_entries(2), [("<s> a".into(), 1), ("a </s>".into(), 1)]);
        assert_eq!(t.count("<s>"), 0);

        let t3 = count_ngrams(&docs, 3, BoundaryPolicy::SentenceMarkers).unwrap();
        assert_eq!(t3.count("<s> <s> a"), 1);
        assert_eq!(t3.count("<s> a </s>"), 1);
        assert_eq!(t3.total(2), 3);
    }

    #[test]
    fn rejects_bad_order() {
        assert!(matches!(NgramTable::new(0, BoundaryPolicy::None), Err(Error::Argument(_))));
        assert!(matches!(NgramTable::new(4, BoundaryPolicy::None), Err(Error::Argument(_))));
    }

    #[test]
    fn merge_sums_counts() {
        let a = count_ngrams(&[ts(&["a"])], 1, BoundaryPolicy::None).unwrap();
        let b = count_ngrams(&[ts(&["a", "a", "b"])], 1, BoundaryPolicy::None).unwrap();
        let m = merge_tables(a.clone(), b).unwrap();
        assert_eq!(m.sorted_entries(1), [("a".into(), 3), ("b".into(), 1)]);
        let empty = NgramTable::new(1, BoundaryPolicy::None).unwrap();
        assert_eq!(merge_tables(a.clone(), empty).unwrap(), a);
    }

    #[test]
    fn merge_rejects_mismatch() {
        let a = NgramTable::new(1, BoundaryPolicy::None).unwrap();
        let b = NgramTable::new(2, BoundaryPolicy::None).unwrap();
        let c = NgramTable::new(1, BoundaryPolicy::SentenceMarkers).unwrap();
        assert!(merge_tables(a.clone(), b).is_err());
        assert!(merge_tables(a, c).is_err());
    }

    #[test]
    fn distributions() {
        let t = count_ngrams(&[ts(&["a", "b", "a", "c", "a"])], 1, BoundaryPolicy::None).unwrap();
        let d = to_distribution(&t, Pooling::Order1).unwrap();
        assert_eq!(d.prob("a"), 0.6);

        let t = count_ngrams(&[ts(&["a"])], 1, BoundaryPolicy::None).unwrap();
        let d = to_distribution(&t, Pooling::Pooled).unwrap();
        assert_eq!(d.terms(), [("a".to_string(), 1.0)]);

        let t = count_ngrams(&[ts(&["a", "b"])], 2, BoundaryPolicy::None).unwrap();
        let d = to_distribution(&t, Pooling::Pooled).unwrap();
        for term in ["a", "b", "a b"] {
            assert_eq!(d.prob(term), 1.0 / 3.0);
        }
    }

    #[test]
    fn distribution_unigram_quarters() {
        let t = count_ngrams(&[ts(&["a", "b", "a", "c"])], 1, BoundaryPolicy::None).unwrap();
        let d = to_distribution(&t, Pooling::Order1).unwrap();
        assert_eq!(
            d.terms(),
            [("a".to_string(), 0.5), ("b".to_string(), 0.25), ("c".to_string(), 0.25)]
        );
    }

    #[test]
    fn distribution_errors() {
        let t = count_ngrams(&[ts(&["a"])], 1, BoundaryPolicy::None).unwrap();
        assert!(matches!(to_distribution(&t, Pooling::Order2), Err(Error::Argument(_))));
        let t = count_ngrams(&[ts(&["a"])], 2, BoundaryPolicy::None).unwrap();
        assert!(matches!(to_distribution(&t, Pooling::Order2), Err(Error::EmptyCorpus(_))));
        assert!(Distribution::new(Pooling::Order1, vec![("a".into(), 0.5)]).is_err());
    }

    #[test]
    fn top_k_renormalizes() {
        let d = Distribution::new(
            Pooling::Order1,
            vec![("a".into(), 0.5), ("b".into(), 0.3), ("c".into(), 0.2)],
        )
        .unwrap();
        let k = d.top_k(2).unwrap();
        assert_eq!(k.len(), 2);
        assert!((k.prob("a") - 0.625).abs() < 1e-15);
        assert_eq!(k.prob("c"), 0.0);
    }

    #[test]
    fn counts_file_round_trip() {
        let docs = [ts(&["x", "y", "x"]), ts(&["y"])];
        let t = count_ngrams(&docs, 3, BoundaryPolicy::SentenceMarkers).unwrap();
        let mut buf = Vec::new();
        t.write_counts(&mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("corpus-affinity-counts v1 max_order=3 boundary=markers\n"));
        assert!(text.contains("\n1\t2\tx\n"));
        let back = NgramTable::read_counts(&buf[..]).unwrap();
        assert_eq!(back, t);
        let mut again = Vec::new();
        back.write_counts(&mut again).unwrap();
        assert_eq!(again, buf);
    }

    #[test]
    fn counts_file_errors() {
        assert!(NgramTable::read_counts("nope\n".as_bytes()).is_err());
        let bad = "corpus-affinity-counts v1 max_order=2 boundary=none\n2\t1\ta\n";
        assert!(matches!(NgramTable::read_counts(bad.as_bytes()), Err(Error::Parse { line: 2, .. })));
        let dup = "corpus-affinity-counts v1 max_order=1 boundary=none\n1\t1\ta\n1\t2\ta\n";
        assert!(NgramTable::read_counts(dup.as_bytes()).is_err());
    }
}
