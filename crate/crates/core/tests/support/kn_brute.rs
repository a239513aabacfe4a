//! Naive string-keyed interpolated Kneser-Ney trigram evaluator, written
//! directly from the recursion with no backoff-form precomputation.

#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};

pub struct BruteKn {
    pub vocab: BTreeSet<String>,
    tri: BTreeMap<(String, String, String), u64>,
    abi: BTreeMap<(String, String), u64>,
    auni: BTreeMap<String, u64>,
    /// discounts[order-1][band] for counts 1, 2 and 3+.
    discounts: [[f64; 3]; 3],
}

fn band(d: &[f64; 3], c: u64) -> f64 {
    match c {
        0 => 0.0,
        1 => d[0],
        2 => d[1],
        _ => d[2],
    }
}

impl BruteKn {
    pub fn new(docs: &[Vec<&str>], discounts: [[f64; 3]; 3]) -> Self {
        let mut tri = BTreeMap::new();
        let mut bi = BTreeMap::new();
        let mut vocab: BTreeSet<String> = ["</s>", "<unk>"].iter().map(|s| s.to_string()).collect();
        for d in docs {
            let mut p = vec!["<s>".to_string(), "<s>".to_string()];
            p.extend(d.iter().map(|s| s.to_string()));
            p.push("</s>".to_string());
            vocab.extend(d.iter().map(|s| s.to_string()));
            for w in p.windows(3) {
                if w[2] != "<s>" {
                    *tri.entry((w[0].clone(), w[1].clone(), w[2].clone())).or_insert(0) += 1;
                }
            }
            for w in p.windows(2) {
                if w[1] != "<s>" {
                    *bi.entry((w[0].clone(), w[1].clone())).or_insert(0) += 1;
                }
            }
        }
        let mut abi = BTreeMap::new();
        for (k, &v) in &bi {
            let a = if k.0 == "<s>" {
                v
            } else {
                tri.keys()
                    .filter(|t: &&(String, String, String)| t.1 == k.0 && t.2 == k.1)
                    .map(|t| t.0.clone())
                    .collect::<BTreeSet<_>>()
                    .len() as u64
            };
            abi.insert(k.clone(), a);
        }
        let mut auni = BTreeMap::new();
        for k in abi.keys() {
            let left: BTreeSet<&String> = abi.keys().filter(|b| b.1 == k.1).map(|b| &b.0).collect();
            auni.insert(k.1.clone(), left.len() as u64);
        }
        BruteKn {
            vocab,
            tri,
            abi,
            auni,
            discounts,
        }
    }

    pub fn fixed(docs: &[Vec<&str>], d: f64) -> Self {
        Self::new(docs, [[d; 3]; 3])
    }

    pub fn p1(&self, w: &str) -> f64 {
        let d = &self.discounts[0];
        let total: u64 = self.auni.values().sum();
        let freed: f64 = self.auni.values().map(|&c| band(d, c)).sum();
        let a = self.auni.get(w).copied().unwrap_or(0);
        (a as f64 - band(d, a)).max(0.0) / total as f64 + freed / total as f64 / self.vocab.len() as f64
    }

    pub fn p2(&self, w: &str, v: &str) -> f64 {
        let d = &self.discounts[1];
        let ks: Vec<(&(String, String), &u64)> = self.abi.iter().filter(|(k, _)| k.0 == v).collect();
        if ks.is_empty() {
            return self.p1(w);
        }
        let total: u64 = ks.iter().map(|(_, &c)| c).sum();
        let freed: f64 = ks.iter().map(|(_, &c)| band(d, c)).sum();
        let a = self.abi.get(&(v.to_string(), w.to_string())).copied().unwrap_or(0);
        (a as f64 - band(d, a)).max(0.0) / total as f64 + freed / total as f64 * self.p1(w)
    }

    pub fn p3(&self, w: &str, u: &str, v: &str) -> f64 {
        let d = &self.discounts[2];
        let ks: Vec<(&(String, String, String), &u64)> =
            self.tri.iter().filter(|(k, _)| k.0 == u && k.1 == v).collect();
        if ks.is_empty() {
            return self.p2(w, v);
        }
        let total: u64 = ks.iter().map(|(_, &c)| c).sum();
        let freed: f64 = ks.iter().map(|(_, &c)| band(d, c)).sum();
        let a = self
            .tri
            .get(&(u.to_string(), v.to_string(), w.to_string()))
            .copied()
            .unwrap_or(0);
        (a as f64 - band(d, a)).max(0.0) / total as f64 + freed / total as f64 * self.p2(w, v)
    }

    fn known(&self, w: &str) -> String {
        if w == "<s>" || self.vocab.contains(w) {
            w.to_string()
        } else {
            "<unk>".to_string()
        }
    }

    /// Natural-log probability of a document including `</s>`.
    pub fn log_prob(&self, doc: &[&str]) -> f64 {
        let mut ctx = ["<s>".to_string(), "<s>".to_string()];
        let mut lp = 0.0;
        for w in doc.iter().copied().chain(std::iter::once("</s>")) {
            let w = self.known(w);
            lp += self.p3(&w, &ctx[0], &ctx[1]).ln();
            ctx = [ctx[1].clone(), w];
        }
        lp
    }

    pub fn perplexity(&self, docs: &[Vec<&str>]) -> f64 {
        let lp: f64 = docs.iter().map(|d| self.log_prob(d)).sum();
        let n: usize = docs.iter().map(|d| d.len() + 1).sum();
        (-lp / n as f64).exp()
    }
}
