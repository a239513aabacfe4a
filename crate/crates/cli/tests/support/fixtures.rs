//! Synthetic corpus generators shared by the CLI test targets.

#![allow(dead_code)]

use std::io::{BufWriter, Write};
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const LETTERS: &[u8] = b"abcdefghijklmnopqrstuvwxyz";

/// Lowercase alphabetic word for index `i`, starting with `lead` so that
/// generators with different leads never share a type.
pub fn word(lead: char, mut i: usize) -> String {
    let mut w = String::new();
    w.push(lead);
    loop {
        w.push(LETTERS[i % 26] as char);
        i /= 26;
        if i == 0 {
            break;
        }
    }
    w
}

/// Zipf-distributed words with a sticky successor bias, giving realistic
/// repetition at every n-gram order.
pub struct Generator {
    vocab: Vec<String>,
    cdf: Vec<f64>,
}

impl Generator {
    pub fn new(lead: char, size: usize) -> Self {
        let weights: Vec<f64> = (1..=size).map(|r| 1.0 / (r as f64).powf(1.05)).collect();
        let total: f64 = weights.iter().sum();
        let mut acc = 0.0;
        let cdf = weights
            .iter()
            .map(|w| {
                acc += w / total;
                acc
            })
            .collect();
        Generator {
            vocab: (0..size).map(|i| word(lead, i)).collect(),
            cdf,
        }
    }

    fn zipf(&self, rng: &mut ChaCha8Rng) -> usize {
        let u: f64 = rng.gen();
        self.cdf.partition_point(|&c| c < u).min(self.vocab.len() - 1)
    }

    pub fn document(&self, rng: &mut ChaCha8Rng, len: usize, out: &mut String) {
        let mut prev = self.zipf(rng);
        for k in 0..len {
            let next = if k > 0 && rng.gen_bool(0.4) {
                (prev * 31 + rng.gen_range(0..4)) % self.vocab.len().min(2000)
            } else {
                self.zipf(rng)
            };
            if k > 0 {
                out.push(' ');
            }
            out.push_str(&self.vocab[next]);
            prev = next;
        }
    }

    /// Writes about `tokens` tokens as one document per line.
    pub fn write_corpus(&self, path: &Path, seed: u64, tokens: usize) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut w = BufWriter::new(std::fs::File::create(path).unwrap());
        let mut written = 0;
        let mut line = String::new();
        while written < tokens {
            let len = rng.gen_range(5..=40).min(tokens - written);
            line.clear();
            self.document(&mut rng, len, &mut line);
            line.push('\n');
            w.write_all(line.as_bytes()).unwrap();
            written += len;
        }
        w.flush().unwrap();
    }
}
