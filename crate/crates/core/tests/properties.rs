use corpus_affinity::analysis::pearson_r;
use corpus_affinity::ngram::{count_ngrams, count_ngrams_parallel, merge_tables, BoundaryPolicy, Distribution, Pooling};
use corpus_affinity::{jsd, TokenStream};
use proptest::prelude::*;

fn docs_strategy() -> impl Strategy<Value = Vec<Vec<String>>> {
    prop::collection::vec(prop::collection::vec("[a-e]", 0..12), 0..12)
}

fn streams(docs: &[Vec<String>]) -> Vec<TokenStream> {
    docs.iter().map(|d| TokenStream::from_tokens(d.iter().cloned())).collect()
}

fn dist_strategy() -> impl Strategy<Value = Distribution> {
    prop::collection::btree_map("[a-h]{1,2}", 1u32..100, 1..10).prop_map(|m| {
        let total: u32 = m.values().sum();
        Distribution::new(Pooling::Order1, m.into_iter().map(|(k, v)| (k, v as f64 / total as f64))).unwrap()
    })
}

fn direct_jsd(p: &Distribution, q: &Distribution) -> f64 {
    let mut keys: Vec<&str> = p.terms().iter().chain(q.terms()).map(|(k, _)| k.as_str()).collect();
    keys.sort();
    keys.dedup();
    let kl = |a: &Distribution, m: &dyn Fn(&str) -> f64| -> f64 {
        keys.iter()
            .map(|k| {
                let x = a.prob(k);
                if x > 0.0 {
                    x * (x / m(k)).log2()
                } else {
                    0.0
                }
            })
            .sum()
    };
    let m = |k: &str| 0.5 * (p.prob(k) + q.prob(k));
    0.5 * kl(p, &m) + 0.5 * kl(q, &m)
}

proptest! {
    #[test]
    fn counting_totals_match_token_counts(docs in docs_strategy()) {
        let s = streams(&docs);
        let tokens: usize = docs.iter().map(Vec::len).sum();
        let plain = count_ngrams(&s, 3, BoundaryPolicy::None).unwrap();
        prop_assert_eq!(plain.total(1), tokens as u64);
        for n in 2..=3u64 {
            let expected: u64 = docs.iter().map(|d| (d.len() as u64).saturating_sub(n - 1)).sum();
            prop_assert_eq!(plain.total(n as usize), expected);
        }
        let marked = count_ngrams(&s, 3, BoundaryPolicy::SentenceMarkers).unwrap();
        prop_assert_eq!(marked.total(1), tokens as u64);
        for n in 2..=3usize {
            // Two leading <s> pads and one </s> for every order.
            let expected: usize = docs.iter().map(|d| d.len() + 4 - n).sum();
            prop_assert_eq!(marked.total(n), expected as u64);
        }
    }

    #[test]
    fn merge_is_associative_and_matches_single_pass(
        a in docs_strategy(), b in docs_strategy(), c in docs_strategy()
    ) {
        let count = |d: &[Vec<String>]| count_ngrams(&streams(d), 3, BoundaryPolicy::SentenceMarkers).unwrap();
        let left = merge_tables(merge_tables(count(&a), count(&b)).unwrap(), count(&c)).unwrap();
        let right = merge_tables(count(&a), merge_tables(count(&b), count(&c)).unwrap()).unwrap();
        prop_assert!(left == right);
        let all: Vec<Vec<String>> = a.iter().chain(&b).chain(&c).cloned().collect();
        prop_assert!(left == count(&all));
        let parallel = count_ngrams_parallel(&streams(&all), 3, BoundaryPolicy::SentenceMarkers).unwrap();
        prop_assert!(parallel == left);
    }

    #[test]
    fn jsd_symmetric_and_bounded(p in dist_strategy(), q in dist_strategy()) {
        let pq = jsd(&p, &q).unwrap();
        let qp = jsd(&q, &p).unwrap();
        prop_assert_eq!(pq.to_bits(), qp.to_bits());
        prop_assert!((0.0..=1.0).contains(&pq));
        prop_assert_eq!(jsd(&p, &p).unwrap(), 0.0);
        prop_assert!((pq - direct_jsd(&p, &q)).abs() < 1e-12);
    }

    #[test]
    fn pearson_affine_invariance(
        pairs in prop::collection::vec((-1e3f64..1e3, -1e3f64..1e3), 3..30),
        a in 0.1f64..10.0, b in -100.0f64..100.0, flip in any::<bool>()
    ) {
        let x: Vec<f64> = pairs.iter().map(|p| p.0).collect();
        let y: Vec<f64> = pairs.iter().map(|p| p.1).collect();
        let r = match pearson_r(&x, &y) {
            Ok(r) => r,
            Err(_) => return Ok(()),
        };
        let sign = if flip { -1.0 } else { 1.0 };
        let x2: Vec<f64> = x.iter().map(|v| sign * a * v + b).collect();
        let r2 = pearson_r(&x2, &y).unwrap();
        prop_assert!((r2 - sign * r).abs() < 1e-12, "{} vs {}", r, r2);
    }
}
