mod support;

use corpus_affinity::lm::ModelSidecar;
use corpus_affinity::ngram::{count_ngrams, BoundaryPolicy};
use corpus_affinity::{train_kn, DiscountMode, KnConfig, KneserNeyModel, TokenStream};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use support::kn_brute::BruteKn;

fn streams(docs: &[Vec<&str>]) -> Vec<TokenStream> {
    docs.iter().map(|d| TokenStream::from_tokens(d.iter().copied())).collect()
}

fn train(docs: &[Vec<&str>], mode: DiscountMode) -> KneserNeyModel {
    let s = streams(docs);
    let table = count_ngrams(&s, 3, BoundaryPolicy::SentenceMarkers).unwrap();
    let config = KnConfig {
        discount_mode: mode,
        ..KnConfig::default()
    };
    train_kn(&table, &config).unwrap()
}

fn random_docs(seed: u64, tokens: usize, vocab: usize) -> Vec<Vec<String>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut docs = Vec::new();
    let mut left = tokens;
    while left > 0 {
        let len = rng.gen_range(1..=20).min(left);
        left -= len;
        // Skewed draw so counts-of-counts are populated in every band.
        docs.push(
            (0..len)
                .map(|_| {
                    let r: f64 = rng.gen();
                    format!("w{}", (r * r * vocab as f64) as usize)
                })
                .collect(),
        );
    }
    docs
}

fn as_refs(docs: &[Vec<String>]) -> Vec<Vec<&str>> {
    docs.iter().map(|d| d.iter().map(String::as_str).collect()).collect()
}

#[test]
fn toy_corpus_matches_brute_force() {
    let docs = vec![vec!["a", "b", "a", "b", "a", "c"]];
    let model = train(&docs, DiscountMode::Fixed(0.75));
    let brute = BruteKn::fixed(&docs, 0.75);
    assert!((model.prob(&["a"], "b") - brute.p2("b", "a")).abs() < 1e-12);
    assert!((model.prob(&["b"], "</s>") - brute.p2("</s>", "b")).abs() < 1e-12);
    // Exact rational values.
    assert!((brute.p2("b", "a") - 301.0 / 600.0).abs() < 1e-15);
    assert!((brute.p2("</s>", "b") - 0.1275).abs() < 1e-15);
    let ppl = model.perplexity(&streams(&docs)).unwrap().perplexity;
    assert!((ppl - brute.perplexity(&docs)).abs() < 1e-9);
    assert!((ppl - 1.7699230266192607).abs() < 1e-9);
}

#[test]
fn toy_corpus_document_scores() {
    let docs = vec![vec!["a", "b", "a", "b", "a", "c"]];
    let model = train(&docs, DiscountMode::Fixed(0.75));
    let cases: [(&[&str], f64); 3] = [
        (&["a", "b"], -3.946010233086679),
        (&["x", "y", "z"], -8.70811159543571),
        (&[], -2.347320986835437),
    ];
    for (doc, expected) in cases {
        let lp = model.sequence_log_prob(&TokenStream::from_tokens(doc.iter().copied())).unwrap();
        assert!((lp - expected).abs() < 1e-9, "{doc:?}: {lp}");
    }
    let oov = model.perplexity(&[TokenStream::from_tokens(["x", "y", "z"])]).unwrap();
    assert_eq!(oov.oov_count, 3);
    assert!((oov.perplexity - 8.820053174531099).abs() < 1e-9);
}

#[test]
fn estimated_discounts_match_brute_force_recursion() {
    let owned = random_docs(7, 3000, 400);
    let docs = as_refs(&owned);
    let model = train(&docs, DiscountMode::CountOfCounts);
    assert!(model.warnings().is_empty(), "{:?}", model.warnings());
    let d: Vec<[f64; 3]> = model.discounts().iter().map(|d| [d.d1, d.d2, d.d3_plus]).collect();
    let brute = BruteKn::new(&docs, [d[0], d[1], d[2]]);
    for doc in docs.iter().take(40) {
        let lp = model.sequence_log_prob(&TokenStream::from_tokens(doc.iter().copied())).unwrap();
        assert!((lp - brute.log_prob(doc)).abs() < 1e-9);
    }
    let unseen = ["w1", "w399", "nope", "w3"];
    let lp = model.sequence_log_prob(&TokenStream::from_tokens(unseen)).unwrap();
    assert!((lp - brute.log_prob(&unseen)).abs() < 1e-9);
}

#[test]
fn discount_estimates_follow_counts_of_counts() {
    let owned = random_docs(11, 3000, 60);
    let docs = as_refs(&owned);
    let model = train(&docs, DiscountMode::CountOfCounts);
    // Trigram counts-of-counts computed by hand from raw padded trigrams.
    let mut tri = std::collections::HashMap::new();
    for d in &docs {
        let mut p = vec!["<s>", "<s>"];
        p.extend(d.iter().copied());
        p.push("</s>");
        for w in p.windows(3) {
            *tri.entry(w.to_vec()).or_insert(0u64) += 1;
        }
    }
    let n = |k: u64| tri.values().filter(|&&c| c == k).count() as f64;
    let (n1, n2, n3, n4) = (n(1), n(2), n(3), n(4));
    let y = n1 / (n1 + 2.0 * n2);
    let d3 = model.discounts()[2];
    assert!((d3.d1 - (1.0 - 2.0 * y * n2 / n1)).abs() < 1e-12);
    assert!((d3.d2 - (2.0 - 3.0 * y * n3 / n2).clamp(0.0, 1.0)).abs() < 1e-6);
    assert!((d3.d3_plus - (3.0 - 4.0 * y * n4 / n3).clamp(0.0, 1.0)).abs() < 1e-6);
}

#[test]
fn arpa_file_round_trip_scores_identically() {
    let owned = random_docs(3, 2000, 40);
    let docs = as_refs(&owned);
    let model = train(&docs, DiscountMode::CountOfCounts);
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("m.arpa");
    model.write_arpa(std::fs::File::create(&path).unwrap()).unwrap();
    let sidecar: ModelSidecar = model.sidecar();
    let reader = std::io::BufReader::new(std::fs::File::open(&path).unwrap());
    let back = KneserNeyModel::read_arpa(reader, Some(&sidecar)).unwrap();
    let test = streams(&docs[..20]);
    let a = model.perplexity(&test).unwrap();
    let b = back.perplexity(&test).unwrap();
    assert_eq!(a.total_log_prob.to_bits(), b.total_log_prob.to_bits());
    assert_eq!(a.perplexity.to_bits(), b.perplexity.to_bits());
}

#[test]
fn conditional_distributions_sum_to_one() {
    let owned = random_docs(5, 10_000, 200);
    let docs = as_refs(&owned);
    let model = train(&docs, DiscountMode::CountOfCounts);
    let vocab: Vec<String> = model.vocabulary().filter(|w| *w != "<s>").map(str::to_string).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    for i in 0..100 {
        let pick = |rng: &mut ChaCha8Rng| -> String {
            match rng.gen_range(0..10) {
                0 => "<s>".to_string(),
                1 => "never-seen".to_string(),
                _ => vocab[rng.gen_range(0..vocab.len())].clone(),
            }
        };
        let ctx = [pick(&mut rng), pick(&mut rng)];
        let ctx: Vec<&str> = if i % 5 == 0 { vec![&ctx[1]] } else { vec![&ctx[0], &ctx[1]] };
        let total: f64 = vocab.iter().map(|w| model.prob(&ctx, w)).sum();
        assert!((total - 1.0).abs() < 1e-6, "{ctx:?}: {total}");
    }
}
