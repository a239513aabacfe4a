//! Measuring how close a pretraining corpus is to a target task corpus.
//!
//! The crate covers tokenization and corpus loading, n-gram counting, a
//! modified Kneser-Ney trigram model, Jensen-Shannon divergence, target
//! vocabulary covered and type-token ratio, sub-corpus sampling, and
//! correlation of similarity scores with downstream improvements.

pub mod analysis;
pub mod corpus;
pub mod error;
pub mod lm;
pub mod metrics;
pub mod ngram;
pub mod protocol;

pub use corpus::{
    normalize_tweet, read_corpus, tokenize, Corpus, CorpusFormat, CorpusReader, Document,
    NormalizationMode, TokenStream, TokenizerConfig,
};
pub use error::{Error, Result};
pub use lm::{perplexity, sequence_log_prob, train_kn, DiscountMode, KnConfig, KneserNeyModel, PerplexityResult};
pub use metrics::{coverage, jsd, ttr, tvc, ContentWordLexicon, Measure, PosTag};
pub use ngram::{count_ngrams, count_ngrams_parallel, to_distribution, BoundaryPolicy, Distribution, NgramTable, Pooling};
pub use protocol::{sample_subcorpora, similarity_profile, ProfileComponents, SamplingMode, SamplingPlan, SimilarityProfile};
