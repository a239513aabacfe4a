mod commands;
mod output;

use std::fmt::Display;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::{Serialize, Serializer};

use corpus_affinity::analysis::{Directionality, RankKey};
use corpus_affinity::ngram::{BoundaryPolicy, Pooling};
use corpus_affinity::{CorpusFormat, DiscountMode, NormalizationMode, SamplingMode, TokenizerConfig};

fn as_display<T: Display, S: Serializer>(v: &T, s: S) -> Result<S::Ok, S::Error> {
    s.collect_str(v)
}

#[derive(Debug, Parser)]
#[command(name = "corpus-affinity", version, about = "Measure how similar source corpora are to a target corpus")]
struct Cli {
    /// Worker threads (defaults to all cores).
    #[arg(long, global = true, env = "CORPUS_AFFINITY_THREADS", value_parser = clap::value_parser!(u16).range(1..))]
    threads: Option<u16>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Replace @mentions and URLs with placeholder tokens.
    Normalize(NormalizeArgs),
    /// Count 1..N-grams and write a counts file.
    Count(CountArgs),
    /// Train a Kneser-Ney trigram model and write it as ARPA.
    LmBuild(LmBuildArgs),
    /// Perplexity of a corpus under an ARPA model.
    LmPpl(LmPplArgs),
    /// One similarity or diversity measure between two corpora.
    Sim(SimArgs),
    /// Full sub-corpus similarity profile of each source against a target.
    Profile(ProfileArgs),
    /// Order candidate sources by similarity to a target.
    Rank(RankArgs),
    /// Improvement deltas and their correlation with similarity measures.
    Correlate(CorrelateArgs),
}

#[derive(Debug, Clone, Args, Serialize)]
struct TokenizerArgs {
    /// Input format: text-lines or jsonl-text-field.
    #[arg(long, default_value = "text-lines")]
    #[serde(serialize_with = "as_display_format")]
    format: CorpusFormat,
    /// Keep original letter case.
    #[arg(long)]
    no_lowercase: bool,
    /// Text normalization applied before tokenizing: none or twitter.
    #[arg(long, default_value = "none")]
    normalize: NormalizationMode,
    /// Drop punctuation tokens.
    #[arg(long)]
    drop_punctuation: bool,
}

fn as_display_format<S: Serializer>(f: &CorpusFormat, s: S) -> Result<S::Ok, S::Error> {
    s.serialize_str(match f {
        CorpusFormat::TextLines => "text-lines",
        CorpusFormat::JsonlText => "jsonl-text-field",
    })
}

impl TokenizerArgs {
    fn config(&self) -> TokenizerConfig {
        TokenizerConfig {
            lowercase: !self.no_lowercase,
            normalization: self.normalize,
            keep_punctuation_tokens: !self.drop_punctuation,
        }
    }
}

#[derive(Debug, Args, Serialize)]
struct NormalizeArgs {
    #[arg(long, default_value = "twitter")]
    mode: NormalizationMode,
    /// Input format: text-lines or jsonl-text-field.
    #[arg(long, default_value = "text-lines")]
    #[serde(serialize_with = "as_display_format")]
    format: CorpusFormat,
    #[arg(long)]
    input: PathBuf,
    #[arg(long, short)]
    output: PathBuf,
}

#[derive(Debug, Args, Serialize)]
struct CountArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long, default_value_t = 3, value_parser = clap::value_parser!(u8).range(1..=3))]
    order: u8,
    #[arg(long, default_value = "none")]
    boundary: BoundaryPolicy,
    #[command(flatten)]
    tokenizer: TokenizerArgs,
    #[arg(long, short)]
    output: PathBuf,
}

#[derive(Debug, Args, Serialize)]
struct LmBuildArgs {
    #[arg(long)]
    input: PathBuf,
    /// `auto` (from counts-of-counts) or `fixed:D`.
    #[arg(long, default_value = "auto")]
    #[serde(serialize_with = "as_display")]
    discounts: DiscountMode,
    /// Drop bigrams and trigrams seen fewer times than this.
    #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u64).range(1..))]
    min_count: u64,
    #[command(flatten)]
    tokenizer: TokenizerArgs,
    /// ARPA output; the sidecar goes to `<output>.meta.json`.
    #[arg(long, short)]
    output: PathBuf,
}

#[derive(Debug, Args, Serialize)]
struct LmPplArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    input: PathBuf,
    #[command(flatten)]
    tokenizer: TokenizerArgs,
    #[arg(long, short)]
    output: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum SimMeasure {
    Jsd,
    Tvc,
    Ttr,
}

#[derive(Debug, Args, Serialize)]
struct SimArgs {
    #[arg(value_enum)]
    measure: SimMeasure,
    #[arg(long)]
    source: PathBuf,
    /// Required for jsd and tvc.
    #[arg(long)]
    target: Option<PathBuf>,
    #[arg(long, default_value = "pooled")]
    pooling: Pooling,
    /// Keep only the k most probable terms of each distribution.
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    top_k: Option<u64>,
    /// Content-word lexicon (`word<TAB>tag` lines) replacing the bundled one.
    #[arg(long)]
    lexicon: Option<PathBuf>,
    /// POS annotations for the target (`token<TAB>tag`, blank line between documents).
    #[arg(long)]
    target_pos: Option<PathBuf>,
    /// POS annotations for the source.
    #[arg(long)]
    source_pos: Option<PathBuf>,
    #[command(flatten)]
    tokenizer: TokenizerArgs,
    #[arg(long, short)]
    output: PathBuf,
}

#[derive(Debug, Args, Serialize)]
struct ProfileArgs {
    /// Source corpus as `ID=PATH` or `PATH` (id from the file stem). Repeatable.
    #[arg(long, required = true)]
    source: Vec<String>,
    /// Target corpus as `ID=PATH` or `PATH`.
    #[arg(long)]
    target: String,
    /// Number of sub-corpora per source.
    #[arg(long, default_value_t = 5, value_parser = clap::value_parser!(u64).range(1..))]
    samples: u64,
    /// Token budget per sub-corpus.
    #[arg(long, default_value_t = 10_000_000, value_parser = clap::value_parser!(u64).range(1..))]
    sample_tokens: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value = "disjoint")]
    mode: SamplingMode,
    #[arg(long, default_value = "auto")]
    #[serde(serialize_with = "as_display")]
    discounts: DiscountMode,
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    top_k: Option<u64>,
    #[arg(long)]
    lexicon: Option<PathBuf>,
    #[command(flatten)]
    tokenizer: TokenizerArgs,
    #[arg(long)]
    out_dir: PathBuf,
}

#[derive(Debug, Args, Serialize)]
struct RankArgs {
    /// jsd, ppl, tvc or composite.
    #[arg(long, default_value = "composite", value_parser = parse_rank_key)]
    #[serde(serialize_with = "serialize_rank_key")]
    key: RankKey,
    /// Profile JSON files written by `profile`.
    #[arg(long, required = true, num_args = 1..)]
    profiles: Vec<PathBuf>,
    #[arg(long, short)]
    output: PathBuf,
}

fn parse_rank_key(s: &str) -> Result<RankKey, String> {
    s.parse::<RankKey>().map_err(|e| e.to_string())
}

fn serialize_rank_key<S: Serializer>(k: &RankKey, s: S) -> Result<S::Ok, S::Error> {
    match k {
        RankKey::Composite => s.serialize_str("composite"),
        RankKey::Measure(m) => s.serialize_str(m.name()),
    }
}

#[derive(Debug, Args, Serialize)]
struct CorrelateArgs {
    /// Results CSV (`task,model,repeat,score`) or `builtin:downstream`.
    #[arg(long)]
    results: String,
    /// With `builtin:downstream`, expand each mean into N synthetic repeats.
    #[arg(long, value_parser = clap::value_parser!(u32).range(1..))]
    expand_repeats: Option<u32>,
    #[arg(long, default_value = "BERT")]
    baseline: String,
    #[arg(long, default_value = "similarity")]
    direction: Directionality,
    /// Similarity values (`source,target,measure,value`), e.g. means.csv from `profile`.
    #[arg(long)]
    similarity: Option<PathBuf>,
    /// Map a model name to a source id: `MODEL=SOURCE`. Repeatable.
    #[arg(long)]
    map_model: Vec<String>,
    /// Map a task name to a target id: `TASK=TARGET`. Repeatable.
    #[arg(long)]
    map_task: Vec<String>,
    #[arg(long)]
    out_dir: PathBuf,
}

fn exit_code(err: &anyhow::Error) -> u8 {
    for cause in err.chain() {
        if let Some(e) = cause.downcast_ref::<corpus_affinity::Error>() {
            return match e {
                corpus_affinity::Error::Argument(_) => 2,
                _ => 1,
            };
        }
        if cause.downcast_ref::<commands::UsageError>().is_some() {
            return 2;
        }
    }
    1
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(e.exit_code() as u8);
        }
    };
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n as usize).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    }
    let result = match &cli.command {
        Command::Normalize(a) => commands::normalize(a),
        Command::Count(a) => commands::count(a),
        Command::LmBuild(a) => commands::lm_build(a),
        Command::LmPpl(a) => commands::lm_ppl(a),
        Command::Sim(a) => commands::sim(a),
        Command::Profile(a) => commands::profile(a),
        Command::Rank(a) => commands::rank(a),
        Command::Correlate(a) => commands::correlate(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
