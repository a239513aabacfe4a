use std::collections::BTreeMap;
use std::fs::File;
use std::io::BufReader;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::Serialize;

use corpus_affinity::analysis::{
    attach_similarity, compute_deltas, correlation_matrix, rank_sources, write_deltas_csv, ResultsTable,
    SimilarityTable,
};
use corpus_affinity::lm::ModelSidecar;
use corpus_affinity::metrics::{content_types, coverage, filter_content_words, TaggedCorpus};
use corpus_affinity::ngram::{count_ngrams_parallel, BoundaryPolicy, Distribution};
use corpus_affinity::{
    jsd, normalize_tweet, read_corpus, similarity_profile, to_distribution, train_kn, ttr, Corpus, CorpusFormat,
    ContentWordLexicon, KnConfig, KneserNeyModel, Measure, NormalizationMode, ProfileComponents, SamplingPlan,
    SimilarityProfile,
};

use crate::output::Run;
use crate::{
    CorrelateArgs, CountArgs, LmBuildArgs, LmPplArgs, NormalizeArgs, ProfileArgs, RankArgs, SimArgs, SimMeasure,
    TokenizerArgs,
};

/// Flag combinations clap cannot reject on its own.
#[derive(Debug)]
pub struct UsageError(pub String);

impl std::fmt::Display for UsageError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

fn usage(msg: impl Into<String>) -> anyhow::Error {
    UsageError(msg.into()).into()
}

fn load(run: &mut Run, path: &Path, tok: &TokenizerArgs) -> Result<Corpus> {
    run.input(path)?;
    Ok(Corpus::load(path, tok.format, &tok.config())?)
}

fn sidecar_path(model: &Path) -> PathBuf {
    let mut name = model.as_os_str().to_owned();
    name.push(".meta.json");
    PathBuf::from(name)
}

/// Splits `ID=PATH`; a bare path takes its file stem as id.
fn named_path(arg: &str) -> Result<(String, PathBuf)> {
    if let Some((id, path)) = arg.split_once('=') {
        if id.is_empty() || path.is_empty() {
            return Err(usage(format!("expected ID=PATH, got {arg:?}")));
        }
        return Ok((id.to_string(), PathBuf::from(path)));
    }
    let path = PathBuf::from(arg);
    let id = path
        .file_stem()
        .and_then(|s| s.to_str())
        .ok_or_else(|| usage(format!("cannot derive an id from {arg:?}")))?
        .to_string();
    Ok((id, path))
}

fn key_value(arg: &str) -> Result<(String, String)> {
    arg.split_once('=')
        .filter(|(k, v)| !k.is_empty() && !v.is_empty())
        .map(|(k, v)| (k.to_string(), v.to_string()))
        .ok_or_else(|| usage(format!("expected KEY=VALUE, got {arg:?}")))
}

fn load_lexicon(run: &mut Run, path: Option<&Path>) -> Result<ContentWordLexicon> {
    match path {
        None => Ok(ContentWordLexicon::bundled()),
        Some(p) => {
            run.input(p)?;
            let f = File::open(p).with_context(|| format!("reading {}", p.display()))?;
            Ok(ContentWordLexicon::parse(BufReader::new(f), p.display().to_string())?)
        }
    }
}

pub fn normalize(args: &NormalizeArgs) -> Result<()> {
    let mut run = Run::new("normalize", args)?;
    run.input(&args.input)?;
    let docs = read_corpus(&args.input, args.format)?.collect::<corpus_affinity::Result<Vec<_>>>()?;
    run.write(&args.output, |w| {
        for doc in &docs {
            let text = match args.mode {
                NormalizationMode::Twitter => normalize_tweet(&doc.text),
                NormalizationMode::None => doc.text.clone(),
            };
            match args.format {
                CorpusFormat::TextLines => writeln!(w, "{text}")?,
                CorpusFormat::JsonlText => {
                    serde_json::to_writer(&mut *w, &serde_json::json!({ "id": doc.id, "text": text }))?;
                    w.write_all(b"\n")?;
                }
            }
        }
        Ok(())
    })?;
    run.finish(None)
}

pub fn count(args: &CountArgs) -> Result<()> {
    let mut run = Run::new("count", args)?;
    let corpus = load(&mut run, &args.input, &args.tokenizer)?;
    let table = count_ngrams_parallel(&corpus.docs, args.order as usize, args.boundary)?;
    run.write(&args.output, |w| Ok(table.write_counts(w)?))?;
    run.finish(None)
}

pub fn lm_build(args: &LmBuildArgs) -> Result<()> {
    let mut run = Run::new("lm-build", args)?;
    let corpus = load(&mut run, &args.input, &args.tokenizer)?;
    let table = count_ngrams_parallel(&corpus.docs, 3, BoundaryPolicy::SentenceMarkers)?;
    drop(corpus);
    let config = KnConfig {
        discount_mode: args.discounts,
        min_count: args.min_count,
        tokenizer: Some(args.tokenizer.config()),
    };
    let model = train_kn(&table, &config)?;
    drop(table);
    for w in model.warnings() {
        eprintln!("warning: {w}");
    }
    run.write(&args.output, |w| Ok(model.write_arpa(w)?))?;
    run.write_aux_json(&sidecar_path(&args.output), &model.sidecar())?;
    run.finish(None)
}

pub fn lm_ppl(args: &LmPplArgs) -> Result<()> {
    let mut run = Run::new("lm-ppl", args)?;
    run.input(&args.model)?;
    let meta = sidecar_path(&args.model);
    let sidecar: Option<ModelSidecar> = if meta.exists() {
        run.input(&meta)?;
        let text = std::fs::read_to_string(&meta).with_context(|| format!("reading {}", meta.display()))?;
        Some(serde_json::from_str(&text).with_context(|| format!("parsing {}", meta.display()))?)
    } else {
        eprintln!("warning: no sidecar at {}; tokenizer compatibility is not checked", meta.display());
        None
    };
    let f = File::open(&args.model).with_context(|| format!("reading {}", args.model.display()))?;
    let model = KneserNeyModel::read_arpa(BufReader::new(f), sidecar.as_ref())?;
    let corpus = load(&mut run, &args.input, &args.tokenizer)?;
    let result = model.perplexity(&corpus.docs)?;
    run.write_json(&args.output, &result)?;
    println!("{}", result.perplexity);
    run.finish(None)
}

#[derive(Serialize)]
struct SimOutput {
    measure: &'static str,
    value: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pooling: Option<String>,
}

fn top_k(dist: Distribution, k: Option<u64>) -> Result<Distribution> {
    Ok(match k {
        Some(k) => dist.top_k(k as usize)?,
        None => dist,
    })
}

pub fn sim(args: &SimArgs) -> Result<()> {
    let mut run = Run::new("sim", args)?;
    if args.measure != SimMeasure::Ttr && args.target.is_none() {
        return Err(usage("--target is required for jsd and tvc"));
    }
    let uses_pos = args.target_pos.is_some() || args.source_pos.is_some() || args.lexicon.is_some();
    if args.measure != SimMeasure::Tvc && uses_pos {
        return Err(usage("--lexicon, --target-pos and --source-pos only apply to tvc"));
    }
    let source = load(&mut run, &args.source, &args.tokenizer)?;
    let out = match args.measure {
        SimMeasure::Ttr => SimOutput {
            measure: "ttr",
            value: ttr(&source.docs)?,
            pooling: None,
        },
        SimMeasure::Jsd => {
            let target = load(&mut run, args.target.as_ref().unwrap(), &args.tokenizer)?;
            let p = to_distribution(&count_ngrams_parallel(&source.docs, 3, BoundaryPolicy::None)?, args.pooling)?;
            let q = to_distribution(&count_ngrams_parallel(&target.docs, 3, BoundaryPolicy::None)?, args.pooling)?;
            SimOutput {
                measure: "jsd",
                value: jsd(&top_k(p, args.top_k)?, &top_k(q, args.top_k)?)?,
                pooling: Some(args.pooling.to_string()),
            }
        }
        SimMeasure::Tvc => {
            let target = load(&mut run, args.target.as_ref().unwrap(), &args.tokenizer)?;
            let lexicon = load_lexicon(&mut run, args.lexicon.as_deref())?;
            let read_tagged = |run: &mut Run, path: &Path, corpus: &Corpus| -> Result<TaggedCorpus> {
                run.input(path)?;
                let f = File::open(path).with_context(|| format!("reading {}", path.display()))?;
                let tagged = TaggedCorpus::parse(BufReader::new(f))?;
                tagged.check_aligned(&corpus.docs)?;
                Ok(tagged)
            };
            let target_types = match &args.target_pos {
                Some(p) => read_tagged(&mut run, p, &target)?.content_types(),
                None => content_types(&target.docs, &lexicon),
            };
            let value = match &args.source_pos {
                Some(p) => {
                    let types = read_tagged(&mut run, p, &source)?.content_types();
                    coverage(&target_types, types.iter().map(String::as_str))?
                }
                None => {
                    let filtered: Vec<_> = source.docs.iter().map(|d| filter_content_words(d, &lexicon)).collect();
                    coverage(&target_types, filtered.iter().flat_map(|d| d.iter()).map(String::as_str))?
                }
            };
            SimOutput {
                measure: "tvc",
                value,
                pooling: None,
            }
        }
    };
    run.write_json(&args.output, &out)?;
    println!("{}", out.value);
    run.finish(None)
}

pub fn profile(args: &ProfileArgs) -> Result<()> {
    let mut run = Run::new("profile", args)?;
    run.seed(args.seed);
    let sources = args.source.iter().map(|s| named_path(s)).collect::<Result<Vec<_>>>()?;
    let (target_id, target_path) = named_path(&args.target)?;
    let mut ids: Vec<&str> = sources.iter().map(|(id, _)| id.as_str()).collect();
    ids.sort_unstable();
    if ids.windows(2).any(|w| w[0] == w[1]) {
        return Err(usage("source ids must be unique"));
    }
    let plan = SamplingPlan {
        num_subcorpora: args.samples as usize,
        token_budget: args.sample_tokens,
        seed: args.seed,
        mode: args.mode,
    };
    plan.validate()?;
    let components = ProfileComponents {
        kn: KnConfig {
            discount_mode: args.discounts,
            min_count: 1,
            tokenizer: Some(args.tokenizer.config()),
        },
        lexicon: load_lexicon(&mut run, args.lexicon.as_deref())?,
        jsd_top_k: args.top_k.map(|k| k as usize),
    };
    let target = load(&mut run, &target_path, &args.tokenizer)?;

    let mut profiles = Vec::new();
    for (id, path) in &sources {
        let source = load(&mut run, path, &args.tokenizer)?;
        let prof = similarity_profile(id, &source, &target_id, &target, &plan, &components)?;
        for w in &prof.warnings {
            eprintln!("warning: {id}: {w}");
        }
        let stem = format!("{id}__{target_id}");
        run.write(&args.out_dir.join(format!("{stem}.profile.json")), |w| {
            w.write_all(prof.to_json()?.as_bytes())?;
            w.write_all(b"\n")?;
            Ok(())
        })?;
        run.write(&args.out_dir.join(format!("{stem}.profile.csv")), |w| Ok(prof.write_csv(w)?))?;
        profiles.push(prof);
    }
    run.write(&args.out_dir.join("means.csv"), |w| {
        for (i, p) in profiles.iter().enumerate() {
            p.write_means_csv(&mut *w, i == 0)?;
        }
        Ok(())
    })?;
    run.finish(Some(&args.out_dir))
}

#[derive(Serialize)]
struct RankedEntry {
    rank: usize,
    source: String,
    score: f64,
    /// Reported for context only; never used to order sources.
    ttr: Option<f64>,
}

#[derive(Serialize)]
struct RankOutput {
    target: String,
    key: String,
    ranking: Vec<RankedEntry>,
}

pub fn rank(args: &RankArgs) -> Result<()> {
    let mut run = Run::new("rank", args)?;
    let mut profiles = Vec::new();
    for p in &args.profiles {
        run.input(p)?;
        let text = std::fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
        profiles.push(SimilarityProfile::from_json(&text).with_context(|| format!("parsing {}", p.display()))?);
    }
    let ranked = rank_sources(&profiles, args.key)?;
    let ttr_of: BTreeMap<&str, Option<f64>> = profiles.iter().map(|p| (p.source.as_str(), p.mean(Measure::Ttr))).collect();
    let out = RankOutput {
        target: profiles.first().map(|p| p.target.clone()).unwrap_or_default(),
        key: match args.key {
            corpus_affinity::analysis::RankKey::Composite => "composite".into(),
            corpus_affinity::analysis::RankKey::Measure(m) => m.name().into(),
        },
        ranking: ranked
            .iter()
            .enumerate()
            .map(|(i, r)| RankedEntry {
                rank: i + 1,
                source: r.source.clone(),
                score: r.score,
                ttr: ttr_of[r.source.as_str()],
            })
            .collect(),
    };
    for e in &out.ranking {
        println!("{}\t{}\t{}", e.rank, e.source, e.score);
    }
    run.write_json(&args.output, &out)?;
    run.finish(None)
}

const BUILTIN_RESULTS: &str = "builtin:downstream";

pub fn correlate(args: &CorrelateArgs) -> Result<()> {
    let mut run = Run::new("correlate", args)?;
    let mut results = if args.results == BUILTIN_RESULTS {
        run.builtin_input(BUILTIN_RESULTS, include_bytes!("../../core/data/downstream_results.csv"));
        match args.expand_repeats {
            Some(n) => ResultsTable::bundled_with_repeats(n)?,
            None => ResultsTable::bundled_means(),
        }
    } else {
        if args.expand_repeats.is_some() {
            bail!(usage("--expand-repeats only applies to builtin:downstream"));
        }
        let path = Path::new(&args.results);
        run.input(path)?;
        let f = File::open(path).with_context(|| format!("reading {}", path.display()))?;
        ResultsTable::from_csv(f)?
    };
    for arg in &args.map_model {
        let (k, v) = key_value(arg)?;
        results.model_sources.insert(k, v);
    }
    for arg in &args.map_task {
        let (k, v) = key_value(arg)?;
        results.task_targets.insert(k, v);
    }

    let mut points = compute_deltas(&results, &args.baseline)?;
    if let Some(path) = &args.similarity {
        run.input(path)?;
        let f = File::open(path).with_context(|| format!("reading {}", path.display()))?;
        let table = SimilarityTable::from_csv(f)?;
        attach_similarity(&mut points, &results, &table)?;
    }
    let report = correlation_matrix(&points, args.direction)?;
    for w in &report.warnings {
        eprintln!("warning: {w}");
    }
    run.write(&args.out_dir.join("deltas.csv"), |w| Ok(write_deltas_csv(&points, w)?))?;
    run.write_json(&args.out_dir.join("correlation.json"), &report)?;
    run.write(&args.out_dir.join("correlation.csv"), |w| Ok(report.write_long_csv(w)?))?;
    eprintln!("{} delta points", points.len());
    run.finish(Some(&args.out_dir))
}
