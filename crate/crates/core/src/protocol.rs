//! Size-controlled measurement: draw several fixed-budget sub-corpora from a
//! source, measure each against the whole target, and aggregate.

use std::collections::BTreeMap;
use std::fmt;
use std::io::Write;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::{Corpus, TokenStream};
use crate::error::{Error, Result};
use crate::lm::{train_kn, KnConfig};
use crate::metrics::{content_types, coverage, jsd, ttr, ContentWordLexicon, Measure};
use crate::ngram::{count_ngrams, count_ngrams_parallel, to_distribution, BoundaryPolicy, Distribution, Pooling};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SamplingMode {
    Disjoint,
    Independent,
}

impl fmt::Display for SamplingMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SamplingMode::Disjoint => "disjoint",
            SamplingMode::Independent => "independent",
        })
    }
}

impl FromStr for SamplingMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "disjoint" => Ok(SamplingMode::Disjoint),
            "independent" => Ok(SamplingMode::Independent),
            other => Err(Error::Argument(format!(
                "unknown sampling mode {other:?} (expected disjoint or independent)"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SamplingPlan {
    pub num_subcorpora: usize,
    pub token_budget: u64,
    pub seed: u64,
    pub mode: SamplingMode,
}

impl Default for SamplingPlan {
    fn default() -> Self {
        SamplingPlan {
            num_subcorpora: 5,
            token_budget: 10_000_000,
            seed: 0,
            mode: SamplingMode::Disjoint,
        }
    }
}

impl SamplingPlan {
    pub fn validate(&self) -> Result<()> {
        if self.num_subcorpora == 0 {
            return Err(Error::Argument("num_subcorpora must be at least 1".into()));
        }
        if self.token_budget == 0 {
            return Err(Error::Argument("token_budget must be at least 1".into()));
        }
        Ok(())
    }
}

/// Document indices of each sub-corpus, plus what actually happened.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Subcorpora {
    pub subcorpora: Vec<Vec<usize>>,
    pub mode_used: SamplingMode,
    pub warnings: Vec<String>,
}

fn shuffled(n: usize, seed: u64) -> Vec<usize> {
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    order
}

/// Shortest prefix of `order` holding at least `budget` tokens.
fn take_budget(order: &[usize], lengths: &[usize], budget: u64) -> Option<usize> {
    let mut acc = 0u64;
    for (i, &doc) in order.iter().enumerate() {
        acc += lengths[doc] as u64;
        if acc >= budget {
            return Some(i + 1);
        }
    }
    None
}

/// Draws `plan.num_subcorpora` sub-corpora of at least `plan.token_budget`
/// tokens each, made of whole documents, from a corpus described by its
/// per-document token counts.
///
/// Disjoint mode shuffles once and cuts consecutive runs; when the corpus is
/// too small for that it falls back to independent mode with a warning.
/// Independent mode reshuffles with `seed + i` for sub-corpus `i`.
pub fn sample_subcorpora(doc_lengths: &[usize], plan: &SamplingPlan) -> Result<Subcorpora> {
    plan.validate()?;
    let total: u64 = doc_lengths.iter().map(|&l| l as u64).sum();
    if total < plan.token_budget {
        return Err(Error::Argument(format!(
            "corpus has {total} tokens, fewer than one sub-corpus budget of {}",
            plan.token_budget
        )));
    }

    let mut warnings = Vec::new();
    if plan.mode == SamplingMode::Disjoint {
        let needed = plan.token_budget.saturating_mul(plan.num_subcorpora as u64);
        if total >= needed {
            let order = shuffled(doc_lengths.len(), plan.seed);
            let mut runs = Vec::with_capacity(plan.num_subcorpora);
            let mut start = 0;
            for _ in 0..plan.num_subcorpora {
                match take_budget(&order[start..], doc_lengths, plan.token_budget) {
                    Some(len) => {
                        runs.push(order[start..start + len].to_vec());
                        start += len;
                    }
                    None => break,
                }
            }
            if runs.len() == plan.num_subcorpora {
                return Ok(Subcorpora {
                    subcorpora: runs,
                    mode_used: SamplingMode::Disjoint,
                    warnings,
                });
            }
        }
        warnings.push(format!(
            "corpus has {total} tokens, not enough for {} disjoint sub-corpora of {} tokens; sampling independently instead",
            plan.num_subcorpora, plan.token_budget
        ));
    }

    let subcorpora = (0..plan.num_subcorpora)
        .map(|i| {
            let order = shuffled(doc_lengths.len(), plan.seed.wrapping_add(i as u64));
            let len = take_budget(&order, doc_lengths, plan.token_budget)
                .expect("total covers one budget");
            order[..len].to_vec()
        })
        .collect();
    Ok(Subcorpora {
        subcorpora,
        mode_used: SamplingMode::Independent,
        warnings,
    })
}

#[derive(Debug, Clone)]
pub struct ProfileComponents {
    pub kn: KnConfig,
    pub lexicon: ContentWordLexicon,
    /// Truncate JSD distributions to their most probable terms.
    pub jsd_top_k: Option<usize>,
}

impl Default for ProfileComponents {
    fn default() -> Self {
        ProfileComponents {
            kn: KnConfig::default(),
            lexicon: ContentWordLexicon::bundled(),
            jsd_top_k: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeasureSummary {
    pub values: Vec<f64>,
    pub mean: f64,
    /// Population standard deviation.
    pub std: f64,
}

impl MeasureSummary {
    pub fn from_values(values: Vec<f64>) -> Self {
        let n = values.len() as f64;
        let (mean, std) = if values.windows(2).all(|w| w[0] == w[1]) {
            (values.first().copied().unwrap_or(f64::NAN), 0.0)
        } else {
            let mean = values.iter().sum::<f64>() / n;
            let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
            (mean, var.sqrt())
        };
        MeasureSummary { values, mean, std }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimilarityProfile {
    pub source: String,
    pub target: String,
    pub plan: SamplingPlan,
    pub sampling_mode_used: SamplingMode,
    pub subcorpus_tokens: Vec<u64>,
    pub measures: BTreeMap<Measure, MeasureSummary>,
    pub warnings: Vec<String>,
}

const JSD_MEASURES: [(Measure, Pooling); 4] = [
    (Measure::JsdPooled, Pooling::Pooled),
    (Measure::Jsd1, Pooling::Order1),
    (Measure::Jsd2, Pooling::Order2),
    (Measure::Jsd3, Pooling::Order3),
];

fn distributions(
    table: &crate::ngram::NgramTable,
    top_k: Option<usize>,
) -> Result<Vec<Distribution>> {
    JSD_MEASURES
        .iter()
        .map(|&(_, pooling)| {
            let d = to_distribution(table, pooling)?;
            match top_k {
                Some(k) => d.top_k(k),
                None => Ok(d),
            }
        })
        .collect()
}

impl SimilarityProfile {
    pub fn mean(&self, measure: Measure) -> Option<f64> {
        self.measures.get(&measure).map(|s| s.mean)
    }

    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self).map_err(|e| Error::Data(e.to_string()))
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Data(format!("invalid profile JSON: {e}")))
    }

    /// Per-sub-corpus values as `source,target,measure,subcorpus_index,value`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["source", "target", "measure", "subcorpus_index", "value"])
            .map_err(csv_err)?;
        for (measure, summary) in &self.measures {
            for (i, v) in summary.values.iter().enumerate() {
                w.write_record([
                    self.source.as_str(),
                    self.target.as_str(),
                    measure.name(),
                    &i.to_string(),
                    &v.to_string(),
                ])
                .map_err(csv_err)?;
            }
        }
        w.flush()?;
        Ok(())
    }

    /// Means as `source,target,measure,value`, the similarity attachment
    /// format read by the correlation analysis.
    pub fn write_means_csv<W: Write>(&self, out: W, header: bool) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        if header {
            w.write_record(["source", "target", "measure", "value"]).map_err(csv_err)?;
        }
        for (measure, summary) in &self.measures {
            w.write_record([
                self.source.as_str(),
                self.target.as_str(),
                measure.name(),
                &summary.mean.to_string(),
            ])
            .map_err(csv_err)?;
        }
        w.flush()?;
        Ok(())
    }
}

pub(crate) fn csv_err(e: csv::Error) -> Error {
    Error::Data(e.to_string())
}

/// Measures one source against one target under `plan`.
///
/// Each sub-corpus trains its own KN model and is compared with the full
/// target. Sub-corpora run in parallel; results are assembled in index order.
pub fn similarity_profile(
    source_id: &str,
    source: &Corpus,
    target_id: &str,
    target: &Corpus,
    plan: &SamplingPlan,
    components: &ProfileComponents,
) -> Result<SimilarityProfile> {
    if source.token_count() == 0 {
        return Err(Error::EmptyCorpus(format!("source {source_id:?} has no tokens")));
    }
    if target.token_count() == 0 {
        return Err(Error::EmptyCorpus(format!("target {target_id:?} has no tokens")));
    }
    let sample = sample_subcorpora(&source.doc_lengths(), plan)?;

    let target_table = count_ngrams_parallel(&target.docs, 3, BoundaryPolicy::None)?;
    let target_dists = distributions(&target_table, components.jsd_top_k)?;
    drop(target_table);
    let target_types = content_types(&target.docs, &components.lexicon);
    if target_types.is_empty() {
        return Err(Error::EmptyVocabulary);
    }

    let per_sub: Vec<Result<(BTreeMap<Measure, f64>, u64, Vec<String>)>> = sample
        .subcorpora
        .par_iter()
        .map(|indices| {
            let docs: Vec<&TokenStream> = indices.iter().map(|&i| &source.docs[i]).collect();
            let mut values = BTreeMap::new();

            let lm_table = count_ngrams(docs.iter().copied(), 3, BoundaryPolicy::SentenceMarkers)?;
            let model = train_kn(&lm_table, &components.kn)?;
            drop(lm_table);
            values.insert(Measure::Ppl, model.perplexity(&target.docs)?.perplexity);
            let warnings = model.warnings().to_vec();
            drop(model);

            let table = count_ngrams(docs.iter().copied(), 3, BoundaryPolicy::None)?;
            let dists = distributions(&table, components.jsd_top_k)?;
            drop(table);
            for ((measure, _), (p, q)) in JSD_MEASURES.iter().zip(dists.iter().zip(&target_dists)) {
                values.insert(*measure, jsd(p, q)?);
            }

            let source_content = docs
                .iter()
                .flat_map(|d| d.iter())
                .filter(|t| components.lexicon.is_content_word(t))
                .map(String::as_str);
            values.insert(Measure::Tvc, coverage(&target_types, source_content)?);
            values.insert(Measure::Ttr, ttr(docs.iter().copied())?);

            let tokens = docs.iter().map(|d| d.token_count() as u64).sum();
            Ok((values, tokens, warnings))
        })
        .collect();

    let mut warnings = sample.warnings.clone();
    let mut columns: BTreeMap<Measure, Vec<f64>> = BTreeMap::new();
    let mut subcorpus_tokens = Vec::with_capacity(per_sub.len());
    for (i, result) in per_sub.into_iter().enumerate() {
        let (values, tokens, w) = result?;
        for (m, v) in values {
            columns.entry(m).or_default().push(v);
        }
        subcorpus_tokens.push(tokens);
        warnings.extend(w.into_iter().map(|w| format!("sub-corpus {i}: {w}")));
    }

    Ok(SimilarityProfile {
        source: source_id.to_string(),
        target: target_id.to_string(),
        plan: *plan,
        sampling_mode_used: sample.mode_used,
        subcorpus_tokens,
        measures: columns
            .into_iter()
            .map(|(m, v)| (m, MeasureSummary::from_values(v)))
            .collect(),
        warnings,
    })
}
