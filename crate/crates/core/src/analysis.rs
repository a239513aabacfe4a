//! Downstream results, improvement deltas, Pearson correlation between deltas
//! and similarity measures, and ranking of candidate sources.

use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::io::{Read, Write};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metrics::Measure;
use crate::protocol::{csv_err, SimilarityProfile};

const BUNDLED_RESULTS: &str = include_str!("../data/downstream_results.csv");

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub task: String,
    pub model: String,
    pub repeat: u32,
    pub score: f64,
}

/// Downstream task scores, one row per (task, model, repeat).
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ResultsTable {
    rows: Vec<ResultRow>,
    /// task -> target corpus id; tasks missing here map to themselves.
    pub task_targets: BTreeMap<String, String>,
    /// model -> source corpus id; models missing here map to themselves.
    pub model_sources: BTreeMap<String, String>,
}

#[derive(Debug, Deserialize)]
struct BundledRow {
    task: String,
    #[allow(dead_code)]
    text_type: String,
    model: String,
    mean: f64,
    std: f64,
}

fn bundled_rows() -> Vec<BundledRow> {
    csv::Reader::from_reader(BUNDLED_RESULTS.as_bytes())
        .deserialize()
        .collect::<std::result::Result<_, _>>()
        .expect("bundled table is well formed")
}

impl ResultsTable {
    pub fn new(rows: Vec<ResultRow>) -> Result<Self> {
        let mut seen = HashSet::new();
        for r in &rows {
            if !seen.insert((r.task.as_str(), r.model.as_str(), r.repeat)) {
                return Err(Error::Data(format!(
                    "duplicate result row for task {:?}, model {:?}, repeat {}",
                    r.task, r.model, r.repeat
                )));
            }
            if !r.score.is_finite() {
                return Err(Error::Data(format!("non-finite score for task {:?}", r.task)));
            }
        }
        Ok(ResultsTable {
            rows,
            ..Default::default()
        })
    }

    /// Reads `task,model,repeat,score` CSV.
    pub fn from_csv<R: Read>(input: R) -> Result<Self> {
        let mut reader = csv::Reader::from_reader(input);
        let headers = reader.headers().map_err(csv_err)?.clone();
        if headers.iter().collect::<Vec<_>>() != ["task", "model", "repeat", "score"] {
            return Err(Error::Data(format!(
                "results CSV header must be task,model,repeat,score, got {}",
                headers.iter().collect::<Vec<_>>().join(",")
            )));
        }
        let rows = reader
            .deserialize()
            .collect::<std::result::Result<Vec<ResultRow>, _>>()
            .map_err(csv_err)?;
        ResultsTable::new(rows)
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        for r in &self.rows {
            w.serialize(r).map_err(csv_err)?;
        }
        w.flush()?;
        Ok(())
    }

    /// Mean downstream scores for 12 tasks and 6 models (BERT, Bio, Clinical,
    /// Sci, Twitter, Forum), one row per cell with repeat 0.
    pub fn bundled_means() -> Self {
        let rows = bundled_rows()
            .into_iter()
            .map(|r| ResultRow {
                task: r.task,
                model: r.model,
                repeat: 0,
                score: r.mean,
            })
            .collect();
        ResultsTable::new(rows).expect("bundled table is consistent")
    }

    /// Synthetic expansion of the bundled means into `repeats` rows per cell.
    /// Scores are `mean + std * z_k` with fixed offsets `z_k` of zero mean and
    /// unit population deviation, so each cell keeps its reported mean and
    /// spread.
    pub fn bundled_with_repeats(repeats: u32) -> Result<Self> {
        if repeats == 0 {
            return Err(Error::Argument("repeats must be at least 1".into()));
        }
        let n = repeats as f64;
        let spread = ((n * n - 1.0) / 12.0).sqrt();
        let offsets: Vec<f64> = (0..repeats)
            .map(|k| {
                if spread == 0.0 {
                    0.0
                } else {
                    (k as f64 - (n - 1.0) / 2.0) / spread
                }
            })
            .collect();
        let rows = bundled_rows()
            .into_iter()
            .flat_map(|r| {
                offsets.iter().enumerate().map(move |(k, z)| ResultRow {
                    task: r.task.clone(),
                    model: r.model.clone(),
                    repeat: k as u32,
                    score: r.mean + r.std * z,
                })
            })
            .collect();
        ResultsTable::new(rows)
    }

    pub fn rows(&self) -> &[ResultRow] {
        &self.rows
    }

    pub fn target_of<'a>(&'a self, task: &'a str) -> &'a str {
        self.task_targets.get(task).map_or(task, String::as_str)
    }

    pub fn source_of<'a>(&'a self, model: &'a str) -> &'a str {
        self.model_sources.get(model).map_or(model, String::as_str)
    }

    /// Mean of the baseline model's scores on `task`.
    pub fn baseline_mean(&self, task: &str, baseline: &str) -> Result<f64> {
        let scores: Vec<f64> = self
            .rows
            .iter()
            .filter(|r| r.task == task && r.model == baseline)
            .map(|r| r.score)
            .collect();
        if scores.is_empty() {
            return Err(Error::Data(format!(
                "no rows for baseline model {baseline:?} on task {task:?}"
            )));
        }
        Ok(scores.iter().sum::<f64>() / scores.len() as f64)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeltaPoint {
    pub task: String,
    pub model: String,
    pub repeat: u32,
    pub delta: f64,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub similarity: BTreeMap<Measure, f64>,
}

/// One point per non-baseline row: its score minus the baseline model's mean
/// score on the same task. Points follow the table's row order.
pub fn compute_deltas(results: &ResultsTable, baseline_model: &str) -> Result<Vec<DeltaPoint>> {
    let mut baselines: BTreeMap<&str, f64> = BTreeMap::new();
    let mut points = Vec::new();
    for r in results.rows() {
        if r.model == baseline_model {
            continue;
        }
        let base = match baselines.get(r.task.as_str()) {
            Some(&b) => b,
            None => {
                let b = results.baseline_mean(&r.task, baseline_model)?;
                baselines.insert(&r.task, b);
                b
            }
        };
        points.push(DeltaPoint {
            task: r.task.clone(),
            model: r.model.clone(),
            repeat: r.repeat,
            delta: r.score - base,
            similarity: BTreeMap::new(),
        });
    }
    Ok(points)
}

pub fn write_deltas_csv<W: Write>(points: &[DeltaPoint], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["task", "model", "repeat", "delta"]).map_err(csv_err)?;
    for p in points {
        w.write_record([
            p.task.as_str(),
            p.model.as_str(),
            &p.repeat.to_string(),
            &p.delta.to_string(),
        ])
        .map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

/// Similarity values keyed by (source, target, measure), read from
/// `source,target,measure,value` CSV.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SimilarityTable {
    values: BTreeMap<(String, String), BTreeMap<Measure, f64>>,
}

#[derive(Debug, Deserialize)]
struct SimilarityRow {
    source: String,
    target: String,
    measure: String,
    value: f64,
}

impl SimilarityTable {
    pub fn insert(&mut self, source: &str, target: &str, measure: Measure, value: f64) {
        self.values
            .entry((source.to_string(), target.to_string()))
            .or_default()
            .insert(measure, value);
    }

    pub fn from_profiles<'a>(profiles: impl IntoIterator<Item = &'a SimilarityProfile>) -> Self {
        let mut table = SimilarityTable::default();
        for p in profiles {
            for (m, s) in &p.measures {
                table.insert(&p.source, &p.target, *m, s.mean);
            }
        }
        table
    }

    pub fn from_csv<R: Read>(input: R) -> Result<Self> {
        let mut reader = csv::Reader::from_reader(input);
        let mut table = SimilarityTable::default();
        for row in reader.deserialize() {
            let row: SimilarityRow = row.map_err(csv_err)?;
            let measure: Measure = row.measure.parse()?;
            table.insert(&row.source, &row.target, measure, row.value);
        }
        Ok(table)
    }

    pub fn get(&self, source: &str, target: &str) -> Option<&BTreeMap<Measure, f64>> {
        self.values.get(&(source.to_string(), target.to_string()))
    }
}

/// Copies similarity values onto each point using the table's task→target and
/// model→source mappings. Every point must find a (source, target) entry.
pub fn attach_similarity(
    points: &mut [DeltaPoint],
    results: &ResultsTable,
    similarity: &SimilarityTable,
) -> Result<()> {
    for p in points.iter_mut() {
        let source = results.source_of(&p.model);
        let target = results.target_of(&p.task);
        let values = similarity.get(source, target).ok_or_else(|| {
            Error::Data(format!(
                "no similarity values for source {source:?} and target {target:?}"
            ))
        })?;
        p.similarity = values.clone();
    }
    Ok(())
}

/// Pearson product-moment correlation.
pub fn pearson_r(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::Argument(format!(
            "pearson_r needs equal lengths, got {} and {}",
            x.len(),
            y.len()
        )));
    }
    if x.len() < 2 {
        return Err(Error::Argument("pearson_r needs at least two points".into()));
    }
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        let (dx, dy) = (a - mx, b - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(Error::UndefinedCorrelation("zero variance".into()));
    }
    Ok((sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Directionality {
    Raw,
    Similarity,
}

impl FromStr for Directionality {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "raw" => Ok(Directionality::Raw),
            "similarity" | "similarity-oriented" => Ok(Directionality::Similarity),
            other => Err(Error::Argument(format!(
                "unknown direction {other:?} (expected raw or similarity)"
            ))),
        }
    }
}

impl fmt::Display for Directionality {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Directionality::Raw => "raw",
            Directionality::Similarity => "similarity",
        })
    }
}

const CORRELATED: [Measure; 4] = [Measure::Ppl, Measure::JsdPooled, Measure::Tvc, Measure::Ttr];

fn variable_name(measure: Measure, direction: Directionality) -> &'static str {
    match (measure, direction) {
        (Measure::Ppl, Directionality::Similarity) => "ppl_sim",
        (Measure::JsdPooled, Directionality::Similarity) => "jsd_sim",
        (Measure::Ppl, Directionality::Raw) => "ppl",
        (Measure::JsdPooled, Directionality::Raw) => "jsd",
        (m, _) => m.name(),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelationReport {
    pub direction: Directionality,
    pub variables: Vec<String>,
    /// `matrix[i][j]` is Pearson r between variables i and j; `None` where a
    /// variable is constant.
    pub matrix: Vec<Vec<Option<f64>>>,
    pub n_points: usize,
    pub warnings: Vec<String>,
}

impl CorrelationReport {
    pub fn get(&self, a: &str, b: &str) -> Option<f64> {
        let i = self.variables.iter().position(|v| v == a)?;
        let j = self.variables.iter().position(|v| v == b)?;
        self.matrix[i][j]
    }

    /// Long form `var_a,var_b,r,n`; undefined correlations leave `r` empty.
    pub fn write_long_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["var_a", "var_b", "r", "n"]).map_err(csv_err)?;
        for (i, a) in self.variables.iter().enumerate() {
            for (j, b) in self.variables.iter().enumerate() {
                let r = self.matrix[i][j].map(|r| r.to_string()).unwrap_or_default();
                w.write_record([a.as_str(), b.as_str(), &r, &self.n_points.to_string()])
                    .map_err(csv_err)?;
            }
        }
        w.flush()?;
        Ok(())
    }
}

/// Pairwise Pearson r over `delta` and whichever of ppl, jsd (pooled), tvc
/// and ttr are attached to the points.
///
/// In similarity mode ppl becomes `-ln(ppl)` and jsd becomes `1 - jsd`, so a
/// positive r reads as "more similar source, larger improvement". Constant
/// columns yield `None` entries and a warning instead of an error.
pub fn correlation_matrix(points: &[DeltaPoint], direction: Directionality) -> Result<CorrelationReport> {
    if points.len() < 2 {
        return Err(Error::Argument("correlation needs at least two points".into()));
    }
    let mut variables = vec!["delta".to_string()];
    let mut columns = vec![points.iter().map(|p| p.delta).collect::<Vec<f64>>()];
    for m in CORRELATED {
        let present = points.iter().filter(|p| p.similarity.contains_key(&m)).count();
        if present == 0 {
            continue;
        }
        if present != points.len() {
            return Err(Error::Data(format!(
                "measure {} attached to {present} of {} points",
                m.name(),
                points.len()
            )));
        }
        let col = points
            .iter()
            .map(|p| {
                let v = p.similarity[&m];
                match direction {
                    Directionality::Raw => v,
                    Directionality::Similarity => m.similarity(v).unwrap_or(v),
                }
            })
            .collect();
        variables.push(variable_name(m, direction).to_string());
        columns.push(col);
    }

    let k = columns.len();
    let mut warnings = Vec::new();
    let constant: Vec<bool> = columns
        .iter()
        .map(|c| c.windows(2).all(|w| w[0] == w[1]))
        .collect();
    for (name, _) in variables.iter().zip(&constant).filter(|(_, c)| **c) {
        warnings.push(format!("variable {name} is constant; its correlations are undefined"));
    }
    let mut matrix = vec![vec![None; k]; k];
    for i in 0..k {
        if constant[i] {
            continue;
        }
        matrix[i][i] = Some(1.0);
        for j in (i + 1)..k {
            if constant[j] {
                continue;
            }
            let r = match pearson_r(&columns[i], &columns[j]) {
                Ok(r) => Some(r),
                Err(Error::UndefinedCorrelation(_)) => None,
                Err(e) => return Err(e),
            };
            matrix[i][j] = r;
            matrix[j][i] = r;
        }
    }
    Ok(CorrelationReport {
        direction,
        variables,
        matrix,
        n_points: points.len(),
        warnings,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RankKey {
    Measure(Measure),
    /// Mean of the per-measure ranks under ppl, jsd (pooled) and tvc.
    Composite,
}

impl FromStr for RankKey {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "composite" => Ok(RankKey::Composite),
            other => {
                let m: Measure = other.parse()?;
                if m.similarity(1.0).is_none() {
                    return Err(Error::Argument(format!(
                        "{other} measures diversity, not similarity, and cannot rank sources"
                    )));
                }
                Ok(RankKey::Measure(m))
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankedSource {
    pub source: String,
    /// Similarity-oriented value of a single measure (larger is more similar),
    /// or the mean rank for the composite key (smaller is more similar).
    pub score: f64,
}

const COMPOSITE_MEASURES: [Measure; 3] = [Measure::Ppl, Measure::JsdPooled, Measure::Tvc];

fn similarity_of(profile: &SimilarityProfile, m: Measure) -> Result<f64> {
    let mean = profile.mean(m).ok_or_else(|| {
        Error::Data(format!("profile for source {:?} lacks measure {}", profile.source, m.name()))
    })?;
    m.similarity(mean)
        .ok_or_else(|| Error::Argument(format!("{} cannot rank sources", m.name())))
}

/// 1-based ranks by descending value; ties share the average rank.
fn average_ranks(values: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[b].total_cmp(&values[a]));
    let mut ranks = vec![0.0; values.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && values[order[j + 1]] == values[order[i]] {
            j += 1;
        }
        let rank = (i + j) as f64 / 2.0 + 1.0;
        for &idx in &order[i..=j] {
            ranks[idx] = rank;
        }
        i = j + 1;
    }
    ranks
}

/// Orders candidate sources for one target from most to least similar. Ties
/// are broken by source id.
pub fn rank_sources(profiles: &[SimilarityProfile], key: RankKey) -> Result<Vec<RankedSource>> {
    if let Some(first) = profiles.first() {
        if let Some(other) = profiles.iter().find(|p| p.target != first.target) {
            return Err(Error::Argument(format!(
                "profiles target different corpora ({:?} and {:?})",
                first.target, other.target
            )));
        }
    }
    let mut ranked: Vec<RankedSource> = match key {
        RankKey::Measure(m) => profiles
            .iter()
            .map(|p| {
                Ok(RankedSource {
                    source: p.source.clone(),
                    score: similarity_of(p, m)?,
                })
            })
            .collect::<Result<_>>()?,
        RankKey::Composite => {
            let mut sums = vec![0.0; profiles.len()];
            for m in COMPOSITE_MEASURES {
                let values = profiles
                    .iter()
                    .map(|p| similarity_of(p, m))
                    .collect::<Result<Vec<f64>>>()?;
                for (s, r) in sums.iter_mut().zip(average_ranks(&values)) {
                    *s += r;
                }
            }
            profiles
                .iter()
                .zip(sums)
                .map(|(p, s)| RankedSource {
                    source: p.source.clone(),
                    score: s / COMPOSITE_MEASURES.len() as f64,
                })
                .collect()
        }
    };
    match key {
        RankKey::Measure(_) => ranked.sort_by(|a, b| {
            b.score.total_cmp(&a.score).then_with(|| a.source.cmp(&b.source))
        }),
        RankKey::Composite => ranked.sort_by(|a, b| {
            a.score.total_cmp(&b.score).then_with(|| a.source.cmp(&b.source))
        }),
    }
    Ok(ranked)
}
