//! Scoring, metric suites, level aggregates, band tables, heatmap grids and
//! correlations.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

use crate::answer::{AnswerValue, ParsedAnswer};
use crate::qa::{GroundTruth, InstructionKind, PrepromptKind};

#[derive(Debug, Error, PartialEq)]
pub enum DiagError {
    #[error("no records to score")]
    Empty,
    #[error("variable `{0}` is not present in any record")]
    UnknownVariable(String),
    #[error("series lengths differ ({0} vs {1})")]
    LengthMismatch(usize, usize),
    #[error("correlation needs at least two paired levels, got {0}")]
    TooShort(usize),
    #[error("bad band definition `{0}`")]
    BadBand(String),
}

/// Per-record outcome of comparing a parsed answer with the truth.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Score {
    pub correct: bool,
    /// Integer and cell kinds only; L_LOC for cells.
    pub abs_error: Option<f64>,
    pub norm_error: Option<f64>,
    pub unparsed: bool,
}

/// Grid distance |Δrow| + |Δcol|.
pub fn l_loc(truth: [i64; 2], pred: [i64; 2]) -> i64 {
    (truth[0] - pred[0]).abs() + (truth[1] - pred[1]).abs()
}

/// |e| / t, or |e| when the target is zero.
pub fn normalized_error(abs_error: f64, target: f64) -> f64 {
    if target == 0.0 {
        abs_error
    } else {
        abs_error / target.abs()
    }
}

/// Cells use the truth's L1 norm as their target.
fn target_of(v: &AnswerValue) -> Option<f64> {
    match v {
        AnswerValue::Integer(t) => Some(*t as f64),
        AnswerValue::Cell([r, c]) => Some((r.abs() + c.abs()) as f64),
        _ => None,
    }
}

pub fn score_record(truth: &GroundTruth, answer: &ParsedAnswer) -> Score {
    let pred = answer.value.as_ref().filter(|v| v.kind() == truth.value.kind());
    let target = target_of(&truth.value);
    let Some(pred) = pred else {
        // error = target for unparsed numeric answers
        return Score {
            correct: false,
            abs_error: target.map(f64::abs),
            norm_error: target.map(|t| normalized_error(t.abs(), t)),
            unparsed: true,
        };
    };
    let abs_error = match (&truth.value, pred) {
        (AnswerValue::Integer(t), AnswerValue::Integer(p)) => Some((t - p).abs() as f64),
        (AnswerValue::Cell(t), AnswerValue::Cell(p)) => Some(l_loc(*t, *p) as f64),
        _ => None,
    };
    Score {
        correct: truth.value.matches(pred),
        abs_error,
        norm_error: abs_error.zip(target).map(|(e, t)| normalized_error(e, t)),
        unparsed: false,
    }
}

/// One scored question on one image.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalRecord {
    pub scene_index: u64,
    pub key: String,
    #[serde(default)]
    pub variables: BTreeMap<String, Value>,
    pub preprompt: PrepromptKind,
    pub instruction: InstructionKind,
    pub ground_truth: GroundTruth,
    pub parsed: ParsedAnswer,
    pub correct: bool,
    pub abs_error: Option<f64>,
    pub norm_error: Option<f64>,
    pub unparsed: bool,
}

impl EvalRecord {
    pub fn new(
        scene_index: u64,
        key: &str,
        variables: BTreeMap<String, Value>,
        preprompt: PrepromptKind,
        instruction: InstructionKind,
        ground_truth: GroundTruth,
        parsed: ParsedAnswer,
    ) -> Self {
        let s = score_record(&ground_truth, &parsed);
        Self {
            scene_index,
            key: key.to_string(),
            variables,
            preprompt,
            instruction,
            ground_truth,
            parsed,
            correct: s.correct,
            abs_error: s.abs_error,
            norm_error: s.norm_error,
            unparsed: s.unparsed,
        }
    }

    /// Level of a variable; `key`, `preprompt`, `instruction`, `truth.row`
    /// and `truth.col` are always available.
    pub fn level(&self, var: &str) -> Option<Level> {
        match var {
            "key" => Some(Level(Value::from(self.key.clone()))),
            "preprompt" => Some(Level(Value::from(self.preprompt.as_str()))),
            "instruction" => Some(Level(Value::from(self.instruction.as_str()))),
            "truth" => Some(Level(Value::from(self.ground_truth.value.to_string()))),
            "truth.row" | "truth.col" => match self.ground_truth.value {
                AnswerValue::Cell([r, c]) => Some(Level(Value::from(if var == "truth.row" { r } else { c }))),
                _ => None,
            },
            _ => self.variables.get(var).cloned().map(Level),
        }
    }
}

fn class_of(v: &AnswerValue) -> String {
    match v {
        AnswerValue::LabelList(l) => {
            let set: BTreeSet<String> = l.iter().map(|s| s.to_ascii_lowercase()).collect();
            format!("[{}]", set.into_iter().collect::<Vec<_>>().join(","))
        }
        AnswerValue::Label(s) => s.to_ascii_lowercase(),
        other => other.to_string(),
    }
}

/// Mergeable sufficient statistics for a `MetricSuite`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SuiteAccumulator {
    pub n: u64,
    pub correct: u64,
    pub unparsed: u64,
    pub n_error: u64,
    pub sum_abs: f64,
    pub sum_sq: f64,
    pub sum_norm: f64,
    pub truth_counts: BTreeMap<String, u64>,
    pub pred_counts: BTreeMap<String, u64>,
    pub true_positives: BTreeMap<String, u64>,
}

impl SuiteAccumulator {
    pub fn push(&mut self, r: &EvalRecord) {
        self.n += 1;
        self.correct += u64::from(r.correct);
        self.unparsed += u64::from(r.unparsed);
        if let Some(e) = r.abs_error {
            self.n_error += 1;
            self.sum_abs += e;
            self.sum_sq += e * e;
            self.sum_norm += r.norm_error.unwrap_or(e);
        }
        let t = class_of(&r.ground_truth.value);
        *self.truth_counts.entry(t.clone()).or_default() += 1;
        if let Some(p) = r.parsed.value.as_ref().filter(|p| p.kind() == r.ground_truth.value.kind()) {
            *self.pred_counts.entry(class_of(p)).or_default() += 1;
            if r.correct {
                *self.true_positives.entry(t).or_default() += 1;
            }
        }
    }

    pub fn merge(&mut self, o: &SuiteAccumulator) {
        self.n += o.n;
        self.correct += o.correct;
        self.unparsed += o.unparsed;
        self.n_error += o.n_error;
        self.sum_abs += o.sum_abs;
        self.sum_sq += o.sum_sq;
        self.sum_norm += o.sum_norm;
        for (dst, src) in [
            (&mut self.truth_counts, &o.truth_counts),
            (&mut self.pred_counts, &o.pred_counts),
            (&mut self.true_positives, &o.true_positives),
        ] {
            for (k, v) in src {
                *dst.entry(k.clone()).or_default() += v;
            }
        }
    }

    pub fn finish(&self) -> Result<MetricSuite, DiagError> {
        if self.n == 0 {
            return Err(DiagError::Empty);
        }
        let n = self.n as f64;
        let (mut p_sum, mut r_sum, mut f_sum) = (0.0, 0.0, 0.0);
        let get = |m: &BTreeMap<String, u64>, k: &str| m.get(k).copied().unwrap_or(0) as f64;
        for (class, &truth_n) in &self.truth_counts {
            let tp = get(&self.true_positives, class);
            let pred_n = get(&self.pred_counts, class);
            let p = if pred_n > 0.0 { tp / pred_n } else { 0.0 };
            let r = tp / truth_n as f64;
            p_sum += p;
            r_sum += r;
            f_sum += if p + r > 0.0 { 2.0 * p * r / (p + r) } else { 0.0 };
        }
        let k = self.truth_counts.len() as f64;
        let ne = self.n_error as f64;
        let mean = |s: f64| (self.n_error > 0).then(|| s / ne);
        Ok(MetricSuite {
            n: self.n,
            accuracy: self.correct as f64 / n,
            precision: p_sum / k,
            recall: r_sum / k,
            f1: f_sum / k,
            mae: mean(self.sum_abs),
            mse: mean(self.sum_sq),
            nmae: mean(self.sum_norm),
            unparsed_rate: self.unparsed as f64 / n,
        })
    }
}

/// Precision, recall and F1 are macro averages of one-vs-rest scores over
/// the distinct truth values in the set.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricSuite {
    pub n: u64,
    pub accuracy: f64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub mae: Option<f64>,
    pub mse: Option<f64>,
    pub nmae: Option<f64>,
    pub unparsed_rate: f64,
}

pub fn accumulate<'a>(records: impl IntoIterator<Item = &'a EvalRecord>) -> SuiteAccumulator {
    let mut acc = SuiteAccumulator::default();
    for r in records {
        acc.push(r);
    }
    acc
}

pub fn compute_suite<'a>(records: impl IntoIterator<Item = &'a EvalRecord>) -> Result<MetricSuite, DiagError> {
    accumulate(records).finish()
}

/// A variable level with a total order: numbers first by value, then
/// strings, then anything else by its JSON text.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Level(pub Value);

impl Level {
    fn rank(&self) -> u8 {
        match &self.0 {
            Value::Number(_) => 0,
            Value::String(_) => 1,
            _ => 2,
        }
    }

    pub fn as_f64(&self) -> Option<f64> {
        self.0.as_f64()
    }

    pub fn label(&self) -> String {
        match &self.0 {
            Value::String(s) => s.clone(),
            other => other.to_string(),
        }
    }
}

impl Eq for Level {}

impl Ord for Level {
    fn cmp(&self, o: &Self) -> Ordering {
        self.rank().cmp(&o.rank()).then_with(|| match (&self.0, &o.0) {
            (Value::Number(a), Value::Number(b)) => {
                a.as_f64().unwrap_or(0.0).total_cmp(&b.as_f64().unwrap_or(0.0))
            }
            (Value::String(a), Value::String(b)) => a.cmp(b),
            (a, b) => a.to_string().cmp(&b.to_string()),
        })
    }
}

impl PartialOrd for Level {
    fn partial_cmp(&self, o: &Self) -> Option<Ordering> {
        Some(self.cmp(o))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeanStd {
    pub mean: f64,
    /// Population standard deviation.
    pub std: f64,
}

pub fn mean_std(xs: &[f64]) -> Option<MeanStd> {
    if xs.is_empty() {
        return None;
    }
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n;
    Some(MeanStd { mean, std: var.sqrt() })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevelAggregate {
    pub variable: String,
    pub level: Level,
    pub n: u64,
    pub accuracy: MeanStd,
    pub abs_error: Option<MeanStd>,
    pub sq_error: Option<MeanStd>,
    pub norm_error: Option<MeanStd>,
    pub suite: MetricSuite,
    /// Positions in the input record list.
    pub records: Vec<usize>,
}

fn group_by<'a>(records: &'a [EvalRecord], var: &str) -> Result<BTreeMap<Level, Vec<usize>>, DiagError> {
    let mut groups: BTreeMap<Level, Vec<usize>> = BTreeMap::new();
    for (i, r) in records.iter().enumerate() {
        if let Some(l) = r.level(var) {
            groups.entry(l).or_default().push(i);
        }
    }
    if groups.is_empty() {
        return Err(DiagError::UnknownVariable(var.to_string()));
    }
    Ok(groups)
}

pub fn aggregate_by_level(records: &[EvalRecord], var: &str) -> Result<Vec<LevelAggregate>, DiagError> {
    let groups = group_by(records, var)?;
    let mut out = Vec::with_capacity(groups.len());
    for (level, idx) in groups {
        let rs: Vec<&EvalRecord> = idx.iter().map(|&i| &records[i]).collect();
        let acc: Vec<f64> = rs.iter().map(|r| f64::from(u8::from(r.correct))).collect();
        let abs: Vec<f64> = rs.iter().filter_map(|r| r.abs_error).collect();
        let sq: Vec<f64> = abs.iter().map(|e| e * e).collect();
        let norm: Vec<f64> = rs.iter().filter_map(|r| r.norm_error).collect();
        out.push(LevelAggregate {
            variable: var.to_string(),
            level,
            n: rs.len() as u64,
            accuracy: mean_std(&acc).expect("non-empty group"),
            abs_error: mean_std(&abs),
            sq_error: mean_std(&sq),
            norm_error: mean_std(&norm),
            suite: compute_suite(rs.iter().copied())?,
            records: idx,
        });
    }
    Ok(out)
}

/// Inclusive integer range of a difficulty variable.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Band {
    pub name: String,
    pub lo: i64,
    pub hi: i64,
}

impl Band {
    pub fn new(name: &str, lo: i64, hi: i64) -> Self {
        Self { name: name.to_string(), lo, hi }
    }

    pub fn contains(&self, v: i64) -> bool {
        (self.lo..=self.hi).contains(&v)
    }
}

pub fn default_bands() -> Vec<Band> {
    vec![Band::new("Low", 1, 4), Band::new("Medium", 5, 9), Band::new("High", 10, 21)]
}

/// `Low:1-4,Medium:5-9,High:10-21`.
pub fn parse_bands(s: &str) -> Result<Vec<Band>, DiagError> {
    s.split(',')
        .map(|part| {
            let bad = || DiagError::BadBand(part.to_string());
            let (name, range) = part.split_once(':').ok_or_else(bad)?;
            let (lo, hi) = range.split_once('-').ok_or_else(bad)?;
            let lo: i64 = lo.trim().parse().map_err(|_| bad())?;
            let hi: i64 = hi.trim().parse().map_err(|_| bad())?;
            if name.trim().is_empty() || lo > hi {
                return Err(bad());
            }
            Ok(Band::new(name.trim(), lo, hi))
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BandRow {
    pub band: Band,
    pub n: u64,
    pub levels: u64,
    pub accuracy: f64,
    /// Spread of per-record correctness.
    pub std_samples: f64,
    /// Spread of the per-level mean accuracies inside the band.
    pub std_levels: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BandTable {
    pub variable: String,
    pub rows: Vec<BandRow>,
    /// Records whose level is not an integer or falls in no band.
    pub orphans: Vec<usize>,
}

pub fn band_table(records: &[EvalRecord], var: &str, bands: &[Band]) -> Result<BandTable, DiagError> {
    let groups = group_by(records, var)?;
    let mut per_band: Vec<Vec<(i64, bool)>> = vec![Vec::new(); bands.len()];
    let mut orphans = Vec::new();
    for (level, idx) in &groups {
        let v = level.as_f64().filter(|x| x.fract() == 0.0).map(|x| x as i64);
        let slot = v.and_then(|v| bands.iter().position(|b| b.contains(v)));
        match (v, slot) {
            (Some(v), Some(b)) => per_band[b].extend(idx.iter().map(|&i| (v, records[i].correct))),
            _ => orphans.extend(idx.iter().copied()),
        }
    }
    orphans.sort_unstable();
    let rows = bands
        .iter()
        .zip(per_band)
        .map(|(band, items)| {
            let acc: Vec<f64> = items.iter().map(|&(_, c)| f64::from(u8::from(c))).collect();
            let mut by_level: BTreeMap<i64, Vec<f64>> = BTreeMap::new();
            for &(v, c) in &items {
                by_level.entry(v).or_default().push(f64::from(u8::from(c)));
            }
            let level_means: Vec<f64> = by_level.values().map(|xs| xs.iter().sum::<f64>() / xs.len() as f64).collect();
            let s = mean_std(&acc).unwrap_or(MeanStd { mean: 0.0, std: 0.0 });
            BandRow {
                band: band.clone(),
                n: items.len() as u64,
                levels: by_level.len() as u64,
                accuracy: s.mean,
                std_samples: s.std,
                std_levels: mean_std(&level_means).map_or(0.0, |m| m.std),
            }
        })
        .collect();
    Ok(BandTable { variable: var.to_string(), rows, orphans })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    Accuracy,
    Mae,
    Mse,
    Nmae,
    UnparsedRate,
}

impl Metric {
    pub fn parse(s: &str) -> Option<Self> {
        Some(match s.trim().to_ascii_lowercase().as_str() {
            "accuracy" | "acc" => Metric::Accuracy,
            "mae" => Metric::Mae,
            "mse" => Metric::Mse,
            "nmae" => Metric::Nmae,
            "unparsed" | "unparsed_rate" => Metric::UnparsedRate,
            _ => return None,
        })
    }

    pub fn of(self, s: &MetricSuite) -> Option<f64> {
        match self {
            Metric::Accuracy => Some(s.accuracy),
            Metric::Mae => s.mae,
            Metric::Mse => s.mse,
            Metric::Nmae => s.nmae,
            Metric::UnparsedRate => Some(s.unparsed_rate),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HeatmapGrid {
    pub x_variable: String,
    pub y_variable: String,
    pub metric: Metric,
    pub x_levels: Vec<Level>,
    pub y_levels: Vec<Level>,
    /// `values[y][x]`; `None` marks an empty cell.
    pub values: Vec<Vec<Option<f64>>>,
    pub counts: Vec<Vec<u64>>,
}

impl HeatmapGrid {
    pub fn empty_cells(&self) -> usize {
        self.counts.iter().flatten().filter(|&&c| c == 0).count()
    }
}

pub fn cross_grid(records: &[EvalRecord], x: &str, y: &str, metric: Metric) -> Result<HeatmapGrid, DiagError> {
    let xs: Vec<Level> = group_by(records, x)?.into_keys().collect();
    let ys: Vec<Level> = group_by(records, y)?.into_keys().collect();
    let mut cells: Vec<Vec<SuiteAccumulator>> = vec![vec![SuiteAccumulator::default(); xs.len()]; ys.len()];
    for r in records {
        if let (Some(lx), Some(ly)) = (r.level(x), r.level(y)) {
            let i = xs.binary_search(&lx).expect("level collected above");
            let j = ys.binary_search(&ly).expect("level collected above");
            cells[j][i].push(r);
        }
    }
    let values =
        cells.iter().map(|row| row.iter().map(|a| a.finish().ok().and_then(|s| metric.of(&s))).collect()).collect();
    let counts = cells.iter().map(|row| row.iter().map(|a| a.n).collect()).collect();
    Ok(HeatmapGrid { x_variable: x.into(), y_variable: y.into(), metric, x_levels: xs, y_levels: ys, values, counts })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelationReport {
    pub n: usize,
    pub series_a: Vec<f64>,
    pub series_b: Vec<f64>,
    pub pearson: Option<f64>,
    pub spearman: Option<f64>,
    /// Set when either series has zero variance.
    pub undefined: bool,
}

pub fn pearson(a: &[f64], b: &[f64]) -> Option<f64> {
    let n = a.len() as f64;
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        sab += (x - ma) * (y - mb);
        saa += (x - ma) * (x - ma);
        sbb += (y - mb) * (y - mb);
    }
    if saa == 0.0 || sbb == 0.0 {
        return None;
    }
    Some((sab / (saa.sqrt() * sbb.sqrt())).clamp(-1.0, 1.0))
}

/// 1-based ranks, ties get the mean of the ranks they span.
pub fn fractional_ranks(xs: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..xs.len()).collect();
    idx.sort_by(|&i, &j| xs[i].total_cmp(&xs[j]));
    let mut ranks = vec![0.0; xs.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && xs[idx[j + 1]] == xs[idx[i]] {
            j += 1;
        }
        let r = (i + j) as f64 / 2.0 + 1.0;
        for &k in &idx[i..=j] {
            ranks[k] = r;
        }
        i = j + 1;
    }
    ranks
}

pub fn correlate(a: &[f64], b: &[f64]) -> Result<CorrelationReport, DiagError> {
    if a.len() != b.len() {
        return Err(DiagError::LengthMismatch(a.len(), b.len()));
    }
    if a.len() < 2 {
        return Err(DiagError::TooShort(a.len()));
    }
    let p = pearson(a, b);
    let s = pearson(&fractional_ranks(a), &fractional_ranks(b));
    Ok(CorrelationReport {
        n: a.len(),
        series_a: a.to_vec(),
        series_b: b.to_vec(),
        pearson: p,
        spearman: s,
        undefined: p.is_none() || s.is_none(),
    })
}

/// Per-level series of a metric, for pairing with another run.
pub fn level_series(aggs: &[LevelAggregate], metric: Metric) -> Vec<(Level, f64)> {
    aggs.iter().filter_map(|a| metric.of(&a.suite).map(|v| (a.level.clone(), v))).collect()
}

/// Pairs two level series on their shared levels.
pub fn correlate_levels(a: &[(Level, f64)], b: &[(Level, f64)]) -> Result<CorrelationReport, DiagError> {
    let bm: BTreeMap<&Level, f64> = b.iter().map(|(l, v)| (l, *v)).collect();
    let (xs, ys): (Vec<f64>, Vec<f64>) = a.iter().filter_map(|(l, v)| bm.get(l).map(|w| (*v, *w))).unzip();
    correlate(&xs, &ys)
}

/// Count of (truth, prediction) class pairs; unparsed predictions are `unparsed`.
pub fn confusion(records: &[EvalRecord]) -> BTreeMap<(String, String), u64> {
    let mut m = BTreeMap::new();
    for r in records {
        let t = class_of(&r.ground_truth.value);
        let p = match r.parsed.value.as_ref().filter(|p| p.kind() == r.ground_truth.value.kind()) {
            Some(p) => class_of(p),
            None => "unparsed".to_string(),
        };
        *m.entry((t, p)).or_default() += 1;
    }
    m
}

/// Histogram of signed integer errors (prediction minus truth).
pub fn error_histogram(records: &[EvalRecord]) -> BTreeMap<i64, u64> {
    let mut m = BTreeMap::new();
    for r in records {
        if let (AnswerValue::Integer(t), Some(AnswerValue::Integer(p))) = (&r.ground_truth.value, &r.parsed.value) {
            *m.entry(p - t).or_default() += 1;
        }
    }
    m
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub f1_definition: String,
    pub overall: MetricSuite,
    pub by_key: BTreeMap<String, MetricSuite>,
    /// Preprompt by instruction accuracy, one grid per key.
    pub prompt_grids: BTreeMap<String, HeatmapGrid>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub levels: Vec<LevelAggregate>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bands: Option<BandTable>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cross: Option<HeatmapGrid>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub localization: Option<HeatmapGrid>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub correlations: Vec<CorrelationReport>,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ReportConfig {
    pub by: Option<String>,
    pub cross: Option<(String, String)>,
    pub bands: Option<Vec<Band>>,
    pub metric: Option<Metric>,
}

pub const F1_DEFINITION: &str =
    "macro average of one-vs-rest F1 over the distinct ground-truth values; integer answers are treated as classes";

pub fn build_report(records: &[EvalRecord], cfg: &ReportConfig) -> Result<Report, DiagError> {
    let overall = compute_suite(records)?;
    let mut keyed: BTreeMap<String, Vec<EvalRecord>> = BTreeMap::new();
    for r in records {
        keyed.entry(r.key.clone()).or_default().push(r.clone());
    }
    let mut by_key = BTreeMap::new();
    let mut prompt_grids = BTreeMap::new();
    for (k, rs) in &keyed {
        by_key.insert(k.clone(), compute_suite(rs)?);
        prompt_grids.insert(k.clone(), cross_grid(rs, "instruction", "preprompt", Metric::Accuracy)?);
    }
    let levels = match &cfg.by {
        Some(v) => aggregate_by_level(records, v)?,
        None => Vec::new(),
    };
    let bands = match (&cfg.by, &cfg.bands) {
        (Some(v), Some(b)) => Some(band_table(records, v, b)?),
        _ => None,
    };
    let metric = cfg.metric.unwrap_or(Metric::Accuracy);
    let cross = match &cfg.cross {
        Some((x, y)) => Some(cross_grid(records, x, y, metric)?),
        None => None,
    };
    let cells: Vec<EvalRecord> =
        records.iter().filter(|r| matches!(r.ground_truth.value, AnswerValue::Cell(_))).cloned().collect();
    let localization = if cells.is_empty() {
        None
    } else {
        Some(cross_grid(&cells, "truth.col", "truth.row", Metric::Accuracy)?)
    };
    Ok(Report {
        f1_definition: F1_DEFINITION.to_string(),
        overall,
        by_key,
        prompt_grids,
        levels,
        bands,
        cross,
        localization,
        correlations: Vec::new(),
    })
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

const SUITE_HEADER: &str = "n,accuracy,precision,recall,f1,mae,mse,nmae,unparsed_rate";

fn suite_csv(s: &MetricSuite) -> String {
    format!(
        "{},{},{},{},{},{},{},{},{}",
        s.n,
        s.accuracy,
        s.precision,
        s.recall,
        s.f1,
        opt(s.mae),
        opt(s.mse),
        opt(s.nmae),
        s.unparsed_rate
    )
}

/// Flat export: one row per suite in the report.
pub fn report_csv(r: &Report) -> String {
    let mut out = format!("scope,group,level,{SUITE_HEADER}\n");
    let _ = writeln!(out, "overall,,,{}", suite_csv(&r.overall));
    for (k, s) in &r.by_key {
        let _ = writeln!(out, "key,{},,{}", csv_field(k), suite_csv(s));
    }
    for a in &r.levels {
        let _ = writeln!(out, "level,{},{},{}", csv_field(&a.variable), csv_field(&a.level.label()), suite_csv(&a.suite));
    }
    out
}

/// Level curve data with mean and std columns.
pub fn level_curve_csv(aggs: &[LevelAggregate]) -> String {
    let mut out =
        String::from("variable,level,n,accuracy_mean,accuracy_std,mae_mean,mae_std,nmae_mean,nmae_std\n");
    for a in aggs {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{}",
            csv_field(&a.variable),
            csv_field(&a.level.label()),
            a.n,
            a.accuracy.mean,
            a.accuracy.std,
            opt(a.abs_error.map(|m| m.mean)),
            opt(a.abs_error.map(|m| m.std)),
            opt(a.norm_error.map(|m| m.mean)),
            opt(a.norm_error.map(|m| m.std)),
        );
    }
    out
}

pub fn band_csv(t: &BandTable) -> String {
    let mut out = String::from("band,lo,hi,n,levels,accuracy,std_samples,std_levels\n");
    for r in &t.rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{}",
            csv_field(&r.band.name),
            r.band.lo,
            r.band.hi,
            r.n,
            r.levels,
            r.accuracy,
            r.std_samples,
            r.std_levels
        );
    }
    out
}

pub fn grid_csv(g: &HeatmapGrid) -> String {
    let mut out = format!("{}\\{}", csv_field(&g.y_variable), csv_field(&g.x_variable));
    for x in &g.x_levels {
        out.push(',');
        out.push_str(&csv_field(&x.label()));
    }
    out.push('\n');
    for (y, row) in g.y_levels.iter().zip(&g.values) {
        out.push_str(&csv_field(&y.label()));
        for v in row {
            out.push(',');
            out.push_str(&opt(*v));
        }
        out.push('\n');
    }
    out
}

pub fn confusion_csv(m: &BTreeMap<(String, String), u64>) -> String {
    let mut out = String::from("truth,prediction,count\n");
    for ((t, p), c) in m {
        let _ = writeln!(out, "{},{},{c}", csv_field(t), csv_field(p));
    }
    out
}

pub fn histogram_csv(m: &BTreeMap<i64, u64>) -> String {
    let mut out = String::from("error,count\n");
    for (e, c) in m {
        let _ = writeln!(out, "{e},{c}");
    }
    out
}
