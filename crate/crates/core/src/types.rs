//! Domain types shared by every module.
//!
//! Spike times live on a discrete domain `{0, 1, ..., t_max}`. Trains and
//! ensembles are immutable once built; constructors enforce their invariants
//! so downstream code never re-checks them.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A recording tick.
pub type Tick = u32;

/// The discrete time domain `{0, ..., t_max}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct TimeDomain {
    pub t_max: Tick,
}

impl TimeDomain {
    pub fn new(t_max: Tick) -> Self {
        Self { t_max }
    }

    pub fn contains(&self, t: i64) -> bool {
        t >= 0 && t <= i64::from(self.t_max)
    }
}

/// Quantizes a real-valued time to the nearest tick, `floor(t / tick + 1/2)`.
pub fn quantize(t: f64, tick: f64) -> Result<i64> {
    if !(tick > 0.0) || !tick.is_finite() || !t.is_finite() {
        return Err(Error::InvalidInput(format!(
            "cannot quantize t={t} with tick size {tick}"
        )));
    }
    Ok((t / tick + 0.5).floor() as i64)
}

/// A finite, strictly increasing set of spike times inside a [`TimeDomain`].
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct SpikeTrain {
    times: Vec<Tick>,
    domain: TimeDomain,
}

impl SpikeTrain {
    /// Builds a train from strictly increasing times.
    pub fn new(times: Vec<Tick>, domain: TimeDomain) -> Result<Self> {
        if let Some(w) = times.windows(2).find(|w| w[0] >= w[1]) {
            return Err(Error::InvalidInput(format!(
                "spike times must be strictly increasing ({} then {})",
                w[0], w[1]
            )));
        }
        if let Some(&t) = times.last() {
            if t > domain.t_max {
                return Err(Error::InvalidInput(format!(
                    "spike time {t} outside [0, {}]",
                    domain.t_max
                )));
            }
        }
        Ok(Self { times, domain })
    }

    /// Sorts and deduplicates before validating the range.
    pub fn from_unsorted(mut times: Vec<Tick>, domain: TimeDomain) -> Result<Self> {
        times.sort_unstable();
        times.dedup();
        Self::new(times, domain)
    }

    pub fn empty(domain: TimeDomain) -> Self {
        Self {
            times: Vec::new(),
            domain,
        }
    }

    pub fn times(&self) -> &[Tick] {
        &self.times
    }

    pub fn domain(&self) -> TimeDomain {
        self.domain
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }
}

impl PartialOrd for SpikeTrain {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Lexicographic by spike sequence; the empty train sorts first.
impl Ord for SpikeTrain {
    fn cmp(&self, other: &Self) -> Ordering {
        self.times
            .cmp(&other.times)
            .then(self.domain.cmp(&other.domain))
    }
}

/// The `k` trains recorded simultaneously in one trial.
///
/// Storage order is whatever the caller supplied; [`TrainEnsemble::canonicalize`]
/// produces the lexicographic order that stands for the unordered multiset.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TrainEnsemble {
    trains: Vec<SpikeTrain>,
    domain: TimeDomain,
    duplicates: bool,
}

impl TrainEnsemble {
    pub fn new(trains: Vec<SpikeTrain>) -> Result<Self> {
        let Some(first) = trains.first() else {
            return Err(Error::InvalidInput(
                "an ensemble needs at least one train".into(),
            ));
        };
        let domain = first.domain;
        if trains.iter().any(|t| t.domain != domain) {
            return Err(Error::InvalidInput(
                "all trains in an ensemble must share one time domain".into(),
            ));
        }
        let mut sorted: Vec<&SpikeTrain> = trains.iter().collect();
        sorted.sort();
        let duplicates = sorted.windows(2).any(|w| w[0] == w[1]);
        Ok(Self {
            trains,
            domain,
            duplicates,
        })
    }

    /// Convenience constructor from raw tick lists.
    pub fn from_times(lists: Vec<Vec<Tick>>, domain: TimeDomain) -> Result<Self> {
        let trains = lists
            .into_iter()
            .map(|t| SpikeTrain::new(t, domain))
            .collect::<Result<Vec<_>>>()?;
        Self::new(trains)
    }

    pub fn trains(&self) -> &[SpikeTrain] {
        &self.trains
    }

    pub fn domain(&self) -> TimeDomain {
        self.domain
    }

    pub fn len(&self) -> usize {
        self.trains.len()
    }

    pub fn is_empty(&self) -> bool {
        self.trains.is_empty()
    }

    /// True when at least two trains are identical.
    pub fn has_duplicates(&self) -> bool {
        self.duplicates
    }

    pub fn is_canonical(&self) -> bool {
        self.trains.windows(2).all(|w| w[0] <= w[1])
    }

    /// Sorts trains lexicographically. Idempotent and permutation-invariant.
    pub fn canonicalize(&self) -> TrainEnsemble {
        let mut trains = self.trains.clone();
        trains.sort();
        TrainEnsemble {
            trains,
            domain: self.domain,
            duplicates: self.duplicates,
        }
    }

    /// Same trains in the order given by `perm` (`perm[i]` is the source index).
    pub fn permuted(&self, perm: &[usize]) -> Result<TrainEnsemble> {
        let mut seen = vec![false; self.len()];
        if perm.len() != self.len() || perm.iter().any(|&p| p >= seen.len() || std::mem::replace(&mut seen[p], true)) {
            return Err(Error::InvalidInput("not a permutation".into()));
        }
        Ok(TrainEnsemble {
            trains: perm.iter().map(|&p| self.trains[p].clone()).collect(),
            domain: self.domain,
            duplicates: self.duplicates,
        })
    }
}

/// Free-function form of [`TrainEnsemble::canonicalize`].
pub fn canonicalize(ensemble: &TrainEnsemble) -> TrainEnsemble {
    ensemble.canonicalize()
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabeledTrial {
    pub trial_id: i64,
    pub stimulus: String,
    pub ensemble: TrainEnsemble,
}

/// On-disk raster layout; also the unvalidated form of a [`Dataset`].
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RasterFile {
    pub t_max: i64,
    pub stimuli: Vec<String>,
    pub trials: Vec<RawTrial>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RawTrial {
    pub trial_id: i64,
    pub stimulus: String,
    pub trains: Vec<Vec<i64>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Rule {
    /// `t_max` is negative or does not fit a tick.
    Domain,
    /// The stimulus list repeats a label.
    DuplicateStimulus,
    /// Two trials share an id.
    DuplicateTrialId,
    /// A trial's label is not in the declared stimulus list.
    UnknownStimulus,
    /// A trial has a train count different from the dataset's neuron count.
    Shape,
    /// A spike lies outside `[0, t_max]`.
    Range,
    /// Spike times are not strictly increasing.
    Order,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Violation {
    pub trial_id: Option<i64>,
    pub rule: Rule,
    pub detail: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.trial_id {
            Some(id) => write!(f, "trial {id}: {:?}: {}", self.rule, self.detail),
            None => write!(f, "{:?}: {}", self.rule, self.detail),
        }
    }
}

/// Train count most trials agree on (ties go to the larger count).
pub fn inferred_neuron_count(raw: &RasterFile) -> usize {
    let mut counts: BTreeMap<usize, usize> = BTreeMap::new();
    for t in &raw.trials {
        *counts.entry(t.trains.len()).or_default() += 1;
    }
    counts
        .into_iter()
        .max_by(|a, b| a.1.cmp(&b.1).then(a.0.cmp(&b.0)))
        .map(|(k, _)| k)
        .unwrap_or(0)
}

/// Lists every invariant violation in a raw dataset. Empty means valid.
pub fn validate_dataset(raw: &RasterFile) -> Vec<Violation> {
    let mut out = Vec::new();
    if raw.t_max < 0 || raw.t_max > i64::from(Tick::MAX) {
        out.push(Violation {
            trial_id: None,
            rule: Rule::Domain,
            detail: format!("t_max {} is not a valid tick", raw.t_max),
        });
    }
    let mut labels = BTreeSet::new();
    for s in &raw.stimuli {
        if !labels.insert(s.as_str()) {
            out.push(Violation {
                trial_id: None,
                rule: Rule::DuplicateStimulus,
                detail: format!("stimulus {s:?} declared twice"),
            });
        }
    }
    let k = inferred_neuron_count(raw);
    let mut ids = BTreeSet::new();
    for trial in &raw.trials {
        let id = Some(trial.trial_id);
        if !ids.insert(trial.trial_id) {
            out.push(Violation {
                trial_id: id,
                rule: Rule::DuplicateTrialId,
                detail: "trial id repeated".into(),
            });
        }
        if !labels.contains(trial.stimulus.as_str()) {
            out.push(Violation {
                trial_id: id,
                rule: Rule::UnknownStimulus,
                detail: format!("stimulus {:?} not declared", trial.stimulus),
            });
        }
        if trial.trains.len() != k || k == 0 {
            out.push(Violation {
                trial_id: id,
                rule: Rule::Shape,
                detail: format!("{} trains, expected {k}", trial.trains.len()),
            });
        }
        for (n, train) in trial.trains.iter().enumerate() {
            if let Some(&t) = train.iter().find(|&&t| t < 0 || t > raw.t_max) {
                out.push(Violation {
                    trial_id: id,
                    rule: Rule::Range,
                    detail: format!("neuron {n}: spike time {t} outside [0, {}]", raw.t_max),
                });
            }
            if train.windows(2).any(|w| w[0] >= w[1]) {
                out.push(Violation {
                    trial_id: id,
                    rule: Rule::Order,
                    detail: format!("neuron {n}: times not strictly increasing"),
                });
            }
        }
    }
    out
}

/// A validated set of labeled trials over one time domain.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Dataset {
    domain: TimeDomain,
    stimuli: Vec<String>,
    neuron_count: usize,
    trials: Vec<LabeledTrial>,
}

impl Dataset {
    pub fn from_raster(raw: &RasterFile) -> Result<Self> {
        let violations = validate_dataset(raw);
        if !violations.is_empty() {
            return Err(Error::InvalidDataset(violations));
        }
        let domain = TimeDomain::new(raw.t_max as Tick);
        let trials = raw
            .trials
            .iter()
            .map(|t| {
                let lists = t
                    .trains
                    .iter()
                    .map(|tr| tr.iter().map(|&x| x as Tick).collect())
                    .collect();
                Ok(LabeledTrial {
                    trial_id: t.trial_id,
                    stimulus: t.stimulus.clone(),
                    ensemble: TrainEnsemble::from_times(lists, domain)?,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            domain,
            stimuli: raw.stimuli.clone(),
            neuron_count: inferred_neuron_count(raw),
            trials,
        })
    }

    /// Builds from typed trials, checking labels, shapes, ids and domains.
    pub fn new(stimuli: Vec<String>, trials: Vec<LabeledTrial>) -> Result<Self> {
        let domain = trials
            .first()
            .map(|t| t.ensemble.domain())
            .ok_or_else(|| Error::InvalidInput("dataset has no trials".into()))?;
        if trials.iter().any(|t| t.ensemble.domain() != domain) {
            return Err(Error::InvalidInput(
                "all trials must share one time domain".into(),
            ));
        }
        let ds = Self {
            domain,
            stimuli,
            neuron_count: trials[0].ensemble.len(),
            trials,
        };
        let violations = validate_dataset(&ds.to_raster());
        if !violations.is_empty() {
            return Err(Error::InvalidDataset(violations));
        }
        Ok(ds)
    }

    pub fn to_raster(&self) -> RasterFile {
        RasterFile {
            t_max: i64::from(self.domain.t_max),
            stimuli: self.stimuli.clone(),
            trials: self
                .trials
                .iter()
                .map(|t| RawTrial {
                    trial_id: t.trial_id,
                    stimulus: t.stimulus.clone(),
                    trains: t
                        .ensemble
                        .trains()
                        .iter()
                        .map(|tr| tr.times().iter().map(|&x| i64::from(x)).collect())
                        .collect(),
                })
                .collect(),
        }
    }

    pub fn domain(&self) -> TimeDomain {
        self.domain
    }

    pub fn stimuli(&self) -> &[String] {
        &self.stimuli
    }

    pub fn neuron_count(&self) -> usize {
        self.neuron_count
    }

    pub fn trials(&self) -> &[LabeledTrial] {
        &self.trials
    }

    pub fn trial_count(&self, stimulus: &str) -> usize {
        self.trials.iter().filter(|t| t.stimulus == stimulus).count()
    }

    /// Same dataset with trial labels replaced (labels must stay declared).
    pub fn relabeled(&self, labels: &[String]) -> Result<Self> {
        if labels.len() != self.trials.len() {
            return Err(Error::InvalidInput("label count mismatch".into()));
        }
        let trials = self
            .trials
            .iter()
            .zip(labels)
            .map(|(t, l)| LabeledTrial {
                stimulus: l.clone(),
                ..t.clone()
            })
            .collect();
        Self::new(self.stimuli.clone(), trials)
    }
}

/// Symmetric, nonnegative, finite matrix with a zero diagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct DistanceMatrix {
    n: usize,
    data: Vec<f64>,
}

impl DistanceMatrix {
    pub fn new(n: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != n * n {
            return Err(Error::InvalidInput(format!(
                "{} entries for a {n}x{n} matrix",
                data.len()
            )));
        }
        for i in 0..n {
            if data[i * n + i] != 0.0 {
                return Err(Error::InvalidInput(format!("nonzero diagonal at {i}")));
            }
            for j in 0..n {
                let v = data[i * n + j];
                if !v.is_finite() || v < 0.0 {
                    return Err(Error::InvalidInput(format!(
                        "entry ({i},{j}) = {v} is not finite and nonnegative"
                    )));
                }
                if v != data[j * n + i] {
                    return Err(Error::InvalidInput(format!(
                        "matrix not symmetric at ({i},{j})"
                    )));
                }
            }
        }
        Ok(Self { n, data })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        if rows.iter().any(|r| r.len() != n) {
            return Err(Error::InvalidInput("matrix rows are not square".into()));
        }
        Self::new(n, rows.concat())
    }

    /// Fills the upper triangle from `f(i, j)` with `i < j` and mirrors it.
    pub fn try_from_fn<F>(n: usize, mut f: F) -> Result<Self>
    where
        F: FnMut(usize, usize) -> Result<f64>,
    {
        let mut data = vec![0.0; n * n];
        for i in 0..n {
            for j in i + 1..n {
                let v = f(i, j)?;
                data[i * n + j] = v;
                data[j * n + i] = v;
            }
        }
        Self::new(n, data)
    }

    /// Builds from a condensed upper triangle in row-major order.
    pub fn from_upper(n: usize, upper: &[f64]) -> Result<Self> {
        if upper.len() != n * n.saturating_sub(1) / 2 {
            return Err(Error::InvalidInput("condensed length mismatch".into()));
        }
        let mut it = upper.iter();
        Self::try_from_fn(n, |_, _| Ok(*it.next().expect("length checked")))
    }

    pub fn zeros(n: usize) -> Self {
        Self {
            n,
            data: vec![0.0; n * n],
        }
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.n..(i + 1) * self.n]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn max_entry(&self) -> f64 {
        self.data.iter().copied().fold(0.0, f64::max)
    }

    /// Multiplies every entry by `c > 0`.
    pub fn scaled(&self, c: f64) -> Result<Self> {
        Self::new(self.n, self.data.iter().map(|v| v * c).collect())
    }

    /// Reorders points: entry `(i, j)` of the result is `(perm[i], perm[j])` here.
    pub fn permuted(&self, perm: &[usize]) -> Result<Self> {
        if perm.len() != self.n {
            return Err(Error::InvalidInput("permutation length mismatch".into()));
        }
        let n = self.n;
        let mut data = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                data[i * n + j] = self.get(perm[i], perm[j]);
            }
        }
        Self::new(n, data)
    }
}

/// One (birth, death) pair; `death` may be `+inf`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bar {
    pub birth: f64,
    pub death: f64,
}

impl Bar {
    pub fn new(birth: f64, death: f64) -> Self {
        Self { birth, death }
    }

    pub fn is_essential(&self) -> bool {
        self.death == f64::INFINITY
    }

    pub fn persistence(&self) -> f64 {
        self.death - self.birth
    }

    fn total_cmp(&self, other: &Self) -> Ordering {
        self.birth
            .total_cmp(&other.birth)
            .then(self.death.total_cmp(&other.death))
    }
}

/// Multiset of bars in one homology degree, kept sorted by (birth, death).
#[derive(Debug, Clone, PartialEq)]
pub struct PersistenceDiagram {
    degree: usize,
    bars: Vec<Bar>,
}

impl PersistenceDiagram {
    pub fn new(degree: usize, mut bars: Vec<Bar>) -> Result<Self> {
        for b in &bars {
            if !b.birth.is_finite() || b.death.is_nan() || b.death < b.birth {
                return Err(Error::InvalidInput(format!(
                    "invalid bar ({}, {})",
                    b.birth, b.death
                )));
            }
        }
        bars.sort_by(Bar::total_cmp);
        Ok(Self { degree, bars })
    }

    pub fn empty(degree: usize) -> Self {
        Self {
            degree,
            bars: Vec::new(),
        }
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn bars(&self) -> &[Bar] {
        &self.bars
    }

    pub fn len(&self) -> usize {
        self.bars.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bars.is_empty()
    }

    pub fn essential_count(&self) -> usize {
        self.bars.iter().filter(|b| b.is_essential()).count()
    }

    /// Bars alive at scale `r`, i.e. `birth <= r < death`.
    pub fn alive_at(&self, r: f64) -> usize {
        self.bars
            .iter()
            .filter(|b| b.birth <= r && r < b.death)
            .count()
    }
}
