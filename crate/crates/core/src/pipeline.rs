//! Ensemble classification: per-trial VP matrices, persistence diagrams, a
//! bottleneck distance matrix across trials, and leave-one-out 1-NN.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::diagram_distance::bottleneck_matrix;
use crate::error::{Error, Result};
use crate::metrics::{vp_matrix, VpParams};
use crate::persistence::diagram;
use crate::types::{Dataset, DistanceMatrix, LabeledTrial, PersistenceDiagram, SpikeTrain, Tick, TimeDomain, TrainEnsemble};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineConfig {
    pub q: f64,
    pub degree: usize,
    pub trials_per_stimulus: usize,
    pub repetitions: usize,
    pub rng_seed: u64,
    /// Half-open tick window `[start, end)` applied before analysis.
    pub window: Option<(i64, i64)>,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            q: 2.005,
            degree: 0,
            trials_per_stimulus: 10,
            repetitions: 20,
            rng_seed: 0,
            window: None,
        }
    }
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<()> {
        VpParams::new(self.q)?;
        if self.degree > 1 {
            return Err(Error::Unsupported(format!("homology degree {}", self.degree)));
        }
        if self.trials_per_stimulus < 2 {
            return Err(Error::InvalidInput("trials_per_stimulus must be at least 2".into()));
        }
        if self.repetitions < 1 {
            return Err(Error::InvalidInput("repetitions must be at least 1".into()));
        }
        if let Some((s, e)) = self.window {
            if s >= e {
                return Err(Error::InvalidInput(format!("empty window [{s}, {e})")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Prediction {
    pub repetition: usize,
    pub trial_id: i64,
    pub true_label: String,
    pub predicted: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassificationReport {
    /// Correct predictions over all predictions.
    pub score: f64,
    pub per_trial: Vec<Prediction>,
    pub per_repetition_scores: Vec<f64>,
    pub mean: f64,
    /// Sample standard deviation of the per-repetition scores (0 for one repetition).
    pub std: f64,
}

impl ClassificationReport {
    /// Pools several single-repetition reports, renumbering repetitions.
    pub fn aggregate(runs: Vec<ClassificationReport>) -> Self {
        let mut per_trial = Vec::new();
        let mut scores = Vec::new();
        for (r, run) in runs.into_iter().enumerate() {
            scores.extend(run.per_repetition_scores);
            per_trial.extend(run.per_trial.into_iter().map(|p| Prediction { repetition: r, ..p }));
        }
        let correct = per_trial.iter().filter(|p| p.true_label == p.predicted).count();
        let score = if per_trial.is_empty() {
            0.0
        } else {
            correct as f64 / per_trial.len() as f64
        };
        let (mean, std) = mean_std(&scores);
        Self {
            score,
            per_trial,
            per_repetition_scores: scores,
            mean,
            std,
        }
    }
}

/// Mean and sample standard deviation.
pub fn mean_std(xs: &[f64]) -> (f64, f64) {
    if xs.is_empty() {
        return (0.0, 0.0);
    }
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

/// Leave-one-out 1-NN on a distance matrix; ties go to the smallest index.
pub fn loocv_1nn(matrix: &DistanceMatrix, labels: &[String]) -> Result<ClassificationReport> {
    let ids: Vec<i64> = (0..labels.len() as i64).collect();
    loocv_1nn_with_ids(matrix, labels, &ids)
}

pub fn loocv_1nn_with_ids(matrix: &DistanceMatrix, labels: &[String], ids: &[i64]) -> Result<ClassificationReport> {
    let n = matrix.len();
    if labels.len() != n || ids.len() != n {
        return Err(Error::InvalidInput(format!(
            "{n}x{n} matrix with {} labels and {} ids",
            labels.len(),
            ids.len()
        )));
    }
    if n < 2 {
        return Err(Error::InvalidInput("leave-one-out needs at least 2 samples".into()));
    }
    let per_trial: Vec<Prediction> = (0..n)
        .map(|i| {
            let row = matrix.row(i);
            let mut best = if i == 0 { 1 } else { 0 };
            for j in 0..n {
                if j != i && row[j] < row[best] {
                    best = j;
                }
            }
            Prediction {
                repetition: 0,
                trial_id: ids[i],
                true_label: labels[i].clone(),
                predicted: labels[best].clone(),
            }
        })
        .collect();
    let correct = per_trial.iter().filter(|p| p.true_label == p.predicted).count();
    let score = correct as f64 / n as f64;
    Ok(ClassificationReport {
        score,
        per_trial,
        per_repetition_scores: vec![score],
        mean: score,
        std: 0.0,
    })
}

/// Keeps spikes in `[start, end)` and re-bases them so `start` becomes 0.
pub fn window_trials(dataset: &Dataset, start: i64, end: i64) -> Result<Dataset> {
    if start >= end {
        return Err(Error::InvalidInput(format!("empty window [{start}, {end})")));
    }
    let t_max = Tick::try_from(end - start - 1)
        .map_err(|_| Error::InvalidInput("window too long".into()))?;
    let domain = TimeDomain::new(t_max);
    let trials = dataset
        .trials()
        .iter()
        .map(|t| {
            let trains = t
                .ensemble
                .trains()
                .iter()
                .map(|tr| {
                    let times = tr
                        .times()
                        .iter()
                        .map(|&x| i64::from(x))
                        .filter(|&x| x >= start && x < end)
                        .map(|x| (x - start) as Tick)
                        .collect();
                    SpikeTrain::new(times, domain)
                })
                .collect::<Result<Vec<_>>>()?;
            Ok(LabeledTrial {
                trial_id: t.trial_id,
                stimulus: t.stimulus.clone(),
                ensemble: TrainEnsemble::new(trains)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Dataset::new(dataset.stimuli().to_vec(), trials)
}

/// Draws `per_stimulus` trials of every stimulus without replacement.
///
/// Candidates are ordered by trial id before sampling and the result is
/// sorted by trial id, so the draw does not depend on storage order.
pub fn sample_trials<'a>(dataset: &'a Dataset, per_stimulus: usize, seed: u64) -> Result<Vec<&'a LabeledTrial>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut chosen = Vec::new();
    for stimulus in dataset.stimuli() {
        let mut pool: Vec<&LabeledTrial> = dataset.trials().iter().filter(|t| &t.stimulus == stimulus).collect();
        if pool.len() < per_stimulus {
            return Err(Error::InsufficientTrials {
                stimulus: stimulus.clone(),
                available: pool.len(),
                required: per_stimulus,
            });
        }
        pool.sort_by_key(|t| t.trial_id);
        let picks = rand::seq::index::sample(&mut rng, pool.len(), per_stimulus);
        chosen.extend(picks.into_iter().map(|i| pool[i]));
    }
    chosen.sort_by_key(|t| t.trial_id);
    Ok(chosen)
}

/// Persistence diagram of one ensemble under VP with cost `q`.
pub fn ensemble_diagram(ensemble: &TrainEnsemble, q: f64, degree: usize) -> Result<PersistenceDiagram> {
    let m = vp_matrix(&ensemble.canonicalize(), q)?;
    diagram(&m, degree)
}

/// Output of one pipeline pass.
#[derive(Debug, Clone, PartialEq)]
pub struct PipelineRun {
    pub bdm: DistanceMatrix,
    pub trial_ids: Vec<i64>,
    pub labels: Vec<String>,
    pub report: ClassificationReport,
}

/// Diagrams, bottleneck matrix and LOOCV over an explicit list of trials.
pub fn classify_trials(trials: &[&LabeledTrial], q: f64, degree: usize) -> Result<PipelineRun> {
    let diagrams = trials
        .par_iter()
        .map(|t| ensemble_diagram(&t.ensemble, q, degree))
        .collect::<Result<Vec<_>>>()?;
    let bdm = bottleneck_matrix(&diagrams)?;
    let trial_ids: Vec<i64> = trials.iter().map(|t| t.trial_id).collect();
    let labels: Vec<String> = trials.iter().map(|t| t.stimulus.clone()).collect();
    let report = loocv_1nn_with_ids(&bdm, &labels, &trial_ids)?;
    Ok(PipelineRun {
        bdm,
        trial_ids,
        labels,
        report,
    })
}

/// One subsample-and-classify pass, deterministic in `(dataset, config)`.
pub fn run_pipeline_once(dataset: &Dataset, config: &PipelineConfig) -> Result<PipelineRun> {
    config.validate()?;
    let windowed;
    let data = match config.window {
        Some((s, e)) => {
            windowed = window_trials(dataset, s, e)?;
            &windowed
        }
        None => dataset,
    };
    let trials = sample_trials(data, config.trials_per_stimulus, config.rng_seed)?;
    classify_trials(&trials, config.q, config.degree)
}

/// `config.repetitions` passes with seeds `rng_seed + r`, pooled.
pub fn run_repetitions(dataset: &Dataset, config: &PipelineConfig) -> Result<ClassificationReport> {
    config.validate()?;
    let runs = (0..config.repetitions)
        .into_par_iter()
        .map(|r| {
            let cfg = PipelineConfig {
                rng_seed: config.rng_seed.wrapping_add(r as u64),
                ..config.clone()
            };
            run_pipeline_once(dataset, &cfg).map(|run| run.report)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ClassificationReport::aggregate(runs))
}
