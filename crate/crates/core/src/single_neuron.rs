//! Single-neuron baselines: VP 1-NN on one neuron's trains, and a Bayesian
//! classifier mixing a spike-count (rate) model with a spike-time (phase)
//! model after warping lick intervals to a common length.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metrics::{check_q, vp_value};
use crate::pipeline::{loocv_1nn_with_ids, ClassificationReport, Prediction};
use crate::types::{Dataset, DistanceMatrix, SpikeTrain, Tick, TimeDomain};

/// Number of lick intervals kept after stimulus onset.
pub const WARP_INTERVALS: usize = 5;
/// Length of each warped interval in ticks.
pub const WARP_INTERVAL_TICKS: u32 = 200;
/// Length of the warped trial; phase densities fall back to uniform on `[0, WARPED_LENGTH)`.
pub const WARPED_LENGTH: u32 = WARP_INTERVAL_TICKS * WARP_INTERVALS as u32;

pub const PHASE_BANDWIDTH: f64 = 5.0;
pub const RATE_BANDWIDTH: f64 = 2.0;
pub const DEFAULT_ALPHA: f64 = 0.875;
pub const DEFAULT_SPLITS: usize = 15;
pub const TRAIN_FRACTION: f64 = 0.8;
/// Fewest trials per label accepted by the Bayesian classifier.
pub const MIN_TRIALS_PER_LABEL: usize = 5;

/// Lick times of one trial; `onset_index` points at the first lick with the stimulus present.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LickTimes {
    pub trial_id: i64,
    pub licks: Vec<i64>,
    #[serde(default)]
    pub onset_index: usize,
}

impl LickTimes {
    /// The six lick times bounding the five warped intervals, if present and strictly increasing.
    pub fn boundaries(&self) -> Option<&[i64]> {
        let b = self.licks.get(self.onset_index..self.onset_index + WARP_INTERVALS + 1)?;
        b.windows(2).all(|w| w[0] < w[1]).then_some(b)
    }

    pub fn is_usable(&self) -> bool {
        self.boundaries().is_some()
    }
}

/// Rescales the spikes inside the five post-onset lick intervals to
/// consecutive 200-tick windows. Returns `None` when the licks are unusable.
///
/// A spike on a lick belongs to the interval that lick opens; spikes before
/// the first or at/after the last boundary are dropped. Warped times are
/// rounded half up, clamped to the last tick and deduplicated.
pub fn time_warp(train: &SpikeTrain, licks: &LickTimes) -> Option<SpikeTrain> {
    let bounds = licks.boundaries()?;
    let last = WARPED_LENGTH - 1;
    let mut out: Vec<Tick> = train
        .times()
        .iter()
        .filter_map(|&t| {
            let t = i64::from(t);
            let j = bounds.windows(2).position(|w| w[0] <= t && t < w[1])?;
            let (lo, hi) = (bounds[j], bounds[j + 1]);
            let x = f64::from(WARP_INTERVAL_TICKS) * (j as f64 + (t - lo) as f64 / (hi - lo) as f64);
            Some(((x + 0.5).floor() as u32).min(last))
        })
        .collect();
    out.dedup();
    Some(SpikeTrain::new(out, TimeDomain::new(last)).expect("warped times are sorted and in range"))
}

/// Gaussian kernel density estimate evaluated as an exact mixture.
#[derive(Debug, Clone, PartialEq)]
pub struct KdeModel {
    points: Vec<f64>,
    bandwidth: f64,
}

impl KdeModel {
    pub fn new(points: Vec<f64>, bandwidth: f64) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::InvalidInput("density estimate needs at least one sample".into()));
        }
        if !(bandwidth > 0.0 && bandwidth.is_finite()) {
            return Err(Error::InvalidInput(format!("bandwidth must be positive, got {bandwidth}")));
        }
        Ok(Self { points, bandwidth })
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn bandwidth(&self) -> f64 {
        self.bandwidth
    }

    pub fn log_density(&self, x: f64) -> f64 {
        let h = self.bandwidth;
        let norm = (self.points.len() as f64 * h * (2.0 * std::f64::consts::PI).sqrt()).ln();
        log_sum_exp(self.points.iter().map(|p| -((x - p) / h).powi(2) / 2.0)) - norm
    }

    pub fn density(&self, x: f64) -> f64 {
        self.log_density(x).exp()
    }
}

/// `ln(sum(exp(x)))` without overflow; `-inf` for an empty input.
pub fn log_sum_exp(xs: impl Iterator<Item = f64> + Clone) -> f64 {
    let m = xs.clone().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return m;
    }
    m + xs.map(|x| (x - m).exp()).sum::<f64>().ln()
}

/// Normalizes log-likelihoods to posterior probabilities under a uniform prior.
pub fn posteriors(log_likelihoods: &[f64]) -> Vec<f64> {
    let lse = log_sum_exp(log_likelihoods.iter().copied());
    log_likelihoods.iter().map(|l| (l - lse).exp()).collect()
}

/// Per-stimulus rate and phase densities fitted on a training set.
#[derive(Debug, Clone, PartialEq)]
pub struct RatePhaseModel {
    pub labels: Vec<String>,
    rate: Vec<KdeModel>,
    /// `None` when a stimulus has no training spikes: uniform phase density.
    phase: Vec<Option<KdeModel>>,
}

impl RatePhaseModel {
    pub fn fit(train: &[(&SpikeTrain, &str)], labels: &[String]) -> Result<Self> {
        let mut rate = Vec::with_capacity(labels.len());
        let mut phase = Vec::with_capacity(labels.len());
        for label in labels {
            let members: Vec<&SpikeTrain> = train.iter().filter(|(_, l)| l == label).map(|(t, _)| *t).collect();
            rate.push(KdeModel::new(members.iter().map(|t| t.len() as f64).collect(), RATE_BANDWIDTH)?);
            let pooled: Vec<f64> = members.iter().flat_map(|t| t.times().iter().map(|&x| f64::from(x))).collect();
            phase.push(if pooled.is_empty() { None } else { Some(KdeModel::new(pooled, PHASE_BANDWIDTH)?) });
        }
        Ok(Self {
            labels: labels.to_vec(),
            rate,
            phase,
        })
    }

    /// `ln mu_rate_i(spike count)` per stimulus.
    pub fn rate_log_likelihoods(&self, train: &SpikeTrain) -> Vec<f64> {
        self.rate.iter().map(|k| k.log_density(train.len() as f64)).collect()
    }

    /// `sum_j ln mu_phase_i(x_j)` per stimulus; zero for an empty train.
    pub fn phase_log_likelihoods(&self, train: &SpikeTrain) -> Vec<f64> {
        let uniform = -f64::from(WARPED_LENGTH).ln();
        self.phase
            .iter()
            .map(|k| {
                train
                    .times()
                    .iter()
                    .map(|&x| k.as_ref().map_or(uniform, |k| k.log_density(f64::from(x))))
                    .sum()
            })
            .collect()
    }

    /// Rate posterior, phase posterior and their `alpha` mixture.
    pub fn scores(&self, train: &SpikeTrain, alpha: f64) -> RatePhaseScores {
        let rate = posteriors(&self.rate_log_likelihoods(train));
        let phase = posteriors(&self.phase_log_likelihoods(train));
        let mixed = rate.iter().zip(&phase).map(|(r, p)| alpha * r + (1.0 - alpha) * p).collect();
        RatePhaseScores { rate, phase, mixed }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RatePhaseScores {
    pub rate: Vec<f64>,
    pub phase: Vec<f64>,
    pub mixed: Vec<f64>,
}

/// Index of the largest value; the first one on ties.
pub fn argmax(xs: &[f64]) -> usize {
    let mut best = 0;
    for (i, &x) in xs.iter().enumerate() {
        if x > xs[best] {
            best = i;
        }
    }
    best
}

/// Labels in order of first appearance.
fn distinct_labels(trials: &[(SpikeTrain, String)]) -> Vec<String> {
    let mut labels: Vec<String> = Vec::new();
    for (_, l) in trials {
        if !labels.contains(l) {
            labels.push(l.clone());
        }
    }
    labels
}

/// Stratified split: per label, shuffled indices with 20% (at least one) held out.
pub fn stratified_split(trials: &[(SpikeTrain, String)], labels: &[String], seed: u64) -> (Vec<usize>, Vec<usize>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut train, mut test) = (Vec::new(), Vec::new());
    for label in labels {
        let mut idx: Vec<usize> = (0..trials.len()).filter(|&i| &trials[i].1 == label).collect();
        idx.shuffle(&mut rng);
        let held = ((idx.len() as f64 * (1.0 - TRAIN_FRACTION)).round() as usize)
            .max(1)
            .min(idx.len().saturating_sub(1));
        test.extend_from_slice(&idx[..held]);
        train.extend_from_slice(&idx[held..]);
    }
    train.sort_unstable();
    test.sort_unstable();
    (train, test)
}

fn check_trials(trials: &[(SpikeTrain, String)], labels: &[String]) -> Result<()> {
    if labels.len() < 2 {
        return Err(Error::InvalidInput("need at least two stimuli".into()));
    }
    for label in labels {
        let n = trials.iter().filter(|(_, l)| l == label).count();
        if n < MIN_TRIALS_PER_LABEL {
            return Err(Error::InsufficientTrials {
                stimulus: label.clone(),
                available: n,
                required: MIN_TRIALS_PER_LABEL,
            });
        }
    }
    Ok(())
}

/// Runs `splits` random train/test splits (seeds `seed + s`) and pools the
/// predictions. `decide` maps a fitted model and a test train to a label index.
fn split_classifier<F>(trials: &[(SpikeTrain, String)], seed: u64, splits: usize, decide: F) -> Result<ClassificationReport>
where
    F: Fn(&RatePhaseModel, &SpikeTrain) -> usize + Sync,
{
    let labels = distinct_labels(trials);
    check_trials(trials, &labels)?;
    let runs = (0..splits)
        .into_par_iter()
        .map(|s| {
            let (train_idx, test_idx) = stratified_split(trials, &labels, seed.wrapping_add(s as u64));
            let train: Vec<(&SpikeTrain, &str)> = train_idx.iter().map(|&i| (&trials[i].0, trials[i].1.as_str())).collect();
            let model = RatePhaseModel::fit(&train, &labels)?;
            let per_trial: Vec<Prediction> = test_idx
                .iter()
                .map(|&i| Prediction {
                    repetition: s,
                    trial_id: i as i64,
                    true_label: trials[i].1.clone(),
                    predicted: labels[decide(&model, &trials[i].0)].clone(),
                })
                .collect();
            let correct = per_trial.iter().filter(|p| p.true_label == p.predicted).count();
            let score = correct as f64 / per_trial.len() as f64;
            Ok(ClassificationReport {
                score,
                per_trial,
                per_repetition_scores: vec![score],
                mean: score,
                std: 0.0,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ClassificationReport::aggregate(runs))
}

/// Bayesian rate-phase classifier over one neuron's labeled trains.
///
/// Each test trial goes to the stimulus maximizing
/// `alpha * P(rate) + (1 - alpha) * P(phase)`. Trial ids in the report are
/// positions in `trials`.
pub fn bayes_rate_phase(trials: &[(SpikeTrain, String)], alpha: f64, seed: u64) -> Result<ClassificationReport> {
    bayes_rate_phase_splits(trials, alpha, seed, DEFAULT_SPLITS)
}

pub fn bayes_rate_phase_splits(trials: &[(SpikeTrain, String)], alpha: f64, seed: u64, splits: usize) -> Result<ClassificationReport> {
    if !(0.0..=1.0).contains(&alpha) {
        return Err(Error::InvalidInput(format!("alpha must be in [0, 1], got {alpha}")));
    }
    split_classifier(trials, seed, splits, |m, t| argmax(&m.scores(t, alpha).mixed))
}

/// Maximum-likelihood classification on spike counts alone.
pub fn rate_only(trials: &[(SpikeTrain, String)], seed: u64, splits: usize) -> Result<ClassificationReport> {
    split_classifier(trials, seed, splits, |m, t| argmax(&m.rate_log_likelihoods(t)))
}

/// Maximum-likelihood classification on spike times alone.
pub fn phase_only(trials: &[(SpikeTrain, String)], seed: u64, splits: usize) -> Result<ClassificationReport> {
    split_classifier(trials, seed, splits, |m, t| argmax(&m.phase_log_likelihoods(t)))
}

/// Labeled trains of one neuron, optionally warped by lick times.
///
/// Trials without usable licks are skipped; their ids are returned.
pub fn neuron_trials(dataset: &Dataset, neuron: usize, licks: Option<&[LickTimes]>) -> Result<(Vec<(SpikeTrain, String)>, Vec<i64>)> {
    check_neuron(dataset, neuron)?;
    let mut out = Vec::new();
    let mut skipped = Vec::new();
    for trial in dataset.trials() {
        let train = &trial.ensemble.trains()[neuron];
        let processed = match licks {
            None => Some(train.clone()),
            Some(all) => all.iter().find(|l| l.trial_id == trial.trial_id).and_then(|l| time_warp(train, l)),
        };
        match processed {
            Some(t) => out.push((t, trial.stimulus.clone())),
            None => skipped.push(trial.trial_id),
        }
    }
    Ok((out, skipped))
}

fn check_neuron(dataset: &Dataset, neuron: usize) -> Result<()> {
    if neuron >= dataset.neuron_count() {
        return Err(Error::InvalidInput(format!(
            "neuron index {neuron} out of range for {} neurons",
            dataset.neuron_count()
        )));
    }
    Ok(())
}

/// Trial-by-trial VP matrix of one neuron.
pub fn neuron_vp_matrix(dataset: &Dataset, neuron: usize, q: f64) -> Result<DistanceMatrix> {
    check_q(q)?;
    check_neuron(dataset, neuron)?;
    let trains: Vec<&SpikeTrain> = dataset.trials().iter().map(|t| &t.ensemble.trains()[neuron]).collect();
    let n = trains.len();
    let upper: Vec<f64> = (0..n)
        .into_par_iter()
        .flat_map_iter(|i| {
            let trains = &trains;
            (i + 1..n).map(move |j| vp_value(trains[i].times(), trains[j].times(), q))
        })
        .collect();
    DistanceMatrix::from_upper(n, &upper)
}

/// Leave-one-out 1-NN over all trials using one neuron's VP distances.
pub fn neuron_vp_1nn(dataset: &Dataset, neuron: usize, q: f64) -> Result<ClassificationReport> {
    let m = neuron_vp_matrix(dataset, neuron, q)?;
    let labels: Vec<String> = dataset.trials().iter().map(|t| t.stimulus.clone()).collect();
    let ids: Vec<i64> = dataset.trials().iter().map(|t| t.trial_id).collect();
    loocv_1nn_with_ids(&m, &labels, &ids)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::types::{LabeledTrial, TrainEnsemble};
    use rand::Rng;

    fn train(t: &[u32]) -> SpikeTrain {
        SpikeTrain::new(t.to_vec(), TimeDomain::new(999)).unwrap()
    }

    fn licks(l: &[i64]) -> LickTimes {
        LickTimes {
            trial_id: 0,
            licks: l.to_vec(),
            onset_index: 0,
        }
    }

    #[test]
    fn warp_examples() {
        let l = licks(&[0, 100, 200, 300, 400, 500]);
        assert_eq!(time_warp(&train(&[50]), &l).unwrap().times(), &[100]);
        assert_eq!(time_warp(&train(&[100]), &l).unwrap().times(), &[200]);
        assert!(time_warp(&train(&[500, 700]), &l).unwrap().is_empty());
        // 499 maps to 998 exactly; 1999/2000 of an interval would round past the end
        let wide = licks(&[0, 2000, 4000, 6000, 8000, 10000]);
        let t = SpikeTrain::new(vec![9999], TimeDomain::new(10_000)).unwrap();
        assert_eq!(time_warp(&t, &wide).unwrap().times(), &[999]);
    }

    #[test]
    fn warp_onset_and_dedup() {
        let l = LickTimes {
            trial_id: 0,
            licks: vec![5, 1000, 1001, 1002, 1003, 1004, 1005],
            onset_index: 1,
        };
        // spikes before the onset lick are dropped
        let w = time_warp(&train(&[10, 999]), &l).unwrap();
        assert!(w.is_empty());
        let l = licks(&[0, 1000, 1001, 1002, 1003, 1004]);
        let w = time_warp(&train(&[0, 1, 2]), &l).unwrap();
        assert_eq!(w.times(), &[0]);
    }

    #[test]
    fn unusable_licks() {
        assert!(time_warp(&train(&[1]), &licks(&[0, 1, 2, 3, 4])).is_none());
        assert!(time_warp(&train(&[1]), &licks(&[0, 1, 1, 3, 4, 5])).is_none());
    }

    #[test]
    fn kde_closed_form() {
        let k = KdeModel::new(vec![0.0, 10.0], 5.0).unwrap();
        let g = |x: f64| (-x * x / 50.0).exp() / (5.0 * (2.0 * std::f64::consts::PI).sqrt());
        for x in [-3.0, 0.0, 4.0, 12.5] {
            let expect = (g(x) + g(x - 10.0)) / 2.0;
            assert!((k.density(x) - expect).abs() < 1e-15);
        }
        assert!(KdeModel::new(vec![], 1.0).is_err());
        assert!(KdeModel::new(vec![1.0], 0.0).is_err());
    }

    #[test]
    fn rate_phase_hand_computation() {
        // one training train per stimulus, one test spike at 3
        let a = train(&[0]);
        let b = train(&[10, 20]);
        let labels = vec!["a".to_string(), "b".to_string()];
        let model = RatePhaseModel::fit(&[(&a, "a"), (&b, "b")], &labels).unwrap();
        let test = train(&[3]);
        let g = |x: f64, h: f64| (-x * x / (2.0 * h * h)).exp() / (h * (2.0 * std::f64::consts::PI).sqrt());
        let phase = [g(3.0, 5.0), (g(7.0, 5.0) + g(17.0, 5.0)) / 2.0];
        let rate = [g(0.0, 2.0), g(1.0, 2.0)];
        let s = model.scores(&test, 0.875);
        for i in 0..2 {
            let pr = rate[i] / (rate[0] + rate[1]);
            let pp = phase[i] / (phase[0] + phase[1]);
            assert!((s.rate[i] - pr).abs() < 1e-12);
            assert!((s.phase[i] - pp).abs() < 1e-12);
            assert!((s.mixed[i] - (0.875 * pr + 0.125 * pp)).abs() < 1e-12);
        }
        assert!((s.mixed.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn empty_test_train_uses_rate_only() {
        let a = train(&[]);
        let b = train(&[1, 2, 3]);
        let labels = vec!["a".to_string(), "b".to_string()];
        let model = RatePhaseModel::fit(&[(&a, "a"), (&b, "b")], &labels).unwrap();
        let s = model.scores(&train(&[]), 0.5);
        assert_eq!(s.phase, vec![0.5, 0.5]);
        assert_eq!(argmax(&s.mixed), 0);
        // stimulus "a" has no training spikes: uniform phase density
        assert_eq!(model.phase_log_likelihoods(&train(&[7])), vec![-(1000f64.ln()), model.phase[1].as_ref().unwrap().log_density(7.0)]);
    }

    fn random_trials(rng: &mut ChaCha8Rng, rates: &[f64], per_label: usize) -> Vec<(SpikeTrain, String)> {
        let mut out = Vec::new();
        for (s, &r) in rates.iter().enumerate() {
            for _ in 0..per_label {
                let t = (0..200).filter(|_| rng.gen_bool(r)).collect();
                out.push((SpikeTrain::new(t, TimeDomain::new(999)).unwrap(), format!("s{s}")));
            }
        }
        out
    }

    #[test]
    fn disjoint_rates_classify_perfectly() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let trials = random_trials(&mut rng, &[0.01, 0.3], 10);
        let r = bayes_rate_phase(&trials, 1.0, 4).unwrap();
        assert_eq!(r.mean, 1.0);
        assert_eq!(r.per_repetition_scores.len(), DEFAULT_SPLITS);
    }

    #[test]
    fn alpha_extremes_match_single_term() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..5 {
            let trials = random_trials(&mut rng, &[0.05, 0.06, 0.05], 6);
            assert_eq!(bayes_rate_phase_splits(&trials, 1.0, 9, 4).unwrap(), rate_only(&trials, 9, 4).unwrap());
            assert_eq!(bayes_rate_phase_splits(&trials, 0.0, 9, 4).unwrap(), phase_only(&trials, 9, 4).unwrap());
        }
    }

    #[test]
    fn split_is_stratified() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let trials = random_trials(&mut rng, &[0.1, 0.1], 10);
        let labels = distinct_labels(&trials);
        let (train, test) = stratified_split(&trials, &labels, 0);
        assert_eq!((train.len(), test.len()), (16, 4));
        assert_eq!(test.iter().filter(|&&i| trials[i].1 == "s0").count(), 2);
    }

    #[test]
    fn too_few_trials() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let trials = random_trials(&mut rng, &[0.1, 0.1], 4);
        assert!(matches!(bayes_rate_phase(&trials, 0.5, 0), Err(Error::InsufficientTrials { .. })));
        assert!(bayes_rate_phase(&trials, 1.5, 0).is_err());
    }

    #[test]
    fn separated_neuron_scores_one() {
        let dom = TimeDomain::new(99);
        let trials = (0..8)
            .map(|i| LabeledTrial {
                trial_id: i,
                stimulus: if i < 4 { "a" } else { "b" }.into(),
                ensemble: TrainEnsemble::from_times(vec![if i < 4 { vec![10, 11] } else { vec![80, 90, 95] }, vec![]], dom).unwrap(),
            })
            .collect();
        let d = Dataset::new(vec!["a".into(), "b".into()], trials).unwrap();
        assert_eq!(neuron_vp_1nn(&d, 0, 1.0).unwrap().score, 1.0);
        assert!(neuron_vp_1nn(&d, 2, 1.0).is_err());
    }
}
