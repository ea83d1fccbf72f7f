//! Seeded generators for the synthetic experiments.
//!
//! All randomness comes from a `ChaCha8Rng` seeded with the caller's `u64`,
//! so generated datasets are identical across platforms.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::types::{Dataset, LabeledTrial, SpikeTrain, Tick, TimeDomain, TrainEnsemble};

/// Tunable constants of the five-neuron, two-stimulus network.
///
/// Neurons 1, 3 and 5 share one stimulus-independent process: a dense burst
/// at the start of the trial followed by sparse spontaneous firing. Neurons 2
/// and 4 follow a periodic template in one of two phase variants chosen per
/// trial; under the first stimulus both neurons use the same variant, under
/// the second they use opposite variants. Each neuron's own pattern therefore
/// has the same distribution under both stimuli.
#[derive(Debug, Clone, PartialEq)]
pub struct NetworkAParams {
    pub trials_per_stimulus: usize,
    pub t_max: Tick,
    /// Burst occupies ticks `[0, burst_end)`.
    pub burst_end: Tick,
    /// Per-tick spike probability during the burst.
    pub rate_high: f64,
    /// Per-tick spike probability after the burst.
    pub rate_low: f64,
    /// Per-tick background spike probability of the template neurons.
    pub template_background: f64,
    pub template_first: Tick,
    pub template_step: Tick,
    pub template_len: usize,
    /// Offset between the two template variants.
    pub variant_shift: Tick,
    /// A jittered template spike moves by a uniform integer in `[-jitter, jitter]`.
    pub jitter: u32,
    /// Probability that a template spike is jittered, independently per neuron and spike.
    pub jitter_prob: f64,
    /// Probability that a template spike is dropped.
    pub drop_prob: f64,
}

impl Default for NetworkAParams {
    fn default() -> Self {
        Self {
            trials_per_stimulus: 100,
            t_max: 999,
            burst_end: 50,
            rate_high: 0.2,
            rate_low: 0.005,
            template_background: 0.003,
            template_first: 100,
            template_step: 100,
            template_len: 9,
            variant_shift: 50,
            jitter: 3,
            jitter_prob: 0.15,
            drop_prob: 0.0,
        }
    }
}

impl NetworkAParams {
    /// Spike times of template variant `v` (0 or 1) before perturbation.
    pub fn template(&self, v: usize) -> Vec<Tick> {
        (0..self.template_len as Tick)
            .map(|k| self.template_first + k * self.template_step + v as Tick * self.variant_shift)
            .collect()
    }
}

fn bernoulli_train(rng: &mut ChaCha8Rng, domain: TimeDomain, segments: &[(Tick, Tick, f64)]) -> Vec<Tick> {
    let mut out = Vec::new();
    for &(start, end, p) in segments {
        for t in start..end.min(domain.t_max + 1) {
            if rng.gen_bool(p) {
                out.push(t);
            }
        }
    }
    out
}

fn template_train(rng: &mut ChaCha8Rng, p: &NetworkAParams, variant: usize, domain: TimeDomain) -> Result<SpikeTrain> {
    let mut times = bernoulli_train(rng, domain, &[(0, domain.t_max + 1, p.template_background)]);
    for t in p.template(variant) {
        if rng.gen_bool(p.drop_prob) {
            continue;
        }
        let j = if p.jitter > 0 && rng.gen_bool(p.jitter_prob) {
            rng.gen_range(-(p.jitter as i64)..=p.jitter as i64)
        } else {
            0
        };
        let moved = i64::from(t) + j;
        if domain.contains(moved) {
            times.push(moved as Tick);
        }
    }
    SpikeTrain::from_unsorted(times, domain)
}

/// Network with stimulus information only in the joint timing of neurons 2 and 4.
pub fn gen_network_a_with(seed: u64, p: &NetworkAParams) -> Result<Dataset> {
    let domain = TimeDomain::new(p.t_max);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let stimuli = vec!["s1".to_string(), "s2".to_string()];
    let mut trials = Vec::with_capacity(2 * p.trials_per_stimulus);
    for (s, label) in stimuli.iter().enumerate() {
        for r in 0..p.trials_per_stimulus {
            let variant = rng.gen_range(0..2usize);
            let partner = if s == 0 { variant } else { 1 - variant };
            let noise = |rng: &mut ChaCha8Rng| {
                SpikeTrain::new(
                    bernoulli_train(rng, domain, &[(0, p.burst_end, p.rate_high), (p.burst_end, p.t_max + 1, p.rate_low)]),
                    domain,
                )
            };
            let n1 = noise(&mut rng)?;
            let n2 = template_train(&mut rng, p, variant, domain)?;
            let n3 = noise(&mut rng)?;
            let n4 = template_train(&mut rng, p, partner, domain)?;
            let n5 = noise(&mut rng)?;
            trials.push(LabeledTrial {
                trial_id: (s * p.trials_per_stimulus + r) as i64,
                stimulus: label.clone(),
                ensemble: TrainEnsemble::new(vec![n1, n2, n3, n4, n5])?,
            });
        }
    }
    Dataset::new(stimuli, trials)
}

/// [`gen_network_a_with`] at the default parameters.
pub fn gen_network_a(seed: u64) -> Result<Dataset> {
    gen_network_a_with(seed, &NetworkAParams::default())
}

/// Eight trains whose arcs wrap around a cycle; VP at q=2 is ten times the
/// cyclic index distance, capped at 40.
const LOOP: [[Tick; 20]; 8] = [
    [0, 5, 10, 15, 20, 25, 30, 35, 40, 45, 50, 55, 60, 65, 70, 175, 180, 185, 190, 195],
    [0, 5, 10, 15, 20, 25, 30, 35, 40, 45, 150, 155, 160, 165, 170, 175, 180, 185, 190, 195],
    [0, 5, 10, 15, 20, 125, 130, 135, 140, 145, 150, 155, 160, 165, 170, 175, 180, 185, 190, 195],
    [100, 105, 110, 115, 120, 125, 130, 135, 140, 145, 150, 155, 160, 165, 170, 175, 180, 185, 190, 195],
    [75, 80, 85, 90, 95, 100, 105, 110, 115, 120, 125, 130, 135, 140, 145, 150, 155, 160, 165, 170],
    [50, 55, 60, 65, 70, 75, 80, 85, 90, 95, 100, 105, 110, 115, 120, 125, 130, 135, 140, 145],
    [25, 30, 35, 40, 45, 50, 55, 60, 65, 70, 75, 80, 85, 90, 95, 100, 105, 110, 115, 120],
    [0, 5, 10, 15, 20, 25, 30, 35, 40, 45, 50, 55, 60, 65, 70, 75, 80, 85, 90, 95],
];

/// Same arcs laid on a line: VP at q=2 is ten times the index distance, capped at 40.
const CHAIN: [[Tick; 20]; 8] = [
    [105, 108, 111, 114, 117, 120, 123, 126, 129, 132, 135, 138, 141, 144, 147, 150, 153, 156, 159, 162],
    [90, 93, 96, 99, 102, 105, 108, 111, 114, 117, 120, 123, 126, 129, 132, 135, 138, 141, 144, 147],
    [75, 78, 81, 84, 87, 90, 93, 96, 99, 102, 105, 108, 111, 114, 117, 120, 123, 126, 129, 132],
    [60, 63, 66, 69, 72, 75, 78, 81, 84, 87, 90, 93, 96, 99, 102, 105, 108, 111, 114, 117],
    [45, 48, 51, 54, 57, 60, 63, 66, 69, 72, 75, 78, 81, 84, 87, 90, 93, 96, 99, 102],
    [30, 33, 36, 39, 42, 45, 48, 51, 54, 57, 60, 63, 66, 69, 72, 75, 78, 81, 84, 87],
    [15, 18, 21, 24, 27, 30, 33, 36, 39, 42, 45, 48, 51, 54, 57, 60, 63, 66, 69, 72],
    [0, 3, 6, 9, 12, 15, 18, 21, 24, 27, 30, 33, 36, 39, 42, 45, 48, 51, 54, 57],
];

pub const CASCADE_T_MAX: Tick = 199;

/// The looping cascade ensemble and its loop-free control, in neuron order 1..8.
pub fn gen_cascade_pair() -> (TrainEnsemble, TrainEnsemble) {
    let domain = TimeDomain::new(CASCADE_T_MAX);
    let build = |rows: &[[Tick; 20]; 8]| {
        TrainEnsemble::from_times(rows.iter().map(|r| r.to_vec()).collect(), domain)
            .expect("literal trains are valid")
    };
    (build(&LOOP), build(&CHAIN))
}

/// Both cascade ensembles as a two-trial dataset (labels "loop" and "chain").
pub fn cascade_dataset() -> Dataset {
    let (r, rp) = gen_cascade_pair();
    Dataset::new(
        vec!["loop".into(), "chain".into()],
        vec![
            LabeledTrial { trial_id: 0, stimulus: "loop".into(), ensemble: r },
            LabeledTrial { trial_id: 1, stimulus: "chain".into(), ensemble: rp },
        ],
    )
    .expect("cascade dataset is valid")
}

/// Trials drawn from one distribution regardless of label.
#[derive(Debug, Clone, PartialEq)]
pub struct ChanceParams {
    pub trials_per_stimulus: usize,
    pub neurons: usize,
    pub t_max: Tick,
    /// Per-tick spike probability of neuron `i` is `base_rate * (1 + i)`.
    pub base_rate: f64,
}

impl Default for ChanceParams {
    fn default() -> Self {
        Self {
            trials_per_stimulus: 50,
            neurons: 5,
            t_max: 499,
            base_rate: 0.004,
        }
    }
}

pub fn gen_chance_dataset_with(seed: u64, stimuli_count: usize, p: &ChanceParams) -> Result<Dataset> {
    if stimuli_count < 2 {
        return Err(Error::InvalidInput("chance dataset needs at least 2 stimuli".into()));
    }
    let domain = TimeDomain::new(p.t_max);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let stimuli: Vec<String> = (1..=stimuli_count).map(|s| format!("s{s}")).collect();
    let total = stimuli_count * p.trials_per_stimulus;
    let trials = (0..total)
        .map(|id| {
            let trains = (0..p.neurons)
                .map(|i| {
                    let rate = (p.base_rate * (1 + i) as f64).min(1.0);
                    SpikeTrain::new(bernoulli_train(&mut rng, domain, &[(0, p.t_max + 1, rate)]), domain)
                })
                .collect::<Result<Vec<_>>>()?;
            Ok(LabeledTrial {
                trial_id: id as i64,
                stimulus: stimuli[id % stimuli_count].clone(),
                ensemble: TrainEnsemble::new(trains)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Dataset::new(stimuli, trials)
}

/// Calibration control: labels carry no information.
pub fn gen_chance_dataset(seed: u64, stimuli_count: usize) -> Result<Dataset> {
    gen_chance_dataset_with(seed, stimuli_count, &ChanceParams::default())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::vp_matrix;

    #[test]
    fn network_a_is_deterministic() {
        let p = NetworkAParams { trials_per_stimulus: 5, ..Default::default() };
        assert_eq!(gen_network_a_with(7, &p).unwrap(), gen_network_a_with(7, &p).unwrap());
        assert_ne!(gen_network_a_with(7, &p).unwrap(), gen_network_a_with(8, &p).unwrap());
    }

    #[test]
    fn network_a_shape() {
        let d = gen_network_a(1).unwrap();
        assert_eq!(d.trials().len(), 200);
        assert_eq!(d.neuron_count(), 5);
        assert_eq!(d.domain().t_max, 999);
        assert_eq!(d.trial_count("s1"), 100);
    }

    #[test]
    fn template_banks_coincide_across_stimuli() {
        // every (neuron 2, neuron 4) variant pairing uses the same two templates
        let p = NetworkAParams::default();
        let bank: std::collections::BTreeSet<Vec<Tick>> = [p.template(0), p.template(1)].into();
        assert_eq!(bank.len(), 2);
        let p0 = NetworkAParams { jitter: 0, template_background: 0.0, ..p.clone() };
        let d = gen_network_a_with(3, &NetworkAParams { trials_per_stimulus: 30, ..p0 }).unwrap();
        for stim in ["s1", "s2"] {
            for neuron in [1, 3] {
                let seen: std::collections::BTreeSet<Vec<Tick>> = d
                    .trials()
                    .iter()
                    .filter(|t| t.stimulus == stim)
                    .map(|t| t.ensemble.trains()[neuron].times().to_vec())
                    .collect();
                assert_eq!(seen, bank, "stimulus {stim}, neuron {}", neuron + 1);
            }
        }
    }

    #[test]
    fn cascade_loop_has_cyclic_neighbours() {
        let (r, rp) = gen_cascade_pair();
        let m = vp_matrix(&r, 2.0).unwrap();
        for i in 0..8 {
            let mut others: Vec<(f64, usize)> = (0..8).filter(|&j| j != i).map(|j| (m.get(i, j), j)).collect();
            others.sort_by(|a, b| a.0.total_cmp(&b.0));
            let mut nearest = [others[0].1, others[1].1];
            nearest.sort();
            let mut expected = [(i + 1) % 8, (i + 7) % 8];
            expected.sort();
            assert_eq!(nearest, expected);
            assert!(others[1].0 < others[2].0);
        }
        let mc = vp_matrix(&rp, 2.0).unwrap();
        for i in 0..8 {
            for j in 0..8 {
                assert_eq!(m.get(i, j), 10.0 * (i.abs_diff(j).min(8 - i.abs_diff(j))) as f64);
                assert_eq!(mc.get(i, j), 10.0 * i.abs_diff(j).min(4) as f64);
            }
        }
        assert!(r.trains().iter().zip(rp.trains()).all(|(a, b)| a.len() == b.len()));
    }

    #[test]
    fn chance_dataset_requires_two_stimuli() {
        assert!(gen_chance_dataset(1, 1).is_err());
        let d = gen_chance_dataset(1, 3).unwrap();
        assert_eq!(d.stimuli().len(), 3);
        assert_eq!(d, gen_chance_dataset(1, 3).unwrap());
    }
}
