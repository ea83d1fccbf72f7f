//! Oracle and property checks runnable from the command line and from the
//! acceptance tests.
//!
//! Every check draws its inputs from a seeded generator and reports the seed
//! and first counterexample on failure.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::diagram_distance::{bottleneck, bottleneck_auto, bottleneck_degree0_fast, WassersteinOrder};
use crate::error::Result;
use crate::metrics::{symmetric_difference_count, vp_brute_force, vp_distance_dp, vp_value};
use crate::oracle;
use crate::persistence::{ph_degree0, ph_degree1_full};
use crate::pipeline::{ensemble_diagram, run_repetitions, PipelineConfig};
use crate::single_neuron::{bayes_rate_phase_splits, phase_only, rate_only, RatePhaseModel, DEFAULT_SPLITS};
use crate::stability::{check_q_bound, check_diagram_stability, check_hausdorff_bound};
use crate::synth::{gen_cascade_pair, gen_chance_dataset};
use crate::types::{Bar, DistanceMatrix, PersistenceDiagram, SpikeTrain, Tick, TimeDomain, TrainEnsemble};

/// Result of one named check.
#[derive(Debug, Clone, PartialEq)]
pub struct CheckOutcome {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl CheckOutcome {
    fn new(name: &str, failure: Option<String>, summary: String) -> Self {
        Self {
            name: name.into(),
            passed: failure.is_none(),
            detail: failure.unwrap_or(summary),
        }
    }

    fn from_result(name: &str, r: Result<Option<String>>, summary: String) -> Self {
        match r {
            Ok(failure) => Self::new(name, failure, summary),
            Err(e) => Self::new(name, Some(format!("error: {e}")), summary),
        }
    }
}

impl std::fmt::Display for CheckOutcome {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let tag = if self.passed { "PASS" } else { "FAIL" };
        write!(f, "{tag} {}: {}", self.name, self.detail)
    }
}

/// Uniform random train on `{0..t_max}` with each tick firing with probability `p`.
pub fn random_train(rng: &mut impl Rng, t_max: Tick, p: f64) -> SpikeTrain {
    let times = (0..=t_max).filter(|_| rng.gen_bool(p)).collect();
    SpikeTrain::new(times, TimeDomain::new(t_max)).expect("generated times are valid")
}

pub fn random_ensemble(rng: &mut impl Rng, k: usize, t_max: Tick) -> TrainEnsemble {
    let p = rng.gen_range(0.02..0.4);
    TrainEnsemble::new((0..k).map(|_| random_train(rng, t_max, p)).collect()).expect("common domain")
}

/// Random symmetric matrix; small integer entries half the time so ties occur.
pub fn random_matrix(rng: &mut impl Rng, n: usize) -> DistanceMatrix {
    let ties = rng.gen_bool(0.5);
    DistanceMatrix::try_from_fn(n, |_, _| {
        Ok(if ties {
            f64::from(rng.gen_range(1..6u8))
        } else {
            rng.gen_range(0.0..10.0)
        })
    })
    .expect("entries are finite and nonnegative")
}

fn all_trains_up_to(max_len: usize, t_max: Tick) -> Vec<SpikeTrain> {
    let dom = TimeDomain::new(t_max);
    (0u32..1 << (t_max + 1))
        .filter(|mask| mask.count_ones() as usize <= max_len)
        .map(|mask| {
            let times = (0..=t_max).filter(|t| mask >> t & 1 == 1).collect();
            SpikeTrain::new(times, dom).expect("mask gives sorted times")
        })
        .collect()
}

/// DP against brute force over every pair of trains with at most `max_len`
/// spikes on `{0..t_max}`, exact equality.
pub fn vp_oracle_grid(max_len: usize, t_max: Tick, qs: &[f64]) -> CheckOutcome {
    let trains = all_trains_up_to(max_len, t_max);
    let mut count = 0u64;
    let mut run = || -> Result<Option<String>> {
        for &q in qs {
            for a in &trains {
                for b in &trains {
                    count += 1;
                    let (dp, bf) = (vp_distance_dp(a, b, q)?, vp_brute_force(a, b, q)?);
                    if dp != bf {
                        return Ok(Some(format!("q={q} {:?} {:?}: dp {dp} brute {bf}", a.times(), b.times())));
                    }
                }
            }
        }
        Ok(None)
    };
    let r = run();
    CheckOutcome::from_result("vp_dp_matches_brute_force", r, format!("{count} pairs exact"))
}

/// Closed forms at q = 0 and q = 2.5 on random pairs.
pub fn vp_closed_forms(cases: usize, seed: u64) -> CheckOutcome {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let failure = (0..cases).find_map(|_| {
        let t_max = rng.gen_range(0..60);
        let p = rng.gen_range(0.0..0.5);
        let (a, b) = (random_train(&mut rng, t_max, p), random_train(&mut rng, t_max, p));
        let zero = vp_value(a.times(), b.times(), 0.0);
        let high = vp_value(a.times(), b.times(), 2.5);
        let dp_high = vp_distance_dp(&a, &b, 2.5).expect("valid");
        let n = a.len().abs_diff(b.len()) as f64;
        let sd = symmetric_difference_count(a.times(), b.times()) as f64;
        (zero != n || high != sd || dp_high != sd).then(|| format!("seed {seed}: {:?} {:?}", a.times(), b.times()))
    });
    CheckOutcome::new("vp_closed_forms", failure, format!("{cases} pairs exact"))
}

/// Symmetry (exact) and the triangle inequality (within 1e-9).
pub fn vp_metric_axioms(cases: usize, seed: u64) -> CheckOutcome {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let failure = (0..cases).find_map(|_| {
        let t_max = rng.gen_range(0..80);
        let p = rng.gen_range(0.0..0.4);
        let [a, b, c] = [0; 3].map(|_| random_train(&mut rng, t_max, p));
        [0.5, 1.0, 2.005].into_iter().find_map(|q| {
            let d = |x: &SpikeTrain, y: &SpikeTrain| vp_value(x.times(), y.times(), q);
            let (ab, ba, bc, ac) = (d(&a, &b), d(&b, &a), d(&b, &c), d(&a, &c));
            (ab != ba || ac > ab + bc + 1e-9).then(|| format!("seed {seed}, q={q}: {:?} {:?} {:?}", a.times(), b.times(), c.times()))
        })
    });
    CheckOutcome::new("vp_metric_axioms", failure, format!("{cases} triples x 3 costs"))
}

pub fn q_bound_fuzz(cases: usize, seed: u64) -> CheckOutcome {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut run = || -> Result<Option<String>> {
        for _ in 0..cases {
            let t_max = rng.gen_range(1..60);
            let p = rng.gen_range(0.0..0.5);
            let (a, b) = (random_train(&mut rng, t_max, p), random_train(&mut rng, t_max, p));
            let (q, q2) = (rng.gen_range(0.0..2.5), rng.gen_range(0.0..2.5));
            let c = check_q_bound(&a, &b, q, q2, t_max)?;
            if !c.holds {
                return Ok(Some(format!("seed {seed}: {c:?} for {:?} {:?} q={q} q2={q2}", a.times(), b.times())));
            }
        }
        Ok(None)
    };
    let r = run();
    CheckOutcome::from_result("q_bound_lipschitz", r, format!("{cases} instances"))
}

/// Random ensembles with `k <= 6` and `T <= 40` at degrees 0 and 1.
pub fn diagram_stability_fuzz(cases: usize, seed: u64) -> CheckOutcome {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut run = || -> Result<Option<String>> {
        for _ in 0..cases {
            let k = rng.gen_range(1..=6);
            let t_max = rng.gen_range(1..=40);
            let ens = random_ensemble(&mut rng, k, t_max);
            let (q, q2) = (rng.gen_range(0.0..2.5), rng.gen_range(0.0..2.5));
            for degree in [0, 1] {
                let c = check_diagram_stability(&ens, q, q2, degree)?;
                if !c.holds() {
                    return Ok(Some(format!("seed {seed}: degree {degree} q={q} q2={q2} {c:?}")));
                }
            }
        }
        Ok(None)
    };
    let r = run();
    CheckOutcome::from_result("diagram_stability_lipschitz", r, format!("{cases} ensembles x 2 degrees"))
}

fn sorted_deaths(d: &PersistenceDiagram) -> Vec<f64> {
    let mut v: Vec<f64> = d.bars().iter().map(|b| b.death).collect();
    v.sort_by(f64::total_cmp);
    v
}

/// Degree-0 deaths against an independent Kruskal.
pub fn degree0_matches_mst(cases: usize, max_n: usize, seed: u64) -> CheckOutcome {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let failure = (0..cases).find_map(|_| {
        let n = rng.gen_range(1..=max_n);
        let m = random_matrix(&mut rng, n);
        let mut expect = oracle::kruskal_mst_weights(&m);
        expect.push(f64::INFINITY);
        expect.sort_by(f64::total_cmp);
        (sorted_deaths(&ph_degree0(&m)) != expect).then(|| format!("seed {seed}: n={n}"))
    });
    CheckOutcome::new("degree0_equals_mst", failure, format!("{cases} matrices"))
}

/// Sparse degree-1 reduction against the dense full-boundary oracle.
pub fn degree1_matches_naive(cases: usize, max_n: usize, seed: u64) -> CheckOutcome {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let failure = (0..cases).find_map(|_| {
        let n = rng.gen_range(1..=max_n);
        let m = random_matrix(&mut rng, n);
        let (fast, slow) = (ph_degree1_full(&m), oracle::naive_degree1(&m));
        (fast != slow).then(|| format!("seed {seed}: n={n} fast {:?} oracle {:?}", fast.bars(), slow.bars()))
    });
    CheckOutcome::new("degree1_equals_naive_reduction", failure, format!("{cases} matrices"))
}

fn random_degree0_diagram(rng: &mut impl Rng) -> PersistenceDiagram {
    let n = rng.gen_range(0..12);
    let ties = rng.gen_bool(0.3);
    let mut bars: Vec<Bar> = (0..n)
        .map(|_| {
            let d = if ties { f64::from(rng.gen_range(0..5u8)) } else { rng.gen_range(0.0..10.0) };
            Bar::new(0.0, d)
        })
        .collect();
    bars.push(Bar::new(0.0, f64::INFINITY));
    PersistenceDiagram::new(0, bars).expect("valid bars")
}

/// Sorted-deaths bottleneck against the general matching bottleneck.
pub fn bottleneck_fast_path(cases: usize, seed: u64) -> CheckOutcome {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut run = || -> Result<Option<String>> {
        for _ in 0..cases {
            let (a, b) = (random_degree0_diagram(&mut rng), random_degree0_diagram(&mut rng));
            let (fast, general) = (bottleneck_degree0_fast(&a, &b)?, bottleneck(&a, &b)?);
            if (fast - general).abs() > 1e-9 {
                return Ok(Some(format!("seed {seed}: fast {fast} general {general}")));
            }
        }
        Ok(None)
    };
    let r = run();
    CheckOutcome::from_result("bottleneck_fast_path", r, format!("{cases} diagram pairs"))
}

/// Matching bottleneck against exhaustive enumeration on small diagrams.
pub fn bottleneck_exhaustive(cases: usize, seed: u64) -> CheckOutcome {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let diagram = |rng: &mut ChaCha8Rng| {
        let n = rng.gen_range(0..=5);
        let bars = (0..n)
            .map(|_| {
                let b = f64::from(rng.gen_range(0..6u8));
                Bar::new(b, b + f64::from(rng.gen_range(0..6u8)))
            })
            .collect();
        PersistenceDiagram::new(1, bars).expect("valid bars")
    };
    let mut run = || -> Result<Option<String>> {
        for _ in 0..cases {
            let (a, b) = (diagram(&mut rng), diagram(&mut rng));
            let (fast, slow) = (bottleneck(&a, &b)?, oracle::bottleneck_exhaustive(&a, &b)?);
            if fast != slow {
                return Ok(Some(format!("seed {seed}: {:?} vs {:?}: {fast} != {slow}", a.bars(), b.bars())));
            }
        }
        Ok(None)
    };
    let r = run();
    CheckOutcome::from_result("bottleneck_matches_enumeration", r, format!("{cases} diagram pairs"))
}

/// Empirical-measure pairs of up to six ensembles at p = 1, 2 and infinity.
pub fn hausdorff_bound_fuzz(cases: usize, seed: u64) -> CheckOutcome {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let orders = [WassersteinOrder::new(1.0).expect("valid"), WassersteinOrder::new(2.0).expect("valid"), WassersteinOrder::INFINITY];
    let mut run = || -> Result<Option<String>> {
        for _ in 0..cases {
            let size = rng.gen_range(1..=6);
            let k = rng.gen_range(2..=6);
            let t_max = rng.gen_range(5..=30);
            let q = rng.gen_range(0.0..2.5);
            let degree = rng.gen_range(0..=1);
            let a: Vec<TrainEnsemble> = (0..size).map(|_| random_ensemble(&mut rng, k, t_max)).collect();
            let b: Vec<TrainEnsemble> = (0..size).map(|_| random_ensemble(&mut rng, k, t_max)).collect();
            for p in orders {
                let c = check_hausdorff_bound(&a, &b, q, degree, p)?;
                if !c.holds {
                    return Ok(Some(format!("seed {seed}: p={} degree {degree} q={q} {c:?}", p.value())));
                }
            }
        }
        Ok(None)
    };
    let r = run();
    CheckOutcome::from_result("hausdorff_bound_wasserstein", r, format!("{cases} sample pairs x 3 orders"))
}

/// Relabeling neurons leaves every trial's diagram unchanged.
pub fn permutation_invariance(cases: usize, seed: u64) -> CheckOutcome {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut run = || -> Result<Option<String>> {
        for _ in 0..cases {
            let k = rng.gen_range(1..=8);
            let ens = random_ensemble(&mut rng, k, 40);
            let mut perm: Vec<usize> = (0..k).collect();
            perm.shuffle(&mut rng);
            let shuffled = ens.permuted(&perm)?;
            if shuffled.canonicalize() != ens.canonicalize() {
                return Ok(Some(format!("seed {seed}: canonical forms differ")));
            }
            for degree in [0, 1] {
                let (x, y) = (ensemble_diagram(&ens, 1.0, degree)?, ensemble_diagram(&shuffled, 1.0, degree)?);
                if x != y {
                    return Ok(Some(format!("seed {seed}: degree {degree} diagrams differ")));
                }
            }
        }
        Ok(None)
    };
    let r = run();
    CheckOutcome::from_result("neuron_permutation_invariance", r, format!("{cases} ensembles"))
}

/// Frozen values for the cascade pair at q = 2.
pub const CASCADE_LOOP_BAR: (f64, f64) = (10.0, 30.0);
pub const CASCADE_DEGREE0_DISTANCE: f64 = 0.0;
pub const CASCADE_DEGREE1_DISTANCE: f64 = 10.0;

/// Loop ensemble has one long degree-1 bar, the chain none, and the pair is
/// closer in degree 0 than in degree 1.
pub fn cascade_pair_check() -> CheckOutcome {
    let run = || -> Result<Option<String>> {
        let (r, rp) = gen_cascade_pair();
        let (l1, c1) = (ensemble_diagram(&r, 2.0, 1)?, ensemble_diagram(&rp, 2.0, 1)?);
        let (l0, c0) = (ensemble_diagram(&r, 2.0, 0)?, ensemble_diagram(&rp, 2.0, 0)?);
        let long = l1.bars().iter().filter(|b| b.persistence() >= 5.0).count();
        let (b0, b1) = (bottleneck_auto(&l0, &c0)?, bottleneck_auto(&l1, &c1)?);
        let bars: Vec<(f64, f64)> = l1.bars().iter().map(|b| (b.birth, b.death)).collect();
        Ok((long < 1 || !c1.is_empty() || b0 >= b1 || bars != [CASCADE_LOOP_BAR] || b0 != CASCADE_DEGREE0_DISTANCE || b1 != CASCADE_DEGREE1_DISTANCE)
            .then(|| format!("loop bars {bars:?}, chain bars {:?}, d0 {b0}, d1 {b1}", c1.bars())))
    };
    let r = run();
    CheckOutcome::from_result(
        "cascade_pair",
        r,
        format!("loop bar {CASCADE_LOOP_BAR:?}, chain empty, d0 {CASCADE_DEGREE0_DISTANCE} < d1 {CASCADE_DEGREE1_DISTANCE}"),
    )
}

/// Pipeline on label-free data lands within three standard deviations of chance.
pub fn chance_calibration(seed: u64, stimuli: usize, repetitions: usize) -> CheckOutcome {
    let run = || -> Result<(bool, String)> {
        let d = gen_chance_dataset(seed, stimuli)?;
        let cfg = PipelineConfig {
            repetitions,
            rng_seed: seed,
            ..PipelineConfig::default()
        };
        let report = run_repetitions(&d, &cfg)?;
        let chance = 1.0 / stimuli as f64;
        let ok = (report.mean - chance).abs() <= 3.0 * report.std;
        Ok((ok, format!("mean {:.4} std {:.4} chance {chance:.4}", report.mean, report.std)))
    };
    match run() {
        Ok((ok, msg)) => CheckOutcome {
            name: "chance_calibration".into(),
            passed: ok,
            detail: msg,
        },
        Err(e) => CheckOutcome::new("chance_calibration", Some(format!("error: {e}")), String::new()),
    }
}

/// alpha = 1 and alpha = 0 match rate-only and phase-only classifiers, and
/// posteriors sum to one.
pub fn bayes_reductions(cases: usize, seed: u64) -> CheckOutcome {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut run = || -> Result<Option<String>> {
        for case in 0..cases {
            let labels = rng.gen_range(2..=3);
            let per_label = rng.gen_range(5..=10);
            let trials: Vec<(SpikeTrain, String)> = (0..labels)
                .flat_map(|s| (0..per_label).map(move |_| s))
                .map(|s| {
                    let p = rng.gen_range(0.005..0.05);
                    (random_train(&mut rng, 999, p), format!("s{s}"))
                })
                .collect();
            let split_seed = rng.gen();
            if bayes_rate_phase_splits(&trials, 1.0, split_seed, DEFAULT_SPLITS)? != rate_only(&trials, split_seed, DEFAULT_SPLITS)? {
                return Ok(Some(format!("seed {seed} case {case}: alpha=1 differs from rate-only")));
            }
            if bayes_rate_phase_splits(&trials, 0.0, split_seed, DEFAULT_SPLITS)? != phase_only(&trials, split_seed, DEFAULT_SPLITS)? {
                return Ok(Some(format!("seed {seed} case {case}: alpha=0 differs from phase-only")));
            }
            let names: Vec<String> = (0..labels).map(|s| format!("s{s}")).collect();
            let train: Vec<(&SpikeTrain, &str)> = trials.iter().map(|(t, l)| (t, l.as_str())).collect();
            let model = RatePhaseModel::fit(&train, &names)?;
            for (t, _) in &trials {
                let s = model.scores(t, rng.gen());
                for v in [&s.rate, &s.phase, &s.mixed] {
                    if (v.iter().sum::<f64>() - 1.0).abs() > 1e-12 {
                        return Ok(Some(format!("seed {seed} case {case}: posterior sums to {}", v.iter().sum::<f64>())));
                    }
                }
            }
        }
        Ok(None)
    };
    let r = run();
    CheckOutcome::from_result("bayes_alpha_reductions", r, format!("{cases} datasets"))
}

/// The suite run by `selfcheck`, sized to finish in well under a minute.
pub fn run_quick(seed: u64) -> Vec<CheckOutcome> {
    vec![
        vp_oracle_grid(3, 5, &[0.0, 0.3, 1.0, 2.0, 2.5]),
        vp_closed_forms(2000, seed),
        vp_metric_axioms(2000, seed),
        q_bound_fuzz(2000, seed),
        diagram_stability_fuzz(200, seed),
        degree0_matches_mst(50, 30, seed),
        degree1_matches_naive(50, 7, seed),
        bottleneck_fast_path(200, seed),
        bottleneck_exhaustive(200, seed),
        hausdorff_bound_fuzz(50, seed),
        permutation_invariance(50, seed),
        cascade_pair_check(),
        chance_calibration(seed, 2, 20),
        bayes_reductions(10, seed),
    ]
}
