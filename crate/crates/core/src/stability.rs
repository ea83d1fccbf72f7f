//! Empirical checks of the stability bounds and the q-sweep harness.
//!
//! Each `check_*` function evaluates both sides of an inequality and reports
//! whether it holds within [`TOLERANCE`].

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::diagram_distance::{bottleneck_auto, hausdorff_ensembles, wasserstein_empirical, wasserstein_from_costs, WassersteinOrder};
use crate::error::{Error, Result};
use crate::metrics::{check_q, vp_matrix, vp_value};
use crate::pipeline::{ensemble_diagram, run_repetitions, PipelineConfig};
use crate::types::{Dataset, SpikeTrain, TrainEnsemble};

pub const TOLERANCE: f64 = 1e-9;

/// Largest sample size accepted by [`check_hausdorff_bound`].
pub const MAX_SAMPLE: usize = 12;

/// Both sides of a checked inequality `lhs <= rhs`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BoundCheck {
    pub lhs: f64,
    pub rhs: f64,
    pub holds: bool,
}

impl BoundCheck {
    fn new(lhs: f64, rhs: f64) -> Self {
        Self {
            lhs,
            rhs,
            holds: lhs <= rhs + TOLERANCE,
        }
    }
}

/// Lipschitz constant in `q` for trains on `{0..t_max}`.
pub fn lipschitz_constant(t_max: u32) -> f64 {
    let t = f64::from(t_max);
    t * (t + 1.0) / 2.0
}

/// `|VP_q(S,S') - VP_q2(S,S')| <= T(T+1)/2 |q - q2|`.
pub fn check_q_bound(s: &SpikeTrain, s2: &SpikeTrain, q: f64, q2: f64, t_max: u32) -> Result<BoundCheck> {
    check_q(q)?;
    check_q(q2)?;
    if s.domain() != s2.domain() {
        return Err(Error::InvalidInput("trains live on different domains".into()));
    }
    let lhs = (vp_value(s.times(), s2.times(), q) - vp_value(s.times(), s2.times(), q2)).abs();
    Ok(BoundCheck::new(lhs, lipschitz_constant(t_max) * (q - q2).abs()))
}

/// Outcome of [`check_diagram_stability`]: the Lipschitz bound and the sharper bound
/// by twice the largest entrywise change of the VP matrix.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DiagramStabilityCheck {
    pub lipschitz: BoundCheck,
    pub distortion: BoundCheck,
}

impl DiagramStabilityCheck {
    pub fn holds(&self) -> bool {
        self.lipschitz.holds && self.distortion.holds
    }
}

/// Bottleneck distance between the diagrams of one ensemble at two costs.
pub fn check_diagram_stability(ensemble: &TrainEnsemble, q: f64, q2: f64, degree: usize) -> Result<DiagramStabilityCheck> {
    let d1 = ensemble_diagram(ensemble, q, degree)?;
    let d2 = ensemble_diagram(ensemble, q2, degree)?;
    let lhs = bottleneck_auto(&d1, &d2)?;
    let m1 = vp_matrix(ensemble, q)?;
    let m2 = vp_matrix(ensemble, q2)?;
    let distortion = m1
        .as_slice()
        .iter()
        .zip(m2.as_slice())
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    Ok(DiagramStabilityCheck {
        lipschitz: BoundCheck::new(lhs, lipschitz_constant(ensemble.domain().t_max) * (q - q2).abs()),
        distortion: BoundCheck::new(lhs, 2.0 * distortion),
    })
}

/// Wasserstein distance between the diagram samples against twice the
/// Wasserstein distance between the ensemble samples under Hausdorff.
pub fn check_hausdorff_bound(
    sample_a: &[TrainEnsemble],
    sample_b: &[TrainEnsemble],
    q: f64,
    degree: usize,
    p: WassersteinOrder,
) -> Result<BoundCheck> {
    if sample_a.len() != sample_b.len() {
        return Err(Error::InvalidInput(format!(
            "sample sizes differ: {} vs {}",
            sample_a.len(),
            sample_b.len()
        )));
    }
    if sample_a.len() > MAX_SAMPLE {
        return Err(Error::TooLarge {
            n: sample_a.len(),
            m: sample_b.len(),
            limit: MAX_SAMPLE,
        });
    }
    let mut sizes = sample_a.iter().chain(sample_b).map(TrainEnsemble::len);
    if let Some(k) = sizes.next() {
        if let Some(other) = sizes.find(|&x| x != k) {
            return Err(Error::InvalidInput(format!("ensemble sizes differ: {k} vs {other}")));
        }
    }
    let diagrams = |s: &[TrainEnsemble]| s.iter().map(|e| ensemble_diagram(e, q, degree)).collect::<Result<Vec<_>>>();
    let lhs = wasserstein_empirical(&diagrams(sample_a)?, &diagrams(sample_b)?, p)?;
    let cost = sample_a
        .iter()
        .map(|x| sample_b.iter().map(|y| hausdorff_ensembles(x, y, q)).collect::<Result<Vec<_>>>())
        .collect::<Result<Vec<_>>>()?;
    let rhs = 2.0 * wasserstein_from_costs(&cost, p)?;
    Ok(BoundCheck::new(lhs, rhs))
}

/// One row of a q-sweep table.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub q: f64,
    pub mean: f64,
    pub std: f64,
}

/// `start, start + step, ...` up to `end` inclusive (within half a step).
pub fn q_grid(start: f64, end: f64, step: f64) -> Result<Vec<f64>> {
    if !(step > 0.0) || !start.is_finite() || !end.is_finite() || end < start {
        return Err(Error::InvalidInput(format!("bad grid {start}..{end} step {step}")));
    }
    let count = ((end - start) / step + 0.5).floor() as usize + 1;
    Ok((0..count).map(|i| start + i as f64 * step).collect())
}

/// `{0, 0.005, ..., 2}`, 401 points.
pub fn default_q_grid() -> Vec<f64> {
    (0..=400).map(|i| f64::from(i) / 200.0).collect()
}

/// Runs every repetition of the pipeline at each grid point.
///
/// All grid points share `config.rng_seed`, so the same trial subsets are
/// compared across q.
pub fn q_sweep(dataset: &Dataset, config: &PipelineConfig, grid: &[f64]) -> Result<Vec<SweepRow>> {
    if grid.is_empty() {
        return Err(Error::InvalidInput("empty q grid".into()));
    }
    if grid.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(Error::InvalidInput("q grid must be strictly ascending".into()));
    }
    grid.par_iter()
        .map(|&q| {
            let report = run_repetitions(dataset, &PipelineConfig { q, ..config.clone() })?;
            Ok(SweepRow {
                q,
                mean: report.mean,
                std: report.std,
            })
        })
        .collect()
}
