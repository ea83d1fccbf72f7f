//! Victor-Purpura distance between spike trains.
//!
//! A matching cost is kept as two integers, the number of unmatched spikes and
//! the total absolute shift of matched spikes, so that costs for the same `q`
//! can be compared exactly. The reported distance is `unmatched + q * shift`
//! evaluated with a single rounding, which makes every route (closed form,
//! dynamic program, enumeration) return bit-identical values.

use std::cmp::Ordering;

use crate::error::{Error, Result};
use crate::types::{DistanceMatrix, SpikeTrain, Tick, TrainEnsemble};

/// Largest train size accepted by [`vp_brute_force`].
pub const BRUTE_FORCE_LIMIT: usize = 6;

/// Cost per tick of shifting a spike.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VpParams {
    q: f64,
}

impl VpParams {
    pub fn new(q: f64) -> Result<Self> {
        check_q(q)?;
        Ok(Self { q })
    }

    pub fn q(&self) -> f64 {
        self.q
    }
}

pub fn check_q(q: f64) -> Result<()> {
    if q.is_finite() && q >= 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidQ(q))
    }
}

/// Integer decomposition of a matching cost.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct CostParts {
    pub unmatched: u64,
    pub shift: u64,
}

impl CostParts {
    pub fn value(&self, q: f64) -> f64 {
        q.mul_add(self.shift as f64, self.unmatched as f64)
    }

    fn erase(self) -> Self {
        Self {
            unmatched: self.unmatched + 1,
            ..self
        }
    }

    fn shift_by(self, d: u64) -> Self {
        Self {
            shift: self.shift + d,
            ..self
        }
    }
}

/// Exact comparison of `a.unmatched + q * a.shift` against the same for `b`,
/// with `q` taken as the exact dyadic rational stored in the double.
pub fn cmp_cost(q: f64, a: CostParts, b: CostParts) -> Ordering {
    let du = i128::from(a.unmatched) - i128::from(b.unmatched);
    let ds = i128::from(a.shift) - i128::from(b.shift);
    if ds == 0 || q == 0.0 {
        return du.cmp(&0);
    }
    if du == 0 {
        return ds.cmp(&0);
    }
    // q = mantissa * 2^exp
    let bits = q.to_bits();
    let exp_bits = ((bits >> 52) & 0x7ff) as i32;
    let frac = i128::from(bits & ((1u64 << 52) - 1));
    let (mantissa, exp) = if exp_bits == 0 {
        (frac, -1074)
    } else {
        (frac | (1i128 << 52), exp_bits - 1075)
    };
    // |du| < 2^65 and |mantissa * ds| < 2^118
    if exp >= 0 {
        let term = if exp < 126 {
            (mantissa * ds).checked_mul(1i128 << exp)
        } else {
            None
        };
        match term.and_then(|t| t.checked_add(du)) {
            Some(total) => total.cmp(&0),
            None => ds.cmp(&0),
        }
    } else {
        let sh = -exp;
        let scaled = if sh < 126 {
            du.checked_mul(1i128 << sh)
        } else {
            None
        };
        match scaled.and_then(|s| s.checked_add(mantissa * ds)) {
            Some(total) => total.cmp(&0),
            None => du.cmp(&0),
        }
    }
}

fn min_cost(q: f64, a: CostParts, b: CostParts) -> CostParts {
    if cmp_cost(q, b, a) == Ordering::Less {
        b
    } else {
        a
    }
}

/// A partial bijection between two trains, as index pairs `(i in S, j in S')`.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct PartialBijection {
    pairs: Vec<(usize, usize)>,
}

impl PartialBijection {
    pub fn new(pairs: Vec<(usize, usize)>) -> Result<Self> {
        let mut left: Vec<usize> = pairs.iter().map(|p| p.0).collect();
        let mut right: Vec<usize> = pairs.iter().map(|p| p.1).collect();
        left.sort_unstable();
        right.sort_unstable();
        if left.windows(2).any(|w| w[0] == w[1]) || right.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::InvalidBijection(
                "an index appears twice on one side".into(),
            ));
        }
        Ok(Self { pairs })
    }

    pub fn empty() -> Self {
        Self::default()
    }

    pub fn pairs(&self) -> &[(usize, usize)] {
        &self.pairs
    }

    /// Cost parts of this bijection between trains of the given times.
    pub fn cost_parts(&self, s: &[Tick], s2: &[Tick]) -> Result<CostParts> {
        if let Some(&(i, j)) = self.pairs.iter().find(|&&(i, j)| i >= s.len() || j >= s2.len()) {
            return Err(Error::InvalidBijection(format!(
                "pair ({i}, {j}) out of range for trains of {} and {} spikes",
                s.len(),
                s2.len()
            )));
        }
        let shift = self
            .pairs
            .iter()
            .map(|&(i, j)| u64::from(s[i].abs_diff(s2[j])))
            .sum();
        let matched = self.pairs.len() as u64;
        Ok(CostParts {
            unmatched: s.len() as u64 + s2.len() as u64 - 2 * matched,
            shift,
        })
    }
}

/// q-cost of a given partial bijection.
pub fn vp_cost(s: &SpikeTrain, s2: &SpikeTrain, phi: &PartialBijection, q: f64) -> Result<f64> {
    check_q(q)?;
    Ok(phi.cost_parts(s.times(), s2.times())?.value(q))
}

fn check_domains(s: &SpikeTrain, s2: &SpikeTrain) -> Result<()> {
    if s.domain() != s2.domain() {
        return Err(Error::InvalidInput(
            "spike trains live on different time domains".into(),
        ));
    }
    Ok(())
}

/// Number of spikes present in exactly one of two sorted lists.
pub fn symmetric_difference_count(a: &[Tick], b: &[Tick]) -> u64 {
    let (mut i, mut j, mut common) = (0, 0, 0u64);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            Ordering::Less => i += 1,
            Ordering::Greater => j += 1,
            Ordering::Equal => {
                common += 1;
                i += 1;
                j += 1;
            }
        }
    }
    a.len() as u64 + b.len() as u64 - 2 * common
}

/// Optimal cost parts via the edit-distance recursion over sorted trains.
///
/// Ties prefer erasing from `S`, then erasing from `S'`, then matching.
pub fn vp_parts_dp(a: &[Tick], b: &[Tick], q: f64) -> CostParts {
    let m = b.len();
    let mut prev: Vec<CostParts> = (0..=m as u64)
        .map(|j| CostParts {
            unmatched: j,
            shift: 0,
        })
        .collect();
    let mut cur = vec![CostParts::default(); m + 1];
    for (i, &ta) in a.iter().enumerate() {
        cur[0] = CostParts {
            unmatched: i as u64 + 1,
            shift: 0,
        };
        for (j, &tb) in b.iter().enumerate() {
            let erase_a = prev[j + 1].erase();
            let erase_b = cur[j].erase();
            let matched = prev[j].shift_by(u64::from(ta.abs_diff(tb)));
            cur[j + 1] = min_cost(q, min_cost(q, erase_a, erase_b), matched);
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[m]
}

/// VP distance by dynamic programming alone (no closed-form dispatch).
pub fn vp_distance_dp(s: &SpikeTrain, s2: &SpikeTrain, q: f64) -> Result<f64> {
    check_q(q)?;
    check_domains(s, s2)?;
    Ok(vp_parts_dp(s.times(), s2.times(), q).value(q))
}

/// VP distance, using the closed forms for `q == 0` and `q > 2`.
pub fn vp_distance(s: &SpikeTrain, s2: &SpikeTrain, q: f64) -> Result<f64> {
    check_q(q)?;
    check_domains(s, s2)?;
    Ok(vp_value(s.times(), s2.times(), q))
}

/// Unchecked core of [`vp_distance`]; `q` must be finite and nonnegative.
pub fn vp_value(a: &[Tick], b: &[Tick], q: f64) -> f64 {
    if q == 0.0 {
        a.len().abs_diff(b.len()) as f64
    } else if q > 2.0 {
        symmetric_difference_count(a, b) as f64
    } else {
        vp_parts_dp(a, b, q).value(q)
    }
}

/// Exhaustive minimum over every partial bijection (trains of at most 6 spikes).
pub fn vp_brute_force(s: &SpikeTrain, s2: &SpikeTrain, q: f64) -> Result<f64> {
    check_q(q)?;
    check_domains(s, s2)?;
    let (best, _) = brute_force_argmin(s.times(), s2.times(), q)?;
    Ok(best.value(q))
}

/// Enumerates all partial bijections and returns an optimal one.
pub fn brute_force_argmin(a: &[Tick], b: &[Tick], q: f64) -> Result<(CostParts, PartialBijection)> {
    if a.len() > BRUTE_FORCE_LIMIT || b.len() > BRUTE_FORCE_LIMIT {
        return Err(Error::TooLarge {
            n: a.len(),
            m: b.len(),
            limit: BRUTE_FORCE_LIMIT,
        });
    }
    struct Search<'a> {
        a: &'a [Tick],
        b: &'a [Tick],
        q: f64,
        used: Vec<bool>,
        current: Vec<(usize, usize)>,
        best: Option<(CostParts, Vec<(usize, usize)>)>,
    }
    impl Search<'_> {
        fn visit(&mut self, i: usize) {
            if i == self.a.len() {
                let shift = self
                    .current
                    .iter()
                    .map(|&(x, y)| u64::from(self.a[x].abs_diff(self.b[y])))
                    .sum();
                let k = self.current.len() as u64;
                let cost = CostParts {
                    unmatched: self.a.len() as u64 + self.b.len() as u64 - 2 * k,
                    shift,
                };
                let better = match &self.best {
                    None => true,
                    Some((c, _)) => cmp_cost(self.q, cost, *c) == Ordering::Less,
                };
                if better {
                    self.best = Some((cost, self.current.clone()));
                }
                return;
            }
            self.visit(i + 1);
            for j in 0..self.b.len() {
                if !self.used[j] {
                    self.used[j] = true;
                    self.current.push((i, j));
                    self.visit(i + 1);
                    self.current.pop();
                    self.used[j] = false;
                }
            }
        }
    }
    let mut search = Search {
        a,
        b,
        q,
        used: vec![false; b.len()],
        current: Vec::new(),
        best: None,
    };
    search.visit(0);
    let (cost, pairs) = search.best.expect("the empty bijection always exists");
    Ok((cost, PartialBijection { pairs }))
}

/// Pairwise VP matrix of the trains in an ensemble, in storage order.
pub fn vp_matrix(ensemble: &TrainEnsemble, q: f64) -> Result<DistanceMatrix> {
    check_q(q)?;
    let trains = ensemble.trains();
    DistanceMatrix::try_from_fn(trains.len(), |i, j| {
        Ok(vp_value(trains[i].times(), trains[j].times(), q))
    })
}

/// A distance on spike trains.
pub trait TrainMetric: Sync {
    fn distance(&self, a: &SpikeTrain, b: &SpikeTrain) -> Result<f64>;
}

/// Victor-Purpura distance as a [`TrainMetric`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VictorPurpura(pub VpParams);

impl TrainMetric for VictorPurpura {
    fn distance(&self, a: &SpikeTrain, b: &SpikeTrain) -> Result<f64> {
        vp_distance(a, b, self.0.q())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::types::TimeDomain;
    use proptest::prelude::*;

    const D: TimeDomain = TimeDomain { t_max: 60 };

    fn st(t: &[Tick]) -> SpikeTrain {
        SpikeTrain::new(t.to_vec(), D).unwrap()
    }

    #[test]
    fn cost_of_explicit_bijections() {
        let (a, b) = (st(&[1]), st(&[3]));
        let phi = PartialBijection::new(vec![(0, 0)]).unwrap();
        assert_eq!(vp_cost(&a, &b, &phi, 0.5).unwrap(), 1.0);
        assert_eq!(vp_cost(&a, &b, &PartialBijection::empty(), 0.5).unwrap(), 2.0);
        assert_eq!(vp_cost(&st(&[]), &st(&[]), &PartialBijection::empty(), 3.0).unwrap(), 0.0);
    }

    #[test]
    fn invalid_bijections_are_rejected() {
        assert!(PartialBijection::new(vec![(0, 0), (0, 1)]).is_err());
        assert!(PartialBijection::new(vec![(0, 1), (1, 1)]).is_err());
        let phi = PartialBijection::new(vec![(2, 0)]).unwrap();
        assert!(vp_cost(&st(&[1]), &st(&[1]), &phi, 1.0).is_err());
    }

    #[test]
    fn closed_form_examples() {
        assert_eq!(vp_distance(&st(&[1, 2, 3]), &st(&[5]), 0.0).unwrap(), 2.0);
        assert_eq!(vp_distance(&st(&[1, 2, 3]), &st(&[2, 3, 4]), 3.0).unwrap(), 2.0);
    }

    #[test]
    fn shift_beats_delete_for_small_q() {
        // brute force: {} costs 2.0, {(0,0)} costs 0.5 * 2 = 1.0
        assert_eq!(vp_distance(&st(&[1]), &st(&[3]), 0.5).unwrap(), 1.0);
        assert_eq!(vp_brute_force(&st(&[1]), &st(&[3]), 0.5).unwrap(), 1.0);
    }

    #[test]
    fn tightness_raster_distance() {
        // matching 4-5 and 3-6 costs 0.5 + 1.5; the outer four spikes are cheaper to delete
        let (a, b) = (st(&[1, 2, 3, 4]), st(&[5, 6, 7, 8]));
        assert_eq!(vp_brute_force(&a, &b, 0.5).unwrap(), 6.0);
        assert_eq!(vp_distance(&a, &b, 0.5).unwrap(), 6.0);
        assert_eq!(vp_distance(&a, &b, 0.0).unwrap(), 0.0);
    }

    #[test]
    fn dp_trivial_cases() {
        assert_eq!(vp_distance_dp(&st(&[0, 10]), &st(&[0, 10]), 1.3).unwrap(), 0.0);
        assert_eq!(vp_distance_dp(&st(&[0]), &st(&[]), 1.3).unwrap(), 1.0);
        assert_eq!(vp_brute_force(&st(&[]), &st(&[4]), 7.0).unwrap(), 1.0);
        assert_eq!(vp_brute_force(&st(&[2]), &st(&[2]), 0.0).unwrap(), 0.0);
    }

    #[test]
    fn negative_q_and_oversized_brute_force_error() {
        assert!(matches!(vp_distance(&st(&[1]), &st(&[2]), -0.1), Err(Error::InvalidQ(_))));
        assert!(vp_distance(&st(&[1]), &st(&[2]), f64::NAN).is_err());
        let big = st(&[1, 2, 3, 4, 5, 6, 7]);
        assert!(matches!(vp_brute_force(&big, &big, 1.0), Err(Error::TooLarge { .. })));
    }

    #[test]
    fn domain_mismatch_is_an_error() {
        let other = SpikeTrain::new(vec![1], TimeDomain::new(5)).unwrap();
        assert!(vp_distance(&st(&[1]), &other, 1.0).is_err());
    }

    #[test]
    fn vp_matrix_small_cases() {
        let one = TrainEnsemble::from_times(vec![vec![3]], D).unwrap();
        assert_eq!(vp_matrix(&one, 1.0).unwrap(), DistanceMatrix::zeros(1));
        let two = TrainEnsemble::from_times(vec![vec![3, 9], vec![3, 9]], D).unwrap();
        assert_eq!(vp_matrix(&two, 1.0).unwrap(), DistanceMatrix::zeros(2));
    }

    #[test]
    fn exact_comparison_resolves_near_ties() {
        // 3 + 0.3*0 versus 0 + 0.3*10: the double nearest 0.3 is slightly below 0.3
        let q = 0.3;
        let a = CostParts { unmatched: 3, shift: 0 };
        let b = CostParts { unmatched: 0, shift: 10 };
        assert_eq!(cmp_cost(q, b, a), Ordering::Less);
        assert_eq!(cmp_cost(0.5, a, CostParts { unmatched: 1, shift: 4 }), Ordering::Equal);
        assert_eq!(cmp_cost(1e-300, CostParts { unmatched: 1, shift: 0 }, CostParts { unmatched: 0, shift: 1 << 40 }), Ordering::Greater);
        assert_eq!(cmp_cost(1e300, CostParts { unmatched: 0, shift: 1 }, CostParts { unmatched: 9, shift: 0 }), Ordering::Greater);
    }

    fn train_strategy() -> impl Strategy<Value = Vec<Tick>> {
        proptest::collection::btree_set(0u32..=60, 0..12).prop_map(|s| s.into_iter().collect())
    }

    proptest! {
        #[test]
        fn nondecreasing_in_q(a in train_strategy(), b in train_strategy(), q1 in 0.0f64..3.0, q2 in 0.0f64..3.0) {
            let (lo, hi) = if q1 <= q2 { (q1, q2) } else { (q2, q1) };
            prop_assert!(vp_value(&a, &b, lo) <= vp_value(&a, &b, hi));
        }

        #[test]
        fn symmetric_with_zero_self_distance(a in train_strategy(), b in train_strategy(), q in 0.0f64..3.0) {
            prop_assert_eq!(vp_value(&a, &b, q), vp_value(&b, &a, q));
            prop_assert_eq!(vp_value(&a, &a, q), 0.0);
        }

        #[test]
        fn dp_agrees_with_closed_forms(a in train_strategy(), b in train_strategy(), q in 2.0001f64..10.0) {
            prop_assert_eq!(vp_parts_dp(&a, &b, 0.0).value(0.0), a.len().abs_diff(b.len()) as f64);
            prop_assert_eq!(vp_parts_dp(&a, &b, q).value(q), symmetric_difference_count(&a, &b) as f64);
        }
    }
}
