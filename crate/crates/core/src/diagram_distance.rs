//! Distances between persistence diagrams, between finite sets of diagrams,
//! and between train ensembles viewed as unordered sets.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::matching::{bottleneck_assignment, hungarian, max_matching};
use crate::metrics::{TrainMetric, VictorPurpura, VpParams};
use crate::types::{Bar, DistanceMatrix, PersistenceDiagram, TrainEnsemble};

fn half_persistence(b: &Bar) -> f64 {
    (b.death - b.birth) / 2.0
}

/// Sup-norm distance between two bars; infinite when exactly one is essential.
fn linf(a: &Bar, b: &Bar) -> f64 {
    match (a.is_essential(), b.is_essential()) {
        (true, true) => (a.birth - b.birth).abs(),
        (false, false) => (a.birth - b.birth).abs().max((a.death - b.death).abs()),
        _ => f64::INFINITY,
    }
}

/// Exact bottleneck distance.
///
/// Binary search over every pairwise sup-norm cost and half-persistence, with
/// a perfect-matching test on the graph that adds a diagonal copy of each bar
/// of the other diagram. Returns `+inf` when the essential bar counts differ.
pub fn bottleneck(d1: &PersistenceDiagram, d2: &PersistenceDiagram) -> Result<f64> {
    if d1.degree() != d2.degree() {
        return Err(Error::DegreeMismatch(d1.degree(), d2.degree()));
    }
    if d1.essential_count() != d2.essential_count() {
        return Ok(f64::INFINITY);
    }
    let (a, b) = (d1.bars(), d2.bars());
    let (n, m) = (a.len(), b.len());
    if n + m == 0 {
        return Ok(0.0);
    }
    let mut candidates = vec![0.0];
    for x in a {
        for y in b {
            let c = linf(x, y);
            if c.is_finite() {
                candidates.push(c);
            }
        }
    }
    candidates.extend(a.iter().chain(b).map(half_persistence).filter(|h| h.is_finite()));
    candidates.sort_by(f64::total_cmp);
    candidates.dedup();

    // left: a[0..n] then diagonal copies of b; right: b[0..m] then diagonal copies of a
    let feasible = |t: f64| {
        let mut adj: Vec<Vec<usize>> = Vec::with_capacity(n + m);
        for (i, x) in a.iter().enumerate() {
            let mut row: Vec<usize> = (0..m).filter(|&j| linf(x, &b[j]) <= t).collect();
            if half_persistence(x) <= t {
                row.push(m + i);
            }
            adj.push(row);
        }
        for (j, y) in b.iter().enumerate() {
            let mut row: Vec<usize> = (m..m + n).collect();
            if half_persistence(y) <= t {
                row.push(j);
            }
            adj.push(row);
        }
        max_matching(&adj, n + m) == n + m
    };
    let (mut lo, mut hi) = (0, candidates.len() - 1);
    while lo < hi {
        let mid = (lo + hi) / 2;
        if feasible(candidates[mid]) {
            hi = mid;
        } else {
            lo = mid + 1;
        }
    }
    Ok(candidates[lo])
}

/// True when the diagram satisfies the fast path's precondition shape.
fn all_births_zero(d: &PersistenceDiagram) -> bool {
    d.degree() == 0 && d.bars().iter().all(|b| b.birth == 0.0)
}

/// Bottleneck distance for degree-0 diagrams whose bars are all born at 0.
///
/// With a common birth the diagrams are sets of deaths on a ray. Sorting both
/// finite death lists in decreasing order (padding with zeros) the distance is
/// `max_i min(|a_i - b_i|, max(a_i, b_i) / 2)`: either the i-th largest deaths
/// are matched to each other or both go to the diagonal.
pub fn bottleneck_degree0_fast(d1: &PersistenceDiagram, d2: &PersistenceDiagram) -> Result<f64> {
    if !all_births_zero(d1) || !all_births_zero(d2) {
        return Err(Error::InvalidInput(
            "fast bottleneck needs degree-0 diagrams with every birth at 0".into(),
        ));
    }
    if d1.essential_count() != d2.essential_count() {
        return Err(Error::InvalidInput(
            "fast bottleneck needs equal essential bar counts".into(),
        ));
    }
    let finite_desc = |d: &PersistenceDiagram| {
        let mut v: Vec<f64> = d
            .bars()
            .iter()
            .filter(|b| !b.is_essential())
            .map(|b| b.death)
            .collect();
        v.sort_by(|x, y| y.total_cmp(x));
        v
    };
    let (a, b) = (finite_desc(d1), finite_desc(d2));
    let len = a.len().max(b.len());
    let mut worst: f64 = 0.0;
    for i in 0..len {
        let x = a.get(i).copied().unwrap_or(0.0);
        let y = b.get(i).copied().unwrap_or(0.0);
        worst = worst.max((x - y).abs().min(x.max(y) / 2.0));
    }
    Ok(worst)
}

/// Bottleneck, taking the fast path whenever both diagrams qualify.
pub fn bottleneck_auto(d1: &PersistenceDiagram, d2: &PersistenceDiagram) -> Result<f64> {
    if all_births_zero(d1) && all_births_zero(d2) && d1.essential_count() == d2.essential_count() {
        bottleneck_degree0_fast(d1, d2)
    } else {
        bottleneck(d1, d2)
    }
}

/// Pairwise bottleneck distances. Every pair must be finite.
pub fn bottleneck_matrix(diagrams: &[PersistenceDiagram]) -> Result<DistanceMatrix> {
    let n = diagrams.len();
    if let Some(d) = diagrams.iter().find(|d| d.degree() != diagrams[0].degree()) {
        return Err(Error::DegreeMismatch(diagrams[0].degree(), d.degree()));
    }
    let pairs: Vec<(usize, usize)> = (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).collect();
    let values = pairs
        .par_iter()
        .map(|&(i, j)| {
            let v = bottleneck_auto(&diagrams[i], &diagrams[j])?;
            if v.is_finite() {
                Ok(v)
            } else {
                Err(Error::InfiniteDistance(i, j))
            }
        })
        .collect::<Result<Vec<f64>>>()?;
    DistanceMatrix::from_upper(n, &values)
}

/// Order of a Wasserstein distance, `p` in `[1, inf]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WassersteinOrder(f64);

impl WassersteinOrder {
    pub fn new(p: f64) -> Result<Self> {
        if p >= 1.0 {
            Ok(Self(p))
        } else {
            Err(Error::InvalidInput(format!("Wasserstein order must be >= 1, got {p}")))
        }
    }

    pub const INFINITY: WassersteinOrder = WassersteinOrder(f64::INFINITY);

    pub fn value(&self) -> f64 {
        self.0
    }
}

/// Wasserstein distance between two uniform empirical measures of equal size,
/// given the ground-distance table between their atoms.
///
/// `(min over assignments of (1/n) sum cost^p)^(1/p)`, or the minimal maximum
/// cost when `p` is infinite.
pub fn wasserstein_from_costs(cost: &[Vec<f64>], p: WassersteinOrder) -> Result<f64> {
    let n = cost.len();
    if cost.iter().any(|r| r.len() != n) {
        return Err(Error::InvalidInput("cost table must be square".into()));
    }
    if cost.iter().flatten().any(|c| !c.is_finite() || *c < 0.0) {
        return Err(Error::InvalidInput("ground distances must be finite".into()));
    }
    if n == 0 {
        return Ok(0.0);
    }
    if p.0.is_infinite() {
        return Ok(bottleneck_assignment(cost));
    }
    let powered: Vec<Vec<f64>> = cost
        .iter()
        .map(|r| r.iter().map(|c| c.powf(p.0)).collect())
        .collect();
    let (_, assignment) = hungarian(&powered);
    let total: f64 = assignment
        .iter()
        .enumerate()
        .map(|(i, &j)| powered[i][j])
        .sum();
    Ok((total / n as f64).powf(1.0 / p.0))
}

/// Wasserstein distance between two equal-size sets of diagrams with the
/// bottleneck distance as ground metric.
pub fn wasserstein_empirical(
    set_a: &[PersistenceDiagram],
    set_b: &[PersistenceDiagram],
    p: WassersteinOrder,
) -> Result<f64> {
    if set_a.len() != set_b.len() {
        return Err(Error::InvalidInput(format!(
            "sample sizes differ: {} vs {}",
            set_a.len(),
            set_b.len()
        )));
    }
    let cost = set_a
        .iter()
        .map(|x| set_b.iter().map(|y| bottleneck_auto(x, y)).collect::<Result<Vec<_>>>())
        .collect::<Result<Vec<_>>>()?;
    wasserstein_from_costs(&cost, p)
}

/// Hausdorff distance between ensembles seen as sets of trains under `metric`.
pub fn hausdorff_with<M: TrainMetric>(r1: &TrainEnsemble, r2: &TrainEnsemble, metric: &M) -> Result<f64> {
    let (a, b) = (r1.canonicalize(), r2.canonicalize());
    let table = a
        .trains()
        .iter()
        .map(|x| b.trains().iter().map(|y| metric.distance(x, y)).collect::<Result<Vec<_>>>())
        .collect::<Result<Vec<Vec<f64>>>>()?;
    let forward = table
        .iter()
        .map(|row| row.iter().copied().fold(f64::INFINITY, f64::min))
        .fold(0.0, f64::max);
    let backward = (0..b.len())
        .map(|j| table.iter().map(|row| row[j]).fold(f64::INFINITY, f64::min))
        .fold(0.0, f64::max);
    Ok(forward.max(backward))
}

/// Hausdorff distance between ensembles under the VP distance with cost `q`.
pub fn hausdorff_ensembles(r1: &TrainEnsemble, r2: &TrainEnsemble, q: f64) -> Result<f64> {
    hausdorff_with(r1, r2, &VictorPurpura(VpParams::new(q)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle;
    use crate::types::TimeDomain;
    use proptest::prelude::*;

    const INF: f64 = f64::INFINITY;

    fn dgm(degree: usize, bars: &[(f64, f64)]) -> PersistenceDiagram {
        PersistenceDiagram::new(degree, bars.iter().map(|&(b, d)| Bar::new(b, d)).collect()).unwrap()
    }

    #[test]
    fn bottleneck_examples() {
        let d = dgm(0, &[(0.0, 2.0), (1.0, 4.0)]);
        assert_eq!(bottleneck(&d, &d).unwrap(), 0.0);
        assert_eq!(bottleneck(&dgm(1, &[(0.0, 2.0)]), &dgm(1, &[])).unwrap(), 1.0);
        assert_eq!(bottleneck(&dgm(1, &[(0.0, 3.0)]), &dgm(1, &[(0.0, 5.0)])).unwrap(), 2.0);
        assert_eq!(bottleneck(&dgm(1, &[]), &dgm(1, &[])).unwrap(), 0.0);
    }

    #[test]
    fn essential_bars() {
        let a = dgm(0, &[(0.0, INF)]);
        let b = dgm(0, &[(0.0, INF), (0.0, INF)]);
        assert_eq!(bottleneck(&a, &b).unwrap(), INF);
        let c = dgm(0, &[(3.0, INF)]);
        assert_eq!(bottleneck(&a, &c).unwrap(), 3.0);
        assert!(matches!(bottleneck(&a, &dgm(1, &[])), Err(Error::DegreeMismatch(0, 1))));
    }

    #[test]
    fn fast_path_examples() {
        let a = dgm(0, &[(0.0, 1.0), (0.0, 2.0), (0.0, INF)]);
        assert_eq!(bottleneck_degree0_fast(&a, &a).unwrap(), 0.0);
        let b = dgm(0, &[(0.0, 4.0), (0.0, INF)]);
        let c = dgm(0, &[(0.0, INF)]);
        assert_eq!(bottleneck_degree0_fast(&b, &c).unwrap(), 2.0);
        assert!(bottleneck_degree0_fast(&dgm(0, &[(1.0, 2.0)]), &c).is_err());
        assert!(bottleneck_degree0_fast(&b, &dgm(0, &[])).is_err());
        assert!(bottleneck_degree0_fast(&dgm(1, &[]), &dgm(1, &[])).is_err());
    }

    #[test]
    fn matrix_checks() {
        let d = dgm(0, &[(0.0, 1.0), (0.0, INF)]);
        assert_eq!(bottleneck_matrix(&[d.clone(), d.clone(), d.clone()]).unwrap(), DistanceMatrix::zeros(3));
        let e = dgm(0, &[(0.0, 5.0), (0.0, INF)]);
        let m = bottleneck_matrix(&[d.clone(), e]).unwrap();
        assert_eq!(m.get(0, 1), 2.5);
        let bad = dgm(0, &[(0.0, INF), (0.0, INF)]);
        assert!(matches!(bottleneck_matrix(&[d.clone(), d, bad]), Err(Error::InfiniteDistance(0, 2))));
    }

    #[test]
    fn wasserstein_basics() {
        let a = vec![dgm(1, &[(0.0, 2.0)]), dgm(1, &[(1.0, 5.0)])];
        for p in [WassersteinOrder::new(1.0).unwrap(), WassersteinOrder::INFINITY] {
            assert_eq!(wasserstein_empirical(&a, &a, p).unwrap(), 0.0);
        }
        let one = WassersteinOrder::new(1.0).unwrap();
        let x = vec![dgm(1, &[(0.0, 3.0)])];
        let y = vec![dgm(1, &[(0.0, 5.0)])];
        assert_eq!(wasserstein_empirical(&x, &y, one).unwrap(), 2.0);
        assert!(wasserstein_empirical(&a, &x, one).is_err());
        assert!(WassersteinOrder::new(0.5).is_err());
    }

    #[test]
    fn hausdorff_examples() {
        let dom = TimeDomain::new(20);
        let r = TrainEnsemble::from_times(vec![vec![1, 5], vec![9]], dom).unwrap();
        let rp = r.permuted(&[1, 0]).unwrap();
        assert_eq!(hausdorff_ensembles(&r, &r, 1.0).unwrap(), 0.0);
        assert_eq!(hausdorff_ensembles(&r, &rp, 1.0).unwrap(), 0.0);
        let s = TrainEnsemble::from_times(vec![vec![2], vec![9, 10]], dom).unwrap();
        // VP_1({1,5},{2}) = 1 (shift 1->2) + 1 (erase 5) = 2
        // VP_1({1,5},{9,10}) = 4
        // VP_1({9},{2}) = 2;  VP_1({9},{9,10}) = 1
        // rows: {1,5}: min 2; {9}: min 1 -> 2. cols: {2}: min 2; {9,10}: min 1 -> 2.
        assert_eq!(hausdorff_ensembles(&r, &s, 1.0).unwrap(), 2.0);
    }

    fn random_diagram(degree: usize, max_len: usize, essential: usize, zero_births: bool) -> impl Strategy<Value = PersistenceDiagram> {
        proptest::collection::vec((0u32..20, 0u32..20), 0..max_len).prop_map(move |v| {
            let mut bars: Vec<Bar> = v
                .into_iter()
                .map(|(b, len)| {
                    let birth = if zero_births { 0.0 } else { f64::from(b) };
                    Bar::new(birth, birth + f64::from(len) * 0.5)
                })
                .collect();
            bars.extend(std::iter::repeat(Bar::new(0.0, INF)).take(essential));
            PersistenceDiagram::new(degree, bars).unwrap()
        })
    }

    proptest! {
        #[test]
        fn fast_path_equals_matching(a in random_diagram(0, 12, 1, true), b in random_diagram(0, 12, 1, true)) {
            prop_assert_eq!(bottleneck_degree0_fast(&a, &b).unwrap(), bottleneck(&a, &b).unwrap());
        }

        #[test]
        fn bottleneck_is_symmetric_and_triangular(
            a in random_diagram(1, 6, 0, false),
            b in random_diagram(1, 6, 0, false),
            c in random_diagram(1, 6, 0, false),
        ) {
            let ab = bottleneck(&a, &b).unwrap();
            prop_assert_eq!(ab, bottleneck(&b, &a).unwrap());
            let bc = bottleneck(&b, &c).unwrap();
            let ac = bottleneck(&a, &c).unwrap();
            prop_assert!(ac <= ab + bc + 1e-9);
        }

        #[test]
        fn bottleneck_matches_exhaustive_oracle(a in random_diagram(1, 4, 0, false), b in random_diagram(1, 4, 0, false)) {
            prop_assert_eq!(bottleneck(&a, &b).unwrap(), oracle::bottleneck_exhaustive(&a, &b).unwrap());
        }

        #[test]
        fn wasserstein_matches_permutations(
            costs in proptest::collection::vec(0u32..50, 16),
            p in prop_oneof![Just(1.0), Just(2.0), Just(INF)],
        ) {
            let table: Vec<Vec<f64>> = costs.chunks(4).map(|r| r.iter().map(|&c| f64::from(c) / 4.0).collect()).collect();
            let order = if p.is_infinite() { WassersteinOrder::INFINITY } else { WassersteinOrder::new(p).unwrap() };
            let got = wasserstein_from_costs(&table, order).unwrap();
            let expected = oracle::wasserstein_permutations(&table, p);
            prop_assert!((got - expected).abs() <= 1e-9 * expected.max(1.0));
        }
    }
}
