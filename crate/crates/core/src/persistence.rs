//! Vietoris-Rips filtrations and their persistent homology in degrees 0 and 1.
//!
//! Coefficients are in the two-element field. Simplices with equal filtration
//! value are ordered by dimension, then lexicographically by vertex list.

use std::cmp::Ordering;
use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::types::{Bar, DistanceMatrix, PersistenceDiagram};

/// A simplex of a Rips filtration with its entry value.
#[derive(Debug, Clone, PartialEq)]
pub struct Simplex {
    pub vertices: Vec<usize>,
    pub value: f64,
}

impl Simplex {
    pub fn dim(&self) -> usize {
        self.vertices.len() - 1
    }
}

fn filtration_order(a: &Simplex, b: &Simplex) -> Ordering {
    a.value
        .total_cmp(&b.value)
        .then(a.vertices.len().cmp(&b.vertices.len()))
        .then_with(|| a.vertices.cmp(&b.vertices))
}

/// Simplices sorted by (value, dimension, vertex list).
#[derive(Debug, Clone, PartialEq)]
pub struct Filtration {
    simplices: Vec<Simplex>,
    max_dim: usize,
    max_scale: f64,
}

impl Filtration {
    pub fn simplices(&self) -> &[Simplex] {
        &self.simplices
    }

    pub fn max_dim(&self) -> usize {
        self.max_dim
    }

    pub fn max_scale(&self) -> f64 {
        self.max_scale
    }

    pub fn count_dim(&self, dim: usize) -> usize {
        self.simplices.iter().filter(|s| s.dim() == dim).count()
    }
}

/// Rips filtration of `matrix` up to dimension `max_dim` (1 or 2), keeping
/// simplices whose diameter is at most `max_scale`.
pub fn build_rips(matrix: &DistanceMatrix, max_dim: usize, max_scale: f64) -> Result<Filtration> {
    if !(1..=2).contains(&max_dim) {
        return Err(Error::Unsupported(format!(
            "Rips filtrations are built up to dimension 1 or 2, not {max_dim}"
        )));
    }
    if max_scale.is_nan() {
        return Err(Error::InvalidInput("max_scale is NaN".into()));
    }
    let n = matrix.len();
    let mut simplices: Vec<Simplex> = (0..n)
        .map(|v| Simplex {
            vertices: vec![v],
            value: 0.0,
        })
        .collect();
    for i in 0..n {
        for j in i + 1..n {
            let value = matrix.get(i, j);
            if value <= max_scale {
                simplices.push(Simplex {
                    vertices: vec![i, j],
                    value,
                });
            }
        }
    }
    if max_dim == 2 {
        for i in 0..n {
            for j in i + 1..n {
                for k in j + 1..n {
                    let value = matrix.get(i, j).max(matrix.get(i, k)).max(matrix.get(j, k));
                    if value <= max_scale {
                        simplices.push(Simplex {
                            vertices: vec![i, j, k],
                            value,
                        });
                    }
                }
            }
        }
    }
    simplices.sort_by(filtration_order);
    Ok(Filtration {
        simplices,
        max_dim,
        max_scale,
    })
}

/// Disjoint-set forest with path halving and union by size.
#[derive(Debug, Clone)]
pub struct UnionFind {
    parent: Vec<usize>,
    size: Vec<usize>,
}

impl UnionFind {
    pub fn new(n: usize) -> Self {
        Self {
            parent: (0..n).collect(),
            size: vec![1; n],
        }
    }

    pub fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    /// Merges the sets of `a` and `b`; false if they were already joined.
    pub fn union(&mut self, a: usize, b: usize) -> bool {
        let (mut ra, mut rb) = (self.find(a), self.find(b));
        if ra == rb {
            return false;
        }
        if self.size[ra] < self.size[rb] {
            std::mem::swap(&mut ra, &mut rb);
        }
        self.parent[rb] = ra;
        self.size[ra] += self.size[rb];
        true
    }
}

fn sorted_edges(matrix: &DistanceMatrix, max_scale: f64) -> Vec<(f64, usize, usize)> {
    let n = matrix.len();
    let mut edges = Vec::with_capacity(n * n.saturating_sub(1) / 2);
    for i in 0..n {
        for j in i + 1..n {
            let w = matrix.get(i, j);
            if w <= max_scale {
                edges.push((w, i, j));
            }
        }
    }
    edges.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));
    edges
}

/// Degree-0 diagram: every bar is born at 0, finite deaths are the weights of
/// a minimum spanning tree, and one bar per connected component is essential.
pub fn ph_degree0(matrix: &DistanceMatrix) -> PersistenceDiagram {
    ph_degree0_truncated(matrix, f64::INFINITY)
}

/// Degree-0 diagram of the filtration cut at `max_scale`.
pub fn ph_degree0_truncated(matrix: &DistanceMatrix, max_scale: f64) -> PersistenceDiagram {
    let n = matrix.len();
    let mut uf = UnionFind::new(n);
    let mut bars = Vec::with_capacity(n);
    for (w, i, j) in sorted_edges(matrix, max_scale) {
        if uf.union(i, j) {
            bars.push(Bar::new(0.0, w));
        }
    }
    let components = n - bars.len();
    bars.extend(std::iter::repeat(Bar::new(0.0, f64::INFINITY)).take(components));
    PersistenceDiagram::new(0, bars).expect("deaths are nonnegative")
}

/// Symmetric difference of two sorted index lists (addition over Z/2).
fn add_columns(target: &mut Vec<usize>, other: &[usize]) {
    let mut out = Vec::with_capacity(target.len() + other.len());
    let (mut i, mut j) = (0, 0);
    while i < target.len() && j < other.len() {
        match target[i].cmp(&other[j]) {
            Ordering::Less => {
                out.push(target[i]);
                i += 1;
            }
            Ordering::Greater => {
                out.push(other[j]);
                j += 1;
            }
            Ordering::Equal => {
                i += 1;
                j += 1;
            }
        }
    }
    out.extend_from_slice(&target[i..]);
    out.extend_from_slice(&other[j..]);
    *target = out;
}

/// Degree-1 diagram of the Rips filtration up to `max_scale`.
///
/// Triangle boundaries are reduced left to right; each reduced column's
/// lowest edge pairs with the triangle. Zero-persistence pairs are dropped,
/// and cycles still alive at `max_scale` are reported as essential bars.
pub fn ph_degree1(matrix: &DistanceMatrix, max_scale: f64) -> Result<PersistenceDiagram> {
    let filtration = build_rips(matrix, 2, max_scale)?;
    Ok(degree1_from_filtration(&filtration))
}

/// [`ph_degree1`] with `max_scale` set to the largest matrix entry.
pub fn ph_degree1_full(matrix: &DistanceMatrix) -> PersistenceDiagram {
    ph_degree1(matrix, matrix.max_entry()).expect("dimension 2 is supported")
}

fn degree1_from_filtration(filtration: &Filtration) -> PersistenceDiagram {
    let mut edge_index: HashMap<(usize, usize), usize> = HashMap::new();
    let mut edge_values = Vec::new();
    let mut n_vertices = 0;
    for s in filtration.simplices() {
        match s.vertices.as_slice() {
            [_] => n_vertices += 1,
            &[a, b] => {
                edge_index.insert((a, b), edge_values.len());
                edge_values.push(s.value);
            }
            _ => {}
        }
    }
    // Edges that merge components are never cycle births.
    let mut uf = UnionFind::new(n_vertices);
    let mut creates_cycle = vec![false; edge_values.len()];
    for s in filtration.simplices() {
        if let &[a, b] = s.vertices.as_slice() {
            creates_cycle[edge_index[&(a, b)]] = !uf.union(a, b);
        }
    }
    let mut pivots: HashMap<usize, Vec<usize>> = HashMap::new();
    let mut paired = vec![false; edge_values.len()];
    let mut bars = Vec::new();
    for s in filtration.simplices() {
        let &[a, b, c] = s.vertices.as_slice() else {
            continue;
        };
        let mut column = vec![edge_index[&(a, b)], edge_index[&(a, c)], edge_index[&(b, c)]];
        column.sort_unstable();
        while let Some(&low) = column.last() {
            match pivots.get(&low) {
                Some(other) => add_columns(&mut column, other),
                None => break,
            }
        }
        if let Some(&low) = column.last() {
            paired[low] = true;
            let birth = edge_values[low];
            if s.value > birth {
                bars.push(Bar::new(birth, s.value));
            }
            pivots.insert(low, column);
        }
    }
    for (e, &cycle) in creates_cycle.iter().enumerate() {
        if cycle && !paired[e] {
            bars.push(Bar::new(edge_values[e], f64::INFINITY));
        }
    }
    PersistenceDiagram::new(1, bars).expect("deaths follow births in filtration order")
}

/// Diagram of the requested degree with the defaults used by the pipeline:
/// degree 0 on the full graph, degree 1 up to the largest entry.
pub fn diagram(matrix: &DistanceMatrix, degree: usize) -> Result<PersistenceDiagram> {
    match degree {
        0 => Ok(ph_degree0(matrix)),
        1 => Ok(ph_degree1_full(matrix)),
        d => Err(Error::Unsupported(format!("homology degree {d}"))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle;
    use proptest::prelude::*;

    fn deaths(d: &PersistenceDiagram) -> Vec<f64> {
        d.bars().iter().map(|b| b.death).collect()
    }

    #[test]
    fn rips_on_equilateral_triangle() {
        let m = DistanceMatrix::from_upper(3, &[1.0, 1.0, 1.0]).unwrap();
        let f = build_rips(&m, 2, f64::INFINITY).unwrap();
        assert_eq!((f.count_dim(0), f.count_dim(1), f.count_dim(2)), (3, 3, 1));
        assert!(f.simplices()[..3].iter().all(|s| s.value == 0.0));
        assert_eq!(f.simplices().last().unwrap().vertices, vec![0, 1, 2]);
    }

    #[test]
    fn rips_respects_max_scale_and_counts_edges() {
        let m = DistanceMatrix::from_upper(2, &[5.0]).unwrap();
        let f = build_rips(&m, 1, 4.0).unwrap();
        assert_eq!((f.count_dim(0), f.count_dim(1)), (2, 0));
        let upper: Vec<f64> = (1..=21).map(f64::from).collect();
        let m = DistanceMatrix::from_upper(7, &upper).unwrap();
        assert_eq!(build_rips(&m, 1, f64::INFINITY).unwrap().count_dim(1), 21);
        assert!(matches!(build_rips(&m, 3, 1.0), Err(Error::Unsupported(_))));
    }

    #[test]
    fn degree0_examples() {
        let single = ph_degree0(&DistanceMatrix::zeros(1));
        assert_eq!(deaths(&single), vec![f64::INFINITY]);
        let m = DistanceMatrix::from_upper(3, &[1.0, 2.0, 3.0]).unwrap();
        assert_eq!(deaths(&ph_degree0(&m)), vec![1.0, 2.0, f64::INFINITY]);
    }

    #[test]
    fn degree0_truncation_keeps_components_essential() {
        let m = DistanceMatrix::from_upper(3, &[1.0, 5.0, 5.0]).unwrap();
        let d = ph_degree0_truncated(&m, 2.0);
        assert_eq!(deaths(&d), vec![1.0, f64::INFINITY, f64::INFINITY]);
    }

    #[test]
    fn square_has_one_loop() {
        let r2 = 2f64.sqrt();
        // 0-1-2-3-0 with unit sides and diagonals sqrt 2
        let m = DistanceMatrix::from_upper(4, &[1.0, r2, 1.0, 1.0, r2, 1.0]).unwrap();
        let d = ph_degree1_full(&m);
        assert_eq!(d.bars(), &[Bar::new(1.0, r2)]);
    }

    #[test]
    fn three_points_have_no_loop() {
        let m = DistanceMatrix::from_upper(3, &[1.0, 2.0, 3.0]).unwrap();
        assert!(ph_degree1_full(&m).is_empty());
    }

    #[test]
    fn truncated_loop_is_essential() {
        let r2 = 2f64.sqrt();
        let m = DistanceMatrix::from_upper(4, &[1.0, r2, 1.0, 1.0, r2, 1.0]).unwrap();
        let d = ph_degree1(&m, 1.2).unwrap();
        assert_eq!(d.bars(), &[Bar::new(1.0, f64::INFINITY)]);
    }

    fn matrix_strategy(max_n: usize) -> impl Strategy<Value = DistanceMatrix> {
        (3..=max_n).prop_flat_map(|n| {
            proptest::collection::vec(1u32..20, n * (n - 1) / 2)
                .prop_map(move |v| {
                    let vals: Vec<f64> = v.into_iter().map(f64::from).collect();
                    DistanceMatrix::from_upper(n, &vals).unwrap()
                })
        })
    }

    proptest! {
        #[test]
        fn degree1_matches_naive_reduction(m in matrix_strategy(7)) {
            let expected = oracle::naive_degree1(&m);
            prop_assert_eq!(ph_degree1_full(&m), expected);
        }

        #[test]
        fn degree0_matches_kruskal(m in matrix_strategy(12)) {
            let mut expected = oracle::kruskal_mst_weights(&m);
            expected.sort_by(f64::total_cmp);
            let got: Vec<f64> = ph_degree0(&m).bars().iter().filter(|b| !b.is_essential()).map(|b| b.death).collect();
            prop_assert_eq!(got, expected);
        }

        #[test]
        fn scale_equivariance(m in matrix_strategy(7), c in 0.25f64..4.0) {
            let scaled = m.scaled(c).unwrap();
            let d1 = ph_degree1_full(&m);
            let d1s = ph_degree1_full(&scaled);
            prop_assert_eq!(d1.len(), d1s.len());
            for (a, b) in d1.bars().iter().zip(d1s.bars()) {
                prop_assert_eq!(a.birth * c, b.birth);
                prop_assert_eq!(a.death * c, b.death);
            }
        }

        #[test]
        fn permutation_invariance(m in matrix_strategy(8), seed in any::<u64>()) {
            use rand::seq::SliceRandom;
            use rand::SeedableRng;
            let mut perm: Vec<usize> = (0..m.len()).collect();
            perm.shuffle(&mut rand_chacha::ChaCha8Rng::seed_from_u64(seed));
            let p = m.permuted(&perm).unwrap();
            prop_assert_eq!(ph_degree0(&m), ph_degree0(&p));
            prop_assert_eq!(ph_degree1_full(&m), ph_degree1_full(&p));
        }
    }
}
