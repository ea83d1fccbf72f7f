//! Slow reference implementations used to cross-check the fast paths.
//!
//! Nothing here shares code with the routines it verifies; each function is
//! a direct transcription of a definition.

use crate::error::{Error, Result};
use crate::types::{Bar, DistanceMatrix, PersistenceDiagram};

/// Minimum spanning forest weights by Kruskal with a flat component-label
/// array (relabel on merge).
pub fn kruskal_mst_weights(m: &DistanceMatrix) -> Vec<f64> {
    let n = m.len();
    let mut edges: Vec<(f64, usize, usize)> = Vec::new();
    for i in 0..n {
        for j in 0..i {
            edges.push((m.get(i, j), j, i));
        }
    }
    edges.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut label: Vec<usize> = (0..n).collect();
    let mut weights = Vec::new();
    for (w, a, b) in edges {
        let (la, lb) = (label[a], label[b]);
        if la != lb {
            for l in label.iter_mut() {
                if *l == lb {
                    *l = la;
                }
            }
            weights.push(w);
        }
    }
    weights
}

/// Connected components of the graph with edges of weight at most `r`.
pub fn bfs_components(m: &DistanceMatrix, r: f64) -> usize {
    let n = m.len();
    let mut seen = vec![false; n];
    let mut count = 0;
    for s in 0..n {
        if seen[s] {
            continue;
        }
        count += 1;
        seen[s] = true;
        let mut queue = std::collections::VecDeque::from([s]);
        while let Some(u) = queue.pop_front() {
            for v in 0..n {
                if !seen[v] && m.get(u, v) <= r {
                    seen[v] = true;
                    queue.push_back(v);
                }
            }
        }
    }
    count
}

/// Degree-1 diagram from a dense reduction of the full boundary matrix over
/// every vertex, edge and triangle of the complete Rips filtration.
pub fn naive_degree1(m: &DistanceMatrix) -> PersistenceDiagram {
    let n = m.len();
    let mut simplices: Vec<(f64, Vec<usize>)> = Vec::new();
    for i in 0..n {
        simplices.push((0.0, vec![i]));
        for j in i + 1..n {
            simplices.push((m.get(i, j), vec![i, j]));
            for k in j + 1..n {
                let v = m.get(i, j).max(m.get(i, k)).max(m.get(j, k));
                simplices.push((v, vec![i, j, k]));
            }
        }
    }
    simplices.sort_by(|a, b| {
        a.0.total_cmp(&b.0)
            .then(a.1.len().cmp(&b.1.len()))
            .then(a.1.cmp(&b.1))
    });
    let total = simplices.len();
    let position = |s: &[usize]| simplices.iter().position(|x| x.1 == s).expect("face exists");
    let mut columns: Vec<Vec<bool>> = vec![vec![false; total]; total];
    for (c, (_, verts)) in simplices.iter().enumerate() {
        if verts.len() > 1 {
            for skip in 0..verts.len() {
                let face: Vec<usize> = verts
                    .iter()
                    .enumerate()
                    .filter(|&(i, _)| i != skip)
                    .map(|(_, &v)| v)
                    .collect();
                columns[c][position(&face)] = true;
            }
        }
    }
    let low = |col: &Vec<bool>| col.iter().rposition(|&x| x);
    for c in 0..total {
        loop {
            let Some(l) = low(&columns[c]) else { break };
            let Some(prev) = (0..c).find(|&p| low(&columns[p]) == Some(l)) else {
                break;
            };
            let other = columns[prev].clone();
            for (x, y) in columns[c].iter_mut().zip(other) {
                *x ^= y;
            }
        }
    }
    let mut bars = Vec::new();
    let mut killed = vec![false; total];
    for c in 0..total {
        if let Some(l) = low(&columns[c]) {
            killed[l] = true;
            if simplices[l].1.len() == 2 && simplices[c].0 > simplices[l].0 {
                bars.push(Bar::new(simplices[l].0, simplices[c].0));
            }
        }
    }
    for c in 0..total {
        if simplices[c].1.len() == 2 && low(&columns[c]).is_none() && !killed[c] {
            bars.push(Bar::new(simplices[c].0, f64::INFINITY));
        }
    }
    PersistenceDiagram::new(1, bars).expect("valid bars")
}

/// Bottleneck distance by enumerating every partial matching (small diagrams).
pub fn bottleneck_exhaustive(a: &PersistenceDiagram, b: &PersistenceDiagram) -> Result<f64> {
    if a.len() > 6 || b.len() > 6 {
        return Err(Error::TooLarge {
            n: a.len(),
            m: b.len(),
            limit: 6,
        });
    }
    fn cost(x: &Bar, y: &Bar) -> f64 {
        if x.is_essential() && y.is_essential() {
            (x.birth - y.birth).abs()
        } else if x.is_essential() || y.is_essential() {
            f64::INFINITY
        } else {
            (x.birth - y.birth).abs().max((x.death - y.death).abs())
        }
    }
    fn visit(a: &[Bar], b: &[Bar], i: usize, used: &mut Vec<bool>, acc: f64, best: &mut f64) {
        if i == a.len() {
            let rest = b
                .iter()
                .zip(used.iter())
                .filter(|(_, &u)| !u)
                .map(|(y, _)| (y.death - y.birth) / 2.0)
                .fold(acc, f64::max);
            *best = best.min(rest);
            return;
        }
        let x = &a[i];
        visit(a, b, i + 1, used, acc.max((x.death - x.birth) / 2.0), best);
        for j in 0..b.len() {
            if !used[j] {
                used[j] = true;
                visit(a, b, i + 1, used, acc.max(cost(x, &b[j])), best);
                used[j] = false;
            }
        }
    }
    let mut best = f64::INFINITY;
    visit(a.bars(), b.bars(), 0, &mut vec![false; b.len()], 0.0, &mut best);
    Ok(best)
}

/// Wasserstein distance between uniform measures by trying every permutation.
pub fn wasserstein_permutations(cost: &[Vec<f64>], p: f64) -> f64 {
    let n = cost.len();
    let mut perm: Vec<usize> = (0..n).collect();
    let mut best = f64::INFINITY;
    fn heap(k: usize, perm: &mut Vec<usize>, f: &mut dyn FnMut(&[usize])) {
        if k <= 1 {
            f(perm);
            return;
        }
        for i in 0..k {
            heap(k - 1, perm, f);
            let j = if k % 2 == 0 { i } else { 0 };
            perm.swap(j, k - 1);
        }
    }
    heap(n, &mut perm, &mut |pm: &[usize]| {
        let v = if p.is_infinite() {
            pm.iter().enumerate().map(|(i, &j)| cost[i][j]).fold(0.0, f64::max)
        } else {
            let s: f64 = pm.iter().enumerate().map(|(i, &j)| cost[i][j].powf(p)).sum();
            (s / n as f64).powf(1.0 / p)
        };
        best = best.min(v);
    });
    if n == 0 {
        0.0
    } else {
        best
    }
}
