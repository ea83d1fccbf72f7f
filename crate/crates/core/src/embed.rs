//! Classical multidimensional scaling for plotting distance matrices.

use crate::error::{Error, Result};
use crate::types::DistanceMatrix;

const JACOBI_TOLERANCE: f64 = 1e-12;
const JACOBI_MAX_SWEEPS: usize = 100;

/// Low-dimensional coordinates plus diagnostics.
#[derive(Debug, Clone, PartialEq)]
pub struct Embedding {
    /// One row per input point, `dim` columns.
    pub coords: Vec<Vec<f64>>,
    /// Eigenvalues of the centred Gram matrix, descending.
    pub eigenvalues: Vec<f64>,
    /// Sum of magnitudes of negative eigenvalues (zero for Euclidean input).
    pub negative_mass: f64,
}

/// Eigenvalues (descending) and column eigenvectors of a symmetric matrix by
/// cyclic Jacobi rotations.
pub fn symmetric_eigen(a: &[Vec<f64>]) -> (Vec<f64>, Vec<Vec<f64>>) {
    let n = a.len();
    let mut m: Vec<Vec<f64>> = a.to_vec();
    let mut v: Vec<Vec<f64>> = (0..n).map(|i| (0..n).map(|j| f64::from(u8::from(i == j))).collect()).collect();
    let scale = m.iter().flatten().map(|x| x * x).sum::<f64>().sqrt().max(f64::MIN_POSITIVE);
    for _ in 0..JACOBI_MAX_SWEEPS {
        let off: f64 = (0..n).flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j))).map(|(i, j)| m[i][j] * m[i][j]).sum::<f64>().sqrt();
        if off <= JACOBI_TOLERANCE * scale {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                if m[p][q] == 0.0 {
                    continue;
                }
                let theta = (m[q][q] - m[p][p]) / (2.0 * m[p][q]);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let (mkp, mkq) = (m[k][p], m[k][q]);
                    m[k][p] = c * mkp - s * mkq;
                    m[k][q] = s * mkp + c * mkq;
                }
                for k in 0..n {
                    let (mpk, mqk) = (m[p][k], m[q][k]);
                    m[p][k] = c * mpk - s * mqk;
                    m[q][k] = s * mpk + c * mqk;
                }
                for row in v.iter_mut() {
                    let (vp, vq) = (row[p], row[q]);
                    row[p] = c * vp - s * vq;
                    row[q] = s * vp + c * vq;
                }
            }
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| m[j][j].total_cmp(&m[i][i]).then(i.cmp(&j)));
    let values = order.iter().map(|&i| m[i][i]).collect();
    let vectors = order.iter().map(|&i| v.iter().map(|row| row[i]).collect()).collect();
    (values, vectors)
}

/// Torgerson MDS: double-centre the squared distances, keep the top `dim`
/// eigenpairs, scale eigenvectors by the square root of the clamped eigenvalue.
///
/// Each axis is oriented so that its first coordinate of non-negligible
/// magnitude is positive.
pub fn classical_mds(matrix: &DistanceMatrix, dim: usize) -> Result<Embedding> {
    let n = matrix.len();
    if !(1..=3).contains(&dim) {
        return Err(Error::InvalidInput(format!("embedding dimension must be 1, 2 or 3, got {dim}")));
    }
    if n < dim + 1 {
        return Err(Error::InvalidInput(format!("{n} points cannot be embedded in {dim} dimensions")));
    }
    let sq: Vec<Vec<f64>> = (0..n).map(|i| (0..n).map(|j| matrix.get(i, j).powi(2)).collect()).collect();
    let row_mean: Vec<f64> = sq.iter().map(|r| r.iter().sum::<f64>() / n as f64).collect();
    let grand = row_mean.iter().sum::<f64>() / n as f64;
    let gram: Vec<Vec<f64>> = (0..n)
        .map(|i| (0..n).map(|j| -0.5 * (sq[i][j] - row_mean[i] - row_mean[j] + grand)).collect())
        .collect();
    let (values, vectors) = symmetric_eigen(&gram);
    let top = values.first().copied().unwrap_or(0.0).abs().max(1.0);
    let negative_mass = values.iter().filter(|&&x| x < 0.0).map(|x| -x).sum();
    let mut coords = vec![vec![0.0; dim]; n];
    for axis in 0..dim {
        let s = values[axis].max(0.0).sqrt();
        let vec = &vectors[axis];
        let flip = vec
            .iter()
            .find(|x| x.abs() * s > 1e-9 * top.sqrt())
            .is_some_and(|&x| x < 0.0);
        let sign = if flip { -1.0 } else { 1.0 };
        for (i, row) in coords.iter_mut().enumerate() {
            row[axis] = sign * s * vec[i];
        }
    }
    // the Gram matrix is centred, so the coordinates are too up to rounding
    for axis in 0..dim {
        let mean = coords.iter().map(|r| r[axis]).sum::<f64>() / n as f64;
        for row in coords.iter_mut() {
            row[axis] -= mean;
        }
    }
    Ok(Embedding {
        coords,
        eigenvalues: values,
        negative_mass,
    })
}

pub fn euclidean(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt()
}
