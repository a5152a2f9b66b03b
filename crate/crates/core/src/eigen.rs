//! Lowest eigenpairs of symmetric pencils `K x = ν B x` by shift-invert
//! subspace iteration with Rayleigh–Ritz projection.

use faer::{Mat, Side};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct EigenPairs {
    /// Ascending eigenvalues.
    pub values: Vec<f64>,
    /// `B`-orthonormal eigenvectors.
    pub vectors: Vec<Vec<f64>>,
    /// Relative residuals `‖K x − ν B x‖ / ‖ν B x‖`.
    pub residuals: Vec<f64>,
    pub iterations: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EigenOptions {
    pub tol: f64,
    pub max_iter: usize,
    /// Extra subspace vectors beyond the requested count.
    pub guard: usize,
}

impl Default for EigenOptions {
    fn default() -> Self {
        Self { tol: 1e-10, max_iter: 400, guard: 6 }
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Computes the `k` eigenvalues of `K x = ν B x` closest to the shift built into
/// `solve_shifted`, which applies `(K − σB)^{-1}`. With `σ` below the spectrum
/// these are the lowest `k`.
pub fn subspace_iteration(
    n: usize,
    k: usize,
    apply_k: impl Fn(&[f64]) -> Vec<f64>,
    apply_b: impl Fn(&[f64]) -> Vec<f64>,
    solve_shifted: impl Fn(&[f64]) -> Result<Vec<f64>>,
    opts: EigenOptions,
) -> Result<EigenPairs> {
    if k == 0 || n == 0 {
        return Err(Error::Input("eigenvalue count and problem size must be positive".into()));
    }
    let p = (k + opts.guard).min(n);
    let k = k.min(n);
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_e16e);
    let mut x: Vec<Vec<f64>> = (0..p)
        .map(|_| (0..n).map(|_| rng.random::<f64>() - 0.5).collect())
        .collect();
    let mut last_residuals = Vec::new();
    for iter in 1..=opts.max_iter {
        let y: Vec<Vec<f64>> = x
            .iter()
            .map(|xi| solve_shifted(&apply_b(xi)))
            .collect::<Result<_>>()?;
        let by: Vec<Vec<f64>> = y.iter().map(|v| apply_b(v)).collect();
        let ky: Vec<Vec<f64>> = y.iter().map(|v| apply_k(v)).collect();
        let (values, z) = rayleigh_ritz(&y, &ky, &by)?;
        let m = values.len();
        if m < k {
            return Err(Error::LinearAlgebra(format!(
                "search space collapsed to dimension {m} below the requested {k}"
            )));
        }
        let combine = |src: &[Vec<f64>], j: usize| -> Vec<f64> {
            let mut out = vec![0.0; n];
            for (i, s) in src.iter().enumerate() {
                let c = z[(i, j)];
                if c != 0.0 {
                    out.iter_mut().zip(s).for_each(|(o, v)| *o += c * v);
                }
            }
            out
        };
        let xs: Vec<Vec<f64>> = (0..m).map(|j| combine(&y, j)).collect();
        let residuals: Vec<f64> = (0..k)
            .map(|j| {
                let kx = combine(&ky, j);
                let bx = combine(&by, j);
                let r: Vec<f64> = kx.iter().zip(&bx).map(|(a, b)| a - values[j] * b).collect();
                norm(&r) / (values[j].abs() * norm(&bx)).max(f64::MIN_POSITIVE)
            })
            .collect();
        if residuals.iter().all(|&r| r < opts.tol) {
            return Ok(EigenPairs {
                values: values[..k].to_vec(),
                vectors: xs[..k].to_vec(),
                residuals,
                iterations: iter,
            });
        }
        last_residuals = residuals;
        x = xs;
        // Refill a collapsed basis with fresh random directions.
        while x.len() < p {
            x.push((0..n).map(|_| rng.random::<f64>() - 0.5).collect());
        }
    }
    Err(Error::EigenStagnation { iterations: opts.max_iter, residuals: last_residuals })
}

/// Ritz values (ascending) and coefficient matrix of `B`-orthonormal Ritz vectors.
fn rayleigh_ritz(y: &[Vec<f64>], ky: &[Vec<f64>], by: &[Vec<f64>]) -> Result<(Vec<f64>, Mat<f64>)> {
    let p = y.len();
    let gram = Mat::<f64>::from_fn(p, p, |i, j| 0.5 * (dot(&y[i], &by[j]) + dot(&y[j], &by[i])));
    let proj = Mat::<f64>::from_fn(p, p, |i, j| 0.5 * (dot(&y[i], &ky[j]) + dot(&y[j], &ky[i])));
    let ge = gram
        .self_adjoint_eigen(Side::Lower)
        .map_err(|e| Error::LinearAlgebra(format!("Gram eigendecomposition failed: {e:?}")))?;
    let gs = ge.S().column_vector();
    let gmax = (0..p).map(|i| gs[i]).fold(0.0, f64::max);
    let keep: Vec<usize> = (0..p).filter(|&i| gs[i] > 1e-13 * gmax).collect();
    let r = keep.len();
    // Basis T = V D^{-1/2} is B-orthonormal.
    let t = Mat::<f64>::from_fn(p, r, |i, j| ge.U()[(i, keep[j])] / gs[keep[j]].sqrt());
    let reduced = t.transpose() * &proj * &t;
    let reduced = Mat::<f64>::from_fn(r, r, |i, j| 0.5 * (reduced[(i, j)] + reduced[(j, i)]));
    let re = reduced
        .self_adjoint_eigen(Side::Lower)
        .map_err(|e| Error::LinearAlgebra(format!("projected eigendecomposition failed: {e:?}")))?;
    let vals = re.S().column_vector();
    let mut order: Vec<usize> = (0..r).collect();
    order.sort_by(|&a, &b| vals[a].total_cmp(&vals[b]));
    let values = order.iter().map(|&i| vals[i]).collect();
    let u = re.U();
    let sorted = Mat::<f64>::from_fn(r, r, |i, j| u[(i, order[j])]);
    Ok((values, &t * &sorted))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn diagonal_pencil() {
        // K = diag(1..n), B = diag(2): eigenvalues j/2.
        let n = 60;
        let kd: Vec<f64> = (1..=n).map(|j| j as f64).collect();
        let pairs = subspace_iteration(
            n,
            3,
            |x| x.iter().zip(&kd).map(|(a, d)| a * d).collect(),
            |x| x.iter().map(|a| 2.0 * a).collect(),
            |y| Ok(y.iter().zip(&kd).map(|(a, d)| a / (d - 2.0 * 0.25)).collect()),
            EigenOptions::default(),
        )
        .unwrap();
        for (j, v) in pairs.values.iter().enumerate() {
            assert!((v - 0.5 * (j + 1) as f64).abs() < 1e-10);
        }
        let bnorm: f64 = pairs.vectors[0].iter().map(|a| 2.0 * a * a).sum();
        assert!((bnorm - 1.0).abs() < 1e-10);
    }
}
