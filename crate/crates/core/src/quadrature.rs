//! Gauss rules on the unit interval and symmetric rules on triangles.

use faer::{Mat, Side};

/// Nodes and weights of the `n`-point Gauss rule on `[0, 1]` for the weight
/// `x^beta`, `beta > -1`, computed by the Golub–Welsch algorithm.
pub fn gauss_jacobi_unit(n: usize, beta: f64) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1 && beta > -1.0);
    // Jacobi weight (1 - y)^a (1 + y)^b on [-1, 1] with a = 0, b = beta.
    let (a, b) = (0.0f64, beta);
    let diag: Vec<f64> = (0..n)
        .map(|k| {
            let k = k as f64;
            if k == 0.0 {
                (b - a) / (a + b + 2.0)
            } else {
                let s = 2.0 * k + a + b;
                (b * b - a * a) / (s * (s + 2.0))
            }
        })
        .collect();
    let off: Vec<f64> = (1..n)
        .map(|k| {
            let k = k as f64;
            let s = 2.0 * k + a + b;
            (4.0 * k * (k + a) * (k + b) * (k + a + b) / (s * s * (s + 1.0) * (s - 1.0))).sqrt()
        })
        .collect();
    let jac = Mat::<f64>::from_fn(n, n, |i, j| {
        if i == j {
            diag[i]
        } else if i == j + 1 {
            off[j]
        } else if j == i + 1 {
            off[i]
        } else {
            0.0
        }
    });
    let evd = jac
        .self_adjoint_eigen(Side::Lower)
        .expect("symmetric tridiagonal eigendecomposition");
    let mu0 = 1.0 / (beta + 1.0);
    let vals = evd.S().column_vector();
    let vecs = evd.U();
    let mut pairs: Vec<(f64, f64)> = (0..n)
        .map(|i| (0.5 * (vals[i] + 1.0), mu0 * vecs[(0, i)] * vecs[(0, i)]))
        .collect();
    pairs.sort_by(|p, q| p.0.total_cmp(&q.0));
    pairs.into_iter().unzip()
}

/// Gauss–Legendre rule on `[0, 1]`.
pub fn gauss_legendre_unit(n: usize) -> (Vec<f64>, Vec<f64>) {
    gauss_jacobi_unit(n, 0.0)
}

/// Degree-4 symmetric six-point rule: barycentric points and weights summing to one.
pub fn triangle_degree4() -> [([f64; 3], f64); 6] {
    const A: f64 = 0.445_948_490_915_965;
    const WA: f64 = 0.223_381_589_678_011;
    const B: f64 = 0.091_576_213_509_771;
    const WB: f64 = 0.109_951_743_655_322;
    [
        ([A, A, 1.0 - 2.0 * A], WA),
        ([A, 1.0 - 2.0 * A, A], WA),
        ([1.0 - 2.0 * A, A, A], WA),
        ([B, B, 1.0 - 2.0 * B], WB),
        ([B, 1.0 - 2.0 * B, B], WB),
        ([1.0 - 2.0 * B, B, B], WB),
    ]
}

/// Two-point Gauss rule on a segment, as parameters in `[0, 1]` and weights summing to one.
pub const SEGMENT_GAUSS2: [(f64, f64); 2] = [
    (0.211_324_865_405_187_1, 0.5),
    (0.788_675_134_594_812_9, 0.5),
];

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn jacobi_rule_is_exact_for_moments() {
        for &beta in &[-0.8, -0.3, 0.0, 0.5, 1.0] {
            let (x, w) = gauss_jacobi_unit(6, beta);
            for k in 0..12 {
                let q: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(k)).sum();
                let exact = 1.0 / (beta + k as f64 + 1.0);
                assert!((q - exact).abs() < 1e-13, "beta {beta} k {k}: {q} vs {exact}");
            }
        }
    }

    #[test]
    fn triangle_rule_degree_four() {
        let rule = triangle_degree4();
        let total: f64 = rule.iter().map(|p| p.1).sum();
        assert!((total - 1.0).abs() < 1e-14);
        // Reference triangle (0,0),(1,0),(0,1): integral of x^a y^b is a! b! / (a+b+2)!,
        // normalized by the area 1/2.
        let fact = |n: u32| (1..=n).product::<u32>() as f64;
        for a in 0..=4u32 {
            for b in 0..=(4 - a) {
                let q: f64 = rule
                    .iter()
                    .map(|(l, w)| w * l[1].powi(a as i32) * l[2].powi(b as i32))
                    .sum();
                let exact = 2.0 * fact(a) * fact(b) / fact(a + b + 2);
                assert!((q - exact).abs() < 1e-12, "{a} {b}");
            }
        }
    }
}
