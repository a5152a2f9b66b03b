//! Closed-form radial solutions on the disk and the one-dimensional
//! constrained eigenproblem behind the critical-mass analysis.
//!
//! Most quantities are expressed through the measure-adapted coordinate
//! `s = tau / (1 + tau)` with `tau = r^{2(1-alpha)} / 8`, in which the model
//! density `r^{-2 alpha} e^{U_alpha}` becomes `8 pi (1 - alpha) ds`.

use std::f64::consts::PI;

use serde::Serialize;

use crate::error::{Error, Result};

/// `U_{lambda,alpha}(r) = 2 log(lambda (1 - alpha) / (1 + lambda^2 r^{2(1-alpha)} / 8))`.
pub fn u_lambda_alpha(lambda: f64, alpha: f64, r: f64) -> f64 {
    let q = lambda * lambda * r.powf(2.0 * (1.0 - alpha)) / 8.0;
    2.0 * (lambda * (1.0 - alpha)).ln() - 2.0 * q.ln_1p()
}

/// Total weighted mass of the model density in the ball of radius `r`.
pub fn mass_ball(lambda: f64, alpha: f64, r: f64) -> f64 {
    let a = lambda * lambda * r.powf(2.0 * (1.0 - alpha)) / 8.0;
    if a.is_infinite() {
        return total_mass(alpha);
    }
    total_mass(alpha) * a / (1.0 + a)
}

/// `8 pi (1 - alpha)`, the supremum of [`mass_ball`].
pub fn total_mass(alpha: f64) -> f64 {
    8.0 * PI * (1.0 - alpha)
}

/// Radius at which the zero mode changes sign: `8^{1/(2(1-alpha))}`.
pub fn critical_radius(alpha: f64) -> f64 {
    8f64.powf(1.0 / (2.0 * (1.0 - alpha)))
}

/// The unique `lambda` with `mass_ball(lambda, alpha, 1) = rho`.
pub fn lambda_for_mass(rho: f64, alpha: f64) -> Result<f64> {
    check_alpha(alpha)?;
    let threshold = total_mass(alpha);
    if !(rho > 0.0) {
        return Err(Error::Input(format!("rho must be positive, got {rho}")));
    }
    if rho >= threshold {
        return Err(Error::Threshold { rho, threshold });
    }
    Ok((8.0 * rho / (threshold - rho)).sqrt())
}

/// Radius `R` with `mass_ball(1, alpha, R) = m`, the closed-form inverse of the model mass map.
pub fn radius_for_mass(m: f64, alpha: f64) -> f64 {
    let t = total_mass(alpha);
    if m <= 0.0 {
        return 0.0;
    }
    if m >= t {
        return f64::INFINITY;
    }
    (8.0 * m / (t - m)).powf(1.0 / (2.0 * (1.0 - alpha)))
}

/// Zero mode of the linearization around `U_{1,alpha}`.
pub fn psi_zero_mode(alpha: f64, r: f64) -> f64 {
    psi_scaled(1.0, alpha, r)
}

/// Zero mode of the linearization around `U_{lambda,alpha}`.
pub fn psi_scaled(lambda: f64, alpha: f64, r: f64) -> f64 {
    let q = lambda * lambda * r.powf(2.0 * (1.0 - alpha));
    (8.0 - q) / (8.0 + q)
}

fn check_alpha(alpha: f64) -> Result<()> {
    if !(0.0..1.0).contains(&alpha) {
        return Err(Error::Input(format!("alpha must lie in [0, 1), got {alpha}")));
    }
    Ok(())
}

/// Samples of a radial profile together with the closed form that produced them.
#[derive(Debug, Clone, Serialize)]
pub struct RadialProfile {
    pub alpha: f64,
    pub lambda: f64,
    /// Subtracted constant; `U(1)` for disk solutions.
    pub offset: f64,
    pub r_grid: Vec<f64>,
    pub values: Vec<f64>,
}

impl RadialProfile {
    pub fn new(lambda: f64, alpha: f64, offset: f64, r_grid: Vec<f64>) -> Self {
        let values = r_grid
            .iter()
            .map(|&r| u_lambda_alpha(lambda, alpha, r) - offset)
            .collect();
        Self { alpha, lambda, offset, r_grid, values }
    }

    pub fn eval(&self, r: f64) -> f64 {
        u_lambda_alpha(self.lambda, self.alpha, r) - self.offset
    }
}

/// Exact solution of the constrained problem on the unit disk with a single
/// atom of order `-alpha` at the origin, sampled on 201 uniform radii.
pub fn disk_solution_exact(rho: f64, alpha: f64) -> Result<RadialProfile> {
    let lambda = lambda_for_mass(rho, alpha)?;
    let grid = (0..=200).map(|i| i as f64 / 200.0).collect();
    Ok(RadialProfile::new(lambda, alpha, u_lambda_alpha(lambda, alpha, 1.0), grid))
}

/// Outer radius for [`kstar`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum Radius {
    Finite(f64),
    Infinite,
}

impl Radius {
    fn s_max(self, alpha: f64) -> f64 {
        match self {
            Radius::Infinite => 1.0,
            Radius::Finite(r) => {
                let tau = r.powf(2.0 * (1.0 - alpha)) / 8.0;
                tau / (1.0 + tau)
            }
        }
    }
}

fn r_of_s(s: f64, alpha: f64) -> f64 {
    if s >= 1.0 {
        return f64::INFINITY;
    }
    (8.0 * s / (1.0 - s)).powf(1.0 / (2.0 * (1.0 - alpha)))
}

/// Discrete constrained minimizer of the radial Rayleigh quotient.
#[derive(Debug, Clone, Serialize)]
pub struct RadialEigenSolve {
    pub alpha: f64,
    pub r0: Radius,
    pub kstar_value: f64,
    pub s_grid: Vec<f64>,
    pub r_grid: Vec<f64>,
    /// Minimizer normalized to unit weighted mass, positive at the origin.
    pub psi_star: Vec<f64>,
    /// Zero crossing of the minimizer.
    pub xi0: f64,
    pub sign_changes: usize,
    /// Weighted mean and weighted norm of the minimizer, for constraint checks.
    pub weighted_mean: f64,
    pub weighted_norm_sq: f64,
}

/// Vertex-centred finite differences for `-(s(1-s) psi')' = 2K psi` on `[0, s0]`
/// with natural boundary conditions; the constant is the null vector.
struct Pencil {
    ds: f64,
    /// Flux coefficients `s(1-s)` at cell midpoints.
    flux: Vec<f64>,
    /// Lumped mass.
    mass: Vec<f64>,
}

impl Pencil {
    fn new(s0: f64, n: usize) -> Self {
        let ds = s0 / n as f64;
        let flux = (0..n)
            .map(|i| {
                let s = (i as f64 + 0.5) * ds;
                s * (1.0 - s) / ds
            })
            .collect();
        let mut mass = vec![ds; n + 1];
        mass[0] = 0.5 * ds;
        mass[n] = 0.5 * ds;
        Self { ds, flux, mass }
    }

    fn len(&self) -> usize {
        self.mass.len()
    }

    /// Symmetrically scaled tridiagonal `M^{-1/2} A M^{-1/2}`.
    fn scaled(&self) -> (Vec<f64>, Vec<f64>) {
        let n = self.len();
        let mut diag = vec![0.0; n];
        let mut off = vec![0.0; n - 1];
        for (i, &c) in self.flux.iter().enumerate() {
            diag[i] += c;
            diag[i + 1] += c;
            off[i] = -c / (self.mass[i] * self.mass[i + 1]).sqrt();
        }
        for (d, m) in diag.iter_mut().zip(&self.mass) {
            *d /= m;
        }
        (diag, off)
    }
}

/// Number of eigenvalues of the symmetric tridiagonal matrix below `x`.
fn sturm_count(diag: &[f64], off: &[f64], x: f64) -> usize {
    let mut count = 0;
    let mut q = diag[0] - x;
    if q < 0.0 {
        count += 1;
    }
    for i in 1..diag.len() {
        let denom = if q == 0.0 { f64::EPSILON * (1.0 + x.abs()) } else { q };
        q = diag[i] - x - off[i - 1] * off[i - 1] / denom;
        if q < 0.0 {
            count += 1;
        }
    }
    count
}

fn kth_eigenvalue(diag: &[f64], off: &[f64], k: usize) -> f64 {
    let mut hi = diag
        .iter()
        .enumerate()
        .map(|(i, d)| {
            let l = if i > 0 { off[i - 1].abs() } else { 0.0 };
            let r = if i < off.len() { off[i].abs() } else { 0.0 };
            d + l + r
        })
        .fold(f64::MIN, f64::max);
    let mut lo = -1.0;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if sturm_count(diag, off, mid) > k {
            hi = mid;
        } else {
            lo = mid;
        }
        if hi - lo <= 4.0 * f64::EPSILON * hi.abs().max(1.0) {
            break;
        }
    }
    0.5 * (lo + hi)
}

/// Solves the tridiagonal system `(T - shift) y = b` by Gaussian elimination
/// with partial pivoting.
fn tridiag_solve(diag: &[f64], off: &[f64], shift: f64, b: &[f64]) -> Vec<f64> {
    let n = diag.len();
    // Rows carry up to three nonzeros after pivoting: columns i, i+1, i+2.
    let mut rows: Vec<[f64; 3]> = (0..n)
        .map(|i| {
            let sub = if i > 0 { off[i - 1] } else { 0.0 };
            let sup = if i + 1 < n { off[i] } else { 0.0 };
            [sub, diag[i] - shift, sup]
        })
        .collect();
    let mut rhs = b.to_vec();
    // u[i] holds row i of U as coefficients of columns i, i+1, i+2.
    let mut u = vec![[0.0; 3]; n];
    let mut cur = [rows[0][1], rows[0][2], 0.0];
    let mut cur_rhs = rhs[0];
    for i in 0..n {
        if i + 1 < n {
            let next = [rows[i + 1][0], rows[i + 1][1], rows[i + 1][2]];
            let mut next_rhs = rhs[i + 1];
            if next[0].abs() > cur[0].abs() {
                // swap: pivot row is `next`
                let pivot = next;
                let pivot_rhs = next_rhs;
                let f = cur[0] / pivot[0];
                let rest = [cur[1] - f * pivot[1], cur[2] - f * pivot[2]];
                u[i] = [pivot[0], pivot[1], pivot[2]];
                rhs[i] = pivot_rhs;
                next_rhs = cur_rhs - f * pivot_rhs;
                cur = [rest[0], rest[1], 0.0];
            } else {
                let piv = if cur[0] == 0.0 { f64::MIN_POSITIVE.sqrt() } else { cur[0] };
                let f = next[0] / piv;
                u[i] = [piv, cur[1], cur[2]];
                rhs[i] = cur_rhs;
                next_rhs -= f * cur_rhs;
                cur = [next[1] - f * cur[1], next[2] - f * cur[2], 0.0];
            }
            cur_rhs = next_rhs;
            rows[i + 1] = [0.0, 0.0, 0.0];
        } else {
            let piv = if cur[0] == 0.0 { f64::MIN_POSITIVE.sqrt() } else { cur[0] };
            u[i] = [piv, 0.0, 0.0];
            rhs[i] = cur_rhs;
        }
    }
    let mut x = vec![0.0; n];
    for i in (0..n).rev() {
        let mut acc = rhs[i];
        if i + 1 < n {
            acc -= u[i][1] * x[i + 1];
        }
        if i + 2 < n {
            acc -= u[i][2] * x[i + 2];
        }
        x[i] = acc / u[i][0];
    }
    x
}

/// Constrained radial minimization on `B_{R0}` (or the whole plane).
pub fn kstar(alpha: f64, r0: Radius, n_grid: usize) -> Result<RadialEigenSolve> {
    check_alpha(alpha)?;
    if n_grid < 200 {
        return Err(Error::Input(format!("n_grid must be at least 200, got {n_grid}")));
    }
    if let Radius::Finite(r) = r0 {
        let rc = critical_radius(alpha);
        if !(r > rc) {
            return Err(Error::Input(format!(
                "R0 = {r} must exceed the critical radius {rc}"
            )));
        }
    }
    let s0 = r0.s_max(alpha);
    let pencil = Pencil::new(s0, n_grid);
    let (diag, off) = pencil.scaled();
    // Index 0 is the constant null mode; the constrained minimum is the next one.
    let mu = kth_eigenvalue(&diag, &off, 1);

    // Inverse iteration with the null direction deflated.
    let n = pencil.len();
    let sqrt_m: Vec<f64> = pencil.mass.iter().map(|m| m.sqrt()).collect();
    let null_norm: f64 = sqrt_m.iter().map(|v| v * v).sum::<f64>().sqrt();
    let null: Vec<f64> = sqrt_m.iter().map(|v| v / null_norm).collect();
    let deflate = |y: &mut [f64]| {
        let d: f64 = y.iter().zip(&null).map(|(a, b)| a * b).sum();
        y.iter_mut().zip(&null).for_each(|(a, b)| *a -= d * b);
    };
    let mut y: Vec<f64> = (0..n).map(|i| 1.0 - 2.0 * i as f64 / (n - 1) as f64).collect();
    let shift = mu * (1.0 - 1e-10);
    for _ in 0..6 {
        deflate(&mut y);
        let norm = y.iter().map(|v| v * v).sum::<f64>().sqrt();
        y.iter_mut().for_each(|v| *v /= norm);
        y = tridiag_solve(&diag, &off, shift, &y);
    }
    deflate(&mut y);
    let mut psi: Vec<f64> = y.iter().zip(&sqrt_m).map(|(v, s)| v / s).collect();
    // Unit mass with respect to the full two-dimensional model density.
    let scale = 8.0 * PI * (1.0 - alpha);
    let norm_sq: f64 = psi.iter().zip(&pencil.mass).map(|(p, m)| p * p * m).sum::<f64>() * scale;
    let sign = if psi[0] < 0.0 { -1.0 } else { 1.0 };
    psi.iter_mut().for_each(|p| *p *= sign / norm_sq.sqrt());

    let s_grid: Vec<f64> = (0..n).map(|i| i as f64 * pencil.ds).collect();
    let r_grid: Vec<f64> = s_grid.iter().map(|&s| r_of_s(s, alpha)).collect();
    let mut sign_changes = 0;
    let mut xi0 = f64::NAN;
    for i in 0..n - 1 {
        if (psi[i] > 0.0) != (psi[i + 1] > 0.0) {
            sign_changes += 1;
            if xi0.is_nan() {
                let t = psi[i] / (psi[i] - psi[i + 1]);
                xi0 = r_of_s(s_grid[i] + t * pencil.ds, alpha);
            }
        }
    }
    let weighted_mean = psi.iter().zip(&pencil.mass).map(|(p, m)| p * m).sum::<f64>() * scale;
    let weighted_norm_sq =
        psi.iter().zip(&pencil.mass).map(|(p, m)| p * p * m).sum::<f64>() * scale;
    Ok(RadialEigenSolve {
        alpha,
        r0,
        kstar_value: 0.5 * mu,
        s_grid,
        r_grid,
        psi_star: psi,
        xi0,
        sign_changes,
        weighted_mean,
        weighted_norm_sq,
    })
}

/// Defect of the Wronskian identity between the minimizer and the zero mode.
#[derive(Debug, Clone, Serialize)]
pub struct WronskianReport {
    /// Maximum absolute defect over the midpoints of the grid.
    pub max_defect: f64,
    /// Defect at the origin, where both sides vanish.
    pub origin_defect: f64,
    /// Zero crossing of the minimizer and the zero mode's own crossing radius.
    pub xi0: f64,
    pub critical_radius: f64,
}

/// Evaluates `r (psi*' psi - psi* psi') = (1 - K*) int_0^r V psi* psi rho d rho`
/// along the grid. Both sides are written in `s` and multiplied by the
/// Jacobian factor `2 (1 - alpha)`.
pub fn wronskian_residual(solve: &RadialEigenSolve) -> WronskianReport {
    let alpha = solve.alpha;
    let s = &solve.s_grid;
    let p = &solve.psi_star;
    let n = s.len();
    let ds = s[1] - s[0];
    let jac = 2.0 * (1.0 - alpha);
    let psi = |s: f64| 1.0 - 2.0 * s;
    // running integral of psi* psi over the completed cells
    let mut completed = 0.0;
    let mut max_defect: f64 = 0.0;
    for i in 0..n - 1 {
        let sm = s[i] + 0.5 * ds;
        let pm = 0.5 * (p[i] + p[i + 1]);
        let dp = (p[i + 1] - p[i]) / ds;
        let lhs = jac * sm * (1.0 - sm) * (dp * psi(sm) + 2.0 * pm);
        let cell = ds * pm * psi(sm);
        let rhs = 2.0 * jac * (1.0 - solve.kstar_value) * (completed + 0.5 * cell);
        completed += cell;
        max_defect = max_defect.max((lhs - rhs).abs());
    }
    WronskianReport {
        max_defect,
        origin_defect: 0.0,
        xi0: solve.xi0,
        critical_radius: critical_radius(alpha),
    }
}
