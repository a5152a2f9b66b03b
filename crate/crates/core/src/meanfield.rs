//! Damped Newton solver for `Δu + ρ h e^u / ∫ h e^u = 0`, `u = 0` on the boundary,
//! branch continuation in `ρ` and uniqueness diagnostics.

use std::f64::consts::PI;
use std::sync::OnceLock;

use faer::sparse::linalg::solvers::SymbolicLu;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::fem::{add_scaled, dot, matvec, stiffness, weighted_mass, Cholesky, Dofs, LuSolver, SparseMatrix, WeightedMass};
use crate::geometry::{PlanarDomain, Point, TriangleMesh};
use crate::spectral;
use crate::weights::SingularWeight;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NewtonOptions {
    /// Stop when the residual's dual norm `sqrt(Rᵀ K⁻¹ R)` falls below this.
    pub tol: f64,
    pub max_iter: usize,
    pub max_halvings: usize,
    /// Extra full steps taken after convergence while they keep reducing the residual.
    pub polish: usize,
}

impl Default for NewtonOptions {
    fn default() -> Self {
        Self { tol: 1e-10, max_iter: 50, max_halvings: 30, polish: 3 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MeanFieldSolution {
    pub rho: f64,
    /// Nodal values, zero on the boundary.
    pub u: Vec<f64>,
    /// `∫ h e^u`.
    pub mass_integral: f64,
    pub residual_norm: f64,
    pub tol: f64,
    pub iterations: usize,
}

impl MeanFieldSolution {
    /// `w = u + log ρ − log ∫ h e^u`, which solves `Δw + h e^w = 0` with `∫ h e^w = ρ`.
    pub fn to_unconstrained(&self) -> Vec<f64> {
        let c = self.rho.ln() - self.mass_integral.ln();
        self.u.iter().map(|v| v + c).collect()
    }

    pub fn max_u(&self) -> f64 {
        self.u.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn sup_norm(&self) -> f64 {
        self.u.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

/// Free-standing wrapper of [`to_unconstrained`](MeanFieldSolution::to_unconstrained).
pub fn to_unconstrained(sol: &MeanFieldSolution) -> Vec<f64> {
    sol.to_unconstrained()
}

/// Mesh, weight and the factorizations shared by all solves on them.
pub struct MeanFieldProblem<'a> {
    pub mesh: &'a TriangleMesh,
    pub weight: &'a SingularWeight,
    pub dofs: Dofs,
    k: SparseMatrix,
    k_chol: Cholesky,
    lu_symbolic: OnceLock<SymbolicLu<usize>>,
}

const REFINEMENT_STEPS: usize = 2;

struct Residual {
    r: Vec<f64>,
    norm: f64,
    mass: WeightedMass,
}

impl<'a> MeanFieldProblem<'a> {
    pub fn new(mesh: &'a TriangleMesh, weight: &'a SingularWeight) -> Result<Self> {
        let dofs = Dofs::interior(mesh);
        if dofs.is_empty() {
            return Err(Error::TooCoarse("mesh has no interior nodes".into()));
        }
        let k = stiffness(mesh, &dofs)?;
        let k_chol = Cholesky::new(&k)?;
        Ok(Self { mesh, weight, dofs, k, k_chol, lu_symbolic: OnceLock::new() })
    }

    pub fn stiffness(&self) -> &SparseMatrix {
        &self.k
    }

    pub fn stiffness_solve(&self, b: &[f64]) -> Vec<f64> {
        self.k_chol.solve(b)
    }

    /// Dual norm `sqrt(rᵀ K⁻¹ r)` of a residual over the free nodes.
    pub fn dual_norm(&self, r: &[f64]) -> f64 {
        dot(r, &self.k_chol.solve(r)).max(0.0).sqrt()
    }

    fn residual(&self, u: &[f64], rho: f64) -> Result<Residual> {
        let nodal = self.dofs.extend(u, 0.0);
        let shift = nodal.iter().copied().fold(0.0, f64::max);
        let mass = weighted_mass(self.mesh, &self.dofs, self.weight, &nodal, shift)?;
        let ku = matvec(&self.k, u);
        let c = rho / mass.total;
        let r: Vec<f64> = ku.iter().zip(&mass.load).map(|(a, b)| a - c * b).collect();
        let norm = self.dual_norm(&r);
        if !norm.is_finite() {
            return Err(Error::Assembly { triangle: 0, what: "non-finite residual".into() });
        }
        Ok(Residual { r, norm, mass })
    }

    /// Newton direction for the constrained Jacobian `A + (ρ/m²) b bᵀ` with
    /// `A = K − (ρ/m) M`: sparse LU of `A`, Sherman–Morrison for the rank-one
    /// term, then iterative refinement against the full Jacobian since `A` is
    /// nearly singular close to the first threshold.
    fn newton_step(&self, res: &Residual, rho: f64) -> Result<Vec<f64>> {
        let m = &res.mass;
        let c = rho / m.total;
        let s = c / m.total;
        let a = add_scaled(&self.k, -c, &m.matrix)?;
        let sym = match self.lu_symbolic.get() {
            Some(sym) => sym.clone(),
            None => {
                let sym = LuSolver::symbolic(&a)?;
                let _ = self.lu_symbolic.set(sym.clone());
                sym
            }
        };
        let lu = LuSolver::new(sym, &a)?;
        let b = &m.load;
        let z = lu.solve(b)?;
        let denom = 1.0 + s * dot(b, &z);
        if !denom.is_finite() || denom == 0.0 {
            return Err(Error::LinearAlgebra("singular rank-one update in Newton step".into()));
        }
        let solve = |rhs: &[f64]| -> Result<Vec<f64>> {
            let mut y = lu.solve(rhs)?;
            let f = s * dot(b, &y) / denom;
            y.iter_mut().zip(&z).for_each(|(v, zi)| *v -= f * zi);
            Ok(y)
        };
        let rhs: Vec<f64> = res.r.iter().map(|v| -v).collect();
        let mut x = solve(&rhs)?;
        for _ in 0..REFINEMENT_STEPS {
            let ax = matvec(&a, &x);
            let f = s * dot(b, &x);
            let e: Vec<f64> = rhs.iter().zip(&ax).zip(b).map(|((r, v), bi)| r - v - f * bi).collect();
            let dx = solve(&e)?;
            x.iter_mut().zip(&dx).for_each(|(v, d)| *v += d);
        }
        Ok(x)
    }

    /// Solves for `u` at parameter `rho` starting from the nodal field `initial`.
    pub fn solve(&self, rho: f64, initial: &[f64], opts: NewtonOptions) -> Result<MeanFieldSolution> {
        if !(rho > 0.0) || !rho.is_finite() {
            return Err(Error::Input(format!("rho must be positive, got {rho}")));
        }
        if !(opts.tol > 0.0) {
            return Err(Error::Input(format!("tolerance must be positive, got {}", opts.tol)));
        }
        if initial.len() != self.mesh.n_nodes() || initial.iter().any(|v| !v.is_finite()) {
            return Err(Error::Input("initial field must be finite at every node".into()));
        }
        let mut u = self.dofs.restrict(initial);
        let mut res = self.residual(&u, rho)?;
        let mut iterations = 0;
        let fail = |u: &[f64], it: usize, r: f64| Error::NonConvergence {
            iterations: it,
            residual: r,
            last_iterate: self.dofs.extend(u, 0.0),
        };
        while res.norm >= opts.tol {
            if iterations >= opts.max_iter {
                return Err(fail(&u, iterations, res.norm));
            }
            iterations += 1;
            let delta = self.newton_step(&res, rho).map_err(|_| fail(&u, iterations, res.norm))?;
            let mut theta = 1.0;
            let mut accepted = None;
            for _ in 0..=opts.max_halvings {
                let trial: Vec<f64> = u.iter().zip(&delta).map(|(a, d)| a + theta * d).collect();
                if let Ok(tr) = self.residual(&trial, rho) {
                    if tr.norm < (1.0 - 1e-4 * theta) * res.norm {
                        accepted = Some((trial, tr));
                        break;
                    }
                }
                theta *= 0.5;
            }
            match accepted {
                Some((trial, tr)) => {
                    u = trial;
                    res = tr;
                }
                None => return Err(fail(&u, iterations, res.norm)),
            }
        }
        for _ in 0..opts.polish {
            let Ok(delta) = self.newton_step(&res, rho) else { break };
            let trial: Vec<f64> = u.iter().zip(&delta).map(|(a, d)| a + d).collect();
            match self.residual(&trial, rho) {
                Ok(tr) if tr.norm < 0.5 * res.norm => {
                    u = trial;
                    res = tr;
                    iterations += 1;
                }
                _ => break,
            }
        }
        let mass_integral = res.mass.total * res.mass.shift.exp();
        Ok(MeanFieldSolution {
            rho,
            u: self.dofs.extend(&u, 0.0),
            mass_integral,
            residual_norm: res.norm,
            tol: opts.tol,
            iterations,
        })
    }
}

/// One-shot solve on a fresh problem.
pub fn solve_mean_field(
    mesh: &TriangleMesh,
    weight: &SingularWeight,
    rho: f64,
    initial: &[f64],
    tol: f64,
) -> Result<MeanFieldSolution> {
    MeanFieldProblem::new(mesh, weight)?.solve(rho, initial, NewtonOptions { tol, ..Default::default() })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BranchSample {
    pub rho: f64,
    pub solution: MeanFieldSolution,
    /// Lowest two shifted Dirichlet eigenvalues.
    pub nu1_hat: f64,
    pub nu2_hat: f64,
    /// Smallest shifted eigenvalue of the constrained problem.
    pub constrained_nu_hat: f64,
    pub newton_iterations: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SolutionBranch {
    pub samples: Vec<BranchSample>,
    pub alpha: f64,
    /// `8π(1−α)`.
    pub threshold: f64,
    pub rho_max: f64,
    /// Accepted step sizes in order.
    pub steps: Vec<f64>,
    pub warnings: Vec<String>,
    /// Reason the branch stopped before `rho_max`, if it did.
    pub truncated: Option<String>,
}

/// Target parameters: decades `1e-3, 1e-2, 1e-1` below 1, then `n_steps` uniform steps up to `rho_max`.
pub fn rho_grid(rho_max: f64, n_steps: usize) -> Vec<f64> {
    let n = n_steps.max(1);
    if rho_max <= 1.0 {
        let lo = 1e-3 * rho_max;
        return (0..=n).map(|k| lo * (rho_max / lo).powf(k as f64 / n as f64)).collect();
    }
    let mut grid = vec![1e-3, 1e-2, 1e-1];
    grid.extend((0..=n).map(|k| 1.0 + (rho_max - 1.0) * k as f64 / n as f64));
    grid
}

/// Continues the solution from `u ≡ 0` along [`rho_grid`], halving steps on Newton failure.
pub fn continue_branch(
    problem: &MeanFieldProblem,
    rho_max: f64,
    n_steps: usize,
    opts: NewtonOptions,
) -> Result<SolutionBranch> {
    if n_steps < 2 {
        return Err(Error::Input(format!("n_steps must be at least 2, got {n_steps}")));
    }
    if !(rho_max > 0.0) {
        return Err(Error::Input(format!("rho_max must be positive, got {rho_max}")));
    }
    let alpha = problem.weight.measure.alpha_total();
    let threshold = 8.0 * PI * (1.0 - alpha);
    let mut warnings = Vec::new();
    let mut rho_max = rho_max;
    if rho_max > threshold {
        warnings.push(format!("rho_max {rho_max} exceeds 8π(1−α) = {threshold}; clamped"));
        rho_max = threshold;
    }
    let grid = rho_grid(rho_max, n_steps);
    continue_on_grid(problem, &grid, opts, alpha, threshold, warnings)
}

/// Continuation through an explicit increasing list of target parameters.
pub fn continue_on_grid(
    problem: &MeanFieldProblem,
    grid: &[f64],
    opts: NewtonOptions,
    alpha: f64,
    threshold: f64,
    warnings: Vec<String>,
) -> Result<SolutionBranch> {
    let rho_max = grid.last().copied().unwrap_or(0.0);
    let min_step = rho_max * 1e-6;
    let mut samples: Vec<BranchSample> = Vec::new();
    let mut steps = Vec::new();
    let mut truncated = None;
    let mut current = vec![0.0; problem.mesh.n_nodes()];
    let mut rho_now = 0.0;
    'targets: for &target in grid {
        while rho_now < target {
            let mut step = target - rho_now;
            let sol = loop {
                let rho = if step == target - rho_now { target } else { rho_now + step };
                match problem.solve(rho, &current, opts) {
                    Ok(s) => break s,
                    Err(Error::NonConvergence { .. }) | Err(Error::LinearAlgebra(_)) => {
                        step *= 0.5;
                        if step < min_step {
                            truncated = Some(format!(
                                "step underflow at rho = {rho_now}: step {step} below {min_step}"
                            ));
                            break 'targets;
                        }
                    }
                    Err(e) => return Err(e),
                }
            };
            let spec = spectral::branch_spectrum(problem, &sol)?;
            steps.push(sol.rho - rho_now);
            rho_now = sol.rho;
            current = sol.u.clone();
            samples.push(BranchSample {
                rho: sol.rho,
                newton_iterations: sol.iterations,
                nu1_hat: spec.nu1_hat,
                nu2_hat: spec.nu2_hat,
                constrained_nu_hat: spec.constrained_nu_hat,
                solution: sol,
            });
        }
    }
    Ok(SolutionBranch { samples, alpha, threshold, rho_max, steps, warnings, truncated })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct UniformBoundReport {
    /// `max ‖u_ρ‖_∞ / ρ` over the samples.
    pub c: f64,
    pub ratios: Vec<f64>,
    /// Whether every sample satisfies `ρ <= 8π(1−α) − eps`.
    pub precondition_ok: bool,
    pub bounded: bool,
}

pub fn uniform_bound_check(branch: &SolutionBranch, eps: f64) -> UniformBoundReport {
    let limit = branch.threshold - eps;
    let precondition_ok = eps > 0.0 && branch.samples.iter().all(|s| s.rho <= limit);
    let ratios: Vec<f64> = branch.samples.iter().map(|s| s.solution.sup_norm() / s.rho).collect();
    let c = ratios.iter().copied().fold(0.0, f64::max);
    UniformBoundReport { c, bounded: c.is_finite() && !ratios.is_empty(), ratios, precondition_ok }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct UniquenessReport {
    pub rho: f64,
    pub n_starts: usize,
    pub seed: u64,
    pub converged: usize,
    /// Converged iterates rejected by [`max_patch_fraction`].
    pub unresolved: usize,
    pub failures: usize,
    /// Pairwise sup-norm distances between converged solutions (upper triangle, row-major).
    pub distances: Vec<f64>,
    pub max_distance: f64,
    /// Number of clusters at radius `10·tol`.
    pub clusters: usize,
    pub cluster_radius: f64,
    pub max_u: Vec<Option<f64>>,
    pub max_patch_fraction: Vec<Option<f64>>,
}

/// Seeded initial field: three Gaussian bumps with centers in the domain,
/// widths in `[0.1, 0.5]·diam` and amplitudes in `[−5, 5]`, zeroed on the boundary.
pub fn random_initial(mesh: &TriangleMesh, domain: &PlanarDomain, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let (lo, hi) = domain.bounding_box();
    let diam = domain.diameter();
    let bumps: Vec<(Point, f64, f64)> = (0..3)
        .map(|_| {
            let c = loop {
                let p = Point::new(rng.random_range(lo.x..hi.x), rng.random_range(lo.y..hi.y));
                if domain.contains(p) {
                    break p;
                }
            };
            let width = rng.random_range(0.1..0.5) * diam;
            let amp = rng.random_range(-5.0..5.0);
            (c, width, amp)
        })
        .collect();
    mesh.nodes
        .iter()
        .enumerate()
        .map(|(i, x)| {
            if mesh.is_boundary(i) {
                return 0.0;
            }
            bumps
                .iter()
                .map(|(c, w, a)| a * (-x.dist(*c).powi(2) / (2.0 * w * w)).exp())
                .sum()
        })
        .collect()
}

pub fn multistart_uniqueness(
    problem: &MeanFieldProblem,
    domain: &PlanarDomain,
    rho: f64,
    n_starts: usize,
    seed: u64,
    opts: NewtonOptions,
) -> Result<UniquenessReport> {
    if n_starts < 2 {
        return Err(Error::Input(format!("n_starts must be at least 2, got {n_starts}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let starts: Vec<Vec<f64>> = (0..n_starts).map(|_| random_initial(problem.mesh, domain, &mut rng)).collect();
    let results: Vec<Option<MeanFieldSolution>> =
        starts.par_iter().map(|s| problem.solve(rho, s, opts).ok()).collect();
    // Newton can land on discrete solutions that put almost all the mass next to
    // a single node; no continuous solution looks like that at this resolution.
    let fractions: Vec<Option<f64>> = results
        .iter()
        .map(|r| r.as_ref().map(|s| max_patch_fraction(problem.mesh, problem.weight, &s.u)))
        .collect();
    let unresolved = fractions.iter().flatten().filter(|&&f| f > UNRESOLVED_FRACTION).count();
    let sols: Vec<&MeanFieldSolution> = results
        .iter()
        .zip(&fractions)
        .filter(|(_, f)| f.is_some_and(|f| f <= UNRESOLVED_FRACTION))
        .filter_map(|(r, _)| r.as_ref())
        .collect();
    let mut distances = Vec::new();
    for i in 0..sols.len() {
        for j in i + 1..sols.len() {
            let d = sols[i].u.iter().zip(&sols[j].u).fold(0.0, |m: f64, (a, b)| m.max((a - b).abs()));
            distances.push(d);
        }
    }
    let radius = 10.0 * opts.tol;
    let mut reps: Vec<&MeanFieldSolution> = Vec::new();
    for s in &sols {
        let near = reps.iter().any(|r| {
            r.u.iter().zip(&s.u).all(|(a, b)| (a - b).abs() <= radius)
        });
        if !near {
            reps.push(s);
        }
    }
    Ok(UniquenessReport {
        rho,
        n_starts,
        seed,
        converged: sols.len(),
        unresolved,
        failures: n_starts - sols.len() - unresolved,
        max_distance: distances.iter().copied().fold(0.0, f64::max),
        distances,
        clusters: reps.len(),
        cluster_radius: radius,
        max_u: results.iter().map(|r| r.as_ref().map(|s| s.max_u())).collect(),
        max_patch_fraction: fractions,
    })
}

/// Share of `∫ h e^u` carried by the triangles around one node above which a
/// converged iterate is reported as unresolved instead of as a solution.
pub const UNRESOLVED_FRACTION: f64 = 0.5;

/// Largest share of `∫ h e^u` carried by the triangles sharing one node.
pub fn max_patch_fraction(mesh: &TriangleMesh, weight: &SingularWeight, u: &[f64]) -> f64 {
    let table = weight.quadrature();
    let values: Vec<f64> =
        (0..mesh.n_triangles()).flat_map(|t| table.range(t).map(move |q| mesh.interpolate(u, t, table.bary[q]))).collect();
    let top = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let cells: Vec<f64> = (0..mesh.n_triangles())
        .map(|t| table.range(t).map(|q| table.weight[q] * (values[q] - top).exp()).sum())
        .collect();
    let mut patches = vec![0.0; mesh.n_nodes()];
    for (t, c) in cells.iter().enumerate() {
        for &v in &mesh.triangles[t] {
            patches[v] += c;
        }
    }
    let total: f64 = cells.iter().sum();
    patches.iter().copied().fold(0.0, f64::max) / total
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::build_mesh;
    use crate::radial::disk_solution_exact;
    use crate::weights::{build_weight, AtomicMeasure};

    #[test]
    fn tiny_rho_gives_tiny_solution() {
        let d = PlanarDomain::unit_disk();
        let m = build_mesh(&d, 0.1, &[]).unwrap();
        let w = build_weight(&m, &d, AtomicMeasure::empty(), None).unwrap();
        let s = solve_mean_field(&m, &w, 1e-6, &vec![0.0; m.n_nodes()], 1e-12).unwrap();
        assert!(s.sup_norm() < 1e-5);
        let wf = s.to_unconstrained();
        let mass = w.integrate(|t, b| m.interpolate(&wf, t, b).exp());
        assert!((mass - 1e-6).abs() / 1e-6 < 1e-10);
    }

    #[test]
    fn disk_matches_closed_form() {
        let d = PlanarDomain::unit_disk();
        let m = build_mesh(&d, 0.04, &[]).unwrap();
        let w = build_weight(&m, &d, AtomicMeasure::empty(), None).unwrap();
        let rho = 4.0 * PI;
        let s = solve_mean_field(&m, &w, rho, &vec![0.0; m.n_nodes()], 1e-10).unwrap();
        let exact = disk_solution_exact(rho, 0.0).unwrap();
        let peak = exact.eval(0.0);
        let err = m.nodes.iter().zip(&s.u).fold(0.0f64, |e, (x, u)| e.max((u - exact.eval(x.norm())).abs()));
        assert!(err / peak < 2e-2, "{err}");
        assert!((peak - 2.0 * 2f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn rejects_nonpositive_rho() {
        let d = PlanarDomain::unit_disk();
        let m = build_mesh(&d, 0.2, &[]).unwrap();
        let w = build_weight(&m, &d, AtomicMeasure::empty(), None).unwrap();
        let r = solve_mean_field(&m, &w, 0.0, &vec![0.0; m.n_nodes()], 1e-10);
        assert!(matches!(r, Err(Error::Input(_))));
    }

    #[test]
    fn patch_fraction_flags_single_node_spikes() {
        let d = PlanarDomain::unit_disk();
        let m = build_mesh(&d, 0.1, &[]).unwrap();
        let w = build_weight(&m, &d, AtomicMeasure::empty(), None).unwrap();
        let flat = max_patch_fraction(&m, &w, &vec![0.0; m.n_nodes()]);
        assert!(flat < 0.02, "{flat}");
        let mut spike = vec![0.0; m.n_nodes()];
        let center = (0..m.n_nodes()).min_by(|&a, &b| m.nodes[a].norm().total_cmp(&m.nodes[b].norm())).unwrap();
        spike[center] = 1e5;
        assert!(max_patch_fraction(&m, &w, &spike) > UNRESOLVED_FRACTION);
    }

    #[test]
    fn grid_is_increasing() {
        let g = rho_grid(20.0, 10);
        assert!(g.windows(2).all(|p| p[0] < p[1]));
        assert_eq!(*g.last().unwrap(), 20.0);
    }
}
