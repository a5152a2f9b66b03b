//! Linearized eigenproblems `−Δφ = ν h e^w φ` (Dirichlet and constrained),
//! nodal domains and positivity certificates.

use std::collections::VecDeque;
use std::f64::consts::PI;

use serde::Serialize;

use crate::eigen::{subspace_iteration, EigenOptions};
use crate::error::{Error, Result};
use crate::fem::{add_scaled, dot, matvec, stiffness, weighted_mass, Cholesky, Dofs, SparseMatrix};
use crate::geometry::{SubdomainSlice, TriangleMesh};
use crate::meanfield::{MeanFieldProblem, MeanFieldSolution};
use crate::weights::SingularWeight;

/// Default shift-invert target on the `ν` scale.
pub const DEFAULT_SHIFT: f64 = 0.5;

/// Stiffness and `h e^w`-weighted mass over the interior nodes.
#[derive(Debug, Clone)]
pub struct LinearizedSystem {
    pub dofs: Dofs,
    pub stiffness: SparseMatrix,
    pub mass: SparseMatrix,
    /// `∫ h e^w φ_i` for interior hat functions.
    pub load: Vec<f64>,
    /// `∫ h e^w`.
    pub total_mass: f64,
    /// `α(Ω)`.
    pub alpha: f64,
}

pub fn assemble_linearized(mesh: &TriangleMesh, weight: &SingularWeight, w: &[f64]) -> Result<LinearizedSystem> {
    let dofs = Dofs::interior(mesh);
    let k = stiffness(mesh, &dofs)?;
    assemble_with_stiffness(mesh, weight, w, dofs, k)
}

fn assemble_with_stiffness(
    mesh: &TriangleMesh,
    weight: &SingularWeight,
    w: &[f64],
    dofs: Dofs,
    k: SparseMatrix,
) -> Result<LinearizedSystem> {
    if w.len() != mesh.n_nodes() || w.iter().any(|v| !v.is_finite()) {
        return Err(Error::Input("w must be finite at every node".into()));
    }
    let wm = weighted_mass(mesh, &dofs, weight, w, 0.0)?;
    Ok(LinearizedSystem {
        dofs,
        stiffness: k,
        mass: wm.matrix,
        load: wm.load,
        total_mass: wm.total,
        alpha: weight.measure.alpha_total(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ProblemKind {
    Dirichlet,
    Constrained,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EigenEntry {
    pub nu: f64,
    pub nu_hat: f64,
    pub nodal_domains: usize,
    /// Boundary constant (constrained problem only).
    pub c0: Option<f64>,
    pub residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EigenReport {
    pub problem: ProblemKind,
    pub mass: f64,
    pub alpha: f64,
    /// `[4π(1−α), 8π(1−α)]`.
    pub thresholds: [f64; 2],
    pub eigs: Vec<EigenEntry>,
    /// Nodal eigenfunctions, normalized in the weighted norm.
    #[serde(skip)]
    pub vectors: Vec<Vec<f64>>,
    pub shift: f64,
    pub iterations: usize,
}

impl EigenReport {
    pub fn nu_hat(&self, k: usize) -> f64 {
        self.eigs[k].nu_hat
    }
}

/// `[4π(1−α), 8π(1−α)]`.
pub fn thresholds(alpha: f64) -> [f64; 2] {
    [4.0 * PI * (1.0 - alpha), 8.0 * PI * (1.0 - alpha)]
}

/// Flips `v` so that its largest-magnitude entry is positive.
fn fix_sign(v: &mut [f64]) {
    let mut best = 0;
    for i in 0..v.len() {
        if v[i].abs() > v[best].abs() {
            best = i;
        }
    }
    if v.get(best).is_some_and(|x| *x < 0.0) {
        v.iter_mut().for_each(|x| *x = -*x);
    }
}

/// Factors `K − σM`, halving `σ` until the factorization succeeds.
fn shifted_factor(sys: &LinearizedSystem, start: f64) -> Result<(f64, Cholesky)> {
    let mut sigma = start;
    for _ in 0..40 {
        let a = add_scaled(&sys.stiffness, -sigma, &sys.mass)?;
        if let Ok(c) = Cholesky::new(&a) {
            return Ok((sigma, c));
        }
        sigma *= 0.5;
    }
    Ok((0.0, Cholesky::new(&sys.stiffness)?))
}

pub fn solve_dirichlet_eigs(
    mesh: &TriangleMesh,
    sys: &LinearizedSystem,
    k: usize,
    opts: EigenOptions,
) -> Result<EigenReport> {
    if k < 1 {
        return Err(Error::Input("at least one eigenpair must be requested".into()));
    }
    let (sigma, chol) = shifted_factor(sys, DEFAULT_SHIFT)?;
    let pairs = subspace_iteration(
        sys.dofs.len(),
        k,
        |x| matvec(&sys.stiffness, x),
        |x| matvec(&sys.mass, x),
        |y| Ok(chol.solve(y)),
        opts,
    )?;
    let mut vectors = Vec::with_capacity(k);
    let mut eigs = Vec::with_capacity(k);
    for (j, x) in pairs.vectors.iter().enumerate() {
        let mut phi = sys.dofs.extend(x, 0.0);
        fix_sign(&mut phi);
        eigs.push(EigenEntry {
            nu: pairs.values[j],
            nu_hat: pairs.values[j] - 1.0,
            nodal_domains: nodal_domains(mesh, &phi).count,
            c0: None,
            residual: pairs.residuals[j],
        });
        vectors.push(phi);
    }
    Ok(EigenReport {
        problem: ProblemKind::Dirichlet,
        mass: sys.total_mass,
        alpha: sys.alpha,
        thresholds: thresholds(sys.alpha),
        eigs,
        vectors,
        shift: sigma,
        iterations: pairs.iterations,
    })
}

/// Eigenpairs on `{φ : φ − c ∈ H¹₀, ∫ h e^w φ = 0}`. Writing `φ = φ₀ + c` with
/// `φ₀` interior and eliminating `c = −bᵀφ₀/m` gives `K φ₀ = ν (M − b bᵀ/m) φ₀`.
pub fn solve_constrained_eigs(
    mesh: &TriangleMesh,
    sys: &LinearizedSystem,
    k: usize,
    opts: EigenOptions,
) -> Result<EigenReport> {
    if k < 1 {
        return Err(Error::Input("at least one eigenpair must be requested".into()));
    }
    let b = &sys.load;
    let m = sys.total_mass;
    let (sigma, chol) = shifted_factor(sys, DEFAULT_SHIFT)?;
    let z = chol.solve(b);
    let denom = 1.0 + sigma / m * dot(b, &z);
    let apply_b = |x: &[f64]| {
        let mut y = matvec(&sys.mass, x);
        let s = dot(b, x) / m;
        y.iter_mut().zip(b).for_each(|(v, bi)| *v -= s * bi);
        y
    };
    let pairs = subspace_iteration(
        sys.dofs.len(),
        k,
        |x| matvec(&sys.stiffness, x),
        apply_b,
        |y| {
            let mut x = chol.solve(y);
            let s = sigma / m * dot(b, &x) / denom;
            x.iter_mut().zip(&z).for_each(|(v, zi)| *v -= s * zi);
            Ok(x)
        },
        opts,
    )?;
    let mut vectors = Vec::with_capacity(k);
    let mut eigs = Vec::with_capacity(k);
    for (j, x) in pairs.vectors.iter().enumerate() {
        let c0 = -dot(b, x) / m;
        let mut phi: Vec<f64> = sys.dofs.extend(x, 0.0).into_iter().map(|v| v + c0).collect();
        fix_sign(&mut phi);
        let c0 = phi[mesh.boundary_nodes[0]];
        eigs.push(EigenEntry {
            nu: pairs.values[j],
            nu_hat: pairs.values[j] - 1.0,
            nodal_domains: nodal_domains(mesh, &phi).count,
            c0: Some(c0),
            residual: pairs.residuals[j],
        });
        vectors.push(phi);
    }
    Ok(EigenReport {
        problem: ProblemKind::Constrained,
        mass: sys.total_mass,
        alpha: sys.alpha,
        thresholds: thresholds(sys.alpha),
        eigs,
        vectors,
        shift: sigma,
        iterations: pairs.iterations,
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct NodalDomains {
    pub count: usize,
    pub positive: usize,
    pub negative: usize,
    /// Component label of every triangle; `None` where `φ` vanishes identically.
    pub labels: Vec<Option<usize>>,
    /// Sign class of every triangle (`Some(true)` for positive).
    pub signs: Vec<Option<bool>>,
}

/// Nodal values below this fraction of `max |φ|` count as zero.
pub const NODAL_ZERO: f64 = 1e-10;

/// Sign class of each triangle by majority of its nonzero vertex signs, ties
/// counting as positive. Triangles on which `φ` vanishes have no class.
pub fn triangle_signs(mesh: &TriangleMesh, phi: &[f64]) -> Vec<Option<bool>> {
    let zero = NODAL_ZERO * phi.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    mesh.triangles
        .iter()
        .map(|tri| {
            let pos = tri.iter().filter(|&&i| phi[i] > zero).count();
            let neg = tri.iter().filter(|&&i| phi[i] < -zero).count();
            (pos + neg > 0).then_some(pos >= neg)
        })
        .collect()
}

/// Connected components (across shared edges) of same-sign triangles.
pub fn nodal_domains(mesh: &TriangleMesh, phi: &[f64]) -> NodalDomains {
    let signs = triangle_signs(mesh, phi);
    let nt = mesh.n_triangles();
    let mut labels: Vec<Option<usize>> = vec![None; nt];
    let (mut count, mut positive, mut negative) = (0, 0, 0);
    for start in 0..nt {
        let Some(sign) = signs[start] else { continue };
        if labels[start].is_some() {
            continue;
        }
        labels[start] = Some(count);
        let mut queue = VecDeque::from([start]);
        while let Some(t) = queue.pop_front() {
            for k in 0..3 {
                if let Some(nb) = mesh.neighbor(t, k) {
                    if labels[nb].is_none() && signs[nb] == Some(sign) {
                        labels[nb] = Some(count);
                        queue.push_back(nb);
                    }
                }
            }
        }
        if sign {
            positive += 1;
        } else {
            negative += 1;
        }
        count += 1;
    }
    NodalDomains { count, positive, negative, labels, signs }
}

/// Relative defect `|∫_ω |∇φ|² − (ν̂+1) ∫_ω h e^w φ²| / ∫_ω |∇φ|²` on a
/// slice of the mesh (for example a component of `{φ > 0}` or `{−φ > 0}`).
pub fn nodal_identity_check(
    mesh: &TriangleMesh,
    weight: &SingularWeight,
    w: &[f64],
    phi: &[f64],
    nu_hat: f64,
    domain: &SubdomainSlice,
) -> f64 {
    let mut energy = 0.0;
    for p in &domain.pieces {
        let g = mesh.gradients(p.tri);
        let tri = mesh.triangles[p.tri];
        let grad = g[0] * phi[tri[0]] + g[1] * phi[tri[1]] + g[2] * phi[tri[2]];
        energy += p.area() * grad.dot(grad);
    }
    let weighted = weight.integrate_slice(domain, |t, b| {
        let v = mesh.interpolate(phi, t, b);
        mesh.interpolate(w, t, b).exp() * v * v
    });
    (energy - (nu_hat + 1.0) * weighted).abs() / energy
}

/// Relative dual-norm residual `‖(K − M)ψ‖_{K⁻¹} / ‖ψ‖_K` of a candidate
/// zero mode `ψ` (nodal, vanishing on the boundary).
pub fn zero_mode_residual(sys: &LinearizedSystem, psi: &[f64]) -> Result<f64> {
    let x = sys.dofs.restrict(psi);
    let kx = matvec(&sys.stiffness, &x);
    let mx = matvec(&sys.mass, &x);
    let r: Vec<f64> = kx.iter().zip(&mx).map(|(a, b)| a - b).collect();
    let chol = Cholesky::new(&sys.stiffness)?;
    let num = dot(&r, &chol.solve(&r)).max(0.0).sqrt();
    Ok(num / dot(&x, &kx).sqrt())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BranchSpectrum {
    pub nu1_hat: f64,
    pub nu2_hat: f64,
    pub constrained_nu_hat: f64,
}

/// Lowest two Dirichlet and lowest constrained shifted eigenvalues at a solution.
pub fn branch_spectrum(problem: &MeanFieldProblem, sol: &MeanFieldSolution) -> Result<BranchSpectrum> {
    let w = sol.to_unconstrained();
    let sys = assemble_with_stiffness(
        problem.mesh,
        problem.weight,
        &w,
        problem.dofs.clone(),
        problem.stiffness().clone(),
    )?;
    let opts = EigenOptions::default();
    let d = solve_dirichlet_eigs(problem.mesh, &sys, 2, opts)?;
    let c = solve_constrained_eigs(problem.mesh, &sys, 1, opts)?;
    Ok(BranchSpectrum { nu1_hat: d.nu_hat(0), nu2_hat: d.nu_hat(1), constrained_nu_hat: c.nu_hat(0) })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PositivityCertificate {
    pub rho: f64,
    pub mass: f64,
    pub alpha: f64,
    pub thresholds: [f64; 2],
    pub dirichlet_nu_hat: [f64; 2],
    pub constrained_nu_hat: f64,
    /// `false` when the mass exceeds `8π(1−α)`; no sign is then claimed.
    pub in_scope: bool,
    /// Each predicted sign with its outcome.
    pub checks: Vec<(String, bool)>,
    pub pass: bool,
}

/// Checks the predicted signs: `ν̂₁ > margin` below `4π(1−α)`, and `ν̂₂ > margin`,
/// constrained `ν̂ > margin` up to `8π(1−α)`.
pub fn certify_spectrum(rho: f64, mass: f64, alpha: f64, spec: BranchSpectrum, margin: f64) -> PositivityCertificate {
    let th = thresholds(alpha);
    let in_scope = mass <= th[1];
    let mut checks = Vec::new();
    if in_scope {
        if mass < th[0] {
            checks.push(("dirichlet nu1_hat > 0".to_string(), spec.nu1_hat > margin));
        }
        checks.push(("dirichlet nu2_hat > 0".to_string(), spec.nu2_hat > margin));
        checks.push(("constrained nu_hat > 0".to_string(), spec.constrained_nu_hat > margin));
    }
    let pass = checks.iter().all(|c| c.1);
    PositivityCertificate {
        rho,
        mass,
        alpha,
        thresholds: th,
        dirichlet_nu_hat: [spec.nu1_hat, spec.nu2_hat],
        constrained_nu_hat: spec.constrained_nu_hat,
        in_scope,
        checks,
        pass,
    }
}

pub fn positivity_certificate(
    problem: &MeanFieldProblem,
    sol: &MeanFieldSolution,
    margin: f64,
) -> Result<PositivityCertificate> {
    let spec = branch_spectrum(problem, sol)?;
    let alpha = problem.weight.measure.alpha_total();
    Ok(certify_spectrum(sol.rho, sol.rho, alpha, spec, margin))
}
