//! Isoperimetric certificates on subdomains and superlevel sets of a solution,
//! the decreasing rearrangement profile and the sup-norm estimate.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::fem::harmonic_extension;
use crate::geometry::{boundary_integral, extract_level_set, SliceMesh, SubdomainSlice, TriangleMesh};
use crate::meanfield::MeanFieldSolution;
use crate::radial::{mass_ball, radius_for_mass};
use crate::weights::{alpha_of, SingularWeight};

/// Default relative tolerance of the certificates.
pub const DEFAULT_TOL: f64 = 5e-3;

/// Minimum number of parent triangles touched by a slice before a lift is attempted.
const MIN_PIECES: usize = 10;

/// Harmonic lift of `w` on a slice: `g` harmonic with `g = w` on the slice
/// boundary and `η = w − g`, both at the nodes of the slice triangulation.
#[derive(Debug, Clone)]
pub struct HarmonicLift {
    pub mesh: SliceMesh,
    pub w: Vec<f64>,
    pub g: Vec<f64>,
    pub eta: Vec<f64>,
}

pub fn harmonic_lift(slice: &SubdomainSlice, w: &[f64]) -> Result<HarmonicLift> {
    if slice.pieces.len() < MIN_PIECES {
        return Err(Error::TooCoarse(format!(
            "slice covers {} triangles, at least {MIN_PIECES} required",
            slice.pieces.len()
        )));
    }
    if w.iter().any(|v| !v.is_finite()) {
        return Err(Error::Input("w must be finite".into()));
    }
    let mesh = slice.mesh()?;
    let ws = mesh.restrict(slice.parent, w);
    let g = harmonic_extension(&mesh.mesh, mesh.mesh.boundary_mask(), &ws)?;
    let eta = ws.iter().zip(&g).map(|(a, b)| a - b).collect();
    Ok(HarmonicLift { mesh, w: ws, g, eta })
}

/// Solves `Σ λ_k c_k = b` for the barycentric coordinates `λ` of `b` relative to corners `c`.
fn local_bary(c: &[[f64; 3]; 3], b: [f64; 3]) -> [f64; 3] {
    // Two of the three coordinates suffice since both sides sum to one.
    let (a11, a12, a13) = (c[0][0], c[1][0], c[2][0]);
    let (a21, a22, a23) = (c[0][1], c[1][1], c[2][1]);
    let m11 = a11 - a13;
    let m12 = a12 - a13;
    let m21 = a21 - a23;
    let m22 = a22 - a23;
    let r1 = b[0] - a13;
    let r2 = b[1] - a23;
    let det = m11 * m22 - m12 * m21;
    if det.abs() > 1e-14 {
        let l0 = (r1 * m22 - m12 * r2) / det;
        let l1 = (m11 * r2 - r1 * m21) / det;
        return [l0, l1, 1.0 - l0 - l1];
    }
    // Fall back to another pair of coordinate rows.
    let (a31, a32, a33) = (c[0][2], c[1][2], c[2][2]);
    let m11 = a21 - a23;
    let m12 = a22 - a23;
    let m21 = a31 - a33;
    let m22 = a32 - a33;
    let r1 = b[1] - a23;
    let r2 = b[2] - a33;
    let det = m11 * m22 - m12 * m21;
    let l0 = (r1 * m22 - m12 * r2) / det;
    let l1 = (m11 * r2 - r1 * m21) / det;
    [l0, l1, 1.0 - l0 - l1]
}

fn unit_corners(c: &[[f64; 3]; 3]) -> Option<[usize; 3]> {
    let mut perm = [0; 3];
    for (k, row) in c.iter().enumerate() {
        let j = row.iter().position(|&v| v == 1.0)?;
        if row.iter().filter(|&&v| v == 0.0).count() != 2 {
            return None;
        }
        perm[k] = j;
    }
    Some(perm)
}

/// `∫ h f` over (part of) a slice triangulation. `f` receives the slice
/// triangle and local barycentric coordinates. `part` lists sub-triangles as
/// slice triangle plus local corner coordinates.
fn integrate_on_slice_mesh(
    weight: &SingularWeight,
    parent: &TriangleMesh,
    sm: &SliceMesh,
    part: &[(usize, [[f64; 3]; 3])],
    f: impl Fn(usize, [f64; 3]) -> f64,
) -> f64 {
    let table = weight.quadrature();
    let mut total = 0.0;
    for (st, local) in part {
        let corners = local.map(|b| sm.to_parent(*st, b));
        let pt = sm.parent_tri[*st];
        let whole_local = unit_corners(local).is_some();
        match (whole_local, unit_corners(&corners)) {
            (true, Some(perm)) => {
                // A full parent triangle: reuse its precomputed rule.
                for q in table.range(pt) {
                    let b = table.bary[q];
                    let lb = [b[perm[0]], b[perm[1]], b[perm[2]]];
                    let lb = local_bary(local, lb);
                    total += table.weight[q] * f(*st, lb);
                }
            }
            _ => {
                let full = sm.parent_bary[*st];
                for (b, wq) in weight.sub_rule(parent, pt, corners) {
                    total += wq * f(*st, local_bary(&full, b));
                }
            }
        }
    }
    total
}

fn whole(sm: &SliceMesh) -> Vec<(usize, [[f64; 3]; 3])> {
    (0..sm.mesh.n_triangles())
        .map(|t| (t, [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]]))
        .collect()
}

/// Decreasing rearrangement data of `η` against the density `h e^g`, sampled
/// at levels `τ_k` of `η` and ordered by increasing mass coordinate `s`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RearrangementProfile {
    pub alpha: f64,
    /// Levels of `η`, decreasing (so that `s` increases).
    pub t_grid: Vec<f64>,
    /// `μ(τ) = ∫_{η>τ} h e^g`.
    pub mu: Vec<f64>,
    /// Mass coordinate, equal to `mu`.
    pub s_grid: Vec<f64>,
    /// `η*(s)`, equal to the level.
    pub eta_star: Vec<f64>,
    /// `F(s) = ∫_{η>τ} h e^w`.
    pub f: Vec<f64>,
    /// `F′(s) = e^{η*(s)}`.
    pub f_prime: Vec<f64>,
    pub p: Vec<f64>,
    /// `J(s)`; the entry at `s = 0` holds the limit `1/F′(0)`.
    pub j: Vec<f64>,
    /// `∫_ω h e^w` over the whole slice.
    pub total_mass: f64,
}

/// Computes the profile on `n_levels + 1` levels of `η` from its maximum down
/// to below its minimum (the last level covers the whole slice).
pub fn rearrangement_profile(
    weight: &SingularWeight,
    slice: &SubdomainSlice,
    lift: &HarmonicLift,
    n_levels: usize,
) -> Result<RearrangementProfile> {
    if n_levels < 2 {
        return Err(Error::Input(format!("at least two profile levels required, got {n_levels}")));
    }
    let alpha = alpha_of(slice, weight);
    let sm = &lift.mesh;
    let parent = slice.parent;
    let eta = &lift.eta;
    let emax = eta.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let emin = eta.iter().copied().fold(f64::INFINITY, f64::min).min(0.0);
    let all = whole(sm);
    let eval = |field: &[f64], t: usize, b: [f64; 3]| {
        let tri = sm.mesh.triangles[t];
        b[0] * field[tri[0]] + b[1] * field[tri[1]] + b[2] * field[tri[2]]
    };
    let levels: Vec<f64> = (0..=n_levels)
        .map(|k| emax - (emax - emin) * k as f64 / n_levels as f64)
        .collect();
    let rows: Vec<(f64, f64)> = levels
        .par_iter()
        .enumerate()
        .map(|(k, &tau)| {
            let part: Vec<(usize, [[f64; 3]; 3])> = if k == 0 {
                Vec::new()
            } else if k == n_levels {
                all.clone()
            } else {
                extract_level_set(&sm.mesh, eta, tau)
                    .iter()
                    .flat_map(|c| c.sub_triangles())
                    .collect()
            };
            let s = integrate_on_slice_mesh(weight, parent, sm, &part, |t, b| eval(&lift.g, t, b).exp());
            let f = integrate_on_slice_mesh(weight, parent, sm, &part, |t, b| eval(&lift.w, t, b).exp());
            (s, f)
        })
        .collect();
    let c = 4.0 * PI * (1.0 - alpha);
    let mut out = RearrangementProfile {
        alpha,
        t_grid: levels.clone(),
        mu: Vec::new(),
        s_grid: Vec::new(),
        eta_star: levels.clone(),
        f: Vec::new(),
        f_prime: Vec::new(),
        p: Vec::new(),
        j: Vec::new(),
        total_mass: rows[n_levels].1,
    };
    for (k, &(s, f)) in rows.iter().enumerate() {
        // Past the minimum of η, η* is no longer defined by a level; use 0.
        let tau = levels[k].max(0.0).min(emax);
        let fp = tau.exp();
        out.mu.push(s);
        out.s_grid.push(s);
        out.f.push(f);
        out.f_prime.push(fp);
        out.p.push(c * (s * fp - f) + 0.5 * f * f);
        out.j.push(if s > 0.0 && f > 0.0 { s * (1.0 / f - 1.0 / (2.0 * c)) } else { (-emax).exp() });
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MonotonicityReport {
    /// Smallest forward difference of `P` (expected `≥ 0`).
    pub min_p_slope: f64,
    /// Largest forward difference of `J` (expected `≤ 0`).
    pub max_j_slope: f64,
    /// Largest single decrease of `P` and largest single increase of `J`.
    pub p_violation: f64,
    pub j_violation: f64,
    pub max_abs_p: f64,
    pub max_abs_j: f64,
    pub min_p: f64,
    /// `4π(1−α) M`, the size of the individual terms of `P`.
    pub term_scale: f64,
    /// `max |P| ≤ tol · term_scale`: the profile is an equality case and `P`
    /// is discretization noise, so it is checked against `term_scale` instead.
    pub equality_case: bool,
    pub pass: bool,
}

/// Checks `P` nondecreasing, `J` nonincreasing and `P ≥ 0` up to `tol` times
/// the respective maximum magnitude.
pub fn monotonicity_checks(profile: &RearrangementProfile, tol: f64) -> MonotonicityReport {
    let slopes = |v: &[f64]| -> Vec<f64> { v.windows(2).map(|p| p[1] - p[0]).collect() };
    let ps = slopes(&profile.p);
    let js = slopes(&profile.j);
    let max_abs = |v: &[f64]| v.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    let max_abs_p = max_abs(&profile.p);
    let max_abs_j = max_abs(&profile.j);
    let min_p_slope = ps.iter().copied().fold(f64::INFINITY, f64::min);
    let max_j_slope = js.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let p_violation = ps.iter().map(|d| (-d).max(0.0)).fold(0.0, f64::max);
    let j_violation = js.iter().map(|d| d.max(0.0)).fold(0.0, f64::max);
    let min_p = profile.p.iter().copied().fold(f64::INFINITY, f64::min);
    let term_scale = 4.0 * PI * (1.0 - profile.alpha) * profile.total_mass;
    let equality_case = max_abs_p <= tol * term_scale;
    let j_ok = j_violation <= tol * max_abs_j;
    let pass = if equality_case {
        j_ok
    } else {
        p_violation <= tol * max_abs_p && j_ok && min_p >= -tol * max_abs_p
    };
    MonotonicityReport {
        min_p_slope,
        max_j_slope,
        p_violation,
        j_violation,
        max_abs_p,
        max_abs_j,
        min_p,
        term_scale,
        equality_case,
        pass,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EstmaxCheck {
    pub max_interior: f64,
    pub max_boundary: f64,
    /// `(1 − M/(8π(1−α)))^{−2}`, absent when the hypothesis fails.
    pub factor: Option<f64>,
    pub bound: Option<f64>,
    /// `M < 8π(1−α)`.
    pub hypothesis: bool,
    /// `bound/max_interior − 1`.
    pub margin: Option<f64>,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BolCertificate {
    pub level: Option<usize>,
    pub component: usize,
    /// Value `t` of the superlevel set, when the slice is one.
    pub t: Option<f64>,
    pub mass: f64,
    pub alpha: f64,
    pub holes: usize,
    pub lhs: f64,
    pub rhs: f64,
    pub gap: f64,
    pub huber_lhs: f64,
    pub huber_rhs: Option<f64>,
    pub huber_pass: Option<bool>,
    pub estmax: EstmaxCheck,
    /// Reason no sign could be certified.
    pub indeterminate: Option<String>,
    pub pass: bool,
}

/// `∫_ω h e^w` over a slice of the parent mesh.
pub fn slice_mass(slice: &SubdomainSlice, weight: &SingularWeight, w: &[f64]) -> f64 {
    let mesh = slice.parent;
    weight.integrate_slice(slice, |t, b| mesh.interpolate(w, t, b).exp())
}

fn boundary_max(slice: &SubdomainSlice, w: &[f64]) -> f64 {
    slice
        .loops
        .iter()
        .flat_map(|l| &l.segments)
        .flat_map(|s| [(s.tri, s.a.bary), (s.tri, s.b.bary)])
        .map(|(t, b)| slice.parent.interpolate(w, t, b))
        .fold(f64::NEG_INFINITY, f64::max)
}

pub fn estmax_check(slice: &SubdomainSlice, weight: &SingularWeight, w: &[f64], tol: f64) -> EstmaxCheck {
    let mass = slice_mass(slice, weight, w);
    estmax_from(slice, w, mass, alpha_of(slice, weight), tol)
}

fn estmax_from(slice: &SubdomainSlice, w: &[f64], mass: f64, alpha: f64, tol: f64) -> EstmaxCheck {
    let max_interior = slice.max_field(w).exp();
    let max_boundary = boundary_max(slice, w).exp();
    let limit = 8.0 * PI * (1.0 - alpha);
    let hypothesis = mass < limit;
    if !hypothesis {
        return EstmaxCheck { max_interior, max_boundary, factor: None, bound: None, hypothesis, margin: None, pass: false };
    }
    let factor = (1.0 - mass / limit).powi(-2);
    let bound = factor * max_boundary;
    EstmaxCheck {
        max_interior,
        max_boundary,
        factor: Some(factor),
        bound: Some(bound),
        hypothesis,
        margin: Some(bound / max_interior - 1.0),
        pass: max_interior <= bound * (1.0 + tol),
    }
}

/// Options of [`bol_check`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BolOptions {
    pub tol: f64,
    /// Whether to compute the harmonic lift for the Huber inequality.
    pub huber: bool,
}

impl Default for BolOptions {
    fn default() -> Self {
        Self { tol: DEFAULT_TOL, huber: true }
    }
}

pub fn bol_check(slice: &SubdomainSlice, weight: &SingularWeight, w: &[f64], opts: BolOptions) -> BolCertificate {
    let mesh = slice.parent;
    let mass = slice_mass(slice, weight, w);
    let alpha = alpha_of(slice, weight);
    let rhs = 0.5 * mass * (8.0 * PI * (1.0 - alpha) - mass);
    let estmax = estmax_from(slice, w, mass, alpha, opts.tol);
    let boundary = boundary_integral(slice, |bp| {
        (weight.log_h(mesh, bp.tri, bp.bary) + mesh.interpolate(w, bp.tri, bp.bary)).mul_add(0.5, 0.0).exp()
    });
    let (lhs, mut indeterminate) = match boundary {
        Ok(v) => (v * v, None),
        Err(e) => (f64::NAN, Some(e.to_string())),
    };
    let gap = lhs - rhs;
    let (huber_rhs, huber_pass) = if opts.huber && indeterminate.is_none() {
        match huber_rhs(slice, weight, w, alpha) {
            Ok(v) => (Some(v), Some(lhs >= v * (1.0 - opts.tol))),
            Err(e) => {
                indeterminate.get_or_insert(e.to_string());
                (None, None)
            }
        }
    } else {
        (None, None)
    };
    let pass = indeterminate.is_none() && gap >= -opts.tol * rhs.abs();
    BolCertificate {
        level: None,
        component: 0,
        t: None,
        mass,
        alpha,
        holes: slice.n_holes(),
        lhs,
        rhs,
        gap,
        huber_lhs: lhs,
        huber_rhs,
        huber_pass,
        estmax,
        indeterminate,
        pass,
    }
}

/// `4π(1−α) ∫_ω h e^g` with `g` the harmonic lift of `w`.
fn huber_rhs(slice: &SubdomainSlice, weight: &SingularWeight, w: &[f64], alpha: f64) -> Result<f64> {
    let lift = harmonic_lift(slice, w)?;
    let sm = &lift.mesh;
    let eg = integrate_on_slice_mesh(weight, slice.parent, sm, &whole(sm), |t, b| {
        let tri = sm.mesh.triangles[t];
        (b[0] * lift.g[tri[0]] + b[1] * lift.g[tri[1]] + b[2] * lift.g[tri[2]]).exp()
    });
    Ok(4.0 * PI * (1.0 - alpha) * eg)
}

/// Levels `t_k = min + k (max − min)/n`, `k = 0..n`, moved off nodal values:
/// `t_0` to just below the minimum, later levels up by half the smallest gap
/// between distinct nodal values when they coincide with one.
pub fn sweep_levels(w: &[f64], n_levels: usize) -> Vec<f64> {
    let mut sorted: Vec<f64> = w.to_vec();
    sorted.sort_by(f64::total_cmp);
    sorted.dedup();
    let lo = sorted[0];
    let hi = *sorted.last().unwrap();
    let gap = sorted.windows(2).map(|p| p[1] - p[0]).fold(f64::INFINITY, f64::min);
    let half = if gap.is_finite() { 0.5 * gap } else { 0.5 };
    (0..n_levels)
        .map(|k| {
            let t = lo + (hi - lo) * k as f64 / n_levels as f64;
            if k == 0 {
                t - half
            } else if sorted.binary_search_by(|v| v.total_cmp(&t)).is_ok() {
                t + half
            } else {
                t
            }
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepReport {
    pub levels: Vec<f64>,
    pub certificates: Vec<BolCertificate>,
    pub indeterminate: usize,
    pub min_gap: f64,
    /// Smallest `gap/rhs` over certificates with `rhs > 0`.
    pub min_relative_gap: f64,
    pub max_abs_relative_gap: f64,
    pub pass: bool,
}

/// Bol certificates for every component of `{w > t_k}` over [`sweep_levels`].
pub fn level_set_sweep(
    mesh: &TriangleMesh,
    weight: &SingularWeight,
    sol: &MeanFieldSolution,
    n_levels: usize,
    opts: BolOptions,
) -> Result<SweepReport> {
    if n_levels < 1 {
        return Err(Error::Input("n_levels must be positive".into()));
    }
    let w = sol.to_unconstrained();
    let levels = sweep_levels(&w, n_levels);
    let per_level: Vec<Vec<BolCertificate>> = levels
        .par_iter()
        .enumerate()
        .map(|(k, &t)| {
            extract_level_set(mesh, &w, t)
                .iter()
                .enumerate()
                .map(|(c, slice)| {
                    let mut cert = bol_check(slice, weight, &w, opts);
                    if cert.indeterminate.as_deref().is_some_and(|m| m.contains("at least")) {
                        // Too small for a harmonic lift: keep the Bol part, drop Huber.
                        cert = bol_check(slice, weight, &w, BolOptions { huber: false, ..opts });
                    }
                    cert.level = Some(k);
                    cert.component = c;
                    cert.t = Some(t);
                    cert
                })
                .collect()
        })
        .collect();
    let certificates: Vec<BolCertificate> = per_level.into_iter().flatten().collect();
    Ok(summarize(levels, certificates))
}

fn summarize(levels: Vec<f64>, certificates: Vec<BolCertificate>) -> SweepReport {
    let ok: Vec<&BolCertificate> = certificates.iter().filter(|c| c.indeterminate.is_none()).collect();
    let indeterminate = certificates.len() - ok.len();
    let min_gap = ok.iter().map(|c| c.gap).fold(f64::INFINITY, f64::min);
    let rel: Vec<f64> = ok.iter().filter(|c| c.rhs > 0.0).map(|c| c.gap / c.rhs).collect();
    let min_relative_gap = rel.iter().copied().fold(f64::INFINITY, f64::min);
    let max_abs_relative_gap = rel.iter().fold(0.0f64, |m, r| m.max(r.abs()));
    let pass = ok.iter().all(|c| c.pass);
    SweepReport { levels, certificates, indeterminate, min_gap, min_relative_gap, max_abs_relative_gap, pass }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EquimeasurabilityReport {
    /// Masses `∫_{φ>t} h e^w` at the levels.
    pub masses: Vec<f64>,
    /// Model radii `R(t)` with `mass_ball(1, α, R) = mass`.
    pub radii: Vec<f64>,
    /// Largest relative defect of `mass_ball(1, α, R(t))` against the mass.
    pub max_defect: f64,
}

/// Radially rearranged copy `φ*` of a nonnegative field on the model metric,
/// with its Dirichlet energy next to the original one.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RearrangedField {
    pub levels: Vec<f64>,
    pub equimeasurability: EquimeasurabilityReport,
    pub energy: f64,
    pub rearranged_energy: f64,
}

/// Builds `φ*` on the model radius grid: the level `t` sits at the radius
/// whose model mass equals `∫_{φ>t} h e^w`. Between levels `φ*` is taken
/// radially harmonic. `phi` must be nonnegative and vanish on the boundary.
pub fn rearrange_field(
    mesh: &TriangleMesh,
    weight: &SingularWeight,
    w: &[f64],
    phi: &[f64],
    n_levels: usize,
) -> Result<RearrangedField> {
    if n_levels < 2 {
        return Err(Error::Input("at least two levels required".into()));
    }
    let alpha = weight.measure.alpha_total();
    let pmax = phi.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !(pmax > 0.0) {
        return Err(Error::Input("field must be positive somewhere".into()));
    }
    let levels: Vec<f64> = (0..n_levels).map(|k| pmax * k as f64 / n_levels as f64).collect();
    let masses: Vec<f64> = levels
        .par_iter()
        .map(|&t| {
            extract_level_set(mesh, phi, t).iter().map(|s| slice_mass(s, weight, w)).sum::<f64>()
        })
        .collect();
    let limit = crate::radial::total_mass(alpha);
    if masses[0] >= limit {
        return Err(Error::Threshold { rho: masses[0], threshold: limit });
    }
    let radii: Vec<f64> = masses.iter().map(|&m| radius_for_mass(m, alpha)).collect();
    let max_defect = masses
        .iter()
        .zip(&radii)
        .filter(|(m, _)| **m > 0.0)
        .map(|(m, r)| (mass_ball(1.0, alpha, *r) - m).abs() / m)
        .fold(0.0, f64::max);
    let mut rearranged_energy = 0.0;
    let mut next_level: Vec<f64> = levels[1..].to_vec();
    next_level.push(pmax);
    for k in 0..n_levels {
        let r_out = radii[k];
        let r_in = if k + 1 < n_levels { radii[k + 1] } else { 0.0 };
        let dt = next_level[k] - levels[k];
        if r_in > 0.0 && r_out > r_in {
            rearranged_energy += 2.0 * PI * dt * dt / (r_out / r_in).ln();
        }
    }
    let energy = (0..mesh.n_triangles())
        .map(|t| {
            let g = mesh.gradients(t);
            let tri = mesh.triangles[t];
            let grad = g[0] * phi[tri[0]] + g[1] * phi[tri[1]] + g[2] * phi[tri[2]];
            mesh.area(t) * grad.dot(grad)
        })
        .sum();
    Ok(RearrangedField {
        levels,
        equimeasurability: EquimeasurabilityReport { masses, radii, max_defect },
        energy,
        rearranged_energy,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{build_mesh, PlanarDomain, Point};
    use crate::weights::{build_weight, AtomicMeasure};

    #[test]
    fn local_bary_inverts_corner_map() {
        let c = [[0.2, 0.3, 0.5], [0.6, 0.1, 0.3], [0.1, 0.1, 0.8]];
        let l = [0.25, 0.45, 0.3];
        let b = [0, 1, 2].map(|k| l[0] * c[0][k] + l[1] * c[1][k] + l[2] * c[2][k]);
        let got = local_bary(&c, b);
        for k in 0..3 {
            assert!((got[k] - l[k]).abs() < 1e-12);
        }
    }

    #[test]
    fn levels_avoid_nodal_values() {
        let w = [0.0, 0.25, 0.5, 1.0];
        let lv = sweep_levels(&w, 4);
        assert!(lv[0] < 0.0);
        assert!(lv.iter().skip(1).all(|t| !w.contains(t)));
    }

    #[test]
    fn harmonic_data_gives_zero_eta() {
        let d = PlanarDomain::unit_disk();
        let m = build_mesh(&d, 0.1, &[]).unwrap();
        let lin: Vec<f64> = m.nodes.iter().map(|p| 2.0 * p.x - p.y).collect();
        let sel: Vec<f64> = m.nodes.iter().map(|p| 0.5 - p.dist(Point::new(0.1, 0.0))).collect();
        let slices = extract_level_set(&m, &sel, 0.0);
        let lift = harmonic_lift(&slices[0], &lin).unwrap();
        assert!(lift.eta.iter().all(|e| e.abs() < 1e-10));
    }

    #[test]
    fn constant_field_bol_is_classical_isoperimetry() {
        // h ≡ 1, w ≡ 0 on the unit disk: lhs = (2π)², M = π, rhs = π(8π − π)/2.
        let d = PlanarDomain::unit_disk();
        let m = build_mesh(&d, 0.05, &[]).unwrap();
        let wt = build_weight(&m, &d, AtomicMeasure::empty(), None).unwrap();
        let zero = vec![0.0; m.n_nodes()];
        let ones = vec![1.0; m.n_nodes()];
        let slices = extract_level_set(&m, &ones, 0.0);
        let c = bol_check(&slices[0], &wt, &zero, BolOptions::default());
        let area = m.total_area();
        let perim = slices[0].perimeter();
        assert!((c.mass - area).abs() < 1e-12);
        assert!((c.lhs - perim * perim).abs() < 1e-9);
        assert!((c.rhs - 0.5 * area * (8.0 * PI - area)).abs() < 1e-9);
        assert!(c.pass);
        assert_eq!(c.huber_pass, Some(true));
    }
}
