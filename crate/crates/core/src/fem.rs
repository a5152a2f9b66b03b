//! P1 finite element assembly and sparse factorizations.

use faer::linalg::solvers::Solve;
use faer::sparse::linalg::solvers::{Llt, Lu, SymbolicLlt, SymbolicLu};
use faer::sparse::{SparseColMat, Triplet};
use faer::{Col, Side};

use crate::error::{Error, Result};
use crate::geometry::TriangleMesh;
use crate::weights::SingularWeight;

pub type SparseMatrix = SparseColMat<usize, f64>;

/// Numbering of the free (non-boundary) nodes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Dofs {
    index: Vec<Option<usize>>,
    nodes: Vec<usize>,
}

impl Dofs {
    pub fn interior(mesh: &TriangleMesh) -> Self {
        Self::from_mask(mesh.boundary_mask())
    }

    /// Free nodes are those with `fixed[i] == false`.
    pub fn from_mask(fixed: &[bool]) -> Self {
        let mut index = vec![None; fixed.len()];
        let mut nodes = Vec::new();
        for (i, &f) in fixed.iter().enumerate() {
            if !f {
                index[i] = Some(nodes.len());
                nodes.push(i);
            }
        }
        Self { index, nodes }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn n_nodes(&self) -> usize {
        self.index.len()
    }

    pub fn dof(&self, node: usize) -> Option<usize> {
        self.index[node]
    }

    pub fn nodes(&self) -> &[usize] {
        &self.nodes
    }

    /// Nodal vector with `fill` at fixed nodes.
    pub fn extend(&self, values: &[f64], fill: f64) -> Vec<f64> {
        let mut out = vec![fill; self.index.len()];
        for (k, &n) in self.nodes.iter().enumerate() {
            out[n] = values[k];
        }
        out
    }

    pub fn restrict(&self, nodal: &[f64]) -> Vec<f64> {
        self.nodes.iter().map(|&n| nodal[n]).collect()
    }
}

/// Element stiffness matrix of triangle `t`.
pub fn local_stiffness(mesh: &TriangleMesh, t: usize) -> [[f64; 3]; 3] {
    let g = mesh.gradients(t);
    let a = mesh.area(t);
    let mut k = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            k[i][j] = a * g[i].dot(g[j]);
        }
    }
    k
}

/// Assembles element matrices restricted to `dofs`. Contributions coupling a
/// free node to a fixed node are passed to `coupling(free_dof, fixed_node, value)`.
pub fn assemble(
    mesh: &TriangleMesh,
    dofs: &Dofs,
    local: impl Fn(usize) -> [[f64; 3]; 3],
    mut coupling: impl FnMut(usize, usize, f64),
) -> Result<SparseMatrix> {
    let mut trip = Vec::with_capacity(9 * mesh.n_triangles());
    for t in 0..mesh.n_triangles() {
        let k = local(t);
        let tri = mesh.triangles[t];
        for i in 0..3 {
            let Some(di) = dofs.dof(tri[i]) else { continue };
            for j in 0..3 {
                match dofs.dof(tri[j]) {
                    Some(dj) => trip.push(Triplet::new(di, dj, k[i][j])),
                    None => coupling(di, tri[j], k[i][j]),
                }
            }
        }
    }
    SparseMatrix::try_new_from_triplets(dofs.len(), dofs.len(), &trip)
        .map_err(|e| Error::LinearAlgebra(format!("sparse assembly failed: {e:?}")))
}

pub fn stiffness(mesh: &TriangleMesh, dofs: &Dofs) -> Result<SparseMatrix> {
    assemble(mesh, dofs, |t| local_stiffness(mesh, t), |_, _, _| {})
}

pub fn matvec(a: &SparseMatrix, x: &[f64]) -> Vec<f64> {
    let mut y = vec![0.0; a.nrows()];
    let a = a.as_ref();
    for (j, &xj) in x.iter().enumerate().take(a.ncols()) {
        if xj == 0.0 {
            continue;
        }
        for (i, v) in a.row_idx_of_col(j).zip(a.val_of_col(j)) {
            y[i] += v * xj;
        }
    }
    y
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// `a + s * b` on matching sparsity patterns is not guaranteed, so the sum is rebuilt from triplets.
pub fn add_scaled(a: &SparseMatrix, s: f64, b: &SparseMatrix) -> Result<SparseMatrix> {
    let mut trip = Vec::with_capacity(a.compute_nnz() + b.compute_nnz());
    for (m, f) in [(a, 1.0), (b, s)] {
        let m = m.as_ref();
        for j in 0..m.ncols() {
            for (i, v) in m.row_idx_of_col(j).zip(m.val_of_col(j)) {
                trip.push(Triplet::new(i, j, f * v));
            }
        }
    }
    SparseMatrix::try_new_from_triplets(a.nrows(), a.ncols(), &trip)
        .map_err(|e| Error::LinearAlgebra(format!("sparse sum failed: {e:?}")))
}

/// Sparse Cholesky factor of a symmetric positive definite matrix.
pub struct Cholesky {
    llt: Llt<usize, f64>,
    n: usize,
}

impl Cholesky {
    pub fn new(a: &SparseMatrix) -> Result<Self> {
        let sym = SymbolicLlt::try_new(a.symbolic(), Side::Lower)
            .map_err(|e| Error::LinearAlgebra(format!("symbolic Cholesky failed: {e:?}")))?;
        Self::with_symbolic(sym, a)
    }

    pub fn with_symbolic(sym: SymbolicLlt<usize>, a: &SparseMatrix) -> Result<Self> {
        let llt = Llt::try_new_with_symbolic(sym, a.as_ref(), Side::Lower)
            .map_err(|e| Error::LinearAlgebra(format!("Cholesky failed: {e:?}")))?;
        Ok(Self { llt, n: a.nrows() })
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let rhs = Col::from_fn(self.n, |i| b[i]);
        let x = self.llt.solve(&rhs);
        (0..self.n).map(|i| x[i]).collect()
    }
}

/// Sparse LU factorization with a reusable symbolic analysis.
pub struct LuSolver {
    lu: Lu<usize, f64>,
    n: usize,
}

impl LuSolver {
    pub fn symbolic(a: &SparseMatrix) -> Result<SymbolicLu<usize>> {
        SymbolicLu::try_new(a.symbolic())
            .map_err(|e| Error::LinearAlgebra(format!("symbolic LU failed: {e:?}")))
    }

    pub fn new(sym: SymbolicLu<usize>, a: &SparseMatrix) -> Result<Self> {
        let lu = Lu::try_new_with_symbolic(sym, a.as_ref())
            .map_err(|e| Error::LinearAlgebra(format!("LU failed: {e:?}")))?;
        Ok(Self { lu, n: a.nrows() })
    }

    pub fn solve(&self, b: &[f64]) -> Result<Vec<f64>> {
        let rhs = Col::from_fn(self.n, |i| b[i]);
        let x = self.lu.solve(&rhs);
        let out: Vec<f64> = (0..self.n).map(|i| x[i]).collect();
        if out.iter().any(|v| !v.is_finite()) {
            return Err(Error::LinearAlgebra("LU solve produced non-finite values".into()));
        }
        Ok(out)
    }
}

/// Integrals with density `h·exp(v − shift)` for a nodal field `v`.
#[derive(Debug, Clone)]
pub struct WeightedMass {
    /// `∫ h e^{v−shift} φ_i φ_j` over free nodes.
    pub matrix: SparseMatrix,
    /// `∫ h e^{v−shift} φ_i` over free nodes.
    pub load: Vec<f64>,
    /// `∫ h e^{v−shift}`.
    pub total: f64,
    pub shift: f64,
}

pub fn weighted_mass(
    mesh: &TriangleMesh,
    dofs: &Dofs,
    weight: &SingularWeight,
    v: &[f64],
    shift: f64,
) -> Result<WeightedMass> {
    let table = weight.quadrature();
    let mut locals = Vec::with_capacity(mesh.n_triangles());
    let mut load = vec![0.0; dofs.len()];
    let mut total = 0.0;
    for t in 0..mesh.n_triangles() {
        let mut m = [[0.0; 3]; 3];
        let mut l = [0.0; 3];
        for q in table.range(t) {
            let b = table.bary[q];
            let d = table.weight[q] * (mesh.interpolate(v, t, b) - shift).exp();
            if !d.is_finite() {
                return Err(Error::Assembly { triangle: t, what: format!("density is {d}") });
            }
            for i in 0..3 {
                l[i] += d * b[i];
                for j in 0..3 {
                    m[i][j] += d * b[i] * b[j];
                }
            }
        }
        let tri = mesh.triangles[t];
        for i in 0..3 {
            total += l[i];
            if let Some(di) = dofs.dof(tri[i]) {
                load[di] += l[i];
            }
        }
        locals.push(m);
    }
    let matrix = assemble(mesh, dofs, |t| locals[t], |_, _, _| {})?;
    Ok(WeightedMass { matrix, load, total, shift })
}

/// Discrete harmonic extension: solves the Laplace equation on the free nodes
/// with the given values at the fixed nodes.
pub fn harmonic_extension(mesh: &TriangleMesh, fixed: &[bool], values: &[f64]) -> Result<Vec<f64>> {
    let dofs = Dofs::from_mask(fixed);
    if dofs.is_empty() {
        return Ok(values.to_vec());
    }
    let mut rhs = vec![0.0; dofs.len()];
    let k = assemble(mesh, &dofs, |t| local_stiffness(mesh, t), |i, node, v| {
        rhs[i] -= v * values[node];
    })?;
    let x = Cholesky::new(&k)?.solve(&rhs);
    let mut out = values.to_vec();
    for (k, &n) in dofs.nodes().iter().enumerate() {
        out[n] = x[k];
    }
    Ok(out)
}
