//! Global assembly, boundary conditions and the linear solve.
//!
//! Vertex `i` owns global dofs `3i, 3i + 1, 3i + 2` (x, y, z components).
//! Element matrices are computed in parallel and scattered serially in
//! element order, so the assembled matrix does not depend on the thread
//! schedule.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector, Vector3};
use rayon::prelude::*;
use sprs::CsMat;
use sprs_ldl::Ldl;

use crate::element::{element_stiffness, Material};
use crate::geometry::{FaceAdjacency, PolyMesh};
use crate::quadrature::{surface_nodal_rule, volume_nodal_rule, MomentMode};
use crate::{Error, Point3, Result};

/// Compressed sparse row matrix.
pub type SparseMatrix = CsMat<f64>;

/// Relative residual accepted from [`solve`].
pub const SOLVE_TOLERANCE: f64 = 1e-10;

/// Element matrices held in memory at once during assembly.
const ASSEMBLY_CHUNK: usize = 512;

/// Vertex to global dof numbering.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DofMap {
    num_vertices: usize,
}

impl DofMap {
    pub fn new(num_vertices: usize) -> Self {
        Self { num_vertices }
    }

    pub fn for_mesh(mesh: &PolyMesh) -> Self {
        Self::new(mesh.num_vertices())
    }

    pub fn len(&self) -> usize {
        3 * self.num_vertices
    }

    pub fn is_empty(&self) -> bool {
        self.num_vertices == 0
    }

    pub fn dof(&self, vertex: usize, component: usize) -> usize {
        debug_assert!(vertex < self.num_vertices && component < 3);
        3 * vertex + component
    }

    pub fn vertex_dofs(&self, vertex: usize) -> [usize; 3] {
        [3 * vertex, 3 * vertex + 1, 3 * vertex + 2]
    }

    /// `(vertex, component)` owning a global dof.
    pub fn split(&self, dof: usize) -> (usize, usize) {
        (dof / 3, dof % 3)
    }
}

/// Which boundary faces a condition applies to.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub enum BoundarySelector {
    /// No faces.
    #[default]
    None,
    /// Every boundary face.
    All,
    /// Boundary faces carrying one of these tags.
    Tags(Vec<String>),
}

impl BoundarySelector {
    pub fn tags<S: Into<String>>(tags: impl IntoIterator<Item = S>) -> Self {
        BoundarySelector::Tags(tags.into_iter().map(Into::into).collect())
    }

    pub fn contains(&self, mesh: &PolyMesh, face: usize) -> bool {
        if !mesh.is_boundary_face(face) {
            return false;
        }
        match self {
            BoundarySelector::None => false,
            BoundarySelector::All => true,
            BoundarySelector::Tags(tags) => mesh.face_tag(face).is_some_and(|t| tags.iter().any(|s| s == t)),
        }
    }

    pub fn faces<'a>(&'a self, mesh: &'a PolyMesh) -> impl Iterator<Item = usize> + 'a {
        mesh.boundary_faces().filter(move |&f| self.contains(mesh, f))
    }
}

pub type VectorField = Arc<dyn Fn(&Point3) -> Vector3<f64> + Send + Sync>;
/// Traction as a function of position and outward unit normal.
pub type TractionField = Arc<dyn Fn(&Point3, &Vector3<f64>) -> Vector3<f64> + Send + Sync>;

/// Boundary value problem data.
#[derive(Clone)]
pub struct ProblemSpec {
    pub material: Material,
    pub gamma: f64,
    pub body_force: VectorField,
    pub traction: TractionField,
    pub traction_boundary: BoundarySelector,
    pub displacement: VectorField,
    pub displacement_boundary: BoundarySelector,
}

impl fmt::Debug for ProblemSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ProblemSpec")
            .field("material", &self.material)
            .field("gamma", &self.gamma)
            .field("traction_boundary", &self.traction_boundary)
            .field("displacement_boundary", &self.displacement_boundary)
            .finish_non_exhaustive()
    }
}

impl ProblemSpec {
    /// Pure displacement problem: `g` on the whole boundary, no loads.
    pub fn new(material: Material, gamma: f64, g: impl Fn(&Point3) -> Vector3<f64> + Send + Sync + 'static) -> Self {
        Self {
            material,
            gamma,
            body_force: Arc::new(|_| Vector3::zeros()),
            traction: Arc::new(|_, _| Vector3::zeros()),
            traction_boundary: BoundarySelector::None,
            displacement: Arc::new(g),
            displacement_boundary: BoundarySelector::All,
        }
    }

    pub fn with_body_force(mut self, b: impl Fn(&Point3) -> Vector3<f64> + Send + Sync + 'static) -> Self {
        self.body_force = Arc::new(b);
        self
    }

    pub fn with_traction(
        mut self,
        boundary: BoundarySelector,
        t: impl Fn(&Point3, &Vector3<f64>) -> Vector3<f64> + Send + Sync + 'static,
    ) -> Self {
        self.traction_boundary = boundary;
        self.traction = Arc::new(t);
        self
    }

    pub fn with_displacement_boundary(mut self, boundary: BoundarySelector) -> Self {
        self.displacement_boundary = boundary;
        self
    }
}

/// Assembled but unconstrained system.
#[derive(Debug, Clone)]
pub struct SparseSystem {
    pub matrix: SparseMatrix,
    pub rhs: DVector<f64>,
}

/// System restricted to the free dofs after symmetric elimination.
#[derive(Debug, Clone)]
pub struct ConstrainedSystem {
    pub matrix: SparseMatrix,
    pub rhs: DVector<f64>,
    /// Global index of every reduced unknown.
    pub free_dofs: Vec<usize>,
    /// Prescribed values by global dof.
    pub constraints: BTreeMap<usize, f64>,
    pub num_dofs: usize,
}

impl ConstrainedSystem {
    /// Full nodal vector from the reduced solution.
    pub fn expand(&self, reduced: &DVector<f64>) -> Result<DVector<f64>> {
        if reduced.len() != self.free_dofs.len() {
            return Err(Error::DimensionMismatch {
                expected: self.free_dofs.len(),
                got: reduced.len(),
            });
        }
        let mut full = DVector::zeros(self.num_dofs);
        for (&dof, &value) in &self.constraints {
            full[dof] = value;
        }
        for (&dof, &value) in self.free_dofs.iter().zip(reduced.iter()) {
            full[dof] = value;
        }
        Ok(full)
    }
}

/// Row structure of the global matrix: dof rows coupled through shared
/// elements, columns sorted.
fn sparsity_pattern(mesh: &PolyMesh) -> (Vec<usize>, Vec<usize>) {
    let nv = mesh.num_vertices();
    let mut neighbours: Vec<Vec<usize>> = vec![Vec::new(); nv];
    for el in mesh.elements() {
        for &v in &el.vertices {
            neighbours[v].extend_from_slice(&el.vertices);
        }
    }
    let mut indptr = Vec::with_capacity(3 * nv + 1);
    let mut indices = Vec::new();
    indptr.push(0);
    for list in &mut neighbours {
        list.sort_unstable();
        list.dedup();
        for _ in 0..3 {
            for &w in list.iter() {
                indices.extend_from_slice(&[3 * w, 3 * w + 1, 3 * w + 2]);
            }
            indptr.push(indices.len());
        }
    }
    (indptr, indices)
}

/// Global stiffness `K = Σ_E scatter(K_E)`, unconstrained.
pub fn assemble_stiffness(mesh: &PolyMesh, material: &Material, gamma: f64, mode: MomentMode) -> Result<SparseMatrix> {
    let (indptr, indices) = sparsity_pattern(mesh);
    let mut data = vec![0.0; indices.len()];
    let ne = mesh.num_elements();
    let mut start = 0;
    while start < ne {
        let end = (start + ASSEMBLY_CHUNK).min(ne);
        let blocks: Vec<DMatrix<f64>> = (start..end)
            .into_par_iter()
            .map(|e| element_stiffness(mesh, e, material, gamma, mode))
            .collect::<Result<_>>()?;
        for (e, k) in (start..end).zip(&blocks) {
            let dofs: Vec<usize> = mesh.element(e).vertices.iter().flat_map(|&v| 3 * v..3 * v + 3).collect();
            for (a, &row) in dofs.iter().enumerate() {
                let cols = &indices[indptr[row]..indptr[row + 1]];
                for (b, &col) in dofs.iter().enumerate() {
                    let pos = cols.binary_search(&col).expect("column in sparsity pattern");
                    data[indptr[row] + pos] += k[(a, b)];
                }
            }
        }
        start = end;
    }
    let n = 3 * mesh.num_vertices();
    Ok(CsMat::new((n, n), indptr, indices, data))
}

/// Outward unit normal of a boundary face.
pub fn outward_normal(mesh: &PolyMesh, face: usize) -> Option<Vector3<f64>> {
    let FaceAdjacency::Boundary(e) = mesh.adjacency(face) else {
        return None;
    };
    let of = mesh.element(e).faces.iter().find(|of| of.face == face)?;
    Some(of.sign_f64() * mesh.face(face).normal)
}

/// Load vector from nodal quadrature of the body force over every element
/// and of the traction over the selected boundary faces.
pub fn assemble_load(mesh: &PolyMesh, problem: &ProblemSpec) -> Result<DVector<f64>> {
    let coords = mesh.vertices();
    let rules = (0..mesh.num_elements())
        .into_par_iter()
        .map(|e| volume_nodal_rule(mesh, e))
        .collect::<Result<Vec<_>>>()?;
    let mut f = DVector::zeros(3 * mesh.num_vertices());
    for rule in &rules {
        for (&v, &w) in rule.vertices.iter().zip(&rule.weights) {
            let b = (problem.body_force)(&coords[v]);
            for c in 0..3 {
                f[3 * v + c] += w * b[c];
            }
        }
    }
    for face in problem.traction_boundary.faces(mesh) {
        let normal = outward_normal(mesh, face).expect("selected faces are boundary faces");
        let rule = surface_nodal_rule(mesh.face(face), coords);
        for (&v, &w) in rule.vertices.iter().zip(&rule.weights) {
            let t = (problem.traction)(&coords[v], &normal);
            for c in 0..3 {
                f[3 * v + c] += w * t[c];
            }
        }
    }
    Ok(f)
}

/// Assembled stiffness and load for a problem.
pub fn assemble_system(mesh: &PolyMesh, problem: &ProblemSpec, mode: MomentMode) -> Result<SparseSystem> {
    Ok(SparseSystem {
        matrix: assemble_stiffness(mesh, &problem.material, problem.gamma, mode)?,
        rhs: assemble_load(mesh, problem)?,
    })
}

/// Nodal values of `g` at every vertex touching a selected boundary face.
pub fn dirichlet_values(
    mesh: &PolyMesh,
    g: &(dyn Fn(&Point3) -> Vector3<f64> + Sync),
    boundary: &BoundarySelector,
) -> BTreeMap<usize, f64> {
    let mut constraints = BTreeMap::new();
    for face in boundary.faces(mesh) {
        for &v in &mesh.face(face).vertices {
            if constraints.contains_key(&(3 * v)) {
                continue;
            }
            let value = g(mesh.vertex(v));
            for c in 0..3 {
                constraints.insert(3 * v + c, value[c]);
            }
        }
    }
    constraints
}

/// Symmetric elimination of prescribed dofs: their values are moved to the
/// right-hand side and their rows and columns removed.
pub fn apply_dirichlet(system: &SparseSystem, constraints: BTreeMap<usize, f64>) -> Result<ConstrainedSystem> {
    if constraints.is_empty() {
        return Err(Error::SingularSystem(
            "no displacement constraints; the stiffness has a rigid-body null space".into(),
        ));
    }
    let n = system.matrix.rows();
    if let Some((&dof, _)) = constraints.iter().next_back().filter(|(&d, _)| d >= n) {
        return Err(Error::DimensionMismatch { expected: n, got: dof + 1 });
    }
    let mut reduced_index = vec![usize::MAX; n];
    let mut free_dofs = Vec::with_capacity(n - constraints.len());
    for dof in 0..n {
        if !constraints.contains_key(&dof) {
            reduced_index[dof] = free_dofs.len();
            free_dofs.push(dof);
        }
    }
    let mut prescribed = vec![0.0; n];
    for (&dof, &value) in &constraints {
        prescribed[dof] = value;
    }

    let k = &system.matrix;
    let mut indptr = Vec::with_capacity(free_dofs.len() + 1);
    let mut indices = Vec::new();
    let mut data = Vec::new();
    let mut rhs = DVector::zeros(free_dofs.len());
    indptr.push(0);
    for (r, &row) in free_dofs.iter().enumerate() {
        let mut fr = system.rhs[row];
        if let Some(vec) = k.outer_view(row) {
            for (col, &value) in vec.iter() {
                let j = reduced_index[col];
                if j == usize::MAX {
                    fr -= value * prescribed[col];
                } else {
                    indices.push(j);
                    data.push(value);
                }
            }
        }
        rhs[r] = fr;
        indptr.push(indices.len());
    }
    let m = free_dofs.len();
    Ok(ConstrainedSystem {
        matrix: CsMat::new((m, m), indptr, indices, data),
        rhs,
        free_dofs,
        constraints,
        num_dofs: n,
    })
}

/// `y = A x` for a CSR matrix.
pub fn mat_vec(a: &SparseMatrix, x: &DVector<f64>) -> DVector<f64> {
    let mut y = DVector::zeros(a.rows());
    for (i, row) in a.outer_iterator().enumerate() {
        y[i] = row.iter().map(|(j, &v)| v * x[j]).sum();
    }
    y
}

/// Solves a symmetric positive definite sparse system with a fill-reducing
/// LDL^T factorization and one step of iterative refinement.
pub fn solve_spd(a: &SparseMatrix, b: &DVector<f64>) -> Result<DVector<f64>> {
    let n = a.rows();
    if a.cols() != n {
        return Err(Error::DimensionMismatch { expected: n, got: a.cols() });
    }
    if b.len() != n {
        return Err(Error::DimensionMismatch { expected: n, got: b.len() });
    }
    let b_norm = b.norm();
    if n == 0 || b_norm == 0.0 {
        return Ok(DVector::zeros(n));
    }
    let csc = a.to_csc();
    let ldl = Ldl::new()
        .fill_in_reduction(sprs::FillInReduction::ReverseCuthillMcKee)
        .check_symmetry(sprs::SymmetryCheck::DontCheckSymmetry)
        .numeric(csc.view())
        .map_err(|e| Error::SingularSystem(e.to_string()))?;
    let scale = a.diag().iter().fold(0.0f64, |m, (_, v)| m.max(v.abs()));
    for (row, &pivot) in ldl.d().iter().enumerate() {
        if !(pivot > 1e-14 * scale) {
            return Err(Error::NotPositiveDefinite { row, pivot });
        }
    }
    let solve = |rhs: &DVector<f64>| DVector::from_vec(ldl.solve(rhs.as_slice().to_vec()));
    let mut x = solve(b);
    let r = b - mat_vec(a, &x);
    x += solve(&r);
    let residual = (b - mat_vec(a, &x)).norm() / b_norm;
    if !(residual <= SOLVE_TOLERANCE) {
        return Err(Error::SolveTolerance {
            residual,
            tolerance: SOLVE_TOLERANCE,
        });
    }
    Ok(x)
}

/// Full nodal displacement vector of a constrained system.
pub fn solve(system: &ConstrainedSystem) -> Result<DVector<f64>> {
    let reduced = solve_spd(&system.matrix, &system.rhs)?;
    system.expand(&reduced)
}

/// Nodal displacements of a problem together with solve statistics.
#[derive(Debug, Clone)]
pub struct Solution {
    pub displacement: DVector<f64>,
    pub num_dofs: usize,
    pub num_constrained: usize,
}

impl Solution {
    pub fn vertex_displacement(&self, v: usize) -> Vector3<f64> {
        self.displacement.fixed_rows::<3>(3 * v).into_owned()
    }
}

/// Assemble, constrain and solve.
pub fn solve_problem(mesh: &PolyMesh, problem: &ProblemSpec, mode: MomentMode) -> Result<Solution> {
    let system = assemble_system(mesh, problem, mode)?;
    let constraints = dirichlet_values(mesh, problem.displacement.as_ref(), &problem.displacement_boundary);
    let constrained = apply_dirichlet(&system, constraints)?;
    let displacement = solve(&constrained)?;
    Ok(Solution {
        num_dofs: constrained.num_dofs,
        num_constrained: constrained.constraints.len(),
        displacement,
    })
}

/// Dense copy, for test-scale checks.
pub fn to_dense(a: &SparseMatrix) -> DMatrix<f64> {
    let mut d = DMatrix::zeros(a.rows(), a.cols());
    for (i, row) in a.outer_iterator().enumerate() {
        for (j, &v) in row.iter() {
            d[(i, j)] = v;
        }
    }
    d
}
