//! The first-order VEM element kernel.
//!
//! For an element with `n` vertices every deformation state is represented by
//! its `3n` nodal values (vertex-major, components x, y, z). The stiffness is
//!
//! ```text
//! K = |E| W_C D W_C^T + γ α* (I - P_P)^T (I - P_P)
//! ```
//!
//! where `P_P = N_R W_R^T + N_C W_C^T` projects onto linear displacements.
//! The consistency term reproduces the exact energy of constant-strain
//! states; the stability term assigns energy `γ α*` to all higher-order modes.

use nalgebra::{DMatrix, DVector, Matrix6, Vector3};
use serde::{Deserialize, Serialize};

use crate::geometry::PolyMesh;
use crate::quadrature::{face_phi_moments, MomentMode};
use crate::{Error, Result, Vector6};

/// Index pairs of the 6-vector ordering (11, 22, 33, 12, 23, 31).
pub const VOIGT_PAIRS: [(usize, usize); 6] = [(0, 0), (1, 1), (2, 2), (0, 1), (1, 2), (2, 0)];

/// Linear elastic material.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum Material {
    Isotropic {
        young: f64,
        poisson: f64,
    },
    /// Tensor components `C_(ab)(cd)` arranged by index pairs in the order
    /// (11, 22, 33, 12, 23, 31). Must be symmetric (21 independent constants).
    Anisotropic { c: [[f64; 6]; 6] },
}

impl Material {
    pub fn isotropic(young: f64, poisson: f64) -> Result<Self> {
        let m = Material::Isotropic { young, poisson };
        m.validate()?;
        Ok(m)
    }

    pub fn anisotropic(c: [[f64; 6]; 6]) -> Result<Self> {
        let m = Material::Anisotropic { c };
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            Material::Isotropic { young, poisson } => {
                if !(young > 0.0) {
                    return Err(Error::InvalidMaterial(format!(
                        "Young's modulus must be positive, got {young}"
                    )));
                }
                if !(poisson > -1.0 && poisson < 0.5) {
                    return Err(Error::InvalidMaterial(format!(
                        "Poisson's ratio must lie in (-1, 0.5), got {poisson}"
                    )));
                }
            }
            Material::Anisotropic { c } => {
                for a in 0..6 {
                    for b in 0..6 {
                        if !c[a][b].is_finite() || c[a][b] != c[b][a] {
                            return Err(Error::InvalidMaterial(format!(
                                "tensor entry ({a},{b}) must be finite and symmetric"
                            )));
                        }
                    }
                }
            }
        }
        if self.d_matrix().cholesky().is_none() {
            return Err(Error::InvalidMaterial("material matrix D is not positive definite".into()));
        }
        Ok(())
    }

    /// Lamé parameters `(λ, μ)` of an isotropic material.
    pub fn lame(&self) -> Option<(f64, f64)> {
        match *self {
            Material::Isotropic { young, poisson } => {
                let lambda = young * poisson / ((1.0 + poisson) * (1.0 - 2.0 * poisson));
                let mu = young / (2.0 * (1.0 + poisson));
                Some((lambda, mu))
            }
            Material::Anisotropic { .. } => None,
        }
    }

    /// Tensor components `C_(ab)(cd)` by index pair.
    pub fn tensor(&self) -> Matrix6<f64> {
        match *self {
            Material::Isotropic { .. } => {
                let (lambda, mu) = self.lame().unwrap();
                let mut c = Matrix6::zeros();
                for a in 0..3 {
                    for b in 0..3 {
                        c[(a, b)] = lambda;
                    }
                    c[(a, a)] = lambda + 2.0 * mu;
                    c[(a + 3, a + 3)] = mu;
                }
                c
            }
            Material::Anisotropic { c } => Matrix6::from_fn(|a, b| c[a][b]),
        }
    }

    /// Normalised energies of the constant-strain modes; entries of the
    /// tensor scaled by 2 per shear index pair.
    pub fn d_matrix(&self) -> Matrix6<f64> {
        if let Material::Isotropic { young, poisson } = *self {
            let s = young / ((1.0 + poisson) * (1.0 - 2.0 * poisson));
            let mut d = Matrix6::zeros();
            for a in 0..3 {
                for b in 0..3 {
                    d[(a, b)] = s * poisson;
                }
                d[(a, a)] = s * (1.0 - poisson);
                d[(a + 3, a + 3)] = s * 2.0 * (1.0 - 2.0 * poisson);
            }
            return d;
        }
        let c = self.tensor();
        Matrix6::from_fn(|a, b| shear_factor(a) * shear_factor(b) * c[(a, b)])
    }

    /// Stress tensor components from strain tensor components, both in
    /// (11, 22, 33, 12, 23, 31) order.
    pub fn stress(&self, strain: &Vector6) -> Vector6 {
        let mut engineering = *strain;
        for a in 3..6 {
            engineering[a] *= 2.0;
        }
        self.tensor() * engineering
    }
}

fn shear_factor(a: usize) -> f64 {
    if a < 3 {
        1.0
    } else {
        2.0
    }
}

/// `D` for a validated material.
pub fn material_d(material: &Material) -> Result<Matrix6<f64>> {
    material.validate()?;
    Ok(material.d_matrix())
}

/// Nodal representations of the rigid-body and constant-strain bases about
/// the vertex mean, each `3n x 6`.
pub fn mode_matrices(mesh: &PolyMesh, e: usize) -> (DMatrix<f64>, DMatrix<f64>) {
    let el = mesh.element(e);
    let n = el.num_vertices();
    let mut nr = DMatrix::zeros(3 * n, 6);
    let mut nc = DMatrix::zeros(3 * n, 6);
    for (i, &v) in el.vertices.iter().enumerate() {
        let x = mesh.vertex(v) - el.vertex_mean;
        let r = 3 * i;
        nr[(r, 0)] = 1.0;
        nr[(r + 1, 1)] = 1.0;
        nr[(r + 2, 2)] = 1.0;
        nr[(r, 3)] = x[1];
        nr[(r + 1, 3)] = -x[0];
        nr[(r + 1, 4)] = x[2];
        nr[(r + 2, 4)] = -x[1];
        nr[(r, 5)] = -x[2];
        nr[(r + 2, 5)] = x[0];

        nc[(r, 0)] = x[0];
        nc[(r + 1, 1)] = x[1];
        nc[(r + 2, 2)] = x[2];
        nc[(r, 3)] = x[1];
        nc[(r + 1, 3)] = x[0];
        nc[(r + 1, 4)] = x[2];
        nc[(r + 2, 4)] = x[1];
        nc[(r, 5)] = x[2];
        nc[(r + 2, 5)] = x[0];
    }
    (nr, nc)
}

/// `q_i = (1 / 2|E|) Σ_{F ∋ i} (∫_F φ_i ds) n_{F,E}` for every local vertex.
pub fn q_vectors(mesh: &PolyMesh, e: usize, mode: MomentMode) -> Vec<Vector3<f64>> {
    let el = mesh.element(e);
    let mut q = vec![Vector3::zeros(); el.num_vertices()];
    for of in &el.faces {
        let face = mesh.face(of.face);
        let normal = of.sign_f64() * face.normal;
        let moments = face_phi_moments(face, mesh.vertices(), mode);
        for (&v, m) in face.vertices.iter().zip(moments) {
            // Face loops only reference vertices of the element.
            let i = el.local_index(v).expect("face vertex belongs to element");
            q[i] += m * normal;
        }
    }
    let scale = 0.5 / el.volume;
    q.iter_mut().for_each(|qi| *qi *= scale);
    q
}

/// Boundary-integral weight matrices `(W_R, W_C)`, each `3n x 6`.
pub fn weight_matrices(q: &[Vector3<f64>]) -> (DMatrix<f64>, DMatrix<f64>) {
    let n = q.len();
    let inv_n = 1.0 / n as f64;
    let mut wr = DMatrix::zeros(3 * n, 6);
    let mut wc = DMatrix::zeros(3 * n, 6);
    for (i, qi) in q.iter().enumerate() {
        let r = 3 * i;
        wr[(r, 0)] = inv_n;
        wr[(r + 1, 1)] = inv_n;
        wr[(r + 2, 2)] = inv_n;
        wr[(r, 3)] = qi[1];
        wr[(r + 1, 3)] = -qi[0];
        wr[(r + 1, 4)] = qi[2];
        wr[(r + 2, 4)] = -qi[1];
        wr[(r, 5)] = -qi[2];
        wr[(r + 2, 5)] = qi[0];

        wc[(r, 0)] = 2.0 * qi[0];
        wc[(r + 1, 1)] = 2.0 * qi[1];
        wc[(r + 2, 2)] = 2.0 * qi[2];
        wc[(r, 3)] = qi[1];
        wc[(r + 1, 3)] = qi[0];
        wc[(r + 1, 4)] = qi[2];
        wc[(r + 2, 4)] = qi[1];
        wc[(r, 5)] = qi[2];
        wc[(r + 2, 5)] = qi[0];
    }
    (wr, wc)
}

/// `(P_R, P_C, P_P)` from the mode and weight matrices.
pub fn projection_matrices(
    nr: &DMatrix<f64>,
    nc: &DMatrix<f64>,
    wr: &DMatrix<f64>,
    wc: &DMatrix<f64>,
) -> (DMatrix<f64>, DMatrix<f64>, DMatrix<f64>) {
    let pr = nr * wr.transpose();
    let pc = nc * wc.transpose();
    let pp = &pr + &pc;
    (pr, pc, pp)
}

/// Energy scale of the stability term, `|E| trace(D) / trace(N_C^T N_C)`.
pub fn alpha_star(volume: f64, d: &Matrix6<f64>, nc: &DMatrix<f64>) -> f64 {
    volume * d.trace() / nc.norm_squared()
}

/// Everything computed for one element.
#[derive(Debug, Clone)]
pub struct ElementOperators {
    pub n: usize,
    pub volume: f64,
    pub nr: DMatrix<f64>,
    pub nc: DMatrix<f64>,
    pub q: Vec<Vector3<f64>>,
    pub wr: DMatrix<f64>,
    pub wc: DMatrix<f64>,
    pub pr: DMatrix<f64>,
    pub pc: DMatrix<f64>,
    pub pp: DMatrix<f64>,
    pub d: Matrix6<f64>,
    pub alpha_star: f64,
    pub gamma: f64,
    pub stiffness: DMatrix<f64>,
}

impl ElementOperators {
    pub fn new(mesh: &PolyMesh, e: usize, material: &Material, gamma: f64, mode: MomentMode) -> Result<Self> {
        if !(gamma > 0.0) || !gamma.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "stabilization factor gamma must be positive, got {gamma}"
            )));
        }
        let d = material_d(material)?;
        let volume = mesh.element(e).volume;
        let (nr, nc) = mode_matrices(mesh, e);
        let q = q_vectors(mesh, e, mode);
        let (wr, wc) = weight_matrices(&q);
        let (pr, pc, pp) = projection_matrices(&nr, &nc, &wr, &wc);
        let alpha_star = alpha_star(volume, &d, &nc);

        let dim = pp.nrows();
        let consistency = &wc * (d * volume) * wc.transpose();
        let hourglass = DMatrix::<f64>::identity(dim, dim) - &pp;
        let stability = hourglass.transpose() * &hourglass * (gamma * alpha_star);
        let k = consistency + stability;
        // Exact symmetry keeps the assembled matrix bitwise symmetric.
        let stiffness = (&k + k.transpose()) * 0.5;

        Ok(Self {
            n: q.len(),
            volume,
            nr,
            nc,
            q,
            wr,
            wc,
            pr,
            pc,
            pp,
            d,
            alpha_star,
            gamma,
            stiffness,
        })
    }

    /// Volume-averaged strain `W_C^T χ`, tensor components.
    pub fn average_strain(&self, chi: &DVector<f64>) -> Result<Vector6> {
        if chi.len() != 3 * self.n {
            return Err(Error::DimensionMismatch {
                expected: 3 * self.n,
                got: chi.len(),
            });
        }
        let s = self.wc.transpose() * chi;
        Ok(Vector6::from_iterator(s.iter().copied()))
    }
}

/// Element stiffness `K_h^E` for stabilization factor `gamma`.
pub fn element_stiffness(
    mesh: &PolyMesh,
    e: usize,
    material: &Material,
    gamma: f64,
    mode: MomentMode,
) -> Result<DMatrix<f64>> {
    Ok(ElementOperators::new(mesh, e, material, gamma, mode)?.stiffness)
}

/// Element-average stress `C : (W_C^T χ)` in (11, 22, 33, 12, 23, 31) order.
pub fn element_average_stress(ops: &ElementOperators, material: &Material, chi: &DVector<f64>) -> Result<Vector6> {
    Ok(material.stress(&ops.average_strain(chi)?))
}
