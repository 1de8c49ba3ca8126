//! Benchmark solutions, discrete error measures and convergence studies.
//!
//! Stress 6-vectors hold tensor components in the order
//! (11, 22, 33, 12, 23, 31).

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use nalgebra::{DVector, Matrix3, Vector3};
use rayon::prelude::*;
use serde::{Serialize, Serializer};

use crate::assembly::{solve_problem, BoundarySelector, ProblemSpec, Solution};
use crate::element::{q_vectors, weight_matrices, Material};
use crate::meshgen::BoxDomain;
use crate::quadrature::{high_order_cell_rule, volume_nodal_rule, MomentMode};
use crate::{Error, Point3, PolyMesh, Result, Vector6};

/// Polynomial degree integrated exactly by the cells rules behind
/// [`stress_error`].
pub const STRESS_RULE_DEGREE: usize = 5;

/// Errors at or below this level count as exact in convergence fits.
pub const EXACT_THRESHOLD: f64 = 1e-9;

/// A closed-form displacement and stress field.
pub trait AnalyticalSolution: Send + Sync {
    fn name(&self) -> &str;
    fn parameters(&self) -> BTreeMap<String, f64>;
    fn displacement(&self, x: &Point3) -> Vector3<f64>;
    fn stress(&self, x: &Point3) -> Vector6;

    /// Traction `σ n` on a surface with unit normal `n`.
    fn traction(&self, x: &Point3, n: &Vector3<f64>) -> Vector3<f64> {
        traction(&self.stress(x), n)
    }
}

/// `σ n` for a stress 6-vector.
pub fn traction(s: &Vector6, n: &Vector3<f64>) -> Vector3<f64> {
    stress_tensor(s) * n
}

pub fn stress_tensor(s: &Vector6) -> Matrix3<f64> {
    Matrix3::new(s[0], s[3], s[5], s[3], s[1], s[4], s[5], s[4], s[2])
}

/// Frobenius inner product of two symmetric tensors given as 6-vectors.
pub fn tensor_dot(a: &Vector6, b: &Vector6) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2] + 2.0 * (a[3] * b[3] + a[4] * b[4] + a[5] * b[5])
}

/// Affine field `u = a + B x` with its constant stress.
#[derive(Debug, Clone, PartialEq)]
pub struct PatchSolution {
    pub offset: Vector3<f64>,
    pub gradient: Matrix3<f64>,
    pub material: Material,
    stress: Vector6,
}

impl PatchSolution {
    pub fn new(offset: Vector3<f64>, gradient: Matrix3<f64>, material: Material) -> Result<Self> {
        material.validate()?;
        let sym = 0.5 * (gradient + gradient.transpose());
        let strain = Vector6::new(sym[(0, 0)], sym[(1, 1)], sym[(2, 2)], sym[(0, 1)], sym[(1, 2)], sym[(2, 0)]);
        Ok(Self {
            offset,
            gradient,
            material,
            stress: material.stress(&strain),
        })
    }

    /// `p = [2x + y + 3z + 1, 3x + 4y + 2z + 2, 4x + 3y + z + 3] / 100`.
    pub fn standard(material: Material) -> Result<Self> {
        let gradient = Matrix3::new(2.0, 1.0, 3.0, 3.0, 4.0, 2.0, 4.0, 3.0, 1.0) / 100.0;
        Self::new(Vector3::new(1.0, 2.0, 3.0) / 100.0, gradient, material)
    }
}

impl AnalyticalSolution for PatchSolution {
    fn name(&self) -> &str {
        "patch"
    }

    fn parameters(&self) -> BTreeMap<String, f64> {
        let mut p = BTreeMap::new();
        for c in 0..3 {
            p.insert(format!("a{}", c + 1), self.offset[c]);
            for d in 0..3 {
                p.insert(format!("b{}{}", c + 1, d + 1), self.gradient[(c, d)]);
            }
        }
        p
    }

    fn displacement(&self, x: &Point3) -> Vector3<f64> {
        self.offset + self.gradient * x
    }

    fn stress(&self, _x: &Point3) -> Vector6 {
        self.stress
    }
}

/// Cantilever of square section `(-1, 1)^2` and length `L` along x3, loaded
/// by a transverse end shear of resultant `F` in the -x2 direction at
/// `x3 = 0` and held at `x3 = L`. The warping contribution is a Fourier
/// series truncated after `nterms` terms.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BeamSolution {
    pub force: f64,
    pub length: f64,
    pub young: f64,
    pub poisson: f64,
    pub nterms: usize,
}

impl Default for BeamSolution {
    fn default() -> Self {
        Self {
            force: 0.1,
            length: 10.0,
            young: 25.0,
            poisson: 0.3,
            nterms: 16,
        }
    }
}

/// `sinh(a x) / cosh(a)` without overflow for large `a`, `|x| <= 1`.
fn sinh_ratio(a: f64, x: f64) -> f64 {
    ((a * (x - 1.0)).exp() - (-a * (x + 1.0)).exp()) / (1.0 + (-2.0 * a).exp())
}

/// `cosh(a x) / cosh(a)` without overflow for large `a`, `|x| <= 1`.
fn cosh_ratio(a: f64, x: f64) -> f64 {
    ((a * (x - 1.0)).exp() + (-a * (x + 1.0)).exp()) / (1.0 + (-2.0 * a).exp())
}

impl BeamSolution {
    pub fn new(force: f64, length: f64, young: f64, poisson: f64, nterms: usize) -> Result<Self> {
        let beam = Self {
            force,
            length,
            young,
            poisson,
            nterms,
        };
        beam.material()?;
        if nterms == 0 || !(length > 0.0) || !force.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "beam needs nterms >= 1, positive length and finite force (got {nterms}, {length}, {force})"
            )));
        }
        Ok(beam)
    }

    pub fn material(&self) -> Result<Material> {
        Material::isotropic(self.young, self.poisson)
    }

    pub fn domain(&self) -> BoxDomain {
        BoxDomain {
            min: Point3::new(-1.0, -1.0, 0.0),
            max: Point3::new(1.0, 1.0, self.length),
        }
    }

    /// Common factor of the series terms once written in `a = nπ`.
    fn series_scale(&self) -> f64 {
        3.0 * self.force * self.poisson / (2.0 * (1.0 + self.poisson))
    }

    /// Signed coefficients `(-1)^n` and arguments `nπ`.
    fn terms(&self) -> impl Iterator<Item = (f64, f64)> {
        (1..=self.nterms).map(|n| (if n % 2 == 0 { 1.0 } else { -1.0 }, n as f64 * PI))
    }

    /// Warping function: the x2-antiderivative of the shear stress σ23,
    /// vanishing at x2 = 0.
    pub fn warping(&self, x: &Point3) -> f64 {
        let (f, nu) = (self.force, self.poisson);
        let (x1, x2) = (x.x, x.y);
        let series: f64 = self
            .terms()
            .map(|(sign, a)| sign / (a * a * a) * (a * x1).cos() * sinh_ratio(a, x2))
            .sum();
        3.0 * f * (x2 - x2.powi(3) / 3.0) / 8.0 + f * nu * (3.0 * x1 * x1 - 1.0) * x2 / (8.0 * (1.0 + nu))
            - self.series_scale() * series
    }
}

impl AnalyticalSolution for BeamSolution {
    fn name(&self) -> &str {
        "beam"
    }

    fn parameters(&self) -> BTreeMap<String, f64> {
        BTreeMap::from([
            ("force".to_string(), self.force),
            ("length".to_string(), self.length),
            ("young".to_string(), self.young),
            ("poisson".to_string(), self.poisson),
            ("nterms".to_string(), self.nterms as f64),
        ])
    }

    fn displacement(&self, x: &Point3) -> Vector3<f64> {
        let (f, e, nu) = (self.force, self.young, self.poisson);
        let (x1, x2, x3) = (x.x, x.y, x.z);
        Vector3::new(
            -3.0 * f * nu / (4.0 * e) * x1 * x2 * x3,
            f / (8.0 * e) * (3.0 * nu * x3 * (x1 * x1 - x2 * x2) - x3.powi(3)),
            f / (8.0 * e) * (3.0 * x2 * x3 * x3 + nu * x2 * (x2 * x2 - 3.0 * x1 * x1))
                + 2.0 * (1.0 + nu) / e * self.warping(x),
        )
    }

    fn stress(&self, x: &Point3) -> Vector6 {
        let (f, nu) = (self.force, self.poisson);
        let (x1, x2, x3) = (x.x, x.y, x.z);
        let k = self.series_scale();
        let mut s31 = 0.0;
        let mut s23_series = 0.0;
        for (sign, a) in self.terms() {
            let c = sign / (a * a);
            s31 += c * (a * x1).sin() * sinh_ratio(a, x2);
            s23_series += c * (a * x1).cos() * cosh_ratio(a, x2);
        }
        let s23 = 3.0 * f * (1.0 - x2 * x2) / 8.0 + f * nu * (3.0 * x1 * x1 - 1.0) / (8.0 * (1.0 + nu)) - k * s23_series;
        Vector6::new(0.0, 0.0, 0.75 * f * x2 * x3, 0.0, s23, k * s31)
    }
}

/// A benchmark: exact solution plus the boundary value problem it solves.
#[derive(Debug, Clone)]
pub enum Benchmark {
    /// Affine field prescribed on the whole boundary, no loads.
    Patch(PatchSolution),
    /// End-loaded cantilever on `(-1,1)^2 x (0,L)`: exact traction on the
    /// `zmin` face, exact displacement on the `zmax` face, other faces free.
    Beam(BeamSolution),
}

impl Benchmark {
    pub fn solution(&self) -> &dyn AnalyticalSolution {
        match self {
            Benchmark::Patch(p) => p,
            Benchmark::Beam(b) => b,
        }
    }

    pub fn material(&self) -> Result<Material> {
        match self {
            Benchmark::Patch(p) => Ok(p.material),
            Benchmark::Beam(b) => b.material(),
        }
    }

    pub fn problem(&self, gamma: f64) -> Result<ProblemSpec> {
        let material = self.material()?;
        Ok(match self.clone() {
            Benchmark::Patch(p) => {
                let p = Arc::new(p);
                ProblemSpec::new(material, gamma, move |x| p.displacement(x))
            }
            Benchmark::Beam(b) => ProblemSpec::new(material, gamma, move |x| b.displacement(x))
                .with_displacement_boundary(BoundarySelector::tags(["zmax"]))
                .with_traction(BoundarySelector::tags(["zmin"]), move |x, n| b.traction(x, n)),
        })
    }
}

/// Errors of one discrete solution.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ErrorReport {
    pub e_u: f64,
    pub e_sigma: f64,
    /// Largest element diameter.
    pub h: f64,
    pub num_elements: usize,
    pub num_dofs: usize,
    pub gamma: f64,
    pub mode: MomentMode,
}

fn nodal_value(u: &DVector<f64>, v: usize) -> Vector3<f64> {
    u.fixed_rows::<3>(3 * v).into_owned()
}

fn check_len(mesh: &PolyMesh, u: &DVector<f64>) -> Result<()> {
    if u.len() != mesh.num_dofs() {
        return Err(Error::DimensionMismatch {
            expected: mesh.num_dofs(),
            got: u.len(),
        });
    }
    Ok(())
}

/// Relative L2 displacement error, both fields sampled at the vertices and
/// integrated with the nodal rule of each element.
pub fn displacement_error(mesh: &PolyMesh, u: &DVector<f64>, exact: &dyn AnalyticalSolution) -> Result<f64> {
    check_len(mesh, u)?;
    let parts = (0..mesh.num_elements())
        .into_par_iter()
        .map(|e| {
            let rule = volume_nodal_rule(mesh, e)?;
            let mut num = 0.0;
            let mut den = 0.0;
            for (&v, &w) in rule.vertices.iter().zip(&rule.weights) {
                let ue = exact.displacement(mesh.vertex(v));
                num += w * (ue - nodal_value(u, v)).norm_squared();
                den += w * ue.norm_squared();
            }
            Ok((num, den))
        })
        .collect::<Result<Vec<_>>>()?;
    let (num, den) = parts.iter().fold((0.0, 0.0), |a, b| (a.0 + b.0, a.1 + b.1));
    if den == 0.0 {
        return Err(Error::ZeroNorm("displacement_error"));
    }
    Ok((num / den).sqrt())
}

/// Average strain of every element from its boundary displacements.
pub fn element_strains(mesh: &PolyMesh, u: &DVector<f64>, mode: MomentMode) -> Result<Vec<Vector6>> {
    check_len(mesh, u)?;
    Ok((0..mesh.num_elements())
        .into_par_iter()
        .map(|e| {
            let (_, wc) = weight_matrices(&q_vectors(mesh, e, mode));
            let mut strain = Vector6::zeros();
            for (i, &v) in mesh.element(e).vertices.iter().enumerate() {
                for c in 0..3 {
                    strain += wc.row(3 * i + c).transpose().fixed_rows::<6>(0) * u[3 * v + c];
                }
            }
            strain
        })
        .collect())
}

/// Piecewise-constant stress of the discrete solution.
pub fn element_stresses(
    mesh: &PolyMesh,
    u: &DVector<f64>,
    material: &Material,
    mode: MomentMode,
) -> Result<Vec<Vector6>> {
    Ok(element_strains(mesh, u, mode)?.iter().map(|e| material.stress(e)).collect())
}

/// Relative L2 stress error of the element-average stresses, integrated
/// with high-order cell rules.
pub fn stress_error(
    mesh: &PolyMesh,
    u: &DVector<f64>,
    exact: &dyn AnalyticalSolution,
    material: &Material,
    mode: MomentMode,
) -> Result<f64> {
    let stresses = element_stresses(mesh, u, material, mode)?;
    let parts = (0..mesh.num_elements())
        .into_par_iter()
        .map(|e| {
            let rule = high_order_cell_rule(mesh, e, STRESS_RULE_DEGREE)?;
            let mut num = 0.0;
            let mut den = 0.0;
            for (x, &w) in rule.points.iter().zip(&rule.weights) {
                let s = exact.stress(x);
                let d = s - stresses[e];
                num += w * tensor_dot(&d, &d);
                den += w * tensor_dot(&s, &s);
            }
            Ok((num, den))
        })
        .collect::<Result<Vec<_>>>()?;
    let (num, den) = parts.iter().fold((0.0, 0.0), |a, b| (a.0 + b.0, a.1 + b.1));
    if den == 0.0 {
        return Err(Error::ZeroNorm("stress_error"));
    }
    Ok((num / den).sqrt())
}

/// Solves a benchmark on a mesh and measures both errors.
pub fn evaluate(mesh: &PolyMesh, benchmark: &Benchmark, gamma: f64, mode: MomentMode) -> Result<(Solution, ErrorReport)> {
    let problem = benchmark.problem(gamma)?;
    let solution = solve_problem(mesh, &problem, mode)?;
    let exact = benchmark.solution();
    let report = ErrorReport {
        e_u: displacement_error(mesh, &solution.displacement, exact)?,
        e_sigma: stress_error(mesh, &solution.displacement, exact, &problem.material, mode)?,
        h: mesh.max_element_diameter(),
        num_elements: mesh.num_elements(),
        num_dofs: mesh.num_dofs(),
        gamma,
        mode,
    };
    Ok((solution, report))
}

/// Observed convergence rate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Rate {
    /// Every error is at round-off level; no rate is defined.
    Exact,
    Fitted(f64),
}

impl Rate {
    pub fn value(&self) -> Option<f64> {
        match self {
            Rate::Exact => None,
            Rate::Fitted(r) => Some(*r),
        }
    }
}

impl fmt::Display for Rate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Rate::Exact => f.write_str("exact"),
            Rate::Fitted(r) => write!(f, "{r:.4}"),
        }
    }
}

impl Serialize for Rate {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Rate::Exact => s.serialize_str("exact"),
            Rate::Fitted(r) => s.serialize_f64(*r),
        }
    }
}

/// Least-squares slope of `log(error)` against `log(h)`.
pub fn fit_rate(h: &[f64], errors: &[f64]) -> Result<Rate> {
    if h.len() != errors.len() {
        return Err(Error::DimensionMismatch {
            expected: h.len(),
            got: errors.len(),
        });
    }
    if h.len() < 2 {
        return Err(Error::InvalidParameter(format!(
            "a rate needs at least 2 levels, got {}",
            h.len()
        )));
    }
    if errors.iter().all(|&e| e <= EXACT_THRESHOLD) {
        return Ok(Rate::Exact);
    }
    if errors.iter().chain(h).any(|&v| !(v > 0.0)) {
        return Err(Error::InvalidParameter("rates need positive sizes and errors".into()));
    }
    let xs: Vec<f64> = h.iter().map(|v| v.ln()).collect();
    let ys: Vec<f64> = errors.iter().map(|v| v.ln()).collect();
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    if sxx == 0.0 {
        return Err(Error::InvalidParameter("all levels have the same mesh size".into()));
    }
    Ok(Rate::Fitted(sxy / sxx))
}

/// Per-level errors and fitted rates.
#[derive(Debug, Clone, Serialize)]
pub struct ConvergenceStudy {
    pub levels: Vec<ErrorReport>,
    pub slope_u: Rate,
    pub slope_sigma: Rate,
}

pub fn convergence_study(
    benchmark: &Benchmark,
    meshes: &[PolyMesh],
    gamma: f64,
    mode: MomentMode,
) -> Result<ConvergenceStudy> {
    if meshes.len() < 2 {
        return Err(Error::InvalidParameter(format!(
            "a convergence study needs at least 2 meshes, got {}",
            meshes.len()
        )));
    }
    let levels = meshes
        .iter()
        .map(|m| evaluate(m, benchmark, gamma, mode).map(|(_, r)| r))
        .collect::<Result<Vec<_>>>()?;
    let h: Vec<f64> = levels.iter().map(|r| r.h).collect();
    let eu: Vec<f64> = levels.iter().map(|r| r.e_u).collect();
    let es: Vec<f64> = levels.iter().map(|r| r.e_sigma).collect();
    Ok(ConvergenceStudy {
        slope_u: fit_rate(&h, &eu)?,
        slope_sigma: fit_rate(&h, &es)?,
        levels,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::meshgen::hex_mesh;
    use approx::assert_relative_eq;

    fn iso() -> Material {
        Material::isotropic(1.0, 0.3).unwrap()
    }

    #[test]
    fn standard_patch_field() {
        let p = PatchSolution::standard(iso()).unwrap();
        let u = p.displacement(&Point3::new(1.0, 1.0, 1.0));
        assert_relative_eq!(u, Vector3::new(0.07, 0.11, 0.11), epsilon = 1e-15);
    }

    #[test]
    fn skew_gradient_is_stress_free() {
        let skew = Matrix3::new(0.0, 0.3, -0.2, -0.3, 0.0, 0.1, 0.2, -0.1, 0.0);
        let p = PatchSolution::new(Vector3::new(1.0, 0.0, 0.0), skew, iso()).unwrap();
        assert!(p.stress(&Point3::zeros()).norm() < 1e-16);
    }

    #[test]
    fn identity_gradient_stress() {
        let mat = Material::isotropic(2.0, 0.25).unwrap();
        let (l, m) = mat.lame().unwrap();
        let p = PatchSolution::new(Vector3::zeros(), Matrix3::identity(), mat).unwrap();
        let s = p.stress(&Point3::zeros());
        assert_relative_eq!(s, Vector6::new(1.0, 1.0, 1.0, 0.0, 0.0, 0.0) * (3.0 * l + 2.0 * m), epsilon = 1e-14);
    }

    #[test]
    fn beam_point_values() {
        let beam = BeamSolution::default();
        assert_eq!(beam.displacement(&Point3::zeros()), Vector3::zeros());
        let tip = beam.displacement(&Point3::new(0.0, 0.0, 10.0));
        assert_relative_eq!(tip.y, -0.5, epsilon = 1e-15);
        assert_relative_eq!(beam.stress(&Point3::new(0.0, 1.0, 5.0))[2], 0.375, epsilon = 1e-15);
    }

    #[test]
    fn beam_lateral_traction_vanishes_with_more_terms() {
        // The lateral traction is the tail of a cosine series for 3x^2 - 1,
        // bounded by the series prefactor over the number of terms.
        let mut previous = f64::INFINITY;
        for nterms in [16, 256, 4096] {
            let beam = BeamSolution {
                nterms,
                ..BeamSolution::default()
            };
            let bound = 3.0 * beam.force * beam.poisson / (2.0 * PI * PI * (1.0 + beam.poisson)) / nterms as f64;
            let mut worst: f64 = 0.0;
            for k in 0..=20 {
                let s = -1.0 + 0.1 * k as f64;
                for (x, n) in [
                    (Point3::new(1.0, s, 3.0), Vector3::x()),
                    (Point3::new(-1.0, s, 7.0), -Vector3::x()),
                    (Point3::new(s, 1.0, 2.0), Vector3::y()),
                    (Point3::new(s, -1.0, 9.0), -Vector3::y()),
                ] {
                    worst = worst.max(beam.traction(&x, &n).norm());
                }
            }
            assert!(worst <= bound, "{nterms}: {worst:e} > {bound:e}");
            assert!(worst < previous);
            previous = worst;
        }
    }

    #[test]
    fn beam_end_load_resultant() {
        // Gauss-Legendre over the end face; the integrand is smooth.
        let beam = BeamSolution::default();
        let (xs, ws) = crate::quadrature::gauss_legendre_unit(40);
        let mut total = Vector3::zeros();
        for (a, wa) in xs.iter().zip(&ws) {
            for (b, wb) in xs.iter().zip(&ws) {
                let x = Point3::new(2.0 * a - 1.0, 2.0 * b - 1.0, 0.0);
                total += 4.0 * wa * wb * beam.traction(&x, &-Vector3::z());
            }
        }
        assert_relative_eq!(total, Vector3::new(0.0, -0.1, 0.0), epsilon = 1e-13);
    }

    #[test]
    fn overflow_safe_ratios() {
        for a in [PI, 5.0 * PI, 300.0 * PI] {
            for x in [-1.0, -0.3, 0.0, 0.7, 1.0] {
                if a < 100.0 {
                    assert_relative_eq!(sinh_ratio(a, x), (a * x).sinh() / a.cosh(), epsilon = 1e-15);
                    assert_relative_eq!(cosh_ratio(a, x), (a * x).cosh() / a.cosh(), epsilon = 1e-15);
                }
                assert!(sinh_ratio(a, x).is_finite() && cosh_ratio(a, x).is_finite());
            }
        }
    }

    #[test]
    fn error_measure_algebra() {
        let mesh = hex_mesh(&BoxDomain::unit(), 2, 2, 2).unwrap();
        let p = PatchSolution::standard(iso()).unwrap();
        let exact = DVector::from_iterator(
            mesh.num_dofs(),
            mesh.vertices().iter().flat_map(|x| p.displacement(x).iter().copied().collect::<Vec<_>>()),
        );
        assert_eq!(displacement_error(&mesh, &exact, &p).unwrap(), 0.0);
        assert_relative_eq!(displacement_error(&mesh, &(&exact * 2.0), &p).unwrap(), 1.0, epsilon = 1e-15);
        let es = stress_error(&mesh, &exact, &p, &iso(), MomentMode::Nodal).unwrap();
        assert!(es < 1e-13, "{es}");

        let zero = PatchSolution::new(Vector3::zeros(), Matrix3::zeros(), iso()).unwrap();
        assert!(matches!(
            displacement_error(&mesh, &exact, &zero),
            Err(Error::ZeroNorm(_))
        ));
        assert!(matches!(
            stress_error(&mesh, &exact, &zero, &iso(), MomentMode::Nodal),
            Err(Error::ZeroNorm(_))
        ));
    }

    #[test]
    fn rate_fit() {
        let h = [1.0, 0.5, 0.25];
        let e: Vec<f64> = h.iter().map(|x| 3.0 * x * x).collect();
        assert_relative_eq!(fit_rate(&h, &e).unwrap().value().unwrap(), 2.0, epsilon = 1e-14);
        assert_eq!(fit_rate(&h, &[1e-14, 1e-15, 0.0]).unwrap(), Rate::Exact);
        assert!(fit_rate(&[1.0], &[1.0]).is_err());
        assert!(fit_rate(&[1.0, 1.0], &[1.0, 0.5]).is_err());
        assert_eq!(serde_json::to_string(&Rate::Exact).unwrap(), "\"exact\"");
    }

    #[test]
    fn patch_passes_on_hex() {
        let mesh = hex_mesh(&BoxDomain::unit(), 3, 3, 3).unwrap();
        let bench = Benchmark::Patch(PatchSolution::standard(iso()).unwrap());
        let (_, r) = evaluate(&mesh, &bench, 1.0, MomentMode::Nodal).unwrap();
        assert!(r.e_u <= 1e-10 && r.e_sigma <= 1e-9, "{r:?}");
    }
}
