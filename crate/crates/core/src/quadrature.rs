//! Nodal quadrature on faces and cells, face moments of the vertex
//! barycentric coordinates, and high-order cell rules for error integrals.

use serde::{Deserialize, Serialize};

use crate::geometry::{Face, PolyMesh};
use crate::{Error, Point3, Result};

/// How `∫_F φ_i ds` is evaluated on a face.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum MomentMode {
    /// Area of the vertex quadrilateral (vertex, incident edge midpoints, face centroid).
    #[default]
    Nodal,
    /// Closed-form moment of the boundary-moment barycentric coordinates.
    Moment,
}

impl std::fmt::Display for MomentMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            MomentMode::Nodal => "nodal",
            MomentMode::Moment => "moment",
        })
    }
}

impl std::str::FromStr for MomentMode {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "nodal" => Ok(MomentMode::Nodal),
            "moment" => Ok(MomentMode::Moment),
            other => Err(format!("unknown moment mode '{other}' (expected nodal or moment)")),
        }
    }
}

/// Weights attached to mesh vertices.
#[derive(Debug, Clone, PartialEq)]
pub struct NodalRule {
    pub vertices: Vec<usize>,
    pub weights: Vec<f64>,
}

impl NodalRule {
    pub fn integrate(&self, coords: &[Point3], f: impl Fn(&Point3) -> f64) -> f64 {
        self.vertices
            .iter()
            .zip(&self.weights)
            .map(|(&v, w)| w * f(&coords[v]))
            .sum()
    }

    pub fn total_weight(&self) -> f64 {
        self.weights.iter().sum()
    }
}

/// Points and weights for volumetric integration over one element.
#[derive(Debug, Clone, PartialEq)]
pub struct CellRule {
    pub points: Vec<Point3>,
    pub weights: Vec<f64>,
}

impl CellRule {
    pub fn integrate(&self, f: impl Fn(&Point3) -> f64) -> f64 {
        self.points.iter().zip(&self.weights).map(|(p, w)| w * f(p)).sum()
    }

    pub fn total_weight(&self) -> f64 {
        self.weights.iter().sum()
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

fn signed_triangle_area(a: &Point3, b: &Point3, c: &Point3, normal: &Point3) -> f64 {
    0.5 * (b - a).cross(&(c - a)).dot(normal)
}

fn signed_tet_volume(o: &Point3, a: &Point3, b: &Point3, c: &Point3) -> f64 {
    (a - o).dot(&(b - o).cross(&(c - o))) / 6.0
}

/// Per-vertex quadrilateral areas of a face, in loop order.
fn vertex_quad_areas(face: &Face, coords: &[Point3]) -> Vec<f64> {
    let m = face.len();
    let c = face.centroid;
    (0..m)
        .map(|j| {
            let p = coords[face.vertices[j]];
            let next = 0.5 * (p + coords[face.vertices[(j + 1) % m]]);
            let prev = 0.5 * (p + coords[face.vertices[(j + m - 1) % m]]);
            signed_triangle_area(&p, &next, &c, &face.normal)
                + signed_triangle_area(&p, &c, &prev, &face.normal)
        })
        .collect()
}

/// Nodal rule on a face: each vertex weight is the area of the quadrilateral
/// spanned by the vertex, its two incident edge midpoints and the face centroid.
pub fn surface_nodal_rule(face: &Face, coords: &[Point3]) -> NodalRule {
    NodalRule {
        vertices: face.vertices.clone(),
        weights: vertex_quad_areas(face, coords),
    }
}

/// Face moments `∫_F φ_i ds` for every vertex of the face, in loop order.
pub fn face_phi_moments(face: &Face, coords: &[Point3], mode: MomentMode) -> Vec<f64> {
    match mode {
        MomentMode::Nodal => vertex_quad_areas(face, coords),
        MomentMode::Moment => {
            let m = face.len();
            let shift = face.centroid - face.vertex_mean;
            (0..m)
                .map(|i| {
                    let prev = coords[face.vertices[(i + m - 1) % m]];
                    let next = coords[face.vertices[(i + 1) % m]];
                    // |e_i| n_i + |e_{i+1}| n_{i+1} with outward in-plane edge
                    // normals collapses to (x_{i+1} - x_{i-1}) x n_F.
                    let lever = (next - prev).cross(&face.normal);
                    face.area / m as f64 + 0.5 * lever.dot(&shift)
                })
                .collect()
        }
    }
}

/// `∫_F φ_v ds` for global vertex `vertex` of `face`.
pub fn face_phi_moment(face: &Face, coords: &[Point3], vertex: usize, mode: MomentMode) -> Result<f64> {
    let i = face
        .vertices
        .iter()
        .position(|&v| v == vertex)
        .ok_or_else(|| Error::InvalidParameter(format!("vertex {vertex} is not on the face")))?;
    Ok(face_phi_moments(face, coords, mode)[i])
}

/// Nodal rule on an element: each vertex weight is the volume of the corner
/// polyhedron bounded by the vertex, the element centroid, the centroids of
/// its incident faces and the midpoints of its incident edges.
pub fn volume_nodal_rule(mesh: &PolyMesh, e: usize) -> Result<NodalRule> {
    let el = mesh.element(e);
    let coords = mesh.vertices();
    let xe = el.centroid;
    let mut weights = vec![0.0; el.num_vertices()];
    for (of, local) in el.faces.iter().zip(&el.local_loops) {
        let c = mesh.face(of.face).centroid;
        let m = local.len();
        for j in 0..m {
            let p = coords[el.vertices[local[j]]];
            let next = 0.5 * (p + coords[el.vertices[local[(j + 1) % m]]]);
            let prev = 0.5 * (p + coords[el.vertices[local[(j + m - 1) % m]]]);
            weights[local[j]] +=
                signed_tet_volume(&xe, &p, &next, &c) + signed_tet_volume(&xe, &p, &c, &prev);
        }
    }
    if let Some((i, &w)) = weights.iter().enumerate().find(|(_, &w)| w <= 0.0) {
        return Err(Error::NotStarShaped {
            element: e,
            vertex: el.vertices[i],
            volume: w,
        });
    }
    Ok(NodalRule {
        vertices: el.vertices.clone(),
        weights,
    })
}

/// Product Gauss rule on the reference tetrahedron via the collapsed
/// (Duffy) map; `n` points per direction, exact to polynomial degree `2n - 3`.
#[derive(Debug, Clone)]
pub struct TetRule {
    /// Barycentric-style reference coordinates `(ξ1, ξ2, ξ3)` in the unit simplex.
    pub points: Vec<[f64; 3]>,
    /// Weights normalised to sum to one (fractions of the tetrahedron volume).
    pub weights: Vec<f64>,
}

impl TetRule {
    pub fn collapsed_gauss(n: usize) -> Self {
        let (x, w) = gauss_legendre_unit(n);
        let mut points = Vec::with_capacity(n * n * n);
        let mut weights = Vec::with_capacity(n * n * n);
        for (u, wu) in x.iter().zip(&w) {
            for (v, wv) in x.iter().zip(&w) {
                for (t, wt) in x.iter().zip(&w) {
                    points.push([*u, (1.0 - u) * v, (1.0 - u) * (1.0 - v) * t]);
                    weights.push(6.0 * wu * wv * wt * (1.0 - u) * (1.0 - u) * (1.0 - v));
                }
            }
        }
        Self { points, weights }
    }

    /// Smallest rule exact for polynomials of `degree` on each tetrahedron.
    pub fn for_degree(degree: usize) -> Self {
        Self::collapsed_gauss(((degree + 4) / 2).max(1))
    }

    pub fn degree(&self) -> usize {
        let n = (self.points.len() as f64).cbrt().round() as usize;
        (2 * n).saturating_sub(3)
    }

    /// Appends the mapped rule for the tetrahedron `(a, b, c, d)`.
    pub fn push_mapped(&self, rule: &mut CellRule, a: &Point3, b: &Point3, c: &Point3, d: &Point3) {
        let vol = signed_tet_volume(a, b, c, d);
        for (xi, w) in self.points.iter().zip(&self.weights) {
            rule.points.push(a + (b - a) * xi[0] + (c - a) * xi[1] + (d - a) * xi[2]);
            rule.weights.push(w * vol);
        }
    }
}

/// Gauss-Legendre nodes and weights on `[0, 1]`.
pub fn gauss_legendre_unit(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n {
        // Newton iteration from the Chebyshev-like initial guess.
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 1.0;
        for _ in 0..100 {
            let (p, d) = legendre(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre(n, x);
        dp = if d != 0.0 { d } else { dp };
        nodes[i] = 0.5 * (1.0 - x);
        weights[i] = 1.0 / ((1.0 - x * x) * dp * dp);
    }
    (nodes, weights)
}

fn legendre(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let k = k as f64;
        let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
    }
    let n = n as f64;
    (p1, n * (x * p1 - p0) / (x * x - 1.0))
}

/// Cell rule for an element: each face is fanned about its centroid, each
/// triangle is coned to the element centroid, and a tetrahedral product
/// Gauss rule exact to `degree` is applied on every tetrahedron.
pub fn high_order_cell_rule(mesh: &PolyMesh, e: usize, degree: usize) -> Result<CellRule> {
    cell_rule_with(mesh, e, &TetRule::for_degree(degree))
}

/// As [`high_order_cell_rule`] with a prebuilt tetrahedral rule.
pub fn cell_rule_with(mesh: &PolyMesh, e: usize, tet: &TetRule) -> Result<CellRule> {
    let el = mesh.element(e);
    let coords = mesh.vertices();
    let xe = el.centroid;
    let mut rule = CellRule {
        points: Vec::new(),
        weights: Vec::new(),
    };
    let tol = 1e-12 * el.volume;
    for (of, local) in el.faces.iter().zip(&el.local_loops) {
        let c = mesh.face(of.face).centroid;
        let m = local.len();
        for j in 0..m {
            let a = coords[el.vertices[local[j]]];
            let b = coords[el.vertices[local[(j + 1) % m]]];
            let vol = signed_tet_volume(&xe, &c, &a, &b);
            if vol < -tol {
                return Err(Error::NotStarShaped {
                    element: e,
                    vertex: el.vertices[local[j]],
                    volume: vol,
                });
            }
            tet.push_mapped(&mut rule, &xe, &c, &a, &b);
        }
    }
    Ok(rule)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::tests::unit_cube_raw;
    use crate::geometry::{PolyMesh, RawMesh};
    use approx::assert_relative_eq;
    use proptest::prelude::*;
    use std::collections::BTreeMap;

    fn planar_face(points: Vec<Point3>) -> (Face, Vec<Point3>) {
        let ids = (0..points.len()).collect();
        (Face::new(ids, &points).unwrap(), points)
    }

    fn unit_square() -> (Face, Vec<Point3>) {
        planar_face(vec![
            Point3::new(0.0, 0.0, 0.0),
            Point3::new(1.0, 0.0, 0.0),
            Point3::new(1.0, 1.0, 0.0),
            Point3::new(0.0, 1.0, 0.0),
        ])
    }

    /// Shoelace area and centroid of a planar loop given in 2D coordinates.
    fn shoelace(pts: &[(f64, f64)]) -> (f64, f64, f64) {
        let m = pts.len();
        let (mut a, mut cx, mut cy) = (0.0, 0.0, 0.0);
        for i in 0..m {
            let (x0, y0) = pts[i];
            let (x1, y1) = pts[(i + 1) % m];
            let cr = x0 * y1 - x1 * y0;
            a += cr;
            cx += (x0 + x1) * cr;
            cy += (y0 + y1) * cr;
        }
        (a / 2.0, cx / (3.0 * a), cy / (3.0 * a))
    }

    #[test]
    fn unit_square_nodal_weights() {
        let (face, coords) = unit_square();
        let rule = surface_nodal_rule(&face, &coords);
        for w in &rule.weights {
            assert_relative_eq!(*w, 0.25, epsilon = 1e-15);
        }
        assert_relative_eq!(rule.integrate(&coords, |p| p.x), 0.5, epsilon = 1e-15);
    }

    #[test]
    fn regular_hexagon_weights() {
        let pts: Vec<Point3> = (0..6)
            .map(|k| {
                let t = std::f64::consts::PI / 3.0 * k as f64;
                Point3::new(t.cos(), t.sin(), 0.0)
            })
            .collect();
        let (face, coords) = planar_face(pts);
        let rule = surface_nodal_rule(&face, &coords);
        for w in &rule.weights {
            assert_relative_eq!(*w, face.area / 6.0, epsilon = 1e-14);
        }
    }

    #[test]
    fn unit_square_moments_both_modes() {
        let (face, coords) = unit_square();
        for mode in [MomentMode::Nodal, MomentMode::Moment] {
            for v in 0..4 {
                let m = face_phi_moment(&face, &coords, v, mode).unwrap();
                assert_relative_eq!(m, 0.25, epsilon = 1e-15);
            }
        }
        assert!(face_phi_moment(&face, &coords, 9, MomentMode::Nodal).is_err());
    }

    #[test]
    fn right_triangle_moment_mode() {
        let (face, coords) = planar_face(vec![
            Point3::new(0.0, 0.0, 0.0),
            Point3::new(1.0, 0.0, 0.0),
            Point3::new(0.0, 1.0, 0.0),
        ]);
        for m in face_phi_moments(&face, &coords, MomentMode::Moment) {
            assert_relative_eq!(m, 1.0 / 6.0, epsilon = 1e-15);
        }
    }

    #[test]
    fn nodal_rule_matches_nodal_moments() {
        let (face, coords) = planar_face(vec![
            Point3::new(0.0, 0.0, 0.0),
            Point3::new(2.0, 0.0, 0.0),
            Point3::new(2.5, 1.5, 0.0),
            Point3::new(1.0, 2.2, 0.0),
            Point3::new(-0.3, 1.0, 0.0),
        ]);
        let rule = surface_nodal_rule(&face, &coords);
        assert_eq!(rule.weights, face_phi_moments(&face, &coords, MomentMode::Nodal));
    }

    #[test]
    fn unit_cube_volume_weights() {
        let mesh = PolyMesh::build(unit_cube_raw()).unwrap();
        let rule = volume_nodal_rule(&mesh, 0).unwrap();
        for w in &rule.weights {
            assert_relative_eq!(*w, 0.125, epsilon = 1e-15);
        }
    }

    #[test]
    fn right_tet_first_moment() {
        let raw = RawMesh {
            vertices: vec![
                Point3::new(0.0, 0.0, 0.0),
                Point3::new(1.0, 0.0, 0.0),
                Point3::new(0.0, 1.0, 0.0),
                Point3::new(0.0, 0.0, 1.0),
            ],
            faces: vec![vec![0, 2, 1], vec![0, 1, 3], vec![0, 3, 2], vec![1, 2, 3]],
            elements: vec![vec![0, 1, 2, 3]],
            face_tags: BTreeMap::new(),
        };
        let mesh = PolyMesh::build(raw).unwrap();
        let rule = volume_nodal_rule(&mesh, 0).unwrap();
        assert_relative_eq!(rule.total_weight(), 1.0 / 6.0, epsilon = 1e-15);
        assert_relative_eq!(rule.integrate(mesh.vertices(), |p| p.x), 1.0 / 24.0, epsilon = 1e-15);
    }

    #[test]
    fn cube_high_order_rule() {
        let mesh = PolyMesh::build(unit_cube_raw()).unwrap();
        let rule = high_order_cell_rule(&mesh, 0, 4).unwrap();
        assert_eq!(rule.len(), 6 * 4 * 64);
        assert_relative_eq!(rule.integrate(|_| 1.0), 1.0, epsilon = 1e-12);
        assert_relative_eq!(rule.integrate(|p| p.x * p.x), 1.0 / 3.0, epsilon = 1e-12);
        assert_relative_eq!(
            rule.integrate(|p| p.x * p.x * p.y * p.y),
            1.0 / 9.0,
            epsilon = 1e-12
        );
    }

    fn factorial(n: u32) -> f64 {
        (1..=n).map(f64::from).product()
    }

    #[test]
    fn reference_tet_monomials_exact_to_degree_five() {
        let rule = TetRule::collapsed_gauss(4);
        assert_eq!(rule.degree(), 5);
        for a in 0..=5u32 {
            for b in 0..=(5 - a) {
                for c in 0..=(5 - a - b) {
                    let exact = factorial(a) * factorial(b) * factorial(c) / factorial(a + b + c + 3);
                    let got: f64 = rule
                        .points
                        .iter()
                        .zip(&rule.weights)
                        .map(|(p, w)| w / 6.0 * p[0].powi(a as i32) * p[1].powi(b as i32) * p[2].powi(c as i32))
                        .sum();
                    assert_relative_eq!(got, exact, max_relative = 1e-13);
                }
            }
        }
    }

    #[test]
    fn gauss_legendre_sums() {
        for n in 1..8 {
            let (x, w) = gauss_legendre_unit(n);
            assert_relative_eq!(w.iter().sum::<f64>(), 1.0, epsilon = 1e-14);
            let mean: f64 = x.iter().zip(&w).map(|(x, w)| x * w).sum();
            assert_relative_eq!(mean, 0.5, epsilon = 1e-14);
        }
    }

    fn linear_exactness(pts2: Vec<(f64, f64)>, frame: [Point3; 3], coef: [f64; 4]) {
        let [origin, e1, e2] = frame;
        let pts: Vec<Point3> = pts2.iter().map(|(x, y)| origin + e1 * *x + e2 * *y).collect();
        let (face, coords) = planar_face(pts.clone());
        let (area, cx, cy) = shoelace(&pts2);
        let centroid = origin + e1 * cx + e2 * cy;
        let f = |p: &Point3| coef[0] + coef[1] * p.x + coef[2] * p.y + coef[3] * p.z;
        let exact = area * f(&centroid);
        for mode in [MomentMode::Nodal, MomentMode::Moment] {
            let moments = face_phi_moments(&face, &coords, mode);
            let got: f64 = moments.iter().zip(&coords).map(|(m, p)| m * f(p)).sum();
            let scale = area * (coef.iter().map(|c| c.abs()).sum::<f64>() * 10.0);
            assert!((got - exact).abs() <= 1e-12 * scale, "{mode}: {got} vs {exact}");
            assert_relative_eq!(moments.iter().sum::<f64>(), area, max_relative = 1e-12);
        }
    }

    #[test]
    fn nonconvex_face_linear_exactness() {
        let l_shape = vec![(0.0, 0.0), (2.0, 0.0), (2.0, 1.0), (1.0, 1.0), (1.0, 2.0), (0.0, 2.0)];
        let frame = [
            Point3::new(0.3, -0.2, 1.0),
            Point3::new(0.6, 0.8, 0.0),
            Point3::new(0.0, 0.0, 1.0),
        ];
        linear_exactness(l_shape, frame, [0.5, 1.0, -2.0, 3.0]);
    }

    proptest! {
        #[test]
        fn convex_face_moments_integrate_linear_fields(
            radii in proptest::collection::vec(0.3f64..1.5, 3..9),
            phase in 0.0f64..6.28,
            tilt in 0.0f64..1.5,
            coef in proptest::array::uniform4(-3.0f64..3.0),
        ) {
            let m = radii.len();
            let pts2: Vec<(f64, f64)> = radii
                .iter()
                .enumerate()
                .map(|(k, r)| {
                    let t = phase + 2.0 * std::f64::consts::PI * k as f64 / m as f64;
                    (r * t.cos(), r * t.sin())
                })
                .collect();
            // Keep the polygon convex enough to be star-shaped about its centroid.
            let e1 = Point3::new(tilt.cos(), 0.0, tilt.sin());
            let e2 = Point3::new(0.0, 1.0, 0.0);
            let frame = [Point3::new(1.0, 2.0, 3.0), e1, e2];
            linear_exactness(pts2, frame, coef);
        }
    }
}
