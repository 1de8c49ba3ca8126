//! Polyhedral mesh data model.
//!
//! A [`PolyMesh`] stores a global list of planar polygonal faces, each with a
//! fixed orientation (unit normal `n_F`), and elements as bundles of
//! `(face, sign)` pairs such that `sign * n_F` is the outward normal of the
//! face with respect to the element. Geometric measures are computed once at
//! construction and the mesh is immutable afterwards.

use std::collections::{BTreeMap, HashMap, VecDeque};

use nalgebra::Vector3;
use thiserror::Error;

use crate::{Error, Result};

pub type Point3 = Vector3<f64>;

/// Maximum out-of-plane deviation of a face vertex, relative to the face diameter.
pub const PLANARITY_TOL: f64 = 1e-8;
/// Minimum face area, relative to the squared face diameter.
pub const AREA_TOL: f64 = 1e-12;
/// Maximum norm of `sum_F |F| n_{F,E}`, relative to the element surface area.
pub const CLOSURE_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FaceDefect {
    #[error("needs at least 3 vertices, got {0}")]
    TooFewVertices(usize),
    #[error("vertex {0} repeated in loop")]
    RepeatedVertex(usize),
    #[error("degenerate face (area {area:e}, diameter {diameter:e})")]
    Degenerate { area: f64, diameter: f64 },
    #[error("non-planar face: vertex deviates {deviation:e} from the plane (diameter {diameter:e})")]
    NonPlanar { deviation: f64, diameter: f64 },
}

/// Measures of a planar polygon.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FaceGeometry {
    /// Unit normal; the vertex loop is counter-clockwise about it.
    pub normal: Vector3<f64>,
    pub area: f64,
    /// Area centroid.
    pub centroid: Point3,
    /// Arithmetic mean of the vertices.
    pub vertex_mean: Point3,
    pub diameter: f64,
}

/// Computes normal, area, area centroid and vertex mean of a planar polygon
/// given as a vertex loop.
pub fn face_geometry(points: &[Point3]) -> std::result::Result<FaceGeometry, FaceDefect> {
    let m = points.len();
    if m < 3 {
        return Err(FaceDefect::TooFewVertices(m));
    }
    let vertex_mean = points.iter().sum::<Point3>() / m as f64;

    // Newell's method for the loop normal.
    let mut area_vector = Vector3::zeros();
    for k in 0..m {
        let a = points[k] - vertex_mean;
        let b = points[(k + 1) % m] - vertex_mean;
        area_vector += a.cross(&b);
    }
    area_vector *= 0.5;

    let diameter = polygon_diameter(points);
    let area_norm = area_vector.norm();
    if !(area_norm > AREA_TOL * diameter * diameter) {
        return Err(FaceDefect::Degenerate {
            area: area_norm,
            diameter,
        });
    }
    let normal = area_vector / area_norm;

    let deviation = points
        .iter()
        .map(|p| (p - vertex_mean).dot(&normal).abs())
        .fold(0.0, f64::max);
    if deviation > PLANARITY_TOL * diameter {
        return Err(FaceDefect::NonPlanar {
            deviation,
            diameter,
        });
    }

    // Signed triangle fan about the vertex mean; exact for non-convex loops too.
    let mut area = 0.0;
    let mut moment = Vector3::zeros();
    for k in 0..m {
        let a = points[k];
        let b = points[(k + 1) % m];
        let tri = 0.5 * (a - vertex_mean).cross(&(b - vertex_mean)).dot(&normal);
        area += tri;
        moment += tri * (vertex_mean + a + b) / 3.0;
    }

    Ok(FaceGeometry {
        normal,
        area,
        centroid: moment / area,
        vertex_mean,
        diameter,
    })
}

fn polygon_diameter(points: &[Point3]) -> f64 {
    let mut d: f64 = 0.0;
    for (i, p) in points.iter().enumerate() {
        for q in &points[i + 1..] {
            d = d.max((p - q).norm());
        }
    }
    d
}

/// A planar polygonal face with a fixed orientation.
#[derive(Debug, Clone, PartialEq)]
pub struct Face {
    /// Vertex loop, counter-clockwise about `normal`.
    pub vertices: Vec<usize>,
    pub normal: Vector3<f64>,
    pub area: f64,
    pub centroid: Point3,
    pub vertex_mean: Point3,
    pub diameter: f64,
}

impl Face {
    pub fn new(vertices: Vec<usize>, coords: &[Point3]) -> std::result::Result<Self, FaceDefect> {
        for (k, v) in vertices.iter().enumerate() {
            if vertices[k + 1..].contains(v) {
                return Err(FaceDefect::RepeatedVertex(*v));
            }
        }
        let points: Vec<Point3> = vertices.iter().map(|&v| coords[v]).collect();
        let g = face_geometry(&points)?;
        Ok(Self {
            vertices,
            normal: g.normal,
            area: g.area,
            centroid: g.centroid,
            vertex_mean: g.vertex_mean,
            diameter: g.diameter,
        })
    }

    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }
}

/// A face reference inside an element. `sign * n_F` points out of the element.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct OrientedFace {
    pub face: usize,
    pub sign: i8,
}

impl OrientedFace {
    pub fn sign_f64(&self) -> f64 {
        f64::from(self.sign)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Element {
    pub faces: Vec<OrientedFace>,
    /// Global vertex ids in first-appearance order along the outward face loops.
    /// Local vertex `i` of the element is `vertices[i]`.
    pub vertices: Vec<usize>,
    /// Face loops in local vertex ids, ordered counter-clockwise about the
    /// outward normal. Parallel to `faces`.
    pub local_loops: Vec<Vec<usize>>,
    pub volume: f64,
    pub centroid: Point3,
    pub vertex_mean: Point3,
    pub diameter: f64,
}

impl Element {
    pub fn num_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn local_index(&self, global: usize) -> Option<usize> {
        self.vertices.iter().position(|&v| v == global)
    }
}

/// Which elements a face belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FaceAdjacency {
    Boundary(usize),
    Internal(usize, usize),
}

/// Unvalidated mesh description: vertex coordinates, face vertex loops and
/// element face lists. Face orientations are resolved by [`build_connectivity`].
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RawMesh {
    pub vertices: Vec<Point3>,
    pub faces: Vec<Vec<usize>>,
    pub elements: Vec<Vec<usize>>,
    /// Boundary labels, keyed by face id.
    pub face_tags: BTreeMap<usize, String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PolyMesh {
    vertices: Vec<Point3>,
    faces: Vec<Face>,
    elements: Vec<Element>,
    adjacency: Vec<FaceAdjacency>,
    face_tags: BTreeMap<usize, String>,
    flipped_elements: usize,
}

/// Validates a raw mesh and builds face adjacency and element orientations.
pub fn build_connectivity(raw: RawMesh) -> Result<PolyMesh> {
    PolyMesh::build(raw)
}

impl PolyMesh {
    pub fn build(raw: RawMesh) -> Result<Self> {
        let RawMesh {
            vertices,
            faces: raw_faces,
            elements: raw_elements,
            face_tags,
        } = raw;
        let nv = vertices.len();

        if let Some(i) = vertices.iter().position(|p| !p.iter().all(|c| c.is_finite())) {
            return Err(Error::InvalidMesh(format!("vertex {i} has non-finite coordinates")));
        }

        let mut faces = Vec::with_capacity(raw_faces.len());
        for (fid, loop_) in raw_faces.into_iter().enumerate() {
            if let Some(&v) = loop_.iter().find(|&&v| v >= nv) {
                return Err(Error::InvalidFace {
                    face: fid,
                    reason: format!("references vertex {v} but the mesh has {nv} vertices"),
                });
            }
            let face = Face::new(loop_, &vertices).map_err(|d| Error::InvalidFace {
                face: fid,
                reason: d.to_string(),
            })?;
            faces.push(face);
        }

        let mut owners: Vec<Vec<(usize, usize)>> = vec![Vec::new(); faces.len()];
        for (eid, flist) in raw_elements.iter().enumerate() {
            if flist.len() < 4 {
                return Err(Error::InvalidElement {
                    element: eid,
                    reason: format!("needs at least 4 faces, got {}", flist.len()),
                });
            }
            for (k, &f) in flist.iter().enumerate() {
                if f >= faces.len() {
                    return Err(Error::InvalidElement {
                        element: eid,
                        reason: format!("references face {f} but the mesh has {} faces", faces.len()),
                    });
                }
                if flist[..k].contains(&f) {
                    return Err(Error::InvalidElement {
                        element: eid,
                        reason: format!("lists face {f} twice"),
                    });
                }
                owners[f].push((eid, k));
            }
        }
        for (f, o) in owners.iter().enumerate() {
            if o.len() > 2 {
                return Err(Error::NonManifoldFace {
                    face: f,
                    count: o.len(),
                });
            }
        }

        let mut elements = Vec::with_capacity(raw_elements.len());
        let mut flipped_elements = 0;
        for (eid, flist) in raw_elements.iter().enumerate() {
            let (element, flipped) = build_element(eid, flist, &faces, &vertices)?;
            flipped_elements += usize::from(flipped);
            elements.push(element);
        }

        let mut adjacency = Vec::with_capacity(faces.len());
        for (f, o) in owners.iter().enumerate() {
            match o.as_slice() {
                [] => {
                    return Err(Error::InvalidMesh(format!("face {f} belongs to no element")));
                }
                [(e, _)] => adjacency.push(FaceAdjacency::Boundary(*e)),
                [(e1, k1), (e2, k2)] => {
                    let s1 = elements[*e1].faces[*k1].sign;
                    let s2 = elements[*e2].faces[*k2].sign;
                    if s1 == s2 {
                        return Err(Error::InvalidMesh(format!(
                            "internal face {f} has the same orientation in elements {e1} and {e2}"
                        )));
                    }
                    adjacency.push(FaceAdjacency::Internal(*e1, *e2));
                }
                _ => unreachable!(),
            }
        }

        let mut used = vec![false; nv];
        for face in &faces {
            for &v in &face.vertices {
                used[v] = true;
            }
        }
        if let Some(v) = used.iter().position(|u| !u) {
            return Err(Error::InvalidMesh(format!("vertex {v} is not used by any face")));
        }

        for (&f, tag) in &face_tags {
            match adjacency.get(f) {
                None => {
                    return Err(Error::InvalidMesh(format!(
                        "boundary tag '{tag}' refers to missing face {f}"
                    )))
                }
                Some(FaceAdjacency::Internal(..)) => {
                    return Err(Error::InvalidMesh(format!(
                        "boundary tag '{tag}' placed on internal face {f}"
                    )))
                }
                Some(FaceAdjacency::Boundary(_)) => {}
            }
        }

        Ok(Self {
            vertices,
            faces,
            elements,
            adjacency,
            face_tags,
            flipped_elements,
        })
    }

    pub fn vertices(&self) -> &[Point3] {
        &self.vertices
    }

    pub fn faces(&self) -> &[Face] {
        &self.faces
    }

    pub fn elements(&self) -> &[Element] {
        &self.elements
    }

    pub fn vertex(&self, i: usize) -> &Point3 {
        &self.vertices[i]
    }

    pub fn face(&self, f: usize) -> &Face {
        &self.faces[f]
    }

    pub fn element(&self, e: usize) -> &Element {
        &self.elements[e]
    }

    pub fn num_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn num_faces(&self) -> usize {
        self.faces.len()
    }

    pub fn num_elements(&self) -> usize {
        self.elements.len()
    }

    pub fn num_dofs(&self) -> usize {
        3 * self.vertices.len()
    }

    pub fn adjacency(&self, f: usize) -> FaceAdjacency {
        self.adjacency[f]
    }

    pub fn is_boundary_face(&self, f: usize) -> bool {
        matches!(self.adjacency[f], FaceAdjacency::Boundary(_))
    }

    pub fn boundary_faces(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.faces.len()).filter(|&f| self.is_boundary_face(f))
    }

    pub fn internal_face_count(&self) -> usize {
        self.faces.len() - self.boundary_faces().count()
    }

    pub fn face_tags(&self) -> &BTreeMap<usize, String> {
        &self.face_tags
    }

    pub fn face_tag(&self, f: usize) -> Option<&str> {
        self.face_tags.get(&f).map(String::as_str)
    }

    /// Number of elements whose face signs were flipped to make the normals outward.
    pub fn flipped_elements(&self) -> usize {
        self.flipped_elements
    }

    /// Maximum element diameter `h`.
    pub fn max_element_diameter(&self) -> f64 {
        self.elements.iter().map(|e| e.diameter).fold(0.0, f64::max)
    }

    pub fn min_element_diameter(&self) -> f64 {
        self.elements
            .iter()
            .map(|e| e.diameter)
            .fold(f64::INFINITY, f64::min)
    }

    pub fn total_volume(&self) -> f64 {
        self.elements.iter().map(|e| e.volume).sum()
    }

    /// Returns the mesh with every vertex mapped through `f`. Geometry is recomputed.
    pub fn map_vertices(&self, f: impl Fn(&Point3) -> Point3) -> Result<Self> {
        let mut raw = self.to_raw();
        for p in &mut raw.vertices {
            *p = f(p);
        }
        Self::build(raw)
    }

    pub fn to_raw(&self) -> RawMesh {
        RawMesh {
            vertices: self.vertices.clone(),
            faces: self.faces.iter().map(|f| f.vertices.clone()).collect(),
            elements: self
                .elements
                .iter()
                .map(|e| e.faces.iter().map(|of| of.face).collect())
                .collect(),
            face_tags: self.face_tags.clone(),
        }
    }
}

/// Resolves face signs for one element so that the loops form a consistently
/// oriented closed surface with outward normals, then computes its measures.
/// Returns the element and whether the signs were flipped by the volume check.
fn build_element(
    eid: usize,
    flist: &[usize],
    faces: &[Face],
    coords: &[Point3],
) -> Result<(Element, bool)> {
    let bad = |reason: String| Error::InvalidElement { element: eid, reason };

    // Undirected edge -> [(local face index, +1 if the loop traverses min->max)].
    let mut edges: HashMap<(usize, usize), Vec<(usize, i8)>> = HashMap::new();
    for (k, &f) in flist.iter().enumerate() {
        let verts = &faces[f].vertices;
        for j in 0..verts.len() {
            let a = verts[j];
            let b = verts[(j + 1) % verts.len()];
            let (key, dir) = if a < b { ((a, b), 1) } else { ((b, a), -1) };
            edges.entry(key).or_default().push((k, dir));
        }
    }
    let mut sorted_edges: Vec<_> = edges.iter().collect();
    sorted_edges.sort_by_key(|(k, _)| **k);
    for (&(a, b), uses) in &sorted_edges {
        if uses.len() != 2 {
            return Err(bad(format!(
                "surface not closed: edge ({a}, {b}) shared by {} faces",
                uses.len()
            )));
        }
    }

    // Breadth-first sign propagation across shared edges.
    let mut signs: Vec<i8> = vec![0; flist.len()];
    signs[0] = 1;
    let mut queue = VecDeque::from([0usize]);
    let mut neighbours: Vec<Vec<(usize, i8, i8)>> = vec![Vec::new(); flist.len()];
    for (_, uses) in &sorted_edges {
        let (k1, d1) = uses[0];
        let (k2, d2) = uses[1];
        neighbours[k1].push((k2, d1, d2));
        neighbours[k2].push((k1, d2, d1));
    }
    while let Some(k) = queue.pop_front() {
        for &(other, d_self, d_other) in &neighbours[k] {
            // Opposite traversal directions of the shared edge.
            let required = -signs[k] * d_self * d_other;
            if signs[other] == 0 {
                signs[other] = required;
                queue.push_back(other);
            } else if signs[other] != required {
                return Err(bad("face loops cannot be oriented consistently".into()));
            }
        }
    }
    if signs.contains(&0) {
        return Err(bad("surface is not connected".into()));
    }

    let signed_volume = |signs: &[i8]| -> f64 {
        flist
            .iter()
            .zip(signs)
            .map(|(&f, &s)| f64::from(s) * faces[f].area * faces[f].centroid.dot(&faces[f].normal))
            .sum::<f64>()
            / 3.0
    };
    let mut volume = signed_volume(&signs);
    let flipped = volume < 0.0;
    if flipped {
        signs.iter_mut().for_each(|s| *s = -*s);
        volume = -volume;
    }

    let mut surface = 0.0;
    let mut closure = Vector3::zeros();
    for (&f, &s) in flist.iter().zip(&signs) {
        surface += faces[f].area;
        closure += f64::from(s) * faces[f].area * faces[f].normal;
    }
    if closure.norm() > CLOSURE_TOL * surface {
        return Err(bad(format!(
            "surface not closed: |sum |F| n_F| = {:e} relative to area {surface:e}",
            closure.norm()
        )));
    }
    let diameter_guess = surface.sqrt();
    if !(volume > 1e-12 * diameter_guess.powi(3)) {
        return Err(bad(format!("non-positive volume {volume:e}")));
    }

    let oriented: Vec<OrientedFace> = flist
        .iter()
        .zip(&signs)
        .map(|(&face, &sign)| OrientedFace { face, sign })
        .collect();

    let mut vertices: Vec<usize> = Vec::new();
    let mut local_loops = Vec::with_capacity(flist.len());
    for of in &oriented {
        let mut loop_: Vec<usize> = faces[of.face].vertices.clone();
        if of.sign < 0 {
            loop_.reverse();
        }
        let local: Vec<usize> = loop_
            .iter()
            .map(|&v| match vertices.iter().position(|&u| u == v) {
                Some(i) => i,
                None => {
                    vertices.push(v);
                    vertices.len() - 1
                }
            })
            .collect();
        local_loops.push(local);
    }

    let n = vertices.len() as f64;
    let vertex_mean = vertices.iter().map(|&v| coords[v]).sum::<Point3>() / n;

    // First moment from tetrahedra coned to the vertex mean over fan triangles.
    let mut tet_volume = 0.0;
    let mut moment = Vector3::zeros();
    for (of, local) in oriented.iter().zip(&local_loops) {
        let apex = faces[of.face].vertex_mean;
        for j in 0..local.len() {
            let a = coords[vertices[local[j]]];
            let b = coords[vertices[local[(j + 1) % local.len()]]];
            let v = (apex - vertex_mean).dot(&(a - vertex_mean).cross(&(b - vertex_mean))) / 6.0;
            tet_volume += v;
            moment += v * (vertex_mean + apex + a + b) / 4.0;
        }
    }
    let centroid = moment / tet_volume;

    let mut diameter: f64 = 0.0;
    for (i, &u) in vertices.iter().enumerate() {
        for &w in &vertices[i + 1..] {
            diameter = diameter.max((coords[u] - coords[w]).norm());
        }
    }

    Ok((
        Element {
            faces: oriented,
            vertices,
            local_loops,
            volume,
            centroid,
            vertex_mean,
            diameter,
        },
        flipped,
    ))
}

/// `(|E|, x^E, x̄)` for an element of the mesh.
pub fn element_measures(mesh: &PolyMesh, e: usize) -> (f64, Point3, Point3) {
    let el = mesh.element(e);
    (el.volume, el.centroid, el.vertex_mean)
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use approx::assert_relative_eq;

    /// Unit cube `[0,1]^3` as a single element, loops oriented outward.
    pub fn unit_cube_raw() -> RawMesh {
        let vertices = vec![
            Point3::new(0.0, 0.0, 0.0),
            Point3::new(1.0, 0.0, 0.0),
            Point3::new(1.0, 1.0, 0.0),
            Point3::new(0.0, 1.0, 0.0),
            Point3::new(0.0, 0.0, 1.0),
            Point3::new(1.0, 0.0, 1.0),
            Point3::new(1.0, 1.0, 1.0),
            Point3::new(0.0, 1.0, 1.0),
        ];
        let faces = vec![
            vec![0, 3, 2, 1],
            vec![4, 5, 6, 7],
            vec![0, 1, 5, 4],
            vec![2, 3, 7, 6],
            vec![0, 4, 7, 3],
            vec![1, 2, 6, 5],
        ];
        RawMesh {
            vertices,
            faces,
            elements: vec![(0..6).collect()],
            face_tags: BTreeMap::new(),
        }
    }

    #[test]
    fn unit_square_face() {
        let pts = [
            Point3::new(0.0, 0.0, 0.0),
            Point3::new(1.0, 0.0, 0.0),
            Point3::new(1.0, 1.0, 0.0),
            Point3::new(0.0, 1.0, 0.0),
        ];
        let g = face_geometry(&pts).unwrap();
        assert_relative_eq!(g.normal, Vector3::new(0.0, 0.0, 1.0), epsilon = 1e-15);
        assert_relative_eq!(g.area, 1.0, epsilon = 1e-15);
        assert_relative_eq!(g.centroid, Point3::new(0.5, 0.5, 0.0), epsilon = 1e-15);
    }

    #[test]
    fn equilateral_triangle_area() {
        let pts = [
            Point3::new(0.0, 0.0, 0.0),
            Point3::new(1.0, 0.0, 0.0),
            Point3::new(0.5, 3f64.sqrt() / 2.0, 0.0),
        ];
        let g = face_geometry(&pts).unwrap();
        assert_relative_eq!(g.area, 3f64.sqrt() / 4.0, epsilon = 1e-15);
        assert_relative_eq!(g.area, 0.4330127, epsilon = 1e-7);
    }

    #[test]
    fn warped_quad_rejected() {
        let pts = [
            Point3::new(0.0, 0.0, 0.0),
            Point3::new(1.0, 0.0, 0.0),
            Point3::new(1.0, 1.0, 0.0),
            Point3::new(0.0, 1.0, 0.1),
        ];
        assert!(matches!(face_geometry(&pts), Err(FaceDefect::NonPlanar { .. })));
    }

    #[test]
    fn collinear_face_is_degenerate() {
        let pts = [
            Point3::new(0.0, 0.0, 0.0),
            Point3::new(1.0, 0.0, 0.0),
            Point3::new(2.0, 0.0, 0.0),
        ];
        assert!(matches!(face_geometry(&pts), Err(FaceDefect::Degenerate { .. })));
    }

    #[test]
    fn nonconvex_face_centroid() {
        // L-shape: [0,2]x[0,1] plus [0,1]x[1,2]; area 3, centroid (5/6, 5/6).
        let pts = [
            Point3::new(0.0, 0.0, 0.0),
            Point3::new(2.0, 0.0, 0.0),
            Point3::new(2.0, 1.0, 0.0),
            Point3::new(1.0, 1.0, 0.0),
            Point3::new(1.0, 2.0, 0.0),
            Point3::new(0.0, 2.0, 0.0),
        ];
        let g = face_geometry(&pts).unwrap();
        assert_relative_eq!(g.area, 3.0, epsilon = 1e-14);
        assert_relative_eq!(g.centroid, Point3::new(5.0 / 6.0, 5.0 / 6.0, 0.0), epsilon = 1e-14);
        assert_relative_eq!(g.vertex_mean, Point3::new(1.0, 1.0, 0.0), epsilon = 1e-14);
    }

    #[test]
    fn single_cube_mesh() {
        let mesh = PolyMesh::build(unit_cube_raw()).unwrap();
        assert_eq!(mesh.boundary_faces().count(), 6);
        assert_eq!(mesh.internal_face_count(), 0);
        let (vol, xe, xbar) = element_measures(&mesh, 0);
        assert_relative_eq!(vol, 1.0, epsilon = 1e-15);
        assert_relative_eq!(xe, Point3::new(0.5, 0.5, 0.5), epsilon = 1e-15);
        assert_relative_eq!(xbar, Point3::new(0.5, 0.5, 0.5), epsilon = 1e-15);
        assert_eq!(mesh.element(0).num_vertices(), 8);
    }

    #[test]
    fn inward_loops_are_repaired() {
        let mut raw = unit_cube_raw();
        for f in &mut raw.faces {
            f.reverse();
        }
        let mesh = PolyMesh::build(raw).unwrap();
        assert_eq!(mesh.flipped_elements(), 1);
        assert_relative_eq!(mesh.element(0).volume, 1.0, epsilon = 1e-15);
        assert!(mesh.element(0).faces.iter().all(|of| of.sign == -1));
    }

    #[test]
    fn mixed_loop_orientation_resolved() {
        let mut raw = unit_cube_raw();
        raw.faces[2].reverse();
        raw.faces[5].reverse();
        let mesh = PolyMesh::build(raw).unwrap();
        let el = mesh.element(0);
        for of in &el.faces {
            let face = mesh.face(of.face);
            let outward = of.sign_f64() * face.normal;
            // Outward normal points away from the cube centre.
            assert!(outward.dot(&(face.centroid - Point3::new(0.5, 0.5, 0.5))) > 0.0);
        }
    }

    #[test]
    fn right_tetrahedron_measures() {
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
        let (vol, xe, xbar) = element_measures(&mesh, 0);
        assert_relative_eq!(vol, 1.0 / 6.0, epsilon = 1e-15);
        assert_relative_eq!(xbar, Point3::new(0.25, 0.25, 0.25), epsilon = 1e-15);
        assert_relative_eq!(xe, Point3::new(0.25, 0.25, 0.25), epsilon = 1e-15);
    }

    #[test]
    fn stretched_cube_volume() {
        let mesh = PolyMesh::build(unit_cube_raw())
            .unwrap()
            .map_vertices(|p| Point3::new(2.0 * p.x, p.y, p.z))
            .unwrap();
        assert_relative_eq!(mesh.element(0).volume, 2.0, epsilon = 1e-15);
    }

    #[test]
    fn vertex_mean_translates() {
        let mesh = PolyMesh::build(unit_cube_raw()).unwrap();
        // Dyadic shift keeps the arithmetic exact.
        let t = Vector3::new(0.5, -2.0, 4.0);
        let moved = mesh.map_vertices(|p| p + t).unwrap();
        assert_eq!(moved.element(0).vertex_mean, mesh.element(0).vertex_mean + t);
    }

    #[test]
    fn face_in_three_elements_is_non_manifold() {
        let mut raw = unit_cube_raw();
        raw.elements = vec![(0..6).collect(), (0..6).collect(), (0..6).collect()];
        match PolyMesh::build(raw) {
            Err(Error::NonManifoldFace { face: 0, count: 3 }) => {}
            other => panic!("expected non-manifold error, got {other:?}"),
        }
    }

    #[test]
    fn open_surface_rejected() {
        let mut raw = unit_cube_raw();
        raw.elements = vec![(0..5).collect()];
        raw.faces.truncate(6);
        let err = PolyMesh::build(raw).unwrap_err();
        assert!(err.to_string().contains("not closed") || err.to_string().contains("not used"));
    }

    #[test]
    fn vertex_out_of_range_names_face() {
        let mut raw = unit_cube_raw();
        raw.faces[3][1] = 999;
        let err = PolyMesh::build(raw).unwrap_err();
        assert!(matches!(err, Error::InvalidFace { face: 3, .. }), "{err}");
    }

    #[test]
    fn tag_on_missing_face_rejected() {
        let mut raw = unit_cube_raw();
        raw.face_tags.insert(17, "xmin".into());
        assert!(PolyMesh::build(raw).is_err());
    }
}
