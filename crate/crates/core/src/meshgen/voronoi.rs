use std::collections::{BTreeMap, HashMap};

use nalgebra::Vector3;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::hex::HEX_SIDE_TAGS;
use super::BoxDomain;
use crate::geometry::RawMesh;
use crate::{Error, Point3, PolyMesh, Result};

/// Lloyd iteration stops once no seed moves more than this fraction of the
/// box diagonal.
pub const CVT_TOLERANCE: f64 = 1e-4;

/// Clipping classifies points within this fraction of the box diagonal as
/// lying on the cutting plane.
const CLIP_EPS: f64 = 1e-12;
/// Vertices closer than this fraction of the box diagonal are merged.
const MERGE_EPS: f64 = 1e-9;

/// Generator points inside a box.
#[derive(Debug, Clone, PartialEq)]
pub struct SeedSet {
    pub domain: BoxDomain,
    pub points: Vec<Point3>,
    /// RNG seed the points were drawn with, if any.
    pub rng_seed: Option<u64>,
}

impl SeedSet {
    pub fn new(domain: BoxDomain, points: Vec<Point3>) -> Result<Self> {
        let set = Self {
            domain,
            points,
            rng_seed: None,
        };
        set.validate()?;
        Ok(set)
    }

    pub fn validate(&self) -> Result<()> {
        if self.points.is_empty() {
            return Err(Error::InvalidParameter("at least one seed is required".into()));
        }
        for (i, p) in self.points.iter().enumerate() {
            if !self.domain.contains_strictly(p) {
                return Err(Error::InvalidParameter(format!(
                    "seed {i} at {:?} is not strictly inside the box",
                    p.as_slice()
                )));
            }
        }
        let tol = MERGE_EPS * self.domain.diagonal();
        let mut order: Vec<usize> = (0..self.points.len()).collect();
        order.sort_by(|&a, &b| self.points[a].x.total_cmp(&self.points[b].x));
        for (k, &a) in order.iter().enumerate() {
            for &b in &order[k + 1..] {
                if self.points[b].x - self.points[a].x > tol {
                    break;
                }
                if (self.points[a] - self.points[b]).norm() <= tol {
                    return Err(Error::InvalidParameter(format!("seeds {} and {} coincide", a.min(b), a.max(b))));
                }
            }
        }
        Ok(())
    }
}

/// `n` uniformly distributed seeds from a ChaCha8 stream.
pub fn random_seeds(domain: &BoxDomain, n: usize, rng_seed: u64) -> Result<SeedSet> {
    if n == 0 {
        return Err(Error::InvalidParameter("seed count must be at least 1".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    let tol = MERGE_EPS * domain.diagonal();
    let mut points: Vec<Point3> = Vec::with_capacity(n);
    while points.len() < n {
        let u: [f64; 3] = std::array::from_fn(|_| rng.gen::<f64>());
        let p = domain.min + domain.extent().component_mul(&Point3::new(u[0], u[1], u[2]));
        if domain.contains_strictly(&p) && points.iter().all(|q| (p - q).norm() > tol) {
            points.push(p);
        }
    }
    Ok(SeedSet {
        domain: *domain,
        points,
        rng_seed: Some(rng_seed),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum FaceLabel {
    Side(usize),
    Neighbor(usize),
}

/// Convex polyhedron as a list of labelled planar polygons.
#[derive(Debug, Clone)]
struct ConvexCell {
    faces: Vec<(FaceLabel, Vec<Point3>)>,
}

impl ConvexCell {
    fn from_box(domain: &BoxDomain) -> Self {
        let corner = |i: usize, j: usize, k: usize| {
            Point3::new(
                if i == 0 { domain.min.x } else { domain.max.x },
                if j == 0 { domain.min.y } else { domain.max.y },
                if k == 0 { domain.min.z } else { domain.max.z },
            )
        };
        let faces = vec![
            (FaceLabel::Side(0), vec![corner(0, 0, 0), corner(0, 0, 1), corner(0, 1, 1), corner(0, 1, 0)]),
            (FaceLabel::Side(1), vec![corner(1, 0, 0), corner(1, 1, 0), corner(1, 1, 1), corner(1, 0, 1)]),
            (FaceLabel::Side(2), vec![corner(0, 0, 0), corner(1, 0, 0), corner(1, 0, 1), corner(0, 0, 1)]),
            (FaceLabel::Side(3), vec![corner(0, 1, 0), corner(0, 1, 1), corner(1, 1, 1), corner(1, 1, 0)]),
            (FaceLabel::Side(4), vec![corner(0, 0, 0), corner(0, 1, 0), corner(1, 1, 0), corner(1, 0, 0)]),
            (FaceLabel::Side(5), vec![corner(0, 0, 1), corner(1, 0, 1), corner(1, 1, 1), corner(0, 1, 1)]),
        ];
        Self { faces }
    }

    fn max_distance(&self, from: &Point3) -> f64 {
        self.faces
            .iter()
            .flat_map(|(_, pts)| pts.iter())
            .map(|p| (p - from).norm())
            .fold(0.0, f64::max)
    }

    /// Keeps the part `{x : normal . x <= offset}` (unit normal), closing the
    /// cut with a new face.
    fn clip(&mut self, normal: &Vector3<f64>, offset: f64, label: FaceLabel, eps: f64) {
        let dist = |p: &Point3| normal.dot(p) - offset;
        let any_outside = self.faces.iter().any(|(_, pts)| pts.iter().any(|p| dist(p) > eps));
        if !any_outside {
            return;
        }
        let mut cap: Vec<Point3> = Vec::new();
        let add_cap = |p: Point3, cap: &mut Vec<Point3>| {
            if cap.iter().all(|q| (p - q).norm() > eps) {
                cap.push(p);
            }
        };
        let mut faces = Vec::with_capacity(self.faces.len() + 1);
        for (lab, pts) in &self.faces {
            let m = pts.len();
            let mut out = Vec::with_capacity(m + 1);
            for k in 0..m {
                let p = pts[k];
                let q = pts[(k + 1) % m];
                let (dp, dq) = (dist(&p), dist(&q));
                if dp <= eps {
                    out.push(p);
                    if dp >= -eps {
                        add_cap(p, &mut cap);
                    }
                }
                if (dp < -eps && dq > eps) || (dp > eps && dq < -eps) {
                    let x = edge_crossing(&p, dp, &q, dq);
                    out.push(x);
                    add_cap(x, &mut cap);
                }
            }
            if out.len() >= 3 {
                faces.push((*lab, out));
            }
        }
        if cap.len() >= 3 {
            faces.push((label, sort_about_normal(cap, normal)));
        }
        self.faces = faces;
    }

    /// Volume and centroid; the cell is convex so a fan from any interior
    /// point has non-negative tetrahedra.
    fn volume_centroid(&self) -> (f64, Point3) {
        let count = self.faces.iter().map(|(_, p)| p.len()).sum::<usize>() as f64;
        let apex = self.faces.iter().flat_map(|(_, p)| p.iter()).sum::<Point3>() / count;
        let mut volume = 0.0;
        let mut moment = Vector3::zeros();
        for (_, pts) in &self.faces {
            let a = pts[0];
            for k in 1..pts.len() - 1 {
                let (b, c) = (pts[k], pts[k + 1]);
                let v = ((a - apex).cross(&(b - apex)).dot(&(c - apex)) / 6.0).abs();
                volume += v;
                moment += v * (apex + a + b + c) / 4.0;
            }
        }
        (volume, moment / volume)
    }
}

/// Intersection of segment `pq` with the plane, evaluated with the endpoints
/// in a fixed order so neighbouring faces produce identical points.
fn edge_crossing(p: &Point3, dp: f64, q: &Point3, dq: f64) -> Point3 {
    let swap = (q.x, q.y, q.z) < (p.x, p.y, p.z);
    let (a, da, b, db) = if swap { (q, dq, p, dp) } else { (p, dp, q, dq) };
    a + (b - a) * (da / (da - db))
}

fn sort_about_normal(points: Vec<Point3>, normal: &Vector3<f64>) -> Vec<Point3> {
    let center = points.iter().sum::<Point3>() / points.len() as f64;
    let helper = if normal.x.abs() < 0.9 { Vector3::x() } else { Vector3::y() };
    let u = normal.cross(&helper).normalize();
    let v = normal.cross(&u);
    let mut keyed: Vec<(f64, Point3)> = points
        .into_iter()
        .map(|p| {
            let d = p - center;
            (d.dot(&v).atan2(d.dot(&u)), p)
        })
        .collect();
    keyed.sort_by(|a, b| a.0.total_cmp(&b.0));
    keyed.into_iter().map(|(_, p)| p).collect()
}

fn voronoi_cells(seeds: &SeedSet) -> Vec<ConvexCell> {
    let domain = &seeds.domain;
    let eps = CLIP_EPS * domain.diagonal();
    let pts = &seeds.points;
    (0..pts.len())
        .into_par_iter()
        .map(|i| {
            let si = pts[i];
            let mut order: Vec<(f64, usize)> = (0..pts.len())
                .filter(|&j| j != i)
                .map(|j| ((pts[j] - si).norm(), j))
                .collect();
            order.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
            let mut cell = ConvexCell::from_box(domain);
            let mut reach = cell.max_distance(&si);
            for (d, j) in order {
                // The bisector lies at distance d/2 from the seed.
                if 0.5 * d > reach + eps {
                    break;
                }
                let normal = (pts[j] - si) / d;
                let offset = normal.dot(&(0.5 * (si + pts[j])));
                cell.clip(&normal, offset, FaceLabel::Neighbor(j), eps);
                reach = cell.max_distance(&si);
            }
            cell
        })
        .collect()
}

/// Spatial hash for merging coincident vertices.
struct VertexMerger {
    tol: f64,
    grid: HashMap<[i64; 3], Vec<usize>>,
    points: Vec<Point3>,
}

impl VertexMerger {
    fn new(tol: f64) -> Self {
        Self {
            tol,
            grid: HashMap::new(),
            points: Vec::new(),
        }
    }

    fn key(&self, p: &Point3) -> [i64; 3] {
        std::array::from_fn(|c| (p[c] / self.tol).floor() as i64)
    }

    fn insert(&mut self, p: Point3) -> usize {
        let k = self.key(&p);
        for dx in -1..=1 {
            for dy in -1..=1 {
                for dz in -1..=1 {
                    if let Some(ids) = self.grid.get(&[k[0] + dx, k[1] + dy, k[2] + dz]) {
                        if let Some(&id) = ids.iter().find(|&&id| (self.points[id] - p).norm() <= self.tol) {
                            return id;
                        }
                    }
                }
            }
        }
        let id = self.points.len();
        self.points.push(p);
        self.grid.entry(k).or_default().push(id);
        id
    }
}

/// Voronoi diagram of the seeds clipped to their box. Box faces are tagged
/// like the sides of [`super::hex_mesh`].
pub fn voronoi_mesh(seeds: &SeedSet) -> Result<PolyMesh> {
    seeds.validate()?;
    let cells = voronoi_cells(seeds);
    let mut merger = VertexMerger::new(MERGE_EPS * seeds.domain.diagonal());
    let mut faces: Vec<Vec<usize>> = Vec::new();
    let mut face_tags = BTreeMap::new();
    let mut shared: BTreeMap<(usize, usize), usize> = BTreeMap::new();
    let mut elements = Vec::with_capacity(cells.len());

    for (i, cell) in cells.iter().enumerate() {
        let mut element = Vec::with_capacity(cell.faces.len());
        for (label, pts) in &cell.faces {
            let mut ids: Vec<usize> = pts.iter().map(|p| merger.insert(*p)).collect();
            ids.dedup();
            while ids.len() > 1 && ids.first() == ids.last() {
                ids.pop();
            }
            if ids.len() < 3 {
                continue;
            }
            match *label {
                FaceLabel::Side(side) => {
                    face_tags.insert(faces.len(), HEX_SIDE_TAGS[side].to_string());
                    element.push(faces.len());
                    faces.push(ids);
                }
                FaceLabel::Neighbor(j) => {
                    let key = (i.min(j), i.max(j));
                    if let Some(&f) = shared.get(&key) {
                        let mut a = faces[f].clone();
                        let mut b = ids.clone();
                        a.sort_unstable();
                        b.sort_unstable();
                        if a != b {
                            return Err(Error::InvalidMesh(format!(
                                "cells {} and {} disagree on their shared face",
                                key.0, key.1
                            )));
                        }
                        element.push(f);
                    } else {
                        shared.insert(key, faces.len());
                        element.push(faces.len());
                        faces.push(ids);
                    }
                }
            }
        }
        elements.push(element);
    }
    PolyMesh::build(RawMesh {
        vertices: merger.points,
        faces,
        elements,
        face_tags,
    })
}

/// Outcome of Lloyd relaxation.
#[derive(Debug, Clone)]
pub struct CvtResult {
    pub mesh: PolyMesh,
    pub seeds: SeedSet,
    /// Largest seed displacement of every iteration.
    pub movements: Vec<f64>,
    pub converged: bool,
}

/// Lloyd iteration from `n` random seeds: every seed moves to the centroid of
/// its cell until the largest move drops below [`CVT_TOLERANCE`] times the
/// box diagonal or `max_iters` is reached.
pub fn cvt(domain: &BoxDomain, n: usize, max_iters: usize, rng_seed: u64) -> Result<CvtResult> {
    let mut seeds = random_seeds(domain, n, rng_seed)?;
    let tol = CVT_TOLERANCE * domain.diagonal();
    let mut movements = Vec::new();
    let mut converged = false;
    for _ in 0..max_iters {
        let centroids: Vec<Point3> = voronoi_cells(&seeds).iter().map(|c| c.volume_centroid().1).collect();
        let movement = seeds
            .points
            .iter()
            .zip(&centroids)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max);
        seeds.points = centroids;
        movements.push(movement);
        if movement < tol {
            converged = true;
            break;
        }
    }
    Ok(CvtResult {
        mesh: voronoi_mesh(&seeds)?,
        seeds,
        movements,
        converged,
    })
}

pub fn cvt_mesh(domain: &BoxDomain, n: usize, max_iters: usize, rng_seed: u64) -> Result<PolyMesh> {
    Ok(cvt(domain, n, max_iters, rng_seed)?.mesh)
}
