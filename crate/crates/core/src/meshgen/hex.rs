use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::BoxDomain;
use crate::geometry::{face_geometry, RawMesh};
use crate::{Error, Point3, PolyMesh, Result};

/// Tags given to boundary faces, indexed by `2 * axis + (0 for min, 1 for max)`.
pub const HEX_SIDE_TAGS: [&str; 6] = ["xmin", "xmax", "ymin", "ymax", "zmin", "zmax"];

/// `nx * ny * nz` bricks; boundary faces tagged by box side.
pub fn hex_mesh(domain: &BoxDomain, nx: usize, ny: usize, nz: usize) -> Result<PolyMesh> {
    PolyMesh::build(hex_raw(domain, [nx, ny, nz])?)
}

/// Bricks with interior vertices moved by up to `amplitude` times the local
/// spacing in each direction. Quads that end up non-planar are split into
/// two triangles.
pub fn distorted_hex_mesh(domain: &BoxDomain, n: [usize; 3], amplitude: f64, seed: u64) -> Result<PolyMesh> {
    if !(0.0..0.5).contains(&amplitude) {
        return Err(Error::InvalidParameter(format!(
            "distortion amplitude must lie in [0, 0.5), got {amplitude}"
        )));
    }
    let mut raw = hex_raw(domain, n)?;
    let spacing = domain.extent().component_div(&Point3::new(n[0] as f64, n[1] as f64, n[2] as f64));
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for (i, p) in raw.vertices.iter_mut().enumerate() {
        let idx = lattice_index(i, n);
        let interior = (0..3).all(|c| idx[c] > 0 && idx[c] < n[c]);
        // Draw for every vertex so the stream does not depend on which are interior.
        let shift: [f64; 3] = std::array::from_fn(|_| rng.gen_range(-1.0..=1.0));
        if interior {
            for c in 0..3 {
                p[c] += amplitude * spacing[c] * shift[c];
            }
        }
    }
    split_warped_quads(&mut raw);
    PolyMesh::build(raw)
}

fn lattice_index(i: usize, n: [usize; 3]) -> [usize; 3] {
    let sx = n[0] + 1;
    let sy = n[1] + 1;
    [i % sx, (i / sx) % sy, i / (sx * sy)]
}

fn hex_raw(domain: &BoxDomain, n: [usize; 3]) -> Result<RawMesh> {
    if n.contains(&0) {
        return Err(Error::InvalidParameter(format!(
            "subdivisions must be at least 1, got {}x{}x{}",
            n[0], n[1], n[2]
        )));
    }
    let [nx, ny, nz] = n;
    let vid = |i: usize, j: usize, k: usize| i + (nx + 1) * (j + (ny + 1) * k);
    let coord = |c: usize, i: usize| {
        if i == n[c] {
            domain.max[c]
        } else {
            domain.min[c] + domain.extent()[c] * i as f64 / n[c] as f64
        }
    };

    let mut vertices = Vec::with_capacity((nx + 1) * (ny + 1) * (nz + 1));
    for k in 0..=nz {
        for j in 0..=ny {
            for i in 0..=nx {
                vertices.push(Point3::new(coord(0, i), coord(1, j), coord(2, k)));
            }
        }
    }

    let mut faces = Vec::new();
    let mut face_tags = BTreeMap::new();
    let mut tag = |faces: &Vec<Vec<usize>>, axis: usize, index: usize, count: usize| {
        if index == 0 {
            face_tags.insert(faces.len(), HEX_SIDE_TAGS[2 * axis].to_string());
        } else if index == count {
            face_tags.insert(faces.len(), HEX_SIDE_TAGS[2 * axis + 1].to_string());
        }
    };
    // Loops are counter-clockwise about the positive axis direction.
    let mut x_faces = vec![0; (nx + 1) * ny * nz];
    for k in 0..nz {
        for j in 0..ny {
            for i in 0..=nx {
                x_faces[i + (nx + 1) * (j + ny * k)] = faces.len();
                tag(&faces, 0, i, nx);
                faces.push(vec![vid(i, j, k), vid(i, j + 1, k), vid(i, j + 1, k + 1), vid(i, j, k + 1)]);
            }
        }
    }
    let mut y_faces = vec![0; nx * (ny + 1) * nz];
    for k in 0..nz {
        for j in 0..=ny {
            for i in 0..nx {
                y_faces[i + nx * (j + (ny + 1) * k)] = faces.len();
                tag(&faces, 1, j, ny);
                faces.push(vec![vid(i, j, k), vid(i, j, k + 1), vid(i + 1, j, k + 1), vid(i + 1, j, k)]);
            }
        }
    }
    let mut z_faces = vec![0; nx * ny * (nz + 1)];
    for k in 0..=nz {
        for j in 0..ny {
            for i in 0..nx {
                z_faces[i + nx * (j + ny * k)] = faces.len();
                tag(&faces, 2, k, nz);
                faces.push(vec![vid(i, j, k), vid(i + 1, j, k), vid(i + 1, j + 1, k), vid(i, j + 1, k)]);
            }
        }
    }

    let mut elements = Vec::with_capacity(nx * ny * nz);
    for k in 0..nz {
        for j in 0..ny {
            for i in 0..nx {
                elements.push(vec![
                    x_faces[i + (nx + 1) * (j + ny * k)],
                    x_faces[i + 1 + (nx + 1) * (j + ny * k)],
                    y_faces[i + nx * (j + (ny + 1) * k)],
                    y_faces[i + nx * (j + 1 + (ny + 1) * k)],
                    z_faces[i + nx * (j + ny * k)],
                    z_faces[i + nx * (j + ny * (k + 1))],
                ]);
            }
        }
    }
    Ok(RawMesh {
        vertices,
        faces,
        elements,
        face_tags,
    })
}

/// Replaces every non-planar quad by the triangles (0,1,2) and (0,2,3); the
/// second triangle takes a new face id at the end of the list.
fn split_warped_quads(raw: &mut RawMesh) {
    let mut extra: BTreeMap<usize, usize> = BTreeMap::new();
    for f in 0..raw.faces.len() {
        let loop_ = &raw.faces[f];
        if loop_.len() != 4 {
            continue;
        }
        let pts: Vec<Point3> = loop_.iter().map(|&v| raw.vertices[v]).collect();
        if face_geometry(&pts).is_ok() {
            continue;
        }
        let [a, b, c, d] = [loop_[0], loop_[1], loop_[2], loop_[3]];
        raw.faces[f] = vec![a, b, c];
        let new_id = raw.faces.len();
        raw.faces.push(vec![a, c, d]);
        if let Some(tag) = raw.face_tags.get(&f).cloned() {
            raw.face_tags.insert(new_id, tag);
        }
        extra.insert(f, new_id);
    }
    for el in &mut raw.elements {
        let added: Vec<usize> = el.iter().filter_map(|f| extra.get(f).copied()).collect();
        el.extend(added);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn single_unit_cube() {
        let mesh = hex_mesh(&BoxDomain::unit(), 1, 1, 1).unwrap();
        assert_eq!(mesh.num_elements(), 1);
        assert_eq!(mesh.num_vertices(), 8);
        assert_eq!(mesh.num_faces(), 6);
        assert_relative_eq!(mesh.element(0).volume, 1.0, epsilon = 1e-15);
        assert_eq!(mesh.face_tags().len(), 6);
    }

    #[test]
    fn beam_lattice_counts() {
        let domain = BoxDomain::from_bounds([-1.0, 1.0, -1.0, 1.0, 0.0, 10.0]).unwrap();
        let mesh = hex_mesh(&domain, 2, 2, 10).unwrap();
        assert_eq!(mesh.num_elements(), 40);
        assert_eq!(mesh.num_vertices(), 99);
        assert_relative_eq!(mesh.total_volume(), 40.0, epsilon = 1e-12);
        let zmin = mesh.face_tags().values().filter(|t| *t == "zmin").count();
        let xmax = mesh.face_tags().values().filter(|t| *t == "xmax").count();
        assert_eq!((zmin, xmax), (4, 20));
        assert_eq!(mesh.face_tags().len(), mesh.boundary_faces().count());
        for (&f, tag) in mesh.face_tags() {
            let axis = HEX_SIDE_TAGS.iter().position(|t| t == tag).unwrap() / 2;
            assert_relative_eq!(mesh.face(f).normal[axis].abs(), 1.0);
        }
    }

    #[test]
    fn refinement_halves_diameter() {
        let domain = BoxDomain::from_bounds([-1.0, 1.0, -1.0, 1.0, 0.0, 10.0]).unwrap();
        let coarse = hex_mesh(&domain, 2, 2, 10).unwrap();
        let fine = hex_mesh(&domain, 4, 4, 20).unwrap();
        assert_eq!(coarse.max_element_diameter(), 2.0 * fine.max_element_diameter());
    }

    #[test]
    fn zero_subdivisions_rejected() {
        assert!(hex_mesh(&BoxDomain::unit(), 0, 1, 1).is_err());
    }

    #[test]
    fn distorted_mesh_is_valid_and_fills_box() {
        let mesh = distorted_hex_mesh(&BoxDomain::unit(), [3, 3, 3], 0.2, 5).unwrap();
        assert_eq!(mesh.num_elements(), 27);
        assert!(mesh.faces().iter().any(|f| f.len() == 3));
        assert_relative_eq!(mesh.total_volume(), 1.0, epsilon = 1e-12);
        let again = distorted_hex_mesh(&BoxDomain::unit(), [3, 3, 3], 0.2, 5).unwrap();
        assert_eq!(mesh, again);
    }
}
