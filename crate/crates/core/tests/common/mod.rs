#![allow(dead_code)]

use polyvem::element::ElementOperators;
use polyvem::geometry::FaceAdjacency;
use polyvem::meshgen::{self, BoxDomain, HEX_SIDE_TAGS};
use polyvem::PolyMesh;

pub const FIXTURE: &str = concat!(env!("CARGO_MANIFEST_DIR"), "/fixtures/nonconvex.json");

/// Unit cube split into L-shaped prisms and cubes; 6 of its 15 cells are non-convex.
pub fn nonconvex_fixture() -> PolyMesh {
    meshgen::read_mesh(FIXTURE).expect("fixture loads")
}

/// Named meshes covering the element shapes the solver must handle.
pub fn element_suite() -> Vec<(&'static str, PolyMesh)> {
    let unit = BoxDomain::unit();
    let stretched = BoxDomain::from_bounds([0.0, 8.0, 0.0, 1.0, 0.0, 0.25]).unwrap();
    vec![
        ("cube", meshgen::hex_mesh(&unit, 1, 1, 1).unwrap()),
        ("stretched hex", meshgen::hex_mesh(&stretched, 2, 2, 2).unwrap()),
        ("distorted hex", meshgen::distorted_hex_mesh(&unit, [2, 2, 2], 0.3, 17).unwrap()),
        (
            "random voronoi",
            meshgen::voronoi_mesh(&meshgen::random_seeds(&unit, 40, 3).unwrap()).unwrap(),
        ),
        ("cvt", meshgen::cvt_mesh(&unit, 40, 30, 4).unwrap()),
        ("non-convex fixture", nonconvex_fixture()),
    ]
}

pub fn max_abs(m: &nalgebra::DMatrix<f64>) -> f64 {
    m.amax()
}

/// Largest deviation from the projection identities of one element.
pub fn identity_defect(ops: &ElementOperators) -> f64 {
    let eye = nalgebra::DMatrix::<f64>::identity(6, 6);
    [
        max_abs(&(ops.wr.transpose() * &ops.nr - &eye)),
        max_abs(&(ops.wc.transpose() * &ops.nc - &eye)),
        max_abs(&(ops.wr.transpose() * &ops.nc)),
        max_abs(&(ops.wc.transpose() * &ops.nr)),
        max_abs(&(&ops.pp * &ops.pp - &ops.pp)),
    ]
    .into_iter()
    .fold(0.0, f64::max)
}

/// Checks that a box partition is closed: interior faces are shared with
/// opposite orientations and boundary faces carry the tag of the box side
/// they lie on.
pub fn check_box_partition(mesh: &PolyMesh, domain: &BoxDomain) -> std::result::Result<(), String> {
    let tol = 1e-12 * domain.diagonal();
    let mut sign = vec![[0i8; 2]; mesh.num_faces()];
    for el in mesh.elements() {
        for of in &el.faces {
            let slot = &mut sign[of.face];
            if slot[0] == 0 {
                slot[0] = of.sign;
            } else {
                slot[1] = of.sign;
            }
        }
    }
    for f in 0..mesh.num_faces() {
        match mesh.adjacency(f) {
            FaceAdjacency::Internal(a, b) => {
                if a == b || sign[f][0] + sign[f][1] != 0 {
                    return Err(format!("face {f} between {a} and {b} is not paired"));
                }
            }
            FaceAdjacency::Boundary(_) => {
                let tag = mesh.face_tag(f).ok_or(format!("boundary face {f} has no tag"))?;
                let side = HEX_SIDE_TAGS
                    .iter()
                    .position(|t| *t == tag)
                    .ok_or(format!("face {f} has unknown tag {tag}"))?;
                let (axis, plane) = (side / 2, if side % 2 == 0 { domain.min } else { domain.max });
                for &v in &mesh.face(f).vertices {
                    if (mesh.vertex(v)[axis] - plane[axis]).abs() > tol {
                        return Err(format!("face {f} tagged {tag} leaves the box side"));
                    }
                }
            }
        }
    }
    Ok(())
}
