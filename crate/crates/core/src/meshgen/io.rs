use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use serde::Deserialize;

use crate::geometry::RawMesh;
use crate::{Error, Point3, PolyMesh, Result};

pub const MESH_FORMAT_VERSION: u32 = 1;

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct MeshDocument {
    version: u32,
    vertices: Vec<[f64; 3]>,
    faces: Vec<Vec<usize>>,
    /// Face references `±(face id + 1)`; the sign gives the orientation of
    /// the stored loop relative to the outward normal.
    elements: Vec<Vec<i64>>,
    #[serde(default)]
    boundary_tags: BTreeMap<String, String>,
}

/// Serializes a mesh. Output is one record per line and depends only on the
/// mesh, so equal meshes give equal bytes. Coordinates use the shortest
/// decimal form that parses back to the same `f64`.
pub fn mesh_to_json(mesh: &PolyMesh) -> String {
    let mut out = String::new();
    let join = |items: &mut dyn Iterator<Item = String>| items.collect::<Vec<_>>().join(", ");
    let _ = writeln!(out, "{{\n  \"version\": {MESH_FORMAT_VERSION},\n  \"vertices\": [");
    let nv = mesh.num_vertices();
    for (i, p) in mesh.vertices().iter().enumerate() {
        let sep = if i + 1 < nv { "," } else { "" };
        let _ = writeln!(out, "    [{:?}, {:?}, {:?}]{sep}", p.x, p.y, p.z);
    }
    out.push_str("  ],\n  \"faces\": [\n");
    let nf = mesh.num_faces();
    for (f, face) in mesh.faces().iter().enumerate() {
        let sep = if f + 1 < nf { "," } else { "" };
        let _ = writeln!(out, "    [{}]{sep}", join(&mut face.vertices.iter().map(|v| v.to_string())));
    }
    out.push_str("  ],\n  \"elements\": [\n");
    let ne = mesh.num_elements();
    for (e, el) in mesh.elements().iter().enumerate() {
        let sep = if e + 1 < ne { "," } else { "" };
        let refs = el.faces.iter().map(|of| (i64::from(of.sign) * (of.face as i64 + 1)).to_string());
        let _ = writeln!(out, "    [{}]{sep}", join(&mut refs.into_iter()));
    }
    out.push_str("  ],\n  \"boundary_tags\": {");
    let tags: Vec<String> = mesh
        .face_tags()
        .iter()
        .map(|(f, t)| format!("\n    \"{f}\": {}", serde_json::to_string(t).expect("string serializes")))
        .collect();
    out.push_str(&tags.join(","));
    out.push_str(if tags.is_empty() { "}\n}\n" } else { "\n  }\n}\n" });
    out
}

/// Parses and validates a mesh document.
pub fn mesh_from_json(text: &str) -> Result<PolyMesh> {
    let doc: MeshDocument = serde_json::from_str(text).map_err(|e| Error::MeshFile(e.to_string()))?;
    if doc.version != MESH_FORMAT_VERSION {
        return Err(Error::MeshFile(format!(
            "unsupported version {} (expected {MESH_FORMAT_VERSION})",
            doc.version
        )));
    }
    let mut elements = Vec::with_capacity(doc.elements.len());
    for (e, refs) in doc.elements.iter().enumerate() {
        let mut faces = Vec::with_capacity(refs.len());
        for (k, &r) in refs.iter().enumerate() {
            if r == 0 {
                return Err(Error::MeshFile(format!(
                    "elements[{e}][{k}]: face reference 0 is invalid, references are ±(face id + 1)"
                )));
            }
            faces.push(r.unsigned_abs() as usize - 1);
        }
        elements.push(faces);
    }
    let mut face_tags = BTreeMap::new();
    for (key, tag) in doc.boundary_tags {
        let f: usize = key
            .parse()
            .map_err(|_| Error::MeshFile(format!("boundary_tags: key {key:?} is not a face id")))?;
        face_tags.insert(f, tag);
    }
    PolyMesh::build(RawMesh {
        vertices: doc.vertices.iter().map(|v| Point3::new(v[0], v[1], v[2])).collect(),
        faces: doc.faces,
        elements,
        face_tags,
    })
}

pub fn write_mesh(mesh: &PolyMesh, path: impl AsRef<Path>) -> Result<()> {
    std::fs::write(path, mesh_to_json(mesh))?;
    Ok(())
}

pub fn read_mesh(path: impl AsRef<Path>) -> Result<PolyMesh> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path)?;
    mesh_from_json(&text).map_err(|e| match e {
        Error::MeshFile(msg) => Error::MeshFile(format!("{}: {msg}", path.display())),
        other => other,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::tests::unit_cube_raw;
    use crate::meshgen::{hex_mesh, random_seeds, voronoi_mesh, BoxDomain};

    #[test]
    fn unit_cube_round_trip() {
        let mut raw = unit_cube_raw();
        raw.face_tags.insert(2, "front \"face\"".into());
        let mesh = PolyMesh::build(raw).unwrap();
        let text = mesh_to_json(&mesh);
        let back = mesh_from_json(&text).unwrap();
        assert_eq!(back, mesh);
        assert_eq!(mesh_to_json(&back), text);
        let _: serde_json::Value = serde_json::from_str(&text).unwrap();
    }

    #[test]
    fn untagged_mesh_is_valid_json() {
        let mesh = PolyMesh::build(unit_cube_raw()).unwrap();
        let text = mesh_to_json(&mesh);
        let v: serde_json::Value = serde_json::from_str(&text).unwrap();
        assert!(v["boundary_tags"].as_object().unwrap().is_empty());
    }

    #[test]
    fn irrational_coordinates_are_bit_exact() {
        let domain = BoxDomain::from_bounds([-1.0, 1.0, -1.0, 1.0, 0.0, 10.0]).unwrap();
        let mesh = hex_mesh(&domain, 3, 3, 7).unwrap();
        let mesh = mesh.map_vertices(|p| p * std::f64::consts::PI / 3.0).unwrap();
        let back = mesh_from_json(&mesh_to_json(&mesh)).unwrap();
        for (a, b) in mesh.vertices().iter().zip(back.vertices()) {
            for c in 0..3 {
                assert_eq!(a[c].to_bits(), b[c].to_bits());
            }
        }
        assert_eq!(back, mesh);
    }

    #[test]
    fn voronoi_round_trip() {
        let mesh = voronoi_mesh(&random_seeds(&BoxDomain::unit(), 20, 8).unwrap()).unwrap();
        assert_eq!(mesh_from_json(&mesh_to_json(&mesh)).unwrap(), mesh);
    }

    #[test]
    fn bad_vertex_reference_names_face() {
        let mesh = PolyMesh::build(unit_cube_raw()).unwrap();
        let text = mesh_to_json(&mesh).replacen("[0, 1, 5, 4]", "[0, 1, 5, 999]", 1);
        let err = mesh_from_json(&text).unwrap_err().to_string();
        assert!(err.contains("face 2") && err.contains("999"), "{err}");
    }

    #[test]
    fn malformed_document_reports_position() {
        let err = mesh_from_json("{\n  \"version\": 1,\n  \"vertices\": [[0, 0]]\n}").unwrap_err();
        assert!(err.to_string().contains("line 3"), "{err}");
        let err = mesh_from_json(r#"{"version": 2, "vertices": [], "faces": [], "elements": []}"#).unwrap_err();
        assert!(err.to_string().contains("version"));
        let err = mesh_from_json(r#"{"version": 1, "vertices": [], "faces": [], "elements": [[0]]}"#).unwrap_err();
        assert!(err.to_string().contains("elements[0][0]"));
    }
}
