use std::fmt::Write as _;
use std::path::Path;

use anyhow::{Context, Result};
use polyvem::{PolyMesh, Vector6};
use serde::Serialize;

/// VTK cell type for arbitrary polyhedra.
pub const VTK_POLYHEDRON: u8 = 42;

const STRESS_NAMES: [&str; 6] = ["stress_11", "stress_22", "stress_33", "stress_12", "stress_23", "stress_31"];

/// Legacy ASCII VTK unstructured grid with polyhedron cells. Each cell is a
/// face stream `[nfaces, (nverts, v...)...]` with outward-oriented loops.
pub fn vtk_document(mesh: &PolyMesh, displacement: Option<&[f64]>, stress: Option<&[Vector6]>) -> String {
    let mut out = String::new();
    out.push_str("# vtk DataFile Version 4.2\npolyvem solution\nASCII\nDATASET UNSTRUCTURED_GRID\n");
    let _ = writeln!(out, "POINTS {} double", mesh.num_vertices());
    for p in mesh.vertices() {
        let _ = writeln!(out, "{} {} {}", p.x, p.y, p.z);
    }

    let streams: Vec<Vec<usize>> = mesh
        .elements()
        .iter()
        .map(|el| {
            let mut s = vec![el.faces.len()];
            for of in &el.faces {
                let verts = &mesh.face(of.face).vertices;
                s.push(verts.len());
                if of.sign > 0 {
                    s.extend(verts.iter().copied());
                } else {
                    s.extend(verts.iter().rev().copied());
                }
            }
            s
        })
        .collect();
    let size: usize = streams.iter().map(|s| s.len() + 1).sum();
    let _ = writeln!(out, "CELLS {} {size}", mesh.num_elements());
    for s in &streams {
        let items: Vec<String> = std::iter::once(s.len()).chain(s.iter().copied()).map(|v| v.to_string()).collect();
        let _ = writeln!(out, "{}", items.join(" "));
    }
    let _ = writeln!(out, "CELL_TYPES {}", mesh.num_elements());
    for _ in 0..mesh.num_elements() {
        let _ = writeln!(out, "{VTK_POLYHEDRON}");
    }

    if let Some(u) = displacement {
        let _ = writeln!(out, "POINT_DATA {}\nVECTORS displacement double", mesh.num_vertices());
        for v in u.chunks(3) {
            let _ = writeln!(out, "{} {} {}", v[0], v[1], v[2]);
        }
    }
    if let Some(s) = stress {
        let _ = writeln!(out, "CELL_DATA {}", mesh.num_elements());
        for (k, name) in STRESS_NAMES.iter().enumerate() {
            let _ = writeln!(out, "SCALARS {name} double 1\nLOOKUP_TABLE default");
            for sigma in s {
                let _ = writeln!(out, "{}", sigma[k]);
            }
        }
    }
    out
}

/// 17 significant digits, locale independent.
pub fn csv_number(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    write_text(path, &text)
}

/// CSV table with a header row; every value is a number.
pub fn csv_table(header: &[&str], rows: &[Vec<f64>]) -> String {
    let mut out = header.join(",");
    out.push('\n');
    for row in rows {
        let cells: Vec<String> = row
            .iter()
            .zip(header)
            .map(|(v, h)| if is_count(h) { format!("{v}") } else { csv_number(*v) })
            .collect();
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    out
}

fn is_count(column: &str) -> bool {
    matches!(column, "level" | "dofs" | "elements")
}
