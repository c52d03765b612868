use std::fmt::Write as _;

use super::mesh::{FacetKind, Mesh};

/// Plain-text dump of a mesh with 17 significant digits per float.
///
/// ```text
/// vertices: <count> <dim>
/// <x_0> ... <x_{d-1}>
/// cells: <count> <vertices per cell>
/// <v_0> ... <v_d> <cell volume>
/// facets: <count>
/// <kind> <axis> <upper|lower> <cell> <v_0> ... <v_{d-1}>
/// ```
pub fn export_mesh(mesh: &Mesh) -> String {
    let d = mesh.dim();
    let mut s = String::new();
    writeln!(s, "vertices: {} {}", mesh.n_vertices(), d).unwrap();
    for v in 0..mesh.n_vertices() {
        let row: Vec<String> = mesh.vertex(v).iter().map(|x| fmt_f64(*x)).collect();
        writeln!(s, "{}", row.join(" ")).unwrap();
    }
    writeln!(s, "cells: {} {}", mesh.n_cells(), d + 1).unwrap();
    for c in 0..mesh.n_cells() {
        let row: Vec<String> = mesh.cell(c).iter().map(|v| v.to_string()).collect();
        writeln!(s, "{} {}", row.join(" "), fmt_f64(mesh.cell_volume(c))).unwrap();
    }
    writeln!(s, "facets: {}", mesh.facets().len()).unwrap();
    for f in mesh.facets() {
        let kind = match f.kind {
            FacetKind::ManifoldBoundary => "boundary",
            FacetKind::ArtificialCutoff => "cutoff",
        };
        let verts: Vec<String> = f.vertices.iter().map(|v| v.to_string()).collect();
        writeln!(
            s,
            "{kind} {} {} {} {}",
            f.axis,
            if f.upper { "upper" } else { "lower" },
            f.cell,
            verts.join(" ")
        )
        .unwrap();
    }
    s
}

/// Scientific notation with 17 significant digits.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}
