//! History and field exporters: CSV, JSON (run metadata plus the same
//! numeric sequences as the CSV) and legacy-ASCII VTK.

use chdg_core::local::FieldState;
use chdg_core::mesh::Mesh;
use chdg_core::refelem::{ReferenceElement, REF_VERTICES};
use chdg_core::solver::{IterationReport, Termination};
use serde::Serialize;
use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::Path;

/// One residual pair per iteration, normalized to the initial residual.
fn relative_histories(report: &IterationReport) -> (Vec<f64>, Vec<f64>) {
    let rel = |hist: &[f64]| -> Vec<f64> {
        if hist.is_empty() {
            return Vec::new();
        }
        let h0 = hist[0];
        hist.iter()
            .map(|&h| if h0 == 0.0 { 0.0 } else { h / h0 })
            .collect()
    };
    (rel(&report.residual_2), rel(&report.residual_m))
}

/// Columns: iter, rel_residual_2, rel_residual_M, rel_error; cells are
/// empty where a quantity was not logged at that iteration.
pub fn write_history_csv(path: &Path, report: &IterationReport) -> io::Result<()> {
    let (rel_2, rel_m) = relative_histories(report);
    let mut out = BufWriter::new(File::create(path)?);
    writeln!(out, "iter,rel_residual_2,rel_residual_M,rel_error")?;
    let mut errors = report.errors.iter().peekable();
    for (iter, r2) in rel_2.iter().enumerate() {
        write!(out, "{iter},{r2:.16e},")?;
        if let Some(rm) = rel_m.get(iter) {
            write!(out, "{rm:.16e}")?;
        }
        write!(out, ",")?;
        if let Some(&&(it, err)) = errors.peek() {
            if it == iter {
                write!(out, "{err:.16e}")?;
                errors.next();
            }
        }
        writeln!(out)?;
    }
    out.flush()
}

#[derive(Serialize)]
pub struct RunMetadata {
    pub benchmark: String,
    pub kappa: f64,
    pub p: usize,
    pub mesh: String,
    pub num_elements: usize,
    pub dof: usize,
    pub solver: String,
    pub restart: usize,
    pub rtol: f64,
    pub maxit: usize,
    pub threads: Option<usize>,
    pub final_relative_residual: f64,
    pub final_relative_residual_check: f64,
    pub final_relative_error: f64,
    pub projection_error: f64,
}

#[derive(Serialize)]
struct HistoryJson<'a> {
    #[serde(flatten)]
    meta: &'a RunMetadata,
    iterations: usize,
    termination: &'static str,
    wall_seconds: f64,
    rel_residual_2: Vec<f64>,
    rel_residual_m: Vec<f64>,
    errors: Vec<(usize, f64)>,
}

pub fn write_history_json(
    path: &Path,
    meta: &RunMetadata,
    report: &IterationReport,
) -> io::Result<()> {
    let (rel_2, rel_m) = relative_histories(report);
    let doc = HistoryJson {
        meta,
        iterations: report.iterations,
        termination: match report.termination {
            Termination::Converged => "converged",
            Termination::MaxIterations => "max-iterations",
            Termination::Stagnation => "stagnation",
        },
        wall_seconds: report.wall_seconds,
        rel_residual_2: rel_2,
        rel_residual_m: rel_m,
        errors: report.errors.clone(),
    };
    let mut out = BufWriter::new(File::create(path)?);
    serde_json::to_writer_pretty(&mut out, &doc)?;
    writeln!(out)?;
    out.flush()
}

/// Node indices of the four element vertices within the nodal set.
fn vertex_nodes(refel: &ReferenceElement) -> [usize; 4] {
    std::array::from_fn(|v| {
        refel
            .nodes
            .iter()
            .position(|&x| (0..3).all(|d| (x[d] - REF_VERTICES[v][d]).abs() <= 1e-9))
            .expect("nodal sets of degree >= 1 contain the vertices")
    })
}

fn write_vtk_header(out: &mut impl Write, points: usize) -> io::Result<()> {
    writeln!(out, "# vtk DataFile Version 3.0")?;
    writeln!(out, "chdg reconstructed fields")?;
    writeln!(out, "ASCII")?;
    writeln!(out, "DATASET UNSTRUCTURED_GRID")?;
    writeln!(out, "POINTS {points} double")?;
    Ok(())
}

fn write_vtk_vectors(
    out: &mut impl Write,
    name: &str,
    values: impl Iterator<Item = [f64; 3]>,
) -> io::Result<()> {
    writeln!(out, "VECTORS {name} double")?;
    for v in values {
        writeln!(out, "{:.9e} {:.9e} {:.9e}", v[0], v[1], v[2])?;
    }
    Ok(())
}

/// Degree-1 downsample: duplicated corner points per element, one
/// tetrahedron cell each, with Re/Im of both fields as point vectors.
pub fn write_vtk_corners(
    path: &Path,
    mesh: &Mesh,
    refel: &ReferenceElement,
    fields: &[FieldState],
) -> io::Result<()> {
    let verts = vertex_nodes(refel);
    let ne = mesh.num_elements();
    let mut out = BufWriter::new(File::create(path)?);
    write_vtk_header(&mut out, 4 * ne)?;
    for k in 0..ne {
        for &i in &verts {
            let x = mesh.to_physical(k, refel.nodes[i]);
            writeln!(out, "{:.9e} {:.9e} {:.9e}", x[0], x[1], x[2])?;
        }
    }
    writeln!(out, "CELLS {ne} {}", 5 * ne)?;
    for k in 0..ne {
        writeln!(out, "4 {} {} {} {}", 4 * k, 4 * k + 1, 4 * k + 2, 4 * k + 3)?;
    }
    writeln!(out, "CELL_TYPES {ne}")?;
    for _ in 0..ne {
        writeln!(out, "10")?;
    }
    writeln!(out, "POINT_DATA {}", 4 * ne)?;
    let component = |field: fn(&FieldState) -> &[Vec<chdg_core::Complex64>; 3], re: bool| {
        (0..ne).flat_map(move |k| {
            (0..4).map(move |v| {
                let i = verts[v];
                let f = field(&fields[k]);
                std::array::from_fn(|d| if re { f[d][i].re } else { f[d][i].im })
            })
        })
    };
    write_vtk_vectors(&mut out, "re_e", component(|s| &s.e, true))?;
    write_vtk_vectors(&mut out, "im_e", component(|s| &s.e, false))?;
    write_vtk_vectors(&mut out, "re_h", component(|s| &s.h, true))?;
    write_vtk_vectors(&mut out, "im_h", component(|s| &s.h, false))?;
    out.flush()
}

/// Full nodal point cloud (one VTK_VERTEX cell per node) for p > 1 runs.
pub fn write_vtk_node_cloud(
    path: &Path,
    mesh: &Mesh,
    refel: &ReferenceElement,
    fields: &[FieldState],
) -> io::Result<()> {
    let ne = mesh.num_elements();
    let np = refel.np;
    let total = ne * np;
    let mut out = BufWriter::new(File::create(path)?);
    write_vtk_header(&mut out, total)?;
    for k in 0..ne {
        for &xi in refel.nodes.iter() {
            let x = mesh.to_physical(k, xi);
            writeln!(out, "{:.9e} {:.9e} {:.9e}", x[0], x[1], x[2])?;
        }
    }
    writeln!(out, "CELLS {total} {}", 2 * total)?;
    for i in 0..total {
        writeln!(out, "1 {i}")?;
    }
    writeln!(out, "CELL_TYPES {total}")?;
    for _ in 0..total {
        writeln!(out, "1")?;
    }
    writeln!(out, "POINT_DATA {total}")?;
    let component = |field: fn(&FieldState) -> &[Vec<chdg_core::Complex64>; 3], re: bool| {
        (0..ne).flat_map(move |k| {
            (0..np).map(move |i| {
                let f = field(&fields[k]);
                std::array::from_fn(|d| if re { f[d][i].re } else { f[d][i].im })
            })
        })
    };
    write_vtk_vectors(&mut out, "re_e", component(|s| &s.e, true))?;
    write_vtk_vectors(&mut out, "im_e", component(|s| &s.e, false))?;
    write_vtk_vectors(&mut out, "re_h", component(|s| &s.h, true))?;
    write_vtk_vectors(&mut out, "im_h", component(|s| &s.h, false))?;
    out.flush()
}
