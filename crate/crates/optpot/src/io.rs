//! Byte-deterministic output writers: iteration history as CSV, fields as
//! legacy ASCII VTK, the potential as a binary PGM image, and plain-text
//! reports. Floating values are written in shortest round-trip decimal
//! form and all text files use LF line endings.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::field::{PotentialField, ScalarField};
use crate::mesh::Mesh;
use crate::optimize::IterationRecord;

/// CSV header used by [`write_history_csv`].
pub const HISTORY_HEADER: &str = "iter,cost,volume,lambda,eta,grad_norm";

/// Writes the iteration history; one row per record after the header.
pub fn write_history_csv(records: &[IterationRecord], path: &Path) -> Result<()> {
    let mut out = String::with_capacity(64 * (records.len() + 1));
    out.push_str(HISTORY_HEADER);
    out.push('\n');
    for r in records {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{}",
            r.iter, r.cost, r.volume, r.lambda, r.eta, r.grad_norm
        );
    }
    fs::write(path, out)?;
    Ok(())
}

/// Parses a file produced by [`write_history_csv`].
pub fn read_history_csv(path: &Path) -> Result<Vec<IterationRecord>> {
    let text = fs::read_to_string(path)?;
    let mut lines = text.lines();
    match lines.next() {
        Some(h) if h == HISTORY_HEADER => {}
        other => {
            return Err(Error::invalid(format!(
                "bad history header: {:?}",
                other.unwrap_or("<empty>")
            )))
        }
    }
    let mut records = Vec::new();
    for (idx, line) in lines.enumerate() {
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 6 {
            return Err(Error::invalid(format!(
                "history row {} has {} fields",
                idx + 2,
                fields.len()
            )));
        }
        let num = |s: &str| -> Result<f64> {
            s.parse::<f64>()
                .map_err(|_| Error::invalid(format!("bad float `{s}` in history row {}", idx + 2)))
        };
        records.push(IterationRecord {
            iter: fields[0]
                .parse::<usize>()
                .map_err(|_| Error::invalid(format!("bad iter `{}`", fields[0])))?,
            cost: num(fields[1])?,
            volume: num(fields[2])?,
            lambda: num(fields[3])?,
            eta: num(fields[4])?,
            grad_norm: num(fields[5])?,
        });
    }
    Ok(records)
}

/// Writes state, adjoint and potential as a legacy ASCII VTK unstructured
/// grid: points with z = 0, triangle cells (type 5), `state`/`adjoint`
/// point scalars and a `potential` cell scalar.
pub fn write_vtk(
    mesh: &Mesh,
    u: &ScalarField,
    p: &ScalarField,
    v: &PotentialField,
    path: &Path,
) -> Result<()> {
    if u.len() != mesh.num_nodes() || p.len() != mesh.num_nodes() || v.len() != mesh.num_triangles()
    {
        return Err(Error::invalid("field sizes do not match the mesh".to_string()));
    }
    let mut out = String::new();
    out.push_str("# vtk DataFile Version 3.0\n");
    out.push_str("optpot fields\n");
    out.push_str("ASCII\n");
    out.push_str("DATASET UNSTRUCTURED_GRID\n");
    let _ = writeln!(out, "POINTS {} double", mesh.num_nodes());
    for n in &mesh.nodes {
        let _ = writeln!(out, "{} {} 0", n[0], n[1]);
    }
    let nt = mesh.num_triangles();
    let _ = writeln!(out, "CELLS {nt} {}", 4 * nt);
    for t in &mesh.triangles {
        let _ = writeln!(out, "3 {} {} {}", t[0], t[1], t[2]);
    }
    let _ = writeln!(out, "CELL_TYPES {nt}");
    for _ in 0..nt {
        out.push_str("5\n");
    }
    let _ = writeln!(out, "POINT_DATA {}", mesh.num_nodes());
    out.push_str("SCALARS state double 1\nLOOKUP_TABLE default\n");
    for x in &u.values {
        let _ = writeln!(out, "{x}");
    }
    out.push_str("SCALARS adjoint double 1\nLOOKUP_TABLE default\n");
    for x in &p.values {
        let _ = writeln!(out, "{x}");
    }
    let _ = writeln!(out, "CELL_DATA {nt}");
    out.push_str("SCALARS potential double 1\nLOOKUP_TABLE default\n");
    for x in &v.values {
        let _ = writeln!(out, "{x}");
    }
    fs::write(path, out)?;
    Ok(())
}

/// Reads the `potential` cell array back from a VTK file produced by
/// [`write_vtk`].
pub fn read_vtk_potential(path: &Path, expected_len: usize) -> Result<Vec<f64>> {
    let text = fs::read_to_string(path)?;
    let mut lines = text.lines();
    if lines.next() != Some("# vtk DataFile Version 3.0") {
        return Err(Error::invalid(format!(
            "`{}` is not a legacy VTK file",
            path.display()
        )));
    }
    let mut values = Vec::new();
    // 0: searching for the array, 1: expecting LOOKUP_TABLE, 2: reading
    let mut state = 0u8;
    for line in lines {
        match state {
            0 => {
                if line.starts_with("SCALARS potential") {
                    state = 1;
                }
            }
            1 => {
                if !line.starts_with("LOOKUP_TABLE") {
                    return Err(Error::invalid(
                        "expected LOOKUP_TABLE after the potential SCALARS line".to_string(),
                    ));
                }
                state = 2;
            }
            _ => {
                if values.len() == expected_len {
                    break;
                }
                let v = line.trim().parse::<f64>().map_err(|_| {
                    Error::invalid(format!("bad potential value `{line}` in VTK file"))
                })?;
                values.push(v);
            }
        }
    }
    if state != 2 {
        return Err(Error::invalid("VTK file has no `potential` cell array".to_string()));
    }
    if values.len() != expected_len {
        return Err(Error::invalid(format!(
            "potential array has {} values, expected {expected_len}",
            values.len()
        )));
    }
    Ok(values)
}

/// Reads a raw text potential: whitespace-separated floats, one per
/// triangle.
pub fn read_potential_raw(path: &Path, expected_len: usize) -> Result<Vec<f64>> {
    let text = fs::read_to_string(path)?;
    let mut values = Vec::with_capacity(expected_len);
    for token in text.split_whitespace() {
        let v = token
            .parse::<f64>()
            .map_err(|_| Error::invalid(format!("bad potential value `{token}`")))?;
        values.push(v);
    }
    if values.len() != expected_len {
        return Err(Error::invalid(format!(
            "raw potential has {} values, expected {expected_len}",
            values.len()
        )));
    }
    Ok(values)
}

/// Writes the potential as a binary PGM (`P5`) image of `nx × ny` pixels.
///
/// Pixel (i, j) is `round(255·clamp(cell_mean/vmax, 0, 1))` for grid cell
/// (i, j); rows run from the top of the domain (y = y_max) downwards, so
/// black is potential 0 and white is `vmax`.
pub fn write_potential_pgm(mesh: &Mesh, v: &PotentialField, vmax: f64, path: &Path) -> Result<()> {
    if v.len() != mesh.num_triangles() {
        return Err(Error::invalid("potential size does not match mesh".to_string()));
    }
    if !(vmax > 0.0) {
        return Err(Error::invalid(format!("vmax must be positive, got {vmax}")));
    }
    let mut bytes = Vec::with_capacity(32 + mesh.nx * mesh.ny);
    bytes.extend_from_slice(format!("P5\n{} {}\n255\n", mesh.nx, mesh.ny).as_bytes());
    for row in 0..mesh.ny {
        let j = mesh.ny - 1 - row;
        for i in 0..mesh.nx {
            let (t0, t1) = mesh.cell_triangles(i, j);
            let mean = 0.5 * (v.values[t0] + v.values[t1]);
            let shade = (255.0 * (mean / vmax).clamp(0.0, 1.0)).round();
            bytes.push(shade as u8);
        }
    }
    fs::write(path, bytes)?;
    Ok(())
}

/// Summary block written at the end of a run; two volume notions are
/// reported because at small α the profile floor Ψ(vmax) is not negligible
/// and either may be the quantity of interest.
#[derive(Debug, Clone)]
pub struct RunSummary {
    pub problem_name: String,
    pub status: String,
    pub iterations: usize,
    pub final_cost: f64,
    /// Constraint value Σ_T Ψ(V_T)·|T|.
    pub constraint_volume: f64,
    /// Thresholded area |{T : V_T < vmax/2}|.
    pub occupied_area: f64,
    pub volume_bound: f64,
    pub lambda: f64,
    pub report: Option<crate::diagnostics::OptimalityReport>,
}

/// Thresholded occupied area `|{T : V_T < vmax/2}|`.
pub fn occupied_area(mesh: &Mesh, v: &PotentialField, vmax: f64) -> f64 {
    v.values
        .iter()
        .zip(&mesh.element_area)
        .filter(|(&vt, _)| vt < 0.5 * vmax)
        .map(|(_, &a)| a)
        .sum()
}

impl RunSummary {
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "problem: {}", self.problem_name);
        let _ = writeln!(out, "status: {}", self.status);
        let _ = writeln!(out, "iterations: {}", self.iterations);
        let _ = writeln!(out, "final_cost: {}", self.final_cost);
        let _ = writeln!(out, "constraint_volume: {}", self.constraint_volume);
        let _ = writeln!(out, "occupied_area: {}", self.occupied_area);
        let _ = writeln!(out, "volume_bound: {}", self.volume_bound);
        let _ = writeln!(out, "lambda: {}", self.lambda);
        if let Some(r) = &self.report {
            let _ = writeln!(out, "constraint_slack: {}", r.constraint_slack);
            let _ = writeln!(
                out,
                "stationarity_residual_interior: {}",
                r.stationarity_residual_interior
            );
            let _ = writeln!(
                out,
                "stationarity_residual_pairing: {}",
                r.stationarity_residual_pairing
            );
            let _ = writeln!(out, "stationarity_scale: {}", r.stationarity_scale);
            let _ = writeln!(out, "interior_element_count: {}", r.interior_element_count);
            let _ = writeln!(out, "sign_violation_lower: {}", r.sign_violation_lower);
            let _ = writeln!(out, "sign_violation_upper: {}", r.sign_violation_upper);
            let _ = writeln!(out, "lemma1_max: {}", r.lemma1_max);
            let _ = writeln!(out, "lemma1_scale: {}", r.lemma1_scale);
            if let Some(u) = &r.unsaturated {
                let _ = writeln!(
                    out,
                    "unsaturated_max_abs_state_on_support: {}",
                    u.max_abs_state_on_support
                );
                let _ = writeln!(
                    out,
                    "unsaturated_max_state_on_zero_set: {}",
                    u.max_state_on_zero_set
                );
            }
        }
        out
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_text())?;
        Ok(())
    }
}
