//! Nodal (P1) and per-element (P0) fields over a mesh.

use crate::error::{Error, Result};
use crate::mesh::Mesh;

/// Piecewise-linear nodal field: one value per mesh node. States and
/// adjoints produced by the solvers are zero on boundary nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField {
    pub values: Vec<f64>,
}

impl ScalarField {
    pub fn zeros(mesh: &Mesh) -> Self {
        ScalarField {
            values: vec![0.0; mesh.num_nodes()],
        }
    }

    pub fn new(mesh: &Mesh, values: Vec<f64>) -> Result<Self> {
        if values.len() != mesh.num_nodes() {
            return Err(Error::invalid(format!(
                "scalar field has {} values for {} nodes",
                values.len(),
                mesh.num_nodes()
            )));
        }
        Ok(ScalarField { values })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// P1 interpolation at the centroid of triangle `t`.
    pub fn at_centroid(&self, mesh: &Mesh, t: usize) -> f64 {
        let [a, b, c] = mesh.triangles[t];
        (self.values[a] + self.values[b] + self.values[c]) / 3.0
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }

    /// True when every boundary node carries an exact zero.
    pub fn vanishes_on_boundary(&self, mesh: &Mesh) -> bool {
        mesh.boundary
            .iter()
            .zip(&self.values)
            .all(|(&on_boundary, &v)| !on_boundary || v == 0.0)
    }
}

/// Piecewise-constant control field: one potential value per triangle,
/// kept inside the box `[0, vmax]`.
#[derive(Debug, Clone, PartialEq)]
pub struct PotentialField {
    pub values: Vec<f64>,
}

impl PotentialField {
    pub fn uniform(mesh: &Mesh, value: f64) -> Self {
        PotentialField {
            values: vec![value; mesh.num_triangles()],
        }
    }

    pub fn new(mesh: &Mesh, values: Vec<f64>) -> Result<Self> {
        if values.len() != mesh.num_triangles() {
            return Err(Error::invalid(format!(
                "potential field has {} values for {} triangles",
                values.len(),
                mesh.num_triangles()
            )));
        }
        Ok(PotentialField { values })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Checks the box invariant `0 ≤ V_T ≤ vmax` with exact comparisons.
    pub fn check_box(&self, vmax: f64) -> Result<()> {
        for (t, &v) in self.values.iter().enumerate() {
            if !v.is_finite() || v < 0.0 || v > vmax {
                return Err(Error::invalid(format!(
                    "potential value {v} at element {t} outside [0, {vmax}]"
                )));
            }
        }
        Ok(())
    }

    /// Fraction of elements clamped at `vmax`.
    pub fn fraction_at(&self, value: f64) -> f64 {
        if self.values.is_empty() {
            return 0.0;
        }
        let hits = self.values.iter().filter(|&&v| v == value).count();
        hits as f64 / self.values.len() as f64
    }
}

/// Per-element quantity such as the cost gradient `dI/dV_T`.
#[derive(Debug, Clone, PartialEq)]
pub struct ElementField {
    pub values: Vec<f64>,
}

impl ElementField {
    pub fn zeros(mesh: &Mesh) -> Self {
        ElementField {
            values: vec![0.0; mesh.num_triangles()],
        }
    }

    pub fn new(mesh: &Mesh, values: Vec<f64>) -> Result<Self> {
        if values.len() != mesh.num_triangles() {
            return Err(Error::invalid(format!(
                "element field has {} values for {} triangles",
                values.len(),
                mesh.num_triangles()
            )));
        }
        Ok(ElementField { values })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn all_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }

    /// Discrete L² norm of the associated density: `√(Σ_T (G_T/|T|)²·|T|)`.
    pub fn density_l2_norm(&self, mesh: &Mesh) -> f64 {
        self.values
            .iter()
            .zip(&mesh.element_area)
            .map(|(g, &a)| (g / a) * (g / a) * a)
            .sum::<f64>()
            .sqrt()
    }
}
