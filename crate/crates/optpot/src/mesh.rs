//! Structured triangulations of axis-aligned rectangles.
//!
//! Every cell of an `nx × ny` grid is split into two right triangles by the
//! diagonal running from the lower-left to the upper-right corner; the
//! orientation is fixed so that repeated runs produce bit-identical meshes.
//! Triangles are counterclockwise and all share the area `Δx·Δy/2`.

use crate::error::{Error, Result};

/// Axis-aligned rectangle `(x0, x1) × (y0, y1)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rectangle {
    pub x0: f64,
    pub x1: f64,
    pub y0: f64,
    pub y1: f64,
}

impl Rectangle {
    pub fn new(x0: f64, x1: f64, y0: f64, y1: f64) -> Result<Self> {
        if !(x1 - x0).is_finite() || !(y1 - y0).is_finite() || x1 <= x0 || y1 <= y0 {
            return Err(Error::invalid(format!(
                "degenerate rectangle ({x0}, {x1}) x ({y0}, {y1})"
            )));
        }
        Ok(Rectangle { x0, x1, y0, y1 })
    }

    pub fn unit_square() -> Self {
        Rectangle {
            x0: 0.0,
            x1: 1.0,
            y0: 0.0,
            y1: 1.0,
        }
    }

    pub fn width(&self) -> f64 {
        self.x1 - self.x0
    }

    pub fn height(&self) -> f64 {
        self.y1 - self.y0
    }

    pub fn area(&self) -> f64 {
        self.width() * self.height()
    }
}

/// Structured triangle mesh of a rectangle.
///
/// Nodes are numbered row-major with x fastest: node `(i, j)` has index
/// `j·(nx+1) + i`. Cell `(i, j)` owns triangles `2·(j·nx + i)` (lower-right
/// half) and `2·(j·nx + i) + 1` (upper-left half).
#[derive(Debug, Clone)]
pub struct Mesh {
    pub nx: usize,
    pub ny: usize,
    pub rect: Rectangle,
    /// Node coordinates, `(nx+1)·(ny+1)` entries.
    pub nodes: Vec<[f64; 2]>,
    /// Counterclockwise vertex triples, `2·nx·ny` entries.
    pub triangles: Vec<[usize; 3]>,
    /// True for nodes on the rectangle boundary.
    pub boundary: Vec<bool>,
    /// Per-triangle area (uniform on a structured mesh, stored per element).
    pub element_area: Vec<f64>,
    interior: Vec<usize>,
}

/// Builds the structured triangulation of `rect` with `nx × ny` cells.
pub fn build_structured_mesh(nx: usize, ny: usize, rect: Rectangle) -> Result<Mesh> {
    if nx < 1 || ny < 1 {
        return Err(Error::invalid(format!(
            "mesh needs at least one cell per axis, got nx={nx}, ny={ny}"
        )));
    }
    Rectangle::new(rect.x0, rect.x1, rect.y0, rect.y1)?;

    let dx = rect.width() / nx as f64;
    let dy = rect.height() / ny as f64;
    let n_nodes = (nx + 1) * (ny + 1);

    let mut nodes = Vec::with_capacity(n_nodes);
    let mut boundary = Vec::with_capacity(n_nodes);
    let mut interior = Vec::new();
    for j in 0..=ny {
        // Endpoints are exact; interior coordinates come from one fused
        // multiply-add so the layout is reproducible.
        let y = if j == 0 {
            rect.y0
        } else if j == ny {
            rect.y1
        } else {
            rect.y0 + j as f64 * dy
        };
        for i in 0..=nx {
            let x = if i == 0 {
                rect.x0
            } else if i == nx {
                rect.x1
            } else {
                rect.x0 + i as f64 * dx
            };
            let on_boundary = i == 0 || i == nx || j == 0 || j == ny;
            if !on_boundary {
                interior.push(nodes.len());
            }
            nodes.push([x, y]);
            boundary.push(on_boundary);
        }
    }

    let area = 0.5 * dx * dy;
    let mut triangles = Vec::with_capacity(2 * nx * ny);
    for j in 0..ny {
        for i in 0..nx {
            let n00 = j * (nx + 1) + i;
            let n10 = n00 + 1;
            let n01 = n00 + (nx + 1);
            let n11 = n01 + 1;
            // Diagonal from lower-left (n00) to upper-right (n11).
            triangles.push([n00, n10, n11]);
            triangles.push([n00, n11, n01]);
        }
    }

    Ok(Mesh {
        nx,
        ny,
        rect,
        element_area: vec![area; triangles.len()],
        nodes,
        triangles,
        boundary,
        interior,
    })
}

impl Mesh {
    pub fn num_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn num_triangles(&self) -> usize {
        self.triangles.len()
    }

    /// Indices of non-boundary nodes, ascending.
    pub fn interior_nodes(&self) -> &[usize] {
        &self.interior
    }

    pub fn total_area(&self) -> f64 {
        self.element_area.iter().sum()
    }

    /// Centroid of triangle `t`.
    pub fn centroid(&self, t: usize) -> [f64; 2] {
        let [a, b, c] = self.triangles[t];
        let pa = self.nodes[a];
        let pb = self.nodes[b];
        let pc = self.nodes[c];
        [
            (pa[0] + pb[0] + pc[0]) / 3.0,
            (pa[1] + pb[1] + pc[1]) / 3.0,
        ]
    }

    /// The two triangles of grid cell `(i, j)`.
    pub fn cell_triangles(&self, i: usize, j: usize) -> (usize, usize) {
        let c = 2 * (j * self.nx + i);
        (c, c + 1)
    }

    /// Signed area of triangle `t` from its vertex coordinates
    /// (positive for the counterclockwise orientation used here).
    pub fn signed_area(&self, t: usize) -> f64 {
        let [a, b, c] = self.triangles[t];
        let pa = self.nodes[a];
        let pb = self.nodes[b];
        let pc = self.nodes[c];
        0.5 * ((pb[0] - pa[0]) * (pc[1] - pa[1]) - (pc[0] - pa[0]) * (pb[1] - pa[1]))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn paper_scale_mesh_counts() {
        let mesh = build_structured_mesh(200, 200, Rectangle::unit_square()).unwrap();
        assert_eq!(mesh.num_nodes(), 40401);
        assert_eq!(mesh.num_triangles(), 80000);
    }

    #[test]
    fn smallest_mesh_is_all_boundary() {
        let mesh = build_structured_mesh(1, 1, Rectangle::unit_square()).unwrap();
        assert_eq!(mesh.num_nodes(), 4);
        assert_eq!(mesh.num_triangles(), 2);
        assert!(mesh.boundary.iter().all(|&b| b));
        assert!(mesh.interior_nodes().is_empty());
    }

    #[test]
    fn two_by_two_has_one_interior_node() {
        let mesh = build_structured_mesh(2, 2, Rectangle::unit_square()).unwrap();
        assert_eq!(mesh.num_nodes(), 9);
        assert_eq!(mesh.num_triangles(), 8);
        assert_eq!(mesh.interior_nodes(), &[4]);
        assert_eq!(mesh.nodes[4], [0.5, 0.5]);
    }

    #[test]
    fn areas_sum_to_domain_area() {
        let rect = Rectangle::new(-1.0, 2.5, 0.25, 1.75).unwrap();
        let mesh = build_structured_mesh(17, 9, rect).unwrap();
        let total = mesh.total_area();
        assert!(
            (total - rect.area()).abs() <= 1e-12 * rect.area(),
            "area sum {total} vs |D| {}",
            rect.area()
        );
    }

    #[test]
    fn triangles_are_counterclockwise_with_fixed_area() {
        let mesh = build_structured_mesh(5, 3, Rectangle::new(0.0, 2.0, 0.0, 1.0).unwrap()).unwrap();
        let expected = 0.5 * (2.0 / 5.0) * (1.0 / 3.0);
        for t in 0..mesh.num_triangles() {
            let signed = mesh.signed_area(t);
            assert!(signed > 0.0, "triangle {t} not counterclockwise");
            assert!((signed - expected).abs() < 1e-15);
            assert!((mesh.element_area[t] - expected).abs() < 1e-15);
        }
    }

    #[test]
    fn boundary_mask_matches_coordinates() {
        let rect = Rectangle::new(0.0, 1.0, 0.0, 2.0).unwrap();
        let mesh = build_structured_mesh(4, 6, rect).unwrap();
        for (idx, p) in mesh.nodes.iter().enumerate() {
            let on_edge =
                p[0] == rect.x0 || p[0] == rect.x1 || p[1] == rect.y0 || p[1] == rect.y1;
            assert_eq!(mesh.boundary[idx], on_edge, "node {idx} at {p:?}");
        }
    }

    #[test]
    fn rejects_degenerate_input() {
        assert!(build_structured_mesh(0, 1, Rectangle::unit_square()).is_err());
        assert!(Rectangle::new(0.0, 0.0, 0.0, 1.0).is_err());
        assert!(Rectangle::new(1.0, 0.0, 0.0, 1.0).is_err());
    }
}
