//! P1/P0 finite-element assembly on structured triangle meshes.
//!
//! The bilinear forms are the standard P1 stiffness for −Δ and a P0-weighted
//! mass term for the potential. All integrals of data share one quadrature:
//! the 3-point edge-midpoint rule, exact for quadratic integrands, so loads,
//! cost values and gradients are evaluated consistently.

use crate::error::{Error, Result};
use crate::field::PotentialField;
use crate::mesh::Mesh;
use crate::sparse::SparseSymmetricMatrix;

/// Treatment of the potential mass term.
///
/// Lumping keeps the system an M-matrix (discrete maximum principle); the
/// consistent variant is available for convergence studies.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MassLumping {
    Lumped,
    Consistent,
}

/// Edge midpoints of triangle `t`, ordered (01, 12, 20).
pub(crate) fn edge_midpoints(mesh: &Mesh, t: usize) -> [[f64; 2]; 3] {
    let [a, b, c] = mesh.triangles[t];
    let pa = mesh.nodes[a];
    let pb = mesh.nodes[b];
    let pc = mesh.nodes[c];
    [
        [(pa[0] + pb[0]) * 0.5, (pa[1] + pb[1]) * 0.5],
        [(pb[0] + pc[0]) * 0.5, (pb[1] + pc[1]) * 0.5],
        [(pc[0] + pa[0]) * 0.5, (pc[1] + pa[1]) * 0.5],
    ]
}

/// P1 stiffness matrix of −Δ over all nodes; Dirichlet rows are not yet
/// eliminated. Interior row sums vanish since constants lie in the kernel.
pub fn assemble_stiffness(mesh: &Mesh) -> SparseSymmetricMatrix {
    let mut triplets = Vec::with_capacity(9 * mesh.num_triangles());
    for t in 0..mesh.num_triangles() {
        let [a, b, c] = mesh.triangles[t];
        let p = [mesh.nodes[a], mesh.nodes[b], mesh.nodes[c]];
        let area = mesh.element_area[t];
        // ∇φ_i = (b_i, c_i) / (2A) with the usual cyclic edge differences.
        let bx = [p[1][1] - p[2][1], p[2][1] - p[0][1], p[0][1] - p[1][1]];
        let cy = [p[2][0] - p[1][0], p[0][0] - p[2][0], p[1][0] - p[0][0]];
        let nodes = [a, b, c];
        for i in 0..3 {
            for j in 0..3 {
                let k = (bx[i] * bx[j] + cy[i] * cy[j]) / (4.0 * area);
                triplets.push((nodes[i], nodes[j], k));
            }
        }
    }
    SparseSymmetricMatrix::from_triplets(mesh.num_nodes(), &triplets)
}

/// Mass matrix weighted by the piecewise-constant potential `v`.
///
/// Consistent variant: element contribution `V_T·|T|/12·(1 + δ_ij)`.
/// Lumped variant: node `i` receives `Σ_{T∋i} V_T·|T|/3` on the diagonal.
/// Both carry the same total mass `Σ_T V_T·|T|`.
pub fn assemble_potential_mass(
    mesh: &Mesh,
    v: &PotentialField,
    lumping: MassLumping,
) -> Result<SparseSymmetricMatrix> {
    if v.len() != mesh.num_triangles() {
        return Err(Error::invalid(format!(
            "potential has {} values for {} triangles",
            v.len(),
            mesh.num_triangles()
        )));
    }
    for (t, &vt) in v.values.iter().enumerate() {
        if !vt.is_finite() || vt < 0.0 {
            return Err(Error::invalid(format!(
                "potential must be finite and nonnegative, got {vt} at element {t}"
            )));
        }
    }
    let mut triplets = Vec::new();
    for t in 0..mesh.num_triangles() {
        let vt = v.values[t];
        if vt == 0.0 {
            continue;
        }
        let nodes = mesh.triangles[t];
        let area = mesh.element_area[t];
        match lumping {
            MassLumping::Lumped => {
                let w = vt * area / 3.0;
                for &n in &nodes {
                    triplets.push((n, n, w));
                }
            }
            MassLumping::Consistent => {
                let w = vt * area / 12.0;
                for i in 0..3 {
                    for j in 0..3 {
                        let entry = if i == j { 2.0 * w } else { w };
                        triplets.push((nodes[i], nodes[j], entry));
                    }
                }
            }
        }
    }
    Ok(SparseSymmetricMatrix::from_triplets(
        mesh.num_nodes(),
        &triplets,
    ))
}

/// Load vector `b_i = ∫ f·φ_i dx` with the shared edge-midpoint rule.
pub fn assemble_load<F: Fn(f64, f64) -> f64>(mesh: &Mesh, f: F) -> Vec<f64> {
    let mut b = vec![0.0; mesh.num_nodes()];
    for t in 0..mesh.num_triangles() {
        let [a, bb, c] = mesh.triangles[t];
        let mids = edge_midpoints(mesh, t);
        let w = mesh.element_area[t] / 3.0;
        let f01 = f(mids[0][0], mids[0][1]);
        let f12 = f(mids[1][0], mids[1][1]);
        let f20 = f(mids[2][0], mids[2][1]);
        // φ_i equals 1/2 on the two edges adjacent to vertex i.
        b[a] += w * 0.5 * (f01 + f20);
        b[bb] += w * 0.5 * (f01 + f12);
        b[c] += w * 0.5 * (f12 + f20);
    }
    b
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{build_structured_mesh, Rectangle};

    fn unit_mesh(n: usize) -> Mesh {
        build_structured_mesh(n, n, Rectangle::unit_square()).unwrap()
    }

    #[test]
    fn stiffness_reproduces_five_point_stencil() {
        let mesh = unit_mesh(2);
        let k = assemble_stiffness(&mesh);
        let center = 4;
        assert_eq!(k.get(center, center), 4.0);
        // axis neighbors: left 3, right 5, below 1, above 7
        for n in [3, 5, 1, 7] {
            assert_eq!(k.get(center, n), -1.0, "axis neighbor {n}");
        }
        // diagonal-coupled corners cancel exactly on the right-triangle mesh
        for n in [0, 8] {
            assert_eq!(k.get(center, n), 0.0, "diagonal neighbor {n}");
        }
    }

    #[test]
    fn stiffness_symmetric_with_zero_interior_row_sums() {
        let mesh =
            build_structured_mesh(5, 4, Rectangle::new(0.0, 2.0, -1.0, 1.0).unwrap()).unwrap();
        let k = assemble_stiffness(&mesh);
        assert!(k.symmetry_error() == 0.0, "assembled asymmetry");
        for &i in mesh.interior_nodes() {
            let (_, vals) = k.row(i);
            let sum: f64 = vals.iter().sum();
            assert!(sum.abs() <= 1e-12, "row {i} sums to {sum}");
        }
    }

    #[test]
    fn stiffness_offdiagonals_nonpositive() {
        let mesh = unit_mesh(6);
        let k = assemble_stiffness(&mesh);
        for i in 0..mesh.num_nodes() {
            let (cols, vals) = k.row(i);
            for (&j, &v) in cols.iter().zip(vals) {
                if i != j {
                    assert!(v <= 1e-14, "K({i},{j}) = {v} positive off-diagonal");
                }
            }
        }
    }

    #[test]
    fn zero_potential_gives_zero_matrix() {
        let mesh = unit_mesh(3);
        let v = PotentialField::uniform(&mesh, 0.0);
        let m = assemble_potential_mass(&mesh, &v, MassLumping::Lumped).unwrap();
        assert_eq!(m.nnz(), 0);
    }

    #[test]
    fn lumped_interior_diagonal_on_two_by_two() {
        let mesh = unit_mesh(2);
        let v = PotentialField::uniform(&mesh, 1.0);
        let m = assemble_potential_mass(&mesh, &v, MassLumping::Lumped).unwrap();
        // interior node touches 6 triangles of area 1/8
        assert!((m.get(4, 4) - 0.25).abs() < 1e-15);
    }

    #[test]
    fn consistent_and_lumped_share_total_mass() {
        use rand::prelude::*;
        let mesh = unit_mesh(4);
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        let v = PotentialField::new(
            &mesh,
            (0..mesh.num_triangles()).map(|_| rng.gen_range(0.0..5.0)).collect(),
        )
        .unwrap();
        let total = |m: &SparseSymmetricMatrix| -> f64 {
            (0..m.dim()).map(|i| m.row(i).1.iter().sum::<f64>()).sum()
        };
        let lumped = assemble_potential_mass(&mesh, &v, MassLumping::Lumped).unwrap();
        let consistent = assemble_potential_mass(&mesh, &v, MassLumping::Consistent).unwrap();
        let exact: f64 = v
            .values
            .iter()
            .zip(&mesh.element_area)
            .map(|(vt, a)| vt * a)
            .sum();
        assert!((total(&lumped) - exact).abs() < 1e-14);
        assert!((total(&consistent) - exact).abs() < 1e-14);
    }

    #[test]
    fn negative_potential_rejected() {
        let mesh = unit_mesh(2);
        let mut vals = vec![1.0; mesh.num_triangles()];
        vals[3] = -0.5;
        let v = PotentialField::new(&mesh, vals).unwrap();
        assert!(assemble_potential_mass(&mesh, &v, MassLumping::Lumped).is_err());
    }

    #[test]
    fn load_of_one_hits_quarter_at_interior_node() {
        let mesh = unit_mesh(2);
        let b = assemble_load(&mesh, |_, _| 1.0);
        assert!((b[4] - 0.25).abs() < 1e-15);
    }

    #[test]
    fn load_of_zero_is_zero() {
        let mesh = unit_mesh(3);
        let b = assemble_load(&mesh, |_, _| 0.0);
        assert!(b.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn load_sum_equals_constant_times_area() {
        let rect = Rectangle::new(0.0, 2.0, 0.0, 1.5).unwrap();
        let mesh = build_structured_mesh(7, 5, rect).unwrap();
        let c = 3.25;
        let b = assemble_load(&mesh, |_, _| c);
        let sum: f64 = b.iter().sum();
        assert!(
            (sum - c * rect.area()).abs() <= 1e-12 * c * rect.area(),
            "partition of unity violated: {sum}"
        );
    }

    #[test]
    fn lumped_system_is_m_matrix() {
        use rand::prelude::*;
        let mesh = unit_mesh(5);
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        let v = PotentialField::new(
            &mesh,
            (0..mesh.num_triangles()).map(|_| rng.gen_range(0.0..100.0)).collect(),
        )
        .unwrap();
        let k = assemble_stiffness(&mesh);
        let m = assemble_potential_mass(&mesh, &v, MassLumping::Lumped).unwrap();
        let a = k.add(&m).unwrap();
        for i in 0..a.dim() {
            let (cols, vals) = a.row(i);
            let mut diag = 0.0;
            let mut off_sum = 0.0;
            for (&j, &v) in cols.iter().zip(vals) {
                if j == i {
                    diag = v;
                } else {
                    assert!(v <= 1e-14, "positive off-diagonal at ({i},{j})");
                    off_sum += v.abs();
                }
            }
            assert!(diag > 0.0, "non-positive diagonal at {i}");
            assert!(diag + 1e-12 >= off_sum, "row {i} not weakly diagonally dominant");
        }
    }
}
