//! State and adjoint solves for −Δu + Vu = f with homogeneous Dirichlet
//! conditions, plus the cost functional ∫ g·u dx and its penalized form.
//!
//! The discrete resolvent maps a load to the nodal solution of
//! `(K + M_V) u = b` restricted to interior unknowns (row/column removal,
//! not penalty), with zeros scattered back onto boundary nodes. Data
//! functions are evaluated analytically at quadrature points, so the cost
//! integral coincides with the load-vector pairing `b_g·u` exactly.

use crate::assemble::{assemble_load, assemble_stiffness, edge_midpoints, MassLumping};
use crate::error::{Error, Result};
use crate::field::{PotentialField, ScalarField};
use crate::mesh::Mesh;
use crate::optimize;
use crate::psi::PsiFamily;
use crate::sparse::{solve_spd_from, SparseSymmetricMatrix};

/// Relative residual used for state and adjoint solves. Chosen tight enough
/// that finite-difference gradient checks at 1e−6 are not limited by solver
/// noise.
pub const STATE_SOLVE_TOL: f64 = 1e-10;

/// Precomputed interior system for one mesh and mass variant.
///
/// Builds the stiffness restriction once; per-potential systems are a value
/// copy plus an indexed scatter of the mass term, which keeps repeated
/// solves inside the optimizer cheap.
pub struct Workspace {
    lumping: MassLumping,
    k_int: SparseSymmetricMatrix,
    /// Interior node indices, ascending.
    interior: Vec<usize>,
    /// Per-triangle CSR positions of the mass contributions; `usize::MAX`
    /// marks pairs touching a boundary node.
    slots: Vec<[usize; 9]>,
    num_nodes: usize,
    num_triangles: usize,
    element_area: Vec<f64>,
    triangles: Vec<[usize; 3]>,
}

impl Workspace {
    pub fn new(mesh: &Mesh, lumping: MassLumping) -> Workspace {
        let k = assemble_stiffness(mesh);
        let (k_int, interior) = k.restrict(&mesh.boundary.iter().map(|b| !b).collect::<Vec<_>>());
        let mut node_to_interior = vec![usize::MAX; mesh.num_nodes()];
        for (idx, &node) in interior.iter().enumerate() {
            node_to_interior[node] = idx;
        }
        let mut slots = Vec::with_capacity(mesh.num_triangles());
        for t in 0..mesh.num_triangles() {
            let nodes = mesh.triangles[t];
            let mut s = [usize::MAX; 9];
            for i in 0..3 {
                for j in 0..3 {
                    let (gi, gj) = (node_to_interior[nodes[i]], node_to_interior[nodes[j]]);
                    if gi != usize::MAX && gj != usize::MAX {
                        s[3 * i + j] = k_int
                            .position(gi, gj)
                            .expect("stiffness pattern covers element adjacency");
                    }
                }
            }
            slots.push(s);
        }
        Workspace {
            lumping,
            k_int,
            interior,
            slots,
            num_nodes: mesh.num_nodes(),
            num_triangles: mesh.num_triangles(),
            element_area: mesh.element_area.clone(),
            triangles: mesh.triangles.clone(),
        }
    }

    pub fn lumping(&self) -> MassLumping {
        self.lumping
    }

    pub fn interior_nodes(&self) -> &[usize] {
        &self.interior
    }

    /// Interior system `K + M_V` for the given potential.
    pub fn system(&self, v: &PotentialField) -> Result<SparseSymmetricMatrix> {
        if v.len() != self.num_triangles {
            return Err(Error::invalid(format!(
                "potential has {} values for {} triangles",
                v.len(),
                self.num_triangles
            )));
        }
        let mut a = self.k_int.clone();
        let values = a.values_mut();
        for t in 0..self.num_triangles {
            let vt = v.values[t];
            if vt < 0.0 || !vt.is_finite() {
                return Err(Error::invalid(format!(
                    "potential must be finite and nonnegative, got {vt} at element {t}"
                )));
            }
            if vt == 0.0 {
                continue;
            }
            let area = self.element_area[t];
            let s = &self.slots[t];
            match self.lumping {
                MassLumping::Lumped => {
                    let w = vt * area / 3.0;
                    for i in 0..3 {
                        let pos = s[3 * i + i];
                        if pos != usize::MAX {
                            values[pos] += w;
                        }
                    }
                }
                MassLumping::Consistent => {
                    let w = vt * area / 12.0;
                    for i in 0..3 {
                        for j in 0..3 {
                            let pos = s[3 * i + j];
                            if pos != usize::MAX {
                                values[pos] += if i == j { 2.0 * w } else { w };
                            }
                        }
                    }
                }
            }
        }
        Ok(a)
    }

    /// Restriction of a full nodal vector to interior entries.
    pub fn restrict(&self, full: &[f64]) -> Vec<f64> {
        self.interior.iter().map(|&n| full[n]).collect()
    }

    /// Scatters interior values onto the full node set with zero boundary.
    pub fn scatter(&self, interior_values: &[f64]) -> Vec<f64> {
        let mut full = vec![0.0; self.num_nodes];
        for (idx, &n) in self.interior.iter().enumerate() {
            full[n] = interior_values[idx];
        }
        full
    }

    /// Solves the interior system for `b_int`, optionally warm-started.
    pub fn solve_interior(
        &self,
        v: &PotentialField,
        b_int: &[f64],
        guess: Option<&[f64]>,
        tol: f64,
    ) -> Result<Vec<f64>> {
        let a = self.system(v)?;
        solve_spd_from(&a, b_int, guess, tol)
    }

    /// Full nodal solve of `(K + M_V) u = b_full`.
    pub fn solve(&self, v: &PotentialField, b_full: &[f64], tol: f64) -> Result<ScalarField> {
        let b_int = self.restrict(b_full);
        let x = self.solve_interior(v, &b_int, None, tol)?;
        Ok(ScalarField {
            values: self.scatter(&x),
        })
    }

    /// Per-element pairing `p·(∂A/∂V_T)·u` of the mass derivative, i.e. the
    /// exact derivative of the discrete bilinear form for this variant.
    pub fn mass_pairing(&self, t: usize, u: &ScalarField, p: &ScalarField) -> f64 {
        let nodes = self.triangles[t];
        let area = self.element_area[t];
        match self.lumping {
            MassLumping::Lumped => {
                let mut acc = 0.0;
                for &n in &nodes {
                    acc += u.values[n] * p.values[n];
                }
                acc * area / 3.0
            }
            MassLumping::Consistent => {
                let (mut su, mut sp, mut spu) = (0.0, 0.0, 0.0);
                for &n in &nodes {
                    su += u.values[n];
                    sp += p.values[n];
                    spu += u.values[n] * p.values[n];
                }
                (su * sp + spu) * area / 12.0
            }
        }
    }

}

/// Solves the state equation −Δu + Vu = f, u = 0 on the boundary.
pub fn solve_state<F: Fn(f64, f64) -> f64>(
    mesh: &Mesh,
    v: &PotentialField,
    f: F,
    lumping: MassLumping,
) -> Result<ScalarField> {
    let ws = Workspace::new(mesh, lumping);
    let b = assemble_load(mesh, f);
    ws.solve(v, &b, STATE_SOLVE_TOL)
}

/// Solves the adjoint equation −Δp + Vp = −g, p = 0 on the boundary;
/// equivalently `p = −R_V(g)`.
pub fn solve_adjoint<G: Fn(f64, f64) -> f64>(
    mesh: &Mesh,
    v: &PotentialField,
    g: G,
    lumping: MassLumping,
) -> Result<ScalarField> {
    solve_state(mesh, v, |x, y| -g(x, y), lumping)
}

/// Cost functional ∫ g·u dx via the shared edge-midpoint quadrature:
/// `g` is sampled analytically at midpoints, `u` interpolated there.
pub fn cost<G: Fn(f64, f64) -> f64>(mesh: &Mesh, g: G, u: &ScalarField) -> Result<f64> {
    if u.len() != mesh.num_nodes() {
        return Err(Error::invalid(format!(
            "state has {} values for {} nodes",
            u.len(),
            mesh.num_nodes()
        )));
    }
    let mut total = 0.0;
    for t in 0..mesh.num_triangles() {
        let [a, b, c] = mesh.triangles[t];
        let mids = edge_midpoints(mesh, t);
        let w = mesh.element_area[t] / 3.0;
        let u01 = 0.5 * (u.values[a] + u.values[b]);
        let u12 = 0.5 * (u.values[b] + u.values[c]);
        let u20 = 0.5 * (u.values[c] + u.values[a]);
        total += w
            * (g(mids[0][0], mids[0][1]) * u01
                + g(mids[1][0], mids[1][1]) * u12
                + g(mids[2][0], mids[2][1]) * u20);
    }
    Ok(total)
}

/// Penalized functional I_λ = ∫ g·u dx + λ·∫ Ψ(V) dx.
pub fn penalized_cost<G: Fn(f64, f64) -> f64>(
    mesh: &Mesh,
    g: G,
    u: &ScalarField,
    v: &PotentialField,
    lambda: f64,
    psi: &PsiFamily,
) -> Result<f64> {
    if !(lambda >= 0.0) {
        return Err(Error::invalid(format!("multiplier must be nonnegative, got {lambda}")));
    }
    Ok(cost(mesh, g, u)? + lambda * optimize::volume(mesh, v, psi)?)
}
