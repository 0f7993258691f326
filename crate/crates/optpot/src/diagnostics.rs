//! Independent oracles and a-posteriori optimality certificates.
//!
//! The finite-difference gradient re-solves the state at perturbed
//! potentials and differences the cost, so it shares nothing with the
//! analytic gradient formula it is used to check. The remaining checks
//! certify structural identities of the resolvent (self-adjointness,
//! comparison/maximum principles) and first-order optimality of computed
//! potentials: the product `R_V(g)·R_V(f)` must be nonpositive at an
//! optimum, and on unclamped elements the gradient density must balance
//! the multiplier times the constraint slope.

use crate::assemble::{assemble_load, MassLumping};
use crate::error::{Error, Result};
use crate::field::{PotentialField, ScalarField};
use crate::mesh::Mesh;
use crate::optimize::{cost_gradient, volume};
use crate::problems::ProblemSpec;
use crate::schrodinger::{cost, Workspace, STATE_SOLVE_TOL};

/// Tight solve tolerance for the finite-difference oracle, so central
/// differences are not dominated by solver noise.
pub const FD_SOLVE_TOL: f64 = 1e-13;

/// Central finite differences of the discrete cost with respect to the
/// listed element values, each requiring two fresh state solves.
///
/// Preconditions: `v_T ± h` must stay strictly inside `(0, vmax)` for every
/// listed element, so no clamping can contaminate the difference.
/// Returns one derivative per requested element, in input order.
pub fn fd_gradient(
    problem: &ProblemSpec,
    mesh: &Mesh,
    v: &PotentialField,
    elements: &[usize],
    h: f64,
    lumping: MassLumping,
) -> Result<Vec<f64>> {
    if !(h > 0.0) {
        return Err(Error::invalid(format!("fd step must be positive, got {h}")));
    }
    if v.len() != mesh.num_triangles() {
        return Err(Error::invalid(
            "potential size does not match the mesh".to_string(),
        ));
    }
    for &t in elements {
        if t >= v.len() {
            return Err(Error::invalid(format!("element index {t} out of range")));
        }
        let vt = v.values[t];
        if !(vt - h > 0.0 && vt + h < problem.vmax) {
            return Err(Error::invalid(format!(
                "element {t}: V_T ± h = {} ± {h} leaves (0, {}); pick interior values",
                vt, problem.vmax
            )));
        }
    }

    let ws = Workspace::new(mesh, lumping);
    let b_f = assemble_load(mesh, |x, y| problem.f.eval(x, y));
    let g = |x: f64, y: f64| problem.g.eval(x, y);

    let mut out = Vec::with_capacity(elements.len());
    for &t in elements {
        let mut plus = v.clone();
        plus.values[t] += h;
        let mut minus = v.clone();
        minus.values[t] -= h;
        let u_plus = ws.solve(&plus, &b_f, FD_SOLVE_TOL)?;
        let u_minus = ws.solve(&minus, &b_f, FD_SOLVE_TOL)?;
        let i_plus = cost(mesh, g, &u_plus)?;
        let i_minus = cost(mesh, g, &u_minus)?;
        out.push((i_plus - i_minus) / (2.0 * h));
    }
    Ok(out)
}

/// |∫ g·R_V(f) dx − ∫ f·R_V(g) dx|, the discrete self-adjointness defect.
pub fn check_self_adjoint<F, G>(
    mesh: &Mesh,
    v: &PotentialField,
    f: F,
    g: G,
    lumping: MassLumping,
) -> Result<f64>
where
    F: Fn(f64, f64) -> f64,
    G: Fn(f64, f64) -> f64,
{
    let ws = Workspace::new(mesh, lumping);
    let b_f = assemble_load(mesh, &f);
    let b_g = assemble_load(mesh, &g);
    let uf = ws.solve(v, &b_f, STATE_SOLVE_TOL)?;
    let ug = ws.solve(v, &b_g, STATE_SOLVE_TOL)?;
    let i_gf = cost(mesh, &g, &uf)?;
    let i_fg = cost(mesh, &f, &ug)?;
    Ok((i_gf - i_fg).abs())
}

/// Maximum of `R_V(g)·R_V(f)` over element centroids. Nonpositive (up to
/// a tolerance) at an optimal potential; strictly positive values certify
/// non-optimality for sign-definite products.
pub fn check_lemma1<F, G>(
    mesh: &Mesh,
    v: &PotentialField,
    f: F,
    g: G,
    lumping: MassLumping,
) -> Result<f64>
where
    F: Fn(f64, f64) -> f64,
    G: Fn(f64, f64) -> f64,
{
    let ws = Workspace::new(mesh, lumping);
    let rf = ws.solve(v, &assemble_load(mesh, &f), STATE_SOLVE_TOL)?;
    let rg = ws.solve(v, &assemble_load(mesh, &g), STATE_SOLVE_TOL)?;
    let mut worst = f64::NEG_INFINITY;
    for t in 0..mesh.num_triangles() {
        worst = worst.max(rf.at_centroid(mesh, t) * rg.at_centroid(mesh, t));
    }
    Ok(worst)
}

/// Costs at the scaled-down potentials `s·V_opt` for each scale in (0, 1].
///
/// At an optimum with nonnegative `g`, shrinking the potential can only
/// decrease the cost further, so each returned value should not exceed the
/// cost at `V_opt` (up to a diagnostic tolerance). Presumes optimality of
/// the input; the comparison is not meaningful at arbitrary potentials.
pub fn check_monotone_at_optimum(
    problem: &ProblemSpec,
    mesh: &Mesh,
    v_opt: &PotentialField,
    scales: &[f64],
    lumping: MassLumping,
) -> Result<Vec<f64>> {
    for &s in scales {
        if !(s > 0.0 && s <= 1.0) {
            return Err(Error::invalid(format!("scales must lie in (0, 1], got {s}")));
        }
    }
    let ws = Workspace::new(mesh, lumping);
    let b_f = assemble_load(mesh, |x, y| problem.f.eval(x, y));
    let g = |x: f64, y: f64| problem.g.eval(x, y);
    let mut costs = Vec::with_capacity(scales.len());
    for &s in scales {
        let scaled = PotentialField {
            values: v_opt.values.iter().map(|&vt| s * vt).collect(),
        };
        let u = ws.solve(&scaled, &b_f, STATE_SOLVE_TOL)?;
        costs.push(cost(mesh, g, &u)?);
    }
    Ok(costs)
}

/// First-order optimality certificate of a potential.
#[derive(Debug, Clone)]
pub struct OptimalityReport {
    /// Max over `{0 < V_T < vmax}` of |u·p − λ·(−Ψ′(V_T))| with u, p
    /// interpolated at element centroids.
    pub stationarity_residual_interior: f64,
    /// Same residual measured with the exact discrete pairing density
    /// `G_T/|T|` instead of the centroid product.
    pub stationarity_residual_pairing: f64,
    /// Number of elements strictly inside the box.
    pub interior_element_count: usize,
    /// Max over `{V_T = 0}` of the positive part of λ·(−Ψ′) − u·p.
    pub sign_violation_lower: f64,
    /// Max over `{V_T = vmax}` of the positive part of u·p − λ·(−Ψ′).
    pub sign_violation_upper: f64,
    /// Max over centroids of `R_V(g)·R_V(f)`; may have either sign.
    pub lemma1_max: f64,
    /// Scale `‖R_V f‖∞ · ‖R_V g‖∞` for reading `lemma1_max`.
    pub lemma1_scale: f64,
    /// Scale `max(‖u·p‖∞, λ·max(−Ψ′))` for the stationarity residuals.
    pub stationarity_scale: f64,
    /// `m − ∫Ψ(V) dx` at the reported potential.
    pub constraint_slack: f64,
    pub lambda: f64,
    /// Populated when λ = 0 and g ≥ 0 on the sampled centroids: the state
    /// should then vanish on the support of V and be nonpositive off it.
    pub unsaturated: Option<UnsaturatedCheck>,
}

/// Extra conditions in the unsaturated case (λ = 0, g ≥ 0).
#[derive(Debug, Clone, Copy)]
pub struct UnsaturatedCheck {
    /// Max |u| at centroids of elements with V_T > 0.
    pub max_abs_state_on_support: f64,
    /// Max u at centroids of elements with V_T = 0.
    pub max_state_on_zero_set: f64,
}

/// Evaluates the first-order conditions at `(v, lambda)`.
///
/// `lambda` should be the multiplier of the final accepted step (zero when
/// the constraint has slack beyond the bisection tolerance).
pub fn necessary_conditions(
    problem: &ProblemSpec,
    mesh: &Mesh,
    v: &PotentialField,
    lambda: f64,
    lumping: MassLumping,
) -> Result<OptimalityReport> {
    if !(lambda >= 0.0) {
        return Err(Error::invalid(format!("multiplier must be nonnegative, got {lambda}")));
    }
    v.check_box(problem.vmax)?;

    let ws = Workspace::new(mesh, lumping);
    let b_f = assemble_load(mesh, |x, y| problem.f.eval(x, y));
    let b_g = assemble_load(mesh, |x, y| problem.g.eval(x, y));
    let u = ws.solve(v, &b_f, STATE_SOLVE_TOL)?;
    let rg = ws.solve(v, &b_g, STATE_SOLVE_TOL)?;
    let p = ScalarField {
        values: rg.values.iter().map(|w| -w).collect(),
    };
    let grad = cost_gradient(mesh, &u, &p, lumping)?;

    let mut report = OptimalityReport {
        stationarity_residual_interior: 0.0,
        stationarity_residual_pairing: 0.0,
        interior_element_count: 0,
        sign_violation_lower: 0.0,
        sign_violation_upper: 0.0,
        lemma1_max: f64::NEG_INFINITY,
        lemma1_scale: 0.0,
        stationarity_scale: 0.0,
        constraint_slack: problem.m - volume(mesh, v, &problem.psi)?,
        lambda,
        unsaturated: None,
    };

    let mut max_uc = 0.0f64;
    let mut max_wc = 0.0f64;
    let mut g_nonneg = true;
    let mut max_abs_u_support = 0.0f64;
    let mut max_u_zero = f64::NEG_INFINITY;
    let mut any_zero = false;

    for t in 0..mesh.num_triangles() {
        let vt = v.values[t];
        let uc = u.at_centroid(mesh, t);
        let pc = p.at_centroid(mesh, t);
        let wc = rg.at_centroid(mesh, t);
        let negpsi = lambda * (-problem.psi.prime(vt)?);
        let centroid_density = uc * pc;
        let pairing_density = grad.values[t] / mesh.element_area[t];

        report.lemma1_max = report.lemma1_max.max(uc * wc);
        max_uc = max_uc.max(uc.abs());
        max_wc = max_wc.max(wc.abs());
        report.stationarity_scale = report
            .stationarity_scale
            .max(centroid_density.abs())
            .max(negpsi);

        if vt == 0.0 {
            report.sign_violation_lower =
                report.sign_violation_lower.max(negpsi - centroid_density);
            any_zero = true;
            max_u_zero = max_u_zero.max(uc);
        } else if vt == problem.vmax {
            report.sign_violation_upper =
                report.sign_violation_upper.max(centroid_density - negpsi);
        } else {
            report.interior_element_count += 1;
            report.stationarity_residual_interior = report
                .stationarity_residual_interior
                .max((centroid_density - negpsi).abs());
            report.stationarity_residual_pairing = report
                .stationarity_residual_pairing
                .max((pairing_density - negpsi).abs());
        }

        if vt > 0.0 {
            max_abs_u_support = max_abs_u_support.max(uc.abs());
        }
        let c = mesh.centroid(t);
        if problem.g.eval(c[0], c[1]) < 0.0 {
            g_nonneg = false;
        }
    }

    report.sign_violation_lower = report.sign_violation_lower.max(0.0);
    report.sign_violation_upper = report.sign_violation_upper.max(0.0);
    report.lemma1_scale = max_uc * max_wc;
    if report.lemma1_max == f64::NEG_INFINITY {
        report.lemma1_max = 0.0;
    }
    if lambda == 0.0 && g_nonneg {
        report.unsaturated = Some(UnsaturatedCheck {
            max_abs_state_on_support: max_abs_u_support,
            max_state_on_zero_set: if any_zero { max_u_zero } else { 0.0 },
        });
    }
    Ok(report)
}
