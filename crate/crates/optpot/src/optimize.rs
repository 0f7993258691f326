//! Projected adjoint-gradient descent for the potential.
//!
//! The discrete cost gradient comes from one state and one adjoint solve:
//! `dI/dV_T` is the pairing of u and p through the element mass derivative,
//! so it is the exact derivative of the discretized cost and closes
//! finite-difference checks to solver precision. The volume constraint
//! `∫ Ψ(V) dx ≤ m` is enforced at every trial step by picking the smallest
//! multiplier λ ≥ 0 whose penalized update is feasible (bracketing by
//! doubling, then bisection; the candidate volume is monotone in λ).
//! Steps are accepted under an Armijo sufficient-decrease rule that never
//! allows the cost history to increase.

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

use crate::assemble::{assemble_load, MassLumping};
use crate::error::{Error, Result};
use crate::field::{ElementField, PotentialField, ScalarField};
use crate::mesh::Mesh;
use crate::problems::ProblemSpec;
use crate::schrodinger::{Workspace, STATE_SOLVE_TOL};
use crate::psi::PsiFamily;

/// Knobs of the descent loop.
#[derive(Debug, Clone)]
pub struct OptimizerConfig {
    /// Hard cap on outer iterations.
    pub max_iters: usize,
    /// Relative cost-decrease threshold; ten consecutive iterations below it
    /// terminate the run as converged.
    pub cost_tolerance: f64,
    /// Armijo sufficient-decrease constant in (0, 1).
    pub armijo_c: f64,
    /// Initial trial step. `None` auto-scales once, at the first iteration,
    /// to `vmax / max_T |G_T|/|T|` so the steepest element can traverse the
    /// whole box in one trial.
    pub eta0: Option<f64>,
    /// Backtracking factor in (0, 1).
    pub eta_shrink: f64,
    /// Absolute tolerance on the volume mismatch |∫Ψ(V) − m| when the
    /// multiplier is active.
    pub bisection_tol: f64,
    /// Potential mass treatment; lumping preserves the discrete maximum
    /// principle and is the default.
    pub lumping: MassLumping,
    /// Seed for randomized initialization.
    pub seed: u64,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        OptimizerConfig {
            max_iters: 500,
            cost_tolerance: 1e-9,
            armijo_c: 1e-4,
            eta0: None,
            eta_shrink: 0.5,
            bisection_tol: 1e-6,
            lumping: MassLumping::Lumped,
            seed: 0,
        }
    }
}

impl OptimizerConfig {
    pub fn validate(&self) -> Result<()> {
        if self.max_iters == 0 {
            return Err(Error::invalid("max_iters must be at least 1".to_string()));
        }
        if !(self.cost_tolerance > 0.0) {
            return Err(Error::invalid(format!(
                "cost_tolerance must be positive, got {}",
                self.cost_tolerance
            )));
        }
        if !(self.armijo_c > 0.0 && self.armijo_c < 1.0) {
            return Err(Error::invalid(format!(
                "armijo_c must lie in (0, 1), got {}",
                self.armijo_c
            )));
        }
        if !(self.eta_shrink > 0.0 && self.eta_shrink < 1.0) {
            return Err(Error::invalid(format!(
                "eta_shrink must lie in (0, 1), got {}",
                self.eta_shrink
            )));
        }
        if let Some(eta0) = self.eta0 {
            if !(eta0 > 0.0) {
                return Err(Error::invalid(format!("eta0 must be positive, got {eta0}")));
            }
        }
        if !(self.bisection_tol > 0.0) {
            return Err(Error::invalid(format!(
                "bisection_tol must be positive, got {}",
                self.bisection_tol
            )));
        }
        Ok(())
    }
}

/// One row of the optimization history. `lambda` and `eta` are the
/// multiplier and accepted step that produced this iterate (zero for the
/// initial one); `grad_norm` is the discrete L² norm of the gradient
/// density at the iterate.
#[derive(Debug, Clone, PartialEq)]
pub struct IterationRecord {
    pub iter: usize,
    pub cost: f64,
    pub volume: f64,
    pub lambda: f64,
    pub eta: f64,
    pub grad_norm: f64,
}

/// Why the descent loop stopped.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TerminationStatus {
    /// Relative cost decrease stayed below `cost_tolerance` for ten
    /// consecutive iterations.
    Converged,
    /// The gradient vanished or no backtracking step could decrease the
    /// cost; the last iterate is returned unchanged.
    Stalled,
    /// The iteration cap was reached.
    MaxIters,
}

/// Result of [`run`].
#[derive(Debug, Clone)]
pub struct RunOutput {
    pub potential: PotentialField,
    pub history: Vec<IterationRecord>,
    pub status: TerminationStatus,
    /// Multiplier of the last accepted step (zero when the constraint
    /// never bound).
    pub lambda: f64,
}

/// How the starting potential is built.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InitKind {
    /// Uniform value Ψ⁻¹(m/|D|), which saturates the constraint exactly.
    Uniform,
    /// Seeded elementwise-uniform draw from [0, vmax]; projected onto the
    /// feasible set by the first multiplier step when needed.
    Random,
}

/// Exact per-element gradient of the discrete cost with respect to `V_T`.
///
/// The element value is the quadrature of u·p induced by the chosen mass
/// variant (vertex rule when lumped, edge-midpoint rule when consistent),
/// which is precisely `p·(∂A/∂V_T)·u`; the descent direction is `−G`.
pub fn cost_gradient(
    mesh: &Mesh,
    u: &ScalarField,
    p: &ScalarField,
    lumping: MassLumping,
) -> Result<ElementField> {
    if u.len() != mesh.num_nodes() || p.len() != mesh.num_nodes() {
        return Err(Error::invalid(format!(
            "state/adjoint sizes {}/{} do not match {} nodes",
            u.len(),
            p.len(),
            mesh.num_nodes()
        )));
    }
    let mut values = Vec::with_capacity(mesh.num_triangles());
    for t in 0..mesh.num_triangles() {
        let [a, b, c] = mesh.triangles[t];
        let area = mesh.element_area[t];
        let g = match lumping {
            MassLumping::Lumped => {
                (u.values[a] * p.values[a]
                    + u.values[b] * p.values[b]
                    + u.values[c] * p.values[c])
                    * area
                    / 3.0
            }
            MassLumping::Consistent => {
                let su = u.values[a] + u.values[b] + u.values[c];
                let sp = p.values[a] + p.values[b] + p.values[c];
                let spu = u.values[a] * p.values[a]
                    + u.values[b] * p.values[b]
                    + u.values[c] * p.values[c];
                (su * sp + spu) * area / 12.0
            }
        };
        values.push(g);
    }
    Ok(ElementField { values })
}

/// Constraint value ∫ Ψ(V) dx = Σ_T Ψ(V_T)·|T| (exact for P0 potentials).
pub fn volume(mesh: &Mesh, v: &PotentialField, psi: &PsiFamily) -> Result<f64> {
    if v.len() != mesh.num_triangles() {
        return Err(Error::invalid(format!(
            "potential has {} values for {} triangles",
            v.len(),
            mesh.num_triangles()
        )));
    }
    let mut total = 0.0;
    for (t, &vt) in v.values.iter().enumerate() {
        total += psi.eval(vt)? * mesh.element_area[t];
    }
    Ok(total)
}

/// Per-element derivative of the constraint value: Ψ′(V_T)·|T| ≤ 0.
pub fn volume_gradient(mesh: &Mesh, v: &PotentialField, psi: &PsiFamily) -> Result<ElementField> {
    if v.len() != mesh.num_triangles() {
        return Err(Error::invalid(format!(
            "potential has {} values for {} triangles",
            v.len(),
            mesh.num_triangles()
        )));
    }
    let mut values = Vec::with_capacity(v.len());
    for (t, &vt) in v.values.iter().enumerate() {
        values.push(psi.prime(vt)? * mesh.element_area[t]);
    }
    Ok(ElementField { values })
}

/// Gradient step with the volume constraint enforced by a multiplier.
///
/// The candidate for a given λ is
/// `V(λ)_T = clamp(V_T − η·(G_T/|T| − λ·(−Ψ′(V_T))), 0, vmax)`,
/// the per-unit-volume gradient of the penalized functional. Returns λ = 0
/// when `V(0)` is already feasible; otherwise the candidate volume is
/// non-increasing in λ (raising λ raises the potential pointwise), so the
/// smallest feasible λ is found by doubling then bisection.
pub fn update_with_multiplier(
    mesh: &Mesh,
    v: &PotentialField,
    grad: &ElementField,
    eta: f64,
    psi: &PsiFamily,
    m: f64,
    vmax: f64,
    bisection_tol: f64,
) -> Result<(PotentialField, f64)> {
    if !(eta > 0.0) {
        return Err(Error::invalid(format!("step must be positive, got {eta}")));
    }
    if v.len() != mesh.num_triangles() || grad.len() != mesh.num_triangles() {
        return Err(Error::invalid(
            "potential/gradient size does not match the mesh".to_string(),
        ));
    }

    let n = v.len();
    let mut base = Vec::with_capacity(n);
    let mut ascent = Vec::with_capacity(n);
    for t in 0..n {
        base.push(v.values[t] - eta * grad.values[t] / mesh.element_area[t]);
        // −Ψ′ ≥ 0: the direction along which λ raises the potential.
        ascent.push(-psi.prime(v.values[t])?);
    }

    let candidate = |lambda: f64| -> PotentialField {
        let values = (0..n)
            .map(|t| (base[t] + eta * lambda * ascent[t]).clamp(0.0, vmax))
            .collect();
        PotentialField { values }
    };

    let v0 = candidate(0.0);
    let vol0 = volume(mesh, &v0, psi)?;
    if vol0 <= m {
        return Ok((v0, 0.0));
    }

    // Bracket: double λ until the candidate is feasible.
    let mut hi = 1.0f64;
    let mut vol_hi = volume(mesh, &candidate(hi), psi)?;
    let mut doublings = 0;
    while vol_hi > m {
        doublings += 1;
        if doublings > 60 {
            return Err(Error::MultiplierFailure {
                mismatch: vol_hi - m,
                bound: m,
            });
        }
        hi *= 2.0;
        vol_hi = volume(mesh, &candidate(hi), psi)?;
    }
    if (vol_hi - m).abs() <= bisection_tol {
        return Ok((candidate(hi), hi));
    }

    let mut lo = 0.0f64;
    let mut best = (hi, (vol_hi - m).abs());
    for _ in 0..256 {
        let mid = 0.5 * (lo + hi);
        let vol_mid = volume(mesh, &candidate(mid), psi)?;
        let mismatch = (vol_mid - m).abs();
        if mismatch <= bisection_tol {
            return Ok((candidate(mid), mid));
        }
        if mismatch < best.1 {
            best = (mid, mismatch);
        }
        if vol_mid > m {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Err(Error::MultiplierFailure {
        mismatch: best.1,
        bound: m,
    })
}

/// Result of one backtracking search.
#[derive(Debug, Clone)]
pub struct LineSearchOutcome {
    pub potential: PotentialField,
    pub eta: f64,
    pub lambda: f64,
    pub cost: f64,
    /// Set when no trial step achieved a decrease; the potential is then
    /// the unchanged input.
    pub stalled: bool,
}

/// Backtracking over a caller-supplied cost evaluation. `S` is whatever the
/// evaluator wants to hand back for the accepted iterate (e.g. the state).
fn backtrack<S>(
    mesh: &Mesh,
    v: &PotentialField,
    grad: &ElementField,
    psi: &PsiFamily,
    m: f64,
    vmax: f64,
    cfg: &OptimizerConfig,
    current_cost: f64,
    eta0: f64,
    mut eval: impl FnMut(&PotentialField) -> Result<(f64, S)>,
) -> Result<(LineSearchOutcome, Option<S>)> {
    if grad.max_abs() == 0.0 {
        return Ok((
            LineSearchOutcome {
                potential: v.clone(),
                eta: 0.0,
                lambda: 0.0,
                cost: current_cost,
                stalled: true,
            },
            None,
        ));
    }

    let mut eta = eta0;
    for _ in 0..=40 {
        let (trial, lambda) =
            update_with_multiplier(mesh, v, grad, eta, psi, m, vmax, cfg.bisection_tol)?;
        let predicted: f64 = grad
            .values
            .iter()
            .zip(&v.values)
            .zip(&trial.values)
            .map(|((g, old), new)| g * (old - new))
            .sum();
        let (trial_cost, payload) = eval(&trial)?;
        // Sufficient decrease; a negative model decrease is floored at zero
        // so the accepted history can never increase.
        if trial_cost <= current_cost - cfg.armijo_c * predicted.max(0.0) {
            return Ok((
                LineSearchOutcome {
                    potential: trial,
                    eta,
                    lambda,
                    cost: trial_cost,
                    stalled: false,
                },
                Some(payload),
            ));
        }
        eta *= cfg.eta_shrink;
    }

    Ok((
        LineSearchOutcome {
            potential: v.clone(),
            eta: 0.0,
            lambda: 0.0,
            cost: current_cost,
            stalled: true,
        },
        None,
    ))
}

/// Backtracking line search driven by fresh state solves; every trial step
/// runs through [`update_with_multiplier`], so each trial is feasible.
pub fn line_search(
    problem: &ProblemSpec,
    mesh: &Mesh,
    v: &PotentialField,
    grad: &ElementField,
    cfg: &OptimizerConfig,
) -> Result<LineSearchOutcome> {
    let ws = Workspace::new(mesh, cfg.lumping);
    let b_f = ws.restrict(&assemble_load(mesh, |x, y| problem.f.eval(x, y)));
    let b_g = ws.restrict(&assemble_load(mesh, |x, y| problem.g.eval(x, y)));
    let current = {
        let u = ws.solve_interior(v, &b_f, None, STATE_SOLVE_TOL)?;
        dot(&b_g, &u)
    };
    let eta0 = match cfg.eta0 {
        Some(e) => e,
        None => auto_step(mesh, grad, problem.vmax),
    };
    let (outcome, _) = backtrack(
        mesh,
        v,
        grad,
        &problem.psi,
        problem.m,
        problem.vmax,
        cfg,
        current,
        eta0,
        |trial| {
            let u = ws.solve_interior(trial, &b_f, None, STATE_SOLVE_TOL)?;
            let c = dot(&b_g, &u);
            Ok((c, ()))
        },
    )?;
    Ok(outcome)
}

/// Starting potential for [`run`].
pub fn initial_potential(
    problem: &ProblemSpec,
    mesh: &Mesh,
    kind: InitKind,
    seed: u64,
) -> Result<PotentialField> {
    match kind {
        InitKind::Uniform => {
            let target = problem.m / problem.domain.area();
            let level = if target >= problem.psi.eval(0.0)? {
                0.0
            } else {
                problem.psi.inverse(target)?.clamp(0.0, problem.vmax)
            };
            Ok(PotentialField::uniform(mesh, level))
        }
        InitKind::Random => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            Ok(PotentialField {
                values: (0..mesh.num_triangles())
                    .map(|_| rng.gen_range(0.0..=problem.vmax))
                    .collect(),
            })
        }
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn auto_step(mesh: &Mesh, grad: &ElementField, vmax: f64) -> f64 {
    let gd_max = grad
        .values
        .iter()
        .zip(&mesh.element_area)
        .fold(0.0f64, |m, (g, &a)| m.max((g / a).abs()));
    if gd_max > 0.0 {
        vmax / gd_max
    } else {
        1.0
    }
}

fn at_iteration(iter: usize) -> impl Fn(Error) -> Error {
    move |e| Error::AtIteration {
        iteration: iter,
        source: Box::new(e),
    }
}

/// Full descent loop.
///
/// Starts from `v0` (projected onto the feasible set if needed), records
/// one [`IterationRecord`] per iterate, and stops once the relative cost
/// decrease stays below `cost_tolerance` for ten consecutive iterations,
/// on a stalled line search, or at `max_iters`.
pub fn run(
    problem: &ProblemSpec,
    mesh: &Mesh,
    cfg: &OptimizerConfig,
    v0: &PotentialField,
) -> Result<RunOutput> {
    cfg.validate()?;
    problem.validate()?;
    if v0.len() != mesh.num_triangles() {
        return Err(Error::invalid(format!(
            "initial potential has {} values for {} triangles",
            v0.len(),
            mesh.num_triangles()
        )));
    }
    v0.check_box(problem.vmax)?;

    let psi = &problem.psi;
    let ws = Workspace::new(mesh, cfg.lumping);
    let b_f = ws.restrict(&assemble_load(mesh, |x, y| problem.f.eval(x, y)));
    let b_g = ws.restrict(&assemble_load(mesh, |x, y| problem.g.eval(x, y)));
    let neg_b_g: Vec<f64> = b_g.iter().map(|v| -v).collect();

    let mut v = v0.clone();
    let mut lambda_last = 0.0;
    let mut eta_last = 0.0;

    // Project an infeasible start onto the constraint with a pure
    // multiplier step (zero gradient).
    if volume(mesh, &v, psi)? > problem.m + cfg.bisection_tol {
        let zero = ElementField::zeros(mesh);
        let (projected, lambda) = update_with_multiplier(
            mesh,
            &v,
            &zero,
            1.0,
            psi,
            problem.m,
            problem.vmax,
            cfg.bisection_tol,
        )?;
        v = projected;
        lambda_last = lambda;
    }

    let mut history: Vec<IterationRecord> = Vec::new();
    let mut plateau = 0usize;
    let mut state_guess: Option<Vec<f64>> = None;
    let mut adjoint_guess: Option<Vec<f64>> = None;
    let mut eta_start = cfg.eta0;
    let mut k = 0usize;

    let status = loop {
        let u_int = ws
            .solve_interior(&v, &b_f, state_guess.as_deref(), STATE_SOLVE_TOL)
            .map_err(at_iteration(k))?;
        let p_int = ws
            .solve_interior(&v, &neg_b_g, adjoint_guess.as_deref(), STATE_SOLVE_TOL)
            .map_err(at_iteration(k))?;
        let cost_k = dot(&b_g, &u_int);
        let vol_k = volume(mesh, &v, psi)?;
        let u = ScalarField {
            values: ws.scatter(&u_int),
        };
        let p = ScalarField {
            values: ws.scatter(&p_int),
        };
        let grad = cost_gradient(mesh, &u, &p, cfg.lumping)?;
        if !grad.all_finite() {
            return Err(at_iteration(k)(Error::invalid(
                "gradient contains non-finite entries".to_string(),
            )));
        }
        history.push(IterationRecord {
            iter: k,
            cost: cost_k,
            volume: vol_k,
            lambda: lambda_last,
            eta: eta_last,
            grad_norm: grad.density_l2_norm(mesh),
        });
        state_guess = Some(u_int);
        adjoint_guess = Some(p_int);

        if plateau >= 10 {
            break TerminationStatus::Converged;
        }
        if k >= cfg.max_iters {
            break TerminationStatus::MaxIters;
        }
        if grad.max_abs() == 0.0 {
            break TerminationStatus::Stalled;
        }

        let eta0 = *eta_start.get_or_insert_with(|| auto_step(mesh, &grad, problem.vmax));
        let guess = state_guess.clone();
        let (outcome, payload) = backtrack(
            mesh,
            &v,
            &grad,
            psi,
            problem.m,
            problem.vmax,
            cfg,
            cost_k,
            eta0,
            |trial| {
                let u_trial =
                    ws.solve_interior(trial, &b_f, guess.as_deref(), STATE_SOLVE_TOL)?;
                let c = dot(&b_g, &u_trial);
                Ok((c, u_trial))
            },
        )
        .map_err(at_iteration(k))?;

        if outcome.stalled {
            break TerminationStatus::Stalled;
        }
        let rel = (cost_k - outcome.cost) / cost_k.abs().max(f64::MIN_POSITIVE);
        if rel < cfg.cost_tolerance {
            plateau += 1;
        } else {
            plateau = 0;
        }
        v = outcome.potential;
        lambda_last = outcome.lambda;
        eta_last = outcome.eta;
        state_guess = payload;
        k += 1;
    };

    Ok(RunOutput {
        potential: v,
        history,
        status,
        lambda: lambda_last,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{build_structured_mesh, Rectangle};
    use crate::problems::{builtin_problem, DataFunction, ProblemOverrides};
    use crate::schrodinger::{solve_adjoint, solve_state};

    fn unit_mesh(n: usize) -> Mesh {
        build_structured_mesh(n, n, Rectangle::unit_square()).unwrap()
    }

    #[test]
    fn zero_state_zero_gradient() {
        let mesh = unit_mesh(4);
        let u = ScalarField::zeros(&mesh);
        let p = ScalarField::new(&mesh, vec![0.5; mesh.num_nodes()]).unwrap();
        let g = cost_gradient(&mesh, &u, &p, MassLumping::Lumped).unwrap();
        assert!(g.max_abs() == 0.0);
    }

    #[test]
    fn sign_definite_data_gives_nonpositive_gradient() {
        let mesh = unit_mesh(12);
        let v = PotentialField::uniform(&mesh, 5.0);
        let f = |x: f64, y: f64| 1.0 + x + y;
        let u = solve_state(&mesh, &v, f, MassLumping::Lumped).unwrap();
        let p = solve_adjoint(&mesh, &v, |_, _| 1.0, MassLumping::Lumped).unwrap();
        let g = cost_gradient(&mesh, &u, &p, MassLumping::Lumped).unwrap();
        for (t, &gt) in g.values.iter().enumerate() {
            assert!(gt <= 1e-12, "element {t}: u ≥ 0, p ≤ 0 must give G ≤ 0, got {gt}");
        }
    }

    #[test]
    fn volume_point_values() {
        let mesh = unit_mesh(6);
        let psi = PsiFamily::exponential(3e-4).unwrap();
        let v0 = PotentialField::uniform(&mesh, 0.0);
        assert!((volume(&mesh, &v0, &psi).unwrap() - 1.0).abs() < 1e-12);

        let v_hi = PotentialField::uniform(&mesh, 1e4);
        let vol = volume(&mesh, &v_hi, &psi).unwrap();
        assert!((vol - (-3.0f64).exp()).abs() < 1e-12);

        let tight = PsiFamily::exponential(0.09).unwrap();
        let vol = volume(&mesh, &v_hi, &tight).unwrap();
        assert!(vol.abs() < 1e-300, "e^{{-900}}·|D| underflows to zero, got {vol}");
    }

    #[test]
    fn volume_gradient_matches_finite_differences() {
        let mesh = unit_mesh(5);
        let psi = PsiFamily::exponential(0.02).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(1);
        let v = PotentialField::new(
            &mesh,
            (0..mesh.num_triangles()).map(|_| rng.gen_range(1.0..80.0)).collect(),
        )
        .unwrap();
        let grad = volume_gradient(&mesh, &v, &psi).unwrap();
        // h balances truncation against cancellation in the volume sum
        let h = 1e-3;
        for t in (0..mesh.num_triangles()).step_by(7) {
            let mut plus = v.clone();
            plus.values[t] += h;
            let mut minus = v.clone();
            minus.values[t] -= h;
            let fd = (volume(&mesh, &plus, &psi).unwrap()
                - volume(&mesh, &minus, &psi).unwrap())
                / (2.0 * h);
            let rel = (fd - grad.values[t]).abs() / grad.values[t].abs();
            assert!(rel <= 1e-8, "element {t}: fd {fd} vs {}", grad.values[t]);
            assert!(grad.values[t] <= 0.0);
        }
    }

    #[test]
    fn volume_gradient_magnitude_decreasing_in_v() {
        let mesh = unit_mesh(2);
        let psi = PsiFamily::exponential(0.5).unwrap();
        let lo = PotentialField::uniform(&mesh, 1.0);
        let hi = PotentialField::uniform(&mesh, 4.0);
        let g_lo = volume_gradient(&mesh, &lo, &psi).unwrap();
        let g_hi = volume_gradient(&mesh, &hi, &psi).unwrap();
        assert!(g_lo.values[0].abs() > g_hi.values[0].abs());
    }

    #[test]
    fn multiplier_keeps_feasible_candidate_unchanged() {
        let mesh = unit_mesh(4);
        let psi = PsiFamily::exponential(0.1).unwrap();
        let v = PotentialField::uniform(&mesh, 30.0); // volume ≈ e^{-3}
        let zero = ElementField::zeros(&mesh);
        let (next, lambda) =
            update_with_multiplier(&mesh, &v, &zero, 1.0, &psi, 0.5, 100.0, 1e-8).unwrap();
        assert_eq!(lambda, 0.0);
        assert_eq!(next.values, v.values);
    }

    #[test]
    fn multiplier_enforces_bound_when_violated() {
        let mesh = unit_mesh(8);
        let psi = PsiFamily::exponential(0.1).unwrap();
        let v = PotentialField::uniform(&mesh, 10.0);
        // strong pull toward zero potential => infeasible candidate at λ = 0
        let grad = ElementField {
            values: mesh.element_area.iter().map(|a| 50.0 * a).collect(),
        };
        let m = 0.4;
        let (next, lambda) =
            update_with_multiplier(&mesh, &v, &grad, 1.0, &psi, m, 100.0, 1e-8).unwrap();
        assert!(lambda > 0.0);
        let vol = volume(&mesh, &next, &psi).unwrap();
        assert!((vol - m).abs() <= 1e-8, "projected volume {vol}");
        next.check_box(100.0).unwrap();
    }

    #[test]
    fn candidate_volume_monotone_in_lambda() {
        let mesh = unit_mesh(6);
        let psi = PsiFamily::exponential(0.05).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(4);
        let v = PotentialField::new(
            &mesh,
            (0..mesh.num_triangles()).map(|_| rng.gen_range(0.0..40.0)).collect(),
        )
        .unwrap();
        let grad = ElementField {
            values: (0..mesh.num_triangles())
                .map(|t| rng.gen_range(-1.0..1.0) * mesh.element_area[t])
                .collect(),
        };
        let eta = 2.0;
        let vmax = 60.0;
        let candidate = |lambda: f64| -> PotentialField {
            PotentialField {
                values: (0..mesh.num_triangles())
                    .map(|t| {
                        let negpsi = -psi.prime(v.values[t]).unwrap();
                        (v.values[t] - eta * (grad.values[t] / mesh.element_area[t] - lambda * negpsi))
                            .clamp(0.0, vmax)
                    })
                    .collect(),
            }
        };
        let mut prev = volume(&mesh, &candidate(0.0), &psi).unwrap();
        for k in 1..20 {
            let vol = volume(&mesh, &candidate(k as f64 * 0.7), &psi).unwrap();
            assert!(vol <= prev + 1e-12, "volume must not increase in λ");
            prev = vol;
        }
    }

    #[test]
    fn line_search_stalls_on_zero_gradient() {
        let problem = builtin_problem("example1", &ProblemOverrides::default()).unwrap();
        let mesh = unit_mesh(6);
        let cfg = OptimizerConfig::default();
        let v = initial_potential(&problem, &mesh, InitKind::Uniform, 0).unwrap();
        let zero = ElementField::zeros(&mesh);
        let out = line_search(&problem, &mesh, &v, &zero, &cfg).unwrap();
        assert!(out.stalled);
        assert_eq!(out.potential.values, v.values);
    }

    #[test]
    fn line_search_satisfies_sufficient_decrease() {
        let problem = builtin_problem("example1", &ProblemOverrides::default()).unwrap();
        let mesh = unit_mesh(10);
        let cfg = OptimizerConfig::default();
        let v = initial_potential(&problem, &mesh, InitKind::Uniform, 0).unwrap();
        let u = solve_state(&mesh, &v, |x, y| problem.f.eval(x, y), cfg.lumping).unwrap();
        let p = solve_adjoint(&mesh, &v, |x, y| problem.g.eval(x, y), cfg.lumping).unwrap();
        let grad = cost_gradient(&mesh, &u, &p, cfg.lumping).unwrap();
        let i0 = crate::schrodinger::cost(&mesh, |x, y| problem.g.eval(x, y), &u).unwrap();
        let out = line_search(&problem, &mesh, &v, &grad, &cfg).unwrap();
        assert!(!out.stalled);
        let predicted: f64 = grad
            .values
            .iter()
            .zip(&v.values)
            .zip(&out.potential.values)
            .map(|((g, old), new)| g * (old - new))
            .sum();
        assert!(
            out.cost <= i0 - cfg.armijo_c * predicted.max(0.0) + 1e-15,
            "accepted step violates sufficient decrease"
        );
        assert!(out.eta > 0.0);
    }

    #[test]
    fn degenerate_data_stalls_immediately() {
        let mut problem = builtin_problem("example1", &ProblemOverrides::default()).unwrap();
        problem.f = DataFunction::Constant(0.0);
        let mesh = unit_mesh(6);
        let cfg = OptimizerConfig::default();
        let v0 = initial_potential(&problem, &mesh, InitKind::Uniform, 0).unwrap();
        let out = run(&problem, &mesh, &cfg, &v0).unwrap();
        assert_eq!(out.status, TerminationStatus::Stalled);
        assert_eq!(out.history.len(), 1);
        assert_eq!(out.potential.values, v0.values);
    }

    #[test]
    fn uniform_init_saturates_constraint() {
        let problem = builtin_problem("example2", &ProblemOverrides::default()).unwrap();
        let mesh = unit_mesh(9);
        let v0 = initial_potential(&problem, &mesh, InitKind::Uniform, 0).unwrap();
        let vol = volume(&mesh, &v0, &problem.psi).unwrap();
        assert!((vol - problem.m).abs() <= 1e-12, "initial volume {vol}");
    }

    #[test]
    fn random_init_projected_feasible_by_run() {
        let problem = builtin_problem(
            "example1",
            &ProblemOverrides {
                m: Some(0.3),
                ..Default::default()
            },
        )
        .unwrap();
        let mesh = unit_mesh(8);
        let cfg = OptimizerConfig {
            max_iters: 3,
            ..Default::default()
        };
        let v0 = initial_potential(&problem, &mesh, InitKind::Random, 123).unwrap();
        let out = run(&problem, &mesh, &cfg, &v0).unwrap();
        for rec in &out.history {
            assert!(
                rec.volume <= problem.m + cfg.bisection_tol,
                "iterate {} infeasible: {}",
                rec.iter,
                rec.volume
            );
        }
    }

    #[test]
    fn small_run_descends_and_stays_feasible() {
        let problem = builtin_problem("example1", &ProblemOverrides::default()).unwrap();
        let mesh = unit_mesh(16);
        let cfg = OptimizerConfig {
            max_iters: 40,
            ..Default::default()
        };
        let v0 = initial_potential(&problem, &mesh, InitKind::Uniform, 0).unwrap();
        let out = run(&problem, &mesh, &cfg, &v0).unwrap();
        assert!(out.history.len() >= 2);
        for pair in out.history.windows(2) {
            assert!(
                pair[1].cost <= pair[0].cost,
                "cost increased: {} -> {}",
                pair[0].cost,
                pair[1].cost
            );
        }
        for rec in &out.history {
            assert!(rec.volume <= problem.m + cfg.bisection_tol);
            assert!(rec.lambda >= 0.0);
        }
        out.potential.check_box(problem.vmax).unwrap();
        let final_cost = out.history.last().unwrap().cost;
        assert!(final_cost < out.history[0].cost, "no progress made");
    }
}
