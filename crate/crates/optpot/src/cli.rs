//! Command-line driver.
//!
//! Subcommands: `run <config>`, `check-gradient <config>`,
//! `diagnose <config> <potential>`, `mesh-info <config>`. Exit codes:
//! 0 success, 1 validation/usage error, 2 numerical failure. Errors are
//! printed with a machine-readable `error[...]:` prefix.

use std::path::{Path, PathBuf};

use clap::{Arg, Command};
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

use crate::assemble::assemble_load;
use crate::config::{parse_config, RunConfig};
use crate::diagnostics::{fd_gradient, necessary_conditions};
use crate::error::{Error, Result};
use crate::field::{PotentialField, ScalarField};
use crate::io::{
    occupied_area, read_potential_raw, read_vtk_potential, write_history_csv, write_potential_pgm,
    write_vtk, RunSummary,
};
use crate::mesh::{build_structured_mesh, Mesh};
use crate::optimize::{cost_gradient, initial_potential, volume, TerminationStatus};
use crate::schrodinger::{Workspace, STATE_SOLVE_TOL};

/// Gradient check failures above this relative error exit with code 2.
const GRADIENT_CHECK_TOL: f64 = 1e-6;

fn command() -> Command {
    let config_arg = Arg::new("config").required(true).value_name("CONFIG");
    Command::new("optpot")
        .about("Optimal Schrödinger potentials on rectangular domains")
        .subcommand_required(true)
        .arg_required_else_help(true)
        .subcommand(
            Command::new("run")
                .about("Run the full optimization and write outputs")
                .arg(config_arg.clone()),
        )
        .subcommand(
            Command::new("check-gradient")
                .about("Compare the adjoint gradient against central finite differences")
                .arg(config_arg.clone()),
        )
        .subcommand(
            Command::new("diagnose")
                .about("Evaluate the optimality report for a saved potential")
                .arg(config_arg.clone())
                .arg(
                    Arg::new("potential")
                        .required(true)
                        .value_name("POTENTIAL")
                        .help("Potential file: .vtk (cell data) or raw text floats"),
                ),
        )
        .subcommand(
            Command::new("mesh-info")
                .about("Print mesh counts and areas for a configuration")
                .arg(config_arg),
        )
}

/// Entry point; returns the process exit code.
pub fn main<I>(args: I) -> i32
where
    I: IntoIterator,
    I::Item: Into<std::ffi::OsString> + Clone,
{
    let matches = match command().try_get_matches_from(args) {
        Ok(m) => m,
        Err(e) => {
            // keep clap's rendered message but normalize the exit contract
            eprintln!("error[usage]: {e}");
            return 1;
        }
    };

    let outcome = match matches.subcommand() {
        Some(("run", sub)) => cmd_run(Path::new(
            sub.get_one::<String>("config").expect("required"),
        )),
        Some(("check-gradient", sub)) => cmd_check_gradient(Path::new(
            sub.get_one::<String>("config").expect("required"),
        )),
        Some(("diagnose", sub)) => cmd_diagnose(
            Path::new(sub.get_one::<String>("config").expect("required")),
            Path::new(sub.get_one::<String>("potential").expect("required")),
        ),
        Some(("mesh-info", sub)) => cmd_mesh_info(Path::new(
            sub.get_one::<String>("config").expect("required"),
        )),
        _ => unreachable!("subcommand required"),
    };

    match outcome {
        Ok(()) => 0,
        Err(e) if e.is_validation() => {
            eprintln!("error[validation]: {e}");
            1
        }
        Err(e) => {
            eprintln!("error[numerical]: {e}");
            2
        }
    }
}

fn load(cfg_path: &Path) -> Result<(RunConfig, crate::problems::ProblemSpec, Mesh)> {
    let cfg = parse_config(cfg_path)?;
    let problem = cfg.problem()?;
    let mesh = build_structured_mesh(cfg.nx, cfg.ny, problem.domain)?;
    Ok((cfg, problem, mesh))
}

fn cmd_run(cfg_path: &Path) -> Result<()> {
    let (cfg, problem, mesh) = load(cfg_path)?;
    if problem.constraint_vacuous() {
        eprintln!("warning: volume bound m = {} never binds on this domain", problem.m);
    }
    std::fs::create_dir_all(&cfg.output_dir)?;

    // Reproducibility record of every effective parameter, always written.
    std::fs::write(
        cfg.output_dir.join("run_metadata.ini"),
        cfg.effective_ini(&problem),
    )?;

    let v0 = initial_potential(&problem, &mesh, cfg.init, cfg.optimizer.seed)?;
    let out = crate::optimize::run(&problem, &mesh, &cfg.optimizer, &v0)?;

    let step = (out.history.len() / 10).max(1);
    for rec in out
        .history
        .iter()
        .enumerate()
        .filter(|(i, _)| i % step == 0 || *i + 1 == out.history.len())
        .map(|(_, r)| r)
    {
        println!(
            "iter {:4}  cost {:+.6e}  volume {:.6}  lambda {:.3e}  eta {:.3e}  |grad| {:.3e}",
            rec.iter, rec.cost, rec.volume, rec.lambda, rec.eta, rec.grad_norm
        );
    }

    let ws = Workspace::new(&mesh, cfg.optimizer.lumping);
    let b_f = assemble_load(&mesh, |x, y| problem.f.eval(x, y));
    let b_g = assemble_load(&mesh, |x, y| problem.g.eval(x, y));
    let u = ws.solve(&out.potential, &b_f, STATE_SOLVE_TOL)?;
    let neg_b_g: Vec<f64> = b_g.iter().map(|v| -v).collect();
    let p = ws.solve(&out.potential, &neg_b_g, STATE_SOLVE_TOL)?;

    let report = necessary_conditions(&problem, &mesh, &out.potential, out.lambda, cfg.optimizer.lumping)?;
    let summary = RunSummary {
        problem_name: cfg.problem_name.clone(),
        status: format!("{:?}", out.status),
        iterations: out.history.len() - 1,
        final_cost: out.history.last().map(|r| r.cost).unwrap_or(0.0),
        constraint_volume: volume(&mesh, &out.potential, &problem.psi)?,
        occupied_area: occupied_area(&mesh, &out.potential, problem.vmax),
        volume_bound: problem.m,
        lambda: out.lambda,
        report: Some(report),
    };
    print!("{}", summary.to_text());
    if out.status == TerminationStatus::MaxIters {
        eprintln!("warning: iteration cap reached before convergence");
    }

    if cfg.write_csv {
        write_history_csv(&out.history, &cfg.output_dir.join("history.csv"))?;
    }
    if cfg.write_vtk {
        write_vtk(&mesh, &u, &p, &out.potential, &cfg.output_dir.join("fields.vtk"))?;
    }
    if cfg.write_pgm {
        write_potential_pgm(
            &mesh,
            &out.potential,
            problem.vmax,
            &cfg.output_dir.join("potential.pgm"),
        )?;
    }
    if cfg.write_report {
        summary.write(&cfg.output_dir.join("report.txt"))?;
    }
    Ok(())
}

fn cmd_check_gradient(cfg_path: &Path) -> Result<()> {
    let (cfg, problem, mesh) = load(cfg_path)?;
    let lumping = cfg.optimizer.lumping;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.optimizer.seed);

    // Random potential strictly inside the box so central differences
    // never clamp.
    let hi = problem.vmax.min(100.0);
    let v = PotentialField::new(
        &mesh,
        (0..mesh.num_triangles())
            .map(|_| rng.gen_range(0.05 * hi..0.6 * hi))
            .collect(),
    )?;
    let h = (0.01 * hi).min(1e-2 * problem.vmax);

    let ws = Workspace::new(&mesh, lumping);
    let b_f = assemble_load(&mesh, |x, y| problem.f.eval(x, y));
    let b_g = assemble_load(&mesh, |x, y| problem.g.eval(x, y));
    let u = ws.solve(&v, &b_f, STATE_SOLVE_TOL)?;
    let neg_b_g: Vec<f64> = b_g.iter().map(|x| -x).collect();
    let p = ws.solve(&v, &neg_b_g, STATE_SOLVE_TOL)?;
    let grad = cost_gradient(&mesh, &u, &p, lumping)?;

    // 20 random elements, skipping near-zero gradients where a relative
    // error is meaningless.
    let gmax = grad.max_abs();
    if gmax == 0.0 {
        return Err(Error::invalid("gradient is identically zero for this problem".to_string()));
    }
    let mut elements = Vec::new();
    let mut guard = 0;
    while elements.len() < 20 && guard < 100_000 {
        guard += 1;
        let t = rng.gen_range(0..mesh.num_triangles());
        if grad.values[t].abs() >= 1e-2 * gmax && !elements.contains(&t) {
            elements.push(t);
        }
    }
    if elements.len() < 20 {
        return Err(Error::invalid(
            "could not find 20 elements with non-negligible gradient".to_string(),
        ));
    }

    let fd = fd_gradient(&problem, &mesh, &v, &elements, h, lumping)?;
    let mut max_rel = 0.0f64;
    for (k, &t) in elements.iter().enumerate() {
        let rel = (fd[k] - grad.values[t]).abs() / grad.values[t].abs();
        max_rel = max_rel.max(rel);
    }
    println!("checked {} elements (fd step {h}; near-zero gradients skipped)", elements.len());
    println!("max_relative_error: {max_rel:e}");
    if max_rel > GRADIENT_CHECK_TOL {
        return Err(Error::CheckFailed(format!(
            "gradient mismatch: max relative error {max_rel:e} exceeds {GRADIENT_CHECK_TOL:e}"
        )));
    }
    println!("gradient check passed (tolerance {GRADIENT_CHECK_TOL:e})");
    Ok(())
}

fn cmd_diagnose(cfg_path: &Path, potential_path: &Path) -> Result<()> {
    let (cfg, problem, mesh) = load(cfg_path)?;
    let values = if potential_path.extension().and_then(|e| e.to_str()) == Some("vtk") {
        read_vtk_potential(potential_path, mesh.num_triangles())?
    } else {
        read_potential_raw(potential_path, mesh.num_triangles())?
    };
    let v = PotentialField::new(&mesh, values)?;
    v.check_box(problem.vmax)?;

    // A saved potential carries no multiplier. With slack the conditions
    // require λ = 0; otherwise fit λ by least squares over the unclamped
    // elements, where stationarity demands density = λ·(−Ψ′).
    let slack = problem.m - volume(&mesh, &v, &problem.psi)?;
    let (lambda, lambda_source) = if slack > cfg.optimizer.bisection_tol {
        (0.0, "zero-slack-rule")
    } else {
        let ws = Workspace::new(&mesh, cfg.optimizer.lumping);
        let b_f = assemble_load(&mesh, |x, y| problem.f.eval(x, y));
        let b_g = assemble_load(&mesh, |x, y| problem.g.eval(x, y));
        let u = ws.solve(&v, &b_f, STATE_SOLVE_TOL)?;
        let neg_b_g: Vec<f64> = b_g.iter().map(|x| -x).collect();
        let p = ws.solve(&v, &neg_b_g, STATE_SOLVE_TOL)?;
        let grad = cost_gradient(&mesh, &u, &p, cfg.optimizer.lumping)?;
        let mut num = 0.0;
        let mut den = 0.0;
        for t in 0..mesh.num_triangles() {
            let vt = v.values[t];
            if vt > 0.0 && vt < problem.vmax {
                let w = -problem.psi.prime(vt)?;
                num += (grad.values[t] / mesh.element_area[t]) * w;
                den += w * w;
            }
        }
        if den > 0.0 {
            ((num / den).max(0.0), "least-squares-fit")
        } else {
            (0.0, "no-interior-elements")
        }
    };

    let report = necessary_conditions(&problem, &mesh, &v, lambda, cfg.optimizer.lumping)?;
    println!("lambda_source: {lambda_source}");
    let summary = RunSummary {
        problem_name: cfg.problem_name.clone(),
        status: "diagnosed".to_string(),
        iterations: 0,
        final_cost: f64::NAN,
        constraint_volume: problem.m - report.constraint_slack,
        occupied_area: occupied_area(&mesh, &v, problem.vmax),
        volume_bound: problem.m,
        lambda,
        report: Some(report),
    };
    // the state at the saved potential, for the cost line
    let u = crate::schrodinger::solve_state(
        &mesh,
        &v,
        |x, y| problem.f.eval(x, y),
        cfg.optimizer.lumping,
    )?;
    let cost = crate::schrodinger::cost(&mesh, |x, y| problem.g.eval(x, y), &u)?;
    let mut summary = summary;
    summary.final_cost = cost;
    print!("{}", summary.to_text());
    Ok(())
}

fn cmd_mesh_info(cfg_path: &Path) -> Result<()> {
    let (cfg, problem, mesh) = load(cfg_path)?;
    let _ = cfg;
    println!("domain: ({}, {}) x ({}, {})", problem.domain.x0, problem.domain.x1, problem.domain.y0, problem.domain.y1);
    println!("cells: {} x {}", mesh.nx, mesh.ny);
    println!("nodes: {}", mesh.num_nodes());
    println!("triangles: {}", mesh.num_triangles());
    println!("boundary_nodes: {}", mesh.boundary.iter().filter(|&&b| b).count());
    println!("interior_nodes: {}", mesh.interior_nodes().len());
    println!("element_area: {}", mesh.element_area[0]);
    println!("total_area: {}", mesh.total_area());
    Ok(())
}

/// Helper kept for integration tests: writes `v` as raw text usable by
/// `diagnose`.
pub fn write_potential_raw(v: &PotentialField, path: &PathBuf) -> Result<()> {
    use std::fmt::Write as _;
    let mut out = String::new();
    for x in &v.values {
        let _ = writeln!(out, "{x}");
    }
    std::fs::write(path, out)?;
    Ok(())
}

/// Final scattered state as a field (exposed for examples).
pub fn solve_fields(
    problem: &crate::problems::ProblemSpec,
    mesh: &Mesh,
    v: &PotentialField,
    lumping: crate::assemble::MassLumping,
) -> Result<(ScalarField, ScalarField)> {
    let ws = Workspace::new(mesh, lumping);
    let b_f = assemble_load(mesh, |x, y| problem.f.eval(x, y));
    let b_g = assemble_load(mesh, |x, y| problem.g.eval(x, y));
    let u = ws.solve(v, &b_f, STATE_SOLVE_TOL)?;
    let neg_b_g: Vec<f64> = b_g.iter().map(|x| -x).collect();
    let p = ws.solve(v, &neg_b_g, STATE_SOLVE_TOL)?;
    Ok((u, p))
}
