//! Runs every built-in problem and prints the first-order optimality
//! certificates at the computed potential: the sign of R_V(g)·R_V(f), the
//! stationarity balance on unclamped elements, multiplier/slack
//! complementarity, and the cost response to scaling the potential down.
//!
//! Usage: `cargo run --release --example optimality_report [n]`
//! (default n = 100).

use optpot::diagnostics::{check_monotone_at_optimum, necessary_conditions};
use optpot::io::occupied_area;
use optpot::optimize::{initial_potential, run, volume, InitKind};
use optpot::{build_structured_mesh, builtin_problem, OptimizerConfig, ProblemOverrides};

fn main() -> optpot::Result<()> {
    let n: usize = std::env::args()
        .nth(1)
        .map(|s| s.parse().expect("mesh size must be an integer"))
        .unwrap_or(100);

    let cases: [(&str, Option<f64>); 5] = [
        ("example1", None),
        ("example2", None),
        ("example2", Some(0.45)),
        ("example3", None),
        ("example4", None),
    ];

    for (name, m_override) in cases {
        let problem = builtin_problem(
            name,
            &ProblemOverrides {
                m: m_override,
                ..Default::default()
            },
        )?;
        let mesh = build_structured_mesh(n, n, problem.domain)?;
        let cfg = OptimizerConfig::default();
        let v0 = initial_potential(&problem, &mesh, InitKind::Uniform, cfg.seed)?;
        let t0 = std::time::Instant::now();
        let out = run(&problem, &mesh, &cfg, &v0)?;
        let secs = t0.elapsed().as_secs_f64();
        let report = necessary_conditions(&problem, &mesh, &out.potential, out.lambda, cfg.lumping)?;

        let last = out.history.last().unwrap();
        println!("== {name} (m = {}) — {} iters, {:?}, {secs:.1}s", problem.m, last.iter, out.status);
        println!("   cost {:+.6e}, volume {:.6}, occupied {:.6}, lambda {:.3e}", last.cost,
            volume(&mesh, &out.potential, &problem.psi)?,
            occupied_area(&mesh, &out.potential, problem.vmax),
            out.lambda);
        println!(
            "   lemma1_max {:+.3e} (scale {:.3e}, relative {:+.3e})",
            report.lemma1_max,
            report.lemma1_scale,
            report.lemma1_max / report.lemma1_scale
        );
        println!(
            "   stationarity: centroid {:.3e}, pairing {:.3e} (scale {:.3e}, interior elements {})",
            report.stationarity_residual_interior,
            report.stationarity_residual_pairing,
            report.stationarity_scale,
            report.interior_element_count
        );
        println!(
            "   sign violations: lower {:.3e}, upper {:.3e}; slack {:+.3e}",
            report.sign_violation_lower, report.sign_violation_upper, report.constraint_slack
        );
        if let Some(u) = &report.unsaturated {
            println!(
                "   unsaturated checks: max|u| on support {:.3e}, max u on zero set {:+.3e}",
                u.max_abs_state_on_support, u.max_state_on_zero_set
            );
        }
        let scales = [0.25, 0.5, 0.75];
        let costs = check_monotone_at_optimum(&problem, &mesh, &out.potential, &scales, cfg.lumping)?;
        for (s, c) in scales.iter().zip(&costs) {
            let ok = *c <= last.cost + 1e-6 * last.cost.abs();
            println!("   cost at {s}·V: {c:+.6e} ({})", if ok { "≤ optimum" } else { "ABOVE optimum" });
        }
    }
    Ok(())
}
