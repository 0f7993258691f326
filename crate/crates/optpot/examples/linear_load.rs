//! Optimal potential for the tilted load f(x, y) = −(1 + 10x) with volume
//! bound m = 0.2: the free region concentrates where the load is most
//! negative. Runs both constraint profiles from the write-up: a spread-out
//! potential at α = 0.09 and a nearly bang-bang shape at α = 3·10⁻⁴.
//!
//! Usage: `cargo run --release --example linear_load [n]` (default n = 100).

use optpot::io::{occupied_area, write_potential_pgm};
use optpot::optimize::{initial_potential, run, InitKind, volume};
use optpot::{build_structured_mesh, builtin_problem, OptimizerConfig, ProblemOverrides};

fn main() -> optpot::Result<()> {
    let n: usize = std::env::args()
        .nth(1)
        .map(|s| s.parse().expect("mesh size must be an integer"))
        .unwrap_or(100);

    for alpha in [0.09, 3e-4] {
        let problem = builtin_problem(
            "example1",
            &ProblemOverrides {
                alpha: Some(alpha),
                ..Default::default()
            },
        )?;
        let mesh = build_structured_mesh(n, n, problem.domain)?;
        let cfg = OptimizerConfig::default();
        let v0 = initial_potential(&problem, &mesh, InitKind::Uniform, cfg.seed)?;

        let t0 = std::time::Instant::now();
        let out = run(&problem, &mesh, &cfg, &v0)?;
        let secs = t0.elapsed().as_secs_f64();

        let first = &out.history[0];
        let last = out.history.last().unwrap();
        println!("alpha = {alpha}");
        println!("  iterations: {} ({:?}, {secs:.1}s)", last.iter, out.status);
        println!("  cost: {:+.6e} -> {:+.6e}", first.cost, last.cost);
        println!(
            "  constraint volume: {:.6} (bound {}), lambda = {:.3e}",
            volume(&mesh, &out.potential, &problem.psi)?,
            problem.m,
            out.lambda
        );
        println!(
            "  thresholded occupied area: {:.6}",
            occupied_area(&mesh, &out.potential, problem.vmax)
        );
        let name = format!("linear_load_alpha_{alpha}.pgm");
        write_potential_pgm(&mesh, &out.potential, problem.vmax, name.as_ref())?;
        println!("  wrote {name}");
    }
    Ok(())
}
