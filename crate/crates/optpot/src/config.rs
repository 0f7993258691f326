//! Run configuration: an INI-style file with `[problem]`, `[mesh]`,
//! `[optimizer]` and `[output]` sections.
//!
//! `key = value` lines, `#` comments; unknown keys are errors rather than
//! silently ignored typos. `effective_ini` re-serializes every effective
//! parameter (including defaults and the cross geometry) as a valid config,
//! which is what run metadata files contain.

use std::path::{Path, PathBuf};

use crate::assemble::MassLumping;
use crate::error::{Error, Result};
use crate::optimize::{InitKind, OptimizerConfig};
use crate::problems::{builtin_problem, CrossGeometry, ProblemOverrides, ProblemSpec};

/// Environment variable overriding the default output directory.
pub const OUTPUT_DIR_ENV: &str = "OPTPOT_OUTPUT_DIR";

/// Fully resolved run parameters.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub problem_name: String,
    pub overrides: ProblemOverrides,
    pub nx: usize,
    pub ny: usize,
    pub optimizer: OptimizerConfig,
    pub init: InitKind,
    pub output_dir: PathBuf,
    pub write_csv: bool,
    pub write_vtk: bool,
    pub write_pgm: bool,
    pub write_report: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        let dir = std::env::var_os(OUTPUT_DIR_ENV)
            .map(PathBuf::from)
            .unwrap_or_else(|| PathBuf::from("out"));
        RunConfig {
            problem_name: "example1".to_string(),
            overrides: ProblemOverrides::default(),
            nx: 100,
            ny: 100,
            optimizer: OptimizerConfig::default(),
            init: InitKind::Uniform,
            output_dir: dir,
            write_csv: true,
            write_vtk: true,
            write_pgm: true,
            write_report: true,
        }
    }
}

impl RunConfig {
    /// Instantiates the problem this configuration refers to.
    pub fn problem(&self) -> Result<ProblemSpec> {
        builtin_problem(&self.problem_name, &self.overrides)
    }

    pub fn validate(&self) -> Result<()> {
        if self.nx < 1 || self.ny < 1 {
            return Err(Error::invalid(format!(
                "mesh resolution must be at least 1x1, got {}x{}",
                self.nx, self.ny
            )));
        }
        self.optimizer.validate()?;
        self.problem()?;
        Ok(())
    }

    /// Serializes every effective parameter as a parseable config file.
    pub fn effective_ini(&self, problem: &ProblemSpec) -> String {
        let mut out = String::new();
        out.push_str("[problem]\n");
        out.push_str(&format!("name = {}\n", self.problem_name));
        out.push_str(&format!("m = {}\n", problem.m));
        if let crate::psi::PsiFamily::Exponential { alpha } = problem.psi {
            out.push_str(&format!("alpha = {alpha}\n"));
        }
        out.push_str(&format!("vmax = {}\n", problem.vmax));
        if let Some(cross) = &problem.cross {
            out.push_str(&format!("cross_h_x0 = {}\n", cross.h_x0));
            out.push_str(&format!("cross_h_x1 = {}\n", cross.h_x1));
            out.push_str(&format!("cross_h_y0 = {}\n", cross.h_y0));
            out.push_str(&format!("cross_h_y1 = {}\n", cross.h_y1));
            out.push_str(&format!("cross_v_x0 = {}\n", cross.v_x0));
            out.push_str(&format!("cross_v_x1 = {}\n", cross.v_x1));
            out.push_str(&format!("cross_v_y0 = {}\n", cross.v_y0));
            out.push_str(&format!("cross_v_y1 = {}\n", cross.v_y1));
        }
        out.push_str("\n[mesh]\n");
        out.push_str(&format!("nx = {}\nny = {}\n", self.nx, self.ny));
        out.push_str("\n[optimizer]\n");
        let opt = &self.optimizer;
        out.push_str(&format!("max_iters = {}\n", opt.max_iters));
        out.push_str(&format!("cost_tolerance = {}\n", opt.cost_tolerance));
        out.push_str(&format!("armijo_c = {}\n", opt.armijo_c));
        match opt.eta0 {
            Some(e) => out.push_str(&format!("eta0 = {e}\n")),
            None => out.push_str("eta0 = auto\n"),
        }
        out.push_str(&format!("eta_shrink = {}\n", opt.eta_shrink));
        out.push_str(&format!("bisection_tol = {}\n", opt.bisection_tol));
        out.push_str(&format!(
            "lumped = {}\n",
            matches!(opt.lumping, MassLumping::Lumped)
        ));
        out.push_str(&format!("seed = {}\n", opt.seed));
        out.push_str(&format!(
            "init = {}\n",
            match self.init {
                InitKind::Uniform => "uniform",
                InitKind::Random => "random",
            }
        ));
        out.push_str("\n[output]\n");
        out.push_str(&format!("dir = {}\n", self.output_dir.display()));
        out.push_str(&format!("csv = {}\n", self.write_csv));
        out.push_str(&format!("vtk = {}\n", self.write_vtk));
        out.push_str(&format!("pgm = {}\n", self.write_pgm));
        out.push_str(&format!("report = {}\n", self.write_report));
        out
    }
}

fn parse_value<T: std::str::FromStr>(line: usize, key: &str, raw: &str) -> Result<T> {
    raw.parse::<T>()
        .map_err(|_| Error::config(Some(line), format!("invalid value `{raw}` for key `{key}`")))
}

fn parse_bool(line: usize, key: &str, raw: &str) -> Result<bool> {
    match raw {
        "true" | "yes" | "1" | "on" => Ok(true),
        "false" | "no" | "0" | "off" => Ok(false),
        _ => Err(Error::config(
            Some(line),
            format!("invalid boolean `{raw}` for key `{key}`"),
        )),
    }
}

fn positive(line: usize, key: &str, v: f64) -> Result<f64> {
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(Error::config(
            Some(line),
            format!("key `{key}` must be positive and finite, got {v}"),
        ))
    }
}

/// Parses a configuration file. Missing keys take documented defaults;
/// unknown keys and malformed lines are errors carrying the line number.
pub fn parse_config(path: &Path) -> Result<RunConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| {
        Error::config(None, format!("cannot read `{}`: {e}", path.display()))
    })?;
    parse_config_str(&text)
}

/// Parses configuration text; see [`parse_config`].
pub fn parse_config_str(text: &str) -> Result<RunConfig> {
    let mut cfg = RunConfig::default();
    let mut cross = CrossGeometry::default();
    let mut cross_touched = false;
    let mut section = String::new();

    for (idx, raw_line) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = match raw_line.find('#') {
            Some(pos) => &raw_line[..pos],
            None => raw_line,
        }
        .trim();
        if line.is_empty() {
            continue;
        }
        if line.starts_with('[') {
            if !line.ends_with(']') {
                return Err(Error::config(Some(line_no), "unterminated section header".to_string()));
            }
            let name = line[1..line.len() - 1].trim();
            match name {
                "problem" | "mesh" | "optimizer" | "output" => section = name.to_string(),
                other => {
                    return Err(Error::config(
                        Some(line_no),
                        format!("unknown section `[{other}]`"),
                    ))
                }
            }
            continue;
        }
        let (key, value) = match line.split_once('=') {
            Some((k, v)) => (k.trim(), v.trim()),
            None => {
                return Err(Error::config(
                    Some(line_no),
                    format!("expected `key = value`, got `{line}`"),
                ))
            }
        };
        if value.is_empty() {
            return Err(Error::config(Some(line_no), format!("empty value for key `{key}`")));
        }

        match (section.as_str(), key) {
            ("problem", "name") => cfg.problem_name = value.to_string(),
            ("problem", "m") => {
                cfg.overrides.m = Some(positive(line_no, key, parse_value(line_no, key, value)?)?)
            }
            ("problem", "alpha") => {
                cfg.overrides.alpha =
                    Some(positive(line_no, key, parse_value(line_no, key, value)?)?)
            }
            ("problem", "vmax") => {
                cfg.overrides.vmax =
                    Some(positive(line_no, key, parse_value(line_no, key, value)?)?)
            }
            ("problem", "cross_h_x0") => {
                cross.h_x0 = parse_value(line_no, key, value)?;
                cross_touched = true;
            }
            ("problem", "cross_h_x1") => {
                cross.h_x1 = parse_value(line_no, key, value)?;
                cross_touched = true;
            }
            ("problem", "cross_h_y0") => {
                cross.h_y0 = parse_value(line_no, key, value)?;
                cross_touched = true;
            }
            ("problem", "cross_h_y1") => {
                cross.h_y1 = parse_value(line_no, key, value)?;
                cross_touched = true;
            }
            ("problem", "cross_v_x0") => {
                cross.v_x0 = parse_value(line_no, key, value)?;
                cross_touched = true;
            }
            ("problem", "cross_v_x1") => {
                cross.v_x1 = parse_value(line_no, key, value)?;
                cross_touched = true;
            }
            ("problem", "cross_v_y0") => {
                cross.v_y0 = parse_value(line_no, key, value)?;
                cross_touched = true;
            }
            ("problem", "cross_v_y1") => {
                cross.v_y1 = parse_value(line_no, key, value)?;
                cross_touched = true;
            }
            ("mesh", "nx") => {
                cfg.nx = parse_value(line_no, key, value)?;
                if cfg.nx == 0 {
                    return Err(Error::config(Some(line_no), "key `nx` must be at least 1".to_string()));
                }
            }
            ("mesh", "ny") => {
                cfg.ny = parse_value(line_no, key, value)?;
                if cfg.ny == 0 {
                    return Err(Error::config(Some(line_no), "key `ny` must be at least 1".to_string()));
                }
            }
            ("optimizer", "max_iters") => {
                cfg.optimizer.max_iters = parse_value(line_no, key, value)?
            }
            ("optimizer", "cost_tolerance") => {
                cfg.optimizer.cost_tolerance =
                    positive(line_no, key, parse_value(line_no, key, value)?)?
            }
            ("optimizer", "armijo_c") => {
                cfg.optimizer.armijo_c = parse_value(line_no, key, value)?
            }
            ("optimizer", "eta0") => {
                cfg.optimizer.eta0 = if value == "auto" {
                    None
                } else {
                    Some(positive(line_no, key, parse_value(line_no, key, value)?)?)
                }
            }
            ("optimizer", "eta_shrink") => {
                cfg.optimizer.eta_shrink = parse_value(line_no, key, value)?
            }
            ("optimizer", "bisection_tol") => {
                cfg.optimizer.bisection_tol =
                    positive(line_no, key, parse_value(line_no, key, value)?)?
            }
            ("optimizer", "lumped") => {
                cfg.optimizer.lumping = if parse_bool(line_no, key, value)? {
                    MassLumping::Lumped
                } else {
                    MassLumping::Consistent
                }
            }
            ("optimizer", "seed") => cfg.optimizer.seed = parse_value(line_no, key, value)?,
            ("optimizer", "init") => {
                cfg.init = match value {
                    "uniform" => InitKind::Uniform,
                    "random" => InitKind::Random,
                    other => {
                        return Err(Error::config(
                            Some(line_no),
                            format!("invalid init `{other}` (expected uniform or random)"),
                        ))
                    }
                }
            }
            ("output", "dir") => cfg.output_dir = PathBuf::from(value),
            ("output", "csv") => cfg.write_csv = parse_bool(line_no, key, value)?,
            ("output", "vtk") => cfg.write_vtk = parse_bool(line_no, key, value)?,
            ("output", "pgm") => cfg.write_pgm = parse_bool(line_no, key, value)?,
            ("output", "report") => cfg.write_report = parse_bool(line_no, key, value)?,
            ("", k) => {
                return Err(Error::config(
                    Some(line_no),
                    format!("key `{k}` appears before any section header"),
                ))
            }
            (sec, k) => {
                return Err(Error::config(
                    Some(line_no),
                    format!("unknown key `{k}` in section [{sec}]"),
                ))
            }
        }
    }

    if cross_touched {
        cfg.overrides.cross = Some(cross);
    }
    cfg.validate()?;
    Ok(cfg)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_config_applies_defaults() {
        let cfg = parse_config_str("[problem]\nname = example1\n").unwrap();
        assert_eq!(cfg.problem_name, "example1");
        assert_eq!((cfg.nx, cfg.ny), (100, 100));
        assert_eq!(cfg.optimizer.max_iters, 500);
        assert_eq!(cfg.optimizer.eta0, None);
        assert!(cfg.write_csv && cfg.write_vtk && cfg.write_pgm && cfg.write_report);
        assert_eq!(cfg.init, InitKind::Uniform);
    }

    #[test]
    fn alpha_override_reaches_problem() {
        let cfg = parse_config_str("[problem]\nname = example1\nalpha = 0.09\n").unwrap();
        let p = cfg.problem().unwrap();
        match p.psi {
            crate::psi::PsiFamily::Exponential { alpha } => assert_eq!(alpha, 0.09),
            _ => panic!("wrong family"),
        }
    }

    #[test]
    fn zero_nx_names_the_key() {
        let err = parse_config_str("[problem]\nname = example1\n[mesh]\nnx = 0\n").unwrap_err();
        let text = err.to_string();
        assert!(text.contains("nx"), "error should name the key: {text}");
        assert!(text.contains("line 4"), "error should carry the line: {text}");
    }

    #[test]
    fn unknown_key_rejected() {
        let err = parse_config_str("[problem]\nname = example1\ntypo_key = 3\n").unwrap_err();
        assert!(err.to_string().contains("typo_key"));
    }

    #[test]
    fn unknown_section_rejected() {
        let err = parse_config_str("[nonsense]\nx = 1\n").unwrap_err();
        assert!(err.to_string().contains("nonsense"));
    }

    #[test]
    fn comments_and_blank_lines_ignored() {
        let cfg = parse_config_str(
            "# a run\n[problem]\nname = example2  # the half-plane data\nm = 0.45\n\n[mesh]\nnx = 64\nny = 32\n",
        )
        .unwrap();
        assert_eq!(cfg.overrides.m, Some(0.45));
        assert_eq!((cfg.nx, cfg.ny), (64, 32));
    }

    #[test]
    fn cross_override_builds_geometry() {
        let cfg = parse_config_str(
            "[problem]\nname = example4\ncross_h_x0 = 0.2\ncross_h_x1 = 0.8\n",
        )
        .unwrap();
        let cross = cfg.overrides.cross.unwrap();
        assert_eq!(cross.h_x0, 0.2);
        assert_eq!(cross.h_x1, 0.8);
        // untouched arms keep defaults
        assert_eq!(cross.v_y1, CrossGeometry::default().v_y1);
    }

    #[test]
    fn effective_ini_round_trips() {
        let cfg = parse_config_str(
            "[problem]\nname = example4\nm = 0.5\n[mesh]\nnx = 48\nny = 48\n[optimizer]\nseed = 9\neta0 = 2.5\n",
        )
        .unwrap();
        let problem = cfg.problem().unwrap();
        let ini = cfg.effective_ini(&problem);
        let back = parse_config_str(&ini).unwrap();
        assert_eq!(back.problem_name, cfg.problem_name);
        assert_eq!(back.nx, cfg.nx);
        assert_eq!(back.optimizer.seed, 9);
        assert_eq!(back.optimizer.eta0, Some(2.5));
        assert_eq!(back.overrides.m, Some(0.5));
        assert!(back.overrides.cross.is_some());
    }

    #[test]
    fn invalid_optimizer_values_rejected() {
        assert!(parse_config_str("[optimizer]\narmijo_c = 1.5\n").is_err());
        assert!(parse_config_str("[optimizer]\neta_shrink = 0\n").is_err());
        assert!(parse_config_str("[optimizer]\neta0 = -1\n").is_err());
        assert!(parse_config_str("[problem]\nname = made_up\n").is_err());
    }
}
