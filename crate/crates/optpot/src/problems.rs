//! Problem specifications: data functions, the admissible class, and the
//! four built-in example problems on the unit square.
//!
//! Data functions cover closed forms (constants, affine maps, arbitrary
//! closures) and piecewise sign regions built from half-planes and
//! axis-aligned rectangles, which is enough for all built-in problems.

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::mesh::Rectangle;
use crate::psi::PsiFamily;

/// Point-set used to define piecewise data. Region boundaries are closed:
/// a half-plane contains points with `a·x + b·y + c ≥ 0` and a rectangle
/// contains its edges.
#[derive(Debug, Clone, PartialEq)]
pub enum Region {
    HalfPlane { a: f64, b: f64, c: f64 },
    Rect { x0: f64, x1: f64, y0: f64, y1: f64 },
    Union(Vec<Region>),
}

impl Region {
    pub fn contains(&self, x: f64, y: f64) -> bool {
        match self {
            Region::HalfPlane { a, b, c } => a * x + b * y + c >= 0.0,
            Region::Rect { x0, x1, y0, y1 } => x >= *x0 && x <= *x1 && y >= *y0 && y <= *y1,
            Region::Union(parts) => parts.iter().any(|r| r.contains(x, y)),
        }
    }
}

/// Scalar data function on the domain.
#[derive(Clone)]
pub enum DataFunction {
    Constant(f64),
    /// `a + b·x + c·y`.
    Affine { a: f64, b: f64, c: f64 },
    /// `inside` on the region, `outside` elsewhere.
    Piecewise {
        region: Region,
        inside: f64,
        outside: f64,
    },
    /// Arbitrary closed form.
    Custom(Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>),
}

impl DataFunction {
    pub fn eval(&self, x: f64, y: f64) -> f64 {
        match self {
            DataFunction::Constant(c) => *c,
            DataFunction::Affine { a, b, c } => a + b * x + c * y,
            DataFunction::Piecewise {
                region,
                inside,
                outside,
            } => {
                if region.contains(x, y) {
                    *inside
                } else {
                    *outside
                }
            }
            DataFunction::Custom(f) => f(x, y),
        }
    }

    pub fn custom<F: Fn(f64, f64) -> f64 + Send + Sync + 'static>(f: F) -> Self {
        DataFunction::Custom(Arc::new(f))
    }
}

impl fmt::Debug for DataFunction {
    fn fmt(&self, out: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DataFunction::Constant(c) => write!(out, "Constant({c})"),
            DataFunction::Affine { a, b, c } => write!(out, "Affine({a} + {b}x + {c}y)"),
            DataFunction::Piecewise {
                region,
                inside,
                outside,
            } => write!(out, "Piecewise({inside} on {region:?}, else {outside})"),
            DataFunction::Custom(_) => write!(out, "Custom(..)"),
        }
    }
}

/// Geometry of the cross used by the third and fourth example problems:
/// the union of a horizontal and a vertical bar.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CrossGeometry {
    /// Horizontal arm x-span and y-extent.
    pub h_x0: f64,
    pub h_x1: f64,
    pub h_y0: f64,
    pub h_y1: f64,
    /// Vertical arm x-extent and y-span.
    pub v_x0: f64,
    pub v_x1: f64,
    pub v_y0: f64,
    pub v_y1: f64,
}

impl Default for CrossGeometry {
    /// A roughly centered, non-symmetric cross covering ≈ 24% of the unit
    /// square; arm widths differ and the crossing point is off-center.
    fn default() -> Self {
        CrossGeometry {
            h_x0: 0.15,
            h_x1: 0.85,
            h_y0: 0.35,
            h_y1: 0.55,
            v_x0: 0.45,
            v_x1: 0.65,
            v_y0: 0.2,
            v_y1: 0.9,
        }
    }
}

impl CrossGeometry {
    pub fn region(&self) -> Region {
        Region::Union(vec![
            Region::Rect {
                x0: self.h_x0,
                x1: self.h_x1,
                y0: self.h_y0,
                y1: self.h_y1,
            },
            Region::Rect {
                x0: self.v_x0,
                x1: self.v_x1,
                y0: self.v_y0,
                y1: self.v_y1,
            },
        ])
    }

    /// Exact area of the union of the two bars.
    pub fn area(&self) -> f64 {
        let h = (self.h_x1 - self.h_x0).max(0.0) * (self.h_y1 - self.h_y0).max(0.0);
        let v = (self.v_x1 - self.v_x0).max(0.0) * (self.v_y1 - self.v_y0).max(0.0);
        let ox = (self.h_x1.min(self.v_x1) - self.h_x0.max(self.v_x0)).max(0.0);
        let oy = (self.h_y1.min(self.v_y1) - self.h_y0.max(self.v_y0)).max(0.0);
        h + v - ox * oy
    }

    pub fn validate(&self, domain: &Rectangle) -> Result<()> {
        let inside = |x: f64, lo: f64, hi: f64| x >= lo && x <= hi;
        let ok = self.h_x0 < self.h_x1
            && self.h_y0 < self.h_y1
            && self.v_x0 < self.v_x1
            && self.v_y0 < self.v_y1
            && inside(self.h_x0, domain.x0, domain.x1)
            && inside(self.h_x1, domain.x0, domain.x1)
            && inside(self.v_y0, domain.y0, domain.y1)
            && inside(self.v_y1, domain.y0, domain.y1)
            && inside(self.h_y0, domain.y0, domain.y1)
            && inside(self.h_y1, domain.y0, domain.y1)
            && inside(self.v_x0, domain.x0, domain.x1)
            && inside(self.v_x1, domain.x0, domain.x1);
        if ok {
            Ok(())
        } else {
            Err(Error::invalid("cross geometry is degenerate or leaves the domain".to_string()))
        }
    }
}

/// A full problem: domain, data, constraint profile, volume bound and the
/// box bound on the potential.
#[derive(Debug, Clone)]
pub struct ProblemSpec {
    pub domain: Rectangle,
    pub f: DataFunction,
    pub g: DataFunction,
    pub psi: PsiFamily,
    /// Volume bound `m` for `∫ Ψ(V) dx ≤ m`.
    pub m: f64,
    /// Upper box bound on the potential.
    pub vmax: f64,
    /// Cross geometry when the data was built from one (kept for run
    /// metadata); `None` otherwise.
    pub cross: Option<CrossGeometry>,
}

impl ProblemSpec {
    /// Checks the admissibility of the constraint: the class is nonempty
    /// (`Ψ(vmax)·|D| ≤ m`) and the profile passes its structural checks.
    pub fn validate(&self) -> Result<()> {
        if !(self.m > 0.0) {
            return Err(Error::invalid(format!("volume bound must be positive, got {}", self.m)));
        }
        if !(self.vmax > 0.0) {
            return Err(Error::invalid(format!("vmax must be positive, got {}", self.vmax)));
        }
        self.psi.verify_assumptions()?;
        let floor = self.psi.eval(self.vmax)? * self.domain.area();
        if floor > self.m {
            return Err(Error::invalid(format!(
                "admissible class is empty: Ψ(vmax)·|D| = {floor:.6} exceeds m = {}",
                self.m
            )));
        }
        if let Some(cross) = &self.cross {
            cross.validate(&self.domain)?;
        }
        Ok(())
    }

    /// True when the bound is so large that every box-constrained potential
    /// satisfies it (`m ≥ Ψ(0)·|D|`); the constraint then never binds.
    pub fn constraint_vacuous(&self) -> bool {
        match self.psi.eval(0.0) {
            Ok(top) => self.m >= top * self.domain.area(),
            Err(_) => false,
        }
    }
}

/// Optional overrides for [`builtin_problem`].
#[derive(Debug, Clone, Default)]
pub struct ProblemOverrides {
    pub m: Option<f64>,
    pub alpha: Option<f64>,
    pub vmax: Option<f64>,
    pub cross: Option<CrossGeometry>,
}

/// Builds one of the four example problems on the unit square, all with
/// `g ≡ 1` and the exponential profile.
///
/// * `example1` — `f(x, y) = −(1 + 10x)`, `m = 0.2`, `α = 3·10⁻⁴`.
/// * `example2` — `f = −1` where `y − 1.4x ≥ 0.3`, `+1` elsewhere, `m = 0.2`.
/// * `example3` — `f = +1` on a centered non-symmetric cross, `−1` outside,
///   `m = 0.45`.
/// * `example4` — sign-reversed cross, `m = 0.5`.
pub fn builtin_problem(name: &str, overrides: &ProblemOverrides) -> Result<ProblemSpec> {
    let domain = Rectangle::unit_square();
    let alpha = overrides.alpha.unwrap_or(3e-4);
    let vmax = overrides.vmax.unwrap_or(1e4);
    let psi = PsiFamily::exponential(alpha)?;
    let g = DataFunction::Constant(1.0);

    let (f, default_m, cross) = match name {
        "example1" => (
            DataFunction::Affine {
                a: -1.0,
                b: -10.0,
                c: 0.0,
            },
            0.2,
            None,
        ),
        "example2" => (
            DataFunction::Piecewise {
                region: Region::HalfPlane {
                    a: -1.4,
                    b: 1.0,
                    c: -0.3,
                },
                inside: -1.0,
                outside: 1.0,
            },
            0.2,
            None,
        ),
        "example3" => {
            let cross = overrides.cross.unwrap_or_default();
            (
                DataFunction::Piecewise {
                    region: cross.region(),
                    inside: 1.0,
                    outside: -1.0,
                },
                0.45,
                Some(cross),
            )
        }
        "example4" => {
            let cross = overrides.cross.unwrap_or_default();
            (
                DataFunction::Piecewise {
                    region: cross.region(),
                    inside: -1.0,
                    outside: 1.0,
                },
                0.5,
                Some(cross),
            )
        }
        other => return Err(Error::UnknownProblem(other.to_string())),
    };

    if overrides.cross.is_some() && cross.is_none() {
        return Err(Error::invalid(format!(
            "problem `{name}` does not take a cross geometry override"
        )));
    }

    let spec = ProblemSpec {
        domain,
        f,
        g,
        psi,
        m: overrides.m.unwrap_or(default_m),
        vmax,
        cross,
    };
    spec.validate()?;
    Ok(spec)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn example1_linear_data() {
        let p = builtin_problem("example1", &ProblemOverrides::default()).unwrap();
        for y in [0.0, 0.3, 1.0] {
            assert_eq!(p.f.eval(0.5, y), -6.0);
        }
        assert_eq!(p.g.eval(0.2, 0.9), 1.0);
        assert_eq!(p.m, 0.2);
        assert_eq!(p.vmax, 1e4);
    }

    #[test]
    fn example2_halfplane_boundary_is_negative_side() {
        let p = builtin_problem("example2", &ProblemOverrides::default()).unwrap();
        // On the line y − 1.4x = 0.3 the value is −1 (≥ convention).
        assert_eq!(p.f.eval(0.0, 0.3), -1.0);
        assert_eq!(p.f.eval(0.5, 1.0), -1.0);
        assert_eq!(p.f.eval(0.5, 0.99), 1.0);
    }

    #[test]
    fn cross_area_is_exact_and_strictly_interior() {
        let cross = CrossGeometry::default();
        let area = cross.area();
        assert!(area > 0.0 && area < 1.0);
        // default: 0.7·0.2 + 0.2·0.7 − 0.2·0.2
        assert!((area - 0.24).abs() < 1e-12);

        // Quadrature of the indicator agrees with the closed form.
        let p = builtin_problem("example3", &ProblemOverrides::default()).unwrap();
        let n = 1600;
        let mut hits = 0usize;
        for j in 0..n {
            for i in 0..n {
                let x = (i as f64 + 0.5) / n as f64;
                let y = (j as f64 + 0.5) / n as f64;
                if p.f.eval(x, y) > 0.0 {
                    hits += 1;
                }
            }
        }
        let sampled = hits as f64 / (n * n) as f64;
        assert!(
            (sampled - area).abs() < 2e-3,
            "sampled cross area {sampled} vs exact {area}"
        );
    }

    #[test]
    fn example4_reverses_cross_sign() {
        let p3 = builtin_problem("example3", &ProblemOverrides::default()).unwrap();
        let p4 = builtin_problem("example4", &ProblemOverrides::default()).unwrap();
        assert_eq!(p4.m, 0.5);
        for &(x, y) in &[(0.5, 0.45), (0.05, 0.05), (0.6, 0.85), (0.9, 0.5)] {
            assert_eq!(p3.f.eval(x, y), -p4.f.eval(x, y));
        }
    }

    #[test]
    fn builtin_specs_pass_admissibility() {
        for name in ["example1", "example2", "example3", "example4"] {
            let p = builtin_problem(name, &ProblemOverrides::default()).unwrap();
            p.validate().unwrap();
            assert!(!p.constraint_vacuous(), "{name} constraint should bind");
        }
    }

    #[test]
    fn inadmissible_override_rejected() {
        // α = 0.09 makes Ψ(vmax) ≈ 0, so tiny m is still fine; but a huge
        // α with a too-small vmax empties the class.
        let bad = builtin_problem(
            "example1",
            &ProblemOverrides {
                m: Some(0.001),
                alpha: Some(3e-4),
                vmax: Some(10.0),
                cross: None,
            },
        );
        assert!(bad.is_err(), "Ψ(10)·1 ≈ 0.997 > 0.001 must be rejected");

        assert!(builtin_problem("nope", &ProblemOverrides::default()).is_err());

        let cross_on_ex1 = builtin_problem(
            "example1",
            &ProblemOverrides {
                cross: Some(CrossGeometry::default()),
                ..Default::default()
            },
        );
        assert!(cross_on_ex1.is_err());
    }

    #[test]
    fn alpha_override_reflected() {
        let p = builtin_problem(
            "example1",
            &ProblemOverrides {
                alpha: Some(0.09),
                ..Default::default()
            },
        )
        .unwrap();
        match p.psi {
            PsiFamily::Exponential { alpha } => assert_eq!(alpha, 0.09),
            _ => panic!("expected exponential profile"),
        }
    }
}
