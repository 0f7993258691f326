//! Constraint profiles Ψ and their structural assumptions.
//!
//! A profile is a strictly decreasing map from potential values to "volume
//! density": Ψ(0) = 1 counts an element as free, Ψ(+∞) = 0 as excluded, and
//! `∫ Ψ(V) dx ≤ m` generalizes a volume constraint. Two families are
//! provided, `e^{−αs}` and `s^{−q}`, and both satisfy the structural
//! requirements checked by [`PsiFamily::verify_assumptions`]: strict
//! monotonicity, and convexity of `s ↦ Ψ⁻¹(sᵖ)` for some exponent `p > 1`.

use crate::error::{Error, Result};

/// Strictly decreasing constraint profile.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PsiFamily {
    /// Ψ(s) = e^{−αs} with α > 0.
    Exponential { alpha: f64 },
    /// Ψ(s) = s^{−q} with q > 0; defined for s > 0 only.
    Power { q: f64 },
}

/// Result of the structural checks, with the convexity witness used.
#[derive(Debug, Clone, Copy)]
pub struct AssumptionCheck {
    /// Exponent p at which `s ↦ Ψ⁻¹(sᵖ)` was verified convex.
    pub witness_p: f64,
    /// Smallest decrement Ψ(s_k) − Ψ(s_{k+1}) over the sample grid; must be
    /// positive for strict decrease.
    pub min_decrement: f64,
    /// Smallest centered second difference of Ψ⁻¹(sᵖ); must be ≥ −1e−9.
    pub min_second_difference: f64,
}

impl PsiFamily {
    pub fn exponential(alpha: f64) -> Result<Self> {
        if !(alpha > 0.0) || !alpha.is_finite() {
            return Err(Error::invalid(format!("alpha must be positive, got {alpha}")));
        }
        Ok(PsiFamily::Exponential { alpha })
    }

    pub fn power(q: f64) -> Result<Self> {
        if !(q > 0.0) || !q.is_finite() {
            return Err(Error::invalid(format!("power exponent must be positive, got {q}")));
        }
        Ok(PsiFamily::Power { q })
    }

    /// Ψ(s).
    pub fn eval(&self, s: f64) -> Result<f64> {
        if !s.is_finite() || s < 0.0 {
            return Err(Error::invalid(format!("Ψ expects s ≥ 0, got {s}")));
        }
        match *self {
            PsiFamily::Exponential { alpha } => Ok((-alpha * s).exp()),
            PsiFamily::Power { q } => {
                if s <= 0.0 {
                    Err(Error::invalid("power profile is undefined at s = 0".to_string()))
                } else {
                    Ok(s.powf(-q))
                }
            }
        }
    }

    /// Ψ′(s); strictly negative on the domain.
    pub fn prime(&self, s: f64) -> Result<f64> {
        if !s.is_finite() || s < 0.0 {
            return Err(Error::invalid(format!("Ψ′ expects s ≥ 0, got {s}")));
        }
        match *self {
            PsiFamily::Exponential { alpha } => Ok(-alpha * (-alpha * s).exp()),
            PsiFamily::Power { q } => {
                if s <= 0.0 {
                    Err(Error::invalid("power profile is undefined at s = 0".to_string()))
                } else {
                    Ok(-q * s.powf(-q - 1.0))
                }
            }
        }
    }

    /// Ψ⁻¹(t) for t in (0, Ψ(0)].
    pub fn inverse(&self, t: f64) -> Result<f64> {
        if !(t > 0.0) || !t.is_finite() {
            return Err(Error::invalid(format!("Ψ⁻¹ expects t > 0, got {t}")));
        }
        match *self {
            PsiFamily::Exponential { alpha } => Ok(-t.ln() / alpha),
            PsiFamily::Power { q } => Ok(t.powf(-1.0 / q)),
        }
    }

    /// Verifies strict decrease by sampling and convexity of Ψ⁻¹(sᵖ) by
    /// centered second differences at a family-specific witness p.
    pub fn verify_assumptions(&self) -> Result<AssumptionCheck> {
        let witness_p = match *self {
            PsiFamily::Exponential { .. } => 2.0,
            PsiFamily::Power { q } => 1.0 + q,
        };

        // Sample Ψ on a geometric-ish grid of potentials.
        let s_lo = match *self {
            PsiFamily::Exponential { .. } => 0.0,
            PsiFamily::Power { .. } => 1e-3,
        };
        let scale = match *self {
            PsiFamily::Exponential { alpha } => 10.0 / alpha,
            PsiFamily::Power { .. } => 100.0,
        };
        let mut min_decrement = f64::INFINITY;
        let samples = 64;
        let mut prev = self.eval(s_lo)?;
        for k in 1..=samples {
            let s = s_lo + scale * k as f64 / samples as f64;
            let cur = self.eval(s)?;
            min_decrement = min_decrement.min(prev - cur);
            prev = cur;
        }
        if !(min_decrement > 0.0) {
            return Err(Error::invalid(format!(
                "profile is not strictly decreasing (min decrement {min_decrement})"
            )));
        }

        // Second differences of s ↦ Ψ⁻¹(sᵖ) on (0, Ψ(s_lo)^{1/p}).
        let mut min_second = f64::INFINITY;
        let grid = 64;
        let h = 1.0 / (grid as f64 + 2.0);
        let compose = |s: f64| -> Result<f64> { self.inverse(s.powf(witness_p)) };
        for k in 1..=grid {
            let s = k as f64 * h;
            let f0 = compose(s - h * 0.5)?;
            let f1 = compose(s)?;
            let f2 = compose(s + h * 0.5)?;
            min_second = min_second.min(f0 - 2.0 * f1 + f2);
        }
        if min_second < -1e-9 {
            return Err(Error::invalid(format!(
                "Ψ⁻¹(s^p) fails the convexity check at p = {witness_p} (second difference {min_second:.3e})"
            )));
        }

        Ok(AssumptionCheck {
            witness_p,
            min_decrement,
            min_second_difference: min_second,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exponential_point_values() {
        let psi = PsiFamily::exponential(0.09).unwrap();
        assert_eq!(psi.eval(0.0).unwrap(), 1.0);
        assert_eq!(psi.inverse(1.0).unwrap(), 0.0);

        let small = PsiFamily::exponential(3e-4).unwrap();
        let v = small.eval(1e4).unwrap();
        assert!((v - (-3.0f64).exp()).abs() < 1e-15);
        assert!((v - 0.0497871).abs() < 1e-7);
    }

    #[test]
    fn inverse_round_trips() {
        use rand::prelude::*;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        for psi in [
            PsiFamily::exponential(0.09).unwrap(),
            PsiFamily::exponential(3e-4).unwrap(),
            PsiFamily::power(2.0).unwrap(),
        ] {
            for _ in 0..50 {
                let s: f64 = rng.gen_range(0.0..100.0);
                let s = match psi {
                    PsiFamily::Power { .. } => s.max(1e-3),
                    _ => s,
                };
                let back = psi.inverse(psi.eval(s).unwrap()).unwrap();
                assert!(
                    (back - s).abs() <= 1e-12 * s.max(1.0),
                    "round trip failed: {s} -> {back}"
                );
            }
        }
    }

    #[test]
    fn prime_matches_finite_differences() {
        for psi in [PsiFamily::exponential(0.3).unwrap(), PsiFamily::power(1.5).unwrap()] {
            for &s in &[0.5f64, 1.0, 7.0, 40.0] {
                let h = 1e-6 * s.max(1.0);
                let fd =
                    (psi.eval(s + h).unwrap() - psi.eval(s - h).unwrap()) / (2.0 * h);
                let an = psi.prime(s).unwrap();
                assert!(
                    (fd - an).abs() <= 1e-7 * an.abs().max(1e-12),
                    "Ψ′ mismatch at {s}: fd {fd} vs {an}"
                );
            }
        }
    }

    #[test]
    fn assumptions_hold_for_both_families() {
        let exp = PsiFamily::exponential(3e-4).unwrap();
        let check = exp.verify_assumptions().unwrap();
        assert_eq!(check.witness_p, 2.0);
        assert!(check.min_decrement > 0.0);

        let pow = PsiFamily::power(0.7).unwrap();
        let check = pow.verify_assumptions().unwrap();
        assert_eq!(check.witness_p, 1.7);
    }

    #[test]
    fn domain_violations_error() {
        let pow = PsiFamily::power(1.0).unwrap();
        assert!(pow.eval(0.0).is_err());
        assert!(pow.prime(0.0).is_err());
        assert!(pow.inverse(0.0).is_err());
        let exp = PsiFamily::exponential(1.0).unwrap();
        assert!(exp.eval(-1.0).is_err());
        assert!(PsiFamily::exponential(0.0).is_err());
        assert!(PsiFamily::power(-2.0).is_err());
    }
}
