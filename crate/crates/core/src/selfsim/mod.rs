//! Self-similar solutions of the nonlocal porous-medium flow
//! `u_t = ∇·(u ∇(-Δ)^{-s} u)`.
//!
//! Source-type solutions take the form `u = t^{-α} U(x t^{-β})` with
//! `β = 1/(N+2-2s)` and `α = Nβ`. The profile is the explicit family
//! `U(y) = (C₁ - k₁|y|²)_+^{1-s}`, equivalently the density of the fractional
//! obstacle problem solved in [`obstacle`].

pub mod obstacle;

use serde::{Deserialize, Serialize};
use statrs::function::gamma::gamma;

use crate::error::{check_range, Error, Result};
use crate::fracops::getoor_constant;
use crate::grid::{GridField, GridSpec};
use crate::special::tanh_sinh;

pub use obstacle::{
    pressure_tail_fit, solve_stationary_obstacle, solve_stationary_obstacle_with,
    ComplementaritySolution, LcpMethod, ObstacleOptions,
};

/// Self-similarity exponents for dimension `N` and order `s`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Exponents {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    pub dim: usize,
    pub s: f64,
}

pub fn exponents(dim: usize, s: f64) -> Result<Exponents> {
    check_range("s", s, s > 0.0 && s < 1.0, "(0, 1)")?;
    if dim == 0 {
        return Err(Error::Precondition("dimension must be at least 1".into()));
    }
    let n = dim as f64;
    let denom = n + 2.0 - 2.0 * s;
    let beta = 1.0 / denom;
    Ok(Exponents {
        alpha: n * beta,
        beta,
        gamma: (2.0 - 2.0 * s) / denom,
        dim,
        s,
    })
}

/// One member of the explicit source-type family.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BarenblattSpec {
    level: f64,
    s: f64,
    dim: usize,
    c1: f64,
    k1: f64,
}

impl BarenblattSpec {
    /// `level` is the free constant `C₁ > 0`.
    pub fn new(level: f64, s: f64, dim: usize) -> Result<Self> {
        check_range("C1", level, level > 0.0, "(0, inf)")?;
        let (c1, k1) = shape_constants(s, dim)?;
        Ok(Self {
            level,
            s,
            dim,
            c1,
            k1,
        })
    }

    fn with_level(&self, level: f64) -> Self {
        Self { level, ..*self }
    }

    pub fn level(&self) -> f64 {
        self.level
    }

    pub fn s(&self) -> f64 {
        self.s
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// `c₁ = α / K_{2(1-s),N}`.
    pub fn c1(&self) -> f64 {
        self.c1
    }

    /// `k₁ = c₁^{1/(1-s)}`.
    pub fn k1(&self) -> f64 {
        self.k1
    }

    pub fn exponents(&self) -> Exponents {
        exponents(self.dim, self.s).expect("validated at construction")
    }

    /// Radius of the support at time `t`.
    pub fn support_edge(&self, t: f64) -> f64 {
        let e = self.exponents();
        (self.level / self.k1).sqrt() * t.powf(e.alpha / self.dim as f64)
    }

    /// Total mass; independent of time.
    pub fn mass(&self) -> f64 {
        let radius = (self.level / self.k1).sqrt();
        let n = self.dim as f64;
        let sphere = 2.0 * std::f64::consts::PI.powf(0.5 * n) / gamma(0.5 * n);
        let p = 1.0 - self.s;
        let level = self.level;
        let k1 = self.k1;
        sphere
            * tanh_sinh(
                |r| r.powf(n - 1.0) * (level - k1 * r * r).max(0.0).powf(p),
                0.0,
                radius,
            )
    }
}

fn shape_constants(s: f64, dim: usize) -> Result<(f64, f64)> {
    let e = exponents(dim, s)?;
    let c1 = e.alpha / getoor_constant(2.0 * (1.0 - s), dim)?;
    Ok((c1, c1.powf(1.0 / (1.0 - s))))
}

/// `U(x, t) = t^{-α} (C₁ - k₁ |x|² t^{-2α/N})_+^{1-s}`.
pub fn barenblatt_density(x: f64, t: f64, spec: &BarenblattSpec) -> Result<f64> {
    check_range("t", t, t > 0.0, "(0, inf)")?;
    let e = spec.exponents();
    let n = spec.dim as f64;
    let inner = spec.level - spec.k1 * x * x * t.powf(-2.0 * e.alpha / n);
    Ok(t.powf(-e.alpha) * inner.max(0.0).powf(1.0 - spec.s))
}

/// The family member at time `t` sampled on a grid.
pub fn barenblatt_field(spec: &BarenblattSpec, t: f64, grid: &GridSpec) -> Result<GridField> {
    check_range("t", t, t > 0.0, "(0, inf)")?;
    let values = grid
        .coords()
        .into_iter()
        .map(|x| barenblatt_density(x, t, spec))
        .collect::<Result<Vec<_>>>()?;
    GridField::new(*grid, values)
}

/// The `C₁` whose family member carries mass `mass`, found by bisection on
/// the (increasing) map `C₁ ↦ ∫ U`.
pub fn mass_to_c1(mass: f64, s: f64, dim: usize) -> Result<f64> {
    check_range("M", mass, mass > 0.0, "(0, inf)")?;
    let base = BarenblattSpec::new(1.0, s, dim)?;
    let m = |level: f64| base.with_level(level).mass();
    let mut lo = 0.0;
    let mut hi = 1.0;
    while m(hi) < mass {
        lo = hi;
        hi *= 2.0;
        if !hi.is_finite() {
            return Err(Error::NoConvergence {
                what: "mass bracket",
                iterations: 1100,
                residual: mass,
            });
        }
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if m(mid) < mass {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

#[cfg(test)]
mod tests {
    use super::*;
    use statrs::function::beta::beta;

    #[test]
    fn exponent_values() {
        let e = exponents(1, 0.5).unwrap();
        assert_eq!((e.alpha, e.beta, e.gamma), (0.5, 0.5, 0.5));
        let e = exponents(3, 0.5).unwrap();
        assert!((e.alpha - 0.75).abs() < 1e-15 && (e.beta - 0.25).abs() < 1e-15);
        let e = exponents(1, 1e-9).unwrap();
        assert!((e.alpha - 1.0 / 3.0).abs() < 1e-8);
        assert!(exponents(1, 1.0).is_err());
        assert!(exponents(1, 0.0).is_err());
    }

    #[test]
    fn half_order_constants() {
        let b = BarenblattSpec::new(1.0, 0.5, 1).unwrap();
        assert!((b.c1() - 0.5).abs() < 1e-8);
        assert!((b.k1() - 0.25).abs() < 1e-8);
        assert!((b.support_edge(1.0) - 2.0).abs() < 1e-7);
    }

    #[test]
    fn mass_matches_beta_function() {
        for s in [0.25, 0.5, 0.75] {
            let b = BarenblattSpec::new(1.7, s, 1).unwrap();
            let closed = b.level().powf(1.5 - s) / b.k1().sqrt() * beta(0.5, 2.0 - s);
            assert!((b.mass() - closed).abs() < 1e-12 * closed, "s={s}");
        }
    }

    #[test]
    fn density_vanishes_outside_support() {
        let b = BarenblattSpec::new(1.0, 0.5, 1).unwrap();
        assert_eq!(barenblatt_density(2.5, 1.0, &b).unwrap(), 0.0);
        assert!(barenblatt_density(1.9, 1.0, &b).unwrap() > 0.0);
        assert!(barenblatt_density(0.0, 0.0, &b).is_err());
    }

    #[test]
    fn mass_inversion_round_trip() {
        for s in [0.25, 0.5, 0.75] {
            for m in [0.1, 1.0, 7.5] {
                let c = mass_to_c1(m, s, 1).unwrap();
                let back = BarenblattSpec::new(c, s, 1).unwrap().mass();
                assert!(((back - m) / m).abs() < 1e-10);
            }
        }
        assert!(mass_to_c1(0.0, 0.5, 1).is_err());
        assert!(mass_to_c1(2.0, 0.5, 1).unwrap() > mass_to_c1(1.0, 0.5, 1).unwrap());
    }
}
