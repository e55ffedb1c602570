//! Stationary profile of the rescaled flow as a fractional obstacle problem:
//! find a pressure `P` and density `V = (-Δ)^s P` with
//!
//! ```text
//! P ≥ f,   V ≥ 0,   (P - f) V = 0,   f(y) = C - (β/2) |y|².
//! ```
//!
//! The unknown is the density. It is piecewise constant on cells, and the
//! pressure is its whole-line Riesz potential `P = g * V`, integrated exactly
//! cell by cell through an antiderivative of the kernel `g`. Only cells where
//! `f > 0` can carry density. The resulting linear complementarity problem
//! is solved by a primal-dual active-set iteration. Cells around the discrete
//! free boundary are then split into finer subcells and the problem is solved
//! again, so the contact edge is located to a fraction of a cell.
//!
//! For `s ≥ 1/2` the kernel does not decay in one dimension. It is shifted
//! to vanish at the domain diameter `2L`, which keeps it positive and the
//! system positive definite; the pressure is then defined relative to that
//! gauge.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;
use statrs::function::gamma::gamma;

use crate::error::{check_range, Error, Result};
use crate::fit::fit_power_law;
use crate::grid::{GridField, GridSpec};
use crate::selfsim::exponents;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum LcpMethod {
    /// Primal-dual active set with free-boundary refinement.
    ActiveSet,
    /// Projected successive over-relaxation on the uniform cells only.
    ProjectedSor { omega: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ObstacleOptions {
    pub method: LcpMethod,
    /// Cells on each side of a free-boundary edge that get refined.
    pub refine_band: usize,
    /// Subcells per refined cell; odd, so each node stays a subcell centre.
    pub subcells: usize,
    pub max_iterations: usize,
    pub tolerance: f64,
}

impl Default for ObstacleOptions {
    fn default() -> Self {
        Self {
            method: LcpMethod::ActiveSet,
            refine_band: 2,
            subcells: 33,
            max_iterations: 500,
            tolerance: 1e-8,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ComplementaritySolution {
    pub pressure: GridField,
    pub density: GridField,
    pub contact_radius: f64,
    pub obstacle_height: f64,
    pub s: f64,
    /// Mass of the density, integrated over the (possibly refined) cells.
    pub mass: f64,
    /// Largest of obstacle violation, negative density, and `|(P - f) V|`.
    pub residual: f64,
    pub iterations: usize,
}

impl ComplementaritySolution {
    pub fn obstacle(&self) -> GridField {
        let a = 0.5 * exponents(1, self.s).expect("validated").beta;
        let c = self.obstacle_height;
        GridField::from_trusted(
            *self.pressure.grid(),
            self.pressure
                .grid()
                .coords()
                .iter()
                .map(|y| c - a * y * y)
                .collect(),
        )
    }
}

/// Constant of the 1-D Riesz kernel `c |r|^{2s-1}`.
pub fn riesz_kernel_constant(s: f64) -> f64 {
    gamma(0.5 - s) / (4f64.powf(s) * std::f64::consts::PI.sqrt() * gamma(s))
}

const LOG_BRANCH: f64 = 1e-9;

/// Kernel of `(-Δ)^{-s}` in one dimension (logarithmic at `s = 1/2`).
pub fn riesz_kernel(r: f64, s: f64) -> f64 {
    let r = r.abs();
    if (s - 0.5).abs() < LOG_BRANCH {
        -r.ln() / std::f64::consts::PI
    } else {
        riesz_kernel_constant(s) * r.powf(2.0 * s - 1.0)
    }
}

/// Odd antiderivative of [`riesz_kernel`], vanishing at 0.
fn riesz_antiderivative(r: f64, s: f64, c: f64) -> f64 {
    if r == 0.0 {
        return 0.0;
    }
    if (s - 0.5).abs() < LOG_BRANCH {
        -(r * r.abs().ln() - r) / std::f64::consts::PI
    } else {
        c * r.signum() * r.abs().powf(2.0 * s) / (2.0 * s)
    }
}

struct Cells {
    centers: Vec<f64>,
    widths: Vec<f64>,
}

struct Kernel {
    s: f64,
    c: f64,
    gauge: f64,
}

impl Kernel {
    fn new(s: f64, half_width: f64) -> Self {
        let gauge = if s >= 0.5 - LOG_BRANCH {
            riesz_kernel(2.0 * half_width, s)
        } else {
            0.0
        };
        Self {
            s,
            c: riesz_kernel_constant(s),
            gauge,
        }
    }

    /// Pressure at `y` of unit density on the cell `(center, width)`.
    fn cell(&self, y: f64, center: f64, width: f64) -> f64 {
        let d = y - center;
        riesz_antiderivative(d + 0.5 * width, self.s, self.c)
            - riesz_antiderivative(d - 0.5 * width, self.s, self.c)
            - self.gauge * width
    }

    fn matrix(&self, targets: &[f64], cells: &Cells) -> DMatrix<f64> {
        DMatrix::from_fn(targets.len(), cells.centers.len(), |i, j| {
            self.cell(targets[i], cells.centers[j], cells.widths[j])
        })
    }
}

/// Primal-dual active-set solve of `V ≥ 0, G V - f ≥ 0, V·(G V - f) = 0`.
pub fn lcp_active_set(
    g: &DMatrix<f64>,
    f: &DVector<f64>,
    budget: usize,
) -> Result<(DVector<f64>, usize)> {
    let m = f.len();
    let mut active = vec![true; m];
    for it in 1..=budget {
        let idx: Vec<usize> = (0..m).filter(|&i| active[i]).collect();
        let mut v = DVector::zeros(m);
        if !idx.is_empty() {
            let sub = g.select_rows(&idx).select_columns(&idx);
            let rhs = DVector::from_iterator(idx.len(), idx.iter().map(|&i| f[i]));
            let sol = sub
                .lu()
                .solve(&rhs)
                .ok_or_else(|| Error::Precondition("singular active-set system".into()))?;
            for (k, &i) in idx.iter().enumerate() {
                v[i] = sol[k];
            }
        }
        let w = g * &v - f;
        let next: Vec<bool> = (0..m).map(|i| v[i] - w[i] > 0.0).collect();
        if next == active {
            return Ok((v, it));
        }
        active = next;
    }
    Err(Error::NoConvergence {
        what: "active-set iteration",
        iterations: budget,
        residual: f64::NAN,
    })
}

fn lcp_residual(g: &DMatrix<f64>, f: &DVector<f64>, v: &DVector<f64>) -> f64 {
    let w = g * v - f;
    (0..f.len())
        .map(|i| (-w[i]).max(-v[i]).max((w[i] * v[i]).abs()))
        .fold(0.0, f64::max)
}

/// Projected SOR for the same problem; needs a symmetric positive definite `g`.
pub fn lcp_projected_sor(
    g: &DMatrix<f64>,
    f: &DVector<f64>,
    omega: f64,
    tol: f64,
    budget: usize,
) -> Result<(DVector<f64>, usize)> {
    check_range("omega", omega, omega > 0.0 && omega < 2.0, "(0, 2)")?;
    let m = f.len();
    let mut v = DVector::zeros(m);
    let mut residual = f64::INFINITY;
    for it in 1..=budget {
        for i in 0..m {
            let gi = g.row(i).dot(&v.transpose());
            v[i] = (v[i] - omega * (gi - f[i]) / g[(i, i)]).max(0.0);
        }
        residual = lcp_residual(g, f, &v);
        if residual <= tol {
            return Ok((v, it));
        }
    }
    Err(Error::NoConvergence {
        what: "projected SOR",
        iterations: budget,
        residual,
    })
}

pub fn solve_stationary_obstacle(
    c: f64,
    s: f64,
    grid: &GridSpec,
) -> Result<ComplementaritySolution> {
    solve_stationary_obstacle_with(c, s, grid, &ObstacleOptions::default())
}

pub fn solve_stationary_obstacle_with(
    c: f64,
    s: f64,
    grid: &GridSpec,
    opts: &ObstacleOptions,
) -> Result<ComplementaritySolution> {
    check_range("s", s, s > 0.0 && s < 1.0, "(0, 1)")?;
    check_range("C", c, true, "finite")?;
    if opts.subcells % 2 == 0 {
        return Err(Error::Precondition("subcell count must be odd".into()));
    }
    let trivial = || ComplementaritySolution {
        pressure: GridField::zeros(*grid),
        density: GridField::zeros(*grid),
        contact_radius: 0.0,
        obstacle_height: c,
        s,
        mass: 0.0,
        residual: 0.0,
        iterations: 0,
    };
    if c <= 0.0 {
        return Ok(trivial());
    }
    let a = 0.5 * exponents(1, s)?.beta;
    let obstacle = |y: f64| c - a * y * y;
    let y = grid.coords();
    let h = grid.spacing();
    let candidates: Vec<usize> = (0..y.len()).filter(|&i| obstacle(y[i]) > 0.0).collect();
    if candidates.is_empty() {
        return Err(Error::Precondition(
            "grid does not resolve the region where the obstacle is positive".into(),
        ));
    }
    if candidates[0] == 0 || *candidates.last().unwrap() == y.len() - 1 {
        return Err(Error::Precondition(
            "obstacle is positive up to the domain boundary; enlarge the domain".into(),
        ));
    }
    let kernel = Kernel::new(s, grid.half_width());
    let coarse = Cells {
        centers: candidates.iter().map(|&i| y[i]).collect(),
        widths: vec![h; candidates.len()],
    };
    let solve = |cells: &Cells| -> Result<(DVector<f64>, usize)> {
        let g = kernel.matrix(&cells.centers, cells);
        let f = DVector::from_iterator(
            cells.centers.len(),
            cells.centers.iter().map(|&x| obstacle(x)),
        );
        match opts.method {
            LcpMethod::ActiveSet => lcp_active_set(&g, &f, opts.max_iterations),
            LcpMethod::ProjectedSor { omega } => {
                lcp_projected_sor(&g, &f, omega, opts.tolerance, opts.max_iterations)
            }
        }
    };
    let (v0, mut iterations) = solve(&coarse)?;

    // owner[k] = (grid node, is the subcell centred on that node)
    let mut cells = coarse;
    let mut owner: Vec<(usize, bool)> = candidates.iter().map(|&i| (i, true)).collect();
    let refine = matches!(opts.method, LcpMethod::ActiveSet) && opts.subcells > 1;
    let v = if refine {
        let support: Vec<usize> = (0..candidates.len()).filter(|&k| v0[k] > 0.0).collect();
        if support.is_empty() {
            v0
        } else {
            let first = support[0];
            let last = *support.last().unwrap();
            let band = opts.refine_band as isize;
            let near = |k: usize| {
                let k = k as isize;
                (k - first as isize).abs() <= band || (k - last as isize).abs() <= band
            };
            let m = opts.subcells;
            let sub = h / m as f64;
            let mut fine = Cells {
                centers: Vec::new(),
                widths: Vec::new(),
            };
            owner.clear();
            for (k, &node) in candidates.iter().enumerate() {
                if near(k) {
                    for q in 0..m {
                        let off = (q as f64 - (m as f64 - 1.0) / 2.0) * sub;
                        fine.centers.push(y[node] + off);
                        fine.widths.push(sub);
                        owner.push((node, q == (m - 1) / 2));
                    }
                } else {
                    fine.centers.push(y[node]);
                    fine.widths.push(h);
                    owner.push((node, true));
                }
            }
            let (v1, it) = solve(&fine)?;
            iterations += it;
            cells = fine;
            v1
        }
    } else {
        v0
    };

    let mut density = vec![0.0; y.len()];
    for (k, &(node, centred)) in owner.iter().enumerate() {
        if centred {
            density[node] = v[k];
        }
    }
    let g_grid = kernel.matrix(&y, &cells);
    let pressure: Vec<f64> = (&g_grid * &v).iter().copied().collect();
    let mass: f64 = v.iter().zip(&cells.widths).map(|(a, b)| a * b).sum();
    let contact_radius = (0..v.len())
        .filter(|&k| v[k] > 0.0)
        .map(|k| cells.centers[k].abs())
        .fold(0.0, f64::max);

    let mut residual = 0.0f64;
    for i in 0..y.len() {
        let gap = pressure[i] - obstacle(y[i]);
        residual = residual
            .max(-gap)
            .max(-density[i])
            .max((gap * density[i]).abs());
    }
    let g_cells = kernel.matrix(&cells.centers, &cells);
    let f_cells = DVector::from_iterator(
        cells.centers.len(),
        cells.centers.iter().map(|&x| obstacle(x)),
    );
    residual = residual.max(lcp_residual(&g_cells, &f_cells, &v));

    if residual > opts.tolerance {
        return Err(Error::NoConvergence {
            what: "obstacle solve",
            iterations,
            residual,
        });
    }
    Ok(ComplementaritySolution {
        pressure: GridField::new(*grid, pressure)?,
        density: GridField::new(*grid, density)?,
        contact_radius,
        obstacle_height: c,
        s,
        mass,
        residual,
        iterations,
    })
}

/// Decay exponent `p` of `P(y) ~ y^{-p}` fitted on `[2R, L)`.
///
/// Only meaningful for `s < 1/2` in one dimension, where the Riesz kernel
/// decays; the expected value is `1 - 2s`.
pub fn pressure_tail_fit(sol: &ComplementaritySolution) -> Result<f64> {
    if sol.s >= 0.5 {
        return Err(Error::FitRejected(
            "pressure does not decay in one dimension for s >= 1/2".into(),
        ));
    }
    let grid = sol.pressure.grid();
    let l = grid.half_width();
    if !(sol.contact_radius > 0.0 && sol.contact_radius < 0.3 * l) {
        return Err(Error::FitRejected(format!(
            "contact radius {} must lie in (0, 0.3 L)",
            sol.contact_radius
        )));
    }
    let (r, p): (Vec<f64>, Vec<f64>) = grid
        .coords()
        .into_iter()
        .zip(sol.pressure.values().iter().copied())
        .filter(|&(y, _)| y >= 2.0 * sol.contact_radius)
        .unzip();
    if r.len() < 16 || r.last().unwrap() / r[0] < 2.0 {
        return Err(Error::FitRejected("tail window too short".into()));
    }
    Ok(-fit_power_law(&r, &p)?.slope)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::selfsim::{barenblatt_field, mass_to_c1, BarenblattSpec};

    #[test]
    fn nonpositive_height_is_trivial() {
        let g = GridSpec::new(4.0, 64).unwrap();
        for c in [0.0, -1.0] {
            let sol = solve_stationary_obstacle(c, 0.5, &g).unwrap();
            assert_eq!(sol.pressure.max(), 0.0);
            assert_eq!(sol.density.max(), 0.0);
        }
    }

    #[test]
    fn antiderivative_matches_kernel() {
        for s in [0.25, 0.5, 0.75] {
            let c = riesz_kernel_constant(s);
            let r = 0.7;
            let d = 1e-6;
            let num =
                (riesz_antiderivative(r + d, s, c) - riesz_antiderivative(r - d, s, c)) / (2.0 * d);
            assert!((num - riesz_kernel(r, s)).abs() < 1e-7, "s={s}");
        }
    }

    #[test]
    fn density_matches_explicit_profile() {
        let g = GridSpec::new(8.0, 512).unwrap();
        for s in [0.25, 0.5, 0.75] {
            let sol = solve_stationary_obstacle(1.0, s, &g).unwrap();
            assert!(sol.residual <= 1e-8);
            let level = mass_to_c1(sol.mass, s, 1).unwrap();
            let exact =
                barenblatt_field(&BarenblattSpec::new(level, s, 1).unwrap(), 1.0, &g).unwrap();
            let err = sol.density.linf_distance(&exact);
            assert!(err < 2e-2, "s={s} err={err}");
            assert!(sol.pressure.min() > 0.0);
        }
    }

    #[test]
    fn sor_agrees_with_active_set_on_uniform_cells() {
        let g = GridSpec::new(4.0, 128).unwrap();
        let base = ObstacleOptions {
            subcells: 1,
            ..Default::default()
        };
        let pdas = solve_stationary_obstacle_with(1.0, 0.3, &g, &base).unwrap();
        let sor = solve_stationary_obstacle_with(
            1.0,
            0.3,
            &g,
            &ObstacleOptions {
                method: LcpMethod::ProjectedSor { omega: 1.2 },
                max_iterations: 200_000,
                tolerance: 1e-10,
                ..base
            },
        )
        .unwrap();
        assert!(pdas.density.linf_distance(&sor.density) < 1e-6);
    }
}
