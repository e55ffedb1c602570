//! Nonlocal porous-medium flow `u_t = ∇·(u ∇p)`, `p = (-Δ)^{-s} u`, and its
//! rescaled form `v_τ = ∇·(v (∇p + β y))`.
//!
//! The scheme is a conservative finite-volume update on the grid cells:
//! face velocities come from the pressure difference across the face, the
//! flux takes the upwind density, and the domain ends carry zero flux, so the
//! discrete mass telescopes exactly. The pressure is computed spectrally on a
//! lattice twice the grid length, which removes most of the periodic
//! interaction between the density and its images.
//!
//! A contrast step for `u_t + (-Δ)^s (u^m) = 0` is included; unlike the
//! pressure-driven flow it spreads to the whole domain in a single step.

use serde::{Deserialize, Serialize};

use crate::error::{check_range, Error, Result};
use crate::fit::fit_power_law;
use crate::fracops::{riesz_multiplier, FracOrder};
use crate::grid::{GridField, GridSpec};
use crate::selfsim::exponents;
use crate::spectral::Multiplier;

/// Zero-fill factor of the pressure lattice.
pub const PRESSURE_PAD: usize = 2;
/// Courant number used by adaptive stepping.
pub const CFL: f64 = 0.4;
/// Largest Courant number accepted by [`step_model2`].
pub const CFL_LIMIT: f64 = 0.5;
/// Smallest adaptive step before the run is abandoned.
pub const DT_FLOOR: f64 = 1e-9;
/// Densities above `SUPPORT_FRACTION * max` count as support.
pub const SUPPORT_FRACTION: f64 = 1e-8;
/// Round-off allowance for negative densities.
pub const NEGATIVITY_TOL: f64 = 1e-13;

#[derive(Debug, Clone, PartialEq)]
pub struct EvolutionState {
    pub density: GridField,
    pub time: f64,
    pub ord: FracOrder,
    pub rescaled: bool,
    /// Confinement coefficient; zero unless `rescaled`.
    pub beta: f64,
    /// Mass at the start of the evolution.
    pub initial_mass: f64,
}

impl EvolutionState {
    /// Physical variables when `rescaled` is false; otherwise the rescaled
    /// flow with `β = 1/(3 - 2s)`.
    pub fn new(density: GridField, time: f64, ord: FracOrder, rescaled: bool) -> Result<Self> {
        check_nonnegative(&density)?;
        let beta = if rescaled {
            exponents(1, ord.s())?.beta
        } else {
            0.0
        };
        let initial_mass = density.integral();
        Ok(Self {
            density,
            time,
            ord,
            rescaled,
            beta,
            initial_mass,
        })
    }

    pub fn mass(&self) -> f64 {
        self.density.integral()
    }
}

fn check_nonnegative(u: &GridField) -> Result<()> {
    match u.values().iter().position(|&v| v < -NEGATIVITY_TOL) {
        Some(index) => Err(Error::NegativeDensity {
            index,
            value: u.get(index),
        }),
        None => Ok(()),
    }
}

/// Reusable operator state for one grid, order, and confinement.
#[derive(Debug, Clone)]
pub struct Model2 {
    grid: GridSpec,
    ord: FracOrder,
    beta: f64,
    pressure: Multiplier,
    faces: Vec<f64>,
}

impl Model2 {
    pub fn new(grid: GridSpec, ord: FracOrder, beta: f64) -> Result<Self> {
        check_range("s", ord.s(), ord.s() < 1.0, "(0, 1)")?;
        let h = grid.spacing();
        let faces = (0..grid.points() - 1)
            .map(|i| grid.coord(i) + 0.5 * h)
            .collect();
        Ok(Self {
            grid,
            ord,
            beta,
            pressure: riesz_multiplier(&grid, ord, PRESSURE_PAD),
            faces,
        })
    }

    pub fn for_state(st: &EvolutionState) -> Result<Self> {
        Self::new(*st.density.grid(), st.ord, st.beta)
    }

    pub fn pressure(&self, u: &[f64]) -> Vec<f64> {
        self.pressure.apply(u)
    }

    /// Velocities at the `n - 1` interior faces.
    pub fn velocity(&self, u: &[f64]) -> Vec<f64> {
        let p = self.pressure(u);
        let h = self.grid.spacing();
        self.faces
            .iter()
            .enumerate()
            .map(|(i, &y)| -(p[i + 1] - p[i]) / h - self.beta * y)
            .collect()
    }

    /// Advective bound `CFL_LIMIT h / max|v|`.
    pub fn cfl_limit(&self, velocity: &[f64]) -> f64 {
        let vmax = velocity.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if vmax > 0.0 {
            CFL_LIMIT * self.grid.spacing() / vmax
        } else {
            f64::INFINITY
        }
    }

    /// Step used by [`run`]: the advective step at Courant number [`CFL`],
    /// further capped by the inverse of the largest linearized decay rate
    /// `max(u) (4/h²) (π/h)^{-2s}` of the pressure-driven term.
    pub fn adaptive_dt(&self, u: &[f64], velocity: &[f64]) -> f64 {
        let h = self.grid.spacing();
        let advective = self.cfl_limit(velocity) * CFL / CFL_LIMIT;
        let umax = u.iter().copied().fold(0.0, f64::max);
        let rate = umax * 4.0 / (h * h) * (std::f64::consts::PI / h).powf(-self.ord.sigma());
        let diffusive = if rate > 0.0 {
            1.0 / rate
        } else {
            f64::INFINITY
        };
        advective.min(diffusive)
    }

    /// Upwind update with precomputed face velocities.
    pub fn advance(&self, u: &mut [f64], velocity: &[f64], dt: f64) {
        let r = dt / self.grid.spacing();
        let mut flux = Vec::with_capacity(velocity.len());
        for (i, &v) in velocity.iter().enumerate() {
            flux.push(if v > 0.0 { v * u[i] } else { v * u[i + 1] });
        }
        for (i, f) in flux.iter().enumerate() {
            u[i] -= r * f;
            u[i + 1] += r * f;
        }
    }

    /// `∫ (v p + β y² v)` with the same pressure as the dynamics.
    pub fn entropy(&self, v: &[f64]) -> f64 {
        let p = self.pressure(v);
        let h = self.grid.spacing();
        h * v
            .iter()
            .zip(&p)
            .enumerate()
            .map(|(i, (a, b))| {
                let y = self.grid.coord(i);
                a * b + self.beta * y * y * a
            })
            .sum::<f64>()
    }
}

/// One step of size `dt`; rejected when `dt max|v| > 0.5 h`.
pub fn step_model2(st: &EvolutionState, dt: f64) -> Result<EvolutionState> {
    check_range("dt", dt, dt > 0.0, "(0, inf)")?;
    check_nonnegative(&st.density)?;
    let model = Model2::for_state(st)?;
    let v = model.velocity(st.density.values());
    let admissible = model.cfl_limit(&v);
    if dt > admissible {
        return Err(Error::StepTooLarge { dt, admissible });
    }
    let mut u = st.density.values().to_vec();
    model.advance(&mut u, &v, dt);
    Ok(EvolutionState {
        density: GridField::new(*st.density.grid(), u)?,
        time: st.time + dt,
        ..st.clone()
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    pub time: f64,
    pub mass: f64,
    pub max_u: f64,
    pub entropy: f64,
    pub support_left: f64,
    pub support_right: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub snapshots: Vec<EvolutionState>,
    pub diagnostics: Vec<Diagnostics>,
    pub steps: usize,
}

impl Trajectory {
    pub fn times(&self) -> Vec<f64> {
        self.diagnostics.iter().map(|d| d.time).collect()
    }

    pub fn last(&self) -> &EvolutionState {
        self.snapshots.last().expect("trajectory is never empty")
    }

    pub fn first(&self) -> &EvolutionState {
        &self.snapshots[0]
    }
}

fn diagnose(model: &Model2, st: &EvolutionState) -> Diagnostics {
    let u = &st.density;
    let (support_left, support_right) = u.support(SUPPORT_FRACTION * u.max()).unwrap_or((0.0, 0.0));
    Diagnostics {
        time: st.time,
        mass: u.integral(),
        max_u: u.max(),
        entropy: model.entropy(u.values()),
        support_left,
        support_right,
    }
}

/// Evolution from time 0 over `[0, horizon]`.
pub fn run(
    u0: GridField,
    ord: FracOrder,
    rescaled: bool,
    horizon: f64,
    snap_every: usize,
) -> Result<Trajectory> {
    run_from(
        EvolutionState::new(u0, 0.0, ord, rescaled)?,
        horizon,
        snap_every,
    )
}

/// Evolution from `start` over a further `horizon`, keeping every
/// `snap_every`-th state plus the first and last.
pub fn run_from(start: EvolutionState, horizon: f64, snap_every: usize) -> Result<Trajectory> {
    run_observed(start, horizon, snap_every, |_| {})
}

/// As [`run_from`], calling `observe` on every intermediate state.
pub fn run_observed(
    start: EvolutionState,
    horizon: f64,
    snap_every: usize,
    observe: impl FnMut(&EvolutionState),
) -> Result<Trajectory> {
    check_range("T", horizon, horizon >= 0.0, "[0, inf)")?;
    drive(start, Some(horizon), usize::MAX, snap_every, observe)
}

/// Exactly `steps` adaptive steps from `start`, with no time horizon.
pub fn run_steps(start: EvolutionState, steps: usize, snap_every: usize) -> Result<Trajectory> {
    drive(start, None, steps, snap_every, |_| {})
}

fn drive(
    start: EvolutionState,
    horizon: Option<f64>,
    max_steps: usize,
    snap_every: usize,
    mut observe: impl FnMut(&EvolutionState),
) -> Result<Trajectory> {
    let snap_every = snap_every.max(1);
    let model = Model2::for_state(&start)?;
    let end = start.time + horizon.unwrap_or(f64::INFINITY);
    let mut traj = Trajectory {
        diagnostics: vec![diagnose(&model, &start)],
        snapshots: vec![start.clone()],
        steps: 0,
    };
    observe(&start);
    let mut u = start.density.values().to_vec();
    let mut t = start.time;
    let grid = *start.density.grid();
    while t < end && traj.steps < max_steps {
        let v = model.velocity(&u);
        let remaining = end - t;
        let dt = model.adaptive_dt(&u, &v);
        let dt = if dt >= remaining {
            remaining
        } else if dt < DT_FLOOR {
            return Err(Error::StepUnderflow {
                dt,
                floor: DT_FLOOR,
            });
        } else {
            dt
        };
        model.advance(&mut u, &v, dt);
        t = if dt == remaining { end } else { t + dt };
        traj.steps += 1;
        let st = EvolutionState {
            density: GridField::new(grid, u.clone())?,
            time: t,
            ..start.clone()
        };
        observe(&st);
        if traj.steps % snap_every == 0 || t >= end || traj.steps == max_steps {
            traj.diagnostics.push(diagnose(&model, &st));
            traj.snapshots.push(st);
        }
    }
    Ok(traj)
}

/// `∫ (v (-Δ)^{-s} v + β y² v)`, with the pressure lattice used by the flow.
pub fn entropy(v: &GridField, ord: FracOrder, beta: f64) -> Result<f64> {
    check_nonnegative(v)?;
    Ok(Model2::new(*v.grid(), ord, beta)?.entropy(v.values()))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EnvelopeReport {
    /// Smallest `C` with `u ≤ A e^{C t - a|x|}` on every snapshot.
    pub fitted_c: f64,
    /// `(t, C(t))` for each snapshot after the first.
    pub history: Vec<(f64, f64)>,
    /// `C` is finite over the run.
    pub satisfied: bool,
    /// The order lies in the range where a time-independent `C` is expected.
    pub constant_expected: bool,
}

/// Fits the exponential envelope `A e^{C t - a|x|}` to a trajectory.
pub fn finite_propagation_check(
    traj: &Trajectory,
    amplitude: f64,
    decay: f64,
) -> Result<EnvelopeReport> {
    check_range("A", amplitude, amplitude > 0.0, "(0, inf)")?;
    check_range("a", decay, decay > 0.0, "(0, inf)")?;
    let first = traj.first();
    let grid = *first.density.grid();
    let x = grid.coords();
    for (i, &u) in first.density.values().iter().enumerate() {
        if u >= amplitude * (-decay * x[i].abs()).exp() {
            return Err(Error::Precondition(format!(
                "initial density {u:e} at x = {} is not below the envelope",
                x[i]
            )));
        }
    }
    let t0 = first.time;
    let mut history = Vec::new();
    let mut fitted_c = 0.0f64;
    for st in &traj.snapshots[1..] {
        let dt = st.time - t0;
        let worst = st
            .density
            .values()
            .iter()
            .zip(&x)
            .filter(|(u, _)| **u > 0.0)
            .map(|(u, x)| (u / amplitude).ln() + decay * x.abs())
            .fold(f64::NEG_INFINITY, f64::max);
        let c = if worst.is_finite() {
            (worst / dt).max(0.0)
        } else {
            0.0
        };
        history.push((st.time, c));
        fitted_c = fitted_c.max(c);
    }
    Ok(EnvelopeReport {
        fitted_c,
        satisfied: fitted_c.is_finite(),
        constant_expected: first.ord.s() < 0.5,
        history,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SmoothingFit {
    pub alpha_hat: f64,
    pub alpha: f64,
    /// Mean of `t^α max u` over the last decade of the run.
    pub plateau: f64,
    /// Relative spread (max - min) / mean of that quantity.
    pub plateau_spread: f64,
    pub window: (f64, f64),
}

/// Decades of time the smoothing fit spans.
pub const SMOOTHING_DECADES: f64 = 1.5;

/// Log-log fit of `max u` against `t` over `[T / 10^1.5, T]`.
pub fn smoothing_exponent_fit(traj: &Trajectory) -> Result<SmoothingFit> {
    let end = traj.last().time;
    let start = end / 10f64.powf(SMOOTHING_DECADES);
    if !(end > 0.0) || traj.first().time > start {
        return Err(Error::FitRejected(format!(
            "trajectory must span {SMOOTHING_DECADES} decades of time"
        )));
    }
    let alpha = exponents(1, traj.first().ord.s())?.alpha;
    let pick = |lo: f64| -> (Vec<f64>, Vec<f64>) {
        traj.diagnostics
            .iter()
            .filter(|d| d.time >= lo && d.time <= end)
            .map(|d| (d.time, d.max_u))
            .unzip()
    };
    let (t, m) = pick(start);
    if t.len() < 8 {
        return Err(Error::FitRejected(
            "too few snapshots in the fit window".into(),
        ));
    }
    let fit = fit_power_law(&t, &m)?;
    let (tl, ml) = pick(end / 10.0);
    let scaled: Vec<f64> = tl.iter().zip(&ml).map(|(t, m)| t.powf(alpha) * m).collect();
    let mean = scaled.iter().sum::<f64>() / scaled.len() as f64;
    let hi = scaled.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lo = scaled.iter().copied().fold(f64::INFINITY, f64::min);
    Ok(SmoothingFit {
        alpha_hat: -fit.slope,
        alpha,
        plateau: mean,
        plateau_spread: (hi - lo) / mean,
        window: (start, end),
    })
}

/// Ratio of smoothing plateaus of two runs, the second from data of twice
/// the mass; compare with `2^γ`.
pub fn mass_doubling_ratio(single: &Trajectory, double: &Trajectory) -> Result<f64> {
    Ok(smoothing_exponent_fit(double)?.plateau / smoothing_exponent_fit(single)?.plateau)
}

/// Log-log fit of the support half-width against time over `[t_lo, t_hi]`.
pub fn support_growth_exponent(traj: &Trajectory, t_lo: f64, t_hi: f64) -> Result<f64> {
    let (t, w): (Vec<f64>, Vec<f64>) = traj
        .diagnostics
        .iter()
        .filter(|d| d.time >= t_lo && d.time <= t_hi && d.time > 0.0)
        .map(|d| (d.time, 0.5 * (d.support_right - d.support_left)))
        .unzip();
    if t.len() < 4 {
        return Err(Error::FitRejected(
            "too few snapshots in the fit window".into(),
        ));
    }
    Ok(fit_power_law(&t, &w)?.slope)
}

/// Explicit-Euler stability bound `h^{2s} / (π^{2s} max(m u^{m-1}))`.
pub fn model1_dt_limit(u: &GridField, ord: FracOrder, m: f64) -> f64 {
    let h = u.grid().spacing();
    let slope = u
        .values()
        .iter()
        .map(|&v| m * v.max(0.0).powf(m - 1.0))
        .fold(0.0, f64::max);
    if slope > 0.0 {
        (h / std::f64::consts::PI).powf(ord.sigma()) / slope
    } else {
        f64::INFINITY
    }
}

/// `u ← u - dt (-Δ)^s (u^m)`, spectral with periodic wrap-around.
pub fn step_model1(st: &EvolutionState, m: f64, dt: f64) -> Result<EvolutionState> {
    check_range("m", m, m > 1.0, "(1, inf)")?;
    check_range("dt", dt, dt > 0.0, "(0, inf)")?;
    check_nonnegative(&st.density)?;
    let admissible = model1_dt_limit(&st.density, st.ord, m);
    if dt > admissible {
        return Err(Error::StepTooLarge { dt, admissible });
    }
    let sigma = st.ord.sigma();
    let grid = *st.density.grid();
    let op = Multiplier::new(&grid, 1, |xi| xi.abs().powf(sigma));
    let um: Vec<f64> = st
        .density
        .values()
        .iter()
        .map(|v| v.max(0.0).powf(m))
        .collect();
    let lap = op.apply(&um);
    let u: Vec<f64> = st
        .density
        .values()
        .iter()
        .zip(&lap)
        .map(|(u, l)| u - dt * l)
        .collect();
    Ok(EvolutionState {
        density: GridField::new(grid, u)?,
        time: st.time + dt,
        ..st.clone()
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::selfsim::{barenblatt_field, BarenblattSpec};

    fn bump(grid: GridSpec) -> GridField {
        GridField::from_fn(grid, |x| (1.0 - x * x).max(0.0).powi(2)).unwrap()
    }

    fn half() -> FracOrder {
        FracOrder::new(0.5).unwrap()
    }

    #[test]
    fn zero_stays_zero() {
        let g = GridSpec::new(4.0, 128).unwrap();
        let st = EvolutionState::new(GridField::zeros(g), 0.0, half(), false).unwrap();
        let next = step_model2(&st, 0.1).unwrap();
        assert_eq!(next.density.max(), 0.0);
        let traj = run(GridField::zeros(g), half(), true, 1.0, 1).unwrap();
        assert_eq!(traj.last().density.max(), 0.0);
        assert_eq!(entropy(&GridField::zeros(g), half(), 0.5).unwrap(), 0.0);
    }

    #[test]
    fn rejects_large_steps_and_negative_data() {
        let g = GridSpec::new(4.0, 256).unwrap();
        let st = EvolutionState::new(bump(g), 0.0, half(), false).unwrap();
        assert!(matches!(
            step_model2(&st, 10.0),
            Err(Error::StepTooLarge { .. })
        ));
        let mut v = bump(g).into_values();
        v[3] = -1e-6;
        let neg = GridField::new(g, v).unwrap();
        assert!(matches!(
            EvolutionState::new(neg, 0.0, half(), false),
            Err(Error::NegativeDensity { index: 3, .. })
        ));
    }

    #[test]
    fn zero_horizon_returns_initial_state() {
        let g = GridSpec::new(4.0, 128).unwrap();
        let traj = run(bump(g), half(), false, 0.0, 1).unwrap();
        assert_eq!(traj.snapshots.len(), 1);
        assert_eq!(traj.last().density, bump(g));
    }

    #[test]
    fn conserves_mass_and_sign() {
        let g = GridSpec::new(4.0, 256).unwrap();
        let traj = run(bump(g), FracOrder::new(0.3).unwrap(), false, 0.5, 10).unwrap();
        let m0 = traj.first().mass();
        for st in &traj.snapshots {
            assert!(((st.mass() - m0) / m0).abs() < 1e-13);
            assert!(st.density.min() >= 0.0);
        }
    }

    #[test]
    fn tracks_explicit_solution_on_coarse_grid() {
        let g = GridSpec::new(8.0, 512).unwrap();
        let spec = BarenblattSpec::new(1.0, 0.5, 1).unwrap();
        let u1 = barenblatt_field(&spec, 1.0, &g).unwrap();
        let st = EvolutionState::new(u1, 1.0, half(), false).unwrap();
        let traj = run_from(st, 1.0, 1000).unwrap();
        let exact = barenblatt_field(&spec, 2.0, &g).unwrap();
        assert!(traj.last().density.l1_distance(&exact) < 0.05);
    }

    #[test]
    fn entropy_translation() {
        let g = GridSpec::new(8.0, 512).unwrap();
        let ord = half();
        let a = GridField::from_fn(g, |x| (-(x * x)).exp()).unwrap();
        let b = GridField::from_fn(g, |x| (-(x - 1.0) * (x - 1.0)).exp()).unwrap();
        let ea = entropy(&a, ord, 0.0).unwrap();
        let eb = entropy(&b, ord, 0.0).unwrap();
        assert!((ea - eb).abs() < 1e-9 * ea.abs());
    }

    #[test]
    fn model1_spreads_everywhere_in_one_step() {
        let g = GridSpec::new(8.0, 512).unwrap();
        let st = EvolutionState::new(bump(g), 0.0, half(), false).unwrap();
        let dt = 0.5 * model1_dt_limit(&st.density, st.ord, 2.0);
        let next = step_model1(&st, 2.0, dt).unwrap();
        assert!(next.density.min() > 0.0);
        assert!(((next.mass() - st.mass()) / st.mass()).abs() < 1e-10);
        assert!(step_model1(&st, 2.0, 4.0 * dt).is_err());
    }

    #[test]
    fn envelope_of_zero_solution() {
        let g = GridSpec::new(4.0, 128).unwrap();
        let traj = run(
            GridField::zeros(g),
            FracOrder::new(0.25).unwrap(),
            false,
            1.0,
            1,
        )
        .unwrap();
        let rep = finite_propagation_check(&traj, 1.0, 1.0).unwrap();
        assert_eq!(rep.fitted_c, 0.0);
        assert!(rep.satisfied && rep.constant_expected);
        let above = run(bump(g), FracOrder::new(0.25).unwrap(), false, 0.0, 1).unwrap();
        assert!(finite_propagation_check(&above, 0.5, 1.0).is_err());
    }
}
