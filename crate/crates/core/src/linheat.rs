//! Linear fractional heat equation `u_t + (-Δ)^s u = 0`.
//!
//! The kernel `K_s(x, t)` has Fourier transform `exp(-|ξ|^{2s} t)`, is
//! self-similar, `K_s(x, t) = t^{-1/2s} F(|x| t^{-1/2s})`, and for `s < 1`
//! decays like `|x|^{-(1+2s)}`.

use crate::error::{check_range, Error, Result};
use crate::fit::fit_power_law;
use crate::fracops::FracOrder;
use crate::grid::{GridField, GridSpec};
use crate::spectral::{inverse_symbol, Multiplier};

/// Length of the zero-filled lattice on which [`heat_kernel`] is evaluated.
pub const KERNEL_LATTICE: usize = 1 << 22;

/// Fraction of the largest radius bounding the tail-fit window.
pub const TAIL_WINDOW: (f64, f64) = (0.1, 0.5);

/// Whole-line heat kernel sampled on `grid`.
///
/// The symbol is inverted on a lattice of [`KERNEL_LATTICE`] points, so the
/// periodic images sit far outside the grid. The mass carried on the grid is
/// one minus the kernel mass beyond `|x| = L`.
pub fn heat_kernel(ord: FracOrder, t: f64, grid: &GridSpec) -> Result<GridField> {
    let pad = (KERNEL_LATTICE / grid.points()).max(1);
    heat_kernel_padded(ord, t, grid, pad)
}

/// Heat kernel on a lattice `pad` times longer than the grid; `pad = 1`
/// gives the periodic kernel, whose mass on the grid is exactly one.
pub fn heat_kernel_padded(
    ord: FracOrder,
    t: f64,
    grid: &GridSpec,
    pad: usize,
) -> Result<GridField> {
    check_range("t", t, t > 0.0, "(0, inf)")?;
    let resolved = grid.spacing().powf(ord.sigma());
    if t < resolved {
        return Err(Error::Precondition(format!(
            "t = {t:e} is below the resolved time h^(2s) = {resolved:e}"
        )));
    }
    let sigma = ord.sigma();
    let values = inverse_symbol(grid, pad, |xi| (-xi.abs().powf(sigma) * t).exp());
    GridField::new(*grid, values)
}

/// Heat semigroup `S_t u0`, applied spectrally with periodic wrap-around.
pub fn solve_linear_fheat(u0: &GridField, ord: FracOrder, t: f64) -> Result<GridField> {
    check_range("t", t, t >= 0.0, "[0, inf)")?;
    if t == 0.0 {
        return Ok(u0.clone());
    }
    let sigma = ord.sigma();
    let op = Multiplier::new(u0.grid(), 1, |xi| (-xi.abs().powf(sigma) * t).exp());
    GridField::new(*u0.grid(), op.apply(u0.values()))
}

/// Radial samples `F(r)` of a kernel at a fixed time.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelProfile {
    ord: FracOrder,
    radii: Vec<f64>,
    values: Vec<f64>,
}

impl KernelProfile {
    pub fn new(ord: FracOrder, radii: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if radii.len() != values.len() {
            return Err(Error::LengthMismatch {
                expected: radii.len(),
                got: values.len(),
            });
        }
        if radii.windows(2).any(|w| !(w[1] > w[0])) || radii.first().is_some_and(|&r| r <= 0.0) {
            return Err(Error::Precondition(
                "radii must be positive and increasing".into(),
            ));
        }
        if let Some(index) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { index });
        }
        Ok(Self { ord, radii, values })
    }

    /// Right half of a kernel centred on the origin node.
    pub fn from_kernel(ord: FracOrder, kernel: &GridField) -> Result<Self> {
        let grid = kernel.grid();
        let o = grid.origin_index();
        let radii = (o + 1..grid.points()).map(|j| grid.coord(j)).collect();
        let values = kernel.values()[o + 1..].to_vec();
        Self::new(ord, radii, values)
    }

    pub fn ord(&self) -> FracOrder {
        self.ord
    }

    pub fn radii(&self) -> &[f64] {
        &self.radii
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn is_strictly_decreasing(&self) -> bool {
        self.values.windows(2).all(|w| w[1] < w[0]) && self.values.iter().all(|&v| v > 0.0)
    }
}

/// Decay exponent `p` in `F(r) ~ r^{-p}`, fitted on log-log axes over
/// `[0.1 R, 0.5 R]` with `R` the largest sampled radius.
///
/// The fit is rejected when the window holds values at or below `1e-14`
/// times the peak, when the tail is not strictly decreasing, or when the
/// local slopes on the two halves of the window differ by more than 5%,
/// which separates power laws from e.g. Gaussian decay.
pub fn tail_exponent(k: &KernelProfile) -> Result<f64> {
    let rmax = *k
        .radii
        .last()
        .ok_or_else(|| Error::FitRejected("empty profile".into()))?;
    let rmin = k.radii[0];
    if rmax / rmin < 100.0 {
        return Err(Error::FitRejected(format!(
            "radii span {:.2} decades, need at least two",
            (rmax / rmin).log10()
        )));
    }
    let lo = TAIL_WINDOW.0 * rmax;
    let hi = TAIL_WINDOW.1 * rmax;
    let idx: Vec<usize> = (0..k.radii.len())
        .filter(|&i| k.radii[i] >= lo && k.radii[i] <= hi)
        .collect();
    if idx.len() < 8 {
        return Err(Error::FitRejected("too few samples in tail window".into()));
    }
    let peak = k.values.iter().copied().fold(0.0, f64::max);
    let floor = 1e-14 * peak;
    if idx.iter().any(|&i| k.values[i] <= floor) {
        return Err(Error::FitRejected(
            "insufficient dynamic range: tail below numerical floor".into(),
        ));
    }
    if idx.windows(2).any(|w| k.values[w[1]] >= k.values[w[0]]) {
        return Err(Error::FitRejected(
            "tail is not monotone (periodization contamination)".into(),
        ));
    }
    let r: Vec<f64> = idx.iter().map(|&i| k.radii[i]).collect();
    let v: Vec<f64> = idx.iter().map(|&i| k.values[i]).collect();
    let whole = fit_power_law(&r, &v)?;
    let mid = (lo * hi).sqrt();
    let split = r.partition_point(|&x| x < mid);
    let inner = fit_power_law(&r[..split], &v[..split])?;
    let outer = fit_power_law(&r[split..], &v[split..])?;
    let drift = (inner.slope - outer.slope).abs() / whole.slope.abs();
    if drift > 0.05 {
        return Err(Error::FitRejected(format!(
            "log-log slope drifts by {:.1}% across the window; not a power law",
            100.0 * drift
        )));
    }
    Ok(-whole.slope)
}

/// Time used for tail fits: late enough that the symbol has decayed by
/// `e^{-36}` at the Nyquist frequency (otherwise the truncated spectrum rings
/// at grid scale), and otherwise as early as possible so the fit window sits
/// in the far field.
pub fn tail_fit_time(ord: FracOrder, grid: &GridSpec) -> f64 {
    let h = grid.spacing();
    let nyquist = std::f64::consts::PI / h;
    h.powf(ord.sigma())
        .max(0.01)
        .max(36.0 / nyquist.powf(ord.sigma()))
}

/// Grid on which the tail of the order-`s` kernel is resolved over
/// `[-8, 8]`: strongly fat tails need a finer mesh because of the Nyquist
/// constraint in [`tail_fit_time`].
pub fn tail_fit_grid(ord: FracOrder) -> GridSpec {
    let points = if ord.s() < 0.4 { 1 << 19 } else { 1 << 12 };
    GridSpec::new(8.0, points).expect("static grid is valid")
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn grid() -> GridSpec {
        GridSpec::new(8.0, 1024).unwrap()
    }

    #[test]
    fn gaussian_kernel_at_s_one() {
        let g = grid();
        let k = heat_kernel(FracOrder::new(1.0).unwrap(), 1.0, &g).unwrap();
        for (x, v) in g.coords().iter().zip(k.values()) {
            let exact = (-x * x / 4.0).exp() / (4.0 * PI).sqrt();
            assert!((v - exact).abs() < 1e-10);
        }
    }

    #[test]
    fn rejects_unresolved_or_nonpositive_time() {
        let g = grid();
        let ord = FracOrder::new(0.5).unwrap();
        assert!(heat_kernel(ord, 0.0, &g).is_err());
        assert!(heat_kernel(ord, 1e-4, &g).is_err());
        assert!(solve_linear_fheat(&GridField::zeros(g), ord, -1.0).is_err());
    }

    #[test]
    fn periodic_kernel_has_unit_mass() {
        let g = grid();
        for s in [0.25, 0.5, 0.75, 1.0] {
            let k = heat_kernel_padded(FracOrder::new(s).unwrap(), 0.5, &g, 1).unwrap();
            assert!((k.integral() - 1.0).abs() < 1e-12, "s={s}");
        }
    }

    #[test]
    fn semigroup_law() {
        let g = grid();
        let ord = FracOrder::new(0.4).unwrap();
        let u0 = GridField::from_fn(g, |x| (1.0 - x * x).max(0.0)).unwrap();
        let a = solve_linear_fheat(&solve_linear_fheat(&u0, ord, 0.3).unwrap(), ord, 0.2).unwrap();
        let b = solve_linear_fheat(&u0, ord, 0.5).unwrap();
        assert!(a.linf_distance(&b) < 1e-12);
        assert_eq!(solve_linear_fheat(&u0, ord, 0.0).unwrap(), u0);
    }

    #[test]
    fn infinite_speed_of_propagation() {
        let g = grid();
        let u0 = GridField::from_fn(g, |x| (1.0 - x * x).max(0.0)).unwrap();
        let u = solve_linear_fheat(&u0, FracOrder::new(0.5).unwrap(), 0.01).unwrap();
        assert!(u.min() > 0.0);
        assert!((u.integral() - u0.integral()).abs() < 1e-12);
    }

    #[test]
    fn tail_exponents() {
        for (s, expect) in [(0.25, 1.5), (0.5, 2.0), (0.75, 2.5)] {
            let ord = FracOrder::new(s).unwrap();
            let g = tail_fit_grid(ord);
            let k = heat_kernel(ord, tail_fit_time(ord, &g), &g).unwrap();
            let prof = KernelProfile::from_kernel(ord, &k).unwrap();
            let p = tail_exponent(&prof).unwrap();
            assert!((p - expect).abs() < 0.05 * expect, "s={s} p={p}");
        }
        let ord = FracOrder::new(1.0).unwrap();
        let g = tail_fit_grid(ord);
        let k = heat_kernel(ord, tail_fit_time(ord, &g), &g).unwrap();
        let prof = KernelProfile::from_kernel(ord, &k).unwrap();
        assert!(matches!(tail_exponent(&prof), Err(Error::FitRejected(_))));
    }
}
