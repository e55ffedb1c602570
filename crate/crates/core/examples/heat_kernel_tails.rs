//! Fractional heat kernels: the explicit Cauchy kernel at s = 1/2 and
//! power-law tails `|x|^{-(1+2s)}` for other orders.

use std::f64::consts::PI;

use nonlocal_lab::linheat::{
    heat_kernel, tail_exponent, tail_fit_grid, tail_fit_time, KernelProfile,
};
use nonlocal_lab::{FracOrder, GridSpec};

fn main() -> nonlocal_lab::Result<()> {
    let grid = GridSpec::new(8.0, 4096)?;
    let half = FracOrder::new(0.5)?;
    let k = heat_kernel(half, 1.0, &grid)?;
    let worst = (0..grid.points())
        .map(|i| {
            let x = grid.coord(i);
            (k.get(i) - 1.0 / (PI * (1.0 + x * x))).abs()
        })
        .fold(0.0, f64::max);
    println!(
        "s=0.5, t=1: max |K - 1/(pi(1+x^2))| = {worst:.3e}, mass on grid {:.6}",
        k.integral()
    );

    for s in [0.25, 0.75] {
        let ord = FracOrder::new(s)?;
        let g = tail_fit_grid(ord);
        let t = tail_fit_time(ord, &g);
        let profile = KernelProfile::from_kernel(ord, &heat_kernel(ord, t, &g)?)?;
        println!(
            "s={s}: fitted tail exponent {:.4}, expected {:.4}",
            tail_exponent(&profile)?,
            1.0 + 2.0 * s
        );
    }
    Ok(())
}
