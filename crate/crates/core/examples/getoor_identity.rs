//! The fractional Laplacian of `(1 - |y|^2)_+^{σ/2}` is constant on the unit ball.

use nonlocal_lab::fracops::{
    frac_laplacian_spectral, getoor_constant, getoor_constant_closed_form,
};
use nonlocal_lab::{FracOrder, GridField, GridSpec};

fn main() -> nonlocal_lab::Result<()> {
    let grid = GridSpec::new(8.0, 4096)?;
    for sigma in [0.5, 1.0, 1.5] {
        let f = GridField::from_fn(grid, |y| (1.0 - y * y).max(0.0).powf(0.5 * sigma))?;
        let lap = frac_laplacian_spectral(&f, FracOrder::from_sigma(sigma)?);
        let inside: Vec<f64> = (0..grid.points())
            .filter(|&i| grid.coord(i).abs() <= 0.8)
            .map(|i| lap.get(i))
            .collect();
        let mean = inside.iter().sum::<f64>() / inside.len() as f64;
        let spread = inside.iter().map(|v| (v - mean).abs()).fold(0.0, f64::max) / mean;
        println!(
            "sigma={sigma}: K={:.10} (closed form {:.10}), plateau mean {mean:.6}, relative spread {spread:.2e}",
            getoor_constant(sigma, 1)?,
            getoor_constant_closed_form(sigma, 1)?,
        );
    }
    Ok(())
}
