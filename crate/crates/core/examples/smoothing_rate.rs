//! Decay of `max u` for compactly supported data against `t^{-α}`.

use nonlocal_lab::porousflow::{mass_doubling_ratio, run, smoothing_exponent_fit};
use nonlocal_lab::selfsim::exponents;
use nonlocal_lab::{FracOrder, GridField, GridSpec};

fn main() -> nonlocal_lab::Result<()> {
    let s = 0.5;
    let grid = GridSpec::new(32.0, 4096)?;
    let ord = FracOrder::new(s)?;
    let bump = |mass: f64| -> nonlocal_lab::Result<GridField> {
        let raw = GridField::from_fn(grid, |x| (1.0 - (x / 0.5).powi(2)).max(0.0).powi(2))?;
        let scale = mass / raw.integral();
        raw.map(|v| v * scale)
    };
    let horizon = 126.5;
    let single = run(bump(1.0)?, ord, false, horizon, 50)?;
    let double = run(bump(2.0)?, ord, false, horizon, 50)?;
    let fit = smoothing_exponent_fit(&single)?;
    let e = exponents(1, s)?;
    println!("alpha_hat {:.4} vs alpha {:.4}", fit.alpha_hat, fit.alpha);
    println!(
        "max u ratio between masses 2 and 1: {:.4} vs 2^gamma = {:.4}",
        mass_doubling_ratio(&single, &double)?,
        2f64.powf(e.gamma)
    );
    Ok(())
}
