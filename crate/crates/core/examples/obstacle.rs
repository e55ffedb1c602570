//! Stationary obstacle problem whose solution is the self-similar profile.

use nonlocal_lab::selfsim::{pressure_tail_fit, solve_stationary_obstacle};
use nonlocal_lab::GridSpec;

fn main() -> nonlocal_lab::Result<()> {
    let grid = GridSpec::new(8.0, 2048)?;
    for s in [0.25, 0.5, 0.75] {
        let sol = solve_stationary_obstacle(1.0, s, &grid)?;
        print!(
            "s={s}: contact radius {:.4}, mass {:.6}, residual {:.2e}, min pressure {:.4}",
            sol.contact_radius,
            sol.mass,
            sol.residual,
            sol.pressure.min()
        );
        if s < 0.5 {
            print!(
                ", pressure tail {:.4} (expected {:.4})",
                pressure_tail_fit(&sol)?,
                1.0 - 2.0 * s
            );
        }
        println!();
    }
    Ok(())
}
