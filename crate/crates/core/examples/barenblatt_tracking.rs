//! Start from the self-similar profile at t = 1 and compare the numerical
//! solution with the explicit one at t = 2.

use nonlocal_lab::porousflow::{run_from, EvolutionState};
use nonlocal_lab::selfsim::{barenblatt_field, BarenblattSpec};
use nonlocal_lab::{FracOrder, GridSpec};

fn main() -> nonlocal_lab::Result<()> {
    let s = 0.5;
    let grid = GridSpec::new(8.0, 2048)?;
    let spec = BarenblattSpec::new(1.0, s, 1)?;
    let start = EvolutionState::new(
        barenblatt_field(&spec, 1.0, &grid)?,
        1.0,
        FracOrder::new(s)?,
        false,
    )?;
    let traj = run_from(start, 1.0, 200)?;
    for d in &traj.diagnostics {
        let exact = barenblatt_field(&spec, d.time, &grid)?;
        println!(
            "t={:.3} max u {:.6} (exact {:.6}) mass {:.12} (exact {:.12})",
            d.time,
            d.max_u,
            exact.max(),
            d.mass,
            exact.integral()
        );
    }
    let end = traj.last();
    let exact = barenblatt_field(&spec, end.time, &grid)?;
    println!(
        "relative L1 error at t={:.3}: {:.3e} after {} steps",
        end.time,
        end.density.l1_distance(&exact) / exact.integral(),
        traj.steps
    );
    Ok(())
}
