//! In rescaled variables the entropy decreases and the solution approaches
//! the stationary profile with the same mass.

use nonlocal_lab::porousflow::{run, Model2};
use nonlocal_lab::selfsim::{barenblatt_field, mass_to_c1, BarenblattSpec};
use nonlocal_lab::{FracOrder, GridField, GridSpec};

fn main() -> nonlocal_lab::Result<()> {
    let s = 0.5;
    let grid = GridSpec::new(4.0, 1024)?;
    let ord = FracOrder::new(s)?;
    let raw = GridField::from_fn(grid, |y| {
        if y.abs() > 1.5 {
            0.0
        } else {
            (-((y - 0.4) / 0.3).powi(2)).exp() + 0.6 * (-((y + 0.5) / 0.2).powi(2)).exp()
        }
    })?;
    let scale = 1.0 / raw.integral();
    let v0 = raw.map(|v| v * scale)?;
    let target = barenblatt_field(
        &BarenblattSpec::new(mass_to_c1(1.0, s, 1)?, s, 1)?,
        1.0,
        &grid,
    )?;
    let traj = run(v0, ord, true, 10.0, 100)?;
    let model = Model2::for_state(traj.first())?;
    for st in &traj.snapshots {
        println!(
            "tau={:7.3} entropy {:.8} L1 distance {:.4e}",
            st.time,
            model.entropy(st.density.values()),
            st.density.l1_distance(&target)
        );
    }
    Ok(())
}
