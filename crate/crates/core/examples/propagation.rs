//! Model II keeps compact support while Model I fills the line instantly.

use nonlocal_lab::porousflow::{
    finite_propagation_check, model1_dt_limit, run, step_model1, EvolutionState,
};
use nonlocal_lab::{FracOrder, GridField, GridSpec};

fn main() -> nonlocal_lab::Result<()> {
    let grid = GridSpec::new(8.0, 1024)?;
    let ord = FracOrder::new(0.25)?;
    let bump = GridField::from_fn(grid, |x| 0.5 * (1.0 - x * x).max(0.0).powi(2))?;

    let traj = run(bump.clone(), ord, false, 1.0, 20)?;
    let rep = finite_propagation_check(&traj, 1.0, 1.0)?;
    // the explicit upwind front leaves round-off residue below 1e-12 ahead of it
    for threshold in [1e-12, 1e-6] {
        let (lo, hi) = traj
            .last()
            .density
            .support(threshold)
            .expect("nonzero density");
        println!("model II: {{u > {threshold:e}}} = [{lo:.3}, {hi:.3}] at t=1");
    }
    println!("model II: envelope constant {:.3e}", rep.fitted_c);

    let mut st = EvolutionState::new(bump, 0.0, FracOrder::new(0.5)?, false)?;
    let dt = 0.5 * model1_dt_limit(&st.density, st.ord, 2.0);
    st = step_model1(&st, 2.0, dt)?;
    println!(
        "model I: after one step of {dt:.2e}, min density {:.3e}",
        st.density.min()
    );
    Ok(())
}
