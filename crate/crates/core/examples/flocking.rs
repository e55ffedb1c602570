//! A relaxed aggregate given a common velocity travels as a flock with
//! speed `sqrt(α/β)`.

use nonlocal_lab::swarm::{
    random_unit_vector, relax_to_equilibrium, run_second_order, ParticleEnsemble, PotentialSpec,
};

fn main() -> nonlocal_lab::Result<()> {
    let spec = PotentialSpec::new(2.0, 0.0, 2)?;
    let cloud = ParticleEnsemble::random_ball(100, 2, 0.5, 42)?;
    let (shape, rep) = relax_to_equilibrium(&cloud, &spec, 1e-9, 100_000)?;
    println!(
        "relaxed in {} steps, residual {:.2e}",
        rep.iterations, rep.force_residual
    );
    let heading = random_unit_vector(2, 42);
    let v: Vec<f64> = heading.iter().map(|h| 0.5 * h).collect();
    let mut x = shape.with_velocity(&v)?;
    for block in 1..=10 {
        let (next, rep) = run_second_order(&x, 1.0, 1.0, &spec, 0.01, 20.0)?;
        x = next;
        println!(
            "t={:5.1} speed deviation {:.3e} force residual {:.3e} centroid {:?}",
            20.0 * block as f64,
            rep.flock_speed_dev.unwrap_or(f64::NAN),
            rep.force_residual,
            x.centroid()
        );
    }
    Ok(())
}
