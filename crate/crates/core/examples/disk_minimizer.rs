//! Energy minimizers of `|x|^2/2 - ln|x|` in the plane fill the unit disk
//! with uniform density.

use nonlocal_lab::swarm::{
    circle_probes, euler_lagrange_check, radial_profile_with, relax_to_equilibrium,
    ParticleEnsemble, PotentialSpec,
};

fn main() -> nonlocal_lab::Result<()> {
    let spec = PotentialSpec::new(2.0, 0.0, 2)?;
    let cloud = ParticleEnsemble::random_ball(400, 2, 0.5, 1)?;
    let (x, rep) = relax_to_equilibrium(&cloud, &spec, 1e-6, 1000)?;
    let rmax = x.radii().into_iter().fold(0.0, f64::max);
    println!(
        "energy {:.6}, support radius {rmax:.4}, converged {}",
        rep.energy, rep.converged
    );

    let edges: Vec<f64> = (0..=6).map(|k| 0.15 * k as f64).collect();
    let profile = radial_profile_with(&x, &edges)?;
    for (k, d) in profile.density.iter().enumerate() {
        println!(
            "shell [{:.2}, {:.2}): density {d:.4} (uniform {:.4})",
            edges[k],
            edges[k + 1],
            1.0 / std::f64::consts::PI
        );
    }

    let probes = circle_probes(&x.centroid(), 1.5, 32);
    let el = euler_lagrange_check(&x, &spec, &probes)?;
    let psi_mean = el.psi_on_support.iter().sum::<f64>() / el.psi_on_support.len() as f64;
    println!(
        "psi on support {psi_mean:.6}, spread {:.2e}, probe margin {:.4}",
        el.psi_spread, el.probe_margin
    );
    Ok(())
}
