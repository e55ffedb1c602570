use serde_json::json;

use super::{Cell, Outcome, Params, Relation, Scenario, Table, Verdict};
use crate::error::{Error, Result};
use crate::fit::fit_line;
use crate::fracops::{
    frac_laplacian_quadrature_with, frac_laplacian_spectral, getoor_constant_closed_form,
    getoor_quadrature, Extension, FracOrder,
};
use crate::grid::{GridField, GridSpec};
use crate::linheat::{
    heat_kernel, heat_kernel_padded, tail_exponent, tail_fit_grid, tail_fit_time, KernelProfile,
};
use crate::porousflow::{
    finite_propagation_check, mass_doubling_ratio, model1_dt_limit, run, run_from, run_observed,
    run_steps, smoothing_exponent_fit, step_model1, step_model2, support_growth_exponent,
    EvolutionState, Model2, Trajectory,
};
use crate::selfsim::{
    barenblatt_field, exponents, mass_to_c1, pressure_tail_fit, solve_stationary_obstacle,
    BarenblattSpec,
};
use crate::swarm::{
    circle_probes, euler_lagrange_check, pairwise_forces, radial_profile_with, random_unit_vector,
    relax_to_equilibrium, step_second_order, unit_ball_volume, EquilibriumReport, ParticleEnsemble,
    PotentialSpec,
};

const SWARM_KEYS: [(&str, &str); 8] = [
    ("M", "1000"),
    ("N", "2"),
    ("a", "2"),
    ("b", "0"),
    ("init_radius", "1"),
    ("seed", "42"),
    ("tol", "1e-6"),
    ("budget", "500"),
];

pub(super) fn defaults(sc: Scenario) -> &'static [(&'static str, &'static str)] {
    match sc {
        Scenario::Getoor => &[("sigma", "1"), ("L", "8"), ("n", "4096"), ("inner", "0.8")],
        Scenario::HeatKernel => &[("s", "0.5"), ("t", "1"), ("L", "8"), ("n", "4096")],
        Scenario::TailFit => &[("s", "0.25")],
        Scenario::Evolve => &[
            ("s", "0.5"),
            ("L", "8"),
            ("n", "1024"),
            ("steps", "1000"),
            ("snap_every", "10"),
            ("width", "1"),
            ("mass", "1"),
        ],
        Scenario::Rescaled => &[
            ("s", "0.5"),
            ("L", "4"),
            ("n", "1024"),
            ("tau", "10"),
            ("mass", "1"),
            ("snap_every", "50"),
        ],
        Scenario::BarenblattTrack => &[
            ("s", "0.5"),
            ("L", "8"),
            ("n", "2048"),
            ("level", "1"),
            ("t0", "1"),
            ("t1", "2"),
            ("snap_every", "16"),
        ],
        Scenario::Propagation => &[
            ("s", "0.25"),
            ("L", "8"),
            ("n", "2048"),
            ("T", "1"),
            ("A", "1"),
            ("a", "1"),
            ("amplitude", "0.5"),
            ("snap_every", "8"),
        ],
        Scenario::SmoothingFit => &[
            ("s", "0.5"),
            ("T", "126.5"),
            ("L", "auto"),
            ("n", "auto"),
            ("width", "0.5"),
            ("snap_every", "20"),
        ],
        Scenario::Model1Contrast => &[
            ("s", "0.5"),
            ("m", "2"),
            ("L", "8"),
            ("n", "2048"),
            ("amplitude", "0.5"),
            ("dt_fraction", "0.5"),
        ],
        Scenario::Obstacle => &[("s", "0.5"), ("C", "1"), ("L", "8"), ("n", "2048")],
        Scenario::SwarmFlock => &[
            ("M", "100"),
            ("N", "2"),
            ("a", "2"),
            ("b", "0"),
            ("alpha", "1"),
            ("beta", "1"),
            ("T", "200"),
            ("dt", "0.01"),
            ("speed", "0.5"),
            ("init_radius", "0.5"),
            ("seed", "42"),
            ("tol", "1e-9"),
            ("budget", "100000"),
            ("record_every", "100"),
        ],
        Scenario::DiskMinimizer => &[
            SWARM_KEYS[0],
            SWARM_KEYS[1],
            SWARM_KEYS[2],
            SWARM_KEYS[3],
            SWARM_KEYS[4],
            SWARM_KEYS[5],
            SWARM_KEYS[6],
            SWARM_KEYS[7],
            ("bins", "6"),
            ("inner", "0.9"),
            ("target_radius", "1"),
        ],
        Scenario::ElCheck => &[
            SWARM_KEYS[0],
            SWARM_KEYS[1],
            SWARM_KEYS[2],
            SWARM_KEYS[3],
            SWARM_KEYS[4],
            SWARM_KEYS[5],
            SWARM_KEYS[6],
            SWARM_KEYS[7],
            ("probes", "64"),
            ("probe_radius", "1.5"),
            ("spread_tol", "0.01"),
            ("probe_tol", "1e-3"),
        ],
        Scenario::Sweep => &[
            ("scenario", "smoothing-fit"),
            ("axis", "s"),
            ("values", "0.25,0.5,0.75"),
        ],
    }
}

pub(super) fn default_of(sc: Scenario, key: &str) -> &'static str {
    defaults(sc)
        .iter()
        .find(|(k, _)| *k == key)
        .map(|(_, v)| *v)
        .expect("known default")
}

pub(super) fn dispatch(sc: Scenario, p: &Params) -> Result<Outcome> {
    let mut out = Outcome {
        scenario: sc,
        params: p.clone(),
        tables: Vec::new(),
        reports: Vec::new(),
        verdicts: Vec::new(),
        metrics: Vec::new(),
        wall_time: 0.0,
    };
    match sc {
        Scenario::Getoor => getoor(p, &mut out)?,
        Scenario::HeatKernel => heat(p, &mut out)?,
        Scenario::TailFit => tail(p, &mut out)?,
        Scenario::Evolve => evolve(p, &mut out)?,
        Scenario::Rescaled => rescaled(p, &mut out)?,
        Scenario::BarenblattTrack => track(p, &mut out)?,
        Scenario::Propagation => propagation(p, &mut out)?,
        Scenario::SmoothingFit => smoothing(p, &mut out)?,
        Scenario::Model1Contrast => model1(p, &mut out)?,
        Scenario::Obstacle => obstacle(p, &mut out)?,
        Scenario::SwarmFlock => flock(p, &mut out)?,
        Scenario::DiskMinimizer => disk(p, &mut out)?,
        Scenario::ElCheck => el_check(p, &mut out)?,
        Scenario::Sweep => unreachable!("sweeps are dispatched separately"),
    }
    for v in &out.verdicts {
        out.metrics.push((v.name.clone(), v.value));
    }
    Ok(out)
}

fn grid(p: &Params) -> Result<GridSpec> {
    GridSpec::new(p.f64("L")?, p.usize("n")?)
}

fn order(p: &Params) -> Result<FracOrder> {
    FracOrder::new(p.f64("s")?)
}

fn trajectory_table(traj: &Trajectory) -> Table {
    let mut t = Table::new(
        "trajectory",
        &[
            "time",
            "mass",
            "max_u",
            "entropy",
            "support_left",
            "support_right",
        ],
    );
    for d in &traj.diagnostics {
        t.push_reals(&[
            d.time,
            d.mass,
            d.max_u,
            d.entropy,
            d.support_left,
            d.support_right,
        ]);
    }
    t
}

fn snapshot_table(name: &str, u: &GridField) -> Table {
    let mut t = Table::new(name, &["x", "u"]);
    for (x, v) in u.grid().coords().iter().zip(u.values()) {
        t.push_reals(&[*x, *v]);
    }
    t
}

/// `f` rescaled to carry `mass`.
fn with_mass(f: GridField, mass: f64) -> Result<GridField> {
    let total = f.integral();
    if !(total > 0.0) {
        return Err(Error::Precondition(
            "initial profile has no mass on the grid".into(),
        ));
    }
    f.map(|v| v * mass / total)
}

fn getoor(p: &Params, out: &mut Outcome) -> Result<()> {
    let sigma = p.f64("sigma")?;
    let ord = FracOrder::from_sigma(sigma)?;
    let g = grid(p)?;
    let inner = p.f64("inner")?;
    let f = GridField::from_fn(g, |y| (1.0 - y * y).max(0.0).powf(0.5 * sigma))?;
    let lap = frac_laplacian_spectral(&f, ord);
    let mut profile = Table::new("profile", &["y", "f", "laplacian"]);
    let mut inside = Vec::new();
    let mut idx = Vec::new();
    for (i, y) in g.coords().into_iter().enumerate() {
        if y.abs() <= inner {
            profile.push_reals(&[y, f.get(i), lap.get(i)]);
            inside.push(lap.get(i));
            idx.push(i);
        }
    }
    let mean = inside.iter().sum::<f64>() / inside.len() as f64;
    let var = inside.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / inside.len() as f64;
    let flatness = var.sqrt() / mean.abs();

    let mut quad = Table::new(
        "quadrature",
        &["y", "spectral", "quadrature", "relative_difference"],
    );
    let mut pointwise = 0.0f64;
    let mut quad_sum = 0.0;
    for &i in &idx {
        let q = frac_laplacian_quadrature_with(&f, ord, i, Extension::Periodic)?;
        let rel = ((q - lap.get(i)) / q).abs();
        pointwise = pointwise.max(rel);
        quad_sum += q;
        quad.push_reals(&[g.coord(i), lap.get(i), q, rel]);
    }
    let quad_mean = quad_sum / idx.len() as f64;
    let closed = getoor_constant_closed_form(sigma, 1)?;
    let extrapolated = getoor_quadrature(sigma)?;
    out.tables.extend([profile, quad]);
    out.verdicts
        .push(Verdict::at_most("flatness", flatness, 1e-2));
    out.verdicts.push(Verdict::relative(
        "quadrature_agreement",
        mean,
        quad_mean,
        1e-3,
    ));
    out.verdicts.push(Verdict::relative(
        "quadrature_vs_closed_form",
        extrapolated,
        closed,
        1e-7,
    ));
    out.metrics.push(("mean".into(), mean));
    out.metrics.push(("quadrature_mean".into(), quad_mean));
    out.metrics.push(("pointwise_difference".into(), pointwise));
    out.metrics.push(("closed_form".into(), closed));
    Ok(())
}

fn heat(p: &Params, out: &mut Outcome) -> Result<()> {
    let ord = order(p)?;
    let t = p.f64("t")?;
    let g = grid(p)?;
    let k = heat_kernel(ord, t, &g)?;
    let mut table = Table::new("kernel", &["x", "kernel"]);
    for (x, v) in g.coords().iter().zip(k.values()) {
        table.push_reals(&[*x, *v]);
    }
    out.tables.push(table);
    let periodic = heat_kernel_padded(ord, t, &g, 1)?;
    out.verdicts.push(Verdict::at_most(
        "periodic_mass_defect",
        (periodic.integral() - 1.0).abs(),
        1e-10,
    ));
    if ord.s() == 0.5 {
        // K = C / (a² + x²) means 1/K is linear in x²
        let half = 0.5 * g.half_width();
        let (x2, inv): (Vec<f64>, Vec<f64>) = g
            .coords()
            .iter()
            .zip(k.values())
            .filter(|(x, _)| x.abs() <= half)
            .map(|(x, v)| (x * x, 1.0 / v))
            .unzip();
        let fit = fit_line(&x2, &inv)?;
        let c = 1.0 / fit.slope;
        let a2 = fit.intercept * c;
        let residual = x2
            .iter()
            .zip(&inv)
            .map(|(x2, iv)| ((c / (a2 + x2)) * iv - 1.0).abs())
            .fold(0.0, f64::max);
        out.verdicts
            .push(Verdict::at_most("explicit_fit_residual", residual, 1e-6));
        out.metrics.push(("fitted_a".into(), a2.sqrt()));
        out.metrics.push(("fitted_c".into(), c));
    }
    out.metrics.push(("grid_mass".into(), k.integral()));
    Ok(())
}

fn tail(p: &Params, out: &mut Outcome) -> Result<()> {
    let ord = order(p)?;
    let g = tail_fit_grid(ord);
    let t = tail_fit_time(ord, &g);
    let k = heat_kernel(ord, t, &g)?;
    let prof = KernelProfile::from_kernel(ord, &k)?;
    let exponent = tail_exponent(&prof)?;
    let mut table = Table::new("profile", &["r", "kernel"]);
    for (r, v) in prof.radii().iter().zip(prof.values()) {
        table.push_reals(&[*r, *v]);
    }
    out.tables.push(table);
    let expected = 1.0 + ord.sigma();
    out.verdicts
        .push(Verdict::relative("tail_exponent", exponent, expected, 0.05));
    out.metrics.push(("exponent".into(), exponent));
    out.metrics.push(("expected".into(), expected));
    out.metrics.push(("time".into(), t));
    Ok(())
}

fn evolve(p: &Params, out: &mut Outcome) -> Result<()> {
    let ord = order(p)?;
    let g = grid(p)?;
    let w = p.f64("width")?;
    let u0 = with_mass(
        GridField::from_fn(g, |x| (1.0 - (x / w).powi(2)).max(0.0))?,
        p.f64("mass")?,
    )?;
    let m0 = u0.integral();
    let traj = run_steps(
        EvolutionState::new(u0, 0.0, ord, false)?,
        p.usize("steps")?,
        p.usize("snap_every")?,
    )?;
    let drift = traj
        .snapshots
        .iter()
        .map(|s| ((s.density.integral() - m0) / m0).abs())
        .fold(0.0, f64::max);
    let min_u = traj
        .snapshots
        .iter()
        .map(|s| s.density.min())
        .fold(f64::INFINITY, f64::min);
    out.tables.push(trajectory_table(&traj));
    out.tables
        .push(snapshot_table("snapshot", &traj.last().density));
    out.verdicts
        .push(Verdict::at_most("mass_drift", drift, 1e-12));
    out.verdicts
        .push(Verdict::at_least("min_density", min_u, -1e-13));
    out.metrics.push(("steps".into(), traj.steps as f64));
    out.metrics.push(("final_time".into(), traj.last().time));
    Ok(())
}

fn rescaled(p: &Params, out: &mut Outcome) -> Result<()> {
    let ord = order(p)?;
    let g = grid(p)?;
    let bump = |y: f64| {
        if y.abs() > 1.5 {
            0.0
        } else {
            (-((y - 0.4) / 0.3).powi(2)).exp() + 0.6 * (-((y + 0.5) / 0.2).powi(2)).exp()
        }
    };
    let mass = p.f64("mass")?;
    let v0 = with_mass(GridField::from_fn(g, bump)?, mass)?;
    let level = mass_to_c1(v0.integral(), ord.s(), 1)?;
    let target = barenblatt_field(&BarenblattSpec::new(level, ord.s(), 1)?, 1.0, &g)?;
    let start = EvolutionState::new(v0, 0.0, ord, true)?;
    let model = Model2::for_state(&start)?;
    let mut steps = Table::new("steps", &["tau", "l1_distance", "entropy"]);
    let traj = run_observed(start, p.f64("tau")?, p.usize("snap_every")?, |st| {
        steps.push_reals(&[
            st.time,
            st.density.l1_distance(&target),
            model.entropy(st.density.values()),
        ]);
    })?;
    let increment = |col: &str| -> f64 {
        let c = steps.column(col).expect("column exists");
        c.windows(2)
            .map(|w| w[1] - w[0])
            .fold(f64::NEG_INFINITY, f64::max)
    };
    let d_inc = increment("l1_distance");
    let h_inc = increment("entropy");
    let last = steps
        .column("l1_distance")
        .expect("column exists")
        .last()
        .copied()
        .unwrap_or(f64::NAN);
    let mut snap = Table::new("snapshot", &["y", "v", "profile"]);
    for ((y, v), e) in g
        .coords()
        .iter()
        .zip(traj.last().density.values())
        .zip(target.values())
    {
        snap.push_reals(&[*y, *v, *e]);
    }
    out.tables.extend([trajectory_table(&traj), steps, snap]);
    out.verdicts
        .push(Verdict::at_most("final_l1_distance", last, 0.05));
    out.verdicts
        .push(Verdict::at_most("max_l1_increment", d_inc, 1e-8));
    out.verdicts
        .push(Verdict::at_most("max_entropy_increment", h_inc, 1e-8));
    out.metrics.push(("level".into(), level));
    Ok(())
}

fn track(p: &Params, out: &mut Outcome) -> Result<()> {
    let ord = order(p)?;
    let g = grid(p)?;
    let spec = BarenblattSpec::new(p.f64("level")?, ord.s(), 1)?;
    let (t0, t1) = (p.f64("t0")?, p.f64("t1")?);
    if !(t1 > t0) {
        return Err(Error::Config("t1 must exceed t0".into()));
    }
    let start = EvolutionState::new(barenblatt_field(&spec, t0, &g)?, t0, ord, false)?;
    let traj = run_from(start, t1 - t0, p.usize("snap_every")?)?;
    let mut errors = Table::new("error", &["time", "l1_error"]);
    let mut worst = 0.0f64;
    for st in &traj.snapshots {
        let e = st
            .density
            .l1_distance(&barenblatt_field(&spec, st.time, &g)?);
        worst = worst.max(e);
        errors.push_reals(&[st.time, e]);
    }
    let exact = barenblatt_field(&spec, t1, &g)?;
    let mut snap = Table::new("snapshot", &["x", "u", "exact"]);
    for ((x, u), e) in g
        .coords()
        .iter()
        .zip(traj.last().density.values())
        .zip(exact.values())
    {
        snap.push_reals(&[*x, *u, *e]);
    }
    out.tables.extend([trajectory_table(&traj), errors, snap]);
    out.verdicts.push(Verdict::at_most("l1_error", worst, 0.02));
    out.metrics.push((
        "final_l1_error".into(),
        traj.last().density.l1_distance(&exact),
    ));
    Ok(())
}

fn smooth_bump(g: GridSpec, amplitude: f64) -> Result<GridField> {
    GridField::from_fn(g, |x| amplitude * (1.0 - x * x).max(0.0).powi(2))
}

fn propagation(p: &Params, out: &mut Outcome) -> Result<()> {
    let ord = order(p)?;
    let g = grid(p)?;
    let u0 = smooth_bump(g, p.f64("amplitude")?)?;
    let traj = run(u0, ord, false, p.f64("T")?, p.usize("snap_every")?)?;
    let rep = finite_propagation_check(&traj, p.f64("A")?, p.f64("a")?)?;
    let mut env = Table::new("envelope", &["time", "fitted_c"]);
    for (t, c) in &rep.history {
        env.push_reals(&[*t, *c]);
    }
    out.tables.extend([trajectory_table(&traj), env]);
    out.verdicts.push(Verdict::new(
        "envelope_constant",
        rep.fitted_c,
        Relation::Finite,
        0.0,
    ));
    out.reports
        .push(("envelope".into(), serde_json::to_value(&rep)?));
    Ok(())
}

fn smoothing(p: &Params, out: &mut Outcome) -> Result<()> {
    let ord = order(p)?;
    let s = ord.s();
    // the support grows like t^β, faster for larger s
    let (l, n) = if s < 0.4 {
        (16.0, 2048)
    } else if s < 0.6 {
        (32.0, 4096)
    } else {
        (64.0, 4096)
    };
    let g = GridSpec::new(
        p.auto_f64("L")?.unwrap_or(l),
        p.auto_usize("n")?.unwrap_or(n),
    )?;
    let w = p.f64("width")?;
    let horizon = p.f64("T")?;
    let every = p.usize("snap_every")?;
    let bump = GridField::from_fn(g, |x| (1.0 - (x / w).powi(2)).max(0.0).powi(2))?;
    let single = run(with_mass(bump.clone(), 1.0)?, ord, false, horizon, every)?;
    let double = run(with_mass(bump, 2.0)?, ord, false, horizon, every)?;
    let fit = smoothing_exponent_fit(&single)?;
    let ratio = mass_doubling_ratio(&single, &double)?;
    let e = exponents(1, s)?;
    let growth = support_growth_exponent(&single, fit.window.0, fit.window.1)?;
    let mut table = trajectory_table(&single);
    table.name = "trajectory_mass1".into();
    let mut table2 = trajectory_table(&double);
    table2.name = "trajectory_mass2".into();
    out.tables.extend([table, table2]);
    out.verdicts.push(Verdict::relative(
        "alpha_hat",
        fit.alpha_hat,
        fit.alpha,
        0.07,
    ));
    out.verdicts.push(Verdict::relative(
        "mass_doubling_ratio",
        ratio,
        2f64.powf(e.gamma),
        0.10,
    ));
    out.metrics.extend([
        ("alpha_fitted".into(), fit.alpha_hat),
        ("alpha".into(), fit.alpha),
        ("plateau_spread".into(), fit.plateau_spread),
        ("ratio".into(), ratio),
        ("two_pow_gamma".into(), 2f64.powf(e.gamma)),
        ("support_exponent".into(), growth),
        ("beta".into(), e.beta),
    ]);
    Ok(())
}

fn model1(p: &Params, out: &mut Outcome) -> Result<()> {
    let ord = order(p)?;
    let g = grid(p)?;
    let m = p.f64("m")?;
    let u0 = smooth_bump(g, p.f64("amplitude")?)?;
    let st = EvolutionState::new(u0.clone(), 0.0, ord, false)?;
    let dt = p.f64("dt_fraction")? * model1_dt_limit(&u0, ord, m);
    let one = step_model1(&st, m, dt)?;
    let model = Model2::for_state(&st)?;
    let two = step_model2(
        &st,
        dt.min(model.adaptive_dt(u0.values(), &model.velocity(u0.values()))),
    )?;
    let mut table = Table::new("snapshot", &["x", "u0", "model1", "model2"]);
    for (i, x) in g.coords().into_iter().enumerate() {
        table.push_reals(&[x, u0.get(i), one.density.get(i), two.density.get(i)]);
    }
    out.tables.push(table);
    let outside = |u: &GridField| {
        g.coords()
            .iter()
            .zip(u.values())
            .filter(|(x, _)| x.abs() > 1.0 + 2.0 * g.spacing())
            .map(|(_, v)| *v)
            .fold(0.0, f64::max)
    };
    out.verdicts.push(Verdict::new(
        "model1_min_density",
        one.density.min(),
        Relation::Above,
        0.0,
    ));
    out.verdicts.push(Verdict::at_most(
        "model2_density_outside_support",
        outside(&two.density),
        0.0,
    ));
    out.metrics.push(("dt".into(), dt));
    out.metrics.push((
        "model1_density_outside_support".into(),
        outside(&one.density),
    ));
    Ok(())
}

fn obstacle(p: &Params, out: &mut Outcome) -> Result<()> {
    let s = p.f64("s")?;
    let g = grid(p)?;
    let sol = solve_stationary_obstacle(p.f64("C")?, s, &g)?;
    let level = mass_to_c1(sol.mass, s, 1)?;
    let exact = barenblatt_field(&BarenblattSpec::new(level, s, 1)?, 1.0, &g)?;
    let obs = sol.obstacle();
    let mut table = Table::new(
        "profile",
        &["y", "pressure", "density", "obstacle", "explicit"],
    );
    for (i, y) in g.coords().into_iter().enumerate() {
        table.push_reals(&[
            y,
            sol.pressure.get(i),
            sol.density.get(i),
            obs.get(i),
            exact.get(i),
        ]);
    }
    let outside = g
        .coords()
        .iter()
        .zip(sol.density.values())
        .filter(|(y, _)| y.abs() > sol.contact_radius + 2.0 * g.spacing())
        .map(|(_, v)| *v)
        .fold(0.0, f64::max);
    out.tables.push(table);
    out.verdicts.push(Verdict::at_most(
        "density_linf",
        sol.density.linf_distance(&exact),
        2e-2,
    ));
    out.verdicts.push(Verdict::at_most(
        "complementarity_residual",
        sol.residual,
        1e-8,
    ));
    out.verdicts.push(Verdict::new(
        "pressure_min",
        sol.pressure.min(),
        Relation::Above,
        0.0,
    ));
    out.verdicts
        .push(Verdict::at_most("density_outside_contact", outside, 0.0));
    if s < 0.5 {
        let tail = pressure_tail_fit(&sol)?;
        out.verdicts.push(Verdict::relative(
            "pressure_tail_exponent",
            tail,
            1.0 - 2.0 * s,
            0.10,
        ));
    }
    out.metrics
        .push(("contact_radius".into(), sol.contact_radius));
    out.metrics.push(("mass".into(), sol.mass));
    out.metrics
        .push(("iterations".into(), sol.iterations as f64));
    Ok(())
}

fn potential(p: &Params) -> Result<PotentialSpec> {
    PotentialSpec::new(p.f64("a")?, p.f64("b")?, p.usize("N")?)
}

fn ensemble_table(e: &ParticleEnsemble) -> Table {
    let d = e.dim();
    let mut header = vec!["id".to_string()];
    header.extend((1..=d).map(|k| format!("x{k}")));
    if e.velocities().is_some() {
        header.extend((1..=d).map(|k| format!("v{k}")));
    }
    let mut t = Table {
        name: "ensemble".into(),
        header,
        rows: Vec::new(),
    };
    for i in 0..e.len() {
        let mut row = vec![Cell::Id(i)];
        row.extend(e.position(i).iter().map(|&x| Cell::Real(x)));
        if let Some(v) = e.velocities() {
            row.extend(v[i * d..(i + 1) * d].iter().map(|&x| Cell::Real(x)));
        }
        t.push(row);
    }
    t
}

fn equilibrium_json(
    report: &EquilibriumReport,
    seed: u64,
    spec: &PotentialSpec,
) -> Result<serde_json::Value> {
    let psi = &report.psi_on_support;
    let lo = psi.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = psi.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    Ok(json!({
        "seed": seed,
        "spec": spec,
        "energy": report.energy,
        "two_energy": 2.0 * report.energy,
        "force_residual": report.force_residual,
        "flock_speed_dev": report.flock_speed_dev,
        "psi_min": lo,
        "psi_max": hi,
        "psi_spread": report.psi_spread,
        "probe_margin": if report.probe_margin.is_finite() { Some(report.probe_margin) } else { None },
        "iterations": report.iterations,
        "converged": report.converged,
        "psi_on_support": report.psi_on_support,
        "psi_off_support": report.psi_off_support,
    }))
}

fn relaxed(p: &Params) -> Result<(ParticleEnsemble, EquilibriumReport, PotentialSpec, u64)> {
    let spec = potential(p)?;
    let seed = p.u64("seed")?;
    let e = ParticleEnsemble::random_ball(p.usize("M")?, spec.dim, p.f64("init_radius")?, seed)?;
    let (x, rep) = relax_to_equilibrium(&e, &spec, p.f64("tol")?, p.usize("budget")?)?;
    Ok((x, rep, spec, seed))
}

fn flock(p: &Params, out: &mut Outcome) -> Result<()> {
    let (alpha, beta) = (p.f64("alpha")?, p.f64("beta")?);
    let (shape, _, spec, seed) = relaxed(p)?;
    let speed = p.f64("speed")?;
    let heading: Vec<f64> = random_unit_vector(spec.dim, seed)
        .iter()
        .map(|h| h * speed)
        .collect();
    let mut e = shape.with_velocity(&heading)?;
    let dt = p.f64("dt")?;
    let steps = (p.f64("T")? / dt).round() as usize;
    let every = p.usize("record_every")?.max(1);
    let target = (alpha / beta).sqrt();
    let mut series = Table::new("flock", &["time", "speed_dev", "force_residual"]);
    let mut record = |k: usize, e: &ParticleEnsemble| -> Result<(f64, f64)> {
        let dev = e
            .speeds()
            .expect("velocities present")
            .iter()
            .map(|s| (s - target).abs())
            .fold(0.0, f64::max);
        let f = pairwise_forces(e, &spec)?;
        let res = f
            .chunks(spec.dim)
            .map(|c| c.iter().map(|x| x * x).sum::<f64>().sqrt())
            .fold(0.0, f64::max);
        series.push_reals(&[k as f64 * dt, dev, res]);
        Ok((dev, res))
    };
    record(0, &e)?;
    let mut last = (f64::NAN, f64::NAN);
    for k in 1..=steps {
        e = step_second_order(&e, alpha, beta, &spec, dt)?;
        if k % every == 0 || k == steps {
            last = record(k, &e)?;
        }
    }
    let mut rep = euler_lagrange_check(&e, &spec, &[])?;
    rep.flock_speed_dev = Some(last.0);
    rep.iterations = steps;
    rep.converged = true;
    out.tables.extend([ensemble_table(&e), series]);
    out.reports
        .push(("equilibrium".into(), equilibrium_json(&rep, seed, &spec)?));
    out.verdicts
        .push(Verdict::at_most("speed_deviation", last.0, 1e-3));
    out.verdicts
        .push(Verdict::at_most("force_residual", last.1, 1e-6));
    Ok(())
}

fn disk(p: &Params, out: &mut Outcome) -> Result<()> {
    let (x, rep, spec, seed) = relaxed(p)?;
    let bins = p.usize("bins")?;
    let inner = p.f64("inner")?;
    let target = p.f64("target_radius")?;
    if bins < 1 {
        return Err(Error::Config("bins must be positive".into()));
    }
    // shells must span several of the rings a finite ensemble forms
    let n = spec.dim as f64;
    let edges: Vec<f64> = (0..=bins).map(|k| inner * k as f64 / bins as f64).collect();
    let prof = radial_profile_with(&x, &edges)?;
    let flat = 1.0 / unit_ball_volume(spec.dim) / target.powf(n);
    let mut radial = Table::new(
        "radial",
        &["r_inner", "r_outer", "density", "ratio_to_flat"],
    );
    let mut worst = 0.0f64;
    for (w, d) in edges.windows(2).zip(&prof.density) {
        worst = worst.max((d / flat - 1.0).abs());
        radial.push_reals(&[w[0], w[1], *d, d / flat]);
    }
    let radius = x.radii().into_iter().fold(0.0, f64::max);
    out.tables.extend([ensemble_table(&x), radial]);
    out.reports
        .push(("equilibrium".into(), equilibrium_json(&rep, seed, &spec)?));
    out.verdicts
        .push(Verdict::relative("support_radius", radius, target, 0.05));
    out.verdicts
        .push(Verdict::at_most("radial_flatness", worst, 0.10));
    out.metrics.push(("radius".into(), radius));
    out.metrics
        .push(("force_residual".into(), rep.force_residual));
    out.metrics.push(("energy".into(), rep.energy));
    Ok(())
}

fn el_check(p: &Params, out: &mut Outcome) -> Result<()> {
    let (x, relax, spec, seed) = relaxed(p)?;
    if spec.dim != 2 {
        return Err(Error::Config("probe circles need N = 2".into()));
    }
    let probes = circle_probes(&x.centroid(), p.f64("probe_radius")?, p.usize("probes")?);
    let mut rep = euler_lagrange_check(&x, &spec, &probes)?;
    rep.iterations = relax.iterations;
    rep.converged = relax.converged;
    let mut psi = Table::new("psi", &["id", "psi"]);
    for (i, v) in rep.psi_on_support.iter().enumerate() {
        psi.push(vec![Cell::Id(i), Cell::Real(*v)]);
    }
    let mut probe_table = Table::new("probes", &["x1", "x2", "psi"]);
    for (q, v) in probes.iter().zip(&rep.psi_off_support) {
        probe_table.push_reals(&[q[0], q[1], *v]);
    }
    out.tables.extend([ensemble_table(&x), psi, probe_table]);
    out.reports
        .push(("equilibrium".into(), equilibrium_json(&rep, seed, &spec)?));
    out.verdicts.push(Verdict::at_most(
        "psi_spread",
        rep.psi_spread,
        p.f64("spread_tol")?,
    ));
    out.verdicts.push(Verdict::at_least(
        "probe_margin",
        rep.probe_margin,
        -p.f64("probe_tol")?,
    ));
    out.metrics.push(("two_energy".into(), 2.0 * rep.energy));
    Ok(())
}
