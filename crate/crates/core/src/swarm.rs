//! Interacting particles driven by a pairwise potential
//! `W(r) = r^a / a - r^b / b` (an exponent of 0 stands for `log r`).
//!
//! Two dynamics are provided. The first-order aggregation flow is
//! `ẋ_i = F_i`. The second-order model with self-propulsion and friction is
//! `ẋ_i = v_i`, `v̇_i = α v_i - β |v_i|² v_i + F_i`. In both,
//! `F_i = -(1/M) Σ_{j≠i} ∇W(x_i - x_j)`. The `1/M` weight makes large
//! ensembles approximate a probability measure, so equilibrium shapes are
//! independent of `M`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{check_range, Error, Result};

/// Smallest admissible distance between two particles.
pub const MIN_SEPARATION: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PotentialSpec {
    /// Attractive exponent.
    pub a: f64,
    /// Repulsive exponent.
    pub b: f64,
    pub dim: usize,
}

impl PotentialSpec {
    pub fn new(a: f64, b: f64, dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::Precondition("dimension must be at least 1".into()));
        }
        check_range("b", b, b > -(dim as f64), "(-N, a)")?;
        check_range("a", a, a > b, "(b, inf)")?;
        Ok(Self { a, b, dim })
    }

    pub fn eval(&self, r: f64) -> (f64, f64) {
        let (wa, da) = power_term(self.a, r);
        let (wb, db) = power_term(self.b, r);
        (wa - wb, da - db)
    }
}

/// `(r^p / p, r^{p-1})`, with `(log r, 1/r)` at `p = 0`.
fn power_term(p: f64, r: f64) -> (f64, f64) {
    if p == 0.0 {
        (r.ln(), 1.0 / r)
    } else if p == 2.0 {
        (0.5 * r * r, r)
    } else {
        let rp = r.powf(p);
        (rp / p, rp / r)
    }
}

/// `(W(r), W'(r))`.
pub fn potential_eval(spec: &PotentialSpec, r: f64) -> Result<(f64, f64)> {
    check_range("r", r, r > 0.0, "(0, inf)")?;
    Ok(spec.eval(r))
}

#[derive(Debug, Clone, PartialEq)]
pub struct ParticleEnsemble {
    dim: usize,
    positions: Vec<f64>,
    velocities: Option<Vec<f64>>,
}

impl ParticleEnsemble {
    /// Positions and optional velocities as flat row-major `M × N` arrays.
    pub fn new(dim: usize, positions: Vec<f64>, velocities: Option<Vec<f64>>) -> Result<Self> {
        if dim == 0 || positions.len() % dim != 0 {
            return Err(Error::Precondition(format!(
                "{} coordinates do not form points in dimension {dim}",
                positions.len()
            )));
        }
        if let Some(v) = &velocities {
            if v.len() != positions.len() {
                return Err(Error::LengthMismatch {
                    expected: positions.len(),
                    got: v.len(),
                });
            }
        }
        let all = positions.iter().chain(velocities.iter().flatten());
        if let Some(index) = all.clone().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { index });
        }
        let e = Self {
            dim,
            positions,
            velocities,
        };
        e.check_separation()?;
        Ok(e)
    }

    /// `count` points uniform in the ball of radius `radius`, from `seed`.
    pub fn random_ball(count: usize, dim: usize, radius: f64, seed: u64) -> Result<Self> {
        check_range("radius", radius, radius > 0.0, "(0, inf)")?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut positions = Vec::with_capacity(count * dim);
        while positions.len() < count * dim {
            let p: Vec<f64> = (0..dim).map(|_| rng.gen_range(-1.0..1.0)).collect();
            if p.iter().map(|x| x * x).sum::<f64>() <= 1.0 {
                positions.extend(p.iter().map(|x| x * radius));
            }
        }
        let mut e = Self {
            dim,
            positions,
            velocities: None,
        };
        e.jitter_duplicates(&mut rng);
        Ok(e)
    }

    fn jitter_duplicates(&mut self, rng: &mut ChaCha8Rng) {
        while let Err(Error::Coincident { j, .. }) = self.check_separation() {
            for k in 0..self.dim {
                self.positions[j * self.dim + k] += rng.gen_range(-1e-9..1e-9);
            }
        }
    }

    /// Sets every velocity to `heading` scaled by a per-particle speed drawn
    /// uniformly from `speeds`, using `seed`.
    pub fn with_common_heading(
        mut self,
        heading: &[f64],
        speeds: (f64, f64),
        seed: u64,
    ) -> Result<Self> {
        self.check_vector(heading)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut v = Vec::with_capacity(self.positions.len());
        for _ in 0..self.len() {
            let speed = if speeds.1 > speeds.0 {
                rng.gen_range(speeds.0..speeds.1)
            } else {
                speeds.0
            };
            v.extend(heading.iter().map(|h| h * speed));
        }
        self.velocities = Some(v);
        Ok(self)
    }

    /// Every particle moves with the same velocity `v`.
    pub fn with_velocity(mut self, v: &[f64]) -> Result<Self> {
        self.check_vector(v)?;
        self.velocities = Some(
            v.iter()
                .copied()
                .cycle()
                .take(self.positions.len())
                .collect(),
        );
        Ok(self)
    }

    fn check_vector(&self, v: &[f64]) -> Result<()> {
        if v.len() != self.dim {
            return Err(Error::LengthMismatch {
                expected: self.dim,
                got: v.len(),
            });
        }
        match v.iter().position(|x| !x.is_finite()) {
            Some(index) => Err(Error::NonFinite { index }),
            None => Ok(()),
        }
    }

    fn check_separation(&self) -> Result<()> {
        let m = self.len();
        for i in 0..m {
            for j in i + 1..m {
                let d = self.distance(i, j);
                if d <= MIN_SEPARATION {
                    return Err(Error::Coincident { i, j, distance: d });
                }
            }
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.positions.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn positions(&self) -> &[f64] {
        &self.positions
    }

    pub fn velocities(&self) -> Option<&[f64]> {
        self.velocities.as_deref()
    }

    pub fn position(&self, i: usize) -> &[f64] {
        &self.positions[i * self.dim..(i + 1) * self.dim]
    }

    fn distance(&self, i: usize, j: usize) -> f64 {
        let (p, q) = (self.position(i), self.position(j));
        p.iter()
            .zip(q)
            .map(|(a, b)| (a - b).powi(2))
            .sum::<f64>()
            .sqrt()
    }

    pub fn centroid(&self) -> Vec<f64> {
        let m = self.len() as f64;
        (0..self.dim)
            .map(|k| {
                (0..self.len())
                    .map(|i| self.positions[i * self.dim + k])
                    .sum::<f64>()
                    / m
            })
            .collect()
    }

    /// Distance of each particle from the centroid.
    pub fn radii(&self) -> Vec<f64> {
        let c = self.centroid();
        (0..self.len())
            .map(|i| {
                self.position(i)
                    .iter()
                    .zip(&c)
                    .map(|(a, b)| (a - b).powi(2))
                    .sum::<f64>()
                    .sqrt()
            })
            .collect()
    }

    pub fn speeds(&self) -> Option<Vec<f64>> {
        let v = self.velocities.as_ref()?;
        Some(
            v.chunks(self.dim)
                .map(|c| c.iter().map(|x| x * x).sum::<f64>().sqrt())
                .collect(),
        )
    }

    pub fn translated(&self, shift: &[f64]) -> Self {
        let mut e = self.clone();
        for p in e.positions.chunks_mut(self.dim) {
            for (x, s) in p.iter_mut().zip(shift) {
                *x += s;
            }
        }
        e
    }
}

/// A uniformly distributed unit vector in `dim` dimensions, from `seed`.
pub fn random_unit_vector(dim: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    loop {
        let p: Vec<f64> = (0..dim).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let r = p.iter().map(|x| x * x).sum::<f64>().sqrt();
        if r > 1e-3 && r <= 1.0 {
            return p.iter().map(|x| x / r).collect();
        }
    }
}

/// Forces `F_i` and the unscaled pair energy `½ Σ_{i≠j} W`, in one pass.
fn forces_and_energy(e: &ParticleEnsemble, spec: &PotentialSpec) -> Result<(Vec<f64>, f64)> {
    let m = e.len();
    let d = e.dim;
    let mut f = vec![0.0; m * d];
    let mut energy = Neumaier::default();
    let mut diff = vec![0.0; d];
    let weight = 1.0 / m as f64;
    for i in 0..m {
        let xi = e.position(i);
        for j in i + 1..m {
            let xj = e.position(j);
            let mut r2 = 0.0;
            for k in 0..d {
                diff[k] = xi[k] - xj[k];
                r2 += diff[k] * diff[k];
            }
            let r = r2.sqrt();
            if r <= MIN_SEPARATION {
                return Err(Error::Coincident { i, j, distance: r });
            }
            let (w, dw) = spec.eval(r);
            energy.add(w);
            let scale = weight * dw / r;
            for k in 0..d {
                let g = scale * diff[k];
                f[i * d + k] -= g;
                f[j * d + k] += g;
            }
        }
    }
    Ok((f, energy.total()))
}

pub fn pairwise_forces(e: &ParticleEnsemble, spec: &PotentialSpec) -> Result<Vec<f64>> {
    check_dim(e, spec)?;
    Ok(forces_and_energy(e, spec)?.0)
}

/// `E = ½ Σ_{i≠j} W(x_i - x_j)`, without the `1/M²` weight.
pub fn discrete_energy(e: &ParticleEnsemble, spec: &PotentialSpec) -> Result<f64> {
    check_dim(e, spec)?;
    Ok(forces_and_energy(e, spec)?.1)
}

/// `discrete_energy / M²`, the energy of the empirical probability measure.
pub fn continuum_energy(e: &ParticleEnsemble, spec: &PotentialSpec) -> Result<f64> {
    let m = e.len() as f64;
    Ok(discrete_energy(e, spec)? / (m * m))
}

fn check_dim(e: &ParticleEnsemble, spec: &PotentialSpec) -> Result<()> {
    if e.dim != spec.dim {
        return Err(Error::LengthMismatch {
            expected: spec.dim,
            got: e.dim,
        });
    }
    Ok(())
}

fn max_norm(v: &[f64], dim: usize) -> f64 {
    v.chunks(dim)
        .map(|c| c.iter().map(|x| x * x).sum::<f64>().sqrt())
        .fold(0.0, f64::max)
}

/// Semi-implicit Euler: velocities first, then positions with the new
/// velocities.
pub fn step_second_order(
    e: &ParticleEnsemble,
    alpha: f64,
    beta: f64,
    spec: &PotentialSpec,
    dt: f64,
) -> Result<ParticleEnsemble> {
    check_range("dt", dt, dt > 0.0, "(0, inf)")?;
    let v = e
        .velocities
        .as_ref()
        .ok_or_else(|| Error::Precondition("second-order step needs velocities".into()))?;
    let f = pairwise_forces(e, spec)?;
    let d = e.dim;
    let mut vn = v.clone();
    for (i, c) in vn.chunks_mut(d).enumerate() {
        let s2: f64 = c.iter().map(|x| x * x).sum();
        for k in 0..d {
            c[k] += dt * ((alpha - beta * s2) * c[k] + f[i * d + k]);
        }
    }
    let mut x = e.positions.clone();
    for (xk, vk) in x.iter_mut().zip(&vn) {
        *xk += dt * vk;
    }
    ParticleEnsemble::new(d, x, Some(vn))
}

/// Explicit Euler along the forces; velocities are dropped.
pub fn step_first_order(
    e: &ParticleEnsemble,
    spec: &PotentialSpec,
    dt: f64,
) -> Result<ParticleEnsemble> {
    check_range("dt", dt, dt > 0.0, "(0, inf)")?;
    let f = pairwise_forces(e, spec)?;
    Ok(displaced(e, &f, dt))
}

fn displaced(e: &ParticleEnsemble, f: &[f64], dt: f64) -> ParticleEnsemble {
    let positions = e.positions.iter().zip(f).map(|(x, g)| x + dt * g).collect();
    ParticleEnsemble {
        dim: e.dim,
        positions,
        velocities: None,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EquilibriumReport {
    /// Energy of the empirical measure, `E/M²`.
    pub energy: f64,
    pub psi_on_support: Vec<f64>,
    pub psi_off_support: Vec<f64>,
    /// `(max ψ - min ψ) / |2E|` over the particles.
    pub psi_spread: f64,
    /// `min over probes of ψ(p) - 2E`.
    pub probe_margin: f64,
    pub force_residual: f64,
    pub flock_speed_dev: Option<f64>,
    pub iterations: usize,
    pub converged: bool,
}

impl EquilibriumReport {
    /// Both discrete Euler-Lagrange conditions hold at the given tolerances.
    /// This certifies approximate criticality only, not minimality.
    pub fn passes(&self, spread_tol: f64, probe_tol: f64) -> bool {
        self.psi_spread <= spread_tol && self.probe_margin >= -probe_tol
    }
}

/// Gradient descent with an energy line search: a step is accepted only if
/// the energy does not increase, otherwise `dt` is halved; accepted steps
/// grow `dt` by 10%.
pub fn relax_to_equilibrium(
    e: &ParticleEnsemble,
    spec: &PotentialSpec,
    tol: f64,
    budget: usize,
) -> Result<(ParticleEnsemble, EquilibriumReport)> {
    check_range("tol", tol, tol > 0.0, "(0, inf)")?;
    check_dim(e, spec)?;
    let mut x = ParticleEnsemble {
        velocities: None,
        ..e.clone()
    };
    let (mut f, mut energy) = forces_and_energy(&x, spec)?;
    let mut dt = 0.1;
    let mut iterations = 0;
    let mut converged = max_norm(&f, x.dim) <= tol;
    while !converged && iterations < budget {
        let trial = displaced(&x, &f, dt);
        match forces_and_energy(&trial, spec) {
            Ok((ft, et)) if et <= energy => {
                x = trial;
                f = ft;
                energy = et;
                dt *= 1.1;
                iterations += 1;
                converged = max_norm(&f, x.dim) <= tol;
            }
            Ok(_) | Err(Error::Coincident { .. }) => {
                dt *= 0.5;
                if dt < 1e-14 {
                    break;
                }
            }
            Err(other) => return Err(other),
        }
    }
    let mut report = euler_lagrange_check(&x, spec, &[])?;
    report.iterations = iterations;
    report.converged = converged;
    Ok((x, report))
}

/// `ψ(p) = (1/M) Σ_j W(p - x_j)` on particles (excluding self) and probes.
pub fn euler_lagrange_check(
    e: &ParticleEnsemble,
    spec: &PotentialSpec,
    probes: &[Vec<f64>],
) -> Result<EquilibriumReport> {
    check_dim(e, spec)?;
    if e.is_empty() {
        return Err(Error::Precondition("empty ensemble".into()));
    }
    let m = e.len();
    let weight = 1.0 / m as f64;
    let mut psi = vec![Neumaier::default(); m];
    for i in 0..m {
        for j in i + 1..m {
            let r = e.distance(i, j);
            if r <= MIN_SEPARATION {
                return Err(Error::Coincident { i, j, distance: r });
            }
            let w = spec.eval(r).0;
            psi[i].add(w);
            psi[j].add(w);
        }
    }
    let psi: Vec<f64> = psi.iter().map(|p| weight * p.total()).collect();
    let two_e = psi.iter().sum::<f64>() / m as f64;
    let mut off = Vec::with_capacity(probes.len());
    for p in probes {
        if p.len() != e.dim {
            return Err(Error::LengthMismatch {
                expected: e.dim,
                got: p.len(),
            });
        }
        let mut acc = Neumaier::default();
        for j in 0..m {
            let r = p
                .iter()
                .zip(e.position(j))
                .map(|(a, b)| (a - b).powi(2))
                .sum::<f64>()
                .sqrt();
            if r <= MIN_SEPARATION {
                return Err(Error::Precondition(format!(
                    "probe coincides with particle {j}"
                )));
            }
            acc.add(spec.eval(r).0);
        }
        off.push(weight * acc.total());
    }
    let hi = psi.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lo = psi.iter().copied().fold(f64::INFINITY, f64::min);
    let probe_margin = off.iter().map(|p| p - two_e).fold(f64::INFINITY, f64::min);
    let force_residual = max_norm(&pairwise_forces(e, spec)?, e.dim);
    Ok(EquilibriumReport {
        energy: 0.5 * two_e,
        psi_spread: (hi - lo) / two_e.abs(),
        probe_margin,
        psi_on_support: psi,
        psi_off_support: off,
        force_residual,
        flock_speed_dev: None,
        iterations: 0,
        converged: false,
    })
}

/// Points evenly spaced on the circle of radius `radius` about `center`.
pub fn circle_probes(center: &[f64], radius: f64, count: usize) -> Vec<Vec<f64>> {
    (0..count)
        .map(|k| {
            let th = 2.0 * std::f64::consts::PI * k as f64 / count as f64;
            vec![center[0] + radius * th.cos(), center[1] + radius * th.sin()]
        })
        .collect()
}

/// Second-order run over `[0, horizon]` with fixed `dt`; the report carries
/// the final force residual and speed deviation from `√(α/β)`.
pub fn run_second_order(
    e: &ParticleEnsemble,
    alpha: f64,
    beta: f64,
    spec: &PotentialSpec,
    dt: f64,
    horizon: f64,
) -> Result<(ParticleEnsemble, EquilibriumReport)> {
    check_range("horizon", horizon, horizon >= 0.0, "[0, inf)")?;
    let steps = (horizon / dt).round() as usize;
    let mut x = e.clone();
    for _ in 0..steps {
        x = step_second_order(&x, alpha, beta, spec, dt)?;
    }
    let target = (alpha / beta).sqrt();
    let dev = x
        .speeds()
        .expect("velocities present")
        .iter()
        .map(|s| (s - target).abs())
        .fold(0.0, f64::max);
    let mut report = euler_lagrange_check(&x, spec, &[])?;
    report.flock_speed_dev = Some(dev);
    report.iterations = steps;
    report.converged = true;
    Ok((x, report))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RadialProfile {
    pub edges: Vec<f64>,
    /// Mass fraction per shell divided by shell volume.
    pub density: Vec<f64>,
}

impl RadialProfile {
    /// `Σ density × shell volume`.
    pub fn total_mass(&self, dim: usize) -> f64 {
        self.density
            .iter()
            .zip(self.edges.windows(2))
            .map(|(d, w)| d * shell_volume(dim, w[0], w[1]))
            .sum()
    }
}

/// Volume of the unit ball in `R^dim`.
pub fn unit_ball_volume(dim: usize) -> f64 {
    let n = dim as f64;
    std::f64::consts::PI.powf(0.5 * n) / statrs::function::gamma::gamma(0.5 * n + 1.0)
}

fn shell_volume(dim: usize, r0: f64, r1: f64) -> f64 {
    let n = dim as f64;
    unit_ball_volume(dim) * (r1.powf(n) - r0.powf(n))
}

/// Shell-averaged density about the centroid on `bins` equal-width shells
/// reaching the outermost particle.
pub fn radial_profile(e: &ParticleEnsemble, bins: usize) -> Result<RadialProfile> {
    if bins < 4 {
        return Err(Error::Precondition("need at least 4 bins".into()));
    }
    if e.is_empty() {
        return Err(Error::Precondition("empty ensemble".into()));
    }
    let rmax = e.radii().into_iter().fold(0.0, f64::max) * (1.0 + 1e-12) + f64::MIN_POSITIVE;
    let edges: Vec<f64> = (0..=bins).map(|k| rmax * k as f64 / bins as f64).collect();
    radial_profile_with(e, &edges)
}

/// Shell-averaged density on arbitrary increasing shell edges.
pub fn radial_profile_with(e: &ParticleEnsemble, edges: &[f64]) -> Result<RadialProfile> {
    if e.dim < 2 {
        return Err(Error::Precondition("radial profiles need N >= 2".into()));
    }
    if edges.len() < 2 || edges.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::Precondition("shell edges must increase".into()));
    }
    let mut counts = vec![0usize; edges.len() - 1];
    for r in e.radii() {
        let k = edges.partition_point(|&x| x <= r);
        if k >= 1 && k < edges.len() {
            counts[k - 1] += 1;
        }
    }
    let m = e.len() as f64;
    let density = counts
        .iter()
        .zip(edges.windows(2))
        .map(|(&c, w)| c as f64 / m / shell_volume(e.dim, w[0], w[1]))
        .collect();
    Ok(RadialProfile {
        edges: edges.to_vec(),
        density,
    })
}

/// Compensated summation.
#[derive(Debug, Clone, Copy, Default)]
struct Neumaier {
    sum: f64,
    carry: f64,
}

impl Neumaier {
    fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.carry += (self.sum - t) + x;
        } else {
            self.carry += (x - t) + self.sum;
        }
        self.sum = t;
    }

    fn total(&self) -> f64 {
        self.sum + self.carry
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn newtonian_2d() -> PotentialSpec {
        PotentialSpec::new(2.0, 0.0, 2).unwrap()
    }

    #[test]
    fn potential_values() {
        let (w, dw) = potential_eval(&newtonian_2d(), 1.0).unwrap();
        assert_eq!((w, dw), (0.5, 0.0));
        let spec = PotentialSpec::new(2.0, -1.0, 3).unwrap();
        let (w, dw) = potential_eval(&spec, 2.0).unwrap();
        assert!((w - 2.5).abs() < 1e-15 && (dw - 1.75).abs() < 1e-15);
        assert!(potential_eval(&spec, 0.0).is_err());
        assert!(PotentialSpec::new(1.0, 2.0, 2).is_err());
        assert!(PotentialSpec::new(2.0, -2.0, 2).is_err());
        let (_, below) = newtonian_2d().eval(0.9);
        let (_, above) = newtonian_2d().eval(1.1);
        assert!(below < 0.0 && above > 0.0);
    }

    #[test]
    fn rejects_coincident_particles() {
        let r = ParticleEnsemble::new(2, vec![0.0, 0.0, 0.0, 0.0], None);
        assert!(matches!(r, Err(Error::Coincident { .. })));
    }

    #[test]
    fn pair_at_balance_distance_feels_no_force() {
        let e = ParticleEnsemble::new(2, vec![0.0, 0.0, 1.0, 0.0], None).unwrap();
        let f = pairwise_forces(&e, &newtonian_2d()).unwrap();
        assert!(f.iter().all(|x| x.abs() < 1e-15));
        assert_eq!(discrete_energy(&e, &newtonian_2d()).unwrap(), 0.5);
        let single = ParticleEnsemble::new(2, vec![0.3, 0.1], None).unwrap();
        assert_eq!(
            pairwise_forces(&single, &newtonian_2d()).unwrap(),
            vec![0.0, 0.0]
        );
        assert_eq!(discrete_energy(&single, &newtonian_2d()).unwrap(), 0.0);
    }

    #[test]
    fn distant_pair_attracts() {
        let e = ParticleEnsemble::new(2, vec![0.0, 0.0, 2.0, 0.0], None).unwrap();
        let next = step_first_order(&e, &newtonian_2d(), 0.1).unwrap();
        let d = next.distance(0, 1);
        assert!(d < 2.0 && d > 1.0);
    }

    #[test]
    fn self_propulsion_fixes_unit_speed() {
        let spec = newtonian_2d();
        let e = ParticleEnsemble::new(2, vec![0.0, 0.0], Some(vec![0.6, 0.8])).unwrap();
        let next = step_second_order(&e, 1.0, 1.0, &spec, 0.01).unwrap();
        assert!((next.speeds().unwrap()[0] - 1.0).abs() < 1e-15);
        let slow = ParticleEnsemble::new(2, vec![0.0, 0.0], Some(vec![0.5, 0.0])).unwrap();
        let next = step_second_order(&slow, 1.0, 1.0, &spec, 0.01).unwrap();
        assert!(next.speeds().unwrap()[0] > 0.5);
        assert!(step_second_order(
            &ParticleEnsemble::new(2, vec![0.0, 0.0], None).unwrap(),
            1.0,
            1.0,
            &spec,
            0.01
        )
        .is_err());
    }

    #[test]
    fn ring_profile_fills_single_bin() {
        let pts: Vec<f64> = (0..40)
            .flat_map(|k| {
                let th = 2.0 * std::f64::consts::PI * k as f64 / 40.0;
                [0.5 * th.cos(), 0.5 * th.sin()]
            })
            .collect();
        let e = ParticleEnsemble::new(2, pts, None).unwrap();
        let prof = radial_profile(&e, 8).unwrap();
        assert_eq!(prof.density.iter().filter(|&&d| d > 0.0).count(), 1);
        assert!((prof.total_mass(2) - 1.0).abs() < 1e-10);
    }

    #[test]
    fn relaxation_lowers_energy_and_certifies() {
        let spec = newtonian_2d();
        let e = ParticleEnsemble::random_ball(60, 2, 0.3, 7).unwrap();
        let e0 = continuum_energy(&e, &spec).unwrap();
        let (x, rep) = relax_to_equilibrium(&e, &spec, 1e-8, 20_000).unwrap();
        assert!(rep.converged, "residual {}", rep.force_residual);
        assert!(rep.energy < e0);
        assert!((continuum_energy(&x, &spec).unwrap() - rep.energy).abs() < 1e-12);
        let probes = circle_probes(&x.centroid(), 1.5, 16);
        let cert = euler_lagrange_check(&x, &spec, &probes).unwrap();
        assert!(cert.probe_margin > 0.0);
        let scattered = ParticleEnsemble::random_ball(60, 2, 3.0, 7).unwrap();
        let bad = euler_lagrange_check(&scattered, &spec, &probes).unwrap();
        assert!(!bad.passes(0.01, 1e-3));
    }
}
