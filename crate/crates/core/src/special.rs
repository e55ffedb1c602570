//! Special functions not covered by `statrs`.

const BERNOULLI_2J: [f64; 6] = [
    1.0 / 6.0,
    -1.0 / 30.0,
    1.0 / 42.0,
    -1.0 / 30.0,
    5.0 / 66.0,
    -691.0 / 2730.0,
];

/// Hurwitz zeta `sum_{k>=0} (q + k)^{-s}` for `s > 1`, `q > 0`, by
/// Euler-Maclaurin summation.
pub fn hurwitz_zeta(s: f64, q: f64) -> f64 {
    debug_assert!(s > 1.0 && q > 0.0);
    const HEAD: usize = 16;
    let mut sum: f64 = (0..HEAD).map(|k| (q + k as f64).powf(-s)).sum();
    let a = q + HEAD as f64;
    sum += a.powf(1.0 - s) / (s - 1.0) + 0.5 * a.powf(-s);
    // rising product s (s+1) ... (s+2j-2) / (2j)!
    let mut coeff = s / 2.0;
    let mut power = a.powf(-s - 1.0);
    for (j, b) in BERNOULLI_2J.iter().enumerate() {
        sum += b * coeff * power;
        let j2 = 2.0 * (j as f64 + 1.0);
        coeff *= (s + j2 - 1.0) * (s + j2) / ((j2 + 1.0) * (j2 + 2.0));
        power /= a * a;
    }
    sum
}

/// Tanh-sinh quadrature of `f` over `[a, b]`; tolerant of algebraic
/// endpoint singularities. `f` is never evaluated at the endpoints.
pub fn tanh_sinh(f: impl Fn(f64) -> f64, a: f64, b: f64) -> f64 {
    const STEP: f64 = 1.0 / 64.0;
    const RANGE: f64 = 4.0;
    let half = 0.5 * (b - a);
    let steps = (RANGE / STEP) as i64;
    let mut sum = 0.0;
    for k in -steps..=steps {
        let t = k as f64 * STEP;
        let u = 0.5 * std::f64::consts::PI * t.sinh();
        let cu = u.cosh();
        let w = 0.5 * std::f64::consts::PI * t.cosh() / (cu * cu);
        // distance to the nearer endpoint, computed without cancellation
        let gap = half * 2.0 / ((2.0 * u.abs()).exp() + 1.0);
        if gap <= 0.0 {
            continue;
        }
        let x = if u >= 0.0 { b - gap } else { a + gap };
        sum += w * f(x);
    }
    half * STEP * sum
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn tanh_sinh_handles_endpoint_singularities() {
        let semicircle = tanh_sinh(|x| (1.0 - x * x).sqrt(), -1.0, 1.0);
        assert!((semicircle - PI / 2.0).abs() < 1e-14);
        let inv_sqrt = tanh_sinh(|x| 1.0 / x.sqrt(), 0.0, 4.0);
        assert!((inv_sqrt - 4.0).abs() < 1e-12);
        let poly = tanh_sinh(|x| x * x, 1.0, 3.0);
        assert!((poly - 26.0 / 3.0).abs() < 1e-13);
    }

    #[test]
    fn riemann_values() {
        assert!((hurwitz_zeta(2.0, 1.0) - PI * PI / 6.0).abs() < 1e-14);
        assert!((hurwitz_zeta(2.0, 0.5) - PI * PI / 2.0).abs() < 1e-13);
        let z4 = PI.powi(4) / 90.0;
        assert!((hurwitz_zeta(4.0, 1.0) - z4).abs() < 1e-14);
    }

    #[test]
    fn shift_recurrence() {
        for &s in &[1.25, 1.5, 2.0, 2.75] {
            for &q in &[0.5, 0.8, 1.3] {
                let lhs = hurwitz_zeta(s, q);
                let rhs = q.powf(-s) + hurwitz_zeta(s, q + 1.0);
                assert!((lhs - rhs).abs() < 1e-13 * lhs, "s={s} q={q}");
            }
        }
    }
}
