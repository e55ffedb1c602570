//! Real Fourier multipliers on a uniform grid, optionally evaluated on a
//! zero-padded lattice so that the result approximates the whole-line
//! convolution instead of its periodization.

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::grid::GridSpec;

/// Angular wavenumbers `2 pi k / (m h)` in FFT order for an `m`-point lattice.
pub fn wavenumbers(m: usize, spacing: f64) -> Vec<f64> {
    let period = m as f64 * spacing;
    (0..m)
        .map(|k| {
            let kk = if k <= m / 2 {
                k as f64
            } else {
                k as f64 - m as f64
            };
            2.0 * PI * kk / period
        })
        .collect()
}

/// A diagonal operator in Fourier space, with FFT plans built once.
#[derive(Clone)]
pub struct Multiplier {
    points: usize,
    symbol: Vec<f64>,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for Multiplier {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Multiplier")
            .field("points", &self.points)
            .field("lattice", &self.symbol.len())
            .finish()
    }
}

impl Multiplier {
    /// `pad = 1` is the plain periodic operator; larger factors embed the
    /// grid in a lattice `pad` times longer filled with zeros.
    pub fn new(grid: &GridSpec, pad: usize, symbol: impl Fn(f64) -> f64) -> Self {
        let pad = pad.max(1);
        let m = grid.points() * pad;
        let mut planner = FftPlanner::new();
        let symbol = wavenumbers(m, grid.spacing())
            .into_iter()
            .map(symbol)
            .collect();
        Self {
            points: grid.points(),
            symbol,
            forward: planner.plan_fft_forward(m),
            inverse: planner.plan_fft_inverse(m),
        }
    }

    pub fn lattice_len(&self) -> usize {
        self.symbol.len()
    }

    pub fn apply(&self, input: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.points];
        self.apply_into(input, &mut out);
        out
    }

    pub fn apply_into(&self, input: &[f64], out: &mut [f64]) {
        assert_eq!(input.len(), self.points);
        assert_eq!(out.len(), self.points);
        let m = self.symbol.len();
        let mut buf = vec![Complex64::new(0.0, 0.0); m];
        for (b, &v) in buf.iter_mut().zip(input) {
            b.re = v;
        }
        self.forward.process(&mut buf);
        let scale = 1.0 / m as f64;
        for (b, &w) in buf.iter_mut().zip(&self.symbol) {
            *b *= w * scale;
        }
        self.inverse.process(&mut buf);
        for (o, b) in out.iter_mut().zip(&buf) {
            *o = b.re;
        }
    }
}

/// Inverse DFT of a real even symbol, sampled at the grid nodes relative to
/// the origin node. The lattice is `pad` times longer than the grid.
pub fn inverse_symbol(grid: &GridSpec, pad: usize, symbol: impl Fn(f64) -> f64) -> Vec<f64> {
    let n = grid.points();
    let m = n * pad.max(1);
    let h = grid.spacing();
    let mut buf: Vec<Complex64> = wavenumbers(m, h)
        .into_iter()
        .map(|xi| Complex64::new(symbol(xi), 0.0))
        .collect();
    FftPlanner::new().plan_fft_inverse(m).process(&mut buf);
    let scale = 1.0 / (m as f64 * h);
    let origin = grid.origin_index();
    (0..n)
        .map(|j| {
            let offset = (j + m - origin) % m;
            buf[offset].re * scale
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn wavenumbers_fft_order() {
        let k = wavenumbers(8, 0.25);
        let base = 2.0 * PI / 2.0;
        assert_eq!(k[0], 0.0);
        assert!((k[1] - base).abs() < 1e-15);
        assert!((k[7] + base).abs() < 1e-15);
        assert!((k[4] - 4.0 * base).abs() < 1e-12);
    }

    #[test]
    fn identity_symbol_round_trips() {
        let g = GridSpec::new(4.0, 64).unwrap();
        let f: Vec<f64> = g.coords().iter().map(|x| (-x * x).exp()).collect();
        for pad in [1, 4] {
            let out = Multiplier::new(&g, pad, |_| 1.0).apply(&f);
            for (a, b) in out.iter().zip(&f) {
                assert!((a - b).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn gaussian_symbol_gives_unit_mass_kernel() {
        let g = GridSpec::new(16.0, 512).unwrap();
        let k = inverse_symbol(&g, 4, |xi| (-xi * xi).exp());
        let mass: f64 = k.iter().sum::<f64>() * g.spacing();
        assert!((mass - 1.0).abs() < 1e-12, "mass={mass}");
        let exact = 1.0 / (4.0 * PI).sqrt();
        assert!((k[g.origin_index()] - exact).abs() < 1e-12);
    }
}
