use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};

/// `N` equispaced samples `x_i = 2πi/N` on the circle, with FFT-based
/// differentiation.
#[derive(Clone)]
pub struct CircleGrid {
    n: usize,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl fmt::Debug for CircleGrid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "CircleGrid({})", self.n)
    }
}

impl PartialEq for CircleGrid {
    fn eq(&self, other: &Self) -> bool {
        self.n == other.n
    }
}

impl CircleGrid {
    pub const MIN_POINTS: usize = 32;

    pub fn new(n: usize) -> Result<Self> {
        if n < Self::MIN_POINTS || n % 2 == 1 {
            return Err(Error::contract(format!("grid size must be even and at least {}, got {n}", Self::MIN_POINTS)));
        }
        let mut planner = FftPlanner::new();
        Ok(CircleGrid {
            n,
            forward: planner.plan_fft_forward(n),
            inverse: planner.plan_fft_inverse(n),
        })
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn step(&self) -> f64 {
        2.0 * PI / self.n as f64
    }

    pub fn points(&self) -> Vec<f64> {
        (0..self.n).map(|i| i as f64 * self.step()).collect()
    }

    pub fn sample(&self, f: impl Fn(f64) -> f64) -> Vec<f64> {
        self.points().into_iter().map(f).collect()
    }

    /// Signed wavenumber of FFT bin `i`; the Nyquist bin gets `N/2`.
    pub fn wavenumber(&self, i: usize) -> i64 {
        if i <= self.n / 2 {
            i as i64
        } else {
            i as i64 - self.n as i64
        }
    }

    /// Fourier coefficients `f̂_k` with `f(x_i) = Σ_k f̂_k e^{ikx_i}`, in
    /// FFT bin order.
    pub fn spectrum(&self, f: &[f64]) -> Vec<Complex64> {
        assert_eq!(f.len(), self.n, "sample count does not match the grid");
        let mut buf: Vec<Complex64> = f.iter().map(|&x| Complex64::new(x, 0.0)).collect();
        self.forward.process(&mut buf);
        let scale = 1.0 / self.n as f64;
        buf.iter().map(|z| z * scale).collect()
    }

    fn synthesize(&self, mut spec: Vec<Complex64>) -> Vec<f64> {
        self.inverse.process(&mut spec);
        spec.iter().map(|z| z.re).collect()
    }

    /// `f^{(m)}` by multiplying the spectrum by `(ik)^m`. The Nyquist mode
    /// is dropped for every `m ≥ 1`: its odd derivatives are not real, and
    /// keeping only the even ones decouples the flow equations at that mode
    /// into a backward heat equation.
    pub fn derivative(&self, f: &[f64], m: u32) -> Vec<f64> {
        if m == 0 {
            return f.to_vec();
        }
        let spec = self.spectrum(f);
        let out = spec
            .iter()
            .enumerate()
            .map(|(i, &z)| {
                let k = self.wavenumber(i);
                if k as usize == self.n / 2 {
                    Complex64::new(0.0, 0.0)
                } else {
                    z * Complex64::new(0.0, k as f64).powu(m)
                }
            })
            .collect();
        self.synthesize(out)
    }

    pub fn mean(&self, f: &[f64]) -> f64 {
        f.iter().sum::<f64>() / f.len() as f64
    }

    /// The trigonometric interpolant of the samples. Modes below `1e-13` of
    /// the largest are treated as roundoff and dropped, since high
    /// derivatives would amplify them; the Nyquist mode is split evenly
    /// between `±N/2`.
    pub fn interpolant(&self, f: &[f64]) -> TrigInterpolant {
        let spec = self.spectrum(f);
        let top = spec.iter().map(|z| z.norm()).fold(0.0, f64::max);
        let mut modes = Vec::new();
        for (i, z) in spec.iter().enumerate() {
            if z.norm() <= 1e-13 * top {
                continue;
            }
            let k = self.wavenumber(i);
            if k as usize == self.n / 2 {
                modes.push((k, z * 0.5));
                modes.push((-k, z * 0.5));
            } else {
                modes.push((k, *z));
            }
        }
        TrigInterpolant { modes }
    }
}

/// `f(x) = Re Σ f̂_k e^{ikx}` over the retained modes.
#[derive(Clone, Debug, PartialEq)]
pub struct TrigInterpolant {
    modes: Vec<(i64, Complex64)>,
}

impl TrigInterpolant {
    pub fn eval(&self, x: f64) -> f64 {
        self.modes.iter().map(|(k, z)| (z * Complex64::from_polar(1.0, *k as f64 * x)).re).sum()
    }

    /// Normalized Taylor coefficients `f^{(j)}(x)/j!`, `j ≤ order`.
    pub fn taylor(&self, x: f64, order: usize) -> Vec<f64> {
        let mut out = vec![0.0; order + 1];
        for (k, z) in &self.modes {
            let mut term = z * Complex64::from_polar(1.0, *k as f64 * x);
            let ik = Complex64::new(0.0, *k as f64);
            for (j, slot) in out.iter_mut().enumerate() {
                *slot += term.re;
                term = term * ik / (j + 1) as f64;
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sine_differentiates_to_cosine() {
        let g = CircleGrid::new(64).unwrap();
        let d = g.derivative(&g.sample(f64::sin), 1);
        for (x, y) in g.points().iter().zip(&d) {
            assert!((x.cos() - y).abs() < 1e-13);
        }
        let d3 = g.derivative(&g.sample(|x| (3.0 * x).cos()), 3);
        for (x, y) in g.points().iter().zip(&d3) {
            assert!((27.0 * (3.0 * x).sin() - y).abs() < 1e-10);
        }
    }

    #[test]
    fn rejects_small_or_odd_grids() {
        assert!(CircleGrid::new(16).is_err());
        assert!(CircleGrid::new(33).is_err());
    }

    #[test]
    fn taylor_coefficients_off_grid() {
        let g = CircleGrid::new(32).unwrap();
        let f = g.sample(|x| (2.0 * x).sin() + 0.5);
        let x = 0.3;
        let t = g.interpolant(&f).taylor(x, 3);
        assert!((g.interpolant(&f).eval(x) - t[0]).abs() < 1e-15);
        let want = [(2.0 * x).sin() + 0.5, 2.0 * (2.0 * x).cos(), -2.0 * (2.0 * x).sin(), -(4.0 / 3.0) * (2.0 * x).cos()];
        for (a, b) in t.iter().zip(want) {
            assert!((a - b).abs() < 1e-13, "{a} vs {b}");
        }
    }
}
