//! Posterior-mean smoother for a Lévy process observed in white Gaussian
//! noise, by forward–backward message passing on a discretized state space.
//!
//! The chain `x_0 = origin → x_1 → … → x_N` has transitions
//! `p_U(x_{i+1} − x_i)` where `p_U` is an atom at zero plus a unit Gaussian.
//! The atom is applied exactly as a weighted identity; the Gaussian part is a
//! difference-kernel convolution evaluated with FFTs.

use std::sync::Arc;

use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::signal::LevyModel;

/// Default number of grid points.
pub const DEFAULT_GRID_POINTS: usize = 2048;
const MIN_GRID_POINTS: usize = 16;
const BOUNDARY_MASS_WARN: f64 = 1e-6;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub lo: f64,
    pub hi: f64,
    pub points: usize,
}

impl GridSpec {
    pub fn new(lo: f64, hi: f64, points: usize) -> Result<Self> {
        let g = GridSpec { lo, hi, points };
        g.validate()?;
        Ok(g)
    }

    pub fn validate(&self) -> Result<()> {
        if self.points < MIN_GRID_POINTS {
            return Err(Error::InvalidParameter(format!(
                "grid too coarse: {} points (minimum {MIN_GRID_POINTS})",
                self.points
            )));
        }
        if !(self.lo < self.hi && self.lo.is_finite() && self.hi.is_finite()) {
            return Err(Error::InvalidParameter(format!("bad grid range [{}, {}]", self.lo, self.hi)));
        }
        Ok(())
    }

    /// Covers the observed range of `y` (and `origin`) widened by
    /// `5(σ + √N)`, placed so that `origin` is exactly a grid point.
    pub fn for_observation(y: &[f64], sigma2: f64, points: usize, origin: f64) -> Result<Self> {
        if points < MIN_GRID_POINTS {
            return Err(Error::InvalidParameter(format!(
                "grid too coarse: {points} points (minimum {MIN_GRID_POINTS})"
            )));
        }
        let pad = 5.0 * (sigma2.sqrt() + (y.len() as f64).sqrt());
        let lo = y.iter().copied().fold(origin, f64::min) - pad;
        let hi = y.iter().copied().fold(origin, f64::max) + pad;
        let step = (hi - lo) / (points - 2) as f64;
        let below = ((origin - lo) / step).ceil();
        let lo = origin - below * step;
        GridSpec::new(lo, lo + (points - 1) as f64 * step, points)
    }

    pub fn step(&self) -> f64 {
        (self.hi - self.lo) / (self.points - 1) as f64
    }

    pub fn point(&self, j: usize) -> f64 {
        self.lo + j as f64 * self.step()
    }

    /// Index of the grid point nearest to `x`.
    pub fn nearest(&self, x: f64) -> usize {
        let j = ((x - self.lo) / self.step()).round();
        j.clamp(0.0, (self.points - 1) as f64) as usize
    }
}

/// `p_U(u) = atom·δ(u) + (1 − atom)·N(u; 0, 1)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct IncrementDensity {
    pub model: LevyModel,
    pub atom_at_zero: f64,
}

impl IncrementDensity {
    pub fn new(model: LevyModel) -> Result<Self> {
        model.validate()?;
        Ok(IncrementDensity {
            model,
            atom_at_zero: model.zero_probability(),
        })
    }

    pub fn continuous_weight(&self) -> f64 {
        1.0 - self.atom_at_zero
    }

    /// Density of the continuous part, `(1 − atom) φ(u)`.
    pub fn continuous_pdf(&self, u: f64) -> f64 {
        self.continuous_weight() * gaussian_pdf(u)
    }
}

fn gaussian_pdf(u: f64) -> f64 {
    (-0.5 * u * u).exp() / (2.0 * std::f64::consts::PI).sqrt()
}

/// Difference-kernel convolution on a fixed grid:
/// `(Kf)_j = atom·f_j + (1 − atom) Σ_l h φ((j − l)h) f_l`.
struct Transition {
    atom: f64,
    size: usize,
    points: usize,
    kernel_hat: Vec<Complex<f64>>,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl Transition {
    fn new(density: &IncrementDensity, grid: &GridSpec) -> Self {
        let g = grid.points;
        let size = (2 * g - 1).next_power_of_two();
        let h = grid.step();
        let mut planner = FftPlanner::new();
        let forward = planner.plan_fft_forward(size);
        let inverse = planner.plan_fft_inverse(size);
        let mut kernel_hat = vec![Complex::new(0.0, 0.0); size];
        let weight = density.continuous_weight() * h;
        for d in 0..g {
            let value = weight * gaussian_pdf(d as f64 * h);
            kernel_hat[d].re = value;
            if d > 0 {
                kernel_hat[size - d].re = value;
            }
        }
        forward.process(&mut kernel_hat);
        Transition {
            atom: density.atom_at_zero,
            size,
            points: g,
            kernel_hat,
            forward,
            inverse,
        }
    }

    fn apply(&self, f: &[f64], out: &mut [f64], buf: &mut [Complex<f64>]) {
        buf.fill(Complex::new(0.0, 0.0));
        for (b, &v) in buf.iter_mut().zip(f) {
            b.re = v;
        }
        self.forward.process(buf);
        for (b, k) in buf.iter_mut().zip(&self.kernel_hat) {
            *b *= k;
        }
        self.inverse.process(buf);
        let scale = 1.0 / self.size as f64;
        for j in 0..self.points {
            out[j] = (self.atom * f[j] + buf[j].re * scale).max(0.0);
        }
    }
}

fn normalize(v: &mut [f64]) -> f64 {
    let s: f64 = v.iter().sum();
    if s > 0.0 {
        for x in v.iter_mut() {
            *x /= s;
        }
    }
    s
}

/// Per-sample posterior means `E[x_i | y]` with `x_0 = 0`.
pub fn mmse_smoother(y: &[f64], sigma2: f64, density: &IncrementDensity, grid: &GridSpec) -> Result<Vec<f64>> {
    mmse_smoother_from(y, sigma2, density, grid, 0.0)
}

/// As [`mmse_smoother`] with the chain started at `x_0 = origin`, which must
/// be a grid point.
pub fn mmse_smoother_from(
    y: &[f64],
    sigma2: f64,
    density: &IncrementDensity,
    grid: &GridSpec,
    origin: f64,
) -> Result<Vec<f64>> {
    grid.validate()?;
    if !(sigma2 > 0.0 && sigma2.is_finite()) {
        return Err(Error::InvalidParameter(format!("sigma2 must be positive, got {sigma2}")));
    }
    let n = y.len();
    if n == 0 {
        return Ok(Vec::new());
    }
    let g = grid.points;
    let xs: Vec<f64> = (0..g).map(|j| grid.point(j)).collect();
    let origin_idx = grid.nearest(origin);
    if (xs[origin_idx] - origin).abs() > 1e-9 * grid.step() {
        return Err(Error::InvalidParameter(format!("origin {origin} is not a grid point")));
    }
    let transition = Transition::new(density, grid);
    let mut buf = vec![Complex::new(0.0, 0.0); transition.size];
    let emission = |i: usize, out: &mut [f64]| {
        for (o, &x) in out.iter_mut().zip(&xs) {
            let d = y[i] - x;
            *o = (-d * d / (2.0 * sigma2)).exp();
        }
    };

    let mut forward = vec![vec![0.0; g]; n];
    let mut e = vec![0.0; g];
    let mut start = vec![0.0; g];
    start[origin_idx] = 1.0;
    let mut prev = start;
    for i in 0..n {
        transition.apply(&prev, &mut forward[i], &mut buf);
        emission(i, &mut e);
        for (f, w) in forward[i].iter_mut().zip(&e) {
            *f *= w;
        }
        if normalize(&mut forward[i]) == 0.0 {
            return Err(Error::InvalidParameter(format!(
                "forward message vanished at sample {i}; grid does not cover the data"
            )));
        }
        prev = forward[i].clone();
    }

    let mut means = vec![0.0; n];
    let mut backward = vec![1.0; g];
    let mut weighted = vec![0.0; g];
    let mut boundary_mass = 0.0f64;
    for i in (0..n).rev() {
        let mut total = 0.0;
        let mut first = 0.0;
        for j in 0..g {
            let p = forward[i][j] * backward[j];
            total += p;
            first += p * xs[j];
        }
        means[i] = first / total;
        boundary_mass = boundary_mass.max((forward[i][0] * backward[0] + forward[i][g - 1] * backward[g - 1]) / total);
        if i > 0 {
            emission(i, &mut e);
            for j in 0..g {
                weighted[j] = e[j] * backward[j];
            }
            // The Gaussian kernel is even, so the adjoint is the same convolution.
            transition.apply(&weighted, &mut backward, &mut buf);
            normalize(&mut backward);
        }
    }
    if boundary_mass > BOUNDARY_MASS_WARN {
        log::warn!("MMSE grid boundary carries posterior mass {boundary_mass:.3e}");
    }
    Ok(means)
}
