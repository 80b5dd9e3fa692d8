//! Numerical recovery of the convex penalty `Φ` with `T = prox_Φ`.
//!
//! From `T = (id + ∂Φ)⁻¹` every sample `u = T(v)` yields the subgradient
//! `v − u ∈ ∂Φ(u)`. Walking a grid of `v` values traces the graph of `∂Φ`,
//! which is integrated with the trapezoidal rule.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::admm::Shrinkage;
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PenaltyCurve {
    /// Non-decreasing. A value appears twice when `T` is flat there; the two
    /// rows carry the endpoints of the subgradient interval.
    pub u_grid: Vec<f64>,
    pub phi_values: Vec<f64>,
    pub phi_prime_values: Vec<f64>,
}

/// Samples `Φ` along `u = T(v)` for `v` in `v_grid`, anchored so that
/// `Φ = 0` at the sample nearest `u = 0`.
pub fn recover_penalty<S: Shrinkage + ?Sized>(t: &S, v_grid: &[f64]) -> Result<PenaltyCurve> {
    if v_grid.len() < 2 {
        return Err(Error::InvalidParameter("penalty recovery needs at least two grid points".into()));
    }
    if v_grid.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::InvalidParameter("v_grid must be strictly increasing".into()));
    }
    let u: Vec<f64> = v_grid.iter().map(|&v| t.shrink(v)).collect();
    let slack = 1e-12 * u.iter().fold(1.0f64, |m, x| m.max(x.abs()));
    if let Some(w) = u.windows(2).find(|w| w[1] < w[0] - slack) {
        return Err(Error::NotFirmlyNonexpansive(format!(
            "shrinkage decreases from {} to {}",
            w[0], w[1]
        )));
    }
    let p: Vec<f64> = v_grid.iter().zip(&u).map(|(v, u)| v - u).collect();

    let mut phi = Vec::with_capacity(u.len());
    let mut acc = 0.0;
    phi.push(0.0);
    for j in 1..u.len() {
        acc += 0.5 * (p[j - 1] + p[j]) * (u[j] - u[j - 1]);
        phi.push(acc);
    }

    let anchor = (0..u.len())
        .min_by(|&a, &b| u[a].abs().total_cmp(&u[b].abs()))
        .expect("non-empty grid");
    let offset = phi[anchor];

    // Keep the first and last sample of every run of equal u.
    let mut curve = PenaltyCurve {
        u_grid: Vec::new(),
        phi_values: Vec::new(),
        phi_prime_values: Vec::new(),
    };
    let mut j = 0;
    while j < u.len() {
        let mut end = j;
        while end + 1 < u.len() && u[end + 1] == u[j] {
            end += 1;
        }
        for k in if end > j { vec![j, end] } else { vec![j] } {
            curve.u_grid.push(u[k]);
            curve.phi_values.push(phi[k] - offset);
            curve.phi_prime_values.push(p[k]);
        }
        j = end + 1;
    }
    Ok(curve)
}

impl PenaltyCurve {
    pub fn len(&self) -> usize {
        self.u_grid.len()
    }

    pub fn is_empty(&self) -> bool {
        self.u_grid.is_empty()
    }

    /// Linear interpolation inside the grid, linear extension with the
    /// boundary subgradient outside.
    pub fn eval(&self, u: f64) -> f64 {
        let n = self.u_grid.len();
        let (first, last) = (self.u_grid[0], self.u_grid[n - 1]);
        if u <= first {
            return self.phi_values[0] + self.phi_prime_values[0] * (u - first);
        }
        if u >= last {
            return self.phi_values[n - 1] + self.phi_prime_values[n - 1] * (u - last);
        }
        let i = self.u_grid.partition_point(|&g| g <= u);
        let (u0, u1) = (self.u_grid[i - 1], self.u_grid[i]);
        let (f0, f1) = (self.phi_values[i - 1], self.phi_values[i]);
        f0 + (f1 - f0) * (u - u0) / (u1 - u0)
    }

    /// `factor · Φ`.
    pub fn scaled(&self, factor: f64) -> PenaltyCurve {
        PenaltyCurve {
            u_grid: self.u_grid.clone(),
            phi_values: self.phi_values.iter().map(|f| f * factor).collect(),
            phi_prime_values: self.phi_prime_values.iter().map(|f| f * factor).collect(),
        }
    }

    /// Largest decrease between consecutive secant slopes; nonpositive for a
    /// convex sampled curve.
    ///
    /// Where `T` is nearly flat, neighbouring samples can sit ~1e-12 apart and
    /// their secant is rounding noise, so samples closer than `1e-6` of the
    /// u-span to the previous kept sample are skipped.
    pub fn convexity_violation(&self) -> f64 {
        let n = self.len();
        let min_step = 1e-6 * (self.u_grid[n - 1] - self.u_grid[0]);
        let mut kept = vec![0];
        for j in 1..n {
            if self.u_grid[j] - self.u_grid[*kept.last().unwrap()] >= min_step {
                kept.push(j);
            }
        }
        let slopes: Vec<f64> = kept
            .windows(2)
            .map(|w| (self.phi_values[w[1]] - self.phi_values[w[0]]) / (self.u_grid[w[1]] - self.u_grid[w[0]]))
            .collect();
        slopes
            .windows(2)
            .map(|s| s[0] - s[1])
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// `max |Φ(u) − Φ(−u)|` over the sampled `u` inside the symmetric part of
    /// the grid.
    pub fn symmetry_error(&self) -> f64 {
        let reach = self.u_grid[0].abs().min(self.u_grid[self.len() - 1].abs());
        self.u_grid
            .iter()
            .zip(&self.phi_values)
            .filter(|(u, _)| u.abs() <= reach)
            .map(|(&u, &f)| (f - self.eval(-u)).abs())
            .fold(0.0, f64::max)
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "u,phi,phi_prime")?;
        for ((u, f), p) in self.u_grid.iter().zip(&self.phi_values).zip(&self.phi_prime_values) {
            writeln!(w, "{u},{f},{p}")?;
        }
        Ok(())
    }
}

/// Uniform grid of `points` values on `[−half_width, half_width]`.
pub fn symmetric_grid(half_width: f64, points: usize) -> Vec<f64> {
    let points = points.max(2);
    (0..points)
        .map(|j| {
            // Mirror-exact: the j-th and (points−1−j)-th values are negatives.
            let k = 2.0 * j as f64 - (points - 1) as f64;
            half_width * k / (points - 1) as f64
        })
        .collect()
}
