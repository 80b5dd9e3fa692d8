//! Euclidean projection onto the coefficient polyhedron
//! `S = {c : 0 ≤ c_m − c_{m−1} ≤ Δ}` by Dykstra's alternating projections.
//!
//! Each constraint is a slab `0 ≤ aᵀc ≤ Δ` on a single difference, so its
//! projection is closed-form and Dykstra's correction is a scalar per slab.

use serde::{Deserialize, Serialize};

use crate::error::{check_len, Error, Result};
use crate::spline::{ShrinkageSpline, SplineMode};

const MAX_SWEEPS: usize = 2_000_000;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConstraintSet {
    pub delta: f64,
    pub m_half: usize,
    pub mode: SplineMode,
}

/// One slab: `0 ≤ c[hi] − c[lo] ≤ Δ`, or `0 ≤ c[hi] ≤ Δ` when `lo` is `None`.
#[derive(Clone, Copy, Debug)]
struct Slab {
    lo: Option<usize>,
    hi: usize,
}

impl Slab {
    fn value(&self, c: &[f64]) -> f64 {
        c[self.hi] - self.lo.map_or(0.0, |i| c[i])
    }

    fn norm_sq(&self) -> f64 {
        if self.lo.is_some() {
            2.0
        } else {
            1.0
        }
    }

    /// Adds `t · a` to `c`.
    fn add(&self, c: &mut [f64], t: f64) {
        c[self.hi] += t;
        if let Some(i) = self.lo {
            c[i] -= t;
        }
    }
}

impl ConstraintSet {
    pub fn new(delta: f64, m_half: usize, mode: SplineMode) -> Result<Self> {
        if !(delta > 0.0 && delta.is_finite()) {
            return Err(Error::InvalidParameter(format!("delta must be positive, got {delta}")));
        }
        Ok(ConstraintSet { delta, m_half, mode })
    }

    pub fn for_spline(spline: &ShrinkageSpline) -> Self {
        ConstraintSet {
            delta: spline.delta(),
            m_half: spline.m_half(),
            mode: spline.mode(),
        }
    }

    pub fn dim(&self) -> usize {
        match self.mode {
            SplineMode::General => 2 * self.m_half + 1,
            SplineMode::Antisymmetric => self.m_half,
        }
    }

    fn slabs(&self) -> Vec<Slab> {
        let d = self.dim();
        match self.mode {
            SplineMode::General => (1..d).map(|i| Slab { lo: Some(i - 1), hi: i }).collect(),
            // With c_0 = 0 and c_{−m} = −c_m, the negative half repeats the
            // positive constraints; the first slab is 0 ≤ c_1 ≤ Δ.
            SplineMode::Antisymmetric => std::iter::once(Slab { lo: None, hi: 0 })
                .chain((1..d).map(|i| Slab { lo: Some(i - 1), hi: i }))
                .collect(),
        }
    }

    /// Largest violation of any constraint (0 when feasible).
    pub fn violation(&self, c: &[f64]) -> f64 {
        self.slabs()
            .iter()
            .map(|s| {
                let v = s.value(c);
                (-v).max(v - self.delta).max(0.0)
            })
            .fold(0.0, f64::max)
    }

    pub fn contains(&self, c: &[f64], tol: f64) -> bool {
        c.len() == self.dim() && self.violation(c) <= tol
    }
}

/// Projects `z` onto `S`, iterating Dykstra sweeps until the largest change
/// of the iterate over a sweep is below `tol`.
///
/// The converged point is then made exactly feasible by rebuilding it from
/// its clamped differences, which moves it by at most `dim · tol`.
pub fn project_to_s(z: &[f64], set: &ConstraintSet, tol: f64) -> Result<Vec<f64>> {
    check_len(set.dim(), z.len())?;
    if !(tol > 0.0) {
        return Err(Error::InvalidParameter(format!("tol must be positive, got {tol}")));
    }
    let slabs = set.slabs();
    let delta = set.delta;
    let mut c = z.to_vec();
    let mut corrections = vec![0.0; slabs.len()];

    let mut converged = slabs.is_empty();
    for _ in 0..MAX_SWEEPS {
        if converged {
            break;
        }
        let mut max_change = 0.0f64;
        for (slab, t) in slabs.iter().zip(corrections.iter_mut()) {
            // Restore the previous correction, then project onto the slab.
            let restored = slab.value(&c) + *t * slab.norm_sq();
            let clamped = restored.clamp(0.0, delta);
            let new_t = (restored - clamped) / slab.norm_sq();
            let step = *t - new_t;
            if step != 0.0 {
                slab.add(&mut c, step);
                max_change = max_change.max(step.abs());
            }
            *t = new_t;
        }
        converged = max_change < tol;
    }
    if !converged {
        return Err(Error::NotConverged {
            what: "Dykstra projection",
            iterations: MAX_SWEEPS,
        });
    }
    Ok(repair(&c, set))
}

fn repair(c: &[f64], set: &ConstraintSet) -> Vec<f64> {
    let delta = set.delta;
    let mut out = Vec::with_capacity(c.len());
    match set.mode {
        SplineMode::General => {
            out.push(c[0]);
            for i in 1..c.len() {
                let d = (c[i] - c[i - 1]).clamp(0.0, delta);
                out.push(out[i - 1] + d);
            }
        }
        SplineMode::Antisymmetric => {
            let mut prev = 0.0;
            for &ci in c {
                let next = prev + (ci - prev).clamp(0.0, delta);
                out.push(next);
                prev = next;
            }
        }
    }
    out
}
