//! Noise-level rescaling of a firmly nonexpansive shrinkage function.
//!
//! If `T = prox_Φ`, then `prox_{λΦ} = (λT⁻¹ + (1 − λ) id)⁻¹`. The inverse of
//! `T` may be set-valued, so the scaled operator is evaluated in the
//! pre-image domain: find `v` with `λv + (1 − λ)T(v) = y` and return `T(v)`.
//! For `0 ≤ T' ≤ 1` and `λ > 0` the left-hand side has slope at least
//! `min(λ, 1)`, so the root is unique and bisection is safe.

use serde::{Deserialize, Serialize};

use crate::admm::Shrinkage;
use crate::error::{Error, Result};

pub const DEFAULT_ROOT_TOL: f64 = 1e-10;
const MAX_BISECTIONS: usize = 400;
const MAX_EXPANSIONS: usize = 200;

/// Evaluates `T_λ(y)` for a firmly nonexpansive `T`.
pub fn scale_operator<S: Shrinkage + ?Sized>(t: &S, lambda: f64, y: f64, root_tol: f64) -> Result<f64> {
    if !(lambda >= 0.0 && lambda.is_finite()) {
        return Err(Error::InvalidParameter(format!("lambda must be nonnegative, got {lambda}")));
    }
    if !(root_tol > 0.0) {
        return Err(Error::InvalidParameter(format!("root_tol must be positive, got {root_tol}")));
    }
    if lambda == 0.0 {
        return Ok(y);
    }
    let v = preimage(t, lambda, y, root_tol)?;
    Ok(t.shrink(v))
}

/// Solves `λv + (1 − λ)T(v) = y` for `v`.
fn preimage<S: Shrinkage + ?Sized>(t: &S, lambda: f64, y: f64, root_tol: f64) -> Result<f64> {
    if !y.is_finite() {
        return Err(Error::BracketFailure(y));
    }
    let h = |v: f64| lambda * v + (1.0 - lambda) * t.shrink(v) - y;
    // Residual tolerance tightened by the minimal slope so that the returned
    // value is within root_tol of the exact pre-image.
    let tol = root_tol * lambda.min(1.0);

    let h0 = h(y);
    if h0.abs() <= tol {
        return Ok(y);
    }
    let mut width = y.abs().max(1.0);
    let (mut lo, mut hi) = if h0 < 0.0 { (y, y + width) } else { (y - width, y) };
    let mut expansions = 0;
    loop {
        let (hl, hh) = (h(lo), h(hi));
        if hl <= 0.0 && hh >= 0.0 {
            break;
        }
        expansions += 1;
        if expansions > MAX_EXPANSIONS || !hl.is_finite() || !hh.is_finite() {
            return Err(Error::BracketFailure(y));
        }
        width *= 2.0;
        if hl > 0.0 {
            lo -= width;
        } else {
            hi += width;
        }
    }

    let mut mid = 0.5 * (lo + hi);
    for _ in 0..MAX_BISECTIONS {
        mid = 0.5 * (lo + hi);
        let hm = h(mid);
        if hm.abs() <= tol || mid <= lo || mid >= hi {
            return Ok(mid);
        }
        if hm < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(mid)
}

/// `T_λ = (λT⁻¹ + (1 − λ) id)⁻¹` as a shrinkage function in its own right.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScaledShrinkage<S = super::ShrinkageSpline> {
    pub base: S,
    pub lambda: f64,
    pub root_tol: f64,
}

impl<S: Shrinkage> ScaledShrinkage<S> {
    pub fn new(base: S, lambda: f64, root_tol: f64) -> Result<Self> {
        if !(lambda >= 0.0 && lambda.is_finite()) {
            return Err(Error::InvalidParameter(format!("lambda must be nonnegative, got {lambda}")));
        }
        if !(root_tol > 0.0) {
            return Err(Error::InvalidParameter(format!("root_tol must be positive, got {root_tol}")));
        }
        Ok(ScaledShrinkage { base, lambda, root_tol })
    }

    pub fn eval(&self, y: f64) -> Result<f64> {
        scale_operator(&self.base, self.lambda, y, self.root_tol)
    }
}

impl ScaledShrinkage<super::ShrinkageSpline> {
    /// Builds the scaled operator after checking that the base spline is
    /// firmly nonexpansive, without which the rescaling is meaningless.
    pub fn from_spline(base: super::ShrinkageSpline, lambda: f64, root_tol: f64) -> Result<Self> {
        base.require_firmly_nonexpansive()?;
        Self::new(base, lambda, root_tol)
    }
}

impl<S: Shrinkage> Shrinkage for ScaledShrinkage<S> {
    /// NaN if the root cannot be bracketed, which only happens for
    /// non-finite input.
    fn shrink(&self, y: f64) -> f64 {
        self.eval(y).unwrap_or(f64::NAN)
    }

    /// `T_λ'(y) = T'(v) / (λ + (1 − λ)T'(v))` at the pre-image `v`.
    fn slope(&self, y: f64) -> f64 {
        if self.lambda == 0.0 {
            return 1.0;
        }
        match preimage(&self.base, self.lambda, y, self.root_tol) {
            Ok(v) => {
                let d = self.base.slope(v);
                d / (self.lambda + (1.0 - self.lambda) * d)
            }
            Err(_) => f64::NAN,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::admm::SoftThreshold;
    use crate::spline::{BSplineKernel, ShrinkageSpline, SplineMode};

    fn soft(x: f64, tau: f64) -> f64 {
        x.signum() * (x.abs() - tau).max(0.0)
    }

    fn soft_spline(tau: f64) -> ShrinkageSpline {
        ShrinkageSpline::from_knot_values(BSplineKernel::cubic(), 0.1, 60, SplineMode::Antisymmetric, |x| {
            soft(x, tau)
        })
        .unwrap()
    }

    #[test]
    fn unit_lambda_is_identity_map_on_operators() {
        let t = soft_spline(1.0);
        for i in -40..=40 {
            let y = f64::from(i) * 0.13;
            let v = scale_operator(&t, 1.0, y, 1e-10).unwrap();
            assert!((v - t.eval(y)).abs() <= 1e-10);
        }
    }

    #[test]
    fn zero_lambda_is_identity() {
        let t = soft_spline(1.0);
        for y in [-3.0, 0.0, 0.4, 7.5] {
            assert_eq!(scale_operator(&t, 0.0, y, 1e-10).unwrap(), y);
        }
    }

    #[test]
    fn doubling_soft_threshold() {
        let tau = 1.0;
        let t = soft_spline(tau);
        for y in [-5.0 * tau, 0.0, 3.0 * tau] {
            let got = scale_operator(&t, 2.0, y, 1e-10).unwrap();
            assert!((got - soft(y, 2.0 * tau)).abs() < 1e-6, "y={y}: {got}");
        }
    }

    #[test]
    fn exact_soft_threshold_scales_for_any_lambda() {
        let t = SoftThreshold::new(0.7);
        for lambda in [0.3, 1.0, 2.5, 10.0] {
            for i in -30..=30 {
                let y = f64::from(i) * 0.21;
                let got = scale_operator(&t, lambda, y, 1e-12).unwrap();
                assert!((got - soft(y, 0.7 * lambda)).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn composition_multiplies_lambdas() {
        let t = soft_spline(0.8);
        let tol = 1e-10;
        let once = ScaledShrinkage::new(t.clone(), 1.7, tol).unwrap();
        let twice = ScaledShrinkage::new(once, 0.6, tol).unwrap();
        let direct = ScaledShrinkage::new(t, 1.7 * 0.6, tol).unwrap();
        for i in -25..=25 {
            let y = f64::from(i) * 0.17;
            assert!((twice.shrink(y) - direct.shrink(y)).abs() <= 10.0 * tol);
        }
    }

    #[test]
    fn negative_lambda_rejected() {
        let t = soft_spline(1.0);
        assert!(scale_operator(&t, -0.1, 1.0, 1e-10).is_err());
        assert!(scale_operator(&t, 1.0, f64::NAN, 1e-10).is_err());
    }

    #[test]
    fn from_spline_rejects_expansive_curves() {
        let bad = ShrinkageSpline::new(BSplineKernel::cubic(), 0.5, 4, SplineMode::Antisymmetric, vec![0.0, 2.0, 2.1, 2.2])
            .unwrap();
        assert!(matches!(
            ScaledShrinkage::from_spline(bad, 2.0, 1e-10),
            Err(Error::NotFirmlyNonexpansive(_))
        ));
    }
}
