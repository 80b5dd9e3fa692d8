//! Centered polynomial B-splines `β^n`.
//!
//! Orders 0 to 3 use explicit piecewise polynomials; higher orders fall back
//! to the truncated-power expansion, which is accurate for the small orders
//! used here. `β^0` is the half-open box `[-1/2, 1/2)` so that integer shifts
//! form an exact partition of unity.

use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct BSplineKernel {
    order: u32,
}

impl BSplineKernel {
    pub const fn new(order: u32) -> Self {
        BSplineKernel { order }
    }

    pub const fn cubic() -> Self {
        BSplineKernel { order: 3 }
    }

    pub const fn order(&self) -> u32 {
        self.order
    }

    /// Half-width of the support, `(n + 1) / 2`.
    pub fn half_support(&self) -> f64 {
        f64::from(self.order + 1) / 2.0
    }

    #[inline]
    pub fn eval(&self, x: f64) -> f64 {
        kernel_eval(self.order, x)
    }

    #[inline]
    pub fn deriv(&self, x: f64) -> f64 {
        kernel_deriv(self.order, x)
    }
}

impl Default for BSplineKernel {
    fn default() -> Self {
        BSplineKernel::cubic()
    }
}

#[inline]
pub fn kernel_eval(order: u32, x: f64) -> f64 {
    match order {
        0 => {
            if (-0.5..0.5).contains(&x) {
                1.0
            } else {
                0.0
            }
        }
        1 => (1.0 - x.abs()).max(0.0),
        2 => {
            let a = x.abs();
            if a < 0.5 {
                0.75 - a * a
            } else if a < 1.5 {
                let t = a - 1.5;
                0.5 * t * t
            } else {
                0.0
            }
        }
        3 => {
            let a = x.abs();
            if a < 1.0 {
                2.0 / 3.0 - a * a + 0.5 * a * a * a
            } else if a < 2.0 {
                let t = 2.0 - a;
                t * t * t / 6.0
            } else {
                0.0
            }
        }
        n => truncated_power(n, x.abs()),
    }
}

/// `(β^n)'(x) = β^{n−1}(x + 1/2) − β^{n−1}(x − 1/2)`. Zero for `n = 0`.
#[inline]
pub fn kernel_deriv(order: u32, x: f64) -> f64 {
    if order == 0 {
        return 0.0;
    }
    kernel_eval(order - 1, x + 0.5) - kernel_eval(order - 1, x - 0.5)
}

fn truncated_power(n: u32, x: f64) -> f64 {
    let half = f64::from(n + 1) / 2.0;
    if x >= half {
        return 0.0;
    }
    let mut sum = 0.0;
    let mut binom = 1.0;
    for k in 0..=n + 1 {
        let t = x + half - f64::from(k);
        if t > 0.0 {
            let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
            sum += sign * binom * t.powi(n as i32);
        }
        binom = binom * f64::from(n + 1 - k) / f64::from(k + 1);
    }
    let factorial: f64 = (1..=n).map(f64::from).product();
    sum / factorial
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn cubic_reference_values() {
        assert!((kernel_eval(3, 0.0) - 2.0 / 3.0).abs() < 1e-15);
        assert!((kernel_eval(3, 1.0) - 1.0 / 6.0).abs() < 1e-15);
        assert_eq!(kernel_eval(3, 2.0), 0.0);
        assert_eq!(kernel_eval(3, -2.5), 0.0);
    }

    #[test]
    fn generic_formula_matches_explicit_orders() {
        for n in 1..=3 {
            for i in -40..=40 {
                let x = f64::from(i) * 0.05 + 0.013;
                let explicit = kernel_eval(n, x);
                let generic = truncated_power(n, x.abs());
                assert!((explicit - generic).abs() < 1e-12, "n={n} x={x}");
            }
        }
    }

    #[test]
    fn derivative_matches_finite_difference() {
        let h = 1e-6;
        for n in 2..=5 {
            for i in 0..100 {
                let x = -3.0 + 6.0 * (f64::from(i) + 0.37) / 100.0;
                let fd = (kernel_eval(n, x + h) - kernel_eval(n, x - h)) / (2.0 * h);
                assert!((kernel_deriv(n, x) - fd).abs() < 1e-6, "n={n} x={x}");
            }
        }
    }

    proptest! {
        #[test]
        fn partition_of_unity(x in -50.0f64..50.0, n in 0u32..=5) {
            let total: f64 = (-60..=60).map(|m| kernel_eval(n, x - f64::from(m))).sum();
            prop_assert!((total - 1.0).abs() < 1e-12);
        }

        #[test]
        fn derivative_identity(x in -4.0f64..4.0, n in 1u32..=5) {
            let expected = kernel_eval(n - 1, x + 0.5) - kernel_eval(n - 1, x - 0.5);
            prop_assert_eq!(kernel_deriv(n, x), expected);
        }

        #[test]
        fn kernels_are_even(x in 0.0f64..4.0, n in 1u32..=6) {
            prop_assert_eq!(kernel_eval(n, x), kernel_eval(n, -x));
        }
    }
}
