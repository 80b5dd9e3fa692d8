use serde::{Deserialize, Serialize};

use super::kernel::BSplineKernel;
use crate::admm::Shrinkage;
use crate::error::{Error, Result};

/// Slack allowed by [`ShrinkageSpline::check_firmly_nonexpansive`].
pub const FNE_TOL: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SplineMode {
    /// `T(x) = Σ_{m=−M}^{M} c_m ψ(x/Δ − m)`, `2M + 1` coefficients.
    General,
    /// `T(x) = Σ_{i=1}^{M} c_i [ψ(x/Δ − i) − ψ(x/Δ + i)]`, `M` coefficients.
    Antisymmetric,
}

/// Spline-parametrized shrinkage function with B-spline kernel.
///
/// Outside the knot range `[−R, R]`, `R = (M − (n+1)/2)Δ`, the curve is
/// extended by its boundary value, i.e. `T(x) = T(clamp(x, −R, R))`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "SplineFile", into = "SplineFile")]
pub struct ShrinkageSpline {
    kernel: BSplineKernel,
    delta: f64,
    m_half: usize,
    mode: SplineMode,
    coeffs: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct SplineFile {
    kernel_order: u32,
    delta: f64,
    m_half: usize,
    mode: SplineMode,
    coeffs: Vec<f64>,
}

impl TryFrom<SplineFile> for ShrinkageSpline {
    type Error = Error;

    fn try_from(f: SplineFile) -> Result<Self> {
        ShrinkageSpline::new(BSplineKernel::new(f.kernel_order), f.delta, f.m_half, f.mode, f.coeffs)
    }
}

impl From<ShrinkageSpline> for SplineFile {
    fn from(s: ShrinkageSpline) -> Self {
        SplineFile {
            kernel_order: s.kernel.order(),
            delta: s.delta,
            m_half: s.m_half,
            mode: s.mode,
            coeffs: s.coeffs,
        }
    }
}

/// Outcome of [`ShrinkageSpline::check_firmly_nonexpansive`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FirmNonexpansiveReport {
    pub ok: bool,
    pub min_slope: f64,
    pub max_slope: f64,
    pub min_increment: f64,
    pub max_increment: f64,
    pub reason: Option<String>,
}

impl ShrinkageSpline {
    pub fn new(
        kernel: BSplineKernel,
        delta: f64,
        m_half: usize,
        mode: SplineMode,
        coeffs: Vec<f64>,
    ) -> Result<Self> {
        if !(delta > 0.0 && delta.is_finite()) {
            return Err(Error::InvalidParameter(format!("delta must be positive, got {delta}")));
        }
        if (m_half as f64) <= kernel.half_support() {
            return Err(Error::InvalidParameter(format!(
                "m_half = {m_half} leaves an empty knot range for order {}",
                kernel.order()
            )));
        }
        let expected = coeff_count(mode, m_half);
        crate::error::check_len(expected, coeffs.len())?;
        if coeffs.iter().any(|c| !c.is_finite()) {
            return Err(Error::InvalidParameter("coefficients must be finite".into()));
        }
        Ok(ShrinkageSpline {
            kernel,
            delta,
            m_half,
            mode,
            coeffs,
        })
    }

    /// `c_m = mΔ`, which reproduces `T(x) = x` on the knot range.
    pub fn identity(kernel: BSplineKernel, delta: f64, m_half: usize, mode: SplineMode) -> Result<Self> {
        Self::from_knot_values(kernel, delta, m_half, mode, |x| x)
    }

    /// Sets each coefficient to `f` sampled at its knot, `c_m = f(mΔ)`.
    ///
    /// For kernels of order ≥ 1 this is exact wherever `f` is affine over the
    /// kernel support.
    pub fn from_knot_values(
        kernel: BSplineKernel,
        delta: f64,
        m_half: usize,
        mode: SplineMode,
        f: impl Fn(f64) -> f64,
    ) -> Result<Self> {
        let m = m_half as i64;
        let coeffs = match mode {
            SplineMode::General => (-m..=m).map(|k| f(k as f64 * delta)).collect(),
            SplineMode::Antisymmetric => (1..=m).map(|k| f(k as f64 * delta)).collect(),
        };
        Self::new(kernel, delta, m_half, mode, coeffs)
    }

    pub fn kernel(&self) -> BSplineKernel {
        self.kernel
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn m_half(&self) -> usize {
        self.m_half
    }

    pub fn mode(&self) -> SplineMode {
        self.mode
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn num_coeffs(&self) -> usize {
        self.coeffs.len()
    }

    pub fn with_coeffs(&self, coeffs: Vec<f64>) -> Result<Self> {
        Self::new(self.kernel, self.delta, self.m_half, self.mode, coeffs)
    }

    /// Half-width `R` of the interval on which the spline formula is used.
    pub fn knot_range(&self) -> f64 {
        (self.m_half as f64 - self.kernel.half_support()) * self.delta
    }

    /// Coefficient `c_m` of the full sequence, `m ∈ [−M, M]`. In
    /// antisymmetric mode `c_0 = 0` and `c_{−m} = −c_m`.
    pub fn full_coeff(&self, m: i64) -> f64 {
        let mh = self.m_half as i64;
        debug_assert!(m.abs() <= mh);
        match self.mode {
            SplineMode::General => self.coeffs[(m + mh) as usize],
            SplineMode::Antisymmetric => match m.signum() {
                1 => self.coeffs[(m - 1) as usize],
                -1 => -self.coeffs[(-m - 1) as usize],
                _ => 0.0,
            },
        }
    }

    pub fn full_coeffs(&self) -> Vec<f64> {
        let mh = self.m_half as i64;
        (-mh..=mh).map(|m| self.full_coeff(m)).collect()
    }

    /// `c_m − c_{m−1}` for `m = −M+1, …, M` over the full sequence.
    pub fn coefficient_increments(&self) -> Vec<f64> {
        self.full_coeffs().windows(2).map(|w| w[1] - w[0]).collect()
    }

    fn scaled_clamped(&self, x: f64) -> f64 {
        let r = self.knot_range();
        x.clamp(-r, r) / self.delta
    }

    /// Index window `[lo, hi]` of knots whose kernel can be nonzero at `t`.
    fn window(&self, t: f64) -> (i64, i64) {
        let h = self.kernel.half_support();
        let mh = self.m_half as i64;
        (((t - h).ceil() as i64).max(-mh), ((t + h).floor() as i64).min(mh))
    }

    pub fn eval(&self, x: f64) -> f64 {
        let t = self.scaled_clamped(x);
        let k = self.kernel;
        match self.mode {
            SplineMode::General => {
                let (lo, hi) = self.window(t);
                (lo..=hi).map(|m| self.full_coeff(m) * k.eval(t - m as f64)).sum()
            }
            SplineMode::Antisymmetric => {
                // Summing over |t| keeps T(−x) = −T(x) bit-exact.
                let (_, hi) = self.window(t.abs());
                let lo = ((t.abs() - k.half_support()).ceil() as i64).max(1);
                (lo..=hi)
                    .map(|i| {
                        let fi = i as f64;
                        self.coeffs[(i - 1) as usize] * (k.eval(t - fi) - k.eval(t + fi))
                    })
                    .sum()
            }
        }
    }

    /// Analytic derivative; zero in the constant extension.
    pub fn deriv(&self, x: f64) -> f64 {
        let r = self.knot_range();
        if !(x.abs() <= r) {
            return 0.0;
        }
        let t = x / self.delta;
        let k = self.kernel;
        let s: f64 = match self.mode {
            SplineMode::General => {
                let (lo, hi) = self.window(t);
                (lo..=hi).map(|m| self.full_coeff(m) * k.deriv(t - m as f64)).sum()
            }
            SplineMode::Antisymmetric => {
                let (_, hi) = self.window(t.abs());
                let lo = ((t.abs() - k.half_support()).ceil() as i64).max(1);
                (lo..=hi)
                    .map(|i| {
                        let fi = i as f64;
                        self.coeffs[(i - 1) as usize] * (k.deriv(t - fi) - k.deriv(t + fi))
                    })
                    .sum()
            }
        };
        s / self.delta
    }

    /// Calls `f(index, value)` for every basis function that is nonzero at
    /// `x`, where `index` addresses [`coeffs`](Self::coeffs). The basis is
    /// evaluated at the clamped point, so `Σ value · c[index] = T(x)` holds
    /// everywhere, including the constant extension.
    pub fn for_each_basis(&self, x: f64, mut f: impl FnMut(usize, f64)) {
        let t = self.scaled_clamped(x);
        let k = self.kernel;
        let mh = self.m_half as i64;
        match self.mode {
            SplineMode::General => {
                let (lo, hi) = self.window(t);
                for m in lo..=hi {
                    let w = k.eval(t - m as f64);
                    if w != 0.0 {
                        f((m + mh) as usize, w);
                    }
                }
            }
            SplineMode::Antisymmetric => {
                let (_, hi) = self.window(t.abs());
                let lo = ((t.abs() - k.half_support()).ceil() as i64).max(1);
                for i in lo..=hi {
                    let fi = i as f64;
                    let w = k.eval(t - fi) - k.eval(t + fi);
                    if w != 0.0 {
                        f((i - 1) as usize, w);
                    }
                }
            }
        }
    }

    /// Dense `num_coeffs × v.len()` matrix of basis values, entry `(i, j)`
    /// being the `i`-th basis function at `v_j`.
    pub fn basis_matrix(&self, v: &[f64]) -> Vec<Vec<f64>> {
        let mut out = vec![vec![0.0; v.len()]; self.num_coeffs()];
        for (j, &vj) in v.iter().enumerate() {
            self.for_each_basis(vj, |i, w| out[i][j] = w);
        }
        out
    }

    /// Checks `0 ≤ c_m − c_{m−1} ≤ Δ` on the full coefficient sequence and
    /// samples `0 ≤ T' ≤ 1` on `grid_points` points covering the knot range
    /// plus one knot of extension on either side.
    pub fn check_firmly_nonexpansive(&self, grid_points: usize) -> FirmNonexpansiveReport {
        let grid_points = grid_points.max(2);
        let incs = self.coefficient_increments();
        let min_increment = incs.iter().copied().fold(f64::INFINITY, f64::min);
        let max_increment = incs.iter().copied().fold(f64::NEG_INFINITY, f64::max);

        let span = self.knot_range() + self.delta;
        let (mut min_slope, mut max_slope) = (f64::INFINITY, f64::NEG_INFINITY);
        for j in 0..grid_points {
            let x = -span + 2.0 * span * j as f64 / (grid_points - 1) as f64;
            let s = self.deriv(x);
            min_slope = min_slope.min(s);
            max_slope = max_slope.max(s);
        }

        let tol = FNE_TOL;
        let reason = if min_increment < -tol {
            Some(format!("coefficient increment {min_increment:e} is negative"))
        } else if max_increment > self.delta + tol {
            Some(format!(
                "coefficient increment {max_increment:e} exceeds delta = {}",
                self.delta
            ))
        } else if min_slope < -tol || max_slope > 1.0 + tol {
            Some(format!("sampled slopes span [{min_slope:e}, {max_slope:e}]"))
        } else if self.kernel.order() == 0 && max_increment > tol {
            Some("order-0 splines are discontinuous".into())
        } else {
            None
        };
        FirmNonexpansiveReport {
            ok: reason.is_none(),
            min_slope,
            max_slope,
            min_increment,
            max_increment,
            reason,
        }
    }

    /// Errors unless [`check_firmly_nonexpansive`](Self::check_firmly_nonexpansive) passes.
    pub fn require_firmly_nonexpansive(&self) -> Result<()> {
        let report = self.check_firmly_nonexpansive(10_000);
        match report.reason {
            None => Ok(()),
            Some(reason) => Err(Error::NotFirmlyNonexpansive(reason)),
        }
    }
}

impl Shrinkage for ShrinkageSpline {
    #[inline]
    fn shrink(&self, x: f64) -> f64 {
        self.eval(x)
    }

    #[inline]
    fn slope(&self, x: f64) -> f64 {
        self.deriv(x)
    }
}

pub(crate) fn coeff_count(mode: SplineMode, m_half: usize) -> usize {
    match mode {
        SplineMode::General => 2 * m_half + 1,
        SplineMode::Antisymmetric => m_half,
    }
}
