//! B-spline kernels and the spline-parametrized shrinkage functions built on
//! them, together with the noise-level scaling of firmly nonexpansive
//! shrinkages and recovery of their convex penalty.

mod kernel;
mod penalty;
mod scaling;
mod shrinkage;

use std::path::Path;

use serde::{Deserialize, Serialize};

pub use kernel::{kernel_deriv, kernel_eval, BSplineKernel};
pub use penalty::{recover_penalty, symmetric_grid, PenaltyCurve};
pub use scaling::{scale_operator, ScaledShrinkage, DEFAULT_ROOT_TOL};
pub use shrinkage::{FirmNonexpansiveReport, ShrinkageSpline, SplineMode, FNE_TOL};

use crate::error::Result;

/// How a spline artifact was trained.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainingMeta {
    pub gamma: f64,
    pub iters: usize,
    #[serde(rename = "K")]
    pub k: usize,
    pub mu: f64,
    pub seed: u64,
    /// `"constrained"` or `"unconstrained"`.
    pub training: String,
}

/// Serialized form of a learned shrinkage function.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SplineArtifact {
    #[serde(flatten)]
    pub spline: ShrinkageSpline,
    #[serde(default)]
    pub trained_sigma2: Option<f64>,
    #[serde(default)]
    pub training_meta: Option<TrainingMeta>,
}

impl SplineArtifact {
    pub fn new(spline: ShrinkageSpline) -> Self {
        SplineArtifact {
            spline,
            trained_sigma2: None,
            training_meta: None,
        }
    }

    /// True when the artifact came from unconstrained training, or when it
    /// carries no metadata and is not antisymmetric.
    pub fn is_unconstrained(&self) -> bool {
        match &self.training_meta {
            Some(meta) => meta.training == "unconstrained",
            None => self.spline.mode() == SplineMode::General,
        }
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Ok(serde_json::from_str(&text)?)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}
