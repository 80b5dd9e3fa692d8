//! Lévy-process test signals, additive white Gaussian noise and the
//! finite-difference whitening operator.
//!
//! Signals are cumulative sums of i.i.d. increments with the process anchored
//! at zero (`x_0 = 0`), so the difference operator `L` is square, lower
//! bidiagonal and invertible.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const INCREMENT_SALT: u64 = 0x1e5f_a7c3_0000_0001;
const NOISE_SALT: u64 = 0x7a11_0b5e_0000_0002;

/// Generating model of the innovation `u = Lx`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum LevyModel {
    /// Unit-variance Gaussian increments.
    BrownianMotion,
    /// Bernoulli-Gaussian increments: zero with probability `e^{-rate}`,
    /// otherwise standard normal.
    CompoundPoisson { rate: f64 },
}

impl LevyModel {
    pub fn compound_poisson(rate: f64) -> Result<Self> {
        let model = LevyModel::CompoundPoisson { rate };
        model.validate()?;
        Ok(model)
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            LevyModel::BrownianMotion => Ok(()),
            LevyModel::CompoundPoisson { rate } if rate > 0.0 && rate.is_finite() => Ok(()),
            LevyModel::CompoundPoisson { rate } => Err(Error::InvalidParameter(format!(
                "Poisson rate must be positive, got {rate}"
            ))),
        }
    }

    /// Probability that an increment is exactly zero.
    pub fn zero_probability(&self) -> f64 {
        match *self {
            LevyModel::BrownianMotion => 0.0,
            LevyModel::CompoundPoisson { rate } => (-rate).exp(),
        }
    }

    /// Short name used in file formats and reports.
    pub fn name(&self) -> &'static str {
        match self {
            LevyModel::BrownianMotion => "brownian",
            LevyModel::CompoundPoisson { .. } => "compound-poisson",
        }
    }

    pub fn rate(&self) -> Option<f64> {
        match *self {
            LevyModel::BrownianMotion => None,
            LevyModel::CompoundPoisson { rate } => Some(rate),
        }
    }

    pub fn from_name(name: &str, rate: Option<f64>) -> Result<Self> {
        match name {
            "brownian" | "brownian-motion" => Ok(LevyModel::BrownianMotion),
            "compound-poisson" | "poisson" => {
                let rate = rate.ok_or_else(|| {
                    Error::InvalidParameter("compound-poisson requires a rate (lambda)".into())
                })?;
                LevyModel::compound_poisson(rate)
            }
            other => Err(Error::InvalidParameter(format!("unknown model {other:?}"))),
        }
    }

    fn sample_increment<R: Rng>(&self, rng: &mut R) -> f64 {
        match *self {
            LevyModel::BrownianMotion => rng.sample(StandardNormal),
            LevyModel::CompoundPoisson { rate } => {
                // Both draws are always taken so the stream layout does not
                // depend on the outcome.
                let jump: f64 = rng.sample(StandardNormal);
                let coin: f64 = rng.random();
                if coin < (-rate).exp() {
                    0.0
                } else {
                    jump
                }
            }
        }
    }
}

/// SplitMix64 finalizer, used to derive independent sub-seeds.
pub fn mix_seed(seed: u64, salt: u64) -> u64 {
    let mut z = seed ^ salt.wrapping_mul(0x9e37_79b9_7f4a_7c15);
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

fn stream_rng(seed: u64, salt: u64, index: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(mix_seed(seed, salt));
    rng.set_stream(index as u64);
    rng
}

/// Draws `count` clean signals of length `n`.
///
/// Each signal has its own ChaCha stream, so the output does not depend on the
/// number of worker threads.
pub fn generate(model: LevyModel, n: usize, count: usize, seed: u64) -> Result<Vec<Vec<f64>>> {
    model.validate()?;
    if n == 0 || count == 0 {
        return Err(Error::InvalidParameter(
            "signal length and count must be at least 1".into(),
        ));
    }
    Ok((0..count)
        .into_par_iter()
        .map(|idx| {
            let mut rng = stream_rng(seed, INCREMENT_SALT, idx);
            let increments: Vec<f64> = (0..n).map(|_| model.sample_increment(&mut rng)).collect();
            cumulative_sum(&increments)
        })
        .collect())
}

/// Clean/noisy signal pairs with their generating parameters.
#[derive(Clone, Debug, PartialEq)]
pub struct SignalBatch {
    pub clean: Vec<Vec<f64>>,
    pub noisy: Vec<Vec<f64>>,
    pub noise_variance: f64,
    pub model: LevyModel,
    pub seed: u64,
}

/// Adds i.i.d. `N(0, sigma2)` noise to every clean signal.
pub fn add_awgn(
    clean: Vec<Vec<f64>>,
    model: LevyModel,
    sigma2: f64,
    seed: u64,
) -> Result<SignalBatch> {
    if !(sigma2 > 0.0 && sigma2.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "noise variance must be positive, got {sigma2}"
        )));
    }
    let sigma = sigma2.sqrt();
    let noisy = clean
        .par_iter()
        .enumerate()
        .map(|(idx, x)| {
            let mut rng = stream_rng(seed, NOISE_SALT, idx);
            x.iter()
                .map(|&xi| {
                    let n: f64 = rng.sample(StandardNormal);
                    xi + sigma * n
                })
                .collect()
        })
        .collect();
    Ok(SignalBatch {
        clean,
        noisy,
        noise_variance: sigma2,
        model,
        seed,
    })
}

impl SignalBatch {
    /// Generates clean signals and their noisy observations from one seed.
    pub fn simulate(
        model: LevyModel,
        n: usize,
        count: usize,
        sigma2: f64,
        seed: u64,
    ) -> Result<Self> {
        let clean = generate(model, n, count, seed)?;
        add_awgn(clean, model, sigma2, seed)
    }

    pub fn len(&self) -> usize {
        self.clean.len()
    }

    pub fn is_empty(&self) -> bool {
        self.clean.is_empty()
    }

    /// Common signal length (0 for an empty batch).
    pub fn signal_len(&self) -> usize {
        self.clean.first().map_or(0, Vec::len)
    }

    pub fn sigma(&self) -> f64 {
        self.noise_variance.sqrt()
    }

    pub fn validate(&self) -> Result<()> {
        if self.clean.len() != self.noisy.len() {
            return Err(Error::DimensionMismatch {
                expected: self.clean.len(),
                found: self.noisy.len(),
            });
        }
        let n = self.signal_len();
        for (x, y) in self.clean.iter().zip(&self.noisy) {
            crate::error::check_len(n, x.len())?;
            crate::error::check_len(n, y.len())?;
        }
        self.model.validate()
    }

    pub fn pairs(&self) -> impl Iterator<Item = (&[f64], &[f64])> {
        self.clean
            .iter()
            .zip(&self.noisy)
            .map(|(x, y)| (x.as_slice(), y.as_slice()))
    }

    /// Sub-batch with the given signal indices, in that order.
    pub fn select(&self, indices: &[usize]) -> SignalBatch {
        SignalBatch {
            clean: indices.iter().map(|&i| self.clean[i].clone()).collect(),
            noisy: indices.iter().map(|&i| self.noisy[i].clone()).collect(),
            ..self.clone_meta()
        }
    }

    fn clone_meta(&self) -> SignalBatch {
        SignalBatch {
            clean: Vec::new(),
            noisy: Vec::new(),
            noise_variance: self.noise_variance,
            model: self.model,
            seed: self.seed,
        }
    }
}

#[derive(Serialize, Deserialize)]
struct BatchFile {
    model: String,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    lambda: Option<f64>,
    n: usize,
    sigma2: f64,
    seed: u64,
    clean: Vec<Vec<f64>>,
    noisy: Vec<Vec<f64>>,
}

impl Serialize for SignalBatch {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        BatchFile {
            model: self.model.name().to_string(),
            lambda: self.model.rate(),
            n: self.signal_len(),
            sigma2: self.noise_variance,
            seed: self.seed,
            clean: self.clean.clone(),
            noisy: self.noisy.clone(),
        }
        .serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for SignalBatch {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        let file = BatchFile::deserialize(deserializer)?;
        let model = LevyModel::from_name(&file.model, file.lambda).map_err(D::Error::custom)?;
        let batch = SignalBatch {
            clean: file.clean,
            noisy: file.noisy,
            noise_variance: file.sigma2,
            model,
            seed: file.seed,
        };
        batch.validate().map_err(D::Error::custom)?;
        if !batch.is_empty() && batch.signal_len() != file.n {
            return Err(D::Error::custom(format!(
                "declared length {} does not match signals of length {}",
                file.n,
                batch.signal_len()
            )));
        }
        Ok(batch)
    }
}

/// Finite-difference operator `[Lx]_i = x_i − x_{i−1}` with `x_0 = 0`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct DifferenceOperator {
    pub n: usize,
}

impl DifferenceOperator {
    pub fn new(n: usize) -> Self {
        DifferenceOperator { n }
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        debug_assert_eq!(x.len(), self.n);
        apply_l(x)
    }

    pub fn apply_transpose(&self, u: &[f64]) -> Vec<f64> {
        debug_assert_eq!(u.len(), self.n);
        apply_lt(u)
    }

    /// `L⁻¹`, i.e. the cumulative sum.
    pub fn invert(&self, u: &[f64]) -> Vec<f64> {
        cumulative_sum(u)
    }
}

pub fn apply_l(x: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; x.len()];
    apply_l_into(x, &mut out);
    out
}

/// `[Lᵀu]_i = u_i − u_{i+1}` with `u_{N+1} = 0`.
pub fn apply_lt(u: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; u.len()];
    apply_lt_into(u, &mut out);
    out
}

pub(crate) fn apply_l_into(x: &[f64], out: &mut [f64]) {
    let mut prev = 0.0;
    for (o, &xi) in out.iter_mut().zip(x) {
        *o = xi - prev;
        prev = xi;
    }
}

pub(crate) fn apply_lt_into(u: &[f64], out: &mut [f64]) {
    let n = u.len();
    for i in 0..n {
        let next = if i + 1 < n { u[i + 1] } else { 0.0 };
        out[i] = u[i] - next;
    }
}

pub fn cumulative_sum(u: &[f64]) -> Vec<f64> {
    u.iter()
        .scan(0.0, |acc, &ui| {
            *acc += ui;
            Some(*acc)
        })
        .collect()
}
