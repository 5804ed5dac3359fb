//! Bandit instances, optimal arms, simplex weights and the seeded Gaussian environment.
//!
//! Arms are indexed from 0 throughout the crate.

use std::fmt;

use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Structural assumption on the arm means.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Setting {
    /// No structure: any vector of means.
    NonMonotonic,
    /// Strictly increasing means; the target is the arm closest to the threshold.
    Increasing,
    /// Strictly increasing means; the target is the closest arm not above the threshold.
    BelowThreshold,
}

impl Setting {
    pub fn name(self) -> &'static str {
        match self {
            Setting::NonMonotonic => "NonMonotonic",
            Setting::Increasing => "Increasing",
            Setting::BelowThreshold => "BelowThreshold",
        }
    }
}

impl fmt::Display for Setting {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Setting {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "nonmonotonic" | "non-monotonic" | "m" => Ok(Setting::NonMonotonic),
            "increasing" | "i" => Ok(Setting::Increasing),
            "belowthreshold" | "below-threshold" | "below" => Ok(Setting::BelowThreshold),
            other => Err(Error::Config(format!("unknown setting '{other}'"))),
        }
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawInstance {
    mu: Vec<f64>,
    threshold: f64,
    setting: Setting,
}

/// Gaussian unit-variance bandit model with a threshold.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawInstance")]
pub struct BanditInstance {
    mu: Vec<f64>,
    threshold: f64,
    setting: Setting,
}

impl TryFrom<RawInstance> for BanditInstance {
    type Error = Error;

    fn try_from(raw: RawInstance) -> Result<Self> {
        BanditInstance::new(raw.mu, raw.threshold, raw.setting)
    }
}

impl BanditInstance {
    /// Validated constructor: `K >= 2`, finite values, strictly increasing means for the
    /// structured settings, and at least one arm at or below the threshold for
    /// [`Setting::BelowThreshold`].
    pub fn new(mu: Vec<f64>, threshold: f64, setting: Setting) -> Result<Self> {
        let inst = Self::empirical(mu, threshold, setting)?;
        if setting != Setting::NonMonotonic && inst.mu.windows(2).any(|p| p[0] >= p[1]) {
            return Err(Error::InvalidInstance(format!(
                "{setting} setting requires strictly increasing means, got {:?}",
                inst.mu
            )));
        }
        if setting == Setting::BelowThreshold && inst.mu[0] > threshold {
            return Err(Error::InvalidInstance(
                "below-threshold setting requires an arm with mean <= threshold".into(),
            ));
        }
        Ok(inst)
    }

    /// Model built from empirical means: only shape and finiteness are checked, the
    /// structural constraints of the setting are not.
    pub fn empirical(mu: Vec<f64>, threshold: f64, setting: Setting) -> Result<Self> {
        if mu.len() < 2 {
            return Err(Error::InvalidInstance(format!("need at least 2 arms, got {}", mu.len())));
        }
        if !threshold.is_finite() || mu.iter().any(|m| !m.is_finite()) {
            return Err(Error::InvalidInstance("means and threshold must be finite".into()));
        }
        Ok(Self { mu, threshold, setting })
    }

    pub fn mu(&self) -> &[f64] {
        &self.mu
    }

    pub fn threshold(&self) -> f64 {
        self.threshold
    }

    pub fn setting(&self) -> Setting {
        self.setting
    }

    pub fn k(&self) -> usize {
        self.mu.len()
    }

    pub fn with_setting(&self, setting: Setting) -> Result<Self> {
        Self::new(self.mu.clone(), self.threshold, setting)
    }

    pub fn is_strictly_increasing(&self) -> bool {
        self.mu.windows(2).all(|p| p[0] < p[1])
    }
}

/// Arm closest to the threshold, with the size of the argmin set.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct OptimalArm {
    pub index: usize,
    pub tie_count: usize,
}

impl OptimalArm {
    pub fn is_unique(&self) -> bool {
        self.tie_count == 1
    }
}

/// Smallest minimizer of `|mu_a - S|`, restricted to `mu_a <= S` in the below-threshold
/// setting. `None` only when that restriction leaves no candidate.
pub fn closest_arm(mu: &[f64], threshold: f64, setting: Setting) -> Option<OptimalArm> {
    let below = setting == Setting::BelowThreshold;
    let mut best: Option<(usize, f64)> = None;
    let mut ties = 0;
    for (a, &m) in mu.iter().enumerate() {
        if below && m > threshold {
            continue;
        }
        let d = (m - threshold).abs();
        match best {
            Some((_, bd)) if d > bd => {}
            Some((_, bd)) if d == bd => ties += 1,
            _ => {
                best = Some((a, d));
                ties = 1;
            }
        }
    }
    best.map(|(index, _)| OptimalArm { index, tie_count: ties })
}

pub fn optimal_arm(instance: &BanditInstance) -> Result<OptimalArm> {
    closest_arm(instance.mu(), instance.threshold(), instance.setting())
        .ok_or_else(|| Error::domain("no arm has a mean at or below the threshold"))
}

/// Point of the probability simplex.
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(transparent)]
pub struct Weights {
    w: Vec<f64>,
}

impl Weights {
    pub const SUM_TOLERANCE: f64 = 1e-12;

    pub fn new(w: Vec<f64>) -> Result<Self> {
        if w.is_empty() || w.iter().any(|x| !(x.is_finite() && *x >= 0.0)) {
            return Err(Error::domain("weights must be finite and nonnegative"));
        }
        let sum: f64 = w.iter().sum();
        if (sum - 1.0).abs() > Self::SUM_TOLERANCE {
            return Err(Error::domain(format!("weights sum to {sum}, not 1")));
        }
        Ok(Self { w })
    }

    /// Rescales a nonnegative vector with positive sum onto the simplex.
    pub fn normalized(mut w: Vec<f64>) -> Result<Self> {
        let sum: f64 = w.iter().sum();
        if !(sum > 0.0 && sum.is_finite()) || w.iter().any(|x| *x < 0.0) {
            return Err(Error::domain("cannot normalize weights"));
        }
        w.iter_mut().for_each(|x| *x /= sum);
        Ok(Self { w })
    }

    pub fn uniform(k: usize) -> Self {
        Self { w: vec![1.0 / k as f64; k] }
    }

    /// Uniform over `support`, zero elsewhere.
    pub fn uniform_over(k: usize, support: &[usize]) -> Self {
        let mut w = vec![0.0; k];
        for &a in support {
            w[a] = 1.0 / support.len() as f64;
        }
        Self { w }
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.w
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.w
    }

    pub fn len(&self) -> usize {
        self.w.len()
    }

    pub fn is_empty(&self) -> bool {
        self.w.is_empty()
    }
}

impl std::ops::Index<usize> for Weights {
    type Output = f64;

    fn index(&self, a: usize) -> &f64 {
        &self.w[a]
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Seed of the reward stream of one replication.
pub fn replication_seed(master_seed: u64, replication: u64) -> u64 {
    splitmix64(master_seed ^ splitmix64(replication))
}

// Each step owns four 32-bit words of the ChaCha stream, so step t can be reached
// directly with `set_word_pos(4 t)` and sequential consumption stays aligned.
const WORDS_PER_STEP: u128 = 4;

fn gaussian_from(rng: &mut ChaCha8Rng) -> f64 {
    let scale = 1.0 / (1u64 << 53) as f64;
    let u1 = ((rng.next_u64() >> 11) + 1) as f64 * scale;
    let u2 = (rng.next_u64() >> 11) as f64 * scale;
    (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
}

/// Gaussian arms with unit variance and a deterministic noise stream per replication.
///
/// The reward of step `t` in replication `r` is `mu[arm] + z(r, t)`, where `z` depends only
/// on `(master_seed, r, t)`.
#[derive(Clone, Debug)]
pub struct GaussianEnv {
    instance: BanditInstance,
    master_seed: u64,
}

impl GaussianEnv {
    pub fn new(instance: BanditInstance, master_seed: u64) -> Self {
        Self { instance, master_seed }
    }

    pub fn instance(&self) -> &BanditInstance {
        &self.instance
    }

    pub fn master_seed(&self) -> u64 {
        self.master_seed
    }

    pub fn replication_seed(&self, replication: u64) -> u64 {
        replication_seed(self.master_seed, replication)
    }

    /// Random-access draw; equal to the `step`-th pull of [`GaussianEnv::stream`].
    pub fn draw(&self, replication: u64, step: u64, arm: usize) -> Result<f64> {
        let k = self.instance.k();
        if arm >= k {
            return Err(Error::ArmOutOfRange { index: arm, k });
        }
        let mut rng = ChaCha8Rng::seed_from_u64(self.replication_seed(replication));
        rng.set_word_pos(WORDS_PER_STEP * step as u128);
        Ok(self.instance.mu()[arm] + gaussian_from(&mut rng))
    }

    pub fn stream(&self, replication: u64) -> RewardStream {
        RewardStream {
            rng: ChaCha8Rng::seed_from_u64(self.replication_seed(replication)),
            mu: self.instance.mu().to_vec(),
            step: 0,
        }
    }
}

/// Sequential reader of one replication's rewards.
pub struct RewardStream {
    rng: ChaCha8Rng,
    mu: Vec<f64>,
    step: u64,
}

impl RewardStream {
    /// Reward of `arm` at the next step. Panics if `arm` is out of range.
    pub fn pull(&mut self, arm: usize) -> f64 {
        self.step += 1;
        self.mu[arm] + gaussian_from(&mut self.rng)
    }

    pub fn steps(&self) -> u64 {
        self.step
    }
}
