//! Bandit instances: per-arm outcome laws, derived best arm and gaps, outcome
//! sampling, and the randomized instance generator used by the benchmark
//! studies.

use rand::seq::SliceRandom;
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha12Rng;
use rand_distr::{Distribution, Normal};

use crate::{Error, Result};

/// Deterministic per-trial random stream.
///
/// Streams built from the same `(master_seed, trial_index)` pair produce
/// identical draw sequences no matter how trials are scheduled or how many
/// workers run concurrently; that is what makes parallel Monte Carlo
/// reproducible. A stream is single-owner: never share one between trials.
pub struct RngStream(ChaCha12Rng);

impl RngStream {
    /// Builds the stream for one trial of one experiment.
    pub fn new(master_seed: u64, trial_index: u64) -> Self {
        // Two-word SplitMix64 chain over (master_seed, trial_index); distinct
        // pairs land on distinct cipher seeds up to negligible collision odds.
        let mut h = 0x243f_6a88_85a3_08d3u64;
        h = splitmix64(h ^ master_seed);
        h = splitmix64(h ^ trial_index);
        RngStream(ChaCha12Rng::seed_from_u64(h))
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

impl RngCore for RngStream {
    fn next_u32(&mut self) -> u32 {
        self.0.next_u32()
    }

    fn next_u64(&mut self) -> u64 {
        self.0.next_u64()
    }

    fn fill_bytes(&mut self, dest: &mut [u8]) {
        self.0.fill_bytes(dest)
    }
}

/// Outcome law of one arm.
#[derive(Clone, Debug, PartialEq)]
pub enum ArmLaw {
    /// Normal outcomes with the given mean and standard deviation.
    Gaussian { mean: f64, sd: f64 },
    /// Outcomes in {0, 1} with success probability `mean`.
    Bernoulli { mean: f64 },
}

impl ArmLaw {
    pub fn gaussian(mean: f64, sd: f64) -> Result<Self> {
        if !mean.is_finite() {
            return Err(Error::Validation(format!(
                "gaussian mean must be finite (got {mean})"
            )));
        }
        if !sd.is_finite() || sd <= 0.0 {
            return Err(Error::Validation(format!(
                "gaussian sd must be finite and positive (got {sd})"
            )));
        }
        Ok(ArmLaw::Gaussian { mean, sd })
    }

    pub fn bernoulli(mean: f64) -> Result<Self> {
        if !(mean > 0.0 && mean < 1.0) {
            return Err(Error::Validation(format!(
                "bernoulli mean must lie strictly inside (0,1) (got {mean})"
            )));
        }
        Ok(ArmLaw::Bernoulli { mean })
    }

    pub fn mean(&self) -> f64 {
        match *self {
            ArmLaw::Gaussian { mean, .. } | ArmLaw::Bernoulli { mean } => mean,
        }
    }

    /// Standard deviation; for Bernoulli this is √(μ(1−μ)).
    pub fn sd(&self) -> f64 {
        match *self {
            ArmLaw::Gaussian { sd, .. } => sd,
            ArmLaw::Bernoulli { mean } => (mean * (1.0 - mean)).sqrt(),
        }
    }

    pub fn variance(&self) -> f64 {
        match *self {
            ArmLaw::Gaussian { sd, .. } => sd * sd,
            ArmLaw::Bernoulli { mean } => mean * (1.0 - mean),
        }
    }

    /// Draws one outcome.
    pub fn sample(&self, rng: &mut RngStream) -> f64 {
        match *self {
            ArmLaw::Gaussian { mean, sd } => {
                // sd > 0 is a construction invariant, so this cannot fail.
                Normal::new(mean, sd).expect("positive sd").sample(rng)
            }
            ArmLaw::Bernoulli { mean } => {
                if rng.random::<f64>() < mean {
                    1.0
                } else {
                    0.0
                }
            }
        }
    }
}

/// The true environment: an ordered list of arms with a unique best mean.
///
/// Instances are immutable after construction and safe to share across
/// worker threads.
#[derive(Clone, Debug, PartialEq)]
pub struct BanditInstance {
    arms: Vec<ArmLaw>,
    best: usize,
}

impl BanditInstance {
    /// Validates and wraps a list of arms. Rejects fewer than two arms and
    /// exact ties for the largest mean: every downstream rate formula assumes
    /// a unique best arm.
    pub fn new(arms: Vec<ArmLaw>) -> Result<Self> {
        if arms.len() < 2 {
            return Err(Error::Validation(format!(
                "an instance needs at least 2 arms (got {})",
                arms.len()
            )));
        }
        let means: Vec<f64> = arms.iter().map(ArmLaw::mean).collect();
        let best = crate::argmax_tie_low(&means);
        let top = means[best];
        if means.iter().filter(|&&m| m == top).count() > 1 {
            return Err(Error::Validation(format!(
                "non-unique best arm: mean {top} appears more than once"
            )));
        }
        Ok(BanditInstance { arms, best })
    }

    pub fn k(&self) -> usize {
        self.arms.len()
    }

    pub fn arms(&self) -> &[ArmLaw] {
        &self.arms
    }

    /// 0-based index of the arm with the largest mean.
    pub fn best_arm(&self) -> usize {
        self.best
    }

    pub fn means(&self) -> Vec<f64> {
        self.arms.iter().map(ArmLaw::mean).collect()
    }

    pub fn sds(&self) -> Vec<f64> {
        self.arms.iter().map(ArmLaw::sd).collect()
    }

    pub fn variances(&self) -> Vec<f64> {
        self.arms.iter().map(ArmLaw::variance).collect()
    }

    /// Per-arm suboptimality gaps Δ_a = μ_best − μ_a; zero at the best arm,
    /// strictly positive elsewhere.
    pub fn gaps(&self) -> Vec<f64> {
        let best_mean = self.arms[self.best].mean();
        self.arms.iter().map(|a| best_mean - a.mean()).collect()
    }

    /// Draws one outcome from the given arm (0-based).
    pub fn sample_outcome(&self, arm: usize, rng: &mut RngStream) -> Result<f64> {
        match self.arms.get(arm) {
            Some(law) => Ok(law.sample(rng)),
            None => Err(Error::Validation(format!(
                "arm index {arm} out of range for K={}",
                self.k()
            ))),
        }
    }
}

/// Gaussian instance from explicit moments.
pub fn make_gaussian_instance(means: &[f64], sds: &[f64]) -> Result<BanditInstance> {
    if means.len() != sds.len() {
        return Err(Error::Validation(format!(
            "means and sds must have equal length (got {} and {})",
            means.len(),
            sds.len()
        )));
    }
    let arms = means
        .iter()
        .zip(sds)
        .map(|(&m, &s)| ArmLaw::gaussian(m, s))
        .collect::<Result<Vec<_>>>()?;
    BanditInstance::new(arms)
}

/// Bernoulli instance; per-arm variance is μ(1−μ).
pub fn make_bernoulli_instance(means: &[f64]) -> Result<BanditInstance> {
    let arms = means
        .iter()
        .map(|&m| ArmLaw::bernoulli(m))
        .collect::<Result<Vec<_>>>()?;
    BanditInstance::new(arms)
}

/// Mean layout of a generated instance.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MeanPattern {
    /// μ₁ = 1.0, μ₂ = 0.9, remaining means drawn Uniform[0.90, 0.95).
    TwoFixed,
    /// μ₁ = 1.0 and every other mean pinned at 0.95.
    AllNinetyFive,
}

/// Outcome family of a generated instance.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum OutcomeKind {
    Gaussian,
    Bernoulli,
}

/// Smallest standard deviation present in every generated instance.
pub const SIGMA_LOW: f64 = 0.1;

/// Parameters of the randomized benchmark instance family.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GeneratorSpec {
    pub k: usize,
    pub mu_pattern: MeanPattern,
    /// Largest standard deviation; must exceed [`SIGMA_LOW`].
    pub sigma_bar: f64,
    pub distribution_kind: OutcomeKind,
}

/// Draws one benchmark instance: means per the pattern, standard deviations a
/// uniformly random permutation of {σ̄, 0.1, u₃, …, u_K} with each uᵢ drawn
/// Uniform[0.1, σ̄).
///
/// The draw order is fixed (free means in arm order, then free sds, then the
/// permutation), so a given (spec, stream) pair always yields the same
/// instance.
pub fn generate_instance(spec: &GeneratorSpec, rng: &mut RngStream) -> Result<BanditInstance> {
    if spec.k < 2 || spec.k > 64 {
        return Err(Error::Validation(format!(
            "generator supports 2 <= K <= 64 (got {})",
            spec.k
        )));
    }
    if !spec.sigma_bar.is_finite() || spec.sigma_bar <= SIGMA_LOW {
        return Err(Error::Validation(format!(
            "sigma_bar must exceed {SIGMA_LOW} (got {})",
            spec.sigma_bar
        )));
    }
    if spec.distribution_kind == OutcomeKind::Bernoulli {
        return Err(Error::Validation(
            "the generator produces gaussian instances only: its means and sds \
             (up to sigma_bar) have no bernoulli counterpart"
                .into(),
        ));
    }

    let mut means = Vec::with_capacity(spec.k);
    match spec.mu_pattern {
        MeanPattern::TwoFixed => {
            means.push(1.0);
            means.push(0.9);
            for _ in 2..spec.k {
                means.push(rng.random_range(0.90..0.95));
            }
        }
        MeanPattern::AllNinetyFive => {
            means.push(1.0);
            means.resize(spec.k, 0.95);
        }
    }

    let mut sds = Vec::with_capacity(spec.k);
    sds.push(spec.sigma_bar);
    sds.push(SIGMA_LOW);
    for _ in 2..spec.k {
        sds.push(rng.random_range(SIGMA_LOW..spec.sigma_bar));
    }
    sds.shuffle(rng);

    make_gaussian_instance(&means, &sds)
}
