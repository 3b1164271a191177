//! Disjoint LinUCB contextual bandit over the λ grid.
//!
//! Each arm `a` (one per candidate λ) keeps ridge-regression statistics
//! `A_a = I + Σ x xᵀ` and `b_a = Σ r·x` over the contexts it was played on.
//! An arm's score for context `x` is the ridge estimate plus an optimism
//! bonus:
//!
//! ```text
//! p_a = θ_aᵀx + α·sqrt(xᵀ A_a⁻¹ x),    θ_a = A_a⁻¹ b_a
//! ```
//!
//! The context is the raw sentence embedding, unnormalized and without an
//! appended bias feature. Ties always break toward the smallest λ (the
//! minimal shift). `A_a⁻¹·` is evaluated with an SPD Cholesky solve.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::classifier::LinearClassifier;
use crate::geometry::{transfer, Embedding, Hyperplane};
use crate::linalg::{dot, SquareMat};
use crate::reward::{total_reward, BleuConfig};
use crate::scalar::Real;
use crate::Codec;

#[derive(Debug, Error, PartialEq)]
pub enum BanditError {
    #[error("lambda grid must be nonempty")]
    EmptyGrid,
    #[error("lambda grid must be strictly ascending and ≥ 0 (position {0})")]
    BadGrid(usize),
    #[error("context dimension must be at least 1")]
    BadDim,
    #[error("exploration parameter must be ≥ 0 and finite, got {0}")]
    BadAlpha(f64),
    #[error("dimension mismatch: bandit has {expected}, context has {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("arm index {arm} out of range for {arms} arms")]
    ArmOutOfRange { arm: usize, arms: usize },
    #[error("reward must lie in [0, 1], got {0}")]
    RewardOutOfRange(f64),
    #[error("per-arm statistics are not positive definite")]
    NotPositiveDefinite,
    #[error("training corpus is empty")]
    EmptyCorpus,
    #[error("epochs must be at least 1")]
    BadEpochs,
}

/// One training round: which arm was played on which round and what it paid.
#[derive(Debug, Clone, PartialEq)]
pub struct BanditRound<T> {
    pub round: usize,
    pub arm: usize,
    pub lambda: T,
    pub reward: T,
    pub running_mean: T,
}

/// Full per-round record of a training run.
#[derive(Debug, Clone, PartialEq)]
pub struct BanditTrainLog<T> {
    rounds: Vec<BanditRound<T>>,
}

impl<T> Default for BanditTrainLog<T> {
    fn default() -> Self {
        Self { rounds: Vec::new() }
    }
}

impl<T: Real> BanditTrainLog<T> {
    pub fn rounds(&self) -> &[BanditRound<T>] {
        &self.rounds
    }

    pub fn len(&self) -> usize {
        self.rounds.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rounds.is_empty()
    }

    /// Mean reward over the final `count` rounds (or all, if fewer).
    pub fn mean_reward_of_last(&self, count: usize) -> T {
        let tail = &self.rounds[self.rounds.len().saturating_sub(count)..];
        if tail.is_empty() {
            return T::zero();
        }
        tail.iter().map(|r| r.reward).sum::<T>() / T::from_usize(tail.len()).unwrap()
    }

    fn push(&mut self, arm: usize, lambda: T, reward: T) {
        let round = self.rounds.len();
        let prev_total = self
            .rounds
            .last()
            .map(|r| r.running_mean * T::from_usize(round).unwrap())
            .unwrap_or_else(T::zero);
        let running_mean = (prev_total + reward) / T::from_usize(round + 1).unwrap();
        self.rounds.push(BanditRound {
            round,
            arm,
            lambda,
            reward,
            running_mean,
        });
    }
}

/// LinUCB state: one (A, b) pair per λ arm.
#[derive(Debug, Clone, PartialEq)]
pub struct LinUcb<T> {
    arms: Vec<T>,
    alpha: T,
    dim: usize,
    a_mats: Vec<SquareMat<T>>,
    b_vecs: Vec<Vec<T>>,
}

fn validate_grid<T: Real>(grid: &[T]) -> Result<(), BanditError> {
    if grid.is_empty() {
        return Err(BanditError::EmptyGrid);
    }
    for (i, &v) in grid.iter().enumerate() {
        if !v.is_finite() || v < T::zero() {
            return Err(BanditError::BadGrid(i));
        }
        if i > 0 && v <= grid[i - 1] {
            return Err(BanditError::BadGrid(i));
        }
    }
    Ok(())
}

impl<T: Real> LinUcb<T> {
    /// Fresh bandit: `A_a = I`, `b_a = 0` for every arm.
    pub fn new(lambda_grid: &[T], dim: usize, alpha: T) -> Result<Self, BanditError> {
        validate_grid(lambda_grid)?;
        if dim == 0 {
            return Err(BanditError::BadDim);
        }
        if !alpha.is_finite() || alpha < T::zero() {
            return Err(BanditError::BadAlpha(alpha.as_f64()));
        }
        Ok(Self {
            arms: lambda_grid.to_vec(),
            alpha,
            dim,
            a_mats: vec![SquareMat::identity(dim); lambda_grid.len()],
            b_vecs: vec![vec![T::zero(); dim]; lambda_grid.len()],
        })
    }

    /// Rebuilds a bandit from persisted statistics, re-checking invariants
    /// (grid shape, dimensions, positive definiteness of every `A_a`).
    pub fn from_parts(
        lambda_grid: Vec<T>,
        dim: usize,
        alpha: T,
        a_mats: Vec<SquareMat<T>>,
        b_vecs: Vec<Vec<T>>,
    ) -> Result<Self, BanditError> {
        validate_grid(&lambda_grid)?;
        if dim == 0 {
            return Err(BanditError::BadDim);
        }
        if !alpha.is_finite() || alpha < T::zero() {
            return Err(BanditError::BadAlpha(alpha.as_f64()));
        }
        if a_mats.len() != lambda_grid.len() || b_vecs.len() != lambda_grid.len() {
            return Err(BanditError::ArmOutOfRange {
                arm: a_mats.len().min(b_vecs.len()),
                arms: lambda_grid.len(),
            });
        }
        for m in &a_mats {
            if m.dim() != dim {
                return Err(BanditError::DimensionMismatch {
                    expected: dim,
                    found: m.dim(),
                });
            }
            if m.cholesky().is_none() {
                return Err(BanditError::NotPositiveDefinite);
            }
        }
        for b in &b_vecs {
            if b.len() != dim {
                return Err(BanditError::DimensionMismatch {
                    expected: dim,
                    found: b.len(),
                });
            }
        }
        Ok(Self {
            arms: lambda_grid,
            alpha,
            dim,
            a_mats,
            b_vecs,
        })
    }

    pub fn arms(&self) -> &[T] {
        &self.arms
    }

    pub fn alpha(&self) -> T {
        self.alpha
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Raw per-arm statistics, for persistence.
    pub fn arm_stats(&self, arm: usize) -> Result<(&SquareMat<T>, &[T]), BanditError> {
        self.check_arm(arm)?;
        Ok((&self.a_mats[arm], &self.b_vecs[arm]))
    }

    fn check_arm(&self, arm: usize) -> Result<(), BanditError> {
        if arm >= self.arms.len() {
            return Err(BanditError::ArmOutOfRange {
                arm,
                arms: self.arms.len(),
            });
        }
        Ok(())
    }

    fn check_context(&self, x: &Embedding<T>) -> Result<(), BanditError> {
        if x.dim() != self.dim {
            return Err(BanditError::DimensionMismatch {
                expected: self.dim,
                found: x.dim(),
            });
        }
        Ok(())
    }

    /// Ridge estimate `θ_a = A_a⁻¹ b_a`.
    pub fn theta(&self, arm: usize) -> Result<Vec<T>, BanditError> {
        self.check_arm(arm)?;
        let chol = self.a_mats[arm]
            .cholesky()
            .ok_or(BanditError::NotPositiveDefinite)?;
        Ok(chol.solve(&self.b_vecs[arm]))
    }

    /// UCB score per arm: `θ_aᵀx + α·sqrt(xᵀA_a⁻¹x)`.
    pub fn ucb_scores(&self, x: &Embedding<T>) -> Result<Vec<T>, BanditError> {
        self.scores(x, self.alpha)
    }

    fn scores(&self, x: &Embedding<T>, alpha: T) -> Result<Vec<T>, BanditError> {
        self.check_context(x)?;
        let mut out = Vec::with_capacity(self.arms.len());
        for (a_mat, b_vec) in self.a_mats.iter().zip(&self.b_vecs) {
            let chol = a_mat.cholesky().ok_or(BanditError::NotPositiveDefinite)?;
            let theta = chol.solve(b_vec);
            let mean = dot(&theta, x.values());
            let solved = chol.solve(x.values());
            let width_sq = dot(x.values(), &solved).max(T::zero());
            out.push(mean + alpha * width_sq.sqrt());
        }
        Ok(out)
    }

    /// Arm with the highest UCB score; ties break toward the smallest λ.
    pub fn select_arm(&self, x: &Embedding<T>) -> Result<usize, BanditError> {
        Ok(argmax_first(&self.ucb_scores(x)?))
    }

    /// Exploitation-only arm choice (α treated as 0), as used at inference.
    pub fn greedy_arm(&self, x: &Embedding<T>) -> Result<usize, BanditError> {
        Ok(argmax_first(&self.scores(x, T::zero())?))
    }

    /// The λ value behind [`Self::greedy_arm`].
    pub fn select_lambda_greedy(&self, x: &Embedding<T>) -> Result<T, BanditError> {
        Ok(self.arms[self.greedy_arm(x)?])
    }

    /// Records an observed reward: `A_a += x xᵀ`, `b_a += r·x`. Only the
    /// chosen arm's statistics change.
    pub fn update(&mut self, arm: usize, x: &Embedding<T>, reward: T) -> Result<(), BanditError> {
        self.check_arm(arm)?;
        self.check_context(x)?;
        if !reward.is_finite() || reward < T::zero() || reward > T::one() {
            return Err(BanditError::RewardOutOfRange(reward.as_f64()));
        }
        self.a_mats[arm].add_outer(x.values());
        for (b, &xi) in self.b_vecs[arm].iter_mut().zip(x.values()) {
            *b += reward * xi;
        }
        Ok(())
    }

    /// Runs the online training loop: for every sentence (seeded shuffled
    /// order, `epochs` passes) encode, predict the current label, target its
    /// complement, pick an arm, transfer, decode, score, update.
    ///
    /// Labels come from the classifier's own predictions, not gold
    /// annotations.
    pub fn train<C: Codec<T>>(
        &mut self,
        sentences: &[String],
        codec: &C,
        clf: &LinearClassifier<T>,
        epochs: usize,
        bleu_cfg: &BleuConfig<T>,
        seed: u64,
    ) -> crate::Result<BanditTrainLog<T>> {
        if sentences.is_empty() {
            return Err(BanditError::EmptyCorpus.into());
        }
        if epochs == 0 {
            return Err(BanditError::BadEpochs.into());
        }
        check_component_dims(self.dim, codec, clf)?;
        let hyperplane = clf.hyperplane()?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut log = BanditTrainLog::default();
        let mut order: Vec<usize> = (0..sentences.len()).collect();
        for _ in 0..epochs {
            order.shuffle(&mut rng);
            for &i in &order {
                let x = &sentences[i];
                let z = codec.encode(x)?;
                let arm = self.select_arm(&z)?;
                let lambda = self.arms[arm];
                let reward = steer_reward(clf, &hyperplane, codec, x, &z, lambda, bleu_cfg)?;
                self.update(arm, &z, reward)?;
                log.push(arm, lambda, reward);
            }
        }
        Ok(log)
    }
}

fn argmax_first<T: Real>(scores: &[T]) -> usize {
    let mut best = 0;
    for (i, &s) in scores.iter().enumerate().skip(1) {
        if s > scores[best] {
            best = i;
        }
    }
    best
}

fn check_component_dims<T: Real, C: Codec<T>>(
    dim: usize,
    codec: &C,
    clf: &LinearClassifier<T>,
) -> Result<(), BanditError> {
    for found in [codec.latent_dim(), clf.dim()] {
        if found != dim {
            return Err(BanditError::DimensionMismatch {
                expected: dim,
                found,
            });
        }
    }
    Ok(())
}

/// One environment step: transfer `x`'s embedding `z` by `lambda` across the
/// classifier's boundary toward the complement of its predicted label, decode,
/// and score the result.
pub fn steer_reward<T: Real, C: Codec<T>>(
    clf: &LinearClassifier<T>,
    hyperplane: &Hyperplane<T>,
    codec: &C,
    x: &str,
    z: &Embedding<T>,
    lambda: T,
    bleu_cfg: &BleuConfig<T>,
) -> crate::Result<T> {
    let y_target = !clf.predict_label(z)?;
    let z_prime = transfer(hyperplane, z, lambda)?;
    let x_prime = codec.decode(&z_prime)?;
    total_reward(clf, codec, x, &x_prime, y_target, bleu_cfg)
}

/// Plays the same environment as [`LinUcb::train`] but picks arms uniformly
/// at random and learns nothing: the reference policy for "did the bandit
/// actually learn".
///
/// The sentence order matches `train` for the same `seed` (the shuffle uses
/// its own stream); arm draws come from a separate stream derived from the
/// seed.
pub fn simulate_uniform_policy<T: Real, C: Codec<T>>(
    lambda_grid: &[T],
    sentences: &[String],
    codec: &C,
    clf: &LinearClassifier<T>,
    epochs: usize,
    bleu_cfg: &BleuConfig<T>,
    seed: u64,
) -> crate::Result<BanditTrainLog<T>> {
    validate_grid(lambda_grid).map_err(crate::Error::from)?;
    if sentences.is_empty() {
        return Err(BanditError::EmptyCorpus.into());
    }
    if epochs == 0 {
        return Err(BanditError::BadEpochs.into());
    }
    let hyperplane = clf.hyperplane()?;
    let mut shuffle_rng = ChaCha8Rng::seed_from_u64(seed);
    let mut arm_rng = ChaCha8Rng::seed_from_u64(seed ^ 0x9e37_79b9_7f4a_7c15);
    let mut log = BanditTrainLog::default();
    let mut order: Vec<usize> = (0..sentences.len()).collect();
    for _ in 0..epochs {
        order.shuffle(&mut shuffle_rng);
        for &i in &order {
            let x = &sentences[i];
            let z = codec.encode(x)?;
            let arm = arm_rng.random_range(0..lambda_grid.len());
            let lambda = lambda_grid[arm];
            let reward = steer_reward(clf, &hyperplane, codec, x, &z, lambda, bleu_cfg)?;
            log.push(arm, lambda, reward);
        }
    }
    Ok(log)
}
