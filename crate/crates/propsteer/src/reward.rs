//! Bandit reward: sentence-level BLEU for content preservation, the
//! classifier's target-label likelihood for the property, and their harmonic
//! mean as the total.
//!
//! BLEU here is the sentence-level variant with epsilon smoothing (a clipped
//! count of zero contributes `ε/total` instead of zeroing the whole score) and
//! an n-gram order capped at the candidate length, so one- and two-token
//! sentences still receive graded scores.

use std::collections::HashMap;

use thiserror::Error;

use crate::classifier::{property_reward, ClassifierError, LinearClassifier};
use crate::scalar::Real;
use crate::Codec;

#[derive(Debug, Error, PartialEq)]
pub enum RewardError {
    #[error("candidate sentence has no tokens")]
    EmptyCandidate,
    #[error("reference sentence has no tokens")]
    EmptyReference,
    #[error(
        "brevity penalty needs positive lengths, got candidate {candidate}, reference {reference}"
    )]
    ZeroLength { candidate: usize, reference: usize },
    #[error("{name} must lie in [0, 1], got {value}")]
    OutOfRange { name: &'static str, value: f64 },
    #[error("invalid BLEU config: {0}")]
    BadConfig(&'static str),
    #[error(transparent)]
    Classifier(#[from] ClassifierError),
}

/// Sentence-level BLEU settings.
#[derive(Debug, Clone, PartialEq)]
pub struct BleuConfig<T> {
    max_n: usize,
    smoothing_epsilon: T,
}

impl<T: Real> BleuConfig<T> {
    pub fn new(max_n: usize, smoothing_epsilon: T) -> Result<Self, RewardError> {
        if !(1..=4).contains(&max_n) {
            return Err(RewardError::BadConfig("max_n must be in 1..=4"));
        }
        if !(smoothing_epsilon > T::zero() && smoothing_epsilon < T::one()) {
            return Err(RewardError::BadConfig(
                "smoothing_epsilon must lie in (0, 1)",
            ));
        }
        Ok(Self {
            max_n,
            smoothing_epsilon,
        })
    }

    pub fn max_n(&self) -> usize {
        self.max_n
    }

    pub fn smoothing_epsilon(&self) -> T {
        self.smoothing_epsilon
    }
}

impl<T: Real> Default for BleuConfig<T> {
    fn default() -> Self {
        Self {
            max_n: 4,
            smoothing_epsilon: T::from_f64_lossy(0.1),
        }
    }
}

/// Lowercases and splits on whitespace runs; empty pieces are dropped.
pub fn tokenize(s: &str) -> Vec<String> {
    s.to_lowercase()
        .split_whitespace()
        .map(str::to_owned)
        .collect()
}

/// Modified n-gram precision counts: `total` is the number of candidate
/// n-grams, `clipped` sums `min(count_cand, count_ref)` over candidate n-gram
/// types.
pub fn modified_ngram_precision(cand: &[String], reference: &[String], n: usize) -> (usize, usize) {
    assert!(n >= 1, "n-gram order must be at least 1");
    let total = (cand.len() + 1).saturating_sub(n);
    if total == 0 {
        return (0, 0);
    }
    let mut ref_counts: HashMap<&[String], usize> = HashMap::new();
    for gram in reference.windows(n) {
        *ref_counts.entry(gram).or_insert(0) += 1;
    }
    let mut cand_counts: HashMap<&[String], usize> = HashMap::new();
    for gram in cand.windows(n) {
        *cand_counts.entry(gram).or_insert(0) += 1;
    }
    let clipped = cand_counts
        .iter()
        .map(|(gram, &c)| c.min(ref_counts.get(gram).copied().unwrap_or(0)))
        .sum();
    (clipped, total)
}

/// `1` when the candidate is at least as long as the reference, otherwise
/// `exp(1 − r_len/c_len)`.
pub fn brevity_penalty<T: Real>(c_len: usize, r_len: usize) -> Result<T, RewardError> {
    if c_len == 0 || r_len == 0 {
        return Err(RewardError::ZeroLength {
            candidate: c_len,
            reference: r_len,
        });
    }
    if c_len >= r_len {
        Ok(T::one())
    } else {
        let ratio = T::from_usize(r_len).unwrap() / T::from_usize(c_len).unwrap();
        Ok((T::one() - ratio).exp())
    }
}

/// Sentence-level BLEU of `cand` against `reference`:
/// `BP · (∏ₙ pₙ)^(1/N)` with `N = min(max_n, len(cand))` and
/// `pₙ = clipped/total`, substituting `ε/total` when `clipped` is zero.
pub fn bleu<T: Real>(cand: &str, reference: &str, cfg: &BleuConfig<T>) -> Result<T, RewardError> {
    let cand_tokens = tokenize(cand);
    let ref_tokens = tokenize(reference);
    if cand_tokens.is_empty() {
        return Err(RewardError::EmptyCandidate);
    }
    if ref_tokens.is_empty() {
        return Err(RewardError::EmptyReference);
    }
    let n_max = cfg.max_n.min(cand_tokens.len());
    let mut product = T::one();
    for n in 1..=n_max {
        let (clipped, total) = modified_ngram_precision(&cand_tokens, &ref_tokens, n);
        let total_t = T::from_usize(total).unwrap();
        let p = if clipped == 0 {
            cfg.smoothing_epsilon / total_t
        } else {
            T::from_usize(clipped).unwrap() / total_t
        };
        product *= p;
    }
    let bp: T = brevity_penalty(cand_tokens.len(), ref_tokens.len())?;
    let exponent = T::one() / T::from_usize(n_max).unwrap();
    Ok(bp * product.powf(exponent))
}

/// Harmonic mean `2ab/(a+b)`, defined as 0 when either input is 0.
pub fn harmonic_reward<T: Real>(r_prop: T, r_content: T) -> Result<T, RewardError> {
    for (name, v) in [("r_prop", r_prop), ("r_content", r_content)] {
        if !(v >= T::zero() && v <= T::one()) {
            return Err(RewardError::OutOfRange {
                name,
                value: v.as_f64(),
            });
        }
    }
    if r_prop == T::zero() || r_content == T::zero() {
        return Ok(T::zero());
    }
    Ok(T::from_f64_lossy(2.0) * r_prop * r_content / (r_prop + r_content))
}

/// Full transfer reward for steering `x` into `x_prime` with target label
/// `y_target`: harmonic mean of the property reward on the *re-encoded*
/// transferred sentence and BLEU of the transferred sentence against the
/// original.
pub fn total_reward<T: Real, C: Codec<T>>(
    clf: &LinearClassifier<T>,
    codec: &C,
    x: &str,
    x_prime: &str,
    y_target: bool,
    cfg: &BleuConfig<T>,
) -> crate::Result<T> {
    let z_dec = codec.encode(x_prime)?;
    let r_prop = property_reward(clf, &z_dec, y_target).map_err(RewardError::from)?;
    let r_content = bleu(x_prime, x, cfg)?;
    Ok(harmonic_reward(r_prop, r_content)?)
}
