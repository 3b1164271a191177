//! Binary logistic-regression property classifier.
//!
//! The classifier is the source of both the steering hyperplane (its decision
//! boundary) and the property reward (its predicted likelihood of the target
//! label). Training is plain full-batch gradient descent on the L2-regularized
//! mean negative log-likelihood: deterministic from a zero initialization, no
//! dependencies, and the objective is convex so nothing fancier is needed at
//! these sizes.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::geometry::{Embedding, GeometryError, Hyperplane};
use crate::linalg::dot;
use crate::scalar::Real;

#[derive(Debug, Error, PartialEq)]
pub enum ClassifierError {
    #[error("training data is empty")]
    Empty,
    #[error("training data contains only one class")]
    SingleClass,
    #[error("dimension mismatch: classifier has {expected}, embedding has {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("invalid training config: {0}")]
    BadConfig(&'static str),
    #[error("cross-validation needs at least 2 folds, got {0}")]
    BadFoldCount(usize),
    #[error("class {label} has {count} examples, fewer than {folds} folds")]
    TooFewPerClass {
        label: u8,
        count: usize,
        folds: usize,
    },
    #[error("classifier weights are all zero; no decision boundary to extract")]
    ZeroWeights,
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

/// An embedding with its binary property label.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledEmbedding<T> {
    pub embedding: Embedding<T>,
    pub label: bool,
}

impl<T: Real> LabeledEmbedding<T> {
    pub fn new(embedding: Embedding<T>, label: bool) -> Self {
        Self { embedding, label }
    }
}

/// Gradient-descent settings for [`LinearClassifier::train`].
#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig<T> {
    pub learning_rate: T,
    pub l2_penalty: T,
    pub max_iters: usize,
    pub grad_tol: T,
    /// Seeds fold assignment in [`cross_validate`]; the solver itself is
    /// deterministic.
    pub seed: u64,
}

impl<T: Real> Default for TrainConfig<T> {
    fn default() -> Self {
        Self {
            learning_rate: T::from_f64_lossy(0.1),
            l2_penalty: T::from_f64_lossy(1e-4),
            max_iters: 5000,
            grad_tol: T::from_f64_lossy(1e-8),
            seed: 0,
        }
    }
}

impl<T: Real> TrainConfig<T> {
    fn validate(&self) -> Result<(), ClassifierError> {
        if self.learning_rate <= T::zero() || !self.learning_rate.is_finite() {
            return Err(ClassifierError::BadConfig("learning_rate must be > 0"));
        }
        if self.l2_penalty < T::zero() || !self.l2_penalty.is_finite() {
            return Err(ClassifierError::BadConfig("l2_penalty must be ≥ 0"));
        }
        if self.max_iters == 0 {
            return Err(ClassifierError::BadConfig("max_iters must be ≥ 1"));
        }
        if self.grad_tol <= T::zero() || !self.grad_tol.is_finite() {
            return Err(ClassifierError::BadConfig("grad_tol must be > 0"));
        }
        Ok(())
    }
}

/// Logistic model `p(y=1|z) = σ(w·z + b)`.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearClassifier<T> {
    weights: Vec<T>,
    bias: T,
}

/// Numerically stable logistic function `1/(1+e^(−t))`.
pub fn sigmoid<T: Real>(t: T) -> T {
    if t >= T::zero() {
        T::one() / (T::one() + (-t).exp())
    } else {
        let e = t.exp();
        e / (T::one() + e)
    }
}

/// `ln(1 + e^t)` without overflow for large |t|.
fn softplus<T: Real>(t: T) -> T {
    t.max(T::zero()) + (-t.abs()).exp().ln_1p()
}

/// Training objective: mean negative log-likelihood plus `(l2/2)·‖w‖²`
/// (the bias is not penalized).
pub fn regularized_loss<T: Real>(
    data: &[LabeledEmbedding<T>],
    weights: &[T],
    bias: T,
    l2_penalty: T,
) -> T {
    let m = T::from_usize(data.len()).unwrap();
    let nll: T = data
        .iter()
        .map(|ex| {
            let t = dot(weights, ex.embedding.values()) + bias;
            // −ln σ(t) for label 1, −ln(1−σ(t)) for label 0
            if ex.label {
                softplus(-t)
            } else {
                softplus(t)
            }
        })
        .sum();
    let half = T::from_f64_lossy(0.5);
    nll / m + half * l2_penalty * dot(weights, weights)
}

/// Analytic gradient of [`regularized_loss`]; returns (∂w, ∂b).
pub fn loss_gradient<T: Real>(
    data: &[LabeledEmbedding<T>],
    weights: &[T],
    bias: T,
    l2_penalty: T,
) -> (Vec<T>, T) {
    let m = T::from_usize(data.len()).unwrap();
    let mut grad_w = vec![T::zero(); weights.len()];
    let mut grad_b = T::zero();
    for ex in data {
        let t = dot(weights, ex.embedding.values()) + bias;
        let y = if ex.label { T::one() } else { T::zero() };
        let residual = sigmoid(t) - y;
        for (g, &zi) in grad_w.iter_mut().zip(ex.embedding.values()) {
            *g += residual * zi;
        }
        grad_b += residual;
    }
    for (g, &wi) in grad_w.iter_mut().zip(weights) {
        *g = *g / m + l2_penalty * wi;
    }
    (grad_w, grad_b / m)
}

impl<T: Real> LinearClassifier<T> {
    /// Builds a classifier from raw weights, e.g. when loading from disk.
    pub fn from_parts(weights: Vec<T>, bias: T) -> Result<Self, ClassifierError> {
        if weights.is_empty() {
            return Err(ClassifierError::Geometry(GeometryError::Empty));
        }
        if let Some(i) = weights.iter().position(|v| !v.is_finite()) {
            return Err(ClassifierError::Geometry(GeometryError::NonFinite(i)));
        }
        if !bias.is_finite() {
            return Err(ClassifierError::Geometry(GeometryError::NonFinite(
                weights.len(),
            )));
        }
        Ok(Self { weights, bias })
    }

    /// Fits L2-regularized logistic regression by full-batch gradient descent
    /// from zero weights, stopping at `grad_tol` (gradient sup-norm) or
    /// `max_iters`.
    pub fn train(
        data: &[LabeledEmbedding<T>],
        cfg: &TrainConfig<T>,
    ) -> Result<Self, ClassifierError> {
        cfg.validate()?;
        let dim = check_uniform(data)?;
        if !data.iter().any(|ex| ex.label) || !data.iter().any(|ex| !ex.label) {
            return Err(ClassifierError::SingleClass);
        }

        let mut weights = vec![T::zero(); dim];
        let mut bias = T::zero();
        for _ in 0..cfg.max_iters {
            let (grad_w, grad_b) = loss_gradient(data, &weights, bias, cfg.l2_penalty);
            let sup = grad_w.iter().fold(grad_b.abs(), |acc, g| acc.max(g.abs()));
            if sup <= cfg.grad_tol {
                break;
            }
            for (w, g) in weights.iter_mut().zip(&grad_w) {
                *w -= cfg.learning_rate * *g;
            }
            bias -= cfg.learning_rate * grad_b;
            if !bias.is_finite() || weights.iter().any(|w| !w.is_finite()) {
                return Err(ClassifierError::BadConfig(
                    "gradient descent diverged; reduce learning_rate",
                ));
            }
        }
        Ok(Self { weights, bias })
    }

    pub fn dim(&self) -> usize {
        self.weights.len()
    }

    pub fn weights(&self) -> &[T] {
        &self.weights
    }

    pub fn bias(&self) -> T {
        self.bias
    }

    fn activation(&self, z: &Embedding<T>) -> Result<T, ClassifierError> {
        if z.dim() != self.dim() {
            return Err(ClassifierError::DimensionMismatch {
                expected: self.dim(),
                found: z.dim(),
            });
        }
        Ok(dot(&self.weights, z.values()) + self.bias)
    }

    /// `σ(w·z + b)`.
    pub fn predict_proba(&self, z: &Embedding<T>) -> Result<T, ClassifierError> {
        Ok(sigmoid(self.activation(z)?))
    }

    /// Label 1 iff the predicted probability is ≥ 0.5 (a tie at exactly 0.5
    /// resolves to label 1).
    pub fn predict_label(&self, z: &Embedding<T>) -> Result<bool, ClassifierError> {
        Ok(self.activation(z)? >= T::zero())
    }

    /// The decision boundary as a [`Hyperplane`]; fails when the weights are
    /// all zero (an untrained or fully regularized model cannot steer).
    pub fn hyperplane(&self) -> Result<Hyperplane<T>, ClassifierError> {
        if self.weights.iter().all(|&w| w == T::zero()) {
            return Err(ClassifierError::ZeroWeights);
        }
        Ok(Hyperplane::new(self.weights.clone(), self.bias)?)
    }
}

fn check_uniform<T: Real>(data: &[LabeledEmbedding<T>]) -> Result<usize, ClassifierError> {
    let first = data.first().ok_or(ClassifierError::Empty)?;
    let dim = first.embedding.dim();
    for ex in data {
        if ex.embedding.dim() != dim {
            return Err(ClassifierError::DimensionMismatch {
                expected: dim,
                found: ex.embedding.dim(),
            });
        }
    }
    Ok(dim)
}

/// Predicted likelihood that `z_dec` (the re-encoded transferred sentence)
/// carries the target label: `σ(w·z+b)` for target 1, its complement for 0.
pub fn property_reward<T: Real>(
    c: &LinearClassifier<T>,
    z_dec: &Embedding<T>,
    y_target: bool,
) -> Result<T, ClassifierError> {
    let p = c.predict_proba(z_dec)?;
    Ok(if y_target { p } else { T::one() - p })
}

/// Stratified k-fold cross-validation accuracy (mean over folds).
///
/// Folds are a function of the data as a multiset and `cfg.seed` alone:
/// within each class, examples are put in a canonical order (lexicographic by
/// coordinates), shuffled by a ChaCha stream seeded from `cfg.seed`, and dealt
/// round-robin into `k` folds. Permuting the input order therefore does not
/// change the result.
pub fn cross_validate<T: Real>(
    data: &[LabeledEmbedding<T>],
    k: usize,
    cfg: &TrainConfig<T>,
) -> Result<T, ClassifierError> {
    if k < 2 {
        return Err(ClassifierError::BadFoldCount(k));
    }
    check_uniform(data)?;
    let mut by_class: [Vec<usize>; 2] = [Vec::new(), Vec::new()];
    for (i, ex) in data.iter().enumerate() {
        by_class[ex.label as usize].push(i);
    }
    for (label, class) in by_class.iter().enumerate() {
        if class.len() < k {
            return Err(ClassifierError::TooFewPerClass {
                label: label as u8,
                count: class.len(),
                folds: k,
            });
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut folds: Vec<Vec<usize>> = vec![Vec::new(); k];
    for class in by_class.iter_mut() {
        class.sort_by(|&a, &b| {
            let va = data[a].embedding.values();
            let vb = data[b].embedding.values();
            va.partial_cmp(vb).expect("finite coordinates sort totally")
        });
        class.shuffle(&mut rng);
        for (pos, &idx) in class.iter().enumerate() {
            folds[pos % k].push(idx);
        }
    }

    let mut acc_sum = T::zero();
    for fold in &folds {
        let train: Vec<LabeledEmbedding<T>> = data
            .iter()
            .enumerate()
            .filter(|(i, _)| !fold.contains(i))
            .map(|(_, ex)| ex.clone())
            .collect();
        let model = LinearClassifier::train(&train, cfg)?;
        let correct = fold
            .iter()
            .filter(|&&i| model.predict_label(&data[i].embedding).unwrap() == data[i].label)
            .count();
        acc_sum += T::from_usize(correct).unwrap() / T::from_usize(fold.len()).unwrap();
    }
    Ok(acc_sum / T::from_usize(k).unwrap())
}
