//! Steering binary sentence properties in embedding space.
//!
//! A sentence is encoded to a latent vector, a logistic-regression classifier
//! for the property supplies a decision hyperplane, and the vector is shifted
//! perpendicular to that plane `λ` times its original distance beyond it. The
//! shifted vector decodes back into a sentence with the property flipped. The
//! shift distance `λ` is chosen per input by a LinUCB contextual bandit that
//! maximizes the harmonic mean of a property reward (classifier likelihood of
//! the target label) and a content reward (sentence BLEU against the input).
//!
//! Everything runs end-to-end on a synthetic, exactly invertible
//! encoder/decoder over a small template grammar (the [`testbed`] module), in
//! one or two surface languages sharing a latent space.
//!
//! The numeric core is generic over the scalar type ([`scalar::Real`], i.e.
//! `f32` or `f64`); the aliases at the crate root fix `f64`, which is what the
//! pipeline and CLI use.

pub mod bandit;
pub mod classifier;
pub mod geometry;
pub mod linalg;
pub mod pipeline;
pub mod reward;
pub mod scalar;
pub mod testbed;

use thiserror::Error;

pub use scalar::Real;

/// Default-precision aliases for the main domain types.
pub type Embedding = geometry::Embedding<f64>;
pub type Hyperplane = geometry::Hyperplane<f64>;
pub type TransferConfig = geometry::TransferConfig<f64>;
pub type LabeledEmbedding = classifier::LabeledEmbedding<f64>;
pub type LinearClassifier = classifier::LinearClassifier<f64>;
pub type TrainConfig = classifier::TrainConfig<f64>;
pub type BleuConfig = reward::BleuConfig<f64>;
pub type LinUcb = bandit::LinUcb<f64>;
pub type BanditTrainLog = bandit::BanditTrainLog<f64>;
pub type SynthCodec = testbed::SynthCodec<f64>;

/// Crate-wide error, aggregating the per-module errors plus I/O and file
/// format failures from the pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Geometry(#[from] geometry::GeometryError),
    #[error(transparent)]
    Classifier(#[from] classifier::ClassifierError),
    #[error(transparent)]
    Reward(#[from] reward::RewardError),
    #[error(transparent)]
    Bandit(#[from] bandit::BanditError),
    #[error(transparent)]
    Testbed(#[from] testbed::TestbedError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("unsupported file version: {found}")]
    Version { found: String },
    #[error("{0}")]
    Data(String),
}

pub type Result<T> = std::result::Result<T, Error>;

/// A sentence encoder/decoder pair over a shared latent space.
///
/// [`testbed::SynthCodec`] is the in-tree implementation; anything mapping
/// sentences to fixed-dimension embeddings and back can stand in for it.
pub trait Codec<T: Real> {
    /// Dimension of the latent space.
    fn latent_dim(&self) -> usize;
    /// Maps a sentence to its latent vector.
    fn encode(&self, sentence: &str) -> Result<geometry::Embedding<T>>;
    /// Maps a latent vector back to a sentence.
    fn decode(&self, z: &geometry::Embedding<T>) -> Result<String>;
}
