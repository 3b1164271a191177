//! Seeded, exactly invertible encoder/decoder over the template grammar: the
//! stand-in for a pre-trained autoencoder.
//!
//! The feature map lays a sentence out as one-hot blocks per slot choice plus
//! a two-coordinate channel per binary property and one gain coordinate:
//!
//! * the property *marker* carries the label at fixed strength `±κ` — the
//!   clean, constant-margin signal a linear classifier locks onto;
//! * the property *level* carries the label at per-frame strength
//!   `±(g − c₀)`, with the gain `g` drawn once per content frame from
//!   `[g_min, g_max]` and the offset `c₀` sitting just below `g_min`. The
//!   decoder reads labels off the level's sign, so the latent distance a
//!   sentence must be shifted to flip a property grows with its gain while
//!   the classifier's margin (marker-dominated) barely does: how far past the
//!   boundary to push (λ) genuinely depends on the input, and the mirror
//!   shift λ = 1 undershoots high-gain sentences;
//! * the gain coordinate exposes `g` itself, giving the bandit a linearly
//!   readable context feature;
//! * coupling `ρ` leaks each property level into a fixed subset of content
//!   coordinates, so overshooting λ eventually corrupts content words when
//!   the blocks snap back to one-hot.
//!
//! The feature vector is zero-padded to the latent dimension and mixed by a
//! seeded random orthogonal matrix `Q`. With zero noise,
//! `decode(encode(x)) = x` for every grammar sentence.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::grammar::{Grammar, Property, SentenceStructure};
use super::TestbedError;
use crate::geometry::Embedding;
use crate::linalg::{random_orthogonal, standard_normal, SquareMat};
use crate::scalar::Real;
use crate::Codec;

const DEFAULT_MARKER_SCALE: f64 = 4.0;
const DEFAULT_LEVEL_OFFSET_FRACTION: f64 = 0.9;
const DEFAULT_LEAK_SPREAD: f64 = 3.2;
const GAIN_SALT: u64 = 0x6761_696e; // "gain"
const NOISE_SALT: u64 = 0x6e6f_6973; // "nois"
const LEAK_SALT: u64 = 0x6c65_616b; // "leak"

/// Where each feature lives in the pre-mix vector.
#[derive(Debug, Clone, PartialEq, Eq)]
struct FeatureLayout {
    det_subj: usize,
    subject: usize,
    verb: usize,
    det_obj: usize,
    object: usize,
    content_len: usize,
    /// marker coordinate per property; the level sits right after it
    props: usize,
    gain: usize,
    len: usize,
}

impl FeatureLayout {
    fn for_grammar(g: &Grammar) -> Self {
        let det_subj = 0;
        let subject = det_subj + g.determiner_count();
        let verb = subject + g.subject_count();
        let det_obj = verb + g.verb_count();
        let object = det_obj + g.determiner_count();
        let content_len = object + g.object_count();
        let props = content_len;
        let gain = props + 2 * Property::ALL.len();
        Self {
            det_subj,
            subject,
            verb,
            det_obj,
            object,
            content_len,
            props,
            gain,
            len: gain + 1,
        }
    }

    /// Content one-hot blocks as (start, length) pairs, in template order.
    fn content_blocks(&self, g: &Grammar) -> [(usize, usize); 5] {
        [
            (self.det_subj, g.determiner_count()),
            (self.subject, g.subject_count()),
            (self.verb, g.verb_count()),
            (self.det_obj, g.determiner_count()),
            (self.object, g.object_count()),
        ]
    }

    fn marker(&self, p: Property) -> usize {
        self.props + 2 * p.index()
    }

    fn level(&self, p: Property) -> usize {
        self.props + 2 * p.index() + 1
    }
}

/// Synthetic autoencoder analog: seeded, deterministic, and invertible at
/// zero noise. Construct with [`SynthCodec::new`]; see the module docs for
/// the latent layout.
#[derive(Debug, Clone)]
pub struct SynthCodec<T> {
    grammar: Grammar,
    dim: usize,
    seed: u64,
    mixer: SquareMat<T>,
    gain_range: (f64, f64),
    coupling: f64,
    noise_sigma: f64,
    marker_scale: f64,
    level_offset: f64,
    leak_spread: f64,
    /// per property: (content coordinate, weight) pairs
    leak: [Vec<(usize, f64)>; 3],
    layout: FeatureLayout,
}

impl<T: Real> SynthCodec<T> {
    pub fn new(
        grammar: Grammar,
        dim: usize,
        seed: u64,
        gain_range: (f64, f64),
        coupling: f64,
        noise_sigma: f64,
    ) -> Result<Self, TestbedError> {
        let layout = FeatureLayout::for_grammar(&grammar);
        if dim < layout.len {
            return Err(TestbedError::DimTooSmall {
                needed: layout.len,
                given: dim,
            });
        }
        let (g_min, g_max) = gain_range;
        if !(g_min.is_finite() && g_max.is_finite() && g_min > 0.0 && g_min <= g_max) {
            return Err(TestbedError::BadParameter(
                "gain range must satisfy 0 < g_min ≤ g_max",
            ));
        }
        if !(0.0..1.0).contains(&coupling) {
            return Err(TestbedError::BadParameter("coupling must lie in [0, 1)"));
        }
        if !(noise_sigma >= 0.0 && noise_sigma.is_finite()) {
            return Err(TestbedError::BadParameter("noise_sigma must be ≥ 0"));
        }

        let mixer = random_orthogonal(dim, &mut ChaCha8Rng::seed_from_u64(seed));
        let level_offset = DEFAULT_LEVEL_OFFSET_FRACTION * g_min;
        // Fixed leak patterns: content one-hot blocks dealt round-robin to
        // the three properties, so each block carries a single leak sign and
        // only weight differences within a block move its argmax gap.
        // Decoding at rest stays exact for any parameters because the weight
        // spread is capped so that ρ·ℓ_max·spread < 1; the spread is what an
        // overshot transfer amplifies into snapping errors.
        let level_max = g_max - level_offset;
        let leak_spread = if coupling > 0.0 {
            DEFAULT_LEAK_SPREAD.min(0.95 / (coupling * level_max))
        } else {
            DEFAULT_LEAK_SPREAD
        };
        let mut leak_rng = ChaCha8Rng::seed_from_u64(seed ^ LEAK_SALT);
        let mut leak: [Vec<(usize, f64)>; 3] = [Vec::new(), Vec::new(), Vec::new()];
        for (block, &(start, len)) in layout.content_blocks(&grammar).iter().enumerate() {
            for coord in start..start + len {
                let weight = 0.2 + leak_spread * rand::Rng::random::<f64>(&mut leak_rng);
                leak[block % 3].push((coord, weight));
            }
        }
        Ok(Self {
            grammar,
            dim,
            seed,
            mixer,
            gain_range,
            coupling,
            noise_sigma,
            marker_scale: DEFAULT_MARKER_SCALE,
            level_offset,
            leak_spread,
            leak,
            layout,
        })
    }

    /// Default configuration: 32 latent dimensions, gains in [0.5, 2.0],
    /// coupling 0.15, no noise.
    pub fn with_defaults(grammar: Grammar, seed: u64) -> Result<Self, TestbedError> {
        Self::new(grammar, 32, seed, (0.5, 2.0), 0.15, 0.0)
    }

    /// Overrides the fixed marker strength `κ` (default 4.0).
    pub fn with_marker_scale(mut self, marker_scale: f64) -> Result<Self, TestbedError> {
        if !(marker_scale.is_finite() && marker_scale > 0.0) {
            return Err(TestbedError::BadParameter("marker_scale must be > 0"));
        }
        self.marker_scale = marker_scale;
        Ok(self)
    }

    /// Overrides the level offset `c₀` (default 0.9·g_min). Must stay below
    /// `g_min` so every level keeps the sign of its label, and must keep the
    /// leak below the snapping gap so decoding stays exact.
    pub fn with_level_offset(mut self, level_offset: f64) -> Result<Self, TestbedError> {
        if !(level_offset.is_finite() && level_offset >= 0.0 && level_offset < self.gain_range.0) {
            return Err(TestbedError::BadParameter(
                "level_offset must lie in [0, g_min)",
            ));
        }
        if self.coupling * (self.gain_range.1 - level_offset) * self.leak_spread >= 1.0 {
            return Err(TestbedError::BadParameter(
                "level_offset too small for the configured coupling",
            ));
        }
        self.level_offset = level_offset;
        Ok(self)
    }

    /// A codec for a second surface language sharing this codec's latent
    /// space exactly: same mixer, gains, coupling, and noise; only the
    /// surface realization differs.
    pub fn sibling(&self, grammar: Grammar) -> Result<Self, TestbedError> {
        if !self.grammar.same_structure(&grammar) {
            return Err(TestbedError::StructureMismatch);
        }
        Ok(Self {
            grammar,
            ..self.clone()
        })
    }

    pub fn grammar(&self) -> &Grammar {
        &self.grammar
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn mixer(&self) -> &SquareMat<T> {
        &self.mixer
    }

    /// Per-frame gain `g(x) ∈ [g_min, g_max]`: a deterministic seeded hash of
    /// the content slots, shared by the property variants of a frame and by
    /// translations across sibling codecs.
    ///
    /// The draw is two-cluster: half the frames sit at the bottom of the
    /// range (short shifts flip them immediately), half spread over its upper
    /// third. The low cluster anchors the classifier's margin scale, which is
    /// what leaves the upper cluster needing shifts well past the mirror
    /// point — and by a graded, gain-dependent amount.
    pub fn gain(&self, s: &SentenceStructure) -> f64 {
        let key = self.seed ^ GAIN_SALT.wrapping_mul(s.frame_key() + 1);
        let u = rand::Rng::random::<f64>(&mut ChaCha8Rng::seed_from_u64(key));
        let t = if u < 0.5 {
            0.04 * u // [0, 0.02)
        } else {
            (2.0 + 2.0 * (u - 0.5)) / 3.0 // [2/3, 1)
        };
        let (lo, hi) = self.gain_range;
        lo + t * (hi - lo)
    }

    /// Signed level value a property with sign `sign` carries for gain `g`.
    fn level_value(&self, sign: f64, g: f64) -> f64 {
        sign * (g - self.level_offset)
    }

    fn features(&self, s: &SentenceStructure) -> Vec<T> {
        let l = &self.layout;
        let mut f = vec![T::zero(); self.dim];
        f[l.det_subj + s.det_subj] = T::one();
        f[l.subject + s.subject] = T::one();
        f[l.verb + s.verb] = T::one();
        f[l.det_obj + s.det_obj] = T::one();
        f[l.object + s.object] = T::one();

        let g = self.gain(s);
        for p in Property::ALL {
            let sign = if s.label(p) { 1.0 } else { -1.0 };
            f[l.marker(p)] = T::from_f64_lossy(sign * self.marker_scale);
            let level = self.level_value(sign, g);
            f[l.level(p)] = T::from_f64_lossy(level);
            for &(coord, weight) in &self.leak[p.index()] {
                f[coord] += T::from_f64_lossy(self.coupling * weight * level);
            }
        }
        f[l.gain] = T::from_f64_lossy(g);
        f
    }

    fn encode_structure(&self, s: &SentenceStructure) -> Embedding<T> {
        let mut z = self.mixer.mat_vec(&self.features(s));
        if self.noise_sigma > 0.0 {
            let key = self.seed ^ NOISE_SALT.wrapping_mul(s.key() + 1);
            let mut rng = ChaCha8Rng::seed_from_u64(key);
            let sigma = T::from_f64_lossy(self.noise_sigma);
            for v in z.iter_mut() {
                *v += sigma * standard_normal(&mut rng);
            }
        }
        Embedding::from_parts(z)
    }

    fn argmax_block(features: &[T], start: usize, len: usize) -> usize {
        let mut best = 0;
        for i in 1..len {
            // strict comparison: ties resolve to the lowest index
            if features[start + i] > features[start + best] {
                best = i;
            }
        }
        best
    }

    fn decode_structure(&self, z: &Embedding<T>) -> Result<SentenceStructure, TestbedError> {
        if z.dim() != self.dim {
            return Err(TestbedError::DimensionMismatch {
                expected: self.dim,
                found: z.dim(),
            });
        }
        let f = self.mixer.mat_t_vec(z.values());
        let l = &self.layout;
        let g = &self.grammar;
        // property sign 0 resolves to label 1, mirroring the classifier's
        // tie rule
        let label = |p: Property| f[l.level(p)] >= T::zero();
        Ok(SentenceStructure {
            det_subj: Self::argmax_block(&f, l.det_subj, g.determiner_count()),
            subject: Self::argmax_block(&f, l.subject, g.subject_count()),
            verb: Self::argmax_block(&f, l.verb, g.verb_count()),
            det_obj: Self::argmax_block(&f, l.det_obj, g.determiner_count()),
            object: Self::argmax_block(&f, l.object, g.object_count()),
            tense_past: label(Property::Tense),
            subj_plural: label(Property::SubjNum),
            obj_plural: label(Property::ObjNum),
        })
    }
}

impl<T: Real> Codec<T> for SynthCodec<T> {
    fn latent_dim(&self) -> usize {
        self.dim
    }

    fn encode(&self, sentence: &str) -> crate::Result<Embedding<T>> {
        let s = self.grammar.parse(sentence)?;
        Ok(self.encode_structure(&s))
    }

    fn decode(&self, z: &Embedding<T>) -> crate::Result<String> {
        Ok(self.grammar.realize(&self.decode_structure(z)?))
    }
}

/// Builds codecs for two surface languages over one shared latent space.
pub fn make_bilingual<T: Real>(
    grammar_a: Grammar,
    grammar_b: Grammar,
    dim: usize,
    seed: u64,
    gain_range: (f64, f64),
    coupling: f64,
    noise_sigma: f64,
) -> Result<(SynthCodec<T>, SynthCodec<T>), TestbedError> {
    let a = SynthCodec::new(grammar_a, dim, seed, gain_range, coupling, noise_sigma)?;
    let b = a.sibling(grammar_b)?;
    Ok((a, b))
}
