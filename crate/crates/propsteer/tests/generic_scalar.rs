//! The numeric core is generic over the scalar; exercise the f32
//! instantiation at tolerances suited to single precision.

use propsteer::bandit::LinUcb;
use propsteer::classifier::{LabeledEmbedding, LinearClassifier, TrainConfig};
use propsteer::geometry::{signed_margin, transfer, Embedding, Hyperplane};
use propsteer::reward::{bleu, BleuConfig};
use propsteer::testbed::{Grammar, SynthCodec};
use propsteer::Codec;

#[test]
fn geometry_works_at_f32() {
    let h = Hyperplane::new(vec![3.0f32, 4.0], 1.0).unwrap();
    let z = Embedding::new(vec![1.0f32, 1.0]).unwrap();
    assert!((signed_margin(&h, &z).unwrap() - 1.6).abs() < 1e-6);
    let out = transfer(&h, &z, 2.0).unwrap();
    let after = signed_margin(&h, &out).unwrap();
    assert!((after + 2.0 * 1.6).abs() < 1e-5);
}

#[test]
fn classifier_trains_at_f32() {
    let data = [
        LabeledEmbedding::new(Embedding::new(vec![1.0f32, 0.2]).unwrap(), true),
        LabeledEmbedding::new(Embedding::new(vec![-1.0f32, -0.1]).unwrap(), false),
        LabeledEmbedding::new(Embedding::new(vec![0.8f32, 0.0]).unwrap(), true),
        LabeledEmbedding::new(Embedding::new(vec![-0.9f32, 0.3]).unwrap(), false),
    ];
    let cfg = TrainConfig::<f32> {
        max_iters: 500,
        grad_tol: 1e-5,
        ..TrainConfig::default()
    };
    let clf = LinearClassifier::train(&data, &cfg).unwrap();
    for e in &data {
        assert_eq!(clf.predict_label(&e.embedding).unwrap(), e.label);
    }
}

#[test]
fn codec_round_trips_at_f32() {
    let grammar = Grammar::english();
    let codec: SynthCodec<f32> = SynthCodec::with_defaults(grammar.clone(), 4).unwrap();
    for s in grammar.enumerate().into_iter().step_by(211) {
        let text = grammar.realize(&s);
        assert_eq!(codec.decode(&codec.encode(&text).unwrap()).unwrap(), text);
    }
}

#[test]
fn bandit_scores_at_f32() {
    let bandit = LinUcb::new(&[1.0f32, 2.0], 4, 4.0).unwrap();
    let mut x = vec![0.0f32; 4];
    x[1] = 1.0;
    let scores = bandit.ucb_scores(&Embedding::new(x).unwrap()).unwrap();
    for s in scores {
        assert!((s - 4.0).abs() < 1e-5);
    }
}

#[test]
fn bleu_matches_across_widths() {
    let cfg32 = BleuConfig::<f32>::new(2, 0.1).unwrap();
    let cfg64 = BleuConfig::<f64>::new(2, 0.1).unwrap();
    let a = bleu::<f32>("the dog chased the ball", "the dog chases the ball", &cfg32).unwrap();
    let b = bleu::<f64>("the dog chased the ball", "the dog chases the ball", &cfg64).unwrap();
    assert!((f64::from(a) - b).abs() < 1e-6);
}
