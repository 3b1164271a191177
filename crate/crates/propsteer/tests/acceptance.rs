//! Acceptance suite: one test per release criterion, each printing a
//! PASS/FAIL line (visible with `--nocapture`) and asserting its thresholds.

use std::sync::OnceLock;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use propsteer::bandit::{simulate_uniform_policy, LinUcb};
use propsteer::classifier::{
    cross_validate, loss_gradient, regularized_loss, LabeledEmbedding, LinearClassifier,
    TrainConfig,
};
use propsteer::geometry::{project, signed_margin, transfer, Embedding, Hyperplane};
use propsteer::pipeline::format::save_bandit;
use propsteer::pipeline::{run_experiment, ExperimentConfig, ExperimentReport};
use propsteer::reward::{bleu, brevity_penalty, BleuConfig};
use propsteer::testbed::{Grammar, Property, SynthCodec};
use propsteer::Codec;

fn check(name: &str, pass: bool, detail: &str) {
    println!("ACCEPT {name}: {}", if pass { "PASS" } else { "FAIL" });
    assert!(pass, "{name}: {detail}");
}

fn check_runtime(name: &str, elapsed: Duration, budget: Duration) {
    check(
        &format!("{name}-runtime"),
        elapsed <= budget,
        &format!("took {elapsed:?}, budget {budget:?}"),
    );
}

fn normal_vec(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n)
        .map(|_| propsteer::linalg::standard_normal(rng))
        .collect()
}

#[test]
fn geometry_suite() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(0x6765);
    let mut worst_margin = 0.0f64;
    let mut worst_parallel = 0.0f64;
    let mut worst_midpoint = 0.0f64;
    for _ in 0..1000 {
        let n = rng.random_range(2..=16);
        let w = loop {
            let w = normal_vec(&mut rng, n);
            if propsteer::linalg::norm(&w) > 1e-6 {
                break w;
            }
        };
        let b: f64 = propsteer::linalg::standard_normal(&mut rng);
        let h = Hyperplane::new(w.clone(), b).unwrap();
        let z = Embedding::new(normal_vec(&mut rng, n)).unwrap();
        let lambda: f64 = rng.random_range(0.0..8.0);

        let before = signed_margin(&h, &z).unwrap();
        let out = transfer(&h, &z, lambda).unwrap();
        let after = signed_margin(&h, &out).unwrap();
        let scale = (lambda * before.abs()).max(1e-3);
        worst_margin = worst_margin.max((after + lambda * before).abs() / scale);

        // shift parallel to w
        let diff: Vec<f64> = out
            .values()
            .iter()
            .zip(z.values())
            .map(|(a, b)| a - b)
            .collect();
        let wn = propsteer::linalg::norm(&w);
        let unit: Vec<f64> = w.iter().map(|x| x / wn).collect();
        let along = propsteer::linalg::dot(&diff, &unit);
        let resid: Vec<f64> = diff.iter().zip(&unit).map(|(d, u)| d - along * u).collect();
        let dn = propsteer::linalg::norm(&diff).max(1e-12);
        worst_parallel = worst_parallel.max(propsteer::linalg::norm(&resid) / dn);

        // λ=1 reflection midpoint lies on the plane
        let mirrored = transfer(&h, &z, 1.0).unwrap();
        let mid: Vec<f64> = z
            .values()
            .iter()
            .zip(mirrored.values())
            .map(|(a, b)| 0.5 * (a + b))
            .collect();
        let mid_margin = signed_margin(&h, &Embedding::new(mid).unwrap()).unwrap();
        worst_midpoint = worst_midpoint.max(mid_margin.abs() / before.abs().max(1e-3));

        // λ=1 is an exact reflection around the projection
        let proj = project(&h, &z).unwrap();
        let d_in: f64 = z
            .values()
            .iter()
            .zip(proj.values())
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt();
        let d_out: f64 = mirrored
            .values()
            .iter()
            .zip(proj.values())
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt();
        assert!((d_in - d_out).abs() <= 1e-9 * d_in.max(1e-9));
    }
    check(
        "geometry-margin-rule",
        worst_margin <= 1e-9,
        &format!("worst relative error {worst_margin:e}"),
    );
    check(
        "geometry-parallelism",
        worst_parallel <= 1e-9,
        &format!("worst residual fraction {worst_parallel:e}"),
    );
    check(
        "geometry-mirror-midpoint",
        worst_midpoint <= 1e-9,
        &format!("worst midpoint margin {worst_midpoint:e}"),
    );
    check_runtime("geometry", start.elapsed(), Duration::from_secs(1));
}

#[test]
fn classifier_suite() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(0x636c66);
    let mut worst_fd = 0.0f64;
    for _ in 0..20 {
        let n = rng.random_range(1..=8);
        let m = rng.random_range(4..=50);
        let data: Vec<LabeledEmbedding<f64>> = (0..m)
            .map(|i| {
                LabeledEmbedding::new(Embedding::new(normal_vec(&mut rng, n)).unwrap(), i % 2 == 0)
            })
            .collect();
        let w = normal_vec(&mut rng, n);
        let b: f64 = propsteer::linalg::standard_normal(&mut rng);
        let l2: f64 = rng.random_range(0.0..0.1);
        let (grad_w, grad_b) = loss_gradient(&data, &w, b, l2);
        let h = 1e-5;
        for i in 0..n {
            let mut wp = w.clone();
            let mut wm = w.clone();
            wp[i] += h;
            wm[i] -= h;
            let fd = (regularized_loss(&data, &wp, b, l2) - regularized_loss(&data, &wm, b, l2))
                / (2.0 * h);
            worst_fd = worst_fd.max((grad_w[i] - fd).abs() / fd.abs().max(1e-6));
        }
        let fd_b = (regularized_loss(&data, &w, b + h, l2)
            - regularized_loss(&data, &w, b - h, l2))
            / (2.0 * h);
        worst_fd = worst_fd.max((grad_b - fd_b).abs() / fd_b.abs().max(1e-6));
    }
    check(
        "classifier-gradient-vs-finite-differences",
        worst_fd <= 1e-5,
        &format!("worst relative error {worst_fd:e}"),
    );

    // label-flip antisymmetry of the trained weights
    let mut rng = ChaCha8Rng::seed_from_u64(0x666c70);
    let data: Vec<LabeledEmbedding<f64>> = (0..40)
        .map(|i| {
            let sign = if i % 2 == 0 { 1.0 } else { -1.0 };
            let mut v = normal_vec(&mut rng, 4);
            v[0] += 2.0 * sign;
            LabeledEmbedding::new(Embedding::new(v).unwrap(), sign > 0.0)
        })
        .collect();
    let flipped: Vec<LabeledEmbedding<f64>> = data
        .iter()
        .map(|e| LabeledEmbedding::new(e.embedding.clone(), !e.label))
        .collect();
    let cfg = TrainConfig::default();
    let c1 = LinearClassifier::train(&data, &cfg).unwrap();
    let c2 = LinearClassifier::train(&flipped, &cfg).unwrap();
    let worst_anti = c1
        .weights()
        .iter()
        .zip(c2.weights())
        .map(|(a, b)| (a + b).abs())
        .fold((c1.bias() + c2.bias()).abs(), f64::max);
    check(
        "classifier-label-flip-antisymmetry",
        worst_anti <= 1e-6,
        &format!("worst coefficient sum {worst_anti:e}"),
    );
    check_runtime("classifier", start.elapsed(), Duration::from_secs(5));
}

#[test]
fn bleu_oracle_cases() {
    let start = Instant::now();
    let cfg = BleuConfig::<f64>::default();
    let identity = bleu("the cat sat on the mat", "the cat sat on the mat", &cfg).unwrap();
    check(
        "bleu-identity-exact",
        identity == 1.0,
        &format!("bleu(x,x) = {identity}"),
    );

    let unigram = BleuConfig::new(1, 0.1).unwrap();
    let clipped = bleu("the the the the", "the cat sat", &unigram).unwrap();
    check(
        "bleu-clipping-exact",
        clipped == 0.25,
        &format!("clipped-unigram case = {clipped}"),
    );

    let bp: f64 = brevity_penalty(2, 4).unwrap();
    let expected = (-1.0f64).exp();
    check(
        "bleu-brevity-penalty",
        (bp - expected).abs() <= 1e-12,
        &format!("bp = {bp}, expected {expected}"),
    );
    check_runtime("bleu", start.elapsed(), Duration::from_secs(1));
}

/// Independent unit-ridge solve by Gauss-Jordan elimination over an arm's
/// full (context, reward) history.
#[allow(clippy::needless_range_loop)]
fn ridge_oracle(history: &[(Vec<f64>, f64)], dim: usize) -> Vec<f64> {
    let n = dim;
    let mut aug = vec![vec![0.0f64; n + 1]; n];
    for i in 0..n {
        aug[i][i] = 1.0;
    }
    for (x, r) in history {
        for i in 0..n {
            for j in 0..n {
                aug[i][j] += x[i] * x[j];
            }
            aug[i][n] += r * x[i];
        }
    }
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&a, &b| aug[a][col].abs().partial_cmp(&aug[b][col].abs()).unwrap())
            .unwrap();
        aug.swap(col, pivot);
        let div = aug[col][col];
        for v in aug[col].iter_mut() {
            *v /= div;
        }
        for row in 0..n {
            if row != col {
                let f = aug[row][col];
                for k in 0..=n {
                    aug[row][k] -= f * aug[col][k];
                }
            }
        }
    }
    aug.into_iter().map(|row| row[n]).collect()
}

#[test]
#[allow(clippy::needless_range_loop)]
fn linucb_ridge_equivalence() {
    let start = Instant::now();
    let dim = 8;
    let arms = [1.0, 2.0, 3.0, 4.0, 5.0];
    let episode = |seed: u64| {
        let mut bandit = LinUcb::new(&arms, dim, 4.0).unwrap();
        let mut histories: Vec<Vec<(Vec<f64>, f64)>> = vec![Vec::new(); arms.len()];
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for _ in 0..100 {
            let x = normal_vec(&mut rng, dim);
            let arm = rng.random_range(0..arms.len());
            let r: f64 = rng.random();
            bandit
                .update(arm, &Embedding::new(x.clone()).unwrap(), r)
                .unwrap();
            histories[arm].push((x, r));
        }
        (bandit, histories)
    };

    let mut worst = 0.0f64;
    for seed in [3, 17, 99] {
        let (bandit, histories) = episode(seed);
        for arm in 0..arms.len() {
            let theta = bandit.theta(arm).unwrap();
            let oracle = ridge_oracle(&histories[arm], dim);
            for (t, o) in theta.iter().zip(&oracle) {
                worst = worst.max((t - o).abs() / o.abs().max(1e-9));
            }
        }
    }
    check(
        "linucb-ridge-equivalence",
        worst <= 1e-9,
        &format!("worst relative θ error {worst:e}"),
    );

    // byte-identical state across two identical episodes
    let (b1, _) = episode(42);
    let (b2, _) = episode(42);
    let mut s1 = Vec::new();
    let mut s2 = Vec::new();
    save_bandit(&mut s1, &b1).unwrap();
    save_bandit(&mut s2, &b2).unwrap();
    check(
        "linucb-determinism",
        s1 == s2,
        "serialized states differ between identical episodes",
    );
    check_runtime("linucb", start.elapsed(), Duration::from_secs(5));
}

#[test]
fn testbed_round_trip_and_probe() {
    let start = Instant::now();
    let grammar = Grammar::english();
    let codec: SynthCodec<f64> = SynthCodec::with_defaults(grammar.clone(), 5).unwrap();
    let mut failures = 0usize;
    let all = grammar.enumerate();
    for s in &all {
        let text = grammar.realize(s);
        if codec.decode(&codec.encode(&text).unwrap()).unwrap() != text {
            failures += 1;
        }
    }
    check(
        "testbed-exhaustive-round-trip",
        failures == 0,
        &format!("{failures} of {} sentences failed to round-trip", all.len()),
    );

    // probing accuracy 1.0 without coupling, for every property
    let clean: SynthCodec<f64> =
        SynthCodec::new(grammar.clone(), 32, 5, (0.5, 2.0), 0.0, 0.0).unwrap();
    let corpus = grammar.generate_corpus(240, 11).unwrap();
    for p in Property::ALL {
        let data: Vec<LabeledEmbedding<f64>> = corpus
            .iter()
            .map(|r| LabeledEmbedding::new(clean.encode(&r.sentence).unwrap(), r.labels[p.index()]))
            .collect();
        let acc = cross_validate(&data, 5, &TrainConfig::default()).unwrap();
        check(
            &format!("testbed-probe-{}", p.name()),
            acc == 1.0,
            &format!("cross-validated accuracy {acc}"),
        );
    }
    check_runtime("testbed", start.elapsed(), Duration::from_secs(60));
}

fn monolingual_report() -> &'static ExperimentReport {
    static REPORT: OnceLock<ExperimentReport> = OnceLock::new();
    REPORT.get_or_init(|| run_experiment(&ExperimentConfig::default()).unwrap())
}

#[test]
fn end_to_end_monolingual() {
    let start = Instant::now();
    let report = monolingual_report();
    let cmab = &report.cmab;
    check(
        "monolingual-label-accuracy",
        cmab.label_acc >= 90.0,
        &format!("Label = {}", cmab.label_acc),
    );
    check(
        "monolingual-all-accuracy",
        cmab.all_acc >= 80.0,
        &format!("All = {}", cmab.all_acc),
    );
    check(
        "monolingual-bleu-vs-gold",
        cmab.bleu_vs_gold >= 0.80,
        &format!("BLEU = {}", cmab.bleu_vs_gold),
    );
    check(
        "monolingual-pair-count",
        cmab.count == 100,
        &format!("count = {}", cmab.count),
    );
    check_runtime("monolingual", start.elapsed(), Duration::from_secs(60));
}

#[test]
fn bandit_beats_fixed_mirror_baseline() {
    let report = monolingual_report();
    let gap = report.cmab.all_acc - report.baseline.all_acc;
    check(
        "ordering-all-accuracy-gap",
        gap >= 10.0,
        &format!(
            "CMAB All {} vs baseline All {} (gap {gap})",
            report.cmab.all_acc, report.baseline.all_acc
        ),
    );
    check(
        "ordering-bleu",
        report.cmab.bleu_vs_gold > report.baseline.bleu_vs_gold,
        &format!(
            "CMAB BLEU {} vs baseline BLEU {}",
            report.cmab.bleu_vs_gold, report.baseline.bleu_vs_gold
        ),
    );
}

#[test]
fn end_to_end_cross_lingual() {
    let start = Instant::now();
    let cfg = ExperimentConfig {
        cross_lingual: true,
        ..ExperimentConfig::default()
    };
    let report = run_experiment(&cfg).unwrap();
    check(
        "cross-lingual-label-accuracy",
        report.cmab.label_acc >= 85.0,
        &format!("Label = {}", report.cmab.label_acc),
    );
    check(
        "cross-lingual-pair-count",
        report.cmab.count == 100,
        &format!("count = {}", report.cmab.count),
    );
    check_runtime("cross-lingual", start.elapsed(), Duration::from_secs(60));
}

#[test]
fn bandit_learns_beyond_uniform_random() {
    let cfg = ExperimentConfig::default();
    let grammar = Grammar::english();
    let codec: SynthCodec<f64> = SynthCodec::new(
        grammar.clone(),
        cfg.dim,
        cfg.seed,
        cfg.gain_range,
        cfg.coupling,
        cfg.noise_sigma,
    )
    .unwrap();
    let corpus = grammar
        .generate_corpus(cfg.train_count, cfg.seed ^ 0x636f_7270)
        .unwrap();
    let data: Vec<LabeledEmbedding<f64>> = corpus
        .iter()
        .map(|r| {
            LabeledEmbedding::new(
                codec.encode(&r.sentence).unwrap(),
                r.labels[cfg.property.index()],
            )
        })
        .collect();
    let clf = LinearClassifier::train(&data, &cfg.train).unwrap();
    let sentences: Vec<String> = corpus.iter().map(|r| r.sentence.clone()).collect();

    let mut bandit = LinUcb::new(&cfg.lambda_grid, cfg.dim, cfg.alpha).unwrap();
    let seed = cfg.seed ^ 0x6261_6e64;
    let log = bandit
        .train(&sentences, &codec, &clf, 1, &cfg.bleu, seed)
        .unwrap();
    let random_log = simulate_uniform_policy(
        &cfg.lambda_grid,
        &sentences,
        &codec,
        &clf,
        1,
        &cfg.bleu,
        seed,
    )
    .unwrap();
    assert_eq!(log.len(), 2500);
    let trained = log.mean_reward_of_last(500);
    let random = random_log.mean_reward_of_last(500);
    check(
        "bandit-learning-margin",
        trained > random && trained - random >= 0.02,
        &format!(
            "trained {trained} vs random {random} (margin {})",
            trained - random
        ),
    );
}
