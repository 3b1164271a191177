//! Command-line interface: corpus generation, encoding, classifier and bandit
//! training, transfer, evaluation, and the full seeded experiment.
//!
//! Exit codes: 0 on success, 1 on usage errors, 2 on data errors.

use std::fs::File;
use std::io::{BufWriter, Read, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use propsteer::bandit::LinUcb;
use propsteer::classifier::{cross_validate, LabeledEmbedding, LinearClassifier, TrainConfig};
use propsteer::pipeline::format::{
    load_bandit, load_classifier, load_embeddings, save_bandit, save_classifier, save_embeddings,
};
use propsteer::pipeline::{
    evaluate, run_experiment, run_transfer, ContentCriterion, ExperimentConfig, LambdaPolicy,
};
use propsteer::reward::BleuConfig;
use propsteer::testbed::{read_corpus, write_corpus, CorpusRecord, Grammar, Property, SynthCodec};
use propsteer::{Codec, Error};

#[derive(Parser)]
#[command(
    name = "propsteer",
    about = "Steers binary sentence properties by shifting embeddings across a classifier's decision hyperplane, with the shift distance chosen per input by a LinUCB bandit.",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Language {
    English,
    Pseudo,
}

impl Language {
    fn grammar(self) -> Grammar {
        match self {
            Language::English => Grammar::english(),
            Language::Pseudo => Grammar::pseudo(),
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum PropertyArg {
    Tense,
    Subjnum,
    Objnum,
}

impl From<PropertyArg> for Property {
    fn from(p: PropertyArg) -> Property {
        match p {
            PropertyArg::Tense => Property::Tense,
            PropertyArg::Subjnum => Property::SubjNum,
            PropertyArg::Objnum => Property::ObjNum,
        }
    }
}

/// Codec parameters shared by every subcommand that encodes or decodes.
#[derive(Args)]
struct CodecArgs {
    /// Latent dimension
    #[arg(long, default_value_t = 32)]
    dim: usize,
    /// Property-to-content coupling strength
    #[arg(long, default_value_t = 0.15)]
    coupling: f64,
    /// Gaussian noise level added to encodings
    #[arg(long, default_value_t = 0.0)]
    noise: f64,
    /// Lower end of the per-frame gain range
    #[arg(long, default_value_t = 0.5)]
    gain_min: f64,
    /// Upper end of the per-frame gain range
    #[arg(long, default_value_t = 2.0)]
    gain_max: f64,
    /// Surface language
    #[arg(long, value_enum, default_value = "english")]
    language: Language,
}

impl CodecArgs {
    fn build(&self, seed: u64) -> Result<SynthCodec<f64>, Error> {
        Ok(SynthCodec::new(
            self.language.grammar(),
            self.dim,
            seed,
            (self.gain_min, self.gain_max),
            self.coupling,
            self.noise,
        )?)
    }
}

#[derive(Args)]
struct BleuArgs {
    /// Maximum BLEU n-gram order for the bandit reward
    #[arg(long, default_value_t = 2)]
    bleu_max_n: usize,
    /// Smoothing applied to zero clipped counts
    #[arg(long, default_value_t = 0.1)]
    bleu_epsilon: f64,
}

impl BleuArgs {
    fn build(&self) -> Result<BleuConfig<f64>, Error> {
        Ok(BleuConfig::new(self.bleu_max_n, self.bleu_epsilon)?)
    }
}

const DEFAULT_GRID: &str = "1,1.5,2,2.5,3,3.5,4,4.5,5,5.5,6,6.5,7";

#[derive(Subcommand)]
enum Command {
    /// Generate a labeled corpus with gold flips for every property
    SynthGen {
        /// Number of sentences
        #[arg(long, default_value_t = 100)]
        count: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, value_enum, default_value = "english")]
        language: Language,
        /// Output file (defaults to stdout)
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Encode a corpus into labeled embeddings for one property
    Encode {
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long, value_enum)]
        property: PropertyArg,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[command(flatten)]
        codec: CodecArgs,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Train the logistic-regression property classifier
    TrainClf {
        #[arg(long)]
        embeddings: PathBuf,
        #[arg(long, default_value_t = 0.1)]
        learning_rate: f64,
        #[arg(long, default_value_t = 1e-4)]
        l2_penalty: f64,
        #[arg(long, default_value_t = 5000)]
        max_iters: usize,
        #[arg(long, default_value_t = 1e-8)]
        grad_tol: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Stratified k-fold cross-validation accuracy of the classifier
    Probe {
        #[arg(long)]
        embeddings: PathBuf,
        #[arg(long, default_value_t = 5)]
        folds: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Train the LinUCB bandit to pick λ per sentence
    TrainBandit {
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long)]
        classifier: PathBuf,
        #[arg(long, value_delimiter = ',', default_value = DEFAULT_GRID)]
        lambda_grid: Vec<f64>,
        #[arg(long, default_value_t = 4.0)]
        alpha: f64,
        #[arg(long, default_value_t = 1)]
        epochs: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[command(flatten)]
        codec: CodecArgs,
        #[command(flatten)]
        bleu: BleuArgs,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Transfer every corpus sentence across the classifier's boundary
    Transfer {
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long)]
        classifier: PathBuf,
        /// Trained bandit state; omit with --baseline
        #[arg(long, conflicts_with = "baseline")]
        bandit: Option<PathBuf>,
        /// Use the fixed mirror shift λ = 1 instead of a bandit
        #[arg(long)]
        baseline: bool,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[command(flatten)]
        codec: CodecArgs,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Score transferred sentences against the gold flips
    Evaluate {
        #[arg(long)]
        corpus: PathBuf,
        /// Output of the transfer subcommand
        #[arg(long)]
        transferred: PathBuf,
        #[arg(long, value_enum)]
        property: PropertyArg,
        /// Accept content when BLEU-vs-gold reaches this threshold instead of
        /// requiring an exact match
        #[arg(long)]
        relaxed_bleu: Option<f64>,
        #[arg(long, value_enum, default_value = "english")]
        language: Language,
    },
    /// Full seeded pipeline: train everything, compare CMAB vs the baseline
    RunExperiment {
        #[arg(long, value_enum, default_value = "tense")]
        property: PropertyArg,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Train on English, decode and judge in the second language
        #[arg(long)]
        cross_lingual: bool,
        #[arg(long, default_value_t = 32)]
        dim: usize,
        #[arg(long, value_delimiter = ',', default_value = DEFAULT_GRID)]
        lambda_grid: Vec<f64>,
        #[arg(long, default_value_t = 4.0)]
        alpha: f64,
        #[arg(long, default_value_t = 1)]
        epochs: usize,
        #[arg(long, default_value_t = 2500)]
        train_count: usize,
        #[arg(long, default_value_t = 100)]
        eval_count: usize,
        #[arg(long, default_value_t = 0.15)]
        coupling: f64,
        #[arg(long, default_value_t = 0.0)]
        noise: f64,
        #[arg(long, default_value_t = 0.5)]
        gain_min: f64,
        #[arg(long, default_value_t = 2.0)]
        gain_max: f64,
        /// Also write the report to a file
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn open_out(path: &Option<PathBuf>) -> Result<Box<dyn Write>, Error> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(std::io::stdout().lock()),
    })
}

fn read_file(path: &Path) -> Result<File, Error> {
    File::open(path).map_err(|e| Error::Data(format!("{}: {e}", path.display())))
}

fn load_corpus_file(path: &Path) -> Result<Vec<CorpusRecord>, Error> {
    read_corpus(read_file(path)?)
}

/// Transferred sentences: `id<TAB>lambda<TAB>sentence` per line.
fn write_transferred<W: Write>(
    mut out: W,
    outcomes: &[propsteer::pipeline::TransferOutcome],
) -> Result<(), Error> {
    for (id, o) in outcomes.iter().enumerate() {
        writeln!(out, "{id}\t{}\t{}", o.lambda, o.transferred)?;
    }
    Ok(())
}

fn read_transferred<R: Read>(input: R) -> Result<Vec<String>, Error> {
    let mut sentences = Vec::new();
    let mut text = String::new();
    let mut input = input;
    input.read_to_string(&mut text)?;
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() != 3 {
            return Err(Error::Parse {
                line: i + 1,
                message: format!("expected 3 tab-separated fields, got {}", fields.len()),
            });
        }
        sentences.push(fields[2].to_owned());
    }
    Ok(sentences)
}

fn run(cli: Cli) -> Result<(), Error> {
    match cli.command {
        Command::SynthGen {
            count,
            seed,
            language,
            out,
        } => {
            let records = language.grammar().generate_corpus(count, seed)?;
            write_corpus(open_out(&out)?, &records)
        }
        Command::Encode {
            corpus,
            property,
            seed,
            codec,
            out,
        } => {
            let records = load_corpus_file(&corpus)?;
            let codec = codec.build(seed)?;
            let property = Property::from(property);
            let mut embeddings = Vec::with_capacity(records.len());
            for rec in &records {
                embeddings.push(LabeledEmbedding::new(
                    codec.encode(&rec.sentence)?,
                    rec.labels[property.index()],
                ));
            }
            save_embeddings(open_out(&out)?, &embeddings)
        }
        Command::TrainClf {
            embeddings,
            learning_rate,
            l2_penalty,
            max_iters,
            grad_tol,
            seed,
            out,
        } => {
            let data = load_embeddings(read_file(&embeddings)?)?;
            let cfg = TrainConfig {
                learning_rate,
                l2_penalty,
                max_iters,
                grad_tol,
                seed,
            };
            let clf = LinearClassifier::train(&data, &cfg)?;
            save_classifier(open_out(&out)?, &clf)
        }
        Command::Probe {
            embeddings,
            folds,
            seed,
        } => {
            let data = load_embeddings(read_file(&embeddings)?)?;
            let cfg = TrainConfig {
                seed,
                ..TrainConfig::default()
            };
            let acc = cross_validate(&data, folds, &cfg)?;
            println!("cv_accuracy={acc} folds={folds} count={}", data.len());
            Ok(())
        }
        Command::TrainBandit {
            corpus,
            classifier,
            lambda_grid,
            alpha,
            epochs,
            seed,
            codec,
            bleu,
            out,
        } => {
            let records = load_corpus_file(&corpus)?;
            let clf = load_classifier(read_file(&classifier)?)?;
            let codec = codec.build(seed)?;
            let bleu = bleu.build()?;
            let mut bandit = LinUcb::new(&lambda_grid, codec.latent_dim(), alpha)?;
            let sentences: Vec<String> = records.into_iter().map(|r| r.sentence).collect();
            let log = bandit.train(&sentences, &codec, &clf, epochs, &bleu, seed)?;
            eprintln!(
                "trained {} rounds, mean reward {}",
                log.len(),
                log.mean_reward_of_last(usize::MAX)
            );
            save_bandit(open_out(&out)?, &bandit)
        }
        Command::Transfer {
            corpus,
            classifier,
            bandit,
            baseline,
            seed,
            codec,
            out,
        } => {
            let records = load_corpus_file(&corpus)?;
            let clf = load_classifier(read_file(&classifier)?)?;
            let codec = codec.build(seed)?;
            let bandit = match (&bandit, baseline) {
                (Some(path), false) => Some(load_bandit(read_file(path)?)?),
                (None, true) => None,
                (None, false) => {
                    return Err(Error::Data("pass --bandit <file> or --baseline".to_owned()))
                }
                (Some(_), true) => unreachable!("clap rejects the conflict"),
            };
            let policy = match &bandit {
                Some(b) => LambdaPolicy::Greedy(b),
                None => LambdaPolicy::Fixed(1.0),
            };
            let sentences: Vec<String> = records.into_iter().map(|r| r.sentence).collect();
            let outcomes = run_transfer(&clf, &policy, &codec, &sentences)?;
            write_transferred(open_out(&out)?, &outcomes)
        }
        Command::Evaluate {
            corpus,
            transferred,
            property,
            relaxed_bleu,
            language,
        } => {
            let records = load_corpus_file(&corpus)?;
            let outputs = read_transferred(read_file(&transferred)?)?;
            let property = Property::from(property);
            let grammar = language.grammar();
            let pairs: Vec<(String, String)> = records
                .iter()
                .map(|r| (r.sentence.clone(), r.flips[property.index()].clone()))
                .collect();
            let criterion = match relaxed_bleu {
                Some(t) => ContentCriterion::BleuAtLeast(t),
                None => ContentCriterion::Exact,
            };
            let report = evaluate(
                &pairs,
                &outputs,
                |s| grammar.label_of(s, property).ok(),
                criterion,
                &BleuConfig::default(),
            )?;
            println!(
                "Label (%) {:>7.1}\nAll (%)   {:>7.1}\nBLEU      {:>7.3}",
                report.label_acc, report.all_acc, report.bleu_vs_gold
            );
            println!("{}", report.machine_line());
            Ok(())
        }
        Command::RunExperiment {
            property,
            seed,
            cross_lingual,
            dim,
            lambda_grid,
            alpha,
            epochs,
            train_count,
            eval_count,
            coupling,
            noise,
            gain_min,
            gain_max,
            out,
        } => {
            let cfg = ExperimentConfig {
                property: Property::from(property),
                seed,
                dim,
                lambda_grid,
                alpha,
                epochs,
                train_count,
                eval_count,
                gain_range: (gain_min, gain_max),
                coupling,
                noise_sigma: noise,
                cross_lingual,
                ..ExperimentConfig::default()
            };
            let report = run_experiment(&cfg)?;
            let rendered = report.render();
            print!("{rendered}");
            if let Some(path) = out {
                File::create(path)?.write_all(rendered.as_bytes())?;
            }
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // clap's message already carries the usage text
            let _ = e.print();
            return ExitCode::from(1);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
