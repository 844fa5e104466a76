use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use wilink::harness::{
    bench, dataset_hash, evaluate, gradcheck_suite, parse_gen_config, train, write_dataset_dir,
    write_loss_csv, CaseSpec, DatasetDir, GenConfig, Model, ReportInputs, TrainOptions,
};
use wilink::sim::{build_environment, generate_dataset};
use wilink::{Error, Result};

#[derive(Parser)]
#[command(
    name = "wilink",
    version,
    about = "Link selection for multi-link Wi-Fi activity sensing"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic dataset directory.
    Gen {
        /// Flat `key = value` file; defaults apply to missing keys.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 2021)]
        seed: u64,
        /// Synthesise samples on one thread (output is identical).
        #[arg(long)]
        serial: bool,
    },
    /// Train the networks of one case.
    Train {
        #[arg(long)]
        data: PathBuf,
        #[arg(long, value_parser = clap::value_parser!(u8).range(1..=5))]
        case: u8,
        #[arg(long, value_parser = clap::value_parser!(u8).range(1..=4))]
        cnn: u8,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        epochs: Option<usize>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Overrides the case's learning rate.
        #[arg(long)]
        learning_rate: Option<f64>,
        /// Every n-th training sample is held out for early stopping; 0 disables.
        #[arg(long, default_value_t = 10)]
        holdout_every: usize,
    },
    /// Evaluate a trained case on the test split and write a JSON report.
    Eval {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        data: PathBuf,
        #[arg(long, value_parser = clap::value_parser!(u8).range(1..=5))]
        case: u8,
        #[arg(long)]
        report: PathBuf,
        /// Seed of per-sample random link draws (case 4).
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Time link decision and classification per test sample.
    Bench {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        data: PathBuf,
        #[arg(long, value_parser = clap::value_parser!(u8).range(1..=5))]
        case: u8,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Finite-difference gradient check of every layer kind and architecture.
    Gradcheck {
        #[arg(long, default_value_t = 7)]
        seed: u64,
    },
}

fn write_json<T: serde::Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut bytes = serde_json::to_vec_pretty(value).map_err(|e| Error::Data(e.to_string()))?;
    bytes.push(b'\n');
    std::fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

fn load_model(dir: &Path, case: u8) -> Result<Model> {
    let model = Model::load(dir)?;
    if model.spec.case() != case {
        return Err(Error::Usage(format!(
            "{} holds a case {} model, not case {case}",
            dir.display(),
            model.spec.case()
        )));
    }
    Ok(model)
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Gen {
            config,
            out,
            seed,
            serial,
        } => {
            let cfg = match config {
                Some(path) => {
                    let text = std::fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
                    parse_gen_config(&text)?
                }
                None => GenConfig::default(),
            };
            let env = build_environment(cfg.env.clone())?;
            let dataset = generate_dataset(&env, &cfg.dataset_spec(seed))?;
            write_dataset_dir(&out, &env, &dataset, !serial)?;
            log::info!(
                "wrote {} + {} samples to {}",
                cfg.train,
                cfg.test,
                out.display()
            );
        }
        Command::Train {
            data,
            case,
            cnn,
            out,
            epochs,
            seed,
            learning_rate,
            holdout_every,
        } => {
            let dir = DatasetDir::open(&data)?;
            let mut spec = CaseSpec::new(case, cnn as usize)?;
            if let Some(lr) = learning_rate {
                spec.hyper.learning_rate = lr;
            }
            let fspec = Default::default();
            let features = dir.features(fspec, true, false)?;
            let opts = TrainOptions {
                epochs,
                seed,
                holdout_every,
                ..Default::default()
            };
            let outcome = train(&features.train, &dir.env, spec, fspec, &opts)?;
            let hash = outcome.model.save(&out)?;
            let csv = out.join("loss.csv");
            let file = File::create(&csv).map_err(|e| Error::io(&csv, e))?;
            let mut w = BufWriter::new(file);
            write_loss_csv(&outcome.log, &mut w)
                .and_then(|_| w.flush())
                .map_err(|e| Error::io(&csv, e))?;
            println!(
                "checkpoint {} sha256 {hash} (epoch {})",
                out.display(),
                outcome.best_epoch
            );
            if let Some(msg) = outcome.failure {
                return Err(Error::Numeric(format!("{msg}; last good weights saved")));
            }
        }
        Command::Eval {
            model,
            data,
            case,
            report,
            seed,
        } => {
            let m = load_model(&model, case)?;
            let dir = DatasetDir::open(&data)?;
            let features = dir.features(m.features, false, true)?;
            if features.test.is_empty() {
                return Err(Error::Data(format!("{} has no test split", data.display())));
            }
            let mut r = evaluate(&m, &dir.env, &features.test, seed)?;
            r.inputs = Some(ReportInputs {
                dataset_sha256: dataset_hash(&data)?,
                checkpoint_sha256: wilink::nn::checkpoint_hash(&model)?,
            });
            write_json(&report, &r)?;
            println!(
                "case {case}: accuracy {:.4} over {} samples",
                r.metrics.accuracy, r.metrics.samples
            );
        }
        Command::Bench {
            model,
            data,
            case,
            seed,
        } => {
            let m = load_model(&model, case)?;
            let dir = DatasetDir::open(&data)?;
            let features = dir.features(m.features, false, true)?;
            let r = bench(&m, &dir.env, &features.test, seed)?;
            println!(
                "{}",
                serde_json::to_string_pretty(&r).map_err(|e| Error::Data(e.to_string()))?
            );
        }
        Command::Gradcheck { seed } => {
            let lines = gradcheck_suite(seed)?;
            let mut failed = Vec::new();
            for l in &lines {
                let status = if l.passed { "ok" } else { "FAIL" };
                println!(
                    "{status:<4} {:<20} max rel error {:.3e} at {} ({} entries)",
                    l.name, l.max_rel_error, l.worst, l.checked
                );
                if !l.passed {
                    failed.push(format!("{} ({})", l.name, l.worst));
                }
            }
            if !failed.is_empty() {
                return Err(Error::Numeric(format!(
                    "gradient check failed: {}",
                    failed.join(", ")
                )));
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
