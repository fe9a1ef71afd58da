//! Subcommands of the `qreward` binary. Every command reads and writes JSONL
//! (a path of `-` or an omitted `--output` means stdin/stdout).

use std::fs::File;
use std::io::{self, BufRead, BufReader, BufWriter, Write};
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use clap::{Args, Parser, Subcommand};
use qreward_core::corpus::{Corruptor, SyntheticCorpus};
use qreward_core::pipeline::{
    audit_batch, confusion_matrix, corpus_stats, dedup, draw_audit_sample, error_pattern_summary, read_jsonl, run_protocol,
    write_jsonl, Annotation, AuditVerdict, ProtocolConfig, SampleRecord, TaskType, TrigramCosine, VerificationRecord,
};
use qreward_core::ses::{Ses, Verification};
use qreward_core::vrm::{build_oracle_dataset, train, TrainingExample};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::config::{Overrides, ServiceConfig};
use crate::error::CliError;
use crate::server::{self, AppState};
use crate::{build_engine, load_model, sha256_hex, LoadedModel};

#[derive(Debug, Parser)]
#[command(name = "qreward", version, about = "Verification-aware rewards for quantum-mechanics answers")]
pub struct Cli {
    /// TOML configuration file.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Trust placed in a failed check, λ(−1), in (0, 0.5).
    #[arg(long, global = true)]
    pub lambda_fail: Option<f64>,
    /// Semantic pass threshold on the mean score.
    #[arg(long, global = true)]
    pub zeta: Option<f64>,
    /// Audit rejection threshold on the sampled error rate.
    #[arg(long, global = true)]
    pub tau: Option<f64>,
    /// Near-duplicate similarity threshold.
    #[arg(long, global = true)]
    pub upsilon: Option<f64>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct Io {
    #[arg(long, short)]
    pub input: PathBuf,
    #[arg(long, short)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run the deterministic checks on every record of a corpus.
    Verify(Io),
    /// Score every record with the reward model.
    Score {
        #[command(flatten)]
        io: Io,
        #[arg(long)]
        model: Option<PathBuf>,
        /// Force every indicator to 0 (ablation).
        #[arg(long)]
        no_verifier: bool,
    },
    /// Pick the best candidate per line of `{question, candidates}`.
    Bon {
        #[command(flatten)]
        io: Io,
        #[arg(long)]
        model: Option<PathBuf>,
    },
    /// Distil an oracle dataset into a model file.
    Train {
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        output: PathBuf,
        #[arg(long)]
        epochs: Option<usize>,
        #[arg(long)]
        batch_size: Option<usize>,
        #[arg(long)]
        learning_rate: Option<f64>,
        #[arg(long)]
        hidden: Option<usize>,
        #[arg(long)]
        beta: Option<f64>,
    },
    /// Label fixtures (and rule-corrupted copies) with the configured judge.
    BuildOracle {
        #[arg(long, short, conflicts_with = "synthetic", required_unless_present = "synthetic")]
        input: Option<PathBuf>,
        /// Generate this many synthetic fixtures instead of reading a corpus.
        #[arg(long)]
        synthetic: Option<usize>,
        #[arg(long, short)]
        output: Option<PathBuf>,
        #[arg(long, default_value_t = 1.0)]
        corruption_rate: f64,
    },
    /// Drop near-duplicate questions.
    Dedup {
        #[command(flatten)]
        io: Io,
        /// Where to write the dropped pairs.
        #[arg(long)]
        dropped: Option<PathBuf>,
    },
    /// Checks + judge + verdict for every record.
    Protocol {
        #[command(flatten)]
        io: Io,
        #[arg(long, default_value_t = 0)]
        workers: usize,
    },
    /// Batch audit: draw a sample, review it, decide.
    #[command(subcommand)]
    Audit(AuditCommand),
    /// Confusion matrix and pass rates of a protocol output.
    Stats {
        #[arg(long, short)]
        input: PathBuf,
    },
    /// Run the HTTP service.
    Serve {
        #[arg(long)]
        model: Option<PathBuf>,
        #[arg(long)]
        bind: Option<SocketAddr>,
    },
}

#[derive(Debug, Subcommand)]
pub enum AuditCommand {
    /// Write the stratified audit sample of a corpus.
    Sample(Io),
    /// Annotate a sample interactively (resumes an existing annotations file).
    Review {
        #[arg(long)]
        sample: PathBuf,
        #[arg(long, short)]
        output: PathBuf,
    },
    /// Accept or reject the batch from the annotations.
    Decide {
        #[arg(long, short)]
        input: PathBuf,
        #[arg(long)]
        annotations: PathBuf,
        /// Protocol output, for the error-pattern report.
        #[arg(long, requires = "report")]
        verification: Option<PathBuf>,
        #[arg(long)]
        report: Option<PathBuf>,
    },
}

impl Cli {
    pub fn overrides(&self) -> Overrides {
        Overrides {
            seed: self.seed,
            lambda_fail: self.lambda_fail,
            zeta: self.zeta,
            tau: self.tau,
            upsilon: self.upsilon,
        }
    }
}

fn is_std(path: &Path) -> bool {
    path.as_os_str() == "-"
}

pub fn read_lines<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>, CliError> {
    if is_std(path) {
        return Ok(read_jsonl(io::stdin().lock())?);
    }
    let file = File::open(path).map_err(|e| CliError::Runtime(format!("{}: {e}", path.display())))?;
    Ok(read_jsonl(BufReader::new(file))?)
}

pub fn write_lines<T: Serialize>(path: Option<&Path>, items: &[T]) -> Result<(), CliError> {
    match path {
        Some(p) if !is_std(p) => {
            let file = File::create(p).map_err(|e| CliError::Runtime(format!("{}: {e}", p.display())))?;
            let mut w = BufWriter::new(file);
            write_jsonl(&mut w, items)?;
            w.flush()?;
        }
        _ => write_jsonl(io::stdout().lock(), items)?,
    }
    Ok(())
}

fn print_json(value: &impl Serialize) -> Result<(), CliError> {
    let text = serde_json::to_string_pretty(value).map_err(|e| CliError::Runtime(e.to_string()))?;
    println!("{text}");
    Ok(())
}

fn model_for(path: Option<&PathBuf>, cfg: &ServiceConfig) -> Result<LoadedModel, CliError> {
    let path = path
        .or(cfg.model.as_ref())
        .ok_or_else(|| CliError::Config("no model file: pass --model or set `model` in the config".into()))?;
    load_model(path)
}

#[derive(Debug, Serialize, Deserialize)]
struct VerifyLine {
    id: String,
    #[serde(flatten)]
    verification: Verification,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct BonItem {
    #[serde(default)]
    pub id: String,
    pub question: String,
    pub candidates: Vec<String>,
    #[serde(default)]
    pub reference_answer: Option<String>,
    #[serde(default)]
    pub task_type: Option<TaskType>,
}

/// Parses a review answer: `ok`/`o` or `error`/`e`, optionally followed by a note.
pub fn parse_review_answer(line: &str) -> Option<(AuditVerdict, Option<String>)> {
    let line = line.trim();
    let (head, rest) = line.split_once(char::is_whitespace).unwrap_or((line, ""));
    let verdict = match head.to_ascii_lowercase().as_str() {
        "o" | "ok" => AuditVerdict::Ok,
        "e" | "error" => AuditVerdict::Error,
        _ => return None,
    };
    let note = rest.trim();
    Some((verdict, (!note.is_empty()).then(|| note.to_string())))
}

/// Sequential review loop. Records already annotated are skipped; `q` stops early.
pub fn review(
    sample: &[SampleRecord],
    done: &[Annotation],
    mut input: impl BufRead,
    mut prompt: impl Write,
) -> io::Result<Vec<Annotation>> {
    let mut out = Vec::new();
    let pending: Vec<&SampleRecord> = sample.iter().filter(|r| !done.iter().any(|a| a.id == r.id)).collect();
    for (i, record) in pending.iter().enumerate() {
        writeln!(prompt, "\n[{}/{}] {} ({:?})", i + 1, pending.len(), record.id, record.task_type)?;
        writeln!(prompt, "Q: {}", record.question)?;
        writeln!(prompt, "A: {}", record.answer)?;
        loop {
            write!(prompt, "ok | error [note] | q > ")?;
            prompt.flush()?;
            let mut line = String::new();
            if input.read_line(&mut line)? == 0 || line.trim() == "q" {
                return Ok(out);
            }
            if let Some((verdict, note)) = parse_review_answer(&line) {
                out.push(Annotation {
                    id: record.id.clone(),
                    verdict,
                    note,
                });
                break;
            }
        }
    }
    Ok(out)
}

pub fn run(cli: Cli) -> Result<(), CliError> {
    let cfg = ServiceConfig::load(cli.config.as_deref(), cli.overrides())?;
    match cli.command {
        Command::Verify(io) => {
            let records: Vec<SampleRecord> = read_lines(&io.input)?;
            let ses = Ses::new(cfg.ses.clone());
            let lines: Vec<VerifyLine> = records
                .iter()
                .map(|r| VerifyLine {
                    id: r.id.clone(),
                    verification: ses.verify(r),
                })
                .collect();
            write_lines(io.output.as_deref(), &lines)
        }
        Command::Score { io, model, no_verifier } => {
            let loaded = model_for(model.as_ref(), &cfg)?;
            let mut engine = build_engine(&cfg, loaded.model)?;
            if no_verifier {
                engine = engine.without_verifier();
            }
            let records: Vec<SampleRecord> = read_lines(&io.input)?;
            let mut lines = Vec::with_capacity(records.len());
            for r in &records {
                lines.push(json!({ "id": r.id, "breakdown": engine.reward(r)? }));
            }
            write_lines(io.output.as_deref(), &lines)
        }
        Command::Bon { io, model } => {
            let loaded = model_for(model.as_ref(), &cfg)?;
            let engine = build_engine(&cfg, loaded.model)?;
            let items: Vec<BonItem> = read_lines(&io.input)?;
            let mut lines = Vec::with_capacity(items.len());
            for item in items {
                let mut base = SampleRecord::adhoc(item.question, "");
                base.id = item.id.clone();
                base.reference_answer = item.reference_answer;
                if let Some(t) = item.task_type {
                    base.task_type = t;
                }
                let (selected, breakdowns) = engine.best_of_n(&base, &item.candidates)?;
                let rewards: Vec<f64> = breakdowns.iter().map(|b| b.reward).collect();
                lines.push(json!({ "id": item.id, "selected": selected, "rewards": rewards }));
            }
            write_lines(io.output.as_deref(), &lines)
        }
        Command::Train {
            data,
            output,
            epochs,
            batch_size,
            learning_rate,
            hidden,
            beta,
        } => {
            let mut tc = cfg.train.clone();
            tc.epochs = epochs.unwrap_or(tc.epochs);
            tc.batch_size = batch_size.unwrap_or(tc.batch_size);
            tc.learning_rate = learning_rate.unwrap_or(tc.learning_rate);
            tc.hidden = hidden.unwrap_or(tc.hidden);
            tc.beta = beta.unwrap_or(tc.beta);
            let examples: Vec<TrainingExample> = read_lines(&data)?;
            let report = train(&examples, &tc).map_err(|e| CliError::Runtime(e.to_string()))?;
            let text = report.model.to_json();
            std::fs::write(&output, &text)?;
            print_json(&json!({
                "examples": examples.len(),
                "steps": report.steps,
                "initial_loss": report.initial_loss,
                "epoch_losses": report.epoch_losses,
                "model": output,
                "model_hash": sha256_hex(text.as_bytes()),
            }))
        }
        Command::BuildOracle {
            input,
            synthetic,
            output,
            corruption_rate,
        } => {
            if !(0.0..=1.0).contains(&corruption_rate) {
                return Err(CliError::Config(format!("corruption rate must lie in [0, 1], got {corruption_rate}")));
            }
            let fixtures: Vec<SampleRecord> = match (input, synthetic) {
                (Some(path), _) => read_lines(&path)?,
                (None, Some(n)) => SyntheticCorpus::new(cfg.seed).take(n),
                (None, None) => unreachable!("clap requires one of --input/--synthetic"),
            };
            let judge = cfg.judge.build();
            let data = build_oracle_dataset(
                &fixtures,
                judge.as_ref(),
                &Ses::new(cfg.ses.clone()),
                &Corruptor::new(corruption_rate, cfg.seed),
            )
            .map_err(|e| CliError::Runtime(e.to_string()))?;
            eprintln!("{} fixtures -> {} examples", fixtures.len(), data.len());
            write_lines(output.as_deref(), &data)
        }
        Command::Dedup { io, dropped } => {
            let records: Vec<SampleRecord> = read_lines(&io.input)?;
            let total = records.len();
            let out = dedup(records, cfg.upsilon, &TrigramCosine);
            eprintln!("kept {} of {total} (upsilon {})", out.kept.len(), cfg.upsilon);
            if let Some(path) = dropped {
                write_lines(Some(&path), &out.dropped)?;
            }
            write_lines(io.output.as_deref(), &out.kept)
        }
        Command::Protocol { io, workers } => {
            let records: Vec<SampleRecord> = read_lines(&io.input)?;
            let judge = cfg.judge.build();
            let pc = ProtocolConfig { zeta: cfg.zeta, workers };
            let out = run_protocol(&records, &Ses::new(cfg.ses.clone()), judge.as_ref(), &pc);
            write_lines(io.output.as_deref(), &out)
        }
        Command::Audit(AuditCommand::Sample(io)) => {
            let records: Vec<SampleRecord> = read_lines(&io.input)?;
            let ids = draw_audit_sample(&records, &cfg.audit);
            let sample: Vec<&SampleRecord> = records.iter().filter(|r| ids.contains(&r.id)).collect();
            eprintln!("sampled {} of {}", sample.len(), records.len());
            write_lines(io.output.as_deref(), &sample)
        }
        Command::Audit(AuditCommand::Review { sample, output }) => {
            let sample: Vec<SampleRecord> = read_lines(&sample)?;
            let done: Vec<Annotation> = if output.exists() { read_lines(&output)? } else { Vec::new() };
            let fresh = review(&sample, &done, io::stdin().lock(), io::stderr())?;
            let mut all = done;
            all.extend(fresh);
            eprintln!("{} of {} annotated", all.len(), sample.len());
            write_lines(Some(&output), &all)
        }
        Command::Audit(AuditCommand::Decide {
            input,
            annotations,
            verification,
            report,
        }) => {
            let records: Vec<SampleRecord> = read_lines(&input)?;
            let notes: Vec<Annotation> = read_lines(&annotations)?;
            let decision = audit_batch(&records, &notes, &cfg.audit).map_err(|e| CliError::Runtime(e.to_string()))?;
            if let (Some(vpath), Some(rpath)) = (verification, report) {
                let verified: Vec<VerificationRecord> = read_lines(&vpath)?;
                let summary = error_pattern_summary(&verified, &notes);
                let text = serde_json::to_string_pretty(&summary).map_err(|e| CliError::Runtime(e.to_string()))?;
                std::fs::write(rpath, text)?;
            }
            print_json(&decision)
        }
        Command::Stats { input } => {
            let records: Vec<VerificationRecord> = read_lines(&input)?;
            let m = confusion_matrix(&records, cfg.zeta);
            print_json(&json!({
                "confusion": m,
                "percentages": m.percentages(),
                "corpus": corpus_stats(&records, cfg.zeta),
            }))
        }
        Command::Serve { model, bind } => {
            let loaded = model_for(model.as_ref(), &cfg)?;
            let engine = build_engine(&cfg, loaded.model)?;
            let state = Arc::new(AppState::new(
                engine,
                loaded.hash.clone(),
                cfg.max_concurrency,
                cfg.max_candidates,
                cfg.body_limit,
            ));
            let addr = bind.unwrap_or(cfg.bind);
            let runtime = tokio::runtime::Builder::new_multi_thread()
                .enable_all()
                .build()?;
            runtime.block_on(async move {
                let listener = tokio::net::TcpListener::bind(addr)
                    .await
                    .map_err(|e| CliError::Config(format!("cannot bind {addr}: {e}")))?;
                eprintln!("qreward listening on {addr} (model {})", &loaded.hash[..12]);
                server::serve(listener, state).await.map_err(CliError::from)
            })
        }
    }
}
