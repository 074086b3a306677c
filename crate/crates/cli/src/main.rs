use std::fs::{self, File};
use std::io::{self, BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use opedit_annotate::Store;
use opedit_core::corpus::{
    compute_stats, parse_corpus, reference_to_json, serialize_corpus, validate_corpus, DeleteUnit,
    ParseOptions, StatsOptions,
};
use opedit_core::metrics::{evaluate_corpus, EvalRow};
use opedit_core::stg::{decode_instance, encode_instance, StgRecord, DEFAULT_T_MAX};
use opedit_core::{
    derive_operations, normalize_reference, CorrectionInstance, Sentence, ValidationOptions,
};
use serde_json::Value;

#[derive(Parser)]
#[command(name = "opedit", version, about = "Operation-oriented grammatical error correction toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct CorpusArgs {
    /// Corpus file in the operation JSON format.
    corpus: PathBuf,
    /// Skip malformed records instead of failing on the first one.
    #[arg(long)]
    lenient: bool,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Text,
    Records,
}

#[derive(Clone, Copy, ValueEnum)]
enum Unit {
    Run,
    Position,
    Operation,
}

impl From<Unit> for DeleteUnit {
    fn from(u: Unit) -> Self {
        match u {
            Unit::Run => DeleteUnit::Run,
            Unit::Position => DeleteUnit::Position,
            Unit::Operation => DeleteUnit::Operation,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Check references, flags and duplicates; exits 1 when problems are found.
    Validate {
        #[command(flatten)]
        input: CorpusArgs,
        /// Reject modify spans that the switch breaks apart.
        #[arg(long)]
        strict_switch: bool,
    },
    /// Corpus statistics.
    Stats {
        #[command(flatten)]
        input: CorpusArgs,
        /// Count identical references of a sentence once.
        #[arg(long)]
        dedupe: bool,
        #[arg(long, value_enum, default_value = "run")]
        delete_unit: Unit,
        #[arg(long, value_enum, default_value = "text")]
        format: Format,
    },
    /// Derive a minimal reference turning a source into a target.
    Derive {
        #[arg(long, requires = "tgt", conflicts_with = "batch")]
        src: Option<String>,
        #[arg(long, requires = "src")]
        tgt: Option<String>,
        /// Tab-separated file of source and target columns, no header.
        #[arg(long, required_unless_present = "src")]
        batch: Option<PathBuf>,
    },
    /// Rewrite every reference in its minimal form.
    Normalize {
        #[command(flatten)]
        input: CorpusArgs,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Encode references as pointer, tag and fill labels, one JSON line each.
    EncodeStg {
        #[command(flatten)]
        input: CorpusArgs,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = DEFAULT_T_MAX)]
        t_max: usize,
    },
    /// Apply label records to source sentences, one per line.
    DecodeStg {
        #[arg(long)]
        src: PathBuf,
        #[arg(long)]
        labels: PathBuf,
    },
    /// Score hypotheses against the corpus references.
    Eval {
        #[arg(long)]
        corpus: PathBuf,
        /// Tab-separated source and hypothesis, in corpus order.
        #[arg(long)]
        hyp: PathBuf,
        #[arg(long, value_enum, default_value = "text")]
        format: Format,
        /// Include per-row scores in record output.
        #[arg(long)]
        per_row: bool,
    },
    /// Run the annotation service.
    Serve {
        #[arg(long, default_value_t = 8080)]
        port: u16,
        #[arg(long, default_value = "127.0.0.1")]
        host: String,
        /// Directory for the event log and snapshots.
        #[arg(long)]
        data: PathBuf,
        /// Corpus whose sentences are added as tasks on startup.
        #[arg(long)]
        import: Option<PathBuf>,
        #[arg(long, default_value_t = 2)]
        replication: usize,
    },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(2) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

fn load(input: &CorpusArgs) -> Result<Vec<CorrectionInstance>> {
    let path = &input.corpus;
    let file = File::open(path).with_context(|| format!("opening {}", path.display()))?;
    let outcome = parse_corpus(BufReader::new(file), ParseOptions { lenient: input.lenient })
        .with_context(|| format!("parsing {}", path.display()))?;
    for f in &outcome.failures {
        eprintln!("skipped {f}");
    }
    Ok(outcome.instances)
}

fn read_tsv(path: &Path) -> Result<Vec<(String, String)>> {
    let file = File::open(path).with_context(|| format!("opening {}", path.display()))?;
    let mut rows = Vec::new();
    for (n, line) in BufReader::new(file).lines().enumerate() {
        let line = line.with_context(|| format!("reading {}", path.display()))?;
        let line = line.strip_suffix('\r').unwrap_or(&line);
        let Some((a, b)) = line.split_once('\t') else {
            bail!("{}:{}: expected two tab-separated columns", path.display(), n + 1);
        };
        if b.contains('\t') {
            bail!("{}:{}: more than two columns", path.display(), n + 1);
        }
        rows.push((a.to_string(), b.to_string()));
    }
    Ok(rows)
}

fn stdout() -> BufWriter<io::StdoutLock<'static>> {
    BufWriter::new(io::stdout().lock())
}

fn run(command: Command) -> Result<ExitCode> {
    match command {
        Command::Validate { input, strict_switch } => {
            let instances = load(&input)?;
            let report = validate_corpus(&instances, ValidationOptions { strict_switch });
            let mut out = stdout();
            for issue in &report.issues {
                writeln!(out, "{issue}")?;
            }
            writeln!(
                out,
                "{} sentences, {} references, {} issues",
                report.instances,
                report.references,
                report.issues.len()
            )?;
            out.flush()?;
            Ok(if report.is_clean() { ExitCode::SUCCESS } else { ExitCode::from(1) })
        }
        Command::Stats {
            input,
            dedupe,
            delete_unit,
            format,
        } => {
            let instances = load(&input)?;
            let stats = compute_stats(
                &instances,
                StatsOptions {
                    dedupe,
                    delete_unit: delete_unit.into(),
                },
            )?;
            let mut out = stdout();
            match format {
                Format::Text => write!(out, "{stats}")?,
                Format::Records => writeln!(out, "{}", serde_json::to_string(&stats)?)?,
            }
            out.flush()?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Derive { src, tgt, batch } => {
            let pairs = match (src, tgt, batch) {
                (Some(s), Some(t), None) => vec![(s, t)],
                (None, None, Some(path)) => read_tsv(&path)?,
                _ => unreachable!("clap enforces the argument groups"),
            };
            let mut out = stdout();
            for (k, (s, t)) in pairs.iter().enumerate() {
                let r = derive_operations(&Sentence::new(s), &Sentence::new(t))
                    .with_context(|| format!("row {}", k + 1))?;
                writeln!(out, "{}", reference_to_json(&r))?;
            }
            out.flush()?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Normalize { input, out } => {
            let mut instances = load(&input)?;
            for inst in &mut instances {
                for r in &mut inst.references {
                    *r = normalize_reference(&inst.sentence, r).with_context(|| format!("record {}", inst.id))?;
                }
            }
            let text = serialize_corpus(&instances)?;
            match out {
                Some(path) => fs::write(&path, text).with_context(|| format!("writing {}", path.display()))?,
                None => {
                    let mut o = stdout();
                    o.write_all(text.as_bytes())?;
                    o.flush()?;
                }
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::EncodeStg { input, out, t_max } => {
            let instances = load(&input)?;
            let file = File::create(&out).with_context(|| format!("creating {}", out.display()))?;
            let mut w = BufWriter::new(file);
            let (mut written, mut skipped) = (0, 0);
            for inst in &instances {
                for (k, r) in inst.references.iter().enumerate() {
                    match encode_instance(&inst.sentence, r, t_max) {
                        Ok(labels) => {
                            let rec = StgRecord::from_labels(Some(format!("{}/{k}", inst.id)), &labels);
                            writeln!(w, "{}", serde_json::to_string(&rec)?)?;
                            written += 1;
                        }
                        Err(e) => {
                            eprintln!("skipped {} operation[{k}]: {e}", inst.id);
                            skipped += 1;
                        }
                    }
                }
            }
            w.flush()?;
            eprintln!("{written} label records written, {skipped} skipped");
            Ok(ExitCode::SUCCESS)
        }
        Command::DecodeStg { src, labels } => {
            let sources = fs::read_to_string(&src).with_context(|| format!("reading {}", src.display()))?;
            let records = fs::read_to_string(&labels).with_context(|| format!("reading {}", labels.display()))?;
            let sources: Vec<&str> = sources.lines().collect();
            let records: Vec<&str> = records.lines().filter(|l| !l.trim().is_empty()).collect();
            if sources.len() != records.len() {
                bail!("{} source lines but {} label records", sources.len(), records.len());
            }
            let mut out = stdout();
            for (n, (s, rec)) in sources.iter().zip(&records).enumerate() {
                let rec: StgRecord =
                    serde_json::from_str(rec).with_context(|| format!("{}:{}", labels.display(), n + 1))?;
                let decoded = decode_instance(&Sentence::new(s), &rec.to_labels())
                    .with_context(|| format!("line {}", n + 1))?;
                writeln!(out, "{decoded}")?;
            }
            out.flush()?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Eval {
            corpus,
            hyp,
            format,
            per_row,
        } => {
            let instances = load(&CorpusArgs {
                corpus,
                lenient: false,
            })?;
            let hyps = read_tsv(&hyp)?;
            if hyps.len() != instances.len() {
                bail!("{} hypothesis rows for {} corpus records", hyps.len(), instances.len());
            }
            let rows = instances
                .iter()
                .zip(&hyps)
                .enumerate()
                .map(|(n, (inst, (src, h)))| {
                    if inst.sentence.to_string() != *src {
                        bail!("{}:{}: source differs from record {}", hyp.display(), n + 1, inst.id);
                    }
                    Ok(EvalRow {
                        source: inst.sentence.clone(),
                        hypothesis: Sentence::new(h),
                        references: inst.references.clone(),
                        error_types: inst.error_types.iter().copied().collect(),
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            let report = evaluate_corpus(&rows)?;
            let mut out = stdout();
            match format {
                Format::Text => {
                    writeln!(out, "rows   {}", report.overall.rows)?;
                    writeln!(out, "EM     {:.2}", report.exact_match)?;
                    writeln!(out, "P      {:.4}", report.precision)?;
                    writeln!(out, "R      {:.4}", report.recall)?;
                    writeln!(out, "F0.5   {:.4}", report.f_half)?;
                    for (t, agg) in &report.by_type {
                        writeln!(
                            out,
                            "{t:<6} EM {:.2}  F0.5 {:.4}  ({} rows)",
                            agg.exact_match(),
                            agg.counts.f_half(),
                            agg.rows
                        )?;
                    }
                }
                Format::Records => {
                    let mut v = serde_json::to_value(&report)?;
                    if !per_row {
                        if let Value::Object(m) = &mut v {
                            m.remove("per_row");
                        }
                    }
                    writeln!(out, "{v}")?;
                }
            }
            out.flush()?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Serve {
            port,
            host,
            data,
            import,
            replication,
        } => {
            tracing_subscriber::fmt()
                .with_env_filter(
                    tracing_subscriber::EnvFilter::try_from_default_env().unwrap_or_else(|_| "info".into()),
                )
                .init();
            let store = Store::open(&data).with_context(|| format!("opening store in {}", data.display()))?;
            if let Some(path) = import {
                let instances = load(&CorpusArgs {
                    corpus: path,
                    lenient: false,
                })?;
                let created = store.import(&instances, replication)?;
                eprintln!("imported {created} tasks");
            }
            let rt = tokio::runtime::Runtime::new()?;
            rt.block_on(async {
                let listener = tokio::net::TcpListener::bind((host.as_str(), port))
                    .await
                    .with_context(|| format!("binding {host}:{port}"))?;
                opedit_annotate::serve(listener, Arc::new(store)).await?;
                Ok(ExitCode::SUCCESS)
            })
        }
    }
}
