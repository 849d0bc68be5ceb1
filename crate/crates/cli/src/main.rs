//! Command-line surface: corpus synthesis, decomposition, hierarchy
//! building, coding, composition and the message-algebra partition, glued
//! together by file formats from the core crate.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use sembase_core::coding::encode;
use sembase_core::compose::{discover, KnowledgeLog, Validator};
use sembase_core::decompose::{oracle_decompose, solve};
use sembase_core::error::Error as CoreError;
use sembase_core::hierarchy::build_hierarchy;
use sembase_core::io::report::{read_json, write_json, BasesFile};
use sembase_core::io::{
    read_corpus, read_journal, synthesize, write_corpus, write_journal, DecomposeReport,
    GeneratorSpec, HierarchyReport, RunConfig, SummaryReport,
};
use sembase_core::message::{absorb, partition, Message, ReceiverState, Universe};
use sembase_core::signal::{BaseSet, Coefficients, SampleSet, Signal};

mod exit_code {
    pub const USAGE: u8 = 1;
    pub const CONFIG: u8 = 2;
    pub const INFEASIBLE: u8 = 3;
    pub const IO: u8 = 4;
}

#[derive(Debug, Parser)]
#[command(
    name = "sembase",
    version,
    about = "semantic basis decomposition toolkit"
)]
struct Cli {
    /// Threads for candidate-level parallelism (0 = rayon default).
    /// Outputs are independent of this setting.
    #[arg(long, global = true, default_value_t = 0)]
    threads: usize,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct ConfigArgs {
    /// Run configuration (JSON). Defaults apply when omitted.
    #[arg(long)]
    config: Option<PathBuf>,

    /// Override the run seed.
    #[arg(long)]
    seed: Option<u64>,
}

impl ConfigArgs {
    fn load(&self) -> Result<RunConfig, CliError> {
        let mut cfg = match &self.config {
            Some(path) => {
                let text = std::fs::read_to_string(path)
                    .map_err(|e| CliError::io(format!("reading {}: {e}", path.display())))?;
                RunConfig::from_json(&text).map_err(CliError::config)?
            }
            None => RunConfig::default(),
        };
        if let Some(seed) = self.seed {
            cfg.seed = seed;
        }
        Ok(cfg)
    }
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Synthesize a corpus from a generator spec; ground truth is written
    /// alongside as `<out>.truth.json`.
    Synth {
        /// Generator spec as inline JSON or @path to a JSON file.
        #[arg(long)]
        spec: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Solve the bi-level decomposition over a corpus.
    Decompose {
        #[arg(long)]
        corpus: PathBuf,
        #[command(flatten)]
        config: ConfigArgs,
        /// Output directory (report.json, bases.json).
        #[arg(long)]
        out: PathBuf,
        /// Also run the exhaustive oracle when the instance fits its
        /// guard, writing oracle.json.
        #[arg(long)]
        oracle: bool,
        /// Quantization grid for the oracle, comma separated.
        #[arg(long, default_value = "-1,0,1", allow_hyphen_values = true)]
        oracle_levels: String,
    },
    /// Build the iterated semantic hierarchy over a corpus.
    Hierarchy {
        #[arg(long)]
        corpus: PathBuf,
        #[command(flatten)]
        config: ConfigArgs,
        /// Output directory (hierarchy.json).
        #[arg(long)]
        out: PathBuf,
    },
    /// Sparse-code every corpus sample against a stored base set.
    Encode {
        #[arg(long)]
        corpus: PathBuf,
        /// bases.json from decompose, or hierarchy.json (its leaf set).
        #[arg(long)]
        bases: PathBuf,
        #[command(flatten)]
        config: ConfigArgs,
        #[arg(long)]
        out: PathBuf,
    },
    /// Compose signals from stored coefficients; optionally verify them
    /// against a training corpus and journal the discoveries.
    Compose {
        /// codes.json from encode (or hand-written, same schema).
        #[arg(long)]
        coeffs: PathBuf,
        #[arg(long)]
        bases: PathBuf,
        #[command(flatten)]
        config: ConfigArgs,
        /// Output corpus of composed signals.
        #[arg(long)]
        out: PathBuf,
        /// Training corpus for verification (enables discovery).
        #[arg(long)]
        training: Option<PathBuf>,
        /// Knowledge journal to append verified-and-novel records to.
        #[arg(long)]
        journal: Option<PathBuf>,
    },
    /// Partition a message into information, knowledge and dark parts.
    Partition {
        /// JSON array of universe symbol ids.
        #[arg(long)]
        universe: PathBuf,
        /// JSON array of message symbols.
        #[arg(long)]
        message: PathBuf,
        /// JSON object {"knowledge": [...], "codebook": [...]}.
        #[arg(long)]
        receiver: PathBuf,
        /// Write the partition here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Also report the receiver state after absorbing the information.
        #[arg(long)]
        absorb: bool,
        /// Print a three-column table instead of JSON.
        #[arg(long)]
        table: bool,
    },
    /// Aggregate a run directory into one summary.
    Report {
        /// Directory holding report.json / hierarchy.json / knowledge.jsonl.
        #[arg(long)]
        run: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Debug)]
struct CliError {
    message: String,
    code: u8,
}

impl CliError {
    fn config(e: impl std::fmt::Display) -> Self {
        Self {
            message: e.to_string(),
            code: exit_code::CONFIG,
        }
    }

    fn io(e: impl std::fmt::Display) -> Self {
        Self {
            message: e.to_string(),
            code: exit_code::IO,
        }
    }

    fn infeasible(e: impl std::fmt::Display) -> Self {
        Self {
            message: e.to_string(),
            code: exit_code::INFEASIBLE,
        }
    }
}

impl From<CoreError> for CliError {
    fn from(e: CoreError) -> Self {
        let code = match &e {
            CoreError::Io(_) | CoreError::Json(_) | CoreError::CorruptCorpus(_) => exit_code::IO,
            _ => exit_code::CONFIG,
        };
        Self {
            message: e.to_string(),
            code,
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter("SEMBASE_LOG")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // Help and version requests are not usage errors.
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                let _ = e.print();
                return ExitCode::SUCCESS;
            }
            let _ = e.print();
            return ExitCode::from(exit_code::USAGE);
        }
    };
    if cli.threads > 0 {
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(cli.threads)
            .build_global();
    }
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let obj = serde_json::json!({"error": e.message, "code": e.code});
            eprintln!("{obj}");
            ExitCode::from(e.code)
        }
    }
}

fn run(command: Command) -> Result<(), CliError> {
    match command {
        Command::Synth { spec, seed, out } => cmd_synth(&spec, seed, &out),
        Command::Decompose {
            corpus,
            config,
            out,
            oracle,
            oracle_levels,
        } => cmd_decompose(&corpus, &config, &out, oracle, &oracle_levels),
        Command::Hierarchy {
            corpus,
            config,
            out,
        } => cmd_hierarchy(&corpus, &config, &out),
        Command::Encode {
            corpus,
            bases,
            config,
            out,
        } => cmd_encode(&corpus, &bases, &config, &out),
        Command::Compose {
            coeffs,
            bases,
            config,
            out,
            training,
            journal,
        } => cmd_compose(&coeffs, &bases, &config, &out, training, journal),
        Command::Partition {
            universe,
            message,
            receiver,
            out,
            absorb,
            table,
        } => cmd_partition(&universe, &message, &receiver, out, absorb, table),
        Command::Report { run, out } => cmd_report(&run, &out),
    }
}

fn cmd_synth(spec_arg: &str, seed: u64, out: &Path) -> Result<(), CliError> {
    let text = if let Some(path) = spec_arg.strip_prefix('@') {
        std::fs::read_to_string(path).map_err(CliError::io)?
    } else {
        spec_arg.to_string()
    };
    let spec: GeneratorSpec = serde_json::from_str(&text).map_err(CliError::config)?;
    let (set, truth) = synthesize(&spec, seed)?;
    let spec_value = serde_json::to_value(&spec).map_err(CliError::io)?;
    write_corpus(out, &set, spec_value)?;
    let truth_path = truth_path_for(out);
    write_json(&truth_path, &truth)?;
    println!(
        "wrote {} ({} samples, d={}) and {}",
        out.display(),
        set.len(),
        set.dim(),
        truth_path.display()
    );
    Ok(())
}

fn truth_path_for(corpus: &Path) -> PathBuf {
    let mut name = corpus.file_name().unwrap_or_default().to_os_string();
    name.push(".truth.json");
    corpus.with_file_name(name)
}

fn cmd_decompose(
    corpus: &Path,
    config: &ConfigArgs,
    out: &Path,
    oracle: bool,
    oracle_levels: &str,
) -> Result<(), CliError> {
    let cfg = config.load()?;
    let (set, header) = read_corpus(corpus)?;
    std::fs::create_dir_all(out).map_err(CliError::io)?;
    let result = solve(
        &set,
        &cfg.effective_decompose(),
        &cfg.coding,
        &cfg.complexity,
    )?;
    let report = DecomposeReport::new(&cfg, &header, &result);
    write_json(&out.join("report.json"), &report)?;
    write_json(
        &out.join("bases.json"),
        &BasesFile::from_base_set(&result.base_set, cfg.seed).with_config(&cfg),
    )?;
    let profile = sembase_core::statistics::activation_profile(
        &set,
        &result.base_set,
        &cfg.coding,
        cfg.decompose.tau,
    )?;
    std::fs::write(out.join("activation.csv"), profile.to_csv()).map_err(CliError::io)?;
    if oracle {
        let levels: Vec<f64> = oracle_levels
            .split(',')
            .map(|s| s.trim().parse::<f64>())
            .collect::<Result<_, _>>()
            .map_err(CliError::config)?;
        let oracle_result = oracle_decompose(
            &set,
            &cfg.effective_decompose(),
            &cfg.coding,
            &cfg.complexity,
            &levels,
        )?;
        write_json(&out.join("oracle.json"), &oracle_result)?;
        let diff = (result.objective.total - oracle_result.objective.total).abs();
        println!(
            "oracle objective {:.6}, solver objective {:.6}, |diff| {:.3e}",
            oracle_result.objective.total, result.objective.total, diff
        );
    }
    println!(
        "selected N_K={} feasible={} avg_error={:.3e} diversity={:.4} objective={:.3}",
        result.base_set.len(),
        result.feasible,
        result.avg_error,
        result.diversity,
        result.objective.total
    );
    if !result.feasible {
        return Err(CliError::infeasible(
            "no candidate satisfied the average error budget",
        ));
    }
    Ok(())
}

fn cmd_hierarchy(corpus: &Path, config: &ConfigArgs, out: &Path) -> Result<(), CliError> {
    let cfg = config.load()?;
    let (set, _) = read_corpus(corpus)?;
    std::fs::create_dir_all(out).map_err(CliError::io)?;
    let build = build_hierarchy(
        &set,
        &cfg.effective_decompose(),
        &cfg.coding,
        &cfg.complexity,
        &cfg.hierarchy,
    )?;
    let report = HierarchyReport::new(&cfg, &build);
    write_json(&out.join("hierarchy.json"), &report)?;
    println!(
        "hierarchy depth={} leaves={} accepted={} (objective {:.3} -> {:.3})",
        report.depth,
        report.leaf_count,
        build.decisions.iter().filter(|d| d.accepted).count(),
        build.objective_log.first().unwrap_or(&f64::NAN),
        build.objective_log.last().unwrap_or(&f64::NAN),
    );
    Ok(())
}

/// Accepts bases.json directly or pulls the leaf set out of hierarchy.json.
fn load_bases(path: &Path) -> Result<(BasesFile, BaseSet), CliError> {
    let text = std::fs::read_to_string(path).map_err(CliError::io)?;
    let file: BasesFile = match serde_json::from_str(&text) {
        Ok(f) => f,
        Err(_) => {
            let report: HierarchyReport = serde_json::from_str(&text)
                .map_err(|_| CliError::config("not a bases.json or hierarchy.json file"))?;
            report.leaf_bases
        }
    };
    let set = file.to_base_set()?;
    Ok((file, set))
}

#[derive(Debug, serde::Serialize, serde::Deserialize)]
struct CodesFile {
    run_config: RunConfig,
    prng: String,
    seed: u64,
    bases_ref: String,
    grid: Vec<usize>,
    modality: String,
    codes: Vec<CodeEntry>,
}

#[derive(Debug, serde::Serialize, serde::Deserialize)]
struct CodeEntry {
    index: usize,
    coefficients: Coefficients,
}

fn cmd_encode(
    corpus: &Path,
    bases_path: &Path,
    config: &ConfigArgs,
    out: &Path,
) -> Result<(), CliError> {
    let cfg = config.load()?;
    let (set, _) = read_corpus(corpus)?;
    let (_, bases) = load_bases(bases_path)?;
    let mut codes = Vec::with_capacity(set.len());
    for (index, sample) in set.samples().iter().enumerate() {
        let coefficients = encode(sample, &bases, &cfg.coding)?;
        codes.push(CodeEntry {
            index,
            coefficients,
        });
    }
    let file = CodesFile {
        run_config: cfg.clone(),
        prng: sembase_core::io::PRNG_NAME.into(),
        seed: cfg.seed,
        bases_ref: bases.fingerprint(),
        grid: set.grid().to_vec(),
        modality: set.modality().to_string(),
        codes,
    };
    write_json(out, &file)?;
    println!(
        "encoded {} samples against {} bases",
        set.len(),
        bases.len()
    );
    Ok(())
}

fn cmd_compose(
    coeffs: &Path,
    bases_path: &Path,
    config: &ConfigArgs,
    out: &Path,
    training: Option<PathBuf>,
    journal: Option<PathBuf>,
) -> Result<(), CliError> {
    let cfg = config.load()?;
    let codes: CodesFile = read_json(coeffs)?;
    let (_, bases) = load_bases(bases_path)?;
    if codes.bases_ref != bases.fingerprint() {
        return Err(CliError::config(
            "coefficients were produced against a different base set",
        ));
    }
    let mut signals: Vec<Signal> = Vec::with_capacity(codes.codes.len());
    for entry in &codes.codes {
        let composed = sembase_core::compose::compose(&entry.coefficients, &bases)?;
        signals.push(Signal::with_id(
            composed.values().to_vec(),
            codes.grid.clone(),
            codes.modality.clone(),
            entry.index as u64,
        )?);
    }
    let set = SampleSet::new(signals, cfg.seed)?;
    write_corpus(out, &set, serde_json::json!({"kind": "composed"}))?;
    println!("composed {} signals into {}", set.len(), out.display());

    if let Some(training_path) = training {
        let (train, _) = read_corpus(&training_path)?;
        let validator = Validator::from_training(
            &train,
            &bases,
            &cfg.coding,
            cfg.compose.mode,
            cfg.compose.theta,
        )?;
        let journal_path = journal.unwrap_or_else(|| out.with_file_name("knowledge.jsonl"));
        let mut log = KnowledgeLog::from_records(read_journal(&journal_path)?);
        let before = log.len();
        for entry in &codes.codes {
            discover(&entry.coefficients, &bases, &validator, &train, &mut log)?;
        }
        let fresh = log.records()[before..].to_vec();
        write_journal(&journal_path, &fresh)?;
        println!(
            "discovery: {} of {} specs journaled to {}",
            fresh.len(),
            codes.codes.len(),
            journal_path.display()
        );
    }
    Ok(())
}

fn cmd_partition(
    universe: &Path,
    message: &Path,
    receiver: &Path,
    out: Option<PathBuf>,
    do_absorb: bool,
    table: bool,
) -> Result<(), CliError> {
    let symbols: Vec<String> = read_json(universe)?;
    let u = Universe::new(symbols)?;
    let msg_symbols: Vec<String> = read_json(message)?;
    let m = Message::new(msg_symbols, &u)?;
    #[derive(serde::Deserialize)]
    struct ReceiverFile {
        knowledge: Vec<String>,
        codebook: Vec<String>,
    }
    let rf: ReceiverFile = read_json(receiver)?;
    let r = ReceiverState::new(rf.knowledge, rf.codebook, &u)?;
    let p = partition(&m, &r);
    let mut output = serde_json::json!({
        "information": p.information,
        "knowledge": p.knowledge_part,
        "dark": p.dark,
    });
    if do_absorb {
        let r2 = absorb(&r, &p);
        output["receiver_after_absorb"] = serde_json::json!({
            "knowledge": r2.knowledge(),
            "codebook": r2.codebook(),
        });
    }
    if table {
        println!("{:<20} {:<20} {:<20}", "information", "knowledge", "dark");
        let rows = p
            .information
            .len()
            .max(p.knowledge_part.len())
            .max(p.dark.len());
        let col = |set: &std::collections::BTreeSet<String>, i: usize| {
            set.iter().nth(i).cloned().unwrap_or_default()
        };
        for i in 0..rows {
            println!(
                "{:<20} {:<20} {:<20}",
                col(&p.information, i),
                col(&p.knowledge_part, i),
                col(&p.dark, i)
            );
        }
    }
    match out {
        Some(path) => write_json(&path, &output)?,
        None if !table => println!(
            "{}",
            serde_json::to_string_pretty(&output).map_err(CliError::io)?
        ),
        None => {}
    }
    Ok(())
}

fn cmd_report(run: &Path, out: &Path) -> Result<(), CliError> {
    let decompose: Option<DecomposeReport> = read_json(&run.join("report.json")).ok();
    let hierarchy: Option<HierarchyReport> = read_json(&run.join("hierarchy.json")).ok();
    let knowledge = read_journal(&run.join("knowledge.jsonl"))?;
    let cfg = decompose
        .as_ref()
        .map(|d| d.run_config.clone())
        .or_else(|| hierarchy.as_ref().map(|h| h.run_config.clone()))
        .ok_or_else(|| {
            CliError::config("run directory holds neither report.json nor hierarchy.json")
        })?;
    let summary = SummaryReport::assemble(
        &cfg,
        decompose.as_ref(),
        hierarchy.as_ref(),
        knowledge.len(),
    );
    write_json(out, &summary)?;
    println!(
        "summary: feasible={:?} objective={:?} depth={:?} knowledge={}",
        summary.feasible, summary.objective, summary.hierarchy_depth, summary.knowledge_records
    );
    Ok(())
}
