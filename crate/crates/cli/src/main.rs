//! `intent`: generate simulated datasets, decide single records, evaluate
//! models and run the ablation matrix.

use std::fs;
use std::io::{self, BufReader, Read, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use clap::{Args, Parser, Subcommand};
use intent_core::dsl::{default_domain, parse_domain};
use intent_core::fusion::MergeOp;
use intent_core::harness::eval::{dataset_labels, is_correct, run, summarize};
use intent_core::harness::record::{read_samples, write_samples, SampleRecord};
use intent_core::harness::svg;
use intent_core::harness::{
    ablate, model_matrix, to_csv, EvalRow, Model, ModelConfig, Thresholding,
};
use intent_core::model::{validate_domain, Domain};
use intent_core::selector::decide_sentences;
use intent_core::simgen::{generate_dataset, DatasetKind, GenConfig, NoiseLevel};
use serde_json::json;

#[derive(Debug)]
enum Failure {
    Usage(String),
    Data(String),
    Malformed(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Usage(_) => 2,
            Failure::Data(_) => 3,
            Failure::Malformed(_) => 4,
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Usage(m) | Failure::Data(m) | Failure::Malformed(m) => m,
        }
    }
}

type CliResult<T> = Result<T, Failure>;

#[derive(Parser)]
#[command(
    name = "intent",
    version,
    about = "Multimodal intent fusion and benchmark harness"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write a simulated dataset, one JSON record per line.
    Generate(GenerateArgs),
    /// Decide the intent of one record.
    Decide(DecideArgs),
    /// Score models on dataset files and print a CSV.
    Evaluate(EvaluateArgs),
    /// Run every model on every dataset kind and noise level.
    Ablate(AblateArgs),
    /// Parse and check a domain file.
    ValidateDomain(ValidateArgs),
}

#[derive(Args)]
struct Common {
    /// Domain file; the bundled default domain when omitted.
    #[arg(long)]
    domain: Option<PathBuf>,
    /// Worker threads; all cores when omitted.
    #[arg(long)]
    threads: Option<usize>,
}

#[derive(Args)]
struct ModelArgs {
    #[arg(long, default_value_t = 0.25)]
    tc: f64,
    #[arg(long, default_value_t = 0.11)]
    tu: f64,
    #[arg(long, default_value_t = 0.05)]
    tn: f64,
    #[arg(long = "A", default_value_t = 0.2)]
    a: f64,
}

impl ModelArgs {
    fn config(&self, model: Model, merge: MergeOp, thresholding: Thresholding) -> ModelConfig {
        ModelConfig {
            t_c: self.tc,
            t_u: self.tu,
            t_n: self.tn,
            a: self.a,
            ..ModelConfig::new(model, merge, thresholding)
        }
    }
}

#[derive(Args)]
struct GenerateArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long)]
    kind: DatasetKind,
    #[arg(long)]
    noise: NoiseLevel,
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    n: u64,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Output file; standard output when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Whitespace-separated residuals used as n1 noise instead of the Gaussian stand-in.
    #[arg(long)]
    n1_residuals: Option<PathBuf>,
}

#[derive(Args)]
struct DecideArgs {
    #[command(flatten)]
    common: Common,
    /// Record file; standard input when omitted or `-`.
    #[arg(long)]
    input: Option<PathBuf>,
    #[arg(long, default_value = "m3")]
    model: Model,
    #[arg(long, default_value = "add")]
    merge: MergeOp,
    #[arg(long, default_value = "entropy")]
    threshold: Thresholding,
    #[command(flatten)]
    params: ModelArgs,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct EvaluateArgs {
    #[command(flatten)]
    common: Common,
    /// Dataset files; each is scored separately.
    #[arg(long, required = true, num_args = 1..)]
    data: Vec<PathBuf>,
    #[arg(long, default_value = "m3", value_delimiter = ',')]
    model: Vec<Model>,
    #[arg(long, default_value = "add", value_delimiter = ',')]
    merge: Vec<MergeOp>,
    #[arg(long, default_value = "entropy", value_delimiter = ',')]
    threshold: Vec<Thresholding>,
    #[command(flatten)]
    params: ModelArgs,
    /// CSV file; standard output when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Per-sample decision log, one JSON object per line.
    #[arg(long)]
    log: Option<PathBuf>,
}

#[derive(Args)]
struct AblateArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long, default_value_t = 1000, value_parser = clap::value_parser!(u64).range(1..))]
    n: u64,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[command(flatten)]
    params: ModelArgs,
    /// Output directory for the CSV and the charts.
    #[arg(long, default_value = "ablation")]
    out: PathBuf,
    /// Merge operator shown in the per-model charts.
    #[arg(long, default_value = "add")]
    merge: MergeOp,
    /// Thresholding shown in the per-model charts.
    #[arg(long, default_value = "entropy")]
    threshold: Thresholding,
}

#[derive(Args)]
struct ValidateArgs {
    #[arg(long)]
    domain: PathBuf,
}

fn load_domain(path: Option<&Path>) -> CliResult<Domain> {
    let Some(path) = path else {
        return Ok(default_domain());
    };
    let text =
        fs::read_to_string(path).map_err(|e| Failure::Data(format!("{}: {e}", path.display())))?;
    parse_domain(&text).map_err(|e| Failure::Malformed(format!("{}: {e}", path.display())))
}

fn set_threads(n: Option<usize>) -> CliResult<()> {
    if let Some(n) = n {
        if n == 0 {
            return Err(Failure::Usage("--threads must be positive".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Failure::Usage(e.to_string()))?;
    }
    Ok(())
}

fn write_output(path: Option<&Path>, bytes: &[u8]) -> CliResult<()> {
    match path {
        Some(p) => fs::write(p, bytes).map_err(|e| Failure::Data(format!("{}: {e}", p.display()))),
        None => io::stdout()
            .write_all(bytes)
            .map_err(|e| Failure::Data(e.to_string())),
    }
}

fn read_residuals(path: &Path) -> CliResult<Vec<f64>> {
    let text =
        fs::read_to_string(path).map_err(|e| Failure::Data(format!("{}: {e}", path.display())))?;
    let values = text
        .split_whitespace()
        .map(|t| {
            t.parse::<f64>()
                .map_err(|_| Failure::Malformed(format!("{}: bad residual `{t}`", path.display())))
        })
        .collect::<CliResult<Vec<f64>>>()?;
    if values.is_empty() || values.iter().any(|v| !v.is_finite()) {
        return Err(Failure::Malformed(format!(
            "{}: residuals must be finite and nonempty",
            path.display()
        )));
    }
    Ok(values)
}

fn cmd_generate(args: GenerateArgs) -> CliResult<()> {
    set_threads(args.common.threads)?;
    let domain = load_domain(args.common.domain.as_deref())?;
    let mut gen = GenConfig::default();
    if let Some(p) = &args.n1_residuals {
        gen.empirical_n1 = Some(Arc::new(read_residuals(p)?));
    }
    let samples = generate_dataset(
        args.kind,
        args.noise,
        args.n as usize,
        args.seed,
        &domain,
        &gen,
    )
    .map_err(|e| Failure::Data(e.to_string()))?;
    let mut buf = Vec::new();
    write_samples(&mut buf, &samples, &domain).map_err(|e| Failure::Data(e.to_string()))?;
    write_output(args.out.as_deref(), &buf)?;
    let summary = format!(
        "generated kind={} noise={} n={} seed={}",
        args.kind, args.noise, args.n, args.seed
    );
    if args.out.is_some() {
        println!("{summary}");
    } else {
        eprintln!("{summary}");
    }
    Ok(())
}

fn cmd_decide(args: DecideArgs) -> CliResult<()> {
    let domain = load_domain(args.common.domain.as_deref())?;
    let mut text = String::new();
    match args.input.as_deref() {
        Some(p) if p != Path::new("-") => {
            text = fs::read_to_string(p)
                .map_err(|e| Failure::Data(format!("{}: {e}", p.display())))?;
        }
        _ => {
            io::stdin()
                .read_to_string(&mut text)
                .map_err(|e| Failure::Data(e.to_string()))?;
        }
    }
    let line = text.trim();
    if line.is_empty() {
        return Err(Failure::Malformed("empty input record".into()));
    }
    let decoded = SampleRecord::from_line(line)
        .and_then(|r| r.decode(&domain))
        .map_err(|e| Failure::Malformed(e.to_string()))?;
    let cfg = args.params.config(args.model, args.merge, args.threshold);
    cfg.validate().map_err(|e| Failure::Usage(e.to_string()))?;
    let d = decide_sentences(
        &decoded.sentences,
        &cfg.merge_config(),
        &decoded.scene,
        &domain,
        &cfg.decision_config(),
    )
    .map_err(|e| Failure::Malformed(e.to_string()))?;

    let actions: Vec<_> = d
        .likelihoods
        .actions
        .iter()
        .enumerate()
        .map(|(j, a)| {
            let diag = &d.likelihoods.diagnostics[j];
            json!({
                "action": a,
                "raw": diag.raw,
                "alpha": diag.alpha,
                "beta": diag.beta,
                "l": d.likelihoods.values[j],
                "mode": d.per_action_modes[j].1,
            })
        })
        .collect();
    let mut out = json!({
        "model": cfg.model,
        "merge_op": cfg.effective_merge().name(),
        "thresholding": cfg.thresholding_label(),
        "mode": d.mode,
        "intent": d.intent,
        "prompt": d.prompt,
        "actions": actions,
    });
    if let Some(truth) = &decoded.truth {
        out["correct"] = json!(is_correct(d.mode, d.intent.as_ref(), truth, &domain));
    }
    let mut bytes = serde_json::to_vec(&out).expect("decision serializes");
    bytes.push(b'\n');
    write_output(args.out.as_deref(), &bytes)
}

/// Requested configurations, with the baseline listed once.
fn requested(
    models: &[Model],
    merges: &[MergeOp],
    thresholds: &[Thresholding],
    params: &ModelArgs,
) -> Vec<ModelConfig> {
    let mut out: Vec<ModelConfig> = Vec::new();
    for &m in models {
        for &op in merges {
            for &th in thresholds {
                let cfg = params.config(m, op, th);
                let dup = out.iter().any(|c| {
                    c.model == cfg.model
                        && c.effective_merge() == cfg.effective_merge()
                        && c.thresholding_label() == cfg.thresholding_label()
                });
                if !dup {
                    out.push(cfg);
                }
            }
        }
    }
    out
}

fn cmd_evaluate(args: EvaluateArgs) -> CliResult<()> {
    set_threads(args.common.threads)?;
    let domain = load_domain(args.common.domain.as_deref())?;
    let configs = requested(&args.model, &args.merge, &args.threshold, &args.params);
    for c in &configs {
        c.validate().map_err(|e| Failure::Usage(e.to_string()))?;
    }
    let mut datasets = Vec::with_capacity(args.data.len());
    for p in &args.data {
        let file = fs::File::open(p).map_err(|e| Failure::Data(format!("{}: {e}", p.display())))?;
        let samples = read_samples(BufReader::new(file), &domain)
            .map_err(|e| Failure::Malformed(format!("{}: {e}", p.display())))?;
        if samples.is_empty() {
            return Err(Failure::Data(format!("{}: no samples", p.display())));
        }
        datasets.push((p, samples));
    }

    let mut rows: Vec<EvalRow> = Vec::new();
    let mut log = Vec::new();
    for (path, samples) in &datasets {
        let (dataset, noise) = dataset_labels(samples);
        for cfg in &configs {
            let outcomes =
                run(samples, cfg, &domain).map_err(|e| Failure::Malformed(e.to_string()))?;
            let row = summarize(&outcomes, cfg, &dataset, &noise);
            if args.log.is_some() {
                for o in &outcomes {
                    let entry = json!({
                        "file": path.display().to_string(),
                        "model": row.model,
                        "merge_op": row.merge_op,
                        "thresholding": row.thresholding,
                        "index": o.index,
                        "seed": o.seed,
                        "mode": o.mode,
                        "intent": o.intent,
                        "correct": o.correct,
                    });
                    log.extend(serde_json::to_vec(&entry).expect("log serializes"));
                    log.push(b'\n');
                }
            }
            rows.push(row);
        }
    }
    if let Some(p) = &args.log {
        fs::write(p, &log).map_err(|e| Failure::Data(format!("{}: {e}", p.display())))?;
    }
    write_output(args.out.as_deref(), to_csv(&rows).as_bytes())
}

fn cmd_ablate(args: AblateArgs) -> CliResult<()> {
    set_threads(args.common.threads)?;
    let domain = load_domain(args.common.domain.as_deref())?;
    let configs: Vec<ModelConfig> = model_matrix()
        .into_iter()
        .map(|c| args.params.config(c.model, c.merge, c.thresholding))
        .collect();
    for c in &configs {
        c.validate().map_err(|e| Failure::Usage(e.to_string()))?;
    }
    let rows = ablate(
        &domain,
        &GenConfig::default(),
        args.n as usize,
        args.seed,
        &configs,
    )
    .map_err(|e| Failure::Data(e.to_string()))?;
    fs::create_dir_all(&args.out)
        .map_err(|e| Failure::Data(format!("{}: {e}", args.out.display())))?;
    let op = args.merge.name();
    let th = args.threshold.id();
    let files = [
        ("ablation.csv", to_csv(&rows)),
        (
            "accuracy_vs_noise.svg",
            svg::accuracy_vs_noise(&rows, op, th),
        ),
        ("model_comparison.svg", svg::model_comparison(&rows, th)),
        ("thresholding.svg", svg::thresholding_comparison(&rows, op)),
    ];
    for (name, body) in &files {
        let p = args.out.join(name);
        fs::write(&p, body).map_err(|e| Failure::Data(format!("{}: {e}", p.display())))?;
    }
    println!(
        "ablation: {} rows, n={} seed={} -> {}",
        rows.len(),
        args.n,
        args.seed,
        args.out.display()
    );
    Ok(())
}

fn cmd_validate(args: ValidateArgs) -> CliResult<()> {
    let domain = load_domain(Some(&args.domain))?;
    let issues = validate_domain(&domain);
    if !issues.is_empty() {
        let list: Vec<String> = issues.iter().map(ToString::to_string).collect();
        return Err(Failure::Malformed(list.join("; ")));
    }
    println!(
        "{}: ok ({} categories, {} features, {} actions)",
        args.domain.display(),
        domain.categories.len(),
        domain.features.len(),
        domain.actions.len()
    );
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    let result = match cli.command {
        Command::Generate(a) => cmd_generate(a),
        Command::Decide(a) => cmd_decide(a),
        Command::Evaluate(a) => cmd_evaluate(a),
        Command::Ablate(a) => cmd_ablate(a),
        Command::ValidateDomain(a) => cmd_validate(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message());
            ExitCode::from(f.code())
        }
    }
}
