use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use argufair::audit::{audit, evaluate_model, explain, render_debate, write_jsonl, AuditConfig, MetricsSummary};
use argufair::dataset::{load_dataset, SchemaSpec};
use argufair::props::{check_agg_properties, check_infl_properties, PropertyKind, PropertyReport};
use argufair::qbaf::{to_dot, Aggregation, Influence, SemanticsSpec};
use argufair::synthetic::{surrogate_population, ModelKind, PopulationConfig, SyntheticModel};
use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Parser)]
#[command(name = "argufair", version, about = "Argumentative bias audits for tabular classifiers")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Audit every negatively classified individual; writes JSON Lines.
    Audit {
        #[command(flatten)]
        data: DataArgs,
        #[command(flatten)]
        overrides: ConfigArgs,
        /// Output file (default: stdout).
        #[arg(long, short)]
        out: Option<PathBuf>,
    },
    /// Global framework of one individual as Graphviz DOT plus a debate transcript.
    Explain {
        #[command(flatten)]
        data: DataArgs,
        #[command(flatten)]
        overrides: ConfigArgs,
        /// Zero-based row index.
        #[arg(long)]
        individual: usize,
        /// Drop critical-question arguments of strength 0.
        #[arg(long)]
        omit_zero_cq: bool,
        /// Write DOT here and the transcript to stdout. Without it DOT goes to
        /// stdout and the transcript to stderr.
        #[arg(long)]
        dot: Option<PathBuf>,
    },
    /// Audit a synthetically biased model and score verdicts against its ground truth.
    EvalSynthetic {
        model: ModelKind,
        /// Neighbourhood sizes; one table row per size unless --joint.
        #[arg(long, value_delimiter = ',', default_values_t = [50usize, 100, 200])]
        k: Vec<usize>,
        /// Use all sizes together as one audit per row.
        #[arg(long)]
        joint: bool,
        /// Rows of the generated surrogate population.
        #[arg(long, default_value_t = 4000)]
        rows: usize,
        #[arg(long, default_value_t = 7)]
        seed: u64,
        /// CSV population with gender and race columns and a 0/1 `label`
        /// column, used instead of the generated surrogate.
        #[arg(long)]
        dataset: Option<PathBuf>,
        /// Audit a uniform sample of this many negatively classified rows.
        #[arg(long)]
        sample: Option<usize>,
        #[arg(long, value_parser = parse_semantics)]
        semantics: Option<SemanticsSpec>,
        /// ε-bias level of the locally biased model.
        #[arg(long, default_value_t = 0.01)]
        eps: f64,
        /// Neighbourhood size inside the locally biased model.
        #[arg(long, default_value_t = 200)]
        k_flip: usize,
        /// Print JSON instead of a table.
        #[arg(long)]
        json: bool,
    },
    /// Randomized checks of balance and monotonicity for the built-in semantics.
    CheckProperties {
        #[arg(long, value_enum, default_value_t = Suite::All)]
        semantics: Suite,
        #[arg(long, default_value_t = 10_000)]
        trials: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long)]
        json: bool,
    },
}

#[derive(Args)]
struct DataArgs {
    /// Input CSV with a header row.
    #[arg(long)]
    data: PathBuf,
    /// Protected feature column.
    #[arg(long)]
    protected: String,
    /// 0/1 prediction column.
    #[arg(long, default_value = "prediction")]
    prediction: String,
    /// Columns to read as categorical even if they parse as numbers.
    #[arg(long, value_delimiter = ',')]
    categorical: Vec<String>,
    /// Columns to leave out.
    #[arg(long, value_delimiter = ',')]
    ignore: Vec<String>,
}

#[derive(Args)]
struct ConfigArgs {
    /// JSON audit configuration; flags below override it.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Audit against this protected value instead of each individual's own.
    #[arg(long)]
    protected_value: Option<String>,
    #[arg(long, value_delimiter = ',')]
    k: Option<Vec<usize>>,
    #[arg(long, value_parser = parse_semantics)]
    semantics: Option<SemanticsSpec>,
    #[arg(long)]
    sample: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Suite {
    Dfquad,
    Qe,
    All,
}

fn parse_semantics(s: &str) -> Result<SemanticsSpec, String> {
    s.parse().map_err(|e: argufair::Error| e.to_string())
}

type CliResult<T> = Result<T, String>;

fn schema(d: &DataArgs) -> SchemaSpec {
    SchemaSpec {
        categorical: d.categorical.clone(),
        ignore: d.ignore.clone(),
        ..SchemaSpec::new(&d.protected, &d.prediction)
    }
}

fn config(o: &ConfigArgs) -> CliResult<AuditConfig> {
    let mut cfg = match &o.config {
        Some(path) => {
            let text = fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
            AuditConfig::from_json(&text).map_err(|e| format!("{}: {e}", path.display()))?
        }
        None => AuditConfig::default(),
    };
    if let Some(v) = &o.protected_value {
        cfg.protected_value = Some(v.clone());
    }
    if let Some(k) = &o.k {
        cfg.k = k.clone();
    }
    if let Some(s) = o.semantics {
        cfg.semantics = s;
    }
    if o.sample.is_some() {
        cfg.sample = o.sample;
    }
    if let Some(seed) = o.seed {
        cfg.seed = seed;
    }
    cfg.validate().map_err(|e| e.to_string())?;
    Ok(cfg)
}

fn open_out(path: Option<&Path>) -> CliResult<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p).map_err(|e| format!("{}: {e}", p.display()))?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn run_audit(data: &DataArgs, overrides: &ConfigArgs, out: Option<&Path>) -> CliResult<()> {
    let cfg = config(overrides)?;
    let ds = load_dataset(&data.data, &schema(data)).map_err(|e| e.to_string())?;
    let reports = audit(&ds, &cfg).map_err(|e| e.to_string())?;
    let mut w = open_out(out)?;
    write_jsonl(&reports, &mut w).map_err(|e| e.to_string())?;
    w.flush().map_err(|e| e.to_string())
}

fn run_explain(
    data: &DataArgs,
    overrides: &ConfigArgs,
    individual: usize,
    omit_zero_cq: bool,
    dot_path: Option<&Path>,
) -> CliResult<()> {
    let cfg = config(overrides)?;
    let ds = load_dataset(&data.data, &schema(data)).map_err(|e| e.to_string())?;
    let a = explain(&ds, &cfg, individual).map_err(|e| e.to_string())?;
    let dot = to_dot(&a.qbaf, &a.strengths, omit_zero_cq);
    let transcript = render_debate(&a.qbaf, &a.strengths, a.report.verdict);
    match dot_path {
        Some(p) => {
            fs::write(p, dot).map_err(|e| format!("{}: {e}", p.display()))?;
            print!("{transcript}");
        }
        None => {
            print!("{dot}");
            eprint!("{transcript}");
        }
    }
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn run_eval(
    model: ModelKind,
    ks: &[usize],
    joint: bool,
    rows: usize,
    seed: u64,
    dataset: Option<&Path>,
    sample: Option<usize>,
    semantics: Option<SemanticsSpec>,
    eps: f64,
    k_flip: usize,
    json: bool,
) -> CliResult<()> {
    let mut synthetic = SyntheticModel::new(model);
    synthetic.local1.k = k_flip;
    let population = match dataset {
        Some(p) => {
            let spec = SchemaSpec::new(&synthetic.names.gender, "label");
            load_dataset(p, &spec).map_err(|e| e.to_string())?
        }
        None => surrogate_population(&PopulationConfig {
            rows,
            seed,
            ..Default::default()
        })
        .map_err(|e| e.to_string())?,
    };
    let grids: Vec<Vec<usize>> = if joint {
        vec![ks.to_vec()]
    } else {
        ks.iter().map(|&k| vec![k]).collect()
    };
    let mut rows_out: Vec<(String, MetricsSummary)> = Vec::new();
    for k in grids {
        let mut cfg = AuditConfig {
            k: k.clone(),
            seed,
            sample,
            eps,
            ..Default::default()
        };
        if let Some(s) = semantics {
            cfg.semantics = s;
        }
        let (metrics, _) = evaluate_model(&population, &synthetic, &cfg).map_err(|e| e.to_string())?;
        let label = k.iter().map(|k| k.to_string()).collect::<Vec<_>>().join("+");
        rows_out.push((label, metrics));
    }

    if json {
        let value: Vec<serde_json::Value> = rows_out
            .iter()
            .map(|(k, m)| serde_json::json!({ "model": model.to_string(), "k": k, "metrics": m }))
            .collect();
        println!("{}", serde_json::to_string_pretty(&value).map_err(|e| e.to_string())?);
    } else {
        println!(
            "{:<8} {:>12} {:>8} {:>9} {:>6} {:>6} {:>6} {:>6} {:>6} {:>6} {:>8}",
            "model", "K", "accuracy", "precision", "recall", "f1", "tp", "fp", "tn", "fn", "seconds"
        );
        for (k, m) in &rows_out {
            println!(
                "{:<8} {:>12} {:>8.2} {:>9.2} {:>6.2} {:>6.2} {:>6} {:>6} {:>6} {:>6} {:>8.2}",
                model.to_string(),
                k,
                m.accuracy,
                m.precision,
                m.recall,
                m.f1,
                m.tp,
                m.fp,
                m.tn,
                m.fn_,
                m.seconds
            );
        }
    }
    Ok(())
}

/// Reports paired with whether the semantics claims the property.
fn property_suites(suite: Suite, trials: usize, seed: u64) -> CliResult<Vec<(String, PropertyReport, bool)>> {
    let mut out = Vec::new();
    let pairs: &[(&str, Aggregation, Influence)] = match suite {
        Suite::Dfquad => &[("dfquad", Aggregation::Product, Influence::DfQuad)],
        Suite::Qe => &[("quadratic-energy", Aggregation::Sum, Influence::QuadraticEnergy)],
        Suite::All => &[
            ("dfquad", Aggregation::Product, Influence::DfQuad),
            ("quadratic-energy", Aggregation::Sum, Influence::QuadraticEnergy),
        ],
    };
    for &(name, agg, infl) in pairs {
        for r in check_agg_properties(&agg, trials, seed).map_err(|e| e.to_string())? {
            // Product aggregation is not claimed to be strictly monotonic.
            let claimed = !(agg == Aggregation::Product && r.kind == PropertyKind::StrictMonotonicity);
            out.push((name.to_string(), r, claimed));
        }
        for r in check_infl_properties(&infl, trials, seed).map_err(|e| e.to_string())? {
            out.push((name.to_string(), r, true));
        }
    }
    Ok(out)
}

fn run_check(suite: Suite, trials: usize, seed: u64, json: bool) -> CliResult<bool> {
    let results = property_suites(suite, trials, seed)?;
    let ok = results.iter().all(|(_, r, claimed)| !claimed || r.passed());
    if json {
        let value: Vec<serde_json::Value> = results
            .iter()
            .map(|(s, r, claimed)| serde_json::json!({ "semantics": s, "claimed": claimed, "report": r }))
            .collect();
        println!("{}", serde_json::to_string_pretty(&value).map_err(|e| e.to_string())?);
    } else {
        for (s, r, claimed) in &results {
            let status = match (r.passed(), claimed) {
                (true, _) => "PASS",
                (false, true) => "FAIL",
                (false, false) => "INFO",
            };
            println!(
                "{status} {s:<16} {:<28} {:>6} trials {:>6} violations",
                r.property_name, r.trials, r.violation_count
            );
            for c in r.violations.iter().take(if *claimed { 5 } else { 1 }) {
                println!("     {} -> {}", c.input, c.observed);
            }
        }
        let failed = results.iter().filter(|(_, r, c)| *c && !r.passed()).count();
        println!("{} claimed properties violated", failed);
    }
    Ok(ok)
}

fn threads_from_env() -> CliResult<()> {
    let Ok(v) = std::env::var("ARGUFAIR_THREADS") else {
        return Ok(());
    };
    let n: usize = v
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| format!("ARGUFAIR_THREADS = `{v}` is not a positive integer"))?;
    argufair::set_threads(n).map_err(|e| e.to_string())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Err(e) = threads_from_env() {
        eprintln!("error: {e}");
        return ExitCode::from(2);
    }
    let result = match &cli.command {
        Command::Audit { data, overrides, out } => run_audit(data, overrides, out.as_deref()).map(|_| true),
        Command::Explain {
            data,
            overrides,
            individual,
            omit_zero_cq,
            dot,
        } => run_explain(data, overrides, *individual, *omit_zero_cq, dot.as_deref()).map(|_| true),
        Command::EvalSynthetic {
            model,
            k,
            joint,
            rows,
            seed,
            dataset,
            sample,
            semantics,
            eps,
            k_flip,
            json,
        } => run_eval(
            *model,
            k,
            *joint,
            *rows,
            *seed,
            dataset.as_deref(),
            *sample,
            *semantics,
            *eps,
            *k_flip,
            *json,
        )
        .map(|_| true),
        Command::CheckProperties {
            semantics,
            trials,
            seed,
            json,
        } => run_check(*semantics, *trials, *seed, *json),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
