use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use outcome_ml::pipeline::{Experiment, ExperimentConfig, ExperimentReport};
use outcome_ml::synth::{self, SynthConfig};
use outcome_ml::{Error, Result};

#[derive(Parser)]
#[command(name = "outcome-ml", version, about = "Tabular outcome prediction experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Common {
    /// Experiment config (JSON).
    #[arg(long)]
    config: PathBuf,
    /// Overrides the config seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory; overrides the config.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads (default: all cores).
    #[arg(long)]
    threads: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Full experiment: rank, cross-validate, write report and plots.
    Run(Common),
    /// Boolean fill plus KNN imputation; writes imputed.csv.
    Impute(Common),
    /// Imputation plus the configured resampling; writes resampled.csv.
    Resample(Common),
    /// Feature ranking; writes importance_<selector>.json.
    Rank(Common),
    /// Cross-validation only; writes report.json.
    Cv(Common),
    /// Random search from the config's search section; writes search.json.
    Search(Common),
    /// Synthetic dataset: data.csv, schema.json and a starter config.json.
    Synth(SynthArgs),
}

#[derive(Args)]
struct SynthArgs {
    /// Generator settings (JSON); flags below override it.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    rows: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    minority_fraction: Option<f64>,
    #[arg(long)]
    missing_rate: Option<f64>,
    #[arg(long, default_value = "synth")]
    out: PathBuf,
}

fn experiment(c: &Common) -> Result<(Experiment, PathBuf)> {
    if let Some(n) = c.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    }
    let mut exp = Experiment::load(&c.config)?;
    if let Some(s) = c.seed {
        exp.config.seed = s;
    }
    let out = match &c.out {
        Some(o) => o.clone(),
        None => exp.output_dir(),
    };
    Ok((exp, out))
}

fn summarize(r: &ExperimentReport) {
    println!("{:<10} {:>5}  {:<20} {:<20} {:<20}", "model", "top_k", "accuracy", "sensitivity", "specificity");
    for e in &r.results {
        let get = |k: &str| e.display.get(k).cloned().unwrap_or_else(|| "-".into());
        println!(
            "{:<10} {:>5}  {:<20} {:<20} {:<20}",
            e.model.as_str(),
            e.top_k,
            get("accuracy"),
            get("sensitivity"),
            get("specificity")
        );
    }
}

fn run_synth(a: &SynthArgs) -> Result<()> {
    let mut cfg = match &a.config {
        Some(p) => {
            let text = std::fs::read_to_string(p).map_err(|e| Error::Config(format!("{}: {e}", p.display())))?;
            serde_json::from_str::<SynthConfig>(&text).map_err(|e| Error::Config(e.to_string()))?
        }
        None => SynthConfig::default(),
    };
    cfg.rows = a.rows.unwrap_or(cfg.rows);
    cfg.seed = a.seed.unwrap_or(cfg.seed);
    cfg.minority_fraction = a.minority_fraction.unwrap_or(cfg.minority_fraction);
    cfg.missing_rate = a.missing_rate.unwrap_or(cfg.missing_rate);
    let data = synth::generate(&cfg)?;
    std::fs::create_dir_all(&a.out).map_err(|e| Error::Io {
        path: a.out.clone(),
        source: e,
    })?;
    data.write_csv(a.out.join("data.csv"))?;
    let write = |name: &str, text: String| {
        let p = a.out.join(name);
        std::fs::write(&p, text).map_err(|e| Error::Io { path: p, source: e })
    };
    write("schema.json", data.table.schema().to_json_string())?;
    let starter = ExperimentConfig::from_json_str(
        r#"{"dataset": "data.csv", "schema": "schema.json", "outcome": "last_status", "output_dir": "results"}"#,
    )?;
    write("config.json", serde_json::to_string_pretty(&starter)? + "\n")?;
    println!("wrote {} rows to {}", cfg.rows, a.out.display());
    Ok(())
}

fn dispatch(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Synth(a) => run_synth(&a),
        Command::Run(c) => {
            let (exp, out) = experiment(&c)?;
            summarize(&exp.run(&out)?);
            Ok(())
        }
        Command::Cv(c) => {
            let (exp, out) = experiment(&c)?;
            summarize(&exp.run_cv(&out)?);
            Ok(())
        }
        Command::Impute(c) => {
            let (exp, out) = experiment(&c)?;
            let t = exp.run_impute(&out)?;
            println!("imputed {} rows into {}", t.n_rows(), out.display());
            Ok(())
        }
        Command::Resample(c) => {
            let (exp, out) = experiment(&c)?;
            let t = exp.run_resample(&out)?;
            println!("class counts after resampling: {:?}", t.class_counts()?);
            Ok(())
        }
        Command::Rank(c) => {
            let (exp, out) = experiment(&c)?;
            for e in exp.run_rank(&out)?.entries {
                println!("{:<40} {:.6}", e.feature, e.importance);
            }
            Ok(())
        }
        Command::Search(c) => {
            let (exp, out) = experiment(&c)?;
            let r = exp.run_search(&out)?;
            println!("best trial {} score {:.4}: {:?}", r.best_index, r.best_score, r.best_spec.hyperparameters);
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            let mut src = std::error::Error::source(&e);
            while let Some(s) = src {
                eprintln!("  caused by: {s}");
                src = s.source();
            }
            ExitCode::from(if e.is_validation() { 1 } else { 2 })
        }
    }
}
