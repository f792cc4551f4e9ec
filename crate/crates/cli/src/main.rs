use std::fs;
use std::io::BufReader;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand};
use dvdn::harness::{
    self, best_checkpoint_samples, load_config, max_average_return, plot_tables, rank_compare,
    read_metrics_csv, run_ablation, write_metrics_csv, write_run, AblationGroup, ExperimentConfig,
    MetricsRecord, RawConfig,
};
use dvdn::rng::{stream_rng, Stream};

const OUTPUT_ROOT_VAR: &str = "DVDN_OUTPUT_ROOT";

#[derive(Parser)]
#[command(name = "dvdn", version, about = "Distributed value decomposition experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train every seed of a config and write metrics.
    Train(RunArgs),
    /// Train the IQL, JTD, GT and GT+JTD groups and pool their best checkpoints.
    Ablate(RunArgs),
    /// Ranking test between the best checkpoints of two runs.
    Compare {
        /// Run directory or metrics CSV.
        a: PathBuf,
        /// Run directory or metrics CSV.
        b: PathBuf,
        #[arg(long, default_value_t = 20000)]
        resamples: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Run the built-in property suites.
    Verify {
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Convert metrics CSVs into long-format plot tables, one per environment.
    ExportPlots {
        #[arg(required = true)]
        metrics: Vec<PathBuf>,
        #[arg(long)]
        output_dir: Option<PathBuf>,
    },
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    config: PathBuf,
    /// `key=value`, applied after the file; repeatable.
    #[arg(long = "override", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
    #[arg(long)]
    output_dir: Option<PathBuf>,
    /// Seeds trained in parallel; 1 is the reference mode.
    #[arg(long, default_value_t = 1)]
    threads: usize,
}

enum Failure {
    Usage(anyhow::Error),
    Verification,
    Runtime(anyhow::Error),
}

type Outcome = Result<(), Failure>;

fn usage<E: Into<anyhow::Error>>(e: E) -> Failure {
    Failure::Usage(e.into())
}

fn runtime<E: Into<anyhow::Error>>(e: E) -> Failure {
    Failure::Runtime(e.into())
}

fn output_dir(explicit: Option<&Path>, run_id: &str) -> PathBuf {
    match explicit {
        Some(p) => p.to_path_buf(),
        None => {
            let root = std::env::var_os(OUTPUT_ROOT_VAR).map_or_else(|| PathBuf::from("runs"), PathBuf::from);
            root.join(run_id)
        }
    }
}

fn load(args: &RunArgs) -> Result<(RawConfig, ExperimentConfig), Failure> {
    let overrides = args
        .overrides
        .iter()
        .map(|o| harness::config::parse_override(o))
        .collect::<Result<Vec<_>, _>>()
        .map_err(usage)?;
    println!("config: {}", args.config.display());
    load_config(&args.config, &overrides)
        .with_context(|| format!("cannot load {}", args.config.display()))
        .map_err(usage)
}

fn describe_best(records: &[MetricsRecord]) -> String {
    match max_average_return(records) {
        Ok(b) => format!(
            "max average return {:.4} [{:.4}, {:.4}] at step {}",
            b.mean_return, b.ci_low, b.ci_high, b.checkpoint_step
        ),
        Err(_) => "no checkpoints".into(),
    }
}

fn train(args: &RunArgs) -> Outcome {
    let (raw, cfg) = load(args)?;
    let dir = output_dir(args.output_dir.as_deref(), &cfg.run_id);
    println!("output: {}", dir.display());
    let run = harness::train(&cfg, args.threads).map_err(runtime)?;
    write_run(&dir, &raw, &run).map_err(runtime)?;
    println!("metrics: {}", dir.join("metrics.csv").display());
    println!("{} {}: {}", cfg.algorithm, cfg.env.id(), describe_best(&run.records));
    Ok(())
}

fn ablate(args: &RunArgs) -> Outcome {
    let (raw, cfg) = load(args)?;
    let dir = output_dir(args.output_dir.as_deref(), &cfg.run_id);
    println!("output: {}", dir.display());
    let groups = run_ablation(&cfg, &AblationGroup::ALL, args.threads).map_err(runtime)?;
    fs::create_dir_all(&dir).map_err(runtime)?;
    fs::write(dir.join("config.cfg"), raw.to_text()).map_err(runtime)?;
    let mut table = String::from("group,best_step,pooled,mean,ci_low,ci_high,narrowed\n");
    for g in &groups {
        let sub = dir.join(g.group.name().replace('+', "_"));
        fs::create_dir_all(&sub).map_err(runtime)?;
        let file = fs::File::create(sub.join("metrics.csv")).map_err(runtime)?;
        write_metrics_csv(file, &g.records).map_err(runtime)?;
        table.push_str(&format!(
            "{},{},{},{:?},{:?},{:?},{}\n",
            g.group.name(),
            g.best_step,
            g.pooled.len(),
            g.mean,
            g.ci.0,
            g.ci.1,
            g.narrowed
        ));
        println!(
            "{:<7} best step {:>7}  pooled {:>3}  mean {:.4} [{:.4}, {:.4}]{}",
            g.group.name(),
            g.best_step,
            g.pooled.len(),
            g.mean,
            g.ci.0,
            g.ci.1,
            if g.narrowed { "  (narrowed pool)" } else { "" }
        );
    }
    fs::write(dir.join("ablation.csv"), table).map_err(runtime)?;
    println!("summary: {}", dir.join("ablation.csv").display());
    Ok(())
}

fn read_metrics(path: &Path) -> Result<Vec<MetricsRecord>, Failure> {
    let file = if path.is_dir() { path.join("metrics.csv") } else { path.to_path_buf() };
    let f = fs::File::open(&file)
        .with_context(|| format!("cannot open {}", file.display()))
        .map_err(usage)?;
    read_metrics_csv(BufReader::new(f))
        .with_context(|| format!("cannot read {}", file.display()))
        .map_err(usage)
}

fn compare(a: &Path, b: &Path, resamples: usize, seed: u64) -> Outcome {
    let sa = best_checkpoint_samples(&read_metrics(a)?).map_err(usage)?;
    let sb = best_checkpoint_samples(&read_metrics(b)?).map_err(usage)?;
    let mut rng = stream_rng(seed, Stream::Bootstrap(0));
    let verdict = rank_compare(&sa, &sb, resamples, &mut rng).map_err(runtime)?;
    println!("{verdict}");
    Ok(())
}

fn verify(seed: u64) -> Outcome {
    let reports = dvdn::verify::run_all(seed).map_err(runtime)?;
    for r in &reports {
        println!("{r}");
    }
    if reports.iter().all(|r| r.passed) {
        Ok(())
    } else {
        Err(Failure::Verification)
    }
}

fn export_plots(metrics: &[PathBuf], out: Option<&Path>) -> Outcome {
    let mut all = Vec::new();
    for m in metrics {
        all.extend(read_metrics(m)?);
    }
    let dir = out.map_or_else(
        || std::env::var_os(OUTPUT_ROOT_VAR).map_or_else(|| PathBuf::from("plots"), |r| PathBuf::from(r).join("plots")),
        Path::to_path_buf,
    );
    fs::create_dir_all(&dir).map_err(runtime)?;
    for (figure, text) in plot_tables(&all) {
        let path = dir.join(format!("plot_{figure}.csv"));
        fs::write(&path, text).map_err(runtime)?;
        println!("wrote {}", path.display());
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let outcome = match &cli.command {
        Command::Train(a) => train(a),
        Command::Ablate(a) => ablate(a),
        Command::Compare { a, b, resamples, seed } => compare(a, b, *resamples, *seed),
        Command::Verify { seed } => verify(*seed),
        Command::ExportPlots { metrics, output_dir } => export_plots(metrics, output_dir.as_deref()),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
        Err(Failure::Verification) => {
            eprintln!("verification failed");
            ExitCode::from(2)
        }
        Err(Failure::Runtime(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(3)
        }
    }
}
