use std::error::Error;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use iql_core::grid::load_map;
use iql_core::harness::{
    generate_map, parse_config, read_results, reassemble, run_batch, summary_text, write_outputs,
    REFERENCE_CSV,
};

#[derive(Parser)]
#[command(
    name = "iql",
    version,
    about = "Grid path-planning Q-learning experiments"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a batch described by a config file and write its CSV outputs.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Output directory; overrides `output_dir` from the config.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Worker threads (default: all cores).
        #[arg(long)]
        jobs: Option<usize>,
    },
    /// Parse a map file and check that its goal is reachable.
    ValidateMap { file: PathBuf },
    /// Write a random reachable map with start 1 and goal h*v.
    GenMap {
        #[arg(long)]
        h: usize,
        #[arg(long)]
        v: usize,
        /// Fraction of the non-terminal cells that are obstacles.
        #[arg(long)]
        density: f64,
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Re-aggregate a results directory and print it next to the reference
    /// tables.
    Report {
        #[arg(long = "in")]
        input: PathBuf,
    },
}

fn run(config: &Path, out: Option<PathBuf>, jobs: Option<usize>) -> Result<(), Box<dyn Error>> {
    let text = std::fs::read_to_string(config)
        .map_err(|e| format!("cannot read {}: {e}", config.display()))?;
    let mut cfg = parse_config(&text).map_err(|e| format!("{}: {e}", config.display()))?;
    let base = config.parent().unwrap_or(Path::new("."));
    cfg.map = cfg.map.resolved(base);
    let dir = out.unwrap_or_else(|| base.join(&cfg.output_dir));
    if jobs == Some(0) {
        return Err("--jobs must be at least 1".into());
    }
    let batch = run_batch(&cfg, jobs)?;
    write_outputs(&batch.report, &batch.traces, cfg.convergence.window, &dir)?;
    print!("{}", summary_text(&batch.report));
    println!("wrote {}", dir.display());
    Ok(())
}

fn validate_map(file: &Path) -> Result<(), Box<dyn Error>> {
    let text = std::fs::read_to_string(file)
        .map_err(|e| format!("cannot read {}: {e}", file.display()))?;
    let map = load_map(&text).map_err(|e| format!("{}: {e}", file.display()))?;
    if !map.goal_reachable() {
        return Err(format!("{}: goal is not reachable from start", file.display()).into());
    }
    println!(
        "{}: {}x{}, start {}, goal {}, {} obstacles, goal reachable",
        file.display(),
        map.h(),
        map.v(),
        map.start(),
        map.goal(),
        map.obstacle_count()
    );
    Ok(())
}

fn gen_map(h: usize, v: usize, density: f64, seed: u64, out: &Path) -> Result<(), Box<dyn Error>> {
    let map = generate_map(h, v, density, seed)?;
    let text = format!(
        "# random {h}x{v} map, density {density}, seed {seed}\n{}",
        map.to_text()
    );
    std::fs::write(out, text).map_err(|e| format!("cannot write {}: {e}", out.display()))?;
    println!(
        "wrote {} ({} obstacles)",
        out.display(),
        map.obstacle_count()
    );
    Ok(())
}

fn report(dir: &Path) -> Result<(), Box<dyn Error>> {
    let rows = read_results(&dir.join("results.csv"))?;
    print!("{}", summary_text(&reassemble(rows)));
    let reference = match std::fs::read_to_string(dir.join("paper_reference.csv")) {
        Ok(text) => text,
        Err(_) => REFERENCE_CSV.to_string(),
    };
    println!("reference results:");
    print!("{reference}");
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run { config, out, jobs } => run(&config, out, jobs),
        Command::ValidateMap { file } => validate_map(&file),
        Command::GenMap {
            h,
            v,
            density,
            seed,
            out,
        } => gen_map(h, v, density, seed, &out),
        Command::Report { input } => report(&input),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
