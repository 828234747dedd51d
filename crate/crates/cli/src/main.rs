use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use expanderquorum::overlay::OverlayGraph;
use expanderquorum_cli::output::{self, AggregateRow};
use expanderquorum_cli::runner::{self, Overrides, Prepared};
use expanderquorum_cli::scenario::Port;
use expanderquorum_cli::{config, graph_check, CliError};

/// Exit status when a hard invariant failed in some repetition.
const EXIT_INVARIANT: u8 = 1;
/// Exit status for configuration, precondition and I/O errors.
const EXIT_ERROR: u8 = 2;

#[derive(Debug, Parser)]
#[command(name = "expanderquorum", version, about = "Run, sweep and replay fault-tolerant agreement experiments")]
struct Cli {
    /// Root seed, overriding the config's `seed`.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads for repetitions (default: all cores).
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// Output directory; EXPANDERQUORUM_OUT takes precedence when set.
    #[arg(long, global = true, default_value = "out")]
    out_dir: PathBuf,
    /// Round limit per run, overriding the config's `max_rounds`.
    #[arg(long, global = true)]
    max_rounds: Option<u64>,
    /// Port model, overriding the config's `port`.
    #[arg(long, global = true, value_parser = ["multi", "single"])]
    mode: Option<String>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run every repetition of a scenario file.
    Run { config: PathBuf },
    /// Run the Cartesian product of the file's `sweep.*` axes.
    Sweep { config: PathBuf },
    /// Re-check a serialized graph's structure and spectral certificate.
    VerifyGraph { graph: PathBuf },
    /// Re-execute the run behind a JSON record and compare byte for byte.
    Replay { record: PathBuf },
}

impl Cli {
    fn out_dir(&self) -> PathBuf {
        match std::env::var_os("EXPANDERQUORUM_OUT") {
            Some(dir) if !dir.is_empty() => PathBuf::from(dir),
            _ => self.out_dir.clone(),
        }
    }

    fn overrides(&self) -> Overrides {
        Overrides {
            seed: self.seed,
            max_rounds: self.max_rounds,
            port: self.mode.as_deref().map(|m| m.parse::<Port>().expect("validated by clap")),
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(j) = cli.jobs {
        pool = pool.num_threads(j.max(1));
    }
    let pool = match pool.build() {
        Ok(p) => p,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(EXIT_ERROR);
        }
    };
    match pool.install(|| dispatch(&cli)) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(EXIT_INVARIANT),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(EXIT_ERROR)
        }
    }
}

/// Returns whether every hard invariant held.
fn dispatch(cli: &Cli) -> Result<bool, CliError> {
    match &cli.command {
        Command::Run { config } => run_cells(cli, config, false),
        Command::Sweep { config } => run_cells(cli, config, true),
        Command::VerifyGraph { graph } => {
            let text = std::fs::read_to_string(graph).map_err(|source| CliError::Io { path: graph.clone(), source })?;
            let report = graph_check::verify(&OverlayGraph::from_text(&text)?);
            println!("{report}");
            Ok(report.ok())
        }
        Command::Replay { record } => replay(record),
    }
}

fn run_cells(cli: &Cli, path: &Path, sweep: bool) -> Result<bool, CliError> {
    let mut values = config::load(path)?;
    cli.overrides().apply(&mut values);
    let cells = if sweep {
        runner::sweep_cells(&values)?
    } else {
        vec![expanderquorum_cli::scenario::Scenario::from_values(&values)?]
    };
    let out = cli.out_dir();
    let mut rows = Vec::new();
    for (k, s) in cells.iter().enumerate() {
        let records = runner::run_scenario(s)?;
        let dir = if sweep { out.join(format!("cell-{k:03}")) } else { out.clone() };
        output::write_records(&dir, &records)?;
        for r in records.iter().filter(|r| !r.passed()) {
            let failed: Vec<&str> = r.checks.iter().filter(|c| !c.pass).map(|c| c.name.as_str()).collect();
            println!("FAIL cell {k} repetition {}: status {}, failed {}", r.repetition, r.status, failed.join(","));
        }
        let row = AggregateRow::new(k, s, &records);
        println!(
            "{} n={} t={} port={} adversary={}: {}/{} passed, mean rounds {:.1}, max messages {}",
            row.protocol, row.n, row.t, row.port, row.adversary, row.passed, records.len(), row.mean_rounds, row.max_messages
        );
        rows.push(row);
    }
    let table = out.join(if sweep { "sweep.csv" } else { "aggregate.csv" });
    output::write_table(&table, &rows)?;
    if sweep {
        if let Some(slope) = output::rounds_slope(&rows) {
            println!("rounds-vs-t slope: {slope:.3}");
        }
    }
    println!("wrote {}", table.display());
    Ok(rows.iter().all(|r| r.failed == 0))
}

fn replay(path: &Path) -> Result<bool, CliError> {
    let (record, text) = output::read_record(path)?;
    let prepared = Prepared::new(&record.scenario)?;
    let again = runner::run_repetition(&record.scenario, &prepared, record.repetition)?;
    let identical = again.to_json() == text;
    println!("{}", if identical { "identical" } else { "DIFFERENT" });
    Ok(identical && again.passed())
}
