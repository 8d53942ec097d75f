use clap::{Parser, Subcommand};
use horolab_cli::artifacts::Summary;
use horolab_cli::config::{output_root, ConfigError, Experiment, ExperimentConfig};
use horolab_cli::experiments::{run_to_disk, RunError};
use horolab_cli::report;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

const EXIT_CHECK_FAILED: u8 = 1;
const EXIT_INVALID: u8 = 2;
const EXIT_COMPUTE: u8 = 3;
const EXIT_IO: u8 = 4;

#[derive(Parser)]
#[command(name = "horolab", version, about = "Horospherical means and Gibbs measures on Schottky surfaces")]
struct Cli {
    /// Artifact root; overrides the HOROLAB_OUT environment variable.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Treat failing trend checks like failing assertions.
    #[arg(long, global = true)]
    strict: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Operations on the Schottky group.
    Group {
        #[command(subcommand)]
        action: GroupAction,
    },
    /// Run the experiment selected in a config file.
    Run { config: PathBuf },
    /// Pressure and its shift and antipodal identities.
    Pressure { config: PathBuf },
    /// Quasi-invariance and base change of the boundary measures.
    Patterson { config: PathBuf },
    /// The full invariant suite.
    Checks { config: PathBuf },
    /// Horospherical means against the Gibbs measure.
    Equidist { config: PathBuf },
    /// Growth exponent of leaf balls.
    Growth { config: PathBuf },
    /// Vitali covers, condition (*) and cylinder-set averages.
    Star { config: PathBuf },
    /// Autoadjunction of the mean operator.
    Autoadjoint { config: PathBuf },
    /// Cell lemmas around nonwandering vectors.
    Cells { config: PathBuf },
    /// Limit set, orbit and fundamental domain pictures.
    Render { config: PathBuf },
    /// Summarize every run under the artifact root.
    Report,
}

#[derive(Subcommand)]
enum GroupAction {
    /// Check ping-pong and disk disjointness; without a config, the standard group.
    Validate { config: Option<PathBuf> },
}

fn load(path: &Path, kind: Option<&str>) -> Result<ExperimentConfig, ConfigError> {
    let mut cfg = ExperimentConfig::load(path)?;
    if let Some(kind) = kind {
        if cfg.experiment.kind() != kind {
            eprintln!("note: config selects '{}', running '{kind}' with default parameters", cfg.experiment.kind());
            cfg.experiment = Experiment::default_for(kind).expect("known experiment kind");
        }
    }
    Ok(cfg)
}

fn exit_for(e: &RunError) -> u8 {
    match e {
        RunError::Config(_) => EXIT_INVALID,
        RunError::Compute(_) => EXIT_COMPUTE,
        RunError::Io(_) => EXIT_IO,
    }
}

fn print_summary(s: &Summary) {
    for c in &s.checks {
        let verdict = if c.pass { "PASS" } else { "FAIL" };
        let value = c.value.map(|v| format!("{v:.3e}")).unwrap_or_default();
        let tol = c.tolerance.map(|v| format!(" (tol {v:.1e})")).unwrap_or_default();
        println!("{verdict}  {}: {value}{tol}  [{}]", c.name, c.anchor);
    }
}

fn run(path: &Path, kind: Option<&str>, root: &Path, strict: bool) -> u8 {
    let cfg = match load(path, kind) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_INVALID;
        }
    };
    let words = horolab::group::word_count(cfg.group.rank, cfg.max_len);
    println!(
        "{}: L = {} ({words} words), estimated memory {:.0} MB",
        cfg.name,
        cfg.max_len,
        cfg.estimated_memory() / 1e6
    );
    let start = Instant::now();
    match run_to_disk(&cfg, root) {
        Ok(summary) => {
            print_summary(&summary);
            println!("artifacts in {} ({:.1} s)", cfg.output_dir(root).display(), start.elapsed().as_secs_f64());
            let ok = if strict { summary.all_pass() } else { summary.assertions_pass() };
            if ok {
                0
            } else {
                EXIT_CHECK_FAILED
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            exit_for(&e)
        }
    }
}

fn validate_group(config: Option<&Path>) -> u8 {
    let spec = match config {
        None => horolab::group::GroupSpec::standard(),
        Some(p) => match ExperimentConfig::load(p) {
            Ok(cfg) => cfg.group,
            Err(e) => {
                eprintln!("error: {e}");
                return EXIT_INVALID;
            }
        },
    };
    match horolab::group::build_schottky(&spec) {
        Ok(g) => {
            println!("valid Schottky group of rank {}", g.rank());
            for (k, d) in g.disks().iter().enumerate() {
                println!("  disk {k}: center {:.6}, radius {:.6}", d.center, d.radius);
            }
            0
        }
        Err(e) => {
            eprintln!("invalid group: {e}");
            EXIT_INVALID
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let root = output_root(cli.out.as_deref());
    let code = match &cli.command {
        Command::Group {
            action: GroupAction::Validate { config },
        } => validate_group(config.as_deref()),
        Command::Run { config } => run(config, None, &root, cli.strict),
        Command::Pressure { config } => run(config, Some("pressure"), &root, cli.strict),
        Command::Patterson { config } => run(config, Some("patterson"), &root, cli.strict),
        Command::Checks { config } => run(config, Some("checks"), &root, cli.strict),
        Command::Equidist { config } => run(config, Some("equidistribution"), &root, cli.strict),
        Command::Growth { config } => run(config, Some("growth"), &root, cli.strict),
        Command::Star { config } => run(config, Some("star"), &root, cli.strict),
        Command::Autoadjoint { config } => run(config, Some("autoadjoint"), &root, cli.strict),
        Command::Cells { config } => run(config, Some("cells"), &root, cli.strict),
        Command::Render { config } => run(config, Some("render"), &root, cli.strict),
        Command::Report => {
            let (summaries, warnings) = report::collect(&root);
            for w in warnings {
                eprintln!("warning: {w}");
            }
            print!("{}", report::render(&summaries));
            0
        }
    };
    ExitCode::from(code)
}
