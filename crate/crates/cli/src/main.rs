use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use rai_cli::{bundled, load, run, write_outputs, CliError, Format, Scenario, ScenarioKind};

#[derive(Parser)]
#[command(name = "rai", version, about = "Recurrent averaging inequalities: structural checks and scenario runs")]
struct Cli {
    /// Overrides the scenario seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Directory for the verdict JSON and trajectory artifact.
    #[arg(long, global = true)]
    out_dir: Option<PathBuf>,
    /// Trajectory artifact format; with `list`, `json` prints the full catalog.
    #[arg(long, global = true, value_enum, default_value_t = FormatArg::Csv)]
    format: FormatArg,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Csv,
    Json,
}

#[derive(Subcommand)]
enum Command {
    /// Analyze a graph or matrix scenario, or a bare graph/matrix file.
    Analyze {
        scenario: Option<String>,
        /// Graph as JSON (`{"n":..,"weights":..}` or rows) or an edge list.
        #[arg(long, conflicts_with_all = ["scenario", "matrix"])]
        graph: Option<PathBuf>,
        /// Matrix as JSON rows.
        #[arg(long, conflicts_with = "scenario")]
        matrix: Option<PathBuf>,
    },
    /// Check structural properties of a matrix sequence.
    Check { scenario: String },
    /// Simulate an averaging, bounded-confidence or signed-weight scenario.
    Simulate { scenario: String },
    /// Solve a distributed common-fixed-point problem.
    Solve { scenario: String },
    /// Run any scenario regardless of kind.
    Run { scenario: String },
    /// List the bundled scenarios.
    List,
    /// Print a bundled scenario's JSON.
    Show { name: String },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(&cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("{}", e.machine_line());
            ExitCode::from(2)
        }
    }
}

fn family(kind: ScenarioKind) -> &'static str {
    match kind {
        ScenarioKind::AnalyzeGraph | ScenarioKind::AnalyzeMatrix => "analyze",
        ScenarioKind::CheckSequence => "check",
        ScenarioKind::SimulateRai | ScenarioKind::SimulateHk | ScenarioKind::SimulateAltafini => "simulate",
        ScenarioKind::SolveFixedpoint => "solve",
    }
}

fn dispatch(cli: &Cli) -> Result<u8, CliError> {
    let (scenario, expected) = match &cli.command {
        Command::List => {
            list(cli.format);
            return Ok(0);
        }
        Command::Show { name } => {
            let s = bundled::get(name).ok_or_else(|| CliError::NotFound(name.clone()))?;
            println!("{}", s.to_json());
            return Ok(0);
        }
        Command::Analyze { scenario: Some(s), .. } => (load(s)?, Some("analyze")),
        Command::Analyze { scenario: None, graph: Some(p), .. } => {
            (file_scenario(p, ScenarioKind::AnalyzeGraph)?, None)
        }
        Command::Analyze { scenario: None, matrix: Some(p), .. } => {
            (file_scenario(p, ScenarioKind::AnalyzeMatrix)?, None)
        }
        Command::Analyze { .. } => {
            return Err(CliError::Schema("analyze needs a scenario, --graph or --matrix".into()))
        }
        Command::Check { scenario } => (load(scenario)?, Some("check")),
        Command::Simulate { scenario } => (load(scenario)?, Some("simulate")),
        Command::Solve { scenario } => (load(scenario)?, Some("solve")),
        Command::Run { scenario } => (load(scenario)?, None),
    };
    if let Some(sub) = expected {
        if family(scenario.kind) != sub {
            return Err(CliError::Schema(format!(
                "scenario kind {} belongs to `{}`, not `{sub}`",
                scenario.kind,
                family(scenario.kind)
            )));
        }
    }
    let seed = cli.seed.unwrap_or(scenario.seed);
    let outcome = run(&scenario, seed)?;
    if let Some(dir) = &cli.out_dir {
        let format = match cli.format {
            FormatArg::Csv => Format::Csv,
            FormatArg::Json => Format::Json,
        };
        write_outputs(&scenario, &outcome, dir, format)?;
    }
    print!("{}", outcome.verdict_text());
    Ok(outcome.exit_code() as u8)
}

fn list(format: FormatArg) {
    let catalog = bundled::catalog();
    match format {
        FormatArg::Json => {
            println!("{}", serde_json::to_string_pretty(&catalog).expect("catalog serializes"));
        }
        FormatArg::Csv => {
            for s in &catalog {
                println!("{}\t{}\t{}", s.name, s.kind, s.description);
            }
        }
    }
}

/// Wraps a bare graph or matrix file into a one-off scenario.
fn file_scenario(path: &Path, kind: ScenarioKind) -> Result<Scenario, CliError> {
    let text = std::fs::read_to_string(path)?;
    let name: String = path
        .file_stem()
        .map(|s| {
            s.to_string_lossy().chars().map(|c| if c.is_ascii_alphanumeric() || c == '-' { c } else { '_' }).collect()
        })
        .filter(|s: &String| !s.is_empty())
        .unwrap_or_else(|| "input".into());
    let parsed: Option<Value> = serde_json::from_str(&text).ok();
    let parameters = match (kind, parsed) {
        (ScenarioKind::AnalyzeGraph, Some(v)) => json!({ "graph": v }),
        (ScenarioKind::AnalyzeGraph, None) => json!({ "edge_list": text }),
        (_, Some(v)) => json!({ "matrix": v }),
        (_, None) => return Err(CliError::Parse(format!("{}: matrix file must be JSON rows", path.display()))),
    };
    Ok(Scenario {
        schema_version: rai_cli::scenario::SCHEMA_VERSION,
        name,
        description: String::new(),
        kind,
        seed: 0,
        parameters,
        outputs: Default::default(),
    })
}
