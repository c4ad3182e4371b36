use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use qgeom::scenario::{self, Overrides};

#[derive(Parser)]
#[command(name = "qgeom", version, about = "Geometry of quantum state spaces: fields, flows and algebra contractions")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a builtin scenario or a scenario JSON file.
    Run {
        /// Builtin name or path to a scenario file.
        target: String,
        #[arg(long, default_value = "out")]
        out: PathBuf,
        #[arg(long)]
        gamma: Option<f64>,
        /// Magnetic field, e.g. `--B 0,0,1`.
        #[arg(long = "B", value_parser = parse_vec3, allow_hyphen_values = true)]
        field: Option<[f64; 3]>,
        #[arg(long)]
        t_end: Option<f64>,
        #[arg(long)]
        dt: Option<f64>,
        /// Also write the contraction report.
        #[arg(long)]
        report: bool,
    },
    /// List the builtin scenarios.
    List,
}

fn parse_vec3(s: &str) -> Result<[f64; 3], String> {
    let parts: Vec<f64> = s
        .split(',')
        .map(|p| p.trim().parse::<f64>().map_err(|e| format!("{p:?}: {e}")))
        .collect::<Result<_, _>>()?;
    parts.try_into().map_err(|v: Vec<f64>| format!("expected 3 components, got {}", v.len()))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::List => {
            for name in scenario::BUILTINS {
                println!("{name}");
            }
            ExitCode::SUCCESS
        }
        Command::Run { target, out, gamma, field, t_end, dt, report } => {
            let seed = match std::env::var("GEOM_SEED") {
                Ok(v) => match v.parse() {
                    Ok(s) => Some(s),
                    Err(e) => {
                        eprintln!("error: GEOM_SEED={v:?}: {e}");
                        return ExitCode::from(2);
                    }
                },
                Err(_) => None,
            };
            let o = Overrides { gamma, field, t_end, dt, report, seed };
            match scenario::run(&target, &out, &o) {
                Ok(summary) => {
                    for f in &summary.files {
                        println!("{}", out.join(f).display());
                    }
                    if let Some(v) = summary.verdict {
                        println!("verdict: {v}");
                    }
                    ExitCode::SUCCESS
                }
                Err(e) => {
                    eprintln!("error: {e}");
                    ExitCode::FAILURE
                }
            }
        }
    }
}
