use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use seirvax_cli::{
    config, list_presets, load_scenario, resolve_out_dir, run_to_dir, status_exit_code, sweep_to_dir, CliError,
};

#[derive(Parser)]
#[command(
    name = "seirvax",
    version,
    about = "SEIR epidemic simulator with feedback vaccination"
)]
#[command(args_conflicts_with_subcommands = true)]
struct Cli {
    #[command(subcommand)]
    command: Option<Command>,
    #[command(flatten)]
    run: RunArgs,
}

#[derive(Subcommand)]
enum Command {
    /// Run a preset or a scenario file.
    Run(RunArgs),
    /// List the built-in presets.
    ListPresets {
        /// One name per line.
        #[arg(long)]
        machine: bool,
    },
}

#[derive(Args, Default)]
struct RunArgs {
    /// Built-in scenario name.
    #[arg(long, value_name = "NAME")]
    preset: Option<String>,
    /// Scenario file.
    #[arg(long, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Output directory [default: $SEIRVAX_OUT or ./seirvax-out].
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Step size in days.
    #[arg(long, value_name = "DAYS")]
    dt: Option<f64>,
    /// Horizon in days.
    #[arg(long, value_name = "DAYS")]
    horizon: Option<f64>,
    /// Vaccination law: none, saturated or unsaturated.
    #[arg(long)]
    law: Option<String>,
    /// Print the stability verdicts.
    #[arg(long)]
    check_stability: bool,
    /// Run a grid instead of a single scenario; repeat for a product grid.
    #[arg(long, value_name = "KEY=v1,v2,...")]
    sweep: Vec<String>,
    /// List the built-in presets and exit.
    #[arg(long)]
    list_presets: bool,
    /// With --list-presets: one name per line.
    #[arg(long)]
    machine: bool,
}

fn run(args: RunArgs) -> Result<i32, CliError> {
    if args.list_presets {
        print!("{}", list_presets(args.machine));
        return Ok(0);
    }
    let mut sc = load_scenario(args.preset.as_deref(), args.config.as_deref())?;
    if let Some(dt) = args.dt {
        sc.dt = dt;
    }
    if let Some(h) = args.horizon {
        sc.horizon = h;
    }
    if let Some(law) = &args.law {
        sc.control.law = config::parse_law(law)?;
    }
    let out = resolve_out_dir(args.out.as_deref());

    if !args.sweep.is_empty() {
        let rows = sweep_to_dir(&sc, &args.sweep, &out)?;
        let failed = rows.iter().filter(|r| r.outcome.is_err()).count();
        println!(
            "{} grid points, {failed} failed; wrote {}",
            rows.len(),
            out.join("sweep.csv").display()
        );
        return Ok(0);
    }

    let result = run_to_dir(&sc, &out)?;
    let r = &result.report;
    println!(
        "{}: {} records, wrote {}",
        sc.name,
        result.trajectory.records.len(),
        out.display()
    );
    if let Some(f) = r.infected_fraction {
        println!("steady state infected fraction {f}");
    } else if let Some(f) = r.composition_infected_fraction {
        println!("no absolute steady state; steady composition infected fraction {f}");
    }
    if args.check_stability {
        for line in r.verdict_lines() {
            println!("{line}");
        }
    }
    Ok(status_exit_code(&r.status))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Some(Command::ListPresets { machine }) => {
            print!("{}", list_presets(machine));
            Ok(0)
        }
        Some(Command::Run(args)) => run(args),
        None => run(cli.run),
    };
    match outcome {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("seirvax: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
