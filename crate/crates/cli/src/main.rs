use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context};
use bearing_flows::experiments::{
    analyze_scenario, reproduce, run_batch, run_scenario, OutputFormat, RunOptions, REPRODUCTIONS,
};
use bearing_flows::scenario::CertName;
use bearing_flows::{ControllerFamily, Execution, Topology};
use clap::{Args, Parser, Subcommand, ValueEnum};

/// Bearing-only consensus and formation control: simulation and certificates.
#[derive(Parser)]
#[command(name = "bearing-flows", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate a scenario and write its trajectory and report.
    /// Exits 0 when converged, 2 at the time limit, 1 on error.
    Simulate {
        scenario: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// Compute certificates for a scenario without simulating.
    Analyze {
        scenario: PathBuf,
        /// Comma-separated: nu, conjecture, spectrum, persistence, rigidity.
        #[arg(long, value_delimiter = ',')]
        cert: Vec<String>,
        #[command(flatten)]
        common: Common,
    },
    /// Run a canned reproduction: counterexample, fig3, fig4, persistence-fig1.
    Reproduce {
        name: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Simulate several scenarios concurrently (BEARING_FLOWS_THREADS caps workers).
    Batch {
        scenarios: Vec<PathBuf>,
        #[command(flatten)]
        common: Common,
    },
}

#[derive(Args)]
struct Common {
    #[arg(long)]
    dt: Option<f64>,
    #[arg(long)]
    tmax: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory (default: current directory).
    #[arg(long, default_value = ".")]
    out: PathBuf,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
    /// Override the scenario's controller family.
    #[arg(long, value_enum)]
    controller: Option<Family>,
    /// Override the scenario's sensing topology.
    #[arg(long, value_enum)]
    topology: Option<Sensing>,
    /// Run restarts and trials on one thread.
    #[arg(long)]
    sequential: bool,
}

#[derive(Clone, Copy, ValueEnum)]
enum Family {
    Consensus,
    Formation,
}

#[derive(Clone, Copy, ValueEnum)]
enum Sensing {
    Undirected,
    Directed,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    Json,
}

impl Common {
    fn options(&self, certs: Option<Vec<CertName>>) -> RunOptions {
        RunOptions {
            dt: self.dt,
            t_max: self.tmax,
            seed: self.seed,
            certs,
            out_dir: Some(self.out.clone()),
            format: match self.format {
                Format::Csv => OutputFormat::Csv,
                Format::Json => OutputFormat::Json,
            },
            exec: if self.sequential { Execution::Sequential } else { Execution::default() },
            controller: self.controller.map(|c| match c {
                Family::Consensus => ControllerFamily::Consensus,
                Family::Formation => ControllerFamily::Formation,
            }),
            topology: self.topology.map(|t| match t {
                Sensing::Undirected => Topology::Undirected,
                Sensing::Directed => Topology::Directed,
            }),
        }
    }
}

fn run(cli: Cli) -> anyhow::Result<u8> {
    match cli.command {
        Command::Simulate { scenario, common } => {
            let outcome = run_scenario(&scenario, &common.options(None))
                .with_context(|| format!("simulating {}", scenario.display()))?;
            let t = &outcome.trajectory;
            println!(
                "{}: {:?} at t = {} after {} steps",
                outcome.name,
                t.stop_reason,
                t.final_time(),
                t.steps
            );
            for f in &outcome.files {
                println!("wrote {}", f.display());
            }
            Ok(outcome.exit_code() as u8)
        }
        Command::Analyze { scenario, cert, common } => {
            let certs = if cert.is_empty() {
                None
            } else {
                Some(cert.iter().map(|c| c.parse()).collect::<Result<Vec<CertName>, _>>()?)
            };
            let (report, files) = analyze_scenario(&scenario, &common.options(certs))
                .with_context(|| format!("analyzing {}", scenario.display()))?;
            println!("{}", report.to_json());
            for f in &files {
                eprintln!("wrote {}", f.display());
            }
            Ok(0)
        }
        Command::Reproduce { name, out } => {
            if !REPRODUCTIONS.contains(&name.as_str()) {
                bail!("unknown reproduction `{name}`; expected one of {}", REPRODUCTIONS.join(", "));
            }
            let r = reproduce(&name, out.as_deref())?;
            print!("{}", r.summary);
            for f in &r.files {
                println!("wrote {}", f.display());
            }
            Ok(if r.passed { 0 } else { 1 })
        }
        Command::Batch { scenarios, common } => {
            let results = run_batch(&scenarios, &common.options(None));
            let mut code = 0u8;
            for (path, res) in scenarios.iter().zip(results) {
                match res {
                    Ok(o) => {
                        println!("{}: {:?} (exit {})", path.display(), o.trajectory.stop_reason, o.exit_code());
                        code = code.max(o.exit_code() as u8);
                    }
                    Err(e) => {
                        eprintln!("{}: error: {e}", path.display());
                        code = 1;
                    }
                }
            }
            Ok(code)
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
