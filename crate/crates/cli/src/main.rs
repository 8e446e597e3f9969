//! `dmimo`: batch front end for the distributed MIMO radar simulator.

mod output;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand, ValueEnum};

use dmimo_core::analysis::{law, Dims};
use dmimo_core::detectors::{CompensationSet, DetectorKind};
use dmimo_core::experiment::ExperimentSpec;
use dmimo_core::Probability;

#[derive(Parser)]
#[command(
    name = "dmimo",
    version,
    about = "Detection performance of asynchronous distributed MIMO radar"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Csv,
}

#[derive(clap::Args)]
struct Io {
    /// Experiment JSON file.
    #[arg(long)]
    experiment: PathBuf,
    /// Output file, or `-` for stdout. Defaults to the experiment's
    /// `outputs` entry, else stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "csv")]
    format: Format,
}

#[derive(Subcommand)]
enum Command {
    /// Write auto- and cross-ambiguity samples of the experiment's waveforms.
    Caf(Io),
    /// Analytic sweep: threshold, noncentrality and detection probability.
    Analyze(Io),
    /// Analytic sweep plus Monte Carlo estimates; fails if any point is
    /// outside its confidence gate.
    Simulate {
        #[command(flatten)]
        io: Io,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        trials: Option<u64>,
    },
    /// Print the detection threshold for a target false-alarm probability.
    Threshold {
        #[arg(long)]
        detector: DetectorKind,
        #[arg(long)]
        pfa: f64,
        #[arg(long, default_value_t = 12)]
        pulses: usize,
        #[arg(long, default_value_t = 2)]
        num_tx: usize,
        #[arg(long, default_value_t = 1)]
        num_rx: usize,
        #[arg(long, default_value_t = 1.0)]
        sigma2: f64,
        /// CD template energy ς.
        #[arg(long)]
        varsigma: Option<f64>,
        /// Take K, M, N, σ² and ς from this experiment's scene instead.
        #[arg(long)]
        experiment: Option<PathBuf>,
    },
}

/// Exit codes: 1 runtime error, 2 usage error, 3 simulation outside its gate.
fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            if e.downcast_ref::<UsageError>().is_some() {
                ExitCode::from(2)
            } else {
                ExitCode::from(1)
            }
        }
    }
}

#[derive(Debug)]
struct UsageError(String);

impl std::fmt::Display for UsageError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

fn usage(msg: impl Into<String>) -> anyhow::Error {
    UsageError(msg.into()).into()
}

fn load(path: &Path) -> Result<ExperimentSpec> {
    let text =
        std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    ExperimentSpec::from_json(&text).with_context(|| format!("in {}", path.display()))
}

fn destination(cli_out: &Option<PathBuf>, from_spec: &Option<String>) -> Result<Option<PathBuf>> {
    match (cli_out, from_spec) {
        (Some(p), _) if p.as_os_str().is_empty() => Err(usage("--out must not be empty")),
        (Some(p), _) if p.as_os_str() == "-" => Ok(None),
        (Some(p), _) => Ok(Some(p.clone())),
        (None, Some(s)) if s.is_empty() => {
            Err(usage("output path in the experiment file is empty"))
        }
        (None, Some(s)) => Ok(Some(PathBuf::from(s))),
        (None, None) => Ok(None),
    }
}

fn run(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::Caf(io) => {
            let Format::Csv = io.format;
            let spec = load(&io.experiment)?;
            let out = destination(&io.out, &spec.outputs.caf_csv)?;
            let rows = spec.caf_rows()?;
            output::write(out.as_deref(), |w| output::caf_csv(w, &rows))?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Analyze(io) => {
            let Format::Csv = io.format;
            let spec = load(&io.experiment)?;
            let out = destination(&io.out, &spec.outputs.analyze_csv)?;
            let rows = spec.analyze()?;
            output::write(out.as_deref(), |w| output::analyze_csv(w, &rows))?;
            for r in rows
                .iter()
                .filter_map(|r| r.point.as_ref().err().map(|e| (r, e)))
            {
                eprintln!(
                    "note: {} at {} = {} ({}): {}",
                    r.0.detector, r.0.sweep_var, r.0.sweep_value, r.0.case, r.1
                );
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Simulate { io, seed, trials } => {
            let Format::Csv = io.format;
            let mut spec = load(&io.experiment)?;
            if let Some(s) = seed {
                spec.seed = s;
            }
            if let Some(t) = trials {
                if t == 0 {
                    return Err(usage("--trials must be at least 1"));
                }
                spec.trials = t;
            }
            let out = destination(&io.out, &spec.outputs.simulate_csv)?;
            let rows = spec.simulate()?;
            output::write(out.as_deref(), |w| output::simulate_csv(w, &rows))?;
            let failed: Vec<_> = rows
                .iter()
                .filter(|r| r.within_gate() == Some(false))
                .collect();
            for r in &failed {
                let a = &r.analytic;
                let pd = a.point.as_ref().map(|p| p.pd.value()).unwrap_or(f64::NAN);
                let emp = r
                    .empirical
                    .as_ref()
                    .map(|e| e.p_hat.value())
                    .unwrap_or(f64::NAN);
                eprintln!(
                    "mismatch: {} at {} = {} ({}): analytic {pd}, empirical {emp}",
                    a.detector, a.sweep_var, a.sweep_value, a.case
                );
            }
            if failed.is_empty() {
                Ok(ExitCode::SUCCESS)
            } else {
                eprintln!(
                    "{} of {} points outside the confidence gate",
                    failed.len(),
                    rows.len()
                );
                Ok(ExitCode::from(3))
            }
        }
        Command::Threshold {
            detector,
            pfa,
            pulses,
            num_tx,
            num_rx,
            sigma2,
            varsigma,
            experiment,
        } => {
            let target = Probability::new(pfa).map_err(|e| usage(e.to_string()))?;
            if !target.is_interior() {
                return Err(usage(format!(
                    "--pfa must lie strictly between 0 and 1, got {pfa}"
                )));
            }
            let (dims, sigma2, varsigma) = match experiment {
                Some(path) => {
                    let spec = load(&path)?;
                    let sc = &spec.scenario;
                    let comp = CompensationSet::new(sc, &spec.errors(), &spec.waveforms()?)?;
                    (
                        Dims::of(sc),
                        sc.noise_power,
                        Some(varsigma.unwrap_or(comp.varsigma())),
                    )
                }
                None => (Dims::new(pulses, num_tx, num_rx), sigma2, varsigma),
            };
            let gamma = law(detector, dims, sigma2, varsigma)?.threshold(target)?;
            println!("{gamma}");
            Ok(ExitCode::SUCCESS)
        }
    }
}
