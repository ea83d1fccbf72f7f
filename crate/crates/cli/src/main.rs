//! `spiketopo` command-line tool.

mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(name = "spiketopo", version, about = "Topological classification of spike-train ensembles")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum DegreeArg {
    #[value(name = "0")]
    Zero,
    #[value(name = "1")]
    One,
    Both,
}

impl DegreeArg {
    fn degrees(self) -> &'static [usize] {
        match self {
            DegreeArg::Zero => &[0],
            DegreeArg::One => &[1],
            DegreeArg::Both => &[0, 1],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Scenario {
    NetworkA,
    Cascade,
    Chance,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Method {
    Vp1nn,
    Bayes,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Victor-Purpura distance between two spike lists given as JSON arrays.
    Vp {
        #[arg(long)]
        q: f64,
        #[arg(long)]
        a: String,
        #[arg(long)]
        b: String,
        /// Last tick of the time domain; defaults to the latest spike.
        #[arg(long)]
        t_max: Option<u32>,
    },
    /// Neuron-by-neuron VP matrix of one trial.
    VpMatrix {
        #[arg(long)]
        q: f64,
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        trial: i64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Vietoris-Rips persistence diagram of a distance matrix.
    Ph {
        #[arg(long)]
        input: PathBuf,
        #[arg(long, value_enum, default_value = "0")]
        degree: DegreeArg,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Bottleneck distance between two diagram files.
    Bottleneck {
        #[arg(long)]
        a: PathBuf,
        #[arg(long)]
        b: PathBuf,
        #[arg(long, default_value_t = 0)]
        degree: usize,
    },
    /// Bottleneck distance matrix over every diagram CSV in a directory.
    Bdm {
        #[arg(long)]
        diagrams: PathBuf,
        #[arg(long, default_value_t = 0)]
        degree: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Repeated subsample, persistence and leave-one-out 1-NN classification.
    Classify {
        #[arg(long)]
        input: PathBuf,
        #[arg(long, default_value_t = 2.005)]
        q: f64,
        #[arg(long, default_value_t = 0)]
        degree: usize,
        #[arg(long, default_value_t = 10)]
        trials: usize,
        #[arg(long, default_value_t = 20)]
        reps: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// First tick of the analysis window.
        #[arg(long, requires = "window_end")]
        window_start: Option<i64>,
        /// End of the analysis window (exclusive).
        #[arg(long, requires = "window_start")]
        window_end: Option<i64>,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Also write the labeled bottleneck matrix of the first repetition.
        #[arg(long)]
        bdm_out: Option<PathBuf>,
    },
    /// Classification score as a function of q.
    Sweep {
        #[arg(long)]
        input: PathBuf,
        #[arg(long, default_value_t = 0.0)]
        q_start: f64,
        #[arg(long, default_value_t = 2.0)]
        q_end: f64,
        #[arg(long, default_value_t = 0.005)]
        q_step: f64,
        #[arg(long, default_value_t = 10)]
        reps: usize,
        #[arg(long, default_value_t = 10)]
        trials: usize,
        #[arg(long, default_value_t = 0)]
        degree: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Generate a synthetic raster.
    Synth {
        #[arg(long, value_enum)]
        scenario: Scenario,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Number of stimuli for the chance scenario.
        #[arg(long, default_value_t = 2)]
        stimuli: usize,
        /// Output path; `.csv` selects the spike-row format.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Per-neuron baselines: VP 1-NN or the Bayesian rate-phase classifier.
    SingleNeuron {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        licks: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "vp1nn")]
        method: Method,
        #[arg(long, default_value_t = 0.875)]
        alpha: f64,
        #[arg(long, default_value_t = 2.005)]
        q: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Only this neuron (0-based); all neurons by default.
        #[arg(long)]
        neuron: Option<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Classical MDS of a distance matrix.
    Mds {
        #[arg(long)]
        input: PathBuf,
        #[arg(long, default_value_t = 2)]
        dim: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the oracle and property suite.
    Selfcheck {
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
}

/// Failure classes mapped to exit codes.
#[derive(Debug)]
enum Failure {
    Usage(String),
    Data(String),
}

impl From<spiketopo::Error> for Failure {
    fn from(e: spiketopo::Error) -> Self {
        Failure::Data(e.to_string())
    }
}

fn configure_threads() -> Result<(), Failure> {
    let Ok(value) = std::env::var("SPIKETOPO_THREADS") else {
        return Ok(());
    };
    let n: usize = value
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| Failure::Usage(format!("SPIKETOPO_THREADS must be a positive integer, got {value:?}")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| Failure::Usage(e.to_string()))
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match configure_threads().and_then(|()| commands::run(cli.command)) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Data(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}
