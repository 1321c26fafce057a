//! `cgnet`: rodeo scans, gate counts, subspace matrices and noise sweeps.

mod commands;
mod config;
mod error;
mod output;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use cgnet::noise::JitterMode;
use cgnet::rodeo::{Construction, Evolution, RunMode};
use cgnet::varsub::{AnsatzParams, OverlapMethod};
use clap::{Args, Parser, Subcommand};

use config::Settings;
use error::CliError;
use output::Out;

#[derive(Parser, Debug)]
#[command(name = "cgnet", version, about = "Controlled gate networks and rodeo eigenvalue scans")]
struct Cli {
    /// TOML settings; flags given on the command line override it.
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// exact | sampled
    #[arg(long, global = true)]
    mode: Option<RunMode>,
    /// Rodeo cycles per circuit.
    #[arg(long, global = true)]
    cycles: Option<usize>,
    /// Depolarizing probability per two-qubit gate.
    #[arg(long = "noise-p2q", global = true, value_name = "P")]
    noise_p2q: Option<f64>,
    /// Comma-separated jitter scales.
    #[arg(long = "jitter-eps", global = true, value_delimiter = ',', value_name = "EPS")]
    jitter_eps: Option<Vec<f64>>,
    /// per-cycle | per-shot
    #[arg(long = "jitter-mode", global = true)]
    jitter_mode: Option<JitterMode>,
    /// Directory for result files and effective-config.toml.
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Exact spectrum and initial-state overlaps.
    Diagonalize(SystemArgs),
    /// Three-pass rodeo scan with peak fits.
    Scan(SystemArgs),
    /// Native gate counts of a circuit.
    Count(CircuitArgs),
    /// Overlap and Hamiltonian matrices on ansatz states, then the generalized eigenproblem.
    Varsub(VarsubArgs),
    /// Jitter suppression table, plus depolarizing peak heights when --noise-p2q > 0.
    NoiseSweep(SweepArgs),
    /// Rewrite a circuit into a native gate set.
    Transpile(CircuitArgs),
}

#[derive(Args, Debug)]
struct SystemArgs {
    /// Hamiltonian file, one `coeff letters` term per line.
    #[arg(long, value_name = "FILE")]
    hamiltonian: Option<PathBuf>,
    /// Product state over 0, 1, +, -.
    #[arg(long)]
    state: Option<String>,
    /// reversal | controlled
    #[arg(long, value_parser = parse_construction)]
    construction: Option<Construction>,
    /// exact | dense | trotter:DT
    #[arg(long, value_parser = parse_evolution)]
    evolution: Option<Evolution>,
}

#[derive(Args, Debug)]
struct CircuitArgs {
    /// fig2_network, fig4_hadamard, rodeo_cycle_reversal, rodeo_cycle_naive or chain(N, sigma, dt)
    builtin: Option<String>,
    /// Circuit file, one op per line.
    #[arg(long, value_name = "FILE", conflicts_with = "builtin")]
    circuit: Option<PathBuf>,
    /// ibm | qtm
    #[arg(long)]
    basis: Option<String>,
    /// Energy of the built-in rodeo cycles.
    #[arg(long, allow_hyphen_values = true)]
    energy: Option<f64>,
    /// Time of the built-in rodeo cycles.
    #[arg(long, allow_hyphen_values = true)]
    time: Option<f64>,
}

#[derive(Args, Debug)]
struct VarsubArgs {
    /// Two-qubit Hamiltonian file.
    #[arg(long, value_name = "FILE")]
    hamiltonian: Option<PathBuf>,
    #[arg(long)]
    state: Option<String>,
    /// network | hadamard
    #[arg(long)]
    method: Option<OverlapMethod>,
    #[arg(long)]
    shots: Option<u64>,
    /// Ansatz point `alpha,beta,gamma,delta`; repeat for each basis state.
    #[arg(long = "param", value_parser = parse_params, allow_hyphen_values = true)]
    params: Vec<AnsatzParams>,
}

#[derive(Args, Debug)]
struct SweepArgs {
    #[command(flatten)]
    system: SystemArgs,
    /// Comma-separated time scales.
    #[arg(long, value_delimiter = ',')]
    sigmas: Option<Vec<f64>>,
}

fn parse_construction(s: &str) -> Result<Construction, String> {
    match s {
        "reversal" => Ok(Construction::Reversal),
        "controlled" => Ok(Construction::Controlled),
        _ => Err(format!("unknown construction '{s}' (reversal | controlled)")),
    }
}

fn parse_evolution(s: &str) -> Result<Evolution, String> {
    match s {
        "exact" => Ok(Evolution::Exact),
        "dense" => Ok(Evolution::Dense),
        _ => match s.strip_prefix("trotter:").map(str::parse::<f64>) {
            Some(Ok(dt)) => Ok(Evolution::Trotter { dt }),
            _ => Err(format!("unknown evolution '{s}' (exact | dense | trotter:DT)")),
        },
    }
}

fn parse_params(s: &str) -> Result<AnsatzParams, String> {
    let v: Result<Vec<f64>, _> = s.split(',').map(|x| x.trim().parse::<f64>()).collect();
    match v.map_err(|e| e.to_string())?[..] {
        [a, b, c, d] => Ok(AnsatzParams::new(a, b, c, d)),
        _ => Err(format!("expected alpha,beta,gamma,delta, got '{s}'")),
    }
}

fn read(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(CliError::io(path))
}

impl SystemArgs {
    fn apply(&self, s: &mut Settings) -> Result<(), CliError> {
        if let Some(p) = &self.hamiltonian {
            s.system.hamiltonian = read(p)?;
        }
        if let Some(v) = &self.state {
            s.system.state = v.clone();
        }
        if let Some(c) = self.construction {
            s.system.construction = c;
        }
        if let Some(e) = self.evolution {
            s.system.evolution = e;
        }
        Ok(())
    }
}

impl CircuitArgs {
    fn apply(&self, s: &mut Settings) -> Result<(), CliError> {
        if let Some(b) = &self.builtin {
            s.circuit.builtin = b.clone();
            s.circuit.text = None;
        }
        if let Some(p) = &self.circuit {
            s.circuit.text = Some(read(p)?);
        }
        if let Some(b) = &self.basis {
            s.circuit.basis = b.clone();
        }
        if let Some(e) = self.energy {
            s.circuit.energy = e;
        }
        if let Some(t) = self.time {
            s.circuit.time = t;
        }
        Ok(())
    }
}

impl VarsubArgs {
    fn apply(&self, s: &mut Settings) -> Result<(), CliError> {
        let v = &mut s.varsub;
        if let Some(p) = &self.hamiltonian {
            v.hamiltonian = read(p)?;
        }
        if let Some(x) = &self.state {
            v.state = x.clone();
        }
        if let Some(m) = self.method {
            v.method = m;
        }
        if let Some(n) = self.shots {
            v.shots = n;
        }
        if !self.params.is_empty() {
            v.params = self.params.clone();
        }
        Ok(())
    }
}

impl Cli {
    fn settings(&self) -> Result<Settings, CliError> {
        let mut s = match &self.config {
            Some(p) => Settings::load(p)?,
            None => Settings::default(),
        };
        if let Some(v) = self.seed {
            s.seed = v;
        }
        if let Some(v) = self.mode {
            s.mode = v;
        }
        if let Some(v) = self.cycles {
            s.cycles = v;
        }
        if let Some(v) = self.noise_p2q {
            s.noise_p2q = v;
        }
        if let Some(v) = &self.jitter_eps {
            s.jitter_eps = v.clone();
        }
        if self.jitter_mode.is_some() {
            s.jitter_mode = self.jitter_mode;
        }
        match &self.command {
            Command::Diagonalize(a) | Command::Scan(a) => a.apply(&mut s)?,
            Command::Count(a) | Command::Transpile(a) => a.apply(&mut s)?,
            Command::Varsub(a) => a.apply(&mut s)?,
            Command::NoiseSweep(a) => {
                a.system.apply(&mut s)?;
                if let Some(v) = &a.sigmas {
                    s.sweep.sigmas = v.clone();
                }
            }
        }
        Ok(s)
    }

    fn command_name(&self) -> &'static str {
        match self.command {
            Command::Diagonalize(_) => "diagonalize",
            Command::Scan(_) => "scan",
            Command::Count(_) => "count",
            Command::Varsub(_) => "varsub",
            Command::NoiseSweep(_) => "noise-sweep",
            Command::Transpile(_) => "transpile",
        }
    }
}

fn run(cli: &Cli) -> Result<(), CliError> {
    let s = cli.settings()?;
    let out = Out::new(cli.out.clone())?;
    let header = format!("# cgnet {} --config effective-config.toml\n", cli.command_name());
    out.text("effective-config.toml", &(header + &s.to_toml()))?;
    match &cli.command {
        Command::Diagonalize(_) => commands::diagonalize_cmd(&s, &out),
        Command::Scan(_) => commands::scan_cmd(&s, &out),
        Command::Count(_) => commands::count_cmd(&s, &out),
        Command::Varsub(_) => commands::varsub_cmd(&s, &out),
        Command::NoiseSweep(_) => commands::noise_sweep_cmd(&s, &out),
        Command::Transpile(_) => commands::transpile_cmd(&s, &out),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 3 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
