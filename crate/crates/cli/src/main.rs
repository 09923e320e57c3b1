mod config;
mod output;

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand};
use serde_json::json;

use muskat_core::profiles::InitialData;
use muskat_core::spectral::mode_amplitude;
use muskat_core::stepper::{
    fit_decay_rate, mode_decay_rate, run, vanishing_viscosity, Mollifier, Scheme, SimConfig, Trajectory,
};
use muskat_core::validate::{run_suite, SuiteOptions};

use config::{ConfigError, RunConfig};
use output::{fmt, fmt_opt, OutputSet, RunManifest};

const EXIT_INVARIANT: u8 = 1;
const EXIT_USAGE: u8 = 2;
const EXIT_NUMERICAL: u8 = 3;

/// Contour-dynamics solver for the one-phase Muskat problem.
///
/// Every flag can also be set through the environment variable listed with it;
/// command-line flags take precedence.
#[derive(Parser)]
#[command(name = "muskat", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Output directory [default: muskat-out; validate writes files only when given].
    #[arg(long, global = true, env = "MUSKAT_OUT")]
    out: Option<PathBuf>,
    /// Seed for random initial data and randomized checks.
    #[arg(long, global = true, env = "MUSKAT_SEED")]
    seed: Option<u64>,
    /// Worker threads (default: all cores).
    #[arg(long, global = true, env = "MUSKAT_THREADS")]
    threads: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Run one trajectory and write trajectory, diagnostics and plot CSVs.
    Simulate {
        #[arg(long, env = "MUSKAT_CONFIG")]
        config: PathBuf,
    },
    /// Run the invariant suite and print a pass/fail table.
    Validate,
    /// Vanishing-viscosity sweep with a Cauchy report.
    Converge {
        #[arg(long, env = "MUSKAT_CONFIG")]
        config: PathBuf,
        /// Comma separated, strictly decreasing viscosities (overrides eps_list).
        #[arg(long, env = "MUSKAT_EPS")]
        eps: Option<String>,
    },
    /// Small-amplitude multi-mode decay with per-mode fitted rates.
    Spectrum {
        #[arg(long, env = "MUSKAT_CONFIG")]
        config: PathBuf,
    },
}

#[derive(Debug)]
struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn usage(message: impl ToString) -> Self {
        Self {
            code: EXIT_USAGE,
            message: message.to_string(),
        }
    }

    fn numerical(message: impl ToString) -> Self {
        Self {
            code: EXIT_NUMERICAL,
            message: message.to_string(),
        }
    }
}

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Self {
        Failure::usage(e)
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        if n == 0 {
            eprintln!("error: --threads must be >= 1");
            return ExitCode::from(EXIT_USAGE);
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(EXIT_USAGE);
        }
    }
    let result = match &cli.command {
        Command::Simulate { config } => simulate(&cli, config),
        Command::Validate => validate(&cli),
        Command::Converge { config, eps } => converge(&cli, config, eps.as_deref()),
        Command::Spectrum { config } => spectrum(&cli, config),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

fn scheme_name(s: Scheme) -> &'static str {
    match s {
        Scheme::Euler => "euler",
        Scheme::Heun => "heun",
    }
}

fn parameters(sim: &SimConfig) -> BTreeMap<String, serde_json::Value> {
    let (steps, dt) = sim.step_plan();
    let mut p = BTreeMap::new();
    p.insert("n_points".into(), json!(sim.n_points));
    p.insert("kappa".into(), json!(sim.kappa));
    p.insert("epsilon".into(), json!(sim.epsilon));
    p.insert("dt".into(), json!(dt));
    p.insert("n_steps".into(), json!(steps));
    p.insert("t_final".into(), json!(sim.t_final));
    p.insert("scheme".into(), json!(scheme_name(sim.scheme)));
    p.insert("dealias".into(), json!(sim.dealias));
    p.insert("output_every".into(), json!(sim.output_every));
    let mollifier = match sim.mollifier {
        Mollifier::None => json!("none"),
        Mollifier::Width(w) => json!({ "width": w }),
        Mollifier::TiedToEpsilon => json!({ "tied_to_epsilon": "sqrt(epsilon)" }),
    };
    p.insert("mollifier".into(), mollifier);
    p
}

fn manifest(command: &str, cfg: &RunConfig, sim: &SimConfig, start: Instant) -> RunManifest {
    RunManifest {
        command: command.into(),
        code_version: env!("CARGO_PKG_VERSION").into(),
        config: cfg.entries.clone(),
        parameters: parameters(sim),
        seed: cfg.seed,
        wall_clock_seconds: start.elapsed().as_secs_f64(),
        failure: None,
        outputs: Vec::new(),
    }
}

fn out_dir(cli: &Cli) -> PathBuf {
    cli.out.clone().unwrap_or_else(|| PathBuf::from("muskat-out"))
}

fn write_outputs(dir: &Path, files: OutputSet, manifest: RunManifest) -> Result<(), Failure> {
    files.write(dir, manifest).map(|_| ()).map_err(|e| Failure {
        code: EXIT_NUMERICAL,
        message: format!("writing outputs to {}: {e}", dir.display()),
    })
}

/// Dominant nonzero Fourier mode of the initial state.
fn dominant_mode(traj: &Trajectory) -> Option<usize> {
    let f0 = traj.snapshots.first()?;
    let floor = 1e-10 * f0.sup_norm();
    (1..f0.len() / 2)
        .map(|k| (k, mode_amplitude(f0, k)))
        .filter(|(_, a)| *a > floor)
        .max_by(|a, b| a.1.total_cmp(&b.1))
        .map(|(k, _)| k)
}

/// Running least-squares decay rate of one mode, undefined at the first output.
fn running_rates(traj: &Trajectory, mode: Option<usize>) -> Vec<Option<f64>> {
    let Some(k) = mode else {
        return vec![None; traj.times.len()];
    };
    let amps: Vec<f64> = traj.snapshots.iter().map(|s| mode_amplitude(s, k)).collect();
    (0..traj.times.len())
        .map(|n| fit_decay_rate(&traj.times[..=n], &amps[..=n]))
        .collect()
}

fn simulate(cli: &Cli, path: &Path) -> Result<(), Failure> {
    let start = Instant::now();
    let cfg = config::load(path, cli.seed)?;
    let sim = cfg
        .sim
        .clone()
        .ok_or_else(|| Failure::usage("key `profile`: required by simulate"))?;
    let traj = run(&sim).map_err(Failure::numerical)?;
    let mode = cfg.rate_mode.or_else(|| dominant_mode(&traj));

    let mut files = OutputSet::default();
    files.add("trajectory.csv", output::trajectory_csv(&traj));
    files.add(
        "diagnostics.csv",
        output::diagnostics_csv(&traj.diagnostics, &running_rates(&traj, mode)),
    );
    files.add("plot.csv", output::plot_csv(&traj));
    if sim.sigma_every.is_some() {
        files.add("sigma.csv", output::sigma_csv(&traj.diagnostics));
    }
    let mut m = manifest("simulate", &cfg, &sim, start);
    m.parameters.insert("rate_mode".into(), json!(mode));
    m.failure = traj.failure.as_ref().map(|f| format!("t = {}: {}", f.time, f.message));
    write_outputs(&out_dir(cli), files, m)?;
    match &traj.failure {
        Some(f) => Err(Failure::numerical(format!(
            "run stopped at t = {}: {}",
            f.time, f.message
        ))),
        None => Ok(()),
    }
}

fn validate(cli: &Cli) -> Result<(), Failure> {
    let start = Instant::now();
    let report = run_suite(&SuiteOptions {
        seed: cli.seed.unwrap_or(0),
        ..SuiteOptions::default()
    });
    let table = report.to_table();
    print!("{table}");
    if let Some(dir) = &cli.out {
        let mut files = OutputSet::default();
        files.add("validate.tsv", table);
        let m = RunManifest {
            command: "validate".into(),
            code_version: env!("CARGO_PKG_VERSION").into(),
            config: BTreeMap::new(),
            parameters: BTreeMap::new(),
            seed: cli.seed.unwrap_or(0),
            wall_clock_seconds: start.elapsed().as_secs_f64(),
            failure: None,
            outputs: Vec::new(),
        };
        write_outputs(dir, files, m)?;
    }
    if report.all_passed() {
        Ok(())
    } else {
        let names: Vec<&str> = report.failures().map(|c| c.name).collect();
        Err(Failure {
            code: EXIT_INVARIANT,
            message: format!("failed checks: {}", names.join(", ")),
        })
    }
}

fn converge(cli: &Cli, path: &Path, eps_flag: Option<&str>) -> Result<(), Failure> {
    let start = Instant::now();
    let cfg = config::load(path, cli.seed)?;
    let sim = cfg
        .sim
        .clone()
        .ok_or_else(|| Failure::usage("key `profile`: required by converge"))?;
    let eps = match eps_flag {
        Some(s) => config::parse_f64_list("--eps", s)?,
        None => cfg
            .eps_list
            .clone()
            .ok_or_else(|| Failure::usage("key `eps_list`: required by converge (or pass --eps)"))?,
    };
    if eps.is_empty() || eps.iter().any(|&e| e <= 0.0) || eps.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Failure::usage(
            "epsilon list must be positive and strictly decreasing",
        ));
    }
    let sweep = vanishing_viscosity(&sim, &eps).map_err(Failure::numerical)?;

    let mut cauchy = String::from("j,eps_j,eps_next,d_j\n");
    for (j, d) in sweep.cauchy.iter().enumerate() {
        cauchy.push_str(&format!("{j},{},{},{}\n", fmt(eps[j]), fmt(eps[j + 1]), fmt(*d)));
    }
    let mut finals = String::from("x");
    for e in &eps {
        finals.push_str(&format!(",eps_{}", fmt(*e)));
    }
    finals.push('\n');
    if let Some(grid) = sweep.trajectories[0].grid() {
        for (j, x) in grid.nodes().iter().enumerate() {
            finals.push_str(&fmt(*x));
            for t in &sweep.trajectories {
                finals.push(',');
                finals.push_str(&t.last().map(|s| fmt(s.values()[j])).unwrap_or_default());
            }
            finals.push('\n');
        }
    }
    let mut files = OutputSet::default();
    files.add("cauchy.csv", cauchy);
    files.add("final_profiles.csv", finals);
    let mut m = manifest("converge", &cfg, &sim, start);
    m.parameters.insert("eps_list".into(), json!(eps));
    let widths: Vec<Option<f64>> = eps.iter().map(|&e| sim.mollifier.width(e)).collect();
    m.parameters.insert("mollifier_widths".into(), json!(widths));
    if !sweep.complete {
        m.failure = Some("at least one trajectory stopped early; report incomplete".into());
    }
    write_outputs(&out_dir(cli), files, m)?;
    if sweep.complete {
        Ok(())
    } else {
        Err(Failure::numerical("vanishing-viscosity report incomplete"))
    }
}

fn spectrum(cli: &Cli, path: &Path) -> Result<(), Failure> {
    let start = Instant::now();
    let cfg = config::load(path, cli.seed)?;
    if cfg.sim.is_some() {
        return Err(Failure::usage(
            "key `profile`: spectrum builds its own multi-mode data from spectrum_modes and amplitude",
        ));
    }
    let a = cfg.amplitude;
    let sim = SimConfig {
        initial: InitialData::Multimode {
            terms: cfg.spectrum_modes.iter().map(|&k| (k, a, 0.0)).collect(),
        },
        ..cfg.base.clone()
    };
    if let Some(&k) = cfg.spectrum_modes.iter().find(|&&k| 2 * k as usize >= sim.n_points) {
        return Err(Failure::usage(format!(
            "key `spectrum_modes`: mode {k} not resolved on {} points",
            sim.n_points
        )));
    }
    let traj = run(&sim).map_err(Failure::numerical)?;
    let mut csv = String::from("k,fitted_rate,kappa_k,ratio\n");
    for &k in &cfg.spectrum_modes {
        let rate = if a == 0.0 { None } else { mode_decay_rate(&traj, k as usize) };
        let expect = sim.kappa * k as f64;
        let ratio = rate.filter(|_| expect > 0.0).map(|r| r / expect);
        csv.push_str(&format!("{k},{},{},{}\n", fmt_opt(rate), fmt(expect), fmt_opt(ratio)));
    }
    let mut files = OutputSet::default();
    files.add("spectrum.csv", csv);
    files.add("trajectory.csv", output::trajectory_csv(&traj));
    let mut m = manifest("spectrum", &cfg, &sim, start);
    m.failure = traj.failure.as_ref().map(|f| f.message.clone());
    write_outputs(&out_dir(cli), files, m)?;
    match traj.failure {
        Some(f) => Err(Failure::numerical(f.message)),
        None => Ok(()),
    }
}
