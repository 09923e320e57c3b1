//! Integrating-factor time stepping for `df/dt = -kappa G(f)f + eps f_xx` and the
//! vanishing-viscosity sweep.

use rayon::prelude::*;

use crate::bie::{sigma_min_monitor, DEFAULT_TOL, SIGMA_MONITOR_CAP};
use crate::diagnostics::{record, DiagnosticsRecord};
use crate::dno::{apply_dno_curve, DnoResult};
use crate::error::{Error, Result};
use crate::kernels::Curve;
use crate::profiles::InitialData;
use crate::spectral::{dealias, heat_factor, mode_amplitude, mollify, GridFunction, PeriodicGrid};
use crate::FaultInjection;

#[derive(Debug, Clone, PartialEq)]
pub struct InterfaceState {
    pub f: GridFunction,
    pub time: f64,
    pub kappa: f64,
    pub epsilon: f64,
}

impl InterfaceState {
    pub fn new(f: GridFunction, kappa: f64, epsilon: f64) -> Result<Self> {
        // kappa = 0 is allowed so that pure heat flow can be run through the same path
        if !(kappa >= 0.0 && kappa.is_finite()) {
            return Err(Error::InvalidArgument(format!("kappa must be >= 0, got {kappa}")));
        }
        if !(epsilon >= 0.0 && epsilon.is_finite()) {
            return Err(Error::InvalidArgument(format!("epsilon must be >= 0, got {epsilon}")));
        }
        Ok(Self {
            f,
            time: 0.0,
            kappa,
            epsilon,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DtRule {
    Fixed(f64),
    /// `dt = c dx / kappa` (or `c dx` when `kappa = 0`).
    Cfl(f64),
}

impl Default for DtRule {
    fn default() -> Self {
        DtRule::Cfl(0.25)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Scheme {
    /// Integrating-factor forward Euler.
    #[default]
    Euler,
    /// Integrating-factor Heun predictor-corrector, second order.
    Heun,
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum Mollifier {
    #[default]
    None,
    /// Gaussian of the given standard deviation.
    Width(f64),
    /// Width `sqrt(epsilon)`.
    TiedToEpsilon,
}

impl Mollifier {
    pub fn width(&self, epsilon: f64) -> Option<f64> {
        match *self {
            Mollifier::None => None,
            Mollifier::Width(w) => Some(w),
            Mollifier::TiedToEpsilon => Some(epsilon.sqrt()),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub n_points: usize,
    pub kappa: f64,
    pub epsilon: f64,
    pub dt_rule: DtRule,
    pub t_final: f64,
    pub initial: InitialData,
    /// Record a snapshot every this many steps (the final state is always recorded).
    pub output_every: usize,
    pub mollifier: Mollifier,
    pub scheme: Scheme,
    pub dealias: bool,
    /// Run the dense singular value monitor every this many steps.
    pub sigma_every: Option<usize>,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            n_points: 128,
            kappa: 1.0,
            epsilon: 0.0,
            dt_rule: DtRule::default(),
            t_final: 1.0,
            initial: InitialData::Flat { level: 0.0 },
            output_every: 1,
            mollifier: Mollifier::None,
            scheme: Scheme::Euler,
            dealias: false,
            sigma_every: None,
        }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<PeriodicGrid> {
        let grid = PeriodicGrid::new(self.n_points)?;
        let bad = |msg: String| Err(Error::InvalidArgument(msg));
        if !(self.kappa >= 0.0 && self.kappa.is_finite()) {
            return bad(format!("kappa must be >= 0, got {}", self.kappa));
        }
        if !(self.epsilon >= 0.0 && self.epsilon.is_finite()) {
            return bad(format!("epsilon must be >= 0, got {}", self.epsilon));
        }
        if !(self.t_final > 0.0 && self.t_final.is_finite()) {
            return bad(format!("t_final must be positive, got {}", self.t_final));
        }
        match self.dt_rule {
            DtRule::Fixed(dt) | DtRule::Cfl(dt) if !(dt > 0.0 && dt.is_finite()) => {
                return bad(format!("time step parameter must be positive, got {dt}"));
            }
            _ => {}
        }
        if self.output_every == 0 {
            return bad("output_every must be >= 1".into());
        }
        if let Some(w) = self.mollifier.width(self.epsilon) {
            if !(w >= 0.0 && w.is_finite()) {
                return bad(format!("mollifier width must be >= 0, got {w}"));
            }
        }
        if self.sigma_every == Some(0) {
            return bad("sigma_every must be >= 1".into());
        }
        Ok(grid)
    }

    /// Nominal step from the rule, before it is shortened to divide `t_final`.
    pub fn nominal_dt(&self) -> f64 {
        let dx = 2.0 * std::f64::consts::PI / self.n_points as f64;
        match self.dt_rule {
            DtRule::Fixed(dt) => dt,
            DtRule::Cfl(c) if self.kappa > 0.0 => c * dx / self.kappa,
            DtRule::Cfl(c) => c * dx,
        }
    }

    /// Number of steps and the uniform step that lands exactly on `t_final`.
    pub fn step_plan(&self) -> (usize, f64) {
        let n = (self.t_final / self.nominal_dt() - 1e-9).ceil().max(1.0) as usize;
        (n, self.t_final / n as f64)
    }

    pub fn initial_state(&self) -> Result<InterfaceState> {
        let grid = self.validate()?;
        let mut f = self.initial.sample(grid)?;
        if let Some(w) = self.mollifier.width(self.epsilon) {
            if w > 0.0 {
                f = mollify(&f, w)?;
            }
        }
        InterfaceState::new(f, self.kappa, self.epsilon)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepFailure {
    pub time: f64,
    pub message: String,
}

#[derive(Debug, Clone)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub snapshots: Vec<GridFunction>,
    pub diagnostics: Vec<DiagnosticsRecord>,
    pub kappa: f64,
    pub epsilon: f64,
    pub dt: f64,
    pub failure: Option<StepFailure>,
}

impl Trajectory {
    pub fn grid(&self) -> Option<PeriodicGrid> {
        self.snapshots.first().map(|s| s.grid())
    }

    pub fn last(&self) -> Option<&GridFunction> {
        self.snapshots.last()
    }

    pub fn is_complete(&self) -> bool {
        self.failure.is_none()
    }
}

/// `-kappa G(f)f` together with the operator evaluation it came from.
fn nonlinear_term(f: &GridFunction, kappa: f64, faults: FaultInjection) -> Result<(GridFunction, DnoResult)> {
    let dno = apply_dno_curve(&Curve::new(f)?, f, DEFAULT_TOL, faults)?;
    let rhs = dno.gf.map(|v| -kappa * v)?;
    Ok((rhs, dno))
}

fn axpy(f: &GridFunction, a: f64, g: &GridFunction) -> Result<GridFunction> {
    f.zip_map(g, |u, v| u + a * v)
}

/// One integrating-factor forward Euler step.
pub fn step(state: &InterfaceState, dt: f64) -> Result<InterfaceState> {
    step_with(state, dt, Scheme::Euler, false, None, FaultInjection::default())
}

pub fn step_scheme(state: &InterfaceState, dt: f64, scheme: Scheme) -> Result<InterfaceState> {
    step_with(state, dt, scheme, false, None, FaultInjection::default())
}

/// Advances one step; `pre` may carry `(-kappa G(f)f, ...)` already evaluated at `state.f`.
pub(crate) fn step_with(
    state: &InterfaceState,
    dt: f64,
    scheme: Scheme,
    mask: bool,
    pre: Option<GridFunction>,
    faults: FaultInjection,
) -> Result<InterfaceState> {
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::InvalidArgument(format!("dt must be positive, got {dt}")));
    }
    let nu = state.epsilon * dt;
    let n0 = match pre {
        Some(n) => n,
        None if state.kappa == 0.0 => GridFunction::zeros(state.f.grid()),
        None => nonlinear_term(&state.f, state.kappa, faults)?.0,
    };
    let mut f = match scheme {
        Scheme::Euler => heat_factor(&axpy(&state.f, dt, &n0)?, nu)?,
        Scheme::Heun => {
            let predictor = heat_factor(&axpy(&state.f, dt, &n0)?, nu)?;
            let n1 = if state.kappa == 0.0 {
                GridFunction::zeros(state.f.grid())
            } else {
                nonlinear_term(&predictor, state.kappa, faults)?.0
            };
            let half = heat_factor(&axpy(&state.f, 0.5 * dt, &n0)?, nu)?;
            axpy(&half, 0.5 * dt, &n1)?
        }
    };
    if mask {
        f = dealias(&f)?;
    }
    if let Some(index) = f.values().iter().position(|v| !v.is_finite()) {
        return Err(Error::NonFinite {
            stage: "time step",
            index,
        });
    }
    Ok(InterfaceState {
        f,
        time: state.time + dt,
        kappa: state.kappa,
        epsilon: state.epsilon,
    })
}

pub fn run(config: &SimConfig) -> Result<Trajectory> {
    run_with_faults(config, FaultInjection::default())
}

pub(crate) fn run_with_faults(config: &SimConfig, faults: FaultInjection) -> Result<Trajectory> {
    let mut state = config.initial_state()?;
    let (n_steps, dt) = config.step_plan();
    let mut traj = Trajectory {
        times: Vec::new(),
        snapshots: Vec::new(),
        diagnostics: Vec::new(),
        kappa: config.kappa,
        epsilon: config.epsilon,
        dt,
        failure: None,
    };
    for n in 0..=n_steps {
        let outcome = (|| -> Result<Option<GridFunction>> {
            let wants_output = n % config.output_every == 0 || n == n_steps;
            let needs_rhs = n < n_steps && state.kappa > 0.0;
            if !(wants_output || needs_rhs) {
                return Ok(None);
            }
            let (rhs, dno) = nonlinear_term(&state.f, state.kappa, faults)?;
            if wants_output {
                let mut rec = record(&state, &dno);
                if let Some(every) = config.sigma_every {
                    if n % every == 0 && config.n_points <= SIGMA_MONITOR_CAP {
                        rec.sigma_min = Some(sigma_min_monitor(&state.f)?);
                    }
                }
                traj.times.push(state.time);
                traj.snapshots.push(state.f.clone());
                traj.diagnostics.push(rec);
            }
            Ok(Some(rhs))
        })();
        let rhs = match outcome {
            Ok(r) => r,
            Err(e) => {
                traj.failure = Some(StepFailure {
                    time: state.time,
                    message: e.to_string(),
                });
                return Ok(traj);
            }
        };
        if n == n_steps {
            break;
        }
        match step_with(&state, dt, config.scheme, config.dealias, rhs, faults) {
            Ok(mut next) => {
                // accumulate time from the step count to keep output times exact
                next.time = (n + 1) as f64 * dt;
                state = next;
            }
            Err(e) => {
                traj.failure = Some(StepFailure {
                    time: state.time,
                    message: e.to_string(),
                });
                return Ok(traj);
            }
        }
    }
    Ok(traj)
}

#[derive(Debug, Clone)]
pub struct ViscositySweep {
    pub epsilons: Vec<f64>,
    pub trajectories: Vec<Trajectory>,
    /// `d_j = max_t ||f^{eps_j}(t) - f^{eps_{j+1}}(t)||_inf`.
    pub cauchy: Vec<f64>,
    pub complete: bool,
}

pub fn vanishing_viscosity(config: &SimConfig, eps_list: &[f64]) -> Result<ViscositySweep> {
    if eps_list.is_empty() {
        return Err(Error::InvalidArgument("empty epsilon list".into()));
    }
    if eps_list.iter().any(|&e| !(e > 0.0 && e.is_finite())) {
        return Err(Error::InvalidArgument("epsilon values must be positive".into()));
    }
    if eps_list.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::InvalidArgument("epsilon list must be strictly decreasing".into()));
    }
    config.validate()?;
    let trajectories: Vec<Trajectory> = eps_list
        .par_iter()
        .map(|&eps| {
            let cfg = SimConfig {
                epsilon: eps,
                ..config.clone()
            };
            run(&cfg)
        })
        .collect::<Result<_>>()?;
    let complete = trajectories.iter().all(Trajectory::is_complete);
    let cauchy = if complete {
        trajectories
            .windows(2)
            .map(|w| {
                w[0].snapshots
                    .iter()
                    .zip(&w[1].snapshots)
                    .map(|(a, b)| a.max_abs_diff(b))
                    .fold(0.0, f64::max)
            })
            .collect()
    } else {
        Vec::new()
    };
    Ok(ViscositySweep {
        epsilons: eps_list.to_vec(),
        trajectories,
        cauchy,
        complete,
    })
}

/// Least-squares slope of `-ln(amplitude)` against time; `None` when any
/// amplitude is not positive or fewer than two samples are given.
pub fn fit_decay_rate(times: &[f64], amplitudes: &[f64]) -> Option<f64> {
    if times.len() != amplitudes.len() || times.len() < 2 {
        return None;
    }
    if amplitudes.iter().any(|&a| !(a > f64::MIN_POSITIVE)) {
        return None;
    }
    let logs: Vec<f64> = amplitudes.iter().map(|a| a.ln()).collect();
    let n = times.len() as f64;
    let tm = times.iter().sum::<f64>() / n;
    let lm = logs.iter().sum::<f64>() / n;
    let num: f64 = times.iter().zip(&logs).map(|(t, l)| (t - tm) * (l - lm)).sum();
    let den: f64 = times.iter().map(|t| (t - tm) * (t - tm)).sum();
    if den == 0.0 {
        return None;
    }
    Some(-num / den)
}

/// Fitted decay rate of Fourier mode `k` along a trajectory.
pub fn mode_decay_rate(traj: &Trajectory, k: usize) -> Option<f64> {
    let amps: Vec<f64> = traj.snapshots.iter().map(|s| mode_amplitude(s, k)).collect();
    fit_decay_rate(&traj.times, &amps)
}
