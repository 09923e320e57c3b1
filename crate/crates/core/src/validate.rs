//! Self-check suite run by `muskat validate`.
//!
//! Every check is small enough that the whole suite runs in seconds. Faults can
//! be injected to confirm that the checks are able to fail.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::bie::{assemble_curve, sigma_min_monitor, OperatorTag};
use crate::diagnostics::{
    comparison_report, default_tolerance, inf_convolution, maximum_principle_report,
    sup_convolution, SIGMA_FLOOR_CAL, THETA_BOUND_CAL,
};
use crate::dno::{apply_dno_curve, dno_flat};
use crate::error::Result;
use crate::kernels::Curve;
use crate::oracles::{disk_dno, poisson_radial_derivative};
use crate::profiles::InitialData;
use crate::spectral::{GridFunction, PeriodicGrid};
use crate::stepper::{mode_decay_rate, run_with_faults, DtRule, Mollifier, SimConfig};
use crate::FaultInjection;

#[derive(Debug, Clone, Copy, Default)]
pub struct SuiteOptions {
    pub faults: FaultInjection,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CheckOutcome {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SuiteReport {
    pub checks: Vec<CheckOutcome>,
}

impl SuiteReport {
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn failures(&self) -> impl Iterator<Item = &CheckOutcome> {
        self.checks.iter().filter(|c| !c.passed)
    }

    pub fn get(&self, name: &str) -> Option<&CheckOutcome> {
        self.checks.iter().find(|c| c.name == name)
    }

    /// Tab-separated `name  status  detail` lines with a header.
    pub fn to_table(&self) -> String {
        let mut out = String::from("check\tstatus\tdetail\n");
        for c in &self.checks {
            let status = if c.passed { "pass" } else { "FAIL" };
            out.push_str(&format!("{}\t{}\t{}\n", c.name, status, c.detail));
        }
        out
    }
}

fn grid(n: usize) -> Result<PeriodicGrid> {
    PeriodicGrid::new(n)
}

fn gf(n: usize, f: impl Fn(f64) -> f64) -> Result<GridFunction> {
    GridFunction::from_fn(grid(n)?, f)
}

type Check = fn(&SuiteOptions) -> Result<(bool, String)>;

const CHECKS: &[(&str, Check)] = &[
    ("flat_dn_identity", flat_dn_identity),
    ("flat_density", flat_density),
    ("kstar_jump_relation", kstar_jump_relation),
    ("adjoint_transpose", adjoint_transpose),
    ("disk_modes", disk_modes),
    ("poisson_limit", poisson_limit),
    ("linear_decay", linear_decay),
    ("maximum_principles", maximum_principles),
    ("comparison", comparison),
    ("sigma_floor", sigma_floor),
    ("convolutions", convolutions),
];

pub fn run_suite(options: &SuiteOptions) -> SuiteReport {
    let checks = CHECKS
        .iter()
        .map(|(name, check)| match check(options) {
            Ok((passed, detail)) => CheckOutcome {
                name,
                passed,
                detail,
            },
            Err(e) => CheckOutcome {
                name,
                passed: false,
                detail: format!("error: {e}"),
            },
        })
        .collect();
    SuiteReport { checks }
}

fn flat_dn_identity(o: &SuiteOptions) -> Result<(bool, String)> {
    let zero = gf(256, |_| 0.0)?;
    let curve = Curve::new(&zero)?;
    let mut worst: f64 = 0.0;
    for k in 1..=5 {
        let g = gf(256, |x| (k as f64 * x).cos())?;
        let out = apply_dno_curve(&curve, &g, 1e-12, o.faults)?;
        worst = worst.max(out.gf.max_abs_diff(&dno_flat(&g)?));
    }
    Ok((worst <= 1e-8, format!("max error {worst:.3e}")))
}

fn flat_density(o: &SuiteOptions) -> Result<(bool, String)> {
    let zero = gf(128, |_| 0.0)?;
    let g = gf(128, |x| x.sin() + 0.5 * (3.0 * x).cos())?;
    let dg = crate::spectral::dft_derivative(&g)?;
    let sol = crate::bie::solve_theta_curve(&Curve::new(&zero)?, &dg, 1e-12, o.faults)?;
    let err = sol.theta.max_abs_diff(&dg.map(|v| 2.0 * v)?);
    Ok((err <= 1e-10, format!("max error {err:.3e}")))
}

fn kstar_jump_relation(o: &SuiteOptions) -> Result<(bool, String)> {
    let f = gf(128, |x| 0.5 * x.cos() + 0.2 * (2.0 * x).sin())?;
    let m = assemble_curve(&Curve::new(&f)?, OperatorTag::KStar, o.faults)?;
    let d = m.jump_defect();
    Ok((d <= 1e-10, format!("column sum defect {d:.3e}")))
}

fn adjoint_transpose(o: &SuiteOptions) -> Result<(bool, String)> {
    let f = gf(128, |x| 0.8 * x.sin() + 0.1 * (3.0 * x).cos())?;
    let curve = Curve::new(&f)?;
    let ks = assemble_curve(&curve, OperatorTag::KStar, o.faults)?;
    let k = assemble_curve(&curve, OperatorTag::K, o.faults)?;
    let d = (ks.entries - k.entries.transpose()).amax();
    Ok((d <= 1e-13, format!("max entry difference {d:.3e}")))
}

fn disk_modes(_: &SuiteOptions) -> Result<(bool, String)> {
    let mut worst: f64 = 0.0;
    for m in 1..=4 {
        let mf = m as f64;
        let g = gf(512, |x| (mf * x).cos())?;
        for &x in &[0.0, 0.7, -2.1] {
            worst = worst.max((disk_dno(&g, x)? - mf * (mf * x).cos()).abs());
        }
    }
    Ok((worst <= 1e-6, format!("max error {worst:.3e}")))
}

fn poisson_limit(_: &SuiteOptions) -> Result<(bool, String)> {
    let g = gf(256, |x| (0.8 * x.cos()).exp() * (2.0 * x).sin())?;
    let target = disk_dno(&g, 0.4)?;
    let errs: Vec<f64> = (4..=10)
        .map(|j| Ok((poisson_radial_derivative(&g, 1.0 - 2f64.powi(-j), 0.4)? - target).abs()))
        .collect::<Result<_>>()?;
    let order = errs
        .windows(2)
        .map(|w| (w[0] / w[1]).log2())
        .fold(f64::INFINITY, f64::min);
    Ok((order >= 0.9, format!("min observed order {order:.3}")))
}

fn linear_decay(o: &SuiteOptions) -> Result<(bool, String)> {
    let c = SimConfig {
        n_points: 32,
        kappa: 1.0,
        epsilon: 0.0,
        dt_rule: DtRule::Fixed(1e-3),
        t_final: 0.5,
        initial: InitialData::Cosine {
            amplitude: 1e-3,
            mode: 2,
        },
        output_every: 25,
        ..SimConfig::default()
    };
    let t = run_with_faults(&c, o.faults)?;
    let rate = mode_decay_rate(&t, 2).unwrap_or(f64::NAN);
    let rel = (rate / 2.0 - 1.0).abs();
    Ok((rel <= 0.01, format!("fitted rate {rate:.6}")))
}

fn suite_config(initial: InitialData, mollifier: Mollifier) -> SimConfig {
    SimConfig {
        n_points: 64,
        kappa: 1.0,
        epsilon: 0.01,
        t_final: 0.5,
        initial,
        mollifier,
        ..SimConfig::default()
    }
}

fn maximum_principles(o: &SuiteOptions) -> Result<(bool, String)> {
    let c = suite_config(InitialData::Kink { amplitude: 1.0 }, Mollifier::Width(0.05));
    let t = run_with_faults(&c, o.faults)?;
    let tol = default_tolerance(2.0 * PI / 64.0);
    let rep = maximum_principle_report(&t, tol);
    let l2 = t.diagnostics[0].l2_norm;
    let worst_pair = t
        .diagnostics
        .iter()
        .map(|d| d.dn_pairing)
        .fold(f64::INFINITY, f64::min);
    let lip0 = t.diagnostics[0].lip_seminorm;
    let theta_ratio = t
        .diagnostics
        .iter()
        .map(|d| d.theta_l2 / (1.0 + lip0).powf(3.5))
        .fold(0.0, f64::max);
    let ok = t.is_complete()
        && rep.passed()
        && worst_pair >= -1e-8 * l2 * l2
        && theta_ratio <= THETA_BOUND_CAL;
    Ok((
        ok,
        format!(
            "sup {:.2e} lip {:.2e} l2 {:.2e} min pairing {worst_pair:.3e} theta ratio {theta_ratio:.3}",
            rep.sup_defect, rep.lip_defect, rep.l2_defect
        ),
    ))
}

fn comparison(o: &SuiteOptions) -> Result<(bool, String)> {
    let lower = suite_config(InitialData::Sine { amplitude: 0.3, mode: 1 }, Mollifier::None);
    let g = grid(64)?;
    let upper_data = gf(64, |x| 0.3 * x.sin() + 0.1 + 0.05 * x.cos())?;
    let upper = SimConfig {
        initial: InitialData::Samples(upper_data.values().to_vec()),
        ..lower.clone()
    };
    let a = run_with_faults(&lower, o.faults)?;
    let b = run_with_faults(&upper, o.faults)?;
    let rep = comparison_report(&a, &b, default_tolerance(g.spacing()))?;
    let ordering = rep.ordering_defects.iter().copied().fold(0.0, f64::max);
    Ok((
        rep.passed() && rep.ordered_initially,
        format!(
            "ordering {ordering:.2e} contraction {:.2e}",
            rep.contraction_monotonicity
        ),
    ))
}

fn sigma_floor(_: &SuiteOptions) -> Result<(bool, String)> {
    let mut worst = f64::INFINITY;
    for a in [0.5, 1.0, 2.0, 4.0] {
        let f = gf(64, |x| a * x.cos())?;
        let s = sigma_min_monitor(&f)? * (1.0 + f.lip_seminorm()).powf(2.5);
        worst = worst.min(s);
    }
    Ok((worst >= SIGMA_FLOOR_CAL, format!("min scaled sigma {worst:.4}")))
}

fn convolutions(o: &SuiteOptions) -> Result<(bool, String)> {
    let mut rng = ChaCha8Rng::seed_from_u64(o.seed);
    let g = grid(64)?;
    let dx = g.spacing();
    let mut worst_semiconvex: f64 = 0.0;
    let mut ok = true;
    for _ in 0..20 {
        let vals: Vec<f64> = (0..64).map(|_| rng.random_range(-1.0..1.0)).collect();
        let delta = rng.random_range(0.01..2.0);
        let f = GridFunction::new(g, vals)?;
        let up = sup_convolution(&f, delta)?;
        let down = inf_convolution(&f, delta)?;
        let dual = sup_convolution(&f.map(|v| -v)?, delta)?;
        for j in 0..64 {
            let (u, d, v) = (up.values()[j], down.values()[j], f.values()[j]);
            ok &= u >= v && d <= v && d == -dual.values()[j];
            let second = up.values()[(j + 1) % 64] + up.values()[(j + 63) % 64] - 2.0 * u;
            worst_semiconvex = worst_semiconvex.max(-dx * dx / delta - second);
        }
    }
    ok &= worst_semiconvex <= 1e-12;
    Ok((ok, format!("semiconvexity excess {worst_semiconvex:.2e}")))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn clean_suite_passes() {
        let r = run_suite(&SuiteOptions::default());
        assert!(r.all_passed(), "{}", r.to_table());
        assert_eq!(r.checks.len(), CHECKS.len());
    }

    #[test]
    fn hilbert_sign_canary() {
        let r = run_suite(&SuiteOptions {
            faults: FaultInjection {
                flip_hilbert_sign: true,
                ..FaultInjection::default()
            },
            seed: 0,
        });
        assert!(!r.get("flat_dn_identity").unwrap().passed);
        assert!(!r.all_passed());
    }

    #[test]
    fn diagonal_canary() {
        let r = run_suite(&SuiteOptions {
            faults: FaultInjection {
                corrupt_kstar_diagonal: true,
                ..FaultInjection::default()
            },
            seed: 0,
        });
        assert!(!r.get("kstar_jump_relation").unwrap().passed);
    }
}
