//! Refinement studies over scenario configs and stored series.

use std::f64::consts::TAU;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{estimate_order, ConvergenceReport, ORDER_TOLERANCE};
use crate::algebra::{RadialPotential, Vec3};
use crate::brackets::{theorem_residual, AffinePoissonForm};
use crate::config::ScenarioConfig;
use crate::error::{Error, Result};
use crate::fourier::FourierField;
use crate::state::{SolutionSeries, StrandState};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Oracle {
    /// Closed-form d'Alembert solution; pure-string data with `U = 0` only.
    Analytic,
    /// A reference run at twice the finest resolution.
    SelfReference,
}

fn is_force_free(u: &RadialPotential) -> bool {
    match u {
        RadialPotential::Quadratic { k, .. } => *k == 0.0,
        RadialPotential::Polynomial { coefficients } => coefficients.iter().skip(1).all(|c| *c == 0.0),
    }
}

fn single_component(fields: &[&FourierField]) -> bool {
    let mut used = [false; 3];
    for f in fields {
        for c in 0..3 {
            used[c] |= f.offset[c] != 0.0;
        }
        for m in &f.modes {
            used[m.component] |= m.amplitude != 0.0;
        }
    }
    used.iter().filter(|u| **u).count() <= 1
}

/// Exact state at time `t` for force-free pure-string data whose `ρ` and
/// `π^t` lie along one fixed axis.
pub fn analytic_pure_string(config: &ScenarioConfig, t: f64) -> Result<StrandState> {
    let init = &config.initial;
    if !is_force_free(&config.params.potential) {
        return Err(Error::Config("analytic oracle needs params.potential with zero force".into()));
    }
    if !(init.mu_t.offset == Vec3::zeros() && init.mu_t.is_constant())
        || !(init.omega_s.offset == Vec3::zeros() && init.omega_s.is_constant())
        || init.noise.is_some()
    {
        return Err(Error::Config(
            "analytic oracle needs pure-string data (initial.mu_t = initial.omega_s = 0, no noise)".into(),
        ));
    }
    if !single_component(&[&init.rho, &init.pi_t]) {
        return Err(Error::Config(
            "analytic oracle needs initial.rho and initial.pi_t along a single component".into(),
        ));
    }
    let grid = config.grid()?;
    let v = config.params.v;
    let v2 = v * v;
    let length = grid.length();
    let mut state = StrandState::zeros(grid.n(), t);
    for (j, s) in grid.points().enumerate() {
        // ρ_t(0) = −v² π^t(0)
        let mut rho = init.rho.offset - init.pi_t.offset * (v2 * t);
        let mut rho_t = -init.pi_t.offset * v2;
        for m in &init.rho.modes {
            let k = TAU * m.wavenumber as f64 / length;
            let shape = m.amplitude * (k * s + m.phase).sin();
            rho[m.component] += shape * (k * v * t).cos();
            rho_t[m.component] -= shape * k * v * (k * v * t).sin();
        }
        for m in &init.pi_t.modes {
            let k = TAU * m.wavenumber as f64 / length;
            let shape = -v2 * m.amplitude * (k * s + m.phase).sin();
            if m.wavenumber == 0 {
                rho[m.component] += shape * t;
                rho_t[m.component] += shape;
            } else {
                rho[m.component] += shape * (k * v * t).sin() / (k * v);
                rho_t[m.component] += shape * (k * v * t).cos();
            }
        }
        state.rho[j] = rho;
        state.pi_t[j] = -rho_t / v2;
    }
    Ok(state)
}

fn final_state(config: &ScenarioConfig) -> Result<StrandState> {
    let series = config.build()?.run()?;
    Ok(series.snapshots.last().expect("run keeps the initial snapshot").clone())
}

/// Max-norm difference between `coarse` and `fine` sampled at the coarse
/// grid points.
fn restricted_error(coarse: &StrandState, fine: &StrandState) -> f64 {
    let factor = fine.len() / coarse.len();
    coarse
        .fields()
        .iter()
        .zip(fine.fields())
        .flat_map(|(c, f)| c.iter().enumerate().map(move |(j, x)| (x - f[j * factor]).amax()))
        .fold(0.0, f64::max)
}

/// Runs `config` at `levels` resolutions `n, 2n, 4n, …` with CFL-scaled
/// steps and fits the order of the final-time error, targeting 2.
pub fn convergence_study(config: &ScenarioConfig, levels: usize, oracle: Oracle) -> Result<ConvergenceReport> {
    if levels < 3 {
        return Err(Error::InvalidParams(format!("levels must be ≥ 3 (got {levels})")));
    }
    let runs = match oracle {
        Oracle::Analytic => levels,
        Oracle::SelfReference => levels + 1,
    };
    let configs: Vec<ScenarioConfig> = (0..runs).map(|i| config.with_resolution(config.grid.n << i)).collect();
    let finals: Vec<StrandState> = configs.par_iter().map(final_state).collect::<Result<_>>()?;

    let errors: Vec<f64> = match oracle {
        Oracle::Analytic => configs
            .iter()
            .zip(&finals)
            .map(|(c, f)| Ok(f.max_abs_diff(&analytic_pure_string(c, f.t)?)))
            .collect::<Result<_>>()?,
        Oracle::SelfReference => {
            let reference = &finals[levels];
            finals[..levels].iter().map(|f| restricted_error(f, reference)).collect()
        }
    };
    let resolutions: Vec<usize> = configs[..levels].iter().map(|c| c.grid.n).collect();
    let spacings: Vec<f64> = resolutions.iter().map(|n| config.grid.length / *n as f64).collect();
    estimate_order(&resolutions, &spacings, &errors, 2.0, ORDER_TOLERANCE)
}

/// Max-norm theorem residual of each form on each series: `out[form][series]`.
pub fn residual_norms(forms: &[AffinePoissonForm], series: &[SolutionSeries]) -> Result<Vec<Vec<f64>>> {
    forms
        .par_iter()
        .map(|f| {
            series
                .iter()
                .map(|s| Ok(theorem_residual(f, s, &s.params)?.max_norm()))
                .collect::<Result<Vec<f64>>>()
        })
        .collect()
}

/// Order fit of the residual of each form across series of increasing
/// resolution.
pub fn residual_convergence(forms: &[AffinePoissonForm], series: &[SolutionSeries]) -> Result<Vec<ConvergenceReport>> {
    let norms = residual_norms(forms, series)?;
    let resolutions: Vec<usize> = series.iter().map(|s| s.grid.n()).collect();
    let spacings: Vec<f64> = series.iter().map(|s| s.grid.spacing()).collect();
    norms
        .iter()
        .map(|errors| estimate_order(&resolutions, &spacings, errors, 2.0, ORDER_TOLERANCE))
        .collect()
}
