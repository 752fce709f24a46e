//! Second-order leapfrog solver for the pure-string limit
//! `ρ_tt = v² (ρ_ss + U′(r) ρ / r)`, sharing no code with the dynamics
//! module beyond the algebra types.

use std::f64::consts::TAU;

use crate::algebra::{potential_force, RadialPotential, Vec3};
use crate::error::{Error, Result};
use crate::hamiltonian::HamiltonianParams;
use crate::state::{Grid1D, SolutionSeries, StrandState};

/// Snapshots of `ρ` and `∂_t ρ` every `stride` leapfrog steps.
#[derive(Debug, Clone, PartialEq)]
pub struct WaveSolution {
    pub grid: Grid1D,
    /// Leapfrog step actually used.
    pub dt: f64,
    pub dt_snapshot: f64,
    pub times: Vec<f64>,
    pub rho: Vec<Vec<Vec3>>,
    /// Central-difference velocity; exact initial velocity at `t = 0`.
    pub rho_t: Vec<Vec<Vec3>>,
}

impl WaveSolution {
    /// The same trajectory as strand data with `μ^t = 0`, `ω_s = 0` and
    /// `π^t = −∂_t ρ / v²`.
    pub fn to_series(&self, params: &HamiltonianParams) -> SolutionSeries {
        let v2 = params.wave_speed * params.wave_speed;
        let mut series = SolutionSeries::new(self.grid, params.clone(), self.dt_snapshot);
        for ((t, rho), rho_t) in self.times.iter().zip(&self.rho).zip(&self.rho_t) {
            let mut s = StrandState::zeros(self.grid.n(), *t);
            s.rho.clone_from(rho);
            s.pi_t = rho_t.iter().map(|u| -u / v2).collect();
            series.snapshots.push(s);
        }
        series
    }
}

fn acceleration(rho: &[Vec3], grid: &Grid1D, v2: f64, potential: &RadialPotential) -> Vec<Vec3> {
    let n = rho.len();
    let inv_h2 = 1.0 / (grid.spacing() * grid.spacing());
    (0..n)
        .map(|j| {
            let lap = (rho[(j + 1) % n] - rho[j] * 2.0 + rho[(j + n - 1) % n]) * inv_h2;
            (lap + potential_force(potential, &rho[j])) * v2
        })
        .collect()
}

/// Integrates from `(ρ₀, ∂_tρ₀)` to `t_end` with a step no larger than `dt`,
/// shrunk so an integer number of steps reaches `t_end`.
#[allow(clippy::too_many_arguments)]
pub fn wave_oracle(
    rho0: &[Vec3],
    rho_t0: &[Vec3],
    grid: &Grid1D,
    v: f64,
    potential: &RadialPotential,
    dt: f64,
    t_end: f64,
    stride: usize,
) -> Result<WaveSolution> {
    grid.check_len(rho0.len())?;
    grid.check_len(rho_t0.len())?;
    if !(v.is_finite() && v > 0.0) {
        return Err(Error::InvalidParams(format!("v must be > 0 (got {v})")));
    }
    if !(dt.is_finite() && dt > 0.0) || !(t_end.is_finite() && t_end >= 0.0) || stride == 0 {
        return Err(Error::InvalidParams("wave oracle needs Δt > 0, T ≥ 0, stride ≥ 1".into()));
    }
    let ratio = v * dt / grid.spacing();
    if ratio > 1.0 {
        return Err(Error::CflViolation { ratio });
    }
    let steps = if t_end == 0.0 {
        0
    } else {
        ((t_end / dt) * (1.0 - 1e-12)).ceil().max(1.0) as usize
    };
    let dt = if steps == 0 { dt } else { t_end / steps as f64 };
    let v2 = v * v;

    let mut out = WaveSolution {
        grid: *grid,
        dt,
        dt_snapshot: dt * stride as f64,
        times: vec![0.0],
        rho: vec![rho0.to_vec()],
        rho_t: vec![rho_t0.to_vec()],
    };
    if steps == 0 {
        return Ok(out);
    }

    let a0 = acceleration(rho0, grid, v2, potential);
    let mut older = rho0.to_vec();
    let mut mid: Vec<Vec3> = (0..rho0.len())
        .map(|j| rho0[j] + rho_t0[j] * dt + a0[j] * (0.5 * dt * dt))
        .collect();
    // one step past `steps` so the last snapshot has a centred velocity
    for n in 1..=steps {
        let a = acceleration(&mid, grid, v2, potential);
        let newer: Vec<Vec3> = (0..mid.len())
            .map(|j| mid[j] * 2.0 - older[j] + a[j] * (dt * dt))
            .collect();
        if newer.iter().any(|x| !x.iter().all(|c| c.is_finite())) {
            return Err(Error::InvalidParams(format!(
                "wave oracle produced a non-finite value at t = {}",
                (n + 1) as f64 * dt
            )));
        }
        if n % stride == 0 {
            out.times.push(n as f64 * dt);
            out.rho.push(mid.clone());
            out.rho_t
                .push(newer.iter().zip(&older).map(|(a, b)| (a - b) / (2.0 * dt)).collect());
        }
        older = std::mem::replace(&mut mid, newer);
    }
    Ok(out)
}

/// `ρ = A sin(k s) cos(k v t) e1`, `∂_tρ = −A k v sin(k s) sin(k v t) e1`
/// with `k = 2π m / L`: an exact solution for `U = 0`.
pub fn standing_wave(grid: &Grid1D, wavenumber: u32, amplitude: f64, v: f64, t: f64) -> (Vec<Vec3>, Vec<Vec3>) {
    let k = TAU * wavenumber as f64 / grid.length();
    grid.points()
        .map(|s| {
            let shape = amplitude * (k * s).sin();
            (
                Vec3::x() * (shape * (k * v * t).cos()),
                Vec3::x() * (-shape * k * v * (k * v * t).sin()),
            )
        })
        .unzip()
}
