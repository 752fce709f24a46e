//! Method-of-lines evolution of the reduced strand equations.
//!
//! With the slaved fields from [`derive`] and `g = ∇h` at each grid point:
//!
//! ```text
//! ∂_t ρ   = δh/δπ^t
//! ∂_t π^t = −∂_s π^s − δh/δρ
//! ∂_t μ^t = −∂_s μ^s + μ^s × ω_s + μ^t × ω_t
//! ∂_t ω_s =  ∂_s ω_t + ω_s × ω_t
//! ```
//!
//! The last line is the zero-curvature compatibility of `ω_s = vee(Rᵀ∂_s R)`
//! and `ω_t = vee(Rᵀ∂_t R)`; [`reconstruction_defect`] checks it against an
//! explicitly reconstructed rotation field.

use crate::algebra::{ad_star, exp_so3, vee, Mat3, Vec3};
use crate::error::{Error, Result};
use crate::hamiltonian::{energy, gradient, legendre_residuals, phase_point_at, HamiltonianParams, S, T};
use crate::state::{d_ds, derive, DiagnosticsRow, Grid1D, SolutionSeries, StrandState};

/// How the time step is chosen.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TimeStep {
    Fixed(f64),
    /// `Δt = σ Δs / max(1, v)`.
    Cfl(f64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntegratorConfig {
    pub step: TimeStep,
    pub t_end: f64,
    pub snapshot_stride: usize,
    pub diagnostics_stride: usize,
}

impl IntegratorConfig {
    pub fn cfl(sigma: f64, t_end: f64) -> Self {
        Self {
            step: TimeStep::Cfl(sigma),
            t_end,
            snapshot_stride: 1,
            diagnostics_stride: 1,
        }
    }

    pub fn with_strides(mut self, snapshot: usize, diagnostics: usize) -> Self {
        self.snapshot_stride = snapshot;
        self.diagnostics_stride = diagnostics;
        self
    }

    pub fn validate(&self) -> Result<()> {
        match self.step {
            TimeStep::Fixed(dt) if !(dt.is_finite() && dt > 0.0) => {
                return Err(Error::InvalidParams(format!("time.dt must be > 0 (got {dt})")))
            }
            TimeStep::Cfl(s) if !(s > 0.0 && s <= 1.0) => {
                return Err(Error::InvalidParams(format!("time.cfl_safety must lie in (0, 1] (got {s})")))
            }
            _ => {}
        }
        if !(self.t_end.is_finite() && self.t_end >= 0.0) {
            return Err(Error::InvalidParams(format!("time.t_end must be ≥ 0 (got {})", self.t_end)));
        }
        if self.snapshot_stride == 0 || self.diagnostics_stride == 0 {
            return Err(Error::InvalidParams("time strides must be ≥ 1".into()));
        }
        Ok(())
    }

    /// Step count and step size. The nominal step is shrunk so that the step
    /// count is a multiple of `snapshot_stride` and the last step lands
    /// exactly on `t_end`, which is therefore always a snapshot.
    pub fn resolve(&self, grid: &Grid1D, params: &HamiltonianParams) -> (usize, f64) {
        let nominal = match self.step {
            TimeStep::Fixed(dt) => dt,
            TimeStep::Cfl(sigma) => sigma * grid.spacing() / params.wave_speed.max(1.0),
        };
        if self.t_end == 0.0 {
            return (0, nominal);
        }
        let stride = self.snapshot_stride.max(1);
        let blocks = ((self.t_end / (nominal * stride as f64)) * (1.0 - 1e-12)).ceil().max(1.0) as usize;
        let steps = blocks * stride;
        (steps, self.t_end / steps as f64)
    }
}

/// Sign of the `ω_s × ω_t` term in the closure equation.
#[doc(hidden)]
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ClosureSign {
    #[default]
    ZeroCurvature,
    /// Deliberately wrong; exists so tests can show the reconstruction
    /// check rejects it.
    Flipped,
}

fn ensure_flat(params: &HamiltonianParams) -> Result<()> {
    match params.connection.non_flat_part() {
        Some(part) => Err(Error::NonFlatConnection(part)),
        None => Ok(()),
    }
}

/// Time derivative of the state. The returned value carries the input's
/// time stamp.
pub fn rhs(state: &StrandState, grid: &Grid1D, params: &HamiltonianParams) -> Result<StrandState> {
    rhs_with(state, grid, params, ClosureSign::ZeroCurvature)
}

#[doc(hidden)]
pub fn rhs_with(
    state: &StrandState,
    grid: &Grid1D,
    params: &HamiltonianParams,
    closure: ClosureSign,
) -> Result<StrandState> {
    ensure_flat(params)?;
    let derived = derive(state, grid, params)?;
    let d_pi_s = d_ds(&derived.pi_s, grid)?;
    let d_mu_s = d_ds(&derived.mu_s, grid)?;
    let d_omega_t = d_ds(&derived.omega_t, grid)?;
    let curvature_sign = match closure {
        ClosureSign::ZeroCurvature => 1.0,
        ClosureSign::Flipped => -1.0,
    };

    let n = grid.n();
    let mut out = StrandState::zeros(n, state.t);
    for j in 0..n {
        let p = phase_point_at(state, &derived, j);
        let g = gradient(&p, params);
        let omega_s = &state.omega_s[j];
        let omega_t = &derived.omega_t[j];
        out.rho[j] = g.pi[T];
        out.pi_t[j] = -d_pi_s[j] - g.rho;
        out.mu_t[j] = -d_mu_s[j] + ad_star(&g.mu[S], &p.mu[S]) + ad_star(&g.mu[T], &p.mu[T]);
        out.omega_s[j] = d_omega_t[j] + omega_s.cross(omega_t) * curvature_sign;
    }
    Ok(out)
}

/// Classical RK4. A non-finite stage yields [`Error::BlowUp`] with an
/// empty partial series; [`run`] replaces it with the series so far.
pub fn step_rk4(state: &StrandState, grid: &Grid1D, params: &HamiltonianParams, dt: f64) -> Result<StrandState> {
    step_rk4_with(state, grid, params, dt, ClosureSign::ZeroCurvature)
}

fn step_rk4_with(
    state: &StrandState,
    grid: &Grid1D,
    params: &HamiltonianParams,
    dt: f64,
    closure: ClosureSign,
) -> Result<StrandState> {
    if !(dt.is_finite() && dt > 0.0) {
        return Err(Error::InvalidParams(format!("Δt must be > 0 (got {dt})")));
    }
    let blow_up = |t: f64| Error::BlowUp {
        t,
        partial: Box::new(SolutionSeries::new(*grid, params.clone(), 0.0)),
    };
    let stage = |s: &StrandState| -> Result<StrandState> {
        let k = rhs_with(s, grid, params, closure)?;
        if k.is_finite() {
            Ok(k)
        } else {
            Err(blow_up(s.t))
        }
    };
    let k1 = stage(state)?;
    let k2 = stage(&state.axpy(0.5 * dt, &k1))?;
    let k3 = stage(&state.axpy(0.5 * dt, &k2))?;
    let k4 = stage(&state.axpy(dt, &k3))?;
    let mut next = state
        .axpy(dt / 6.0, &k1)
        .axpy(dt / 3.0, &k2)
        .axpy(dt / 3.0, &k3)
        .axpy(dt / 6.0, &k4);
    next.t = state.t + dt;
    if !next.is_finite() {
        return Err(blow_up(next.t));
    }
    Ok(next)
}

/// Pointwise rotation field driven by `∂_t R = R hat(ω_t)`, `R(0) = id`.
///
/// Each step uses the exponential trapezoid rule
/// `R ← R exp(Δt (ω_t(t) + ω_t(t+Δt)) / 2)`, second order in `Δt` and exact
/// for piecewise-constant directions.
#[derive(Debug, Clone)]
pub struct ReconstructionTracker {
    rotations: Vec<Mat3>,
}

impl ReconstructionTracker {
    pub fn new(n: usize) -> Self {
        Self {
            rotations: vec![Mat3::identity(); n],
        }
    }

    pub fn rotations(&self) -> &[Mat3] {
        &self.rotations
    }

    pub fn advance(&mut self, omega_t_start: &[Vec3], omega_t_end: &[Vec3], dt: f64) {
        for ((r, a), b) in self.rotations.iter_mut().zip(omega_t_start).zip(omega_t_end) {
            *r *= exp_so3(&((a + b) * (0.5 * dt)));
        }
    }

    /// `max_j ‖vee(R_jᵀ ∂_s R_j) − ω_s[j]‖`.
    pub fn defect(&self, omega_s: &[Vec3], grid: &Grid1D) -> f64 {
        let n = self.rotations.len();
        let inv = 0.5 / grid.spacing();
        (0..n)
            .map(|j| {
                let dr = (self.rotations[(j + 1) % n] - self.rotations[(j + n - 1) % n]) * inv;
                (vee(&(self.rotations[j].transpose() * dr)) - omega_s[j]).norm()
            })
            .fold(0.0, f64::max)
    }
}

/// Reconstruction defect per snapshot of a stored series.
pub fn reconstruction_defect(series: &SolutionSeries, params: &HamiltonianParams) -> Result<Vec<f64>> {
    series.require_snapshots(2)?;
    series.check_uniform()?;
    let grid = &series.grid;
    let mut tracker = ReconstructionTracker::new(grid.n());
    let mut out = Vec::with_capacity(series.snapshots.len());
    let mut prev_omega_t = derive(&series.snapshots[0], grid, params)?.omega_t;
    out.push(tracker.defect(&series.snapshots[0].omega_s, grid));
    for snap in &series.snapshots[1..] {
        let omega_t = derive(snap, grid, params)?.omega_t;
        tracker.advance(&prev_omega_t, &omega_t, series.dt_snapshot);
        out.push(tracker.defect(&snap.omega_s, grid));
        prev_omega_t = omega_t;
    }
    Ok(out)
}

fn diagnostics_row(
    state: &StrandState,
    grid: &Grid1D,
    params: &HamiltonianParams,
    e0: f64,
    defect: f64,
) -> Result<DiagnosticsRow> {
    let e = energy(state, grid, params)?;
    let (lp, lm) = legendre_residuals(state, grid, params)?;
    let drift = if e0 != 0.0 { (e - e0).abs() / e0.abs() } else { (e - e0).abs() };
    Ok(DiagnosticsRow {
        t: state.t,
        energy: e,
        energy_drift: drift,
        legendre_pi_s: lp,
        legendre_mu_s: lm,
        reconstruction_defect: defect,
    })
}

/// Integrates to `cfg.t_end`, keeping every `snapshot_stride`-th state and a
/// diagnostics row every `diagnostics_stride` steps.
pub fn run(
    initial: &StrandState,
    grid: &Grid1D,
    params: &HamiltonianParams,
    cfg: &IntegratorConfig,
) -> Result<SolutionSeries> {
    run_with_closure(initial, grid, params, cfg, ClosureSign::ZeroCurvature)
}

#[doc(hidden)]
pub fn run_with_closure(
    initial: &StrandState,
    grid: &Grid1D,
    params: &HamiltonianParams,
    cfg: &IntegratorConfig,
    closure: ClosureSign,
) -> Result<SolutionSeries> {
    cfg.validate()?;
    params.validate()?;
    ensure_flat(params)?;
    initial.check_grid(grid)?;
    let (steps, dt) = cfg.resolve(grid, params);

    let mut series = SolutionSeries::new(*grid, params.clone(), dt * cfg.snapshot_stride as f64);
    let mut tracker = ReconstructionTracker::new(grid.n());
    let e0 = energy(initial, grid, params)?;
    series.snapshots.push(initial.clone());
    series
        .diagnostics
        .push(diagnostics_row(initial, grid, params, e0, tracker.defect(&initial.omega_s, grid))?);

    let mut state = initial.clone();
    let mut omega_t = derive(&state, grid, params)?.omega_t;
    let t0 = initial.t;
    for step in 1..=steps {
        let next = match step_rk4_with(&state, grid, params, dt, closure) {
            Ok(mut s) => {
                // avoid accumulating rounding in the time stamp
                s.t = t0 + step as f64 * dt;
                s
            }
            Err(Error::BlowUp { t, .. }) => {
                return Err(Error::BlowUp {
                    t,
                    partial: Box::new(series),
                })
            }
            Err(e) => return Err(e),
        };
        let next_omega_t = derive(&next, grid, params)?.omega_t;
        tracker.advance(&omega_t, &next_omega_t, dt);
        state = next;
        omega_t = next_omega_t;

        if step % cfg.snapshot_stride == 0 {
            series.snapshots.push(state.clone());
        }
        if step % cfg.diagnostics_stride == 0 {
            let defect = tracker.defect(&state.omega_s, grid);
            series.diagnostics.push(diagnostics_row(&state, grid, params, e0, defect)?);
        }
    }
    Ok(series)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::{InertiaOperator, RadialPotential};
    use std::f64::consts::{PI, TAU};

    fn grid(n: usize) -> Grid1D {
        Grid1D::new(n, TAU).unwrap()
    }

    #[test]
    fn zero_state_is_equilibrium() {
        let g = grid(16);
        let p = HamiltonianParams::default();
        let z = StrandState::zeros(16, 0.0);
        assert_eq!(rhs(&z, &g, &p).unwrap(), z);
        let next = step_rk4(&z, &g, &p, 0.1).unwrap();
        assert_eq!(next.max_abs_diff(&z), 0.0);
        assert!((next.t - 0.1).abs() < 1e-15);
    }

    #[test]
    fn constant_state_hand_values() {
        let g = grid(16);
        let p = HamiltonianParams::default();
        let mut s = StrandState::zeros(16, 0.0);
        s.rho = vec![Vec3::x(); 16];
        s.mu_t = vec![Vec3::z(); 16];
        let d = rhs(&s, &g, &p).unwrap();
        assert!(d.rho.iter().all(|v| (v + Vec3::y()).amax() < 1e-15));
        assert!(d.mu_t.iter().all(|v| v.amax() < 1e-15));
    }

    #[test]
    fn pure_string_reduces_to_wave_equation() {
        let g = grid(32);
        let p = HamiltonianParams {
            wave_speed: 1.5,
            ..Default::default()
        };
        let mut s = StrandState::zeros(32, 0.0);
        s.rho = g.points().map(|x| Vec3::x() * (2.0 * x).sin()).collect();
        s.pi_t = g.points().map(|x| Vec3::x() * (0.3 * x.cos())).collect();
        let d = rhs(&s, &g, &p).unwrap();
        let dd = d_ds(&d_ds(&s.rho, &g).unwrap(), &g).unwrap();
        for j in 0..32 {
            assert!((d.rho[j] + s.pi_t[j] * 2.25).amax() < 1e-14);
            assert!((d.pi_t[j] + dd[j]).amax() < 1e-13);
            assert_eq!(d.mu_t[j], Vec3::zeros());
            assert_eq!(d.omega_s[j], Vec3::zeros());
        }
    }

    #[test]
    fn non_flat_connection_is_rejected() {
        let g = grid(8);
        let mut p = HamiltonianParams::default();
        p.connection.lambda_k[0] = Vec3::x();
        assert!(matches!(
            rhs(&StrandState::zeros(8, 0.0), &g, &p),
            Err(Error::NonFlatConnection("lambda_k"))
        ));
    }

    #[test]
    fn t_end_zero_gives_initial_only() {
        let g = grid(8);
        let s = run(&StrandState::zeros(8, 0.0), &g, &HamiltonianParams::default(), &IntegratorConfig::cfl(0.5, 0.0)).unwrap();
        assert_eq!(s.snapshots.len(), 1);
        assert_eq!(s.diagnostics.len(), 1);
    }

    #[test]
    fn resolve_lands_on_t_end() {
        let g = grid(64);
        let p = HamiltonianParams::default();
        let (steps, dt) = IntegratorConfig::cfl(0.5, TAU).resolve(&g, &p);
        assert_eq!(steps, 128);
        assert!((dt * steps as f64 - TAU).abs() < 1e-12);
        let (steps, dt) = IntegratorConfig::cfl(0.7, 1.0).resolve(&g, &p);
        assert!(dt <= 0.7 * g.spacing() && (dt * steps as f64 - 1.0).abs() < 1e-12);
        let (steps, dt) = IntegratorConfig::cfl(0.7, 1.0).with_strides(7, 1).resolve(&g, &p);
        assert_eq!(steps % 7, 0);
        assert!(dt <= 0.7 * g.spacing() && (dt * steps as f64 - 1.0).abs() < 1e-12);
        let fine = grid(128);
        let (fine_steps, _) = IntegratorConfig::cfl(0.7, 1.0).with_strides(14, 1).resolve(&fine, &p);
        assert_eq!(fine_steps, 2 * steps);
    }

    #[test]
    fn blow_up_keeps_partial_series() {
        // anti-restoring potential with an absurd step
        let g = grid(8);
        let p = HamiltonianParams {
            potential: RadialPotential::polynomial(vec![0.0, 0.0, 0.0, 1e6]).unwrap(),
            ..Default::default()
        };
        let mut s = StrandState::zeros(8, 0.0);
        s.rho = vec![Vec3::new(10.0, 0.0, 0.0); 8];
        let cfg = IntegratorConfig {
            step: TimeStep::Fixed(1.0),
            t_end: 50.0,
            snapshot_stride: 1,
            diagnostics_stride: 1,
        };
        match run(&s, &g, &p, &cfg) {
            Err(Error::BlowUp { t, partial }) => {
                assert!(t > 0.0);
                assert!(!partial.snapshots.is_empty());
                assert!(partial.snapshots.iter().all(|s| s.is_finite()));
            }
            other => panic!("expected blow-up, got {other:?}"),
        }
    }

    #[test]
    fn reconstruction_of_constant_rotation_rate() {
        let g = grid(16);
        let p = HamiltonianParams::default();
        let c = 0.8;
        let mut s = StrandState::zeros(16, 0.0);
        s.mu_t = vec![Vec3::z() * c; 16];
        let series = run(&s, &g, &p, &IntegratorConfig::cfl(0.5, 2.0)).unwrap();
        let defect = reconstruction_defect(&series, &p).unwrap();
        assert!(defect.iter().all(|d| *d < 1e-12), "{defect:?}");
        let last = series.snapshots.last().unwrap();
        let mut tracker = ReconstructionTracker::new(16);
        let w = vec![Vec3::z() * c; 16];
        tracker.advance(&w, &w, last.t);
        let exact = exp_so3(&(Vec3::z() * (c * last.t)));
        assert!((tracker.rotations()[3] - exact).amax() < 1e-14);
    }

    #[test]
    fn reconstruction_needs_two_snapshots() {
        let g = grid(8);
        let mut series = SolutionSeries::new(g, HamiltonianParams::default(), 0.1);
        series.snapshots.push(StrandState::zeros(8, 0.0));
        assert!(matches!(
            reconstruction_defect(&series, &HamiltonianParams::default()),
            Err(Error::TooFewSnapshots { need: 2, got: 1 })
        ));
    }

    #[test]
    fn rotated_initial_data_evolves_rotated() {
        let g = grid(32);
        let p = HamiltonianParams {
            inertia_i: InertiaOperator::isotropic(1.3).unwrap(),
            inertia_j: InertiaOperator::isotropic(0.9).unwrap(),
            potential: RadialPotential::quadratic(0.2, 0.0).unwrap(),
            ..Default::default()
        };
        let mut s = StrandState::zeros(32, 0.0);
        for (j, x) in g.points().enumerate() {
            s.rho[j] = Vec3::new(0.3 * x.sin(), 0.2 * (2.0 * x).cos(), 0.1);
            s.pi_t[j] = Vec3::new(0.0, 0.1 * x.cos(), -0.2 * x.sin());
            s.mu_t[j] = Vec3::new(0.2 * x.cos(), 0.0, 0.3 * x.sin());
            s.omega_s[j] = Vec3::new(0.0, 0.1 * x.sin(), 0.0);
        }
        let r = exp_so3(&Vec3::new(0.4, -1.1, 0.7));
        let cfg = IntegratorConfig::cfl(0.5, PI / 4.0);
        let a = run(&s, &g, &p, &cfg).unwrap();
        let b = run(&s.map(|v| r * v), &g, &p, &cfg).unwrap();
        let a_end = a.snapshots.last().unwrap().map(|v| r * v);
        assert!(a_end.max_abs_diff(b.snapshots.last().unwrap()) <= 1e-10);
    }
}
