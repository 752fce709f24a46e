//! TOML scenario files.
//!
//! ```toml
//! seed = 7
//!
//! [grid]
//! n = 256
//! length = 6.283185307179586
//!
//! [time]
//! cfl_safety = 0.5          # or dt = ...
//! t_end = 6.283185307179586
//! snapshot_stride = 8
//! diagnostics_stride = 1
//! integrator = "rk4"        # or "wave-oracle" for pure-string data
//!
//! [params]
//! v = 1.0
//! inertia_i = [1.0, 1.0, 1.0]   # diagonal, or a full 3×3 array
//! inertia_j = [1.0, 1.0, 1.0]
//! potential = { kind = "quadratic", k = 0.25 }
//!
//! [initial.rho]
//! offset = [0.6, 0.0, 0.0]
//! modes = [{ component = 0, wavenumber = 1, amplitude = 0.1, phase = 0.0 }]
//! ```

use std::fs;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::algebra::{InertiaOperator, Mat3, RadialPotential, Vec3};
use crate::brackets::ConnectionCoefficients;
use crate::dynamics::{self, reconstruction_defect, IntegratorConfig, TimeStep};
use crate::error::{Error, Result};
use crate::fourier::FourierField;
use crate::hamiltonian::{energy, legendre_residuals, HamiltonianParams};
use crate::state::{DiagnosticsRow, Grid1D, SolutionSeries, StrandState};
use crate::verify::wave_oracle;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub grid: GridSection,
    pub time: TimeSection,
    #[serde(default)]
    pub params: ParamsSection,
    #[serde(default)]
    pub connection: ConnectionCoefficients,
    #[serde(default)]
    pub initial: InitialSection,
    #[serde(default)]
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSection {
    pub n: usize,
    pub length: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Integrator {
    #[default]
    Rk4,
    WaveOracle,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimeSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dt: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cfl_safety: Option<f64>,
    pub t_end: f64,
    #[serde(default = "one")]
    pub snapshot_stride: usize,
    #[serde(default = "one")]
    pub diagnostics_stride: usize,
    #[serde(default)]
    pub integrator: Integrator,
}

fn one() -> usize {
    1
}

/// Diagonal triple or full symmetric matrix.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum InertiaSpec {
    Diagonal([f64; 3]),
    Full([[f64; 3]; 3]),
}

impl InertiaSpec {
    fn build(&self, key: &str) -> Result<InertiaOperator> {
        let op = match self {
            InertiaSpec::Diagonal(d) => InertiaOperator::diagonal(*d),
            InertiaSpec::Full(m) => InertiaOperator::new(Mat3::from_fn(|r, c| m[r][c])),
        };
        op.map_err(|e| Error::Config(format!("params.{key}: {e}")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParamsSection {
    #[serde(default = "unit_speed")]
    pub v: f64,
    #[serde(default = "unit_inertia")]
    pub inertia_i: InertiaSpec,
    #[serde(default = "unit_inertia")]
    pub inertia_j: InertiaSpec,
    #[serde(default = "RadialPotential::zero")]
    pub potential: RadialPotential,
}

fn unit_speed() -> f64 {
    1.0
}

fn unit_inertia() -> InertiaSpec {
    InertiaSpec::Diagonal([1.0; 3])
}

impl Default for ParamsSection {
    fn default() -> Self {
        Self {
            v: 1.0,
            inertia_i: unit_inertia(),
            inertia_j: unit_inertia(),
            potential: RadialPotential::zero(),
        }
    }
}

/// Seeded uniform noise in `[-amplitude, amplitude]` added pointwise to the
/// listed fields.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseSection {
    pub amplitude: f64,
    pub fields: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialSection {
    #[serde(default)]
    pub rho: FourierField,
    #[serde(default)]
    pub pi_t: FourierField,
    #[serde(default)]
    pub mu_t: FourierField,
    #[serde(default)]
    pub omega_s: FourierField,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub noise: Option<NoiseSection>,
}

const FIELD_NAMES: [&str; 4] = ["rho", "pi_t", "mu_t", "omega_s"];

/// A validated, ready-to-run scenario.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub grid: Grid1D,
    pub params: HamiltonianParams,
    pub initial: StrandState,
    pub integrator: IntegratorConfig,
    pub method: Integrator,
}

impl ScenarioConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string().trim_end().to_string()))
    }

    /// Parsed config plus the file's text, kept for the manifest.
    pub fn load(path: &Path) -> Result<(Self, String)> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let cfg = Self::from_toml_str(&text).map_err(|e| match e {
            Error::Config(m) => Error::Config(format!("{}: {m}", path.display())),
            other => other,
        })?;
        Ok((cfg, text))
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// Same scenario on `n` points; strides are scaled so snapshots keep
    /// their times.
    pub fn with_resolution(&self, n: usize) -> Self {
        let mut c = self.clone();
        c.grid.n = n;
        if let Some(dt) = c.time.dt {
            c.time.dt = Some(dt * self.grid.n as f64 / n as f64);
        }
        let scale = (n / self.grid.n.max(1)).max(1);
        c.time.snapshot_stride *= scale;
        c.time.diagnostics_stride *= scale;
        c
    }

    pub fn grid(&self) -> Result<Grid1D> {
        Grid1D::new(self.grid.n, self.grid.length)
    }

    pub fn params(&self) -> Result<HamiltonianParams> {
        let p = HamiltonianParams {
            inertia_i: self.params.inertia_i.build("inertia_i")?,
            inertia_j: self.params.inertia_j.build("inertia_j")?,
            wave_speed: self.params.v,
            potential: self.params.potential.clone(),
            connection: self.connection.clone(),
        };
        p.potential
            .validate()
            .map_err(|e| Error::Config(format!("params.potential: {e}")))?;
        p.validate().map_err(|e| Error::Config(e.to_string()))?;
        Ok(p)
    }

    pub fn integrator(&self) -> Result<IntegratorConfig> {
        let step = match (self.time.dt, self.time.cfl_safety) {
            (Some(dt), None) => TimeStep::Fixed(dt),
            (None, Some(s)) => TimeStep::Cfl(s),
            _ => {
                return Err(Error::Config(
                    "time: exactly one of time.dt and time.cfl_safety must be set".into(),
                ))
            }
        };
        let cfg = IntegratorConfig {
            step,
            t_end: self.time.t_end,
            snapshot_stride: self.time.snapshot_stride,
            diagnostics_stride: self.time.diagnostics_stride,
        };
        cfg.validate().map_err(|e| Error::Config(e.to_string()))?;
        Ok(cfg)
    }

    pub fn initial_state(&self, grid: &Grid1D) -> Result<StrandState> {
        let fields = [
            &self.initial.rho,
            &self.initial.pi_t,
            &self.initial.mu_t,
            &self.initial.omega_s,
        ];
        for (f, name) in fields.iter().zip(FIELD_NAMES) {
            f.validate(&format!("initial.{name}"))?;
        }
        let mut state = StrandState::zeros(grid.n(), 0.0);
        for (target, field) in state.fields_mut().into_iter().zip(fields) {
            for (j, s) in grid.points().enumerate() {
                target[j] = field.value(s, grid.length());
            }
        }
        if let Some(noise) = &self.initial.noise {
            if !(noise.amplitude.is_finite() && noise.amplitude >= 0.0) {
                return Err(Error::Config("initial.noise.amplitude must be ≥ 0".into()));
            }
            let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
            let targets = state.fields_mut();
            for name in &noise.fields {
                let k = FIELD_NAMES
                    .iter()
                    .position(|f| f == name)
                    .ok_or_else(|| Error::Config(format!("initial.noise.fields: unknown field '{name}'")))?;
                let a = noise.amplitude;
                for v in targets[k].iter_mut() {
                    *v += Vec3::new(
                        rng.random_range(-a..=a),
                        rng.random_range(-a..=a),
                        rng.random_range(-a..=a),
                    );
                }
            }
        }
        Ok(state)
    }

    pub fn build(&self) -> Result<Scenario> {
        let grid = self.grid().map_err(|e| match e {
            Error::InvalidGrid(m) => Error::Config(m),
            other => other,
        })?;
        let params = self.params()?;
        let initial = self.initial_state(&grid)?;
        let integrator = self.integrator()?;
        Ok(Scenario {
            grid,
            params,
            initial,
            integrator,
            method: self.time.integrator,
        })
    }
}

impl Scenario {
    /// Runs the configured integrator. A blow-up comes back as
    /// [`Error::BlowUp`] carrying the partial series.
    pub fn run(&self) -> Result<SolutionSeries> {
        match self.method {
            Integrator::Rk4 => dynamics::run(&self.initial, &self.grid, &self.params, &self.integrator),
            Integrator::WaveOracle => self.run_wave_oracle(),
        }
    }

    fn run_wave_oracle(&self) -> Result<SolutionSeries> {
        let zero = |f: &[Vec3]| f.iter().all(|v| *v == Vec3::zeros());
        if !zero(&self.initial.mu_t) || !zero(&self.initial.omega_s) {
            return Err(Error::Config(
                "time.integrator = \"wave-oracle\" needs pure-string data (initial.mu_t = initial.omega_s = 0)".into(),
            ));
        }
        let v = self.params.wave_speed;
        let (_, dt) = self.integrator.resolve(&self.grid, &self.params);
        let rho_t0: Vec<Vec3> = self.initial.pi_t.iter().map(|p| -p * (v * v)).collect();
        let sol = wave_oracle(
            &self.initial.rho,
            &rho_t0,
            &self.grid,
            v,
            &self.params.potential,
            dt,
            self.integrator.t_end,
            self.integrator.snapshot_stride,
        )?;
        let mut series = sol.to_series(&self.params);
        series.diagnostics = snapshot_diagnostics(&series)?;
        Ok(series)
    }
}

/// Diagnostics rows computed from stored snapshots.
pub fn snapshot_diagnostics(series: &SolutionSeries) -> Result<Vec<DiagnosticsRow>> {
    let grid = &series.grid;
    let params = &series.params;
    let defects = if series.snapshots.len() >= 2 {
        reconstruction_defect(series, params)?
    } else {
        vec![0.0; series.snapshots.len()]
    };
    let mut e0 = None;
    series
        .snapshots
        .iter()
        .zip(defects)
        .map(|(s, defect)| {
            let e = energy(s, grid, params)?;
            let e0 = *e0.get_or_insert(e);
            let (lp, lm) = legendre_residuals(s, grid, params)?;
            Ok(DiagnosticsRow {
                t: s.t,
                energy: e,
                energy_drift: if e0 != 0.0 { (e - e0).abs() / e0.abs() } else { (e - e0).abs() },
                legendre_pi_s: lp,
                legendre_mu_s: lm,
                reconstruction_defect: defect,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    const SAMPLE: &str = r#"
seed = 3
[grid]
n = 16
length = 2.0
[time]
cfl_safety = 0.5
t_end = 0.1
[params]
v = 1.5
inertia_i = [1.0, 2.0, 3.0]
inertia_j = [[2.0, 0.1, 0.0], [0.1, 2.0, 0.0], [0.0, 0.0, 1.0]]
potential = { kind = "polynomial", coefficients = [0.0, 0.1] }
[initial.rho]
offset = [1.0, 0.0, 0.0]
modes = [{ component = 1, wavenumber = 2, amplitude = 0.5 }]
"#;

    #[test]
    fn parses_and_builds() {
        let c = ScenarioConfig::from_toml_str(SAMPLE).unwrap();
        let s = c.build().unwrap();
        assert_eq!(s.grid.n(), 16);
        assert_eq!(s.params.wave_speed, 1.5);
        assert_eq!(s.params.inertia_j.matrix()[(0, 1)], 0.1);
        assert_eq!(s.method, Integrator::Rk4);
        assert!((s.initial.rho[0] - Vec3::x()).amax() < 1e-15);
        let back = ScenarioConfig::from_toml_str(&c.to_toml_string()).unwrap();
        assert_eq!(back, c);
    }

    #[test]
    fn unknown_key_is_named() {
        let text = SAMPLE.replace("v = 1.5", "v = 1.5\nspeed = 2.0");
        let err = ScenarioConfig::from_toml_str(&text).unwrap_err().to_string();
        assert!(err.contains("speed"), "{err}");
    }

    #[test]
    fn small_grid_is_rejected() {
        let text = SAMPLE.replace("n = 16", "n = 4");
        let err = ScenarioConfig::from_toml_str(&text).unwrap().build().unwrap_err().to_string();
        assert!(err.contains("grid.n must be ≥ 8"), "{err}");
    }

    #[test]
    fn time_step_must_be_unique() {
        let text = SAMPLE.replace("cfl_safety = 0.5", "cfl_safety = 0.5\ndt = 0.01");
        let err = ScenarioConfig::from_toml_str(&text).unwrap().build().unwrap_err().to_string();
        assert!(err.contains("time.dt"), "{err}");
    }

    #[test]
    fn noise_is_seeded() {
        let text = SAMPLE.replace("seed = 3", "seed = 3\n[initial.noise]\namplitude = 0.01\nfields = [\"mu_t\"]");
        let c = ScenarioConfig::from_toml_str(&text).unwrap();
        let a = c.build().unwrap().initial;
        let b = c.build().unwrap().initial;
        assert_eq!(a, b);
        assert!(a.mu_t.iter().any(|v| *v != Vec3::zeros()));
        let mut other = c.clone();
        other.seed = 4;
        assert_ne!(other.build().unwrap().initial, a);
    }

    #[test]
    fn resolution_scaling_keeps_snapshot_times() {
        let mut c = ScenarioConfig::from_toml_str(SAMPLE).unwrap();
        c.time.snapshot_stride = 2;
        let fine = c.with_resolution(32);
        assert_eq!(fine.time.snapshot_stride, 4);
        let (a, b) = (c.build().unwrap(), fine.build().unwrap());
        let (_, dta) = a.integrator.resolve(&a.grid, &a.params);
        let (_, dtb) = b.integrator.resolve(&b.grid, &b.params);
        assert!((dta * 2.0 - dtb * 4.0).abs() < 1e-15);
    }

    #[test]
    fn wave_oracle_integrator_requires_pure_string() {
        let text = SAMPLE.replace("cfl_safety = 0.5", "cfl_safety = 0.5\nintegrator = \"wave-oracle\"");
        let mut c = ScenarioConfig::from_toml_str(&text).unwrap();
        c.params.potential = RadialPotential::zero();
        let series = c.build().unwrap().run().unwrap();
        assert!(series.snapshots.len() > 1);
        assert_eq!(series.diagnostics.len(), series.snapshots.len());
        c.initial.mu_t = FourierField::constant(Vec3::x());
        assert!(c.build().unwrap().run().is_err());
    }
}
