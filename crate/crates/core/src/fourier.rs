//! Finite Fourier series on a periodic interval, used for initial data and
//! for the base-point dependence of affine Poisson forms.

use std::f64::consts::TAU;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::algebra::Vec3;
use crate::error::{Error, Result};

/// `amplitude · sin(2π · wavenumber · s / L + phase)` on one component.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FourierMode {
    pub component: usize,
    pub wavenumber: u32,
    pub amplitude: f64,
    #[serde(default)]
    pub phase: f64,
}

/// Constant offset plus a sum of [`FourierMode`]s.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FourierField {
    #[serde(default = "zero_offset")]
    pub offset: Vec3,
    #[serde(default)]
    pub modes: Vec<FourierMode>,
}

fn zero_offset() -> Vec3 {
    Vec3::zeros()
}

impl FourierField {
    pub fn constant(offset: Vec3) -> Self {
        Self {
            offset,
            modes: Vec::new(),
        }
    }

    pub fn with_mode(mut self, component: usize, wavenumber: u32, amplitude: f64, phase: f64) -> Self {
        self.modes.push(FourierMode {
            component,
            wavenumber,
            amplitude,
            phase,
        });
        self
    }

    pub fn validate(&self, name: &str) -> Result<()> {
        if self.offset.iter().any(|x| !x.is_finite()) {
            return Err(Error::Config(format!("{name}.offset must be finite")));
        }
        for (i, m) in self.modes.iter().enumerate() {
            if m.component > 2 {
                return Err(Error::Config(format!(
                    "{name}.modes[{i}].component must be 0, 1 or 2 (got {})",
                    m.component
                )));
            }
            if !m.amplitude.is_finite() || !m.phase.is_finite() {
                return Err(Error::Config(format!("{name}.modes[{i}] has a non-finite value")));
            }
        }
        Ok(())
    }

    pub fn is_constant(&self) -> bool {
        self.modes.iter().all(|m| m.wavenumber == 0 || m.amplitude == 0.0)
    }

    pub fn value(&self, s: f64, length: f64) -> Vec3 {
        let mut v = self.offset;
        for m in &self.modes {
            v[m.component] += m.amplitude * (TAU * m.wavenumber as f64 * s / length + m.phase).sin();
        }
        v
    }

    pub fn derivative(&self, s: f64, length: f64) -> Vec3 {
        let mut v = Vec3::zeros();
        for m in &self.modes {
            let k = TAU * m.wavenumber as f64 / length;
            v[m.component] += m.amplitude * k * (k * s + m.phase).cos();
        }
        v
    }

    /// Random offset in `[-1, 1]³` plus `modes` random modes with
    /// wavenumber ≤ `max_wavenumber` and amplitude ≤ ½.
    pub fn random<R: Rng>(rng: &mut R, modes: usize, max_wavenumber: u32) -> Self {
        let offset = Vec3::new(
            rng.random_range(-1.0..1.0),
            rng.random_range(-1.0..1.0),
            rng.random_range(-1.0..1.0),
        );
        let modes = (0..modes)
            .map(|_| FourierMode {
                component: rng.random_range(0..3),
                wavenumber: rng.random_range(1..=max_wavenumber),
                amplitude: rng.random_range(-0.5..0.5),
                phase: rng.random_range(0.0..TAU),
            })
            .collect();
        Self { offset, modes }
    }
}
