//! Molecular-strand Hamiltonian density and its functional derivatives.
//!
//! ```text
//! h = ½⟨π^s,π^s⟩ − (v²/2)⟨π^t,π^t⟩ + U(‖ρ‖)
//!   + ½⟨μ^t − ρ×π^t, I⁻¹(μ^t − ρ×π^t)⟩
//!   − ½⟨μ^s − ρ×π^s, J⁻¹(μ^s − ρ×π^s)⟩
//! ```

use serde::{Deserialize, Serialize};

use crate::algebra::{potential_force, InertiaOperator, RadialPotential, Vec3};
use crate::brackets::ConnectionCoefficients;
use crate::error::{Error, Result};
use crate::state::{d_ds, derive, Grid1D, StrandState};

/// Index of the spatial base direction.
pub const S: usize = 0;
/// Index of the temporal base direction.
pub const T: usize = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ParamsRepr", into = "ParamsRepr")]
pub struct HamiltonianParams {
    pub inertia_i: InertiaOperator,
    pub inertia_j: InertiaOperator,
    pub wave_speed: f64,
    pub potential: RadialPotential,
    pub connection: ConnectionCoefficients,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ParamsRepr {
    inertia_i: InertiaOperator,
    inertia_j: InertiaOperator,
    wave_speed: f64,
    potential: RadialPotential,
    #[serde(default)]
    connection: ConnectionCoefficients,
}

impl TryFrom<ParamsRepr> for HamiltonianParams {
    type Error = Error;
    fn try_from(r: ParamsRepr) -> Result<Self> {
        let p = HamiltonianParams {
            inertia_i: r.inertia_i,
            inertia_j: r.inertia_j,
            wave_speed: r.wave_speed,
            potential: r.potential,
            connection: r.connection,
        };
        p.validate()?;
        Ok(p)
    }
}

impl From<HamiltonianParams> for ParamsRepr {
    fn from(p: HamiltonianParams) -> Self {
        ParamsRepr {
            inertia_i: p.inertia_i,
            inertia_j: p.inertia_j,
            wave_speed: p.wave_speed,
            potential: p.potential,
            connection: p.connection,
        }
    }
}

impl Default for HamiltonianParams {
    /// `I = J = id`, `v = 1`, `U = 0`, flat connection.
    fn default() -> Self {
        Self {
            inertia_i: InertiaOperator::identity(),
            inertia_j: InertiaOperator::identity(),
            wave_speed: 1.0,
            potential: RadialPotential::zero(),
            connection: ConnectionCoefficients::default(),
        }
    }
}

impl HamiltonianParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.wave_speed.is_finite() && self.wave_speed > 0.0) {
            return Err(Error::InvalidParams(format!(
                "params.v must be finite and > 0 (got {})",
                self.wave_speed
            )));
        }
        self.potential.validate()?;
        self.connection.validate()
    }

    /// Isotropic inertia and a radial potential: the density is then
    /// invariant under simultaneous rotation of all arguments.
    pub fn is_rotation_invariant(&self) -> bool {
        self.inertia_i.is_isotropic() && self.inertia_j.is_isotropic()
    }
}

/// Point of the reduced multimomentum space, indexed by base direction
/// (`S`, `T`).
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct PhasePoint {
    pub mu: [Vec3; 2],
    pub pi: [Vec3; 2],
    pub rho: Vec3,
}

impl PhasePoint {
    pub fn new(mu_s: Vec3, mu_t: Vec3, rho: Vec3, pi_s: Vec3, pi_t: Vec3) -> Self {
        Self {
            mu: [mu_s, mu_t],
            pi: [pi_s, pi_t],
            rho,
        }
    }

    /// Flattened as `(μ^s, μ^t, ρ, π^s, π^t)`.
    pub fn to_array(&self) -> [f64; 15] {
        let mut out = [0.0; 15];
        for (k, v) in [self.mu[S], self.mu[T], self.rho, self.pi[S], self.pi[T]].iter().enumerate() {
            out[3 * k..3 * k + 3].copy_from_slice(v.as_slice());
        }
        out
    }

    pub fn from_array(a: &[f64; 15]) -> Self {
        let v = |k: usize| Vec3::new(a[3 * k], a[3 * k + 1], a[3 * k + 2]);
        Self::new(v(0), v(1), v(2), v(3), v(4))
    }

    pub fn map(&self, f: impl Fn(&Vec3) -> Vec3) -> Self {
        Self {
            mu: [f(&self.mu[S]), f(&self.mu[T])],
            pi: [f(&self.pi[S]), f(&self.pi[T])],
            rho: f(&self.rho),
        }
    }
}

/// All partial derivatives of `h` at one point.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Partials {
    pub mu: [Vec3; 2],
    pub pi: [Vec3; 2],
    pub rho: Vec3,
}

impl Partials {
    pub fn to_array(&self) -> [f64; 15] {
        PhasePoint {
            mu: self.mu,
            pi: self.pi,
            rho: self.rho,
        }
        .to_array()
    }
}

/// `(μ^t − ρ×π^t, μ^s − ρ×π^s)`
#[inline]
fn shifted(p: &PhasePoint) -> (Vec3, Vec3) {
    (
        p.mu[T] - p.rho.cross(&p.pi[T]),
        p.mu[S] - p.rho.cross(&p.pi[S]),
    )
}

pub fn density(p: &PhasePoint, params: &HamiltonianParams) -> f64 {
    let v2 = params.wave_speed * params.wave_speed;
    let (a, b) = shifted(p);
    0.5 * p.pi[S].dot(&p.pi[S]) - 0.5 * v2 * p.pi[T].dot(&p.pi[T])
        + params.potential.value(&p.rho)
        + 0.5 * a.dot(&params.inertia_i.apply_inverse(&a))
        - 0.5 * b.dot(&params.inertia_j.apply_inverse(&b))
}

/// `δh/δμ^s = −J⁻¹(μ^s − ρ×π^s)`
pub fn deriv_mu_s(p: &PhasePoint, params: &HamiltonianParams) -> Vec3 {
    -params.inertia_j.apply_inverse(&shifted(p).1)
}

/// `δh/δμ^t = I⁻¹(μ^t − ρ×π^t)`
pub fn deriv_mu_t(p: &PhasePoint, params: &HamiltonianParams) -> Vec3 {
    params.inertia_i.apply_inverse(&shifted(p).0)
}

/// `δh/δπ^s = π^s − ρ×J⁻¹(μ^s − ρ×π^s)`
pub fn deriv_pi_s(p: &PhasePoint, params: &HamiltonianParams) -> Vec3 {
    p.pi[S] - p.rho.cross(&params.inertia_j.apply_inverse(&shifted(p).1))
}

/// `δh/δπ^t = −v²π^t + ρ×I⁻¹(μ^t − ρ×π^t)`
pub fn deriv_pi_t(p: &PhasePoint, params: &HamiltonianParams) -> Vec3 {
    let v2 = params.wave_speed * params.wave_speed;
    -p.pi[T] * v2 + p.rho.cross(&params.inertia_i.apply_inverse(&shifted(p).0))
}

/// `δh/δρ = π^s×J⁻¹(μ^s − ρ×π^s) − π^t×I⁻¹(μ^t − ρ×π^t) + U′(r)ρ/r`
pub fn deriv_rho(p: &PhasePoint, params: &HamiltonianParams) -> Vec3 {
    let (a, b) = shifted(p);
    p.pi[S].cross(&params.inertia_j.apply_inverse(&b)) - p.pi[T].cross(&params.inertia_i.apply_inverse(&a))
        + potential_force(&params.potential, &p.rho)
}

/// All five derivatives, sharing the inertia solves.
pub fn gradient(p: &PhasePoint, params: &HamiltonianParams) -> Partials {
    let v2 = params.wave_speed * params.wave_speed;
    let (a, b) = shifted(p);
    let ia = params.inertia_i.apply_inverse(&a);
    let jb = params.inertia_j.apply_inverse(&b);
    Partials {
        mu: [-jb, ia],
        pi: [p.pi[S] - p.rho.cross(&jb), -p.pi[T] * v2 + p.rho.cross(&ia)],
        rho: p.pi[S].cross(&jb) - p.pi[T].cross(&ia) + potential_force(&params.potential, &p.rho),
    }
}

/// Builds the phase point at grid index `j` from a state and its derived fields.
pub fn phase_point_at(state: &StrandState, derived: &crate::state::DerivedFields, j: usize) -> PhasePoint {
    PhasePoint::new(
        derived.mu_s[j],
        state.mu_t[j],
        state.rho[j],
        derived.pi_s[j],
        state.pi_t[j],
    )
}

/// Instantaneous energy `Δs Σ_j [h − ⟨π^s, δh/δπ^s⟩ − ⟨μ^s, δh/δμ^s⟩]`.
pub fn energy(state: &StrandState, grid: &Grid1D, params: &HamiltonianParams) -> Result<f64> {
    let derived = derive(state, grid, params)?;
    let sum: f64 = (0..grid.n())
        .map(|j| {
            let p = phase_point_at(state, &derived, j);
            let g = gradient(&p, params);
            density(&p, params) - p.pi[S].dot(&g.pi[S]) - p.mu[S].dot(&g.mu[S])
        })
        .sum();
    Ok(sum * grid.spacing())
}

/// Largest violations of the two spatial Legendre relations,
/// `(max |δh/δπ^s − ∂_s ρ|, max |δh/δμ^s − ω_s|)`. Zero up to rounding for
/// states whose slaved fields come from [`derive`].
pub fn legendre_residuals(state: &StrandState, grid: &Grid1D, params: &HamiltonianParams) -> Result<(f64, f64)> {
    let derived = derive(state, grid, params)?;
    let drho = d_ds(&state.rho, grid)?;
    let mut worst = (0.0f64, 0.0f64);
    for j in 0..grid.n() {
        let g = gradient(&phase_point_at(state, &derived, j), params);
        worst.0 = worst.0.max((g.pi[S] - drho[j]).amax());
        worst.1 = worst.1.max((g.mu[S] - state.omega_s[j]).amax());
    }
    Ok(worst)
}
