//! Reduced covariant bracket, horizontal differential and the weak form of
//! the reduced field equations.
//!
//! An affine Poisson (n−1)-form `f = θ_ξ + θ_Y + ω + Υ` has coefficients
//! `f^i = ⟨μ^i, ξ⟩ + ⟨π^i, Y⟩ + ω^i + Υ^i` relative to `i_{∂_i}(ds∧dt)`, so
//! that `f = f^s dt − f^t ds`. The supported family has `ξ`, `Y` depending on
//! `s` only and constant `ω`, `Υ`; in particular `∂f^i/∂z ≡ 0`.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::algebra::{StructureConstants, Vec3};
use crate::error::{Error, Result};
use crate::fourier::FourierField;
use crate::hamiltonian::{gradient, phase_point_at, HamiltonianParams, Partials, PhasePoint, S, T};
use crate::state::{derive, SolutionSeries};

/// Constant connection data: `Λ^β_i` (𝔨-valued), `Λ^A_i` (E-valued) per base
/// direction and Christoffel symbols `christoffel[k][i][j] = Γ^k_{ij}`.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConnectionCoefficients {
    #[serde(default)]
    pub lambda_k: [Vec3; 2],
    #[serde(default)]
    pub lambda_e: [Vec3; 2],
    #[serde(default)]
    pub christoffel: [[[f64; 2]; 2]; 2],
}

impl ConnectionCoefficients {
    pub fn validate(&self) -> Result<()> {
        let finite = self.lambda_k.iter().chain(&self.lambda_e).all(|v| v.iter().all(|x| x.is_finite()))
            && self.christoffel.iter().flatten().flatten().all(|x| x.is_finite());
        if !finite {
            return Err(Error::InvalidParams("connection coefficients must be finite".into()));
        }
        Ok(())
    }

    /// Name of the first non-zero block, if any.
    pub fn non_flat_part(&self) -> Option<&'static str> {
        if self.lambda_k.iter().any(|v| *v != Vec3::zeros()) {
            Some("lambda_k")
        } else if self.lambda_e.iter().any(|v| *v != Vec3::zeros()) {
            Some("lambda_e")
        } else if self.christoffel.iter().flatten().flatten().any(|x| *x != 0.0) {
            Some("christoffel")
        } else {
            None
        }
    }

    #[inline]
    fn gamma(&self, k: usize, i: usize, j: usize) -> f64 {
        self.christoffel[k][i][j]
    }
}

/// Test form `θ_ξ + θ_Y + ω + Υ` with `ω = omega_h[0] dt − omega_h[1] ds`
/// and likewise for the constant closed form `Υ`.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AffinePoissonForm {
    #[serde(default)]
    pub xi: FourierField,
    #[serde(default)]
    pub y_section: FourierField,
    #[serde(default)]
    pub omega_h: [f64; 2],
    #[serde(default)]
    pub upsilon: [f64; 2],
}

/// An [`AffinePoissonForm`] evaluated at one base point.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct FormValue {
    pub xi: Vec3,
    pub y: Vec3,
    pub dxi_ds: Vec3,
    pub dy_ds: Vec3,
    pub omega_h: [f64; 2],
    pub upsilon: [f64; 2],
}

impl FormValue {
    pub fn constant(xi: Vec3, y: Vec3) -> Self {
        Self {
            xi,
            y,
            ..Default::default()
        }
    }

    /// Coefficient `f^i` on the section through `point`.
    pub fn coefficient(&self, i: usize, point: &PhasePoint) -> f64 {
        point.mu[i].dot(&self.xi) + point.pi[i].dot(&self.y) + self.omega_h[i] + self.upsilon[i]
    }

    /// `∂f^i/∂x^i` at fixed fiber coordinates.
    pub fn explicit_divergence(&self, point: &PhasePoint) -> f64 {
        point.mu[S].dot(&self.dxi_ds) + point.pi[S].dot(&self.dy_ds)
    }
}

impl AffinePoissonForm {
    pub fn at(&self, s: f64, length: f64) -> FormValue {
        FormValue {
            xi: self.xi.value(s, length),
            y: self.y_section.value(s, length),
            dxi_ds: self.xi.derivative(s, length),
            dy_ds: self.y_section.derivative(s, length),
            omega_h: self.omega_h,
            upsilon: self.upsilon,
        }
    }

    pub fn random<R: Rng>(rng: &mut R) -> Self {
        let mut pair = || [rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)];
        let omega_h = pair();
        let upsilon = pair();
        Self {
            xi: FourierField::random(rng, 2, 3),
            y_section: FourierField::random(rng, 2, 3),
            omega_h,
            upsilon,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.xi.validate("xi")?;
        self.y_section.validate("y_section")?;
        if self.omega_h.iter().chain(&self.upsilon).any(|x| !x.is_finite()) {
            return Err(Error::Config("form coefficients must be finite".into()));
        }
        Ok(())
    }
}

/// `−⟨μ, [ξ, δh/δμ]⟩` for one base direction.
#[inline]
pub fn lie_poisson_bracket(xi: &Vec3, mu: &Vec3, dh_dmu: &Vec3) -> f64 {
    -mu.dot(&xi.cross(dh_dmu))
}

/// Local expression of `{f, h}`:
/// `−Σ_j μ^j_γ c^γ_{αβ} ξ^α ∂h/∂μ^j_β + ∂f^i/∂z·∂h/∂π^i − Y·∂h/∂ρ`.
pub fn reduced_bracket(f: &FormValue, point: &PhasePoint, dh: &Partials) -> f64 {
    let df_dz = [Vec3::zeros(); 2];
    let lie_poisson: f64 = (0..2).map(|j| lie_poisson_bracket(&f.xi, &point.mu[j], &dh.mu[j])).sum();
    let canonical: f64 = (0..2).map(|i| df_dz[i].dot(&dh.pi[i])).sum::<f64>() - f.y.dot(&dh.rho);
    lie_poisson + canonical
}

/// The bracket before simplification, with the two ½-weighted terms that
/// come from the invariance relations evaluated separately on the
/// structure-constant tensor:
///
/// ```text
/// r = −½ μ^j_γ c^γ_{βα} ξ^β ∂h/∂μ^j_α + ½ ξ^α μ^j_γ c^γ_{βα} ∂h/∂μ^j_β + canonical terms
/// ```
pub fn full_bracket_invariant(
    f: &FormValue,
    point: &PhasePoint,
    dh: &Partials,
    constants: &StructureConstants,
) -> f64 {
    let mut first = 0.0;
    let mut second = 0.0;
    for j in 0..2 {
        let mu = &point.mu[j];
        let w = &dh.mu[j];
        for g in 0..3 {
            for b in 0..3 {
                for a in 0..3 {
                    let c = constants.get(g, b, a);
                    first += mu[g] * c * f.xi[b] * w[a];
                    second += f.xi[a] * mu[g] * c * w[b];
                }
            }
        }
    }
    let df_dz = [Vec3::zeros(); 2];
    let canonical: f64 = (0..2).map(|i| df_dz[i].dot(&dh.pi[i])).sum::<f64>() - f.y.dot(&dh.rho);
    -0.5 * first + 0.5 * second + canonical
}

/// Local expression of `d^h f` for constant connection data. Terms carrying
/// `∂Λ/∂z` or `∂f/∂z` are kept and vanish identically.
pub fn horizontal_differential(
    f: &FormValue,
    point: &PhasePoint,
    conn: &ConnectionCoefficients,
    constants: &StructureConstants,
) -> f64 {
    let df_dz = [Vec3::zeros(); 2];
    let dlambda_e_dz = 0.0;
    let dlambda_k_dz = 0.0;

    let mut q = f.explicit_divergence(point);
    for i in 0..2 {
        q += df_dz[i].dot(&conn.lambda_e[i]);

        // μ slot: ∂f^i/∂μ^i_α = ξ^α
        let mut mu_slot = Vec3::zeros();
        for a in 0..3 {
            let mut acc = 0.0;
            for g in 0..3 {
                for b in 0..3 {
                    acc -= point.mu[i][g] * constants.get(g, b, a) * conn.lambda_k[i][b];
                }
            }
            mu_slot[a] = acc;
        }
        for k in 0..2 {
            mu_slot += point.mu[k] * conn.gamma(i, i, k) - point.mu[i] * conn.gamma(k, i, k);
        }
        q += f.xi.dot(&mu_slot);

        // π slot: ∂f^i/∂π^i_A = Y^A
        let mut pi_slot = -point.pi[i] * dlambda_e_dz - point.mu[i] * dlambda_k_dz;
        for k in 0..2 {
            pi_slot += point.pi[k] * conn.gamma(i, i, k) - point.pi[i] * conn.gamma(k, i, k);
        }
        q += f.y.dot(&pi_slot);
    }
    q
}

/// Residual of `{f,h} v = d(f∘(μ⊕π)) − d^h f∘(μ⊕π)` on the interior
/// snapshots of a series, as the coefficient of `ds∧dt`.
#[derive(Debug, Clone, PartialEq)]
pub struct ResidualField {
    /// Times of the interior snapshots.
    pub times: Vec<f64>,
    /// `values[k][j]`: residual at interior snapshot `k`, grid point `j`.
    pub values: Vec<Vec<f64>>,
}

impl ResidualField {
    pub fn max_norm(&self) -> f64 {
        self.values.iter().flatten().fold(0.0, |m, x| m.max(x.abs()))
    }
}

pub fn theorem_residual(
    form: &AffinePoissonForm,
    series: &SolutionSeries,
    params: &HamiltonianParams,
) -> Result<ResidualField> {
    series.require_snapshots(3)?;
    series.check_uniform()?;
    let grid = &series.grid;
    let n = grid.n();
    let constants = StructureConstants::so3();
    let form_values: Vec<FormValue> = grid.points().map(|s| form.at(s, grid.length())).collect();

    // f^s, f^t, and the pointwise {f,h} + d^h f, per snapshot
    let mut coeff_s = Vec::with_capacity(series.snapshots.len());
    let mut coeff_t = Vec::with_capacity(series.snapshots.len());
    let mut pointwise = Vec::with_capacity(series.snapshots.len());
    for snap in &series.snapshots {
        let derived = derive(snap, grid, params)?;
        let mut fs = Vec::with_capacity(n);
        let mut ft = Vec::with_capacity(n);
        let mut pw = Vec::with_capacity(n);
        for (j, fv) in form_values.iter().enumerate() {
            let p = phase_point_at(snap, &derived, j);
            let dh = gradient(&p, params);
            fs.push(fv.coefficient(S, &p));
            ft.push(fv.coefficient(T, &p));
            pw.push(reduced_bracket(fv, &p, &dh) + horizontal_differential(fv, &p, &params.connection, &constants));
        }
        coeff_s.push(fs);
        coeff_t.push(ft);
        pointwise.push(pw);
    }

    let inv_2ds = 0.5 / grid.spacing();
    let inv_2dt = 0.5 / series.dt_snapshot;
    let m = series.snapshots.len();
    let mut times = Vec::with_capacity(m - 2);
    let mut values = Vec::with_capacity(m - 2);
    for k in 1..m - 1 {
        let row = (0..n)
            .map(|j| {
                let ds_fs = (coeff_s[k][(j + 1) % n] - coeff_s[k][(j + n - 1) % n]) * inv_2ds;
                let dt_ft = (coeff_t[k + 1][j] - coeff_t[k - 1][j]) * inv_2dt;
                ds_fs + dt_ft - pointwise[k][j]
            })
            .collect();
        times.push(series.snapshots[k].t);
        values.push(row);
    }
    Ok(ResidualField { times, values })
}
