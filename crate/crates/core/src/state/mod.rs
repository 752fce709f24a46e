//! Gridded reduced fields on a periodic line.
//!
//! The evolved variables are `(ρ, π^t, μ^t, ω_s)`. The spatial multimomenta
//! `π^s`, `μ^s` and the temporal velocity `ω_t` are slaved to them through the
//! spatial Legendre relations and are recomputed by [`derive`] on demand.

mod csv_io;
mod series;

pub use csv_io::{read_snapshot_csv, write_snapshot_csv, SNAPSHOT_HEADER};
pub use series::{diagnostics_csv, DiagnosticsRow, SeriesManifest, SnapshotEntry, SolutionSeries, DIAGNOSTICS_FILE, MANIFEST_FILE};

use serde::{Deserialize, Serialize};

use crate::algebra::Vec3;
use crate::error::{Error, Result};
use crate::hamiltonian::HamiltonianParams;

pub const MIN_GRID_POINTS: usize = 8;

/// Uniform periodic grid `s_j = j Δs`, `j = 0..N`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "GridRepr", into = "GridRepr")]
pub struct Grid1D {
    n: usize,
    length: f64,
    spacing: f64,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct GridRepr {
    n: usize,
    length: f64,
}

impl TryFrom<GridRepr> for Grid1D {
    type Error = Error;
    fn try_from(r: GridRepr) -> Result<Self> {
        Grid1D::new(r.n, r.length)
    }
}

impl From<Grid1D> for GridRepr {
    fn from(g: Grid1D) -> Self {
        GridRepr {
            n: g.n,
            length: g.length,
        }
    }
}

impl Grid1D {
    pub fn new(n: usize, length: f64) -> Result<Self> {
        if n < MIN_GRID_POINTS {
            return Err(Error::InvalidGrid(format!(
                "grid.n must be ≥ {MIN_GRID_POINTS} (got {n})"
            )));
        }
        if !(length.is_finite() && length > 0.0) {
            return Err(Error::InvalidGrid(format!(
                "grid.length must be finite and > 0 (got {length})"
            )));
        }
        Ok(Self {
            n,
            length,
            spacing: length / n as f64,
        })
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn length(&self) -> f64 {
        self.length
    }

    #[inline]
    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    #[inline]
    pub fn point(&self, j: usize) -> f64 {
        j as f64 * self.spacing
    }

    pub fn points(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.n).map(|j| self.point(j))
    }

    pub fn check_len(&self, len: usize) -> Result<()> {
        if len != self.n {
            return Err(Error::LengthMismatch {
                expected: self.n,
                got: len,
            });
        }
        Ok(())
    }
}

/// Periodic second-order central difference `(f[j+1] − f[j−1]) / 2Δs`.
pub fn d_ds(field: &[Vec3], grid: &Grid1D) -> Result<Vec<Vec3>> {
    grid.check_len(field.len())?;
    let n = field.len();
    let inv = 0.5 / grid.spacing();
    Ok((0..n)
        .map(|j| (field[(j + 1) % n] - field[(j + n - 1) % n]) * inv)
        .collect())
}

/// Reduced fields at one time slice.
#[derive(Debug, Clone, PartialEq)]
pub struct StrandState {
    pub t: f64,
    pub rho: Vec<Vec3>,
    pub pi_t: Vec<Vec3>,
    pub mu_t: Vec<Vec3>,
    pub omega_s: Vec<Vec3>,
}

impl StrandState {
    pub fn zeros(n: usize, t: f64) -> Self {
        let z = vec![Vec3::zeros(); n];
        Self {
            t,
            rho: z.clone(),
            pi_t: z.clone(),
            mu_t: z.clone(),
            omega_s: z,
        }
    }

    pub fn len(&self) -> usize {
        self.rho.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rho.is_empty()
    }

    pub fn fields(&self) -> [&[Vec3]; 4] {
        [&self.rho, &self.pi_t, &self.mu_t, &self.omega_s]
    }

    pub fn fields_mut(&mut self) -> [&mut Vec<Vec3>; 4] {
        [
            &mut self.rho,
            &mut self.pi_t,
            &mut self.mu_t,
            &mut self.omega_s,
        ]
    }

    pub fn check_grid(&self, grid: &Grid1D) -> Result<()> {
        for f in self.fields() {
            grid.check_len(f.len())?;
        }
        Ok(())
    }

    pub fn is_finite(&self) -> bool {
        self.t.is_finite()
            && self
                .fields()
                .iter()
                .all(|f| f.iter().all(|v| v.iter().all(|x| x.is_finite())))
    }

    /// `self + scale · other`, field by field; the time stamp is kept.
    pub fn axpy(&self, scale: f64, other: &StrandState) -> StrandState {
        let comb = |a: &[Vec3], b: &[Vec3]| -> Vec<Vec3> {
            a.iter().zip(b).map(|(x, y)| x + y * scale).collect()
        };
        StrandState {
            t: self.t,
            rho: comb(&self.rho, &other.rho),
            pi_t: comb(&self.pi_t, &other.pi_t),
            mu_t: comb(&self.mu_t, &other.mu_t),
            omega_s: comb(&self.omega_s, &other.omega_s),
        }
    }

    /// Applies `f` to every vector of every field.
    pub fn map(&self, f: impl Fn(&Vec3) -> Vec3) -> StrandState {
        let m = |a: &[Vec3]| a.iter().map(&f).collect();
        StrandState {
            t: self.t,
            rho: m(&self.rho),
            pi_t: m(&self.pi_t),
            mu_t: m(&self.mu_t),
            omega_s: m(&self.omega_s),
        }
    }

    /// Max-norm distance over all fields.
    pub fn max_abs_diff(&self, other: &StrandState) -> f64 {
        self.fields()
            .iter()
            .zip(other.fields())
            .flat_map(|(a, b)| a.iter().zip(b).map(|(x, y)| (x - y).amax()))
            .fold(0.0, f64::max)
    }
}

/// Fields slaved to a [`StrandState`] by the spatial Legendre relations.
#[derive(Debug, Clone, PartialEq)]
pub struct DerivedFields {
    pub pi_s: Vec<Vec3>,
    pub mu_s: Vec<Vec3>,
    pub omega_t: Vec<Vec3>,
}

/// Pointwise, with a flat connection:
/// `ω_t = I⁻¹(μ^t − ρ×π^t)`, `π^s = ∂_s ρ − ρ×ω_s`, `μ^s = ρ×π^s − J ω_s`.
pub fn derive(
    state: &StrandState,
    grid: &Grid1D,
    params: &HamiltonianParams,
) -> Result<DerivedFields> {
    state.check_grid(grid)?;
    let drho = d_ds(&state.rho, grid)?;
    let n = grid.n();
    let mut pi_s = Vec::with_capacity(n);
    let mut mu_s = Vec::with_capacity(n);
    let mut omega_t = Vec::with_capacity(n);
    for j in 0..n {
        let rho = &state.rho[j];
        let ws = &state.omega_s[j];
        omega_t.push(
            params
                .inertia_i
                .apply_inverse(&(state.mu_t[j] - rho.cross(&state.pi_t[j]))),
        );
        let ps = drho[j] - rho.cross(ws);
        mu_s.push(rho.cross(&ps) - params.inertia_j.apply(ws));
        pi_s.push(ps);
    }
    Ok(DerivedFields {
        pi_s,
        mu_s,
        omega_t,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::InertiaOperator;
    use std::f64::consts::PI;

    #[test]
    fn grid_validation() {
        assert!(Grid1D::new(7, 1.0).is_err());
        let msg = Grid1D::new(4, 1.0).unwrap_err().to_string();
        assert!(msg.contains("grid.n must be ≥ 8"), "{msg}");
        assert!(Grid1D::new(8, 0.0).is_err());
        assert!(Grid1D::new(8, f64::INFINITY).is_err());
        let g = Grid1D::new(100, 2.0 * PI).unwrap();
        assert!((g.n() as f64 * g.spacing() - g.length()).abs() <= 1e-12);
    }

    #[test]
    fn d_ds_constant_and_mismatch() {
        let g = Grid1D::new(16, 3.0).unwrap();
        let c = vec![Vec3::new(1.5, -2.0, 0.25); 16];
        assert!(d_ds(&c, &g).unwrap().iter().all(|v| *v == Vec3::zeros()));
        assert!(matches!(
            d_ds(&c[..15], &g),
            Err(Error::LengthMismatch { expected: 16, got: 15 })
        ));
    }

    #[test]
    fn d_ds_linear_ramp_has_seam() {
        let g = Grid1D::new(32, 4.0).unwrap();
        let f: Vec<Vec3> = g.points().map(|s| Vec3::x() * s).collect();
        let d = d_ds(&f, &g).unwrap();
        for j in 1..31 {
            assert!((d[j] - Vec3::x()).amax() < 1e-12);
        }
        // jump of −L across the seam
        let expect_edge = (g.point(1) - g.point(31)) / (2.0 * g.spacing());
        assert!((d[0].x - expect_edge).abs() < 1e-12);
        assert!(d[31].x < 0.0);
    }

    #[test]
    fn d_ds_second_order_on_sine() {
        let err = |n: usize| {
            let l = 3.0;
            let g = Grid1D::new(n, l).unwrap();
            let k = 2.0 * PI / l;
            let f: Vec<Vec3> = g.points().map(|s| Vec3::x() * (k * s).sin()).collect();
            let d = d_ds(&f, &g).unwrap();
            g.points()
                .zip(&d)
                .map(|(s, v)| (v.x - k * (k * s).cos()).abs())
                .fold(0.0, f64::max)
        };
        let (e1, e2, e3) = (err(32), err(64), err(128));
        assert!((e1 / e2).log2() > 1.9 && (e2 / e3).log2() > 1.9);
        assert!(e3 < (3.0f64 / 128.0).powi(2) * 10.0);
    }

    #[test]
    fn d_ds_is_skew() {
        let g = Grid1D::new(24, 2.0).unwrap();
        let f: Vec<Vec3> = (0..24).map(|j| Vec3::new((j as f64).sin(), (j * j) as f64 * 0.01, 1.0)).collect();
        let h: Vec<Vec3> = (0..24).map(|j| Vec3::new((j as f64 * 0.7).cos(), -(j as f64), 0.5)).collect();
        let lhs: f64 = f.iter().zip(d_ds(&h, &g).unwrap()).map(|(a, b)| a.dot(&b)).sum();
        let rhs: f64 = d_ds(&f, &g).unwrap().iter().zip(&h).map(|(a, b)| a.dot(b)).sum();
        assert!((lhs + rhs).abs() <= 1e-10);
    }

    #[test]
    fn derive_examples() {
        let g = Grid1D::new(8, 1.0).unwrap();
        let params = HamiltonianParams::default();
        let d = derive(&StrandState::zeros(8, 0.0), &g, &params).unwrap();
        assert!(d.pi_s.iter().chain(&d.mu_s).chain(&d.omega_t).all(|v| *v == Vec3::zeros()));

        let mut s = StrandState::zeros(8, 0.0);
        s.rho = vec![Vec3::x(); 8];
        s.omega_s = vec![Vec3::z(); 8];
        let d = derive(&s, &g, &params).unwrap();
        assert!(d.pi_s.iter().all(|v| *v == Vec3::y()));
        assert!(d.mu_s.iter().all(|v| *v == Vec3::zeros()));
        assert!(d.omega_t.iter().all(|v| *v == Vec3::zeros()));

        let params = HamiltonianParams {
            inertia_i: InertiaOperator::diagonal([1.0, 2.0, 3.0]).unwrap(),
            ..HamiltonianParams::default()
        };
        let mut s = StrandState::zeros(8, 0.0);
        s.mu_t = vec![Vec3::new(2.0, 2.0, 3.0); 8];
        let d = derive(&s, &g, &params).unwrap();
        assert!(d.omega_t.iter().all(|v| (v - Vec3::new(2.0, 1.0, 1.0)).amax() < 1e-15));
    }

    #[test]
    fn derive_rejects_shape_mismatch() {
        let g = Grid1D::new(8, 1.0).unwrap();
        assert!(derive(&StrandState::zeros(9, 0.0), &g, &HamiltonianParams::default()).is_err());
    }
}
