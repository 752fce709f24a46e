//! Lie-algebraic primitives for `so(3) ≅ ℝ³`.
//!
//! Basis convention: `[e_α, e_β] = ε_{αβγ} e_γ`, so the bracket is the cross
//! product and the structure constants are `c^γ_{αβ} = ε_{αβγ}`. The dual
//! `so(3)*` is identified with ℝ³ through the Euclidean dot product, which
//! makes the coadjoint action `ad*_ξ μ = μ × ξ`.

use nalgebra::{Matrix3, SymmetricEigen, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type Vec3 = Vector3<f64>;
pub type Mat3 = Matrix3<f64>;

/// Below this angle `exp_so3` switches to the truncated series.
const EXP_SERIES_THRESHOLD: f64 = 1e-4;

/// Lie bracket on `so(3)`: the cross product.
#[inline]
pub fn bracket(x: &Vec3, y: &Vec3) -> Vec3 {
    x.cross(y)
}

/// Coadjoint action `ad*_ξ μ`, defined by `⟨ad*_ξ μ, η⟩ = ⟨μ, [ξ, η]⟩`.
#[inline]
pub fn ad_star(xi: &Vec3, mu: &Vec3) -> Vec3 {
    mu.cross(xi)
}

/// Skew matrix with `hat(ω) x = ω × x`.
pub fn hat(omega: &Vec3) -> Mat3 {
    Mat3::new(
        0.0, -omega.z, omega.y, //
        omega.z, 0.0, -omega.x, //
        -omega.y, omega.x, 0.0,
    )
}

/// Inverse of [`hat`], applied to the skew-symmetric part of `m`.
pub fn vee(m: &Mat3) -> Vec3 {
    Vec3::new(
        0.5 * (m[(2, 1)] - m[(1, 2)]),
        0.5 * (m[(0, 2)] - m[(2, 0)]),
        0.5 * (m[(1, 0)] - m[(0, 1)]),
    )
}

/// Rodrigues exponential `so(3) → SO(3)`.
pub fn exp_so3(omega: &Vec3) -> Mat3 {
    let theta2 = omega.norm_squared();
    let theta = theta2.sqrt();
    let (a, b) = if theta < EXP_SERIES_THRESHOLD {
        // sin θ/θ and (1 − cos θ)/θ² to O(θ⁶)
        (
            1.0 - theta2 / 6.0 + theta2 * theta2 / 120.0,
            0.5 - theta2 / 24.0 + theta2 * theta2 / 720.0,
        )
    } else {
        (theta.sin() / theta, (1.0 - theta.cos()) / theta2)
    };
    let k = hat(omega);
    Mat3::identity() + k * a + k * k * b
}

/// Dense structure-constant tensor `c[γ][β][α] = c^γ_{βα}`.
#[derive(Debug, Clone, PartialEq)]
pub struct StructureConstants {
    c: [[[f64; 3]; 3]; 3],
}

impl StructureConstants {
    pub const DIM: usize = 3;

    /// `so(3)` in the standard basis: `c^γ_{αβ} = ε_{αβγ}`.
    pub fn so3() -> Self {
        let mut c = [[[0.0; 3]; 3]; 3];
        for (g, plane) in c.iter_mut().enumerate() {
            for (b, row) in plane.iter_mut().enumerate() {
                for (a, entry) in row.iter_mut().enumerate() {
                    *entry = levi_civita(b, a, g);
                }
            }
        }
        Self { c }
    }

    pub fn from_array(c: [[[f64; 3]; 3]; 3]) -> Self {
        Self { c }
    }

    /// `c^γ_{βα}` with the upper index first.
    #[inline]
    pub fn get(&self, gamma: usize, beta: usize, alpha: usize) -> f64 {
        self.c[gamma][beta][alpha]
    }

    /// Adds `delta` to a single entry. Used to check that verifiers notice
    /// corrupted constants.
    pub fn perturbed(&self, gamma: usize, beta: usize, alpha: usize, delta: f64) -> Self {
        let mut out = self.clone();
        out.c[gamma][beta][alpha] += delta;
        out
    }

    /// `[x, y]^γ = c^γ_{αβ} x^α y^β`.
    pub fn contract(&self, x: &Vec3, y: &Vec3) -> Vec3 {
        let mut out = Vec3::zeros();
        for g in 0..3 {
            let mut acc = 0.0;
            for a in 0..3 {
                for b in 0..3 {
                    acc += self.c[g][a][b] * x[a] * y[b];
                }
            }
            out[g] = acc;
        }
        out
    }

    /// Largest `|c^γ_{βα} + c^γ_{αβ}|`.
    pub fn antisymmetry_defect(&self) -> f64 {
        let mut worst = 0.0f64;
        for g in 0..3 {
            for b in 0..3 {
                for a in 0..3 {
                    worst = worst.max((self.c[g][b][a] + self.c[g][a][b]).abs());
                }
            }
        }
        worst
    }

    /// Largest violation of the Jacobi identity over all index triples.
    pub fn jacobi_defect(&self) -> f64 {
        let c = |g: usize, a: usize, b: usize| self.c[g][a][b];
        let mut worst = 0.0f64;
        for a in 0..3 {
            for b in 0..3 {
                for g in 0..3 {
                    for t in 0..3 {
                        let mut sum = 0.0;
                        for s in 0..3 {
                            sum += c(s, a, b) * c(t, s, g)
                                + c(s, b, g) * c(t, s, a)
                                + c(s, g, a) * c(t, s, b);
                        }
                        worst = worst.max(sum.abs());
                    }
                }
            }
        }
        worst
    }
}

impl Default for StructureConstants {
    fn default() -> Self {
        Self::so3()
    }
}

fn levi_civita(i: usize, j: usize, k: usize) -> f64 {
    match (i, j, k) {
        (0, 1, 2) | (1, 2, 0) | (2, 0, 1) => 1.0,
        (0, 2, 1) | (2, 1, 0) | (1, 0, 2) => -1.0,
        _ => 0.0,
    }
}

/// Symmetric positive-definite 3×3 operator with cached inverse.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "InertiaRepr", into = "InertiaRepr")]
pub struct InertiaOperator {
    matrix: Mat3,
    inverse: Mat3,
}

#[derive(Serialize, Deserialize)]
struct InertiaRepr([[f64; 3]; 3]);

impl TryFrom<InertiaRepr> for InertiaOperator {
    type Error = Error;
    fn try_from(r: InertiaRepr) -> Result<Self> {
        InertiaOperator::new(Mat3::from_fn(|i, j| r.0[i][j]))
    }
}

impl From<InertiaOperator> for InertiaRepr {
    fn from(op: InertiaOperator) -> Self {
        let m = op.matrix;
        InertiaRepr(std::array::from_fn(|i| std::array::from_fn(|j| m[(i, j)])))
    }
}

impl InertiaOperator {
    pub fn new(matrix: Mat3) -> Result<Self> {
        if matrix.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidInertia("non-finite entry".into()));
        }
        let scale = matrix.amax().max(f64::MIN_POSITIVE);
        let asym = (matrix - matrix.transpose()).amax();
        if asym > 1e-12 * scale {
            return Err(Error::InvalidInertia(format!(
                "matrix is not symmetric (max |A − Aᵀ| = {asym:e})"
            )));
        }
        let sym = (matrix + matrix.transpose()) * 0.5;
        let eig = SymmetricEigen::new(sym);
        let min_eig = eig.eigenvalues.min();
        if min_eig <= 0.0 {
            return Err(Error::InvalidInertia(format!(
                "matrix is not positive definite (smallest eigenvalue {min_eig:e})"
            )));
        }
        let inverse = sym
            .try_inverse()
            .ok_or_else(|| Error::InvalidInertia("singular matrix".into()))?;
        // symmetrize the inverse so both apply paths stay symmetric
        let inverse = (inverse + inverse.transpose()) * 0.5;
        Ok(Self {
            matrix: sym,
            inverse,
        })
    }

    pub fn diagonal(d: [f64; 3]) -> Result<Self> {
        Self::new(Mat3::from_diagonal(&Vec3::from(d)))
    }

    pub fn isotropic(scale: f64) -> Result<Self> {
        Self::diagonal([scale; 3])
    }

    pub fn identity() -> Self {
        Self {
            matrix: Mat3::identity(),
            inverse: Mat3::identity(),
        }
    }

    pub fn matrix(&self) -> &Mat3 {
        &self.matrix
    }

    #[inline]
    pub fn apply(&self, x: &Vec3) -> Vec3 {
        self.matrix * x
    }

    #[inline]
    pub fn apply_inverse(&self, x: &Vec3) -> Vec3 {
        self.inverse * x
    }

    /// True when the operator is a scalar multiple of the identity.
    pub fn is_isotropic(&self) -> bool {
        let d = self.matrix[(0, 0)];
        (self.matrix - Mat3::identity() * d).amax() == 0.0
    }
}

/// Radial potential `U(r)`, `r = ‖ρ‖`.
///
/// Both families are smooth functions of `r²`, so the force `U′(r) ρ/r`
/// is evaluated as `2 dU/d(r²) · ρ` and is regular at `ρ = 0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum RadialPotential {
    /// `U = ½ k (r − r0)²`; only `r0 = 0` is admitted.
    Quadratic {
        k: f64,
        #[serde(default)]
        r0: f64,
    },
    /// `U = Σ_n c_n r^{2n}`.
    Polynomial { coefficients: Vec<f64> },
}

impl RadialPotential {
    pub fn quadratic(k: f64, r0: f64) -> Result<Self> {
        let p = RadialPotential::Quadratic { k, r0 };
        p.validate()?;
        Ok(p)
    }

    pub fn polynomial(coefficients: Vec<f64>) -> Result<Self> {
        let p = RadialPotential::Polynomial { coefficients };
        p.validate()?;
        Ok(p)
    }

    pub fn zero() -> Self {
        RadialPotential::Polynomial {
            coefficients: Vec::new(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            RadialPotential::Quadratic { k, r0 } => {
                if !k.is_finite() || !r0.is_finite() {
                    return Err(Error::InvalidPotential("non-finite parameter".into()));
                }
                if *r0 != 0.0 {
                    return Err(Error::InvalidPotential(
                        "quadratic potential requires r0 = 0 (force must be regular at the origin); \
                         use a polynomial in r² for a rest radius"
                            .into(),
                    ));
                }
            }
            RadialPotential::Polynomial { coefficients } => {
                if coefficients.iter().any(|c| !c.is_finite()) {
                    return Err(Error::InvalidPotential("non-finite coefficient".into()));
                }
            }
        }
        Ok(())
    }

    /// `U(‖ρ‖)`.
    pub fn value(&self, rho: &Vec3) -> f64 {
        let r2 = rho.norm_squared();
        match self {
            RadialPotential::Quadratic { k, .. } => 0.5 * k * r2,
            RadialPotential::Polynomial { coefficients } => {
                coefficients.iter().rev().fold(0.0, |acc, c| acc * r2 + c)
            }
        }
    }

    /// `dU/d(r²)` as a function of `r²`.
    fn d_dr2(&self, r2: f64) -> f64 {
        match self {
            RadialPotential::Quadratic { k, .. } => 0.5 * k,
            RadialPotential::Polynomial { coefficients } => coefficients
                .iter()
                .enumerate()
                .skip(1)
                .rev()
                .fold(0.0, |acc, (n, c)| acc * r2 + n as f64 * c),
        }
    }

    /// Radial derivative `U′(r)`.
    pub fn radial_derivative(&self, r: f64) -> f64 {
        2.0 * r * self.d_dr2(r * r)
    }
}

/// `U′(‖ρ‖) ρ/‖ρ‖`, the unsigned potential force term.
pub fn potential_force(potential: &RadialPotential, rho: &Vec3) -> Vec3 {
    rho * (2.0 * potential.d_dr2(rho.norm_squared()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::FRAC_PI_2;

    fn close(a: &Vec3, b: &Vec3, tol: f64) -> bool {
        (a - b).amax() <= tol
    }

    fn mclose(a: &Mat3, b: &Mat3, tol: f64) -> bool {
        (a - b).amax() <= tol
    }

    fn rand_vec(rng: &mut ChaCha8Rng, scale: f64) -> Vec3 {
        Vec3::new(
            rng.random_range(-scale..scale),
            rng.random_range(-scale..scale),
            rng.random_range(-scale..scale),
        )
    }

    #[test]
    fn basis_brackets() {
        assert_eq!(bracket(&Vec3::x(), &Vec3::y()), Vec3::z());
        assert_eq!(bracket(&Vec3::x(), &Vec3::x()), Vec3::zeros());
        assert_eq!(ad_star(&Vec3::x(), &Vec3::x()), Vec3::zeros());
        assert_eq!(ad_star(&Vec3::x(), &Vec3::y()), -Vec3::z());
    }

    #[test]
    fn bracket_orthogonal_and_matches_contraction() {
        let c = StructureConstants::so3();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..1000 {
            let x = rand_vec(&mut rng, 1.0);
            let y = rand_vec(&mut rng, 1.0);
            let z = bracket(&x, &y);
            assert!(z.dot(&x).abs() <= 1e-12 && z.dot(&y).abs() <= 1e-12);
            assert!(close(&z, &c.contract(&x, &y), 1e-12));
        }
    }

    #[test]
    fn ad_star_pairing() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..1000 {
            let (xi, mu, eta) = (
                rand_vec(&mut rng, 1.0),
                rand_vec(&mut rng, 1.0),
                rand_vec(&mut rng, 1.0),
            );
            let lhs = ad_star(&xi, &mu).dot(&eta);
            let rhs = mu.dot(&xi.cross(&eta));
            assert!((lhs - rhs).abs() <= 1e-12);
        }
    }

    #[test]
    fn structure_constants_exact() {
        let c = StructureConstants::so3();
        assert_eq!(c.antisymmetry_defect(), 0.0);
        assert_eq!(c.jacobi_defect(), 0.0);
        assert_eq!(c.get(2, 0, 1), 1.0);
        assert_eq!(c.get(2, 1, 0), -1.0);
        let bad = c.perturbed(2, 0, 1, 1e-6);
        assert!(bad.antisymmetry_defect() > 0.0);
        assert!(bad.jacobi_defect() > 0.0);
    }

    #[test]
    fn exp_special_cases() {
        assert_eq!(exp_so3(&Vec3::zeros()), Mat3::identity());
        let r = exp_so3(&(Vec3::z() * FRAC_PI_2));
        assert!(close(&(r * Vec3::x()), &Vec3::y(), 1e-15));
    }

    #[test]
    fn exp_branches_agree_at_threshold() {
        let dir = Vec3::new(0.3, -0.5, 0.8).normalize();
        let theta = EXP_SERIES_THRESHOLD;
        let k = hat(&(dir * theta));
        let closed = Mat3::identity() + k * (theta.sin() / theta) + k * k * ((1.0 - theta.cos()) / (theta * theta));
        let series = exp_so3(&(dir * theta * (1.0 - 1e-12)));
        assert!(mclose(&closed, &series, 1e-14));
    }

    #[test]
    fn exp_orthogonal_and_inverse() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..500 {
            let w = rand_vec(&mut rng, 10.0 / 3f64.sqrt());
            let r = exp_so3(&w);
            assert!(mclose(&(r.transpose() * r), &Mat3::identity(), 1e-12));
            assert!((r.determinant() - 1.0).abs() <= 1e-12);
            assert!(mclose(&(r * exp_so3(&-w)), &Mat3::identity(), 1e-10));
        }
    }

    #[test]
    fn hat_vee_roundtrip() {
        let w = Vec3::new(1.0, -2.0, 3.0);
        assert_eq!(vee(&hat(&w)), w);
        assert_eq!(hat(&w) * Vec3::new(0.5, 0.25, -1.0), w.cross(&Vec3::new(0.5, 0.25, -1.0)));
    }

    #[test]
    fn potential_forces() {
        let q1 = RadialPotential::quadratic(1.0, 0.0).unwrap();
        assert_eq!(potential_force(&q1, &Vec3::new(2.0, 0.0, 0.0)), Vec3::new(2.0, 0.0, 0.0));
        let q3 = RadialPotential::quadratic(3.0, 0.0).unwrap();
        assert_eq!(potential_force(&q3, &Vec3::new(0.0, 1.0, 1.0)), Vec3::new(0.0, 3.0, 3.0));
        let poly = RadialPotential::polynomial(vec![0.5, -1.0, 0.25]).unwrap();
        for p in [&q1, &q3, &poly] {
            assert_eq!(potential_force(p, &Vec3::zeros()), Vec3::zeros());
        }
        assert!(RadialPotential::quadratic(1.0, 0.5).is_err());
        assert!(RadialPotential::polynomial(vec![f64::NAN]).is_err());
    }

    #[test]
    fn polynomial_force_matches_radial_derivative() {
        // U = 1 + 2 r² − 0.5 r⁴ → U′(r) = 4r − 2r³
        let p = RadialPotential::polynomial(vec![1.0, 2.0, -0.5]).unwrap();
        let rho = Vec3::new(0.3, -0.4, 1.2);
        let r = rho.norm();
        assert!((p.radial_derivative(r) - (4.0 * r - 2.0 * r.powi(3))).abs() < 1e-14);
        assert!(close(&potential_force(&p, &rho), &(rho * ((4.0 * r - 2.0 * r.powi(3)) / r)), 1e-14));
        assert!((p.value(&rho) - (1.0 + 2.0 * r * r - 0.5 * r.powi(4))).abs() < 1e-14);
    }

    #[test]
    fn inertia_checks() {
        let i = InertiaOperator::new(Mat3::new(2.0, 0.5, 0.0, 0.5, 3.0, 0.1, 0.0, 0.1, 1.5)).unwrap();
        for e in [Vec3::x(), Vec3::y(), Vec3::z()] {
            assert!(close(&i.apply(&i.apply_inverse(&e)), &e, 1e-12));
        }
        assert!(InertiaOperator::new(Mat3::new(1.0, 2.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0)).is_err());
        assert!(InertiaOperator::diagonal([1.0, -1.0, 1.0]).is_err());
        assert!(InertiaOperator::diagonal([1.0, 0.0, 1.0]).is_err());
        assert!(InertiaOperator::isotropic(2.0).unwrap().is_isotropic());
        assert!(!i.is_isotropic());
    }

    #[test]
    fn inertia_serde_validates() {
        let good: InertiaOperator = serde_json::from_str("[[1,0,0],[0,2,0],[0,0,3]]").unwrap();
        assert_eq!(good.apply_inverse(&Vec3::new(2.0, 2.0, 3.0)), Vec3::new(2.0, 1.0, 1.0));
        assert!(serde_json::from_str::<InertiaOperator>("[[1,0,0],[0,-2,0],[0,0,3]]").is_err());
    }
}
