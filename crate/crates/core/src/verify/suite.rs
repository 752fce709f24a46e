//! Seeded property checks over the algebra, Hamiltonian and bracket
//! formulas, aggregated into one JSON-serializable report.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::algebra::{ad_star, bracket, exp_so3, hat, vee, InertiaOperator, Mat3, RadialPotential, StructureConstants, Vec3};
use crate::brackets::{
    full_bracket_invariant, horizontal_differential, lie_poisson_bracket, reduced_bracket, ConnectionCoefficients,
    FormValue,
};
use crate::error::{Error, Result};
use crate::hamiltonian::{density, gradient, HamiltonianParams, PhasePoint, S, T};
use crate::state::{d_ds, Grid1D};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckResult {
    pub name: String,
    pub max_error: f64,
    pub tolerance: f64,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IdentityReport {
    pub seed: u64,
    pub trials: usize,
    pub checks: Vec<CheckResult>,
    pub all_passed: bool,
}

impl IdentityReport {
    pub fn check(&self, name: &str) -> Option<&CheckResult> {
        self.checks.iter().find(|c| c.name == name)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SuiteOptions {
    /// Structure constants fed to the checks that contract against them.
    pub constants: StructureConstants,
    /// Per-check tolerance overrides, by check name.
    pub tolerances: BTreeMap<String, f64>,
}

impl Default for SuiteOptions {
    fn default() -> Self {
        Self {
            constants: StructureConstants::so3(),
            tolerances: BTreeMap::new(),
        }
    }
}

type CheckFn = fn(&mut ChaCha8Rng, &StructureConstants) -> f64;

const FD_STEP: f64 = 1e-5;

const CHECKS: &[(&str, f64, CheckFn)] = &[
    ("algebra.antisymmetry", 0.0, |_, c| c.antisymmetry_defect()),
    ("algebra.jacobi", 0.0, |_, c| c.jacobi_defect()),
    ("algebra.bracket_contraction", 1e-12, bracket_contraction),
    ("algebra.ad_star_pairing", 1e-12, ad_star_pairing),
    ("algebra.hat_vee", 1e-14, hat_vee),
    ("algebra.exp_inverse", 1e-10, exp_inverse),
    ("algebra.exp_orthogonal", 1e-12, exp_orthogonal),
    ("algebra.exp_series_branch", 1e-14, exp_series_branch),
    ("hamiltonian.gradient_mu_s", 1e-6, |r, _| gradient_slot(r, 0)),
    ("hamiltonian.gradient_mu_t", 1e-6, |r, _| gradient_slot(r, 1)),
    ("hamiltonian.gradient_rho", 1e-6, |r, _| gradient_slot(r, 2)),
    ("hamiltonian.gradient_pi_s", 1e-6, |r, _| gradient_slot(r, 3)),
    ("hamiltonian.gradient_pi_t", 1e-6, |r, _| gradient_slot(r, 4)),
    ("hamiltonian.rotation_invariance", 1e-12, rotation_invariance),
    ("hamiltonian.sign_structure", 0.0, sign_structure),
    ("brackets.reduction_identity", 1e-12, reduction_identity),
    ("brackets.lie_poisson_antisymmetry", 1e-12, lie_poisson_antisymmetry),
    ("brackets.lie_poisson_ad_star", 1e-12, lie_poisson_ad_star),
    ("brackets.horizontal_flat", 0.0, horizontal_flat),
    ("brackets.horizontal_linearity", 1e-12, horizontal_linearity),
    ("brackets.horizontal_constant_connection", 1e-12, horizontal_constant_connection),
    ("state.d_ds_skew", 1e-10, d_ds_skew),
];

/// Names of every check, in report order.
pub const CHECK_NAMES: [&str; 22] = {
    let mut names = [""; 22];
    let mut i = 0;
    while i < CHECKS.len() {
        names[i] = CHECKS[i].0;
        i += 1;
    }
    names
};

pub fn identity_suite(seed: u64, trials: usize) -> Result<IdentityReport> {
    identity_suite_with(seed, trials, &SuiteOptions::default())
}

/// Runs every check `trials` times. Each check draws from its own ChaCha8
/// stream, so the report does not depend on scheduling.
pub fn identity_suite_with(seed: u64, trials: usize, options: &SuiteOptions) -> Result<IdentityReport> {
    if trials == 0 {
        return Err(Error::InvalidParams("trials must be ≥ 1".into()));
    }
    if let Some(name) = options.tolerances.keys().find(|k| !CHECK_NAMES.contains(&k.as_str())) {
        return Err(Error::InvalidParams(format!("unknown check '{name}'")));
    }
    let checks: Vec<CheckResult> = CHECKS
        .par_iter()
        .enumerate()
        .map(|(index, (name, default_tol, check))| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(index as u64);
            let mut max_error = 0.0f64;
            for _ in 0..trials {
                let e = check(&mut rng, &options.constants);
                // NaN must fail the check
                max_error = if e.is_nan() { f64::NAN } else { max_error.max(e) };
            }
            let tolerance = options.tolerances.get(*name).copied().unwrap_or(*default_tol);
            CheckResult {
                name: name.to_string(),
                max_error,
                tolerance,
                passed: max_error <= tolerance,
            }
        })
        .collect();
    let all_passed = checks.iter().all(|c| c.passed);
    Ok(IdentityReport {
        seed,
        trials,
        checks,
        all_passed,
    })
}

fn rv(rng: &mut ChaCha8Rng, scale: f64) -> Vec3 {
    Vec3::new(
        rng.random_range(-scale..scale),
        rng.random_range(-scale..scale),
        rng.random_range(-scale..scale),
    )
}

fn random_spd(rng: &mut ChaCha8Rng) -> InertiaOperator {
    let m = Mat3::from_fn(|_, _| rng.random_range(-1.0..1.0));
    InertiaOperator::new(m * m.transpose() + Mat3::identity() * 0.5).expect("SPD by construction")
}

fn random_point(rng: &mut ChaCha8Rng) -> PhasePoint {
    PhasePoint::new(rv(rng, 1.0), rv(rng, 1.0), rv(rng, 1.0), rv(rng, 1.0), rv(rng, 1.0))
}

fn random_params(rng: &mut ChaCha8Rng) -> HamiltonianParams {
    let coefficients = (0..3).map(|_| rng.random_range(-1.0..1.0)).collect();
    HamiltonianParams {
        inertia_i: random_spd(rng),
        inertia_j: random_spd(rng),
        wave_speed: rng.random_range(0.5..2.0),
        potential: RadialPotential::polynomial(coefficients).expect("finite coefficients"),
        ..Default::default()
    }
}

fn random_isotropic_params(rng: &mut ChaCha8Rng) -> HamiltonianParams {
    HamiltonianParams {
        inertia_i: InertiaOperator::isotropic(rng.random_range(0.5..2.0)).unwrap(),
        inertia_j: InertiaOperator::isotropic(rng.random_range(0.5..2.0)).unwrap(),
        ..random_params(rng)
    }
}

fn random_rotation(rng: &mut ChaCha8Rng) -> Mat3 {
    exp_so3(&rv(rng, std::f64::consts::PI))
}

fn random_form(rng: &mut ChaCha8Rng) -> FormValue {
    FormValue {
        xi: rv(rng, 1.0),
        y: rv(rng, 1.0),
        dxi_ds: rv(rng, 1.0),
        dy_ds: rv(rng, 1.0),
        omega_h: [rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)],
        upsilon: [rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)],
    }
}

fn random_connection(rng: &mut ChaCha8Rng) -> ConnectionCoefficients {
    let mut c = ConnectionCoefficients {
        lambda_k: [rv(rng, 1.0), rv(rng, 1.0)],
        lambda_e: [rv(rng, 1.0), rv(rng, 1.0)],
        ..Default::default()
    };
    for g in c.christoffel.iter_mut().flatten().flatten() {
        *g = rng.random_range(-1.0..1.0);
    }
    c
}

fn bracket_contraction(rng: &mut ChaCha8Rng, c: &StructureConstants) -> f64 {
    let (x, y) = (rv(rng, 1.0), rv(rng, 1.0));
    (bracket(&x, &y) - c.contract(&x, &y)).amax()
}

fn ad_star_pairing(rng: &mut ChaCha8Rng, c: &StructureConstants) -> f64 {
    let (xi, mu, eta) = (rv(rng, 1.0), rv(rng, 1.0), rv(rng, 1.0));
    (ad_star(&xi, &mu).dot(&eta) - mu.dot(&c.contract(&xi, &eta))).abs()
}

fn hat_vee(rng: &mut ChaCha8Rng, _: &StructureConstants) -> f64 {
    let (w, x) = (rv(rng, 1.0), rv(rng, 1.0));
    (hat(&w) * x - w.cross(&x)).amax().max((vee(&hat(&w)) - w).amax())
}

fn random_in_ball(rng: &mut ChaCha8Rng, radius: f64) -> Vec3 {
    let dir = rv(rng, 1.0);
    let norm = dir.norm();
    if norm == 0.0 {
        return Vec3::zeros();
    }
    dir * (rng.random_range(0.0..radius) / norm)
}

fn exp_inverse(rng: &mut ChaCha8Rng, _: &StructureConstants) -> f64 {
    let w = random_in_ball(rng, 10.0);
    (exp_so3(&w) * exp_so3(&-w) - Mat3::identity()).amax()
}

fn exp_orthogonal(rng: &mut ChaCha8Rng, _: &StructureConstants) -> f64 {
    let r = exp_so3(&random_in_ball(rng, 10.0));
    (r.transpose() * r - Mat3::identity()).amax().max((r.determinant() - 1.0).abs())
}

fn exp_series_branch(rng: &mut ChaCha8Rng, _: &StructureConstants) -> f64 {
    let dir = rv(rng, 1.0).normalize();
    let theta = rng.random_range(1e-6..1e-4);
    let w = dir * theta;
    let k = hat(&w);
    let closed = Mat3::identity() + k * (theta.sin() / theta) + k * k * ((1.0 - theta.cos()) / (theta * theta));
    (exp_so3(&w) - closed).amax()
}

fn gradient_slot(rng: &mut ChaCha8Rng, slot: usize) -> f64 {
    let params = random_params(rng);
    let p = random_point(rng);
    let analytic = gradient(&p, &params).to_array();
    let base = p.to_array();
    let mut num = 0.0f64;
    let mut den = 0.0f64;
    for c in 3 * slot..3 * slot + 3 {
        let mut plus = base;
        let mut minus = base;
        plus[c] += FD_STEP;
        minus[c] -= FD_STEP;
        let fd = (density(&PhasePoint::from_array(&plus), &params) - density(&PhasePoint::from_array(&minus), &params))
            / (2.0 * FD_STEP);
        num = num.max((fd - analytic[c]).abs());
        den = den.max(analytic[c].abs());
    }
    num / den.max(1.0)
}

fn rotation_invariance(rng: &mut ChaCha8Rng, _: &StructureConstants) -> f64 {
    let params = random_isotropic_params(rng);
    let p = random_point(rng);
    let r = random_rotation(rng);
    (density(&p.map(|v| r * v), &params) - density(&p, &params)).abs()
}

fn sign_structure(rng: &mut ChaCha8Rng, _: &StructureConstants) -> f64 {
    let params = random_params(rng);
    let (pi_s, pi_t) = (rv(rng, 1.0), rv(rng, 1.0));
    let p = PhasePoint::new(Vec3::zeros(), Vec3::zeros(), Vec3::zeros(), pi_s, pi_t);
    let v2 = params.wave_speed * params.wave_speed;
    let expect = 0.5 * pi_s.dot(&pi_s) - 0.5 * v2 * pi_t.dot(&pi_t) + params.potential.value(&Vec3::zeros());
    (density(&p, &params) - expect).abs()
}

fn reduction_identity(rng: &mut ChaCha8Rng, c: &StructureConstants) -> f64 {
    let params = random_params(rng);
    let p = random_point(rng);
    let f = random_form(rng);
    let dh = gradient(&p, &params);
    (full_bracket_invariant(&f, &p, &dh, c) - reduced_bracket(&f, &p, &dh)).abs()
}

fn lie_poisson_antisymmetry(rng: &mut ChaCha8Rng, _: &StructureConstants) -> f64 {
    let (xi, mu, v) = (rv(rng, 1.0), rv(rng, 1.0), rv(rng, 1.0));
    (lie_poisson_bracket(&xi, &mu, &v) + lie_poisson_bracket(&v, &mu, &xi)).abs()
}

fn lie_poisson_ad_star(rng: &mut ChaCha8Rng, _: &StructureConstants) -> f64 {
    let (xi, mu, v) = (rv(rng, 1.0), rv(rng, 1.0), rv(rng, 1.0));
    (lie_poisson_bracket(&xi, &mu, &v) + ad_star(&xi, &mu).dot(&v)).abs()
}

fn horizontal_flat(rng: &mut ChaCha8Rng, c: &StructureConstants) -> f64 {
    let p = random_point(rng);
    let f = FormValue::constant(rv(rng, 1.0), rv(rng, 1.0));
    horizontal_differential(&f, &p, &ConnectionCoefficients::default(), c).abs()
}

fn horizontal_linearity(rng: &mut ChaCha8Rng, c: &StructureConstants) -> f64 {
    let p = random_point(rng);
    let conn = random_connection(rng);
    let (f1, f2) = (random_form(rng), random_form(rng));
    let l = rng.random_range(0.0..1.0);
    let mix = |a: Vec3, b: Vec3| a * l + b * (1.0 - l);
    let f = FormValue {
        xi: mix(f1.xi, f2.xi),
        y: mix(f1.y, f2.y),
        dxi_ds: mix(f1.dxi_ds, f2.dxi_ds),
        dy_ds: mix(f1.dy_ds, f2.dy_ds),
        omega_h: [0, 1].map(|i| l * f1.omega_h[i] + (1.0 - l) * f2.omega_h[i]),
        upsilon: [0, 1].map(|i| l * f1.upsilon[i] + (1.0 - l) * f2.upsilon[i]),
    };
    let lhs = horizontal_differential(&f, &p, &conn, c);
    let rhs = l * horizontal_differential(&f1, &p, &conn, c) + (1.0 - l) * horizontal_differential(&f2, &p, &conn, c);
    (lhs - rhs).abs()
}

/// Hand-evaluated values: `Λ_k` alone gives `−Σ_i μ^i·(Λ_i × ξ)`; a lone
/// `Γ^s_{st} = g` gives `g (ξ·μ^t + Y·π^t)`.
fn horizontal_constant_connection(rng: &mut ChaCha8Rng, c: &StructureConstants) -> f64 {
    let p = random_point(rng);
    let f = FormValue::constant(rv(rng, 1.0), rv(rng, 1.0));
    let mut conn = ConnectionCoefficients {
        lambda_k: [rv(rng, 1.0), rv(rng, 1.0)],
        ..Default::default()
    };
    let expect: f64 = (0..2).map(|i| -p.mu[i].dot(&conn.lambda_k[i].cross(&f.xi))).sum();
    let e1 = (horizontal_differential(&f, &p, &conn, c) - expect).abs();

    let g = rng.random_range(-1.0..1.0);
    conn = ConnectionCoefficients::default();
    conn.christoffel[S][S][T] = g;
    let expect = g * (f.xi.dot(&p.mu[T]) + f.y.dot(&p.pi[T]));
    e1.max((horizontal_differential(&f, &p, &conn, c) - expect).abs())
}

fn d_ds_skew(rng: &mut ChaCha8Rng, _: &StructureConstants) -> f64 {
    let n = rng.random_range(8..64);
    let grid = Grid1D::new(n, rng.random_range(0.5..10.0)).unwrap();
    let f: Vec<Vec3> = (0..n).map(|_| rv(rng, 1.0)).collect();
    let g: Vec<Vec3> = (0..n).map(|_| rv(rng, 1.0)).collect();
    let df = d_ds(&f, &grid).unwrap();
    let dg = d_ds(&g, &grid).unwrap();
    let lhs: f64 = f.iter().zip(&dg).map(|(a, b)| a.dot(b)).sum();
    let rhs: f64 = df.iter().zip(&g).map(|(a, b)| a.dot(b)).sum();
    (lhs + rhs).abs() * grid.spacing()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn one_trial_lists_every_check_once() {
        let r = identity_suite(7, 1).unwrap();
        assert_eq!(r.checks.len(), CHECK_NAMES.len());
        let mut names: Vec<_> = r.checks.iter().map(|c| c.name.as_str()).collect();
        names.dedup();
        assert_eq!(names.len(), CHECK_NAMES.len());
        assert!(r.all_passed, "{r:#?}");
    }

    #[test]
    fn deterministic() {
        assert_eq!(identity_suite(3, 20).unwrap(), identity_suite(3, 20).unwrap());
    }

    #[test]
    fn zero_trials_and_unknown_override_are_errors() {
        assert!(identity_suite(1, 0).is_err());
        let mut o = SuiteOptions::default();
        o.tolerances.insert("nope".into(), 1.0);
        assert!(identity_suite_with(1, 1, &o).is_err());
    }

    #[test]
    fn perturbed_constants_fail_jacobi_and_reduction() {
        let o = SuiteOptions {
            constants: StructureConstants::so3().perturbed(2, 1, 0, 1e-6),
            ..Default::default()
        };
        let r = identity_suite_with(42, 50, &o).unwrap();
        assert!(!r.all_passed);
        assert!(!r.check("algebra.jacobi").unwrap().passed);
        assert!(!r.check("brackets.reduction_identity").unwrap().passed);
        assert!(r.check("hamiltonian.gradient_rho").unwrap().passed);
    }

    #[test]
    fn tolerance_override_applies() {
        let mut o = SuiteOptions::default();
        o.tolerances.insert("hamiltonian.gradient_rho".into(), 0.0);
        let r = identity_suite_with(42, 5, &o).unwrap();
        let c = r.check("hamiltonian.gradient_rho").unwrap();
        assert_eq!(c.tolerance, 0.0);
        assert!(!c.passed);
    }
}
