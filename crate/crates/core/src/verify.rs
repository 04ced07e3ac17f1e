//! Self-verification suites run by `hetphase verify`.
//!
//! Each suite compares a closed-form result against an independent route to
//! the same quantity and reports the worst error seen.

use std::f64::consts::PI;
use std::fmt;
use std::time::{Duration, Instant};

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::Result;
use crate::exec::Execution;
use crate::fock::{cutoff_for, displace_signal_with, mean_photons, mean_photons_analytic, twin_beams, z_moments_with};
use crate::heterodyne::{density_closed, density_series, HeterodyneModel};
use crate::phase::{phase_density, PhaseDistribution};
use crate::quadrature::adaptive_simpson;
use crate::special_fn::check_hermite_laguerre;
use crate::TwinBeamParam;

/// Soft runtime budget; exceeding it only produces a warning.
pub const SOFT_BUDGET: Duration = Duration::from_secs(60);

pub const LATTICE_LAMBDAS: [f64; 5] = [0.0, 0.25, 0.5, 0.75, 0.9];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VerifyOptions {
    /// Added to the expected `Δ²` in the moment suite. Zero in normal runs;
    /// a nonzero value checks that the suite actually detects a wrong law.
    pub variance_perturbation: f64,
    pub exec: Execution,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        Self { variance_perturbation: 0.0, exec: Execution::best() }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SuiteResult {
    pub name: &'static str,
    pub checks: usize,
    pub worst: f64,
    pub tolerance: f64,
}

impl SuiteResult {
    pub fn passed(&self) -> bool {
        self.worst <= self.tolerance
    }
}

impl fmt::Display for SuiteResult {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} {:<22} worst={:.3e} tol={:.0e} checks={}",
            if self.passed() { "PASS" } else { "FAIL" },
            self.name,
            self.worst,
            self.tolerance,
            self.checks
        )
    }
}

#[derive(Debug, Clone)]
pub struct VerifyReport {
    pub suites: Vec<SuiteResult>,
    pub elapsed: Duration,
}

impl VerifyReport {
    pub fn all_passed(&self) -> bool {
        self.suites.iter().all(SuiteResult::passed)
    }

    pub fn over_budget(&self) -> bool {
        self.elapsed > SOFT_BUDGET
    }
}

fn worst_of(errors: impl IntoIterator<Item = f64>) -> (usize, f64) {
    errors.into_iter().fold((0, 0.0), |(n, w), e| (n + 1, if e.is_nan() || e > w { e } else { w }))
}

/// Quadrature against closed form for `n ≤ 20`, `α ≤ 10` at 100 random
/// `(y, t) ∈ [-2, 2]²`.
pub fn hermite_laguerre_suite(seed: u64, exec: Execution) -> Result<SuiteResult> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let points: Vec<(f64, f64)> = (0..100).map(|_| (rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0))).collect();
    let cases: Vec<(u32, u32)> = (0..=20).flat_map(|n| (0..=10).map(move |a| (n, a))).collect();
    let per_case = exec.map_slice(&cases, |&(n, a)| -> Result<f64> {
        let mut worst = 0.0f64;
        for &(y, t) in &points {
            worst = worst.max(check_hermite_laguerre(n, a, y, t)?.relative_error());
        }
        Ok(worst)
    });
    let worst = per_case.into_iter().collect::<Result<Vec<_>>>()?;
    let (_, w) = worst_of(worst);
    Ok(SuiteResult { name: "hermite-laguerre", checks: cases.len() * points.len(), worst: w, tolerance: 1e-8 })
}

/// Laguerre series against the Gaussian closed form on
/// `λ × |z-w| ∈ [0, 4]` in steps of 0.25.
pub fn series_lattice_suite(exec: Execution) -> Result<SuiteResult> {
    let w = Complex64::from_polar(1.5, 0.3);
    let mut cases = Vec::new();
    for &lambda in &LATTICE_LAMBDAS {
        for k in 0..=16 {
            cases.push((lambda, 0.25 * k as f64));
        }
    }
    let errors = exec.map_slice(&cases, |&(lambda, r)| -> Result<f64> {
        let model = HeterodyneModel::from_parts(lambda, w, 1.0)?;
        let z = w + Complex64::from_polar(r, -1.1);
        let closed = density_closed(z, &model);
        let series = density_series(z, &model, 1e-12)?;
        Ok((series - closed).abs() / closed)
    });
    let (checks, worst) = worst_of(errors.into_iter().collect::<Result<Vec<_>>>()?);
    Ok(SuiteResult { name: "series-vs-closed", checks, worst, tolerance: 1e-8 })
}

/// Signal displacements used by the Fock-space suites.
pub fn fock_displacements() -> Vec<Complex64> {
    vec![
        Complex64::new(0.0, 0.0),
        Complex64::new(0.5, 0.0),
        Complex64::from_polar(1.0, 0.9),
        Complex64::from_polar(2.0, -2.2),
    ]
}

/// Cutoff targeting a total truncation defect of `1e-8`.
pub const FOCK_DEFECT: f64 = 1e-8;

/// Displaced twin beams in truncated Fock space: the photocurrent variance
/// must follow `(1-λ)/(1+λ)` and the mean must equal `w`.
pub fn fock_moment_suite(opts: &VerifyOptions) -> Result<SuiteResult> {
    let cases = fock_cases();
    let perturb = opts.variance_perturbation;
    let errors = opts.exec.map_slice(&cases, |&(lambda, w)| -> Result<f64> {
        let p = TwinBeamParam::new(lambda)?;
        let n = cutoff_for(p, w, FOCK_DEFECT)?;
        let state = displace_signal_with(&twin_beams(p, n), w, FOCK_DEFECT)?;
        let m = z_moments_with(&state, FOCK_DEFECT)?;
        let expected = (1.0 - lambda) / (1.0 + lambda) + perturb;
        Ok((m.second_central - expected).abs().max((m.mean - w).norm()))
    });
    let (checks, worst) = worst_of(errors.into_iter().collect::<Result<Vec<_>>>()?);
    Ok(SuiteResult { name: "fock-moments", checks, worst, tolerance: 1e-4 })
}

/// Mean photon number of the truncated state against `|w|² + 2λ²/(1-λ²)`,
/// relative.
pub fn fock_photon_suite(exec: Execution) -> Result<SuiteResult> {
    let cases = fock_cases();
    let errors = exec.map_slice(&cases, |&(lambda, w)| -> Result<f64> {
        let p = TwinBeamParam::new(lambda)?;
        let n = cutoff_for(p, w, FOCK_DEFECT)?;
        let state = displace_signal_with(&twin_beams(p, n), w, FOCK_DEFECT)?;
        let want = mean_photons_analytic(p, w);
        let got = mean_photons(&state) / state.norm_sqr();
        Ok(if want == 0.0 { got.abs() } else { (got - want).abs() / want })
    });
    let (checks, worst) = worst_of(errors.into_iter().collect::<Result<Vec<_>>>()?);
    Ok(SuiteResult { name: "fock-photons", checks, worst, tolerance: 1e-5 })
}

fn fock_cases() -> Vec<(f64, Complex64)> {
    LATTICE_LAMBDAS.iter().flat_map(|&l| fock_displacements().into_iter().map(move |w| (l, w))).collect()
}

/// The `(λ, w, η)` lattice of the phase checks.
pub fn phase_lattice() -> Vec<HeterodyneModel> {
    let mut out = Vec::new();
    for &lambda in &[0.0, 0.5, 0.9, 0.99] {
        for &r in &[0.0, 0.5, 2.0, 10.0] {
            for &eta in &[1.0, 0.8, 0.5] {
                out.push(HeterodyneModel::from_parts(lambda, Complex64::from_polar(r, 0.4), eta).expect("lattice"));
            }
        }
    }
    out
}

pub const PHASE_GRID: usize = 4096;
const RADIAL_ANGLES: usize = 24;

/// Normalization of `p(φ)`, radial marginalization of the 2-D density onto
/// `p(φ)`, and 2-D normalization over a disk of radius `6Δ` about `w`.
pub fn normalization_suite(exec: Execution) -> Result<SuiteResult> {
    let lattice = phase_lattice();
    let errors = exec.map_slice(&lattice, |model| -> Result<f64> {
        let dist = PhaseDistribution::compute(model, PHASE_GRID, Execution::Sequential)?;
        let mut worst = (dist.integral() - 1.0).abs();
        let d = model.variance().sqrt();
        let r_max = model.w.norm() + 12.0 * d;
        for k in 0..RADIAL_ANGLES {
            let phi = -PI + (k as f64 + 0.5) * 2.0 * PI / RADIAL_ANGLES as f64;
            let dir = Complex64::from_polar(1.0, phi);
            let radial = adaptive_simpson(|r| r * density_closed(dir * r, model), 0.0, r_max, 1e-12, 16)?;
            worst = worst.max((radial - phase_density(phi, model)).abs());
        }
        worst = worst.max((disk_mass(model, 6.0)? - 1.0).abs());
        Ok(worst)
    });
    let (checks, worst) = worst_of(errors.into_iter().collect::<Result<Vec<_>>>()?);
    Ok(SuiteResult { name: "normalization", checks, worst, tolerance: 1e-6 })
}

/// `∫ ρ(z) d²z` over the disk `|z - w| ≤ radius·Δ`, by nested quadrature in
/// polar coordinates about `w`.
pub fn disk_mass(model: &HeterodyneModel, radius: f64) -> Result<f64> {
    let d = model.variance().sqrt();
    let rho_max = radius * d;
    let inner = |phi: f64| {
        let dir = Complex64::from_polar(1.0, phi);
        adaptive_simpson(|rho| rho * density_closed(model.w + dir * rho, model), 0.0, rho_max, 1e-13, 8).unwrap_or(f64::NAN)
    };
    let mass = adaptive_simpson(inner, 0.0, 2.0 * PI, 1e-11, 8)?;
    if mass.is_nan() {
        return Err(crate::Error::Quadrature("disk integral failed".into()));
    }
    Ok(mass)
}

pub fn run_all(opts: &VerifyOptions) -> Result<VerifyReport> {
    let start = Instant::now();
    let suites = vec![
        hermite_laguerre_suite(6, opts.exec)?,
        series_lattice_suite(opts.exec)?,
        fock_moment_suite(opts)?,
        fock_photon_suite(opts.exec)?,
        normalization_suite(opts.exec)?,
    ];
    Ok(VerifyReport { suites, elapsed: start.elapsed() })
}
