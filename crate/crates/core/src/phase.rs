//! Phase statistics of `arg Ẑ`: the exact phase marginal, its Gaussian
//! limit, r.m.s. sensitivity, and the optimal split of a fixed photon
//! budget between signal displacement and twin beams.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::fock::TwinBeamParam;
use crate::heterodyne::{HeterodyneModel, SampleBatch};
use crate::quadrature::adaptive_simpson;
use crate::special_fn::erfc;

/// Phase density `p(θ + δ)` as a function of the offset `δ` from `θ = arg w`.
fn density_at_offset(delta: f64, model: &HeterodyneModel) -> f64 {
    let d2 = model.variance();
    let d = d2.sqrt();
    let r = model.w.norm();
    let uniform = (-r * r / d2).exp() / (2.0 * PI);
    if r == 0.0 {
        return uniform;
    }
    let (s, c) = delta.sin_cos();
    // 1 + erf(u) = erfc(-u) keeps precision when u is large and negative
    let signal = r / (PI * d) * c * (0.5 * PI.sqrt()) * erfc(-r * c / d) * (-(r * r / d2) * s * s).exp();
    uniform + signal
}

/// Exact phase marginal `p(φ)` of the outcome density (2π-periodic).
pub fn phase_density(phi: f64, model: &HeterodyneModel) -> f64 {
    density_at_offset(phi - model.w.arg(), model)
}

/// `δ` wrapped into `(-π, π]`.
pub fn wrap_angle(delta: f64) -> f64 {
    let r = (delta + PI).rem_euclid(2.0 * PI) - PI;
    if r <= -PI {
        r + 2.0 * PI
    } else {
        r
    }
}

/// Validity guard of the Gaussian phase form: `Δ/|w| ≤ 0.2`.
pub const GAUSSIAN_REGIME_RATIO: f64 = 0.2;

fn gaussian_guard(model: &HeterodyneModel) -> Result<()> {
    let r = model.w.norm();
    let ratio = model.variance().sqrt() / r;
    if r == 0.0 || ratio > GAUSSIAN_REGIME_RATIO {
        return Err(Error::Regime(format!(
            "Gaussian phase form needs Δ/|w| <= {GAUSSIAN_REGIME_RATIO}, have {ratio}"
        )));
    }
    Ok(())
}

/// Gaussian approximation `|w|/(√π Δ) exp[-(|w|²/Δ²)(φ-θ)²]`, with `φ - θ`
/// wrapped into `(-π, π]`.
pub fn phase_density_gaussian(phi: f64, model: &HeterodyneModel) -> Result<f64> {
    gaussian_guard(model)?;
    let d2 = model.variance();
    let r = model.w.norm();
    let delta = wrap_angle(phi - model.w.arg());
    Ok(r / (PI.sqrt() * d2.sqrt()) * (-(r * r / d2) * delta * delta).exp())
}

/// Gaussian r.m.s. sensitivity `Δ/(√2 |w|)`.
pub fn phase_rms_gaussian(model: &HeterodyneModel) -> Result<f64> {
    let r = model.w.norm();
    if r == 0.0 {
        return Err(Error::InvalidParameter("phase r.m.s. undefined for zero signal".into()));
    }
    Ok(model.variance().sqrt() / (std::f64::consts::SQRT_2 * r))
}

/// Absolute tolerance on the second-moment integral.
pub const RMS_QUADRATURE_TOL: f64 = 1e-10;

/// `√(∫_{θ-π}^{θ+π} (φ-θ)² p(φ) dφ)` by adaptive quadrature over the exact
/// density, uniform term included. `|w| = 0` gives the uniform value `π/√3`.
pub fn phase_rms_exact(model: &HeterodyneModel) -> Result<f64> {
    let integrand = |delta: f64| delta * delta * density_at_offset(delta, model);
    let r = model.w.norm();
    // Split at a few peak widths so the narrow core gets its own panels.
    let width = if r > 0.0 { model.variance().sqrt() / r } else { PI };
    let knee = (12.0 * width).min(PI);
    let half_tol = 0.25 * RMS_QUADRATURE_TOL;
    let mut second = adaptive_simpson(integrand, 0.0, knee, half_tol, 32)?;
    if knee < PI {
        second += adaptive_simpson(integrand, knee, PI, half_tol, 32)?;
    }
    Ok((2.0 * second).sqrt())
}

/// Phase density sampled on a uniform grid over `(θ-π, θ+π]`.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseDistribution {
    pub theta: f64,
    pub grid: Vec<f64>,
    pub density: Vec<f64>,
}

impl PhaseDistribution {
    /// Grid point `k` sits at `θ + (k + 1 - M/2)·2π/M`, so index `k` and
    /// `M - 2 - k` are exact mirror images about `θ`.
    pub fn compute(model: &HeterodyneModel, points: usize, exec: Execution) -> Result<Self> {
        if points < 2 {
            return Err(Error::InvalidParameter("phase grid needs at least 2 points".into()));
        }
        let theta = model.w.arg();
        let offsets = Self::offsets(points);
        let density = exec.map_slice(&offsets, |&d| density_at_offset(d, model));
        let grid = offsets.iter().map(|d| theta + d).collect();
        Ok(Self { theta, grid, density })
    }

    pub fn offsets(points: usize) -> Vec<f64> {
        let h = 2.0 * PI / points as f64;
        let half = 0.5 * points as f64;
        (0..points).map(|k| ((k + 1) as f64 - half) * h).collect()
    }

    /// Trapezoidal rule over one full period (the grid wraps around).
    pub fn integral(&self) -> f64 {
        let h = 2.0 * PI / self.grid.len() as f64;
        h * self.density.iter().sum::<f64>()
    }
}

/// Outcome of the fixed-budget sensitivity optimization.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SensitivityResult {
    pub nbar: f64,
    pub w_sq_opt: f64,
    pub lambda_opt: f64,
    pub delta_phi_gauss: f64,
    pub delta_phi_exact: f64,
    pub gain: f64,
    /// `δφ_gauss · n̄`
    pub product: f64,
}

/// Tolerance on the split fraction `s = |w|²/n̄`.
pub const SPLIT_TOL: f64 = 1e-6;

/// Model that spends `s·n̄` photons on the displacement and the rest on twin
/// beams, using the exact photon count `n̄ = |w|² + 2λ²/(1-λ²)`.
pub fn split_model(nbar: f64, s: f64, eta: f64) -> Result<HeterodyneModel> {
    if !(nbar > 0.0 && nbar.is_finite()) {
        return Err(Error::InvalidParameter(format!("photon budget must be positive, got {nbar}")));
    }
    if !(s > 0.0 && s <= 1.0) {
        return Err(Error::InvalidParameter(format!("split fraction must lie in (0, 1], got {s}")));
    }
    let twin = (1.0 - s) * nbar;
    let lambda = (twin / (2.0 + twin)).sqrt();
    HeterodyneModel::new(TwinBeamParam::new(lambda)?, Complex64::new((s * nbar).sqrt(), 0.0), eta)
}

/// Gaussian sensitivity as a function of the split fraction.
pub fn split_objective(nbar: f64, s: f64, eta: f64) -> Result<f64> {
    phase_rms_gaussian(&split_model(nbar, s, eta)?)
}

/// Golden-section minimization of a unimodal `f` on `[a, b]`.
pub fn golden_section<F>(f: F, mut a: f64, mut b: f64, tol: f64) -> (f64, f64)
where
    F: Fn(f64) -> f64,
{
    let inv_phi = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    while (b - a).abs() > tol {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d);
        }
    }
    let x = 0.5 * (a + b);
    (x, f(x))
}

const SPLIT_FLOOR: f64 = 1e-9;

/// Minimizes the Gaussian sensitivity over the signal/twin-beam split of a
/// total budget `nbar`, then reports the exact r.m.s. at the optimum.
pub fn optimize_signal_split(nbar: f64, eta: f64) -> Result<SensitivityResult> {
    if !(nbar > 0.0 && nbar.is_finite()) {
        return Err(Error::InvalidParameter(format!("infeasible photon budget {nbar}")));
    }
    if !(eta > 0.0 && eta <= 1.0) {
        return Err(Error::InvalidParameter(format!("eta must lie in (0, 1], got {eta}")));
    }
    let objective = |s: f64| split_objective(nbar, s, eta).unwrap_or(f64::INFINITY);
    let (s, delta_phi_gauss) = golden_section(objective, SPLIT_FLOOR, 1.0, SPLIT_TOL);
    let model = split_model(nbar, s, eta)?;
    let delta_phi_exact = phase_rms_exact(&model)?;
    Ok(SensitivityResult {
        nbar,
        w_sq_opt: model.w.norm_sqr(),
        lambda_opt: model.lambda(),
        delta_phi_gauss,
        delta_phi_exact,
        gain: model.twin.gain(),
        product: delta_phi_gauss * nbar,
    })
}

/// Shot-noise sensitivity `√((1-η)/(2n̄))` of the inefficient-detector regime.
pub fn shot_noise_limit(nbar: f64, eta: f64) -> Result<f64> {
    if !(nbar > 0.0 && nbar.is_finite()) {
        return Err(Error::InvalidParameter(format!("photon budget must be positive, got {nbar}")));
    }
    if !(eta > 0.0 && eta < 1.0) {
        return Err(Error::InvalidParameter(format!("shot-noise regime needs eta in (0, 1), got {eta}")));
    }
    Ok(((1.0 - eta) / (2.0 * nbar)).sqrt())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GainTuning {
    pub gain: f64,
    pub lambda: f64,
    /// Detector losses `1-η` must stay well below this value.
    pub efficiency_threshold: f64,
}

/// Amplifier setting `g = n̄/4` for a budget `n̄ > 4`.
pub fn gain_tuning(nbar: f64) -> Result<GainTuning> {
    if !(nbar > 4.0 && nbar.is_finite()) {
        return Err(Error::InvalidParameter(format!("gain tuning needs nbar > 4, got {nbar}")));
    }
    let gain = 0.25 * nbar;
    Ok(GainTuning { gain, lambda: (1.0 - 1.0 / gain).sqrt(), efficiency_threshold: 2.0 / nbar })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhaseEstimate {
    pub theta_hat: f64,
    pub rms: f64,
}

/// Resultant-vector phase estimate and the sample standard deviation of the
/// outcome phases about it, each deviation wrapped into `(-π, π]`.
pub fn estimate_phase(batch: &SampleBatch) -> Result<PhaseEstimate> {
    let n = batch.outcomes.len();
    if n < 2 {
        return Err(Error::InvalidParameter("phase estimate needs at least 2 outcomes".into()));
    }
    let resultant: Complex64 = batch.outcomes.iter().sum();
    if resultant.norm() == 0.0 {
        return Err(Error::ZeroResultant);
    }
    let theta_hat = resultant.arg();
    let unit = (resultant / resultant.norm()).conj();
    let devs: Vec<f64> = batch.outcomes.iter().map(|z| (z * unit).arg()).collect();
    let mean = devs.iter().sum::<f64>() / n as f64;
    let ss: f64 = devs.iter().map(|d| (d - mean) * (d - mean)).sum();
    Ok(PhaseEstimate { theta_hat, rms: (ss / (n - 1) as f64).sqrt() })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::special_fn::erf;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn model(lambda: f64, w: Complex64, eta: f64) -> HeterodyneModel {
        HeterodyneModel::from_parts(lambda, w, eta).unwrap()
    }

    #[test]
    fn uniform_for_zero_signal() {
        for lambda in [0.0, 0.5, 0.99] {
            let m = model(lambda, c(0.0, 0.0), 1.0);
            for k in 0..50 {
                assert_eq!(phase_density(-3.0 + 0.13 * k as f64, &m), 1.0 / (2.0 * PI));
            }
        }
    }

    #[test]
    fn peak_value() {
        let m = model(0.5, c(3.0, 0.0), 1.0);
        let want = 0.5 * (-27.0f64).exp() / PI + 3.0 * 3f64.sqrt() / PI.sqrt() * (1.0 + erf(3.0 * 3f64.sqrt())) / 2.0;
        assert!((phase_density(0.0, &m) - want).abs() < 1e-13);
        assert!((want - 2.9317).abs() < 1e-4);
    }

    #[test]
    fn quadrature_angles_keep_only_uniform_term() {
        let w = Complex64::from_polar(2.0, 0.7);
        let m = model(0.3, w, 0.9);
        let want = (-4.0 / m.variance()).exp() / (2.0 * PI);
        for sign in [-1.0, 1.0] {
            let p = phase_density(0.7 + sign * PI / 2.0, &m);
            assert!((p - want).abs() < 1e-15);
        }
    }

    #[test]
    fn gaussian_form() {
        let m = model(0.0, c(10.0, 0.0), 1.0);
        let peak = 10.0 / PI.sqrt();
        assert!((phase_density_gaussian(0.0, &m).unwrap() - peak).abs() < 1e-12);
        assert!((phase_density_gaussian(0.1, &m).unwrap() - peak * (-1.0f64).exp()).abs() < 1e-12);
        assert!(matches!(
            phase_density_gaussian(0.0, &model(0.0, c(2.0, 0.0), 1.0)),
            Err(Error::Regime(_))
        ));
        assert!(phase_density_gaussian(0.0, &model(0.5, c(0.0, 0.0), 1.0)).is_err());
    }

    #[test]
    fn gaussian_tracks_exact_near_peak() {
        let m = model(0.9, Complex64::from_polar(5.0, 1.0), 1.0);
        let span = 3.0 * m.variance().sqrt() / (2f64.sqrt() * 5.0);
        let mut worst = 0.0f64;
        for k in 0..=200 {
            let phi = 1.0 - span + 2.0 * span * k as f64 / 200.0;
            let exact = phase_density(phi, &m);
            let gauss = phase_density_gaussian(phi, &m).unwrap();
            worst = worst.max((gauss / exact - 1.0).abs());
        }
        assert!(worst <= 0.01, "worst {worst}");
    }

    #[test]
    fn rms_gaussian_examples() {
        assert!((phase_rms_gaussian(&model(0.0, c(1.0, 0.0), 1.0)).unwrap() - 0.5f64.sqrt()).abs() < 1e-15);
        let v = phase_rms_gaussian(&model(0.99, c(10.0, 0.0), 1.0)).unwrap();
        assert!((v - (0.01f64 / 1.99).sqrt() / (2f64.sqrt() * 10.0)).abs() < 1e-15);
        assert!((v - 0.005013).abs() < 1e-6);
        // η with Δ²(η) = 2Δ²(1): at λ = 0, (1-η)/η = 1 ⇒ η = 1/2
        let a = phase_rms_gaussian(&model(0.0, c(3.0, 0.0), 1.0)).unwrap();
        let b = phase_rms_gaussian(&model(0.0, c(3.0, 0.0), 0.5)).unwrap();
        assert!((b / a - 2f64.sqrt()).abs() < 1e-14);
        assert!(phase_rms_gaussian(&model(0.5, c(0.0, 0.0), 1.0)).is_err());
    }

    #[test]
    fn rms_exact_examples() {
        let u = phase_rms_exact(&model(0.3, c(0.0, 0.0), 1.0)).unwrap();
        assert!((u - PI / 3f64.sqrt()).abs() < 1e-9);
        let m = model(0.99, c(10.0, 0.0), 1.0);
        let ratio = phase_rms_exact(&m).unwrap() / phase_rms_gaussian(&m).unwrap();
        assert!((ratio - 1.0).abs() < 0.01);
        // Weak signal: the Gaussian form overestimates the spread here. Oracle:
        // r.m.s. of arg z over 10⁶ sampled outcomes.
        let m = model(0.0, c(0.5, 0.0), 1.0);
        let weak = phase_rms_exact(&m).unwrap();
        let batch = crate::heterodyne::sample(&m, 1_000_000, 3).unwrap();
        let mc = (batch.outcomes.iter().map(|z| z.arg().powi(2)).sum::<f64>() / 1e6).sqrt();
        assert!((weak - mc).abs() < 0.005, "{weak} vs {mc}");
        assert!(weak < 2f64.sqrt() && weak < PI / 3f64.sqrt());
    }

    #[test]
    fn distribution_grid_symmetry_and_norm() {
        let m = model(0.5, Complex64::from_polar(2.0, -2.5), 0.8);
        let d = PhaseDistribution::compute(&m, 4096, Execution::best()).unwrap();
        assert!((d.integral() - 1.0).abs() < 1e-6);
        let n = d.grid.len();
        for k in 0..n - 1 {
            assert!((d.density[k] - d.density[n - 2 - k]).abs() <= 1e-12);
        }
        assert!((d.grid[n - 1] - (d.theta + PI)).abs() < 1e-12);
        assert!(d.grid.windows(2).all(|p| p[1] > p[0]));
        assert!(PhaseDistribution::compute(&m, 1, Execution::Sequential).is_err());
    }

    #[test]
    fn wrap_angle_range() {
        assert_eq!(wrap_angle(PI), PI);
        assert_eq!(wrap_angle(-PI), PI);
        assert!((wrap_angle(3.0 * PI + 0.25) - (-PI + 0.25)).abs() < 1e-12);
        assert!((wrap_angle(-0.5) + 0.5).abs() < 1e-15);
    }

    #[test]
    fn golden_section_quadratic() {
        let (x, fx) = golden_section(|x| (x - 0.3) * (x - 0.3), 0.0, 1.0, 1e-9);
        assert!((x - 0.3).abs() < 1e-9);
        assert!(fx < 1e-18);
    }

    #[test]
    fn optimize_examples() {
        let r = optimize_signal_split(200.0, 1.0).unwrap();
        assert!((r.w_sq_opt / 200.0 - 0.5).abs() < 0.05, "{r:?}");
        assert!((r.product - 0.995).abs() < 0.005, "{r:?}");
        assert!((r.gain - 1.0 / (1.0 - r.lambda_opt * r.lambda_opt)).abs() < 1e-9 * r.gain);
        let r = optimize_signal_split(1e4, 1.0).unwrap();
        assert!((r.product - 1.0).abs() < 0.01);
        let r = optimize_signal_split(200.0, 0.5).unwrap();
        assert!(r.delta_phi_gauss >= 0.9 * shot_noise_limit(200.0, 0.5).unwrap());
        assert!(optimize_signal_split(0.0, 1.0).is_err());
        assert!(optimize_signal_split(10.0, 0.0).is_err());
    }

    #[test]
    fn shot_noise_examples() {
        assert!((shot_noise_limit(50.0, 0.5).unwrap() - 0.005f64.sqrt()).abs() < 1e-15);
        let a = shot_noise_limit(50.0, 0.8).unwrap();
        assert!((shot_noise_limit(200.0, 0.8).unwrap() - 0.5 * a).abs() < 1e-15);
        assert!(shot_noise_limit(50.0, 1.0 - 1e-12).unwrap() < 1e-6);
        assert!(shot_noise_limit(50.0, 1.0).is_err());
    }

    #[test]
    fn gain_tuning_examples() {
        let g = gain_tuning(200.0).unwrap();
        assert_eq!(g.gain, 50.0);
        assert!((g.lambda - 0.98f64.sqrt()).abs() < 1e-15);
        assert!((g.efficiency_threshold - 0.01).abs() < 1e-15);
        let opt = optimize_signal_split(200.0, 1.0).unwrap();
        assert!((g.lambda / opt.lambda_opt - 1.0).abs() < 0.02);
        let g = gain_tuning(4.0 + 1e-9).unwrap();
        assert!(g.gain > 1.0 && g.lambda < 1e-4);
        let g = gain_tuning(1e4).unwrap();
        assert_eq!(g.gain, 2500.0);
        assert!((g.efficiency_threshold - 2e-4).abs() < 1e-18);
        assert!(gain_tuning(4.0).is_err());
    }

    #[test]
    fn estimate_phase_examples() {
        let theta0 = 2.2;
        let batch = SampleBatch { seed: 0, count: 5, outcomes: vec![Complex64::from_polar(1.0, theta0); 5] };
        let e = estimate_phase(&batch).unwrap();
        assert!((e.theta_hat - theta0).abs() < 1e-15);
        assert!(e.rms < 1e-15);

        let batch = SampleBatch { seed: 0, count: 2, outcomes: vec![c(1.0, 0.0), c(-1.0, 0.0)] };
        assert_eq!(estimate_phase(&batch), Err(Error::ZeroResultant));
        let one = SampleBatch { seed: 0, count: 1, outcomes: vec![c(1.0, 0.0)] };
        assert!(estimate_phase(&one).is_err());
    }

    #[test]
    fn estimate_phase_is_rotation_equivariant() {
        let outcomes: Vec<_> = (0..50).map(|k| Complex64::from_polar(1.0 + 0.01 * k as f64, 3.0 + 0.02 * (k % 7) as f64)).collect();
        let base = estimate_phase(&SampleBatch { seed: 0, count: 50, outcomes: outcomes.clone() }).unwrap();
        let alpha = 1.3;
        let rot = Complex64::from_polar(1.0, alpha);
        let rotated: Vec<_> = outcomes.iter().map(|z| z * rot).collect();
        let e = estimate_phase(&SampleBatch { seed: 0, count: 50, outcomes: rotated }).unwrap();
        assert!(wrap_angle(e.theta_hat - base.theta_hat - alpha).abs() < 1e-12);
        assert!((e.rms - base.rms).abs() < 1e-12);
    }
}
