//! Heterodyne photocurrent statistics for displaced twin beams: eigenstate
//! coefficients of `Ẑ = a + b†`, the outcome density as a Laguerre series
//! and in closed Gaussian form, the variance law with detector efficiency,
//! and reproducible Monte Carlo sampling of outcomes.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::fock::{ComplexAmplitude, TwinBeamParam, TwoModeFockState};
use crate::mp::Fixed;
use crate::special_fn::{laguerre_sequence, log_factorial};

/// Twin-beam parameter, prepared signal amplitude `w`, and detector
/// quantum efficiency `η ∈ (0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HeterodyneModel {
    pub twin: TwinBeamParam,
    pub w: ComplexAmplitude,
    pub eta: f64,
}

impl HeterodyneModel {
    pub fn new(twin: TwinBeamParam, w: ComplexAmplitude, eta: f64) -> Result<Self> {
        check_eta(eta)?;
        if !(w.re.is_finite() && w.im.is_finite()) {
            return Err(Error::InvalidParameter("w must be finite".into()));
        }
        Ok(Self { twin, w, eta })
    }

    /// Convenience constructor from raw numbers.
    pub fn from_parts(lambda: f64, w: ComplexAmplitude, eta: f64) -> Result<Self> {
        Self::new(TwinBeamParam::new(lambda)?, w, eta)
    }

    pub fn lambda(&self) -> f64 {
        self.twin.lambda()
    }

    /// `Δ²_λ(η)`
    pub fn variance(&self) -> f64 {
        variance_unchecked(self.twin, self.eta)
    }
}

fn check_eta(eta: f64) -> Result<()> {
    if !(eta > 0.0 && eta <= 1.0) {
        return Err(Error::InvalidParameter(format!("eta must lie in (0, 1], got {eta}")));
    }
    Ok(())
}

fn variance_unchecked(p: TwinBeamParam, eta: f64) -> f64 {
    let l = p.lambda();
    (1.0 - l) / (1.0 + l) + (1.0 - eta) / eta
}

/// Outcome variance `Δ²_λ(η) = (1-λ)/(1+λ) + (1-η)/η`.
pub fn variance(p: TwinBeamParam, eta: f64) -> Result<f64> {
    check_eta(eta)?;
    Ok(variance_unchecked(p, eta))
}

/// Number-basis coefficient `c_{n,m}(z, z̄)` of the `Ẑ` eigenstate with
/// eigenvalue `z` (global phase `e^{i Re z Im z}` omitted).
pub fn eigenstate_coeff(n: usize, m: usize, z: ComplexAmplitude) -> Complex64 {
    if n > m {
        return eigenstate_coeff(m, n, z).conj();
    }
    let alpha = m - n;
    let x = z.norm_sqr();
    let lag = *laguerre_sequence(alpha as u32, n, x).last().expect("non-empty");
    let sign = if n.is_multiple_of(2) { 1.0 } else { -1.0 };
    if alpha == 0 {
        return Complex64::new(sign * lag * (-0.5 * x).exp() / PI.sqrt(), 0.0);
    }
    if x == 0.0 {
        return Complex64::new(0.0, 0.0);
    }
    let log_mag = 0.5 * (log_factorial(n as u64) - log_factorial(m as u64)) + alpha as f64 * z.norm().ln()
        - 0.5 * x
        - 0.5 * PI.ln();
    Complex64::from_polar(sign * lag * log_mag.exp(), -(alpha as f64) * z.arg())
}

/// All coefficients `c_{n,m}(z)` for `n, m ≤ cutoff`, row-major in `n`.
pub fn eigenstate_matrix(z: ComplexAmplitude, cutoff: usize) -> Vec<Complex64> {
    let dim = cutoff + 1;
    let x = z.norm_sqr();
    let mut out = vec![Complex64::new(0.0, 0.0); dim * dim];
    for alpha in 0..dim {
        if alpha > 0 && x == 0.0 {
            break;
        }
        let lag = laguerre_sequence(alpha as u32, cutoff - alpha, x);
        let phase = Complex64::from_polar(1.0, -(alpha as f64) * z.arg());
        let ln_r = if alpha > 0 { alpha as f64 * z.norm().ln() } else { 0.0 };
        for (n, l) in lag.iter().enumerate() {
            let m = n + alpha;
            let sign = if n.is_multiple_of(2) { 1.0 } else { -1.0 };
            let log_mag = 0.5 * (log_factorial(n as u64) - log_factorial(m as u64)) + ln_r - 0.5 * x - 0.5 * PI.ln();
            let c = phase * (sign * l * log_mag.exp());
            out[n * dim + m] = c;
            out[m * dim + n] = c.conj();
        }
    }
    out
}

/// `⟨⟨z|ψ⟩⟩` restricted to the truncated block of `state`.
pub fn eigenstate_overlap(z: ComplexAmplitude, state: &TwoModeFockState) -> Complex64 {
    let c = eigenstate_matrix(z, state.cutoff());
    c.iter().zip(state.coeffs()).map(|(a, b)| a.conj() * b).sum()
}

/// Closed-form outcome density `e^{-|z-w|²/Δ²} / (πΔ²)` per unit `d²z`.
pub fn density_closed(z: ComplexAmplitude, model: &HeterodyneModel) -> f64 {
    let d2 = model.variance();
    (-(z - model.w).norm_sqr() / d2).exp() / (PI * d2)
}

const SERIES_LAMBDA_CEILING: f64 = 1.0 - 1e-9;
const MAX_SERIES_TERMS: usize = 50_000_000;
const MAX_WORKING_BITS: u32 = 1 << 14;

/// Outcome density from the Laguerre series
/// `(1-λ²)/π e^{-x} |Σ_n λ^n L_n(x)|²`, `x = |z-w|²`, summed until the
/// envelope `|L_n(x)| ≤ e^{x/2}` bounds the relative tail by `tol`.
///
/// The sum is first attempted in `f64`; when its running rounding estimate
/// is too large relative to the (heavily cancelled) result it is redone in
/// binary fixed point at increasing precision.
pub fn density_series(z: ComplexAmplitude, model: &HeterodyneModel, tol: f64) -> Result<f64> {
    if model.eta != 1.0 {
        return Err(Error::InvalidParameter("series form is defined for eta = 1 only".into()));
    }
    if !(tol > 0.0 && tol < 1.0) {
        return Err(Error::InvalidParameter(format!("tol must lie in (0, 1), got {tol}")));
    }
    let lambda = model.lambda();
    if lambda >= SERIES_LAMBDA_CEILING {
        return Err(Error::SeriesNonConvergence(format!(
            "lambda = {lambda} too close to 1; use the closed form"
        )));
    }
    let x = (z - model.w).norm_sqr();
    let ln_sum = if lambda == 0.0 {
        0.0
    } else {
        match laguerre_sum_f64(lambda, x, tol)? {
            Some(s) => s,
            None => laguerre_sum_fixed(lambda, x, tol)?,
        }
    };
    Ok((((1.0 - lambda * lambda) / PI).ln() + 2.0 * ln_sum - x).exp())
}

// ln of the rigorous tail bound e^{x/2} λ^{N+1}/(1-λ) after summing terms 0..=N.
fn ln_tail_bound(lambda: f64, x: f64, last: usize) -> f64 {
    0.5 * x + (last as f64 + 1.0) * lambda.ln() - (1.0 - lambda).ln()
}

// Returns ln|Σ λ^n L_n(x)| when f64 rounding is provably small enough.
fn laguerre_sum_f64(lambda: f64, x: f64, tol: f64) -> Result<Option<f64>> {
    let ln_target = (0.5 * tol).ln();
    let (mut prev, mut cur) = (1.0f64, 1.0 - x);
    let mut pw = lambda;
    let mut sum = 1.0 + lambda * cur;
    let mut abs_sum = 1.0 + (lambda * cur).abs();
    let mut n = 1usize;
    // rounding grows with the absolute series; once it dominates, stop and escalate
    let rounding = |n: usize, abs_sum: f64| (n as f64 + 1.0) * 4.0 * f64::EPSILON * abs_sum;
    while ln_tail_bound(lambda, x, n) > ln_target + sum.abs().max(rounding(n, abs_sum)).ln() {
        if n >= MAX_SERIES_TERMS {
            return Err(Error::SeriesNonConvergence(format!("no convergence after {n} terms")));
        }
        let nf = n as f64;
        let next = ((2.0 * nf + 1.0 - x) * cur - nf * prev) / (nf + 1.0);
        prev = cur;
        cur = next;
        pw *= lambda;
        let term = pw * cur;
        sum += term;
        abs_sum += term.abs();
        n += 1;
    }
    if rounding(n, abs_sum) <= 0.25 * tol * sum.abs() {
        Ok(Some(sum.abs().ln()))
    } else {
        Ok(None)
    }
}

fn laguerre_sum_fixed(lambda: f64, x: f64, tol: f64) -> Result<f64> {
    let ln_target = (0.5 * tol).ln();
    let mut bits = 256u32;
    loop {
        let lam = Fixed::from_f64(lambda, bits);
        let xf = Fixed::from_f64(x, bits);
        let mut prev = Fixed::from_i64(1, bits);
        let mut cur = &prev - &xf;
        let mut pw = lam.clone();
        let mut sum = &prev + &(&pw * &cur);
        let mut max_log2 = cur.log2_abs().max(0.0);
        let mut n = 1usize;
        // error ≲ (N+1)² · 2^{-bits} · max|L_n|
        let err_log2 = |n: usize, max_log2: f64| 2.0 * ((n + 1) as f64).log2() + 2.0 - bits as f64 + max_log2;
        loop {
            let ln_sum = sum.log2_abs().max(err_log2(n, max_log2)) * std::f64::consts::LN_2;
            if ln_tail_bound(lambda, x, n) <= ln_target + ln_sum {
                break;
            }
            if n >= MAX_SERIES_TERMS {
                return Err(Error::SeriesNonConvergence(format!("no convergence after {n} terms")));
            }
            let coef = &Fixed::from_i64(2 * n as i64 + 1, bits) - &xf;
            let next = (&(&coef * &cur) - &(&prev * &Fixed::from_i64(n as i64, bits))).div_u64(n as u64 + 1);
            prev = cur;
            cur = next;
            pw = &pw * &lam;
            sum = &sum + &(&pw * &cur);
            max_log2 = max_log2.max(cur.log2_abs());
            n += 1;
        }
        if !sum.is_zero() && err_log2(n, max_log2) <= (0.25 * tol).log2() + sum.log2_abs() {
            return Ok(sum.abs().log2_abs() * std::f64::consts::LN_2);
        }
        if bits >= MAX_WORKING_BITS {
            return Err(Error::SeriesNonConvergence(format!(
                "cancellation exceeds {MAX_WORKING_BITS}-bit working precision"
            )));
        }
        bits *= 2;
    }
}

/// Seeded batch of heterodyne outcomes.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleBatch {
    pub seed: u64,
    pub count: usize,
    pub outcomes: Vec<ComplexAmplitude>,
}

/// Samples per independently seeded shard.
pub const SHARD_LEN: usize = 1 << 15;

pub fn sample(model: &HeterodyneModel, count: usize, seed: u64) -> Result<SampleBatch> {
    sample_with(model, count, seed, Execution::best())
}

/// Draws `z = w + Δ (g₁ + i g₂)/√2` with standard normal `g₁, g₂`.
///
/// Shard `k` uses ChaCha8 keyed by `seed` on stream `k`, so the batch is
/// identical for every execution strategy and thread count.
pub fn sample_with(model: &HeterodyneModel, count: usize, seed: u64, exec: Execution) -> Result<SampleBatch> {
    if count == 0 {
        return Err(Error::InvalidParameter("count must be at least 1".into()));
    }
    let scale = (0.5 * model.variance()).sqrt();
    let w = model.w;
    let shards = count.div_ceil(SHARD_LEN);
    let parts = exec.map_indexed(shards, |k| {
        let len = SHARD_LEN.min(count - k * SHARD_LEN);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(k as u64);
        (0..len)
            .map(|_| {
                let g1: f64 = StandardNormal.sample(&mut rng);
                let g2: f64 = StandardNormal.sample(&mut rng);
                w + Complex64::new(g1, g2) * scale
            })
            .collect::<Vec<_>>()
    });
    let outcomes: Vec<_> = parts.into_iter().flatten().collect();
    Ok(SampleBatch { seed, count, outcomes })
}

/// One row of the eigenstate-approach table.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelPoint {
    pub lambda: f64,
    pub variance: f64,
    /// Outcome density at `z = w`, `1/(πΔ²)`.
    pub peak_density: f64,
}

/// Width of `|⟨⟨z|w⟩⟩_λ|²` along a sequence of `λ` (unit efficiency): the
/// kernel narrows toward a delta function as `λ → 1⁻`.
pub fn kernel_concentration(lambdas: &[f64], w: ComplexAmplitude) -> Result<Vec<KernelPoint>> {
    lambdas
        .iter()
        .map(|&l| {
            let model = HeterodyneModel::from_parts(l, w, 1.0)?;
            Ok(KernelPoint { lambda: l, variance: model.variance(), peak_density: density_closed(w, &model) })
        })
        .collect()
}
