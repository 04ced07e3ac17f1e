//! Truncated two-mode Fock space: twin beams, signal-mode displacement and
//! brute-force expectation values computed directly from coefficient
//! matrices. These serve as the independent oracle for the closed forms in
//! [`crate::heterodyne`] and [`crate::phase`].

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::special_fn::{laguerre_sequence, log_factorial};

/// Complex field amplitude (`z`, `w`, or the local-oscillator `β`).
pub type ComplexAmplitude = Complex64;

/// Default ceiling on the norm lost to truncation.
pub const DEFAULT_TRUNCATION_TOLERANCE: f64 = 1e-6;

/// Twin-beam parameter `λ ∈ [0, 1)`; the amplifier gain is `1/(1-λ²)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TwinBeamParam {
    lambda: f64,
}

impl TwinBeamParam {
    pub fn new(lambda: f64) -> Result<Self> {
        if !(0.0..1.0).contains(&lambda) {
            return Err(Error::InvalidParameter(format!("lambda must lie in [0, 1), got {lambda}")));
        }
        Ok(Self { lambda })
    }

    /// Parameter that produces amplifier gain `gain >= 1`.
    pub fn from_gain(gain: f64) -> Result<Self> {
        if !(gain >= 1.0 && gain.is_finite()) {
            return Err(Error::InvalidParameter(format!("gain must be finite and >= 1, got {gain}")));
        }
        Self::new((1.0 - 1.0 / gain).sqrt())
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn gain(&self) -> f64 {
        1.0 / (1.0 - self.lambda * self.lambda)
    }
}

/// Two-mode pure state truncated to photon numbers `0..=cutoff` in each mode.
///
/// `coeffs` is row-major: entry `(n, m)` is the amplitude on `|n⟩_a ⊗ |m⟩_b`.
#[derive(Debug, Clone, PartialEq)]
pub struct TwoModeFockState {
    cutoff: usize,
    coeffs: Vec<Complex64>,
    norm_defect: f64,
}

impl TwoModeFockState {
    /// Builds a state from raw amplitudes; the captured norm may not exceed 1.
    pub fn from_coeffs(cutoff: usize, coeffs: Vec<Complex64>) -> Result<Self> {
        let dim = cutoff + 1;
        if coeffs.len() != dim * dim {
            return Err(Error::InvalidParameter(format!(
                "expected {} coefficients for cutoff {cutoff}, got {}",
                dim * dim,
                coeffs.len()
            )));
        }
        if coeffs.iter().any(|c| !(c.re.is_finite() && c.im.is_finite())) {
            return Err(Error::InvalidParameter("non-finite coefficient".into()));
        }
        let norm: f64 = coeffs.iter().map(|c| c.norm_sqr()).sum();
        if norm > 1.0 + 1e-12 {
            return Err(Error::InvalidParameter(format!("state norm {norm} exceeds 1")));
        }
        Ok(Self { cutoff, coeffs, norm_defect: (1.0 - norm).max(0.0) })
    }

    pub fn vacuum(cutoff: usize) -> Self {
        let dim = cutoff + 1;
        let mut coeffs = vec![Complex64::new(0.0, 0.0); dim * dim];
        coeffs[0] = Complex64::new(1.0, 0.0);
        Self { cutoff, coeffs, norm_defect: 0.0 }
    }

    pub fn cutoff(&self) -> usize {
        self.cutoff
    }

    pub fn dim(&self) -> usize {
        self.cutoff + 1
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn coeff(&self, n: usize, m: usize) -> Complex64 {
        self.coeffs[n * self.dim() + m]
    }

    /// Norm not captured by the truncated amplitudes.
    pub fn norm_defect(&self) -> f64 {
        self.norm_defect
    }

    pub fn norm_sqr(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm_sqr()).sum()
    }
}

/// `(1-λ²)^{1/2} Σ_n (-λ)^n |n⟩|n⟩` truncated at `cutoff`.
pub fn twin_beams(p: TwinBeamParam, cutoff: usize) -> TwoModeFockState {
    let dim = cutoff + 1;
    let lambda = p.lambda();
    let mut coeffs = vec![Complex64::new(0.0, 0.0); dim * dim];
    let mut amp = (1.0 - lambda * lambda).sqrt();
    for n in 0..dim {
        coeffs[n * dim + n] = Complex64::new(amp, 0.0);
        amp *= -lambda;
    }
    let norm_defect = lambda.powi(2 * (cutoff as i32 + 1));
    TwoModeFockState { cutoff, coeffs, norm_defect }
}

/// Fock matrix `⟨m|e^{z a† - z̄ a}|n⟩` for `m, n ≤ cutoff`, row-major in `m`.
///
/// For `m = n + α` the element is `√(n!/m!) z^α e^{-|z|²/2} L_n^α(|z|²)`;
/// the `m < n` half follows from `D(z)† = D(-z)`. Magnitudes are assembled
/// in log space.
pub fn displacement_matrix(z: ComplexAmplitude, cutoff: usize) -> Vec<Complex64> {
    let dim = cutoff + 1;
    let mut d = vec![Complex64::new(0.0, 0.0); dim * dim];
    if z == Complex64::new(0.0, 0.0) {
        for k in 0..dim {
            d[k * dim + k] = Complex64::new(1.0, 0.0);
        }
        return d;
    }
    let x = z.norm_sqr();
    let ln_r = z.norm().ln();
    let theta = z.arg();
    for alpha in 0..dim {
        let lag = laguerre_sequence(alpha as u32, cutoff - alpha, x);
        let up = Complex64::from_polar(1.0, alpha as f64 * theta);
        let down = if alpha % 2 == 0 { up.conj() } else { -up.conj() };
        for (k, l) in lag.iter().enumerate() {
            let log_mag = 0.5 * (log_factorial(k as u64) - log_factorial((k + alpha) as u64))
                + alpha as f64 * ln_r
                - 0.5 * x;
            let mag = log_mag.exp() * l;
            d[(k + alpha) * dim + k] = up * mag;
            if alpha > 0 {
                d[k * dim + k + alpha] = down * mag;
            }
        }
    }
    d
}

/// Applies `e^{z a† - z̄ a}` to the signal mode with the default tolerance.
pub fn displace_signal(state: &TwoModeFockState, z: ComplexAmplitude) -> Result<TwoModeFockState> {
    displace_signal_with(state, z, DEFAULT_TRUNCATION_TOLERANCE)
}

/// Applies `e^{z a† - z̄ a}` to the signal mode; amplitude pushed past the
/// cutoff is added to `norm_defect`, which may not exceed `tolerance`.
pub fn displace_signal_with(
    state: &TwoModeFockState,
    z: ComplexAmplitude,
    tolerance: f64,
) -> Result<TwoModeFockState> {
    if !(z.re.is_finite() && z.im.is_finite()) {
        return Err(Error::InvalidParameter("displacement must be finite".into()));
    }
    if z == Complex64::new(0.0, 0.0) {
        return Ok(state.clone());
    }
    let dim = state.dim();
    let d = displacement_matrix(z, state.cutoff);
    let rows = Execution::best().map_indexed(dim, |m| {
        let drow = &d[m * dim..(m + 1) * dim];
        let mut row = vec![Complex64::new(0.0, 0.0); dim];
        for (n, &dmn) in drow.iter().enumerate() {
            if dmn == Complex64::new(0.0, 0.0) {
                continue;
            }
            let src = &state.coeffs[n * dim..(n + 1) * dim];
            for (out, &c) in row.iter_mut().zip(src) {
                *out += dmn * c;
            }
        }
        row
    });
    let coeffs: Vec<Complex64> = rows.into_iter().flatten().collect();
    let in_norm = state.norm_sqr();
    let out_norm: f64 = coeffs.iter().map(|c| c.norm_sqr()).sum();
    let leakage = (in_norm - out_norm).max(0.0);
    let norm_defect = state.norm_defect + leakage;
    if norm_defect > tolerance {
        return Err(Error::Truncation { defect: norm_defect, tolerance });
    }
    Ok(TwoModeFockState { cutoff: state.cutoff, coeffs, norm_defect })
}

/// Truncated `⟨a†a + b†b⟩ = Σ (n+m)|c_nm|²`.
pub fn mean_photons(state: &TwoModeFockState) -> f64 {
    let dim = state.dim();
    state
        .coeffs
        .iter()
        .enumerate()
        .map(|(i, c)| ((i / dim) + (i % dim)) as f64 * c.norm_sqr())
        .sum()
}

/// `|z|² + 2λ²/(1-λ²)`.
pub fn mean_photons_analytic(p: TwinBeamParam, z: ComplexAmplitude) -> f64 {
    let l2 = p.lambda() * p.lambda();
    z.norm_sqr() + 2.0 * l2 / (1.0 - l2)
}

/// First and second central moments of the photocurrent `Ẑ = a + b†`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ZMoments {
    pub mean: ComplexAmplitude,
    /// `⟨|Ẑ - ⟨Ẑ⟩|²⟩`
    pub second_central: f64,
}

pub fn z_moments(state: &TwoModeFockState) -> Result<ZMoments> {
    z_moments_with(state, DEFAULT_TRUNCATION_TOLERANCE)
}

/// Moments of `Ẑ` in the renormalized truncated state. `Ẑψ` is formed
/// exactly, including the `b†` image of the top row.
pub fn z_moments_with(state: &TwoModeFockState, tolerance: f64) -> Result<ZMoments> {
    if state.norm_defect > tolerance {
        return Err(Error::Truncation { defect: state.norm_defect, tolerance });
    }
    let dim = state.dim();
    let n_max = state.cutoff;
    let c = |n: usize, m: usize| state.coeffs[n * dim + m];
    let mut mean = Complex64::new(0.0, 0.0);
    let mut z_norm = 0.0;
    for n in 0..dim {
        for m in 0..dim {
            let mut zpsi = Complex64::new(0.0, 0.0);
            if n < n_max {
                zpsi += ((n + 1) as f64).sqrt() * c(n + 1, m);
            }
            if m > 0 {
                zpsi += (m as f64).sqrt() * c(n, m - 1);
            }
            mean += c(n, m).conj() * zpsi;
            z_norm += zpsi.norm_sqr();
        }
        // b† carries |n, N⟩ to |n, N+1⟩, outside the stored block.
        z_norm += (dim as f64) * c(n, n_max).norm_sqr();
    }
    let norm = state.norm_sqr();
    if norm <= 0.0 {
        return Err(Error::InvalidParameter("zero state".into()));
    }
    let mean = mean / norm;
    let second_central = z_norm / norm - mean.norm_sqr();
    Ok(ZMoments { mean, second_central })
}

/// `Σ conj(s1)·s2` over the shared truncated block.
pub fn overlap(s1: &TwoModeFockState, s2: &TwoModeFockState) -> Result<Complex64> {
    if s1.cutoff != s2.cutoff {
        return Err(Error::CutoffMismatch(s1.cutoff, s2.cutoff));
    }
    Ok(s1.coeffs.iter().zip(&s2.coeffs).map(|(a, b)| a.conj() * b).sum())
}

/// Local oscillator amplitude and transmissivity of the displacing beam splitter.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BeamSplitterSetting {
    beta: ComplexAmplitude,
    tau: f64,
}

impl BeamSplitterSetting {
    pub fn new(beta: ComplexAmplitude, tau: f64) -> Result<Self> {
        if !(beta.re.is_finite() && beta.im.is_finite()) {
            return Err(Error::InvalidParameter("beta must be finite".into()));
        }
        if !(tau > 0.0 && tau < 1.0) {
            return Err(Error::InvalidParameter(format!("tau must lie in (0, 1), got {tau}")));
        }
        Ok(Self { beta, tau })
    }

    pub fn beta(&self) -> ComplexAmplitude {
        self.beta
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }
}

/// Limiting displacement `z = β √(1-τ)` imprinted on the signal mode.
pub fn bs_displacement(setting: &BeamSplitterSetting) -> ComplexAmplitude {
    setting.beta * (1.0 - setting.tau).sqrt()
}

pub const DEFAULT_LO_MARGIN: f64 = 100.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LoCheck {
    pub classical: bool,
    /// `|β|² / (1-λ)^{-1}`
    pub ratio: f64,
    pub margin: f64,
}

/// Whether the local oscillator is strong enough to be treated classically:
/// `|β|²` must exceed the twin-beam photon scale `(1-λ)^{-1}` by `margin`.
pub fn validate_classical_lo(setting: &BeamSplitterSetting, p: TwinBeamParam) -> LoCheck {
    validate_classical_lo_with(setting, p, DEFAULT_LO_MARGIN)
}

pub fn validate_classical_lo_with(setting: &BeamSplitterSetting, p: TwinBeamParam, margin: f64) -> LoCheck {
    let ratio = setting.beta.norm_sqr() * (1.0 - p.lambda());
    LoCheck { classical: ratio >= margin, ratio, margin }
}

const MAX_CUTOFF: usize = 4096;

/// Smallest cutoff whose displaced twin-beam state loses at most `epsilon`
/// of its norm. Starts from the larger of the geometric-tail rule
/// `λ^{2(N+1)} ≤ ε` and the margin rule `N ≥ |z|² + 6|z| + 10`, then grows
/// and bisects on the actual defect of the constructed state.
pub fn cutoff_for(p: TwinBeamParam, z: ComplexAmplitude, epsilon: f64) -> Result<usize> {
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(Error::InvalidParameter(format!("epsilon must lie in (0, 1), got {epsilon}")));
    }
    let lambda = p.lambda();
    let mut tail = 0usize;
    if lambda > 0.0 {
        tail = ((epsilon.ln() / (2.0 * lambda.ln())).ceil() as usize).saturating_sub(1);
        while tail > 0 && lambda.powi(2 * tail as i32) <= epsilon {
            tail -= 1;
        }
        while lambda.powi(2 * (tail as i32 + 1)) > epsilon {
            tail += 1;
        }
    }
    let r = z.norm();
    let margin = (r * r + 6.0 * r + 10.0).ceil() as usize;
    let start = tail.max(margin);
    if r == 0.0 {
        return Ok(start);
    }

    let defect = |n: usize| -> Result<f64> {
        let s = displace_signal_with(&twin_beams(p, n), z, f64::INFINITY)?;
        Ok(s.norm_defect())
    };
    if defect(start)? <= epsilon {
        return Ok(start);
    }
    let mut lo = start;
    let mut hi = start + (start / 4).max(8);
    while defect(hi)? > epsilon {
        lo = hi;
        hi += (hi / 4).max(8);
        if hi > MAX_CUTOFF {
            return Err(Error::Truncation { defect: defect(MAX_CUTOFF)?, tolerance: epsilon });
        }
    }
    while hi - lo > 1 {
        let mid = lo + (hi - lo) / 2;
        if defect(mid)? <= epsilon {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(hi)
}
