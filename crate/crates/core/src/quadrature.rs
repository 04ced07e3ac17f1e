//! Numerical integration used by the verifiers and the exact phase moments.

use num_bigint::BigInt;
use num_traits::One;

use crate::error::{Error, Result};
use crate::mp::Fixed;

const MAX_DEPTH: u32 = 48;

/// Adaptive Simpson integration of `f` over `[a, b]`.
///
/// The interval is first split into `panels` equal pieces so that narrow
/// features are not skipped by the initial five-point estimate; the absolute
/// tolerance is shared between panels in proportion to their width.
pub fn adaptive_simpson<F>(f: F, a: f64, b: f64, abs_tol: f64, panels: usize) -> Result<f64>
where
    F: Fn(f64) -> f64,
{
    if !(a.is_finite() && b.is_finite()) || panels == 0 || abs_tol <= 0.0 {
        return Err(Error::InvalidParameter(format!(
            "bad integration request [{a}, {b}] panels={panels} tol={abs_tol}"
        )));
    }
    let h = (b - a) / panels as f64;
    let panel_tol = abs_tol / panels as f64;
    let mut total = 0.0;
    for k in 0..panels {
        let lo = a + k as f64 * h;
        let hi = if k + 1 == panels { b } else { lo + h };
        let flo = f(lo);
        let fhi = f(hi);
        let mid = 0.5 * (lo + hi);
        let fmid = f(mid);
        let whole = (hi - lo) / 6.0 * (flo + 4.0 * fmid + fhi);
        total += simpson_step(&f, lo, hi, flo, fmid, fhi, whole, panel_tol, MAX_DEPTH)?;
    }
    Ok(total)
}

#[allow(clippy::too_many_arguments)]
fn simpson_step<F>(
    f: &F,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> Result<f64>
where
    F: Fn(f64) -> f64,
{
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    if !delta.is_finite() {
        return Err(Error::Quadrature(format!("non-finite integrand near {m}")));
    }
    if delta.abs() <= 15.0 * tol {
        return Ok(left + right + delta / 15.0);
    }
    if depth == 0 {
        return Err(Error::Quadrature(format!(
            "recursion limit reached on [{a}, {b}] with error estimate {:.3e}",
            delta.abs() / 15.0
        )));
    }
    Ok(simpson_step(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)?
        + simpson_step(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)?)
}

/// Nodes and weights of the `n`-point Gauss–Hermite rule for
/// `∫ e^{-x²} f(x) dx`, found by Newton iteration on the orthonormal
/// Hermite recurrence. Nodes are returned in decreasing order.
pub fn gauss_hermite(n: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    if n == 0 {
        return Err(Error::InvalidParameter("Gauss-Hermite rule needs n >= 1".into()));
    }
    let pim4 = std::f64::consts::PI.powf(-0.25);
    let nf = n as f64;
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    let mut z = 0.0_f64;
    for i in 0..n.div_ceil(2) {
        z = match i {
            0 => (2.0 * nf + 1.0).sqrt() - 1.85575 * (2.0 * nf + 1.0).powf(-0.16667),
            1 => z - 1.14 * nf.powf(0.426) / z,
            2 => 1.86 * z - 0.86 * x[0],
            3 => 1.91 * z - 0.91 * x[1],
            _ => 2.0 * z - x[i - 2],
        };
        let mut pp = 0.0;
        let mut converged = false;
        for _ in 0..100 {
            let (mut p1, mut p2) = (pim4, 0.0);
            for j in 0..n {
                let p3 = p2;
                p2 = p1;
                let jf = j as f64;
                p1 = z * (2.0 / (jf + 1.0)).sqrt() * p2 - (jf / (jf + 1.0)).sqrt() * p3;
            }
            pp = (2.0 * nf).sqrt() * p2;
            let z1 = z;
            z = z1 - p1 / pp;
            if (z - z1).abs() <= 1e-15 * z.abs().max(1.0) {
                converged = true;
                break;
            }
        }
        if !converged {
            return Err(Error::Quadrature(format!("Gauss-Hermite node {i} of {n} did not converge")));
        }
        x[i] = z;
        x[n - 1 - i] = -z;
        w[i] = 2.0 / (pp * pp);
        w[n - 1 - i] = w[i];
    }
    Ok((x, w))
}

/// Gauss–Hermite nodes refined to `bits` of fixed-point precision, with
/// weights divided by `√π` so that `Σ wᵢ f(xᵢ) ≈ ∫ dx/√π e^{-x²} f(x)`.
///
/// Starts from the `f64` rule and polishes each node by Newton steps on the
/// integer-coefficient recurrence `H_{k+1} = 2x H_k - 2k H_{k-1}`; the weight
/// is `2^{n-1} n! / (n² H_{n-1}(xᵢ)²)`.
pub(crate) fn gauss_hermite_fixed(n: usize, bits: u32) -> Result<(Vec<Fixed>, Vec<Fixed>)> {
    let (seed_nodes, _) = gauss_hermite(n)?;
    let eval = |x: &Fixed| -> (Fixed, Fixed) {
        // (H_n(x), H_{n-1}(x))
        let mut prev = Fixed::from_i64(1, bits);
        let mut cur = x.mul_i64(2);
        if n == 1 {
            return (cur, prev);
        }
        for k in 1..n {
            let next = &(&cur * x).mul_i64(2) - &prev.mul_i64(2 * k as i64);
            prev = cur;
            cur = next;
        }
        (cur, prev)
    };
    let mut num = BigInt::one() << (n - 1);
    for k in 2..=n {
        num *= k;
    }
    let num = Fixed::from_integer(num, bits);
    let n_sq = (n * n) as i64;
    let stop = -(bits as f64) + 16.0;
    let mut nodes = Vec::with_capacity(n);
    let mut weights = Vec::with_capacity(n);
    for &x0 in &seed_nodes {
        let mut x = Fixed::from_f64(x0, bits);
        let mut converged = false;
        for _ in 0..32 {
            let (hn, hn1) = eval(&x);
            let step = hn.div(&hn1.mul_i64(2 * n as i64));
            x = &x - &step;
            if step.is_zero() || step.log2_abs() < stop {
                converged = true;
                break;
            }
        }
        if !converged {
            return Err(Error::Quadrature(format!("fixed-point Gauss-Hermite node near {x0} did not converge")));
        }
        let (_, hn1) = eval(&x);
        let w = num.div(&(&hn1 * &hn1).mul_i64(n_sq));
        nodes.push(x);
        weights.push(w);
    }
    Ok((nodes, weights))
}
