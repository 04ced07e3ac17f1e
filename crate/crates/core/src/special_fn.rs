//! Special functions behind the closed-form expressions: generalized Laguerre
//! and Hermite polynomials, the error function, log-factorials, and a
//! quadrature check of the Hermite–Laguerre overlap identity
//!
//! ```text
//! ∫ dx/√π e^{-x²} H_n(x+y) H_{n+α}(x+t) = 2^{n+α} n! L_n^α(-2yt) t^α
//! ```

use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::{Arc, Mutex, OnceLock};

use crate::error::{Error, Result};
use crate::mp::Fixed;
use crate::quadrature::{gauss_hermite, gauss_hermite_fixed};

/// Degree `n` and associated index `alpha` of `L_n^alpha`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct PolyOrder {
    pub n: u32,
    pub alpha: u32,
}

impl PolyOrder {
    pub fn new(n: u32, alpha: u32) -> Self {
        Self { n, alpha }
    }
}

/// `L_n^α(x)` by upward three-term recurrence in `n`.
pub fn laguerre(order: PolyOrder, x: f64) -> f64 {
    let alpha = order.alpha as f64;
    let mut prev = 1.0;
    if order.n == 0 {
        return prev;
    }
    let mut cur = 1.0 + alpha - x;
    for k in 1..order.n {
        let kf = k as f64;
        let next = ((2.0 * kf + 1.0 + alpha - x) * cur - (kf + alpha) * prev) / (kf + 1.0);
        prev = cur;
        cur = next;
    }
    cur
}

/// `[L_0^α(x), …, L_{n_max}^α(x)]` from a single recurrence pass.
pub fn laguerre_sequence(alpha: u32, n_max: usize, x: f64) -> Vec<f64> {
    let alpha = alpha as f64;
    let mut out = Vec::with_capacity(n_max + 1);
    out.push(1.0);
    if n_max == 0 {
        return out;
    }
    out.push(1.0 + alpha - x);
    for k in 1..n_max {
        let kf = k as f64;
        let next = ((2.0 * kf + 1.0 + alpha - x) * out[k] - (kf + alpha) * out[k - 1]) / (kf + 1.0);
        out.push(next);
    }
    out
}

/// Physicists' Hermite polynomial `H_n(x)`.
pub fn hermite(n: u32, x: f64) -> f64 {
    let mut prev = 1.0;
    if n == 0 {
        return prev;
    }
    let mut cur = 2.0 * x;
    for k in 1..n {
        let next = 2.0 * x * cur - 2.0 * k as f64 * prev;
        prev = cur;
        cur = next;
    }
    cur
}

const FRAC_2_SQRT_PI: f64 = std::f64::consts::FRAC_2_SQRT_PI;
const ERF_SPLIT: f64 = 2.0;
const ERF_SATURATION: f64 = 6.0;

/// Error function. Series below |x| = 2, continued fraction for the
/// complement above, exactly odd, saturated to ±1 past |x| = 6.
pub fn erf(x: f64) -> f64 {
    let a = x.abs();
    let v = if a > ERF_SATURATION {
        1.0
    } else if a < ERF_SPLIT {
        erf_series(a)
    } else {
        1.0 - erfc_continued_fraction(a)
    };
    if x.is_sign_negative() {
        -v
    } else {
        v
    }
}

/// Complementary error function `1 - erf(x)`, accurate in the far tail.
pub fn erfc(x: f64) -> f64 {
    if x >= ERF_SPLIT {
        erfc_continued_fraction(x)
    } else if x > -ERF_SPLIT {
        1.0 - erf(x)
    } else {
        2.0 - erfc_continued_fraction(-x)
    }
}

// erf(a) = 2/√π e^{-a²} Σ 2^k a^{2k+1} / (2k+1)!!, all terms positive.
fn erf_series(a: f64) -> f64 {
    let a2 = a * a;
    let mut term = a;
    let mut sum = a;
    let mut k = 0.0;
    while term > 1e-17 * sum {
        term *= 2.0 * a2 / (2.0 * k + 3.0);
        sum += term;
        k += 1.0;
    }
    FRAC_2_SQRT_PI * (-a2).exp() * sum
}

// Lentz evaluation of erfc(a) = e^{-a²}/√π · 1/(a + (1/2)/(a + 1/(a + (3/2)/(a + …)))).
fn erfc_continued_fraction(a: f64) -> f64 {
    const TINY: f64 = 1e-300;
    let mut f = a;
    let mut c = f;
    let mut d = 0.0;
    for k in 1..500 {
        let coef = 0.5 * k as f64;
        d = a + coef * d;
        if d.abs() < TINY {
            d = TINY;
        }
        d = 1.0 / d;
        c = a + coef / c;
        if c.abs() < TINY {
            c = TINY;
        }
        let delta = c * d;
        f *= delta;
        if (delta - 1.0).abs() < 1e-16 {
            break;
        }
    }
    (-a * a).exp() / (PI.sqrt() * f)
}

const EXACT_FACTORIALS: usize = 21;

fn factorial_table() -> [f64; EXACT_FACTORIALS] {
    let mut t = [1.0; EXACT_FACTORIALS];
    let mut acc: u64 = 1;
    for (k, slot) in t.iter_mut().enumerate().skip(1) {
        acc *= k as u64;
        *slot = acc as f64;
    }
    t
}

/// `ln(n!)`: exact factorials through 20, Stirling series beyond.
pub fn log_factorial(n: u64) -> f64 {
    if (n as usize) < EXACT_FACTORIALS {
        return factorial_table()[n as usize].ln();
    }
    // ln Γ(x) with x = n + 1 >= 22; truncation error below 1e-17 relative.
    let x = n as f64 + 1.0;
    let inv = 1.0 / x;
    let inv2 = inv * inv;
    let series = inv
        * (1.0 / 12.0
            - inv2 * (1.0 / 360.0 - inv2 * (1.0 / 1260.0 - inv2 * (1.0 / 1680.0 - inv2 / 1188.0))));
    (x - 0.5) * x.ln() - x + 0.5 * (2.0 * PI).ln() + series
}

/// Both sides of the Hermite–Laguerre identity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IdentityCheck {
    pub lhs: f64,
    pub rhs: f64,
}

impl IdentityCheck {
    pub fn relative_error(&self) -> f64 {
        let scale = self.rhs.abs().max(f64::MIN_POSITIVE);
        (self.lhs - self.rhs).abs() / scale
    }
}

/// Quadrature-based verifier for the Hermite–Laguerre identity.
#[derive(Debug, Clone, Copy)]
pub struct HermiteLaguerreVerifier {
    /// Largest admissible `n + alpha`.
    pub capacity: u32,
}

impl Default for HermiteLaguerreVerifier {
    fn default() -> Self {
        Self { capacity: 40 }
    }
}

impl HermiteLaguerreVerifier {
    /// Gauss–Hermite node count: the integrand is a polynomial of degree
    /// `2n + α`, so `⌈(2n + α + 2)/2⌉` nodes are exact; 8 more are a margin.
    pub fn node_count(n: u32, alpha: u32) -> usize {
        let total = 2 * n as usize + alpha as usize;
        (total + 2).div_ceil(2) + 8
    }

    pub fn check(&self, n: u32, alpha: u32, y: f64, t: f64) -> Result<IdentityCheck> {
        if !(y.is_finite() && t.is_finite()) {
            return Err(Error::InvalidParameter("y and t must be finite".into()));
        }
        if alpha > 0 && t == 0.0 {
            return Err(Error::InvalidParameter("t must be nonzero when alpha > 0".into()));
        }
        if n + alpha > self.capacity {
            return Err(Error::Quadrature(format!(
                "n + alpha = {} exceeds quadrature capacity {} ({} nodes required)",
                n + alpha,
                self.capacity,
                Self::node_count(n, alpha)
            )));
        }
        let count = Self::node_count(n, alpha);
        let rule = f64_rule(count)?;
        let (mut lhs, mut magnitude) = (0.0, 0.0);
        for (&x, &w) in rule.0.iter().zip(&rule.1) {
            let term = w * hermite(n, x + y) * hermite(n + alpha, x + t);
            lhs += term;
            magnitude += term.abs();
        }
        lhs /= PI.sqrt();
        magnitude /= PI.sqrt();
        // For small |t| the integral is O(t^α) while the terms are O(1), so
        // the sum cancels; redo it in fixed point when f64 cannot resolve it.
        let growth = (count + (n + alpha) as usize) as f64;
        if growth * 4.0 * f64::EPSILON * magnitude > HL_TARGET * lhs.abs() {
            lhs = fixed_point_lhs(n, alpha, y, t, count, magnitude)?;
        }
        let log_prefactor = (n + alpha) as f64 * 2f64.ln() + log_factorial(n as u64);
        let rhs = log_prefactor.exp() * laguerre(PolyOrder::new(n, alpha), -2.0 * y * t) * t.powi(alpha as i32);
        Ok(IdentityCheck { lhs, rhs })
    }
}

const HL_TARGET: f64 = 1e-11;

type FixedRule = Arc<(Vec<Fixed>, Vec<Fixed>)>;
type F64Rule = Arc<(Vec<f64>, Vec<f64>)>;

/// Fixed-point rules are costly to refine and few distinct ones are used.
fn fixed_rule(count: usize, bits: u32) -> Result<FixedRule> {
    static RULES: OnceLock<Mutex<HashMap<(usize, u32), FixedRule>>> = OnceLock::new();
    let cache = RULES.get_or_init(Default::default);
    if let Some(rule) = cache.lock().unwrap().get(&(count, bits)) {
        return Ok(rule.clone());
    }
    let rule = Arc::new(gauss_hermite_fixed(count, bits)?);
    cache.lock().unwrap().insert((count, bits), rule.clone());
    Ok(rule)
}

fn f64_rule(count: usize) -> Result<F64Rule> {
    static RULES: OnceLock<Mutex<HashMap<usize, F64Rule>>> = OnceLock::new();
    let cache = RULES.get_or_init(Default::default);
    if let Some(rule) = cache.lock().unwrap().get(&count) {
        return Ok(rule.clone());
    }
    let rule = Arc::new(gauss_hermite(count)?);
    cache.lock().unwrap().insert(count, rule.clone());
    Ok(rule)
}

fn fixed_point_lhs(n: u32, alpha: u32, y: f64, t: f64, count: usize, magnitude: f64) -> Result<f64> {
    let growth = (count + (n + alpha) as usize) as f64;
    let mut bits = 192u32;
    loop {
        let rule = fixed_rule(count, bits)?;
        let (nodes, weights) = (&rule.0, &rule.1);
        let yf = Fixed::from_f64(y, bits);
        let tf = Fixed::from_f64(t, bits);
        let mut acc = Fixed::zero(bits);
        for (x, w) in nodes.iter().zip(weights) {
            let a = hermite_fixed(n, &(x + &yf));
            let b = hermite_fixed(n + alpha, &(x + &tf));
            acc = &acc + &(&(w * &a) * &b);
        }
        let lhs = acc.to_f64();
        let err = growth * 16.0 * magnitude * 2f64.powi(-(bits as i32));
        if err <= HL_TARGET * lhs.abs() || bits >= 4096 {
            return Ok(lhs);
        }
        bits *= 2;
    }
}

fn hermite_fixed(n: u32, x: &Fixed) -> Fixed {
    let bits = x.bits();
    let mut prev = Fixed::from_i64(1, bits);
    if n == 0 {
        return prev;
    }
    let mut cur = x.mul_i64(2);
    for k in 1..n {
        let next = &(&cur * x).mul_i64(2) - &prev.mul_i64(2 * k as i64);
        prev = cur;
        cur = next;
    }
    cur
}

/// [`HermiteLaguerreVerifier::check`] with the default capacity of 40.
pub fn check_hermite_laguerre(n: u32, alpha: u32, y: f64, t: f64) -> Result<IdentityCheck> {
    HermiteLaguerreVerifier::default().check(n, alpha, y, t)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn laguerre_examples() {
        assert_eq!(laguerre(PolyOrder::new(0, 3), 7.5), 1.0);
        assert_eq!(laguerre(PolyOrder::new(1, 0), 2.0), -1.0);
        // 1 - 2x + x²/2 at x = 1
        assert_eq!(laguerre(PolyOrder::new(2, 0), 1.0), -0.5);
    }

    #[test]
    fn laguerre_low_orders_match_explicit_forms() {
        for alpha in 0..6u32 {
            let a = alpha as f64;
            for i in 0..40 {
                let x = 0.37 * i as f64;
                let l1 = 1.0 + a - x;
                let l2 = 0.5 * (x * x - 2.0 * (a + 2.0) * x + (a + 1.0) * (a + 2.0));
                assert!((laguerre(PolyOrder::new(1, alpha), x) - l1).abs() <= 1e-15 * l1.abs().max(1.0));
                let scale = 0.5 * (x * x + 2.0 * (a + 2.0) * x + (a + 1.0) * (a + 2.0));
                assert!((laguerre(PolyOrder::new(2, alpha), x) - l2).abs() <= 4e-15 * scale);
            }
        }
    }

    #[test]
    fn laguerre_sequence_matches_pointwise() {
        let seq = laguerre_sequence(3, 25, 4.2);
        for (n, v) in seq.iter().enumerate() {
            assert_eq!(*v, laguerre(PolyOrder::new(n as u32, 3), 4.2));
        }
        assert_eq!(laguerre_sequence(0, 0, 1.0), vec![1.0]);
    }

    #[test]
    fn hermite_examples() {
        assert_eq!(hermite(0, 3.2), 1.0);
        assert_eq!(hermite(1, 3.2), 6.4);
        // 8x³ - 12x at x = 1
        assert_eq!(hermite(3, 1.0), -4.0);
    }

    #[test]
    fn erf_examples() {
        assert_eq!(erf(0.0), 0.0);
        assert!((erf(10.0) - 1.0).abs() <= 1e-12);
        assert!((erf(1.0) - 0.842_700_792_949_714_9).abs() <= 1e-12);
        assert_eq!(erf(-7.0), -1.0);
    }

    #[test]
    fn erf_branches_are_continuous() {
        for x in [ERF_SPLIT, ERF_SATURATION] {
            let below = erf(x - 1e-12);
            let above = erf(x + 1e-12);
            assert!((above - below).abs() < 1e-13, "jump at {x}");
        }
    }

    #[test]
    fn erfc_tail_and_complement() {
        // erfc(5) = 1.5374597944280348e-12
        assert!((erfc(5.0) / 1.537_459_794_428_034_8e-12 - 1.0).abs() < 1e-13);
        for i in -40..40 {
            let x = 0.17 * i as f64;
            assert!((erf(x) + erfc(x) - 1.0).abs() < 2e-16 * 4.0);
        }
        assert!((erfc(-3.0) - (1.0 + erf(3.0))).abs() < 1e-15);
    }

    #[test]
    fn log_factorial_examples() {
        assert_eq!(log_factorial(0), 0.0);
        assert_eq!(log_factorial(1), 0.0);
        assert!((log_factorial(10) - 15.104_412_573_075_516).abs() < 1e-12);
    }

    #[test]
    fn log_factorial_exact_range() {
        let mut fact: u64 = 1;
        for n in 0..=20u64 {
            if n > 0 {
                fact *= n;
            }
            let back = log_factorial(n).exp();
            assert!((back / fact as f64 - 1.0).abs() <= 1e-14, "n={n}");
        }
    }

    #[test]
    fn log_factorial_matches_direct_summation() {
        let mut direct = 0.0f64;
        for n in 1..=400u64 {
            direct += (n as f64).ln();
            if n > 20 {
                let rel = (log_factorial(n) - direct).abs() / direct;
                assert!(rel <= 1e-12, "n={n} rel={rel}");
            }
        }
    }

    #[test]
    fn identity_examples() {
        let c = check_hermite_laguerre(0, 0, 0.0, 0.0).unwrap();
        assert!((c.lhs - 1.0).abs() < 1e-14 && (c.rhs - 1.0).abs() < 1e-14);
        let c = check_hermite_laguerre(1, 0, 0.5, 0.5).unwrap();
        assert!((c.rhs - 3.0).abs() < 1e-14);
        assert!((c.lhs - 3.0).abs() < 1e-12);
        let c = check_hermite_laguerre(2, 1, 0.3, 0.7).unwrap();
        assert!(c.relative_error() < 1e-9, "{c:?}");
    }

    #[test]
    fn identity_errors() {
        assert!(matches!(
            check_hermite_laguerre(2, 1, 0.3, 0.0),
            Err(Error::InvalidParameter(_))
        ));
        assert!(matches!(check_hermite_laguerre(30, 11, 0.3, 0.2), Err(Error::Quadrature(_))));
        let small = HermiteLaguerreVerifier { capacity: 5 };
        assert!(small.check(3, 3, 0.1, 0.1).is_err());
        assert!(small.check(3, 2, 0.1, 0.1).is_ok());
    }

    #[test]
    fn node_count_rule() {
        assert_eq!(HermiteLaguerreVerifier::node_count(0, 0), 9);
        assert_eq!(HermiteLaguerreVerifier::node_count(20, 10), 34);
    }
}
