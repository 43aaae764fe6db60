//! Small numeric helpers shared across modules: compensated summation,
//! modular arithmetic, Γ-function ratios, the logarithmic integral and
//! output formatting.

use num_complex::Complex64;
use std::f64::consts::TAU;

/// Neumaier-compensated accumulator. Order of `add` calls is the reduction
/// order, so callers that need bit-reproducibility feed it deterministically.
#[derive(Debug, Clone, Copy, Default)]
pub struct Kahan {
    sum: f64,
    comp: f64,
}

impl Kahan {
    pub fn new() -> Self {
        Self::default()
    }

    #[inline]
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

impl FromIterator<f64> for Kahan {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut k = Kahan::new();
        for x in iter {
            k.add(x);
        }
        k
    }
}

/// Compensated complex accumulator (independent real and imaginary parts).
#[derive(Debug, Clone, Copy, Default)]
pub struct KahanComplex {
    re: Kahan,
    im: Kahan,
}

impl KahanComplex {
    pub fn new() -> Self {
        Self::default()
    }

    #[inline]
    pub fn add(&mut self, z: Complex64) {
        self.re.add(z.re);
        self.im.add(z.im);
    }

    pub fn value(&self) -> Complex64 {
        Complex64::new(self.re.value(), self.im.value())
    }
}

pub fn sum_compensated(xs: impl IntoIterator<Item = f64>) -> f64 {
    xs.into_iter().collect::<Kahan>().value()
}

/// e(num/den) = exp(2πi·num/den) with the numerator already reduced mod den.
#[inline]
pub fn unit_phase(num: u64, den: u64) -> Complex64 {
    let theta = (num % den) as f64 / den as f64;
    let (s, c) = (TAU * theta).sin_cos();
    Complex64::new(c, s)
}

/// e(t) for a real t, reducing t mod 1 before the trigonometric call.
#[inline]
pub fn unit_phase_real(t: f64) -> Complex64 {
    let r = t - t.floor();
    let (s, c) = (TAU * r).sin_cos();
    Complex64::new(c, s)
}

/// Fractional part of n·α computed with an FMA error term so the reduction
/// stays accurate for n up to ~10^9.
#[inline]
pub fn frac_mul(n: u64, alpha: f64) -> f64 {
    let nf = n as f64;
    let p = nf * alpha;
    let err = nf.mul_add(alpha, -p);
    let r = (p - p.floor()) + err;
    r - r.floor()
}

pub fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        let t = a % b;
        a = b;
        b = t;
    }
    a
}

#[inline]
pub fn mul_mod(a: u64, b: u64, m: u64) -> u64 {
    ((a as u128 * b as u128) % m as u128) as u64
}

pub fn pow_mod(mut base: u64, mut exp: u64, m: u64) -> u64 {
    if m == 1 {
        return 0;
    }
    let mut acc = 1u64;
    base %= m;
    while exp > 0 {
        if exp & 1 == 1 {
            acc = mul_mod(acc, base, m);
        }
        base = mul_mod(base, base, m);
        exp >>= 1;
    }
    acc
}

/// Largest m with m^k ≤ n.
pub fn iroot(n: u64, k: u32) -> u64 {
    if k == 1 || n < 2 {
        return n;
    }
    let mut m = (n as f64).powf(1.0 / k as f64).round() as u64;
    while m > 0 && checked_pow(m, k).is_none_or(|v| v > n) {
        m -= 1;
    }
    while checked_pow(m + 1, k).is_some_and(|v| v <= n) {
        m += 1;
    }
    m
}

pub fn checked_pow(base: u64, k: u32) -> Option<u64> {
    base.checked_pow(k)
}

/// Deterministic Miller–Rabin for 64-bit integers.
pub fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    for p in [2u64, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37] {
        if n.is_multiple_of(p) {
            return n == p;
        }
    }
    let mut d = n - 1;
    let mut s = 0;
    while d.is_multiple_of(2) {
        d /= 2;
        s += 1;
    }
    'witness: for a in [2u64, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37] {
        let mut x = pow_mod(a, d, n);
        if x == 1 || x == n - 1 {
            continue;
        }
        for _ in 1..s {
            x = mul_mod(x, x, n);
            if x == n - 1 {
                continue 'witness;
            }
        }
        return false;
    }
    true
}

/// Prime factorisation by trial division, as (p, e) pairs in ascending p.
pub fn factorize(mut n: u64) -> Vec<(u64, u32)> {
    let mut out = Vec::new();
    let mut p = 2u64;
    while p * p <= n {
        if n.is_multiple_of(p) {
            let mut e = 0;
            while n.is_multiple_of(p) {
                n /= p;
                e += 1;
            }
            out.push((p, e));
        }
        p += if p == 2 { 1 } else { 2 };
    }
    if n > 1 {
        out.push((n, 1));
    }
    out
}

pub fn totient(n: u64) -> u64 {
    factorize(n)
        .into_iter()
        .fold(n, |acc, (p, _)| acc / p * (p - 1))
}

/// Euler's totient for every n ≤ limit (index 0 unused).
pub fn totient_table(limit: usize) -> Vec<u64> {
    let mut phi: Vec<u64> = (0..=limit as u64).collect();
    for p in 2..=limit {
        if phi[p] == p as u64 {
            for m in (p..=limit).step_by(p) {
                phi[m] -= phi[m] / p as u64;
            }
        }
    }
    phi
}

pub fn ln_gamma(x: f64) -> f64 {
    statrs::function::gamma::ln_gamma(x)
}

/// Γ(ω)^ℓ / Γ(ℓω), the singular-integral constant for ℓ-fold sums.
pub fn gamma_power_ratio(omega: f64, ell: u32) -> f64 {
    (ell as f64 * ln_gamma(omega) - ln_gamma(ell as f64 * omega)).exp()
}

/// li(x) = ∫_2^x dt / log t by adaptive Simpson quadrature in the variable
/// u = log t, to an absolute tolerance of 1e-6.
pub fn li(x: f64) -> f64 {
    if x <= 2.0 {
        return 0.0;
    }
    let f = |u: f64| u.exp() / u;
    let a = 2f64.ln();
    let b = x.ln();
    // Split into unit-length pieces so the recursion starts well resolved.
    let pieces = ((b - a).ceil() as usize).max(1);
    let step = (b - a) / pieces as f64;
    let tol = 1e-6 / pieces as f64;
    (0..pieces)
        .map(|i| {
            let lo = a + i as f64 * step;
            let hi = if i + 1 == pieces { b } else { lo + step };
            adaptive_simpson(&f, lo, hi, tol)
        })
        .collect::<Kahan>()
        .value()
}

fn adaptive_simpson(f: &impl Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    fn simpson(fa: f64, fm: f64, fb: f64, a: f64, b: f64) -> f64 {
        (b - a) / 6.0 * (fa + 4.0 * fm + fb)
    }
    #[allow(clippy::too_many_arguments)]
    fn recurse(
        f: &impl Fn(f64) -> f64,
        a: f64,
        b: f64,
        fa: f64,
        fm: f64,
        fb: f64,
        whole: f64,
        tol: f64,
        depth: u32,
    ) -> f64 {
        let m = 0.5 * (a + b);
        let lm = 0.5 * (a + m);
        let rm = 0.5 * (m + b);
        let flm = f(lm);
        let frm = f(rm);
        let left = simpson(fa, flm, fm, a, m);
        let right = simpson(fm, frm, fb, m, b);
        let delta = left + right - whole;
        if depth == 0 || delta.abs() <= 15.0 * tol {
            return left + right + delta / 15.0;
        }
        recurse(f, a, m, fa, flm, fm, left, tol / 2.0, depth - 1)
            + recurse(f, m, b, fm, frm, fb, right, tol / 2.0, depth - 1)
    }
    let fa = f(a);
    let fb = f(b);
    let fm = f(0.5 * (a + b));
    let whole = simpson(fa, fm, fb, a, b);
    recurse(f, a, b, fa, fm, fb, whole, tol, 48)
}

/// Round to 15 significant digits; the printed form of the result is the
/// shortest decimal that reproduces it.
pub fn round_sig15(x: f64) -> f64 {
    if !x.is_finite() || x == 0.0 {
        return x;
    }
    format!("{:.14e}", x).parse().unwrap_or(x)
}

/// Format a float for CSV/JSON output at 15 significant digits.
pub fn fmt_f64(x: f64) -> String {
    if x.is_nan() {
        return "NaN".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    format!("{:?}", round_sig15(x))
}

/// Least-squares slope of ys against xs.
pub fn ls_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    sxy / sxx
}

pub fn median(values: &[f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let mut v = values.to_vec();
    v.sort_by(|a, b| a.total_cmp(b));
    let m = v.len() / 2;
    Some(if v.len() % 2 == 1 {
        v[m]
    } else {
        0.5 * (v[m - 1] + v[m])
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kahan_recovers_small_terms() {
        let mut k = Kahan::new();
        k.add(1.0);
        for _ in 0..10 {
            k.add(1e-16);
        }
        assert!((k.value() - (1.0 + 1e-15)).abs() < 1e-18);
    }

    #[test]
    fn modular_helpers() {
        assert_eq!(pow_mod(3, 4, 5), 1);
        assert_eq!(pow_mod(7, 0, 1), 0);
        assert_eq!(gcd(12, 18), 6);
        assert_eq!(totient(1), 1);
        assert_eq!(totient(36), 12);
        let t = totient_table(100);
        for n in 1..=100u64 {
            assert_eq!(t[n as usize], totient(n));
        }
    }

    #[test]
    fn integer_roots() {
        assert_eq!(iroot(10, 2), 3);
        assert_eq!(iroot(9, 2), 3);
        assert_eq!(iroot(26, 3), 2);
        assert_eq!(iroot(27, 3), 3);
        assert_eq!(iroot(u64::MAX, 2), 4294967295);
        assert_eq!(iroot(1, 5), 1);
    }

    #[test]
    fn primality_matches_trial_division() {
        let trial = |n: u64| n >= 2 && (2..).take_while(|d| d * d <= n).all(|d| !n.is_multiple_of(d));
        for n in 0..5000 {
            assert_eq!(is_prime(n), trial(n), "n = {n}");
        }
        assert!(is_prime(1_000_000_007));
        assert!(!is_prime(3_215_031_751));
    }

    #[test]
    fn li_matches_reference_values() {
        // Reference values of ∫_2^x dt/log t to 40 digits.
        assert!((li(1e6) - 78626.50399568206).abs() < 1e-5);
        assert!((li(1e7) - 664917.3598847888).abs() < 1e-5);
        assert_eq!(li(2.0), 0.0);
    }

    #[test]
    fn gamma_ratios() {
        assert!((gamma_power_ratio(1.0 / 3.0, 3) - 19.225969452595694).abs() < 1e-11);
        assert!((gamma_power_ratio(0.5, 2) - std::f64::consts::PI).abs() < 1e-12);
        let r = gamma_power_ratio(0.7, 3);
        assert!((r / 2.089999864304235 - 1.0).abs() < 1e-12);
    }

    #[test]
    fn formatting_is_fifteen_digits() {
        assert_eq!(fmt_f64(1.0), "1.0");
        assert_eq!(fmt_f64(0.1 + 0.2), "0.3");
        assert_eq!(fmt_f64(std::f64::consts::PI), "3.14159265358979");
        assert_eq!(fmt_f64(-2.5e-20), "-2.5e-20");
    }

    #[test]
    fn frac_mul_is_accurate() {
        let a = 0.1234567890123;
        let n = 987_654_321u64;
        let exact = {
            // Split a into an exactly representable pair for a reference.
            let p = n as f64 * a;
            p - p.floor()
        };
        assert!((frac_mul(n, a) - exact).abs() < 1e-6);
        assert_eq!(frac_mul(10, 0.5), 0.0);
    }

    #[test]
    fn slope_and_median() {
        let xs = [1.0, 2.0, 3.0];
        let ys = [2.0, 4.0, 6.0];
        assert!((ls_slope(&xs, &ys) - 2.0).abs() < 1e-12);
        assert_eq!(median(&[3.0, 1.0, 2.0]), Some(2.0));
        assert_eq!(median(&[4.0, 1.0, 2.0, 3.0]), Some(2.5));
        assert_eq!(median(&[]), None);
    }
}
