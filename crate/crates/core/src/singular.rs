//! Gauss sums and truncated singular series.
//!
//! For each modulus q the complete sums S(a,q) for every a are obtained at
//! once from a length-q DFT of the histogram of r^k mod q; `gauss_sum` keeps
//! the direct O(q) definition and serves as the reference for that route.

use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::{Fft, FftDirection, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::budget::Budget;
use crate::error::{Error, Result};
use crate::numerics::{factorize, gcd, pow_mod, totient, unit_phase, Kahan, KahanComplex};

pub const GAUSS_SUM_MAX_Q: u64 = 10_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Variant {
    /// k-th powers of naturals: full Gauss sums normalised by q.
    Waring,
    /// k-th powers of primes: coprime-restricted sums normalised by φ(q).
    WaringGoldbach,
}

impl Variant {
    pub fn name(self) -> &'static str {
        match self {
            Variant::Waring => "waring",
            Variant::WaringGoldbach => "wg",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "waring" | "w" => Ok(Variant::Waring),
            "wg" | "waring-goldbach" | "goldbach" => Ok(Variant::WaringGoldbach),
            _ => Err(Error::Config(format!("unknown variant `{s}` (waring|wg)"))),
        }
    }

    fn restricted(self) -> bool {
        self == Variant::WaringGoldbach
    }

    fn normaliser(self, q: u64) -> f64 {
        match self {
            Variant::Waring => q as f64,
            Variant::WaringGoldbach => totient(q) as f64,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SingularValue {
    pub variant: Variant,
    pub n: u64,
    pub k: u32,
    pub h: u32,
    #[serde(rename = "Q")]
    pub q_max: u64,
    pub value: f64,
    pub imag_residual: f64,
    /// Number of (q, a) pairs summed.
    pub terms: u64,
}

/// S(a,q) = Σ_{r=1}^{q} e(a·r^k/q), optionally over r coprime to q only.
pub fn gauss_sum(a: u64, q: u64, k: u32, restricted: bool) -> Result<Complex64> {
    if q == 0 || a == 0 || a > q {
        return Err(Error::Precondition(format!("need q ≥ 1 and 1 ≤ a ≤ q, got a={a}, q={q}")));
    }
    if q > GAUSS_SUM_MAX_Q {
        return Err(Error::Size(format!("gauss_sum modulus {q} exceeds {GAUSS_SUM_MAX_Q}")));
    }
    let mut acc = KahanComplex::new();
    for r in 1..=q {
        if restricted && gcd(r, q) != 1 {
            continue;
        }
        let num = (a as u128 * pow_mod(r, k as u64, q) as u128 % q as u128) as u64;
        acc.add(unit_phase(num, q));
    }
    Ok(acc.value())
}

/// Histogram of r^k mod q for 1 ≤ r ≤ q.
fn residue_histogram(q: u64, k: u32, restricted: bool) -> Vec<f64> {
    let mut counts = vec![0f64; q as usize];
    for r in 1..=q {
        if restricted && gcd(r, q) != 1 {
            continue;
        }
        counts[pow_mod(r, k as u64, q) as usize] += 1.0;
    }
    counts
}

struct Planner {
    inner: FftPlanner<f64>,
}

impl Planner {
    fn new() -> Self {
        Planner { inner: FftPlanner::new() }
    }

    fn plan(&mut self, len: usize, dir: FftDirection) -> Arc<dyn Fft<f64>> {
        self.inner.plan_fft(len, dir)
    }
}

/// c_a = (S(a,q)/D(q))^h for a coprime to q (index a mod q), zero elsewhere.
fn arc_coefficients(variant: Variant, q: u64, k: u32, h: u32, planner: &mut Planner) -> Vec<Complex64> {
    let hist = residue_histogram(q, k, variant.restricted());
    let mut buf: Vec<Complex64> = hist.into_iter().map(|c| Complex64::new(c, 0.0)).collect();
    planner.plan(q as usize, FftDirection::Inverse).process(&mut buf);
    let d = variant.normaliser(q);
    for (a, v) in buf.iter_mut().enumerate() {
        let coprime = gcd(a as u64, q) == 1 || q == 1;
        *v = if coprime { (*v / d).powu(h) } else { Complex64::new(0.0, 0.0) };
    }
    buf
}

/// A_q(n) = Σ_{a coprime} c_a·e(−na/q) for each n in `ns`.
fn arc_terms(coeffs: &[Complex64], q: u64, ns: &[u64]) -> Vec<Complex64> {
    let twiddle: Vec<Complex64> = (0..q).map(|j| unit_phase(j, q)).collect();
    ns.iter()
        .map(|&n| {
            let nm = n % q;
            let mut acc = KahanComplex::new();
            for (a, &c) in coeffs.iter().enumerate() {
                if q != 1 && gcd(a as u64, q) != 1 {
                    continue;
                }
                let j = (nm as u128 * a as u128 % q as u128) as u64;
                acc.add(c * twiddle[((q - j) % q) as usize]);
            }
            acc.value()
        })
        .collect()
}

fn check_args(h: u32, q_max: u64, k: u32) -> Result<()> {
    if h < 2 {
        return Err(Error::Precondition(format!("h must be at least 2, got {h}")));
    }
    if q_max == 0 {
        return Err(Error::Precondition("Q must be at least 1".into()));
    }
    if k == 0 {
        return Err(Error::Precondition("k must be at least 1".into()));
    }
    if q_max > GAUSS_SUM_MAX_Q {
        return Err(Error::Size(format!("Q = {q_max} exceeds {GAUSS_SUM_MAX_Q}")));
    }
    Ok(())
}

/// Σ_{q ≤ Q} q·(log₂ q + 1) inner operations of the DFT route.
fn series_work(q_max: u64, per_n: u64) -> u64 {
    let qf = q_max as f64;
    (0.5 * qf * qf * (qf.log2() + 1.0 + per_n as f64)) as u64
}

/// Per-q terms for all `ns`, in ascending q.
fn terms_by_q(variant: Variant, ns: &[u64], k: u32, h: u32, q_max: u64) -> Vec<Vec<Complex64>> {
    (1..=q_max)
        .into_par_iter()
        .map(|q| {
            // A planner per q: a shared one's cache would make the chosen
            // algorithm, and so the rounding, depend on scheduling.
            let coeffs = arc_coefficients(variant, q, k, h, &mut Planner::new());
            arc_terms(&coeffs, q, ns)
        })
        .collect()
}

fn coprime_pairs(q_max: u64) -> u64 {
    (1..=q_max).map(totient).sum()
}

/// Truncated singular series Σ_{q≤Q} Σ_{(a,q)=1} (S/D)^h e(−na/q) for several n.
/// Per-q partial sums are combined in ascending q, so the result does not
/// depend on the thread count.
pub fn singular_series_many(
    variant: Variant,
    ns: &[u64],
    k: u32,
    h: u32,
    q_max: u64,
    budget: &Budget,
) -> Result<Vec<SingularValue>> {
    Ok(singular_series_with_tail(variant, ns, k, h, q_max, budget)?
        .into_iter()
        .map(|(v, _)| v)
        .collect())
}

/// As [`singular_series_many`], paired with the truncation residual estimate
/// |𝔖(n,Q) − 𝔖(n,⌊Q/2⌋)|.
pub fn singular_series_with_tail(
    variant: Variant,
    ns: &[u64],
    k: u32,
    h: u32,
    q_max: u64,
    budget: &Budget,
) -> Result<Vec<(SingularValue, f64)>> {
    check_args(h, q_max, k)?;
    budget.check_work("singular_series", series_work(q_max, ns.len() as u64))?;
    let by_q = terms_by_q(variant, ns, k, h, q_max);
    let terms = coprime_pairs(q_max);
    let half = (q_max / 2) as usize;
    Ok(ns
        .iter()
        .enumerate()
        .map(|(i, &n)| {
            let mut acc = KahanComplex::new();
            let mut at_half = 0.0;
            for (j, t) in by_q.iter().enumerate() {
                acc.add(t[i]);
                if j + 1 == half {
                    at_half = acc.value().re;
                }
            }
            let z = acc.value();
            let tail = if half == 0 { 0.0 } else { (z.re - at_half).abs() };
            (SingularValue { variant, n, k, h, q_max, value: z.re, imag_residual: z.im.abs(), terms }, tail)
        })
        .collect())
}

pub fn singular_series(variant: Variant, n: u64, k: u32, h: u32, q_max: u64, budget: &Budget) -> Result<SingularValue> {
    Ok(singular_series_many(variant, &[n], k, h, q_max, budget)?.remove(0))
}

/// Values of the truncated series at every Q in `q_list` (increasing).
pub fn truncation_profile(
    variant: Variant,
    n: u64,
    k: u32,
    h: u32,
    q_list: &[u64],
    budget: &Budget,
) -> Result<Vec<(u64, f64)>> {
    if q_list.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::Precondition("Q list must be strictly increasing".into()));
    }
    let Some(&q_max) = q_list.last() else {
        return Ok(Vec::new());
    };
    check_args(h, q_max, k)?;
    budget.check_work("truncation_profile", series_work(q_max, 1))?;
    let by_q = terms_by_q(variant, &[n], k, h, q_max);
    let mut out = Vec::with_capacity(q_list.len());
    let mut acc = KahanComplex::new();
    let mut next = q_list.iter().peekable();
    for (i, t) in by_q.iter().enumerate() {
        acc.add(t[0]);
        let q = i as u64 + 1;
        while next.peek() == Some(&&q) {
            out.push((q, acc.value().re));
            next.next();
        }
    }
    Ok(out)
}

/// The same truncated series assembled from prime-power blocks: A(q) is
/// multiplicative in q, so Σ_{q≤Q} A(q) = Σ_{q≤Q} Π_{p^e‖q} A(p^e).
pub fn singular_series_by_blocks(
    variant: Variant,
    n: u64,
    k: u32,
    h: u32,
    q_max: u64,
    budget: &Budget,
) -> Result<SingularValue> {
    check_args(h, q_max, k)?;
    budget.check_work("singular_series_by_blocks", series_work(q_max, 1))?;
    let prime_powers: Vec<u64> = (2..=q_max)
        .filter(|&q| factorize(q).len() == 1)
        .collect();
    let block_terms: Vec<Complex64> = prime_powers
        .par_iter()
        .map(|&q| {
            let coeffs = arc_coefficients(variant, q, k, h, &mut Planner::new());
            arc_terms(&coeffs, q, &[n])[0]
        })
        .collect();
    let lookup = |pe: u64| block_terms[prime_powers.binary_search(&pe).unwrap()];
    let mut acc = KahanComplex::new();
    acc.add(Complex64::new(1.0, 0.0));
    for q in 2..=q_max {
        let prod = factorize(q)
            .into_iter()
            .map(|(p, e)| lookup(p.pow(e)))
            .fold(Complex64::new(1.0, 0.0), |acc, z| acc * z);
        acc.add(prod);
    }
    let z = acc.value();
    Ok(SingularValue {
        variant,
        n,
        k,
        h,
        q_max,
        value: z.re,
        imag_residual: z.im.abs(),
        terms: coprime_pairs(q_max),
    })
}

/// Precomputed A_q(m) for every q ≤ Q and residue m, so the truncated series
/// at any n costs Q table lookups.
#[derive(Debug, Clone)]
pub struct SingularTable {
    variant: Variant,
    k: u32,
    h: u32,
    q_max: u64,
    terms: u64,
    tables: Vec<Vec<Complex64>>,
}

impl SingularTable {
    pub fn build(variant: Variant, k: u32, h: u32, q_max: u64, budget: &Budget) -> Result<Self> {
        check_args(h, q_max, k)?;
        let entries = q_max * (q_max + 1) / 2;
        budget.check_memory("singular_table", entries * 16)?;
        budget.check_work("singular_table", series_work(q_max, 1))?;
        let tables = (1..=q_max)
            .into_par_iter()
            .map(|q| {
                let mut planner = Planner::new();
                let mut c = arc_coefficients(variant, q, k, h, &mut planner);
                planner.plan(q as usize, FftDirection::Forward).process(&mut c);
                c
            })
            .collect();
        Ok(SingularTable { variant, k, h, q_max, terms: coprime_pairs(q_max), tables })
    }

    pub fn q_max(&self) -> u64 {
        self.q_max
    }

    pub fn eval(&self, n: u64) -> SingularValue {
        self.eval_with_tail(n).0
    }

    /// Value at n with the residual |𝔖(n,Q) − 𝔖(n,⌊Q/2⌋)|.
    pub fn eval_with_tail(&self, n: u64) -> (SingularValue, f64) {
        let half = (self.q_max / 2) as usize;
        let mut re = Kahan::new();
        let mut im = Kahan::new();
        let mut at_half = 0.0;
        for (i, t) in self.tables.iter().enumerate() {
            let z = t[(n % (i as u64 + 1)) as usize];
            re.add(z.re);
            im.add(z.im);
            if i + 1 == half {
                at_half = re.value();
            }
        }
        let value = re.value();
        let tail = if half == 0 { 0.0 } else { (value - at_half).abs() };
        let v = SingularValue {
            variant: self.variant,
            n,
            k: self.k,
            h: self.h,
            q_max: self.q_max,
            value,
            imag_residual: im.value().abs(),
            terms: self.terms,
        };
        (v, tail)
    }
}
