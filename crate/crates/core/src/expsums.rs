//! Exponential sums over prime powers (g, T), the power-weighted sum u, the
//! composition sums S_ℓ(n) and the major-arc dissection.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::basesets::{BaseKind, SieveIndex};
use crate::budget::Budget;
use crate::error::{Error, Result};
use crate::numerics::{frac_mul, gamma_power_ratio, gcd, unit_phase_real, Kahan, KahanComplex};

/// Fixed block length for parallel sums; partials are combined in block order.
const BLOCK: usize = 1 << 14;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SumRange {
    Full,
    /// x/h ≤ n ≤ x.
    Tail { h: u32 },
}

impl SumRange {
    fn lower(self, x: u64) -> u64 {
        match self {
            SumRange::Full => 1,
            SumRange::Tail { h } => x.div_ceil(h.max(1) as u64).max(1),
        }
    }

    pub fn name(self) -> String {
        match self {
            SumRange::Full => "full".into(),
            SumRange::Tail { h } => format!("tail{h}"),
        }
    }
}

/// Σ over items in fixed-size blocks, each block compensated, block partials
/// combined in ascending order.
fn blocked_sum<T: Sync>(items: &[T], term: impl Fn(&T) -> Complex64 + Sync) -> Complex64 {
    let partials: Vec<Complex64> = items
        .par_chunks(BLOCK)
        .map(|chunk| {
            let mut acc = KahanComplex::new();
            for it in chunk {
                acc.add(term(it));
            }
            acc.value()
        })
        .collect();
    let mut acc = KahanComplex::new();
    for p in partials {
        acc.add(p);
    }
    acc.value()
}

fn prime_powers<'a>(sieve: &'a SieveIndex, x: u64, k: u32, what: &str) -> Result<&'a [u64]> {
    let spec = sieve.spec();
    if spec.kind != BaseKind::PowersOfPrimes || spec.k != k {
        return Err(Error::Precondition(format!("{what} needs a sieve of prime {k}-th powers")));
    }
    sieve.require(x, what)?;
    Ok(sieve.upto(x))
}

/// g(α; x) = Σ_{n ≤ x, n ∈ ℙ^k} e(nα).
pub fn g_sum(sieve: &SieveIndex, alpha: f64, x: u64, k: u32) -> Result<Complex64> {
    let elems = prime_powers(sieve, x, k, "g_sum")?;
    Ok(blocked_sum(elems, |&n| unit_phase_real(frac_mul(n, alpha))))
}

/// T(α; x) = Σ_{n ∈ ℙ^k in range} n^{ω−1/k}·log n·e(nα).
pub fn t_sum(sieve: &SieveIndex, alpha: f64, x: u64, omega: f64, k: u32, range: SumRange) -> Result<Complex64> {
    let elems = prime_powers(sieve, x, k, "T_sum")?;
    let lo = range.lower(x);
    let start = elems.partition_point(|&n| n < lo);
    let expo = omega - 1.0 / k as f64;
    Ok(blocked_sum(&elems[start..], |&n| {
        let nf = n as f64;
        unit_phase_real(frac_mul(n, alpha)) * (nf.powf(expo) * nf.ln())
    }))
}

/// u(θ; x) = Σ_{n in range, n ≤ x} n^{ω−1}·e(nθ).
pub fn u_sum(theta: f64, x: u64, omega: f64, range: SumRange) -> Result<Complex64> {
    if x < 1 {
        return Err(Error::Precondition("u_sum needs x ≥ 1".into()));
    }
    let lo = range.lower(x);
    let ns: Vec<u64> = (lo..=x).collect();
    Ok(blocked_sum(&ns, |&n| unit_phase_real(frac_mul(n, theta)) * (n as f64).powf(omega - 1.0)))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CompositionSum {
    pub n: u64,
    pub ell: u32,
    pub omega: f64,
    pub value: f64,
    /// Γ(ω)^ℓ/Γ(ℓω)·n^{ℓω−1}.
    pub prediction: f64,
}

impl CompositionSum {
    pub fn ratio(&self) -> f64 {
        self.value / self.prediction
    }
}

/// Dot product of w[1..m] with w reversed, compensated per 256-term chunk.
fn convolve_at(left: &[f64], w: &[f64], m: usize) -> f64 {
    let mut acc = Kahan::new();
    let mut j = 1;
    while j < m {
        let end = (j + 256).min(m);
        let mut s = 0.0;
        for i in j..end {
            s += left[i] * w[m - i];
        }
        acc.add(s);
        j = end;
    }
    acc.value()
}

/// S_ℓ(n) = Σ_{x_1+⋯+x_ℓ = n, x_i ≥ 1} Π x_i^{ω−1} by the recursion
/// S_{ℓ+1}(n) = Σ_{m<n} S_ℓ(m)·(n−m)^{ω−1}.
pub fn composition_sum(n: u64, ell: u32, omega: f64, budget: &Budget) -> Result<CompositionSum> {
    if ell < 2 {
        return Err(Error::Precondition(format!("ℓ must be at least 2, got {ell}")));
    }
    if n < ell as u64 {
        return Err(Error::Precondition(format!("need n ≥ ℓ, got n={n}, ℓ={ell}")));
    }
    if !(omega > 0.0) {
        return Err(Error::Precondition(format!("ω must be positive, got {omega}")));
    }
    let nn = n as usize;
    let work = (ell as u64 - 2).saturating_mul(n.saturating_mul(n) / 2).saturating_add(n);
    budget.check_work("composition_sum", work)?;
    budget.check_memory("composition_sum", 16 * (n + 1))?;

    let w: Vec<f64> = (0..=nn)
        .map(|j| if j == 0 { 0.0 } else { (j as f64).powf(omega - 1.0) })
        .collect();
    // `level` holds S_j(m) for all m < n (S_1 = w).
    let mut level = w.clone();
    for _ in 1..ell - 1 {
        let next: Vec<f64> = (0..nn)
            .into_par_iter()
            .map(|m| if m < 2 { 0.0 } else { convolve_at(&level, &w, m) })
            .collect();
        level = next;
        level.push(0.0);
    }
    let value = if ell == 2 {
        // Symmetric: pair j with n−j.
        let half = nn / 2;
        let mut acc = Kahan::new();
        for j in 1..=half {
            let t = w[j] * w[nn - j];
            acc.add(if 2 * j == nn { t } else { 2.0 * t });
        }
        acc.value()
    } else {
        convolve_at(&level, &w, nn)
    };
    let prediction = gamma_power_ratio(omega, ell) * (n as f64).powf(ell as f64 * omega - 1.0);
    Ok(CompositionSum { n, ell, omega, value, prediction })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Arc {
    pub q: u64,
    pub a: u64,
    pub center: f64,
    pub half_width: f64,
}

impl Arc {
    /// Whether α (taken mod 1) lies within the arc on the circle.
    pub fn contains(&self, alpha: f64) -> bool {
        let d = (alpha - self.center).rem_euclid(1.0);
        d.min(1.0 - d) <= self.half_width
    }

    pub fn interval(&self) -> (f64, f64) {
        (self.center - self.half_width, self.center + self.half_width)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MajorArcs {
    pub n: u64,
    #[serde(rename = "Q")]
    pub q: f64,
    pub arcs: Vec<Arc>,
    pub measure: f64,
}

/// Arcs |α − a/q| ≤ Q/N for q ≤ Q, 1 ≤ a ≤ q, gcd(a,q) = 1, with
/// Q = (log N)^C. The q = 1 arc is centred at 1 and wraps past 0.
pub fn major_arcs(n: u64, c_exp: f64) -> Result<MajorArcs> {
    if n < 100 {
        return Err(Error::Precondition(format!("need N ≥ 100, got {n}")));
    }
    let q = (n as f64).ln().powf(c_exp);
    major_arcs_with_q(n, q)
}

pub fn major_arcs_with_q(n: u64, q: f64) -> Result<MajorArcs> {
    let nf = n as f64;
    if !(q >= 1.0) {
        return Err(Error::Config(format!("Q = {q} must be at least 1")));
    }
    if q >= nf.cbrt() {
        return Err(Error::Config(format!("Q = {q} ≥ N^(1/3) = {}; arcs would overlap", nf.cbrt())));
    }
    let w = q / nf;
    let qi = q.floor() as u64;
    let mut arcs = Vec::new();
    for d in 1..=qi {
        for a in 1..=d {
            if gcd(a, d) == 1 {
                arcs.push(Arc { q: d, a, center: a as f64 / d as f64, half_width: w });
            }
        }
    }
    arcs.sort_by(|x, y| (x.a * y.q).cmp(&(y.a * x.q)));
    // Neighbouring centres, including the wrap from the last arc (at 1) to the
    // first, must be more than 2w apart.
    let centres: Vec<f64> = arcs.iter().map(|a| a.center).collect();
    let wrap_gap = centres[0] + (1.0 - centres[centres.len() - 1]);
    let min_gap = centres
        .windows(2)
        .map(|p| p[1] - p[0])
        .chain(std::iter::once(if centres.len() > 1 { wrap_gap } else { 1.0 }))
        .fold(f64::INFINITY, f64::min);
    if min_gap <= 2.0 * w {
        return Err(Error::Config(format!(
            "major arcs overlap for N = {n}, Q = {q}: closest centres {min_gap} apart, width {}",
            2.0 * w
        )));
    }
    let measure = arcs.len() as f64 * 2.0 * w;
    Ok(MajorArcs { n, q, arcs, measure })
}
