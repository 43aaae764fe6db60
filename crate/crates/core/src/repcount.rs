//! Representation counts r_{A,h}(n) over ordered h-tuples, plain or
//! weighted, with the exact/non-exact decomposition, the δ-split, greedy
//! disjoint families and additive energy.

use std::fmt::Write as _;

use num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::basesets::SieveIndex;
use crate::budget::Budget;
use crate::error::{Error, Result};
use crate::numerics::{fmt_f64, Kahan};
use crate::regvar::TargetDensity;

pub const MAX_DECOMPOSITION_H: u32 = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Method {
    Naive,
    Convolution,
    MeetInMiddle,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::Naive => "naive",
            Method::Convolution => "convolution",
            Method::MeetInMiddle => "mim",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "naive" => Ok(Method::Naive),
            "convolution" | "conv" => Ok(Method::Convolution),
            "mim" | "meet-in-middle" => Ok(Method::MeetInMiddle),
            _ => Err(Error::Config(format!("unknown method `{s}` (naive|convolution|mim)"))),
        }
    }
}

/// Per-coordinate weights w(x).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum WeightSpec {
    Unit,
    /// c·f(x)/B(x), the inclusion probabilities of the random model.
    Expectation { density: TargetDensity, c: f64 },
    /// x^{ω−1/k}·log x.
    PrimePower { omega: f64, k: u32 },
    /// x^{ω−1/k}.
    Power { omega: f64, k: u32 },
}

impl WeightSpec {
    pub fn name(&self) -> &'static str {
        match self {
            WeightSpec::Unit => "unit",
            WeightSpec::Expectation { .. } => "expectation",
            WeightSpec::PrimePower { .. } => "prime_power",
            WeightSpec::Power { .. } => "power",
        }
    }

    /// w(x) given the base counting function value B(x).
    pub fn weight(&self, x: u64, b_of_x: u64) -> f64 {
        let xf = x as f64;
        match *self {
            WeightSpec::Unit => 1.0,
            WeightSpec::Expectation { density, c } => c * density.eval(xf) / b_of_x as f64,
            WeightSpec::PrimePower { omega, k } => xf.powf(omega - 1.0 / k as f64) * xf.ln(),
            WeightSpec::Power { omega, k } => xf.powf(omega - 1.0 / k as f64),
        }
    }

    /// Weights for every element of the sieve up to `x`, in order.
    pub fn weights_for(&self, base: &SieveIndex, x: u64) -> Vec<f64> {
        base.upto(x)
            .iter()
            .enumerate()
            .map(|(i, &e)| self.weight(e, i as u64 + 1))
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum Values {
    Counts(Vec<u64>),
    Weighted(Vec<f64>),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RepTable {
    pub h: u32,
    pub n_max: u64,
    pub method: Method,
    pub elements: usize,
    pub values: Values,
}

impl RepTable {
    pub fn counts(&self) -> Option<&[u64]> {
        match &self.values {
            Values::Counts(v) => Some(v),
            Values::Weighted(_) => None,
        }
    }

    pub fn weighted(&self) -> Option<&[f64]> {
        match &self.values {
            Values::Weighted(v) => Some(v),
            Values::Counts(_) => None,
        }
    }

    pub fn value(&self, n: u64) -> f64 {
        match &self.values {
            Values::Counts(v) => v.get(n as usize).copied().unwrap_or(0) as f64,
            Values::Weighted(v) => v.get(n as usize).copied().unwrap_or(0.0),
        }
    }

    pub fn mode(&self) -> &'static str {
        match self.values {
            Values::Counts(_) => "unweighted",
            Values::Weighted(_) => "weighted",
        }
    }

    /// CSV dump: comment header then `n,value` rows.
    pub fn to_csv(&self, provenance: &str) -> String {
        let mut s = format!(
            "# h={},mode={},method={},elements={},N={}",
            self.h,
            self.mode(),
            self.method.name(),
            self.elements,
            self.n_max
        );
        if !provenance.is_empty() {
            s.push(',');
            s.push_str(provenance);
        }
        s.push_str("\nn,value\n");
        for n in 0..=self.n_max {
            match &self.values {
                Values::Counts(v) => writeln!(s, "{n},{}", v[n as usize]).unwrap(),
                Values::Weighted(v) => writeln!(s, "{n},{}", fmt_f64(v[n as usize])).unwrap(),
            }
        }
        s
    }
}

fn check_set(a: &[u64]) -> Result<()> {
    if a.first() == Some(&0) {
        return Err(Error::Precondition("sets must not contain 0".into()));
    }
    if a.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::Precondition("element list must be strictly increasing".into()));
    }
    Ok(())
}

/// Representation table for all n ≤ N. With `weights` (aligned with `a`)
/// the table holds Σ Π w(x_i); otherwise exact ordered-tuple counts.
pub fn rep_table(
    a: &[u64],
    h: u32,
    n_max: u64,
    weights: Option<&[f64]>,
    method: Method,
    budget: &Budget,
) -> Result<RepTable> {
    check_set(a)?;
    if h < 2 {
        return Err(Error::Precondition(format!("h must be at least 2, got {h}")));
    }
    if let Some(w) = weights {
        if w.len() != a.len() {
            return Err(Error::Precondition("weights must align with the element list".into()));
        }
    }
    let len = a.partition_point(|&x| x <= n_max);
    let a = &a[..len];
    let weights = weights.map(|w| &w[..len]);
    budget.check_memory("rep_table", 16 * (n_max + 1))?;
    let values = match (method, weights) {
        (Method::Naive, None) => Values::Counts(naive_counts(a, h, n_max, budget)?),
        (Method::Naive, Some(w)) => Values::Weighted(naive_weighted(a, w, h, n_max, budget)?),
        (Method::Convolution, None) => {
            let bound = (a.len() as u128).checked_pow(h).unwrap_or(u128::MAX);
            if bound > i64::MAX as u128 {
                return Err(Error::Size(format!("{}^{h} tuples overflow 64-bit counts", a.len())));
            }
            let ind = indicator(a, n_max);
            let out = power_by(&ind, h, &|x, y| exact_convolve(x, y, n_max, budget))?;
            Values::Counts(out.into_iter().map(|v| v as u64).collect())
        }
        (Method::Convolution, Some(w)) => {
            let mut v = vec![0.0; n_max as usize + 1];
            for (&x, &wx) in a.iter().zip(w) {
                v[x as usize] = wx;
            }
            Values::Weighted(power_by(&v, h, &|x, y| fft_convolve(x, y, n_max, budget))?)
        }
        (Method::MeetInMiddle, None) => {
            let left = naive_counts_raw(a, h.div_ceil(2), n_max, budget)?;
            let right = naive_counts_raw(a, h / 2, n_max, budget)?;
            Values::Counts(merge_counts(&left, &right, n_max))
        }
        (Method::MeetInMiddle, Some(w)) => {
            let left = naive_weighted_raw(a, w, h.div_ceil(2), n_max, budget)?;
            let right = naive_weighted_raw(a, w, h / 2, n_max, budget)?;
            Values::Weighted(merge_weighted(&left, &right, n_max))
        }
    };
    Ok(RepTable { h, n_max, method, elements: len, values })
}

fn indicator(a: &[u64], n_max: u64) -> Vec<i64> {
    let mut v = vec![0i64; n_max as usize + 1];
    for &x in a {
        v[x as usize] = 1;
    }
    v
}

/// x^h under a truncated convolution, by binary powering.
fn power_by<T: Clone>(v: &[T], h: u32, mul: &dyn Fn(&[T], &[T]) -> Result<Vec<T>>) -> Result<Vec<T>> {
    let mut result: Option<Vec<T>> = None;
    let mut base = v.to_vec();
    let mut e = h;
    loop {
        if e & 1 == 1 {
            result = Some(match result {
                None => base.clone(),
                Some(r) => mul(&r, &base)?,
            });
        }
        e >>= 1;
        if e == 0 {
            break;
        }
        base = mul(&base, &base)?;
    }
    Ok(result.unwrap())
}

/// Exact integer convolution truncated to indices ≤ n_max.
pub fn exact_convolve(x: &[i64], y: &[i64], n_max: u64, budget: &Budget) -> Result<Vec<i64>> {
    let lx = last_nonzero(x);
    let ly = last_nonzero(y);
    let out_len = n_max as usize + 1;
    let (Some(lx), Some(ly)) = (lx, ly) else {
        return Ok(vec![0; out_len]);
    };
    let full = lx + ly + 1;
    budget.check_memory("convolution", 64 * full.next_power_of_two() as u64)?;
    if full > 1 << 24 {
        return Err(Error::Resource {
            what: "exact convolution length".into(),
            budget: "transform_length",
            needed: full as u64,
            allowed: 1 << 24,
        });
    }
    let mut out = ac_library::convolution_i64(&x[..=lx], &y[..=ly]);
    out.resize(out_len, 0);
    Ok(out)
}

fn last_nonzero<T: Default + PartialEq>(v: &[T]) -> Option<usize> {
    let zero = T::default();
    v.iter().rposition(|t| *t != zero)
}

/// Floating-point convolution through a power-of-two FFT, truncated to n_max.
pub fn fft_convolve(x: &[f64], y: &[f64], n_max: u64, budget: &Budget) -> Result<Vec<f64>> {
    let out_len = n_max as usize + 1;
    let (Some(lx), Some(ly)) = (last_nonzero(x), last_nonzero(y)) else {
        return Ok(vec![0.0; out_len]);
    };
    let len = (lx + ly + 1).next_power_of_two();
    budget.check_memory("fft_convolution", 32 * len as u64)?;
    let mut planner = FftPlanner::<f64>::new();
    let fwd = planner.plan_fft_forward(len);
    let inv = planner.plan_fft_inverse(len);
    let load = |v: &[f64], l: usize| {
        let mut buf = vec![Complex64::new(0.0, 0.0); len];
        for (b, &t) in buf.iter_mut().zip(&v[..=l]) {
            b.re = t;
        }
        buf
    };
    let mut fx = load(x, lx);
    fwd.process(&mut fx);
    let mut fy = load(y, ly);
    fwd.process(&mut fy);
    for (p, q) in fx.iter_mut().zip(&fy) {
        *p *= q;
    }
    inv.process(&mut fx);
    let scale = 1.0 / len as f64;
    let mut out: Vec<f64> = fx.iter().take(out_len).map(|z| z.re * scale).collect();
    out.resize(out_len, 0.0);
    Ok(out)
}

/// Visit every ordered ℓ-tuple from `a` with Σ x_i ≤ n_max, passing its sum
/// and the index path. Pruned on the running sum.
fn for_each_tuple(a: &[u64], ell: u32, n_max: u64, visit: &mut dyn FnMut(u64, &[usize])) {
    fn rec(a: &[u64], left: u32, sum: u64, n_max: u64, path: &mut Vec<usize>, visit: &mut dyn FnMut(u64, &[usize])) {
        if left == 0 {
            visit(sum, path);
            return;
        }
        let min = a[0];
        let room = n_max - sum;
        let reserve = min * (left as u64 - 1);
        if room < reserve + min {
            return;
        }
        let cap = room - reserve;
        for (i, &x) in a.iter().enumerate() {
            if x > cap {
                break;
            }
            path.push(i);
            rec(a, left - 1, sum + x, n_max, path, visit);
            path.pop();
        }
    }
    if a.is_empty() || ell == 0 {
        if ell == 0 {
            visit(0, &[]);
        }
        return;
    }
    rec(a, ell, 0, n_max, &mut Vec::with_capacity(ell as usize), visit);
}

fn tuple_work(a: &[u64], ell: u32) -> u64 {
    (a.len() as u64).saturating_pow(ell)
}

fn naive_counts_raw(a: &[u64], ell: u32, n_max: u64, budget: &Budget) -> Result<Vec<u64>> {
    budget.check_work("naive enumeration", tuple_work(a, ell))?;
    let mut counts = vec![0u64; n_max as usize + 1];
    for_each_tuple(a, ell, n_max, &mut |s, _| counts[s as usize] += 1);
    Ok(counts)
}

fn naive_counts(a: &[u64], h: u32, n_max: u64, budget: &Budget) -> Result<Vec<u64>> {
    naive_counts_raw(a, h, n_max, budget)
}

fn naive_weighted_raw(a: &[u64], w: &[f64], ell: u32, n_max: u64, budget: &Budget) -> Result<Vec<f64>> {
    budget.check_work("naive enumeration", tuple_work(a, ell))?;
    let mut acc = vec![Kahan::new(); n_max as usize + 1];
    for_each_tuple(a, ell, n_max, &mut |s, path| {
        acc[s as usize].add(path.iter().map(|&i| w[i]).product());
    });
    Ok(acc.into_iter().map(|k| k.value()).collect())
}

fn naive_weighted(a: &[u64], w: &[f64], h: u32, n_max: u64, budget: &Budget) -> Result<Vec<f64>> {
    naive_weighted_raw(a, w, h, n_max, budget)
}

fn sparse<T: Copy + Default + PartialEq>(v: &[T]) -> Vec<(usize, T)> {
    let zero = T::default();
    v.iter().copied().enumerate().filter(|&(_, t)| t != zero).collect()
}

fn merge_counts(left: &[u64], right: &[u64], n_max: u64) -> Vec<u64> {
    let l = sparse(left);
    let r = sparse(right);
    let mut out = vec![0u64; n_max as usize + 1];
    for &(s1, c1) in &l {
        for &(s2, c2) in &r {
            let s = s1 + s2;
            if s > n_max as usize {
                break;
            }
            out[s] += c1 * c2;
        }
    }
    out
}

fn merge_weighted(left: &[f64], right: &[f64], n_max: u64) -> Vec<f64> {
    let l = sparse(left);
    let r = sparse(right);
    let mut acc = vec![Kahan::new(); n_max as usize + 1];
    for &(s1, c1) in &l {
        for &(s2, c2) in &r {
            let s = s1 + s2;
            if s > n_max as usize {
                break;
            }
            acc[s].add(c1 * c2);
        }
    }
    acc.into_iter().map(|k| k.value()).collect()
}

/// Visit every ordered tuple (x_1..x_ℓ) from `a` with Σ c_i·x_i = n, all
/// entries pairwise distinct when `distinct` is set. The last coordinate is
/// solved for rather than enumerated.
fn for_each_solution(a: &[u64], coeffs: &[u64], n: u64, distinct: bool, visit: &mut dyn FnMut(&[u64])) {
    fn rec(
        a: &[u64],
        coeffs: &[u64],
        rest: u64,
        distinct: bool,
        tuple: &mut Vec<u64>,
        visit: &mut dyn FnMut(&[u64]),
    ) {
        let pos = tuple.len();
        let c = coeffs[pos];
        let min = a[0];
        let tail_min: u64 = coeffs[pos + 1..].iter().map(|&d| d * min).sum();
        if pos + 1 == coeffs.len() {
            if rest.is_multiple_of(c) {
                let x = rest / c;
                if a.binary_search(&x).is_ok() && !(distinct && tuple.contains(&x)) {
                    tuple.push(x);
                    visit(tuple);
                    tuple.pop();
                }
            }
            return;
        }
        for &x in a {
            if c * x + tail_min > rest {
                break;
            }
            if distinct && tuple.contains(&x) {
                continue;
            }
            tuple.push(x);
            rec(a, coeffs, rest - c * x, distinct, tuple, visit);
            tuple.pop();
        }
    }
    if a.is_empty() || coeffs.is_empty() {
        return;
    }
    rec(a, coeffs, n, distinct, &mut Vec::with_capacity(coeffs.len()), visit);
}

/// r_{A,h}(n) by enumeration of ordered tuples.
pub fn rep_count_at(a: &[u64], h: u32, n: u64) -> Result<u64> {
    check_set(a)?;
    let mut count = 0;
    for_each_solution(a, &vec![1; h as usize], n, false, &mut |_| count += 1);
    Ok(count)
}

/// All ordered compositions of h.
pub fn compositions(h: u32) -> Vec<Vec<u32>> {
    fn rec(left: u32, cur: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
        if left == 0 {
            out.push(cur.clone());
            return;
        }
        for part in 1..=left {
            cur.push(part);
            rec(left - part, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(h, &mut Vec::new(), &mut out);
    out
}

fn factorial(n: u32) -> u128 {
    (1..=n as u128).product()
}

/// h!·w(c) = h!·h!/(c_1!⋯c_ℓ!·ℓ!), the integer multiplicity with which the
/// ordered distinct solutions for composition c enter h!·r_{A,h}(n).
pub fn composition_multiplicity(c: &[u32]) -> u128 {
    let h: u32 = c.iter().sum();
    let denom: u128 = c.iter().map(|&ci| factorial(ci)).product::<u128>() * factorial(c.len() as u32);
    factorial(h) * factorial(h) / denom
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DecompositionPart {
    pub composition: Vec<u32>,
    /// ρ^{(c)}: ordered pairwise-distinct ℓ-tuples with Σ c_i x_i = n.
    pub count: u64,
    /// h!·w(c); see [`composition_multiplicity`].
    pub multiplicity: u128,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Decomposition {
    pub n: u64,
    pub h: u32,
    pub r: u64,
    /// ρ_{A,h}(n): ordered tuples with pairwise distinct entries.
    pub rho: u64,
    /// Compositions with ℓ < h.
    pub parts: Vec<DecompositionPart>,
}

impl Decomposition {
    /// r − ρ, the non-exact solutions.
    pub fn non_exact(&self) -> u64 {
        self.r - self.rho
    }

    /// Σ_c h!·w(c)·ρ^{(c)} over every composition, ℓ = h included.
    pub fn weighted_total(&self) -> u128 {
        let fh = factorial(self.h);
        fh * self.rho as u128
            + self
                .parts
                .iter()
                .map(|p| p.multiplicity * p.count as u128)
                .sum::<u128>()
    }

    /// h!·r = Σ_c h!·w(c)·ρ^{(c)}.
    pub fn identity_holds(&self) -> bool {
        factorial(self.h) * self.r as u128 == self.weighted_total()
    }
}

/// r_{A,h}(n) together with ρ_{A,h}(n) and every ρ^{(c)}(n), ℓ < h.
pub fn exact_decomposition(a: &[u64], h: u32, n: u64) -> Result<Decomposition> {
    check_set(a)?;
    if h > MAX_DECOMPOSITION_H {
        return Err(Error::Size(format!("decomposition supports h ≤ {MAX_DECOMPOSITION_H}, got {h}")));
    }
    if h < 2 {
        return Err(Error::Precondition(format!("h must be at least 2, got {h}")));
    }
    let count = |coeffs: &[u64], distinct: bool| {
        let mut c = 0u64;
        for_each_solution(a, coeffs, n, distinct, &mut |_| c += 1);
        c
    };
    let ones = vec![1u64; h as usize];
    let r = count(&ones, false);
    let rho = count(&ones, true);
    let parts = compositions(h)
        .into_iter()
        .filter(|c| c.len() < h as usize)
        .map(|c| {
            let coeffs: Vec<u64> = c.iter().map(|&x| x as u64).collect();
            DecompositionPart { count: count(&coeffs, true), multiplicity: composition_multiplicity(&c), composition: c }
        })
        .collect();
    Ok(Decomposition { n, h, r, rho, parts })
}

/// (r_small, r_normal): solutions with some x_j < n^δ, and with all x_j ≥ n^δ.
pub fn delta_split(a: &[u64], h: u32, n: u64, delta: f64) -> Result<(u64, u64)> {
    check_set(a)?;
    if n < 2 {
        return Err(Error::Precondition(format!("δ-split needs n ≥ 2, got {n}")));
    }
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::Precondition(format!("δ must lie in (0,1), got {delta}")));
    }
    let threshold = (n as f64).powf(delta);
    let (mut small, mut normal) = (0u64, 0u64);
    for_each_solution(a, &vec![1; h as usize], n, false, &mut |t| {
        if t.iter().any(|&x| (x as f64) < threshold) {
            small += 1;
        } else {
            normal += 1;
        }
    });
    Ok((small, normal))
}

/// Greedy disjoint family: representations as sorted tuples, scanned in
/// lexicographic order, kept when they share no element with those kept.
pub fn maxdisfam_size(a: &[u64], h: u32, n: u64, exact_only: bool) -> Result<usize> {
    check_set(a)?;
    let mut used: Vec<u64> = Vec::new();
    let mut kept = 0;
    for rep in sorted_representations(a, h, n, exact_only) {
        if rep.iter().all(|x| !used.contains(x)) {
            used.extend_from_slice(&rep);
            kept += 1;
        }
    }
    Ok(kept)
}

/// Non-decreasing (strictly increasing if `exact_only`) h-tuples summing to
/// n, in lexicographic order.
pub fn sorted_representations(a: &[u64], h: u32, n: u64, exact_only: bool) -> Vec<Vec<u64>> {
    fn rec(a: &[u64], from: usize, left: u32, rest: u64, strict: bool, cur: &mut Vec<u64>, out: &mut Vec<Vec<u64>>) {
        if left == 0 {
            if rest == 0 {
                out.push(cur.clone());
            }
            return;
        }
        for i in from..a.len() {
            let x = a[i];
            // Remaining entries are at least x each.
            if x * left as u64 > rest {
                break;
            }
            cur.push(x);
            rec(a, if strict { i + 1 } else { i }, left - 1, rest - x, strict, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(a, 0, h, n, exact_only, &mut Vec::new(), &mut out);
    out
}

/// Σ_{n ≤ ℓx} r_{A∩[1,x],ℓ}(n)², exactly.
pub fn additive_energy(a: &[u64], ell: u32, x: u64, budget: &Budget) -> Result<u128> {
    check_set(a)?;
    let part = &a[..a.partition_point(|&e| e <= x)];
    if ell == 0 {
        return Err(Error::Precondition("ℓ must be at least 1".into()));
    }
    if ell == 1 {
        return Ok(part.len() as u128);
    }
    let n_max = ell as u64 * x;
    let table = rep_table(part, ell, n_max, None, Method::Convolution, budget)?;
    Ok(table
        .counts()
        .unwrap()
        .iter()
        .map(|&r| r as u128 * r as u128)
        .sum())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn b() -> Budget {
        Budget::default()
    }

    fn random_set(rng: &mut ChaCha8Rng, max: u64, p: f64) -> Vec<u64> {
        (1..=max).filter(|_| rng.gen::<f64>() < p).collect()
    }

    #[test]
    fn small_tables() {
        for m in [Method::Naive, Method::Convolution, Method::MeetInMiddle] {
            let t = rep_table(&[1, 2], 2, 4, None, m, &b()).unwrap();
            assert_eq!(t.counts().unwrap(), &[0, 0, 1, 2, 1]);
            let full: Vec<u64> = (1..=20).collect();
            let t = rep_table(&full, 2, 21, None, m, &b()).unwrap();
            for n in 2..=21u64 {
                assert_eq!(t.counts().unwrap()[n as usize], n - 1);
            }
        }
    }

    #[test]
    fn methods_agree_on_random_instance() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let mut a: Vec<u64> = (1..=2000).collect();
        for i in (1..a.len()).rev() {
            a.swap(i, rng.gen_range(0..=i));
        }
        let mut a: Vec<u64> = a[..200].to_vec();
        a.sort_unstable();
        let naive = rep_table(&a, 3, 6000, None, Method::Naive, &b()).unwrap();
        let conv = rep_table(&a, 3, 6000, None, Method::Convolution, &b()).unwrap();
        let mim = rep_table(&a, 3, 6000, None, Method::MeetInMiddle, &b()).unwrap();
        assert_eq!(naive.values, conv.values);
        assert_eq!(naive.values, mim.values);
        let total: u64 = naive.counts().unwrap().iter().sum();
        assert_eq!(total, 200u64.pow(3));
    }

    #[test]
    fn weighted_methods_agree() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let a = random_set(&mut rng, 400, 0.3);
        let w: Vec<f64> = a.iter().map(|&x| (x as f64).powf(-0.4)).collect();
        let naive = rep_table(&a, 3, 1200, Some(&w), Method::Naive, &b()).unwrap();
        for m in [Method::Convolution, Method::MeetInMiddle] {
            let other = rep_table(&a, 3, 1200, Some(&w), m, &b()).unwrap();
            for (x, y) in naive.weighted().unwrap().iter().zip(other.weighted().unwrap()) {
                assert!((x - y).abs() <= 1e-10 * (1.0 + x.abs()));
            }
        }
        let ones = vec![1.0; a.len()];
        let unit = rep_table(&a, 3, 1200, Some(&ones), Method::Naive, &b()).unwrap();
        let counts = rep_table(&a, 3, 1200, None, Method::Naive, &b()).unwrap();
        for n in 0..=1200 {
            assert_eq!(unit.value(n), counts.value(n));
        }
    }

    #[test]
    fn csv_dump() {
        let t = rep_table(&[1, 2], 2, 4, None, Method::Naive, &b()).unwrap();
        let csv = t.to_csv("seed=3");
        assert!(csv.starts_with("# h=2,mode=unweighted,method=naive,elements=2,N=4,seed=3\nn,value\n0,0\n"));
        assert!(csv.ends_with("4,1\n"));
    }

    #[test]
    fn decomposition_examples() {
        let d = exact_decomposition(&[1, 2, 3], 2, 4).unwrap();
        assert_eq!((d.r, d.rho, d.non_exact()), (3, 2, 1));
        assert!(d.identity_holds());
        let d = exact_decomposition(&[1, 2, 3, 5, 8], 2, 9).unwrap();
        assert_eq!(d.non_exact(), 0);
        assert!(matches!(exact_decomposition(&[1], 9, 9), Err(Error::Size(_))));
        // h = 3: r = ρ + 3ρ^{(2,1)} + ρ^{(3)} in integer form.
        assert_eq!(composition_multiplicity(&[2, 1]), 9);
        assert_eq!(composition_multiplicity(&[1, 2]), 9);
        assert_eq!(composition_multiplicity(&[3]), 6);
        assert_eq!(composition_multiplicity(&[1, 1, 1]), 6);
    }

    #[test]
    fn decomposition_identity_random() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for h in 2..=5u32 {
            let a = random_set(&mut rng, 40, 0.4);
            for n in 0..=(h as u64 * 40) {
                let d = exact_decomposition(&a, h, n).unwrap();
                assert!(d.identity_holds(), "h={h} n={n}");
                assert_eq!(d.r, rep_count_at(&a, h, n).unwrap());
            }
        }
    }

    #[test]
    fn delta_split_examples() {
        let sq = [1u64, 4, 9, 16, 25];
        assert_eq!(delta_split(&sq, 2, 20, 0.5).unwrap(), (2, 0));
        let a = [10u64, 20, 30];
        assert_eq!(delta_split(&a, 2, 40, 0.01).unwrap(), (0, 3));
        assert_eq!(delta_split(&a, 2, 40, 0.99).unwrap(), (3, 0));
    }

    #[test]
    fn maxdisfam_examples() {
        assert_eq!(maxdisfam_size(&[1, 2, 4, 5], 2, 6, true).unwrap(), 2);
        assert_eq!(maxdisfam_size(&[3], 2, 6, true).unwrap(), 0);
        assert_eq!(maxdisfam_size(&[3], 2, 6, false).unwrap(), 1);
    }

    #[test]
    fn maxdisfam_is_half_optimal() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let mut checked = 0;
        while checked < 200 {
            let a = random_set(&mut rng, 60, 0.35);
            let n = rng.gen_range(10..=120);
            for exact in [true, false] {
                let reps = sorted_representations(&a, 2, n, exact);
                if reps.is_empty() || reps.len() > 12 {
                    continue;
                }
                let mut best = 0;
                for mask in 0u32..(1 << reps.len()) {
                    let chosen: Vec<&Vec<u64>> = (0..reps.len()).filter(|i| mask >> i & 1 == 1).map(|i| &reps[i]).collect();
                    let mut seen = Vec::new();
                    let disjoint = chosen.iter().all(|r| {
                        let ok = r.iter().all(|x| !seen.contains(x));
                        seen.extend_from_slice(r);
                        ok
                    });
                    if disjoint {
                        best = best.max(chosen.len());
                    }
                }
                let greedy = maxdisfam_size(&a, 2, n, exact).unwrap();
                assert!(2 * greedy >= best, "greedy {greedy} best {best}");
                checked += 1;
            }
        }
    }

    #[test]
    fn energy_examples() {
        assert_eq!(additive_energy(&[1, 2], 2, 2, &b()).unwrap(), 6);
        let n: Vec<u64> = (1..=10_000).collect();
        assert_eq!(additive_energy(&n, 1, 10_000, &b()).unwrap(), 10_000);
        let x = 10_000u128;
        let closed = 2 * (1..x).map(|m| m * m).sum::<u128>() + x * x;
        assert_eq!(additive_energy(&n, 2, 10_000, &b()).unwrap(), closed);
    }

    #[test]
    fn budget_errors() {
        let tight = Budget { memory_bytes: 1000, ..b() };
        assert!(rep_table(&[1, 2, 3], 2, 100_000, None, Method::Convolution, &tight).unwrap_err().is_resource());
        assert!(rep_table(&[2, 1], 2, 10, None, Method::Naive, &b()).is_err());
    }

    proptest! {
        #[test]
        fn methods_equivalent(seed in any::<u64>(), h in 2u32..5, max in 20u64..120) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let a = random_set(&mut rng, max, 0.3);
            prop_assume!(!a.is_empty());
            let n_max = h as u64 * max;
            let naive = rep_table(&a, h, n_max, None, Method::Naive, &b()).unwrap();
            let conv = rep_table(&a, h, n_max, None, Method::Convolution, &b()).unwrap();
            let mim = rep_table(&a, h, n_max, None, Method::MeetInMiddle, &b()).unwrap();
            prop_assert_eq!(&naive.values, &conv.values);
            prop_assert_eq!(&naive.values, &mim.values);
            let total: u64 = naive.counts().unwrap().iter().sum();
            prop_assert_eq!(total, (a.len() as u64).pow(h));
            let min = a[0];
            for n in 0..(h as u64 * min) {
                prop_assert_eq!(naive.counts().unwrap()[n as usize], 0);
            }
        }

        #[test]
        fn reflection_symmetry(seed in any::<u64>(), h in 2u32..4) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let m = 50u64;
            let a = random_set(&mut rng, m, 0.4);
            prop_assume!(!a.is_empty());
            let mut refl: Vec<u64> = a.iter().map(|&x| m + 1 - x).collect();
            refl.sort_unstable();
            let n_max = h as u64 * m;
            let t = rep_table(&a, h, n_max, None, Method::Convolution, &b()).unwrap();
            let u = rep_table(&refl, h, n_max, None, Method::Convolution, &b()).unwrap();
            for n in h as u64..=n_max {
                prop_assert_eq!(t.value(n), u.value(h as u64 * (m + 1) - n));
            }
        }

        #[test]
        fn delta_split_conserves(seed in any::<u64>(), n in 2u64..300, delta in 0.01f64..0.99, h in 2u32..4) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let a = random_set(&mut rng, 150, 0.3);
            prop_assume!(!a.is_empty());
            let (s, r) = delta_split(&a, h, n, delta).unwrap();
            prop_assert_eq!(s + r, rep_count_at(&a, h, n).unwrap());
        }

        #[test]
        fn energy_lower_bound(seed in any::<u64>(), ell in 1u32..4, x in 10u64..200) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let a = random_set(&mut rng, 200, 0.3);
            let e = additive_energy(&a, ell, x, &b()).unwrap();
            let cnt = a.iter().filter(|&&v| v <= x).count() as u128;
            prop_assert!(e * (ell as u128 * x as u128) >= cnt.pow(ell).pow(2));
        }
    }
}
