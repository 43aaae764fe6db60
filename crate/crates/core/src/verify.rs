//! Experiments comparing exact (weighted) representation counts with their
//! predicted main terms, and the base-set condition diagnostics.

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::basesets::{build_sieve_cached, compute_k, h_star, BaseKind, BaseSetSpec, SieveIndex};
use crate::budget::Budget;
use crate::error::{Error, Result};
use crate::numerics::{gamma_power_ratio, ln_gamma, ls_slope, Kahan};
use crate::regvar::{c_bhf, TargetDensity};
use crate::repcount::{additive_energy, rep_table, Method, WeightSpec};
use crate::report::{Band, Declared, OffClassRule, OffRow, Row, Rule, SeriesPoint, VerificationReport};
use crate::sampler::SampledSubbasis;
use crate::singular::{singular_series_with_tail, SingularTable, Variant};

pub const EXTRAPOLATED: &str = "extrapolated regime";
const LOG_SLOW: &str = "error term decays like a power of 1/log n; the band is wide accordingly";

pub fn variant_for(kind: BaseKind) -> Variant {
    match kind {
        BaseKind::PowersOfNaturals => Variant::Waring,
        BaseKind::PowersOfPrimes => Variant::WaringGoldbach,
    }
}

/// Whether n lies in the class where the main term is expected: n ≡ h
/// (mod K(k)) for prime powers, every n for powers of naturals.
pub fn in_class(kind: BaseKind, k: u32, h: u32, n: u64) -> Result<bool> {
    Ok(match kind {
        BaseKind::PowersOfNaturals => true,
        BaseKind::PowersOfPrimes => {
            let m = compute_k(k)?;
            n as u128 % m == h as u128 % m
        }
    })
}

/// `count` distinct in-class n drawn uniformly from [lo, hi], ascending.
pub fn sample_in_class(kind: BaseKind, k: u32, h: u32, lo: u64, hi: u64, count: usize, seed: u64) -> Result<Vec<u64>> {
    if lo > hi {
        return Err(Error::Precondition(format!("empty range [{lo}, {hi}]")));
    }
    let pool: Vec<u64> = (lo..=hi)
        .map(|n| in_class(kind, k, h, n).map(|ok| ok.then_some(n)))
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .flatten()
        .collect();
    if count > pool.len() {
        return Err(Error::Precondition(format!("only {} in-class n in [{lo}, {hi}], asked for {count}", pool.len())));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out: Vec<u64> = sample(&mut rng, pool.len(), count).into_iter().map(|i| pool[i]).collect();
    out.sort_unstable();
    Ok(out)
}

fn dense(elements: &[u64], weights: &[f64], n_max: u64) -> Vec<f64> {
    let mut v = vec![0.0; n_max as usize + 1];
    for (&x, &w) in elements.iter().zip(weights) {
        if x <= n_max {
            v[x as usize] = w;
        }
    }
    v
}

fn weighted_power(elements: &[u64], weights: &[f64], h: u32, n_max: u64, budget: &Budget) -> Result<Vec<f64>> {
    if h == 1 {
        return Ok(dense(elements, weights, n_max));
    }
    let t = rep_table(elements, h, n_max, Some(weights), Method::Convolution, budget)?;
    Ok(t.weighted().unwrap().to_vec())
}

fn count_power(elements: &[u64], h: u32, n_max: u64, budget: &Budget) -> Result<Vec<u64>> {
    if h == 1 {
        let mut v = vec![0; n_max as usize + 1];
        for &x in elements.iter().take_while(|&&x| x <= n_max) {
            v[x as usize] = 1;
        }
        return Ok(v);
    }
    let t = rep_table(elements, h, n_max, None, Method::Convolution, budget)?;
    Ok(t.counts().unwrap().to_vec())
}

/// Σ over h-tuples from `elements` summing to each n of Π w(x_i), from an
/// ⌈h/2⌉-fold table and the ⌊h/2⌋-fold table's nonzero entries.
pub fn mim_weighted(elements: &[u64], weights: &[f64], h: u32, ns: &[u64], budget: &Budget) -> Result<Vec<f64>> {
    if h < 2 {
        return Err(Error::Precondition(format!("h must be at least 2, got {h}")));
    }
    let Some(&n_max) = ns.iter().max() else {
        return Ok(Vec::new());
    };
    let left = weighted_power(elements, weights, h.div_ceil(2), n_max, budget)?;
    let right = weighted_power(elements, weights, h / 2, n_max, budget)?;
    let nz: Vec<(usize, f64)> = right.iter().enumerate().filter(|(_, &w)| w != 0.0).map(|(i, &w)| (i, w)).collect();
    Ok(ns
        .par_iter()
        .map(|&n| {
            let n = n as usize;
            let mut acc = Kahan::new();
            for &(m, w) in nz.iter().take_while(|(m, _)| *m <= n) {
                acc.add(w * left[n - m]);
            }
            acc.value()
        })
        .collect())
}

/// Exact r_{A,h}(n) for each n, by the same split.
pub fn mim_counts(elements: &[u64], h: u32, ns: &[u64], budget: &Budget) -> Result<Vec<u128>> {
    if h < 2 {
        return Err(Error::Precondition(format!("h must be at least 2, got {h}")));
    }
    let Some(&n_max) = ns.iter().max() else {
        return Ok(Vec::new());
    };
    let left = count_power(elements, h.div_ceil(2), n_max, budget)?;
    let right = count_power(elements, h / 2, n_max, budget)?;
    Ok(ns
        .iter()
        .map(|&n| {
            let n = n as usize;
            (0..=n).filter(|&m| right[m] != 0).map(|m| right[m] as u128 * left[n - m] as u128).sum()
        })
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ExpectedRep {
    pub n: u64,
    /// c^h·Σ Π f(x_i)/B(x_i) over solutions, i.e. E r_{A,h}(n).
    pub empirical: f64,
    /// c^h·𝔖·C_{B,h,f}·f(n)^h/n.
    pub predicted: f64,
    pub singular: f64,
    pub tail: f64,
}

impl ExpectedRep {
    pub fn ratio(&self) -> f64 {
        self.empirical / self.predicted
    }
}

/// Expected representation counts of the random subbasis at each n.
pub fn expected_rep(
    base: &SieveIndex,
    density: &TargetDensity,
    c: f64,
    ns: &[u64],
    q_max: u64,
    budget: &Budget,
) -> Result<Vec<ExpectedRep>> {
    let Some(&n_max) = ns.iter().max() else {
        return Ok(Vec::new());
    };
    base.require(n_max, "expected_rep")?;
    let h = density.h;
    let spec = base.spec();
    let elements = base.upto(n_max);
    let weights = WeightSpec::Expectation { density: *density, c }.weights_for(base, n_max);
    let empirical = mim_weighted(elements, &weights, h, ns, budget)?;
    let series = singular_series_with_tail(variant_for(spec.kind), ns, spec.k, h, q_max, budget)?;
    let constant = c.powi(h as i32) * c_bhf(spec.k, h, density.omega());
    Ok(ns
        .iter()
        .zip(empirical)
        .zip(series)
        .map(|((&n, e), (s, tail))| {
            let nf = n as f64;
            ExpectedRep {
                n,
                empirical: e,
                predicted: constant * s.value * density.eval(nf).powi(h as i32) / nf,
                singular: s.value,
                tail,
            }
        })
        .collect())
}

/// Off-class rule used by default: exact zeros for k = 1, else at most 5% of
/// the in-class median.
pub fn default_off_class(k: u32) -> OffClassRule {
    if k == 1 {
        OffClassRule::ExactZero
    } else {
        OffClassRule::MaxFractionOfMedian(0.05)
    }
}

fn check_omega(h: u32, omega: f64) -> Result<()> {
    if !(omega.is_finite() && omega * h as f64 >= 1.0 - 1e-6) {
        return Err(Error::Precondition(format!("need ω ≥ 1/h, got ω={omega}, h={h}")));
    }
    Ok(())
}

fn rel(tail: f64, value: f64) -> f64 {
    if value == 0.0 {
        0.0
    } else {
        tail / value.abs()
    }
}

/// Σ (x_1⋯x_h)^{ω−1/k}·log x_1⋯log x_h over x_i ∈ ℙ^k summing to n versus
/// 𝔖*(n,Q)·Γ(ω)^h/Γ(hω)·n^{hω−1}.
pub fn verify_goldbach_weighted(
    k: u32,
    h: u32,
    omega: f64,
    ns: &[u64],
    q_max: u64,
    declared: Declared,
    budget: &Budget,
) -> Result<VerificationReport> {
    check_omega(h, omega)?;
    let mut report = VerificationReport::new("goldbach_weighted", declared);
    report
        .param("variant", Variant::WaringGoldbach.name())
        .param("k", k)
        .param("h", h)
        .param("omega", omega)
        .param("Q", q_max)
        .param("n_list", join(ns));
    report.note(LOG_SLOW);
    if (h as u64) < h_star(k) {
        report.note(EXTRAPOLATED);
    }
    let Some(&n_max) = ns.iter().max() else {
        return Ok(report.finish());
    };
    let base = build_sieve_cached(BaseSetSpec::new(BaseKind::PowersOfPrimes, k, n_max), budget)?;
    let elements = base.elements();
    let weights = WeightSpec::PrimePower { omega, k }.weights_for(&base, n_max);
    let empirical = mim_weighted(elements, &weights, h, ns, budget)?;
    let series = singular_series_with_tail(Variant::WaringGoldbach, ns, k, h, q_max, budget)?;
    let gamma = gamma_power_ratio(omega, h);

    let off_ns: Vec<u64> = ns
        .iter()
        .copied()
        .filter(|&n| !in_class(BaseKind::PowersOfPrimes, k, h, n).unwrap_or(false))
        .collect();
    // A weighted sum is zero exactly when no representation exists.
    let support = mim_counts(elements, h, &off_ns, budget)?;
    let cutoff = (k as u64 + 1).pow(k);
    let large: Vec<u64> = elements.iter().copied().filter(|&x| x > cutoff).collect();
    let support_large = mim_counts(&large, h, &off_ns, budget)?;

    let mut off_i = 0;
    for ((&n, e), (s, tail)) in ns.iter().zip(empirical).zip(series) {
        let predicted = s.value * gamma * (n as f64).powf(h as f64 * omega - 1.0);
        if in_class(BaseKind::PowersOfPrimes, k, h, n)? && predicted > 0.0 {
            report.rows.push(Row::new(n, e, predicted, rel(tail, s.value), "in_class")?);
        } else {
            let e = if support[off_i] == 0 { 0.0 } else { e };
            report.off_class.push(OffRow::new(n, e, predicted, "obstruction"));
            report.series.push(SeriesPoint::new("off_class_count", n as f64, support[off_i] as f64));
            report.series.push(SeriesPoint::new("off_class_count_large_primes", n as f64, support_large[off_i] as f64));
            off_i += 1;
        }
    }
    if support.iter().any(|&c| c > 0) && support_large.iter().all(|&c| c == 0) {
        report.note(&format!(
            "off-class representations all use a prime power ≤ {cutoff}; without those they vanish"
        ));
    }
    Ok(report.finish())
}

/// Σ (x_1⋯x_h)^{ω−1/k} over x_i ∈ ℕ^k summing to n versus
/// 𝔖(n,Q)·k^{−h}·Γ(ω)^h/Γ(hω)·n^{ωh−1}.
pub fn verify_waring_weighted(
    k: u32,
    h: u32,
    omega: f64,
    ns: &[u64],
    q_max: u64,
    declared: Declared,
    budget: &Budget,
) -> Result<VerificationReport> {
    check_omega(h, omega)?;
    let mut report = VerificationReport::new("waring_weighted", declared);
    report
        .param("variant", Variant::Waring.name())
        .param("k", k)
        .param("h", h)
        .param("omega", omega)
        .param("Q", q_max)
        .param("n_list", join(ns));
    if k >= 2 {
        report.note(EXTRAPOLATED);
    }
    let Some(&n_max) = ns.iter().max() else {
        return Ok(report.finish());
    };
    let base = build_sieve_cached(BaseSetSpec::new(BaseKind::PowersOfNaturals, k, n_max), budget)?;
    let weights = WeightSpec::Power { omega, k }.weights_for(&base, n_max);
    let empirical = mim_weighted(base.elements(), &weights, h, ns, budget)?;
    let series = singular_series_with_tail(Variant::Waring, ns, k, h, q_max, budget)?;
    let constant = c_bhf(k, h, omega);
    for ((&n, e), (s, tail)) in ns.iter().zip(empirical).zip(series) {
        let predicted = s.value * constant * (n as f64).powf(h as f64 * omega - 1.0);
        if predicted > 0.0 {
            report.rows.push(Row::new(n, e, predicted, rel(tail, s.value), "in_class")?);
        } else {
            report.off_class.push(OffRow::new(n, e, predicted, "zero_singular_series"));
        }
    }
    Ok(report.finish())
}

/// What r_{A,h}(n) is compared against.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Prediction {
    /// c^h·C_{B,h,f}·𝔖(n)·f(n)^h/n, which is 𝔖(n)·F(n) at the canonical c.
    Sampled { density: TargetDensity, c: f64 },
    /// The whole base with k = 1: 𝔖(n)·n^{h−1}/((h−1)!·L(n)^h) with
    /// L = log for primes and L = 1 for naturals.
    FullBase,
}

/// r_{A,h}(n) for every n in [lo, hi] against the prediction; off-class n
/// are reported separately.
#[allow(clippy::too_many_arguments)]
pub fn verify_concentration(
    elements: &[u64],
    base: BaseSetSpec,
    h: u32,
    window: (u64, u64),
    q_max: u64,
    prediction: Prediction,
    declared: Declared,
    budget: &Budget,
) -> Result<VerificationReport> {
    let (lo, hi) = window;
    let mut report = VerificationReport::new("sampled_concentration", declared);
    report
        .param("base", base.kind.name())
        .param("k", base.k)
        .param("h", h)
        .param("window", format!("{lo},{hi}"))
        .param("Q", q_max)
        .param("elements", elements.len());
    match prediction {
        Prediction::Sampled { density, c } => {
            report.param("F", density.parent).param("c", c);
        }
        Prediction::FullBase => {
            report.param("F", "full_base");
            if base.k != 1 {
                return Err(Error::Precondition("the full-base prediction needs k = 1".into()));
            }
        }
    }
    if lo > hi {
        return Ok(report.finish());
    }
    if lo < 2 || hi > h as u64 * base.limit {
        return Err(Error::Precondition(format!(
            "window [{lo}, {hi}] must lie in [2, h·limit] = [2, {}]",
            h as u64 * base.limit
        )));
    }
    let table = rep_table(elements, h, hi, None, Method::Convolution, budget)?;
    let counts = table.counts().unwrap();
    let singular = SingularTable::build(variant_for(base.kind), base.k, h, q_max, budget)?;
    let constant = match prediction {
        Prediction::Sampled { density, c } => c.powi(h as i32) * c_bhf(base.k, h, density.omega()),
        Prediction::FullBase => (-ln_gamma(h as f64)).exp(),
    };
    for n in lo..=hi {
        let (s, tail) = singular.eval_with_tail(n);
        let nf = n as f64;
        let main = match prediction {
            Prediction::Sampled { density, .. } => density.eval(nf).powi(h as i32) / nf,
            Prediction::FullBase => {
                let log = match base.kind {
                    BaseKind::PowersOfPrimes => nf.ln().powi(h as i32),
                    BaseKind::PowersOfNaturals => 1.0,
                };
                nf.powi(h as i32 - 1) / log
            }
        };
        let predicted = constant * s.value * main;
        let r = counts[n as usize] as f64;
        if in_class(base.kind, base.k, h, n)? && predicted > 0.0 {
            report.rows.push(Row::new(n, r, predicted, rel(tail, s.value), "in_class")?);
        } else {
            report.off_class.push(OffRow::new(n, r, predicted, "off_class"));
        }
    }
    Ok(report.finish())
}

pub fn verify_sampled_concentration(
    a: &SampledSubbasis,
    window: (u64, u64),
    q_max: u64,
    declared: Declared,
    budget: &Budget,
) -> Result<VerificationReport> {
    let prediction = Prediction::Sampled { density: a.density, c: a.c };
    let mut report = verify_concentration(&a.elements, a.base, a.density.h, window, q_max, prediction, declared, budget)?;
    report.param("seed", a.seed).param("limit", a.limit);
    if a.base.kind == BaseKind::PowersOfPrimes && a.density.parent.kappa == 0.0 {
        report.note("κ = 0: the band is an empirical default, no rate is known");
    }
    Ok(report.finish())
}

/// Inputs for the weighted cross-check of condition (iii).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WeightCheck {
    pub density: TargetDensity,
    pub n: u64,
    pub q_max: u64,
    pub band: Band,
}

/// Regular variation of B (table and fitted index), additive-energy
/// exponents, and the expected-count cross-check. Fit rows are judged by
/// the declared band; the cross-check row carries its own.
pub fn condition_diagnostics(
    base: &SieveIndex,
    ells: &[u32],
    x_grid: &[u64],
    lambdas: &[f64],
    check: Option<WeightCheck>,
    declared: Declared,
    budget: &Budget,
) -> Result<VerificationReport> {
    let spec = *base.spec();
    let beta = spec.beta();
    let mut report = VerificationReport::new("condition_diagnostics", declared);
    report
        .param("base", spec.kind.name())
        .param("k", spec.k)
        .param("ells", join(ells))
        .param("x_grid", join(x_grid))
        .param("lambdas", join(lambdas));
    if x_grid.len() < 2 {
        return Err(Error::Precondition("the x grid needs at least two points".into()));
    }
    let x_max = *x_grid.iter().max().unwrap();
    base.require(x_max, "condition_diagnostics")?;

    let lx: Vec<f64> = x_grid.iter().map(|&x| (x as f64).ln()).collect();
    let lb: Vec<f64> = x_grid.iter().map(|&x| (base.count(x).max(1) as f64).ln()).collect();
    report.rows.push(Row::new(0, ls_slope(&lx, &lb), beta, 0.0, "beta_fit")?);
    for &x in x_grid {
        let bx = base.count(x) as f64;
        report.series.push(SeriesPoint::new("B", x as f64, bx));
        for &lambda in lambdas {
            let y = (lambda * x as f64).floor() as u64;
            if y <= base.limit() && bx > 0.0 {
                let ratio = base.count(y) as f64 / bx / lambda.powf(beta);
                report.series.push(SeriesPoint::new(&format!("B(λx)/(B(x)λ^β),λ={lambda}"), x as f64, ratio));
            }
        }
    }

    for &ell in ells {
        let energies: Vec<f64> = x_grid
            .iter()
            .map(|&x| additive_energy(base.elements(), ell, x, budget).map(|e| e as f64))
            .collect::<Result<_>>()?;
        for (&x, &e) in x_grid.iter().zip(&energies) {
            report.series.push(SeriesPoint::new(&format!("energy,ℓ={ell}"), x as f64, e));
        }
        let le: Vec<f64> = energies.iter().map(|e| e.ln()).collect();
        let target = 2.0 * ell as f64 / spec.k as f64 - 1.0;
        report.rows.push(Row::new(ell as u64, ls_slope(&lx, &le), target, 0.0, "energy_slope")?);
    }

    if let Some(w) = check {
        let canonical = crate::regvar::canonical_scale(spec.k, w.density.h, w.density.omega());
        let e = expected_rep(base, &w.density, canonical, &[w.n], w.q_max, budget)?[0];
        report.param("check_F", w.density.parent).param("check_h", w.density.h).param("check_n", w.n);
        if e.predicted > 0.0 {
            report.rows.push(Row::new(w.n, e.empirical, e.predicted, rel(e.tail, e.singular), "expected_rep")?.with_band(w.band));
        } else {
            report.off_class.push(OffRow::new(w.n, e.empirical, e.predicted, "expected_rep"));
        }
    }
    Ok(report.finish())
}

/// Default declaration for the diagnostics: fits within 0.25 of target.
pub fn diagnostics_declared() -> Declared {
    Declared { band: Band::AbsDiff { tol: 0.25 }, rule: Rule::MinFraction(1.0), off_class: OffClassRule::None }
}

fn join<T: ToString>(xs: &[T]) -> String {
    xs.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(" ")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::basesets::build_sieve;
    use crate::regvar::RegVarFn;
    use crate::report::Verdict;

    fn b() -> Budget {
        Budget::default()
    }

    fn ratio_declared(lo: f64, hi: f64, rule: Rule, off: OffClassRule) -> Declared {
        Declared { band: Band::Ratio { lo, hi }, rule, off_class: off }
    }

    #[test]
    fn class_membership() {
        assert!(in_class(BaseKind::PowersOfPrimes, 1, 3, 101).unwrap());
        assert!(!in_class(BaseKind::PowersOfPrimes, 1, 3, 100).unwrap());
        assert!(in_class(BaseKind::PowersOfPrimes, 2, 5, 29).unwrap());
        assert!(!in_class(BaseKind::PowersOfPrimes, 2, 5, 30).unwrap());
        assert!(in_class(BaseKind::PowersOfNaturals, 2, 5, 30).unwrap());
    }

    #[test]
    fn sampled_ns_are_in_class_and_seeded() {
        let a = sample_in_class(BaseKind::PowersOfPrimes, 1, 3, 1000, 2000, 20, 7).unwrap();
        assert_eq!(a.len(), 20);
        assert!(a.iter().all(|n| n % 2 == 1 && (1000..=2000).contains(n)));
        assert!(a.windows(2).all(|w| w[0] < w[1]));
        assert_eq!(a, sample_in_class(BaseKind::PowersOfPrimes, 1, 3, 1000, 2000, 20, 7).unwrap());
        assert!(sample_in_class(BaseKind::PowersOfPrimes, 1, 3, 10, 12, 5, 0).is_err());
    }

    #[test]
    fn mim_matches_naive_enumeration() {
        let a = [1u64, 2, 3, 5, 8, 13, 21];
        let w: Vec<f64> = a.iter().map(|&x| 1.0 / x as f64).collect();
        let ns: Vec<u64> = (3..=40).collect();
        let got = mim_weighted(&a, &w, 3, &ns, &b()).unwrap();
        let counts = mim_counts(&a, 3, &ns, &b()).unwrap();
        for (i, &n) in ns.iter().enumerate() {
            let mut direct = 0.0;
            let mut c = 0u128;
            for &x in &a {
                for &y in &a {
                    for &z in &a {
                        if x + y + z == n {
                            direct += 1.0 / (x * y * z) as f64;
                            c += 1;
                        }
                    }
                }
            }
            assert!((got[i] - direct).abs() < 1e-12, "n={n}");
            assert_eq!(counts[i], c);
        }
    }

    #[test]
    fn expected_rep_half_power_tends_to_pi() {
        let base = build_sieve(BaseSetSpec::new(BaseKind::PowersOfNaturals, 1, 20_000), &b()).unwrap();
        let density = RegVarFn::new(1.0, 0.0, 0.0, 0.0).unwrap().density(2).unwrap();
        let e = expected_rep(&base, &density, 1.0, &[20_000], 16, &b()).unwrap()[0];
        assert!((e.predicted - std::f64::consts::PI).abs() < 1e-12);
        assert!((e.empirical / std::f64::consts::PI - 1.0).abs() < 0.02, "{}", e.empirical);
        assert_eq!(e.singular, 1.0);
    }

    #[test]
    fn expected_rep_scales_with_c() {
        let base = build_sieve(BaseSetSpec::new(BaseKind::PowersOfPrimes, 1, 5000), &b()).unwrap();
        let density = RegVarFn::new(1.0, 0.0, 1.0, 0.0).unwrap().density(3).unwrap();
        let one = expected_rep(&base, &density, 1.0, &[4999], 50, &b()).unwrap()[0];
        let two = expected_rep(&base, &density, 2.0, &[4999], 50, &b()).unwrap()[0];
        assert!((two.empirical / one.empirical - 8.0).abs() < 1e-9);
        assert!((two.ratio() / one.ratio() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn waring_k1_is_the_composition_sum() {
        let d = ratio_declared(0.9, 1.1, Rule::MinFraction(1.0), OffClassRule::None);
        let r = verify_waring_weighted(1, 2, 0.5, &[5000, 10000], 8, d, &b()).unwrap();
        assert_eq!(r.rows.len(), 2);
        for row in &r.rows {
            assert!((row.predicted - std::f64::consts::PI).abs() < 1e-12);
            let c = crate::expsums::composition_sum(row.n, 2, 0.5, &b()).unwrap();
            assert!((row.empirical - c.value).abs() < 1e-9 * c.value);
        }
        assert_eq!(r.verdict, Verdict::Pass);
        assert!(r.notes.is_empty());
    }

    #[test]
    fn goldbach_small_scale() {
        let ns = [10_001, 10_003, 10_002];
        let d = ratio_declared(0.5, 2.0, Rule::Median, OffClassRule::ExactZero);
        let r = verify_goldbach_weighted(1, 3, 1.0 / 3.0, &ns, 200, d, &b()).unwrap();
        assert_eq!(r.rows.len(), 2);
        assert_eq!(r.off_class.len(), 1);
        // 2 + p + q covers even n.
        assert!(r.off_class[0].empirical > 0.0);
        assert_eq!(r.verdict, Verdict::Fail);
        let large = r.series.iter().find(|p| p.tag == "off_class_count_large_primes").unwrap();
        assert_eq!(large.value, 0.0);
        for row in &r.rows {
            assert!(row.ratio > 0.5 && row.ratio < 2.0, "{row:?}");
        }
    }

    #[test]
    fn concentration_full_naturals_is_binomial() {
        let base = build_sieve(BaseSetSpec::new(BaseKind::PowersOfNaturals, 1, 2000), &b()).unwrap();
        let d = ratio_declared(0.99, 1.01, Rule::MinFraction(1.0), OffClassRule::None);
        let r = verify_concentration(base.elements(), *base.spec(), 3, (1000, 1100), 10, Prediction::FullBase, d, &b())
            .unwrap();
        for row in &r.rows {
            let n = row.n as f64;
            assert_eq!(row.empirical, (n - 1.0) * (n - 2.0) / 2.0);
        }
        assert_eq!(r.verdict, Verdict::Pass);
    }

    #[test]
    fn empty_window_is_vacuous() {
        let base = build_sieve(BaseSetSpec::new(BaseKind::PowersOfPrimes, 1, 100), &b()).unwrap();
        let d = ratio_declared(0.7, 1.3, Rule::MinFraction(0.9), OffClassRule::None);
        let r = verify_concentration(base.elements(), *base.spec(), 3, (50, 40), 10, Prediction::FullBase, d, &b())
            .unwrap();
        assert_eq!(r.verdict, Verdict::PassVacuous);
    }

    #[test]
    fn diagnostics_for_naturals() {
        let base = build_sieve(BaseSetSpec::new(BaseKind::PowersOfNaturals, 1, 100_000), &b()).unwrap();
        let density = RegVarFn::new(1.0, 0.0, 0.0, 0.0).unwrap().density(2).unwrap();
        let check = WeightCheck { density, n: 50_000, q_max: 10, band: Band::Ratio { lo: 0.95, hi: 1.05 } };
        let r = condition_diagnostics(&base, &[2], &[10_000, 30_000, 100_000], &[2.0], Some(check), diagnostics_declared(), &b())
            .unwrap();
        let beta = &r.rows[0];
        assert!((beta.empirical - 1.0).abs() < 1e-3);
        let energy = &r.rows[1];
        assert!((energy.empirical - 3.0).abs() < 0.05, "{energy:?}");
        assert_eq!(r.rows[2].tag, "expected_rep");
        assert_eq!(r.verdict, Verdict::Pass);
    }
}
