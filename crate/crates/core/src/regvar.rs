//! Regularly varying targets F(x) = c·x^κ·(log x)^a·(log log x)^b and the
//! sampling density f(x) = (x·F(x))^{1/h} derived from them.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::basesets::{h_star, BaseKind, BaseSetSpec};
use crate::error::{Error, Result};
use crate::numerics::ln_gamma;

/// Below this point ψ is evaluated at X0 instead, keeping log log x > 0.
pub const X0: f64 = 16.0;

const EXP_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegVarFn {
    pub c: f64,
    pub kappa: f64,
    pub a: f64,
    pub b: f64,
}

impl RegVarFn {
    pub fn new(c: f64, kappa: f64, a: f64, b: f64) -> Result<Self> {
        if !(c > 0.0 && c.is_finite()) {
            return Err(Error::Config(format!("scale c must be positive and finite, got {c}")));
        }
        if !(kappa.is_finite() && a.is_finite() && b.is_finite()) {
            return Err(Error::Config("exponents must be finite".into()));
        }
        Ok(RegVarFn { c, kappa, a, b })
    }

    pub fn with_scale(&self, c: f64) -> Result<Self> {
        RegVarFn::new(c, self.kappa, self.a, self.b)
    }

    /// ψ(x) = (log x̄)^a·(log log x̄)^b with x̄ = max(x, X0).
    pub fn psi(&self, x: f64) -> f64 {
        let l = x.max(X0).ln();
        l.powf(self.a) * l.ln().powf(self.b)
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.c * x.powf(self.kappa) * self.psi(x)
    }

    pub fn density(&self, h: u32) -> Result<TargetDensity> {
        TargetDensity::new(*self, h)
    }

    /// Whether ψ is eventually increasing, constant or decreasing (+1, 0, −1).
    fn psi_trend(&self) -> i8 {
        let lead = if self.a != 0.0 { self.a } else { self.b };
        if lead > 0.0 {
            1
        } else if lead < 0.0 {
            -1
        } else {
            0
        }
    }
}

impl fmt::Display for RegVarFn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}*x^{}*log^{}*loglog^{}", self.c, self.kappa, self.a, self.b)
    }
}

impl FromStr for RegVarFn {
    type Err = Error;

    /// Accepts factors joined by `*` in any order: a decimal scale, `x^κ`,
    /// `log^a`, `loglog^b` (a bare `x`, `log`, `loglog` means exponent 1).
    /// Missing factors default to exponent 0 and scale 1.
    fn from_str(s: &str) -> Result<Self> {
        let mut c = 1.0;
        let (mut kappa, mut a, mut b) = (None, None, None);
        let bad = |msg: &str| Error::Config(format!("function spec `{s}`: {msg}"));
        for token in s.split('*').map(str::trim) {
            if token.is_empty() {
                return Err(bad("empty factor"));
            }
            let (base, exp) = match token.split_once('^') {
                Some((b, e)) => (b.trim(), Some(e.trim())),
                None => (token, None),
            };
            let exponent = match exp {
                Some(e) => e.parse::<f64>().map_err(|_| bad(&format!("bad exponent `{e}`")))?,
                None => 1.0,
            };
            let slot = match base {
                "x" => &mut kappa,
                "log" => &mut a,
                "loglog" => &mut b,
                _ if exp.is_none() => {
                    c *= base.parse::<f64>().map_err(|_| bad(&format!("unknown factor `{token}`")))?;
                    continue;
                }
                _ => return Err(bad(&format!("unknown factor `{token}`"))),
            };
            if slot.replace(exponent).is_some() {
                return Err(bad(&format!("factor `{base}` given twice")));
            }
        }
        RegVarFn::new(c, kappa.unwrap_or(0.0), a.unwrap_or(0.0), b.unwrap_or(0.0))
    }
}

/// f(x) = (x·F(x))^{1/h} = x^ω·(c·ψ(x))^{1/h} with ω = (1+κ)/h.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TargetDensity {
    pub parent: RegVarFn,
    pub h: u32,
}

impl TargetDensity {
    pub fn new(parent: RegVarFn, h: u32) -> Result<Self> {
        if h < 2 {
            return Err(Error::Precondition(format!("h must be at least 2, got {h}")));
        }
        Ok(TargetDensity { parent, h })
    }

    pub fn omega(&self) -> f64 {
        (1.0 + self.parent.kappa) / self.h as f64
    }

    /// The slowly varying factor φ(x) = (c·ψ(x))^{1/h}.
    pub fn phi(&self, x: f64) -> f64 {
        (self.parent.c * self.parent.psi(x)).powf(1.0 / self.h as f64)
    }

    pub fn eval(&self, x: f64) -> f64 {
        x.powf(self.omega()) * self.phi(x)
    }
}

/// C_{B,h,f} = k^{−h}·Γ(ω)^h/Γ(hω), the same for ℕ^k and ℙ^k.
pub fn c_bhf(k: u32, h: u32, omega: f64) -> f64 {
    let hf = h as f64;
    (hf * ln_gamma(omega) - ln_gamma(hf * omega) - hf * (k as f64).ln()).exp()
}

/// The canonical sampling scale c = C_{B,h,f}^{−1/h}.
pub fn canonical_scale(k: u32, h: u32, omega: f64) -> f64 {
    c_bhf(k, h, omega).powf(-1.0 / h as f64)
}

/// Γ(1+1/k)^h/Γ(h/k), the largest admissible leading constant at κ = h/k−1
/// for subbases of ℕ^k.
pub fn naturals_scale_bound(k: u32, h: u32) -> f64 {
    let (kf, hf) = (k as f64, h as f64);
    (hf * ln_gamma(1.0 + 1.0 / kf) - ln_gamma(hf / kf)).exp()
}

/// Which existence statement a target is checked against.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Criterion {
    /// ℕ^k, F = c·n^κ with 0 < κ < h/k−1 (boundary allowed with bounded c).
    NaturalsPower,
    /// ℕ^k, F/log → ∞ and F ≤ (1+o(1))·Γ(1+1/k)^h/Γ(h/k)·x^{h/k−1}.
    NaturalsRegular,
    /// ℙ^k, F = c·n^κ with 0 < κ < h/k−1, h ≥ h*_k.
    PrimesPower,
    /// ℙ^k, 0 ≤ κ ≤ h/k−1 and log x ≪ F(x) ≪ x^{h/k−1}/(log x)^h, h ≥ h*_k.
    PrimesRegular,
}

impl Criterion {
    pub fn name(self) -> &'static str {
        match self {
            Criterion::NaturalsPower => "naturals-power",
            Criterion::NaturalsRegular => "naturals-regular",
            Criterion::PrimesPower => "primes-power",
            Criterion::PrimesRegular => "primes-regular",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        [
            Criterion::NaturalsPower,
            Criterion::NaturalsRegular,
            Criterion::PrimesPower,
            Criterion::PrimesRegular,
        ]
        .into_iter()
        .find(|c| c.name() == s)
        .ok_or_else(|| Error::Config(format!("unknown criterion `{s}`")))
    }

    fn base(self) -> BaseKind {
        match self {
            Criterion::NaturalsPower | Criterion::NaturalsRegular => BaseKind::PowersOfNaturals,
            Criterion::PrimesPower | Criterion::PrimesRegular => BaseKind::PowersOfPrimes,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Reason {
    ExponentTooLarge,
    ScaleTooLarge,
    GrowsTooSlowly,
    WrongBase,
    HBelowThreshold,
}

impl Reason {
    pub fn code(self) -> &'static str {
        match self {
            Reason::ExponentTooLarge => "exponent_too_large",
            Reason::ScaleTooLarge => "scale_too_large",
            Reason::GrowsTooSlowly => "grows_too_slowly",
            Reason::WrongBase => "wrong_base",
            Reason::HBelowThreshold => "h_below_threshold",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Admissibility {
    pub criterion: Criterion,
    pub pass: bool,
    pub reason: Option<Reason>,
    /// κ sits on h/k−1 (accepted only with a bounded leading constant).
    pub boundary: bool,
    /// F(x)/log x at x = base limit.
    pub lower_ratio: f64,
    /// F(x)·(log x)^h / x^{h/k−1} at x = base limit.
    pub upper_ratio: f64,
}

pub fn check_admissible(f: &RegVarFn, base: &BaseSetSpec, h: u32, criterion: Criterion) -> Result<Admissibility> {
    if h < 2 {
        return Err(Error::Precondition(format!("h must be at least 2, got {h}")));
    }
    let top = h as f64 / base.k as f64 - 1.0;
    let x = (base.limit as f64).max(X0);
    let lx = x.ln();
    let mut out = Admissibility {
        criterion,
        pass: false,
        reason: None,
        boundary: (f.kappa - top).abs() <= EXP_TOL,
        lower_ratio: f.eval(x) / lx,
        upper_ratio: f.eval(x) * lx.powi(h as i32) / x.powf(top),
    };
    let kappa_above = f.kappa > top + EXP_TOL;
    let trend = f.psi_trend();
    let fail = |mut out: Admissibility, r: Reason| {
        out.reason = Some(r);
        Ok(out)
    };

    if base.kind != criterion.base() {
        return fail(out, Reason::WrongBase);
    }
    if matches!(criterion, Criterion::PrimesPower | Criterion::PrimesRegular) && (h as u64) < h_star(base.k) {
        return fail(out, Reason::HBelowThreshold);
    }
    match criterion {
        Criterion::NaturalsPower | Criterion::PrimesPower => {
            if kappa_above {
                return fail(out, Reason::ExponentTooLarge);
            }
            if f.kappa <= 0.0 {
                return fail(out, Reason::GrowsTooSlowly);
            }
            if out.boundary {
                if criterion == Criterion::PrimesPower {
                    return fail(out, Reason::ExponentTooLarge);
                }
                if trend > 0 || f.c > naturals_scale_bound(base.k, h) * (1.0 + EXP_TOL) {
                    return fail(out, Reason::ScaleTooLarge);
                }
            }
        }
        Criterion::NaturalsRegular => {
            let grows = f.kappa > EXP_TOL
                || (f.kappa.abs() <= EXP_TOL && (f.a > 1.0 || (f.a == 1.0 && f.b > 0.0)));
            if kappa_above {
                return fail(out, Reason::ExponentTooLarge);
            }
            if !grows {
                return fail(out, Reason::GrowsTooSlowly);
            }
            if out.boundary
                && (trend > 0 || (trend == 0 && f.c > naturals_scale_bound(base.k, h) * (1.0 + EXP_TOL)))
            {
                return fail(out, Reason::ScaleTooLarge);
            }
        }
        Criterion::PrimesRegular => {
            if kappa_above {
                return fail(out, Reason::ExponentTooLarge);
            }
            if f.kappa < -EXP_TOL {
                return fail(out, Reason::GrowsTooSlowly);
            }
            let above_log = f.kappa > EXP_TOL || f.a > 1.0 || (f.a == 1.0 && f.b >= 0.0);
            if !above_log {
                return fail(out, Reason::GrowsTooSlowly);
            }
            let hf = h as f64;
            let below_cap = !out.boundary || f.a < -hf || (f.a == -hf && f.b <= 0.0);
            if !below_cap {
                return fail(out, Reason::ExponentTooLarge);
            }
        }
    }
    out.pass = true;
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn log_fn() -> RegVarFn {
        RegVarFn::new(1.0, 0.0, 1.0, 0.0).unwrap()
    }

    #[test]
    fn evaluation_examples() {
        let f = log_fn();
        // e^2 lies below the floor, so ψ is evaluated at 16.
        let e2 = std::f64::consts::E.powi(2);
        assert!((f.eval(e2) - 16f64.ln()).abs() < 1e-15);
        assert!((f.eval(std::f64::consts::E.powi(4)) - 4.0).abs() < 1e-12);
        let lin = RegVarFn::new(3.0, 1.0, 0.0, 0.0).unwrap();
        assert!((lin.eval(100.0) - 300.0).abs() < 1e-12);
        let ll = RegVarFn::new(1.0, 0.0, 1.0, 1.0).unwrap();
        assert!((ll.eval(1e6) - 36.27665591746055).abs() < 1e-12);
    }

    #[test]
    fn parse_and_display() {
        let f: RegVarFn = "1*x^0*log^1*loglog^0".parse().unwrap();
        assert_eq!(f, log_fn());
        assert_eq!(f.to_string(), "1*x^0*log^1*loglog^0");
        let g: RegVarFn = "5*log".parse().unwrap();
        assert_eq!(g, RegVarFn::new(5.0, 0.0, 1.0, 0.0).unwrap());
        let h: RegVarFn = "x^0.5 * 0.25".parse().unwrap();
        assert_eq!((h.c, h.kappa), (0.25, 0.5));
        assert!("1*y^2".parse::<RegVarFn>().is_err());
        assert!("x^1*x^2".parse::<RegVarFn>().is_err());
        assert!("-1*x^1".parse::<RegVarFn>().is_err());
        assert!("1*x^abc".parse::<RegVarFn>().is_err());
    }

    #[test]
    fn constants() {
        // Γ(1/3)^3/Γ(1) for k = 1, h = 3, ω = 1/3.
        assert!((c_bhf(1, 3, 1.0 / 3.0) / 19.225969452595694 - 1.0).abs() < 1e-12);
        // Γ(3/2)^5/Γ(5/2) for k = 2, h = 5.
        assert!((naturals_scale_bound(2, 5) - 0.411_233_516_712_056_6).abs() < 1e-12);
        let c = canonical_scale(1, 3, 0.5);
        assert!((c.powi(3) * c_bhf(1, 3, 0.5) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn admissibility_examples() {
        let primes = BaseSetSpec::new(BaseKind::PowersOfPrimes, 1, 10_000_000);
        let r = check_admissible(&log_fn(), &primes, 3, Criterion::PrimesRegular).unwrap();
        assert!(r.pass, "{r:?}");

        let naturals = BaseSetSpec::new(BaseKind::PowersOfNaturals, 2, 1_000_000);
        let top = 5.0 / 2.0 - 1.0;
        let over = RegVarFn::new(1.0, top + 0.1, 0.0, 0.0).unwrap();
        let r = check_admissible(&over, &naturals, 5, Criterion::NaturalsPower).unwrap();
        assert_eq!(r.reason, Some(Reason::ExponentTooLarge));

        let bound = naturals_scale_bound(2, 5);
        let edge = RegVarFn::new(2.0 * bound, top, 0.0, 0.0).unwrap();
        let r = check_admissible(&edge, &naturals, 5, Criterion::NaturalsPower).unwrap();
        assert_eq!(r.reason, Some(Reason::ScaleTooLarge));
        let ok = RegVarFn::new(bound, top, 0.0, 0.0).unwrap();
        let r = check_admissible(&ok, &naturals, 5, Criterion::NaturalsPower).unwrap();
        assert!(r.pass && r.boundary);
    }

    #[test]
    fn admissibility_reasons() {
        let naturals = BaseSetSpec::new(BaseKind::PowersOfNaturals, 1, 1_000_000);
        let primes = BaseSetSpec::new(BaseKind::PowersOfPrimes, 1, 1_000_000);
        let r = check_admissible(&log_fn(), &naturals, 3, Criterion::NaturalsRegular).unwrap();
        assert_eq!(r.reason, Some(Reason::GrowsTooSlowly));
        let loglog = RegVarFn::new(1.0, 0.0, 1.0, 1.0).unwrap();
        assert!(check_admissible(&loglog, &naturals, 3, Criterion::NaturalsRegular).unwrap().pass);
        let r = check_admissible(&log_fn(), &naturals, 3, Criterion::PrimesRegular).unwrap();
        assert_eq!(r.reason, Some(Reason::WrongBase));
        let r = check_admissible(&log_fn(), &primes, 2, Criterion::PrimesRegular).unwrap();
        assert_eq!(r.reason, Some(Reason::HBelowThreshold));
        let flat = RegVarFn::new(1.0, 0.0, 0.5, 0.0).unwrap();
        let r = check_admissible(&flat, &primes, 3, Criterion::PrimesRegular).unwrap();
        assert_eq!(r.reason, Some(Reason::GrowsTooSlowly));
        let cap = RegVarFn::new(1.0, 2.0, -3.0, 0.0).unwrap();
        assert!(check_admissible(&cap, &primes, 3, Criterion::PrimesRegular).unwrap().pass);
        let cap = RegVarFn::new(1.0, 2.0, -2.0, 0.0).unwrap();
        let r = check_admissible(&cap, &primes, 3, Criterion::PrimesRegular).unwrap();
        assert_eq!(r.reason, Some(Reason::ExponentTooLarge));
        let half = RegVarFn::new(1.0, 0.5, 0.0, 0.0).unwrap();
        assert!(check_admissible(&half, &primes, 3, Criterion::PrimesPower).unwrap().pass);
    }

    proptest! {
        #[test]
        fn density_power_identity(x in 16f64..1e8, kappa in 0f64..2.0, a in -2f64..2.0, b in -2f64..2.0, h in 2u32..9, c in 0.01f64..100.0) {
            let f = RegVarFn::new(c, kappa, a, b).unwrap();
            let d = f.density(h).unwrap();
            let rel = d.eval(x).powi(h as i32) / (x * f.eval(x));
            prop_assert!((rel - 1.0).abs() <= 1e-12);
            prop_assert!(d.omega() >= 1.0 / h as f64);
        }

        #[test]
        fn scale_is_linear(x in 16f64..1e9, kappa in -1f64..2.0, a in -2f64..2.0, b in -2f64..2.0, c in 0.01f64..100.0) {
            let f = RegVarFn::new(c, kappa, a, b).unwrap();
            let g = f.with_scale(2.0 * c).unwrap();
            prop_assert_eq!(g.eval(x), 2.0 * f.eval(x));
            prop_assert!(f.eval(x) > 0.0);
        }

        #[test]
        fn slow_variation(x in 1e6f64..1e12, a in -1f64..1.0, b in -1f64..1.0) {
            prop_assume!(a.abs() + b.abs() <= 1.0);
            let f = RegVarFn::new(1.0, 0.0, a, b).unwrap();
            for lambda in [2.0, 10.0] {
                let r = f.psi(lambda * x) / f.psi(x);
                prop_assert!((0.8..=1.2).contains(&r), "λ={} r={}", lambda, r);
            }
        }

        #[test]
        fn display_round_trips(c in 0.001f64..1000.0, kappa in -3f64..3.0, a in -3f64..3.0, b in -3f64..3.0) {
            let f = RegVarFn::new(c, kappa, a, b).unwrap();
            let back: RegVarFn = f.to_string().parse().unwrap();
            prop_assert_eq!(back, f);
        }
    }
}
