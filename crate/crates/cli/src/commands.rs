use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use anyhow::{anyhow, bail, Context as _, Result};
use clap::{Args, Subcommand};
use subbasis_core::basesets::{build_sieve_cached, BaseKind, BaseSetSpec, SieveIndex};
use subbasis_core::expsums::{g_sum, t_sum, u_sum, SumRange};
use subbasis_core::numerics::fmt_f64;
use subbasis_core::regvar::{canonical_scale, check_admissible, Criterion, RegVarFn, TargetDensity};
use subbasis_core::repcount::{additive_energy, exact_decomposition, rep_table, Method, WeightSpec};
use subbasis_core::report::{Band, Declared, OffClassRule, Row, Rule, VerificationReport};
use subbasis_core::sampler::{parse_subbasis_file, sample_subbasis, SampledSubbasis};
use subbasis_core::singular::{singular_series_by_blocks, singular_series_many, truncation_profile, Variant};
use subbasis_core::verify::{
    condition_diagnostics, default_off_class, expected_rep, in_class, sample_in_class, verify_concentration,
    verify_goldbach_weighted, verify_sampled_concentration, verify_waring_weighted, Prediction, WeightCheck,
};
use subbasis_core::basesets::h_star;

use crate::Context;

pub struct Outcome {
    pub pass: bool,
    pub summary: String,
}

fn ok(summary: String) -> Result<Outcome> {
    Ok(Outcome { pass: true, summary })
}

/// Integer flag that also accepts exact scientific forms such as `2e6`.
pub fn parse_count(s: &str) -> Result<u64, String> {
    if let Ok(v) = s.parse::<u64>() {
        return Ok(v);
    }
    let f: f64 = s.parse().map_err(|_| format!("`{s}` is not an integer"))?;
    if f >= 0.0 && f.fract() == 0.0 && f < 1.8e19 {
        Ok(f as u64)
    } else {
        Err(format!("`{s}` is not a nonnegative integer"))
    }
}

fn parse_list<T: FromStr>(s: &str, what: &str) -> Result<Vec<T>> {
    s.split(',')
        .map(str::trim)
        .filter(|t| !t.is_empty())
        .map(|t| t.parse::<T>().map_err(|_| anyhow!("{what}: cannot parse `{t}`")))
        .collect()
}

fn parse_counts(s: &str, what: &str) -> Result<Vec<u64>> {
    s.split(',')
        .map(str::trim)
        .filter(|t| !t.is_empty())
        .map(|t| parse_count(t).map_err(|e| anyhow!("{what}: {e}")))
        .collect()
}

fn emit(path: Option<&Path>, text: &str) -> Result<()> {
    match path {
        Some(p) => std::fs::write(p, text).with_context(|| format!("writing {}", p.display())),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn base_kind(s: &str) -> Result<BaseKind> {
    Ok(BaseKind::parse(s)?)
}

fn sieve_for(ctx: &Context, kind: BaseKind, k: u32, limit: u64) -> Result<SieveIndex> {
    Ok(build_sieve_cached(BaseSetSpec::new(kind, k, limit), &ctx.budget)?)
}

fn density(f: &str, h: u32) -> Result<TargetDensity> {
    let f: RegVarFn = f.parse()?;
    Ok(f.density(h)?)
}

fn scale(c: &str, k: u32, density: &TargetDensity) -> Result<f64> {
    if c == "canonical" {
        return Ok(canonical_scale(k, density.h, density.omega()));
    }
    let v: f64 = c.parse().map_err(|_| anyhow!("c must be `canonical` or a number, got `{c}`"))?;
    if !(v > 0.0 && v.is_finite()) {
        bail!("c must be positive, got {v}");
    }
    Ok(v)
}

fn rule(s: &str) -> Result<Rule> {
    if s == "median" {
        return Ok(Rule::Median);
    }
    let f = s
        .strip_prefix("fraction:")
        .and_then(|f| f.parse::<f64>().ok())
        .filter(|f| (0.0..=1.0).contains(f))
        .ok_or_else(|| anyhow!("rule must be `median` or `fraction:<p>` with p in [0,1], got `{s}`"))?;
    Ok(Rule::MinFraction(f))
}

fn off_class(s: &str, k: u32) -> Result<OffClassRule> {
    Ok(match s {
        "auto" => default_off_class(k),
        "none" => OffClassRule::None,
        "zero" => OffClassRule::ExactZero,
        _ => {
            let f = s
                .strip_prefix("frac:")
                .and_then(|f| f.parse::<f64>().ok())
                .ok_or_else(|| anyhow!("off-class must be auto, none, zero or frac:<p>, got `{s}`"))?;
            OffClassRule::MaxFractionOfMedian(f)
        }
    })
}

fn declared(band: &str, rule_s: &str, off: &str, k: u32) -> Result<Declared> {
    Ok(Declared { band: Band::parse_ratio(band)?, rule: rule(rule_s)?, off_class: off_class(off, k)? })
}

fn finish_report(ctx: &Context, mut report: VerificationReport, output: Option<&Path>, csv: Option<&Path>) -> Result<Outcome> {
    for (k, v) in &ctx.embedded {
        report.param(k, v);
    }
    emit(output, &report.to_json())?;
    if let Some(path) = csv {
        emit(Some(path), &report.to_csv())?;
    }
    let s = &report.summary;
    let summary = format!(
        "{} verdict={} rows={} in_band={} median_ratio={} off_class_rows={}",
        ctx.section.replace('.', " "),
        report.verdict.name(),
        s.rows,
        s.in_band,
        s.median_ratio.map(fmt_f64).unwrap_or_else(|| "none".into()),
        s.off_class_rows
    );
    Ok(Outcome { pass: report.verdict.passed(), summary })
}

#[derive(Debug, Args)]
pub struct SieveArgs {
    /// Base set: naturals or primes.
    #[arg(long, default_value = "primes")]
    base: String,
    /// Exponent k of the base ℕ^k or ℙ^k.
    #[arg(long, default_value_t = 1)]
    k: u32,
    /// Largest element considered.
    #[arg(long, value_parser = parse_count, default_value = "1000000")]
    limit: u64,
    /// Write the elements, one per line, here.
    #[arg(short, long)]
    output: Option<PathBuf>,
}

pub fn sieve(ctx: &Context, a: SieveArgs) -> Result<Outcome> {
    let s = sieve_for(ctx, base_kind(&a.base)?, a.k, a.limit)?;
    let line = format!("base={},k={},limit={},count={}", a.base, a.k, a.limit, s.len());
    if let Some(path) = &a.output {
        let mut text = format!("# {line}\n");
        for e in s.elements() {
            writeln!(text, "{e}").unwrap();
        }
        emit(Some(path), &text)?;
    }
    ok(format!("sieve {line}"))
}

#[derive(Debug, Args)]
pub struct SingularArgs {
    /// waring or wg (Waring–Goldbach).
    #[arg(long, default_value = "wg")]
    variant: String,
    #[arg(long, default_value_t = 1)]
    k: u32,
    #[arg(long, default_value_t = 3)]
    h: u32,
    /// Comma-separated list of n.
    #[arg(long)]
    n: String,
    /// Truncation point: sum over q ≤ Q.
    #[arg(long = "Q", value_parser = parse_count, default_value = "1000")]
    q: u64,
    /// Comma-separated increasing Q values; emits one row per Q instead.
    #[arg(long, default_value = "")]
    profile: String,
    /// dft (all q directly) or blocks (prime-power blocks, multiplicativity).
    #[arg(long, default_value = "dft")]
    method: String,
}

pub fn singular(ctx: &Context, a: SingularArgs) -> Result<Outcome> {
    let variant = Variant::parse(&a.variant)?;
    let ns = parse_counts(&a.n, "n")?;
    let mut out = String::from("variant,k,h,n,Q,value,imag_residual\n");
    let row = |out: &mut String, n: u64, q: u64, value: f64, imag: f64| {
        writeln!(out, "{},{},{},{n},{q},{},{}", variant.name(), a.k, a.h, fmt_f64(value), fmt_f64(imag)).unwrap();
    };
    if !a.profile.is_empty() {
        let qs = parse_counts(&a.profile, "profile")?;
        for &n in &ns {
            for (q, v) in truncation_profile(variant, n, a.k, a.h, &qs, &ctx.budget)? {
                row(&mut out, n, q, v, f64::NAN);
            }
        }
    } else {
        let values = match a.method.as_str() {
            "dft" => singular_series_many(variant, &ns, a.k, a.h, a.q, &ctx.budget)?,
            "blocks" => ns
                .iter()
                .map(|&n| singular_series_by_blocks(variant, n, a.k, a.h, a.q, &ctx.budget))
                .collect::<subbasis_core::Result<_>>()?,
            m => bail!("method must be dft or blocks, got `{m}`"),
        };
        for v in &values {
            row(&mut out, v.n, v.q_max, v.value, v.imag_residual);
        }
    }
    print!("{out}");
    ok(format!("singular variant={} k={} h={} rows={}", variant.name(), a.k, a.h, out.lines().count() - 1))
}

#[derive(Debug, Args)]
pub struct ExpsumArgs {
    /// G (prime powers), T (weighted prime powers) or U (power weights over all n).
    #[arg(long)]
    sum: String,
    /// Frequency α (θ for U).
    #[arg(long)]
    alpha: f64,
    #[arg(long, value_parser = parse_count)]
    x: u64,
    #[arg(long, default_value_t = 0.5)]
    omega: f64,
    #[arg(long, default_value_t = 1)]
    k: u32,
    /// full, or tail for x/h ≤ n ≤ x.
    #[arg(long, default_value = "full")]
    range: String,
    /// h of the tail range.
    #[arg(long, default_value_t = 3)]
    h: u32,
}

pub fn expsum(ctx: &Context, a: ExpsumArgs) -> Result<Outcome> {
    let range = match a.range.as_str() {
        "full" => SumRange::Full,
        "tail" => SumRange::Tail { h: a.h },
        r => bail!("range must be full or tail, got `{r}`"),
    };
    let z = match a.sum.as_str() {
        "G" | "g" => g_sum(&sieve_for(ctx, BaseKind::PowersOfPrimes, a.k, a.x)?, a.alpha, a.x, a.k)?,
        "T" | "t" => t_sum(&sieve_for(ctx, BaseKind::PowersOfPrimes, a.k, a.x)?, a.alpha, a.x, a.omega, a.k, range)?,
        "U" | "u" => u_sum(a.alpha, a.x, a.omega, range)?,
        s => bail!("sum must be G, T or U, got `{s}`"),
    };
    println!("sum,alpha,x,omega,k,range,re,im");
    println!(
        "{},{},{},{},{},{},{},{}",
        a.sum.to_uppercase(),
        fmt_f64(a.alpha),
        a.x,
        fmt_f64(a.omega),
        a.k,
        range.name(),
        fmt_f64(z.re),
        fmt_f64(z.im)
    );
    ok(format!("expsum sum={} |value|={}", a.sum.to_uppercase(), fmt_f64(z.norm())))
}

#[derive(Debug, Args)]
pub struct SampleArgs {
    #[arg(long, default_value = "primes")]
    base: String,
    #[arg(long, default_value_t = 1)]
    k: u32,
    #[arg(long, default_value_t = 3)]
    h: u32,
    /// Target F as "c*x^κ*log^a*loglog^b".
    #[arg(long = "F")]
    f: String,
    /// Sampling scale, or `canonical` for C_{B,h,f}^{−1/h}.
    #[arg(long, default_value = "canonical")]
    c: String,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, value_parser = parse_count, default_value = "1000000")]
    limit: u64,
    /// Admissibility criterion to report: auto, naturals-power, naturals-regular, primes-power, primes-regular.
    #[arg(long, default_value = "auto")]
    criterion: String,
    /// Subbasis file; stdout if absent.
    #[arg(short, long)]
    output: Option<PathBuf>,
}

fn criterion_for(s: &str, kind: BaseKind) -> Result<Criterion> {
    Ok(match (s, kind) {
        ("auto", BaseKind::PowersOfNaturals) => Criterion::NaturalsRegular,
        ("auto", BaseKind::PowersOfPrimes) => Criterion::PrimesRegular,
        _ => Criterion::parse(s)?,
    })
}

fn sample_from(ctx: &Context, base: &str, k: u32, h: u32, f: &str, c: &str, seed: u64, limit: u64) -> Result<SampledSubbasis> {
    let kind = base_kind(base)?;
    let d = density(f, h)?;
    let c = scale(c, k, &d)?;
    let s = sieve_for(ctx, kind, k, limit)?;
    Ok(sample_subbasis(&s, &d, c, seed, limit)?)
}

pub fn sample(ctx: &Context, a: SampleArgs) -> Result<Outcome> {
    let kind = base_kind(&a.base)?;
    let d = density(&a.f, a.h)?;
    let adm = check_admissible(&d.parent, &BaseSetSpec::new(kind, a.k, a.limit), a.h, criterion_for(&a.criterion, kind)?)?;
    if !adm.pass {
        eprintln!(
            "warning: F is not admissible under {} ({})",
            adm.criterion.name(),
            adm.reason.map(|r| r.code()).unwrap_or("unknown")
        );
    }
    let sub = sample_from(ctx, &a.base, a.k, a.h, &a.f, &a.c, a.seed, a.limit)?;
    emit(a.output.as_deref(), &sub.to_file_string())?;
    ok(format!(
        "sample elements={} clamp_count={} c={} admissible={}{}",
        sub.elements.len(),
        sub.clamp_count,
        fmt_f64(sub.c),
        if adm.pass { "pass" } else { "fail" },
        if adm.boundary { " boundary" } else { "" }
    ))
}

#[derive(Debug, Args)]
pub struct CountArgs {
    /// Subbasis file from `sample`; without it the full base is used.
    #[arg(short, long)]
    input: Option<PathBuf>,
    #[arg(long, default_value = "primes")]
    base: String,
    #[arg(long, default_value_t = 1)]
    k: u32,
    /// Full-base limit (ignored with --input).
    #[arg(long, value_parser = parse_count, default_value = "10000")]
    limit: u64,
    /// table, size, decompose or energy.
    #[arg(long, default_value = "table")]
    mode: String,
    #[arg(long, default_value_t = 3)]
    h: u32,
    /// Table bound N.
    #[arg(long = "N", value_parser = parse_count, default_value = "10000")]
    n_max: u64,
    /// naive, convolution or mim.
    #[arg(long, default_value = "convolution")]
    method: String,
    /// unit, or expectation (c·f/B from the input header).
    #[arg(long, default_value = "unit")]
    weights: String,
    /// Checkpoints for size mode.
    #[arg(long, default_value = "1000,10000,100000")]
    checkpoints: String,
    /// n for decompose mode.
    #[arg(long, value_parser = parse_count, default_value = "100")]
    n: u64,
    /// ℓ for energy mode.
    #[arg(long, default_value_t = 2)]
    ell: u32,
    /// x for energy mode.
    #[arg(long, value_parser = parse_count, default_value = "10000")]
    x: u64,
    #[arg(short, long)]
    output: Option<PathBuf>,
}

pub fn count(ctx: &Context, a: CountArgs) -> Result<Outcome> {
    let (elements, sampled, provenance) = match &a.input {
        Some(path) => {
            let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            let (header, elements) = parse_subbasis_file(&text)?;
            let prov = text.lines().next().unwrap_or("").trim_start_matches('#').trim().to_string();
            (elements, Some(header), prov)
        }
        None => {
            let s = sieve_for(ctx, base_kind(&a.base)?, a.k, a.limit)?;
            (s.elements().to_vec(), None, format!("base={},k={},limit={}", a.base, a.k, a.limit))
        }
    };
    match a.mode.as_str() {
        "table" => {
            let weights = match a.weights.as_str() {
                "unit" => None,
                "expectation" => {
                    let h = sampled.ok_or_else(|| anyhow!("expectation weights need --input"))?;
                    let s = sieve_for(ctx, h.kind, h.k, h.limit)?;
                    let spec = WeightSpec::Expectation { density: h.density, c: h.c };
                    // Weights of A's own elements, B(x) from the base.
                    let w = spec.weights_for(&s, h.limit);
                    let idx: Vec<f64> = elements
                        .iter()
                        .map(|&e| w[s.elements().partition_point(|&b| b < e)])
                        .collect();
                    Some(idx)
                }
                w => bail!("weights must be unit or expectation, got `{w}`"),
            };
            let t = rep_table(&elements, a.h, a.n_max, weights.as_deref(), Method::parse(&a.method)?, &ctx.budget)?;
            emit(a.output.as_deref(), &t.to_csv(&provenance))?;
            ok(format!("count table h={} N={} elements={}", a.h, a.n_max, t.elements))
        }
        "size" => {
            let h = sampled.ok_or_else(|| anyhow!("size mode needs a sampled --input"))?;
            let sub = SampledSubbasis {
                base: BaseSetSpec::new(h.kind, h.k, h.limit),
                density: h.density,
                c: h.c,
                seed: h.seed,
                limit: h.limit,
                elements,
                clamp_count: 0,
            };
            let rows = sub.counting_report(&parse_counts(&a.checkpoints, "checkpoints")?)?;
            let mut out = String::from("x,count,predicted,ratio,low_mass\n");
            for r in &rows {
                writeln!(out, "{},{},{},{},{}", r.x, r.count, fmt_f64(r.predicted), fmt_f64(r.ratio), r.low_mass).unwrap();
            }
            emit(a.output.as_deref(), &out)?;
            ok(format!("count size rows={}", rows.len()))
        }
        "decompose" => {
            let d = exact_decomposition(&elements, a.h, a.n)?;
            let mut out = format!("# n={},h={},r={},rho={},identity={}\n", d.n, d.h, d.r, d.rho, d.identity_holds());
            out.push_str("composition,count,multiplicity\n");
            for p in &d.parts {
                let c: Vec<String> = p.composition.iter().map(|c| c.to_string()).collect();
                writeln!(out, "{},{},{}", c.join("+"), p.count, p.multiplicity).unwrap();
            }
            emit(a.output.as_deref(), &out)?;
            Ok(Outcome {
                pass: d.identity_holds(),
                summary: format!("count decompose n={} r={} rho={} identity={}", d.n, d.r, d.rho, d.identity_holds()),
            })
        }
        "energy" => {
            let e = additive_energy(&elements, a.ell, a.x, &ctx.budget)?;
            emit(a.output.as_deref(), &format!("ell,x,energy\n{},{},{}\n", a.ell, a.x, e))?;
            ok(format!("count energy ell={} x={} energy={e}", a.ell, a.x))
        }
        m => bail!("mode must be table, size, decompose or energy, got `{m}`"),
    }
}

#[derive(Debug, Subcommand)]
pub enum VerifyCmd {
    /// Weighted sums over prime k-th powers against the Γ main term.
    Goldbach(GoldbachArgs),
    /// Weighted sums over k-th powers against the Γ main term.
    Waring(WaringArgs),
    /// r_{A,h}(n) of a sampled subbasis against 𝔖(n)·F(n).
    Concentration(ConcentrationArgs),
    /// Expected representation counts against their main term.
    Expected(ExpectedArgs),
}

#[derive(Debug, Args)]
pub struct GoldbachArgs {
    #[arg(long, default_value_t = 1)]
    k: u32,
    #[arg(long, default_value_t = 3)]
    h: u32,
    /// ω ≥ 1/h, or `auto` for 1/h.
    #[arg(long, default_value = "auto")]
    omega: String,
    /// Number of in-class n sampled from [near, near·(1+spread)].
    #[arg(long, default_value_t = 20)]
    n_count: usize,
    #[arg(long, value_parser = parse_count, default_value = "2000000")]
    near: u64,
    #[arg(long, default_value_t = 0.05)]
    spread: f64,
    /// Seed for sampling n.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Explicit comma-separated n (replaces sampling).
    #[arg(long, default_value = "")]
    n_list: String,
    /// Add n+1 for each sampled n as an off-class row.
    #[arg(long, default_value_t = true, action = clap::ArgAction::Set)]
    off_rows: bool,
    #[arg(long = "Q", value_parser = parse_count, default_value = "10000")]
    q: u64,
    /// Acceptance band lo,hi on empirical/predicted.
    #[arg(long, default_value = "0.8,1.25")]
    band: String,
    /// median, or fraction:<p>.
    #[arg(long, default_value = "fraction:0.8")]
    rule: String,
    /// auto, none, zero or frac:<p>.
    #[arg(long, default_value = "auto")]
    off_class: String,
    /// JSON report path; stdout if absent.
    #[arg(short, long)]
    output: Option<PathBuf>,
    /// CSV mirror of the rows.
    #[arg(long)]
    csv: Option<PathBuf>,
}

fn omega(s: &str, h: u32) -> Result<f64> {
    if s == "auto" {
        return Ok(1.0 / h as f64);
    }
    s.parse().map_err(|_| anyhow!("omega must be `auto` or a number, got `{s}`"))
}

fn n_values(kind: BaseKind, k: u32, h: u32, list: &str, near: u64, spread: f64, count: usize, seed: u64, off: bool) -> Result<Vec<u64>> {
    if !list.is_empty() {
        return parse_counts(list, "n-list");
    }
    let hi = near + (near as f64 * spread).round() as u64;
    let mut ns = sample_in_class(kind, k, h, near, hi, count, seed)?;
    if off {
        let extra: Vec<u64> = ns.iter().map(|n| n + 1).filter(|&n| !in_class(kind, k, h, n).unwrap_or(true)).collect();
        ns.extend(extra);
        ns.sort_unstable();
    }
    Ok(ns)
}

#[derive(Debug, Args)]
pub struct WaringArgs {
    #[arg(long, default_value_t = 2)]
    k: u32,
    #[arg(long, default_value_t = 9)]
    h: u32,
    /// ω ≥ 1/h, or `auto` for 1/h.
    #[arg(long, default_value = "0.3")]
    omega: String,
    #[arg(long, default_value_t = 10)]
    n_count: usize,
    #[arg(long, value_parser = parse_count, default_value = "1000000")]
    near: u64,
    #[arg(long, default_value_t = 0.05)]
    spread: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value = "")]
    n_list: String,
    #[arg(long = "Q", value_parser = parse_count, default_value = "1000")]
    q: u64,
    #[arg(long, default_value = "0.5,2")]
    band: String,
    #[arg(long, default_value = "median")]
    rule: String,
    #[arg(short, long)]
    output: Option<PathBuf>,
    #[arg(long)]
    csv: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ConcentrationArgs {
    /// Subbasis file; sampled from the flags below if absent.
    #[arg(short, long)]
    input: Option<PathBuf>,
    /// Use the whole base with the classical total-count main term.
    #[arg(long)]
    full_base: bool,
    #[arg(long, default_value = "primes")]
    base: String,
    #[arg(long, default_value_t = 1)]
    k: u32,
    #[arg(long, default_value_t = 3)]
    h: u32,
    #[arg(long = "F", default_value = "1*x^0.5*log^0*loglog^0")]
    f: String,
    #[arg(long, default_value = "canonical")]
    c: String,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    /// Window lo,hi of n.
    #[arg(long, default_value = "100000,200000")]
    window: String,
    /// Sampling limit; 0 means the window's upper end.
    #[arg(long, value_parser = parse_count, default_value = "0")]
    limit: u64,
    #[arg(long = "Q", value_parser = parse_count, default_value = "1000")]
    q: u64,
    #[arg(long, default_value = "0.7,1.3")]
    band: String,
    #[arg(long, default_value = "fraction:0.9")]
    rule: String,
    #[arg(long, default_value = "frac:0.05")]
    off_class: String,
    #[arg(short, long)]
    output: Option<PathBuf>,
    #[arg(long)]
    csv: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ExpectedArgs {
    #[arg(long, default_value = "primes")]
    base: String,
    #[arg(long, default_value_t = 1)]
    k: u32,
    #[arg(long, default_value_t = 3)]
    h: u32,
    #[arg(long = "F", default_value = "1*x^0*log^1*loglog^0")]
    f: String,
    #[arg(long, default_value = "canonical")]
    c: String,
    /// Comma-separated n.
    #[arg(long, default_value = "1000001")]
    n: String,
    #[arg(long = "Q", value_parser = parse_count, default_value = "1000")]
    q: u64,
    #[arg(long, default_value = "0.7,1.4")]
    band: String,
    #[arg(long, default_value = "fraction:1")]
    rule: String,
    #[arg(short, long)]
    output: Option<PathBuf>,
    #[arg(long)]
    csv: Option<PathBuf>,
}

pub fn verify(ctx: &Context, cmd: VerifyCmd) -> Result<Outcome> {
    match cmd {
        VerifyCmd::Goldbach(a) => {
            let w = omega(&a.omega, a.h)?;
            let ns = n_values(BaseKind::PowersOfPrimes, a.k, a.h, &a.n_list, a.near, a.spread, a.n_count, a.seed, a.off_rows)?;
            let d = declared(&a.band, &a.rule, &a.off_class, a.k)?;
            let r = verify_goldbach_weighted(a.k, a.h, w, &ns, a.q, d, &ctx.budget)?;
            finish_report(ctx, r, a.output.as_deref(), a.csv.as_deref())
        }
        VerifyCmd::Waring(a) => {
            let w = omega(&a.omega, a.h)?;
            let ns = n_values(BaseKind::PowersOfNaturals, a.k, a.h, &a.n_list, a.near, a.spread, a.n_count, a.seed, false)?;
            let d = declared(&a.band, &a.rule, "none", a.k)?;
            let r = verify_waring_weighted(a.k, a.h, w, &ns, a.q, d, &ctx.budget)?;
            finish_report(ctx, r, a.output.as_deref(), a.csv.as_deref())
        }
        VerifyCmd::Concentration(a) => {
            let win = parse_counts(&a.window, "window")?;
            let [lo, hi] = win[..] else { bail!("window must be lo,hi") };
            let d = declared(&a.band, &a.rule, &a.off_class, a.k)?;
            let limit = if a.limit == 0 { hi } else { a.limit };
            let r = if a.full_base {
                let kind = base_kind(&a.base)?;
                let s = sieve_for(ctx, kind, a.k, limit)?;
                verify_concentration(s.elements(), *s.spec(), a.h, (lo, hi), a.q, Prediction::FullBase, d, &ctx.budget)?
            } else {
                let sub = match &a.input {
                    Some(path) => {
                        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
                        let (h, elements) = parse_subbasis_file(&text)?;
                        SampledSubbasis {
                            base: BaseSetSpec::new(h.kind, h.k, h.limit),
                            density: h.density,
                            c: h.c,
                            seed: h.seed,
                            limit: h.limit,
                            elements,
                            clamp_count: 0,
                        }
                    }
                    None => sample_from(ctx, &a.base, a.k, a.h, &a.f, &a.c, a.seed, limit)?,
                };
                verify_sampled_concentration(&sub, (lo, hi), a.q, d, &ctx.budget)?
            };
            finish_report(ctx, r, a.output.as_deref(), a.csv.as_deref())
        }
        VerifyCmd::Expected(a) => {
            let kind = base_kind(&a.base)?;
            let dens = density(&a.f, a.h)?;
            let c = scale(&a.c, a.k, &dens)?;
            let ns = parse_counts(&a.n, "n")?;
            let limit = ns.iter().copied().max().unwrap_or(1);
            let s = sieve_for(ctx, kind, a.k, limit)?;
            let d = declared(&a.band, &a.rule, "none", a.k)?;
            let mut report = VerificationReport::new("expected_rep", d);
            report
                .param("base", kind.name())
                .param("k", a.k)
                .param("h", a.h)
                .param("F", dens.parent)
                .param("c", c)
                .param("Q", a.q);
            for e in expected_rep(&s, &dens, c, &ns, a.q, &ctx.budget)? {
                let tail = if e.singular == 0.0 { 0.0 } else { e.tail / e.singular.abs() };
                if e.predicted > 0.0 {
                    report.rows.push(Row::new(e.n, e.empirical, e.predicted, tail, "in_class")?);
                } else {
                    report.off_class.push(subbasis_core::report::OffRow::new(e.n, e.empirical, e.predicted, "zero_singular_series"));
                }
            }
            finish_report(ctx, report.finish(), a.output.as_deref(), a.csv.as_deref())
        }
    }
}

#[derive(Debug, Args)]
pub struct DiagnoseArgs {
    #[arg(long, default_value = "primes")]
    base: String,
    #[arg(long, default_value_t = 1)]
    k: u32,
    /// Comma-separated energy orders ℓ.
    #[arg(long, default_value = "2")]
    ells: String,
    /// Comma-separated x grid.
    #[arg(long, default_value = "10000,31623,100000,316228,1000000")]
    x_grid: String,
    /// Comma-separated λ for B(λx)/B(x).
    #[arg(long, default_value = "2,4,8")]
    lambdas: String,
    /// Allowed |fit − target| for β and energy slopes.
    #[arg(long, default_value_t = 0.25)]
    tol: f64,
    /// Run the expected-count cross-check.
    #[arg(long, default_value_t = true, action = clap::ArgAction::Set)]
    check: bool,
    #[arg(long = "check-F", default_value = "1*x^0*log^1*loglog^0")]
    check_f: String,
    /// h of the cross-check, or `auto` for h*_k.
    #[arg(long, default_value = "auto")]
    check_h: String,
    /// n of the cross-check, or `auto` for the largest in-class n up to the grid's end.
    #[arg(long, default_value = "auto")]
    check_n: String,
    #[arg(long = "Q", value_parser = parse_count, default_value = "1000")]
    q: u64,
    #[arg(long, default_value = "0.7,1.4")]
    check_band: String,
    #[arg(short, long)]
    output: Option<PathBuf>,
    #[arg(long)]
    csv: Option<PathBuf>,
}

pub fn diagnose(ctx: &Context, a: DiagnoseArgs) -> Result<Outcome> {
    let kind = base_kind(&a.base)?;
    let grid = parse_counts(&a.x_grid, "x-grid")?;
    let ells: Vec<u32> = parse_list(&a.ells, "ells")?;
    let lambdas: Vec<f64> = parse_list(&a.lambdas, "lambdas")?;
    let x_max = grid.iter().copied().max().ok_or_else(|| anyhow!("empty x grid"))?;
    let s = sieve_for(ctx, kind, a.k, x_max)?;
    let check = if a.check {
        let h = if a.check_h == "auto" { h_star(a.k) as u32 } else { a.check_h.parse()? };
        let n = if a.check_n == "auto" {
            (1..=x_max).rev().find(|&n| in_class(kind, a.k, h, n).unwrap_or(false)).unwrap_or(x_max)
        } else {
            parse_count(&a.check_n).map_err(|e| anyhow!(e))?
        };
        Some(WeightCheck { density: density(&a.check_f, h)?, n, q_max: a.q, band: Band::parse_ratio(&a.check_band)? })
    } else {
        None
    };
    let d = Declared { band: Band::AbsDiff { tol: a.tol }, rule: Rule::MinFraction(1.0), off_class: OffClassRule::None };
    let r = condition_diagnostics(&s, &ells, &grid, &lambdas, check, d, &ctx.budget)?;
    finish_report(ctx, r, a.output.as_deref(), a.csv.as_deref())
}
