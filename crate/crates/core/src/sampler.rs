//! Random subbases: each base element n is kept independently with
//! probability min(1, c·f(n)/B(n)). The uniform for n comes from ChaCha8
//! keyed by the seed on stream n, so membership of n depends only on the
//! parameters, the seed and n.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::basesets::{BaseKind, BaseSetSpec, SieveIndex};
use crate::error::{Error, Result};
use crate::regvar::{RegVarFn, TargetDensity};

pub const RNG_NAME: &str = "chacha8";
pub const LOW_MASS_X: u64 = 1000;

/// Uniform in [0,1) attached to (seed, n).
pub fn uniform(seed: u64, n: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(n);
    (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SampledSubbasis {
    pub base: BaseSetSpec,
    pub density: TargetDensity,
    pub c: f64,
    pub seed: u64,
    pub limit: u64,
    pub elements: Vec<u64>,
    /// Base elements with c·f(n)/B(n) ≥ 1.
    pub clamp_count: u64,
}

/// Inclusion probability before clamping: c·f(n)/B(n).
pub fn raw_probability(density: &TargetDensity, c: f64, n: u64, b_of_n: u64) -> f64 {
    c * density.eval(n as f64) / b_of_n as f64
}

/// Whether the element at 0-based position `index` of the base is kept.
pub fn includes(density: &TargetDensity, c: f64, seed: u64, n: u64, index: usize) -> bool {
    let p = raw_probability(density, c, n, index as u64 + 1);
    p >= 1.0 || uniform(seed, n) < p
}

pub fn sample_subbasis(
    base: &SieveIndex,
    density: &TargetDensity,
    c: f64,
    seed: u64,
    limit: u64,
) -> Result<SampledSubbasis> {
    if !(c > 0.0 && c.is_finite()) {
        return Err(Error::Precondition(format!("sampling scale c must be positive, got {c}")));
    }
    base.require(limit, "sample_subbasis")?;
    let pool = base.upto(limit);
    let (elements, clamps): (Vec<Option<u64>>, Vec<bool>) = pool
        .par_iter()
        .enumerate()
        .map(|(i, &n)| {
            let p = raw_probability(density, c, n, i as u64 + 1);
            let keep = p >= 1.0 || uniform(seed, n) < p;
            (keep.then_some(n), p >= 1.0)
        })
        .unzip();
    Ok(SampledSubbasis {
        base: BaseSetSpec { limit, ..*base.spec() },
        density: *density,
        c,
        seed,
        limit,
        elements: elements.into_iter().flatten().collect(),
        clamp_count: clamps.into_iter().filter(|&b| b).count() as u64,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CountRow {
    pub x: u64,
    pub count: u64,
    pub predicted: f64,
    pub ratio: f64,
    pub low_mass: bool,
}

impl SampledSubbasis {
    pub fn count(&self, x: u64) -> u64 {
        self.elements.partition_point(|&e| e <= x) as u64
    }

    /// c·(β/ω)·f(x), the predicted size of A ∩ [1, x].
    pub fn predicted_count(&self, x: u64) -> f64 {
        self.c * self.base.beta() / self.density.omega() * self.density.eval(x as f64)
    }

    pub fn counting_report(&self, checkpoints: &[u64]) -> Result<Vec<CountRow>> {
        checkpoints
            .iter()
            .map(|&x| {
                if x > self.limit {
                    return Err(Error::Precondition(format!("checkpoint {x} exceeds limit {}", self.limit)));
                }
                let count = self.count(x);
                let predicted = self.predicted_count(x);
                Ok(CountRow { x, count, predicted, ratio: count as f64 / predicted, low_mass: x < LOW_MASS_X })
            })
            .collect()
    }

    /// Header line of the subbasis file.
    pub fn header(&self) -> String {
        let f = &self.density.parent;
        format!(
            "# base={},k={},kappa={},psi={},{},c={},h={},seed={},limit={},fscale={},rng={}",
            self.base.kind.name(),
            self.base.k,
            f.kappa,
            f.a,
            f.b,
            self.c,
            self.density.h,
            self.seed,
            self.limit,
            f.c,
            RNG_NAME
        )
    }

    pub fn to_file_string(&self) -> String {
        let mut s = self.header();
        s.push('\n');
        for e in &self.elements {
            s.push_str(&e.to_string());
            s.push('\n');
        }
        s
    }
}

/// Sampling parameters recovered from a subbasis file header.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SubbasisHeader {
    pub kind: BaseKind,
    pub k: u32,
    pub density: TargetDensity,
    pub c: f64,
    pub seed: u64,
    pub limit: u64,
}

fn header_fields(line: &str) -> Result<Vec<(String, String)>> {
    let body = line
        .strip_prefix('#')
        .ok_or_else(|| Error::Format("subbasis file must start with a `#` header".into()))?
        .trim();
    let mut fields: Vec<(String, String)> = Vec::new();
    for tok in body.split(',') {
        match tok.split_once('=') {
            Some((k, v)) => fields.push((k.trim().to_string(), v.trim().to_string())),
            // psi carries two comma-separated exponents.
            None => match fields.last_mut() {
                Some(last) => {
                    last.1.push(',');
                    last.1.push_str(tok.trim());
                }
                None => return Err(Error::Format(format!("bad header token `{tok}`"))),
            },
        }
    }
    Ok(fields)
}

pub fn parse_header(line: &str) -> Result<SubbasisHeader> {
    let fields = header_fields(line)?;
    let get = |key: &str| {
        fields
            .iter()
            .find(|(k, _)| k == key)
            .map(|(_, v)| v.as_str())
            .ok_or_else(|| Error::Format(format!("header is missing `{key}`")))
    };
    let num = |key: &str| -> Result<f64> {
        get(key)?.parse().map_err(|_| Error::Format(format!("header field `{key}` is not a number")))
    };
    let int = |key: &str| -> Result<u64> {
        get(key)?.parse().map_err(|_| Error::Format(format!("header field `{key}` is not an integer")))
    };
    let (a, b) = get("psi")?
        .split_once(',')
        .ok_or_else(|| Error::Format("psi must be `a,b`".into()))?;
    let parse_f = |s: &str| s.trim().parse::<f64>().map_err(|_| Error::Format(format!("bad psi exponent `{s}`")));
    if let Ok(rng) = get("rng") {
        if rng != RNG_NAME {
            return Err(Error::Format(format!("unsupported generator `{rng}`")));
        }
    }
    let fscale = if fields.iter().any(|(k, _)| k == "fscale") { num("fscale")? } else { 1.0 };
    let f = RegVarFn::new(fscale, num("kappa")?, parse_f(a)?, parse_f(b)?)?;
    Ok(SubbasisHeader {
        kind: BaseKind::parse(get("base")?)?,
        k: int("k")? as u32,
        density: TargetDensity::new(f, int("h")? as u32)?,
        c: num("c")?,
        seed: int("seed")?,
        limit: int("limit")?,
    })
}

/// Parse a subbasis file into its header and element list.
pub fn parse_subbasis_file(text: &str) -> Result<(SubbasisHeader, Vec<u64>)> {
    let mut lines = text.lines();
    let header = parse_header(lines.next().unwrap_or(""))?;
    let mut elements = Vec::new();
    for line in lines {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        elements.push(line.parse::<u64>().map_err(|_| Error::Format(format!("bad element `{line}`")))?);
    }
    if elements.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::Format("elements must be strictly increasing".into()));
    }
    Ok((header, elements))
}
