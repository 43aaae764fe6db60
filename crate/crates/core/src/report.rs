//! Verification reports: rows of empirical vs predicted values, a declared
//! acceptance band and the verdict derived from them.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{fmt_f64, median, round_sig15};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Band {
    /// lo ≤ empirical/predicted ≤ hi.
    Ratio { lo: f64, hi: f64 },
    /// |empirical − predicted| ≤ tol.
    AbsDiff { tol: f64 },
}

impl Band {
    /// Parse `lo,hi`.
    pub fn parse_ratio(s: &str) -> Result<Self> {
        let bad = || Error::Config(format!("band must be `lo,hi`, got `{s}`"));
        let (lo, hi) = s.split_once(',').ok_or_else(bad)?;
        let lo: f64 = lo.trim().parse().map_err(|_| bad())?;
        let hi: f64 = hi.trim().parse().map_err(|_| bad())?;
        if !(lo.is_finite() && hi.is_finite() && 0.0 <= lo && lo <= hi) {
            return Err(bad());
        }
        Ok(Band::Ratio { lo, hi })
    }

    /// Membership test; `rel_tail` widens a ratio band by the relative
    /// truncation residual of the prediction.
    pub fn contains(&self, empirical: f64, predicted: f64, rel_tail: f64) -> bool {
        match *self {
            Band::Ratio { lo, hi } => {
                let r = empirical / predicted;
                lo * (1.0 - rel_tail) <= r && r <= hi * (1.0 + rel_tail)
            }
            Band::AbsDiff { tol } => (empirical - predicted).abs() <= tol,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "value", rename_all = "snake_case")]
pub enum Rule {
    /// At least this fraction of rows inside the band.
    MinFraction(f64),
    /// The median ratio inside the band.
    Median,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "value", rename_all = "snake_case")]
pub enum OffClassRule {
    None,
    /// Every off-class empirical value is exactly 0.
    ExactZero,
    /// Median off-class empirical value at most this fraction of the
    /// in-class median.
    MaxFractionOfMedian(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Declared {
    pub band: Band,
    pub rule: Rule,
    pub off_class: OffClassRule,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Row {
    pub n: u64,
    pub empirical: f64,
    pub predicted: f64,
    pub ratio: f64,
    /// Relative truncation residual of the prediction.
    pub rel_tail: f64,
    pub tag: String,
    /// Overrides the declared band for this row.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub band: Option<Band>,
}

impl Row {
    pub fn new(n: u64, empirical: f64, predicted: f64, rel_tail: f64, tag: &str) -> Result<Self> {
        if !(predicted > 0.0 && predicted.is_finite()) {
            return Err(Error::Precondition(format!("prediction at n={n} is not positive: {predicted}")));
        }
        Ok(Row {
            n,
            empirical: round_sig15(empirical),
            predicted: round_sig15(predicted),
            ratio: round_sig15(empirical / predicted),
            rel_tail: round_sig15(rel_tail),
            tag: tag.into(),
            band: None,
        })
    }

    pub fn with_band(mut self, band: Band) -> Self {
        self.band = Some(band);
        self
    }
}

/// A row outside the congruence class where the main term applies.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OffRow {
    pub n: u64,
    pub empirical: f64,
    pub predicted: f64,
    pub tag: String,
}

impl OffRow {
    pub fn new(n: u64, empirical: f64, predicted: f64, tag: &str) -> Self {
        OffRow { n, empirical: round_sig15(empirical), predicted: round_sig15(predicted), tag: tag.into() }
    }
}

/// Raw data accompanying a report (fits, tables).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeriesPoint {
    pub tag: String,
    pub x: f64,
    pub value: f64,
}

impl SeriesPoint {
    pub fn new(tag: &str, x: f64, value: f64) -> Self {
        SeriesPoint { tag: tag.into(), x: round_sig15(x), value: round_sig15(value) }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub rows: usize,
    pub in_band: usize,
    pub fraction_in_band: Option<f64>,
    pub median_ratio: Option<f64>,
    pub off_class_rows: usize,
    pub off_class_median_empirical: Option<f64>,
    pub in_class_median_empirical: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Pass,
    PassVacuous,
    Fail,
}

impl Verdict {
    pub fn passed(self) -> bool {
        self != Verdict::Fail
    }

    pub fn name(self) -> &'static str {
        match self {
            Verdict::Pass => "pass",
            Verdict::PassVacuous => "pass_vacuous",
            Verdict::Fail => "fail",
        }
    }
}

fn in_band(row: &Row, declared: &Declared) -> bool {
    row.band.unwrap_or(declared.band).contains(row.empirical, row.predicted, row.rel_tail)
}

pub fn summarize(rows: &[Row], off: &[OffRow], declared: &Declared) -> Summary {
    let hits = rows.iter().filter(|r| in_band(r, declared)).count();
    let ratios: Vec<f64> = rows.iter().map(|r| r.ratio).collect();
    let emp: Vec<f64> = rows.iter().map(|r| r.empirical).collect();
    let off_emp: Vec<f64> = off.iter().map(|r| r.empirical).collect();
    Summary {
        rows: rows.len(),
        in_band: hits,
        fraction_in_band: (!rows.is_empty()).then(|| round_sig15(hits as f64 / rows.len() as f64)),
        median_ratio: median(&ratios).map(round_sig15),
        off_class_rows: off.len(),
        off_class_median_empirical: median(&off_emp).map(round_sig15),
        in_class_median_empirical: median(&emp).map(round_sig15),
    }
}

/// Pass/fail from the rows and the declared band alone.
pub fn verdict(rows: &[Row], off: &[OffRow], declared: &Declared) -> Verdict {
    if rows.is_empty() && off.is_empty() {
        return Verdict::PassVacuous;
    }
    let s = summarize(rows, off, declared);
    let band_ok = match declared.rule {
        _ if rows.is_empty() => true,
        Rule::MinFraction(f) => s.fraction_in_band.unwrap_or(0.0) >= f,
        Rule::Median => {
            let med = s.median_ratio.unwrap_or(f64::NAN);
            match declared.band {
                Band::Ratio { lo, hi } => {
                    let tail = rows.iter().map(|r| r.rel_tail).fold(0.0, f64::max);
                    lo * (1.0 - tail) <= med && med <= hi * (1.0 + tail)
                }
                Band::AbsDiff { tol } => {
                    let diffs: Vec<f64> = rows.iter().map(|r| (r.empirical - r.predicted).abs()).collect();
                    median(&diffs).is_some_and(|d| d <= tol)
                }
            }
        }
    };
    let off_ok = match declared.off_class {
        OffClassRule::None => true,
        OffClassRule::ExactZero => off.iter().all(|r| r.empirical == 0.0),
        OffClassRule::MaxFractionOfMedian(f) => match (s.off_class_median_empirical, s.in_class_median_empirical) {
            (Some(o), Some(i)) => o <= f * i,
            _ => true,
        },
    };
    if band_ok && off_ok {
        Verdict::Pass
    } else {
        Verdict::Fail
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub id: String,
    pub params: BTreeMap<String, String>,
    pub notes: Vec<String>,
    pub declared: Declared,
    pub rows: Vec<Row>,
    pub off_class: Vec<OffRow>,
    #[serde(skip_serializing_if = "Vec::is_empty", default)]
    pub series: Vec<SeriesPoint>,
    pub summary: Summary,
    pub verdict: Verdict,
}

impl VerificationReport {
    pub fn new(id: &str, declared: Declared) -> Self {
        VerificationReport {
            id: id.into(),
            params: BTreeMap::new(),
            notes: Vec::new(),
            declared,
            rows: Vec::new(),
            off_class: Vec::new(),
            series: Vec::new(),
            summary: summarize(&[], &[], &declared),
            verdict: Verdict::PassVacuous,
        }
    }

    pub fn param(&mut self, key: &str, value: impl ToString) -> &mut Self {
        self.params.insert(key.into(), value.to_string());
        self
    }

    pub fn note(&mut self, text: &str) -> &mut Self {
        self.notes.push(text.into());
        self
    }

    /// Recompute summary and verdict after rows change.
    pub fn finish(mut self) -> Self {
        self.summary = summarize(&self.rows, &self.off_class, &self.declared);
        self.verdict = verdict(&self.rows, &self.off_class, &self.declared);
        self
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes") + "\n"
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Format(format!("report json: {e}")))
    }

    /// CSV mirror of the rows, off-class rows tagged `off_class`.
    pub fn to_csv(&self) -> String {
        let mut s = format!("# id={},verdict={}\n", self.id, self.verdict.name());
        s.push_str("n,empirical,predicted,ratio,rel_tail,tag\n");
        for r in &self.rows {
            writeln!(
                s,
                "{},{},{},{},{},{}",
                r.n,
                fmt_f64(r.empirical),
                fmt_f64(r.predicted),
                fmt_f64(r.ratio),
                fmt_f64(r.rel_tail),
                r.tag
            )
            .unwrap();
        }
        for r in &self.off_class {
            writeln!(s, "{},{},{},,,off_class:{}", r.n, fmt_f64(r.empirical), fmt_f64(r.predicted), r.tag).unwrap();
        }
        s
    }
}
