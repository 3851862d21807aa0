use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet};

use crate::error::{Error, Result};

pub const REPORT_SCHEMA_VERSION: u32 = 1;

/// Default tolerance on fitted exponents.
pub const DEFAULT_EXPONENT_TOLERANCE: f64 = 0.2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    Pass,
    Fail,
    /// Measured but not judged, e.g. outside the range where a bound is claimed.
    Informational,
}

/// How the verdict is derived from the stored series and fit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Criterion {
    /// Fitted slope `≤ predicted + tolerance`.
    SlopeAtMost { predicted: f64, tolerance: f64 },
    /// `|slope − predicted| ≤ tolerance`.
    SlopeWithin { predicted: f64, tolerance: f64 },
    /// Every series value `≤ budget`.
    ValuesAtMost { budget: f64 },
    /// Within each group, `max/min − 1 ≤ budget`.
    SpreadAtMost { budget: f64 },
    /// In series order the values never increase and the last is `≤ budget`.
    DecreasingTo { budget: f64 },
    /// Nothing to judge.
    None,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeriesPoint {
    pub group: String,
    /// Abscissa; fits use `log₂(scale)`.
    pub scale: f64,
    pub value: f64,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub extra: BTreeMap<String, f64>,
}

impl SeriesPoint {
    pub fn new(group: impl Into<String>, scale: f64, value: f64) -> Self {
        Self { group: group.into(), scale, value, extra: BTreeMap::new() }
    }

    pub fn with(mut self, key: &str, value: f64) -> Self {
        self.extra.insert(key.to_string(), value);
        self
    }
}

/// Least-squares line through `(log₂ scale, log₂ value)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExponentFit {
    pub exponent: f64,
    /// `2^intercept`.
    pub constant: f64,
    /// Root mean square of the log₂ residuals.
    pub residual: f64,
    pub points: usize,
}

pub fn fit_exponent(points: &[(f64, f64)]) -> Result<ExponentFit> {
    if points.len() < 2 {
        return Err(Error::InvalidArgument(format!("a fit needs at least 2 points, got {}", points.len())));
    }
    let mut logs = Vec::with_capacity(points.len());
    for &(s, v) in points {
        if !(s > 0.0 && v > 0.0 && s.is_finite() && v.is_finite()) {
            return Err(Error::InvalidArgument(format!("cannot fit non-positive point ({s}, {v})")));
        }
        logs.push((s.log2(), v.log2()));
    }
    let n = logs.len() as f64;
    let mx = logs.iter().map(|p| p.0).sum::<f64>() / n;
    let my = logs.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = logs.iter().map(|p| (p.0 - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::InvalidArgument("fit abscissae are all equal".into()));
    }
    let sxy: f64 = logs.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss: f64 = logs.iter().map(|p| (p.1 - intercept - slope * p.0).powi(2)).sum();
    Ok(ExponentFit { exponent: slope, constant: intercept.exp2(), residual: (ss / n).sqrt(), points: logs.len() })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub schema_version: u32,
    pub experiment: String,
    pub inputs: BTreeMap<String, serde_json::Value>,
    pub series: Vec<SeriesPoint>,
    pub fit: Option<ExponentFit>,
    pub criterion: Criterion,
    /// False when the parameters fall outside the range where the bound is claimed.
    pub in_hypothesis: bool,
    pub verdict: Verdict,
    #[serde(default)]
    pub flags: Vec<String>,
}

impl ExperimentReport {
    pub fn new(experiment: &str) -> Self {
        Self {
            schema_version: REPORT_SCHEMA_VERSION,
            experiment: experiment.to_string(),
            inputs: BTreeMap::new(),
            series: Vec::new(),
            fit: None,
            criterion: Criterion::None,
            in_hypothesis: true,
            verdict: Verdict::Informational,
            flags: Vec::new(),
        }
    }

    pub fn input(&mut self, key: &str, value: impl Serialize) {
        let v = serde_json::to_value(value).unwrap_or(serde_json::Value::Null);
        self.inputs.insert(key.to_string(), v);
    }

    pub fn push(&mut self, point: SeriesPoint) {
        self.series.push(point);
    }

    pub fn flag(&mut self, message: impl Into<String>) {
        self.flags.push(message.into());
    }

    /// Fits the points of `group` and stores the result.
    /// Points with a vanishing value are left out and flagged.
    pub fn fit_group(&mut self, group: &str) -> Result<&ExponentFit> {
        let all: Vec<(f64, f64)> = self.series.iter().filter(|p| p.group == group).map(|p| (p.scale, p.value)).collect();
        let pts: Vec<(f64, f64)> = all.iter().copied().filter(|p| p.1 > 0.0).collect();
        if pts.len() < all.len() {
            self.flag(format!("{} zero values in '{group}' left out of the fit", all.len() - pts.len()));
        }
        self.fit = Some(fit_exponent(&pts)?);
        Ok(self.fit.as_ref().unwrap())
    }

    /// Recomputes the verdict from the stored series, fit and criterion.
    pub fn derive_verdict(&self) -> Verdict {
        if !self.in_hypothesis {
            return Verdict::Informational;
        }
        let ok = match self.criterion {
            Criterion::None => return Verdict::Informational,
            Criterion::SlopeAtMost { predicted, tolerance } => match &self.fit {
                Some(f) => f.exponent <= predicted + tolerance,
                None => false,
            },
            Criterion::SlopeWithin { predicted, tolerance } => match &self.fit {
                Some(f) => (f.exponent - predicted).abs() <= tolerance,
                None => false,
            },
            Criterion::ValuesAtMost { budget } => {
                !self.series.is_empty() && self.series.iter().all(|p| p.value <= budget)
            }
            Criterion::SpreadAtMost { budget } => {
                let groups: BTreeSet<&str> = self.series.iter().map(|p| p.group.as_str()).collect();
                !groups.is_empty() && groups.iter().all(|g| spread(self.series.iter().filter(|p| p.group == *g).map(|p| p.value)) <= budget)
            }
            Criterion::DecreasingTo { budget } => {
                self.series.windows(2).all(|w| w[1].value <= w[0].value) && self.series.last().is_some_and(|p| p.value <= budget)
            }
        };
        if ok { Verdict::Pass } else { Verdict::Fail }
    }

    /// Sets the criterion and the derived verdict.
    pub fn judge(&mut self, criterion: Criterion) -> Verdict {
        self.criterion = criterion;
        self.verdict = self.derive_verdict();
        self.verdict
    }

    pub fn to_json(&self) -> Result<String> {
        let mut s = serde_json::to_string_pretty(self)?;
        s.push('\n');
        Ok(s)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let report: Self = serde_json::from_str(text)?;
        if report.schema_version != REPORT_SCHEMA_VERSION {
            return Err(Error::Format(format!("unsupported report schema version {}", report.schema_version)));
        }
        Ok(report)
    }

    /// Series only: `group,scale,value` followed by the union of extra columns.
    pub fn to_csv(&self) -> String {
        let keys: BTreeSet<&str> = self.series.iter().flat_map(|p| p.extra.keys().map(String::as_str)).collect();
        let mut out = String::from("group,scale,value");
        for k in &keys {
            out.push(',');
            out.push_str(&csv_field(k));
        }
        out.push('\n');
        for p in &self.series {
            out.push_str(&format!("{},{:?},{:?}", csv_field(&p.group), p.scale, p.value));
            for k in &keys {
                out.push(',');
                if let Some(v) = p.extra.get(*k) {
                    out.push_str(&format!("{v:?}"));
                }
            }
            out.push('\n');
        }
        out
    }
}

/// `max/min − 1` of positive values; infinite if some value is not positive.
pub fn spread(values: impl Iterator<Item = f64>) -> f64 {
    let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
    for v in values {
        lo = lo.min(v);
        hi = hi.max(v);
    }
    if lo > 0.0 && lo.is_finite() { hi / lo - 1.0 } else { f64::INFINITY }
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) { format!("\"{}\"", s.replace('"', "\"\"")) } else { s.to_string() }
}

/// Largest `p` covered by the restriction estimates in dimensions `(d1, d2)`.
pub fn restriction_exponent_limit(d1: usize, d2: usize) -> f64 {
    let (a, b) = (d1 as f64, d2 as f64);
    (2.0 * a / (a + 2.0)).min(2.0 * (b + 1.0) / (b + 3.0))
}

/// Whether `p` is one where a restriction-type decay is claimed. `p = 2` is
/// always judged since it follows from the spectral theorem.
pub fn restriction_in_hypothesis(p: f64, d1: usize, d2: usize) -> bool {
    p == 2.0 || (1.0..=restriction_exponent_limit(d1, d2)).contains(&p)
}

pub(crate) fn check_exponent(p: f64) -> Result<()> {
    if !(1.0..=2.0).contains(&p) {
        return Err(Error::InvalidArgument(format!("p must lie in [1, 2], got {p}")));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn exact_power_law() {
        let pts: Vec<_> = (1..=5).map(|l| ((2f64).powi(l), 3.0 * (2f64).powi(-l))).collect();
        let f = fit_exponent(&pts).unwrap();
        assert!((f.exponent + 1.0).abs() < 1e-12);
        assert!((f.constant - 3.0).abs() < 1e-12);
        assert!(f.residual < 1e-12);
        assert!(fit_exponent(&pts[..1]).is_err());
        assert!(fit_exponent(&[(1.0, 1.0), (2.0, 0.0)]).is_err());
    }

    #[test]
    fn residual_is_rms_of_log_errors() {
        // log2 values 0, 1, 0 against 0, 1, 2: slope 0, mean 1/3, residuals −1/3, 2/3, −1/3.
        let f = fit_exponent(&[(1.0, 1.0), (2.0, 2.0), (4.0, 1.0)]).unwrap();
        assert!(f.exponent.abs() < 1e-12);
        assert!((f.residual - (6.0f64 / 27.0).sqrt()).abs() < 1e-12);
    }

    #[test]
    fn verdicts_follow_stored_data() {
        let mut r = ExperimentReport::new("demo");
        for l in 1..=4 {
            r.push(SeriesPoint::new("main", (2f64).powi(l), (2f64).powi(-l)));
        }
        r.fit_group("main").unwrap();
        assert_eq!(r.judge(Criterion::SlopeAtMost { predicted: -1.0, tolerance: 0.2 }), Verdict::Pass);
        assert_eq!(r.judge(Criterion::SlopeAtMost { predicted: -1.5, tolerance: 0.2 }), Verdict::Fail);
        assert_eq!(r.judge(Criterion::SlopeWithin { predicted: -0.5, tolerance: 0.3 }), Verdict::Fail);
        assert_eq!(r.judge(Criterion::ValuesAtMost { budget: 0.5 }), Verdict::Pass);
        assert_eq!(r.judge(Criterion::SpreadAtMost { budget: 1.0 }), Verdict::Fail);
        assert_eq!(r.judge(Criterion::DecreasingTo { budget: 0.1 }), Verdict::Pass);
        assert_eq!(r.judge(Criterion::DecreasingTo { budget: 0.01 }), Verdict::Fail);
        r.push(SeriesPoint::new("main", 32.0, 0.07));
        assert_eq!(r.judge(Criterion::DecreasingTo { budget: 0.1 }), Verdict::Fail);
        r.in_hypothesis = false;
        assert_eq!(r.judge(Criterion::ValuesAtMost { budget: 0.5 }), Verdict::Informational);
    }

    #[test]
    fn json_round_trip_and_csv() {
        let mut r = ExperimentReport::new("demo");
        r.input("p", 1.0);
        r.push(SeriesPoint::new("a,b", 2.0, 0.25).with("tail", 1e-9));
        r.push(SeriesPoint::new("main", 4.0, 0.125));
        let text = r.to_json().unwrap();
        assert_eq!(ExperimentReport::from_json(&text).unwrap(), r);
        assert_eq!(r.to_csv(), "group,scale,value,tail\n\"a,b\",2.0,0.25,1e-9\nmain,4.0,0.125,\n");
        let bumped = text.replace("\"schema_version\": 1", "\"schema_version\": 9");
        assert!(ExperimentReport::from_json(&bumped).is_err());
    }

    #[test]
    fn hypothesis_range() {
        assert!((restriction_exponent_limit(3, 2) - 1.2).abs() < 1e-15);
        assert!((restriction_exponent_limit(2, 2) - 1.0).abs() < 1e-15);
        assert!(restriction_in_hypothesis(1.0, 2, 2));
        assert!(!restriction_in_hypothesis(1.1, 2, 2));
        assert!(restriction_in_hypothesis(2.0, 1, 1));
    }

    proptest! {
        #[test]
        fn fit_recovers_slope_and_is_shift_invariant(slope in -3.0f64..3.0, c in 0.1f64..10.0, shift in 0i32..4) {
            let pts: Vec<_> = (0..5).map(|i| {
                let s = (2f64).powi(i + shift);
                (s, c * s.powf(slope))
            }).collect();
            let f = fit_exponent(&pts).unwrap();
            prop_assert!((f.exponent - slope).abs() < 1e-9);
            prop_assert!((f.constant / c - 1.0).abs() < 1e-9);
        }
    }
}
