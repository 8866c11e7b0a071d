//! Result records and their CSV / JSON serializations.

use serde::Serialize;

use crate::error::{Result, SimError};

pub const CSV_HEADER: &str =
    "experiment,metric,snr_db,snr_p_db,velocity_kmh,antennas,pattern,value,ci_half_width,trials,seed";

/// One measured value at one sweep point. Coordinates that do not apply
/// to an experiment are `None` (empty in CSV, `null` in JSON).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResultRecord {
    pub experiment: String,
    pub metric: String,
    pub snr_db: Option<f64>,
    pub snr_p_db: Option<f64>,
    pub velocity_kmh: Option<f64>,
    pub antennas: Option<usize>,
    pub pattern: Option<String>,
    pub value: f64,
    pub ci_half_width: Option<f64>,
    pub trials: usize,
    pub seed: u64,
}

impl ResultRecord {
    pub fn new(experiment: &str, metric: &str, value: f64, trials: usize, seed: u64) -> Self {
        Self {
            experiment: experiment.into(),
            metric: metric.into(),
            snr_db: None,
            snr_p_db: None,
            velocity_kmh: None,
            antennas: None,
            pattern: None,
            value,
            ci_half_width: None,
            trials,
            seed,
        }
    }

    pub fn check(&self) -> Result<()> {
        let texts = [&self.experiment, &self.metric];
        if texts.into_iter().chain(self.pattern.as_ref()).any(|t| t.contains([',', '\n', '"'])) {
            return Err(SimError::Output(format!(
                "{} {}: text fields must not contain commas, quotes or newlines",
                self.experiment, self.metric
            )));
        }
        if !self.value.is_finite() || self.value < 0.0 {
            return Err(SimError::Output(format!(
                "{} {} has invalid value {}",
                self.experiment, self.metric, self.value
            )));
        }
        if matches!(self.metric.as_str(), "BER" | "SER") && self.value > 1.0 {
            return Err(SimError::Output(format!(
                "{} {} above one: {}",
                self.experiment, self.metric, self.value
            )));
        }
        Ok(())
    }

    fn csv_line(&self) -> String {
        let num = |v: Option<f64>| v.map(fmt_num).unwrap_or_default();
        format!(
            "{},{},{},{},{},{},{},{},{},{},{}",
            self.experiment,
            self.metric,
            num(self.snr_db),
            num(self.snr_p_db),
            num(self.velocity_kmh),
            self.antennas.map(|e| e.to_string()).unwrap_or_default(),
            self.pattern.clone().unwrap_or_default(),
            fmt_num(self.value),
            num(self.ci_half_width),
            self.trials,
            self.seed
        )
    }
}

/// Twelve significant digits in scientific notation.
pub fn fmt_num(v: f64) -> String {
    format!("{v:.11e}")
}

pub fn to_csv(records: &[ResultRecord]) -> Result<String> {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for r in records {
        r.check()?;
        out.push_str(&r.csv_line());
        out.push('\n');
    }
    Ok(out)
}

pub fn to_json(records: &[ResultRecord]) -> Result<String> {
    for r in records {
        r.check()?;
    }
    let mut s = serde_json::to_string_pretty(records)
        .map_err(|e| SimError::Output(e.to_string()))?;
    s.push('\n');
    Ok(s)
}

/// Wilson score interval for `successes` out of `n` at 95% confidence.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WilsonInterval {
    pub lower: f64,
    pub upper: f64,
}

impl WilsonInterval {
    pub fn new(successes: u64, n: u64) -> Self {
        if n == 0 {
            return Self {
                lower: 0.0,
                upper: 1.0,
            };
        }
        const Z: f64 = 1.959_963_984_540_054;
        let n_f = n as f64;
        let p = successes as f64 / n_f;
        let z2 = Z * Z;
        let denom = 1.0 + z2 / n_f;
        let centre = (p + z2 / (2.0 * n_f)) / denom;
        let half = Z / denom * (p * (1.0 - p) / n_f + z2 / (4.0 * n_f * n_f)).sqrt();
        // the bounds are exactly 0 and 1 at the extremes; avoid cancellation
        Self {
            lower: if successes == 0 { 0.0 } else { (centre - half).max(0.0) },
            upper: if successes == n { 1.0 } else { (centre + half).min(1.0) },
        }
    }

    pub fn half_width(&self) -> f64 {
        (self.upper - self.lower) / 2.0
    }

    pub fn overlaps(&self, other: &WilsonInterval) -> bool {
        self.lower <= other.upper && other.lower <= self.upper
    }

    pub fn contains(&self, p: f64) -> bool {
        self.lower <= p && p <= self.upper
    }
}
