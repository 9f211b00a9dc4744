//! Experiment record: measured series, fitted slopes, verdicts, and the
//! parameters that produced them. Serializes to JSON and to a flat
//! long-format CSV (`experiment,series,index,value`) for plotting.

use serde::Serialize;

use crate::stats::LineFit;

#[derive(Debug, Clone, Serialize)]
pub struct SeriesPoint {
    pub series: String,
    pub index: f64,
    pub value: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct FitEntry {
    pub name: String,
    pub slope: f64,
    pub intercept: f64,
    pub rms_residual: f64,
    pub points: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct Verdict {
    pub name: String,
    pub pass: bool,
    pub measured: f64,
    pub threshold: f64,
    pub detail: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct EstimateReport {
    pub experiment: String,
    pub params: serde_json::Value,
    pub seed: Option<u64>,
    pub series: Vec<SeriesPoint>,
    pub fits: Vec<FitEntry>,
    pub verdicts: Vec<Verdict>,
    /// Ratio cells skipped by the denominator guard.
    pub skipped_cells: usize,
}

impl EstimateReport {
    pub fn new(experiment: impl Into<String>, params: serde_json::Value) -> Self {
        EstimateReport {
            experiment: experiment.into(),
            params,
            seed: None,
            series: Vec::new(),
            fits: Vec::new(),
            verdicts: Vec::new(),
            skipped_cells: 0,
        }
    }

    pub fn push_point(&mut self, series: &str, index: f64, value: f64) {
        self.series.push(SeriesPoint {
            series: series.to_string(),
            index,
            value,
        });
    }

    pub fn push_fit(&mut self, name: &str, fit: &LineFit) {
        self.fits.push(FitEntry {
            name: name.to_string(),
            slope: fit.slope,
            intercept: fit.intercept,
            rms_residual: fit.rms_residual,
            points: fit.points,
        });
    }

    pub fn push_verdict(
        &mut self,
        name: &str,
        pass: bool,
        measured: f64,
        threshold: f64,
        detail: impl Into<String>,
    ) {
        self.verdicts.push(Verdict {
            name: name.to_string(),
            pass,
            measured,
            threshold,
            detail: detail.into(),
        });
    }

    pub fn all_pass(&self) -> bool {
        self.verdicts.iter().all(|v| v.pass)
    }

    pub fn series_values(&self, name: &str) -> Vec<(f64, f64)> {
        self.series
            .iter()
            .filter(|p| p.series == name)
            .map(|p| (p.index, p.value))
            .collect()
    }

    pub fn verdict(&self, name: &str) -> Option<&Verdict> {
        self.verdicts.iter().find(|v| v.name == name)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    /// Long-format CSV: one row per series point.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("experiment,series,index,value\n");
        for p in &self.series {
            out.push_str(&format!(
                "{},{},{},{:.17e}\n",
                self.experiment, p.series, p.index, p.value
            ));
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn verdict_aggregation() {
        let mut r = EstimateReport::new("demo", serde_json::json!({"n": 1}));
        r.push_verdict("a", true, 1.0, 2.0, "ok");
        assert!(r.all_pass());
        r.push_verdict("b", false, 3.0, 2.0, "grew");
        assert!(!r.all_pass());
        assert!(r.verdict("b").is_some());
    }

    #[test]
    fn csv_is_long_format() {
        let mut r = EstimateReport::new("demo", serde_json::Value::Null);
        r.push_point("c_j", 2.0, 1.5);
        r.push_point("c_j", 3.0, 1.25);
        let csv = r.to_csv();
        assert_eq!(csv.lines().count(), 3);
        assert!(csv.lines().nth(1).unwrap().starts_with("demo,c_j,2,"));
    }

    #[test]
    fn json_round_trips_as_value() {
        let mut r = EstimateReport::new("demo", serde_json::json!({"kmax": 8}));
        r.seed = Some(7);
        r.push_point("q", 0.0, 1.0);
        let v: serde_json::Value = serde_json::from_str(&r.to_json()).unwrap();
        assert_eq!(v["experiment"], "demo");
        assert_eq!(v["seed"], 7);
    }
}
