//! Run reports. Every command that computes anything emits one JSON report
//! on stdout: the validated configuration echoed verbatim, resolved sizes,
//! per-trial outcomes, stage wall-times and the library version. Reports
//! must round-trip through JSON unchanged and may not contain non-finite
//! numbers (serde_json would silently turn those into nulls).

use serde::{Deserialize, Serialize};
use serde_json::Value;
use tensorlev::error::{Error, Result};

use crate::ensure_contract;

/// The experiment settings exactly as resolved from the command line,
/// validated before any compute and echoed into the report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub kernel: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub q: Option<usize>,
    pub eps: f64,
    pub lambda: f64,
    /// Caller-supplied statistical-dimension bound; absent when --mu-auto.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mu: Option<f64>,
    pub mu_auto: bool,
    pub samples_const: f64,
    pub seed: u64,
    pub trials: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub threads: Option<usize>,
    pub verify: bool,
    pub format: String,
    pub label_column: usize,
    pub preset: String,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub data: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub test_data: Option<String>,
    pub classify: bool,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub nnz_grid: Vec<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub runs: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out: Option<String>,
}

impl ExperimentConfig {
    /// Range checks shared by every command; command-specific constraints
    /// (dataset counts, kernel/flag compatibility) live with the commands.
    pub fn validate(&self) -> Result<()> {
        ensure_contract!(
            self.eps > 0.0 && self.eps < 1.0,
            "eps must lie in (0,1), got {}",
            self.eps
        );
        ensure_contract!(self.lambda > 0.0, "lambda must be positive, got {}", self.lambda);
        if let Some(mu) = self.mu {
            ensure_contract!(mu >= 1.0, "mu must be at least 1, got {mu}");
        }
        ensure_contract!(
            self.mu.is_some() || self.mu_auto,
            "pass --mu or --mu-auto to bound the statistical dimension"
        );
        ensure_contract!(
            self.samples_const > 0.0,
            "samples-const must be positive, got {}",
            self.samples_const
        );
        ensure_contract!(self.trials >= 1, "need at least one trial");
        if let Some(t) = self.threads {
            ensure_contract!(t >= 1, "threads must be at least 1");
        }
        if let Some(q) = self.q {
            ensure_contract!(q >= 1, "q must be at least 1");
        }
        Ok(())
    }
}

/// Outcome of a single seeded run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialResult {
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sandwich_pass: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_dev: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rmse: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error_rate: Option<f64>,
    pub seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageTiming {
    pub stage: String,
    pub seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchRow {
    pub nnz: usize,
    pub stage: String,
    pub seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub command: String,
    pub library_version: String,
    pub config: ExperimentConfig,
    /// Statistical-dimension bound actually used (resolved from --mu-auto
    /// when requested).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mu: Option<f64>,
    /// Rows drawn per level.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub s: Option<usize>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub trials: Vec<TrialResult>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rmse: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub exact_rmse: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error_rate: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub exact_error_rate: Option<f64>,
    pub timings: Vec<StageTiming>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub bench: Vec<BenchRow>,
}

/// Rejects any null in the serialized tree. serde_json writes NaN and the
/// infinities as null, so this doubles as the all-numbers-finite check.
fn reject_nulls(value: &Value, path: &str) -> Result<()> {
    match value {
        Value::Null => Err(Error::numerical(format!(
            "report field {path} is null (non-finite number?)"
        ))),
        Value::Array(items) => {
            for (i, item) in items.iter().enumerate() {
                reject_nulls(item, &format!("{path}[{i}]"))?;
            }
            Ok(())
        }
        Value::Object(map) => {
            for (k, v) in map {
                reject_nulls(v, &format!("{path}.{k}"))?;
            }
            Ok(())
        }
        _ => Ok(()),
    }
}

impl Report {
    pub fn validate(&self) -> Result<()> {
        let value = serde_json::to_value(self)
            .map_err(|e| Error::numerical(format!("report serialization failed: {e}")))?;
        reject_nulls(&value, "$")
    }

    pub fn emit(&self) -> Result<String> {
        self.validate()?;
        serde_json::to_string_pretty(self)
            .map_err(|e| Error::numerical(format!("report serialization failed: {e}")))
    }

    pub fn parse(text: &str) -> Result<Report> {
        let report: Report = serde_json::from_str(text)
            .map_err(|e| Error::data(format!("report parse failed: {e}")))?;
        report.validate()?;
        Ok(report)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn sample_config() -> ExperimentConfig {
        ExperimentConfig {
            kernel: "polynomial".into(),
            q: Some(2),
            eps: 0.5,
            lambda: 1.0,
            mu: Some(4.0),
            mu_auto: false,
            samples_const: 4.0,
            seed: 1,
            trials: 2,
            threads: None,
            verify: true,
            format: "csv".into(),
            label_column: 0,
            preset: "default".into(),
            data: vec!["train.csv".into()],
            test_data: None,
            classify: false,
            nnz_grid: vec![],
            runs: None,
            out: None,
        }
    }

    fn sample_report() -> Report {
        Report {
            command: "sample".into(),
            library_version: "0.1.0".into(),
            config: sample_config(),
            mu: Some(4.0),
            s: Some(128),
            trials: vec![
                TrialResult {
                    seed: 1,
                    sandwich_pass: Some(true),
                    max_dev: Some(0.31),
                    rmse: None,
                    error_rate: None,
                    seconds: 0.25,
                },
                TrialResult {
                    seed: 2,
                    sandwich_pass: Some(false),
                    max_dev: Some(0.61),
                    rmse: None,
                    error_rate: None,
                    seconds: 0.24,
                },
            ],
            rmse: None,
            exact_rmse: None,
            error_rate: None,
            exact_error_rate: None,
            timings: vec![
                StageTiming { stage: "ingest".into(), seconds: 0.001 },
                StageTiming { stage: "sample".into(), seconds: 0.49 },
            ],
            bench: vec![BenchRow { nnz: 100, stage: "sample".into(), seconds: 0.12 }],
        }
    }

    #[test]
    fn reports_round_trip_unchanged() {
        let report = sample_report();
        let text = report.emit().unwrap();
        let back = Report::parse(&text).unwrap();
        assert_eq!(back, report);
        // a second emit of the parsed value is byte-identical
        assert_eq!(back.emit().unwrap(), text);
    }

    #[test]
    fn non_finite_numbers_are_rejected() {
        let mut report = sample_report();
        report.rmse = Some(f64::NAN);
        let err = report.emit().unwrap_err();
        assert!(err.to_string().contains("rmse"), "{err}");
        report.rmse = None;
        report.trials[0].max_dev = Some(f64::INFINITY);
        let err = report.emit().unwrap_err();
        assert!(err.to_string().contains("trials[0].max_dev"), "{err}");
    }

    #[test]
    fn config_validation_catches_bad_ranges() {
        let mut cfg = sample_config();
        cfg.validate().unwrap();
        cfg.eps = 1.5;
        assert!(cfg.validate().is_err());
        cfg.eps = 0.5;
        cfg.lambda = 0.0;
        assert!(cfg.validate().is_err());
        cfg.lambda = 1.0;
        cfg.mu = None;
        cfg.mu_auto = false;
        assert!(cfg.validate().is_err());
        cfg.mu_auto = true;
        cfg.validate().unwrap();
        cfg.trials = 0;
        assert!(cfg.validate().is_err());
    }

    /// Structural JSON Schema checker covering the subset the shipped schema
    /// uses: type, properties, required, additionalProperties and items.
    fn check_schema(schema: &Value, instance: &Value, path: &str) -> std::result::Result<(), String> {
        if let Some(ty) = schema.get("type").and_then(Value::as_str) {
            let ok = match ty {
                "object" => instance.is_object(),
                "array" => instance.is_array(),
                "string" => instance.is_string(),
                "number" => instance.is_number(),
                "integer" => instance.as_i64().is_some() || instance.as_u64().is_some(),
                "boolean" => instance.is_boolean(),
                other => return Err(format!("{path}: unsupported schema type {other}")),
            };
            if !ok {
                return Err(format!("{path}: expected {ty}, got {instance}"));
            }
        }
        if let Some(required) = schema.get("required").and_then(Value::as_array) {
            for key in required {
                let key = key.as_str().expect("required entries are strings");
                if instance.get(key).is_none() {
                    return Err(format!("{path}: missing required field {key}"));
                }
            }
        }
        if let Some(props) = schema.get("properties").and_then(Value::as_object) {
            if let Some(obj) = instance.as_object() {
                let closed = schema
                    .get("additionalProperties")
                    .and_then(Value::as_bool)
                    .map(|b| !b)
                    .unwrap_or(false);
                for (key, value) in obj {
                    match props.get(key) {
                        Some(sub) => check_schema(sub, value, &format!("{path}.{key}"))?,
                        None if closed => {
                            return Err(format!("{path}: unexpected field {key}"))
                        }
                        None => {}
                    }
                }
            }
        }
        if let Some(items) = schema.get("items") {
            if let Some(arr) = instance.as_array() {
                for (i, item) in arr.iter().enumerate() {
                    check_schema(items, item, &format!("{path}[{i}]"))?;
                }
            }
        }
        Ok(())
    }

    #[test]
    fn emitted_reports_match_the_shipped_schema() {
        let schema_path = concat!(
            env!("CARGO_MANIFEST_DIR"),
            "/../../docs/report-schema.json"
        );
        let schema: Value =
            serde_json::from_str(&std::fs::read_to_string(schema_path).unwrap()).unwrap();
        let full = serde_json::to_value(sample_report()).unwrap();
        check_schema(&schema, &full, "$").unwrap();

        // minimal report: every optional field absent
        let minimal = Report {
            command: "sample".into(),
            library_version: "0.1.0".into(),
            config: sample_config(),
            mu: None,
            s: None,
            trials: vec![],
            rmse: None,
            exact_rmse: None,
            error_rate: None,
            exact_error_rate: None,
            timings: vec![],
            bench: vec![],
        };
        let minimal = serde_json::to_value(&minimal).unwrap();
        check_schema(&schema, &minimal, "$").unwrap();

        // the checker itself rejects shape violations
        let mut broken = full.clone();
        broken["s"] = Value::String("many".into());
        assert!(check_schema(&schema, &broken, "$").is_err());
        broken = full.clone();
        broken.as_object_mut().unwrap().remove("command");
        assert!(check_schema(&schema, &broken, "$").is_err());
    }
}
