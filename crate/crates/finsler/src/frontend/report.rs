//! Report output: stable JSON (the machine contract, validated against the
//! checked-in schema) and an aligned human table.

use crate::verify::{CheckStatus, ConnectionDiffs, ResidualReport};

/// The JSON schema every emitted report satisfies.
pub const REPORT_SCHEMA: &str = include_str!("../../schema/report.schema.json");

/// Serialize a report to its canonical JSON form: pretty-printed with
/// object keys in sorted order (guaranteed by field declaration order).
pub fn report_to_json(report: &ResidualReport) -> String {
    let mut s = serde_json::to_string_pretty(report).expect("report serializes");
    s.push('\n');
    s
}

/// Render a report as an aligned table. Not a stable interface; the JSON
/// form is the machine contract.
pub fn report_to_table(report: &ResidualReport) -> String {
    let mut out = String::new();
    out.push_str(&format!(
        "metric: {}   points: {}   seed: {}\n",
        report.metric, report.n_points, report.seed
    ));
    let id_width = report
        .checks
        .iter()
        .map(|c| c.id.len())
        .max()
        .unwrap_or(8)
        .max(8);
    out.push_str(&format!(
        "{:<width$}  {:>12}  {:>9}  {:>7}  anchor\n",
        "check",
        "residual",
        "tol",
        "status",
        width = id_width
    ));
    for c in &report.checks {
        let residual = match (c.residual, c.witness_value) {
            (_, Some(w)) => format!("{w:.3e}"),
            (Some(r), None) => format!("{r:.3e}"),
            (None, None) => "-".to_string(),
        };
        let status = match c.status {
            CheckStatus::Pass => "pass",
            CheckStatus::Fail => "FAIL",
            CheckStatus::Error => "error",
            CheckStatus::Skipped => "skip",
        };
        out.push_str(&format!(
            "{:<width$}  {:>12}  {:>9.1e}  {:>7}  {}\n",
            c.id,
            residual,
            c.tolerance,
            status,
            c.anchor,
            width = id_width
        ));
    }
    out.push_str(&format!(
        "pass {}  fail {}  error {}  skipped {}\n",
        report.counts.pass, report.counts.fail, report.counts.error, report.counts.skipped
    ));
    out
}

pub fn diffs_to_table(diffs: &ConnectionDiffs) -> String {
    let mut out = String::new();
    for (label, r) in &diffs.pairs {
        out.push_str(&format!("{label:<22} residual {r:.3e}\n"));
    }
    out
}

/// Minimal JSON-schema validator covering the subset the report schema
/// uses: type, properties, required, additionalProperties, items, enum,
/// and anyOf over types.
pub fn validate_against_schema(
    schema: &serde_json::Value,
    value: &serde_json::Value,
) -> Result<(), String> {
    fn type_matches(ty: &str, v: &serde_json::Value) -> bool {
        match ty {
            "object" => v.is_object(),
            "array" => v.is_array(),
            "string" => v.is_string(),
            "number" => v.is_number(),
            "integer" => v.is_u64() || v.is_i64(),
            "boolean" => v.is_boolean(),
            "null" => v.is_null(),
            _ => false,
        }
    }
    fn go(schema: &serde_json::Value, v: &serde_json::Value, path: &str) -> Result<(), String> {
        if let Some(any) = schema.get("anyOf").and_then(|a| a.as_array()) {
            if any.iter().any(|s| go(s, v, path).is_ok()) {
                return Ok(());
            }
            return Err(format!("{path}: no anyOf branch matched"));
        }
        if let Some(ty) = schema.get("type").and_then(|t| t.as_str()) {
            if !type_matches(ty, v) {
                return Err(format!("{path}: expected {ty}"));
            }
        }
        if let Some(allowed) = schema.get("enum").and_then(|e| e.as_array()) {
            if !allowed.contains(v) {
                return Err(format!("{path}: value not in enum"));
            }
        }
        if let Some(props) = schema.get("properties").and_then(|p| p.as_object()) {
            let obj = v
                .as_object()
                .ok_or_else(|| format!("{path}: expected object"))?;
            if let Some(req) = schema.get("required").and_then(|r| r.as_array()) {
                for key in req {
                    let key = key.as_str().unwrap_or_default();
                    if !obj.contains_key(key) {
                        return Err(format!("{path}: missing required key {key}"));
                    }
                }
            }
            let closed = schema
                .get("additionalProperties")
                .map(|a| a == &serde_json::Value::Bool(false))
                .unwrap_or(false);
            for (key, val) in obj {
                match props.get(key) {
                    Some(sub) => go(sub, val, &format!("{path}/{key}"))?,
                    None if closed => return Err(format!("{path}: unexpected key {key}")),
                    None => {}
                }
            }
        }
        if let Some(items) = schema.get("items") {
            if let Some(arr) = v.as_array() {
                for (i, item) in arr.iter().enumerate() {
                    go(items, item, &format!("{path}[{i}]"))?;
                }
            }
        }
        Ok(())
    }
    go(schema, value, "$")
}

/// Validate a rendered report against the checked-in schema.
pub fn validate_report_json(json: &str) -> Result<(), String> {
    let schema: serde_json::Value =
        serde_json::from_str(REPORT_SCHEMA).map_err(|e| format!("schema unreadable: {e}"))?;
    let value: serde_json::Value =
        serde_json::from_str(json).map_err(|e| format!("report unreadable: {e}"))?;
    validate_against_schema(&schema, &value)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frontend::sampling::sample_points;
    use crate::frontend::zoo;
    use crate::verify::{run_suite, MetricTraits, Tolerances};

    fn sample_report() -> ResidualReport {
        let m = zoo::builtin_metric("euclid", &[], 2).unwrap();
        let traits_ = MetricTraits {
            riemannian: true,
            locally_minkowski: true,
            witness_point: None,
        };
        let points = sample_points(&m, 3, 5);
        run_suite(m, "euclid", &traits_, &points, 5, &Tolerances::default())
    }

    #[test]
    fn json_is_schema_valid_and_key_sorted() {
        let report = sample_report();
        let json = report_to_json(&report);
        validate_report_json(&json).unwrap();
        let value: serde_json::Value = serde_json::from_str(&json).unwrap();
        let keys: Vec<&str> = value
            .as_object()
            .unwrap()
            .keys()
            .map(|s| s.as_str())
            .collect();
        let mut sorted = keys.clone();
        sorted.sort_unstable();
        assert_eq!(keys, sorted, "top-level keys must be sorted");
        let first_check = &value["checks"][0];
        let ck: Vec<&str> = first_check
            .as_object()
            .unwrap()
            .keys()
            .map(|s| s.as_str())
            .collect();
        let mut csorted = ck.clone();
        csorted.sort_unstable();
        assert_eq!(ck, csorted, "check keys must be sorted");
    }

    #[test]
    fn serialization_is_deterministic() {
        let a = report_to_json(&sample_report());
        let b = report_to_json(&sample_report());
        assert_eq!(a, b);
    }

    #[test]
    fn table_renders() {
        let t = report_to_table(&sample_report());
        assert!(t.contains("spray.euler_lagrange"));
        assert!(t.contains("pass"));
    }

    #[test]
    fn validator_rejects_malformed() {
        assert!(validate_report_json("{\"metric\": 3}").is_err());
        assert!(validate_report_json("{}").is_err());
    }
}
