//! Versioned, deterministic check reports.

use std::collections::BTreeMap;

use serde::ser::Serializer;
use serde::Serialize;
use serde_json::Value;
use sha2::{Digest, Sha256};

pub const REPORT_FORMAT: &str = "qvlab-report/1";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Pass,
    Fail,
    Diagnostic,
}

impl Verdict {
    pub fn from_bool(ok: bool) -> Self {
        if ok {
            Verdict::Pass
        } else {
            Verdict::Fail
        }
    }
}

/// A float that serializes non-finite values as the strings
/// `"inf"`, `"-inf"` and `"nan"`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Num(pub f64);

impl Serialize for Num {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let v = self.0;
        if v.is_finite() {
            s.serialize_f64(v)
        } else if v.is_nan() {
            s.serialize_str("nan")
        } else if v > 0.0 {
            s.serialize_str("inf")
        } else {
            s.serialize_str("-inf")
        }
    }
}

pub fn num_value(v: f64) -> Value {
    serde_json::to_value(Num(v)).expect("numbers serialize")
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Quantity {
    pub name: String,
    pub value: Num,
    pub resolution: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Provenance {
    pub seed: Option<u64>,
    pub version: String,
    pub config_hash: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckReport {
    pub format: String,
    pub check: String,
    pub field: String,
    pub parameters: BTreeMap<String, Value>,
    pub quantities: Vec<Quantity>,
    pub verdict: Verdict,
    pub notes: Vec<String>,
    pub provenance: Provenance,
}

impl CheckReport {
    pub fn new(check: &str, field: &str) -> Self {
        Self {
            format: REPORT_FORMAT.into(),
            check: check.into(),
            field: field.into(),
            parameters: BTreeMap::new(),
            quantities: Vec::new(),
            verdict: Verdict::Diagnostic,
            notes: Vec::new(),
            provenance: Provenance {
                seed: None,
                version: env!("CARGO_PKG_VERSION").into(),
                config_hash: String::new(),
            },
        }
    }

    pub fn param(mut self, key: &str, value: impl Serialize) -> Self {
        let v = serde_json::to_value(value).unwrap_or(Value::Null);
        self.parameters.insert(key.into(), v);
        self
    }

    pub fn param_num(self, key: &str, value: f64) -> Self {
        self.param(key, Num(value))
    }

    pub fn qty(mut self, name: &str, value: f64, resolution: &str) -> Self {
        self.quantities.push(Quantity {
            name: name.into(),
            value: Num(value),
            resolution: resolution.into(),
        });
        self
    }

    pub fn note(mut self, text: impl Into<String>) -> Self {
        self.notes.push(text.into());
        self
    }

    pub fn verdict(mut self, v: Verdict) -> Self {
        self.verdict = v;
        self
    }

    pub fn seed(mut self, seed: u64) -> Self {
        self.provenance.seed = Some(seed);
        self
    }

    /// Stamps the SHA-256 of the canonical JSON of (check, field,
    /// parameters, seed). Call after every parameter is set.
    pub fn finish(mut self) -> Self {
        let canon = serde_json::json!({
            "check": self.check,
            "field": self.field,
            "parameters": self.parameters,
            "seed": self.provenance.seed,
        });
        let digest = Sha256::digest(canon.to_string().as_bytes());
        self.provenance.config_hash = hex::encode(digest);
        self
    }

    pub fn get(&self, name: &str) -> Option<f64> {
        self.quantities
            .iter()
            .find(|q| q.name == name)
            .map(|q| q.value.0)
    }

    pub fn passed(&self) -> bool {
        self.verdict != Verdict::Fail
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("reports serialize") + "\n"
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn non_finite_numbers_become_strings() {
        let r = CheckReport::new("demo", "trivial:2")
            .qty("a", f64::INFINITY, "ref")
            .qty("b", f64::NAN, "ref")
            .qty("c", 1.5, "ref")
            .finish();
        let v: Value = serde_json::from_str(&r.to_json()).unwrap();
        assert_eq!(v["quantities"][0]["value"], "inf");
        assert_eq!(v["quantities"][1]["value"], "nan");
        assert_eq!(v["quantities"][2]["value"], 1.5);
        assert_eq!(v["format"], REPORT_FORMAT);
    }

    #[test]
    fn config_hash_tracks_parameters() {
        let a = CheckReport::new("c", "f").param_num("tau", 1.0).finish();
        let b = CheckReport::new("c", "f").param_num("tau", 1.0).finish();
        let c = CheckReport::new("c", "f").param_num("tau", 2.0).finish();
        assert_eq!(a.provenance.config_hash, b.provenance.config_hash);
        assert_ne!(a.provenance.config_hash, c.provenance.config_hash);
        assert_eq!(a.provenance.config_hash.len(), 64);
    }
}
