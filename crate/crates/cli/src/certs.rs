//! Re-validation of every certificate, identity and deduction trace found in
//! an emitted JSON document.

use serde::Serialize;
use serde_json::Value;

use ordlim::chaingroup::HnnElement;
use ordlim::cone::{ConeCertificate, SignResult, SignValue};
use ordlim::convexity::{replay_trace, DeductionTrace};
use ordlim::orderprobes::{hnn_recheck, recheck, SignOracle};
use ordlim::presentations::ChainSpec;
use ordlim::{Error, Word};

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Finding {
    /// JSON pointer to the checked object.
    pub at: String,
    pub kind: String,
    pub ok: bool,
    #[serde(skip_serializing_if = "String::is_empty")]
    pub detail: String,
}

/// Walks `doc`. Sign claims and identities pass when any oracle in
/// `oracles` replays them; traces need `spec`.
pub fn check_document(doc: &Value, oracles: &[&dyn SignOracle], spec: Option<&ChainSpec>) -> Vec<Finding> {
    let mut out = Vec::new();
    walk(doc, String::new(), oracles, spec, &mut out);
    out
}

fn walk(v: &Value, at: String, oracles: &[&dyn SignOracle], spec: Option<&ChainSpec>, out: &mut Vec<Finding>) {
    match v {
        Value::Object(map) => {
            if let Some(f) = inspect(map, &at, oracles, spec) {
                out.push(f);
            }
            for (k, child) in map {
                walk(
                    child,
                    format!("{at}/{}", k.replace('~', "~0").replace('/', "~1")),
                    oracles,
                    spec,
                    out,
                );
            }
        }
        Value::Array(items) => {
            for (i, child) in items.iter().enumerate() {
                walk(child, format!("{at}/{i}"), oracles, spec, out);
            }
        }
        _ => {}
    }
}

fn inspect(
    map: &serde_json::Map<String, Value>,
    at: &str,
    oracles: &[&dyn SignOracle],
    spec: Option<&ChainSpec>,
) -> Option<Finding> {
    let finding = |kind: &str, res: Result<bool, String>| {
        let (ok, detail) = match res {
            Ok(true) => (true, String::new()),
            Ok(false) => (false, "does not replay".to_string()),
            Err(e) => (false, e),
        };
        Some(Finding {
            at: if at.is_empty() { "/".into() } else { at.to_string() },
            kind: kind.into(),
            ok,
            detail,
        })
    };
    let any = |f: &dyn Fn(&dyn SignOracle) -> Result<bool, Error>| -> Result<bool, String> {
        let mut last = Ok(false);
        for o in oracles {
            match f(*o) {
                Ok(true) => return Ok(true),
                Ok(false) => {}
                Err(e) => last = Err(e.to_string()),
            }
        }
        last
    };

    // A sign claim either inline or under "sign".
    let claim = match (map.get("value"), map.get("certificate"), map.get("sign")) {
        (Some(value), Some(cert), _) => Some((value, cert)),
        (_, _, Some(Value::Object(s))) => s.get("value").zip(s.get("certificate")),
        _ => None,
    };
    if let (Some(element), Some((value, cert))) = (map.get("element"), claim) {
        let value: SignValue = serde_json::from_value(value.clone()).ok()?;
        if !matches!(value, SignValue::Positive | SignValue::Negative) {
            return None;
        }
        let certificate: Option<ConeCertificate> = match serde_json::from_value(cert.clone()) {
            Ok(c) => c,
            Err(e) => return finding("sign", Err(format!("unreadable certificate: {e}"))),
        };
        let r = SignResult {
            value,
            certificate,
            budget_used: 0,
        };
        if let Value::String(s) = element {
            let w = match Word::parse(s) {
                Ok(w) => w,
                Err(e) => return finding("sign", Err(e.to_string())),
            };
            return finding("sign", any(&|o| recheck(o, &w, &r)));
        }
        let x: HnnElement = match serde_json::from_value(element.clone()) {
            Ok(x) => x,
            Err(e) => return finding("hnn-sign", Err(format!("unreadable element: {e}"))),
        };
        return finding("hnn-sign", any(&|o| hnn_recheck(o, &x, &r)));
    }

    if map.get("kind").and_then(Value::as_str) == Some("identity") {
        let lhs = map.get("lhs").and_then(Value::as_str).map(Word::parse);
        let rhs = map.get("rhs").and_then(Value::as_str).map(Word::parse);
        return match (lhs, rhs) {
            (Some(Ok(a)), Some(Ok(b))) => finding("identity", any(&|o| o.words().equal(&a, &b))),
            _ => finding("identity", Err("unreadable identity".into())),
        };
    }

    if map.contains_key("seed") && map.get("steps").is_some_and(Value::is_array) {
        let trace: DeductionTrace = match serde_json::from_value(Value::Object(map.clone())) {
            Ok(t) => t,
            Err(_) => return None,
        };
        let Some(spec) = spec else {
            return finding("trace", Err("traces replay only against a chain spec".into()));
        };
        return match replay_trace(spec, &trace) {
            Ok(problems) if problems.is_empty() => finding("trace", Ok(true)),
            Ok(problems) => finding("trace", Err(problems.join("; "))),
            Err(e) => finding("trace", Err(e.to_string())),
        };
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;
    use ordlim::cone::{Cone, DEFAULT_BUDGET};
    use serde_json::json;

    #[test]
    fn finds_nested_claims() {
        let spec = ChainSpec::constant(2, 3).unwrap();
        let cone = Cone::new(spec.clone()).unwrap();
        let doc = json!({
            "a": {"element": "g(-1)^-1 g(0)", "value": "positive", "certificate": ["a(0,1)"]},
            "list": [
                {"element": "g(0)", "sign": {"value": "negative", "certificate": ["a(0,0)"]}},
                {"kind": "identity", "lhs": "g(0)^2", "rhs": "g(1)^3"},
                {"element": "g(0)", "value": "zero", "certificate": null}
            ]
        });
        let found = check_document(&doc, &[&cone], Some(&spec));
        let kinds: Vec<(&str, &str, bool)> = found.iter().map(|f| (f.at.as_str(), f.kind.as_str(), f.ok)).collect();
        assert_eq!(
            kinds,
            [
                ("/a", "sign", true),
                ("/list/0", "sign", false),
                ("/list/1", "identity", true)
            ]
        );
    }

    #[test]
    fn any_oracle_may_replay() {
        let c23 = Cone::new(ChainSpec::constant(2, 3).unwrap()).unwrap();
        let c22 = Cone::new(ChainSpec::constant(2, 2).unwrap()).unwrap();
        let w = Word::parse("g(1)^2 g(0)^-1").unwrap();
        let r = c22
            .sign(&ordlim::chaingroup::Element::new(w.clone()), DEFAULT_BUDGET)
            .unwrap();
        let doc = json!({"element": w.to_string(), "value": r.value, "certificate": r.certificate});
        assert!(!check_document(&doc, &[&c23], None)[0].ok);
        assert!(check_document(&doc, &[&c23, &c22], None)[0].ok);
    }
}
