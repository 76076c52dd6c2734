use std::collections::BTreeMap;
use std::path::PathBuf;

use polymet::report::{CheckRecord, Provenance, Table, SCHEMA};
use polymet::{parse_report, to_canonical_json, SuiteReport};
use serde_json::Value;

fn golden_path() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/golden/report.json")
}

fn synthetic() -> SuiteReport {
    let values = |kv: &[(&str, f64)]| kv.iter().map(|(k, v)| (k.to_string(), *v)).collect::<BTreeMap<_, _>>();
    SuiteReport {
        schema: SCHEMA.into(),
        suite: "scales".into(),
        generated_at: "2000-01-01T00:00:00Z".into(),
        overall_pass: false,
        checks: vec![
            CheckRecord {
                name: "scales.qi_identity".into(),
                values: values(&[("C", 1.0), ("c", 0.0), ("pairs", 120.0)]),
                tolerance: Some(1e-9),
                pass: true,
                error: None,
            },
            CheckRecord {
                name: "scales.sobolev_closed_form".into(),
                values: values(&[("norm", 2.0 * std::f64::consts::PI), ("error", 1.0 / 3.0)]),
                tolerance: Some(1e-8),
                pass: false,
                error: None,
            },
            CheckRecord {
                name: "scales.warped_trend".into(),
                values: BTreeMap::new(),
                tolerance: None,
                pass: false,
                error: Some("chart mismatch".into()),
            },
        ],
        tables: vec![Table {
            name: "scales.warped_end".into(),
            columns: vec!["a".into(), "T".into(), "C".into()],
            rows: vec![vec![0.0, 5.0, 1.0], vec![0.05, 10.0, 1.6487212707001282]],
        }],
        provenance: Provenance {
            config: "suite = scales\nseed = 42\n".into(),
            seed: Some(42),
            resolutions: [("scales.torus".to_string(), vec![32, 32])].into_iter().collect(),
            version: "0.0.0".into(),
        },
    }
}

#[test]
fn canonical_json_matches_golden_file() {
    let text = to_canonical_json(&synthetic());
    if std::env::var_os("POLYMET_UPDATE_GOLDEN").is_some() {
        std::fs::write(golden_path(), &text).unwrap();
    }
    let golden = std::fs::read_to_string(golden_path()).expect("golden report present");
    assert_eq!(text, golden, "report layout changed; bump the schema string");
}

#[test]
fn golden_file_parses_back_exactly() {
    let golden = std::fs::read_to_string(golden_path()).unwrap();
    assert_eq!(parse_report(&golden).unwrap(), synthetic());
}

fn shape(v: &Value) -> Value {
    match v {
        Value::Object(m) => Value::Object(m.iter().map(|(k, v)| (k.clone(), shape(v))).collect()),
        Value::Array(a) => Value::Array(a.first().map(shape).into_iter().collect()),
        Value::Number(_) => Value::String("number".into()),
        Value::String(_) => Value::String("string".into()),
        Value::Bool(_) => Value::String("bool".into()),
        Value::Null => Value::Null,
    }
}

#[test]
fn live_report_has_the_golden_layout() {
    let cfg = polymet::SuiteConfig::defaults(polymet::Suite::Geodesic, None);
    let live: Value = serde_json::from_str(&to_canonical_json(&polymet::run_suite(&cfg).unwrap())).unwrap();
    let golden: Value = serde_json::from_str(&std::fs::read_to_string(golden_path()).unwrap()).unwrap();
    let top = |v: &Value| v.as_object().unwrap().keys().cloned().collect::<Vec<_>>();
    assert_eq!(top(&live), top(&golden));
    let check_keys = |v: &Value| v["checks"][0].as_object().unwrap().keys().cloned().collect::<Vec<_>>();
    assert_eq!(check_keys(&live), check_keys(&golden));
    assert_eq!(shape(&live["provenance"]).as_object().unwrap().len(), 4);
    assert_eq!(live["schema"], golden["schema"]);
}
