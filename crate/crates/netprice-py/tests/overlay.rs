use netprice::pricing::HazardSpec;
use netprice_py::{overlay, run_spec_from};
use serde_json::json;

#[test]
fn overlay_merges_nested_keys() {
    let base = json!({"a": 1, "b": {"c": 2, "d": 3}});
    let out = overlay(base, json!({"b": {"d": 9}}), "").unwrap();
    assert_eq!(out, json!({"a": 1, "b": {"c": 2, "d": 9}}));
}

#[test]
fn overlay_names_unknown_keys() {
    let e = overlay(json!({"b": {"c": 2}}), json!({"b": {"x": 1}}), "").unwrap_err();
    assert!(e.contains("b.x"), "{e}");
}

#[test]
fn hazard_accepts_flag_or_table() {
    let on = run_spec_from(json!({"hazard": true, "pi": 0.01})).unwrap();
    assert_eq!(on.hazard, Some(HazardSpec::default()));
    assert_eq!(on.pi, 0.01);
    let custom = run_spec_from(json!({"hazard": {"g_scale": 10.0}})).unwrap();
    assert_eq!(custom.hazard.unwrap().g_scale, 10.0);
    assert!(run_spec_from(json!({"hazard": false})).unwrap().hazard.is_none());
    assert!(run_spec_from(json!({"network": {"n": 300, "alpah": 2.0}})).is_err());
    assert_eq!(run_spec_from(json!({"network": {"n": 300}})).unwrap().network.n, 300);
}
