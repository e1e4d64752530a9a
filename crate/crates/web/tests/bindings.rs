use agpk_web::{disk_norm_json, idempotent_json, membership_grid_json};

fn parse(text: &str) -> serde_json::Value {
    serde_json::from_str(text).unwrap()
}

#[test]
fn disk_norm_matches_two_point_formula() {
    // Both points map to 0 except the second, so the norm is |w2| / |z2|.
    let v = parse(&disk_norm_json(r#"{"points": [[0, 0], [0, 0.5]], "targets": [[0, 0], [0.3, 0]]}"#).unwrap());
    let upper = v["upper"].as_f64().unwrap();
    assert!((upper - 0.6).abs() < 2e-4, "{upper}");
    assert_eq!(v["feasible_at_one"], true);
}

#[test]
fn idempotent_reports_are_deterministic() {
    assert_eq!(idempotent_json(2, 4, 10.0, 9).unwrap(), idempotent_json(2, 4, 10.0, 9).unwrap());
    assert!(idempotent_json(5, 3, 10.0, 9).is_err());
}

#[test]
fn disk_grid_is_round() {
    let v = parse(&membership_grid_json(r#"{"preset": "disk"}"#, 21).unwrap());
    let m = v["margins"].as_array().unwrap();
    let at = |r: usize, c: usize| m[r * 21 + c].as_f64().unwrap();
    assert!((at(10, 10) - 1.0).abs() < 1e-12);
    assert!(at(0, 0) < 0.0);
    assert!(membership_grid_json(r#"{"preset": "disk"}"#, 1).is_err());
}
