mod common;

use common::{json, scenario_path, schema, spt, validate};
use serde_json::{json, Value};

fn assert_valid(name: &str, doc: &Value) {
    let errors = validate(&schema(name), doc);
    assert!(errors.is_empty(), "{name}: {errors:#?}");
}

#[test]
fn validator_rejects_what_it_should() {
    let s = schema("solve");
    let mut doc = json(&spt(&["solve", "--n", "320", "--m", "1000", "--eps", "1e-5"]));
    assert!(validate(&s, &doc).is_empty());
    doc["extra"] = json!(1);
    doc["iterations"] = json!(-1);
    doc["method"] = json!("newton");
    doc.as_object_mut().unwrap().remove("flops");
    let errors = validate(&s, &doc);
    assert_eq!(errors.len(), 4, "{errors:#?}");
}

#[test]
fn solve_and_sweep_outputs_validate() {
    for method in ["ear", "bisection", "fixed_point", "reference"] {
        let doc = json(&spt(&["solve", "--n", "320", "--m", "1000", "--eps", "1e-5", "--method", method]));
        assert_valid("solve", &doc);
    }
    let doc = json(&spt(&["sweep", "--n", "50,500", "--m", "100,4000", "--eps", "1e-9,0.4"]));
    assert_eq!(doc["points"].as_array().unwrap().len(), 8);
    assert_valid("sweep", &doc);
}

#[test]
fn compare_and_analyze_outputs_validate() {
    assert_valid("compare", &json(&spt(&["compare"])));
    assert_valid("analyze", &json(&spt(&["analyze", "--m", "1000", "--eps", "1e-5"])));
    assert_valid("analyze", &json(&spt(&["analyze", "--m", "1000", "--eps", "1e-5", "--n", "320"])));
}

#[test]
fn app_outputs_validate() {
    for name in ["wsr", "power_min", "ee_max"] {
        let path = scenario_path(name);
        assert_valid("app", &json(&spt(&["app", "--scenario", &path])));
        assert_valid("app", &json(&spt(&["app", "--scenario", &path, "--integer"])));
        let with = json(&spt(&["app", "--scenario", &path, "--oracle", "--grid-steps", "100"]));
        assert_valid("app", &with);
        assert!(with.get("mm").is_some());
    }
}

#[test]
fn shipped_scenarios_validate() {
    for name in ["wsr", "power_min", "ee_max"] {
        let text = std::fs::read_to_string(scenario_path(name)).unwrap();
        assert_valid("scenario", &serde_json::from_str(&text).unwrap());
    }
}
