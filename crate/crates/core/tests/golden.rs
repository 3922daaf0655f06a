//! Reports for the committed scenarios must match the stored goldens byte
//! for byte. Set `UPDATE_GOLDENS=1` to rewrite them after an intended change.

use std::path::PathBuf;

use fieldsplit::harness::{report_csv, run_scenario, Method, ScenarioConfig};

fn root() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
}

fn check(name: &str) {
    let cfg = ScenarioConfig::load(&root().join("../../configs").join(format!("{name}.json"))).unwrap();
    let report = run_scenario(&cfg).unwrap();
    let ours = report.method(Method::EenergySplit).unwrap();
    let km = report.method(Method::Kmeans).unwrap();
    assert!(ours.trip_energy_j <= km.trip_energy_j, "{name}");

    let json = serde_json::to_string_pretty(&report).unwrap() + "\n";
    let csv = String::from_utf8(report_csv(&report).unwrap()).unwrap();
    for (ext, text) in [("json", json), ("csv", csv)] {
        let path = root().join("tests/golden").join(format!("{name}.{ext}"));
        if std::env::var_os("UPDATE_GOLDENS").is_some() {
            std::fs::write(&path, &text).unwrap();
            continue;
        }
        let want = std::fs::read_to_string(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
        assert_eq!(text, want, "{} drifted", path.display());
    }
}

#[test]
fn table_100_acres() {
    check("tableII_100ac");
}

#[test]
fn table_140_acres() {
    check("tableII_140ac");
}

#[test]
fn table_200_acres() {
    check("tableII_200ac");
}
