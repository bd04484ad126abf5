//! Default-config sweep tables are checked into `tests/golden/`. Set
//! `UPDATE_GOLDEN=1` to rewrite them after an intentional change.

use std::path::PathBuf;

use flmarket_core::sweep::{kappa_csv, qmin_csv, sweep_kappa, sweep_qmin, SweepConfig};

fn golden_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/golden").join(name)
}

fn check(name: &str, actual: &str) {
    let path = golden_path(name);
    if std::env::var_os("UPDATE_GOLDEN").is_some() {
        std::fs::write(&path, actual).unwrap();
    }
    let expected = std::fs::read_to_string(&path).unwrap_or_else(|e| panic!("reading {}: {e}", path.display()));
    assert!(expected == actual, "{name} differs from the golden file");
}

#[test]
fn qmin_default_table() {
    let csv = qmin_csv(&sweep_qmin(&SweepConfig::default()).unwrap());
    assert_eq!(csv, qmin_csv(&sweep_qmin(&SweepConfig::default()).unwrap()));
    check("qmin_default.csv", &csv);
}

#[test]
fn kappa_default_table() {
    let csv = kappa_csv(&sweep_kappa(&SweepConfig::default()).unwrap());
    assert_eq!(csv, kappa_csv(&sweep_kappa(&SweepConfig::default()).unwrap()));
    check("kappa_default.csv", &csv);
}
