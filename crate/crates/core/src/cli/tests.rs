use super::config::{GridConfig, OutputFormat, RunConfig};
use super::CliError;
use std::path::Path;

#[test]
fn shipped_configs_are_valid() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("configs");
    let mut count = 0;
    for entry in std::fs::read_dir(dir).unwrap() {
        let path = entry.unwrap().path();
        let config = RunConfig::load(&path).unwrap();
        config.validate().unwrap();
        config.data_set().unwrap();
        count += 1;
    }
    assert!(count >= 3);
}

#[test]
fn grid_flag_parsing() {
    assert_eq!(GridConfig::parse("16x32").unwrap(), GridConfig { n_theta: 16, n_phi: 32, band_limit: None });
    assert!(matches!(GridConfig::parse("16*32"), Err(CliError::Config(_))));
    assert!(matches!(GridConfig::parse("x32"), Err(CliError::Config(_))));
}

#[test]
fn hashes_ignore_output_settings_only() {
    let text = r#"{ "preset": { "name": "flat" }, "energy": { "radii": [1.0] } }"#;
    let a: RunConfig = serde_json::from_str(text).unwrap();
    let mut b = a.clone();
    b.output.format = OutputFormat::Json;
    b.output.dir = Some("elsewhere".into());
    assert_eq!(a.hash(), b.hash());
    assert_eq!(a.setup_hash(), b.setup_hash());
    b.energy.as_mut().unwrap().radii.push(2.0);
    assert_ne!(a.hash(), b.hash());
    assert_eq!(a.setup_hash(), b.setup_hash());
    b.solver.max_iterations = 5;
    assert_ne!(a.setup_hash(), b.setup_hash());
}

#[test]
fn validation_rejects_inconsistent_settings() {
    let base: RunConfig = serde_json::from_str(r#"{ "preset": { "name": "flat" } }"#).unwrap();
    let mut c = base.clone();
    c.grid = GridConfig { n_theta: 8, n_phi: 16, band_limit: None };
    // Band 4 on this grid cannot host the default solve band 8.
    assert!(c.validate().is_err());
    c.solver.band_limit = 4;
    assert!(c.validate().is_ok());
    let mut c = base.clone();
    c.grid.band_limit = Some(40);
    assert!(c.validate().is_err());
    let mut c = base;
    c.finite_difference_step = Some(0.0);
    assert!(c.validate().is_err());
}
