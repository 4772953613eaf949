use auvdiff::error::Error;
use auvdiff::harness::{emit_csv, RunConfig, KEYS};

#[test]
fn file_round_trip_and_errors() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("run.cfg");
    std::fs::write(&path, "").unwrap();
    assert_eq!(RunConfig::load(&path).unwrap(), RunConfig::default());

    let mut cfg = RunConfig::default();
    cfg.set("sea", "ves").unwrap();
    cfg.set("track_depth", "0:10,5:12.5").unwrap();
    cfg.set("w_energy", "0.125").unwrap();
    std::fs::write(&path, cfg.emit()).unwrap();
    assert_eq!(RunConfig::load(&path).unwrap(), cfg);
    assert_eq!(cfg.emit().lines().count(), KEYS.len());

    std::fs::write(&path, "seed = 1\nfoo = 2\n").unwrap();
    match RunConfig::load(&path) {
        Err(Error::Config { key, .. }) => assert_eq!(key, "foo"),
        other => panic!("{other:?}"),
    }
    std::fs::write(&path, "batch = many\n").unwrap();
    let err = RunConfig::load(&path).unwrap_err();
    assert_eq!(err.exit_code(), 2);
    assert!(err.to_string().contains("batch"));

    let missing = RunConfig::load(&dir.path().join("missing.cfg")).unwrap_err();
    assert_eq!(missing.exit_code(), 2);
}

#[test]
fn csv_output_format() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("t.csv");
    emit_csv(&path, &["a", "b"], &[vec!["1".into(), "0.5".into()], vec!["2".into(), "-1.25".into()]]).unwrap();
    assert_eq!(std::fs::read_to_string(&path).unwrap(), "a,b\n1,0.5\n2,-1.25\n");
}
