mod common;

use auvdiff::harness::{train, Variant, EPISODE_COLUMNS};
use common::{read, tiny, tree};

#[test]
fn one_short_episode_logs_a_complete_row() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = tiny(dir.path());
    cfg.episodes = 1;
    let out = train(&cfg).unwrap();
    assert_eq!(out.rows.len(), 1);
    let row = &out.rows[0];
    assert_eq!(row.steps, 10);
    assert!(row.updates > 0);
    for v in [row.reward, row.diffusion_loss, row.critic1_loss, row.critic2_loss, row.actor_loss] {
        assert!(v.is_finite());
    }
    let csv = String::from_utf8(read(&dir.path().join("episodes.csv"))).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], EPISODE_COLUMNS.join(","));
    assert_eq!(lines.len(), 2);
    assert_eq!(lines[1].split(',').count(), EPISODE_COLUMNS.len());
    assert!(csv.ends_with('\n'));
    assert!(dir.path().join("checkpoints/final/header.json").exists());
    assert!(dir.path().join("checkpoints/ep00001/actor.bin").exists());
}

#[test]
fn same_seed_gives_identical_artifacts() {
    for variant in [Variant::Diffusion, Variant::Vanilla] {
        let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
        let mut ca = tiny(a.path());
        ca.variant = variant;
        let mut cb = ca.clone();
        cb.out = b.path().to_path_buf();
        train(&ca).unwrap();
        train(&cb).unwrap();
        let (ta, tb): (Vec<_>, Vec<_>) = (tree(a.path()), tree(b.path()));
        let strip = |t: Vec<(String, Vec<u8>)>| -> Vec<(String, Vec<u8>)> {
            t.into_iter().filter(|(n, _)| n != "timing.csv" && n != "config.txt").collect()
        };
        let (ta, tb) = (strip(ta), strip(tb));
        assert!(ta.len() > 10);
        assert_eq!(ta, tb, "{variant}");
    }
}

#[test]
fn different_seeds_diverge() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let ca = tiny(a.path());
    let mut cb = tiny(b.path());
    cb.seed = 1;
    train(&ca).unwrap();
    train(&cb).unwrap();
    assert_ne!(read(&a.path().join("episodes.csv")), read(&b.path().join("episodes.csv")));
}

#[test]
fn every_logged_decision_picks_the_best_score() {
    let dir = tempfile::tempdir().unwrap();
    let out = train(&tiny(dir.path())).unwrap();
    assert_eq!(out.audit.decisions, 20);
    assert_eq!(out.audit.violations, 0);
    let csv = String::from_utf8(read(&dir.path().join("decisions.csv"))).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next().unwrap(), "episode,step,auv,chosen,q_chosen,q_max,q0,q1,q2");
    let mut n = 0;
    for line in lines {
        let f: Vec<f64> = line.split(',').map(|x| x.parse().unwrap()).collect();
        let qs = &f[6..];
        let best = qs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        assert_eq!(qs[f[3] as usize], best);
        assert_eq!(f[4], f[5]);
        n += 1;
    }
    assert_eq!(n, 20);
}

#[test]
fn unwritable_output_is_an_io_error() {
    let dir = tempfile::tempdir().unwrap();
    let blocker = dir.path().join("file");
    std::fs::write(&blocker, b"x").unwrap();
    let cfg = tiny(&blocker.join("run"));
    let Err(err) = train(&cfg) else { panic!("train into a file path succeeded") };
    assert_eq!(err.exit_code(), 3);
    assert!(matches!(err, auvdiff::error::Error::Io(_)), "{err}");
}
