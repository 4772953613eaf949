mod common;

use auvdiff::dynamics::{ControllerKind, SeaCondition};
use auvdiff::error::Error;
use auvdiff::harness::{checkpoint, evaluate_checkpoint, stages, stages_to, track_to, train, Variant, EVAL_COLUMNS};
use common::{read, tiny};

#[test]
fn checkpoint_evaluation_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = tiny(&dir.path().join("run"));
    train(&cfg).unwrap();
    let ck = cfg.out.join("checkpoints/final");
    let seas = [SeaCondition::Es, SeaCondition::Ves];
    let ctl = ControllerKind::ALL;
    let a = evaluate_checkpoint(&cfg, &ck, &dir.path().join("e1"), 2, &seas, &ctl).unwrap();
    let b = evaluate_checkpoint(&cfg, &ck, &dir.path().join("e2"), 2, &seas, &ctl).unwrap();
    assert_eq!(a, b);
    assert_eq!(a.len(), 6);
    let s1 = read(&dir.path().join("e1/eval_summary.csv"));
    assert_eq!(s1, read(&dir.path().join("e2/eval_summary.csv")));
    let text = String::from_utf8(s1).unwrap();
    assert_eq!(text.lines().next().unwrap(), EVAL_COLUMNS.join(","));
    assert_eq!(text.lines().count(), 7);
}

#[test]
fn zero_episode_evaluation_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = tiny(&dir.path().join("run"));
    train(&cfg).unwrap();
    let err = evaluate_checkpoint(&cfg, &cfg.out.join("checkpoints/final"), dir.path(), 0, &SeaCondition::ALL, &ControllerKind::ALL)
        .unwrap_err();
    assert!(matches!(err, Error::Usage(_)), "{err}");
}

#[test]
fn incompatible_checkpoint_is_a_load_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = tiny(&dir.path().join("run"));
    train(&cfg).unwrap();
    let mut other = cfg.clone();
    other.env.nearest = 4;
    let err = checkpoint::load(&cfg.out.join("checkpoints/final"), &other).unwrap_err();
    assert!(matches!(err, Error::Load(_)), "{err}");
    let mut wider = cfg.clone();
    wider.learner.width = 16;
    assert!(matches!(checkpoint::load(&cfg.out.join("checkpoints/final"), &wider), Err(Error::Load(_))));
}

#[test]
fn stage_rollouts_are_reproducible_and_scored() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = tiny(&dir.path().join("run"));
    train(&cfg).unwrap();
    let (_, agent) = checkpoint::load(&cfg.out.join("checkpoints/final"), &cfg).unwrap();
    let a = stages_to(&cfg, &agent, 3, &dir.path().join("s1")).unwrap();
    let b = stages(&cfg, &agent, 3).unwrap();
    assert_eq!(a, b);
    assert_eq!(a.stages.len(), 2);
    for st in &a.stages {
        assert_eq!(st.trajectories.len(), cfg.diffusion.candidates);
        for t in &st.trajectories {
            assert_eq!(t.len(), cfg.stages.horizon + 1);
        }
    }
    for q in &a.final_q {
        assert!(a.final_q[a.selected] >= *q);
    }
    let csv = String::from_utf8(read(&dir.path().join("s1/stages.csv"))).unwrap();
    assert_eq!(csv.lines().next().unwrap(), "stage,candidate,step,north,east,down");
    assert_eq!(csv.lines().count(), 1 + 2 * 3 * 6);
}

#[test]
fn invalid_stage_and_vanilla_checkpoint_are_usage_errors() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = tiny(&dir.path().join("run"));
    train(&cfg).unwrap();
    let (_, agent) = checkpoint::load(&cfg.out.join("checkpoints/final"), &cfg).unwrap();
    cfg.stages.stages = vec![cfg.diffusion.sample_steps + 1];
    assert!(matches!(stages(&cfg, &agent, 0), Err(Error::Usage(_))));

    let mut vcfg = tiny(&dir.path().join("vanilla"));
    vcfg.variant = Variant::Vanilla;
    train(&vcfg).unwrap();
    let (_, vagent) = checkpoint::load(&vcfg.out.join("checkpoints/final"), &vcfg).unwrap();
    assert!(matches!(stages(&vcfg, &vagent, 0), Err(Error::Usage(_))));
}

#[test]
fn tracking_writes_series_and_summary() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = tiny(dir.path());
    cfg.track.duration = 5.0;
    cfg.env.sea = SeaCondition::Es;
    let sums = track_to(&cfg, &ControllerKind::ALL, 0, dir.path()).unwrap();
    assert_eq!(sums.len(), 3);
    for c in ControllerKind::ALL {
        let csv = String::from_utf8(read(&dir.path().join(format!("track_{c}.csv")))).unwrap();
        assert_eq!(csv.lines().count(), 1 + 100);
    }
    let again = track_to(&cfg, &ControllerKind::ALL, 0, &dir.path().join("again")).unwrap();
    assert_eq!(sums, again);
}
