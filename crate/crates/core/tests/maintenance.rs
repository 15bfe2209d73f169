use rand::Rng;
use shapmat_core::estimators::exact_shapley;
use shapmat_core::maintenance::{monotone_correction, MaintenanceConfig, Maintainer, TaskOutcome};
use shapmat_core::models::{Game, GameConfig, ModelFamily, UtilityKind};
use shapmat_core::rng::stream;
use shapmat_core::{Coalition, DataPoint, Error, Ident, PlayerId, Provenance, TaskId};

fn point(rng: &mut impl Rng, id: u32, classes: u32) -> DataPoint {
    let label = id % classes;
    let angle = label as f64 * 2.1;
    DataPoint::new(
        id,
        vec![
            2.0 * angle.cos() + rng.random_range(-1.5..1.5),
            2.0 * angle.sin() + rng.random_range(-1.5..1.5),
        ],
        label,
    )
}

fn wknn_game(n: u32, k: usize, seed: u64) -> Game {
    let mut rng = stream(seed, 0);
    let cfg = GameConfig::new(
        ModelFamily::Wknn {
            k,
            support_multiplier: 2.0,
        },
        UtilityKind::Accuracy,
        3,
    );
    Game::new(cfg, (0..n).map(|i| point(&mut rng, i, 3))).unwrap()
}

/// Engine with `anchors` external anchor tasks numbered from 1000.
fn engine(n: u32, k: usize, anchors: u32, seed: u64) -> Maintainer {
    let mut m = Maintainer::new(wknn_game(n, k, seed), MaintenanceConfig::default()).unwrap();
    let mut rng = stream(seed, 1);
    for i in 0..anchors {
        m.add_anchor(point(&mut rng, 1000 + i, 3)).unwrap();
    }
    m
}

/// Oracle: exact Shapley over every active player of the game
/// `S -> v_t(S ∩ N(t))`.
fn localized_oracle(m: &mut Maintainer, t: TaskId) -> Vec<(PlayerId, f64)> {
    let support = m.game().support(t).unwrap().members;
    let everyone = Coalition::new(m.game().universe().iter().copied()).unwrap();
    let game = m.game_mut();
    let mut v = |s: &Coalition| {
        let inside = Coalition::new(s.iter().filter(|p| support.contains(*p))).unwrap();
        game.utility(&inside, t).unwrap()
    };
    let r = exact_shapley(&mut v, &everyone, t).unwrap();
    everyone.iter().map(|p| (p, r.column.get(p))).collect()
}

#[test]
fn far_player_changes_nothing() {
    let mut m = engine(10, 2, 4, 1);
    let before = m.matrix().clone();
    let far = DataPoint::new(500, vec![1e6, 1e6], 0);
    let r = m.player_update(far).unwrap();
    assert!(r.affected_tasks.is_empty());
    assert_eq!(r.evaluations, 0);
    for t in before.tasks() {
        for p in before.players() {
            assert_eq!(before.get(*p, t).unwrap(), m.matrix().get(*p, t).unwrap());
        }
        assert_eq!(m.matrix().get(PlayerId(500), t).unwrap(), Some(0.0));
    }
    assert_eq!(
        m.player_update(DataPoint::new(500, vec![0.0, 0.0], 0)).unwrap_err(),
        Error::AlreadyExists(Ident::Player(PlayerId(500)))
    );
}

#[test]
fn player_update_matches_from_scratch_localized_game() {
    let mut rng = stream(2, 7);
    for trial in 0..5u32 {
        let mut m = engine(9, 2, 5, 10 + trial as u64);
        let z = point(&mut rng, 600 + trial, 3);
        let report = m.player_update(z).unwrap();
        assert!(report.evaluations <= report.bound);
        for a in m.matrix().anchor_order().to_vec() {
            for (p, want) in localized_oracle(&mut m, a) {
                let got = m.matrix().get(p, a).unwrap().unwrap();
                assert!((got - want).abs() < 1e-10, "trial {trial} task {a} player {p}");
            }
        }
    }
}

fn rbf_engine(n: u32, anchors: u32, seed: u64) -> Maintainer {
    let mut rng = stream(seed, 0);
    let cfg = GameConfig::new(
        ModelFamily::RbfScorer {
            gamma: 0.8,
            relevance_threshold: 0.5,
        },
        UtilityKind::Confidence,
        3,
    );
    let game = Game::new(cfg, (0..n).map(|i| point(&mut rng, i, 3))).unwrap();
    let mut m = Maintainer::new(game, MaintenanceConfig::default()).unwrap();
    for i in 0..anchors {
        m.add_anchor(point(&mut rng, 1000 + i, 3)).unwrap();
    }
    m
}

#[test]
fn monotone_expansion_agrees_with_correction_form() {
    let mut rng = stream(3, 7);
    let mut checked = 0;
    for trial in 0..20u32 {
        let mut m = rbf_engine(24, 6, 100 + trial as u64);
        let old = m.matrix().clone();
        let supports = m.maintained().clone();
        let z = point(&mut rng, 700 + trial, 3);
        let zid = PlayerId(z.id);
        let report = m.player_update(z).unwrap();
        for t in &report.affected_tasks {
            let fresh = m.game().support(*t).unwrap().members;
            let before = &supports[t];
            if fresh != before.with(zid) {
                continue;
            }
            let game = m.game_mut();
            let mut v = |s: &Coalition| game.utility(s, *t).unwrap();
            let c = monotone_correction(&mut v, before, zid).unwrap();
            let got = m.matrix().get(zid, *t).unwrap().unwrap();
            assert!((got - c.new_value).abs() < 1e-10);
            for p in before.iter() {
                let was = old.get(p, *t).unwrap().unwrap();
                let now = m.matrix().get(p, *t).unwrap().unwrap();
                assert!((was + c.deltas[&p] - now).abs() < 1e-10);
                assert!((report.corrections[&(p, *t)] - c.deltas[&p]).abs() < 1e-10);
            }
            checked += 1;
        }
    }
    assert!(checked > 0, "no monotone expansion was observed");
}

#[test]
fn delete_then_readd_restores_anchor_columns() {
    let mut m = engine(10, 2, 5, 4);
    let original = m.matrix().clone();
    let victim = m.game().player(PlayerId(3)).unwrap().clone();
    m.delete_player(PlayerId(3)).unwrap();
    assert!(!m.matrix().has_player(PlayerId(3)));
    // ids are never reused, so the copy comes back under a fresh id
    let copy = DataPoint::new(900, victim.features.clone(), victim.label);
    m.player_update(copy).unwrap();
    for a in original.anchor_order() {
        for p in original.players() {
            let want = original.get(*p, *a).unwrap().unwrap();
            let q = if *p == PlayerId(3) { PlayerId(900) } else { *p };
            let got = m.matrix().get(q, *a).unwrap().unwrap();
            assert!((got - want).abs() < 1e-10);
        }
    }
    assert_eq!(
        m.player_update(victim).unwrap_err(),
        Error::IdReused(Ident::Player(PlayerId(3)))
    );
}

#[test]
fn deleting_an_unsupported_player_only_drops_its_row() {
    let mut m = engine(10, 2, 3, 5);
    m.player_update(DataPoint::new(50, vec![-1e5, 3e5], 1)).unwrap();
    let before = m.matrix().clone();
    let r = m.delete_player(PlayerId(50)).unwrap();
    assert!(r.affected_tasks.is_empty());
    for t in before.tasks() {
        for p in m.matrix().players() {
            assert_eq!(before.get(*p, t).unwrap(), m.matrix().get(*p, t).unwrap());
        }
    }
    assert_eq!(m.delete_player(PlayerId(50)).unwrap_err(), Error::NotFound(Ident::Player(PlayerId(50))));
}

#[test]
fn replacement_affects_union_of_both_sets() {
    for seed in 0..6 {
        let base = engine(10, 2, 5, 20 + seed);
        let near = base.game().player(PlayerId(4)).unwrap().clone();
        let new = DataPoint::new(800, vec![near.features[0] + 0.05, near.features[1]], near.label);

        let mut deleted = base.clone();
        let minus = deleted.delete_player(PlayerId(4)).unwrap().affected_tasks;
        let plus = deleted.player_update(new.clone()).unwrap().affected_tasks;

        let mut replaced = base.clone();
        let r = replaced.replace_player(PlayerId(4), new).unwrap();
        let mut want: Vec<TaskId> = minus.iter().chain(&plus).copied().collect();
        want.sort();
        want.dedup();
        let mut got = r.affected_tasks.clone();
        got.sort();
        assert_eq!(got, want);
        assert_eq!(replaced.matrix(), deleted.matrix());
    }
}

#[test]
fn replacing_with_an_identical_copy_restores_values() {
    let base = engine(10, 2, 4, 31);
    let mut m = base.clone();
    let old = m.game().player(PlayerId(2)).unwrap().clone();
    m.replace_player(PlayerId(2), DataPoint::new(801, old.features.clone(), old.label))
        .unwrap();
    for a in base.matrix().anchor_order() {
        for p in base.matrix().players() {
            let q = if *p == PlayerId(2) { PlayerId(801) } else { *p };
            let want = base.matrix().get(*p, *a).unwrap().unwrap();
            assert!((m.matrix().get(q, *a).unwrap().unwrap() - want).abs() < 1e-10);
        }
    }
    let mut far = base.clone();
    far.player_update(DataPoint::new(802, vec![1e6, 0.0], 0)).unwrap();
    let r = far
        .replace_player(PlayerId(802), DataPoint::new(803, vec![-1e6, 0.0], 0))
        .unwrap();
    assert_eq!(r.evaluations, 0);
}

#[test]
fn expansion_threshold_rules() {
    let mut rng = stream(6, 3);
    let mut never = engine(12, 2, 4, 6);
    let mut always = never.clone();
    always_config(&mut always, 0.0);
    for i in 0..5 {
        let label = [0, 1, 2, 0, 1][i as usize];
        let mut p = point(&mut rng, 2000 + i, 3);
        p.label = label;
        let anchors = always.matrix().anchor_order().len();
        let out = always.anchor_expansion(p.clone()).unwrap();
        assert!(matches!(out, TaskOutcome::Anchored(_)));
        assert_eq!(always.matrix().anchor_order().len(), anchors + 1);
        // label-compatible anchors exist for labels 0..3, all finite distances <= 1
        let has_label = never
            .matrix()
            .anchor_order()
            .iter()
            .any(|a| never.matrix().task_label(*a) == Some(label));
        let out = never.anchor_expansion(p).unwrap();
        assert_eq!(matches!(out, TaskOutcome::Interpolated(_)), has_label);
    }
}

fn always_config(m: &mut Maintainer, tau: f64) {
    let mut cfg = m.config().clone();
    cfg.tau = tau;
    let game = m.game().clone();
    let matrix = m.matrix().clone();
    *m = Maintainer::from_matrix(game, matrix, cfg).unwrap();
}

#[test]
fn unseen_label_expands() {
    let mut m = Maintainer::new(wknn_game(12, 2, 8), MaintenanceConfig::default()).unwrap();
    let mut rng = stream(8, 1);
    for i in 0..4 {
        let mut p = point(&mut rng, 1000 + i, 3);
        p.label = i % 2;
        m.add_anchor(p).unwrap();
    }
    let mut third = point(&mut rng, 3000, 3);
    third.label = 2;
    let before = m.matrix().anchor_order().len();
    let out = m.anchor_expansion(third).unwrap();
    assert!(matches!(out, TaskOutcome::Anchored(_)));
    assert_eq!(m.matrix().anchor_order().len(), before + 1);
    let mut fourth = point(&mut rng, 3001, 3);
    fourth.label = 5;
    assert_eq!(
        m.task_update(fourth).unwrap_err(),
        Error::NoCompatibleAnchor(TaskId(3001))
    );
}

#[test]
fn interpolated_columns_are_convex_combinations() {
    let mut m = engine(15, 2, 8, 9);
    let mut rng = stream(9, 5);
    for i in 0..6 {
        let p = point(&mut rng, 4000 + i, 3);
        if let Ok(interp) = m.task_update(p) {
            let total: f64 = interp.used.iter().map(|u| u.weight).sum();
            assert!((total - 1.0).abs() < 1e-12);
            assert!(interp.used.len() <= 6);
            assert_eq!(m.matrix().provenance(TaskId(4000 + i)).unwrap(), Provenance::Interpolated);
            for p in m.matrix().players() {
                let v = interp.column.get(*p);
                let lo = interp.used.iter().map(|u| m.matrix().get(*p, u.task).unwrap().unwrap()).fold(f64::INFINITY, f64::min);
                let hi = interp.used.iter().map(|u| m.matrix().get(*p, u.task).unwrap().unwrap()).fold(f64::NEG_INFINITY, f64::max);
                assert!(v >= lo - 1e-12 && v <= hi + 1e-12);
            }
        }
    }
}

#[test]
fn delete_task_touches_one_column() {
    let mut m = engine(8, 2, 4, 11);
    let before = m.matrix().clone();
    let victim = before.anchor_order()[1];
    m.delete_task(victim).unwrap();
    assert_eq!(m.matrix().n_tasks(), before.n_tasks() - 1);
    assert!(!m.matrix().anchor_order().contains(&victim));
    for t in m.matrix().tasks() {
        assert_eq!(m.matrix().column_values(t).unwrap(), before.column_values(t).unwrap());
    }
    assert_eq!(m.delete_task(victim).unwrap_err(), Error::NotFound(Ident::Task(victim)));
}

#[test]
fn joint_batches_reduce_to_sequential_updates() {
    let mut rng = stream(12, 0);
    let tasks: Vec<DataPoint> = (0..4).map(|i| point(&mut rng, 5000 + i, 3)).collect();
    let players: Vec<DataPoint> = (0..3).map(|i| point(&mut rng, 600 + i, 3)).collect();
    let base = engine(12, 2, 6, 12);

    let mut only_tasks = base.clone();
    only_tasks.joint_update(tasks.clone(), vec![]).unwrap();
    let mut sequential = base.clone();
    for t in &tasks {
        sequential.anchor_expansion(t.clone()).unwrap();
    }
    assert_eq!(only_tasks.matrix(), sequential.matrix());

    let mut only_players = base.clone();
    only_players.joint_update(vec![], players.clone()).unwrap();
    let mut sequential = base.clone();
    for p in &players {
        sequential.player_update(p.clone()).unwrap();
    }
    assert_eq!(only_players.matrix(), sequential.matrix());

    let mut wide = base.clone();
    let mut cfg = wide.config().clone();
    cfg.kappa = 1000;
    wide = Maintainer::from_matrix(wide.game().clone(), wide.matrix().clone(), cfg).unwrap();
    let mut split = wide.clone();
    wide.joint_update(tasks.clone(), players.clone()).unwrap();
    split.joint_update(vec![], players).unwrap();
    split.joint_update(tasks, vec![]).unwrap();
    for t in split.matrix().tasks() {
        for p in split.matrix().players() {
            let a = split.matrix().get(*p, t).unwrap().unwrap();
            let b = wide.matrix().get(*p, t).unwrap().unwrap();
            assert!((a - b).abs() < 1e-10);
        }
    }
}
