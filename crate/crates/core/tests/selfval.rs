use rand::Rng;
use shapmat_core::estimators::McConfig;
use shapmat_core::locality::DistanceConfig;
use shapmat_core::models::{Game, GameConfig, ModelFamily, UtilityKind};
use shapmat_core::rng::stream;
use shapmat_core::selfval::{
    build_self_matrix, covering_radius, pivot, proxy_distance, proxy_profiles, select_anchors_fps,
    BuildConfig, BuildMode,
};
use shapmat_core::{Coalition, DataPoint, Error, PlayerId};

fn game(n: u32, seed: u64) -> Game {
    let mut rng = stream(seed, 0);
    let cfg = GameConfig::new(
        ModelFamily::Wknn {
            k: 3,
            support_multiplier: 2.0,
        },
        UtilityKind::Accuracy,
        2,
    );
    Game::new(
        cfg,
        (0..n).map(|i| {
            let label = i % 2;
            let c = if label == 0 { -0.8 } else { 0.8 };
            DataPoint::new(
                i,
                vec![c + rng.random_range(-1.5..1.5), rng.random_range(-1.0..1.0)],
                label,
            )
        }),
    )
    .unwrap()
}

fn build(g: &mut Game, anchors: &[PlayerId], mode: BuildMode) -> (shapmat_core::ShapleyMatrix, shapmat_core::selfval::BuildReport) {
    let cfg = BuildConfig {
        mode,
        ..BuildConfig::default()
    };
    build_self_matrix(g, anchors, &cfg).unwrap()
}

#[test]
fn shared_schedule_matches_naive_and_saves_trainings() {
    let n = 8;
    for k in [2usize, 4, 8] {
        let anchors: Vec<PlayerId> = (0..k as u32).map(|i| PlayerId(i * (8 / k as u32))).collect();
        let mut a = game(n, 1);
        let mut b = game(n, 1);
        let (shared, rs) = build(&mut a, &anchors, BuildMode::ExactShared);
        let (naive, rn) = build(&mut b, &anchors, BuildMode::Naive);
        for t in shared.tasks() {
            for p in shared.players() {
                match (shared.get(*p, t).unwrap(), naive.get(*p, t).unwrap()) {
                    (Some(x), Some(y)) => assert!((x - y).abs() <= 1e-12),
                    (None, None) => assert_eq!(p.proxy_task(), t),
                    other => panic!("ABSENT pattern differs: {other:?}"),
                }
            }
        }
        assert_eq!(rs.trainings, (1u64 << n) - (1u64 << (n as usize - k)));
        assert_eq!(rn.trainings, k as u64 * (1u64 << (n - 1)));
        assert!(rn.trainings as f64 / rs.trainings as f64 >= k as f64 / 2.0);
    }
}

#[test]
fn exact_columns_are_efficient() {
    let mut g = game(9, 2);
    let anchors = [PlayerId(0), PlayerId(3), PlayerId(7)];
    let (m, _) = build(&mut g, &anchors, BuildMode::ExactShared);
    for a in anchors {
        let t = a.proxy_task();
        let rest = Coalition::new(g.universe().iter().copied().filter(|p| *p != a)).unwrap();
        let total = g.utility(&rest, t).unwrap() - g.utility(&Coalition::empty(), t).unwrap();
        let col = m.column(t).unwrap();
        assert!((col.sum() - total).abs() < 1e-9);
        assert_eq!(m.get(a, t).unwrap(), None);
    }
}

#[test]
fn exact_modes_refuse_large_universes() {
    let mut g = game(17, 3);
    let cfg = BuildConfig::default();
    assert_eq!(
        build_self_matrix(&mut g, &[PlayerId(0)], &cfg).unwrap_err(),
        Error::TooLarge { n: 17, limit: 16 }
    );
}

#[test]
fn shared_sampling_tracks_exact_values() {
    let mut g = game(8, 4);
    let anchors = [PlayerId(1), PlayerId(4)];
    let (exact, _) = build(&mut g, &anchors, BuildMode::ExactShared);
    let cfg = BuildConfig {
        mode: BuildMode::McShared,
        mc: McConfig {
            max_samples: 20_000,
            check_interval: 20_000,
            seed: 5,
            ..McConfig::default()
        },
        ..BuildConfig::default()
    };
    let (mc, report) = build_self_matrix(&mut g, &anchors, &cfg).unwrap();
    assert_eq!(report.samples_used, 20_000);
    for t in exact.tasks() {
        for p in exact.players() {
            if let (Some(x), Some(y)) = (exact.get(*p, t).unwrap(), mc.get(*p, t).unwrap()) {
                assert!((x - y).abs() < 0.05, "{p} {t}: {x} vs {y}");
            }
        }
    }
}

#[test]
fn pivots_conserve_credit_events() {
    for n in 4..=10u32 {
        let order: Vec<PlayerId> = (0..n).filter(|i| i % 3 == 1).map(PlayerId).collect();
        let everyone = Coalition::new((0..n).map(PlayerId)).unwrap();
        let mut per_anchor = vec![0u64; order.len()];
        let mut per_coalition = 0u64;
        for mask in 0..(1u64 << n) {
            let s = everyone.subset(mask);
            let missing: Vec<usize> = (0..order.len()).filter(|&j| !s.contains(order[j])).collect();
            match pivot(&order, &s) {
                Some(p) => {
                    assert!(!s.contains(p));
                    assert_eq!(p, order[missing[0]]);
                }
                None => assert!(missing.is_empty()),
            }
            per_coalition += missing.len() as u64;
            for j in missing {
                per_anchor[j] += 1;
            }
        }
        assert_eq!(per_anchor.iter().sum::<u64>(), per_coalition);
    }
}

#[test]
fn radius_is_infinite_when_a_label_has_no_anchor() {
    let mut g = game(10, 6);
    let cfg = DistanceConfig::default();
    let profiles = proxy_profiles(&mut g, &cfg).unwrap();
    let players: Vec<PlayerId> = g.universe().iter().copied().collect();
    let same_label = [PlayerId(0), PlayerId(2)];
    let cov = covering_radius(&players, &same_label, proxy_distance(&profiles, &cfg)).unwrap();
    assert_eq!(cov.r_max, f64::INFINITY);
    let (anchors, cov) = select_anchors_fps(&players, 2, proxy_distance(&profiles, &cfg)).unwrap();
    assert_eq!(anchors[0], PlayerId(0));
    assert_eq!(g.player(anchors[1]).unwrap().label, 1);
    assert!(cov.r_max <= 1.0);
}

#[test]
fn restricted_build_values_support_games() {
    let mut g = game(30, 7);
    let anchors = [PlayerId(0), PlayerId(5), PlayerId(11)];
    let cfg = BuildConfig {
        restrict_to_support: true,
        ..BuildConfig::default()
    };
    let (m, report) = build_self_matrix(&mut g, &anchors, &cfg).unwrap();
    assert!(report.restricted);
    for a in anchors {
        let t = a.proxy_task();
        let support = g.support(t).unwrap().members;
        assert!(!support.contains(a));
        for p in m.players() {
            if !support.contains(*p) && *p != a {
                assert_eq!(m.get(*p, t).unwrap(), Some(0.0));
            }
        }
    }
}
