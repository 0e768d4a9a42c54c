use timeability_suite::{achieved_epsilon, brute_best_response, is_exact};
use num_traits::{One, ToPrimitive, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use timeability::dist::DEFAULT_BUDGET;
use timeability::exact_timing::{check, Verdict};
use timeability::families::{figure1, Figure1};
use timeability::game::Game;
use timeability::perception::{verify_lu_timing, ClockBound, PerceivedTiming};
use timeability::random_games::{random_game, random_integer_timing, random_timing, GameShape};
use timeability::randomized_timing::{
    estimate_epsilon_timing, shifted_window_timing, verify_epsilon_timing, AtomSampler, RandomizedTiming,
};
use timeability::rational::{q, Q};
use timeability::timed_game::{
    augment, augmented_best_response, best_response_value, timing_advantage_default, BehaviorProfile,
};

fn random_profile(rng: &mut ChaCha8Rng, g: &Game, p: usize) -> BehaviorProfile {
    let mut prof = BehaviorProfile::new();
    for s in g.infosets().iter().filter(|s| s.player != p) {
        let w: Vec<i64> = s.actions.iter().map(|_| rng.gen_range(1..=3)).collect();
        let total: i64 = w.iter().sum();
        prof.set(s.name.clone(), w.iter().map(|&x| q(x, total)).collect());
    }
    prof
}

fn atoms(g: &Game, rt: &RandomizedTiming) -> Vec<(Q, Vec<Q>)> {
    rt.atoms()
        .iter()
        .map(|(p, t)| (p.clone(), (0..g.len()).map(|v| t.time(v).clone()).collect()))
        .collect()
}

fn recall_shape(rng: &mut ChaCha8Rng) -> GameShape {
    GameShape {
        players: rng.gen_range(1..=3),
        max_depth: rng.gen_range(2..=5),
        max_nodes: 30,
        ..GameShape::default()
    }
}

#[test]
fn best_response_matches_enumeration() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut checked = 0;
    for _ in 0..150 {
        let shape = recall_shape(&mut rng);
        let g = random_game(&mut rng, &shape);
        let p = rng.gen_range(1..=g.num_players());
        let others = random_profile(&mut rng, &g, p);
        let Some(brute) = brute_best_response(&g, p, &others, 1 << 14) else {
            continue;
        };
        assert_eq!(best_response_value(&g, p, &others).unwrap(), brute);
        checked += 1;
    }
    assert!(checked > 100);
}

#[test]
fn augmented_best_response_matches_enumeration() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let mut checked = 0;
    for _ in 0..80 {
        let shape = recall_shape(&mut rng);
        let g = random_game(&mut rng, &shape);
        let rt = random_integer_timing(&mut rng, &g, 2);
        let p = rng.gen_range(1..=g.num_players());
        let others = random_profile(&mut rng, &g, p);
        let aug = augment(&g, &rt, DEFAULT_BUDGET).unwrap();
        // others keep their original behaviour in every copy
        let mut lifted = BehaviorProfile::new();
        for (k, s) in aug.game.infosets().iter().enumerate() {
            if s.player != p {
                let orig = &g.infoset(aug.infoset_origin[k].0).name;
                lifted.set(s.name.clone(), others.get(orig).unwrap().to_vec());
            }
        }
        let Some(brute) = brute_best_response(&aug.game, p, &lifted, 1 << 14) else {
            continue;
        };
        assert_eq!(augmented_best_response(&aug, &g, p, &others).unwrap(), brute);
        checked += 1;
    }
    assert!(checked > 40);
}

#[test]
fn augmenting_preserves_recall() {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    for _ in 0..100 {
        let shape = recall_shape(&mut rng);
        let g = random_game(&mut rng, &shape);
        let rt = random_timing(&mut rng, &g, 3);
        let aug = augment(&g, &rt, DEFAULT_BUDGET).unwrap();
        assert_eq!(aug.game.validate().perfect_recall, Some(true));
    }
}

#[test]
fn exact_timings_give_no_advantage() {
    let mut rng = ChaCha8Rng::seed_from_u64(14);
    let mut timed = 0;
    for _ in 0..100 {
        let shape = recall_shape(&mut rng);
        let g = random_game(&mut rng, &shape);
        let Verdict::Timeable(t) = check(&g) else {
            continue;
        };
        let rt = RandomizedTiming::deterministic(&g, t).unwrap();
        assert!(is_exact(&g, &atoms(&g, &rt)[0].1));
        let p = rng.gen_range(1..=g.num_players());
        let others = random_profile(&mut rng, &g, p);
        let r = timing_advantage_default(&g, &rt, p, &others).unwrap();
        assert!(r.achieved.is_zero());
        assert!(r.gain.is_zero(), "gain {}", r.gain);
        timed += 1;
    }
    assert!(timed > 50);
}

#[test]
fn window_timing_on_figure_1a() {
    let g = figure1(Figure1::A);
    let rt = shifted_window_timing(&g, 4).unwrap();
    let others = BehaviorProfile::uniform_except(&g, 1);
    let r = timing_advantage_default(&g, &rt, 1, &others).unwrap();
    let aug = augment(&g, &rt, DEFAULT_BUDGET).unwrap();
    let sets = aug.game.infosets().iter().filter(|s| s.player == 1).count();
    // first mover at i, second at i+1, i uniform on {1,2,3}: times 1 and 4
    // reveal the order, 2 and 3 do not
    assert_eq!(sets, 4);
    assert_eq!(r.plain, q(1, 2));
    assert_eq!(r.augmented, q(2, 3));
    assert_eq!(r.gain, q(1, 6));
    assert_eq!(r.achieved, q(1, 3));
    assert!(r.holds);
}

#[test]
fn identity_clocks_reduce_to_plain_epsilon() {
    let mut rng = ChaCha8Rng::seed_from_u64(15);
    let id = ClockBound::Scale(Q::one());
    for _ in 0..50 {
        let g = random_game(&mut rng, &GameShape::default());
        let rt = random_timing(&mut rng, &g, 3);
        let pt = PerceivedTiming::new(
            &g,
            atoms(&g, &rt)
                .into_iter()
                .map(|(p, ts)| (p, ts.iter().map(|t| (t.clone(), t.clone())).collect()))
                .collect(),
        )
        .unwrap();
        let r = verify_lu_timing(&g, &pt, &id, &id).unwrap();
        assert!(r.structural);
        let plain = verify_epsilon_timing(&g, &rt).unwrap().achieved;
        assert_eq!(r.achieved, plain);
        assert_eq!(plain, achieved_epsilon(&g, &atoms(&g, &rt)));
    }
}

#[test]
fn monte_carlo_tracks_the_exact_value() {
    let mut rng = ChaCha8Rng::seed_from_u64(16);
    for _ in 0..20 {
        let g = random_game(&mut rng, &GameShape::default());
        let rt = random_integer_timing(&mut rng, &g, 2);
        let exact = verify_epsilon_timing(&g, &rt).unwrap().achieved;
        let exact = exact.to_f64().unwrap();
        let est = estimate_epsilon_timing(&g, &AtomSampler::new(&rt), 7, 20_000);
        assert!(
            (est.estimate - exact).abs() <= 5.0 * est.standard_error + 0.02,
            "estimate {} vs exact {exact}",
            est.estimate
        );
    }
}

#[test]
fn timing_documents_round_trip() {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    for _ in 0..30 {
        let g = random_game(&mut rng, &GameShape::default());
        let rt = random_timing(&mut rng, &g, 4).canonical();
        let back = RandomizedTiming::from_json(&g, &rt.to_json(&g)).unwrap();
        assert_eq!(back.canonical(), rt);
    }
}

#[test]
fn wide_window_estimate_converges_from_above() {
    // 99-point supports: the plug-in estimate is biased upward, by roughly
    // 1/sqrt(samples), and settles on 1/99 as samples grow
    let g = figure1(Figure1::A);
    let rt = shifted_window_timing(&g, 100).unwrap();
    let exact = 1.0 / 99.0;
    let mut last = f64::INFINITY;
    for s in [10_000usize, 100_000, 1_000_000] {
        let est = estimate_epsilon_timing(&g, &AtomSampler::new(&rt), 7, s);
        let err = est.estimate - exact;
        assert!(err > -3.0 * est.standard_error, "{s} samples: {}", est.estimate);
        assert!(err < last / 2.0, "{s} samples: error {err} after {last}");
        last = err;
    }
    assert!(last < 0.01);
}
