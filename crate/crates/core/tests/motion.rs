mod common;

use common::grid;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use tamp_core::motion::{
    check_configs, plan_motion, plan_valid_motion, validate, CheckCounts, Episode, MotionError, MotionGoal, Obstacles,
    PathCheck, PlannerParams,
};
use tamp_core::world::{
    ActionKind, Config, Hit, MotionPath, MovableObject, Polygon, SegmentStatus, Validation, WorldState, BOUNDARY,
};

const POS_TOL: f64 = 0.05;
const ANG_TOL: f64 = 0.1;

fn empty(w: f64, h: f64) -> WorldState {
    WorldState::from_json(&format!(
        r#"{{"bounds":[[0,0],[{w},{h}]],
            "robot":{{"pose":[1,1,0],"radius":0.2,"speed_mps":0.5,"ang_speed_rps":1.0,"pick_time_s":3.0}}}}"#
    ))
    .unwrap()
}

fn free_config(w: &WorldState, rng: &mut ChaCha8Rng) -> Config {
    let [lo, hi] = w.bounds;
    loop {
        let c = Config::new(
            rng.gen_range(lo[0]..hi[0]),
            rng.gen_range(lo[1]..hi[1]),
            rng.gen_range(-std::f64::consts::PI..std::f64::consts::PI),
        );
        if w.first_hit(&c, true).is_none() {
            return c;
        }
    }
}

/// 6 x 6 m room with random boxes, two of them movable, plus a start and
/// a goal that are both free.
fn random_world(seed: u64) -> (WorldState, Config, Config) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut w = empty(6.0, 6.0);
    for _ in 0..5 {
        let (x, y) = (rng.gen_range(0.5..5.0), rng.gen_range(0.5..5.0));
        let (dx, dy) = (rng.gen_range(0.2..1.2), rng.gen_range(0.2..1.2));
        w.statics.push(Polygon::rect(x, y, x + dx, y + dy));
    }
    for k in 0..2 {
        let hw = rng.gen_range(0.1..0.3);
        w.put_movable(MovableObject {
            id: format!("m{k}"),
            footprint: Polygon::rect(-hw, -hw, hw, hw),
            pose: Config::new(rng.gen_range(0.5..5.5), rng.gen_range(0.5..5.5), rng.gen_range(-1.5..1.5)),
            graspable: true,
            width: 2.0 * hw,
        });
    }
    let start = free_config(&w, &mut rng);
    let goal = free_config(&w, &mut rng);
    (w, start, goal)
}

fn params(seed: u64) -> PlannerParams {
    PlannerParams {
        seed,
        ..Default::default()
    }
}

/// Obstacles a disc sweeping straight from `a` to `b` touches, by exact
/// capsule clearance. Returns (definite hits, near-contact hits).
fn capsule_hits(w: &WorldState, a: &Config, b: &Config, band: f64) -> (Vec<Hit>, Vec<Hit>) {
    let r = w.robot.radius;
    let (pa, pb) = (a.xy(), b.xy());
    let mut definite = Vec::new();
    let mut near = Vec::new();
    let mut sort = |h: Hit, d: f64| {
        if d < r - band {
            definite.push(h);
        } else if d <= r + band {
            near.push(h);
        }
    };
    // the box is convex, so the capsule stays inside iff both ends do
    let [lo, hi] = w.bounds;
    let margin = |p: [f64; 2]| (p[0] - lo[0]).min(hi[0] - p[0]).min(p[1] - lo[1]).min(hi[1] - p[1]);
    sort(Hit::Static(BOUNDARY), margin(pa).min(margin(pb)));
    for (i, s) in w.statics.iter().enumerate() {
        sort(Hit::Static(i), grid::segment_clearance(pa, pb, &s.vertices().to_vec()));
    }
    for m in &w.movables {
        sort(Hit::Movable(m.id.clone()), grid::segment_clearance(pa, pb, &m.shape().vertices().to_vec()));
    }
    (definite, near)
}

#[test]
fn start_within_tolerance_is_a_single_waypoint() {
    let w = empty(5.0, 5.0);
    let start = Config::new(2.0, 2.0, 0.0);
    let goal = Config::new(2.03, 2.0, 0.05);
    let (r, counts) = plan_valid_motion(&start, &MotionGoal::pose(goal), &w, &params(0), false);
    let path = r.unwrap();
    assert_eq!(path, vec![start]);
    assert_eq!(counts.segment_checks, 0);
    let p = MotionPath::timed(0, &path, &w.robot, ActionKind::Pick.surcharge(&w.robot));
    assert_eq!(p.effort_s, 3.0);
}

#[test]
fn invalid_start_and_enclosed_start() {
    let mut w = empty(6.0, 6.0);
    w.statics.push(Polygon::rect(4.0, 4.0, 5.0, 5.0));
    let goal = MotionGoal::pose(Config::new(1.0, 1.0, 0.0));
    let (r, _) = plan_valid_motion(&Config::new(4.5, 4.5, 0.0), &goal, &w, &params(0), false);
    assert_eq!(r, Err(MotionError::StartInvalid));

    let mut w = empty(6.0, 6.0);
    for s in [
        Polygon::rect(2.0, 2.0, 2.1, 4.0),
        Polygon::rect(3.9, 2.0, 4.0, 4.0),
        Polygon::rect(2.0, 2.0, 4.0, 2.1),
        Polygon::rect(2.0, 3.9, 4.0, 4.0),
    ] {
        w.statics.push(s);
    }
    let p = PlannerParams {
        max_iters: 2000,
        ..Default::default()
    };
    let (r, _) = plan_valid_motion(&Config::new(3.0, 3.0, 0.0), &goal, &w, &p, false);
    assert_eq!(r, Err(MotionError::NoPath));
}

#[test]
fn empty_world_three_metres_succeeds_for_most_seeds() {
    let w = empty(6.0, 6.0);
    let start = Config::new(1.5, 3.0, 0.0);
    let goal = Config::new(4.5, 3.0, 0.0);
    let mut ok = 0;
    for seed in 0..100 {
        let (r, _) = plan_valid_motion(&start, &MotionGoal::pose(goal), &w, &params(seed), false);
        if let Ok(path) = r {
            assert_eq!(path[0], start);
            assert!(path.last().unwrap().within(&goal, POS_TOL, ANG_TOL));
            ok += 1;
        }
    }
    println!("empty world: {ok}/100");
    assert!(ok >= 95, "{ok}/100 seeds found a path");
}

#[test]
fn fresh_episode_has_no_checks() {
    let w = empty(5.0, 5.0);
    let ep = Episode::new(&w, &params(0), false, Obstacles::All);
    assert_eq!(ep.counts, CheckCounts::default());
}

#[test]
fn straight_fetch_line_crosses_the_new_obstacle() {
    let mut w = WorldState::load(&common::fixture("fetch_world.json")).unwrap();
    w.put_movable(MovableObject {
        id: "crate".into(),
        footprint: Polygon::rect(-0.25, -0.25, 0.25, 0.25),
        pose: Config::new(4.5, 3.0, 0.0),
        graspable: true,
        width: 0.5,
    });
    let start = w.robot.pose;
    let target = Config::new(6.0, 3.0, 0.0);
    match w.segment_status(&start, &target, 0.01) {
        SegmentStatus::FirstHit { hit, s } => {
            assert_eq!(hit, Hit::Movable("crate".into()));
            // first contact where the disc meets the crate's near face
            let expect = (4.25 - 0.25 - start.x) / (target.x - start.x);
            assert!((s - expect).abs() <= 0.01 / (target.x - start.x) + 1e-9, "{s} vs {expect}");
        }
        other => panic!("expected a hit, got {other:?}"),
    }
    let mut path = MotionPath::timed(0, &[start, Config::new(2.0, 3.0, 0.0), target], &w.robot, 0.0);
    let mut counts = CheckCounts::default();
    let r = validate(&mut path, &w, 0.01, &mut counts);
    assert_eq!(
        r,
        PathCheck::FirstCollision {
            hit: Hit::Movable("crate".into()),
            segment: 1
        }
    );
    assert!(matches!(path.validated, Validation::Invalid { segment: 1, .. }));
    assert_eq!(counts.segment_checks, 2);
}

#[test]
fn zero_segment_path_at_clear_config_is_valid() {
    let w = empty(5.0, 5.0);
    let mut path = MotionPath::timed(0, &[Config::new(2.0, 2.0, 0.0)], &w.robot, 0.0);
    let mut counts = CheckCounts::default();
    assert_eq!(validate(&mut path, &w, 0.01, &mut counts), PathCheck::Valid);
    assert_eq!(path.validated, Validation::Valid);
}

#[test]
fn validate_agrees_with_capsule_oracle() {
    const BAND: f64 = 1e-3;
    let mut compared = 0;
    for seed in 0..50 {
        let (w, start, goal) = random_world(seed);
        let (r, _) = plan_motion(&start, &MotionGoal::pose(goal), &w, &params(seed), Obstacles::All);
        let Ok(configs) = r else { continue };
        let mut path = MotionPath::timed(0, &configs, &w.robot, 0.0);
        let configs = path.configs();
        let mut counts = CheckCounts::default();
        let got = validate(&mut path, &w, 0.01, &mut counts);
        // walk segments with the oracle until one definitely hits
        let mut expect = None;
        let mut ambiguous = false;
        for (k, s) in configs.windows(2).enumerate() {
            let (definite, near) = capsule_hits(&w, &s[0], &s[1], BAND);
            if !near.is_empty() {
                ambiguous = true;
                break;
            }
            if !definite.is_empty() {
                expect = Some((k, definite));
                break;
            }
        }
        if ambiguous {
            continue;
        }
        compared += 1;
        match (got, expect) {
            (PathCheck::Valid, None) => {}
            (PathCheck::FirstCollision { hit, segment }, Some((k, hits))) => {
                assert_eq!(segment, k, "seed {seed}");
                assert!(hits.contains(&hit), "seed {seed}: {hit:?} not in {hits:?}");
            }
            (g, e) => panic!("seed {seed}: validate {g:?}, oracle {e:?}"),
        }
    }
    println!("compared {compared}/50");
    assert!(compared >= 45, "only {compared} unambiguous worlds");
}

#[test]
fn valid_paths_survive_a_finer_sweep() {
    let mut planned = 0;
    let mut clean = 0;
    for seed in 0..100 {
        let (w, start, goal) = random_world(1000 + seed);
        let (r, _) = plan_valid_motion(&start, &MotionGoal::pose(goal), &w, &params(seed), false);
        let Ok(configs) = r else { continue };
        assert_eq!(configs[0], start);
        assert!(configs.last().unwrap().within(&goal, POS_TOL, ANG_TOL));
        planned += 1;
        let mut counts = CheckCounts::default();
        if check_configs(&configs, &w, 0.001, &mut counts) == PathCheck::Valid {
            clean += 1;
        }
    }
    println!("finer sweep: {clean}/{planned}");
    assert!(planned >= 50);
    assert!(clean * 100 >= planned * 99, "{clean}/{planned}");
}

#[test]
fn same_seed_same_path() {
    for seed in 0..10 {
        let (w, start, goal) = random_world(2000 + seed);
        for eager in [false, true] {
            let a = plan_valid_motion(&start, &MotionGoal::pose(goal), &w, &params(seed), eager);
            let b = plan_valid_motion(&start, &MotionGoal::pose(goal), &w, &params(seed), eager);
            assert_eq!(a, b);
        }
    }
}

#[test]
fn lazy_sweeps_no_more_than_eager() {
    let mut lazy = CheckCounts::default();
    let mut eager = CheckCounts::default();
    for seed in 0..20 {
        let (w, start, goal) = random_world(3000 + seed);
        let (a, ca) = plan_valid_motion(&start, &MotionGoal::pose(goal), &w, &params(seed), false);
        let (b, cb) = plan_valid_motion(&start, &MotionGoal::pose(goal), &w, &params(seed), true);
        if a.is_err() || b.is_err() {
            continue;
        }
        lazy.add(&ca);
        eager.add(&cb);
    }
    println!("lazy {lazy:?}\neager {eager:?}");
    assert!(lazy.segment_checks <= eager.segment_checks);
    assert!(lazy.sweep_m <= eager.sweep_m);
}

#[test]
fn region_goal_ends_inside() {
    let w = empty(6.0, 6.0);
    let region = Polygon::rect(4.0, 4.0, 5.0, 5.0);
    let (r, _) = plan_valid_motion(&Config::new(1.0, 1.0, 0.0), &MotionGoal::Region(region.clone()), &w, &params(1), false);
    let path = r.unwrap();
    assert!(region.contains(path.last().unwrap().xy()));
}
