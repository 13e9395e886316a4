use std::f64::consts::PI;

use mrp_core::geom::{dubins_shortest, Pose};
use mrp_core::harness::{instance_seed, DistKind};
use mrp_core::planners::{bcp_length, run_planner, Episode, Mode, PlannerKind, RunOptions};
use mrp_core::world::{fov_contains, generate_weeds, MowerSpec, PastureSpec, Weed, WeedDistribution, WeedStatus};
use proptest::prelude::*;

fn run(kind: PlannerKind, weeds: &[Weed], pasture: &PastureSpec, mower: &MowerSpec, seed: u64) -> Episode {
    let opts = RunOptions {
        seed,
        record_trajectory: true,
        bcp_length: None,
    };
    run_planner(kind, weeds, pasture, mower, &opts).unwrap()
}

fn field(n: usize, dist: DistKind, replicate: usize, pasture: &PastureSpec) -> (u64, Vec<Weed>) {
    let seed = instance_seed(99, n, dist, replicate);
    (
        seed,
        generate_weeds(n, dist.with_sigma(WeedDistribution::DEFAULT_SIGMA), pasture, seed),
    )
}

fn circumradius(a: Pose, b: Pose, c: Pose) -> f64 {
    let (p, q, r) = (a.position(), b.position(), c.position());
    let cross = (q.x - p.x) * (r.y - p.y) - (q.y - p.y) * (r.x - p.x);
    if cross.abs() < 1e-12 {
        return f64::INFINITY;
    }
    p.distance(&q) * q.distance(&r) * p.distance(&r) / (2.0 * cross.abs())
}

fn kind_strategy() -> impl Strategy<Value = PlannerKind> {
    proptest::sample::select(PlannerKind::ALL.to_vec())
}

fn dist_strategy() -> impl Strategy<Value = DistKind> {
    prop_oneof![Just(DistKind::Uniform), Just(DistKind::Gauss)]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn trajectories_respect_step_curvature_and_pasture(
        kind in kind_strategy(),
        dist in dist_strategy(),
        n in 0usize..120,
        replicate in 0usize..1000,
        r in 1.0..3.0f64,
        fov in prop_oneof![Just(8.0), Just(12.0), Just(16.0)],
    ) {
        let pasture = PastureSpec::default();
        let mower = MowerSpec { turn_radius: r, fov_depth: fov, fov_width: fov, ..MowerSpec::default() };
        let (seed, weeds) = field(n, dist, replicate, &pasture);
        let e = run(kind, &weeds, &pasture, &mower, seed);
        let t = e.trajectory.as_ref().unwrap();
        let tol = 10.0 * mower.step;
        for w in t.windows(2) {
            let d = w[0].pose.position().distance(&w[1].pose.position());
            prop_assert!(d <= mower.step + 1e-9, "step {d}");
        }
        for w in t.windows(3) {
            prop_assert!(circumradius(w[0].pose, w[1].pose, w[2].pose) >= r * (1.0 - tol));
        }
        // A shortest Dubins connection between nearby poses can loop through
        // a middle circle up to 4R out, so turns and transits get that margin.
        // Everything else keeps within R.
        let reach = 4.0 * r;
        for s in t {
            let p = s.pose.position();
            let turning = s.mode == Mode::OnTransit || p.x < 0.0 || p.x > pasture.length;
            let m = if turning { reach } else { r } + 1e-9;
            prop_assert!(p.x >= -m && p.x <= pasture.length + m, "{kind}: x {}", p.x);
            prop_assert!(p.y >= -m && p.y <= pasture.width + m, "{kind}: y {}", p.y);
            if matches!(s.mode, Mode::OnJump | Mode::OnWriggle) {
                prop_assert!(p.y >= -1e-9 && p.y <= pasture.width + 1e-9, "{kind}: detour leaves pasture at y {}", p.y);
            }
        }
    }

    #[test]
    fn planner_outcomes_match_their_guarantees(
        kind in kind_strategy(),
        dist in dist_strategy(),
        n in 0usize..200,
        replicate in 0usize..1000,
    ) {
        let pasture = PastureSpec::default();
        let mower = MowerSpec::default();
        let (seed, weeds) = field(n, dist, replicate, &pasture);
        let e = run(kind, &weeds, &pasture, &mower, seed);
        prop_assert_eq!(e.n_weeds(), n);
        prop_assert_eq!(e.count(WeedStatus::Undetected) + e.count(WeedStatus::Detected) + e.mowed(), n);
        let t = e.trajectory.as_ref().unwrap();
        for w in e.weeds.iter().filter(|w| w.status == WeedStatus::Undetected) {
            prop_assert!(!t.iter().any(|s| fov_contains(&s.pose, &mower, w.position())), "weed {} was in view", w.id);
        }
        match kind {
            PlannerKind::JumpHigh | PlannerKind::JumpLow => {
                prop_assert!(e.invariants_hold());
                prop_assert_eq!(e.mowed(), n);
            }
            // Resuming straight after a wriggle can leave a sliver unseen, so
            // SNAKE only gets the never-in-view check above.
            PlannerKind::SnakeStatic | PlannerKind::SnakeStaticLimited | PlannerKind::SnakeDynamic => {}
            PlannerKind::Bcp => {
                prop_assert_eq!(e.pct_of_bcp(), 100.0);
                prop_assert_eq!(e.mowed(), n);
            }
            PlannerKind::BcpTsp => {
                // The tour must visit everything the coverage sweep saw.
                let sweep: Vec<Pose> = t.iter().filter(|s| s.mode == Mode::OnPass).map(|s| s.pose).collect();
                for w in &e.weeds {
                    if sweep.iter().any(|p| fov_contains(p, &mower, w.position())) {
                        prop_assert_eq!(w.status, WeedStatus::Mowed, "weed {}", w.id);
                    }
                }
            }
            PlannerKind::React => prop_assert!((e.path_length - e.bcp_length).abs() < 1e-6),
        }
        if matches!(kind, PlannerKind::SnakeStatic | PlannerKind::SnakeStaticLimited) {
            for w in e.passes.windows(2) {
                prop_assert!(w[1].y_p >= w[0].y_p);
            }
        }
    }

    #[test]
    fn episodes_are_pure_functions_of_their_inputs(kind in kind_strategy(), replicate in 0usize..1000) {
        let pasture = PastureSpec::default();
        let mower = MowerSpec::default();
        let (seed, weeds) = field(60, DistKind::Gauss, replicate, &pasture);
        let a = run(kind, &weeds, &pasture, &mower, seed);
        let b = run(kind, &weeds, &pasture, &mower, seed);
        prop_assert_eq!(a.path_length.to_bits(), b.path_length.to_bits());
        prop_assert_eq!(a.weeds, b.weeds);
        prop_assert_eq!(a.trajectory, b.trajectory);
    }
}

#[test]
fn jump_low_without_weeds_drives_view_spaced_passes() {
    // With nothing detected the spacing rule reduces to half the view width,
    // capped at the top pass.
    let pasture = PastureSpec::default();
    let mower = MowerSpec::default();
    let e = run(PlannerKind::JumpLow, &[], &pasture, &mower, 0);
    let ys: Vec<f64> = e.passes.iter().map(|p| p.y_p).collect();
    assert_eq!(ys, vec![1.0, 7.0, 13.0, 19.0, 25.0, 31.0, 37.0, 39.0]);

    let mut expected = 0.0;
    for (i, &y) in ys.iter().enumerate() {
        expected += pasture.length;
        if let Some(&next) = ys.get(i + 1) {
            let (end, start) = if i % 2 == 0 {
                (Pose::new(pasture.length, y, 0.0), Pose::new(pasture.length, next, PI))
            } else {
                (Pose::new(0.0, y, PI), Pose::new(0.0, next, 0.0))
            };
            expected += dubins_shortest(&end, &start, mower.turn_radius).length();
        }
    }
    assert!((e.path_length - expected).abs() < 1e-6, "{} vs {expected}", e.path_length);
    assert!(e.path_length < bcp_length(&pasture, &mower).unwrap());
}

#[test]
fn lone_weed_on_the_first_pass_is_mowed_without_leaving_the_line() {
    let pasture = PastureSpec::default();
    let mower = MowerSpec::default();
    let weeds = [Weed::new(0, 50.0, 1.0)];
    for kind in [PlannerKind::JumpLow, PlannerKind::SnakeStatic] {
        let e = run(kind, &weeds, &pasture, &mower, 0);
        assert_eq!(e.mowed(), 1);
        let t = e.trajectory.unwrap();
        let first_pass = t.iter().take_while(|s| s.pose.x <= 50.0 && s.pose.y < 1.5);
        assert!(first_pass.clone().count() > 400, "{kind}");
        assert!(first_pass.into_iter().all(|s| (s.pose.y - 1.0).abs() < 1e-9), "{kind}");
    }
    let jl = run(PlannerKind::JumpLow, &weeds, &pasture, &mower, 0);
    assert_eq!(jl.passes[0].detours, 0);
}

#[test]
fn weed_above_the_pass_triggers_a_jump() {
    let pasture = PastureSpec::default();
    let mower = MowerSpec::default();
    let weeds = [Weed::new(0, 50.0, 4.0)];
    let e = run(PlannerKind::JumpHigh, &weeds, &pasture, &mower, 0);
    assert_eq!(e.mowed(), 1);
    assert_eq!(e.passes[0].detours, 1);
    assert!(e.trajectory.unwrap().iter().any(|s| s.mode == Mode::OnJump));
}
