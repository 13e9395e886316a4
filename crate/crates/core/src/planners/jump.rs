use crate::geom::{build_jump, Jump, PathPlan, Pose};
use crate::world::{MowerSpec, PastureSpec, WeedStatus, WorldState};

use super::driver::Driver;
use super::{
    candidate_weeds, is_terminated, next_pass_y, transit_to, ConstraintMode, InvariantCheck, InvariantKind,
    Mode, PassRecord, PassState, PlannerError, Y_TOL,
};

/// A feasible jump from the mower's current spot on the pass, if any.
///
/// The jump's tangent start lies at most one step ahead of the mower, so the
/// step windows along a pass tile it and every start is offered exactly once.
/// The end must land strictly inside the view depth and on the pasture, and
/// no listed weed outside the candidate set may sit in the strip of pass the
/// jump skips. Lowest weed wins, then smallest abscissa.
pub fn find_available_jump(
    world: &WorldState,
    pass: &PassState,
    pasture: &PastureSpec,
    mower: &MowerSpec,
) -> Option<Jump> {
    let x_m = world.mower.x;
    let dir = pass.heading.dir();
    let half_b = mower.half_implement();
    let candidates = candidate_weeds(world, pass, ConstraintMode::C, mower);
    let mut best: Option<Jump> = None;
    for w in &candidates {
        let Some(jump) = build_jump(w.position(), pass.y_p, pass.heading, mower.turn_radius) else {
            continue;
        };
        let lead = dir * (jump.x_start - x_m);
        if !(-Y_TOL..mower.step).contains(&lead) {
            continue;
        }
        if dir * (jump.x_end - x_m) >= mower.fov_depth {
            continue;
        }
        if jump.x_end < -Y_TOL || jump.x_end > pasture.length + Y_TOL {
            continue;
        }
        let skips_weed = world.weed_list().any(|o| {
            !candidates.iter().any(|c| c.id == o.id)
                && dir * (o.x - x_m) > 0.0
                && dir * (jump.x_end - o.x) > 0.0
                && (o.y - pass.y_p).abs() <= half_b + Y_TOL
        });
        if skips_weed {
            continue;
        }
        let better = best.as_ref().is_none_or(|b| {
            (jump.weed.y, jump.weed.x) < (b.weed.y, b.weed.x)
        });
        if better {
            best = Some(jump);
        }
    }
    best
}

/// The jump as a drivable plan from the mower, with a short run-up if its
/// start lies ahead.
fn jump_plan(jump: &Jump, from: &Pose, pass: &PassState) -> PathPlan {
    let lead = pass.heading.dir() * (jump.x_start - from.x);
    let mut plan = if lead > 0.0 {
        PathPlan::straight(Pose::new(from.x, pass.y_p, pass.theta()), lead)
    } else {
        PathPlan::default()
    };
    plan.append(jump.plan());
    plan
}

pub(super) fn run(drv: &mut Driver<'_>, bcp_length: f64) -> Result<(), PlannerError> {
    let (pasture, mower) = (drv.pasture, drv.mower);
    let half_b = mower.half_implement();
    let mut pass = PassState::first(mower);
    loop {
        let snapshot: Vec<usize> = drv.world.weed_list().map(|w| w.id).collect();
        let below: Vec<usize> = drv
            .world
            .weed_list()
            .filter(|w| w.y < pass.y_p - half_b - Y_TOL)
            .map(|w| w.id)
            .collect();
        drv.checks.push(InvariantCheck {
            pass_index: pass.pass_index,
            kind: InvariantKind::PassStart,
            y_p: pass.y_p,
            violators: below,
        });

        pass.mode = Mode::OnTransit;
        let transit = transit_to(&drv.world.mower, &pass, pasture, mower);
        drv.run_plan(&transit, Mode::OnTransit)?;

        pass.mode = Mode::OnPass;
        let start = pass.start_pose(pasture);
        let mut cursor = drv.cursor(PathPlan::straight(start, pasture.length));
        let mut resume: Option<PathPlan> = None;
        let mut detours = 0;
        loop {
            if cursor.is_done() {
                match resume.take() {
                    Some(rest) => {
                        cursor = drv.cursor(rest);
                        pass.mode = Mode::OnPass;
                        continue;
                    }
                    None => break,
                }
            }
            if pass.mode == Mode::OnPass {
                if let Some(jump) = find_available_jump(&drv.world, &pass, pasture, mower) {
                    let end = Pose::new(jump.x_end, pass.y_p, pass.theta());
                    let remaining = pass.heading.dir() * (pass.x_finish(pasture) - jump.x_end);
                    resume = Some(PathPlan::straight(end, remaining.max(0.0)));
                    cursor = drv.cursor(jump_plan(&jump, &drv.world.mower, &pass));
                    pass.mode = Mode::OnJump;
                    detours += 1;
                }
            }
            drv.step(&mut cursor, pass.mode)?;
        }

        let missed: Vec<usize> = snapshot
            .into_iter()
            .filter(|&id| {
                let w = &drv.world.weeds[id];
                w.status != WeedStatus::Mowed && w.y < pass.y_p + half_b
            })
            .collect();
        drv.checks.push(InvariantCheck {
            pass_index: pass.pass_index,
            kind: InvariantKind::PassEnd,
            y_p: pass.y_p,
            violators: missed,
        });
        drv.passes.push(PassRecord {
            index: pass.pass_index,
            y_p: pass.y_p,
            heading: pass.heading,
            y_end: drv.world.mower.y,
            detours,
        });

        if is_terminated(drv.kind, &pass, &drv.world, pasture, mower, bcp_length) {
            return Ok(());
        }
        pass.y_p = next_pass_y(drv.kind, pass.y_p, drv.world.weed_list(), pasture, mower)?;
        pass.heading = pass.heading.reversed();
        pass.pass_index += 1;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::{PassHeading, Point};
    use crate::world::Weed;

    fn mower() -> MowerSpec {
        MowerSpec::default()
    }

    fn on_pass(x_m: f64, y_p: f64, pts: &[(f64, f64)]) -> (WorldState, PassState) {
        let weeds = pts.iter().enumerate().map(|(i, &(x, y))| Weed::new(i, x, y)).collect();
        let mut w = WorldState::new(Pose::new(x_m, y_p, 0.0), weeds);
        for weed in &mut w.weeds {
            weed.status = WeedStatus::Detected;
        }
        let pass = PassState {
            y_p,
            heading: PassHeading::East,
            pass_index: 0,
            mode: Mode::OnPass,
        };
        (w, pass)
    }

    /// Checks the three conditions directly for a single weed, independent
    /// of the search routine.
    fn brute_force_feasible(w: &WorldState, pass: &PassState, weed: Point, m: &MowerSpec) -> bool {
        let r = m.turn_radius;
        let dy = weed.y - pass.y_p;
        let span = if dy >= 4.0 * r { 0.0 } else { (4.0 * r * r - (dy - 2.0 * r).powi(2)).sqrt() };
        let (xs, xe) = (weed.x - span, weed.x + span);
        let x_m = w.mower.x;
        (0.0..m.step).contains(&(xs - x_m))
            && xe < x_m + m.fov_depth
            && !w.weeds.iter().any(|o| o.x > x_m && o.x < xe && (o.y - pass.y_p).abs() <= m.half_implement())
    }

    #[test]
    fn single_reachable_weed() {
        let m = mower();
        // Rise of 3 m with R = 2: half span sqrt(16 - 1).
        let xs = 10.0;
        let wx = xs + 15f64.sqrt();
        let (w, pass) = on_pass(xs - 0.05, 5.0, &[(wx, 8.0)]);
        let j = find_available_jump(&w, &pass, &PastureSpec::default(), &m).expect("jump");
        assert!((j.x_start - xs).abs() < 1e-12);
        assert!((j.x_end - (wx + 15f64.sqrt())).abs() < 1e-12);
        assert!(brute_force_feasible(&w, &pass, Point::new(wx, 8.0), &m));
    }

    #[test]
    fn pass_weed_in_skipped_strip_blocks_jump() {
        let m = mower();
        let wx = 10.0 + 15f64.sqrt();
        let (w, pass) = on_pass(9.95, 5.0, &[(wx, 8.0), (10.95, 5.0)]);
        assert!(find_available_jump(&w, &pass, &PastureSpec::default(), &m).is_none());
        assert!(!brute_force_feasible(&w, &pass, Point::new(wx, 8.0), &m));
    }

    #[test]
    fn strip_edge_weed_blocks_jump() {
        let m = mower();
        let wx = 10.0 + 15f64.sqrt();
        let (w, pass) = on_pass(9.95, 5.0, &[(wx, 8.0), (12.0, 4.0)]);
        assert!(find_available_jump(&w, &pass, &PastureSpec::default(), &m).is_none());
    }

    #[test]
    fn lower_weed_wins() {
        let m = mower();
        // Both starts land in the same step window ahead of the mower.
        let x_m = 10.0;
        let a = (x_m + 0.02 + 15f64.sqrt(), 8.0);
        let b = (x_m + 0.04 + 4.0, 9.0);
        let (w, pass) = on_pass(x_m, 5.0, &[b, a]);
        let j = find_available_jump(&w, &pass, &PastureSpec::default(), &m).expect("jump");
        assert_eq!(j.weed.y, 8.0);
    }

    #[test]
    fn start_outside_step_window_is_not_offered() {
        let m = mower();
        let wx = 10.0 + 15f64.sqrt();
        let (w, pass) = on_pass(9.85, 5.0, &[(wx, 8.0)]);
        assert!(find_available_jump(&w, &pass, &PastureSpec::default(), &m).is_none());
        let (w, pass) = on_pass(10.01, 5.0, &[(wx, 8.0)]);
        assert!(find_available_jump(&w, &pass, &PastureSpec::default(), &m).is_none());
    }

    #[test]
    fn end_beyond_view_depth_is_rejected() {
        let m = MowerSpec {
            fov_depth: 7.0,
            ..mower()
        };
        let wx = 10.0 + 15f64.sqrt();
        let (w, pass) = on_pass(9.95, 5.0, &[(wx, 8.0)]);
        assert!(find_available_jump(&w, &pass, &PastureSpec::default(), &m).is_none());
    }
}
