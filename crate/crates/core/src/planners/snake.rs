use crate::geom::{csc_constrained, PathPlan, Pose};
use crate::world::{MowerSpec, PastureSpec, WorldState};

use super::driver::Driver;
use super::{
    candidate_weeds, is_terminated, next_pass_y, transit_to, ConstraintMode, Mode, PassRecord, PassState,
    PlannerError, PlannerKind, Y_TOL,
};

/// Sub-path to the nearest weed (along the pass) that admits one.
///
/// Weeds above the mower are reached with the climbing word for the pass
/// direction, weeds below with the descending one, and weeds dead level with
/// a straight line. A sub-path must stay on the pasture.
pub fn find_valid_subpath(
    world: &WorldState,
    pass: &PassState,
    pasture: &PastureSpec,
    mower: &MowerSpec,
    mode: ConstraintMode,
) -> Option<PathPlan> {
    let from = world.mower;
    let dir = pass.heading.dir();
    let mut candidates = candidate_weeds(world, pass, mode, mower);
    candidates.sort_by(|a, b| {
        (a.x - from.x)
            .abs()
            .total_cmp(&(b.x - from.x).abs())
            .then(a.y.total_cmp(&b.y))
            .then(a.id.cmp(&b.id))
    });
    for w in candidates {
        let dy = w.y - from.y;
        let ahead = dir * (w.x - from.x);
        if ahead <= 0.0 {
            continue;
        }
        let plan = if dy.abs() <= Y_TOL {
            PathPlan::straight(Pose::new(from.x, from.y, pass.theta()), ahead)
        } else {
            let word = if dy > 0.0 {
                pass.heading.climb_word()
            } else {
                pass.heading.descend_word()
            };
            let goal = Pose::new(w.x, w.y, pass.theta());
            match csc_constrained(&from, &goal, word, mower.turn_radius) {
                Some(p) => p,
                None => continue,
            }
        };
        let inside = plan
            .bounds()
            .is_some_and(|b| b.within(0.0, 0.0, pasture.length, pasture.width, Y_TOL));
        if inside {
            return Some(plan);
        }
    }
    None
}

fn constraint_for(kind: PlannerKind) -> ConstraintMode {
    match kind {
        PlannerKind::SnakeStaticLimited => ConstraintMode::Fprime,
        _ => ConstraintMode::F,
    }
}

pub(super) fn run(drv: &mut Driver<'_>, bcp_length: f64) -> Result<(), PlannerError> {
    let (pasture, mower) = (drv.pasture, drv.mower);
    let constraint = constraint_for(drv.kind);
    let mut pass = PassState::first(mower);
    loop {
        pass.mode = Mode::OnTransit;
        let transit = transit_to(&drv.world.mower, &pass, pasture, mower);
        drv.run_plan(&transit, Mode::OnTransit)?;

        pass.mode = Mode::OnPass;
        let start = pass.start_pose(pasture);
        let mut cursor = drv.cursor(PathPlan::straight(start, pasture.length));
        let mut detours = 0;
        loop {
            if cursor.is_done() {
                if pass.mode == Mode::OnWriggle {
                    // Carry on straight at the new height to the pasture edge.
                    let here = drv.world.mower;
                    let rest = pass.heading.dir() * (pass.x_finish(pasture) - here.x);
                    cursor = drv.cursor(PathPlan::straight(
                        Pose::new(here.x, here.y, pass.theta()),
                        rest.max(0.0),
                    ));
                    pass.mode = Mode::OnPass;
                    continue;
                }
                break;
            }
            if pass.mode == Mode::OnPass {
                if let Some(sub) = find_valid_subpath(&drv.world, &pass, pasture, mower, constraint) {
                    cursor = drv.cursor(sub);
                    pass.mode = Mode::OnWriggle;
                    detours += 1;
                }
            }
            drv.step(&mut cursor, pass.mode)?;
        }

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
