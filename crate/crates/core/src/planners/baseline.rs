use std::collections::VecDeque;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::geom::{dubins_shortest, PassHeading, PathPlan, Point, Pose};
use crate::tsp::heuristic_tour;
use crate::world::{MowerSpec, PastureSpec, WeedStatus, WorldEvent};

use super::driver::{Cursor, Driver};
use super::{Mode, PassRecord, PlannerError, Y_TOL};

/// A waypoint closer than this counts as reached.
pub const WAYPOINT_REACHED: f64 = 0.5;

/// Pass ordinates of a boustrophedon sweep with the given spacing.
pub fn bcp_pass_ys(pasture: &PastureSpec, spacing: f64) -> Vec<f64> {
    if spacing >= pasture.width {
        return vec![0.5 * pasture.width];
    }
    let half = 0.5 * spacing;
    let top = pasture.width - half;
    let n = ((pasture.width / spacing) - 1e-9).ceil().max(1.0) as usize;
    let mut ys: Vec<f64> = Vec::with_capacity(n);
    for i in 0..n {
        let y = (half + i as f64 * spacing).min(top);
        if ys.last().is_none_or(|&prev| y > prev + Y_TOL) {
            ys.push(y);
        }
    }
    ys
}

fn pass_heading(i: usize) -> PassHeading {
    if i.is_multiple_of(2) {
        PassHeading::East
    } else {
        PassHeading::West
    }
}

fn pass_start(pasture: &PastureSpec, y: f64, heading: PassHeading) -> Pose {
    let x = match heading {
        PassHeading::East => 0.0,
        PassHeading::West => pasture.length,
    };
    Pose::new(x, y, heading.theta())
}

/// Alternating straight passes joined by shortest Dubins turns.
pub fn build_bcp(pasture: &PastureSpec, spacing: f64, mower: &MowerSpec) -> PathPlan {
    let ys = bcp_pass_ys(pasture, spacing);
    let mut plan = PathPlan::default();
    let mut prev_end: Option<Pose> = None;
    for (i, &y) in ys.iter().enumerate() {
        let start = pass_start(pasture, y, pass_heading(i));
        if let Some(end) = prev_end {
            plan.append(dubins_shortest(&end, &start, mower.turn_radius));
        }
        let line = PathPlan::straight(start, pasture.length);
        prev_end = line.end_pose();
        plan.append(line);
    }
    plan
}

fn record_passes(drv: &mut Driver<'_>, ys: &[f64]) {
    for (i, &y) in ys.iter().enumerate() {
        drv.passes.push(PassRecord {
            index: i,
            y_p: y,
            heading: pass_heading(i),
            y_end: y,
            detours: 0,
        });
    }
}

pub(super) fn run_bcp(drv: &mut Driver<'_>) -> Result<(), PlannerError> {
    let spacing = drv.mower.implement_width;
    let plan = build_bcp(drv.pasture, spacing, drv.mower);
    drv.run_plan(&plan, Mode::OnPass)?;
    let ys = bcp_pass_ys(drv.pasture, spacing);
    record_passes(drv, &ys);
    Ok(())
}

fn bearing(from: Point, to: Point) -> f64 {
    (to.y - from.y).atan2(to.x - from.x)
}

/// View-width sweep, then an open tour over every weed still listed.
pub(super) fn run_bcp_tsp(drv: &mut Driver<'_>) -> Result<(), PlannerError> {
    let (pasture, mower) = (drv.pasture, drv.mower);
    let plan = build_bcp(pasture, mower.fov_width, mower);
    if let Some(first) = plan.start_pose() {
        let lead_in = dubins_shortest(&drv.world.mower, &first, mower.turn_radius);
        drv.run_plan(&lead_in, Mode::OnTransit)?;
    }
    drv.run_plan(&plan, Mode::OnPass)?;
    record_passes(drv, &bcp_pass_ys(pasture, mower.fov_width));

    let targets: Vec<(usize, Point)> = drv.world.weed_list().map(|w| (w.id, w.position())).collect();
    let points: Vec<Point> = targets.iter().map(|t| t.1).collect();
    let Ok(tour) = heuristic_tour(drv.world.mower.position(), &points) else {
        return Ok(());
    };
    let order: Vec<(usize, Point)> = tour.order.iter().map(|&i| targets[i]).collect();
    for (k, &(id, at)) in order.iter().enumerate() {
        if drv.world.weeds[id].status == WeedStatus::Mowed {
            continue;
        }
        let here = drv.world.mower.position();
        if here.distance(&at) <= Y_TOL {
            continue;
        }
        let next = order[k + 1..]
            .iter()
            .find(|(nid, _)| drv.world.weeds[*nid].status != WeedStatus::Mowed);
        let heading = match next {
            Some(&(_, p)) => bearing(at, p),
            None => bearing(here, at),
        };
        let leg = dubins_shortest(&drv.world.mower, &Pose::new(at.x, at.y, heading), mower.turn_radius);
        drv.run_plan(&leg, Mode::OnTransit)?;
    }
    Ok(())
}

enum Target {
    Weed(usize),
    Waypoint(Point),
}

fn random_waypoint(rng: &mut ChaCha8Rng, pasture: &PastureSpec) -> Point {
    let x = rng.random::<f64>() * pasture.length;
    let y = rng.random::<f64>() * pasture.width;
    Point::new(x, y)
}

fn leg_to(pose: &Pose, at: Point, mower: &MowerSpec) -> PathPlan {
    let heading = bearing(pose.position(), at);
    dubins_shortest(pose, &Pose::new(at.x, at.y, heading), mower.turn_radius)
}

/// Random search that drops everything to chase weeds in detection order.
/// Runs until the odometer reaches `budget`.
pub(super) fn run_react(drv: &mut Driver<'_>, budget: f64, seed: u64) -> Result<(), PlannerError> {
    let (pasture, mower) = (drv.pasture, drv.mower);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    // Keep planner draws independent of a weed field generated from the same seed.
    rng.set_stream(1);

    let mut queue: VecDeque<usize> = drv.world.weed_list().map(|w| w.id).collect();
    let mut waypoint = random_waypoint(&mut rng, pasture);
    let mut active: Option<(Target, Cursor)> = None;

    while budget - drv.world.odometer > Y_TOL {
        while queue
            .front()
            .is_some_and(|&id| drv.world.weeds[id].status == WeedStatus::Mowed)
        {
            queue.pop_front();
        }
        if active.is_none() {
            let target = match queue.front() {
                Some(&id) => Target::Weed(id),
                None => {
                    if drv.world.mower.position().distance(&waypoint) <= WAYPOINT_REACHED {
                        waypoint = random_waypoint(&mut rng, pasture);
                        continue;
                    }
                    Target::Waypoint(waypoint)
                }
            };
            let at = match target {
                Target::Weed(id) => drv.world.weeds[id].position(),
                Target::Waypoint(p) => p,
            };
            let leg = leg_to(&drv.world.mower, at, mower);
            if leg.length() <= Y_TOL {
                if let Target::Weed(_) = target {
                    queue.pop_front();
                } else {
                    waypoint = random_waypoint(&mut rng, pasture);
                }
                continue;
            }
            active = Some((target, drv.cursor(leg)));
        }

        let (target, cursor) = active.as_mut().expect("active leg");
        let events = drv.step_within(cursor, Mode::OnTransit, budget)?;
        let finished = cursor.is_done();
        for e in events {
            if let WorldEvent::Detected(id) = e {
                queue.push_back(id);
            }
        }
        let drop_leg = match target {
            Target::Weed(id) => {
                let mowed = drv.world.weeds[*id].status == WeedStatus::Mowed;
                if finished && !mowed {
                    queue.retain(|q| q != id);
                }
                finished || mowed
            }
            Target::Waypoint(p) => {
                let reached = drv.world.mower.position().distance(p) <= WAYPOINT_REACHED;
                if reached {
                    waypoint = random_waypoint(&mut rng, pasture);
                }
                let weeds_waiting = queue
                    .iter()
                    .any(|&id| drv.world.weeds[id].status != WeedStatus::Mowed);
                finished || reached || weeds_waiting
            }
        };
        if drop_leg {
            active = None;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pass_ordinates() {
        let p = PastureSpec::default();
        assert_eq!(bcp_pass_ys(&p, 12.0), vec![6.0, 18.0, 30.0, 34.0]);
        let full = bcp_pass_ys(&p, 2.0);
        assert_eq!(full.len(), 20);
        assert_eq!(full[0], 1.0);
        assert_eq!(*full.last().unwrap(), 39.0);
        assert_eq!(bcp_pass_ys(&p, 40.0), vec![20.0]);
        assert_eq!(bcp_pass_ys(&PastureSpec::new(36.0, 26.0), 1.3).len(), 20);
    }

    #[test]
    fn single_pass_plan_is_one_line() {
        let p = PastureSpec::default();
        let plan = build_bcp(&p, 40.0, &MowerSpec::default());
        assert_eq!(plan.segments().len(), 1);
        assert_eq!(plan.length(), 100.0);
    }

    #[test]
    fn full_plan_is_continuous_with_exact_straights() {
        let p = PastureSpec::default();
        let m = MowerSpec::default();
        let plan = build_bcp(&p, 2.0, &m);
        assert!(plan.is_g1_continuous(1e-9));
        let straight: f64 = plan
            .segments()
            .iter()
            .filter(|s| matches!(s, crate::geom::PathSegment::Line { .. }) && s.length() > 99.0)
            .map(|s| s.length())
            .sum();
        assert!((straight - 2000.0).abs() < 1e-9);
        let mut turns = 0.0;
        for i in 0..19 {
            let y = 1.0 + 2.0 * i as f64;
            let (a, b) = if i % 2 == 0 {
                (Pose::new(100.0, y, 0.0), Pose::new(100.0, y + 2.0, std::f64::consts::PI))
            } else {
                (Pose::new(0.0, y, std::f64::consts::PI), Pose::new(0.0, y + 2.0, 0.0))
            };
            turns += dubins_shortest(&a, &b, 2.0).length();
        }
        assert!((plan.length() - 2000.0 - turns).abs() < 1e-6);
    }
}
