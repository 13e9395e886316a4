//! Curvature-constrained path geometry.
//!
//! Paths are built from minimum-radius circular arcs and straight lines. The
//! module provides the six-word Dubins shortest path, single constrained
//! `LSR`/`RSL` words, the tangent-circle jump detour used by the JUMP planner,
//! and fixed-resolution sampling of any [`PathPlan`].

use std::f64::consts::{FRAC_PI_2, PI, TAU};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Tolerance for pose continuity between consecutive segments.
pub const POSE_TOL: f64 = 1e-9;
/// Tolerance for comparing path lengths.
pub const LENGTH_TOL: f64 = 1e-6;

// Sweeps this close to a full turn come from rounding, not from a real loop.
const SWEEP_SNAP: f64 = 1e-9;

#[derive(Debug, Error, PartialEq)]
pub enum GeomError {
    #[error("sampling resolution must be positive, got {0}")]
    InvalidResolution(f64),
}

/// Wraps an angle into `[0, 2π)`.
pub fn normalize_angle(a: f64) -> f64 {
    let r = a.rem_euclid(TAU);
    if r >= TAU {
        0.0
    } else {
        r
    }
}

/// Smallest signed difference `a - b`, in `(-π, π]`.
pub fn angle_diff(a: f64, b: f64) -> f64 {
    let d = normalize_angle(a - b);
    if d > PI {
        d - TAU
    } else {
        d
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn distance(&self, other: &Point) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }

    fn offset(&self, heading: f64, dist: f64) -> Point {
        Point::new(self.x + dist * heading.cos(), self.y + dist * heading.sin())
    }

    fn midpoint(&self, other: &Point) -> Point {
        Point::new(0.5 * (self.x + other.x), 0.5 * (self.y + other.y))
    }

    fn bearing_to(&self, other: &Point) -> f64 {
        (other.y - self.y).atan2(other.x - self.x)
    }
}

/// Planar configuration. `theta` is kept in `[0, 2π)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Pose {
    pub x: f64,
    pub y: f64,
    pub theta: f64,
}

impl Pose {
    pub fn new(x: f64, y: f64, theta: f64) -> Self {
        Self {
            x,
            y,
            theta: normalize_angle(theta),
        }
    }

    pub fn position(&self) -> Point {
        Point::new(self.x, self.y)
    }

    /// Position and heading agree with `other` within `tol`.
    pub fn approx_eq(&self, other: &Pose, tol: f64) -> bool {
        self.position().distance(&other.position()) <= tol
            && angle_diff(self.theta, other.theta).abs() <= tol
    }
}

impl fmt::Display for Pose {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({:.4}, {:.4}, {:.4})", self.x, self.y, self.theta)
    }
}

/// Direction of rotation of an arc.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Turn {
    /// Counter-clockwise.
    Left,
    /// Clockwise.
    Right,
}

impl Turn {
    fn sign(self) -> f64 {
        match self {
            Turn::Left => 1.0,
            Turn::Right => -1.0,
        }
    }

    fn opposite(self) -> Turn {
        match self {
            Turn::Left => Turn::Right,
            Turn::Right => Turn::Left,
        }
    }

    /// Center of the turning circle of this direction for a vehicle at `pose`.
    fn center(self, pose: &Pose, radius: f64) -> Point {
        pose.position()
            .offset(pose.theta + self.sign() * FRAC_PI_2, radius)
    }

    /// Nonnegative rotation needed to go from heading `from` to `to`.
    fn sweep(self, from: f64, to: f64) -> f64 {
        let s = match self {
            Turn::Left => normalize_angle(to - from),
            Turn::Right => normalize_angle(from - to),
        };
        if s > TAU - SWEEP_SNAP {
            0.0
        } else {
            s
        }
    }
}

/// Axis-aligned bounding box.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Bounds {
    pub min: Point,
    pub max: Point,
}

impl Bounds {
    fn of_point(p: Point) -> Self {
        Self { min: p, max: p }
    }

    fn include(&mut self, p: Point) {
        self.min.x = self.min.x.min(p.x);
        self.min.y = self.min.y.min(p.y);
        self.max.x = self.max.x.max(p.x);
        self.max.y = self.max.y.max(p.y);
    }

    fn union(&mut self, other: &Bounds) {
        self.include(other.min);
        self.include(other.max);
    }

    /// True when this box lies inside `[x0, x1] × [y0, y1]` up to `tol`.
    pub fn within(&self, x0: f64, y0: f64, x1: f64, y1: f64, tol: f64) -> bool {
        self.min.x >= x0 - tol
            && self.min.y >= y0 - tol
            && self.max.x <= x1 + tol
            && self.max.y <= y1 + tol
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum PathSegment {
    /// `start_angle` is the polar angle of the start point about `center`;
    /// `sweep` is nonnegative and measured in the direction of `turn`.
    Arc {
        center: Point,
        radius: f64,
        turn: Turn,
        start_angle: f64,
        sweep: f64,
    },
    Line {
        start: Point,
        end: Point,
        heading: f64,
    },
}

impl PathSegment {
    pub fn length(&self) -> f64 {
        match self {
            PathSegment::Arc { radius, sweep, .. } => radius * sweep,
            PathSegment::Line { start, end, .. } => start.distance(end),
        }
    }

    /// Pose at arc length `s` from the segment start, clamped to the segment.
    pub fn pose_at(&self, s: f64) -> Pose {
        match *self {
            PathSegment::Arc {
                center,
                radius,
                turn,
                start_angle,
                sweep,
            } => {
                let swept = (s / radius).clamp(0.0, sweep);
                let phi = start_angle + turn.sign() * swept;
                let p = center.offset(phi, radius);
                Pose::new(p.x, p.y, phi + turn.sign() * FRAC_PI_2)
            }
            PathSegment::Line {
                start,
                end,
                heading,
            } => {
                let len = start.distance(&end);
                if s >= len {
                    Pose::new(end.x, end.y, heading)
                } else {
                    let p = start.offset(heading, s.max(0.0));
                    Pose::new(p.x, p.y, heading)
                }
            }
        }
    }

    pub fn start_pose(&self) -> Pose {
        self.pose_at(0.0)
    }

    pub fn end_pose(&self) -> Pose {
        self.pose_at(self.length())
    }

    pub fn bounds(&self) -> Bounds {
        match *self {
            PathSegment::Arc {
                center,
                radius,
                turn,
                start_angle,
                sweep,
            } => {
                let mut b = Bounds::of_point(self.start_pose().position());
                b.include(self.end_pose().position());
                for k in 0..4 {
                    let axis = k as f64 * FRAC_PI_2;
                    if turn.sweep(start_angle, axis) <= sweep {
                        b.include(center.offset(axis, radius));
                    }
                }
                b
            }
            PathSegment::Line { start, end, .. } => {
                let mut b = Bounds::of_point(start);
                b.include(end);
                b
            }
        }
    }
}

/// Ordered arc/line segments with G1 continuity between them.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct PathPlan {
    segments: Vec<PathSegment>,
    length: f64,
}

impl PathPlan {
    pub fn new(segments: Vec<PathSegment>) -> Self {
        let length = segments.iter().map(PathSegment::length).sum();
        Self { segments, length }
    }

    /// Straight line from `start` along its heading.
    pub fn straight(start: Pose, length: f64) -> Self {
        let end = start.position().offset(start.theta, length.max(0.0));
        Self::new(vec![PathSegment::Line {
            start: start.position(),
            end,
            heading: start.theta,
        }])
    }

    pub fn segments(&self) -> &[PathSegment] {
        &self.segments
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    pub fn is_empty(&self) -> bool {
        self.segments.is_empty()
    }

    pub fn start_pose(&self) -> Option<Pose> {
        self.segments.first().map(PathSegment::start_pose)
    }

    pub fn end_pose(&self) -> Option<Pose> {
        self.segments.last().map(PathSegment::end_pose)
    }

    /// Pose at arc length `s`, clamped to `[0, length]`.
    pub fn pose_at(&self, s: f64) -> Option<Pose> {
        let mut rem = s.max(0.0);
        let last = self.segments.len().checked_sub(1)?;
        for (i, seg) in self.segments.iter().enumerate() {
            let len = seg.length();
            if rem <= len || i == last {
                return Some(seg.pose_at(rem));
            }
            rem -= len;
        }
        None
    }

    pub fn append(&mut self, other: PathPlan) {
        self.length += other.length;
        self.segments.extend(other.segments);
    }

    pub fn then(mut self, other: PathPlan) -> Self {
        self.append(other);
        self
    }

    pub fn bounds(&self) -> Option<Bounds> {
        let mut iter = self.segments.iter();
        let mut b = iter.next()?.bounds();
        for seg in iter {
            b.union(&seg.bounds());
        }
        Some(b)
    }

    /// Every segment ends where the next one starts, in position and heading.
    pub fn is_g1_continuous(&self, tol: f64) -> bool {
        self.segments
            .windows(2)
            .all(|w| w[0].end_pose().approx_eq(&w[1].start_pose(), tol))
    }
}

/// Incrementally lays down segments from a starting pose.
struct PlanBuilder {
    pose: Pose,
    radius: f64,
    segments: Vec<PathSegment>,
}

impl PlanBuilder {
    fn new(pose: Pose, radius: f64) -> Self {
        Self {
            pose,
            radius,
            segments: Vec::with_capacity(3),
        }
    }

    fn arc(mut self, turn: Turn, sweep: f64) -> Self {
        let seg = PathSegment::Arc {
            center: turn.center(&self.pose, self.radius),
            radius: self.radius,
            turn,
            start_angle: normalize_angle(self.pose.theta - turn.sign() * FRAC_PI_2),
            sweep,
        };
        self.pose = seg.end_pose();
        self.segments.push(seg);
        self
    }

    fn line(mut self, length: f64) -> Self {
        let start = self.pose.position();
        let seg = PathSegment::Line {
            start,
            end: start.offset(self.pose.theta, length),
            heading: self.pose.theta,
        };
        self.pose = seg.end_pose();
        self.segments.push(seg);
        self
    }

    fn build(self) -> PathPlan {
        PathPlan::new(self.segments)
    }
}

/// The six Dubins words, in tie-break order.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum DubinsWord {
    Lsl,
    Rsr,
    Lsr,
    Rsl,
    Rlr,
    Lrl,
}

impl DubinsWord {
    pub const ALL: [DubinsWord; 6] = [
        DubinsWord::Lsl,
        DubinsWord::Rsr,
        DubinsWord::Lsr,
        DubinsWord::Rsl,
        DubinsWord::Rlr,
        DubinsWord::Lrl,
    ];

    /// Turn directions of the first and last arcs.
    pub fn outer_turns(self) -> (Turn, Turn) {
        use DubinsWord::*;
        match self {
            Lsl | Lrl => (Turn::Left, Turn::Left),
            Rsr | Rlr => (Turn::Right, Turn::Right),
            Lsr => (Turn::Left, Turn::Right),
            Rsl => (Turn::Right, Turn::Left),
        }
    }

    pub fn is_ccc(self) -> bool {
        matches!(self, DubinsWord::Rlr | DubinsWord::Lrl)
    }
}

/// Turn-straight-turn path for the given outer turns, or `None` when the
/// inner tangent does not exist (turning circles closer than `2R`).
fn solve_csc(start: &Pose, goal: &Pose, radius: f64, first: Turn, last: Turn) -> Option<PathPlan> {
    let c1 = first.center(start, radius);
    let c2 = last.center(goal, radius);
    let d = c1.distance(&c2);
    let phi = c1.bearing_to(&c2);
    let (heading, line) = if first == last {
        if d < 1e-12 {
            (start.theta, 0.0)
        } else {
            (phi, d)
        }
    } else {
        let diameter = 2.0 * radius;
        if d < diameter - POSE_TOL {
            return None;
        }
        let line = (d * d - diameter * diameter).max(0.0).sqrt();
        let tilt = diameter.atan2(line);
        match first {
            Turn::Left => (phi + tilt, line),
            Turn::Right => (phi - tilt, line),
        }
    };
    Some(
        PlanBuilder::new(*start, radius)
            .arc(first, first.sweep(start.theta, heading))
            .line(line)
            .arc(last, last.sweep(heading, goal.theta))
            .build(),
    )
}

/// Turn-turn-turn path; both placements of the middle circle are tried and
/// the shorter one kept.
fn solve_ccc(start: &Pose, goal: &Pose, radius: f64, outer: Turn) -> Option<PathPlan> {
    let c1 = outer.center(start, radius);
    let c2 = outer.center(goal, radius);
    let d = c1.distance(&c2);
    if d > 4.0 * radius + POSE_TOL {
        return None;
    }
    let half = 0.5 * d;
    let h = (4.0 * radius * radius - half * half).max(0.0).sqrt();
    let axis = if d < 1e-12 {
        start.theta
    } else {
        c1.bearing_to(&c2)
    };
    let mid = c1.midpoint(&c2);
    let inner = outer.opposite();
    let mut best: Option<PathPlan> = None;
    for side in [1.0, -1.0] {
        let c3 = mid.offset(axis + side * FRAC_PI_2, h);
        let t1 = c1.midpoint(&c3);
        let t2 = c3.midpoint(&c2);
        let h1 = c1.bearing_to(&t1) + outer.sign() * FRAC_PI_2;
        let h2 = c3.bearing_to(&t2) + inner.sign() * FRAC_PI_2;
        let plan = PlanBuilder::new(*start, radius)
            .arc(outer, outer.sweep(start.theta, h1))
            .arc(inner, inner.sweep(h1, h2))
            .arc(outer, outer.sweep(h2, goal.theta))
            .build();
        if best.as_ref().is_none_or(|b| plan.length() < b.length()) {
            best = Some(plan);
        }
    }
    best
}

/// Path of a single Dubins word, if that word connects the two poses.
pub fn dubins_word(start: &Pose, goal: &Pose, radius: f64, word: DubinsWord) -> Option<PathPlan> {
    assert!(radius > 0.0, "turn radius must be positive");
    let (first, last) = word.outer_turns();
    if word.is_ccc() {
        solve_ccc(start, goal, radius, first)
    } else {
        solve_csc(start, goal, radius, first, last)
    }
}

/// Shortest curvature-constrained forward path between two poses.
///
/// Exact ties are resolved by [`DubinsWord::ALL`] order.
pub fn dubins_shortest(start: &Pose, goal: &Pose, radius: f64) -> PathPlan {
    dubins_shortest_with_word(start, goal, radius).1
}

pub fn dubins_shortest_with_word(start: &Pose, goal: &Pose, radius: f64) -> (DubinsWord, PathPlan) {
    let mut best: Option<(DubinsWord, PathPlan)> = None;
    for word in DubinsWord::ALL {
        if let Some(plan) = dubins_word(start, goal, radius, word) {
            if best.as_ref().is_none_or(|(_, b)| plan.length() < b.length()) {
                best = Some((word, plan));
            }
        }
    }
    // LSL and RSR exist for every pair of poses.
    best.expect("an outer-tangent word always exists")
}

/// The two opposite-turn words used by jumps and wriggles.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum CscWord {
    Lsr,
    Rsl,
}

impl From<CscWord> for DubinsWord {
    fn from(w: CscWord) -> Self {
        match w {
            CscWord::Lsr => DubinsWord::Lsr,
            CscWord::Rsl => DubinsWord::Rsl,
        }
    }
}

/// The unique `LSR` or `RSL` path, or `None` when its turning circles are
/// closer than `2R`. Segments are always arc, line, arc.
pub fn csc_constrained(start: &Pose, goal: &Pose, word: CscWord, radius: f64) -> Option<PathPlan> {
    dubins_word(start, goal, radius, word.into())
}

/// Travel direction of a boustrophedon pass.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum PassHeading {
    /// `θ = 0`, travelling towards `+x`.
    East,
    /// `θ = π`, travelling towards `-x`.
    West,
}

impl PassHeading {
    pub fn theta(self) -> f64 {
        match self {
            PassHeading::East => 0.0,
            PassHeading::West => PI,
        }
    }

    /// `+1` for east, `-1` for west.
    pub fn dir(self) -> f64 {
        match self {
            PassHeading::East => 1.0,
            PassHeading::West => -1.0,
        }
    }

    pub fn reversed(self) -> Self {
        match self {
            PassHeading::East => PassHeading::West,
            PassHeading::West => PassHeading::East,
        }
    }

    /// Word that climbs to a point above the pass while keeping this heading.
    pub fn climb_word(self) -> CscWord {
        match self {
            PassHeading::East => CscWord::Lsr,
            PassHeading::West => CscWord::Rsl,
        }
    }

    /// Word that descends to a point below while keeping this heading.
    pub fn descend_word(self) -> CscWord {
        match self {
            PassHeading::East => CscWord::Rsl,
            PassHeading::West => CscWord::Lsr,
        }
    }
}

/// Detour off a pass: up to a weed and back down, both ends on the pass line.
#[derive(Clone, Debug, PartialEq)]
pub struct Jump {
    pub x_start: f64,
    pub x_end: f64,
    pub weed: Point,
    pub up_path: PathPlan,
    pub down_path: PathPlan,
}

impl Jump {
    pub fn length(&self) -> f64 {
        self.up_path.length() + self.down_path.length()
    }

    /// Up and down paths joined into one plan.
    pub fn plan(&self) -> PathPlan {
        self.up_path.clone().then(self.down_path.clone())
    }
}

/// Horizontal distance between a jump's start and its weed.
///
/// Chosen so the start-side and weed-side turning circles touch in a single
/// point. Above `4R` the circles cannot touch with both centers on the
/// vertical through the weed, so the start is placed directly below the weed.
pub fn jump_half_span(dy: f64, radius: f64) -> Option<f64> {
    if dy <= 0.0 {
        return None;
    }
    let diameter = 2.0 * radius;
    if dy >= 2.0 * diameter {
        return Some(0.0);
    }
    let gap = dy - diameter;
    Some((diameter * diameter - gap * gap).max(0.0).sqrt())
}

/// Tangent-circle jump from the pass `y = y_p` to `weed` and back.
pub fn build_jump(weed: Point, y_p: f64, heading: PassHeading, radius: f64) -> Option<Jump> {
    let half = jump_half_span(weed.y - y_p, radius)?;
    build_jump_from(weed.x - heading.dir() * half, weed, y_p, heading, radius)
}

/// Jump starting at a given abscissa on the pass; the end is mirrored about
/// the weed. `None` if the start is too close for the climbing word.
pub fn build_jump_from(
    x_start: f64,
    weed: Point,
    y_p: f64,
    heading: PassHeading,
    radius: f64,
) -> Option<Jump> {
    if weed.y <= y_p {
        return None;
    }
    let theta = heading.theta();
    let x_end = 2.0 * weed.x - x_start;
    let start = Pose::new(x_start, y_p, theta);
    let apex = Pose::new(weed.x, weed.y, theta);
    let end = Pose::new(x_end, y_p, theta);
    let up_path = csc_constrained(&start, &apex, heading.climb_word(), radius)?;
    let down_path = csc_constrained(&apex, &end, heading.descend_word(), radius)?;
    Some(Jump {
        x_start,
        x_end,
        weed,
        up_path,
        down_path,
    })
}

/// Number of resolution steps along a path of length `length`.
pub(crate) fn step_count(length: f64, ds: f64) -> usize {
    (length / ds - 1e-9).ceil().max(0.0) as usize
}

/// Arc length of the `k`-th sample; the last one lands exactly on `length`.
pub(crate) fn step_arclength(k: usize, length: f64, ds: f64) -> f64 {
    (k as f64 * ds).min(length)
}

/// Poses every `ds` of arc length, plus the exact endpoint.
pub fn sample_path(path: &PathPlan, ds: f64) -> Result<Vec<Pose>, GeomError> {
    if ds.is_nan() || ds <= 0.0 {
        return Err(GeomError::InvalidResolution(ds));
    }
    let Some(first) = path.start_pose() else {
        return Ok(Vec::new());
    };
    let n = step_count(path.length(), ds);
    let mut out = Vec::with_capacity(n + 1);
    out.push(first);
    for k in 1..=n {
        let s = step_arclength(k, path.length(), ds);
        out.extend(path.pose_at(s));
    }
    Ok(out)
}
