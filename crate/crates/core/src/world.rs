//! Discrete-step pasture world: weed fields, field-of-view detection,
//! implement sweep mowing and odometry.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geom::{Point, Pose};

const BOUNDARY_EPS: f64 = 1e-12;

#[derive(Debug, Error, PartialEq)]
pub enum SimError {
    #[error("step of {requested:.6} m exceeds the step limit of {limit:.6} m")]
    StepTooLong { requested: f64, limit: f64 },
    #[error("invalid specification: {0}")]
    InvalidSpec(String),
}

/// Rectangular pasture with corners at `(0,0)` and `(length, width)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PastureSpec {
    #[serde(rename = "L")]
    pub length: f64,
    #[serde(rename = "W")]
    pub width: f64,
}

impl PastureSpec {
    pub fn new(length: f64, width: f64) -> Self {
        Self { length, width }
    }

    pub fn validate(&self) -> Result<(), SimError> {
        if !(self.length > 0.0 && self.width > 0.0) {
            return Err(SimError::InvalidSpec(format!(
                "pasture must have positive size, got {} x {}",
                self.length, self.width
            )));
        }
        Ok(())
    }

    pub fn contains(&self, p: Point) -> bool {
        (0.0..=self.length).contains(&p.x) && (0.0..=self.width).contains(&p.y)
    }
}

impl Default for PastureSpec {
    fn default() -> Self {
        Self::new(100.0, 40.0)
    }
}

/// Missing fields in JSON take the default values.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MowerSpec {
    #[serde(rename = "R")]
    pub turn_radius: f64,
    #[serde(rename = "B")]
    pub implement_width: f64,
    #[serde(rename = "v")]
    pub speed: f64,
    #[serde(rename = "Sd")]
    pub fov_depth: f64,
    #[serde(rename = "Sw")]
    pub fov_width: f64,
    #[serde(rename = "ds")]
    pub step: f64,
}

impl MowerSpec {
    pub fn validate(&self) -> Result<(), SimError> {
        let fields = [
            ("R", self.turn_radius),
            ("B", self.implement_width),
            ("v", self.speed),
            ("Sd", self.fov_depth),
            ("Sw", self.fov_width),
            ("ds", self.step),
        ];
        for (name, v) in fields {
            if !(v > 0.0 && v.is_finite()) {
                return Err(SimError::InvalidSpec(format!("{name} must be positive, got {v}")));
            }
        }
        if self.step > self.implement_width {
            return Err(SimError::InvalidSpec(format!(
                "step {} must be much smaller than implement width {}",
                self.step, self.implement_width
            )));
        }
        Ok(())
    }

    pub fn half_implement(&self) -> f64 {
        0.5 * self.implement_width
    }
}

impl Default for MowerSpec {
    fn default() -> Self {
        Self {
            turn_radius: 2.0,
            implement_width: 2.0,
            speed: 1.0,
            fov_depth: 12.0,
            fov_width: 12.0,
            step: 0.1,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum WeedStatus {
    Undetected,
    Detected,
    Mowed,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Weed {
    pub id: usize,
    pub x: f64,
    pub y: f64,
    #[serde(skip, default = "undetected")]
    pub status: WeedStatus,
}

fn undetected() -> WeedStatus {
    WeedStatus::Undetected
}

impl Weed {
    pub fn new(id: usize, x: f64, y: f64) -> Self {
        Self {
            id,
            x,
            y,
            status: WeedStatus::Undetected,
        }
    }

    pub fn position(&self) -> Point {
        Point::new(self.x, self.y)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "dist", rename_all = "lowercase")]
pub enum WeedDistribution {
    Uniform,
    #[serde(rename = "gauss")]
    GaussianClusters { sigma: f64 },
}

impl WeedDistribution {
    pub const DEFAULT_SIGMA: f64 = 3.0;

    pub fn name(&self) -> &'static str {
        match self {
            WeedDistribution::Uniform => "uniform",
            WeedDistribution::GaussianClusters { .. } => "gauss",
        }
    }

    pub fn sigma(&self) -> Option<f64> {
        match self {
            WeedDistribution::Uniform => None,
            WeedDistribution::GaussianClusters { sigma } => Some(*sigma),
        }
    }
}

fn uniform_point(rng: &mut ChaCha8Rng, pasture: &PastureSpec) -> (f64, f64) {
    let x = rng.random::<f64>() * pasture.length;
    let y = rng.random::<f64>() * pasture.width;
    (x, y)
}

/// Random weed field, deterministic in `seed`.
///
/// Clustered fields draw `ceil(n/5)` uniform cluster seeds first (they are
/// weeds too); every remaining weed picks a seed uniformly and is drawn from an
/// isotropic normal around it, redrawn until it falls inside the pasture.
pub fn generate_weeds(
    n: usize,
    distribution: WeedDistribution,
    pasture: &PastureSpec,
    seed: u64,
) -> Vec<Weed> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut weeds = Vec::with_capacity(n);
    match distribution {
        WeedDistribution::Uniform => {
            for id in 0..n {
                let (x, y) = uniform_point(&mut rng, pasture);
                weeds.push(Weed::new(id, x, y));
            }
        }
        WeedDistribution::GaussianClusters { sigma } => {
            let n_seeds = n.div_ceil(5);
            for id in 0..n_seeds {
                let (x, y) = uniform_point(&mut rng, pasture);
                weeds.push(Weed::new(id, x, y));
            }
            let normal = Normal::new(0.0, sigma).expect("sigma must be finite and nonnegative");
            for id in n_seeds..n {
                let anchor = weeds[rng.random_range(0..n_seeds)];
                loop {
                    let x = anchor.x + normal.sample(&mut rng);
                    let y = anchor.y + normal.sample(&mut rng);
                    if pasture.contains(Point::new(x, y)) {
                        weeds.push(Weed::new(id, x, y));
                        break;
                    }
                }
            }
        }
    }
    weeds
}

/// Point lies in the triangular field of view apexed at the mower front.
/// The boundary counts as inside.
pub fn fov_contains(mower: &Pose, spec: &MowerSpec, p: Point) -> bool {
    let (s, c) = mower.theta.sin_cos();
    let dx = p.x - mower.x;
    let dy = p.y - mower.y;
    let ahead = c * dx + s * dy;
    let lateral = -s * dx + c * dy;
    if ahead < -BOUNDARY_EPS || ahead > spec.fov_depth + BOUNDARY_EPS {
        return false;
    }
    let half = 0.5 * spec.fov_width * ahead / spec.fov_depth;
    lateral.abs() <= half + BOUNDARY_EPS
}

fn cross(o: Point, a: Point, b: Point) -> f64 {
    (a.x - o.x) * (b.y - o.y) - (a.y - o.y) * (b.x - o.x)
}

fn in_triangle(p: Point, a: Point, b: Point, c: Point) -> bool {
    let d1 = cross(a, b, p);
    let d2 = cross(b, c, p);
    let d3 = cross(c, a, p);
    let neg = d1 < -BOUNDARY_EPS || d2 < -BOUNDARY_EPS || d3 < -BOUNDARY_EPS;
    let pos = d1 > BOUNDARY_EPS || d2 > BOUNDARY_EPS || d3 > BOUNDARY_EPS;
    !(neg && pos)
}

fn on_segment(p: Point, a: Point, b: Point) -> bool {
    let len2 = (b.x - a.x).powi(2) + (b.y - a.y).powi(2);
    if len2 == 0.0 {
        return p.distance(&a) <= BOUNDARY_EPS;
    }
    let t = ((p.x - a.x) * (b.x - a.x) + (p.y - a.y) * (b.y - a.y)) / len2;
    let t = t.clamp(0.0, 1.0);
    let q = Point::new(a.x + t * (b.x - a.x), a.y + t * (b.y - a.y));
    p.distance(&q) <= BOUNDARY_EPS
}

/// End points of the implement bar, perpendicular to the heading.
fn implement_bar(pose: &Pose, half: f64) -> (Point, Point) {
    let (s, c) = pose.theta.sin_cos();
    (
        Point::new(pose.x + s * half, pose.y - c * half),
        Point::new(pose.x - s * half, pose.y + c * half),
    )
}

/// Point lies in the region swept by the implement between two poses.
pub fn swept_contains(from: &Pose, to: &Pose, half_width: f64, p: Point) -> bool {
    let (a0, a1) = implement_bar(from, half_width);
    let (b0, b1) = implement_bar(to, half_width);
    in_triangle(p, a0, a1, b1)
        || in_triangle(p, a0, b1, b0)
        || on_segment(p, a0, a1)
        || on_segment(p, b0, b1)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum WorldEvent {
    Detected(usize),
    Mowed(usize),
}

#[derive(Clone, Debug, PartialEq)]
pub struct WorldState {
    pub mower: Pose,
    pub weeds: Vec<Weed>,
    pub odometer: f64,
    pub clock: f64,
}

impl WorldState {
    /// Fresh world with every weed undetected and ids renumbered by index.
    pub fn new(mower: Pose, mut weeds: Vec<Weed>) -> Self {
        for (i, w) in weeds.iter_mut().enumerate() {
            w.id = i;
            w.status = WeedStatus::Undetected;
        }
        Self {
            mower,
            weeds,
            odometer: 0.0,
            clock: 0.0,
        }
    }

    /// Detect weeds in the field of view at the current pose.
    pub fn observe(&mut self, spec: &MowerSpec) -> Vec<WorldEvent> {
        let mut events = Vec::new();
        let mower = self.mower;
        for w in &mut self.weeds {
            if w.status == WeedStatus::Undetected && fov_contains(&mower, spec, w.position()) {
                w.status = WeedStatus::Detected;
                events.push(WorldEvent::Detected(w.id));
            }
        }
        events
    }

    /// Move to `next`, covering `distance` metres of path, then detect and mow.
    ///
    /// `distance` is the travelled arc length; it may not be shorter than the
    /// straight-line displacement nor longer than one step.
    pub fn advance(
        &mut self,
        next: Pose,
        distance: f64,
        spec: &MowerSpec,
    ) -> Result<Vec<WorldEvent>, SimError> {
        let chord = self.mower.position().distance(&next.position());
        let limit = spec.step + 1e-9;
        if distance > limit || chord > limit {
            return Err(SimError::StepTooLong {
                requested: distance.max(chord),
                limit: spec.step,
            });
        }
        let prev = self.mower;
        self.mower = next;
        self.odometer += distance.max(chord);
        self.clock += distance.max(chord) / spec.speed;

        let mut events = self.observe(spec);
        let half = spec.half_implement();
        let reach = chord + half + 1e-9;
        for w in &mut self.weeds {
            if w.status == WeedStatus::Mowed {
                continue;
            }
            let p = w.position();
            if p.distance(&next.position()) > reach {
                continue;
            }
            if swept_contains(&prev, &next, half, p) {
                if w.status == WeedStatus::Undetected {
                    events.push(WorldEvent::Detected(w.id));
                }
                w.status = WeedStatus::Mowed;
                events.push(WorldEvent::Mowed(w.id));
            }
        }
        Ok(events)
    }

    /// The weed list: detected and not yet mowed.
    pub fn weed_list(&self) -> impl Iterator<Item = &Weed> {
        self.weeds.iter().filter(|w| w.status == WeedStatus::Detected)
    }

    pub fn count(&self, status: WeedStatus) -> usize {
        self.weeds.iter().filter(|w| w.status == status).count()
    }

    /// Weeds that have been seen at some point, mowed or not.
    pub fn detected_total(&self) -> usize {
        self.weeds.len() - self.count(WeedStatus::Undetected)
    }
}
