//! Online and offline mower planners behind one episode runner.
//!
//! Every planner drives the mower through [`WorldState::advance`] one
//! resolution step at a time, so detection and mowing are simulated the same
//! way for all of them.

mod baseline;
mod driver;
mod jump;
mod snake;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geom::{dubins_shortest, PassHeading, PathPlan, Pose};
use crate::world::{MowerSpec, PastureSpec, SimError, Weed, WorldState};

pub use baseline::build_bcp;
pub use jump::find_available_jump;
pub use snake::find_valid_subpath;

/// Tolerance for comparing pass ordinates and weed coordinates.
pub const Y_TOL: f64 = 1e-9;

/// Odometer multiple of the boustrophedon length at which an episode is
/// declared runaway.
pub const GUARD_FACTOR: f64 = 5.0;

#[derive(Debug, Error, PartialEq)]
pub enum PlannerError {
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error("{kind} did not terminate: odometer {odometer:.1} m passed the {limit:.1} m guard")]
    NonTermination {
        kind: PlannerKind,
        odometer: f64,
        limit: f64,
    },
    #[error("{0} has no pass spacing rule")]
    NoSpacingRule(PlannerKind),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum PlannerKind {
    Bcp,
    BcpTsp,
    React,
    JumpHigh,
    JumpLow,
    SnakeStatic,
    SnakeStaticLimited,
    SnakeDynamic,
}

impl PlannerKind {
    pub const ALL: [PlannerKind; 8] = [
        PlannerKind::Bcp,
        PlannerKind::BcpTsp,
        PlannerKind::React,
        PlannerKind::JumpHigh,
        PlannerKind::JumpLow,
        PlannerKind::SnakeStatic,
        PlannerKind::SnakeStaticLimited,
        PlannerKind::SnakeDynamic,
    ];

    pub fn name(self) -> &'static str {
        match self {
            PlannerKind::Bcp => "BCP",
            PlannerKind::BcpTsp => "BCP_TSP",
            PlannerKind::React => "REACT",
            PlannerKind::JumpHigh => "JUMP_HIGH",
            PlannerKind::JumpLow => "JUMP_LOW",
            PlannerKind::SnakeStatic => "SNAKE_STATIC",
            PlannerKind::SnakeStaticLimited => "SNAKE_STATIC_LIMITED",
            PlannerKind::SnakeDynamic => "SNAKE_DYNAMIC",
        }
    }

    pub fn is_jump(self) -> bool {
        matches!(self, PlannerKind::JumpHigh | PlannerKind::JumpLow)
    }

    pub fn is_snake(self) -> bool {
        matches!(
            self,
            PlannerKind::SnakeStatic | PlannerKind::SnakeStaticLimited | PlannerKind::SnakeDynamic
        )
    }
}

impl fmt::Display for PlannerKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Error, PartialEq)]
#[error("unknown planner `{0}`")]
pub struct UnknownPlanner(pub String);

impl FromStr for PlannerKind {
    type Err = UnknownPlanner;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let key = s.trim().to_ascii_uppercase().replace('-', "_");
        let kind = match key.as_str() {
            "BCP" => PlannerKind::Bcp,
            "BCP_TSP" | "FOV_TSP" => PlannerKind::BcpTsp,
            "REACT" => PlannerKind::React,
            "JUMP_HIGH" | "JH" => PlannerKind::JumpHigh,
            "JUMP_LOW" | "JL" => PlannerKind::JumpLow,
            "SNAKE_STATIC" | "SS" => PlannerKind::SnakeStatic,
            "SNAKE_STATIC_LIMITED" | "SSL" => PlannerKind::SnakeStaticLimited,
            "SNAKE_DYNAMIC" | "SD" => PlannerKind::SnakeDynamic,
            _ => return Err(UnknownPlanner(s.to_string())),
        };
        Ok(kind)
    }
}

/// Which filter of the weed list a planner searches.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ConstraintMode {
    /// Ahead, above the implement reach and below the top of the view.
    C,
    /// Ahead and below the top of the view.
    F,
    /// As `F`, and no more than one and a half view widths below the pass.
    Fprime,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Mode {
    OnTransit,
    OnPass,
    OnJump,
    OnWriggle,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PassState {
    pub y_p: f64,
    pub heading: PassHeading,
    pub pass_index: usize,
    pub mode: Mode,
}

impl PassState {
    pub fn first(mower: &MowerSpec) -> Self {
        Self {
            y_p: mower.half_implement(),
            heading: PassHeading::East,
            pass_index: 0,
            mode: Mode::OnTransit,
        }
    }

    pub fn theta(&self) -> f64 {
        self.heading.theta()
    }

    /// Abscissa where a pass in this direction begins.
    pub fn x_begin(&self, pasture: &PastureSpec) -> f64 {
        match self.heading {
            PassHeading::East => 0.0,
            PassHeading::West => pasture.length,
        }
    }

    pub fn x_finish(&self, pasture: &PastureSpec) -> f64 {
        match self.heading {
            PassHeading::East => pasture.length,
            PassHeading::West => 0.0,
        }
    }

    pub fn start_pose(&self, pasture: &PastureSpec) -> Pose {
        Pose::new(self.x_begin(pasture), self.y_p, self.theta())
    }
}

/// The mower's initial pose: bottom-left corner, centred on the first pass.
pub fn initial_pose(mower: &MowerSpec) -> Pose {
    Pose::new(0.0, mower.half_implement(), 0.0)
}

/// Filter of the weed list under the given constraint set. All comparisons
/// are strict.
pub fn candidate_weeds(
    world: &WorldState,
    pass: &PassState,
    mode: ConstraintMode,
    mower: &MowerSpec,
) -> Vec<Weed> {
    let x_m = world.mower.x;
    let dir = pass.heading.dir();
    let top = pass.y_p + 0.5 * mower.fov_width;
    world
        .weed_list()
        .filter(|w| dir * (w.x - x_m) > 0.0 && w.y < top)
        .filter(|w| match mode {
            ConstraintMode::C => w.y > pass.y_p + mower.half_implement(),
            ConstraintMode::F => true,
            ConstraintMode::Fprime => w.y > pass.y_p - 1.5 * mower.fov_width,
        })
        .copied()
        .collect()
}

/// Ordinate of the next pass.
pub fn next_pass_y<'a, I>(
    kind: PlannerKind,
    y_p: f64,
    weeds: I,
    pasture: &PastureSpec,
    mower: &MowerSpec,
) -> Result<f64, PlannerError>
where
    I: IntoIterator<Item = &'a Weed>,
{
    let half_b = mower.half_implement();
    let top = pasture.width - half_b;
    let lowest = weeds
        .into_iter()
        .map(|w| w.y + half_b)
        .fold(f64::INFINITY, f64::min);
    let half_sw = 0.5 * mower.fov_width;
    let y = match kind {
        PlannerKind::JumpHigh | PlannerKind::SnakeDynamic => lowest.min(y_p + half_sw + half_b),
        PlannerKind::JumpLow => lowest.min(y_p + half_sw),
        PlannerKind::SnakeStatic | PlannerKind::SnakeStaticLimited => y_p + half_sw + half_b,
        PlannerKind::Bcp => y_p + mower.implement_width,
        PlannerKind::BcpTsp | PlannerKind::React => return Err(PlannerError::NoSpacingRule(kind)),
    };
    Ok(y.min(top))
}

fn is_top_pass(y_p: f64, pasture: &PastureSpec, mower: &MowerSpec) -> bool {
    (y_p - (pasture.width - mower.half_implement())).abs() <= Y_TOL
}

/// End-of-pass stopping rule. REACT is instead checked after every step.
pub fn is_terminated(
    kind: PlannerKind,
    pass: &PassState,
    world: &WorldState,
    pasture: &PastureSpec,
    mower: &MowerSpec,
    bcp_length: f64,
) -> bool {
    let top = is_top_pass(pass.y_p, pasture, mower);
    let empty = world.weed_list().next().is_none();
    let mower_high = world.mower.y >= pasture.width - mower.implement_width - Y_TOL;
    match kind {
        PlannerKind::Bcp => top,
        PlannerKind::BcpTsp => top && empty,
        PlannerKind::React => world.odometer >= bcp_length,
        PlannerKind::JumpHigh | PlannerKind::JumpLow | PlannerKind::SnakeDynamic => top && empty,
        PlannerKind::SnakeStatic => mower_high && top && empty,
        PlannerKind::SnakeStaticLimited => mower_high && top,
    }
}

/// Dubins transit from the current pose to the start of a pass.
pub fn transit_to(pose: &Pose, pass: &PassState, pasture: &PastureSpec, mower: &MowerSpec) -> PathPlan {
    dubins_shortest(pose, &pass.start_pose(pasture), mower.turn_radius)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum InvariantKind {
    /// No listed weed lies below the implement's reach at a pass start.
    PassStart,
    /// Every weed listed at pass start and below the implement's top edge
    /// has been mowed by the pass end.
    PassEnd,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InvariantCheck {
    pub pass_index: usize,
    pub kind: InvariantKind,
    pub y_p: f64,
    pub violators: Vec<usize>,
}

impl InvariantCheck {
    pub fn holds(&self) -> bool {
        self.violators.is_empty()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PassRecord {
    pub index: usize,
    pub y_p: f64,
    pub heading: PassHeading,
    /// Mower ordinate when the pass ended.
    pub y_end: f64,
    pub detours: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrajectorySample {
    pub pose: Pose,
    pub mode: Mode,
}

/// Outcome of one simulated run.
#[derive(Clone, Debug, PartialEq)]
pub struct Episode {
    pub kind: PlannerKind,
    pub path_length: f64,
    pub bcp_length: f64,
    pub weeds: Vec<Weed>,
    pub passes: Vec<PassRecord>,
    pub checks: Vec<InvariantCheck>,
    pub trajectory: Option<Vec<TrajectorySample>>,
}

impl Episode {
    pub fn n_weeds(&self) -> usize {
        self.weeds.len()
    }

    pub fn count(&self, status: crate::world::WeedStatus) -> usize {
        self.weeds.iter().filter(|w| w.status == status).count()
    }

    pub fn detected(&self) -> usize {
        self.n_weeds() - self.count(crate::world::WeedStatus::Undetected)
    }

    pub fn mowed(&self) -> usize {
        self.count(crate::world::WeedStatus::Mowed)
    }

    pub fn pct_of_bcp(&self) -> f64 {
        100.0 * self.path_length / self.bcp_length
    }

    pub fn detected_pct(&self) -> f64 {
        percent(self.detected(), self.n_weeds())
    }

    pub fn mowed_pct(&self) -> f64 {
        percent(self.mowed(), self.n_weeds())
    }

    pub fn invariants_hold(&self) -> bool {
        self.checks.iter().all(InvariantCheck::holds)
    }
}

fn percent(part: usize, whole: usize) -> f64 {
    if whole == 0 {
        100.0
    } else {
        100.0 * part as f64 / whole as f64
    }
}

/// Odometer reading after driving the full-coverage boustrophedon plan.
///
/// The plan is stepped exactly like an episode, so a BCP run scores 100%.
/// Rejects specs no planner can run on.
pub fn check_specs(pasture: &PastureSpec, mower: &MowerSpec) -> Result<(), SimError> {
    pasture.validate()?;
    mower.validate()?;
    if pasture.width < mower.implement_width {
        return Err(SimError::InvalidSpec(format!(
            "pasture width {} is narrower than the implement ({})",
            pasture.width, mower.implement_width
        )));
    }
    Ok(())
}

pub fn bcp_length(pasture: &PastureSpec, mower: &MowerSpec) -> Result<f64, PlannerError> {
    check_specs(pasture, mower)?;
    let plan = build_bcp(pasture, mower.implement_width, mower);
    let mut drv = driver::Driver::new(
        PlannerKind::Bcp,
        WorldState::new(initial_pose(mower), Vec::new()),
        pasture,
        mower,
        f64::INFINITY,
        false,
    );
    drv.run_plan(&plan, Mode::OnPass)?;
    Ok(drv.world.odometer)
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct RunOptions {
    /// Drives planner randomness; independent of the weed field.
    pub seed: u64,
    pub record_trajectory: bool,
    /// Precomputed [`bcp_length`] for this pasture and mower, if known.
    pub bcp_length: Option<f64>,
}

/// Simulate one full episode from the standard start pose.
pub fn run_planner(
    kind: PlannerKind,
    weeds: &[Weed],
    pasture: &PastureSpec,
    mower: &MowerSpec,
    opts: &RunOptions,
) -> Result<Episode, PlannerError> {
    check_specs(pasture, mower)?;
    let bcp = match opts.bcp_length {
        Some(len) => len,
        None => bcp_length(pasture, mower)?,
    };
    let world = WorldState::new(initial_pose(mower), weeds.to_vec());
    let mut drv = driver::Driver::new(
        kind,
        world,
        pasture,
        mower,
        GUARD_FACTOR * bcp,
        opts.record_trajectory,
    );
    drv.start();
    match kind {
        PlannerKind::Bcp => baseline::run_bcp(&mut drv)?,
        PlannerKind::BcpTsp => baseline::run_bcp_tsp(&mut drv)?,
        PlannerKind::React => baseline::run_react(&mut drv, bcp, opts.seed)?,
        PlannerKind::JumpHigh | PlannerKind::JumpLow => jump::run(&mut drv, bcp)?,
        PlannerKind::SnakeStatic | PlannerKind::SnakeStaticLimited | PlannerKind::SnakeDynamic => {
            snake::run(&mut drv, bcp)?
        }
    }
    Ok(drv.finish(bcp))
}
