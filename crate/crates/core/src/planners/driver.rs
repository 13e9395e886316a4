use crate::geom::{step_arclength, step_count, PathPlan, Pose};
use crate::world::{MowerSpec, PastureSpec, WorldEvent, WorldState};

use super::{Episode, InvariantCheck, Mode, PassRecord, PlannerError, PlannerKind, TrajectorySample};

/// Walks a plan in resolution steps: the `k`-th pose sits at `min(k ds, len)`.
pub(crate) struct Cursor {
    plan: PathPlan,
    k: usize,
    n: usize,
    ds: f64,
}

impl Cursor {
    pub fn new(plan: PathPlan, ds: f64) -> Self {
        let n = step_count(plan.length(), ds);
        Self { plan, k: 0, n, ds }
    }

    pub fn is_done(&self) -> bool {
        self.k >= self.n
    }

    /// Next pose and the arc length covered to reach it.
    fn next(&mut self) -> Option<(Pose, f64)> {
        if self.is_done() {
            return None;
        }
        let len = self.plan.length();
        let prev = step_arclength(self.k, len, self.ds);
        self.k += 1;
        let s = step_arclength(self.k, len, self.ds);
        Some((self.plan.pose_at(s)?, s - prev))
    }

    /// Pose and arc length for a step cut short to `max_len`.
    fn next_clipped(&mut self, max_len: f64) -> Option<(Pose, f64)> {
        if self.is_done() {
            return None;
        }
        let len = self.plan.length();
        let prev = step_arclength(self.k, len, self.ds);
        let full = step_arclength(self.k + 1, len, self.ds);
        if full - prev <= max_len {
            return self.next();
        }
        let s = prev + max_len;
        self.k = self.n;
        Some((self.plan.pose_at(s)?, max_len))
    }
}

/// Owns the world for one episode and applies steps to it.
pub(crate) struct Driver<'a> {
    pub kind: PlannerKind,
    pub world: WorldState,
    pub pasture: &'a PastureSpec,
    pub mower: &'a MowerSpec,
    limit: f64,
    pub passes: Vec<PassRecord>,
    pub checks: Vec<InvariantCheck>,
    trajectory: Option<Vec<TrajectorySample>>,
}

impl<'a> Driver<'a> {
    pub fn new(
        kind: PlannerKind,
        world: WorldState,
        pasture: &'a PastureSpec,
        mower: &'a MowerSpec,
        limit: f64,
        record: bool,
    ) -> Self {
        Self {
            kind,
            world,
            pasture,
            mower,
            limit,
            passes: Vec::new(),
            checks: Vec::new(),
            trajectory: record.then(Vec::new),
        }
    }

    /// Look around from the start pose before moving.
    pub fn start(&mut self) {
        self.world.observe(self.mower);
        let pose = self.world.mower;
        if let Some(t) = &mut self.trajectory {
            t.push(TrajectorySample {
                pose,
                mode: Mode::OnTransit,
            });
        }
    }

    fn apply(&mut self, pose: Pose, dist: f64, mode: Mode) -> Result<Vec<WorldEvent>, PlannerError> {
        let events = self.world.advance(pose, dist, self.mower)?;
        if let Some(t) = &mut self.trajectory {
            t.push(TrajectorySample { pose, mode });
        }
        if self.world.odometer > self.limit {
            return Err(PlannerError::NonTermination {
                kind: self.kind,
                odometer: self.world.odometer,
                limit: self.limit,
            });
        }
        Ok(events)
    }

    pub fn cursor(&self, plan: PathPlan) -> Cursor {
        Cursor::new(plan, self.mower.step)
    }

    /// One step along `cursor`; a finished cursor is a no-op.
    pub fn step(&mut self, cursor: &mut Cursor, mode: Mode) -> Result<Vec<WorldEvent>, PlannerError> {
        match cursor.next() {
            Some((pose, dist)) => self.apply(pose, dist, mode),
            None => Ok(Vec::new()),
        }
    }

    /// One step that never takes the odometer past `budget`.
    pub fn step_within(
        &mut self,
        cursor: &mut Cursor,
        mode: Mode,
        budget: f64,
    ) -> Result<Vec<WorldEvent>, PlannerError> {
        let room = budget - self.world.odometer;
        match cursor.next_clipped(room.max(0.0)) {
            Some((pose, dist)) => self.apply(pose, dist, mode),
            None => Ok(Vec::new()),
        }
    }

    pub fn run_plan(&mut self, plan: &PathPlan, mode: Mode) -> Result<(), PlannerError> {
        let mut c = self.cursor(plan.clone());
        while !c.is_done() {
            self.step(&mut c, mode)?;
        }
        Ok(())
    }

    pub fn finish(self, bcp_length: f64) -> Episode {
        Episode {
            kind: self.kind,
            path_length: self.world.odometer,
            bcp_length,
            weeds: self.world.weeds,
            passes: self.passes,
            checks: self.checks,
            trajectory: self.trajectory,
        }
    }
}
