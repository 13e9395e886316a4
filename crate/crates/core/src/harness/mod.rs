//! Experiment runner: single instances, parameter sweeps, CSV output.

mod plot;

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::planners::{bcp_length, check_specs, run_planner, Episode, PlannerError, PlannerKind, RunOptions};
use crate::world::{generate_weeds, MowerSpec, PastureSpec, SimError, Weed, WeedDistribution};

pub use plot::{render_trajectory, render_trend, TREND_FIELDS};

/// Value of the `schema_version` column in every results row.
pub const SCHEMA_VERSION: u32 = 1;
pub const DEFAULT_SEEDS_PER_CELL: usize = 20;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Planner(#[from] PlannerError),
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error("could not start worker pool: {0}")]
    Pool(#[from] rayon::ThreadPoolBuildError),
}

/// SplitMix64 finaliser.
pub fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Weed-field seed for one replicate of an `(n, distribution)` cell. Grid
/// values of R, Sd and Sw are deliberately left out so every mower
/// configuration meets the same fields.
pub fn instance_seed(master: u64, n_weeds: usize, dist: DistKind, replicate: usize) -> u64 {
    let mut h = mix64(master);
    h = mix64(h ^ n_weeds as u64);
    h = mix64(h ^ dist as u64);
    mix64(h ^ replicate as u64)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DistKind {
    Uniform,
    Gauss,
}

impl DistKind {
    pub fn with_sigma(self, sigma: f64) -> WeedDistribution {
        match self {
            DistKind::Uniform => WeedDistribution::Uniform,
            DistKind::Gauss => WeedDistribution::GaussianClusters { sigma },
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            DistKind::Uniform => "uniform",
            DistKind::Gauss => "gauss",
        }
    }
}

impl std::str::FromStr for DistKind {
    type Err = HarnessError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "uniform" | "u" => Ok(DistKind::Uniform),
            "gauss" | "gaussian" | "g" => Ok(DistKind::Gauss),
            other => Err(HarnessError::Usage(format!("unknown distribution `{other}`"))),
        }
    }
}

/// Where an instance's weeds come from.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum WeedSource {
    List(Vec<Weed>),
    Generate {
        n: usize,
        dist: DistKind,
        #[serde(default = "default_sigma")]
        sigma: f64,
        seed: u64,
    },
}

fn default_sigma() -> f64 {
    WeedDistribution::DEFAULT_SIGMA
}

impl WeedSource {
    pub fn weeds(&self, pasture: &PastureSpec) -> Vec<Weed> {
        match self {
            WeedSource::List(w) => w.clone(),
            WeedSource::Generate { n, dist, sigma, seed } => {
                generate_weeds(*n, dist.with_sigma(*sigma), pasture, *seed)
            }
        }
    }
}

/// A single instance as stored on disk.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub pasture: PastureSpec,
    pub mower: MowerSpec,
    pub weeds: WeedSource,
}

impl Scenario {
    pub fn from_json(text: &str) -> Result<Self, HarnessError> {
        let s: Scenario = serde_json::from_str(text)?;
        s.pasture.validate()?;
        s.mower.validate()?;
        if let WeedSource::List(weeds) = &s.weeds {
            if let Some(w) = weeds.iter().find(|w| !s.pasture.contains(w.position())) {
                return Err(HarnessError::Usage(format!(
                    "weed {} at ({}, {}) lies outside the pasture",
                    w.id, w.x, w.y
                )));
            }
        }
        Ok(s)
    }

    pub fn to_json(&self) -> Result<String, HarnessError> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct InstanceConfig {
    pub planner: PlannerKind,
    pub scenario: Scenario,
    /// Planner randomness, used by REACT only.
    pub planner_seed: u64,
    pub record_trajectory: bool,
}

/// One results row. `wall_time_s` is kept out of the results file so that
/// identical runs give identical bytes.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub schema_version: u32,
    pub planner: PlannerKind,
    pub distribution: String,
    pub n_weeds: usize,
    #[serde(rename = "R")]
    pub turn_radius: f64,
    #[serde(rename = "Sd")]
    pub fov_depth: f64,
    #[serde(rename = "Sw")]
    pub fov_width: f64,
    pub replicate: usize,
    pub seed: u64,
    pub status: String,
    pub path_length_m: Option<f64>,
    pub bcp_length_m: Option<f64>,
    pub pct_of_bcp: Option<f64>,
    pub weeds_detected_pct: Option<f64>,
    pub weeds_mowed_pct: Option<f64>,
    pub message: String,
    #[serde(skip)]
    pub wall_time_s: f64,
}

impl Metrics {
    pub fn is_ok(&self) -> bool {
        self.status == "ok"
    }
}

pub struct InstanceResult {
    pub metrics: Metrics,
    pub episode: Option<Episode>,
}

fn metrics_row(
    planner: PlannerKind,
    mower: &MowerSpec,
    distribution: &str,
    n_weeds: usize,
    replicate: usize,
    seed: u64,
    outcome: &Result<Episode, PlannerError>,
    wall_time_s: f64,
) -> Metrics {
    let mut m = Metrics {
        schema_version: SCHEMA_VERSION,
        planner,
        distribution: distribution.to_string(),
        n_weeds,
        turn_radius: mower.turn_radius,
        fov_depth: mower.fov_depth,
        fov_width: mower.fov_width,
        replicate,
        seed,
        status: "ok".into(),
        path_length_m: None,
        bcp_length_m: None,
        pct_of_bcp: None,
        weeds_detected_pct: None,
        weeds_mowed_pct: None,
        message: String::new(),
        wall_time_s,
    };
    match outcome {
        Ok(e) => {
            m.path_length_m = Some(e.path_length);
            m.bcp_length_m = Some(e.bcp_length);
            m.pct_of_bcp = Some(e.pct_of_bcp());
            m.weeds_detected_pct = Some(e.detected_pct());
            m.weeds_mowed_pct = Some(e.mowed_pct());
        }
        Err(err) => {
            m.status = "failed".into();
            m.message = err.to_string();
        }
    }
    m
}

/// Run one instance. A planner abort becomes a `failed` row, not an error.
pub fn run_instance(cfg: &InstanceConfig) -> Result<InstanceResult, HarnessError> {
    let sc = &cfg.scenario;
    check_specs(&sc.pasture, &sc.mower)?;
    let weeds = sc.weeds.weeds(&sc.pasture);
    let (dist, seed) = match &sc.weeds {
        WeedSource::List(_) => ("list".to_string(), cfg.planner_seed),
        WeedSource::Generate { dist, seed, .. } => (dist.name().to_string(), *seed),
    };
    let opts = RunOptions {
        seed: cfg.planner_seed,
        record_trajectory: cfg.record_trajectory,
        bcp_length: None,
    };
    let clock = Instant::now();
    let outcome = run_planner(cfg.planner, &weeds, &sc.pasture, &sc.mower, &opts);
    let elapsed = clock.elapsed().as_secs_f64();
    let metrics = metrics_row(cfg.planner, &sc.mower, &dist, weeds.len(), 0, seed, &outcome, elapsed);
    Ok(InstanceResult {
        metrics,
        episode: outcome.ok(),
    })
}

/// Parameter grid. Every list must be nonempty.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepGrid {
    #[serde(rename = "R", default = "default_r")]
    pub turn_radius: Vec<f64>,
    #[serde(rename = "Sd", default = "default_fov")]
    pub fov_depth: Vec<f64>,
    #[serde(rename = "Sw", default = "default_fov")]
    pub fov_width: Vec<f64>,
    #[serde(default = "default_n")]
    pub n_weeds: Vec<usize>,
    #[serde(default = "default_dists")]
    pub distributions: Vec<DistKind>,
    #[serde(default = "default_planners")]
    pub planners: Vec<PlannerKind>,
    #[serde(default = "default_seeds")]
    pub seeds_per_cell: usize,
    #[serde(default)]
    pub master_seed: u64,
    #[serde(default = "default_sigma")]
    pub sigma: f64,
    #[serde(default)]
    pub pasture: PastureSpec,
    /// Implement width, speed and step; R, Sd and Sw come from the lists.
    #[serde(default)]
    pub mower: MowerSpec,
}

fn default_r() -> Vec<f64> {
    vec![2.0]
}

fn default_fov() -> Vec<f64> {
    vec![12.0]
}

fn default_n() -> Vec<usize> {
    vec![20, 40, 80, 160, 320, 640]
}

fn default_dists() -> Vec<DistKind> {
    vec![DistKind::Uniform, DistKind::Gauss]
}

fn default_planners() -> Vec<PlannerKind> {
    PlannerKind::ALL.to_vec()
}

fn default_seeds() -> usize {
    DEFAULT_SEEDS_PER_CELL
}

impl Default for SweepGrid {
    fn default() -> Self {
        Self {
            turn_radius: default_r(),
            fov_depth: default_fov(),
            fov_width: default_fov(),
            n_weeds: default_n(),
            distributions: default_dists(),
            planners: default_planners(),
            seeds_per_cell: default_seeds(),
            master_seed: 0,
            sigma: default_sigma(),
            pasture: PastureSpec::default(),
            mower: MowerSpec::default(),
        }
    }
}

impl SweepGrid {
    pub fn from_json(text: &str) -> Result<Self, HarnessError> {
        let g: SweepGrid = serde_json::from_str(text)?;
        g.validate()?;
        Ok(g)
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        let empty = [
            ("R", self.turn_radius.is_empty()),
            ("Sd", self.fov_depth.is_empty()),
            ("Sw", self.fov_width.is_empty()),
            ("n_weeds", self.n_weeds.is_empty()),
            ("distributions", self.distributions.is_empty()),
            ("planners", self.planners.is_empty()),
            ("seeds_per_cell", self.seeds_per_cell == 0),
        ];
        if let Some((name, _)) = empty.iter().find(|(_, e)| *e) {
            return Err(HarnessError::Usage(format!("grid field `{name}` must be nonempty")));
        }
        for m in self.mowers() {
            check_specs(&self.pasture, &m)?;
        }
        Ok(())
    }

    fn mowers(&self) -> Vec<MowerSpec> {
        let mut out = Vec::new();
        for &r in &self.turn_radius {
            for &sd in &self.fov_depth {
                for &sw in &self.fov_width {
                    out.push(MowerSpec {
                        turn_radius: r,
                        fov_depth: sd,
                        fov_width: sw,
                        ..self.mower
                    });
                }
            }
        }
        out
    }

    /// Every run in the grid, in output order.
    fn jobs(&self) -> Vec<Job> {
        let mut jobs = Vec::new();
        for (mower_index, mower) in self.mowers().into_iter().enumerate() {
            for &n in &self.n_weeds {
                for &dist in &self.distributions {
                    for replicate in 0..self.seeds_per_cell {
                        let seed = instance_seed(self.master_seed, n, dist, replicate);
                        for &planner in &self.planners {
                            jobs.push(Job {
                                mower_index,
                                mower,
                                n,
                                dist,
                                replicate,
                                seed,
                                planner,
                            });
                        }
                    }
                }
            }
        }
        jobs
    }
}

#[derive(Clone, Copy, Debug)]
struct Job {
    mower_index: usize,
    mower: MowerSpec,
    n: usize,
    dist: DistKind,
    replicate: usize,
    seed: u64,
    planner: PlannerKind,
}

pub struct SweepOutput {
    pub results: PathBuf,
    pub summary: PathBuf,
    pub timings: PathBuf,
    pub rows: Vec<Metrics>,
}

impl SweepOutput {
    pub fn failures(&self) -> usize {
        self.rows.iter().filter(|m| !m.is_ok()).count()
    }
}

/// Run every grid cell, in parallel on `workers` threads, and write
/// `results.csv`, `summary.csv` and `timings.csv` under `out_dir`.
pub fn run_sweep(grid: &SweepGrid, out_dir: &Path, workers: usize) -> Result<SweepOutput, HarnessError> {
    grid.validate()?;
    if workers == 0 {
        return Err(HarnessError::Usage("worker count must be at least 1".into()));
    }
    fs::create_dir_all(out_dir)?;
    let rows = sweep_rows(grid, workers)?;
    let results = out_dir.join("results.csv");
    let summary = out_dir.join("summary.csv");
    let timings = out_dir.join("timings.csv");
    write_results(&rows, &results)?;
    write_summary(&rows, &summary)?;
    write_timings(&rows, &timings)?;
    Ok(SweepOutput {
        results,
        summary,
        timings,
        rows,
    })
}

/// The rows of a sweep without touching the filesystem.
pub fn sweep_rows(grid: &SweepGrid, workers: usize) -> Result<Vec<Metrics>, HarnessError> {
    grid.validate()?;
    let bcp = grid
        .mowers()
        .iter()
        .map(|m| bcp_length(&grid.pasture, m))
        .collect::<Result<Vec<f64>, _>>()?;
    let jobs = grid.jobs();
    let pool = rayon::ThreadPoolBuilder::new().num_threads(workers.max(1)).build()?;
    let rows = pool.install(|| {
        jobs.par_iter()
            .map(|job| {
                let weeds = generate_weeds(job.n, job.dist.with_sigma(grid.sigma), &grid.pasture, job.seed);
                let clock = Instant::now();
                let opts = RunOptions {
                    seed: mix64(job.seed ^ 0x5EED),
                    record_trajectory: false,
                    bcp_length: Some(bcp[job.mower_index]),
                };
                let outcome = run_planner(job.planner, &weeds, &grid.pasture, &job.mower, &opts);
                metrics_row(
                    job.planner,
                    &job.mower,
                    job.dist.name(),
                    job.n,
                    job.replicate,
                    job.seed,
                    &outcome,
                    clock.elapsed().as_secs_f64(),
                )
            })
            .collect::<Vec<_>>()
    });
    Ok(rows)
}

pub fn write_results(rows: &[Metrics], path: &Path) -> Result<(), HarnessError> {
    write_results_to(rows, fs::File::create(path)?)
}

/// Header plus one line per row.
pub fn write_results_to<W: Write>(rows: &[Metrics], out: W) -> Result<(), HarnessError> {
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_results(path: &Path) -> Result<Vec<Metrics>, HarnessError> {
    let mut r = csv::Reader::from_path(path)?;
    let mut rows = Vec::new();
    for rec in r.deserialize() {
        rows.push(rec?);
    }
    Ok(rows)
}

#[derive(Debug, Serialize)]
struct TimingRow<'a> {
    planner: PlannerKind,
    distribution: &'a str,
    n_weeds: usize,
    #[serde(rename = "R")]
    turn_radius: f64,
    #[serde(rename = "Sd")]
    fov_depth: f64,
    #[serde(rename = "Sw")]
    fov_width: f64,
    replicate: usize,
    wall_time_s: f64,
}

fn write_timings(rows: &[Metrics], path: &Path) -> Result<(), HarnessError> {
    let mut w = csv::Writer::from_path(path)?;
    for r in rows {
        w.serialize(TimingRow {
            planner: r.planner,
            distribution: &r.distribution,
            n_weeds: r.n_weeds,
            turn_radius: r.turn_radius,
            fov_depth: r.fov_depth,
            fov_width: r.fov_width,
            replicate: r.replicate,
            wall_time_s: r.wall_time_s,
        })?;
    }
    w.flush()?;
    Ok(())
}

/// Sample mean and standard deviation; the deviation is 0 below two values.
pub fn mean_sd(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    if values.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

#[derive(Debug, Serialize)]
pub struct SummaryRow {
    pub schema_version: u32,
    pub planner: PlannerKind,
    pub distribution: String,
    pub n_weeds: usize,
    #[serde(rename = "R")]
    pub turn_radius: f64,
    #[serde(rename = "Sd")]
    pub fov_depth: f64,
    #[serde(rename = "Sw")]
    pub fov_width: f64,
    pub runs: usize,
    pub failed: usize,
    pub pct_of_bcp_mean: f64,
    pub pct_of_bcp_sd: f64,
    pub path_length_m_mean: f64,
    pub path_length_m_sd: f64,
    pub weeds_detected_pct_mean: f64,
    pub weeds_detected_pct_sd: f64,
    pub weeds_mowed_pct_mean: f64,
    pub weeds_mowed_pct_sd: f64,
}

type CellKey = (PlannerKind, String, usize, u64, u64, u64);

fn cell_key(m: &Metrics) -> CellKey {
    (
        m.planner,
        m.distribution.clone(),
        m.n_weeds,
        m.turn_radius.to_bits(),
        m.fov_depth.to_bits(),
        m.fov_width.to_bits(),
    )
}

/// Per-cell means and standard deviations over successful runs.
pub fn summarize(rows: &[Metrics]) -> Vec<SummaryRow> {
    let mut cells: BTreeMap<CellKey, Vec<&Metrics>> = BTreeMap::new();
    let mut order: Vec<CellKey> = Vec::new();
    for m in rows {
        let key = cell_key(m);
        let entry = cells.entry(key.clone()).or_default();
        if entry.is_empty() {
            order.push(key);
        }
        entry.push(m);
    }
    order
        .into_iter()
        .map(|key| {
            let ms = &cells[&key];
            let ok: Vec<&&Metrics> = ms.iter().filter(|m| m.is_ok()).collect();
            let col = |f: fn(&Metrics) -> Option<f64>| -> (f64, f64) {
                let v: Vec<f64> = ok.iter().filter_map(|m| f(m)).collect();
                mean_sd(&v)
            };
            let pct = col(|m| m.pct_of_bcp);
            let len = col(|m| m.path_length_m);
            let det = col(|m| m.weeds_detected_pct);
            let mow = col(|m| m.weeds_mowed_pct);
            let first = ms[0];
            SummaryRow {
                schema_version: SCHEMA_VERSION,
                planner: first.planner,
                distribution: first.distribution.clone(),
                n_weeds: first.n_weeds,
                turn_radius: first.turn_radius,
                fov_depth: first.fov_depth,
                fov_width: first.fov_width,
                runs: ms.len(),
                failed: ms.len() - ok.len(),
                pct_of_bcp_mean: pct.0,
                pct_of_bcp_sd: pct.1,
                path_length_m_mean: len.0,
                path_length_m_sd: len.1,
                weeds_detected_pct_mean: det.0,
                weeds_detected_pct_sd: det.1,
                weeds_mowed_pct_mean: mow.0,
                weeds_mowed_pct_sd: mow.1,
            }
        })
        .collect()
}

fn write_summary(rows: &[Metrics], path: &Path) -> Result<(), HarnessError> {
    let mut w = csv::Writer::from_path(path)?;
    for s in summarize(rows) {
        w.serialize(s)?;
    }
    w.flush()?;
    Ok(())
}
