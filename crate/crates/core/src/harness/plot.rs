//! SVG output: episode trajectories and sweep trend charts.

use std::collections::BTreeMap;
use std::path::Path;

use svg::node::element::{Circle, Group, Line, Polyline, Rectangle, Text};
use svg::Document;

use super::{mean_sd, read_results, HarnessError, Metrics};
use crate::planners::{Episode, Mode};
use crate::world::{PastureSpec, WeedStatus};

const PX_PER_M: f64 = 8.0;
const MARGIN: f64 = 20.0;

fn weed_colour(s: WeedStatus) -> &'static str {
    match s {
        WeedStatus::Undetected => "#9e9e9e",
        WeedStatus::Detected => "#e53935",
        WeedStatus::Mowed => "#43a047",
    }
}

fn mode_colour(m: Mode) -> &'static str {
    match m {
        Mode::OnTransit => "#757575",
        Mode::OnPass => "#1e88e5",
        Mode::OnJump => "#fb8c00",
        Mode::OnWriggle => "#8e24aa",
    }
}

fn mode_class(m: Mode) -> &'static str {
    match m {
        Mode::OnTransit => "transit",
        Mode::OnPass => "pass",
        Mode::OnJump => "jump",
        Mode::OnWriggle => "wriggle",
    }
}

fn fmt(v: f64) -> String {
    format!("{v:.3}")
}

/// Pasture outline, weeds coloured by final status and the driven path, one
/// polyline per run of equal mode. World y points up.
pub fn render_trajectory(episode: &Episode, pasture: &PastureSpec, out: &Path) -> Result<(), HarnessError> {
    let width = pasture.length * PX_PER_M + 2.0 * MARGIN;
    let height = pasture.width * PX_PER_M + 2.0 * MARGIN;
    let px = |x: f64| MARGIN + x * PX_PER_M;
    let py = |y: f64| MARGIN + (pasture.width - y) * PX_PER_M;

    let mut doc = Document::new()
        .set("viewBox", (0.0, 0.0, width, height))
        .set("width", width)
        .set("height", height)
        .add(
            Rectangle::new()
                .set("class", "pasture")
                .set("x", px(0.0))
                .set("y", py(pasture.width))
                .set("width", pasture.length * PX_PER_M)
                .set("height", pasture.width * PX_PER_M)
                .set("fill", "#f1f8e9")
                .set("stroke", "black"),
        );

    if let Some(samples) = &episode.trajectory {
        let mut path = Group::new().set("class", "trajectory").set("fill", "none");
        // Each step is drawn in the mode it was driven in.
        let mut runs: Vec<(Mode, usize, usize)> = Vec::new();
        for k in 1..samples.len() {
            let mode = samples[k].mode;
            match runs.last_mut() {
                Some(r) if r.0 == mode => r.2 = k,
                _ => runs.push((mode, k - 1, k)),
            }
        }
        for (mode, a, b) in runs {
            let points: Vec<String> = samples[a..=b]
                .iter()
                .map(|s| format!("{},{}", fmt(px(s.pose.x)), fmt(py(s.pose.y))))
                .collect();
            path = path.add(
                Polyline::new()
                    .set("class", mode_class(mode))
                    .set("points", points.join(" "))
                    .set("stroke", mode_colour(mode))
                    .set("stroke-width", 1.5),
            );
        }
        doc = doc.add(path);
    }

    let mut weeds = Group::new().set("class", "weeds");
    for w in &episode.weeds {
        weeds = weeds.add(
            Circle::new()
                .set("cx", fmt(px(w.x)))
                .set("cy", fmt(py(w.y)))
                .set("r", 3)
                .set("fill", weed_colour(w.status)),
        );
    }
    doc = doc.add(weeds).add(
        Text::new(format!(
            "{} path {:.1} m ({:.1}% of BCP), mowed {:.1}%",
            episode.kind,
            episode.path_length,
            episode.pct_of_bcp(),
            episode.mowed_pct()
        ))
        .set("x", MARGIN)
        .set("y", MARGIN * 0.7)
        .set("font-size", 12),
    );
    svg::save(out, &doc)?;
    Ok(())
}

/// Columns usable on either axis of a trend chart.
pub const TREND_FIELDS: [&str; 11] = [
    "n_weeds",
    "R",
    "Sd",
    "Sw",
    "replicate",
    "seed",
    "path_length_m",
    "bcp_length_m",
    "pct_of_bcp",
    "weeds_detected_pct",
    "weeds_mowed_pct",
];

fn field(m: &Metrics, name: &str) -> Option<f64> {
    match name {
        "n_weeds" => Some(m.n_weeds as f64),
        "R" => Some(m.turn_radius),
        "Sd" => Some(m.fov_depth),
        "Sw" => Some(m.fov_width),
        "replicate" => Some(m.replicate as f64),
        "seed" => Some(m.seed as f64),
        "path_length_m" => m.path_length_m,
        "bcp_length_m" => m.bcp_length_m,
        "pct_of_bcp" => m.pct_of_bcp,
        "weeds_detected_pct" => m.weeds_detected_pct,
        "weeds_mowed_pct" => m.weeds_mowed_pct,
        _ => None,
    }
}

struct SeriesPoint {
    x: f64,
    mean: f64,
    sd: f64,
}

const CHART_W: f64 = 640.0;
const CHART_H: f64 = 400.0;
const PLOT_LEFT: f64 = 70.0;
const PLOT_TOP: f64 = 30.0;
const PLOT_W: f64 = 420.0;
const PLOT_H: f64 = 320.0;

const PALETTE: [&str; 10] = [
    "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22",
    "#17becf",
];

fn padded_range(lo: f64, hi: f64) -> (f64, f64) {
    if hi - lo > 1e-12 {
        let pad = 0.05 * (hi - lo);
        (lo - pad, hi + pad)
    } else {
        let pad = if lo.abs() > 1e-12 { 0.1 * lo.abs() } else { 1.0 };
        (lo - pad, hi + pad)
    }
}

/// Line chart of mean `y_axis` against `x_axis` from a results CSV, one
/// series per planner (split by distribution when the file holds several),
/// with ±1 s.d. error bars. Failed runs are skipped.
pub fn render_trend(csv: &Path, x_axis: &str, y_axis: &str, out: &Path) -> Result<(), HarnessError> {
    for f in [x_axis, y_axis] {
        if !TREND_FIELDS.contains(&f) {
            return Err(HarnessError::Usage(format!(
                "unknown field `{f}`; expected one of {}",
                TREND_FIELDS.join(", ")
            )));
        }
    }
    let rows: Vec<Metrics> = read_results(csv)?.into_iter().filter(|m| m.is_ok()).collect();
    if rows.is_empty() {
        return Err(HarnessError::Usage(format!("{} has no successful data rows", csv.display())));
    }
    let split_dist = rows.iter().any(|m| m.distribution != rows[0].distribution);

    let mut groups: BTreeMap<String, BTreeMap<u64, (f64, Vec<f64>)>> = BTreeMap::new();
    for m in &rows {
        let (Some(x), Some(y)) = (field(m, x_axis), field(m, y_axis)) else {
            continue;
        };
        let label = if split_dist {
            format!("{} ({})", m.planner, m.distribution)
        } else {
            m.planner.to_string()
        };
        groups
            .entry(label)
            .or_default()
            .entry(x.to_bits())
            .or_insert((x, Vec::new()))
            .1
            .push(y);
    }
    let series: Vec<(String, Vec<SeriesPoint>)> = groups
        .into_iter()
        .map(|(label, pts)| {
            let mut pts: Vec<SeriesPoint> = pts
                .into_values()
                .map(|(x, ys)| {
                    let (mean, sd) = mean_sd(&ys);
                    SeriesPoint { x, mean, sd }
                })
                .collect();
            pts.sort_by(|a, b| a.x.total_cmp(&b.x));
            (label, pts)
        })
        .collect();

    let all = series.iter().flat_map(|(_, p)| p);
    let (mut x_lo, mut x_hi, mut y_lo, mut y_hi) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
    for p in all {
        x_lo = x_lo.min(p.x);
        x_hi = x_hi.max(p.x);
        y_lo = y_lo.min(p.mean - p.sd);
        y_hi = y_hi.max(p.mean + p.sd);
    }
    let (x_lo, x_hi) = padded_range(x_lo, x_hi);
    let (y_lo, y_hi) = padded_range(y_lo, y_hi);
    let sx = |x: f64| PLOT_LEFT + (x - x_lo) / (x_hi - x_lo) * PLOT_W;
    let sy = |y: f64| PLOT_TOP + PLOT_H - (y - y_lo) / (y_hi - y_lo) * PLOT_H;

    let axes = Group::new()
        .set("class", "axes")
        .set("data-x-min", x_lo)
        .set("data-x-max", x_hi)
        .set("data-y-min", y_lo)
        .set("data-y-max", y_hi)
        .add(
            Rectangle::new()
                .set("class", "plot-area")
                .set("x", PLOT_LEFT)
                .set("y", PLOT_TOP)
                .set("width", PLOT_W)
                .set("height", PLOT_H)
                .set("fill", "none")
                .set("stroke", "black"),
        )
        .add(
            Text::new(format!("{x_lo:.2}"))
                .set("x", PLOT_LEFT)
                .set("y", PLOT_TOP + PLOT_H + 15.0)
                .set("font-size", 10),
        )
        .add(
            Text::new(format!("{x_hi:.2}"))
                .set("x", PLOT_LEFT + PLOT_W)
                .set("y", PLOT_TOP + PLOT_H + 15.0)
                .set("font-size", 10)
                .set("text-anchor", "end"),
        )
        .add(
            Text::new(format!("{y_lo:.2}"))
                .set("x", PLOT_LEFT - 5.0)
                .set("y", PLOT_TOP + PLOT_H)
                .set("font-size", 10)
                .set("text-anchor", "end"),
        )
        .add(
            Text::new(format!("{y_hi:.2}"))
                .set("x", PLOT_LEFT - 5.0)
                .set("y", PLOT_TOP + 10.0)
                .set("font-size", 10)
                .set("text-anchor", "end"),
        )
        .add(
            Text::new(x_axis)
                .set("x", PLOT_LEFT + PLOT_W / 2.0)
                .set("y", PLOT_TOP + PLOT_H + 35.0)
                .set("font-size", 12)
                .set("text-anchor", "middle"),
        )
        .add(
            Text::new(y_axis)
                .set("x", 15.0)
                .set("y", PLOT_TOP + PLOT_H / 2.0)
                .set("font-size", 12)
                .set("transform", format!("rotate(-90 15 {})", PLOT_TOP + PLOT_H / 2.0))
                .set("text-anchor", "middle"),
        );

    let mut doc = Document::new()
        .set("viewBox", (0.0, 0.0, CHART_W, CHART_H))
        .set("width", CHART_W)
        .set("height", CHART_H)
        .add(axes);

    for (i, (label, pts)) in series.iter().enumerate() {
        let colour = PALETTE[i % PALETTE.len()];
        let mut g = Group::new()
            .set("class", "series")
            .set("data-label", label.as_str())
            .set("stroke", colour)
            .set("fill", colour);
        if pts.len() > 1 {
            let line: Vec<String> = pts.iter().map(|p| format!("{},{}", fmt(sx(p.x)), fmt(sy(p.mean)))).collect();
            g = g.add(Polyline::new().set("points", line.join(" ")).set("fill", "none"));
        }
        for p in pts {
            g = g
                .add(
                    Line::new()
                        .set("class", "error-bar")
                        .set("x1", fmt(sx(p.x)))
                        .set("x2", fmt(sx(p.x)))
                        .set("y1", fmt(sy(p.mean - p.sd)))
                        .set("y2", fmt(sy(p.mean + p.sd))),
                )
                .add(
                    Circle::new()
                        .set("class", "point")
                        .set("cx", fmt(sx(p.x)))
                        .set("cy", fmt(sy(p.mean)))
                        .set("r", 3)
                        .set("data-x", p.x)
                        .set("data-y", p.mean),
                );
        }
        let ly = PLOT_TOP + 10.0 + 16.0 * i as f64;
        g = g.add(
            Text::new(label.as_str())
                .set("x", PLOT_LEFT + PLOT_W + 15.0)
                .set("y", ly)
                .set("font-size", 11)
                .set("stroke", "none"),
        );
        doc = doc.add(g);
    }
    svg::save(out, &doc)?;
    Ok(())
}
