//! Open-path tours over weed positions with a fixed starting point.

use itertools::Itertools;
use thiserror::Error;

use crate::geom::Point;

/// Largest instance accepted by [`brute_force_tour`].
pub const MAX_EXACT: usize = 9;

const IMPROVEMENT_EPS: f64 = 1e-12;

#[derive(Debug, Error, PartialEq)]
pub enum TspError {
    #[error("no targets to visit")]
    Empty,
    #[error("{0} targets exceed the exhaustive search limit of {MAX_EXACT}")]
    TooManyTargets(usize),
}

/// Visiting order over `targets`, starting from a fixed point and not
/// returning to it.
#[derive(Clone, Debug, PartialEq)]
pub struct Tour {
    pub start: Point,
    pub order: Vec<usize>,
    pub length: f64,
}

/// Euclidean length of the open path `start -> targets[order[0]] -> ...`.
pub fn path_length(start: Point, targets: &[Point], order: &[usize]) -> f64 {
    let mut prev = start;
    let mut total = 0.0;
    for &i in order {
        total += prev.distance(&targets[i]);
        prev = targets[i];
    }
    total
}

fn nearest_neighbour(start: Point, targets: &[Point]) -> Vec<usize> {
    let mut left: Vec<usize> = (0..targets.len()).collect();
    let mut order = Vec::with_capacity(targets.len());
    let mut here = start;
    while !left.is_empty() {
        let (pos, _) = left
            .iter()
            .enumerate()
            .map(|(pos, &i)| (pos, here.distance(&targets[i])))
            .min_by(|a, b| a.1.total_cmp(&b.1))
            .expect("nonempty");
        let next = left.remove(pos);
        here = targets[next];
        order.push(next);
    }
    order
}

/// Change in length from reversing `order[i..=j]`.
fn reversal_gain(start: Point, targets: &[Point], order: &[usize], i: usize, j: usize) -> f64 {
    let before = if i == 0 { start } else { targets[order[i - 1]] };
    let first = targets[order[i]];
    let last = targets[order[j]];
    let mut delta = before.distance(&last) - before.distance(&first);
    if let Some(&after) = order.get(j + 1) {
        let after = targets[after];
        delta += first.distance(&after) - last.distance(&after);
    }
    delta
}

fn two_opt(start: Point, targets: &[Point], order: &mut [usize]) {
    let n = order.len();
    loop {
        let mut improved = false;
        for i in 0..n {
            for j in i + 1..n {
                if reversal_gain(start, targets, order, i, j) < -IMPROVEMENT_EPS {
                    order[i..=j].reverse();
                    improved = true;
                }
            }
        }
        if !improved {
            break;
        }
    }
}

/// Nearest-neighbour construction followed by 2-opt until no reversal helps.
pub fn heuristic_tour(start: Point, targets: &[Point]) -> Result<Tour, TspError> {
    if targets.is_empty() {
        return Err(TspError::Empty);
    }
    let mut order = nearest_neighbour(start, targets);
    two_opt(start, targets, &mut order);
    let length = path_length(start, targets, &order);
    Ok(Tour { start, order, length })
}

/// Exact shortest open path by trying every permutation.
pub fn brute_force_tour(start: Point, targets: &[Point]) -> Result<Tour, TspError> {
    if targets.is_empty() {
        return Err(TspError::Empty);
    }
    if targets.len() > MAX_EXACT {
        return Err(TspError::TooManyTargets(targets.len()));
    }
    let mut best: Option<Tour> = None;
    for order in (0..targets.len()).permutations(targets.len()) {
        let length = path_length(start, targets, &order);
        if best.as_ref().is_none_or(|b| length < b.length) {
            best = Some(Tour { start, order, length });
        }
    }
    Ok(best.expect("at least one permutation"))
}
