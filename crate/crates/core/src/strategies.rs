//! Assignment strategies behind one dispatch point.
//!
//! All strategies consume the same wavefront distance matrix and frontier
//! sizes, so results differ only by the allocation policy.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use thiserror::Error;

use crate::assign::{assign_from_distances, rank_robots, Assignment, Goal, Weights};
use crate::frontier::Frontier;
use crate::gridmap::{BeliefGrid, Cell};
use crate::pathdist::{distance_matrix, DistanceMatrix, PathError};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum StrategyId {
    CoExplore,
    Co122,
    Nearest,
    MinPos,
    NextFrontier,
}

#[derive(Debug, Error, PartialEq)]
#[error("unknown strategy {0:?} (expected one of coexplore, co122, nearest, minpos, nextfrontier)")]
pub struct UnknownStrategy(pub String);

impl StrategyId {
    pub const ALL: [StrategyId; 5] = [
        StrategyId::CoExplore,
        StrategyId::Co122,
        StrategyId::Nearest,
        StrategyId::MinPos,
        StrategyId::NextFrontier,
    ];

    pub fn name(self) -> &'static str {
        match self {
            StrategyId::CoExplore => "coexplore",
            StrategyId::Co122 => "co122",
            StrategyId::Nearest => "nearest",
            StrategyId::MinPos => "minpos",
            StrategyId::NextFrontier => "nextfrontier",
        }
    }

    /// Layer weights for the fused-cost strategies.
    pub fn weights(self) -> Option<Weights> {
        match self {
            StrategyId::CoExplore => Some(Weights::COEXPLORE),
            StrategyId::Co122 => Some(Weights::CO122),
            _ => None,
        }
    }
}

impl fmt::Display for StrategyId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for StrategyId {
    type Err = UnknownStrategy;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let key = s.trim().to_ascii_lowercase();
        Self::ALL
            .into_iter()
            .find(|id| id.name() == key)
            .ok_or_else(|| UnknownStrategy(s.to_string()))
    }
}

fn goal(frontier: usize) -> Option<Goal> {
    Some(Goal {
        frontier,
        overflow: false,
    })
}

/// Argmin over the finite entries of a row; ties go to the lower column.
fn argmin_finite(row: &[Option<f64>]) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for (j, d) in row.iter().enumerate() {
        if let Some(d) = *d {
            if best.is_none_or(|(_, b)| d < b) {
                best = Some((j, d));
            }
        }
    }
    best.map(|(j, _)| j)
}

/// Each robot heads for its closest reachable frontier. Robots may share goals.
pub fn nearest_assign(d: &DistanceMatrix) -> Assignment {
    Assignment {
        goals: (0..d.rows())
            .map(|i| argmin_finite(d.row(i)).and_then(goal))
            .collect(),
    }
}

/// Per frontier, robots are ranked by distance. Each robot picks the
/// reachable frontier where its rank is lowest, then the closest, then the
/// lowest id.
pub fn minpos_assign(d: &DistanceMatrix) -> Assignment {
    let (n, k) = (d.rows(), d.cols());
    let filled = d.substitute_unreachable();
    let mut ranks = vec![vec![0usize; k]; n];
    for j in 0..k {
        let column: Vec<f64> = filled.iter().map(|r| r[j]).collect();
        for (i, r) in rank_robots(&column).into_iter().enumerate() {
            ranks[i][j] = r;
        }
    }
    let goals = (0..n)
        .map(|i| {
            let mut best: Option<(usize, f64, usize)> = None;
            for j in 0..k {
                let Some(dist) = d.get(i, j) else { continue };
                let key = (ranks[i][j], dist, j);
                let better = match best {
                    None => true,
                    Some((r, bd, bj)) => {
                        key.0 < r || (key.0 == r && (dist < bd || (dist == bd && j < bj)))
                    }
                };
                if better {
                    best = Some(key);
                }
            }
            best.and_then(|(_, _, j)| goal(j))
        })
        .collect();
    Assignment { goals }
}

/// Utility table used by [`nextfrontier_assign`]; entries for frontiers a
/// robot cannot reach are `None`.
pub fn nextfrontier_utilities(d: &DistanceMatrix, sizes: &[usize]) -> Vec<Vec<Option<f64>>> {
    let (n, k) = (d.rows(), d.cols());
    assert_eq!(sizes.len(), k, "one size per frontier");
    if k == 0 {
        return vec![Vec::new(); n];
    }
    let max_size = sizes.iter().copied().max().unwrap_or(1).max(1) as f64;
    let filled = d.substitute_unreachable();

    (0..n)
        .map(|i| {
            let reachable: Vec<f64> = d.row(i).iter().flatten().copied().collect();
            let d_min = reachable.iter().copied().fold(f64::INFINITY, f64::min);
            let d_max = reachable.iter().copied().fold(f64::NEG_INFINITY, f64::max);

            // distance to each frontier from the closest other robot
            let rev: Vec<f64> = (0..k)
                .map(|j| {
                    (0..n)
                        .filter(|&o| o != i)
                        .map(|o| filled[o][j])
                        .fold(f64::INFINITY, f64::min)
                })
                .collect();
            let rev_max = rev.iter().copied().fold(f64::NEG_INFINITY, f64::max);

            (0..k)
                .map(|j| {
                    let dij = d.get(i, j)?;
                    let gain = sizes[j] as f64 / max_size;
                    let distutil = if d_max > d_min {
                        1.0 - (2.0 * (dij - d_min) / (d_max - d_min) - 1.0).abs()
                    } else {
                        1.0
                    };
                    let revdist = if n == 1 || !(rev_max > 0.0) {
                        1.0
                    } else {
                        rev[j] / rev_max
                    };
                    Some(gain + distutil + revdist)
                })
                .collect()
        })
        .collect()
}

/// Size gain plus a triangular distance utility peaking between the robot's
/// nearest and farthest frontier, plus a reverse-distance term favoring
/// frontiers far from the other robots. Each robot takes its argmax.
pub fn nextfrontier_assign(d: &DistanceMatrix, sizes: &[usize]) -> Assignment {
    let goals = nextfrontier_utilities(d, sizes)
        .into_iter()
        .map(|row| {
            let mut best: Option<(usize, f64)> = None;
            for (j, u) in row.into_iter().enumerate() {
                if let Some(u) = u {
                    if best.is_none_or(|(_, b)| u > b) {
                        best = Some((j, u));
                    }
                }
            }
            best.and_then(|(j, _)| goal(j))
        })
        .collect();
    Assignment { goals }
}

/// Dispatches on a precomputed distance matrix.
pub fn assign_with_distances<R: Rng + ?Sized>(
    id: StrategyId,
    d: &DistanceMatrix,
    sizes: &[usize],
    rng: &mut R,
) -> Assignment {
    match id {
        StrategyId::CoExplore | StrategyId::Co122 => {
            let w = id.weights().expect("fused strategy has weights");
            assign_from_distances(d, sizes, w, rng).assignment
        }
        StrategyId::Nearest => nearest_assign(d),
        StrategyId::MinPos => minpos_assign(d),
        StrategyId::NextFrontier => nextfrontier_assign(d, sizes),
    }
}

pub fn strategy_assign<R: Rng + ?Sized>(
    id: StrategyId,
    belief: &BeliefGrid,
    robots: &[Cell],
    frontiers: &[Frontier],
    rng: &mut R,
) -> Result<Assignment, PathError> {
    let d = distance_matrix(belief, robots, frontiers)?;
    let sizes: Vec<usize> = frontiers.iter().map(Frontier::size).collect();
    Ok(assign_with_distances(id, &d, &sizes, rng))
}
