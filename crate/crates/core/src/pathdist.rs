//! Wavefront distance fields over the belief grid.
//!
//! Propagation runs over Free belief cells with 8-connected moves. Axis
//! steps cost one resolution, diagonal steps `resolution·√2`. Distances are
//! evaluated from integer step counts as `axis·res + diag·res·√2`, so every
//! shortest path to a cell yields the same bit-exact value regardless of the
//! order its steps were summed in.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::f64::consts::SQRT_2;

use thiserror::Error;

use crate::frontier::Frontier;
use crate::gridmap::{BeliefGrid, Cell, CellState, Grid, NEIGHBORS_8};

#[derive(Debug, Error, PartialEq)]
pub enum PathError {
    #[error("source cell {0} is not free in the belief")]
    SourceNotFree(Cell),
    #[error("cell {0} is unreachable from the source")]
    Unreachable(Cell),
    #[error("cell {0} lies outside the grid")]
    OutsideGrid(Cell),
}

/// Cost of moving by `(dx, dy)` with `|dx|, |dy| ≤ 1`.
#[inline]
pub(crate) fn step_cost(dx: isize, dy: isize, resolution: f64) -> f64 {
    if dx != 0 && dy != 0 {
        resolution * SQRT_2
    } else {
        resolution
    }
}

/// Length in meters of a path made of `axis` axis steps and `diag` diagonal
/// steps.
#[inline]
pub fn metric_length(axis: usize, diag: usize, resolution: f64) -> f64 {
    axis as f64 * resolution + diag as f64 * (resolution * SQRT_2)
}

#[derive(Clone, Debug, PartialEq)]
pub struct DistanceField {
    width: usize,
    height: usize,
    resolution: f64,
    source: Cell,
    dist: Vec<f64>,
}

impl DistanceField {
    pub fn source(&self) -> Cell {
        self.source
    }

    /// Distance in meters, `None` when unreachable.
    pub fn get(&self, cell: Cell) -> Option<f64> {
        if cell.x >= self.width || cell.y >= self.height {
            return None;
        }
        let d = self.dist[cell.y * self.width + cell.x];
        d.is_finite().then_some(d)
    }

    /// Raw distances, row-major; unreachable cells hold `f64::INFINITY`.
    pub fn raw(&self) -> &[f64] {
        &self.dist
    }
}

#[derive(Copy, Clone, PartialEq)]
struct Entry {
    dist: f64,
    index: usize,
}

impl Eq for Entry {}

impl Ord for Entry {
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .dist
            .total_cmp(&self.dist)
            .then_with(|| other.index.cmp(&self.index))
    }
}

impl PartialOrd for Entry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

fn traversable(g: &Grid, i: usize) -> bool {
    g.cells()[i] == CellState::Free
}

pub fn wavefront_distances(belief: &BeliefGrid, source: Cell) -> Result<DistanceField, PathError> {
    let g = belief.grid();
    if !g.contains(source) {
        return Err(PathError::OutsideGrid(source));
    }
    if g.get(source) != CellState::Free {
        return Err(PathError::SourceNotFree(source));
    }
    let (w, h, res) = (g.width(), g.height(), g.resolution());
    let mut dist = vec![f64::INFINITY; g.len()];
    let mut steps = vec![(0usize, 0usize); g.len()];
    let mut heap = BinaryHeap::new();
    let s = g.index(source);
    dist[s] = 0.0;
    heap.push(Entry { dist: 0.0, index: s });

    while let Some(Entry { dist: d, index }) = heap.pop() {
        if d > dist[index] {
            continue;
        }
        let (x, y) = ((index % w) as isize, (index / w) as isize);
        for &(dx, dy) in &NEIGHBORS_8 {
            let (nx, ny) = (x + dx, y + dy);
            if nx < 0 || ny < 0 || nx >= w as isize || ny >= h as isize {
                continue;
            }
            let ni = ny as usize * w + nx as usize;
            if !traversable(g, ni) {
                continue;
            }
            let (a, b) = steps[index];
            let (a, b) = if dx != 0 && dy != 0 { (a, b + 1) } else { (a + 1, b) };
            let nd = metric_length(a, b, res);
            if nd < dist[ni] {
                dist[ni] = nd;
                steps[ni] = (a, b);
                heap.push(Entry { dist: nd, index: ni });
            }
        }
    }

    Ok(DistanceField {
        width: w,
        height: h,
        resolution: res,
        source,
        dist,
    })
}

/// Robots × frontiers travel distances. Unreachable pairs hold `None`.
#[derive(Clone, Debug, PartialEq)]
pub struct DistanceMatrix {
    rows: usize,
    cols: usize,
    data: Vec<Option<f64>>,
}

impl DistanceMatrix {
    pub fn new(rows: usize, cols: usize, data: Vec<Option<f64>>) -> Self {
        assert_eq!(rows * cols, data.len(), "distance matrix shape");
        Self { rows, cols, data }
    }

    pub fn from_rows(rows: &[Vec<Option<f64>>]) -> Self {
        let cols = rows.first().map_or(0, Vec::len);
        let data: Vec<Option<f64>> = rows.iter().flatten().copied().collect();
        Self::new(rows.len(), cols, data)
    }

    /// All-reachable matrix from plain distances.
    pub fn from_finite(rows: &[Vec<f64>]) -> Self {
        let rows: Vec<Vec<Option<f64>>> = rows
            .iter()
            .map(|r| r.iter().map(|&d| Some(d)).collect())
            .collect();
        Self::from_rows(&rows)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, robot: usize, frontier: usize) -> Option<f64> {
        self.data[robot * self.cols + frontier]
    }

    pub fn row(&self, robot: usize) -> &[Option<f64>] {
        &self.data[robot * self.cols..(robot + 1) * self.cols]
    }

    /// Frontier columns reachable by at least one robot.
    pub fn reachable_columns(&self) -> Vec<usize> {
        (0..self.cols)
            .filter(|&j| (0..self.rows).any(|i| self.get(i, j).is_some()))
            .collect()
    }

    /// Keeps only the listed columns, in the given order.
    pub fn select_columns(&self, cols: &[usize]) -> Self {
        let mut data = Vec::with_capacity(self.rows * cols.len());
        for i in 0..self.rows {
            data.extend(cols.iter().map(|&j| self.get(i, j)));
        }
        Self::new(self.rows, cols.len(), data)
    }

    /// Replaces unreachable entries by ten times the largest finite entry,
    /// or by 10 when no entry is finite.
    pub fn substitute_unreachable(&self) -> Vec<Vec<f64>> {
        let max_finite = self
            .data
            .iter()
            .flatten()
            .copied()
            .fold(None, |m: Option<f64>, d| Some(m.map_or(d, |m| m.max(d))));
        let fill = 10.0 * max_finite.unwrap_or(1.0);
        (0..self.rows)
            .map(|i| self.row(i).iter().map(|d| d.unwrap_or(fill)).collect())
            .collect()
    }
}

/// One wavefront per robot cell.
pub fn distance_fields(belief: &BeliefGrid, robots: &[Cell]) -> Result<Vec<DistanceField>, PathError> {
    robots.iter().map(|&r| wavefront_distances(belief, r)).collect()
}

pub fn matrix_from_fields(belief: &BeliefGrid, fields: &[DistanceField], frontiers: &[Frontier]) -> DistanceMatrix {
    let goals: Vec<Cell> = frontiers.iter().map(|f| f.goal_cell(belief.grid())).collect();
    let data = fields
        .iter()
        .flat_map(|field| goals.iter().map(move |&g| field.get(g)))
        .collect();
    DistanceMatrix::new(fields.len(), frontiers.len(), data)
}

pub fn distance_matrix(
    belief: &BeliefGrid,
    robots: &[Cell],
    frontiers: &[Frontier],
) -> Result<DistanceMatrix, PathError> {
    let fields = distance_fields(belief, robots)?;
    Ok(matrix_from_fields(belief, &fields, frontiers))
}

/// Shortest path from the field's source to `goal`, both ends included.
///
/// Walks back from the goal, each time taking the neighbor `n` minimizing
/// `dist(n) + step(n → current)` (the actual predecessor), ties broken by
/// row-major order.
pub fn extract_path(field: &DistanceField, goal: Cell) -> Result<Vec<Cell>, PathError> {
    if goal.x >= field.width || goal.y >= field.height {
        return Err(PathError::OutsideGrid(goal));
    }
    let w = field.width;
    let mut current = goal;
    let mut d_cur = field.get(goal).ok_or(PathError::Unreachable(goal))?;
    let mut path = vec![goal];
    while current != field.source {
        let mut best: Option<(f64, Cell, f64)> = None;
        for &(dx, dy) in &NEIGHBORS_8 {
            let (nx, ny) = (current.x as isize + dx, current.y as isize + dy);
            if nx < 0 || ny < 0 || nx as usize >= w || ny as usize >= field.height {
                continue;
            }
            let n = Cell::new(nx as usize, ny as usize);
            let dn = field.dist[n.y * w + n.x];
            if !(dn < d_cur) {
                continue;
            }
            let via = dn + step_cost(dx, dy, field.resolution);
            if best.is_none_or(|(b, _, _)| via < b) {
                best = Some((via, n, dn));
            }
        }
        // the descent property guarantees a strictly closer neighbor
        let (_, next, dn) = best.expect("finite distance cell without a closer neighbor");
        current = next;
        d_cur = dn;
        path.push(current);
    }
    path.reverse();
    Ok(path)
}

/// Metric length of a cell path.
pub fn path_length(path: &[Cell], resolution: f64) -> f64 {
    let diag = path
        .windows(2)
        .filter(|p| p[0].x != p[1].x && p[0].y != p[1].y)
        .count();
    metric_length(path.len().saturating_sub(1) - diag, diag, resolution)
}
