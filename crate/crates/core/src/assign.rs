//! Rank-fused frontier assignment.
//!
//! One assignment cycle turns the robots × frontiers distance matrix into
//! three cost layers of the same shape:
//!
//! * `D`: travel distance,
//! * `Ra`: for each frontier, the rank of each robot by distance (0 = closest),
//! * `Rs`: the size rank of each frontier (0 = largest), repeated for every robot.
//!
//! Each layer is divided by its own maximum, the layers are summed with
//! weights `(w_s, w_r, w_d)` into `X = w_s·Rs + w_r·Ra + w_d·D`, and `X` is
//! solved as a linear assignment problem. When robots outnumber frontiers,
//! `X` is padded with high-cost mock columns; robots that land on a mock
//! column are sent to a uniformly drawn real frontier instead.

use std::fmt;
use std::ops::{Index, IndexMut};

use rand::Rng;
use thiserror::Error;

use crate::frontier::Frontier;
use crate::gridmap::{BeliefGrid, Cell};
use crate::pathdist::{distance_matrix, DistanceMatrix, PathError};

/// Cost of a mock frontier column.
pub const MOCK_COST: f64 = 1e6;

#[derive(Debug, Error, PartialEq)]
pub enum AssignError {
    #[error("cost matrix has more rows ({rows}) than columns ({cols}); pad it first")]
    TooManyRows { rows: usize, cols: usize },
    #[error("cost matrix entry ({0}, {1}) is not finite")]
    NonFinite(usize, usize),
}

/// Dense row-major matrix of reals.
#[derive(Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self::filled(rows, cols, 0.0)
    }

    pub fn filled(rows: usize, cols: usize, value: f64) -> Self {
        Self {
            rows,
            cols,
            data: vec![value; rows * cols],
        }
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<f64>) -> Self {
        assert_eq!(rows * cols, data.len(), "matrix shape");
        Self { rows, cols, data }
    }

    /// # Panics
    /// If rows have different lengths.
    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Self {
        let cols = rows.first().map_or(0, |r| r.as_ref().len());
        let mut data = Vec::with_capacity(rows.len() * cols);
        for r in rows {
            assert_eq!(r.as_ref().len(), cols, "ragged matrix rows");
            data.extend_from_slice(r.as_ref());
        }
        Self {
            rows: rows.len(),
            cols,
            data,
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        (0..self.rows).map(|i| self.row(i).to_vec()).collect()
    }

    /// Largest entry; `None` for an empty matrix.
    pub fn max(&self) -> Option<f64> {
        self.data.iter().copied().reduce(f64::max)
    }

    fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|&v| f(v)).collect(),
        }
    }
}

impl Index<(usize, usize)> for Matrix {
    type Output = f64;

    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for Matrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.data[i * self.cols + j]
    }
}

impl fmt::Debug for Matrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list().entries((0..self.rows).map(|i| self.row(i))).finish()
    }
}

/// Layer weights `(w_s, w_r, w_d)` for size rank, robot rank and distance.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Weights {
    pub size: f64,
    pub rank: f64,
    pub distance: f64,
}

impl Weights {
    pub const COEXPLORE: Weights = Weights::new(1.0, 1.0, 1.0);
    pub const CO122: Weights = Weights::new(2.0, 1.0, 2.0);

    pub const fn new(size: f64, rank: f64, distance: f64) -> Self {
        Self {
            size,
            rank,
            distance,
        }
    }

    pub fn total(&self) -> f64 {
        self.size + self.rank + self.distance
    }
}

/// Ranks robots by their distance to one frontier. Ties go to the lower
/// robot index.
pub fn rank_robots(column: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..column.len()).collect();
    order.sort_by(|&a, &b| column[a].total_cmp(&column[b]).then(a.cmp(&b)));
    invert(&order)
}

/// Ranks frontiers by size, largest first. Ties go to the lower frontier id.
pub fn rank_sizes(sizes: &[usize]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..sizes.len()).collect();
    order.sort_by(|&a, &b| sizes[b].cmp(&sizes[a]).then(a.cmp(&b)));
    invert(&order)
}

fn invert(order: &[usize]) -> Vec<usize> {
    let mut ranks = vec![0; order.len()];
    for (rank, &idx) in order.iter().enumerate() {
        ranks[idx] = rank;
    }
    ranks
}

/// Divides every entry by the matrix-wide maximum. An all-zero matrix is
/// returned unchanged.
pub fn normalize_max(m: &Matrix) -> Matrix {
    match m.max() {
        Some(max) if max > 0.0 => m.map(|v| v / max),
        _ => m.clone(),
    }
}

/// The three cost layers of one assignment cycle, before and after
/// normalization, plus the fused cost.
#[derive(Clone, Debug, PartialEq)]
pub struct CostTableau {
    pub weights: Weights,
    /// Distances with unreachable entries substituted.
    pub d_raw: Matrix,
    pub ra_raw: Matrix,
    pub rs_raw: Matrix,
    pub d: Matrix,
    pub ra: Matrix,
    pub rs: Matrix,
}

impl CostTableau {
    /// Builds and normalizes the layers from finite distances and frontier sizes.
    pub fn build(distances: &Matrix, sizes: &[usize], weights: Weights) -> Self {
        let (n, k) = (distances.rows(), distances.cols());
        assert_eq!(sizes.len(), k, "one size per frontier");

        let mut ra_raw = Matrix::zeros(n, k);
        for j in 0..k {
            for (i, r) in rank_robots(&distances.column(j)).into_iter().enumerate() {
                ra_raw[(i, j)] = r as f64;
            }
        }
        let fs = rank_sizes(sizes);
        let mut rs_raw = Matrix::zeros(n, k);
        for i in 0..n {
            for (j, &r) in fs.iter().enumerate() {
                rs_raw[(i, j)] = r as f64;
            }
        }
        Self {
            weights,
            d: normalize_max(distances),
            ra: normalize_max(&ra_raw),
            rs: normalize_max(&rs_raw),
            d_raw: distances.clone(),
            ra_raw,
            rs_raw,
        }
    }

    pub fn combined(&self) -> Matrix {
        combine_cost(self)
    }
}

/// `X = w_s·Rs + w_r·Ra + w_d·D`, elementwise.
pub fn combine_cost(t: &CostTableau) -> Matrix {
    let w = t.weights;
    let data = t
        .rs
        .as_slice()
        .iter()
        .zip(t.ra.as_slice())
        .zip(t.d.as_slice())
        .map(|((&s, &r), &d)| w.size * s + w.rank * r + w.distance * d)
        .collect();
    Matrix::from_vec(t.d.rows(), t.d.cols(), data)
}

/// Appends [`MOCK_COST`] columns until there are at least as many columns
/// as rows.
pub fn pad_mock_frontiers(x: &Matrix) -> Matrix {
    if x.rows() <= x.cols() {
        return x.clone();
    }
    let cols = x.rows();
    let mut out = Matrix::filled(x.rows(), cols, MOCK_COST);
    for i in 0..x.rows() {
        for j in 0..x.cols() {
            out[(i, j)] = x[(i, j)];
        }
    }
    out
}

/// Minimum-cost injective row → column assignment (Kuhn–Munkres with
/// potentials, shortest augmenting paths). Requires `rows ≤ cols`.
pub fn hungarian(cost: &Matrix) -> Result<Vec<usize>, AssignError> {
    let (n, m) = (cost.rows(), cost.cols());
    if n > m {
        return Err(AssignError::TooManyRows { rows: n, cols: m });
    }
    for i in 0..n {
        for j in 0..m {
            if !cost[(i, j)].is_finite() {
                return Err(AssignError::NonFinite(i, j));
            }
        }
    }
    if n == 0 {
        return Ok(Vec::new());
    }

    // 1-based: column 0 is the virtual source, owner[j] = 0 means unmatched.
    let mut u = vec![0.0f64; n + 1];
    let mut v = vec![0.0f64; m + 1];
    let mut owner = vec![0usize; m + 1];
    let mut way = vec![0usize; m + 1];
    for row in 1..=n {
        owner[0] = row;
        let mut j0 = 0;
        let mut minv = vec![f64::INFINITY; m + 1];
        let mut used = vec![false; m + 1];
        loop {
            used[j0] = true;
            let i0 = owner[j0];
            let mut delta = f64::INFINITY;
            let mut j1 = 0;
            for j in 1..=m {
                if used[j] {
                    continue;
                }
                let reduced = cost[(i0 - 1, j - 1)] - u[i0] - v[j];
                if reduced < minv[j] {
                    minv[j] = reduced;
                    way[j] = j0;
                }
                if minv[j] < delta {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for j in 0..=m {
                if used[j] {
                    u[owner[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if owner[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            owner[j0] = owner[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }

    let mut result = vec![usize::MAX; n];
    for j in 1..=m {
        if owner[j] != 0 {
            result[owner[j] - 1] = j - 1;
        }
    }
    Ok(result)
}

/// Sum of `cost[i][cols[i]]`.
pub fn assignment_cost(cost: &Matrix, cols: &[usize]) -> f64 {
    cols.iter().enumerate().map(|(i, &j)| cost[(i, j)]).sum()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Goal {
    /// Frontier id.
    pub frontier: usize,
    /// Drawn at random because the robot landed on a mock column.
    pub overflow: bool,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Assignment {
    /// One entry per robot; `None` when no reachable frontier exists.
    pub goals: Vec<Option<Goal>>,
}

impl Assignment {
    pub fn none(robots: usize) -> Self {
        Self {
            goals: vec![None; robots],
        }
    }

    pub fn is_empty(&self) -> bool {
        self.goals.iter().all(Option::is_none)
    }

    pub fn frontier_of(&self, robot: usize) -> Option<usize> {
        self.goals[robot].map(|g| g.frontier)
    }
}

/// Result of one fused-cost assignment cycle, kept for inspection.
#[derive(Clone, Debug)]
pub struct AssignTrace {
    /// Frontier ids that entered the tableau (reachable by some robot).
    pub columns: Vec<usize>,
    pub tableau: Option<CostTableau>,
    /// Fused cost after mock padding.
    pub padded: Option<Matrix>,
    /// Column chosen per robot by the solver.
    pub solution: Vec<usize>,
    pub assignment: Assignment,
}

/// Runs the fused-cost pipeline on a precomputed distance matrix.
///
/// Frontiers no robot can reach are left out of the cycle. Unreachable
/// pairs among the rest get ten times the largest finite distance.
pub fn assign_from_distances<R: Rng + ?Sized>(
    distances: &DistanceMatrix,
    sizes: &[usize],
    weights: Weights,
    rng: &mut R,
) -> AssignTrace {
    let n = distances.rows();
    let columns = distances.reachable_columns();
    if columns.is_empty() || n == 0 {
        return AssignTrace {
            columns,
            tableau: None,
            padded: None,
            solution: Vec::new(),
            assignment: Assignment::none(n),
        };
    }
    let d = Matrix::from_rows(&distances.select_columns(&columns).substitute_unreachable());
    let kept_sizes: Vec<usize> = columns.iter().map(|&j| sizes[j]).collect();
    let tableau = CostTableau::build(&d, &kept_sizes, weights);
    let padded = pad_mock_frontiers(&combine_cost(&tableau));
    let solution = hungarian(&padded).expect("padded matrix is square or wide and finite");

    let k = columns.len();
    let goals = solution
        .iter()
        .map(|&col| {
            Some(if col < k {
                Goal {
                    frontier: columns[col],
                    overflow: false,
                }
            } else {
                Goal {
                    frontier: columns[rng.random_range(0..k)],
                    overflow: true,
                }
            })
        })
        .collect();
    AssignTrace {
        columns,
        tableau: Some(tableau),
        padded: Some(padded),
        solution,
        assignment: Assignment { goals },
    }
}

/// Full cycle: wavefront distances from each robot cell, then
/// [`assign_from_distances`].
pub fn assign_robots<R: Rng + ?Sized>(
    belief: &BeliefGrid,
    robots: &[Cell],
    frontiers: &[Frontier],
    weights: Weights,
    rng: &mut R,
) -> Result<Assignment, PathError> {
    let d = distance_matrix(belief, robots, frontiers)?;
    let sizes: Vec<usize> = frontiers.iter().map(Frontier::size).collect();
    Ok(assign_from_distances(&d, &sizes, weights, rng).assignment)
}
