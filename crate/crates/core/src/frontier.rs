//! Frontier detection and clustering.
//!
//! A frontier cell is a Free belief cell with at least one Unknown cell in
//! its 8-neighborhood. Frontier cells are grouped into 8-connected clusters
//! by flood fill; clusters are numbered by their smallest row-major index.

use std::collections::VecDeque;

use crate::gridmap::{BeliefGrid, Cell, CellState, Grid, Point};

#[derive(Clone, Debug, PartialEq)]
pub struct Frontier {
    pub id: usize,
    /// Member cells in row-major order.
    pub cells: Vec<Cell>,
    /// Mean of member cell centers, meters.
    pub centroid: Point,
}

impl Frontier {
    /// Builds a frontier from its cells, sorting them and computing the centroid.
    pub fn from_cells(id: usize, mut cells: Vec<Cell>, grid: &Grid) -> Self {
        assert!(!cells.is_empty(), "a frontier needs at least one cell");
        cells.sort_by_key(|c| (c.y, c.x));
        let n = cells.len() as f64;
        let (sx, sy) = cells.iter().fold((0.0, 0.0), |(sx, sy), &c| {
            let p = grid.cell_center(c);
            (sx + p.x, sy + p.y)
        });
        Self {
            id,
            cells,
            centroid: Point::new(sx / n, sy / n),
        }
    }

    pub fn size(&self) -> usize {
        self.cells.len()
    }

    /// Member cell nearest to the centroid; ties go to the earliest cell in
    /// row-major order.
    pub fn goal_cell(&self, grid: &Grid) -> Cell {
        let mut best = self.cells[0];
        let mut best_d = f64::INFINITY;
        for &c in &self.cells {
            let d = grid.cell_center(c).distance(&self.centroid);
            if d < best_d {
                best_d = d;
                best = c;
            }
        }
        best
    }
}

pub fn is_frontier_cell(belief: &BeliefGrid, cell: Cell) -> bool {
    let g = belief.grid();
    g.get(cell) == CellState::Free && g.neighbors8(cell).any(|n| g.get(n) == CellState::Unknown)
}

/// All frontier cells, in row-major order.
pub fn detect_frontier_cells(belief: &BeliefGrid) -> Vec<Cell> {
    let g = belief.grid();
    (0..g.len())
        .map(|i| g.cell_at(i))
        .filter(|&c| is_frontier_cell(belief, c))
        .collect()
}

/// Partitions frontier cells into 8-connected clusters.
pub fn cluster_frontiers(belief: &BeliefGrid, cells: &[Cell]) -> Vec<Frontier> {
    let g = belief.grid();
    let mut member = vec![false; g.len()];
    for &c in cells {
        member[g.index(c)] = true;
    }
    let mut seeds: Vec<Cell> = cells.to_vec();
    seeds.sort_by_key(|c| (c.y, c.x));

    let mut visited = vec![false; g.len()];
    let mut out = Vec::new();
    let mut queue = VecDeque::new();
    for seed in seeds {
        if visited[g.index(seed)] {
            continue;
        }
        visited[g.index(seed)] = true;
        queue.push_back(seed);
        let mut component = Vec::new();
        while let Some(c) = queue.pop_front() {
            component.push(c);
            for n in g.neighbors8(c) {
                let i = g.index(n);
                if member[i] && !visited[i] {
                    visited[i] = true;
                    queue.push_back(n);
                }
            }
        }
        out.push(Frontier::from_cells(out.len(), component, g));
    }
    out
}

/// Detects and clusters frontiers, dropping clusters smaller than
/// `min_size` and renumbering the rest.
pub fn detect_frontiers(belief: &BeliefGrid, min_size: usize) -> Vec<Frontier> {
    let cells = detect_frontier_cells(belief);
    let mut frontiers = cluster_frontiers(belief, &cells);
    frontiers.retain(|f| f.size() >= min_size.max(1));
    for (i, f) in frontiers.iter_mut().enumerate() {
        f.id = i;
    }
    frontiers
}
