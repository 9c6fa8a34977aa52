//! Brute-force references shared by the integration suites.
#![allow(dead_code)]

use std::path::PathBuf;

use coexplore::assign::Matrix;
use coexplore::gridmap::{BeliefGrid, Cell, CellState, Grid};
use rand::Rng;

/// Minimum over every injective row → column map, by recursion.
pub fn brute_force_min(cost: &Matrix) -> f64 {
    fn go(cost: &Matrix, row: usize, used: &mut Vec<bool>, acc: f64, best: &mut f64) {
        if row == cost.rows() {
            *best = best.min(acc);
            return;
        }
        for j in 0..cost.cols() {
            if !used[j] {
                used[j] = true;
                go(cost, row + 1, used, acc + cost[(row, j)], best);
                used[j] = false;
            }
        }
    }
    let mut best = f64::INFINITY;
    go(cost, 0, &mut vec![false; cost.cols()], 0.0, &mut best);
    best
}

/// Row sum in row order, matching how the library totals an assignment.
pub fn total(cost: &Matrix, cols: &[usize]) -> f64 {
    let mut s = 0.0;
    for (i, &j) in cols.iter().enumerate() {
        s += cost[(i, j)];
    }
    s
}

/// Single-source shortest paths by repeated full relaxation over every
/// 8-neighbor edge until nothing changes. Lengths are tracked as
/// (axis, diagonal) step counts and compared by their metric value.
pub fn bellman_ford(belief: &BeliefGrid, source: Cell) -> Vec<Option<f64>> {
    let g = belief.grid();
    let (w, h, res) = (g.width(), g.height(), g.resolution());
    let value = |a: usize, b: usize| a as f64 * res + b as f64 * (res * 2f64.sqrt());
    let free = |x: usize, y: usize| g.get(Cell::new(x, y)) == CellState::Free;
    let mut best: Vec<Option<(usize, usize)>> = vec![None; w * h];
    best[source.y * w + source.x] = Some((0, 0));
    loop {
        let mut changed = false;
        for y in 0..h {
            for x in 0..w {
                let Some((a, b)) = best[y * w + x] else { continue };
                for dy in -1i64..=1 {
                    for dx in -1i64..=1 {
                        if dx == 0 && dy == 0 {
                            continue;
                        }
                        let (nx, ny) = (x as i64 + dx, y as i64 + dy);
                        if nx < 0 || ny < 0 || nx >= w as i64 || ny >= h as i64 {
                            continue;
                        }
                        let (nx, ny) = (nx as usize, ny as usize);
                        if !free(nx, ny) {
                            continue;
                        }
                        let cand = if dx != 0 && dy != 0 { (a, b + 1) } else { (a + 1, b) };
                        let slot = &mut best[ny * w + nx];
                        if slot.is_none_or(|(a0, b0)| value(cand.0, cand.1) < value(a0, b0)) {
                            *slot = Some(cand);
                            changed = true;
                        }
                    }
                }
            }
        }
        if !changed {
            break;
        }
    }
    best.into_iter().map(|p| p.map(|(a, b)| value(a, b))).collect()
}

/// Random belief: each cell Free, Occupied or Unknown with the given odds.
pub fn random_belief<R: Rng>(rng: &mut R, w: usize, h: usize, p_free: f64, p_unknown: f64) -> BeliefGrid {
    let mut g = Grid::filled(w, h, 0.25, CellState::Occupied);
    for i in 0..g.len() {
        let u: f64 = rng.random();
        let s = if u < p_free {
            CellState::Free
        } else if u < p_free + p_unknown {
            CellState::Unknown
        } else {
            CellState::Occupied
        };
        g.set(g.cell_at(i), s);
    }
    BeliefGrid::from_grid(g)
}

pub fn free_cells(belief: &BeliefGrid) -> Vec<Cell> {
    let g = belief.grid();
    (0..g.len()).map(|i| g.cell_at(i)).filter(|&c| g.get(c) == CellState::Free).collect()
}

/// Matrix of small integers stored as floats, so sums are exact.
pub fn random_int_matrix<R: Rng>(rng: &mut R, rows: usize, cols: usize, max: u32) -> Matrix {
    let data = (0..rows * cols).map(|_| rng.random_range(0..=max) as f64).collect();
    Matrix::from_vec(rows, cols, data)
}

pub fn scenario(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../scenarios").join(format!("{name}.toml"))
}
