mod common;

use coexplore::assign::{assignment_cost, hungarian, Matrix};
use coexplore::frontier::detect_frontiers;
use coexplore::gridmap::{BeliefGrid, Cell, CellState, Grid};
use coexplore::pathdist::{distance_matrix, extract_path, path_length, wavefront_distances};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use common::*;

#[test]
fn hungarian_matches_brute_force_on_integer_matrices() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for case in 0..1200 {
        let rows = rng.random_range(1..=7);
        let cols = rng.random_range(rows..=7);
        let m = random_int_matrix(&mut rng, rows, cols, 50);
        let sol = hungarian(&m).unwrap();
        assert_eq!(sol.len(), rows);
        let mut seen = sol.clone();
        seen.sort();
        seen.dedup();
        assert_eq!(seen.len(), rows, "case {case}: columns reused");
        assert_eq!(total(&m, &sol), brute_force_min(&m), "case {case}: {m:?}");
    }
}

#[test]
fn hungarian_matches_brute_force_on_real_matrices() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for case in 0..1000 {
        let data: Vec<f64> = (0..25).map(|_| rng.random_range(0.0..10.0)).collect();
        let m = Matrix::from_vec(5, 5, data);
        let sol = hungarian(&m).unwrap();
        let diff = (assignment_cost(&m, &sol) - brute_force_min(&m)).abs();
        assert!(diff < 1e-9, "case {case}: off by {diff}");
    }
}

#[test]
fn hungarian_handles_degenerate_matrices() {
    let zeros = Matrix::zeros(4, 6);
    assert_eq!(total(&zeros, &hungarian(&zeros).unwrap()), 0.0);
    let same = Matrix::filled(3, 3, 7.0);
    assert_eq!(total(&same, &hungarian(&same).unwrap()), 21.0);
    let empty = Matrix::zeros(0, 3);
    assert!(hungarian(&empty).unwrap().is_empty());
}

#[test]
fn wavefront_matches_bellman_ford() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for case in 0..100 {
        let belief = random_belief(&mut rng, 12, 12, 0.65, 0.1);
        let free = free_cells(&belief);
        if free.is_empty() {
            continue;
        }
        let source = free[rng.random_range(0..free.len())];
        let field = wavefront_distances(&belief, source).unwrap();
        let oracle = bellman_ford(&belief, source);
        for (i, expected) in oracle.iter().enumerate() {
            let c = belief.grid().cell_at(i);
            assert_eq!(field.get(c), *expected, "case {case}, cell {c}");
        }
    }
}

#[test]
fn extracted_paths_are_shortest_and_free() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for _ in 0..100 {
        let belief = random_belief(&mut rng, 12, 12, 0.7, 0.05);
        let free = free_cells(&belief);
        if free.len() < 2 {
            continue;
        }
        let source = free[0];
        let field = wavefront_distances(&belief, source).unwrap();
        for &goal in &free {
            let Some(d) = field.get(goal) else {
                assert!(extract_path(&field, goal).is_err());
                continue;
            };
            let path = extract_path(&field, goal).unwrap();
            assert_eq!(path.first(), Some(&source));
            assert_eq!(path.last(), Some(&goal));
            for p in path.windows(2) {
                assert!(p[0].x.abs_diff(p[1].x) <= 1 && p[0].y.abs_diff(p[1].y) <= 1);
                assert_ne!(p[0], p[1]);
            }
            assert!(path.iter().all(|&c| belief.get(c) == CellState::Free));
            assert_eq!(path_length(&path, 0.25), d);
        }
    }
}

#[test]
fn distance_matrix_matches_oracle_on_two_robots_three_frontiers() {
    // known region on the left, three separate openings into unknown space
    let rows = [
        "##########",
        "#.....#..?",
        "#.....#.??",
        "#.##..#..?",
        "#......###",
        "#.#.##...?",
        "#.#.....??",
        "#...##.###",
        "#?....####",
        "##########",
    ];
    let mut g = Grid::filled(10, 10, 0.5, CellState::Unknown);
    for (y, row) in rows.iter().enumerate() {
        for (x, ch) in row.chars().enumerate() {
            let s = match ch {
                '.' => CellState::Free,
                '#' => CellState::Occupied,
                _ => CellState::Unknown,
            };
            g.set(Cell::new(x, y), s);
        }
    }
    let belief = BeliefGrid::from_grid(g);
    let frontiers = detect_frontiers(&belief, 1);
    assert_eq!(frontiers.len(), 3);
    let robots = [Cell::new(1, 1), Cell::new(4, 6)];
    let d = distance_matrix(&belief, &robots, &frontiers).unwrap();
    assert_eq!((d.rows(), d.cols()), (2, 3));
    for (i, &r) in robots.iter().enumerate() {
        let oracle = bellman_ford(&belief, r);
        for (j, f) in frontiers.iter().enumerate() {
            let goal = f.goal_cell(belief.grid());
            let expected = oracle[belief.grid().index(goal)];
            assert_eq!(d.get(i, j), expected, "robot {i}, frontier {j}");
            assert!(expected.is_some());
        }
    }
}
