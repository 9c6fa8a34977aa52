//! Simulated planar lidar.
//!
//! Rays are traced with an exact grid traversal in cell units. When a ray
//! crosses a cell corner (both boundary parameters within [`CORNER_EPS`]),
//! both side cells are visited before the diagonal step, so a ray cannot
//! slip between two diagonally touching walls.

use std::f64::consts::PI;

use thiserror::Error;

use crate::gridmap::{BeliefGrid, Cell, CellState, Point, WorldGrid};

const CORNER_EPS: f64 = 1e-9;

#[derive(Debug, Error, PartialEq)]
pub enum SensorError {
    #[error("invalid lidar spec: {0}")]
    InvalidSpec(String),
    #[error("pose ({0:.3}, {1:.3}) lies outside the grid")]
    OutsideGrid(f64, f64),
    #[error("pose cell {0} is not free")]
    NotFree(Cell),
    #[error("belief shape {0}x{1} does not match world {2}x{3}")]
    ShapeMismatch(usize, usize, usize, usize),
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LidarSpec {
    /// Meters.
    pub range: f64,
    /// Degrees.
    pub fov: f64,
    /// Degrees between adjacent rays.
    pub angular_resolution: f64,
}

impl Default for LidarSpec {
    fn default() -> Self {
        Self {
            range: 10.6,
            fov: 240.0,
            angular_resolution: 1.0,
        }
    }
}

impl LidarSpec {
    pub fn validate(&self) -> Result<(), SensorError> {
        if !(self.range > 0.0 && self.range.is_finite()) {
            return Err(SensorError::InvalidSpec(format!("range {} must be > 0", self.range)));
        }
        if !(self.fov > 0.0 && self.fov <= 360.0) {
            return Err(SensorError::InvalidSpec(format!("fov {} must be in (0, 360]", self.fov)));
        }
        if !(self.angular_resolution > 0.0 && self.angular_resolution.is_finite()) {
            return Err(SensorError::InvalidSpec(format!(
                "angular resolution {} must be > 0",
                self.angular_resolution
            )));
        }
        let steps = self.fov / self.angular_resolution;
        if (steps - steps.round()).abs() > 1e-9 {
            return Err(SensorError::InvalidSpec(format!(
                "fov {} is not an integer multiple of angular resolution {}",
                self.fov, self.angular_resolution
            )));
        }
        Ok(())
    }

    /// Number of angular steps; the sensor casts `steps() + 1` rays.
    pub fn steps(&self) -> usize {
        (self.fov / self.angular_resolution).round() as usize
    }

    /// Ray directions in radians, centered on `heading`.
    pub fn ray_angles(&self, heading: f64) -> impl Iterator<Item = f64> {
        let start = heading - self.fov.to_radians() / 2.0;
        let step = self.angular_resolution.to_radians();
        (0..=self.steps()).map(move |k| start + k as f64 * step)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RobotPose {
    pub position: Point,
    /// Radians, measured from +x toward +y (downward on the map).
    pub heading: f64,
}

impl RobotPose {
    pub fn new(position: Point, heading: f64) -> Self {
        Self { position, heading }
    }

    /// Pose at the center of `cell` facing +x.
    pub fn at_cell(world: &WorldGrid, cell: Cell) -> Self {
        Self::new(world.grid().cell_center(cell), 0.0)
    }
}

/// Reveals every cell seen from `pose` into `belief`. Returns the number of
/// cells that were Unknown before the call.
pub fn sense(
    world: &WorldGrid,
    belief: &mut BeliefGrid,
    pose: &RobotPose,
    lidar: &LidarSpec,
) -> Result<usize, SensorError> {
    lidar.validate()?;
    let g = world.grid();
    if belief.width() != g.width() || belief.height() != g.height() {
        return Err(SensorError::ShapeMismatch(
            belief.width(),
            belief.height(),
            g.width(),
            g.height(),
        ));
    }
    let origin = g
        .cell_of(pose.position)
        .ok_or(SensorError::OutsideGrid(pose.position.x, pose.position.y))?;
    if world.get(origin) != CellState::Free {
        return Err(SensorError::NotFree(origin));
    }

    let mut revealed = usize::from(belief.reveal(world, origin));
    let mut lit = vec![false; g.len()];
    lit[g.index(origin)] = true;
    for angle in lidar.ray_angles(pose.heading) {
        traverse(world, pose.position, angle, lidar.range, |c| {
            revealed += usize::from(belief.reveal(world, c));
            lit[g.index(c)] = true;
        });
    }
    revealed += complete_corners(world, belief, &lit);
    Ok(revealed)
}

/// Reveals Occupied cells sitting in a concave wall corner next to a lit Free
/// cell. Such a cell is hidden behind its two known wall neighbors from every
/// position except the exact corner point, and would otherwise leave a
/// frontier that can never be cleared.
fn complete_corners(world: &WorldGrid, belief: &mut BeliefGrid, lit: &[bool]) -> usize {
    let g = world.grid();
    let known_wall = |b: &BeliefGrid, c: Option<Cell>| c.is_some_and(|c| b.get(c) == CellState::Occupied);
    let mut n = 0;
    for (i, _) in lit.iter().enumerate().filter(|(_, &l)| l) {
        let p = g.cell_at(i);
        if g.get(p) != CellState::Free {
            continue;
        }
        for (dx, dy) in [(-1, -1), (1, -1), (-1, 1), (1, 1)] {
            let Some(corner) = g.offset(p, dx, dy) else { continue };
            if belief.get(corner) == CellState::Unknown
                && world.get(corner) == CellState::Occupied
                && known_wall(belief, g.offset(p, dx, 0))
                && known_wall(belief, g.offset(p, 0, dy))
            {
                n += usize::from(belief.reveal(world, corner));
            }
        }
    }
    n
}

/// Cells visited by one ray, in traversal order, stopping after the first
/// Occupied cell or once the boundary crossing exceeds `range`.
pub fn trace_ray(world: &WorldGrid, from: Point, angle: f64, range: f64) -> Vec<Cell> {
    let mut out = Vec::new();
    traverse(world, from, angle, range, |c| {
        out.push(c);
    });
    out
}

fn traverse(world: &WorldGrid, from: Point, angle: f64, range: f64, mut visit: impl FnMut(Cell)) {
    let g = world.grid();
    let res = g.resolution();
    let (ox, oy) = (from.x / res, from.y / res);
    let limit = range / res + CORNER_EPS;
    let (dx, dy) = (angle.cos(), angle.sin());

    let mut cx = ox.floor() as isize;
    let mut cy = oy.floor() as isize;
    let sx: isize = if dx > 0.0 { 1 } else { -1 };
    let sy: isize = if dy > 0.0 { 1 } else { -1 };
    let boundary = |o: f64, c: isize, d: f64| -> (f64, f64) {
        if d > 0.0 {
            ((c as f64 + 1.0 - o) / d, 1.0 / d)
        } else if d < 0.0 {
            ((o - c as f64) / -d, -1.0 / d)
        } else {
            (f64::INFINITY, f64::INFINITY)
        }
    };
    let (mut tmax_x, delta_x) = boundary(ox, cx, dx);
    let (mut tmax_y, delta_y) = boundary(oy, cy, dy);

    let occupied = |x: isize, y: isize| -> Option<bool> {
        if x < 0 || y < 0 {
            return None;
        }
        let c = Cell::new(x as usize, y as usize);
        g.contains(c).then(|| g.get(c) == CellState::Occupied)
    };

    loop {
        let t = tmax_x.min(tmax_y);
        if t > limit {
            return;
        }
        if (tmax_x - tmax_y).abs() <= CORNER_EPS {
            let mut blocked = false;
            for (x, y) in [(cx + sx, cy), (cx, cy + sy)] {
                match occupied(x, y) {
                    Some(occ) => {
                        visit(Cell::new(x as usize, y as usize));
                        blocked |= occ;
                    }
                    None => return,
                }
            }
            if blocked {
                return;
            }
            cx += sx;
            cy += sy;
            tmax_x += delta_x;
            tmax_y += delta_y;
        } else if tmax_x < tmax_y {
            cx += sx;
            tmax_x += delta_x;
        } else {
            cy += sy;
            tmax_y += delta_y;
        }
        match occupied(cx, cy) {
            Some(occ) => {
                visit(Cell::new(cx as usize, cy as usize));
                if occ {
                    return;
                }
            }
            None => return,
        }
    }
}

/// Wraps an angle into `(-PI, PI]`.
pub fn wrap_angle(a: f64) -> f64 {
    let mut r = a % (2.0 * PI);
    if r <= -PI {
        r += 2.0 * PI;
    } else if r > PI {
        r -= 2.0 * PI;
    }
    r
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gridmap::load_world;
    use std::collections::BTreeSet;

    fn open_world(n: usize) -> WorldGrid {
        let mut text = format!("{n} {n} 1\n");
        for y in 0..n {
            for x in 0..n {
                let border = x == 0 || y == 0 || x == n - 1 || y == n - 1;
                text.push(if border { '#' } else { '.' });
            }
            text.push('\n');
        }
        load_world(&text).unwrap()
    }

    fn known(belief: &BeliefGrid) -> BTreeSet<Cell> {
        let g = belief.grid();
        (0..g.len())
            .filter(|&i| g.cells()[i] != CellState::Unknown)
            .map(|i| g.cell_at(i))
            .collect()
    }

    #[test]
    fn lidar_defaults() {
        let l = LidarSpec::default();
        assert_eq!((l.range, l.fov, l.angular_resolution), (10.6, 240.0, 1.0));
        assert_eq!(l.steps(), 240);
        assert!(l.validate().is_ok());
    }

    #[test]
    fn lidar_validation() {
        let bad = [
            LidarSpec { range: 0.0, ..Default::default() },
            LidarSpec { fov: 0.0, ..Default::default() },
            LidarSpec { fov: 361.0, ..Default::default() },
            LidarSpec { angular_resolution: 0.0, ..Default::default() },
            LidarSpec { angular_resolution: 0.7, ..Default::default() },
        ];
        for spec in bad {
            assert!(spec.validate().is_err(), "{spec:?}");
        }
    }

    #[test]
    fn single_cell_room_is_idempotent() {
        let w = load_world("3 3 1\n###\n#.#\n###\n").unwrap();
        let mut b = BeliefGrid::new(&w);
        let pose = RobotPose::at_cell(&w, Cell::new(1, 1));
        let n = sense(&w, &mut b, &pose, &LidarSpec::default()).unwrap();
        // the cell itself plus walls in the 240 degree cone facing +x
        assert!(n >= 2);
        assert_eq!(b.get(Cell::new(1, 1)), CellState::Free);
        assert_eq!(b.get(Cell::new(2, 1)), CellState::Occupied);
        // directly behind is outside the cone
        assert_eq!(b.get(Cell::new(0, 1)), CellState::Unknown);
        assert_eq!(sense(&w, &mut b, &pose, &LidarSpec::default()).unwrap(), 0);
    }

    #[test]
    fn wall_occludes_far_cell() {
        let w = load_world("7 3 1\n#######\n#..#..#\n#######\n").unwrap();
        let mut b = BeliefGrid::new(&w);
        let pose = RobotPose::at_cell(&w, Cell::new(1, 1));
        let spec = LidarSpec { fov: 360.0, ..Default::default() };
        sense(&w, &mut b, &pose, &spec).unwrap();
        assert_eq!(b.get(Cell::new(3, 1)), CellState::Occupied);
        assert_eq!(b.get(Cell::new(4, 1)), CellState::Unknown);
        assert_eq!(b.get(Cell::new(5, 1)), CellState::Unknown);
    }

    #[test]
    fn sense_never_writes_wrong_values() {
        let w = load_world("8 6 0.5\n########\n#..#...#\n#......#\n#.##...#\n#......#\n########\n")
            .unwrap();
        let mut b = BeliefGrid::new(&w);
        let spec = LidarSpec { fov: 360.0, ..Default::default() };
        for cell in [Cell::new(1, 1), Cell::new(5, 2), Cell::new(2, 4)] {
            sense(&w, &mut b, &RobotPose::at_cell(&w, cell), &spec).unwrap();
            for (i, s) in b.grid().cells().iter().enumerate() {
                if *s != CellState::Unknown {
                    assert_eq!(*s, w.grid().cells()[i]);
                }
            }
        }
    }

    #[test]
    fn pose_errors() {
        let w = load_world("3 3 1\n###\n#.#\n###\n").unwrap();
        let mut b = BeliefGrid::new(&w);
        let spec = LidarSpec::default();
        let out = RobotPose::new(Point::new(-0.5, 1.5), 0.0);
        assert!(matches!(sense(&w, &mut b, &out, &spec), Err(SensorError::OutsideGrid(..))));
        let far = RobotPose::new(Point::new(10.0, 1.5), 0.0);
        assert!(matches!(sense(&w, &mut b, &far, &spec), Err(SensorError::OutsideGrid(..))));
        let wall = RobotPose::new(Point::new(0.5, 0.5), 0.0);
        assert!(matches!(sense(&w, &mut b, &wall, &spec), Err(SensorError::NotFree(_))));
    }

    /// Slab intersection of the ray `o + t·d`, `t ≥ 0`, with the unit cell box.
    fn slab(o: (f64, f64), d: (f64, f64), cell: (f64, f64)) -> Option<(f64, f64)> {
        let mut tmin = 0.0f64;
        let mut tmax = f64::INFINITY;
        for (oi, di, lo) in [(o.0, d.0, cell.0), (o.1, d.1, cell.1)] {
            let hi = lo + 1.0;
            if di.abs() < 1e-15 {
                if oi < lo || oi > hi {
                    return None;
                }
            } else {
                let a = (lo - oi) / di;
                let b = (hi - oi) / di;
                tmin = tmin.max(a.min(b));
                tmax = tmax.min(a.max(b));
            }
        }
        Some((tmin, tmax))
    }

    /// Brute-force visibility in an obstacle-free neighborhood: a cell is seen
    /// iff some ray meets its box at a parameter within range. Returns the
    /// seen set and the cells whose decision sits within `eps` of a tie.
    fn slab_oracle(
        origin: (f64, f64),
        angles: &[f64],
        range: f64,
        span: isize,
    ) -> (BTreeSet<(isize, isize)>, BTreeSet<(isize, isize)>) {
        let eps = 1e-7;
        let (ocx, ocy) = (origin.0.floor() as isize, origin.1.floor() as isize);
        let mut seen = BTreeSet::new();
        let mut ambiguous = BTreeSet::new();
        for x in ocx - span..=ocx + span {
            for y in ocy - span..=ocy + span {
                let mut best = f64::NEG_INFINITY;
                for &a in angles {
                    if let Some((t0, t1)) = slab(origin, (a.cos(), a.sin()), (x as f64, y as f64)) {
                        let margin = (t1 - t0).min(range - t0);
                        best = best.max(margin);
                    }
                }
                if best.abs() <= eps {
                    ambiguous.insert((x, y));
                } else if best > 0.0 {
                    seen.insert((x, y));
                }
            }
        }
        (seen, ambiguous)
    }

    #[test]
    fn open_world_360_matches_slab_oracle() {
        let w = open_world(15);
        let spec = LidarSpec { range: 2.0, fov: 360.0, angular_resolution: 1.0 };
        let center = Cell::new(7, 7);
        let pose = RobotPose::at_cell(&w, center);
        let mut b = BeliefGrid::new(&w);
        sense(&w, &mut b, &pose, &spec).unwrap();
        let angles: Vec<f64> = spec.ray_angles(pose.heading).collect();
        let (seen, ambiguous) = slab_oracle((7.5, 7.5), &angles, 2.0, 4);
        let got: BTreeSet<(isize, isize)> =
            known(&b).into_iter().map(|c| (c.x as isize, c.y as isize)).collect();
        for cell in seen.union(&got) {
            if ambiguous.contains(cell) {
                continue;
            }
            assert_eq!(seen.contains(cell), got.contains(cell), "cell {cell:?}");
        }
        // every revealed cell lies within range of the robot center
        for c in known(&b) {
            let p = w.grid().cell_center(c);
            let nearest_x = (p.x - 0.5).max(7.5_f64.min(p.x + 0.5));
            let nearest_y = (p.y - 0.5).max(7.5_f64.min(p.y + 0.5));
            assert!((nearest_x - 7.5).hypot(nearest_y - 7.5) <= 2.0 + 1e-9, "{c}");
        }
        // a 5x5 block around the robot minus the far corners is visible
        assert!(got.contains(&(9, 7)) && got.contains(&(5, 7)) && got.contains(&(7, 9)));
        assert!(!got.contains(&(10, 7)));
    }

    #[test]
    fn open_world_360_is_point_symmetric() {
        let w = open_world(31);
        let spec = LidarSpec { range: 6.0, fov: 360.0, angular_resolution: 1.0 };
        let mut b = BeliefGrid::new(&w);
        sense(&w, &mut b, &RobotPose::at_cell(&w, Cell::new(15, 15)), &spec).unwrap();
        let set = known(&b);
        for c in &set {
            let mirror = Cell::new(30 - c.x, 30 - c.y);
            assert!(set.contains(&mirror), "{c} revealed but not {mirror}");
        }
    }

    #[test]
    fn heading_full_turn_invariance() {
        let w = load_world("9 7 0.5\n#########\n#...#...#\n#.#.....#\n#...##..#\n#.......#\n#..#....#\n#########\n")
            .unwrap();
        let spec = LidarSpec::default();
        for heading in [0.0, 0.3, 1.0, -2.2, PI / 4.0] {
            let p = Point::new(1.3, 0.9);
            let mut b1 = BeliefGrid::new(&w);
            let mut b2 = BeliefGrid::new(&w);
            sense(&w, &mut b1, &RobotPose::new(p, heading), &spec).unwrap();
            sense(&w, &mut b2, &RobotPose::new(p, heading + 2.0 * PI), &spec).unwrap();
            assert_eq!(known(&b1), known(&b2), "heading {heading}");
        }
    }

    #[test]
    fn corner_ray_does_not_leak_between_diagonal_walls() {
        // walls at (2,1) and (1,2) touch at a corner; (2,2) lies beyond the seam.
        let w = load_world("5 5 1\n#####\n#.#.#\n##..#\n#...#\n#####\n").unwrap();
        let cells = trace_ray(&w, Point::new(1.5, 1.5), PI / 4.0, 10.0);
        assert!(!cells.contains(&Cell::new(2, 2)), "{cells:?}");
    }

    #[test]
    fn concave_corners_are_completed() {
        let w = load_world("6 5 1\n######\n#....#\n#....#\n#....#\n######\n").unwrap();
        let mut b = BeliefGrid::new(&w);
        let spec = LidarSpec { fov: 360.0, ..Default::default() };
        sense(&w, &mut b, &RobotPose::at_cell(&w, Cell::new(2, 2)), &spec).unwrap();
        assert_eq!(b.known_count(), 30);
    }

    #[test]
    fn corner_completion_never_reveals_free_cells() {
        let w = load_world("5 5 1\n#####\n#.#.#\n##..#\n#...#\n#####\n").unwrap();
        let mut b = BeliefGrid::new(&w);
        let spec = LidarSpec { fov: 360.0, ..Default::default() };
        sense(&w, &mut b, &RobotPose::at_cell(&w, Cell::new(1, 1)), &spec).unwrap();
        assert_eq!(b.get(Cell::new(2, 2)), CellState::Unknown);
    }

    #[test]
    fn range_is_inclusive_at_boundary() {
        let w = open_world(9);
        // from the center of (1,4) heading +x, the boundary into (3,4) is at 1.5
        let cells = trace_ray(&w, Point::new(1.5, 4.5), 0.0, 1.5);
        assert_eq!(cells, vec![Cell::new(2, 4), Cell::new(3, 4)]);
        let cells = trace_ray(&w, Point::new(1.5, 4.5), 0.0, 1.49);
        assert_eq!(cells, vec![Cell::new(2, 4)]);
    }

    #[test]
    fn wrap_angle_range() {
        for a in [-7.0, -PI, 0.0, PI, 3.5, 12.0] {
            let r = wrap_angle(a);
            assert!(r > -PI - 1e-12 && r <= PI + 1e-12, "{a} -> {r}");
            assert!(((a - r) / (2.0 * PI) - ((a - r) / (2.0 * PI)).round()).abs() < 1e-9);
        }
    }
}
