//! Procedural worlds, start placement and scenario files.
//!
//! Three archetypes: mazes with long dead-end corridors, offices made of many
//! small rooms joined by doors, and open arenas with scattered small
//! obstacles. Every generator returns a closed-border world whose Free cells
//! are 4-connected and free of diagonal seams (two Free cells touching only
//! at a corner between two walls), and is a pure function of its arguments.

use std::collections::VecDeque;
use std::path::{Path, PathBuf};

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::gridmap::{load_world_file, Cell, CellState, Grid, GridError, WorldGrid};
use crate::sensor::LidarSpec;
use crate::sim::SimConfig;
use crate::strategies::StrategyId;

/// Cell size used by the generators, meters.
pub const DEFAULT_RESOLUTION: f64 = 0.25;

#[derive(Debug, Error)]
pub enum WorldError {
    #[error("infeasible world parameters: {0}")]
    Infeasible(String),
    #[error(transparent)]
    Grid(#[from] GridError),
    #[error("scenario {path}: {message}")]
    Scenario { path: String, message: String },
}

fn infeasible(msg: impl Into<String>) -> WorldError {
    WorldError::Infeasible(msg.into())
}

struct Canvas {
    width: usize,
    height: usize,
    cells: Vec<CellState>,
}

impl Canvas {
    fn walls(width: usize, height: usize) -> Self {
        Self { width, height, cells: vec![CellState::Occupied; width * height] }
    }

    fn room(width: usize, height: usize) -> Self {
        let mut c = Self::walls(width, height);
        c.fill(1, 1, width - 2, height - 2, CellState::Free);
        c
    }

    fn get(&self, x: usize, y: usize) -> CellState {
        self.cells[y * self.width + x]
    }

    fn set(&mut self, x: usize, y: usize, s: CellState) {
        self.cells[y * self.width + x] = s;
    }

    fn fill(&mut self, x0: usize, y0: usize, w: usize, h: usize, s: CellState) {
        for y in y0..y0 + h {
            for x in x0..x0 + w {
                self.set(x, y, s);
            }
        }
    }

    fn into_world(self) -> Result<WorldGrid, GridError> {
        WorldGrid::from_cells(self.width, self.height, DEFAULT_RESOLUTION, self.cells)
    }
}

/// Randomized depth-first-search maze. Corridors are `corridor_width` cells
/// wide and separated by one-cell walls; any leftover margin on the right or
/// bottom stays solid.
pub fn generate_maze(
    width: usize,
    height: usize,
    corridor_width: usize,
    seed: u64,
) -> Result<WorldGrid, WorldError> {
    if corridor_width == 0 {
        return Err(infeasible("corridor width must be at least 1"));
    }
    let pitch = corridor_width + 1;
    if width < pitch + 1 || height < pitch + 1 {
        return Err(infeasible(format!(
            "{width}x{height} cannot hold a corridor of width {corridor_width}"
        )));
    }
    let (nx, ny) = ((width - 1) / pitch, (height - 1) / pitch);
    let mut canvas = Canvas::walls(width, height);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let origin = |i: usize| 1 + i * pitch;
    let carve_cell = |c: &mut Canvas, i: usize, j: usize| {
        c.fill(origin(i), origin(j), corridor_width, corridor_width, CellState::Free);
    };

    let mut visited = vec![false; nx * ny];
    let mut stack = vec![(0usize, 0usize)];
    visited[0] = true;
    carve_cell(&mut canvas, 0, 0);
    while let Some(&(i, j)) = stack.last() {
        let mut options = Vec::with_capacity(4);
        if i > 0 && !visited[j * nx + i - 1] {
            options.push((i - 1, j));
        }
        if i + 1 < nx && !visited[j * nx + i + 1] {
            options.push((i + 1, j));
        }
        if j > 0 && !visited[(j - 1) * nx + i] {
            options.push((i, j - 1));
        }
        if j + 1 < ny && !visited[(j + 1) * nx + i] {
            options.push((i, j + 1));
        }
        if options.is_empty() {
            stack.pop();
            continue;
        }
        let (ni, nj) = options[rng.random_range(0..options.len())];
        visited[nj * nx + ni] = true;
        carve_cell(&mut canvas, ni, nj);
        // open the wall between the two cells
        if ni != i {
            let x = origin(i.max(ni)) - 1;
            canvas.fill(x, origin(j), 1, corridor_width, CellState::Free);
        } else {
            let y = origin(j.max(nj)) - 1;
            canvas.fill(origin(i), y, corridor_width, 1, CellState::Free);
        }
        stack.push((ni, nj));
    }
    Ok(canvas.into_world()?)
}

/// Axis-aligned rectangle of interior cells.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Rect {
    pub x: usize,
    pub y: usize,
    pub width: usize,
    pub height: usize,
}

#[derive(Clone, Debug)]
pub struct OfficeLayout {
    pub world: WorldGrid,
    pub rooms: Vec<Rect>,
}

/// Recursive-division office: regions larger than `room_max` are split by a
/// wall with one door of `door_width` cells until every room side is at most
/// `room_max` or cannot be split into two sides of at least `room_min`.
pub fn generate_office(
    width: usize,
    height: usize,
    room_min: usize,
    room_max: usize,
    door_width: usize,
    seed: u64,
) -> Result<WorldGrid, WorldError> {
    Ok(generate_office_layout(width, height, room_min, room_max, door_width, seed)?.world)
}

pub fn generate_office_layout(
    width: usize,
    height: usize,
    room_min: usize,
    room_max: usize,
    door_width: usize,
    seed: u64,
) -> Result<OfficeLayout, WorldError> {
    if room_min == 0 || room_max < room_min {
        return Err(infeasible(format!("room sizes {room_min}..={room_max} are invalid")));
    }
    if door_width == 0 || door_width > room_min {
        return Err(infeasible(format!(
            "door width {door_width} must be in 1..={room_min}"
        )));
    }
    if width < room_min + 2 || height < room_min + 2 {
        return Err(infeasible(format!("{width}x{height} is smaller than one room")));
    }
    let mut canvas = Canvas::room(width, height);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut rooms = Vec::new();
    let mut pending = vec![Rect { x: 1, y: 1, width: width - 2, height: height - 2 }];

    while let Some(r) = pending.pop() {
        let can_split_x = r.width > room_max && r.width > 2 * room_min;
        let can_split_y = r.height > room_max && r.height > 2 * room_min;
        let vertical = match (can_split_x, can_split_y) {
            (false, false) => {
                rooms.push(r);
                continue;
            }
            (true, false) => true,
            (false, true) => false,
            (true, true) if r.width != r.height => r.width > r.height,
            (true, true) => rng.random_bool(0.5),
        };
        let (span, len) = if vertical { (r.width, r.height) } else { (r.height, r.width) };
        // wall offsets leaving at least room_min cells on either side and not
        // landing on a door in the enclosing walls
        let candidates: Vec<usize> = (room_min..span - room_min)
            .filter(|&k| {
                let ends = if vertical {
                    [(r.x + k, r.y - 1), (r.x + k, r.y + r.height)]
                } else {
                    [(r.x - 1, r.y + k), (r.x + r.width, r.y + k)]
                };
                ends.iter().all(|&(x, y)| canvas.get(x, y) == CellState::Occupied)
            })
            .collect();
        if candidates.is_empty() {
            rooms.push(r);
            continue;
        }
        let k = candidates[rng.random_range(0..candidates.len())];
        let door = rng.random_range(0..=len - door_width);
        if vertical {
            canvas.fill(r.x + k, r.y, 1, r.height, CellState::Occupied);
            canvas.fill(r.x + k, r.y + door, 1, door_width, CellState::Free);
            pending.push(Rect { x: r.x + k + 1, width: r.width - k - 1, ..r });
            pending.push(Rect { width: k, ..r });
        } else {
            canvas.fill(r.x, r.y + k, r.width, 1, CellState::Occupied);
            canvas.fill(r.x + door, r.y + k, door_width, 1, CellState::Free);
            pending.push(Rect { y: r.y + k + 1, height: r.height - k - 1, ..r });
            pending.push(Rect { height: k, ..r });
        }
    }
    rooms.sort_by_key(|r| (r.y, r.x));
    Ok(OfficeLayout { world: canvas.into_world()?, rooms })
}

/// Open arena with up to `obstacle_count` rectangular obstacles whose sides
/// are drawn from `1..=obstacle_size`. Placements that would disconnect the
/// free space, create a diagonal seam or touch the outer wall are rejected
/// and redrawn a bounded number of times.
pub fn generate_open(
    width: usize,
    height: usize,
    obstacle_count: usize,
    obstacle_size: usize,
    seed: u64,
) -> Result<WorldGrid, WorldError> {
    if width < 3 || height < 3 {
        return Err(infeasible(format!("{width}x{height} has no interior")));
    }
    if obstacle_count > 0 && (obstacle_size == 0 || obstacle_size + 4 > width.min(height)) {
        return Err(infeasible(format!(
            "obstacle size {obstacle_size} does not fit in {width}x{height}"
        )));
    }
    let mut canvas = Canvas::room(width, height);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let attempts = 50 * obstacle_count;
    let mut placed = 0;
    for _ in 0..attempts {
        if placed == obstacle_count {
            break;
        }
        let w = rng.random_range(1..=obstacle_size);
        let h = rng.random_range(1..=obstacle_size);
        let x = rng.random_range(2..=width - 2 - w);
        let y = rng.random_range(2..=height - 2 - h);
        let before = canvas.cells.clone();
        canvas.fill(x, y, w, h, CellState::Occupied);
        let g = Grid::from_world_cells(width, height, &canvas.cells);
        if is_connected(&g) && !has_diagonal_seam(&g) {
            placed += 1;
        } else {
            canvas.cells = before;
        }
    }
    Ok(canvas.into_world()?)
}

impl Grid {
    fn from_world_cells(width: usize, height: usize, cells: &[CellState]) -> Grid {
        let mut g = Grid::filled(width, height, DEFAULT_RESOLUTION, CellState::Occupied);
        for (i, &s) in cells.iter().enumerate() {
            g.set(g.cell_at(i), s);
        }
        g
    }
}

/// Free cells reachable from `start` through 4-neighbor steps, in BFS order.
/// Neighbors are expanded in the order up, left, right, down.
pub fn flood_fill(grid: &Grid, start: Cell) -> Vec<Cell> {
    if !grid.contains(start) || grid.get(start) != CellState::Free {
        return Vec::new();
    }
    let mut seen = vec![false; grid.len()];
    let mut out = Vec::new();
    let mut queue = VecDeque::from([start]);
    seen[grid.index(start)] = true;
    while let Some(c) = queue.pop_front() {
        out.push(c);
        for n in grid.neighbors4(c) {
            let i = grid.index(n);
            if !seen[i] && grid.get(n) == CellState::Free {
                seen[i] = true;
                queue.push_back(n);
            }
        }
    }
    out
}

/// True when every Free cell is 4-connected to every other.
pub fn is_connected(grid: &Grid) -> bool {
    let free = grid.count(CellState::Free);
    let Some(first) = (0..grid.len()).find(|&i| grid.cells()[i] == CellState::Free) else {
        return true;
    };
    flood_fill(grid, grid.cell_at(first)).len() == free
}

/// True when two Free cells touch only diagonally between two Occupied
/// cells. Rays never pass such a seam, so cells behind it cannot be seen.
pub fn has_diagonal_seam(grid: &Grid) -> bool {
    let free = |x: usize, y: usize| grid.get(Cell::new(x, y)) == CellState::Free;
    for y in 0..grid.height().saturating_sub(1) {
        for x in 0..grid.width().saturating_sub(1) {
            let (a, b, c, d) = (free(x, y), free(x + 1, y), free(x, y + 1), free(x + 1, y + 1));
            if (a && d && !b && !c) || (b && c && !a && !d) {
                return true;
            }
        }
    }
    false
}

/// Distance in cells to the nearest Occupied cell, using 8-neighbor steps.
fn clearance(grid: &Grid) -> Vec<usize> {
    let mut dist = vec![usize::MAX; grid.len()];
    let mut queue = VecDeque::new();
    for i in 0..grid.len() {
        if grid.cells()[i] == CellState::Occupied {
            dist[i] = 0;
            queue.push_back(grid.cell_at(i));
        }
    }
    while let Some(c) = queue.pop_front() {
        let d = dist[grid.index(c)];
        for n in grid.neighbors8(c) {
            let i = grid.index(n);
            if dist[i] == usize::MAX {
                dist[i] = d + 1;
                queue.push_back(n);
            }
        }
    }
    dist
}

fn starts_around(world: &WorldGrid, anchor: Cell, count: usize) -> Result<Vec<Cell>, WorldError> {
    let cells: Vec<Cell> = flood_fill(world.grid(), anchor).into_iter().take(count).collect();
    if cells.len() < count {
        return Err(infeasible(format!("only {} free cells around {anchor}", cells.len())));
    }
    Ok(cells)
}

/// `count` adjacent start cells around the Free cell farthest from any wall
/// (earliest in row-major order on ties).
pub fn clustered_starts(world: &WorldGrid, count: usize) -> Result<Vec<Cell>, WorldError> {
    let g = world.grid();
    let clear = clearance(g);
    let anchor = (0..g.len())
        .filter(|&i| g.cells()[i] == CellState::Free)
        .max_by(|&a, &b| clear[a].cmp(&clear[b]).then(b.cmp(&a)))
        .map(|i| g.cell_at(i))
        .ok_or_else(|| infeasible("world has no free cells"))?;
    starts_around(world, anchor, count)
}

/// Like [`clustered_starts`], but the anchor is drawn uniformly from Free
/// cells whose clearance is at least half the maximum.
pub fn clustered_random_starts<R: Rng + ?Sized>(
    world: &WorldGrid,
    count: usize,
    rng: &mut R,
) -> Result<Vec<Cell>, WorldError> {
    let g = world.grid();
    let clear = clearance(g);
    let free: Vec<usize> = (0..g.len()).filter(|&i| g.cells()[i] == CellState::Free).collect();
    let best = free.iter().map(|&i| clear[i]).max().ok_or_else(|| infeasible("world has no free cells"))?;
    let pool: Vec<usize> = free.into_iter().filter(|&i| 2 * clear[i] >= best).collect();
    let anchor = g.cell_at(*pool.choose(rng).expect("pool holds the best cell"));
    starts_around(world, anchor, count)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GeneratorKind {
    Maze,
    Office,
    Open,
}

/// Where a scenario's world comes from. Exactly one of `file` and
/// `generator` must be set; generator parameters left out take defaults.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WorldSpec {
    pub file: Option<PathBuf>,
    pub generator: Option<GeneratorKind>,
    pub width: Option<usize>,
    pub height: Option<usize>,
    pub seed: Option<u64>,
    /// Overrides the cell size of the loaded or generated map.
    pub resolution: Option<f64>,
    pub corridor_width: Option<usize>,
    pub room_min: Option<usize>,
    pub room_max: Option<usize>,
    pub door_width: Option<usize>,
    pub obstacle_count: Option<usize>,
    pub obstacle_size: Option<usize>,
}

impl WorldSpec {
    /// Loads or generates the world. Relative file paths resolve against `base`.
    pub fn build(&self, base: &Path) -> Result<WorldGrid, WorldError> {
        let world = match (&self.file, self.generator) {
            (Some(file), None) => load_world_file(base.join(file))?,
            (None, Some(kind)) => {
                let seed = self.seed.unwrap_or(0);
                match kind {
                    GeneratorKind::Maze => generate_maze(
                        self.width.unwrap_or(41),
                        self.height.unwrap_or(41),
                        self.corridor_width.unwrap_or(1),
                        seed,
                    )?,
                    GeneratorKind::Office => generate_office(
                        self.width.unwrap_or(61),
                        self.height.unwrap_or(61),
                        self.room_min.unwrap_or(6),
                        self.room_max.unwrap_or(12),
                        self.door_width.unwrap_or(2),
                        seed,
                    )?,
                    GeneratorKind::Open => generate_open(
                        self.width.unwrap_or(60),
                        self.height.unwrap_or(60),
                        self.obstacle_count.unwrap_or(25),
                        self.obstacle_size.unwrap_or(3),
                        seed,
                    )?,
                }
            }
            _ => return Err(infeasible("world needs exactly one of `file` or `generator`")),
        };
        match self.resolution {
            Some(r) => Ok(world.with_resolution(r)?),
            None => Ok(world),
        }
    }

    /// Short label used in reports.
    pub fn label(&self) -> String {
        match (&self.file, self.generator) {
            (Some(f), _) => f.file_stem().map_or_else(|| "world".into(), |s| s.to_string_lossy().into_owned()),
            (None, Some(k)) => format!("{k:?}").to_lowercase(),
            (None, None) => "world".into(),
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StartMode {
    /// Around the most open cell; identical for every run.
    #[default]
    Clustered,
    /// Around a cell drawn from the run seed.
    ClusteredRandom,
    /// The cells listed in `cells`, in order.
    Explicit,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StartSpec {
    #[serde(default)]
    pub mode: StartMode,
    /// `[x, y]` pairs for explicit placement.
    #[serde(default)]
    pub cells: Vec<[usize; 2]>,
}

impl StartSpec {
    pub fn place(&self, world: &WorldGrid, count: usize, seed: u64) -> Result<Vec<Cell>, WorldError> {
        match self.mode {
            StartMode::Clustered => clustered_starts(world, count),
            StartMode::ClusteredRandom => {
                // decorrelate from the simulation stream, which uses the same seed
                let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5354_4152_5453);
                clustered_random_starts(world, count, &mut rng)
            }
            StartMode::Explicit => {
                if self.cells.len() < count {
                    return Err(infeasible(format!(
                        "{count} robots requested but only {} start cells listed",
                        self.cells.len()
                    )));
                }
                Ok(self.cells[..count].iter().map(|&[x, y]| Cell::new(x, y)).collect())
            }
        }
    }
}

/// Simulation overrides; anything left out keeps the [`SimConfig`] default.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimSpec {
    pub dt: Option<f64>,
    pub replan_period: Option<f64>,
    pub sample_period: Option<f64>,
    pub max_sim_time: Option<f64>,
    pub speed: Option<f64>,
    pub idle_turn_rate: Option<f64>,
    pub min_frontier_size: Option<usize>,
    pub lidar_range: Option<f64>,
    pub lidar_fov: Option<f64>,
    pub lidar_angular_resolution: Option<f64>,
}

impl SimSpec {
    pub fn apply(&self, base: SimConfig) -> SimConfig {
        let lidar = LidarSpec {
            range: self.lidar_range.unwrap_or(base.lidar.range),
            fov: self.lidar_fov.unwrap_or(base.lidar.fov),
            angular_resolution: self.lidar_angular_resolution.unwrap_or(base.lidar.angular_resolution),
        };
        SimConfig {
            dt: self.dt.unwrap_or(base.dt),
            replan_period: self.replan_period.unwrap_or(base.replan_period),
            sample_period: self.sample_period.unwrap_or(base.sample_period),
            max_sim_time: self.max_sim_time.unwrap_or(base.max_sim_time),
            speed: self.speed.unwrap_or(base.speed),
            idle_turn_rate: self.idle_turn_rate.unwrap_or(base.idle_turn_rate),
            min_frontier_size: self.min_frontier_size.unwrap_or(base.min_frontier_size),
            lidar,
            ..base
        }
    }
}

fn default_runs() -> usize {
    1
}

fn default_strategies() -> Vec<String> {
    vec!["coexplore".into()]
}

fn default_robots() -> Vec<usize> {
    vec![3]
}

/// A scenario file. See the README for the full schema.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioSpec {
    /// Label used in reports; defaults to the world label.
    pub name: Option<String>,
    pub world: WorldSpec,
    #[serde(default)]
    pub starts: StartSpec,
    #[serde(default)]
    pub sim: SimSpec,
    #[serde(default = "default_runs")]
    pub runs: usize,
    #[serde(default = "default_strategies")]
    pub strategies: Vec<String>,
    /// Robot counts to benchmark.
    #[serde(default = "default_robots")]
    pub robots: Vec<usize>,
    #[serde(default)]
    pub seed: u64,
    /// Directory used to resolve relative paths; set by [`ScenarioSpec::load`].
    #[serde(skip)]
    pub base_dir: PathBuf,
}

impl ScenarioSpec {
    pub fn parse(text: &str, base_dir: &Path) -> Result<Self, WorldError> {
        let mut spec: ScenarioSpec = toml::from_str(text).map_err(|e| WorldError::Scenario {
            path: base_dir.display().to_string(),
            message: e.to_string(),
        })?;
        spec.base_dir = base_dir.to_path_buf();
        spec.validate()?;
        Ok(spec)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, WorldError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| WorldError::Scenario {
            path: path.display().to_string(),
            message: e.to_string(),
        })?;
        let base = path.parent().unwrap_or(Path::new("."));
        Self::parse(&text, base).map_err(|e| match e {
            WorldError::Scenario { message, .. } => WorldError::Scenario {
                path: path.display().to_string(),
                message,
            },
            other => other,
        })
    }

    fn validate(&self) -> Result<(), WorldError> {
        let bad = |message: String| WorldError::Scenario {
            path: self.base_dir.display().to_string(),
            message,
        };
        if self.runs == 0 {
            return Err(bad("runs must be at least 1".into()));
        }
        if self.robots.is_empty() || self.robots.contains(&0) {
            return Err(bad("robots must list counts of at least 1".into()));
        }
        self.strategy_ids().map_err(|e| bad(e.to_string()))?;
        Ok(())
    }

    pub fn strategy_ids(&self) -> Result<Vec<StrategyId>, crate::strategies::UnknownStrategy> {
        self.strategies.iter().map(|s| s.parse()).collect()
    }

    pub fn label(&self) -> String {
        self.name.clone().unwrap_or_else(|| self.world.label())
    }

    pub fn build_world(&self) -> Result<WorldGrid, WorldError> {
        self.world.build(&self.base_dir)
    }

    /// Simulation config for one run.
    pub fn sim_config(&self, strategy: StrategyId, seed: u64) -> SimConfig {
        self.sim.apply(SimConfig { strategy, seed, ..SimConfig::default() })
    }
}
