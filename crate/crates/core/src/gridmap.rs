//! Ternary occupancy grids for ground truth and the shared belief map.
//!
//! Cells are stored row-major with the origin at the top-left corner, `x`
//! growing rightward and `y` growing downward. A cell `(x, y)` covers the
//! square `[x·res, (x+1)·res) × [y·res, (y+1)·res)` in map meters.

use std::fmt;
use std::fs;
use std::io::{self, Write};
use std::path::Path;

use thiserror::Error;

use crate::frontier::Frontier;

#[derive(Debug, Error)]
pub enum GridError {
    #[error("line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("grid shapes differ: {0}x{1} vs {2}x{3}")]
    ShapeMismatch(usize, usize, usize, usize),
    #[error("I/O error: {0}")]
    Io(#[from] io::Error),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum CellState {
    Free,
    Occupied,
    Unknown,
}

/// Integer cell coordinates.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Cell {
    pub x: usize,
    pub y: usize,
}

impl Cell {
    pub const fn new(x: usize, y: usize) -> Self {
        Self { x, y }
    }
}

impl fmt::Display for Cell {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.x, self.y)
    }
}

/// Continuous map coordinates in meters.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn distance(&self, other: &Point) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }
}

/// 8-neighborhood offsets in row-major order.
pub(crate) const NEIGHBORS_8: [(isize, isize); 8] = [
    (-1, -1),
    (0, -1),
    (1, -1),
    (-1, 0),
    (1, 0),
    (-1, 1),
    (0, 1),
    (1, 1),
];

pub(crate) const NEIGHBORS_4: [(isize, isize); 4] = [(0, -1), (-1, 0), (1, 0), (0, 1)];

/// A rectangular grid of [`CellState`]s.
#[derive(Clone, Debug, PartialEq)]
pub struct Grid {
    width: usize,
    height: usize,
    resolution: f64,
    cells: Vec<CellState>,
}

/// Ground truth. Only `Free` and `Occupied` cells, closed border.
#[derive(Clone, Debug, PartialEq)]
pub struct WorldGrid(Grid);

/// What the robot team has sensed so far.
#[derive(Clone, Debug, PartialEq)]
pub struct BeliefGrid(Grid);

impl Grid {
    pub fn filled(width: usize, height: usize, resolution: f64, state: CellState) -> Self {
        Self {
            width,
            height,
            resolution,
            cells: vec![state; width * height],
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn resolution(&self) -> f64 {
        self.resolution
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    pub fn cells(&self) -> &[CellState] {
        &self.cells
    }

    #[inline]
    pub fn index(&self, cell: Cell) -> usize {
        cell.y * self.width + cell.x
    }

    #[inline]
    pub fn cell_at(&self, index: usize) -> Cell {
        Cell::new(index % self.width, index / self.width)
    }

    #[inline]
    pub fn contains(&self, cell: Cell) -> bool {
        cell.x < self.width && cell.y < self.height
    }

    #[inline]
    pub fn get(&self, cell: Cell) -> CellState {
        self.cells[self.index(cell)]
    }

    #[inline]
    pub fn set(&mut self, cell: Cell, state: CellState) {
        let i = self.index(cell);
        self.cells[i] = state;
    }

    /// Neighbor of `cell` shifted by `(dx, dy)`, if it lies on the grid.
    #[inline]
    pub fn offset(&self, cell: Cell, dx: isize, dy: isize) -> Option<Cell> {
        let x = cell.x.checked_add_signed(dx)?;
        let y = cell.y.checked_add_signed(dy)?;
        let c = Cell::new(x, y);
        self.contains(c).then_some(c)
    }

    pub fn neighbors8(&self, cell: Cell) -> impl Iterator<Item = Cell> + '_ {
        NEIGHBORS_8
            .iter()
            .filter_map(move |&(dx, dy)| self.offset(cell, dx, dy))
    }

    pub fn neighbors4(&self, cell: Cell) -> impl Iterator<Item = Cell> + '_ {
        NEIGHBORS_4
            .iter()
            .filter_map(move |&(dx, dy)| self.offset(cell, dx, dy))
    }

    /// Center of `cell` in map meters.
    pub fn cell_center(&self, cell: Cell) -> Point {
        Point::new(
            (cell.x as f64 + 0.5) * self.resolution,
            (cell.y as f64 + 0.5) * self.resolution,
        )
    }

    /// Cell containing `p`, or `None` outside the grid.
    pub fn cell_of(&self, p: Point) -> Option<Cell> {
        if !(p.x >= 0.0 && p.y >= 0.0) {
            return None;
        }
        let c = Cell::new(
            (p.x / self.resolution).floor() as usize,
            (p.y / self.resolution).floor() as usize,
        );
        self.contains(c).then_some(c)
    }

    pub fn count(&self, state: CellState) -> usize {
        self.cells.iter().filter(|&&s| s == state).count()
    }

    fn same_shape(&self, other: &Grid) -> Result<(), GridError> {
        if self.width != other.width || self.height != other.height {
            return Err(GridError::ShapeMismatch(
                self.width,
                self.height,
                other.width,
                other.height,
            ));
        }
        Ok(())
    }
}

impl WorldGrid {
    /// Builds a world from raw cells, enforcing the closed-border invariant.
    pub fn from_cells(
        width: usize,
        height: usize,
        resolution: f64,
        cells: Vec<CellState>,
    ) -> Result<Self, GridError> {
        if width == 0 || height == 0 {
            return Err(GridError::Dimension("width and height must be positive".into()));
        }
        if !(resolution > 0.0 && resolution.is_finite()) {
            return Err(GridError::Dimension(format!(
                "resolution must be positive, got {resolution}"
            )));
        }
        if cells.len() != width * height {
            return Err(GridError::Dimension(format!(
                "expected {} cells, got {}",
                width * height,
                cells.len()
            )));
        }
        if cells.contains(&CellState::Unknown) {
            return Err(GridError::Dimension("world grids cannot hold Unknown cells".into()));
        }
        let grid = Grid {
            width,
            height,
            resolution,
            cells,
        };
        for x in 0..width {
            for y in [0, height - 1] {
                if grid.get(Cell::new(x, y)) != CellState::Occupied {
                    return Err(GridError::Parse {
                        line: y + 2,
                        column: x + 1,
                        message: "border cell must be occupied".into(),
                    });
                }
            }
        }
        for y in 0..height {
            for x in [0, width - 1] {
                if grid.get(Cell::new(x, y)) != CellState::Occupied {
                    return Err(GridError::Parse {
                        line: y + 2,
                        column: x + 1,
                        message: "border cell must be occupied".into(),
                    });
                }
            }
        }
        Ok(Self(grid))
    }

    pub fn grid(&self) -> &Grid {
        &self.0
    }

    pub fn width(&self) -> usize {
        self.0.width
    }

    pub fn height(&self) -> usize {
        self.0.height
    }

    pub fn resolution(&self) -> f64 {
        self.0.resolution
    }

    pub fn get(&self, cell: Cell) -> CellState {
        self.0.get(cell)
    }

    pub fn is_free(&self, cell: Cell) -> bool {
        self.0.contains(cell) && self.0.get(cell) == CellState::Free
    }

    /// Same cells at a different cell size.
    pub fn with_resolution(&self, resolution: f64) -> Result<WorldGrid, GridError> {
        WorldGrid::from_cells(self.0.width, self.0.height, resolution, self.0.cells.clone())
    }

    /// Serializes to the text map format accepted by [`load_world`].
    pub fn to_text(&self) -> String {
        let g = &self.0;
        let mut out = format!("{} {} {}\n", g.width, g.height, g.resolution);
        for row in g.cells.chunks(g.width) {
            out.extend(row.iter().map(|s| match s {
                CellState::Occupied => '#',
                _ => '.',
            }));
            out.push('\n');
        }
        out
    }
}

impl BeliefGrid {
    /// An all-Unknown belief shaped like `world`.
    pub fn new(world: &WorldGrid) -> Self {
        let g = world.grid();
        Self(Grid::filled(g.width, g.height, g.resolution, CellState::Unknown))
    }

    pub fn from_grid(grid: Grid) -> Self {
        Self(grid)
    }

    pub fn grid(&self) -> &Grid {
        &self.0
    }

    pub fn width(&self) -> usize {
        self.0.width
    }

    pub fn height(&self) -> usize {
        self.0.height
    }

    pub fn resolution(&self) -> f64 {
        self.0.resolution
    }

    pub fn get(&self, cell: Cell) -> CellState {
        self.0.get(cell)
    }

    pub fn is_free(&self, cell: Cell) -> bool {
        self.0.contains(cell) && self.0.get(cell) == CellState::Free
    }

    pub fn known_count(&self) -> usize {
        self.0.len() - self.0.count(CellState::Unknown)
    }

    /// Copies the world state of `cell` into the belief. Returns `true` if
    /// the cell was previously Unknown.
    pub fn reveal(&mut self, world: &WorldGrid, cell: Cell) -> bool {
        let i = self.0.index(cell);
        if self.0.cells[i] == CellState::Unknown {
            self.0.cells[i] = world.grid().cells[i];
            true
        } else {
            false
        }
    }
}

/// Parses the text map format: a `<width> <height> <resolution>` header line
/// followed by one row per line using `#` for Occupied and `.` for Free.
pub fn load_world(text: &str) -> Result<WorldGrid, GridError> {
    let mut lines = text.lines().enumerate();
    let (_, header) = lines
        .by_ref()
        .find(|(_, l)| !l.trim().is_empty())
        .ok_or_else(|| GridError::Parse {
            line: 1,
            column: 1,
            message: "missing header line".into(),
        })?;
    let fields: Vec<&str> = header.split_whitespace().collect();
    if fields.len() != 3 {
        return Err(GridError::Parse {
            line: 1,
            column: 1,
            message: format!("header must be `<width> <height> <resolution>`, got {header:?}"),
        });
    }
    let parse_dim = |s: &str, what: &str| {
        s.parse::<usize>().map_err(|_| GridError::Parse {
            line: 1,
            column: 1,
            message: format!("invalid {what} {s:?}"),
        })
    };
    let width = parse_dim(fields[0], "width")?;
    let height = parse_dim(fields[1], "height")?;
    let resolution: f64 = fields[2].parse().map_err(|_| GridError::Parse {
        line: 1,
        column: 1,
        message: format!("invalid resolution {:?}", fields[2]),
    })?;
    if !(resolution > 0.0 && resolution.is_finite()) {
        return Err(GridError::Dimension(format!(
            "resolution must be positive, got {resolution}"
        )));
    }
    if width == 0 || height == 0 {
        return Err(GridError::Dimension("width and height must be positive".into()));
    }

    let mut cells = Vec::with_capacity(width * height);
    let mut rows = 0;
    for (idx, raw) in lines {
        let line_no = idx + 1;
        let row = raw.trim_end_matches('\r');
        if row.is_empty() {
            continue;
        }
        if rows == height {
            return Err(GridError::Dimension(format!(
                "more than {height} rows (extra row at line {line_no})"
            )));
        }
        let mut n = 0;
        for (col, ch) in row.chars().enumerate() {
            let state = match ch {
                '#' => CellState::Occupied,
                '.' => CellState::Free,
                other => {
                    return Err(GridError::Parse {
                        line: line_no,
                        column: col + 1,
                        message: format!("illegal character {other:?}"),
                    })
                }
            };
            cells.push(state);
            n += 1;
        }
        if n != width {
            return Err(GridError::Dimension(format!(
                "line {line_no} has {n} cells, expected {width}"
            )));
        }
        rows += 1;
    }
    if rows != height {
        return Err(GridError::Dimension(format!(
            "expected {height} rows, found {rows}"
        )));
    }
    WorldGrid::from_cells(width, height, resolution, cells)
}

pub fn load_world_file(path: impl AsRef<Path>) -> Result<WorldGrid, GridError> {
    load_world(&fs::read_to_string(path)?)
}

/// Fraction of world Free cells that are known in the belief.
pub fn coverage_ratio(belief: &BeliefGrid, world: &WorldGrid) -> Result<f64, GridError> {
    belief.grid().same_shape(world.grid())?;
    let mut free = 0usize;
    let mut seen = 0usize;
    for (b, w) in belief.grid().cells.iter().zip(&world.grid().cells) {
        if *w == CellState::Free {
            free += 1;
            if *b != CellState::Unknown {
                seen += 1;
            }
        }
    }
    if free == 0 {
        return Ok(1.0);
    }
    Ok(seen as f64 / free as f64)
}

/// Gray levels used for PGM snapshots.
pub mod tones {
    pub const UNKNOWN: u8 = 128;
    pub const FREE: u8 = 255;
    pub const OCCUPIED: u8 = 0;
    pub const FRONTIER: u8 = 64;
}

const FRONTIER_RGB: [u8; 3] = [0, 0, 255];

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SnapshotFormat {
    /// Binary grayscale (`P5`), frontier cells drawn in [`tones::FRONTIER`].
    Pgm,
    /// Binary RGB (`P6`), frontier cells drawn blue.
    Ppm,
}

impl SnapshotFormat {
    /// `.ppm` selects RGB; anything else is grayscale.
    pub fn for_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some(ext) if ext.eq_ignore_ascii_case("ppm") => Self::Ppm,
            _ => Self::Pgm,
        }
    }
}

/// Renders the belief and frontier cells into a binary PNM image.
pub fn render_snapshot(
    belief: &BeliefGrid,
    frontiers: &[Frontier],
    format: SnapshotFormat,
) -> Vec<u8> {
    let g = belief.grid();
    let mut tone: Vec<u8> = g
        .cells
        .iter()
        .map(|s| match s {
            CellState::Unknown => tones::UNKNOWN,
            CellState::Free => tones::FREE,
            CellState::Occupied => tones::OCCUPIED,
        })
        .collect();
    for f in frontiers {
        for &c in &f.cells {
            tone[g.index(c)] = tones::FRONTIER;
        }
    }
    let magic = match format {
        SnapshotFormat::Pgm => "P5",
        SnapshotFormat::Ppm => "P6",
    };
    let mut out = format!("{magic}\n{} {}\n255\n", g.width, g.height).into_bytes();
    match format {
        SnapshotFormat::Pgm => out.extend_from_slice(&tone),
        SnapshotFormat::Ppm => {
            for t in tone {
                if t == tones::FRONTIER {
                    out.extend_from_slice(&FRONTIER_RGB);
                } else {
                    out.extend_from_slice(&[t, t, t]);
                }
            }
        }
    }
    out
}

/// Writes a snapshot; the format follows the file extension.
pub fn export_snapshot(
    belief: &BeliefGrid,
    frontiers: &[Frontier],
    path: impl AsRef<Path>,
) -> Result<(), GridError> {
    let path = path.as_ref();
    let bytes = render_snapshot(belief, frontiers, SnapshotFormat::for_path(path));
    let mut f = fs::File::create(path)?;
    f.write_all(&bytes)?;
    Ok(())
}
