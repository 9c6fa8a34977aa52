//! C interface to the exploration simulator.
//!
//! Every function returns a [`CxStatus`] (except the version, error and
//! free functions). On failure a message is stored per thread and can be
//! read with [`cx_last_error`]. Handles are opaque; each `*_new`, `*_load`,
//! `*_parse` or `*_generate_*` result must be released with the matching
//! `*_free`. Panics never cross the boundary: they are reported as
//! [`CxStatus::Panic`] and leave the handle in an unspecified but safe
//! state that should only be freed.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;

use coexplore::assign::{hungarian, Matrix};
use coexplore::bench::metrics_csv;
use coexplore::gridmap::{export_snapshot, load_world, load_world_file, Cell, CellState, WorldGrid};
use coexplore::sensor::LidarSpec;
use coexplore::sim::{SimConfig, Simulation, Status};
use coexplore::strategies::StrategyId;
use coexplore::worlds::{clustered_starts, generate_maze, generate_office, generate_open};

/// Result code of every fallible call.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CxStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Io = 3,
    Parse = 4,
    Panic = 5,
}

/// Values accepted in [`CxSimConfig::strategy`].
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CxStrategy {
    CoExplore = 0,
    Co122 = 1,
    Nearest = 2,
    MinPos = 3,
    NextFrontier = 4,
}

/// Values written by the cell queries.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CxCellState {
    Free = 0,
    Occupied = 1,
    Unknown = 2,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CxRunState {
    Running = 0,
    Finished = 1,
    DidNotFinish = 2,
}

/// Simulation parameters. Start from [`cx_sim_config_default`].
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CxSimConfig {
    pub dt: f64,
    pub replan_period: f64,
    pub sample_period: f64,
    pub max_sim_time: f64,
    pub speed: f64,
    pub idle_turn_rate: f64,
    pub lidar_range: f64,
    pub lidar_fov: f64,
    pub lidar_angular_resolution: f64,
    pub min_frontier_size: usize,
    /// One of [`CxStrategy`].
    pub strategy: u32,
    pub seed: u64,
}

/// Snapshot of one robot.
#[repr(C)]
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct CxRobot {
    /// Meters.
    pub x: f64,
    pub y: f64,
    /// Radians.
    pub heading: f64,
    pub odometry: f64,
    pub cell_x: usize,
    pub cell_y: usize,
    pub has_goal: bool,
    /// Goal cell; zero when `has_goal` is false.
    pub goal_x: usize,
    pub goal_y: usize,
}

/// Ground-truth map.
pub struct CxWorld {
    world: WorldGrid,
}

/// A simulation run in progress.
pub struct CxSimulation {
    sim: Simulation,
}

struct Failure(CxStatus, String);

type Res<T> = Result<T, Failure>;

fn fail<T>(status: CxStatus, msg: impl Into<String>) -> Res<T> {
    Err(Failure(status, msg.into()))
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).expect("nul bytes removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn guard(f: impl FnOnce() -> Res<()>) -> CxStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => CxStatus::Ok,
        Ok(Err(Failure(status, msg))) => {
            set_error(msg);
            status
        }
        Err(p) => {
            let msg = p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "unknown panic".into());
            set_error(format!("panic: {msg}"));
            CxStatus::Panic
        }
    }
}

unsafe fn deref<'a, T>(p: *const T, what: &str) -> Res<&'a T> {
    match p.as_ref() {
        Some(r) => Ok(r),
        None => fail(CxStatus::NullPointer, format!("{what} is null")),
    }
}

unsafe fn deref_mut<'a, T>(p: *mut T, what: &str) -> Res<&'a mut T> {
    match p.as_mut() {
        Some(r) => Ok(r),
        None => fail(CxStatus::NullPointer, format!("{what} is null")),
    }
}

unsafe fn put<T>(out: *mut T, value: T) -> Res<()> {
    *deref_mut(out, "output pointer")? = value;
    Ok(())
}

unsafe fn string<'a>(p: *const c_char, what: &str) -> Res<&'a str> {
    if p.is_null() {
        return fail(CxStatus::NullPointer, format!("{what} is null"));
    }
    CStr::from_ptr(p)
        .to_str()
        .or_else(|_| fail(CxStatus::InvalidArgument, format!("{what} is not UTF-8")))
}

fn strategy_from(code: u32) -> Res<StrategyId> {
    match StrategyId::ALL.get(code as usize) {
        Some(&s) => Ok(s),
        None => fail(CxStatus::InvalidArgument, format!("unknown strategy code {code}")),
    }
}

fn cell_code(s: CellState) -> u8 {
    match s {
        CellState::Free => CxCellState::Free as u8,
        CellState::Occupied => CxCellState::Occupied as u8,
        CellState::Unknown => CxCellState::Unknown as u8,
    }
}

unsafe fn new_world(out: *mut *mut CxWorld, world: Res<WorldGrid>) -> Res<()> {
    let slot = deref_mut(out, "output handle")?;
    *slot = Box::into_raw(Box::new(CxWorld { world: world? }));
    Ok(())
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn cx_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Message of the last failed call on this thread, or NULL. The pointer is
/// valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn cx_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(std::ptr::null(), |c| c.as_ptr()))
}

/// Loads a map file.
///
/// # Safety
/// `path` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn cx_world_load(path: *const c_char, out: *mut *mut CxWorld) -> CxStatus {
    guard(|| {
        let path = PathBuf::from(string(path, "path")?);
        let world = load_world_file(&path).or_else(|e| {
            let status = if path.exists() { CxStatus::Parse } else { CxStatus::Io };
            fail(status, format!("{}: {e}", path.display()))
        });
        new_world(out, world)
    })
}

/// Parses a map from text.
///
/// # Safety
/// `text` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn cx_world_parse(text: *const c_char, out: *mut *mut CxWorld) -> CxStatus {
    guard(|| {
        let world = load_world(string(text, "text")?).or_else(|e| fail(CxStatus::Parse, e.to_string()));
        new_world(out, world)
    })
}

/// Generates a maze map.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn cx_world_generate_maze(
    width: usize,
    height: usize,
    corridor_width: usize,
    seed: u64,
    out: *mut *mut CxWorld,
) -> CxStatus {
    guard(|| {
        let world = generate_maze(width, height, corridor_width, seed)
            .or_else(|e| fail(CxStatus::InvalidArgument, e.to_string()));
        new_world(out, world)
    })
}

/// Generates an office map by recursive room division.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn cx_world_generate_office(
    width: usize,
    height: usize,
    room_min: usize,
    room_max: usize,
    door_width: usize,
    seed: u64,
    out: *mut *mut CxWorld,
) -> CxStatus {
    guard(|| {
        let world = generate_office(width, height, room_min, room_max, door_width, seed)
            .or_else(|e| fail(CxStatus::InvalidArgument, e.to_string()));
        new_world(out, world)
    })
}

/// Generates an open map with scattered rectangular obstacles.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn cx_world_generate_open(
    width: usize,
    height: usize,
    obstacle_count: usize,
    obstacle_size: usize,
    seed: u64,
    out: *mut *mut CxWorld,
) -> CxStatus {
    guard(|| {
        let world = generate_open(width, height, obstacle_count, obstacle_size, seed)
            .or_else(|e| fail(CxStatus::InvalidArgument, e.to_string()));
        new_world(out, world)
    })
}

/// Writes the map size in cells and its resolution in meters per cell.
/// Any output pointer may be NULL.
///
/// # Safety
/// `world` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn cx_world_size(
    world: *const CxWorld,
    width: *mut usize,
    height: *mut usize,
    resolution: *mut f64,
) -> CxStatus {
    guard(|| {
        let w = &deref(world, "world")?.world;
        if !width.is_null() {
            *width = w.width();
        }
        if !height.is_null() {
            *height = w.height();
        }
        if !resolution.is_null() {
            *resolution = w.resolution();
        }
        Ok(())
    })
}

/// Writes one [`CxCellState`] value.
///
/// # Safety
/// `world` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn cx_world_cell(world: *const CxWorld, x: usize, y: usize, out: *mut u8) -> CxStatus {
    guard(|| {
        let w = &deref(world, "world")?.world;
        let c = Cell::new(x, y);
        if !w.grid().contains(c) {
            return fail(CxStatus::InvalidArgument, format!("cell ({x}, {y}) is outside the map"));
        }
        put(out, cell_code(w.get(c)))
    })
}

/// Releases a world. NULL is ignored.
///
/// # Safety
/// `world` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn cx_world_free(world: *mut CxWorld) {
    if !world.is_null() {
        drop(Box::from_raw(world));
    }
}

/// Fills `out` with the default parameters.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn cx_sim_config_default(out: *mut CxSimConfig) -> CxStatus {
    guard(|| {
        let c = SimConfig::default();
        put(
            out,
            CxSimConfig {
                dt: c.dt,
                replan_period: c.replan_period,
                sample_period: c.sample_period,
                max_sim_time: c.max_sim_time,
                speed: c.speed,
                idle_turn_rate: c.idle_turn_rate,
                lidar_range: c.lidar.range,
                lidar_fov: c.lidar.fov,
                lidar_angular_resolution: c.lidar.angular_resolution,
                min_frontier_size: c.min_frontier_size,
                strategy: CxStrategy::CoExplore as u32,
                seed: c.seed,
            },
        )
    })
}

/// Starts a run on a copy of `world`. `starts` holds `robots` pairs of
/// `(x, y)` cell coordinates, or is NULL for clustered starts.
///
/// # Safety
/// `world` and `config` must be valid, `starts` NULL or `2 * robots` long,
/// and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn cx_sim_new(
    world: *const CxWorld,
    config: *const CxSimConfig,
    starts: *const usize,
    robots: usize,
    out: *mut *mut CxSimulation,
) -> CxStatus {
    guard(|| {
        let world = &deref(world, "world")?.world;
        let c = deref(config, "config")?;
        let slot = deref_mut(out, "output handle")?;
        let cfg = SimConfig {
            dt: c.dt,
            replan_period: c.replan_period,
            sample_period: c.sample_period,
            max_sim_time: c.max_sim_time,
            speed: c.speed,
            idle_turn_rate: c.idle_turn_rate,
            min_frontier_size: c.min_frontier_size,
            lidar: LidarSpec {
                range: c.lidar_range,
                fov: c.lidar_fov,
                angular_resolution: c.lidar_angular_resolution,
            },
            strategy: strategy_from(c.strategy)?,
            seed: c.seed,
        };
        if robots == 0 {
            return fail(CxStatus::InvalidArgument, "robot count must be at least 1");
        }
        let cells = if starts.is_null() {
            clustered_starts(world, robots).or_else(|e| fail(CxStatus::InvalidArgument, e.to_string()))?
        } else {
            std::slice::from_raw_parts(starts, 2 * robots)
                .chunks(2)
                .map(|p| Cell::new(p[0], p[1]))
                .collect()
        };
        let sim = Simulation::new(world.clone(), &cells, cfg)
            .or_else(|e| fail(CxStatus::InvalidArgument, e.to_string()))?;
        *slot = Box::into_raw(Box::new(CxSimulation { sim }));
        Ok(())
    })
}

/// Releases a simulation. NULL is ignored.
///
/// # Safety
/// `sim` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn cx_sim_free(sim: *mut CxSimulation) {
    if !sim.is_null() {
        drop(Box::from_raw(sim));
    }
}

fn run_state(s: Status) -> CxRunState {
    match s {
        Status::Running => CxRunState::Running,
        Status::Finished(_) => CxRunState::Finished,
        Status::DidNotFinish => CxRunState::DidNotFinish,
    }
}

/// Advances one tick and writes the resulting state. `state` may be NULL.
///
/// # Safety
/// `sim` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn cx_sim_step(sim: *mut CxSimulation, state: *mut CxRunState) -> CxStatus {
    guard(|| {
        let s = run_state(deref_mut(sim, "simulation")?.sim.step());
        if !state.is_null() {
            *state = s;
        }
        Ok(())
    })
}

/// Steps until the run finishes or reaches its time limit. `state` may be NULL.
///
/// # Safety
/// `sim` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn cx_sim_run(sim: *mut CxSimulation, state: *mut CxRunState) -> CxStatus {
    guard(|| {
        let s = run_state(deref_mut(sim, "simulation")?.sim.run_to_end());
        if !state.is_null() {
            *state = s;
        }
        Ok(())
    })
}

/// Writes simulated seconds elapsed.
///
/// # Safety
/// `sim` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn cx_sim_time(sim: *const CxSimulation, out: *mut f64) -> CxStatus {
    guard(|| put(out, deref(sim, "simulation")?.sim.time()))
}

/// Writes the fraction of free world cells known free.
///
/// # Safety
/// `sim` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn cx_sim_coverage(sim: *const CxSimulation, out: *mut f64) -> CxStatus {
    guard(|| put(out, deref(sim, "simulation")?.sim.coverage()))
}

/// Writes the number of frontiers found at the last replan.
///
/// # Safety
/// `sim` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn cx_sim_frontier_count(sim: *const CxSimulation, out: *mut usize) -> CxStatus {
    guard(|| put(out, deref(sim, "simulation")?.sim.frontiers().len()))
}

/// Writes the number of robots.
///
/// # Safety
/// `sim` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn cx_sim_robot_count(sim: *const CxSimulation, out: *mut usize) -> CxStatus {
    guard(|| put(out, deref(sim, "simulation")?.sim.robots().len()))
}

/// Writes the state of robot `index`.
///
/// # Safety
/// `sim` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn cx_sim_robot(sim: *const CxSimulation, index: usize, out: *mut CxRobot) -> CxStatus {
    guard(|| {
        let robots = deref(sim, "simulation")?.sim.robots();
        let Some(r) = robots.get(index) else {
            return fail(CxStatus::InvalidArgument, format!("robot {index} of {}", robots.len()));
        };
        let goal = r.goal_cell.unwrap_or(Cell::new(0, 0));
        put(
            out,
            CxRobot {
                x: r.pose.position.x,
                y: r.pose.position.y,
                heading: r.pose.heading,
                odometry: r.odometry,
                cell_x: r.cell().x,
                cell_y: r.cell().y,
                has_goal: r.goal_cell.is_some(),
                goal_x: goal.x,
                goal_y: goal.y,
            },
        )
    })
}

/// Writes one belief cell as a [`CxCellState`] value.
///
/// # Safety
/// `sim` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn cx_sim_belief_cell(sim: *const CxSimulation, x: usize, y: usize, out: *mut u8) -> CxStatus {
    guard(|| {
        let b = deref(sim, "simulation")?.sim.belief();
        let c = Cell::new(x, y);
        if !b.grid().contains(c) {
            return fail(CxStatus::InvalidArgument, format!("cell ({x}, {y}) is outside the map"));
        }
        put(out, cell_code(b.get(c)))
    })
}

/// Writes the metrics recorded so far as CSV.
///
/// # Safety
/// `sim` must be a live handle and `path` a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn cx_sim_write_metrics(sim: *const CxSimulation, path: *const c_char) -> CxStatus {
    guard(|| {
        let sim = &deref(sim, "simulation")?.sim;
        let path = string(path, "path")?;
        let csv = metrics_csv(sim.metrics(), sim.robots().len());
        std::fs::write(path, csv).or_else(|e| fail(CxStatus::Io, format!("{path}: {e}")))
    })
}

/// Writes the belief with frontiers as a PGM image (PPM for a `.ppm` path).
///
/// # Safety
/// `sim` must be a live handle and `path` a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn cx_sim_write_snapshot(sim: *const CxSimulation, path: *const c_char) -> CxStatus {
    guard(|| {
        let sim = &deref(sim, "simulation")?.sim;
        let path = string(path, "path")?;
        export_snapshot(sim.belief(), sim.frontiers(), path).or_else(|e| fail(CxStatus::Io, format!("{path}: {e}")))
    })
}

/// Minimum-cost assignment of each row of a row-major `rows × cols` matrix
/// to a distinct column. Requires `rows <= cols`; `out_cols` receives
/// `rows` column indices.
///
/// # Safety
/// `cost` must hold `rows * cols` values and `out_cols` room for `rows`.
#[no_mangle]
pub unsafe extern "C" fn cx_hungarian(cost: *const f64, rows: usize, cols: usize, out_cols: *mut usize) -> CxStatus {
    guard(|| {
        if rows == 0 {
            return Ok(());
        }
        if cost.is_null() || out_cols.is_null() {
            return fail(CxStatus::NullPointer, "cost or output is null");
        }
        let data = std::slice::from_raw_parts(cost, rows * cols).to_vec();
        let sol = hungarian(&Matrix::from_vec(rows, cols, data))
            .or_else(|e| fail(CxStatus::InvalidArgument, e.to_string()))?;
        std::slice::from_raw_parts_mut(out_cols, rows).copy_from_slice(&sol);
        Ok(())
    })
}
