//! Discrete-time exploration loop.
//!
//! Each tick every robot advances `speed·dt` meters along its waypoint list
//! and senses. On replan ticks frontiers are re-detected on the shared
//! belief and the strategy reassigns all robots, whether or not they have
//! reached their previous goal. Exploration ends at the first replan tick
//! that finds no frontier reachable by any robot.
//!
//! Robots are point agents moving between adjacent cell centers; they pass
//! through each other. A robot with a goal but no remaining path turns in
//! place at `idle_turn_rate`, which lets it scan cells outside its field of
//! view. A robot without a goal does not move at all.
//!
//! If a whole replan period passes without revealing a single cell, robots
//! keep goals that are still frontier cells instead of taking the fresh
//! assignment. Policies that trade goals back and forth across explored space
//! would otherwise never finish.

use std::collections::{BTreeSet, VecDeque};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::frontier::{detect_frontiers, Frontier};
use crate::gridmap::{coverage_ratio, BeliefGrid, Cell, Point, WorldGrid};
use crate::pathdist::{distance_fields, extract_path, matrix_from_fields};
use crate::sensor::{sense, wrap_angle, LidarSpec, RobotPose, SensorError};
use crate::strategies::{assign_with_distances, StrategyId};

const TICK_EPS: f64 = 1e-9;

#[derive(Debug, Error, PartialEq)]
pub enum SimError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("invalid start: {0}")]
    Start(String),
    #[error(transparent)]
    Sensor(#[from] SensorError),
}

#[derive(Clone, Debug, PartialEq)]
pub struct SimConfig {
    /// Seconds per tick.
    pub dt: f64,
    pub replan_period: f64,
    pub sample_period: f64,
    pub max_sim_time: f64,
    /// Meters per second.
    pub speed: f64,
    /// Degrees per second, applied to robots waiting at their goal.
    pub idle_turn_rate: f64,
    pub min_frontier_size: usize,
    pub lidar: LidarSpec,
    pub strategy: StrategyId,
    pub seed: u64,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            dt: 0.2,
            replan_period: 2.0,
            sample_period: 5.0,
            max_sim_time: 3600.0,
            speed: 0.5,
            idle_turn_rate: 90.0,
            min_frontier_size: 1,
            lidar: LidarSpec::default(),
            strategy: StrategyId::CoExplore,
            seed: 0,
        }
    }
}

/// Simulated time of a tick. When `1/dt` is a whole number the division
/// keeps replan and sample instants exact (`30 * 0.2` is not `6.0`).
fn tick_time(tick: u64, dt: f64) -> f64 {
    let rate = 1.0 / dt;
    if (rate - rate.round()).abs() < TICK_EPS {
        tick as f64 / rate.round()
    } else {
        tick as f64 * dt
    }
}

fn ticks_per(period: f64, dt: f64, what: &str) -> Result<u64, SimError> {
    let ratio = period / dt;
    let n = ratio.round();
    if !(period > 0.0) || n < 1.0 || (ratio - n).abs() > 1e-6 {
        return Err(SimError::Config(format!(
            "{what} {period} must be a positive integer multiple of dt {dt}"
        )));
    }
    Ok(n as u64)
}

impl SimConfig {
    pub fn validate(&self) -> Result<(), SimError> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(SimError::Config(format!("dt {} must be > 0", self.dt)));
        }
        ticks_per(self.replan_period, self.dt, "replan_period")?;
        ticks_per(self.sample_period, self.dt, "sample_period")?;
        if !(self.max_sim_time > 0.0) {
            return Err(SimError::Config("max_sim_time must be > 0".into()));
        }
        if !(self.speed > 0.0 && self.speed.is_finite()) {
            return Err(SimError::Config(format!("speed {} must be > 0", self.speed)));
        }
        if !(self.idle_turn_rate >= 0.0 && self.idle_turn_rate.is_finite()) {
            return Err(SimError::Config("idle_turn_rate must be >= 0".into()));
        }
        self.lidar.validate()?;
        Ok(())
    }

    pub fn replan_ticks(&self) -> u64 {
        ticks_per(self.replan_period, self.dt, "replan_period").unwrap_or(1)
    }

    pub fn sample_ticks(&self) -> u64 {
        ticks_per(self.sample_period, self.dt, "sample_period").unwrap_or(1)
    }

    pub fn max_ticks(&self) -> u64 {
        (self.max_sim_time / self.dt - TICK_EPS).ceil().max(1.0) as u64
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RobotState {
    pub pose: RobotPose,
    pub speed: f64,
    /// Assigned frontier id, valid for the frontier list of the last replan.
    pub goal: Option<usize>,
    /// Target cell of the assigned frontier.
    pub goal_cell: Option<Cell>,
    /// Remaining waypoints, next one first. The robot moves in straight
    /// lines between their centers.
    pub path: VecDeque<Cell>,
    /// Meters traveled.
    pub odometry: f64,
    /// Last waypoint reached.
    from: Cell,
    /// The nearer end of the current segment; always a Free cell.
    cell: Cell,
}

impl RobotState {
    pub fn new(world: &WorldGrid, cell: Cell, speed: f64) -> Self {
        Self {
            pose: RobotPose::at_cell(world, cell),
            speed,
            goal: None,
            goal_cell: None,
            path: VecDeque::new(),
            odometry: 0.0,
            from: cell,
            cell,
        }
    }

    /// Cell used as the robot's wavefront source.
    pub fn cell(&self) -> Cell {
        self.cell
    }

    /// Replaces the waypoints with `path`, which starts at `self.cell()`.
    fn follow(&mut self, path: Vec<Cell>, at_center: bool) {
        let heading_to = self.path.front().copied();
        self.path.clear();
        let mut cells = path.into_iter();
        let Some(first) = cells.next() else { return };
        let rest: Vec<Cell> = cells.collect();
        if !at_center {
            let continues_forward = first == self.from && heading_to.is_some() && rest.first().copied() == heading_to;
            if !continues_forward {
                self.path.push_back(first);
            }
        }
        self.path.extend(rest);
    }

    /// Moves up to `speed·dt` meters. Returns the distance covered.
    pub fn advance(&mut self, world: &WorldGrid, dt: f64, idle_turn_rate: f64) -> f64 {
        let g = world.grid();
        let mut budget = self.speed * dt;
        let start = self.pose.position;
        let before = self.odometry;
        while budget > 0.0 {
            let Some(&next) = self.path.front() else { break };
            let target = g.cell_center(next);
            let remaining = self.pose.position.distance(&target);
            if remaining <= budget {
                self.pose.position = target;
                self.odometry += remaining;
                budget -= remaining;
                self.from = next;
                self.path.pop_front();
            } else {
                let f = budget / remaining;
                let p = self.pose.position;
                self.pose.position = Point::new(p.x + (target.x - p.x) * f, p.y + (target.y - p.y) * f);
                self.odometry += budget;
                budget = 0.0;
            }
        }
        let end = self.pose.position;
        if end != start {
            self.pose.heading = (end.y - start.y).atan2(end.x - start.x);
        } else if self.path.is_empty() && self.goal.is_some() {
            self.pose.heading = wrap_angle(self.pose.heading + idle_turn_rate.to_radians() * dt);
        }
        self.cell = match self.path.front() {
            Some(&to) if end.distance(&g.cell_center(to)) < end.distance(&g.cell_center(self.from)) => to,
            _ => self.from,
        };
        self.odometry - before
    }

    /// Pose used for sensing. Falls back to the occupied cell's center in the
    /// degenerate case of a position exactly on the corner of a blocked cell.
    fn sensing_pose(&self, world: &WorldGrid) -> RobotPose {
        match world.grid().cell_of(self.pose.position) {
            Some(c) if world.is_free(c) => self.pose,
            _ => RobotPose::new(world.grid().cell_center(self.cell), self.pose.heading),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Sample {
    pub time: f64,
    pub coverage: f64,
    /// Per-robot odometry, meters.
    pub odometry: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ReplanRecord {
    pub time: f64,
    /// Number of frontiers detected.
    pub frontiers: usize,
    /// Assigned frontier per robot.
    pub goals: Vec<Option<usize>>,
    /// Goal cell per robot.
    pub goal_cells: Vec<Option<Cell>>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunMetrics {
    pub samples: Vec<Sample>,
    pub replans: Vec<ReplanRecord>,
    /// Simulated seconds until no reachable frontier remained; `None` when
    /// the run hit `max_sim_time` first.
    pub exploration_time: Option<f64>,
}

impl RunMetrics {
    pub fn finished(&self) -> bool {
        self.exploration_time.is_some()
    }

    pub fn final_sample(&self) -> Option<&Sample> {
        self.samples.last()
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Status {
    Running,
    Finished(f64),
    DidNotFinish,
}

/// One exploration run in progress.
#[derive(Clone, Debug)]
pub struct Simulation {
    world: WorldGrid,
    belief: BeliefGrid,
    robots: Vec<RobotState>,
    config: SimConfig,
    rng: ChaCha8Rng,
    tick: u64,
    frontiers: Vec<Frontier>,
    metrics: RunMetrics,
    status: Status,
    /// Known cell count at the previous replan.
    known_at_replan: Option<usize>,
}

impl Simulation {
    /// Places robots at `starts`, performs the initial scan, the first
    /// assignment and the first metrics sample at time 0.
    pub fn new(world: WorldGrid, starts: &[Cell], config: SimConfig) -> Result<Self, SimError> {
        config.validate()?;
        if starts.is_empty() {
            return Err(SimError::Start("at least one robot is required".into()));
        }
        let mut seen = BTreeSet::new();
        for &s in starts {
            if !world.is_free(s) {
                return Err(SimError::Start(format!("{s} is not a free cell")));
            }
            if !seen.insert(s) {
                return Err(SimError::Start(format!("{s} is used twice")));
            }
        }
        let robots = starts
            .iter()
            .map(|&c| RobotState::new(&world, c, config.speed))
            .collect();
        let mut sim = Self {
            belief: BeliefGrid::new(&world),
            rng: ChaCha8Rng::seed_from_u64(config.seed),
            world,
            robots,
            config,
            tick: 0,
            frontiers: Vec::new(),
            metrics: RunMetrics {
                samples: Vec::new(),
                replans: Vec::new(),
                exploration_time: None,
            },
            status: Status::Running,
            known_at_replan: None,
        };
        sim.sense_all()?;
        sim.replan();
        sim.sample();
        Ok(sim)
    }

    pub fn time(&self) -> f64 {
        tick_time(self.tick, self.config.dt)
    }

    pub fn tick(&self) -> u64 {
        self.tick
    }

    pub fn status(&self) -> Status {
        self.status
    }

    pub fn world(&self) -> &WorldGrid {
        &self.world
    }

    pub fn belief(&self) -> &BeliefGrid {
        &self.belief
    }

    pub fn robots(&self) -> &[RobotState] {
        &self.robots
    }

    pub fn config(&self) -> &SimConfig {
        &self.config
    }

    /// Frontiers found at the most recent replan.
    pub fn frontiers(&self) -> &[Frontier] {
        &self.frontiers
    }

    pub fn metrics(&self) -> &RunMetrics {
        &self.metrics
    }

    pub fn coverage(&self) -> f64 {
        coverage_ratio(&self.belief, &self.world).expect("belief shaped like world")
    }

    fn sense_all(&mut self) -> Result<(), SensorError> {
        for r in &self.robots {
            let pose = r.sensing_pose(&self.world);
            sense(&self.world, &mut self.belief, &pose, &self.config.lidar)?;
        }
        Ok(())
    }

    /// Re-detects frontiers and reassigns every robot. Marks the run as
    /// finished when no frontier is reachable.
    fn replan(&mut self) {
        let time = self.time();
        self.frontiers = detect_frontiers(&self.belief, self.config.min_frontier_size);
        let cells: Vec<Cell> = self.robots.iter().map(RobotState::cell).collect();
        let fields = distance_fields(&self.belief, &cells).expect("robot cells are known free");
        let d = matrix_from_fields(&self.belief, &fields, &self.frontiers);

        let known = self.belief.known_count();
        let stalled = self.known_at_replan == Some(known);
        self.known_at_replan = Some(known);

        if d.reachable_columns().is_empty() {
            for r in &mut self.robots {
                r.goal = None;
                r.goal_cell = None;
                r.path.clear();
            }
            self.metrics.replans.push(ReplanRecord {
                time,
                frontiers: self.frontiers.len(),
                goals: vec![None; self.robots.len()],
                goal_cells: vec![None; self.robots.len()],
            });
            self.status = Status::Finished(time);
            self.metrics.exploration_time = Some(time);
            return;
        }

        let sizes: Vec<usize> = self.frontiers.iter().map(Frontier::size).collect();
        let assignment = assign_with_distances(self.config.strategy, &d, &sizes, &mut self.rng);
        let g = self.world.grid();
        let mut owner = vec![None; g.len()];
        for f in &self.frontiers {
            for &c in &f.cells {
                owner[g.index(c)] = Some(f.id);
            }
        }
        let mut goal_cells = Vec::with_capacity(self.robots.len());
        for (i, robot) in self.robots.iter_mut().enumerate() {
            if stalled {
                let kept = robot
                    .goal_cell
                    .and_then(|c| owner[g.index(c)].filter(|_| fields[i].get(c).is_some()));
                if let Some(j) = kept {
                    robot.goal = Some(j);
                    goal_cells.push(robot.goal_cell);
                    continue;
                }
            }
            let target = assignment.frontier_of(i).and_then(|j| {
                let cell = self.frontiers[j].goal_cell(self.belief.grid());
                extract_path(&fields[i], cell).ok().map(|p| (j, cell, p))
            });
            match target {
                Some((j, cell, path)) => {
                    let at_center = robot.pose.position == g.cell_center(robot.cell);
                    robot.goal = Some(j);
                    robot.goal_cell = Some(cell);
                    robot.follow(path, at_center);
                    goal_cells.push(Some(cell));
                }
                None => {
                    robot.goal = None;
                    robot.goal_cell = None;
                    // finish the current segment so the robot rests on a cell center
                    let next = robot.path.front().copied();
                    robot.path.clear();
                    robot.path.extend(next);
                    goal_cells.push(None);
                }
            }
        }
        self.metrics.replans.push(ReplanRecord {
            time,
            frontiers: self.frontiers.len(),
            goals: self.robots.iter().map(|r| r.goal).collect(),
            goal_cells,
        });
    }

    fn sample(&mut self) {
        let time = self.time();
        if self.metrics.samples.last().is_some_and(|s| s.time == time) {
            return;
        }
        let coverage = self.coverage();
        self.metrics.samples.push(Sample {
            time,
            coverage,
            odometry: self.robots.iter().map(|r| r.odometry).collect(),
        });
    }

    /// Advances one tick. Does nothing once the run has ended.
    pub fn step(&mut self) -> Status {
        if self.status != Status::Running {
            return self.status;
        }
        for r in &mut self.robots {
            r.advance(&self.world, self.config.dt, self.config.idle_turn_rate);
        }
        self.sense_all().expect("robots stay on free cells");
        self.tick += 1;

        if self.tick.is_multiple_of(self.config.replan_ticks()) {
            self.replan();
        }
        if self.tick.is_multiple_of(self.config.sample_ticks()) {
            self.sample();
        }
        if self.status == Status::Running && self.tick >= self.config.max_ticks() {
            self.status = Status::DidNotFinish;
        }
        if self.status != Status::Running {
            self.sample();
        }
        self.status
    }

    /// Steps until the run finishes or times out.
    pub fn run_to_end(&mut self) -> Status {
        if self.status != Status::Running {
            // the initial replan may already have finished the run
            self.sample();
        }
        while self.status == Status::Running {
            self.step();
        }
        self.status
    }
}

/// Final state of a completed run.
#[derive(Clone, Debug)]
pub struct RunOutcome {
    pub metrics: RunMetrics,
    pub belief: BeliefGrid,
    pub frontiers: Vec<Frontier>,
    pub robots: Vec<RobotState>,
    pub end_time: f64,
}

pub fn run(world: &WorldGrid, starts: &[Cell], config: &SimConfig) -> Result<RunOutcome, SimError> {
    let mut sim = Simulation::new(world.clone(), starts, config.clone())?;
    sim.run_to_end();
    Ok(RunOutcome {
        end_time: sim.time(),
        metrics: sim.metrics,
        belief: sim.belief,
        frontiers: sim.frontiers,
        robots: sim.robots,
    })
}
