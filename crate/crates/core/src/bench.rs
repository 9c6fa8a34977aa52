//! Run harness: single runs with persisted artifacts, seeded batches and
//! summary reports.
//!
//! Layout of a batch output directory:
//!
//! ```text
//! <out>/<strategy>/r<robots>/run<index>/{metrics.csv,replans.csv,summary.json,snapshot.pgm}
//! <out>/report.csv
//! <out>/report.json
//! ```

use std::fmt::Write as _;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::gridmap::{render_snapshot, SnapshotFormat, WorldGrid};
use crate::sim::{run, RunMetrics, RunOutcome, SimConfig, SimError};
use crate::strategies::StrategyId;
use crate::worlds::{ScenarioSpec, WorldError};

pub const METRICS_FILE: &str = "metrics.csv";
pub const REPLANS_FILE: &str = "replans.csv";
pub const SUMMARY_FILE: &str = "summary.json";
pub const SNAPSHOT_FILE: &str = "snapshot.pgm";
pub const REPORT_CSV: &str = "report.csv";
pub const REPORT_JSON: &str = "report.json";

#[derive(Debug, Error)]
pub enum BenchError {
    #[error("{0}")]
    Config(String),
    #[error(transparent)]
    World(#[from] WorldError),
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("{path}: {message}")]
    Corrupt { path: PathBuf, message: String },
}

impl BenchError {
    /// True for errors caused by bad input rather than the file system.
    pub fn is_config(&self) -> bool {
        !matches!(self, BenchError::Io { .. })
    }
}

fn io_err(path: &Path) -> impl FnOnce(io::Error) -> BenchError + '_ {
    move |source| BenchError::Io { path: path.to_path_buf(), source }
}

fn write_file(path: &Path, bytes: impl AsRef<[u8]>) -> Result<(), BenchError> {
    fs::write(path, bytes).map_err(io_err(path))
}

/// Everything persisted about one run in `summary.json`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub strategy: String,
    pub robots: usize,
    pub world: String,
    pub run_index: usize,
    pub seed: u64,
    pub finished: bool,
    /// Seconds; `null` for a run that did not finish.
    pub exploration_time: Option<f64>,
    pub end_time: f64,
    pub final_coverage: f64,
    /// Meters per robot.
    pub distances: Vec<f64>,
    pub total_distance: f64,
    /// Largest minus smallest per-robot distance.
    pub distance_spread: f64,
}

impl RunSummary {
    pub fn new(outcome: &RunOutcome, strategy: StrategyId, world: &str, run_index: usize, seed: u64) -> Self {
        let last = outcome.metrics.final_sample().expect("runs always record a sample");
        let distances = last.odometry.clone();
        let max = distances.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let min = distances.iter().copied().fold(f64::INFINITY, f64::min);
        Self {
            strategy: strategy.name().to_string(),
            robots: distances.len(),
            world: world.to_string(),
            run_index,
            seed,
            finished: outcome.metrics.finished(),
            exploration_time: outcome.metrics.exploration_time,
            end_time: outcome.end_time,
            final_coverage: last.coverage,
            total_distance: distances.iter().sum(),
            distance_spread: max - min,
            distances,
        }
    }
}

/// `t,coverage,dist_r0,...` with one row per sample.
pub fn metrics_csv(metrics: &RunMetrics, robots: usize) -> String {
    let mut out = String::from("t,coverage");
    for i in 0..robots {
        write!(out, ",dist_r{i}").unwrap();
    }
    out.push('\n');
    for s in &metrics.samples {
        write!(out, "{:.3},{:.6}", s.time, s.coverage).unwrap();
        for d in &s.odometry {
            write!(out, ",{d:.4}").unwrap();
        }
        out.push('\n');
    }
    out
}

/// `t,frontiers,goal_r0,...`; a robot without a goal is written as -1.
pub fn replans_csv(metrics: &RunMetrics, robots: usize) -> String {
    let mut out = String::from("t,frontiers");
    for i in 0..robots {
        write!(out, ",goal_r{i}").unwrap();
    }
    out.push('\n');
    for r in &metrics.replans {
        write!(out, "{:.3},{}", r.time, r.frontiers).unwrap();
        for g in &r.goals {
            match g {
                Some(j) => write!(out, ",{j}").unwrap(),
                None => out.push_str(",-1"),
            }
        }
        out.push('\n');
    }
    out
}

/// One fully specified run.
#[derive(Clone, Debug)]
pub struct RunRequest {
    pub strategy: StrategyId,
    pub robots: usize,
    pub run_index: usize,
    pub seed: u64,
    pub max_time: Option<f64>,
}

/// A scenario with its world built once.
pub struct PreparedScenario {
    pub spec: ScenarioSpec,
    pub world: WorldGrid,
}

impl PreparedScenario {
    pub fn load(path: impl AsRef<Path>) -> Result<Self, BenchError> {
        let spec = ScenarioSpec::load(path)?;
        Self::new(spec)
    }

    pub fn new(spec: ScenarioSpec) -> Result<Self, BenchError> {
        let world = spec.build_world()?;
        Ok(Self { spec, world })
    }

    pub fn config(&self, req: &RunRequest) -> SimConfig {
        let mut cfg = self.spec.sim_config(req.strategy, req.seed);
        if let Some(t) = req.max_time {
            cfg.max_sim_time = t;
        }
        cfg
    }

    pub fn execute(&self, req: &RunRequest) -> Result<(RunOutcome, RunSummary), BenchError> {
        let starts = self.spec.starts.place(&self.world, req.robots, req.seed)?;
        let outcome = run(&self.world, &starts, &self.config(req))?;
        let summary = RunSummary::new(&outcome, req.strategy, &self.spec.label(), req.run_index, req.seed);
        Ok((outcome, summary))
    }

    /// Runs and writes the per-run artifacts into `dir`.
    pub fn execute_into(&self, req: &RunRequest, dir: &Path) -> Result<RunSummary, BenchError> {
        let (outcome, summary) = self.execute(req)?;
        write_run_artifacts(dir, &outcome, &summary)?;
        Ok(summary)
    }
}

pub fn write_run_artifacts(dir: &Path, outcome: &RunOutcome, summary: &RunSummary) -> Result<(), BenchError> {
    fs::create_dir_all(dir).map_err(io_err(dir))?;
    let n = summary.robots;
    write_file(&dir.join(METRICS_FILE), metrics_csv(&outcome.metrics, n))?;
    write_file(&dir.join(REPLANS_FILE), replans_csv(&outcome.metrics, n))?;
    let json = serde_json::to_string_pretty(summary).expect("summary serializes");
    write_file(&dir.join(SUMMARY_FILE), json + "\n")?;
    let image = render_snapshot(&outcome.belief, &outcome.frontiers, SnapshotFormat::Pgm);
    write_file(&dir.join(SNAPSHOT_FILE), image)
}

/// Aggregate over the runs of one (strategy, robots, world) group.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub strategy: String,
    pub robots: usize,
    pub world: String,
    pub runs: usize,
    pub dnf: usize,
    /// Mean exploration time over finished runs, seconds.
    pub mean_time: Option<f64>,
    /// Sample standard deviation over finished runs; 0 for a single run.
    pub std_time: Option<f64>,
    /// Per-run artifact directories relative to the batch directory.
    #[serde(default)]
    pub run_dirs: Vec<String>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct BenchReport {
    pub rows: Vec<ReportRow>,
}

fn strategy_order(name: &str) -> usize {
    StrategyId::ALL
        .iter()
        .position(|s| s.name() == name)
        .unwrap_or(StrategyId::ALL.len())
}

pub fn mean_std(values: &[f64]) -> Option<(f64, f64)> {
    if values.is_empty() {
        return None;
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let std = if values.len() < 2 {
        0.0
    } else {
        (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
    };
    Some((mean, std))
}

/// Relative artifact directory for a run.
pub fn run_dir(strategy: &str, robots: usize, run_index: usize) -> PathBuf {
    Path::new(strategy).join(format!("r{robots}")).join(format!("run{run_index:03}"))
}

impl BenchReport {
    /// Groups summaries by (strategy, robots, world). Rows and runs are
    /// ordered independently of the input order.
    pub fn from_summaries(summaries: &[RunSummary]) -> Self {
        let mut sorted: Vec<&RunSummary> = summaries.iter().collect();
        sorted.sort_by(|a, b| {
            (strategy_order(&a.strategy), &a.strategy, a.robots, &a.world, a.run_index)
                .cmp(&(strategy_order(&b.strategy), &b.strategy, b.robots, &b.world, b.run_index))
        });
        let mut rows: Vec<ReportRow> = Vec::new();
        let mut times: Vec<Vec<f64>> = Vec::new();
        for s in sorted {
            let same = rows
                .last()
                .is_some_and(|r| r.strategy == s.strategy && r.robots == s.robots && r.world == s.world);
            if !same {
                rows.push(ReportRow {
                    strategy: s.strategy.clone(),
                    robots: s.robots,
                    world: s.world.clone(),
                    runs: 0,
                    dnf: 0,
                    mean_time: None,
                    std_time: None,
                    run_dirs: Vec::new(),
                });
                times.push(Vec::new());
            }
            let row = rows.last_mut().expect("row pushed above");
            row.runs += 1;
            row.run_dirs.push(
                run_dir(&s.strategy, s.robots, s.run_index).to_string_lossy().replace('\\', "/"),
            );
            match s.exploration_time.filter(|_| s.finished) {
                Some(t) => times.last_mut().expect("parallel to rows").push(t),
                None => row.dnf += 1,
            }
        }
        for (row, t) in rows.iter_mut().zip(&times) {
            if let Some((m, s)) = mean_std(t) {
                row.mean_time = Some(m);
                row.std_time = Some(s);
            }
        }
        Self { rows }
    }

    pub fn row(&self, strategy: StrategyId, robots: usize) -> Option<&ReportRow> {
        self.rows
            .iter()
            .find(|r| r.strategy == strategy.name() && r.robots == robots)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("strategy,robots,world,runs,dnf,mean_time,std_time\n");
        let opt = |v: Option<f64>| v.map(|v| format!("{v:.3}")).unwrap_or_default();
        for r in &self.rows {
            writeln!(
                out,
                "{},{},{},{},{},{},{}",
                r.strategy,
                r.robots,
                r.world,
                r.runs,
                r.dnf,
                opt(r.mean_time),
                opt(r.std_time)
            )
            .unwrap();
        }
        out
    }

    pub fn to_table(&self) -> String {
        let mut out = format!(
            "{:<13} {:>6} {:<12} {:>5} {:>4} {:>10} {:>10}\n",
            "strategy", "robots", "world", "runs", "dnf", "mean_s", "std_s"
        );
        let opt = |v: Option<f64>| v.map(|v| format!("{v:.1}")).unwrap_or_else(|| "-".into());
        for r in &self.rows {
            writeln!(
                out,
                "{:<13} {:>6} {:<12} {:>5} {:>4} {:>10} {:>10}",
                r.strategy,
                r.robots,
                r.world,
                r.runs,
                r.dnf,
                opt(r.mean_time),
                opt(r.std_time)
            )
            .unwrap();
        }
        out
    }

    pub fn write(&self, dir: &Path) -> Result<(), BenchError> {
        write_file(&dir.join(REPORT_CSV), self.to_csv())?;
        let json = serde_json::to_string_pretty(self).expect("report serializes");
        write_file(&dir.join(REPORT_JSON), json + "\n")
    }
}

/// Options for [`cmd_run`]. `None` fields fall back to the scenario.
#[derive(Clone, Debug, Default)]
pub struct RunOptions {
    pub strategy: Option<StrategyId>,
    pub robots: Option<usize>,
    pub seed: Option<u64>,
    pub max_time: Option<f64>,
}

/// Executes one run of the scenario at `scenario` and writes its artifacts
/// directly into `out`.
pub fn cmd_run(scenario: &Path, opts: &RunOptions, out: &Path) -> Result<RunSummary, BenchError> {
    let prepared = PreparedScenario::load(scenario)?;
    let spec = &prepared.spec;
    let strategy = match opts.strategy {
        Some(s) => s,
        None => spec.strategy_ids().map_err(|e| BenchError::Config(e.to_string()))?[0],
    };
    let req = RunRequest {
        strategy,
        robots: opts.robots.unwrap_or(spec.robots[0]),
        run_index: 0,
        seed: opts.seed.unwrap_or(spec.seed),
        max_time: opts.max_time,
    };
    check_request(&req)?;
    prepared.execute_into(&req, out)
}

fn check_request(req: &RunRequest) -> Result<(), BenchError> {
    if req.robots == 0 {
        return Err(BenchError::Config("robot count must be at least 1".into()));
    }
    if let Some(t) = req.max_time {
        if !(t > 0.0) {
            return Err(BenchError::Config(format!("max time {t} must be > 0")));
        }
    }
    Ok(())
}

/// Options for [`cmd_bench`]. Empty lists and `None` fall back to the scenario.
#[derive(Clone, Debug, Default)]
pub struct BenchOptions {
    pub strategies: Vec<StrategyId>,
    pub robots: Vec<usize>,
    pub runs: Option<usize>,
    pub seed: Option<u64>,
    pub max_time: Option<f64>,
}

/// Executes `runs × strategies × robot counts` runs with seeds
/// `base_seed + run_index`, in parallel, and writes all artifacts plus the
/// report. Artifacts and report are independent of scheduling.
pub fn cmd_bench(scenario: &Path, opts: &BenchOptions, out: &Path) -> Result<BenchReport, BenchError> {
    let prepared = PreparedScenario::load(scenario)?;
    bench_prepared(&prepared, opts, Some(out))
}

/// Batch over an already built scenario. With `out` set, artifacts and the
/// report are written there.
pub fn bench_prepared(
    prepared: &PreparedScenario,
    opts: &BenchOptions,
    out: Option<&Path>,
) -> Result<BenchReport, BenchError> {
    let spec = &prepared.spec;
    let strategies = if opts.strategies.is_empty() {
        spec.strategy_ids().map_err(|e| BenchError::Config(e.to_string()))?
    } else {
        opts.strategies.clone()
    };
    let robots = if opts.robots.is_empty() { spec.robots.clone() } else { opts.robots.clone() };
    let runs = opts.runs.unwrap_or(spec.runs);
    if runs == 0 {
        return Err(BenchError::Config("runs must be at least 1".into()));
    }
    let base = opts.seed.unwrap_or(spec.seed);

    let mut jobs = Vec::new();
    for &strategy in &strategies {
        for &n in &robots {
            for run_index in 0..runs {
                jobs.push(RunRequest {
                    strategy,
                    robots: n,
                    run_index,
                    seed: base.wrapping_add(run_index as u64),
                    max_time: opts.max_time,
                });
            }
        }
    }
    for j in &jobs {
        check_request(j)?;
    }
    if let Some(out) = out {
        fs::create_dir_all(out).map_err(io_err(out))?;
    }
    let summaries = jobs
        .par_iter()
        .map(|req| match out {
            Some(out) => {
                let dir = out.join(run_dir(req.strategy.name(), req.robots, req.run_index));
                prepared.execute_into(req, &dir)
            }
            None => prepared.execute(req).map(|(_, s)| s),
        })
        .collect::<Result<Vec<_>, _>>()?;
    let report = BenchReport::from_summaries(&summaries);
    if let Some(out) = out {
        report.write(out)?;
    }
    Ok(report)
}

fn collect_summaries(dir: &Path, found: &mut Vec<PathBuf>) -> Result<(), BenchError> {
    let mut entries: Vec<PathBuf> = fs::read_dir(dir)
        .map_err(io_err(dir))?
        .map(|e| e.map(|e| e.path()))
        .collect::<Result<_, _>>()
        .map_err(io_err(dir))?;
    entries.sort();
    for p in entries {
        if p.is_dir() {
            collect_summaries(&p, found)?;
        } else if p.file_name().is_some_and(|n| n == SUMMARY_FILE) {
            found.push(p);
        }
    }
    Ok(())
}

/// Rebuilds the report from the `summary.json` files under `dir` and
/// rewrites `report.csv` and `report.json`.
pub fn cmd_report(dir: &Path) -> Result<BenchReport, BenchError> {
    let mut files = Vec::new();
    collect_summaries(dir, &mut files)?;
    if files.is_empty() {
        return Err(BenchError::Corrupt {
            path: dir.to_path_buf(),
            message: format!("no {SUMMARY_FILE} files found"),
        });
    }
    let summaries = files
        .iter()
        .map(|p| {
            let text = fs::read_to_string(p).map_err(io_err(p))?;
            serde_json::from_str::<RunSummary>(&text).map_err(|e| BenchError::Corrupt {
                path: p.clone(),
                message: e.to_string(),
            })
        })
        .collect::<Result<Vec<_>, _>>()?;
    let report = BenchReport::from_summaries(&summaries);
    report.write(dir)?;
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::Sample;

    fn summary(strategy: &str, robots: usize, run_index: usize, time: Option<f64>) -> RunSummary {
        RunSummary {
            strategy: strategy.into(),
            robots,
            world: "w".into(),
            run_index,
            seed: run_index as u64,
            finished: time.is_some(),
            exploration_time: time,
            end_time: time.unwrap_or(100.0),
            final_coverage: 1.0,
            distances: vec![1.0; robots],
            total_distance: robots as f64,
            distance_spread: 0.0,
        }
    }

    #[test]
    fn mean_and_sample_std() {
        assert_eq!(mean_std(&[]), None);
        assert_eq!(mean_std(&[4.0]), Some((4.0, 0.0)));
        let (m, s) = mean_std(&[2.0, 4.0]).unwrap();
        assert_eq!(m, 3.0);
        assert!((s - 2f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn report_groups_and_excludes_dnf() {
        let s = vec![
            summary("nearest", 2, 1, Some(30.0)),
            summary("coexplore", 2, 0, Some(10.0)),
            summary("coexplore", 2, 1, Some(20.0)),
            summary("coexplore", 2, 2, None),
            summary("nearest", 2, 0, None),
        ];
        let r = BenchReport::from_summaries(&s);
        assert_eq!(r.rows.len(), 2);
        assert_eq!(r.rows[0].strategy, "coexplore");
        assert_eq!((r.rows[0].runs, r.rows[0].dnf, r.rows[0].mean_time), (3, 1, Some(15.0)));
        assert_eq!((r.rows[1].runs, r.rows[1].dnf, r.rows[1].mean_time), (2, 1, Some(30.0)));
        let csv = r.to_csv();
        assert!(csv.starts_with("strategy,robots,world,runs,dnf,mean_time,std_time\n"));
        assert!(csv.contains("coexplore,2,w,3,1,15.000,7.071\n"), "{csv}");

        let mut shuffled = s.clone();
        shuffled.reverse();
        assert_eq!(BenchReport::from_summaries(&shuffled), r);
    }

    #[test]
    fn all_dnf_row_has_empty_statistics() {
        let r = BenchReport::from_summaries(&[summary("minpos", 3, 0, None)]);
        assert!(r.to_csv().ends_with("minpos,3,w,1,1,,\n"));
    }

    #[test]
    fn metrics_csv_format() {
        let m = RunMetrics {
            samples: vec![
                Sample { time: 0.0, coverage: 0.25, odometry: vec![0.0, 0.0] },
                Sample { time: 5.0, coverage: 0.5, odometry: vec![2.5, 1.25] },
            ],
            replans: Vec::new(),
            exploration_time: None,
        };
        assert_eq!(
            metrics_csv(&m, 2),
            "t,coverage,dist_r0,dist_r1\n0.000,0.250000,0.0000,0.0000\n5.000,0.500000,2.5000,1.2500\n"
        );
    }
}
