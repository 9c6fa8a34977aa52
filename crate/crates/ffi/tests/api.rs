use std::ffi::{CStr, CString};
use std::ptr;

use coexplore_ffi::*;

const ROOMS: &str = "\
16 10 0.5
################
#......#.......#
#......#.......#
#..............#
#......#.......#
####.#####.#####
#......#.......#
#..............#
#......#.......#
################
";

fn last_error() -> String {
    let p = cx_last_error();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

fn parse(text: &str) -> *mut CxWorld {
    let text = CString::new(text).unwrap();
    let mut w = ptr::null_mut();
    assert_eq!(unsafe { cx_world_parse(text.as_ptr(), &mut w) }, CxStatus::Ok);
    w
}

fn config(strategy: CxStrategy) -> CxSimConfig {
    let mut c = unsafe { std::mem::zeroed::<CxSimConfig>() };
    assert_eq!(unsafe { cx_sim_config_default(&mut c) }, CxStatus::Ok);
    c.strategy = strategy as u32;
    c.lidar_range = 2.0;
    c
}

#[test]
fn version_matches_crate() {
    let v = unsafe { CStr::from_ptr(cx_version()) };
    assert_eq!(v.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
}

#[test]
fn world_queries() {
    let w = parse(ROOMS);
    let (mut width, mut height, mut res) = (0, 0, 0.0);
    unsafe {
        assert_eq!(cx_world_size(w, &mut width, &mut height, &mut res), CxStatus::Ok);
        assert_eq!((width, height, res), (16, 10, 0.5));
        assert_eq!(cx_world_size(w, ptr::null_mut(), ptr::null_mut(), ptr::null_mut()), CxStatus::Ok);
        let mut s = 9u8;
        assert_eq!(cx_world_cell(w, 0, 0, &mut s), CxStatus::Ok);
        assert_eq!(s, CxCellState::Occupied as u8);
        assert_eq!(cx_world_cell(w, 1, 1, &mut s), CxStatus::Ok);
        assert_eq!(s, CxCellState::Free as u8);
        assert_eq!(cx_world_cell(w, 16, 0, &mut s), CxStatus::InvalidArgument);
        assert!(last_error().contains("outside"));
        assert_eq!(cx_world_cell(w, 1, 1, ptr::null_mut()), CxStatus::NullPointer);
        cx_world_free(w);
        cx_world_free(ptr::null_mut());
    }
}

#[test]
fn bad_inputs_report_errors() {
    let mut w = ptr::null_mut();
    let bad = CString::new("3 3 0.25\n###\n#x#\n###\n").unwrap();
    unsafe {
        assert_eq!(cx_world_parse(bad.as_ptr(), &mut w), CxStatus::Parse);
        assert!(w.is_null());
        assert!(!last_error().is_empty());
        let missing = CString::new("/nonexistent/none.map").unwrap();
        assert_eq!(cx_world_load(missing.as_ptr(), &mut w), CxStatus::Io);
        assert!(last_error().contains("none.map"));
        assert_eq!(cx_world_parse(ptr::null(), &mut w), CxStatus::NullPointer);
        assert_eq!(cx_world_generate_maze(21, 21, 0, 1, &mut w), CxStatus::InvalidArgument);

        let world = parse(ROOMS);
        let mut sim = ptr::null_mut();
        let mut c = config(CxStrategy::CoExplore);
        c.strategy = 42;
        assert_eq!(cx_sim_new(world, &c, ptr::null(), 2, &mut sim), CxStatus::InvalidArgument);
        assert!(last_error().contains("42"));
        let c = config(CxStrategy::CoExplore);
        let wall = [0usize, 0];
        assert_eq!(cx_sim_new(world, &c, wall.as_ptr(), 1, &mut sim), CxStatus::InvalidArgument);
        assert_eq!(cx_sim_new(world, &c, ptr::null(), 0, &mut sim), CxStatus::InvalidArgument);
        assert!(sim.is_null());
        cx_world_free(world);
    }
}

#[test]
fn generators_produce_worlds() {
    let mut w = ptr::null_mut();
    let (mut width, mut height) = (0, 0);
    unsafe {
        assert_eq!(cx_world_generate_maze(21, 17, 1, 3, &mut w), CxStatus::Ok);
        cx_world_size(w, &mut width, &mut height, ptr::null_mut());
        assert_eq!((width, height), (21, 17));
        cx_world_free(w);
        assert_eq!(cx_world_generate_office(40, 30, 5, 10, 2, 3, &mut w), CxStatus::Ok);
        cx_world_free(w);
        assert_eq!(cx_world_generate_open(30, 30, 8, 3, 3, &mut w), CxStatus::Ok);
        cx_world_free(w);
    }
}

#[test]
fn simulation_runs_to_completion() {
    let world = parse(ROOMS);
    let c = config(CxStrategy::Co122);
    let starts = [1usize, 1, 2, 1];
    let mut sim = ptr::null_mut();
    unsafe {
        assert_eq!(cx_sim_new(world, &c, starts.as_ptr(), 2, &mut sim), CxStatus::Ok);
        cx_world_free(world);

        let mut n = 0;
        assert_eq!(cx_sim_robot_count(sim, &mut n), CxStatus::Ok);
        assert_eq!(n, 2);
        let mut r = CxRobot::default();
        assert_eq!(cx_sim_robot(sim, 1, &mut r), CxStatus::Ok);
        assert_eq!((r.cell_x, r.cell_y), (2, 1));
        assert_eq!((r.x, r.y), (1.25, 0.75));
        assert_eq!(cx_sim_robot(sim, 2, &mut r), CxStatus::InvalidArgument);

        let mut state = CxRunState::DidNotFinish;
        assert_eq!(cx_sim_step(sim, &mut state), CxStatus::Ok);
        assert_eq!(state, CxRunState::Running);
        let mut t = 0.0;
        cx_sim_time(sim, &mut t);
        assert_eq!(t, 0.2);

        assert_eq!(cx_sim_run(sim, &mut state), CxStatus::Ok);
        assert_eq!(state, CxRunState::Finished);
        let (mut cov, mut frontiers) = (0.0, 99);
        cx_sim_coverage(sim, &mut cov);
        assert_eq!(cov, 1.0);
        cx_sim_frontier_count(sim, &mut frontiers);
        assert_eq!(frontiers, 0);
        let mut s = 9u8;
        assert_eq!(cx_sim_belief_cell(sim, 14, 8, &mut s), CxStatus::Ok);
        assert_eq!(s, CxCellState::Free as u8);
        assert_eq!(cx_sim_step(sim, ptr::null_mut()), CxStatus::Ok);
        cx_sim_free(sim);
    }
}

#[test]
fn ffi_run_matches_library_run() {
    use coexplore::gridmap::load_world;
    use coexplore::sensor::LidarSpec;
    use coexplore::sim::{run, SimConfig};
    use coexplore::strategies::StrategyId;

    let dir = tempfile::tempdir().unwrap();
    let metrics = dir.path().join("m.csv");
    let snapshot = dir.path().join("s.pgm");
    let world = parse(ROOMS);
    let c = config(CxStrategy::Nearest);
    let mut sim = ptr::null_mut();
    unsafe {
        assert_eq!(cx_sim_new(world, &c, ptr::null(), 3, &mut sim), CxStatus::Ok);
        assert_eq!(cx_sim_run(sim, ptr::null_mut()), CxStatus::Ok);
        let m = CString::new(metrics.to_str().unwrap()).unwrap();
        let s = CString::new(snapshot.to_str().unwrap()).unwrap();
        assert_eq!(cx_sim_write_metrics(sim, m.as_ptr()), CxStatus::Ok);
        assert_eq!(cx_sim_write_snapshot(sim, s.as_ptr()), CxStatus::Ok);
        let bad = CString::new("/nonexistent/dir/m.csv").unwrap();
        assert_eq!(cx_sim_write_metrics(sim, bad.as_ptr()), CxStatus::Io);
        cx_sim_free(sim);
        cx_world_free(world);
    }

    let w = load_world(ROOMS).unwrap();
    let starts = coexplore::worlds::clustered_starts(&w, 3).unwrap();
    let cfg = SimConfig {
        strategy: StrategyId::Nearest,
        lidar: LidarSpec { range: 2.0, ..Default::default() },
        ..Default::default()
    };
    let out = run(&w, &starts, &cfg).unwrap();
    let expected = coexplore::bench::metrics_csv(&out.metrics, 3);
    assert_eq!(std::fs::read_to_string(&metrics).unwrap(), expected);
    let pgm = coexplore::gridmap::render_snapshot(&out.belief, &out.frontiers, coexplore::gridmap::SnapshotFormat::Pgm);
    assert_eq!(std::fs::read(&snapshot).unwrap(), pgm);
}

#[test]
fn hungarian_through_c_abi() {
    let cost = [4.0, 1.0, 3.0, 2.0, 0.0, 5.0, 3.0, 2.0, 2.0];
    let mut out = [9usize; 3];
    unsafe {
        assert_eq!(cx_hungarian(cost.as_ptr(), 3, 3, out.as_mut_ptr()), CxStatus::Ok);
        assert_eq!(out, [1, 0, 2]);
        assert_eq!(cx_hungarian(cost.as_ptr(), 3, 2, out.as_mut_ptr()), CxStatus::InvalidArgument);
        let nan = [f64::NAN];
        assert_eq!(cx_hungarian(nan.as_ptr(), 1, 1, out.as_mut_ptr()), CxStatus::InvalidArgument);
        assert_eq!(cx_hungarian(ptr::null(), 1, 1, out.as_mut_ptr()), CxStatus::NullPointer);
        assert_eq!(cx_hungarian(ptr::null(), 0, 0, ptr::null_mut()), CxStatus::Ok);
    }
}

#[test]
fn errors_are_per_thread() {
    let mut s = 0u8;
    let w = parse(ROOMS);
    unsafe { assert_eq!(cx_world_cell(w, 99, 99, &mut s), CxStatus::InvalidArgument) };
    let other = std::thread::spawn(|| cx_last_error().is_null()).join().unwrap();
    assert!(other);
    assert!(last_error().contains("99"));
    unsafe { cx_world_free(w) };
}
