#ifndef COEXPLORE_H
#define COEXPLORE_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Result code of every fallible call.
typedef enum CxStatus {
  CX_STATUS_OK = 0,
  CX_STATUS_NULL_POINTER = 1,
  CX_STATUS_INVALID_ARGUMENT = 2,
  CX_STATUS_IO = 3,
  CX_STATUS_PARSE = 4,
  CX_STATUS_PANIC = 5,
} CxStatus;

typedef enum CxRunState {
  CX_RUN_STATE_RUNNING = 0,
  CX_RUN_STATE_FINISHED = 1,
  CX_RUN_STATE_DID_NOT_FINISH = 2,
} CxRunState;

// Values accepted in [`CxSimConfig::strategy`].
typedef enum CxStrategy {
  CX_STRATEGY_CO_EXPLORE = 0,
  CX_STRATEGY_CO122 = 1,
  CX_STRATEGY_NEAREST = 2,
  CX_STRATEGY_MIN_POS = 3,
  CX_STRATEGY_NEXT_FRONTIER = 4,
} CxStrategy;

// Values written by the cell queries.
typedef enum CxCellState {
  CX_CELL_STATE_FREE = 0,
  CX_CELL_STATE_OCCUPIED = 1,
  CX_CELL_STATE_UNKNOWN = 2,
} CxCellState;

// A simulation run in progress.
typedef struct CxSimulation CxSimulation;

// Ground-truth map.
typedef struct CxWorld CxWorld;

// Simulation parameters. Start from [`cx_sim_config_default`].
typedef struct CxSimConfig {
  double dt;
  double replan_period;
  double sample_period;
  double max_sim_time;
  double speed;
  double idle_turn_rate;
  double lidar_range;
  double lidar_fov;
  double lidar_angular_resolution;
  size_t min_frontier_size;
  // One of [`CxStrategy`].
  uint32_t strategy;
  uint64_t seed;
} CxSimConfig;

// Snapshot of one robot.
typedef struct CxRobot {
  // Meters.
  double x;
  double y;
  // Radians.
  double heading;
  double odometry;
  size_t cell_x;
  size_t cell_y;
  bool has_goal;
  // Goal cell; zero when `has_goal` is false.
  size_t goal_x;
  size_t goal_y;
} CxRobot;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Library version as a static NUL-terminated string.
const char *cx_version(void);

// Message of the last failed call on this thread, or NULL. The pointer is
// valid until the next failing call on the same thread.
const char *cx_last_error(void);

// Loads a map file.
//
// # Safety
// `path` must be a NUL-terminated string and `out` a valid pointer.
enum CxStatus cx_world_load(const char *path, struct CxWorld **out);

// Parses a map from text.
//
// # Safety
// `text` must be a NUL-terminated string and `out` a valid pointer.
enum CxStatus cx_world_parse(const char *text, struct CxWorld **out);

// Generates a maze map.
//
// # Safety
// `out` must be a valid pointer.
enum CxStatus cx_world_generate_maze(size_t width,
                                     size_t height,
                                     size_t corridor_width,
                                     uint64_t seed,
                                     struct CxWorld **out);

// Generates an office map by recursive room division.
//
// # Safety
// `out` must be a valid pointer.
enum CxStatus cx_world_generate_office(size_t width,
                                       size_t height,
                                       size_t room_min,
                                       size_t room_max,
                                       size_t door_width,
                                       uint64_t seed,
                                       struct CxWorld **out);

// Generates an open map with scattered rectangular obstacles.
//
// # Safety
// `out` must be a valid pointer.
enum CxStatus cx_world_generate_open(size_t width,
                                     size_t height,
                                     size_t obstacle_count,
                                     size_t obstacle_size,
                                     uint64_t seed,
                                     struct CxWorld **out);

// Writes the map size in cells and its resolution in meters per cell.
// Any output pointer may be NULL.
//
// # Safety
// `world` must be a live handle.
enum CxStatus cx_world_size(const struct CxWorld *world,
                            size_t *width,
                            size_t *height,
                            double *resolution);

// Writes one [`CxCellState`] value.
//
// # Safety
// `world` must be a live handle and `out` a valid pointer.
enum CxStatus cx_world_cell(const struct CxWorld *world, size_t x, size_t y, uint8_t *out);

// Releases a world. NULL is ignored.
//
// # Safety
// `world` must come from this library and not be used afterwards.
void cx_world_free(struct CxWorld *world);

// Fills `out` with the default parameters.
//
// # Safety
// `out` must be a valid pointer.
enum CxStatus cx_sim_config_default(struct CxSimConfig *out);

// Starts a run on a copy of `world`. `starts` holds `robots` pairs of
// `(x, y)` cell coordinates, or is NULL for clustered starts.
//
// # Safety
// `world` and `config` must be valid, `starts` NULL or `2 * robots` long,
// and `out` a valid pointer.
enum CxStatus cx_sim_new(const struct CxWorld *world,
                         const struct CxSimConfig *config,
                         const size_t *starts,
                         size_t robots,
                         struct CxSimulation **out);

// Releases a simulation. NULL is ignored.
//
// # Safety
// `sim` must come from this library and not be used afterwards.
void cx_sim_free(struct CxSimulation *sim);

// Advances one tick and writes the resulting state. `state` may be NULL.
//
// # Safety
// `sim` must be a live handle.
enum CxStatus cx_sim_step(struct CxSimulation *sim, enum CxRunState *state);

// Steps until the run finishes or reaches its time limit. `state` may be NULL.
//
// # Safety
// `sim` must be a live handle.
enum CxStatus cx_sim_run(struct CxSimulation *sim, enum CxRunState *state);

// Writes simulated seconds elapsed.
//
// # Safety
// `sim` must be a live handle and `out` a valid pointer.
enum CxStatus cx_sim_time(const struct CxSimulation *sim, double *out);

// Writes the fraction of free world cells known free.
//
// # Safety
// `sim` must be a live handle and `out` a valid pointer.
enum CxStatus cx_sim_coverage(const struct CxSimulation *sim, double *out);

// Writes the number of frontiers found at the last replan.
//
// # Safety
// `sim` must be a live handle and `out` a valid pointer.
enum CxStatus cx_sim_frontier_count(const struct CxSimulation *sim, size_t *out);

// Writes the number of robots.
//
// # Safety
// `sim` must be a live handle and `out` a valid pointer.
enum CxStatus cx_sim_robot_count(const struct CxSimulation *sim, size_t *out);

// Writes the state of robot `index`.
//
// # Safety
// `sim` must be a live handle and `out` a valid pointer.
enum CxStatus cx_sim_robot(const struct CxSimulation *sim, size_t index, struct CxRobot *out);

// Writes one belief cell as a [`CxCellState`] value.
//
// # Safety
// `sim` must be a live handle and `out` a valid pointer.
enum CxStatus cx_sim_belief_cell(const struct CxSimulation *sim, size_t x, size_t y, uint8_t *out);

// Writes the metrics recorded so far as CSV.
//
// # Safety
// `sim` must be a live handle and `path` a NUL-terminated string.
enum CxStatus cx_sim_write_metrics(const struct CxSimulation *sim, const char *path);

// Writes the belief with frontiers as a PGM image (PPM for a `.ppm` path).
//
// # Safety
// `sim` must be a live handle and `path` a NUL-terminated string.
enum CxStatus cx_sim_write_snapshot(const struct CxSimulation *sim, const char *path);

// Minimum-cost assignment of each row of a row-major `rows × cols` matrix
// to a distinct column. Requires `rows <= cols`; `out_cols` receives
// `rows` column indices.
//
// # Safety
// `cost` must hold `rows * cols` values and `out_cols` room for `rows`.
enum CxStatus cx_hungarian(const double *cost, size_t rows, size_t cols, size_t *out_cols);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* COEXPLORE_H */
