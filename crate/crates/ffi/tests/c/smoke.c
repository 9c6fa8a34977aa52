#include <stdio.h>
#include <string.h>

#include "coexplore.h"

#define CHECK(cond)                                                       \
  do {                                                                    \
    if (!(cond)) {                                                        \
      const char *err = cx_last_error();                                  \
      fprintf(stderr, "line %d: %s (%s)\n", __LINE__, #cond,              \
              err ? err : "no error");                                    \
      return 1;                                                           \
    }                                                                     \
  } while (0)

static const char *ROOM =
    "8 6 0.25\n"
    "########\n"
    "#......#\n"
    "#......#\n"
    "#......#\n"
    "#......#\n"
    "########\n";

int main(int argc, char **argv) {
  CxWorld *world = NULL;
  CxSimulation *sim = NULL;
  CxSimConfig cfg;
  CxRobot robot;
  CxRunState state = CX_RUN_STATE_RUNNING;
  double coverage = 0.0;
  size_t width = 0, height = 0, cols[2];
  const double cost[4] = {1.0, 5.0, 2.0, 1.0};

  CHECK(strlen(cx_version()) > 0);
  CHECK(cx_world_parse("not a map", &world) == CX_STATUS_PARSE);
  CHECK(cx_last_error() != NULL);

  CHECK(cx_world_parse(ROOM, &world) == CX_STATUS_OK);
  CHECK(cx_world_size(world, &width, &height, NULL) == CX_STATUS_OK);
  CHECK(width == 8 && height == 6);

  CHECK(cx_sim_config_default(&cfg) == CX_STATUS_OK);
  cfg.strategy = CX_STRATEGY_CO122;
  CHECK(cx_sim_new(world, &cfg, NULL, 2, &sim) == CX_STATUS_OK);
  cx_world_free(world);
  CHECK(cx_sim_run(sim, &state) == CX_STATUS_OK);
  CHECK(state == CX_RUN_STATE_FINISHED);
  CHECK(cx_sim_coverage(sim, &coverage) == CX_STATUS_OK && coverage == 1.0);
  CHECK(cx_sim_robot(sim, 0, &robot) == CX_STATUS_OK && !robot.has_goal);
  if (argc > 1) {
    CHECK(cx_sim_write_snapshot(sim, argv[1]) == CX_STATUS_OK);
  }
  cx_sim_free(sim);

  CHECK(cx_hungarian(cost, 2, 2, cols) == CX_STATUS_OK);
  CHECK(cols[0] == 0 && cols[1] == 1);
  puts("ok");
  return 0;
}
