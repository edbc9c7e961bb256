#include <stdio.h>
#include <string.h>
#include "ringbec.h"

#define CHECK(expr)                                                       \
  do {                                                                    \
    RbStatus s_ = (expr);                                                 \
    if (s_ != RB_STATUS_OK) {                                             \
      fprintf(stderr, "%s -> %d: %s\n", #expr, (int)s_, rb_last_error()); \
      return 1;                                                           \
    }                                                                     \
  } while (0)

int main(int argc, char **argv) {
  RbParams *p = NULL;
  CHECK(rb_params_new(4, 1e5, 0.5, 100.0, &p));
  double u = 0.0, w = 0.0;
  CHECK(rb_params_u(p, &u));
  CHECK(rb_resonance_frequency(p, &w));
  rb_params_free(p);

  double upper = 0.0, lower = 0.0, n_star = 0.0;
  CHECK(rb_thresholds_analytic(100.0, 1e5, &n_star, &upper, &lower));

  RbTrajectory *t = NULL;
  CHECK(rb_simulate_preset("fig3a", &t));
  size_t len = 0;
  CHECK(rb_trajectory_len(t, &len));
  double pops[4];
  CHECK(rb_trajectory_populations(t, len - 1, pops, 4));
  if (argc > 1) CHECK(rb_trajectory_write(t, argv[1], RB_FORMAT_CSV));
  rb_trajectory_free(t);

  if (rb_params_new(4, 1e5, 0.5, -1.0, &p) != RB_STATUS_CONFIG) return 2;
  if (rb_last_error() == NULL || strlen(rb_last_error()) == 0) return 3;

  printf("%s %.6e %.6f %.3f %.3f %zu %.3f\n", rb_version(), u, w, upper, lower, len,
         pops[0] + pops[1] + pops[2] + pops[3]);
  return 0;
}
