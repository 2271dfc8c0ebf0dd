#include <math.h>
#include <stdio.h>
#include "dtour.h"

#define CHECK(call)                                                          \
  do {                                                                       \
    DtourStatus st_ = (call);                                                \
    if (st_ != DTOUR_STATUS_OK) {                                            \
      fprintf(stderr, "%s failed (%d): %s\n", #call, st_, dtour_last_error()); \
      return 1;                                                              \
    }                                                                        \
  } while (0)

int main(void) {
  const double bases[] = {1, 0, 0, 1, 0, 0, 0, 0, 1, 0, 0, 1, 0, 1, 0, 0, 1, 0};
  DtourTour *tour = NULL;
  CHECK(dtour_tour_compile(bases, 3, 3, true, &tour));
  double pos[3], b[6], d;
  CHECK(dtour_tour_keyframe_positions(tour, pos, 3));
  CHECK(dtour_tour_basis_at(tour, pos[1], b));
  CHECK(dtour_geodesic(b, bases + 6, 3, &d));
  if (d > 1e-6) {
    fprintf(stderr, "keyframe 1 missed by %g\n", d);
    return 1;
  }
  const float cols[] = {1, 2, 3, 4, 5, 6};
  DtourDataset *ds = NULL;
  CHECK(dtour_dataset_new(cols, 2, 3, &ds));
  float xy[4];
  CHECK(dtour_project(ds, bases, xy));
  if (xy[0] != 1 || xy[1] != 3 || xy[2] != 2 || xy[3] != 4) {
    fprintf(stderr, "projection mismatch\n");
    return 1;
  }
  if (dtour_geodesic(NULL, b, 3, &d) != DTOUR_STATUS_NULL_POINTER || dtour_last_error() == NULL) {
    fprintf(stderr, "null pointer not reported\n");
    return 1;
  }
  dtour_dataset_free(ds);
  dtour_tour_free(tour);
  printf("dtour %s ok\n", dtour_version());
  return 0;
}
