#include <stdio.h>
#include <string.h>

#include "fedcgau.h"

#define CHECK(cond)                                                        \
  do {                                                                     \
    if (!(cond)) {                                                         \
      const char *err = fc_last_error();                                   \
      fprintf(stderr, "line %d: %s (%s)\n", __LINE__, #cond,               \
              err ? err : "no error");                                     \
      return 1;                                                            \
    }                                                                      \
  } while (0)

int main(int argc, char **argv) {
  if (argc != 2) return 2;
  FcDataset *ds = NULL;
  CHECK(fc_synth_blobs(2, 3, 40, 4, 10.0, 1.0, 5, &ds) == FC_STATUS_OK);
  CHECK(fc_dataset_len(ds) == 240 && fc_dataset_dim(ds) == 4);

  CHECK(fc_dataset_write(ds, argv[1]) == FC_STATUS_OK);
  FcDataset *back = NULL;
  CHECK(fc_dataset_read(argv[1], &back) == FC_STATUS_OK);
  CHECK(fc_dataset_num_classes(back) == 2);

  static double x[240 * 4];
  static uint32_t labels[240];
  static uint32_t assignment[240];
  CHECK(fc_dataset_features(back, x, 240 * 4) == FC_STATUS_OK);
  CHECK(fc_dataset_labels(back, labels, 240) == FC_STATUS_OK);
  CHECK(fc_dataset_features(back, x, 3) == FC_STATUS_BUFFER_TOO_SMALL);

  double d = -1.0;
  CHECK(fc_frechet_distance_sq(x, 120, x, 120, 4, &d) == FC_STATUS_OK);
  CHECK(d >= 0.0 && d < 1e-8);

  CHECK(fc_simulate_clients(back, 4, 0.0, 1, assignment, 240) == FC_STATUS_OK);
  double gamma = -1.0, per_client[4];
  CHECK(fc_gamma(back, assignment, 4, &gamma, per_client) == FC_STATUS_OK);
  CHECK(gamma > 0.0);

  FcDataset *missing = NULL;
  CHECK(fc_dataset_read("/nonexistent/file.emb1", &missing) == FC_STATUS_IO);
  CHECK(missing == NULL && fc_last_error() != NULL);
  CHECK(fc_dataset_len(NULL) == 0);

  fc_dataset_free(back);
  fc_dataset_free(ds);
  printf("fedcgau %s ok\n", fc_version());
  return 0;
}
