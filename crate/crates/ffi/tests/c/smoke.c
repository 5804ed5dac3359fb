#include <math.h>
#include <stdio.h>
#include <string.h>

#include "thresholding_bandit.h"

#define CHECK(cond)                                                   \
  do {                                                                \
    if (!(cond)) {                                                    \
      fprintf(stderr, "check failed at line %d: %s\n", __LINE__, #cond); \
      return 1;                                                       \
    }                                                                 \
  } while (0)

int main(void) {
  const double mu[3] = {1.0, 2.0, 2.5};
  TbInstance *inst = NULL;
  CHECK(tb_instance_new(mu, 3, 1.55, TB_SETTING_INCREASING, &inst) == TB_STATUS_OK);

  double w[3], t = 0.0;
  CHECK(tb_solve_complexity(inst, w, 3, &t) == TB_STATUS_OK);
  CHECK(fabs(t - 800.0) < 1e-4);
  CHECK(fabs(w[0] + w[1] + w[2] - 1.0) < 1e-9);
  tb_instance_free(inst);

  const double bad[2] = {2.0, 1.0};
  CHECK(tb_instance_new(bad, 2, 1.5, TB_SETTING_INCREASING, &inst) == TB_STATUS_INVALID_ARGUMENT);
  size_t needed = 0;
  CHECK(tb_last_error_message(NULL, 0, &needed) == TB_STATUS_BUFFER_TOO_SMALL);
  CHECK(needed > 1);

  const char *cfg =
      "{\"instance\": {\"mu\": [1.0, 2.0, 2.5], \"threshold\": 1.55, \"setting\": \"Increasing\"},"
      " \"algorithms\": [{\"name\": \"DT\"}], \"delta\": 0.1, \"replications\": 3, \"master_seed\": 1}";
  TbExperiment *exp = NULL;
  TbResult *res = NULL;
  CHECK(tb_experiment_from_json(cfg, &exp) == TB_STATUS_OK);
  CHECK(tb_experiment_run(exp, &res) == TB_STATUS_OK);
  TbSummary s;
  CHECK(tb_result_summary(res, 0, &s) == TB_STATUS_OK);
  CHECK(s.replications == 3 && s.mean_tau > 0.0);
  char csv[1024];
  CHECK(tb_result_csv(res, false, csv, sizeof csv, &needed) == TB_STATUS_OK);
  CHECK(strncmp(csv, "algorithm,setting,", 18) == 0);
  tb_result_free(res);
  tb_experiment_free(exp);
  printf("ok %s\n", tb_version());
  return 0;
}
