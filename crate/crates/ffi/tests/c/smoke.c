#include <math.h>
#include <stdio.h>

#include "poolplan.h"

#define CHECK(cond)                                              \
    do {                                                         \
        if (!(cond)) {                                           \
            fprintf(stderr, "check failed: %s\n", #cond);        \
            return 1;                                            \
        }                                                        \
    } while (0)

int main(void) {
    double c = 0.0;
    CHECK(poolplan_single_pool_cost(0.01112, 10, &c) == POOLPLAN_STATUS_OK);
    CHECK(fabs(c - 0.2058) < 1e-4);
    CHECK(poolplan_single_pool_cost(0.0, 10, &c) == POOLPLAN_STATUS_INVALID_PREVALENCE);

    char msg[128];
    CHECK(poolplan_last_error(msg, sizeof msg) > 0);

    PoolplanPlan plan;
    CHECK(poolplan_integer_optimum(0.01112, 2, 10000, 0, &plan) == POOLPLAN_STATUS_OK);
    CHECK(plan.s_integer == 23);

    PoolplanSimConfig *cfg = NULL;
    CHECK(poolplan_sim_config_new_fixed(10, 10, 1, 10, &cfg) == POOLPLAN_STATUS_OK);
    PoolplanTrialOutcome outcome;
    CHECK(poolplan_run_trial(cfg, 0, &outcome) == POOLPLAN_STATUS_OK);
    CHECK(outcome.total_tests == 11);

    PoolplanSimReport *report = NULL;
    CHECK(poolplan_sim_config_set_trials(cfg, 4) == POOLPLAN_STATUS_OK);
    CHECK(poolplan_sim_run(cfg, &report) == POOLPLAN_STATUS_OK);
    PoolplanSimSummary summary;
    CHECK(poolplan_sim_report_summary(report, &summary) == POOLPLAN_STATUS_OK);
    CHECK(summary.trials == 4 && summary.mean_total_tests == 11.0);
    poolplan_sim_report_free(report);
    poolplan_sim_config_free(cfg);

    printf("ok %s\n", poolplan_version());
    return 0;
}
