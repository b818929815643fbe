#include <stdio.h>
#include <string.h>

#include "laf.h"

int main(void) {
    LafEditPlan *plan = NULL;
    if (laf_locate("a red car", "a yellow bus", LAF_LOCATE_MODE_IMAGE_RESIDUAL, NULL, &plan) != LAF_STATUS_OK) {
        fprintf(stderr, "locate: %s\n", laf_last_error_message());
        return 1;
    }
    char *elem = NULL;
    if (laf_edit_plan_forgetting_element(plan, 0, &elem) != LAF_STATUS_OK || strcmp(elem, "red car") != 0) {
        return 2;
    }
    laf_string_free(elem);

    LafModel *model = NULL;
    const char *spec = "{\"dimension\":1,\"components\":["
                       "{\"label\":\"yellow\",\"mean\":[3.0],\"variance\":0.5,\"weight\":0.5},"
                       "{\"label\":\"red\",\"mean\":[-3.0],\"variance\":0.5,\"weight\":0.5}]}";
    if (laf_model_from_json(spec, &model) != LAF_STATUS_OK) {
        return 3;
    }
    double input[1] = {-3.0};
    LafTrajectory *traj = NULL;
    if (laf_sample(model, plan, laf_sample_params_default(), input, 1, &traj) != LAF_STATUS_OK) {
        fprintf(stderr, "sample: %s\n", laf_last_error_message());
        return 4;
    }
    double z[1];
    laf_trajectory_final(traj, z, 1);
    printf("%.10f\n", z[0]);

    LafEditPlan *bad = NULL;
    LafStatus st = laf_locate("a red car", "", LAF_LOCATE_MODE_IMAGE_RESIDUAL, NULL, &bad);
    printf("%d %s\n", (int)st, laf_last_error_message());

    laf_trajectory_free(traj);
    laf_model_free(model);
    laf_edit_plan_free(plan);
    return 0;
}
