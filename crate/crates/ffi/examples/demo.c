/* Minimal C client: generate a pool, run one IWAL pass, train LDA on the
 * weighted selection and report its error on the full pool. */
#include <stdio.h>

#include "reuselab.h"

static int check(ReuselabStatus status) {
    if (status != REUSELAB_STATUS_OK) {
        fprintf(stderr, "reuselab error %d: %s\n", (int)status, reuselab_last_error());
        return 1;
    }
    return 0;
}

int main(void) {
    ReuselabDataset *pool = NULL;
    ReuselabSelection *selection = NULL;
    ReuselabModel *model = NULL;
    double error = 0.0;

    if (check(reuselab_dataset_generate("circle", 1000, 0.001, 1, &pool))) return 1;
    if (check(reuselab_select_iwal(pool, 0.5, 2, 1, &selection))) return 1;
    if (check(reuselab_model_fit("lda", pool, selection, &model))) return 1;
    if (check(reuselab_model_error(model, pool, &error))) return 1;
    printf("selected %zu of %zu, error %.4f\n", reuselab_selection_len(selection), reuselab_dataset_len(pool), error);

    reuselab_model_free(model);
    reuselab_selection_free(selection);
    reuselab_dataset_free(pool);
    return 0;
}
