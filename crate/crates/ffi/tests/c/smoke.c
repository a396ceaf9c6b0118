#include <stdio.h>
#include "sgmask.h"

int main(void) {
    SgmImage *train[2] = {NULL, NULL};
    SgmMask *mask = NULL;
    uint64_t calls = 0, num = 0, den = 0;
    double mean = 0.0;
    for (int i = 0; i < 2; i++) {
        if (sgm_phantom_new(8, 2, (uint64_t)i, &train[i]) != SGM_OK) return 10;
    }
    SgmDesignOptions opts = {SGM_VARIANT_SG, SGM_MODE_BATCH, 6, 4, 1, 3, SGM_DECODER_ZERO_FILL, SGM_METRIC_PSNR};
    if (sgm_design((const SgmImage *const *)train, 2, &opts, &mask, &calls) != SGM_OK) return 11;
    size_t len = 0;
    sgm_mask_len(mask, &len);
    if (sgm_evaluate(mask, (const SgmImage *const *)train, 2, SGM_DECODER_ZERO_FILL, SGM_METRIC_PSNR, &mean) != SGM_OK) return 12;
    if (sgm_speedup(152, 17, 3, 38, 1, &num, &den) != SGM_OK) return 13;
    if (sgm_mask_line(mask, 99, (uint32_t *)&num, (uint32_t *)&den) != SGM_ERR_INVALID) return 14;
    printf("lines=%zu calls=%llu mean=%.3f err=%s\n", len, (unsigned long long)calls, mean, sgm_last_error());
    sgm_speedup(152, 17, 3, 38, 1, &num, &den);
    printf("speedup=%llu/%llu\n", (unsigned long long)num, (unsigned long long)den);
    sgm_mask_free(mask);
    sgm_image_free(train[0]);
    sgm_image_free(train[1]);
    return 0;
}
