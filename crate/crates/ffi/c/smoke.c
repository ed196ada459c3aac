#include <stdio.h>
#include <string.h>

#include "subjeval.h"

static const char *COUNTS =
    "condition,plus2,plus1,zero,minus1,minus2\n"
    "NA,50,30,10,6,4\n"
    "BM,20,25,20,20,15\n"
    "SA,10,20,30,25,15\n";

int main(void) {
    SubjevalCounts *table = NULL;
    if (subjeval_counts_from_csv(COUNTS, &table) != SUBJEVAL_STATUS_OK) {
        fprintf(stderr, "parse: %s\n", subjeval_last_error());
        return 1;
    }
    SubjevalAnalysis *analysis = NULL;
    if (subjeval_analyze_counts(table, 0.05, SUBJEVAL_CORRECTION_BH_FDR, &analysis) != SUBJEVAL_STATUS_OK) {
        fprintf(stderr, "analyze: %s\n", subjeval_last_error());
        return 1;
    }
    for (size_t i = 0; i < subjeval_analysis_condition_count(analysis); i++) {
        SubjevalMas m;
        if (subjeval_analysis_mas(analysis, i, &m) != SUBJEVAL_STATUS_OK) {
            return 1;
        }
        printf("%zu %.4f [%.4f, %.4f]\n", i, m.mas, m.lower, m.upper);
    }
    printf("significant %zu\n", subjeval_analysis_significant_pairs(analysis));

    double x[] = {1, 1};
    SubjevalTestResult r;
    SubjevalStatus st = subjeval_welch_t(x, 2, x, 2, &r);
    printf("degenerate %d %s\n", (int)st, st == SUBJEVAL_STATUS_OK ? "" : subjeval_last_error());

    subjeval_analysis_free(analysis);
    subjeval_counts_free(table);
    return 0;
}
