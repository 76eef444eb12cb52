#include <stdio.h>
#include <string.h>
#include "revertrisk.h"

static const char *PARENT =
    "{\"id\":\"Q219\",\"claims\":{\"P85\":[{\"mainsnak\":{\"snaktype\":\"value\",\"property\":\"P85\","
    "\"datavalue\":{\"type\":\"wikibase-entityid\",\"value\":{\"id\":\"Q207843\"}}}}]}}";
static const char *CURRENT =
    "{\"id\":\"Q219\",\"claims\":{\"P85\":[{\"mainsnak\":{\"snaktype\":\"value\",\"property\":\"P85\","
    "\"datavalue\":{\"type\":\"wikibase-entityid\",\"value\":{\"id\":\"Q30588468\"}}}}]}}";

int main(int argc, char **argv) {
    if (argc != 4) {
        fprintf(stderr, "usage: smoke CONTENT FINAL LABELS\n");
        return 64;
    }
    RrScorer *scorer = NULL;
    if (rr_scorer_open(argv[1], argv[2], argv[3], &scorer) != RR_STATUS_OK) {
        fprintf(stderr, "open: %s\n", rr_last_error_message());
        return 1;
    }
    const char *meta = "{\"timestamp\":\"2023-03-01T12:00:00Z\","
                       "\"editor\":{\"editor_id\":null,\"is_anonymous\":true,\"registration_time\":null}}";
    double p = -1.0;
    RrStatus s = rr_score(scorer, PARENT, CURRENT, meta, &p);
    if (s != RR_STATUS_OK || p < 0.0 || p > 1.0) {
        fprintf(stderr, "score: %d %s\n", (int)s, rr_last_error_message());
        return 2;
    }
    char *deltas = NULL;
    if (rr_diff(PARENT, CURRENT, &deltas) != RR_STATUS_OK || strstr(deltas, "Q30588468") == NULL) {
        return 3;
    }
    rr_string_free(deltas);
    if (rr_score(scorer, PARENT, "{\"id\":\"Q1\"}", meta, &p) != RR_STATUS_ENTITY_MISMATCH) {
        return 4;
    }
    rr_scorer_free(scorer);
    printf("%.6f\n", p);
    return 0;
}
