#include <stdio.h>
#include <string.h>

#include "fairaudit.h"

int main(void) {
    FaScenario *scenario = NULL;
    FaReport *report = NULL;
    FaVerdict verdict = FA_VERDICT_PARITY;
    char *md = NULL;

    if (fa_scenario_builtin("lung_ca_sg", &scenario) != FA_STATUS_OK) {
        fprintf(stderr, "builtin: %s\n", fa_last_error_message());
        return 1;
    }
    const char *config = "{\"reference\": {\"kind\": \"custom\", \"group\": \"Chinese\"}}";
    if (fa_audit_expected(scenario, config, &report) != FA_STATUS_OK) {
        fprintf(stderr, "audit: %s\n", fa_last_error_message());
        return 1;
    }
    if (fa_report_verdict(report, &verdict) != FA_STATUS_OK) {
        return 1;
    }
    if (fa_report_emit(report, "markdown", &md) != FA_STATUS_OK || strstr(md, "Malay") == NULL) {
        return 1;
    }
    printf("version=%s verdict=%d\n", fa_version(), (int)verdict);

    FaReport *bad = NULL;
    FaStatus status = fa_audit_expected(scenario, "{\"tau\": 2}", &bad);
    printf("bad tau status=%d message=%s\n", (int)status, fa_last_error_message());

    fa_string_free(md);
    fa_report_free(report);
    fa_scenario_free(scenario);
    return 0;
}
