/* C API for the SG-GP symbolic-regression engine.
 *
 * All functions return sggp_status; on failure sggp_last_error() holds a
 * human-readable message for the calling thread. Objects are opaque
 * handles freed with their matching *_free function. Strings returned
 * through char** are heap-allocated and released with sggp_string_free.
 */
#ifndef SGGP_H
#define SGGP_H

#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

typedef enum sggp_status {
    SGGP_OK = 0,
    SGGP_ERR_IO = 1,         /* file not readable/writable */
    SGGP_ERR_PARSE = 2,      /* malformed grammar/config/CSV input */
    SGGP_ERR_INVALID = 3,    /* invalid argument or configuration */
    SGGP_ERR_INFEASIBLE = 4, /* grammar cannot derive anything at D_max */
    SGGP_ERR_RUNTIME = 5     /* anything else */
} sggp_status;

typedef struct sggp_grammar sggp_grammar;

const char* sggp_version(void);
const char* sggp_last_error(void);
void sggp_string_free(char* s);

/* ---- grammars ---- */

sggp_status sggp_grammar_parse_text(const char* text, sggp_grammar** out);
sggp_status sggp_grammar_parse_file(const char* path, sggp_grammar** out);

/* Dimensional-grammar generation from a unit-system file. Any out
 * pointer may be NULL. *nonterminals_before_prune reports the number of
 * unit non-terminals enumerated before infeasible symbols are pruned. */
sggp_status sggp_grammar_generate(const char* units_file, sggp_grammar** out,
                                  int* nonterminals_before_prune);

void sggp_grammar_free(sggp_grammar* g);

sggp_status sggp_grammar_render(const sggp_grammar* g, char** out_text);
sggp_status sggp_grammar_write_file(const sggp_grammar* g, const char* path);
sggp_status sggp_grammar_stats(const sggp_grammar* g, int* nonterminals, int* derivations,
                               long long* serialized_bytes);

/* ---- campaigns and reports ---- */

/* algo: "sggp-scalar", "sggp-vectorial" or "cfg-gp".
 * Exactly one of grammar_path / units_path must be non-NULL.
 * problem_path and params_path may be NULL (built-in defaults). */
sggp_status sggp_run_campaign(const char* algo, const char* grammar_path, const char* units_path,
                              const char* problem_path, const char* params_path, int runs,
                              uint64_t base_seed, const char* out_dir, int threads);

/* Bloat statistics over the metrics CSVs of a campaign directory;
 * *out_report receives a CSV-formatted table. */
sggp_status sggp_report_bloat(const char* campaign_dir, double threshold, char** out_report);

/* Train/test error of each per-run best expression; writes the per-material
 * curve CSVs into the campaign directory as a side effect. */
sggp_status sggp_report_generalization(const char* campaign_dir, char** out_report);

/* ---- benchmark closed forms ---- */

/* Kelvin-Voigt response u(t) = F/K (1 - e^(-Kt/C)); K and C must be > 0. */
sggp_status sggp_kelvin_voigt(double F, double K, double C, double t, double* out);

#ifdef __cplusplus
} /* extern "C" */
#endif

#endif /* SGGP_H */
