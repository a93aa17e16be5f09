#pragma once

#include <string>
#include <vector>

#include "engine.hpp"
#include "eval.hpp"
#include "gp.hpp"
#include "units.hpp"

namespace sggp {

inline constexpr const char* kArtifactVersion = "0.1.0";
inline constexpr const char* kMetricsHeader =
    "generation,evals,best_fit_gen,best_fit_ever,mean_fit,mean_size,best_size,wall_ms";

enum class Algo { SggpScalar, SggpVectorial, CfgGp };

Algo algo_from_name(const std::string& name);
std::string algo_name(Algo a);

struct ProblemConfig {
    CaseGenConfig cases;         // training-set shape
    int test_materials = 4;
};

// `key = value` config parsing; unknown keys are collected and reported
// together (fail fast, list all).
ProblemConfig parse_problem_config(std::string_view text);
SgParams parse_sg_params(std::string_view text);
GpParams parse_gp_params(std::string_view text);

struct CampaignSpec {
    Algo algo = Algo::SggpVectorial;
    std::string grammar_path;  // exactly one of grammar_path / units_path
    std::string units_path;
    std::string problem_path;  // empty: defaults
    std::string params_path;   // empty: defaults
    int runs = 1;
    std::uint64_t base_seed = 0;
    std::string out_dir;
    int threads = 1;
};

struct CampaignRunSummary {
    std::uint64_t seed = 0;
    double best_fitness = 0.0;
    int best_size = 0;
    std::string best_expression;
    long long evaluations = 0;
};

struct CampaignResult {
    std::vector<CampaignRunSummary> runs;
    std::string out_dir;
};

// One metrics CSV per run, per-run best expression, manifest with the full
// resolved configuration, cross-run summary CSV, and exported case sets.
CampaignResult run_campaign(const CampaignSpec& spec);

std::string records_to_csv(const std::vector<RunRecord>& records);
std::vector<RunRecord> records_from_csv(std::string_view csv);

struct BloatRunStats {
    std::string source;
    double early_mean = 0.0;  // mean_size averaged over generations 5..15
    double final_mean = 0.0;  // last 10 generations
    double ratio = 0.0;
    bool flagged_bloat = false;
    bool flagged_constant = false;
};

struct BloatReport {
    double threshold = 2.0;
    std::vector<BloatRunStats> runs;
};

BloatReport bloat_report(const std::vector<std::string>& csv_paths, double threshold = 2.0);
std::string bloat_report_to_text(const BloatReport& r);

struct GeneralizationRow {
    std::string source;
    std::string expression;
    double train_error = 0.0;
    double test_error = 0.0;
    double ratio = 0.0;  // test / train; inf rendered as a large value
};

struct GeneralizationReport {
    std::vector<GeneralizationRow> rows;
};

// Re-parses each best expression under the campaign grammar, scores it on
// regenerated train/test sets and writes Fig.-9-style per-material curve
// CSVs next to the report.
GeneralizationReport generalization_report(const std::string& campaign_dir);
std::string generalization_report_to_text(const GeneralizationReport& r);

// Filesystem helpers shared with the CLI/C API.
std::string read_file(const std::string& path);
void write_file(const std::string& path, std::string_view content);

} // namespace sggp
