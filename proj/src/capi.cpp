#include "sggp.h"

#include <algorithm>
#include <cstring>
#include <filesystem>
#include <string>
#include <vector>

#include "harness.hpp"

namespace {

thread_local std::string g_last_error;

sggp_status fail(sggp_status code, const std::string& msg) {
    g_last_error = msg;
    return code;
}

template <typename Fn>
sggp_status guarded(Fn&& fn) {
    try {
        fn();
        return SGGP_OK;
    } catch (const sggp::ParseError& e) {
        return fail(SGGP_ERR_PARSE, e.what());
    } catch (const sggp::InfeasibleGrammar& e) {
        return fail(SGGP_ERR_INFEASIBLE, e.what());
    } catch (const sggp::InvalidArgument& e) {
        return fail(SGGP_ERR_INVALID, e.what());
    } catch (const sggp::IoError& e) {
        return fail(SGGP_ERR_IO, e.what());
    } catch (const std::exception& e) {
        return fail(SGGP_ERR_RUNTIME, e.what());
    }
}

char* dup_string(const std::string& s) {
    char* out = new char[s.size() + 1];
    std::memcpy(out, s.c_str(), s.size() + 1);
    return out;
}

} // namespace

struct sggp_grammar {
    sggp::Grammar g;
};

extern "C" {

const char* sggp_version(void) { return sggp::kArtifactVersion; }

const char* sggp_last_error(void) { return g_last_error.c_str(); }

void sggp_string_free(char* s) { delete[] s; }

sggp_status sggp_grammar_parse_text(const char* text, sggp_grammar** out) {
    if (!text || !out) return fail(SGGP_ERR_INVALID, "null argument");
    return guarded([&] { *out = new sggp_grammar{sggp::parse_grammar(text)}; });
}

sggp_status sggp_grammar_parse_file(const char* path, sggp_grammar** out) {
    if (!path || !out) return fail(SGGP_ERR_INVALID, "null argument");
    return guarded([&] { *out = new sggp_grammar{sggp::parse_grammar(sggp::read_file(path))}; });
}

sggp_status sggp_grammar_generate(const char* units_file, sggp_grammar** out,
                                  int* nonterminals_before_prune) {
    if (!units_file || !out) return fail(SGGP_ERR_INVALID, "null argument");
    return guarded([&] {
        sggp::UnitSystem sys = sggp::parse_unit_system(sggp::read_file(units_file));
        sggp::GenStats stats;
        *out = new sggp_grammar{sggp::generate_grammar(sys, {}, &stats)};
        if (nonterminals_before_prune)
            *nonterminals_before_prune = stats.unit_nonterminals_before_prune;
    });
}

void sggp_grammar_free(sggp_grammar* g) { delete g; }

sggp_status sggp_grammar_render(const sggp_grammar* g, char** out_text) {
    if (!g || !out_text) return fail(SGGP_ERR_INVALID, "null argument");
    return guarded([&] { *out_text = dup_string(sggp::render_grammar(g->g)); });
}

sggp_status sggp_grammar_write_file(const sggp_grammar* g, const char* path) {
    if (!g || !path) return fail(SGGP_ERR_INVALID, "null argument");
    return guarded([&] { sggp::write_file(path, sggp::render_grammar(g->g)); });
}

sggp_status sggp_grammar_stats(const sggp_grammar* g, int* nonterminals, int* derivations,
                               long long* serialized_bytes) {
    if (!g) return fail(SGGP_ERR_INVALID, "null argument");
    return guarded([&] {
        sggp::GrammarStats s = sggp::grammar_stats(g->g);
        if (nonterminals) *nonterminals = s.nonterminal_count;
        if (derivations) *derivations = s.derivation_count;
        if (serialized_bytes) *serialized_bytes = s.serialized_bytes;
    });
}

sggp_status sggp_run_campaign(const char* algo, const char* grammar_path, const char* units_path,
                              const char* problem_path, const char* params_path, int runs,
                              uint64_t base_seed, const char* out_dir, int threads) {
    if (!algo || !out_dir) return fail(SGGP_ERR_INVALID, "null argument");
    return guarded([&] {
        sggp::CampaignSpec spec;
        spec.algo = sggp::algo_from_name(algo);
        if (grammar_path) spec.grammar_path = grammar_path;
        if (units_path) spec.units_path = units_path;
        if (problem_path) spec.problem_path = problem_path;
        if (params_path) spec.params_path = params_path;
        spec.runs = runs;
        spec.base_seed = base_seed;
        spec.out_dir = out_dir;
        spec.threads = threads;
        sggp::run_campaign(spec);
    });
}

sggp_status sggp_report_bloat(const char* campaign_dir, double threshold, char** out_report) {
    if (!campaign_dir || !out_report) return fail(SGGP_ERR_INVALID, "null argument");
    return guarded([&] {
        std::vector<std::string> csvs;
        for (const auto& entry : std::filesystem::directory_iterator(campaign_dir)) {
            std::string name = entry.path().filename().string();
            if (name.rfind("run_", 0) == 0 && name.size() > 4 &&
                name.substr(name.size() - 4) == ".csv" &&
                name.find("_extended") == std::string::npos)
                csvs.push_back(entry.path().string());
        }
        std::sort(csvs.begin(), csvs.end());
        sggp::BloatReport report = sggp::bloat_report(csvs, threshold);
        *out_report = dup_string(sggp::bloat_report_to_text(report));
    });
}

sggp_status sggp_report_generalization(const char* campaign_dir, char** out_report) {
    if (!campaign_dir || !out_report) return fail(SGGP_ERR_INVALID, "null argument");
    return guarded([&] {
        sggp::GeneralizationReport report = sggp::generalization_report(campaign_dir);
        *out_report = dup_string(sggp::generalization_report_to_text(report));
    });
}

sggp_status sggp_kelvin_voigt(double F, double K, double C, double t, double* out) {
    if (!out) return fail(SGGP_ERR_INVALID, "null argument");
    return guarded([&] { *out = sggp::kelvin_voigt(F, K, C, t); });
}

} // extern "C"
