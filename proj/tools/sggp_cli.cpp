// Command-line front end; talks to the engine exclusively through the
// C API in sggp.h.
#include <cstdint>
#include <cstdio>
#include <string>

#include "CLI11.hpp"
#include "sggp.h"

namespace {

int die(sggp_status status) {
    std::fprintf(stderr, "error: %s\n", sggp_last_error());
    return static_cast<int>(status);
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Stochastic grammar-based GP for symbolic regression"};
    app.require_subcommand(1);

    // gen-grammar
    std::string units_file, grammar_out;
    auto* gen = app.add_subcommand("gen-grammar",
                                   "Generate a dimensionally consistent grammar from a unit-system file");
    gen->add_option("--units-file", units_file, "unit-system file (key = value)")->required();
    gen->add_option("--out", grammar_out, "output grammar file")->required();

    // run
    std::string algo, grammar_path, units_path, problem_path, params_path, out_dir;
    int runs = 1;
    std::uint64_t seed = 0;
    int threads = 1;
    auto* run = app.add_subcommand("run", "Run a seeded multi-run campaign");
    run->add_option("--algo", algo, "sggp-scalar | sggp-vectorial | cfg-gp")->required();
    run->add_option("--grammar", grammar_path, "grammar file");
    run->add_option("--units-file", units_path, "unit-system file (grammar is generated)");
    run->add_option("--problem", problem_path, "problem config file");
    run->add_option("--params", params_path, "algorithm parameter file");
    run->add_option("--runs", runs, "number of independent runs");
    run->add_option("--seed", seed, "base seed (run i uses seed+i)");
    run->add_option("--out", out_dir, "output directory")->required();
    run->add_option("--threads", threads, "worker threads for fitness evaluation");

    // report
    auto* report = app.add_subcommand("report", "Reports over a finished campaign");
    report->require_subcommand(1);
    std::string bloat_dir;
    double bloat_threshold = 2.0;
    auto* bloat = report->add_subcommand("bloat", "Early-vs-final mean-size ratio per run");
    bloat->add_option("--in", bloat_dir, "campaign directory")->required();
    bloat->add_option("--threshold", bloat_threshold, "ratio above which a run is flagged");
    std::string gener_dir;
    auto* gener =
        report->add_subcommand("generalization", "Train/test error of each best expression");
    gener->add_option("--in", gener_dir, "campaign directory")->required();

    CLI11_PARSE(app, argc, argv);

    if (gen->parsed()) {
        sggp_grammar* g = nullptr;
        int before_prune = 0;
        sggp_status s = sggp_grammar_generate(units_file.c_str(), &g, &before_prune);
        if (s != SGGP_OK) return die(s);
        s = sggp_grammar_write_file(g, grammar_out.c_str());
        if (s != SGGP_OK) {
            sggp_grammar_free(g);
            return die(s);
        }
        int nts = 0, derivs = 0;
        long long bytes = 0;
        sggp_grammar_stats(g, &nts, &derivs, &bytes);
        std::printf("wrote %s: %d non-terminals (%d before pruning), %d derivations, %lld bytes\n",
                    grammar_out.c_str(), nts, before_prune, derivs, bytes);
        sggp_grammar_free(g);
        return 0;
    }

    if (run->parsed()) {
        sggp_status s = sggp_run_campaign(
            algo.c_str(), grammar_path.empty() ? nullptr : grammar_path.c_str(),
            units_path.empty() ? nullptr : units_path.c_str(),
            problem_path.empty() ? nullptr : problem_path.c_str(),
            params_path.empty() ? nullptr : params_path.c_str(), runs, seed, out_dir.c_str(),
            threads);
        if (s != SGGP_OK) return die(s);
        std::printf("campaign finished: %d run(s) in %s\n", runs, out_dir.c_str());
        return 0;
    }

    if (bloat->parsed()) {
        char* text = nullptr;
        sggp_status s = sggp_report_bloat(bloat_dir.c_str(), bloat_threshold, &text);
        if (s != SGGP_OK) return die(s);
        std::fputs(text, stdout);
        sggp_string_free(text);
        return 0;
    }

    if (gener->parsed()) {
        char* text = nullptr;
        sggp_status s = sggp_report_generalization(gener_dir.c_str(), &text);
        if (s != SGGP_OK) return die(s);
        std::fputs(text, stdout);
        sggp_string_free(text);
        return 0;
    }
    return 0;
}
