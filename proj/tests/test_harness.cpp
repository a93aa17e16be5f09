#include "doctest.h"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <set>
#include <sstream>

#include "harness.hpp"
#include "test_helpers.hpp"

using namespace sggp;
namespace fs = std::filesystem;

namespace {

const char* kTinyGrammar = R"(
<s> ::= <e> ;
<e> ::= add <e> <e> | div <e> <e> | F | K | t ;
)";

// Scratch directory under the test working dir, wiped per use.
fs::path scratch(const std::string& name) {
    fs::path p = fs::path("harness_scratch") / name;
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

CampaignSpec tiny_campaign_spec(const fs::path& dir, Algo algo) {
    write_file((dir / "grammar.in.bnf").string(), kTinyGrammar);
    write_file((dir / "problem.cfg").string(),
               "train_materials = 3\ntest_materials = 2\ntime_points = 5\n");
    if (algo == Algo::CfgGp)
        write_file((dir / "params.cfg").string(),
                   "population = 20\ngenerations = 5\nd_max = 6\ntournament = 3\n");
    else
        write_file((dir / "params.cfg").string(),
                   "population = 20\ngenerations = 5\nd_max = 6\nepsilon = 0.01\n");
    CampaignSpec spec;
    spec.algo = algo;
    spec.grammar_path = (dir / "grammar.in.bnf").string();
    spec.problem_path = (dir / "problem.cfg").string();
    spec.params_path = (dir / "params.cfg").string();
    spec.runs = 2;
    spec.base_seed = 11;
    spec.out_dir = (dir / "out").string();
    return spec;
}

// Metrics CSV with the wall-clock column blanked out.
std::string mask_wall_ms(const std::string& csv) {
    std::istringstream in(csv);
    std::string line, out;
    bool header = true;
    while (std::getline(in, line)) {
        if (!header) {
            auto comma = line.find_last_of(',');
            if (comma != std::string::npos) line = line.substr(0, comma + 1) + "-";
        }
        header = false;
        out += line + "\n";
    }
    return out;
}

std::vector<RunRecord> synthetic_records(const std::vector<double>& mean_sizes) {
    std::vector<RunRecord> out;
    for (std::size_t i = 0; i < mean_sizes.size(); ++i) {
        RunRecord r;
        r.generation = static_cast<int>(i);
        r.evaluations = static_cast<long long>((i + 1) * 100);
        r.best_fit_gen = r.best_fit_ever = r.mean_fit = 1.0;
        r.mean_size = mean_sizes[i];
        r.best_size = 5;
        out.push_back(r);
    }
    return out;
}

} // namespace

TEST_CASE("algorithm names") {
    CHECK(algo_from_name("sggp-scalar") == Algo::SggpScalar);
    CHECK(algo_from_name("sggp-vectorial") == Algo::SggpVectorial);
    CHECK(algo_from_name("cfg-gp") == Algo::CfgGp);
    for (Algo a : {Algo::SggpScalar, Algo::SggpVectorial, Algo::CfgGp})
        CHECK(algo_from_name(algo_name(a)) == a);
    CHECK_THROWS_AS(algo_from_name("simulated-annealing"), InvalidArgument);
}

TEST_CASE("problem config parsing") {
    ProblemConfig def = parse_problem_config("");
    CHECK(def.cases.n_materials == 10);
    CHECK(def.test_materials == 4);

    ProblemConfig cfg = parse_problem_config(
        "train_materials = 6 # comment\ntest_materials = 3\nfitness = mse\nparam_max = 9.5\n");
    CHECK(cfg.cases.n_materials == 6);
    CHECK(cfg.test_materials == 3);
    CHECK(cfg.cases.metric == FitnessMetric::MeanSquaredError);
    CHECK(cfg.cases.param_max == 9.5);

    CHECK_THROWS_AS(parse_problem_config("fitness = rmse"), InvalidArgument);
    CHECK_THROWS_AS(parse_problem_config("no equals sign here"), ParseError);

    // unknown keys fail fast and are all listed
    try {
        parse_problem_config("bogus_a = 1\ntime_points = 5\nbogus_b = 2\n");
        FAIL("expected InvalidArgument");
    } catch (const InvalidArgument& e) {
        std::string msg = e.what();
        CHECK(msg.find("bogus_a") != std::string::npos);
        CHECK(msg.find("bogus_b") != std::string::npos);
    }
}

TEST_CASE("algorithm parameter parsing") {
    SgParams sg = parse_sg_params("population = 500\ngenerations = 4000\nepsilon = 0.001\n"
                                  "p_m = 0.001\nepsilon_m = 0.01\nn_best = 2\nn_worst = 2\n");
    CHECK(sg.population == 500);
    CHECK(sg.generations == 4000);
    CHECK(sg.epsilon == 0.001);
    CHECK(sg.n_best == 2);
    CHECK_THROWS_AS(parse_sg_params("n_best = 600\nn_worst = 600\npopulation = 100\n"),
                    InvalidArgument);

    GpParams gp = parse_gp_params("population = 2000\ngenerations = 1000\np_crossover = 0.9\n"
                                  "p_mutation = 0.5\ntournament = 3\n");
    CHECK(gp.population == 2000);
    CHECK(gp.p_crossover == 0.9);
    CHECK(gp.tournament_size == 3);
    CHECK_THROWS_AS(parse_gp_params("p_crossover = 1.5"), InvalidArgument);
    CHECK_THROWS_AS(parse_gp_params("swagger = 11"), InvalidArgument);
}

TEST_CASE("metrics CSV round trip") {
    auto records = synthetic_records({40.0, 38.5, 55.25});
    records[1].best_fit_gen = 0.125;
    records[1].wall_ms = 321;
    std::string csv = records_to_csv(records);
    CHECK(csv.rfind(kMetricsHeader, 0) == 0);
    auto back = records_from_csv(csv);
    REQUIRE(back.size() == records.size());
    for (std::size_t i = 0; i < back.size(); ++i) {
        CHECK(back[i].generation == records[i].generation);
        CHECK(back[i].evaluations == records[i].evaluations);
        CHECK(back[i].best_fit_gen == records[i].best_fit_gen);
        CHECK(back[i].mean_size == records[i].mean_size);
        CHECK(back[i].wall_ms == records[i].wall_ms);
    }
    CHECK_THROWS_AS(records_from_csv("wrong,header\n1,2\n"), ParseError);
    CHECK_THROWS_AS(records_from_csv(std::string(kMetricsHeader) + "\nnot,numbers\n"),
                    ParseError);
}

TEST_CASE("file helpers") {
    CHECK_THROWS_AS(read_file("definitely/not/a/file.txt"), IoError);
    fs::path dir = scratch("files");
    write_file((dir / "x.txt").string(), "payload");
    CHECK(read_file((dir / "x.txt").string()) == "payload");
}

TEST_CASE("campaign input validation") {
    CampaignSpec spec;
    spec.out_dir = "x";
    CHECK_THROWS_AS(run_campaign(spec), InvalidArgument);  // no grammar source
    spec.grammar_path = "a";
    spec.units_path = "b";
    CHECK_THROWS_AS(run_campaign(spec), InvalidArgument);  // both sources
    spec.units_path.clear();
    spec.runs = 0;
    CHECK_THROWS_AS(run_campaign(spec), InvalidArgument);
}

TEST_CASE("campaign artifacts and determinism") {
    fs::path dir = scratch("campaign");
    CampaignSpec spec = tiny_campaign_spec(dir, Algo::SggpVectorial);
    CampaignResult res = run_campaign(spec);
    REQUIRE(res.runs.size() == 2);
    CHECK(res.runs[0].seed == 11);
    CHECK(res.runs[1].seed == 12);
    CHECK(res.runs[0].evaluations == 100);  // 20 x 5

    for (const char* name :
         {"grammar.bnf", "train_cases.csv", "test_cases.csv", "run_000.csv", "run_001.csv",
          "run_000_extended.csv", "best_000.txt", "best_001.txt", "weights_000.txt",
          "summary.csv", "manifest.json"})
        CHECK(fs::exists(fs::path(spec.out_dir) / name));

    // the best expression on disk matches the summary and re-parses
    Grammar g = parse_grammar(read_file((fs::path(spec.out_dir) / "grammar.bnf").string()));
    std::string best0 = read_file((fs::path(spec.out_dir) / "best_000.txt").string());
    CHECK(best0 == res.runs[0].best_expression + "\n");
    DerivationTree t = parse_expression(g, res.runs[0].best_expression);
    CHECK(tree_conforms(t, g));

    // identical spec, different out dir, more threads: byte-identical
    // artifacts except the wall-clock column
    CampaignSpec spec2 = spec;
    spec2.out_dir = (dir / "out2").string();
    spec2.threads = 4;
    run_campaign(spec2);
    for (const char* name : {"grammar.bnf", "train_cases.csv", "test_cases.csv", "best_000.txt",
                             "best_001.txt", "weights_000.txt", "weights_001.txt", "summary.csv",
                             "run_000_extended.csv"})
        CHECK(read_file((fs::path(spec.out_dir) / name).string()) ==
              read_file((fs::path(spec2.out_dir) / name).string()));
    for (const char* name : {"run_000.csv", "run_001.csv"})
        CHECK(mask_wall_ms(read_file((fs::path(spec.out_dir) / name).string())) ==
              mask_wall_ms(read_file((fs::path(spec2.out_dir) / name).string())));
}

TEST_CASE("campaign works for the GP baseline, without weight snapshots") {
    fs::path dir = scratch("campaign_gp");
    CampaignSpec spec = tiny_campaign_spec(dir, Algo::CfgGp);
    CampaignResult res = run_campaign(spec);
    REQUIRE(res.runs.size() == 2);
    CHECK(fs::exists(fs::path(spec.out_dir) / "run_001.csv"));
    CHECK_FALSE(fs::exists(fs::path(spec.out_dir) / "weights_000.txt"));
    CHECK(read_file((fs::path(spec.out_dir) / "manifest.json").string()).find("cfg-gp") !=
          std::string::npos);
}

TEST_CASE("summary recomputation from the per-run CSVs") {
    fs::path dir = scratch("summary");
    CampaignSpec spec = tiny_campaign_spec(dir, Algo::SggpScalar);
    run_campaign(spec);
    auto r0 = records_from_csv(read_file((fs::path(spec.out_dir) / "run_000.csv").string()));
    auto r1 = records_from_csv(read_file((fs::path(spec.out_dir) / "run_001.csv").string()));
    REQUIRE(r0.size() == 5);
    REQUIRE(r1.size() == 5);

    std::istringstream summary(read_file((fs::path(spec.out_dir) / "summary.csv").string()));
    std::string line;
    std::getline(summary, line);  // header
    for (std::size_t gen = 0; gen < 5; ++gen) {
        REQUIRE(std::getline(summary, line));
        int g_col, runs_col;
        double bfe_mean, bfe_std, mf_mean, mf_std, ms_mean, ms_std;
        REQUIRE(std::sscanf(line.c_str(), "%d,%d,%lf,%lf,%lf,%lf,%lf,%lf", &g_col, &runs_col,
                            &bfe_mean, &bfe_std, &mf_mean, &mf_std, &ms_mean, &ms_std) == 8);
        CHECK(g_col == static_cast<int>(gen));
        CHECK(runs_col == 2);
        double want_mean = (r0[gen].best_fit_ever + r1[gen].best_fit_ever) / 2.0;
        CHECK(std::fabs(bfe_mean - want_mean) <= 1e-12 * std::max(1.0, std::fabs(want_mean)));
        double want_ms = (r0[gen].mean_size + r1[gen].mean_size) / 2.0;
        CHECK(std::fabs(ms_mean - want_ms) <= 1e-12 * std::max(1.0, want_ms));
        double want_std = std::sqrt(((r0[gen].mean_size - want_ms) * (r0[gen].mean_size - want_ms) +
                                     (r1[gen].mean_size - want_ms) * (r1[gen].mean_size - want_ms)) /
                                    2.0);
        CHECK(std::fabs(ms_std - want_std) <= 1e-12 * std::max(1.0, want_std));
    }
}

TEST_CASE("bloat report on synthetic growth curves") {
    fs::path dir = scratch("bloat");
    // constant size 50 over 30 generations
    std::vector<double> flat(30, 50.0);
    // early window (gens 5..15) around 40, final 10 around 400
    std::vector<double> growing;
    for (int i = 0; i < 30; ++i)
        growing.push_back(i < 20 ? 40.0 : 400.0);
    write_file((dir / "flat.csv").string(), records_to_csv(synthetic_records(flat)));
    write_file((dir / "grow.csv").string(), records_to_csv(synthetic_records(growing)));

    BloatReport report =
        bloat_report({(dir / "flat.csv").string(), (dir / "grow.csv").string()}, 2.0);
    REQUIRE(report.runs.size() == 2);
    CHECK(report.runs[0].ratio == doctest::Approx(1.0));
    CHECK(report.runs[0].flagged_constant);
    CHECK_FALSE(report.runs[0].flagged_bloat);
    CHECK(report.runs[1].early_mean == doctest::Approx(40.0));
    CHECK(report.runs[1].final_mean == doctest::Approx(400.0));
    CHECK(report.runs[1].ratio == doctest::Approx(10.0));
    CHECK(report.runs[1].flagged_bloat);
    CHECK_FALSE(report.runs[1].flagged_constant);

    std::string text = bloat_report_to_text(report);
    CHECK(text.find("bloat") != std::string::npos);
    CHECK(text.find("constant") != std::string::npos);

    CHECK_THROWS_AS(bloat_report({}, 2.0), InvalidArgument);
}

TEST_CASE("generalization report re-scores saved expressions") {
    fs::path dir = scratch("generalization");
    CampaignSpec spec = tiny_campaign_spec(dir, Algo::SggpScalar);
    spec.runs = 1;
    run_campaign(spec);

    // pin a known expression so the scores have an independent oracle
    write_file((fs::path(spec.out_dir) / "best_000.txt").string(), "(div F K)\n");
    GeneralizationReport report = generalization_report(spec.out_dir);
    REQUIRE(report.rows.size() == 1);
    CHECK(report.rows[0].expression == "(div F K)");

    Grammar g = parse_grammar(read_file((fs::path(spec.out_dir) / "grammar.bnf").string()));
    CaseSet train = caseset_from_csv(
        read_file((fs::path(spec.out_dir) / "train_cases.csv").string()));
    CaseSet test = caseset_from_csv(
        read_file((fs::path(spec.out_dir) / "test_cases.csv").string()));
    DerivationTree t = parse_expression(g, "(div F K)");
    CHECK(report.rows[0].train_error == fitness(t, g, train));
    CHECK(report.rows[0].test_error == fitness(t, g, test));
    CHECK(report.rows[0].ratio ==
          doctest::Approx(report.rows[0].test_error / report.rows[0].train_error));

    // Fig.-9-style curve files: one per test material, one row per time point
    CHECK(fs::exists(fs::path(spec.out_dir) / "generalization.csv"));
    for (int m = 0; m < 2; ++m) {
        fs::path curve = fs::path(spec.out_dir) / ("curve_run000_mat" + std::to_string(m) + ".csv");
        REQUIRE(fs::exists(curve));
        std::istringstream in(read_file(curve.string()));
        std::string line;
        int rows = 0;
        std::getline(in, line);
        CHECK(line == "t,target,predicted");
        while (std::getline(in, line))
            if (!line.empty()) ++rows;
        CHECK(rows == 5);  // time_points = 5
    }
}
