#include "harness.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <sstream>

#include "json.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace sggp {

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open '" + path + "' for reading");
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

void write_file(const std::string& path, std::string_view content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open '" + path + "' for writing");
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!out) throw IoError("failed writing '" + path + "'");
}

Algo algo_from_name(const std::string& name) {
    if (name == "sggp-scalar") return Algo::SggpScalar;
    if (name == "sggp-vectorial") return Algo::SggpVectorial;
    if (name == "cfg-gp") return Algo::CfgGp;
    throw InvalidArgument("unknown algorithm '" + name +
                          "' (expected sggp-scalar, sggp-vectorial or cfg-gp)");
}

std::string algo_name(Algo a) {
    switch (a) {
        case Algo::SggpScalar: return "sggp-scalar";
        case Algo::SggpVectorial: return "sggp-vectorial";
        case Algo::CfgGp: return "cfg-gp";
    }
    return "?";
}

namespace {

std::string trim(const std::string& s) {
    std::size_t b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    std::size_t e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

// Ordered key=value pairs; '#' comments.
std::vector<std::pair<std::string, std::string>> parse_kv(std::string_view text) {
    std::vector<std::pair<std::string, std::string>> out;
    std::istringstream in{std::string(text)};
    std::string raw;
    int line_no = 0;
    while (std::getline(in, raw)) {
        ++line_no;
        std::string line = raw;
        if (auto hash = line.find('#'); hash != std::string::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        auto eq = line.find('=');
        if (eq == std::string::npos) throw ParseError("expected 'key = value'", line_no, 1);
        out.emplace_back(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
    }
    return out;
}

// Consumes pairs against a dispatch table; unknown keys fail together.
void apply_kv(const std::vector<std::pair<std::string, std::string>>& pairs,
              const std::map<std::string, std::function<void(const std::string&)>>& setters) {
    std::vector<std::string> unknown;
    for (const auto& [key, value] : pairs) {
        auto it = setters.find(key);
        if (it == setters.end()) {
            unknown.push_back(key);
            continue;
        }
        it->second(value);
    }
    if (!unknown.empty()) {
        std::string msg = "unknown config keys:";
        for (const auto& k : unknown) msg += " '" + k + "'";
        throw InvalidArgument(msg);
    }
}

double to_double(const std::string& s) { return std::stod(s); }
int to_int(const std::string& s) { return std::stoi(s); }
long long to_ll(const std::string& s) { return std::stoll(s); }

} // namespace

ProblemConfig parse_problem_config(std::string_view text) {
    ProblemConfig cfg;
    apply_kv(parse_kv(text),
             {{"train_materials", [&](const std::string& v) { cfg.cases.n_materials = to_int(v); }},
              {"test_materials", [&](const std::string& v) { cfg.test_materials = to_int(v); }},
              {"time_points", [&](const std::string& v) { cfg.cases.time_points = to_int(v); }},
              {"param_min", [&](const std::string& v) { cfg.cases.param_min = to_double(v); }},
              {"param_max", [&](const std::string& v) { cfg.cases.param_max = to_double(v); }},
              {"t_max_factor", [&](const std::string& v) { cfg.cases.t_max_factor = to_double(v); }},
              {"fitness", [&](const std::string& v) {
                   if (v == "mae")
                       cfg.cases.metric = FitnessMetric::MeanAbsoluteError;
                   else if (v == "mse")
                       cfg.cases.metric = FitnessMetric::MeanSquaredError;
                   else
                       throw InvalidArgument("fitness must be 'mae' or 'mse'");
               }}});
    return cfg;
}

SgParams parse_sg_params(std::string_view text) {
    SgParams p;
    apply_kv(parse_kv(text),
             {{"population", [&](const std::string& v) { p.population = to_int(v); }},
              {"generations", [&](const std::string& v) { p.generations = to_int(v); }},
              {"n_best", [&](const std::string& v) { p.n_best = to_int(v); }},
              {"n_worst", [&](const std::string& v) { p.n_worst = to_int(v); }},
              {"epsilon", [&](const std::string& v) { p.epsilon = to_double(v); }},
              {"p_m", [&](const std::string& v) { p.p_m = to_double(v); }},
              {"epsilon_m", [&](const std::string& v) { p.epsilon_m = to_double(v); }},
              {"d_max", [&](const std::string& v) { p.d_max = to_int(v); }},
              {"eval_budget", [&](const std::string& v) { p.eval_budget = to_ll(v); }}});
    p.validate();
    return p;
}

GpParams parse_gp_params(std::string_view text) {
    GpParams p;
    apply_kv(parse_kv(text),
             {{"population", [&](const std::string& v) { p.population = to_int(v); }},
              {"generations", [&](const std::string& v) { p.generations = to_int(v); }},
              {"p_crossover", [&](const std::string& v) { p.p_crossover = to_double(v); }},
              {"p_mutation", [&](const std::string& v) { p.p_mutation = to_double(v); }},
              {"tournament", [&](const std::string& v) { p.tournament_size = to_int(v); }},
              {"d_max", [&](const std::string& v) { p.d_max = to_int(v); }},
              {"eval_budget", [&](const std::string& v) { p.eval_budget = to_ll(v); }},
              {"elitism", [&](const std::string& v) { p.elitism = to_int(v); }},
              {"init_depth", [&](const std::string& v) { p.init_depth = to_int(v); }}});
    p.validate();
    return p;
}

namespace {

std::string fmt_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::string run_tag(int index) {
    char buf[16];
    std::snprintf(buf, sizeof buf, "%03d", index);
    return buf;
}

// Fast fitness oracle over a fixed case matrix; pure and thread-safe
// (each call compiles its own expression program).
FitnessFn make_oracle(const Grammar& g, const CaseSet& cs, FitnessMetric metric) {
    auto names = std::make_shared<std::vector<std::string>>();
    for (const auto& [k, v] : cs.cases.front().variables) names->push_back(k);
    auto values = std::make_shared<std::vector<std::vector<double>>>();
    auto targets = std::make_shared<std::vector<double>>();
    for (const auto& c : cs.cases) {
        std::vector<double> row;
        for (const auto& n : *names) row.push_back(c.variables.at(n));
        values->push_back(std::move(row));
        targets->push_back(c.target);
    }
    return [&g, names, values, targets, metric](const DerivationTree& t) {
        try {
            CompiledExpr expr(t, g, *names);
            return fitness(expr, *values, *targets, metric);
        } catch (const InvalidArgument&) {
            return kWorstFitness;
        }
    };
}

} // namespace

std::string records_to_csv(const std::vector<RunRecord>& records) {
    std::string out = std::string(kMetricsHeader) + "\n";
    for (const auto& r : records) {
        out += std::to_string(r.generation) + ',' + std::to_string(r.evaluations) + ',' +
               fmt_double(r.best_fit_gen) + ',' + fmt_double(r.best_fit_ever) + ',' +
               fmt_double(r.mean_fit) + ',' + fmt_double(r.mean_size) + ',' +
               std::to_string(r.best_size) + ',' + std::to_string(r.wall_ms) + '\n';
    }
    return out;
}

std::vector<RunRecord> records_from_csv(std::string_view csv) {
    std::istringstream in{std::string(csv)};
    std::string line;
    if (!std::getline(in, line) || trim(line) != kMetricsHeader)
        throw ParseError("metrics CSV header mismatch");
    std::vector<RunRecord> out;
    int line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        RunRecord r;
        if (std::sscanf(line.c_str(), "%d,%lld,%lf,%lf,%lf,%lf,%d,%lld", &r.generation,
                        &r.evaluations, &r.best_fit_gen, &r.best_fit_ever, &r.mean_fit,
                        &r.mean_size, &r.best_size, &r.wall_ms) != 8)
            throw ParseError("malformed metrics row", line_no, 1);
        out.push_back(r);
    }
    return out;
}

namespace {

std::string records_to_extended_csv(const std::vector<RunRecord>& records) {
    std::string out = "generation,evals,mean_size,mean_parse_size,best_size,best_parse_size\n";
    for (const auto& r : records) {
        out += std::to_string(r.generation) + ',' + std::to_string(r.evaluations) + ',' +
               fmt_double(r.mean_size) + ',' + fmt_double(r.mean_parse_size) + ',' +
               std::to_string(r.best_size) + ',' + std::to_string(r.best_parse_size) + '\n';
    }
    return out;
}

std::string summary_csv(const std::vector<std::vector<RunRecord>>& all_records) {
    std::size_t max_gens = 0;
    for (const auto& recs : all_records) max_gens = std::max(max_gens, recs.size());
    std::string out =
        "generation,runs,best_fit_ever_mean,best_fit_ever_std,mean_fit_mean,mean_fit_std,"
        "mean_size_mean,mean_size_std,best_size_mean,best_size_std\n";
    for (std::size_t gen = 0; gen < max_gens; ++gen) {
        std::vector<double> bfe, mf, ms, bs;
        for (const auto& recs : all_records) {
            if (gen >= recs.size()) continue;
            bfe.push_back(recs[gen].best_fit_ever);
            mf.push_back(recs[gen].mean_fit);
            ms.push_back(recs[gen].mean_size);
            bs.push_back(static_cast<double>(recs[gen].best_size));
        }
        auto stats = [](const std::vector<double>& v) {
            double mean = 0.0;
            for (double x : v) mean += x;
            mean /= static_cast<double>(v.size());
            double var = 0.0;
            for (double x : v) var += (x - mean) * (x - mean);
            var /= static_cast<double>(v.size());
            return std::make_pair(mean, std::sqrt(var));
        };
        auto [bfe_m, bfe_s] = stats(bfe);
        auto [mf_m, mf_s] = stats(mf);
        auto [ms_m, ms_s] = stats(ms);
        auto [bs_m, bs_s] = stats(bs);
        out += std::to_string(gen) + ',' + std::to_string(bfe.size()) + ',' + fmt_double(bfe_m) +
               ',' + fmt_double(bfe_s) + ',' + fmt_double(mf_m) + ',' + fmt_double(mf_s) + ',' +
               fmt_double(ms_m) + ',' + fmt_double(ms_s) + ',' + fmt_double(bs_m) + ',' +
               fmt_double(bs_s) + '\n';
    }
    return out;
}

json problem_to_json(const ProblemConfig& cfg) {
    return json{{"train_materials", cfg.cases.n_materials},
                {"test_materials", cfg.test_materials},
                {"time_points", cfg.cases.time_points},
                {"param_min", cfg.cases.param_min},
                {"param_max", cfg.cases.param_max},
                {"t_max_factor", cfg.cases.t_max_factor},
                {"fitness",
                 cfg.cases.metric == FitnessMetric::MeanAbsoluteError ? "mae" : "mse"}};
}

ProblemConfig problem_from_json(const json& j) {
    ProblemConfig cfg;
    cfg.cases.n_materials = j.at("train_materials").get<int>();
    cfg.test_materials = j.at("test_materials").get<int>();
    cfg.cases.time_points = j.at("time_points").get<int>();
    cfg.cases.param_min = j.at("param_min").get<double>();
    cfg.cases.param_max = j.at("param_max").get<double>();
    cfg.cases.t_max_factor = j.at("t_max_factor").get<double>();
    cfg.cases.metric = j.at("fitness").get<std::string>() == "mse"
                           ? FitnessMetric::MeanSquaredError
                           : FitnessMetric::MeanAbsoluteError;
    return cfg;
}

} // namespace

CampaignResult run_campaign(const CampaignSpec& spec) {
    if (spec.runs < 1) throw InvalidArgument("run count must be at least 1");
    if (spec.grammar_path.empty() == spec.units_path.empty())
        throw InvalidArgument("exactly one of grammar file / unit-system file must be given");
    if (spec.out_dir.empty()) throw InvalidArgument("output directory required");

    fs::create_directories(spec.out_dir);
    auto out_path = [&](const std::string& name) {
        return (fs::path(spec.out_dir) / name).string();
    };

    Grammar grammar = spec.units_path.empty()
                          ? parse_grammar(read_file(spec.grammar_path))
                          : generate_grammar(parse_unit_system(read_file(spec.units_path)));
    write_file(out_path("grammar.bnf"), render_grammar(grammar));

    ProblemConfig problem = spec.problem_path.empty()
                                ? ProblemConfig{}
                                : parse_problem_config(read_file(spec.problem_path));
    CaseSet train = generate_cases(problem.cases, spec.base_seed, CaseRole::Train);
    CaseGenConfig test_cfg = problem.cases;
    test_cfg.n_materials = problem.test_materials;
    CaseSet test = generate_cases(test_cfg, spec.base_seed, CaseRole::Test);
    write_file(out_path("train_cases.csv"), caseset_to_csv(train));
    write_file(out_path("test_cases.csv"), caseset_to_csv(test));

    FitnessFn oracle = make_oracle(grammar, train, problem.cases.metric);

    SgParams sg_params;
    GpParams gp_params;
    bool is_gp = spec.algo == Algo::CfgGp;
    if (is_gp) {
        if (!spec.params_path.empty()) gp_params = parse_gp_params(read_file(spec.params_path));
    } else {
        if (!spec.params_path.empty()) sg_params = parse_sg_params(read_file(spec.params_path));
    }

    CampaignResult result;
    result.out_dir = spec.out_dir;
    std::vector<std::vector<RunRecord>> all_records;
    std::vector<std::uint64_t> seeds;

    for (int r = 0; r < spec.runs; ++r) {
        std::uint64_t seed = spec.base_seed + static_cast<std::uint64_t>(r);
        seeds.push_back(seed);
        Individual best;
        std::vector<RunRecord> records;
        if (is_gp) {
            GpResult gr = run_gp(grammar, oracle, gp_params, seed, spec.threads);
            best = std::move(gr.best_ever);
            records = std::move(gr.records);
        } else {
            WeightMode mode =
                spec.algo == Algo::SggpScalar ? WeightMode::Scalar : WeightMode::Vectorial;
            SgResult sr = run_sggp(grammar, oracle, sg_params, mode, seed, spec.threads);
            best = std::move(sr.best_ever);
            records = std::move(sr.records);
            write_file(out_path("weights_" + run_tag(r) + ".txt"),
                       weights_to_text(sr.final_weights));
        }
        std::string tag = run_tag(r);
        write_file(out_path("run_" + tag + ".csv"), records_to_csv(records));
        write_file(out_path("run_" + tag + "_extended.csv"), records_to_extended_csv(records));
        std::string expr = serialize_tree(best.tree, grammar);
        write_file(out_path("best_" + tag + ".txt"), expr + "\n");

        CampaignRunSummary summary;
        summary.seed = seed;
        summary.best_fitness = best.fitness;
        summary.best_size = best.node_count;
        summary.best_expression = expr;
        summary.evaluations = records.empty() ? 0 : records.back().evaluations;
        result.runs.push_back(std::move(summary));
        all_records.push_back(std::move(records));
    }

    write_file(out_path("summary.csv"), summary_csv(all_records));

    GrammarStats gs = grammar_stats(grammar);
    json manifest{
        {"artifact_version", kArtifactVersion},
        {"algorithm", algo_name(spec.algo)},
        {"base_seed", spec.base_seed},
        {"runs", spec.runs},
        {"seeds", seeds},
        {"threads", spec.threads},
        {"size_metric", "derivation_tree_nodes"},
        {"extended_csv",
         "run_NNN_extended.csv adds parse-tree node counts alongside derivation-tree counts"},
        {"grammar",
         {{"source", spec.units_path.empty() ? spec.grammar_path : spec.units_path},
          {"generated_from_units", !spec.units_path.empty()},
          {"file", "grammar.bnf"},
          {"nonterminals", gs.nonterminal_count},
          {"derivations", gs.derivation_count},
          {"serialized_bytes", gs.serialized_bytes}}},
        {"problem", problem_to_json(problem)},
    };
    if (is_gp) {
        manifest["params"] = {{"population", gp_params.population},
                              {"generations", gp_params.generations},
                              {"p_crossover", gp_params.p_crossover},
                              {"p_mutation", gp_params.p_mutation},
                              {"tournament", gp_params.tournament_size},
                              {"d_max", gp_params.d_max},
                              {"eval_budget", gp_params.eval_budget},
                              {"elitism", gp_params.elitism}};
    } else {
        manifest["params"] = {{"population", sg_params.population},
                              {"generations", sg_params.generations},
                              {"n_best", sg_params.n_best},
                              {"n_worst", sg_params.n_worst},
                              {"epsilon", sg_params.epsilon},
                              {"p_m", sg_params.p_m},
                              {"epsilon_m", sg_params.epsilon_m},
                              {"d_max", sg_params.d_max},
                              {"eval_budget", sg_params.eval_budget}};
    }
    write_file(out_path("manifest.json"), manifest.dump(2) + "\n");
    return result;
}

BloatReport bloat_report(const std::vector<std::string>& csv_paths, double threshold) {
    if (csv_paths.empty()) throw InvalidArgument("bloat report needs at least one metrics CSV");
    BloatReport report;
    report.threshold = threshold;
    for (const auto& path : csv_paths) {
        auto records = records_from_csv(read_file(path));
        if (records.empty()) throw InvalidArgument("empty metrics CSV: " + path);
        // Early window: generations 5..15, skipping the initial size drop;
        // clamped to the first rows for very short runs.
        std::vector<double> early;
        for (const auto& r : records)
            if (r.generation >= 5 && r.generation <= 15) early.push_back(r.mean_size);
        if (early.empty())
            for (std::size_t i = 0; i < std::min<std::size_t>(records.size(), 11); ++i)
                early.push_back(records[i].mean_size);
        std::vector<double> final_window;
        std::size_t tail = std::min<std::size_t>(records.size(), 10);
        for (std::size_t i = records.size() - tail; i < records.size(); ++i)
            final_window.push_back(records[i].mean_size);

        auto mean = [](const std::vector<double>& v) {
            double m = 0.0;
            for (double x : v) m += x;
            return m / static_cast<double>(v.size());
        };
        BloatRunStats stats;
        stats.source = path;
        stats.early_mean = mean(early);
        stats.final_mean = mean(final_window);
        stats.ratio = stats.early_mean > 0 ? stats.final_mean / stats.early_mean : 0.0;
        stats.flagged_bloat = stats.ratio > threshold;
        stats.flagged_constant = std::fabs(stats.ratio - 1.0) <= 0.25;
        report.runs.push_back(std::move(stats));
    }
    return report;
}

std::string bloat_report_to_text(const BloatReport& r) {
    std::string out = "source,early_mean_size,final_mean_size,ratio,flag\n";
    for (const auto& s : r.runs) {
        out += s.source + ',' + fmt_double(s.early_mean) + ',' + fmt_double(s.final_mean) + ',' +
               fmt_double(s.ratio) + ',' +
               (s.flagged_bloat ? "bloat" : (s.flagged_constant ? "constant" : "-")) + '\n';
    }
    return out;
}

GeneralizationReport generalization_report(const std::string& campaign_dir) {
    fs::path dir(campaign_dir);
    json manifest = json::parse(read_file((dir / "manifest.json").string()));
    Grammar grammar = parse_grammar(read_file((dir / "grammar.bnf").string()));
    ProblemConfig problem = problem_from_json(manifest.at("problem"));
    std::uint64_t base_seed = manifest.at("base_seed").get<std::uint64_t>();

    CaseSet train = generate_cases(problem.cases, base_seed, CaseRole::Train);
    CaseGenConfig test_cfg = problem.cases;
    test_cfg.n_materials = problem.test_materials;
    CaseSet test = generate_cases(test_cfg, base_seed, CaseRole::Test);

    std::vector<std::string> best_files;
    for (const auto& entry : fs::directory_iterator(dir)) {
        std::string name = entry.path().filename().string();
        if (name.rfind("best_", 0) == 0 && name.size() > 4 &&
            name.substr(name.size() - 4) == ".txt")
            best_files.push_back(entry.path().string());
    }
    std::sort(best_files.begin(), best_files.end());
    if (best_files.empty())
        throw InvalidArgument("no best_NNN.txt expressions in " + campaign_dir);

    GeneralizationReport report;
    for (const auto& file : best_files) {
        std::string expr = trim(read_file(file));
        DerivationTree tree = parse_expression(grammar, expr);
        GeneralizationRow row;
        row.source = fs::path(file).filename().string();
        row.expression = expr;
        row.train_error = fitness(tree, grammar, train, problem.cases.metric);
        row.test_error = fitness(tree, grammar, test, problem.cases.metric);
        row.ratio = row.test_error / std::max(row.train_error, 1e-300);
        if (row.train_error == 0.0 && row.test_error == 0.0) row.ratio = 1.0;
        report.rows.push_back(row);

        // Fig.-9-style predicted-vs-target curves per test material.
        std::string run_id = row.source.substr(5, row.source.size() - 9);
        for (std::size_t m = 0; m < test.materials.size(); ++m) {
            const auto& [K, C, F] = test.materials[m];
            std::string csv = "t,target,predicted\n";
            for (double t : test.time_grid) {
                double target = kelvin_voigt(F, K, C, t);
                double pred = eval_expr(tree, grammar,
                                        {{"F", F}, {"K", K}, {"C", C}, {"t", t}});
                csv += fmt_double(t) + ',' + fmt_double(target) + ',' + fmt_double(pred) + '\n';
            }
            write_file((dir / ("curve_run" + run_id + "_mat" + std::to_string(m) + ".csv"))
                           .string(),
                       csv);
        }
    }
    write_file((dir / "generalization.csv").string(), generalization_report_to_text(report));
    return report;
}

std::string generalization_report_to_text(const GeneralizationReport& r) {
    std::string out = "source,train_error,test_error,ratio,expression\n";
    for (const auto& row : r.rows) {
        out += row.source + ',' + fmt_double(row.train_error) + ',' + fmt_double(row.test_error) +
               ',' + fmt_double(row.ratio) + ',' + row.expression + '\n';
    }
    return out;
}

} // namespace sggp
