#include "gp.hpp"

#include <algorithm>
#include <chrono>

namespace sggp {

void GpParams::validate() const {
    if (population <= 0) throw InvalidArgument("population must be positive");
    if (p_crossover < 0 || p_crossover > 1 || p_mutation < 0 || p_mutation > 1)
        throw InvalidArgument("operator probabilities must lie in [0,1]");
    if (tournament_size < 1) throw InvalidArgument("tournament size must be at least 1");
    if (elitism < 1) throw InvalidArgument("elitist GP requires elitism >= 1");
    if (elitism > population) throw InvalidArgument("elitism exceeds population size");
    if (d_max < 1) throw InvalidArgument("D_max must be at least 1");
    if (init_depth < 0 || init_depth > d_max)
        throw InvalidArgument("init_depth must lie in [0, D_max]");
}

std::vector<Individual> init_population(const Grammar& g, const MinDepthTable& table, int n,
                                        int d_max, Rng& rng) {
    WeightStore uniform = WeightStore::ones(WeightMode::Scalar, g.total_derivations(), d_max);
    std::vector<Individual> pop;
    pop.reserve(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i)
        pop.push_back(make_individual(sample_tree(g, table, uniform, d_max, rng), g, false));
    return pop;
}

namespace {

struct Occurrence {
    TreeNode* node;
    int level;
};

void collect_nonterminals(TreeNode& n, int level, const Grammar& g, std::vector<Occurrence>& out) {
    if (!g.terminal(n.symbol)) out.push_back({&n, level});
    for (auto& c : n.children) collect_nonterminals(c, level + 1, g, out);
}

} // namespace

std::pair<Individual, Individual> crossover(const Individual& a, const Individual& b,
                                            const Grammar& g, int d_max, Rng& rng) {
    constexpr int kMaxAttempts = 8;
    for (int attempt = 0; attempt < kMaxAttempts; ++attempt) {
        DerivationTree ca = a.tree;
        DerivationTree cb = b.tree;
        std::vector<Occurrence> occs_a;
        collect_nonterminals(ca, 1, g, occs_a);
        Occurrence pick_a = occs_a[rng.uniform_index(occs_a.size())];

        std::vector<Occurrence> occs_b;
        collect_nonterminals(cb, 1, g, occs_b);
        std::erase_if(occs_b, [&](const Occurrence& o) {
            return o.node->symbol != pick_a.node->symbol;
        });
        if (occs_b.empty()) continue;
        Occurrence pick_b = occs_b[rng.uniform_index(occs_b.size())];

        std::swap(*pick_a.node, *pick_b.node);
        // A complete tree of derivation depth d has its terminal frontier at
        // node level d + 1.
        if (tree_depth(ca) > d_max + 1 || tree_depth(cb) > d_max + 1) continue;
        return {make_individual(std::move(ca), g, false), make_individual(std::move(cb), g, false)};
    }
    return {a, b};
}

Individual mutate(const Individual& a, const Grammar& g, const MinDepthTable& table, int d_max,
                  Rng& rng) {
    DerivationTree copy = a.tree;
    std::vector<Occurrence> occs;
    collect_nonterminals(copy, 1, g, occs);
    Occurrence pick = occs[rng.uniform_index(occs.size())];
    int remaining = d_max - pick.level + 1;
    // Budget the fresh subtree relative to what it replaces (plus slack for
    // growth), still within the remaining depth: operator-heavy rules would
    // otherwise make every mutation a near-complete tree of depth `remaining`.
    int replaced_depth = tree_depth(*pick.node) - 1;
    int budget = std::min(remaining, replaced_depth + 2);
    WeightStore uniform = WeightStore::ones(WeightMode::Scalar, g.total_derivations(), d_max);
    *pick.node = sample_symbol(g, table, uniform, pick.node->symbol, pick.level, budget, rng);
    return make_individual(std::move(copy), g, false);
}

const Individual& tournament_select(const std::vector<Individual>& pop, int k, Rng& rng) {
    if (static_cast<std::size_t>(k) > pop.size())
        throw InvalidArgument("tournament size exceeds population size");
    std::vector<std::size_t> drawn;
    while (drawn.size() < static_cast<std::size_t>(k)) {
        std::size_t idx = rng.uniform_index(pop.size());
        if (std::find(drawn.begin(), drawn.end(), idx) == drawn.end()) drawn.push_back(idx);
    }
    std::size_t winner = drawn.front();
    for (std::size_t idx : drawn)
        if (ranks_before(pop[idx], idx, pop[winner], winner)) winner = idx;
    return pop[winner];
}

GpResult run_gp(const Grammar& g, const FitnessFn& problem, const GpParams& params,
                std::uint64_t seed, int threads) {
    params.validate();
    MinDepthTable table = compute_min_depths(g);
    if (!table.feasible(g.start) ||
        table.symbol_depth[static_cast<std::size_t>(g.start)] > params.d_max)
        throw InfeasibleGrammar("grammar infeasible at D_max = " + std::to_string(params.d_max));

    Rng master(seed);
    Rng init_rng = master.substream("gp/init");
    Rng breed_rng = master.substream("gp/breeding");

    GpResult result;
    long long evaluations = 0;
    auto t0 = std::chrono::steady_clock::now();

    int init_depth = params.init_depth == 0 ? params.d_max : params.init_depth;
    if (table.symbol_depth[static_cast<std::size_t>(g.start)] > init_depth)
        throw InfeasibleGrammar("grammar infeasible at init depth " + std::to_string(init_depth));
    std::vector<Individual> pop =
        init_population(g, table, params.population, init_depth, init_rng);

    auto evaluate = [&](std::vector<Individual>& p) {
        std::vector<std::size_t> pending;
        for (std::size_t i = 0; i < p.size(); ++i)
            if (p[i].fitness == kNotEvaluated) pending.push_back(i);
        parallel_for(pending.size(), threads,
                     [&](std::size_t i) { p[pending[i]].fitness = problem(p[pending[i]].tree); });
        evaluations += static_cast<long long>(pending.size());
    };

    bool have_best = false;
    auto record_generation = [&](int gen, const std::vector<Individual>& p,
                                 const std::vector<std::size_t>& order) {
        const Individual& gen_best = p[order.front()];
        if (!have_best || gen_best.fitness < result.best_ever.fitness ||
            (gen_best.fitness == result.best_ever.fitness &&
             gen_best.node_count < result.best_ever.node_count)) {
            result.best_ever = gen_best;
            have_best = true;
        }
        RunRecord rec;
        rec.generation = gen;
        rec.evaluations = evaluations;
        rec.best_fit_gen = gen_best.fitness;
        rec.best_fit_ever = result.best_ever.fitness;
        double fit_sum = 0.0, size_sum = 0.0, psize_sum = 0.0;
        for (const auto& ind : p) {
            fit_sum += ind.fitness;
            size_sum += ind.node_count;
            psize_sum += ind.parse_node_count;
        }
        rec.mean_fit = fit_sum / static_cast<double>(p.size());
        rec.mean_size = size_sum / static_cast<double>(p.size());
        rec.mean_parse_size = psize_sum / static_cast<double>(p.size());
        rec.best_size = result.best_ever.node_count;
        rec.best_parse_size = result.best_ever.parse_node_count;
        rec.wall_ms = std::chrono::duration_cast<std::chrono::milliseconds>(
                          std::chrono::steady_clock::now() - t0)
                          .count();
        result.records.push_back(rec);
    };

    evaluate(pop);
    auto order = rank_population(pop);
    record_generation(0, pop, order);

    for (int gen = 1; gen < params.generations && evaluations < params.eval_budget; ++gen) {
        std::vector<Individual> next;
        next.reserve(pop.size());
        for (int e = 0; e < params.elitism; ++e)
            next.push_back(pop[order[static_cast<std::size_t>(e)]]);
        while (next.size() < pop.size()) {
            const Individual& p1 = tournament_select(pop, params.tournament_size, breed_rng);
            const Individual& p2 = tournament_select(pop, params.tournament_size, breed_rng);
            Individual c1 = p1, c2 = p2;
            if (breed_rng.bernoulli(params.p_crossover))
                std::tie(c1, c2) = crossover(p1, p2, g, params.d_max, breed_rng);
            if (breed_rng.bernoulli(params.p_mutation))
                c1 = mutate(c1, g, table, params.d_max, breed_rng);
            if (breed_rng.bernoulli(params.p_mutation))
                c2 = mutate(c2, g, table, params.d_max, breed_rng);
            c1.fitness = kNotEvaluated;
            c2.fitness = kNotEvaluated;
            next.push_back(std::move(c1));
            if (next.size() < pop.size()) next.push_back(std::move(c2));
        }
        pop = std::move(next);
        evaluate(pop);
        order = rank_population(pop);
        record_generation(gen, pop, order);
    }
    return result;
}

} // namespace sggp
