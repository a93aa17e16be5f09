#include "engine.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <sstream>
#include <thread>

namespace sggp {

WeightStore WeightStore::ones(WeightMode mode, int n_derivations, int d_max) {
    WeightStore ws;
    ws.mode = mode;
    ws.levels = mode == WeightMode::Scalar ? 1 : d_max;
    ws.n_derivations = n_derivations;
    ws.w.assign(static_cast<std::size_t>(ws.levels) * static_cast<std::size_t>(n_derivations),
                1.0);
    return ws;
}

std::string weights_to_text(const WeightStore& ws) {
    std::string out;
    char buf[96];
    for (int level = 1; level <= ws.levels; ++level) {
        for (int id = 0; id < ws.n_derivations; ++id) {
            std::snprintf(buf, sizeof buf, "%d %d %.17g\n", level, id, ws.get(level, id));
            out += buf;
        }
    }
    return out;
}

WeightStore weights_from_text(std::string_view text) {
    std::istringstream in{std::string(text)};
    int level, id;
    double value;
    int max_level = 0, max_id = -1;
    std::vector<std::tuple<int, int, double>> entries;
    while (in >> level >> id >> value) {
        if (level < 1 || id < 0 || value <= 0.0)
            throw ParseError("invalid weight-store entry");
        entries.emplace_back(level, id, value);
        max_level = std::max(max_level, level);
        max_id = std::max(max_id, id);
    }
    if (entries.empty()) throw ParseError("empty weight-store snapshot");
    WeightStore ws;
    ws.mode = max_level == 1 ? WeightMode::Scalar : WeightMode::Vectorial;
    ws.levels = max_level;
    ws.n_derivations = max_id + 1;
    ws.w.assign(static_cast<std::size_t>(max_level) * static_cast<std::size_t>(max_id + 1), 1.0);
    for (auto& [l, i, v] : entries) ws.cell(l, i) = v;
    return ws;
}

void SgParams::validate() const {
    if (population <= 0) throw InvalidArgument("population must be positive");
    if (n_best < 0 || n_worst < 0 || n_best + n_worst > population)
        throw InvalidArgument("N_b + N_w must not exceed the population size");
    if (epsilon < 0 || p_m < 0 || epsilon_m < 0)
        throw InvalidArgument("epsilon, p_m and epsilon_m must be non-negative");
    if (d_max < 1) throw InvalidArgument("D_max must be at least 1");
}

void collect_usage(Individual& ind) {
    ind.derivation_usage.clear();
    auto walk = [&](auto&& self, const TreeNode& n, int level) -> void {
        if (n.deriv_id >= 0) ind.derivation_usage.emplace_back(level, n.deriv_id);
        for (const auto& c : n.children) self(self, c, level + 1);
    };
    walk(walk, ind.tree, 1);
    std::sort(ind.derivation_usage.begin(), ind.derivation_usage.end());
}

Individual make_individual(DerivationTree tree, const Grammar& g, bool with_usage) {
    Individual ind;
    ind.tree = std::move(tree);
    ind.node_count = tree_node_count(ind.tree);
    ind.parse_node_count = parse_tree_node_count(ind.tree, g);
    // The (level, derivation) usage list is only needed by the distribution
    // update, so callers on the hot path can skip it.
    if (with_usage) collect_usage(ind);
    return ind;
}

namespace {

TreeNode sample_node(const Grammar& g, const MinDepthTable& table, const WeightStore& ws,
                     SymbolId sym, int level, int remaining, Rng& rng) {
    TreeNode node;
    node.symbol = sym;
    if (g.terminal(sym)) return node;

    const auto& rule = g.rule_for(sym);
    int weight_level = ws.mode == WeightMode::Vectorial ? std::min(level, ws.levels) : 1;

    // Weighted draw over the admissible alternatives (Eq.-1 renormalization).
    double total = 0.0;
    for (const auto& alt : rule.alts)
        if (table.derivation_depth[static_cast<std::size_t>(alt.id)] <= remaining)
            total += ws.get(weight_level, alt.id);
    if (total <= 0.0)
        throw InfeasibleGrammar("no admissible derivation for '<" + g.name(sym) +
                                ">' at remaining depth " + std::to_string(remaining));
    double r = rng.uniform() * total;
    const Derivation* chosen = nullptr;
    for (const auto& alt : rule.alts) {
        if (table.derivation_depth[static_cast<std::size_t>(alt.id)] > remaining) continue;
        chosen = &alt;  // last admissible wins on rounding leftovers
        r -= ws.get(weight_level, alt.id);
        if (r < 0.0) break;
    }

    node.deriv_id = chosen->id;
    node.children.reserve(chosen->rhs.size());
    for (SymbolId child : chosen->rhs)
        node.children.push_back(
            sample_node(g, table, ws, child, level + 1, remaining - 1, rng));
    return node;
}

// Inside run_sggp the remaining depth determines the level (level =
// d_max - remaining + 1), so the admissible alternatives and their weight
// prefix sums can be tabulated once per generation instead of rescanning
// every rule alternative at every node.
struct SamplerTable {
    struct Cell {
        std::vector<int> deriv_ids;
        std::vector<double> prefix;  // running sums of the admissible weights
    };
    std::vector<Cell> cells;  // symbol * d_max + (remaining - 1)
    int d_max = 0;
};

SamplerTable build_sampler(const Grammar& g, const MinDepthTable& table, const WeightStore& ws,
                           int d_max) {
    SamplerTable st;
    st.d_max = d_max;
    st.cells.resize(g.symbol_count() * static_cast<std::size_t>(d_max));
    for (SymbolId sym : g.nonterminals) {
        const auto& rule = g.rule_for(sym);
        for (int r = 1; r <= d_max; ++r) {
            int level = d_max - r + 1;
            int wl = ws.mode == WeightMode::Vectorial ? std::min(level, ws.levels) : 1;
            auto& cell = st.cells[static_cast<std::size_t>(sym) *
                                      static_cast<std::size_t>(d_max) +
                                  static_cast<std::size_t>(r - 1)];
            double total = 0.0;
            for (const auto& alt : rule.alts) {
                if (table.derivation_depth[static_cast<std::size_t>(alt.id)] > r) continue;
                total += ws.get(wl, alt.id);
                cell.deriv_ids.push_back(alt.id);
                cell.prefix.push_back(total);
            }
        }
    }
    return st;
}

TreeNode sample_node_tabled(const Grammar& g, const SamplerTable& st, SymbolId sym,
                            int remaining, Rng& rng) {
    TreeNode node;
    node.symbol = sym;
    if (g.terminal(sym)) return node;

    const auto& cell = st.cells[static_cast<std::size_t>(sym) *
                                    static_cast<std::size_t>(st.d_max) +
                                static_cast<std::size_t>(remaining - 1)];
    if (cell.prefix.empty() || cell.prefix.back() <= 0.0)
        throw InfeasibleGrammar("no admissible derivation for '<" + g.name(sym) +
                                ">' at remaining depth " + std::to_string(remaining));
    double r = rng.uniform() * cell.prefix.back();
    std::size_t idx = static_cast<std::size_t>(
        std::upper_bound(cell.prefix.begin(), cell.prefix.end(), r) - cell.prefix.begin());
    if (idx >= cell.deriv_ids.size()) idx = cell.deriv_ids.size() - 1;  // rounding leftovers

    const Derivation& chosen = g.derivation(cell.deriv_ids[idx]);
    node.deriv_id = chosen.id;
    node.children.reserve(chosen.rhs.size());
    for (SymbolId child : chosen.rhs)
        node.children.push_back(sample_node_tabled(g, st, child, remaining - 1, rng));
    return node;
}

} // namespace

DerivationTree sample_tree(const Grammar& g, const MinDepthTable& table, const WeightStore& w,
                           int d_max, Rng& rng) {
    if (!table.feasible(g.start) || table.symbol_depth[static_cast<std::size_t>(g.start)] > d_max)
        throw InfeasibleGrammar("start symbol cannot terminate within D_max = " +
                                std::to_string(d_max));
    return sample_node(g, table, w, g.start, 1, d_max, rng);
}

DerivationTree sample_symbol(const Grammar& g, const MinDepthTable& table, const WeightStore& w,
                             SymbolId sym, int level, int remaining, Rng& rng) {
    return sample_node(g, table, w, sym, level, remaining, rng);
}

WeightStore update_weights(const WeightStore& w, const std::vector<Individual>& best,
                           const std::vector<Individual>& worst, const SgParams& params) {
    auto count_group = [&](const std::vector<Individual>& group) {
        std::vector<int> counts(w.w.size(), 0);
        std::vector<std::size_t> seen;
        for (const auto& ind : group) {
            seen.clear();
            for (const auto& [level, id] : ind.derivation_usage) {
                int cell_level = w.mode == WeightMode::Vectorial ? std::min(level, w.levels) : 1;
                std::size_t idx = static_cast<std::size_t>(cell_level - 1) *
                                      static_cast<std::size_t>(w.n_derivations) +
                                  static_cast<std::size_t>(id);
                seen.push_back(idx);
            }
            std::sort(seen.begin(), seen.end());
            seen.erase(std::unique(seen.begin(), seen.end()), seen.end());
            for (std::size_t idx : seen) ++counts[idx];
        }
        return counts;
    };
    std::vector<int> b = count_group(best);
    std::vector<int> ww = count_group(worst);

    WeightStore out = w;
    double base = 1.0 + params.epsilon;
    for (std::size_t i = 0; i < out.w.size(); ++i)
        out.w[i] = out.w[i] * std::pow(base, b[i]) / std::pow(base, ww[i]);
    return out;
}

WeightStore mutate_weights(const WeightStore& w, const SgParams& params, Rng& rng) {
    WeightStore out = w;
    double factor = 1.0 + params.epsilon_m;
    for (double& cell : out.w) {
        if (!rng.bernoulli(params.p_m)) continue;
        if (rng.bernoulli(0.5))
            cell *= factor;
        else
            cell /= factor;
    }
    return out;
}

bool ranks_before(const Individual& a, std::size_t ia, const Individual& b, std::size_t ib) {
    if (a.fitness != b.fitness) return a.fitness < b.fitness;
    if (a.node_count != b.node_count) return a.node_count < b.node_count;
    return ia < ib;
}

std::vector<std::size_t> rank_population(const std::vector<Individual>& pop) {
    std::vector<std::size_t> order(pop.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return ranks_before(pop[a], a, pop[b], b);
    });
    return order;
}

void parallel_for(std::size_t n, int threads, const std::function<void(std::size_t)>& fn) {
    if (threads <= 1 || n < 2) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::size_t nworkers = std::min<std::size_t>(static_cast<std::size_t>(threads), n);
    std::vector<std::thread> pool;
    std::atomic<std::size_t> next{0};
    for (std::size_t t = 0; t < nworkers; ++t) {
        pool.emplace_back([&] {
            for (;;) {
                std::size_t i = next.fetch_add(1);
                if (i >= n) return;
                fn(i);
            }
        });
    }
    for (auto& th : pool) th.join();
}

SgResult run_sggp(const Grammar& g, const FitnessFn& problem, const SgParams& params,
                  WeightMode mode, std::uint64_t seed, int threads) {
    params.validate();
    MinDepthTable table = compute_min_depths(g);
    if (!table.feasible(g.start) ||
        table.symbol_depth[static_cast<std::size_t>(g.start)] > params.d_max)
        throw InfeasibleGrammar("grammar infeasible at D_max = " + std::to_string(params.d_max));

    Rng master(seed);
    Rng sample_rng = master.substream("sampling");
    Rng mutate_rng = master.substream("mutation");

    SgResult result;
    result.final_weights = WeightStore::ones(mode, g.total_derivations(), params.d_max);
    bool have_best = false;
    long long evaluations = 0;
    auto t0 = std::chrono::steady_clock::now();

    for (int gen = 0; gen < params.generations; ++gen) {
        // Per-individual sampling seeds are drawn sequentially so results
        // do not depend on evaluation scheduling.
        std::vector<std::uint64_t> seeds(static_cast<std::size_t>(params.population));
        for (auto& s : seeds) s = sample_rng.next_u64();

        SamplerTable sampler =
            build_sampler(g, table, result.final_weights, params.d_max);
        std::vector<Individual> pop(seeds.size());
        parallel_for(seeds.size(), threads, [&](std::size_t i) {
            Rng local(seeds[i]);
            DerivationTree t =
                sample_node_tabled(g, sampler, g.start, params.d_max, local);
            pop[i] = make_individual(std::move(t), g, false);
            pop[i].fitness = problem(pop[i].tree);
        });
        evaluations += static_cast<long long>(pop.size());

        auto order = rank_population(pop);
        std::vector<Individual> best, worst;
        for (int i = 0; i < params.n_best; ++i) {
            Individual& sel = pop[order[static_cast<std::size_t>(i)]];
            collect_usage(sel);
            best.push_back(sel);
        }
        for (int i = 0; i < params.n_worst; ++i) {
            Individual& sel = pop[order[order.size() - 1 - static_cast<std::size_t>(i)]];
            collect_usage(sel);
            worst.push_back(sel);
        }

        const Individual& gen_best = pop[order.front()];
        if (!have_best || gen_best.fitness < result.best_ever.fitness ||
            (gen_best.fitness == result.best_ever.fitness &&
             gen_best.node_count < result.best_ever.node_count)) {
            result.best_ever = gen_best;
            have_best = true;
        }

        result.final_weights = update_weights(result.final_weights, best, worst, params);
        result.final_weights = mutate_weights(result.final_weights, params, mutate_rng);

        RunRecord rec;
        rec.generation = gen;
        rec.evaluations = evaluations;
        rec.best_fit_gen = gen_best.fitness;
        rec.best_fit_ever = result.best_ever.fitness;
        double fit_sum = 0.0, size_sum = 0.0, psize_sum = 0.0;
        for (const auto& ind : pop) {
            fit_sum += ind.fitness;
            size_sum += ind.node_count;
            psize_sum += ind.parse_node_count;
        }
        rec.mean_fit = fit_sum / static_cast<double>(pop.size());
        rec.mean_size = size_sum / static_cast<double>(pop.size());
        rec.mean_parse_size = psize_sum / static_cast<double>(pop.size());
        rec.best_size = result.best_ever.node_count;
        rec.best_parse_size = result.best_ever.parse_node_count;
        rec.wall_ms = std::chrono::duration_cast<std::chrono::milliseconds>(
                          std::chrono::steady_clock::now() - t0)
                          .count();
        result.records.push_back(rec);

        if (evaluations >= params.eval_budget) break;
    }
    return result;
}

} // namespace sggp
