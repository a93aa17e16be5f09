#pragma once

#include <cstdint>
#include <functional>
#include <limits>
#include <vector>

#include "cfg.hpp"
#include "rng.hpp"

namespace sggp {

// Per-generation metrics row, shared by both algorithms. wall_ms is the
// elapsed time since run start and is the one field excluded from the
// byte-identical determinism contract.
struct RunRecord {
    int generation = 0;
    long long evaluations = 0;
    double best_fit_gen = 0.0;
    double best_fit_ever = 0.0;
    double mean_fit = 0.0;
    double mean_size = 0.0;        // derivation-tree nodes
    int best_size = 0;             // node count of the best-ever individual
    long long wall_ms = 0;
    double mean_parse_size = 0.0;  // parse-tree nodes (extended CSV)
    int best_parse_size = 0;
};

enum class WeightMode { Scalar, Vectorial };

// Derivation weights; strictly positive, never normalized. Vectorial mode
// keeps one weight per (tree level, derivation).
struct WeightStore {
    WeightMode mode = WeightMode::Scalar;
    int levels = 1;          // D_max in vectorial mode, 1 in scalar mode
    int n_derivations = 0;
    std::vector<double> w;   // scalar: [id]; vectorial: [(level-1)*n + id]

    static WeightStore ones(WeightMode mode, int n_derivations, int d_max);

    double get(int level, int id) const {
        return mode == WeightMode::Scalar
                   ? w[static_cast<std::size_t>(id)]
                   : w[static_cast<std::size_t>(level - 1) * static_cast<std::size_t>(n_derivations) +
                       static_cast<std::size_t>(id)];
    }
    double& cell(int level, int id) {
        return mode == WeightMode::Scalar
                   ? w[static_cast<std::size_t>(id)]
                   : w[static_cast<std::size_t>(level - 1) * static_cast<std::size_t>(n_derivations) +
                       static_cast<std::size_t>(id)];
    }
};

std::string weights_to_text(const WeightStore& w);
WeightStore weights_from_text(std::string_view text);

struct SgParams {
    int n_best = 2;
    int n_worst = 2;
    double epsilon = 0.001;
    double p_m = 0.001;
    double epsilon_m = 0.01;
    int population = 500;
    int generations = 4000;
    int d_max = 30;
    long long eval_budget = std::numeric_limits<long long>::max();

    void validate() const;
};

inline constexpr double kNotEvaluated = -1.0;  // fitness values are non-negative

struct Individual {
    DerivationTree tree;
    double fitness = kNotEvaluated;
    int node_count = 0;
    int parse_node_count = 0;
    // One entry per rewriting step, sorted: the (level, derivation) multiset.
    std::vector<std::pair<int, int>> derivation_usage;
};

Individual make_individual(DerivationTree tree, const Grammar& g, bool collect_usage = true);

// Fills derivation_usage for an individual built with collect_usage = false.
void collect_usage(Individual& ind);

// Eq.-1 sampling: at each non-terminal occurrence the derivation is drawn
// with probability w_i / sum of admissible weights, level-indexed weights
// in vectorial mode.
DerivationTree sample_tree(const Grammar& g, const MinDepthTable& table, const WeightStore& w,
                           int d_max, Rng& rng);

// Samples a subtree rooted at `sym` sitting at tree level `level` with
// `remaining` depth levels available (used by GP mutation).
DerivationTree sample_symbol(const Grammar& g, const MinDepthTable& table, const WeightStore& w,
                             SymbolId sym, int level, int remaining, Rng& rng);

// (1+eps)^b / (1+eps)^w multiplicative update from the best and worst of
// one generation; presence-based counting.
WeightStore update_weights(const WeightStore& w, const std::vector<Individual>& best,
                           const std::vector<Individual>& worst, const SgParams& params);

WeightStore mutate_weights(const WeightStore& w, const SgParams& params, Rng& rng);

// Pure, thread-safe fitness oracle; lower is better.
using FitnessFn = std::function<double(const DerivationTree&)>;

struct SgResult {
    Individual best_ever;
    std::vector<RunRecord> records;
    WeightStore final_weights;
};

SgResult run_sggp(const Grammar& g, const FitnessFn& problem, const SgParams& params,
                  WeightMode mode, std::uint64_t seed, int threads = 1);

// Total order used for all rankings: fitness, then node count, then
// sampling index.
bool ranks_before(const Individual& a, std::size_t ia, const Individual& b, std::size_t ib);
std::vector<std::size_t> rank_population(const std::vector<Individual>& pop);

void parallel_for(std::size_t n, int threads, const std::function<void(std::size_t)>& fn);

} // namespace sggp
