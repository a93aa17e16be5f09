#pragma once

#include "engine.hpp"

namespace sggp {

struct GpParams {
    int population = 2000;
    int generations = 1000;
    double p_crossover = 0.9;
    double p_mutation = 0.5;   // per individual
    int tournament_size = 3;
    int d_max = 30;
    long long eval_budget = std::numeric_limits<long long>::max();
    int elitism = 1;
    // Depth budget for the initial population only; 0 means d_max. Grammars
    // whose rules are dominated by operator alternatives produce near-full
    // trees under uniform sampling, so a smaller initial depth leaves room
    // for size dynamics to show.
    int init_depth = 0;

    void validate() const;
};

// Uniform choice over admissible derivations (all weights equal).
std::vector<Individual> init_population(const Grammar& g, const MinDepthTable& table, int n,
                                        int d_max, Rng& rng);

// Swaps subtrees rooted at the same non-terminal symbol. Offspring beyond
// d_max are rejected; after 8 failed attempts the parents are cloned.
std::pair<Individual, Individual> crossover(const Individual& a, const Individual& b,
                                            const Grammar& g, int d_max, Rng& rng);

// Replaces a uniformly chosen non-terminal subtree by a fresh uniform
// sample fitting the remaining depth at that position.
Individual mutate(const Individual& a, const Grammar& g, const MinDepthTable& table, int d_max,
                  Rng& rng);

// Best of k individuals drawn without replacement.
const Individual& tournament_select(const std::vector<Individual>& pop, int k, Rng& rng);

struct GpResult {
    Individual best_ever;
    std::vector<RunRecord> records;
};

GpResult run_gp(const Grammar& g, const FitnessFn& problem, const GpParams& params,
                std::uint64_t seed, int threads = 1);

} // namespace sggp
