#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "cfg.hpp"

namespace sggp {

// Ordered after every genuine fitness; keeps ranking total when an
// individual evaluates to NaN/inf on some case.
inline constexpr double kWorstFitness = 1e100;

enum class FitnessMetric { MeanAbsoluteError, MeanSquaredError };

struct FitnessCase {
    std::map<std::string, double> variables;
    double target = 0.0;
};

enum class CaseRole { Train, Test };

struct CaseSet {
    std::vector<std::array<double, 3>> materials;  // (K, C, F) triples
    std::vector<double> time_grid;
    std::vector<FitnessCase> cases;                // materials x time grid
    CaseRole role = CaseRole::Train;
};

// Flat evaluation program compiled from a derivation tree; evaluating a
// tree once per fitness case re-walks nothing.
class CompiledExpr {
public:
    CompiledExpr(const DerivationTree& t, const Grammar& g,
                 const std::vector<std::string>& variable_order);

    // `values` aligned with the variable_order given at compile time.
    double eval(const std::vector<double>& values) const;

private:
    enum class Op : std::uint8_t { PushConst, PushVar, Add, Mul, Div, Exp };
    struct Instr {
        Op op;
        int var_index = 0;
        double value = 0.0;
    };
    std::vector<Instr> code_;
    mutable std::vector<double> stack_;
};

// Bottom-up evaluation with protected operators: div returns 1 when
// |denominator| < 1e-12; exp is e^x clamped to +-1e150.
double eval_expr(const DerivationTree& t, const Grammar& g,
                 const std::map<std::string, double>& bindings);

double fitness(const DerivationTree& t, const Grammar& g, const CaseSet& cases,
               FitnessMetric metric = FitnessMetric::MeanAbsoluteError);

double fitness(const CompiledExpr& expr, const std::vector<std::vector<double>>& case_values,
               const std::vector<double>& targets, FitnessMetric metric);

// Kelvin-Voigt response u(t) = F/K (1 - e^{-Kt/C}).
double kelvin_voigt(double F, double K, double C, double t);

struct CaseGenConfig {
    int n_materials = 10;
    int time_points = 20;
    double param_min = 0.5;  // K, C, F all drawn from [param_min, param_max]
    double param_max = 5.0;
    double t_max_factor = 3.0;  // t_max = factor * max(C/K) over the drawn materials
    FitnessMetric metric = FitnessMetric::MeanAbsoluteError;
};

CaseSet generate_cases(const CaseGenConfig& cfg, std::uint64_t seed, CaseRole role);

// Fitness of the hard-coded local-optimum law
// x(t) = (2 t^2 F/K) / ((C/K)^2 + 2 t^2) on `cases`.
double check_local_optimum(const CaseSet& cases,
                           FitnessMetric metric = FitnessMetric::MeanAbsoluteError);
double local_optimum_value(double F, double K, double C, double t);

std::string caseset_to_csv(const CaseSet& cs);
CaseSet caseset_from_csv(std::string_view csv);

} // namespace sggp
