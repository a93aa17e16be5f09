#pragma once

#include <optional>
#include <string>
#include <vector>

#include "cfg.hpp"

namespace sggp {

// Integer exponent vector over the elementary units ([1,1,-2] = force
// with elementary units mass,length,time).
using UnitVector = std::vector<int>;

UnitVector unit_add(const UnitVector& a, const UnitVector& b);
UnitVector unit_sub(const UnitVector& a, const UnitVector& b);
bool unit_in_range(const UnitVector& u, int lo, int hi);

enum class UnitOp { Add, Mul, ProtectedDiv, ExpFunc };

struct UnitSystem {
    std::vector<std::string> elementary_units;            // e.g. mass,length,time
    int range_lo = -2;
    int range_hi = 2;
    std::vector<std::pair<std::string, UnitVector>> variables;
    UnitVector target_unit;
    std::vector<UnitOp> operators;                        // declaration order
    std::vector<std::string> constants;                   // dimensionless literals

    bool has_op(UnitOp op) const;
    void validate() const;
};

// `units = ...` / `var F = 1,1,-2` key-value file (External Interfaces).
UnitSystem parse_unit_system(std::string_view text);

struct GenOptions {
    bool prune = true;
    // Optional start-rule override: whitespace-separated rhs alternatives
    // split on '|', tokens as in the grammar-file format. Unit symbols are
    // named u<e0>_<e1>_... (e.g. <u0_1_0>).
    std::optional<std::string> start_rhs;
};

struct GenStats {
    int unit_nonterminals_before_prune = 0;
    int unit_nonterminals_after_prune = 0;
    int derivations_before_prune = 0;
};

// The dimensional-grammar generator: one expression non-terminal per
// in-range unit vector, derivations for each enabled operator, variables
// and constants as terminals. Symbols unreachable to termination are
// pruned (together with derivations mentioning them) unless disabled.
Grammar generate_grammar(const UnitSystem& sys, const GenOptions& opts = {},
                         GenStats* stats = nullptr);

// Canonical name of the expression non-terminal for unit `u`.
std::string unit_symbol_name(const UnitVector& u);

struct GrammarStats {
    int nonterminal_count = 0;
    int derivation_count = 0;
    long long serialized_bytes = 0;  // canonical grammar-file rendering
};

GrammarStats grammar_stats(const Grammar& g);

// Bottom-up unit inference over a serialized prefix expression, independent
// of any generated grammar. Returns nullopt when the expression is not
// unit-sound. Used as the dimensional-soundness oracle.
std::optional<UnitVector> infer_units(const std::string& expression, const UnitSystem& sys);

} // namespace sggp
