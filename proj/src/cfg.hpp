#pragma once

#include <cstdint>
#include <limits>
#include <string>
#include <string_view>
#include <vector>

#include "error.hpp"

namespace sggp {

using SymbolId = std::int32_t;

// One right-hand-side alternative of a production rule. `id` is the
// grammar-wide dense derivation index; weights are addressed with it.
struct Derivation {
    std::vector<SymbolId> rhs;
    int id = -1;
};

struct ProductionRule {
    SymbolId lhs = -1;
    std::vector<Derivation> alts;
};

// Context-free grammar {S, N, T, P}. Immutable after construction.
class Grammar {
public:
    SymbolId start = -1;
    std::vector<std::string> symbol_names;  // id -> name
    std::vector<bool> is_terminal;          // id -> terminal?
    std::vector<SymbolId> nonterminals;     // declaration order
    std::vector<SymbolId> terminals;        // declaration order
    std::vector<ProductionRule> rules;      // one per nonterminal, same order
    std::vector<int> rule_index;            // symbol id -> index into rules, -1 for terminals

    struct DerivationLoc {
        SymbolId lhs;
        int alt;  // index within the rule
    };
    std::vector<DerivationLoc> derivation_locs;  // dense derivation id -> location

    int total_derivations() const { return static_cast<int>(derivation_locs.size()); }
    std::size_t symbol_count() const { return symbol_names.size(); }

    const std::string& name(SymbolId s) const { return symbol_names[s]; }
    bool terminal(SymbolId s) const { return is_terminal[s]; }

    const ProductionRule& rule_for(SymbolId nt) const {
        return rules[static_cast<std::size_t>(rule_index[nt])];
    }
    const Derivation& derivation(int id) const {
        const auto& loc = derivation_locs[static_cast<std::size_t>(id)];
        return rule_for(loc.lhs).alts[static_cast<std::size_t>(loc.alt)];
    }

    SymbolId find_symbol(std::string_view name) const;

    // Assigns dense derivation ids and builds the lookup tables; called by
    // every constructor path after rules are in place.
    void finalize();
    void validate() const;

    bool operator==(const Grammar& other) const;
};

// Depth needed to rewrite each symbol into an all-terminal tree.
// kInfeasible marks symbols with no terminating derivation.
struct MinDepthTable {
    static constexpr int kInfeasible = std::numeric_limits<int>::max() / 2;

    std::vector<int> symbol_depth;      // symbol id -> min depth (terminals: 0)
    std::vector<int> derivation_depth;  // derivation id -> 1 + max over rhs

    bool feasible(SymbolId s) const { return symbol_depth[s] < kInfeasible; }
};

// Genotype: which derivation rewrote each non-terminal occurrence.
// Terminal leaves have deriv_id == -1 and no children.
struct TreeNode {
    SymbolId symbol = -1;
    int deriv_id = -1;
    std::vector<TreeNode> children;
};

using DerivationTree = TreeNode;

Grammar parse_grammar(std::string_view text);
std::string render_grammar(const Grammar& g);

MinDepthTable compute_min_depths(const Grammar& g);

// Derivation ids of `nt` that can still terminate within `remaining_depth`
// levels (the rewritten node occupies one level). Rule order preserved.
std::vector<int> admissible_derivations(const Grammar& g, const MinDepthTable& table,
                                        SymbolId nt, int remaining_depth);

// Prefix-notation rendering of the parse tree ("(+ X X)").
std::string serialize_tree(const DerivationTree& t, const Grammar& g);

// Re-derives a tree from its prefix rendering; inverse of serialize_tree
// for self-produced trees. Throws ParseError when no derivation matches.
DerivationTree parse_expression(const Grammar& g, std::string_view text);

// Tree measurements.
int tree_node_count(const DerivationTree& t);       // derivation-tree nodes
int tree_depth(const DerivationTree& t);            // root at level 1
int parse_tree_node_count(const DerivationTree& t, const Grammar& g);  // frontier terminals

// True when every rewriting step in `t` names a real derivation of its
// symbol and the frontier is all terminals.
bool tree_conforms(const DerivationTree& t, const Grammar& g);

} // namespace sggp
