#include "units.hpp"

#include <algorithm>
#include <cstdlib>
#include <map>
#include <sstream>
#include <unordered_map>

namespace sggp {

UnitVector unit_add(const UnitVector& a, const UnitVector& b) {
    if (a.size() != b.size()) throw InvalidArgument("unit_add: mismatched unit lengths");
    UnitVector out(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] + b[i];
    return out;
}

UnitVector unit_sub(const UnitVector& a, const UnitVector& b) {
    if (a.size() != b.size()) throw InvalidArgument("unit_sub: mismatched unit lengths");
    UnitVector out(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] - b[i];
    return out;
}

bool unit_in_range(const UnitVector& u, int lo, int hi) {
    return std::all_of(u.begin(), u.end(), [&](int e) { return lo <= e && e <= hi; });
}

bool UnitSystem::has_op(UnitOp op) const {
    return std::find(operators.begin(), operators.end(), op) != operators.end();
}

void UnitSystem::validate() const {
    if (elementary_units.empty()) throw InvalidArgument("unit system declares no elementary units");
    if (range_lo > range_hi) throw InvalidArgument("empty exponent range");
    auto check_len = [&](const UnitVector& u, const std::string& what) {
        if (u.size() != elementary_units.size())
            throw InvalidArgument(what + ": expected " +
                                  std::to_string(elementary_units.size()) + " exponents, got " +
                                  std::to_string(u.size()));
    };
    for (const auto& [name, u] : variables) {
        check_len(u, "variable " + name);
        if (!unit_in_range(u, range_lo, range_hi))
            throw InvalidArgument("variable " + name + " unit out of exponent range");
    }
    check_len(target_unit, "target unit");
    if (!unit_in_range(target_unit, range_lo, range_hi))
        throw InvalidArgument("target unit out of exponent range");
}

namespace {

std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : s) {
        if (c == sep) {
            out.push_back(cur);
            cur.clear();
        } else {
            cur += c;
        }
    }
    out.push_back(cur);
    return out;
}

std::string trim(const std::string& s) {
    std::size_t b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    std::size_t e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

UnitVector parse_exponents(const std::string& value, int line) {
    UnitVector u;
    for (const auto& part : split(value, ',')) {
        std::string p = trim(part);
        if (p.empty()) throw ParseError("empty exponent", line, 1);
        char* end = nullptr;
        long v = std::strtol(p.c_str(), &end, 10);
        if (end == p.c_str() || *end != '\0')
            throw ParseError("bad exponent '" + p + "'", line, 1);
        u.push_back(static_cast<int>(v));
    }
    return u;
}

} // namespace

UnitSystem parse_unit_system(std::string_view text) {
    UnitSystem sys;
    sys.range_lo = 0;
    sys.range_hi = 0;
    bool saw_units = false, saw_range = false, saw_target = false, saw_ops = false;

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
        std::string key = trim(line.substr(0, eq));
        std::string value = trim(line.substr(eq + 1));
        if (key == "units") {
            for (const auto& part : split(value, ',')) sys.elementary_units.push_back(trim(part));
            saw_units = true;
        } else if (key == "range") {
            auto dots = value.find("..");
            if (dots == std::string::npos)
                throw ParseError("range must look like '-2..2'", line_no, 1);
            sys.range_lo = std::atoi(trim(value.substr(0, dots)).c_str());
            sys.range_hi = std::atoi(trim(value.substr(dots + 2)).c_str());
            saw_range = true;
        } else if (key.rfind("var ", 0) == 0) {
            std::string name = trim(key.substr(4));
            if (name.empty()) throw ParseError("variable without a name", line_no, 1);
            sys.variables.emplace_back(name, parse_exponents(value, line_no));
        } else if (key == "target") {
            sys.target_unit = parse_exponents(value, line_no);
            saw_target = true;
        } else if (key == "ops") {
            for (const auto& part : split(value, ',')) {
                std::string op = trim(part);
                if (op == "add")
                    sys.operators.push_back(UnitOp::Add);
                else if (op == "mul")
                    sys.operators.push_back(UnitOp::Mul);
                else if (op == "div" || op == "protected_div")
                    sys.operators.push_back(UnitOp::ProtectedDiv);
                else if (op == "exp" || op == "exp_func")
                    sys.operators.push_back(UnitOp::ExpFunc);
                else
                    throw ParseError("unknown operator '" + op + "'", line_no, 1);
            }
            saw_ops = true;
        } else if (key == "constants") {
            for (const auto& part : split(value, ',')) {
                std::string c = trim(part);
                if (!c.empty()) sys.constants.push_back(c);
            }
        } else {
            throw ParseError("unknown key '" + key + "'", line_no, 1);
        }
    }
    if (!saw_units) throw ParseError("missing 'units' declaration");
    if (!saw_range) throw ParseError("missing 'range' declaration");
    if (!saw_target) throw ParseError("missing 'target' declaration");
    if (!saw_ops) sys.operators = {UnitOp::Add, UnitOp::Mul, UnitOp::ProtectedDiv, UnitOp::ExpFunc};
    sys.validate();
    return sys;
}

std::string unit_symbol_name(const UnitVector& u) {
    std::string name = "u";
    for (std::size_t i = 0; i < u.size(); ++i) {
        if (i > 0) name += '_';
        name += std::to_string(u[i]);
    }
    return name;
}

namespace {

// All unit vectors in range, lexicographic with the first component most
// significant. This fixes derivation ordering, hence weight indexing.
std::vector<UnitVector> enumerate_units(std::size_t dims, int lo, int hi) {
    std::vector<UnitVector> out;
    UnitVector cur(dims, lo);
    for (;;) {
        out.push_back(cur);
        std::size_t i = dims;
        while (i > 0) {
            --i;
            if (cur[i] < hi) {
                ++cur[i];
                std::fill(cur.begin() + static_cast<std::ptrdiff_t>(i) + 1, cur.end(), lo);
                break;
            }
            if (i == 0) return out;
        }
    }
}

struct Builder {
    Grammar g;
    std::unordered_map<std::string, SymbolId> ids;

    SymbolId intern(const std::string& name, bool terminal) {
        auto it = ids.find((terminal ? "t:" : "n:") + name);
        if (it != ids.end()) return it->second;
        SymbolId id = static_cast<SymbolId>(g.symbol_names.size());
        g.symbol_names.push_back(name);
        g.is_terminal.push_back(terminal);
        (terminal ? g.terminals : g.nonterminals).push_back(id);
        ids.emplace((terminal ? "t:" : "n:") + name, id);
        return id;
    }
};

} // namespace

Grammar generate_grammar(const UnitSystem& sys, const GenOptions& opts, GenStats* stats) {
    sys.validate();
    if (sys.variables.empty()) throw InvalidArgument("unit system declares no variables");

    const auto units = enumerate_units(sys.elementary_units.size(), sys.range_lo, sys.range_hi);
    const UnitVector zero(sys.elementary_units.size(), 0);
    const bool zero_in_range = unit_in_range(zero, sys.range_lo, sys.range_hi);

    Builder b;
    SymbolId start = b.intern("start", false);
    std::map<UnitVector, SymbolId> unit_sym;
    for (const auto& u : units) unit_sym[u] = b.intern(unit_symbol_name(u), false);

    // Start rule first so the start symbol owns the first derivations.
    {
        ProductionRule pr;
        pr.lhs = start;
        if (opts.start_rhs) {
            for (const auto& alt_text : split(*opts.start_rhs, '|')) {
                Derivation d;
                std::istringstream toks{alt_text};
                std::string tok;
                while (toks >> tok) {
                    if (tok.size() > 2 && tok.front() == '<' && tok.back() == '>') {
                        std::string name = tok.substr(1, tok.size() - 2);
                        auto it = b.ids.find("n:" + name);
                        if (it == b.ids.end())
                            throw InvalidArgument("start template references unknown symbol <" +
                                                  name + ">");
                        d.rhs.push_back(it->second);
                    } else {
                        d.rhs.push_back(b.intern(tok, true));
                    }
                }
                if (d.rhs.empty()) throw InvalidArgument("empty start template alternative");
                pr.alts.push_back(std::move(d));
            }
        } else {
            Derivation d;
            d.rhs.push_back(unit_sym.at(sys.target_unit));
            pr.alts.push_back(std::move(d));
        }
        b.g.rules.push_back(std::move(pr));
    }

    // Operator ordering is alphabetical (add, div, exp, mul), operand
    // pairs lexicographic; then variables, then constants.
    for (const auto& u : units) {
        ProductionRule pr;
        pr.lhs = unit_sym.at(u);
        if (sys.has_op(UnitOp::Add)) {
            Derivation d;
            d.rhs = {b.intern("add", true), unit_sym.at(u), unit_sym.at(u)};
            pr.alts.push_back(std::move(d));
        }
        if (sys.has_op(UnitOp::ProtectedDiv)) {
            for (const auto& u1 : units) {
                UnitVector u2 = unit_sub(u1, u);  // u1 / u2 has unit u
                if (!unit_in_range(u2, sys.range_lo, sys.range_hi)) continue;
                Derivation d;
                d.rhs = {b.intern("div", true), unit_sym.at(u1), unit_sym.at(u2)};
                pr.alts.push_back(std::move(d));
            }
        }
        if (sys.has_op(UnitOp::ExpFunc) && u == zero && zero_in_range) {
            Derivation d;
            d.rhs = {b.intern("exp", true), unit_sym.at(zero)};
            pr.alts.push_back(std::move(d));
        }
        if (sys.has_op(UnitOp::Mul)) {
            for (const auto& u1 : units) {
                UnitVector u2 = unit_sub(u, u1);  // u1 * u2 has unit u
                if (!unit_in_range(u2, sys.range_lo, sys.range_hi)) continue;
                Derivation d;
                d.rhs = {b.intern("mul", true), unit_sym.at(u1), unit_sym.at(u2)};
                pr.alts.push_back(std::move(d));
            }
        }
        for (const auto& [name, vu] : sys.variables) {
            if (vu != u) continue;
            Derivation d;
            d.rhs = {b.intern(name, true)};
            pr.alts.push_back(std::move(d));
        }
        if (u == zero) {
            for (const auto& c : sys.constants) {
                Derivation d;
                d.rhs = {b.intern(c, true)};
                pr.alts.push_back(std::move(d));
            }
        }
        b.g.rules.push_back(std::move(pr));
    }

    b.g.start = start;
    b.g.finalize();

    if (stats) {
        stats->unit_nonterminals_before_prune = static_cast<int>(units.size());
        stats->derivations_before_prune = b.g.total_derivations();
        stats->unit_nonterminals_after_prune = static_cast<int>(units.size());
    }
    if (!opts.prune) {
        b.g.validate();
        return std::move(b.g);
    }

    // Drop unit symbols that cannot reach an all-terminal tree, then every
    // derivation that mentions them. The derivable language is unchanged.
    MinDepthTable table = compute_min_depths(b.g);
    if (!table.feasible(b.g.start))
        throw InfeasibleGrammar("generated grammar cannot derive any expression of the target unit");

    Builder out;
    std::unordered_map<SymbolId, SymbolId> remap;
    for (SymbolId nt : b.g.nonterminals)
        if (table.feasible(nt)) remap[nt] = out.intern(b.g.name(nt), false);
    int kept_units = 0;
    for (const auto& [u, sym] : unit_sym)
        if (table.feasible(sym)) ++kept_units;
    for (const auto& rule : b.g.rules) {
        if (!table.feasible(rule.lhs)) continue;
        ProductionRule pr;
        pr.lhs = remap.at(rule.lhs);
        for (const auto& alt : rule.alts) {
            if (table.derivation_depth[static_cast<std::size_t>(alt.id)] >=
                MinDepthTable::kInfeasible)
                continue;
            Derivation d;
            for (SymbolId s : alt.rhs)
                d.rhs.push_back(b.g.terminal(s) ? out.intern(b.g.name(s), true) : remap.at(s));
            pr.alts.push_back(std::move(d));
        }
        out.g.rules.push_back(std::move(pr));
    }
    out.g.start = remap.at(b.g.start);
    out.g.finalize();
    out.g.validate();
    if (stats) stats->unit_nonterminals_after_prune = kept_units;
    return std::move(out.g);
}

GrammarStats grammar_stats(const Grammar& g) {
    GrammarStats s;
    s.nonterminal_count = static_cast<int>(g.nonterminals.size());
    s.derivation_count = g.total_derivations();
    s.serialized_bytes = static_cast<long long>(render_grammar(g).size());
    return s;
}

namespace {

struct ExprAtom;
struct ExprView {
    // Either an atom token or a parenthesized group of sub-expressions.
    std::string atom;
    std::vector<ExprView> args;
    bool is_group = false;
};

ExprView parse_prefix(const std::vector<std::string>& tokens, std::size_t& pos) {
    if (pos >= tokens.size()) throw ParseError("unexpected end of expression");
    if (tokens[pos] == "(") {
        ++pos;
        ExprView group;
        group.is_group = true;
        while (pos < tokens.size() && tokens[pos] != ")")
            group.args.push_back(parse_prefix(tokens, pos));
        if (pos >= tokens.size()) throw ParseError("missing ')'");
        ++pos;
        return group;
    }
    ExprView atom;
    atom.atom = tokens[pos++];
    return atom;
}

bool is_number(const std::string& s) {
    char* end = nullptr;
    std::strtod(s.c_str(), &end);
    return end != s.c_str() && *end == '\0';
}

std::optional<UnitVector> infer(const ExprView& e, const UnitSystem& sys) {
    const UnitVector zero(sys.elementary_units.size(), 0);
    if (!e.is_group) {
        for (const auto& [name, u] : sys.variables)
            if (name == e.atom) return u;
        if (is_number(e.atom)) return zero;
        return std::nullopt;
    }
    if (e.args.empty() || e.args.front().is_group) return std::nullopt;
    const std::string& op = e.args.front().atom;
    std::vector<UnitVector> arg_units;
    for (std::size_t i = 1; i < e.args.size(); ++i) {
        auto u = infer(e.args[i], sys);
        if (!u) return std::nullopt;
        arg_units.push_back(std::move(*u));
    }
    if ((op == "add" || op == "+") && arg_units.size() == 2)
        return arg_units[0] == arg_units[1] ? std::optional(arg_units[0]) : std::nullopt;
    if ((op == "mul" || op == "*" || op == "x") && arg_units.size() == 2)
        return unit_add(arg_units[0], arg_units[1]);
    if ((op == "div" || op == "/") && arg_units.size() == 2)
        return unit_sub(arg_units[0], arg_units[1]);
    if (op == "exp" && arg_units.size() == 1)
        return arg_units[0] == zero ? std::optional(zero) : std::nullopt;
    return std::nullopt;
}

std::vector<std::string> tokenize_expr(const std::string& text) {
    std::vector<std::string> tokens;
    std::string cur;
    auto flush = [&] {
        if (!cur.empty()) {
            tokens.push_back(cur);
            cur.clear();
        }
    };
    for (char c : text) {
        if (c == '(' || c == ')') {
            flush();
            tokens.emplace_back(1, c);
        } else if (c == ' ' || c == '\t' || c == '\n' || c == '\r') {
            flush();
        } else {
            cur += c;
        }
    }
    flush();
    return tokens;
}

} // namespace

std::optional<UnitVector> infer_units(const std::string& expression, const UnitSystem& sys) {
    auto tokens = tokenize_expr(expression);
    std::size_t pos = 0;
    ExprView view = parse_prefix(tokens, pos);
    if (pos != tokens.size()) return std::nullopt;
    return infer(view, sys);
}

} // namespace sggp
