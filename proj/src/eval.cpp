#include "eval.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <sstream>

#include "rng.hpp"

namespace sggp {

namespace {

constexpr double kDivEpsilon = 1e-12;
constexpr double kExpClamp = 1e150;

bool parse_number(const std::string& s, double& out) {
    char* end = nullptr;
    out = std::strtod(s.c_str(), &end);
    return end != s.c_str() && *end == '\0';
}

enum class OpKind { None, Add, Mul, Div, Exp };

OpKind op_from_token(const std::string& tok) {
    if (tok == "add" || tok == "+") return OpKind::Add;
    if (tok == "mul" || tok == "*" || tok == "x" || tok == "\xc3\x97") return OpKind::Mul;
    if (tok == "div" || tok == "/") return OpKind::Div;
    if (tok == "exp") return OpKind::Exp;
    return OpKind::None;
}

// Descends single-symbol derivation chains to the terminal they denote.
const TreeNode* sole_terminal(const TreeNode* n, const Grammar& g) {
    while (!g.terminal(n->symbol)) {
        if (n->children.size() != 1) return nullptr;
        n = &n->children.front();
    }
    return n;
}

} // namespace

CompiledExpr::CompiledExpr(const DerivationTree& t, const Grammar& g,
                           const std::vector<std::string>& variable_order) {
    int max_stack = 0;
    int depth = 0;
    // Recursive compile to postfix.
    auto compile = [&](auto&& self, const TreeNode& n) -> void {
        if (g.terminal(n.symbol)) {
            const std::string& tok = g.name(n.symbol);
            double value;
            if (parse_number(tok, value)) {
                code_.push_back({Op::PushConst, 0, value});
            } else {
                auto it = std::find(variable_order.begin(), variable_order.end(), tok);
                if (it == variable_order.end())
                    throw InvalidArgument("unbound variable '" + tok + "'");
                code_.push_back(
                    {Op::PushVar, static_cast<int>(it - variable_order.begin()), 0.0});
            }
            max_stack = std::max(max_stack, ++depth);
            return;
        }
        if (n.deriv_id < 0)
            throw InvalidArgument("dangling non-terminal '<" + g.name(n.symbol) + ">'");
        if (n.children.size() == 1) {
            self(self, n.children.front());
            return;
        }
        const TreeNode* head = sole_terminal(&n.children.front(), g);
        OpKind op = head ? op_from_token(g.name(head->symbol)) : OpKind::None;
        if (op == OpKind::None)
            throw InvalidArgument("expression head is not an operator");
        std::size_t arity = n.children.size() - 1;
        std::size_t expected = op == OpKind::Exp ? 1 : 2;
        if (arity != expected)
            throw InvalidArgument("operator arity mismatch in expression tree");
        for (std::size_t i = 1; i < n.children.size(); ++i) self(self, n.children[i]);
        switch (op) {
            case OpKind::Add: code_.push_back({Op::Add, 0, 0.0}); break;
            case OpKind::Mul: code_.push_back({Op::Mul, 0, 0.0}); break;
            case OpKind::Div: code_.push_back({Op::Div, 0, 0.0}); break;
            case OpKind::Exp: code_.push_back({Op::Exp, 0, 0.0}); break;
            case OpKind::None: break;
        }
        depth -= static_cast<int>(expected) - 1;
    };
    compile(compile, t);
    stack_.resize(static_cast<std::size_t>(std::max(max_stack, 1)));
}

double CompiledExpr::eval(const std::vector<double>& values) const {
    std::size_t top = 0;
    double* s = stack_.data();
    for (const auto& ins : code_) {
        switch (ins.op) {
            case Op::PushConst: s[top++] = ins.value; break;
            case Op::PushVar: s[top++] = values[static_cast<std::size_t>(ins.var_index)]; break;
            case Op::Add: --top; s[top - 1] += s[top]; break;
            case Op::Mul: --top; s[top - 1] *= s[top]; break;
            case Op::Div: {
                --top;
                double denom = s[top];
                s[top - 1] = std::fabs(denom) < kDivEpsilon ? 1.0 : s[top - 1] / denom;
                break;
            }
            case Op::Exp: {
                double v = std::exp(s[top - 1]);
                s[top - 1] = v > kExpClamp ? kExpClamp : v;
                break;
            }
        }
    }
    return s[0];
}

double eval_expr(const DerivationTree& t, const Grammar& g,
                 const std::map<std::string, double>& bindings) {
    std::vector<std::string> names;
    std::vector<double> values;
    for (const auto& [k, v] : bindings) {
        names.push_back(k);
        values.push_back(v);
    }
    return CompiledExpr(t, g, names).eval(values);
}

double fitness(const CompiledExpr& expr, const std::vector<std::vector<double>>& case_values,
               const std::vector<double>& targets, FitnessMetric metric) {
    double acc = 0.0;
    for (std::size_t i = 0; i < case_values.size(); ++i) {
        double err = expr.eval(case_values[i]) - targets[i];
        acc += metric == FitnessMetric::MeanAbsoluteError ? std::fabs(err) : err * err;
    }
    double mean = acc / static_cast<double>(case_values.size());
    return std::isfinite(mean) ? mean : kWorstFitness;
}

double fitness(const DerivationTree& t, const Grammar& g, const CaseSet& cs,
               FitnessMetric metric) {
    if (cs.cases.empty()) throw InvalidArgument("fitness: empty case set");
    std::vector<std::string> names;
    for (const auto& [k, v] : cs.cases.front().variables) names.push_back(k);
    CompiledExpr expr(t, g, names);
    std::vector<std::vector<double>> values;
    std::vector<double> targets;
    for (const auto& c : cs.cases) {
        std::vector<double> row;
        for (const auto& name : names) row.push_back(c.variables.at(name));
        values.push_back(std::move(row));
        targets.push_back(c.target);
    }
    return fitness(expr, values, targets, metric);
}

double kelvin_voigt(double F, double K, double C, double t) {
    if (K <= 0.0 || C <= 0.0) throw InvalidArgument("kelvin_voigt: K and C must be positive");
    return F / K * (1.0 - std::exp(-K * t / C));
}

double local_optimum_value(double F, double K, double C, double t) {
    double ck = C / K;
    return (2.0 * t * t * F / K) / (ck * ck + 2.0 * t * t);
}

CaseSet generate_cases(const CaseGenConfig& cfg, std::uint64_t seed, CaseRole role) {
    if (cfg.n_materials <= 0 || cfg.time_points <= 0)
        throw InvalidArgument("generate_cases: counts must be positive");
    if (cfg.param_min <= 0.0 || cfg.param_max < cfg.param_min)
        throw InvalidArgument("generate_cases: bad parameter range");

    Rng rng = Rng(seed).substream(role == CaseRole::Train ? "cases/train" : "cases/test");
    CaseSet cs;
    cs.role = role;
    double max_ck = 0.0;
    for (int i = 0; i < cfg.n_materials; ++i) {
        auto draw = [&] { return cfg.param_min + rng.uniform() * (cfg.param_max - cfg.param_min); };
        double K = draw(), C = draw(), F = draw();
        cs.materials.push_back({K, C, F});
        max_ck = std::max(max_ck, C / K);
    }
    double t_max = cfg.t_max_factor * max_ck;
    for (int i = 0; i < cfg.time_points; ++i) {
        double t = cfg.time_points == 1
                       ? 0.0
                       : t_max * static_cast<double>(i) / static_cast<double>(cfg.time_points - 1);
        cs.time_grid.push_back(t);
    }
    for (const auto& [K, C, F] : cs.materials) {
        for (double t : cs.time_grid) {
            FitnessCase fc;
            fc.variables = {{"F", F}, {"K", K}, {"C", C}, {"t", t}};
            fc.target = kelvin_voigt(F, K, C, t);
            cs.cases.push_back(std::move(fc));
        }
    }
    return cs;
}

double check_local_optimum(const CaseSet& cs, FitnessMetric metric) {
    if (cs.cases.empty()) throw InvalidArgument("check_local_optimum: empty case set");
    double acc = 0.0;
    for (const auto& c : cs.cases) {
        double pred = local_optimum_value(c.variables.at("F"), c.variables.at("K"),
                                          c.variables.at("C"), c.variables.at("t"));
        double err = pred - c.target;
        acc += metric == FitnessMetric::MeanAbsoluteError ? std::fabs(err) : err * err;
    }
    return acc / static_cast<double>(cs.cases.size());
}

std::string caseset_to_csv(const CaseSet& cs) {
    std::string out = "F,K,C,t,target\n";
    char buf[160];
    for (const auto& c : cs.cases) {
        std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g,%.17g,%.17g\n", c.variables.at("F"),
                      c.variables.at("K"), c.variables.at("C"), c.variables.at("t"), c.target);
        out += buf;
    }
    return out;
}

CaseSet caseset_from_csv(std::string_view csv) {
    CaseSet cs;
    std::istringstream in{std::string(csv)};
    std::string line;
    if (!std::getline(in, line) || line.rfind("F,K,C,t,target", 0) != 0)
        throw ParseError("case CSV must start with header 'F,K,C,t,target'");
    int line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        double F, K, C, t, target;
        if (std::sscanf(line.c_str(), "%lf,%lf,%lf,%lf,%lf", &F, &K, &C, &t, &target) != 5)
            throw ParseError("malformed case row", line_no, 1);
        FitnessCase fc;
        fc.variables = {{"F", F}, {"K", K}, {"C", C}, {"t", t}};
        fc.target = target;
        cs.cases.push_back(std::move(fc));
        std::array<double, 3> mat{K, C, F};
        if (cs.materials.empty() || cs.materials.back() != mat) cs.materials.push_back(mat);
    }
    for (const auto& c : cs.cases) {
        if (c.variables.at("K") != cs.materials.front()[0]) break;
        cs.time_grid.push_back(c.variables.at("t"));
    }
    return cs;
}

} // namespace sggp
