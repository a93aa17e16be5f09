#include "cfg.hpp"

#include <algorithm>
#include <map>
#include <optional>
#include <sstream>
#include <unordered_map>

namespace sggp {

namespace {

struct Token {
    enum Kind { NonTerminal, Terminal, Define, Pipe, Semi, End } kind;
    std::string text;  // symbol name, brackets stripped for non-terminals
    int line;
    int col;
};

class Lexer {
public:
    explicit Lexer(std::string_view text) : text_(text) {}

    Token next() {
        skip_ws_and_comments();
        int line = line_, col = col_;
        if (pos_ >= text_.size()) return {Token::End, "", line, col};
        char c = text_[pos_];
        if (c == '<') {
            std::string name;
            advance();
            while (pos_ < text_.size() && text_[pos_] != '>' && text_[pos_] != '\n') {
                name += text_[pos_];
                advance();
            }
            if (pos_ >= text_.size() || text_[pos_] != '>')
                throw ParseError("unterminated non-terminal '<" + name + "'", line, col);
            advance();
            if (name.empty()) throw ParseError("empty non-terminal name", line, col);
            return {Token::NonTerminal, name, line, col};
        }
        if (c == '|') {
            advance();
            return {Token::Pipe, "|", line, col};
        }
        if (c == ';') {
            advance();
            return {Token::Semi, ";", line, col};
        }
        std::string word;
        while (pos_ < text_.size() && !is_break(text_[pos_])) {
            word += text_[pos_];
            advance();
        }
        if (word == "::=") return {Token::Define, word, line, col};
        return {Token::Terminal, word, line, col};
    }

private:
    static bool is_break(char c) {
        return c == ' ' || c == '\t' || c == '\r' || c == '\n' || c == '<' || c == '|' ||
               c == ';' || c == '#';
    }

    void skip_ws_and_comments() {
        while (pos_ < text_.size()) {
            char c = text_[pos_];
            if (c == '#') {
                while (pos_ < text_.size() && text_[pos_] != '\n') advance();
            } else if (c == ' ' || c == '\t' || c == '\r' || c == '\n') {
                advance();
            } else {
                break;
            }
        }
    }

    void advance() {
        if (text_[pos_] == '\n') {
            ++line_;
            col_ = 1;
        } else {
            ++col_;
        }
        ++pos_;
    }

    std::string_view text_;
    std::size_t pos_ = 0;
    int line_ = 1;
    int col_ = 1;
};

// Raw parse product before symbol resolution.
struct RawRule {
    std::string lhs;
    std::vector<std::vector<Token>> alts;
    int line;
    int col;
};

} // namespace

SymbolId Grammar::find_symbol(std::string_view name) const {
    for (std::size_t i = 0; i < symbol_names.size(); ++i)
        if (symbol_names[i] == name) return static_cast<SymbolId>(i);
    return -1;
}

void Grammar::finalize() {
    derivation_locs.clear();
    rule_index.assign(symbol_names.size(), -1);
    for (std::size_t r = 0; r < rules.size(); ++r) {
        rule_index[static_cast<std::size_t>(rules[r].lhs)] = static_cast<int>(r);
    }
    for (auto& rule : rules) {
        for (std::size_t a = 0; a < rule.alts.size(); ++a) {
            rule.alts[a].id = static_cast<int>(derivation_locs.size());
            derivation_locs.push_back({rule.lhs, static_cast<int>(a)});
        }
    }
}

void Grammar::validate() const {
    if (start < 0 || terminal(start)) throw InvalidArgument("start symbol must be a non-terminal");
    if (rule_index[static_cast<std::size_t>(start)] < 0)
        throw InvalidArgument("start symbol has no production rule");
    for (SymbolId nt : nonterminals) {
        if (rule_index[static_cast<std::size_t>(nt)] < 0)
            throw InvalidArgument("non-terminal '" + name(nt) + "' has no production rule");
        const auto& rule = rule_for(nt);
        if (rule.alts.empty())
            throw InvalidArgument("rule for '" + name(nt) + "' has no derivations");
        for (const auto& alt : rule.alts)
            if (alt.rhs.empty())
                throw InvalidArgument("empty derivation in rule for '" + name(nt) + "'");
    }
}

bool Grammar::operator==(const Grammar& other) const {
    return render_grammar(*this) == render_grammar(other);
}

Grammar parse_grammar(std::string_view text) {
    Lexer lex(text);
    std::optional<Token> start_directive;
    std::vector<RawRule> raw;

    Token t = lex.next();
    // Optional leading `start <symbol> ;` directive.
    if (t.kind == Token::Terminal && t.text == "start") {
        Token sym = lex.next();
        if (sym.kind != Token::NonTerminal)
            throw ParseError("expected non-terminal after 'start'", sym.line, sym.col);
        Token semi = lex.next();
        if (semi.kind != Token::Semi)
            throw ParseError("expected ';' after start directive", semi.line, semi.col);
        start_directive = sym;
        t = lex.next();
    }
    while (t.kind != Token::End) {
        if (t.kind != Token::NonTerminal)
            throw ParseError("expected rule left-hand side '<name>'", t.line, t.col);
        RawRule rule{t.text, {}, t.line, t.col};
        Token def = lex.next();
        if (def.kind != Token::Define) throw ParseError("expected '::='", def.line, def.col);
        std::vector<Token> alt;
        for (;;) {
            Token tok = lex.next();
            if (tok.kind == Token::Semi || tok.kind == Token::Pipe) {
                if (alt.empty()) throw ParseError("empty derivation", tok.line, tok.col);
                rule.alts.push_back(std::move(alt));
                alt.clear();
                if (tok.kind == Token::Semi) break;
            } else if (tok.kind == Token::NonTerminal || tok.kind == Token::Terminal) {
                alt.push_back(std::move(tok));
            } else {
                throw ParseError("unexpected end of input in rule for '<" + rule.lhs + ">'",
                                 tok.line, tok.col);
            }
        }
        raw.push_back(std::move(rule));
        t = lex.next();
    }
    if (raw.empty()) throw ParseError("grammar has no rules");

    Grammar g;
    std::unordered_map<std::string, SymbolId> nt_ids;
    for (const auto& rule : raw) {
        if (nt_ids.count(rule.lhs))
            throw ParseError("duplicate rule for '<" + rule.lhs + ">'", rule.line, rule.col);
        SymbolId id = static_cast<SymbolId>(g.symbol_names.size());
        g.symbol_names.push_back(rule.lhs);
        g.is_terminal.push_back(false);
        g.nonterminals.push_back(id);
        nt_ids.emplace(rule.lhs, id);
    }
    std::unordered_map<std::string, SymbolId> term_ids;
    for (const auto& rule : raw) {
        ProductionRule pr;
        pr.lhs = nt_ids.at(rule.lhs);
        for (const auto& alt_tokens : rule.alts) {
            Derivation d;
            for (const auto& tok : alt_tokens) {
                if (tok.kind == Token::NonTerminal) {
                    auto it = nt_ids.find(tok.text);
                    if (it == nt_ids.end())
                        throw ParseError("undeclared non-terminal '<" + tok.text +
                                             ">' (no rule defines it)",
                                         tok.line, tok.col);
                    d.rhs.push_back(it->second);
                } else {
                    auto it = term_ids.find(tok.text);
                    if (it == term_ids.end()) {
                        SymbolId id = static_cast<SymbolId>(g.symbol_names.size());
                        g.symbol_names.push_back(tok.text);
                        g.is_terminal.push_back(true);
                        g.terminals.push_back(id);
                        it = term_ids.emplace(tok.text, id).first;
                    }
                    d.rhs.push_back(it->second);
                }
            }
            pr.alts.push_back(std::move(d));
        }
        g.rules.push_back(std::move(pr));
    }
    if (start_directive) {
        auto it = nt_ids.find(start_directive->text);
        if (it == nt_ids.end())
            throw ParseError("start symbol '<" + start_directive->text + ">' has no rule",
                             start_directive->line, start_directive->col);
        g.start = it->second;
    } else {
        g.start = g.rules.front().lhs;
    }
    g.finalize();
    g.validate();
    return g;
}

std::string render_grammar(const Grammar& g) {
    std::ostringstream out;
    out << "start <" << g.name(g.start) << ">;\n";
    for (const auto& rule : g.rules) {
        out << '<' << g.name(rule.lhs) << "> ::= ";
        for (std::size_t a = 0; a < rule.alts.size(); ++a) {
            if (a > 0) out << " | ";
            const auto& rhs = rule.alts[a].rhs;
            for (std::size_t i = 0; i < rhs.size(); ++i) {
                if (i > 0) out << ' ';
                if (g.terminal(rhs[i]))
                    out << g.name(rhs[i]);
                else
                    out << '<' << g.name(rhs[i]) << '>';
            }
        }
        out << " ;\n";
    }
    return out.str();
}

MinDepthTable compute_min_depths(const Grammar& g) {
    MinDepthTable table;
    table.symbol_depth.assign(g.symbol_count(), MinDepthTable::kInfeasible);
    table.derivation_depth.assign(static_cast<std::size_t>(g.total_derivations()),
                                  MinDepthTable::kInfeasible);
    for (SymbolId t : g.terminals) table.symbol_depth[static_cast<std::size_t>(t)] = 0;

    // Least fixpoint by repeated sweeps; depths only decrease.
    bool changed = true;
    while (changed) {
        changed = false;
        for (const auto& rule : g.rules) {
            int best = MinDepthTable::kInfeasible;
            for (const auto& alt : rule.alts) {
                int deepest = 0;
                for (SymbolId s : alt.rhs)
                    deepest = std::max(deepest, table.symbol_depth[static_cast<std::size_t>(s)]);
                int d = deepest >= MinDepthTable::kInfeasible ? MinDepthTable::kInfeasible
                                                              : 1 + deepest;
                if (d < table.derivation_depth[static_cast<std::size_t>(alt.id)]) {
                    table.derivation_depth[static_cast<std::size_t>(alt.id)] = d;
                    changed = true;
                }
                best = std::min(best, d);
            }
            auto& cell = table.symbol_depth[static_cast<std::size_t>(rule.lhs)];
            if (best < cell) {
                cell = best;
                changed = true;
            }
        }
    }
    return table;
}

std::vector<int> admissible_derivations(const Grammar& g, const MinDepthTable& table,
                                        SymbolId nt, int remaining_depth) {
    if (g.terminal(nt)) throw InvalidArgument("admissible_derivations: '" + g.name(nt) +
                                              "' is a terminal");
    std::vector<int> out;
    for (const auto& alt : g.rule_for(nt).alts)
        if (table.derivation_depth[static_cast<std::size_t>(alt.id)] <= remaining_depth)
            out.push_back(alt.id);
    return out;
}

namespace {

void serialize_node(const TreeNode& n, const Grammar& g, std::string& out) {
    if (g.terminal(n.symbol)) {
        out += g.name(n.symbol);
        return;
    }
    if (n.deriv_id < 0)
        throw InvalidArgument("dangling non-terminal '<" + g.name(n.symbol) +
                              ">' in tree frontier");
    if (n.children.size() == 1) {
        serialize_node(n.children.front(), g, out);
        return;
    }
    out += '(';
    for (std::size_t i = 0; i < n.children.size(); ++i) {
        if (i > 0) out += ' ';
        serialize_node(n.children[i], g, out);
    }
    out += ')';
}

} // namespace

std::string serialize_tree(const DerivationTree& t, const Grammar& g) {
    std::string out;
    serialize_node(t, g, out);
    return out;
}

namespace {

std::vector<std::string> tokenize_expression(std::string_view text) {
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
        } else if (c == ' ' || c == '\t' || c == '\r' || c == '\n') {
            flush();
        } else {
            cur += c;
        }
    }
    flush();
    return tokens;
}

// Packrat matcher over (symbol, position); first matching derivation wins,
// mirroring the serializer's single-symbol collapse rule.
class ExprMatcher {
public:
    ExprMatcher(const Grammar& g, std::vector<std::string> tokens)
        : g_(g), tokens_(std::move(tokens)) {}

    std::optional<std::pair<TreeNode, std::size_t>> match(SymbolId sym, std::size_t pos) {
        if (g_.terminal(sym)) {
            if (pos < tokens_.size() && tokens_[pos] == g_.name(sym)) {
                TreeNode leaf;
                leaf.symbol = sym;
                return std::make_pair(std::move(leaf), pos + 1);
            }
            return std::nullopt;
        }
        auto key = std::make_pair(sym, pos);
        auto memo = memo_.find(key);
        if (memo != memo_.end()) return memo->second;

        std::optional<std::pair<TreeNode, std::size_t>> result;
        for (const auto& alt : g_.rule_for(sym).alts) {
            auto attempt = match_alt(sym, alt, pos);
            if (attempt) {
                result = std::move(attempt);
                break;
            }
        }
        memo_.emplace(key, result);
        return result;
    }

    std::size_t token_count() const { return tokens_.size(); }

private:
    std::optional<std::pair<TreeNode, std::size_t>> match_alt(SymbolId sym, const Derivation& alt,
                                                              std::size_t pos) {
        TreeNode node;
        node.symbol = sym;
        node.deriv_id = alt.id;
        std::size_t p = pos;
        bool grouped = alt.rhs.size() > 1;
        if (grouped) {
            if (p >= tokens_.size() || tokens_[p] != "(") return std::nullopt;
            ++p;
        }
        for (SymbolId child_sym : alt.rhs) {
            auto child = match(child_sym, p);
            if (!child) return std::nullopt;
            node.children.push_back(std::move(child->first));
            p = child->second;
        }
        if (grouped) {
            if (p >= tokens_.size() || tokens_[p] != ")") return std::nullopt;
            ++p;
        }
        return std::make_pair(std::move(node), p);
    }

    const Grammar& g_;
    std::vector<std::string> tokens_;
    std::map<std::pair<SymbolId, std::size_t>,
             std::optional<std::pair<TreeNode, std::size_t>>>
        memo_;
};

} // namespace

DerivationTree parse_expression(const Grammar& g, std::string_view text) {
    ExprMatcher matcher(g, tokenize_expression(text));
    auto result = matcher.match(g.start, 0);
    if (!result || result->second != matcher.token_count())
        throw ParseError("expression does not derive from the grammar: '" +
                         std::string(text) + "'");
    return std::move(result->first);
}

int tree_node_count(const DerivationTree& t) {
    int n = 1;
    for (const auto& c : t.children) n += tree_node_count(c);
    return n;
}

int tree_depth(const DerivationTree& t) {
    int deepest = 0;
    for (const auto& c : t.children) deepest = std::max(deepest, tree_depth(c));
    return 1 + deepest;
}

int parse_tree_node_count(const DerivationTree& t, const Grammar& g) {
    if (g.terminal(t.symbol)) return 1;
    int n = 0;
    for (const auto& c : t.children) n += parse_tree_node_count(c, g);
    return n;
}

bool tree_conforms(const DerivationTree& t, const Grammar& g) {
    if (t.symbol < 0 || static_cast<std::size_t>(t.symbol) >= g.symbol_count()) return false;
    if (g.terminal(t.symbol)) return t.deriv_id == -1 && t.children.empty();
    if (t.deriv_id < 0 || t.deriv_id >= g.total_derivations()) return false;
    const auto& loc = g.derivation_locs[static_cast<std::size_t>(t.deriv_id)];
    if (loc.lhs != t.symbol) return false;
    const auto& rhs = g.derivation(t.deriv_id).rhs;
    if (t.children.size() != rhs.size()) return false;
    for (std::size_t i = 0; i < rhs.size(); ++i) {
        if (t.children[i].symbol != rhs[i]) return false;
        if (!tree_conforms(t.children[i], g)) return false;
    }
    return true;
}

} // namespace sggp
