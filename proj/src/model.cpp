#include "ppmc/model.hpp"

#include <algorithm>
#include <cctype>
#include <set>
#include <sstream>
#include <tuple>

namespace ppmc {

const std::vector<int>& PPDA::empty_index() {
    static const std::vector<int> e;
    return e;
}

void PPDA::reindex() {
    by_head_.clear();
    for (int i = 0; i < static_cast<int>(rules.size()); ++i) {
        const Rule& r = rules[i];
        by_head_[{r.lhs.state, r.lhs.symbol}].push_back(i);
    }
}

const std::vector<int>& PPDA::rules_for(const Head& h) const {
    if (by_head_.empty() && !rules.empty()) {
        const_cast<PPDA*>(this)->reindex();
    }
    auto it = by_head_.find({h.state, h.symbol});
    return it == by_head_.end() ? empty_index() : it->second;
}

Rational PPDA::outgoing_mass(const Head& h) const {
    Rational sum{0};
    for (int i : rules_for(h)) sum += rules[i].prob;
    return sum;
}

std::string PPDA::head_name(const Head& h) const {
    if (pbpa_capable()) return alphabet[h.symbol];
    return states[h.state] + "." + alphabet[h.symbol];
}

std::string PPDA::config_name(const Configuration& c) const {
    std::string out;
    if (!pbpa_capable()) out = states[c.state] + ":";
    if (c.stack.empty()) {
        out += "eps";
    } else {
        for (size_t i = 0; i < c.stack.size(); ++i) {
            if (i) out += " ";
            out += alphabet[c.stack[i]];
        }
    }
    return out;
}

ValidationReport validate(const PPDA& ppda) {
    ValidationReport rep;
    for (int p = 0; p < ppda.state_count(); ++p) {
        for (int x = 0; x < ppda.symbol_count(); ++x) {
            Head h{p, x};
            Rational sum = ppda.outgoing_mass(h);
            if (sum != 0 && sum != 1) {
                rep.issues.push_back({h, sum,
                                      "head " + ppda.head_name(h) +
                                          " has outgoing probability sum " +
                                          rational_to_string(sum)});
            }
        }
    }
    return rep;
}

NormalizeResult normalize(const PPDA& ppda) {
    NormalizeResult res;
    res.ppda.states = ppda.states;
    res.ppda.alphabet = ppda.alphabet;
    const bool reuse_state = ppda.pbpa_capable();
    int fresh_counter = 0;

    for (const Rule& r : ppda.rules) {
        if (r.rhs_stack.size() <= 2) {
            res.ppda.rules.push_back(r);
            continue;
        }
        res.changed = true;
        // pX ->x q Y1..Yn  becomes  pX ->x p' Y' Yn ; p' Y' ->1 q Y1..Y(n-1),
        // recursively until the continuation fits.
        std::string origin = ppda.head_name(r.lhs);
        Head cur_lhs = r.lhs;
        Rational cur_prob = r.prob;
        std::vector<SymbolId> cur_stack = r.rhs_stack;
        const StateId target = r.rhs_state;

        while (cur_stack.size() > 2) {
            SymbolId last = cur_stack.back();
            cur_stack.pop_back();
            std::string sym_name =
                std::string(kFreshPrefix) + std::to_string(++fresh_counter) + "_sym";
            SymbolId fresh_sym = static_cast<SymbolId>(res.ppda.alphabet.size());
            res.ppda.alphabet.push_back(sym_name);
            StateId fresh_state;
            if (reuse_state) {
                fresh_state = 0;
            } else {
                std::string st_name =
                    std::string(kFreshPrefix) + std::to_string(fresh_counter) + "_st";
                fresh_state = static_cast<StateId>(res.ppda.states.size());
                res.ppda.states.push_back(st_name);
            }
            res.renaming[reuse_state ? sym_name
                                     : res.ppda.states[fresh_state] + "." + sym_name] = origin;
            Rule outer;
            outer.lhs = cur_lhs;
            outer.rhs_state = fresh_state;
            outer.rhs_stack = {fresh_sym, last};
            outer.prob = cur_prob;
            res.ppda.rules.push_back(std::move(outer));

            cur_lhs = Head{fresh_state, fresh_sym};
            cur_prob = Rational(1);
        }
        Rule tail;
        tail.lhs = cur_lhs;
        tail.rhs_state = target;
        tail.rhs_stack = cur_stack;
        tail.prob = cur_prob;
        res.ppda.rules.push_back(std::move(tail));
    }
    res.ppda.reindex();
    return res;
}

std::vector<std::pair<Configuration, Rational>> successors(const PPDA& ppda,
                                                           const Configuration& c) {
    std::vector<std::pair<Configuration, Rational>> out;
    if (c.empty_stack()) return out;
    for (int idx : ppda.rules_for(c.head())) {
        const Rule& r = ppda.rules[idx];
        Configuration succ;
        succ.state = r.rhs_state;
        succ.stack = r.rhs_stack;
        succ.stack.insert(succ.stack.end(), c.stack.begin() + 1, c.stack.end());
        out.emplace_back(std::move(succ), r.prob);
    }
    return out;
}

namespace {

struct Token {
    std::string text;
    int line;
    int col;
};

std::vector<Token> tokenize(const std::string& text) {
    std::vector<Token> toks;
    int line = 1, col = 1;
    size_t i = 0;
    auto advance = [&](char c) {
        if (c == '\n') {
            ++line;
            col = 1;
        } else {
            ++col;
        }
    };
    while (i < text.size()) {
        char c = text[i];
        if (c == '#') {
            while (i < text.size() && text[i] != '\n') advance(text[i++]);
            continue;
        }
        if (std::isspace(static_cast<unsigned char>(c))) {
            advance(c);
            ++i;
            continue;
        }
        if (c == ';') {
            toks.push_back({";", line, col});
            advance(c);
            ++i;
            continue;
        }
        int start_col = col;
        std::string word;
        while (i < text.size() && !std::isspace(static_cast<unsigned char>(text[i])) &&
               text[i] != ';' && text[i] != '#') {
            word.push_back(text[i]);
            advance(text[i]);
            ++i;
        }
        toks.push_back({word, line, start_col});
    }
    return toks;
}

bool is_identifier(const std::string& s) {
    if (s.empty()) return false;
    for (char c : s) {
        if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '\'')) return false;
    }
    return !std::isdigit(static_cast<unsigned char>(s[0]));
}

} // namespace

PPDA parse_ppda(const std::string& text) {
    std::vector<Token> toks = tokenize(text);
    size_t pos = 0;
    auto peek = [&]() -> const Token* { return pos < toks.size() ? &toks[pos] : nullptr; };
    auto next = [&]() -> const Token& {
        if (pos >= toks.size()) {
            int l = toks.empty() ? 1 : toks.back().line;
            throw ParseError("unexpected end of input", l, 1);
        }
        return toks[pos++];
    };
    auto fail = [](const std::string& msg, const Token& t) -> void {
        throw ParseError(msg + " (got '" + t.text + "')", t.line, t.col);
    };

    const Token& header = next();
    bool is_pbpa;
    if (header.text == "ppda") {
        is_pbpa = false;
    } else if (header.text == "pbpa") {
        is_pbpa = true;
    } else {
        fail("expected header 'ppda' or 'pbpa'", header);
    }

    PPDA ppda;
    auto declare = [&](std::vector<std::string>& names, const Token& t) {
        if (!is_identifier(t.text)) fail("invalid identifier", t);
        if (t.text.rfind(kFreshPrefix, 0) == 0) fail("reserved name prefix", t);
        if (std::find(names.begin(), names.end(), t.text) != names.end())
            fail("duplicate declaration", t);
        names.push_back(t.text);
    };

    if (is_pbpa) {
        ppda.states.push_back("p");
    } else {
        const Token& kw = next();
        if (kw.text != "states") fail("expected 'states'", kw);
        while (peek() && peek()->text != ";") declare(ppda.states, next());
        next(); // ';'
        if (ppda.states.empty()) throw ParseError("no control states declared", kw.line, kw.col);
    }

    {
        const Token& kw = next();
        if (kw.text != "alphabet") fail("expected 'alphabet'", kw);
        while (peek() && peek()->text != ";") declare(ppda.alphabet, next());
        next(); // ';'
        if (ppda.alphabet.empty()) throw ParseError("empty alphabet", kw.line, kw.col);
    }

    auto state_of = [&](const Token& t) -> StateId {
        auto it = std::find(ppda.states.begin(), ppda.states.end(), t.text);
        if (it == ppda.states.end()) fail("unknown control state", t);
        return static_cast<StateId>(it - ppda.states.begin());
    };
    auto symbol_of = [&](const Token& t) -> SymbolId {
        auto it = std::find(ppda.alphabet.begin(), ppda.alphabet.end(), t.text);
        if (it == ppda.alphabet.end()) fail("unknown stack symbol", t);
        return static_cast<SymbolId>(it - ppda.alphabet.begin());
    };

    std::set<std::tuple<int, int, int, std::vector<SymbolId>>> seen;
    while (peek()) {
        Rule r;
        if (is_pbpa) {
            r.lhs.state = 0;
            r.lhs.symbol = symbol_of(next());
        } else {
            r.lhs.state = state_of(next());
            r.lhs.symbol = symbol_of(next());
        }
        const Token& arrow = next();
        if (arrow.text != "->") fail("expected '->'", arrow);
        const Token& prob_tok = next();
        auto prob = parse_rational(prob_tok.text);
        if (!prob) fail("expected a rational probability", prob_tok);
        if (!(*prob > 0 && *prob <= 1))
            throw ParseError("rule probability " + prob_tok.text + " outside (0,1]",
                             prob_tok.line, prob_tok.col);
        r.prob = *prob;
        if (is_pbpa) {
            r.rhs_state = 0;
        } else {
            r.rhs_state = state_of(next());
        }
        while (peek() && peek()->text != ";") r.rhs_stack.push_back(symbol_of(next()));
        const Token& semi = next();
        if (semi.text != ";") fail("expected ';'", semi);

        auto key = std::make_tuple(r.lhs.state, r.lhs.symbol, r.rhs_state, r.rhs_stack);
        if (!seen.insert(key).second)
            throw ParseError("duplicate rule for the same (lhs, rhs) pair", arrow.line, arrow.col);
        ppda.rules.push_back(std::move(r));
    }
    ppda.reindex();
    return ppda;
}

std::optional<StateId> find_state(const PPDA& ppda, const std::string& name) {
    auto it = std::find(ppda.states.begin(), ppda.states.end(), name);
    if (it == ppda.states.end()) return std::nullopt;
    return static_cast<StateId>(it - ppda.states.begin());
}

std::optional<SymbolId> find_symbol(const PPDA& ppda, const std::string& name) {
    auto it = std::find(ppda.alphabet.begin(), ppda.alphabet.end(), name);
    if (it == ppda.alphabet.end()) return std::nullopt;
    return static_cast<SymbolId>(it - ppda.alphabet.begin());
}

Configuration parse_configuration(const PPDA& ppda, const std::string& text) {
    Configuration c;
    std::string rest = text;
    auto colon = text.find(':');
    if (colon != std::string::npos) {
        std::string st = text.substr(0, colon);
        auto sid = find_state(ppda, st);
        if (!sid) throw ParseError("unknown control state '" + st + "'", 1, 1);
        c.state = *sid;
        rest = text.substr(colon + 1);
    } else {
        c.state = 0;
    }
    std::istringstream in(rest);
    std::string tok;
    while (in >> tok) {
        if (tok == "eps") continue;
        // allow both "I I Z" and single-letter-run "IIZ" when unambiguous
        auto sym = find_symbol(ppda, tok);
        if (sym) {
            c.stack.push_back(*sym);
            continue;
        }
        bool all_single = true;
        std::vector<SymbolId> expanded;
        for (char ch : tok) {
            auto s1 = find_symbol(ppda, std::string(1, ch));
            if (!s1) {
                all_single = false;
                break;
            }
            expanded.push_back(*s1);
        }
        if (!all_single) throw ParseError("unknown stack symbol '" + tok + "'", 1, 1);
        c.stack.insert(c.stack.end(), expanded.begin(), expanded.end());
    }
    return c;
}

} // namespace ppmc
