#include "ppmc/formats.hpp"

#include <algorithm>
#include <cctype>
#include <sstream>

namespace ppmc {

namespace {

struct Tok {
    std::string text;
    int line = 0;
    int col = 0;
};

std::vector<Tok> lex(const std::string& text) {
    std::vector<Tok> out;
    int line = 1, col = 1;
    size_t i = 0;
    auto adv = [&](char c) {
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
            while (i < text.size() && text[i] != '\n') adv(text[i++]);
            continue;
        }
        if (std::isspace(static_cast<unsigned char>(c))) {
            adv(c);
            ++i;
            continue;
        }
        if (c == ';' || c == '{' || c == '}') {
            out.push_back({std::string(1, c), line, col});
            adv(c);
            ++i;
            continue;
        }
        int c0 = col;
        std::string w;
        while (i < text.size() && !std::isspace(static_cast<unsigned char>(text[i])) &&
               text[i] != ';' && text[i] != '{' && text[i] != '}' && text[i] != '#') {
            w.push_back(text[i]);
            adv(text[i]);
            ++i;
        }
        out.push_back({std::move(w), line, c0});
    }
    return out;
}

struct Cursor {
    std::vector<Tok> toks;
    size_t pos = 0;
    const Tok* peek() const { return pos < toks.size() ? &toks[pos] : nullptr; }
    const Tok& next() {
        if (pos >= toks.size()) {
            int l = toks.empty() ? 1 : toks.back().line;
            throw ParseError("unexpected end of input", l, 1);
        }
        return toks[pos++];
    }
    [[noreturn]] void fail(const std::string& msg, const Tok& t) const {
        throw ParseError(msg + " (got '" + t.text + "')", t.line, t.col);
    }
    void expect(const std::string& s) {
        const Tok& t = next();
        if (t.text != s) fail("expected '" + s + "'", t);
    }
};

Head parse_head_tok(const PPDA& ppda, const Tok& t, const Cursor& cur) {
    auto dot = t.text.find('.');
    if (dot == std::string::npos) {
        if (!ppda.pbpa_capable()) cur.fail("head must be written p.X for a pPDA", t);
        auto sym = find_symbol(ppda, t.text);
        if (!sym) cur.fail("unknown stack symbol", t);
        return Head{0, *sym};
    }
    auto st = find_state(ppda, t.text.substr(0, dot));
    auto sym = find_symbol(ppda, t.text.substr(dot + 1));
    if (!st) cur.fail("unknown control state", t);
    if (!sym) cur.fail("unknown stack symbol", t);
    return Head{*st, *sym};
}

} // namespace

AutomataFile parse_automata_file(const PPDA& ppda, const std::string& text) {
    AutomataFile out;
    Cursor cur{lex(text)};
    int ns = ppda.symbol_count();

    while (cur.peek()) {
        const Tok& kw = cur.next();
        if (kw.text == "bind") {
            const Tok& atom = cur.next();
            const Tok& aut = cur.next();
            cur.expect(";");
            out.bindings[atom.text] = aut.text;
            continue;
        }
        if (kw.text == "automaton") {
            std::string name = cur.next().text;
            DeltaAutomaton a;
            a.symbol_count = ns;
            std::map<std::string, int> ids;
            cur.expect("states");
            while (cur.peek() && cur.peek()->text != ";") {
                const Tok& t = cur.next();
                if (ids.count(t.text)) cur.fail("duplicate state", t);
                ids[t.text] = static_cast<int>(a.state_names.size());
                a.state_names.push_back(t.text);
            }
            cur.expect(";");
            // the control states double as the initial states
            for (const std::string& st : ppda.states) {
                auto it = ids.find(st);
                if (it == ids.end())
                    throw ParseError("automaton " + name + " must declare a state named '" + st +
                                         "' (the control-state entry point)",
                                     kw.line, kw.col);
                a.control_init.push_back(it->second);
            }
            cur.expect("accepting");
            while (cur.peek() && cur.peek()->text != ";") {
                const Tok& t = cur.next();
                auto it = ids.find(t.text);
                if (it == ids.end()) cur.fail("unknown state in accepting list", t);
                a.accepting.insert(it->second);
            }
            cur.expect(";");
            a.trans.assign(a.state_names.size(), std::vector<int>(ns, -1));
            while (cur.peek() && cur.peek()->text == "trans") {
                cur.next();
                const Tok& src = cur.next();
                const Tok& sym = cur.next();
                cur.expect("->");
                const Tok& dst = cur.next();
                cur.expect(";");
                auto si = ids.find(src.text);
                auto di = ids.find(dst.text);
                auto sy = find_symbol(ppda, sym.text);
                if (si == ids.end()) cur.fail("unknown source state", src);
                if (di == ids.end()) cur.fail("unknown target state", dst);
                if (!sy) cur.fail("unknown stack symbol", sym);
                if (a.trans[si->second][*sy] != -1) cur.fail("duplicate transition", src);
                a.trans[si->second][*sy] = di->second;
            }
            for (size_t s = 0; s < a.state_names.size(); ++s) {
                for (int x = 0; x < ns; ++x) {
                    if (a.trans[s][x] < 0)
                        throw ParseError("automaton " + name + " is not total: no transition from " +
                                             a.state_names[s] + " on " + ppda.alphabet[x],
                                         kw.line, kw.col);
                }
            }
            out.automata.emplace(std::move(name), std::move(a));
            continue;
        }
        if (kw.text == "observer" || kw.text == "muller") {
            bool is_muller = kw.text == "muller";
            std::string name = cur.next().text;
            std::vector<std::string> st_names;
            std::map<std::string, int> ids;
            cur.expect("states");
            while (cur.peek() && cur.peek()->text != ";") {
                const Tok& t = cur.next();
                if (ids.count(t.text)) cur.fail("duplicate state", t);
                ids[t.text] = static_cast<int>(st_names.size());
                st_names.push_back(t.text);
            }
            cur.expect(";");
            cur.expect("init");
            const Tok& init_tok = cur.next();
            auto ii = ids.find(init_tok.text);
            if (ii == ids.end()) cur.fail("unknown init state", init_tok);
            cur.expect(";");
            int heads = ppda.state_count() * ns;
            std::vector<std::vector<int>> step(st_names.size(), std::vector<int>(heads, -1));
            while (cur.peek() && cur.peek()->text == "trans") {
                cur.next();
                const Tok& src = cur.next();
                const Tok& head_tok = cur.next();
                cur.expect("->");
                const Tok& dst = cur.next();
                cur.expect(";");
                auto si = ids.find(src.text);
                auto di = ids.find(dst.text);
                if (si == ids.end()) cur.fail("unknown source state", src);
                if (di == ids.end()) cur.fail("unknown target state", dst);
                Head h = parse_head_tok(ppda, head_tok, cur);
                int hi = h.state * ns + h.symbol;
                if (step[si->second][hi] != -1) cur.fail("duplicate transition", src);
                step[si->second][hi] = di->second;
            }
            for (size_t s = 0; s < st_names.size(); ++s) {
                for (int h = 0; h < heads; ++h) {
                    if (step[s][h] < 0)
                        throw ParseError(kw.text + " " + name + " is not total: state " +
                                             st_names[s] + " misses a head transition",
                                         kw.line, kw.col);
                }
            }
            std::vector<std::set<int>> acceptance;
            cur.expect("acceptance");
            while (cur.peek() && cur.peek()->text != ";") {
                cur.expect("{");
                std::set<int> group;
                while (cur.peek() && cur.peek()->text != "}") {
                    const Tok& t = cur.next();
                    auto it = ids.find(t.text);
                    if (it == ids.end()) cur.fail("unknown state in acceptance set", t);
                    group.insert(it->second);
                }
                cur.expect("}");
                acceptance.push_back(std::move(group));
            }
            cur.expect(";");
            if (is_muller) {
                MullerAutomaton m;
                m.state_names = std::move(st_names);
                m.init = ii->second;
                m.step = std::move(step);
                m.acceptance = std::move(acceptance);
                out.mullers.emplace(std::move(name), std::move(m));
            } else {
                ObservingAutomaton o;
                o.state_names = std::move(st_names);
                o.init = ii->second;
                o.step = std::move(step);
                o.acceptance = std::move(acceptance);
                out.observers.emplace(std::move(name), std::move(o));
            }
            continue;
        }
        cur.fail("expected 'automaton', 'observer', 'muller' or 'bind'", kw);
    }
    return out;
}

Head parse_head(const PPDA& ppda, const std::string& text) {
    Cursor cur{lex(text)};
    const Tok& t = cur.next();
    return parse_head_tok(ppda, t, cur);
}

SimpleSet parse_simple_set(const PPDA& ppda, const std::string& text) {
    if (text == "all") return SimpleSet::all(ppda);
    if (text == "empty" || text == "none") return SimpleSet::none();
    if (text == "eps") return SimpleSet::eps_only(ppda);
    Cursor cur{lex(text)};
    SimpleSet s;
    cur.expect("{");
    bool first = true;
    while (cur.peek() && cur.peek()->text != "}") {
        const Tok& t = cur.next();
        std::string item = t.text;
        if (!item.empty() && item.back() == ',') item.pop_back();
        if (item.empty()) continue;
        if (item == "eps") {
            for (int p = 0; p < ppda.state_count(); ++p) s.eps_states.insert(p);
        } else if (item.size() > 4 && item.substr(0, 4) == "eps:") {
            auto st = find_state(ppda, item.substr(4));
            if (!st) cur.fail("unknown control state in eps item", t);
            s.eps_states.insert(*st);
        } else {
            Tok ht = t;
            ht.text = item;
            s.heads.insert(parse_head_tok(ppda, ht, cur));
        }
        first = false;
    }
    cur.expect("}");
    (void)first;
    return s;
}

std::string simple_set_to_string(const PPDA& ppda, const SimpleSet& s) {
    std::ostringstream out;
    out << "{";
    bool first = true;
    for (const Head& h : s.heads) {
        if (!first) out << ", ";
        out << ppda.head_name(h);
        first = false;
    }
    if (static_cast<int>(s.eps_states.size()) == ppda.state_count() && !s.eps_states.empty()) {
        if (!first) out << ", ";
        out << "eps";
        first = false;
    } else {
        for (StateId p : s.eps_states) {
            if (!first) out << ", ";
            out << "eps:" << ppda.states[p];
            first = false;
        }
    }
    out << "}";
    return out.str();
}

} // namespace ppmc
