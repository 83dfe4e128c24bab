#include "ppmc/regsets.hpp"

#include <algorithm>
#include <deque>
#include <stdexcept>

namespace ppmc {

SimpleSet SimpleSet::all(const PPDA& ppda) {
    SimpleSet s;
    for (int p = 0; p < ppda.state_count(); ++p) {
        s.eps_states.insert(p);
        for (int x = 0; x < ppda.symbol_count(); ++x) s.heads.insert(Head{p, x});
    }
    return s;
}

SimpleSet SimpleSet::eps_only(const PPDA& ppda) {
    SimpleSet s;
    for (int p = 0; p < ppda.state_count(); ++p) s.eps_states.insert(p);
    return s;
}

bool DeltaAutomaton::accepts(const Configuration& c) const {
    int s = control_init.at(c.state);
    for (auto it = c.stack.rbegin(); it != c.stack.rend(); ++it) s = trans[s][*it];
    return accepting.count(s) > 0;
}

DeltaAutomaton DeltaAutomaton::trimmed() const {
    std::vector<int> remap(state_count(), -1);
    std::vector<int> order;
    std::deque<int> work;
    for (int init : control_init) {
        if (remap[init] < 0) {
            remap[init] = static_cast<int>(order.size());
            order.push_back(init);
            work.push_back(init);
        }
    }
    while (!work.empty()) {
        int s = work.front();
        work.pop_front();
        for (int a = 0; a < symbol_count; ++a) {
            int t = trans[s][a];
            if (remap[t] < 0) {
                remap[t] = static_cast<int>(order.size());
                order.push_back(t);
                work.push_back(t);
            }
        }
    }
    DeltaAutomaton out;
    out.symbol_count = symbol_count;
    out.state_names.resize(order.size());
    out.trans.assign(order.size(), std::vector<int>(symbol_count, 0));
    for (size_t i = 0; i < order.size(); ++i) {
        int s = order[i];
        out.state_names[i] = state_names[s];
        for (int a = 0; a < symbol_count; ++a) out.trans[i][a] = remap[trans[s][a]];
        if (accepting.count(s)) out.accepting.insert(static_cast<int>(i));
    }
    out.control_init.resize(control_init.size());
    for (size_t p = 0; p < control_init.size(); ++p) out.control_init[p] = remap[control_init[p]];
    return out;
}

DeltaAutomaton complement(const DeltaAutomaton& a) {
    DeltaAutomaton out = a;
    out.accepting.clear();
    for (int s = 0; s < a.state_count(); ++s) {
        if (!a.accepting.count(s)) out.accepting.insert(s);
    }
    return out;
}

namespace {

DeltaAutomaton product(const DeltaAutomaton& a, const DeltaAutomaton& b, bool take_union) {
    if (a.symbol_count != b.symbol_count || a.control_init.size() != b.control_init.size())
        throw std::invalid_argument("bool_ops: alphabet or control-state mismatch");
    DeltaAutomaton out;
    out.symbol_count = a.symbol_count;
    std::map<std::pair<int, int>, int> ids;
    std::vector<std::pair<int, int>> order;
    auto id_of = [&](int x, int y) {
        auto it = ids.find({x, y});
        if (it != ids.end()) return it->second;
        int id = static_cast<int>(order.size());
        ids[{x, y}] = id;
        order.emplace_back(x, y);
        return id;
    };
    for (size_t p = 0; p < a.control_init.size(); ++p)
        out.control_init.push_back(id_of(a.control_init[p], b.control_init[p]));
    for (size_t i = 0; i < order.size(); ++i) {
        auto [x, y] = order[i];
        out.trans.emplace_back(out.symbol_count, 0);
        for (int sym = 0; sym < out.symbol_count; ++sym)
            out.trans[i][sym] = id_of(a.trans[x][sym], b.trans[y][sym]);
        bool acc_a = a.accepting.count(x) > 0;
        bool acc_b = b.accepting.count(y) > 0;
        if (take_union ? (acc_a || acc_b) : (acc_a && acc_b)) out.accepting.insert(static_cast<int>(i));
        out.state_names.push_back(a.state_names[x] + "&" + b.state_names[y]);
    }
    return out;
}

} // namespace

DeltaAutomaton intersect(const DeltaAutomaton& a, const DeltaAutomaton& b) {
    return product(a, b, false);
}

DeltaAutomaton unite(const DeltaAutomaton& a, const DeltaAutomaton& b) {
    return product(a, b, true);
}

DeltaAutomaton bool_ops(const DeltaAutomaton& a, const DeltaAutomaton& b, BoolOp op) {
    switch (op) {
        case BoolOp::Complement: return complement(a);
        case BoolOp::Intersect: return intersect(a, b);
        case BoolOp::Union: return unite(a, b);
    }
    throw std::logic_error("bool_ops: bad op");
}

DeltaAutomaton simple_to_automaton(const PPDA& ppda, const SimpleSet& s) {
    // state layout: per control state p, a "just p" state (== eps memory),
    // then one state per (p, last symbol read). The last symbol read is the
    // top of the stack once the whole (reversed) word is consumed.
    DeltaAutomaton out;
    int nq = ppda.state_count();
    int ns = ppda.symbol_count();
    out.symbol_count = ns;
    int total = nq + nq * ns;
    out.state_names.resize(total);
    out.trans.assign(total, std::vector<int>(ns, 0));
    auto sym_state = [&](int p, int x) { return nq + p * ns + x; };
    for (int p = 0; p < nq; ++p) {
        out.control_init.push_back(p);
        out.state_names[p] = ppda.states[p] + "/eps";
        for (int x = 0; x < ns; ++x) {
            out.trans[p][x] = sym_state(p, x);
            out.state_names[sym_state(p, x)] = ppda.states[p] + "/" + ppda.alphabet[x];
            for (int y = 0; y < ns; ++y) out.trans[sym_state(p, x)][y] = sym_state(p, y);
            if (s.heads.count(Head{p, x})) out.accepting.insert(sym_state(p, x));
        }
        if (s.eps_states.count(p)) out.accepting.insert(p);
    }
    return out;
}

DeltaAutomaton universal_automaton(const PPDA& ppda) {
    return simple_to_automaton(ppda, SimpleSet::all(ppda));
}

DeltaAutomaton empty_automaton(const PPDA& ppda) {
    return simple_to_automaton(ppda, SimpleSet::none());
}

bool is_empty(const DeltaAutomaton& a) {
    DeltaAutomaton t = a.trimmed();
    return t.accepting.empty();
}

Dfa determinize(const Nfa& nfa) {
    Dfa out;
    out.symbol_count = nfa.symbol_count;
    std::map<std::set<int>, int> ids;
    std::vector<std::set<int>> order;
    auto id_of = [&](const std::set<int>& ss) {
        auto it = ids.find(ss);
        if (it != ids.end()) return it->second;
        int id = static_cast<int>(order.size());
        ids[ss] = id;
        order.push_back(ss);
        return id;
    };
    out.initial = id_of(nfa.initial);
    for (size_t i = 0; i < order.size(); ++i) {
        std::set<int> cur = order[i];
        out.trans.emplace_back(out.symbol_count, 0);
        for (int a = 0; a < out.symbol_count; ++a) {
            std::set<int> nxt;
            for (int s : cur) {
                auto it = nfa.trans[s].find(a);
                if (it != nfa.trans[s].end()) nxt.insert(it->second.begin(), it->second.end());
            }
            out.trans[i][a] = id_of(nxt);
        }
        for (int s : cur) {
            if (nfa.accepting.count(s)) {
                out.accepting.insert(static_cast<int>(i));
                break;
            }
        }
    }
    return out;
}

Dfa reverse_determinize(const Dfa& dfa) {
    Nfa rev;
    rev.state_count = static_cast<int>(dfa.trans.size());
    rev.symbol_count = dfa.symbol_count;
    rev.trans.resize(rev.state_count);
    for (int s = 0; s < rev.state_count; ++s) {
        for (int a = 0; a < dfa.symbol_count; ++a) {
            rev.trans[dfa.trans[s][a]][a].insert(s);
        }
    }
    rev.initial = dfa.accepting;
    rev.accepting = {dfa.initial};
    return determinize(rev);
}

Configuration RegSimReduction::embed(const Configuration& c) const {
    Configuration out;
    out.state = c.state;
    if (c.empty_stack()) return out;
    // annotations are forced bottom-up: the bottom symbol carries the base
    // vector, each one above carries gamma-hat(below-vector, below-symbol).
    std::vector<int> vecs(c.stack.size());
    vecs.back() = base_vector;
    for (int i = static_cast<int>(c.stack.size()) - 2; i >= 0; --i)
        vecs[i] = advance_vector(vecs[i + 1], c.stack[i + 1]);
    out.stack.reserve(c.stack.size());
    for (size_t i = 0; i < c.stack.size(); ++i)
        out.stack.push_back(product_symbol(c.stack[i], vecs[i]));
    return out;
}

int RegSimReduction::advance_vector(int v, SymbolId a) const {
    const std::vector<int>& cur = vectors[v];
    std::vector<int> nxt(cur.size());
    size_t slot = 0;
    for (size_t i = 0; i < automata.size(); ++i) {
        for (size_t p = 0; p < automata[i].control_init.size(); ++p, ++slot)
            nxt[slot] = automata[i].trans[cur[slot]][a];
    }
    for (size_t id = 0; id < vectors.size(); ++id) {
        if (vectors[id] == nxt) return static_cast<int>(id);
    }
    throw std::logic_error("reg-sim: vector closure incomplete");
}

SymbolId RegSimReduction::product_symbol(SymbolId original_symbol, int vector_id) const {
    for (size_t i = 0; i < symbol_origin.size(); ++i) {
        if (symbol_origin[i] == std::make_pair(original_symbol, vector_id))
            return static_cast<SymbolId>(i);
    }
    throw std::logic_error("reg-sim: missing product symbol");
}

RegSimReduction reduce_to_simple(const PPDA& ppda, const std::vector<DeltaAutomaton>& regs) {
    int nq = ppda.state_count();
    for (const auto& a : regs) {
        if (a.symbol_count != ppda.symbol_count() ||
            static_cast<int>(a.control_init.size()) != nq)
            throw std::invalid_argument("reduce_to_simple: automaton does not match the system");
    }

    RegSimReduction red;
    red.automata = regs;

    // base vector: s(i, p) = init state of automaton i for control state p
    std::vector<int> base;
    for (const auto& a : regs)
        for (int p = 0; p < nq; ++p) base.push_back(a.control_init[p]);
    red.vectors.push_back(base);
    red.base_vector = 0;

    // close the vector set under gamma-hat
    for (size_t v = 0; v < red.vectors.size(); ++v) {
        for (int a = 0; a < ppda.symbol_count(); ++a) {
            const std::vector<int>& cur = red.vectors[v];
            std::vector<int> nxt(cur.size());
            size_t slot = 0;
            for (size_t i = 0; i < regs.size(); ++i)
                for (int p = 0; p < nq; ++p, ++slot)
                    nxt[slot] = regs[i].trans[cur[slot]][a];
            bool known = false;
            for (const auto& existing : red.vectors) {
                if (existing == nxt) {
                    known = true;
                    break;
                }
            }
            if (!known) red.vectors.push_back(std::move(nxt));
        }
    }

    // product alphabet
    red.product.states = ppda.states;
    for (int x = 0; x < ppda.symbol_count(); ++x) {
        for (size_t v = 0; v < red.vectors.size(); ++v) {
            red.symbol_origin.emplace_back(x, static_cast<int>(v));
            red.product.alphabet.push_back(ppda.alphabet[x] + "#" + std::to_string(v));
        }
    }
    auto prod_sym = [&](SymbolId x, int v) {
        return static_cast<SymbolId>(x * static_cast<int>(red.vectors.size()) + v);
    };

    // rules: three schemata of the lemma's proof
    for (const Rule& r : ppda.rules) {
        for (size_t v = 0; v < red.vectors.size(); ++v) {
            Rule nr;
            nr.lhs = Head{r.lhs.state, prod_sym(r.lhs.symbol, static_cast<int>(v))};
            nr.rhs_state = r.rhs_state;
            nr.prob = r.prob;
            if (r.rhs_stack.empty()) {
                // pop keeps probability, drops the vector
            } else if (r.rhs_stack.size() == 1) {
                nr.rhs_stack = {prod_sym(r.rhs_stack[0], static_cast<int>(v))};
            } else if (r.rhs_stack.size() == 2) {
                int t = red.advance_vector(static_cast<int>(v), r.rhs_stack[1]);
                nr.rhs_stack = {prod_sym(r.rhs_stack[0], t),
                                prod_sym(r.rhs_stack[1], static_cast<int>(v))};
            } else {
                throw std::invalid_argument("reduce_to_simple: system not normalized");
            }
            red.product.rules.push_back(std::move(nr));
        }
    }
    red.product.reindex();

    // simple images G_i
    for (size_t i = 0; i < regs.size(); ++i) {
        SimpleSet g;
        for (int p = 0; p < nq; ++p) {
            if (regs[i].accepting.count(regs[i].control_init[p])) g.eps_states.insert(p);
            for (int x = 0; x < ppda.symbol_count(); ++x) {
                for (size_t v = 0; v < red.vectors.size(); ++v) {
                    size_t slot = i * nq + p;
                    int st = regs[i].trans[red.vectors[v][slot]][x];
                    if (regs[i].accepting.count(st))
                        g.heads.insert(Head{p, prod_sym(x, static_cast<int>(v))});
                }
            }
        }
        red.simple_images.push_back(std::move(g));
    }
    return red;
}

DeltaAutomaton map_back(const PPDA& original, const RegSimReduction& red,
                        const DeltaAutomaton& aut_over_product) {
    // Simulates the product automaton on the embedded word; the vector
    // annotations are reconstructed online, which is exactly the
    // "intersect with G(C(Delta)) then project" step of the lemma.
    const DeltaAutomaton& b = aut_over_product;
    int nq = original.state_count();
    DeltaAutomaton out;
    out.symbol_count = original.symbol_count();

    std::map<std::pair<int, int>, int> ids; // (b-state, vector) -> state id
    std::vector<std::pair<int, int>> order;
    // first nq slots are the control-init states (identified with (init_b(p), base))
    auto id_of = [&](int bs, int vec) {
        auto it = ids.find({bs, vec});
        if (it != ids.end()) return it->second;
        int id = static_cast<int>(order.size());
        ids[{bs, vec}] = id;
        order.emplace_back(bs, vec);
        return id;
    };
    for (int p = 0; p < nq; ++p) out.control_init.push_back(id_of(b.control_init[p], red.base_vector));
    for (size_t i = 0; i < order.size(); ++i) {
        auto [bs, vec] = order[i];
        out.trans.emplace_back(out.symbol_count, 0);
        for (int a = 0; a < out.symbol_count; ++a) {
            SymbolId annotated = red.product_symbol(a, vec);
            out.trans[i][a] = id_of(b.trans[bs][annotated], red.advance_vector(vec, a));
        }
        if (b.accepting.count(bs)) out.accepting.insert(static_cast<int>(i));
        out.state_names.push_back(b.state_names[bs] + "@" + std::to_string(vec));
    }
    return out;
}

std::vector<Configuration> enumerate_configurations(const PPDA& ppda, int max_len) {
    std::vector<Configuration> out;
    std::vector<std::vector<SymbolId>> words{{}};
    for (int len = 0; len <= max_len; ++len) {
        std::vector<std::vector<SymbolId>> next;
        for (const auto& w : words) {
            for (int p = 0; p < ppda.state_count(); ++p) out.push_back(Configuration{p, w});
            if (len < max_len) {
                for (int a = 0; a < ppda.symbol_count(); ++a) {
                    auto w2 = w;
                    w2.push_back(a);
                    next.push_back(std::move(w2));
                }
            }
        }
        words = std::move(next);
    }
    return out;
}

} // namespace ppmc
