#include "ppmc/equations.hpp"

#include <algorithm>
#include <sstream>
#include <stdexcept>

namespace ppmc {

void Polynomial::add_linear(const Rational& c, int v) {
    if (c == 0) return;
    monomials.push_back({c, v, -1});
}

void Polynomial::add_quadratic(const Rational& c, int v1, int v2) {
    if (c == 0) return;
    if (v1 > v2) std::swap(v1, v2);
    monomials.push_back({c, v1, v2});
}

void Polynomial::canonicalize() {
    std::sort(monomials.begin(), monomials.end(), [](const Monomial& a, const Monomial& b) {
        if (a.v1 != b.v1) return a.v1 < b.v1;
        return a.v2 < b.v2;
    });
    std::vector<Monomial> merged;
    for (const Monomial& m : monomials) {
        if (!merged.empty() && merged.back().v1 == m.v1 && merged.back().v2 == m.v2) {
            merged.back().coeff += m.coeff;
        } else {
            merged.push_back(m);
        }
    }
    monomials.clear();
    for (Monomial& m : merged) {
        if (m.coeff != 0) monomials.push_back(std::move(m));
    }
}

bool Polynomial::is_linear() const {
    for (const Monomial& m : monomials) {
        if (m.degree() > 1) return false;
    }
    return true;
}

std::optional<int> MonotoneSystem::index_of(const VarId& v) const {
    auto it = std::lower_bound(vars.begin(), vars.end(), v);
    if (it != vars.end() && *it == v) return static_cast<int>(it - vars.begin());
    return std::nullopt;
}

Rational MonotoneSystem::value_of(const VarId& v, const Valuation& val) const {
    if (auto idx = index_of(v)) return val[*idx];
    auto it = pins.find(v);
    if (it != pins.end()) return it->second;
    throw std::out_of_range("value_of: unknown variable");
}

Rational MonotoneSystem::eval_poly(const Polynomial& p, const Valuation& v) const {
    Rational acc = p.constant;
    for (const Monomial& m : p.monomials) {
        Rational term = m.coeff * v[m.v1];
        if (m.v2 >= 0) term *= v[m.v2];
        acc += term;
    }
    return acc;
}

Valuation MonotoneSystem::evaluate(const Valuation& v) const {
    if (static_cast<int>(v.size()) != size()) throw std::invalid_argument("evaluate: arity");
    Valuation out(vars.size());
    for (int i = 0; i < size(); ++i) out[i] = eval_poly(rhs[i], v);
    return out;
}

std::string var_name(const PPDA& ppda, const VarId& v) {
    std::string h = ppda.head_name(v.head);
    if (v.kind == VarId::Kind::Bullet) return "<" + h + ",*>";
    if (ppda.pbpa_capable()) return "<" + h + ",eps>";
    return "<" + h + "," + ppda.states[v.pop_to] + ">";
}

std::string MonotoneSystem::dump(const PPDA& ppda) const {
    std::ostringstream out;
    for (int i = 0; i < size(); ++i) {
        out << var_name(ppda, vars[i]) << " =";
        bool first = true;
        if (rhs[i].constant != 0 || rhs[i].monomials.empty()) {
            out << " " << rational_to_string(rhs[i].constant);
            first = false;
        }
        for (const Monomial& m : rhs[i].monomials) {
            out << (first ? " " : " + ");
            first = false;
            out << rational_to_string(m.coeff) << "*" << var_name(ppda, vars[m.v1]);
            if (m.v2 >= 0) out << "*" << var_name(ppda, vars[m.v2]);
        }
        out << "\n";
    }
    for (const auto& [v, val] : pins) {
        out << var_name(ppda, v) << " := " << rational_to_string(val) << " (pinned)\n";
    }
    return out.str();
}

std::vector<std::vector<int>> MonotoneSystem::dependency_graph() const {
    std::vector<std::vector<int>> g(size());
    for (int i = 0; i < size(); ++i) {
        for (const Monomial& m : rhs[i].monomials) {
            g[i].push_back(m.v1);
            if (m.v2 >= 0) g[i].push_back(m.v2);
        }
        std::sort(g[i].begin(), g[i].end());
        g[i].erase(std::unique(g[i].begin(), g[i].end()), g[i].end());
    }
    return g;
}

SimpleSet dead_set(const PPDA& ppda) {
    SimpleSet dead = SimpleSet::eps_only(ppda);
    for (int p = 0; p < ppda.state_count(); ++p) {
        for (int x = 0; x < ppda.symbol_count(); ++x) {
            Head h{p, x};
            if (ppda.is_stuck(h)) dead.heads.insert(h);
        }
    }
    return dead;
}

namespace {

struct Builder {
    const PPDA& ppda;
    const SimpleSet& c1;
    const SimpleSet& c2;

    std::map<VarId, Rational> pins;
    std::vector<VarId> live;

    bool in_g1_minus_g2(const Head& h) const { return c1.heads.count(h) && !c2.heads.count(h); }

    void classify() {
        for (int p = 0; p < ppda.state_count(); ++p) {
            for (int x = 0; x < ppda.symbol_count(); ++x) {
                Head h{p, x};
                // <pXq> variables
                for (int q = 0; q < ppda.state_count(); ++q) {
                    VarId v{VarId::Kind::PopTo, h, q};
                    if (!in_g1_minus_g2(h)) {
                        pins[v] = Rational(0);
                    } else {
                        live.push_back(v);
                    }
                }
                // <pX.> variable
                VarId b{VarId::Kind::Bullet, h, 0};
                if (c2.heads.count(h)) {
                    pins[b] = Rational(1);
                } else if (!c1.heads.count(h)) {
                    pins[b] = Rational(0);
                } else {
                    live.push_back(b);
                }
            }
        }
        std::sort(live.begin(), live.end());
    }
};

} // namespace

MonotoneSystem build_until_system(const PPDA& ppda, const SimpleSet& c1, const SimpleSet& c2) {
    for (const Rule& r : ppda.rules) {
        if (r.rhs_stack.size() > 2)
            throw std::invalid_argument("build_until_system: system not normalized");
    }
    Builder b{ppda, c1, c2, {}, {}};
    b.classify();

    MonotoneSystem sys;
    sys.vars = b.live;
    sys.pins = b.pins;
    sys.rhs.resize(sys.vars.size());

    auto term_value = [&](const VarId& v) -> std::optional<Rational> {
        auto it = sys.pins.find(v);
        if (it != sys.pins.end()) return it->second;
        return std::nullopt;
    };

    // adds coeff * a * b to poly, resolving pinned factors
    auto add_product = [&](Polynomial& poly, Rational coeff, const VarId& a, const VarId& bb) {
        if (coeff == 0) return;
        auto pa = term_value(a);
        auto pb = term_value(bb);
        if (pa && pb) {
            poly.add_const(coeff * *pa * *pb);
        } else if (pa) {
            if (*pa != 0) poly.add_linear(coeff * *pa, *sys.index_of(bb));
        } else if (pb) {
            if (*pb != 0) poly.add_linear(coeff * *pb, *sys.index_of(a));
        } else {
            poly.add_quadratic(coeff, *sys.index_of(a), *sys.index_of(bb));
        }
    };
    auto add_single = [&](Polynomial& poly, Rational coeff, const VarId& a) {
        if (coeff == 0) return;
        auto pa = term_value(a);
        if (pa) {
            poly.add_const(coeff * *pa);
        } else {
            poly.add_linear(coeff, *sys.index_of(a));
        }
    };

    for (int i = 0; i < sys.size(); ++i) {
        const VarId& v = sys.vars[i];
        Polynomial poly;
        const Head h = v.head;
        // only live variables get equations; both kinds require pX in G1\G2
        // for PopTo and pX in C1 (not in C2) for Bullet, which classify()
        // already guaranteed.
        for (int ridx : ppda.rules_for(h)) {
            const Rule& r = ppda.rules[ridx];
            if (v.kind == VarId::Kind::PopTo) {
                if (r.rhs_stack.empty()) {
                    if (r.rhs_state == v.pop_to) poly.add_const(r.prob);
                } else if (r.rhs_stack.size() == 1) {
                    add_single(poly, r.prob,
                               VarId{VarId::Kind::PopTo, Head{r.rhs_state, r.rhs_stack[0]}, v.pop_to});
                } else {
                    for (int t = 0; t < ppda.state_count(); ++t) {
                        add_product(poly, r.prob,
                                    VarId{VarId::Kind::PopTo, Head{r.rhs_state, r.rhs_stack[0]}, t},
                                    VarId{VarId::Kind::PopTo, Head{t, r.rhs_stack[1]}, v.pop_to});
                    }
                }
            } else {
                if (r.rhs_stack.size() == 1) {
                    add_single(poly, r.prob,
                               VarId{VarId::Kind::Bullet, Head{r.rhs_state, r.rhs_stack[0]}, 0});
                } else if (r.rhs_stack.size() == 2) {
                    add_single(poly, r.prob,
                               VarId{VarId::Kind::Bullet, Head{r.rhs_state, r.rhs_stack[0]}, 0});
                    for (int t = 0; t < ppda.state_count(); ++t) {
                        add_product(poly, r.prob,
                                    VarId{VarId::Kind::PopTo, Head{r.rhs_state, r.rhs_stack[0]}, t},
                                    VarId{VarId::Kind::Bullet, Head{t, r.rhs_stack[1]}, 0});
                    }
                }
            }
        }
        poly.canonicalize();
        if (poly.constant < 0 || poly.constant > 1)
            throw std::logic_error("build_until_system: constant out of range");
        sys.rhs[i] = std::move(poly);
    }
    return sys;
}

MonotoneSystem build_termination_system(const PPDA& ppda) {
    return build_until_system(ppda, SimpleSet::all(ppda), dead_set(ppda));
}

BooleanSystem boolean_abstraction(const MonotoneSystem& sys) {
    BooleanSystem b;
    b.vars = sys.vars;
    b.positive.assign(sys.size(), 0);
    bool changed = true;
    while (changed) {
        changed = false;
        for (int i = 0; i < sys.size(); ++i) {
            if (b.positive[i]) continue;
            bool pos = sys.rhs[i].constant > 0;
            if (!pos) {
                for (const Monomial& m : sys.rhs[i].monomials) {
                    if (b.positive[m.v1] && (m.v2 < 0 || b.positive[m.v2])) {
                        pos = true;
                        break;
                    }
                }
            }
            if (pos) {
                b.positive[i] = 1;
                changed = true;
            }
        }
    }
    return b;
}

bool var_positive(const BooleanSystem& b, const MonotoneSystem& sys, const VarId& v) {
    if (auto idx = sys.index_of(v)) return b.positive[*idx] != 0;
    auto it = sys.pins.find(v);
    if (it != sys.pins.end()) return it->second > 0;
    throw std::out_of_range("var_positive: unknown variable");
}

MonotoneSystem eliminate_zero_vars(const MonotoneSystem& sys) {
    BooleanSystem b = boolean_abstraction(sys);
    bool any = false;
    for (char c : b.positive) {
        if (!c) {
            any = true;
            break;
        }
    }
    if (!any) return sys;

    MonotoneSystem out;
    out.pins = sys.pins;
    std::vector<int> remap(sys.size(), -1);
    for (int i = 0; i < sys.size(); ++i) {
        if (b.positive[i]) {
            remap[i] = static_cast<int>(out.vars.size());
            out.vars.push_back(sys.vars[i]);
        } else {
            out.pins[sys.vars[i]] = Rational(0);
        }
    }
    for (int i = 0; i < sys.size(); ++i) {
        if (!b.positive[i]) continue;
        Polynomial p;
        p.constant = sys.rhs[i].constant;
        for (const Monomial& m : sys.rhs[i].monomials) {
            if (!b.positive[m.v1] || (m.v2 >= 0 && !b.positive[m.v2])) continue; // value 0
            Monomial nm = m;
            nm.v1 = remap[m.v1];
            if (m.v2 >= 0) nm.v2 = remap[m.v2];
            p.monomials.push_back(nm);
        }
        p.canonicalize();
        out.rhs.push_back(std::move(p));
    }
    return out;
}

} // namespace ppmc
