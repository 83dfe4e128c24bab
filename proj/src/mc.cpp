#include "ppmc/mc.hpp"

#include "ppmc/graph.hpp"

#include <algorithm>
#include <sstream>
#include <stdexcept>

namespace ppmc {

BsccClassification bsccs(const MinChain& chain, const ObservingAutomaton& obs) {
    int n = static_cast<int>(chain.states.size());
    std::vector<std::vector<int>> adj(n);
    for (int s = 0; s < n; ++s) {
        for (const ChainEdge& e : chain.edges[s]) {
            if (e.positive && e.to != s) adj[s].push_back(e.to);
            if (e.positive && e.to == s) adj[s].push_back(e.to); // self-loops count for SCC too
        }
    }
    SccDecomposition scc = tarjan_scc(adj);
    BsccClassification out;
    out.scc_of = scc.component;
    out.bscc_id.assign(n, -1);
    for (int c = 0; c < scc.count; ++c) {
        bool bottom = true;
        for (int s : scc.members[c]) {
            for (const ChainEdge& e : chain.edges[s]) {
                if (e.positive && scc.component[e.to] != c) {
                    bottom = false;
                    break;
                }
            }
            if (!bottom) break;
        }
        if (!bottom) continue;
        int id = static_cast<int>(out.components.size());
        for (int s : scc.members[c]) out.bscc_id[s] = id;
        out.components.push_back(scc.members[c]);
        bool is_bot_only = true;
        std::set<int> obs_states;
        for (int s : scc.members[c]) {
            if (chain.states[s].kind != ChainState::Kind::Bot) is_bot_only = false;
            if (chain.states[s].kind == ChainState::Kind::Pair)
                obs_states.insert(chain.states[s].obs);
        }
        out.accepting.push_back(!is_bot_only && obs.accepts_infset(obs_states));
    }
    return out;
}

Interval hitting_probability(const MinChain& chain, const std::set<int>& targets, int source,
                             long max_sweeps, unsigned precision_bits) {
    int n = static_cast<int>(chain.states.size());
    // exact pruning: states that can reach the targets through positive edges
    std::vector<std::vector<int>> radj(n);
    for (int s = 0; s < n; ++s) {
        for (const ChainEdge& e : chain.edges[s]) {
            if (e.positive) radj[e.to].push_back(s);
        }
    }
    std::vector<char> can_reach(n, 0);
    std::vector<int> work(targets.begin(), targets.end());
    for (int t : work) can_reach[t] = 1;
    while (!work.empty()) {
        int s = work.back();
        work.pop_back();
        for (int p : radj[s]) {
            if (!can_reach[p]) {
                can_reach[p] = 1;
                work.push_back(p);
            }
        }
    }

    std::vector<Rational> lo(n, Rational(0)), hi(n, Rational(0));
    for (int s = 0; s < n; ++s) {
        if (targets.count(s)) {
            lo[s] = hi[s] = 1;
        } else if (can_reach[s]) {
            hi[s] = 1;
        }
    }
    for (long sweep = 0; sweep < max_sweeps; ++sweep) {
        bool changed = false;
        for (int s = 0; s < n; ++s) {
            if (targets.count(s) || !can_reach[s]) continue;
            Rational acc_lo{0}, acc_hi{0};
            for (const ChainEdge& e : chain.edges[s]) {
                acc_lo += e.prob.lo * lo[e.to];
                acc_hi += e.prob.hi * hi[e.to];
            }
            acc_lo = dyadic_floor(acc_lo, precision_bits);
            acc_hi = dyadic_ceil(acc_hi, precision_bits);
            if (acc_hi > 1) acc_hi = 1;
            if (acc_lo > lo[s]) {
                lo[s] = acc_lo;
                changed = true;
            }
            if (acc_hi < hi[s]) {
                hi[s] = acc_hi;
                changed = true;
            }
        }
        if (!changed) break;
    }
    Rational l = lo[source], h = hi[source];
    if (l > h) l = h; // rounding artifacts
    return Interval(l, h);
}

AcceptanceResult acceptance_probability(const PPDA& ppda, const ObservingAutomaton& obs,
                                        const Head& pX, const Rational& width,
                                        const Oracle& oracle, const IrunPositivityFn& irun_pos) {
    Rational w = width / 4;
    Rational floor_w(1, BigInt(1) << oracle.opts.precision_bits);
    AcceptanceResult res;
    while (true) {
        res.chain = build_min_chain(ppda, obs, w, oracle, irun_pos);
        res.classes = bsccs(res.chain, obs);
        std::set<int> targets;
        for (size_t c = 0; c < res.classes.components.size(); ++c) {
            if (!res.classes.accepting[c]) continue;
            for (int s : res.classes.components[c]) targets.insert(s);
        }
        int source = res.chain.find_entry(ppda, pX);
        if (targets.empty()) {
            res.value = Interval::point(Rational(0));
            res.width_met = true;
            return res;
        }
        res.value = hitting_probability(res.chain, targets, source, 20000,
                                        oracle.opts.precision_bits);
        if (res.value.width() <= width) {
            res.width_met = true;
            return res;
        }
        if (w <= floor_w) return res;
        w /= 16;
    }
}

Head MullerReduction::lift_head(const Head& h) const {
    return Head{pack(h.state, muller_init), h.symbol};
}

Head MullerReduction::project_head(const Head& h) const {
    return Head{h.state / muller_states, h.symbol};
}

MullerReduction muller_reduction(const PPDA& ppda, const MullerAutomaton& muller) {
    MullerReduction out;
    out.base_states = ppda.state_count();
    out.muller_states = muller.state_count();
    out.muller_init = muller.init;
    out.product.alphabet = ppda.alphabet;
    for (int p = 0; p < ppda.state_count(); ++p) {
        for (int b = 0; b < muller.state_count(); ++b) {
            out.product.states.push_back("(" + ppda.states[p] + "," + muller.state_names[b] + ")");
        }
    }
    for (const Rule& r : ppda.rules) {
        for (int b = 0; b < muller.state_count(); ++b) {
            Rule nr;
            nr.lhs = Head{out.pack(r.lhs.state, b), r.lhs.symbol};
            int b2 = muller.step[b][r.lhs.state * ppda.symbol_count() + r.lhs.symbol];
            nr.rhs_state = out.pack(r.rhs_state, b2);
            nr.rhs_stack = r.rhs_stack;
            nr.prob = r.prob;
            out.product.rules.push_back(std::move(nr));
        }
    }
    out.product.reindex();

    // powerset observer over the product's heads
    int nb = muller.state_count();
    if (nb > 16) throw std::invalid_argument("muller_reduction: too many Muller states");
    int na = 1 << nb;
    out.observer.init = 0; // empty set
    for (int m = 0; m < na; ++m) {
        std::string nm = "{";
        for (int b = 0; b < nb; ++b) {
            if (m & (1 << b)) nm += muller.state_names[b] + " ";
        }
        if (nm.size() > 1) nm.pop_back();
        nm += "}";
        out.observer.state_names.push_back(nm);
    }
    int heads = out.product.state_count() * out.product.symbol_count();
    out.observer.step.assign(na, std::vector<int>(heads, 0));
    for (int m = 0; m < na; ++m) {
        for (int p = 0; p < out.product.state_count(); ++p) {
            int b = p % nb;
            for (int x = 0; x < out.product.symbol_count(); ++x) {
                out.observer.step[m][p * out.product.symbol_count() + x] = m | (1 << b);
            }
        }
    }
    // acceptance: sets of observer states whose union is a Muller set
    if (na > 16)
        throw std::invalid_argument("muller_reduction: powerset acceptance too large");
    for (int subset = 0; subset < (1 << na); ++subset) {
        int unioned = 0;
        for (int m = 0; m < na; ++m) {
            if (subset & (1 << m)) unioned |= m;
        }
        bool acc = false;
        for (const std::set<int>& f : muller.acceptance) {
            int fm = 0;
            for (int b : f) fm |= 1 << b;
            if (fm == unioned) {
                acc = true;
                break;
            }
        }
        if (acc) {
            std::set<int> s;
            for (int m = 0; m < na; ++m) {
                if (subset & (1 << m)) s.insert(m);
            }
            if (!s.empty()) out.observer.acceptance.push_back(std::move(s));
        }
    }
    return out;
}

AcceptanceResult muller_probability(const PPDA& ppda, const MullerAutomaton& muller,
                                    const Head& pX, const Rational& width,
                                    const Oracle& oracle) {
    MullerReduction red = muller_reduction(ppda, muller);
    // IRun positivity on the product factors through the base system: the
    // Muller component is deterministic, so runs correspond one-to-one.
    IrunPositivityFn base_pos = [&](const Head& h) {
        return irun_positive(ppda, red.project_head(h), oracle);
    };
    Head start{red.pack(pX.state, muller.init), pX.symbol};
    return acceptance_probability(red.product, red.observer, start, width, oracle, base_pos);
}

// ---------------------------------------------------------------------------
// combined existential/universal script (Thm acc-dec exact mode)

namespace {

std::string smt_rat2(const Rational& r) {
    BigInt num = boost::multiprecision::numerator(r);
    BigInt den = boost::multiprecision::denominator(r);
    bool neg = num < 0;
    if (neg) num = -num;
    std::string core = den == 1 ? num.str() + ".0" : "(/ " + num.str() + ".0 " + den.str() + ".0)";
    return neg ? "(- " + core + ")" : core;
}

std::string poly_smt(const Polynomial& p, const std::vector<std::string>& names) {
    std::vector<std::string> parts;
    if (p.constant != 0 || p.monomials.empty()) parts.push_back(smt_rat2(p.constant));
    for (const Monomial& m : p.monomials) {
        std::string t = "(* " + smt_rat2(m.coeff) + " " + names[m.v1];
        if (m.v2 >= 0) t += " " + names[m.v2];
        t += ")";
        parts.push_back(t);
    }
    if (parts.size() == 1) return parts[0];
    std::string out = "(+";
    for (const auto& s : parts) out += " " + s;
    return out + ")";
}

} // namespace

std::string export_acceptance_smt(const PPDA& ppda, const ObservingAutomaton& obs,
                                  const Head& pX, Rel rel, const Rational& bound,
                                  const Oracle& oracle) {
    // The chain structure (states and qualitative flags) is computed
    // internally; the script carries the quantitative part: the base
    // termination system and the observer-product pop system pinned to
    // their least solutions by a universal guard, the chain edge equations,
    // and the (unique) hitting system, then the threshold assertion.
    MinChain chain = build_min_chain(ppda, obs, Rational(1, 4), oracle);
    BsccClassification cls = bsccs(chain, obs);

    MonotoneSystem term = build_termination_system(ppda);
    ObserverProduct prod = product_observer(ppda, obs);
    MonotoneSystem pop = build_until_system(prod.product, SimpleSet::all(prod.product),
                                            SimpleSet::none());

    std::ostringstream out;
    out << "(set-logic NRA)\n";
    out << "; base termination system variables\n";
    std::vector<std::string> tn, pn;
    for (int i = 0; i < term.size(); ++i) {
        tn.push_back("t" + std::to_string(i));
        out << "(declare-const " << tn[i] << " Real) ; " << var_name(ppda, term.vars[i]) << "\n";
    }
    out << "; observer-product pop system variables\n";
    for (int i = 0; i < pop.size(); ++i) {
        pn.push_back("u" + std::to_string(i));
        out << "(declare-const " << pn[i] << " Real) ; " << var_name(prod.product, pop.vars[i])
            << "\n";
    }
    auto emit_system = [&](const MonotoneSystem& sys, const std::vector<std::string>& names) {
        for (int i = 0; i < sys.size(); ++i) {
            out << "(assert (and (<= 0.0 " << names[i] << ") (<= " << names[i] << " 1.0)))\n";
            out << "(assert (= " << names[i] << " " << poly_smt(sys.rhs[i], names) << "))\n";
        }
    };
    emit_system(term, tn);
    emit_system(pop, pn);

    auto emit_leastness = [&](const MonotoneSystem& sys, const std::vector<std::string>& names,
                              const std::string& prefix) {
        if (sys.size() == 0) return;
        out << "(assert (forall (";
        for (int i = 0; i < sys.size(); ++i) out << "(" << prefix << i << " Real)";
        out << ")\n  (=> (and";
        std::vector<std::string> ys;
        for (int i = 0; i < sys.size(); ++i) ys.push_back(prefix + std::to_string(i));
        for (int i = 0; i < sys.size(); ++i) {
            out << " (<= 0.0 " << ys[i] << ") (<= " << ys[i] << " 1.0)";
            out << " (= " << ys[i] << " " << poly_smt(sys.rhs[i], ys) << ")";
        }
        out << ")\n      (and";
        for (int i = 0; i < sys.size(); ++i) out << " (<= " << names[i] << " " << ys[i] << ")";
        out << "))))\n";
    };
    out << "; least-solution pinning\n";
    emit_leastness(term, tn, "yt");
    emit_leastness(pop, pn, "yu");

    // IRun per head, chain edges, hitting equations
    auto term_sum = [&](const Head& h) {
        QueryPoly g = head_until_sum(term, ppda, dead_set(ppda), h);
        std::ostringstream e;
        e << "(+ " << smt_rat2(g.constant);
        for (const auto& [c, vars] : g.terms) {
            e << " (* " << smt_rat2(c);
            for (int v : vars) e << " " << tn[v];
            e << ")";
        }
        e << ")";
        return e.str();
    };
    std::vector<std::string> hn(chain.states.size());
    out << "; hitting probabilities per chain state\n";
    for (size_t s = 0; s < chain.states.size(); ++s) {
        hn[s] = "h" + std::to_string(s);
        out << "(declare-const " << hn[s] << " Real) ; "
            << chain.states[s].name(ppda, obs) << "\n";
    }
    std::set<int> targets;
    for (size_t c = 0; c < cls.components.size(); ++c) {
        if (!cls.accepting[c]) continue;
        for (int s : cls.components[c]) targets.insert(s);
    }
    // reachability pruning identical to hitting_probability
    std::vector<char> can_reach(chain.states.size(), 0);
    {
        std::vector<std::vector<int>> radj(chain.states.size());
        for (size_t s = 0; s < chain.states.size(); ++s) {
            for (const ChainEdge& e : chain.edges[s]) {
                if (e.positive) radj[e.to].push_back(static_cast<int>(s));
            }
        }
        std::vector<int> work(targets.begin(), targets.end());
        for (int t : work) can_reach[t] = 1;
        while (!work.empty()) {
            int s = work.back();
            work.pop_back();
            for (int p : radj[s]) {
                if (!can_reach[p]) {
                    can_reach[p] = 1;
                    work.push_back(p);
                }
            }
        }
    }
    // edge expressions; pair edges are written e*irun(src) = irun(tgt)*S
    // through auxiliary variables
    int edge_id = 0;
    std::vector<std::vector<std::pair<int, std::string>>> out_edges(chain.states.size());
    for (size_t s = 0; s < chain.states.size(); ++s) {
        const ChainState& st = chain.states[s];
        for (const ChainEdge& e : chain.edges[s]) {
            if (!e.positive) continue;
            std::string ev = "e" + std::to_string(edge_id++);
            out << "(declare-const " << ev << " Real)\n";
            out << "(assert (and (<= 0.0 " << ev << ") (<= " << ev << " 1.0)))\n";
            if (st.kind == ChainState::Kind::Bot) {
                out << "(assert (= " << ev << " 1.0))\n";
            } else if (st.kind == ChainState::Kind::Entry) {
                std::string t = term_sum(st.head);
                if (chain.states[e.to].kind == ChainState::Kind::Bot) {
                    out << "(assert (= " << ev << " " << t << "))\n";
                } else {
                    out << "(assert (= " << ev << " (- 1.0 " << t << ")))\n";
                }
            } else {
                // S expression over pop-system vars
                const ChainState& tgt = chain.states[e.to];
                std::ostringstream sexpr;
                sexpr << "(+ 0.0";
                for (int ridx : ppda.rules_for(st.head)) {
                    const Rule& r = ppda.rules[ridx];
                    if (r.rhs_stack.empty()) continue;
                    Head top{r.rhs_state, r.rhs_stack[0]};
                    if (top == tgt.head &&
                        obs.advance(obs.init, top, ppda) == tgt.obs)
                        sexpr << " " << smt_rat2(r.prob);
                    if (r.rhs_stack.size() == 2 && r.rhs_stack[1] == tgt.head.symbol) {
                        for (int abar = 0; abar < obs.state_count(); ++abar) {
                            if (obs.advance(abar, tgt.head, ppda) != tgt.obs) continue;
                            VarId v{VarId::Kind::PopTo,
                                    Head{prod.pack(r.rhs_state, obs.init), r.rhs_stack[0]},
                                    prod.pack(tgt.head.state, abar)};
                            if (auto idx = pop.index_of(v)) {
                                sexpr << " (* " << smt_rat2(r.prob) << " " << pn[*idx] << ")";
                            } else if (pop.pins.count(v) && pop.pins.at(v) != 0) {
                                sexpr << " (* " << smt_rat2(r.prob) << " "
                                      << smt_rat2(pop.pins.at(v)) << ")";
                            }
                        }
                    }
                }
                sexpr << ")";
                out << "(assert (= (* " << ev << " (- 1.0 " << term_sum(st.head) << ")) (* (- 1.0 "
                    << term_sum(tgt.head) << ") " << sexpr.str() << ")))\n";
            }
            out_edges[s].emplace_back(e.to, ev);
        }
    }
    out << "; hitting equations\n";
    for (size_t s = 0; s < chain.states.size(); ++s) {
        if (targets.count(static_cast<int>(s))) {
            out << "(assert (= " << hn[s] << " 1.0))\n";
        } else if (!can_reach[s]) {
            out << "(assert (= " << hn[s] << " 0.0))\n";
        } else {
            std::ostringstream rhs;
            rhs << "(+ 0.0";
            for (const auto& [to, ev] : out_edges[s]) rhs << " (* " << ev << " " << hn[to] << ")";
            rhs << ")";
            out << "(assert (= " << hn[s] << " " << rhs.str() << "))\n";
        }
    }
    int source = chain.find_entry(ppda, pX);
    out << "(assert (" << (rel == Rel::Eq ? "=" : rel_to_string(rel)) << " " << hn[source] << " "
        << smt_rat2(bound) << "))\n";
    out << "(check-sat)\n";
    return out.str();
}

} // namespace ppmc
