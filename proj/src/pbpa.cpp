#include "ppmc/pbpa.hpp"

#include <algorithm>
#include <stdexcept>

namespace ppmc {

namespace {

Rational pow_rational(const Rational& base, unsigned e) {
    Rational acc{1};
    Rational b = base;
    while (e) {
        if (e & 1) acc *= b;
        b *= b;
        e >>= 1;
    }
    return acc;
}

bool termination_condition(unsigned n, const Rational& nu, const Rational& lambda) {
    // n(nu + nu(n+1)(1+nu)^n) <= lambda/3, all exact
    Rational lhs = Rational(n) * (nu + nu * Rational(n + 1) * pow_rational(1 + nu, n));
    return lhs <= lambda / 3;
}

} // namespace

ApproxParams compute_params(const PPDA& pbpa, const SimpleSet& c1, const SimpleSet& c2,
                            const Rational& lambda, const Oracle& oracle) {
    if (!pbpa.pbpa_capable())
        throw std::invalid_argument("compute_params: system has more than one control state");
    if (!(lambda > 0 && lambda < 1))
        throw std::invalid_argument("compute_params: lambda outside (0,1)");

    ApproxParams out;
    out.lambda = lambda;
    out.eps_in_c2 = c2.eps_states.count(0) > 0;

    // line 1: S = { X | [X,eps] != 1 }, [X,eps] = P(X, C1\C2 U {eps})
    SimpleSet diff;
    for (const Head& h : c1.heads) {
        if (!c2.heads.count(h)) diff.heads.insert(h);
    }
    SimpleSet eps_target = SimpleSet::eps_only(pbpa);
    for (int x = 0; x < pbpa.symbol_count(); ++x) {
        OracleAnswer a = oracle.until_one(pbpa, diff, eps_target, Head{0, x});
        if (a.verdict == Verdict::Unknown)
            throw UndecidedPredicate("compute_params: [" + pbpa.alphabet[x] +
                                     ",eps]=1 undecided: " + a.note);
        if (a.verdict == Verdict::False) out.s_symbols.insert(x);
    }

    MonotoneSystem sys = build_until_system(pbpa, c1, c2);
    auto eps_var = [&](SymbolId x) { return VarId{VarId::Kind::PopTo, Head{0, x}, 0}; };
    auto bullet_var = [&](SymbolId x) { return VarId{VarId::Kind::Bullet, Head{0, x}, 0}; };

    for (SymbolId x : out.s_symbols) {
        out.eps_brackets[x] = Interval(0, 1);
        out.bullet_brackets[x] = Interval(0, 1);
    }
    out.nu = 1;
    out.kappa = 1;
    out.n = 0;

    Rational target(1, 2);
    const int max_passes = 256;
    for (int pass = 0; pass < max_passes; ++pass) {
        Brackets b = solve_brackets(sys, target, oracle.opts);
        Rational max_width{0};
        for (SymbolId x : out.s_symbols) {
            Interval e = b.var_interval(sys, eps_var(x)).meet(out.eps_brackets[x]);
            Interval bu = b.var_interval(sys, bullet_var(x)).meet(out.bullet_brackets[x]);
            out.eps_brackets[x] = e;
            out.bullet_brackets[x] = bu;
            max_width = std::max({max_width, e.width(), bu.width()});
        }
        // nu never increases; the brackets only tighten (meet)
        if (max_width < out.nu) out.nu = max_width;
        Rational kappa{0};
        for (SymbolId x : out.s_symbols) kappa = std::max(kappa, out.eps_brackets[x].hi);
        if (out.s_symbols.empty()) kappa = 0;
        if (kappa < out.kappa) out.kappa = kappa;
        out.kappa_trace.push_back(out.kappa);
        if (out.kappa < 1) {
            unsigned n = out.kappa == 0 ? 1u : least_power_below(out.kappa, lambda / 3);
            out.n = out.n_trace.empty() ? n : std::min(out.n, n);
            out.n_trace.push_back(out.n);
            if (termination_condition(out.n, out.nu, lambda)) return out;
        }
        target /= 2;
    }
    throw std::runtime_error("compute_params: refinement budget exhausted");
}

std::vector<SymbolId> restrict_word(const std::vector<SymbolId>& word,
                                    const std::set<SymbolId>& s) {
    std::vector<SymbolId> out;
    for (SymbolId x : word) {
        if (s.count(x)) out.push_back(x);
    }
    return out;
}

std::set<std::vector<SymbolId>> build_G(const ApproxParams& params, const Rational& rho,
                                        ThresholdDir dir, size_t word_cap) {
    // count words first
    size_t total = 1;
    size_t layer = 1;
    for (unsigned i = 1; i <= params.n; ++i) {
        layer *= std::max<size_t>(params.s_symbols.size(), 1);
        total += layer;
        if (total > word_cap)
            throw std::runtime_error("build_G: |S|^n exceeds the enumeration cap");
    }

    std::set<std::vector<SymbolId>> g;
    Rational slack = params.lambda / 3;

    // DFS over suffixes; value(X.w) = [X,.]^b + [X,eps]^b * value(w)
    struct Item {
        std::vector<SymbolId> word;
        Rational value;
    };
    std::vector<Item> layer_items;
    Rational eps_value = params.eps_in_c2 ? 1 : 0;
    layer_items.push_back({{}, eps_value});

    auto judge = [&](const Item& it) {
        bool boundary = it.word.size() == params.n;
        if (dir == ThresholdDir::Geq) {
            return boundary ? it.value >= rho - slack : it.value >= rho;
        }
        return boundary ? it.value <= rho + slack : it.value <= rho;
    };

    for (unsigned len = 0; len <= params.n; ++len) {
        std::vector<Item> next;
        for (const Item& it : layer_items) {
            if (judge(it)) g.insert(it.word);
            if (len == params.n) continue;
            for (SymbolId x : params.s_symbols) {
                const Interval& e = params.eps_brackets.at(x);
                const Interval& b = params.bullet_brackets.at(x);
                Rational v = dir == ThresholdDir::Geq ? b.hi + e.hi * it.value
                                                      : b.lo + e.lo * it.value;
                std::vector<SymbolId> w;
                w.reserve(it.word.size() + 1);
                w.push_back(x);
                w.insert(w.end(), it.word.begin(), it.word.end());
                next.push_back({std::move(w), std::move(v)});
            }
        }
        layer_items = std::move(next);
    }
    return g;
}

DeltaAutomaton build_threshold_automaton(const PPDA& pbpa,
                                         const std::set<std::vector<SymbolId>>& g,
                                         const ApproxParams& params) {
    // Reading bottom-up, keep the topmost-first window of the last <= n
    // S-symbols seen; a new S-symbol enters at the front, the entry
    // farthest from the top falls out. Acceptance only depends on that
    // window: |window| < n means the whole restriction was read.
    const unsigned n = params.n;
    const std::set<SymbolId>& s = params.s_symbols;

    std::map<std::vector<SymbolId>, int> ids;
    std::vector<std::vector<SymbolId>> windows;
    auto id_of = [&](const std::vector<SymbolId>& w) {
        auto it = ids.find(w);
        if (it != ids.end()) return it->second;
        int id = static_cast<int>(windows.size());
        ids.emplace(w, id);
        windows.push_back(w);
        return id;
    };

    DeltaAutomaton out;
    out.symbol_count = pbpa.symbol_count();
    int init = id_of({});
    out.control_init.assign(pbpa.state_count(), init);
    for (int id = 0; id < static_cast<int>(windows.size()); ++id) {
        std::vector<SymbolId> cur = windows[id];
        out.trans.emplace_back(out.symbol_count, 0);
        for (int a = 0; a < out.symbol_count; ++a) {
            if (!s.count(a)) {
                out.trans[id][a] = id;
                continue;
            }
            std::vector<SymbolId> w;
            w.push_back(a);
            w.insert(w.end(), cur.begin(), cur.end());
            if (w.size() > n) w.resize(n);
            out.trans[id][a] = id_of(w);
        }
        std::string name = "w:";
        for (SymbolId x : cur) name += pbpa.alphabet[x];
        out.state_names.push_back(name);
        if (g.count(cur)) out.accepting.insert(id);
    }
    return out;
}

DeltaAutomaton sat_next_quant(const PPDA& pbpa, const SimpleSet& c, Rel rel,
                              const Rational& rho) {
    auto succ_in_c = [&](const Rule& r, int below) {
        if (r.rhs_stack.empty()) {
            if (below < 0) return c.eps_states.count(r.rhs_state) > 0;
            return c.heads.count(Head{r.rhs_state, below}) > 0;
        }
        return c.heads.count(Head{r.rhs_state, r.rhs_stack[0]}) > 0;
    };
    auto compare = [&](const Rational& v) {
        switch (rel) {
            case Rel::Lt: return v < rho;
            case Rel::Le: return v <= rho;
            case Rel::Ge: return v >= rho;
            case Rel::Gt: return v > rho;
            case Rel::Eq: return v == rho;
        }
        return false;
    };
    // reuse the top-two layout through sat_next_qual's helper shape
    int nq = pbpa.state_count();
    int ns = pbpa.symbol_count();
    DeltaAutomaton out;
    out.symbol_count = ns;
    int total = nq + nq * ns + nq * ns * ns;
    out.state_names.resize(total);
    out.trans.assign(total, std::vector<int>(ns, 0));
    auto one = [&](int p, int top) { return nq + p * ns + top; };
    auto two = [&](int p, int top, int below) {
        return nq + nq * ns + ((p * ns) + top) * ns + below;
    };
    auto weight = [&](int p, int top, int below) {
        Rational sum{0};
        for (int ri : pbpa.rules_for(Head{p, top})) {
            if (succ_in_c(pbpa.rules[ri], below)) sum += pbpa.rules[ri].prob;
        }
        return sum;
    };
    for (int p = 0; p < nq; ++p) {
        out.control_init.push_back(p);
        out.state_names[p] = pbpa.states[p] + "/eps";
        for (int a = 0; a < ns; ++a) out.trans[p][a] = one(p, a);
        if (compare(Rational(0))) out.accepting.insert(p); // p-eps has no successors
        for (int top = 0; top < ns; ++top) {
            out.state_names[one(p, top)] = pbpa.states[p] + "/" + pbpa.alphabet[top];
            for (int a = 0; a < ns; ++a) out.trans[one(p, top)][a] = two(p, a, top);
            if (compare(weight(p, top, -1))) out.accepting.insert(one(p, top));
            for (int below = 0; below < ns; ++below) {
                out.state_names[two(p, top, below)] =
                    pbpa.states[p] + "/" + pbpa.alphabet[top] + "," + pbpa.alphabet[below];
                for (int a = 0; a < ns; ++a) out.trans[two(p, top, below)][a] = two(p, a, top);
                if (compare(weight(p, top, below))) out.accepting.insert(two(p, top, below));
            }
        }
    }
    return out;
}

namespace {

DeltaAutomaton tolerant_rec(const PPDA& pbpa, const FormulaPtr& f, const RegularValuation& nu,
                            const Rational& lambda, const Oracle& oracle) {
    switch (f->kind) {
        case Formula::Kind::True: return universal_automaton(pbpa);
        case Formula::Kind::False: return empty_automaton(pbpa);
        case Formula::Kind::Atom: {
            auto it = nu.atoms.find(f->atom);
            if (it == nu.atoms.end())
                throw std::invalid_argument("error-tolerant check: unbound atom " + f->atom);
            return it->second;
        }
        case Formula::Kind::Not:
            throw std::logic_error("tolerant_rec: negation not eliminated");
        case Formula::Kind::And:
            return intersect(tolerant_rec(pbpa, f->lhs, nu, lambda, oracle),
                             tolerant_rec(pbpa, f->rhs, nu, lambda, oracle));
        case Formula::Kind::Or:
            return unite(tolerant_rec(pbpa, f->lhs, nu, lambda, oracle),
                         tolerant_rec(pbpa, f->rhs, nu, lambda, oracle));
        case Formula::Kind::Next: {
            DeltaAutomaton sub = tolerant_rec(pbpa, f->lhs, nu, lambda, oracle);
            RegSimReduction red = reduce_to_simple(pbpa, {sub});
            DeltaAutomaton prod = sat_next_quant(red.product, red.simple_images[0], f->rel, f->rho);
            return map_back(pbpa, red, prod);
        }
        case Formula::Kind::Until: {
            DeltaAutomaton a1 = tolerant_rec(pbpa, f->lhs, nu, lambda, oracle);
            DeltaAutomaton a2 = tolerant_rec(pbpa, f->rhs, nu, lambda, oracle);
            RegSimReduction red = reduce_to_simple(pbpa, {a1, a2});
            // strict thresholds keep a margin so the accepted set stays
            // inside the open relaxed denotation
            bool strict = f->rel == Rel::Gt || f->rel == Rel::Lt;
            Rational lam = strict ? lambda / 2 : lambda;
            ApproxParams params =
                compute_params(red.product, red.simple_images[0], red.simple_images[1], lam, oracle);
            ThresholdDir dir =
                (f->rel == Rel::Ge || f->rel == Rel::Gt) ? ThresholdDir::Geq : ThresholdDir::Leq;
            auto g = build_G(params, f->rho, dir);
            DeltaAutomaton prod = build_threshold_automaton(red.product, g, params);
            return map_back(pbpa, red, prod);
        }
    }
    throw std::logic_error("tolerant_rec: bad node");
}

} // namespace

DeltaAutomaton error_tolerant_set(const PPDA& pbpa, const FormulaPtr& f,
                                  const RegularValuation& nu, const Rational& lambda,
                                  const Oracle& oracle) {
    if (!pbpa.pbpa_capable())
        throw std::invalid_argument("error-tolerant checking is restricted to pBPA");
    auto [nf, nu2] = negation_free(f, nu);
    return tolerant_rec(pbpa, nf, nu2, lambda, oracle).trimmed();
}

ToleranceVerdict check_error_tolerant(const PPDA& pbpa, const FormulaPtr& f,
                                      const RegularValuation& nu, const Configuration& c,
                                      const Rational& lambda, const Oracle& oracle) {
    DeltaAutomaton a = error_tolerant_set(pbpa, f, nu, lambda, oracle);
    return ToleranceVerdict{a.accepts(c), lambda};
}

} // namespace ppmc
