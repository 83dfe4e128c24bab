#include "ppmc/omega.hpp"

#include <algorithm>
#include <stdexcept>

namespace ppmc {

std::vector<size_t> minima(const std::vector<size_t>& stack_lengths, bool horizon_complete) {
    (void)horizon_complete; // same scan either way; completeness is the caller's claim
    std::vector<size_t> out;
    if (stack_lengths.empty()) return out;
    std::vector<size_t> suffix_min(stack_lengths.size());
    size_t m = stack_lengths.back();
    for (size_t i = stack_lengths.size(); i-- > 0;) {
        m = std::min(m, stack_lengths[i]);
        suffix_min[i] = m;
    }
    for (size_t i = 0; i < stack_lengths.size(); ++i) {
        if (stack_lengths[i] <= suffix_min[i]) out.push_back(i);
    }
    return out;
}

int observe(const ObservingAutomaton& obs, const PPDA& ppda, const std::vector<Head>& heads) {
    int a = obs.init;
    for (const Head& h : heads) a = obs.advance(a, h, ppda);
    return a;
}

ObserverProduct product_observer(const PPDA& ppda, const ObservingAutomaton& obs) {
    ObserverProduct out;
    out.base_states = ppda.state_count();
    out.obs_states = obs.state_count();
    out.product.alphabet = ppda.alphabet;
    for (int p = 0; p < ppda.state_count(); ++p) {
        for (int a = 0; a < obs.state_count(); ++a) {
            out.product.states.push_back("(" + ppda.states[p] + "," + obs.state_names[a] + ")");
        }
    }
    for (const Rule& r : ppda.rules) {
        for (int a = 0; a < obs.state_count(); ++a) {
            Rule nr;
            nr.lhs = Head{out.pack(r.lhs.state, a), r.lhs.symbol};
            nr.rhs_state = out.pack(r.rhs_state, obs.advance(a, r.lhs, ppda));
            nr.rhs_stack = r.rhs_stack;
            nr.prob = r.prob;
            out.product.rules.push_back(std::move(nr));
        }
    }
    out.product.reindex();
    return out;
}

IntervalResult pop_path_prob(const PPDA& ppda, const ObservingAutomaton& obs, const Head& qY,
                             StateId r, SymbolId z, int a, const Rational& width,
                             const SolverOptions& opts) {
    ObserverProduct prod = product_observer(ppda, obs);
    // targets: (r, abar)-eps with step(abar, rZ) = a
    std::vector<int> targets;
    for (int abar = 0; abar < obs.state_count(); ++abar) {
        if (obs.advance(abar, Head{r, z}, ppda) == a) targets.push_back(prod.pack(r, abar));
    }
    if (targets.empty()) {
        IntervalResult res;
        res.value = Interval::point(Rational(0));
        res.width_met = true;
        return res;
    }
    Rational per = width / static_cast<int>(targets.size());
    IntervalResult total;
    total.value = Interval::point(Rational(0));
    total.width_met = true;
    Configuration start{prod.pack(qY.state, obs.init), {qY.symbol}};
    for (int t : targets) {
        SimpleSet c2;
        c2.eps_states.insert(t);
        IntervalResult one =
            until_probability(prod.product, SimpleSet::all(prod.product), c2, start, per, opts);
        total.value = total.value + one.value;
        total.width_met = total.width_met && one.width_met;
        total.iterations = std::max(total.iterations, one.iterations);
    }
    if (total.value.hi > 1) total.value.hi = 1;
    return total;
}

bool pop_path_positive(const PPDA& ppda, const ObservingAutomaton& obs, const Head& qY,
                       StateId r, SymbolId z, int a, const Oracle& oracle) {
    ObserverProduct prod = product_observer(ppda, obs);
    Configuration start{prod.pack(qY.state, obs.init), {qY.symbol}};
    for (int abar = 0; abar < obs.state_count(); ++abar) {
        if (obs.advance(abar, Head{r, z}, ppda) != a) continue;
        SimpleSet c2;
        c2.eps_states.insert(prod.pack(r, abar));
        if (oracle.until_positive(prod.product, SimpleSet::all(prod.product), c2,
                                  start.head()))
            return true;
    }
    return false;
}

std::string ChainState::name(const PPDA& ppda, const ObservingAutomaton& o) const {
    switch (kind) {
        case Kind::Bot: return "bot";
        case Kind::Entry: return ppda.head_name(head);
        case Kind::Pair: return "(" + ppda.head_name(head) + "," + o.state_names[obs] + ")";
    }
    return "?";
}

int MinChain::find_entry(const PPDA& ppda, const Head& h) const {
    auto it = entry_index.find(h.state * ppda.symbol_count() + h.symbol);
    if (it == entry_index.end()) throw std::out_of_range("find_entry: no such head");
    return it->second;
}

int MinChain::find_pair(const PPDA& ppda, const Head& h, int obs) const {
    auto it = pair_index.find({h.state * ppda.symbol_count() + h.symbol, obs});
    if (it == pair_index.end()) return -1;
    return it->second;
}

MinChain build_min_chain(const PPDA& ppda, const ObservingAutomaton& obs, const Rational& width,
                         const Oracle& oracle, const IrunPositivityFn& irun_pos_fn) {
    MinChain chain;
    auto irun_pos = [&](const Head& h) -> OracleAnswer {
        if (irun_pos_fn) return irun_pos_fn(h);
        return irun_positive(ppda, h, oracle);
    };

    chain.states.push_back(ChainState{ChainState::Kind::Bot, Head{}, 0});
    chain.bot = 0;

    std::vector<Head> heads;
    std::vector<char> head_irun_pos;
    for (int p = 0; p < ppda.state_count(); ++p) {
        for (int x = 0; x < ppda.symbol_count(); ++x) {
            Head h{p, x};
            heads.push_back(h);
            OracleAnswer a = irun_pos(h);
            if (a.verdict == Verdict::Unknown)
                throw UndecidedPositivity("IRun positivity undecided for head " +
                                          ppda.head_name(h) + ": " + a.note);
            head_irun_pos.push_back(a.verdict == Verdict::True ? 1 : 0);
            int id = static_cast<int>(chain.states.size());
            chain.states.push_back(ChainState{ChainState::Kind::Entry, h, 0});
            chain.entry_index[p * ppda.symbol_count() + x] = id;
        }
    }
    for (size_t i = 0; i < heads.size(); ++i) {
        if (!head_irun_pos[i]) continue;
        for (int a = 0; a < obs.state_count(); ++a) {
            int id = static_cast<int>(chain.states.size());
            chain.states.push_back(ChainState{ChainState::Kind::Pair, heads[i], a});
            chain.pair_index[{heads[i].state * ppda.symbol_count() + heads[i].symbol, a}] = id;
        }
    }
    chain.edges.resize(chain.states.size());

    // Bot self-loop
    chain.edges[0].push_back(ChainEdge{0, 0, Interval::point(Rational(1)), true});

    // entry edges
    std::map<int, Interval> irun_iv; // head index -> bracket
    for (size_t i = 0; i < heads.size(); ++i) {
        const Head& h = heads[i];
        int hidx = h.state * ppda.symbol_count() + h.symbol;
        IntervalResult ir = irun_probability(ppda, h, width / 2, oracle.opts);
        irun_iv[hidx] = ir.value;
        int entry = chain.entry_index[hidx];
        if (head_irun_pos[i]) {
            int pair0 = chain.find_pair(ppda, h, obs.init);
            chain.edges[entry].push_back(ChainEdge{entry, pair0, ir.value, true});
        }
        bool term_pos =
            oracle.until_positive(ppda, SimpleSet::all(ppda), dead_set(ppda), h);
        Interval to_bot = ir.value.complement();
        if (term_pos)
            chain.edges[entry].push_back(ChainEdge{entry, chain.bot, to_bot, true});
        else if (!(to_bot.hi == 0))
            chain.edges[entry].push_back(ChainEdge{entry, chain.bot, to_bot, false});
    }

    // pair edges: computed once per source head, shared across observations
    for (size_t i = 0; i < heads.size(); ++i) {
        if (!head_irun_pos[i]) continue;
        const Head& src = heads[i];
        int src_hidx = src.state * ppda.symbol_count() + src.symbol;
        Interval src_irun = irun_iv[src_hidx];
        if (!(src_irun.lo > 0)) {
            // refine until the denominator separates from zero
            Rational w = width / 4;
            while (!(src_irun.lo > 0)) {
                IntervalResult ir = irun_probability(ppda, src, w, oracle.opts);
                src_irun = src_irun.meet(ir.value);
                if (src_irun.lo > 0) break;
                if (w < Rational(1, BigInt(1) << oracle.opts.precision_bits))
                    throw std::runtime_error(
                        "build_min_chain: cannot separate IRun(" + ppda.head_name(src) +
                        ") from zero despite positive verdict");
                w /= 16;
            }
            irun_iv[src_hidx] = src_irun;
        }

        // S-contributions per (target head, observation)
        std::map<std::pair<int, int>, Interval> s_sum;      // (head idx, a') -> interval
        std::map<std::pair<int, int>, bool> s_pos;          // positivity
        auto add = [&](const Head& tgt, int a, const Interval& iv, bool pos) {
            int hidx = tgt.state * ppda.symbol_count() + tgt.symbol;
            auto key = std::make_pair(hidx, a);
            auto it = s_sum.find(key);
            if (it == s_sum.end()) {
                s_sum.emplace(key, iv);
                s_pos[key] = pos;
            } else {
                it->second = it->second + iv;
                s_pos[key] = s_pos[key] || pos;
            }
        };
        for (int ridx : ppda.rules_for(src)) {
            const Rule& r = ppda.rules[ridx];
            if (r.rhs_stack.empty()) continue; // a minimum cannot pop
            Head top{r.rhs_state, r.rhs_stack[0]};
            int a_top = obs.advance(obs.init, top, ppda);
            add(top, a_top, Interval::point(r.prob), true);
            if (r.rhs_stack.size() == 2) {
                // pop the pushed top, landing on the second symbol
                SymbolId below = r.rhs_stack[1];
                for (int q = 0; q < ppda.state_count(); ++q) {
                    for (int a = 0; a < obs.state_count(); ++a) {
                        Head tgt{q, below};
                        if (!pop_path_positive(ppda, obs, top, q, below, a, oracle)) continue;
                        IntervalResult pp =
                            pop_path_prob(ppda, obs, top, q, below, a, width / 4, oracle.opts);
                        add(tgt, a, Interval(pp.value.lo * r.prob, pp.value.hi * r.prob), true);
                    }
                }
            }
        }

        for (const auto& [key, s_iv] : s_sum) {
            auto [tgt_hidx, a] = key;
            Head tgt{tgt_hidx / ppda.symbol_count(), tgt_hidx % ppda.symbol_count()};
            int tgt_pair = chain.find_pair(ppda, tgt, a);
            if (tgt_pair < 0) continue; // IRun(tgt) = 0: no such chain state
            Interval tgt_irun = irun_iv[tgt_hidx];
            Interval ratio = interval_div(tgt_irun, src_irun);
            Interval prob = ratio * s_iv;
            if (prob.hi > 1) prob.hi = 1;
            bool pos = s_pos.at(key); // target pair exists => IRun(tgt) > 0
            for (int a_src = 0; a_src < obs.state_count(); ++a_src) {
                int from = chain.find_pair(ppda, src, a_src);
                chain.edges[from].push_back(ChainEdge{from, tgt_pair, prob, pos});
            }
        }
    }
    return chain;
}

std::vector<ChainState> footprint(const PPDA& ppda, const ObservingAutomaton& obs,
                                  const std::vector<Configuration>& prefix,
                                  const std::vector<size_t>& min_positions, bool terminated) {
    std::vector<ChainState> out;
    if (prefix.empty()) return out;
    if (prefix.front().empty_stack())
        throw std::invalid_argument("footprint: run starts at an empty stack");
    out.push_back(ChainState{ChainState::Kind::Entry, prefix.front().head(), 0});
    if (terminated) {
        out.push_back(ChainState{ChainState::Kind::Bot, Head{}, 0});
        return out;
    }
    size_t prev = 0;
    bool first = true;
    for (size_t pos : min_positions) {
        if (first) {
            // the first minimum of an infinite run from a length-1 start is
            // the start itself; it is paired with the initial observation
            out.push_back(ChainState{ChainState::Kind::Pair, prefix[pos].head(), obs.init});
            first = false;
        } else {
            int a = obs.init;
            for (size_t j = prev + 1; j <= pos; ++j) a = obs.advance(a, prefix[j].head(), ppda);
            out.push_back(ChainState{ChainState::Kind::Pair, prefix[pos].head(), a});
        }
        prev = pos;
    }
    return out;
}

} // namespace ppmc
