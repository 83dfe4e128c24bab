#include "ppmc/sim.hpp"

#include "ppmc/equations.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <memory>
#include <set>

namespace ppmc {

namespace {

struct RuleSampler {
    // per head: rule indices, exact cumulative bounds, u64 floor thresholds
    struct Entry {
        std::vector<int> rules;
        std::vector<Rational> cum;
        std::vector<uint64_t> floors;
    };
    std::map<std::pair<int, int>, Entry> by_head;

    explicit RuleSampler(const PPDA& ppda) {
        for (int p = 0; p < ppda.state_count(); ++p) {
            for (int x = 0; x < ppda.symbol_count(); ++x) {
                Head h{p, x};
                const auto& rs = ppda.rules_for(h);
                if (rs.empty()) continue;
                Entry e;
                Rational acc{0};
                for (int ri : rs) {
                    acc += ppda.rules[ri].prob;
                    e.rules.push_back(ri);
                    e.cum.push_back(acc);
                    // floor(acc * 2^64), clamped
                    BigInt scaled = (boost::multiprecision::numerator(acc) << 64) /
                                    boost::multiprecision::denominator(acc);
                    uint64_t f = scaled >= BigInt(1) << 64
                                     ? ~0ULL
                                     : static_cast<uint64_t>(scaled.convert_to<BigInt>());
                    e.floors.push_back(f);
                }
                by_head[{p, x}] = std::move(e);
            }
        }
    }

    // index into entry.rules, or -1 when the draw falls beyond the total
    // mass (possible for heads with outgoing mass < 1)
    int pick(const Entry& e, uint64_t r) const {
        for (size_t i = 0; i < e.rules.size(); ++i) {
            if (r < e.floors[i]) return static_cast<int>(i);
            if (r == e.floors[i]) {
                // boundary: exact comparison r/2^64 < cum
                BigInt lhs = BigInt(r) * boost::multiprecision::denominator(e.cum[i]);
                BigInt rhs = boost::multiprecision::numerator(e.cum[i]) << 64;
                if (lhs < rhs) return static_cast<int>(i);
            }
        }
        return -1;
    }
};

} // namespace

RunSample sample_run(const PPDA& ppda, const Configuration& c, long max_steps, uint64_t seed) {
    static thread_local const PPDA* cached_ppda = nullptr;
    static thread_local std::unique_ptr<RuleSampler> cached_sampler;
    if (cached_ppda != &ppda) {
        cached_sampler = std::make_unique<RuleSampler>(ppda);
        cached_ppda = &ppda;
    }
    const RuleSampler& sampler = *cached_sampler;

    RunSample out;
    out.seed = seed;
    SplitMix64 rng(seed);
    Configuration cur = c;
    for (long step = 0; step < max_steps; ++step) {
        if (cur.empty_stack()) {
            out.terminated = true;
            break;
        }
        auto it = sampler.by_head.find({cur.state, cur.stack.front()});
        if (it == sampler.by_head.end()) {
            out.terminated = true; // stuck head
            break;
        }
        uint64_t r = rng.next();
        int k = sampler.pick(it->second, r);
        if (k < 0) {
            out.terminated = true; // sub-stochastic head, no rule fired
            break;
        }
        int ridx = it->second.rules[k];
        const Rule& rule = ppda.rules[ridx];
        out.steps.emplace_back(cur, ridx);
        Configuration next;
        next.state = rule.rhs_state;
        next.stack = rule.rhs_stack;
        next.stack.insert(next.stack.end(), cur.stack.begin() + 1, cur.stack.end());
        cur = std::move(next);
    }
    if (!out.terminated) out.truncated = true;
    out.final_config = std::move(cur);
    return out;
}

namespace {

uint64_t isqrt_u64(uint64_t n) {
    uint64_t r = static_cast<uint64_t>(std::sqrt(static_cast<double>(n)));
    while (r * r > n) --r;
    while ((r + 1) * (r + 1) <= n) ++r;
    return r;
}

Rational stderr_bound_for(long runs) {
    if (runs <= 0) return Rational(1);
    return Rational(1, 2 * static_cast<long long>(isqrt_u64(static_cast<uint64_t>(runs))));
}

} // namespace

UntilEstimate estimate_until(const PPDA& ppda, const SimpleSet& c1, const SimpleSet& c2,
                             const Configuration& c, long runs, long horizon, uint64_t seed) {
    UntilEstimate out;
    out.runs = runs;
    long hits = 0;
    SplitMix64 seeder(seed);
    for (long i = 0; i < runs; ++i) {
        uint64_t run_seed = seeder.next();
        SplitMix64 rng(run_seed);
        // inline walk with early until-classification
        Configuration cur = c;
        static thread_local const PPDA* cached = nullptr;
        static thread_local std::unique_ptr<RuleSampler> sampler;
        if (cached != &ppda) {
            sampler = std::make_unique<RuleSampler>(ppda);
            cached = &ppda;
        }
        bool settled = false;
        for (long step = 0; step <= horizon; ++step) {
            if (c2.contains(cur)) {
                ++hits;
                settled = true;
                break;
            }
            if (!c1.contains(cur)) {
                settled = true; // left C1 before reaching C2
                break;
            }
            if (cur.empty_stack()) {
                settled = true; // dead, eps not in C2
                break;
            }
            auto it = sampler->by_head.find({cur.state, cur.stack.front()});
            if (it == sampler->by_head.end()) {
                settled = true; // stuck outside C2
                break;
            }
            int k = sampler->pick(it->second, rng.next());
            if (k < 0) {
                settled = true;
                break;
            }
            const Rule& rule = ppda.rules[it->second.rules[k]];
            Configuration next;
            next.state = rule.rhs_state;
            next.stack = rule.rhs_stack;
            next.stack.insert(next.stack.end(), cur.stack.begin() + 1, cur.stack.end());
            cur = std::move(next);
        }
        if (!settled) ++out.truncation_count;
    }
    out.estimate = Rational(hits, runs);
    out.stderr_bound = stderr_bound_for(runs);
    return out;
}

std::vector<size_t> certified_minima(const PPDA& ppda, const std::vector<Configuration>& prefix) {
    if (prefix.empty()) return {};
    // Boolean pop relation from the termination system: (q, X) -> states r
    // with a positive-probability path qX => r-eps. Cached per system.
    static thread_local const PPDA* cached = nullptr;
    static thread_local std::vector<std::vector<std::vector<int>>> pop_rel;
    if (cached != &ppda) {
        MonotoneSystem term = build_termination_system(ppda);
        BooleanSystem bterm = boolean_abstraction(term);
        pop_rel.assign(ppda.state_count(),
                       std::vector<std::vector<int>>(ppda.symbol_count()));
        for (int q = 0; q < ppda.state_count(); ++q) {
            for (int x = 0; x < ppda.symbol_count(); ++x) {
                for (int r = 0; r < ppda.state_count(); ++r) {
                    if (var_positive(bterm, term, VarId{VarId::Kind::PopTo, Head{q, x}, r}))
                        pop_rel[q][x].push_back(r);
                }
            }
        }
        cached = &ppda;
    }
    auto pops_to = [&](int q, SymbolId x) -> const std::vector<int>& { return pop_rel[q][x]; };

    std::vector<size_t> lens(prefix.size());
    for (size_t i = 0; i < prefix.size(); ++i) lens[i] = prefix[i].stack.size();
    std::vector<size_t> provisional = minima(lens, false);

    // Deepest stack length the continuation can still reach: fold the pop
    // relation over the final stack, top-down, until the state set dies.
    const Configuration& fin = prefix.back();
    size_t m = fin.stack.size();
    size_t min_reachable_len = m;
    {
        std::set<int> states{fin.state};
        for (size_t k = 0; k < m && !states.empty(); ++k) {
            std::set<int> next;
            for (int q : states) {
                for (int r : pops_to(q, fin.stack[k])) next.insert(r);
            }
            states = std::move(next);
            if (!states.empty()) min_reachable_len = m - (k + 1);
        }
    }

    // a provisional minimum at length l is certified iff no continuation
    // can reach a shorter stack, i.e. l <= min_reachable_len
    std::vector<size_t> certified;
    for (size_t pos : provisional) {
        if (lens[pos] <= min_reachable_len) certified.push_back(pos);
    }
    return certified;
}

AcceptanceEstimate estimate_acceptance(const PPDA& ppda, const ObservingAutomaton& obs,
                                       const Head& pX, long runs, long horizon, uint64_t seed,
                                       const MinChain& chain, const BsccClassification& classes) {
    AcceptanceEstimate out;
    out.runs = runs;
    long accepted = 0;
    SplitMix64 seeder(seed);
    Configuration start{pX.state, {pX.symbol}};
    for (long i = 0; i < runs; ++i) {
        RunSample run = sample_run(ppda, start, horizon, seeder.next());
        if (run.terminated) continue; // footprint ends in Bot: rejecting
        std::vector<Configuration> prefix;
        prefix.reserve(run.steps.size() + 1);
        for (const auto& [cfg, ri] : run.steps) prefix.push_back(cfg);
        prefix.push_back(run.final_config);
        std::vector<size_t> mins = certified_minima(ppda, prefix);
        std::vector<ChainState> fp = footprint(ppda, obs, prefix, mins, false);
        bool settled = false;
        for (const ChainState& st : fp) {
            if (st.kind != ChainState::Kind::Pair) continue;
            int id = chain.find_pair(ppda, st.head, st.obs);
            if (id < 0) continue;
            int b = classes.bscc_id[id];
            if (b >= 0) {
                settled = true;
                if (classes.accepting[b]) ++accepted;
                break;
            }
        }
        if (!settled) ++out.undetermined_count;
    }
    out.estimate = Rational(accepted, runs);
    out.stderr_bound = stderr_bound_for(runs);
    return out;
}

} // namespace ppmc
