#pragma once

// Test-only independent oracle: exact PCTL evaluation for stack-bounded
// systems (pop/swap rules only), where the reachable configuration space is
// finite. Kept deliberately separate from the library's algorithms: until
// probabilities come from a direct rational linear solve over the explicit
// Markov chain.

#include "ppmc/linalg.hpp"
#include "ppmc/model.hpp"
#include "ppmc/pctl.hpp"
#include "ppmc/regsets.hpp"

#include <map>
#include <set>
#include <stdexcept>
#include <vector>

namespace ppmc::finite_oracle {

struct FiniteChain {
    std::vector<Configuration> configs;
    std::map<Configuration, int> index;
    std::vector<std::vector<std::pair<int, Rational>>> succ;

    static FiniteChain build(const PPDA& p, int max_len) {
        for (const Rule& r : p.rules) {
            if (r.rhs_stack.size() > 1)
                throw std::invalid_argument("finite oracle needs pop/swap rules only");
        }
        FiniteChain c;
        c.configs = enumerate_configurations(p, max_len);
        for (size_t i = 0; i < c.configs.size(); ++i) c.index[c.configs[i]] = static_cast<int>(i);
        c.succ.resize(c.configs.size());
        for (size_t i = 0; i < c.configs.size(); ++i) {
            for (auto& [s, prob] : successors(p, c.configs[i])) {
                c.succ[i].emplace_back(c.index.at(s), prob);
            }
        }
        return c;
    }

    /// exact until probabilities per configuration
    std::vector<Rational> until(const std::vector<char>& in_c1,
                                const std::vector<char>& in_c2) const {
        size_t n = configs.size();
        // classify: target / zero (cannot reach C2 through C1) / linear
        std::vector<char> can_reach(n, 0);
        std::vector<int> work;
        for (size_t i = 0; i < n; ++i) {
            if (in_c2[i]) {
                can_reach[i] = 1;
                work.push_back(static_cast<int>(i));
            }
        }
        // reverse reachability through C1
        std::vector<std::vector<int>> preds(n);
        for (size_t i = 0; i < n; ++i) {
            for (auto& [j, pr] : succ[i]) preds[j].push_back(static_cast<int>(i));
        }
        while (!work.empty()) {
            int j = work.back();
            work.pop_back();
            for (int i : preds[j]) {
                if (!can_reach[i] && in_c1[i] && !in_c2[i]) {
                    can_reach[i] = 1;
                    work.push_back(i);
                }
            }
        }
        std::vector<int> solve_ids;
        std::vector<int> col(n, -1);
        for (size_t i = 0; i < n; ++i) {
            if (can_reach[i] && !in_c2[i]) {
                col[i] = static_cast<int>(solve_ids.size());
                solve_ids.push_back(static_cast<int>(i));
            }
        }
        RatMatrix m(solve_ids.size(), RatVector(solve_ids.size(), Rational(0)));
        RatVector b(solve_ids.size(), Rational(0));
        for (size_t r = 0; r < solve_ids.size(); ++r) {
            int i = solve_ids[r];
            m[r][r] = 1;
            for (auto& [j, pr] : succ[i]) {
                if (in_c2[j]) {
                    b[r] += pr;
                } else if (col[j] >= 0) {
                    m[r][col[j]] -= pr;
                }
            }
        }
        auto x = solve_linear(std::move(m), std::move(b));
        if (!x) throw std::runtime_error("finite oracle: singular until system");
        std::vector<Rational> out(n, Rational(0));
        for (size_t i = 0; i < n; ++i) {
            if (in_c2[i]) out[i] = 1;
            else if (col[i] >= 0) out[i] = (*x)[col[i]];
        }
        return out;
    }

    std::vector<char> eval(const FormulaPtr& f,
                           const std::map<std::string, DeltaAutomaton>& atoms) const {
        size_t n = configs.size();
        std::vector<char> out(n, 0);
        auto cmp = [](Rel rel, const Rational& v, const Rational& rho) {
            switch (rel) {
                case Rel::Lt: return v < rho;
                case Rel::Le: return v <= rho;
                case Rel::Eq: return v == rho;
                case Rel::Ge: return v >= rho;
                case Rel::Gt: return v > rho;
            }
            return false;
        };
        switch (f->kind) {
            case Formula::Kind::True:
                out.assign(n, 1);
                return out;
            case Formula::Kind::False: return out;
            case Formula::Kind::Atom: {
                const DeltaAutomaton& a = atoms.at(f->atom);
                for (size_t i = 0; i < n; ++i) out[i] = a.accepts(configs[i]);
                return out;
            }
            case Formula::Kind::Not: {
                auto sub = eval(f->lhs, atoms);
                for (size_t i = 0; i < n; ++i) out[i] = !sub[i];
                return out;
            }
            case Formula::Kind::And: {
                auto l = eval(f->lhs, atoms), r = eval(f->rhs, atoms);
                for (size_t i = 0; i < n; ++i) out[i] = l[i] && r[i];
                return out;
            }
            case Formula::Kind::Or: {
                auto l = eval(f->lhs, atoms), r = eval(f->rhs, atoms);
                for (size_t i = 0; i < n; ++i) out[i] = l[i] || r[i];
                return out;
            }
            case Formula::Kind::Next: {
                auto sub = eval(f->lhs, atoms);
                for (size_t i = 0; i < n; ++i) {
                    Rational mass{0};
                    for (auto& [j, pr] : succ[i]) {
                        if (sub[j]) mass += pr;
                    }
                    out[i] = cmp(f->rel, mass, f->rho);
                }
                return out;
            }
            case Formula::Kind::Until: {
                auto l = eval(f->lhs, atoms), r = eval(f->rhs, atoms);
                auto probs = until(l, r);
                for (size_t i = 0; i < n; ++i) out[i] = cmp(f->rel, probs[i], f->rho);
                return out;
            }
        }
        throw std::logic_error("finite oracle: bad node");
    }

    std::vector<char> in_set(const SimpleSet& s) const {
        std::vector<char> out(configs.size(), 0);
        for (size_t i = 0; i < configs.size(); ++i) out[i] = s.contains(configs[i]);
        return out;
    }
};

} // namespace ppmc::finite_oracle
