#include "ppmc/solver.hpp"

#include "ppmc/graph.hpp"
#include "ppmc/linalg.hpp"

#include <algorithm>
#include <array>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>

#include <unistd.h>

namespace ppmc {

std::string rel_to_string(Rel r) {
    switch (r) {
        case Rel::Lt: return "<";
        case Rel::Le: return "<=";
        case Rel::Eq: return "=";
        case Rel::Ge: return ">=";
        case Rel::Gt: return ">";
    }
    return "?";
}

std::optional<Rel> rel_from_string(const std::string& s) {
    if (s == "<") return Rel::Lt;
    if (s == "<=") return Rel::Le;
    if (s == "=" || s == "==") return Rel::Eq;
    if (s == ">=") return Rel::Ge;
    if (s == ">") return Rel::Gt;
    return std::nullopt;
}

// ---------------------------------------------------------------------------
// QueryPoly

Rational QueryPoly::eval(const Valuation& v) const {
    Rational acc = constant;
    for (const auto& [c, vars] : terms) {
        Rational t = c;
        for (int idx : vars) t *= v[idx];
        acc += t;
    }
    return acc;
}

void QueryPoly::add_term(const Rational& coeff, std::vector<int> vars) {
    if (coeff == 0) return;
    if (vars.empty()) {
        constant += coeff;
        return;
    }
    std::sort(vars.begin(), vars.end());
    terms.emplace_back(coeff, std::move(vars));
}

void QueryPoly::canonicalize() {
    std::sort(terms.begin(), terms.end(),
              [](const auto& a, const auto& b) { return a.second < b.second; });
    std::vector<std::pair<Rational, std::vector<int>>> merged;
    for (auto& t : terms) {
        if (!merged.empty() && merged.back().second == t.second) {
            merged.back().first += t.first;
        } else {
            merged.push_back(std::move(t));
        }
    }
    terms.clear();
    for (auto& t : merged) {
        if (t.first != 0) terms.push_back(std::move(t));
    }
}

QueryPoly poly_product(const QueryPoly& a, const QueryPoly& b) {
    QueryPoly out;
    out.constant = a.constant * b.constant;
    for (const auto& [c, vars] : a.terms) out.add_term(c * b.constant, vars);
    for (const auto& [c, vars] : b.terms) out.add_term(c * a.constant, vars);
    for (const auto& [ca, va] : a.terms) {
        for (const auto& [cb, vb] : b.terms) {
            std::vector<int> vars = va;
            vars.insert(vars.end(), vb.begin(), vb.end());
            out.add_term(ca * cb, std::move(vars));
        }
    }
    out.canonicalize();
    return out;
}

QueryPoly poly_sum(const QueryPoly& a, const QueryPoly& b) {
    QueryPoly out = a;
    out.constant += b.constant;
    for (const auto& t : b.terms) out.terms.push_back(t);
    out.canonicalize();
    return out;
}

QueryPoly poly_scale(const QueryPoly& a, const Rational& c) {
    QueryPoly out;
    if (c == 0) return out;
    out.constant = a.constant * c;
    for (const auto& [coef, vars] : a.terms) out.terms.emplace_back(coef * c, vars);
    return out;
}

// ---------------------------------------------------------------------------
// Kleene iteration and certificates

KleeneResult kleene_lower(const MonotoneSystem& sys, const KleeneStop& stop,
                          unsigned precision_bits) {
    KleeneResult res;
    res.lower.assign(sys.size(), Rational(0));
    long max_iters = stop.iterations.value_or(1 << 20);
    for (long k = 0; k < max_iters; ++k) {
        Valuation next = sys.evaluate(res.lower);
        bool progress = false;
        Rational max_delta{0};
        for (int i = 0; i < sys.size(); ++i) {
            Rational rounded = dyadic_floor(next[i], precision_bits);
            if (rounded > res.lower[i]) {
                Rational d = rounded - res.lower[i];
                if (d > max_delta) max_delta = d;
                res.lower[i] = rounded;
                progress = true;
            }
        }
        ++res.iterations;
        if (!progress) {
            // stalled on the dyadic grid; exact fixpoint check
            Valuation exact = sys.evaluate(res.lower);
            res.fixpoint = (exact == res.lower);
            break;
        }
        if (stop.delta && max_delta <= *stop.delta) break;
    }
    return res;
}

bool certify_upper(const MonotoneSystem& sys, const Valuation& cand) {
    if (static_cast<int>(cand.size()) != sys.size())
        throw std::invalid_argument("certify_upper: arity");
    Valuation image = sys.evaluate(cand);
    for (int i = 0; i < sys.size(); ++i) {
        if (image[i] > cand[i]) return false;
    }
    return true;
}

// ---------------------------------------------------------------------------
// Exact linear least fixed points (SCC-wise)

std::optional<Valuation> solve_linear_lfp(const MonotoneSystem& sys) {
    for (const Polynomial& p : sys.rhs) {
        if (!p.is_linear()) return std::nullopt;
    }
    SccDecomposition scc = tarjan_scc(sys.dependency_graph());
    Valuation val(sys.size());
    std::vector<char> solved(sys.size(), 0);
    for (int comp = 0; comp < scc.count; ++comp) {
        const std::vector<int>& nodes = scc.members[comp];
        std::map<int, int> local;
        for (size_t i = 0; i < nodes.size(); ++i) local[nodes[i]] = static_cast<int>(i);
        size_t n = nodes.size();
        RatMatrix m(n, RatVector(n, Rational(0)));
        RatVector b(n, Rational(0));
        for (size_t i = 0; i < n; ++i) {
            const Polynomial& p = sys.rhs[nodes[i]];
            m[i][i] = 1;
            b[i] = p.constant;
            for (const Monomial& mono : p.monomials) {
                auto it = local.find(mono.v1);
                if (it != local.end()) {
                    m[i][it->second] -= mono.coeff;
                } else {
                    if (!solved[mono.v1]) return std::nullopt; // dependency order broken
                    b[i] += mono.coeff * val[mono.v1];
                }
            }
        }
        auto x = solve_linear(std::move(m), std::move(b));
        if (!x) return std::nullopt;
        for (size_t i = 0; i < n; ++i) {
            if ((*x)[i] < 0) return std::nullopt;
            val[nodes[i]] = (*x)[i];
            solved[nodes[i]] = 1;
        }
    }
    return val;
}

// ---------------------------------------------------------------------------
// Upper certificates, SCC-topological construction

namespace {

struct ReducedMap {
    MonotoneSystem reduced;
    std::vector<int> to_reduced; // sys live index -> reduced index or -1 (zero)
};

ReducedMap reduce_with_map(const MonotoneSystem& sys) {
    ReducedMap rm;
    rm.reduced = eliminate_zero_vars(sys);
    rm.to_reduced.assign(sys.size(), -1);
    for (int i = 0; i < sys.size(); ++i) {
        if (auto idx = rm.reduced.index_of(sys.vars[i])) rm.to_reduced[i] = *idx;
    }
    return rm;
}

// Builds a certified post-fixed point for `sys` (assumed zero-eliminated)
// from the lower bound. Returns nullopt if some cyclic component resists.
std::optional<Valuation> construct_upper(const MonotoneSystem& sys, const Valuation& lower,
                                         const Rational& width, unsigned precision_bits) {
    SccDecomposition scc = tarjan_scc(sys.dependency_graph());
    Valuation u(sys.size(), Rational(0));
    std::vector<char> done(sys.size(), 0);

    for (int comp = 0; comp < scc.count; ++comp) {
        const std::vector<int>& nodes = scc.members[comp];
        bool self_loop = false;
        if (nodes.size() == 1) {
            int v = nodes[0];
            for (const Monomial& m : sys.rhs[v].monomials) {
                if (m.v1 == v || m.v2 == v) {
                    self_loop = true;
                    break;
                }
            }
        }
        if (nodes.size() == 1 && !self_loop) {
            int v = nodes[0];
            Rational acc = sys.rhs[v].constant;
            for (const Monomial& m : sys.rhs[v].monomials) {
                Rational t = m.coeff * u[m.v1];
                if (m.v2 >= 0) t *= u[m.v2];
                acc += t;
            }
            u[v] = dyadic_ceil(acc, precision_bits);
            done[v] = 1;
            continue;
        }

        std::map<int, int> local;
        for (size_t i = 0; i < nodes.size(); ++i) local[nodes[i]] = static_cast<int>(i);

        // exact solve when the component is linear in its own variables
        bool linear_in_comp = true;
        for (int v : nodes) {
            for (const Monomial& m : sys.rhs[v].monomials) {
                if (m.v2 >= 0 && local.count(m.v1) && local.count(m.v2)) {
                    linear_in_comp = false;
                    break;
                }
            }
            if (!linear_in_comp) break;
        }
        bool solved_exactly = false;
        if (linear_in_comp) {
            size_t n = nodes.size();
            RatMatrix mat(n, RatVector(n, Rational(0)));
            RatVector b(n, Rational(0));
            for (size_t i = 0; i < n; ++i) {
                const Polynomial& p = sys.rhs[nodes[i]];
                mat[i][i] = 1;
                b[i] = p.constant;
                for (const Monomial& m : p.monomials) {
                    // at most one factor is local here
                    int local_var = -1;
                    Rational outer = m.coeff;
                    if (local.count(m.v1)) {
                        local_var = m.v1;
                        if (m.v2 >= 0) outer *= u[m.v2];
                    } else if (m.v2 >= 0 && local.count(m.v2)) {
                        local_var = m.v2;
                        outer *= u[m.v1];
                    } else {
                        outer *= u[m.v1];
                        if (m.v2 >= 0) outer *= u[m.v2];
                        b[i] += outer;
                        continue;
                    }
                    mat[i][local[local_var]] -= outer;
                }
            }
            auto x = solve_linear(std::move(mat), std::move(b));
            if (x) {
                bool ok = true;
                for (const Rational& xi : *x) {
                    if (xi < 0) {
                        ok = false;
                        break;
                    }
                }
                if (ok) {
                    for (size_t i = 0; i < nodes.size(); ++i) {
                        u[nodes[i]] = dyadic_ceil((*x)[i], precision_bits * 2);
                        done[nodes[i]] = 1;
                    }
                    solved_exactly = true;
                }
            }
        }
        if (solved_exactly) {
            // dyadic rounding may break exact post-fixedness marginally; verify
            bool ok = true;
            for (int v : nodes) {
                Rational acc = sys.rhs[v].constant;
                for (const Monomial& m : sys.rhs[v].monomials) {
                    Rational t = m.coeff * u[m.v1];
                    if (m.v2 >= 0) t *= u[m.v2];
                    acc += t;
                }
                if (acc > u[v]) {
                    ok = false;
                    break;
                }
            }
            if (ok) continue;
            // fall through to candidate attempt
            for (int v : nodes) done[v] = 0;
        }

        // candidate: lower + width/2 (the margin absorbs dyadic rounding),
        // capped at 1
        for (int v : nodes) {
            Rational cand = lower[v] + width / 2;
            if (cand > 1) cand = 1;
            u[v] = dyadic_ceil(cand, precision_bits);
            if (u[v] > 1) u[v] = 1;
        }
        for (int v : nodes) {
            Rational acc = sys.rhs[v].constant;
            for (const Monomial& m : sys.rhs[v].monomials) {
                Rational t = m.coeff * u[m.v1];
                if (m.v2 >= 0) t *= u[m.v2];
                acc += t;
            }
            if (acc > u[v]) return std::nullopt; // this component needs a tighter lower bound
        }
        for (int v : nodes) done[v] = 1;
    }
    return u;
}

} // namespace

UpperResult find_upper(const MonotoneSystem& sys, const Rational& width,
                       const SolverOptions& opts) {
    UpperResult res;
    ReducedMap rm = reduce_with_map(sys);
    long budget = opts.initial_kleene_iterations;
    while (true) {
        KleeneResult kl = kleene_lower(rm.reduced, KleeneStop{budget, std::nullopt},
                                       opts.precision_bits);
        auto u = construct_upper(rm.reduced, kl.lower, width, opts.precision_bits);
        if (u && certify_upper(rm.reduced, *u)) {
            res.certified = true;
            res.width_met = true;
            for (int i = 0; i < rm.reduced.size(); ++i) {
                if ((*u)[i] - kl.lower[i] > width) {
                    res.width_met = false;
                    break;
                }
            }
            res.upper.assign(sys.size(), Rational(0));
            for (int i = 0; i < sys.size(); ++i)
                res.upper[i] = rm.to_reduced[i] < 0 ? Rational(0) : (*u)[rm.to_reduced[i]];
            return res;
        }
        if (kl.fixpoint || budget >= opts.max_kleene_iterations) break;
        budget *= 2;
    }
    // honest fallback: all-ones if it certifies, else flag the gap
    Valuation ones(rm.reduced.size(), Rational(1));
    res.upper.assign(sys.size(), Rational(1));
    for (int i = 0; i < sys.size(); ++i) {
        if (rm.to_reduced[i] < 0) res.upper[i] = 0;
    }
    res.certified = certify_upper(rm.reduced, ones);
    res.width_met = false;
    return res;
}

Interval Brackets::var_interval(const MonotoneSystem& sys, const VarId& v) const {
    if (auto idx = sys.index_of(v)) {
        Rational h = hi[*idx];
        if (h > 1) h = 1;
        return Interval(lo[*idx], h);
    }
    auto it = sys.pins.find(v);
    if (it == sys.pins.end()) throw std::out_of_range("var_interval: unknown variable");
    return Interval::point(it->second);
}

Interval Brackets::poly_interval(const QueryPoly& p) const {
    Valuation capped = hi;
    for (Rational& r : capped) {
        if (r > 1) r = 1;
    }
    return Interval(p.eval(lo), p.eval(capped));
}

Brackets solve_brackets(const MonotoneSystem& sys, const Rational& width,
                        const SolverOptions& opts) {
    Brackets out;
    ReducedMap rm = reduce_with_map(sys);
    long budget = opts.initial_kleene_iterations;
    KleeneResult kl;
    std::optional<Valuation> cert;
    while (true) {
        kl = kleene_lower(rm.reduced, KleeneStop{budget, std::nullopt}, opts.precision_bits);
        auto u = construct_upper(rm.reduced, kl.lower, width, opts.precision_bits);
        if (u && certify_upper(rm.reduced, *u)) {
            bool ok = true;
            for (int i = 0; i < rm.reduced.size(); ++i) {
                Rational h = std::min((*u)[i], Rational(1));
                if (h - kl.lower[i] > width) {
                    ok = false;
                    break;
                }
            }
            cert = std::move(u);
            if (ok) {
                out.width_met = true;
                break;
            }
        }
        if (kl.fixpoint || budget >= opts.max_kleene_iterations) break;
        budget *= 2;
    }
    out.kleene_iterations = kl.iterations;
    out.lo.assign(sys.size(), Rational(0));
    out.hi.assign(sys.size(), Rational(1));
    out.hi_certified = cert.has_value();
    if (!cert) {
        Valuation ones(rm.reduced.size(), Rational(1));
        if (certify_upper(rm.reduced, ones)) {
            cert = ones;
            out.hi_certified = true;
        }
    }
    for (int i = 0; i < sys.size(); ++i) {
        int ri = rm.to_reduced[i];
        if (ri < 0) {
            out.lo[i] = 0;
            out.hi[i] = 0;
        } else {
            out.lo[i] = kl.lower[ri];
            out.hi[i] = cert ? std::min((*cert)[ri], Rational(1)) : Rational(1);
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// SMT-LIB2 export

namespace {

std::string smt_rat(const Rational& r) {
    BigInt num = boost::multiprecision::numerator(r);
    BigInt den = boost::multiprecision::denominator(r);
    bool neg = num < 0;
    if (neg) num = -num;
    std::string core =
        den == 1 ? num.str() + ".0" : "(/ " + num.str() + ".0 " + den.str() + ".0)";
    return neg ? "(- " + core + ")" : core;
}

std::string smt_poly(const Polynomial& p, const std::vector<std::string>& names) {
    std::vector<std::string> parts;
    if (p.constant != 0 || p.monomials.empty()) parts.push_back(smt_rat(p.constant));
    for (const Monomial& m : p.monomials) {
        std::string t = "(* " + smt_rat(m.coeff) + " " + names[m.v1];
        if (m.v2 >= 0) t += " " + names[m.v2];
        t += ")";
        parts.push_back(t);
    }
    if (parts.size() == 1) return parts[0];
    std::string out = "(+";
    for (const std::string& s : parts) out += " " + s;
    return out + ")";
}

std::string smt_query_poly(const QueryPoly& p, const std::vector<std::string>& names) {
    std::vector<std::string> parts;
    if (p.constant != 0 || p.terms.empty()) parts.push_back(smt_rat(p.constant));
    for (const auto& [c, vars] : p.terms) {
        std::string t = "(* " + smt_rat(c);
        for (int v : vars) t += " " + names[v];
        t += ")";
        parts.push_back(t);
    }
    if (parts.size() == 1) return parts[0];
    std::string out = "(+";
    for (const std::string& s : parts) out += " " + s;
    return out + ")";
}

} // namespace

std::string export_smt(const DecisionQuery& q, const PPDA& ppda) {
    std::ostringstream out;
    const MonotoneSystem& sys = q.system;
    out << "; witness-form satisfiability script for a least-fixed-point query\n";
    out << "; query: " << (q.label.empty() ? "mu-expr" : q.label) << " "
        << rel_to_string(q.rel) << " " << rational_to_string(q.bound) << "\n";
    out << "; mapping: <,<= : sat iff query true; >=,> : unsat iff query true;\n";
    out << ";          =     : run this (<= side) and the >= companion.\n";
    out << "(set-logic QF_NRA)\n";
    std::vector<std::string> names;
    for (int i = 0; i < sys.size(); ++i) {
        names.push_back("v" + std::to_string(i));
        out << "(declare-const " << names[i] << " Real) ; " << var_name(ppda, sys.vars[i])
            << "\n";
    }
    for (int i = 0; i < sys.size(); ++i) {
        out << "(assert (and (<= 0.0 " << names[i] << ") (<= " << names[i] << " 1.0)))\n";
    }
    out << "; post-fixed point: F(x) <= x\n";
    for (int i = 0; i < sys.size(); ++i) {
        out << "(assert (<= " << smt_poly(sys.rhs[i], names) << " " << names[i] << "))\n";
    }
    std::string expr = smt_query_poly(q.expr, names);
    std::string bound = smt_rat(q.bound);
    switch (q.rel) {
        case Rel::Lt: out << "(assert (< " << expr << " " << bound << "))\n"; break;
        case Rel::Le: out << "(assert (<= " << expr << " " << bound << "))\n"; break;
        case Rel::Ge: out << "(assert (< " << expr << " " << bound << "))\n"; break;
        case Rel::Gt: out << "(assert (<= " << expr << " " << bound << "))\n"; break;
        case Rel::Eq: out << "(assert (<= " << expr << " " << bound << "))\n"; break;
    }
    out << "(check-sat)\n";
    return out.str();
}

// ---------------------------------------------------------------------------
// Oracle

namespace {

Verdict compare_interval(const Interval& iv, Rel rel, const Rational& bound) {
    switch (rel) {
        case Rel::Ge:
            if (iv.lo >= bound) return Verdict::True;
            if (iv.hi < bound) return Verdict::False;
            return Verdict::Unknown;
        case Rel::Gt:
            if (iv.lo > bound) return Verdict::True;
            if (iv.hi <= bound) return Verdict::False;
            return Verdict::Unknown;
        case Rel::Le:
            if (iv.hi <= bound) return Verdict::True;
            if (iv.lo > bound) return Verdict::False;
            return Verdict::Unknown;
        case Rel::Lt:
            if (iv.hi < bound) return Verdict::True;
            if (iv.lo >= bound) return Verdict::False;
            return Verdict::Unknown;
        case Rel::Eq:
            if (iv.lo == bound && iv.hi == bound) return Verdict::True;
            if (bound < iv.lo || bound > iv.hi) return Verdict::False;
            return Verdict::Unknown;
    }
    return Verdict::Unknown;
}

Verdict compare_exact(const Rational& value, Rel rel, const Rational& bound) {
    switch (rel) {
        case Rel::Lt: return value < bound ? Verdict::True : Verdict::False;
        case Rel::Le: return value <= bound ? Verdict::True : Verdict::False;
        case Rel::Eq: return value == bound ? Verdict::True : Verdict::False;
        case Rel::Ge: return value >= bound ? Verdict::True : Verdict::False;
        case Rel::Gt: return value > bound ? Verdict::True : Verdict::False;
    }
    return Verdict::Unknown;
}

struct MappedQuery {
    MonotoneSystem reduced;
    QueryPoly expr; // over reduced indices
};

MappedQuery map_query(const DecisionQuery& q) {
    MappedQuery mq;
    ReducedMap rm = reduce_with_map(q.system);
    mq.reduced = std::move(rm.reduced);
    mq.expr.constant = q.expr.constant;
    for (const auto& [c, vars] : q.expr.terms) {
        bool zero = false;
        std::vector<int> mapped;
        for (int v : vars) {
            int rv = rm.to_reduced[v];
            if (rv < 0) {
                zero = true;
                break;
            }
            mapped.push_back(rv);
        }
        if (!zero) mq.expr.add_term(c, std::move(mapped));
    }
    mq.expr.canonicalize();
    return mq;
}

} // namespace

OracleAnswer Oracle::decide_intervals(const DecisionQuery& q) const {
    OracleAnswer ans;
    MappedQuery mq = map_query(q);
    if (mq.expr.terms.empty()) {
        ans.verdict = compare_exact(mq.expr.constant, q.rel, q.bound);
        ans.method = "trivial";
        ans.evidence = Interval::point(mq.expr.constant);
        return ans;
    }
    if (auto exact = solve_linear_lfp(mq.reduced)) {
        Rational value = mq.expr.eval(*exact);
        ans.verdict = compare_exact(value, q.rel, q.bound);
        ans.method = "linear";
        ans.evidence = Interval::point(value);
        return ans;
    }
    Rational width(1, 16);
    Rational floor_width(1, BigInt(1) << (opts.precision_bits / 2));
    Interval iv(0, 1);
    while (true) {
        Brackets b = solve_brackets(mq.reduced, width, opts);
        Interval cur = b.poly_interval(mq.expr);
        if (cur.lo > iv.lo || cur.hi < iv.hi) {
            iv = Interval(std::max(iv.lo, cur.lo), std::min(iv.hi, cur.hi));
        }
        Verdict v = compare_interval(iv, q.rel, q.bound);
        if (v != Verdict::Unknown) {
            ans.verdict = v;
            ans.method = "intervals";
            ans.evidence = iv;
            return ans;
        }
        if (width <= floor_width) break;
        width /= 16;
    }
    ans.verdict = Verdict::Unknown;
    ans.method = "intervals";
    ans.evidence = iv;
    ans.note = "bracket " + rational_to_string(iv.lo) + ".." + rational_to_string(iv.hi) +
               " does not separate from " + rational_to_string(q.bound);
    return ans;
}

namespace {

std::optional<std::string> run_solver_process(const std::string& cmd_template,
                                              const std::string& script) {
    char path[] = "/tmp/ppmc_smt_XXXXXX";
    int fd = mkstemp(path);
    if (fd < 0) return std::nullopt;
    {
        FILE* f = fdopen(fd, "w");
        if (!f) {
            close(fd);
            return std::nullopt;
        }
        fputs(script.c_str(), f);
        fclose(f);
    }
    std::string cmd = cmd_template;
    auto pos = cmd.find("{}");
    if (pos != std::string::npos) {
        cmd.replace(pos, 2, path);
    } else {
        cmd += " ";
        cmd += path;
    }
    std::string output;
    FILE* pipe = popen(cmd.c_str(), "r");
    if (!pipe) {
        std::remove(path);
        return std::nullopt;
    }
    char buf[256];
    while (fgets(buf, sizeof buf, pipe)) output += buf;
    int rc = pclose(pipe);
    std::remove(path);
    if (rc == -1) return std::nullopt;
    return output;
}

std::optional<bool> parse_sat(const std::string& output) {
    std::istringstream in(output);
    std::string line;
    while (std::getline(in, line)) {
        // trim
        while (!line.empty() && (line.back() == '\r' || line.back() == ' ')) line.pop_back();
        if (line == "sat") return true;
        if (line == "unsat") return false;
    }
    return std::nullopt;
}

} // namespace

OracleAnswer Oracle::decide_external(const DecisionQuery& q, const PPDA& ppda) const {
    OracleAnswer ans;
    ans.method = "external";
    if (opts.solver_cmd.empty()) {
        ans.verdict = Verdict::Unknown;
        ans.note = "no external solver configured (--solver-cmd)";
        return ans;
    }
    auto one_sided = [&](Rel rel) -> std::optional<bool> {
        DecisionQuery sub = q;
        sub.rel = rel;
        ++external_calls;
        auto out = run_solver_process(opts.solver_cmd, export_smt(sub, ppda));
        if (!out) return std::nullopt;
        auto sat = parse_sat(*out);
        if (!sat) return std::nullopt;
        switch (rel) {
            case Rel::Lt:
            case Rel::Le: return *sat;  // sat iff true
            case Rel::Ge:
            case Rel::Gt: return !*sat; // unsat iff true
            case Rel::Eq: break;
        }
        return std::nullopt;
    };
    if (q.rel == Rel::Eq) {
        auto ge = one_sided(Rel::Ge);
        if (!ge) {
            ans.verdict = Verdict::Unknown;
            ans.note = "external solver failed";
            return ans;
        }
        if (!*ge) {
            ans.verdict = Verdict::False;
            return ans;
        }
        auto le = one_sided(Rel::Le);
        if (!le) {
            ans.verdict = Verdict::Unknown;
            ans.note = "external solver failed";
            return ans;
        }
        ans.verdict = *le ? Verdict::True : Verdict::False;
        return ans;
    }
    auto r = one_sided(q.rel);
    if (!r) {
        ans.verdict = Verdict::Unknown;
        ans.note = "external solver failed";
        return ans;
    }
    ans.verdict = *r ? Verdict::True : Verdict::False;
    return ans;
}

OracleAnswer Oracle::decide(const DecisionQuery& q, const PPDA& ppda) const {
    return decide(q, ppda, opts.backend);
}

OracleAnswer Oracle::decide(const DecisionQuery& q, const PPDA& ppda, Backend backend) const {
    ++decide_calls;
    switch (backend) {
        case Backend::Intervals: return decide_intervals(q);
        case Backend::External: return decide_external(q, ppda);
        case Backend::Auto: {
            OracleAnswer a = decide_intervals(q);
            if (a.verdict != Verdict::Unknown || opts.solver_cmd.empty()) return a;
            OracleAnswer b = decide_external(q, ppda);
            if (b.verdict == Verdict::Unknown && !a.note.empty()) b.note = a.note;
            if (b.verdict == Verdict::Unknown) b.evidence = a.evidence;
            return b;
        }
    }
    throw std::logic_error("decide: bad backend");
}

// ---------------------------------------------------------------------------
// Exact qualitative layer: P(pX, C1 U C2) = 1 for pBPA via the branching
// criticality criterion; linear systems exactly; refutations via Boolean
// reachability. Falls back to the generic query.

namespace {

struct HeadClasses {
    std::set<Head> live;       // in G1\G2 with outgoing rules
    std::set<Head> bad_stuck;  // in G1\G2 but stuck
    std::set<Head> outside;    // not in G1 u G2
    std::set<Head> good_stop;  // in G2
};

HeadClasses classify_heads(const PPDA& ppda, const SimpleSet& c1, const SimpleSet& c2) {
    HeadClasses hc;
    for (int p = 0; p < ppda.state_count(); ++p) {
        for (int x = 0; x < ppda.symbol_count(); ++x) {
            Head h{p, x};
            if (c2.heads.count(h)) {
                hc.good_stop.insert(h);
            } else if (!c1.heads.count(h)) {
                hc.outside.insert(h);
            } else if (ppda.is_stuck(h)) {
                hc.bad_stuck.insert(h);
            } else {
                hc.live.insert(h);
            }
        }
    }
    return hc;
}

// Heads reachable as stack top from pX inside the restricted system. Uses
// the Boolean PopTo relation of the until system for exposure of pushed
// symbols.
std::set<Head> reachable_heads(const PPDA& ppda, const HeadClasses& hc,
                               const MonotoneSystem& sys, const BooleanSystem& bsys,
                               const Head& start) {
    std::set<Head> reach{start};
    std::vector<Head> work{start};
    auto push = [&](const Head& h) {
        if (reach.insert(h).second) work.push_back(h);
    };
    while (!work.empty()) {
        Head h = work.back();
        work.pop_back();
        if (!hc.live.count(h)) continue;
        for (int ridx : ppda.rules_for(h)) {
            const Rule& r = ppda.rules[ridx];
            if (r.rhs_stack.empty()) continue;
            Head top{r.rhs_state, r.rhs_stack[0]};
            push(top);
            if (r.rhs_stack.size() == 2) {
                for (int t = 0; t < ppda.state_count(); ++t) {
                    VarId v{VarId::Kind::PopTo, top, t};
                    if (var_positive(bsys, sys, v)) push(Head{t, r.rhs_stack[1]});
                }
            }
        }
    }
    return reach;
}

enum class OneVerdict { One, Less };

// Branching criticality test for the emptying probabilities of a stateless
// restricted system: verdict per symbol whether e(X) = 1. `live` are the
// symbols whose rules participate; all of them must have mass 1.
std::map<SymbolId, OneVerdict> bpa_emptying_one(const PPDA& ppda, const std::set<Head>& live) {
    // Boolean can-vanish least fixed point
    std::set<SymbolId> live_syms;
    for (const Head& h : live) live_syms.insert(h.symbol);
    std::set<SymbolId> vanish;
    bool changed = true;
    auto can = [&](SymbolId s) { return vanish.count(s) > 0; };
    while (changed) {
        changed = false;
        for (SymbolId s : live_syms) {
            if (can(s)) continue;
            for (int ridx : ppda.rules_for(Head{0, s})) {
                const Rule& r = ppda.rules[ridx];
                bool ok = true;
                for (SymbolId t : r.rhs_stack) {
                    if (!live_syms.count(t) || !can(t)) {
                        ok = false;
                        break;
                    }
                }
                if (ok) {
                    vanish.insert(s);
                    changed = true;
                    break;
                }
            }
        }
    }

    std::map<SymbolId, OneVerdict> verdict;
    for (SymbolId s : live_syms) {
        if (!vanish.count(s)) verdict[s] = OneVerdict::Less; // e = 0
    }

    // dependency graph over vanishing symbols
    std::vector<SymbolId> vs(vanish.begin(), vanish.end());
    std::map<SymbolId, int> idx;
    for (size_t i = 0; i < vs.size(); ++i) idx[vs[i]] = static_cast<int>(i);
    std::vector<std::vector<int>> adj(vs.size());
    for (size_t i = 0; i < vs.size(); ++i) {
        std::set<int> row;
        for (int ridx : ppda.rules_for(Head{0, vs[i]})) {
            const Rule& r = ppda.rules[ridx];
            bool all_vanish = true;
            for (SymbolId t : r.rhs_stack) {
                if (!vanish.count(t)) {
                    all_vanish = false;
                    break;
                }
            }
            if (!all_vanish) continue; // contributes 0 to e
            for (SymbolId t : r.rhs_stack) row.insert(idx[t]);
        }
        adj[i].assign(row.begin(), row.end());
    }
    SccDecomposition scc = tarjan_scc(adj);

    for (int comp = 0; comp < scc.count; ++comp) {
        const std::vector<int>& nodes = scc.members[comp];
        std::map<int, int> local;
        for (size_t i = 0; i < nodes.size(); ++i) local[nodes[i]] = static_cast<int>(i);

        bool less = false;
        bool any_quadratic = false;
        RatMatrix jac(nodes.size(), RatVector(nodes.size(), Rational(0)));
        for (size_t i = 0; i < nodes.size() && !less; ++i) {
            SymbolId s = vs[nodes[i]];
            Rational mass{0};
            for (int ridx : ppda.rules_for(Head{0, s})) {
                const Rule& r = ppda.rules[ridx];
                bool all_vanish = true;
                for (SymbolId t : r.rhs_stack) {
                    if (!vanish.count(t)) {
                        all_vanish = false;
                        break;
                    }
                }
                if (!all_vanish) continue;
                mass += r.prob;
                int in_comp = 0;
                for (SymbolId t : r.rhs_stack) {
                    auto it = local.find(idx[t]);
                    if (it != local.end()) {
                        jac[i][it->second] += r.prob; // derivative at all-ones
                        ++in_comp;
                    } else if (verdict[t] == OneVerdict::Less) {
                        less = true; // depends on a strictly smaller value
                    }
                }
                if (in_comp == 2) any_quadratic = true;
            }
            if (mass != 1) less = true; // deficient row
        }
        OneVerdict v;
        if (less) {
            v = OneVerdict::Less;
        } else if (!any_quadratic) {
            v = OneVerdict::One; // proper linear component
        } else {
            v = spectral_radius_at_most_one(jac) ? OneVerdict::One : OneVerdict::Less;
        }
        for (int n : nodes) verdict[vs[n]] = v;
    }
    return verdict;
}

} // namespace

bool Oracle::until_positive(const PPDA& ppda, const SimpleSet& c1, const SimpleSet& c2,
                            const Head& pX) const {
    if (c2.heads.count(pX)) return true;
    if (!c1.heads.count(pX)) return false;
    MonotoneSystem sys = build_until_system(ppda, c1, c2);
    BooleanSystem b = boolean_abstraction(sys);
    if (var_positive(b, sys, VarId{VarId::Kind::Bullet, pX, 0})) return true;
    for (int q = 0; q < ppda.state_count(); ++q) {
        if (!c2.eps_states.count(q)) continue;
        if (var_positive(b, sys, VarId{VarId::Kind::PopTo, pX, q})) return true;
    }
    return false;
}

OracleAnswer Oracle::until_one(const PPDA& ppda, const SimpleSet& c1, const SimpleSet& c2,
                               const Head& pX) const {
    OracleAnswer ans;
    if (c2.heads.count(pX)) {
        ans.verdict = Verdict::True;
        ans.method = "pinned";
        return ans;
    }
    if (!c1.heads.count(pX)) {
        ans.verdict = Verdict::False;
        ans.method = "pinned";
        return ans;
    }

    MonotoneSystem sys = build_until_system(ppda, c1, c2);
    BooleanSystem bsys = boolean_abstraction(sys);
    HeadClasses hc = classify_heads(ppda, c1, c2);
    std::set<Head> reach = reachable_heads(ppda, hc, sys, bsys, pX);

    for (const Head& h : reach) {
        if (hc.bad_stuck.count(h) || hc.outside.count(h)) {
            ans.verdict = Verdict::False;
            ans.method = "reachability";
            ans.note = "escape head " + ppda.head_name(h) + " reachable";
            return ans;
        }
    }
    for (int q = 0; q < ppda.state_count(); ++q) {
        if (c2.eps_states.count(q)) continue;
        if (var_positive(bsys, sys, VarId{VarId::Kind::PopTo, pX, q})) {
            ans.verdict = Verdict::False;
            ans.method = "reachability";
            ans.note = "can empty into " + ppda.states[q] + " outside C2";
            return ans;
        }
    }

    // exact linear solving covers pop/swap systems of any control-state count
    {
        MonotoneSystem reduced = eliminate_zero_vars(sys);
        if (auto exact = solve_linear_lfp(reduced)) {
            QueryPoly g = head_until_sum(reduced, ppda, c2, pX);
            Rational value = g.eval(*exact);
            ans.verdict = value == 1 ? Verdict::True : Verdict::False;
            ans.method = "linear";
            ans.evidence = Interval::point(value);
            return ans;
        }
    }

    bool good_stop_reachable = false;
    for (const Head& h : reach) {
        if (hc.good_stop.count(h)) {
            good_stop_reachable = true;
            break;
        }
    }
    if (!good_stop_reachable && ppda.pbpa_capable()) {
        // P = total emptying probability of the restricted system
        bool eps_possible = false;
        for (int q = 0; q < ppda.state_count(); ++q) {
            if (var_positive(bsys, sys, VarId{VarId::Kind::PopTo, pX, q})) eps_possible = true;
        }
        if (!eps_possible) {
            ans.verdict = Verdict::False; // all mass runs forever (or nothing good)
            ans.method = "reachability";
            ans.note = "no path empties the stack";
            return ans;
        }
        std::set<Head> live_reach;
        for (const Head& h : reach) {
            if (hc.live.count(h)) live_reach.insert(h);
        }
        for (const Head& h : live_reach) {
            if (ppda.outgoing_mass(h) != 1) {
                ans.verdict = Verdict::Unknown;
                ans.method = "spectral";
                ans.note = "head " + ppda.head_name(h) + " has partial outgoing mass";
                return ans;
            }
        }
        auto verdicts = bpa_emptying_one(ppda, live_reach);
        auto it = verdicts.find(pX.symbol);
        if (it != verdicts.end()) {
            ans.verdict = it->second == OneVerdict::One ? Verdict::True : Verdict::False;
            ans.method = "spectral";
            return ans;
        }
    }

    // generic fallback: mu-expr >= 1 query
    DecisionQuery q;
    q.system = sys;
    q.expr = head_until_sum(sys, ppda, c2, pX);
    q.rel = Rel::Ge;
    q.bound = Rational(1);
    q.label = "P(" + ppda.head_name(pX) + ", C1 U C2)";
    OracleAnswer sub = decide(q, ppda);
    if (sub.verdict == Verdict::Unknown && sub.note.empty())
        sub.note = "undecided =1 predicate for head " + ppda.head_name(pX);
    return sub;
}

// ---------------------------------------------------------------------------
// Until probabilities over configurations

QueryPoly head_until_sum(const MonotoneSystem& sys, const PPDA& ppda, const SimpleSet& c2,
                         const Head& pX) {
    QueryPoly g;
    auto add_var = [&](const VarId& v, const Rational& coeff) {
        if (auto idx = sys.index_of(v)) {
            g.add_term(coeff, {*idx});
        } else {
            auto it = sys.pins.find(v);
            if (it == sys.pins.end()) throw std::out_of_range("head_until_sum: unknown var");
            g.constant += coeff * it->second;
        }
    };
    add_var(VarId{VarId::Kind::Bullet, pX, 0}, Rational(1));
    for (int q = 0; q < ppda.state_count(); ++q) {
        if (c2.eps_states.count(q)) add_var(VarId{VarId::Kind::PopTo, pX, q}, Rational(1));
    }
    g.canonicalize();
    return g;
}

QueryPoly config_until_poly(const MonotoneSystem& sys, const PPDA& ppda, const SimpleSet& c2,
                            const Configuration& c) {
    int n = static_cast<int>(c.stack.size());
    // suffix DP, one polynomial per control state
    std::vector<QueryPoly> cur(ppda.state_count());
    for (int q = 0; q < ppda.state_count(); ++q) {
        cur[q].constant = c2.eps_states.count(q) ? 1 : 0;
    }
    auto var_poly = [&](const VarId& v) {
        QueryPoly p;
        if (auto idx = sys.index_of(v)) {
            p.add_term(Rational(1), {*idx});
        } else {
            p.constant = sys.pins.at(v);
        }
        return p;
    };
    for (int pos = n - 1; pos >= 0; --pos) {
        std::vector<QueryPoly> next(ppda.state_count());
        for (int q = 0; q < ppda.state_count(); ++q) {
            Head h{q, c.stack[pos]};
            QueryPoly acc = var_poly(VarId{VarId::Kind::Bullet, h, 0});
            for (int t = 0; t < ppda.state_count(); ++t) {
                QueryPoly part =
                    poly_product(var_poly(VarId{VarId::Kind::PopTo, h, t}), cur[t]);
                acc = poly_sum(acc, part);
            }
            next[q] = std::move(acc);
        }
        cur = std::move(next);
    }
    return cur[c.state];
}

IntervalResult until_probability(const PPDA& ppda, const SimpleSet& c1, const SimpleSet& c2,
                                 const Configuration& c, const Rational& width,
                                 const SolverOptions& opts) {
    IntervalResult res;
    if (c.empty_stack()) {
        res.value = Interval::point(c2.eps_states.count(c.state) ? Rational(1) : Rational(0));
        res.width_met = true;
        return res;
    }
    MonotoneSystem sys = build_until_system(ppda, c1, c2);

    int n = static_cast<int>(c.stack.size());
    Rational var_width = width / (4 * n);
    Rational floor_width(1, BigInt(1) << opts.precision_bits);
    while (true) {
        Brackets b = solve_brackets(sys, var_width, opts);
        res.iterations = b.kleene_iterations;
        // backward DP with interval arithmetic
        std::vector<Interval> cur(ppda.state_count());
        for (int q = 0; q < ppda.state_count(); ++q) {
            cur[q] = Interval::point(c2.eps_states.count(q) ? Rational(1) : Rational(0));
        }
        for (int pos = n - 1; pos >= 0; --pos) {
            std::vector<Interval> next(ppda.state_count());
            for (int q = 0; q < ppda.state_count(); ++q) {
                Head h{q, c.stack[pos]};
                Interval acc = b.var_interval(sys, VarId{VarId::Kind::Bullet, h, 0});
                for (int t = 0; t < ppda.state_count(); ++t) {
                    acc = acc + b.var_interval(sys, VarId{VarId::Kind::PopTo, h, t}) * cur[t];
                }
                if (acc.hi > 1) acc.hi = 1;
                next[q] = acc;
            }
            cur = std::move(next);
        }
        res.value = cur[c.state];
        if (res.value.width() <= width) {
            res.width_met = true;
            return res;
        }
        if (var_width <= floor_width) return res; // budget exhausted; flagged by width_met
        var_width /= 16;
    }
}

OracleAnswer compare_until(const PPDA& ppda, const SimpleSet& c1, const SimpleSet& c2,
                           const Configuration& c, Rel rel, const Rational& bound,
                           const Oracle& oracle) {
    if (c.empty_stack()) {
        OracleAnswer ans;
        Rational v = c2.eps_states.count(c.state) ? 1 : 0;
        ans.verdict = compare_exact(v, rel, bound);
        ans.method = "trivial";
        ans.evidence = Interval::point(v);
        return ans;
    }
    DecisionQuery q;
    q.system = build_until_system(ppda, c1, c2);
    q.expr = config_until_poly(q.system, ppda, c2, c);
    q.rel = rel;
    q.bound = bound;
    q.label = "P(" + ppda.config_name(c) + ", C1 U C2)";
    return oracle.decide(q, ppda);
}

BisectResult bisect_bounds(const PPDA& ppda, const SimpleSet& c1, const SimpleSet& c2,
                           const Head& pX, const Rational& lambda, const Oracle& oracle) {
    if (!(lambda > 0 && lambda < 1)) throw std::invalid_argument("bisect_bounds: lambda");
    BisectResult res;
    DecisionQuery q;
    q.system = build_until_system(ppda, c1, c2);
    q.expr = head_until_sum(q.system, ppda, c2, pX);
    q.label = "P(" + ppda.head_name(pX) + ", C1 U C2)";
    Rational lo{0}, hi{1};
    unsigned rounds = least_power_below(Rational(1, 2), lambda);
    for (unsigned r = 0; r < rounds; ++r) {
        Rational mid = (lo + hi) / 2;
        q.rel = Rel::Ge;
        q.bound = mid;
        OracleAnswer a = oracle.decide(q, ppda);
        ++res.oracle_rounds;
        if (a.verdict == Verdict::True) {
            lo = mid;
        } else if (a.verdict == Verdict::False) {
            hi = mid;
        } else {
            // interval fallback for this round: tighten via certified brackets
            Rational target = (hi - lo) / 4;
            SolverOptions o = oracle.opts;
            Brackets b = solve_brackets(q.system, target, o);
            Interval iv = b.poly_interval(q.expr);
            if (iv.hi > 1) iv.hi = 1;
            Rational nlo = std::max(lo, iv.lo);
            Rational nhi = std::min(hi, iv.hi);
            if (nlo <= nhi) {
                lo = nlo;
                hi = nhi;
            }
        }
    }
    res.value = Interval(lo, hi);
    return res;
}

IntervalResult irun_probability(const PPDA& ppda, const Head& pX, const Rational& width,
                                const SolverOptions& opts) {
    Configuration c{pX.state, {pX.symbol}};
    IntervalResult t =
        until_probability(ppda, SimpleSet::all(ppda), dead_set(ppda), c, width, opts);
    t.value = t.value.complement();
    return t;
}

OracleAnswer irun_positive(const PPDA& ppda, const Head& pX, const Oracle& oracle) {
    OracleAnswer term_one = oracle.until_one(ppda, SimpleSet::all(ppda), dead_set(ppda), pX);
    OracleAnswer ans;
    ans.method = term_one.method;
    ans.note = term_one.note;
    switch (term_one.verdict) {
        case Verdict::True: ans.verdict = Verdict::False; break;
        case Verdict::False: ans.verdict = Verdict::True; break;
        case Verdict::Unknown: ans.verdict = Verdict::Unknown; break;
    }
    return ans;
}

} // namespace ppmc
