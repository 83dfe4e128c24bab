#pragma once

#include "ppmc/model.hpp"
#include "ppmc/regsets.hpp"

#include <map>
#include <optional>
#include <string>
#include <vector>

namespace ppmc {

/// Variable of the quadratic system: <pXq> (empty the stack into control
/// state q through C1\C2) or <pX.> (hit C2 with nonempty stack through C1).
struct VarId {
    enum class Kind { PopTo, Bullet };
    Kind kind = Kind::Bullet;
    Head head;
    StateId pop_to = 0; // meaningful for PopTo

    friend bool operator==(const VarId& a, const VarId& b) {
        return a.kind == b.kind && a.head == b.head && (a.kind == Kind::Bullet || a.pop_to == b.pop_to);
    }
    friend bool operator<(const VarId& a, const VarId& b) {
        if (a.head.state != b.head.state) return a.head.state < b.head.state;
        if (a.head.symbol != b.head.symbol) return a.head.symbol < b.head.symbol;
        if (a.kind != b.kind) return a.kind < b.kind;
        if (a.kind == Kind::Bullet) return false;
        return a.pop_to < b.pop_to;
    }
};

/// coeff * v1 [* v2]; degree <= 2, coeff > 0.
struct Monomial {
    Rational coeff;
    int v1 = -1;
    int v2 = -1; // -1 for linear terms

    int degree() const { return v2 < 0 ? 1 : 2; }
};

struct Polynomial {
    Rational constant{0};
    std::vector<Monomial> monomials; // canonical order: (v1, v2) ascending

    void add_const(const Rational& c) { constant += c; }
    void add_linear(const Rational& c, int v);
    void add_quadratic(const Rational& c, int v1, int v2);
    void canonicalize();
    bool is_linear() const;
};

using Valuation = std::vector<Rational>; // indexed by variable slot

/// Monotone system x_i = rhs_i(x) with nonnegative coefficients, degree <= 2.
/// Variables pinned to 0/1 at build time are substituted away; `pins`
/// records their values so full valuations can be reconstructed.
class MonotoneSystem {
public:
    std::vector<VarId> vars;          // live variables, canonical order
    std::vector<Polynomial> rhs;      // one per live variable
    std::map<VarId, Rational> pins;   // eliminated variables

    int size() const { return static_cast<int>(vars.size()); }
    std::optional<int> index_of(const VarId& v) const;
    /// Value lookup that also resolves pinned variables.
    Rational value_of(const VarId& v, const Valuation& val) const;

    Rational eval_poly(const Polynomial& p, const Valuation& v) const;
    /// One application of the operator F.
    Valuation evaluate(const Valuation& v) const;

    /// Canonical one-equation-per-line dump (golden-test stable).
    std::string dump(const PPDA& ppda) const;

    /// Variable dependency edges v -> w (w occurs in rhs of v).
    std::vector<std::vector<int>> dependency_graph() const;
};

std::string var_name(const PPDA& ppda, const VarId& v);

/// Builds the quadratic system for P(pX, C1 U C2) per the until equations;
/// requires a normalized system (|rhs| <= 2).
MonotoneSystem build_until_system(const PPDA& ppda, const SimpleSet& c1, const SimpleSet& c2);

/// Dead = all of Q x {eps} plus every configuration with a stuck head.
SimpleSet dead_set(const PPDA& ppda);

/// Termination system: C1 = all, C2 = Dead.
MonotoneSystem build_termination_system(const PPDA& ppda);

/// Boolean abstraction: component true iff the corresponding exact least
/// fixed point component is > 0.
struct BooleanSystem {
    std::vector<VarId> vars;
    std::vector<char> positive; // least fixed point
};

BooleanSystem boolean_abstraction(const MonotoneSystem& sys);

/// Convenience: positivity of a single variable ( >0 iff true ).
bool var_positive(const BooleanSystem& b, const MonotoneSystem& sys, const VarId& v);

/// Drops variables whose Boolean least fixed point is false (their exact
/// value is 0); they are moved into `pins` with value 0. Sound: every
/// monomial mentioning them vanishes.
MonotoneSystem eliminate_zero_vars(const MonotoneSystem& sys);

} // namespace ppmc
