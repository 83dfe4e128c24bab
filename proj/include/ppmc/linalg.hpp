#pragma once

#include "ppmc/rational.hpp"

#include <optional>
#include <vector>

namespace ppmc {

using RatMatrix = std::vector<std::vector<Rational>>;
using RatVector = std::vector<Rational>;

/// Solves A x = b exactly. Returns nullopt when A is singular.
std::optional<RatVector> solve_linear(RatMatrix a, RatVector b);

/// Basis of the null space of A (columns of the returned vectors).
std::vector<RatVector> null_space(RatMatrix a);

/// Exact Perron test for an irreducible nonnegative matrix B:
/// returns true iff the spectral radius satisfies rho(B) <= 1.
/// (Classification: (I-B) nonsingular with (I-B)^{-1} 1 >= 0  =>  rho < 1;
/// singular with a strictly one-signed one-dimensional kernel => rho = 1;
/// anything else => rho > 1.)
bool spectral_radius_at_most_one(const RatMatrix& b);

} // namespace ppmc
