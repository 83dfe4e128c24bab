#include "ppmc/linalg.hpp"
#include <algorithm>
#include <cstdint>

#include <stdexcept>

namespace ppmc {

namespace {

// reduced row echelon form; returns pivot column per row. Pivoting is
// restricted to the first `pivot_limit` columns (so an augmented column is
// never chosen), elimination still spans the whole row.
std::vector<int> rref(RatMatrix& m, size_t pivot_limit = SIZE_MAX) {
    std::vector<int> pivots;
    size_t rows = m.size();
    if (rows == 0) return pivots;
    size_t cols = m[0].size();
    size_t limit = std::min(cols, pivot_limit);
    size_t r = 0;
    for (size_t c = 0; c < limit && r < rows; ++c) {
        size_t sel = r;
        while (sel < rows && m[sel][c] == 0) ++sel;
        if (sel == rows) continue;
        std::swap(m[sel], m[r]);
        Rational inv = m[r][c];
        for (size_t j = c; j < cols; ++j) m[r][j] /= inv;
        for (size_t i = 0; i < rows; ++i) {
            if (i == r || m[i][c] == 0) continue;
            Rational f = m[i][c];
            for (size_t j = c; j < cols; ++j) m[i][j] -= f * m[r][j];
        }
        pivots.push_back(static_cast<int>(c));
        ++r;
    }
    return pivots;
}

} // namespace

std::optional<RatVector> solve_linear(RatMatrix a, RatVector b) {
    size_t n = a.size();
    if (n == 0) return RatVector{};
    for (size_t i = 0; i < n; ++i) {
        if (a[i].size() != n) throw std::invalid_argument("solve_linear: not square");
        a[i].push_back(b[i]);
    }
    std::vector<int> pivots = rref(a, n);
    if (pivots.size() != n) return std::nullopt; // singular (or inconsistent)
    RatVector x(n);
    for (size_t i = 0; i < n; ++i) x[pivots[i]] = a[i][n];
    return x;
}

std::vector<RatVector> null_space(RatMatrix a) {
    size_t rows = a.size();
    if (rows == 0) return {};
    size_t cols = a[0].size();
    std::vector<int> pivots = rref(a);
    std::vector<char> is_pivot(cols, 0);
    for (int p : pivots) is_pivot[p] = 1;
    std::vector<RatVector> basis;
    for (size_t free_col = 0; free_col < cols; ++free_col) {
        if (is_pivot[free_col]) continue;
        RatVector v(cols, Rational(0));
        v[free_col] = 1;
        for (size_t r = 0; r < pivots.size(); ++r) {
            v[pivots[r]] = -a[r][free_col];
        }
        basis.push_back(std::move(v));
    }
    return basis;
}

bool spectral_radius_at_most_one(const RatMatrix& b) {
    size_t n = b.size();
    if (n == 0) return true;
    RatMatrix i_minus_b(n, RatVector(n, Rational(0)));
    for (size_t i = 0; i < n; ++i) {
        for (size_t j = 0; j < n; ++j) i_minus_b[i][j] = (i == j ? Rational(1) : Rational(0)) - b[i][j];
    }
    auto w = solve_linear(i_minus_b, RatVector(n, Rational(1)));
    if (w) {
        for (const Rational& x : *w) {
            if (x < 0) return false; // rho > 1
        }
        return true; // rho < 1
    }
    // singular: 1 is an eigenvalue; rho = 1 iff the kernel is the Perron
    // direction (one-dimensional, strictly one-signed).
    auto kernel = null_space(i_minus_b);
    if (kernel.size() != 1) return false;
    const RatVector& v = kernel[0];
    bool pos = false, neg = false, zero = false;
    for (const Rational& x : v) {
        if (x > 0) pos = true;
        else if (x < 0) neg = true;
        else zero = true;
    }
    if (zero || (pos && neg)) return false;
    return true;
}

} // namespace ppmc
