#pragma once

#include <vector>

namespace fputlab {

/// Circulant matrix A_{jk} = rep[(j - k) mod n], stored by its representing
/// vector (first column).
struct CirculantSpec {
    std::vector<double> rep;

    int size() const noexcept { return static_cast<int>(rep.size()); }

    /// rep_k == rep_{n-k} for all k, within `tol`.
    bool is_even(double tol = 0.0) const;

    /// Dense row-major copy, n*n entries.
    std::vector<double> dense() const;

    /// x^T A y.
    double bilinear(const std::vector<double>& x, const std::vector<double>& y) const;
};

} // namespace fputlab
