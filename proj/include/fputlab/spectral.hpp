#pragma once

#include <vector>

#include "fputlab/chain.hpp"
#include "fputlab/circulant.hpp"

namespace fputlab {

/// Orthonormal discrete Hartley transform,
///   y_j = n^{-1/2} sum_k (cos(2 pi jk/n) + sin(2 pi jk/n)) x_k.
/// Lengths below `kHartleyFastThreshold` use the direct sum, longer ones FFTW.
std::vector<double> hartley(const std::vector<double>& x);
std::vector<double> hartley_direct(const std::vector<double>& x);
std::vector<double> hartley_fast(const std::vector<double>& x);

inline constexpr int kHartleyFastThreshold = 64;

/// omega_j = 2 sin(pi j / n).
double mode_frequency(int j, int n);

/// Harmonic mode energies E_j = (p^_j^2 + omega_j^2 q^_j^2) / 2 with q
/// rebuilt from r in the gauge q_0 = 0; E_0 is set to 0.
std::vector<double> normal_modes(const ChainState& state);

/// Mirror symmetry of an admissible vector.
///   Even:      g_k = g_{n-k} = y_k for 0 <= k <= half.
///   Staggered: g_{-i} = g_{1+i} = y_i for 0 <= i <= half, the symmetry of
///              the p-r coupling in odd-order quadratic parts.
enum class Parity { Even, Staggered };

struct AdmissibleVector {
    int m = 0;
    Parity parity = Parity::Even;
    std::vector<double> y;
    std::vector<double> g;

    int half() const noexcept { return m / 2; }
    int size() const noexcept { return static_cast<int>(g.size()); }

    /// Embeds y (length floor(m/2) + 1) into a length-n vector. Throws
    /// std::invalid_argument if y has the wrong length or n is too small
    /// for the support to stay disjoint from its mirror image.
    static AdmissibleVector embed(int m, std::vector<double> y, int n, Parity parity = Parity::Even);

    /// K^{-1} <= sum|y| <= K.
    bool within_bound(double K = 1e6) const;
};

struct PhiRoutes {
    double mode_space;
    double physical_space;
};

/// Both evaluations of Phi = sum_j g^_j E_j.
PhiRoutes phi_routes(const ChainState& state, const AdmissibleVector& g);

/// Phi, after checking that the two routes agree to 1e-10 (relative to the
/// magnitude of the summands). Throws AssertionMismatch otherwise.
double phi_observable(const ChainState& state, const AdmissibleVector& g);

/// Physical-space route only: (1/(2 sqrt n)) sum_{j,l} g_l (p_j p_{j+l} + r_j r_{j+l}).
double phi_physical(const ChainState& state, const std::vector<double>& g);

/// Eigenvalues sqrt(n) * hartley(rep) of an even circulant, ordered by
/// Hartley index.
std::vector<double> circulant_eigs(const CirculantSpec& spec);

/// max |H A H - diag(eigs)| computed densely.
double circulant_diagonalization_residual(const CirculantSpec& spec);

enum class DecompositionKind { First, Second };

struct Decomposition {
    std::vector<double> coefficients;
    double residual = 0.0;
};

/// Expands an admissible vector over quadratic parts of Toda integrals.
///   Second kind: even g over the forms of J^(2l+2), l = 0..half.
///   First kind:  staggered g over the p-r forms of J^(2l+3), l = 0..half.
/// The triangular system is solved by back substitution. Throws
/// SingularSystem on a non-positive pivot and AssertionMismatch if the
/// reconstruction residual exceeds 1e-10.
Decomposition decompose_admissible(const AdmissibleVector& g, DecompositionKind kind);

/// sum_l c_l rep^(order(l)) for the basis used by `decompose_admissible`.
std::vector<double> reconstruct_admissible(const std::vector<double>& coefficients, DecompositionKind kind, int n);

/// Integral order paired with slot l of the decomposition.
inline int decomposition_order(DecompositionKind kind, int l) {
    return kind == DecompositionKind::Second ? 2 * l + 2 : 2 * l + 3;
}

} // namespace fputlab
