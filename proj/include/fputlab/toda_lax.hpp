#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "fputlab/chain.hpp"
#include "fputlab/circulant.hpp"

namespace fputlab {

/// Flaschka coordinates b_j = -p_j, a_j = exp(-r_j / 2).
struct FlaschkaVars {
    std::vector<double> b;
    std::vector<double> a;

    int size() const noexcept { return static_cast<int>(b.size()); }
};

/// Throws NonFinite if some r_j < -1400.
FlaschkaVars flaschka(const ChainState& state);

/// Dense periodic Jacobi matrix: diagonal b, bands a_0..a_{n-2}, corners a_{n-1}.
Eigen::MatrixXd lax_matrix(const FlaschkaVars& fv);

/// One signed monomial of the local density h_j^{(m)}:
///
///   sign * rho * prod_i exp(-n_i r_{j+i}) * prod_i p_{j+i}^{k_i}
///
/// n_exp[i + half] holds the exponent for offset i in [-half, half-1] and
/// k_exp[i + half] the exponent for offset i in [-half, half], with
/// half = floor(m / 2). Here n_i counts up-steps between heights i and i+1
/// of a super Motzkin path and k_i its horizontal steps at height i.
struct DensityTerm {
    int sign = 1;
    std::uint64_t rho = 0;
    std::vector<int> n_exp;
    std::vector<int> k_exp;

    int k_degree() const;
    int n_degree() const;
};

struct IntegralDensity {
    int m = 0;
    int half = 0;
    std::vector<DensityTerm> terms;

    int n_offset(int index) const noexcept { return index - half; }
    int k_offset(int index) const noexcept { return index - half; }
};

/// Number of super Motzkin paths with the given level profile.
/// `n_exp` and `k_exp` use the DensityTerm layout.
std::uint64_t motzkin_multiplicity(int m, const std::vector<int>& n_exp, const std::vector<int>& k_exp);

/// Enumerates every admissible (n, k) profile of order m together with its
/// exact path multiplicity.
IntegralDensity build_density(int m);

/// Memoized densities, shared between threads once built.
class DensityCache {
public:
    explicit DensityCache(int max_order = 12) : max_order_(max_order) {}

    std::shared_ptr<const IntegralDensity> get(int m);
    int max_order() const noexcept { return max_order_; }

private:
    int max_order_;
    std::mutex mutex_;
    std::map<int, std::shared_ptr<const IntegralDensity>> cache_;
};

DensityCache& default_density_cache();

/// Precomputed powers of exp(-r_j) and p_j for repeated density evaluation.
class DensityEvaluator {
public:
    DensityEvaluator(const IntegralDensity& density, const ChainState& state);

    /// h_j^{(m)}(p, r).
    double local(int j) const;

    /// (1/m) sum_j h_j^{(m)}.
    double integral() const;

private:
    struct Factor {
        int offset;
        int n_power;
        int k_power;
    };
    struct CompactTerm {
        double coefficient;
        std::vector<Factor> factors;
    };

    double epow(int site, int e) const { return exp_powers_[site * stride_ + e]; }
    double ppow(int site, int e) const { return p_powers_[site * stride_ + e]; }

    int m_;
    int n_;
    int stride_;
    std::vector<CompactTerm> terms_;
    std::vector<double> exp_powers_;
    std::vector<double> p_powers_;
};

double eval_density(const IntegralDensity& density, const ChainState& state, int j);

/// J^{(m)} through the closed-form density. Requires n > 2m.
double toda_integral(const ChainState& state, int m);
double toda_integral(const ChainState& state, const IntegralDensity& density);

/// J^{(m)} = Tr(L^m) / m through banded Lax products. Requires 1 <= m < n.
double toda_integral_trace(const ChainState& state, int m);

/// [L^k]_{ij} for the periodic Lax matrix, by windowed banded products.
double lax_power_entry(const FlaschkaVars& fv, int k, int i, int j);

struct Gradient {
    std::vector<double> gp;
    std::vector<double> gr;
};

/// Analytic gradient of J^{(m)} in (p, r): dJ/dp_j = -[L^{m-1}]_{jj},
/// dJ/dr_j = -a_j [L^{m-1}]_{j,j+1}.
Gradient gradient_J(const ChainState& state, int m);

/// Same gradient by term-wise differentiation of the density.
Gradient gradient_J_density(const ChainState& state, int m);

/// Gradient of the chain Hamiltonian: (p, V'(r)).
Gradient hamiltonian_gradient(const ChainState& state, const ChainParams& params);

/// Gradient of H_F - H_T.
Gradient perturbation_gradient(const ChainState& state, double chi);

/// Canonical bracket {F, G} pulled back to (p, r) through
/// d/dq_j = d/dr_{j-1} - d/dr_j.
double poisson_bracket(const Gradient& f, const Gradient& g);

/// Sum of absolute values of the individual bracket products; the natural
/// scale against which a vanishing bracket is judged.
double poisson_bracket_scale(const Gradient& f, const Gradient& g);

/// Quadratic Taylor part J_2^{(m)}. Even m: J_2 = p^T A p + r^T A r with an
/// even circulant A. Odd m: J_2 = p^T B r with circulant B whose
/// representing vector is symmetric about offset 1/2 (b_k = b_{1-k}).
struct QuadraticPart {
    int m = 0;
    CirculantSpec form;

    bool even_order() const noexcept { return m % 2 == 0; }
    double evaluate(const ChainState& state) const;
};

QuadraticPart quadratic_part(int m, int n);

/// Constant Taylor term J_0^{(m)} (zero for odd m).
double constant_part(int m, int n);

} // namespace fputlab
