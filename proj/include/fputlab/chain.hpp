#pragma once

#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace fputlab {

/// Harmonic (V = x^2/2) is the linear reference chain used by smoke tests.
enum class Model { FPUT, Toda, Harmonic };

std::string_view to_string(Model model);
Model parse_model(std::string_view name);

/// Parameters of a periodic chain. `chi` is the quartic coefficient of the
/// FPUT potential and is ignored by the other models.
struct ChainParams {
    int n = 4;
    double beta = 1.0;
    double chi = 1.0;
    Model model = Model::FPUT;

    /// Throws std::invalid_argument unless n >= 4, beta > 0 and chi >= 0.
    void validate() const;
};

/// Momenta and relative displacements r_j = q_{j+1} - q_j (indices mod n)
/// on the manifold sum(p) = sum(r) = 0.
struct ChainState {
    std::vector<double> p;
    std::vector<double> r;

    ChainState() = default;
    ChainState(std::vector<double> p_, std::vector<double> r_);

    /// Zero state of length n.
    static ChainState zeros(int n);

    int size() const noexcept { return static_cast<int>(p.size()); }

    /// 1e-10 * n.
    double constraint_tolerance() const noexcept;

    bool on_manifold() const noexcept;

    /// Throws std::invalid_argument if lengths differ or either sum
    /// exceeds the constraint tolerance.
    void check_manifold() const;

    /// Subtracts the mean from p and r.
    void center();

    /// (S_l x)_j = x_{(j+l) mod n} applied to both components.
    ChainState shifted(int l) const;
};

double potential(double x, Model model, double chi);
double potential_derivative(double x, Model model, double chi);
double potential_second_derivative(double x, Model model, double chi);

inline double potential(double x, const ChainParams& params) {
    return potential(x, params.model, params.chi);
}

double hamiltonian(const ChainState& state, const ChainParams& params);

/// Right-hand side of the equations of motion in (p, r) coordinates:
/// dr_j = p_{j+1} - p_j, dp_j = V'(r_j) - V'(r_{j-1}).
std::pair<std::vector<double>, std::vector<double>> eom_rhs(const ChainState& state,
                                                            const ChainParams& params);

/// Periodic index reduction, valid for any signed j.
inline int wrap(int j, int n) noexcept {
    const int k = j % n;
    return k < 0 ? k + n : k;
}

} // namespace fputlab
