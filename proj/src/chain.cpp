#include "fputlab/chain.hpp"

#include <cmath>
#include <numeric>
#include <stdexcept>

namespace fputlab {

std::string_view to_string(Model model) {
    switch (model) {
    case Model::FPUT: return "fput";
    case Model::Toda: return "toda";
    case Model::Harmonic: return "harmonic";
    }
    return "unknown";
}

Model parse_model(std::string_view name) {
    if (name == "fput" || name == "FPUT") return Model::FPUT;
    if (name == "toda" || name == "Toda") return Model::Toda;
    if (name == "harmonic") return Model::Harmonic;
    throw std::invalid_argument("unknown model '" + std::string(name) + "' (expected fput, toda or harmonic)");
}

void ChainParams::validate() const {
    if (n < 4) throw std::invalid_argument("chain needs n >= 4 particles");
    if (!(beta > 0.0)) throw std::invalid_argument("beta must be positive");
    if (!(chi >= 0.0)) throw std::invalid_argument("chi must be non-negative");
}

ChainState::ChainState(std::vector<double> p_, std::vector<double> r_)
    : p(std::move(p_)), r(std::move(r_)) {
    if (p.size() != r.size()) throw std::invalid_argument("p and r must have equal length");
}

ChainState ChainState::zeros(int n) {
    return ChainState(std::vector<double>(n, 0.0), std::vector<double>(n, 0.0));
}

double ChainState::constraint_tolerance() const noexcept {
    return 1e-10 * static_cast<double>(p.size());
}

bool ChainState::on_manifold() const noexcept {
    if (p.size() != r.size()) return false;
    const double tol = constraint_tolerance();
    const double sp = std::accumulate(p.begin(), p.end(), 0.0);
    const double sr = std::accumulate(r.begin(), r.end(), 0.0);
    return std::abs(sp) <= tol && std::abs(sr) <= tol;
}

void ChainState::check_manifold() const {
    if (p.size() != r.size()) throw std::invalid_argument("p and r must have equal length");
    if (!on_manifold())
        throw std::invalid_argument("state violates sum(p) = sum(r) = 0 beyond 1e-10 * n");
}

void ChainState::center() {
    auto subtract_mean = [](std::vector<double>& v) {
        if (v.empty()) return;
        const double mean = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
        for (double& x : v) x -= mean;
    };
    subtract_mean(p);
    subtract_mean(r);
}

ChainState ChainState::shifted(int l) const {
    const int n = size();
    ChainState out = zeros(n);
    for (int j = 0; j < n; ++j) {
        out.p[j] = p[wrap(j + l, n)];
        out.r[j] = r[wrap(j + l, n)];
    }
    return out;
}

double potential(double x, Model model, double chi) {
    if (model == Model::Toda) return std::expm1(-x) + x;
    if (model == Model::Harmonic) return 0.5 * x * x;
    return x * x * (0.5 - x / 6.0 + chi * x * x / 24.0);
}

double potential_derivative(double x, Model model, double chi) {
    if (model == Model::Toda) return -std::expm1(-x);
    if (model == Model::Harmonic) return x;
    return x - 0.5 * x * x + chi * x * x * x / 6.0;
}

double potential_second_derivative(double x, Model model, double chi) {
    if (model == Model::Toda) return std::exp(-x);
    if (model == Model::Harmonic) return 1.0;
    return 1.0 - x + 0.5 * chi * x * x;
}

double hamiltonian(const ChainState& state, const ChainParams& params) {
    double kinetic = 0.0;
    double pot = 0.0;
    for (int j = 0; j < state.size(); ++j) {
        kinetic += 0.5 * state.p[j] * state.p[j];
        pot += potential(state.r[j], params.model, params.chi);
    }
    return kinetic + pot;
}

std::pair<std::vector<double>, std::vector<double>> eom_rhs(const ChainState& state,
                                                            const ChainParams& params) {
    const int n = state.size();
    std::vector<double> dp(n), dr(n), force(n);
    for (int j = 0; j < n; ++j) force[j] = potential_derivative(state.r[j], params.model, params.chi);
    for (int j = 0; j < n; ++j) {
        const int next = wrap(j + 1, n);
        const int prev = wrap(j - 1, n);
        dr[j] = state.p[next] - state.p[j];
        dp[j] = force[j] - force[prev];
    }
    return {std::move(dp), std::move(dr)};
}

} // namespace fputlab
