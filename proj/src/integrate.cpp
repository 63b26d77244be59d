#include "fputlab/integrate.hpp"

#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

#include "fputlab/errors.hpp"

namespace fputlab {

namespace {

// Fourth-order triple-jump weights.
const double kW1 = 1.0 / (2.0 - std::cbrt(2.0));
const double kW0 = 1.0 - 2.0 * kW1;

std::string time_tag(double t) {
    return " at t=" + std::to_string(t);
}

} // namespace

std::string_view to_string(Scheme scheme) {
    return scheme == Scheme::Leapfrog2 ? "leapfrog2" : "yoshida4";
}

Scheme parse_scheme(std::string_view name) {
    if (name == "leapfrog2" || name == "leapfrog") return Scheme::Leapfrog2;
    if (name == "yoshida4" || name == "yoshida") return Scheme::Yoshida4;
    throw std::invalid_argument("unknown scheme '" + std::string(name) + "' (expected leapfrog2 or yoshida4)");
}

void IntegratorConfig::validate() const {
    if (!(dt > 0.0) || !std::isfinite(dt)) throw std::invalid_argument("dt must be positive");
    for (std::size_t i = 0; i < t_checkpoints.size(); ++i) {
        if (!(t_checkpoints[i] >= 0.0)) throw std::invalid_argument("checkpoints must be non-negative");
        if (i > 0 && !(t_checkpoints[i] > t_checkpoints[i - 1]))
            throw std::invalid_argument("checkpoints must be strictly increasing");
    }
}

double IntegratorConfig::scaled_dt(double beta) {
    return 0.02 / std::sqrt(beta);
}

Integrator::Integrator(const ChainState& initial, const ChainParams& params, double dt, Scheme scheme)
    : params_(params), dt_(dt), scheme_(scheme), n_(initial.size()) {
    if (n_ < 2) throw std::invalid_argument("integrator needs at least two sites");
    initial.check_manifold();
    p_ = initial.p;
    q_.assign(n_, 0.0);
    for (int j = 1; j < n_; ++j) q_[j] = q_[j - 1] + initial.r[j - 1];
    force_.assign(n_, 0.0);
    vprime_.assign(n_, 0.0);
    update_force();
}

void Integrator::update_force() {
    for (int j = 0; j + 1 < n_; ++j) vprime_[j] = potential_derivative(q_[j + 1] - q_[j], params_.model, params_.chi);
    vprime_[n_ - 1] = potential_derivative(q_[0] - q_[n_ - 1], params_.model, params_.chi);
    force_[0] = vprime_[0] - vprime_[n_ - 1];
    for (int j = 1; j < n_; ++j) force_[j] = vprime_[j] - vprime_[j - 1];
}

void Integrator::kick(double h) {
    for (int j = 0; j < n_; ++j) p_[j] += h * force_[j];
}

void Integrator::drift(double h) {
    for (int j = 0; j < n_; ++j) q_[j] += h * p_[j];
    update_force();
}

void Integrator::check_finite() const {
    double acc = 0.0;
    for (int j = 0; j < n_; ++j) acc += p_[j] * 0.0 + q_[j] * 0.0 + force_[j] * 0.0;
    if (!std::isfinite(acc)) throw NonFinite("trajectory left the representable range" + time_tag(time_));
}

void Integrator::recenter() {
    const double pmean = std::accumulate(p_.begin(), p_.end(), 0.0) / n_;
    std::vector<double> r(n_);
    for (int j = 0; j + 1 < n_; ++j) r[j] = q_[j + 1] - q_[j];
    r[n_ - 1] = q_[0] - q_[n_ - 1];
    const double rmean = std::accumulate(r.begin(), r.end(), 0.0) / n_;
    const double correction = std::max(std::abs(pmean), std::abs(rmean));
    largest_correction_ = std::max(largest_correction_, correction);
    if (correction > kRecenterBudget)
        throw ConstraintDrift("mean correction " + std::to_string(correction) + " exceeds budget" + time_tag(time_));
    for (double& v : p_) v -= pmean;
    q_[0] = 0.0;
    for (int j = 1; j < n_; ++j) q_[j] = q_[j - 1] + (r[j - 1] - rmean);
    update_force();
}

void Integrator::step() {
    const double h = dt_;
    if (scheme_ == Scheme::Leapfrog2) {
        kick(0.5 * h);
        drift(h);
        kick(0.5 * h);
    } else {
        kick(0.5 * kW1 * h);
        drift(kW1 * h);
        kick(0.5 * (kW1 + kW0) * h);
        drift(kW0 * h);
        kick(0.5 * (kW0 + kW1) * h);
        drift(kW1 * h);
        kick(0.5 * kW1 * h);
    }
    ++steps_;
    time_ += h;
    check_finite();
    if (steps_ % kRecenterInterval == 0) recenter();
}

void Integrator::advance(long steps) {
    for (long s = 0; s < steps; ++s) step();
}

ChainState Integrator::state() const {
    ChainState out = ChainState::zeros(n_);
    out.p = p_;
    for (int j = 0; j + 1 < n_; ++j) out.r[j] = q_[j + 1] - q_[j];
    out.r[n_ - 1] = q_[0] - q_[n_ - 1];
    return out;
}

ChainState step(const ChainState& state, const ChainParams& params, const IntegratorConfig& cfg) {
    cfg.validate();
    Integrator integrator(state, params, cfg.dt, cfg.scheme);
    integrator.step();
    return integrator.state();
}

std::vector<long> checkpoint_steps(const IntegratorConfig& cfg) {
    std::vector<long> out;
    double prev = 0.0;
    for (double t : cfg.t_checkpoints) {
        out.push_back(std::lround((t - prev) / cfg.dt));
        prev = t;
    }
    return out;
}

std::vector<Checkpoint> evolve(const ChainState& state, const ChainParams& params, const IntegratorConfig& cfg) {
    cfg.validate();
    std::vector<Checkpoint> out;
    if (cfg.t_checkpoints.empty()) return out;
    Integrator integrator(state, params, cfg.dt, cfg.scheme);
    const std::vector<long> steps = checkpoint_steps(cfg);
    for (std::size_t i = 0; i < steps.size(); ++i) {
        integrator.advance(steps[i]);
        out.push_back({cfg.t_checkpoints[i], integrator.state()});
    }
    return out;
}

} // namespace fputlab
