#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <random>
#include <string_view>
#include <vector>

#include "fputlab/chain.hpp"

namespace fputlab {

using Rng = std::mt19937_64;

/// Independent stream for ensemble member `index` under master `seed`.
Rng member_stream(std::uint64_t seed, std::uint64_t index);

/// Single-site tilted density exp(-theta r - beta V(r)) / z with theta
/// chosen so that <r> = 0.
struct ThetaMeasure {
    double beta = 1.0;
    double theta = 0.0;
    Model model = Model::FPUT;
    double chi = 1.0;
    double z = 1.0;
    double log_z = 0.0;
    double r_mean_residual = 0.0;
    double mode = 0.0;
    /// log_weight(mode); densities are evaluated relative to it.
    double log_peak = 0.0;
    /// Integration window outside which the density is below 1e-19 of its peak.
    double lo = -1.0;
    double hi = 1.0;

    /// -theta r - beta V(r).
    double log_weight(double r) const;
};

/// Tilted measure for an explicit theta, without solving for <r> = 0.
ThetaMeasure tilted_measure(double beta, double theta, Model model, double chi = 1.0);

/// Bisection on theta in [-10, 10] until |<r>_theta| <= 1e-10. For Toda the
/// root is cross-checked against psi(theta + beta) = log(beta). Throws
/// NoBracket, NonNormalizable (FPUT with chi = 0) or AssertionMismatch.
ThetaMeasure solve_theta(double beta, Model model, double chi = 1.0);

/// Toda root of psi(theta + beta) = log(beta), solved on the digamma function directly.
double toda_theta_digamma(double beta);

/// <f(r)>_theta by adaptive Gauss-Kronrod quadrature. Throws
/// QuadratureNonConvergent if the error estimate exceeds `tol` relative to
/// the integral of |f|.
double expectation(const ThetaMeasure& tm, const std::function<double(double)>& f, double tol = 1e-10);

enum class MomentWeight { Plain, MinExp, MaxExp };

/// <r^k w(r)>_theta with w = 1, min(exp(-d r), 1) or max(exp(-d r), 1).
double moments_quadrature(const ThetaMeasure& tm, int k, MomentWeight weight = MomentWeight::Plain, double d = 1.0);

/// <prod_i r_i^{k_i} w_i(r_i)>_theta over independent sites.
double product_moment(const ThetaMeasure& tm, const std::vector<int>& k, const std::vector<MomentWeight>& weight,
                      const std::vector<double>& d);

enum class SamplerMethod { ProductTheta, ConstrainedMCMC };

std::string_view to_string(SamplerMethod method);
SamplerMethod parse_sampler(std::string_view name);

struct SamplerConfig {
    SamplerMethod method = SamplerMethod::ConstrainedMCMC;
    /// Burn-in sweeps; one sweep is n pair proposals.
    int n_burn = 50;
    /// Sweeps between retained states of one chain.
    int thin = 5;
    std::uint64_t seed = 1;

    void validate() const;
};

/// Draws from the tilted product measure: p_j ~ N(0, 1/beta) and r_j from
/// the tilted single-site density. Toda draws are exact (exp(-r) is Gamma
/// distributed); the other models use rejection from a Gaussian envelope.
class ProductSampler {
public:
    explicit ProductSampler(const ThetaMeasure& tm);

    double draw_r(Rng& rng);
    double draw_p(Rng& rng);

    /// Accepted / proposed for the rejection path (1 for exact draws).
    double acceptance_rate() const;
    const ThetaMeasure& measure() const noexcept { return tm_; }

private:
    ThetaMeasure tm_;
    double sigma_;
    double log_envelope_;
    std::uint64_t proposed_ = 0;
    std::uint64_t accepted_ = 0;
};

/// Unconstrained product draw of length n.
ChainState sample_product(const ThetaMeasure& tm, int n, Rng& rng);

/// Pairwise-move Metropolis on sum(r) = 0 for the Gibbs weight exp(-beta sum V(r_j)).
class ConstrainedChain {
public:
    ConstrainedChain(const ThetaMeasure& tm, std::vector<double> r0);

    void sweep(Rng& rng);
    const std::vector<double>& r() const noexcept { return r_; }
    double acceptance_rate() const;

private:
    ThetaMeasure tm_;
    std::vector<double> r_;
    double step_;
    std::uint64_t proposed_ = 0;
    std::uint64_t accepted_ = 0;
};

/// One state of the constrained measure: centered Gaussian momenta, and
/// displacements from a centered product draw relaxed by n_burn sweeps.
ChainState sample_constrained(const ThetaMeasure& tm, int n, const SamplerConfig& cfg, Rng& rng);

/// `count` states from one chain, thinned by cfg.thin sweeps.
std::vector<ChainState> sample_constrained_chain(const ThetaMeasure& tm, int n, const SamplerConfig& cfg, int count,
                                                 Rng& rng);

/// State of ensemble member `index` under cfg.method, drawn from its own stream.
ChainState sample_member(const ThetaMeasure& tm, int n, const SamplerConfig& cfg, std::uint64_t index);

struct EnsembleHeader {
    int n = 0;
    double beta = 0.0;
    double chi = 0.0;
    Model model = Model::FPUT;
    std::uint64_t seed = 0;
    SamplerMethod method = SamplerMethod::ConstrainedMCMC;
};

/// CSV snapshot: '#'-prefixed key=value header, then member,j,p,r rows.
void write_ensemble_csv(std::ostream& out, const EnsembleHeader& header, const std::vector<ChainState>& members);
std::vector<ChainState> read_ensemble_csv(std::istream& in, EnsembleHeader& header);

} // namespace fputlab
