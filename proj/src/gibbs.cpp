#include "fputlab/gibbs.hpp"

#include <cmath>
#include <iomanip>
#include <istream>
#include <limits>
#include <numbers>
#include <numeric>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/special_functions/digamma.hpp>
#include <boost/math/tools/minima.hpp>
#include <boost/math/tools/roots.hpp>

#include "fputlab/errors.hpp"

namespace fputlab {

namespace {

// Density below exp(-44) of its peak (about 8e-20) is treated as outside the support.
constexpr double kTailDrop = 44.0;
constexpr int kGridPoints = 2001;
constexpr std::uint64_t kMaxConsecutiveRejections = 10000;

using Quadrature = boost::math::quadrature::gauss_kronrod<double, 61>;

void require_normalizable(double beta, double theta, Model model, double chi) {
    if (!(beta > 0.0)) throw std::invalid_argument("beta must be positive");
    if (model == Model::FPUT && !(chi > 0.0))
        throw NonNormalizable("quartic coefficient must be positive for a normalizable FPUT density");
    if (model == Model::Toda && !(theta + beta > 0.0))
        throw NonNormalizable("Toda tilted density needs theta + beta > 0");
}

double argmax_on_grid(const std::function<double(double)>& f, double a, double b, int points) {
    double best_x = a;
    double best = -std::numeric_limits<double>::infinity();
    for (int i = 0; i < points; ++i) {
        const double x = a + (b - a) * i / (points - 1);
        const double v = f(x);
        if (v > best) {
            best = v;
            best_x = x;
        }
    }
    const double h = (b - a) / (points - 1);
    const auto neg = [&](double x) { return -f(x); };
    const auto refined = boost::math::tools::brent_find_minima(neg, best_x - h, best_x + h,
                                                              std::numeric_limits<double>::digits / 2);
    return refined.second <= -best ? refined.first : best_x;
}

struct Integral {
    double value;
    double error;
    double l1;
};

Integral integrate_window(const ThetaMeasure& tm, const std::function<double(double)>& f) {
    Integral out{0.0, 0.0, 0.0};
    const std::pair<double, double> pieces[] = {{tm.lo, tm.mode}, {tm.mode, tm.hi}};
    for (const auto& [a, b] : pieces) {
        double err = 0.0;
        double l1 = 0.0;
        const double v = Quadrature::integrate(f, a, b, 20, 1e-14, &err, &l1);
        out.value += v;
        out.error += err;
        out.l1 += l1;
    }
    return out;
}

} // namespace

Rng member_stream(std::uint64_t seed, std::uint64_t index) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(index >> 32),
                      0x6d656d62u};
    return Rng(seq);
}

double ThetaMeasure::log_weight(double r) const {
    return -theta * r - beta * potential(r, model, chi);
}

ThetaMeasure tilted_measure(double beta, double theta, Model model, double chi) {
    require_normalizable(beta, theta, model, chi);
    ThetaMeasure tm;
    tm.beta = beta;
    tm.theta = theta;
    tm.model = model;
    tm.chi = chi;
    const auto lw = [&](double r) { return tm.log_weight(r); };

    // Grow a symmetric box until both ends sit deep in the tails, then locate the peak inside it.
    const double scale = 1.0 / std::sqrt(beta);
    double reach = 4.0 * scale;
    const double at_zero = lw(0.0);
    int doublings = 0;
    while (lw(-reach) > at_zero - kTailDrop || lw(reach) > at_zero - kTailDrop) {
        reach *= 2.0;
        if (++doublings > 60) throw NonNormalizable("tilted density does not decay");
    }
    tm.mode = argmax_on_grid(lw, -reach, reach, kGridPoints);
    tm.log_peak = lw(tm.mode);

    const double curvature = beta * potential_second_derivative(tm.mode, model, chi);
    const double width = curvature > 0.0 ? 1.0 / std::sqrt(curvature) : scale;
    const double step = 0.25 * width;
    tm.lo = tm.mode;
    while (lw(tm.lo) > tm.log_peak - kTailDrop) tm.lo -= step;
    tm.hi = tm.mode;
    while (lw(tm.hi) > tm.log_peak - kTailDrop) tm.hi += step;

    const Integral norm = integrate_window(tm, [&](double r) { return std::exp(lw(r) - tm.log_peak); });
    if (!(norm.value > 0.0) || norm.error > 1e-12 * norm.value)
        throw QuadratureNonConvergent("normalizer quadrature did not converge");
    tm.log_z = tm.log_peak + std::log(norm.value);
    tm.z = std::exp(tm.log_z);
    tm.r_mean_residual = std::abs(expectation(tm, [](double r) { return r; }));
    return tm;
}

double expectation(const ThetaMeasure& tm, const std::function<double(double)>& f, double tol) {
    const double shift = tm.log_z - tm.log_peak;
    const Integral num = integrate_window(tm, [&](double r) {
        const double w = std::exp(tm.log_weight(r) - tm.log_peak);
        return w == 0.0 ? 0.0 : f(r) * w;
    });
    const double norm = std::exp(shift);
    if (num.error > tol * num.l1)
        throw QuadratureNonConvergent("expectation error estimate " + std::to_string(num.error / norm) +
                                      " above tolerance");
    return num.value / norm;
}

double toda_theta_digamma(double beta) {
    if (!(beta > 0.0)) throw std::invalid_argument("beta must be positive");
    const double target = std::log(beta);
    const auto f = [&](double x) { return boost::math::digamma(x) - target; };
    // psi(beta) < log(beta) < psi(beta + 1) for every beta > 0.
    boost::uintmax_t iters = 200;
    const auto root = boost::math::tools::toms748_solve(f, beta, beta + 1.0,
                                                        boost::math::tools::eps_tolerance<double>(52), iters);
    return 0.5 * (root.first + root.second) - beta;
}

ThetaMeasure solve_theta(double beta, Model model, double chi) {
    if (!(beta > 0.0)) throw std::invalid_argument("beta must be positive");
    require_normalizable(beta, 0.0, model, chi);
    const auto mean_r = [&](double theta) {
        return expectation(tilted_measure(beta, theta, model, chi), [](double r) { return r; });
    };
    // <r>_theta decreases in theta; Toda needs theta > -beta, and psi(beta/2) < log(beta) keeps -beta/2 on the positive side.
    double lo = -10.0;
    if (model == Model::Toda) lo = std::max(lo, -0.5 * beta);
    double hi = 10.0;
    const double f_lo = mean_r(lo);
    const double f_hi = mean_r(hi);
    if (f_lo == 0.0) return tilted_measure(beta, lo, model, chi);
    if (f_hi == 0.0) return tilted_measure(beta, hi, model, chi);
    if ((f_lo > 0.0) == (f_hi > 0.0))
        throw NoBracket("<r>_theta has no sign change for theta in [" + std::to_string(lo) + ", " +
                        std::to_string(hi) + "]");
    const auto root = boost::math::tools::bisect(mean_r, lo, hi, boost::math::tools::eps_tolerance<double>(50));
    ThetaMeasure tm = tilted_measure(beta, 0.5 * (root.first + root.second), model, chi);

    if (model == Model::Toda) {
        const double reference = toda_theta_digamma(beta);
        if (std::abs(reference - tm.theta) > 1e-7 * std::max(1.0, beta))
            throw AssertionMismatch("theta by quadrature " + std::to_string(tm.theta) + " differs from digamma root " +
                                    std::to_string(reference));
    }
    return tm;
}

double moments_quadrature(const ThetaMeasure& tm, int k, MomentWeight weight, double d) {
    if (k < 0 || k > 8) throw std::invalid_argument("moment order must lie in [0, 8]");
    return expectation(tm, [&](double r) {
        double w = 1.0;
        if (weight == MomentWeight::MinExp) w = std::min(std::exp(-d * r), 1.0);
        if (weight == MomentWeight::MaxExp) w = std::max(std::exp(-d * r), 1.0);
        return std::pow(r, k) * w;
    });
}

double product_moment(const ThetaMeasure& tm, const std::vector<int>& k, const std::vector<MomentWeight>& weight,
                      const std::vector<double>& d) {
    if (weight.size() != k.size() || d.size() != k.size())
        throw std::invalid_argument("moment orders, weights and exponents must have equal length");
    double out = 1.0;
    for (std::size_t i = 0; i < k.size(); ++i) out *= moments_quadrature(tm, k[i], weight[i], d[i]);
    return out;
}

std::string_view to_string(SamplerMethod method) {
    return method == SamplerMethod::ProductTheta ? "product_theta" : "constrained_mcmc";
}

SamplerMethod parse_sampler(std::string_view name) {
    if (name == "product_theta" || name == "product") return SamplerMethod::ProductTheta;
    if (name == "constrained_mcmc" || name == "mcmc") return SamplerMethod::ConstrainedMCMC;
    throw std::invalid_argument("unknown sampler '" + std::string(name) +
                                "' (expected product_theta or constrained_mcmc)");
}

void SamplerConfig::validate() const {
    if (n_burn < 0) throw std::invalid_argument("n_burn must be >= 0");
    if (thin < 1) throw std::invalid_argument("thin must be >= 1");
}

ProductSampler::ProductSampler(const ThetaMeasure& tm) : tm_(tm), sigma_(0.0), log_envelope_(0.0) {
    if (tm.model == Model::Toda) return;
    const double curvature = tm.beta * potential_second_derivative(tm.mode, tm.model, tm.chi);
    const double base = 1.0 / std::sqrt(curvature);
    const double a = tm.mode - 2.0 * (tm.mode - tm.lo);
    const double b = tm.mode + 2.0 * (tm.hi - tm.mode);
    const double log_norm = tm.log_z - tm.log_peak;
    double best_rate = -1.0;
    // Soft shoulders of the potential push the envelope constant up for a
    // narrow proposal; keep the width with the highest exact acceptance.
    for (double widen = 1.0; widen <= 3.41; widen += 0.2) {
        const double sigma = widen * base;
        // log of the smallest M with target <= M * proposal, both scaled to 1 at the mode
        const auto gap = [&](double x) {
            const double u = (x - tm_.mode) / sigma;
            return tm_.log_weight(x) - tm_.log_peak + 0.5 * u * u;
        };
        const double log_m = std::max(0.0, gap(argmax_on_grid(gap, a, b, kGridPoints))) + 1e-9;
        const double rate = std::exp(log_norm - log_m) / (std::sqrt(2.0 * std::numbers::pi) * sigma);
        if (rate > best_rate) {
            best_rate = rate;
            sigma_ = sigma;
            log_envelope_ = log_m;
        }
    }
}

double ProductSampler::draw_p(Rng& rng) {
    std::normal_distribution<double> g(0.0, 1.0 / std::sqrt(tm_.beta));
    return g(rng);
}

double ProductSampler::draw_r(Rng& rng) {
    if (tm_.model == Model::Toda) {
        // exp(-r) ~ Gamma(theta + beta, rate beta)
        std::gamma_distribution<double> gamma(tm_.theta + tm_.beta, 1.0 / tm_.beta);
        ++proposed_;
        ++accepted_;
        return -std::log(gamma(rng));
    }
    std::normal_distribution<double> g(0.0, 1.0);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (std::uint64_t tries = 0; tries < kMaxConsecutiveRejections; ++tries) {
        const double z = g(rng);
        const double x = tm_.mode + sigma_ * z;
        ++proposed_;
        const double log_ratio = tm_.log_weight(x) - tm_.log_peak + 0.5 * z * z - log_envelope_;
        if (std::log(u(rng)) < log_ratio) {
            ++accepted_;
            return x;
        }
    }
    throw RejectionStall("10^4 consecutive rejections in the tilted-density sampler");
}

double ProductSampler::acceptance_rate() const {
    return proposed_ == 0 ? 1.0 : static_cast<double>(accepted_) / static_cast<double>(proposed_);
}

ChainState sample_product(const ThetaMeasure& tm, int n, Rng& rng) {
    if (n < 1) throw std::invalid_argument("sample size must be positive");
    ProductSampler sampler(tm);
    ChainState s = ChainState::zeros(n);
    for (int j = 0; j < n; ++j) s.p[j] = sampler.draw_p(rng);
    for (int j = 0; j < n; ++j) s.r[j] = sampler.draw_r(rng);
    return s;
}

ConstrainedChain::ConstrainedChain(const ThetaMeasure& tm, std::vector<double> r0)
    : tm_(tm), r_(std::move(r0)), step_(1.0 / std::sqrt(tm.beta)) {
    if (r_.size() < 2) throw std::invalid_argument("constrained chain needs at least two sites");
}

void ConstrainedChain::sweep(Rng& rng) {
    const int n = static_cast<int>(r_.size());
    std::uniform_int_distribution<int> first(0, n - 1);
    std::uniform_int_distribution<int> second(0, n - 2);
    std::normal_distribution<double> g(0.0, step_);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int move = 0; move < n; ++move) {
        const int i = first(rng);
        int j = second(rng);
        if (j >= i) ++j;
        const double delta = g(rng);
        const double ri = r_[i] + delta;
        const double rj = r_[j] - delta;
        const double dv = potential(ri, tm_.model, tm_.chi) + potential(rj, tm_.model, tm_.chi) -
                          potential(r_[i], tm_.model, tm_.chi) - potential(r_[j], tm_.model, tm_.chi);
        ++proposed_;
        const double accept_draw = u(rng);
        if (dv <= 0.0 || accept_draw < std::exp(-tm_.beta * dv)) {
            r_[i] = ri;
            r_[j] = rj;
            ++accepted_;
        }
    }
}

double ConstrainedChain::acceptance_rate() const {
    return proposed_ == 0 ? 0.0 : static_cast<double>(accepted_) / static_cast<double>(proposed_);
}

namespace {

std::vector<double> centered_momenta(int n, double beta, Rng& rng) {
    std::normal_distribution<double> g(0.0, 1.0 / std::sqrt(beta));
    std::vector<double> p(n);
    for (double& v : p) v = g(rng);
    const double mean = std::accumulate(p.begin(), p.end(), 0.0) / n;
    for (double& v : p) v -= mean;
    return p;
}

void center(std::vector<double>& v) {
    const double mean = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
    for (double& x : v) x -= mean;
}

ConstrainedChain burned_in_chain(const ThetaMeasure& tm, int n, const SamplerConfig& cfg, Rng& rng) {
    if (n < 3) throw std::invalid_argument("constrained sampling needs n >= 3");
    cfg.validate();
    ProductSampler product(tm);
    std::vector<double> r(n);
    for (double& v : r) v = product.draw_r(rng);
    center(r);
    ConstrainedChain chain(tm, std::move(r));
    for (int s = 0; s < cfg.n_burn; ++s) chain.sweep(rng);
    return chain;
}

} // namespace

ChainState sample_constrained(const ThetaMeasure& tm, int n, const SamplerConfig& cfg, Rng& rng) {
    ConstrainedChain chain = burned_in_chain(tm, n, cfg, rng);
    std::vector<double> r = chain.r();
    center(r);
    return ChainState(centered_momenta(n, tm.beta, rng), std::move(r));
}

std::vector<ChainState> sample_constrained_chain(const ThetaMeasure& tm, int n, const SamplerConfig& cfg, int count,
                                                 Rng& rng) {
    ConstrainedChain chain = burned_in_chain(tm, n, cfg, rng);
    std::vector<ChainState> out;
    out.reserve(count);
    for (int c = 0; c < count; ++c) {
        if (c > 0)
            for (int s = 0; s < cfg.thin; ++s) chain.sweep(rng);
        std::vector<double> r = chain.r();
        center(r);
        out.emplace_back(centered_momenta(n, tm.beta, rng), std::move(r));
    }
    return out;
}

ChainState sample_member(const ThetaMeasure& tm, int n, const SamplerConfig& cfg, std::uint64_t index) {
    Rng rng = member_stream(cfg.seed, index);
    if (cfg.method == SamplerMethod::ConstrainedMCMC) return sample_constrained(tm, n, cfg, rng);
    // Product draws are projected onto the manifold so they can be evolved.
    ChainState s = sample_product(tm, n, rng);
    s.center();
    return s;
}

void write_ensemble_csv(std::ostream& out, const EnsembleHeader& header, const std::vector<ChainState>& members) {
    out << "# n=" << header.n << "\n";
    out << std::setprecision(17);
    out << "# beta=" << header.beta << "\n";
    out << "# chi=" << header.chi << "\n";
    out << "# model=" << to_string(header.model) << "\n";
    out << "# seed=" << header.seed << "\n";
    out << "# method=" << to_string(header.method) << "\n";
    out << "member,j,p,r\n";
    for (std::size_t m = 0; m < members.size(); ++m)
        for (int j = 0; j < members[m].size(); ++j)
            out << m << ',' << j << ',' << members[m].p[j] << ',' << members[m].r[j] << '\n';
}

std::vector<ChainState> read_ensemble_csv(std::istream& in, EnsembleHeader& header) {
    std::string line;
    std::vector<ChainState> members;
    bool columns_seen = false;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        if (line[0] == '#') {
            const auto eq = line.find('=');
            if (eq == std::string::npos) continue;
            std::string key = line.substr(1, eq - 1);
            key.erase(0, key.find_first_not_of(' '));
            const std::string value = line.substr(eq + 1);
            if (key == "n") header.n = std::stoi(value);
            else if (key == "beta") header.beta = std::stod(value);
            else if (key == "chi") header.chi = std::stod(value);
            else if (key == "model") header.model = parse_model(value);
            else if (key == "seed") header.seed = std::stoull(value);
            else if (key == "method") header.method = parse_sampler(value);
            continue;
        }
        if (!columns_seen) {
            if (line != "member,j,p,r")
                throw std::invalid_argument("ensemble csv line " + std::to_string(line_no) + ": unexpected header");
            columns_seen = true;
            continue;
        }
        std::istringstream row(line);
        std::string cell[4];
        for (auto& c : cell)
            if (!std::getline(row, c, ','))
                throw std::invalid_argument("ensemble csv line " + std::to_string(line_no) + ": expected 4 columns");
        const std::size_t m = std::stoul(cell[0]);
        const int j = std::stoi(cell[1]);
        if (header.n <= 0 || j < 0 || j >= header.n)
            throw std::invalid_argument("ensemble csv line " + std::to_string(line_no) + ": site out of range");
        while (members.size() <= m) members.push_back(ChainState::zeros(header.n));
        members[m].p[j] = std::stod(cell[2]);
        members[m].r[j] = std::stod(cell[3]);
    }
    return members;
}

} // namespace fputlab
