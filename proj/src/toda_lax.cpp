#include "fputlab/toda_lax.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <string>

#include "fputlab/errors.hpp"

namespace fputlab {

namespace {

constexpr double kMinDisplacement = -1400.0;

__extension__ typedef unsigned __int128 wide_uint;

/// Binomial coefficient with the convention C(a, 0) = 1 for every a
/// (including a = -1) and C(a, b) = 0 for b > a.
std::uint64_t binomial(int a, int b) {
    if (b == 0) return 1;
    if (b < 0 || a < 0 || b > a) return 0;
    b = std::min(b, a - b);
    wide_uint result = 1;
    for (int i = 0; i < b; ++i) {
        result = result * static_cast<unsigned>(a - i) / static_cast<unsigned>(i + 1);
        if (result > std::numeric_limits<std::uint64_t>::max())
            throw std::overflow_error("binomial coefficient exceeds 64 bits");
    }
    return static_cast<std::uint64_t>(result);
}

std::uint64_t checked_mul(std::uint64_t x, std::uint64_t y) {
    std::uint64_t out = 0;
    if (__builtin_mul_overflow(x, y, &out)) throw std::overflow_error("path multiplicity exceeds 64 bits");
    return out;
}

void require_order(int m, int n) {
    if (m < 1) throw std::invalid_argument("integral order must be >= 1");
    if (n <= 2 * m)
        throw std::invalid_argument("closed-form density needs n > 2m (n=" + std::to_string(n) +
                                    ", m=" + std::to_string(m) + ")");
}

void check_finite(double value, const char* what) {
    if (!std::isfinite(value)) throw NonFinite(std::string(what) + " is not finite");
}

/// Vector L^k e_j restricted to a window of sites around `center`, or the
/// full periodic vector when the window would wrap.
class BandedPower {
public:
    BandedPower(const FlaschkaVars& fv, int center, int radius)
        : fv_(fv), n_(fv.size()), center_(center), radius_(radius),
          windowed_(2 * radius + 3 <= n_) {
        const int len = windowed_ ? 2 * radius + 1 : n_;
        v_.assign(len, 0.0);
        w_.assign(len, 0.0);
    }

    void set_unit(int site) {
        std::fill(v_.begin(), v_.end(), 0.0);
        v_[index_of(site)] = 1.0;
    }

    void apply() {
        const int len = static_cast<int>(v_.size());
        if (windowed_) {
            for (int o = 0; o < len; ++o) {
                const int site = wrap(center_ - radius_ + o, n_);
                const int prev = wrap(site - 1, n_);
                double acc = fv_.b[site] * v_[o];
                if (o + 1 < len) acc += fv_.a[site] * v_[o + 1];
                if (o > 0) acc += fv_.a[prev] * v_[o - 1];
                w_[o] = acc;
            }
        } else {
            for (int s = 0; s < n_; ++s) {
                const int next = wrap(s + 1, n_);
                const int prev = wrap(s - 1, n_);
                w_[s] = fv_.b[s] * v_[s] + fv_.a[s] * v_[next] + fv_.a[prev] * v_[prev];
            }
        }
        v_.swap(w_);
    }

    double at(int site) const { return v_[index_of(site)]; }

private:
    int index_of(int site) const {
        if (!windowed_) return wrap(site, n_);
        int off = wrap(site - center_, n_);
        if (off > n_ / 2) off -= n_;
        return off + radius_;
    }

    const FlaschkaVars& fv_;
    int n_;
    int center_;
    int radius_;
    bool windowed_;
    std::vector<double> v_;
    std::vector<double> w_;
};

int periodic_offset(int from, int to, int n) {
    int d = wrap(to - from, n);
    if (d > n / 2) d -= n;
    return d;
}

} // namespace

FlaschkaVars flaschka(const ChainState& state) {
    FlaschkaVars fv;
    const int n = state.size();
    fv.b.resize(n);
    fv.a.resize(n);
    for (int j = 0; j < n; ++j) {
        if (!(state.r[j] >= kMinDisplacement))
            throw NonFinite("displacement r_" + std::to_string(j) + " below -1400 overflows exp(-r/2)");
        fv.b[j] = -state.p[j];
        fv.a[j] = std::exp(-0.5 * state.r[j]);
    }
    return fv;
}

Eigen::MatrixXd lax_matrix(const FlaschkaVars& fv) {
    const int n = fv.size();
    if (n < 3) throw std::invalid_argument("periodic Lax matrix needs n >= 3");
    Eigen::MatrixXd L = Eigen::MatrixXd::Zero(n, n);
    for (int j = 0; j < n; ++j) L(j, j) = fv.b[j];
    for (int j = 0; j + 1 < n; ++j) {
        L(j, j + 1) = fv.a[j];
        L(j + 1, j) = fv.a[j];
    }
    L(0, n - 1) = fv.a[n - 1];
    L(n - 1, 0) = fv.a[n - 1];
    return L;
}

int DensityTerm::k_degree() const { return std::accumulate(k_exp.begin(), k_exp.end(), 0); }
int DensityTerm::n_degree() const { return std::accumulate(n_exp.begin(), n_exp.end(), 0); }

std::uint64_t motzkin_multiplicity(int m, const std::vector<int>& n_exp, const std::vector<int>& k_exp) {
    const int half = m / 2;
    if (static_cast<int>(n_exp.size()) != 2 * half || static_cast<int>(k_exp.size()) != 2 * half + 1)
        throw std::invalid_argument("exponent profile has the wrong length for this order");
    auto N = [&](int i) { return (i >= -half && i < half) ? n_exp[i + half] : 0; };
    auto K = [&](int i) { return (i >= -half && i <= half) ? k_exp[i + half] : 0; };

    int steps = 0;
    for (int i = -half; i < half; ++i) steps += 2 * N(i);
    for (int i = -half; i <= half; ++i) steps += K(i);
    if (steps != m) return 0;

    // Level 0 interleaves k_0 flat steps with n_0 upper and n_{-1} lower excursions.
    std::uint64_t rho = checked_mul(binomial(N(-1) + N(0) + K(0), K(0)), binomial(N(-1) + N(0), N(0)));
    // Above the axis: the n_i visits to level i+1 host k_{i+1} flat steps and n_{i+1} deeper excursions.
    for (int i = 0; i < half; ++i) {
        rho = checked_mul(rho, binomial(N(i) + N(i + 1) + K(i + 1) - 1, K(i + 1)));
        rho = checked_mul(rho, binomial(N(i) + N(i + 1) - 1, N(i + 1)));
    }
    // Below the axis: the n_i visits to level i host k_i flat steps and n_{i-1} deeper excursions.
    for (int i = -1; i >= -half; --i) {
        rho = checked_mul(rho, binomial(N(i) + N(i - 1) + K(i) - 1, K(i)));
        rho = checked_mul(rho, binomial(N(i) + N(i - 1) - 1, N(i - 1)));
    }
    return rho;
}

IntegralDensity build_density(int m) {
    if (m < 1) throw std::invalid_argument("integral order must be >= 1");
    const int half = m / 2;

    // Slot order: k_0, then (n_i, k_{i+1}) outward above the axis, then
    // (n_i, k_i) outward below it. A slot may be non-zero only when the
    // edge leading to its level is used.
    enum class Kind { N, K };
    struct Slot {
        Kind kind;
        int offset;
        int gate; // offset into n_exp that must be non-zero, or INT_MIN
    };
    constexpr int kOpen = std::numeric_limits<int>::min();
    std::vector<Slot> slots;
    slots.push_back({Kind::K, 0, kOpen});
    for (int i = 0; i < half; ++i) {
        slots.push_back({Kind::N, i, i == 0 ? kOpen : i - 1});
        slots.push_back({Kind::K, i + 1, i});
    }
    for (int i = -1; i >= -half; --i) {
        slots.push_back({Kind::N, i, i == -1 ? kOpen : i + 1});
        slots.push_back({Kind::K, i, i});
    }

    IntegralDensity density;
    density.m = m;
    density.half = half;
    std::vector<int> n_exp(2 * half, 0);
    std::vector<int> k_exp(2 * half + 1, 0);

    std::function<void(std::size_t, int)> visit = [&](std::size_t s, int budget) {
        if (s == slots.size()) {
            if (budget != 0) return;
            DensityTerm term;
            term.rho = motzkin_multiplicity(m, n_exp, k_exp);
            if (term.rho == 0) return;
            term.n_exp = n_exp;
            term.k_exp = k_exp;
            term.sign = (term.k_degree() % 2 == 0) ? 1 : -1;
            density.terms.push_back(std::move(term));
            return;
        }
        const Slot& slot = slots[s];
        const bool open = slot.gate == kOpen || n_exp[slot.gate + half] > 0;
        const int cost = slot.kind == Kind::N ? 2 : 1;
        const int max_count = open ? budget / cost : 0;
        int& cell = slot.kind == Kind::N ? n_exp[slot.offset + half] : k_exp[slot.offset + half];
        for (int c = 0; c <= max_count; ++c) {
            cell = c;
            visit(s + 1, budget - c * cost);
        }
        cell = 0;
    };
    visit(0, m);
    return density;
}

std::shared_ptr<const IntegralDensity> DensityCache::get(int m) {
    if (m < 1 || m > max_order_)
        throw std::invalid_argument("integral order " + std::to_string(m) + " outside [1, " +
                                    std::to_string(max_order_) + "]");
    std::lock_guard<std::mutex> lock(mutex_);
    auto it = cache_.find(m);
    if (it != cache_.end()) return it->second;
    auto density = std::make_shared<const IntegralDensity>(build_density(m));
    cache_.emplace(m, density);
    return density;
}

DensityCache& default_density_cache() {
    static DensityCache cache;
    return cache;
}

DensityEvaluator::DensityEvaluator(const IntegralDensity& density, const ChainState& state)
    : m_(density.m), n_(state.size()), stride_(density.m + 1) {
    require_order(m_, n_);
    terms_.reserve(density.terms.size());
    for (const auto& term : density.terms) {
        CompactTerm compact;
        compact.coefficient = static_cast<double>(term.sign) * static_cast<double>(term.rho);
        for (int idx = 0; idx < static_cast<int>(term.k_exp.size()); ++idx) {
            const int offset = density.k_offset(idx);
            const int np = idx < static_cast<int>(term.n_exp.size()) ? term.n_exp[idx] : 0;
            const int kp = term.k_exp[idx];
            if (np != 0 || kp != 0) compact.factors.push_back({offset, np, kp});
        }
        terms_.push_back(std::move(compact));
    }

    exp_powers_.assign(static_cast<std::size_t>(n_) * stride_, 1.0);
    p_powers_.assign(static_cast<std::size_t>(n_) * stride_, 1.0);
    for (int s = 0; s < n_; ++s) {
        if (!(state.r[s] >= kMinDisplacement))
            throw NonFinite("displacement r_" + std::to_string(s) + " below -1400 overflows exp(-r)");
        const double e = std::exp(-state.r[s]);
        for (int k = 1; k < stride_; ++k) {
            exp_powers_[s * stride_ + k] = exp_powers_[s * stride_ + k - 1] * e;
            p_powers_[s * stride_ + k] = p_powers_[s * stride_ + k - 1] * state.p[s];
        }
    }
}

double DensityEvaluator::local(int j) const {
    double sum = 0.0;
    for (const auto& term : terms_) {
        double value = term.coefficient;
        for (const auto& f : term.factors) {
            const int site = wrap(j + f.offset, n_);
            value *= epow(site, f.n_power) * ppow(site, f.k_power);
        }
        sum += value;
    }
    check_finite(sum, "density value");
    return sum;
}

double DensityEvaluator::integral() const {
    double sum = 0.0;
    for (int j = 0; j < n_; ++j) sum += local(j);
    return sum / static_cast<double>(m_);
}

double eval_density(const IntegralDensity& density, const ChainState& state, int j) {
    return DensityEvaluator(density, state).local(j);
}

double toda_integral(const ChainState& state, const IntegralDensity& density) {
    return DensityEvaluator(density, state).integral();
}

double toda_integral(const ChainState& state, int m) {
    require_order(m, state.size());
    return toda_integral(state, *default_density_cache().get(m));
}

double lax_power_entry(const FlaschkaVars& fv, int k, int i, int j) {
    const int n = fv.size();
    if (n < 3) throw std::invalid_argument("periodic Lax matrix needs n >= 3");
    if (k < 0) throw std::invalid_argument("negative matrix power");
    const int dist = std::abs(periodic_offset(i, j, n));
    BandedPower power(fv, i, k + dist);
    power.set_unit(j);
    for (int s = 0; s < k; ++s) power.apply();
    return power.at(i);
}

double toda_integral_trace(const ChainState& state, int m) {
    const int n = state.size();
    if (m < 1 || m >= n) throw std::invalid_argument("trace integral needs 1 <= m < n");
    const FlaschkaVars fv = flaschka(state);
    double trace = 0.0;
    for (int j = 0; j < n; ++j) trace += lax_power_entry(fv, m, j, j);
    const double value = trace / static_cast<double>(m);
    check_finite(value, "trace integral");
    return value;
}

Gradient gradient_J(const ChainState& state, int m) {
    const int n = state.size();
    if (m < 1 || m >= n) throw std::invalid_argument("gradient needs 1 <= m < n");
    const FlaschkaVars fv = flaschka(state);
    Gradient g;
    g.gp.resize(n);
    g.gr.resize(n);
    for (int j = 0; j < n; ++j) {
        g.gp[j] = -lax_power_entry(fv, m - 1, j, j);
        g.gr[j] = -fv.a[j] * lax_power_entry(fv, m - 1, j, wrap(j + 1, n));
        check_finite(g.gp[j], "gradient");
        check_finite(g.gr[j], "gradient");
    }
    return g;
}

Gradient gradient_J_density(const ChainState& state, int m) {
    const int n = state.size();
    require_order(m, n);
    const IntegralDensity& density = *default_density_cache().get(m);
    std::vector<double> e(n);
    for (int s = 0; s < n; ++s) {
        if (!(state.r[s] >= kMinDisplacement)) throw NonFinite("displacement below -1400");
        e[s] = std::exp(-state.r[s]);
    }
    Gradient g;
    g.gp.assign(n, 0.0);
    g.gr.assign(n, 0.0);
    const double inv_m = 1.0 / static_cast<double>(m);

    struct Site {
        int site;
        int np;
        int kp;
    };
    std::vector<Site> sites;
    for (int j = 0; j < n; ++j) {
        for (const auto& term : density.terms) {
            sites.clear();
            for (int idx = 0; idx < static_cast<int>(term.k_exp.size()); ++idx) {
                const int np = idx < static_cast<int>(term.n_exp.size()) ? term.n_exp[idx] : 0;
                const int kp = term.k_exp[idx];
                if (np != 0 || kp != 0) sites.push_back({wrap(j + density.k_offset(idx), n), np, kp});
            }
            const double coef = inv_m * static_cast<double>(term.sign) * static_cast<double>(term.rho);
            double value = coef;
            for (const auto& s : sites) value *= std::pow(e[s.site], s.np) * std::pow(state.p[s.site], s.kp);
            for (std::size_t f = 0; f < sites.size(); ++f) {
                if (sites[f].np != 0) g.gr[sites[f].site] -= sites[f].np * value;
                if (sites[f].kp == 0) continue;
                double dp = coef * sites[f].kp * std::pow(state.p[sites[f].site], sites[f].kp - 1) *
                            std::pow(e[sites[f].site], sites[f].np);
                for (std::size_t h = 0; h < sites.size(); ++h) {
                    if (h == f) continue;
                    dp *= std::pow(e[sites[h].site], sites[h].np) * std::pow(state.p[sites[h].site], sites[h].kp);
                }
                g.gp[sites[f].site] += dp;
            }
        }
    }
    return g;
}

Gradient hamiltonian_gradient(const ChainState& state, const ChainParams& params) {
    Gradient g;
    g.gp = state.p;
    g.gr.resize(state.r.size());
    for (std::size_t j = 0; j < state.r.size(); ++j)
        g.gr[j] = potential_derivative(state.r[j], params.model, params.chi);
    return g;
}

Gradient perturbation_gradient(const ChainState& state, double chi) {
    Gradient g;
    g.gp.assign(state.p.size(), 0.0);
    g.gr.resize(state.r.size());
    for (std::size_t j = 0; j < state.r.size(); ++j) {
        const double x = state.r[j];
        g.gr[j] = potential_derivative(x, Model::FPUT, chi) - potential_derivative(x, Model::Toda, chi);
    }
    return g;
}

double poisson_bracket(const Gradient& f, const Gradient& g) {
    const int n = static_cast<int>(f.gp.size());
    double sum = 0.0;
    for (int j = 0; j < n; ++j) {
        const int prev = wrap(j - 1, n);
        sum += (f.gr[prev] - f.gr[j]) * g.gp[j] - (g.gr[prev] - g.gr[j]) * f.gp[j];
    }
    return sum;
}

double poisson_bracket_scale(const Gradient& f, const Gradient& g) {
    const int n = static_cast<int>(f.gp.size());
    double sum = 0.0;
    for (int j = 0; j < n; ++j) {
        const int prev = wrap(j - 1, n);
        sum += (std::abs(f.gr[prev]) + std::abs(f.gr[j])) * std::abs(g.gp[j]) +
               (std::abs(g.gr[prev]) + std::abs(g.gr[j])) * std::abs(f.gp[j]);
    }
    return sum;
}

double QuadraticPart::evaluate(const ChainState& state) const {
    if (even_order()) return form.bilinear(state.p, state.p) + form.bilinear(state.r, state.r);
    return form.bilinear(state.p, state.r);
}

QuadraticPart quadratic_part(int m, int n) {
    require_order(m, n);
    const IntegralDensity& density = *default_density_cache().get(m);
    const double inv_m = 1.0 / static_cast<double>(m);
    std::vector<double> pp(n, 0.0), rr(n, 0.0), pr(n, 0.0);

    for (const auto& term : density.terms) {
        const int kdeg = term.k_degree();
        if (kdeg > 2) continue;
        const double c = inv_m * static_cast<double>(term.sign) * static_cast<double>(term.rho);
        std::vector<int> p_sites;
        for (int idx = 0; idx < static_cast<int>(term.k_exp.size()); ++idx)
            for (int t = 0; t < term.k_exp[idx]; ++t) p_sites.push_back(density.k_offset(idx));
        if (kdeg == 0) {
            // exp(-n.r) -> (n.r)^2 / 2
            for (int a = 0; a < static_cast<int>(term.n_exp.size()); ++a)
                for (int b = 0; b < static_cast<int>(term.n_exp.size()); ++b)
                    rr[wrap(density.n_offset(a) - density.n_offset(b), n)] +=
                        0.5 * c * term.n_exp[a] * term.n_exp[b];
        } else if (kdeg == 1) {
            // p_a exp(-n.r) -> -p_a (n.r)
            const int a = p_sites[0];
            for (int b = 0; b < static_cast<int>(term.n_exp.size()); ++b)
                pr[wrap(a - density.n_offset(b), n)] -= c * term.n_exp[b];
        } else {
            const int a = p_sites[0];
            const int b = p_sites[1];
            pp[wrap(a - b, n)] += 0.5 * c;
            pp[wrap(b - a, n)] += 0.5 * c;
        }
    }

    QuadraticPart part;
    part.m = m;
    if (m % 2 == 0) {
        for (int k = 0; k < n; ++k)
            if (std::abs(pp[k] - rr[k]) > 1e-12 * (1.0 + std::abs(pp[k])))
                throw AssertionMismatch("momentum and displacement quadratic forms differ at offset " +
                                        std::to_string(k));
        part.form.rep = std::move(pp);
    } else {
        part.form.rep = std::move(pr);
    }
    return part;
}

double constant_part(int m, int n) {
    require_order(m, n);
    const IntegralDensity& density = *default_density_cache().get(m);
    double h0 = 0.0;
    for (const auto& term : density.terms)
        if (term.k_degree() == 0) h0 += static_cast<double>(term.rho);
    return static_cast<double>(n) * h0 / static_cast<double>(m);
}

} // namespace fputlab
