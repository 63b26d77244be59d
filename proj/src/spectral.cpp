#include "fputlab/spectral.hpp"

#include <cmath>
#include <map>
#include <memory>
#include <mutex>
#include <numbers>
#include <stdexcept>
#include <string>

#include <fftw3.h>

#include "fputlab/errors.hpp"
#include "fputlab/toda_lax.hpp"

namespace fputlab {

namespace {

std::mutex& fftw_planner_mutex() {
    static std::mutex m;
    return m;
}

/// Unnormalized FFTW DHT of one fixed length with its own aligned buffers.
class HartleyPlan {
public:
    explicit HartleyPlan(int n) : n_(n) {
        in_ = static_cast<double*>(fftw_malloc(sizeof(double) * n));
        out_ = static_cast<double*>(fftw_malloc(sizeof(double) * n));
        std::lock_guard<std::mutex> lock(fftw_planner_mutex());
        plan_ = fftw_plan_r2r_1d(n, in_, out_, FFTW_DHT, FFTW_ESTIMATE);
    }
    ~HartleyPlan() {
        std::lock_guard<std::mutex> lock(fftw_planner_mutex());
        fftw_destroy_plan(plan_);
        fftw_free(in_);
        fftw_free(out_);
    }
    HartleyPlan(const HartleyPlan&) = delete;
    HartleyPlan& operator=(const HartleyPlan&) = delete;

    std::vector<double> run(const std::vector<double>& x) {
        std::copy(x.begin(), x.end(), in_);
        fftw_execute(plan_);
        const double scale = 1.0 / std::sqrt(static_cast<double>(n_));
        std::vector<double> y(n_);
        for (int j = 0; j < n_; ++j) y[j] = out_[j] * scale;
        return y;
    }

private:
    int n_;
    double* in_;
    double* out_;
    fftw_plan plan_;
};

HartleyPlan& plan_for(int n) {
    thread_local std::map<int, std::unique_ptr<HartleyPlan>> plans;
    auto& slot = plans[n];
    if (!slot) slot = std::make_unique<HartleyPlan>(n);
    return *slot;
}

std::vector<double> q_from_r(const std::vector<double>& r) {
    std::vector<double> q(r.size(), 0.0);
    for (std::size_t j = 1; j < r.size(); ++j) q[j] = q[j - 1] + r[j - 1];
    return q;
}

double max_abs_diff(const std::vector<double>& a, const std::vector<double>& b) {
    double d = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) d = std::max(d, std::abs(a[i] - b[i]));
    return d;
}

} // namespace

std::vector<double> hartley_direct(const std::vector<double>& x) {
    const int n = static_cast<int>(x.size());
    if (n < 1) throw std::invalid_argument("hartley transform needs length >= 1");
    std::vector<double> cas(n);
    for (int k = 0; k < n; ++k) {
        const double angle = 2.0 * std::numbers::pi * k / n;
        cas[k] = std::cos(angle) + std::sin(angle);
    }
    const double scale = 1.0 / std::sqrt(static_cast<double>(n));
    std::vector<double> y(n, 0.0);
    for (int j = 0; j < n; ++j) {
        double acc = 0.0;
        for (int k = 0; k < n; ++k) acc += cas[(static_cast<long>(j) * k) % n] * x[k];
        y[j] = acc * scale;
    }
    return y;
}

std::vector<double> hartley_fast(const std::vector<double>& x) {
    const int n = static_cast<int>(x.size());
    if (n < 1) throw std::invalid_argument("hartley transform needs length >= 1");
    return plan_for(n).run(x);
}

std::vector<double> hartley(const std::vector<double>& x) {
    return static_cast<int>(x.size()) < kHartleyFastThreshold ? hartley_direct(x) : hartley_fast(x);
}

double mode_frequency(int j, int n) {
    return 2.0 * std::sin(std::numbers::pi * j / n);
}

std::vector<double> normal_modes(const ChainState& state) {
    const int n = state.size();
    const std::vector<double> ph = hartley(state.p);
    const std::vector<double> qh = hartley(q_from_r(state.r));
    std::vector<double> e(n, 0.0);
    for (int j = 1; j < n; ++j) {
        const double w = mode_frequency(j, n);
        e[j] = 0.5 * (ph[j] * ph[j] + w * w * qh[j] * qh[j]);
    }
    return e;
}

AdmissibleVector AdmissibleVector::embed(int m, std::vector<double> y, int n, Parity parity) {
    if (m < 0) throw std::invalid_argument("admissible order must be >= 0");
    const int half = m / 2;
    if (static_cast<int>(y.size()) != half + 1)
        throw std::invalid_argument("admissible vector of order " + std::to_string(m) + " needs " +
                                    std::to_string(half + 1) + " entries");
    const int span = parity == Parity::Even ? 2 * half + 1 : 2 * half + 2;
    if (n < span) throw std::invalid_argument("chain too short for admissible support");
    AdmissibleVector v;
    v.m = m;
    v.parity = parity;
    v.g.assign(n, 0.0);
    for (int k = 0; k <= half; ++k) {
        if (parity == Parity::Even) {
            v.g[k] = y[k];
            v.g[wrap(-k, n)] = y[k];
        } else {
            v.g[wrap(-k, n)] = y[k];
            v.g[wrap(1 + k, n)] = y[k];
        }
    }
    v.y = std::move(y);
    return v;
}

bool AdmissibleVector::within_bound(double K) const {
    double s = 0.0;
    for (double v : y) s += std::abs(v);
    return s >= 1.0 / K && s <= K;
}

double phi_physical(const ChainState& state, const std::vector<double>& g) {
    const int n = state.size();
    if (static_cast<int>(g.size()) != n) throw std::invalid_argument("packet vector length differs from chain");
    double sum = 0.0;
    for (int l = 0; l < n; ++l) {
        if (g[l] == 0.0) continue;
        double acc = 0.0;
        for (int j = 0; j < n; ++j) {
            const int k = wrap(j + l, n);
            acc += state.p[j] * state.p[k] + state.r[j] * state.r[k];
        }
        sum += g[l] * acc;
    }
    return sum / (2.0 * std::sqrt(static_cast<double>(n)));
}

PhiRoutes phi_routes(const ChainState& state, const AdmissibleVector& g) {
    if (g.parity != Parity::Even) throw std::invalid_argument("mode packets need an even admissible vector");
    if (g.size() != state.size()) throw std::invalid_argument("packet vector length differs from chain");
    const std::vector<double> gh = hartley(g.g);
    const std::vector<double> e = normal_modes(state);
    double mode = 0.0;
    for (int j = 0; j < state.size(); ++j) mode += gh[j] * e[j];
    return {mode, phi_physical(state, g.g)};
}

double phi_observable(const ChainState& state, const AdmissibleVector& g) {
    const PhiRoutes routes = phi_routes(state, g);
    double scale = 0.0;
    for (int j = 0; j < state.size(); ++j) scale += state.p[j] * state.p[j] + state.r[j] * state.r[j];
    double gmax = 0.0;
    for (double v : g.g) gmax = std::max(gmax, std::abs(v));
    scale *= gmax * (2 * g.half() + 1);
    if (std::abs(routes.mode_space - routes.physical_space) > 1e-10 * std::max(1.0, scale))
        throw AssertionMismatch("packet observable: mode-space " + std::to_string(routes.mode_space) +
                                " vs physical-space " + std::to_string(routes.physical_space));
    return routes.physical_space;
}

std::vector<double> circulant_eigs(const CirculantSpec& spec) {
    std::vector<double> eig = hartley(spec.rep);
    const double s = std::sqrt(static_cast<double>(spec.size()));
    for (double& v : eig) v *= s;
    return eig;
}

double circulant_diagonalization_residual(const CirculantSpec& spec) {
    const int n = spec.size();
    const std::vector<double> a = spec.dense();
    std::vector<double> h(static_cast<std::size_t>(n) * n);
    const double scale = 1.0 / std::sqrt(static_cast<double>(n));
    for (int j = 0; j < n; ++j)
        for (int k = 0; k < n; ++k) {
            const double angle = 2.0 * std::numbers::pi * ((static_cast<long>(j) * k) % n) / n;
            h[j * n + k] = scale * (std::cos(angle) + std::sin(angle));
        }
    std::vector<double> ha(static_cast<std::size_t>(n) * n, 0.0);
    for (int i = 0; i < n; ++i)
        for (int l = 0; l < n; ++l)
            for (int k = 0; k < n; ++k) ha[i * n + k] += h[i * n + l] * a[l * n + k];
    const std::vector<double> eig = circulant_eigs(spec);
    double worst = 0.0;
    for (int i = 0; i < n; ++i)
        for (int k = 0; k < n; ++k) {
            double v = 0.0;
            for (int l = 0; l < n; ++l) v += ha[i * n + l] * h[l * n + k];
            worst = std::max(worst, std::abs(v - (i == k ? eig[i] : 0.0)));
        }
    return worst;
}

std::vector<double> reconstruct_admissible(const std::vector<double>& coefficients, DecompositionKind kind, int n) {
    std::vector<double> out(n, 0.0);
    for (int l = 0; l < static_cast<int>(coefficients.size()); ++l) {
        if (coefficients[l] == 0.0) continue;
        const QuadraticPart q = quadratic_part(decomposition_order(kind, l), n);
        for (int k = 0; k < n; ++k) out[k] += coefficients[l] * q.form.rep[k];
    }
    return out;
}

Decomposition decompose_admissible(const AdmissibleVector& g, DecompositionKind kind) {
    const int n = g.size();
    const int half = g.half();
    const Parity needed = kind == DecompositionKind::Second ? Parity::Even : Parity::Staggered;
    if (g.parity != needed)
        throw std::invalid_argument(kind == DecompositionKind::Second
                                        ? "second-kind decomposition needs an even admissible vector"
                                        : "first-kind decomposition needs a staggered admissible vector");

    // Row l reads offset l (second kind) or -l (first kind); basis form l
    // vanishes beyond row l, so the system is upper triangular.
    auto row_offset = [&](int l) { return kind == DecompositionKind::Second ? l : wrap(-l, n); };
    std::vector<std::vector<double>> basis(half + 1);
    for (int l = 0; l <= half; ++l) basis[l] = quadratic_part(decomposition_order(kind, l), n).form.rep;

    Decomposition out;
    out.coefficients.assign(half + 1, 0.0);
    for (int l = half; l >= 0; --l) {
        const double pivot = basis[l][row_offset(l)];
        if (!(pivot > 0.0))
            throw SingularSystem("non-positive pivot " + std::to_string(pivot) + " at slot " + std::to_string(l));
        double rhs = g.g[row_offset(l)];
        for (int h = l + 1; h <= half; ++h) rhs -= out.coefficients[h] * basis[h][row_offset(l)];
        out.coefficients[l] = rhs / pivot;
    }
    out.residual = max_abs_diff(reconstruct_admissible(out.coefficients, kind, n), g.g);
    double gmax = 0.0;
    for (double v : g.g) gmax = std::max(gmax, std::abs(v));
    if (out.residual > 1e-10 * std::max(1.0, gmax))
        throw AssertionMismatch("admissible decomposition residual " + std::to_string(out.residual));
    return out;
}

} // namespace fputlab
