#include "fputlab/check.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>

#include <boost/math/special_functions/digamma.hpp>
#include <boost/math/special_functions/trigamma.hpp>

#include "fputlab/gibbs.hpp"
#include "fputlab/spectral.hpp"
#include "fputlab/stats.hpp"
#include "fputlab/toda_lax.hpp"

namespace fputlab {

namespace {

std::string fmt(const char* format, double a, double b = 0.0) {
    char buf[160];
    std::snprintf(buf, sizeof buf, format, a, b);
    return buf;
}

ChainState random_manifold_state(int n, std::mt19937_64& rng, double scale) {
    std::normal_distribution<double> g(0.0, scale);
    ChainState s = ChainState::zeros(n);
    for (int j = 0; j < n; ++j) {
        s.p[j] = g(rng);
        s.r[j] = g(rng);
    }
    s.center();
    return s;
}

// Largest relative gap between the closed-form density and the trace.
double motzkin_gap(int max_m, int max_n, int states, bool fault, std::mt19937_64& rng) {
    double worst = 0.0;
    for (int m = 1; m <= max_m; ++m) {
        IntegralDensity density = *default_density_cache().get(m);
        if (fault && m == max_m) density.terms.back().rho += 1;
        for (int n = 2 * m + 1; n <= max_n; ++n) {
            for (int k = 0; k < states; ++k) {
                const ChainState s = random_manifold_state(n, rng, 0.5);
                const double a = toda_integral(s, density);
                const double b = toda_integral_trace(s, m);
                worst = std::max(worst, std::abs(a - b) / std::max(1.0, std::abs(b)));
            }
        }
    }
    return worst;
}

double gradient_gap(int max_m, std::mt19937_64& rng) {
    double worst = 0.0;
    const double h = 1e-5;
    for (int m = 1; m <= max_m; ++m) {
        const ChainState s = random_manifold_state(2 * m + 5, rng, 0.3);
        const Gradient g = gradient_J(s, m);
        for (int j = 0; j < s.size(); ++j) {
            for (int which = 0; which < 2; ++which) {
                ChainState up = s, down = s;
                (which == 0 ? up.p : up.r)[j] += h;
                (which == 0 ? down.p : down.r)[j] -= h;
                const double fd = (toda_integral_trace(up, m) - toda_integral_trace(down, m)) / (2.0 * h);
                const double an = which == 0 ? g.gp[j] : g.gr[j];
                worst = std::max(worst, std::abs(fd - an) / std::max(1.0, std::abs(an)));
            }
        }
    }
    return worst;
}

double toda_bracket_gap(int max_m, int states, std::mt19937_64& rng) {
    double worst = 0.0;
    const int n = 32;
    const ChainParams toda{n, 1.0, 1.0, Model::Toda};
    for (int k = 0; k < states; ++k) {
        const ChainState s = random_manifold_state(n, rng, 0.4);
        const Gradient h = hamiltonian_gradient(s, toda);
        for (int m = 1; m <= max_m; ++m) {
            const Gradient g = gradient_J(s, m);
            worst = std::max(worst, std::abs(poisson_bracket(g, h)) / poisson_bracket_scale(g, h));
        }
    }
    return worst;
}

double hartley_gap(std::mt19937_64& rng) {
    std::normal_distribution<double> g;
    double worst = 0.0;
    for (int n : {8, 63, 64, 256}) {
        std::vector<double> x(n);
        for (double& v : x) v = g(rng);
        const std::vector<double> y = hartley(x);
        const std::vector<double> back = hartley(y);
        double ex = 0.0, ey = 0.0;
        for (int j = 0; j < n; ++j) {
            worst = std::max(worst, std::abs(back[j] - x[j]));
            ex += x[j] * x[j];
            ey += y[j] * y[j];
        }
        worst = std::max(worst, std::abs(ex - ey) / ex);
    }
    return worst;
}

double circulant_gap() {
    double worst = 0.0;
    // even orders give symmetric forms, the ones the Hartley basis diagonalizes
    worst = std::max(worst, circulant_diagonalization_residual(quadratic_part(2, 8).form));
    for (int m : {2, 4, 6}) worst = std::max(worst, circulant_diagonalization_residual(quadratic_part(m, 16).form));
    return worst;
}

double theta_gap() {
    double worst = 0.0;
    for (double beta : {16.0, 64.0, 256.0}) {
        const ThetaMeasure tm = solve_theta(beta, Model::Toda);
        worst = std::max(worst, std::abs(boost::math::digamma(tm.theta + beta) - std::log(beta)));
        worst = std::max(worst, std::abs(moments_quadrature(tm, 2) - boost::math::trigamma(tm.theta + beta)));
    }
    return worst;
}

double moment_slope_gap() {
    double worst = 0.0;
    const std::vector<double> betas{64.0, 128.0, 256.0};
    for (Model model : {Model::Toda, Model::FPUT}) {
        for (int k : {2, 4}) {
            std::vector<double> v;
            for (double b : betas) v.push_back(moments_quadrature(solve_theta(b, model, 1.0), k));
            worst = std::max(worst, std::abs(fit_power_law(betas, v).slope + k / 2.0));
        }
    }
    return worst;
}

} // namespace

std::vector<CheckResult> run_checks(const CheckOptions& options) {
    std::mt19937_64 rng(options.seed);
    std::vector<CheckResult> out;
    auto run = [&](std::string name, double tolerance, const char* what, const std::function<double()>& body) {
        const auto start = std::chrono::steady_clock::now();
        CheckResult r;
        r.name = std::move(name);
        try {
            const double gap = body();
            r.passed = gap <= tolerance;
            r.detail = fmt(what, gap, tolerance);
        } catch (const std::exception& e) {
            r.passed = false;
            r.detail = std::string("exception: ") + e.what();
        }
        r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        out.push_back(std::move(r));
    };

    const bool q = options.quick;
    run("motzkin-vs-trace", 1e-12, "max relative gap %.3g (tol %.0e)",
        [&] { return motzkin_gap(q ? 6 : 10, q ? 24 : 64, q ? 3 : 10, options.inject_fault, rng); });
    run("gradient", 1e-6, "max relative finite-difference gap %.3g (tol %.0e)",
        [&] { return gradient_gap(q ? 4 : 6, rng); });
    run("toda-bracket-zero", 1e-10, "max relative bracket %.3g (tol %.0e)",
        [&] { return toda_bracket_gap(6, q ? 20 : 200, rng); });
    run("hartley-involution", 1e-12, "max involution/Parseval error %.3g (tol %.0e)", [&] { return hartley_gap(rng); });
    run("circulant-diagonalization", 1e-10, "max residual %.3g (tol %.0e)", [] { return circulant_gap(); });
    run("theta-moments", 1e-8, "max digamma/trigamma error %.3g (tol %.0e)", [] { return theta_gap(); });
    run("moment-scaling", 0.05, "max |slope + k/2| %.3g (tol %.2f)", [] { return moment_slope_gap(); });
    return out;
}

} // namespace fputlab
