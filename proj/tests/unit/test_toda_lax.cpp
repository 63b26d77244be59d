#include "doctest.h"

#include <cmath>
#include <algorithm>
#include <map>
#include <stdexcept>
#include <random>

#include <Eigen/Dense>

#include "fputlab/errors.hpp"
#include "fputlab/toda_lax.hpp"
#include "support.hpp"

using namespace fputlab;

namespace {

// Integer polynomial in translation-reduced form: keys are (site, kind,
// power) triples shifted so the smallest site is 0; kind 0 is p, kind 1 is
// exp(-r).
using Monomial = std::vector<std::tuple<int, int, int>>;

Monomial canonical(Monomial mono) {
    int lo = 1 << 20;
    for (auto& [site, kind, power] : mono) lo = std::min(lo, site);
    for (auto& [site, kind, power] : mono) site -= lo;
    std::sort(mono.begin(), mono.end());
    return mono;
}

// m * J^(m) as a map from translation class to integer coefficient.
std::map<Monomial, long long> scaled_integral_classes(const IntegralDensity& d) {
    std::map<Monomial, long long> out;
    for (const auto& t : d.terms) {
        Monomial mono;
        for (int idx = 0; idx < static_cast<int>(t.k_exp.size()); ++idx) {
            if (t.k_exp[idx] > 0) mono.emplace_back(d.k_offset(idx), 0, t.k_exp[idx]);
            if (idx < static_cast<int>(t.n_exp.size()) && t.n_exp[idx] > 0)
                mono.emplace_back(d.n_offset(idx), 1, t.n_exp[idx]);
        }
        out[canonical(mono)] += t.sign * static_cast<long long>(t.rho);
    }
    return out;
}

double dense_trace_integral(const ChainState& s, int m) {
    const Eigen::MatrixXd L = lax_matrix(flaschka(s));
    Eigen::MatrixXd P = Eigen::MatrixXd::Identity(L.rows(), L.cols());
    for (int i = 0; i < m; ++i) P = P * L;
    return P.trace() / m;
}

} // namespace

TEST_CASE("density term counts") {
    const int expected[] = {1, 3, 5, 12, 22, 47, 89, 180, 344, 676};
    for (int m = 1; m <= 10; ++m) CHECK(build_density(m).terms.size() == static_cast<std::size_t>(expected[m - 1]));
}

TEST_CASE("density coefficients equal brute-force path counts") {
    for (int m = 1; m <= 10; ++m) {
        const IntegralDensity d = build_density(m);
        const auto paths = testsupport::brute_force_paths(m);
        std::map<testsupport::Profile, long long> built;
        for (const auto& t : d.terms) {
            testsupport::Profile key(t.n_exp);
            key.insert(key.end(), t.k_exp.begin(), t.k_exp.end());
            CHECK(built.count(key) == 0);
            built[key] = static_cast<long long>(t.rho);
            CHECK(t.sign == (t.k_degree() % 2 == 0 ? 1 : -1));
            CHECK(2 * t.n_degree() + t.k_degree() == m);
        }
        CHECK(built == paths);
    }
}

TEST_CASE("multiplicity rejects profiles of the wrong order") {
    CHECK(motzkin_multiplicity(2, {0, 1}, {0, 0, 1}) == 0);
    CHECK(motzkin_multiplicity(2, {0, 1}, {0, 0, 0}) == 1);
    CHECK(motzkin_multiplicity(4, {0, 1, 1, 0}, {0, 0, 0, 0, 0}) == 2);
    CHECK(motzkin_multiplicity(4, {0, 0, 2, 0}, {0, 0, 0, 0, 0}) == 1);
    CHECK_THROWS_AS(motzkin_multiplicity(2, {0}, {0, 0, 1}), std::invalid_argument);
}

TEST_CASE("explicit low-order integrals") {
    using M = Monomial;
    // p: kind 0, exp(-r): kind 1; values are m * coefficient
    const std::map<M, long long> j1 = {{M{{0, 0, 1}}, -1}};
    const std::map<M, long long> j2 = {{M{{0, 0, 2}}, 1}, {M{{0, 1, 1}}, 2}};
    const std::map<M, long long> j3 = {{M{{0, 0, 3}}, -1}, {M{{0, 0, 1}, {0, 1, 1}}, -3}, {M{{0, 1, 1}, {1, 0, 1}}, -3}};
    const std::map<M, long long> j4 = {{M{{0, 0, 4}}, 1},
                                       {M{{0, 0, 2}, {0, 1, 1}}, 4},
                                       {M{{0, 0, 1}, {0, 1, 1}, {1, 0, 1}}, 4},
                                       {M{{0, 1, 1}, {1, 0, 2}}, 4},
                                       {M{{0, 1, 2}}, 2},
                                       {M{{0, 1, 1}, {1, 1, 1}}, 4}};
    CHECK(scaled_integral_classes(build_density(1)) == j1);
    CHECK(scaled_integral_classes(build_density(2)) == j2);
    CHECK(scaled_integral_classes(build_density(3)) == j3);
    CHECK(scaled_integral_classes(build_density(4)) == j4);
}

TEST_CASE("density cache returns shared entries and honours its cap") {
    DensityCache cache(6);
    auto a = cache.get(5);
    auto b = cache.get(5);
    CHECK(a.get() == b.get());
    CHECK_THROWS_AS(cache.get(7), std::invalid_argument);
    CHECK_THROWS_AS(cache.get(0), std::invalid_argument);
}

TEST_CASE("flaschka variables and lax matrix") {
    const ChainState s({1.0, -1.0, 0.0, 0.0}, {0.0, 0.0, 0.0, 0.0});
    const FlaschkaVars fv = flaschka(s);
    CHECK(fv.b == std::vector<double>{-1.0, 1.0, -0.0, -0.0});
    CHECK(fv.a == std::vector<double>{1.0, 1.0, 1.0, 1.0});
    const Eigen::MatrixXd L0 = lax_matrix(flaschka(ChainState::zeros(4)));
    Eigen::MatrixXd expected(4, 4);
    expected << 0, 1, 0, 1, 1, 0, 1, 0, 0, 1, 0, 1, 1, 0, 1, 0;
    CHECK((L0 - expected).cwiseAbs().maxCoeff() == 0.0);

    std::mt19937_64 rng(5);
    const ChainState r = testsupport::random_state(9, rng);
    const FlaschkaVars fr = flaschka(r);
    const Eigen::MatrixXd L = lax_matrix(fr);
    CHECK((L - L.transpose()).cwiseAbs().maxCoeff() == 0.0);
    CHECK(std::abs(L.trace()) < 1e-12);
    double prod = 1.0;
    for (double a : fr.a) prod *= a;
    CHECK(prod == doctest::Approx(1.0).epsilon(1e-10));

    ChainState blown = ChainState::zeros(4);
    blown.r = {-1500.0, 1500.0, 0.0, 0.0};
    CHECK_THROWS_AS(flaschka(blown), NonFinite);
}

TEST_CASE("trace integral at rest and against dense powers") {
    CHECK(toda_integral_trace(ChainState::zeros(4), 2) == doctest::Approx(4.0));
    CHECK(toda_integral_trace(ChainState::zeros(16), 1) == 0.0);
    std::mt19937_64 rng(17);
    for (int n : {5, 7, 12, 20}) {
        const ChainState s = testsupport::random_state(n, rng, 0.6);
        for (int m = 1; m < n && m <= 9; ++m)
            CHECK(toda_integral_trace(s, m) == doctest::Approx(dense_trace_integral(s, m)).epsilon(1e-12));
    }
}

TEST_CASE("lax power entries match dense powers, including wrapped windows") {
    std::mt19937_64 rng(23);
    for (int n : {3, 4, 6, 11}) {
        const ChainState s = testsupport::random_state(n, rng, 0.5);
        const FlaschkaVars fv = flaschka(s);
        const Eigen::MatrixXd L = lax_matrix(fv);
        Eigen::MatrixXd P = Eigen::MatrixXd::Identity(n, n);
        for (int k = 0; k <= 7; ++k) {
            for (int i = 0; i < n; ++i)
                for (int j = 0; j < n; ++j) CHECK(lax_power_entry(fv, k, i, j) == doctest::Approx(P(i, j)).epsilon(1e-12));
            P = P * L;
        }
    }
}

TEST_CASE("closed-form integrals agree with traces") {
    std::mt19937_64 rng(29);
    for (int m = 1; m <= 10; ++m) {
        for (int n : {2 * m + 1, 2 * m + 4, 40}) {
            const ChainState s = testsupport::random_state(n, rng, 0.5);
            const double tr = toda_integral_trace(s, m);
            CHECK(std::abs(toda_integral(s, m) - tr) <= 1e-12 * std::max(1.0, std::abs(tr)));
        }
    }
    CHECK_THROWS_AS(toda_integral(ChainState::zeros(8), 4), std::invalid_argument);
}

TEST_CASE("second integral is the toda energy plus n") {
    std::mt19937_64 rng(31);
    ChainParams params;
    params.model = Model::Toda;
    for (int rep = 0; rep < 10; ++rep) {
        const ChainState s = testsupport::random_state(12, rng, 0.8);
        CHECK(toda_integral(s, 2) - hamiltonian(s, params) == doctest::Approx(12.0).epsilon(1e-12));
    }
}

TEST_CASE("parity, shift invariance and odd integrals at zero momentum") {
    std::mt19937_64 rng(37);
    const ChainState s = testsupport::random_state(15, rng, 0.6);
    ChainState flipped = s;
    for (double& p : flipped.p) p = -p;
    for (int m = 1; m <= 7; ++m) {
        const double j = toda_integral(s, m);
        const double sign = (m % 2 == 0) ? 1.0 : -1.0;
        CHECK(toda_integral(flipped, m) == doctest::Approx(sign * j).epsilon(1e-12));
        for (int l : {1, 4, -3}) CHECK(toda_integral(s.shifted(l), m) == doctest::Approx(j).epsilon(1e-12));
    }
    ChainState still = s;
    std::fill(still.p.begin(), still.p.end(), 0.0);
    CHECK(std::abs(toda_integral(still, 3)) < 1e-13);
    CHECK(std::abs(toda_integral(still, 5)) < 1e-12);
}

TEST_CASE("local density: rest value, shift covariance and support") {
    for (int m = 1; m <= 8; ++m) {
        const IntegralDensity d = build_density(m);
        double h0 = 0.0;
        for (const auto& t : d.terms)
            if (t.k_degree() == 0) h0 += static_cast<double>(t.rho);
        CHECK(eval_density(d, ChainState::zeros(2 * m + 3), 1) == doctest::Approx(h0));
    }
    std::mt19937_64 rng(41);
    const int n = 21;
    const ChainState s = testsupport::random_state(n, rng, 0.5);
    const IntegralDensity d = build_density(5);
    for (int l : {2, 7})
        for (int j = 0; j < n; ++j)
            CHECK(eval_density(d, s.shifted(l), j) == doctest::Approx(eval_density(d, s, wrap(j + l, n))).epsilon(1e-13));

    // Perturbing sites farther than m from j leaves h_j unchanged.
    const int m = 5;
    const int j = 10;
    for (int site = 0; site < n; ++site) {
        int dist = std::abs(site - j);
        dist = std::min(dist, n - dist);
        if (dist <= m) continue;
        ChainState t = s;
        t.p[site] += 0.3;
        t.r[site] -= 0.2;
        CHECK(eval_density(d, t, j) == eval_density(d, s, j));
    }
}

TEST_CASE("gradient examples") {
    std::mt19937_64 rng(43);
    const ChainState s = testsupport::random_state(10, rng, 0.5);
    const Gradient g2 = gradient_J(s, 2);
    const Gradient g1 = gradient_J(s, 1);
    for (int j = 0; j < 10; ++j) {
        CHECK(g2.gp[j] == doctest::Approx(s.p[j]).epsilon(1e-13));
        CHECK(g2.gr[j] == doctest::Approx(-std::exp(-s.r[j])).epsilon(1e-13));
        CHECK(g1.gp[j] == -1.0);
        CHECK(g1.gr[j] == 0.0);
    }
}

TEST_CASE("gradients agree with central differences and the density route") {
    std::mt19937_64 rng(47);
    const int n = 16;
    const double h = 1e-6;
    const ChainState s = testsupport::random_state(n, rng, 0.4);
    for (int m = 1; m <= 6; ++m) {
        const Gradient g = gradient_J(s, m);
        const Gradient gd = gradient_J_density(s, m);
        double scale = 0.0;
        for (int j = 0; j < n; ++j) scale = std::max({scale, std::abs(g.gp[j]), std::abs(g.gr[j])});
        for (int j = 0; j < n; ++j) {
            ChainState a = s, b = s;
            a.p[j] += h;
            b.p[j] -= h;
            const double fdp = (toda_integral(a, m) - toda_integral(b, m)) / (2 * h);
            a = s;
            b = s;
            a.r[j] += h;
            b.r[j] -= h;
            const double fdr = (toda_integral(a, m) - toda_integral(b, m)) / (2 * h);
            CHECK(std::abs(g.gp[j] - fdp) <= 1e-6 * std::max(1.0, scale));
            CHECK(std::abs(g.gr[j] - fdr) <= 1e-6 * std::max(1.0, scale));
            CHECK(gd.gp[j] == doctest::Approx(g.gp[j]).epsilon(1e-11));
            CHECK(gd.gr[j] == doctest::Approx(g.gr[j]).epsilon(1e-11));
        }
    }
}

TEST_CASE("brackets: involution with the toda energy and antisymmetry") {
    std::mt19937_64 rng(53);
    ChainParams toda;
    toda.model = Model::Toda;
    ChainParams fput;
    fput.model = Model::FPUT;
    fput.chi = 2.0;
    for (int rep = 0; rep < 20; ++rep) {
        const ChainState s = testsupport::random_state(32, rng, 0.6);
        const Gradient ht = hamiltonian_gradient(s, toda);
        const Gradient hf = hamiltonian_gradient(s, fput);
        CHECK(poisson_bracket(ht, ht) == 0.0);
        for (int m = 1; m <= 6; ++m) {
            const Gradient gj = gradient_J(s, m);
            const double scale = poisson_bracket_scale(gj, ht);
            CHECK(std::abs(poisson_bracket(gj, ht)) <= 1e-10 * std::max(1.0, scale));
            const double full = poisson_bracket(gj, hf);
            const double pert = poisson_bracket(gj, perturbation_gradient(s, 2.0));
            CHECK(std::abs(full - pert) <= 1e-10 * std::max(1.0, poisson_bracket_scale(gj, hf)));
            CHECK(poisson_bracket(gj, hf) == doctest::Approx(-poisson_bracket(hf, gj)).epsilon(1e-14));
        }
    }
}

TEST_CASE("bracket of r_j with the energy reproduces the equations of motion") {
    std::mt19937_64 rng(59);
    const int n = 8;
    const ChainState s = testsupport::random_state(n, rng, 0.5);
    ChainParams params;
    params.model = Model::FPUT;
    params.chi = 1.0;
    const Gradient hg = hamiltonian_gradient(s, params);
    const auto [dp, dr] = eom_rhs(s, params);
    for (int j = 0; j < n; ++j) {
        Gradient rj{std::vector<double>(n, 0.0), std::vector<double>(n, 0.0)};
        rj.gr[j] = 1.0;
        Gradient pj{std::vector<double>(n, 0.0), std::vector<double>(n, 0.0)};
        pj.gp[j] = 1.0;
        CHECK(poisson_bracket(rj, hg) == doctest::Approx(dr[j]).epsilon(1e-14));
        CHECK(poisson_bracket(pj, hg) == doctest::Approx(dp[j]).epsilon(1e-14));
    }
}

TEST_CASE("quadratic parts") {
    const int n = 24;
    auto at = [&](const QuadraticPart& q, int k) { return q.form.rep[wrap(k, n)]; };
    const QuadraticPart q2 = quadratic_part(2, n);
    CHECK(at(q2, 0) == doctest::Approx(0.5));
    for (int k = 1; k < n; ++k) CHECK(at(q2, k) == 0.0);

    const QuadraticPart q3 = quadratic_part(3, n);
    CHECK(at(q3, 0) == doctest::Approx(1.0));
    CHECK(at(q3, 1) == doctest::Approx(1.0));
    for (int k = 2; k < n; ++k) CHECK(at(q3, k) == 0.0);

    const QuadraticPart q4 = quadratic_part(4, n);
    CHECK(at(q4, 0) == doctest::Approx(2.0));
    CHECK(at(q4, 1) == doctest::Approx(0.5));
    CHECK(at(q4, -1) == doctest::Approx(0.5));

    const QuadraticPart q5 = quadratic_part(5, n);
    CHECK(at(q5, -1) == doctest::Approx(1.0));
    CHECK(at(q5, 0) == doctest::Approx(5.0));
    CHECK(at(q5, 1) == doctest::Approx(5.0));
    CHECK(at(q5, 2) == doctest::Approx(1.0));

    const QuadraticPart q8 = quadratic_part(8, n);
    CHECK(at(q8, 0) == doctest::Approx(32.0));
    CHECK(at(q8, 1) == doctest::Approx(14.5));
    CHECK(at(q8, 2) == doctest::Approx(4.0));
    CHECK(at(q8, 3) == doctest::Approx(0.5));
    CHECK(at(q8, 4) == 0.0);

    for (int m = 2; m <= 8; m += 2) {
        const QuadraticPart q = quadratic_part(m, n);
        CHECK(q.form.is_even(1e-14));
        for (int k = 0; k < m / 2; ++k) CHECK(at(q, k) > 0.0);
    }
    for (int m = 1; m <= 7; m += 2) {
        const QuadraticPart q = quadratic_part(m, n);
        for (int k = 0; k < n; ++k) CHECK(at(q, k) == doctest::Approx(at(q, 1 - k)));
    }
}

TEST_CASE("quadratic part is the second-order Taylor term") {
    std::mt19937_64 rng(61);
    const int n = 19;
    const ChainState base = testsupport::random_state(n, rng, 1.0);
    for (int m = 2; m <= 6; ++m) {
        const QuadraticPart q = quadratic_part(m, n);
        const double j0 = constant_part(m, n);
        CHECK(toda_integral(ChainState::zeros(n), m) == doctest::Approx(j0).epsilon(1e-13));
        for (double eps : {1e-2, 5e-3}) {
            ChainState s = base;
            for (int j = 0; j < n; ++j) {
                s.p[j] *= eps;
                s.r[j] *= eps;
            }
            // J - J_0 - J_2 is cubic in eps: the linear term vanishes on the manifold.
            const double rest = toda_integral(s, m) - j0 - q.evaluate(s);
            CHECK(std::abs(rest) <= 50.0 * std::pow(eps, 3) * std::pow(3.0, m));
        }
    }
}
