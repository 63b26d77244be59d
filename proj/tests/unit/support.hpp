#pragma once

#include <map>
#include <random>
#include <tuple>
#include <vector>

#include <functional>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "fputlab/chain.hpp"
#include "fputlab/gibbs.hpp"

namespace testsupport {

/// Random state on sum(p) = sum(r) = 0 with entries of order `scale`.
inline fputlab::ChainState random_state(int n, std::mt19937_64& rng, double scale = 0.5) {
    std::normal_distribution<double> g(0.0, scale);
    fputlab::ChainState s = fputlab::ChainState::zeros(n);
    for (int j = 0; j < n; ++j) {
        s.p[j] = g(rng);
        s.r[j] = g(rng);
    }
    s.center();
    return s;
}

/// Profile key: n counts on offsets -h..h-1 followed by k counts on -h..h.
using Profile = std::vector<int>;

/// Super Motzkin paths of length m, grouped by level profile, counted by
/// walking every U/D/H word.
inline std::map<Profile, long long> brute_force_paths(int m) {
    const int h = m / 2;
    std::map<Profile, long long> counts;
    std::vector<int> steps(m, 0);
    long long words = 1;
    for (int i = 0; i < m; ++i) words *= 3;
    for (long long w = 0; w < words; ++w) {
        long long code = w;
        int height = 0;
        bool ok = true;
        Profile prof(4 * h + 1, 0);
        for (int i = 0; i < m && ok; ++i) {
            const int s = static_cast<int>(code % 3);
            code /= 3;
            if (s == 0) {
                if (height < -h || height >= h) { ok = false; break; }
                prof[height + h] += 1;
                height += 1;
            } else if (s == 1) {
                height -= 1;
                if (height < -h || height >= h) { ok = false; break; }
            } else {
                if (height < -h || height > h) { ok = false; break; }
                prof[2 * h + height + h] += 1;
            }
        }
        if (ok && height == 0) counts[prof] += 1;
    }
    return counts;
}

/// <f(r_0, r_1)> on the plane r_0 + r_1 + r_2 = 0 under exp(-beta sum V(r_j)),
/// by nested Gauss-Kronrod quadrature.
inline double hyperplane3_expectation(const fputlab::ThetaMeasure& tm,
                                      const std::function<double(double, double)>& f) {
    using GK = boost::math::quadrature::gauss_kronrod<double, 31>;
    auto weight = [&](double a, double b) {
        const double c = -a - b;
        return std::exp(-tm.beta * (fputlab::potential(a, tm.model, tm.chi) + fputlab::potential(b, tm.model, tm.chi) +
                                    fputlab::potential(c, tm.model, tm.chi)));
    };
    auto integrate = [&](const std::function<double(double, double)>& g) {
        auto inner = [&](double a) {
            return GK::integrate([&](double b) { return g(a, b) * weight(a, b); }, tm.lo, tm.hi, 15, 1e-12);
        };
        return GK::integrate(inner, tm.lo, tm.hi, 15, 1e-12);
    };
    const double z = integrate([](double, double) { return 1.0; });
    return integrate(f) / z;
}

} // namespace testsupport
