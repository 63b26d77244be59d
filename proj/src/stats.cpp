#include "fputlab/stats.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "fputlab/errors.hpp"

namespace fputlab {

Estimate mean_estimate(const std::vector<double>& x) {
    const std::size_t m = x.size();
    if (m < 2) throw std::invalid_argument("need at least two values");
    const double mean = std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(m);
    double ss = 0.0;
    for (double v : x) ss += (v - mean) * (v - mean);
    return {mean, std::sqrt(ss / static_cast<double>(m - 1) / static_cast<double>(m))};
}

Estimate variance_jackknife(const std::vector<double>& x) {
    const std::size_t m = x.size();
    if (m < 3) throw std::invalid_argument("variance jackknife needs at least three values");
    const double mean = std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(m);
    double s1 = 0.0, s2 = 0.0;
    std::vector<double> c(m);
    for (std::size_t i = 0; i < m; ++i) {
        c[i] = x[i] - mean;
        s1 += c[i];
        s2 += c[i] * c[i];
    }
    const double md = static_cast<double>(m);
    const double full = (s2 - s1 * s1 / md) / (md - 1.0);
    std::vector<double> loo(m);
    double loo_mean = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
        const double t1 = s1 - c[i];
        const double t2 = s2 - c[i] * c[i];
        loo[i] = (t2 - t1 * t1 / (md - 1.0)) / (md - 2.0);
        loo_mean += loo[i];
    }
    loo_mean /= md;
    double acc = 0.0;
    for (double v : loo) acc += (v - loo_mean) * (v - loo_mean);
    return {full, std::sqrt((md - 1.0) / md * acc)};
}

Estimate jackknife(int members, const std::function<double(int)>& estimator) {
    if (members < 2) throw std::invalid_argument("jackknife needs at least two members");
    const double full = estimator(-1);
    std::vector<double> loo(members);
    for (int i = 0; i < members; ++i) loo[i] = estimator(i);
    const double mean = std::accumulate(loo.begin(), loo.end(), 0.0) / members;
    double acc = 0.0;
    for (double v : loo) acc += (v - mean) * (v - mean);
    return {full, std::sqrt((members - 1.0) / members * acc)};
}

Estimate batch_means(const std::vector<double>& series, int batches) {
    if (batches < 2) throw std::invalid_argument("need at least two batches");
    const std::size_t len = series.size() / static_cast<std::size_t>(batches);
    if (len == 0) throw std::invalid_argument("series shorter than the number of batches");
    std::vector<double> means(batches);
    for (int b = 0; b < batches; ++b) {
        const auto first = series.begin() + static_cast<std::ptrdiff_t>(b * len);
        means[b] = std::accumulate(first, first + static_cast<std::ptrdiff_t>(len), 0.0) / static_cast<double>(len);
    }
    return mean_estimate(means);
}

double binomial_stderr(double p, int m) {
    if (m <= 0) throw std::invalid_argument("sample size must be positive");
    return std::sqrt(std::max(0.0, p * (1.0 - p)) / m);
}

PowerFit fit_power_law(const std::vector<double>& xs, const std::vector<double>& ys, const std::vector<double>& weights) {
    const std::size_t n = xs.size();
    if (ys.size() != n || (!weights.empty() && weights.size() != n))
        throw std::invalid_argument("fit inputs must have equal length");
    if (n < 3) throw std::invalid_argument("power-law fit needs at least three points");
    std::vector<double> lx(n), ly(n), w(n, 1.0);
    for (std::size_t i = 0; i < n; ++i) {
        if (!(xs[i] > 0.0) || !(ys[i] > 0.0)) throw std::invalid_argument("power-law fit needs positive data");
        lx[i] = std::log(xs[i]);
        ly[i] = std::log(ys[i]);
        if (!weights.empty()) {
            if (!(weights[i] > 0.0) || !std::isfinite(weights[i]))
                throw std::invalid_argument("fit weights must be positive and finite");
            w[i] = weights[i];
        }
    }
    const auto [lo, hi] = std::minmax_element(xs.begin(), xs.end());
    if (*lo == *hi) throw DegenerateFit("power-law fit needs at least two distinct abscissae");

    double sw = 0.0, sx = 0.0, sy = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        sw += w[i];
        sx += w[i] * lx[i];
        sy += w[i] * ly[i];
    }
    const double mx = sx / sw;
    const double my = sy / sw;
    double sxx = 0.0, sxy = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        sxx += w[i] * (lx[i] - mx) * (lx[i] - mx);
        sxy += w[i] * (lx[i] - mx) * (ly[i] - my);
        syy += w[i] * (ly[i] - my) * (ly[i] - my);
    }
    PowerFit fit;
    fit.points = static_cast<int>(n);
    fit.slope = sxy / sxx;
    fit.intercept = my - fit.slope * mx;
    double ss_res = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double e = ly[i] - fit.intercept - fit.slope * lx[i];
        ss_res += w[i] * e * e;
    }
    fit.r_squared = syy > 0.0 ? 1.0 - ss_res / syy : (ss_res == 0.0 ? 1.0 : 0.0);
    // Normalized weights, so the error scale is taken from the residuals.
    const double sigma2 = ss_res / (static_cast<double>(n) - 2.0);
    fit.slope_stderr = std::sqrt(sigma2 / sxx);
    return fit;
}

std::vector<double> relative_error_weights(const std::vector<Estimate>& ys) {
    std::vector<double> w;
    w.reserve(ys.size());
    for (const auto& e : ys) {
        const double rel = e.value != 0.0 ? e.se / std::abs(e.value) : 0.0;
        w.push_back(rel > 0.0 ? 1.0 / (rel * rel) : 1.0);
    }
    return w;
}

} // namespace fputlab
