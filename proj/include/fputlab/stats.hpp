#pragma once

#include <functional>
#include <vector>

namespace fputlab {

struct Estimate {
    double value = 0.0;
    double se = 0.0;
};

Estimate mean_estimate(const std::vector<double>& x);

/// Unbiased sample variance with a leave-one-out jackknife error.
Estimate variance_jackknife(const std::vector<double>& x);

/// Generic delete-one jackknife. `estimator(skip)` evaluates the statistic
/// with member `skip` removed, or on all members when skip = -1.
Estimate jackknife(int members, const std::function<double(int)>& estimator);

/// Mean over `batches` contiguous batches with the spread of batch means as error.
Estimate batch_means(const std::vector<double>& series, int batches = 20);

/// sqrt(p (1 - p) / m).
double binomial_stderr(double p, int m);

struct PowerFit {
    double slope = 0.0;
    double intercept = 0.0;
    double r_squared = 0.0;
    double slope_stderr = 0.0;
    int points = 0;
};

/// Weighted least squares of log y on log x. `weights` may be empty
/// (uniform). Throws std::invalid_argument on fewer than 3 points or
/// non-positive data and DegenerateFit if x has fewer than two distinct values.
PowerFit fit_power_law(const std::vector<double>& xs, const std::vector<double>& ys,
                       const std::vector<double>& weights = {});

/// Weights 1 / (se / y)^2 for `fit_power_law`.
std::vector<double> relative_error_weights(const std::vector<Estimate>& ys);

} // namespace fputlab
