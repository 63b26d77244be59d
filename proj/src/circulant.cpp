#include "fputlab/circulant.hpp"

#include <cmath>
#include <stdexcept>

namespace fputlab {

bool CirculantSpec::is_even(double tol) const {
    const int n = size();
    for (int k = 1; k < n; ++k)
        if (std::abs(rep[k] - rep[n - k]) > tol) return false;
    return true;
}

std::vector<double> CirculantSpec::dense() const {
    const int n = size();
    std::vector<double> out(static_cast<std::size_t>(n) * n);
    for (int j = 0; j < n; ++j)
        for (int k = 0; k < n; ++k) out[j * n + k] = rep[((j - k) % n + n) % n];
    return out;
}

double CirculantSpec::bilinear(const std::vector<double>& x, const std::vector<double>& y) const {
    const int n = size();
    if (static_cast<int>(x.size()) != n || static_cast<int>(y.size()) != n)
        throw std::invalid_argument("bilinear form: vector length differs from circulant size");
    double sum = 0.0;
    for (int d = 0; d < n; ++d) {
        if (rep[d] == 0.0) continue;
        double acc = 0.0;
        for (int k = 0; k < n; ++k) {
            const int j = k + d < n ? k + d : k + d - n;
            acc += x[j] * y[k];
        }
        sum += rep[d] * acc;
    }
    return sum;
}

} // namespace fputlab
