#pragma once

#include <string>
#include <vector>

namespace fputlab {

struct CheckResult {
    std::string name;
    bool passed = false;
    std::string detail;
    double seconds = 0.0;
};

struct CheckOptions {
    bool quick = false;
    /// Test-only: perturb one density coefficient before the Motzkin check.
    bool inject_fault = false;
    unsigned long long seed = 12345;
};

/// Built-in verification battery: density vs trace, gradients, the Toda
/// bracket, Hartley involution, circulant diagonalization and theta moments.
std::vector<CheckResult> run_checks(const CheckOptions& options = {});

} // namespace fputlab
