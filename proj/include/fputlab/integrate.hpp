#pragma once

#include <string_view>
#include <vector>

#include "fputlab/chain.hpp"

namespace fputlab {

enum class Scheme { Leapfrog2, Yoshida4 };

std::string_view to_string(Scheme scheme);
Scheme parse_scheme(std::string_view name);

struct IntegratorConfig {
    double dt = 0.05;
    Scheme scheme = Scheme::Yoshida4;
    std::vector<double> t_checkpoints;

    /// Throws std::invalid_argument unless dt > 0 and the checkpoints are
    /// non-negative and strictly increasing.
    void validate() const;

    /// 0.02 / sqrt(beta).
    static double scaled_dt(double beta);
};

/// Steps between re-centering passes.
inline constexpr long kRecenterInterval = 10000;
/// Largest mean correction tolerated at a re-centering pass.
inline constexpr double kRecenterBudget = 1e-6;

/// Splitting integrator in canonical (q, p) with q rebuilt from r in the
/// gauge q_0 = 0. The force at the current positions is cached between
/// steps, so leapfrog costs one force pass per step and Yoshida three.
class Integrator {
public:
    Integrator(const ChainState& initial, const ChainParams& params, double dt, Scheme scheme);

    /// One step of size dt (negative dt runs backwards). Throws NonFinite
    /// if a coordinate stops being finite and ConstraintDrift if a
    /// re-centering pass needs a correction above kRecenterBudget.
    void step();
    void advance(long steps);

    /// Flips the sign of dt.
    void reverse() noexcept { dt_ = -dt_; }

    double time() const noexcept { return time_; }
    long steps_taken() const noexcept { return steps_; }
    double largest_recentering() const noexcept { return largest_correction_; }

    ChainState state() const;

private:
    void kick(double h);
    void drift(double h);
    void update_force();
    void recenter();
    void check_finite() const;

    ChainParams params_;
    double dt_;
    Scheme scheme_;
    int n_;
    std::vector<double> q_;
    std::vector<double> p_;
    std::vector<double> force_;
    std::vector<double> vprime_;
    double time_ = 0.0;
    long steps_ = 0;
    double largest_correction_ = 0.0;
};

/// One step from `state`.
ChainState step(const ChainState& state, const ChainParams& params, const IntegratorConfig& cfg);

struct Checkpoint {
    double t;
    ChainState state;
};

/// States at each checkpoint time. The number of steps between
/// consecutive checkpoints (starting from t = 0) is
/// round((t_{i+1} - t_i) / dt). Errors carry the failing time.
std::vector<Checkpoint> evolve(const ChainState& state, const ChainParams& params, const IntegratorConfig& cfg);

/// Integer step counts used by `evolve`, one per checkpoint.
std::vector<long> checkpoint_steps(const IntegratorConfig& cfg);

} // namespace fputlab
