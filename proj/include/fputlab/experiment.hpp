#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

#include "fputlab/chain.hpp"
#include "fputlab/gibbs.hpp"
#include "fputlab/integrate.hpp"
#include "fputlab/spectral.hpp"
#include "fputlab/stats.hpp"

namespace fputlab {

/// Shared configuration for all ensemble experiments. Fields that a given
/// experiment does not use are ignored by it.
struct ExperimentConfig {
    Model model = Model::FPUT; // flow and sampling model
    int n = 256;
    double chi = 1.0;
    std::vector<double> beta_grid{32.0, 64.0, 128.0, 256.0};
    std::vector<int> n_grid; // empty: just n
    std::vector<int> m_list{3};
    std::vector<double> t_grid{50.0};
    int n_samples = 2000;
    SamplerConfig sampler;
    IntegratorConfig integrator;
    bool auto_dt = false; // use IntegratorConfig::scaled_dt(beta) per beta
    double delta1 = 1.0;
    // admissible observable for the packet experiment
    int packet_m = 4;
    std::vector<double> packet_y{1.0, 0.5, 0.25};
    Parity packet_parity = Parity::Even;
    double window_c = 1.0;
    int threads = 0; // 0: hardware concurrency

    std::vector<int> sizes() const { return n_grid.empty() ? std::vector<int>{n} : n_grid; }
    double dt_for(double beta) const { return auto_dt ? IntegratorConfig::scaled_dt(beta) : integrator.dt; }

    /// Throws ConfigError naming the offending key.
    void validate(std::string_view kind) const;
};

nlohmann::json to_json(const ExperimentConfig& cfg);

struct ReportCell {
    std::string quantity;
    int m = 0;
    double beta = 0.0;
    int n = 0;
    double t = 0.0;
    double chi = 0.0;
    Estimate var_drift;
    Estimate var0;
    Estimate p_exceed;
    double ratio = 0.0;
    bool in_window = true;
    int members = 0;
    int dropped = 0;
};

struct ReportFit {
    std::string quantity;
    std::string axis;
    nlohmann::json at; // values held fixed
    PowerFit fit;
};

struct ExperimentReport {
    std::string kind;
    nlohmann::json config;
    std::vector<ReportCell> cells;
    std::vector<ReportFit> fits;
    nlohmann::json summary = nlohmann::json::object();
    std::vector<std::string> warnings;
    int dropped = 0;
    double wall_seconds = 0.0; // kept out of to_json so reruns hash identically

    const ReportFit* find_fit(std::string_view quantity, std::string_view axis,
                              const nlohmann::json& at = nlohmann::json::object()) const;
    nlohmann::json to_json() const;
    void write_csv(std::ostream& out) const;
};

inline constexpr const char* kReportCsvHeader =
    "m,beta,n,t,chi,var_drift,var_drift_se,var0,var0_se,p_exceed,p_exceed_se";

/// True when t is inside beta / sqrt((chi - 1)^2 + c / beta).
bool inside_window(double t, double beta, double chi, double c = 1.0);

int resolve_threads(int requested);

/// Runs body(i) for i in [0, count) on `threads` workers. The first
/// exception by index is rethrown after all workers stop.
void parallel_for(int count, int threads, const std::function<void(int)>& body);

ExperimentReport run_drift(const ExperimentConfig& cfg);
ExperimentReport run_toda_constancy(const ExperimentConfig& cfg);
ExperimentReport run_variance_floor(const ExperimentConfig& cfg);
ExperimentReport run_bracket_variance(const ExperimentConfig& cfg);

struct MeasurePoint {
    int n = 0;
    Estimate constrained; // site-averaged <e^{-r}> on the hyperplane
    double product = 0.0; // same average under the tilted product law
    Estimate difference;  // constrained - product
};

struct MeasureApproximation {
    double beta = 0.0;
    Model model = Model::Toda;
    double chi = 1.0;
    std::vector<MeasurePoint> points;
    PowerFit fit; // |difference| against n
};

/// Long constrained chains (`chains` per size, `sweeps` each after burn-in)
/// compared with the tilted product expectation of e^{-r}.
MeasureApproximation run_measure_approximation(double beta, Model model, double chi, const std::vector<int>& n_grid,
                                               int sweeps, int chains, std::uint64_t seed, int threads = 0);

} // namespace fputlab
