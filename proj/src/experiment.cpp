#include "fputlab/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <exception>
#include <iomanip>
#include <mutex>
#include <ostream>
#include <thread>

#include "fputlab/errors.hpp"
#include "fputlab/toda_lax.hpp"

namespace fputlab {

using nlohmann::json;

namespace {

std::uint64_t member_index(std::size_t cell, int member) {
    return (static_cast<std::uint64_t>(cell) << 32) | static_cast<std::uint32_t>(member);
}

double seconds_since(std::chrono::steady_clock::time_point start) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

// Result of one ensemble pass: per-member value rows, empty for dropped members.
struct Ensemble {
    std::vector<std::vector<double>> rows;
    int dropped = 0;

    std::vector<double> column(std::size_t k) const {
        std::vector<double> out;
        out.reserve(rows.size());
        for (const auto& r : rows)
            if (!r.empty()) out.push_back(r[k]);
        return out;
    }
};

// `member(i)` returns the value row, or an empty row when the trajectory
// was dropped. Rows are stored by index so the reduction order is fixed.
Ensemble run_ensemble(int count, int threads, const std::function<std::vector<double>(int)>& member) {
    Ensemble e;
    e.rows.resize(count);
    parallel_for(count, threads, [&](int i) { e.rows[i] = member(i); });
    for (const auto& r : e.rows)
        if (r.empty()) ++e.dropped;
    if (count - e.dropped < 3) throw Error("fewer than three ensemble members survived");
    return e;
}

void note_drops(ExperimentReport& rep, const std::string& where, int dropped, int total) {
    rep.dropped += dropped;
    if (dropped * 100 > total) {
        rep.warnings.push_back(where + ": " + std::to_string(dropped) + " of " + std::to_string(total) +
                               " members dropped after non-finite trajectories");
    }
}

Estimate exceedance(const std::vector<double>& delta, double threshold) {
    int count = 0;
    for (double d : delta)
        if (std::abs(d) > threshold) ++count;
    const int m = static_cast<int>(delta.size());
    const double p = static_cast<double>(count) / m;
    return {p, binomial_stderr(p, m)};
}

ReportCell drift_cell(std::string quantity, int m, double beta, int n, double t, const ExperimentConfig& cfg,
                      const std::vector<double>& delta, const std::vector<double>& base, int dropped) {
    ReportCell c;
    c.quantity = std::move(quantity);
    c.m = m;
    c.beta = beta;
    c.n = n;
    c.t = t;
    c.chi = cfg.chi;
    c.var_drift = variance_jackknife(delta);
    c.var0 = variance_jackknife(base);
    c.p_exceed = exceedance(delta, cfg.delta1 * std::sqrt(c.var0.value));
    c.ratio = c.var_drift.value / c.var0.value;
    c.in_window = cfg.model != Model::FPUT || inside_window(t, beta, cfg.chi, cfg.window_c);
    c.members = static_cast<int>(delta.size());
    c.dropped = dropped;
    return c;
}

// Power-law fit over the selected cells; skipped with a warning when the
// data cannot be fitted (too few points or non-positive values).
void add_fit(ExperimentReport& rep, const std::string& quantity, const std::string& axis, json at,
             const std::vector<double>& xs, const std::vector<Estimate>& ys) {
    if (xs.size() < 3) return;
    std::vector<double> values;
    for (const auto& y : ys) values.push_back(y.value);
    try {
        rep.fits.push_back({quantity, axis, std::move(at), fit_power_law(xs, values, relative_error_weights(ys))});
    } catch (const std::exception& e) {
        rep.warnings.push_back("fit " + quantity + " vs " + axis + " skipped: " + e.what());
    }
}

ChainState draw(const ThetaMeasure& tm, int n, const ExperimentConfig& cfg, std::size_t cell, int i) {
    return sample_member(tm, n, cfg.sampler, member_index(cell, i));
}

std::vector<long> steps_for(const ExperimentConfig& cfg, double dt) {
    IntegratorConfig ic = cfg.integrator;
    ic.dt = dt;
    ic.t_checkpoints = cfg.t_grid;
    return checkpoint_steps(ic);
}

ExperimentReport start_report(std::string kind, const ExperimentConfig& cfg) {
    ExperimentReport rep;
    rep.kind = std::move(kind);
    rep.config = to_json(cfg);
    return rep;
}

} // namespace

bool inside_window(double t, double beta, double chi, double c) {
    return t <= beta / std::sqrt((chi - 1.0) * (chi - 1.0) + c / beta);
}

int resolve_threads(int requested) {
    if (requested > 0) return requested;
    const unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : static_cast<int>(hw);
}

void parallel_for(int count, int threads, const std::function<void(int)>& body) {
    threads = std::max(1, std::min(resolve_threads(threads), count));
    std::atomic<int> next{0};
    std::mutex mutex;
    int failed_index = count;
    std::exception_ptr failure;
    auto worker = [&] {
        for (;;) {
            const int i = next.fetch_add(1);
            if (i >= count) return;
            try {
                body(i);
            } catch (...) {
                std::lock_guard lock(mutex);
                if (i < failed_index) {
                    failed_index = i;
                    failure = std::current_exception();
                }
                next.store(count);
            }
        }
    };
    if (threads == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
        for (auto& th : pool) th.join();
    }
    if (failure) std::rethrow_exception(failure);
}

void ExperimentConfig::validate(std::string_view kind) const {
    const bool flows = kind == "drift" || kind == "packet";
    if (n < 4) throw ConfigError("n", "n must be at least 4");
    for (int s : sizes())
        if (s < 4) throw ConfigError("n_grid", "every chain size must be at least 4");
    if (model == Model::FPUT && !(chi > 0.0)) throw ConfigError("chi", "FPUT needs chi > 0");
    if (beta_grid.empty()) throw ConfigError("beta_grid", "beta_grid must not be empty");
    for (double b : beta_grid)
        if (!(b > 0.0) || !std::isfinite(b)) throw ConfigError("beta_grid", "every beta must be positive");
    if (n_samples < 100) throw ConfigError("n_samples", "n_samples must be at least 100");
    try {
        sampler.validate();
    } catch (const std::invalid_argument& e) {
        throw ConfigError("sampler", e.what());
    }
    if (kind != "packet") {
        if (m_list.empty()) throw ConfigError("m_list", "m_list must not be empty");
        for (int m : m_list) {
            if (m < 1 || m > 12) throw ConfigError("m_list", "integral orders must lie in 1..12");
            for (int s : sizes())
                if (s <= 2 * m) throw ConfigError("m_list", "chain size must exceed twice every integral order");
        }
    }
    if (flows) {
        if (t_grid.empty()) throw ConfigError("t_grid", "t_grid must not be empty");
        for (std::size_t i = 0; i < t_grid.size(); ++i)
            if (!(t_grid[i] > 0.0) || (i > 0 && !(t_grid[i] > t_grid[i - 1])))
                throw ConfigError("t_grid", "t_grid must be positive and strictly increasing");
        if (!auto_dt && !(integrator.dt > 0.0)) throw ConfigError("dt", "dt must be positive");
        if (!(delta1 > 0.0)) throw ConfigError("delta1", "delta1 must be positive");
    }
    if (kind == "packet") {
        try {
            AdmissibleVector::embed(packet_m, packet_y, n, packet_parity);
        } catch (const std::invalid_argument& e) {
            throw ConfigError("packet_y", e.what());
        }
    }
}

json to_json(const ExperimentConfig& cfg) {
    json j;
    j["model"] = std::string(to_string(cfg.model));
    j["n"] = cfg.n;
    j["chi"] = cfg.chi;
    j["beta_grid"] = cfg.beta_grid;
    j["n_grid"] = cfg.n_grid;
    j["m_list"] = cfg.m_list;
    j["t_grid"] = cfg.t_grid;
    j["n_samples"] = cfg.n_samples;
    j["delta1"] = cfg.delta1;
    j["window_c"] = cfg.window_c;
    j["sampler"] = {{"method", std::string(to_string(cfg.sampler.method))},
                    {"n_burn", cfg.sampler.n_burn},
                    {"thin", cfg.sampler.thin},
                    {"seed", cfg.sampler.seed}};
    j["integrator"] = {{"scheme", std::string(to_string(cfg.integrator.scheme))}};
    if (cfg.auto_dt)
        j["integrator"]["dt"] = "auto";
    else
        j["integrator"]["dt"] = cfg.integrator.dt;
    j["packet"] = {{"m", cfg.packet_m},
                   {"y", cfg.packet_y},
                   {"parity", cfg.packet_parity == Parity::Even ? "even" : "staggered"}};
    return j;
}

const ReportFit* ExperimentReport::find_fit(std::string_view quantity, std::string_view axis, const json& at) const {
    for (const auto& f : fits) {
        if (f.quantity != quantity || f.axis != axis) continue;
        bool match = true;
        for (auto it = at.begin(); it != at.end(); ++it)
            if (!f.at.contains(it.key()) || f.at[it.key()] != it.value()) match = false;
        if (match) return &f;
    }
    return nullptr;
}

json ExperimentReport::to_json() const {
    json j;
    j["kind"] = kind;
    j["config"] = config;
    j["cells"] = json::array();
    for (const auto& c : cells) {
        j["cells"].push_back({{"quantity", c.quantity},
                              {"m", c.m},
                              {"beta", c.beta},
                              {"n", c.n},
                              {"t", c.t},
                              {"chi", c.chi},
                              {"var_drift", c.var_drift.value},
                              {"stderr", c.var_drift.se},
                              {"var0", c.var0.value},
                              {"var0_se", c.var0.se},
                              {"ratio", c.ratio},
                              {"p_exceed", c.p_exceed.value},
                              {"p_exceed_se", c.p_exceed.se},
                              {"in_window", c.in_window},
                              {"members", c.members},
                              {"dropped", c.dropped}});
    }
    j["fits"] = json::array();
    for (const auto& f : fits) {
        j["fits"].push_back({{"quantity", f.quantity},
                             {"axis", f.axis},
                             {"at", f.at},
                             {"slope", f.fit.slope},
                             {"stderr", f.fit.slope_stderr},
                             {"intercept", f.fit.intercept},
                             {"r2", f.fit.r_squared},
                             {"points", f.fit.points}});
    }
    j["summary"] = summary;
    j["dropped"] = dropped;
    j["warnings"] = warnings;
    return j;
}

void ExperimentReport::write_csv(std::ostream& out) const {
    out << kReportCsvHeader << '\n';
    out << std::setprecision(17);
    for (const auto& c : cells) {
        out << c.m << ',' << c.beta << ',' << c.n << ',' << c.t << ',' << c.chi << ',' << c.var_drift.value << ','
            << c.var_drift.se << ',' << c.var0.value << ',' << c.var0.se << ',' << c.p_exceed.value << ','
            << c.p_exceed.se << '\n';
    }
}

ExperimentReport run_drift(const ExperimentConfig& cfg) {
    cfg.validate("drift");
    const auto start = std::chrono::steady_clock::now();
    ExperimentReport rep = start_report("drift", cfg);
    const int threads = resolve_threads(cfg.threads);
    const std::size_t nm = cfg.m_list.size();
    const std::size_t nt = cfg.t_grid.size();

    for (std::size_t bi = 0; bi < cfg.beta_grid.size(); ++bi) {
        const double beta = cfg.beta_grid[bi];
        const ThetaMeasure tm = solve_theta(beta, cfg.model, cfg.chi);
        const ChainParams params{cfg.n, beta, cfg.chi, cfg.model};
        const double dt = cfg.dt_for(beta);
        const std::vector<long> steps = steps_for(cfg, dt);

        const Ensemble ens = run_ensemble(cfg.n_samples, threads, [&](int i) -> std::vector<double> {
            const ChainState s = draw(tm, cfg.n, cfg, bi, i);
            std::vector<double> row(nm * (nt + 1));
            try {
                for (std::size_t k = 0; k < nm; ++k) row[k] = toda_integral(s, cfg.m_list[k]);
                Integrator integ(s, params, dt, cfg.integrator.scheme);
                for (std::size_t ti = 0; ti < nt; ++ti) {
                    integ.advance(steps[ti]);
                    const ChainState st = integ.state();
                    for (std::size_t k = 0; k < nm; ++k)
                        row[nm * (ti + 1) + k] = toda_integral(st, cfg.m_list[k]) - row[k];
                }
            } catch (const NonFinite&) {
                return {};
            } catch (const ConstraintDrift&) {
                return {};
            }
            return row;
        });
        note_drops(rep, "beta=" + std::to_string(beta), ens.dropped, cfg.n_samples);

        for (std::size_t k = 0; k < nm; ++k) {
            const std::vector<double> base = ens.column(k);
            for (std::size_t ti = 0; ti < nt; ++ti)
                rep.cells.push_back(drift_cell("J" + std::to_string(cfg.m_list[k]), cfg.m_list[k], beta, cfg.n,
                                               cfg.t_grid[ti], cfg, ens.column(nm * (ti + 1) + k), base, ens.dropped));
        }
    }

    for (int m : cfg.m_list) {
        const std::string q = "var_drift_J" + std::to_string(m);
        for (double t : cfg.t_grid) {
            std::vector<double> xs;
            std::vector<Estimate> ys;
            for (const auto& c : rep.cells)
                if (c.m == m && c.t == t) {
                    xs.push_back(c.beta);
                    ys.push_back(c.var_drift);
                }
            add_fit(rep, q, "beta", {{"m", m}, {"t", t}}, xs, ys);
        }
        for (double beta : cfg.beta_grid) {
            std::vector<double> xs;
            std::vector<Estimate> ys;
            for (const auto& c : rep.cells)
                if (c.m == m && c.beta == beta) {
                    xs.push_back(c.t);
                    ys.push_back(c.var_drift);
                }
            add_fit(rep, q, "t", {{"m", m}, {"beta", beta}}, xs, ys);
        }
    }
    rep.wall_seconds = seconds_since(start);
    return rep;
}

ExperimentReport run_toda_constancy(const ExperimentConfig& cfg) {
    cfg.validate("packet");
    const auto start = std::chrono::steady_clock::now();
    ExperimentReport rep = start_report("packet", cfg);
    const int threads = resolve_threads(cfg.threads);
    const std::size_t nt = cfg.t_grid.size();
    const AdmissibleVector g = AdmissibleVector::embed(cfg.packet_m, cfg.packet_y, cfg.n, cfg.packet_parity);

    std::vector<double> max_ratio_beta;
    std::vector<Estimate> max_ratio;
    json per_beta = json::array();
    for (std::size_t bi = 0; bi < cfg.beta_grid.size(); ++bi) {
        const double beta = cfg.beta_grid[bi];
        const ThetaMeasure tm = solve_theta(beta, cfg.model, cfg.chi);
        const ChainParams params{cfg.n, beta, cfg.chi, cfg.model};
        const double dt = cfg.dt_for(beta);
        const std::vector<long> steps = steps_for(cfg, dt);

        const Ensemble ens = run_ensemble(cfg.n_samples, threads, [&](int i) -> std::vector<double> {
            const ChainState s = draw(tm, cfg.n, cfg, bi, i);
            std::vector<double> row(nt + 1);
            try {
                row[0] = phi_observable(s, g);
                Integrator integ(s, params, dt, cfg.integrator.scheme);
                for (std::size_t ti = 0; ti < nt; ++ti) {
                    integ.advance(steps[ti]);
                    row[ti + 1] = phi_observable(integ.state(), g) - row[0];
                }
            } catch (const NonFinite&) {
                return {};
            } catch (const ConstraintDrift&) {
                return {};
            }
            return row;
        });
        note_drops(rep, "beta=" + std::to_string(beta), ens.dropped, cfg.n_samples);

        const std::vector<double> base = ens.column(0);
        const std::size_t first = rep.cells.size();
        for (std::size_t ti = 0; ti < nt; ++ti)
            rep.cells.push_back(
                drift_cell("phi", cfg.packet_m, beta, cfg.n, cfg.t_grid[ti], cfg, ens.column(ti + 1), base, ens.dropped));

        // largest ratio over t, with a first-order error from both variances
        std::size_t best = first;
        for (std::size_t c = first; c < rep.cells.size(); ++c)
            if (rep.cells[c].ratio > rep.cells[best].ratio) best = c;
        const ReportCell& top = rep.cells[best];
        const double rel = std::hypot(top.var_drift.se / top.var_drift.value, top.var0.se / top.var0.value);
        max_ratio_beta.push_back(beta);
        max_ratio.push_back({top.ratio, top.ratio * rel});

        // linear trend of the drift variance in t^2
        double sw = 0.0, sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
        for (std::size_t c = first; c < rep.cells.size(); ++c) {
            const double x = rep.cells[c].t * rep.cells[c].t;
            const double w = 1.0 / std::max(rep.cells[c].var_drift.se * rep.cells[c].var_drift.se, 1e-300);
            sw += w;
            sx += w * x;
            sy += w * rep.cells[c].var_drift.value;
            sxx += w * x * x;
            sxy += w * x * rep.cells[c].var_drift.value;
        }
        json entry = {{"beta", beta}, {"max_ratio", top.ratio}, {"max_ratio_se", top.ratio * rel}, {"t_at_max", top.t}};
        const double det = sw * sxx - sx * sx;
        if (nt >= 2 && det > 0.0) {
            const double slope = (sw * sxy - sx * sy) / det;
            const double tmax = cfg.t_grid.back();
            entry["t2_slope"] = slope;
            entry["t2_slope_se"] = std::sqrt(sw / det);
            entry["t2_growth_at_tmax"] = slope * tmax * tmax;
            entry["t2_growth_at_tmax_se"] = std::sqrt(sw / det) * tmax * tmax;
        }
        per_beta.push_back(entry);
    }
    rep.summary["per_beta"] = per_beta;

    add_fit(rep, "max_ratio_phi", "beta", json::object(), max_ratio_beta, max_ratio);
    for (double beta : cfg.beta_grid) {
        std::vector<double> xs;
        std::vector<Estimate> ys;
        for (const auto& c : rep.cells)
            if (c.beta == beta) {
                xs.push_back(c.t);
                ys.push_back(c.var_drift);
            }
        add_fit(rep, "var_drift_phi", "t", {{"beta", beta}}, xs, ys);
    }
    rep.wall_seconds = seconds_since(start);
    return rep;
}

ExperimentReport run_variance_floor(const ExperimentConfig& cfg) {
    cfg.validate("floor");
    const auto start = std::chrono::steady_clock::now();
    ExperimentReport rep = start_report("floor", cfg);
    const int threads = resolve_threads(cfg.threads);
    const std::vector<int> sizes = cfg.sizes();
    const std::size_t nm = cfg.m_list.size();

    for (std::size_t ni = 0; ni < sizes.size(); ++ni) {
        const int n = sizes[ni];
        std::vector<QuadraticPart> quad;
        std::vector<double> constant;
        for (int m : cfg.m_list) {
            quad.push_back(quadratic_part(m, n));
            constant.push_back(constant_part(m, n));
        }
        for (std::size_t bi = 0; bi < cfg.beta_grid.size(); ++bi) {
            const double beta = cfg.beta_grid[bi];
            const ThetaMeasure tm = solve_theta(beta, cfg.model, cfg.chi);
            const std::size_t cell = ni * cfg.beta_grid.size() + bi;
            const Ensemble ens = run_ensemble(cfg.n_samples, threads, [&](int i) {
                const ChainState s = draw(tm, n, cfg, cell, i);
                std::vector<double> row(2 * nm);
                for (std::size_t k = 0; k < nm; ++k) {
                    row[k] = toda_integral(s, cfg.m_list[k]);
                    row[nm + k] = row[k] - constant[k] - quad[k].evaluate(s);
                }
                return row;
            });
            for (std::size_t k = 0; k < nm; ++k) {
                ReportCell c;
                c.quantity = "J" + std::to_string(cfg.m_list[k]);
                c.m = cfg.m_list[k];
                c.beta = beta;
                c.n = n;
                c.chi = cfg.chi;
                c.var0 = variance_jackknife(ens.column(k));
                c.var_drift = variance_jackknife(ens.column(nm + k));
                c.ratio = c.var_drift.value / c.var0.value;
                c.members = cfg.n_samples;
                rep.cells.push_back(c);
            }
        }
    }

    for (int m : cfg.m_list) {
        const std::string suffix = "_J" + std::to_string(m);
        for (int n : sizes) {
            std::vector<double> xs;
            std::vector<Estimate> full, tail;
            for (const auto& c : rep.cells)
                if (c.m == m && c.n == n) {
                    xs.push_back(c.beta);
                    full.push_back(c.var0);
                    tail.push_back(c.var_drift);
                }
            add_fit(rep, "var" + suffix, "beta", {{"m", m}, {"n", n}}, xs, full);
            add_fit(rep, "var_tail" + suffix, "beta", {{"m", m}, {"n", n}}, xs, tail);
        }
        for (double beta : cfg.beta_grid) {
            std::vector<double> xs;
            std::vector<Estimate> full, tail;
            for (const auto& c : rep.cells)
                if (c.m == m && c.beta == beta) {
                    xs.push_back(c.n);
                    full.push_back(c.var0);
                    tail.push_back(c.var_drift);
                }
            add_fit(rep, "var" + suffix, "n", {{"m", m}, {"beta", beta}}, xs, full);
            add_fit(rep, "var_tail" + suffix, "n", {{"m", m}, {"beta", beta}}, xs, tail);
        }
    }
    rep.wall_seconds = seconds_since(start);
    return rep;
}

ExperimentReport run_bracket_variance(const ExperimentConfig& cfg) {
    cfg.validate("bracket");
    const auto start = std::chrono::steady_clock::now();
    ExperimentReport rep = start_report("bracket", cfg);
    const int threads = resolve_threads(cfg.threads);
    const std::vector<int> sizes = cfg.sizes();
    const std::size_t nm = cfg.m_list.size();
    std::vector<double> worst_toda(nm, 0.0), worst_identity(nm, 0.0);

    for (std::size_t ni = 0; ni < sizes.size(); ++ni) {
        const int n = sizes[ni];
        for (std::size_t bi = 0; bi < cfg.beta_grid.size(); ++bi) {
            const double beta = cfg.beta_grid[bi];
            const ThetaMeasure tm = solve_theta(beta, cfg.model, cfg.chi);
            const ChainParams fput{n, beta, cfg.chi, Model::FPUT};
            const ChainParams toda{n, beta, 1.0, Model::Toda};
            const std::size_t cell = ni * cfg.beta_grid.size() + bi;
            // row: J, {J,H_F}^2, relative {J,H_T}, relative identity mismatch
            const Ensemble ens = run_ensemble(cfg.n_samples, threads, [&](int i) {
                const ChainState s = draw(tm, n, cfg, cell, i);
                const Gradient hf = hamiltonian_gradient(s, fput);
                const Gradient ht = hamiltonian_gradient(s, toda);
                const Gradient pert = perturbation_gradient(s, cfg.chi);
                std::vector<double> row(4 * nm);
                for (std::size_t k = 0; k < nm; ++k) {
                    const Gradient gj = gradient_J(s, cfg.m_list[k]);
                    const double bf = poisson_bracket(gj, hf);
                    row[k] = toda_integral(s, cfg.m_list[k]);
                    row[nm + k] = bf * bf;
                    row[2 * nm + k] = std::abs(poisson_bracket(gj, ht)) / poisson_bracket_scale(gj, ht);
                    row[3 * nm + k] = std::abs(bf - poisson_bracket(gj, pert)) /
                                      std::max(std::abs(bf), poisson_bracket_scale(gj, hf));
                }
                return row;
            });
            for (std::size_t k = 0; k < nm; ++k) {
                for (double v : ens.column(2 * nm + k)) worst_toda[k] = std::max(worst_toda[k], v);
                for (double v : ens.column(3 * nm + k)) worst_identity[k] = std::max(worst_identity[k], v);
                ReportCell c;
                c.quantity = "bracket_J" + std::to_string(cfg.m_list[k]);
                c.m = cfg.m_list[k];
                c.beta = beta;
                c.n = n;
                c.chi = cfg.chi;
                c.var_drift = mean_estimate(ens.column(nm + k));
                c.var0 = variance_jackknife(ens.column(k));
                c.ratio = c.var_drift.value / c.var0.value;
                c.members = cfg.n_samples;
                rep.cells.push_back(c);
            }
        }
    }
    json checks = json::array();
    for (std::size_t k = 0; k < nm; ++k)
        checks.push_back({{"m", cfg.m_list[k]},
                          {"max_relative_toda_bracket", worst_toda[k]},
                          {"max_relative_identity_mismatch", worst_identity[k]}});
    rep.summary["checks"] = checks;

    for (int m : cfg.m_list) {
        const std::string q = "bracket2_J" + std::to_string(m);
        for (int n : sizes) {
            std::vector<double> xs;
            std::vector<Estimate> ys;
            for (const auto& c : rep.cells)
                if (c.m == m && c.n == n) {
                    xs.push_back(c.beta);
                    ys.push_back(c.var_drift);
                }
            add_fit(rep, q, "beta", {{"m", m}, {"n", n}}, xs, ys);
        }
        for (double beta : cfg.beta_grid) {
            std::vector<double> xs;
            std::vector<Estimate> ys;
            for (const auto& c : rep.cells)
                if (c.m == m && c.beta == beta) {
                    xs.push_back(c.n);
                    ys.push_back(c.var_drift);
                }
            add_fit(rep, q, "n", {{"m", m}, {"beta", beta}}, xs, ys);
        }
    }
    rep.wall_seconds = seconds_since(start);
    return rep;
}

MeasureApproximation run_measure_approximation(double beta, Model model, double chi, const std::vector<int>& n_grid,
                                               int sweeps, int chains, std::uint64_t seed, int threads) {
    if (n_grid.size() < 3) throw std::invalid_argument("measure approximation needs at least three sizes");
    if (sweeps < 200 || chains < 1) throw std::invalid_argument("need chains >= 1 and sweeps >= 200");
    constexpr int kBatches = 20;
    constexpr int kBurn = 500;
    MeasureApproximation out;
    out.beta = beta;
    out.model = model;
    out.chi = chi;
    const ThetaMeasure tm = solve_theta(beta, model, chi);
    const double product = expectation(tm, [](double r) { return std::exp(-r); });

    for (std::size_t ni = 0; ni < n_grid.size(); ++ni) {
        const int n = n_grid[ni];
        if (n < 3) throw std::invalid_argument("chain size must be at least 3");
        std::vector<std::vector<double>> batch(chains);
        parallel_for(chains, threads, [&](int c) {
            Rng rng = member_stream(seed, member_index(ni, c));
            ConstrainedChain chain(tm, std::vector<double>(n, 0.0));
            for (int s = 0; s < kBurn; ++s) chain.sweep(rng);
            std::vector<double> series(sweeps);
            for (int s = 0; s < sweeps; ++s) {
                chain.sweep(rng);
                double acc = 0.0;
                for (double r : chain.r()) acc += std::exp(-r);
                series[s] = acc / n;
            }
            const std::size_t len = series.size() / kBatches;
            for (int b = 0; b < kBatches; ++b) {
                double acc = 0.0;
                for (std::size_t k = 0; k < len; ++k) acc += series[b * len + k];
                batch[c].push_back(acc / static_cast<double>(len));
            }
        });
        std::vector<double> all;
        for (const auto& b : batch) all.insert(all.end(), b.begin(), b.end());
        MeasurePoint p;
        p.n = n;
        p.constrained = mean_estimate(all);
        p.product = product;
        p.difference = {p.constrained.value - product, p.constrained.se};
        out.points.push_back(p);
    }
    std::vector<double> xs, ys, ws;
    for (const auto& p : out.points) {
        xs.push_back(p.n);
        ys.push_back(std::abs(p.difference.value));
        const double rel = p.difference.se / std::abs(p.difference.value);
        ws.push_back(1.0 / (rel * rel));
    }
    out.fit = fit_power_law(xs, ys, ws);
    return out;
}

} // namespace fputlab
