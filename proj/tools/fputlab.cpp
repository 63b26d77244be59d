// fputlab command-line driver.
#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <set>
#include <sstream>

#include <openssl/evp.h>

#include "CLI11.hpp"
#include "json.hpp"

#include "fputlab/check.hpp"
#include "fputlab/config.hpp"
#include "fputlab/errors.hpp"
#include "fputlab/experiment.hpp"
#include "fputlab/gibbs.hpp"
#include "fputlab/toda_lax.hpp"

#ifndef FPUTLAB_VERSION
#define FPUTLAB_VERSION "dev"
#endif

namespace fs = std::filesystem;
using nlohmann::json;
using namespace fputlab;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitFailure = 1;
constexpr int kExitUsage = 2;

struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

std::string sha256_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot read " + path.string());
    EVP_MD_CTX* ctx = EVP_MD_CTX_new();
    EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr);
    char buf[1 << 15];
    while (in) {
        in.read(buf, sizeof buf);
        EVP_DigestUpdate(ctx, buf, static_cast<std::size_t>(in.gcount()));
    }
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    EVP_DigestFinal_ex(ctx, digest, &len);
    EVP_MD_CTX_free(ctx);
    std::ostringstream hex;
    for (unsigned int i = 0; i < len; ++i) hex << std::hex << std::setw(2) << std::setfill('0') << int(digest[i]);
    return hex.str();
}

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    out << text;
    if (!out) throw std::runtime_error("cannot write " + path.string());
}

// gnuplot script: one series per (m, t) or (m, n), log-log against beta,
// with slope -4 and -5 guides anchored at the first plotted point.
std::string plot_script(const ExperimentReport& rep) {
    const bool timed = rep.kind == "drift" || rep.kind == "packet";
    const bool floor = rep.kind == "floor";
    const int column = floor ? 8 : 6; // var0 for the floor, var_drift otherwise
    std::ostringstream gp;
    gp << std::setprecision(17);
    gp << "# plots report.csv; run with: gnuplot plot.gp\n";
    gp << "set datafile separator ','\n";
    gp << "set terminal pngcairo size 900,600\n";
    gp << "set output 'report.png'\n";
    gp << "set logscale xy\n";
    gp << "set key outside right\n";
    gp << "set xlabel 'beta'\n";
    gp << "set ylabel '" << (floor ? "var0" : "var_drift") << "'\n";
    gp << "set title '" << rep.kind << "'\n";
    if (rep.cells.empty()) {
        gp << "print 'no data'\n";
        return gp.str();
    }
    const ReportCell& first = rep.cells.front();
    const double y0 = floor ? first.var0.value : first.var_drift.value;
    gp << "X0 = " << first.beta << "\nY0 = " << y0 << "\n";
    gp << "ref4(x) = Y0 * (x / X0)**-4\nref5(x) = Y0 * (x / X0)**-5\n";

    std::set<std::pair<int, double>> series;
    for (const auto& c : rep.cells) series.insert({c.m, timed ? c.t : static_cast<double>(c.n)});
    gp << "plot \\\n";
    for (const auto& [m, v] : series) {
        gp << "  'report.csv' skip 1 using 2:(($1==" << m << " && $" << (timed ? 4 : 3) << "==" << v << ") ? $"
           << column << " : 1/0):" << column + 1 << " with yerrorlines title 'm=" << m << (timed ? " t=" : " n=") << v
           << "', \\\n";
    }
    gp << "  ref4(x) dashtype 2 title 'slope -4', \\\n";
    gp << "  ref5(x) dashtype 3 title 'slope -5'\n";
    return gp.str();
}

fs::path prepare_output(const std::string& configured) {
    const char* env = std::getenv("FPUTLAB_OUT");
    const fs::path dir = (env && *env) ? fs::path(env) : fs::path(configured);
    std::error_code ec;
    fs::create_directories(dir, ec);
    const fs::path probe = dir / ".fputlab-write-test";
    std::ofstream out(probe);
    if (!out) throw UsageError("output directory '" + dir.string() + "' is not writable");
    out.close();
    fs::remove(probe, ec);
    return dir;
}

int run_experiment(const std::string& kind, const std::string& config_path, int threads) {
    const ConfigFile file = ConfigFile::load(config_path);
    RunConfig run = experiment_from_config(file, kind);
    run.experiment.threads = threads;
    const fs::path dir = prepare_output(run.output_dir);

    ExperimentReport rep;
    if (kind == "drift")
        rep = run_drift(run.experiment);
    else if (kind == "packet")
        rep = run_toda_constancy(run.experiment);
    else if (kind == "floor")
        rep = run_variance_floor(run.experiment);
    else
        rep = run_bracket_variance(run.experiment);

    write_text(dir / "report.json", rep.to_json().dump(2) + "\n");
    std::ostringstream csv;
    rep.write_csv(csv);
    write_text(dir / "report.csv", csv.str());
    write_text(dir / "plot.gp", plot_script(rep));

    json manifest;
    manifest["command"] = kind;
    manifest["version"] = FPUTLAB_VERSION;
    manifest["config_path"] = config_path;
    manifest["config"] = run.echo;
    manifest["seed"] = run.experiment.sampler.seed;
    manifest["output_dir"] = dir.string();
    manifest["threads"] = resolve_threads(threads);
    manifest["wall_seconds"] = rep.wall_seconds;
    manifest["files"] = json::object();
    for (const char* name : {"report.json", "report.csv", "plot.gp"})
        manifest["files"][name] = {{"sha256", sha256_file(dir / name)}, {"bytes", fs::file_size(dir / name)}};
    write_text(dir / "manifest.json", manifest.dump(2) + "\n");

    for (const auto& f : rep.fits) {
        std::cout << "fit " << f.quantity << " vs " << f.axis << " " << f.at.dump() << ": slope " << f.fit.slope
                  << " +/- " << f.fit.slope_stderr << " (R2 " << f.fit.r_squared << ")\n";
    }
    for (const auto& w : rep.warnings) std::cerr << "warning: " << w << "\n";
    std::cout << "wrote " << (dir / "report.json").string() << " in " << rep.wall_seconds << " s\n";
    return kExitOk;
}

int run_check(bool quick, bool inject_fault) {
    CheckOptions options;
    options.quick = quick;
    options.inject_fault = inject_fault;
    bool all = true;
    for (const auto& r : run_checks(options)) {
        all = all && r.passed;
        std::cout << (r.passed ? "PASS  " : "FAIL  ") << std::left << std::setw(28) << r.name << r.detail << "  ["
                  << std::fixed << std::setprecision(2) << r.seconds << " s]\n";
        std::cout.unsetf(std::ios::floatfield);
    }
    return all ? kExitOk : kExitFailure;
}

json density_json(int m) {
    const IntegralDensity d = build_density(m);
    json terms = json::array();
    for (const auto& t : d.terms) terms.push_back({{"sign", t.sign}, {"rho", t.rho}, {"n", t.n_exp}, {"k", t.k_exp}});
    return {{"m", m}, {"terms", terms}};
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"fputlab: FPUT and Toda chain integrals, Gibbs sampling and drift experiments"};
    app.require_subcommand(1);
    app.set_version_flag("--version", FPUTLAB_VERSION);

    std::string model_name = "toda";
    double beta = 0.0, chi = 1.0;
    auto* theta = app.add_subcommand("theta", "solve the tilt theta(beta) of the product measure");
    theta->add_option("--model", model_name, "fput, toda or harmonic")->required();
    theta->add_option("--beta", beta, "inverse temperature")->required();
    theta->add_option("--chi", chi, "quartic coefficient (fput)");

    int order = 0;
    auto* integrals = app.add_subcommand("integrals", "closed-form Toda integral densities");
    integrals->require_subcommand(1);
    auto* dump = integrals->add_subcommand("dump", "print the density term list as JSON");
    dump->add_option("--m", order, "integral order")->required()->check(CLI::Range(1, 12));

    int n = 0, count = 1;
    unsigned long long seed = 1;
    std::string method = "constrained_mcmc", out_path;
    auto* sample = app.add_subcommand("sample", "write a Gibbs ensemble snapshot as CSV");
    sample->add_option("--model", model_name)->required();
    sample->add_option("--beta", beta)->required();
    sample->add_option("--chi", chi);
    sample->add_option("--n", n, "chain size")->required();
    sample->add_option("--count", count, "ensemble members")->check(CLI::PositiveNumber);
    sample->add_option("--seed", seed)->required();
    sample->add_option("--method", method, "constrained_mcmc or product_theta");
    sample->add_option("--out", out_path, "CSV path (default stdout)");

    std::string config_path;
    int threads = 0;
    std::map<std::string, CLI::App*> experiments;
    for (const auto& [name, help] : std::vector<std::pair<std::string, std::string>>{
             {"drift", "variance of integral drift under the FPUT flow"},
             {"packet", "mode-packet constancy under the Toda flow"},
             {"floor", "variance floor and tail of the integrals at t = 0"},
             {"bracket", "mean square bracket of the integrals with H_F"}}) {
        auto* sub = app.add_subcommand(name, help);
        sub->add_option("config", config_path, "config file")->required();
        sub->add_option("--threads", threads, "worker threads (default: all cores)")->check(CLI::NonNegativeNumber);
        experiments[name] = sub;
    }

    bool quick = false, inject_fault = false;
    auto* check = app.add_subcommand("check", "run the built-in verification battery");
    check->add_flag("--quick", quick, "reduced sizes");
    check->add_flag("--inject-fault", inject_fault, "test only: corrupt one density coefficient")->group("");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitUsage;
    }

    try {
        if (*theta) {
            if (!(beta > 0.0)) throw UsageError("--beta must be positive");
            const ThetaMeasure tm = solve_theta(beta, parse_model(model_name), chi);
            json j = {{"model", model_name}, {"beta", beta},        {"chi", chi},
                      {"theta", tm.theta},   {"z", tm.z},           {"log_z", tm.log_z},
                      {"residual", tm.r_mean_residual}};
            std::cout << j.dump() << "\n";
            return kExitOk;
        }
        if (*dump) {
            std::cout << density_json(order).dump() << "\n";
            return kExitOk;
        }
        if (*sample) {
            if (!(beta > 0.0)) throw UsageError("--beta must be positive");
            const ThetaMeasure tm = solve_theta(beta, parse_model(model_name), chi);
            SamplerConfig cfg;
            cfg.method = parse_sampler(method);
            cfg.seed = seed;
            std::vector<ChainState> members;
            for (int i = 0; i < count; ++i) members.push_back(sample_member(tm, n, cfg, i));
            const EnsembleHeader header{n, beta, chi, tm.model, seed, cfg.method};
            if (out_path.empty()) {
                write_ensemble_csv(std::cout, header, members);
            } else {
                std::ofstream out(out_path);
                if (!out) throw UsageError("cannot write " + out_path);
                write_ensemble_csv(out, header, members);
            }
            return kExitOk;
        }
        if (*check) return run_check(quick, inject_fault);
        for (const auto& [name, sub] : experiments)
            if (*sub) return run_experiment(name, config_path, threads);
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const UsageError& e) {
        std::cerr << "usage error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const std::invalid_argument& e) {
        std::cerr << "usage error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitFailure;
    }
    return kExitUsage;
}
