#include "fputlab/config.hpp"

#include <charconv>
#include <fstream>
#include <istream>
#include <sstream>

#include "fputlab/errors.hpp"

namespace fputlab {

namespace {

std::string trim(std::string_view s) {
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string_view::npos) return {};
    const auto last = s.find_last_not_of(" \t\r");
    return std::string(s.substr(first, last - first + 1));
}

std::vector<std::string> split_list(const std::string& value) {
    std::vector<std::string> out;
    std::stringstream ss(value);
    std::string item;
    while (std::getline(ss, item, ',')) {
        item = trim(item);
        if (!item.empty()) out.push_back(item);
    }
    return out;
}

template <class T>
bool parse_number(const std::string& text, T& out) {
    const char* end = text.data() + text.size();
    const auto [ptr, ec] = std::from_chars(text.data(), end, out);
    return ec == std::errc() && ptr == end;
}

} // namespace

ConfigFile ConfigFile::parse(std::istream& in, std::string source) {
    ConfigFile cfg;
    cfg.source_ = std::move(source);
    std::string section = "run";
    std::string raw;
    int line_no = 0;
    while (std::getline(in, raw)) {
        ++line_no;
        const auto hash = raw.find('#');
        const std::string line = trim(hash == std::string::npos ? raw : raw.substr(0, hash));
        if (line.empty()) continue;
        const std::string where = cfg.source_ + ":" + std::to_string(line_no) + ": ";
        if (line.front() == '[') {
            if (line.back() != ']' || line.size() < 3) throw ConfigError(line, where + "malformed section header");
            section = trim(line.substr(1, line.size() - 2));
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos) throw ConfigError(line, where + "expected key = value");
        const std::string name = trim(line.substr(0, eq));
        if (name.empty()) throw ConfigError("", where + "empty key");
        const std::string key = section + "." + name;
        if (cfg.entries_.count(key)) throw ConfigError(key, where + "duplicate key '" + key + "'");
        cfg.entries_[key] = {trim(line.substr(eq + 1)), line_no};
    }
    return cfg;
}

ConfigFile ConfigFile::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("", "cannot open config file '" + path + "'");
    return parse(in, path);
}

void ConfigFile::fail(const std::string& key, const std::string& message) const {
    const auto it = entries_.find(key);
    const std::string where = it == entries_.end() ? source_ : source_ + ":" + std::to_string(it->second.line);
    throw ConfigError(key, where + ": key '" + key + "': " + message);
}

const ConfigFile::Entry& ConfigFile::require(const std::string& key) const {
    const auto it = entries_.find(key);
    if (it == entries_.end()) fail(key, "missing required key");
    used_.insert(key);
    return it->second;
}

std::string ConfigFile::get_string(const std::string& key) const {
    return require(key).value;
}

std::string ConfigFile::get_string(const std::string& key, const std::string& fallback) const {
    return has(key) ? get_string(key) : fallback;
}

double ConfigFile::get_double(const std::string& key) const {
    double v = 0.0;
    if (!parse_number(require(key).value, v)) fail(key, "expected a number");
    return v;
}

double ConfigFile::get_double(const std::string& key, double fallback) const {
    return has(key) ? get_double(key) : fallback;
}

long long ConfigFile::get_int(const std::string& key) const {
    long long v = 0;
    if (!parse_number(require(key).value, v)) fail(key, "expected an integer");
    return v;
}

long long ConfigFile::get_int(const std::string& key, long long fallback) const {
    return has(key) ? get_int(key) : fallback;
}

std::vector<double> ConfigFile::get_doubles(const std::string& key) const {
    std::vector<double> out;
    for (const auto& item : split_list(require(key).value)) {
        double v = 0.0;
        if (!parse_number(item, v)) fail(key, "expected a list of numbers, got '" + item + "'");
        out.push_back(v);
    }
    return out;
}

std::vector<int> ConfigFile::get_ints(const std::string& key) const {
    std::vector<int> out;
    for (const auto& item : split_list(require(key).value)) {
        int v = 0;
        if (!parse_number(item, v)) fail(key, "expected a list of integers, got '" + item + "'");
        out.push_back(v);
    }
    return out;
}

void ConfigFile::reject_unused() const {
    for (const auto& [key, entry] : entries_)
        if (!used_.count(key)) fail(key, "unknown key for this command");
}

nlohmann::json ConfigFile::echo() const {
    nlohmann::json j = nlohmann::json::object();
    for (const auto& [key, entry] : entries_) j[key] = entry.value;
    return j;
}

RunConfig experiment_from_config(const ConfigFile& file, std::string_view kind) {
    RunConfig run;
    ExperimentConfig& cfg = run.experiment;
    // enum-valued keys: translate parse failures into key errors
    auto parse_enum = [&](const std::string& key, auto parser, auto fallback) {
        if (!file.has(key)) return fallback;
        try {
            return parser(file.get_string(key));
        } catch (const std::invalid_argument& e) {
            throw ConfigError(key, file.source() + ": key '" + key + "': " + e.what());
        }
    };

    cfg.model = parse_enum("chain.model", [](const std::string& s) { return parse_model(s); },
                           kind == "packet" ? Model::Toda : Model::FPUT);
    cfg.n = static_cast<int>(file.get_int("chain.n"));
    cfg.chi = cfg.model == Model::FPUT ? file.get_double("chain.chi") : file.get_double("chain.chi", 1.0);
    cfg.beta_grid = file.get_doubles("experiment.beta_grid");
    cfg.n_samples = static_cast<int>(file.get_int("experiment.n_samples"));
    if (file.has("experiment.n_grid")) cfg.n_grid = file.get_ints("experiment.n_grid");

    cfg.sampler.seed = static_cast<std::uint64_t>(file.get_int("sampler.seed"));
    cfg.sampler.method = parse_enum("sampler.method", [](const std::string& s) { return parse_sampler(s); },
                                    SamplerMethod::ConstrainedMCMC);
    cfg.sampler.n_burn = static_cast<int>(file.get_int("sampler.n_burn", cfg.sampler.n_burn));
    cfg.sampler.thin = static_cast<int>(file.get_int("sampler.thin", cfg.sampler.thin));

    if (kind == "packet") {
        cfg.packet_m = static_cast<int>(file.get_int("packet.m"));
        cfg.packet_y = file.get_doubles("packet.y");
        const std::string parity = file.get_string("packet.parity", "even");
        if (parity == "even")
            cfg.packet_parity = Parity::Even;
        else if (parity == "staggered")
            cfg.packet_parity = Parity::Staggered;
        else
            throw ConfigError("packet.parity", file.source() + ": key 'packet.parity': expected even or staggered");
    } else {
        cfg.m_list = file.get_ints("experiment.m_list");
    }

    if (kind == "drift" || kind == "packet") {
        cfg.t_grid = file.get_doubles("experiment.t_grid");
        cfg.delta1 = file.get_double("experiment.delta1", cfg.delta1);
        cfg.window_c = file.get_double("experiment.window_c", cfg.window_c);
        cfg.integrator.scheme = parse_enum("integrator.scheme", [](const std::string& s) { return parse_scheme(s); },
                                           Scheme::Yoshida4);
        if (file.get_string("integrator.dt", "") == "auto")
            cfg.auto_dt = true;
        else
            cfg.integrator.dt = file.get_double("integrator.dt", cfg.integrator.dt);
    }

    run.output_dir = file.get_string("output.dir", "fputlab-out");
    file.reject_unused();

    try {
        cfg.validate(kind);
    } catch (const ConfigError& e) {
        // map experiment field names back to file keys
        static const std::map<std::string, std::string> keys = {
            {"n", "chain.n"},           {"chi", "chain.chi"},
            {"n_grid", "experiment.n_grid"}, {"beta_grid", "experiment.beta_grid"},
            {"n_samples", "experiment.n_samples"}, {"m_list", "experiment.m_list"},
            {"t_grid", "experiment.t_grid"}, {"dt", "integrator.dt"},
            {"delta1", "experiment.delta1"}, {"sampler", "sampler"},
            {"packet_y", "packet.y"}};
        const auto it = keys.find(e.key());
        const std::string key = it == keys.end() ? e.key() : it->second;
        throw ConfigError(key, file.source() + ": key '" + key + "': " + e.what());
    }
    run.echo = file.echo();
    return run;
}

} // namespace fputlab
