#pragma once

#include <iosfwd>
#include <map>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

#include "fputlab/experiment.hpp"

namespace fputlab {

/// Flat key=value text with [section] headers. Keys are addressed as
/// "section.key"; keys before the first header live in section "run".
/// '#' starts a comment. Lists are comma separated.
class ConfigFile {
public:
    static ConfigFile parse(std::istream& in, std::string source = "<config>");
    static ConfigFile load(const std::string& path);

    bool has(const std::string& key) const { return entries_.count(key) != 0; }
    std::string get_string(const std::string& key) const;
    std::string get_string(const std::string& key, const std::string& fallback) const;
    double get_double(const std::string& key) const;
    double get_double(const std::string& key, double fallback) const;
    long long get_int(const std::string& key) const;
    long long get_int(const std::string& key, long long fallback) const;
    std::vector<double> get_doubles(const std::string& key) const;
    std::vector<int> get_ints(const std::string& key) const;

    /// Throws ConfigError on the first key that no getter asked for.
    void reject_unused() const;

    const std::string& source() const noexcept { return source_; }
    nlohmann::json echo() const;

private:
    struct Entry {
        std::string value;
        int line = 0;
    };
    const Entry& require(const std::string& key) const;
    [[noreturn]] void fail(const std::string& key, const std::string& message) const;

    std::string source_;
    std::map<std::string, Entry> entries_;
    mutable std::set<std::string> used_;
};

struct RunConfig {
    ExperimentConfig experiment;
    std::string output_dir;
    nlohmann::json echo;
};

/// Builds the experiment configuration for `kind` (drift, packet, floor or
/// bracket) and validates it; every error is a ConfigError naming the key.
RunConfig experiment_from_config(const ConfigFile& file, std::string_view kind);

} // namespace fputlab
