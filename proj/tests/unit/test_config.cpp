#include "doctest.h"

#include <sstream>
#include <string>

#include "fputlab/config.hpp"
#include "fputlab/errors.hpp"

using namespace fputlab;

namespace {

const char* kDrift = R"(# drift run
[chain]
model = fput
n = 64
chi = 2   # strong quartic

[experiment]
beta_grid = 32, 64, 128
m_list = 3
t_grid = 10, 20
n_samples = 200

[sampler]
seed = 7

[integrator]
dt = 0.05

[output]
dir = out/drift
)";

ConfigFile parse(const std::string& text) {
    std::istringstream in(text);
    return ConfigFile::parse(in, "test.conf");
}

// (key, message) of the ConfigError raised for `kind`
std::pair<std::string, std::string> error_of(const std::string& text, const char* kind = "drift") {
    try {
        experiment_from_config(parse(text), kind);
    } catch (const ConfigError& e) {
        return {e.key(), e.what()};
    }
    return {"", ""};
}

std::string replace(std::string text, const std::string& from, const std::string& to) {
    const auto at = text.find(from);
    REQUIRE(at != std::string::npos);
    return text.replace(at, from.size(), to);
}

} // namespace

TEST_CASE("sections, comments and lists") {
    const ConfigFile f = parse(kDrift);
    CHECK(f.get_string("chain.model") == "fput");
    CHECK(f.get_double("chain.chi") == 2.0);
    CHECK(f.get_doubles("experiment.beta_grid") == std::vector<double>{32.0, 64.0, 128.0});
    CHECK(f.get_int("missing.key", 5) == 5);
    CHECK(f.echo()["output.dir"] == "out/drift");
}

TEST_CASE("drift config round trip") {
    const RunConfig run = experiment_from_config(parse(kDrift), "drift");
    CHECK(run.experiment.model == Model::FPUT);
    CHECK(run.experiment.n == 64);
    CHECK(run.experiment.m_list == std::vector<int>{3});
    CHECK(run.experiment.t_grid == std::vector<double>{10.0, 20.0});
    CHECK(run.experiment.sampler.seed == 7);
    CHECK(run.experiment.integrator.dt == 0.05);
    CHECK_FALSE(run.experiment.auto_dt);
    CHECK(run.output_dir == "out/drift");
    CHECK(experiment_from_config(parse(replace(kDrift, "dt = 0.05", "dt = auto")), "drift").experiment.auto_dt);
}

TEST_CASE("missing keys are named") {
    auto [key, message] = error_of(replace(kDrift, "seed = 7", ""));
    CHECK(key == "sampler.seed");
    CHECK(message.find("sampler.seed") != std::string::npos);
    CHECK(error_of(replace(kDrift, "t_grid = 10, 20", "")).first == "experiment.t_grid");
    CHECK(error_of(replace(kDrift, "chi = 2", "")).first == "chain.chi");
}

TEST_CASE("bad values carry the line number") {
    auto [key, message] = error_of(replace(kDrift, "n = 64", "n = sixty-four"));
    CHECK(key == "chain.n");
    CHECK(message.find("test.conf:4") != std::string::npos);
    CHECK(error_of(replace(kDrift, "model = fput", "model = morse")).first == "chain.model");
    CHECK(error_of(replace(kDrift, "beta_grid = 32, 64, 128", "beta_grid = 32, x")).first == "experiment.beta_grid");
}

TEST_CASE("unknown and duplicate keys are rejected") {
    CHECK(error_of(replace(kDrift, "seed = 7", "seed = 7\nsead = 8")).first == "sampler.sead");
    CHECK(error_of(replace(kDrift, "seed = 7", "seed = 7\nseed = 8")).first == "sampler.seed");
    // packet keys mean nothing to a drift run
    CHECK(error_of(std::string(kDrift) + "[packet]\nm = 4\n").first == "packet.m");
    CHECK_THROWS_AS(parse("[chain\nn = 3\n"), ConfigError);
    CHECK_THROWS_AS(parse("just words\n"), ConfigError);
}

TEST_CASE("semantic validation reports the file key") {
    CHECK(error_of(replace(kDrift, "n_samples = 200", "n_samples = 20")).first == "experiment.n_samples");
    CHECK(error_of(replace(kDrift, "m_list = 3", "m_list = 40")).first == "experiment.m_list");
    CHECK(error_of(replace(kDrift, "t_grid = 10, 20", "t_grid = 20, 10")).first == "experiment.t_grid");
}

TEST_CASE("packet and floor configs") {
    const std::string packet = R"([chain]
model = toda
n = 32
[experiment]
beta_grid = 32, 64, 128
t_grid = 100, 1000
n_samples = 100
[packet]
m = 4
y = 1, 0.5, 0.25
[sampler]
seed = 3
)";
    const RunConfig run = experiment_from_config(parse(packet), "packet");
    CHECK(run.experiment.model == Model::Toda);
    CHECK(run.experiment.packet_y.size() == 3);
    CHECK(error_of(replace(packet, "y = 1, 0.5, 0.25", "y = 1"), "packet").first == "packet.y");

    const std::string floor = R"([chain]
n = 64
chi = 1
[experiment]
beta_grid = 32, 64
n_grid = 32, 64
m_list = 2, 4
n_samples = 100
[sampler]
seed = 3
)";
    const RunConfig f = experiment_from_config(parse(floor), "floor");
    CHECK(f.experiment.n_grid == std::vector<int>{32, 64});
    CHECK(f.output_dir == "fputlab-out");
}
