#include <doctest.h>

#include "kinetic/config.hpp"
#include "kinetic/errors.hpp"

using namespace kinetic;

namespace {

std::string error_key(const std::string& text) {
    try {
        parse_config(text);
    } catch (const ConfigError& e) {
        return e.key();
    }
    return "(no error)";
}

}  // namespace

TEST_CASE("default config text round-trips") {
    const std::string text = default_config_text();
    RunConfig c = parse_config(text);
    CHECK(default_config_text() == text);
    CHECK(c.jobs == 0);
    CHECK(c.cache);
    CHECK(c.heat.mu_drift == RunConfig{}.heat.mu_drift);
    CHECK(c.chi.decomposition_time == RunConfig{}.chi.decomposition_time);
    CHECK(c.lemmas.setup.n_speed == 24);
}

TEST_CASE("shared grid and model reach every operator driver") {
    RunConfig c = parse_config("[grid]\nn_speed = 10\nn_cosine = 5\n[model]\ngamma = 0.5\n[run]\nseed = 7\njobs = 2\n");
    CHECK(c.spectrum.setup.n_speed == 10);
    CHECK(c.semigroup.setup.n_cosine == 5);
    CHECK(c.chi.setup.n_speed == 10);
    CHECK(c.chi.setup.model.gamma == 0.5);
    // lemmas keep their own finer grid but share the model
    CHECK(c.lemmas.setup.n_speed == 24);
    CHECK(c.lemmas.setup.model.gamma == 0.5);
    CHECK(c.lemmas.seed == 7u);
    CHECK(c.spectrum.jobs == 2);
}

TEST_CASE("values and lists parse") {
    RunConfig c = parse_config("[chi1]\nscales = 1, 0.5\nrho = 1.01\nmu = 0.02\nlambda = 1.03\n[model]\n"
                               "cross_section = cos_squared\n");
    REQUIRE(c.chi.scales.size() == 2);
    CHECK(c.chi.scales[1] == 0.5);
    CHECK(c.spectrum.setup.model.cross == CrossSection::CosSquared);
}

TEST_CASE("errors name the offending key") {
    CHECK(error_key("[grid]\nbogus = 1\n") == "grid.bogus");
    CHECK(error_key("[heat]\nwidth = abc\n") == "heat.width");
    CHECK(error_key("[chi1]\nscales = 1, x\n") == "chi1.scales");
    CHECK(error_key("[nosuch]\nx = 1\n") == "nosuch");
    CHECK(error_key("stray = 1\n") != "(no error)");
    CHECK(error_key("[run]\ncache = maybe\n") == "run.cache");
    CHECK(error_key("[model]\ncross_section = soft\n") != "(no error)");
}

TEST_CASE("load_config reports missing files") {
    CHECK_THROWS_AS(load_config("/nonexistent/kinetic.ini"), ConfigError);
}
