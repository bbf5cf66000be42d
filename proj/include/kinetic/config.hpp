#pragma once

#include <cstdint>
#include <string>

#include "kinetic/chi_experiment.hpp"
#include "kinetic/heat_toy.hpp"
#include "kinetic/suites.hpp"

namespace kinetic {

// Everything one invocation of the runner needs.  The [grid] and [model]
// sections are shared by spectrum, semigroup and chi1; lemmas has its own
// grid size because its structure checks run on a finer grid.
struct RunConfig {
    std::string out = "results";
    int jobs = 0;
    bool cache = true;
    std::string cache_dir;  // empty: <out>/cache
    std::uint64_t seed = 20240611;

    LemmaConfig lemmas;
    SpectrumConfig spectrum;
    DecaySuiteConfig semigroup;
    HeatConfig heat;
    ChiConfig chi;

    // Propagates the shared sections, jobs, seed and cache into the
    // per-experiment configs.
    void finalize(MatrixCache* cache);
};

// INI text with sections [run], [grid], [model], [lemmas], [spectrum],
// [semigroup], [heat], [chi1].  Unknown sections or keys and malformed values
// raise ConfigError naming "section.key".
RunConfig parse_config(const std::string& text);
RunConfig load_config(const std::string& path);

// The built-in defaults written out as a config file.
std::string default_config_text();

}  // namespace kinetic
