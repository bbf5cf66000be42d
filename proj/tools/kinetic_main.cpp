#include <CLI11.hpp>

#include <chrono>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>

#include "kinetic/cache.hpp"
#include "kinetic/config.hpp"
#include "kinetic/errors.hpp"
#include "kinetic/report.hpp"

using namespace kinetic;

namespace {

enum Exit { kOk = 0, kChecksFailed = 1, kConfigError = 2, kNumericalError = 3 };

const char* kExperiments[] = {"lemmas", "spectrum", "semigroup", "heat", "chi1"};

Report run_one(const std::string& name, const RunConfig& cfg) {
    if (name == "lemmas") return lemma_suite(cfg.lemmas);
    if (name == "spectrum") return spectrum_suite(cfg.spectrum);
    if (name == "semigroup") return decay_suite(cfg.semigroup);
    if (name == "heat") return heat_rate_table(cfg.heat);
    if (name == "chi1") return chi_experiment(cfg.chi);
    throw ConfigError("unknown experiment '" + name + "'", "experiment");
}

std::string utc_now() {
    std::time_t t = std::time(nullptr);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&t));
    return buf;
}

std::string read_file(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw ConfigError("cannot read '" + path + "'", "report");
    std::ostringstream os;
    os << is.rdbuf();
    return os.str();
}

int run(const std::string& experiment, const std::string& config_path, const std::string& out_flag, int jobs_flag,
        bool no_cache, bool strict) {
    RunConfig cfg = config_path.empty() ? RunConfig{} : load_config(config_path);
    if (const char* env = std::getenv("KINETIC_OUT")) cfg.out = env;
    if (const char* env = std::getenv("KINETIC_JOBS")) {
        try {
            cfg.jobs = std::stoi(env);
        } catch (const std::logic_error&) {
            throw ConfigError("KINETIC_JOBS is not an integer", "jobs");
        }
    }
    if (!out_flag.empty()) cfg.out = out_flag;
    if (jobs_flag >= 0) cfg.jobs = jobs_flag;
    if (no_cache) cfg.cache = false;
    if (cfg.jobs < 0) throw ConfigError("jobs must be >= 0", "jobs");

    const std::string cache_dir = cfg.cache_dir.empty() ? (std::filesystem::path(cfg.out) / "cache").string()
                                                        : cfg.cache_dir;
    MatrixCache cache(cache_dir, cfg.cache);
    cfg.finalize(cfg.cache ? &cache : nullptr);

    std::vector<std::string> names;
    if (experiment == "all")
        names.assign(std::begin(kExperiments), std::end(kExperiments));
    else
        names.push_back(experiment);

    std::vector<Report> reports;
    Json timing = Json::object();
    for (const auto& name : names) {
        auto t0 = std::chrono::steady_clock::now();
        std::cerr << "running " << name << "\n";
        reports.push_back(run_one(name, cfg));
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        timing[name] = secs;
        write_report(cfg.out, reports.back(), strict);
        std::cout << reports.back().summary(strict);
    }
    Report final_report = names.size() == 1 ? reports.front() : merge_reports("all", reports);
    if (names.size() > 1) write_report(cfg.out, final_report, strict);

    Json meta = {{"experiment", experiment},
                 {"finished_utc", utc_now()},
                 {"seconds", timing},
                 {"jobs", cfg.jobs},
                 {"cache", cfg.cache ? cache_dir : std::string("disabled")},
                 {"config", config_path.empty() ? std::string("(defaults)") : config_path},
                 {"strict", strict}};
    write_metadata(cfg.out, experiment, meta);
    return final_report.passed(strict) ? kOk : kChecksFailed;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Decay-rate experiments for the linearized Boltzmann equation with two backgrounds"};
    app.require_subcommand(1);
    std::string config_path, out;
    int jobs = -1;
    bool no_cache = false, strict = false;
    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--config", config_path, "INI config file (defaults when omitted)");
        sub->add_option("--out", out, "output directory (overrides [run] out and KINETIC_OUT)");
        sub->add_option("--jobs", jobs, "worker threads, 0 = all cores (overrides [run] jobs and KINETIC_JOBS)");
        sub->add_flag("--no-cache", no_cache, "reassemble collision matrices instead of reading the cache");
        sub->add_flag("--strict", strict, "exploratory checks become gating");
    };
    std::string chosen;
    for (const char* name : {"lemmas", "spectrum", "semigroup", "heat", "chi1", "all"}) {
        CLI::App* sub = app.add_subcommand(name, std::string("run the ") + name + " experiment" +
                                                     (std::string(name) == "all" ? "s" : ""));
        add_common(sub);
        sub->callback([&chosen, name] { chosen = name; });
    }
    CLI::App* defaults = app.add_subcommand("defaults", "print the default config");
    defaults->callback([&chosen] { chosen = "defaults"; });
    std::string diff_a, diff_b;
    CLI::App* diff = app.add_subcommand("diff", "field-wise diff of the verdicts of two JSON reports");
    diff->add_option("first", diff_a, "report")->required();
    diff->add_option("second", diff_b, "report")->required();
    diff->callback([&chosen] { chosen = "diff"; });

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : kConfigError;
    }

    try {
        if (chosen == "defaults") {
            std::cout << default_config_text();
            return kOk;
        }
        if (chosen == "diff") {
            auto lines = report_diff(Json::parse(read_file(diff_a)), Json::parse(read_file(diff_b)));
            for (const auto& l : lines) std::cout << l << "\n";
            return lines.empty() ? kOk : kChecksFailed;
        }
        return run(chosen, config_path, out, jobs, no_cache, strict);
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what();
        if (!e.key().empty()) std::cerr << " [key: " << e.key() << "]";
        std::cerr << "\n";
        return kConfigError;
    } catch (const DomainError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kConfigError;
    } catch (const NumericalError& e) {
        std::cerr << "numerical failure: " << e.what() << "\n";
        return kNumericalError;
    } catch (const nlohmann::json::exception& e) {
        std::cerr << "malformed report: " << e.what() << "\n";
        return kConfigError;
    } catch (const std::exception& e) {
        std::cerr << "failure: " << e.what() << "\n";
        return kNumericalError;
    }
}
