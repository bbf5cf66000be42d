// Runs every experiment at its default configuration and prints one PASS/FAIL
// line per acceptance criterion.  A criterion passes iff all of its gating
// verdicts pass; exploratory verdicts are listed but never gate.
#include <CLI11.hpp>

#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <set>
#include <sstream>

#include "kinetic/cache.hpp"
#include "kinetic/config.hpp"
#include "kinetic/errors.hpp"
#include "kinetic/report.hpp"

using namespace kinetic;
namespace fs = std::filesystem;

namespace {

struct Criterion {
    int number;
    std::string title;
    // (experiment, verdict id prefix); an empty prefix takes the remainder
    // of that experiment's verdicts not claimed by another criterion.
    std::vector<std::pair<std::string, std::string>> groups;
};

const std::vector<Criterion>& criteria() {
    static const std::vector<Criterion> c{
        {1, "heat toy: closed forms and the four decay slopes",
         {{"heat", "drift."}, {"heat", "temperature."}, {"heat", "closed_form."}, {"heat", "kernel_lemma."},
          {"heat", "envelope."}}},
        {2, "heat toy: Duhamel split reproduces the closed-form difference", {{"heat", "duhamel."}}},
        {3, "collision operator: null space, gap, symmetry, coercivity", {{"lemmas", "collision."}}},
        {4, "dispersion relation and slow eigenfunctions",
         {{"spectrum", "dispersion."}, {"spectrum", "eigenfunctions."}, {"spectrum", "projectors."},
          {"spectrum", "spectrum."}}},
        {5, "semigroup decay rates and exponential parts", {{"semigroup", ""}}},
        {6, "semigroup law: composition and three-way split", {{"semigroup", "law."}}},
        {7, "sound-cone scan", {{"semigroup", "cone."}}},
        {8, "chi11 decay slopes",
         {{"chi1", "chi11."}, {"chi1", "decomposition."}, {"chi1", "mode."}, {"chi1", "source."},
          {"lemmas", "source."}}},
        {9, "chi11 linear in the background deviation", {{"chi1", "linearity."}}},
        {10, "Maxwellian-difference bound", {{"lemmas", "maxwell."}}},
        {11, "background change of variables", {{"spectrum", "scaling."}, {"chi1", "lb.crosscheck"}}},
    };
    return c;
}

bool starts_with(const std::string& s, const std::string& p) { return s.compare(0, p.size(), p) == 0; }

std::string slurp(const fs::path& p) {
    std::ifstream is(p, std::ios::binary);
    std::ostringstream os;
    os << is.rdbuf();
    return os.str();
}

// Names of files whose bytes differ between two report directories.
std::vector<std::string> compare_dirs(const fs::path& a, const fs::path& b) {
    std::set<std::string> names;
    for (const fs::path& d : {a, b})
        for (const auto& e : fs::directory_iterator(d))
            if (e.is_regular_file()) names.insert(e.path().filename().string());
    std::vector<std::string> diff;
    for (const auto& n : names)
        if (!fs::exists(a / n) || !fs::exists(b / n) || slurp(a / n) != slurp(b / n)) diff.push_back(n);
    return diff;
}

Report run_one(const std::string& name, const RunConfig& cfg) {
    if (name == "lemmas") return lemma_suite(cfg.lemmas);
    if (name == "spectrum") return spectrum_suite(cfg.spectrum);
    if (name == "semigroup") return decay_suite(cfg.semigroup);
    if (name == "heat") return heat_rate_table(cfg.heat);
    return chi_experiment(cfg.chi);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Acceptance run over all experiments at their default configuration"};
    std::string out = "acceptance";
    std::string config_path;
    int jobs = 0;
    std::vector<int> known;
    app.add_option("--out", out, "directory for the reports");
    app.add_option("--config", config_path, "INI config (defaults when omitted)");
    app.add_option("--jobs", jobs, "worker threads, 0 = all cores");
    app.add_option("--known-failure", known,
                   "criterion documented as failing: reported as FAIL but does not set the exit status");
    CLI11_PARSE(app, argc, argv);

    try {
        RunConfig cfg = config_path.empty() ? RunConfig{} : load_config(config_path);
        cfg.jobs = jobs;
        cfg.cache = true;
        MatrixCache cache((fs::path(out) / "cache").string(), true);
        cfg.finalize(&cache);

        std::map<std::string, Report> reports;
        for (const char* name : {"heat", "lemmas", "spectrum", "semigroup", "chi1"}) {
            auto t0 = std::chrono::steady_clock::now();
            reports[name] = run_one(name, cfg);
            write_report((fs::path(out) / "run1").string(), reports[name], false);
            const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
            std::cerr << name << ": " << secs << " s\n";
        }

        // Determinism: rerun the drivers that use seeded random draws and the
        // matrix cache, and compare every written byte.
        const std::vector<std::string> rerun{"heat", "lemmas", "spectrum"};
        std::vector<std::string> changed;
        {
            const fs::path a = fs::path(out) / "determinism_a", b = fs::path(out) / "determinism_b";
            fs::remove_all(a);
            fs::remove_all(b);
            for (const auto& name : rerun) {
                write_report(a.string(), reports[name], false);
                write_report(b.string(), run_one(name, cfg), false);
            }
            changed = compare_dirs(a, b);
        }

        std::set<std::pair<std::string, std::string>> claimed;
        for (const Criterion& c : criteria())
            for (const auto& [exp, prefix] : c.groups)
                if (!prefix.empty())
                    for (const Verdict& v : reports[exp].verdicts)
                        if (starts_with(v.id, prefix)) claimed.insert({exp, v.id});

        bool ok = true;
        std::ostringstream lines;
        auto line = [&](int number, const std::string& title, bool pass, const std::string& detail) {
            const bool is_known = std::find(known.begin(), known.end(), number) != known.end();
            lines << "criterion " << number << " " << (pass ? "PASS" : "FAIL") << "  " << title;
            if (!detail.empty()) lines << "  [" << detail << "]";
            if (is_known) lines << (pass ? "  (listed as known failure but passes)" : "  (known failure)");
            lines << "\n";
            // A known failure that starts passing also needs attention.
            if (pass == is_known) ok = false;
        };

        for (const Criterion& c : criteria()) {
            int n = 0, n_pass = 0;
            std::string failing, exploratory;
            for (const auto& [exp, prefix] : c.groups)
                for (const Verdict& v : reports[exp].verdicts) {
                    const bool mine = prefix.empty() ? !claimed.count({exp, v.id}) : starts_with(v.id, prefix);
                    if (!mine) continue;
                    if (v.exploratory) {
                        exploratory += (exploratory.empty() ? "" : " ") + v.id + (v.pass ? "=ok" : "=off");
                        continue;
                    }
                    ++n;
                    if (v.pass)
                        ++n_pass;
                    else
                        failing += (failing.empty() ? "" : " ") + exp + ":" + v.id + "=" + format_number(v.measured);
                }
            std::string detail = std::to_string(n_pass) + "/" + std::to_string(n) + " gating checks";
            if (!failing.empty()) detail += "; failing " + failing;
            if (!exploratory.empty()) detail += "; exploratory " + exploratory;
            line(c.number, c.title, n > 0 && n_pass == n, detail);
        }
        std::string detail = "reran";
        for (const auto& r : rerun) detail += " " + r;
        detail += changed.empty() ? "; all files identical" : "; differing files:";
        for (const auto& f : changed) detail += " " + f;
        line(12, "repeated runs write byte-identical reports", changed.empty(), detail);
        std::cout << lines.str();
        std::ofstream(fs::path(out) / "criteria.txt") << lines.str();
        return ok ? 0 : 1;
    } catch (const std::exception& e) {
        std::cerr << "acceptance run aborted: " << e.what() << "\n";
        return 3;
    }
}
