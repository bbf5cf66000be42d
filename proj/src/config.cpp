#include "kinetic/config.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <fstream>
#include <functional>
#include <map>
#include <sstream>

#include "kinetic/errors.hpp"

namespace kinetic {

namespace {

// Shared sections are parsed into these and copied out by finalize.
struct Shared {
    OperatorSetup setup;
};

using Setter = std::function<void(RunConfig&, Shared&, const std::string&)>;
using Getter = std::function<std::string(RunConfig&, Shared&)>;

struct Field {
    std::string key;
    Setter set;
    Getter get;
};

std::string num(double x) {
    std::ostringstream os;
    os.precision(17);
    os << x;
    return os.str();
}

std::string list(const std::vector<double>& v) {
    std::string s;
    for (std::size_t k = 0; k < v.size(); ++k) s += (k ? ", " : "") + num(v[k]);
    return s;
}

double to_double(const std::string& v) {
    std::size_t pos = 0;
    double x = std::stod(v, &pos);
    if (v.find_first_not_of(" \t", pos) != std::string::npos) throw std::invalid_argument(v);
    return x;
}

long long to_integer(const std::string& v) {
    std::size_t pos = 0;
    long long x = std::stoll(v, &pos);
    if (v.find_first_not_of(" \t", pos) != std::string::npos) throw std::invalid_argument(v);
    return x;
}

bool to_bool(const std::string& v) {
    if (v == "true" || v == "on" || v == "yes" || v == "1") return true;
    if (v == "false" || v == "off" || v == "no" || v == "0") return false;
    throw std::invalid_argument(v);
}

std::vector<double> to_list(const std::string& v) {
    std::vector<double> out;
    std::stringstream ss(v);
    std::string item;
    while (std::getline(ss, item, ',')) out.push_back(to_double(item));
    if (out.empty()) throw std::invalid_argument(v);
    return out;
}

// Field builders over a member reached through an accessor.
template <class A>
Field real(std::string key, A access) {
    return {key, [access](RunConfig& c, Shared& s, const std::string& v) { access(c, s) = to_double(v); },
            [access](RunConfig& c, Shared& s) {
                return num(access(c, s));
            }};
}

template <class A>
Field integer(std::string key, A access) {
    return {key,
            [access](RunConfig& c, Shared& s, const std::string& v) {
                using T = std::remove_reference_t<decltype(access(c, s))>;
                access(c, s) = static_cast<T>(to_integer(v));
            },
            [access](RunConfig& c, Shared& s) {
                return std::to_string(access(c, s));
            }};
}

template <class A>
Field reals(std::string key, A access) {
    return {key, [access](RunConfig& c, Shared& s, const std::string& v) { access(c, s) = to_list(v); },
            [access](RunConfig& c, Shared& s) {
                return list(access(c, s));
            }};
}

#define ACC(expr) [](RunConfig & c, Shared & s) -> auto& { (void)c; (void)s; return expr; }

std::vector<Field> maxwellian_fields(const std::string& prefix, MaxwellianParams& (*get)(RunConfig&)) {
    return {{prefix + "rho", [get](RunConfig& c, Shared&, const std::string& v) { get(c).rho = to_double(v); },
             [get](RunConfig& c, Shared&) { return num(get(c).rho); }},
            {prefix + "mu", [get](RunConfig& c, Shared&, const std::string& v) { get(c).mu = {0.0, 0.0, to_double(v)}; },
             [get](RunConfig& c, Shared&) { return num(get(c).mu[2]); }},
            {prefix + "lambda", [get](RunConfig& c, Shared&, const std::string& v) { get(c).lam = to_double(v); },
             [get](RunConfig& c, Shared&) { return num(get(c).lam); }}};
}

const std::vector<std::pair<std::string, std::vector<Field>>>& schema() {
    static const std::vector<std::pair<std::string, std::vector<Field>>> s = [] {
        std::vector<std::pair<std::string, std::vector<Field>>> out;

        std::vector<Field> run{
            {"out", [](RunConfig& c, Shared&, const std::string& v) { c.out = v; },
             [](RunConfig& c, Shared&) { return c.out; }},
            integer("jobs", ACC(c.jobs)),
            {"cache", [](RunConfig& c, Shared&, const std::string& v) { c.cache = to_bool(v); },
             [](RunConfig& c, Shared&) { return std::string(c.cache ? "true" : "false"); }},
            {"cache_dir", [](RunConfig& c, Shared&, const std::string& v) { c.cache_dir = v; },
             [](RunConfig& c, Shared&) { return c.cache_dir; }},
            integer("seed", ACC(c.seed)),
        };
        out.emplace_back("run", std::move(run));

        out.emplace_back("grid", std::vector<Field>{integer("n_speed", ACC(s.setup.n_speed)),
                                                    integer("n_cosine", ACC(s.setup.n_cosine)),
                                                    real("s_max", ACC(s.setup.s_max))});

        std::vector<Field> model{
            real("gamma", ACC(s.setup.model.gamma)),
            {"cross_section",
             [](RunConfig&, Shared& s, const std::string& v) { s.setup.model.cross = cross_section_from_string(v); },
             [](RunConfig&, Shared& s) { return to_string(s.setup.model.cross); }},
            integer("n_speed_star", ACC(s.setup.model.quad.n_speed)),
            integer("n_cosine_star", ACC(s.setup.model.quad.n_cosine)),
            integer("n_azimuth", ACC(s.setup.model.quad.n_azimuth)),
            integer("n_cos_omega", ACC(s.setup.model.quad.n_cos_omega)),
            integer("n_beta", ACC(s.setup.model.quad.n_beta)),
        };
        out.emplace_back("model", std::move(model));

        std::vector<Field> lem{
            integer("n_speed", ACC(c.lemmas.setup.n_speed)),
            integer("n_cosine", ACC(c.lemmas.setup.n_cosine)),
            real("tol_null", ACC(c.lemmas.tol_null)),
            real("tol_symmetry", ACC(c.lemmas.tol_symmetry)),
            real("tol_refine", ACC(c.lemmas.tol_refine)),
            integer("n_random", ACC(c.lemmas.n_random)),
            real("beta", ACC(c.lemmas.beta)),
            real("lambda_bar", ACC(c.lemmas.lam_bar)),
            reals("scales", ACC(c.lemmas.scales)),
            real("tol_lemma_refine", ACC(c.lemmas.tol_lemma_refine)),
            real("tol_linear", ACC(c.lemmas.tol_linear)),
            real("tol_mean_value", ACC(c.lemmas.tol_mean_value)),
            real("tol_sqrt_ratio", ACC(c.lemmas.tol_sqrt_ratio)),
            real("tol_invariant", ACC(c.lemmas.tol_invariant)),
        };
        for (auto& f : maxwellian_fields("bound_", [](RunConfig& c) -> MaxwellianParams& { return c.lemmas.lemma_b; }))
            lem.push_back(f);
        for (auto& f : maxwellian_fields("linear_", [](RunConfig& c) -> MaxwellianParams& { return c.lemmas.linear_b; }))
            lem.push_back(f);
        for (auto& f :
             maxwellian_fields("mean_value_", [](RunConfig& c) -> MaxwellianParams& { return c.lemmas.mean_value_b; }))
            lem.push_back(f);
        for (auto& f : maxwellian_fields("source_", [](RunConfig& c) -> MaxwellianParams& { return c.lemmas.source_b; }))
            lem.push_back(f);
        out.emplace_back("lemmas", std::move(lem));

        std::vector<Field> spec{
            real("fit_r_lo", ACC(c.spectrum.fit_r_lo)),
            real("fit_r_hi", ACC(c.spectrum.fit_r_hi)),
            integer("fit_samples", ACC(c.spectrum.fit_samples)),
            real("eigen_r", ACC(c.spectrum.eigen_r)),
            real("tol_speed", ACC(c.spectrum.tol_speed)),
            real("tol_zero_speed", ACC(c.spectrum.tol_zero_speed)),
            real("overlap_min", ACC(c.spectrum.overlap_min)),
            real("cross_max", ACC(c.spectrum.cross_max)),
            real("tol_projector", ACC(c.spectrum.tol_projector)),
            reals("stability_r", ACC(c.spectrum.stability_r)),
            real("tol_stability", ACC(c.spectrum.tol_stability)),
            real("gap_r_max", ACC(c.spectrum.gap_r_max)),
            integer("gap_samples", ACC(c.spectrum.gap_samples)),
            reals("scaling_r", ACC(c.spectrum.scaling_r)),
            real("tol_scaling", ACC(c.spectrum.tol_scaling)),
            real("tol_diffusion", ACC(c.spectrum.tol_diffusion)),
        };
        for (auto& f :
             maxwellian_fields("diffusion_", [](RunConfig& c) -> MaxwellianParams& { return c.spectrum.diffusion_b; }))
            spec.push_back(f);
        out.emplace_back("spectrum", std::move(spec));

        out.emplace_back("semigroup",
                         std::vector<Field>{
                             real("delta", ACC(c.semigroup.delta)),
                             real("width", ACC(c.semigroup.profile.width)),
                             real("t_min", ACC(c.semigroup.t_min)),
                             real("t_max", ACC(c.semigroup.t_max)),
                             integer("per_decade", ACC(c.semigroup.per_decade)),
                             real("beta", ACC(c.semigroup.beta)),
                             real("fit_t1", ACC(c.semigroup.fit_t1)),
                             real("fit_t2", ACC(c.semigroup.fit_t2)),
                             real("exp_t1", ACC(c.semigroup.exp_t1)),
                             real("exp_t2", ACC(c.semigroup.exp_t2)),
                             real("cone_t1", ACC(c.semigroup.cone_t1)),
                             real("cone_t2", ACC(c.semigroup.cone_t2)),
                             real("tol_l2", ACC(c.semigroup.tol_l2)),
                             real("tol_linf", ACC(c.semigroup.tol_linf)),
                             real("tol_steepen", ACC(c.semigroup.tol_steepen)),
                             real("tol_cone", ACC(c.semigroup.tol_cone)),
                             real("tol_law", ACC(c.semigroup.tol_law)),
                         });

        out.emplace_back("heat", std::vector<Field>{
                                     real("width", ACC(c.heat.h0.width)),
                                     real("amplitude", ACC(c.heat.h0.amplitude)),
                                     real("t1", ACC(c.heat.t1)),
                                     real("t2", ACC(c.heat.t2)),
                                     integer("per_decade", ACC(c.heat.per_decade)),
                                     real("mu_drift", ACC(c.heat.mu_drift)),
                                     real("mu_explore", ACC(c.heat.mu_explore)),
                                     real("lambda", ACC(c.heat.lam_temperature)),
                                     real("gamma", ACC(c.heat.gamma)),
                                     real("tol_slope", ACC(c.heat.tol_slope)),
                                     real("tol_quadrature", ACC(c.heat.tol_quadrature)),
                                     real("tol_duhamel", ACC(c.heat.tol_duhamel)),
                                     reals("duhamel_times", ACC(c.heat.duhamel_times)),
                                 });

        std::vector<Field> chi{
            real("beta", ACC(c.chi.beta)),
            {"xi_profile", [](RunConfig& c, Shared&, const std::string& v) { c.chi.xi = xi_profile_from_string(v); },
             [](RunConfig& c, Shared&) { return to_string(c.chi.xi); }},
            real("width", ACC(c.chi.profile.width)),
            real("epsilon", ACC(c.chi.epsilon)),
            real("delta", ACC(c.chi.delta)),
            real("t_min", ACC(c.chi.t_min)),
            real("t_max", ACC(c.chi.t_max)),
            integer("per_decade", ACC(c.chi.per_decade)),
            real("fit_t1", ACC(c.chi.fit_t1)),
            real("fit_t2", ACC(c.chi.fit_t2)),
            real("tol_linf", ACC(c.chi.tol_linf)),
            real("tol_l2", ACC(c.chi.tol_l2)),
            real("naive_bound", ACC(c.chi.naive_bound)),
            reals("scales", ACC(c.chi.scales)),
            reals("scan_times", ACC(c.chi.scan_times)),
            real("tol_linear", ACC(c.chi.tol_linear)),
            real("decomposition_time", ACC(c.chi.decomposition_time)),
            integer("decomposition_per_decade", ACC(c.chi.decomposition_per_decade)),
            real("dominance", ACC(c.chi.dominance)),
            real("exp_t1", ACC(c.chi.exp_t1)),
            real("exp_t2", ACC(c.chi.exp_t2)),
            real("tol_sum", ACC(c.chi.tol_sum)),
            real("tol_crosscheck", ACC(c.chi.tol_crosscheck)),
            real("tol_invariant", ACC(c.chi.tol_invariant)),
        };
        for (auto& f : maxwellian_fields("", [](RunConfig& c) -> MaxwellianParams& { return c.chi.b; }))
            chi.push_back(f);
        out.emplace_back("chi1", std::move(chi));
        return out;
    }();
    return s;
}

#undef ACC

}  // namespace

void RunConfig::finalize(MatrixCache* cache) {
    AssemblyOptions opts;
    opts.jobs = jobs;
    opts.cache = cache;
    const OperatorSetup shared = spectrum.setup;  // parse_config keeps the shared setup here
    lemmas.setup.model = shared.model;
    lemmas.setup.s_max = shared.s_max;
    semigroup.setup = shared;
    chi.setup = shared;
    lemmas.seed = seed;
    lemmas.jobs = spectrum.jobs = semigroup.jobs = heat.jobs = chi.jobs = jobs;
    lemmas.assembly = spectrum.assembly = semigroup.assembly = chi.assembly = opts;
}

RunConfig parse_config(const std::string& text) {
    namespace pt = boost::property_tree;
    pt::ptree tree;
    std::istringstream is(text);
    try {
        pt::read_ini(is, tree);
    } catch (const pt::ini_parser_error& e) {
        throw ConfigError(std::string("config: ") + e.what());
    }
    RunConfig cfg;
    Shared shared;
    for (const auto& [section, node] : tree) {
        if (node.empty() && !node.data().empty())
            throw ConfigError("config: key '" + section + "' outside a section", section);
        const std::vector<Field>* fields = nullptr;
        for (const auto& [name, f] : schema())
            if (name == section) fields = &f;
        if (!fields) throw ConfigError("config: unknown section [" + section + "]", section);
        for (const auto& [key, value] : node) {
            const std::string full = section + "." + key;
            const Field* field = nullptr;
            for (const Field& f : *fields)
                if (f.key == key) field = &f;
            if (!field) throw ConfigError("config: unknown key '" + full + "'", full);
            try {
                field->set(cfg, shared, value.get_value<std::string>());
            } catch (const ConfigError& e) {
                throw ConfigError("config: " + std::string(e.what()) + " ('" + full + "')", full);
            } catch (const std::logic_error&) {
                throw ConfigError("config: malformed value for '" + full + "'", full);
            }
        }
    }
    cfg.spectrum.setup = shared.setup;
    cfg.finalize(nullptr);
    return cfg;
}

RunConfig load_config(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw ConfigError("config: cannot read '" + path + "'", "config");
    std::ostringstream os;
    os << is.rdbuf();
    return parse_config(os.str());
}

std::string default_config_text() {
    RunConfig c;
    Shared s;
    std::ostringstream os;
    bool first = true;
    for (const auto& [name, fields] : schema()) {
        os << (first ? "" : "\n") << "[" << name << "]\n";
        first = false;
        for (const Field& f : fields) os << f.key << " = " << f.get(c, s) << "\n";
    }
    return os.str();
}

}  // namespace kinetic
