#include <algorithm>
#include <array>
#include <cmath>

#include "kinetic/errors.hpp"
#include "kinetic/heat_toy.hpp"
#include "kinetic/parallel.hpp"
#include "kinetic/semigroup.hpp"

namespace kinetic {

namespace {

struct Regime {
    const char* name;
    HeatParams p;
    bool gated;
};

Json fit_summary(const DecayFit& f) {
    return {{"exponent", f.exponent}, {"residual", f.residual}, {"max_deviation", f.max_deviation},
            {"early_exponent", f.early_exponent}, {"late_exponent", f.late_exponent}};
}

HeatParams make(double mu3, double lam, double gamma) {
    HeatParams p;
    p.mu = {0.0, 0.0, mu3};
    p.lam = lam;
    p.gamma = gamma;
    p.validate();
    return p;
}

}  // namespace

Report heat_rate_table(const HeatConfig& cfg) {
    if (!(cfg.t1 > 0.0 && cfg.t2 >= 10.0 * cfg.t1)) throw ConfigError("heat: fit window must span a decade", "window");
    for (double tol : {cfg.tol_slope, cfg.tol_quadrature, cfg.tol_duhamel})
        if (!(tol > 0.0)) throw ConfigError("heat: tolerances must be positive", "tolerance");
    if (!(cfg.h0.width > 0.0 && cfg.h0.amplitude > 0.0)) throw ConfigError("heat: invalid initial datum", "width");

    Report rep;
    rep.experiment = "heat";
    rep.params = {{"width", cfg.h0.width},        {"amplitude", cfg.h0.amplitude},
                  {"window", {cfg.t1, cfg.t2}},    {"per_decade", cfg.per_decade},
                  {"mu_drift", cfg.mu_drift},      {"mu_explore", cfg.mu_explore},
                  {"lam", cfg.lam_temperature},    {"gamma", cfg.gamma}};

    const std::vector<Regime> regimes{
        {"drift", make(cfg.mu_drift, 1.0, cfg.gamma), true},
        {"temperature", make(0.0, cfg.lam_temperature, cfg.gamma), true},
        {"drift_large", make(cfg.mu_explore, 1.0, cfg.gamma), false},
        {"mixed", make(cfg.mu_explore, cfg.lam_temperature, cfg.gamma), false},
    };
    std::vector<double> times = geometric_times(cfg.t1, cfg.t2, cfg.per_decade, false);
    const std::size_t nt = times.size(), nr = regimes.size();
    std::vector<double> linf(nt * nr), l2(nt * nr);
    parallel_for(nt * nr, cfg.jobs, [&](std::size_t i) {
        const Regime& r = regimes[i % nr];
        GaussianState a = heat_solution(r.p, Flow::A, cfg.h0, times[i / nr]);
        GaussianState b = heat_solution(r.p, Flow::B, cfg.h0, times[i / nr]);
        linf[i] = difference_norm(a, b, kInfNorm);
        l2[i] = difference_norm(a, b, 2.0);
    });

    Table tab;
    tab.name = "heat_rates";
    tab.columns = {"t"};
    for (const auto& r : regimes) {
        tab.columns.push_back(std::string(r.name) + "_linf");
        tab.columns.push_back(std::string(r.name) + "_l2");
        tab.columns.push_back(std::string(r.name) + "_envelope_linf");
        tab.columns.push_back(std::string(r.name) + "_envelope_l2");
    }
    for (std::size_t k = 0; k < nt; ++k) {
        std::vector<double> row{times[k]};
        const double s = 1.0 + times[k];
        for (std::size_t j = 0; j < nr; ++j) {
            const HeatParams& p = regimes[j].p;
            const double km1 = std::abs(p.kappa() - 1.0), mu = p.mu_norm(), m0 = cfg.h0.mass();
            row.push_back(linf[k * nr + j]);
            row.push_back(l2[k * nr + j]);
            row.push_back(m0 * (mu / s + km1 * std::pow(s, -1.5)));
            row.push_back(m0 * (mu * std::pow(s, -0.25) + km1 * std::pow(s, -0.75)));
        }
        tab.add(std::move(row));
    }
    rep.tables.push_back(std::move(tab));

    const double predicted[2][2] = {{-1.0, -0.25}, {-1.5, -0.75}};  // drift, temperature x (L_inf, L2)
    for (std::size_t j = 0; j < nr; ++j) {
        std::vector<double> yi(nt), y2(nt);
        for (std::size_t k = 0; k < nt; ++k) {
            yi[k] = linf[k * nr + j];
            y2[k] = l2[k * nr + j];
        }
        DecayFit fi = fit_decay(times, yi, cfg.t1, cfg.t2), f2 = fit_decay(times, y2, cfg.t1, cfg.t2);
        const std::string n = regimes[j].name;
        const int cls = n == "temperature" ? 1 : 0;
        const bool explo = !regimes[j].gated;
        const char* what = cls == 0 ? "drift" : "temperature";
        rep.add(Verdict::interval(n + ".linf", std::string("sup-norm decay exponent of the heat-flow difference, ") + what +
                                                   " term",
                                  predicted[cls][0], cfg.tol_slope, fi.exponent, explo));
        rep.add(Verdict::interval(n + ".l2", std::string("L2 decay exponent of the heat-flow difference, ") + what + " term",
                                  predicted[cls][1], cfg.tol_slope, f2.exponent, explo));
        rep.results["fits"][n] = {{"linf", fit_summary(fi)}, {"l2", fit_summary(f2)}};
    }

    // Closed forms against direct quadrature of the convolution.
    HeatParams mixed;
    mixed.mu = {0.05, -0.02, 0.1};
    mixed.lam = cfg.lam_temperature;
    mixed.gamma = cfg.gamma;
    mixed.validate();
    double quad_err = 0.0;
    for (double t : {0.5, 2.0, 10.0, 50.0})
        for (Flow f : {Flow::A, Flow::B}) {
            GaussianState s = heat_solution(mixed, f, cfg.h0, t);
            const double peak = s.value(s.center);
            for (const Vec3& off : {Vec3{0, 0, 0}, Vec3{0.7, -0.3, 1.1}, Vec3{-1.5, 2.0, 0.4}}) {
                const double sd = std::sqrt(s.variance);
                Vec3 x{s.center[0] + off[0] * sd, s.center[1] + off[1] * sd, s.center[2] + off[2] * sd};
                quad_err = std::max(quad_err, std::abs(convolve_direct(mixed, f, cfg.h0, t, x) - s.value(x)) / peak);
            }
        }
    rep.add(Verdict::at_most("closed_form.quadrature", "Gaussian closed forms match direct 3-D quadrature of the "
                                                       "convolution (relative to the peak)",
                             cfg.tol_quadrature, quad_err));

    double l2_err = 0.0;
    for (double t : {1.0, 10.0, 100.0}) {
        GaussianState a = heat_solution(mixed, Flow::A, cfg.h0, t), b = heat_solution(mixed, Flow::B, cfg.h0, t);
        const double c = difference_norm(a, b, 2.0);
        l2_err = std::max(l2_err, std::abs(difference_l2_quadrature(a, b) - c) / c);
    }
    rep.add(Verdict::at_most("closed_form.l2", "closed-form L2 norm of the difference matches axisymmetric quadrature",
                             1e-6, l2_err));

    // Duhamel split at t/2 against the closed-form difference.
    double duh = 0.0;
    Json duh_rows = Json::array();
    for (double t : cfg.duhamel_times) {
        for (const HeatParams* p : std::array<const HeatParams*, 3>{&mixed, &regimes[0].p, &regimes[1].p}) {
            SolutionDifference d;
            d.a = heat_solution(*p, Flow::A, cfg.h0, t);
            d.b = heat_solution(*p, Flow::B, cfg.h0, t);
            const double sup = difference_norm(d.a, d.b, kInfNorm);
            for (const Vec3& x : {Vec3{0, 0, 0}, Vec3{0.5 * t * p->mu[0], 0.5 * t * p->mu[1], 0.5 * t * p->mu[2]}, Vec3{1.0, -0.5, 2.0}, Vec3{-2.0, 1.0, -1.0}}) {
                DuhamelSplit s = duhamel_route(*p, cfg.h0, t, x);
                const double exact = d.a.value(x) - d.b.value(x);
                duh = std::max(duh, std::abs(s.h1 + s.h2 - exact) / sup);
            }
        }
        duh_rows.push_back(t);
    }
    rep.add(Verdict::at_most("duhamel.split", "Duhamel split at t/2 reproduces the closed-form difference (relative to "
                                              "its sup norm)",
                             cfg.tol_duhamel, duh));
    rep.results["duhamel_times"] = duh_rows;

    // Kernel lemma: norm / (t^{-3/2 (1-1/p)} (|kappa-1| + |mu| sqrt t)) stays bounded.
    HeatParams lem = make(0.1, 1.5, cfg.gamma);
    std::vector<double> lt = geometric_times(1.0, 1e4, 6, false);
    double worst_growth = -1e300, max_ratio = 0.0;
    Json lemma = Json::object();
    for (double pn : {1.0, 2.0, kInfNorm}) {
        std::vector<double> ratio;
        const double q = pn == kInfNorm ? 1.0 : 1.0 - 1.0 / pn;
        for (double t : lt) {
            double env = std::pow(t, -1.5 * q) * (std::abs(lem.kappa() - 1.0) + lem.mu_norm() * std::sqrt(t));
            ratio.push_back(kernel_difference_norm(lem, pn, t) / env);
        }
        double mx = *std::max_element(ratio.begin(), ratio.end());
        max_ratio = std::max(max_ratio, mx);
        DecayFit late = fit_decay(lt, ratio, 1e3, 1e4);
        worst_growth = std::max(worst_growth, late.exponent);
        lemma[pn == kInfNorm ? "inf" : std::to_string(static_cast<int>(pn))] = {{"max_ratio", mx},
                                                                                {"late_exponent", late.exponent}};
    }
    rep.results["kernel_lemma"] = lemma;
    rep.add(Verdict::holds("kernel_lemma.bounded",
                           "kernel difference over its envelope stays bounded for p = 1, 2, inf (max ratio shown)",
                           std::isfinite(max_ratio) && worst_growth <= 0.05, max_ratio));

    double mv = 0.0;
    for (double t : {1.0, 10.0, 100.0}) {
        const double sup = kernel_difference_norm(lem, kInfNorm, t);
        for (const Vec3& x : {Vec3{0, 0, 0}, Vec3{0.3, 0.0, 1.0}, Vec3{-1.0, 2.0, 0.5 * t * 0.1}})
            mv = std::max(mv, std::abs(mean_value_difference(lem, t, x, 64) -
                                       (heat_kernel(lem, Flow::B, t, x) - heat_kernel(lem, Flow::A, t, x))) /
                                  sup);
    }
    rep.add(Verdict::at_most("kernel_lemma.mean_value", "mean-value path in theta integrates to the kernel difference",
                             1e-10, mv));

    // Norms grow with |mu| and with |kappa - 1| at fixed t.
    bool mono = true;
    double prev = -1.0;
    for (double m : {0.01, 0.02, 0.05, 0.1}) {
        double v = kernel_difference_norm(make(m, 1.0, cfg.gamma), 2.0, 100.0);
        mono = mono && v > prev;
        prev = v;
    }
    prev = -1.0;
    for (double l : {1.1, 1.3, 1.6, 2.0}) {
        double v = kernel_difference_norm(make(0.0, l, cfg.gamma), kInfNorm, 100.0);
        mono = mono && v > prev;
        prev = v;
    }
    rep.add(Verdict::holds("envelope.monotone", "difference norms increase with the drift and the temperature ratio",
                           mono, mono ? 1.0 : 0.0));
    return rep;
}

}  // namespace kinetic
