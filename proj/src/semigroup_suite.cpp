#include <algorithm>
#include <cmath>

#include "kinetic/errors.hpp"
#include "kinetic/parallel.hpp"
#include "kinetic/semigroup.hpp"

namespace kinetic {

namespace {

constexpr double kPi = 3.14159265358979323846;
const double kSoundSpeed = std::sqrt(5.0 / 3.0);

double weighted_norm(const Eigen::VectorXcd& v, const Eigen::VectorXd& sqrt_w) {
    return (v.array() * sqrt_w.array().cast<cplx>()).matrix().norm();
}

// Fraction of the Plancherel integral of |phi_hat|^2 beyond r_max.
double plancherel_tail(const SpaceProfile& p, double r_max) {
    const double a = p.width * p.width;
    const double total = std::sqrt(kPi) / (4.0 * std::pow(a, 1.5));
    const double tail = r_max * std::exp(-a * r_max * r_max) / (2.0 * a) +
                        std::sqrt(kPi) / (4.0 * std::pow(a, 1.5)) * std::erfc(std::sqrt(a) * r_max);
    return tail / total;
}

// Channels of the sweep.
enum Channel {
    kKernelFull, kKernelLF, kKernelLNF, kKernelS,
    kPerpFull, kPerpLF, kPerpLNF, kPerpS,
    kAcoustic, kThermal,  // branch 0 alone, thermal branch alone
    kChannels
};

struct NodeOut {
    std::vector<int> ti;
    std::vector<std::array<Eigen::VectorXcd, kChannels>> v;
    double partition = 0.0;
    double contraction = 0.0;
    double rate_ratio = 1e300;
    bool fallback = false;
};

std::vector<double> positive_part(const std::vector<double>& t, const std::vector<double>& y, double t1, double t2,
                                  std::vector<double>& tt) {
    std::vector<double> out;
    tt.clear();
    for (std::size_t k = 0; k < t.size(); ++k)
        if (t[k] >= t1 && t[k] <= t2 && y[k] > 0.0) {
            tt.push_back(t[k]);
            out.push_back(y[k]);
        }
    return out;
}

Json fit_json(const DecayFit& f) {
    Json j;
    j["exponent"] = f.exponent;
    j["intercept"] = f.intercept;
    j["window"] = {f.t1, f.t2};
    j["residual"] = f.residual;
    j["max_deviation"] = f.max_deviation;
    j["rate"] = f.rate;
    j["rate_residual"] = f.rate_residual;
    j["early_exponent"] = f.early_exponent;
    j["late_exponent"] = f.late_exponent;
    j["superpolynomial"] = f.superpolynomial;
    j["points"] = f.points;
    return j;
}

}  // namespace

GridFunction kernel_data(const GridPtr& g) { return chi(g, 0); }

GridFunction perpendicular_data(const GridPtr& g) {
    if (g->azimuthal_sector != 0) throw PreconditionError("perpendicular_data: sector 0 grid required");
    GridFunction f = sample(g, [](double s, double c) { return s * c * (s * s - 5.0) * std::exp(-0.25 * s * s); });
    InvariantProjector P(g, Parity::Cos);
    f = P.P1(f);
    f.values /= norm(f, NormKind::l2());
    f.values *= cplx(0.0, 1.0);
    return f;
}

std::vector<ConeSample> wave_structure_scan(const RadialSynthesis& syn, int channel, double t1, double t2) {
    std::vector<ConeSample> out;
    const auto& times = syn.times();
    for (std::size_t ti = 0; ti < times.size(); ++ti) {
        if (times[ti] < t1 || times[ti] > t2) continue;
        ConeSample c;
        c.t = times[ti];
        c.peak = outer_peak_radius(syn.R_grid(static_cast<int>(ti)), syn.radial_profile(channel, static_cast<int>(ti)));
        c.ratio = c.t > 0.0 ? c.peak / c.t : 0.0;
        out.push_back(c);
    }
    return out;
}

Report decay_suite(const DecaySuiteConfig& cfg) {
    if (!(cfg.fit_t1 > 0.0 && cfg.fit_t2 >= 10.0 * cfg.fit_t1))
        throw ConfigError("semigroup: polynomial fit window must span a decade", "fit_window");
    for (double tol : {cfg.tol_l2, cfg.tol_linf, cfg.tol_steepen, cfg.tol_cone, cfg.tol_law})
        if (!(tol > 0.0)) throw ConfigError("semigroup: tolerances must be positive", "tolerance");
    if (cfg.fit_t2 > cfg.t_max || cfg.exp_t2 > cfg.t_max || cfg.cone_t2 > cfg.t_max)
        throw ConfigError("semigroup: fit windows exceed t_max", "t_max");

    Report rep;
    rep.experiment = "semigroup";
    GridPtr g = cfg.setup.grid(0);
    CollisionOperator op = assemble_collision(cfg.setup.model, g, cfg.assembly);

    double delta = cfg.delta;
    Json gap;
    if (!(delta > 0.0)) {
        std::vector<double> rs;
        for (int k = 1; k <= 40; ++k) rs.push_back(0.1 * k);
        GapScan gs = choose_delta(op, rs, cfg.jobs);
        delta = gs.delta;
        gap["gap0"] = gs.gap0;
        gap["r_sep"] = gs.r_sep;
    }
    gap["delta"] = delta;

    RGridSpec rspec = cfg.r_grid;
    rspec.t_max = cfg.t_max;
    const double tail = plancherel_tail(cfg.profile, rspec.r_max);
    if (tail > 0.01) throw NumericalError("semigroup: r-grid too coarse, Plancherel tail fraction " + format_number(tail));
    RQuadrature q = make_r_quadrature(rspec);
    std::vector<double> times = geometric_times(cfg.t_min, cfg.t_max, cfg.per_decade);

    GridFunction psi_k = kernel_data(g);
    GridFunction psi_p = perpendicular_data(g);

    RadialSynthesis::Options so;
    so.beta = cfg.beta;
    so.A_min = rspec.A_min;
    RadialSynthesis syn(g, cfg.profile, times, kChannels, so);

    double partition = 0.0, contraction = 0.0, rate_ratio = 1e300;
    int fallbacks = 0;
    const std::size_t block = 32;
    std::vector<NodeOut> outs;
    for (std::size_t b0 = 0; b0 < q.r.size(); b0 += block) {
        const std::size_t nb = std::min(block, q.r.size() - b0);
        outs.assign(nb, NodeOut{});
        parallel_for(nb, cfg.jobs, [&](std::size_t i) {
            const double r = q.r[b0 + i];
            WaveOperator w = assemble_wave_operator(op, r);
            ModePropagator mp(w, delta);
            NodeOut& o = outs[i];
            o.fallback = mp.fallback();
            const double absc = mp.eigensystem().values.real().maxCoeff();
            if (r > 0.0) o.rate_ratio = -absc / rspec.assumed_rate(r);
            const double n_k = weighted_norm(psi_k.values, w.sqrt_w), n_p = weighted_norm(psi_p.values, w.sqrt_w);
            double prev_k = n_k, prev_p = n_p;
            for (std::size_t ti = 0; ti < times.size(); ++ti) {
                const double t = times[ti];
                if (!o.fallback && absc * t < -rspec.decay_budget) continue;
                std::array<Eigen::VectorXcd, kChannels> v;
                auto sk = mp.split(psi_k.values, t);
                auto sp = mp.split(psi_p.values, t);
                v[kKernelFull] = mp.full(psi_k.values, t);
                v[kPerpFull] = mp.full(psi_p.values, t);
                for (int p = 0; p < 3; ++p) {
                    v[kKernelLF + p] = sk[p];
                    v[kPerpLF + p] = sp[p];
                }
                const double chi = mp.cutoff();
                const auto n = psi_k.values.size();
                v[kAcoustic] = chi > 0.0 ? Eigen::VectorXcd(chi * mp.fluid(psi_k.values, t, {0}))
                                         : Eigen::VectorXcd::Zero(n);
                v[kThermal] = chi > 0.0 ? Eigen::VectorXcd(chi * mp.fluid(psi_k.values, t, {2}))
                                        : Eigen::VectorXcd::Zero(n);
                o.partition = std::max(o.partition, weighted_norm(v[kKernelFull] - sk[0] - sk[1] - sk[2], w.sqrt_w) / n_k);
                o.partition = std::max(o.partition, weighted_norm(v[kPerpFull] - sp[0] - sp[1] - sp[2], w.sqrt_w) / n_p);
                const double ck = weighted_norm(v[kKernelFull], w.sqrt_w), cp = weighted_norm(v[kPerpFull], w.sqrt_w);
                o.contraction = std::max({o.contraction, (ck - prev_k) / n_k, (cp - prev_p) / n_p});
                prev_k = ck;
                prev_p = cp;
                o.ti.push_back(static_cast<int>(ti));
                o.v.push_back(std::move(v));
            }
        });
        // Fixed-order accumulation keeps the result independent of the worker count.
        for (std::size_t i = 0; i < nb; ++i) {
            const NodeOut& o = outs[i];
            partition = std::max(partition, o.partition);
            contraction = std::max(contraction, o.contraction);
            rate_ratio = std::min(rate_ratio, o.rate_ratio);
            fallbacks += o.fallback;
            for (std::size_t k = 0; k < o.ti.size(); ++k) {
                std::vector<const Eigen::VectorXcd*> ptr(kChannels);
                for (int c = 0; c < kChannels; ++c) ptr[c] = &o.v[k][c];
                syn.add(q.r[b0 + i], q.w[b0 + i], o.ti[k], ptr);
            }
        }
    }

    // Semigroup law on sampled modes and time pairs.
    double law = 0.0;
    for (double r : {0.05, 0.5, 0.75 * delta, 2.5}) {
        ModePropagator mp(assemble_wave_operator(op, r), delta);
        for (const GridFunction* psi : {&psi_k, &psi_p}) {
            const double n0 = weighted_norm(psi->values, mp.op().sqrt_w);
            for (auto [t1, t2] : {std::pair{0.5, 1.3}, std::pair{3.0, 7.0}, std::pair{10.0, 25.0}}) {
                Eigen::VectorXcd a = mp.full(psi->values, t1 + t2);
                Eigen::VectorXcd b = mp.full(mp.full(psi->values, t1), t2);
                law = std::max(law, weighted_norm(a - b, mp.op().sqrt_w) / n0);
            }
        }
    }

    std::array<NormSeries, kChannels> ns;
    for (int c = 0; c < kChannels; ++c) ns[c] = syn.series(c);

    rep.params = {{"grid", {cfg.setup.n_speed, cfg.setup.n_cosine, cfg.setup.s_max}},
                  {"gamma", cfg.setup.model.gamma},
                  {"cross_section", to_string(cfg.setup.model.cross)},
                  {"profile_width", cfg.profile.width},
                  {"times", {cfg.t_min, cfg.t_max, cfg.per_decade}},
                  {"beta", cfg.beta},
                  {"fit_window", {cfg.fit_t1, cfg.fit_t2}},
                  {"exp_window", {cfg.exp_t1, cfg.exp_t2}},
                  {"cone_window", {cfg.cone_t1, cfg.cone_t2}},
                  {"r_nodes", q.r.size()},
                  {"r_max", rspec.r_max}};
    rep.results["cutoff"] = gap;
    rep.results["fallback_modes"] = fallbacks;
    rep.results["plancherel_tail"] = tail;
    rep.results["min_rate_over_assumed"] = rate_ratio;

    const double e0 = cfg.profile.l2() * norm(psi_k, NormKind::l2());
    const double plancherel = std::abs(ns[kKernelFull].l2l2[0] - e0) / e0;

    auto poly = [&](const std::vector<double>& y) { return fit_decay(times, y, cfg.fit_t1, cfg.fit_t2); };
    auto expo = [&](int c) {
        std::vector<double> tt;
        auto y = positive_part(times, ns[c].l2l2, cfg.exp_t1, cfg.exp_t2, tt);
        return fit_decay(tt, y, tt.empty() ? cfg.exp_t1 : tt.front(), cfg.exp_t2);
    };

    const char* data_names[2] = {"kernel", "perp"};
    const int base[2] = {kKernelFull, kPerpFull};
    DecayFit lf_l2[2], lf_linf[2];
    for (int d = 0; d < 2; ++d) {
        const std::string dn = data_names[d];
        const int full = base[d], lf = base[d] + 1, lnf = base[d] + 2, sh = base[d] + 3;
        DecayFit f_full_l2 = poly(ns[full].l2l2), f_full_linf = poly(ns[full].linf_l2);
        lf_l2[d] = poly(ns[lf].l2l2);
        lf_linf[d] = poly(ns[lf].linf_l2);
        DecayFit f_lfb2 = poly(ns[lf].linfbeta_l2), f_lfbi = poly(ns[lf].linfbeta_linf);
        DecayFit f_lnf = expo(lnf), f_s = expo(sh);
        const double shift = d == 0 ? 0.0 : -0.5;
        const bool explo = d == 1;  // the perp class is gated through the steepening rows
        rep.add(Verdict::interval(dn + ".long_fluid.l2", "long-wave fluid part, L1 to L2 decay exponent",
                                  -0.75 + shift, cfg.tol_l2 + (explo ? 0.05 : 0.0), lf_l2[d].exponent, explo));
        rep.add(Verdict::interval(dn + ".long_fluid.linf", "long-wave fluid part, L1 to L-infinity decay exponent",
                                  -1.5 + shift, cfg.tol_linf, lf_linf[d].exponent, explo));
        rep.add(Verdict::interval(dn + ".full.l2", "full solution, L1 to L2 decay exponent", -0.75 + shift,
                                  cfg.tol_l2 + (explo ? 0.05 : 0.0), f_full_l2.exponent, explo));
        rep.add(Verdict::interval(dn + ".full.linf", "full solution, L1 to L-infinity decay exponent", -1.5 + shift,
                                  cfg.tol_linf, f_full_linf.exponent, true));
        rep.add(Verdict::interval(dn + ".long_fluid.linfbeta_l2",
                                  "weighted sup over velocity nodes of the L2_x norm, decay exponent", -0.75 + shift,
                                  cfg.tol_l2 + 0.05, f_lfb2.exponent, true));
        rep.add(Verdict::interval(dn + ".long_fluid.linfbeta_linf",
                                  "weighted sup over velocity nodes of the L-infinity_x norm, decay exponent",
                                  -1.5 + shift, cfg.tol_linf, f_lfbi.exponent, true));
        rep.add(Verdict::holds(dn + ".long_nonfluid.exponential",
                               "long-wave non-fluid part decays exponentially (positive log-linear rate, power law "
                               "rejected)",
                               f_lnf.rate > 0.0 && f_lnf.superpolynomial, f_lnf.rate));
        rep.add(Verdict::holds(dn + ".short.exponential",
                               "short-wave part decays exponentially (positive log-linear rate, power law rejected)",
                               f_s.rate > 0.0 && f_s.superpolynomial, f_s.rate));
        Json fj;
        fj["full_l2"] = fit_json(f_full_l2);
        fj["full_linf"] = fit_json(f_full_linf);
        fj["long_fluid_l2"] = fit_json(lf_l2[d]);
        fj["long_fluid_linf"] = fit_json(lf_linf[d]);
        fj["long_fluid_linfbeta_l2"] = fit_json(f_lfb2);
        fj["long_fluid_linfbeta_linf"] = fit_json(f_lfbi);
        fj["long_nonfluid_l2"] = fit_json(f_lnf);
        fj["short_l2"] = fit_json(f_s);
        rep.results["fits_" + dn] = fj;

        Table t;
        t.name = "semigroup_" + dn;
        t.columns = {"t", "full_l2", "full_linf_l2", "full_argmax", "long_fluid_l2", "long_fluid_linf_l2",
                     "long_fluid_argmax", "long_nonfluid_l2", "long_nonfluid_linf_l2", "short_l2", "short_linf_l2",
                     "long_fluid_linfbeta_l2", "long_fluid_linfbeta_linf"};
        for (std::size_t k = 0; k < times.size(); ++k)
            t.add({times[k], ns[full].l2l2[k], ns[full].linf_l2[k], ns[full].linf_l2_argmax[k], ns[lf].l2l2[k],
                   ns[lf].linf_l2[k], ns[lf].linf_l2_argmax[k], ns[lnf].l2l2[k], ns[lnf].linf_l2[k], ns[sh].l2l2[k],
                   ns[sh].linf_l2[k], ns[lf].linfbeta_l2[k], ns[lf].linfbeta_linf[k]});
        rep.tables.push_back(std::move(t));
    }
    rep.add(Verdict::interval("perp.long_fluid.l2.steepening",
                              "data with vanishing fluid moments decay faster in L2 by one half power", 0.5,
                              cfg.tol_steepen, lf_l2[0].exponent - lf_l2[1].exponent));
    rep.add(Verdict::interval("perp.long_fluid.linf.steepening",
                              "data with vanishing fluid moments decay faster in L-infinity by one half power", 0.5,
                              cfg.tol_steepen, lf_linf[0].exponent - lf_linf[1].exponent));

    rep.add(Verdict::at_most("law.composition", "semigroup composition residual on sampled modes", cfg.tol_law, law));
    rep.add(Verdict::at_most("law.partition", "fluid, non-fluid and short parts sum to the full mode solution",
                             cfg.tol_law, partition));
    rep.add(Verdict::at_most("law.contraction", "mode solutions are non-increasing in the weighted L2 norm", 1e-10,
                             contraction));
    rep.add(Verdict::at_most("plancherel.t0", "x-space L2 norm at t=0 equals the product of the factor norms", 1e-6,
                             plancherel));
    double imag = 0.0;
    // The single-branch acoustic channel is complex by construction.
    for (int c = 0; c < kAcoustic; ++c) imag = std::max(imag, syn.imaginary_ratio(c));
    rep.add(Verdict::at_most("realness", "synthesized x-space solutions are real", 1e-8, imag));
    rep.add(Verdict::holds("r_grid.decay_assumption",
                           "the wavenumber quadrature's assumed damping rate bounds the computed spectral abscissa",
                           rate_ratio >= 0.9, rate_ratio, true));

    auto cone = wave_structure_scan(syn, kAcoustic, cfg.cone_t1, cfg.cone_t2);
    auto thermal = wave_structure_scan(syn, kThermal, cfg.cone_t1, cfg.cone_t2);
    double worst = 0.0, worst_ratio = 0.0;
    for (const auto& c : cone) {
        double dev = std::abs(c.ratio - kSoundSpeed) / kSoundSpeed;
        if (dev >= worst) {
            worst = dev;
            worst_ratio = c.ratio;
        }
    }
    rep.add(Verdict::holds("cone.acoustic",
                           "outer peak of the acoustic part travels at the sound speed (worst peak/t shown)",
                           !cone.empty() && worst <= cfg.tol_cone, worst_ratio));
    double thermal_max = 0.0;
    for (const auto& c : thermal) thermal_max = std::max(thermal_max, c.ratio);
    rep.add(Verdict::at_most("cone.thermal", "thermal part has no outward-moving peak (max peak/t shown)",
                             0.2 * kSoundSpeed, thermal_max, true));
    rep.add(Verdict::at_most("cone.t0", "acoustic part peaks at the origin at t=0", 1e-12,
                             syn.series(kAcoustic).linf_l2_argmax[0], true));
    Table ct;
    ct.name = "semigroup_cone";
    ct.columns = {"t", "acoustic_peak", "acoustic_ratio", "thermal_peak"};
    for (std::size_t k = 0; k < cone.size(); ++k) ct.add({cone[k].t, cone[k].peak, cone[k].ratio, thermal[k].peak});
    rep.tables.push_back(std::move(ct));
    rep.results["sound_speed"] = kSoundSpeed;
    return rep;
}

}  // namespace kinetic
