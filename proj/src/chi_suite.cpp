#include <algorithm>
#include <cmath>
#include <memory>

#include "kinetic/chi_experiment.hpp"
#include "kinetic/errors.hpp"
#include "kinetic/parallel.hpp"

namespace kinetic {

namespace {

const char* kPartNames[3] = {"long_fluid", "long_nonfluid", "short"};

double weighted_norm(const Eigen::VectorXcd& v, const Eigen::VectorXd& sqrt_w) {
    return (v.array() * sqrt_w.array().cast<cplx>()).matrix().norm();
}

Json fit_json(const DecayFit& f) {
    return {{"exponent", f.exponent}, {"window", {f.t1, f.t2}},  {"residual", f.residual},
            {"rate", f.rate},         {"rate_residual", f.rate_residual}, {"early_exponent", f.early_exponent},
            {"late_exponent", f.late_exponent}, {"superpolynomial", f.superpolynomial}};
}

Json params_json(const MaxwellianParams& b) { return {{"rho", b.rho}, {"mu", b.mu[2]}, {"lam", b.lam}}; }

// Background with a single deviation (0: rho, 1: mu, 2: lam) taken from b and scaled by s.
MaxwellianParams single_deviation(const MaxwellianParams& b, int which, double s) {
    MaxwellianParams p;
    if (which == 0) p.rho = 1.0 + s * (b.rho - 1.0);
    if (which == 1) p.mu[2] = s * b.mu[2];
    if (which == 2) p.lam = 1.0 + s * (b.lam - 1.0);
    return p;
}

// Channels of the decomposition synthesis at the sample time: total, the 18
// parts, and the long-fluid x long-fluid and short x short sums.
enum { kDecTotal = 0, kDecParts = 1, kDecFluidFluid = 1 + Chi11Mode::kParts, kDecShortShort, kDecChannels };

struct MainNode {
    std::vector<int> ti;
    std::vector<Eigen::VectorXcd> total;
    std::vector<Eigen::VectorXcd> dec;  // at the sample time, empty if dropped
    std::vector<int> ei;                // short x short over the exponential window
    std::vector<Eigen::VectorXcd> short_short;
    double sum_residual = 0.0;
    bool fallback = false;
};

struct ScanNode {
    std::vector<std::vector<Eigen::VectorXcd>> v;  // [time][background]
};

double automatic_delta(const CollisionOperator& La, int jobs, Json& gap) {
    std::vector<double> rs;
    for (int k = 1; k <= 40; ++k) rs.push_back(0.1 * k);
    GapScan gs = choose_delta(La, rs, jobs);
    gap["gap0"] = gs.gap0;
    gap["r_sep"] = gs.r_sep;
    return gs.delta;
}

DecayFit fit_after_peak(const std::vector<double>& t, const std::vector<double>& y, double t1, double t2,
                        double& t_peak) {
    std::size_t k = std::max_element(y.begin(), y.end()) - y.begin();
    t_peak = t[k];
    return fit_decay(t, y, t1, t2);
}

}  // namespace

Report chi_experiment(const ChiConfig& cfg) {
    cfg.validate();
    Report rep;
    rep.experiment = "chi1";
    const double B = macro_error(cfg.b);

    GridPtr ga = cfg.setup.grid(0);
    CollisionModel ma = cfg.setup.model;
    ma.background = MaxwellianParams{};
    CollisionOperator La = assemble_collision(ma, ga, cfg.assembly);
    Json gap;
    const double delta = cfg.delta > 0.0 ? cfg.delta : automatic_delta(La, cfg.jobs, gap);
    gap["delta"] = delta;

    ChiOperators base = assemble_chi_operators(cfg, cfg.b, La);

    // The range of T misses the collision invariants.
    InvariantProjector P(ga);
    GridFunction Tf = base.T.T.apply(base.f0b);
    const double tf = norm(Tf, NormKind::l2());
    const double p0_defect = norm(P.P0(Tf), NormKind::l2()) / tf;

    RGridSpec rspec = cfg.r_grid;
    rspec.t_max = cfg.t_max;
    RQuadrature q = make_r_quadrature(rspec);
    std::vector<double> times = geometric_times(cfg.t_min, cfg.t_max, cfg.per_decade);
    std::vector<double> dtimes = geometric_times(cfg.t_min, cfg.t_max, cfg.decomposition_per_decade);
    if (std::find(dtimes.begin(), dtimes.end(), cfg.decomposition_time) == dtimes.end()) {
        dtimes.push_back(cfg.decomposition_time);
        std::sort(dtimes.begin(), dtimes.end());
    }
    std::vector<double> etimes;
    for (double t : dtimes)
        if (t >= cfg.exp_t1 && t <= cfg.exp_t2) etimes.push_back(t);

    RadialSynthesis::Options so;
    so.beta = cfg.beta;
    so.A_min = rspec.A_min;
    RadialSynthesis syn(ga, cfg.profile, times, 1, so);
    // Pointwise norms of the parts are needed only at the sample time; the
    // exponential fit of short x short uses the L2 norm alone.
    RadialSynthesis dsyn(ga, cfg.profile, {cfg.decomposition_time}, kDecChannels, so);
    RadialSynthesis::Options eo = so;
    eo.pointwise = false;
    RadialSynthesis esyn(ga, cfg.profile, etimes, 1, eo);

    double sum_residual = 0.0;
    int fallbacks = 0;
    const std::size_t block = 32;
    std::vector<MainNode> outs;
    for (std::size_t b0 = 0; b0 < q.r.size(); b0 += block) {
        const std::size_t nb = std::min(block, q.r.size() - b0);
        outs.assign(nb, MainNode{});
        parallel_for(nb, cfg.jobs, [&](std::size_t i) {
            const double r = q.r[b0 + i];
            ModePropagator pa(assemble_wave_operator(La, r), delta);
            ModePropagator pb(assemble_wave_operator(base.Lb, r), delta);
            Chi11Mode m(pa, pb, base.T.T.entries, base.f0b.values, cfg.epsilon);
            MainNode& o = outs[i];
            o.fallback = m.fallback();
            const double abscissa = m.abscissa();
            auto dropped = [&](double t) { return t == 0.0 || abscissa * t < -rspec.decay_budget; };
            for (std::size_t ti = 0; ti < times.size(); ++ti) {
                if (dropped(times[ti])) continue;
                o.ti.push_back(static_cast<int>(ti));
                o.total.push_back(m.total(times[ti]));
            }
            for (std::size_t di = 0; di < dtimes.size(); ++di) {
                const double t = dtimes[di];
                if (dropped(t)) continue;
                auto parts = m.parts(t);
                Eigen::VectorXcd total = m.total(t);
                Eigen::VectorXcd sum = Eigen::VectorXcd::Zero(total.size());
                double biggest = weighted_norm(total, pa.op().sqrt_w);
                for (int k = 0; k < Chi11Mode::kParts; ++k) {
                    sum += parts[k];
                    biggest = std::max(biggest, weighted_norm(parts[k], pa.op().sqrt_w));
                }
                if (biggest > 0.0)
                    o.sum_residual = std::max(o.sum_residual, weighted_norm(sum - total, pa.op().sqrt_w) / biggest);
                Eigen::VectorXcd ss = parts[Chi11Mode::part_index(2, 2, 0)] + parts[Chi11Mode::part_index(2, 2, 1)];
                auto ei = std::find(etimes.begin(), etimes.end(), t);
                if (ei != etimes.end()) {
                    o.ei.push_back(static_cast<int>(ei - etimes.begin()));
                    o.short_short.push_back(ss);
                }
                if (t == cfg.decomposition_time) {
                    o.dec.resize(kDecChannels);
                    o.dec[kDecTotal] = std::move(total);
                    o.dec[kDecFluidFluid] =
                        parts[Chi11Mode::part_index(0, 0, 0)] + parts[Chi11Mode::part_index(0, 0, 1)];
                    o.dec[kDecShortShort] = std::move(ss);
                    for (int k = 0; k < Chi11Mode::kParts; ++k) o.dec[kDecParts + k] = std::move(parts[k]);
                }
            }
        });
        for (std::size_t i = 0; i < nb; ++i) {
            const MainNode& o = outs[i];
            const double r = q.r[b0 + i], w = q.w[b0 + i];
            sum_residual = std::max(sum_residual, o.sum_residual);
            fallbacks += o.fallback;
            for (std::size_t k = 0; k < o.ti.size(); ++k) syn.add(r, w, o.ti[k], {&o.total[k]});
            for (std::size_t k = 0; k < o.ei.size(); ++k) esyn.add(r, w, o.ei[k], {&o.short_short[k]});
            if (!o.dec.empty()) {
                std::vector<const Eigen::VectorXcd*> ptr(kDecChannels);
                for (int c = 0; c < kDecChannels; ++c) ptr[c] = &o.dec[c];
                dsyn.add(r, w, 0, ptr);
            }
        }
    }

    // Closed-form mode solution against the block exponential on sample modes.
    double block_dev = 0.0;
    for (double r : {0.05, 0.5, 0.75 * delta, 2.5}) {
        ModePropagator pa(assemble_wave_operator(La, r), delta);
        ModePropagator pb(assemble_wave_operator(base.Lb, r), delta);
        Chi11Mode m(pa, pb, base.T.T.entries, base.f0b.values, cfg.epsilon);
        for (double t : {1.0, 20.0, 200.0}) {
            Eigen::VectorXcd ref = m.reference_total(t);
            const double scale = weighted_norm(ref, pa.op().sqrt_w);
            if (scale > 0.0)
                block_dev = std::max(block_dev, weighted_norm(m.total(t) - ref, pa.op().sqrt_w) / scale);
        }
    }

    rep.params = {{"grid", {cfg.setup.n_speed, cfg.setup.n_cosine, cfg.setup.s_max}},
                  {"gamma", cfg.setup.model.gamma},
                  {"cross_section", to_string(cfg.setup.model.cross)},
                  {"background", params_json(cfg.b)},
                  {"macro_error", B},
                  {"beta", cfg.beta},
                  {"xi_profile", to_string(cfg.xi)},
                  {"profile_width", cfg.profile.width},
                  {"epsilon", cfg.epsilon},
                  {"times", {cfg.t_min, cfg.t_max, cfg.per_decade}},
                  {"fit_window", {cfg.fit_t1, cfg.fit_t2}},
                  {"scan_times", cfg.scan_times},
                  {"scales", cfg.scales},
                  {"r_nodes", q.r.size()}};
    rep.results["cutoff"] = gap;
    rep.results["fallback_modes"] = fallbacks;
    rep.results["lb_crosscheck"] = base.crosscheck;
    rep.results["source_raw_invariant_defect"] = base.T.raw_invariant_defect;

    NormSeries ns = syn.series(0);
    double peak_inf = 0.0, peak_2 = 0.0, peak_a = 0.0, peak_b = 0.0;
    DecayFit f_inf = fit_after_peak(times, ns.linfbeta_linf, cfg.fit_t1, cfg.fit_t2, peak_inf);
    DecayFit f_2 = fit_after_peak(times, ns.linfbeta_l2, cfg.fit_t1, cfg.fit_t2, peak_2);
    DecayFit f_xl = fit_after_peak(times, ns.linf_l2, cfg.fit_t1, cfg.fit_t2, peak_a);
    DecayFit f_x2 = fit_after_peak(times, ns.l2l2, cfg.fit_t1, cfg.fit_t2, peak_b);
    rep.results["fits"] = {{"linfbeta_linf", fit_json(f_inf)},
                           {"linfbeta_l2", fit_json(f_2)},
                           {"linf_l2", fit_json(f_xl)},
                           {"l2_l2", fit_json(f_x2)}};
    rep.results["peak_time"] = {{"linfbeta_linf", peak_inf}, {"linfbeta_l2", peak_2}};

    rep.add(Verdict::interval("chi11.linf", "chi_11 weighted sup-velocity, sup-space decay exponent", -1.0,
                              cfg.tol_linf, f_inf.exponent));
    rep.add(Verdict::interval("chi11.l2", "chi_11 weighted sup-velocity, L2-space decay exponent", -0.25, cfg.tol_l2,
                              f_2.exponent));
    rep.add(Verdict::at_most("chi11.beats_naive",
                             "chi_11 sup-space exponent is steeper than the naive three-quarter bound",
                             cfg.naive_bound, f_inf.exponent));
    rep.add(Verdict::holds("chi11.peak_before_window", "chi_11 norms peak before the fit window opens (peak time shown)",
                           std::max(peak_inf, peak_2) < cfg.fit_t1, std::max(peak_inf, peak_2)));
    rep.add(Verdict::interval("chi11.linf_l2", "chi_11 sup-space L2-velocity decay exponent", -1.0, cfg.tol_linf,
                              f_xl.exponent, true));
    rep.add(Verdict::interval("chi11.l2_l2", "chi_11 L2-space L2-velocity decay exponent", -0.25, cfg.tol_l2,
                              f_x2.exponent, true));
    rep.add(Verdict::holds("chi11.t0", "chi_11 vanishes at t = 0", ns.linfbeta_linf[0] == 0.0 && ns.l2l2[0] == 0.0,
                           ns.linfbeta_linf[0]));
    rep.add(Verdict::at_most("source.invariants", "the source term has no component along the collision invariants",
                             cfg.tol_invariant, p0_defect));
    rep.add(Verdict::at_most("lb.crosscheck", "spectrum of L_b matches the change-of-variables transform of L_a",
                             cfg.tol_crosscheck, base.crosscheck));
    rep.add(Verdict::at_most("mode.block_exponential",
                             "closed-form mode solution agrees with the block-exponential evaluation", 1e-8, block_dev));

    Table ts;
    ts.name = "chi11_series";
    ts.columns = {"t",        "linfbeta_linf", "linfbeta_l2",         "linf_l2",
                  "l2_l2",    "linf_argmax",   "linfbeta_linf_over_B", "linfbeta_l2_over_B"};
    for (std::size_t k = 0; k < times.size(); ++k)
        ts.add({times[k], ns.linfbeta_linf[k], ns.linfbeta_l2[k], ns.linf_l2[k], ns.l2l2[k],
                std::isnan(ns.linf_l2_argmax[k]) ? 0.0 : ns.linf_l2_argmax[k], ns.linfbeta_linf[k] / B,
                ns.linfbeta_l2[k] / B});
    rep.tables.push_back(std::move(ts));

    // Decomposition into outer part x inner part x time half.
    std::vector<NormSeries> dn(kDecChannels);
    for (int c = 0; c < kDecChannels; ++c) dn[c] = dsyn.series(c);
    const int d_at = 0;
    const double tot_inf = dn[kDecTotal].linfbeta_linf[d_at], tot_2 = dn[kDecTotal].linfbeta_l2[d_at];
    Table td;
    td.name = "chi11_decomposition";
    td.columns = {"outer", "inner", "half", "linfbeta_linf", "linfbeta_l2", "linf_share", "l2_share"};
    Json parts = Json::array();
    for (int p = 0; p < 3; ++p)
        for (int qq = 0; qq < 3; ++qq)
            for (int h = 0; h < 2; ++h) {
                const NormSeries& s = dn[kDecParts + Chi11Mode::part_index(p, qq, h)];
                td.add({double(p), double(qq), double(h), s.linfbeta_linf[d_at], s.linfbeta_l2[d_at],
                        s.linfbeta_linf[d_at] / tot_inf, s.linfbeta_l2[d_at] / tot_2});
                parts.push_back({{"outer", kPartNames[p]},
                                 {"inner", kPartNames[qq]},
                                 {"half", h == 0 ? "early" : "late"},
                                 {"linf_share", s.linfbeta_linf[d_at] / tot_inf},
                                 {"l2_share", s.linfbeta_l2[d_at] / tot_2}});
            }
    rep.tables.push_back(std::move(td));
    const double ff_share = dn[kDecFluidFluid].linfbeta_linf[d_at] / tot_inf;
    rep.results["decomposition"] = {{"time", cfg.decomposition_time},
                                    {"parts", parts},
                                    {"fluid_fluid_linf_share", ff_share},
                                    {"fluid_fluid_l2_share", dn[kDecFluidFluid].linfbeta_l2[d_at] / tot_2}};
    NormSeries es = esyn.series(0);
    std::vector<double> tt, yy;
    for (std::size_t k = 0; k < etimes.size(); ++k)
        if (es.l2l2[k] > 0.0) {
            tt.push_back(etimes[k]);
            yy.push_back(es.l2l2[k]);
        }
    DecayFit f_ss = fit_exponential(tt, yy, cfg.exp_t1, cfg.exp_t2);
    rep.results["decomposition"]["short_short"] = fit_json(f_ss);
    rep.add(Verdict::holds("decomposition.fluid_dominates",
                           "long-fluid outer x long-fluid inner part carries most of the sup norm at the sample time "
                           "(share shown)",
                           ff_share >= cfg.dominance, ff_share));
    rep.add(Verdict::holds("decomposition.short_exponential",
                           "short x short part decays exponentially (positive log-linear rate, power law rejected)",
                           f_ss.rate > 0.0 && f_ss.superpolynomial, f_ss.rate));
    rep.add(Verdict::at_most("decomposition.sum", "the eighteen parts sum to chi_11 mode by mode", cfg.tol_sum,
                             sum_residual));

    // Linearity in the background deviation: joint scaling, then each
    // deviation on its own at full and half size.
    std::vector<MaxwellianParams> bs;
    for (double s : cfg.scales) bs.push_back(scale_deviation(cfg.b, s));
    const std::size_t n_joint = bs.size();
    for (int which = 0; which < 3; ++which)
        for (double s : {1.0, 0.5}) bs.push_back(single_deviation(cfg.b, which, s));
    std::vector<std::unique_ptr<ChiOperators>> ops;
    for (std::size_t k = 0; k < bs.size(); ++k) {
        if (k == 0) {
            ops.push_back(nullptr);
            continue;
        }
        ops.push_back(std::make_unique<ChiOperators>(assemble_chi_operators(cfg, bs[k], La)));
    }
    auto op_of = [&](std::size_t k) -> const ChiOperators& { return k == 0 ? base : *ops[k]; };

    RGridSpec sspec = rspec;
    sspec.t_max = cfg.scan_times.back();
    RQuadrature sq = make_r_quadrature(sspec);
    const int nbg = static_cast<int>(bs.size());
    RadialSynthesis ssyn(ga, cfg.profile, cfg.scan_times, nbg, so);
    std::vector<ScanNode> souts;
    for (std::size_t b0 = 0; b0 < sq.r.size(); b0 += block) {
        const std::size_t nb = std::min(block, sq.r.size() - b0);
        souts.assign(nb, ScanNode{});
        parallel_for(nb, cfg.jobs, [&](std::size_t i) {
            const double r = sq.r[b0 + i];
            ModePropagator pa(assemble_wave_operator(La, r), delta);
            ScanNode& o = souts[i];
            o.v.assign(cfg.scan_times.size(), std::vector<Eigen::VectorXcd>(nbg));
            for (int k = 0; k < nbg; ++k) {
                const ChiOperators& op = op_of(k);
                ModePropagator pb(assemble_wave_operator(op.Lb, r), delta);
                Chi11Mode m(pa, pb, op.T.T.entries, op.f0b.values, cfg.epsilon);
                for (std::size_t ti = 0; ti < cfg.scan_times.size(); ++ti) {
                    const double t = cfg.scan_times[ti];
                    o.v[ti][k] = m.abscissa() * t < -sspec.decay_budget ? Eigen::VectorXcd::Zero(ga->size())
                                                                          : m.total(t);
                }
            }
        });
        for (std::size_t i = 0; i < nb; ++i)
            for (std::size_t ti = 0; ti < cfg.scan_times.size(); ++ti) {
                std::vector<const Eigen::VectorXcd*> ptr(nbg);
                for (int k = 0; k < nbg; ++k) ptr[k] = &souts[i].v[ti][k];
                ssyn.add(sq.r[b0 + i], sq.w[b0 + i], static_cast<int>(ti), ptr);
            }
    }
    std::vector<NormSeries> sn(nbg);
    for (int k = 0; k < nbg; ++k) sn[k] = ssyn.series(k);

    // Worst |N(s) / (s N(1)) - 1| over both gated norms and all scan times.
    auto linear_dev = [&](int k1, int ks, double s) {
        double worst = 0.0;
        for (std::size_t ti = 0; ti < cfg.scan_times.size(); ++ti)
            for (auto member : {&NormSeries::linfbeta_linf, &NormSeries::linfbeta_l2}) {
                const double n1 = (sn[k1].*member)[ti], nsv = (sn[ks].*member)[ti];
                worst = std::max(worst, std::abs(nsv / (s * n1) - 1.0));
            }
        return worst;
    };
    Table tl;
    tl.name = "chi11_linearity";
    tl.columns = {"set", "scale", "t", "linfbeta_linf", "linfbeta_l2", "linf_ratio", "l2_ratio"};
    auto table_rows = [&](int set, int k1, int ks, double s) {
        for (std::size_t ti = 0; ti < cfg.scan_times.size(); ++ti)
            tl.add({double(set), s, cfg.scan_times[ti], sn[ks].linfbeta_linf[ti], sn[ks].linfbeta_l2[ti],
                    sn[ks].linfbeta_linf[ti] / (s * sn[k1].linfbeta_linf[ti]),
                    sn[ks].linfbeta_l2[ti] / (s * sn[k1].linfbeta_l2[ti])});
    };
    double joint = 0.0;
    for (std::size_t k = 0; k < n_joint; ++k) {
        joint = std::max(joint, linear_dev(0, static_cast<int>(k), cfg.scales[k]));
        table_rows(0, 0, static_cast<int>(k), cfg.scales[k]);
    }
    rep.add(Verdict::at_most("linearity.joint",
                             "norms scale linearly when all background deviations shrink together (worst relative "
                             "deviation)",
                             cfg.tol_linear, joint));
    const char* dev_names[3] = {"density", "velocity", "temperature"};
    Json per = Json::object();
    for (int which = 0; which < 3; ++which) {
        const int k1 = static_cast<int>(n_joint) + 2 * which, kh = k1 + 1;
        table_rows(1 + which, k1, kh, 0.5);
        const double dev = linear_dev(k1, kh, 0.5);
        rep.add(Verdict::at_most(std::string("linearity.") + dev_names[which],
                                 std::string("norms halve when only the ") + dev_names[which] +
                                     " deviation is halved (worst relative deviation)",
                                 cfg.tol_linear, dev));
        DecayFit fi = fit_decay(cfg.scan_times, sn[k1].linfbeta_linf, cfg.scan_times.front(), cfg.scan_times.back());
        DecayFit f2 = fit_decay(cfg.scan_times, sn[k1].linfbeta_l2, cfg.scan_times.front(), cfg.scan_times.back());
        per[dev_names[which]] = {{"background", params_json(bs[k1])},
                                 {"linf_exponent", fi.exponent},
                                 {"l2_exponent", f2.exponent}};
        if (which == 1) {
            // The velocity deviation alone carries the leading t^-1 term.
            rep.add(Verdict::interval("chi11.velocity_only.linf",
                                      "velocity-deviation-only chi_11 sup-space exponent over the scan times", -1.0,
                                      cfg.tol_linf, fi.exponent, true));
            rep.add(Verdict::interval("chi11.velocity_only.l2",
                                      "velocity-deviation-only chi_11 L2-space exponent over the scan times", -0.25,
                                      cfg.tol_l2, f2.exponent, true));
        }
    }
    rep.results["single_deviation_exponents"] = per;
    rep.tables.push_back(std::move(tl));
    return rep;
}

}  // namespace kinetic
