#include <algorithm>
#include <cmath>

#include "kinetic/chi_experiment.hpp"
#include "kinetic/errors.hpp"
#include "kinetic/parallel.hpp"
#include "kinetic/suites.hpp"

namespace kinetic {

namespace {

const double kPi = 3.14159265358979323846;
const double kSound = 1.2909944487358056;  // sqrt(5/3)

std::vector<double> linspace(double lo, double hi, int n) {
    std::vector<double> r;
    for (int k = 0; k < n; ++k) r.push_back(n == 1 ? lo : lo + (hi - lo) * k / (n - 1));
    return r;
}

}  // namespace

void SpectrumConfig::validate() const {
    setup.model.validate();
    if (!(fit_r_lo > 0.0 && fit_r_hi > fit_r_lo)) throw ConfigError("spectrum: bad fit range", "fit_r");
    if (fit_samples < 6) throw ConfigError("spectrum: need at least 6 fit samples", "fit_samples");
    if (!(eigen_r > 0.0)) throw ConfigError("spectrum: eigenfunction radius must be positive", "eigen_r");
    for (double tol : {tol_speed, tol_zero_speed, tol_projector, tol_stability, tol_scaling, tol_diffusion})
        if (!(tol > 0.0)) throw ConfigError("spectrum: tolerances must be positive", "tolerance");
    if (!(overlap_min > 0.0 && overlap_min <= 1.0 && cross_max > 0.0))
        throw ConfigError("spectrum: overlap thresholds must lie in (0, 1]", "overlap");
    if (!(gap_r_max > 0.0) || gap_samples < 2) throw ConfigError("spectrum: bad gap scan", "gap_r_max");
    for (const MaxwellianParams& b : scaling_b) b.validate();
    diffusion_b.validate();
}

Report spectrum_suite(const SpectrumConfig& cfg) {
    cfg.validate();
    Report rep;
    rep.experiment = "spectrum";
    const CollisionModel& model = cfg.setup.model;
    const double gamma = model.gamma;
    GridPtr g0 = cfg.setup.grid(0), g1 = cfg.setup.grid(1);
    CollisionOperator L0 = assemble_collision(model, g0, cfg.assembly);
    CollisionOperator L1 = assemble_collision(model, g1, cfg.assembly);

    // Dispersion fits.  Labels: m = 0 {acoustic -, acoustic +, thermal},
    // m = 1 {shear}; the sin copy of the shear branch is identical.
    const std::vector<double> rs = linspace(cfg.fit_r_lo, cfg.fit_r_hi, cfg.fit_samples);
    auto s0 = track_branches(L0, rs, cfg.jobs);
    auto s1 = track_branches(L1, rs, cfg.jobs);
    auto f0 = fit_dispersion(s0, branch_labels(0));
    auto f1 = fit_dispersion(s1, branch_labels(1));
    std::vector<BranchFit> fits{f0[0], f0[1], f0[2], f1[0], f1[0]};
    fits[4].branch = 4;

    Table td;
    td.name = "dispersion";
    td.columns = {"r", "branch", "re", "im", "overlap"};
    for (const auto* ss : {&s0, &s1})
        for (const BranchSample& s : *ss) {
            const std::vector<int> labels = branch_labels(ss == &s0 ? 0 : 1);
            for (std::size_t j = 0; j < s.values.size(); ++j)
                td.add({s.r, double(labels[j]), s.values[j].real(), s.values[j].imag(),
                        j < s.overlap.size() ? s.overlap[j] : 1.0});
        }
    rep.tables.push_back(std::move(td));
    Table tf;
    tf.name = "dispersion_fits";
    tf.columns = {"branch", "a", "A", "fit_residual", "r_lo", "r_hi"};
    Json jf = Json::array();
    double min_A = 1e300, min_track = 1.0;
    for (const BranchFit& f : fits) {
        tf.add({double(f.branch), f.a, f.A, f.fit_residual, f.r_lo, f.r_hi});
        jf.push_back({{"branch", f.branch}, {"a", f.a}, {"A", f.A}, {"fit_residual", f.fit_residual}});
        min_A = std::min(min_A, f.A);
    }
    for (const auto* ss : {&s0, &s1})
        for (const BranchSample& s : *ss)
            for (double ov : s.overlap) min_track = std::min(min_track, ov);
    rep.tables.push_back(std::move(tf));

    rep.params = {{"grid", {cfg.setup.n_speed, cfg.setup.n_cosine, cfg.setup.s_max}},
                  {"gamma", gamma},
                  {"cross_section", to_string(model.cross)},
                  {"fit_r", {cfg.fit_r_lo, cfg.fit_r_hi, cfg.fit_samples}},
                  {"eigen_r", cfg.eigen_r}};
    rep.results["fits"] = jf;
    rep.results["min_tracking_overlap"] = min_track;

    const double a0 = fits[0].a;
    rep.add(Verdict::interval("dispersion.a0", "acoustic branch speed equals the sound speed sqrt(5/3)", kSound,
                              cfg.tol_speed * kSound, a0));
    rep.add(Verdict::interval("dispersion.a1", "the second acoustic branch travels at the opposite speed", -a0,
                              cfg.tol_speed * std::abs(a0), fits[1].a));
    const char* zero_names[3] = {"dispersion.a2", "dispersion.a3", "dispersion.a4"};
    const char* zero_roles[3] = {"thermal branch has zero speed", "shear branch has zero speed",
                                 "second shear branch has zero speed"};
    for (int j = 2; j < 5; ++j)
        rep.add(Verdict::at_most(zero_names[j - 2], zero_roles[j - 2], cfg.tol_zero_speed, std::abs(fits[j].a)));
    rep.add(Verdict::holds("dispersion.A_positive", "every slow branch is diffusive (smallest A shown)", min_A > 0.0,
                           min_A));
    if (gamma == 0.0 && model.cross == CrossSection::AbsCos) {
        // Chapman-Enskog values for Maxwell molecules with B = |cos|.
        const double exact[5] = {7.0 / (6.0 * kPi), 7.0 / (6.0 * kPi), 3.0 / (2.0 * kPi), 1.0 / kPi, 1.0 / kPi};
        double worst = 0.0;
        for (int j = 0; j < 5; ++j) worst = std::max(worst, std::abs(fits[j].A / exact[j] - 1.0));
        rep.add(Verdict::at_most("dispersion.A_exact",
                                 "diffusion coefficients match the Maxwell-molecule transport coefficients (worst "
                                 "relative deviation)",
                                 1e-2, worst));
    }

    // Eigenfunctions against the fluid basis at small r.
    WaveOperator w0 = assemble_wave_operator(L0, cfg.eigen_r);
    WaveOperator w1 = assemble_wave_operator(L1, cfg.eigen_r);
    auto e0 = label_slow_branches(w0, eigen_near_zero(w0, 3));
    auto e1 = label_slow_branches(w1, eigen_near_zero(w1, 1));
    double diag = 1.0, cross = 0.0;
    Table to;
    to.name = "eigenfunction_overlaps";
    to.columns = {"branch", "basis", "overlap"};
    for (int j = 0; j < 3; ++j)
        for (int l = 0; l < 3; ++l) {
            const double ov = overlap(e0[j].vec, leading_eigenfunction(g0, l));
            to.add({double(j), double(l), ov});
            if (j == l)
                diag = std::min(diag, ov);
            else
                cross = std::max(cross, ov);
        }
    const double ov3 = overlap(e1[0].vec, leading_eigenfunction(g1, 3));
    to.add({3.0, 3.0, ov3});
    diag = std::min(diag, ov3);
    rep.tables.push_back(std::move(to));
    rep.add(Verdict::holds("eigenfunctions.overlap",
                           "slow eigenfunctions at small r align with the fluid basis (smallest overlap shown)",
                           diag > cfg.overlap_min, diag));
    rep.add(Verdict::at_most("eigenfunctions.cross", "slow eigenfunctions are nearly orthogonal to the other fluid "
                                                     "basis elements",
                             cfg.cross_max, cross));

    // Projector algebra at r = 0.1.
    WaveOperator wp = assemble_wave_operator(L0, 0.1);
    auto ep = label_slow_branches(wp, eigen_near_zero(wp, 3));
    std::vector<Eigen::MatrixXcd> P;
    for (const auto& p : ep) P.push_back(spectral_projector(p));
    double proj = 0.0;
    for (int j = 0; j < 3; ++j) {
        const double scale = P[j].norm();
        proj = std::max(proj, (P[j] * P[j] - P[j]).norm() / scale);
        proj = std::max(proj, std::abs(P[j].trace() - 1.0));
        for (int l = 0; l < 3; ++l)
            if (l != j) proj = std::max(proj, (P[j] * P[l]).norm() / scale);
    }
    rep.add(Verdict::at_most("projectors.algebra",
                             "slow spectral projectors are idempotent, mutually annihilating and of unit trace",
                             cfg.tol_projector, proj));

    // Spectral stability and gap persistence.
    double max_re = -1e300;
    for (double r : cfg.stability_r)
        for (const CollisionOperator* L : {&L0, &L1})
            max_re = std::max(max_re, eigensystem(assemble_wave_operator(*L, r)).values.real().maxCoeff());
    rep.add(Verdict::at_most("spectrum.stability", "no eigenvalue of -i r xi_3 + L has positive real part",
                             cfg.tol_stability, max_re));
    GapScan gap = choose_delta(L0, linspace(cfg.gap_r_max / cfg.gap_samples, cfg.gap_r_max, cfg.gap_samples),
                               cfg.jobs);
    Table tg;
    tg.name = "gap_scan";
    tg.columns = {"r", "separation"};
    for (std::size_t k = 0; k < gap.r.size(); ++k) tg.add({gap.r[k], gap.separation[k]});
    rep.tables.push_back(std::move(tg));
    rep.results["gap"] = {{"gap0", gap.gap0}, {"r_sep", gap.r_sep}, {"delta", gap.delta}};
    rep.add(Verdict::holds("spectrum.gap_persistence",
                           "slow branches stay separated by half the r = 0 gap on a nonempty range (delta shown)",
                           gap.gap0 > 0.0 && gap.delta > 0.0, gap.delta));

    // Backgrounds: direct assembly around M_b against the change of variables.
    double worst = 0.0;
    Json jb = Json::array();
    for (const MaxwellianParams& b : cfg.scaling_b) {
        CollisionOperator Lb = assemble_Lb(BackgroundPair(b), cfg.setup, 0, cfg.assembly);
        const double d = lb_crosscheck(L0, Lb, b, gamma, cfg.scaling_r);
        worst = std::max(worst, d);
        jb.push_back({{"rho", b.rho}, {"mu", b.mu[2]}, {"lam", b.lam}, {"deviation", d}});
    }
    rep.results["background_scaling"] = jb;
    rep.add(Verdict::at_most("scaling.spectrum",
                             "spectrum around M_b matches the change-of-variables transform of the reference spectrum",
                             cfg.tol_scaling, worst));
    CollisionOperator Ld = assemble_Lb(BackgroundPair(cfg.diffusion_b), cfg.setup, 0, cfg.assembly);
    auto fd = fit_dispersion(track_branches(Ld, rs, cfg.jobs), branch_labels(0));
    double dA = 0.0;
    for (int j = 0; j < 3; ++j) {
        auto pred = predict_scaled(cfg.diffusion_b, gamma, f0[j].a, f0[j].A);
        dA = std::max(dA, std::abs(fd[j].A / pred.A - 1.0));
    }
    rep.results["diffusion_scaling"] = {{"lam", cfg.diffusion_b.lam}, {"worst_relative", dA}};
    rep.add(Verdict::at_most("scaling.diffusion",
                             "diffusion coefficients around M_b follow the temperature and density scaling",
                             cfg.tol_diffusion, dA));
    return rep;
}

}  // namespace kinetic
