#include <algorithm>
#include <cmath>
#include <random>

#include "kinetic/errors.hpp"
#include "kinetic/suites.hpp"

namespace kinetic {

namespace {

const double kPi = 3.14159265358979323846;

// Eigenvalues of L in W-orthonormal coordinates, descending.
Eigen::VectorXd sym_eigenvalues(const CollisionOperator& op) {
    Eigen::MatrixXd S = to_symmetric_coordinates(op.L, op.grid->weights());
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (S + S.transpose()), Eigen::EigenvaluesOnly);
    if (es.info() != Eigen::Success) throw NumericalError("lemmas: symmetric eigensolve failed");
    return es.eigenvalues().reverse();
}

struct Structure {
    int null_m0 = 0, null_m1 = 0;
    double nu0 = 0.0;       // minus the largest non-null eigenvalue over both sectors
    double norm = 0.0;      // largest |eigenvalue|
    double symmetry = 0.0;  // |WL - (WL)^T| / |WL|
    double raw_symmetry = 0.0;
    Eigen::VectorXd ev0, ev1;
};

Structure structure(const CollisionModel& model, const OperatorSetup& s, double tol_null, const AssemblyOptions& opts,
                    CollisionOperator* keep_m0) {
    Structure out;
    CollisionOperator L0 = assemble_collision(model, build_grid(s.n_speed, s.n_cosine, s.s_max, 0), opts);
    CollisionOperator L1 = assemble_collision(model, build_grid(s.n_speed, s.n_cosine, s.s_max, 1), opts);
    out.ev0 = sym_eigenvalues(L0);
    out.ev1 = sym_eigenvalues(L1);
    out.norm = std::max(out.ev0.cwiseAbs().maxCoeff(), out.ev1.cwiseAbs().maxCoeff());
    double top = -1e300;
    auto count = [&](const Eigen::VectorXd& ev, int& n) {
        for (int k = 0; k < ev.size(); ++k) {
            if (std::abs(ev(k)) < tol_null * out.norm)
                ++n;
            else
                top = std::max(top, ev(k));
        }
    };
    count(out.ev0, out.null_m0);
    count(out.ev1, out.null_m1);
    out.nu0 = -top;
    for (const CollisionOperator* op : {&L0, &L1}) {
        Eigen::MatrixXd WL = op->grid->weights().asDiagonal() * op->L;
        out.symmetry = std::max(out.symmetry, (WL - WL.transpose()).norm() / WL.norm());
        out.raw_symmetry = std::max(out.raw_symmetry, op->raw_symmetry_defect);
    }
    if (keep_m0) *keep_m0 = std::move(L0);
    return out;
}

GridFunction random_function(const GridPtr& g, std::mt19937_64& rng) {
    std::normal_distribution<double> n;
    return sample(g, [&](double s, double) { return n(rng) * std::exp(-s * s / 8.0); });
}

}  // namespace

void LemmaConfig::validate() const {
    setup.model.validate();
    if (setup.n_speed < 8 || setup.n_cosine < 4 || setup.n_speed % 2 || setup.n_cosine % 2)
        throw ConfigError("lemmas: grid must be even-sized and at least 8 x 4 so that it can be halved", "grid");
    for (double tol : {tol_null, tol_symmetry, tol_refine, tol_lemma_refine, tol_linear, tol_mean_value,
                       tol_sqrt_ratio, tol_invariant})
        if (!(tol > 0.0)) throw ConfigError("lemmas: tolerances must be positive", "tolerance");
    if (n_random < 1) throw ConfigError("lemmas: need at least one random function", "n_random");
    if (!(lam_bar > 1.0 && lam_bar < 2.0)) throw ConfigError("lemmas: lambda_bar must lie in (1, 2)", "lambda_bar");
    if (!(beta >= 0.0)) throw ConfigError("lemmas: beta must be non-negative", "beta");
    for (const MaxwellianParams* b : {&lemma_b, &linear_b, &source_b}) {
        b->validate();
        if (!(b->lam > 1.0 && b->lam < lam_bar))
            throw ConfigError("lemmas: background temperature must lie in (1, lambda_bar)", "lambda");
        if (macro_error(*b) == 0.0) throw ConfigError("lemmas: background equals the reference", "lambda");
    }
    if (scales.empty() || scales.front() != 1.0) throw ConfigError("lemmas: scales must start at 1", "scales");
}

Report lemma_suite(const LemmaConfig& cfg) {
    cfg.validate();
    Report rep;
    rep.experiment = "lemmas";
    const CollisionModel& model = cfg.setup.model;
    const double gamma = model.gamma;

    // Structure of L on the main grid and on the grid with half the nodes per axis.
    CollisionOperator L0;
    Structure fine = structure(model, cfg.setup, cfg.tol_null, cfg.assembly, &L0);
    OperatorSetup half = cfg.setup;
    half.n_speed /= 2;
    half.n_cosine /= 2;
    Structure coarse = structure(model, half, cfg.tol_null, cfg.assembly, nullptr);

    // The m = 1 sector carries one parity; its sin copy is identical.
    const int null_dim = fine.null_m0 + 2 * fine.null_m1;
    const double refine = std::abs(fine.nu0 - coarse.nu0) / fine.nu0;

    // Coercivity against |P1 g|_sigma with the best constant of the
    // generalized problem on range(P1).
    GridPtr g0 = L0.grid;
    InvariantProjector P(g0);
    Eigen::VectorXd w = g0->weights();
    Eigen::MatrixXd S = to_symmetric_coordinates(L0.L, w);
    S = 0.5 * (S + S.transpose());
    Eigen::MatrixXd Pm = to_symmetric_coordinates(P.P1_matrix(), w);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> pe(0.5 * (Pm + Pm.transpose()));
    const int rank = static_cast<int>(std::lround(pe.eigenvalues().sum()));
    Eigen::MatrixXd Q = pe.eigenvectors().rightCols(rank);
    Eigen::VectorXd sig(g0->size());
    for (int i = 0; i < g0->size(); ++i) sig(i) = std::pow(bracket(g0->abs_xi(i)), gamma);
    Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> ges(-Q.transpose() * S * Q,
                                                                 Q.transpose() * sig.asDiagonal() * Q);
    const double nu_sigma = ges.eigenvalues().minCoeff();
    std::mt19937_64 rng(cfg.seed);
    double worst_coercive = 1e300, worst_sign = -1e300;
    for (int k = 0; k < cfg.n_random; ++k) {
        GridFunction g = random_function(g0, rng);
        const double lhs = inner(g, L0.as_L().apply(g)).real();
        const double p1 = norm(P.P1(g), NormKind::lsigma(gamma));
        worst_coercive = std::min(worst_coercive, -lhs / (nu_sigma * p1 * p1));
        worst_sign = std::max(worst_sign, lhs / std::pow(norm(g, NormKind::l2()), 2));
    }

    rep.params = {{"grid", {cfg.setup.n_speed, cfg.setup.n_cosine, cfg.setup.s_max}},
                  {"coarse_grid", {half.n_speed, half.n_cosine, half.s_max}},
                  {"gamma", gamma},
                  {"cross_section", to_string(model.cross)},
                  {"quadrature", model.quad.to_text()},
                  {"seed", cfg.seed},
                  {"n_random", cfg.n_random},
                  {"beta", cfg.beta},
                  {"lambda_bar", cfg.lam_bar}};
    rep.results["structure"] = {{"null_m0", fine.null_m0},
                                {"null_m1_per_parity", fine.null_m1},
                                {"nu0", fine.nu0},
                                {"nu0_coarse", coarse.nu0},
                                {"operator_norm", fine.norm},
                                {"raw_symmetry_defect", fine.raw_symmetry},
                                {"nu_sigma", nu_sigma}};

    rep.add(Verdict::holds("collision.null_dimension",
                           "five collision invariants span the null space across the m = 0 and m = 1 sectors "
                           "(dimension shown)",
                           null_dim == 5, null_dim));
    rep.add(Verdict::holds("collision.gap", "the first non-null eigenvalue is bounded away from zero (nu0 shown)",
                           fine.nu0 > 0.0, fine.nu0));
    rep.add(Verdict::at_most("collision.gap_refinement", "nu0 changes little when the grid is halved per axis",
                             cfg.tol_refine, refine));
    if (gamma == 0.0 && model.cross == CrossSection::AbsCos)
        rep.add(Verdict::interval("collision.gap_exact", "Maxwell-molecule gap equals 2 pi / 3", 2.0 * kPi / 3.0,
                                  1e-3 * 2.0 * kPi / 3.0, fine.nu0));
    rep.add(Verdict::at_most("collision.self_adjoint", "L is symmetric in the quadrature inner product",
                             cfg.tol_symmetry, fine.symmetry));
    rep.add(Verdict::holds("collision.coercivity",
                           "<g, L g> <= -nu0 |P1 g|_sigma^2 on seeded random functions (worst ratio shown)",
                           worst_coercive >= 1.0 - 1e-9 && nu_sigma > 0.0, worst_coercive));
    rep.add(Verdict::at_most("collision.dissipative", "<g, L g> <= 0 on seeded random functions (worst quotient)",
                             1e-12, worst_sign));

    Table te;
    te.name = "collision_spectrum";
    te.columns = {"sector", "index", "eigenvalue", "eigenvalue_coarse"};
    for (int m = 0; m < 2; ++m) {
        const Eigen::VectorXd& ev = m == 0 ? fine.ev0 : fine.ev1;
        const Eigen::VectorXd& evc = m == 0 ? coarse.ev0 : coarse.ev1;
        for (int k = 0; k < ev.size(); ++k)
            te.add({double(m), double(k), ev(k), k < evc.size() ? evc(k) : std::nan("")});
    }
    rep.tables.push_back(std::move(te));

    // Maxwellian-difference bound.
    GridPtr gl = build_grid(cfg.setup.n_speed, cfg.setup.n_cosine, cfg.setup.s_max, 0);
    GridPtr gl2 = build_grid(2 * cfg.setup.n_speed, 2 * cfg.setup.n_cosine, cfg.setup.s_max, 0);
    const double r1 = lemma_bound_ratio(cfg.lemma_b, cfg.beta, *gl, cfg.lam_bar);
    const double r2 = lemma_bound_ratio(cfg.lemma_b, cfg.beta, *gl2, cfg.lam_bar);
    rep.add(Verdict::holds("maxwell.bound_finite", "the Maxwellian-difference bound ratio is finite (ratio shown)",
                           std::isfinite(r1) && r1 > 0.0, r1));
    rep.add(Verdict::at_most("maxwell.bound_refinement", "bound ratio is stable when the grid is doubled per axis",
                             cfg.tol_lemma_refine, std::abs(r1 - r2) / r2));
    Table tb;
    tb.name = "maxwell_bound";
    tb.columns = {"scale", "macro_error", "ratio", "ratio_over_base"};
    const double ref = lemma_bound_ratio(cfg.linear_b, cfg.beta, *gl, cfg.lam_bar);
    double lin = 0.0;
    for (double s : cfg.scales) {
        MaxwellianParams bs = scale_deviation(cfg.linear_b, s);
        const double r = lemma_bound_ratio(bs, cfg.beta, *gl, cfg.lam_bar);
        lin = std::max(lin, std::abs(r / ref - 1.0));
        tb.add({s, macro_error(bs), r, r / ref});
    }
    rep.tables.push_back(std::move(tb));
    rep.add(Verdict::at_most("maxwell.bound_linear",
                             "bound ratio is unchanged when the background deviation is scaled down (worst relative "
                             "change)",
                             cfg.tol_linear, lin));

    double mv = 0.0, mv_scale = 0.0, sr = 0.0;
    const MaxwellianParams a{};
    for (int i = 0; i < gl->size(); ++i) {
        const Vec3 xi = gl->velocity(i);
        const double diff = eval_maxwellian(cfg.mean_value_b, xi) - eval_maxwellian(a, xi);
        mv = std::max(mv, std::abs(mean_value_reconstruction(cfg.mean_value_b, xi) - diff));
        mv_scale = std::max(mv_scale, std::abs(diff));
        const double sb = sqrt_maxwellian(cfg.mean_value_b, xi);
        if (sb > 0.0) sr = std::max(sr, std::abs(sqrt_ratio(cfg.mean_value_b, xi) * sqrt_maxwellian(a, xi) - sb) / sb);
    }
    rep.add(Verdict::at_most("maxwell.mean_value",
                             "integrating the parameter-path derivative reproduces M_b - M_a (relative to its max)",
                             cfg.tol_mean_value, mv / mv_scale));
    rep.add(Verdict::at_most("maxwell.sqrt_ratio",
                             "closed-form sqrt(M_b)/sqrt(M_a) times sqrt(M_a) gives sqrt(M_b) at every node",
                             cfg.tol_sqrt_ratio, sr));
    rep.results["maxwell"] = {{"bound_ratio", r1}, {"bound_ratio_doubled", r2}, {"bound_ratio_linear_base", ref}};

    // Source operator on the coarse grid: invariants of the range and
    // first-order scaling of |T| in the background deviation.
    GridPtr ga = half.grid(0);
    InvariantProjector Pa(ga);
    double tnorm1 = 0.0, tlin = 0.0, inv = 0.0;
    Table tt;
    tt.name = "source_scaling";
    tt.columns = {"scale", "macro_error", "norm", "norm_over_scale"};
    std::mt19937_64 trng(cfg.seed + 1);
    for (double s : cfg.scales) {
        MaxwellianParams bs = scale_deviation(cfg.source_b, s);
        BackgroundPair pair(bs);
        GridPtr gb = build_background_grid(half.n_speed, half.n_cosine, half.s_max, 0, bs.mu[2], bs.lam);
        SourceOperator T = assemble_T(pair, gamma, model.cross, model.quad, ga, gb, cfg.assembly);
        const double tn = T.T.entries.norm();
        if (s == 1.0) {
            tnorm1 = tn;
            for (int k = 0; k < 10; ++k) {
                GridFunction h = random_function(gb, trng);
                GridFunction Th = T.T.apply(h);
                inv = std::max(inv, norm(Pa.P0(Th), NormKind::l2()) / norm(Th, NormKind::l2()));
            }
        }
        tlin = std::max(tlin, std::abs(tn / (s * tnorm1) - 1.0));
        tt.add({s, macro_error(bs), tn, tn / s});
    }
    rep.tables.push_back(std::move(tt));
    rep.add(Verdict::at_most("source.invariants", "T h has no component along the collision invariants",
                             cfg.tol_invariant, inv));
    rep.add(Verdict::at_most("source.linear", "|T| / s is constant as the background deviation is scaled by s",
                             cfg.tol_linear, tlin));
    return rep;
}

}  // namespace kinetic
