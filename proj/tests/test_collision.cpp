#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>

#include "kinetic/cache.hpp"
#include "kinetic/collision.hpp"
#include "kinetic/errors.hpp"

using namespace kinetic;

namespace {

const double kPi = 3.14159265358979323846;

struct Fixture {
    GridPtr g0 = build_grid(12, 6, 8.0, 0);
    GridPtr g1 = build_grid(12, 6, 8.0, 1);
    CollisionModel model;
    CollisionOperator L0 = assemble_collision(model, g0);
    CollisionOperator L1 = assemble_collision(model, g1);
};

const Fixture& fixture() {
    static Fixture f;
    return f;
}

double rel(const GridFunction& a, const GridFunction& b) {
    return norm(GridFunction(a.grid, a.values - b.values), NormKind::l2()) / norm(b, NormKind::l2());
}

GridFunction random_function(const GridPtr& g, std::mt19937& rng) {
    std::normal_distribution<double> n;
    return sample(g, [&](double s, double) { return n(rng) * std::exp(-s * s / 8.0); });
}

Eigen::VectorXd sym_eigenvalues(const CollisionOperator& op) {
    Eigen::MatrixXd S = to_symmetric_coordinates(op.L, op.grid->weights());
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (S + S.transpose()));
    return es.eigenvalues().reverse();  // descending
}

// Closed form of nu for gamma = 1 with B = |cos|: 2 pi E|xi - Z|, Z standard normal.
double nu_hard_sphere(double s) {
    return 2.0 * kPi *
           (std::sqrt(2.0 / kPi) * std::exp(-0.5 * s * s) + (s + 1.0 / s) * std::erf(s / std::sqrt(2.0)));
}

}  // namespace

TEST_CASE("cross sections obey the cutoff and integrate to their closed forms") {
    CHECK(cross_section(CrossSection::AbsCos, -0.3) == doctest::Approx(0.3));
    CHECK(cross_section(CrossSection::CosSquared, 0.5) == doctest::Approx(0.25));
    // Midpoint integration over the sphere: 2 pi int_{-1}^{1} B(c) dc.
    for (auto b : {CrossSection::AbsCos, CrossSection::CosSquared}) {
        double sum = 0.0;
        const int n = 200000;
        for (int k = 0; k < n; ++k) sum += cross_section(b, -1.0 + (k + 0.5) * 2.0 / n);
        CHECK(2.0 * kPi * sum * 2.0 / n == doctest::Approx(cross_section_integral(b)).epsilon(1e-8));
    }
    CHECK(cross_section_from_string(to_string(CrossSection::CosSquared)) == CrossSection::CosSquared);
    CHECK_THROWS_AS(cross_section_from_string("hard"), ConfigError);
}

TEST_CASE("model validation rejects out-of-range settings") {
    CollisionModel m;
    m.gamma = 1.5;
    CHECK_THROWS_AS(m.validate(), ConfigError);
    m.gamma = 0.0;
    m.quad.n_azimuth = 7;
    CHECK_THROWS_AS(m.validate(), ConfigError);
    m.quad.n_azimuth = 16;
    m.background.rho = -1.0;
    CHECK_THROWS(m.validate());
}

TEST_CASE("collision frequency matches closed forms") {
    auto g = build_grid(12, 6, 8.0, 0);
    CollisionModel m;
    Eigen::VectorXd nu = compute_nu(m, *g);
    for (int i = 0; i < g->size(); ++i) CHECK(nu(i) == doctest::Approx(2.0 * kPi).epsilon(1e-10));

    m.gamma = 1.0;
    nu = compute_nu(m, *g);
    for (int i = 0; i < g->size(); ++i)
        CHECK(nu(i) == doctest::Approx(nu_hard_sphere(g->speed(i))).epsilon(1e-9));
    // Monotone growth like <xi> for hard spheres.
    for (int i = g->n_cosine(); i < g->size(); i += g->n_cosine())
        CHECK(nu(i) > nu(i - g->n_cosine()));

    // The three-dimensional inner quadrature agrees with the reduction; the
    // |xi - xi_*| kink at gamma = 1 limits it to algebraic convergence.
    Eigen::VectorXd nq = compute_nu_quadrature(m, *g);
    CHECK((nq - nu).cwiseAbs().maxCoeff() / nu.maxCoeff() < 1e-4);
}

TEST_CASE("collision invariants span the null space") {
    const auto& f = fixture();
    for (const CollisionOperator* op : {&f.L0, &f.L1}) {
        double scale = op->L.norm();
        for (const auto& c : chi_basis(op->grid)) {
            Eigen::VectorXd v = op->L * c.values.real();
            CHECK(v.norm() < 1e-10 * scale);
        }
        CHECK(op->raw_null_defect < 1e-6);
        CHECK(op->nu_quadrature_defect < 1e-10);
    }
    Eigen::VectorXd ev0 = sym_eigenvalues(f.L0), ev1 = sym_eigenvalues(f.L1);
    const double scale = std::abs(ev0(ev0.size() - 1));
    for (int k = 0; k < 3; ++k) CHECK(std::abs(ev0(k)) < 1e-6 * scale);
    CHECK(std::abs(ev1(0)) < 1e-6 * scale);
    CHECK(ev0(3) < -1.0);
    CHECK(ev1(1) < -1.0);
}

TEST_CASE("Maxwell-molecule eigenvalues") {
    // Exact values for gamma = 0, B = |cos|: -2 pi / 3 (heat flux, stress
    // relaxation in the shear sector) and -pi (pressure tensor).
    const auto& f = fixture();
    Eigen::VectorXd ev0 = sym_eigenvalues(f.L0), ev1 = sym_eigenvalues(f.L1);
    CHECK(ev0(3) == doctest::Approx(-2.0 * kPi / 3.0).epsilon(1e-3));
    CHECK(ev1(1) == doctest::Approx(-2.0 * kPi / 3.0).epsilon(1e-3));
    bool has_pi = false;
    for (int k = 0; k < ev0.size(); ++k) has_pi = has_pi || std::abs(ev0(k) + kPi) < 1e-3 * kPi;
    CHECK(has_pi);
}

TEST_CASE("L is self-adjoint in the quadrature inner product") {
    const auto& f = fixture();
    for (const CollisionOperator* op : {&f.L0, &f.L1}) {
        Eigen::MatrixXd WL = op->grid->weights().asDiagonal() * op->L;
        CHECK((WL - WL.transpose()).norm() < 1e-12 * WL.norm());
        // The raw collocation defect is a discretization diagnostic.
        CHECK(op->raw_symmetry_defect < 2e-2);
        Eigen::MatrixXd K = op->K;
        Eigen::MatrixXd WK = op->grid->weights().asDiagonal() * K;
        CHECK((WK - WK.transpose()).norm() < 1e-12 * WK.norm());
    }
}

TEST_CASE("coercivity on random functions") {
    const auto& f = fixture();
    const double nu0 = 2.0 * kPi / 3.0 * (1.0 - 1e-3);
    std::mt19937 rng(20240611);
    InvariantProjector P(f.g0);
    for (int k = 0; k < 100; ++k) {
        GridFunction g = random_function(f.g0, rng);
        GridFunction Lg = f.L0.as_L().apply(g);
        double lhs = inner(g, Lg).real();
        double p1 = norm(P.P1(g), NormKind::lsigma(0.0));
        CHECK(lhs <= -nu0 * p1 * p1);
    }

    // gamma = 1: the smallest nonzero Rayleigh quotient against |.|_sigma is positive.
    CollisionModel hard;
    hard.gamma = 1.0;
    auto op = assemble_collision(hard, f.g0);
    Eigen::VectorXd w = f.g0->weights();
    Eigen::MatrixXd S = to_symmetric_coordinates(op.L, w);
    S = 0.5 * (S + S.transpose());
    Eigen::MatrixXd Pm = to_symmetric_coordinates(P.P1_matrix(), w);
    Eigen::VectorXd sig(f.g0->size());
    for (int i = 0; i < f.g0->size(); ++i) sig(i) = bracket(f.g0->abs_xi(i));  // <xi>^gamma
    // Orthonormal basis of range(P1) (P1 is an orthogonal projector here).
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> pe(0.5 * (Pm + Pm.transpose()));
    Eigen::MatrixXd Q = pe.eigenvectors().rightCols(S.rows() - 3);
    Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> ges(-Q.transpose() * S * Q,
                                                                 Q.transpose() * sig.asDiagonal() * Q);
    double nu_hard = ges.eigenvalues().minCoeff();
    CHECK(nu_hard > 0.5);
    for (int k = 0; k < 100; ++k) {
        GridFunction g = random_function(f.g0, rng);
        double lhs = inner(g, op.as_L().apply(g)).real();
        double p1 = norm(P.P1(g), NormKind::lsigma(1.0));
        CHECK(lhs <= -nu_hard * p1 * p1 * (1.0 - 1e-9));
    }
}

TEST_CASE("invariant projector") {
    const auto& f = fixture();
    InvariantProjector P(f.g0);
    Eigen::MatrixXd P0 = P.P0_matrix();
    CHECK((P0 * P0 - P0).norm() < 1e-12);
    CHECK(P0.trace() == doctest::Approx(3.0).epsilon(1e-12));
    std::mt19937 rng(5);
    GridFunction g = random_function(f.g0, rng);
    GridFunction p1 = P.P1(g);
    for (const auto& c : P.basis()) CHECK(std::abs(inner(p1, c)) < 1e-12);
    CHECK(InvariantProjector(f.g1).P0_matrix().trace() == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(InvariantProjector(build_grid(8, 6, 8.0, 2)).basis().empty());
}

TEST_CASE("Gamma against the linearized operator") {
    // Q(M, M) = 0 for every Maxwellian gives Gamma(sqrt(M), h) = L h / 2.
    const auto& f = fixture();
    std::mt19937 rng(11);
    GridFunction h = random_function(f.g0, rng);
    GammaDiagnostics d;
    GridFunction G = gamma_bilinear(f.model, chi(f.g0, 0), h, &d);
    GridFunction half(f.g0, 0.5 * f.L0.L.cast<cplx>() * h.values);
    CHECK(rel(G, half) < 1e-2);
    CHECK(d.raw_invariant_defect < 1e-3);
    InvariantProjector P(f.g0);
    CHECK(norm(P.P0(G), NormKind::l2()) < 1e-12 * norm(G, NormKind::l2()));

    GridFunction G2 = gamma_bilinear(f.model, h, chi(f.g0, 0));
    CHECK(rel(G2, G) < 1e-12);

    GridFunction h1 = random_function(f.g1, rng);
    GridFunction Gs = gamma_bilinear(f.model, h1, chi(f.g0, 0));
    CHECK(Gs.sector() == 1);
    GridFunction half1(f.g1, 0.5 * f.L1.L.cast<cplx>() * h1.values);
    CHECK(rel(Gs, half1) < 1e-2);

    CHECK_THROWS_AS(gamma_bilinear(f.model, h1, h1), PreconditionError);
    GridFunction hc(f.g0, h.values * cplx(0.0, 1.0));
    CHECK_THROWS_AS(gamma_bilinear(f.model, hc, h), PreconditionError);
}

TEST_CASE("source operator T") {
    const auto& f = fixture();
    const auto& q = f.model.quad;
    BackgroundPair same(MaxwellianParams{});
    auto T0 = assemble_T(same, 0.0, CrossSection::AbsCos, q, f.g0, f.g0);
    CHECK(T0.T.entries.norm() == 0.0);

    // Density-only difference: T = sqrt(rho) (rho - 1) L / 2.
    BackgroundPair p1(MaxwellianParams::axial(1.01, 0.0, 1.0));
    BackgroundPair p2(MaxwellianParams::axial(1.02, 0.0, 1.0));
    auto T1 = assemble_T(p1, 0.0, CrossSection::AbsCos, q, f.g0, f.g0);
    auto T2 = assemble_T(p2, 0.0, CrossSection::AbsCos, q, f.g0, f.g0);
    double ratio = std::sqrt(1.02) * 0.02 / (std::sqrt(1.01) * 0.01);
    CHECK((T2.T.entries - ratio * T1.T.entries).norm() < 1e-12 * T2.T.entries.norm());
    InvariantProjector P(f.g0);
    auto smooth = P.P1(sample(f.g0, [](double s, double c) { return std::exp(-s * s / 4.0) * s * s * c * c; }));
    GridFunction Th = T1.T.apply(smooth);
    GridFunction ref(f.g0, 0.5 * std::sqrt(1.01) * 0.01 * f.L0.L.cast<cplx>() * smooth.values);
    CHECK(rel(Th, ref) < 1e-2);
    CHECK(T1.raw_invariant_defect < 1e-3);
    CHECK(norm(P.P0(Th), NormKind::l2()) < 1e-12 * norm(Th, NormKind::l2()));

    // Frame checks.
    BackgroundPair pm(MaxwellianParams::axial(1.0, 0.01, 1.0));
    CHECK_THROWS_AS(assemble_T(pm, 0.0, CrossSection::AbsCos, q, f.g0, f.g0), PreconditionError);
}

TEST_CASE("T is linear in the background deviation at leading order") {
    // f(xi) = M_a / sqrt(M_b) sampled on each b-grid; |T_b f| / B should
    // approach a constant as the deviation shrinks.
    CollisionQuadrature q;
    auto a_grid = build_grid(12, 6, 8.0, 0);
    MaxwellianParams base = MaxwellianParams::axial(1.004, 0.006, 1.012);
    std::vector<double> nrm;
    for (double s : {1.0, 0.5}) {
        MaxwellianParams b = scale_deviation(base, s);
        auto gb = build_background_grid(12, 6, 8.0, 0, b.mu[2], b.lam);
        Eigen::VectorXcd v(gb->size());
        MaxwellianParams a;
        for (int i = 0; i < gb->size(); ++i) {
            auto xi = gb->velocity(i);
            v(i) = eval_maxwellian(a, xi) / sqrt_maxwellian(b, xi);
        }
        auto T = assemble_T(BackgroundPair(b), 0.0, CrossSection::AbsCos, q, a_grid, gb);
        nrm.push_back(norm(T.T.apply(GridFunction(gb, v)), NormKind::l2()) / s);
    }
    CHECK(nrm[1] == doctest::Approx(nrm[0]).epsilon(0.05));
}

TEST_CASE("matrix cache round trip") {
    auto dir = std::filesystem::temp_directory_path() / "kinetic_cache_test";
    std::filesystem::remove_all(dir);
    MatrixCache cache(dir);
    Eigen::MatrixXd a = Eigen::MatrixXd::Random(5, 3), b = Eigen::MatrixXd::Random(2, 7);
    cache.store("key one", {a, b});
    auto hit = cache.load("key one");
    REQUIRE(hit.has_value());
    CHECK((*hit)[0] == a);
    CHECK((*hit)[1] == b);
    CHECK_FALSE(cache.load("key two").has_value());
    {
        std::ofstream os(cache.path_for("key one"), std::ios::binary | std::ios::trunc);
        os << "garbage";
    }
    CHECK_FALSE(cache.load("key one").has_value());
    CHECK_FALSE(MatrixCache(dir, false).load("key one").has_value());

    CollisionModel m;
    auto g = build_grid(6, 4, 6.0, 0);
    AssemblyOptions opts;
    opts.cache = &cache;
    auto first = assemble_collision(m, g, opts);
    auto second = assemble_collision(m, g, opts);
    CHECK(first.L == second.L);
    CHECK(std::filesystem::exists(cache.path_for("collision-raw-v1\n" + m.key_text() + "\n" + g->spec_text())));

    auto text = dir / "L.txt";
    write_matrix_text(text, first.L);
    CHECK(read_matrix_text(text) == first.L);
    std::filesystem::remove_all(dir);
}

TEST_CASE("K is bounded in weighted norms and refinement-stable") {
    // Operator 2-norm of varpi K varpi^{-1} in W-orthonormal coordinates with
    // kappa0 = 1/16, on two grids.
    CollisionModel m;
    std::vector<double> plain, weighted;
    for (auto dims : {std::pair{12, 6}, std::pair{16, 8}}) {
        auto g = build_grid(dims.first, dims.second, 8.0, 0);
        auto op = assemble_collision(m, g);
        Eigen::VectorXd w = g->weights();
        Eigen::MatrixXd S = to_symmetric_coordinates(op.K, w);
        plain.push_back(S.jacobiSvd().singularValues()(0));
        WeightSpec ws;
        ws.kappa0 = 1.0 / 16.0;
        Eigen::VectorXd varpi(g->size());
        for (int i = 0; i < g->size(); ++i) varpi(i) = ws.exponential(*g, i);
        Eigen::MatrixXd Kw = varpi.asDiagonal() * S * varpi.cwiseInverse().asDiagonal();
        weighted.push_back(Kw.jacobiSvd().singularValues()(0));
    }
    MESSAGE("|K|_2 " << plain[0] << " " << plain[1] << "  |wKw^-1|_2 " << weighted[0] << " " << weighted[1]);
    CHECK(plain[1] == doctest::Approx(plain[0]).epsilon(0.05));
    CHECK(weighted[1] == doctest::Approx(weighted[0]).epsilon(0.05));
    CHECK(std::isfinite(weighted[0]));
}
