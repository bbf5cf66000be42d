#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "kinetic/errors.hpp"
#include "kinetic/spectrum.hpp"

using namespace kinetic;

namespace {

const double kPi = 3.14159265358979323846;
const double kSound = 1.2909944487358056;  // sqrt(5/3)

// Exact gamma = 0, B = |cos| diffusion coefficients of the slow branches
// (acoustic, thermal, shear), from the Chapman-Enskog coefficients of the
// -2 pi / 3 and -pi eigenvalues.
const double kA_acoustic = 7.0 / (6.0 * kPi);
const double kA_thermal = 3.0 / (2.0 * kPi);
const double kA_shear = 1.0 / kPi;

struct Ops {
    CollisionModel model;
    GridPtr g0 = build_grid(12, 6, 8.0, 0);
    GridPtr g1 = build_grid(12, 6, 8.0, 1);
    CollisionOperator L0 = assemble_collision(model, g0);
    CollisionOperator L1 = assemble_collision(model, g1);
};

const Ops& ops() {
    static Ops o;
    return o;
}

std::vector<double> fit_rs() {
    std::vector<double> r;
    for (int k = 0; k < 8; ++k) r.push_back(0.01 + 0.02 * k);
    return r;
}

std::vector<cplx> sorted_values(const EigenSystem& es) {
    std::vector<cplx> v(es.values.data(), es.values.data() + es.values.size());
    std::sort(v.begin(), v.end(), [](cplx a, cplx b) {
        return a.real() != b.real() ? a.real() < b.real() : a.imag() < b.imag();
    });
    return v;
}

// Largest distance after greedily pairing each value of `a` with its nearest
// unused counterpart in `b`.
double match_distance(const std::vector<cplx>& a, std::vector<cplx> b) {
    double worst = 0.0;
    for (auto z : a) {
        auto it = std::min_element(b.begin(), b.end(),
                                   [&](cplx x, cplx y) { return std::abs(x - z) < std::abs(y - z); });
        worst = std::max(worst, std::abs(*it - z));
        b.erase(it);
    }
    return worst;
}

double max_real(const EigenSystem& es) {
    double m = -1e300;
    for (int k = 0; k < es.values.size(); ++k) m = std::max(m, es.values(k).real());
    return m;
}

}  // namespace

TEST_CASE("wave operator assembly") {
    const auto& o = ops();
    WaveOperator w0 = assemble_wave_operator(o.L0, 0.0);
    CHECK((w0.matrix - o.L0.L.cast<cplx>()).norm() == 0.0);
    WaveOperator w = assemble_wave_operator(o.L0, 0.3);
    Eigen::MatrixXcd added = w.matrix - o.L0.L.cast<cplx>();
    // -i r xi_3 is diagonal and anti-Hermitian.
    CHECK((added + added.adjoint()).norm() < 1e-12);
    CHECK((added - Eigen::MatrixXcd(added.diagonal().asDiagonal())).norm() == 0.0);
    for (int i = 0; i < o.g0->size(); ++i)
        CHECK(added(i, i).imag() == doctest::Approx(-0.3 * o.g0->xi3(i)));
    // Complex symmetric in W-orthonormal coordinates.
    CHECK((w.sym - w.sym.transpose()).norm() < 1e-12 * w.sym.norm());
    CHECK_THROWS_AS(assemble_wave_operator(o.L0, -0.1), DomainError);
    CHECK_THROWS_AS(assemble_wave_operator(o.L0.as_K(), 0.1), PreconditionError);
}

TEST_CASE("null space at r = 0 and spectral stability") {
    const auto& o = ops();
    double scale = o.L0.L.norm();
    auto z0 = eigen_near_zero(assemble_wave_operator(o.L0, 0.0), 4);
    for (int k = 0; k < 3; ++k) CHECK(std::abs(z0[k].value) < 1e-6 * scale);
    CHECK(z0[3].value.real() < -1.0);
    // Sector 1 carries one shear invariant per parity (cos here, sin identical).
    auto z1 = eigen_near_zero(assemble_wave_operator(o.L1, 0.0), 2);
    CHECK(std::abs(z1[0].value) < 1e-6 * scale);
    CHECK(z1[1].value.real() < -1.0);

    for (double r : {0.05, 0.2, 1.0}) {
        for (const CollisionOperator* op : {&o.L0, &o.L1}) {
            EigenSystem es = eigensystem(assemble_wave_operator(*op, r));
            CHECK(max_real(es) <= 1e-8);
            CHECK(es.inverse_residual < 1e-8);
        }
    }
}

TEST_CASE("spectrum is closed under conjugation") {
    // Reflection xi_3 -> -xi_3 maps the operator at r to its complex
    // conjugate, the pattern behind real x-space solutions.
    const auto& o = ops();
    auto v = sorted_values(eigensystem(assemble_wave_operator(o.L0, 0.4)));
    std::vector<cplx> c;
    for (auto z : v) c.push_back(std::conj(z));
    double worst = match_distance(v, c);
    CHECK(worst < 1e-8);
}

TEST_CASE("acoustic splitting at small r") {
    const auto& o = ops();
    const double r = 0.05;
    WaveOperator w = assemble_wave_operator(o.L0, r);
    auto slow = label_slow_branches(w, eigen_near_zero(w, 3));
    CHECK(slow[0].value.imag() == doctest::Approx(-kSound * r).epsilon(0.02));
    CHECK(slow[1].value.imag() == doctest::Approx(kSound * r).epsilon(0.02));
    CHECK(std::abs(slow[2].value.imag()) < 1e-3 * r);
}

TEST_CASE("dispersion fits reproduce the transport coefficients") {
    const auto& o = ops();
    auto s0 = track_branches(o.L0, fit_rs());
    auto s1 = track_branches(o.L1, fit_rs());
    auto f0 = fit_dispersion(s0, branch_labels(0));
    auto f1 = fit_dispersion(s1, branch_labels(1));
    REQUIRE(f0.size() == 3);
    REQUIRE(f1.size() == 1);
    CHECK(f0[0].a == doctest::Approx(kSound).epsilon(0.02));
    CHECK(f0[1].a == doctest::Approx(-f0[0].a).epsilon(0.02));
    CHECK(std::abs(f0[2].a) < 0.02);
    CHECK(std::abs(f1[0].a) < 0.02);
    for (const auto& f : {f0[0], f0[1], f0[2], f1[0]}) CHECK(f.A > 0.0);
    CHECK(f0[0].A == doctest::Approx(kA_acoustic).epsilon(1e-3));
    CHECK(f0[1].A == doctest::Approx(kA_acoustic).epsilon(1e-3));
    CHECK(f0[2].A == doctest::Approx(kA_thermal).epsilon(1e-3));
    CHECK(f1[0].A == doctest::Approx(kA_shear).epsilon(1e-3));
    for (const auto& s : s0)
        for (double ov : s.overlap) CHECK(ov > 0.7);
}

TEST_CASE("fit residuals shrink with the window") {
    const auto& o = ops();
    std::vector<double> wide, narrow;
    for (int k = 0; k < 8; ++k) {
        wide.push_back(0.04 + 0.08 * k);
        narrow.push_back(0.02 + 0.04 * k);
    }
    auto fw = fit_dispersion(track_branches(o.L0, wide), branch_labels(0));
    auto fn = fit_dispersion(track_branches(o.L0, narrow), branch_labels(0));
    for (int j = 0; j < 3; ++j) {
        MESSAGE("branch " << j << " residual wide " << fw[j].fit_residual << " narrow " << fn[j].fit_residual);
        // The model absorbs r^3 and r^4; the remainder is at least cubic.
        CHECK(fn[j].fit_residual < fw[j].fit_residual / 8.0);
    }
}

TEST_CASE("fit_branch on synthetic data") {
    std::vector<double> r;
    std::vector<cplx> lam;
    for (int k = 0; k < 7; ++k) {
        double x = 0.02 * (k + 1);
        r.push_back(x);
        lam.push_back(cplx(-0.4 * x * x + 0.1 * std::pow(x, 4), -1.1 * x + 0.3 * std::pow(x, 3)));
    }
    auto f = fit_branch(0, r, lam);
    CHECK(f.a == doctest::Approx(1.1).epsilon(1e-10));
    CHECK(f.A == doctest::Approx(0.4).epsilon(1e-10));
    CHECK(f.fit_residual < 1e-12);
    r.resize(5);
    lam.resize(5);
    CHECK_THROWS_AS(fit_branch(0, r, lam), PreconditionError);
}

TEST_CASE("slow eigenfunctions approach the fluid basis") {
    const auto& o = ops();
    WaveOperator w0 = assemble_wave_operator(o.L0, 0.01);
    auto slow0 = label_slow_branches(w0, eigen_near_zero(w0, 3));
    for (int j = 0; j < 3; ++j) {
        for (int l = 0; l < 3; ++l) {
            double ov = overlap(slow0[j].vec, leading_eigenfunction(o.g0, l));
            if (j == l)
                CHECK(ov > 0.99);
            else
                CHECK(ov < 0.05);
        }
    }
    WaveOperator w1 = assemble_wave_operator(o.L1, 0.01);
    auto slow1 = label_slow_branches(w1, eigen_near_zero(w1, 1));
    CHECK(overlap(slow1[0].vec, leading_eigenfunction(o.g1, 3)) > 0.99);
    CHECK_THROWS_AS(leading_eigenfunction(o.g0, 5), PreconditionError);

    // The fluid basis is orthonormal.
    for (int j = 0; j < 3; ++j)
        for (int l = 0; l < 3; ++l) {
            cplx ip = inner(leading_eigenfunction(o.g0, j), leading_eigenfunction(o.g0, l));
            CHECK(std::abs(ip - (j == l ? 1.0 : 0.0)) < 1e-10);
        }
}

TEST_CASE("spectral projectors") {
    const auto& o = ops();
    WaveOperator w = assemble_wave_operator(o.L0, 0.1);
    auto slow = label_slow_branches(w, eigen_near_zero(w, 3));
    std::vector<Eigen::MatrixXcd> P;
    for (const auto& p : slow) P.push_back(spectral_projector(p));
    Eigen::MatrixXcd sum = Eigen::MatrixXcd::Zero(w.matrix.rows(), w.matrix.cols());
    for (int j = 0; j < 3; ++j) {
        double scale = P[j].norm();
        CHECK((P[j] * P[j] - P[j]).norm() < 1e-8 * scale);
        CHECK(std::abs(P[j].trace() - 1.0) < 1e-8);
        for (int l = 0; l < 3; ++l)
            if (l != j) CHECK((P[j] * P[l]).norm() < 1e-8 * scale);
        // Eigen-relation A P_j = lambda_j P_j.
        CHECK((w.matrix * P[j] - slow[j].value * P[j]).norm() < 1e-8 * w.matrix.norm() * scale);
        sum += P[j];
    }
    CHECK((w.matrix * sum - sum * w.matrix).norm() < 1e-8 * w.matrix.norm() * sum.norm());
}

TEST_CASE("gap persistence and the long-wave cutoff") {
    const auto& o = ops();
    std::vector<double> rs;
    for (int k = 1; k <= 30; ++k) rs.push_back(0.1 * k);
    GapScan scan = choose_delta(o.L0, rs);
    CHECK(scan.gap0 == doctest::Approx(2.0 * kPi / 3.0).epsilon(1e-3));
    CHECK(scan.r_sep > 0.5);
    CHECK(scan.delta == doctest::Approx(scan.r_sep / 2.0));
    for (std::size_t k = 0; k < rs.size() && rs[k] <= scan.r_sep; ++k)
        CHECK(scan.separation[k] >= 0.5 * scan.gap0);
}

TEST_CASE("change of variables for the background") {
    // lambda_b(r) = -i mu r + rho lam^{gamma/2} lambda_a(r sqrt(lam) / (rho lam^{gamma/2}))
    // holds exactly on grids adapted to b, so the comparison is at round-off.
    const auto& o = ops();
    auto check_background = [&](MaxwellianParams b) {
        CollisionModel mb;
        mb.background = b;
        auto gb = build_background_grid(12, 6, 8.0, 0, b.mu[2], b.lam);
        auto Lb = assemble_collision(mb, gb);
        double worst = 0.0;
        for (double r : {0.05, 0.3, 0.9}) {
            auto vb = sorted_values(eigensystem(assemble_wave_operator(Lb, r)));
            double ra = scaled_wavenumber(b, 0.0, r);
            auto va = eigensystem(assemble_wave_operator(o.L0, ra)).values;
            std::vector<cplx> pred;
            for (int k = 0; k < va.size(); ++k) pred.push_back(predict_scaled_eigenvalue(b, 0.0, r, va(k)));
            worst = std::max(worst, match_distance(vb, pred) / std::abs(vb.front()));
        }
        return worst;
    };
    CHECK(check_background(MaxwellianParams::axial(1.2, 0.0, 1.0)) < 1e-6);
    CHECK(check_background(MaxwellianParams::axial(1.0, 0.0, 1.44)) < 1e-6);
    CHECK(check_background(MaxwellianParams::axial(1.0, 0.1, 1.0)) < 1e-6);

    // Diffusion coefficients: A_b / A_a = lam^{1 - gamma/2} / rho.
    MaxwellianParams b = MaxwellianParams::axial(1.0, 0.0, 1.44);
    CollisionModel mb;
    mb.background = b;
    auto gb = build_background_grid(12, 6, 8.0, 0, 0.0, 1.44);
    auto fb = fit_dispersion(track_branches(assemble_collision(mb, gb), fit_rs()), branch_labels(0));
    auto fa = fit_dispersion(track_branches(o.L0, fit_rs()), branch_labels(0));
    for (int j = 0; j < 3; ++j) {
        auto pred = predict_scaled(b, 0.0, fa[j].a, fa[j].A);
        CHECK(fb[j].A == doctest::Approx(pred.A).epsilon(0.03));
        CHECK(fb[j].a == doctest::Approx(pred.a).epsilon(0.03));
    }
    auto same = predict_scaled(MaxwellianParams{}, 0.0, fa[0].a, fa[0].A);
    CHECK(same.A == fa[0].A);
    CHECK(same.a == fa[0].a);
}
