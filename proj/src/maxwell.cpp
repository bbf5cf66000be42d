#include "kinetic/maxwell.hpp"

#include <cmath>
#include <numbers>

#include "kinetic/errors.hpp"

namespace kinetic {

namespace {

constexpr double kPi = std::numbers::pi;

double dot(const Vec3& u, const Vec3& v) { return u[0] * v[0] + u[1] * v[1] + u[2] * v[2]; }

double dist2(const Vec3& xi, const Vec3& mu) {
    double d0 = xi[0] - mu[0], d1 = xi[1] - mu[1], d2 = xi[2] - mu[2];
    return d0 * d0 + d1 * d1 + d2 * d2;
}

MaxwellianParams path_point(const MaxwellianParams& b, double theta) {
    MaxwellianParams p;
    p.rho = 1.0 + theta * (b.rho - 1.0);
    for (int k = 0; k < 3; ++k) p.mu[k] = theta * b.mu[k];
    p.lam = 1.0 + theta * (b.lam - 1.0);
    return p;
}

}  // namespace

double MaxwellianParams::mu_norm() const { return std::sqrt(dot(mu, mu)); }

void MaxwellianParams::validate() const {
    if (!(rho > 0.0)) throw DomainError("Maxwellian: density must be positive");
    if (!(lam > 0.0)) throw DomainError("Maxwellian: temperature must be positive");
}

bool AdmissibleBox::contains(const MaxwellianParams& b) const {
    return lam_lo < b.lam && b.lam < lam_hi && b.rho > 0.0 && b.rho < rho_hi &&
           b.mu_norm() < mu_hi;
}

double eval_maxwellian(const MaxwellianParams& p, const Vec3& xi) {
    return p.rho * std::pow(2.0 * kPi * p.lam, -1.5) * std::exp(-dist2(xi, p.mu) / (2.0 * p.lam));
}

double sqrt_maxwellian(const MaxwellianParams& p, const Vec3& xi) {
    return std::sqrt(p.rho) * std::pow(2.0 * kPi * p.lam, -0.75) *
           std::exp(-dist2(xi, p.mu) / (4.0 * p.lam));
}

double sqrt_ratio_direct(const MaxwellianParams& b, const Vec3& xi) {
    // Quotient taken in the exponent to avoid underflow at large |xi|.
    double e = -dist2(xi, b.mu) / (4.0 * b.lam) + dot(xi, xi) / 4.0;
    return std::sqrt(b.rho) * std::pow(b.lam, -0.75) * std::exp(e);
}

double sqrt_ratio(const MaxwellianParams& b, const Vec3& xi, bool relaxed) {
    b.validate();
    if (b.lam <= 1.0) {
        if (!relaxed) throw DomainError("sqrt_ratio: experiment mode requires lam > 1");
        return sqrt_ratio_direct(b, xi);
    }
    const double l1 = b.lam - 1.0;
    Vec3 shifted{xi[0] + b.mu[0] / l1, xi[1] + b.mu[1] / l1, xi[2] + b.mu[2] / l1};
    double e = l1 / (4.0 * b.lam) * dot(shifted, shifted) - dot(b.mu, b.mu) / (4.0 * l1);
    return std::sqrt(b.rho) * std::pow(b.lam, -0.75) * std::exp(e);
}

double weighted_difference(const MaxwellianParams& b, const Vec3& xi, double beta) {
    const MaxwellianParams a;
    double w = std::pow(1.0 + dot(xi, xi), 0.5 * beta);
    // (M_b - M_a)/sqrt(M_a) = sqrt(M_a) (sqrt_ratio^2 - 1)
    double r = sqrt_ratio_direct(b, xi);
    return w * sqrt_maxwellian(a, xi) * (r * r - 1.0);
}

double macro_error(const MaxwellianParams& b) {
    return std::abs(b.rho - 1.0) + std::abs(b.lam - 1.0) + b.mu_norm();
}

double lemma_bound_ratio(const MaxwellianParams& b, double beta, const VelocityGrid& grid,
                         double lam_bar) {
    if (!(lam_bar > 1.0 && lam_bar < 2.0))
        throw PreconditionError("lemma_bound_ratio: lam_bar must lie in (1, 2)");
    if (!(b.lam >= 1.0 && b.lam < lam_bar))
        throw PreconditionError("lemma_bound_ratio: temperature outside [1, lam_bar)");
    if (!(b.rho > 0.0)) throw PreconditionError("lemma_bound_ratio: density must be positive");
    const double B = macro_error(b);
    if (B == 0.0) throw DomainError("lemma_bound_ratio: identical backgrounds (B = 0)");
    const double decay = (2.0 - lam_bar) / 16.0;
    double worst = 0.0;
    for (int i = 0; i < grid.size(); ++i) {
        auto xi = grid.velocity(i);
        double env = std::exp(-decay * dot(xi, xi)) * B;
        worst = std::max(worst, std::abs(weighted_difference(b, xi, beta)) / env);
    }
    return worst;
}

double mean_value_bracket(const MaxwellianParams& b, const Vec3& xi, double theta) {
    const MaxwellianParams p = path_point(b, theta);
    const double drho = b.rho - 1.0, dlam = b.lam - 1.0;
    Vec3 rel{xi[0] - p.mu[0], xi[1] - p.mu[1], xi[2] - p.mu[2]};
    return drho / p.rho - 1.5 * dlam / p.lam + dot(rel, b.mu) / p.lam +
           dot(rel, rel) * dlam / (2.0 * p.lam * p.lam);
}

double mean_value_expansion(const MaxwellianParams& b, const Vec3& xi, double theta) {
    return mean_value_bracket(b, xi, theta) * eval_maxwellian(path_point(b, theta), xi);
}

double mean_value_reconstruction(const MaxwellianParams& b, const Vec3& xi, int n) {
    Rule r = gauss_legendre(n, 0.0, 1.0);
    return r.integrate([&](double th) { return mean_value_expansion(b, xi, th); });
}

MaxwellianParams scale_deviation(const MaxwellianParams& b, double s) {
    return path_point(b, s);
}

}  // namespace kinetic
