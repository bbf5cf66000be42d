#pragma once

#include <array>

#include "kinetic/grid.hpp"

namespace kinetic {

// Background state (density, bulk velocity, temperature), gas constant 1.
// Experiments align mu with the wavevector axis e3.
struct MaxwellianParams {
    double rho = 1.0;
    std::array<double, 3> mu{0.0, 0.0, 0.0};
    double lam = 1.0;

    static MaxwellianParams axial(double rho, double mu3, double lam) {
        return {rho, {0.0, 0.0, mu3}, lam};
    }
    double mu_norm() const;
    double mu_axial() const { return mu[2]; }
    bool is_reference() const { return rho == 1.0 && lam == 1.0 && mu_norm() == 0.0; }
    void validate() const;
};

// Admissible box for experiments: 1 < lam_lo < lam < lam_hi < 2,
// 0 < rho < rho_hi, |mu| < mu_hi.
struct AdmissibleBox {
    double lam_lo = 1.0;
    double lam_hi = 2.0;
    double rho_hi = 10.0;
    double mu_hi = 1.0;

    bool contains(const MaxwellianParams& b) const;
};

struct BackgroundPair {
    MaxwellianParams a;  // always (1, 0, 1)
    MaxwellianParams b;

    explicit BackgroundPair(const MaxwellianParams& b_) : b(b_) {}
    bool trivial() const { return b.is_reference(); }
};

using Vec3 = std::array<double, 3>;

double eval_maxwellian(const MaxwellianParams& p, const Vec3& xi);
double sqrt_maxwellian(const MaxwellianParams& p, const Vec3& xi);

// sqrt(M_b)/sqrt(M_a) by the completed-square closed form.  Requires lam > 1
// unless relaxed (then the direct quotient is used for lam <= 1).
double sqrt_ratio(const MaxwellianParams& b, const Vec3& xi, bool relaxed = false);
double sqrt_ratio_direct(const MaxwellianParams& b, const Vec3& xi);

// <xi>^beta (M_b - M_a) / sqrt(M_a).
double weighted_difference(const MaxwellianParams& b, const Vec3& xi, double beta);

// |rho - 1| + |lam - 1| + |mu|.
double macro_error(const MaxwellianParams& b);

// Max over grid nodes of |weighted_difference| / (exp(-(2-lam_bar)/16 |xi|^2) B).
// Preconditions: 1 <= lam < lam_bar < 2, rho > 0, B > 0.
double lemma_bound_ratio(const MaxwellianParams& b, double beta, const VelocityGrid& grid,
                         double lam_bar);

// Integrand d/dtheta M_theta(xi) along the straight path of parameters
// (1 + theta (rho-1), theta mu, 1 + theta (lam-1)) from a to b.
double mean_value_expansion(const MaxwellianParams& b, const Vec3& xi, double theta);
// The bracket alone: integrand / M_theta(xi).
double mean_value_bracket(const MaxwellianParams& b, const Vec3& xi, double theta);
// int_0^1 of the integrand by Gauss-Legendre with n nodes.
double mean_value_reconstruction(const MaxwellianParams& b, const Vec3& xi, int n = 24);

// Parameters with (rho-1, mu, lam-1) multiplied by s.
MaxwellianParams scale_deviation(const MaxwellianParams& b, double s);

}  // namespace kinetic
