#pragma once

#include <array>
#include <vector>

#include "kinetic/report.hpp"

namespace kinetic {

using Vec3 = std::array<double, 3>;

// Two heat flows on R^3 started from the same data:
//   d_t h^a = Lap h^a,   d_t h^b + mu . grad h^b = kappa Lap h^b,
// with kappa = lam^{(2 - gamma)/2}.
struct HeatParams {
    Vec3 mu{0.0, 0.0, 0.0};
    double lam = 1.0;
    double gamma = 0.0;

    double kappa() const;
    double mu_norm() const;
    // lam in [1, 2], gamma in [0, 1].
    void validate() const;
};

enum class Flow { A, B };

// Fundamental solution of the flow at (t, x); t > 0 (DomainError otherwise).
double heat_kernel(const HeatParams& p, Flow f, double t, const Vec3& x);

// Radial Gaussian initial datum amplitude * exp(-|x|^2 / (2 width^2)).
struct GaussianDatum {
    double width = 1.0;
    double amplitude = 1.0;

    double mass() const;
    double value(const Vec3& x) const;
};

// mass * N(center, variance I): every solution from Gaussian data (and the
// kernels themselves, variance 0 data) has this form.
struct GaussianState {
    double mass = 1.0;
    double variance = 1.0;
    Vec3 center{0.0, 0.0, 0.0};

    double value(const Vec3& x) const;
};

// Kernel variance per coordinate is 2t for flow A and 2 kappa t for flow B,
// so h^a = N(0, w^2 + 2t) and h^b = N(mu t, w^2 + 2 kappa t) times the mass.
GaussianState heat_solution(const HeatParams& p, Flow f, const GaussianDatum& h0, double t);
GaussianState kernel_state(const HeatParams& p, Flow f, double t);

inline constexpr double kInfNorm = -1.0;  // pass as p for the sup norm

// |b - a|_{L^p} for p in {1, 2, kInfNorm}.  p = 2 is closed form; p = 1 uses
// an axisymmetric (axial, radial) composite Gauss-Legendre rule; the sup norm
// uses nested grid refinement.  NumericalError if the box misses more than
// 0.5% of either mass.
double difference_norm(const GaussianState& a, const GaussianState& b, double p);
// Same norm for p = 2 by quadrature (cross-check of the closed form).
double difference_l2_quadrature(const GaussianState& a, const GaussianState& b);

double kernel_difference_norm(const HeatParams& p, double norm_p, double t);

// Kernel difference K_b - K_a rebuilt from the mean-value path in theta
// (Gauss-Legendre with `nodes` points).
double mean_value_difference(const HeatParams& p, double t, const Vec3& x, int nodes = 40);

struct SolutionDifference {
    GaussianState a, b;
    double l1 = 0.0, l2 = 0.0, linf = 0.0;  // norms of h^b - h^a
    double value(const Vec3& x) const { return b.value(x) - a.value(x); }
};

SolutionDifference solution_difference(const HeatParams& p, const GaussianDatum& h0, double t);

// h(t, x) = int K(t, x - y) h0(y) dy by tensor Gauss-Legendre quadrature in
// y (no Gaussian algebra): the oracle for the closed forms.
double convolve_direct(const HeatParams& p, Flow f, const GaussianDatum& h0, double t, const Vec3& x,
                       int nodes_per_axis = 96);

// Alternative route for h = h^a - h^b: Duhamel's formula with source
// mu . grad h^b - (kappa - 1) Lap h^b, split at t/2.  h1 uses the
// integrated-by-parts form on [0, t/2], h2 the direct form on [t/2, t].
// Spatial convolutions are Gaussian moments in closed form; the time
// integrals use adaptive composite Gauss-Legendre (NumericalError if the
// relative change does not drop below tol).
struct DuhamelSplit {
    double h1 = 0.0;
    double h2 = 0.0;
    int panels = 0;
};
DuhamelSplit duhamel_route(const HeatParams& p, const GaussianDatum& h0, double t, const Vec3& x,
                           double tol = 1e-12);

struct HeatConfig {
    GaussianDatum h0;
    double t1 = 10.0, t2 = 1e4;
    int per_decade = 12;
    double mu_drift = 1e-3;      // drift-only regime (gated)
    double mu_explore = 0.1;     // exploratory drift and mixed regimes
    double lam_temperature = 1.5;
    double gamma = 0.0;
    double tol_slope = 0.05;
    double tol_quadrature = 1e-8;
    double tol_duhamel = 1e-6;
    std::vector<double> duhamel_times{2.0, 10.0, 50.0};
    int jobs = 0;
};

// Fitted slopes for {drift, temperature} x {L_inf, L2}, the exploratory
// large-drift and mixed regimes, and the structural checks.
Report heat_rate_table(const HeatConfig& cfg);

}  // namespace kinetic
