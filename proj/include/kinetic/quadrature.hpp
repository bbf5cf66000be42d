#pragma once

#include <functional>
#include <vector>

namespace kinetic {

struct Rule {
    std::vector<double> nodes;
    std::vector<double> weights;

    std::size_t size() const { return nodes.size(); }
    double integrate(const std::function<double(double)>& f) const;
};

// Gauss–Legendre on [a, b], Newton-refined.
Rule gauss_legendre(int n, double a = -1.0, double b = 1.0);

// Gauss–Jacobi for weight (1-x)^alpha (1+x)^beta on [-1, 1].
Rule gauss_jacobi(int n, double alpha, double beta);

// Golub–Welsch from three-term recurrence coefficients of monic orthogonal
// polynomials; mu0 is the total mass of the weight.
Rule gauss_from_recurrence(const std::vector<double>& alpha,
                           const std::vector<double>& beta, double mu0);

// Gauss rule for an arbitrary positive weight on [a, b], via discretized
// Stieltjes on a fine composite Gauss–Legendre measure.
Rule gauss_for_weight(int n, const std::function<double(double)>& weight, double a,
                      double b, int panels = 16, int per_panel = 40);

// Gauss rule for s^2 exp(-s^2/(2 lam)) on [0, s_max].  Weights returned are the
// Gauss weights with respect to that weight function.
Rule gauss_maxwell_radial(int n, double s_max, double lam = 1.0);

// Composite Gauss–Legendre over consecutive breakpoints.
Rule composite_gauss_legendre(const std::vector<double>& breaks, int per_panel);

// Trapezoid rule on the periodic interval [0, 2 pi) with n nodes.
Rule periodic_trapezoid(int n);

// Chebyshev points of the first kind mapped to [a, b].
std::vector<double> chebyshev_points(int n, double a, double b);

// Barycentric Lagrange interpolation on a fixed node set.
class Lagrange {
public:
    Lagrange() = default;
    explicit Lagrange(std::vector<double> nodes);

    std::size_t size() const { return nodes_.size(); }
    const std::vector<double>& nodes() const { return nodes_; }

    // Values of all cardinal polynomials at x; out has size() entries.
    void basis(double x, double* out) const;
    double interpolate(const double* values, double x) const;

private:
    std::vector<double> nodes_;
    std::vector<double> bary_;
};

// P_0..P_lmax at x.
void legendre_values(int lmax, double x, double* out);

}  // namespace kinetic
