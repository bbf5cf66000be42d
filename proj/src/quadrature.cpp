#include "kinetic/quadrature.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <numbers>

#include "kinetic/errors.hpp"

namespace kinetic {

double Rule::integrate(const std::function<double(double)>& f) const {
    double sum = 0.0;
    for (std::size_t i = 0; i < nodes.size(); ++i) sum += weights[i] * f(nodes[i]);
    return sum;
}

Rule gauss_legendre(int n, double a, double b) {
    if (n < 1) throw ConfigError("gauss_legendre: n must be positive");
    Rule r;
    r.nodes.resize(n);
    r.weights.resize(n);
    const double pi = std::numbers::pi;
    for (int i = 0; i < (n + 1) / 2; ++i) {
        double x = std::cos(pi * (i + 0.75) / (n + 0.5));
        double dp = 0.0;
        for (int it = 0; it < 100; ++it) {
            double p0 = 1.0, p1 = x;
            for (int k = 2; k <= n; ++k) {
                double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
                p0 = p1;
                p1 = p2;
            }
            if (n == 1) { p1 = x; p0 = 1.0; }
            dp = n * (x * p1 - p0) / (x * x - 1.0);
            double dx = p1 / dp;
            x -= dx;
            if (std::abs(dx) < 1e-16) break;
        }
        {
            double p0 = 1.0, p1 = x;
            for (int k = 2; k <= n; ++k) {
                double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
                p0 = p1;
                p1 = p2;
            }
            if (n == 1) { p1 = x; p0 = 1.0; }
            dp = n * (x * p1 - p0) / (x * x - 1.0);
        }
        double w = 2.0 / ((1.0 - x * x) * dp * dp);
        r.nodes[i] = -x;
        r.nodes[n - 1 - i] = x;
        r.weights[i] = w;
        r.weights[n - 1 - i] = w;
    }
    if (n % 2 == 1) r.nodes[n / 2] = 0.0;
    const double h = 0.5 * (b - a), c = 0.5 * (b + a);
    for (int i = 0; i < n; ++i) {
        r.nodes[i] = c + h * r.nodes[i];
        r.weights[i] *= h;
    }
    return r;
}

Rule gauss_from_recurrence(const std::vector<double>& alpha,
                           const std::vector<double>& beta, double mu0) {
    const int n = static_cast<int>(alpha.size());
    Eigen::MatrixXd J = Eigen::MatrixXd::Zero(n, n);
    for (int k = 0; k < n; ++k) J(k, k) = alpha[k];
    for (int k = 1; k < n; ++k) {
        J(k, k - 1) = std::sqrt(beta[k]);
        J(k - 1, k) = J(k, k - 1);
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(J);
    if (es.info() != Eigen::Success) throw NumericalError("Golub-Welsch eigensolve failed");
    Rule r;
    r.nodes.resize(n);
    r.weights.resize(n);
    for (int i = 0; i < n; ++i) {
        r.nodes[i] = es.eigenvalues()(i);
        double v0 = es.eigenvectors()(0, i);
        r.weights[i] = mu0 * v0 * v0;
    }
    return r;
}

Rule gauss_jacobi(int n, double alpha, double beta) {
    if (n < 1) throw ConfigError("gauss_jacobi: n must be positive");
    std::vector<double> a(n), b(n, 0.0);
    const double ab = alpha + beta;
    for (int k = 0; k < n; ++k) {
        double d = (2.0 * k + ab) * (2.0 * k + ab + 2.0);
        a[k] = (d == 0.0) ? (beta - alpha) / (ab + 2.0) : (beta * beta - alpha * alpha) / d;
    }
    for (int k = 1; k < n; ++k) {
        double s = 2.0 * k + ab;
        b[k] = 4.0 * k * (k + alpha) * (k + beta) * (k + ab) / (s * s * (s + 1.0) * (s - 1.0));
    }
    double mu0 = std::pow(2.0, ab + 1.0) * std::tgamma(alpha + 1.0) * std::tgamma(beta + 1.0) /
                 std::tgamma(ab + 2.0);
    Rule r = gauss_from_recurrence(a, b, mu0);
    // Symmetric weights: enforce exact node/weight symmetry.
    if (alpha == beta) {
        for (int i = 0; i < n / 2; ++i) {
            double x = 0.5 * (r.nodes[n - 1 - i] - r.nodes[i]);
            r.nodes[i] = -x;
            r.nodes[n - 1 - i] = x;
            double w = 0.5 * (r.weights[i] + r.weights[n - 1 - i]);
            r.weights[i] = w;
            r.weights[n - 1 - i] = w;
        }
        if (n % 2 == 1) r.nodes[n / 2] = 0.0;
    }
    return r;
}

Rule composite_gauss_legendre(const std::vector<double>& breaks, int per_panel) {
    Rule out;
    for (std::size_t p = 0; p + 1 < breaks.size(); ++p) {
        Rule g = gauss_legendre(per_panel, breaks[p], breaks[p + 1]);
        out.nodes.insert(out.nodes.end(), g.nodes.begin(), g.nodes.end());
        out.weights.insert(out.weights.end(), g.weights.begin(), g.weights.end());
    }
    return out;
}

Rule gauss_for_weight(int n, const std::function<double(double)>& weight, double a,
                      double b, int panels, int per_panel) {
    if (n < 1) throw ConfigError("gauss_for_weight: n must be positive");
    std::vector<double> breaks(panels + 1);
    for (int p = 0; p <= panels; ++p) breaks[p] = a + (b - a) * p / panels;
    Rule fine = composite_gauss_legendre(breaks, per_panel);
    const std::size_t M = fine.size();
    std::vector<double> w(M);
    double mu0 = 0.0;
    for (std::size_t i = 0; i < M; ++i) {
        w[i] = fine.weights[i] * weight(fine.nodes[i]);
        mu0 += w[i];
    }
    // Discretized Stieltjes with per-step renormalization of the polynomials.
    std::vector<double> alpha(n), beta(n, 0.0);
    std::vector<double> pm1(M, 0.0), p0(M, 1.0), p1(M);
    double norm_prev = 1.0;
    for (int k = 0; k < n; ++k) {
        double nk = 0.0, xk = 0.0;
        for (std::size_t i = 0; i < M; ++i) {
            double q = w[i] * p0[i] * p0[i];
            nk += q;
            xk += q * fine.nodes[i];
        }
        alpha[k] = xk / nk;
        if (k > 0) beta[k] = nk / norm_prev;
        for (std::size_t i = 0; i < M; ++i)
            p1[i] = (fine.nodes[i] - alpha[k]) * p0[i] - (k > 0 ? beta[k] * pm1[i] : 0.0);
        // Rescale p0, p1 jointly; beta ratios are invariant under the common factor.
        double s = 1.0 / std::sqrt(nk);
        for (std::size_t i = 0; i < M; ++i) {
            pm1[i] = p0[i] * s;
            p0[i] = p1[i] * s;
        }
        norm_prev = 1.0;
    }
    return gauss_from_recurrence(alpha, beta, mu0);
}

Rule gauss_maxwell_radial(int n, double s_max, double lam) {
    if (!(lam > 0.0)) throw DomainError("gauss_maxwell_radial: temperature must be positive");
    const int panels = std::max(16, 2 * n);
    return gauss_for_weight(
        n, [lam](double s) { return s * s * std::exp(-s * s / (2.0 * lam)); }, 0.0, s_max,
        panels, 40);
}

Rule periodic_trapezoid(int n) {
    if (n < 1) throw ConfigError("periodic_trapezoid: n must be positive");
    Rule r;
    const double h = 2.0 * std::numbers::pi / n;
    for (int k = 0; k < n; ++k) {
        r.nodes.push_back(k * h);
        r.weights.push_back(h);
    }
    return r;
}

std::vector<double> chebyshev_points(int n, double a, double b) {
    std::vector<double> x(n);
    for (int k = 0; k < n; ++k) {
        double t = std::cos(std::numbers::pi * (2.0 * (n - 1 - k) + 1.0) / (2.0 * n));
        x[k] = 0.5 * (a + b) + 0.5 * (b - a) * t;
    }
    return x;
}

Lagrange::Lagrange(std::vector<double> nodes) : nodes_(std::move(nodes)) {
    const std::size_t n = nodes_.size();
    bary_.assign(n, 1.0);
    // Scale differences by the interval length to keep weights representable.
    double lo = nodes_.front(), hi = nodes_.front();
    for (double x : nodes_) {
        lo = std::min(lo, x);
        hi = std::max(hi, x);
    }
    const double scale = (hi > lo) ? 4.0 / (hi - lo) : 1.0;
    for (std::size_t j = 0; j < n; ++j) {
        double prod = 1.0;
        for (std::size_t k = 0; k < n; ++k)
            if (k != j) prod *= scale * (nodes_[j] - nodes_[k]);
        bary_[j] = 1.0 / prod;
    }
}

void Lagrange::basis(double x, double* out) const {
    const std::size_t n = nodes_.size();
    for (std::size_t j = 0; j < n; ++j) {
        if (x == nodes_[j]) {
            for (std::size_t k = 0; k < n; ++k) out[k] = 0.0;
            out[j] = 1.0;
            return;
        }
    }
    double denom = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
        out[j] = bary_[j] / (x - nodes_[j]);
        denom += out[j];
    }
    // Second (true) barycentric form: sum of cardinal values is exactly one,
    // which keeps polynomial reproduction at round-off level.
    for (std::size_t j = 0; j < n; ++j) out[j] /= denom;
}

double Lagrange::interpolate(const double* values, double x) const {
    std::vector<double> b(nodes_.size());
    basis(x, b.data());
    double s = 0.0;
    for (std::size_t j = 0; j < b.size(); ++j) s += b[j] * values[j];
    return s;
}

void legendre_values(int lmax, double x, double* out) {
    out[0] = 1.0;
    if (lmax >= 1) out[1] = x;
    for (int l = 2; l <= lmax; ++l)
        out[l] = ((2.0 * l - 1.0) * x * out[l - 1] - (l - 1.0) * out[l - 2]) / l;
}

}  // namespace kinetic
