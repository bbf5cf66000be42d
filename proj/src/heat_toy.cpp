#include "kinetic/heat_toy.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "kinetic/errors.hpp"
#include "kinetic/parallel.hpp"
#include "kinetic/quadrature.hpp"
#include "kinetic/semigroup.hpp"

namespace kinetic {

namespace {

constexpr double kPi = 3.14159265358979323846;

double dot(const Vec3& a, const Vec3& b) { return a[0] * b[0] + a[1] * b[1] + a[2] * b[2]; }
Vec3 sub(const Vec3& a, const Vec3& b) { return {a[0] - b[0], a[1] - b[1], a[2] - b[2]}; }
Vec3 scale(const Vec3& a, double s) { return {a[0] * s, a[1] * s, a[2] * s}; }

// N(0, v I) density at squared distance r2.
double gauss3(double v, double r2) { return std::exp(-0.5 * r2 / v) / std::pow(2.0 * kPi * v, 1.5); }

// Mass of a standard 3-D Gaussian outside the ball of radius R.
double tail3(double R) { return std::erfc(R / std::sqrt(2.0)) + std::sqrt(2.0 / kPi) * R * std::exp(-0.5 * R * R); }

// Axisymmetric frame: a at z = 0, b at z = L on the axis.
struct Pair {
    double ma, va, mb, vb, L;
    double diff(double z, double rho) const {
        double r2 = rho * rho;
        return mb * gauss3(vb, (z - L) * (z - L) + r2) - ma * gauss3(va, z * z + r2);
    }
};

Pair make_pair_frame(const GaussianState& a, const GaussianState& b) {
    Vec3 d = sub(b.center, a.center);
    return {a.mass, a.variance, b.mass, b.variance, std::sqrt(dot(d, d))};
}

struct Box {
    double z0, z1, r1;
};

Box covering_box(const Pair& p) {
    const double s = std::sqrt(std::max(p.va, p.vb));
    const double R = 12.0;
    Box b{std::min(0.0, p.L) - R * s, std::max(0.0, p.L) + R * s, R * s};
    double tail = std::max(tail3(R * s / std::sqrt(p.va)), tail3(R * s / std::sqrt(p.vb)));
    if (tail > 5e-3) throw NumericalError("difference_norm: quadrature box misses " + std::to_string(tail) + " of the mass");
    return b;
}

template <class F>
double integrate_axisymmetric(const Box& box, int panels, F&& f) {
    Rule gl = gauss_legendre(8);
    const double hz = (box.z1 - box.z0) / panels, hr = box.r1 / panels;
    double total = 0.0;
    for (int pz = 0; pz < panels; ++pz)
        for (std::size_t iz = 0; iz < gl.size(); ++iz) {
            double z = box.z0 + hz * (pz + 0.5 * (gl.nodes[iz] + 1.0));
            double wz = 0.5 * hz * gl.weights[iz];
            double row = 0.0;
            for (int pr = 0; pr < panels; ++pr)
                for (std::size_t ir = 0; ir < gl.size(); ++ir) {
                    double rho = hr * (pr + 0.5 * (gl.nodes[ir] + 1.0));
                    row += 0.5 * hr * gl.weights[ir] * 2.0 * kPi * rho * f(z, rho);
                }
            total += wz * row;
        }
    return total;
}

double sup_norm(const Pair& p) {
    Box box = covering_box(p);
    double z0 = box.z0, z1 = box.z1, r0 = 0.0, r1 = box.r1;
    const int n = 101;
    double best = 0.0, prev = -1.0;
    for (int it = 0; it < 60; ++it) {
        double bz = z0, br = r0;
        best = 0.0;
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) {
                double z = z0 + (z1 - z0) * i / (n - 1), rho = r0 + (r1 - r0) * j / (n - 1);
                double v = std::abs(p.diff(z, rho));
                if (v > best) {
                    best = v;
                    bz = z;
                    br = rho;
                }
            }
        if (prev > 0.0 && std::abs(best - prev) <= 1e-13 * best) break;
        prev = best;
        double dz = 2.0 * (z1 - z0) / (n - 1), dr = 2.0 * (r1 - r0) / (n - 1);
        z0 = bz - dz;
        z1 = bz + dz;
        r0 = std::max(0.0, br - dr);
        r1 = br + dr;
    }
    return best;
}

}  // namespace

double HeatParams::kappa() const { return std::pow(lam, 0.5 * (2.0 - gamma)); }

double HeatParams::mu_norm() const { return std::sqrt(dot(mu, mu)); }

void HeatParams::validate() const {
    if (!(lam >= 1.0 && lam <= 2.0)) throw ConfigError("heat: lam must lie in [1, 2]", "lam");
    if (!(gamma >= 0.0 && gamma <= 1.0)) throw ConfigError("heat: gamma must lie in [0, 1]", "gamma");
    for (double m : mu)
        if (!std::isfinite(m)) throw ConfigError("heat: drift must be finite", "mu");
}

double heat_kernel(const HeatParams& p, Flow f, double t, const Vec3& x) {
    if (!(t > 0.0)) throw DomainError("heat_kernel: t must be positive");
    return kernel_state(p, f, t).value(x);
}

double GaussianDatum::mass() const { return amplitude * std::pow(2.0 * kPi, 1.5) * width * width * width; }

double GaussianDatum::value(const Vec3& x) const { return amplitude * std::exp(-0.5 * dot(x, x) / (width * width)); }

double GaussianState::value(const Vec3& x) const {
    Vec3 d = sub(x, center);
    return mass * gauss3(variance, dot(d, d));
}

GaussianState kernel_state(const HeatParams& p, Flow f, double t) {
    if (!(t > 0.0)) throw DomainError("kernel: t must be positive");
    GaussianState s;
    s.mass = 1.0;
    if (f == Flow::A) {
        s.variance = 2.0 * t;
    } else {
        s.variance = 2.0 * p.kappa() * t;
        s.center = scale(p.mu, t);
    }
    return s;
}

GaussianState heat_solution(const HeatParams& p, Flow f, const GaussianDatum& h0, double t) {
    if (t < 0.0) throw DomainError("heat_solution: t must be non-negative");
    GaussianState s;
    s.mass = h0.mass();
    s.variance = h0.width * h0.width + 2.0 * (f == Flow::A ? 1.0 : p.kappa()) * t;
    if (f == Flow::B) s.center = scale(p.mu, t);
    return s;
}

double difference_norm(const GaussianState& a, const GaussianState& b, double p) {
    Pair pr = make_pair_frame(a, b);
    if (p == 2.0) {
        // ma^2 A + mb^2 B - 2 ma mb C e^{-L^2/(2(va+vb))} regrouped into
        // non-negative pieces so nearly equal states do not cancel.
        const double c0 = std::pow(4.0 * kPi, -1.5);
        const double A = c0 * std::pow(pr.va, -1.5), B = c0 * std::pow(pr.vb, -1.5);
        const double am = 0.5 * (pr.va + pr.vb), gm = std::sqrt(pr.va * pr.vb);
        const double gap = 0.5 * (std::sqrt(pr.va) - std::sqrt(pr.vb)) * (std::sqrt(pr.va) - std::sqrt(pr.vb));
        const double C = c0 * std::pow(am, -1.5);
        const double amp = pr.ma * std::sqrt(A) - pr.mb * std::sqrt(B);
        double s = amp * amp + 2.0 * pr.ma * pr.mb * C * std::expm1(1.5 * std::log1p(gap / gm)) -
                   2.0 * pr.ma * pr.mb * C * std::expm1(-pr.L * pr.L / (4.0 * am));
        return std::sqrt(std::max(0.0, s));
    }
    if (p == 1.0) {
        Box box = covering_box(pr);
        return integrate_axisymmetric(box, 96, [&](double z, double rho) { return std::abs(pr.diff(z, rho)); });
    }
    if (p == kInfNorm) return sup_norm(pr);
    throw DomainError("difference_norm: p must be 1, 2 or kInfNorm");
}

double difference_l2_quadrature(const GaussianState& a, const GaussianState& b) {
    Pair pr = make_pair_frame(a, b);
    Box box = covering_box(pr);
    double s = integrate_axisymmetric(box, 96, [&](double z, double rho) {
        double d = pr.diff(z, rho);
        return d * d;
    });
    return std::sqrt(s);
}

double kernel_difference_norm(const HeatParams& p, double norm_p, double t) {
    p.validate();
    return difference_norm(kernel_state(p, Flow::A, t), kernel_state(p, Flow::B, t), norm_p);
}

double mean_value_difference(const HeatParams& p, double t, const Vec3& x, int nodes) {
    if (!(t > 0.0)) throw DomainError("mean_value_difference: t must be positive");
    Rule gl = gauss_legendre(nodes, 0.0, 1.0);
    const double km1 = p.kappa() - 1.0;
    double total = 0.0;
    for (std::size_t k = 0; k < gl.size(); ++k) {
        const double th = gl.nodes[k];
        const double c = 1.0 + km1 * th;
        Vec3 y = sub(x, scale(p.mu, th * t));
        const double y2 = dot(y, y);
        const double g = std::exp(-y2 / (4.0 * c * t)) / std::pow(4.0 * kPi * c * t, 1.5);
        const double br = -3.0 * km1 / (2.0 * c) + dot(p.mu, y) / (2.0 * c) + km1 * y2 / (4.0 * t * c * c);
        total += gl.weights[k] * g * br;
    }
    return total;
}

SolutionDifference solution_difference(const HeatParams& p, const GaussianDatum& h0, double t) {
    p.validate();
    SolutionDifference d;
    d.a = heat_solution(p, Flow::A, h0, t);
    d.b = heat_solution(p, Flow::B, h0, t);
    d.l2 = difference_norm(d.a, d.b, 2.0);
    d.linf = difference_norm(d.a, d.b, kInfNorm);
    d.l1 = difference_norm(d.a, d.b, 1.0);
    return d;
}

double convolve_direct(const HeatParams& p, Flow f, const GaussianDatum& h0, double t, const Vec3& x,
                       int nodes_per_axis) {
    if (!(t > 0.0)) throw DomainError("convolve_direct: t must be positive");
    GaussianState K = kernel_state(p, f, t);
    // The integrand K(x - y) h0(y) is concentrated where both factors are;
    // the box follows the narrower factor.
    const double w2 = h0.width * h0.width;
    const double spread = std::sqrt(std::min(w2, K.variance));
    Vec3 xc = sub(x, K.center);
    Vec3 mid = scale(xc, w2 / (w2 + K.variance));
    const double half = 12.0 * spread;
    const int panels = std::max(1, nodes_per_axis / 16);
    Rule gl = gauss_legendre(16);
    std::vector<double> off, wt;
    for (int pnl = 0; pnl < panels; ++pnl)
        for (std::size_t k = 0; k < gl.size(); ++k) {
            double h = 2.0 * half / panels;
            off.push_back(-half + h * (pnl + 0.5 * (gl.nodes[k] + 1.0)));
            wt.push_back(0.5 * h * gl.weights[k]);
        }
    double total = 0.0;
    for (std::size_t i = 0; i < off.size(); ++i)
        for (std::size_t j = 0; j < off.size(); ++j)
            for (std::size_t k = 0; k < off.size(); ++k) {
                Vec3 y{mid[0] + off[i], mid[1] + off[j], mid[2] + off[k]};
                total += wt[i] * wt[j] * wt[k] * K.value(sub(x, y)) * h0.value(y);
            }
    return total;
}

namespace {

template <class F>
double adaptive_gl(F&& f, double a, double b, double tol, double floor, int& panels) {
    Rule gl = gauss_legendre(8);
    auto composite = [&](int n) {
        double h = (b - a) / n, s = 0.0;
        for (int p = 0; p < n; ++p)
            for (std::size_t k = 0; k < gl.size(); ++k) s += 0.5 * h * gl.weights[k] * f(a + h * (p + 0.5 * (gl.nodes[k] + 1.0)));
        return s;
    };
    double prev = composite(1);
    for (int n = 2; n <= (1 << 14); n *= 2) {
        double cur = composite(n);
        if (std::abs(cur - prev) <= tol * std::abs(cur) || std::abs(cur - prev) <= floor) {
            panels = n;
            return cur;
        }
        prev = cur;
    }
    throw NumericalError("duhamel_route: time quadrature did not converge");
}

}  // namespace

DuhamelSplit duhamel_route(const HeatParams& p, const GaussianDatum& h0, double t, const Vec3& x, double tol) {
    p.validate();
    if (!(t > 0.0)) throw DomainError("duhamel_route: t must be positive");
    const double M = h0.mass(), w2 = h0.width * h0.width, km1 = p.kappa() - 1.0, kap = p.kappa();

    // [0, t/2]: int K(t-s, x-y) (-(x-y)/(2(t-s))) . [mu h^b - (kappa-1) grad h^b](s, y) dy
    // with K = N(0, a), h^b = M N(mu s, b): Gaussian first and mixed moments.
    auto by_parts = [&](double s) {
        const double tau = t - s, a = 2.0 * tau, b = w2 + 2.0 * kap * s, v = a + b;
        Vec3 d = sub(x, scale(p.mu, s));
        const double N = gauss3(v, dot(d, d));
        const double drift = -(a / v) * dot(p.mu, d) / (2.0 * tau);
        const double diffusion = -km1 / (2.0 * tau) * (a / (v * v) * dot(d, d) - 3.0 * a / v);
        return M * N * (drift + diffusion);
    };
    // [t/2, t]: K(t-s) * [mu . grad h^b - (kappa-1) Lap h^b] = mu . grad G - (kappa-1) Lap G,
    // G = M N(mu s, w^2 + 2 kappa s + 2 (t-s)).
    auto direct = [&](double s) {
        const double v = w2 + 2.0 * kap * s + 2.0 * (t - s);
        Vec3 d = sub(x, scale(p.mu, s));
        const double r2 = dot(d, d), G = M * gauss3(v, r2);
        return -dot(p.mu, d) / v * G - km1 * (r2 / (v * v) - 3.0 / v) * G;
    };
    const double floor = 1e-16 * M * gauss3(w2 + 2.0 * std::min(1.0, kap) * t, 0.0) * (1.0 + p.mu_norm() * t);
    DuhamelSplit out;
    int n1 = 0, n2 = 0;
    out.h1 = adaptive_gl(by_parts, 0.0, 0.5 * t, tol, floor, n1);
    out.h2 = adaptive_gl(direct, 0.5 * t, t, tol, floor, n2);
    out.panels = n1 + n2;
    return out;
}

}  // namespace kinetic
