#pragma once

#include <Eigen/Dense>
#include <array>
#include <cmath>
#include <complex>
#include <memory>
#include <string>
#include <vector>

#include "kinetic/quadrature.hpp"

namespace kinetic {

using cplx = std::complex<double>;

// Azimuthal component carried by a sector-m function: f(s, c) cos(m phi) or
// f(s, c) sin(m phi).  Sector 0 is always Cos.
enum class Parity { Cos, Sin };

// Velocity-space discretization in spherical coordinates about the axis
// through `center` along e3.  Physical velocity of node (a, b) at azimuth phi:
//   xi = center*e3 + s_a (sqrt(1-c_b^2) cos phi, sqrt(1-c_b^2) sin phi, c_b).
// A grid built for a background of temperature lam uses radial nodes adapted
// to exp(-s^2/(2 lam)); the reference grid has center 0 and lam 1.
struct VelocityGrid {
    std::vector<double> speed_nodes;
    std::vector<double> speed_weights;  // includes s^2
    std::vector<double> cosine_nodes;
    std::vector<double> cosine_weights;
    int azimuthal_sector = 0;
    double cutoff_speed = 8.0;  // in units of sqrt(lam) about the frame center
    double center = 0.0;  // axial offset of the frame
    double lam = 1.0;     // temperature the radial rule is adapted to

    // Radial Gauss weights against s^2 exp(-s^2/(2 lam)).
    std::vector<double> speed_gauss_weights;

    int n_speed() const { return static_cast<int>(speed_nodes.size()); }
    int n_cosine() const { return static_cast<int>(cosine_nodes.size()); }
    int size() const { return n_speed() * n_cosine(); }
    int index(int a, int b) const { return a * n_cosine() + b; }

    double azimuthal_factor() const;
    // Node quadrature weight including the azimuthal factor.
    double weight(int i) const;
    Eigen::VectorXd weights() const;
    double physical_cutoff() const { return cutoff_speed * std::sqrt(lam); }
    double speed(int i) const { return speed_nodes[i / n_cosine()]; }
    double cosine(int i) const { return cosine_nodes[i % n_cosine()]; }
    // Physical axial component xi_3 at node i.
    double xi3(int i) const { return center + speed(i) * cosine(i); }
    // Physical |xi| at node i (azimuth 0 for the transverse part).
    double abs_xi(int i) const;
    // Physical velocity of node i at the given azimuth.
    std::array<double, 3> velocity(int i, double phi = 0.0) const;

    std::string spec_text() const;
    bool same_layout(const VelocityGrid& other) const;
};

using GridPtr = std::shared_ptr<const VelocityGrid>;

// Build the reference grid (center 0, lam 1).  Preconditions: n_speed,
// n_cosine >= 4 and s_max >= 6.  Sector m >= 1 uses Gauss–Jacobi(m, m) in the
// cosine so that (1-c^2)^(m/2)-weighted products are integrated exactly.
GridPtr build_grid(int n_speed, int n_cosine, double s_max, int sector);

// Grid adapted to a background Maxwellian with axial bulk velocity mu and
// temperature lam: the reference layout scaled by sqrt(lam) and shifted by mu.
GridPtr build_background_grid(int n_speed, int n_cosine, double s_max, int sector,
                              double mu, double lam);

// Same layout in another sector.
GridPtr with_sector(const VelocityGrid& g, int sector);

struct GridFunction {
    GridPtr grid;
    Eigen::VectorXcd values;
    Parity parity = Parity::Cos;

    GridFunction() = default;
    GridFunction(GridPtr g, Eigen::VectorXcd v, Parity p = Parity::Cos);
    int sector() const { return grid->azimuthal_sector; }
    std::size_t size() const { return static_cast<std::size_t>(values.size()); }
};

struct WeightSpec {
    double kappa0 = 0.0;
    std::array<double, 3> kappa{0.0, 0.0, 0.0};
    double kappa4 = 0.0;
    double beta = 0.0;

    // Validates kappa0 < 1/8 and beta >= 0.
    void validate() const;
    // Exponential part exp(kappa0 |xi|^2 + kappa . xi + kappa4) at node i
    // (azimuth 0).
    double exponential(const VelocityGrid& g, int i) const;
};

struct NormKind {
    enum Kind { L2, Lsigma, LinfBeta, LinfWeighted } kind = L2;
    double gamma = 0.0;
    double beta = 0.0;
    WeightSpec weight;

    static NormKind l2() { return {}; }
    static NormKind lsigma(double gamma) { NormKind n; n.kind = Lsigma; n.gamma = gamma; return n; }
    static NormKind linf_beta(double beta) { NormKind n; n.kind = LinfBeta; n.beta = beta; return n; }
    static NormKind linf_weighted(const WeightSpec& w, double beta) {
        NormKind n;
        n.kind = LinfWeighted;
        n.weight = w;
        n.beta = beta;
        return n;
    }
};

cplx inner(const GridFunction& f, const GridFunction& g);
double norm(const GridFunction& f, const NormKind& which);

inline double bracket(double x) { return std::sqrt(1.0 + x * x); }

// Sampling an analytic profile g(s, c) at the nodes of a grid.  For sectors
// m >= 1 the profile is the coefficient of cos(m phi) (or sin).
template <class F>
GridFunction sample(const GridPtr& g, F&& profile, Parity p = Parity::Cos) {
    Eigen::VectorXcd v(g->size());
    for (int i = 0; i < g->size(); ++i) v(i) = profile(g->speed(i), g->cosine(i));
    return GridFunction(g, std::move(v), p);
}

// Orthonormal collision invariants of the reference Maxwellian on a grid in
// its sector: m=0 gives {chi0, chi3, chi4}; m=1 gives {chi1} (cos) or {chi2}
// (sin).  Other sectors carry none.
std::vector<GridFunction> chi_basis(const GridPtr& g, Parity p = Parity::Cos);

// Individual invariants chi_0..chi_4 with the standard normalization; chi_1
// and chi_2 require sector 1 (cos / sin parity), the rest sector 0.
GridFunction chi(const GridPtr& g, int index);

// Plain-text grid block (keys n_speed, n_cosine, s_max, sectors).
struct GridSpec {
    int n_speed = 24;
    int n_cosine = 12;
    double s_max = 8.0;
    std::vector<int> sectors{0, 1};

    std::string to_text() const;
    static GridSpec from_text(const std::string& text);
};

}  // namespace kinetic
