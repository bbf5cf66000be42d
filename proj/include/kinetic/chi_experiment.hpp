#pragma once

#include <Eigen/Dense>
#include <array>
#include <vector>

#include "kinetic/semigroup.hpp"

namespace kinetic {

// xi-profile of the initial perturbation f0^a around the reference
// Maxwellian: sqrt(M) (fluid) or (|xi|^4 - 10 |xi|^2 + 15) sqrt(M), which is
// isotropic and orthogonal to every collision invariant.
enum class XiProfile { Kernel, NonFluid };
std::string to_string(XiProfile p);
XiProfile xi_profile_from_string(const std::string& name);
double xi_profile_value(XiProfile p, const Vec3& xi);

struct ChiConfig {
    OperatorSetup setup;  // reference grid and collision model (its background is ignored)
    MaxwellianParams b = MaxwellianParams::axial(1.002, 0.003, 1.006);
    double beta = 4.0;
    SpaceProfile profile;
    XiProfile xi = XiProfile::Kernel;
    double epsilon = 1.0;
    double delta = 0.0;  // 0: half the gap-separation radius of L_a
    double t_min = 0.1, t_max = 300.0;
    int per_decade = 12;
    double fit_t1 = 20.0, fit_t2 = 300.0;
    double tol_linf = 0.15, tol_l2 = 0.10;
    double naive_bound = -0.80;
    std::vector<double> scales{1.0, 0.5, 0.25};
    std::vector<double> scan_times{10.0, 20.0, 50.0, 100.0};
    double tol_linear = 0.10;
    double decomposition_time = 200.0;
    int decomposition_per_decade = 6;
    double dominance = 0.6;
    double exp_t1 = 1.0, exp_t2 = 20.0;
    double tol_sum = 1e-8;
    double tol_crosscheck = 1e-5;
    double tol_invariant = 1e-6;
    RGridSpec r_grid;
    int jobs = 0;
    AssemblyOptions assembly;

    // ConfigError naming the offending key.
    void validate() const;
};

// f0^b = (sqrt(M_a) / sqrt(M_b)) f0^a at the nodes of grid_b (the initial
// perturbations of both problems are the same function sqrt(M) f0).
GridFunction derive_f0b(const ChiConfig& cfg, const MaxwellianParams& b, const GridPtr& grid_b);
GridFunction derive_f0b(const ChiConfig& cfg, const GridPtr& grid_b);

// Linearized operator around M_b on the grid adapted to b.
CollisionOperator assemble_Lb(const BackgroundPair& pair, const OperatorSetup& setup, int sector,
                              const AssemblyOptions& opts = {});

// Max over r of the matching distance between the spectrum of -i r xi_3 + L_b
// and the change-of-variables transform of the L_a spectrum, relative to the
// largest eigenvalue magnitude.
double lb_crosscheck(const CollisionOperator& La, const CollisionOperator& Lb, const MaxwellianParams& b,
                     double gamma, const std::vector<double>& rs);

struct ChiOperators {
    MaxwellianParams b;
    GridPtr grid_a, grid_b;
    const CollisionOperator* La = nullptr;  // shared between backgrounds
    CollisionOperator Lb;
    SourceOperator T;
    GridFunction f0b;
    double crosscheck = 0.0;
};

// Assembles L_b and T for one background.  NumericalError when the
// change-of-variables cross-check exceeds cfg.tol_crosscheck.
ChiOperators assemble_chi_operators(const ChiConfig& cfg, const MaxwellianParams& b, const CollisionOperator& La);

// One Fourier mode of chi_11:
//   v(r, t) = 2 eps int_0^t e^{A_a (t - tau)} T e^{A_b tau} f0^b dtau,
// A = -i r xi_3 + L.  Evaluated in closed form in the two eigenbases,
// I_ij = (e^{mu_j t} - e^{lambda_i t}) / (mu_j - lambda_i), with a series for
// nearly equal exponents.  When either eigenbasis is ill conditioned the
// block exponential of [[A_a, T], [0, A_b]] is used instead.
class Chi11Mode {
public:
    enum PartIndex { LongFluid = 0, LongNonFluid = 1, Short = 2 };
    static constexpr int kParts = 18;
    // (outer, inner, half) -> position; half 0 is tau in [0, t/2].
    static int part_index(int outer, int inner, int half) { return (outer * 3 + inner) * 2 + half; }

    Chi11Mode(const ModePropagator& pa, const ModePropagator& pb, const Eigen::MatrixXd& T, const Eigen::VectorXcd& f0b,
              double epsilon);

    bool fallback() const { return fallback_; }
    // Largest real part over both spectra.
    double abscissa() const { return abscissa_; }

    // Nodal values on the reference grid.
    Eigen::VectorXcd total(double t) const;
    // Outer part of e^{A_a} x inner part of e^{A_b} x time half.
    std::array<Eigen::VectorXcd, kParts> parts(double t) const;
    // Block-exponential evaluation of both (independent of the eigenbases
    // except for the slow projectors).
    Eigen::VectorXcd reference_total(double t) const;
    std::array<Eigen::VectorXcd, kParts> reference_parts(double t) const;

private:
    const ModePropagator& pa_;
    const ModePropagator& pb_;
    Eigen::MatrixXcd Tsym_;   // T in symmetric coordinates
    Eigen::VectorXcd y_;      // f0^b in symmetric coordinates
    Eigen::MatrixXcd M_;      // Vinv_a Tsym V_b
    Eigen::VectorXcd c_;      // Vinv_b y
    double scale_;            // 2 eps
    bool fallback_;
    double abscissa_;
    std::array<Eigen::VectorXd, 3> wa_, wb_;  // part weights per eigen-index

    Eigen::VectorXcd from_sym(const Eigen::VectorXcd& v) const;
    Eigen::MatrixXcd block_integral(double s) const;
    Eigen::MatrixXcd outer_projector(int p) const;
    Eigen::MatrixXcd inner_projector(int q) const;
};

// Convenience: one mode at (r, t) as a reference-grid function.
GridFunction chi11_mode(const ChiOperators& ops, double delta, double epsilon, double r, double t);

// Full experiment: norms of chi_11 and their decay fits, the linearity scans
// in the background deviation, the part decomposition, and the structural
// checks (cross-check of L_b, invariants of the source, sum of parts).
Report chi_experiment(const ChiConfig& cfg);

}  // namespace kinetic
