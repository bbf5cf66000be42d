#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <array>
#include <string>
#include <vector>

#include "kinetic/report.hpp"
#include "kinetic/spectrum.hpp"

namespace kinetic {

// Radial Gaussian phi(x) = amplitude exp(-|x|^2 / (2 width^2)) with
// phi_hat(eta) = int e^{-i x.eta} phi(x) dx.
struct SpaceProfile {
    double width = 1.0;
    double amplitude = 1.0;

    double value(double R) const;
    double fourier(double r) const;
    double l1() const;
    double l2() const;
    double linf() const { return amplitude; }
};

// Smooth long-wave cutoff: 1 for r <= delta/2, 0 for r >= delta, quintic
// smoothstep (C2 at both ends) in between.
double long_wave_cutoff(double r, double delta);

enum class Part { Full, LongFluid, LongNonFluid, Short };
std::string to_string(Part p);

struct ModeSolution {
    double r = 0.0;
    Part part = Part::Full;
    std::vector<double> times;
    std::vector<GridFunction> values;
    bool fallback = false;  // scaling-and-squaring path was used
};

// e^{(-i r xi_3 + L) t} on one wave operator.  Uses the eigendecomposition
// when it is well conditioned and Pade scaling-and-squaring otherwise.
class ModePropagator {
public:
    static constexpr double kConditionLimit = 1e10;

    explicit ModePropagator(const WaveOperator& op, double delta = 0.0);

    const WaveOperator& op() const { return op_; }
    const EigenSystem& eigensystem() const { return es_; }
    bool fallback() const { return fallback_; }
    double cutoff() const { return chi_; }
    // Eigen-indices of the slow branches by label (empty when r >= delta).
    const std::vector<int>& slow() const { return slow_; }

    Eigen::VectorXcd full(const Eigen::VectorXcd& psi, double t) const;
    // Fluid part restricted to a subset of slow-branch positions (all when
    // `branches` is empty), without the cutoff factor.
    Eigen::VectorXcd fluid(const Eigen::VectorXcd& psi, double t, const std::vector<int>& branches = {}) const;
    Eigen::VectorXcd nonfluid(const Eigen::VectorXcd& psi, double t) const;
    // cutoff * fluid, cutoff * nonfluid, (1 - cutoff) * full.
    std::array<Eigen::VectorXcd, 3> split(const Eigen::VectorXcd& psi, double t) const;

private:
    WaveOperator op_;
    EigenSystem es_;
    bool fallback_ = false;
    double chi_ = 0.0;
    std::vector<int> slow_;
    Eigen::VectorXcd to_sym(const Eigen::VectorXcd& v) const;
    Eigen::VectorXcd from_sym(const Eigen::VectorXcd& v) const;
};

ModeSolution evolve_mode(const WaveOperator& op, const GridFunction& psi, const std::vector<double>& times);
// LongFluid, LongNonFluid, Short.
std::array<ModeSolution, 3> split_mode(const WaveOperator& op, const GridFunction& psi,
                                       const std::vector<double>& times, double delta);

// Solution of d_t h + xi.grad_x h + nu h = 0 with h0 = phi(x) psi(xi) at the
// nodes (azimuth 0): e^{-nu t} phi(x - xi t) psi(xi).
Eigen::VectorXcd damped_transport(const SpaceProfile& profile, const GridFunction& psi,
                                  const Eigen::VectorXd& nu, double t, const Vec3& x);

// Composite Gauss-Legendre quadrature in the wavenumber r.  Panel widths keep
// the phase e^{-i a r t} j_l(r R) below `phase_per_panel` radians per panel
// at the latest time where the mode still matters.
struct RGridSpec {
    double r_max = 8.0;
    double t_max = 300.0;
    double speed = 1.3;        // fastest transport speed
    double reach = 1.6;        // radial scan extends to reach * speed * t
    double A_min = 0.25;       // lower bound on the mode decay rate: min(A_min r^2, rate_cap)
    double rate_cap = 3.0;
    double decay_budget = 40.0;  // modes damped below e^{-budget} are dropped
    double phase_per_panel = 4.0;
    int nodes_per_panel = 8;

    double assumed_rate(double r) const { return std::min(A_min * r * r, rate_cap); }
};

struct RQuadrature {
    std::vector<double> r;
    std::vector<double> w;
};

RQuadrature make_r_quadrature(const RGridSpec& spec);

// Time samples: 0 followed by a geometric grid on [t_min, t_max].
std::vector<double> geometric_times(double t_min, double t_max, int per_decade, bool include_zero = true);

// Norm series of one reconstructed solution.
struct NormSeries {
    std::vector<double> times;
    std::vector<double> l2l2;           // |u|_{L2_x L2_xi}
    std::vector<double> linf_l2;        // sup_x |u(x)|_{L2_xi}
    std::vector<double> linf_l2_argmax; // |x| attaining it
    std::vector<double> linfbeta_l2;    // max_xi <xi>^beta |u(., xi)|_{L2_x}
    std::vector<double> linfbeta_linf;  // max_xi <xi>^beta |u(., xi)|_{L_inf_x}
};

// Reconstruction of x-space norms of u(t, x, xi) = (2 pi)^{-3} int e^{i x.eta}
// phi_hat(|eta|) f_{|eta|}(R_eta^{-1} xi) d eta from sector-0 mode data
// f_r on the e3 axis.  Directions are synthesized by Funk-Hecke:
// u = sum_l i^l P_l(x^.xi^) U_l(|xi|, |x|).  Mode data are accumulated node
// by node in r (any order, deterministic for a fixed order) for several
// channels at once.
class RadialSynthesis {
public:
    struct Options {
        double beta = 0.0;
        double speed = 1.3;
        double reach = 1.6;
        double A_min = 0.25;
        bool pointwise = true;  // compute the L_inf_x profiles (Funk-Hecke)
        int n_angles = 41;
    };

    RadialSynthesis(GridPtr grid, SpaceProfile profile, std::vector<double> times, int channels,
                    Options opts);

    int channels() const { return channels_; }
    const std::vector<double>& times() const { return times_; }
    const std::vector<double>& R_grid(int ti) const { return R_[ti]; }

    // Adds quadrature node (r, w) at time index ti; values[c] is the nodal
    // mode vector of channel c (nullptr for zero).
    void add(double r, double w, int ti, const std::vector<const Eigen::VectorXcd*>& values);

    NormSeries series(int channel) const;
    // |u(t, R)|_{L2_xi} over the radial grid of time index ti.
    std::vector<double> radial_profile(int channel, int ti) const;
    // max |Im(i^l U_l)| / max |U_l| over everything accumulated: zero for
    // real x-space solutions.
    double imaginary_ratio(int channel) const;

private:
    GridPtr grid_;
    SpaceProfile profile_;
    std::vector<double> times_;
    int channels_;
    Options opts_;
    int L_;
    Eigen::MatrixXd legendre_;   // L x n_cosine projection (2l+1)/2 w_b P_l(c_b)
    Eigen::MatrixXd angle_P_;    // n_angles x L: P_l(cos theta_k)
    std::vector<std::vector<double>> R_;
    // Per channel: plancherel[ti], xi_l2[ti][s], U[ti] (n_R x (L * n_s)).
    std::vector<std::vector<double>> plancherel_;
    std::vector<std::vector<Eigen::VectorXd>> xi_l2_;
    std::vector<std::vector<Eigen::MatrixXcd>> U_;
};

// Least-squares decay fits on [t1, t2].
struct DecayFit {
    double exponent = 0.0;   // slope of log y against log(1+t)
    double intercept = 0.0;
    double t1 = 0.0, t2 = 0.0;
    double residual = 0.0;       // RMS log residual of the power-law fit
    double max_deviation = 0.0;  // max |log residual|
    double rate = 0.0;           // -slope of log y against t
    double rate_residual = 0.0;  // RMS log residual of the exponential fit
    double early_exponent = 0.0, late_exponent = 0.0;  // half-window slopes
    bool superpolynomial = false;
    int points = 0;
};

// Preconditions: t1 > 0, t2 >= 10 t1, at least 4 samples in the window,
// values positive.
DecayFit fit_decay(const std::vector<double>& t, const std::vector<double>& y, double t1, double t2);
// Exponential-regime fit: [t1, t2] without the decade requirement.
DecayFit fit_exponential(const std::vector<double>& t, const std::vector<double>& y, double t1, double t2);

// Location of the outermost local maximum of a radial profile that reaches
// a tenth of the global maximum (0 if there is none away from the origin).
double outer_peak_radius(const std::vector<double>& R, const std::vector<double>& profile);

// Outer peak radius of |u(t, .)|_{L2_xi} of one synthesized channel at each
// stored time in [t1, t2] (peak 0: no outer maximum found).
struct ConeSample {
    double t = 0.0;
    double peak = 0.0;
    double ratio = 0.0;  // peak / t
};
std::vector<ConeSample> wave_structure_scan(const RadialSynthesis& syn, int channel, double t1, double t2);

// Grid and collision model shared by the experiment drivers.
struct OperatorSetup {
    int n_speed = 12;
    int n_cosine = 6;
    double s_max = 8.0;
    CollisionModel model;

    GridPtr grid(int sector) const { return build_grid(n_speed, n_cosine, s_max, sector); }
};

struct DecaySuiteConfig {
    OperatorSetup setup;
    double delta = 0.0;  // long-wave cutoff; 0 picks half the gap-separation radius
    SpaceProfile profile;
    double t_min = 0.1, t_max = 300.0;
    int per_decade = 12;
    double beta = 0.0;
    double fit_t1 = 20.0, fit_t2 = 300.0;   // polynomial window
    double exp_t1 = 1.0, exp_t2 = 20.0;     // exponential window
    double cone_t1 = 20.0, cone_t2 = 200.0; // sound-cone window
    double tol_l2 = 0.10, tol_linf = 0.15, tol_steepen = 0.15, tol_cone = 0.10;
    double tol_law = 1e-8;
    RGridSpec r_grid;
    int jobs = 0;
    AssemblyOptions assembly;
};

// Decay rates of the three parts for kernel data (chi_0) and data with
// P_0 u_0 = 0 (heat-flux profile), semigroup law, partition, realness and the
// sound-cone scan, all from one sweep over the wavenumber quadrature.
Report decay_suite(const DecaySuiteConfig& cfg);

// Initial xi-profiles of the suite: chi_0 and the normalized P_1 projection of
// i xi_3 (|xi|^2 - 5) sqrt(M).
GridFunction kernel_data(const GridPtr& g);
GridFunction perpendicular_data(const GridPtr& g);

}  // namespace kinetic
