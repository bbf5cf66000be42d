#pragma once

#include <Eigen/Dense>
#include <optional>
#include <string>
#include <vector>

#include "kinetic/collision.hpp"

namespace kinetic {

// -i r xi_3 + L on one sector, eta = r e3.  `matrix` is in nodal (physical)
// coordinates; `sym` is the same operator in W-orthonormal coordinates, where
// it is complex symmetric.
struct WaveOperator {
    double r = 0.0;
    int sector = 0;
    GridPtr grid;
    Eigen::MatrixXcd matrix;
    Eigen::MatrixXcd sym;
    Eigen::VectorXd sqrt_w;
};

WaveOperator assemble_wave_operator(const OperatorMatrix& L, double r);
WaveOperator assemble_wave_operator(const CollisionOperator& op, double r);

// Full eigendecomposition A = V diag(lambda) V^{-1} in W-orthonormal
// coordinates.  Columns of V are scaled so that v^T v = 1 (the bilinear
// normalization <e(-eta), e(eta)> = 1).
struct EigenSystem {
    Eigen::VectorXcd values;
    Eigen::MatrixXcd V;
    Eigen::MatrixXcd Vinv;
    double condition = 1.0;     // |V| |V^{-1}| (2-norm estimate)
    double inverse_residual = 0.0;  // |V V^{-1} - I|
};

EigenSystem eigensystem(const WaveOperator& op);

struct EigenPair {
    cplx value;
    Eigen::VectorXcd vec;   // nodal coordinates, bilinear-normalized
    Eigen::VectorXcd left;  // row of V^{-1} mapped to nodal coordinates
    int index = -1;         // column in the eigensystem
};

// The `count` eigenvalues with largest real part, sorted by |Re| ascending.
std::vector<EigenPair> eigen_near_zero(const WaveOperator& op, int count,
                                       const EigenSystem* precomputed = nullptr);

// Labels used for the slow branches: m=0 gives {0, 1, 2} (acoustic with
// negative imaginary part, acoustic with positive, thermal), m=1 gives {3}
// (cos parity; the sin copy {4} is identical).
std::vector<int> branch_labels(int sector);

// Slow eigenpairs of a sector ordered by branch label.
std::vector<EigenPair> label_slow_branches(const WaveOperator& op,
                                           const std::vector<EigenPair>& slow);

struct BranchSample {
    double r;
    std::vector<cplx> values;    // per branch label of the sector
    std::vector<double> overlap; // tracking overlap with the previous sample
};

// Tracks the slow branches over increasing r with maximal-overlap matching
// (threshold 0.7).  Throws TrackingError when the match is ambiguous.
std::vector<BranchSample> track_branches(const CollisionOperator& op,
                                         const std::vector<double>& rs, int jobs = 0);

struct BranchFit {
    int branch = 0;
    double a = 0.0;
    double A = 0.0;
    double fit_residual = 0.0;
    double r_lo = 0.0, r_hi = 0.0;
};

// Least squares of Im(lambda)/r against -a + c r^2 and Re(lambda)/r^2
// against -A + d r^2 over the samples.
BranchFit fit_branch(int branch, const std::vector<double>& r, const std::vector<cplx>& lambda);
std::vector<BranchFit> fit_dispersion(const std::vector<BranchSample>& samples,
                                      const std::vector<int>& labels);

// E_0..E_4 on the grid of the given sector (E_3 = chi_1, E_4 = chi_2 with omega = e3).
GridFunction leading_eigenfunction(const GridPtr& grid, int j);

// Normalized overlap |<e, E>| / (|e| |E|).
double overlap(const Eigen::VectorXcd& e, const GridFunction& E);

// Rank-one projector |e_j(eta)><e_j(-eta)| in nodal coordinates.
Eigen::MatrixXcd spectral_projector(const EigenPair& p);

struct GapScan {
    double gap0 = 0.0;         // r = 0 spectral gap
    double r_sep = 0.0;        // largest scanned r keeping separation >= gap0/2
    double delta = 0.0;        // long-wave cutoff = r_sep / 2
    std::vector<double> r;
    std::vector<double> separation;
};

// Separation(r) = min Re over slow branches - max Re over the rest.
GapScan choose_delta(const CollisionOperator& op, const std::vector<double>& rs, int jobs = 0);

// Change-of-variables prediction for background b from reference data:
// lambda_b(r) = -i mu r + rho lam^{gamma/2} lambda_a(r sqrt(lam) / (rho lam^{gamma/2})),
// hence a_b = mu + sqrt(lam) a_a and A_b = lam^{1-gamma/2} A_a / rho.
struct ScalingPrediction {
    double a;
    double A;
};
ScalingPrediction predict_scaled(const MaxwellianParams& b, double gamma, double a_ref, double A_ref);
// lambda_ref must be the reference eigenvalue at scaled_wavenumber(b, gamma, r).
cplx predict_scaled_eigenvalue(const MaxwellianParams& b, double gamma, double r, cplx lambda_ref);
// Reference wavenumber whose eigenvalues map to background b at wavenumber r.
double scaled_wavenumber(const MaxwellianParams& b, double gamma, double r);

}  // namespace kinetic
