#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "kinetic/grid.hpp"
#include "kinetic/maxwell.hpp"

namespace kinetic {

class MatrixCache;

// Angular cross-sections satisfying 0 < B <= |cos|.
enum class CrossSection { AbsCos, CosSquared };

double cross_section(CrossSection b, double cos_theta);
// Integral of B over the unit sphere.
double cross_section_integral(CrossSection b);
std::string to_string(CrossSection b);
CrossSection cross_section_from_string(const std::string& name);

// Inner quadrature orders for the (xi_*, omega) integrals.  n_speed = 0 means
// "same as the grid".
struct CollisionQuadrature {
    int n_speed = 0;
    int n_cosine = 12;
    int n_azimuth = 16;
    int n_cos_omega = 8;
    int n_beta = 12;

    std::string to_text() const;
    void validate() const;
};

struct CollisionModel {
    double gamma = 0.0;
    CrossSection cross = CrossSection::AbsCos;
    MaxwellianParams background;
    CollisionQuadrature quad;

    void validate() const;
    std::string key_text() const;
};

struct OperatorMatrix {
    enum class Kind { Nu, K, L, T };
    Kind kind = Kind::L;
    int sector = 0;
    GridPtr row_grid;
    GridPtr col_grid;
    Eigen::MatrixXd entries;

    int rows() const { return static_cast<int>(entries.rows()); }
    GridFunction apply(const GridFunction& g) const;
};

// Tensor Lagrange interpolation of p = f / sqrt(M_frame) in (s, c) on a grid's
// nodes, with the (1-c^2)^(m/2) cos(m phi) azimuthal factor of sector m.
// Points beyond the cutoff speed evaluate to zero.
class NodalInterpolator {
public:
    explicit NodalInterpolator(GridPtr grid);

    const VelocityGrid& grid() const { return *grid_; }
    // Coefficients of f_(a,b) in p(xi) are bs[a] * bc[b] * scalar.  Returns
    // false when xi lies outside the truncated domain.
    bool basis(const Vec3& xi, double* bs, double* bc, double& scalar) const;
    // p(xi) for nodal values f (real part).
    double eval_p(const Eigen::VectorXd& f, const Vec3& xi) const;

private:
    GridPtr grid_;
    Lagrange speed_;
    Lagrange cosine_;
    std::vector<double> inv_sqrt_m_;     // 1/sqrt(M_frame(s_a))
    std::vector<double> inv_sin_pow_;    // (1-c_b^2)^(-m/2)
};

// sqrt of the rho-free frame Maxwellian (2 pi lam)^{-3/4} exp(-s^2/(4 lam)).
double sqrt_frame_maxwellian(const VelocityGrid& g, double s);

// nu at the grid nodes from the one-dimensional reduction of the loss
// integral (accurate to ~1e-12).
Eigen::VectorXd compute_nu(const CollisionModel& model, const VelocityGrid& grid);
// The same from the three-dimensional inner quadrature, for convergence checks.
Eigen::VectorXd compute_nu_quadrature(const CollisionModel& model, const VelocityGrid& grid);

struct AssemblyOptions {
    int jobs = 0;
    MatrixCache* cache = nullptr;
};

struct CollisionOperator {
    CollisionModel model;
    GridPtr grid;
    Eigen::VectorXd nu;    // accurate nu at the nodes
    Eigen::MatrixXd L;     // symmetrized, invariant-projected
    Eigen::MatrixXd K;     // L + diag(nu)
    // Defects of the raw collocation matrix before symmetrization/projection.
    double raw_symmetry_defect = 0.0;  // |L - W^-1 L^T W| / |L|
    double raw_null_defect = 0.0;      // max_i |L chi_i| / |L|
    double raw_range_defect = 0.0;     // |P0 L| / |L|
    double nu_quadrature_defect = 0.0; // max relative |nu_q - nu|

    OperatorMatrix as_L() const;
    OperatorMatrix as_K() const;
    OperatorMatrix as_nu() const;
};

// Collocated linearized operator around model.background on `grid`, whose
// frame (center, lam) must match the background.  Rows are assembled in
// parallel, then the matrix is symmetrized in the quadrature inner product and
// projected off the collision invariants.
CollisionOperator assemble_collision(const CollisionModel& model, const GridPtr& grid,
                                     const AssemblyOptions& opts = {});

OperatorMatrix assemble_K(const CollisionModel& model, const GridPtr& grid,
                          const AssemblyOptions& opts = {});
OperatorMatrix assemble_L(const CollisionModel& model, const GridPtr& grid,
                          const AssemblyOptions& opts = {});

// Macro-micro projection onto the in-sector collision invariants.
class InvariantProjector {
public:
    InvariantProjector(const GridPtr& grid, Parity parity = Parity::Cos);
    GridFunction P0(const GridFunction& g) const;
    GridFunction P1(const GridFunction& g) const;
    Eigen::MatrixXd P0_matrix() const;
    Eigen::MatrixXd P1_matrix() const;
    const std::vector<GridFunction>& basis() const { return basis_; }

private:
    GridPtr grid_;
    std::vector<GridFunction> basis_;
};

struct GammaDiagnostics {
    double raw_invariant_defect = 0.0;  // |P0 Gamma| / |Gamma| before projection
};

// Gamma(h1, h2) = M^{-1/2} Q(M^{1/2} h1, M^{1/2} h2) around model.background,
// collocated at the nodes of h1's grid.  Supported sectors: (0,0) and (1,0) /
// (0,1); the result lives in the sum sector, projected off the invariants.
GridFunction gamma_bilinear(const CollisionModel& model, const GridFunction& h1,
                            const GridFunction& h2, GammaDiagnostics* diag = nullptr,
                            int jobs = 0);

struct SourceOperator {
    OperatorMatrix T;             // maps b-grid functions to a-grid functions
    double raw_invariant_defect;  // |P0 T| / |T| before projection
};

// T h = M_a^{-1/2} Q(M_b^{1/2} h, M_b - M_a) for h given on grid_b (frame of
// background b), output on grid_a (reference frame), same sector.
SourceOperator assemble_T(const BackgroundPair& pair, double gamma, CrossSection cross,
                          const CollisionQuadrature& quad, const GridPtr& grid_a,
                          const GridPtr& grid_b, const AssemblyOptions& opts = {});

// W^{1/2} A W^{-1/2}: the matrix of A in W-orthonormal coordinates.
Eigen::MatrixXd to_symmetric_coordinates(const Eigen::MatrixXd& A, const Eigen::VectorXd& w);

}  // namespace kinetic
