#pragma once

#include <cstdint>
#include <vector>

#include "kinetic/report.hpp"
#include "kinetic/semigroup.hpp"

namespace kinetic {

struct LemmaConfig {
    OperatorSetup setup{24, 12, 8.0, {}};  // structure checks; the doubling check halves it
    double tol_null = 1e-6;                 // null eigenvalue: |lambda| < tol_null |L|
    double tol_symmetry = 1e-8;
    double tol_refine = 0.10;
    int n_random = 100;
    std::uint64_t seed = 20240611;

    MaxwellianParams lemma_b = MaxwellianParams::axial(1.0, 0.0, 1.0001);
    MaxwellianParams linear_b = MaxwellianParams::axial(1.02, 0.02, 1.02);
    MaxwellianParams mean_value_b = MaxwellianParams::axial(1.2, 0.1, 1.3);
    double beta = 4.0;
    double lam_bar = 1.5;
    std::vector<double> scales{1.0, 0.5, 0.25};
    double tol_lemma_refine = 0.05;
    double tol_linear = 0.10;
    double tol_mean_value = 1e-10;
    double tol_sqrt_ratio = 1e-12;

    // Source operator checks on the coarse grid.
    MaxwellianParams source_b = MaxwellianParams::axial(1.002, 0.003, 1.006);
    double tol_invariant = 1e-6;

    int jobs = 0;
    AssemblyOptions assembly;

    void validate() const;
};

// Structure of the linearized operator (null space, gap and its refinement,
// self-adjointness, coercivity), the Maxwellian-difference bound and its
// mean-value identity, and the invariants and first-order scaling of T.
Report lemma_suite(const LemmaConfig& cfg);

struct SpectrumConfig {
    OperatorSetup setup;
    double fit_r_lo = 0.01, fit_r_hi = 0.15;
    int fit_samples = 8;
    double eigen_r = 0.01;  // radius of the eigenfunction comparison
    double tol_speed = 0.02;  // relative, for a_0 and a_1 = -a_0
    double tol_zero_speed = 0.02;
    double overlap_min = 0.99, cross_max = 0.05;
    double tol_projector = 1e-8;
    std::vector<double> stability_r{0.05, 0.2, 1.0};
    double tol_stability = 1e-8;
    double gap_r_max = 4.0;  // same scan as the semigroup and chi1 drivers
    int gap_samples = 40;
    std::vector<MaxwellianParams> scaling_b{MaxwellianParams::axial(1.2, 0.0, 1.0),
                                            MaxwellianParams::axial(1.0, 0.0, 1.44),
                                            MaxwellianParams::axial(1.0, 0.1, 1.0)};
    std::vector<double> scaling_r{0.05, 0.3, 0.9};
    double tol_scaling = 1e-6;
    MaxwellianParams diffusion_b = MaxwellianParams::axial(1.0, 0.0, 1.44);
    double tol_diffusion = 0.03;
    int jobs = 0;
    AssemblyOptions assembly;

    void validate() const;
};

// Dispersion fits of the five slow branches, eigenfunction overlaps with the
// fluid basis, projector algebra, spectral stability, gap persistence and the
// background change-of-variables check.
Report spectrum_suite(const SpectrumConfig& cfg);

}  // namespace kinetic
