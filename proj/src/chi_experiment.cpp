#include "kinetic/chi_experiment.hpp"

#include <unsupported/Eigen/MatrixFunctions>

#include <algorithm>
#include <cmath>

#include "kinetic/errors.hpp"

namespace kinetic {

namespace {

// (e^z - 1) / z for |z| < 0.5.
cplx phi1_series(cplx z) {
    cplx term = 1.0, sum = 1.0;
    for (int k = 2; k <= 20; ++k) {
        term *= z / static_cast<double>(k);
        sum += term;
    }
    return sum;
}

std::vector<cplx> as_vector(const Eigen::VectorXcd& v) { return {v.data(), v.data() + v.size()}; }

double match_distance(const std::vector<cplx>& a, std::vector<cplx> b) {
    double worst = 0.0;
    for (cplx z : a) {
        auto it = std::min_element(b.begin(), b.end(), [&](cplx x, cplx y) { return std::abs(x - z) < std::abs(y - z); });
        worst = std::max(worst, std::abs(*it - z));
        b.erase(it);
    }
    return worst;
}

}  // namespace

std::string to_string(XiProfile p) { return p == XiProfile::Kernel ? "kernel" : "nonfluid"; }

XiProfile xi_profile_from_string(const std::string& name) {
    if (name == "kernel") return XiProfile::Kernel;
    if (name == "nonfluid") return XiProfile::NonFluid;
    throw ConfigError("unknown xi profile '" + name + "'", "xi_profile");
}

double xi_profile_value(XiProfile p, const Vec3& xi) {
    const double s2 = xi[0] * xi[0] + xi[1] * xi[1] + xi[2] * xi[2];
    const double m = sqrt_maxwellian(MaxwellianParams{}, xi);
    return p == XiProfile::Kernel ? m : (s2 * s2 - 10.0 * s2 + 15.0) * m;
}

void ChiConfig::validate() const {
    b.validate();
    if (b.mu[0] != 0.0 || b.mu[1] != 0.0) throw ConfigError("chi1: bulk velocity must lie along the wavevector axis", "mu");
    if (!AdmissibleBox{}.contains(b)) throw ConfigError("chi1: background outside the admissible box", "lam");
    const double gamma = setup.model.gamma;
    if (!(beta > 1.5 + 2.0 * gamma)) throw ConfigError("chi1: beta must exceed 3/2 + 2 gamma", "beta");
    if (!(fit_t1 > 0.0 && fit_t2 >= 10.0 * fit_t1)) throw ConfigError("chi1: fit window must span a decade", "fit_window");
    if (fit_t2 > t_max || decomposition_time > t_max) throw ConfigError("chi1: windows exceed t_max", "t_max");
    for (double tol : {tol_linf, tol_l2, tol_linear, tol_sum, tol_crosscheck, tol_invariant})
        if (!(tol > 0.0)) throw ConfigError("chi1: tolerances must be positive", "tolerance");
    if (scales.empty() || scales.front() != 1.0) throw ConfigError("chi1: scales must start at 1", "scales");
    for (double s : scales)
        if (!(s > 0.0 && s <= 1.0)) throw ConfigError("chi1: scales must lie in (0, 1]", "scales");
    if (scan_times.size() < 4 || scan_times.back() < 10.0 * scan_times.front())
        throw ConfigError("chi1: scan times need 4 samples spanning a decade", "scan_times");
    if (!std::is_sorted(scan_times.begin(), scan_times.end()) || scan_times.front() <= 0.0)
        throw ConfigError("chi1: scan times must be positive and increasing", "scan_times");
    if (!(epsilon > 0.0)) throw ConfigError("chi1: epsilon must be positive", "epsilon");
    if (!(profile.width > 0.0)) throw ConfigError("chi1: profile width must be positive", "width");
}

GridFunction derive_f0b(const ChiConfig& cfg, const MaxwellianParams& b, const GridPtr& grid_b) {
    Eigen::VectorXcd v(grid_b->size());
    for (int i = 0; i < grid_b->size(); ++i) {
        auto xi = grid_b->velocity(i);
        v(i) = xi_profile_value(cfg.xi, xi) / sqrt_ratio(b, xi, true);
    }
    return GridFunction(grid_b, std::move(v));
}

GridFunction derive_f0b(const ChiConfig& cfg, const GridPtr& grid_b) { return derive_f0b(cfg, cfg.b, grid_b); }

CollisionOperator assemble_Lb(const BackgroundPair& pair, const OperatorSetup& setup, int sector,
                              const AssemblyOptions& opts) {
    CollisionModel m = setup.model;
    m.background = pair.b;
    GridPtr g = build_background_grid(setup.n_speed, setup.n_cosine, setup.s_max, sector, pair.b.mu[2], pair.b.lam);
    return assemble_collision(m, g, opts);
}

double lb_crosscheck(const CollisionOperator& La, const CollisionOperator& Lb, const MaxwellianParams& b,
                     double gamma, const std::vector<double>& rs) {
    double worst = 0.0;
    for (double r : rs) {
        auto vb = as_vector(eigensystem(assemble_wave_operator(Lb, r)).values);
        auto va = eigensystem(assemble_wave_operator(La, scaled_wavenumber(b, gamma, r))).values;
        std::vector<cplx> pred;
        for (int k = 0; k < va.size(); ++k) pred.push_back(predict_scaled_eigenvalue(b, gamma, r, va(k)));
        double scale = 0.0;
        for (cplx z : vb) scale = std::max(scale, std::abs(z));
        worst = std::max(worst, match_distance(vb, pred) / scale);
    }
    return worst;
}

ChiOperators assemble_chi_operators(const ChiConfig& cfg, const MaxwellianParams& b, const CollisionOperator& La) {
    ChiOperators ops;
    ops.b = b;
    ops.La = &La;
    ops.grid_a = La.grid;
    BackgroundPair pair(b);
    ops.Lb = assemble_Lb(pair, cfg.setup, La.grid->azimuthal_sector, cfg.assembly);
    ops.grid_b = ops.Lb.grid;
    const CollisionModel& m = cfg.setup.model;
    ops.T = assemble_T(pair, m.gamma, m.cross, m.quad, ops.grid_a, ops.grid_b, cfg.assembly);
    ops.f0b = derive_f0b(cfg, b, ops.grid_b);
    ops.crosscheck = lb_crosscheck(La, ops.Lb, b, m.gamma, {0.05, 0.3, 0.9});
    if (!(ops.crosscheck <= cfg.tol_crosscheck))
        throw NumericalError("chi1: L_b spectrum disagrees with the change-of-variables transform of L_a (" +
                             format_number(ops.crosscheck) + ")");
    return ops;
}

Chi11Mode::Chi11Mode(const ModePropagator& pa, const ModePropagator& pb, const Eigen::MatrixXd& T,
                     const Eigen::VectorXcd& f0b, double epsilon)
    : pa_(pa), pb_(pb), scale_(2.0 * epsilon) {
    const Eigen::VectorXd& sa = pa.op().sqrt_w;
    const Eigen::VectorXd& sb = pb.op().sqrt_w;
    if (T.rows() != sa.size() || T.cols() != sb.size() || f0b.size() != sb.size())
        throw PreconditionError("Chi11Mode: operator sizes do not match the grids");
    if (pa.op().r != pb.op().r) throw PreconditionError("Chi11Mode: propagators at different wavenumbers");
    Tsym_ = (sa.asDiagonal() * T * sb.cwiseInverse().asDiagonal()).cast<cplx>();
    y_ = sb.cast<cplx>().cwiseProduct(f0b);
    const EigenSystem& ea = pa.eigensystem();
    const EigenSystem& eb = pb.eigensystem();
    fallback_ = pa.fallback() || pb.fallback();
    abscissa_ = std::max(ea.values.real().maxCoeff(), eb.values.real().maxCoeff());
    auto weights = [](const ModePropagator& p, std::array<Eigen::VectorXd, 3>& w) {
        const int n = static_cast<int>(p.eigensystem().values.size());
        const double chi = p.cutoff();
        Eigen::VectorXd slow = Eigen::VectorXd::Zero(n);
        for (int k : p.slow()) slow(k) = 1.0;
        w[LongFluid] = chi * slow;
        w[LongNonFluid] = chi * (Eigen::VectorXd::Ones(n) - slow);
        w[Short] = Eigen::VectorXd::Constant(n, 1.0 - chi);
    };
    weights(pa, wa_);
    weights(pb, wb_);
    if (!fallback_) {
        M_ = ea.Vinv * Tsym_ * eb.V;
        c_ = eb.Vinv * y_;
    }
}

Eigen::VectorXcd Chi11Mode::from_sym(const Eigen::VectorXcd& v) const {
    return scale_ * v.cwiseQuotient(pa_.op().sqrt_w.cast<cplx>());
}

Eigen::VectorXcd Chi11Mode::total(double t) const {
    if (fallback_) return reference_total(t);
    const Eigen::VectorXcd& la = pa_.eigensystem().values;
    const Eigen::VectorXcd& lb = pb_.eigensystem().values;
    const int na = static_cast<int>(la.size()), nb = static_cast<int>(lb.size());
    Eigen::VectorXcd Ea(na), Eb(nb);
    for (int i = 0; i < na; ++i) Ea(i) = std::exp(la(i) * t);
    for (int j = 0; j < nb; ++j) Eb(j) = std::exp(lb(j) * t);
    Eigen::VectorXcd s = Eigen::VectorXcd::Zero(na);
    for (int j = 0; j < nb; ++j) {
        if (c_(j) == 0.0) continue;
        for (int i = 0; i < na; ++i) {
            const cplx d = lb(j) - la(i), z = d * t;
            const cplx I = std::abs(z) >= 0.5 ? (Eb(j) - Ea(i)) / d : Ea(i) * t * phi1_series(z);
            s(i) += M_(i, j) * I * c_(j);
        }
    }
    return from_sym(pa_.eigensystem().V * s);
}

std::array<Eigen::VectorXcd, Chi11Mode::kParts> Chi11Mode::parts(double t) const {
    if (fallback_) return reference_parts(t);
    const Eigen::VectorXcd& la = pa_.eigensystem().values;
    const Eigen::VectorXcd& lb = pb_.eigensystem().values;
    const int na = static_cast<int>(la.size()), nb = static_cast<int>(lb.size());
    Eigen::VectorXcd ea(na), Ea(na), eb(nb), Eb(nb);
    for (int i = 0; i < na; ++i) {
        ea(i) = std::exp(0.5 * la(i) * t);
        Ea(i) = ea(i) * ea(i);
    }
    for (int j = 0; j < nb; ++j) {
        eb(j) = std::exp(0.5 * lb(j) * t);
        Eb(j) = eb(j) * eb(j);
    }
    // acc.col(q * 2 + h): inner part q, time half h, in the a-eigenbasis.
    Eigen::MatrixXcd acc = Eigen::MatrixXcd::Zero(na, 6);
    const double h = 0.5 * t;
    for (int j = 0; j < nb; ++j) {
        if (c_(j) == 0.0) continue;
        for (int i = 0; i < na; ++i) {
            const cplx d = lb(j) - la(i), z = d * h;
            cplx I0, I1;
            if (std::abs(z) >= 0.5) {
                const cplx mid = ea(i) * eb(j);
                I0 = (mid - Ea(i)) / d;
                I1 = (Eb(j) - mid) / d;
            } else {
                I0 = Ea(i) * h * phi1_series(z);
                I1 = Eb(j) * h * phi1_series(-z);
            }
            const cplx mc = M_(i, j) * c_(j);
            for (int q = 0; q < 3; ++q) {
                const double w = wb_[q](j);
                if (w == 0.0) continue;
                acc(i, 2 * q) += mc * I0 * w;
                acc(i, 2 * q + 1) += mc * I1 * w;
            }
        }
    }
    Eigen::MatrixXcd S(na, kParts);
    for (int p = 0; p < 3; ++p)
        for (int q = 0; q < 3; ++q)
            for (int hh = 0; hh < 2; ++hh)
                S.col(part_index(p, q, hh)) = wa_[p].cast<cplx>().cwiseProduct(acc.col(2 * q + hh));
    Eigen::MatrixXcd X = pa_.eigensystem().V * S;
    std::array<Eigen::VectorXcd, kParts> out;
    for (int k = 0; k < kParts; ++k) out[k] = from_sym(X.col(k));
    return out;
}

Eigen::MatrixXcd Chi11Mode::block_integral(double s) const {
    const int na = static_cast<int>(Tsym_.rows()), nb = static_cast<int>(Tsym_.cols());
    Eigen::MatrixXcd B = Eigen::MatrixXcd::Zero(na + nb, na + nb);
    B.topLeftCorner(na, na) = pa_.op().sym * s;
    B.topRightCorner(na, nb) = Tsym_ * s;
    B.bottomRightCorner(nb, nb) = pb_.op().sym * s;
    Eigen::MatrixXcd E = B.exp();
    return E.topRightCorner(na, nb);
}

Eigen::MatrixXcd Chi11Mode::outer_projector(int p) const {
    const EigenSystem& es = pa_.eigensystem();
    const int n = static_cast<int>(es.values.size());
    Eigen::MatrixXcd P = Eigen::MatrixXcd::Zero(n, n);
    for (int k : pa_.slow()) P += es.V.col(k) * es.Vinv.row(k);
    const double chi = pa_.cutoff();
    if (p == LongFluid) return chi * P;
    if (p == LongNonFluid) return chi * (Eigen::MatrixXcd::Identity(n, n) - P);
    return (1.0 - chi) * Eigen::MatrixXcd::Identity(n, n);
}

Eigen::MatrixXcd Chi11Mode::inner_projector(int q) const {
    const EigenSystem& es = pb_.eigensystem();
    const int n = static_cast<int>(es.values.size());
    Eigen::MatrixXcd P = Eigen::MatrixXcd::Zero(n, n);
    for (int k : pb_.slow()) P += es.V.col(k) * es.Vinv.row(k);
    const double chi = pb_.cutoff();
    if (q == LongFluid) return chi * P;
    if (q == LongNonFluid) return chi * (Eigen::MatrixXcd::Identity(n, n) - P);
    return (1.0 - chi) * Eigen::MatrixXcd::Identity(n, n);
}

Eigen::VectorXcd Chi11Mode::reference_total(double t) const { return from_sym(block_integral(t) * y_); }

std::array<Eigen::VectorXcd, Chi11Mode::kParts> Chi11Mode::reference_parts(double t) const {
    const Eigen::MatrixXcd VL = block_integral(0.5 * t);
    const Eigen::MatrixXcd Ea = (pa_.op().sym * (0.5 * t)).exp();
    const Eigen::MatrixXcd Eb = (pb_.op().sym * (0.5 * t)).exp();
    std::array<Eigen::VectorXcd, kParts> out;
    for (int q = 0; q < 3; ++q) {
        Eigen::VectorXcd yq = inner_projector(q) * y_;
        Eigen::VectorXcd h0 = Ea * (VL * yq), h1 = VL * (Eb * yq);
        for (int p = 0; p < 3; ++p) {
            Eigen::MatrixXcd P = outer_projector(p);
            out[part_index(p, q, 0)] = from_sym(P * h0);
            out[part_index(p, q, 1)] = from_sym(P * h1);
        }
    }
    return out;
}

GridFunction chi11_mode(const ChiOperators& ops, double delta, double epsilon, double r, double t) {
    if (t < 0.0) throw DomainError("chi11_mode: t must be non-negative");
    ModePropagator pa(assemble_wave_operator(*ops.La, r), delta);
    ModePropagator pb(assemble_wave_operator(ops.Lb, r), delta);
    Chi11Mode m(pa, pb, ops.T.T.entries, ops.f0b.values, epsilon);
    return GridFunction(ops.grid_a, m.total(t));
}

}  // namespace kinetic
