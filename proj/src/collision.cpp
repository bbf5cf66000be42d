#include "kinetic/collision.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>
#include <numbers>
#include <sstream>

#include "kinetic/cache.hpp"
#include "kinetic/errors.hpp"
#include "kinetic/parallel.hpp"

namespace kinetic {

namespace {

constexpr double kPi = std::numbers::pi;

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

double dot3(const Vec3& u, const Vec3& v) { return u[0] * v[0] + u[1] * v[1] + u[2] * v[2]; }

struct StarPoint {
    Vec3 xi;
    double w_gauss;  // against exp(-s^2/(2 lam)) about the rule's center
    double w_plain;
};

struct OmegaPoint {
    double c, sin_c, cos_b, sin_b;
    double w;  // includes B(c), the beta weight and the factor 2 for -omega
};

// Spherical rule about (0, 0, center) for temperature lam.  The azimuth uses
// the half trapezoid with mirrored weights: every integrand evaluated here is
// even under xi_2 -> -xi_2 because the output point sits at azimuth 0 and the
// inputs are cos-parity.
std::vector<StarPoint> star_rule(double center, double lam, double s_max, int n_speed,
                                 int n_cosine, int n_azimuth) {
    if (n_azimuth % 2 != 0) throw ConfigError("collision quadrature: n_azimuth must be even", "n_azimuth");
    Rule radial = gauss_maxwell_radial(n_speed, s_max, 1.0);
    Rule cosine = gauss_legendre(n_cosine);
    const double scale = std::sqrt(lam);
    const double h = 2.0 * kPi / n_azimuth;
    std::vector<StarPoint> out;
    for (std::size_t a = 0; a < radial.size(); ++a) {
        double s = scale * radial.nodes[a];
        double wr = radial.weights[a] * scale * scale * scale;
        double unweight = std::exp(0.5 * radial.nodes[a] * radial.nodes[a]);
        for (std::size_t b = 0; b < cosine.size(); ++b) {
            double c = cosine.nodes[b];
            double st = std::sqrt(std::max(0.0, 1.0 - c * c));
            for (int k = 0; k <= n_azimuth / 2; ++k) {
                double phi = k * h;
                double wphi = (k == 0 || k == n_azimuth / 2) ? h : 2.0 * h;
                StarPoint p;
                p.xi = {s * st * std::cos(phi), s * st * std::sin(phi), center + s * c};
                p.w_gauss = wr * cosine.weights[b] * wphi;
                p.w_plain = p.w_gauss * unweight;
                out.push_back(p);
            }
        }
    }
    return out;
}

std::vector<OmegaPoint> omega_rule(CrossSection cross, int n_cos, int n_beta) {
    Rule c = gauss_legendre(n_cos, 0.0, 1.0);
    Rule beta = periodic_trapezoid(n_beta);
    std::vector<OmegaPoint> out;
    for (std::size_t i = 0; i < c.size(); ++i)
        for (std::size_t j = 0; j < beta.size(); ++j) {
            OmegaPoint o;
            o.c = c.nodes[i];
            o.sin_c = std::sqrt(1.0 - o.c * o.c);
            o.cos_b = std::cos(beta.nodes[j]);
            o.sin_b = std::sin(beta.nodes[j]);
            o.w = 2.0 * c.weights[i] * cross_section(cross, o.c) * beta.weights[j];
            out.push_back(o);
        }
    return out;
}

double omega_total(const std::vector<OmegaPoint>& om) {
    double s = 0.0;
    for (const auto& o : om) s += o.w;
    return s;
}

// Orthonormal frame (u, e1, e2) with u = w/|w|.
void frame(const Vec3& u, Vec3& e1, Vec3& e2) {
    Vec3 t = std::abs(u[0]) < 0.6 ? Vec3{1, 0, 0} : Vec3{0, 1, 0};
    double d = dot3(t, u);
    e1 = {t[0] - d * u[0], t[1] - d * u[1], t[2] - d * u[2]};
    double n = std::sqrt(dot3(e1, e1));
    for (double& x : e1) x /= n;
    e2 = {u[1] * e1[2] - u[2] * e1[1], u[2] * e1[0] - u[0] * e1[2], u[0] * e1[1] - u[1] * e1[0]};
}

// Walks all (xi_*, omega) points for output velocity xi.  star(sp, g) is
// called once per xi_* with g = |xi - xi_*|^gamma; pair(sp, g, o, xi', xi'_*)
// once per omega.
template <class Star, class Pair>
void walk(const Vec3& xi, double gamma, const std::vector<StarPoint>& stars,
          const std::vector<OmegaPoint>& omegas, Star&& star, Pair&& pair) {
    for (const auto& sp : stars) {
        Vec3 w{xi[0] - sp.xi[0], xi[1] - sp.xi[1], xi[2] - sp.xi[2]};
        double wn = std::sqrt(dot3(w, w));
        // At xi_* = xi the collision is trivial (xi' = xi); for gamma > 0 the
        // weight vanishes there.
        if (wn < 1e-13 && gamma > 0.0) continue;
        double g = gamma == 0.0 ? 1.0 : std::pow(wn, gamma);
        star(sp, g);
        Vec3 u = wn < 1e-13 ? Vec3{0.0, 0.0, 1.0} : Vec3{w[0] / wn, w[1] / wn, w[2] / wn};
        Vec3 e1, e2;
        frame(u, e1, e2);
        for (const auto& o : omegas) {
            Vec3 om;
            for (int k = 0; k < 3; ++k)
                om[k] = o.c * u[k] + o.sin_c * (o.cos_b * e1[k] + o.sin_b * e2[k]);
            double wc = wn * o.c;
            Vec3 xp{xi[0] - wc * om[0], xi[1] - wc * om[1], xi[2] - wc * om[2]};
            Vec3 xps{sp.xi[0] + wc * om[0], sp.xi[1] + wc * om[1], sp.xi[2] + wc * om[2]};
            pair(sp, g, o, xp, xps);
        }
    }
}

// Accumulates sum_q weight_q * bs_q (x) bc_q by blocked GEMM.
class RowAccumulator {
public:
    RowAccumulator(const NodalInterpolator& in, int block = 2048)
        : in_(in), ns_(in.grid().n_speed()), nc_(in.grid().n_cosine()), block_(block),
          Ls_(block, ns_), Lc_(block, nc_), R_(Eigen::MatrixXd::Zero(ns_, nc_)) {}

    void reset() {
        q_ = 0;
        R_.setZero();
    }
    void add(const Vec3& xi, double weight) {
        double scalar = 0.0;
        if (weight == 0.0) return;
        if (!in_.basis(xi, Ls_.row(q_).data(), Lc_.row(q_).data(), scalar)) return;
        Ls_.row(q_) *= weight * scalar;
        if (++q_ == block_) flush();
    }
    // Flattened row in node order a * n_c + b.
    Eigen::VectorXd result() {
        flush();
        Eigen::VectorXd out(ns_ * nc_);
        for (int a = 0; a < ns_; ++a)
            for (int b = 0; b < nc_; ++b) out(a * nc_ + b) = R_(a, b);
        return out;
    }

private:
    void flush() {
        if (q_ == 0) return;
        R_.noalias() += Ls_.topRows(q_).transpose() * Lc_.topRows(q_);
        q_ = 0;
    }

    const NodalInterpolator& in_;
    int ns_, nc_, block_;
    int q_ = 0;
    RowMat Ls_, Lc_;
    Eigen::MatrixXd R_;
};

int inner_speed_count(const CollisionQuadrature& q, const VelocityGrid& g) {
    return q.n_speed > 0 ? q.n_speed : g.n_speed();
}

void check_frame(const CollisionModel& model, const VelocityGrid& g) {
    const auto& b = model.background;
    if (b.mu[0] != 0.0 || b.mu[1] != 0.0)
        throw PreconditionError("collision: bulk velocity must be aligned with the axis");
    if (std::abs(g.center - b.mu[2]) > 1e-14 || std::abs(g.lam - b.lam) > 1e-14)
        throw PreconditionError("collision: grid frame does not match the background Maxwellian");
}

Eigen::VectorXd chi_vector(const GridFunction& f) { return f.values.real(); }

}  // namespace

double cross_section(CrossSection b, double c) {
    switch (b) {
        case CrossSection::AbsCos: return std::abs(c);
        case CrossSection::CosSquared: return c * c;
    }
    return 0.0;
}

double cross_section_integral(CrossSection b) {
    switch (b) {
        case CrossSection::AbsCos: return 2.0 * kPi;
        case CrossSection::CosSquared: return 4.0 * kPi / 3.0;
    }
    return 0.0;
}

std::string to_string(CrossSection b) {
    return b == CrossSection::AbsCos ? "abs_cos" : "cos_squared";
}

CrossSection cross_section_from_string(const std::string& name) {
    if (name == "abs_cos") return CrossSection::AbsCos;
    if (name == "cos_squared") return CrossSection::CosSquared;
    throw ConfigError("unknown cross section '" + name + "'", "cross_section");
}

std::string CollisionQuadrature::to_text() const {
    std::ostringstream os;
    os << "n_speed=" << n_speed << ";n_cosine=" << n_cosine << ";n_azimuth=" << n_azimuth
       << ";n_cos_omega=" << n_cos_omega << ";n_beta=" << n_beta;
    return os.str();
}

void CollisionQuadrature::validate() const {
    if (n_speed < 0) throw ConfigError("collision quadrature: n_speed must be >= 0", "n_speed_star");
    if (n_cosine < 2) throw ConfigError("collision quadrature: n_cosine too small", "n_cosine_star");
    if (n_azimuth < 4 || n_azimuth % 2)
        throw ConfigError("collision quadrature: n_azimuth must be even and >= 4", "n_azimuth");
    if (n_cos_omega < 2) throw ConfigError("collision quadrature: n_cos_omega too small", "n_cos_omega");
    if (n_beta < 4) throw ConfigError("collision quadrature: n_beta too small", "n_beta");
}

void CollisionModel::validate() const {
    if (!(gamma >= 0.0 && gamma <= 1.0)) throw ConfigError("collision model: gamma must lie in [0, 1]", "gamma");
    // Cutoff bound B <= |cos| on a sampled grid.
    for (int k = 0; k <= 200; ++k) {
        double c = -1.0 + 0.01 * k;
        double v = cross_section(cross, c);
        if (v < 0.0 || v > std::abs(c) + 1e-15)
            throw ConfigError("collision model: cross section violates the cutoff bound", "cross_section");
    }
    background.validate();
    quad.validate();
}

std::string CollisionModel::key_text() const {
    std::ostringstream os;
    os.precision(17);
    os << "gamma=" << gamma << ";cross=" << to_string(cross) << ";rho=" << background.rho
       << ";mu=" << background.mu[0] << "," << background.mu[1] << "," << background.mu[2]
       << ";lam=" << background.lam << ";" << quad.to_text();
    return os.str();
}

GridFunction OperatorMatrix::apply(const GridFunction& g) const {
    if (g.grid != col_grid && !g.grid->same_layout(*col_grid))
        throw PreconditionError("OperatorMatrix::apply: grid mismatch");
    return GridFunction(row_grid, entries.cast<cplx>() * g.values, g.parity);
}

double sqrt_frame_maxwellian(const VelocityGrid& g, double s) {
    return std::pow(2.0 * kPi * g.lam, -0.75) * std::exp(-s * s / (4.0 * g.lam));
}

NodalInterpolator::NodalInterpolator(GridPtr grid)
    : grid_(std::move(grid)), speed_(grid_->speed_nodes), cosine_(grid_->cosine_nodes) {
    for (double s : grid_->speed_nodes) inv_sqrt_m_.push_back(1.0 / sqrt_frame_maxwellian(*grid_, s));
    const int m = grid_->azimuthal_sector;
    for (double c : grid_->cosine_nodes) inv_sin_pow_.push_back(std::pow(1.0 - c * c, -0.5 * m));
}

bool NodalInterpolator::basis(const Vec3& xi, double* bs, double* bc, double& scalar) const {
    const VelocityGrid& g = *grid_;
    double v0 = xi[0], v1 = xi[1], v2 = xi[2] - g.center;
    double rho2 = v0 * v0 + v1 * v1;
    double s = std::sqrt(rho2 + v2 * v2);
    if (s > g.physical_cutoff()) return false;
    double c = s > 0.0 ? v2 / s : 0.0;
    speed_.basis(s, bs);
    cosine_.basis(c, bc);
    for (int a = 0; a < g.n_speed(); ++a) bs[a] *= inv_sqrt_m_[a];
    const int m = g.azimuthal_sector;
    if (m == 0) {
        scalar = 1.0;
    } else {
        for (int b = 0; b < g.n_cosine(); ++b) bc[b] *= inv_sin_pow_[b];
        // (1-c^2)^(m/2) cos(m phi) = Re((v0 + i v1)/s)^m
        if (s == 0.0) {
            scalar = 0.0;
        } else {
            std::complex<double> z(v0 / s, v1 / s), zp = 1.0;
            for (int k = 0; k < m; ++k) zp *= z;
            scalar = zp.real();
        }
    }
    return true;
}

double NodalInterpolator::eval_p(const Eigen::VectorXd& f, const Vec3& xi) const {
    const int ns = grid_->n_speed(), nc = grid_->n_cosine();
    std::vector<double> bs(ns), bc(nc);
    double scalar = 0.0;
    if (!basis(xi, bs.data(), bc.data(), scalar)) return 0.0;
    double sum = 0.0;
    for (int a = 0; a < ns; ++a) {
        double row = 0.0;
        for (int b = 0; b < nc; ++b) row += bc[b] * f(a * nc + b);
        sum += bs[a] * row;
    }
    return sum * scalar;
}

Eigen::VectorXd compute_nu(const CollisionModel& model, const VelocityGrid& grid) {
    model.validate();
    check_frame(model, grid);
    const double lam = grid.lam, gamma = model.gamma;
    const double pref = model.background.rho * std::pow(2.0 * kPi * lam, -1.5) *
                        cross_section_integral(model.cross) * 2.0 * kPi * lam;
    Eigen::VectorXd nu(grid.size());
    for (int a = 0; a < grid.n_speed(); ++a) {
        const double s = grid.speed_nodes[a];
        // nu = pref/s int_0^inf r^{1+gamma} (e^{-(r-s)^2/2lam} - e^{-(r+s)^2/2lam}) dr
        auto integrand = [&](double r) {
            double x = r * s / lam;
            double diff_over_s;
            if (x < 1e-3) {
                // 2 e^{-(r^2+s^2)/2lam} sinh(x)/s with sinh(x)/x series
                double sh = 1.0 + x * x / 6.0 + x * x * x * x / 120.0;
                diff_over_s = 2.0 * std::exp(-(r * r + s * s) / (2.0 * lam)) * sh * r / lam;
            } else {
                diff_over_s = (std::exp(-(r - s) * (r - s) / (2.0 * lam)) -
                               std::exp(-(r + s) * (r + s) / (2.0 * lam))) / s;
            }
            return std::pow(r, 1.0 + gamma) * diff_over_s;
        };
        const double sd = std::sqrt(lam);
        std::vector<double> breaks;
        double lo = std::max(0.0, s - 12.0 * sd), hi = s + 12.0 * sd;
        breaks.push_back(0.0);
        if (lo > 0.0) breaks.push_back(lo);
        for (int k = 1; k <= 12; ++k) breaks.push_back(lo + (hi - lo) * k / 12.0);
        Rule r = composite_gauss_legendre(breaks, 24);
        double val = pref * r.integrate(integrand);
        for (int b = 0; b < grid.n_cosine(); ++b) nu(grid.index(a, b)) = val;
    }
    return nu;
}

Eigen::VectorXd compute_nu_quadrature(const CollisionModel& model, const VelocityGrid& grid) {
    model.validate();
    check_frame(model, grid);
    auto stars = star_rule(grid.center, grid.lam, grid.cutoff_speed, inner_speed_count(model.quad, grid),
                           model.quad.n_cosine, model.quad.n_azimuth);
    const double pref = model.background.rho * std::pow(2.0 * kPi * grid.lam, -1.5) *
                        cross_section_integral(model.cross);
    Eigen::VectorXd nu(grid.size());
    for (int i = 0; i < grid.size(); ++i) {
        auto xi = grid.velocity(i);
        double sum = 0.0;
        for (const auto& sp : stars) {
            Vec3 w{xi[0] - sp.xi[0], xi[1] - sp.xi[1], xi[2] - sp.xi[2]};
            sum += sp.w_gauss * std::pow(std::sqrt(dot3(w, w)), model.gamma);
        }
        nu(i) = pref * sum;
    }
    return nu;
}

Eigen::MatrixXd to_symmetric_coordinates(const Eigen::MatrixXd& A, const Eigen::VectorXd& w) {
    Eigen::VectorXd sq = w.cwiseSqrt();
    return sq.asDiagonal() * A * sq.cwiseInverse().asDiagonal();
}

InvariantProjector::InvariantProjector(const GridPtr& grid, Parity parity)
    : grid_(grid), basis_(chi_basis(grid, parity)) {}

Eigen::MatrixXd InvariantProjector::P0_matrix() const {
    const int n = grid_->size();
    Eigen::MatrixXd P = Eigen::MatrixXd::Zero(n, n);
    Eigen::VectorXd w = grid_->weights();
    for (const auto& chi : basis_) {
        Eigen::VectorXd c = chi_vector(chi);
        P += c * (w.cwiseProduct(c)).transpose();
    }
    return P;
}

Eigen::MatrixXd InvariantProjector::P1_matrix() const {
    return Eigen::MatrixXd::Identity(grid_->size(), grid_->size()) - P0_matrix();
}

GridFunction InvariantProjector::P0(const GridFunction& g) const {
    Eigen::VectorXcd out = Eigen::VectorXcd::Zero(g.values.size());
    for (const auto& chi : basis_) {
        GridFunction c = chi;
        c.parity = g.parity;
        out += std::conj(inner(c, g)) * c.values;  // <g, chi> chi
    }
    return GridFunction(g.grid, out, g.parity);
}

GridFunction InvariantProjector::P1(const GridFunction& g) const {
    GridFunction p0 = P0(g);
    return GridFunction(g.grid, g.values - p0.values, g.parity);
}

namespace {

std::string collision_cache_key(const CollisionModel& model, const VelocityGrid& grid) {
    return "collision-raw-v1\n" + model.key_text() + "\n" + grid.spec_text();
}

// Raw collocation matrix and the quadrature nu.
std::pair<Eigen::MatrixXd, Eigen::VectorXd> assemble_raw(const CollisionModel& model,
                                                         const GridPtr& gp, int jobs) {
    const VelocityGrid& grid = *gp;
    const auto& q = model.quad;
    auto stars = star_rule(grid.center, grid.lam, grid.cutoff_speed, inner_speed_count(q, grid),
                           q.n_cosine, q.n_azimuth);
    auto omegas = omega_rule(model.cross, q.n_cos_omega, q.n_beta);
    const double bint = omega_total(omegas);
    NodalInterpolator interp(gp);
    const int n = grid.size();
    const double mstar = std::pow(2.0 * kPi * grid.lam, -1.5);  // rho-free M_* prefactor
    const double rho = model.background.rho;
    Eigen::MatrixXd L(n, n);
    Eigen::VectorXd nu_q(n);
    parallel_for(static_cast<std::size_t>(n), jobs, [&](std::size_t ii) {
        const int i = static_cast<int>(ii);
        RowAccumulator acc(interp);
        auto xi = grid.velocity(i);
        double nu_sum = 0.0;
        walk(
            xi, model.gamma, stars, omegas,
            [&](const StarPoint& sp, double g) {
                nu_sum += sp.w_gauss * g * bint;
                acc.add(sp.xi, -sp.w_gauss * g * bint);
            },
            [&](const StarPoint& sp, double g, const OmegaPoint& o, const Vec3& xp, const Vec3& xps) {
                double w = sp.w_gauss * g * o.w;
                acc.add(xp, w);
                acc.add(xps, w);
            });
        Eigen::VectorXd row = acc.result();
        const double pref = rho * mstar * sqrt_frame_maxwellian(grid, grid.speed(i));
        L.row(i) = pref * row.transpose();
        nu_q(i) = rho * mstar * nu_sum;
        L(i, i) -= nu_q(i);
    });
    return {L, nu_q};
}

}  // namespace

CollisionOperator assemble_collision(const CollisionModel& model, const GridPtr& grid,
                                     const AssemblyOptions& opts) {
    model.validate();
    check_frame(model, *grid);
    Eigen::MatrixXd raw;
    Eigen::VectorXd nu_q;
    const std::string key = collision_cache_key(model, *grid);
    std::optional<std::vector<Eigen::MatrixXd>> hit;
    if (opts.cache) hit = opts.cache->load(key);
    if (hit && hit->size() == 2) {
        raw = (*hit)[0];
        nu_q = (*hit)[1].col(0);
    } else {
        std::tie(raw, nu_q) = assemble_raw(model, grid, opts.jobs);
        if (opts.cache) opts.cache->store(key, {raw, Eigen::MatrixXd(nu_q)});
    }

    CollisionOperator op;
    op.model = model;
    op.grid = grid;
    op.nu = compute_nu(model, *grid);
    op.nu_quadrature_defect = ((nu_q - op.nu).cwiseAbs().array() / op.nu.array()).maxCoeff();

    const Eigen::VectorXd w = grid->weights();
    Eigen::MatrixXd S = to_symmetric_coordinates(raw, w);
    const double scale = S.norm();
    op.raw_symmetry_defect = (S - S.transpose()).norm() / scale;

    InvariantProjector proj(grid);
    Eigen::VectorXd sq = w.cwiseSqrt();
    double null_defect = 0.0, range_defect = 0.0;
    Eigen::MatrixXd P0s = Eigen::MatrixXd::Zero(grid->size(), grid->size());
    for (const auto& chi : proj.basis()) {
        Eigen::VectorXd c = sq.cwiseProduct(chi_vector(chi));
        null_defect = std::max(null_defect, (S * c).norm() / scale);
        P0s += c * c.transpose();
    }
    range_defect = (P0s * S).norm() / scale;
    op.raw_null_defect = null_defect;
    op.raw_range_defect = range_defect;

    Eigen::MatrixXd Ssym = 0.5 * (S + S.transpose());
    Eigen::MatrixXd P1s = Eigen::MatrixXd::Identity(grid->size(), grid->size()) - P0s;
    Ssym = P1s * Ssym * P1s;
    Ssym = 0.5 * (Ssym + Ssym.transpose());
    op.L = sq.cwiseInverse().asDiagonal() * Ssym * sq.asDiagonal();
    op.K = op.L;
    op.K.diagonal() += op.nu;
    return op;
}

OperatorMatrix CollisionOperator::as_L() const {
    return {OperatorMatrix::Kind::L, grid->azimuthal_sector, grid, grid, L};
}

OperatorMatrix CollisionOperator::as_K() const {
    return {OperatorMatrix::Kind::K, grid->azimuthal_sector, grid, grid, K};
}

OperatorMatrix CollisionOperator::as_nu() const {
    return {OperatorMatrix::Kind::Nu, grid->azimuthal_sector, grid, grid,
            Eigen::MatrixXd(nu.asDiagonal())};
}

OperatorMatrix assemble_K(const CollisionModel& model, const GridPtr& grid,
                          const AssemblyOptions& opts) {
    return assemble_collision(model, grid, opts).as_K();
}

OperatorMatrix assemble_L(const CollisionModel& model, const GridPtr& grid,
                          const AssemblyOptions& opts) {
    return assemble_collision(model, grid, opts).as_L();
}

GridFunction gamma_bilinear(const CollisionModel& model, const GridFunction& h1,
                            const GridFunction& h2, GammaDiagnostics* diag, int jobs) {
    model.validate();
    const VelocityGrid& g1 = *h1.grid;
    const VelocityGrid& g2 = *h2.grid;
    if (g1.n_speed() != g2.n_speed() || g1.n_cosine() != g2.n_cosine() ||
        g1.center != g2.center || g1.lam != g2.lam || g1.cutoff_speed != g2.cutoff_speed)
        throw PreconditionError("gamma_bilinear: inputs live on different grids");
    check_frame(model, g1);
    const int m1 = h1.sector(), m2 = h2.sector();
    if (!((m1 == 0 && m2 == 0) || (m1 == 1 && m2 == 0) || (m1 == 0 && m2 == 1)))
        throw PreconditionError("gamma_bilinear: unsupported sector combination (" +
                                std::to_string(m1) + ", " + std::to_string(m2) + ")");
    const int mo = m1 + m2;
    Parity parity = (m1 == 1 ? h1.parity : (m2 == 1 ? h2.parity : Parity::Cos));
    GridPtr out_grid = (m1 == mo) ? h1.grid : h2.grid;

    const auto& q = model.quad;
    auto stars = star_rule(g1.center, g1.lam, g1.cutoff_speed, inner_speed_count(q, g1),
                           q.n_cosine, q.n_azimuth);
    auto omegas = omega_rule(model.cross, q.n_cos_omega, q.n_beta);
    const double bint = omega_total(omegas);
    NodalInterpolator i1(h1.grid), i2(h2.grid);
    // Sin-parity inputs are rotations of cos-parity ones; evaluate as cos.
    const Eigen::VectorXd f1 = h1.values.real(), f2 = h2.values.real();
    const Eigen::VectorXd f1i = h1.values.imag(), f2i = h2.values.imag();
    const bool complex_in = f1i.norm() > 0.0 || f2i.norm() > 0.0;
    if (complex_in)
        throw PreconditionError("gamma_bilinear: complex inputs are not supported; split real/imag");

    const int n = out_grid->size();
    const double mstar = std::pow(2.0 * kPi * g1.lam, -1.5);
    const double rho = model.background.rho;
    Eigen::VectorXd out(n);
    parallel_for(static_cast<std::size_t>(n), jobs, [&](std::size_t ii) {
        const int i = static_cast<int>(ii);
        auto xi = out_grid->velocity(i);
        const double p1 = i1.eval_p(f1, xi), p2 = i2.eval_p(f2, xi);
        double sum = 0.0;
        walk(
            xi, model.gamma, stars, omegas,
            [&](const StarPoint& sp, double g) {
                double p1s = i1.eval_p(f1, sp.xi), p2s = i2.eval_p(f2, sp.xi);
                sum -= sp.w_gauss * g * bint * (p1 * p2s + p1s * p2);
            },
            [&](const StarPoint& sp, double g, const OmegaPoint& o, const Vec3& xp, const Vec3& xps) {
                double a = i1.eval_p(f1, xp) * i2.eval_p(f2, xps) + i1.eval_p(f1, xps) * i2.eval_p(f2, xp);
                sum += sp.w_gauss * g * o.w * a;
            });
        // 1/2 sqrt(M) M_* prefactors with p = p_hat / sqrt(rho).
        out(i) = 0.5 * std::sqrt(rho) * mstar * sqrt_frame_maxwellian(*out_grid, out_grid->speed(i)) * sum;
    });

    GridFunction res(out_grid, out.cast<cplx>(), Parity::Cos);
    InvariantProjector proj(out_grid);
    GridFunction p0 = proj.P0(res);
    double nrm = norm(res, NormKind::l2());
    if (diag) diag->raw_invariant_defect = nrm > 0.0 ? norm(p0, NormKind::l2()) / nrm : 0.0;
    GridFunction projected(out_grid, res.values - p0.values, parity);
    return projected;
}

SourceOperator assemble_T(const BackgroundPair& pair, double gamma, CrossSection cross,
                          const CollisionQuadrature& quad, const GridPtr& grid_a,
                          const GridPtr& grid_b, const AssemblyOptions& opts) {
    const VelocityGrid& ga = *grid_a;
    const VelocityGrid& gb = *grid_b;
    if (ga.center != 0.0 || ga.lam != 1.0)
        throw PreconditionError("assemble_T: output grid must be the reference frame");
    if (std::abs(gb.center - pair.b.mu[2]) > 1e-14 || std::abs(gb.lam - pair.b.lam) > 1e-14)
        throw PreconditionError("assemble_T: input grid frame does not match background b");
    if (ga.azimuthal_sector != gb.azimuthal_sector)
        throw PreconditionError("assemble_T: sector mismatch");
    CollisionModel check;
    check.gamma = gamma;
    check.cross = cross;
    check.quad = quad;
    check.validate();

    SourceOperator res;
    res.T.kind = OperatorMatrix::Kind::T;
    res.T.sector = ga.azimuthal_sector;
    res.T.row_grid = grid_a;
    res.T.col_grid = grid_b;
    const int na = ga.size(), nb = gb.size();
    if (pair.trivial()) {
        res.T.entries = Eigen::MatrixXd::Zero(na, nb);
        res.raw_invariant_defect = 0.0;
        return res;
    }

    std::ostringstream key;
    key.precision(17);
    key << "source-T-v1\n"
        << "gamma=" << gamma << ";cross=" << to_string(cross) << ";rho=" << pair.b.rho
        << ";mu=" << pair.b.mu[2] << ";lam=" << pair.b.lam << ";" << quad.to_text() << "\n"
        << ga.spec_text() << "\n" << gb.spec_text();
    Eigen::MatrixXd raw;
    std::optional<std::vector<Eigen::MatrixXd>> hit;
    if (opts.cache) hit = opts.cache->load(key.str());
    if (hit && hit->size() == 1) {
        raw = (*hit)[0];
    } else {
        const double lam_q = std::max(1.0, pair.b.lam);
        auto stars = star_rule(0.0, lam_q, ga.cutoff_speed, inner_speed_count(quad, ga),
                               quad.n_cosine, quad.n_azimuth);
        auto omegas = omega_rule(cross, quad.n_cos_omega, quad.n_beta);
        const double bint = omega_total(omegas);
        NodalInterpolator ib(grid_b);
        const MaxwellianParams a, b = pair.b;
        // p_b = f / sqrt(M_b) = p_hat / sqrt(rho);  M_b = rho M_hat_b.
        const double inv_sqrt_rho = 1.0 / std::sqrt(b.rho);
        auto G = [&](const Vec3& x) { return eval_maxwellian(b, x) - eval_maxwellian(a, x); };
        raw.resize(na, nb);
        parallel_for(static_cast<std::size_t>(na), opts.jobs, [&](std::size_t ii) {
            const int i = static_cast<int>(ii);
            RowAccumulator acc(ib);
            auto xi = ga.velocity(i);
            const double Mb = eval_maxwellian(b, xi), Gx = G(xi);
            double gstar_sum = 0.0;
            walk(
                xi, gamma, stars, omegas,
                [&](const StarPoint& sp, double g) {
                    double w = sp.w_plain * g * bint;
                    gstar_sum += w * G(sp.xi);
                    acc.add(sp.xi, -w * eval_maxwellian(b, sp.xi) * Gx);
                },
                [&](const StarPoint& sp, double g, const OmegaPoint& o, const Vec3& xp, const Vec3& xps) {
                    double w = sp.w_plain * g * o.w;
                    acc.add(xp, w * eval_maxwellian(b, xp) * G(xps));
                    acc.add(xps, w * eval_maxwellian(b, xps) * G(xp));
                });
            acc.add(xi, -Mb * gstar_sum);
            Eigen::VectorXd row = acc.result();
            const double pref = 0.5 * inv_sqrt_rho / sqrt_maxwellian(a, xi);
            raw.row(i) = pref * row.transpose();
        });
        if (opts.cache) opts.cache->store(key.str(), {raw});
    }

    InvariantProjector proj(grid_a);
    Eigen::MatrixXd P0 = proj.P0_matrix();
    Eigen::VectorXd w = ga.weights().cwiseSqrt();
    auto wnorm = [&](const Eigen::MatrixXd& M) { return (w.asDiagonal() * M).norm(); };
    double scale = wnorm(raw);
    res.raw_invariant_defect = scale > 0.0 ? wnorm(P0 * raw) / scale : 0.0;
    res.T.entries = raw - P0 * raw;
    return res;
}

}  // namespace kinetic
