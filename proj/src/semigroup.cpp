#include "kinetic/semigroup.hpp"

#include <unsupported/Eigen/MatrixFunctions>

#include <algorithm>
#include <cmath>

#include "kinetic/errors.hpp"
#include "kinetic/quadrature.hpp"

namespace kinetic {

namespace {

constexpr double kPi = 3.14159265358979323846;

int slow_count_of(int sector) { return sector == 0 ? 3 : (sector == 1 ? 1 : 0); }

// j_0..j_{L-1} at x.  Upward recurrence is stable for x >= L.
void spherical_bessel(int L, double x, double* out) {
    if (x < 1e-8) {
        out[0] = 1.0;
        for (int l = 1; l < L; ++l) out[l] = 0.0;
        return;
    }
    if (x >= L) {
        double s = std::sin(x), c = std::cos(x);
        out[0] = s / x;
        if (L > 1) out[1] = s / (x * x) - c / x;
        for (int l = 2; l < L; ++l) out[l] = (2 * l - 1) / x * out[l - 1] - out[l - 2];
        return;
    }
    for (int l = 0; l < L; ++l) out[l] = std::sph_bessel(static_cast<unsigned>(l), x);
}

double legendre_p(int l, double x) {
    double p0 = 1.0, p1 = x;
    if (l == 0) return p0;
    for (int k = 2; k <= l; ++k) {
        double p2 = ((2 * k - 1) * x * p1 - (k - 1) * p0) / k;
        p0 = p1;
        p1 = p2;
    }
    return p1;
}

// Parabolic refinement of a discrete maximum at interior index k.
std::pair<double, double> refine_max(const std::vector<double>& x, const std::vector<double>& y, std::size_t k) {
    if (k == 0 || k + 1 >= y.size()) return {x[k], y[k]};
    double y0 = y[k - 1], y1 = y[k], y2 = y[k + 1];
    double den = y0 - 2.0 * y1 + y2;
    if (den >= 0.0) return {x[k], y1};
    double d = 0.5 * (y0 - y2) / den;  // offset in units of the spacing (uniform grid)
    d = std::clamp(d, -0.5, 0.5);
    double h = x[k + 1] - x[k];
    return {x[k] + d * h, std::max(y1, y1 - 0.25 * (y0 - y2) * d)};
}

}  // namespace

double SpaceProfile::value(double R) const { return amplitude * std::exp(-R * R / (2.0 * width * width)); }

double SpaceProfile::fourier(double r) const {
    return amplitude * std::pow(2.0 * kPi, 1.5) * width * width * width * std::exp(-0.5 * width * width * r * r);
}

double SpaceProfile::l1() const { return amplitude * std::pow(2.0 * kPi, 1.5) * width * width * width; }

double SpaceProfile::l2() const { return amplitude * std::pow(kPi, 0.75) * std::pow(width, 1.5); }

double long_wave_cutoff(double r, double delta) {
    if (!(delta > 0.0)) return 0.0;
    if (r <= 0.5 * delta) return 1.0;
    if (r >= delta) return 0.0;
    double x = (r - 0.5 * delta) / (0.5 * delta);
    double s = x * x * x * (10.0 - 15.0 * x + 6.0 * x * x);
    return 1.0 - s;
}

std::string to_string(Part p) {
    switch (p) {
        case Part::Full: return "full";
        case Part::LongFluid: return "long_fluid";
        case Part::LongNonFluid: return "long_nonfluid";
        case Part::Short: return "short";
    }
    return "?";
}

ModePropagator::ModePropagator(const WaveOperator& op, double delta) : op_(op) {
    es_ = kinetic::eigensystem(op_);
    fallback_ = !(es_.condition < kConditionLimit) || !(es_.inverse_residual < 1e-8);
    chi_ = long_wave_cutoff(op_.r, delta);
    if (chi_ > 0.0) {
        const int n = slow_count_of(op_.sector);
        auto slow = label_slow_branches(op_, eigen_near_zero(op_, n, &es_));
        for (const auto& p : slow) slow_.push_back(p.index);
    }
}

Eigen::VectorXcd ModePropagator::to_sym(const Eigen::VectorXcd& v) const {
    return op_.sqrt_w.cast<cplx>().cwiseProduct(v);
}

Eigen::VectorXcd ModePropagator::from_sym(const Eigen::VectorXcd& v) const {
    return v.cwiseQuotient(op_.sqrt_w.cast<cplx>());
}

Eigen::VectorXcd ModePropagator::full(const Eigen::VectorXcd& psi, double t) const {
    Eigen::VectorXcd y = to_sym(psi);
    if (fallback_) {
        Eigen::MatrixXcd E = (op_.sym * t).exp();
        return from_sym(E * y);
    }
    Eigen::VectorXcd c = es_.Vinv * y;
    for (int k = 0; k < c.size(); ++k) c(k) *= std::exp(es_.values(k) * t);
    return from_sym(es_.V * c);
}

Eigen::VectorXcd ModePropagator::fluid(const Eigen::VectorXcd& psi, double t, const std::vector<int>& branches) const {
    Eigen::VectorXcd y = to_sym(psi);
    Eigen::VectorXcd out = Eigen::VectorXcd::Zero(y.size());
    for (std::size_t j = 0; j < slow_.size(); ++j) {
        if (!branches.empty() && std::find(branches.begin(), branches.end(), static_cast<int>(j)) == branches.end())
            continue;
        const int k = slow_[j];
        cplx c = (es_.Vinv.row(k) * y)(0);
        out += es_.V.col(k) * (c * std::exp(es_.values(k) * t));
    }
    return from_sym(out);
}

Eigen::VectorXcd ModePropagator::nonfluid(const Eigen::VectorXcd& psi, double t) const {
    if (fallback_) return full(psi, t) - fluid(psi, t);
    Eigen::VectorXcd y = to_sym(psi);
    Eigen::VectorXcd c = es_.Vinv * y;
    for (int k = 0; k < c.size(); ++k) c(k) *= std::exp(es_.values(k) * t);
    for (int k : slow_) c(k) = 0.0;
    return from_sym(es_.V * c);
}

std::array<Eigen::VectorXcd, 3> ModePropagator::split(const Eigen::VectorXcd& psi, double t) const {
    const int n = static_cast<int>(psi.size());
    std::array<Eigen::VectorXcd, 3> out{Eigen::VectorXcd::Zero(n), Eigen::VectorXcd::Zero(n),
                                         Eigen::VectorXcd::Zero(n)};
    if (chi_ > 0.0) {
        out[0] = chi_ * fluid(psi, t);
        out[1] = chi_ * nonfluid(psi, t);
    }
    if (chi_ < 1.0) out[2] = (1.0 - chi_) * full(psi, t);
    return out;
}

ModeSolution evolve_mode(const WaveOperator& op, const GridFunction& psi, const std::vector<double>& times) {
    if (psi.grid != op.grid && !psi.grid->same_layout(*op.grid))
        throw PreconditionError("evolve_mode: psi lives on a different grid");
    ModePropagator prop(op);
    ModeSolution sol;
    sol.r = op.r;
    sol.part = Part::Full;
    sol.times = times;
    sol.fallback = prop.fallback();
    for (double t : times) sol.values.emplace_back(op.grid, t == 0.0 ? psi.values : prop.full(psi.values, t), psi.parity);
    return sol;
}

std::array<ModeSolution, 3> split_mode(const WaveOperator& op, const GridFunction& psi,
                                       const std::vector<double>& times, double delta) {
    if (psi.grid != op.grid && !psi.grid->same_layout(*op.grid))
        throw PreconditionError("split_mode: psi lives on a different grid");
    ModePropagator prop(op, delta);
    std::array<ModeSolution, 3> out;
    const Part parts[3] = {Part::LongFluid, Part::LongNonFluid, Part::Short};
    for (int p = 0; p < 3; ++p) {
        out[p].r = op.r;
        out[p].part = parts[p];
        out[p].times = times;
        out[p].fallback = prop.fallback();
    }
    for (double t : times) {
        auto s = prop.split(psi.values, t);
        for (int p = 0; p < 3; ++p) out[p].values.emplace_back(op.grid, s[p], psi.parity);
    }
    return out;
}

Eigen::VectorXcd damped_transport(const SpaceProfile& profile, const GridFunction& psi,
                                  const Eigen::VectorXd& nu, double t, const Vec3& x) {
    const VelocityGrid& g = *psi.grid;
    if (nu.size() != g.size()) throw PreconditionError("damped_transport: nu size mismatch");
    Eigen::VectorXcd out(g.size());
    for (int i = 0; i < g.size(); ++i) {
        auto xi = g.velocity(i);
        double d0 = x[0] - xi[0] * t, d1 = x[1] - xi[1] * t, d2 = x[2] - xi[2] * t;
        out(i) = std::exp(-nu(i) * t) * profile.value(std::sqrt(d0 * d0 + d1 * d1 + d2 * d2)) * psi.values(i);
    }
    return out;
}

RQuadrature make_r_quadrature(const RGridSpec& spec) {
    if (!(spec.r_max > 0.0 && spec.t_max > 0.0 && spec.phase_per_panel > 0.0 && spec.nodes_per_panel >= 2))
        throw ConfigError("r-grid: invalid specification", "r_grid");
    Rule gl = gauss_legendre(spec.nodes_per_panel);
    RQuadrature q;
    double a = 0.0;
    while (a < spec.r_max) {
        double t_eff = a > 0.0 ? std::min(spec.t_max, spec.decay_budget / spec.assumed_rate(a)) : spec.t_max;
        double rate = spec.speed * (1.0 + spec.reach) * t_eff + 8.0;
        double h = std::min(0.25, spec.phase_per_panel / rate);
        double b = std::min(spec.r_max, a + h);
        for (std::size_t k = 0; k < gl.size(); ++k) {
            q.r.push_back(0.5 * (a + b) + 0.5 * (b - a) * gl.nodes[k]);
            q.w.push_back(0.5 * (b - a) * gl.weights[k]);
        }
        a = b;
    }
    return q;
}

std::vector<double> geometric_times(double t_min, double t_max, int per_decade, bool include_zero) {
    if (!(t_min > 0.0 && t_max > t_min && per_decade >= 1))
        throw ConfigError("time grid: need 0 < t_min < t_max and per_decade >= 1", "times");
    std::vector<double> t;
    if (include_zero) t.push_back(0.0);
    const int n = static_cast<int>(std::ceil(per_decade * std::log10(t_max / t_min)));
    for (int k = 0; k <= n; ++k) t.push_back(t_min * std::pow(t_max / t_min, static_cast<double>(k) / n));
    return t;
}

RadialSynthesis::RadialSynthesis(GridPtr grid, SpaceProfile profile, std::vector<double> times, int channels,
                                 Options opts)
    : grid_(std::move(grid)), profile_(profile), times_(std::move(times)), channels_(channels), opts_(opts) {
    if (grid_->azimuthal_sector != 0) throw PreconditionError("RadialSynthesis: sector-0 mode data required");
    if (channels_ < 1) throw PreconditionError("RadialSynthesis: at least one channel");
    const int nc = grid_->n_cosine(), ns = grid_->n_speed();
    L_ = nc;
    legendre_.resize(L_, nc);
    for (int l = 0; l < L_; ++l)
        for (int b = 0; b < nc; ++b)
            legendre_(l, b) = 0.5 * (2 * l + 1) * grid_->cosine_weights[b] * legendre_p(l, grid_->cosine_nodes[b]);
    angle_P_.resize(opts_.n_angles, L_);
    for (int k = 0; k < opts_.n_angles; ++k) {
        double c = -1.0 + 2.0 * k / (opts_.n_angles - 1);
        for (int l = 0; l < L_; ++l) angle_P_(k, l) = legendre_p(l, c);
    }
    R_.resize(times_.size());
    for (std::size_t ti = 0; ti < times_.size(); ++ti) {
        double t = times_[ti];
        double width = std::sqrt(profile_.width * profile_.width + 2.0 * opts_.A_min * t);
        double R_hi = opts_.reach * opts_.speed * t + 8.0 * profile_.width;
        double dR = 0.15 * width;
        int n = static_cast<int>(std::ceil(R_hi / dR)) + 1;
        for (int k = 0; k < n; ++k) R_[ti].push_back(k * dR);
    }
    plancherel_.assign(channels_, std::vector<double>(times_.size(), 0.0));
    xi_l2_.assign(channels_, std::vector<Eigen::VectorXd>(times_.size(), Eigen::VectorXd::Zero(ns)));
    U_.resize(channels_);
    if (opts_.pointwise)
        for (int c = 0; c < channels_; ++c)
            for (std::size_t ti = 0; ti < times_.size(); ++ti)
                U_[c].push_back(Eigen::MatrixXcd::Zero(static_cast<Eigen::Index>(R_[ti].size()), L_ * ns));
}

void RadialSynthesis::add(double r, double w, int ti, const std::vector<const Eigen::VectorXcd*>& values) {
    if (static_cast<int>(values.size()) != channels_) throw PreconditionError("RadialSynthesis::add: channel count");
    const int nc = grid_->n_cosine(), ns = grid_->n_speed();
    const double ph = profile_.fourier(r);
    const double base = w * r * r * ph;
    std::vector<Eigen::MatrixXcd> fl(channels_);
    bool any = false;
    for (int c = 0; c < channels_; ++c) {
        const Eigen::VectorXcd* v = values[c];
        if (!v) continue;
        any = true;
        // |v|^2 in L2_xi and per-speed cosine integrals.
        double total = 0.0;
        for (int a = 0; a < ns; ++a) {
            double cs = 0.0;
            for (int b = 0; b < nc; ++b) cs += grid_->cosine_weights[b] * std::norm((*v)(a * nc + b));
            xi_l2_[c][ti](a) += base * ph * 2.0 * kPi * cs;
            total += grid_->speed_weights[a] * cs;
        }
        plancherel_[c][ti] += base * ph * 2.0 * kPi * total;
        if (opts_.pointwise) {
            Eigen::Map<const Eigen::Matrix<cplx, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>> F(v->data(), ns, nc);
            fl[c] = legendre_.cast<cplx>() * F.transpose();  // L x ns
        }
    }
    if (!any || !opts_.pointwise) return;
    const double pref = base * 4.0 * kPi / std::pow(2.0 * kPi, 3);
    std::vector<double> j(L_);
    const auto& R = R_[ti];
    for (std::size_t k = 0; k < R.size(); ++k) {
        spherical_bessel(L_, r * R[k], j.data());
        for (int c = 0; c < channels_; ++c) {
            if (!values[c]) continue;
            auto row = U_[c][ti].row(static_cast<Eigen::Index>(k));
            const Eigen::MatrixXcd& f = fl[c];
            for (int a = 0; a < ns; ++a)
                for (int l = 0; l < L_; ++l) row(a * L_ + l) += pref * j[l] * f(l, a);
        }
    }
}

std::vector<double> RadialSynthesis::radial_profile(int channel, int ti) const {
    if (!opts_.pointwise) throw PreconditionError("RadialSynthesis: pointwise profiles were not requested");
    const int ns = grid_->n_speed();
    const Eigen::MatrixXcd& U = U_[channel][ti];
    std::vector<double> out(R_[ti].size());
    for (std::size_t k = 0; k < out.size(); ++k) {
        double s = 0.0;
        for (int a = 0; a < ns; ++a)
            for (int l = 0; l < L_; ++l)
                s += grid_->speed_weights[a] * 2.0 * kPi * 2.0 / (2 * l + 1) * std::norm(U(k, a * L_ + l));
        out[k] = std::sqrt(s);
    }
    return out;
}

NormSeries RadialSynthesis::series(int channel) const {
    NormSeries out;
    out.times = times_;
    const int ns = grid_->n_speed();
    const double inv = 1.0 / std::pow(2.0 * kPi, 3);
    std::vector<double> bw(ns);
    for (int a = 0; a < ns; ++a) bw[a] = std::pow(bracket(grid_->speed_nodes[a]), opts_.beta);
    for (std::size_t ti = 0; ti < times_.size(); ++ti) {
        out.l2l2.push_back(std::sqrt(std::max(0.0, plancherel_[channel][ti] * 4.0 * kPi * inv)));
        double mb = 0.0;
        for (int a = 0; a < ns; ++a) mb = std::max(mb, bw[a] * std::sqrt(std::max(0.0, xi_l2_[channel][ti](a) * inv)));
        out.linfbeta_l2.push_back(mb);
        if (!opts_.pointwise) {
            out.linf_l2.push_back(std::nan(""));
            out.linf_l2_argmax.push_back(std::nan(""));
            out.linfbeta_linf.push_back(std::nan(""));
            continue;
        }
        auto prof = radial_profile(channel, static_cast<int>(ti));
        std::size_t k = static_cast<std::size_t>(std::max_element(prof.begin(), prof.end()) - prof.begin());
        auto [xm, ym] = refine_max(R_[ti], prof, k);
        out.linf_l2.push_back(ym);
        out.linf_l2_argmax.push_back(xm);

        // Pointwise in xi: max over (R, angle) of |sum_l i^l P_l U_l|.
        const Eigen::MatrixXcd& U = U_[channel][ti];
        double best = 0.0;
        Eigen::VectorXcd il(L_);
        for (int l = 0; l < L_; ++l) il(l) = std::pow(cplx(0.0, 1.0), l);
        for (int a = 0; a < ns; ++a) {
            double m = 0.0;
            for (Eigen::Index kk = 0; kk < U.rows(); ++kk) {
                Eigen::VectorXcd coef(L_);
                for (int l = 0; l < L_; ++l) coef(l) = il(l) * U(kk, a * L_ + l);
                Eigen::VectorXcd vals = angle_P_.cast<cplx>() * coef;
                m = std::max(m, vals.cwiseAbs().maxCoeff());
            }
            best = std::max(best, bw[a] * m);
        }
        out.linfbeta_linf.push_back(best);
    }
    return out;
}

double RadialSynthesis::imaginary_ratio(int channel) const {
    if (!opts_.pointwise) return 0.0;
    double im = 0.0, mag = 0.0;
    const int ns = grid_->n_speed();
    for (const auto& U : U_[channel])
        for (Eigen::Index k = 0; k < U.rows(); ++k)
            for (int a = 0; a < ns; ++a)
                for (int l = 0; l < L_; ++l) {
                    cplx v = std::pow(cplx(0.0, 1.0), l) * U(k, a * L_ + l);
                    im = std::max(im, std::abs(v.imag()));
                    mag = std::max(mag, std::abs(v));
                }
    return mag > 0.0 ? im / mag : 0.0;
}

namespace {

DecayFit fit_window(const std::vector<double>& t, const std::vector<double>& y, double t1, double t2) {
    if (t.size() != y.size()) throw PreconditionError("fit_decay: size mismatch");
    std::vector<double> lx, lt, ly;
    for (std::size_t k = 0; k < t.size(); ++k) {
        if (t[k] < t1 * (1.0 - 1e-12) || t[k] > t2 * (1.0 + 1e-12)) continue;
        if (!(y[k] > 0.0) || !std::isfinite(y[k])) throw NumericalError("fit_decay: non-positive value in window");
        lx.push_back(std::log1p(t[k]));
        lt.push_back(t[k]);
        ly.push_back(std::log(y[k]));
    }
    const int n = static_cast<int>(ly.size());
    if (n < 4) throw PreconditionError("fit_decay: fewer than 4 samples in the window");
    auto line = [](const std::vector<double>& x, const std::vector<double>& yy, std::size_t lo, std::size_t hi,
                   double& slope, double& icpt, double& rms, double& maxdev) {
        const double m = static_cast<double>(hi - lo);
        double sx = 0, sy = 0, sxx = 0, sxy = 0;
        for (std::size_t k = lo; k < hi; ++k) {
            sx += x[k];
            sy += yy[k];
            sxx += x[k] * x[k];
            sxy += x[k] * yy[k];
        }
        double den = m * sxx - sx * sx;
        if (!(std::abs(den) > 0.0)) throw NumericalError("fit_decay: degenerate window");
        slope = (m * sxy - sx * sy) / den;
        icpt = (sy - slope * sx) / m;
        double ss = 0.0;
        maxdev = 0.0;
        for (std::size_t k = lo; k < hi; ++k) {
            double r = yy[k] - (icpt + slope * x[k]);
            ss += r * r;
            maxdev = std::max(maxdev, std::abs(r));
        }
        rms = std::sqrt(ss / m);
    };
    DecayFit f;
    f.t1 = t1;
    f.t2 = t2;
    f.points = n;
    double md = 0.0;
    line(lx, ly, 0, n, f.exponent, f.intercept, f.residual, f.max_deviation);
    double rate_slope, rate_icpt;
    line(lt, ly, 0, n, rate_slope, rate_icpt, f.rate_residual, md);
    f.rate = -rate_slope;
    // Half windows split at the geometric middle.
    const double tm = std::sqrt(std::max(t1, 1e-300) * t2);
    std::size_t mid = 0;
    while (mid < lt.size() && lt[mid] < tm) ++mid;
    double i0, r0, m0;
    if (mid >= 2 && n - mid >= 2) {
        line(lx, ly, 0, mid, f.early_exponent, i0, r0, m0);
        line(lx, ly, mid, n, f.late_exponent, i0, r0, m0);
    } else {
        f.early_exponent = f.late_exponent = f.exponent;
    }
    f.superpolynomial = f.late_exponent < f.early_exponent - 0.25 && f.rate_residual < f.residual && f.rate > 0.0;
    return f;
}

}  // namespace

DecayFit fit_decay(const std::vector<double>& t, const std::vector<double>& y, double t1, double t2) {
    if (!(t1 > 0.0) || t2 < 10.0 * t1 * (1.0 - 1e-12))
        throw PreconditionError("fit_decay: window must satisfy t1 > 0 and span at least a decade");
    return fit_window(t, y, t1, t2);
}

DecayFit fit_exponential(const std::vector<double>& t, const std::vector<double>& y, double t1, double t2) {
    if (!(t2 > t1 && t1 >= 0.0)) throw PreconditionError("fit_exponential: empty window");
    return fit_window(t, y, t1, t2);
}

double outer_peak_radius(const std::vector<double>& R, const std::vector<double>& profile) {
    if (R.size() != profile.size() || R.size() < 3) throw PreconditionError("outer_peak_radius: bad profile");
    double top = *std::max_element(profile.begin(), profile.end());
    for (std::size_t k = profile.size() - 2; k >= 1; --k) {
        if (profile[k] >= profile[k - 1] && profile[k] > profile[k + 1] && profile[k] >= 0.1 * top)
            return refine_max(R, profile, k).first;
    }
    return 0.0;
}

}  // namespace kinetic
