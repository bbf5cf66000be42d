#include "kinetic/spectrum.hpp"

#include <complex>
#define lapack_complex_float std::complex<float>
#define lapack_complex_double std::complex<double>
#include <lapacke.h>

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <numeric>

#include "kinetic/errors.hpp"
#include "kinetic/parallel.hpp"

namespace kinetic {

namespace {

const cplx kI(0.0, 1.0);

double one_norm(const Eigen::MatrixXcd& M) { return M.cwiseAbs().colwise().sum().maxCoeff(); }

int slow_count(int sector) { return sector == 0 ? 3 : (sector == 1 ? 1 : 0); }

std::vector<int> order_by_real_desc(const Eigen::VectorXcd& v) {
    std::vector<int> idx(v.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::stable_sort(idx.begin(), idx.end(), [&](int a, int b) { return v(a).real() > v(b).real(); });
    return idx;
}

}  // namespace

WaveOperator assemble_wave_operator(const OperatorMatrix& L, double r) {
    if (!(r >= 0.0)) throw DomainError("assemble_wave_operator: r must be >= 0");
    if (L.kind != OperatorMatrix::Kind::L) throw PreconditionError("assemble_wave_operator: expected an L matrix");
    const VelocityGrid& g = *L.row_grid;
    WaveOperator op;
    op.r = r;
    op.sector = L.sector;
    op.grid = L.row_grid;
    op.sqrt_w = g.weights().cwiseSqrt();
    op.matrix = L.entries.cast<cplx>();
    for (int i = 0; i < g.size(); ++i) op.matrix(i, i) -= kI * r * g.xi3(i);
    Eigen::MatrixXcd S = op.sqrt_w.cast<cplx>().asDiagonal() * op.matrix *
                         op.sqrt_w.cwiseInverse().cast<cplx>().asDiagonal();
    op.sym = 0.5 * (S + S.transpose());
    return op;
}

WaveOperator assemble_wave_operator(const CollisionOperator& op, double r) {
    return assemble_wave_operator(op.as_L(), r);
}

EigenSystem eigensystem(const WaveOperator& op) {
    const int n = static_cast<int>(op.sym.rows());
    EigenSystem es;
    if (op.r == 0.0) {
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> sa(op.sym.real());
        if (sa.info() != Eigen::Success) throw NumericalError("eigensystem: symmetric solve failed");
        es.values = sa.eigenvalues().cast<cplx>();
        es.V = sa.eigenvectors().cast<cplx>();
        es.Vinv = es.V.transpose();
        es.condition = 1.0;
        es.inverse_residual = (es.V * es.Vinv - Eigen::MatrixXcd::Identity(n, n)).norm();
        return es;
    }
    Eigen::MatrixXcd A = op.sym;  // column major, overwritten
    Eigen::VectorXcd w(n);
    Eigen::MatrixXcd vr(n, n);
    cplx dummy;
    lapack_int info = LAPACKE_zgeev(LAPACK_COL_MAJOR, 'N', 'V', n, A.data(), n, w.data(), &dummy, 1,
                                    vr.data(), n);
    if (info != 0) throw NumericalError("eigensystem: zgeev failed with info " + std::to_string(info));
    for (int k = 0; k < n; ++k) {
        cplx nrm = std::sqrt(cplx((vr.col(k).transpose() * vr.col(k))(0, 0)));
        if (std::abs(nrm) < 1e-10 * vr.col(k).norm())
            throw NumericalError("eigensystem: bilinear normalization of an eigenvector failed");
        vr.col(k) /= nrm;
    }
    es.values = w;
    es.V = vr;
    es.Vinv = vr.partialPivLu().inverse();
    es.condition = one_norm(es.V) * one_norm(es.Vinv);
    es.inverse_residual = (es.V * es.Vinv - Eigen::MatrixXcd::Identity(n, n)).norm();
    return es;
}

std::vector<EigenPair> eigen_near_zero(const WaveOperator& op, int count,
                                       const EigenSystem* precomputed) {
    if (count < 0 || count > op.sym.rows()) throw PreconditionError("eigen_near_zero: bad count");
    EigenSystem local;
    if (!precomputed) local = eigensystem(op);
    const EigenSystem& es = precomputed ? *precomputed : local;
    auto idx = order_by_real_desc(es.values);
    std::vector<EigenPair> out;
    for (int k = 0; k < count; ++k) {
        EigenPair p;
        p.index = idx[k];
        p.value = es.values(idx[k]);
        p.vec = op.sqrt_w.cwiseInverse().cast<cplx>().asDiagonal() * es.V.col(idx[k]);
        p.left = op.sqrt_w.cast<cplx>().asDiagonal() * es.Vinv.row(idx[k]).transpose();
        out.push_back(std::move(p));
    }
    std::stable_sort(out.begin(), out.end(), [](const EigenPair& a, const EigenPair& b) {
        return std::abs(a.value.real()) < std::abs(b.value.real());
    });
    return out;
}

std::vector<int> branch_labels(int sector) {
    if (sector == 0) return {0, 1, 2};
    if (sector == 1) return {3};
    return {};
}

std::vector<EigenPair> label_slow_branches(const WaveOperator& op, const std::vector<EigenPair>& slow) {
    if (static_cast<int>(slow.size()) != slow_count(op.sector))
        throw PreconditionError("label_slow_branches: wrong number of slow eigenpairs");
    std::vector<EigenPair> out = slow;
    if (op.sector == 0) {
        std::stable_sort(out.begin(), out.end(),
                         [](const EigenPair& a, const EigenPair& b) { return a.value.imag() < b.value.imag(); });
        // (most negative Im, middle, most positive Im) -> (0, 2, 1)
        std::swap(out[1], out[2]);
    }
    return out;
}

namespace {

double nodal_overlap(const Eigen::VectorXcd& a, const Eigen::VectorXcd& b, const Eigen::VectorXd& w) {
    cplx ip = (a.conjugate().array() * w.array().cast<cplx>() * b.array()).sum();
    double na = std::sqrt((a.cwiseAbs2().array() * w.array()).sum());
    double nb = std::sqrt((b.cwiseAbs2().array() * w.array()).sum());
    return std::abs(ip) / (na * nb);
}

}  // namespace

std::vector<BranchSample> track_branches(const CollisionOperator& op, const std::vector<double>& rs,
                                         int jobs) {
    const int sector = op.grid->azimuthal_sector;
    const int nslow = slow_count(sector);
    if (nslow == 0) throw PreconditionError("track_branches: sector carries no slow branches");
    for (std::size_t k = 0; k < rs.size(); ++k)
        if (rs[k] <= 0.0 || (k && rs[k] <= rs[k - 1]))
            throw PreconditionError("track_branches: r values must be positive and increasing");
    std::vector<std::vector<EigenPair>> pairs(rs.size());
    parallel_for(rs.size(), jobs, [&](std::size_t k) {
        WaveOperator w = assemble_wave_operator(op, rs[k]);
        pairs[k] = label_slow_branches(w, eigen_near_zero(w, nslow));
    });
    const Eigen::VectorXd w = op.grid->weights();
    std::vector<BranchSample> out;
    for (std::size_t k = 0; k < rs.size(); ++k) {
        BranchSample s;
        s.r = rs[k];
        if (k > 0) {
            // Maximal-overlap assignment against the previous sample.
            std::vector<int> perm(nslow);
            std::iota(perm.begin(), perm.end(), 0);
            double best_score = -1.0;
            std::vector<int> best = perm;
            do {
                double score = 0.0;
                for (int j = 0; j < nslow; ++j)
                    score += nodal_overlap(pairs[k][perm[j]].vec, pairs[k - 1][j].vec, w);
                if (score > best_score) {
                    best_score = score;
                    best = perm;
                }
            } while (std::next_permutation(perm.begin(), perm.end()));
            std::vector<EigenPair> re(nslow);
            for (int j = 0; j < nslow; ++j) re[j] = pairs[k][best[j]];
            pairs[k] = re;
            for (int j = 0; j < nslow; ++j) {
                double ov = nodal_overlap(pairs[k][j].vec, pairs[k - 1][j].vec, w);
                if (ov < 0.7)
                    throw TrackingError("track_branches: branch " + std::to_string(branch_labels(sector)[j]) +
                                        " lost between r=" + std::to_string(rs[k - 1]) + " and r=" +
                                        std::to_string(rs[k]) + " (overlap " + std::to_string(ov) + ")");
                s.overlap.push_back(ov);
            }
        } else {
            s.overlap.assign(nslow, 1.0);
        }
        for (int j = 0; j < nslow; ++j) s.values.push_back(pairs[k][j].value);
        out.push_back(std::move(s));
    }
    return out;
}

BranchFit fit_branch(int branch, const std::vector<double>& r, const std::vector<cplx>& lambda) {
    const int n = static_cast<int>(r.size());
    if (n < 6) throw PreconditionError("fit_branch: at least 6 samples required");
    Eigen::MatrixXd X(n, 2);
    Eigen::VectorXd yi(n), yr(n);
    for (int k = 0; k < n; ++k) {
        X(k, 0) = 1.0;
        X(k, 1) = r[k] * r[k];
        yi(k) = lambda[k].imag() / r[k];
        yr(k) = lambda[k].real() / (r[k] * r[k]);
    }
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(X);
    if (qr.rank() < 2) throw NumericalError("fit_branch: ill-conditioned fit");
    Eigen::Vector2d ci = qr.solve(yi), cr = qr.solve(yr);
    BranchFit f;
    f.branch = branch;
    f.a = -ci(0);
    f.A = -cr(0);
    double res = 0.0;
    for (int k = 0; k < n; ++k) {
        cplx model(cr(0) * r[k] * r[k] + cr(1) * std::pow(r[k], 4), ci(0) * r[k] + ci(1) * std::pow(r[k], 3));
        res += std::norm(lambda[k] - model);
    }
    f.fit_residual = std::sqrt(res / n);
    f.r_lo = *std::min_element(r.begin(), r.end());
    f.r_hi = *std::max_element(r.begin(), r.end());
    return f;
}

std::vector<BranchFit> fit_dispersion(const std::vector<BranchSample>& samples, const std::vector<int>& labels) {
    std::vector<BranchFit> out;
    if (samples.empty()) return out;
    std::vector<double> r;
    for (const auto& s : samples) r.push_back(s.r);
    for (std::size_t j = 0; j < labels.size(); ++j) {
        std::vector<cplx> lam;
        for (const auto& s : samples) lam.push_back(s.values.at(j));
        out.push_back(fit_branch(labels[j], r, lam));
    }
    return out;
}

GridFunction leading_eigenfunction(const GridPtr& grid, int j) {
    const double s310 = std::sqrt(0.3), s12 = std::sqrt(0.5), s15 = std::sqrt(0.2);
    auto combo = [&](double c0, double c3, double c4) {
        GridFunction out(grid, c0 * chi(grid, 0).values + c3 * chi(grid, 3).values + c4 * chi(grid, 4).values);
        return out;
    };
    switch (j) {
        case 0: return combo(s310, s12, s15);
        case 1: return combo(s310, -s12, s15);
        case 2: return combo(-std::sqrt(0.4), 0.0, std::sqrt(0.6));
        case 3: return chi(grid, 1);
        case 4: return chi(grid, 2);
        default: throw PreconditionError("leading_eigenfunction: j must be in 0..4");
    }
}

double overlap(const Eigen::VectorXcd& e, const GridFunction& E) {
    return nodal_overlap(e, E.values, E.grid->weights());
}

Eigen::MatrixXcd spectral_projector(const EigenPair& p) {
    cplx denom = (p.left.array() * p.vec.array()).sum();
    if (std::abs(denom) < 1e-8) throw NumericalError("spectral_projector: degenerate normalization");
    return p.vec * p.left.transpose() / denom;
}

GapScan choose_delta(const CollisionOperator& op, const std::vector<double>& rs, int jobs) {
    const int sector = op.grid->azimuthal_sector;
    const int nslow = slow_count(sector);
    GapScan scan;
    {
        WaveOperator w0 = assemble_wave_operator(op, 0.0);
        EigenSystem es = eigensystem(w0);
        auto idx = order_by_real_desc(es.values);
        scan.gap0 = -es.values(idx[nslow]).real();
    }
    scan.r = rs;
    scan.separation.assign(rs.size(), 0.0);
    parallel_for(rs.size(), jobs, [&](std::size_t k) {
        WaveOperator w = assemble_wave_operator(op, rs[k]);
        EigenSystem es = eigensystem(w);
        auto idx = order_by_real_desc(es.values);
        scan.separation[k] = es.values(idx[nslow - 1]).real() - es.values(idx[nslow]).real();
    });
    scan.r_sep = 0.0;
    for (std::size_t k = 0; k < rs.size(); ++k) {
        if (scan.separation[k] < 0.5 * scan.gap0) break;
        scan.r_sep = rs[k];
    }
    scan.delta = 0.5 * scan.r_sep;
    return scan;
}

ScalingPrediction predict_scaled(const MaxwellianParams& b, double gamma, double a_ref, double A_ref) {
    return {b.mu_axial() + std::sqrt(b.lam) * a_ref, std::pow(b.lam, 1.0 - 0.5 * gamma) * A_ref / b.rho};
}

double scaled_wavenumber(const MaxwellianParams& b, double gamma, double r) {
    return r * std::sqrt(b.lam) / (b.rho * std::pow(b.lam, 0.5 * gamma));
}

cplx predict_scaled_eigenvalue(const MaxwellianParams& b, double gamma, double r, cplx lambda_ref) {
    return -kI * b.mu_axial() * r + b.rho * std::pow(b.lam, 0.5 * gamma) * lambda_ref;
}

}  // namespace kinetic
