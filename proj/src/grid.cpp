#include "kinetic/grid.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <cmath>
#include <numbers>
#include <sstream>

#include "kinetic/errors.hpp"

namespace kinetic {

namespace {

constexpr double kPi = std::numbers::pi;

GridPtr make_grid(int n_speed, int n_cosine, double s_max, int sector, double mu,
                  double lam) {
    if (n_speed < 4 || n_cosine < 4)
        throw ConfigError("build_grid: n_speed and n_cosine must be >= 4",
                          n_speed < 4 ? "n_speed" : "n_cosine");
    if (!(s_max >= 6.0)) throw ConfigError("build_grid: s_max must be >= 6", "s_max");
    if (sector < 0) throw ConfigError("build_grid: sector must be >= 0", "sectors");
    if (!(lam > 0.0)) throw DomainError("build_grid: temperature must be positive");

    auto g = std::make_shared<VelocityGrid>();
    g->azimuthal_sector = sector;
    g->cutoff_speed = s_max;
    g->center = mu;
    g->lam = lam;

    const double scale = std::sqrt(lam);
    Rule radial = gauss_maxwell_radial(n_speed, s_max, 1.0);
    for (int a = 0; a < n_speed; ++a) {
        double s = radial.nodes[a];
        g->speed_nodes.push_back(scale * s);
        g->speed_gauss_weights.push_back(radial.weights[a] * scale * scale * scale);
        g->speed_weights.push_back(radial.weights[a] * std::exp(0.5 * s * s) * scale * scale *
                                   scale);
    }

    Rule cosine = sector == 0 ? gauss_legendre(n_cosine)
                              : gauss_jacobi(n_cosine, sector, sector);
    for (int b = 0; b < n_cosine; ++b) {
        double c = cosine.nodes[b];
        double w = cosine.weights[b];
        if (sector > 0) w /= std::pow(1.0 - c * c, sector);
        g->cosine_nodes.push_back(c);
        g->cosine_weights.push_back(w);
    }
    return g;
}

}  // namespace

double VelocityGrid::azimuthal_factor() const {
    return azimuthal_sector == 0 ? 2.0 * kPi : kPi;
}

double VelocityGrid::weight(int i) const {
    return speed_weights[i / n_cosine()] * cosine_weights[i % n_cosine()] * azimuthal_factor();
}

Eigen::VectorXd VelocityGrid::weights() const {
    Eigen::VectorXd w(size());
    for (int i = 0; i < size(); ++i) w(i) = weight(i);
    return w;
}

double VelocityGrid::abs_xi(int i) const {
    auto v = velocity(i);
    return std::sqrt(v[0] * v[0] + v[1] * v[1] + v[2] * v[2]);
}

std::array<double, 3> VelocityGrid::velocity(int i, double phi) const {
    double s = speed(i), c = cosine(i);
    double st = s * std::sqrt(std::max(0.0, 1.0 - c * c));
    return {st * std::cos(phi), st * std::sin(phi), center + s * c};
}

std::string VelocityGrid::spec_text() const {
    std::ostringstream os;
    os.precision(17);
    os << "n_speed=" << n_speed() << ";n_cosine=" << n_cosine() << ";s_max=" << cutoff_speed
       << ";sector=" << azimuthal_sector << ";center=" << center << ";lam=" << lam;
    return os.str();
}

bool VelocityGrid::same_layout(const VelocityGrid& o) const {
    return n_speed() == o.n_speed() && n_cosine() == o.n_cosine() &&
           azimuthal_sector == o.azimuthal_sector && cutoff_speed == o.cutoff_speed &&
           center == o.center && lam == o.lam;
}

GridPtr build_grid(int n_speed, int n_cosine, double s_max, int sector) {
    return make_grid(n_speed, n_cosine, s_max, sector, 0.0, 1.0);
}

GridPtr build_background_grid(int n_speed, int n_cosine, double s_max, int sector,
                              double mu, double lam) {
    return make_grid(n_speed, n_cosine, s_max, sector, mu, lam);
}

GridPtr with_sector(const VelocityGrid& g, int sector) {
    return make_grid(g.n_speed(), g.n_cosine(), g.cutoff_speed, sector, g.center, g.lam);
}

GridFunction::GridFunction(GridPtr g, Eigen::VectorXcd v, Parity p)
    : grid(std::move(g)), values(std::move(v)), parity(p) {
    if (values.size() != grid->size())
        throw PreconditionError("GridFunction: value count does not match grid size");
    if (grid->azimuthal_sector == 0) parity = Parity::Cos;
}

void WeightSpec::validate() const {
    if (!(kappa0 >= 0.0 && kappa0 < 0.125))
        throw ConfigError("weight: kappa0 must satisfy 0 <= kappa0 < 1/8", "kappa0");
    if (!(beta >= 0.0)) throw ConfigError("weight: beta must be >= 0", "beta");
}

double WeightSpec::exponential(const VelocityGrid& g, int i) const {
    auto v = g.velocity(i);
    double r2 = v[0] * v[0] + v[1] * v[1] + v[2] * v[2];
    return std::exp(kappa0 * r2 + kappa[0] * v[0] + kappa[1] * v[1] + kappa[2] * v[2] + kappa4);
}

namespace {

void require_compatible(const GridFunction& f, const GridFunction& g) {
    if (f.grid != g.grid && !f.grid->same_layout(*g.grid))
        throw PreconditionError("inner: functions live on different grids");
}

}  // namespace

cplx inner(const GridFunction& f, const GridFunction& g) {
    require_compatible(f, g);
    if (f.parity != g.parity) return {0.0, 0.0};
    const VelocityGrid& G = *f.grid;
    cplx s = 0.0;
    for (int i = 0; i < G.size(); ++i) s += G.weight(i) * f.values(i) * std::conj(g.values(i));
    return s;
}

double norm(const GridFunction& f, const NormKind& which) {
    const VelocityGrid& G = *f.grid;
    switch (which.kind) {
        case NormKind::L2:
            return std::sqrt(std::max(0.0, inner(f, f).real()));
        case NormKind::Lsigma: {
            double s = 0.0;
            for (int i = 0; i < G.size(); ++i)
                s += G.weight(i) * std::pow(bracket(G.abs_xi(i)), which.gamma) *
                     std::norm(f.values(i));
            return std::sqrt(s);
        }
        case NormKind::LinfBeta: {
            double m = 0.0;
            for (int i = 0; i < G.size(); ++i)
                m = std::max(m, std::pow(bracket(G.abs_xi(i)), which.beta) * std::abs(f.values(i)));
            return m;
        }
        case NormKind::LinfWeighted: {
            which.weight.validate();
            double m = 0.0;
            for (int i = 0; i < G.size(); ++i)
                m = std::max(m, which.weight.exponential(G, i) *
                                    std::pow(bracket(G.abs_xi(i)), which.beta) *
                                    std::abs(f.values(i)));
            return m;
        }
    }
    return 0.0;
}

namespace {

double sqrt_maxwell_frame(double s, double lam) {
    return std::pow(2.0 * kPi * lam, -0.75) * std::exp(-s * s / (4.0 * lam));
}

}  // namespace

GridFunction chi(const GridPtr& g, int index) {
    const double lam = g->lam;
    const int m = g->azimuthal_sector;
    auto need = [&](int sector) {
        if (m != sector)
            throw PreconditionError("chi: invariant " + std::to_string(index) +
                                    " lives in sector " + std::to_string(sector));
    };
    switch (index) {
        case 0:
            need(0);
            return sample(g, [&](double s, double) { return sqrt_maxwell_frame(s, lam); });
        case 1:
        case 2:
            need(1);
            return sample(
                g,
                [&](double s, double c) {
                    return s * std::sqrt(1.0 - c * c) / std::sqrt(lam) * sqrt_maxwell_frame(s, lam);
                },
                index == 1 ? Parity::Cos : Parity::Sin);
        case 3:
            need(0);
            return sample(g, [&](double s, double c) {
                return s * c / std::sqrt(lam) * sqrt_maxwell_frame(s, lam);
            });
        case 4:
            need(0);
            return sample(g, [&](double s, double) {
                return (s * s / lam - 3.0) / std::sqrt(6.0) * sqrt_maxwell_frame(s, lam);
            });
        default:
            throw PreconditionError("chi: index must be in 0..4");
    }
}

std::vector<GridFunction> chi_basis(const GridPtr& g, Parity p) {
    std::vector<GridFunction> raw;
    if (g->azimuthal_sector == 0) {
        raw = {chi(g, 0), chi(g, 3), chi(g, 4)};
    } else if (g->azimuthal_sector == 1) {
        raw = {chi(g, p == Parity::Cos ? 1 : 2)};
    }
    // Gram–Schmidt in the quadrature inner product (removes truncation-level
    // non-orthogonality so projectors are exact on the grid).
    std::vector<GridFunction> out;
    for (auto f : raw) {
        for (int pass = 0; pass < 2; ++pass)
            for (const auto& q : out) f.values -= inner(f, q) * q.values;
        f.values /= norm(f, NormKind::l2());
        out.push_back(std::move(f));
    }
    return out;
}

std::string GridSpec::to_text() const {
    std::ostringstream os;
    os.precision(17);
    os << "n_speed = " << n_speed << "\n"
       << "n_cosine = " << n_cosine << "\n"
       << "s_max = " << s_max << "\n"
       << "sectors = ";
    for (std::size_t k = 0; k < sectors.size(); ++k) os << (k ? "," : "") << sectors[k];
    os << "\n";
    return os.str();
}

GridSpec GridSpec::from_text(const std::string& text) {
    namespace pt = boost::property_tree;
    pt::ptree tree;
    std::istringstream is(text);
    try {
        pt::read_ini(is, tree);
    } catch (const pt::ini_parser_error& e) {
        throw ConfigError(std::string("grid block: ") + e.what());
    }
    GridSpec spec;
    for (const auto& [key, node] : tree) {
        const std::string v = node.get_value<std::string>();
        try {
            if (key == "n_speed") spec.n_speed = std::stoi(v);
            else if (key == "n_cosine") spec.n_cosine = std::stoi(v);
            else if (key == "s_max") spec.s_max = std::stod(v);
            else if (key == "sectors") {
                spec.sectors.clear();
                std::stringstream ss(v);
                std::string item;
                while (std::getline(ss, item, ',')) spec.sectors.push_back(std::stoi(item));
            } else {
                throw ConfigError("grid block: unknown key '" + key + "'", key);
            }
        } catch (const std::logic_error&) {
            throw ConfigError("grid block: malformed value for '" + key + "'", key);
        }
    }
    if (spec.n_speed < 4) throw ConfigError("grid block: n_speed must be >= 4", "n_speed");
    if (spec.n_cosine < 4) throw ConfigError("grid block: n_cosine must be >= 4", "n_cosine");
    if (!(spec.s_max >= 6.0)) throw ConfigError("grid block: s_max must be >= 6", "s_max");
    return spec;
}

}  // namespace kinetic
