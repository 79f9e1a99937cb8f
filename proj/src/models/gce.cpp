#include "dsm/errors.hpp"
#include "dsm/models.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace dsm {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

struct LevelTerms {
    double lnz = 0, nbar = 0, e_nbar = 0;  // sum nbar, sum (eps - mu) nbar
    double q = 0, eq = 0, e2q = 0;         // sum q, sum (eps - mu) q, sum (eps - mu)^2 q
};

LevelTerms terms(const std::vector<double>& levels, double beta, double mu) {
    LevelTerms t;
    for (double e : levels) {
        const double d = e - mu;
        const double x = beta * d;
        const double nb = 1.0 / std::expm1(x);
        const double q = nb * (1.0 + nb);
        t.lnz -= std::log1p(-std::exp(-x));
        t.nbar += nb;
        t.e_nbar += d * nb;
        t.q += q;
        t.eq += d * q;
        t.e2q += d * d * q;
    }
    return t;
}

ChartSpec gce_chart(const std::vector<double>& levels) {
    const double emin = *std::min_element(levels.begin(), levels.end());
    ChartSpec c;
    c.id = "beta-mu";
    c.names = {"beta", "mu"};
    c.lo = Eigen::Vector2d(0.0, -kInf);
    c.hi = Eigen::Vector2d(kInf, emin);
    c.region_lo = Eigen::Vector2d(0.5, emin - 3.0);
    c.region_hi = Eigen::Vector2d(3.0, emin - 0.25);
    return c;
}

// Direction in occupation space that leaves both totals unchanged.
Vec null_direction(const std::vector<double>& levels) {
    const int J = static_cast<int>(levels.size());
    if (J < 3) return Vec::Zero(J);
    Mat A(2, J);
    for (int j = 0; j < J; ++j) {
        A(0, j) = 1.0;
        A(1, j) = levels[j];
    }
    Eigen::FullPivLU<Mat> lu(A);
    Vec z = lu.kernel().col(0);
    return z / z.cwiseAbs().maxCoeff();
}

DataSet totals(double n, double e) {
    return DataSet::moments({{stat::occupation_total, n}, {stat::energy_total, e}});
}

} // namespace

std::vector<double> gce_mean_occupations(const std::vector<double>& levels, double beta, double mu) {
    std::vector<double> n;
    for (double e : levels) n.push_back(1.0 / std::expm1(beta * (e - mu)));
    return n;
}

DataSet gce_occupations(const std::vector<double>& levels, const std::vector<double>& n) {
    if (n.size() != levels.size()) throw DomainError("need one occupation number per level");
    std::map<std::string, double> v;
    double N = 0, E = 0;
    for (size_t j = 0; j < n.size(); ++j) {
        if (n[j] < 0) throw DomainError("occupation numbers must be non-negative");
        N += n[j];
        E += n[j] * levels[j];
        v["n" + std::to_string(j + 1)] = n[j];
    }
    v[stat::occupation_total] = N;
    v[stat::energy_total] = E;
    return DataSet::moments(std::move(v));
}

ModelDefinition grand_canonical(std::vector<double> levels) {
    if (levels.empty()) throw ConfigError("gce needs at least one energy level");
    ModelDefinition m;
    m.name = "gce";
    m.chart = gce_chart(levels);
    m.statistics = {{stat::occupation_total}, {stat::energy_total}};
    m.kind = DivergenceKind::KL;
    m.divergence = [levels](const DataSet& x, const Vec& t) {
        const double N = x.expectation(stat::occupation_total), E = x.expectation(stat::energy_total);
        return terms(levels, t(0), t(1)).lnz + t(0) * (E - t(1) * N);
    };
    m.gradient = [levels](const DataSet& x, const Vec& t) -> Vec {
        const double N = x.expectation(stat::occupation_total), E = x.expectation(stat::energy_total);
        const LevelTerms s = terms(levels, t(0), t(1));
        return Eigen::Vector2d(-s.e_nbar + E - t(1) * N, t(0) * (s.nbar - N));
    };
    m.hessian = [levels](const DataSet& x, const Vec& t) -> Mat {
        const double N = x.expectation(stat::occupation_total);
        const double b = t(0);
        const LevelTerms s = terms(levels, b, t(1));
        Mat h(2, 2);
        const double off = s.nbar - N - b * s.eq;
        h << s.e2q, off, off, b * b * s.q;
        return h;
    };
    const Vec z = null_direction(levels);
    m.fibre_sampler = [levels, z](const Vec& t, int k) {
        const std::vector<double> nb = gce_mean_occupations(levels, t(0), t(1));
        const double room = 0.5 * *std::min_element(nb.begin(), nb.end());
        std::vector<DataSet> out;
        for (int i = 0; i < k; ++i) {
            const double amp = i == 0 ? 0.0 : ((i % 2) ? 1.0 : -1.0) * room / ((i + 1) / 2);
            std::vector<double> n = nb;
            for (size_t j = 0; j < n.size(); ++j) n[j] += amp * z(j);
            out.push_back(gce_occupations(levels, n));
        }
        return out;
    };
    auto base = [levels](const Vec& t) {
        const std::vector<double> nb = gce_mean_occupations(levels, t(0), t(1));
        double N = 0, E = 0;
        for (size_t j = 0; j < nb.size(); ++j) {
            N += nb[j];
            E += nb[j] * levels[j];
        }
        return std::pair{N, E};
    };
    m.probes = {
        {"single-condition",
         [base](const Vec& t, int c, double e) {
             const auto [N, E] = base(t);
             return c == 0 ? totals(N, E + e) : totals(N - e, E - t(1) * e);
         }},
        {"mixed",
         [base](const Vec& t, int c, double e) {
             const auto [N, E] = base(t);
             return c == 0 ? totals(N + e, E + 2 * e) : totals(N - e, E + e);
         }},
    };
    m.random_data = [levels](std::mt19937_64& rng) {
        std::uniform_real_distribution<double> u(0.0, 2.0);
        std::vector<double> n;
        for (size_t j = 0; j < levels.size(); ++j) n.push_back(u(rng));
        return gce_occupations(levels, n);
    };
    m.oracle.metric = [levels](const Vec& t) -> Mat {
        Mat g = Mat::Zero(2, 2);
        const double b = t(0), mu = t(1);
        for (double e : levels) {
            const double d = e - mu, ex = std::exp(b * d);
            const double w = ex / ((ex - 1) * (ex - 1));
            g(0, 0) += w * d * d;
            g(0, 1) += -w * b * d;
            g(1, 1) += w * b * b;
        }
        g(1, 0) = g(0, 1);
        return g;
    };
    m.oracle.connection = [](const Vec& t) {
        Tensor3 w(2);
        w(1, 0, 1) = w(1, 1, 0) = 1.0 / t(0);
        return w;
    };
    m.oracle.affine = [](const Vec& t) -> Vec { return Eigen::Vector2d(t(0), -t(0) * t(1)); };
    m.oracle.massieu = [levels](const Vec& t) { return terms(levels, t(0), t(1)).lnz; };
    return m;
}

ChartMap gce_canonical_chart(const std::vector<double>& levels) {
    const double emin = *std::min_element(levels.begin(), levels.end());
    ChartMap c;
    c.target.id = "canonical";
    c.target.names = {"theta1", "theta2"};
    c.target.lo = Eigen::Vector2d(0.0, -kInf);
    c.target.hi = Eigen::Vector2d(kInf, kInf);
    c.target.region_lo = Eigen::Vector2d(0.5, -1.0);
    c.target.region_hi = Eigen::Vector2d(3.0, 3.0);
    c.target.admissible = [emin](const Vec& z) { return -z(1) / z(0) < emin; };
    c.forward = [](const Vec& t) -> Vec { return Eigen::Vector2d(t(0), -t(0) * t(1)); };
    c.inverse = [](const Vec& z) -> Vec { return Eigen::Vector2d(z(0), -z(1) / z(0)); };
    c.jacobian = [](const Vec& t) -> Mat {
        Mat j(2, 2);
        j << 1.0, 0.0, -t(1), -t(0);
        return j;
    };
    c.inverse_jacobian = [](const Vec& z) -> Mat {
        Mat k(2, 2);
        k << 1.0, 0.0, z(1) / (z(0) * z(0)), -1.0 / z(0);
        return k;
    };
    c.inverse_hessians = [](const Vec& z) {
        Mat mu(2, 2);
        const double z0 = z(0);
        mu << -2.0 * z(1) / (z0 * z0 * z0), 1.0 / (z0 * z0), 1.0 / (z0 * z0), 0.0;
        return std::vector<Mat>{Mat::Zero(2, 2), mu};
    };
    return c;
}

Vec gce_geodesic_oracle(const Vec& theta0, const Vec& v0, double t) {
    const double A = v0(0), B = theta0(0);
    if (A == 0.0) return Eigen::Vector2d(B, theta0(1) + v0(1) * t);
    // mu' = C / (A t + B)^2 with C = mu'(0) B^2.
    const double mu = theta0(1) + v0(1) * B * B / A * (1.0 / B - 1.0 / (A * t + B));
    return Eigen::Vector2d(A * t + B, mu);
}

Vec gce_field_oracle(double mu0, double vb, const Vec& theta) {
    return Eigen::Vector2d(vb, (mu0 - theta(1)) / theta(0) * vb);
}

} // namespace dsm
