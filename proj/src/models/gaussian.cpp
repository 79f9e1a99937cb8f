#include "dsm/errors.hpp"
#include "dsm/models.hpp"

#include <cmath>
#include <limits>

namespace dsm {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
const double kTwoPi = 2.0 * std::acos(-1.0);

ChartSpec mu_sigma_chart() {
    ChartSpec c;
    c.id = "mu-sigma";
    c.names = {"mu", "sigma"};
    c.lo = Eigen::Vector2d(-kInf, 0.0);
    c.hi = Eigen::Vector2d(kInf, kInf);
    c.region_lo = Eigen::Vector2d(-1.0, 0.5);
    c.region_hi = Eigen::Vector2d(1.0, 3.0);
    return c;
}

double maxent_entropy(double var) { return 0.5 * std::log(kTwoPi * std::exp(1.0) * var); }

// Data set with E[x] = m1 and E[(x-mu)^2] = v2 about the reference mu.
DataSet moment_probe(double mu, double m1, double v2) {
    const double second = v2 + 2.0 * mu * m1 - mu * mu;
    const double var = second - m1 * m1;
    return DataSet::moments({{stat::mean, m1}, {stat::second_moment, second}, {stat::entropy, maxent_entropy(var)}});
}

std::vector<DataSet> gaussian_fibre(const Vec& t, int k) {
    const double mu = t(0), s = t(1);
    std::vector<DataSet> out;
    for (int j = 0; j < k; ++j) {
        if (j == 0) out.push_back(DataSet::analytic(Gaussian{mu, s}));
        else if (j == 1) out.push_back(DataSet::analytic(TwoPoint{mu - s, mu + s}));
        else if (j == 2) out.push_back(DataSet::analytic(Uniform{mu - std::sqrt(3.0) * s, mu + std::sqrt(3.0) * s}));
        else {
            const double r = j - 1.0;
            const double w = 1.0 / (2.0 * r * r);
            out.push_back(DataSet::empirical({mu - r * s, mu, mu + r * s}, {w, 1.0 - 2.0 * w, w}));
        }
    }
    return out;
}

std::vector<ProbeFamily> gaussian_probes() {
    return {
        {"single-condition",
         [](const Vec& t, int c, double e) {
             const double mu = t(0), s = t(1);
             return c == 0 ? moment_probe(mu, mu + e * s, s * s) : moment_probe(mu, mu, s * s * (1 + e) * (1 + e));
         }},
        {"mixed",
         [](const Vec& t, int c, double e) {
             const double mu = t(0), s = t(1);
             return c == 0 ? moment_probe(mu, mu + e * s, s * s * (1 + e))
                           : moment_probe(mu, mu - e * s, s * s * (1 + 2 * e));
         }},
    };
}

std::optional<Vec> moment_fit(const DataSet& x) {
    try {
        const double m1 = x.expectation(stat::mean);
        const double var = x.expectation(stat::second_moment) - m1 * m1;
        if (!(var > 0)) return std::nullopt;
        return Vec(Eigen::Vector2d(m1, std::sqrt(var)));
    } catch (const MissingStatistic&) {
        return std::nullopt;
    }
}

DataSet random_scalar_data(std::mt19937_64& rng) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    const double a = -1.0 + 2.0 * u(rng), b = 0.5 + 1.5 * u(rng);
    switch (static_cast<int>(u(rng) * 4.0)) {
    case 0: return DataSet::analytic(Gaussian{a, b});
    case 1: return DataSet::analytic(Uniform{a - b, a + b});
    case 2: return DataSet::analytic(Exponential{b});
    default: return DataSet::analytic(Gumbel{b, a});
    }
}

} // namespace

ModelDefinition gaussian_kl() {
    ModelDefinition m;
    m.name = "gaussian-kl";
    m.chart = mu_sigma_chart();
    m.statistics = {{stat::mean}, {stat::second_moment}, {stat::entropy}};
    m.kind = DivergenceKind::KL;
    struct Moments {
        double c1, c2, s;
    };
    auto read = [](const DataSet& x, const Vec& t) {
        const double mu = t(0);
        const double m1 = x.expectation(stat::mean), m2 = x.expectation(stat::second_moment);
        return Moments{m1 - mu, m2 - 2.0 * mu * m1 + mu * mu, t(1)};
    };
    m.divergence = [read](const DataSet& x, const Vec& t) {
        const Moments q = read(x, t);
        return -x.expectation(stat::entropy) + 0.5 * std::log(kTwoPi * q.s * q.s) + q.c2 / (2.0 * q.s * q.s);
    };
    m.gradient = [read](const DataSet& x, const Vec& t) -> Vec {
        const Moments q = read(x, t);
        const double s2 = q.s * q.s;
        return Eigen::Vector2d(-q.c1 / s2, 1.0 / q.s - q.c2 / (s2 * q.s));
    };
    m.hessian = [read](const DataSet& x, const Vec& t) -> Mat {
        const Moments q = read(x, t);
        const double s2 = q.s * q.s;
        Mat h(2, 2);
        h << 1.0 / s2, 2.0 * q.c1 / (s2 * q.s), 2.0 * q.c1 / (s2 * q.s), -1.0 / s2 + 3.0 * q.c2 / (s2 * s2);
        return h;
    };
    m.fibre_sampler = gaussian_fibre;
    m.probes = gaussian_probes();
    m.closed_form_fit = moment_fit;
    m.random_data = random_scalar_data;
    m.oracle.metric = [](const Vec& t) -> Mat {
        const double s2 = t(1) * t(1);
        return Eigen::Vector2d(1.0 / s2, 2.0 / s2).asDiagonal();
    };
    m.oracle.connection = [](const Vec& t) {
        Tensor3 w(2);
        w(0, 0, 1) = w(0, 1, 0) = -2.0 / t(1);
        w(1, 1, 1) = -3.0 / t(1);
        return w;
    };
    m.oracle.affine = [](const Vec& t) -> Vec {
        const double s2 = t(1) * t(1);
        return Eigen::Vector2d(1.0 / (2.0 * s2), -t(0) / s2);
    };
    m.oracle.massieu = [](const Vec& t) {
        const double s2 = t(1) * t(1);
        return t(0) * t(0) / (2.0 * s2) + 0.5 * std::log(kTwoPi * s2);
    };
    return m;
}

ModelDefinition gaussian_sumsq(double mu0, double sigma0) {
    if (!(mu0 > 0) || !(sigma0 > 0)) throw ConfigError("gaussian-sumsq needs mu0 > 0 and sigma0 > 0");
    ModelDefinition m;
    m.name = "gaussian-sumsq";
    m.chart = mu_sigma_chart();
    m.statistics = {{stat::mean}, {stat::second_moment}};
    m.kind = DivergenceKind::Other;
    const double a2 = mu0 * mu0, s4 = sigma0 * sigma0 * sigma0 * sigma0;
    auto resid = [](const DataSet& x, const Vec& t) {
        return Eigen::Vector2d(t(0) - x.expectation(stat::mean),
                               t(0) * t(0) + t(1) * t(1) - x.expectation(stat::second_moment));
    };
    m.divergence = [=](const DataSet& x, const Vec& t) {
        const Eigen::Vector2d r = resid(x, t);
        return r(0) * r(0) / (2.0 * a2) + r(1) * r(1) / (4.0 * s4);
    };
    m.gradient = [=](const DataSet& x, const Vec& t) -> Vec {
        const Eigen::Vector2d r = resid(x, t);
        return Eigen::Vector2d(r(0) / a2 + t(0) * r(1) / s4, t(1) * r(1) / s4);
    };
    m.hessian = [=](const DataSet& x, const Vec& t) -> Mat {
        const Eigen::Vector2d r = resid(x, t);
        const double mu = t(0), s = t(1);
        Mat h(2, 2);
        h << 1.0 / a2 + (2.0 * mu * mu + r(1)) / s4, 2.0 * mu * s / s4, 2.0 * mu * s / s4, (2.0 * s * s + r(1)) / s4;
        return h;
    };
    m.fibre_sampler = gaussian_fibre;
    m.probes = gaussian_probes();
    m.closed_form_fit = moment_fit;
    m.random_data = random_scalar_data;
    m.oracle.metric = [=](const Vec& t) -> Mat {
        const double mu = t(0), s = t(1);
        Mat g(2, 2);
        g << 2.0 * mu * mu / s4 + 1.0 / a2, 2.0 * mu * s / s4, 2.0 * mu * s / s4, 2.0 * s * s / s4;
        return g;
    };
    m.oracle.connection = [](const Vec& t) {
        Tensor3 w(2);
        w(1, 0, 0) = w(1, 1, 1) = 1.0 / t(1);
        return w;
    };
    m.oracle.affine = [](const Vec& t) -> Vec { return Eigen::Vector2d(t(0), t(0) * t(0) + t(1) * t(1)); };
    m.oracle.massieu = [=](const Vec& t) {
        const double e1 = t(0), e2 = t(0) * t(0) + t(1) * t(1);
        return e1 * e1 / (2.0 * a2) + e2 * e2 / (4.0 * s4);
    };
    return m;
}

ChartMap gaussian_canonical_chart() {
    ChartMap c;
    c.target.id = "canonical";
    c.target.names = {"theta1", "theta2"};
    c.target.lo = Eigen::Vector2d(0.0, -kInf);
    c.target.hi = Eigen::Vector2d(kInf, kInf);
    c.target.region_lo = Eigen::Vector2d(0.05, -2.0);
    c.target.region_hi = Eigen::Vector2d(2.0, 2.0);
    c.forward = [](const Vec& t) -> Vec {
        const double s2 = t(1) * t(1);
        return Eigen::Vector2d(1.0 / (2.0 * s2), -t(0) / s2);
    };
    c.inverse = [](const Vec& z) -> Vec {
        return Eigen::Vector2d(-z(1) / (2.0 * z(0)), 1.0 / std::sqrt(2.0 * z(0)));
    };
    c.jacobian = [](const Vec& t) -> Mat {
        const double s = t(1);
        Mat j(2, 2);
        j << 0.0, -1.0 / (s * s * s), -1.0 / (s * s), 2.0 * t(0) / (s * s * s);
        return j;
    };
    c.inverse_jacobian = [](const Vec& z) -> Mat {
        Mat k(2, 2);
        k << z(1) / (2.0 * z(0) * z(0)), -1.0 / (2.0 * z(0)), -std::pow(2.0 * z(0), -1.5), 0.0;
        return k;
    };
    c.inverse_hessians = [](const Vec& z) {
        Mat mu(2, 2), sigma(2, 2);
        mu << -z(1) / (z(0) * z(0) * z(0)), 1.0 / (2.0 * z(0) * z(0)), 1.0 / (2.0 * z(0) * z(0)), 0.0;
        sigma << 3.0 * std::pow(2.0 * z(0), -2.5), 0.0, 0.0, 0.0;
        return std::vector<Mat>{mu, sigma};
    };
    return c;
}

} // namespace dsm
