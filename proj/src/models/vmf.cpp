#include "dsm/errors.hpp"
#include "dsm/models.hpp"

#include <cmath>
#include <limits>

namespace dsm {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
const double kPi = std::acos(-1.0);

// ln of the vMF normaliser on the 2-sphere, ln(4 pi sinh k / k).
double sphere_phi(double k) { return std::log(4.0 * kPi) + k + std::log1p(-std::exp(-2.0 * k)) - std::log(2.0 * k); }

Eigen::Vector3d unit(double th, double ph) {
    return {std::sin(th) * std::cos(ph), std::sin(th) * std::sin(ph), std::cos(th)};
}

Eigen::Vector3d moments_of(const DataSet& x) {
    return {x.expectation(stat::x1), x.expectation(stat::x2), x.expectation(stat::x3)};
}

DataSet vector_data(const Eigen::Vector3d& m, double s) {
    return DataSet::moments({{stat::x1, m(0)}, {stat::x2, m(1)}, {stat::x3, m(2)}, {stat::entropy, s}});
}

const double kEntropyOffsets[] = {0.0, 0.5, 1.0, 1.5, 2.0};

} // namespace

ModelDefinition vmf_sphere(double kappa) {
    if (!(kappa > 0)) throw ConfigError("vmf-sphere needs kappa > 0");
    ModelDefinition m;
    m.name = "vmf-sphere";
    m.chart.id = "theta-phi";
    m.chart.names = {"theta", "phi"};
    m.chart.lo = Eigen::Vector2d(0.0, -kInf);
    m.chart.hi = Eigen::Vector2d(kPi, kInf);
    m.chart.region_lo = Eigen::Vector2d(0.05, -kPi);
    m.chart.region_hi = Eigen::Vector2d(kPi - 0.05, kPi);
    m.statistics = {{stat::x1}, {stat::x2}, {stat::x3}, {stat::entropy}};
    m.kind = DivergenceKind::KL;
    const double phi_k = sphere_phi(kappa);
    const double s0 = phi_k - kappa;
    m.divergence = [kappa, phi_k](const DataSet& x, const Vec& t) {
        return -x.expectation(stat::entropy) + phi_k - kappa * unit(t(0), t(1)).dot(moments_of(x));
    };
    m.gradient = [kappa](const DataSet& x, const Vec& t) -> Vec {
        const double th = t(0), ph = t(1);
        const Eigen::Vector3d mm = moments_of(x);
        const Eigen::Vector3d dth(std::cos(th) * std::cos(ph), std::cos(th) * std::sin(ph), -std::sin(th));
        const Eigen::Vector3d dph(-std::sin(th) * std::sin(ph), std::sin(th) * std::cos(ph), 0.0);
        return Eigen::Vector2d(-kappa * dth.dot(mm), -kappa * dph.dot(mm));
    };
    m.hessian = [kappa](const DataSet& x, const Vec& t) -> Mat {
        const double th = t(0), ph = t(1);
        const Eigen::Vector3d mm = moments_of(x);
        const Eigen::Vector3d tt = -unit(th, ph);
        const Eigen::Vector3d tp(-std::cos(th) * std::sin(ph), std::cos(th) * std::cos(ph), 0.0);
        const Eigen::Vector3d pp(-std::sin(th) * std::cos(ph), -std::sin(th) * std::sin(ph), 0.0);
        Mat h(2, 2);
        h << -kappa * tt.dot(mm), -kappa * tp.dot(mm), -kappa * tp.dot(mm), -kappa * pp.dot(mm);
        return h;
    };
    m.fibre_sampler = [s0](const Vec& t, int k) {
        std::vector<DataSet> out;
        for (int i = 0; i < k && i < 5; ++i) out.push_back(vector_data(unit(t(0), t(1)), s0 - kEntropyOffsets[i]));
        return out;
    };
    m.probes = {
        {"tilt-rotate",
         [s0](const Vec& t, int c, double e) {
             return vector_data(c == 0 ? unit(t(0) - e, t(1)) : unit(t(0), t(1) - e), s0);
         }},
        {"mixed",
         [s0](const Vec& t, int c, double e) {
             return vector_data(c == 0 ? unit(t(0) - e, t(1) - e) : unit(t(0) + e, t(1) - 2 * e), s0);
         }},
    };
    m.closed_form_fit = [](const DataSet& x) -> std::optional<Vec> {
        try {
            const Eigen::Vector3d mm = moments_of(x);
            const double r = mm.norm();
            if (!(r > 0)) return std::nullopt;
            return Vec(Eigen::Vector2d(std::acos(std::clamp(mm(2) / r, -1.0, 1.0)), std::atan2(mm(1), mm(0))));
        } catch (const MissingStatistic&) {
            return std::nullopt;
        }
    };
    m.random_data = [s0](std::mt19937_64& rng) {
        std::uniform_real_distribution<double> u(0.0, 1.0);
        const double th = 0.3 + (kPi - 0.6) * u(rng), ph = -kPi + 2 * kPi * u(rng);
        if (u(rng) < 0.5) return DataSet::analytic(VonMisesFisher{0.5 + 4.0 * u(rng), unit(th, ph)});
        return vector_data(unit(th, ph), s0 - u(rng));
    };
    m.oracle.metric = [kappa](const Vec& t) -> Mat {
        const double s = std::sin(t(0));
        return Eigen::Vector2d(kappa, kappa * s * s).asDiagonal();
    };
    m.oracle.connection = [](const Vec& t) {
        Tensor3 w(2);
        w(0, 1, 1) = -std::sin(t(0)) * std::cos(t(0));
        w(1, 0, 1) = w(1, 1, 0) = std::cos(t(0)) / std::sin(t(0));
        return w;
    };
    return m;
}

ModelDefinition vmf_cylinder(double kappa) {
    if (!(kappa > 0)) throw ConfigError("vmf-cylinder needs kappa > 0");
    ModelDefinition m;
    m.name = "vmf-cylinder";
    m.chart.id = "phi-lambda";
    m.chart.names = {"phi", "lambda"};
    m.chart.lo = Eigen::Vector2d(-kPi, 0.0);
    m.chart.hi = Eigen::Vector2d(kPi, kInf);
    m.chart.region_lo = Eigen::Vector2d(-2.0, 0.5);
    m.chart.region_hi = Eigen::Vector2d(2.0, 3.0);
    m.statistics = {{stat::x1}, {stat::x2}, {stat::x3}, {stat::entropy}};
    m.kind = DivergenceKind::KL;
    const double ln_circle = std::log(2.0 * kPi * std::cyl_bessel_i(0.0, kappa));
    // Entropy making D vanish on the fibre, as a function of E[x3].
    auto s_fit = [ln_circle, kappa](double m3) { return ln_circle + std::log(m3) - kappa + 1.0; };
    m.divergence = [kappa, ln_circle](const DataSet& x, const Vec& t) {
        const Eigen::Vector3d mm = moments_of(x);
        return -x.expectation(stat::entropy) + ln_circle - std::log(t(1)) -
               kappa * (std::cos(t(0)) * mm(0) + std::sin(t(0)) * mm(1)) + t(1) * mm(2);
    };
    m.gradient = [kappa](const DataSet& x, const Vec& t) -> Vec {
        const Eigen::Vector3d mm = moments_of(x);
        return Eigen::Vector2d(kappa * (std::sin(t(0)) * mm(0) - std::cos(t(0)) * mm(1)), -1.0 / t(1) + mm(2));
    };
    m.hessian = [kappa](const DataSet& x, const Vec& t) -> Mat {
        const Eigen::Vector3d mm = moments_of(x);
        Mat h = Mat::Zero(2, 2);
        h(0, 0) = kappa * (std::cos(t(0)) * mm(0) + std::sin(t(0)) * mm(1));
        h(1, 1) = 1.0 / (t(1) * t(1));
        return h;
    };
    auto point = [](double ph, double m3) { return Eigen::Vector3d(std::cos(ph), std::sin(ph), m3); };
    m.fibre_sampler = [s_fit, point](const Vec& t, int k) {
        std::vector<DataSet> out;
        const double m3 = 1.0 / t(1);
        for (int i = 0; i < k && i < 5; ++i) out.push_back(vector_data(point(t(0), m3), s_fit(m3) - kEntropyOffsets[i]));
        return out;
    };
    auto probe = [s_fit, point](double ph, double m3) { return vector_data(point(ph, m3), s_fit(m3)); };
    m.probes = {
        {"single-condition",
         [probe](const Vec& t, int c, double e) {
             return c == 0 ? probe(t(0) - e, 1.0 / t(1)) : probe(t(0), (1.0 + e) / t(1));
         }},
        {"mixed",
         [probe](const Vec& t, int c, double e) {
             return c == 0 ? probe(t(0) - e, (1.0 + e) / t(1)) : probe(t(0) + e, (1.0 + 2 * e) / t(1));
         }},
    };
    m.closed_form_fit = [](const DataSet& x) -> std::optional<Vec> {
        try {
            const Eigen::Vector3d mm = moments_of(x);
            if (!(mm(2) > 0) || mm.head<2>().norm() == 0) return std::nullopt;
            return Vec(Eigen::Vector2d(std::atan2(mm(1), mm(0)), 1.0 / mm(2)));
        } catch (const MissingStatistic&) {
            return std::nullopt;
        }
    };
    m.random_data = [s_fit, point](std::mt19937_64& rng) {
        std::uniform_real_distribution<double> u(0.0, 1.0);
        const double m3 = 1.0 / (0.5 + 2.5 * u(rng));
        return vector_data(point(-2.5 + 5.0 * u(rng), m3), s_fit(m3) - u(rng));
    };
    m.oracle.metric = [kappa](const Vec& t) -> Mat {
        return Eigen::Vector2d(kappa, 1.0 / (t(1) * t(1))).asDiagonal();
    };
    m.oracle.connection = [](const Vec&) { return Tensor3(2); };
    m.oracle.affine = [](const Vec& t) -> Vec { return t; };
    m.oracle.massieu = [kappa](const Vec& t) { return 0.5 * kappa * t(0) * t(0) - std::log(t(1)); };
    return m;
}

} // namespace dsm
