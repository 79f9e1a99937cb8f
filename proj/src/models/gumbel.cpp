#include "dsm/errors.hpp"
#include "dsm/models.hpp"

#include <cmath>
#include <limits>

namespace dsm {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
const double kGolden = 0.5 * (1.0 + std::sqrt(5.0));

} // namespace

Vec gumbel_exponential_point(double lambda) {
    if (!(lambda > 0)) throw DomainError("exponential rate must be > 0");
    const double a = kGolden * lambda;
    return Eigen::Vector2d(a, std::log((lambda + a) / lambda) / a);
}

double gumbel_exponential_rate(double alpha) { return alpha / kGolden; }

ModelDefinition gumbel() {
    ModelDefinition m;
    m.name = "gumbel";
    m.chart.id = "alpha-mu";
    m.chart.names = {"alpha", "mu"};
    m.chart.lo = Eigen::Vector2d(0.0, -kInf);
    m.chart.hi = Eigen::Vector2d(kInf, kInf);
    m.chart.region_lo = Eigen::Vector2d(0.5, -1.0);
    m.chart.region_hi = Eigen::Vector2d(4.0, 2.0);
    m.statistics = {{stat::mean},
                    {stat::entropy},
                    {stat::exp_tilt_0, true},
                    {stat::exp_tilt_1, true},
                    {stat::exp_tilt_2, true}};
    m.kind = DivergenceKind::KL;
    m.divergence = [](const DataSet& x, const Vec& t) {
        const double a = t(0), mu = t(1);
        return -x.expectation(stat::entropy) - std::log(a) + a * (x.expectation(stat::mean) - mu) +
               x.expectation(stat::exp_tilt_0, t);
    };
    m.gradient = [](const DataSet& x, const Vec& t) -> Vec {
        const double a = t(0), mu = t(1);
        const double e0 = x.expectation(stat::exp_tilt_0, t), e1 = x.expectation(stat::exp_tilt_1, t);
        return Eigen::Vector2d(-1.0 / a + x.expectation(stat::mean) - mu - e1, -a + a * e0);
    };
    m.hessian = [](const DataSet& x, const Vec& t) -> Mat {
        const double a = t(0);
        const double e0 = x.expectation(stat::exp_tilt_0, t), e1 = x.expectation(stat::exp_tilt_1, t),
                     e2 = x.expectation(stat::exp_tilt_2, t);
        Mat h(2, 2);
        h << 1.0 / (a * a) + e2, -1.0 + e0 - a * e1, -1.0 + e0 - a * e1, a * a * e0;
        return h;
    };
    m.fibre_sampler = [](const Vec& t, int k) {
        const double lambda = gumbel_exponential_rate(t(0));
        const Vec on = gumbel_exponential_point(lambda);
        if (std::abs(on(1) - t(1)) > 1e-9 * std::max(1.0, std::abs(t(1))))
            throw DomainError("the Gumbel fibre is only sampled on the curve fitted by exponential data");
        std::vector<DataSet> out;
        if (k >= 1) out.push_back(DataSet::analytic(Gumbel{t(0), t(1)}));
        if (k >= 2) out.push_back(DataSet::analytic(Exponential{lambda}));
        return out;
    };
    m.closed_form_fit = [](const DataSet& x) -> std::optional<Vec> {
        if (x.kind() != DataSet::Kind::AnalyticDistribution) return std::nullopt;
        const Distribution& d = std::get<Distribution>(x.payload());
        if (const auto* e = std::get_if<Exponential>(&d)) return gumbel_exponential_point(e->rate);
        if (const auto* g = std::get_if<Gumbel>(&d)) return Vec(Eigen::Vector2d(g->alpha, g->mode));
        return std::nullopt;
    };
    m.default_grid = [] {
        std::vector<Vec> g;
        for (int i = 0; i < 5; ++i) g.push_back(gumbel_exponential_point(0.5 + 1.5 * i / 4.0));
        return g;
    };
    m.random_point = [](std::mt19937_64& rng) {
        std::uniform_real_distribution<double> u(0.5, 2.0);
        return gumbel_exponential_point(u(rng));
    };
    m.random_data = [](std::mt19937_64& rng) {
        std::uniform_real_distribution<double> u(0.0, 1.0);
        const double a = -1.0 + 2.0 * u(rng), b = 0.5 + 1.5 * u(rng);
        switch (static_cast<int>(u(rng) * 3.0)) {
        case 0: return DataSet::analytic(Gaussian{a, b});
        case 1: return DataSet::analytic(Exponential{b});
        default: return DataSet::analytic(Gumbel{b, a});
        }
    };
    m.varying_term = [](const Vec& t, const Mat& h) { return t(0) * t(0) * (h(0, 0) - 1.0 / (t(0) * t(0))); };
    m.varying_term_label = "alpha^2 * (d2D/dalpha2 - 1/alpha^2)";
    m.expect_condition4_fail = true;
    return m;
}

} // namespace dsm
