#include "dsm/errors.hpp"
#include "dsm/models.hpp"

#include <limits>

namespace dsm {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

struct Sums {
    double n, sx, sy, sxx, sxy, syy;
    double delta() const { return n * sxx - sx * sx; }
};

Sums read(const DataSet& x) {
    return {x.expectation(stat::count), x.expectation(stat::sum_x),  x.expectation(stat::sum_y),
            x.expectation(stat::sum_xx), x.expectation(stat::sum_xy), x.expectation(stat::sum_yy)};
}

ChartSpec line_chart() {
    ChartSpec c;
    c.id = "slope-intercept";
    c.names = {"a", "b"};
    c.lo = Vec::Constant(2, -kInf);
    c.hi = Vec::Constant(2, kInf);
    c.region_lo = Vec::Constant(2, -2.0);
    c.region_hi = Vec::Constant(2, 2.0);
    return c;
}

const std::vector<double> kBaseX{0.0, 1.0, 2.0, 3.0};
const std::vector<double> kResidual{0.5, -0.5, -0.5, 0.5};

// j-th design: stretched and shifted copy of the base abscissae with a
// residual orthogonal to both regressors.
DataSet design(const Vec& t, int j, const std::function<double(double)>& extra = nullptr) {
    std::vector<double> xs, ys;
    for (size_t i = 0; i < kBaseX.size(); ++i) {
        const double x = kBaseX[i] * (1.0 + j) + 0.5 * j;
        xs.push_back(x);
        double y = t(0) * x + t(1) + kResidual[i] * (1.0 + j);
        if (extra) y += extra(x);
        ys.push_back(y);
    }
    return DataSet::regression(xs, ys);
}

std::vector<ProbeFamily> line_probes() {
    const double xbar = 1.5;
    return {
        {"single-condition",
         [xbar](const Vec& t, int c, double e) {
             if (c == 0) return design(t, 0, [=](double x) { return e * (x - xbar); });
             return design(t, 0, [=](double) { return e; });
         }},
        {"mixed",
         [](const Vec& t, int c, double e) {
             if (c == 0) return design(t, 0, [=](double x) { return e * x; });
             return design(t, 0, [=](double x) { return e * (2.0 - x); });
         }},
    };
}

std::optional<Vec> line_fit(const DataSet& x) {
    if (x.kind() != DataSet::Kind::RegressionSample) return std::nullopt;
    const Sums s = read(x);
    const double a = (s.n * s.sxy - s.sx * s.sy) / s.delta();
    return Vec(Eigen::Vector2d(a, (s.sy - a * s.sx) / s.n));
}

DataSet random_sample(std::mt19937_64& rng) {
    std::uniform_real_distribution<double> u(-2.0, 2.0);
    std::vector<double> xs, ys;
    for (int i = 0; i < 5; ++i) {
        xs.push_back(u(rng));
        ys.push_back(u(rng));
    }
    return DataSet::regression(xs, ys);
}

ModelDefinition line_base(const std::string& name) {
    ModelDefinition m;
    m.name = name;
    m.chart = line_chart();
    m.statistics = {{stat::count}, {stat::sum_x}, {stat::sum_y}, {stat::sum_xx}, {stat::sum_xy}, {stat::sum_yy}};
    m.kind = DivergenceKind::Other;
    m.fibre_sampler = [](const Vec& t, int k) {
        std::vector<DataSet> out;
        for (int j = 0; j < k; ++j) out.push_back(design(t, j));
        return out;
    };
    m.probes = line_probes();
    m.closed_form_fit = line_fit;
    m.random_data = random_sample;
    return m;
}

} // namespace

ModelDefinition regression_ls() {
    ModelDefinition m = line_base("regression-ls");
    m.divergence = [](const DataSet& x, const Vec& t) {
        const Sums s = read(x);
        const double a = t(0), b = t(1);
        return 0.5 * (s.syy - 2 * a * s.sxy - 2 * b * s.sy + a * a * s.sxx + 2 * a * b * s.sx + b * b * s.n);
    };
    m.gradient = [](const DataSet& x, const Vec& t) -> Vec {
        const Sums s = read(x);
        const double a = t(0), b = t(1);
        return Eigen::Vector2d(-s.sxy + a * s.sxx + b * s.sx, -s.sy + a * s.sx + b * s.n);
    };
    m.hessian = [](const DataSet& x, const Vec&) -> Mat {
        const Sums s = read(x);
        Mat h(2, 2);
        h << s.sxx, s.sx, s.sx, s.n;
        return h;
    };
    m.expect_condition4_fail = true;
    m.varying_term = [](const Vec&, const Mat& h) { return h(0, 0); };
    m.varying_term_label = "d2D/da2 = sum x^2";
    return m;
}

ModelDefinition regression_dlambda(double lambda) {
    if (!(lambda > 0)) throw ConfigError("regression-dlambda needs lambda > 0");
    ModelDefinition m = line_base("regression-dlambda");
    const double l2 = lambda * lambda;
    m.divergence = [l2](const DataSet& x, const Vec& t) {
        const Sums s = read(x);
        const double a = t(0), b = t(1), d = s.delta();
        const double p1 = 2 * (s.n * s.syy - s.sy * s.sy) - 4 * a * (s.n * s.sxy - s.sx * s.sy) + 2 * a * a * d;
        const double p2 = 2 * (s.sxx * s.syy - s.sxy * s.sxy) - 4 * b * (s.sxx * s.sy - s.sx * s.sxy) + 2 * b * b * d;
        return (l2 * p1 + p2) / (4 * d);
    };
    m.gradient = [l2](const DataSet& x, const Vec& t) -> Vec {
        const Sums s = read(x);
        const double d = s.delta();
        return Eigen::Vector2d(l2 * (t(0) - (s.n * s.sxy - s.sx * s.sy) / d), t(1) - (s.sxx * s.sy - s.sx * s.sxy) / d);
    };
    m.hessian = [l2](const DataSet&, const Vec&) -> Mat { return Eigen::Vector2d(l2, 1.0).asDiagonal(); };
    m.oracle.metric = [l2](const Vec&) -> Mat { return Eigen::Vector2d(l2, 1.0).asDiagonal(); };
    m.oracle.connection = [](const Vec&) { return Tensor3(2); };
    m.oracle.affine = [](const Vec& t) { return t; };
    m.oracle.massieu = [l2](const Vec& t) { return 0.5 * (l2 * t(0) * t(0) + t(1) * t(1)); };
    return m;
}

} // namespace dsm
