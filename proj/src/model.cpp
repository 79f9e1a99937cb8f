#include "dsm/model.hpp"
#include "dsm/errors.hpp"

#include <cmath>
#include <limits>
#include <sstream>

namespace dsm {

bool ChartSpec::contains(const Vec& theta) const {
    if (theta.size() != dim()) return false;
    for (int i = 0; i < dim(); ++i) {
        if (!std::isfinite(theta(i))) return false;
        if (!(theta(i) > lo(i) && theta(i) < hi(i))) return false;
    }
    return !admissible || admissible(theta);
}

void ChartSpec::require(const Vec& theta) const {
    if (contains(theta)) return;
    std::ostringstream os;
    os << "point (";
    for (Eigen::Index i = 0; i < theta.size(); ++i) os << (i ? ", " : "") << theta(i);
    os << ") lies outside chart '" << id << "'";
    if (theta.size() != dim()) os << " (expected " << dim() << " coordinates)";
    throw DomainError(os.str());
}

ChartSpec unbounded_chart(int n, std::string id) {
    ChartSpec c;
    c.id = std::move(id);
    for (int i = 0; i < n; ++i) c.names.push_back("t" + std::to_string(i + 1));
    const double inf = std::numeric_limits<double>::infinity();
    c.lo = Vec::Constant(n, -inf);
    c.hi = Vec::Constant(n, inf);
    c.region_lo = Vec::Constant(n, -1.0);
    c.region_hi = Vec::Constant(n, 1.0);
    return c;
}

ChartMap identity_map(const ChartSpec& chart) {
    ChartMap m;
    m.target = chart;
    m.forward = [](const Vec& t) { return t; };
    m.inverse = [](const Vec& z) { return z; };
    const int n = chart.dim();
    m.jacobian = [n](const Vec&) { return Mat::Identity(n, n); };
    m.inverse_jacobian = [n](const Vec&) { return Mat::Identity(n, n); };
    m.inverse_hessians = [n](const Vec&) { return std::vector<Mat>(n, Mat::Zero(n, n)); };
    return m;
}

double evaluate_divergence(const ModelDefinition& m, const DataSet& x, const Vec& theta) {
    m.chart.require(theta);
    const double d = m.divergence(x, theta);
    if (!std::isfinite(d)) throw NumericalFailure("divergence of model '" + m.name + "' is not finite inside its chart");
    return d;
}

Vec divergence_gradient(const ModelDefinition& m, const DataSet& x, const Vec& theta, bool numeric,
                        const DiffConfig& cfg) {
    m.chart.require(theta);
    if (!numeric && m.gradient) return m.gradient(x, theta);
    return fd_gradient([&](const Vec& t) { return evaluate_divergence(m, x, t); }, theta, &m.chart, cfg);
}

Mat divergence_hessian(const ModelDefinition& m, const DataSet& x, const Vec& theta, bool numeric,
                       const DiffConfig& cfg) {
    m.chart.require(theta);
    if (!numeric && m.hessian) return m.hessian(x, theta);
    return fd_hessian([&](const Vec& t) { return evaluate_divergence(m, x, t); }, theta, &m.chart, cfg);
}

ModelDefinition reparametrize(const ModelDefinition& m, const ChartMap& map) {
    ModelDefinition r;
    r.name = m.name + "@" + map.target.id;
    r.chart = map.target;
    r.statistics = m.statistics;
    r.kind = m.kind;
    const ModelDefinition base = m;
    auto inv = [base, map](const Vec& z) {
        map.target.require(z);
        Vec t = map.inverse(z);
        base.chart.require(t);
        return t;
    };
    r.divergence = [base, inv](const DataSet& x, const Vec& z) { return base.divergence(x, inv(z)); };
    if (m.gradient && m.hessian && map.inverse_jacobian && map.inverse_hessians) {
        r.gradient = [base, inv, map](const DataSet& x, const Vec& z) -> Vec {
            return map.inverse_jacobian(z).transpose() * base.gradient(x, inv(z));
        };
        r.hessian = [base, inv, map](const DataSet& x, const Vec& z) -> Mat {
            const Vec t = inv(z);
            const Mat K = map.inverse_jacobian(z);
            const Vec g = base.gradient(x, t);
            Mat h = K.transpose() * base.hessian(x, t) * K;
            const auto second = map.inverse_hessians(z);
            for (int c = 0; c < g.size(); ++c) h += g(c) * second[c];
            return h;
        };
    }
    r.fibre_sampler = [base, inv](const Vec& z, int k) { return base.fibre_sampler(inv(z), k); };
    for (const auto& p : m.probes)
        r.probes.push_back({p.name, [p, inv](const Vec& z, int c, double eps) { return p.curve(inv(z), c, eps); }});
    if (m.closed_form_fit)
        r.closed_form_fit = [base, map](const DataSet& x) -> std::optional<Vec> {
            auto t = base.closed_form_fit(x);
            if (!t) return std::nullopt;
            return map.forward(*t);
        };
    if (m.default_grid)
        r.default_grid = [base, map] {
            std::vector<Vec> g;
            for (const Vec& t : base.default_grid()) g.push_back(map.forward(t));
            return g;
        };
    r.random_point = [base, map](std::mt19937_64& rng) { return map.forward(random_point(base, rng)); };
    r.random_data = m.random_data;
    if (m.oracle.affine) r.oracle.affine = [base, inv](const Vec& z) { return base.oracle.affine(inv(z)); };
    if (m.oracle.massieu) r.oracle.massieu = [base, inv](const Vec& z) { return base.oracle.massieu(inv(z)); };
    r.expect_condition4_fail = m.expect_condition4_fail;
    return r;
}

std::vector<Vec> default_grid(const ModelDefinition& m, int per_axis) {
    if (m.default_grid) return m.default_grid();
    const int n = m.chart.dim();
    std::vector<Vec> axes(n);
    for (int i = 0; i < n; ++i) {
        const double lo = m.chart.region_lo(i), hi = m.chart.region_hi(i);
        const double a = lo + 0.2 * (hi - lo), b = hi - 0.2 * (hi - lo);
        axes[i] = per_axis == 1 ? Vec(Vec::Constant(1, 0.5 * (a + b))) : Vec(Vec::LinSpaced(per_axis, a, b));
    }
    std::vector<Vec> grid;
    std::vector<int> idx(n, 0);
    while (true) {
        Vec p(n);
        for (int i = 0; i < n; ++i) p(i) = axes[i](idx[i]);
        if (m.chart.contains(p)) grid.push_back(p);
        int i = n - 1;
        while (i >= 0 && ++idx[i] == per_axis) idx[i--] = 0;
        if (i < 0) break;
    }
    return grid;
}

Vec random_point(const ModelDefinition& m, std::mt19937_64& rng) {
    if (m.random_point) return m.random_point(rng);
    const int n = m.chart.dim();
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int attempt = 0; attempt < 10000; ++attempt) {
        Vec p(n);
        for (int i = 0; i < n; ++i) p(i) = m.chart.region_lo(i) + u(rng) * (m.chart.region_hi(i) - m.chart.region_lo(i));
        if (m.chart.contains(p)) return p;
    }
    throw DomainError("could not sample a point inside chart '" + m.chart.id + "'");
}

} // namespace dsm
