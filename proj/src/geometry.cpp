#include "dsm/geometry.hpp"

#include <cmath>
#include <limits>
#include <random>
#include <sstream>

namespace dsm {

namespace {

double max_abs(const Mat& m) { return m.size() ? m.cwiseAbs().maxCoeff() : 0.0; }

ChartSpec curve_chart() {
    ChartSpec c = unbounded_chart(1, "eps");
    return c;
}

Mat require_pd(const Mat& g, const std::string& model, const Vec& theta) {
    Eigen::SelfAdjointEigenSolver<Mat> es(g);
    if (es.info() != Eigen::Success || !(es.eigenvalues().minCoeff() > 0)) {
        std::ostringstream os;
        os << "metric of model '" << model << "' is not positive definite at (" << theta.transpose()
           << "), smallest eigenvalue " << es.eigenvalues().minCoeff();
        throw MetricNotPD(os.str());
    }
    return g;
}

Tensor3 family_connection(const ModelDefinition& m, const Vec& theta, const ProbeFamily& fam,
                          const GeometryOptions& opts, double* condition) {
    const int n = m.chart.dim();
    Mat P(n, n);
    Mat R(n, n * n);
    const ChartSpec eps_chart = curve_chart();
    DiffConfig dc = opts.diff;
    dc.rel_step = opts.probe_step;
    dc.scale = Vec::Ones(1);
    for (int c = 0; c < n; ++c) {
        VectorField F = [&](const Vec& e) -> Vec {
            const DataSet x = fam.curve(theta, c, e(0));
            Vec out(n + n * n);
            out.head(n) = divergence_gradient(m, x, theta, opts.numeric, opts.diff);
            out.tail(n * n) = flatten(divergence_hessian(m, x, theta, opts.numeric, opts.diff));
            return out;
        };
        const Vec d = fd_field_derivative(F, Vec::Zero(1), 0, &eps_chart, dc);
        P.row(c) = d.head(n).transpose();
        R.row(c) = d.tail(n * n).transpose();
    }
    Eigen::JacobiSVD<Mat> svd(P);
    const auto& s = svd.singularValues();
    const double cond = s(n - 1) > 0 ? s(0) / s(n - 1) : std::numeric_limits<double>::infinity();
    if (condition) *condition = cond;
    if (!(cond < opts.max_probe_condition)) {
        std::ostringstream os;
        os << "probe family '" << fam.name << "' of model '" << m.name << "' has condition number " << cond;
        throw ProbeSingular(os.str());
    }
    const Mat W = P.partialPivLu().solve(R);
    Tensor3 w(n);
    for (int k = 0; k < n; ++k)
        for (int b = 0; b < n; ++b)
            for (int a = 0; a < n; ++a) w(k, a, b) = W(k, a + n * b);
    return w;
}

Mat metric_field(const ModelDefinition& m, const Vec& t, const GeometryOptions& opts) {
    return metric_at(m, t, opts).g;
}

} // namespace

double Condition4Violated::varying_ratio() const {
    const auto& v = evidence.varying_terms;
    if (v.size() < 2) return std::numeric_limits<double>::quiet_NaN();
    double lo = v[0], hi = v[0];
    for (double x : v) {
        lo = std::min(lo, x);
        hi = std::max(hi, x);
    }
    return hi / lo;
}

MetricResult metric_at(const ModelDefinition& m, const Vec& theta, const GeometryOptions& opts) {
    m.chart.require(theta);
    if (!m.fibre_sampler) throw Unsupported("model '" + m.name + "' has no fibre sampler");
    const auto members = m.fibre_sampler(theta, opts.fibre_k);
    if (members.empty()) throw Unsupported("fibre sampler of model '" + m.name + "' returned no members");
    MetricResult r;
    const int n = m.chart.dim();
    r.g = Mat::Zero(n, n);
    for (const auto& x : members) {
        Mat h = divergence_hessian(m, x, theta, opts.numeric, opts.diff);
        r.member_hessians.push_back(h);
        r.members.push_back(x.describe());
        r.g += h;
        if (m.varying_term) r.varying_terms.push_back(m.varying_term(theta, h));
    }
    r.g /= static_cast<double>(members.size());
    r.varying_term_label = m.varying_term_label;
    const double scale = max_abs(r.g);
    for (size_t i = 0; i < members.size(); ++i)
        for (size_t j = i + 1; j < members.size(); ++j)
            r.deviation = std::max(r.deviation, max_abs(r.member_hessians[i] - r.member_hessians[j]) / scale);
    if (r.deviation > opts.cond4_tol) {
        std::ostringstream os;
        os << "Hessian of model '" << m.name << "' varies along the fibre at (" << theta.transpose()
           << "): relative deviation " << r.deviation << " exceeds " << opts.cond4_tol;
        throw Condition4Violated(os.str(), std::move(r));
    }
    r.g = 0.5 * (r.g + r.g.transpose());
    require_pd(r.g, m.name, theta);
    return r;
}

Tensor3 connection_field(const ModelDefinition& m, const Vec& theta, const GeometryOptions& opts, int family) {
    m.chart.require(theta);
    if (family >= static_cast<int>(m.probes.size()))
        throw ProbeSingular("model '" + m.name + "' has no off-fibre probe family " + std::to_string(family));
    return family_connection(m, theta, m.probes[family], opts, nullptr);
}

ConnectionResult connection_at(const ModelDefinition& m, const Vec& theta, const GeometryOptions& opts, bool check) {
    m.chart.require(theta);
    if (m.probes.empty()) throw ProbeSingular("model '" + m.name + "' has no off-fibre probe family");
    ConnectionResult r;
    for (size_t f = 0; f < std::min<size_t>(m.probes.size(), 2); ++f) {
        double cond = 0;
        r.per_family.push_back(family_connection(m, theta, m.probes[f], opts, &cond));
        r.probe_condition = std::max(r.probe_condition, cond);
    }
    r.omega = r.per_family[0];
    if (r.per_family.size() < 2) {
        r.probe_consistency = std::numeric_limits<double>::quiet_NaN();
        return r;
    }
    const double denom = std::max({r.per_family[0].max_abs(), r.per_family[1].max_abs(), 1.0});
    r.probe_consistency = (r.per_family[0] - r.per_family[1]).max_abs() / denom;
    if (check && r.probe_consistency > opts.hess_tol) {
        std::ostringstream os;
        os << "probe families of model '" << m.name << "' disagree at (" << theta.transpose() << "): "
           << r.probe_consistency << " exceeds " << opts.hess_tol;
        throw HessianStructureViolated(os.str());
    }
    return r;
}

double torsion_residual(const Tensor3& w) {
    double t = 0;
    const int n = w.dim();
    for (int k = 0; k < n; ++k)
        for (int a = 0; a < n; ++a)
            for (int b = 0; b < n; ++b) t = std::max(t, std::abs(w(k, a, b) - w(k, b, a)));
    return t;
}

Tensor3 dual_connection_at(const ModelDefinition& m, const Vec& theta, const GeometryOptions& opts) {
    const int n = m.chart.dim();
    const Mat g = metric_at(m, theta, opts).g;
    const Mat ginv = g.inverse();
    const Tensor3 w = connection_field(m, theta, opts);
    std::vector<Mat> dg;
    for (int a = 0; a < n; ++a)
        dg.push_back(fd_matrix_derivative([&](const Vec& t) { return metric_field(m, t, opts); }, theta, a, &m.chart,
                                          opts.diff));
    Tensor3 d(n);
    for (int dd = 0; dd < n; ++dd)
        for (int a = 0; a < n; ++a)
            for (int c = 0; c < n; ++c) {
                double acc = 0;
                for (int b = 0; b < n; ++b) {
                    double inner = dg[a](b, c);
                    for (int e = 0; e < n; ++e) inner -= g(e, c) * w(e, a, b);
                    acc += ginv(dd, b) * inner;
                }
                d(dd, a, c) = acc;
            }
    return d;
}

Tensor4 curvature_at(const ModelDefinition& m, const Vec& theta, const GeometryOptions& opts) {
    const int n = m.chart.dim();
    const Tensor3 w = connection_field(m, theta, opts);
    std::vector<Tensor3> dw;
    for (int i = 0; i < n; ++i)
        dw.push_back(fd_tensor_derivative([&](const Vec& t) { return connection_field(m, t, opts); }, theta, i,
                                          &m.chart, opts.diff));
    Tensor4 R(n);
    for (int l = 0; l < n; ++l)
        for (int k = 0; k < n; ++k)
            for (int i = 0; i < n; ++i)
                for (int j = 0; j < n; ++j) {
                    double v = dw[i](l, j, k) - dw[j](l, i, k);
                    for (int s = 0; s < n; ++s) v += w(l, i, s) * w(s, j, k) - w(l, j, s) * w(s, i, k);
                    R(l, k, i, j) = v;
                }
    return R;
}

Tensor3 codazzi_residual(const ModelDefinition& m, const Vec& theta, const GeometryOptions& opts) {
    const int n = m.chart.dim();
    const Mat g = metric_at(m, theta, opts).g;
    const Tensor3 w = connection_field(m, theta, opts);
    std::vector<Mat> dg;
    for (int a = 0; a < n; ++a)
        dg.push_back(fd_matrix_derivative([&](const Vec& t) { return metric_field(m, t, opts); }, theta, a, &m.chart,
                                          opts.diff));
    Tensor3 r(n);
    for (int a = 0; a < n; ++a)
        for (int b = 0; b < n; ++b)
            for (int c = 0; c < n; ++c) {
                double v = dg[a](b, c) - dg[b](a, c);
                for (int d = 0; d < n; ++d) v += g(a, d) * w(d, b, c) - g(b, d) * w(d, a, c);
                r(a, b, c) = v;
            }
    return r;
}

double metric_transform_check(const ModelDefinition& m, const ChartMap& map, const Vec& theta,
                              const GeometryOptions& opts) {
    const ModelDefinition rm = reparametrize(m, map);
    const Vec z = map.forward(theta);
    const Mat J = map.jacobian ? map.jacobian(theta) : fd_jacobian(map.forward, theta, &m.chart, opts.diff);
    GeometryOptions zopts = opts;
    if (opts.diff.scale.size() != z.size()) {
        // Characteristic lengths carried through the map: s_z = |J| s_theta.
        Vec st(theta.size());
        for (Eigen::Index i = 0; i < theta.size(); ++i)
            st(i) = opts.diff.scale.size() == theta.size() ? opts.diff.scale(i) : std::max(std::abs(theta(i)), 1.0);
        Vec sz = J.cwiseAbs() * st;
        for (Eigen::Index a = 0; a < sz.size(); ++a)
            if (!(sz(a) > 0)) sz(a) = std::max(std::abs(z(a)), 1.0);
        zopts.diff.scale = sz;
    }
    const Mat gz = metric_at(rm, z, zopts).g;
    const Mat gt = metric_at(m, theta, opts).g;
    return max_abs(gt - J.transpose() * gz * J) / max_abs(gt);
}

double cauchy_schwarz_margin(const Mat& g, const Vec& v, const Vec& w) {
    const double vv = v.dot(g * v), ww = w.dot(g * w), vw = v.dot(g * w);
    return vv * ww - vw * vw;
}

CramerRaoResult cramer_rao_check(const ModelDefinition& m, const Vec& theta, int trials, unsigned long long seed,
                                 const GeometryOptions& opts) {
    const int n = m.chart.dim();
    const Mat g = metric_at(m, theta, opts).g;
    std::optional<Mat> gaff;
    if (m.oracle.affine) {
        const Mat J = fd_jacobian(m.oracle.affine, theta, &m.chart, opts.diff);
        const Mat K = J.inverse();
        gaff = K.transpose() * g * K;
    }
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> nd;
    CramerRaoResult r;
    r.trials = trials;
    r.worst_margin = std::numeric_limits<double>::infinity();
    if (gaff) r.worst_affine_margin = std::numeric_limits<double>::infinity();
    for (int t = 0; t < trials; ++t) {
        Vec v(n), w(n);
        for (int i = 0; i < n; ++i) v(i) = nd(rng);
        for (int i = 0; i < n; ++i) w(i) = nd(rng);
        r.worst_margin = std::min(r.worst_margin, cauchy_schwarz_margin(g, v, w));
        if (gaff) {
            const Mat& h = *gaff;
            const double vw = v.dot(h * w);
            r.worst_affine_margin = std::min(*r.worst_affine_margin, v.dot(h * v) - vw * vw / w.dot(h * w));
        }
    }
    return r;
}

} // namespace dsm
