#include "dsm/structure.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace dsm {

namespace {

double max_abs(const Mat& m) { return m.size() ? m.cwiseAbs().maxCoeff() : 0.0; }
double max_abs(const Vec& v) { return v.size() ? v.cwiseAbs().maxCoeff() : 0.0; }

// Classical RK4 over t in [0, 1] along the segment p0 -> p1.
template <class State, class Rhs>
State rk4_segment(const Vec& p0, const Vec& p1, State y, int steps, const ChartSpec& chart, Rhs rhs) {
    const Vec dz = p1 - p0;
    const double h = 1.0 / steps;
    for (int s = 0; s < steps; ++s) {
        const double t = s * h;
        auto at = [&](double tt) {
            Vec z = p0 + tt * dz;
            chart.require(z);
            return z;
        };
        const State k1 = rhs(at(t), dz, y);
        const State k2 = rhs(at(t + 0.5 * h), dz, State(y + 0.5 * h * k1));
        const State k3 = rhs(at(t + 0.5 * h), dz, State(y + 0.5 * h * k2));
        const State k4 = rhs(at(t + h), dz, State(y + h * k3));
        y = y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    }
    return y;
}

std::vector<Vec> l_path(const Vec& a, const Vec& b) {
    std::vector<Vec> pts{a};
    Vec cur = a;
    for (Eigen::Index i = 0; i < a.size(); ++i) {
        if (cur(i) == b(i)) continue;
        cur(i) = b(i);
        pts.push_back(cur);
    }
    return pts;
}

// State layout for affine coordinates: G (n x n, column-major) then Theta (n).
Vec affine_rhs(const ModelDefinition& m, const GeometryOptions& go, const Vec& z, const Vec& dz, const Vec& y) {
    const int n = static_cast<int>(z.size());
    const Tensor3 w = connection_field(m, z, go);
    Eigen::Map<const Mat> G(y.data(), n, n);
    Vec out(n * n + n);
    Eigen::Map<Mat> dG(out.data(), n, n);
    for (int b = 0; b < n; ++b)
        for (int j = 0; j < n; ++j) {
            double acc = 0;
            for (int a = 0; a < n; ++a)
                for (int c = 0; c < n; ++c) acc += dz(a) * w(c, a, b) * G(c, j);
            dG(b, j) = acc;
        }
    out.tail(n) = G.transpose() * dz;
    return out;
}

Vec integrate_affine(const ModelDefinition& m, const std::vector<Vec>& path, const StructureOptions& o) {
    const int n = m.chart.dim();
    Vec y = Vec::Zero(n * n + n);
    Eigen::Map<Mat>(y.data(), n, n) = Mat::Identity(n, n);
    auto rhs = [&](const Vec& z, const Vec& dz, const Vec& s) { return affine_rhs(m, o.geometry, z, dz, s); };
    for (size_t i = 1; i < path.size(); ++i) y = rk4_segment(path[i - 1], path[i], y, o.steps, m.chart, rhs);
    return y;
}

// State layout for the Massieu system: alpha (n) then Phi.
Vec massieu_rhs(const ModelDefinition& m, const GeometryOptions& go, const Vec& z, const Vec& dz, const Vec& y) {
    const int n = static_cast<int>(z.size());
    const Mat g = metric_at(m, z, go).g;
    const Tensor3 w = connection_field(m, z, go);
    Vec out(n + 1);
    for (int b = 0; b < n; ++b) {
        double acc = 0;
        for (int a = 0; a < n; ++a) {
            double inner = g(a, b);
            for (int c = 0; c < n; ++c) inner += w(c, a, b) * y(c);
            acc += dz(a) * inner;
        }
        out(b) = acc;
    }
    out(n) = y.head(n).dot(dz);
    return out;
}

Vec integrate_massieu(const ModelDefinition& m, const std::vector<Vec>& path, const StructureOptions& o) {
    const int n = m.chart.dim();
    Vec y = Vec::Zero(n + 1);
    auto rhs = [&](const Vec& z, const Vec& dz, const Vec& s) { return massieu_rhs(m, o.geometry, z, dz, s); };
    for (size_t i = 1; i < path.size(); ++i) y = rk4_segment(path[i - 1], path[i], y, o.steps, m.chart, rhs);
    return y;
}

double relative(double num, double den) { return num == 0.0 ? 0.0 : num / std::max(den, 1e-300); }

} // namespace

const char* verdict_name(Verdict v) {
    switch (v) {
    case Verdict::Pass: return "pass";
    case Verdict::Fail: return "fail";
    case Verdict::NotEvaluated: return "not-evaluated";
    }
    return "?";
}

GeometryReport classify(const ModelDefinition& m, const std::vector<Vec>& grid, const StructureOptions& opts) {
    GeometryReport r;
    r.model = m.name;
    r.kl = m.kind == DivergenceKind::KL;
    r.tol = opts.tol;
    r.varying_term_label = m.varying_term_label;
    GeometryOptions go = opts.geometry;
    go.cond4_tol = opts.tol.cond4;
    go.hess_tol = opts.tol.hess;
    bool cond4_ok = true, probes_ok = true, geometry_done = true;
    for (const Vec& theta : grid) {
        PointReport p;
        p.theta = theta;
        try {
            const MetricResult mr = metric_at(m, theta, go);
            p.condition4 = true;
            p.cond4_deviation = mr.deviation;
            p.varying_terms = mr.varying_terms;
        } catch (const Condition4Violated& e) {
            p.condition4 = false;
            p.cond4_deviation = e.evidence.deviation;
            p.varying_terms = e.evidence.varying_terms;
            p.failure = e.what();
            cond4_ok = false;
            if (p.cond4_deviation >= r.worst_cond4) {
                const double ratio = e.varying_ratio();
                if (std::isfinite(ratio)) r.varying_ratio = ratio;
            }
        } catch (const MetricNotPD& e) {
            p.failure = e.what();
            cond4_ok = false;
        }
        r.worst_cond4 = std::max(r.worst_cond4, p.cond4_deviation);
        if (p.condition4) {
            try {
                const ConnectionResult cr = connection_at(m, theta, go, false);
                p.probe_consistency = cr.probe_consistency;
                p.torsion = torsion_residual(cr.omega);
                if (!(cr.probe_consistency <= opts.tol.hess)) probes_ok = false;
                p.curvature = curvature_at(m, theta, go).max_abs();
                p.codazzi = codazzi_residual(m, theta, go).max_abs();
            } catch (const Error& e) {
                p.failure = e.what();
                probes_ok = false;
                geometry_done = false;
            }
        } else {
            geometry_done = false;
        }
        if (p.probe_consistency) r.worst_probe = std::max(r.worst_probe, *p.probe_consistency);
        if (p.torsion) r.worst_torsion = std::max(r.worst_torsion, *p.torsion);
        if (p.curvature) r.worst_curvature = std::max(r.worst_curvature, *p.curvature);
        if (p.codazzi) r.worst_codazzi = std::max(r.worst_codazzi, *p.codazzi);
        r.points.push_back(std::move(p));
    }
    auto verdict = [](bool ok) { return ok ? Verdict::Pass : Verdict::Fail; };
    r.condition4 = verdict(cond4_ok);
    if (cond4_ok) r.probe_consistency = verdict(probes_ok);
    if (geometry_done) {
        r.torsionless = verdict(r.worst_torsion <= opts.tol.torsion);
        r.flat = verdict(r.worst_curvature <= opts.tol.flat);
        r.codazzi = verdict(r.worst_codazzi <= opts.tol.codazzi);
    }
    const bool hs = cond4_ok && probes_ok && geometry_done && r.torsionless == Verdict::Pass &&
                    r.flat == Verdict::Pass && r.codazzi == Verdict::Pass;
    r.hessian_structure = verdict(hs);
    if (!r.kl) r.exponential_family = "not-applicable";
    else r.exponential_family = hs ? "yes" : "no";
    return r;
}

std::pair<Vec, Mat> affine_point(const ModelDefinition& m, const Vec& theta0, const Vec& target,
                                 const StructureOptions& opts) {
    const int n = m.chart.dim();
    const Vec y = integrate_affine(m, {theta0, target}, opts);
    return {y.tail(n), Eigen::Map<const Mat>(y.data(), n, n)};
}

AffineCoordinateMap affine_coordinates(const ModelDefinition& m, const Vec& theta0, const std::vector<Vec>& targets,
                                       const StructureOptions& opts) {
    m.chart.require(theta0);
    const int n = m.chart.dim();
    AffineCoordinateMap r;
    r.theta0 = theta0;
    r.targets = targets;
    r.steps = opts.steps;
    for (const Vec& t : targets) {
        m.chart.require(t);
        const Vec ys = integrate_affine(m, {theta0, t}, opts);
        const Vec yl = integrate_affine(m, l_path(theta0, t), opts);
        r.values.push_back(ys.tail(n));
        r.gradients.push_back(Eigen::Map<const Mat>(ys.data(), n, n));
        r.values_alt.push_back(yl.tail(n));
        r.path_residual = std::max(r.path_residual, relative(max_abs(Vec(ys.tail(n) - yl.tail(n))), max_abs(Vec(ys.tail(n)))));
    }
    if (r.path_residual > opts.tol.path) {
        std::ostringstream os;
        os << "affine coordinates of model '" << m.name << "' depend on the path: residual " << r.path_residual
           << " exceeds " << opts.tol.path;
        throw NotFlat(os.str());
    }
    return r;
}

double affine_connection_residual(const ModelDefinition& m, const Vec& theta0, const Vec& target,
                                  const StructureOptions& opts) {
    const int n = m.chart.dim();
    const Tensor3 w = connection_field(m, target, opts.geometry);
    // J(k, a) = d_a Theta^k, carried by the integrated frame G(a, k).
    auto jac = [&](const Vec& z) -> Mat { return affine_point(m, theta0, z, opts).second.transpose(); };
    const Mat J = jac(target);
    std::vector<Mat> dJ;  // dJ[a](k, b) = d_a d_b Theta^k
    for (int a = 0; a < n; ++a) dJ.push_back(fd_matrix_derivative(jac, target, a, &m.chart, opts.geometry.diff));
    const Mat K = J.inverse();  // K(a, i) = d zeta^a / d Theta^i
    Tensor3 wt(n);
    for (int k = 0; k < n; ++k)
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) {
                double acc = 0;
                for (int a = 0; a < n; ++a)
                    for (int b = 0; b < n; ++b) {
                        double rr = 0.5 * (dJ[a](k, b) + dJ[b](k, a));
                        for (int c = 0; c < n; ++c) rr -= w(c, a, b) * J(k, c);
                        acc -= K(a, i) * K(b, j) * rr;
                    }
                wt(k, i, j) = acc;
            }
    return wt.max_abs();
}

std::pair<double, Vec> massieu_point(const ModelDefinition& m, const Vec& theta0, const Vec& target,
                                     const StructureOptions& opts) {
    const int n = m.chart.dim();
    const Vec y = integrate_massieu(m, {theta0, target}, opts);
    return {y(n), y.head(n)};
}

MassieuSample massieu(const ModelDefinition& m, const Vec& theta0, const std::vector<Vec>& targets,
                      const StructureOptions& opts) {
    m.chart.require(theta0);
    const int n = m.chart.dim();
    MassieuSample r;
    r.theta0 = theta0;
    r.targets = targets;
    for (const Vec& t : targets) {
        m.chart.require(t);
        const Vec ys = integrate_massieu(m, {theta0, t}, opts);
        const Vec yl = integrate_massieu(m, l_path(theta0, t), opts);
        r.phi.push_back(ys(n));
        r.alpha.push_back(ys.head(n));
        r.alpha_alt.push_back(yl.head(n));
        const Mat g = metric_at(m, t, opts.geometry).g;
        const double scale = std::max(max_abs(Vec(ys.head(n))), max_abs(g) * max_abs(Vec(t - theta0)));
        r.path_residual = std::max(r.path_residual, relative(max_abs(Vec(ys.head(n) - yl.head(n))), scale));
        if (t == theta0) continue;
        VectorField alpha = [&](const Vec& z) -> Vec { return massieu_point(m, theta0, z, opts).second; };
        const Mat D = fd_jacobian(alpha, t, &m.chart, opts.geometry.diff);  // D(b, a) = d_a alpha_b
        const Tensor3 w = connection_field(m, t, opts.geometry);
        Mat hess(n, n);
        for (int a = 0; a < n; ++a)
            for (int b = 0; b < n; ++b) {
                double v = 0.5 * (D(b, a) + D(a, b));
                for (int c = 0; c < n; ++c) v -= w(c, a, b) * ys(c);
                hess(a, b) = v;
            }
        r.curl_residual = std::max(r.curl_residual, max_abs(Mat(D - D.transpose())) / max_abs(g));
        r.hessian_residual = std::max(r.hessian_residual, max_abs(Mat(hess - g)) / max_abs(g));
    }
    if (r.path_residual > opts.tol.path) {
        std::ostringstream os;
        os << "Massieu system of model '" << m.name << "' is not integrable: two-path residual " << r.path_residual;
        throw NotIntegrable(os.str());
    }
    return r;
}

PythagorasResult pythagorean_check(const ModelDefinition& m, const Vec& theta, const Vec& m_other, int fibre_k) {
    m.chart.require(theta);
    m.chart.require(m_other);
    PythagorasResult r;
    for (const DataSet& x : m.fibre_sampler(theta, fibre_k))
        r.differences.push_back(evaluate_divergence(m, x, m_other) - evaluate_divergence(m, x, theta));
    for (size_t i = 0; i < r.differences.size(); ++i)
        for (size_t j = i + 1; j < r.differences.size(); ++j)
            r.deviation = std::max(r.deviation, std::abs(r.differences[i] - r.differences[j]));
    r.induced_value = r.differences.empty() ? 0.0 : r.differences.front();
    return r;
}

InducedCheck induced_divergence_geometry_check(const ModelDefinition& m, const Vec& theta,
                                               const GeometryOptions& opts) {
    const int n = m.chart.dim();
    auto rep = [&](const Vec& xi) { return m.fibre_sampler(xi, 1).front(); };
    const DataSet x0 = rep(theta);
    const double d0 = evaluate_divergence(m, x0, theta);
    // D(m_theta || m_zeta) as a function of the second argument.
    const Mat g_ind = fd_hessian([&](const Vec& z) { return evaluate_divergence(m, x0, z) - d0; }, theta, &m.chart,
                                 opts.diff);
    const Mat g = metric_at(m, theta, opts).g;
    InducedCheck r;
    r.metric_residual = max_abs(Mat(g_ind - g)) / max_abs(g);
    // w^k_ij = -g^{ks} d_{xi^s} d_i d_j D(m_xi || m_theta)
    const Mat ginv = g.inverse();
    std::vector<Mat> T;
    for (int s = 0; s < n; ++s)
        T.push_back(fd_matrix_derivative(
            [&](const Vec& xi) { return divergence_hessian(m, rep(xi), theta, opts.numeric, opts.diff); }, theta, s,
            &m.chart, opts.diff));
    Tensor3 w_ind(n);
    for (int k = 0; k < n; ++k)
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) {
                double acc = 0;
                for (int s = 0; s < n; ++s) acc -= ginv(k, s) * T[s](i, j);
                w_ind(k, i, j) = acc;
            }
    const Tensor3 w = connection_field(m, theta, opts);
    r.connection_residual = (w_ind - w).max_abs() / std::max(w.max_abs(), 1.0);
    return r;
}

double affine_gauge_residual(const std::vector<Vec>& values, const std::vector<Vec>& reference) {
    const int N = static_cast<int>(values.size());
    const int n = static_cast<int>(values.front().size());
    const int q = static_cast<int>(reference.front().size());
    Mat X(N, q + 1), Y(N, n);
    for (int i = 0; i < N; ++i) {
        X.row(i).head(q) = reference[i].transpose();
        X(i, q) = 1.0;
        Y.row(i) = values[i].transpose();
    }
    const Mat coef = X.colPivHouseholderQr().solve(Y);
    const Mat res = Y - X * coef;
    double spread = 0;
    for (int j = 0; j < n; ++j) spread = std::max(spread, Y.col(j).maxCoeff() - Y.col(j).minCoeff());
    return relative(res.cwiseAbs().maxCoeff(), spread);
}

double massieu_gauge_residual(const std::vector<double>& phi, const std::vector<double>& reference,
                              const std::vector<Vec>& affine) {
    const int N = static_cast<int>(phi.size());
    const int q = static_cast<int>(affine.front().size());
    Mat X(N, q + 1);
    Vec y(N);
    for (int i = 0; i < N; ++i) {
        X.row(i).head(q) = affine[i].transpose();
        X(i, q) = 1.0;
        y(i) = phi[i] - reference[i];
    }
    const Vec coef = X.colPivHouseholderQr().solve(y);
    const Vec res = y - X * coef;
    const auto [lo, hi] = std::minmax_element(reference.begin(), reference.end());
    return relative(res.cwiseAbs().maxCoeff(), *hi - *lo);
}

} // namespace dsm
