#include "dsm/transport.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace dsm {

namespace {

constexpr double kMaxStepError = 1e-4;

Vec geodesic_rhs(const ModelDefinition& m, const GeometryOptions& opts, const Vec& y) {
    const int n = m.chart.dim();
    const Vec th = y.head(n), v = y.tail(n);
    m.chart.require(th);
    const Tensor3 w = connection_field(m, th, opts);
    Vec out(2 * n);
    out.head(n) = v;
    for (int k = 0; k < n; ++k) {
        double acc = 0;
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) acc += w(k, i, j) * v(i) * v(j);
        out(n + k) = -acc;
    }
    return out;
}

// dY^j/dt = -w^j_ik dz^i Y^k along the segment a -> b, t in [0, 1].
Vec transport_segment(const ModelDefinition& m, const GeometryOptions& opts, const Vec& a, const Vec& b, Vec y,
                      int steps) {
    const int n = m.chart.dim();
    const Vec dz = b - a;
    if (dz.cwiseAbs().maxCoeff() == 0.0) return y;
    auto rhs = [&](double t, const Vec& Y) {
        const Vec z = a + t * dz;
        m.chart.require(z);
        const Tensor3 w = connection_field(m, z, opts);
        Vec out(n);
        for (int j = 0; j < n; ++j) {
            double acc = 0;
            for (int i = 0; i < n; ++i)
                for (int k = 0; k < n; ++k) acc += w(j, i, k) * dz(i) * Y(k);
            out(j) = -acc;
        }
        return out;
    };
    const double h = 1.0 / steps;
    for (int s = 0; s < steps; ++s) {
        const double t = s * h;
        const Vec k1 = rhs(t, y);
        const Vec k2 = rhs(t + 0.5 * h, y + 0.5 * h * k1);
        const Vec k3 = rhs(t + 0.5 * h, y + 0.5 * h * k2);
        const Vec k4 = rhs(t + h, y + h * k3);
        y += (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4);
    }
    return y;
}

Vec transport_polygon(const ModelDefinition& m, const GeometryOptions& opts, const std::vector<Vec>& pts, Vec y,
                      int steps) {
    for (size_t i = 1; i < pts.size(); ++i) y = transport_segment(m, opts, pts[i - 1], pts[i], y, steps);
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

} // namespace

const char* trace_kind_name(Trace::Kind k) {
    switch (k) {
    case Trace::Kind::Geodesic: return "geodesic";
    case Trace::Kind::ParallelTransport: return "parallel_transport";
    case Trace::Kind::CovariantField: return "covariant_field";
    case Trace::Kind::AffineGrid: return "affine_grid";
    }
    return "?";
}

Trace geodesic(const ModelDefinition& m, const Vec& theta0, const Vec& v0, double t_end, double step,
               const GeometryOptions& opts) {
    m.chart.require(theta0);
    const int n = m.chart.dim();
    Trace tr;
    tr.kind = Trace::Kind::Geodesic;
    tr.coord_names = m.chart.names;
    const int steps = step > 0 ? static_cast<int>(std::ceil(std::abs(t_end) / step - 1e-9)) : 1000;
    const double h = steps > 0 ? t_end / steps : 0.0;
    tr.step = h;
    Vec y(2 * n);
    y << theta0, v0;
    tr.samples.push_back({0.0, theta0, v0});
    auto rk4 = [&](const Vec& y0, double dt) {
        const Vec k1 = geodesic_rhs(m, opts, y0);
        const Vec k2 = geodesic_rhs(m, opts, y0 + 0.5 * dt * k1);
        const Vec k3 = geodesic_rhs(m, opts, y0 + 0.5 * dt * k2);
        const Vec k4 = geodesic_rhs(m, opts, y0 + dt * k3);
        return Vec(y0 + (dt / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4));
    };
    for (int s = 0; s < steps; ++s) {
        try {
            const Vec next = rk4(y, h);
            m.chart.require(next.head(n));
            // step doubling catches blow-up that never leaves the box
            const Vec fine = rk4(rk4(y, 0.5 * h), 0.5 * h);
            const double err = (next - fine).cwiseAbs().maxCoeff() / (1.0 + fine.cwiseAbs().maxCoeff());
            if (!next.allFinite() || !(err <= kMaxStepError)) {
                tr.domain_exit = true;
                std::ostringstream os;
                os << "geodesic not resolved at t = " << s * h << " (step-doubling error " << err << ")";
                tr.note = os.str();
                break;
            }
            y = next;
        } catch (const DomainError& e) {
            tr.domain_exit = true;
            tr.note = e.what();
            break;
        }
        tr.samples.push_back({(s + 1) * h, y.head(n), y.tail(n)});
    }
    return tr;
}

Trace parallel_transport(const ModelDefinition& m, const std::vector<Vec>& curve, const Vec& v0, int substeps,
                         const GeometryOptions& opts) {
    Trace tr;
    tr.kind = Trace::Kind::ParallelTransport;
    tr.coord_names = m.chart.names;
    tr.step = 1.0 / substeps;
    if (curve.empty()) return tr;
    m.chart.require(curve.front());
    Vec y = v0;
    tr.samples.push_back({0.0, curve.front(), y});
    for (size_t i = 1; i < curve.size(); ++i) {
        y = transport_segment(m, opts, curve[i - 1], curve[i], y, substeps);
        tr.samples.push_back({static_cast<double>(i), curve[i], y});
    }
    return tr;
}

FieldResult covariant_constant_field(const ModelDefinition& m, const Vec& theta0, const Vec& v0,
                                     const std::vector<Vec>& grid, int substeps, double tol,
                                     const GeometryOptions& opts) {
    m.chart.require(theta0);
    FieldResult r;
    r.trace.kind = Trace::Kind::CovariantField;
    r.trace.coord_names = m.chart.names;
    r.trace.step = 1.0 / substeps;
    for (size_t i = 0; i < grid.size(); ++i) {
        const Vec v = transport_polygon(m, opts, {theta0, grid[i]}, v0, substeps);
        r.trace.samples.push_back({static_cast<double>(i), grid[i], v});
    }
    if (!grid.empty()) {
        const size_t picks[3] = {0, grid.size() / 2, grid.size() - 1};
        for (size_t p : picks) {
            const Vec alt = transport_polygon(m, opts, l_path(theta0, grid[p]), v0, substeps);
            const Vec& v = r.trace.samples[p].v;
            const double scale = std::max({v.cwiseAbs().maxCoeff(), v0.cwiseAbs().maxCoeff(), 1e-300});
            r.spot_check_residual = std::max(r.spot_check_residual, (alt - v).cwiseAbs().maxCoeff() / scale);
        }
    }
    if (r.spot_check_residual > tol) {
        std::ostringstream os;
        os << "transported field of model '" << m.name << "' depends on the path: residual "
           << r.spot_check_residual;
        throw NotFlat(os.str());
    }
    return r;
}

} // namespace dsm
