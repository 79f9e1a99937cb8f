#include "dsm/numdiff.hpp"
#include "dsm/errors.hpp"

#include <cmath>
#include <limits>
#include <sstream>

namespace dsm {

namespace {

enum class Stencil { Central, Forward, Backward };

double coord_scale(const Vec& theta, int a, const DiffConfig& cfg) {
    if (cfg.scale.size() == theta.size()) return cfg.scale(a);
    return std::max(std::abs(theta(a)), 1.0);
}

Vec shifted(const Vec& theta, int a, double off) {
    Vec t = theta;
    t(a) += off;
    return t;
}

bool inside(const ChartSpec* chart, const Vec& t) { return chart == nullptr || chart->contains(t); }

Vec eval_field(const VectorField& F, const Vec& t) {
    Vec v = F(t);
    for (Eigen::Index i = 0; i < v.size(); ++i)
        if (!std::isfinite(v(i))) throw NumericalFailure("non-finite field value on a difference stencil");
    return v;
}

// Chooses a stencil that keeps every evaluation inside the chart; shrinks h when
// neither side leaves room for two steps.
Stencil choose(const ChartSpec* chart, const Vec& theta, int a, double& h) {
    for (int attempt = 0; attempt < 60; ++attempt) {
        const bool plus = inside(chart, shifted(theta, a, h)) && inside(chart, shifted(theta, a, 2 * h));
        const bool minus = inside(chart, shifted(theta, a, -h)) && inside(chart, shifted(theta, a, -2 * h));
        if (plus && minus) return Stencil::Central;
        if (plus) return Stencil::Forward;
        if (minus) return Stencil::Backward;
        h *= 0.5;
    }
    throw DomainError("no finite-difference stencil fits inside the chart");
}

Vec one_level(const VectorField& F, const Vec& theta, int a, const Vec& f0, double h, Stencil s) {
    switch (s) {
    case Stencil::Central:
        return (eval_field(F, shifted(theta, a, h)) - eval_field(F, shifted(theta, a, -h))) / (2 * h);
    case Stencil::Forward:
        return (-3.0 * f0 + 4.0 * eval_field(F, shifted(theta, a, h)) - eval_field(F, shifted(theta, a, 2 * h))) / (2 * h);
    case Stencil::Backward:
        return (3.0 * f0 - 4.0 * eval_field(F, shifted(theta, a, -h)) + eval_field(F, shifted(theta, a, -2 * h))) / (2 * h);
    }
    return {};
}

Vec derivative_along(const VectorField& F, const Vec& theta, int a, const Vec& f0, double h, const ChartSpec* chart,
                     const DiffConfig& cfg) {
    const Stencil s = choose(chart, theta, a, h);
    const Vec d1 = one_level(F, theta, a, f0, h, s);
    if (!cfg.richardson) return d1;
    const Vec d2 = one_level(F, theta, a, f0, 0.5 * h, s);
    const Vec r = (4.0 * d2 - d1) / 3.0;
    const double spread = (d1 - d2).cwiseAbs().maxCoeff();
    const double magnitude =
        std::max(r.cwiseAbs().maxCoeff(), 1e-3 * (1.0 + f0.cwiseAbs().maxCoeff()) / coord_scale(theta, a, cfg));
    if (spread > cfg.agree_tol * magnitude) {
        std::ostringstream os;
        os << "Richardson levels disagree along coordinate " << a << ": spread " << spread << " vs scale "
           << magnitude;
        throw NumericalFailure(os.str());
    }
    return r;
}

double first_step(const Vec& theta, int a, const DiffConfig& cfg) {
    return std::max(cfg.rel_step * coord_scale(theta, a, cfg), cfg.abs_step_floor);
}

void check_point(const ChartSpec* chart, const Vec& theta) {
    if (chart) chart->require(theta);
}

} // namespace

Vec fd_field_derivative(const VectorField& F, const Vec& theta, int a, const ChartSpec* chart, const DiffConfig& cfg) {
    check_point(chart, theta);
    const Vec f0 = eval_field(F, theta);
    return derivative_along(F, theta, a, f0, first_step(theta, a, cfg), chart, cfg);
}

Mat fd_jacobian(const VectorField& F, const Vec& theta, const ChartSpec* chart, const DiffConfig& cfg) {
    check_point(chart, theta);
    const Vec f0 = eval_field(F, theta);
    Mat J(f0.size(), theta.size());
    for (int a = 0; a < theta.size(); ++a)
        J.col(a) = derivative_along(F, theta, a, f0, first_step(theta, a, cfg), chart, cfg);
    return J;
}

Vec fd_gradient(const ScalarField& f, const Vec& theta, const ChartSpec* chart, const DiffConfig& cfg) {
    VectorField F = [&](const Vec& t) { return Vec::Constant(1, f(t)); };
    return fd_jacobian(F, theta, chart, cfg).row(0).transpose();
}

Mat fd_hessian(const ScalarField& f, const Vec& theta, const ChartSpec* chart, const DiffConfig& cfg) {
    check_point(chart, theta);
    const int n = static_cast<int>(theta.size());
    // Jacobian of the difference gradient, with a coarser outer step.
    VectorField grad = [&](const Vec& t) { return fd_gradient(f, t, chart, cfg); };
    const Vec g0 = grad(theta);
    Mat H(n, n);
    for (int a = 0; a < n; ++a)
        H.row(a) = derivative_along(grad, theta, a, g0, cfg.second_order_factor * first_step(theta, a, cfg), chart,
                                    cfg)
                       .transpose();
    const double norm = H.cwiseAbs().maxCoeff();
    const double asym = (H - H.transpose()).cwiseAbs().maxCoeff();
    if (norm > 0 && asym > cfg.agree_tol * norm && asym > 1e-7) {
        std::ostringstream os;
        os << "finite-difference Hessian asymmetry " << asym / norm << " exceeds " << cfg.agree_tol;
        throw NumericalFailure(os.str());
    }
    return 0.5 * (H + H.transpose());
}

Mat fd_matrix_derivative(const std::function<Mat(const Vec&)>& F, const Vec& theta, int a, const ChartSpec* chart,
                         const DiffConfig& cfg) {
    const Mat m0 = F(theta);
    const auto r = m0.rows(), c = m0.cols();
    VectorField flat = [&](const Vec& t) -> Vec {
        Mat m = F(t);
        return Eigen::Map<const Vec>(m.data(), m.size());
    };
    Vec d = fd_field_derivative(flat, theta, a, chart, cfg);
    return Eigen::Map<const Mat>(d.data(), r, c);
}

Tensor3 fd_tensor_derivative(const std::function<Tensor3(const Vec&)>& F, const Vec& theta, int a,
                             const ChartSpec* chart, const DiffConfig& cfg) {
    int n = 0;
    VectorField flat = [&](const Vec& t) -> Vec {
        Tensor3 x = F(t);
        n = x.dim();
        return x.flat();
    };
    Vec d = fd_field_derivative(flat, theta, a, chart, cfg);
    return Tensor3::from_flat(n, d);
}

} // namespace dsm
