#pragma once

#include "dsm/chart.hpp"

#include <functional>

namespace dsm {

struct DiffConfig {
    double rel_step = 1e-4;
    double abs_step_floor = 1e-7;
    bool richardson = true;
    /// Per-coordinate characteristic lengths; empty means max(|theta_i|, 1).
    Vec scale;
    /// Outer step of second derivatives, as a multiple of the first-derivative step.
    double second_order_factor = 10.0;
    double agree_tol = 1e-3;
};

using ScalarField = std::function<double(const Vec&)>;
using VectorField = std::function<Vec(const Vec&)>;

/// chart may be null for an unbounded domain.
Vec fd_gradient(const ScalarField& f, const Vec& theta, const ChartSpec* chart = nullptr, const DiffConfig& cfg = {});
Mat fd_hessian(const ScalarField& f, const Vec& theta, const ChartSpec* chart = nullptr, const DiffConfig& cfg = {});
/// Derivative of a flattened tensor field along coordinate a.
Vec fd_field_derivative(const VectorField& F, const Vec& theta, int a, const ChartSpec* chart = nullptr,
                        const DiffConfig& cfg = {});
/// Columns are the derivatives along each coordinate.
Mat fd_jacobian(const VectorField& F, const Vec& theta, const ChartSpec* chart = nullptr, const DiffConfig& cfg = {});

Mat fd_matrix_derivative(const std::function<Mat(const Vec&)>& F, const Vec& theta, int a,
                         const ChartSpec* chart = nullptr, const DiffConfig& cfg = {});
Tensor3 fd_tensor_derivative(const std::function<Tensor3(const Vec&)>& F, const Vec& theta, int a,
                             const ChartSpec* chart = nullptr, const DiffConfig& cfg = {});

} // namespace dsm
