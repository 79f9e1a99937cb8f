#pragma once

#include "dsm/model.hpp"

namespace dsm {

struct FitOptions {
    double grad_tol = 1e-9;
    int max_iter = 200;
    double armijo_c = 1e-4;
    double shrink = 0.5;
    double boundary_margin = 1e-9;
    bool numeric = false;
    DiffConfig diff;
};

struct FitResult {
    ParameterPoint theta_star;
    double divergence_value = 0.0;
    double gradient_norm = 0.0;
    int iterations = 0;
    bool converged = false;
};

/// Local minimiser of theta -> D(x || m_theta) by damped Newton with an Armijo
/// line search, falling back to steepest descent where the Hessian is not PD.
FitResult fit(const ModelDefinition& m, const DataSet& x, const Vec& theta0, const FitOptions& opts = {});

/// Throws Unsupported when the model has no closed form for this data set.
Vec closed_form_fit(const ModelDefinition& m, const DataSet& x);

} // namespace dsm
