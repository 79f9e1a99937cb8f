#pragma once

#include "dsm/errors.hpp"
#include "dsm/model.hpp"

#include <optional>
#include <string>
#include <vector>

namespace dsm {

struct GeometryOptions {
    int fibre_k = 3;
    double cond4_tol = 1e-3;
    double hess_tol = 1e-3;
    /// Step along probe curves, in the curve's own parameter.
    double probe_step = 1e-3;
    double max_probe_condition = 1e8;
    bool numeric = false;
    DiffConfig diff;
};

struct MetricResult {
    Mat g;
    /// Max pairwise relative deviation of the fibre Hessians.
    double deviation = 0.0;
    std::vector<Mat> member_hessians;
    std::vector<std::string> members;
    /// Model-specific scalar per member, when the model defines one.
    std::vector<double> varying_terms;
    std::string varying_term_label;
};

class Condition4Violated : public Error {
public:
    Condition4Violated(const std::string& what, MetricResult ev) : Error(what), evidence(std::move(ev)) {}
    MetricResult evidence;
    /// max/min of the varying terms, or NaN.
    double varying_ratio() const;
};

struct ConnectionResult {
    Tensor3 omega;
    /// Relative disagreement between the first two probe families; NaN with one family.
    double probe_consistency = 0.0;
    std::vector<Tensor3> per_family;
    double probe_condition = 0.0;
};

MetricResult metric_at(const ModelDefinition& m, const Vec& theta, const GeometryOptions& opts = {});

/// Throws HessianStructureViolated when check is set and the families disagree.
ConnectionResult connection_at(const ModelDefinition& m, const Vec& theta, const GeometryOptions& opts = {},
                               bool check = true);

/// Connection from one probe family only; the field used by integrators.
Tensor3 connection_field(const ModelDefinition& m, const Vec& theta, const GeometryOptions& opts = {}, int family = 0);

Tensor3 dual_connection_at(const ModelDefinition& m, const Vec& theta, const GeometryOptions& opts = {});
Tensor4 curvature_at(const ModelDefinition& m, const Vec& theta, const GeometryOptions& opts = {});
/// r(a, b, c) = d_a g_bc - d_b g_ac + g_ad w^d_bc - g_bd w^d_ac
Tensor3 codazzi_residual(const ModelDefinition& m, const Vec& theta, const GeometryOptions& opts = {});
double torsion_residual(const Tensor3& omega);

/// Relative max-abs of g_theta - J' g_zeta J. Difference steps in the target
/// chart use the theta scales carried through J unless diff.scale is set.
double metric_transform_check(const ModelDefinition& m, const ChartMap& map, const Vec& theta,
                              const GeometryOptions& opts = {});

struct CramerRaoResult {
    double worst_margin = 0.0;
    std::optional<double> worst_affine_margin;
    int trials = 0;
};

CramerRaoResult cramer_rao_check(const ModelDefinition& m, const Vec& theta, int trials, unsigned long long seed,
                                 const GeometryOptions& opts = {});
/// (v'gv)(w'gw) - (v'gw)^2
double cauchy_schwarz_margin(const Mat& g, const Vec& v, const Vec& w);

} // namespace dsm
