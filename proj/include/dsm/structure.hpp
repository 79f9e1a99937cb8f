#pragma once

#include "dsm/geometry.hpp"

#include <optional>
#include <string>
#include <vector>

namespace dsm {

struct Tolerances {
    double cond4 = 1e-3;
    double hess = 1e-3;
    double torsion = 1e-3;
    double flat = 1e-3;
    double codazzi = 1e-3;
    double path = 1e-4;
    double massieu = 1e-3;
    double pythagoras = 1e-6;
};

struct StructureOptions {
    GeometryOptions geometry;
    Tolerances tol;
    /// RK4 steps per straight path segment.
    int steps = 400;
};

enum class Verdict { Pass, Fail, NotEvaluated };
const char* verdict_name(Verdict v);

struct PointReport {
    Vec theta;
    bool condition4 = false;
    double cond4_deviation = 0.0;
    std::vector<double> varying_terms;
    std::optional<double> probe_consistency;
    std::optional<double> torsion;
    std::optional<double> curvature;
    std::optional<double> codazzi;
    std::string failure;
};

struct GeometryReport {
    std::string model;
    bool kl = false;
    std::vector<PointReport> points;
    Verdict condition4 = Verdict::NotEvaluated;
    Verdict probe_consistency = Verdict::NotEvaluated;
    Verdict hessian_structure = Verdict::NotEvaluated;
    Verdict torsionless = Verdict::NotEvaluated;
    Verdict flat = Verdict::NotEvaluated;
    Verdict codazzi = Verdict::NotEvaluated;
    /// "yes", "no" or "not-applicable"
    std::string exponential_family;
    double worst_cond4 = 0.0;
    double worst_probe = 0.0;
    double worst_torsion = 0.0;
    double worst_curvature = 0.0;
    double worst_codazzi = 0.0;
    /// Ratio of the model's varying Hessian term across the fibre, at the worst point.
    std::optional<double> varying_ratio;
    std::string varying_term_label;
    Tolerances tol;
};

/// Runs the fibre test, probes, torsion, curvature and Codazzi checks at every grid point. Fibre and probe failures
/// become verdicts, never exceptions.
GeometryReport classify(const ModelDefinition& m, const std::vector<Vec>& grid, const StructureOptions& opts = {});

struct AffineCoordinateMap {
    Vec theta0;
    std::vector<Vec> targets;
    /// values[t](j) = Theta^j at target t, along the straight path.
    std::vector<Vec> values;
    /// gradients[t](b, j) = d_b Theta^j
    std::vector<Mat> gradients;
    std::vector<Vec> values_alt;
    double path_residual = 0.0;
    int steps = 0;
};

/// Throws NotFlat when the straight and axis-aligned paths disagree.
AffineCoordinateMap affine_coordinates(const ModelDefinition& m, const Vec& theta0, const std::vector<Vec>& targets,
                                       const StructureOptions& opts = {});
/// Theta and its gradient at one target (straight path only).
std::pair<Vec, Mat> affine_point(const ModelDefinition& m, const Vec& theta0, const Vec& target,
                                 const StructureOptions& opts = {});
/// max-abs of the connection expressed in the affine chart at target.
double affine_connection_residual(const ModelDefinition& m, const Vec& theta0, const Vec& target,
                                  const StructureOptions& opts = {});

struct MassieuSample {
    Vec theta0;
    std::vector<Vec> targets;
    std::vector<double> phi;
    std::vector<Vec> alpha;
    std::vector<Vec> alpha_alt;
    double path_residual = 0.0;
    double curl_residual = 0.0;
    double hessian_residual = 0.0;
};

/// Throws NotIntegrable when the two paths disagree on alpha.
MassieuSample massieu(const ModelDefinition& m, const Vec& theta0, const std::vector<Vec>& targets,
                      const StructureOptions& opts = {});
/// (Phi, alpha) at one point along the straight path from theta0.
std::pair<double, Vec> massieu_point(const ModelDefinition& m, const Vec& theta0, const Vec& target,
                                     const StructureOptions& opts = {});

struct PythagorasResult {
    double deviation = 0.0;
    double induced_value = 0.0;
    std::vector<double> differences;
};

PythagorasResult pythagorean_check(const ModelDefinition& m, const Vec& theta, const Vec& m_other, int fibre_k = 3);

struct InducedCheck {
    double metric_residual = 0.0;
    double connection_residual = 0.0;
};

InducedCheck induced_divergence_geometry_check(const ModelDefinition& m, const Vec& theta,
                                               const GeometryOptions& opts = {});

/// Least-squares fit of reference ~ A*target + b; returns max-abs residual
/// relative to the spread of the reference values.
double affine_gauge_residual(const std::vector<Vec>& values, const std::vector<Vec>& reference);

/// Fits phi - reference ~ c'Theta + b over the samples; returns the max-abs
/// residual relative to the spread of reference.
double massieu_gauge_residual(const std::vector<double>& phi, const std::vector<double>& reference,
                              const std::vector<Vec>& affine);

} // namespace dsm
