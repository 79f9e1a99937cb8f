#pragma once

#include "dsm/geometry.hpp"

#include <string>
#include <vector>

namespace dsm {

struct TraceSample {
    double t = 0.0;
    Vec theta;
    Vec v;
};

struct Trace {
    enum class Kind { Geodesic, ParallelTransport, CovariantField, AffineGrid };
    Kind kind = Kind::Geodesic;
    std::vector<std::string> coord_names;
    std::vector<TraceSample> samples;
    double step = 0.0;
    int order = 4;
    bool domain_exit = false;
    std::string note;
};

const char* trace_kind_name(Trace::Kind k);

/// RK4 on theta'' = -w(theta', theta'). step <= 0 means 1e-3 * t_end.
/// A trajectory leaving the chart stops early with domain_exit set.
Trace geodesic(const ModelDefinition& m, const Vec& theta0, const Vec& v0, double t_end, double step = 0.0,
               const GeometryOptions& opts = {});

/// Transport of v0 along the polygon through the curve points; t is the
/// cumulative segment index. substeps RK4 steps per segment.
Trace parallel_transport(const ModelDefinition& m, const std::vector<Vec>& curve, const Vec& v0, int substeps = 50,
                         const GeometryOptions& opts = {});

struct FieldResult {
    Trace trace;
    double spot_check_residual = 0.0;
};

/// Transports v0 from theta0 to every grid point along straight paths, then
/// re-derives three grid points along axis-aligned paths. Throws NotFlat when
/// those disagree by more than tol.
FieldResult covariant_constant_field(const ModelDefinition& m, const Vec& theta0, const Vec& v0,
                                     const std::vector<Vec>& grid, int substeps = 200, double tol = 1e-3,
                                     const GeometryOptions& opts = {});

} // namespace dsm
