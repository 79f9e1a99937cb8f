#pragma once

#include "dsm/tensor.hpp"

#include <functional>
#include <string>
#include <vector>

namespace dsm {

/// Open box domain with an optional extra admissibility constraint, plus a
/// finite region used for grids and random sampling.
struct ChartSpec {
    std::string id;
    std::vector<std::string> names;
    Vec lo;
    Vec hi;
    Vec region_lo;
    Vec region_hi;
    std::function<bool(const Vec&)> admissible;

    int dim() const { return static_cast<int>(names.size()); }
    bool contains(const Vec& theta) const;
    /// Throws DomainError with a readable message when theta is outside.
    void require(const Vec& theta) const;
};

ChartSpec unbounded_chart(int n, std::string id = "R^n");

struct ParameterPoint {
    Vec coords;
    std::string chart_id;
};

/// Smooth bijection between two charts.
struct ChartMap {
    ChartSpec target;
    std::function<Vec(const Vec&)> forward;
    std::function<Vec(const Vec&)> inverse;
    /// Optional exact derivatives; finite differences are used when absent.
    /// jacobian(theta)(a, i) = d zeta^a / d theta^i.
    std::function<Mat(const Vec&)> jacobian;
    /// inverse_jacobian(zeta)(i, a) = d theta^i / d zeta^a.
    std::function<Mat(const Vec&)> inverse_jacobian;
    /// inverse_hessians(zeta)[i] = second derivatives of theta^i in zeta.
    std::function<std::vector<Mat>(const Vec&)> inverse_hessians;
};

ChartMap identity_map(const ChartSpec& chart);

} // namespace dsm
