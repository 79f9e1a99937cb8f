#pragma once

#include "dsm/chart.hpp"
#include "dsm/data.hpp"
#include "dsm/numdiff.hpp"

#include <functional>
#include <optional>
#include <random>
#include <string>
#include <vector>

namespace dsm {

enum class DivergenceKind { KL, Other };

struct StatisticSpec {
    std::string id;
    bool parameter_dependent = false;
};

/// One off-fibre probe family: curve(theta, c, eps) is a data set whose fit
/// moves away from theta along the c-th probe direction; eps = 0 lies on the fibre.
struct ProbeFamily {
    std::string name;
    std::function<DataSet(const Vec& theta, int c, double eps)> curve;
};

/// Closed forms used only for testing and reporting.
struct Oracle {
    std::function<Mat(const Vec&)> metric;
    std::function<Tensor3(const Vec&)> connection;
    std::function<Vec(const Vec&)> affine;
    /// Massieu potential; defined up to an affine function of the affine coordinates.
    std::function<double(const Vec&)> massieu;
};

struct ModelDefinition {
    std::string name;
    ChartSpec chart;
    std::vector<StatisticSpec> statistics;
    DivergenceKind kind = DivergenceKind::Other;

    std::function<double(const DataSet&, const Vec&)> divergence;
    std::function<Vec(const DataSet&, const Vec&)> gradient;
    std::function<Mat(const DataSet&, const Vec&)> hessian;

    /// Returns up to k data sets fitted to theta; may return fewer when the
    /// fibre is only partially known.
    std::function<std::vector<DataSet>(const Vec&, int)> fibre_sampler;
    std::vector<ProbeFamily> probes;
    std::function<std::optional<Vec>(const DataSet&)> closed_form_fit;

    std::function<std::vector<Vec>()> default_grid;
    std::function<Vec(std::mt19937_64&)> random_point;
    std::function<DataSet(std::mt19937_64&)> random_data;

    /// Scalar read off a fibre member's Hessian to quantify a Condition-4 failure.
    std::function<double(const Vec&, const Mat&)> varying_term;
    std::string varying_term_label;

    bool expect_condition4_fail = false;
    Oracle oracle;
};

double evaluate_divergence(const ModelDefinition& m, const DataSet& x, const Vec& theta);
/// numeric forces the finite-difference path even when analytic derivatives exist.
Vec divergence_gradient(const ModelDefinition& m, const DataSet& x, const Vec& theta, bool numeric = false,
                        const DiffConfig& cfg = {});
Mat divergence_hessian(const ModelDefinition& m, const DataSet& x, const Vec& theta, bool numeric = false,
                       const DiffConfig& cfg = {});

/// The same model seen through another chart. Analytic derivatives are dropped.
ModelDefinition reparametrize(const ModelDefinition& m, const ChartMap& map);

/// Grid of 5 points per axis over the central 60% of the chart region, unless
/// the model supplies its own.
std::vector<Vec> default_grid(const ModelDefinition& m, int per_axis = 5);
Vec random_point(const ModelDefinition& m, std::mt19937_64& rng);

} // namespace dsm
