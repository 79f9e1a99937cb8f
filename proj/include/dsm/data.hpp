#pragma once

#include "dsm/tensor.hpp"

#include <Eigen/Dense>

#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace dsm {

/// Statistic identifiers shared by the built-in models.
namespace stat {
inline constexpr const char* mean = "mean";
inline constexpr const char* second_moment = "second_moment";
inline constexpr const char* entropy = "entropy";
// E[(x-mu)^k exp(-alpha (x-mu))] with theta = (alpha, mu)
inline constexpr const char* exp_tilt_0 = "exp_tilt_0";
inline constexpr const char* exp_tilt_1 = "exp_tilt_1";
inline constexpr const char* exp_tilt_2 = "exp_tilt_2";
inline constexpr const char* x1 = "x1";
inline constexpr const char* x2 = "x2";
inline constexpr const char* x3 = "x3";
inline constexpr const char* occupation_total = "occupation_total";
inline constexpr const char* energy_total = "energy_total";
inline constexpr const char* count = "count";
inline constexpr const char* sum_x = "sum_x";
inline constexpr const char* sum_y = "sum_y";
inline constexpr const char* sum_xx = "sum_xx";
inline constexpr const char* sum_xy = "sum_xy";
inline constexpr const char* sum_yy = "sum_yy";
} // namespace stat

struct StatisticQuery {
    std::string id;
    std::optional<Vec> theta;
};

struct Gaussian { double mean; double sd; };
struct Uniform { double lo; double hi; };
/// Equal masses at lo and hi.
struct TwoPoint { double lo; double hi; };
struct Exponential { double rate; };
struct Gumbel { double alpha; double mode; };
struct VonMisesFisher { double kappa; Eigen::Vector3d direction; };

using Distribution = std::variant<Gaussian, Uniform, TwoPoint, Exponential, Gumbel, VonMisesFisher>;

struct MomentSpecified {
    std::map<std::string, double> values;
};

/// Weighted scalar points. The entropy is reported as 0, a constant offset
/// that drops out of every derivative.
struct EmpiricalSample {
    std::vector<double> points;
    std::vector<double> weights;
};

struct RegressionSample {
    std::vector<double> x;
    std::vector<double> y;
};

/// Expectation provider: a data set is known only through the statistics it answers.
class DataSet {
public:
    enum class Kind { AnalyticDistribution, MomentSpecified, EmpiricalSample, RegressionSample };
    using Payload = std::variant<Distribution, MomentSpecified, EmpiricalSample, RegressionSample>;

    static DataSet analytic(Distribution d);
    static DataSet moments(std::map<std::string, double> values);
    static DataSet empirical(std::vector<double> points, std::vector<double> weights = {});
    static DataSet regression(std::vector<double> x, std::vector<double> y);

    Kind kind() const;
    const Payload& payload() const { return payload_; }

    double expectation(const StatisticQuery& q) const;
    double expectation(std::string_view id) const { return expectation(StatisticQuery{std::string(id), std::nullopt}); }
    double expectation(std::string_view id, const Vec& theta) const {
        return expectation(StatisticQuery{std::string(id), theta});
    }

    std::string describe() const;

private:
    explicit DataSet(Payload p) : payload_(std::move(p)) {}
    Payload payload_;
};

/// E[(x-c)^k exp(-s (x-c))] for the scalar analytic families, k = 0..3.
double tilted_moment(const Distribution& d, int k, double s, double c);

/// Shannon/differential entropy of an analytic distribution.
double entropy(const Distribution& d);

const char* kind_name(DataSet::Kind k);

} // namespace dsm
