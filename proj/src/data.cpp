#include "dsm/data.hpp"
#include "dsm/errors.hpp"

#include <boost/math/constants/constants.hpp>
#include <boost/math/special_functions/digamma.hpp>
#include <boost/math/special_functions/polygamma.hpp>
#include <boost/math/special_functions/trigamma.hpp>

#include <cmath>
#include <numeric>
#include <sstream>

namespace dsm {

namespace {

constexpr double kPi = boost::math::constants::pi<double>();
constexpr double kEuler = boost::math::constants::euler<double>();

template <class... Ts> struct overloaded : Ts... { using Ts::operator()...; };

double binom(int n, int k) {
    double r = 1.0;
    for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
    return r;
}

double factorial(int k) {
    double r = 1.0;
    for (int i = 2; i <= k; ++i) r *= i;
    return r;
}

// Raw moments of N(a, v), orders 0..3.
double normal_raw_moment(int k, double a, double v) {
    switch (k) {
    case 0: return 1.0;
    case 1: return a;
    case 2: return a * a + v;
    case 3: return a * a * a + 3.0 * a * v;
    default: throw Unsupported("tilted moment order above 3");
    }
}

// Antiderivative of y^k e^{-s y}.
double tilt_antiderivative(int k, double s, double y) {
    if (s == 0.0) return std::pow(y, k + 1) / (k + 1);
    double sum = 0.0;
    double falling = 1.0;
    for (int j = 0; j <= k; ++j) {
        sum += falling * std::pow(y, k - j) / std::pow(s, j + 1);
        falling *= (k - j);
    }
    return -std::exp(-s * y) * sum;
}

// Derivatives of Gamma at z, orders 0..3.
double gamma_derivative(int j, double z) {
    const double g = std::tgamma(z);
    const double p0 = boost::math::digamma(z);
    const double p1 = boost::math::trigamma(z);
    switch (j) {
    case 0: return g;
    case 1: return g * p0;
    case 2: return g * (p0 * p0 + p1);
    case 3: return g * (p0 * p0 * p0 + 3.0 * p0 * p1 + boost::math::polygamma(2, z));
    default: throw Unsupported("tilted moment order above 3");
    }
}

double log_sinh(double k) { return k + std::log1p(-std::exp(-2.0 * k)) - std::log(2.0); }

double vmf_mean_length(double k) { return 1.0 / std::tanh(k) - 1.0 / k; }

double tilt_order(std::string_view id) {
    if (id == stat::exp_tilt_0) return 0;
    if (id == stat::exp_tilt_1) return 1;
    if (id == stat::exp_tilt_2) return 2;
    return -1;
}

[[noreturn]] void missing(std::string_view id, const char* who) {
    throw MissingStatistic(std::string(who) + " cannot answer statistic '" + std::string(id) + "'");
}

const Vec& need_theta(const StatisticQuery& q) {
    if (!q.theta || q.theta->size() != 2)
        throw MissingStatistic("statistic '" + q.id + "' needs a parameter point (alpha, mu)");
    return *q.theta;
}

double answer(const Distribution& d, const StatisticQuery& q) {
    const std::string& id = q.id;
    if (const int k = static_cast<int>(tilt_order(id)); k >= 0) {
        if (std::holds_alternative<VonMisesFisher>(d)) missing(id, "von Mises-Fisher distribution");
        const Vec& t = need_theta(q);
        return tilted_moment(d, k, t(0), t(1));
    }
    if (id == stat::entropy) return entropy(d);
    return std::visit(
        overloaded{
            [&](const Gaussian& g) -> double {
                if (id == stat::mean) return g.mean;
                if (id == stat::second_moment) return g.mean * g.mean + g.sd * g.sd;
                missing(id, "Gaussian distribution");
            },
            [&](const Uniform& u) -> double {
                if (id == stat::mean) return 0.5 * (u.lo + u.hi);
                if (id == stat::second_moment) return (u.lo * u.lo + u.lo * u.hi + u.hi * u.hi) / 3.0;
                missing(id, "uniform distribution");
            },
            [&](const TwoPoint& t) -> double {
                if (id == stat::mean) return 0.5 * (t.lo + t.hi);
                if (id == stat::second_moment) return 0.5 * (t.lo * t.lo + t.hi * t.hi);
                missing(id, "two-point distribution");
            },
            [&](const Exponential& e) -> double {
                if (id == stat::mean) return 1.0 / e.rate;
                if (id == stat::second_moment) return 2.0 / (e.rate * e.rate);
                missing(id, "exponential distribution");
            },
            [&](const Gumbel& g) -> double {
                const double m = g.mode + kEuler / g.alpha;
                if (id == stat::mean) return m;
                if (id == stat::second_moment) return m * m + kPi * kPi / (6.0 * g.alpha * g.alpha);
                missing(id, "Gumbel distribution");
            },
            [&](const VonMisesFisher& v) -> double {
                const double a = vmf_mean_length(v.kappa);
                if (id == stat::x1) return a * v.direction(0);
                if (id == stat::x2) return a * v.direction(1);
                if (id == stat::x3) return a * v.direction(2);
                missing(id, "von Mises-Fisher distribution");
            },
        },
        d);
}

double answer(const MomentSpecified& m, const StatisticQuery& q) {
    if (q.theta) missing(q.id, "moment-specified data set (parameter-dependent)");
    auto it = m.values.find(q.id);
    if (it == m.values.end()) missing(q.id, "moment-specified data set");
    return it->second;
}

double answer(const EmpiricalSample& s, const StatisticQuery& q) {
    const std::string& id = q.id;
    if (id == stat::entropy) return 0.0;
    auto sum = [&](auto fn) {
        double acc = 0.0;
        for (size_t i = 0; i < s.points.size(); ++i) acc += s.weights[i] * fn(s.points[i]);
        return acc;
    };
    if (id == stat::mean) return sum([](double x) { return x; });
    if (id == stat::second_moment) return sum([](double x) { return x * x; });
    if (const int k = static_cast<int>(tilt_order(id)); k >= 0) {
        const Vec& t = need_theta(q);
        return sum([&](double x) { return std::pow(x - t(1), k) * std::exp(-t(0) * (x - t(1))); });
    }
    missing(id, "empirical sample");
}

double answer(const RegressionSample& r, const StatisticQuery& q) {
    const std::string& id = q.id;
    double acc = 0.0;
    const size_t n = r.x.size();
    if (id == stat::count) return static_cast<double>(n);
    for (size_t i = 0; i < n; ++i) {
        const double x = r.x[i], y = r.y[i];
        if (id == stat::sum_x) acc += x;
        else if (id == stat::sum_y) acc += y;
        else if (id == stat::sum_xx) acc += x * x;
        else if (id == stat::sum_xy) acc += x * y;
        else if (id == stat::sum_yy) acc += y * y;
        else missing(id, "regression sample");
    }
    if (n == 0) missing(id, "empty regression sample");
    return acc;
}

std::string fmt_num(double v) {
    std::ostringstream os;
    os.precision(17);
    os << v;
    return os.str();
}

} // namespace

double tilted_moment(const Distribution& d, int k, double s, double c) {
    if (k < 0 || k > 3) throw Unsupported("tilted moment order must be 0..3");
    return std::visit(
        overloaded{
            [&](const Gaussian& g) {
                const double a = g.mean - c;
                const double v = g.sd * g.sd;
                return std::exp(-s * a + 0.5 * s * s * v) * normal_raw_moment(k, a - s * v, v);
            },
            [&](const Uniform& u) {
                return (tilt_antiderivative(k, s, u.hi - c) - tilt_antiderivative(k, s, u.lo - c)) / (u.hi - u.lo);
            },
            [&](const TwoPoint& t) {
                auto f = [&](double x) { return std::pow(x - c, k) * std::exp(-s * (x - c)); };
                return 0.5 * (f(t.lo) + f(t.hi));
            },
            [&](const Exponential& e) {
                const double r = e.rate + s;
                if (r <= 0.0) throw DomainError("tilted exponential moment diverges");
                double acc = 0.0;
                for (int j = 0; j <= k; ++j)
                    acc += binom(k, j) * std::pow(-c, k - j) * factorial(j) / std::pow(r, j + 1);
                return e.rate * std::exp(s * c) * acc;
            },
            [&](const Gumbel& g) {
                // x = mode + u/alpha with u standard Gumbel, E[e^{-t u}] = Gamma(1+t).
                const double t = s / g.alpha;
                if (1.0 + t <= 0.0) throw DomainError("tilted Gumbel moment diverges");
                const double dd = g.mode - c;
                double acc = 0.0;
                for (int j = 0; j <= k; ++j) {
                    const double eu = ((j % 2) ? -1.0 : 1.0) * gamma_derivative(j, 1.0 + t);
                    acc += binom(k, j) * std::pow(dd, k - j) * eu / std::pow(g.alpha, j);
                }
                return std::exp(-s * dd) * acc;
            },
            [&](const VonMisesFisher&) -> double { throw Unsupported("tilted moments of a vector distribution"); },
        },
        d);
}

double entropy(const Distribution& d) {
    return std::visit(
        overloaded{
            [](const Gaussian& g) { return 0.5 * std::log(2.0 * kPi * std::exp(1.0) * g.sd * g.sd); },
            [](const Uniform& u) { return std::log(u.hi - u.lo); },
            [](const TwoPoint& t) { return t.lo == t.hi ? 0.0 : std::log(2.0); },
            [](const Exponential& e) { return 1.0 - std::log(e.rate); },
            [](const Gumbel& g) { return -std::log(g.alpha) + kEuler + 1.0; },
            [](const VonMisesFisher& v) {
                const double phi = std::log(4.0 * kPi) + log_sinh(v.kappa) - std::log(v.kappa);
                return phi - v.kappa * vmf_mean_length(v.kappa);
            },
        },
        d);
}

DataSet DataSet::analytic(Distribution d) {
    std::visit(overloaded{
                   [](const Gaussian& g) { if (!(g.sd > 0)) throw DomainError("Gaussian sd must be > 0"); },
                   [](const Uniform& u) { if (!(u.hi > u.lo)) throw DomainError("uniform needs lo < hi"); },
                   [](const TwoPoint& t) { if (!(t.hi >= t.lo)) throw DomainError("two-point needs lo <= hi"); },
                   [](const Exponential& e) { if (!(e.rate > 0)) throw DomainError("exponential rate must be > 0"); },
                   [](const Gumbel& g) { if (!(g.alpha > 0)) throw DomainError("Gumbel alpha must be > 0"); },
                   [](VonMisesFisher& v) {
                       if (!(v.kappa > 0)) throw DomainError("vMF kappa must be > 0");
                       const double n = v.direction.norm();
                       if (!(n > 0)) throw DomainError("vMF direction must be nonzero");
                       v.direction /= n;
                   },
               },
               d);
    return DataSet(std::move(d));
}

DataSet DataSet::moments(std::map<std::string, double> values) {
    for (const auto& [k, v] : values)
        if (!std::isfinite(v)) throw DomainError("moment '" + k + "' is not finite");
    return DataSet(MomentSpecified{std::move(values)});
}

DataSet DataSet::empirical(std::vector<double> points, std::vector<double> weights) {
    if (points.empty()) throw DomainError("empirical sample is empty");
    if (weights.empty()) weights.assign(points.size(), 1.0);
    if (weights.size() != points.size()) throw DomainError("empirical sample weights do not match points");
    const double total = std::accumulate(weights.begin(), weights.end(), 0.0);
    if (!(total > 0)) throw DomainError("empirical sample weights must sum to a positive value");
    for (double& w : weights) {
        if (w < 0) throw DomainError("negative empirical weight");
        w /= total;
    }
    return DataSet(EmpiricalSample{std::move(points), std::move(weights)});
}

DataSet DataSet::regression(std::vector<double> x, std::vector<double> y) {
    if (x.size() != y.size()) throw DomainError("regression sample needs as many y as x values");
    const double n = static_cast<double>(x.size());
    double sx = 0, sxx = 0;
    for (double v : x) { sx += v; sxx += v * v; }
    if (!(std::abs(n * sxx - sx * sx) > 1e-12 * std::max(1.0, n * sxx)))
        throw DomainError("regression sample needs N*sum(x^2) - (sum x)^2 != 0");
    return DataSet(RegressionSample{std::move(x), std::move(y)});
}

DataSet::Kind DataSet::kind() const { return static_cast<Kind>(payload_.index()); }

double DataSet::expectation(const StatisticQuery& q) const {
    return std::visit([&](const auto& p) { return answer(p, q); }, payload_);
}

std::string DataSet::describe() const {
    return std::visit(
        overloaded{
            [](const Distribution& d) {
                return std::visit(
                    overloaded{
                        [](const Gaussian& g) { return "gaussian:" + fmt_num(g.mean) + "," + fmt_num(g.sd); },
                        [](const Uniform& u) { return "uniform:" + fmt_num(u.lo) + "," + fmt_num(u.hi); },
                        [](const TwoPoint& t) { return "twopoint:" + fmt_num(t.lo) + "," + fmt_num(t.hi); },
                        [](const Exponential& e) { return "exponential:" + fmt_num(e.rate); },
                        [](const Gumbel& g) { return "gumbel:" + fmt_num(g.alpha) + "," + fmt_num(g.mode); },
                        [](const VonMisesFisher& v) {
                            return "vmf:" + fmt_num(v.kappa) + "," + fmt_num(v.direction(0)) + "," +
                                   fmt_num(v.direction(1)) + "," + fmt_num(v.direction(2));
                        },
                    },
                    d);
            },
            [](const MomentSpecified& m) {
                std::string s = "moments:";
                bool first = true;
                for (const auto& [k, v] : m.values) {
                    s += (first ? "" : ",") + k + "=" + fmt_num(v);
                    first = false;
                }
                return s;
            },
            [](const EmpiricalSample& e) { return "sample:" + std::to_string(e.points.size()) + " points"; },
            [](const RegressionSample& r) { return "regression:" + std::to_string(r.x.size()) + " couples"; },
        },
        payload_);
}

const char* kind_name(DataSet::Kind k) {
    switch (k) {
    case DataSet::Kind::AnalyticDistribution: return "AnalyticDistribution";
    case DataSet::Kind::MomentSpecified: return "MomentSpecified";
    case DataSet::Kind::EmpiricalSample: return "EmpiricalSample";
    case DataSet::Kind::RegressionSample: return "RegressionSample";
    }
    return "?";
}

} // namespace dsm
