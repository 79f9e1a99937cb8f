#include "dsm/errors.hpp"
#include "dsm/geometry.hpp"
#include "dsm/models.hpp"
#include "dsm/transport.hpp"

#include <doctest.h>

#include <cmath>

using namespace dsm;

namespace {

const double kPi = std::acos(-1.0);

Vec v2(double a, double b) { return Eigen::Vector2d(a, b); }

double inf_norm(const Vec& v) { return v.cwiseAbs().maxCoeff(); }

const TraceSample& last(const Trace& t) { return t.samples.back(); }

} // namespace

TEST_CASE("GCE geodesic") {
    const ModelDefinition m = grand_canonical({1, 2, 3});
    const Trace t = geodesic(m, v2(1, 0), v2(1, -1.5), 1.0);
    CHECK(t.kind == Trace::Kind::Geodesic);
    CHECK_FALSE(t.domain_exit);
    CHECK(t.samples.front().t == 0.0);
    CHECK(last(t).t == doctest::Approx(1.0));
    CHECK(inf_norm(last(t).theta - v2(2, -0.75)) < 1e-6);
    for (const auto& [th0, v0] : {std::pair{v2(0.8, -0.5), v2(0.6, 0.4)}, std::pair{v2(2.0, 0.2), v2(-0.5, -0.3)},
                                  std::pair{v2(1.5, -1.0), v2(0.0, 0.7)}}) {
        const Trace g = geodesic(m, th0, v0, 1.0);
        for (size_t i = 0; i < g.samples.size(); i += 100)
            CHECK(inf_norm(g.samples[i].theta - gce_geodesic_oracle(th0, v0, g.samples[i].t)) < 1e-6);
    }
}

TEST_CASE("geodesic with zero velocity stays put") {
    const ModelDefinition m = gaussian_kl();
    const Trace t = geodesic(m, v2(0.2, 1.3), v2(0, 0), 1.0, 0.1);
    CHECK(t.samples.size() == 11);
    for (const auto& s : t.samples) {
        CHECK(inf_norm(s.theta - v2(0.2, 1.3)) == 0.0);
        CHECK(inf_norm(s.v) == 0.0);
    }
}

TEST_CASE("flat sum-of-squares geodesics are straight lines") {
    const ModelDefinition d = regression_dlambda(2.0);
    const Trace t = geodesic(d, v2(0.5, -1), v2(1, 2), 2.0);
    for (const auto& s : t.samples) CHECK(inf_norm(s.theta - (v2(0.5, -1) + s.t * v2(1, 2))) < 1e-9);
}

TEST_CASE("geodesic leaving the chart stops early") {
    const ModelDefinition m = gaussian_kl();
    const Trace t = geodesic(m, v2(0, 1), v2(0, 3), 5.0);
    CHECK(t.domain_exit);
    CHECK(last(t).t < 5.0);
    CHECK(m.chart.contains(last(t).theta));
}

TEST_CASE("GCE parallel transport") {
    const ModelDefinition m = grand_canonical({1, 2, 3});
    const Trace t = parallel_transport(m, {v2(1, 0), v2(2, 0.9)}, v2(1, 0));
    CHECK(t.kind == Trace::Kind::ParallelTransport);
    CHECK(last(t).v(0) == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(std::abs(last(t).v(1) + 0.45) < 1e-5);
    CHECK(inf_norm(last(t).v - gce_field_oracle(0.0, 1.0, v2(2, 0.9))) < 1e-5);
    // flat: a detour gives the same vector
    const Trace d = parallel_transport(m, {v2(1, 0), v2(1, 0.9), v2(2, 0.9)}, v2(1, 0));
    CHECK(inf_norm(last(d).v - last(t).v) < 1e-5);
}

TEST_CASE("latitude holonomy on the sphere") {
    const ModelDefinition s = vmf_sphere(2.0);
    const double th = kPi / 3;
    std::vector<Vec> loop;
    for (int k = 0; k <= 40; ++k) loop.push_back(v2(th, 2 * kPi * k / 40));
    const Vec v0 = v2(1, 0);
    const Trace t = parallel_transport(s, loop, v0, 50);
    // rotation by 2 pi cos(theta) = pi in the orthonormal frame
    const Vec v = last(t).v;
    const double angle = std::atan2(std::sin(th) * v(1), v(0));
    CHECK(std::abs(std::abs(angle) - kPi) < 1e-3);
    const Mat g = s.oracle.metric(v2(th, 0));
    CHECK(v.dot(g * v) == doctest::Approx(v0.dot(g * v0)).epsilon(1e-6));
}

TEST_CASE("sphere geodesics conserve speed") {
    const ModelDefinition s = vmf_sphere(1.0);
    const Trace t = geodesic(s, v2(1.0, 0.2), v2(0.3, 0.8), 1.5);
    auto speed = [&](const TraceSample& x) { return x.v.dot(s.oracle.metric(x.theta) * x.v); };
    const double e0 = speed(t.samples.front());
    double drift = 0;
    for (const auto& x : t.samples) drift = std::max(drift, std::abs(speed(x) - e0));
    CHECK(drift < 1e-5);
}

TEST_CASE("halving the step changes a geodesic by less than 1e-6") {
    const ModelDefinition m = gaussian_kl();
    const Trace a = geodesic(m, v2(0, 1), v2(0.5, 0.2), 1.0, 0.01);
    const Trace b = geodesic(m, v2(0, 1), v2(0.5, 0.2), 1.0, 0.005);
    CHECK(inf_norm(last(a).theta - last(b).theta) < 1e-6);
    CHECK(inf_norm(last(a).v - last(b).v) < 1e-6);
}

TEST_CASE("geodesics are reversible") {
    const ModelDefinition m = grand_canonical({1, 2, 3});
    const Trace f = geodesic(m, v2(1.2, -0.3), v2(0.4, 0.5), 1.0);
    const Trace b = geodesic(m, last(f).theta, -last(f).v, 1.0);
    CHECK(inf_norm(last(b).theta - v2(1.2, -0.3)) < 1e-7);
    CHECK(inf_norm(last(b).v + v2(0.4, 0.5)) < 1e-7);
}

TEST_CASE("covariant-constant fields") {
    const ModelDefinition m = grand_canonical({1, 2, 3});
    std::vector<Vec> grid;
    for (double b : {0.5, 1.5, 3.0})
        for (double mu : {-2.0, -0.5, 0.5}) grid.push_back(v2(b, mu));
    const FieldResult f = covariant_constant_field(m, v2(1, 0), v2(1, 0), grid);
    CHECK(f.trace.kind == Trace::Kind::CovariantField);
    CHECK(f.trace.samples.size() == grid.size());
    CHECK(f.spot_check_residual < 1e-4);
    for (const auto& s : f.trace.samples) CHECK(inf_norm(s.v - gce_field_oracle(0.0, 1.0, s.theta)) < 1e-5);

    const ModelDefinition z = reparametrize(gaussian_kl(), gaussian_canonical_chart());
    std::vector<Vec> zg;
    for (double a : {0.2, 0.5, 1.0})
        for (double b : {-1.0, 0.0, 1.0}) zg.push_back(v2(a, b));
    const FieldResult c = covariant_constant_field(z, v2(0.5, 0), v2(0.3, -0.7), zg);
    for (const auto& s : c.trace.samples) CHECK(inf_norm(s.v - v2(0.3, -0.7)) < 1e-5);

    const ModelDefinition s = vmf_sphere(2.0);
    CHECK_THROWS_AS(covariant_constant_field(s, v2(1.0, 0.0), v2(1, 0), {v2(2.0, 2.0), v2(0.6, -2.0), v2(2.5, -1.0)}),
                    NotFlat);
}
