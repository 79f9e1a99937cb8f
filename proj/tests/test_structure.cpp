#include "dsm/errors.hpp"
#include "dsm/geometry.hpp"
#include "dsm/models.hpp"
#include "dsm/numdiff.hpp"
#include "dsm/structure.hpp"

#include <doctest.h>

#include <cmath>
#include <random>

using namespace dsm;

namespace {

Vec v2(double a, double b) { return Eigen::Vector2d(a, b); }

double inf_norm(const Vec& v) { return v.cwiseAbs().maxCoeff(); }

// Affine coordinates normalised to vanish at theta0 with identity Jacobian there.
Vec normalised_affine(const ModelDefinition& m, const Vec& theta0, const Vec& t) {
    const Mat J = fd_jacobian(m.oracle.affine, theta0, &m.chart);
    return J.lu().solve(m.oracle.affine(t) - m.oracle.affine(theta0));
}

struct GceTotals {
    double lnz = 0, n = 0, e = 0;
};

GceTotals gce_totals(const std::vector<double>& eps, double b, double mu) {
    GceTotals r;
    for (double l : eps) {
        r.lnz -= std::log1p(-std::exp(-b * (l - mu)));
        const double o = 1.0 / std::expm1(b * (l - mu));
        r.n += o;
        r.e += l * o;
    }
    return r;
}

} // namespace

TEST_CASE("classification of the catalogue") {
    const std::vector<std::pair<std::string, std::string>> expect{
        {"gaussian-kl", "yes"}, {"gaussian-sumsq", "not-applicable"}, {"regression-ls", "not-applicable"},
        {"regression-dlambda", "not-applicable"}, {"gce", "yes"}, {"vmf-sphere", "no"},
        {"vmf-cylinder", "yes"}, {"gumbel", "no"}};
    StructureOptions o;
    for (const auto& [name, family] : expect) {
        const ModelDefinition m = make_model(name);
        CAPTURE(name);
        std::vector<Vec> grid = default_grid(m, 3);
        if (name == "regression-ls" || name == "gumbel") grid = default_grid(m);
        const GeometryReport r = classify(m, grid, o);
        CHECK(r.exponential_family == family);
        const bool c4 = !(name == "regression-ls" || name == "gumbel");
        CHECK((r.condition4 == Verdict::Pass) == c4);
        if (!c4) {
            CHECK(r.hessian_structure == Verdict::Fail);
            CHECK(r.probe_consistency == Verdict::NotEvaluated);
            REQUIRE(r.varying_ratio.has_value());
        }
        if (name == "vmf-sphere") {
            CHECK(r.probe_consistency == Verdict::Pass);
            CHECK(r.flat == Verdict::Fail);
            CHECK(r.torsionless == Verdict::Pass);
        }
        if (family == "yes" || name == "gaussian-sumsq" || name == "regression-dlambda")
            CHECK(r.hessian_structure == Verdict::Pass);
    }
}

TEST_CASE("Gumbel evidence ratio") {
    const ModelDefinition m = gumbel();
    const GeometryReport r = classify(m, default_grid(m));
    REQUIRE(r.varying_ratio.has_value());
    CHECK(*r.varying_ratio == doctest::Approx(0.8237 / 0.5006).epsilon(0.02));
    CHECK(r.varying_term_label.find("alpha") != std::string::npos);
}

TEST_CASE("affine coordinate examples") {
    StructureOptions o;
    const ModelDefinition e = grand_canonical({1, 2, 3});
    const auto [ye, je] = affine_point(e, v2(1, 0), v2(2, 0.3), o);
    CHECK(inf_norm(ye - v2(1, 0.6)) < 1e-6);
    CHECK(inf_norm(ye - normalised_affine(e, v2(1, 0), v2(2, 0.3))) < 1e-6);

    const ModelDefinition g = gaussian_kl();
    CHECK(inf_norm(affine_point(g, v2(0, 1), v2(0.5, 2), o).first - v2(0.125, 0.375)) < 1e-6);

    const ModelDefinition s = gaussian_sumsq(1.0, 1.0);
    CHECK(inf_norm(affine_point(s, v2(0, 1), v2(1, 2), o).first - v2(1, 2)) < 1e-6);

    const ModelDefinition d = regression_dlambda(2.0);
    CHECK(inf_norm(affine_point(d, v2(0.2, -1), v2(1.1, 0.4), o).first - v2(0.9, 1.4)) < 1e-9);
}

TEST_CASE("affine coordinates agree with the oracles up to gauge") {
    std::mt19937_64 rng(31);
    for (const std::string& name : {"gaussian-kl", "gaussian-sumsq", "gce", "vmf-cylinder"}) {
        const ModelDefinition m = make_model(name);
        CAPTURE(name);
        const Vec theta0 = default_grid(m)[12];
        std::vector<Vec> targets;
        for (int i = 0; i < 6; ++i) targets.push_back(random_point(m, rng));
        const AffineCoordinateMap a = affine_coordinates(m, theta0, targets);
        CHECK(a.path_residual < 1e-4);
        for (size_t i = 0; i < targets.size(); ++i)
            CHECK(inf_norm(a.values[i] - normalised_affine(m, theta0, targets[i])) < 1e-5);
        for (size_t i = 0; i < 2; ++i) CHECK(affine_connection_residual(m, theta0, targets[i]) < 1e-4);
    }
}

TEST_CASE("affine coordinates on a curved model") {
    const ModelDefinition s = vmf_sphere(2.0);
    CHECK_THROWS_AS(affine_coordinates(s, v2(1.0, 0.0), {v2(2.0, 1.5), v2(0.6, -1.2)}), NotFlat);
}

TEST_CASE("Massieu examples") {
    StructureOptions o;
    const ModelDefinition c = vmf_cylinder(2.0);
    const auto [phi, alpha] = massieu_point(c, v2(0, 1), v2(0.4, 1.5), o);
    const double truth = 0.5 * 2.0 * 0.16 - std::log(1.5);
    CHECK(truth == doctest::Approx(-0.2455).epsilon(1e-3));
    CHECK(phi == doctest::Approx(truth + 0.5).epsilon(1e-6));
    CHECK(inf_norm(alpha - v2(0.8, 1 - 1 / 1.5)) < 1e-6);

    const ModelDefinition d = regression_dlambda(2.0);
    const auto [pd, ad] = massieu_point(d, v2(0, 0), v2(0.5, -1.5), o);
    CHECK(pd == doctest::Approx(0.5 * (4 * 0.25 + 2.25)).epsilon(1e-9));
    CHECK(inf_norm(ad - v2(2.0, -1.5)) < 1e-9);

    const auto [p0, a0] = massieu_point(c, v2(0.3, 1.2), v2(0.3, 1.2), o);
    CHECK(p0 == 0.0);
    CHECK(inf_norm(a0) == 0.0);
}

TEST_CASE("Massieu potential matches the oracles up to gauge") {
    std::mt19937_64 rng(32);
    for (const std::string& name : {"gaussian-kl", "gaussian-sumsq", "gce", "vmf-cylinder", "regression-dlambda"}) {
        const ModelDefinition m = make_model(name);
        CAPTURE(name);
        const Vec theta0 = default_grid(m)[12];
        std::vector<Vec> targets;
        for (int i = 0; i < 5; ++i) targets.push_back(random_point(m, rng));
        const MassieuSample s = massieu(m, theta0, targets);
        CHECK(s.path_residual < 1e-4);
        CHECK(s.curl_residual < 1e-5);
        CHECK(s.hessian_residual < 1e-3);
        std::vector<double> ref;
        std::vector<Vec> aff;
        for (const Vec& t : targets) {
            ref.push_back(m.oracle.massieu(t));
            aff.push_back(m.oracle.affine(t));
        }
        CHECK(massieu_gauge_residual(s.phi, ref, aff) < 1e-4);
    }
}

TEST_CASE("Massieu potential is convex in affine coordinates") {
    std::mt19937_64 rng(33);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    const ModelDefinition m = grand_canonical({1, 2, 3});
    const Vec theta0 = v2(1.5, -0.5);
    StructureOptions o;
    o.steps = 100;
    for (int i = 0; i < 10; ++i) {
        const Vec a = random_point(m, rng), b = random_point(m, rng);
        const double s = u(rng);
        // affine coordinates are (beta, -beta mu): the segment between a and b in them
        const Vec za = m.oracle.affine(a), zb = m.oracle.affine(b);
        const Vec zm = (1 - s) * za + s * zb;
        const Vec mid = v2(zm(0), -zm(1) / zm(0));
        const double pa = massieu_point(m, theta0, a, o).first, pb = massieu_point(m, theta0, b, o).first;
        const double pm = massieu_point(m, theta0, mid, o).first;
        CHECK(pm <= (1 - s) * pa + s * pb + 1e-9);
    }
}

TEST_CASE("Pythagorean relation") {
    const ModelDefinition g = gaussian_kl();
    const PythagorasResult r = pythagorean_check(g, v2(0, 1), v2(1, 1));
    CHECK(r.deviation < 1e-12);
    CHECK(r.induced_value == doctest::Approx(0.5).epsilon(1e-12));

    const std::vector<double> eps{1, 2, 3};
    const ModelDefinition e = grand_canonical(eps);
    const PythagorasResult q = pythagorean_check(e, v2(1, 0.2), v2(1.2, 0.1));
    CHECK(q.deviation < 1e-6);
    const GceTotals t0 = gce_totals(eps, 1, 0.2), t1 = gce_totals(eps, 1.2, 0.1);
    const double kl = t1.lnz - t0.lnz + 1.2 * (t0.e - 0.1 * t0.n) - 1.0 * (t0.e - 0.2 * t0.n);
    CHECK(q.induced_value == doctest::Approx(kl).epsilon(1e-9));
    CHECK(q.differences.size() >= 2);

    const ModelDefinition gu = gumbel();
    CHECK(pythagorean_check(gu, gumbel_exponential_point(1.0), v2(1.0, 0.0), 2).deviation > 1e-3);
}

TEST_CASE("divergence induces the metric and connection") {
    for (const std::string& name : {"gaussian-kl", "regression-dlambda", "gce"}) {
        const ModelDefinition m = make_model(name);
        CAPTURE(name);
        for (int i : {3, 12, 21}) {
            const InducedCheck c = induced_divergence_geometry_check(m, default_grid(m)[i]);
            CHECK(c.metric_residual < 1e-4);
            CHECK(c.connection_residual < 1e-4);
        }
    }
}

TEST_CASE("gauge residual helpers") {
    std::vector<Vec> v{v2(0, 0), v2(1, 0), v2(0, 1), v2(2, 3)};
    std::vector<Vec> ref;
    Mat A(2, 2);
    A << 2, 1, -1, 3;
    for (const Vec& x : v) ref.push_back(A * x + v2(5, -2));
    CHECK(affine_gauge_residual(v, ref) < 1e-12);
    ref[3](0) += 1.0;
    CHECK(affine_gauge_residual(v, ref) > 1e-2);
}
