// Acceptance gate: one PASS/FAIL line per criterion, nonzero exit on any failure.
#include "dsm/cli.hpp"
#include "dsm/fit.hpp"
#include "dsm/models.hpp"
#include "dsm/structure.hpp"
#include "dsm/transport.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <random>
#include <sstream>
#include <string>

using namespace dsm;

namespace {

int failures = 0;

struct Criterion {
    int id;
    std::string name;
    bool ok = true;
    std::ostringstream detail;

    void require(bool cond, const std::string& what) {
        if (!cond) {
            ok = false;
            detail << " [" << what << "]";
        }
    }
    ~Criterion() {
        std::cout << (ok ? "PASS" : "FAIL") << " criterion " << id << ": " << name;
        if (!ok) std::cout << " --" << detail.str();
        std::cout << "\n";
        if (!ok) ++failures;
    }
};

std::string num(double v) {
    std::ostringstream os;
    os << v;
    return os.str();
}

double max_abs(const Mat& m) { return m.cwiseAbs().maxCoeff(); }

std::vector<Vec> random_points(const ModelDefinition& m, std::mt19937_64& rng, int n) {
    std::vector<Vec> out;
    for (int i = 0; i < n; ++i) out.push_back(random_point(m, rng));
    return out;
}

void criterion1() {
    Criterion c{1, "Gaussian-KL metric and connection"};
    try {
        const ModelDefinition m = gaussian_kl();
        const Vec t = Eigen::Vector2d(0.0, 1.0);
        const Mat expect = Eigen::Vector2d(1.0, 2.0).asDiagonal();
        GeometryOptions fd;
        fd.numeric = true;
        const double e_fd = max_abs(Mat(metric_at(m, t, fd).g - expect));
        const double e_an = max_abs(Mat(metric_at(m, t).g - expect));
        c.require(e_fd <= 1e-4, "FD metric error " + num(e_fd));
        c.require(e_an <= 1e-10, "analytic metric error " + num(e_an));
        for (double s : {1.0, 2.0, 3.0}) {
            const ConnectionResult r = connection_at(m, Eigen::Vector2d(0.0, s));
            Tensor3 w(2);
            w(0, 0, 1) = w(0, 1, 0) = -2.0 / s;
            w(1, 1, 1) = -3.0 / s;
            const double e = (r.omega - w).max_abs();
            c.require(e <= 1e-4, "connection error " + num(e) + " at sigma " + num(s));
        }
    } catch (const std::exception& e) {
        c.require(false, e.what());
    }
}

void criterion2() {
    Criterion c{2, "canonical parameters recovered as affine coordinates"};
    std::mt19937_64 rng(42);
    struct Case {
        ModelDefinition m;
        std::function<Vec(const Vec&)> reference;
    };
    std::vector<Case> cases;
    cases.push_back({gaussian_kl(), [](const Vec& t) -> Vec {
                         return Eigen::Vector2d(1.0 / (2 * t(1) * t(1)), -t(0) / (t(1) * t(1)));
                     }});
    cases.push_back({gaussian_sumsq(1.0, 1.0), [](const Vec& t) -> Vec {
                         return Eigen::Vector2d(t(0), t(0) * t(0) + t(1) * t(1));
                     }});
    cases.push_back({grand_canonical({1.0, 2.0, 3.0}),
                     [](const Vec& t) -> Vec { return Eigen::Vector2d(t(0), -t(0) * t(1)); }});
    for (const Case& k : cases) {
        try {
            const std::vector<Vec> targets = random_points(k.m, rng, 10);
            const Vec t0 = default_grid(k.m)[12];
            const AffineCoordinateMap a = affine_coordinates(k.m, t0, targets);
            std::vector<Vec> ref;
            for (const Vec& t : targets) ref.push_back(k.reference(t));
            const double r = affine_gauge_residual(a.values, ref);
            c.require(r < 1e-4, k.m.name + " gauge residual " + num(r));
        } catch (const std::exception& e) {
            c.require(false, k.m.name + ": " + e.what());
        }
    }
}

void criterion3() {
    Criterion c{3, "Condition-4 violations detected with the expected Gumbel split"};
    const double gumbel_term = 0.8157, exponential_term = 0.5;
    try {
        const ModelDefinition m = regression_ls();
        bool raised = false;
        try {
            metric_at(m, default_grid(m).front());
        } catch (const Condition4Violated&) {
            raised = true;
        }
        c.require(raised, "regression-ls did not raise Condition4Violated");
    } catch (const std::exception& e) {
        c.require(false, e.what());
    }
    try {
        const ModelDefinition m = gumbel();
        for (double lambda : {0.5, 1.0, 2.0}) {
            const Vec t = gumbel_exponential_point(lambda);
            bool raised = false;
            try {
                metric_at(m, t);
            } catch (const Condition4Violated& e) {
                raised = true;
                const auto& v = e.evidence.varying_terms;
                c.require(v.size() == 2, "expected two fibre members");
                if (v.size() == 2) {
                    const double rg = std::abs(v[0] / gumbel_term - 1), re = std::abs(v[1] / exponential_term - 1);
                    c.require(rg <= 0.02, "Gumbel member term " + num(v[0]));
                    c.require(re <= 0.02, "exponential member term " + num(v[1]));
                }
            }
            c.require(raised, "gumbel did not raise Condition4Violated at lambda " + num(lambda));
        }
    } catch (const std::exception& e) {
        c.require(false, e.what());
    }
}

void criterion4() {
    Criterion c{4, "sphere curved, cylinder flat"};
    const double kappa = 2.0;
    try {
        const ModelDefinition m = vmf_sphere(kappa);
        for (double th : {0.6, 1.0, 1.4, 2.2}) {
            const Vec t = Eigen::Vector2d(th, 0.3);
            const double s = std::sin(th), co = std::cos(th);
            const Mat g_expect = Eigen::Vector2d(kappa, kappa * s * s).asDiagonal();
            const double eg = max_abs(Mat(metric_at(m, t).g - g_expect));
            c.require(eg <= 1e-6, "sphere metric error " + num(eg));
            const ConnectionResult r = connection_at(m, t, {}, false);
            Tensor3 w(2);
            w(0, 1, 1) = -s * co;
            w(1, 0, 1) = w(1, 1, 0) = co / s;
            const double ew = (r.omega - w).max_abs();
            c.require(ew <= 1e-4, "sphere connection error " + num(ew));
            const double ec = std::abs(curvature_at(m, t)(0, 1, 0, 1) - s * s);
            c.require(ec <= 1e-3, "sphere curvature error " + num(ec));
        }
        const GeometryReport rep = classify(m, default_grid(m));
        c.require(rep.exponential_family == "no", "sphere verdict " + rep.exponential_family);
    } catch (const std::exception& e) {
        c.require(false, std::string("sphere: ") + e.what());
    }
    try {
        const ModelDefinition m = vmf_cylinder(kappa);
        std::mt19937_64 rng(42);
        for (const Vec& t : random_points(m, rng, 5)) {
            const Mat g_expect = Eigen::Vector2d(kappa, 1.0 / (t(1) * t(1))).asDiagonal();
            const double eg = max_abs(Mat(metric_at(m, t).g - g_expect));
            c.require(eg <= 1e-6, "cylinder metric error " + num(eg));
            const double ew = connection_at(m, t).omega.max_abs();
            c.require(ew <= 1e-6, "cylinder connection " + num(ew));
        }
        const Vec t0 = Eigen::Vector2d(0.0, 1.0);
        const std::vector<Vec> targets = random_points(m, rng, 8);
        const MassieuSample s = massieu(m, t0, targets);
        std::vector<double> ref;
        std::vector<Vec> aff;
        for (const Vec& t : targets) {
            ref.push_back(0.5 * kappa * t(0) * t(0) - std::log(t(1)));
            aff.push_back(t);
        }
        const double em = massieu_gauge_residual(s.phi, ref, aff);
        c.require(em <= 1e-3, "cylinder Massieu gauge residual " + num(em));
        const GeometryReport rep = classify(m, default_grid(m));
        c.require(rep.exponential_family == "yes", "cylinder verdict " + rep.exponential_family);
    } catch (const std::exception& e) {
        c.require(false, std::string("cylinder: ") + e.what());
    }
}

void criterion5() {
    Criterion c{5, "GCE geodesic and covariant-constant field"};
    try {
        const ModelDefinition m = grand_canonical({1.0, 2.0, 3.0});
        const Vec t0 = Eigen::Vector2d(1.0, -1.0), v0 = Eigen::Vector2d(1.0, 0.5);
        const Trace tr = geodesic(m, t0, v0, 1.0);
        c.require(!tr.domain_exit, "geodesic left the chart");
        const Vec end = tr.samples.back().theta;
        // A = B = 1, t0 = 0: mu(1) = -1 + 0.5 * (1 - 1/2)
        const double A = 1.0, B = 1.0;
        const double mu_closed = t0(1) + v0(1) * (1.0 / B - 1.0 / (A * 1.0 + B));
        c.require(std::abs(end(0) - 2.0) <= 1e-6, "beta(1) = " + num(end(0)));
        c.require(std::abs(end(1) - mu_closed) <= 1e-6, "mu(1) = " + num(end(1)));

        std::vector<Vec> grid;
        for (int i = 0; i < 6; ++i)
            for (int j = 0; j < 6; ++j) grid.push_back(Eigen::Vector2d(0.5 + 0.5 * i, -2.0 + 0.5 * j));
        const Vec f0 = Eigen::Vector2d(1.0, 0.0), fv = Eigen::Vector2d(1.0, 0.0);
        const FieldResult f = covariant_constant_field(m, f0, fv, grid);
        double worst = 0;
        for (const TraceSample& s : f.trace.samples) {
            const Vec expect = Eigen::Vector2d(1.0, (0.0 - s.theta(1)) / s.theta(0));
            worst = std::max(worst, (s.v - expect).cwiseAbs().maxCoeff());
        }
        c.require(f.trace.samples.size() == grid.size(), "field did not reach every grid point");
        c.require(worst <= 1e-4, "field error " + num(worst));
    } catch (const std::exception& e) {
        c.require(false, e.what());
    }
}

void criterion6() {
    Criterion c{6, "structural property suite"};
    std::mt19937_64 rng(42);
    CatalogueParams p;
    for (const std::string& name : catalogue_names()) {
        const ModelDefinition m = make_model(name, p);
        try {
            // Analytic vs FD derivatives at fibre members and random data.
            for (int i = 0; i < 5; ++i) {
                const Vec t = random_point(m, rng);
                std::vector<DataSet> xs = m.fibre_sampler(t, 2);
                xs.push_back(m.random_data(rng));
                for (const DataSet& x : xs) {
                    const Vec ga = divergence_gradient(m, x, t), gn = divergence_gradient(m, x, t, true);
                    const Mat ha = divergence_hessian(m, x, t), hn = divergence_hessian(m, x, t, true);
                    const double eg = (ga - gn).cwiseAbs().maxCoeff() / std::max(1.0, ga.cwiseAbs().maxCoeff());
                    const double eh = max_abs(Mat(ha - hn)) / std::max(1.0, max_abs(ha));
                    c.require(eg <= 1e-5, name + " gradient cross-check " + num(eg));
                    c.require(eh <= 1e-5, name + " Hessian cross-check " + num(eh));
                }
            }
            if (m.expect_condition4_fail) continue;

            const bool hessian_structured = classify(m, default_grid(m)).hessian_structure == Verdict::Pass;
            for (int i = 0; i < 25; ++i) {
                const Vec t = random_point(m, rng);
                const MetricResult mr = metric_at(m, t);
                c.require(Eigen::SelfAdjointEigenSolver<Mat>(mr.g).eigenvalues().minCoeff() > 0, name + " metric not PD");
                if (i < 3) {
                    const CramerRaoResult cr = cramer_rao_check(m, t, 1000, 42 + i);
                    c.require(cr.worst_margin >= -1e-10, name + " Cauchy-Schwarz margin " + num(cr.worst_margin));
                }
                const ConnectionResult r = connection_at(m, t, {}, false);
                c.require(r.probe_consistency <= 1e-3, name + " probe consistency " + num(r.probe_consistency));
                if (!hessian_structured) continue;
                const double tor = torsion_residual(r.omega);
                const double curv = curvature_at(m, t).max_abs();
                const double cod = codazzi_residual(m, t).max_abs();
                c.require(tor <= 1e-3, name + " torsion " + num(tor));
                c.require(curv <= 1e-3, name + " curvature " + num(curv));
                c.require(cod <= 1e-3, name + " Codazzi " + num(cod));
            }
            if (hessian_structured)
                for (int i = 0; i < 10; ++i) {
                    const Vec t = random_point(m, rng), o = random_point(m, rng);
                    const double d = pythagorean_check(m, t, o).deviation;
                    c.require(d <= 1e-6, name + " Pythagorean deviation " + num(d));
                }
        } catch (const std::exception& e) {
            c.require(false, name + ": " + e.what());
        }
    }
    try {
        const ModelDefinition g = gaussian_kl();
        const ModelDefinition e = grand_canonical(p.levels);
        for (int i = 0; i < 5; ++i) {
            const double rg = metric_transform_check(g, gaussian_canonical_chart(), random_point(g, rng));
            const double re = metric_transform_check(e, gce_canonical_chart(p.levels), random_point(e, rng));
            c.require(rg <= 1e-4, "Gaussian chart-change residual " + num(rg));
            c.require(re <= 1e-4, "GCE chart-change residual " + num(re));
        }
    } catch (const std::exception& e) {
        c.require(false, std::string("chart change: ") + e.what());
    }
}

std::string slurp(const std::filesystem::path& p) {
    std::ifstream f(p, std::ios::binary);
    std::ostringstream os;
    os << f.rdbuf();
    return os.str();
}

void criterion7() {
    Criterion c{7, "report_all is byte-identical across runs"};
    try {
        const auto base = std::filesystem::temp_directory_path() / "dsm_acceptance_report";
        std::filesystem::remove_all(base);
        cli::RunConfig cfg;
        cfg.op = "report";
        cfg.seed = 42;
        std::ostringstream log;
        const int a = cli::report_all((base / "a").string(), cfg, log);
        const int b = cli::report_all((base / "b").string(), cfg, log);
        c.require(a == 0 && b == 0, "report_all failed: " + log.str());
        int files = 0;
        for (const auto& e : std::filesystem::directory_iterator(base / "a")) {
            ++files;
            const auto other = base / "b" / e.path().filename();
            c.require(std::filesystem::exists(other) && slurp(e.path()) == slurp(other),
                      e.path().filename().string() + " differs");
        }
        c.require(files == 10, "expected 10 report files, found " + std::to_string(files));
        std::filesystem::remove_all(base);
    } catch (const std::exception& e) {
        c.require(false, e.what());
    }
}

} // namespace

int main() {
    criterion1();
    criterion2();
    criterion3();
    criterion4();
    criterion5();
    criterion6();
    criterion7();
    return failures == 0 ? 0 : 1;
}
