#include "dsm/cli.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <iomanip>
#include <random>
#include <sstream>
#include <thread>

namespace dsm::cli {

using nlohmann::json;

namespace {

int worker_count(size_t jobs) {
    unsigned n = std::max(1u, std::thread::hardware_concurrency());
    if (const char* env = std::getenv("DSM_GEOM_THREADS")) {
        const int cap = std::atoi(env);
        if (cap >= 1) n = std::min<unsigned>(n, static_cast<unsigned>(cap));
    }
    return static_cast<int>(std::min<size_t>(n, jobs));
}

std::vector<Vec> random_points(const ModelDefinition& m, std::mt19937_64& rng, int n) {
    std::vector<Vec> out;
    for (int i = 0; i < n; ++i) out.push_back(random_point(m, rng));
    return out;
}

} // namespace

std::string summary_label(const GeometryReport& r) {
    if (r.condition4 == Verdict::Fail) return "fail-cond4";
    const bool hs = r.hessian_structure == Verdict::Pass;
    if (!r.kl) return hs ? "n/a-flat" : "n/a-fail";
    if (hs) return "yes";
    return r.flat == Verdict::Fail ? "no-curved" : "no";
}

json model_report(const std::string& name, const RunConfig& base) {
    const ModelDefinition m = make_model(name, base.params);
    StructureOptions so;
    so.tol = tolerances(base.tol);
    so.geometry.cond4_tol = so.tol.cond4;
    so.geometry.hess_tol = so.tol.hess;
    so.steps = 200;

    const auto& names = catalogue_names();
    const auto index = static_cast<unsigned long long>(std::find(names.begin(), names.end(), name) - names.begin());
    std::mt19937_64 rng(base.seed * 1000003ULL + index);

    const std::vector<Vec> grid = default_grid(m);
    const GeometryReport r = classify(m, grid, so);
    json results = report_json(r);
    json verdicts = results["verdicts"];
    results.erase("verdicts");
    results["label"] = summary_label(r);

    json residuals = json::object();
    for (size_t i = 0; i < grid.size(); ++i) {
        if (!r.points[i].condition4) continue;
        const Vec& t = grid[i];
        if (m.oracle.metric) {
            const double d = (metric_at(m, t, so.geometry).g - m.oracle.metric(t)).cwiseAbs().maxCoeff();
            residuals["metric_vs_oracle"] = std::max(residuals.value("metric_vs_oracle", 0.0), d);
        }
        if (m.oracle.connection && r.points[i].probe_consistency) {
            const double d = (connection_field(m, t, so.geometry) - m.oracle.connection(t)).max_abs();
            residuals["connection_vs_oracle"] = std::max(residuals.value("connection_vs_oracle", 0.0), d);
        }
    }

    if (r.hessian_structure == Verdict::Pass) {
        const Vec theta0 = grid[grid.size() / 2];
        const std::vector<Vec> targets = random_points(m, rng, 6);
        try {
            const AffineCoordinateMap a = affine_coordinates(m, theta0, targets, so);
            residuals["affine_path"] = a.path_residual;
            if (m.oracle.affine) {
                std::vector<Vec> ref;
                for (const Vec& t : targets) ref.push_back(m.oracle.affine(t));
                residuals["affine_vs_oracle_gauge"] = affine_gauge_residual(a.values, ref);
            }
            const std::vector<Vec> mt(targets.begin(), targets.begin() + 4);
            const MassieuSample s = massieu(m, theta0, mt, so);
            residuals["massieu_path"] = s.path_residual;
            residuals["massieu_curl"] = s.curl_residual;
            residuals["massieu_hessian_vs_metric"] = s.hessian_residual;
            if (m.oracle.massieu && m.oracle.affine) {
                std::vector<double> ref;
                std::vector<Vec> aff;
                for (const Vec& t : mt) {
                    ref.push_back(m.oracle.massieu(t));
                    aff.push_back(m.oracle.affine(t));
                }
                residuals["massieu_vs_oracle_gauge"] = massieu_gauge_residual(s.phi, ref, aff);
            }
            verdicts["affine_coordinates"] = "pass";
        } catch (const NotFlat& e) {
            verdicts["affine_coordinates"] = "fail";
            results["affine_failure"] = e.what();
        } catch (const NotIntegrable& e) {
            verdicts["affine_coordinates"] = "fail";
            results["affine_failure"] = e.what();
        }
        double worst = 0;
        for (int i = 0; i < 5; ++i) {
            const Vec t = random_point(m, rng), other = random_point(m, rng);
            worst = std::max(worst, pythagorean_check(m, t, other, so.geometry.fibre_k).deviation);
        }
        residuals["pythagoras"] = worst;
        verdicts["pythagoras"] = worst <= so.tol.pythagoras ? "pass" : "fail";
    }

    json inputs = config_to_json(base);
    inputs["model"] = name;
    inputs["op"] = "report";
    inputs.erase("out");
    json doc;
    doc["schema_version"] = kSchemaVersion;
    doc["model"] = m.name;
    doc["op"] = "report";
    doc["inputs"] = inputs;
    doc["results"] = results;
    doc["residuals"] = residuals;
    doc["verdicts"] = verdicts;
    doc["tolerances"] = tolerances_json(so.tol);
    doc["runtime_ms"] = nullptr;
    return doc;
}

int report_all(const std::string& out_dir, const RunConfig& base, std::ostream& log) {
    try {
        std::filesystem::create_directories(out_dir);
    } catch (const std::filesystem::filesystem_error& e) {
        log << "i/o error: " << e.what() << "\n";
        return kIoError;
    }
    const auto& names = catalogue_names();
    std::vector<json> docs(names.size());
    std::vector<std::string> errors(names.size());
    std::vector<double> millis(names.size(), 0.0);
    std::atomic<size_t> next{0};
    auto work = [&] {
        for (size_t i = next++; i < names.size(); i = next++) {
            const auto t0 = std::chrono::steady_clock::now();
            try {
                docs[i] = model_report(names[i], base);
            } catch (const std::exception& e) {
                errors[i] = e.what();
            }
            millis[i] = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
        }
    };
    const int nw = worker_count(names.size());
    std::vector<std::thread> pool;
    for (int i = 1; i < nw; ++i) pool.emplace_back(work);
    work();
    for (auto& t : pool) t.join();

    int code = kOk;
    json summary;
    summary["schema_version"] = kSchemaVersion;
    summary["op"] = "report";
    summary["seed"] = base.seed;
    json rows = json::array();
    std::ostringstream txt;
    txt << std::left << std::setw(20) << "model" << std::setw(12) << "label";
    for (const char* h : {"condition4", "probes", "torsion", "flat", "codazzi", "hessian"}) txt << std::setw(15) << h;
    txt << "exp-family\n";
    try {
        for (size_t i = 0; i < names.size(); ++i) {
            if (!errors[i].empty()) {
                code = kNumericalFailure;
                log << "numerical failure in " << names[i] << ": " << errors[i] << "\n";
                rows.push_back({{"model", names[i]}, {"error", errors[i]}});
                txt << std::setw(20) << names[i] << "error: " << errors[i] << "\n";
                continue;
            }
            json& d = docs[i];
            if (base.timing) d["runtime_ms"] = millis[i];
            write_file((std::filesystem::path(out_dir) / (names[i] + ".json")).string(), d.dump(2) + "\n");
            const json& v = d["verdicts"];
            rows.push_back({{"model", names[i]},
                            {"label", d["results"]["label"]},
                            {"verdicts", v},
                            {"residuals", d["residuals"]}});
            txt << std::setw(20) << names[i] << std::setw(12) << d["results"]["label"].get<std::string>();
            for (const char* k :
                 {"condition4", "probe_consistency", "torsionless", "flat", "codazzi", "hessian_structure"})
                txt << std::setw(15) << v[k].get<std::string>();
            txt << v["exponential_family"].get<std::string>() << "\n";
        }
        summary["models"] = rows;
        summary["tolerances"] = tolerances_json(tolerances(base.tol));
        summary["runtime_ms"] = nullptr;
        write_file((std::filesystem::path(out_dir) / "summary.json").string(), summary.dump(2) + "\n");
        write_file((std::filesystem::path(out_dir) / "summary.txt").string(), txt.str());
    } catch (const IoError& e) {
        log << "i/o error: " << e.what() << "\n";
        return kIoError;
    }
    return code;
}

} // namespace dsm::cli
