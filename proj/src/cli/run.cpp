#include "dsm/cli.hpp"
#include "dsm/fit.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

namespace dsm::cli {

using nlohmann::json;

namespace {

std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::string cur;
    std::istringstream is(s);
    while (std::getline(is, cur, sep)) out.push_back(cur);
    if (!s.empty() && s.back() == sep) out.emplace_back();
    return out;
}

std::string trim(const std::string& s) {
    const auto a = s.find_first_not_of(" \t");
    if (a == std::string::npos) return "";
    const auto b = s.find_last_not_of(" \t");
    return s.substr(a, b - a + 1);
}

double parse_number(const std::string& s) {
    const std::string t = trim(s);
    size_t used = 0;
    double v = 0;
    try {
        v = std::stod(t, &used);
    } catch (const std::exception&) {
        throw ConfigError("not a number: '" + s + "'");
    }
    if (used != t.size()) throw ConfigError("not a number: '" + s + "'");
    return v;
}

std::string fmt17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

const std::set<std::string>& ops_needing_start() {
    static const std::set<std::string> s{"geodesic", "transport", "field", "pythagoras"};
    return s;
}

bool ends_with(const std::string& s, const std::string& suf) {
    return s.size() >= suf.size() && s.compare(s.size() - suf.size(), suf.size(), suf) == 0;
}

std::string stem(const std::string& path) {
    const auto slash = path.find_last_of('/');
    const auto dot = path.find_last_of('.');
    if (dot == std::string::npos || (slash != std::string::npos && dot < slash)) return path;
    return path.substr(0, dot);
}

StructureOptions structure_options(const RunConfig& c) {
    StructureOptions so;
    so.tol = tolerances(c.tol);
    so.geometry.cond4_tol = so.tol.cond4;
    so.geometry.hess_tol = so.tol.hess;
    return so;
}

std::vector<Vec> points_for(const ModelDefinition& m, const RunConfig& c) {
    if (c.start) return {*c.start};
    return grid_points(m, c.grid);
}

json metric_evidence(const MetricResult& r) {
    json j;
    j["g"] = to_json(r.g);
    j["deviation"] = r.deviation;
    j["members"] = r.members;
    json hs = json::array();
    for (const Mat& h : r.member_hessians) hs.push_back(to_json(h));
    j["member_hessians"] = hs;
    if (!r.varying_terms.empty()) {
        j["varying_terms"] = r.varying_terms;
        j["varying_term_label"] = r.varying_term_label;
    }
    return j;
}

double max_abs(const Mat& m) { return m.size() ? m.cwiseAbs().maxCoeff() : 0.0; }

void note_max(json& residuals, const std::string& key, double v) {
    if (!residuals.contains(key) || residuals[key].get<double>() < v) residuals[key] = v;
}

json op_metric(const ModelDefinition& m, const RunConfig& c, const StructureOptions& so, json& residuals,
               json& verdicts) {
    json pts = json::array();
    bool cond4 = true;
    for (const Vec& t : points_for(m, c)) {
        json p;
        p["theta"] = to_json(t);
        try {
            const MetricResult r = metric_at(m, t, so.geometry);
            p.update(metric_evidence(r));
            if (m.oracle.metric) note_max(residuals, "metric_vs_oracle", max_abs(Mat(r.g - m.oracle.metric(t))));
        } catch (const Condition4Violated& e) {
            cond4 = false;
            p.update(metric_evidence(e.evidence));
            const double ratio = e.varying_ratio();
            if (std::isfinite(ratio)) p["varying_ratio"] = ratio;
            p["failure"] = e.what();
        } catch (const MetricNotPD& e) {
            verdicts["metric_pd"] = "fail";
            p["failure"] = e.what();
        }
        pts.push_back(p);
    }
    verdicts["condition4"] = cond4 ? "pass" : "fail";
    return json{{"points", pts}};
}

json op_connection(const ModelDefinition& m, const RunConfig& c, const StructureOptions& so, json& residuals,
                   json& verdicts, bool with_curvature) {
    json pts = json::array();
    bool probes = true, flat = true, cond4 = true;
    for (const Vec& t : points_for(m, c)) {
        json p;
        p["theta"] = to_json(t);
        try {
            const ConnectionResult r = connection_at(m, t, so.geometry, false);
            p["omega"] = to_json(r.omega);
            p["probe_consistency"] = r.probe_consistency;
            p["probe_condition"] = r.probe_condition;
            p["torsion"] = torsion_residual(r.omega);
            if (!(r.probe_consistency <= so.tol.hess)) probes = false;
            if (m.oracle.connection)
                note_max(residuals, "connection_vs_oracle", (r.omega - m.oracle.connection(t)).max_abs());
            if (with_curvature) {
                const Tensor4 R = curvature_at(m, t, so.geometry);
                const int n = m.chart.dim();
                json comp = json::array();
                for (int l = 0; l < n; ++l) {
                    json a = json::array();
                    for (int k = 0; k < n; ++k) {
                        json b = json::array();
                        for (int i = 0; i < n; ++i) {
                            json row = json::array();
                            for (int j = 0; j < n; ++j) row.push_back(R(l, k, i, j));
                            b.push_back(row);
                        }
                        a.push_back(b);
                    }
                    comp.push_back(a);
                }
                p["curvature"] = comp;
                p["curvature_max_abs"] = R.max_abs();
                p["codazzi_max_abs"] = codazzi_residual(m, t, so.geometry).max_abs();
                if (R.max_abs() > so.tol.flat) flat = false;
            }
        } catch (const Condition4Violated& e) {
            cond4 = false;
            p["failure"] = e.what();
        }
        pts.push_back(p);
    }
    verdicts["condition4"] = cond4 ? "pass" : "fail";
    if (cond4) verdicts["probe_consistency"] = probes ? "pass" : "fail";
    if (with_curvature && cond4) verdicts["flat"] = flat ? "pass" : "fail";
    return json{{"points", pts}};
}

Vec start_or_centre(const ModelDefinition& m, const RunConfig& c) {
    if (c.start) return *c.start;
    const std::vector<Vec> g = grid_points(m, "default");
    return g[g.size() / 2];
}

std::vector<Vec> targets_or_grid(const ModelDefinition& m, const RunConfig& c) {
    if (!c.targets.empty()) return c.targets;
    return grid_points(m, c.grid);
}

json op_affine(const ModelDefinition& m, const RunConfig& c, const StructureOptions& so, json& residuals,
               json& verdicts) {
    const Vec t0 = start_or_centre(m, c);
    const std::vector<Vec> targets = targets_or_grid(m, c);
    json res;
    res["theta0"] = to_json(t0);
    try {
        const AffineCoordinateMap a = affine_coordinates(m, t0, targets, so);
        json samples = json::array();
        for (size_t i = 0; i < targets.size(); ++i)
            samples.push_back({{"theta", to_json(targets[i])},
                               {"Theta", to_json(a.values[i])},
                               {"gradient", to_json(a.gradients[i])}});
        res["samples"] = samples;
        residuals["path"] = a.path_residual;
        verdicts["flat"] = "pass";
        if (m.oracle.affine) {
            std::vector<Vec> ref;
            for (const Vec& t : targets) ref.push_back(m.oracle.affine(t));
            residuals["affine_vs_oracle_gauge"] = affine_gauge_residual(a.values, ref);
        }
    } catch (const NotFlat& e) {
        verdicts["flat"] = "fail";
        res["failure"] = e.what();
    }
    return res;
}

json op_massieu(const ModelDefinition& m, const RunConfig& c, const StructureOptions& so, json& residuals,
                json& verdicts) {
    const Vec t0 = start_or_centre(m, c);
    const std::vector<Vec> targets = targets_or_grid(m, c);
    json res;
    res["theta0"] = to_json(t0);
    try {
        const MassieuSample s = massieu(m, t0, targets, so);
        json samples = json::array();
        for (size_t i = 0; i < targets.size(); ++i)
            samples.push_back({{"theta", to_json(targets[i])}, {"phi", s.phi[i]}, {"alpha", to_json(s.alpha[i])}});
        res["samples"] = samples;
        residuals["path"] = s.path_residual;
        residuals["curl"] = s.curl_residual;
        residuals["hessian_vs_metric"] = s.hessian_residual;
        verdicts["integrable"] = "pass";
        if (m.oracle.massieu && m.oracle.affine) {
            std::vector<double> ref;
            std::vector<Vec> aff;
            for (const Vec& t : targets) {
                ref.push_back(m.oracle.massieu(t));
                aff.push_back(m.oracle.affine(t));
            }
            residuals["massieu_vs_oracle_gauge"] = massieu_gauge_residual(s.phi, ref, aff);
        }
    } catch (const NotIntegrable& e) {
        verdicts["integrable"] = "fail";
        res["failure"] = e.what();
    } catch (const NotFlat& e) {
        verdicts["flat"] = "fail";
        res["failure"] = e.what();
    }
    return res;
}

json trace_summary(const Trace& tr) {
    json j;
    j["kind"] = trace_kind_name(tr.kind);
    j["samples"] = tr.samples.size();
    j["step"] = tr.step;
    j["order"] = tr.order;
    j["domain_exit"] = tr.domain_exit;
    if (!tr.note.empty()) j["note"] = tr.note;
    if (!tr.samples.empty()) {
        j["final_t"] = tr.samples.back().t;
        j["final_theta"] = to_json(tr.samples.back().theta);
        if (tr.samples.back().v.size()) j["final_v"] = to_json(tr.samples.back().v);
    }
    return j;
}

json op_fit(const ModelDefinition& m, const RunConfig& c, json& residuals) {
    if (c.data.empty()) throw ConfigError("op fit needs --data");
    const DataSet x = parse_data(c.data);
    const Vec t0 = start_or_centre(m, c);
    FitOptions fo;
    const FitResult r = fit(m, x, t0, fo);
    json j;
    j["data"] = x.describe();
    j["theta_start"] = to_json(t0);
    j["theta_star"] = to_json(r.theta_star.coords);
    j["chart"] = r.theta_star.chart_id;
    j["divergence"] = r.divergence_value;
    j["gradient_norm"] = r.gradient_norm;
    j["iterations"] = r.iterations;
    j["converged"] = r.converged;
    if (m.closed_form_fit)
        if (const auto cf = m.closed_form_fit(x)) {
            j["closed_form"] = to_json(*cf);
            residuals["fit_vs_closed_form"] = (r.theta_star.coords - *cf).cwiseAbs().maxCoeff();
        }
    return j;
}

} // namespace

const std::vector<std::string>& op_names() {
    static const std::vector<std::string> ops{"fit",    "metric",   "connection", "curvature", "classify",  "affine",
                                              "massieu", "geodesic", "transport",  "field",     "pythagoras", "report"};
    return ops;
}

Vec parse_vector(const std::string& s) {
    const std::vector<std::string> parts = split(s, ',');
    if (parts.empty()) throw ConfigError("empty vector");
    Vec v(static_cast<Eigen::Index>(parts.size()));
    for (size_t i = 0; i < parts.size(); ++i) v(static_cast<Eigen::Index>(i)) = parse_number(parts[i]);
    return v;
}

std::vector<Vec> parse_points(const std::string& s) {
    std::vector<Vec> out;
    for (const std::string& p : split(s, ';'))
        if (!trim(p).empty()) out.push_back(parse_vector(p));
    return out;
}

std::vector<Vec> grid_points(const ModelDefinition& m, const std::string& spec) {
    std::vector<Vec> pts;
    if (spec.empty() || spec == "default") {
        pts = default_grid(m);
    } else if (spec.rfind("axes:", 0) == 0) {
        std::vector<Vec> axes;
        for (const Vec& a : parse_points(spec.substr(5))) {
            if (a.size() != 3 || a(2) < 1 || a(2) != std::floor(a(2)))
                throw ConfigError("grid axes need lo,hi,n with integer n >= 1");
            const int n = static_cast<int>(a(2));
            axes.push_back(n == 1 ? Vec(Vec::Constant(1, a(0))) : Vec(Vec::LinSpaced(n, a(0), a(1))));
        }
        if (static_cast<int>(axes.size()) != m.chart.dim()) throw ConfigError("grid axes do not match the chart dimension");
        std::vector<Eigen::Index> idx(axes.size(), 0);
        while (true) {
            Vec p(static_cast<Eigen::Index>(axes.size()));
            for (size_t i = 0; i < axes.size(); ++i) p(static_cast<Eigen::Index>(i)) = axes[i](idx[i]);
            pts.push_back(p);
            int i = static_cast<int>(axes.size()) - 1;
            while (i >= 0 && ++idx[i] == axes[i].size()) idx[i--] = 0;
            if (i < 0) break;
        }
    } else {
        pts = parse_points(spec);
    }
    for (const Vec& p : pts) {
        if (p.size() != m.chart.dim()) throw ConfigError("grid point has the wrong dimension");
        if (!m.chart.contains(p)) {
            std::ostringstream os;
            os << "grid point (" << p.transpose() << ") lies outside chart '" << m.chart.id << "'";
            throw ConfigError(os.str());
        }
    }
    if (pts.empty()) throw ConfigError("grid is empty");
    return pts;
}

DataSet parse_data(const std::string& spec) {
    const auto colon = spec.find(':');
    if (colon == std::string::npos) throw ConfigError("data spec needs 'kind:args', got '" + spec + "'");
    const std::string kind = spec.substr(0, colon), args = spec.substr(colon + 1);
    auto nums = [&](size_t n) {
        const Vec v = parse_vector(args);
        if (static_cast<size_t>(v.size()) != n) throw ConfigError("data '" + kind + "' needs " + std::to_string(n) + " numbers");
        return v;
    };
    try {
        if (kind == "gaussian") { const Vec v = nums(2); return DataSet::analytic(Gaussian{v(0), v(1)}); }
        if (kind == "uniform") { const Vec v = nums(2); return DataSet::analytic(Uniform{v(0), v(1)}); }
        if (kind == "twopoint") { const Vec v = nums(2); return DataSet::analytic(TwoPoint{v(0), v(1)}); }
        if (kind == "exponential") { const Vec v = nums(1); return DataSet::analytic(Exponential{v(0)}); }
        if (kind == "gumbel") { const Vec v = nums(2); return DataSet::analytic(Gumbel{v(0), v(1)}); }
        if (kind == "vmf") {
            const Vec v = nums(4);
            return DataSet::analytic(VonMisesFisher{v(0), Eigen::Vector3d(v(1), v(2), v(3))});
        }
        if (kind == "sample") {
            const Vec v = parse_vector(args);
            return DataSet::empirical(std::vector<double>(v.data(), v.data() + v.size()));
        }
        if (kind == "regression") {
            const std::vector<Vec> xy = parse_points(args);
            if (xy.size() != 2) throw ConfigError("regression data needs 'x1,x2,...;y1,y2,...'");
            return DataSet::regression(std::vector<double>(xy[0].data(), xy[0].data() + xy[0].size()),
                                       std::vector<double>(xy[1].data(), xy[1].data() + xy[1].size()));
        }
        if (kind == "moments") {
            std::map<std::string, double> v;
            for (const std::string& kv : split(args, ',')) {
                const auto eq = kv.find('=');
                if (eq == std::string::npos) throw ConfigError("moments need key=value pairs");
                v[trim(kv.substr(0, eq))] = parse_number(kv.substr(eq + 1));
            }
            return DataSet::moments(std::move(v));
        }
    } catch (const DomainError& e) {
        throw ConfigError(std::string("invalid data set: ") + e.what());
    }
    throw ConfigError("unknown data kind '" + kind + "'");
}

Tolerances tolerances(const std::map<std::string, double>& overrides) {
    Tolerances t;
    const std::map<std::string, double*> slots{{"cond4", &t.cond4},     {"hess", &t.hess},       {"torsion", &t.torsion},
                                               {"flat", &t.flat},       {"codazzi", &t.codazzi}, {"path", &t.path},
                                               {"massieu", &t.massieu}, {"pythagoras", &t.pythagoras}};
    for (const auto& [k, v] : overrides) {
        const auto it = slots.find(k);
        if (it == slots.end()) throw ConfigError("unknown tolerance '" + k + "'");
        if (!(v > 0)) throw ConfigError("tolerance '" + k + "' must be positive");
        *it->second = v;
    }
    return t;
}

json tolerances_json(const Tolerances& t) {
    return json{{"cond4", t.cond4},     {"hess", t.hess},   {"torsion", t.torsion}, {"flat", t.flat},
                {"codazzi", t.codazzi}, {"path", t.path},   {"massieu", t.massieu}, {"pythagoras", t.pythagoras}};
}

RunConfig config_from_json(const json& j) {
    if (!j.is_object()) throw ConfigError("config must be a JSON object");
    static const std::set<std::string> known{"model",  "op",   "grid", "start", "velocity", "t",     "step",
                                             "targets", "data", "levels", "kappa", "lambda", "mu0",  "sigma0",
                                             "tol",    "seed", "out",  "timing"};
    for (const auto& [k, v] : j.items())
        if (!known.count(k)) throw ConfigError("unknown config field '" + k + "'");
    RunConfig c;
    auto vec = [](const json& a) {
        if (!a.is_array()) throw ConfigError("expected an array of numbers");
        Vec v(static_cast<Eigen::Index>(a.size()));
        for (size_t i = 0; i < a.size(); ++i) v(static_cast<Eigen::Index>(i)) = a[i].get<double>();
        return v;
    };
    try {
        if (j.contains("model")) c.model = j["model"].get<std::string>();
        if (j.contains("op")) c.op = j["op"].get<std::string>();
        if (j.contains("grid")) c.grid = j["grid"].get<std::string>();
        if (j.contains("start")) c.start = vec(j["start"]);
        if (j.contains("velocity")) c.velocity = vec(j["velocity"]);
        if (j.contains("t")) c.t = j["t"].get<double>();
        if (j.contains("step")) c.step = j["step"].get<double>();
        if (j.contains("targets"))
            for (const json& p : j["targets"]) c.targets.push_back(vec(p));
        if (j.contains("data")) c.data = j["data"].get<std::string>();
        if (j.contains("levels")) c.params.levels = j["levels"].get<std::vector<double>>();
        if (j.contains("kappa")) c.params.kappa = j["kappa"].get<double>();
        if (j.contains("lambda")) c.params.lambda = j["lambda"].get<double>();
        if (j.contains("mu0")) c.params.mu0 = j["mu0"].get<double>();
        if (j.contains("sigma0")) c.params.sigma0 = j["sigma0"].get<double>();
        if (j.contains("tol")) c.tol = j["tol"].get<std::map<std::string, double>>();
        if (j.contains("seed")) c.seed = j["seed"].get<unsigned long long>();
        if (j.contains("out")) c.out = j["out"].get<std::string>();
        if (j.contains("timing")) c.timing = j["timing"].get<bool>();
    } catch (const json::exception& e) {
        throw ConfigError(std::string("bad config value: ") + e.what());
    }
    return c;
}

json config_to_json(const RunConfig& c) {
    json j;
    j["model"] = c.model;
    j["op"] = c.op;
    j["grid"] = c.grid;
    if (c.start) j["start"] = to_json(*c.start);
    if (c.velocity) j["velocity"] = to_json(*c.velocity);
    j["t"] = c.t;
    j["step"] = c.step;
    if (!c.targets.empty()) {
        json t = json::array();
        for (const Vec& p : c.targets) t.push_back(to_json(p));
        j["targets"] = t;
    }
    if (!c.data.empty()) j["data"] = c.data;
    j["levels"] = c.params.levels;
    j["kappa"] = c.params.kappa;
    j["lambda"] = c.params.lambda;
    j["mu0"] = c.params.mu0;
    j["sigma0"] = c.params.sigma0;
    j["tol"] = c.tol;
    j["seed"] = c.seed;
    j["out"] = c.out;
    j["timing"] = c.timing;
    return j;
}

void validate(const RunConfig& c) {
    if (std::find(op_names().begin(), op_names().end(), c.op) == op_names().end())
        throw ConfigError("unknown op '" + c.op + "'");
    if (c.op == "report") {
        if (c.out.empty()) throw ConfigError("op report needs --out <directory>");
        tolerances(c.tol);
        return;
    }
    if (c.model.empty()) throw ConfigError("--model is required");
    tolerances(c.tol);
    if (ops_needing_start().count(c.op) && !c.start) throw ConfigError("op " + c.op + " needs --start");
    if ((c.op == "geodesic" || c.op == "transport" || c.op == "field") && !c.velocity)
        throw ConfigError("op " + c.op + " needs --velocity");
    if (c.op == "transport" && c.targets.empty()) throw ConfigError("op transport needs --targets");
    if (c.op == "pythagoras" && c.targets.empty()) throw ConfigError("op pythagoras needs --targets");
    if (c.op == "geodesic" && !(c.t > 0)) throw ConfigError("--t must be positive");
}

json to_json(const Vec& v) { return json(std::vector<double>(v.data(), v.data() + v.size())); }

json to_json(const Mat& m) {
    json a = json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        json row = json::array();
        for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
        a.push_back(row);
    }
    return a;
}

json to_json(const Tensor3& t) {
    json a = json::array();
    for (int k = 0; k < t.dim(); ++k) {
        json b = json::array();
        for (int i = 0; i < t.dim(); ++i) {
            json row = json::array();
            for (int j = 0; j < t.dim(); ++j) row.push_back(t(k, i, j));
            b.push_back(row);
        }
        a.push_back(b);
    }
    return a;
}

json report_json(const GeometryReport& r) {
    json j;
    j["model"] = r.model;
    j["kl"] = r.kl;
    j["verdicts"] = {{"condition4", verdict_name(r.condition4)},
                     {"probe_consistency", verdict_name(r.probe_consistency)},
                     {"torsionless", verdict_name(r.torsionless)},
                     {"flat", verdict_name(r.flat)},
                     {"codazzi", verdict_name(r.codazzi)},
                     {"hessian_structure", verdict_name(r.hessian_structure)},
                     {"exponential_family", r.exponential_family}};
    j["worst"] = {{"condition4", r.worst_cond4},
                  {"probe_consistency", r.worst_probe},
                  {"torsion", r.worst_torsion},
                  {"curvature", r.worst_curvature},
                  {"codazzi", r.worst_codazzi}};
    if (r.varying_ratio) {
        j["evidence"] = {{"varying_ratio", *r.varying_ratio}, {"varying_term_label", r.varying_term_label}};
    }
    json pts = json::array();
    for (const PointReport& p : r.points) {
        json q;
        q["theta"] = to_json(p.theta);
        q["condition4"] = p.condition4;
        q["cond4_deviation"] = p.cond4_deviation;
        if (!p.varying_terms.empty()) q["varying_terms"] = p.varying_terms;
        if (p.probe_consistency) q["probe_consistency"] = *p.probe_consistency;
        if (p.torsion) q["torsion"] = *p.torsion;
        if (p.curvature) q["curvature"] = *p.curvature;
        if (p.codazzi) q["codazzi"] = *p.codazzi;
        if (!p.failure.empty()) q["failure"] = p.failure;
        pts.push_back(q);
    }
    j["points"] = pts;
    return j;
}

std::string trace_csv(const Trace& tr) {
    std::string s = "t";
    for (const std::string& n : tr.coord_names) s += "," + n;
    const bool has_v = !tr.samples.empty() && tr.samples.front().v.size() > 0;
    if (has_v)
        for (const std::string& n : tr.coord_names) s += ",v_" + n;
    s += "\n";
    for (const TraceSample& x : tr.samples) {
        s += fmt17(x.t);
        for (Eigen::Index i = 0; i < x.theta.size(); ++i) s += "," + fmt17(x.theta(i));
        if (has_v)
            for (Eigen::Index i = 0; i < x.v.size(); ++i) s += "," + fmt17(x.v(i));
        s += "\n";
    }
    return s;
}

RunOutput execute(const RunConfig& c) {
    validate(c);
    const ModelDefinition m = make_model(c.model, c.params);
    const StructureOptions so = structure_options(c);
    if (c.start) {
        if (c.start->size() != m.chart.dim()) throw ConfigError("--start has the wrong dimension");
        if (!m.chart.contains(*c.start)) throw ConfigError("--start lies outside chart '" + m.chart.id + "'");
    }
    if (c.velocity && c.velocity->size() != m.chart.dim()) throw ConfigError("--velocity has the wrong dimension");
    for (const Vec& t : c.targets)
        if (t.size() != m.chart.dim() || !m.chart.contains(t)) throw ConfigError("a target lies outside the chart");

    RunOutput out;
    json results, residuals = json::object(), verdicts = json::object();
    const std::string& op = c.op;
    if (op == "fit") {
        results = op_fit(m, c, residuals);
    } else if (op == "metric") {
        results = op_metric(m, c, so, residuals, verdicts);
    } else if (op == "connection") {
        results = op_connection(m, c, so, residuals, verdicts, false);
    } else if (op == "curvature") {
        results = op_connection(m, c, so, residuals, verdicts, true);
    } else if (op == "classify") {
        const GeometryReport r = classify(m, grid_points(m, c.grid), so);
        results = report_json(r);
        verdicts = results["verdicts"];
        results.erase("verdicts");
    } else if (op == "affine") {
        results = op_affine(m, c, so, residuals, verdicts);
    } else if (op == "massieu") {
        results = op_massieu(m, c, so, residuals, verdicts);
    } else if (op == "geodesic") {
        Trace tr = geodesic(m, *c.start, *c.velocity, c.t, c.step, so.geometry);
        results = trace_summary(tr);
        if (m.name == "gce" && !tr.samples.empty()) {
            const TraceSample& e = tr.samples.back();
            residuals["geodesic_vs_closed_form"] =
                (e.theta - gce_geodesic_oracle(*c.start, *c.velocity, e.t)).cwiseAbs().maxCoeff();
        }
        out.trace = std::move(tr);
    } else if (op == "transport") {
        std::vector<Vec> curve{*c.start};
        curve.insert(curve.end(), c.targets.begin(), c.targets.end());
        Trace tr = parallel_transport(m, curve, *c.velocity, 50, so.geometry);
        results = trace_summary(tr);
        if (m.name == "gce") {
            double worst = 0;
            for (const TraceSample& s : tr.samples)
                worst = std::max(worst, (s.v - gce_field_oracle((*c.start)(1), (*c.velocity)(0), s.theta))
                                            .cwiseAbs()
                                            .maxCoeff());
            residuals["transport_vs_closed_form"] = worst;
        }
        out.trace = std::move(tr);
    } else if (op == "field") {
        try {
            FieldResult f = covariant_constant_field(m, *c.start, *c.velocity, grid_points(m, c.grid), 200,
                                                     so.tol.flat, so.geometry);
            results = trace_summary(f.trace);
            residuals["spot_check"] = f.spot_check_residual;
            verdicts["flat"] = "pass";
            if (m.name == "gce") {
                double worst = 0;
                for (const TraceSample& s : f.trace.samples)
                    worst = std::max(worst, (s.v - gce_field_oracle((*c.start)(1), (*c.velocity)(0), s.theta))
                                                .cwiseAbs()
                                                .maxCoeff());
                residuals["field_vs_closed_form"] = worst;
            }
            out.trace = std::move(f.trace);
        } catch (const NotFlat& e) {
            verdicts["flat"] = "fail";
            results["failure"] = e.what();
        }
    } else if (op == "pythagoras") {
        json pts = json::array();
        double worst = 0;
        for (const Vec& other : c.targets) {
            const PythagorasResult r = pythagorean_check(m, *c.start, other, so.geometry.fibre_k);
            pts.push_back({{"m_other", to_json(other)},
                           {"deviation", r.deviation},
                           {"induced_divergence", r.induced_value},
                           {"differences", r.differences}});
            worst = std::max(worst, r.deviation);
        }
        results["pairs"] = pts;
        residuals["pythagoras"] = worst;
        verdicts["fibre_constant"] = worst <= so.tol.pythagoras ? "pass" : "fail";
    } else {
        throw ConfigError("op report is handled by report_all");
    }

    json doc;
    doc["schema_version"] = kSchemaVersion;
    doc["model"] = m.name;
    doc["op"] = op;
    doc["inputs"] = config_to_json(c);
    doc["results"] = results;
    doc["residuals"] = residuals;
    doc["verdicts"] = verdicts;
    doc["tolerances"] = tolerances_json(so.tol);
    doc["runtime_ms"] = nullptr;
    out.document = std::move(doc);
    return out;
}

void write_file(const std::string& path, const std::string& content) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot open '" + path + "' for writing");
    f << content;
    f.close();
    if (!f) throw IoError("failed writing '" + path + "'");
}

int run(const RunConfig& c, std::ostream& log) {
    try {
        validate(c);
        if (c.op == "report") return report_all(c.out, c, log);
        const auto t0 = std::chrono::steady_clock::now();
        RunOutput r = execute(c);
        if (c.timing)
            r.document["runtime_ms"] =
                std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
        const std::string doc = r.document.dump(2) + "\n";
        std::string json_path = c.out, csv_path;
        if (r.trace) {
            if (ends_with(c.out, ".csv")) {
                csv_path = c.out;
                json_path = stem(c.out) + ".json";
            } else if (!c.out.empty()) {
                csv_path = stem(c.out) + ".csv";
            }
        }
        if (json_path.empty()) log << doc;
        else write_file(json_path, doc);
        if (!csv_path.empty()) write_file(csv_path, trace_csv(*r.trace));
        return kOk;
    } catch (const ConfigError& e) {
        log << "config error: " << e.what() << "\n";
        return kConfigError;
    } catch (const DomainError& e) {
        log << "config error: " << e.what() << "\n";
        return kConfigError;
    } catch (const IoError& e) {
        log << "i/o error: " << e.what() << "\n";
        return kIoError;
    } catch (const Error& e) {
        log << "numerical failure: " << e.what() << "\n";
        return kNumericalFailure;
    }
}

} // namespace dsm::cli
