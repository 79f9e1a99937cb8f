#include "dsm/cli.hpp"
#include "dsm/errors.hpp"

#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <sys/wait.h>

using namespace dsm;
using namespace dsm::cli;
using nlohmann::json;

namespace fs = std::filesystem;

namespace {

fs::path scratch() {
    const fs::path p = fs::temp_directory_path() / "dsm_geom_cli_test";
    fs::create_directories(p);
    return p;
}

int run_cli(const std::string& args) {
    const std::string cmd = std::string(DSM_GEOM_BINARY) + " " + args + " > /dev/null 2>&1";
    const int rc = std::system(cmd.c_str());
    return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p);
    std::stringstream s;
    s << in.rdbuf();
    return s.str();
}

json load(const fs::path& p) { return json::parse(slurp(p)); }

} // namespace

TEST_CASE("config round trip") {
    RunConfig c;
    c.model = "gce";
    c.op = "geodesic";
    c.start = Vec(Eigen::Vector2d(1, 0));
    c.velocity = Vec(Eigen::Vector2d(1, -1.5));
    c.t = 2.0;
    c.targets = {Eigen::Vector2d(2, 0.9)};
    c.tol = {{"cond4", 1e-6}};
    c.params.levels = {1, 2, 5};
    c.seed = 7;
    const json j = config_to_json(c);
    const RunConfig d = config_from_json(j);
    CHECK(config_to_json(d) == j);
    CHECK(d.params.levels == std::vector<double>{1, 2, 5});
    CHECK(d.seed == 7);

    json bad = j;
    bad["colour"] = "red";
    CHECK_THROWS_AS(config_from_json(bad), ConfigError);
    bad = j;
    bad["t"] = "soon";
    CHECK_THROWS_AS(config_from_json(bad), ConfigError);
}

TEST_CASE("validation") {
    RunConfig c;
    c.model = "gaussian-kl";
    c.op = "geodesic";
    CHECK_THROWS_AS(validate(c), ConfigError);
    c.start = Vec(Eigen::Vector2d(0, 1));
    CHECK_THROWS_AS(validate(c), ConfigError);
    c.velocity = Vec(Eigen::Vector2d(1, 0));
    CHECK_NOTHROW(validate(c));
    c.op = "dance";
    CHECK_THROWS_AS(validate(c), ConfigError);
    c.op = "metric";
    c.tol = {{"nonsense", 1.0}};
    CHECK_THROWS_AS(validate(c), ConfigError);
    CHECK(op_names().size() == 12);
}

TEST_CASE("parsers") {
    CHECK(parse_vector("1.5, -2") == Vec(Eigen::Vector2d(1.5, -2)));
    CHECK_THROWS_AS(parse_vector("1,x"), ConfigError);
    const auto pts = parse_points("0,1;2,3");
    REQUIRE(pts.size() == 2);
    CHECK(pts[1] == Vec(Eigen::Vector2d(2, 3)));
    const ModelDefinition m = gaussian_kl();
    CHECK(grid_points(m, "axes:-1,1,3;0.5,2,4").size() == 12);
    CHECK(grid_points(m, "default").size() == default_grid(m).size());
    CHECK(parse_data("gaussian:0,1").expectation(stat::second_moment) == doctest::Approx(1.0));
    CHECK(parse_data("regression:0,1,2;1,3,5").expectation(stat::sum_xy) == doctest::Approx(13));
    CHECK(parse_data("moments:mean=0.5,second_moment=1,entropy=1").expectation(stat::mean) == 0.5);
    CHECK_THROWS_AS(parse_data("cauchy:0,1"), ConfigError);
}

TEST_CASE("trace CSV format") {
    Trace t;
    t.coord_names = {"beta", "mu"};
    t.samples.push_back({0.0, Eigen::Vector2d(1, 0), Eigen::Vector2d(1, -1.5)});
    t.samples.push_back({0.1, Eigen::Vector2d(1.1, 1.0 / 3.0), Eigen::Vector2d(1, -1.5)});
    const std::string s = trace_csv(t);
    CHECK(s.rfind("t,beta,mu,v_beta,v_mu\n0,1,0,1,-1.5\n", 0) == 0);
    CHECK(s.find("0.33333333333333331") != std::string::npos);
}

TEST_CASE("execute") {
    RunConfig c;
    c.model = "gaussian-kl";
    c.op = "classify";
    c.tol = {{"cond4", 1e-9}};
    const RunOutput r = execute(c);
    CHECK(r.document["schema_version"] == kSchemaVersion);
    CHECK(r.document["verdicts"]["exponential_family"] == "yes");
    CHECK(r.document["tolerances"]["cond4"] == 1e-9);
    CHECK(r.document["runtime_ms"].is_null());

    c.model = "gumbel";
    const RunOutput g = execute(c);
    CHECK(g.document["verdicts"]["condition4"] == "fail");
    CHECK(g.document["results"]["evidence"]["varying_ratio"].get<double>() == doctest::Approx(1.63).epsilon(0.02));

    c.model = "gaussian-kl";
    c.op = "fit";
    c.data = "gaussian:1.5,2";
    const RunOutput f = execute(c);
    CHECK(f.document["results"]["theta_star"][1].get<double>() == doctest::Approx(2.0).epsilon(1e-9));
    CHECK(f.document["results"]["converged"] == true);
}

TEST_CASE("exit codes and files") {
    const fs::path dir = scratch();
    CHECK(run_cli("--help") == 0);
    CHECK(run_cli("--model gaussian-kl --op classify --out " + (dir / "c.json").string()) == kOk);
    CHECK(load(dir / "c.json")["verdicts"]["exponential_family"] == "yes");
    CHECK(run_cli("--model gaussian-kl --op classify --tol cond4=1e-9 --out " + (dir / "t.json").string()) == kOk);
    CHECK(load(dir / "t.json")["verdicts"]["condition4"] == "pass");

    CHECK(run_cli("--model gumbel --op classify --out " + (dir / "g.json").string()) == kOk);
    const json g = load(dir / "g.json");
    CHECK(g["verdicts"]["exponential_family"] == "no");
    CHECK(g["results"]["evidence"]["varying_ratio"].get<double>() == doctest::Approx(1.63).epsilon(0.02));

    CHECK(run_cli("--model no-such --op metric --start 0,1") == kConfigError);
    CHECK(run_cli("--model gaussian-kl --op metric --start 0,-1") == kConfigError);
    CHECK(run_cli("--model gaussian-kl --op geodesic --start 0,1") == kConfigError);
    CHECK(run_cli("--frobnicate") == kConfigError);
    CHECK(run_cli("--model gaussian-kl --op metric --start 0,1 --out /proc/nope/x.json") == kIoError);

    const fs::path cfg = dir / "cfg.json";
    std::ofstream(cfg) << R"({"model": "gaussian-kl", "op": "metric", "start": [0, 1], "colour": 3})";
    CHECK(run_cli("--config " + cfg.string()) == kConfigError);
    std::ofstream(cfg) << R"({"model": "gaussian-kl", "op": "metric", "start": [0, 2]})";
    CHECK(run_cli("--config " + cfg.string() + " --start 0,1 --out " + (dir / "m.json").string()) == kOk);
    const json m = load(dir / "m.json");
    CHECK(m["inputs"]["start"][1] == 1.0);
}

TEST_CASE("geodesic trace files") {
    const fs::path dir = scratch();
    const fs::path csv = dir / "geo.csv";
    CHECK(run_cli("--model gce --op geodesic --start 1,0 --velocity 1,-1.5 --t 1 --out " + csv.string()) == kOk);
    std::istringstream lines(slurp(csv));
    std::string header, line, last;
    std::getline(lines, header);
    CHECK(header == "t,beta,mu,v_beta,v_mu");
    int rows = 0;
    while (std::getline(lines, line)) last = line, ++rows;
    CHECK(rows == 1001);
    std::istringstream cells(last);
    std::vector<double> v;
    for (std::string cell; std::getline(cells, cell, ',');) v.push_back(std::stod(cell));
    REQUIRE(v.size() == 5);
    CHECK(v[0] == doctest::Approx(1.0));
    CHECK(std::abs(v[1] - 2.0) < 1e-6);
    CHECK(std::abs(v[2] + 0.75) < 1e-6);
    const json j = load(dir / "geo.json");
    CHECK(j["residuals"]["geodesic_vs_closed_form"].get<double>() < 1e-6);
}
