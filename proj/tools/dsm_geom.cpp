#include "dsm/cli.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <iostream>

using namespace dsm;

int main(int argc, char** argv) {
    CLI::App app{"dsm-geom: geometry of data set models"};
    std::string config_path, model, op, grid, start, velocity, targets, data, levels, out;
    double t = 1.0, step = 0.0, kappa = 0, lambda = 0, mu0 = 0, sigma0 = 0;
    std::vector<std::string> tol;
    unsigned long long seed = 42;
    bool timing = false;

    app.add_option("--config", config_path, "JSON run config; flags override its fields");
    auto* o_model = app.add_option("--model", model, "catalogue model");
    auto* o_op = app.add_option("--op", op, "operation");
    auto* o_grid = app.add_option("--grid", grid, "default | a,b;c,d | axes:lo,hi,n;lo,hi,n");
    auto* o_start = app.add_option("--start", start, "parameter point a,b");
    auto* o_vel = app.add_option("--velocity", velocity, "tangent vector a,b");
    auto* o_t = app.add_option("--t", t, "geodesic end time");
    auto* o_step = app.add_option("--step", step, "RK4 step (default 1e-3 * t)");
    auto* o_targets = app.add_option("--targets", targets, "points a,b;c,d");
    auto* o_data = app.add_option("--data", data, "data set for fit, e.g. gaussian:0,1");
    auto* o_levels = app.add_option("--levels", levels, "GCE energy levels e1,e2,...");
    auto* o_kappa = app.add_option("--kappa", kappa, "vMF concentration");
    auto* o_lambda = app.add_option("--lambda", lambda, "D_lambda weight");
    auto* o_mu0 = app.add_option("--mu0", mu0, "sum-of-squares scale for the mean");
    auto* o_sigma0 = app.add_option("--sigma0", sigma0, "sum-of-squares scale for the second moment");
    auto* o_tol = app.add_option("--tol", tol, "tolerance override key=val (repeatable)");
    auto* o_seed = app.add_option("--seed", seed, "seed for randomized sampling");
    auto* o_out = app.add_option("--out", out, "output file (directory for --op report)");
    app.add_flag("--timing", timing, "record wall-clock runtime_ms (output is no longer byte-stable)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : cli::kConfigError;
    }

    try {
        cli::RunConfig c;
        if (!config_path.empty()) {
            std::ifstream f(config_path);
            if (!f) {
                std::cerr << "i/o error: cannot read config '" << config_path << "'\n";
                return cli::kIoError;
            }
            nlohmann::json j;
            try {
                f >> j;
            } catch (const nlohmann::json::exception& e) {
                throw ConfigError(std::string("config is not valid JSON: ") + e.what());
            }
            c = cli::config_from_json(j);
        }
        if (o_model->count()) c.model = model;
        if (o_op->count()) c.op = op;
        if (o_grid->count()) c.grid = grid;
        if (o_start->count()) c.start = cli::parse_vector(start);
        if (o_vel->count()) c.velocity = cli::parse_vector(velocity);
        if (o_t->count()) c.t = t;
        if (o_step->count()) c.step = step;
        if (o_targets->count()) c.targets = cli::parse_points(targets);
        if (o_data->count()) c.data = data;
        if (o_levels->count()) {
            const Vec v = cli::parse_vector(levels);
            c.params.levels.assign(v.data(), v.data() + v.size());
        }
        if (o_kappa->count()) c.params.kappa = kappa;
        if (o_lambda->count()) c.params.lambda = lambda;
        if (o_mu0->count()) c.params.mu0 = mu0;
        if (o_sigma0->count()) c.params.sigma0 = sigma0;
        for (const std::string& kv : tol) {
            const auto eq = kv.find('=');
            if (eq == std::string::npos) throw ConfigError("--tol expects key=val, got '" + kv + "'");
            c.tol[kv.substr(0, eq)] = cli::parse_vector(kv.substr(eq + 1))(0);
        }
        (void)o_tol;
        if (o_seed->count()) c.seed = seed;
        if (o_out->count()) c.out = out;
        if (timing) c.timing = true;
        if (c.op.empty()) throw ConfigError("--op is required");
        return cli::run(c, std::cerr);
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return cli::kConfigError;
    }
}
