#pragma once

#include "dsm/models.hpp"
#include "dsm/structure.hpp"
#include "dsm/transport.hpp"

#include <json.hpp>

#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

namespace dsm::cli {

enum ExitCode { kOk = 0, kConfigError = 1, kNumericalFailure = 2, kIoError = 3 };

class IoError : public Error {
public:
    using Error::Error;
};

inline constexpr int kSchemaVersion = 1;

struct RunConfig {
    std::string model;
    std::string op;
    CatalogueParams params;
    /// "default", explicit points "a,b;c,d", or "axes:lo,hi,n;lo,hi,n".
    std::string grid = "default";
    std::optional<Vec> start;
    std::optional<Vec> velocity;
    double t = 1.0;
    double step = 0.0;
    std::vector<Vec> targets;
    /// Data set spec for fit, e.g. "gaussian:0,1" or "moments:mean=0,second_moment=1,entropy=1.4".
    std::string data;
    std::map<std::string, double> tol;
    unsigned long long seed = 42;
    std::string out;
    bool timing = false;
};

const std::vector<std::string>& op_names();

/// Unknown fields are rejected with ConfigError.
RunConfig config_from_json(const nlohmann::json& j);
nlohmann::json config_to_json(const RunConfig& c);
void validate(const RunConfig& c);

Tolerances tolerances(const std::map<std::string, double>& overrides);
nlohmann::json tolerances_json(const Tolerances& t);

Vec parse_vector(const std::string& s);
std::vector<Vec> parse_points(const std::string& s);
std::vector<Vec> grid_points(const ModelDefinition& m, const std::string& spec);
DataSet parse_data(const std::string& spec);

nlohmann::json to_json(const Vec& v);
nlohmann::json to_json(const Mat& m);
nlohmann::json to_json(const Tensor3& t);
nlohmann::json report_json(const GeometryReport& r);

/// header t,coords...,v_coords...; 17 significant digits
std::string trace_csv(const Trace& tr);

struct RunOutput {
    nlohmann::json document;
    std::optional<Trace> trace;
};

/// Computes one operation; throws on failure. Structural verdicts are data, not errors.
RunOutput execute(const RunConfig& c);

/// Executes and writes files; returns the exit code, messages go to log.
int run(const RunConfig& c, std::ostream& log);

/// Classify plus oracle comparisons for the whole catalogue: one JSON per model,
/// summary.json and summary.txt in out_dir.
int report_all(const std::string& out_dir, const RunConfig& base, std::ostream& log);

/// Per-model entry of report_all, exposed for tests.
nlohmann::json model_report(const std::string& name, const RunConfig& base);
/// Short label: yes, no-curved, no, fail-cond4, n/a-flat, n/a-fail.
std::string summary_label(const GeometryReport& r);

void write_file(const std::string& path, const std::string& content);

} // namespace dsm::cli
