#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

namespace speclab {

inline constexpr const char* kArtifactVersion = "0.1.0";

// Pass/fail bars the runner judges experiments against; every field can be
// overridden from the config's "tolerances" object.
struct ToleranceSet {
    double observability_r2 = 0.9;
    double doubling_r2 = 0.8;
    double power_gap = 1e-6;
    double control_residual = 1e-8;
    double curve_slack = 1e-9;
    double product_slack = 1e-9;
};

struct SensorBox {
    std::vector<double> lo, hi;
};

struct ExperimentEntry {
    std::string name;      // unique output basename, defaults to the kind
    std::string kind;
    nlohmann::json params; // kind-specific, validated at parse time
};

struct ExperimentConfig {
    int dimension = 1;
    int grid = 16;
    std::string symbol = "helmholtz";
    double nu = 2.0;
    double shift = 1.0;
    std::vector<SensorBox> sensor;
    std::uint64_t seed = 0;
    std::string output;    // optional default output directory
    ToleranceSet tolerances;
    std::vector<ExperimentEntry> experiments;
    std::string digest;    // FNV-1a of the canonical dump, key-order stable
};

// Strict parse: unknown keys and malformed values are ConfigErrors carrying
// the origin and the JSON path of the offending field.
ExperimentConfig parse_config(const std::string& text, const std::string& origin);
ExperimentConfig load_config(const std::string& path);

// (kind, one line description) in the order list-experiments prints them.
const std::vector<std::pair<std::string, std::string>>& experiment_catalog();

struct ExperimentOutcome {
    std::string name;
    std::string kind;
    bool ok = false;
    std::string message;            // diagnostic when not ok
    double seconds = 0.0;
    std::vector<std::string> files; // artifacts written, relative to out dir
};

struct RunReport {
    std::vector<ExperimentOutcome> outcomes;
    std::string out_dir;
    std::string manifest_path;
    int exit_code = 0; // 0 clean, 1 when any experiment failed, 3 on I/O loss
};

// Precedence: explicit CLI value, config "output", SPECLAB_OUT, "speclab-out".
std::string resolve_out_dir(const std::string& cli_out, const ExperimentConfig& cfg);

// Executes every experiment (a bounded pool when jobs > 1; each job owns its
// files), writes one CSV + JSON pair per experiment plus manifest.json, and
// never lets one failure disturb another's outputs.
RunReport run_experiments(const ExperimentConfig& cfg, const std::string& out_dir,
                          int jobs = 1);

} // namespace speclab
