#pragma once

#include "scl/search.hpp"

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace scl::cli {

/// Configuration problem: message carries the offending field path.
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct VerifyParams {
    int metric_triples = 1000;
    int duality_points = 1000;
    int vb_strategies = 200;
    int vb_paths = 10000;
    int sm_strategies = 50;
    int sm_paths = 2000;
};

struct SearchParams {
    int budget = 60;
    int n_paths = 1000;
    std::uint64_t master_seed = 1;
    std::vector<int> grids;        // refinement grids (empty: no study)
    std::vector<int> sample_sizes; // refinement sample sizes
};

/// Parsed and schema-validated experiment description. Unknown keys are
/// rejected with their field path; all physical parameters must be finite.
struct ExperimentConfig {
    int schema = 1;
    search::Problem problem;
    search::PolicyFamily family;
    SearchParams search;
    VerifyParams verify;
    std::vector<std::string> output_formats;

    static ExperimentConfig parse(const std::string& json_text);
    static ExperimentConfig load(const std::string& path);
};

/// Exit codes: 0 success, 2 config error, 3 verification failure.
int run(const std::string& config_path, const std::string& out_dir, const std::string& mode,
        std::optional<std::uint64_t> seed_override);

} // namespace scl::cli
