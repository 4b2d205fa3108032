#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "tranq/scenario.hpp"

namespace tranq::cli {

/// Environment variable naming the default output directory.
inline constexpr const char* kOutDirEnv = "TRANQ_OUT_DIR";

/// eps_total values swept by bench runs.
inline const std::vector<double> kDefaultGrid = {5e-3, 1.5e-2, 3e-2, 5e-2};

struct Overrides {
    std::optional<double> eps_total;
    std::optional<double> eps_step;
    std::optional<double> delta_T;
    std::optional<Precision> precision;
    std::optional<ErrorAccounting> accounting;
    bool no_ssd = false;
    bool no_predict = false;
};

void apply_overrides(Scenario& sc, const Overrides& o);

struct BenchRun {
    std::string label;  ///< "no-ssd" or the eps_total value
    double eps_total = 0.0;
    Timeline timeline;
    double wall_ms = 0.0;
};

/// Baseline (SSD off) followed by one run per grid value.
std::vector<BenchRun> run_bench(const Scenario& base, const std::vector<double>& grid);

/// step,t_s,rho,servers then one iteration column per run.
std::string bench_csv(const std::vector<BenchRun>& runs);

/// Poisson window summary; {"error": ...} on invalid input.
nlohmann::json poisson_debug(double lambda, double eps, double eps_ssd);

/// `--out` if given, else $TRANQ_OUT_DIR/<name>, else ./<name>.
std::filesystem::path output_path(const std::optional<std::string>& out, const std::string& name);

/// Entry point. Returns the process exit code; writes to out/err only.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace tranq::cli
