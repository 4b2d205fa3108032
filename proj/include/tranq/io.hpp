#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "tranq/scenario.hpp"

namespace tranq {

/// Scenario document <-> Scenario. Field errors are reported as ScenarioError
/// with the JSON path of the offending field.
Scenario load_scenario(const nlohmann::json& doc);
Scenario load_scenario_text(std::string_view text);
Scenario load_scenario_file(const std::filesystem::path& path);
nlohmann::json save_scenario(const Scenario& sc);

enum class ExampleKind { original, converging };

std::string to_string(ExampleKind k);
ExampleKind parse_example_kind(std::string_view s);

/// System sizes with a generated example and their (servers, queue) split.
inline constexpr int kExampleSizes[] = {210, 600, 1500, 4000, 9000};

/// One day of 288 five-minute periods with sinusoidal load. The mean service
/// time is one period (mu = 1/300 per s). Rates are exact period averages of
/// the sinusoid.
Scenario gen_example(ExampleKind kind, int size);
std::string example_name(ExampleKind kind, int size);

struct ResultRow {
    double t = 0.0;
    double ES = 0.0;
    double p_tail = 0.0;
    double SL = 0.0;
    double eps_accum = 0.0;
    std::int64_t iterations = 0;
    std::string outcome;
};

struct ResultFile {
    std::filesystem::path csv;
    std::filesystem::path metadata;
    std::size_t rows = 0;
};

inline constexpr std::string_view kResultHeader = "t_s,ES,p_tail,SL_d,eps_accum,iterations,outcome";

std::vector<ResultRow> result_rows(const Timeline& tl, double d);
std::string format_results_csv(const std::vector<ResultRow>& rows);
std::vector<ResultRow> parse_results_csv(std::string_view text);

/// Writes the CSV and a "<csv>.meta.json" sidecar holding `metadata` plus
/// summary figures. Files are written to temporaries and renamed; nothing is
/// left behind on failure.
ResultFile save_results(const Timeline& tl, const std::filesystem::path& path, double d,
                        const nlohmann::json& metadata = nlohmann::json::object());

nlohmann::json timeline_summary(const Timeline& tl, double capacity_threshold);

}  // namespace tranq
