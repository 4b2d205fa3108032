#pragma once

#include <chrono>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "tranq/chain.hpp"
#include "tranq/unistep.hpp"

namespace tranq {

/// Constant rates over one forecast interval.
struct Period {
    double duration = 0.0;
    double lambda = 0.0;
    double mu = 1.0;
    int servers = 1;

    bool operator==(const Period&) const = default;
};

/// How the per-step truncation budget is chosen.
/// constant: every solve-step gets cfg.eps_step.
/// proportional: the same total truncation pool (steps * eps_step) is handed
/// out in proportion to step length.
enum class BudgetMode { constant, proportional };

std::string to_string(BudgetMode m);

struct Scenario {
    double horizon = 0.0;
    std::vector<Period> periods;
    int capacity = 1;
    double eps_total = 5e-3;
    SolverConfig cfg;
    double output_dt = 300.0;  ///< 0 = period boundaries only
    BudgetMode budget = BudgetMode::constant;
    std::optional<std::vector<double>> initial;  ///< nullopt = system starts empty
    double capacity_threshold = 1.5e-3;          ///< flag when max p_n reaches this
    double sl_threshold = 20.0;                  ///< d for service-level output, time units

    /// Number of solve-steps the scenario expands to.
    std::size_t solve_step_count() const;
    ProbVector initial_vector() const;

    bool operator==(const Scenario&) const = default;
};

/// Rejection of an invalid scenario. kind distinguishes malformed input from a
/// well-formed scenario that violates a model or budget constraint.
class ScenarioError : public std::runtime_error {
public:
    enum class Kind { schema, invalid, infeasible };
    ScenarioError(Kind kind, std::string field, const std::string& message)
        : std::runtime_error(field.empty() ? message : field + ": " + message), kind_(kind), field_(std::move(field)) {}
    Kind kind() const noexcept { return kind_; }
    const std::string& field() const noexcept { return field_; }

private:
    Kind kind_;
    std::string field_;
};

/// Step failure with the index of the failing solve-step.
class StepFailure : public std::runtime_error {
public:
    StepFailure(std::size_t step, const std::string& what)
        : std::runtime_error("solve-step " + std::to_string(step) + ": " + what), step_(step) {}
    std::size_t step() const noexcept { return step_; }

private:
    std::size_t step_;
};

class SolveTimeout : public std::runtime_error {
public:
    SolveTimeout() : std::runtime_error("solve exceeded its deadline") {}
};

/// Throws ScenarioError on the first violated constraint.
void validate(const Scenario& sc);

struct TimelineRecord {
    double t = 0.0;
    std::size_t period = 0;
    ProbVector p;
    double eps_accum = 0.0;
    std::int64_t iterations = 0;
    StepOutcome outcome = StepOutcome::full_sum;
    double delta = 0.0;     ///< SSD threshold used for the step
    double eps_step = 0.0;  ///< truncation budget of the step
    int servers = 1;
    double mu = 1.0;
    double lambda = 0.0;
};

struct Timeline {
    std::vector<TimelineRecord> records;

    std::int64_t total_iterations() const;
    std::size_t ssd_steps() const;
    double max_eps() const;
    double max_tail() const;
    double first_delta() const;
};

/// delta_m = eps_total - eps_m - eps_steps_remaining, clamped at 0.
double delta_threshold(double eps_total, double eps_m, double eps_steps_remaining) noexcept;

/// eps_remaining * delta / horizon_remaining.
double proportional_budget(double eps_remaining, double delta, double horizon_remaining);

struct SolveControl {
    std::optional<std::chrono::steady_clock::time_point> deadline;
};

Timeline solve_scenario(const Scenario& sc, const SolveControl& control = {});

}  // namespace tranq
