#pragma once

#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <string>

#include "tranq/chain.hpp"
#include "tranq/poisson.hpp"

namespace tranq {

/// How an SSD step charges its error.
/// absolute: eps_S + xi_S * max(Pi_inf), the infinity-norm bound on p - Pi_inf.
/// relative: eps_S + xi_S, the scale-free form. Never smaller than absolute.
enum class ErrorAccounting { absolute, relative };

std::string to_string(ErrorAccounting a);
std::optional<ErrorAccounting> parse_accounting(std::string_view s);

struct SolverConfig {
    double eps_step = 1e-7;        ///< truncation error bound per solve-step
    double eps_ssd_factor = 1e-3;  ///< eps_ssd = eps_step * factor
    double delta_T = 5.5e-2;       ///< prediction admissibility threshold
    int check_spacing = 0;         ///< iterations between convergence checks; 0 = max(1, (k-l)/64)
    bool ssd = true;               ///< false forces delta = 0 (plain uniformization)
    bool predict = true;           ///< convergence-error prediction
    Precision precision = Precision::binary64;
    ErrorAccounting accounting = ErrorAccounting::absolute;

    void validate() const;
    bool operator==(const SolverConfig&) const = default;
};

/// Snapshot of the convergence of one step's DTMC towards its stationary vector.
/// cr and cr_prime are per-iteration first and second differences of log xi.
struct ConvergenceEstimate {
    double xi_0 = 0.0;
    double xi_i = 0.0;
    double cr = 0.0;
    double cr_prime = 0.0;
    double K_eps = 0.0;
};

enum class StepOutcome { full_sum, ssd_direct, ssd_predicted };

std::string to_string(StepOutcome o);
std::optional<StepOutcome> parse_outcome(std::string_view s);

struct StepResult {
    ProbVector p_out;
    double eps_out = 0.0;
    std::int64_t iterations = 0;  ///< DTMC multiplications performed
    StepOutcome outcome = StepOutcome::full_sum;
    std::int64_t detection_index = -1;  ///< S (or l_S for prediction) when SSD fired
    std::int64_t left = 0;              ///< l of the step's Poisson weights
    std::int64_t right = 0;             ///< k of the step's Poisson weights
    double flushed_mass = 0.0;          ///< mass zeroed by binary32 flushing
};

/// max_i |v_i - v_inf_i| / max_i |v_inf_i|. Throws when v_inf is all zero.
double relative_distance(std::span<const double> v, std::span<const double> v_inf);
double relative_distance(std::span<const float> v, std::span<const float> v_inf);
double relative_distance(const ProbVector& v, const ProbVector& v_inf);

/// Iteration shift caused by an initial vector already eps_t closer to the
/// stationary vector than the exact one. Uses est.xi_0 and est.xi_i as the
/// distances after 0 and S iterations. Returns +inf when the estimate shows no
/// convergence.
double k_epsilon(const ConvergenceEstimate& est, double eps_t, std::int64_t S);

/// Second-order Taylor extrapolation of log xi from iteration i to l_S.
double predict_log_xi(const ConvergenceEstimate& est, std::int64_t i, std::int64_t l_S);

/// Builds an estimate from log xi sampled every `spacing` iterations, newest
/// last. Returns nullopt when fewer than three samples exist or any is not finite.
std::optional<ConvergenceEstimate> estimate_from_checkpoints(double xi_0, std::span<const double> log_xi,
                                                             std::int64_t spacing);

/// m_check actually used for a step with the given Poisson weights.
std::int64_t effective_check_spacing(const SolverConfig& cfg, const PoissonWeights& pw);

/// Advances p_in over one homogeneous interval.
/// delta is the steady-state detection threshold (0 disables detection),
/// eps_t the error bound carried into the step.
StepResult solve_step(const ProbVector& p_in, const StepParams& step, const SolverConfig& cfg, double delta,
                      double eps_t);

/// Stop-at-S variant in which Pi(S) stands in for every later DTMC vector:
/// Pi(S) when S <= l, sum_{l..S} w_i Pi(i) + Pi(S)(1 - sum_{l..S} w_i) when
/// l < S <= k, the plain truncated sum beyond k. Weights are normalized by W.
/// Used to check the a-priori bound eps/2 + 2 ||Pi(S) - Pi_inf||.
struct ForcedStop {
    ProbVector p_hat;
    double distance = 0.0;  ///< ||Pi(S) - Pi_inf||_inf, absolute
};

ForcedStop forced_stop_sum(const ProbVector& p_in, const StepParams& step, double eps_step, std::int64_t S);

}  // namespace tranq
