#pragma once

#include <vector>

#include "tranq/chain.hpp"
#include "tranq/scenario.hpp"

namespace tranq {

struct MetricRecord {
    double t = 0.0;
    double ES = 0.0;
    double p_tail = 0.0;
    double SL = 0.0;
    double eps_accum = 0.0;
};

/// Expected number in system, sum_i i * p_i.
double expected_state(const ProbVector& p);

/// Probability of the last state n.
double tail_probability(const ProbVector& p);

/// Probability that an arrival seeing p waits at most d under FCFS with s
/// servers of rate mu: sum_{j<s} p_j + sum_{j>=s} p_j * P(Erlang(j-s+1, s*mu) <= d).
/// Standard virtual-waiting-time formula, not derived from the solver itself.
double service_level(const ProbVector& p, int servers, double mu, double d);

std::vector<MetricRecord> metric_records(const Timeline& tl, double d);

struct ErrorPoint {
    double t = 0.0;
    double es_error = 0.0;   ///< |ES_run - ES_ref|
    double inf_error = 0.0;  ///< max_i |p_run_i - p_ref_i|
};

/// Throws std::invalid_argument when the time grids or vector lengths differ.
std::vector<ErrorPoint> error_series(const Timeline& run, const Timeline& reference);

}  // namespace tranq
