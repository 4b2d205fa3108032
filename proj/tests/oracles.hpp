#pragma once

// Reference computations that share no code with the library. Used to derive
// the expected values frozen into the tests.

#include <cstdint>
#include <vector>

#include "tranq/chain.hpp"

namespace oracle {

using Matrix = std::vector<std::vector<double>>;

/// Poisson probability e^-lambda lambda^i / i! evaluated in 50 decimal digits.
double poisson_pmf(double lambda, std::int64_t i);
/// P(X < i) and P(X > i), 50 digits, summed outward until terms vanish.
double poisson_cdf_below(double lambda, std::int64_t i);
double poisson_tail_above(double lambda, std::int64_t i);

/// Dense M/M/s/n generator.
Matrix generator(const tranq::StepParams& step);
/// Dense I + Q/alpha.
Matrix transition(const tranq::StepParams& step, double alpha);
/// Row vector times matrix, plain loops.
std::vector<double> row_times(const std::vector<double>& v, const Matrix& m);

/// dp/dt = p Q integrated with adaptive Dormand-Prince at abs/rel tolerance tol.
std::vector<double> transient_ode(const tranq::StepParams& step, const std::vector<double>& p0, double tol);

/// Stationary distribution from the product formula, 50 digits.
std::vector<double> stationary_product(const tranq::StepParams& step);

/// Two-state chain 0 <-> 1 with rates a (up) and b (down), start in state 0.
double two_state_p0(double a, double b, double t);

}  // namespace oracle
