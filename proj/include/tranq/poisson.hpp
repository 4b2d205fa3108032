#pragma once

#include <cstdint>
#include <stdexcept>
#include <vector>

namespace tranq {

/// Largest Poisson parameter accepted: sqrt(INT64_MAX) / 2.
/// Beyond it the 64-bit index arithmetic of the window setup is not safe.
inline constexpr double kMaxPoissonLambda = 1518500249.0;

class PoissonRangeError : public std::domain_error {
public:
    explicit PoissonRangeError(double lambda);
    double lambda() const noexcept { return lambda_; }

private:
    double lambda_;
};

/// Truncation points and unnormalized Poisson weights for one uniformization step.
///
/// Weights are computed outward from the mode with an anchor of 2^176, so every
/// stored value stays far from binary64 under- and overflow. Indices in
/// [l, k] hold raw weights w(i) with w(i)/W the Poisson probability. Indices in
/// [l_ssd, l) hold the cumulative weight up to i, so w(i)/W there is the
/// Poisson cdf used as the truncation error of an early stop at i.
///
/// A rejected construction (lambda <= 0, epsilon >= 1) yields an object with
/// valid() == false and a NaN total weight.
class PoissonWeights {
public:
    using Index = std::int64_t;

    PoissonWeights() = default;

    /// Throws PoissonRangeError when lambda exceeds kMaxPoissonLambda.
    PoissonWeights(double lambda, double epsilon, double epsilon_ssd);

    bool valid() const noexcept { return valid_; }
    double lambda() const noexcept { return lambda_; }
    /// Effective epsilons after clamping.
    double epsilon() const noexcept { return epsilon_; }
    double epsilon_ssd() const noexcept { return epsilon_ssd_; }

    Index ls() const noexcept { return start_; }
    Index l() const noexcept { return left_; }
    Index k() const noexcept { return right_; }
    Index span() const noexcept { return valid_ ? right_ - left_ + 1 : 0; }
    double total_weight() const noexcept { return total_weight_; }

    /// Temporary window used to compute W: [window_start, window_start + window_size).
    Index window_start() const noexcept { return window_start_; }
    Index window_size() const noexcept { return window_size_; }

    /// Stored weight (raw on [l,k], cumulative on [l_ssd,l)), 0 elsewhere.
    double weight(Index n) const noexcept;

    /// value * pmf(n), ordered so the product neither overflows nor underflows early.
    double weighted(double value, Index n) const noexcept;

    /// Poisson probability of n events; 0 outside [l, k].
    double pmf(Index n) const noexcept { return weighted(1.0, n); }

    /// Poisson cdf up to S for S in [l_ssd, l); 0 otherwise.
    double essd(Index s) const noexcept;

private:
    bool valid_ = false;
    double lambda_ = 0.0;
    double epsilon_ = 0.0;
    double epsilon_ssd_ = 0.0;
    Index start_ = 0;
    Index left_ = 0;
    Index right_ = 0;
    Index window_start_ = 0;
    Index window_size_ = 0;
    double total_weight_ = 0.0;
    std::vector<double> weights_;
};

inline PoissonWeights build_poisson_weights(double lambda, double epsilon, double epsilon_ssd) {
    return PoissonWeights(lambda, epsilon, epsilon_ssd);
}

}  // namespace tranq
