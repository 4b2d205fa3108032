#include "tranq/poisson.hpp"

#include <cmath>
#include <limits>
#include <string>

namespace tranq {

namespace {

// Window sizing: count = floor(sqrt(lambda) * kWindowScale) + kWindowPad,
// centred kWindowShift to the right of the mode.
constexpr PoissonWeights::Index kWindowScale = 30;
constexpr PoissonWeights::Index kWindowPad = 44;
constexpr PoissonWeights::Index kWindowShift = 21;

constexpr double kModeAnchor = 0x1.0p176;
constexpr double kEpsilonFloor = 1e-50;

}  // namespace

PoissonRangeError::PoissonRangeError(double lambda)
    : std::domain_error("Poisson parameter " + std::to_string(lambda) + " exceeds supported maximum " +
                        std::to_string(kMaxPoissonLambda)),
      lambda_(lambda) {}

PoissonWeights::PoissonWeights(double lambda, double epsilon, double epsilon_ssd) {
    lambda_ = lambda;
    if (!(lambda > 0.0) || !(epsilon < 1.0)) {
        total_weight_ = std::numeric_limits<double>::quiet_NaN();
        return;
    }
    if (lambda > kMaxPoissonLambda) throw PoissonRangeError(lambda);

    if (epsilon < kEpsilonFloor) epsilon = kEpsilonFloor;
    if (epsilon_ssd < kEpsilonFloor) epsilon_ssd = kEpsilonFloor;
    if (!(epsilon_ssd < epsilon)) epsilon_ssd = epsilon;
    epsilon_ = epsilon;
    epsilon_ssd_ = epsilon_ssd;

    const Index mode = static_cast<Index>(std::floor(lambda));
    const Index tsize = static_cast<Index>(std::sqrt(lambda) * kWindowScale) + kWindowPad;
    Index tstart = mode + kWindowShift - tsize / 2;
    if (tstart < 0) tstart = 0;
    window_start_ = tstart;
    window_size_ = tsize;

    std::vector<double> tw(static_cast<std::size_t>(tsize));
    const Index m = mode - tstart;
    tw[m] = kModeAnchor;
    for (Index j = m; j > 0; --j) tw[j - 1] = (tw[j] * static_cast<double>(j + tstart)) / lambda;
    for (Index j = m + 1; j < tsize; ++j) tw[j] = (lambda * tw[j - 1]) / static_cast<double>(j + tstart);

    // Ascending over the left flank, descending over the right flank.
    double total = 0.0;
    for (Index j = 0; j < m; ++j) total += tw[j];
    double right_sum = 0.0;
    for (Index j = tsize - 1; j >= m; --j) right_sum += tw[j];
    total += right_sum;
    total_weight_ = total;

    double threshold = (epsilon_ssd * total) / 2.0;
    Index i = 0;
    double cdf = tw[0];
    while (cdf < threshold) cdf += tw[++i];
    start_ = i + tstart;
    const double cdf_start = cdf;

    threshold = (epsilon * total) / 2.0;
    while (cdf < threshold) cdf += tw[++i];
    left_ = i + tstart;

    i = tsize - 1;
    cdf = tw[i];
    while (cdf < threshold) cdf += tw[--i];
    right_ = i + tstart;

    weights_.resize(static_cast<std::size_t>(right_ - start_ + 1));
    weights_[0] = cdf_start;
    for (Index j = start_ + 1; j < left_; ++j) weights_[j - start_] = weights_[j - start_ - 1] + tw[j - tstart];
    for (Index j = left_; j <= right_; ++j) weights_[j - start_] = tw[j - tstart];

    valid_ = true;
}

double PoissonWeights::weight(Index n) const noexcept {
    return (valid_ && n >= start_ && n <= right_) ? weights_[n - start_] : 0.0;
}

double PoissonWeights::weighted(double value, Index n) const noexcept {
    if (!valid_ || n < left_ || n > right_) return 0.0;
    const double w = weights_[n - start_];
    if (value > total_weight_) return (value / total_weight_) * w;
    return (value * w) / total_weight_;
}

double PoissonWeights::essd(Index s) const noexcept {
    return (valid_ && s >= start_ && s < left_) ? weights_[s - start_] / total_weight_ : 0.0;
}

}  // namespace tranq
