#include "tranq/chain.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace tranq {

std::string to_string(Precision p) {
    return p == Precision::binary32 ? "binary32" : "binary64";
}

void StepParams::validate() const {
    if (!(lambda >= 0.0) || !std::isfinite(lambda)) throw std::invalid_argument("lambda must be finite and >= 0");
    if (!(mu > 0.0) || !std::isfinite(mu)) throw std::invalid_argument("mu must be finite and > 0");
    if (servers < 1) throw std::invalid_argument("servers must be >= 1");
    if (capacity < servers) throw std::invalid_argument("capacity must be >= servers");
    if (!(delta >= 0.0) || !std::isfinite(delta)) throw std::invalid_argument("delta must be finite and >= 0");
}

ProbVector ProbVector::point_mass(std::size_t states, std::size_t at, Precision prec) {
    std::vector<double> e(states, 0.0);
    e.at(at) = 1.0;
    return ProbVector(std::move(e), prec);
}

double ProbVector::sum() const noexcept {
    return std::accumulate(entries.begin(), entries.end(), 0.0);
}

double uniformization_rate(const StepParams& step) noexcept {
    return step.lambda + step.servers * step.mu;
}

bool is_converging(const StepParams& step) noexcept {
    return step.lambda < step.servers * step.mu;
}

template <class T>
void dtmc_multiply(std::span<const T> in, std::span<T> out, const StepParams& step, double alpha) noexcept {
    const std::size_t n = static_cast<std::size_t>(step.capacity);
    const std::size_t s = std::min<std::size_t>(static_cast<std::size_t>(step.servers), n);
    const T up = static_cast<T>(step.lambda / alpha);
    const T down = static_cast<T>(step.mu / alpha);
    const T one = T(1);

    // state 0: no departures
    out[0] = in[0] * (one - up) + in[1] * down;

    // 0 < j < s: down-rate j*mu
    for (std::size_t j = 1; j < s; ++j) {
        const T dj = static_cast<T>(j) * down;
        const T dj1 = static_cast<T>(j + 1) * down;
        out[j] = in[j - 1] * up + in[j] * (one - up - dj) + in[j + 1] * dj1;
    }

    // s <= j < n: down-rate s*mu
    const T ds = static_cast<T>(s) * down;
    const T stay = one - up - ds;
    for (std::size_t j = std::max<std::size_t>(s, 1); j < n; ++j) {
        out[j] = in[j - 1] * up + in[j] * stay + in[j + 1] * ds;
    }

    // state n: no arrivals
    out[n] = in[n - 1] * up + in[n] * (one - static_cast<T>(std::min(n, s)) * down);
}

template void dtmc_multiply<float>(std::span<const float>, std::span<float>, const StepParams&, double) noexcept;
template void dtmc_multiply<double>(std::span<const double>, std::span<double>, const StepParams&, double) noexcept;

template <class T>
double flush_tiny(std::span<T> v) noexcept {
    double lost = 0.0;
    for (T& x : v) {
        if (x != T(0) && std::abs(x) < static_cast<T>(kFlushThreshold)) {
            lost += static_cast<double>(x);
            x = T(0);
        }
    }
    return lost;
}

template double flush_tiny<float>(std::span<float>) noexcept;
template double flush_tiny<double>(std::span<double>) noexcept;

ProbVector dtmc_step(const ProbVector& v, const StepParams& step, double alpha) {
    if (v.size() != step.states()) throw std::invalid_argument("vector length does not match capacity + 1");
    if (v.precision == Precision::binary64) {
        std::vector<double> out(v.size());
        dtmc_multiply<double>(v.entries, out, step, alpha);
        return ProbVector(std::move(out), Precision::binary64);
    }
    std::vector<float> in(v.entries.begin(), v.entries.end());
    std::vector<float> out(v.size());
    dtmc_multiply<float>(in, out, step, alpha);
    flush_tiny<float>(out);
    return ProbVector(std::vector<double>(out.begin(), out.end()), Precision::binary32);
}

ProbVector steady_state(const StepParams& step, Precision prec) {
    const std::size_t n = static_cast<std::size_t>(step.capacity);
    const std::size_t s = static_cast<std::size_t>(step.servers);
    if (!(step.lambda > 0.0)) return ProbVector::point_mass(n + 1, 0, prec);

    const double r = step.lambda / step.mu;  // offered load s*rho
    // The weights rise up to floor(r) when rho < 1; otherwise they never
    // decrease past s and the largest one sits at n.
    const std::size_t mode =
        is_converging(step) ? std::min<std::size_t>(static_cast<std::size_t>(std::floor(r)), n) : n;

    constexpr double kAnchor = 0x1.0p176;
    constexpr double kMinNormal = std::numeric_limits<double>::min();
    auto servers_busy = [s](std::size_t k) { return static_cast<double>(std::min(k, s)); };

    std::vector<double> w(n + 1, 0.0);
    w[mode] = kAnchor;
    for (std::size_t k = mode; k > 0; --k) {
        const double next = (w[k] * servers_busy(k)) / r;
        if (!(next >= kMinNormal)) break;
        w[k - 1] = next;
    }
    for (std::size_t k = mode + 1; k <= n; ++k) {
        const double next = (r * w[k - 1]) / servers_busy(k);
        if (!(next >= kMinNormal)) break;
        w[k] = next;
    }

    double total = 0.0;
    for (std::size_t k = 0; k < mode; ++k) total += w[k];
    double right_sum = 0.0;
    for (std::size_t k = n + 1; k-- > mode;) right_sum += w[k];
    total += right_sum;

    const double floor_value = prec == Precision::binary32 ? kFlushThreshold : kMinNormal;
    for (double& x : w) {
        x /= total;
        if (x < floor_value) x = 0.0;
        if (prec == Precision::binary32) x = static_cast<double>(static_cast<float>(x));
    }
    return ProbVector(std::move(w), prec);
}

}  // namespace tranq
