#pragma once

#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace tranq {

/// Storage format of DTMC iterates. Weighted sums and the carried state vector
/// are always binary64; binary32 only affects the iterates themselves.
enum class Precision { binary32, binary64 };

std::string to_string(Precision p);

/// Entries below this magnitude are flushed to zero in binary32 storage.
inline constexpr double kFlushThreshold = 1e-37;

/// One homogeneous interval of the M/M/s/n birth-death chain.
struct StepParams {
    double lambda = 0.0;  ///< arrival rate
    double mu = 1.0;      ///< per-server service rate
    int servers = 1;      ///< s
    int capacity = 1;     ///< n, largest state index
    double delta = 0.0;   ///< interval length

    double load() const noexcept { return lambda / (servers * mu); }
    std::size_t states() const noexcept { return static_cast<std::size_t>(capacity) + 1; }

    /// Throws std::invalid_argument naming the violated constraint.
    void validate() const;
};

/// Probability vector over states 0..n. Values are held as binary64; with the
/// binary32 tag every entry is exactly representable as float.
struct ProbVector {
    std::vector<double> entries;
    Precision precision = Precision::binary64;

    ProbVector() = default;
    explicit ProbVector(std::vector<double> e, Precision prec = Precision::binary64)
        : entries(std::move(e)), precision(prec) {}

    static ProbVector point_mass(std::size_t states, std::size_t at, Precision prec = Precision::binary64);

    std::size_t size() const noexcept { return entries.size(); }
    double operator[](std::size_t i) const { return entries[i]; }
    double sum() const noexcept;
    std::span<const double> view() const noexcept { return entries; }
};

/// alpha = lambda + s * mu, the largest exit rate of any state.
double uniformization_rate(const StepParams& step) noexcept;

/// true iff lambda < s * mu.
bool is_converging(const StepParams& step) noexcept;

/// out = in * (I + Q / alpha), coefficients generated per state.
/// in and out must not alias and must have capacity + 1 entries.
template <class T>
void dtmc_multiply(std::span<const T> in, std::span<T> out, const StepParams& step, double alpha) noexcept;

/// Replaces entries below kFlushThreshold by zero; returns the flushed mass.
template <class T>
double flush_tiny(std::span<T> v) noexcept;

ProbVector dtmc_step(const ProbVector& v, const StepParams& step, double alpha);

/// Stationary distribution of the M/M/s/n chain, computed outward from the mode.
/// Weights leaving the normalized binary64 range are set to exactly zero.
ProbVector steady_state(const StepParams& step, Precision prec = Precision::binary64);

}  // namespace tranq
