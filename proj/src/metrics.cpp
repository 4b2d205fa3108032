#include "tranq/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace tranq {

double expected_state(const ProbVector& p) {
    double es = 0.0;
    for (std::size_t i = 1; i < p.size(); ++i) es += static_cast<double>(i) * p.entries[i];
    return es;
}

double tail_probability(const ProbVector& p) {
    return p.size() == 0 ? 0.0 : p.entries.back();
}

double service_level(const ProbVector& p, int servers, double mu, double d) {
    if (servers < 1 || !(mu > 0.0) || !(d >= 0.0)) throw std::invalid_argument("service_level: bad arguments");
    const std::size_t s = static_cast<std::size_t>(servers);
    double sl = 0.0;
    for (std::size_t j = 0; j < std::min(s, p.size()); ++j) sl += p.entries[j];
    if (p.size() <= s || d == 0.0) return std::clamp(sl, 0.0, 1.0);

    // An arrival finding j >= s waits for j-s+1 completions at rate s*mu, so
    // P(wait <= d) = P(Poisson(x) >= j-s+1) with x = s*mu*d. Poisson terms are
    // carried in log space so large x does not underflow exp(-x).
    const double x = static_cast<double>(s) * mu * d;
    const double log_x = std::log(x);
    double log_term = -x;  // log P(Poisson(x) = 0)
    double below = 0.0;    // P(Poisson(x) <= m), m = j - s
    for (std::size_t j = s; j < p.size(); ++j) {
        const std::size_t m = j - s;
        if (m > 0) log_term += log_x - std::log(static_cast<double>(m));
        below += std::exp(log_term);
        const double erlang_cdf = std::max(0.0, 1.0 - below);
        sl += p.entries[j] * erlang_cdf;
    }
    return std::clamp(sl, 0.0, 1.0);
}

std::vector<MetricRecord> metric_records(const Timeline& tl, double d) {
    std::vector<MetricRecord> out;
    out.reserve(tl.records.size());
    for (const auto& r : tl.records) {
        out.push_back({r.t, expected_state(r.p), tail_probability(r.p), service_level(r.p, r.servers, r.mu, d),
                       r.eps_accum});
    }
    return out;
}

std::vector<ErrorPoint> error_series(const Timeline& run, const Timeline& reference) {
    if (run.records.size() != reference.records.size())
        throw std::invalid_argument("error_series: record counts differ");
    std::vector<ErrorPoint> out;
    out.reserve(run.records.size());
    for (std::size_t i = 0; i < run.records.size(); ++i) {
        const auto& a = run.records[i];
        const auto& b = reference.records[i];
        if (a.t != b.t) throw std::invalid_argument("error_series: time grids differ at record " + std::to_string(i));
        if (a.p.size() != b.p.size()) throw std::invalid_argument("error_series: vector lengths differ");
        double inf = 0.0;
        for (std::size_t j = 0; j < a.p.size(); ++j) inf = std::max(inf, std::abs(a.p.entries[j] - b.p.entries[j]));
        out.push_back({a.t, std::abs(expected_state(a.p) - expected_state(b.p)), inf});
    }
    return out;
}

}  // namespace tranq
