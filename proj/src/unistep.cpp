#include "tranq/unistep.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

namespace tranq {

void SolverConfig::validate() const {
    if (!(eps_step > 0.0 && eps_step < 1.0)) throw std::invalid_argument("eps_step must lie in (0,1)");
    if (!(eps_ssd_factor > 0.0 && eps_ssd_factor <= 1.0))
        throw std::invalid_argument("eps_ssd_factor must lie in (0,1]");
    if (!(delta_T > 0.0 && delta_T < 1.0)) throw std::invalid_argument("delta_T must lie in (0,1)");
    if (check_spacing < 0) throw std::invalid_argument("check_spacing must be >= 0 (0 selects the default)");
}

std::string to_string(ErrorAccounting a) {
    return a == ErrorAccounting::relative ? "relative" : "absolute";
}

std::optional<ErrorAccounting> parse_accounting(std::string_view s) {
    if (s == "absolute") return ErrorAccounting::absolute;
    if (s == "relative") return ErrorAccounting::relative;
    return std::nullopt;
}

std::string to_string(StepOutcome o) {
    switch (o) {
        case StepOutcome::full_sum: return "full-sum";
        case StepOutcome::ssd_direct: return "ssd-direct";
        case StepOutcome::ssd_predicted: return "ssd-predicted";
    }
    return "unknown";
}

std::optional<StepOutcome> parse_outcome(std::string_view s) {
    if (s == "full-sum") return StepOutcome::full_sum;
    if (s == "ssd-direct") return StepOutcome::ssd_direct;
    if (s == "ssd-predicted") return StepOutcome::ssd_predicted;
    return std::nullopt;
}

namespace {

template <class T>
double relative_distance_impl(std::span<const T> v, std::span<const T> v_inf) {
    if (v.size() != v_inf.size()) throw std::invalid_argument("relative_distance: length mismatch");
    double diff = 0.0;
    double scale = 0.0;
    for (std::size_t i = 0; i < v.size(); ++i) {
        const double a = static_cast<double>(v[i]);
        const double b = static_cast<double>(v_inf[i]);
        diff = std::max(diff, std::abs(a - b));
        scale = std::max(scale, std::abs(b));
    }
    if (scale == 0.0) throw std::invalid_argument("relative_distance: reference vector is identically zero");
    return diff / scale;
}

}  // namespace

double relative_distance(std::span<const double> v, std::span<const double> v_inf) {
    return relative_distance_impl<double>(v, v_inf);
}

double relative_distance(std::span<const float> v, std::span<const float> v_inf) {
    return relative_distance_impl<float>(v, v_inf);
}

double relative_distance(const ProbVector& v, const ProbVector& v_inf) {
    return relative_distance_impl<double>(v.view(), v_inf.view());
}

double k_epsilon(const ConvergenceEstimate& est, double eps_t, std::int64_t S) {
    if (S < 1) throw std::invalid_argument("k_epsilon: S must be >= 1");
    const double cr_hat = (std::log(est.xi_i) - std::log(est.xi_0)) / static_cast<double>(S);
    if (!(cr_hat < 0.0)) return std::numeric_limits<double>::infinity();
    if (!(eps_t > 0.0)) return 0.0;
    return (std::log(est.xi_0) - std::log(est.xi_0 + eps_t)) / cr_hat;
}

double predict_log_xi(const ConvergenceEstimate& est, std::int64_t i, std::int64_t l_S) {
    const double h = static_cast<double>(l_S - i);
    return std::log(est.xi_i) + h * est.cr + 0.5 * h * h * est.cr_prime;
}

std::optional<ConvergenceEstimate> estimate_from_checkpoints(double xi_0, std::span<const double> xi,
                                                             std::int64_t spacing) {
    if (xi.size() < 3 || spacing < 1) return std::nullopt;
    const double a = std::log(xi[xi.size() - 3]);
    const double b = std::log(xi[xi.size() - 2]);
    const double c = std::log(xi[xi.size() - 1]);
    if (!std::isfinite(a) || !std::isfinite(b) || !std::isfinite(c)) return std::nullopt;
    const double m = static_cast<double>(spacing);
    ConvergenceEstimate est;
    est.xi_0 = xi_0;
    est.xi_i = xi.back();
    est.cr = (c - b) / m;
    est.cr_prime = (est.cr - (b - a) / m) / m;
    return est;
}

std::int64_t effective_check_spacing(const SolverConfig& cfg, const PoissonWeights& pw) {
    if (cfg.check_spacing > 0) return cfg.check_spacing;
    return std::max<std::int64_t>(1, (pw.k() - pw.l()) / 64);
}

namespace {

template <class T>
StepResult solve_step_impl(const ProbVector& p_in, const StepParams& step, const SolverConfig& cfg, double delta,
                           double eps_t) {
    const std::size_t states = step.states();
    const double alpha = uniformization_rate(step);
    const PoissonWeights pw(alpha * step.delta, cfg.eps_step, cfg.eps_step * cfg.eps_ssd_factor);
    if (!pw.valid()) throw std::invalid_argument("invalid Poisson weights for alpha*delta = " +
                                                 std::to_string(alpha * step.delta));

    StepResult result;
    result.left = pw.l();
    result.right = pw.k();

    std::vector<T> cur(p_in.entries.begin(), p_in.entries.end());
    std::vector<T> next(states);
    if constexpr (std::is_same_v<T, float>) result.flushed_mass += flush_tiny<T>(cur);

    const bool detect = delta > 0.0 && cfg.ssd && is_converging(step);
    std::vector<T> pi_inf;
    double xi_0 = 0.0;
    double scale = 1.0;  // max(Pi_inf) under absolute accounting
    std::vector<double> checkpoints;  // xi at iterations 0, m, 2m, ...
    const std::int64_t spacing = effective_check_spacing(cfg, pw);
    const std::int64_t l = pw.l();
    const std::int64_t l_S = pw.ls();
    if (detect) {
        const ProbVector stationary = steady_state(step, cfg.precision);
        pi_inf.assign(stationary.entries.begin(), stationary.entries.end());
        xi_0 = relative_distance(std::span<const T>(cur), std::span<const T>(pi_inf));
        checkpoints.push_back(xi_0);
        if (cfg.accounting == ErrorAccounting::absolute)
            scale = static_cast<double>(*std::max_element(pi_inf.begin(), pi_inf.end()));
    }

    auto finish_ssd = [&](StepOutcome outcome, double eps_out, std::int64_t S) {
        result.p_out = ProbVector(std::vector<double>(pi_inf.begin(), pi_inf.end()), Precision::binary64);
        result.eps_out = eps_out;
        result.outcome = outcome;
        result.detection_index = S;
        return result;
    };

    std::vector<double> acc(states, 0.0);
    auto accumulate = [&](std::int64_t i) {
        const double w = pw.weight(i);
        for (std::size_t j = 0; j < states; ++j) acc[j] += w * static_cast<double>(cur[j]);
    };
    if (l == 0) accumulate(0);

    const double log_delta = std::log(delta);
    for (std::int64_t i = 1; i <= pw.k(); ++i) {
        dtmc_multiply<T>(cur, next, step, alpha);
        cur.swap(next);
        ++result.iterations;
        if constexpr (std::is_same_v<T, float>) result.flushed_mass += flush_tiny<T>(cur);
        if (i >= l) accumulate(i);

        if (!detect || i >= l || i % spacing != 0) continue;

        const double xi = relative_distance(std::span<const T>(cur), std::span<const T>(pi_inf));
        checkpoints.push_back(xi);
        ConvergenceEstimate direct{xi_0, xi, 0.0, 0.0, 0.0};
        const double K = k_epsilon(direct, eps_t, i);
        if (xi < delta && static_cast<double>(i) < static_cast<double>(l) - K) {
            const double eps_S = i >= l_S ? pw.essd(i) : pw.epsilon_ssd() / 2.0;
            return finish_ssd(StepOutcome::ssd_direct, eps_S + xi * scale, i);
        }

        if (!cfg.predict || !(xi >= delta && xi < cfg.delta_T) || !(i < l_S)) continue;
        const auto est = estimate_from_checkpoints(xi_0, checkpoints, spacing);
        if (!est) continue;
        const double predicted = predict_log_xi(*est, i, l_S);
        if (!(predicted < log_delta)) continue;
        ConvergenceEstimate at_ls = *est;
        at_ls.xi_i = std::exp(predicted);
        const double K_pred = k_epsilon(at_ls, eps_t, l_S);
        if (static_cast<double>(l_S) + K_pred <= static_cast<double>(l)) {
            return finish_ssd(StepOutcome::ssd_predicted, std::exp(predicted) * scale, l_S);
        }
    }

    const double W = pw.total_weight();
    std::vector<double> out(states);
    for (std::size_t j = 0; j < states; ++j) out[j] = acc[j] / W;
    result.p_out = ProbVector(std::move(out), Precision::binary64);
    result.eps_out = eps_t + cfg.eps_step;
    result.outcome = StepOutcome::full_sum;
    return result;
}

}  // namespace

ForcedStop forced_stop_sum(const ProbVector& p_in, const StepParams& step, double eps_step, std::int64_t S) {
    step.validate();
    if (S < 0) throw std::invalid_argument("forced_stop_sum: S must be >= 0");
    const double alpha = uniformization_rate(step);
    const PoissonWeights pw(alpha * step.delta, eps_step, eps_step);
    if (!pw.valid()) throw std::invalid_argument("forced_stop_sum: invalid Poisson weights");
    const std::int64_t last = std::min(S, pw.k());

    const std::size_t states = step.states();
    std::vector<double> cur(p_in.entries), next(states), acc(states, 0.0);
    double used = 0.0;
    for (std::int64_t i = 0; i <= last; ++i) {
        if (i > 0) {
            dtmc_multiply<double>(cur, next, step, alpha);
            cur.swap(next);
        }
        if (i >= pw.l()) {
            const double w = pw.pmf(i);
            used += w;
            for (std::size_t j = 0; j < states; ++j) acc[j] += w * cur[j];
        }
    }
    ForcedStop out;
    if (S <= pw.l()) {
        acc = cur;
    } else if (S <= pw.k()) {
        const double rest = std::max(0.0, 1.0 - used);
        for (std::size_t j = 0; j < states; ++j) acc[j] += rest * cur[j];
    }
    out.p_hat = ProbVector(std::move(acc));
    const ProbVector inf = steady_state(step);
    for (std::size_t j = 0; j < states; ++j) out.distance = std::max(out.distance, std::abs(cur[j] - inf[j]));
    return out;
}

StepResult solve_step(const ProbVector& p_in, const StepParams& step, const SolverConfig& cfg, double delta,
                      double eps_t) {
    step.validate();
    if (p_in.size() != step.states()) throw std::invalid_argument("solve_step: vector length does not match capacity + 1");
    if (step.delta == 0.0) {
        StepResult r;
        r.p_out = ProbVector(p_in.entries, Precision::binary64);
        r.eps_out = eps_t;
        return r;
    }
    if (cfg.precision == Precision::binary32) return solve_step_impl<float>(p_in, step, cfg, delta, eps_t);
    return solve_step_impl<double>(p_in, step, cfg, delta, eps_t);
}

}  // namespace tranq
