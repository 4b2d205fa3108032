#include "tranq/scenario.hpp"

#include <algorithm>
#include <cmath>

namespace tranq {

std::string to_string(BudgetMode m) {
    return m == BudgetMode::proportional ? "proportional" : "constant";
}

namespace {

// One homogeneous solve-step after splitting periods at output_dt.
struct StepPlan {
    std::size_t period;
    double length;
    double t_end;
};

std::vector<StepPlan> plan_steps(const Scenario& sc) {
    std::vector<StepPlan> plan;
    double t0 = 0.0;
    for (std::size_t p = 0; p < sc.periods.size(); ++p) {
        const double dur = sc.periods[p].duration;
        const double t1 = t0 + dur;
        std::size_t count = 1;
        if (sc.output_dt > 0.0) {
            count = static_cast<std::size_t>(std::ceil(dur / sc.output_dt - 1e-9));
            count = std::max<std::size_t>(count, 1);
        }
        for (std::size_t j = 0; j < count; ++j) {
            const double start = t0 + static_cast<double>(j) * sc.output_dt;
            const double end = j + 1 == count ? t1 : t0 + static_cast<double>(j + 1) * sc.output_dt;
            plan.push_back({p, end - start, end});
        }
        t0 = t1;
    }
    return plan;
}

}  // namespace

std::size_t Scenario::solve_step_count() const {
    return plan_steps(*this).size();
}

ProbVector Scenario::initial_vector() const {
    if (initial) return ProbVector(*initial, Precision::binary64);
    return ProbVector::point_mass(static_cast<std::size_t>(capacity) + 1, 0);
}

void validate(const Scenario& sc) {
    using K = ScenarioError::Kind;
    if (!(sc.horizon > 0.0) || !std::isfinite(sc.horizon)) throw ScenarioError(K::invalid, "horizon_s", "must be > 0");
    if (sc.capacity < 1) throw ScenarioError(K::invalid, "capacity_n", "must be >= 1");
    if (!(sc.eps_total > 0.0 && sc.eps_total < 1.0)) throw ScenarioError(K::invalid, "eps_total", "must lie in (0,1)");
    if (!(sc.output_dt >= 0.0) || !std::isfinite(sc.output_dt))
        throw ScenarioError(K::invalid, "output_dt_s", "must be >= 0");
    try {
        sc.cfg.validate();
    } catch (const std::invalid_argument& e) {
        throw ScenarioError(K::invalid, "config", e.what());
    }
    if (sc.periods.empty()) throw ScenarioError(K::invalid, "periods", "must not be empty");

    double total = 0.0;
    for (std::size_t i = 0; i < sc.periods.size(); ++i) {
        const Period& p = sc.periods[i];
        const std::string where = "periods[" + std::to_string(i) + "]";
        if (!(p.duration > 0.0) || !std::isfinite(p.duration))
            throw ScenarioError(K::invalid, where + ".dur_s", "must be > 0");
        StepParams sp{p.lambda, p.mu, p.servers, sc.capacity, p.duration};
        try {
            sp.validate();
        } catch (const std::invalid_argument& e) {
            throw ScenarioError(K::invalid, where, e.what());
        }
        total += p.duration;
    }
    if (std::abs(total - sc.horizon) > 1e-9 * std::max(1.0, sc.horizon))
        throw ScenarioError(K::invalid, "horizon_s",
                            "period durations sum to " + std::to_string(total) + ", not " + std::to_string(sc.horizon));

    if (sc.initial) {
        const auto& v = *sc.initial;
        if (v.size() != static_cast<std::size_t>(sc.capacity) + 1)
            throw ScenarioError(K::invalid, "initial", "length must be capacity_n + 1");
        double sum = 0.0;
        for (double x : v) {
            if (!(x >= 0.0) || !std::isfinite(x)) throw ScenarioError(K::invalid, "initial", "entries must be >= 0");
            sum += x;
        }
        if (std::abs(sum - 1.0) > 1e-9) throw ScenarioError(K::invalid, "initial", "entries must sum to 1");
    }

    const double pool = static_cast<double>(sc.solve_step_count()) * sc.cfg.eps_step;
    if (!(pool < sc.eps_total))
        throw ScenarioError(K::infeasible, "eps_step",
                            "truncation budget " + std::to_string(pool) + " over all solve-steps is not below eps_total " +
                                std::to_string(sc.eps_total));
}

std::int64_t Timeline::total_iterations() const {
    std::int64_t total = 0;
    for (const auto& r : records) total += r.iterations;
    return total;
}

std::size_t Timeline::ssd_steps() const {
    return static_cast<std::size_t>(std::count_if(records.begin(), records.end(), [](const TimelineRecord& r) {
        return r.outcome != StepOutcome::full_sum;
    }));
}

double Timeline::max_eps() const {
    double m = 0.0;
    for (const auto& r : records) m = std::max(m, r.eps_accum);
    return m;
}

double Timeline::max_tail() const {
    double m = 0.0;
    for (const auto& r : records)
        if (r.p.size() > 0) m = std::max(m, r.p.entries.back());
    return m;
}

double Timeline::first_delta() const {
    return records.empty() ? 0.0 : records.front().delta;
}

double delta_threshold(double eps_total, double eps_m, double eps_steps_remaining) noexcept {
    const double d = eps_total - eps_m - eps_steps_remaining;
    return d > 0.0 ? d : 0.0;
}

double proportional_budget(double eps_remaining, double delta, double horizon_remaining) {
    if (!(horizon_remaining > 0.0)) throw std::invalid_argument("proportional_budget: horizon_remaining must be > 0");
    if (delta >= horizon_remaining) return eps_remaining;
    return eps_remaining * delta / horizon_remaining;
}

Timeline solve_scenario(const Scenario& sc, const SolveControl& control) {
    validate(sc);
    const std::vector<StepPlan> plan = plan_steps(sc);
    const std::size_t steps = plan.size();

    Timeline tl;
    tl.records.reserve(steps);
    ProbVector p = sc.initial_vector();
    double eps_accum = 0.0;
    double pool = static_cast<double>(steps) * sc.cfg.eps_step;  // proportional mode only
    double t = 0.0;

    for (std::size_t idx = 0; idx < steps; ++idx) {
        if (control.deadline && std::chrono::steady_clock::now() > *control.deadline) throw SolveTimeout();
        const StepPlan& sp = plan[idx];
        const Period& period = sc.periods[sp.period];

        SolverConfig cfg = sc.cfg;
        double remaining;
        if (sc.budget == BudgetMode::proportional) {
            remaining = pool;
            cfg.eps_step = proportional_budget(pool, sp.length, sc.horizon - t);
        } else {
            remaining = static_cast<double>(steps - idx) * sc.cfg.eps_step;
        }
        const double delta = cfg.ssd ? delta_threshold(sc.eps_total, eps_accum, remaining) : 0.0;

        const StepParams params{period.lambda, period.mu, period.servers, sc.capacity, sp.length};
        StepResult res;
        try {
            res = solve_step(p, params, cfg, delta, eps_accum);
        } catch (const std::exception& e) {
            throw StepFailure(idx, e.what());
        }

        eps_accum = res.eps_out;
        if (sc.budget == BudgetMode::proportional) pool = std::max(0.0, pool - cfg.eps_step);
        t = sp.t_end;
        p = res.p_out;

        TimelineRecord rec;
        rec.t = sp.t_end;
        rec.period = sp.period;
        rec.p = p;
        rec.eps_accum = eps_accum;
        rec.iterations = res.iterations;
        rec.outcome = res.outcome;
        rec.delta = delta;
        rec.eps_step = cfg.eps_step;
        rec.servers = period.servers;
        rec.mu = period.mu;
        rec.lambda = period.lambda;
        tl.records.push_back(std::move(rec));
    }
    return tl;
}

}  // namespace tranq
