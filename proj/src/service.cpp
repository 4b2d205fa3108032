#include "tranq/service.hpp"

#include <cmath>
#include <thread>

#include <httplib.h>

#include "tranq/io.hpp"
#include "tranq/metrics.hpp"

namespace tranq::service {

using nlohmann::json;

namespace {

Response error_response(int status, std::string kind, std::string message, std::string field = {}) {
    json body = {{"error", std::move(kind)}, {"message", std::move(message)}};
    if (!field.empty()) body["field"] = std::move(field);
    return {status, std::move(body)};
}

int status_for(ScenarioError::Kind k) {
    return k == ScenarioError::Kind::schema ? 400 : 422;
}

std::string kind_name(ScenarioError::Kind k) {
    switch (k) {
        case ScenarioError::Kind::schema: return "schema";
        case ScenarioError::Kind::invalid: return "invalid";
        case ScenarioError::Kind::infeasible: return "infeasible";
    }
    return "invalid";
}

Response run(const Scenario& sc, const MetricSelection& metrics, const Options& opt) {
    if (sc.capacity > opt.max_capacity)
        return error_response(413, "too_large",
                              "capacity_n " + std::to_string(sc.capacity) + " exceeds the service ceiling " +
                                  std::to_string(opt.max_capacity),
                              "capacity_n");
    SolveControl control;
    control.deadline = std::chrono::steady_clock::now() + opt.timeout;
    try {
        const Timeline tl = solve_scenario(sc, control);
        return {200, solve_response(sc, tl, metrics)};
    } catch (const SolveTimeout& e) {
        return error_response(504, "timeout", e.what());
    } catch (const ScenarioError& e) {
        return error_response(status_for(e.kind()), kind_name(e.kind()), e.what(), e.field());
    } catch (const StepFailure& e) {
        return error_response(422, "step_failure", e.what());
    } catch (const std::exception& e) {
        return error_response(500, "internal", e.what());
    }
}

template <class F>
Response guarded(F&& f) {
    try {
        return f();
    } catch (const ScenarioError& e) {
        return error_response(status_for(e.kind()), kind_name(e.kind()), e.what(), e.field());
    } catch (const EditError& e) {
        return error_response(400, "invalid_edit", e.what());
    } catch (const json::exception& e) {
        return error_response(400, "schema", e.what());
    } catch (const std::exception& e) {
        return error_response(500, "internal", e.what());
    }
}

double edited(double current, const std::string& op, double value) {
    return op == "set" ? value : current + value;
}

}  // namespace

void apply_edits(Scenario& sc, const json& edits) {
    if (edits.is_null()) return;
    if (!edits.is_array()) throw EditError("edits must be an array");
    const auto count = static_cast<std::int64_t>(sc.periods.size());
    for (std::size_t e = 0; e < edits.size(); ++e) {
        const json& ed = edits[e];
        const std::string where = "edits[" + std::to_string(e) + "]";
        if (!ed.is_object()) throw EditError(where + ": expected an object");
        for (auto it = ed.begin(); it != ed.end(); ++it) {
            if (it.key() != "period_range" && it.key() != "field" && it.key() != "op" && it.key() != "value")
                throw EditError(where + "." + it.key() + ": unknown field");
        }
        const json& range = ed.value("period_range", json());
        if (!range.is_array() || range.size() != 2 || !range[0].is_number_integer() || !range[1].is_number_integer())
            throw EditError(where + ".period_range: expected [first, last] period indices");
        const std::int64_t first = range[0].get<std::int64_t>();
        const std::int64_t last = range[1].get<std::int64_t>();
        if (first < 0 || last < first || last >= count)
            throw EditError(where + ".period_range: [" + std::to_string(first) + ", " + std::to_string(last) +
                            "] is outside 0.." + std::to_string(count - 1));

        const std::string field = ed.value("field", "");
        const std::string op = ed.value("op", "");
        if (field != "servers" && field != "lambda_per_s" && field != "mu_per_s")
            throw EditError(where + ".field: expected servers, lambda_per_s or mu_per_s");
        if (op != "set" && op != "add") throw EditError(where + ".op: expected set or add");
        if (!ed.contains("value") || !ed["value"].is_number()) throw EditError(where + ".value: expected a number");
        const double value = ed["value"].get<double>();
        if (!std::isfinite(value)) throw EditError(where + ".value: must be finite");

        for (std::int64_t i = first; i <= last; ++i) {
            Period& p = sc.periods[static_cast<std::size_t>(i)];
            const std::string at = where + " at period " + std::to_string(i);
            if (field == "servers") {
                const double s = edited(p.servers, op, value);
                if (s != std::floor(s) || s < 1 || s > sc.capacity)
                    throw EditError(at + ": servers must be an integer in [1, " + std::to_string(sc.capacity) + "]");
                p.servers = static_cast<int>(s);
            } else if (field == "lambda_per_s") {
                const double l = edited(p.lambda, op, value);
                if (!(l >= 0.0)) throw EditError(at + ": lambda_per_s must be >= 0");
                p.lambda = l;
            } else {
                const double m = edited(p.mu, op, value);
                if (!(m > 0.0)) throw EditError(at + ": mu_per_s must be > 0");
                p.mu = m;
            }
        }
    }
}

MetricSelection parse_metrics(const json& metrics) {
    MetricSelection sel;
    if (metrics.is_null()) return sel;
    if (!metrics.is_object()) throw ScenarioError(ScenarioError::Kind::schema, "metrics", "expected an object");
    for (auto it = metrics.begin(); it != metrics.end(); ++it) {
        const std::string& key = it.key();
        const json& v = it.value();
        if (key == "ES" || key == "p_tail") {
            if (!v.is_boolean()) throw ScenarioError(ScenarioError::Kind::schema, "metrics." + key, "expected a boolean");
            (key == "ES" ? sel.ES : sel.p_tail) = v.get<bool>();
        } else if (key == "SL") {
            if (v.is_boolean()) {
                sel.SL = v.get<bool>();
            } else if (v.is_object() && v.size() == 1 && v.contains("d_s") && v["d_s"].is_number()) {
                const double d = v["d_s"].get<double>();
                if (!(d >= 0.0) || !std::isfinite(d))
                    throw ScenarioError(ScenarioError::Kind::schema, "metrics.SL.d_s", "must be >= 0");
                sel.sl_d = d;
            } else {
                throw ScenarioError(ScenarioError::Kind::schema, "metrics.SL", "expected a boolean or {\"d_s\": number}");
            }
        } else {
            throw ScenarioError(ScenarioError::Kind::schema, "metrics." + key, "unknown field");
        }
    }
    return sel;
}

json solve_response(const Scenario& sc, const Timeline& tl, const MetricSelection& metrics) {
    const double d = metrics.sl_d.value_or(sc.sl_threshold);
    const auto rows = result_rows(tl, d);
    json t = json::array(), es = json::array(), sl = json::array(), tail = json::array(), eps = json::array(),
         iters = json::array(), outcome = json::array(), servers = json::array();
    for (std::size_t i = 0; i < rows.size(); ++i) {
        t.push_back(rows[i].t);
        es.push_back(rows[i].ES);
        sl.push_back(rows[i].SL);
        tail.push_back(rows[i].p_tail);
        eps.push_back(rows[i].eps_accum);
        iters.push_back(rows[i].iterations);
        outcome.push_back(rows[i].outcome);
        servers.push_back(tl.records[i].servers);
    }
    json timeline = {{"t", std::move(t)},
                     {"eps_accum", std::move(eps)},
                     {"iterations", std::move(iters)},
                     {"outcome", std::move(outcome)},
                     {"servers", std::move(servers)}};
    if (metrics.ES) timeline["ES"] = std::move(es);
    if (metrics.SL) timeline["SL"] = std::move(sl);
    if (metrics.p_tail) timeline["p_tail"] = std::move(tail);

    json summary = timeline_summary(tl, sc.capacity_threshold);
    summary["sl_threshold_s"] = d;
    summary["eps_total"] = sc.eps_total;
    return {{"timeline", std::move(timeline)}, {"summary", std::move(summary)}};
}

Response handle_solve(const json& body, const Options& opt) {
    return guarded([&] {
        const Scenario sc = load_scenario(body);
        return run(sc, MetricSelection{}, opt);
    });
}

Response handle_whatif(const json& body, const Options& opt) {
    return guarded([&]() -> Response {
        if (!body.is_object()) return error_response(400, "schema", "what-if request must be a JSON object");
        for (auto it = body.begin(); it != body.end(); ++it) {
            if (it.key() != "base" && it.key() != "edits" && it.key() != "metrics")
                return error_response(400, "schema", "unknown field", it.key());
        }
        if (!body.contains("base")) return error_response(400, "schema", "missing field", "base");
        Scenario sc = load_scenario(body["base"]);
        apply_edits(sc, body.value("edits", json::array()));
        validate(sc);
        return run(sc, parse_metrics(body.value("metrics", json())), opt);
    });
}

Response handle_examples(const Options& opt) {
    return guarded([&] {
        json list = json::array();
        for (ExampleKind kind : {ExampleKind::original, ExampleKind::converging}) {
            for (int size : kExampleSizes) {
                if (size > opt.max_example_size) continue;
                json doc = save_scenario(gen_example(kind, size));
                doc["name"] = example_name(kind, size);
                list.push_back({{"name", example_name(kind, size)}, {"scenario", std::move(doc)}});
            }
        }
        return Response{200, {{"examples", std::move(list)}}};
    });
}

namespace {

Response parse_then(const std::string& text, Response (*handler)(const json&, const Options&), const Options& opt) {
    json body;
    try {
        body = json::parse(text);
    } catch (const json::parse_error& e) {
        return error_response(400, "schema", std::string("malformed JSON: ") + e.what());
    }
    return handler(body, opt);
}

}  // namespace

Response handle_solve_text(const std::string& text, const Options& opt) {
    return parse_then(text, &handle_solve, opt);
}

Response handle_whatif_text(const std::string& text, const Options& opt) {
    return parse_then(text, &handle_whatif, opt);
}

struct Server::Impl {
    Options opt;
    httplib::Server http;
    std::thread worker;

    explicit Impl(Options o) : opt(std::move(o)) {
        http.set_default_headers({{"Access-Control-Allow-Origin", opt.cors_origin},
                                  {"Access-Control-Allow-Methods", "GET, POST, OPTIONS"},
                                  {"Access-Control-Allow-Headers", "Content-Type"}});
        auto reply = [](httplib::Response& res, const Response& r) {
            res.status = r.status;
            res.set_content(r.body.dump(), "application/json");
        };
        http.Post("/api/solve", [this, reply](const httplib::Request& req, httplib::Response& res) {
            reply(res, handle_solve_text(req.body, opt));
        });
        http.Post("/api/whatif", [this, reply](const httplib::Request& req, httplib::Response& res) {
            reply(res, handle_whatif_text(req.body, opt));
        });
        http.Get("/api/examples", [this, reply](const httplib::Request&, httplib::Response& res) {
            reply(res, handle_examples(opt));
        });
        http.Options(R"(/api/.*)", [](const httplib::Request&, httplib::Response& res) { res.status = 204; });
    }
};

Server::Server(Options opt) : impl_(std::make_unique<Impl>(std::move(opt))) {}

Server::~Server() {
    stop();
}

int Server::start(const std::string& host, int port) {
    const int bound = port == 0 ? impl_->http.bind_to_any_port(host) : (impl_->http.bind_to_port(host, port) ? port : -1);
    if (bound < 0) throw std::runtime_error("cannot bind " + host + ":" + std::to_string(port));
    impl_->worker = std::thread([this] { impl_->http.listen_after_bind(); });
    impl_->http.wait_until_ready();
    return bound;
}

bool Server::listen(const std::string& host, int port) {
    return impl_->http.listen(host, port);
}

void Server::stop() {
    impl_->http.stop();
    if (impl_->worker.joinable()) impl_->worker.join();
}

}  // namespace tranq::service
