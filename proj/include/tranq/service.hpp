#pragma once

#include <chrono>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>

#include <json.hpp>

#include "tranq/scenario.hpp"

namespace tranq::service {

struct Options {
    int max_capacity = 10000;                    ///< largest accepted capacity_n
    std::chrono::milliseconds timeout{30000};    ///< per-request solve deadline
    int max_example_size = 1500;                 ///< largest example served by /api/examples
    std::string cors_origin = "*";
};

struct Response {
    int status = 200;
    nlohmann::json body;
};

/// Which series a response carries. SL uses d = sl_threshold_s unless overridden.
struct MetricSelection {
    bool ES = true;
    bool SL = true;
    bool p_tail = true;
    std::optional<double> sl_d;
};

/// Thrown for malformed what-if edits; maps to 400.
class EditError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Applies {period_range:[i,j], field, op, value} edits in order. Ranges are
/// inclusive. Rejects indices outside the period list and values that break
/// a per-period constraint (servers outside [1, n], negative lambda, mu <= 0).
void apply_edits(Scenario& sc, const nlohmann::json& edits);

MetricSelection parse_metrics(const nlohmann::json& metrics);

/// Timeline arrays plus summary, the body of a successful solve.
nlohmann::json solve_response(const Scenario& sc, const Timeline& tl, const MetricSelection& metrics = {});

// Pure request handlers. They never throw; failures become error bodies
// {"error": kind, "message": ..., "field": ...} with the matching status.
Response handle_solve(const nlohmann::json& body, const Options& opt = {});
Response handle_whatif(const nlohmann::json& body, const Options& opt = {});
Response handle_examples(const Options& opt = {});

/// Parses `text` and dispatches to the handler; malformed JSON yields 400.
Response handle_solve_text(const std::string& text, const Options& opt = {});
Response handle_whatif_text(const std::string& text, const Options& opt = {});

/// HTTP front end. listen() blocks; start() runs on a background thread.
class Server {
public:
    explicit Server(Options opt = {});
    ~Server();
    Server(const Server&) = delete;
    Server& operator=(const Server&) = delete;

    /// Binds to host:port (port 0 picks a free port) and serves in the background.
    /// Returns the bound port.
    int start(const std::string& host, int port);
    /// Binds and serves on the calling thread until stop().
    bool listen(const std::string& host, int port);
    void stop();

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

}  // namespace tranq::service
