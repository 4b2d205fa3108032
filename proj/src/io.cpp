#include "tranq/io.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <set>
#include <sstream>

#include "tranq/metrics.hpp"

namespace tranq {

using nlohmann::json;

namespace {

using Kind = ScenarioError::Kind;

const json& require(const json& obj, const std::string& key, const std::string& path) {
    auto it = obj.find(key);
    if (it == obj.end()) throw ScenarioError(Kind::schema, path + key, "missing required field");
    return *it;
}

double get_number(const json& v, const std::string& field) {
    if (!v.is_number()) throw ScenarioError(Kind::schema, field, "expected a number");
    return v.get<double>();
}

int get_int(const json& v, const std::string& field) {
    if (v.is_number_integer()) return v.get<int>();
    if (v.is_number_float()) {
        const double d = v.get<double>();
        if (d == std::floor(d) && std::abs(d) < 2e9) return static_cast<int>(d);
    }
    throw ScenarioError(Kind::schema, field, "expected an integer");
}

bool get_bool(const json& v, const std::string& field) {
    if (!v.is_boolean()) throw ScenarioError(Kind::schema, field, "expected a boolean");
    return v.get<bool>();
}

std::string get_string(const json& v, const std::string& field) {
    if (!v.is_string()) throw ScenarioError(Kind::schema, field, "expected a string");
    return v.get<std::string>();
}

void reject_unknown(const json& obj, const std::set<std::string>& allowed, const std::string& path) {
    for (auto it = obj.begin(); it != obj.end(); ++it) {
        if (!allowed.count(it.key())) throw ScenarioError(Kind::schema, path + it.key(), "unknown field");
    }
}

std::string fmt17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

}  // namespace

Scenario load_scenario(const json& doc) {
    if (!doc.is_object()) throw ScenarioError(Kind::schema, "", "scenario document must be a JSON object");
    static const std::set<std::string> top = {
        "name",        "horizon_s",     "capacity_n", "eps_total", "eps_step",           "delta_T",
        "eps_ssd_factor", "output_dt_s", "precision", "periods",   "initial",            "budget",
        "check_spacing", "ssd",         "predict",    "capacity_threshold", "sl_threshold_s", "accounting"};
    reject_unknown(doc, top, "");

    Scenario sc;
    sc.horizon = get_number(require(doc, "horizon_s", ""), "horizon_s");
    sc.capacity = get_int(require(doc, "capacity_n", ""), "capacity_n");
    sc.eps_total = get_number(require(doc, "eps_total", ""), "eps_total");
    sc.cfg.eps_step = get_number(require(doc, "eps_step", ""), "eps_step");
    if (doc.contains("delta_T")) sc.cfg.delta_T = get_number(doc["delta_T"], "delta_T");
    if (doc.contains("eps_ssd_factor")) sc.cfg.eps_ssd_factor = get_number(doc["eps_ssd_factor"], "eps_ssd_factor");
    if (doc.contains("output_dt_s")) sc.output_dt = get_number(doc["output_dt_s"], "output_dt_s");
    if (doc.contains("check_spacing")) sc.cfg.check_spacing = get_int(doc["check_spacing"], "check_spacing");
    if (doc.contains("ssd")) sc.cfg.ssd = get_bool(doc["ssd"], "ssd");
    if (doc.contains("predict")) sc.cfg.predict = get_bool(doc["predict"], "predict");
    if (doc.contains("capacity_threshold"))
        sc.capacity_threshold = get_number(doc["capacity_threshold"], "capacity_threshold");
    if (doc.contains("sl_threshold_s")) sc.sl_threshold = get_number(doc["sl_threshold_s"], "sl_threshold_s");
    if (doc.contains("precision")) {
        const std::string p = get_string(doc["precision"], "precision");
        if (p == "binary32") sc.cfg.precision = Precision::binary32;
        else if (p == "binary64") sc.cfg.precision = Precision::binary64;
        else throw ScenarioError(Kind::schema, "precision", "expected \"binary32\" or \"binary64\"");
    }
    if (doc.contains("accounting")) {
        const auto a = parse_accounting(get_string(doc["accounting"], "accounting"));
        if (!a) throw ScenarioError(Kind::schema, "accounting", "expected \"absolute\" or \"relative\"");
        sc.cfg.accounting = *a;
    }
    if (doc.contains("budget")) {
        const std::string b = get_string(doc["budget"], "budget");
        if (b == "constant") sc.budget = BudgetMode::constant;
        else if (b == "proportional") sc.budget = BudgetMode::proportional;
        else throw ScenarioError(Kind::schema, "budget", "expected \"constant\" or \"proportional\"");
    }

    const json& periods = require(doc, "periods", "");
    if (!periods.is_array()) throw ScenarioError(Kind::schema, "periods", "expected an array");
    static const std::set<std::string> period_keys = {"dur_s", "lambda_per_s", "mu_per_s", "servers", "capacity_n"};
    for (std::size_t i = 0; i < periods.size(); ++i) {
        const json& p = periods[i];
        const std::string path = "periods[" + std::to_string(i) + "].";
        if (!p.is_object()) throw ScenarioError(Kind::schema, path.substr(0, path.size() - 1), "expected an object");
        reject_unknown(p, period_keys, path);
        Period period;
        period.duration = get_number(require(p, "dur_s", path), path + "dur_s");
        period.lambda = get_number(require(p, "lambda_per_s", path), path + "lambda_per_s");
        period.mu = get_number(require(p, "mu_per_s", path), path + "mu_per_s");
        period.servers = get_int(require(p, "servers", path), path + "servers");
        if (p.contains("capacity_n")) {
            const int n = get_int(p["capacity_n"], path + "capacity_n");
            if (n != sc.capacity)
                throw ScenarioError(Kind::invalid, path + "capacity_n",
                                    "period capacity " + std::to_string(n) + " differs from capacity_n " +
                                        std::to_string(sc.capacity));
        }
        sc.periods.push_back(period);
    }

    if (doc.contains("initial")) {
        const json& init = doc["initial"];
        if (init.is_string()) {
            if (init.get<std::string>() != "empty")
                throw ScenarioError(Kind::schema, "initial", "expected \"empty\" or an array");
        } else if (init.is_array()) {
            std::vector<double> v;
            for (std::size_t i = 0; i < init.size(); ++i)
                v.push_back(get_number(init[i], "initial[" + std::to_string(i) + "]"));
            sc.initial = std::move(v);
        } else {
            throw ScenarioError(Kind::schema, "initial", "expected \"empty\" or an array");
        }
    }

    validate(sc);
    return sc;
}

Scenario load_scenario_text(std::string_view text) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ScenarioError(Kind::schema, "", std::string("malformed JSON: ") + e.what());
    }
    return load_scenario(doc);
}

Scenario load_scenario_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open scenario file " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    try {
        return load_scenario_text(ss.str());
    } catch (const ScenarioError& e) {
        throw ScenarioError(e.kind(), e.field(), path.string() + ": " + e.what());
    }
}

json save_scenario(const Scenario& sc) {
    json doc;
    doc["horizon_s"] = sc.horizon;
    doc["capacity_n"] = sc.capacity;
    doc["eps_total"] = sc.eps_total;
    doc["eps_step"] = sc.cfg.eps_step;
    doc["delta_T"] = sc.cfg.delta_T;
    doc["eps_ssd_factor"] = sc.cfg.eps_ssd_factor;
    doc["output_dt_s"] = sc.output_dt;
    doc["precision"] = to_string(sc.cfg.precision);
    doc["budget"] = to_string(sc.budget);
    doc["check_spacing"] = sc.cfg.check_spacing;
    doc["ssd"] = sc.cfg.ssd;
    doc["predict"] = sc.cfg.predict;
    doc["accounting"] = to_string(sc.cfg.accounting);
    doc["capacity_threshold"] = sc.capacity_threshold;
    doc["sl_threshold_s"] = sc.sl_threshold;
    json periods = json::array();
    for (const Period& p : sc.periods) {
        periods.push_back({{"dur_s", p.duration}, {"lambda_per_s", p.lambda}, {"mu_per_s", p.mu}, {"servers", p.servers}});
    }
    doc["periods"] = std::move(periods);
    if (sc.initial) doc["initial"] = *sc.initial;
    else doc["initial"] = "empty";
    return doc;
}

std::string to_string(ExampleKind k) {
    return k == ExampleKind::original ? "original" : "converging";
}

ExampleKind parse_example_kind(std::string_view s) {
    if (s == "original") return ExampleKind::original;
    if (s == "converging") return ExampleKind::converging;
    throw std::invalid_argument("unknown example kind '" + std::string(s) + "' (expected original|converging)");
}

std::string example_name(ExampleKind kind, int size) {
    return to_string(kind) + "-" + std::to_string(size);
}

Scenario gen_example(ExampleKind kind, int size) {
    int servers = 0;
    switch (size) {
        case 210: servers = 30; break;
        case 600: servers = 100; break;
        case 1500: servers = 300; break;
        case 4000: servers = 1000; break;
        case 9000: servers = 3000; break;
        default: throw std::invalid_argument("no example of size " + std::to_string(size));
    }
    constexpr double kHorizon = 86400.0;
    constexpr int kPeriods = 288;
    constexpr double kPeriod = kHorizon / kPeriods;
    constexpr double kMu = 1.0 / kPeriod;  // one service completion per server per period
    const double base = kind == ExampleKind::original ? 0.85 : 0.8;
    const double amplitude = kind == ExampleKind::original ? 0.2 : 0.1;
    const double omega = 3.0 * std::numbers::pi / kHorizon;

    Scenario sc;
    sc.horizon = kHorizon;
    sc.capacity = size;
    sc.eps_total = 5e-3;
    sc.cfg.eps_step = 1e-7;
    sc.cfg.delta_T = 5.5e-2;
    sc.output_dt = kPeriod;
    sc.capacity_threshold = size == 210 ? 1.5e-3 : 1e-4;
    for (int i = 0; i < kPeriods; ++i) {
        const double t0 = i * kPeriod;
        const double t1 = t0 + kPeriod;
        // mean of sin(omega t) over [t0, t1]
        const double mean_sin = (std::cos(omega * t0) - std::cos(omega * t1)) / (omega * kPeriod);
        const double lambda = servers * kMu * (base + amplitude * mean_sin);
        sc.periods.push_back({kPeriod, lambda, kMu, servers});
    }
    return sc;
}

std::vector<ResultRow> result_rows(const Timeline& tl, double d) {
    std::vector<ResultRow> rows;
    rows.reserve(tl.records.size());
    for (const auto& r : tl.records) {
        rows.push_back({r.t, expected_state(r.p), tail_probability(r.p), service_level(r.p, r.servers, r.mu, d),
                        r.eps_accum, r.iterations, to_string(r.outcome)});
    }
    return rows;
}

std::string format_results_csv(const std::vector<ResultRow>& rows) {
    std::string out(kResultHeader);
    out += '\n';
    for (const auto& r : rows) {
        out += fmt17(r.t) + ',' + fmt17(r.ES) + ',' + fmt17(r.p_tail) + ',' + fmt17(r.SL) + ',' + fmt17(r.eps_accum) +
               ',' + std::to_string(r.iterations) + ',' + r.outcome + '\n';
    }
    return out;
}

std::vector<ResultRow> parse_results_csv(std::string_view text) {
    std::istringstream in{std::string(text)};
    std::string line;
    if (!std::getline(in, line) || line != kResultHeader) throw std::runtime_error("result CSV: unexpected header");
    std::vector<ResultRow> rows;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::vector<std::string> cells;
        std::stringstream ls(line);
        std::string cell;
        while (std::getline(ls, cell, ',')) cells.push_back(cell);
        if (cells.size() != 7) throw std::runtime_error("result CSV: expected 7 columns in '" + line + "'");
        ResultRow r;
        r.t = std::stod(cells[0]);
        r.ES = std::stod(cells[1]);
        r.p_tail = std::stod(cells[2]);
        r.SL = std::stod(cells[3]);
        r.eps_accum = std::stod(cells[4]);
        r.iterations = std::stoll(cells[5]);
        r.outcome = cells[6];
        rows.push_back(std::move(r));
    }
    return rows;
}

json timeline_summary(const Timeline& tl, double capacity_threshold) {
    const double max_tail = tl.max_tail();
    return {{"records", tl.records.size()},
            {"total_mvm", tl.total_iterations()},
            {"max_eps", tl.max_eps()},
            {"max_p_tail", max_tail},
            {"capacity_flag", max_tail >= capacity_threshold},
            {"ssd_steps", tl.ssd_steps()},
            {"delta", tl.first_delta()}};
}

namespace {

void write_atomically(const std::filesystem::path& path, const std::string& content) {
    auto tmp = path;
    tmp += ".tmp";
    try {
        {
            std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
            if (!out) throw std::runtime_error("cannot open " + tmp.string() + " for writing");
            out << content;
            out.flush();
            if (!out) throw std::runtime_error("write to " + tmp.string() + " failed");
        }
        std::filesystem::rename(tmp, path);
    } catch (...) {
        std::error_code ec;
        std::filesystem::remove(tmp, ec);
        throw;
    }
}

}  // namespace

ResultFile save_results(const Timeline& tl, const std::filesystem::path& path, double d, const json& metadata) {
    const auto rows = result_rows(tl, d);
    ResultFile rf;
    rf.csv = path;
    rf.metadata = path;
    rf.metadata += ".meta.json";
    rf.rows = rows.size();

    json meta = metadata.is_object() ? metadata : json::object();
    meta["summary"] = timeline_summary(tl, meta.value("capacity_threshold", 1.5e-3));
    meta["sl_threshold_s"] = d;

    write_atomically(rf.csv, format_results_csv(rows));
    try {
        write_atomically(rf.metadata, meta.dump(2) + "\n");
    } catch (...) {
        std::error_code ec;
        std::filesystem::remove(rf.csv, ec);
        throw;
    }
    return rf;
}

}  // namespace tranq
