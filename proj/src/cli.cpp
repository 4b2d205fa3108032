#include "tranq/cli.hpp"

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <ostream>

#include <CLI11.hpp>

#include "tranq/io.hpp"
#include "tranq/poisson.hpp"
#include "tranq/service.hpp"

namespace tranq::cli {

using nlohmann::json;

void apply_overrides(Scenario& sc, const Overrides& o) {
    if (o.eps_total) sc.eps_total = *o.eps_total;
    if (o.eps_step) sc.cfg.eps_step = *o.eps_step;
    if (o.delta_T) sc.cfg.delta_T = *o.delta_T;
    if (o.precision) sc.cfg.precision = *o.precision;
    if (o.accounting) sc.cfg.accounting = *o.accounting;
    if (o.no_ssd) sc.cfg.ssd = false;
    if (o.no_predict) sc.cfg.predict = false;
}

namespace {

BenchRun timed_run(std::string label, const Scenario& sc) {
    const auto t0 = std::chrono::steady_clock::now();
    BenchRun run{std::move(label), sc.eps_total, solve_scenario(sc), 0.0};
    run.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
    return run;
}

std::string fmt_g(double v, const char* spec = "%g") {
    char buf[64];
    std::snprintf(buf, sizeof buf, spec, v);
    return buf;
}

}  // namespace

std::vector<BenchRun> run_bench(const Scenario& base, const std::vector<double>& grid) {
    std::vector<BenchRun> runs;
    Scenario off = base;
    off.cfg.ssd = false;
    runs.push_back(timed_run("no-ssd", off));
    for (double eps_total : grid) {
        Scenario sc = base;
        sc.cfg.ssd = true;
        sc.eps_total = eps_total;
        runs.push_back(timed_run(fmt_g(eps_total), sc));
    }
    return runs;
}

std::string bench_csv(const std::vector<BenchRun>& runs) {
    std::string csv = "step,t_s,rho,servers";
    for (const auto& r : runs) csv += ",it_" + r.label;
    csv += '\n';
    if (runs.empty()) return csv;
    const auto& ref = runs.front().timeline.records;
    for (std::size_t i = 0; i < ref.size(); ++i) {
        const auto& rec = ref[i];
        csv += std::to_string(i) + ',' + fmt_g(rec.t, "%.17g") + ',' +
               fmt_g(rec.lambda / (rec.servers * rec.mu), "%.17g") + ',' + std::to_string(rec.servers);
        for (const auto& r : runs) csv += ',' + std::to_string(r.timeline.records[i].iterations);
        csv += '\n';
    }
    return csv;
}

json poisson_debug(double lambda, double eps, double eps_ssd) {
    json line = {{"lambda", lambda}, {"eps", eps}, {"eps_ssd", eps_ssd}};
    try {
        const PoissonWeights pw(lambda, eps, eps_ssd);
        if (!pw.valid()) {
            line["error"] = "no Poisson window: lambda must be > 0 and eps < 1";
            return line;
        }
        line["l_ssd"] = pw.ls();
        line["l"] = pw.l();
        line["k"] = pw.k();
        line["W"] = pw.total_weight();
        line["span"] = pw.span();
    } catch (const std::exception& e) {
        line["error"] = e.what();
    }
    return line;
}

std::filesystem::path output_path(const std::optional<std::string>& out, const std::string& name) {
    if (out) return *out;
    if (const char* dir = std::getenv(kOutDirEnv); dir && *dir) return std::filesystem::path(dir) / name;
    return std::filesystem::path(name);
}

namespace {

void add_overrides(CLI::App* cmd, Overrides& o, int& precision, std::string& accounting) {
    cmd->add_option("--eps-total", o.eps_total, "global error bound eps_T");
    cmd->add_option("--eps-step", o.eps_step, "per-step truncation bound");
    cmd->add_option("--delta-t", o.delta_T, "prediction admissibility threshold");
    cmd->add_option("--precision", precision, "vector storage precision")->check(CLI::IsMember({32, 64}));
    cmd->add_option("--accounting", accounting, "SSD error accounting")
        ->check(CLI::IsMember({"absolute", "relative"}));
    cmd->add_flag("--no-ssd", o.no_ssd, "disable steady-state detection");
    cmd->add_flag("--no-predict", o.no_predict, "disable convergence-error prediction");
}

void finish_overrides(Overrides& o, int precision, const std::string& accounting) {
    if (precision == 32) o.precision = Precision::binary32;
    if (precision == 64) o.precision = Precision::binary64;
    if (!accounting.empty()) o.accounting = parse_accounting(accounting);
}

void print_summary(std::ostream& out, const json& s) {
    out << "records       " << s["records"].get<std::size_t>() << '\n'
        << "total MVM     " << s["total_mvm"].get<std::int64_t>() << '\n'
        << "max eps_accum " << fmt_g(s["max_eps"].get<double>(), "%.6g") << '\n'
        << "max p_tail    " << fmt_g(s["max_p_tail"].get<double>(), "%.6g")
        << (s["capacity_flag"].get<bool>() ? "  (capacity flag)" : "") << '\n'
        << "ssd steps     " << s["ssd_steps"].get<std::size_t>() << '\n'
        << "delta step 1  " << fmt_g(s["delta"].get<double>(), "%.6g") << '\n';
}

ExampleKind kind_from(const std::string& s) {
    return parse_example_kind(s);
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Transient M(t)/M(t)/s(t) queue solver"};
    app.require_subcommand(1);

    // solve
    std::string scenario_path;
    std::optional<std::string> solve_out;
    Overrides solve_ov;
    int solve_prec = 0;
    std::string solve_acc;
    auto* solve = app.add_subcommand("solve", "solve a scenario file and write the result CSV");
    solve->add_option("--scenario", scenario_path, "scenario JSON file")->required();
    solve->add_option("--out", solve_out, "result CSV path");
    add_overrides(solve, solve_ov, solve_prec, solve_acc);

    // gen-example
    std::string gen_kind = "converging";
    int gen_size = 210;
    std::optional<std::string> gen_out;
    auto* gen = app.add_subcommand("gen-example", "write a generated example scenario");
    gen->add_option("--kind", gen_kind)->check(CLI::IsMember({"original", "converging"}));
    gen->add_option("--size", gen_size)->check(CLI::IsMember({210, 600, 1500, 4000, 9000}));
    gen->add_option("--out", gen_out, "scenario path (default: stdout)");

    // bench
    std::string bench_kind = "converging";
    int bench_size = 210;
    std::vector<double> grid = kDefaultGrid;
    std::optional<std::string> bench_out;
    Overrides bench_ov;
    int bench_prec = 0;
    std::string bench_acc;
    bool empty_grid = false;
    auto* bench = app.add_subcommand("bench", "iteration counts across eps_total thresholds");
    bench->add_option("--kind", bench_kind)->check(CLI::IsMember({"original", "converging"}));
    bench->add_option("--size", bench_size)->check(CLI::IsMember({210, 600, 1500, 4000, 9000}));
    bench->add_option("--grid", grid, "eps_total values")->delimiter(',');
    bench->add_flag("--baseline-only", empty_grid, "run only the no-ssd baseline");
    bench->add_option("--out", bench_out, "per-step iteration CSV path");
    add_overrides(bench, bench_ov, bench_prec, bench_acc);

    // poisson-debug
    double pd_lambda = 0.0;
    std::vector<double> pd_eps;
    std::optional<double> pd_eps_ssd;
    auto* pdebug = app.add_subcommand("poisson-debug", "print the Poisson window as JSON lines");
    pdebug->add_option("--lambda", pd_lambda, "alpha * t")->required();
    pdebug->add_option("--eps", pd_eps, "truncation bound (repeatable)")->required();
    pdebug->add_option("--eps-ssd", pd_eps_ssd, "detection bound (default eps * 1e-3)");

    // serve
    int port = 8080;
    std::string host = "127.0.0.1";
    service::Options sopt;
    long timeout_ms = sopt.timeout.count();
    auto* serve = app.add_subcommand("serve", "run the HTTP API");
    serve->add_option("--port", port)->check(CLI::Range(0, 65535));
    serve->add_option("--host", host);
    serve->add_option("--max-capacity", sopt.max_capacity)->check(CLI::PositiveNumber);
    serve->add_option("--timeout-ms", timeout_ms)->check(CLI::PositiveNumber);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e, out, err);
    }

    try {
        if (*solve) {
            finish_overrides(solve_ov, solve_prec, solve_acc);
            Scenario sc = load_scenario_file(scenario_path);
            apply_overrides(sc, solve_ov);
            validate(sc);
            const Timeline tl = solve_scenario(sc);
            const auto path =
                output_path(solve_out, std::filesystem::path(scenario_path).stem().string() + ".csv");
            json meta = {{"scenario", scenario_path},
                         {"capacity_threshold", sc.capacity_threshold},
                         {"config", save_scenario(sc)}};
            meta["config"].erase("periods");
            meta["config"].erase("initial");
            const ResultFile rf = save_results(tl, path, sc.sl_threshold, meta);
            print_summary(out, timeline_summary(tl, sc.capacity_threshold));
            out << "wrote " << rf.csv.string() << '\n';
            return 0;
        }
        if (*gen) {
            const ExampleKind kind = kind_from(gen_kind);
            json doc = save_scenario(gen_example(kind, gen_size));
            doc["name"] = example_name(kind, gen_size);
            const std::string text = doc.dump(2) + "\n";
            if (!gen_out) {
                out << text;
                return 0;
            }
            std::ofstream f(*gen_out, std::ios::binary | std::ios::trunc);
            if (!(f << text)) throw std::runtime_error("cannot write " + *gen_out);
            out << "wrote " << *gen_out << '\n';
            return 0;
        }
        if (*bench) {
            finish_overrides(bench_ov, bench_prec, bench_acc);
            const ExampleKind kind = kind_from(bench_kind);
            Scenario base = gen_example(kind, bench_size);
            apply_overrides(base, bench_ov);
            if (empty_grid) grid.clear();
            const auto runs = run_bench(base, grid);
            const std::string name = "bench-" + example_name(kind, bench_size) + (base.cfg.predict ? "" : "-nopredict");
            const auto path = output_path(bench_out, name + ".csv");
            {
                std::ofstream f(path, std::ios::binary | std::ios::trunc);
                if (!(f << bench_csv(runs))) throw std::runtime_error("cannot write " + path.string());
            }
            json meta = json::array();
            out << "run        total_mvm  ssd_steps  max_eps       wall_ms\n";
            for (const auto& r : runs) {
                char line[160];
                std::snprintf(line, sizeof line, "%-10s %9lld  %9zu  %-12.4g  %.1f\n", r.label.c_str(),
                              static_cast<long long>(r.timeline.total_iterations()), r.timeline.ssd_steps(),
                              r.timeline.max_eps(), r.wall_ms);
                out << line;
                meta.push_back({{"run", r.label},
                                {"total_mvm", r.timeline.total_iterations()},
                                {"ssd_steps", r.timeline.ssd_steps()},
                                {"wall_ms", r.wall_ms}});
            }
            auto meta_path = path;
            meta_path += ".meta.json";
            std::ofstream(meta_path, std::ios::binary | std::ios::trunc) << meta.dump(2) << '\n';
            out << "wrote " << path.string() << '\n';
            return 0;
        }
        if (*pdebug) {
            bool ok = true;
            for (double eps : pd_eps) {
                const json line = poisson_debug(pd_lambda, eps, pd_eps_ssd.value_or(eps * 1e-3));
                ok = ok && !line.contains("error");
                out << line.dump() << '\n';
            }
            return ok ? 0 : 1;
        }
        if (*serve) {
            sopt.timeout = std::chrono::milliseconds(timeout_ms);
            service::Server server(sopt);
            out << "listening on " << host << ':' << port << std::endl;
            if (!server.listen(host, port)) {
                err << "error: cannot listen on " << host << ':' << port << '\n';
                return 1;
            }
            return 0;
        }
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return 1;
    }
    return 1;
}

}  // namespace tranq::cli
