#include <doctest.h>

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "tranq/cli.hpp"
#include "tranq/io.hpp"

using namespace tranq;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

struct Result {
    int code;
    std::string out, err;
};

Result run_cli(std::vector<std::string> args) {
    args.insert(args.begin(), "tranq");
    std::vector<const char*> argv;
    for (const auto& a : args) argv.push_back(a.c_str());
    std::ostringstream out, err;
    const int code = cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
    return {code, out.str(), err.str()};
}

fs::path out_dir() {
    const char* env = std::getenv(cli::kOutDirEnv);
    fs::path dir = env && *env ? fs::path(env) : fs::temp_directory_path() / "tranq_cli_test";
    fs::create_directories(dir);
    if (!env || !*env) setenv(cli::kOutDirEnv, dir.c_str(), 1);
    return dir;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

fs::path write_example(const std::string& name) {
    const fs::path path = out_dir() / name;
    std::ofstream(path) << save_scenario(gen_example(ExampleKind::converging, 210)).dump();
    return path;
}

}  // namespace

TEST_CASE("poisson-debug prints one JSON line per eps") {
    const Result r = run_cli({"poisson-debug", "--lambda", "255", "--eps", "1e-7", "--eps", "1e-13"});
    CHECK(r.code == 0);
    std::istringstream lines(r.out);
    std::string line;
    std::getline(lines, line);
    const json a = json::parse(line);
    std::getline(lines, line);
    const json b = json::parse(line);
    CHECK(a["l"] == 175);
    CHECK(a["k"] == 344);
    CHECK(b["l"] == 146);
    CHECK(b["k"] == 383);
    CHECK(a["l_ssd"].get<long>() <= a["l"].get<long>());

    const Result zero = run_cli({"poisson-debug", "--lambda", "0", "--eps", "1e-7"});
    CHECK(zero.code == 1);
    CHECK(json::parse(zero.out).contains("error"));
}

TEST_CASE("solve reports the first threshold and writes the CSV") {
    const fs::path scenario = write_example("conv.json");
    const fs::path csv = out_dir() / "conv-5e-3.csv";
    const Result r = run_cli({"solve", "--scenario", scenario.string(), "--eps-total", "5e-3", "--out", csv.string()});
    REQUIRE(r.code == 0);
    CHECK(r.out.find("delta step 1  0.0049712") != std::string::npos);
    CHECK(r.out.find("records       288") != std::string::npos);
    const auto rows = parse_results_csv(slurp(csv));
    CHECK(rows.size() == 288);
    const json meta = json::parse(slurp(fs::path(csv.string() + ".meta.json")));
    CHECK(meta["config"]["eps_total"] == 5e-3);
}

TEST_CASE("--no-ssd gives full sums everywhere") {
    const fs::path scenario = write_example("conv-nossd.json");
    const Result r = run_cli({"solve", "--scenario", scenario.string(), "--no-ssd"});
    REQUIRE(r.code == 0);
    // Default output path: $TRANQ_OUT_DIR/<stem>.csv
    const auto rows = parse_results_csv(slurp(out_dir() / "conv-nossd.csv"));
    REQUIRE(rows.size() == 288);
    for (const auto& row : rows) CHECK(row.outcome == "full-sum");
}

TEST_CASE("a missing scenario file fails with its path") {
    const Result r = run_cli({"solve", "--scenario", "/nowhere/day.json"});
    CHECK(r.code != 0);
    CHECK(r.err.find("/nowhere/day.json") != std::string::npos);
}

TEST_CASE("usage errors exit nonzero") {
    CHECK(run_cli({"solve", "--scenario", "x.json", "--warp", "9"}).code != 0);
    CHECK(run_cli({}).code != 0);
    CHECK(run_cli({"gen-example", "--size", "211"}).code != 0);
    CHECK(run_cli({"solve", "--scenario", "x.json", "--precision", "16"}).code != 0);
}

TEST_CASE("gen-example writes a loadable scenario") {
    const Result r = run_cli({"gen-example", "--kind", "original", "--size", "600"});
    REQUIRE(r.code == 0);
    const json doc = json::parse(r.out);
    CHECK(doc["name"] == "original-600");
    CHECK(load_scenario(doc) == gen_example(ExampleKind::original, 600));

    const fs::path path = out_dir() / "gen.json";
    CHECK(run_cli({"gen-example", "--out", path.string()}).code == 0);
    CHECK(load_scenario_file(path).capacity == 210);
}

TEST_CASE("bench baseline") {
    const fs::path csv = out_dir() / "bench.csv";
    const Result r = run_cli({"bench", "--baseline-only", "--out", csv.string()});
    REQUIRE(r.code == 0);
    CHECK(r.out.find("no-ssd") != std::string::npos);
    const std::string text = slurp(csv);
    CHECK(text.rfind("step,t_s,rho,servers,it_no-ssd\n", 0) == 0);
    CHECK(std::count(text.begin(), text.end(), '\n') == 289);
    CHECK(json::parse(slurp(fs::path(csv.string() + ".meta.json"))).size() == 1);
}

TEST_CASE("bench runs share one grid and drop iterations as eps_total grows") {
    const auto runs = cli::run_bench(gen_example(ExampleKind::converging, 210), {5e-3, 5e-2});
    REQUIRE(runs.size() == 3);
    CHECK(runs[0].label == "no-ssd");
    CHECK(runs[1].timeline.total_iterations() < runs[0].timeline.total_iterations());
    CHECK(runs[2].timeline.total_iterations() < runs[1].timeline.total_iterations());
}

TEST_CASE("output path precedence") {
    CHECK(cli::output_path(std::string("a/b.csv"), "x.csv") == fs::path("a/b.csv"));
    CHECK(cli::output_path(std::nullopt, "x.csv") == out_dir() / "x.csv");
}

TEST_CASE("overrides") {
    Scenario sc = gen_example(ExampleKind::converging, 210);
    cli::Overrides o;
    o.eps_total = 3e-2;
    o.precision = Precision::binary32;
    o.no_predict = true;
    cli::apply_overrides(sc, o);
    CHECK(sc.eps_total == 3e-2);
    CHECK(sc.cfg.precision == Precision::binary32);
    CHECK_FALSE(sc.cfg.predict);
    CHECK(sc.cfg.ssd);
}
