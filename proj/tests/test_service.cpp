#include <doctest.h>

#include <httplib.h>

#include "tranq/io.hpp"
#include "tranq/service.hpp"

using namespace tranq;
using namespace tranq::service;
using nlohmann::json;

namespace {

json example_doc(ExampleKind kind, int size) {
    return save_scenario(gen_example(kind, size));
}

json whatif(json base, json edits) {
    return {{"base", std::move(base)}, {"edits", std::move(edits)}};
}

}  // namespace

TEST_CASE("solve returns one record per period and the first threshold") {
    json doc = example_doc(ExampleKind::converging, 210);
    const Response r = handle_solve(doc);
    REQUIRE(r.status == 200);
    const json& tl = r.body["timeline"];
    CHECK(tl["t"].size() == 288);
    CHECK(tl["ES"].size() == 288);
    CHECK(tl["SL"].size() == 288);
    CHECK(tl["p_tail"].size() == 288);
    CHECK(tl["outcome"].size() == 288);
    CHECK(r.body["summary"]["delta"].get<double>() == doctest::Approx(4.9712e-3).epsilon(1e-10));
    CHECK(r.body["summary"]["records"] == 288);
}

TEST_CASE("model violations come back as 422 with the field") {
    json doc = example_doc(ExampleKind::converging, 210);
    doc["periods"][7]["capacity_n"] = 300;
    const Response r = handle_solve(doc);
    CHECK(r.status == 422);
    CHECK(r.body["error"] == "invalid");
    CHECK(r.body["field"] == "periods[7].capacity_n");

    doc = example_doc(ExampleKind::converging, 210);
    doc["eps_step"] = 1e-3;
    CHECK(handle_solve(doc).status == 422);
    CHECK(handle_solve(doc).body["error"] == "infeasible");
}

TEST_CASE("schema problems are 400") {
    CHECK(handle_solve_text("{oops").status == 400);
    json doc = example_doc(ExampleKind::converging, 210);
    doc["wat"] = 1;
    const Response r = handle_solve(doc);
    CHECK(r.status == 400);
    CHECK(r.body["field"] == "wat");
    CHECK(handle_whatif(json{{"edits", json::array()}}).status == 400);
    CHECK(handle_whatif(json{{"base", doc}, {"extra", 1}}).status == 400);
}

TEST_CASE("what-if without edits equals solve") {
    const json doc = example_doc(ExampleKind::original, 210);
    const Response a = handle_solve(doc);
    const Response b = handle_whatif(whatif(doc, json::array()));
    REQUIRE(a.status == 200);
    CHECK(a.body == b.body);
    CHECK(handle_whatif(json{{"base", doc}}).body == a.body);
}

TEST_CASE("adding servers raises the service level on the edited window") {
    const json doc = example_doc(ExampleKind::original, 210);
    const Response base = handle_solve(doc);
    const json edits = json::array({{{"period_range", {150, 170}}, {"field", "servers"}, {"op", "add"}, {"value", 2}}});
    const Response more = handle_whatif(whatif(doc, edits));
    REQUIRE(more.status == 200);
    for (int i = 150; i <= 170; ++i) {
        CAPTURE(i);
        CHECK(more.body["timeline"]["servers"][i] == 32);
        CHECK(more.body["timeline"]["SL"][i].get<double>() >= base.body["timeline"]["SL"][i].get<double>());
    }
    CHECK(more.body["timeline"]["servers"][149] == 30);
    CHECK(more.body["timeline"]["SL"][10] == base.body["timeline"]["SL"][10]);
}

TEST_CASE("bad edits are rejected with 400") {
    const json doc = example_doc(ExampleKind::converging, 210);
    auto edit = [&](json e) { return handle_whatif(whatif(doc, json::array({std::move(e)}))); };
    CHECK(edit({{"period_range", {0, 3}}, {"field", "servers"}, {"op", "set"}, {"value", 0}}).status == 400);
    CHECK(edit({{"period_range", {0, 3}}, {"field", "servers"}, {"op", "set"}, {"value", 211}}).status == 400);
    CHECK(edit({{"period_range", {0, 3}}, {"field", "servers"}, {"op", "set"}, {"value", 2.5}}).status == 400);
    CHECK(edit({{"period_range", {280, 288}}, {"field", "servers"}, {"op", "add"}, {"value", 1}}).status == 400);
    CHECK(edit({{"period_range", {5, 4}}, {"field", "servers"}, {"op", "add"}, {"value", 1}}).status == 400);
    CHECK(edit({{"period_range", {-1, 4}}, {"field", "servers"}, {"op", "add"}, {"value", 1}}).status == 400);
    CHECK(edit({{"period_range", {0, 0}}, {"field", "mu_per_s"}, {"op", "set"}, {"value", 0}}).status == 400);
    CHECK(edit({{"period_range", {0, 0}}, {"field", "lambda_per_s"}, {"op", "add"}, {"value", -1}}).status == 400);
    CHECK(edit({{"period_range", {0, 0}}, {"field", "capacity_n"}, {"op", "set"}, {"value", 9}}).status == 400);
    CHECK(edit({{"period_range", {0, 0}}, {"field", "servers"}, {"op", "times"}, {"value", 2}}).status == 400);
    CHECK(edit({{"period_range", {0, 0}}, {"field", "servers"}, {"op", "set"}, {"value", 3}, {"why", 1}}).status == 400);

    Scenario sc = gen_example(ExampleKind::converging, 210);
    apply_edits(sc, json::array({{{"period_range", {0, 1}}, {"field", "lambda_per_s"}, {"op", "set"}, {"value", 0.05}}}));
    CHECK(sc.periods[0].lambda == 0.05);
    CHECK(sc.periods[1].lambda == 0.05);
    CHECK(sc.periods[2].lambda != 0.05);
}

TEST_CASE("metric selection") {
    const json doc = example_doc(ExampleKind::converging, 210);
    json req = whatif(doc, json::array());
    req["metrics"] = {{"ES", false}, {"SL", {{"d_s", 0.0}}}};
    const Response r = handle_whatif(req);
    REQUIRE(r.status == 200);
    CHECK_FALSE(r.body["timeline"].contains("ES"));
    CHECK(r.body["timeline"].contains("p_tail"));
    CHECK(r.body["summary"]["sl_threshold_s"] == 0.0);

    CHECK_FALSE(parse_metrics(json{{"SL", false}}).SL);
    CHECK_THROWS_AS(parse_metrics(json{{"SL", {{"d_s", -1}}}}), ScenarioError);
    CHECK_THROWS_AS(parse_metrics(json{{"ESS", true}}), ScenarioError);
    req["metrics"] = {{"median", true}};
    CHECK(handle_whatif(req).status == 400);
}

TEST_CASE("resource limits") {
    Options small;
    small.max_capacity = 200;
    const Response big = handle_solve(example_doc(ExampleKind::converging, 210), small);
    CHECK(big.status == 413);
    CHECK(big.body["field"] == "capacity_n");

    Options hurried;
    hurried.timeout = std::chrono::milliseconds(0);
    const Response late = handle_solve(example_doc(ExampleKind::converging, 1500), hurried);
    CHECK(late.status == 504);
    CHECK(late.body["error"] == "timeout");
}

TEST_CASE("examples endpoint lists loadable scenarios") {
    const Response r = handle_examples();
    REQUIRE(r.status == 200);
    bool found = false;
    for (const json& ex : r.body["examples"]) {
        CAPTURE(ex["name"].get<std::string>());
        CHECK_NOTHROW(load_scenario(ex["scenario"]));
        CHECK(ex["scenario"]["capacity_n"].get<int>() <= 1500);
        found = found || ex["name"] == "converging-210";
    }
    CHECK(found);
    CHECK(r.body["examples"].size() == 6);
}

TEST_CASE("identical requests give identical responses") {
    const json doc = example_doc(ExampleKind::original, 210);
    CHECK(handle_solve(doc).body == handle_solve(doc).body);
}

TEST_CASE("HTTP front end") {
    Server server;
    const int port = server.start("127.0.0.1", 0);
    REQUIRE(port > 0);
    httplib::Client client("127.0.0.1", port);
    client.set_read_timeout(60, 0);

    auto examples = client.Get("/api/examples");
    REQUIRE(examples);
    CHECK(examples->status == 200);
    CHECK(examples->get_header_value("Access-Control-Allow-Origin") == "*");
    const json list = json::parse(examples->body);

    const std::string scenario = list["examples"][0]["scenario"].dump();
    auto solved = client.Post("/api/solve", scenario, "application/json");
    REQUIRE(solved);
    CHECK(solved->status == 200);
    CHECK(json::parse(solved->body)["timeline"]["t"].size() == 288);

    auto bad = client.Post("/api/whatif", "[1,2", "application/json");
    REQUIRE(bad);
    CHECK(bad->status == 400);
    CHECK(json::parse(bad->body)["error"] == "schema");

    auto pre = client.Options("/api/solve");
    REQUIRE(pre);
    CHECK(pre->status == 204);
    CHECK(pre->get_header_value("Access-Control-Allow-Methods").find("POST") != std::string::npos);

    server.stop();
}
