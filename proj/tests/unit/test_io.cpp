#include "doctest.h"

#include "bwf/error.hpp"
#include "bwf/generator.hpp"
#include "bwf/io.hpp"

#include <functional>

using namespace bwf;

namespace {

std::string message_of(const std::function<void()>& fn)
{
    try {
        fn();
    } catch (const ValidationError& e) {
        return e.what();
    }
    return {};
}

}  // namespace

TEST_CASE("locate finds the line of a pointer")
{
    const std::string text = "{\n  \"a\": 1,\n  \"b\": [\n    {\"x\": 2},\n    {\n      \"x\": 3\n    }\n  ]\n}\n";
    CHECK(io::locate(text, "/a") == 2);
    CHECK(io::locate(text, "/b/1") == 5);
    CHECK(io::locate(text, "/b/1/x") == 6);
    CHECK(io::locate(text, "/b/0/x") == 4);
    CHECK_FALSE(io::locate(text, "/c").has_value());
    CHECK_FALSE(io::locate(text, "/b/2").has_value());
}

TEST_CASE("instance round trip is canonical")
{
    const auto in = generator::generate_instance({});
    const std::string first = io::canonical(io::instance_to_json(in));
    const auto back = io::parse_instance(first, "gen.json");
    const std::string second = io::canonical(io::instance_to_json(back));
    CHECK(first == second);
    CHECK(back.municipalities.size() == in.municipalities.size());
    CHECK(back.catalogs.pumps.at("P600").curves->head == in.catalogs.pumps.at("P600").curves->head);
}

TEST_CASE("unknown fields and bad references carry file and line")
{
    const auto in = generator::generate_instance({});
    auto doc = io::instance_to_json(in);
    doc["municipalities"][2]["colour"] = "blue";
    const std::string text = io::canonical(doc);
    const std::string msg = message_of([&] { io::parse_instance(text, "bad.json"); });
    const auto line = io::locate(text, "/municipalities/2/colour");
    REQUIRE(line);
    CHECK(msg == "bad.json:" + std::to_string(*line) + ": /municipalities/2/colour: unknown field 'colour'");

    doc = io::instance_to_json(in);
    doc["connections"][0]["node_b"] = "M99";
    const std::string text2 = io::canonical(doc);
    const std::string msg2 = message_of([&] { io::parse_instance(text2, "bad.json"); });
    CHECK(msg2.find("bad.json:" + std::to_string(*io::locate(text2, "/connections/0")) + ": /connections/0") == 0);
    CHECK(msg2.find("'M99'") != std::string::npos);

    doc = io::instance_to_json(in);
    doc["sources"][0]["nominal_capacity"] = "lots";
    CHECK(message_of([&] { io::parse_instance(io::canonical(doc), "x"); }).find("expected a number") !=
          std::string::npos);

    CHECK(message_of([&] { io::parse_instance("{\n  \"a\": \n}", "broken.json"); }).find("broken.json:3:") == 0);
    CHECK_THROWS_AS(io::load_instance("/nonexistent/instance.json"), InputError);
}

TEST_CASE("groundwater beyond the permit is rejected at load")
{
    const auto in = generator::generate_instance({});
    auto doc = io::instance_to_json(in);
    std::size_t k = 0;
    while (doc["sources"][k]["type"] != "groundwater")
        ++k;
    const double permit = doc["sources"][k]["permit"].get<double>();
    doc["sources"][k]["nominal_capacity"] = 1.4 * permit / 365.0;
    const std::string msg = message_of([&] { io::parse_instance(io::canonical(doc), "gw.json"); });
    CHECK(msg.find("/sources/" + std::to_string(k) + ": nominal capacity exceeds the permit") != std::string::npos);
}

TEST_CASE("plan round trip and strictness")
{
    const std::string text = R"({
  "format_version": 1,
  "interventions": [
    {"type": "open_source", "date": "2026-01-01", "target": "S01", "nominal_capacity": 900, "pump_option": "P300", "pump_count": 2},
    {"type": "install_pipe", "date": "2026-04-01", "target": "C-M01-M02", "pipe_option": "D500"},
    {"type": "install_pv", "date": "2026-07-01", "target": "W01", "capacity_kw": 250},
    {"type": "nrw_budget", "date": "2027-01-01", "target": "U01", "share": 0.1},
    {"type": "budget_rule", "date": "2027-01-01", "rule": "custom", "weights": [0.5, 0.5]}
  ]
}
)";
    const auto plan = io::parse_plan(text, "plan.json");
    REQUIRE(plan.interventions.size() == 5);
    CHECK(plan.interventions[0].count == 2);
    CHECK(plan.interventions[4].weights.size() == 2);
    const auto again = io::plan_from_json(io::plan_to_json(plan));
    CHECK(io::canonical(io::plan_to_json(again)) == io::canonical(io::plan_to_json(plan)));

    std::string bad = text;
    bad.replace(bad.find("\"capacity_kw\""), 13, "\"capacity_kW\"");
    const std::string msg = message_of([&] { io::parse_plan(bad, "plan.json"); });
    CHECK(msg.find("plan.json:6: /interventions/2") == 0);
}
