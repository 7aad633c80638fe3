#include "doctest.h"

#include "bwf/cli.hpp"
#include "bwf/io.hpp"

#include <filesystem>
#include <sstream>

using namespace bwf;
namespace fs = std::filesystem;

namespace {

struct Result {
    int code = 0;
    std::string out;
    std::string err;
};

Result run(std::vector<std::string> args)
{
    std::ostringstream out, err;
    Result r;
    r.code = cli::run_cli(args, out, err);
    r.out = out.str();
    r.err = err.str();
    return r;
}

std::string data(const std::string& rel)
{
    return std::string(BWF_DATA_DIR) + "/" + rel;
}

fs::path scratch(const std::string& name)
{
    auto p = fs::temp_directory_path() / ("bwf-cli-" + name);
    fs::remove_all(p);
    return p;
}

}  // namespace

TEST_CASE("validate reports violations with exit 1")
{
    auto ok = run({"validate", data("demo/instance.json"), data("demo/plan.json")});
    CHECK(ok.code == 0);
    auto bad = run({"validate", data("demo/instance.json"), data("fixtures/plan_permit_131.json")});
    CHECK(bad.code == 1);
    CHECK(bad.err.find("permit_30pct") != std::string::npos);
    CHECK(bad.err.find("30%") != std::string::npos);
}

TEST_CASE("usage errors exit 64 and runtime errors exit 2")
{
    auto r = run({"simulate", "--colour", "red"});
    CHECK(r.code == 64);
    CHECK(r.err.find("Usage:") != std::string::npos);
    CHECK(run({}).code == 64);
    CHECK(run({"frobnicate"}).code == 64);
    CHECK(run({"--help"}).code == 0);
    CHECK(run({"kpi", "/nonexistent/run"}).code == 2);
    CHECK(run({"validate", "/nonexistent/a.json", data("demo/plan.json")}).code == 2);
}

TEST_CASE("malformed instance exits 1 with a located message")
{
    const auto dir = scratch("badinst");
    fs::create_directories(dir);
    auto doc = io::Json::parse(io::read_file(data("demo/instance.json")));
    doc["connections"][0]["node_a"] = "M77";
    io::write_file((dir / "i.json").string(), io::canonical(doc));
    auto r = run({"validate", (dir / "i.json").string(), data("demo/plan.json")});
    CHECK(r.code == 1);
    CHECK(r.err.find("i.json:") != std::string::npos);
    CHECK(r.err.find("'M77'") != std::string::npos);
}

TEST_CASE("gen-instance, trace, simulate and kpi")
{
    const auto dir = scratch("flow");
    fs::create_directories(dir);
    const std::string inst = (dir / "inst.json").string();
    REQUIRE(run({"gen-instance", "--munis", "8", "--seed", "3", "--out", inst}).code == 0);
    CHECK_NOTHROW(io::load_instance(inst));
    auto again = run({"gen-instance", "--munis", "8", "--seed", "3"});
    CHECK(again.out == io::read_file(inst));

    const std::string trace = (dir / "trace.tsv").string();
    REQUIRE(run({"trace", inst, "--seed", "5", "--years", "3", "--out", trace}).code == 0);
    const std::string plan = (dir / "plan.json").string();
    io::write_file(plan, "{\"format_version\": 1, \"interventions\": []}\n");

    const std::string a = (dir / "a").string(), b = (dir / "b").string();
    REQUIRE(run({"simulate", inst, plan, "--seed", "5", "--years", "2", "--out", a}).code == 0);
    REQUIRE(run({"simulate", inst, plan, "--trace", trace, "--years", "2", "--out", b}).code == 0);
    for (const auto& f : fs::directory_iterator(a))
        CHECK(io::read_file(f.path().string()) == io::read_file((fs::path(b) / f.path().filename()).string()));

    auto k = run({"kpi", a, "--slice", "national"});
    REQUIRE(k.code == 0);
    for (const char* key : {"tac_eur ", "ghg_tco2eq ", "reliability ", "affordability_pct "})
        CHECK(k.out.find(key) != std::string::npos);
    auto j = run({"kpi", a, "--slice", "national", "--json"});
    const auto doc = io::Json::parse(j.out);
    const auto manifest = io::Json::parse(io::read_file((fs::path(a) / "run.json").string()));
    CHECK(doc[0] == manifest["kpi"]["national"]);
    CHECK(run({"kpi", a, "--slice", "planet=earth"}).code == 2);
}
