#include "doctest.h"

#include "bwf/cli.hpp"
#include "bwf/io.hpp"
#include "bwf/service.hpp"

#include "httplib.h"

#include <filesystem>
#include <sstream>

using namespace bwf;
using service::Service;

namespace {

std::string data(const std::string& rel)
{
    return std::string(BWF_DATA_DIR) + "/" + rel;
}

const domain::Instance& demo()
{
    static const auto in = io::load_instance(data("demo/instance.json"));
    return in;
}

std::string body(const std::string& plan_file, const std::string& extra = "")
{
    return "{\"plan\": " + io::read_file(data(plan_file)) + extra + "}";
}

const std::string kEmpty = R"({"plan": {"format_version": 1, "interventions": []}, "years": 2})";

std::string finish(Service& svc, const service::Response& started)
{
    REQUIRE(started.status == 202);
    const std::string id = started.body["job"];
    svc.wait(id);
    return id;
}

}  // namespace

TEST_CASE("service summary, network and validation")
{
    Service svc(demo());
    auto s = svc.instance_summary();
    CHECK(s.status == 200);
    CHECK(s.body["stage"] == 0);
    CHECK(s.body["year"] == 2025);
    auto n = svc.network("2025-01-01");
    CHECK(n.status == 200);
    CHECK(n.body["nodes"].size() == 12 + 4);
    CHECK(n.body["nodes"][0].contains("lat"));
    CHECK(svc.network("2025-02-30").status == 400);

    auto v = svc.validate(body("fixtures/plan_duplicate_pipe.json"));
    CHECK(v.status == 200);
    CHECK(v.body["valid"] == false);
    CHECK(v.body["violations"][0]["code"] == "duplicate_pipe");
    auto bad = svc.validate(R"({"plan": {"format_version": 1, "interventions": [{"type": "dig"}]}})");
    CHECK(bad.status == 400);
    CHECK(bad.body["violations"].size() == 1);
    CHECK(svc.validate("not json").status == 400);
}

TEST_CASE("stage results equal the command line")
{
    Service svc(demo(), {.seed = 7});
    const std::string id = finish(svc, svc.run_stage(body("demo/plan.json", ", \"years\": 3")));
    auto st = svc.job_status(id);
    CHECK(st.body["status"] == "done");
    CHECK(st.body["progress"]["done"] == 3);
    auto res = svc.job_results(id);
    REQUIRE(res.status == 200);
    const double rel = res.body["kpi"]["national"]["reliability"];
    CHECK(rel >= 0.0);
    CHECK(rel <= 1.0);
    CHECK(res.body["series"]["delivered"].size() == 3);
    CHECK(res.body["history"]["up_to_year"] == 2028);

    const auto dir = std::filesystem::temp_directory_path() / "bwf-svc-cli";
    std::filesystem::remove_all(dir);
    std::ostringstream out, err;
    REQUIRE(cli::run_cli({"simulate", data("demo/instance.json"), data("demo/plan.json"), "--seed", "7", "--years", "3",
                          "--out", dir.string()},
                         out, err) == 0);
    const auto run = io::Json::parse(io::read_file((dir / "run.json").string()));
    CHECK(run["kpi"] == res.body["kpi"]);
    CHECK(run["series"] == res.body["series"]);
    const auto history = io::Json::parse(io::read_file((dir / "history.json").string()));
    CHECK(history == res.body["history"]);
}

TEST_CASE("commits are serialized and invalid advances leave the timeline alone")
{
    Service svc(demo());
    CHECK(svc.advance(kEmpty).status == 409);  // nothing run yet
    auto started = svc.run_stage(R"({"years": 3})");
    REQUIRE(started.status == 202);
    auto clash = svc.run_stage(R"({"years": 3})");
    CHECK(clash.status == 409);
    CHECK(clash.retry_after.has_value());
    CHECK(clash.body.contains("retry_after_s"));
    svc.wait(started.body["job"]);

    const auto before = svc.instance_summary().body;
    auto rejected = svc.advance(body("fixtures/plan_unknown_site.json"));
    CHECK(rejected.status == 422);
    // dated inside the finished stage and naming no site
    CHECK(rejected.body["violations"].size() == 2);
    CHECK(rejected.body["violations"][1]["code"] == "unknown_site");
    CHECK(svc.instance_summary().body == before);

    auto ok = svc.advance(R"({"plan": {"format_version": 1, "interventions": []}})");
    REQUIRE(ok.status == 200);
    CHECK(ok.body["stage"] == 1);
    CHECK(ok.body["year"] == 2028);
    CHECK(svc.instance_summary().body["history"].size() == 1);
    // a plan dated in the finished stage no longer fits
    auto late = svc.run_stage(body("demo/plan.json", ", \"years\": 1"));
    CHECK(late.status == 422);
}

TEST_CASE("what-if jobs are isolated from the timeline and from each other")
{
    Service svc(demo());
    const std::string stage = finish(svc, svc.run_stage(R"({"years": 2})"));
    const std::string committed = svc.job_results(stage).body.dump();

    const std::string candidate = body("demo/plan.json", ", \"years\": 2");
    auto a = svc.whatif(candidate);
    auto b = svc.whatif(candidate);
    auto c = svc.whatif(body("demo/plan.json", ", \"years\": 2, \"seed\": 99"));
    REQUIRE(a.status == 202);
    REQUIRE(b.status == 202);
    REQUIRE(c.status == 202);
    svc.wait(a.body["job"]);
    svc.wait(b.body["job"]);
    svc.wait(c.body["job"]);
    auto ra = svc.job_results(a.body["job"]);
    auto rb = svc.job_results(b.body["job"]);
    auto rc = svc.job_results(c.body["job"]);
    REQUIRE(ra.status == 200);
    CHECK(ra.body == rb.body);
    CHECK(rc.body["seed"] == 99);
    CHECK(rc.body["candidate"] != ra.body["candidate"]);
    CHECK(ra.body["delta"]["tac"].get<double>() ==
          ra.body["candidate"]["national"]["tac"].get<double>() - ra.body["baseline"]["national"]["tac"].get<double>());
    CHECK(svc.job_results(stage).body.dump() == committed);
    CHECK(svc.instance_summary().body["stage"] == 0);

    CHECK(svc.whatif(body("fixtures/plan_permit_131.json")).status == 422);
}

TEST_CASE("jobs: unknown ids, pending results and cancellation")
{
    Service svc(demo());
    CHECK(svc.job_status("job-42").status == 404);
    CHECK(svc.job_results("job-42").status == 404);
    CHECK(svc.cancel("job-42").status == 404);
    auto started = svc.run_stage(R"({"years": 25})");
    const std::string id = started.body["job"];
    CHECK(svc.cancel(id).status == 202);
    svc.wait(id);
    CHECK(svc.job_status(id).body["status"] == "cancelled");
    CHECK(svc.job_results(id).status == 409);
    CHECK(svc.run_stage(R"({"years": 500})").status == 400);
}

TEST_CASE("routes over HTTP")
{
    Service svc(demo());
    httplib::Server server;
    svc.bind(server);
    const int port = server.bind_to_any_port("127.0.0.1");
    REQUIRE(port > 0);
    std::thread t([&] { server.listen_after_bind(); });
    server.wait_until_ready();

    httplib::Client client("127.0.0.1", port);
    auto r = client.Get("/api/instance");
    REQUIRE(r);
    CHECK(r->status == 200);
    CHECK(io::Json::parse(r->body)["name"] == "demo");
    auto v = client.Post("/api/plan/validate", body("fixtures/plan_unknown_site.json"), "application/json");
    REQUIRE(v);
    CHECK(io::Json::parse(v->body)["violations"][0]["code"] == "unknown_site");
    auto job = client.Post("/api/stage/run", R"({"years": 1})", "application/json");
    REQUIRE(job);
    CHECK(job->status == 202);
    const std::string id = io::Json::parse(job->body)["job"];
    svc.wait(id);
    auto res = client.Get("/api/jobs/" + id + "/results");
    REQUIRE(res);
    CHECK(res->status == 200);
    auto st = client.Get("/api/jobs/" + id);
    REQUIRE(st);
    CHECK(io::Json::parse(st->body)["status"] == "done");
    CHECK(client.Get("/api/jobs/nope/results")->status == 404);
    auto net = client.Get("/api/network?date=2025-01-01");
    REQUIRE(net);
    CHECK(net->status == 200);

    server.stop();
    t.join();
}
