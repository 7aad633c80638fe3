#pragma once

#include "bwf/domain.hpp"
#include "bwf/engine.hpp"
#include "bwf/io.hpp"

#include <atomic>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>

namespace httplib {
class Server;
}

namespace bwf::service {

using io::Json;

struct Response {
    int status = 200;
    Json body;
    std::optional<int> retry_after;  // seconds, for 409 on a busy timeline
};

struct ServiceOptions {
    std::uint64_t seed = 1;
    int trace_years = 100;  // long enough for four stages
    engine::SimMode mode = engine::SimMode::Representative;
    int stage_years = 25;
};

// One planning session: a single committed timeline plus any number of
// what-if jobs. Handlers are plain functions of the request body so they can
// be exercised without a socket; bind() routes them over HTTP.
//
//   GET  /api/instance                  instance summary and session status
//   GET  /api/network?date=YYYY-MM-DD   visible nodes and edges
//   POST /api/plan/validate             {plan} -> violations
//   POST /api/stage/run                 {plan?, years?, mode?} -> job id
//   POST /api/stage/advance             {plan} commits the finished stage
//   POST /api/whatif                    {plan, seed?, years?, mode?} -> job id
//   GET  /api/jobs/{id}                 status and per-year progress
//   GET  /api/jobs/{id}/results         KPIs, yearly series, revealed history
//   POST /api/jobs/{id}/cancel
class Service {
public:
    Service(domain::Instance instance, ServiceOptions options = {});
    ~Service();
    Service(const Service&) = delete;
    Service& operator=(const Service&) = delete;

    Response instance_summary() const;
    Response network(const std::string& date) const;
    Response validate(const std::string& body) const;
    Response run_stage(const std::string& body);
    Response advance(const std::string& body);
    Response whatif(const std::string& body);
    Response job_status(const std::string& id) const;
    Response job_results(const std::string& id) const;
    Response cancel(const std::string& id);

    void wait(const std::string& id) const;  // blocks until the job leaves the running state
    void bind(httplib::Server& server);

private:
    struct Job;

    std::shared_ptr<Job> find(const std::string& id) const;
    std::string start(std::shared_ptr<Job> job);
    std::optional<Response> parse_plan_body(const Json& body, engine::Masterplan& plan) const;

    domain::Instance instance_;
    ServiceOptions options_;
    scenario::ScenarioTrace trace_;

    mutable std::mutex mutex_;
    // committed timeline
    domain::WorldState state_;
    int stage_ = 0;
    engine::Masterplan plan_;
    std::vector<scenario::History> history_;
    std::shared_ptr<Job> stage_job_;  // latest run of the current stage
    int next_job_ = 1;
    std::map<std::string, std::shared_ptr<Job>> jobs_;
};

}  // namespace bwf::service
