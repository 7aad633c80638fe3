#include "bwf/service.hpp"

#include "bwf/error.hpp"
#include "bwf/output.hpp"

#include "httplib.h"

#include <condition_variable>
#include <functional>

namespace bwf::service {

using engine::Masterplan;

struct Service::Job {
    std::string id;
    std::string kind;  // stage or whatif
    std::atomic<bool> cancel{false};
    std::function<Json(Job&)> work;
    std::thread thread;

    mutable std::mutex m;
    std::condition_variable cv;
    std::string status = "queued";  // running, done, failed, cancelled
    int year = 0;
    int done = 0;
    int total = 0;
    std::string error;
    Json results;
    std::optional<engine::RunOutput> output;  // stage jobs keep the raw output for the commit

    bool active() const
    {
        std::lock_guard lock(m);
        return status == "queued" || status == "running";
    }
};

namespace {

Response error(int status, const std::string& message)
{
    return {status, {{"error", message}}, std::nullopt};
}

Response busy()
{
    return {409, {{"error", "a stage job is in flight on the committed timeline"}, {"retry_after_s", 1}}, 1};
}

Json parse_body(const std::string& body)
{
    if (body.empty())
        return Json::object();
    Json j = Json::parse(body, nullptr, false);
    if (j.is_discarded() || !j.is_object())
        throw ValidationError("request body must be a JSON object");
    return j;
}

int body_int(const Json& body, const char* key, int def)
{
    if (!body.contains(key))
        return def;
    if (!body[key].is_number_integer())
        throw ValidationError(std::string("'") + key + "' must be an integer");
    return body[key].get<int>();
}

engine::SimMode body_mode(const Json& body, engine::SimMode def)
{
    if (!body.contains("mode"))
        return def;
    if (!body["mode"].is_string())
        throw ValidationError("'mode' must be a string");
    try {
        return engine::parse_mode(body["mode"].get<std::string>());
    } catch (const Error& e) {
        throw ValidationError(e.what());
    }
}

Json delta(const Json& a, const Json& b, const char* key)
{
    if (a[key].is_null() || b[key].is_null())
        return nullptr;
    return a[key].get<double>() - b[key].get<double>();
}

// Runs every handler behind one error mapping.
template <class F>
Response guarded(F&& fn)
{
    try {
        return fn();
    } catch (const ValidationError& e) {
        return error(400, e.what());
    } catch (const Json::exception& e) {
        return error(400, e.what());
    } catch (const std::exception& e) {
        return error(500, e.what());
    }
}

}  // namespace

Service::Service(domain::Instance instance, ServiceOptions options)
    : instance_(std::move(instance)), options_(options)
{
    instance_.validate();
    trace_ = scenario::generate_trace(domain::trace_request(instance_, options_.seed, options_.trace_years));
    state_ = domain::initial_state(instance_, trace_);
}

Service::~Service()
{
    std::map<std::string, std::shared_ptr<Job>> jobs;
    {
        std::lock_guard lock(mutex_);
        jobs = jobs_;
    }
    for (auto& [id, job] : jobs)
        job->cancel = true;
    for (auto& [id, job] : jobs)
        if (job->thread.joinable())
            job->thread.join();
}

std::shared_ptr<Service::Job> Service::find(const std::string& id) const
{
    std::lock_guard lock(mutex_);
    auto it = jobs_.find(id);
    return it == jobs_.end() ? nullptr : it->second;
}

std::string Service::start(std::shared_ptr<Job> job)
{
    job->id = "job-" + std::to_string(next_job_++);
    jobs_[job->id] = job;
    job->thread = std::thread([job] {
        {
            std::lock_guard lock(job->m);
            job->status = "running";
        }
        std::string status = "done";
        std::string message;
        Json results;
        try {
            results = job->work(*job);
        } catch (const SimulationAbort& e) {
            status = job->cancel ? "cancelled" : "failed";
            message = e.what();
        } catch (const std::exception& e) {
            status = "failed";
            message = e.what();
        }
        {
            std::lock_guard lock(job->m);
            job->status = status;
            job->error = message;
            job->results = std::move(results);
        }
        job->cv.notify_all();
    });
    return job->id;
}

std::optional<Response> Service::parse_plan_body(const Json& body, Masterplan& plan) const
{
    if (!body.contains("plan"))
        return error(400, "missing 'plan'");
    try {
        plan = io::plan_from_json(body["plan"]);
    } catch (const ValidationError& e) {
        return Response{400,
                        {{"error", "malformed plan"},
                         {"violations", Json::array({{{"code", "malformed"}, {"index", nullptr}, {"message", e.what()}}})}},
                        std::nullopt};
    }
    return std::nullopt;
}

Response Service::instance_summary() const
{
    return guarded([&] {
        std::lock_guard lock(mutex_);
        Json sites = Json::array();
        for (const auto& s : instance_.sites) {
            Json j{{"id", s.id},
                   {"type", assets::source_type_name(s.type)},
                   {"province", s.province},
                   {"connected_municipality", s.connected_municipality}};
            if (s.permit)
                j["permit"] = *s.permit;
            if (s.max_capacity)
                j["max_capacity"] = *s.max_capacity;
            sites.push_back(j);
        }
        Json pumps = Json::array(), pipes = Json::array(), utilities = Json::array();
        for (const auto& [id, p] : instance_.catalogs.pumps)
            pumps.push_back(id);
        for (const auto& [id, p] : instance_.catalogs.pipes)
            pipes.push_back(id);
        for (const auto& u : instance_.utilities)
            utilities.push_back({{"id", u.id}, {"province", u.province}});
        Json history = Json::array();
        for (const auto& h : history_)
            history.push_back(output::history_json(h));
        Json j{{"name", instance_.name},
               {"format_version", instance_.format_version},
               {"start_year", instance_.start_year},
               {"seed", options_.seed},
               {"stage", stage_},
               {"year", state_.clock.year},
               {"utilities", utilities},
               {"municipalities", instance_.municipalities.size()},
               {"sources", instance_.sources.size()},
               {"connections", instance_.connections.size()},
               {"sites", sites},
               {"catalogs", {{"pumps", pumps}, {"pipes", pipes}}},
               {"plan", io::plan_to_json(plan_)},
               {"history", history}};
        if (stage_job_) {
            std::lock_guard jl(stage_job_->m);
            j["stage_job"] = {{"id", stage_job_->id}, {"status", stage_job_->status}};
        }
        return Response{200, j, std::nullopt};
    });
}

Response Service::network(const std::string& date) const
{
    return guarded([&] {
        std::lock_guard lock(mutex_);
        Date d = state_.clock;
        if (!date.empty()) {
            try {
                d = Date::parse(date);
            } catch (const Error& e) {
                return error(400, e.what());
            }
        }
        const auto view = domain::visible_network(state_, d);
        Json nodes = Json::array(), edges = Json::array();
        for (const auto& n : view.nodes)
            nodes.push_back({{"id", n.id},
                             {"kind", n.kind},
                             {"lat", n.latitude},
                             {"lon", n.longitude},
                             {"elevation", n.elevation},
                             {"province", n.province}});
        for (const auto& e : view.edges)
            edges.push_back({{"id", e.id},
                             {"kind", e.kind},
                             {"a", e.a},
                             {"b", e.b},
                             {"length", e.length},
                             {"diameter", e.diameter},
                             {"friction", e.friction},
                             {"option", e.option}});
        return Response{200, {{"date", d.str()}, {"nodes", nodes}, {"edges", edges}}, std::nullopt};
    });
}

Response Service::validate(const std::string& body) const
{
    return guarded([&] {
        const Json j = parse_body(body);
        Masterplan plan;
        if (auto bad = parse_plan_body(j, plan))
            return *bad;
        std::lock_guard lock(mutex_);
        const auto v = engine::validate_plan(plan, instance_, &state_, state_.clock.year);
        return Response{200, {{"valid", v.empty()}, {"violations", io::violations_to_json(v)}}, std::nullopt};
    });
}

Response Service::run_stage(const std::string& body)
{
    return guarded([&] {
        const Json j = parse_body(body);
        std::lock_guard lock(mutex_);
        if (stage_job_ && stage_job_->active())
            return busy();
        Masterplan plan = plan_;
        if (j.contains("plan"))
            if (auto bad = parse_plan_body(j, plan))
                return *bad;
        const auto v = engine::validate_plan(plan, instance_, &state_, state_.clock.year);
        if (!v.empty())
            return Response{422, {{"error", "plan violates constraints"}, {"violations", io::violations_to_json(v)}},
                            std::nullopt};
        engine::RunOptions ro;
        ro.mode = body_mode(j, options_.mode);
        ro.years = body_int(j, "years", options_.stage_years);
        if (ro.years < 1 || !trace_.covers(state_.clock.year, state_.clock.year + ro.years - 1))
            return error(400, "years must be positive and stay within the session trace");

        auto job = std::make_shared<Job>();
        job->kind = "stage";
        job->total = ro.years;
        job->work = [this, state = state_, plan, ro](Job& self) mutable {
            ro.cancel = &self.cancel;
            ro.progress = [&self](int year, int done, int total) {
                std::lock_guard lock(self.m);
                self.year = year;
                self.done = done;
                self.total = total;
            };
            auto out = engine::run_stage(instance_, std::move(state), plan, trace_, ro);
            const auto history =
                scenario::reveal_history(trace_, out.observations, out.first_year, out.first_year + out.years);
            Json results = output::run_json(out, instance_, history);
            std::lock_guard lock(self.m);
            self.output = std::move(out);
            return results;
        };
        plan_ = plan;
        stage_job_ = job;
        const std::string id = start(job);
        return Response{202, {{"job", id}, {"stage", stage_}}, std::nullopt};
    });
}

Response Service::advance(const std::string& body)
{
    return guarded([&] {
        const Json j = parse_body(body);
        Masterplan plan;
        if (auto bad = parse_plan_body(j, plan))
            return *bad;
        std::lock_guard lock(mutex_);
        if (stage_job_ && stage_job_->active())
            return busy();
        if (!stage_job_ || !stage_job_->output)
            return error(409, "run the current stage to completion before advancing");
        const auto boundary = engine::step_stage_boundary(instance_, *stage_job_->output, plan, trace_);
        if (!boundary.violations.empty())
            return Response{422,
                            {{"error", "plan rejected against the carried state"},
                             {"violations", io::violations_to_json(boundary.violations)}},
                            std::nullopt};
        state_ = boundary.state;
        history_.push_back(boundary.history);
        plan_ = plan;
        stage_job_.reset();
        ++stage_;
        return Response{200,
                        {{"stage", stage_}, {"year", state_.clock.year}, {"history", output::history_json(boundary.history)}},
                        std::nullopt};
    });
}

Response Service::whatif(const std::string& body)
{
    return guarded([&] {
        const Json j = parse_body(body);
        Masterplan plan;
        if (auto bad = parse_plan_body(j, plan))
            return *bad;
        std::lock_guard lock(mutex_);
        const auto v = engine::validate_plan(plan, instance_, &state_, state_.clock.year);
        if (!v.empty())
            return Response{422, {{"error", "plan violates constraints"}, {"violations", io::violations_to_json(v)}},
                            std::nullopt};
        engine::RunOptions ro;
        ro.mode = body_mode(j, options_.mode);
        ro.years = body_int(j, "years", options_.stage_years);
        ro.record_hours = false;
        if (ro.years < 1)
            return error(400, "years must be positive");
        std::uint64_t seed = options_.seed;
        if (j.contains("seed")) {
            if (!j["seed"].is_number_unsigned())
                return error(400, "'seed' must be a non-negative integer");
            seed = j["seed"].get<std::uint64_t>();
        }

        auto job = std::make_shared<Job>();
        job->kind = "whatif";
        job->total = 2 * ro.years;
        job->work = [this, state = state_, baseline = plan_, plan, ro, seed](Job& self) mutable {
            const int span = state.clock.year - instance_.start_year + ro.years;
            const scenario::ScenarioTrace trace =
                seed == options_.seed && span <= options_.trace_years
                    ? trace_
                    : scenario::generate_trace(domain::trace_request(instance_, seed, span));
            ro.cancel = &self.cancel;
            int offset = 0;
            ro.progress = [&self, &offset](int year, int done, int) {
                std::lock_guard lock(self.m);
                self.year = year;
                self.done = offset + done;
            };
            const auto cand = engine::run_stage(instance_, state, plan, trace, ro);
            offset = ro.years;
            const auto base = engine::run_stage(instance_, state, baseline, trace, ro);
            const auto ck = output::kpi_json(cand.tables, cand.first_year, cand.years, instance_.utilities);
            const auto bk = output::kpi_json(base.tables, base.first_year, base.years, instance_.utilities);
            const auto& cn = ck["national"];
            const auto& bn = bk["national"];
            return Json{{"seed", seed},
                        {"first_year", cand.first_year},
                        {"years", cand.years},
                        {"candidate", ck},
                        {"baseline", bk},
                        {"delta",
                         {{"tac", delta(cn, bn, "tac")},
                          {"ghg", delta(cn, bn, "ghg")},
                          {"reliability", delta(cn, bn, "reliability")},
                          {"affordability", delta(cn, bn, "affordability")}}}};
        };
        const std::string id = start(job);
        return Response{202, {{"job", id}}, std::nullopt};
    });
}

Response Service::job_status(const std::string& id) const
{
    auto job = find(id);
    if (!job)
        return error(404, "unknown job '" + id + "'");
    std::lock_guard lock(job->m);
    Json j{{"job", job->id},
           {"kind", job->kind},
           {"status", job->status},
           {"progress", {{"year", job->year}, {"done", job->done}, {"total", job->total}}}};
    if (!job->error.empty())
        j["error"] = job->error;
    return {200, j, std::nullopt};
}

Response Service::job_results(const std::string& id) const
{
    auto job = find(id);
    if (!job)
        return error(404, "unknown job '" + id + "'");
    std::lock_guard lock(job->m);
    if (job->status == "done")
        return {200, job->results, std::nullopt};
    if (job->status == "failed")
        return {500, {{"error", job->error}, {"status", job->status}}, std::nullopt};
    return {409, {{"error", "job has no results"}, {"status", job->status}}, 1};
}

Response Service::cancel(const std::string& id)
{
    auto job = find(id);
    if (!job)
        return error(404, "unknown job '" + id + "'");
    job->cancel = true;
    std::lock_guard lock(job->m);
    return {202, {{"job", id}, {"status", job->status}}, std::nullopt};
}

void Service::wait(const std::string& id) const
{
    auto job = find(id);
    if (!job)
        return;
    std::unique_lock lock(job->m);
    job->cv.wait(lock, [&] { return job->status != "queued" && job->status != "running"; });
}

void Service::bind(httplib::Server& server)
{
    auto send = [](httplib::Response& res, const Response& r) {
        res.status = r.status;
        if (r.retry_after)
            res.set_header("Retry-After", std::to_string(*r.retry_after));
        res.set_content(r.body.dump(), "application/json");
    };
    server.Get("/api/instance", [this, send](const httplib::Request&, httplib::Response& res) {
        send(res, instance_summary());
    });
    server.Get("/api/network", [this, send](const httplib::Request& req, httplib::Response& res) {
        send(res, network(req.has_param("date") ? req.get_param_value("date") : std::string()));
    });
    server.Post("/api/plan/validate", [this, send](const httplib::Request& req, httplib::Response& res) {
        send(res, validate(req.body));
    });
    server.Post("/api/stage/run", [this, send](const httplib::Request& req, httplib::Response& res) {
        send(res, run_stage(req.body));
    });
    server.Post("/api/stage/advance", [this, send](const httplib::Request& req, httplib::Response& res) {
        send(res, advance(req.body));
    });
    server.Post("/api/whatif", [this, send](const httplib::Request& req, httplib::Response& res) {
        send(res, whatif(req.body));
    });
    server.Get(R"(/api/jobs/([^/]+))", [this, send](const httplib::Request& req, httplib::Response& res) {
        send(res, job_status(req.matches[1]));
    });
    server.Get(R"(/api/jobs/([^/]+)/results)", [this, send](const httplib::Request& req, httplib::Response& res) {
        send(res, job_results(req.matches[1]));
    });
    server.Post(R"(/api/jobs/([^/]+)/cancel)", [this, send](const httplib::Request& req, httplib::Response& res) {
        send(res, cancel(req.matches[1]));
    });
}

}  // namespace bwf::service
