#include "phyre/service.hpp"

#include <httplib.h>

#include <atomic>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <mutex>

#include "phyre/environment.hpp"
#include "phyre/error.hpp"
#include "phyre/rng.hpp"

namespace phyre {

Json task_summary(const Task& task)
{
  return {{"id", task.id},
          {"tier", std::string(to_string(task.tier))},
          {"template", task.template_id},
          {"time_limit", task.time_limit},
          {"goal", to_json(task.goal)},
          {"scene", to_json(task.world)}};
}

struct SimService::Impl
{
  std::map<std::string, Task> tasks;
  ServiceOptions options;
  mutable std::mutex mutex;
  std::map<std::string, int> sessions;
  std::uint64_t session_counter = 0;
  std::ofstream log;
  httplib::Server server;
};

SimService::SimService(std::vector<Task> tasks, ServiceOptions options) : impl_(std::make_unique<Impl>())
{
  if (options.default_stride < 1)
  {
    throw Error(ErrorCode::ConfigInvalid, "frame stride must be at least 1");
  }
  for (Task& t : tasks)
  {
    const std::string id = t.id;
    impl_->tasks.emplace(id, std::move(t));
  }
  impl_->options = std::move(options);
  if (impl_->options.attempt_log)
  {
    impl_->log.open(*impl_->options.attempt_log, std::ios::app);
    if (!impl_->log)
    {
      throw Error(ErrorCode::ConfigInvalid, "cannot open attempt log " + impl_->options.attempt_log->string());
    }
  }
}

SimService::~SimService()
{
  stop();
}

namespace {

ServiceResponse error_response(int status, const std::string& error, const std::string& message)
{
  return {status, {{"error", error}, {"message", message}}, {}};
}

} // namespace

ServiceResponse SimService::list_tasks() const
{
  Json list = Json::array();
  for (const auto& [id, task] : impl_->tasks)
  {
    list.push_back(task_summary(task));
  }
  return {200, {{"tasks", list}}, {}};
}

ServiceResponse SimService::get_task(const std::string& id) const
{
  const auto it = impl_->tasks.find(id);
  if (it == impl_->tasks.end())
  {
    return error_response(404, "unknown_task", "no task '" + id + "'");
  }
  Json body = task_summary(it->second);
  body["constants"] = constants_json();
  return {200, body, {}};
}

ServiceResponse SimService::healthz() const
{
  return {200, {{"status", "ok"}, {"tasks", impl_->tasks.size()}}, {}};
}

int SimService::attempts_in(const std::string& session) const
{
  std::lock_guard lock(impl_->mutex);
  const auto it = impl_->sessions.find(session);
  return it == impl_->sessions.end() ? 0 : it->second;
}

ServiceResponse SimService::attempt(const std::string& id, const std::string& body, const std::string& session,
                                    std::optional<int> stride)
{
  const auto it = impl_->tasks.find(id);
  if (it == impl_->tasks.end())
  {
    return error_response(404, "unknown_task", "no task '" + id + "'");
  }
  const Task& task = it->second;
  const int frame_stride = stride.value_or(impl_->options.default_stride);
  if (frame_stride < 1)
  {
    return error_response(400, "bad_request", "stride must be a positive integer");
  }
  Action action;
  try
  {
    const Json j = Json::parse(body);
    if (!j.is_object() || !j.contains("action"))
    {
      return error_response(400, "bad_request", "body must be an object with an \"action\" array");
    }
    action = action_from_json(j.at("action"), task.tier);
    for (int i = 0; i < action.dims(); ++i)
    {
      if (!std::isfinite(action.coords[i]))
      {
        return error_response(400, "bad_request", "action coordinates must be finite");
      }
    }
  }
  catch (const Json::exception& e)
  {
    return error_response(400, "bad_request", std::string("malformed JSON: ") + e.what());
  }
  catch (const Error& e)
  {
    return error_response(400, e.code() == ErrorCode::TierMismatch ? "tier_mismatch" : "bad_request", e.what());
  }

  std::string token = session;
  {
    std::lock_guard lock(impl_->mutex);
    if (token.empty() || !impl_->sessions.contains(token))
    {
      if (token.empty())
      {
        char buf[17];
        std::snprintf(buf, sizeof buf, "%016llx",
                      static_cast<unsigned long long>(mix_key(0x73657373ULL, ++impl_->session_counter)));
        token = buf;
      }
      impl_->sessions.emplace(token, 0);
    }
  }

  const ActionStatus status = validate_action(task, action);
  auto log_line = [&](const Json& entry) {
    if (impl_->log.is_open())
    {
      std::lock_guard lock(impl_->mutex);
      impl_->log << entry.dump() << '\n';
      impl_->log.flush();
    }
  };
  if (status != ActionStatus::Valid)
  {
    log_line({{"session", token}, {"task", id}, {"action", to_json(action)}, {"valid", false}});
    ServiceResponse r{422,
                      {{"error", "invalid_action"},
                       {"valid", false},
                       {"reason", std::string(to_string(status))},
                       {"attempts", attempts_in(token)}},
                      token};
    return r;
  }

  AttemptOptions options;
  options.frame_stride = frame_stride;
  options.rasterize = false;
  const AttemptResult result = phyre::attempt(task, action, options);
  int count = 0;
  {
    std::lock_guard lock(impl_->mutex);
    count = ++impl_->sessions[token];
  }
  Json frames = Json::array();
  for (const WorldState& w : result.frames)
  {
    frames.push_back(to_json(w));
  }
  log_line({{"session", token}, {"task", id}, {"action", to_json(action)}, {"valid", true}, {"reward", result.reward}});
  return {200,
          {{"valid", true},
           {"reward", result.reward},
           {"solved", result.reward},
           {"attempts", count},
           {"stride", frame_stride},
           {"end_time", result.end_time},
           {"frames", frames}},
          token};
}

int SimService::bind(const std::string& host, int port)
{
  httplib::Server& s = impl_->server;
  s.set_default_headers({{"Access-Control-Allow-Origin", "*"},
                         {"Access-Control-Allow-Headers", "Content-Type, X-Session"},
                         {"Access-Control-Allow-Methods", "GET, POST, OPTIONS"},
                         {"Access-Control-Expose-Headers", "X-Session"}});
  auto send = [](httplib::Response& res, const ServiceResponse& r) {
    res.status = r.status;
    if (!r.session.empty())
    {
      res.set_header("X-Session", r.session);
    }
    res.set_content(r.body.dump(), "application/json");
  };
  s.Options(R"(.*)", [](const httplib::Request&, httplib::Response& res) { res.status = 204; });
  s.Get("/healthz", [this, send](const httplib::Request&, httplib::Response& res) { send(res, healthz()); });
  s.Get("/tasks", [this, send](const httplib::Request&, httplib::Response& res) { send(res, list_tasks()); });
  s.Get(R"(/tasks/([^/]+))", [this, send](const httplib::Request& req, httplib::Response& res) {
    send(res, get_task(req.matches[1]));
  });
  s.Post(R"(/tasks/([^/]+)/attempt)", [this, send](const httplib::Request& req, httplib::Response& res) {
    std::optional<int> stride;
    if (req.has_param("stride"))
    {
      try
      {
        std::size_t used = 0;
        const std::string text = req.get_param_value("stride");
        stride = std::stoi(text, &used);
        if (used != text.size())
        {
          stride = 0;
        }
      }
      catch (const std::exception&)
      {
        stride = 0;
      }
    }
    send(res, attempt(req.matches[1], req.body, req.get_header_value("X-Session"), stride));
  });
  if (port == 0)
  {
    return s.bind_to_any_port(host);
  }
  if (!s.bind_to_port(host, port))
  {
    throw Error(ErrorCode::ConfigInvalid, "cannot bind " + host + ":" + std::to_string(port));
  }
  return port;
}

void SimService::listen()
{
  impl_->server.listen_after_bind();
}

void SimService::stop()
{
  if (impl_ && impl_->server.is_running())
  {
    impl_->server.stop();
  }
}

} // namespace phyre
