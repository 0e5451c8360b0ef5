#pragma once

#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "phyre/scene_json.hpp"
#include "phyre/task.hpp"

namespace phyre {

struct ServiceOptions
{
  int default_stride = 15;
  /// When set, every attempt is appended here as one JSON line.
  std::optional<std::filesystem::path> attempt_log;
};

struct ServiceResponse
{
  int status = 200;
  Json body;
  std::string session; ///< echoed in the X-Session header when non-empty
};

/// HTTP facade over a read-only task catalog. Handlers are callable directly so they can be
/// tested without sockets; serve() wires them to routes.
class SimService
{
public:
  explicit SimService(std::vector<Task> tasks, ServiceOptions options = {});
  ~SimService();
  SimService(const SimService&) = delete;
  SimService& operator=(const SimService&) = delete;

  ServiceResponse list_tasks() const;
  ServiceResponse get_task(const std::string& id) const;
  /// `body` is {"action": [...]}. An empty session starts a new one. `stride` defaults to
  /// the service option.
  ServiceResponse attempt(const std::string& id, const std::string& body, const std::string& session,
                          std::optional<int> stride = std::nullopt);
  ServiceResponse healthz() const;

  int attempts_in(const std::string& session) const;

  /// Binds (port 0 picks a free one) and returns the port.
  int bind(const std::string& host, int port);
  /// Blocks serving requests until stop().
  void listen();
  void stop();

private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

/// Summary of a task as listed by GET /tasks.
Json task_summary(const Task& task);

} // namespace phyre
