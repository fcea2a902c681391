#pragma once

#include <atomic>
#include <condition_variable>
#include <cstddef>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "carm/dataset.hpp"
#include "carm/evolution.hpp"

namespace carm {

enum class RunState { pending, running, stopped, finished, failed };

std::string_view to_string(RunState state);
bool is_terminal(RunState state);

/// One run owned by the registry. Fields behind `mu`; the worker is the only writer.
struct RunRecord {
  std::string id;
  RunConfig config;
  std::shared_ptr<const Dataset> dataset;

  mutable std::mutex mu;
  std::condition_variable_any changed;
  RunState state = RunState::pending;
  std::size_t completed = 0;
  /// Serialized generation events, in generation order.
  std::vector<std::string> events;
  std::string terminal_event;
  /// Latest front members: rule_id, genes, class, metrics, rule.
  nlohmann::json front = nlohmann::json::array();
  /// Set once terminal: full result, final front and every accepted rule.
  nlohmann::json result;
  nlohmann::json rules = nlohmann::json::array();
  std::string error;

  std::jthread worker;

  nlohmann::json handle() const;
};

class CapacityError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Runs launched by the service. Finished and stopped runs are written to
/// `<out>/runs/<id>.json` and read back by the next registry on the same directory.
class RunRegistry {
 public:
  RunRegistry(std::filesystem::path out_dir, std::size_t max_concurrent = 2);
  ~RunRegistry();
  RunRegistry(const RunRegistry&) = delete;
  RunRegistry& operator=(const RunRegistry&) = delete;

  /// Overlays `body` on the preset defaults of its dataset (iris when absent).
  /// Throws ConfigError with field errors, CapacityError past the concurrency limit.
  struct Submission {
    std::shared_ptr<RunRecord> record;
    /// Handle captured before the worker starts, so its state is pending.
    nlohmann::json handle;
  };
  Submission submit(const nlohmann::json& body);
  std::shared_ptr<RunRecord> find(const std::string& id) const;
  std::vector<std::shared_ptr<RunRecord>> list() const;

  enum class StopOutcome { unknown, requested, already_terminal };
  StopOutcome stop(const std::string& id);

  /// Blocks until the run is terminal.
  void wait(const std::string& id) const;

  std::size_t max_concurrent() const { return max_concurrent_; }
  const std::filesystem::path& out_dir() const { return out_dir_; }
  bool shutting_down() const { return shutting_down_; }

 private:
  void execute(std::shared_ptr<RunRecord> record, std::stop_token stop);
  void persist(const RunRecord& record) const;
  void reload();

  std::filesystem::path out_dir_;
  std::size_t max_concurrent_;
  mutable std::mutex mu_;
  std::map<std::string, std::shared_ptr<RunRecord>> runs_;
  std::size_t next_id_ = 1;
  std::map<std::string, std::shared_ptr<const Dataset>> datasets_;
  std::atomic<bool> shutting_down_{false};
};

struct ServiceOptions {
  std::filesystem::path out_dir = "carm-out";
  /// Served at "/" when it exists.
  std::filesystem::path ui_dir;
  std::size_t max_concurrent = 2;
};

/// HTTP front end over a RunRegistry.
class Service {
 public:
  explicit Service(ServiceOptions options);
  ~Service();

  /// Binds without serving. Port 0 picks a free port; returns the bound port or -1.
  int bind(const std::string& host, int port);
  /// Serves until stop(). Call after bind().
  bool serve();
  /// bind() then serve().
  bool listen(const std::string& host, int port);
  void stop();
  void wait_until_ready() const;

  RunRegistry& registry() { return *registry_; }

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
  std::unique_ptr<RunRegistry> registry_;
};

}  // namespace carm
