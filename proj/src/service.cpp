#include "carm/service.hpp"

#include <chrono>
#include <cstdio>
#include <fstream>

#include <httplib.h>

#include "carm/cli.hpp"

namespace carm {

using nlohmann::json;

std::string_view to_string(RunState state) {
  switch (state) {
    case RunState::pending:
      return "pending";
    case RunState::running:
      return "running";
    case RunState::stopped:
      return "stopped";
    case RunState::finished:
      return "finished";
    case RunState::failed:
      return "failed";
  }
  return "pending";
}

bool is_terminal(RunState state) {
  return state == RunState::stopped || state == RunState::finished || state == RunState::failed;
}

namespace {

RunState state_from_string(const std::string& text) {
  for (auto s : {RunState::pending, RunState::running, RunState::stopped, RunState::finished, RunState::failed}) {
    if (to_string(s) == text) return s;
  }
  throw std::invalid_argument("unknown run state '" + text + "'");
}

json member_json(const FrontMember& m, const RunConfig& config, const Dataset& dataset) {
  json metrics = json::object();
  for (std::size_t i = 0; i < config.objectives.size() && i < m.metrics.size(); ++i) {
    metrics[to_string(config.objectives[i])] = natural_value(config.objectives[i], m.metrics[i]);
  }
  return {{"rule_id", m.id.value},
          {"genes", m.rule.genes},
          {"class", m.rule.class_code},
          {"metrics", std::move(metrics)},
          {"rule", render_rule(m.rule, dataset)}};
}

json members_json(const std::vector<FrontMember>& members, const RunConfig& config, const Dataset& dataset) {
  json out = json::array();
  for (const auto& m : members) out.push_back(member_json(m, config, dataset));
  return out;
}

json summary_json(const RunResult& r) {
  return {{"generations_completed", r.generations_completed},
          {"stopped", r.stopped},
          {"rks_count", r.rks_count},
          {"hks_count", r.hks_count},
          {"front_size", r.front_size},
          {"accuracy", r.accuracy},
          {"train_accuracy", r.train_accuracy},
          {"wall_time_ms", r.wall_time_ms}};
}

std::string sse(const std::string& event, const json& data) {
  return "event: " + event + "\ndata: " + data.dump() + "\n\n";
}

constexpr std::size_t top_rule_count = 5;

}  // namespace

json RunRecord::handle() const {
  std::lock_guard lock(mu);
  json h = {{"run_id", id},
            {"state", std::string(to_string(state))},
            {"progress", {{"completed", completed}, {"total", config.generations}}},
            {"dataset", config.dataset},
            {"config", to_json(config)},
            {"latest_front", front}};
  if (!error.empty()) h["error"] = error;
  return h;
}

RunRegistry::RunRegistry(std::filesystem::path out_dir, std::size_t max_concurrent)
    : out_dir_(std::move(out_dir)), max_concurrent_(max_concurrent) {
  reload();
}

RunRegistry::~RunRegistry() {
  shutting_down_ = true;
  std::vector<std::shared_ptr<RunRecord>> records;
  {
    std::lock_guard lock(mu_);
    for (auto& [id, r] : runs_) records.push_back(r);
  }
  for (auto& r : records) {
    r->worker.request_stop();
    r->changed.notify_all();
  }
  for (auto& r : records) {
    if (r->worker.joinable()) r->worker.join();
  }
}

void RunRegistry::reload() {
  const auto dir = out_dir_ / "runs";
  std::error_code ec;
  if (!std::filesystem::is_directory(dir, ec)) return;
  std::vector<std::filesystem::path> files;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    if (entry.path().extension() == ".json") files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  for (const auto& path : files) {
    try {
      std::ifstream in(path);
      const auto doc = json::parse(in);
      auto record = std::make_shared<RunRecord>();
      record->id = doc.at("run_id").get<std::string>();
      record->config = run_config_from_json(doc.at("config"));
      record->state = state_from_string(doc.at("state").get<std::string>());
      record->completed = doc.value("completed", std::size_t{0});
      record->front = doc.value("front", json::array());
      record->result = doc.value("result", json());
      record->rules = doc.value("rules", json::array());
      record->error = doc.value("error", std::string());
      record->terminal_event = doc.value("terminal_event", std::string());
      std::size_t n = 0;
      if (std::sscanf(record->id.c_str(), "run-%zu", &n) == 1) next_id_ = std::max(next_id_, n + 1);
      runs_[record->id] = std::move(record);
    } catch (const std::exception&) {
      // A damaged file is skipped; the rest of the registry still loads.
    }
  }
}

void RunRegistry::persist(const RunRecord& r) const {
  const auto dir = out_dir_ / "runs";
  std::filesystem::create_directories(dir);
  json doc = {{"run_id", r.id},
              {"state", std::string(to_string(r.state))},
              {"config", to_json(r.config)},
              {"completed", r.completed},
              {"front", r.front},
              {"result", r.result},
              {"rules", r.rules},
              {"terminal_event", r.terminal_event}};
  if (!r.error.empty()) doc["error"] = r.error;
  const auto tmp = dir / (r.id + ".json.tmp");
  {
    std::ofstream out(tmp, std::ios::binary);
    out << doc.dump() << "\n";
  }
  std::filesystem::rename(tmp, dir / (r.id + ".json"));
}

RunRegistry::Submission RunRegistry::submit(const json& body) {
  if (!body.is_object()) throw ConfigError(std::vector<FieldError>{{"body", "expected a JSON object"}});
  std::string name = "iris";
  if (auto it = body.find("dataset"); it != body.end() && it->is_string()) name = it->get<std::string>();
  RunConfig base;
  if (is_preset(name)) {
    base = preset_config(name);
  } else {
    base.dataset = name;
  }
  auto config = run_config_from_json(body, base);

  std::shared_ptr<const Dataset> dataset;
  {
    std::lock_guard lock(mu_);
    if (auto it = datasets_.find(config.dataset + "|" + config.schema_preset); it != datasets_.end()) {
      dataset = it->second;
    }
  }
  if (!dataset) {
    if (!is_preset(config.dataset) && !std::filesystem::exists(config.dataset)) {
      throw ConfigError(std::vector<FieldError>{{"dataset", "unknown preset or missing file: '" + config.dataset + "'"}});
    }
    try {
      dataset = std::make_shared<const Dataset>(load_dataset(config));
    } catch (const DataError& e) {
      throw ConfigError(std::vector<FieldError>{{"dataset", e.what()}});
    }
    std::lock_guard lock(mu_);
    datasets_.emplace(config.dataset + "|" + config.schema_preset, dataset);
  }
  if (auto errors = validate(config, *dataset); !errors.empty()) throw ConfigError(std::move(errors));

  auto record = std::make_shared<RunRecord>();
  record->config = config;
  record->dataset = dataset;
  {
    std::lock_guard lock(mu_);
    std::size_t active = 0;
    for (const auto& [id, r] : runs_) {
      std::lock_guard rl(r->mu);
      active += !is_terminal(r->state);
    }
    if (active >= max_concurrent_) {
      throw CapacityError("concurrent run limit of " + std::to_string(max_concurrent_) + " reached");
    }
    char id[32];
    std::snprintf(id, sizeof id, "run-%06zu", next_id_++);
    record->id = id;
    runs_[record->id] = record;
  }
  Submission out{record, record->handle()};
  {
    std::lock_guard lock(record->mu);
    record->worker = std::jthread([this, record](std::stop_token stop) { execute(record, stop); });
  }
  return out;
}

void RunRegistry::execute(std::shared_ptr<RunRecord> record, std::stop_token stop) {
  const auto& config = record->config;
  const auto& dataset = *record->dataset;
  try {
    Engine engine(config, dataset);
    {
      std::lock_guard lock(record->mu);
      record->state = RunState::running;
    }
    record->changed.notify_all();
    bool stopped = false;
    double elapsed = 0;
    while (!engine.done()) {
      if (stop.stop_requested()) {
        stopped = true;
        break;
      }
      const auto& gen = engine.step();
      elapsed += gen.wall_time_ms;
      const auto& beliefs = engine.beliefs();
      std::vector<FrontMember> front;
      for (const auto id : beliefs.latest_front()) {
        front.push_back({id, beliefs.rules().at(id), beliefs.domain().at(id).vector});
      }
      json front_json = members_json(front, config, dataset);
      json vectors = json::array();
      json top = json::array();
      for (const auto& m : front_json) {
        vectors.push_back({{"rule_id", m["rule_id"]}, {"metrics", m["metrics"]}});
        if (top.size() < top_rule_count) top.push_back(m["rule"]);
      }
      json event = {{"generation", gen.index},
                    {"total", config.generations},
                    {"front_size", front.size()},
                    {"rks_size", gen.rks_size},
                    {"front", std::move(vectors)},
                    {"top_rules", std::move(top)},
                    {"elapsed_ms", elapsed}};
      {
        std::lock_guard lock(record->mu);
        record->events.push_back(sse("generation", event));
        record->completed = engine.completed();
        record->front = std::move(front_json);
      }
      record->changed.notify_all();
    }

    const auto result = engine.finish(stopped);
    json final_front = members_json(result.final_front, config, dataset);
    json rules = members_json(engine.all_rules(), config, dataset);
    json doc = to_json(result);
    json terminal = {{"state", stopped ? "stopped" : "finished"}, {"summary", summary_json(result)}};
    {
      std::lock_guard lock(record->mu);
      record->front = std::move(final_front);
      record->rules = std::move(rules);
      record->result = std::move(doc);
      record->completed = result.generations_completed;
      record->terminal_event = sse(stopped ? "stopped" : "finished", terminal);
      record->state = stopped ? RunState::stopped : RunState::finished;
      try {
        persist(*record);
      } catch (const std::exception& e) {
        record->error = std::string("could not persist run: ") + e.what();
      }
    }
  } catch (const std::exception& e) {
    std::lock_guard lock(record->mu);
    record->error = e.what();
    record->terminal_event = sse("failed", {{"state", "failed"}, {"error", record->error}});
    record->state = RunState::failed;
    try {
      persist(*record);
    } catch (const std::exception&) {
    }
  }
  record->changed.notify_all();
}

std::shared_ptr<RunRecord> RunRegistry::find(const std::string& id) const {
  std::lock_guard lock(mu_);
  auto it = runs_.find(id);
  return it == runs_.end() ? nullptr : it->second;
}

std::vector<std::shared_ptr<RunRecord>> RunRegistry::list() const {
  std::lock_guard lock(mu_);
  std::vector<std::shared_ptr<RunRecord>> out;
  for (const auto& [id, r] : runs_) out.push_back(r);
  return out;
}

RunRegistry::StopOutcome RunRegistry::stop(const std::string& id) {
  auto record = find(id);
  if (!record) return StopOutcome::unknown;
  {
    std::lock_guard lock(record->mu);
    if (is_terminal(record->state)) return StopOutcome::already_terminal;
  }
  record->worker.request_stop();
  return StopOutcome::requested;
}

void RunRegistry::wait(const std::string& id) const {
  auto record = find(id);
  if (!record) return;
  std::unique_lock lock(record->mu);
  record->changed.wait(lock, [&] { return is_terminal(record->state); });
}

struct Service::Impl {
  ServiceOptions options;
  httplib::Server server;
  std::map<std::string, json> dataset_docs;
  std::mutex mu;
};

namespace {

void send_json(httplib::Response& res, int status, const json& body) {
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

json field_errors(const ConfigError& e) {
  json errors = json::array();
  for (const auto& fe : e.errors()) errors.push_back({{"field", fe.field}, {"message", fe.message}});
  return {{"error", "invalid configuration"}, {"errors", std::move(errors)}};
}

}  // namespace

Service::Service(ServiceOptions options)
    : impl_(std::make_unique<Impl>()),
      registry_(std::make_unique<RunRegistry>(options.out_dir, options.max_concurrent)) {
  impl_->options = std::move(options);
  auto& svr = impl_->server;
  auto* registry = registry_.get();
  auto* impl = impl_.get();

  svr.Post("/api/runs", [registry](const httplib::Request& req, httplib::Response& res) {
    json body = json::parse(req.body.empty() ? "{}" : req.body, nullptr, false);
    if (body.is_discarded()) {
      send_json(res, 400, {{"error", "malformed JSON body"}, {"errors", json::array()}});
      return;
    }
    try {
      send_json(res, 201, registry->submit(body).handle);
    } catch (const ConfigError& e) {
      send_json(res, 400, field_errors(e));
    } catch (const CapacityError& e) {
      send_json(res, 409, {{"error", e.what()}});
    }
  });

  svr.Get("/api/runs", [registry](const httplib::Request&, httplib::Response& res) {
    json out = json::array();
    for (const auto& r : registry->list()) {
      auto h = r->handle();
      h.erase("latest_front");
      out.push_back(std::move(h));
    }
    send_json(res, 200, out);
  });

  svr.Get(R"(/api/runs/([^/]+))", [registry](const httplib::Request& req, httplib::Response& res) {
    const auto record = registry->find(req.matches[1]);
    if (!record) return send_json(res, 404, {{"error", "unknown run"}});
    auto h = record->handle();
    std::lock_guard lock(record->mu);
    if (is_terminal(record->state)) h["result"] = record->result;
    send_json(res, 200, h);
  });

  svr.Post(R"(/api/runs/([^/]+)/stop)", [registry](const httplib::Request& req, httplib::Response& res) {
    const std::string id = req.matches[1];
    switch (registry->stop(id)) {
      case RunRegistry::StopOutcome::unknown:
        return send_json(res, 404, {{"error", "unknown run"}});
      case RunRegistry::StopOutcome::already_terminal:
        return send_json(res, 409, {{"error", "run already terminal"}});
      case RunRegistry::StopOutcome::requested: {
        auto h = registry->find(id)->handle();
        h["stop_requested"] = true;
        return send_json(res, 200, h);
      }
    }
  });

  svr.Get(R"(/api/runs/([^/]+)/front)", [registry](const httplib::Request& req, httplib::Response& res) {
    const auto record = registry->find(req.matches[1]);
    if (!record) return send_json(res, 404, {{"error", "unknown run"}});
    std::lock_guard lock(record->mu);
    send_json(res, 200, record->front);
  });

  svr.Get(R"(/api/runs/([^/]+)/rules)", [registry](const httplib::Request& req, httplib::Response& res) {
    const auto record = registry->find(req.matches[1]);
    if (!record) return send_json(res, 404, {{"error", "unknown run"}});
    const bool all = req.has_param("all") && req.get_param_value("all") == "true";
    std::lock_guard lock(record->mu);
    if (!all) return send_json(res, 200, record->front);
    if (!is_terminal(record->state)) {
      return send_json(res, 409, {{"error", "the full rule listing is available once the run ends"}});
    }
    send_json(res, 200, record->rules);
  });

  svr.Get(R"(/api/runs/([^/]+)/events)", [registry](const httplib::Request& req, httplib::Response& res) {
    const auto record = registry->find(req.matches[1]);
    if (!record) return send_json(res, 404, {{"error", "unknown run"}});
    bool late = false;
    {
      std::lock_guard lock(record->mu);
      late = is_terminal(record->state);
    }
    auto next = std::make_shared<std::size_t>(0);
    res.set_header("Cache-Control", "no-cache");
    res.set_chunked_content_provider(
        "text/event-stream", [record, registry, late, next](std::size_t, httplib::DataSink& sink) {
          std::vector<std::string> pending;
          std::string terminal;
          {
            std::unique_lock lock(record->mu);
            if (!late) {
              record->changed.wait_for(lock, std::chrono::milliseconds(200), [&] {
                return record->events.size() > *next || is_terminal(record->state) ||
                       registry->shutting_down();
              });
              pending.assign(record->events.begin() + static_cast<std::ptrdiff_t>(*next), record->events.end());
              *next = record->events.size();
            }
            if (is_terminal(record->state) && *next == record->events.size()) terminal = record->terminal_event;
            if (late) terminal = record->terminal_event;
          }
          for (const auto& e : pending) {
            if (!sink.write(e.data(), e.size())) return false;
          }
          if (!terminal.empty()) {
            sink.write(terminal.data(), terminal.size());
            sink.done();
            return true;
          }
          if (registry->shutting_down()) return false;
          return sink.is_writable();
        });
  });

  svr.Get("/api/datasets", [impl](const httplib::Request&, httplib::Response& res) {
    std::lock_guard lock(impl->mu);
    json out = json::array();
    for (const auto& name : preset_names()) {
      auto it = impl->dataset_docs.find(name);
      if (it == impl->dataset_docs.end()) {
        it = impl->dataset_docs.emplace(name, describe_dataset(load_preset(name))).first;
      }
      out.push_back(it->second);
    }
    send_json(res, 200, out);
  });

  svr.Get("/api/presets", [](const httplib::Request&, httplib::Response& res) {
    json out = json::array();
    for (const auto& name : preset_names()) {
      out.push_back({{"name", name}, {"config", to_json(preset_config(name))}});
    }
    send_json(res, 200, out);
  });

  svr.set_exception_handler([](const httplib::Request&, httplib::Response& res, std::exception_ptr ep) {
    std::string what = "internal error";
    try {
      std::rethrow_exception(ep);
    } catch (const std::exception& e) {
      what = e.what();
    } catch (...) {
    }
    send_json(res, 500, {{"error", what}});
  });

  std::error_code ec;
  if (!impl_->options.ui_dir.empty() && std::filesystem::is_directory(impl_->options.ui_dir, ec)) {
    svr.set_mount_point("/", impl_->options.ui_dir.string());
  }
}

Service::~Service() {
  stop();
  registry_.reset();
}

int Service::bind(const std::string& host, int port) {
  if (port == 0) return impl_->server.bind_to_any_port(host);
  return impl_->server.bind_to_port(host, port) ? port : -1;
}

bool Service::serve() { return impl_->server.listen_after_bind(); }

bool Service::listen(const std::string& host, int port) {
  if (bind(host, port) < 0) return false;
  return serve();
}

void Service::stop() { impl_->server.stop(); }

void Service::wait_until_ready() const { impl_->server.wait_until_ready(); }

}  // namespace carm
