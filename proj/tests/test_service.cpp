#include <doctest.h>

#include <atomic>
#include <chrono>
#include <filesystem>
#include <thread>

#include <httplib.h>

#include "carm/service.hpp"

using namespace carm;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

struct Server {
  explicit Server(const std::string& name, std::size_t max_concurrent = 2, bool fresh = true)
      : out(fs::temp_directory_path() / "carm-service-tests" / name) {
    if (fresh) fs::remove_all(out);
    service = std::make_unique<Service>(ServiceOptions{out, {}, max_concurrent});
    port = service->bind("127.0.0.1", 0);
    REQUIRE(port > 0);
    thread = std::jthread([this] { service->serve(); });
    service->wait_until_ready();
  }
  ~Server() {
    service->stop();
    thread.join();
  }

  httplib::Client client() const {
    httplib::Client c("127.0.0.1", port);
    c.set_read_timeout(60, 0);
    return c;
  }

  json post(const std::string& path, const json& body, int* status = nullptr) const {
    auto res = client().Post(path, body.dump(), "application/json");
    REQUIRE(res);
    if (status) *status = res->status;
    return json::parse(res->body);
  }

  json get(const std::string& path, int* status = nullptr) const {
    auto res = client().Get(path);
    REQUIRE(res);
    if (status) *status = res->status;
    return json::parse(res->body);
  }

  /// Raw SSE body; returns when the server closes the stream.
  std::string events(const std::string& id) const {
    std::string body;
    auto res = client().Get("/api/runs/" + id + "/events", [&](const char* data, std::size_t n) {
      body.append(data, n);
      return true;
    });
    REQUIRE(res);
    return body;
  }

  fs::path out;
  std::unique_ptr<Service> service;
  int port = -1;
  std::jthread thread;
};

std::size_t count(const std::string& haystack, const std::string& needle) {
  std::size_t n = 0;
  for (auto pos = haystack.find(needle); pos != std::string::npos; pos = haystack.find(needle, pos + 1)) ++n;
  return n;
}

const json small_run = {{"dataset", "iris"}, {"generations", 10}, {"population_size", 40}, {"rng_seed", 7}};

}  // namespace

TEST_CASE("a launched run finishes and late subscribers get only the terminal event") {
  Server s("finish");
  int status = 0;
  const auto handle = s.post("/api/runs", small_run, &status);
  CHECK(status == 201);
  CHECK(handle["state"] == "pending");
  CHECK(handle["progress"]["total"] == 10);
  const std::string id = handle["run_id"];
  s.service->registry().wait(id);

  const auto late = s.events(id);
  CHECK(count(late, "event: generation") == 0);
  CHECK(count(late, "event: finished\n") == 1);

  const auto done = s.get("/api/runs/" + id);
  CHECK(done["state"] == "finished");
  CHECK(done["progress"]["completed"] == 10);
  CHECK(done["result"]["generations_completed"] == 10);

  const auto front = s.get("/api/runs/" + id + "/front");
  REQUIRE(front.is_array());
  CHECK(front.size() == done["result"]["front_size"]);
  CHECK(front[0].contains("rule_id"));
  CHECK(front[0]["metrics"].contains("coverage"));
  CHECK(s.get("/api/runs/" + id + "/rules") == front);
  const auto all = s.get("/api/runs/" + id + "/rules?all=true");
  CHECK(all.size() == done["result"]["rks_count"]);

  CHECK(s.post("/api/runs/" + id + "/stop", json::object(), &status).contains("error"));
  CHECK(status == 409);
  CHECK(s.get("/api/runs", &status).size() == 1);
}

TEST_CASE("a live subscriber sees every generation in order") {
  Server s("stream");
  int status = 0;
  const auto handle = s.post("/api/runs", {{"dataset", "wbc"}, {"generations", 100000}}, &status);
  REQUIRE(status == 201);
  const std::string id = handle["run_id"];

  // Stop only once the subscriber is attached, so it cannot join late.
  std::atomic<bool> attached{false};
  std::string body;
  std::jthread reader([&] {
    auto res = s.client().Get("/api/runs/" + id + "/events", [&](const char* data, std::size_t n) {
      body.append(data, n);
      attached = true;
      return true;
    });
    CHECK(res);
  });
  while (!attached) std::this_thread::sleep_for(std::chrono::milliseconds(1));
  s.post("/api/runs/" + id + "/stop", json::object(), &status);
  CHECK(status == 200);
  reader.join();

  const auto done = s.get("/api/runs/" + id);
  const std::size_t completed = done["progress"]["completed"];
  CHECK(completed >= 1);
  CHECK(count(body, "event: generation\n") == completed);
  CHECK(count(body, "event: stopped\n") == 1);
  CHECK(count(body, "event: finished\n") == 0);
  std::size_t expected = 0, pos = 0;
  while ((pos = body.find("event: generation\ndata: ", pos)) != std::string::npos) {
    pos += 24;
    const auto doc = json::parse(body.substr(pos, body.find('\n', pos) - pos));
    CHECK(doc["generation"] == expected++);
    CHECK(doc.contains("front"));
    CHECK(doc["top_rules"].size() <= 5);
  }
  CHECK(expected == completed);
}

TEST_CASE("service and library produce the same result") {
  Server s("parity");
  const auto handle = s.post("/api/runs", small_run);
  s.service->registry().wait(handle["run_id"]);
  const auto served = s.get("/api/runs/" + handle["run_id"].get<std::string>())["result"];
  const auto config = run_config_from_json(small_run, preset_config("iris"));
  const auto direct = to_json(run(config, load_preset("iris")));
  CHECK(served == direct);
}

TEST_CASE("invalid submissions are rejected with field errors") {
  Server s("invalid");
  int status = 0;
  auto body = s.post("/api/runs", {{"population_size", 1}}, &status);
  CHECK(status == 400);
  REQUIRE(body["errors"].size() >= 1);
  CHECK(body["errors"][0]["field"] == "population_size");
  body = s.post("/api/runs", {{"dataset", "mushroom"}}, &status);
  CHECK(status == 400);
  CHECK(body["errors"][0]["field"] == "dataset");
  s.post("/api/runs", {{"objectives", json::array()}}, &status);
  CHECK(status == 400);
  auto raw = s.client().Post("/api/runs", "{oops", "application/json");
  REQUIRE(raw);
  CHECK(raw->status == 400);
  s.get("/api/runs/run-999999", &status);
  CHECK(status == 404);
  s.get("/api/runs/run-999999/events", &status);
  CHECK(status == 404);
  s.post("/api/runs/run-999999/stop", json::object(), &status);
  CHECK(status == 404);
}

TEST_CASE("the concurrency limit rejects extra runs and stop ends a run early") {
  Server s("limit", 1);
  int status = 0;
  const auto long_run = s.post("/api/runs", {{"dataset", "wbc"}, {"generations", 100000}}, &status);
  REQUIRE(status == 201);
  const std::string id = long_run["run_id"];
  const auto rejected = s.post("/api/runs", small_run, &status);
  CHECK(status == 409);
  CHECK(rejected.contains("error"));

  // Full listing is only available once the run ends.
  s.get("/api/runs/" + id + "/rules?all=true", &status);
  CHECK(status == 409);

  const auto stopping = s.post("/api/runs/" + id + "/stop", json::object(), &status);
  CHECK(status == 200);
  CHECK(stopping["stop_requested"] == true);
  s.service->registry().wait(id);
  const auto stopped = s.get("/api/runs/" + id);
  CHECK(stopped["state"] == "stopped");
  CHECK(stopped["result"]["stopped"] == true);
  CHECK(stopped["progress"]["completed"] < 100000);
  s.get("/api/runs/" + id + "/rules", &status);
  CHECK(status == 200);
  s.get("/api/runs/" + id + "/rules?all=true", &status);
  CHECK(status == 200);
  s.post("/api/runs/" + id + "/stop", json::object(), &status);
  CHECK(status == 409);
  CHECK(count(s.events(id), "event: stopped\n") == 1);

  // Capacity is free again.
  s.post("/api/runs", small_run, &status);
  CHECK(status == 201);
}

TEST_CASE("presets and datasets") {
  Server s("presets");
  int status = 0;
  const auto presets = s.get("/api/presets", &status);
  CHECK(status == 200);
  REQUIRE(presets.size() == 3);
  std::map<std::string, int> population;
  for (const auto& p : presets) population[p["name"]] = p["config"]["population_size"];
  CHECK(population == std::map<std::string, int>{{"iris", 200}, {"ljb", 300}, {"wbc", 500}});
  const auto datasets = s.get("/api/datasets", &status);
  CHECK(status == 200);
  CHECK(datasets.size() == 3);
  CHECK(datasets[0]["attributes"][0]["values"].size() >= 1);
}

TEST_CASE("finished runs survive a restart") {
  std::string id;
  json before;
  {
    Server s("persist");
    id = s.post("/api/runs", small_run)["run_id"];
    s.service->registry().wait(id);
    before = s.get("/api/runs/" + id);
  }
  Server again("persist", 2, false);
  int status = 0;
  const auto after = again.get("/api/runs/" + id, &status);
  CHECK(status == 200);
  CHECK(after["state"] == "finished");
  CHECK(after["result"] == before["result"]);
  CHECK(again.get("/api/runs/" + id + "/front") == before["latest_front"]);
  CHECK(count(again.events(id), "event: finished\n") == 1);
  // New ids do not collide with reloaded ones.
  const auto next = again.post("/api/runs", small_run);
  CHECK(next["run_id"] != id);
}
