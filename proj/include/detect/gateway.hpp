#pragma once

#include <atomic>
#include <chrono>
#include <cmath>
#include <condition_variable>
#include <cstdint>
#include <functional>
#include <memory>
#include <mutex>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "httplib.h"
#include "json.hpp"

#include "detect/dqmm.hpp"
#include "detect/pmm.hpp"
#include "detect/simulation.hpp"
#include "detect/tmm.hpp"

namespace detect {

/// Wall-clock host for a Simulation: a driver thread fires pending events at
/// their real-time deadlines, and HTTP handlers run against the same state
/// under one lock. Times inside the simulation are seconds since start().
class WallSimHost {
 public:
  explicit WallSimHost(Simulation& sim) : sim_(sim) {}

  ~WallSimHost() { stop(); }

  void start() {
    std::lock_guard lock(mutex_);
    if (running_) return;
    running_ = true;
    stop_requested_ = false;
    started_ = std::chrono::steady_clock::now();
    epoch_start_ = std::chrono::duration_cast<std::chrono::seconds>(
                       std::chrono::system_clock::now().time_since_epoch())
                       .count();
    driver_ = std::thread([this] { drive(); });
  }

  void stop() {
    {
      std::lock_guard lock(mutex_);
      if (!running_) return;
      stop_requested_ = true;
    }
    cv_.notify_all();
    if (driver_.joinable()) driver_.join();
    std::lock_guard lock(mutex_);
    running_ = false;
  }

  double elapsed() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() -
                                         started_)
        .count();
  }

  std::int64_t epoch_start() const { return epoch_start_; }

  /// Advances the simulation to `at` and runs fn under the simulation lock.
  template <typename F>
  auto with_sim(double at, F&& fn) {
    std::lock_guard lock(mutex_);
    if (at > sim_.clock().now()) sim_.run_until(at);
    return fn(sim_);
  }

 private:
  void drive() {
    std::unique_lock lock(mutex_);
    while (!stop_requested_) {
      const double next = sim_.clock().next_due();
      if (next == kForever) {
        cv_.wait(lock, [this] { return stop_requested_; });
        continue;
      }
      const auto deadline =
          started_ + std::chrono::duration_cast<std::chrono::steady_clock::duration>(
                         std::chrono::duration<double>(next));
      if (cv_.wait_until(lock, deadline, [this] { return stop_requested_; }))
        return;
      const double now = elapsed();
      if (now > sim_.clock().now()) sim_.run_until(now);
    }
  }

  Simulation& sim_;
  std::mutex mutex_;
  std::condition_variable cv_;
  std::thread driver_;
  bool running_ = false;
  bool stop_requested_ = false;
  std::chrono::steady_clock::time_point started_{};
  std::int64_t epoch_start_ = 0;
};

/// The item shape on the wire. Exactly these three fields; production and
/// insertion schedules stay behind the API.
struct WireItem {
  std::string id;
  std::int64_t produced_at = 0;  // epoch seconds
  double value = 0.0;
};

inline std::vector<WireItem> parse_wire_items(const std::string& body) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(body);
  } catch (const nlohmann::json::parse_error& e) {
    throw InvalidInputError(std::string("bad wire payload: ") + e.what());
  }
  if (!doc.is_array()) throw InvalidInputError("wire payload must be an array");
  std::vector<WireItem> items;
  for (const auto& obj : doc) {
    if (!obj.is_object() || obj.size() != 3 || !obj.contains("id") ||
        !obj.contains("produced_at") || !obj.contains("value"))
      throw InvalidInputError("wire item must have exactly id/produced_at/value");
    if (!obj.at("id").is_string() || !obj.at("produced_at").is_number_integer() ||
        !obj.at("value").is_number())
      throw InvalidInputError("wire item field types are id:string, "
                              "produced_at:integer, value:number");
    items.push_back(WireItem{obj.at("id").get<std::string>(),
                             obj.at("produced_at").get<std::int64_t>(),
                             obj.at("value").get<double>()});
  }
  return items;
}

/// Serves one simulated service over HTTP. GET /items/latest?limit=L returns
/// the latest flushed items, newest first. A denied request is a 503; a
/// failed one accepts the connection and then drops it; latency turns into a
/// real delay before the response is written.
class ServiceEndpoint {
 public:
  ServiceEndpoint(WallSimHost& host, std::string service_id,
                  std::string bind_address = "127.0.0.1", int port = 0)
      : host_(host),
        service_id_(std::move(service_id)),
        bind_address_(std::move(bind_address)),
        requested_port_(port) {
    server_.Get("/items/latest", [this](const httplib::Request& req,
                                        httplib::Response& res) {
      handle(req, res);
    });
  }

  ~ServiceEndpoint() { stop(); }

  void start() {
    if (requested_port_ == 0) {
      port_ = server_.bind_to_any_port(bind_address_);
      if (port_ < 0) throw BindError("cannot bind " + bind_address_);
    } else {
      if (!server_.bind_to_port(bind_address_, requested_port_))
        throw BindError("cannot bind " + bind_address_ + ":" +
                        std::to_string(requested_port_));
      port_ = requested_port_;
    }
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
  }

  void stop() {
    if (thread_.joinable()) {
      server_.stop();
      thread_.join();
    }
  }

  int port() const { return port_; }
  const std::string& service_id() const { return service_id_; }

 private:
  void handle(const httplib::Request& req, httplib::Response& res) {
    std::size_t limit = 10;
    if (req.has_param("limit")) {
      try {
        const long v = std::stol(req.get_param_value("limit"));
        if (v < 1) throw std::invalid_argument("limit");
        limit = static_cast<std::size_t>(v);
      } catch (const std::exception&) {
        res.status = 400;
        res.set_content("{\"error\":\"limit must be a positive integer\"}",
                        "application/json");
        return;
      }
    }
    const double at = host_.elapsed();
    const ServiceResponse outcome = host_.with_sim(
        at, [&](Simulation& sim) { return sim.handle_request(service_id_, at, limit); });
    switch (outcome.outcome) {
      case ServiceResponse::Outcome::Denied:
        res.status = 503;
        res.set_content("{\"error\":\"service unavailable\"}", "application/json");
        return;
      case ServiceResponse::Outcome::Failed:
        // Accept, then drop the connection mid-response.
        res.status = 200;
        res.set_content_provider(
            64, "application/json",
            [](std::size_t, std::size_t, httplib::DataSink&) { return false; });
        return;
      case ServiceResponse::Outcome::Data: {
        std::this_thread::sleep_for(std::chrono::duration<double, std::milli>(
            outcome.latency_ms));
        auto arr = nlohmann::json::array();
        for (const auto& item : outcome.items)
          arr.push_back(
              {{"id", item.item_id},
               {"produced_at",
                host_.epoch_start() + static_cast<std::int64_t>(
                                          std::llround(item.produced_at))},
               {"value", item.payload}});
        res.set_content(arr.dump(), "application/json");
        return;
      }
    }
  }

  WallSimHost& host_;
  std::string service_id_;
  std::string bind_address_;
  int requested_port_;
  int port_ = -1;
  httplib::Server server_;
  std::thread thread_;
};

struct WireSample {
  ProbeRecord record;
  std::vector<DataItem> items;  // produced_at converted back to elapsed seconds
};

/// One probe or sample over the wire. Classification mirrors the in-process
/// rules: 503 means denied, a transport error after connect means accepted
/// but failed (covers both drops and consumer-side timeouts), 200 means
/// success with the measured round-trip as the response time.
inline WireSample query_endpoint(const std::string& host, int port,
                                 const std::string& service_id, double probed_at,
                                 std::size_t limit, double deadline_ms,
                                 std::int64_t epoch_base) {
  WireSample out;
  out.record.service_id = service_id;
  out.record.probed_at = probed_at;
  httplib::Client client(host, port);
  const auto deadline = std::chrono::milliseconds(
      std::max<std::int64_t>(1, static_cast<std::int64_t>(deadline_ms)));
  client.set_connection_timeout(deadline);
  client.set_read_timeout(deadline);
  client.set_write_timeout(deadline);
  const auto sent = std::chrono::steady_clock::now();
  auto res = client.Get("/items/latest?limit=" + std::to_string(limit));
  const double latency_ms =
      std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() -
                                                sent)
          .count();
  if (res && res->status == 503) return out;  // denied
  if (!res) {
    const auto err = res.error();
    if (err == httplib::Error::Connection ||
        err == httplib::Error::ConnectionTimeout)
      return out;  // could not even connect: denied
    out.record.accepted = true;  // accepted then dropped or timed out
    return out;
  }
  if (res->status != 200) {
    out.record.accepted = true;
    return out;
  }
  out.record.accepted = true;
  if (latency_ms > deadline_ms) return out;  // too late for the consumer
  out.record.success = true;
  out.record.response_time_ms = latency_ms;
  for (const auto& item : parse_wire_items(res->body))
    out.items.push_back(DataItem{
        item.id, static_cast<double>(item.produced_at - epoch_base), item.value});
  return out;
}

/// Serves GET /trust/ranking?alpha=A&beta=B. Invalid weights are a 400; 503
/// until at least one service has both factor levels.
class TrustApiEndpoint {
 public:
  TrustApiEndpoint(TrustEngine& engine, std::vector<std::string> service_ids,
                   std::function<double()> now_fn,
                   std::string bind_address = "127.0.0.1", int port = 0)
      : engine_(engine),
        service_ids_(std::move(service_ids)),
        now_fn_(std::move(now_fn)),
        bind_address_(std::move(bind_address)),
        requested_port_(port) {
    server_.Get("/trust/ranking", [this](const httplib::Request& req,
                                         httplib::Response& res) {
      handle(req, res);
    });
  }

  ~TrustApiEndpoint() { stop(); }

  void start() {
    if (requested_port_ == 0) {
      port_ = server_.bind_to_any_port(bind_address_);
      if (port_ < 0) throw BindError("cannot bind " + bind_address_);
    } else {
      if (!server_.bind_to_port(bind_address_, requested_port_))
        throw BindError("cannot bind " + bind_address_ + ":" +
                        std::to_string(requested_port_));
      port_ = requested_port_;
    }
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
  }

  void stop() {
    if (thread_.joinable()) {
      server_.stop();
      thread_.join();
    }
  }

  int port() const { return port_; }

 private:
  void handle(const httplib::Request& req, httplib::Response& res) {
    if (!req.has_param("alpha") || !req.has_param("beta")) {
      res.status = 400;
      res.set_content("{\"error\":\"alpha and beta are required\"}",
                      "application/json");
      return;
    }
    double alpha = 0.0;
    double beta = 0.0;
    try {
      alpha = detail::parse_double(req.get_param_value("alpha"));
      beta = detail::parse_double(req.get_param_value("beta"));
      const TrustWeights weights(alpha, beta);
      const Ranking ranking =
          engine_.rank_services(service_ids_, weights, now_fn_());
      res.set_content(trust_report_json(ranking).dump(2) + "\n",
                      "application/json");
    } catch (const InvalidInputError& e) {
      res.status = 400;
      res.set_content(nlohmann::json{{"error", e.what()}}.dump(),
                      "application/json");
    } catch (const EmptyRankingError& e) {
      res.status = 503;
      res.set_content(nlohmann::json{{"error", e.what()}}.dump(),
                      "application/json");
    }
  }

  TrustEngine& engine_;
  std::vector<std::string> service_ids_;
  std::function<double()> now_fn_;
  std::string bind_address_;
  int requested_port_;
  int port_ = -1;
  httplib::Server server_;
  std::thread thread_;
};

}  // namespace detect
