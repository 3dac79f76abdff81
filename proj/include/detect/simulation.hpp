#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <memory>
#include <ostream>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "detect/errors.hpp"
#include "detect/format.hpp"
#include "detect/virtual_clock.hpp"

namespace detect {

/// Behavioural profile of one simulated black-box data service.
struct ServiceProfile {
  std::string service_id;
  double production_period = 5.0;   // seconds between produced items
  double insertion_period = 20.0;   // seconds between store flushes
  double accept_probability = 1.0;
  double success_probability_given_accept = 1.0;
  double base_latency_ms = 50.0;
  double latency_jitter_ms = 0.0;
  int cpu_tier = 1;  // higher tier = more resources = lower latency
  std::uint64_t rng_seed = 0;
};

inline void validate(const ServiceProfile& p) {
  if (p.service_id.empty()) throw InvalidInputError("service_id must not be empty");
  if (!(p.production_period > 0.0))
    throw InvalidInputError(p.service_id + ": production_period must be > 0");
  if (!(p.insertion_period > 0.0))
    throw InvalidInputError(p.service_id + ": insertion_period must be > 0");
  if (!(p.accept_probability >= 0.0 && p.accept_probability <= 1.0))
    throw InvalidInputError(p.service_id + ": accept_probability must be in [0,1]");
  if (!(p.success_probability_given_accept >= 0.0 &&
        p.success_probability_given_accept <= 1.0))
    throw InvalidInputError(p.service_id +
                            ": success_probability_given_accept must be in [0,1]");
  if (!(p.base_latency_ms >= 0.0))
    throw InvalidInputError(p.service_id + ": base_latency_ms must be >= 0");
  if (!(p.latency_jitter_ms >= 0.0))
    throw InvalidInputError(p.service_id + ": latency_jitter_ms must be >= 0");
  if (p.cpu_tier < 1) throw InvalidInputError(p.service_id + ": cpu_tier must be >= 1");
}

struct DataItem {
  std::string item_id;  // unique within a service
  double produced_at = 0.0;
  double payload = 0.0;
};

struct ServiceResponse {
  enum class Outcome { Denied, Failed, Data };
  Outcome outcome = Outcome::Denied;
  std::vector<DataItem> items;  // newest first; only for Data
  double latency_ms = 0.0;      // only for Data
};

struct SimEvent {
  double time = 0.0;
  std::string service_id;
  std::string kind;  // produce | flush | request | warning
  std::string detail;
};

class EventLog {
 public:
  void append(double time, std::string service_id, std::string kind,
              std::string detail) {
    events_.push_back(
        SimEvent{time, std::move(service_id), std::move(kind), std::move(detail)});
  }

  const std::vector<SimEvent>& events() const { return events_; }

  std::size_t count(const std::string& service_id, const std::string& kind,
                    double from, double to) const {
    std::size_t n = 0;
    for (const auto& ev : events_)
      if (ev.service_id == service_id && ev.kind == kind && ev.time >= from &&
          ev.time < to)
        ++n;
    return n;
  }

  // One event per line: time service_id kind detail
  void write_text(std::ostream& os) const {
    for (const auto& ev : events_)
      os << detail::format_double(ev.time) << ' ' << ev.service_id << ' '
         << ev.kind << ' ' << ev.detail << '\n';
  }

 private:
  std::vector<SimEvent> events_;
};

/// One simulated service: independent production and insertion processes,
/// Bernoulli availability, latency shaped by the resource tier. All
/// randomness comes from per-service seeded generators so runs repeat
/// bit-exactly.
class SimulatedService {
 public:
  SimulatedService(ServiceProfile profile, int max_cpu_tier, EventLog* log)
      : profile_(std::move(profile)),
        latency_multiplier_(
            std::max(1, max_cpu_tier + 1 - profile_.cpu_tier)),
        outcome_rng_(profile_.rng_seed),
        jitter_rng_(profile_.rng_seed ^ 0x9e3779b97f4a7c15ULL),
        log_(log) {}

  const ServiceProfile& profile() const { return profile_; }
  double latency_multiplier() const { return latency_multiplier_; }

  void produce(double t) {
    DataItem item;
    item.item_id = profile_.service_id + "-" + std::to_string(produced_total_);
    item.produced_at = t;
    item.payload = 36.5 + 0.01 * static_cast<double>(produced_total_ % 100);
    ++produced_total_;
    buffer_.push_back(item);
    if (log_) log_->append(t, profile_.service_id, "produce", item.item_id);
  }

  void flush(double t) {
    if (log_)
      log_->append(t, profile_.service_id, "flush",
                   "items=" + std::to_string(buffer_.size()));
    for (auto& item : buffer_) store_.push_back(std::move(item));
    buffer_.clear();
  }

  ServiceResponse handle_request(double t, std::size_t limit) {
    ServiceResponse resp;
    if (uniform(outcome_rng_) >= profile_.accept_probability) {
      resp.outcome = ServiceResponse::Outcome::Denied;
      if (log_) log_->append(t, profile_.service_id, "request", "denied");
      return resp;
    }
    if (uniform(outcome_rng_) >= profile_.success_probability_given_accept) {
      resp.outcome = ServiceResponse::Outcome::Failed;
      if (log_) log_->append(t, profile_.service_id, "request", "failed");
      return resp;
    }
    resp.outcome = ServiceResponse::Outcome::Data;
    resp.latency_ms = profile_.base_latency_ms * latency_multiplier_ +
                      profile_.latency_jitter_ms * uniform(jitter_rng_);
    const std::size_t n = std::min(limit, store_.size());
    resp.items.reserve(n);
    for (std::size_t i = 0; i < n; ++i)
      resp.items.push_back(store_[store_.size() - 1 - i]);
    if (log_)
      log_->append(t, profile_.service_id, "request",
                   "ok items=" + std::to_string(n) +
                       " latency_ms=" + detail::format_double(resp.latency_ms));
    return resp;
  }

  std::size_t produced_count() const { return produced_total_; }
  std::size_t buffered_count() const { return buffer_.size(); }
  std::size_t store_size() const { return store_.size(); }

 private:
  // 53-bit mantissa draw in [0,1); avoids distribution classes so the
  // sequence is identical on every platform.
  static double uniform(std::mt19937_64& g) {
    return static_cast<double>(g() >> 11) * 0x1.0p-53;
  }

  ServiceProfile profile_;
  double latency_multiplier_;
  std::mt19937_64 outcome_rng_;
  std::mt19937_64 jitter_rng_;
  EventLog* log_;
  std::uint64_t produced_total_ = 0;
  std::vector<DataItem> buffer_;  // produced, not yet flushed
  std::vector<DataItem> store_;   // flushed: visible to requests
};

/// Deterministic discrete-event simulation of a fleet of black-box data
/// services sharing one virtual clock.
class Simulation {
 public:
  /// max_cpu_tier fixes the latency model: a service of tier k gets
  /// multiplier max(1, max_cpu_tier + 1 - k).
  explicit Simulation(int max_cpu_tier = 1) : max_cpu_tier_(max_cpu_tier) {}

  SimulatedService& spawn_service(const ServiceProfile& profile) {
    validate(profile);
    if (services_.count(profile.service_id))
      throw DuplicateServiceIdError("duplicate service id: " + profile.service_id);
    auto svc = std::make_unique<SimulatedService>(profile, max_cpu_tier_, &log_);
    auto* raw = svc.get();
    services_.emplace(profile.service_id, std::move(svc));
    // Production is scheduled before insertion so that at tied instants the
    // item produced at t is part of the flush at t.
    clock_.schedule_repeating(profile.production_period, profile.production_period,
                              kForever, [raw](double t) { raw->produce(t); });
    clock_.schedule_repeating(profile.insertion_period, profile.insertion_period,
                              kForever, [raw](double t) { raw->flush(t); });
    return *raw;
  }

  SimulatedService& service(const std::string& id) {
    auto it = services_.find(id);
    if (it == services_.end()) throw NotFoundError("unknown service: " + id);
    return *it->second;
  }

  const SimulatedService& service(const std::string& id) const {
    auto it = services_.find(id);
    if (it == services_.end()) throw NotFoundError("unknown service: " + id);
    return *it->second;
  }

  ServiceResponse handle_request(const std::string& id, double at,
                                 std::size_t limit) {
    return service(id).handle_request(at, limit);
  }

  const EventLog& run_until(double t_end) {
    clock_.run_until(t_end);
    return log_;
  }

  VirtualClock& clock() { return clock_; }
  EventLog& log() { return log_; }
  const EventLog& log() const { return log_; }
  int max_cpu_tier() const { return max_cpu_tier_; }

  std::vector<std::string> service_ids() const {
    std::vector<std::string> ids;
    ids.reserve(services_.size());
    for (const auto& [id, _] : services_) ids.push_back(id);
    return ids;
  }

 private:
  int max_cpu_tier_;
  VirtualClock clock_;
  EventLog log_;
  std::map<std::string, std::unique_ptr<SimulatedService>> services_;
};

}  // namespace detect
