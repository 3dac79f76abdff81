#pragma once

#include <filesystem>
#include <fstream>
#include <map>
#include <mutex>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "detect/format.hpp"
#include "detect/simulation.hpp"
#include "detect/trust_core.hpp"

namespace detect {

/// One timestamped performance observation.
struct ProbeRecord {
  std::string service_id;
  double probed_at = 0.0;  // when the probe was sent
  bool accepted = false;
  bool success = false;
  std::optional<double> response_time_ms;  // present exactly when success
};

/// Half-open interval [start, end).
struct ObservationWindow {
  double start = 0.0;
  double end = 0.0;
  bool contains(double t) const { return t >= start && t < end; }
  double duration() const { return end - start; }
};

/// Append-only per-service probe log; one writer, any number of readers.
class TimeSeriesStore {
 public:
  void append(const ProbeRecord& rec) {
    if (rec.success && !rec.accepted)
      throw InvalidInputError("success implies accepted");
    if (rec.success != rec.response_time_ms.has_value())
      throw InvalidInputError("response_time_ms present iff success");
    std::lock_guard lock(mutex_);
    auto& recs = records_[rec.service_id];
    if (!recs.empty() && rec.probed_at < recs.back().probed_at)
      throw InvalidInputError("probe timestamps must be non-decreasing");
    recs.push_back(rec);
  }

  std::vector<ProbeRecord> records_in(const std::string& service_id,
                                      const ObservationWindow& w) const {
    std::lock_guard lock(mutex_);
    std::vector<ProbeRecord> out;
    auto it = records_.find(service_id);
    if (it == records_.end()) return out;
    for (const auto& rec : it->second)
      if (w.contains(rec.probed_at)) out.push_back(rec);
    return out;
  }

  std::size_t total(const std::string& service_id) const {
    std::lock_guard lock(mutex_);
    auto it = records_.find(service_id);
    return it == records_.end() ? 0 : it->second.size();
  }

  std::vector<std::string> service_ids() const {
    std::lock_guard lock(mutex_);
    std::vector<std::string> ids;
    for (const auto& [id, _] : records_) ids.push_back(id);
    return ids;
  }

  /// CSV export. Header: service_id,probed_at,accepted,success,response_time_ms
  /// A missing response time serializes as an empty field.
  void write_csv(std::ostream& os) const {
    std::lock_guard lock(mutex_);
    os << "service_id,probed_at,accepted,success,response_time_ms\n";
    for (const auto& [id, recs] : records_)
      for (const auto& rec : recs) {
        os << id << ',' << detail::format_double(rec.probed_at) << ','
           << (rec.accepted ? "true" : "false") << ','
           << (rec.success ? "true" : "false") << ',';
        if (rec.response_time_ms)
          os << detail::format_double(*rec.response_time_ms);
        os << '\n';
      }
  }

 private:
  mutable std::mutex mutex_;
  std::map<std::string, std::vector<ProbeRecord>> records_;
};

/// Maps a service response onto probe-record fields. A data response slower
/// than deadline_ms counts as a consumer-side timeout: accepted but failed.
inline ProbeRecord classify_response(const std::string& service_id,
                                     double probed_at,
                                     const ServiceResponse& resp,
                                     double deadline_ms) {
  ProbeRecord rec{service_id, probed_at, false, false, std::nullopt};
  switch (resp.outcome) {
    case ServiceResponse::Outcome::Denied:
      break;
    case ServiceResponse::Outcome::Failed:
      rec.accepted = true;
      break;
    case ServiceResponse::Outcome::Data:
      rec.accepted = true;
      if (resp.latency_ms <= deadline_ms) {
        rec.success = true;
        rec.response_time_ms = resp.latency_ms;
      }
      break;
  }
  return rec;
}

struct ProbePlan {
  double period = 15.0;
  double start = 0.0;
  double until = kForever;     // probes fire strictly before this instant
  std::size_t query_limit = 1; // probes only need to see that data flows
  std::map<std::string, double> deadline_ms;  // per service, default 2x ERt
};

/// Registers one repeating probe task per target on the simulation clock.
/// Every outcome becomes exactly one ProbeRecord in the store.
inline void schedule_probes(Simulation& sim,
                            const std::vector<std::string>& targets,
                            const ProbePlan& plan, TimeSeriesStore& store) {
  if (!(plan.period > 0.0)) throw InvalidInputError("probe period must be > 0");
  for (const auto& id : targets) {
    auto it = plan.deadline_ms.find(id);
    if (it == plan.deadline_ms.end())
      throw InvalidInputError("no probe deadline configured for " + id);
    const double deadline = it->second;
    const std::size_t limit = plan.query_limit;
    sim.clock().schedule_repeating(
        plan.start, plan.period, plan.until,
        [&sim, &store, id, deadline, limit](double t) {
          store.append(
              classify_response(id, t, sim.handle_request(id, t, limit), deadline));
        });
  }
}

/// Computes the per-window counters and evaluates the performance level.
/// With no successful request in the window there is no response-time
/// evidence; the mean is pinned at the SLA bound so the efficiency term is 0.
inline FactorLevel evaluate_performance(const TimeSeriesStore& store,
                                        const std::string& service_id,
                                        const ObservationWindow& window,
                                        double sla_ert_ms,
                                        const PerformanceWeights& weights) {
  const auto records = store.records_in(service_id, window);
  if (records.empty())
    throw NoDataError("no probe records for " + service_id + " in window");
  PerformanceInputs in;
  in.n_total = static_cast<std::int64_t>(records.size());
  double rt_sum = 0.0;
  for (const auto& rec : records) {
    if (rec.accepted) ++in.n_accepted;
    if (rec.success) {
      ++in.n_success;
      rt_sum += *rec.response_time_ms;
    }
  }
  in.ert_ms = sla_ert_ms;
  in.rt_mean_ms =
      in.n_success > 0 ? rt_sum / static_cast<double>(in.n_success) : sla_ert_ms;
  return FactorLevel{service_id, FactorKind::Performance,
                     performance(in, weights), window.end};
}

/// Store of evaluated performance levels with latest-wins lookup, optionally
/// mirrored to an append-only file (one `service_id,evaluated_at,value` line
/// per level).
class PerfDb {
 public:
  void attach_log(const std::filesystem::path& file) {
    std::lock_guard lock(mutex_);
    log_.open(file, std::ios::out | std::ios::trunc);
    if (!log_) throw IoError("cannot open " + file.string());
  }

  void put(const FactorLevel& level) {
    std::lock_guard lock(mutex_);
    auto& levels = levels_[level.service_id];
    if (!levels.empty() && level.evaluated_at < levels.back().evaluated_at)
      throw InvalidInputError("evaluation timestamps must be non-decreasing");
    levels.push_back(level);
    if (log_.is_open()) {
      log_ << level.service_id << ',' << detail::format_double(level.evaluated_at)
           << ',' << detail::format_double(level.value) << '\n';
      log_.flush();
    }
  }

  FactorLevel latest(const std::string& service_id) const {
    std::lock_guard lock(mutex_);
    auto it = levels_.find(service_id);
    if (it == levels_.end() || it->second.empty())
      throw NotFoundError("no performance level for " + service_id);
    return it->second.back();
  }

  std::vector<FactorLevel> history(const std::string& service_id) const {
    std::lock_guard lock(mutex_);
    auto it = levels_.find(service_id);
    return it == levels_.end() ? std::vector<FactorLevel>{} : it->second;
  }

  static std::vector<FactorLevel> load_log(const std::filesystem::path& file) {
    std::ifstream in(file);
    if (!in) throw IoError("cannot open " + file.string());
    std::vector<FactorLevel> out;
    std::string line;
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      auto fields = detail::split_csv_line(line);
      if (fields.size() != 3)
        throw IoError("malformed performance log line: " + line);
      out.push_back(FactorLevel{std::string(fields[0]), FactorKind::Performance,
                                detail::parse_double(fields[2]),
                                detail::parse_double(fields[1])});
    }
    return out;
  }

 private:
  mutable std::mutex mutex_;
  std::map<std::string, std::vector<FactorLevel>> levels_;
  std::ofstream log_;
};

}  // namespace detect
