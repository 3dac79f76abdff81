#pragma once

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "detect/format.hpp"
#include "detect/pmm.hpp"
#include "detect/simulation.hpp"
#include "detect/trust_core.hpp"

namespace detect {

/// One sampling result: the item ids seen, which of them are new relative to
/// everything seen before, and the average per-item timeliness at receipt.
struct SampleSnapshot {
  std::string service_id;
  double sampled_at = 0.0;  // response receipt time
  bool miss = false;        // denied or failed sample; carries no content
  bool warmup = false;      // first content sample; seeds the seen-set only
  std::vector<std::string> item_ids;      // sorted
  std::vector<std::string> new_item_ids;  // sorted; subset of item_ids
  double mean_item_timeliness = 0.0;      // in [0,1]; 0 when no items
};

/// Per-service sampling history plus the set of item ids ever observed.
/// Novelty is the set difference of a sample against the seen-set: an item
/// id never observed before signals an insertion between samples. The first
/// content sample only seeds the seen-set and is excluded from statistics.
class KnowledgeBase {
 public:
  SampleSnapshot record_sample(const std::string& service_id, double sampled_at,
                               const std::vector<DataItem>& items,
                               double validity_interval, bool miss) {
    SampleSnapshot snap;
    snap.service_id = service_id;
    snap.sampled_at = sampled_at;
    snap.miss = miss;
    std::lock_guard lock(mutex_);
    auto& st = services_[service_id];
    if (!st.samples.empty() && sampled_at < st.samples.back().sampled_at)
      throw InvalidInputError("sample timestamps must be non-decreasing");
    if (!miss) {
      double sum = 0.0;
      for (const auto& item : items) {
        snap.item_ids.push_back(item.item_id);
        sum += data_timeliness(
            TimelinessInputs{sampled_at, item.produced_at, validity_interval});
        if (st.first_seen.emplace(item.item_id, sampled_at).second && st.warmed)
          snap.new_item_ids.push_back(item.item_id);
      }
      std::sort(snap.item_ids.begin(), snap.item_ids.end());
      std::sort(snap.new_item_ids.begin(), snap.new_item_ids.end());
      snap.mean_item_timeliness =
          items.empty() ? 0.0 : sum / static_cast<double>(items.size());
      if (!st.warmed) {
        st.warmed = true;
        st.warmup_at = sampled_at;
        snap.warmup = true;
      }
    }
    st.samples.push_back(snap);
    return snap;
  }

  std::vector<SampleSnapshot> samples_in(const std::string& service_id,
                                         const ObservationWindow& w) const {
    std::lock_guard lock(mutex_);
    std::vector<SampleSnapshot> out;
    auto it = services_.find(service_id);
    if (it == services_.end()) return out;
    for (const auto& snap : it->second.samples)
      if (w.contains(snap.sampled_at)) out.push_back(snap);
    return out;
  }

  std::optional<double> warmup_completed_at(const std::string& service_id) const {
    std::lock_guard lock(mutex_);
    auto it = services_.find(service_id);
    if (it == services_.end() || !it->second.warmed) return std::nullopt;
    return it->second.warmup_at;
  }

  std::size_t seen_count(const std::string& service_id) const {
    std::lock_guard lock(mutex_);
    auto it = services_.find(service_id);
    return it == services_.end() ? 0 : it->second.first_seen.size();
  }

  bool has_seen(const std::string& service_id, const std::string& item_id) const {
    std::lock_guard lock(mutex_);
    auto it = services_.find(service_id);
    return it != services_.end() && it->second.first_seen.count(item_id) > 0;
  }

 private:
  struct PerService {
    std::map<std::string, double> first_seen;
    std::vector<SampleSnapshot> samples;
    bool warmed = false;
    double warmup_at = 0.0;
  };
  mutable std::mutex mutex_;
  std::map<std::string, PerService> services_;
};

struct SamplePlan {
  double period = 5.0;
  double start = 0.0;
  double until = kForever;
  std::size_t query_limit = 10;
  std::map<std::string, double> validity_interval;  // per service, seconds
};

/// Registers one repeating sampler task per target. Receipt time inherits the
/// service latency, so slow services see their own freshness degraded. Denied
/// and failed samples are recorded as misses and leave the seen-set alone.
inline void schedule_samples(Simulation& sim,
                             const std::vector<std::string>& targets,
                             const SamplePlan& plan, KnowledgeBase& kb) {
  if (!(plan.period > 0.0)) throw InvalidInputError("sampling period must be > 0");
  for (const auto& id : targets) {
    auto it = plan.validity_interval.find(id);
    if (it == plan.validity_interval.end())
      throw InvalidInputError("no validity interval configured for " + id);
    const double validity = it->second;
    if (!(validity > 0.0))
      throw InvalidInputError("validity interval must be > 0 for " + id);
    const std::size_t limit = plan.query_limit;
    sim.clock().schedule_repeating(
        plan.start, plan.period, plan.until,
        [&sim, &kb, id, validity, limit](double t) {
          auto resp = sim.handle_request(id, t, limit);
          if (resp.outcome != ServiceResponse::Outcome::Data) {
            kb.record_sample(id, t, {}, validity, true);
            return;
          }
          const double received_at = t + resp.latency_ms / 1000.0;
          for (const auto& item : resp.items) {
            if (item.produced_at > received_at) {
              sim.log().append(received_at, id, "warning",
                               "clock skew: " + item.item_id +
                                   " produced after receipt");
              break;
            }
          }
          kb.record_sample(id, received_at, resp.items, validity, false);
        });
  }
}

/// Insertions per second estimated from sampling: the number of distinct
/// sampling instants in the window at which novelty appeared, divided by the
/// window duration. Misses do not count as instants; the denominator stays
/// the wall duration, which slightly under-detects for very unavailable
/// services.
inline double estimate_update_frequency(const KnowledgeBase& kb,
                                        const std::string& service_id,
                                        const ObservationWindow& window) {
  if (!(window.duration() > 0.0))
    throw InvalidInputError("window duration must be > 0");
  auto warm = kb.warmup_completed_at(service_id);
  if (!warm || window.start < *warm)
    throw InsufficientSamplesError("window starts before warm-up completed for " +
                                   service_id);
  std::size_t usable = 0;
  std::size_t detections = 0;
  for (const auto& snap : kb.samples_in(service_id, window)) {
    if (snap.miss || snap.warmup) continue;
    ++usable;
    if (!snap.new_item_ids.empty()) ++detections;
  }
  if (usable < 2)
    throw InsufficientSamplesError("need at least 2 samples in window for " +
                                   service_id);
  return static_cast<double>(detections) / window.duration();
}

/// An evaluated data-quality level together with its two components.
struct DataQualityLevel {
  std::string service_id;
  double evaluated_at = 0.0;
  double t_d_avg = 0.0;  // average data timeliness over the window
  double t_db = 0.0;     // database timeliness from the estimated frequency
  double value = 0.0;    // always exactly t_d_avg * t_db

  FactorLevel to_factor_level() const {
    return FactorLevel{service_id, FactorKind::DataQuality, value, evaluated_at};
  }
};

/// Window evaluation: average the per-sample timeliness, turn the estimated
/// update frequency into insertions per validity interval, and combine.
inline DataQualityLevel evaluate_data_quality(const KnowledgeBase& kb,
                                              const std::string& service_id,
                                              const ObservationWindow& window,
                                              double validity_interval) {
  const double freq = estimate_update_frequency(kb, service_id, window);
  double sum = 0.0;
  std::size_t n = 0;
  for (const auto& snap : kb.samples_in(service_id, window)) {
    if (snap.miss || snap.warmup) continue;
    sum += snap.mean_item_timeliness;
    ++n;
  }
  if (n == 0)
    throw InsufficientSamplesError("no content samples in window for " +
                                   service_id);
  DataQualityLevel level;
  level.service_id = service_id;
  level.evaluated_at = window.end;
  level.t_d_avg = sum / static_cast<double>(n);
  level.t_db = database_timeliness(freq * validity_interval);
  level.value = data_quality(level.t_d_avg, level.t_db);
  return level;
}

/// Store of evaluated data-quality levels, optionally mirrored to an
/// append-only file (`service_id,evaluated_at,t_d_avg,t_db,value` per line).
class EdqStore {
 public:
  void attach_log(const std::filesystem::path& file) {
    std::lock_guard lock(mutex_);
    log_.open(file, std::ios::out | std::ios::trunc);
    if (!log_) throw IoError("cannot open " + file.string());
  }

  void put(const DataQualityLevel& level) {
    std::lock_guard lock(mutex_);
    auto& levels = levels_[level.service_id];
    if (!levels.empty() && level.evaluated_at < levels.back().evaluated_at)
      throw InvalidInputError("evaluation timestamps must be non-decreasing");
    levels.push_back(level);
    if (log_.is_open()) {
      log_ << level.service_id << ',' << detail::format_double(level.evaluated_at)
           << ',' << detail::format_double(level.t_d_avg) << ','
           << detail::format_double(level.t_db) << ','
           << detail::format_double(level.value) << '\n';
      log_.flush();
    }
  }

  DataQualityLevel latest(const std::string& service_id) const {
    std::lock_guard lock(mutex_);
    auto it = levels_.find(service_id);
    if (it == levels_.end() || it->second.empty())
      throw NotFoundError("no data-quality level for " + service_id);
    return it->second.back();
  }

  std::vector<DataQualityLevel> history(const std::string& service_id) const {
    std::lock_guard lock(mutex_);
    auto it = levels_.find(service_id);
    return it == levels_.end() ? std::vector<DataQualityLevel>{} : it->second;
  }

  static std::vector<DataQualityLevel> load_log(const std::filesystem::path& file) {
    std::ifstream in(file);
    if (!in) throw IoError("cannot open " + file.string());
    std::vector<DataQualityLevel> out;
    std::string line;
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      auto fields = detail::split_csv_line(line);
      if (fields.size() != 5) throw IoError("malformed quality log line: " + line);
      DataQualityLevel level;
      level.service_id = std::string(fields[0]);
      level.evaluated_at = detail::parse_double(fields[1]);
      level.t_d_avg = detail::parse_double(fields[2]);
      level.t_db = detail::parse_double(fields[3]);
      level.value = detail::parse_double(fields[4]);
      out.push_back(level);
    }
    return out;
  }

 private:
  mutable std::mutex mutex_;
  std::map<std::string, std::vector<DataQualityLevel>> levels_;
  std::ofstream log_;
};

}  // namespace detect
