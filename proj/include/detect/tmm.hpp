#pragma once

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <map>
#include <mutex>
#include <string>
#include <vector>

#include "json.hpp"

#include "detect/dqmm.hpp"
#include "detect/format.hpp"
#include "detect/pmm.hpp"
#include "detect/trust_core.hpp"

namespace detect {

/// One trust evaluation as stored in the trust history.
struct TrustRecord {
  std::string service_id;
  double requested_at = 0.0;
  double alpha = 0.0;
  double beta = 0.0;
  double performance = 0.0;
  double data_quality = 0.0;
  double trust = 0.0;  // always alpha*performance + beta*data_quality
};

/// Append-only history of trust evaluations, persistable to a CSV-style log
/// that round-trips doubles bit-exactly.
class TrustHistory {
 public:
  void append(const TrustRecord& rec) {
    std::lock_guard lock(mutex_);
    auto& recs = by_service_[rec.service_id];
    if (!recs.empty() && rec.requested_at < recs.back().requested_at)
      throw InvalidInputError("trust timestamps must be non-decreasing");
    recs.push_back(rec);
    ++total_;
  }

  std::vector<TrustRecord> for_service(const std::string& service_id) const {
    std::lock_guard lock(mutex_);
    auto it = by_service_.find(service_id);
    return it == by_service_.end() ? std::vector<TrustRecord>{} : it->second;
  }

  /// Records with requested_at in [from, to), in time order.
  std::vector<TrustRecord> in_range(const std::string& service_id, double from,
                                    double to) const {
    std::lock_guard lock(mutex_);
    std::vector<TrustRecord> out;
    auto it = by_service_.find(service_id);
    if (it == by_service_.end()) return out;
    for (const auto& rec : it->second)
      if (rec.requested_at >= from && rec.requested_at < to) out.push_back(rec);
    return out;
  }

  std::size_t size() const {
    std::lock_guard lock(mutex_);
    return total_;
  }

  void save(const std::filesystem::path& file) const {
    std::lock_guard lock(mutex_);
    std::ofstream os(file, std::ios::out | std::ios::trunc);
    if (!os) throw IoError("cannot open " + file.string());
    for (const auto& [id, recs] : by_service_)
      for (const auto& r : recs)
        os << id << ',' << detail::format_double(r.requested_at) << ','
           << detail::format_double(r.alpha) << ',' << detail::format_double(r.beta)
           << ',' << detail::format_double(r.performance) << ','
           << detail::format_double(r.data_quality) << ','
           << detail::format_double(r.trust) << '\n';
  }

  /// Replaces the current contents with the records from a saved log.
  void load(const std::filesystem::path& file) {
    std::ifstream in(file);
    if (!in) throw IoError("cannot open " + file.string());
    std::map<std::string, std::vector<TrustRecord>> parsed;
    std::size_t total = 0;
    std::string line;
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      auto f = detail::split_csv_line(line);
      if (f.size() != 7) throw IoError("malformed trust history line: " + line);
      TrustRecord r;
      r.service_id = std::string(f[0]);
      r.requested_at = detail::parse_double(f[1]);
      r.alpha = detail::parse_double(f[2]);
      r.beta = detail::parse_double(f[3]);
      r.performance = detail::parse_double(f[4]);
      r.data_quality = detail::parse_double(f[5]);
      r.trust = detail::parse_double(f[6]);
      parsed[r.service_id].push_back(r);
      ++total;
    }
    std::lock_guard lock(mutex_);
    by_service_ = std::move(parsed);
    total_ = total;
  }

 private:
  mutable std::mutex mutex_;
  std::map<std::string, std::vector<TrustRecord>> by_service_;
  std::size_t total_ = 0;
};

struct RankingEntry {
  std::string service_id;
  double trust = 0.0;
  double performance = 0.0;
  double data_quality = 0.0;
  double performance_evaluated_at = 0.0;
  double data_quality_evaluated_at = 0.0;
};

struct Omission {
  std::string service_id;
  std::string reason;
};

/// A trust-sorted list of services: trust descending, ties broken by
/// ascending service id. Services lacking a factor are omitted and reported.
struct Ranking {
  double requested_at = 0.0;
  TrustWeights weights{1.0, 0.0};
  std::vector<RankingEntry> entries;
  std::vector<Omission> omitted;
};

/// Collects the latest factor levels and applies the trust index. A factor
/// older than max_factor_age at request time counts as missing: trust built
/// on dead telemetry is worse than no answer.
class TrustEngine {
 public:
  TrustEngine(const PerfDb& perf, const EdqStore& edq, TrustHistory& history,
              double max_factor_age)
      : perf_(perf), edq_(edq), history_(history), max_factor_age_(max_factor_age) {
    if (!(max_factor_age > 0.0))
      throw InvalidInputError("max_factor_age must be > 0");
  }

  TrustRecord evaluate_trust(const std::string& service_id,
                             const TrustWeights& weights, double at) {
    const RankingEntry entry = collect(service_id, at);
    TrustRecord rec;
    rec.service_id = service_id;
    rec.requested_at = at;
    rec.alpha = weights.alpha();
    rec.beta = weights.beta();
    rec.performance = entry.performance;
    rec.data_quality = entry.data_quality;
    rec.trust = trust_index(entry.performance, entry.data_quality, weights);
    history_.append(rec);
    return rec;
  }

  Ranking rank_services(const std::vector<std::string>& service_ids,
                        const TrustWeights& weights, double at) {
    Ranking ranking;
    ranking.requested_at = at;
    ranking.weights = weights;
    for (const auto& id : service_ids) {
      try {
        RankingEntry entry = collect(id, at);
        entry.trust = trust_index(entry.performance, entry.data_quality, weights);
        TrustRecord rec{id, at, weights.alpha(), weights.beta(),
                        entry.performance, entry.data_quality, entry.trust};
        history_.append(rec);
        ranking.entries.push_back(std::move(entry));
      } catch (const MissingFactorError& e) {
        ranking.omitted.push_back(Omission{id, e.what()});
      }
    }
    std::sort(ranking.entries.begin(), ranking.entries.end(),
              [](const RankingEntry& a, const RankingEntry& b) {
                if (a.trust != b.trust) return a.trust > b.trust;
                return a.service_id < b.service_id;
              });
    if (ranking.entries.empty())
      throw EmptyRankingError("no service has both factor levels");
    return ranking;
  }

  const TrustHistory& history() const { return history_; }
  double max_factor_age() const { return max_factor_age_; }

 private:
  // Reads each latest level exactly once so the record is a consistent
  // snapshot even while collectors keep appending.
  RankingEntry collect(const std::string& service_id, double at) const {
    FactorLevel perf;
    try {
      perf = perf_.latest(service_id);
    } catch (const NotFoundError&) {
      throw MissingFactorError(service_id,
                               "no performance level for " + service_id);
    }
    if (at - perf.evaluated_at > max_factor_age_)
      throw MissingFactorError(service_id,
                               "performance level for " + service_id + " is stale");
    DataQualityLevel quality;
    try {
      quality = edq_.latest(service_id);
    } catch (const NotFoundError&) {
      throw MissingFactorError(service_id,
                               "no data-quality level for " + service_id);
    }
    if (at - quality.evaluated_at > max_factor_age_)
      throw MissingFactorError(service_id,
                               "data-quality level for " + service_id + " is stale");
    RankingEntry entry;
    entry.service_id = service_id;
    entry.performance = perf.value;
    entry.data_quality = quality.value;
    entry.performance_evaluated_at = perf.evaluated_at;
    entry.data_quality_evaluated_at = quality.evaluated_at;
    return entry;
  }

  const PerfDb& perf_;
  const EdqStore& edq_;
  TrustHistory& history_;
  double max_factor_age_;
};

/// The trust report: ranking, weights, per-service factor breakdown and
/// evaluation timestamps. Keys are emitted in sorted order, so serializing
/// the same ranking always yields identical bytes.
inline nlohmann::json trust_report_json(const Ranking& ranking) {
  nlohmann::json report;
  report["requested_at"] = ranking.requested_at;
  report["weights"] = {{"alpha", ranking.weights.alpha()},
                       {"beta", ranking.weights.beta()}};
  auto entries = nlohmann::json::array();
  int rank = 1;
  for (const auto& e : ranking.entries)
    entries.push_back({{"rank", rank++},
                       {"service_id", e.service_id},
                       {"trust", e.trust},
                       {"performance", e.performance},
                       {"data_quality", e.data_quality},
                       {"performance_evaluated_at", e.performance_evaluated_at},
                       {"data_quality_evaluated_at", e.data_quality_evaluated_at}});
  report["ranking"] = entries;
  auto omitted = nlohmann::json::array();
  for (const auto& o : ranking.omitted)
    omitted.push_back({{"service_id", o.service_id}, {"reason", o.reason}});
  report["omitted"] = omitted;
  return report;
}

}  // namespace detect
