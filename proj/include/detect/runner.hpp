#pragma once

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <map>
#include <string>
#include <vector>

#include "json.hpp"

#include "detect/dqmm.hpp"
#include "detect/pmm.hpp"
#include "detect/scenario.hpp"
#include "detect/simulation.hpp"
#include "detect/tmm.hpp"

namespace detect {

struct RunResult {
  std::vector<Ranking> rankings;  // one per sweep point, in sweep order
  std::map<std::string, FactorLevel> latest_performance;
  std::map<std::string, DataQualityLevel> latest_data_quality;
  std::vector<std::filesystem::path> report_files;
  std::filesystem::path summary_file;
  std::vector<std::string> notes;  // windows skipped, services omitted, ...
};

/// Summary table: one column per sweep point, one row per rank position,
/// service ids in the cells. An empty ranking set yields the header only.
inline void write_summary_csv(const std::vector<Ranking>& rankings,
                              std::ostream& os) {
  os << "rank";
  for (const auto& r : rankings)
    os << ",a=" << detail::format_double(r.weights.alpha())
       << " b=" << detail::format_double(r.weights.beta());
  os << '\n';
  std::size_t rows = 0;
  for (const auto& r : rankings) rows = std::max(rows, r.entries.size());
  for (std::size_t row = 0; row < rows; ++row) {
    os << row + 1;
    for (const auto& r : rankings) {
      os << ',';
      if (row < r.entries.size()) os << r.entries[row].service_id;
    }
    os << '\n';
  }
}

/// Flat CSV view of one trust report document.
inline void export_report_csv(const nlohmann::json& report, std::ostream& os) {
  os << "rank,service_id,trust,performance,data_quality\n";
  if (!report.contains("ranking") || !report.at("ranking").is_array())
    throw InvalidInputError("report has no ranking array");
  for (const auto& e : report.at("ranking"))
    os << e.at("rank").get<int>() << ',' << e.at("service_id").get<std::string>()
       << ',' << detail::format_double(e.at("trust").get<double>()) << ','
       << detail::format_double(e.at("performance").get<double>()) << ','
       << detail::format_double(e.at("data_quality").get<double>()) << '\n';
}

namespace detail {

struct EvaluationPipeline {
  const ScenarioConfig& cfg;
  TimeSeriesStore& probes;
  KnowledgeBase& kb;
  PerfDb& perf_db;
  EdqStore& edq;
  std::vector<std::string>* notes = nullptr;

  void evaluate_window(const ObservationWindow& window) {
    for (const auto& svc : cfg.services) {
      const auto& id = svc.profile.service_id;
      try {
        perf_db.put(evaluate_performance(probes, id, window, svc.sla_ert_ms,
                                         cfg.performance_weights));
      } catch (const NoDataError& e) {
        note(window, id, e.what());
      }
      try {
        edq.put(evaluate_data_quality(kb, id, window, cfg.validity_interval));
      } catch (const InsufficientSamplesError& e) {
        note(window, id, e.what());
      }
    }
  }

  void note(const ObservationWindow& w, const std::string& id,
            const std::string& what) {
    if (notes)
      notes->push_back("window [" + format_double(w.start) + "," +
                       format_double(w.end) + ") " + id + ": " + what);
  }
};

struct SweepOutput {
  std::vector<Ranking> rankings;
  std::vector<std::string> notes;
};

inline SweepOutput run_sweep(const ScenarioConfig& cfg, TrustEngine& engine,
                             double at) {
  SweepOutput out;
  for (const auto& weights : cfg.sweep) {
    try {
      out.rankings.push_back(engine.rank_services(cfg.service_ids(), weights, at));
    } catch (const EmptyRankingError& e) {
      Ranking empty;
      empty.requested_at = at;
      empty.weights = weights;
      for (const auto& id : cfg.service_ids())
        empty.omitted.push_back(Omission{id, e.what()});
      out.rankings.push_back(std::move(empty));
      out.notes.push_back("sweep a=" + format_double(weights.alpha()) +
                          " b=" + format_double(weights.beta()) + ": " + e.what());
    }
  }
  return out;
}

inline std::vector<std::filesystem::path> write_reports(
    const std::vector<Ranking>& rankings, const std::filesystem::path& out_dir,
    std::filesystem::path& summary_file) {
  std::vector<std::filesystem::path> files;
  for (std::size_t i = 0; i < rankings.size(); ++i) {
    const auto path = out_dir / ("trust_report_" + std::to_string(i) + ".json");
    std::ofstream os(path);
    if (!os) throw IoError("cannot open " + path.string());
    os << trust_report_json(rankings[i]).dump(2) << '\n';
    files.push_back(path);
  }
  summary_file = out_dir / "summary.csv";
  std::ofstream os(summary_file);
  if (!os) throw IoError("cannot open " + summary_file.string());
  write_summary_csv(rankings, os);
  return files;
}

}  // namespace detail

/// Runs a scenario on the virtual clock: spawns the fleet, schedules probing
/// and sampling, evaluates factor levels at every window boundary (plus a
/// trailing partial window, if any), then executes the weight sweep and
/// writes reports, the summary table, raw probe CSV, factor-level logs, the
/// trust history and the event log into out_dir. Identical configs and seeds
/// produce byte-identical outputs.
inline RunResult run_scenario(const ScenarioConfig& cfg,
                              const std::filesystem::path& out_dir) {
  std::filesystem::create_directories(out_dir);
  RunResult result;

  Simulation sim(cfg.max_cpu_tier());
  for (const auto& svc : cfg.services) sim.spawn_service(svc.profile);

  TimeSeriesStore probes;
  KnowledgeBase kb;
  PerfDb perf_db;
  EdqStore edq;
  perf_db.attach_log(out_dir / "perf_levels.csv");
  edq.attach_log(out_dir / "edq_levels.csv");

  ProbePlan probe_plan;
  probe_plan.period = cfg.probe_period;
  probe_plan.until = cfg.duration;
  SamplePlan sample_plan;
  sample_plan.period = cfg.sampling_period;
  sample_plan.until = cfg.duration;
  sample_plan.query_limit = cfg.query_limit;
  for (const auto& svc : cfg.services) {
    probe_plan.deadline_ms[svc.profile.service_id] = 2.0 * svc.sla_ert_ms;
    sample_plan.validity_interval[svc.profile.service_id] = cfg.validity_interval;
  }
  schedule_probes(sim, cfg.service_ids(), probe_plan, probes);
  schedule_samples(sim, cfg.service_ids(), sample_plan, kb);

  detail::EvaluationPipeline pipeline{cfg, probes, kb, perf_db, edq,
                                      &result.notes};
  double window_start = 0.0;
  while (window_start < cfg.duration) {
    const double window_end =
        std::min(window_start + cfg.evaluation_window, cfg.duration);
    sim.run_until(window_end);
    pipeline.evaluate_window(ObservationWindow{window_start, window_end});
    window_start = window_end;
  }

  TrustHistory history;
  TrustEngine engine(perf_db, edq, history, 2.0 * cfg.evaluation_window);
  auto sweep = detail::run_sweep(cfg, engine, cfg.duration);
  result.rankings = std::move(sweep.rankings);
  for (auto& note : sweep.notes) result.notes.push_back(std::move(note));

  for (const auto& id : cfg.service_ids()) {
    try {
      result.latest_performance.emplace(id, perf_db.latest(id));
    } catch (const NotFoundError&) {
    }
    try {
      result.latest_data_quality.emplace(id, edq.latest(id));
    } catch (const NotFoundError&) {
    }
  }

  result.report_files =
      detail::write_reports(result.rankings, out_dir, result.summary_file);
  {
    std::ofstream os(out_dir / "probes.csv");
    if (!os) throw IoError("cannot open probes.csv");
    probes.write_csv(os);
  }
  history.save(out_dir / "trust_history.csv");
  {
    std::ofstream os(out_dir / "events.log");
    if (!os) throw IoError("cannot open events.log");
    sim.log().write_text(os);
  }
  return result;
}

}  // namespace detect
