#pragma once

#include <chrono>
#include <memory>
#include <thread>
#include <vector>

#include "detect/gateway.hpp"
#include "detect/runner.hpp"

namespace detect {

struct WallRunOptions {
  std::string bind_address = "127.0.0.1";
  int base_port = 0;  // 0 = ephemeral port per service
  bool serve_trust_api = true;
};

/// Runs a scenario in wall-clock mode: every service is served over HTTP and
/// the prober and sampler talk to it across the wire. Evaluation windows,
/// the sweep and the written outputs mirror the virtual runner; timing noise
/// makes the reports non-reproducible, which is inherent to this mode.
inline RunResult run_scenario_wall(const ScenarioConfig& cfg,
                                   const std::filesystem::path& out_dir,
                                   const WallRunOptions& opts = {}) {
  std::filesystem::create_directories(out_dir);
  RunResult result;

  Simulation sim(cfg.max_cpu_tier());
  for (const auto& svc : cfg.services) sim.spawn_service(svc.profile);
  WallSimHost host(sim);
  host.start();

  std::vector<std::unique_ptr<ServiceEndpoint>> endpoints;
  for (std::size_t i = 0; i < cfg.services.size(); ++i) {
    const int port = opts.base_port == 0 ? 0 : opts.base_port + static_cast<int>(i);
    endpoints.push_back(std::make_unique<ServiceEndpoint>(
        host, cfg.services[i].profile.service_id, opts.bind_address, port));
    endpoints.back()->start();
    result.notes.push_back("endpoint " + cfg.services[i].profile.service_id +
                           " http://" + opts.bind_address + ":" +
                           std::to_string(endpoints.back()->port()));
  }

  TimeSeriesStore probes;
  KnowledgeBase kb;
  PerfDb perf_db;
  EdqStore edq;
  perf_db.attach_log(out_dir / "perf_levels.csv");
  edq.attach_log(out_dir / "edq_levels.csv");
  TrustHistory history;
  TrustEngine engine(perf_db, edq, history, 2.0 * cfg.evaluation_window);

  std::unique_ptr<TrustApiEndpoint> trust_api;
  if (opts.serve_trust_api) {
    trust_api = std::make_unique<TrustApiEndpoint>(
        engine, cfg.service_ids(), [&host] { return host.elapsed(); },
        opts.bind_address, opts.base_port == 0 ? 0 : opts.base_port + 1000);
    trust_api->start();
    result.notes.push_back("trust api http://" + opts.bind_address + ":" +
                           std::to_string(trust_api->port()) + "/trust/ranking");
  }

  const auto sleep_until_elapsed = [&host](double target) {
    const double remaining = target - host.elapsed();
    if (remaining > 0.0)
      std::this_thread::sleep_for(std::chrono::duration<double>(remaining));
  };

  std::thread prober([&] {
    for (double t = 0.0; t < cfg.duration; t += cfg.probe_period) {
      sleep_until_elapsed(t);
      for (std::size_t i = 0; i < cfg.services.size(); ++i) {
        const auto& svc = cfg.services[i];
        auto probe = query_endpoint(opts.bind_address, endpoints[i]->port(),
                                    svc.profile.service_id, host.elapsed(), 1,
                                    2.0 * svc.sla_ert_ms, host.epoch_start());
        probes.append(probe.record);
      }
    }
  });

  std::thread sampler([&] {
    for (double t = 0.0; t < cfg.duration; t += cfg.sampling_period) {
      sleep_until_elapsed(t);
      for (std::size_t i = 0; i < cfg.services.size(); ++i) {
        const auto& svc = cfg.services[i];
        auto sample = query_endpoint(opts.bind_address, endpoints[i]->port(),
                                     svc.profile.service_id, host.elapsed(),
                                     cfg.query_limit, 2.0 * svc.sla_ert_ms,
                                     host.epoch_start());
        if (sample.record.success)
          kb.record_sample(svc.profile.service_id, host.elapsed(), sample.items,
                           cfg.validity_interval, false);
        else
          kb.record_sample(svc.profile.service_id, host.elapsed(), {},
                           cfg.validity_interval, true);
      }
    }
  });

  // Evaluate each closed window with a little slack so in-flight replies
  // from just inside the boundary have landed.
  detail::EvaluationPipeline pipeline{cfg, probes, kb, perf_db, edq,
                                      &result.notes};
  double window_start = 0.0;
  while (window_start < cfg.duration) {
    const double window_end =
        std::min(window_start + cfg.evaluation_window, cfg.duration);
    sleep_until_elapsed(window_end + 0.5);
    pipeline.evaluate_window(ObservationWindow{window_start, window_end});
    window_start = window_end;
  }

  prober.join();
  sampler.join();

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

  if (trust_api) trust_api->stop();
  for (auto& ep : endpoints) ep->stop();
  host.stop();

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
