#pragma once

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "json.hpp"

#include "detect/format.hpp"
#include "detect/simulation.hpp"
#include "detect/trust_core.hpp"

namespace detect {

/// Per-service scenario entry: behaviour profile plus the SLA bound the
/// prober holds the service to.
struct ServiceScenario {
  ServiceProfile profile;
  double sla_ert_ms = 0.0;
};

/// A full scenario: monitoring cadences, the validity interval, the weight
/// sweep and the fleet of service profiles. Parsed from a JSON file; the
/// schema is documented in the README.
struct ScenarioConfig {
  double validity_interval = 60.0;
  double probe_period = 15.0;
  double sampling_period = 5.0;
  double evaluation_window = 300.0;
  double duration = 3600.0;
  std::uint64_t seed = 0;
  std::size_t query_limit = 10;
  PerformanceWeights performance_weights = PerformanceWeights::equal();
  std::vector<TrustWeights> sweep;
  std::vector<ServiceScenario> services;

  int max_cpu_tier() const {
    int tier = 1;
    for (const auto& s : services) tier = std::max(tier, s.profile.cpu_tier);
    return tier;
  }

  std::vector<std::string> service_ids() const {
    std::vector<std::string> ids;
    ids.reserve(services.size());
    for (const auto& s : services) ids.push_back(s.profile.service_id);
    return ids;
  }
};

namespace detail {

inline double require_number(const nlohmann::json& j, const std::string& field) {
  if (!j.contains(field))
    throw ConfigError("missing field '" + field + "'");
  if (!j.at(field).is_number())
    throw ConfigError("field '" + field + "' must be a number");
  return j.at(field).get<double>();
}

inline double require_positive(const nlohmann::json& j, const std::string& field) {
  const double v = require_number(j, field);
  if (!(v > 0.0)) throw ConfigError("field '" + field + "' must be > 0");
  return v;
}

}  // namespace detail

/// Parses and validates a scenario document. Every invariant violation is
/// rejected with a message naming the offending field. When seed_override is
/// set it replaces the document's global seed. Services without an explicit
/// seed get one derived from the global seed and their id.
inline ScenarioConfig parse_scenario(const nlohmann::json& doc,
                                     std::optional<std::uint64_t> seed_override = {}) {
  if (!doc.is_object()) throw ConfigError("scenario document must be an object");
  ScenarioConfig cfg;
  cfg.validity_interval = detail::require_positive(doc, "validity_interval");
  cfg.probe_period = detail::require_positive(doc, "probe_period");
  cfg.sampling_period = detail::require_positive(doc, "sampling_period");
  cfg.evaluation_window = detail::require_positive(doc, "evaluation_window");
  cfg.duration = detail::require_positive(doc, "duration");
  if (cfg.evaluation_window < cfg.probe_period)
    throw ConfigError("field 'evaluation_window' must be >= probe_period");
  if (cfg.duration < cfg.evaluation_window)
    throw ConfigError(
        "field 'duration' must cover at least one evaluation window");

  if (doc.contains("seed")) {
    if (!doc.at("seed").is_number_unsigned())
      throw ConfigError("field 'seed' must be a non-negative integer");
    cfg.seed = doc.at("seed").get<std::uint64_t>();
  }
  if (seed_override) cfg.seed = *seed_override;

  if (doc.contains("query_limit")) {
    if (!doc.at("query_limit").is_number_unsigned() ||
        doc.at("query_limit").get<std::uint64_t>() == 0)
      throw ConfigError("field 'query_limit' must be a positive integer");
    cfg.query_limit = doc.at("query_limit").get<std::size_t>();
  }

  if (!doc.contains("performance_weights"))
    throw ConfigError("missing field 'performance_weights'");
  {
    const auto& w = doc.at("performance_weights");
    try {
      cfg.performance_weights =
          PerformanceWeights(detail::require_number(w, "availability"),
                             detail::require_number(w, "task_success_ratio"),
                             detail::require_number(w, "time_efficiency"));
    } catch (const InvalidInputError& e) {
      throw ConfigError(std::string("performance_weights: ") + e.what());
    }
  }

  if (!doc.contains("sweep") || !doc.at("sweep").is_array() ||
      doc.at("sweep").empty())
    throw ConfigError("field 'sweep' must be a non-empty array");
  for (std::size_t i = 0; i < doc.at("sweep").size(); ++i) {
    const auto& pair = doc.at("sweep").at(i);
    try {
      cfg.sweep.emplace_back(detail::require_number(pair, "alpha"),
                             detail::require_number(pair, "beta"));
    } catch (const InvalidInputError& e) {
      throw ConfigError("sweep[" + std::to_string(i) + "]: " + e.what());
    } catch (const ConfigError& e) {
      throw ConfigError("sweep[" + std::to_string(i) + "]: " + e.what());
    }
  }

  if (!doc.contains("services") || !doc.at("services").is_array() ||
      doc.at("services").empty())
    throw ConfigError("field 'services' must be a non-empty array");
  std::set<std::string> ids;
  for (std::size_t i = 0; i < doc.at("services").size(); ++i) {
    const auto& s = doc.at("services").at(i);
    const std::string where = "services[" + std::to_string(i) + "]";
    try {
      ServiceScenario svc;
      if (!s.contains("id") || !s.at("id").is_string() ||
          s.at("id").get<std::string>().empty())
        throw ConfigError("field 'id' must be a non-empty string");
      svc.profile.service_id = s.at("id").get<std::string>();
      svc.profile.production_period = detail::require_positive(s, "production_period");
      svc.profile.insertion_period = detail::require_positive(s, "insertion_period");
      svc.profile.accept_probability = detail::require_number(s, "accept_probability");
      svc.profile.success_probability_given_accept =
          detail::require_number(s, "success_probability");
      svc.profile.base_latency_ms = detail::require_number(s, "base_latency_ms");
      svc.profile.latency_jitter_ms = detail::require_number(s, "latency_jitter_ms");
      if (!s.contains("cpu_tier") || !s.at("cpu_tier").is_number_integer())
        throw ConfigError("field 'cpu_tier' must be an integer");
      svc.profile.cpu_tier = s.at("cpu_tier").get<int>();
      svc.sla_ert_ms = detail::require_positive(s, "sla_ert_ms");
      if (s.contains("seed")) {
        if (!s.at("seed").is_number_unsigned())
          throw ConfigError("field 'seed' must be a non-negative integer");
        svc.profile.rng_seed = s.at("seed").get<std::uint64_t>();
      } else {
        svc.profile.rng_seed =
            detail::mix64(cfg.seed ^ detail::fnv1a(svc.profile.service_id));
      }
      validate(svc.profile);
      if (!ids.insert(svc.profile.service_id).second)
        throw ConfigError("duplicate service id '" + svc.profile.service_id + "'");
      cfg.services.push_back(std::move(svc));
    } catch (const InvalidInputError& e) {
      throw ConfigError(where + ": " + e.what());
    } catch (const ConfigError& e) {
      throw ConfigError(where + ": " + e.what());
    }
  }
  return cfg;
}

inline ScenarioConfig load_scenario(const std::filesystem::path& file,
                                    std::optional<std::uint64_t> seed_override = {}) {
  std::ifstream in(file);
  if (!in) throw ConfigError("cannot open scenario file " + file.string());
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError("scenario parse error in " + file.string() + ": " + e.what());
  }
  return parse_scenario(doc, seed_override);
}

/// Non-fatal advice. Sampling slower than half the smallest insertion period
/// risks missing insertions entirely.
inline std::vector<std::string> scenario_warnings(const ScenarioConfig& cfg) {
  std::vector<std::string> warnings;
  double min_insertion = kForever;
  for (const auto& s : cfg.services)
    min_insertion = std::min(min_insertion, s.profile.insertion_period);
  if (!cfg.services.empty() && cfg.sampling_period > min_insertion / 2.0)
    warnings.push_back(
        "sampling_period " + detail::format_double(cfg.sampling_period) +
        " exceeds half the smallest insertion_period (" +
        detail::format_double(min_insertion) +
        "); update-frequency estimates may miss insertions");
  return warnings;
}

}  // namespace detect
