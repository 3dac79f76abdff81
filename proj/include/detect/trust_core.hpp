#pragma once

#include <cmath>
#include <cstdint>
#include <string>

#include "detect/errors.hpp"

namespace detect {

enum class FactorKind { Performance, DataQuality };

inline const char* to_string(FactorKind k) {
  return k == FactorKind::Performance ? "performance" : "data_quality";
}

/// Weights of the two trust factors. alpha weighs performance, beta weighs
/// data quality; both must be non-negative and sum to 1 within 1e-9.
/// Weights are never renormalized silently.
class TrustWeights {
 public:
  static constexpr double kTolerance = 1e-9;

  TrustWeights(double alpha, double beta) : alpha_(alpha), beta_(beta) {
    if (!(alpha >= 0.0) || !(beta >= 0.0))
      throw InvalidInputError("trust weights must be non-negative");
    if (std::abs(alpha + beta - 1.0) > kTolerance)
      throw InvalidInputError("trust weights must sum to 1");
  }

  double alpha() const { return alpha_; }
  double beta() const { return beta_; }

 private:
  double alpha_;
  double beta_;
};

/// Weights of the three performance metrics. Same normalization rule as
/// TrustWeights: non-negative, sum 1 within 1e-9, no silent renormalization.
class PerformanceWeights {
 public:
  static constexpr double kTolerance = 1e-9;

  PerformanceWeights(double w_availability, double w_task_success,
                     double w_time_efficiency)
      : w_av_(w_availability), w_tsr_(w_task_success), w_te_(w_time_efficiency) {
    if (!(w_av_ >= 0.0) || !(w_tsr_ >= 0.0) || !(w_te_ >= 0.0))
      throw InvalidInputError("performance weights must be non-negative");
    if (std::abs(w_av_ + w_tsr_ + w_te_ - 1.0) > kTolerance)
      throw InvalidInputError("performance weights must sum to 1");
  }

  static PerformanceWeights equal() {
    return {1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0};
  }

  double availability() const { return w_av_; }
  double task_success() const { return w_tsr_; }
  double time_efficiency() const { return w_te_; }

 private:
  double w_av_;
  double w_tsr_;
  double w_te_;
};

/// Raw per-window counters a performance evaluation is computed from.
struct PerformanceInputs {
  std::int64_t n_total = 0;     // requests submitted
  std::int64_t n_accepted = 0;  // requests accepted
  std::int64_t n_success = 0;   // requests whose data reached the consumer
  double rt_mean_ms = 0.0;      // mean response time of successful requests
  double ert_ms = 0.0;          // SLA expected response time
};

struct TimelinessInputs {
  double t_request = 0.0;          // seconds; when the data was received
  double t_produced = 0.0;         // seconds; when the data was produced
  double validity_interval = 0.0;  // seconds the data stays fresh; > 0
};

/// An evaluated performance or data-quality level for one service.
struct FactorLevel {
  std::string service_id;
  FactorKind kind = FactorKind::Performance;
  double value = 0.0;  // in [0,1]
  double evaluated_at = 0.0;
};

namespace detail {

inline void check_counters(const PerformanceInputs& in) {
  if (in.n_total < 0 || in.n_accepted < 0 || in.n_success < 0 ||
      in.n_success > in.n_accepted || in.n_accepted > in.n_total)
    throw InvalidInputError("inconsistent request counters");
  if (!(in.rt_mean_ms >= 0.0))
    throw InvalidInputError("rt_mean_ms must be >= 0");
}

inline void check_unit(double v, const char* name) {
  if (!(v >= 0.0 && v <= 1.0))
    throw InvalidInputError(std::string(name) + " must be in [0,1]");
}

}  // namespace detail

/// Fraction of submitted requests the service accepted. With zero submitted
/// requests there is no evidence at all, which is an error rather than a
/// made-up value.
inline double availability(const PerformanceInputs& in) {
  detail::check_counters(in);
  if (in.n_total == 0) throw NoDataError("no requests recorded");
  return static_cast<double>(in.n_accepted) / static_cast<double>(in.n_total);
}

/// Fraction of accepted requests whose data reached the consumer. A service
/// that accepted nothing delivered nothing, so this is 0 when n_accepted is
/// 0; availability already accounts for the refusals.
inline double task_success_ratio(const PerformanceInputs& in) {
  detail::check_counters(in);
  if (in.n_accepted == 0) return 0.0;
  return static_cast<double>(in.n_success) / static_cast<double>(in.n_accepted);
}

/// Normalized slack of the observed mean response time under the SLA bound.
/// 0 at and beyond the bound (the branches agree at rt_mean == ert).
inline double time_efficiency(const PerformanceInputs& in) {
  detail::check_counters(in);
  if (!(in.ert_ms > 0.0)) throw InvalidSlaError("ert_ms must be > 0");
  if (in.rt_mean_ms >= in.ert_ms) return 0.0;
  return 1.0 - in.rt_mean_ms / in.ert_ms;
}

/// Weighted combination of the three performance metrics.
inline double performance(const PerformanceInputs& in,
                          const PerformanceWeights& w) {
  return w.availability() * availability(in) +
         w.task_success() * task_success_ratio(in) +
         w.time_efficiency() * time_efficiency(in);
}

/// Per-item freshness: linear decay from production time over the validity
/// interval. 0 once the interval has elapsed. A production timestamp in the
/// future of the request (clock skew) clamps to 1; callers that can log
/// should report it, see clock_skewed().
inline double data_timeliness(const TimelinessInputs& in) {
  if (!(in.validity_interval > 0.0))
    throw InvalidInputError("validity_interval must be > 0");
  const double age = in.t_request - in.t_produced;
  if (age >= in.validity_interval) return 0.0;
  if (age < 0.0) return 1.0;
  return 1.0 - age / in.validity_interval;
}

inline bool clock_skewed(const TimelinessInputs& in) {
  return in.t_produced > in.t_request;
}

/// Saturating measure of insertion activity: n insertions per validity
/// interval map to n/(n+1). Strictly increasing in n, 0 at n=0,
/// asymptotic to 1, so services with different insertion paces never tie.
inline double database_timeliness(double insertions_per_validity_interval) {
  const double n = insertions_per_validity_interval;
  if (!(n >= 0.0)) throw InvalidInputError("insertion count must be >= 0");
  return n / (n + 1.0);
}

/// Product of data timeliness and database timeliness.
inline double data_quality(double t_d, double t_db) {
  detail::check_unit(t_d, "t_d");
  detail::check_unit(t_db, "t_db");
  return t_d * t_db;
}

/// Convex combination of the two factor levels: the trust index.
inline double trust_index(double performance_level, double data_quality_level,
                          const TrustWeights& w) {
  detail::check_unit(performance_level, "performance");
  detail::check_unit(data_quality_level, "data_quality");
  return w.alpha() * performance_level + w.beta() * data_quality_level;
}

}  // namespace detect
