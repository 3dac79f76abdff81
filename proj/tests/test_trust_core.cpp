#include "detect/trust_core.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "catch2/catch_amalgamated.hpp"

using namespace detect;

namespace {
constexpr double kTol = 1e-12;

PerformanceInputs counters(std::int64_t total, std::int64_t accepted,
                           std::int64_t success, double rt = 0.0,
                           double ert = 1.0) {
  return PerformanceInputs{total, accepted, success, rt, ert};
}
}  // namespace

TEST_CASE("availability is the accepted fraction") {
  CHECK(availability(counters(10, 8, 0)) == Catch::Approx(0.8).margin(kTol));
  CHECK(availability(counters(5, 0, 0)) == 0.0);
  CHECK(availability(counters(10, 10, 0)) == 1.0);
}

TEST_CASE("availability with zero submitted requests is an error") {
  CHECK_THROWS_AS(availability(counters(0, 0, 0)), NoDataError);
}

TEST_CASE("counter invariants are enforced") {
  CHECK_THROWS_AS(availability(counters(5, 6, 0)), InvalidInputError);
  CHECK_THROWS_AS(availability(counters(5, 3, 4)), InvalidInputError);
  CHECK_THROWS_AS(availability(counters(-1, 0, 0)), InvalidInputError);
  CHECK_THROWS_AS(time_efficiency(counters(5, 5, 5, -1.0, 10.0)),
                  InvalidInputError);
}

TEST_CASE("task success ratio over accepted requests") {
  CHECK(task_success_ratio(counters(12, 10, 9)) == Catch::Approx(0.9).margin(kTol));
  CHECK(task_success_ratio(counters(8, 7, 7)) == 1.0);
}

TEST_CASE("task success ratio degenerates to zero when nothing was accepted") {
  CHECK(task_success_ratio(counters(5, 0, 0)) == 0.0);
}

TEST_CASE("time efficiency under and over the SLA bound") {
  CHECK(time_efficiency(counters(1, 1, 1, 50.0, 200.0)) ==
        Catch::Approx(0.75).margin(kTol));
  CHECK(time_efficiency(counters(1, 1, 1, 250.0, 200.0)) == 0.0);
}

TEST_CASE("time efficiency branches agree at the bound") {
  // Equality is assigned to the zero branch; the linear branch tends to 0.
  CHECK(time_efficiency(counters(1, 1, 1, 200.0, 200.0)) == 0.0);
  CHECK(time_efficiency(counters(1, 1, 1, 200.0 - 1e-7, 200.0)) ==
        Catch::Approx(0.0).margin(1e-8));
}

TEST_CASE("time efficiency rejects a non-positive SLA bound") {
  CHECK_THROWS_AS(time_efficiency(counters(1, 1, 1, 10.0, 0.0)), InvalidSlaError);
  CHECK_THROWS_AS(time_efficiency(counters(1, 1, 1, 10.0, -5.0)), InvalidSlaError);
}

TEST_CASE("performance combines the three metrics") {
  // Av = 80/100, TSR = 72/80 = 0.9, TE = 1 - 50/200 = 0.75, equal weights.
  const auto ex = counters(100, 80, 72, 50.0, 200.0);
  CHECK(availability(ex) == Catch::Approx(0.8).margin(kTol));
  CHECK(task_success_ratio(ex) == Catch::Approx(0.9).margin(kTol));
  CHECK(time_efficiency(ex) == Catch::Approx(0.75).margin(kTol));
  CHECK(performance(ex, PerformanceWeights::equal()) ==
        Catch::Approx((0.8 + 0.9 + 0.75) / 3.0).margin(kTol));
}

TEST_CASE("performance identity and zero cases") {
  PerformanceInputs perfect = counters(10, 10, 10, 0.0, 100.0);
  CHECK(performance(perfect, PerformanceWeights(0.2, 0.3, 0.5)) == 1.0);
  CHECK(performance(perfect, PerformanceWeights::equal()) ==
        Catch::Approx(1.0).margin(kTol));
  PerformanceInputs dead = counters(10, 0, 0, 0.0, 100.0);
  CHECK(performance(dead, PerformanceWeights::equal()) == 0.0);
}

TEST_CASE("data timeliness decays linearly over the validity interval") {
  CHECK(data_timeliness({30.0, 0.0, 60.0}) == Catch::Approx(0.5).margin(kTol));
  CHECK(data_timeliness({90.0, 0.0, 60.0}) == 0.0);
}

TEST_CASE("data timeliness clamps clock skew to one") {
  CHECK(data_timeliness({-2.0, 0.0, 60.0}) == 1.0);
  CHECK(clock_skewed({-2.0, 0.0, 60.0}));
  CHECK_FALSE(clock_skewed({2.0, 0.0, 60.0}));
}

TEST_CASE("data timeliness branches agree at the expiry instant") {
  CHECK(data_timeliness({60.0, 0.0, 60.0}) == 0.0);
  CHECK(data_timeliness({60.0 - 1e-7, 0.0, 60.0}) ==
        Catch::Approx(0.0).margin(1e-8));
}

TEST_CASE("data timeliness requires a positive validity interval") {
  CHECK_THROWS_AS(data_timeliness({1.0, 0.0, 0.0}), InvalidInputError);
}

TEST_CASE("database timeliness saturates with insertion count") {
  CHECK(database_timeliness(3.0) == Catch::Approx(0.75).margin(kTol));
  CHECK(database_timeliness(0.0) == 0.0);
  CHECK(database_timeliness(1.5) == Catch::Approx(0.6).margin(kTol));
  CHECK(database_timeliness(0.4) == Catch::Approx(2.0 / 7.0).margin(kTol));
  CHECK(database_timeliness(1.5) > database_timeliness(0.4));
  CHECK_THROWS_AS(database_timeliness(-0.1), InvalidInputError);
}

TEST_CASE("database timeliness is strictly monotone") {
  std::mt19937_64 rng(7);
  for (int i = 0; i < 1000; ++i) {
    const double a = (rng() >> 11) * 0x1.0p-53 * 100.0;
    const double b = a + 1e-6 + (rng() >> 11) * 0x1.0p-53 * 10.0;
    CHECK(database_timeliness(a) < database_timeliness(b));
  }
}

TEST_CASE("data quality is the product of the two timeliness measures") {
  CHECK(data_quality(0.5, 0.5) == Catch::Approx(0.25).margin(kTol));
  CHECK(data_quality(1.0, 0.75) == Catch::Approx(0.75).margin(kTol));
  CHECK(data_quality(0.0, 0.9) == 0.0);
  CHECK_THROWS_AS(data_quality(1.2, 0.5), InvalidInputError);
  CHECK_THROWS_AS(data_quality(0.5, -0.1), InvalidInputError);
}

TEST_CASE("trust index is the weighted combination") {
  CHECK(trust_index(0.8, 0.4, TrustWeights(0.5, 0.5)) ==
        Catch::Approx(0.6).margin(kTol));
  CHECK(trust_index(0.83, 0.12, TrustWeights(1.0, 0.0)) ==
        Catch::Approx(0.83).margin(kTol));
  CHECK(trust_index(0.99, 0.37, TrustWeights(0.0, 1.0)) ==
        Catch::Approx(0.37).margin(kTol));
  CHECK_THROWS_AS(trust_index(1.2, 0.5, TrustWeights(0.5, 0.5)),
                  InvalidInputError);
}

TEST_CASE("trust weights are validated at construction") {
  CHECK_NOTHROW(TrustWeights(0.5, 0.5));
  CHECK_NOTHROW(TrustWeights(0.5, 0.5 + 1e-10));
  CHECK_THROWS_AS(TrustWeights(0.9, 0.3), InvalidInputError);
  CHECK_THROWS_AS(TrustWeights(0.5, 0.5 + 2e-9), InvalidInputError);
  CHECK_THROWS_AS(TrustWeights(-0.1, 1.1), InvalidInputError);
}

TEST_CASE("performance weights are validated at construction") {
  CHECK_NOTHROW(PerformanceWeights::equal());
  CHECK_THROWS_AS(PerformanceWeights(0.5, 0.5, 0.5), InvalidInputError);
  CHECK_THROWS_AS(PerformanceWeights(-0.2, 0.7, 0.5), InvalidInputError);
}

TEST_CASE("all metrics stay in the unit interval on random valid inputs") {
  std::mt19937_64 rng(11);
  const auto uniform = [&rng] { return (rng() >> 11) * 0x1.0p-53; };
  for (int i = 0; i < 2000; ++i) {
    const std::int64_t total = 1 + static_cast<std::int64_t>(uniform() * 100);
    const std::int64_t accepted =
        static_cast<std::int64_t>(uniform() * static_cast<double>(total + 1));
    const std::int64_t success =
        static_cast<std::int64_t>(uniform() * static_cast<double>(accepted + 1));
    PerformanceInputs in;
    in.n_total = total;
    in.n_accepted = std::min(accepted, total);
    in.n_success = std::min(success, in.n_accepted);
    in.rt_mean_ms = uniform() * 2000.0;
    in.ert_ms = 1.0 + uniform() * 1000.0;
    for (double v : {availability(in), task_success_ratio(in), time_efficiency(in),
                     performance(in, PerformanceWeights::equal())}) {
      CHECK(v >= 0.0);
      CHECK(v <= 1.0);
    }
    TimelinessInputs tin;
    tin.t_request = uniform() * 1000.0;
    tin.t_produced = uniform() * 1000.0;  // may exceed t_request: skew path
    tin.validity_interval = 0.1 + uniform() * 100.0;
    const double td = data_timeliness(tin);
    CHECK(td >= 0.0);
    CHECK(td <= 1.0);
    const double tdb = database_timeliness(uniform() * 50.0);
    CHECK(tdb >= 0.0);
    CHECK(tdb <= 1.0);
    CHECK(data_quality(td, tdb) <= std::min(td, tdb) + kTol);
  }
}

TEST_CASE("trust index is monotone and convex-bounded") {
  std::mt19937_64 rng(13);
  const auto uniform = [&rng] { return (rng() >> 11) * 0x1.0p-53; };
  for (int i = 0; i < 2000; ++i) {
    const double alpha = uniform();
    const TrustWeights w(alpha, 1.0 - alpha);
    const double p = uniform();
    const double q = uniform();
    const double t = trust_index(p, q, w);
    CHECK(t >= std::min(p, q) - kTol);
    CHECK(t <= std::max(p, q) + kTol);
    const double dp = std::min(1.0, p + uniform() * (1.0 - p));
    const double dq = std::min(1.0, q + uniform() * (1.0 - q));
    CHECK(trust_index(dp, q, w) >= t - kTol);
    CHECK(trust_index(p, dq, w) >= t - kTol);
  }
}
