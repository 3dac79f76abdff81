#include "detect/tmm.hpp"

#include <filesystem>
#include <random>

#include "catch2/catch_amalgamated.hpp"

using namespace detect;

namespace {

struct Fixture {
  PerfDb perf;
  EdqStore edq;
  TrustHistory history;
  TrustEngine engine{perf, edq, history, 600.0};

  void factor(const std::string& id, double p, double q, double at = 300.0) {
    perf.put(FactorLevel{id, FactorKind::Performance, p, at});
    edq.put(DataQualityLevel{id, at, q, 1.0, q});
  }
};

}  // namespace

TEST_CASE("trust evaluation applies the weighted combination") {
  Fixture fx;
  fx.factor("svc", 0.9, 0.3);
  const auto rec = fx.engine.evaluate_trust("svc", TrustWeights(0.7, 0.3), 400.0);
  CHECK(rec.trust == Catch::Approx(0.72).margin(1e-12));
  CHECK(rec.performance == 0.9);
  CHECK(rec.data_quality == 0.3);
  CHECK(rec.requested_at == 400.0);
  CHECK(fx.history.size() == 1);
}

TEST_CASE("alpha one reproduces the performance level exactly") {
  Fixture fx;
  fx.factor("svc", 0.8351, 0.1);
  const auto rec = fx.engine.evaluate_trust("svc", TrustWeights(1.0, 0.0), 400.0);
  CHECK(rec.trust == 0.8351);
}

TEST_CASE("a missing factor is an error naming the service") {
  Fixture fx;
  fx.perf.put(FactorLevel{"svc", FactorKind::Performance, 0.9, 300.0});
  try {
    fx.engine.evaluate_trust("svc", TrustWeights(0.5, 0.5), 400.0);
    FAIL("expected MissingFactorError");
  } catch (const MissingFactorError& e) {
    CHECK(e.service_id == "svc");
    CHECK(std::string(e.what()).find("data-quality") != std::string::npos);
  }
  CHECK(fx.history.size() == 0);
}

TEST_CASE("stale factors count as missing") {
  Fixture fx;
  fx.factor("svc", 0.9, 0.5, 300.0);
  CHECK_NOTHROW(fx.engine.evaluate_trust("svc", TrustWeights(0.5, 0.5), 900.0));
  CHECK_THROWS_AS(fx.engine.evaluate_trust("svc", TrustWeights(0.5, 0.5), 901.0),
                  MissingFactorError);
}

TEST_CASE("ranking sorts by trust with id tie-break") {
  Fixture fx;
  fx.factor("a", 0.5, 0.5);
  fx.factor("b", 0.9, 0.1);
  fx.factor("c", 0.5, 0.5);  // ties with a at any weights
  const auto ranking =
      fx.engine.rank_services({"c", "b", "a"}, TrustWeights(1.0, 0.0), 400.0);
  REQUIRE(ranking.entries.size() == 3);
  CHECK(ranking.entries[0].service_id == "b");
  CHECK(ranking.entries[1].service_id == "a");
  CHECK(ranking.entries[2].service_id == "c");
  CHECK(ranking.omitted.empty());
}

TEST_CASE("services without factors are omitted and reported") {
  Fixture fx;
  fx.factor("a", 0.5, 0.5);
  fx.perf.put(FactorLevel{"b", FactorKind::Performance, 0.9, 300.0});
  const auto ranking =
      fx.engine.rank_services({"a", "b"}, TrustWeights(0.5, 0.5), 400.0);
  REQUIRE(ranking.entries.size() == 1);
  CHECK(ranking.entries[0].service_id == "a");
  REQUIRE(ranking.omitted.size() == 1);
  CHECK(ranking.omitted[0].service_id == "b");
}

TEST_CASE("an unevaluable fleet is an empty-ranking error") {
  Fixture fx;
  CHECK_THROWS_AS(fx.engine.rank_services({"a", "b"}, TrustWeights(0.5, 0.5), 1.0),
                  EmptyRankingError);
}

TEST_CASE("extreme weights rank by a single factor") {
  Fixture fx;
  std::mt19937_64 rng(5);
  const auto uniform = [&rng] { return (rng() >> 11) * 0x1.0p-53; };
  std::vector<std::string> ids;
  for (int i = 0; i < 8; ++i) {
    const std::string id = "svc" + std::to_string(i);
    ids.push_back(id);
    fx.factor(id, uniform(), uniform());
  }
  const auto by_perf = fx.engine.rank_services(ids, TrustWeights(1.0, 0.0), 400.0);
  for (std::size_t i = 1; i < by_perf.entries.size(); ++i)
    CHECK(by_perf.entries[i - 1].performance >= by_perf.entries[i].performance);
  const auto by_quality =
      fx.engine.rank_services(ids, TrustWeights(0.0, 1.0), 400.0);
  for (std::size_t i = 1; i < by_quality.entries.size(); ++i)
    CHECK(by_quality.entries[i - 1].data_quality >=
          by_quality.entries[i].data_quality);
}

TEST_CASE("sweep columns match a recomputation from the same snapshot") {
  Fixture fx;
  std::mt19937_64 rng(6);
  const auto uniform = [&rng] { return (rng() >> 11) * 0x1.0p-53; };
  std::vector<std::string> ids;
  for (int i = 0; i < 7; ++i) {
    const std::string id = "svc" + std::to_string(i);
    ids.push_back(id);
    fx.factor(id, uniform(), uniform());
  }
  for (double alpha : {1.0, 0.7, 0.5, 0.3, 0.0}) {
    const TrustWeights w(alpha, 1.0 - alpha);
    const auto ranking = fx.engine.rank_services(ids, w, 400.0);
    // recompute scores straight from the stored factor levels
    std::vector<std::pair<double, std::string>> expected;
    for (const auto& id : ids)
      expected.emplace_back(
          trust_index(fx.perf.latest(id).value, fx.edq.latest(id).value, w), id);
    std::sort(expected.begin(), expected.end(), [](const auto& a, const auto& b) {
      if (a.first != b.first) return a.first > b.first;
      return a.second < b.second;
    });
    REQUIRE(expected.size() == ranking.entries.size());
    for (std::size_t i = 0; i < expected.size(); ++i)
      CHECK(expected[i].second == ranking.entries[i].service_id);
  }
}

TEST_CASE("history returns records in range and in order") {
  Fixture fx;
  fx.factor("svc", 0.9, 0.3);
  fx.engine.evaluate_trust("svc", TrustWeights(0.5, 0.5), 310.0);
  fx.engine.evaluate_trust("svc", TrustWeights(0.7, 0.3), 320.0);
  fx.engine.evaluate_trust("svc", TrustWeights(1.0, 0.0), 330.0);
  const auto all = fx.history.for_service("svc");
  REQUIRE(all.size() == 3);
  CHECK(all[0].requested_at == 310.0);
  CHECK(all[2].requested_at == 330.0);
  CHECK(fx.history.in_range("svc", 315.0, 325.0).size() == 1);
  CHECK(fx.history.in_range("svc", 1000.0, 2000.0).empty());
}

TEST_CASE("every record is self-consistent") {
  Fixture fx;
  std::mt19937_64 rng(8);
  const auto uniform = [&rng] { return (rng() >> 11) * 0x1.0p-53; };
  for (int i = 0; i < 200; ++i) {
    const std::string id = "svc" + std::to_string(i);
    fx.factor(id, uniform(), uniform());
    const double alpha = uniform();
    fx.engine.evaluate_trust(id, TrustWeights(alpha, 1.0 - alpha), 400.0);
  }
  for (int i = 0; i < 200; ++i) {
    for (const auto& rec : fx.history.for_service("svc" + std::to_string(i))) {
      CHECK(rec.trust == rec.alpha * rec.performance + rec.beta * rec.data_quality);
      CHECK(rec.alpha + rec.beta == Catch::Approx(1.0).margin(1e-9));
    }
  }
}

TEST_CASE("history persists and reloads bit-exactly") {
  Fixture fx;
  fx.factor("a", 1.0 / 3.0, 2.0 / 7.0);
  fx.factor("b", 0.987654321098765, 0.111111111111111);
  fx.engine.evaluate_trust("a", TrustWeights(0.3, 0.7), 400.0);
  fx.engine.evaluate_trust("b", TrustWeights(0.123456789, 0.876543211), 401.0);
  const auto path =
      std::filesystem::temp_directory_path() / "trust_history_test.csv";
  fx.history.save(path);
  const auto loaded = TrustHistory::load(path);
  REQUIRE(loaded.size() == 2);
  const auto a0 = fx.history.for_service("a").at(0);
  const auto a1 = loaded.for_service("a").at(0);
  CHECK(a0.requested_at == a1.requested_at);
  CHECK(a0.alpha == a1.alpha);
  CHECK(a0.beta == a1.beta);
  CHECK(a0.performance == a1.performance);
  CHECK(a0.data_quality == a1.data_quality);
  CHECK(a0.trust == a1.trust);
  const auto b0 = fx.history.for_service("b").at(0);
  const auto b1 = loaded.for_service("b").at(0);
  CHECK(b0.trust == b1.trust);
  CHECK(b0.alpha == b1.alpha);
  std::filesystem::remove(path);
}

TEST_CASE("the report document carries ranking, weights and omissions") {
  Fixture fx;
  fx.factor("a", 0.5, 0.5);
  const auto ranking = fx.engine.rank_services({"a", "b"}, TrustWeights(0.5, 0.5),
                                               400.0);
  const auto report = trust_report_json(ranking);
  CHECK(report.at("requested_at") == 400.0);
  CHECK(report.at("weights").at("alpha") == 0.5);
  REQUIRE(report.at("ranking").size() == 1);
  const auto& entry = report.at("ranking").at(0);
  CHECK(entry.at("rank") == 1);
  CHECK(entry.at("service_id") == "a");
  CHECK(entry.contains("trust"));
  CHECK(entry.contains("performance"));
  CHECK(entry.contains("data_quality"));
  CHECK(entry.contains("performance_evaluated_at"));
  CHECK(entry.contains("data_quality_evaluated_at"));
  REQUIRE(report.at("omitted").size() == 1);
  CHECK(report.at("omitted").at(0).at("service_id") == "b");
}
