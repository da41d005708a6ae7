#include <doctest.h>

#include <cmath>
#include <numeric>

#include "driftqa/error.hpp"
#include "driftqa/predictor.hpp"
#include "support/generators.hpp"
#include "support/oracles.hpp"

using namespace driftqa;
using driftqa::testing::Gen;

namespace {

using Outcomes = std::vector<std::uint8_t>;

void check_against_oracle(const BinnedPredictor& p, const std::vector<double>& s, const Outcomes& o, std::size_t m,
                          const std::vector<std::uint64_t>& reps = {}) {
  const auto oracle = driftqa::testing::oracle_bins(s, o, m, reps);
  REQUIRE(p.bin_count() == m);
  std::uint64_t total = 0;
  for (std::size_t b = 0; b < m; ++b) {
    const auto& bin = p.bins()[b];
    CHECK(bin.count == oracle[b].count);
    CHECK(std::abs(bin.accuracy - oracle[b].mean) <= 1e-12);
    CHECK(std::abs(bin.sigma - oracle[b].sd) <= 1e-12);
    total += bin.count;
  }
  CHECK(total == p.sample_count());
}

}  // namespace

TEST_SUITE("predictor") {
  TEST_CASE("two bins: s=[0.1,0.9,0.8], o=[0,1,0]") {
    const BinnedPredictor p = BinnedPredictor::fit(std::vector<double>{0.1, 0.9, 0.8}, Outcomes{0, 1, 0}, 2);
    REQUIRE(p.bin_count() == 2);
    CHECK(p.bins()[0].lower == 0.0);
    CHECK(p.bins()[0].upper == 0.5);
    CHECK(p.bins()[0].accuracy == 0.0);
    CHECK(p.bins()[0].sigma == 0.0);
    CHECK(p.bins()[0].count == 1);
    CHECK(p.bins()[1].accuracy == 0.5);
    CHECK(p.bins()[1].sigma == 0.5);
    CHECK(p.bins()[1].count == 2);
    CHECK(p.bins()[1].upper == 1.0);

    const InstancePrediction at = p.predict(0.7);
    CHECK(at.accuracy == 0.5);
    CHECK(at.sigma == 0.5);
    CHECK(p.predict_batch(std::vector<double>{0.1, 0.9}) == 0.25);
  }

  TEST_CASE("constant outcomes give accuracy 1 and sigma 0") {
    const BinnedPredictor p = BinnedPredictor::fit(std::vector<double>{0.05, 0.33, 0.91, 0.92}, Outcomes{1, 1, 1, 1}, 10);
    for (const auto& b : p.bins()) {
      if (b.empty()) continue;
      CHECK(b.accuracy == 1.0);
      CHECK(b.sigma == 0.0);
    }
  }

  TEST_CASE("confidence 1.0 lands in the last, closed bin") {
    const BinnedPredictor p = BinnedPredictor::fit(std::vector<double>{1.0}, Outcomes{1}, 10);
    CHECK(p.bin_of(1.0) == 9);
    CHECK(p.bins()[9].count == 1);
  }

  TEST_CASE("half-open boundary: 0.49 and 0.50 differ with two bins") {
    const BinnedPredictor p = BinnedPredictor::fit(std::vector<double>{0.2}, Outcomes{1}, 2);
    CHECK(p.bin_of(0.49) == 0);
    CHECK(p.bin_of(0.50) == 1);
  }

  TEST_CASE("empty bin falls back to global accuracy with sigma 0.5") {
    const BinnedPredictor p = BinnedPredictor::fit(std::vector<double>{0.95, 0.96, 0.97}, Outcomes{1, 0, 0}, 10);
    const InstancePrediction at = p.predict(0.2);
    CHECK(at.accuracy == doctest::Approx(1.0 / 3.0).epsilon(1e-15));
    CHECK(at.sigma == 0.5);
  }

  TEST_CASE("errors") {
    const std::vector<double> none;
    CHECK_THROWS_AS(BinnedPredictor::fit(none, Outcomes{}, 10), Error);
    CHECK_THROWS_AS(BinnedPredictor::fit(std::vector<double>{1.5}, Outcomes{1}, 10), Error);
    CHECK_THROWS_AS(BinnedPredictor::fit(std::vector<double>{0.5}, Outcomes{1}, 0), Error);
    CHECK_THROWS_AS(BinnedPredictor::fit(std::vector<double>{0.5, 0.6}, Outcomes{1}, 10), Error);
    const BinnedPredictor p = BinnedPredictor::fit(std::vector<double>{0.5}, Outcomes{1}, 10);
    CHECK_THROWS_AS(p.predict(-0.1), Error);
    CHECK_THROWS_AS(p.predict_batch(none), Error);
    try {
      BinnedPredictor::fit(none, Outcomes{}, 10);
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::EmptyInput);
    }
  }

  TEST_CASE("bins tile [0,1] with equal widths") {
    for (std::size_t m : {1u, 3u, 7u, 10u, 20u}) {
      const BinnedPredictor p = BinnedPredictor::fit(std::vector<double>{0.5}, Outcomes{1}, m);
      CHECK(p.bins().front().lower == 0.0);
      CHECK(p.bins().back().upper == 1.0);
      for (std::size_t i = 0; i + 1 < m; ++i) {
        CHECK(p.bins()[i].upper == p.bins()[i + 1].lower);
        CHECK(p.bins()[i].upper - p.bins()[i].lower == doctest::Approx(1.0 / static_cast<double>(m)));
      }
    }
  }

  TEST_CASE("property: fit matches the brute-force grouping oracle") {
    Gen g(101);
    for (int trial = 0; trial < 300; ++trial) {
      const std::size_t m = std::array<std::size_t, 4>{1, 5, 10, 20}[g.size_in(0, 3)];
      const std::size_t n = g.size_in(1, 400);
      const auto s = g.confidences(n, m);
      const auto o = g.outcomes(n, g.unit());
      check_against_oracle(BinnedPredictor::fit(s, o, m), s, o, m);
    }
  }

  TEST_CASE("property: integer weights equal explicit replication, bitwise") {
    Gen g(202);
    for (int trial = 0; trial < 200; ++trial) {
      const std::size_t m = g.size_in(1, 20);
      const std::size_t n = g.size_in(1, 100);
      const auto s = g.confidences(n, m);
      const auto o = g.outcomes(n, g.unit());
      std::vector<std::uint64_t> reps(n);
      for (auto& r : reps) r = g.size_in(0, 5);
      reps[g.size_in(0, n - 1)] = 1;  // keep the multiset nonempty

      std::vector<double> s_rep;
      Outcomes o_rep;
      for (std::size_t i = 0; i < n; ++i) {
        for (std::uint64_t r = 0; r < reps[i]; ++r) {
          s_rep.push_back(s[i]);
          o_rep.push_back(o[i]);
        }
      }
      const BinnedPredictor weighted = BinnedPredictor::fit(s, o, m, reps);
      const BinnedPredictor replicated = BinnedPredictor::fit(s_rep, o_rep, m);
      for (std::size_t b = 0; b < m; ++b) {
        CHECK(weighted.bins()[b].count == replicated.bins()[b].count);
        CHECK(weighted.bins()[b].accuracy == replicated.bins()[b].accuracy);
        CHECK(weighted.bins()[b].sigma == replicated.bins()[b].sigma);
      }
      CHECK(weighted.global_accuracy() == replicated.global_accuracy());
      check_against_oracle(weighted, s, o, m, reps);
    }
  }

  TEST_CASE("property: one bin predicts the training mean exactly") {
    Gen g(303);
    for (int trial = 0; trial < 100; ++trial) {
      const std::size_t n = g.size_in(1, 300);
      const auto s = g.confidences(n, 1);
      const auto o = g.outcomes(n, g.unit());
      const BinnedPredictor p = BinnedPredictor::fit(s, o, 1);
      const double mean = std::accumulate(o.begin(), o.end(), 0.0) / static_cast<double>(n);
      const auto batch = g.confidences(g.size_in(1, 50), 1);
      CHECK(p.predict_batch(batch) == doctest::Approx(mean).epsilon(1e-15));
      CHECK(p.global_accuracy() == mean);
    }
  }

  TEST_CASE("property: predictions stay in range") {
    Gen g(404);
    for (int trial = 0; trial < 100; ++trial) {
      const std::size_t m = g.size_in(1, 20);
      const std::size_t n = g.size_in(1, 200);
      const BinnedPredictor p = BinnedPredictor::fit(g.confidences(n, m), g.outcomes(n, g.unit()), m);
      const auto q = g.confidences(50, m);
      const double est = p.predict_batch(q);
      CHECK(est >= 0.0);
      CHECK(est <= 1.0);
      for (double s : q) {
        const auto at = p.predict(s);
        CHECK(at.sigma >= 0.0);
        CHECK(at.sigma <= 0.5);
      }
    }
  }

  TEST_CASE("perfectly labeled production: estimate close to the true accuracy") {
    // Outcomes drawn with Pr(correct) = confidence: the predictor should recover
    // the mean within binning granularity.
    Gen g(505);
    const std::size_t n = 20000;
    std::vector<double> s(n);
    Outcomes o(n);
    for (std::size_t i = 0; i < n; ++i) {
      s[i] = 0.5 + 0.5 * g.unit();
      o[i] = g.coin(s[i]) ? 1 : 0;
    }
    const BinnedPredictor p = BinnedPredictor::fit(s, o, 10);
    const double truth = std::accumulate(o.begin(), o.end(), 0.0) / static_cast<double>(n);
    CHECK(std::abs(p.predict_batch(s) - truth) <= 1.0 / 20.0);
  }

  TEST_CASE("JSON round trip") {
    const BinnedPredictor p = BinnedPredictor::fit(std::vector<double>{0.1, 0.9, 0.8}, Outcomes{0, 1, 0}, 4);
    const BinnedPredictor back = BinnedPredictor::from_json(nlohmann::json::parse(p.to_json().dump()));
    CHECK(back.bin_count() == 4);
    CHECK(back.global_accuracy() == p.global_accuracy());
    for (double s : {0.0, 0.3, 0.8, 1.0}) CHECK(back.predict(s).accuracy == p.predict(s).accuracy);
  }
}
