#include <doctest.h>

#include <cmath>
#include <numeric>

#include "driftqa/basemodel.hpp"
#include "driftqa/error.hpp"
#include "support/fixtures.hpp"
#include "support/generators.hpp"
#include "support/oracles.hpp"

using namespace driftqa;
using driftqa::testing::Gen;
using driftqa::testing::TempDir;

namespace {

void check_simplex(const ScoredDataset& s) {
  for (std::size_t r = 0; r < s.size(); ++r) {
    double sum = 0, top = 0;
    for (double p : s.class_probs.row(r)) {
      CHECK(p >= 0.0);
      sum += p;
      top = std::max(top, p);
    }
    CHECK(std::abs(sum - 1.0) <= 1e-6);
    CHECK(s.confidence[r] == top);
    CHECK(s.confidence[r] >= 1.0 / s.class_count() - 1e-12);
    CHECK(s.confidence[r] <= 1.0);
  }
}

}  // namespace

TEST_SUITE("basemodel") {
  TEST_CASE("separable blobs: nearest-centroid oracle and trained model both reach 0.99") {
    const Dataset ds = driftqa::testing::blobs(200, 8.0, 3);
    REQUIRE(driftqa::testing::nearest_centroid_accuracy(ds.features(), ds.labels(), 2) >= 0.99);
    const LinearSoftmaxModel m = train_builtin(ds, {0.5, 300, 1});
    const ScoredDataset s = score_batch(m, ds, true);
    CHECK(accuracy(s) >= 0.99);
    check_simplex(s);
  }

  TEST_CASE("single-class or undersized training data is degenerate") {
    Matrix x(3, 1);
    const Dataset one_class(x, {1, 1, 1}, {0, 1, 2}, 2);
    CHECK_THROWS_AS(train_builtin(one_class, {}), Error);
    try {
      train_builtin(one_class, {});
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::DegenerateData);
    }
  }

  TEST_CASE("zero epochs gives near-uniform rows on the simplex") {
    const Dataset ds = driftqa::testing::blobs(50, 2.0, 4);
    const LinearSoftmaxModel m = train_builtin(ds, {0.5, 0, 9});
    const ScoredDataset s = score_batch(m, ds, false);
    check_simplex(s);
    for (double c : s.confidence) CHECK(c < 0.6);
  }

  TEST_CASE("training is deterministic given the seed") {
    const Dataset ds = driftqa::testing::blobs(100, 3.0, 5);
    CHECK(train_builtin(ds, {0.5, 50, 2}).weights() == train_builtin(ds, {0.5, 50, 2}).weights());
  }

  TEST_CASE("score_batch: outcomes only when revealed, and shape checked") {
    const Dataset ds = driftqa::testing::blobs(20, 3.0, 6);
    const LinearSoftmaxModel m = train_builtin(ds, {0.5, 20, 2});
    CHECK_FALSE(score_batch(m, ds, false).outcome.has_value());
    const ScoredDataset s = score_batch(m, ds, true);
    REQUIRE(s.outcome.has_value());
    for (std::size_t i = 0; i < s.size(); ++i) {
      CHECK((*s.outcome)[i] == (s.predicted[i] == ds.labels()[i] ? 1 : 0));
    }
    const double mean = std::accumulate(s.outcome->begin(), s.outcome->end(), 0.0) / 20.0;
    CHECK(accuracy(s) == mean);
    CHECK_THROWS_AS(m.score(std::vector<double>{1.0, 2.0, 3.0}), Error);
  }

  TEST_CASE("outcome definition: probs (0.8, 0.2), label 0") {
    Matrix p(1, 2);
    p(0, 0) = 0.8;
    p(0, 1) = 0.2;
    ScoredDataset s = make_scored({1}, p);
    attach_outcomes(s, std::vector<int>{0});
    CHECK(s.predicted[0] == 0);
    CHECK(s.confidence[0] == 0.8);
    CHECK((*s.outcome)[0] == 1);
  }

  TEST_CASE("argmax ties go to the lowest class") {
    Matrix p(1, 3);
    p(0, 0) = 0.25;
    p(0, 1) = 0.375;
    p(0, 2) = 0.375;
    CHECK(make_scored({0}, p).predicted[0] == 1);
  }

  TEST_CASE("random models keep the simplex invariant") {
    Gen g(21);
    for (int trial = 0; trial < 30; ++trial) {
      const std::size_t d = g.size_in(1, 6);
      const int c = static_cast<int>(g.size_in(2, 5));
      Matrix w = g.gaussian_matrix(c, d);
      for (std::size_t r = 0; r < w.rows(); ++r) {
        for (double& v : w.row(r)) v *= 20.0;
      }
      std::vector<double> b(c);
      for (auto& v : b) v = g.normal(0, 30);
      const LinearSoftmaxModel m(w, b);
      const Matrix x = g.gaussian_matrix(40, d);
      std::vector<SampleId> ids(40);
      std::iota(ids.begin(), ids.end(), 0);
      check_simplex(score_features(m, x, ids));
    }
  }

  TEST_CASE("model JSON round trip") {
    const Dataset ds = driftqa::testing::blobs(40, 3.0, 8);
    const LinearSoftmaxModel m = train_builtin(ds, {0.5, 30, 2}, Standardizer::fit(ds.features()));
    const LinearSoftmaxModel back = LinearSoftmaxModel::from_json(nlohmann::json::parse(m.to_json().dump()));
    CHECK(back.weights() == m.weights());
    CHECK(back.bias() == m.bias());
    REQUIRE(back.standardizer().has_value());
    CHECK(back.standardizer()->mean == m.standardizer()->mean);
  }
}

TEST_SUITE("ingest_scores") {
  TEST_CASE("row with label") {
    TempDir dir;
    const ScoredDataset s = ingest_scores(dir.write("s.csv", "id,prob_0,prob_1,label\n7,0.3,0.7,1\n"));
    CHECK(s.ids == std::vector<SampleId>{7});
    CHECK(s.predicted[0] == 1);
    CHECK(s.confidence[0] == 0.7);
    REQUIRE(s.outcome.has_value());
    CHECK((*s.outcome)[0] == 1);
  }

  TEST_CASE("probabilities summing to 1.1 are renormalized") {
    TempDir dir;
    const ScoredDataset s = ingest_scores(dir.write("s.csv", "id,prob_0,prob_1\n1,0.5,0.6\n"));
    CHECK(s.class_probs(0, 0) == doctest::Approx(0.5 / 1.1).epsilon(1e-14));
    CHECK(s.class_probs(0, 1) == doctest::Approx(0.6 / 1.1).epsilon(1e-14));
    CHECK_FALSE(s.outcome.has_value());
  }

  TEST_CASE("negative probability and duplicate id") {
    TempDir dir;
    try {
      ingest_scores(dir.write("a.csv", "id,prob_0,prob_1\n1,-0.1,1.1\n"));
      FAIL("expected parse error");
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::Parse);
    }
    try {
      ingest_scores(dir.write("b.csv", "id,prob_0,prob_1\n1,0.5,0.5\n1,0.2,0.8\n"));
      FAIL("expected schema error");
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::Schema);
    }
  }

  TEST_CASE("write_scores round trip") {
    TempDir dir;
    const Dataset ds = driftqa::testing::blobs(30, 3.0, 8);
    const LinearSoftmaxModel m = train_builtin(ds, {0.5, 30, 2});
    const ScoredDataset s = score_batch(m, ds, false);
    write_scores(dir / "s.csv", s, ds.labels());
    const ScoredDataset back = ingest_scores(dir / "s.csv");
    CHECK(back.ids == s.ids);
    CHECK(back.predicted == s.predicted);
    for (std::size_t i = 0; i < s.size(); ++i) CHECK(back.confidence[i] == doctest::Approx(s.confidence[i]));
    CHECK(accuracy(back) == accuracy(score_batch(m, ds, true)));
  }
}
