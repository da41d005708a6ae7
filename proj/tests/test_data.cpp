#include <doctest.h>

#include <algorithm>
#include <set>
#include <unordered_map>

#include "driftqa/csv.hpp"
#include "driftqa/data.hpp"
#include "driftqa/error.hpp"
#include "support/fixtures.hpp"
#include "support/generators.hpp"

using namespace driftqa;
using driftqa::testing::Gen;
using driftqa::testing::TempDir;

namespace {

ErrorKind kind_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.kind();
  }
  FAIL("expected driftqa::Error");
  return ErrorKind::Io;
}

// Rows [0, a) satisfy x0 > 0, the rest do not.
Dataset two_bins(std::size_t a, std::size_t b) {
  Matrix x(a + b, 2);
  std::vector<int> y(a + b);
  std::vector<SampleId> ids(a + b);
  for (std::size_t i = 0; i < a + b; ++i) {
    x(i, 0) = i < a ? 1.0 + static_cast<double>(i % 7) : -1.0 - static_cast<double>(i % 5);
    x(i, 1) = static_cast<double>(i % 11);
    y[i] = static_cast<int>(i % 2);
    ids[i] = static_cast<SampleId>(1000 + i);
  }
  return Dataset(std::move(x), std::move(y), std::move(ids), 2);
}

std::size_t count_bin_a(const Dataset& original, const std::vector<SampleId>& ids, const SplitCondition& c) {
  std::unordered_map<SampleId, std::size_t> row;
  for (std::size_t i = 0; i < original.size(); ++i) row[original.ids()[i]] = i;
  std::size_t n = 0;
  for (SampleId id : ids) n += c.in_bin_a(original.features().row(row.at(id))) ? 1 : 0;
  return n;
}

}  // namespace

TEST_SUITE("csv") {
  TEST_CASE("quoted fields, embedded commas and CRLF") {
    const auto t = csv::parse("a,b\r\n\"x,1\",\"say \"\"hi\"\"\"\r\n2,3\r\n");
    CHECK(t.header == std::vector<std::string>{"a", "b"});
    REQUIRE(t.rows.size() == 2);
    CHECK(t.rows[0] == std::vector<std::string>{"x,1", "say \"hi\""});
    CHECK(t.rows[1] == std::vector<std::string>{"2", "3"});
  }

  TEST_CASE("ragged row is a parse error") {
    CHECK(kind_of([] { csv::parse("a,b\n1\n"); }) == ErrorKind::Parse);
  }

  TEST_CASE("empty text has no header") {
    CHECK(kind_of([] { csv::parse(""); }) == ErrorKind::EmptyInput);
  }

  TEST_CASE("format_double round-trips") {
    Gen g(7);
    for (int i = 0; i < 2000; ++i) {
      const double v = g.normal(0, 1e3) * std::pow(10.0, g.normal(0, 5));
      double back = 0;
      REQUIRE(csv::parse_double(csv::format_double(v), back));
      CHECK(back == v);
    }
  }

  TEST_CASE("parse_double is strict") {
    double v = 0;
    CHECK_FALSE(csv::parse_double("1.5x", v));
    CHECK_FALSE(csv::parse_double("", v));
    CHECK(csv::parse_double("-2.5e3", v));
    CHECK(v == -2500.0);
  }
}

TEST_SUITE("data") {
  TEST_CASE("dataset invariants") {
    Matrix x(2, 1);
    CHECK(kind_of([&] { Dataset(x, {0, 2}, {1, 2}, 2); }) == ErrorKind::Domain);
    CHECK(kind_of([&] { Dataset(x, {0, 1}, {1, 1}, 2); }) == ErrorKind::Schema);
    CHECK(kind_of([&] { Dataset(x, {0}, {1}, 2); }) == ErrorKind::Shape);
  }

  TEST_CASE("load_csv: three rows, two numeric features") {
    TempDir dir;
    const auto p = dir.write("d.csv", "f1,f2,label\n1,2,0\n3,4,1\n5,6,0\n");
    const Dataset ds = load_csv(p, {"label", std::nullopt, {}});
    CHECK(ds.size() == 3);
    CHECK(ds.dim() == 2);
    CHECK(ds.class_count() == 2);
    CHECK(ds.ids() == std::vector<SampleId>{0, 1, 2});
    CHECK(ds.features()(2, 1) == 6.0);
  }

  TEST_CASE("load_csv: missing label column is a schema error") {
    TempDir dir;
    const auto p = dir.write("d.csv", "f1,f2\n1,2\n");
    CHECK(kind_of([&] { load_csv(p, {"label", std::nullopt, {}}); }) == ErrorKind::Schema);
  }

  TEST_CASE("load_csv: categorical column encoded by sorted vocabulary") {
    TempDir dir;
    const auto p = dir.write("d.csv", "contact,age,y\nphone,30,no\ncell,40,yes\nphone,50,no\n");
    const Dataset ds = load_csv(p, {"y", std::nullopt, {"contact"}});
    CHECK(ds.features()(0, 0) == 1.0);
    CHECK(ds.features()(1, 0) == 0.0);
    CHECK(ds.vocabularies()[0] == std::vector<std::string>{"cell", "phone"});
    CHECK(ds.labels() == std::vector<int>{0, 1, 0});

    const SplitCondition c = parse_condition(ds, "contact=cell");
    CHECK(c.in_bin_a(ds.features().row(1)));
    CHECK_FALSE(c.in_bin_a(ds.features().row(0)));
  }

  TEST_CASE("load_csv: unparseable cell names row and column") {
    TempDir dir;
    const auto p = dir.write("d.csv", "a,b,label\n1,2,0\n3,oops,1\n");
    try {
      load_csv(p, {"label", std::nullopt, {}});
      FAIL("expected parse error");
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::Parse);
      const std::string msg = e.what();
      CHECK(msg.find("row 2") != std::string::npos);
      CHECK(msg.find("'b'") != std::string::npos);
    }
  }

  TEST_CASE("load_csv: empty file and header-only file") {
    TempDir dir;
    CHECK(kind_of([&] { load_csv(dir.write("e.csv", ""), {"label", std::nullopt, {}}); }) ==
          ErrorKind::EmptyInput);
    CHECK(kind_of([&] { load_csv(dir.write("h.csv", "a,label\n"), {"label", std::nullopt, {}}); }) ==
          ErrorKind::EmptyInput);
  }

  TEST_CASE("load_csv: id column and write_csv round trip") {
    TempDir dir;
    const auto p = dir.write("d.csv", "key,a,label\n17,0.5,1\n4,0.25,0\n");
    const Dataset ds = load_csv(p, {"label", std::string("key"), {}});
    CHECK(ds.ids() == std::vector<SampleId>{17, 4});
    write_csv(dir / "out.csv", ds);
    const Dataset back = load_csv(dir / "out.csv", {"label", std::string("id"), {}});
    CHECK(back.ids() == ds.ids());
    CHECK(back.features() == ds.features());
    CHECK(back.labels() == ds.labels());
  }

  TEST_CASE("parse_condition") {
    const Dataset ds = two_bins(3, 3);
    const SplitCondition c = parse_condition(ds, "x0>0");
    CHECK(c.feature_index == 0);
    CHECK(kind_of([&] { parse_condition(ds, "nope>1"); }) == ErrorKind::Schema);
    CHECK(kind_of([&] { parse_condition(ds, "x0~1"); }) == ErrorKind::Parse);
  }

  TEST_CASE("masked labels are counted") {
    MaskedDataset m(two_bins(2, 2));
    CHECK(m.single_reads() == 0);
    CHECK(m.reveal(1) == 1);
    CHECK(m.single_reads() == 1);
    CHECK(m.reveal_all().size() == 4);
    CHECK(m.full_passes() == 1);
    CHECK(m.row_of(1002) == std::optional<std::size_t>(2));
    CHECK_FALSE(m.row_of(5).has_value());
  }

  TEST_CASE("standardizer: zero mean, unit population std, constant column kept finite") {
    Matrix x(4, 2);
    for (std::size_t i = 0; i < 4; ++i) {
      x(i, 0) = static_cast<double>(i);
      x(i, 1) = 3.0;
    }
    const Standardizer s = Standardizer::fit(x);
    const Matrix z = s.apply(x);
    double mean = 0, ss = 0;
    for (std::size_t i = 0; i < 4; ++i) mean += z(i, 0) / 4;
    for (std::size_t i = 0; i < 4; ++i) ss += z(i, 0) * z(i, 0) / 4;
    CHECK(mean == doctest::Approx(0.0));
    CHECK(ss == doctest::Approx(1.0));
    CHECK(z(0, 1) == 0.0);
    CHECK(kind_of([&] { s.apply(Matrix(1, 3)); }) == ErrorKind::Shape);
  }
}

TEST_SUITE("biased_split") {
  TEST_CASE("large-dataset sizes at k=10: test holds 103 from A and 930 from B") {
    const Dataset ds = two_bins(8000, 22000);
    const SplitCondition c = parse_condition(ds, "x0>0");
    const BiasedSplit s = biased_split(ds, c, 10, {20460, 1033, 3100}, 5);
    CHECK(s.test.size() == 1033);
    CHECK(count_bin_a(ds, s.test.ids(), c) == 103);
    CHECK(s.train.size() == 20460);
    CHECK(count_bin_a(ds, s.train.ids(), c) == 2046);
    CHECK(s.pool.size() == 1033);
    CHECK(s.production_eval.size() == 3100 - 1033);
    std::vector<SampleId> prod = s.pool.ids();
    prod.insert(prod.end(), s.production_eval.ids().begin(), s.production_eval.ids().end());
    CHECK(count_bin_a(ds, prod, c) == 2790);
  }

  TEST_CASE("k outside the allowed set is rejected") {
    const Dataset ds = two_bins(50, 50);
    const SplitCondition c = parse_condition(ds, "x0>0");
    CHECK(kind_of([&] { biased_split(ds, c, 50, {10, 10, 20}, 1); }) == ErrorKind::Domain);
    CHECK(kind_of([&] { biased_split(ds, c, 15, {10, 10, 20}, 1); }) == ErrorKind::Domain);
  }

  TEST_CASE("ten-point toy set at k=20") {
    const Dataset ds = two_bins(5, 5);
    const SplitCondition c = parse_condition(ds, "x0>0");
    const BiasedSplit s = biased_split(ds, c, 20, {0, 5, 5}, 3);
    CHECK(count_bin_a(ds, s.test.ids(), c) == 1);
    CHECK(s.test.size() == 5);
  }

  TEST_CASE("capacity error reports required and available counts") {
    const Dataset ds = two_bins(10, 100);
    const SplitCondition c = parse_condition(ds, "x0>0");
    try {
      biased_split(ds, c, 90, {20, 10, 20}, 1);
      FAIL("expected capacity error");
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::Capacity);
      const std::string msg = e.what();
      CHECK(msg.find("needs 29 rows in bin A") != std::string::npos);
      CHECK(msg.find("have 10") != std::string::npos);
    }
  }

  TEST_CASE("property: partition, sizes, bin-A fractions, determinism") {
    Gen g(11);
    for (int trial = 0; trial < 40; ++trial) {
      const std::size_t a = g.size_in(300, 600);
      const std::size_t b = g.size_in(300, 600);
      const Dataset ds = two_bins(a, b);
      const SplitCondition c = parse_condition(ds, "x0>0");
      const int k = kAllowedProportions[g.size_in(0, 7)];
      const SplitSizes sizes{g.size_in(0, 100), g.size_in(1, 100), 0};
      SplitSizes sz = sizes;
      sz.prod = sz.test + g.size_in(0, 100);
      const std::uint64_t seed = g.size_in(0, 1u << 30);
      const BiasedSplit s = biased_split(ds, c, k, sz, seed);

      std::set<SampleId> seen;
      std::size_t total = 0;
      for (const auto* ids : {&s.train.ids(), &s.test.ids(), &s.pool.ids(), &s.production_eval.ids()}) {
        seen.insert(ids->begin(), ids->end());
        total += ids->size();
      }
      CHECK(seen.size() == total);
      CHECK(s.pool.size() == s.test.size());
      CHECK(s.train.size() == sz.train);
      CHECK(s.pool.size() + s.production_eval.size() == sz.prod);

      const double frac = static_cast<double>(count_bin_a(ds, s.test.ids(), c)) / static_cast<double>(sz.test);
      CHECK(std::abs(frac - k / 100.0) <= 1.0 / static_cast<double>(sz.test) + 1e-12);
      std::vector<SampleId> prod = s.pool.ids();
      prod.insert(prod.end(), s.production_eval.ids().begin(), s.production_eval.ids().end());
      const std::size_t prod_a = count_bin_a(ds, prod, c);
      CHECK(prod_a == (100 - k) * sz.prod / 100);

      const BiasedSplit again = biased_split(ds, c, k, sz, seed);
      CHECK(again.test.ids() == s.test.ids());
      CHECK(again.pool.ids() == s.pool.ids());
      CHECK(again.test.features() == s.test.features());
    }
  }

  TEST_CASE("manifest replays bit-exactly through JSON") {
    const Dataset ds = two_bins(400, 400);
    const SplitCondition c = parse_condition(ds, "x0>0");
    const BiasedSplit s = biased_split(ds, c, 30, {100, 80, 200}, 42);
    const SplitManifest m = manifest_from_json(nlohmann::json::parse(to_json(make_manifest(s)).dump()));
    const BiasedSplit r = replay_manifest(ds, m);
    CHECK(r.train.features() == s.train.features());
    CHECK(r.test.features() == s.test.features());
    CHECK(r.pool.features() == s.pool.features());
    CHECK(r.production_eval.ids() == s.production_eval.ids());
    CHECK(r.condition == s.condition);

    SplitManifest bad = m;
    bad.pool_ids.push_back(bad.test_ids.front());
    CHECK(kind_of([&] { replay_manifest(ds, bad); }) == ErrorKind::Consistency);
  }
}

TEST_SUITE("carve_pool") {
  TEST_CASE("1660 production rows, pool 553 leaves 1107") {
    const Dataset prod = two_bins(800, 860);
    const PoolCarve c = carve_pool(prod, 553, 9);
    CHECK(c.pool.size() == 553);
    CHECK(c.production_eval.size() == 1107);
  }

  TEST_CASE("pool of zero leaves production intact") {
    const Dataset prod = two_bins(10, 10);
    const PoolCarve c = carve_pool(prod, 0, 9);
    CHECK(c.pool.size() == 0);
    CHECK(c.production_eval.ids() == prod.ids());
  }

  TEST_CASE("oversized pool and determinism") {
    const Dataset prod = two_bins(10, 10);
    CHECK(kind_of([&] { carve_pool(prod, 21, 1); }) == ErrorKind::Capacity);
    CHECK(carve_pool(prod, 7, 3).pool.ids() == carve_pool(prod, 7, 3).pool.ids());
  }
}
