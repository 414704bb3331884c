// Apache License, Version 2.0, refer to LICENSE.txt

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <set>
#include <sstream>

#include "vaxbayes/clustering.hpp"
#include "vaxbayes/error.hpp"

using namespace vaxbayes;

namespace {

double distance(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
  return std::sqrt(s);
}

// Linkage distance computed directly from cluster members.
double cluster_distance(const PointSet& points, const std::vector<std::size_t>& a,
                        const std::vector<std::size_t>& b, Linkage linkage) {
  if (linkage == Linkage::Ward) {
    const std::size_t dim = points.front().size();
    std::vector<double> ca(dim, 0.0), cb(dim, 0.0);
    for (auto i : a) {
      for (std::size_t d = 0; d < dim; ++d) ca[d] += points[i][d] / a.size();
    }
    for (auto i : b) {
      for (std::size_t d = 0; d < dim; ++d) cb[d] += points[i][d] / b.size();
    }
    const double na = a.size(), nb = b.size();
    return std::sqrt(2.0 * na * nb / (na + nb)) * distance(ca, cb);
  }
  double best = 0.0;
  for (auto i : a) {
    for (auto j : b) {
      const double d = distance(points[i], points[j]);
      if (linkage == Linkage::Complete) {
        best = std::max(best, d);
      } else {
        best += d / (a.size() * b.size());
      }
    }
  }
  return best;
}

struct OracleMerge {
  std::size_t a, b;
  double height;
};

std::vector<OracleMerge> exhaustive_merges(const PointSet& points, Linkage linkage) {
  std::vector<std::vector<std::size_t>> members;
  std::vector<std::size_t> ids;
  for (std::size_t i = 0; i < points.size(); ++i) {
    members.push_back({i});
    ids.push_back(i);
  }
  std::vector<OracleMerge> merges;
  while (members.size() > 1) {
    double best = std::numeric_limits<double>::infinity();
    std::size_t bi = 0, bj = 0;
    for (std::size_t i = 0; i < members.size(); ++i) {
      for (std::size_t j = i + 1; j < members.size(); ++j) {
        const double d = cluster_distance(points, members[i], members[j], linkage);
        if (d < best) {
          best = d;
          bi = i;
          bj = j;
        }
      }
    }
    merges.push_back({std::min(ids[bi], ids[bj]), std::max(ids[bi], ids[bj]), best});
    members[bi].insert(members[bi].end(), members[bj].begin(), members[bj].end());
    ids[bi] = points.size() + merges.size() - 1;
    members.erase(members.begin() + static_cast<std::ptrdiff_t>(bj));
    ids.erase(ids.begin() + static_cast<std::ptrdiff_t>(bj));
  }
  return merges;
}

PointSet gaussian_points(std::mt19937_64& rng, std::size_t n, std::size_t dim, double sd = 1.0) {
  std::normal_distribution<double> normal(0.0, sd);
  PointSet points(n, std::vector<double>(dim));
  for (auto& p : points) {
    for (double& x : p) x = normal(rng);
  }
  return points;
}

PointSet three_blobs(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  auto points = gaussian_points(rng, 49, kStateFeatureCount);
  for (std::size_t i = 0; i < points.size(); ++i) {
    const std::size_t blob = i % 3;
    if (blob > 0) points[i][blob - 1] += 6.0;
  }
  return points;
}

CountyRateTable county_table(const std::vector<std::pair<std::string, double>>& rows) {
  CountyRateTable table;
  std::size_t n = 0;
  for (const auto& [state, rate] : rows) {
    table.entries.push_back({state, "county" + std::to_string(n++), rate});
  }
  return table;
}

}  // namespace

TEST_CASE("build_state_features: a single county gives a flat summary") {
  const auto features = build_state_features(county_table({{"TX", 60.0}, {"MA", 80.0}, {"MA", 90.0}}));
  REQUIRE(features.states == std::vector<std::string>{"MA", "TX"});
  CHECK(features.county_counts == std::vector<std::size_t>{2, 1});
  const auto& tx = features.raw[1];
  CHECK(tx[0] == 60.0);
  CHECK(tx[1] == 0.0);
  for (std::size_t i = 2; i < kStateFeatureCount; ++i) CHECK(tx[i] == 60.0);
  const auto& ma = features.raw[0];
  CHECK(ma[0] == 85.0);
  CHECK(ma[1] == doctest::Approx(7.0710678).epsilon(1e-7));
  CHECK(std::is_sorted(ma.begin() + 2, ma.end()));
  CHECK_THROWS_AS(build_state_features(CountyRateTable{}), InputError);
}

TEST_CASE("standardized feature columns have mean 0 and sd 1") {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> rate(30.0, 95.0);
  std::vector<std::pair<std::string, double>> rows;
  const std::vector<std::string> states{"AL", "CA", "GA", "MA", "NY", "OH", "TX", "WA"};
  for (const auto& s : states) {
    for (int c = 0; c < 12; ++c) rows.emplace_back(s, rate(rng));
  }
  const auto features = build_state_features(county_table(rows));
  CHECK(features.raw == build_state_features(county_table(rows)).raw);
  for (std::size_t col = 0; col < kStateFeatureCount; ++col) {
    std::vector<double> column;
    for (const auto& row : features.standardized) column.push_back(row[col]);
    CHECK(std::abs(mean(column)) <= 1e-10);
    CHECK(std::abs(sample_sd(column) - 1.0) <= 1e-10);
  }
}

TEST_CASE("agglomerate: two items") {
  const PointSet points{{0.0, 0.0}, {3.0, 4.0}};
  for (auto linkage : {Linkage::Ward, Linkage::Complete, Linkage::Average}) {
    const auto d = agglomerate(points, linkage);
    REQUIRE(d.merges.size() == 1);
    CHECK(d.merges[0].a == 0);
    CHECK(d.merges[0].b == 1);
    CHECK(d.merges[0].height == doctest::Approx(5.0));
    CHECK(d.merges[0].size == 2);
  }
  CHECK_THROWS_AS(agglomerate(PointSet{{1.0}}, Linkage::Ward), InputError);
  CHECK_THROWS_AS(agglomerate(PointSet{{1.0}, {1.0, 2.0}}, Linkage::Ward), InputError);
}

TEST_CASE("agglomerate: two tight pairs merge internally first and cut back exactly") {
  const PointSet points{{0.0, 0.0}, {10.0, 10.0}, {0.1, 0.0}, {10.0, 10.2}};
  for (auto linkage : {Linkage::Ward, Linkage::Complete, Linkage::Average}) {
    const auto d = agglomerate(points, linkage);
    CHECK(d.merges[0].a == 0);
    CHECK(d.merges[0].b == 2);
    CHECK(d.merges[1].a == 1);
    CHECK(d.merges[1].b == 3);
    CHECK(cut_tree(d, 2) == std::vector<std::size_t>{0, 1, 0, 1});
    CHECK(d.leaf_order.size() == 4);
  }
}

TEST_CASE("property: Ward heights are nondecreasing on random data") {
  std::mt19937_64 rng(4);
  for (int trial = 0; trial < 50; ++trial) {
    const auto d = agglomerate(gaussian_points(rng, 30, 5), Linkage::Ward);
    REQUIRE(d.merges.size() == 29);
    for (std::size_t i = 1; i < d.merges.size(); ++i) {
      CHECK(d.merges[i].height >= d.merges[i - 1].height - 1e-12);
    }
    CHECK(d.merges.back().size == 30);
  }
}

TEST_CASE("property: agglomeration agrees with exhaustive nearest-pair search") {
  std::mt19937_64 rng(5);
  std::uniform_int_distribution<std::size_t> size(2, 8);
  for (int trial = 0; trial < 200; ++trial) {
    const auto points = gaussian_points(rng, size(rng), 3);
    for (auto linkage : {Linkage::Ward, Linkage::Complete, Linkage::Average}) {
      const auto d = agglomerate(points, linkage);
      const auto oracle = exhaustive_merges(points, linkage);
      REQUIRE(d.merges.size() == oracle.size());
      for (std::size_t i = 0; i < oracle.size(); ++i) {
        CHECK(d.merges[i].a == oracle[i].a);
        CHECK(d.merges[i].b == oracle[i].b);
        CHECK(d.merges[i].height == doctest::Approx(oracle[i].height).epsilon(1e-9));
      }
    }
  }
}

TEST_CASE("cut_tree: extremes, partition property, and range errors") {
  std::mt19937_64 rng(6);
  const auto d = agglomerate(gaussian_points(rng, 12, 2), Linkage::Average);
  CHECK(cut_tree(d, 1) == std::vector<std::size_t>(12, 0));
  std::vector<std::size_t> singletons(12);
  for (std::size_t i = 0; i < 12; ++i) singletons[i] = i;
  CHECK(cut_tree(d, 12) == singletons);
  for (std::size_t k = 1; k <= 12; ++k) {
    const auto labels = cut_tree(d, k);
    CHECK(std::set<std::size_t>(labels.begin(), labels.end()).size() == k);
    CHECK(*std::max_element(labels.begin(), labels.end()) == k - 1);
  }
  CHECK_THROWS_AS(cut_tree(d, 0), InputError);
  CHECK_THROWS_AS(cut_tree(d, 13), InputError);
}

TEST_CASE("parse_linkage") {
  CHECK(parse_linkage("WARD") == Linkage::Ward);
  CHECK(parse_linkage("complete") == Linkage::Complete);
  CHECK(to_string(Linkage::Average) == "average");
  CHECK_THROWS_AS(parse_linkage("single"), InputError);
}

TEST_CASE("within_dispersion matches the pairwise definition") {
  const PointSet points{{0.0}, {2.0}, {10.0}};
  const std::vector<std::size_t> two{0, 0, 1};
  CHECK(within_dispersion(points, two) == doctest::Approx(2.0));  // 2 * 4 / (2 * 2)
  const std::vector<std::size_t> one{0, 0, 0};
  CHECK(within_dispersion(points, one) == doctest::Approx((4.0 + 100.0 + 64.0) / 3.0));
}

TEST_CASE("gap_statistic finds three separated blobs") {
  int hits = 0;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    GapOptions options;
    options.seed = seed;
    options.workers = 1;
    const auto result = gap_statistic(three_blobs(seed), options);
    hits += result.chosen_k == 3 ? 1 : 0;
    REQUIRE(result.curve.size() == options.k_max);
    for (const auto& entry : result.curve) CHECK(entry.se >= 0.0);
  }
  CHECK(hits >= 9);
}

TEST_CASE("gap_statistic picks one cluster for one blob") {
  int hits = 0;
  for (std::uint64_t seed = 100; seed < 110; ++seed) {
    std::mt19937_64 rng(seed);
    GapOptions options;
    options.seed = seed;
    const auto result =
        gap_statistic(gaussian_points(rng, 49, kStateFeatureCount), options);
    hits += result.chosen_k == 1 ? 1 : 0;
  }
  CHECK(hits >= 9);
}

TEST_CASE("gap_statistic is deterministic and independent of the worker count") {
  const auto points = three_blobs(42);
  GapOptions options;
  options.seed = 9;
  options.workers = 1;
  const auto a = gap_statistic(points, options);
  options.workers = 4;
  const auto b = gap_statistic(points, options);
  REQUIRE(a.curve.size() == b.curve.size());
  CHECK(a.chosen_k == b.chosen_k);
  for (std::size_t i = 0; i < a.curve.size(); ++i) {
    CHECK(a.curve[i].gap == b.curve[i].gap);
    CHECK(a.curve[i].se == b.curve[i].se);
  }
}

TEST_CASE("property: rescaling before standardization leaves the chosen k unchanged") {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    auto points = three_blobs(seed + 50);
    GapOptions options;
    options.seed = seed;
    const auto base = gap_statistic(standardize_columns(points), options);
    for (auto& row : points) {
      for (double& x : row) x *= 37.5;
    }
    CHECK(gap_statistic(standardize_columns(points), options).chosen_k == base.chosen_k);
  }
}

TEST_CASE("gap_statistic error paths") {
  std::mt19937_64 rng(7);
  const auto points = gaussian_points(rng, 8, 2);
  GapOptions options;
  options.k_max = 8;
  CHECK_THROWS_AS(gap_statistic(points, options), InputError);
  options.k_max = 3;
  options.references = 5;
  CHECK_THROWS_AS(gap_statistic(points, options), InputError);
  options.references = 20;
  CHECK_THROWS_AS(gap_statistic(PointSet(8, std::vector<double>{1.0, 2.0}), options), NumericalError);
}

TEST_CASE("summarize_clusters: pooled statistics") {
  const auto table = county_table({{"AL", 60.0}, {"MA", 70.0}, {"TX", 50.0}, {"TX", 52.0}});
  const std::vector<std::string> states{"AL", "MA", "TX"};
  const std::vector<std::size_t> pair{0, 0, 1};
  const auto summary = summarize_clusters(pair, states, table);
  REQUIRE(summary.clusters.size() == 2);
  CHECK(summary.clusters[0].mean == doctest::Approx(65.0));
  CHECK(std::abs(summary.clusters[0].sd - 7.0711) <= 1e-4);
  CHECK(summary.clusters[0].county_count == 2);
  CHECK(summary.clusters[0].members == std::vector<std::string>{"AL", "MA"});

  const std::vector<std::size_t> single{0, 0, 0};
  const auto all = summarize_clusters(single, states, table);
  CHECK(all.clusters[0].mean == doctest::Approx((60.0 + 70.0 + 50.0 + 52.0) / 4.0));

  const std::vector<std::size_t> gap_label{0, 0, 2};
  CHECK_THROWS_AS(summarize_clusters(gap_label, states, table), InputError);
  const std::vector<std::size_t> short_assignment{0, 0};
  CHECK_THROWS_AS(summarize_clusters(short_assignment, states, table), InputError);
}

TEST_CASE("order_clusters_by_rate labels clusters by ascending pooled mean") {
  const auto table = county_table({{"AL", 90.0}, {"MA", 40.0}, {"TX", 70.0}});
  const std::vector<std::string> states{"AL", "MA", "TX"};
  const std::vector<std::size_t> assignment{0, 1, 2};
  CHECK(order_clusters_by_rate(assignment, states, table) == std::vector<std::size_t>{2, 0, 1});
}

TEST_CASE("property: cluster labels do not depend on county row order") {
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> rate(30.0, 95.0);
  const std::vector<std::string> states{"AL", "CA", "CO", "GA", "MA", "NY", "OH", "OR", "TX", "WA"};
  std::vector<std::pair<std::string, double>> rows;
  for (std::size_t s = 0; s < states.size(); ++s) {
    for (int c = 0; c < 6; ++c) rows.emplace_back(states[s], rate(rng) * 0.3 + 10.0 * (s % 3) + 40.0);
  }
  auto labels_for = [&](const std::vector<std::pair<std::string, double>>& input) {
    const auto table = county_table(input);
    const auto features = build_state_features(table);
    const auto d = agglomerate(features.standardized, Linkage::Ward);
    return order_clusters_by_rate(cut_tree(d, 3), features.states, table);
  };
  const auto base = labels_for(rows);
  for (int trial = 0; trial < 10; ++trial) {
    std::shuffle(rows.begin(), rows.end(), rng);
    CHECK(labels_for(rows) == base);
  }
}

TEST_CASE("writers emit the documented records") {
  GapResult gap;
  gap.curve = {{1, 2.0, 2.5, 0.5, 0.1}, {2, 1.0, 1.2, 0.2, 0.1}};
  gap.chosen_k = 1;
  std::ostringstream curve;
  write_gap_curve(curve, gap, Provenance{3, "d"});
  CHECK(curve.str().find("# seed=3 config_digest=d") != std::string::npos);
  CHECK(curve.str().find("# chosen_k: 1") != std::string::npos);
  CHECK(curve.str().find("k\tlog_w\treference_mean\tgap\tse") != std::string::npos);

  std::ostringstream assignments;
  const std::vector<std::string> states{"AL", "MA"};
  const std::vector<std::size_t> labels{1, 0};
  write_assignments(assignments, states, labels, Provenance{3, "d"});
  CHECK(assignments.str().find("AL\t2\nMA\t1\n") != std::string::npos);
}
