#include <doctest.h>

#include <random>
#include <sstream>

#include "oracles.hpp"
#include "semiheal/datagen.hpp"
#include "semiheal/errors.hpp"
#include "semiheal/forest.hpp"
#include "semiheal/trust.hpp"
#include "semiheal/votes.hpp"

using namespace semiheal;

namespace {
  // Label 1 iff feature 3 < 0.5; the other features are noise.
  std::vector<LabeledCell> threshold_data(std::size_t count, std::uint64_t seed) {
    std::mt19937_64                        rng(seed);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::vector<LabeledCell>               out;
    for (std::size_t i = 0; i < count; ++i) {
      LabeledCell c;
      for (auto& x : c.features) x = u(rng);
      c.label    = c.features[3] < 0.5 ? 1 : 0;
      c.table_id = i / 10;
      c.row      = i % 10;
      out.push_back(c);
    }
    return out;
  }

  void check_node_counts(DecisionTree const& t, std::size_t min_leaf) {
    for (auto const& node : t.nodes) {
      CHECK(node.positive <= node.total);
      if (node.is_leaf()) {
        CHECK(node.total >= 1);
        continue;
      }
      auto const& l = t.nodes[node.left];
      auto const& r = t.nodes[node.right];
      CHECK(l.total + r.total == node.total);
      CHECK(l.positive + r.positive == node.positive);
      CHECK(l.total >= min_leaf);
      CHECK(r.total >= min_leaf);
      CHECK(node.positive > 0);
      CHECK(node.positive < node.total);
    }
  }
}  // namespace

TEST_CASE("a separable concept is learned") {
  ForestParams params;
  params.n_trees = 25;
  params.seed    = 3;
  for (auto crit : {split_criterion::gini, split_criterion::entropy}) {
    params.criterion = crit;
    auto const m     = train(threshold_data(400, 1), params);
    auto const test  = threshold_data(200, 2);
    std::size_t correct = 0;
    for (auto const& c : test) {
      auto const p = predict_proba(m, c.features);
      CHECK(p >= 0.0);
      CHECK(p <= 1.0);
      correct += (p >= 0.5) == (c.label == 1);
    }
    CHECK(correct >= 190);
  }
}

TEST_CASE("training is deterministic and independent of input order") {
  ForestParams params;
  params.n_trees = 10;
  params.seed    = 77;
  auto data      = threshold_data(300, 5);
  auto const a   = train(data, params);
  std::mt19937_64 rng(1);
  std::shuffle(data.begin(), data.end(), rng);
  CHECK(train(data, params) == a);
  params.seed = 78;
  CHECK_FALSE(train(data, params) == a);
}

TEST_CASE("tree structure respects depth and leaf size") {
  ForestParams params;
  params.n_trees   = 8;
  params.max_depth = 3;
  params.min_leaf  = 5;
  auto data        = threshold_data(300, 9);
  for (auto& c : data) {
    if (c.features[0] < 0.1) c.label = 1 - c.label;
  }
  auto const m = train(data, params);
  REQUIRE(m.trees.size() == 8);
  for (auto const& t : m.trees) {
    CHECK(t.depth() <= 3);
    CHECK(t.nodes[0].total == 300);
    check_node_counts(t, 5);
  }
}

TEST_CASE("degenerate training data") {
  ForestParams params;
  CHECK_THROWS_AS(train({}, params), ValidationError);
  auto data = threshold_data(50, 1);
  for (auto& c : data) c.label = 0;
  CHECK_THROWS_AS(train(data, params), ValidationError);
  params.features_per_split = 0;
  CHECK_THROWS_AS(train(threshold_data(50, 1), params), ValidationError);
}

TEST_CASE("constant features give a single leaf") {
  std::vector<LabeledCell> data(20);
  for (std::size_t i = 0; i < data.size(); ++i) {
    data[i].label = i % 4 == 0;
    data[i].row   = i;
  }
  ForestParams params;
  params.n_trees = 3;
  auto const m   = train(data, params);
  for (auto const& t : m.trees) CHECK(t.nodes.size() == 1);
  CellFeatures x{};
  auto const   p = predict_proba(m, x);
  CHECK(p > 0.0);
  CHECK(p < 1.0);
}

TEST_CASE("model round trip and validation") {
  ForestParams params;
  params.n_trees   = 5;
  params.max_depth = unlimited_depth;
  params.criterion = split_criterion::entropy;
  params.seed      = 0xFFFFFFFFFFFFFFFFULL;
  auto const m     = train(threshold_data(200, 4), params);
  std::stringstream ss;
  save_model(ss, m);
  auto const text = ss.str();
  std::stringstream in(text);
  CHECK(load_model(in) == m);

  auto reject = [](std::string s) {
    std::stringstream bad(s);
    CHECK_THROWS_AS(load_model(bad), ValidationError);
  };
  reject("");
  reject("{}");
  auto v = text;
  v.replace(v.find("\"version\":1"), 11, "\"version\":9");
  reject(v);
  auto f = text;
  f.replace(f.find("row_index"), 9, "row_indey");
  reject(f);
  auto c = text;
  c.replace(c.find("\"n_trees\":5"), 11, "\"n_trees\":6");
  reject(c);
  CHECK_THROWS_AS(save_model(ss, ForestModel{}), ValidationError);
}

TEST_CASE("feature extraction") {
  CayleyTable t{{0, 1, 2}, {1, 1, 0}, {2, 0, 1}};
  auto const  tm    = trust_map(t);
  auto const  votes = vote_grid(t);
  auto const  fs    = extract_features(t, tm, votes);
  REQUIRE(fs.size() == 9);
  auto const& f = fs[1 * 3 + 2];
  CHECK(f[0] == doctest::Approx(1.0 / 3));
  CHECK(f[1] == doctest::Approx(2.0 / 3));
  CHECK(f[2] == doctest::Approx(0.0));
  CHECK(f[3] == doctest::Approx(tm.score(1, 2)));
  CHECK(f[4] == doctest::Approx(tm.row_mean(1)));
  CHECK(f[5] == doctest::Approx(tm.col_mean(2)));
  CHECK(f[6] == doctest::Approx(tm.table_mean()));
  CHECK(f[7] == doctest::Approx(3.0 / 9));
  CHECK(f[8] == doctest::Approx(2.0 / 3));
  CHECK(f[9] == doctest::Approx(3.0 / 3));
  CHECK(f[10] == doctest::Approx(votes[5].agreement(0)));
  CHECK(f[11] == doctest::Approx(3.0));
  auto const no_votes = extract_features(t, tm, {});
  CHECK(no_votes[5][10] == 0.0);
  CHECK_THROWS_AS(extract_features(t, trust_map(CayleyTable(2)), votes),
                  ValidationError);
}

TEST_CASE("substituted features equal features of the substituted table") {
  std::mt19937_64 rng(61);
  for (int rep = 0; rep < 100; ++rep) {
    auto const        t = oracle::random_table(2 + rng() % 5, rng);
    std::size_t const n = t.order(), i = rng() % n, j = rng() % n;
    auto const        v = static_cast<Element>(rng() % n);
    auto const        tm    = trust_map(t);
    auto const        votes = vote_grid(t);
    auto const        got   = substituted_features(t, tm, votes, i, j, v);
    auto sub = t;
    sub.set(i, j, v);
    auto const sub_tm = trust_map(sub);
    auto const full   = extract_features(sub, sub_tm, votes)[i * n + j];
    for (std::size_t k : {0, 1, 2, 3, 7, 8, 9, 10, 11}) {
      CHECK(got[k] == doctest::Approx(full[k]));
    }
    if (v == t(i, j)) {
      auto const same = extract_features(t, tm, votes)[i * n + j];
      for (std::size_t k = 0; k < feature_count; ++k) CHECK(got[k] == doctest::Approx(same[k]));
    }
  }
}

TEST_CASE("labeled cells mark exactly the corrupted positions") {
  auto const pair = corrupt(generate({5, 1, 2, {}, false}).tables[0], 0.15, 7);
  auto const rows = labeled_cells(pair.corrupt, pair.corrupted_cells, 42);
  REQUIRE(rows.size() == 25);
  std::size_t positives = 0;
  for (auto const& r : rows) {
    CHECK(r.table_id == 42);
    positives += r.label;
    bool const listed = std::find(pair.corrupted_cells.begin(), pair.corrupted_cells.end(),
                                  Cell{r.row, r.col}) != pair.corrupted_cells.end();
    CHECK((r.label == 1) == listed);
  }
  CHECK(positives == pair.corrupted_cells.size());
  auto const plain = labeled_cells(pair.corrupt, pair.corrupted_cells, 42, {}, {}, false);
  for (auto const& r : plain) CHECK(r.features[10] == 0.0);
}
