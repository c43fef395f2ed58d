#include <doctest.h>

#include <random>

#include "oracles.hpp"
#include "semiheal/datagen.hpp"
#include "semiheal/errors.hpp"
#include "semiheal/trust.hpp"
#include "semiheal/votes.hpp"

using namespace semiheal;

TEST_CASE("trust scores match direct counting") {
  std::mt19937_64 rng(41);
  for (int rep = 0; rep < 100; ++rep) {
    auto const t = oracle::random_table(1 + rng() % 6, rng);
    auto const g = oracle::grid(t);
    for (bool symmetric : {false, true}) {
      auto const  tm = trust_map(t, {symmetric});
      std::size_t n  = t.order();
      CHECK(tm.denominator() == (symmetric ? 2 * n : n));
      double total = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        double row = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
          CHECK(tm.passed(i, j) == oracle::trust_passed(g, i, j, symmetric));
          row += tm.score(i, j);
          total += tm.score(i, j);
        }
        CHECK(tm.row_mean(i) == doctest::Approx(row / n));
      }
      CHECK(tm.table_mean() == doctest::Approx(total / (n * n)));
    }
  }
}

TEST_CASE("associative tables are fully trusted") {
  for (std::size_t n = 1; n <= 8; ++n) {
    for (auto const& t : generate({n, 4, n, {}, false}).tables) {
      CHECK(trust_map(t).all_trusted());
      CHECK(trust_map(t, {true}).all_trusted());
    }
  }
}

TEST_CASE("scores lie in [0, 1] and masked cells score 0") {
  std::mt19937_64 rng(43);
  for (int rep = 0; rep < 50; ++rep) {
    auto t = oracle::random_table(2 + rng() % 5, rng);
    t.set(0, 1, MASKED);
    auto const tm = trust_map(t);
    CHECK(tm.passed(0, 1) == 0);
    for (std::size_t i = 0; i < t.order(); ++i)
      for (std::size_t j = 0; j < t.order(); ++j) {
        CHECK(tm.score(i, j) >= 0.0);
        CHECK(tm.score(i, j) <= 1.0);
      }
  }
}

TEST_CASE("trust_count_with equals the count on the substituted table") {
  std::mt19937_64 rng(47);
  for (int rep = 0; rep < 200; ++rep) {
    auto const        t = oracle::random_table(2 + rng() % 5, rng);
    std::size_t const n = t.order();
    std::size_t const i = rng() % n, j = rng() % n;
    auto const        v = static_cast<Element>(rng() % n);
    auto              sub = t;
    sub.set(i, j, v);
    for (bool symmetric : {false, true}) {
      CHECK(trust_count_with(t, i, j, v, {symmetric})
            == oracle::trust_passed(oracle::grid(sub), i, j, symmetric));
    }
  }
}

TEST_CASE("trust map validation") {
  CHECK_THROWS_AS(TrustMap(2, 2, {1, 1, 1}), ValidationError);
  CHECK_THROWS_AS(TrustMap(1, 1, {2}), ValidationError);
  CHECK_THROWS_AS(TrustMap(1, 0, {0}), ValidationError);
}

TEST_CASE("trust separation on a corrupted pair") {
  auto const pair = apply_corruption(oracle::cyclic(5), {{{1, 2}, 0}}, 0.04, 0);
  auto const s    = trust_separation(pair);
  auto const tm   = trust_map(pair.corrupt);
  CHECK(s.corrupted_mean == doctest::Approx(tm.score(1, 2)));
  CHECK(s.corrupted_mean < s.clean_mean);
  TablePair none{oracle::cyclic(3), oracle::cyclic(3), {}, 0.1, 0};
  CHECK_THROWS_AS(trust_separation(none), ValidationError);
}

TEST_CASE("trust json uses fixed six-decimal scores") {
  CayleyTable t{{0, 1}, {1, 1}};
  auto const  text = trust_map_to_json(trust_map(t));
  CHECK(text.find("\"scores\"") != std::string::npos);
  CHECK(text.find("\"1.000000\"") != std::string::npos);
  CHECK(text.find("\"table_mean\"") != std::string::npos);
}

TEST_CASE("vote tallies follow row decompositions") {
  std::mt19937_64 rng(53);
  for (int rep = 0; rep < 100; ++rep) {
    auto t = oracle::random_table(2 + rng() % 5, rng);
    if (rep % 2) t.set(rng() % t.order(), rng() % t.order(), MASKED);
    std::size_t n = t.order();
    for (bool bilateral : {false, true}) {
      for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
          std::vector<std::uint32_t> expected(n, 0);
          for (std::size_t a = 0; a < n; ++a) {
            for (std::size_t b = 0; b < n; ++b) {
              auto ab = t(a, b);
              if (ab == static_cast<Element>(i) && t(b, j) != MASKED) {
                auto v = t(a, static_cast<std::size_t>(t(b, j)));
                if (v != MASKED) ++expected[static_cast<std::size_t>(v)];
              }
              if (bilateral && ab == static_cast<Element>(j) && t(i, a) != MASKED) {
                auto v = t(static_cast<std::size_t>(t(i, a)), b);
                if (v != MASKED) ++expected[static_cast<std::size_t>(v)];
              }
            }
          }
          CHECK(vote_tally(t, i, j, {bilateral}).counts() == expected);
        }
      }
    }
  }
}

TEST_CASE("vote tally helpers") {
  VoteTally v(4);
  CHECK(v.empty());
  CHECK_FALSE(v.plurality());
  CHECK(v.agreement(1) == 0.0);
  v.add(2);
  v.add(1);
  v.add(2);
  v.add(1);
  v.add(3);
  CHECK(v.total() == 5);
  CHECK(v.plurality() == 1);
  CHECK(v.ranked() == std::vector<Element>{1, 2, 3});
  CHECK(v.agreement(2) == doctest::Approx(0.4));
  CHECK(v.count(MASKED) == 0);
}

TEST_CASE("votes recover a single corrupted cell in a group") {
  auto t = oracle::cyclic(5);
  t.set(2, 3, 4);
  auto const tally = vote_tally(t, 2, 3);
  CHECK(tally.plurality() == 0);
  CHECK(vote_grid(t).size() == 25);
}
