#include <doctest.h>

#include <sstream>

#include "oracles.hpp"
#include "semiheal/errors.hpp"
#include "semiheal/table.hpp"
#include "semiheal/table_io.hpp"

using namespace semiheal;

TEST_CASE("construction and access") {
  CayleyTable t{{0, 1}, {1, 0}};
  CHECK(t.order() == 2);
  CHECK(t(0, 1) == 1);
  CHECK(t.at(Cell{1, 1}) == 0);
  CHECK_FALSE(t.has_masked());
  t.set(0, 0, MASKED);
  CHECK(t.is_masked(0, 0));
  CHECK(t.masked_count() == 1);
  CHECK(t.rows() == std::vector<std::vector<Element>>{{-1, 1}, {1, 0}});
}

TEST_CASE("invalid tables are rejected") {
  CHECK_THROWS_AS(CayleyTable(0), ValidationError);
  CHECK_THROWS_AS((CayleyTable{{0, 1}, {1}}), ValidationError);
  CHECK_THROWS_AS((CayleyTable{{0, 2}, {1, 0}}), ValidationError);
  CHECK_THROWS_AS((CayleyTable{{0, -2}, {1, 0}}), ValidationError);
  CHECK_THROWS_AS(CayleyTable::from_flat(2, {0, 1, 0}), ValidationError);
  CayleyTable t(3);
  CHECK_THROWS_AS(t.at(3, 0), ValidationError);
  CHECK_THROWS_AS(t.set(0, 0, 3), ValidationError);
  CHECK_THROWS_AS(t.hamming_distance(CayleyTable(2)), ValidationError);
}

TEST_CASE("hamming distance counts differing cells") {
  auto a = oracle::cyclic(4);
  auto b = a;
  b.set(0, 0, 3);
  b.set(3, 2, 0);
  CHECK(a.hamming_distance(b) == 2);
  CHECK(a.hamming_distance(a) == 0);
}

TEST_CASE("relabel applies the permutation to operands and products") {
  auto const               t = oracle::left_zero(3);
  std::vector<std::size_t> perm{2, 0, 1};
  auto const               r = relabel(t, perm);
  for (std::size_t a = 0; a < 3; ++a)
    for (std::size_t b = 0; b < 3; ++b)
      CHECK(r(perm[a], perm[b]) == static_cast<Element>(perm[static_cast<std::size_t>(t(a, b))]));
  std::vector<std::size_t> bad{0, 0, 1};
  CHECK_THROWS_AS(relabel(t, bad), ValidationError);
}

TEST_CASE("opposite swaps operands") {
  auto const t = oracle::left_zero(3);
  auto const o = opposite(t);
  for (std::size_t a = 0; a < 3; ++a)
    for (std::size_t b = 0; b < 3; ++b) CHECK(o(a, b) == t(b, a));
  CHECK(opposite(o) == t);
}

TEST_CASE("json and grid round trips") {
  std::mt19937_64 rng(11);
  for (int rep = 0; rep < 50; ++rep) {
    auto t = oracle::random_table(1 + rng() % 7, rng);
    if (rep % 3 == 0) t.set(0, 0, MASKED);
    CHECK(table_from_json(table_to_json(t)) == t);
    std::stringstream ss;
    write_grid(ss, t);
    CHECK(read_grid(ss) == t);
  }
}

TEST_CASE("read_tables detects the format") {
  std::vector<CayleyTable> ts{oracle::cyclic(2), oracle::left_zero(3)};
  std::stringstream        jsonl;
  write_tables_jsonl(jsonl, ts);
  CHECK(read_tables(jsonl) == ts);

  std::stringstream grids;
  for (auto const& t : ts) {
    write_grid(grids, t);
    grids << '\n';
  }
  CHECK(read_tables(grids) == ts);
}

TEST_CASE("malformed input reports the line") {
  std::stringstream ss("{\"n\":2,\"entries\":[[0,1],[1,0]]}\n{\"n\":2,\"entries\":[[0,1]]}\n");
  try {
    read_tables(ss);
    FAIL("expected a parse error");
  } catch (ParseError const& e) {
    CHECK(e.line() == 2);
  }
}
