#pragma once

// Dataset generation: associative tables from a backtracking model builder,
// exhaustive enumeration for tiny orders, and seeded corruption.

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <vector>

#include "semiheal/table.hpp"

namespace semiheal {

  struct SeedCell {
    std::size_t row   = 0;
    std::size_t col   = 0;
    Element     value = 0;
  };

  struct GenConfig {
    std::size_t           n     = 3;
    std::size_t           count = 1;
    std::uint64_t         seed  = 0;
    std::vector<SeedCell> seed_cells;
    // Deduplicate by canonical form (n <= 8 only).
    bool distinct_classes = false;
  };

  struct GenerationResult {
    std::vector<CayleyTable> tables;
    // Set when fewer than cfg.count tables exist (only possible with
    // distinct_classes or restrictive seed cells).
    bool shortfall = false;
  };

  // Depth-first, cell-by-cell completion in row-major order with the value
  // order at every cell drawn from a seeded permutation. Every placement is
  // checked against all fully determined triples through that cell.
  //
  // Without distinct_classes, table t is the first completion found by a
  // search seeded from (seed, t); with it, a single randomized exhaustive
  // search is walked until count classes are found or the space is exhausted.
  //
  // Throws ValidationError on a bad config and UnsatisfiableError when the
  // seed cells admit no associative completion.
  GenerationResult generate(GenConfig const& cfg);

  inline constexpr std::size_t max_enumeration_order = 3;

  // Every labeled associative table of order n <= 3, in lexicographic order
  // of the row-major entries.
  std::vector<CayleyTable> enumerate_all(std::size_t n);

  struct TablePair {
    CayleyTable       clean;
    CayleyTable       corrupt;
    std::vector<Cell> corrupted_cells;  // sorted row-major
    double            p    = 0.0;
    std::uint64_t     seed = 0;

    friend bool operator==(TablePair const&, TablePair const&) = default;
  };

  // round(p * n^2), rounding halves up.
  std::size_t corruption_count(std::size_t n, double p);

  // Selects corruption_count(n, p) distinct cells uniformly without
  // replacement and flips each uniformly to one of the n - 1 wrong values.
  TablePair corrupt(CayleyTable const& clean, double p, std::uint64_t seed);

  struct CellFlip {
    Cell    cell;
    Element value = 0;
  };

  // Builds a pair from explicit flips (each must change its cell).
  TablePair apply_corruption(CayleyTable const&           clean,
                             std::vector<CellFlip> const& flips,
                             double                       p,
                             std::uint64_t                seed);

  // JSON-lines: a header record {"format":"semiheal-dataset","version":1}
  // followed by one record per pair with fields n, p, seed, clean, corrupt
  // and corrupted_cells.
  void                   write_dataset(std::ostream&                 os,
                                       std::vector<TablePair> const& pairs);
  std::vector<TablePair> read_dataset(std::istream& is);

}  // namespace semiheal
