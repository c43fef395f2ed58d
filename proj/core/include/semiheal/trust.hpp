#pragma once

// Per-cell trust: the share of associativity checks through a cell that
// pass. For cell (i, j) the checks are (ij)k = i(jk) over all k, so the score
// is a count out of n. With `symmetric` set, the n checks (ki)j = k(ij)
// (where the cell is the inner product) are counted too, out of 2n.
//
// Any check that reads a MASKED cell fails, and a MASKED cell scores 0.

#include <cstddef>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "semiheal/datagen.hpp"
#include "semiheal/table.hpp"

namespace semiheal {

  struct TrustOptions {
    bool symmetric = false;
  };

  class TrustMap {
   public:
    TrustMap(std::size_t n, std::uint32_t denominator,
             std::vector<std::uint32_t> passed);

    std::size_t order() const noexcept {
      return _n;
    }
    std::uint32_t denominator() const noexcept {
      return _denominator;
    }
    std::uint32_t passed(std::size_t i, std::size_t j) const noexcept {
      return _passed[i * _n + j];
    }
    double score(std::size_t i, std::size_t j) const noexcept {
      return static_cast<double>(passed(i, j)) / _denominator;
    }
    double score(Cell c) const noexcept {
      return score(c.row, c.col);
    }
    double row_mean(std::size_t i) const noexcept {
      return _row_means[i];
    }
    double col_mean(std::size_t j) const noexcept {
      return _col_means[j];
    }
    double table_mean() const noexcept {
      return _table_mean;
    }
    std::vector<double> const& row_means() const noexcept {
      return _row_means;
    }
    std::vector<double> const& col_means() const noexcept {
      return _col_means;
    }

    // True iff every score is 1.
    bool all_trusted() const noexcept;

   private:
    std::size_t                _n;
    std::uint32_t              _denominator;
    std::vector<std::uint32_t> _passed;
    std::vector<double>        _row_means;
    std::vector<double>        _col_means;
    double                     _table_mean = 0.0;
  };

  TrustMap trust_map(CayleyTable const& t, TrustOptions opts = {});

  // Passed checks for cell (i, j) if it held `value` instead (the rest of the
  // table unchanged). Same counting rules as trust_map.
  std::uint32_t trust_count_with(CayleyTable const& t,
                                 std::size_t        i,
                                 std::size_t        j,
                                 Element            value,
                                 TrustOptions       opts = {});

  struct TrustSeparation {
    double clean_mean     = 0.0;
    double corrupted_mean = 0.0;
  };

  // Mean trust of the corrupt table over clean vs corrupted positions.
  // Throws ValidationError when no cell, or every cell, is corrupted.
  TrustSeparation trust_separation(TablePair const& pair,
                                   TrustOptions     opts = {});

  // {"scores": [["1.000000", ...], ...], "row_means": [...],
  //  "col_means": [...], "table_mean": x}; scores are fixed 6-decimal strings.
  std::string trust_map_to_json(TrustMap const& tm);

}  // namespace semiheal
