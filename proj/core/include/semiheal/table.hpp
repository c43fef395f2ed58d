#pragma once

#include <compare>
#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <span>
#include <utility>
#include <vector>

namespace semiheal {

  using Element = std::int32_t;

  // Marks a cell whose value is unknown or deliberately withheld. Serialized
  // as -1.
  inline constexpr Element MASKED = -1;

  struct Cell {
    std::size_t row = 0;
    std::size_t col = 0;

    friend auto operator<=>(Cell const&, Cell const&) = default;
  };

  // An n x n operation table over {0, ..., n-1}: entry (i, j) is i * j.
  // Cells may hold MASKED; every other value is in range, which the mutating
  // members enforce.
  class CayleyTable {
   public:
    explicit CayleyTable(std::size_t n, Element fill = 0);
    CayleyTable(std::initializer_list<std::initializer_list<Element>> rows);

    static CayleyTable from_rows(std::vector<std::vector<Element>> const& rows);
    static CayleyTable from_flat(std::size_t n, std::vector<Element> entries);

    std::size_t order() const noexcept {
      return _n;
    }

    // Unchecked access; i, j < order().
    Element operator()(std::size_t i, std::size_t j) const noexcept {
      return _entries[i * _n + j];
    }

    Element at(std::size_t i, std::size_t j) const;
    Element at(Cell c) const {
      return at(c.row, c.col);
    }

    void set(std::size_t i, std::size_t j, Element v);
    void set(Cell c, Element v) {
      set(c.row, c.col, v);
    }

    bool is_masked(std::size_t i, std::size_t j) const noexcept {
      return (*this)(i, j) == MASKED;
    }
    bool has_masked() const noexcept;
    std::size_t masked_count() const noexcept;

    std::span<Element const> row(std::size_t i) const noexcept {
      return {_entries.data() + i * _n, _n};
    }
    std::span<Element const> entries() const noexcept {
      return _entries;
    }

    std::vector<std::vector<Element>> rows() const;

    // Number of cells that differ from other (same order required).
    std::size_t hamming_distance(CayleyTable const& other) const;

    friend bool operator==(CayleyTable const&, CayleyTable const&) = default;
    friend auto operator<=>(CayleyTable const& a, CayleyTable const& b) {
      if (auto c = a._n <=> b._n; c != 0) {
        return c;
      }
      return a._entries <=> b._entries;
    }

   private:
    std::size_t          _n;
    std::vector<Element> _entries;
  };

  struct Triple {
    std::size_t i = 0;
    std::size_t j = 0;
    std::size_t k = 0;

    friend auto operator<=>(Triple const&, Triple const&) = default;
  };

  // Simultaneous relabeling: result[perm[i]][perm[j]] = perm[t[i][j]].
  // MASKED cells stay MASKED.
  CayleyTable relabel(CayleyTable const& t, std::span<std::size_t const> perm);

  // Opposite table: a * b := b . a
  CayleyTable opposite(CayleyTable const& t);

}  // namespace semiheal
