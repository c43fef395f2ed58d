#include "semiheal/table.hpp"

#include <algorithm>
#include <string>

#include "semiheal/errors.hpp"

namespace semiheal {

  namespace {
    void check_value(std::size_t n, Element v) {
      if (v != MASKED && (v < 0 || static_cast<std::size_t>(v) >= n)) {
        throw ValidationError("cell value " + std::to_string(v)
                              + " outside {0.." + std::to_string(n - 1)
                              + "} and not MASKED");
      }
    }
  }  // namespace

  CayleyTable::CayleyTable(std::size_t n, Element fill)
      : _n(n), _entries(n * n, fill) {
    if (n == 0) {
      throw ValidationError("table order must be at least 1");
    }
    check_value(n, fill);
  }

  CayleyTable::CayleyTable(
      std::initializer_list<std::initializer_list<Element>> rows)
      : CayleyTable(from_rows(
          std::vector<std::vector<Element>>(rows.begin(), rows.end()))) {}

  CayleyTable
  CayleyTable::from_rows(std::vector<std::vector<Element>> const& rows) {
    CayleyTable t(rows.empty() ? 0 : rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
      if (rows[i].size() != rows.size()) {
        throw ValidationError("row " + std::to_string(i) + " has "
                              + std::to_string(rows[i].size())
                              + " entries, expected "
                              + std::to_string(rows.size()));
      }
      for (std::size_t j = 0; j < rows.size(); ++j) {
        t.set(i, j, rows[i][j]);
      }
    }
    return t;
  }

  CayleyTable CayleyTable::from_flat(std::size_t n,
                                     std::vector<Element> entries) {
    CayleyTable t(n);
    if (entries.size() != n * n) {
      throw ValidationError("expected " + std::to_string(n * n)
                            + " entries, got "
                            + std::to_string(entries.size()));
    }
    for (auto v : entries) {
      check_value(n, v);
    }
    t._entries = std::move(entries);
    return t;
  }

  Element CayleyTable::at(std::size_t i, std::size_t j) const {
    if (i >= _n || j >= _n) {
      throw ValidationError("cell (" + std::to_string(i) + ","
                            + std::to_string(j) + ") outside table of order "
                            + std::to_string(_n));
    }
    return (*this)(i, j);
  }

  void CayleyTable::set(std::size_t i, std::size_t j, Element v) {
    if (i >= _n || j >= _n) {
      throw ValidationError("cell (" + std::to_string(i) + ","
                            + std::to_string(j) + ") outside table of order "
                            + std::to_string(_n));
    }
    check_value(_n, v);
    _entries[i * _n + j] = v;
  }

  bool CayleyTable::has_masked() const noexcept {
    return std::find(_entries.begin(), _entries.end(), MASKED)
           != _entries.end();
  }

  std::size_t CayleyTable::masked_count() const noexcept {
    return static_cast<std::size_t>(
        std::count(_entries.begin(), _entries.end(), MASKED));
  }

  std::vector<std::vector<Element>> CayleyTable::rows() const {
    std::vector<std::vector<Element>> out(_n);
    for (std::size_t i = 0; i < _n; ++i) {
      out[i].assign(_entries.begin() + i * _n, _entries.begin() + (i + 1) * _n);
    }
    return out;
  }

  std::size_t CayleyTable::hamming_distance(CayleyTable const& other) const {
    if (other._n != _n) {
      throw ValidationError("hamming distance needs tables of equal order");
    }
    std::size_t d = 0;
    for (std::size_t c = 0; c < _entries.size(); ++c) {
      d += _entries[c] != other._entries[c];
    }
    return d;
  }

  CayleyTable relabel(CayleyTable const& t, std::span<std::size_t const> perm) {
    auto const n = t.order();
    if (perm.size() != n) {
      throw ValidationError("permutation size does not match table order");
    }
    std::vector<bool> seen(n, false);
    for (auto p : perm) {
      if (p >= n || seen[p]) {
        throw ValidationError("relabeling map is not a permutation");
      }
      seen[p] = true;
    }
    std::vector<Element> out(n * n);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < n; ++j) {
        auto const v = t(i, j);
        out[perm[i] * n + perm[j]]
            = v == MASKED ? MASKED : static_cast<Element>(perm[v]);
      }
    }
    return CayleyTable::from_flat(n, std::move(out));
  }

  CayleyTable opposite(CayleyTable const& t) {
    auto const n = t.order();
    CayleyTable out(n);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < n; ++j) {
        out.set(i, j, t(j, i));
      }
    }
    return out;
  }

}  // namespace semiheal
