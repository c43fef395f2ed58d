#include "semiheal/trust.hpp"

#include <algorithm>
#include <cstdio>
#include <set>

#include "json_detail.hpp"
#include "semiheal/errors.hpp"

namespace semiheal {

  namespace {
    inline bool agree(Element lhs, Element rhs) noexcept {
      return lhs != MASKED && lhs == rhs;
    }
  }  // namespace

  TrustMap::TrustMap(std::size_t                n,
                     std::uint32_t              denominator,
                     std::vector<std::uint32_t> passed)
      : _n(n),
        _denominator(denominator),
        _passed(std::move(passed)),
        _row_means(n, 0.0),
        _col_means(n, 0.0) {
    if (_passed.size() != n * n || denominator == 0) {
      throw ValidationError("trust map dimensions do not match its order");
    }
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < n; ++j) {
        if (_passed[i * n + j] > denominator) {
          throw ValidationError("trust numerator exceeds its denominator");
        }
        auto const s = score(i, j);
        _row_means[i] += s;
        _col_means[j] += s;
        total += s;
      }
    }
    for (std::size_t k = 0; k < n; ++k) {
      _row_means[k] /= static_cast<double>(n);
      _col_means[k] /= static_cast<double>(n);
    }
    _table_mean = total / static_cast<double>(n * n);
  }

  bool TrustMap::all_trusted() const noexcept {
    return std::all_of(_passed.begin(), _passed.end(), [this](auto p) {
      return p == _denominator;
    });
  }

  std::uint32_t trust_count_with(CayleyTable const& t,
                                 std::size_t        i,
                                 std::size_t        j,
                                 Element            value,
                                 TrustOptions       opts) {
    if (value == MASKED) {
      return 0;
    }
    auto const n = t.order();
    // Table lookups with cell (i, j) reading as `value`.
    auto const get = [&](Element a, Element b) -> Element {
      if (a == MASKED || b == MASKED) {
        return MASKED;
      }
      auto const ua = static_cast<std::size_t>(a);
      auto const ub = static_cast<std::size_t>(b);
      return (ua == i && ub == j) ? value : t(ua, ub);
    };
    auto const    ei     = static_cast<Element>(i);
    auto const    ej     = static_cast<Element>(j);
    std::uint32_t passed = 0;
    for (std::size_t k = 0; k < n; ++k) {
      auto const ek = static_cast<Element>(k);
      // (ij)k = i(jk)
      passed += agree(get(value, ek), get(ei, get(ej, ek)));
    }
    if (opts.symmetric) {
      for (std::size_t k = 0; k < n; ++k) {
        auto const ek = static_cast<Element>(k);
        // (ki)j = k(ij)
        passed += agree(get(get(ek, ei), ej), get(ek, value));
      }
    }
    return passed;
  }

  TrustMap trust_map(CayleyTable const& t, TrustOptions opts) {
    auto const                 n = t.order();
    std::vector<std::uint32_t> passed(n * n, 0);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < n; ++j) {
        passed[i * n + j] = trust_count_with(t, i, j, t(i, j), opts);
      }
    }
    auto const denom = static_cast<std::uint32_t>(opts.symmetric ? 2 * n : n);
    return TrustMap(n, denom, std::move(passed));
  }

  TrustSeparation trust_separation(TablePair const& pair, TrustOptions opts) {
    auto const n = pair.corrupt.order();
    if (pair.corrupted_cells.empty() || pair.corrupted_cells.size() >= n * n) {
      throw ValidationError(
          "trust_separation: needs some but not all cells corrupted");
    }
    auto const     tm = trust_map(pair.corrupt, opts);
    std::set<Cell> bad(pair.corrupted_cells.begin(),
                       pair.corrupted_cells.end());
    double      clean_sum = 0.0, bad_sum = 0.0;
    std::size_t clean_count = 0, bad_count = 0;
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < n; ++j) {
        if (bad.count(Cell{i, j})) {
          bad_sum += tm.score(i, j);
          ++bad_count;
        } else {
          clean_sum += tm.score(i, j);
          ++clean_count;
        }
      }
    }
    return {clean_sum / static_cast<double>(clean_count),
            bad_sum / static_cast<double>(bad_count)};
  }

  std::string trust_map_to_json(TrustMap const& tm) {
    using detail::json;
    auto const n      = tm.order();
    json       scores = json::array();
    for (std::size_t i = 0; i < n; ++i) {
      json row = json::array();
      for (std::size_t j = 0; j < n; ++j) {
        char buf[32];
        std::snprintf(buf, sizeof buf, "%.6f", tm.score(i, j));
        row.push_back(buf);
      }
      scores.push_back(std::move(row));
    }
    json out{{"scores", std::move(scores)},
             {"row_means", tm.row_means()},
             {"col_means", tm.col_means()},
             {"table_mean", tm.table_mean()}};
    return out.dump();
  }

}  // namespace semiheal
