#include "semiheal/votes.hpp"

#include <algorithm>

namespace semiheal {

  std::optional<Element> VoteTally::plurality() const {
    if (_total == 0) {
      return std::nullopt;
    }
    auto it = std::max_element(_counts.begin(), _counts.end());
    return static_cast<Element>(it - _counts.begin());
  }

  std::vector<Element> VoteTally::ranked() const {
    std::vector<Element> out;
    for (std::size_t v = 0; v < _counts.size(); ++v) {
      if (_counts[v] > 0) {
        out.push_back(static_cast<Element>(v));
      }
    }
    std::stable_sort(out.begin(), out.end(), [this](Element a, Element b) {
      return count(a) > count(b);
    });
    return out;
  }

  VoteTally vote_tally(CayleyTable const& t,
                       std::size_t        i,
                       std::size_t        j,
                       VoteOptions        opts) {
    auto const n = t.order();
    VoteTally  tally(n);
    auto const ei = static_cast<Element>(i);
    auto const ej = static_cast<Element>(j);
    for (std::size_t a = 0; a < n; ++a) {
      for (std::size_t b = 0; b < n; ++b) {
        auto const ab = t(a, b);
        if (ab == ei) {
          auto const bj = t(b, j);
          if (bj != MASKED) {
            auto const v = t(a, static_cast<std::size_t>(bj));
            if (v != MASKED) {
              tally.add(v);
            }
          }
        }
        if (opts.bilateral && ab == ej) {
          auto const ia = t(i, a);
          if (ia != MASKED) {
            auto const v = t(static_cast<std::size_t>(ia), b);
            if (v != MASKED) {
              tally.add(v);
            }
          }
        }
      }
    }
    return tally;
  }

  VoteGrid vote_grid(CayleyTable const& t, VoteOptions opts) {
    auto const n = t.order();
    VoteGrid   grid;
    grid.reserve(n * n);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < n; ++j) {
        grid.push_back(vote_tally(t, i, j, opts));
      }
    }
    return grid;
  }

}  // namespace semiheal
