#pragma once

// Majority-vote evidence for a cell from associativity. For cell (i, j),
// every decomposition i = a.b with a.b known gives (a.b).j = a.(b.j), i.e. a
// vote for the value a.(b.j) when b.j and a.(b.j) are known. With
// `bilateral` set, column decompositions j = a.b add votes for (i.a).b.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <vector>

#include "semiheal/table.hpp"

namespace semiheal {

  struct VoteOptions {
    bool bilateral = false;
  };

  class VoteTally {
   public:
    VoteTally() = default;
    explicit VoteTally(std::size_t n) : _counts(n, 0) {}

    void add(Element v) {
      ++_counts[static_cast<std::size_t>(v)];
      ++_total;
    }
    std::uint32_t count(Element v) const noexcept {
      return v < 0 || static_cast<std::size_t>(v) >= _counts.size()
                 ? 0
                 : _counts[static_cast<std::size_t>(v)];
    }
    std::uint32_t total() const noexcept {
      return _total;
    }
    bool empty() const noexcept {
      return _total == 0;
    }
    std::vector<std::uint32_t> const& counts() const noexcept {
      return _counts;
    }

    // Value with the most votes, ties to the lowest value; nullopt if empty.
    std::optional<Element> plurality() const;

    // Share of votes agreeing with v; 0 when there are no votes.
    double agreement(Element v) const noexcept {
      return _total == 0 ? 0.0 : static_cast<double>(count(v)) / _total;
    }

    // Voted values by descending count then ascending value.
    std::vector<Element> ranked() const;

   private:
    std::vector<std::uint32_t> _counts;
    std::uint32_t              _total = 0;
  };

  VoteTally vote_tally(CayleyTable const& t,
                       std::size_t        i,
                       std::size_t        j,
                       VoteOptions        opts = {});

  // Row-major n x n tallies; an empty grid stands for "votes disabled".
  using VoteGrid = std::vector<VoteTally>;

  VoteGrid vote_grid(CayleyTable const& t, VoteOptions opts = {});

}  // namespace semiheal
