#pragma once

// Resumable depth-first completion of a partial table. Shared by the
// generator and by backtracking repair. Not installed.

#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <vector>

#include "semiheal/algebra.hpp"
#include "semiheal/table.hpp"

namespace semiheal::detail {

  class CompletionSearch {
   public:
    // Candidate values for a cell, given the partial table at that point.
    using Orderer
        = std::function<std::vector<Element>(CayleyTable const&, Cell)>;

    enum class status { found, exhausted, budget_exhausted };

    static constexpr std::uint64_t unlimited
        = std::numeric_limits<std::uint64_t>::max();

    // Cells in free_cells are reset to MASKED and assigned in the given
    // order; every other cell is fixed.
    CompletionSearch(CayleyTable       start,
                     std::vector<Cell> free_cells,
                     Orderer           orderer,
                     std::uint64_t     budget = unlimited);

    // Advances to the next complete consistent assignment. Calling again
    // after `found` continues the search past that solution.
    status next();

    CayleyTable const& table() const noexcept {
      return _table;
    }
    std::uint64_t nodes() const noexcept {
      return _nodes;
    }

   private:
    struct Frame {
      std::vector<Element> order;
      std::size_t          next = 0;
    };

    void open_frame(std::size_t depth);

    CayleyTable        _table;
    std::vector<Cell>  _free;
    Orderer            _orderer;
    std::uint64_t      _budget;
    std::uint64_t      _nodes = 0;
    std::vector<Frame> _frames;
    std::size_t        _depth   = 0;
    bool               _started = false;
    bool               _done    = false;
    bool               _fixed_consistent;
  };

}  // namespace semiheal::detail
