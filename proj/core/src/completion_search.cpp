#include "completion_search.hpp"

#include <utility>

namespace semiheal::detail {

  CompletionSearch::CompletionSearch(CayleyTable       start,
                                     std::vector<Cell> free_cells,
                                     Orderer           orderer,
                                     std::uint64_t     budget)
      : _table(std::move(start)),
        _free(std::move(free_cells)),
        _orderer(std::move(orderer)),
        _budget(budget),
        _frames(_free.size()) {
    for (auto const& c : _free) {
      _table.set(c, MASKED);
    }
    _fixed_consistent = partially_consistent(_table);
  }

  void CompletionSearch::open_frame(std::size_t depth) {
    _frames[depth].order = _orderer(_table, _free[depth]);
    _frames[depth].next  = 0;
  }

  CompletionSearch::status CompletionSearch::next() {
    if (_done) {
      return status::exhausted;
    }
    if (!_fixed_consistent) {
      _done = true;
      return status::exhausted;
    }
    if (_free.empty()) {
      _done = true;
      return status::found;
    }
    if (!_started) {
      _started = true;
      open_frame(0);
    } else if (_depth == _free.size()) {
      --_depth;
    }
    while (true) {
      auto&      frame    = _frames[_depth];
      auto const cell     = _free[_depth];
      bool       advanced = false;
      while (frame.next < frame.order.size()) {
        if (_nodes >= _budget) {
          return status::budget_exhausted;
        }
        ++_nodes;
        _table.set(cell, frame.order[frame.next++]);
        if (cell_consistent(_table, cell.row, cell.col)) {
          advanced = true;
          break;
        }
      }
      if (advanced) {
        ++_depth;
        if (_depth == _free.size()) {
          return status::found;
        }
        open_frame(_depth);
        continue;
      }
      _table.set(cell, MASKED);
      if (_depth == 0) {
        _done = true;
        return status::exhausted;
      }
      --_depth;
    }
  }

}  // namespace semiheal::detail
