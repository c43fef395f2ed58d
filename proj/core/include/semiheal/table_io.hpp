#pragma once

// Table serialization.
//
//   JSON: {"n": 3, "entries": [[0,1,2],[1,2,0],[2,0,1]]}, -1 for MASKED.
//   Grid: n on the first line, then n rows of n space-separated integers.

#include <iosfwd>
#include <string>
#include <vector>

#include "semiheal/table.hpp"

namespace semiheal {

  std::string table_to_json(CayleyTable const& t);
  CayleyTable table_from_json(std::string const& text);

  void        write_grid(std::ostream& os, CayleyTable const& t);
  CayleyTable read_grid(std::istream& is);

  // Reads every table in a stream. Accepts JSON-lines (one table object per
  // line) or one or more concatenated grids; the format is chosen by the
  // first non-blank character.
  std::vector<CayleyTable> read_tables(std::istream& is);
  void write_tables_jsonl(std::ostream& os, std::vector<CayleyTable> const& ts);

}  // namespace semiheal
