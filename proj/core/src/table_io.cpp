#include "semiheal/table_io.hpp"

#include <istream>
#include <ostream>
#include <sstream>

#include "json_detail.hpp"

namespace semiheal {

  using detail::json;

  std::string table_to_json(CayleyTable const& t) {
    json j;
    j["n"]       = t.order();
    j["entries"] = detail::table_entries(t);
    return j.dump();
  }

  CayleyTable table_from_json(std::string const& text) {
    json j;
    try {
      j = json::parse(text);
    } catch (json::parse_error const& e) {
      throw ParseError(e.what(), 0);
    }
    auto const n = detail::required<std::int64_t>(j, "n");
    if (n < 1) {
      throw ValidationError("table order must be at least 1");
    }
    return detail::table_from_entries(j.at("entries"),
                                      static_cast<std::size_t>(n));
  }

  void write_grid(std::ostream& os, CayleyTable const& t) {
    auto const n = t.order();
    os << n << '\n';
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < n; ++j) {
        os << (j == 0 ? "" : " ") << t(i, j);
      }
      os << '\n';
    }
  }

  CayleyTable read_grid(std::istream& is) {
    long long n = 0;
    if (!(is >> n) || n < 1) {
      throw ParseError("grid: expected a positive order", 0);
    }
    auto const           order = static_cast<std::size_t>(n);
    std::vector<Element> entries;
    entries.reserve(order * order);
    for (std::size_t c = 0; c < order * order; ++c) {
      long long v = 0;
      if (!(is >> v)) {
        throw ParseError("grid: expected " + std::to_string(order * order)
                             + " entries, got " + std::to_string(c),
                         0);
      }
      entries.push_back(static_cast<Element>(v));
    }
    return CayleyTable::from_flat(order, std::move(entries));
  }

  std::vector<CayleyTable> read_tables(std::istream& is) {
    std::vector<CayleyTable> out;
    is >> std::ws;
    if (is.peek() == '{') {
      std::string line;
      std::size_t lineno = 0;
      while (std::getline(is, line)) {
        ++lineno;
        if (line.find_first_not_of(" \t\r") == std::string::npos) {
          continue;
        }
        try {
          out.push_back(table_from_json(line));
        } catch (ValidationError const& e) {
          throw ParseError(e.what(), lineno);
        }
      }
      return out;
    }
    while (is >> std::ws, is.peek() != std::char_traits<char>::eof()) {
      out.push_back(read_grid(is));
    }
    return out;
  }

  void write_tables_jsonl(std::ostream&                   os,
                          std::vector<CayleyTable> const& ts) {
    for (auto const& t : ts) {
      os << table_to_json(t) << '\n';
    }
  }

}  // namespace semiheal
