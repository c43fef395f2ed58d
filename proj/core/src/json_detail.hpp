#pragma once

// Internal JSON helpers shared by the serializers. Not installed.

#include <cstddef>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "semiheal/errors.hpp"
#include "semiheal/table.hpp"

namespace semiheal::detail {

  using json = nlohmann::json;

  inline json table_entries(CayleyTable const& t) {
    return json(t.rows());
  }

  inline CayleyTable table_from_entries(json const& entries, std::size_t n) {
    if (!entries.is_array() || entries.size() != n) {
      throw ValidationError("entries must be an array of " + std::to_string(n)
                            + " rows");
    }
    std::vector<std::vector<Element>> rows;
    rows.reserve(n);
    for (auto const& r : entries) {
      if (!r.is_array()) {
        throw ValidationError("table row is not an array");
      }
      std::vector<Element> row;
      for (auto const& v : r) {
        if (!v.is_number_integer()) {
          throw ValidationError("table entry is not an integer");
        }
        row.push_back(v.get<Element>());
      }
      rows.push_back(std::move(row));
    }
    if (n == 0) {
      throw ValidationError("table order must be at least 1");
    }
    return CayleyTable::from_rows(rows);
  }

  template <typename T>
  T required(json const& obj, char const* key) {
    if (!obj.is_object() || !obj.contains(key)) {
      throw ValidationError(std::string("missing field \"") + key + "\"");
    }
    try {
      return obj.at(key).get<T>();
    } catch (json::exception const& e) {
      throw ValidationError(std::string("field \"") + key + "\": " + e.what());
    }
  }

}  // namespace semiheal::detail
