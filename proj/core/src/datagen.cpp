#include "semiheal/datagen.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <numeric>
#include <ostream>
#include <set>
#include <string>

#include "completion_search.hpp"
#include "json_detail.hpp"
#include "semiheal/algebra.hpp"
#include "semiheal/errors.hpp"
#include "semiheal/rng.hpp"

namespace semiheal {

  namespace {
    using detail::CompletionSearch;
    using detail::json;

    // Attempts per table before giving up, and the node budget of each.
    constexpr std::size_t max_attempts = 1000000;

    std::uint64_t attempt_budget(std::size_t n) {
      return 10 * static_cast<std::uint64_t>(n * n);
    }

    void validate(GenConfig const& cfg) {
      if (cfg.n < 1) {
        throw ValidationError("gen: order must be at least 1");
      }
      if (cfg.count < 1) {
        throw ValidationError("gen: count must be at least 1");
      }
      if (cfg.distinct_classes && cfg.n > max_canonical_order) {
        throw ValidationError("gen: distinct classes need n <= "
                              + std::to_string(max_canonical_order));
      }
      std::set<Cell> seen;
      for (auto const& sc : cfg.seed_cells) {
        if (sc.row >= cfg.n || sc.col >= cfg.n) {
          throw ValidationError("gen: seed cell position outside the table");
        }
        if (sc.value < 0 || static_cast<std::size_t>(sc.value) >= cfg.n) {
          throw ValidationError("gen: seed cell value outside {0..n-1}");
        }
        if (!seen.insert(Cell{sc.row, sc.col}).second) {
          throw ValidationError("gen: duplicate seed cell position");
        }
      }
    }

    CayleyTable seeded_start(GenConfig const& cfg, std::vector<Cell>& free) {
      CayleyTable t(cfg.n, MASKED);
      for (auto const& sc : cfg.seed_cells) {
        t.set(sc.row, sc.col, sc.value);
      }
      for (std::size_t i = 0; i < cfg.n; ++i) {
        for (std::size_t j = 0; j < cfg.n; ++j) {
          if (t(i, j) == MASKED) {
            free.push_back(Cell{i, j});
          }
        }
      }
      return t;
    }

    CompletionSearch::Orderer random_orderer(Rng& rng) {
      return [&rng](CayleyTable const& t, Cell) {
        std::vector<Element> values(t.order());
        std::iota(values.begin(), values.end(), 0);
        rng.shuffle(std::span<Element>(values));
        return values;
      };
    }

    GenerationResult generate_samples(GenConfig const& cfg) {
      GenerationResult  result;
      std::vector<Cell> free;
      auto const        start = seeded_start(cfg, free);
      for (std::size_t index = 0; index < cfg.count; ++index) {
        auto const table_seed = derive_seed(cfg.seed, index);
        bool       done       = false;
        for (std::size_t attempt = 0; attempt < max_attempts && !done;
             ++attempt) {
          Rng              rng(derive_seed(table_seed, attempt));
          CompletionSearch search(
              start, free, random_orderer(rng), attempt_budget(cfg.n));
          switch (search.next()) {
            case CompletionSearch::status::found:
              result.tables.push_back(search.table());
              done = true;
              break;
            case CompletionSearch::status::exhausted:
              throw UnsatisfiableError(
                  "gen: seed cells admit no associative completion");
            case CompletionSearch::status::budget_exhausted:
              break;
          }
        }
        if (!done) {
          throw std::runtime_error("gen: no completion found within budget");
        }
      }
      return result;
    }

    GenerationResult generate_distinct(GenConfig const& cfg) {
      GenerationResult        result;
      std::vector<Cell>       free;
      auto const              start = seeded_start(cfg, free);
      Rng                     rng(derive_seed(cfg.seed, 0));
      CompletionSearch        search(start, free, random_orderer(rng));
      std::set<CanonicalForm> seen;
      while (result.tables.size() < cfg.count) {
        if (search.next() != CompletionSearch::status::found) {
          break;
        }
        if (seen.insert(canonical_form(search.table())).second) {
          result.tables.push_back(search.table());
        }
      }
      if (result.tables.empty()) {
        throw UnsatisfiableError(
            "gen: seed cells admit no associative completion");
      }
      result.shortfall = result.tables.size() < cfg.count;
      return result;
    }
  }  // namespace

  GenerationResult generate(GenConfig const& cfg) {
    validate(cfg);
    return cfg.distinct_classes ? generate_distinct(cfg)
                                : generate_samples(cfg);
  }

  std::vector<CayleyTable> enumerate_all(std::size_t n) {
    if (n < 1 || n > max_enumeration_order) {
      throw ValidationError("enumerate_all: order must be in [1, "
                            + std::to_string(max_enumeration_order) + "]");
    }
    std::vector<CayleyTable> out;
    std::vector<Element>     digits(n * n, 0);
    auto const               base = static_cast<Element>(n);
    while (true) {
      auto t = CayleyTable::from_flat(n, digits);
      if (is_associative(t)) {
        out.push_back(std::move(t));
      }
      // Odometer with the last cell as the least significant digit.
      std::size_t pos = digits.size();
      while (pos > 0 && digits[pos - 1] == base - 1) {
        digits[--pos] = 0;
      }
      if (pos == 0) {
        break;
      }
      ++digits[pos - 1];
    }
    return out;
  }

  std::size_t corruption_count(std::size_t n, double p) {
    return static_cast<std::size_t>(
        std::floor(p * static_cast<double>(n * n) + 0.5));
  }

  TablePair apply_corruption(CayleyTable const&           clean,
                             std::vector<CellFlip> const& flips,
                             double                       p,
                             std::uint64_t                seed) {
    if (clean.has_masked() || !is_associative(clean)) {
      throw ValidationError("corrupt: clean table must be associative");
    }
    TablePair pair{clean, clean, {}, p, seed};
    for (auto const& f : flips) {
      auto const old = clean.at(f.cell);
      if (f.value == old || f.value == MASKED) {
        throw ValidationError("corrupt: flip must change the cell value");
      }
      pair.corrupt.set(f.cell, f.value);
      pair.corrupted_cells.push_back(f.cell);
    }
    std::sort(pair.corrupted_cells.begin(), pair.corrupted_cells.end());
    if (std::adjacent_find(pair.corrupted_cells.begin(),
                           pair.corrupted_cells.end())
        != pair.corrupted_cells.end()) {
      throw ValidationError("corrupt: duplicate flipped cell");
    }
    return pair;
  }

  TablePair corrupt(CayleyTable const& clean, double p, std::uint64_t seed) {
    auto const n = clean.order();
    if (!(p > 0.0 && p < 1.0)) {
      throw ValidationError("corrupt: p must lie in (0, 1)");
    }
    if (n < 2) {
      throw ValidationError("corrupt: order 1 has no incorrect values");
    }
    auto const count = corruption_count(n, p);
    if (count < 1) {
      throw ValidationError("corrupt: round(p * n^2) is zero");
    }
    Rng                      rng(seed);
    std::vector<std::size_t> positions(n * n);
    std::iota(positions.begin(), positions.end(), 0);
    std::vector<CellFlip> flips;
    flips.reserve(count);
    for (std::size_t s = 0; s < count; ++s) {
      std::swap(positions[s], positions[s + rng.below(n * n - s)]);
      Cell const c{positions[s] / n, positions[s] % n};
      auto       v = static_cast<Element>(rng.below(n - 1));
      if (v >= clean(c.row, c.col)) {
        ++v;
      }
      flips.push_back({c, v});
    }
    return apply_corruption(clean, flips, p, seed);
  }

  ////////////////////////////////////////////////////////////////////////////
  // Dataset files
  ////////////////////////////////////////////////////////////////////////////

  namespace {
    constexpr char const* dataset_format  = "semiheal-dataset";
    constexpr int         dataset_version = 1;

    json pair_to_json(TablePair const& pair) {
      json cells = json::array();
      for (auto const& c : pair.corrupted_cells) {
        cells.push_back({c.row, c.col});
      }
      return json{{"n", pair.clean.order()},
                  {"p", pair.p},
                  {"seed", pair.seed},
                  {"clean", detail::table_entries(pair.clean)},
                  {"corrupt", detail::table_entries(pair.corrupt)},
                  {"corrupted_cells", std::move(cells)}};
    }

    TablePair pair_from_json(json const& j) {
      auto const n = detail::required<std::int64_t>(j, "n");
      if (n < 1) {
        throw ValidationError("order must be at least 1");
      }
      auto const order = static_cast<std::size_t>(n);
      TablePair  pair{detail::table_from_entries(j.at("clean"), order),
                     detail::table_from_entries(
                         detail::required<json>(j, "corrupt"), order),
                     {},
                     detail::required<double>(j, "p"),
                     detail::required<std::uint64_t>(j, "seed")};
      for (auto const& c : detail::required<json>(j, "corrupted_cells")) {
        if (!c.is_array() || c.size() != 2) {
          throw ValidationError("corrupted cell must be [row, col]");
        }
        Cell const cell{c[0].get<std::size_t>(), c[1].get<std::size_t>()};
        if (cell.row >= order || cell.col >= order) {
          throw ValidationError("corrupted cell outside the table");
        }
        pair.corrupted_cells.push_back(cell);
      }
      if (pair.clean.has_masked() || pair.corrupt.has_masked()) {
        throw ValidationError("dataset tables may not contain MASKED cells");
      }
      if (!std::is_sorted(pair.corrupted_cells.begin(),
                          pair.corrupted_cells.end())
          || std::adjacent_find(pair.corrupted_cells.begin(),
                                pair.corrupted_cells.end())
                 != pair.corrupted_cells.end()) {
        throw ValidationError("corrupted cells must be sorted and distinct");
      }
      std::set<Cell> flagged(pair.corrupted_cells.begin(),
                             pair.corrupted_cells.end());
      for (std::size_t i = 0; i < order; ++i) {
        for (std::size_t jj = 0; jj < order; ++jj) {
          bool const differs = pair.clean(i, jj) != pair.corrupt(i, jj);
          if (differs != (flagged.count(Cell{i, jj}) == 1)) {
            throw ValidationError(
                "clean and corrupt tables must differ exactly on the "
                "corrupted cells");
          }
        }
      }
      if (!is_associative(pair.clean)) {
        throw ValidationError("clean table is not associative");
      }
      return pair;
    }
  }  // namespace

  void write_dataset(std::ostream& os, std::vector<TablePair> const& pairs) {
    os << json{{"format", dataset_format}, {"version", dataset_version}}.dump()
       << '\n';
    for (auto const& pair : pairs) {
      os << pair_to_json(pair).dump() << '\n';
    }
  }

  std::vector<TablePair> read_dataset(std::istream& is) {
    std::vector<TablePair> out;
    std::string            line;
    std::size_t            lineno      = 0;
    bool                   seen_header = false;
    while (std::getline(is, line)) {
      ++lineno;
      if (line.find_first_not_of(" \t\r") == std::string::npos) {
        continue;
      }
      json j;
      try {
        j = json::parse(line);
      } catch (json::parse_error const& e) {
        throw ParseError(e.what(), lineno);
      }
      try {
        if (!seen_header) {
          if (detail::required<std::string>(j, "format") != dataset_format) {
            throw ValidationError("not a semiheal dataset");
          }
          if (detail::required<int>(j, "version") != dataset_version) {
            throw ValidationError("unsupported dataset version");
          }
          seen_header = true;
          continue;
        }
        out.push_back(pair_from_json(j));
      } catch (ValidationError const& e) {
        throw ParseError(e.what(), lineno);
      } catch (json::exception const& e) {
        throw ParseError(e.what(), lineno);
      }
    }
    if (!seen_header) {
      throw ParseError("missing dataset header record", lineno);
    }
    return out;
  }

}  // namespace semiheal
