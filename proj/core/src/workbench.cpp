#include "semiheal/workbench.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include "json_detail.hpp"
#include "semiheal/algebra.hpp"
#include "semiheal/datagen.hpp"
#include "semiheal/errors.hpp"
#include "semiheal/rng.hpp"

namespace semiheal {

  using detail::json;

  ////////////////////////////////////////////////////////////////////////////
  // Configuration
  ////////////////////////////////////////////////////////////////////////////

  void validate(ExperimentConfig const& cfg) {
    if (cfg.n_values.empty()) {
      throw ValidationError("experiment: n_values is empty");
    }
    for (auto n : cfg.n_values) {
      if (n < 2 || n > max_experiment_order) {
        throw ValidationError("experiment: order " + std::to_string(n)
                              + " outside [2, "
                              + std::to_string(max_experiment_order) + "]");
      }
    }
    if (!(cfg.p > 0.0 && cfg.p < 1.0)) {
      throw ValidationError("experiment: p must lie in (0, 1)");
    }
    if (cfg.tables_per_n == 0) {
      throw ValidationError("experiment: tables_per_n must be at least 1");
    }
    if (!(cfg.tau > 0.0 && cfg.tau < 1.0)) {
      throw ValidationError("experiment: tau must lie in (0, 1)");
    }
    auto const& f = cfg.forest;
    if (f.n_trees == 0 || f.max_depth == 0 || f.min_leaf == 0
        || f.features_per_split == 0 || f.features_per_split > feature_count) {
      throw ValidationError("experiment: invalid forest hyperparameters");
    }
  }

  HealConfig heal_config(ExperimentConfig const& cfg) {
    HealConfig h;
    h.tau                   = cfg.tau;
    h.trust.symmetric       = cfg.symmetric_trust;
    h.votes.bilateral       = cfg.bilateral_votes;
    h.vote_feature          = cfg.vote_feature;
    h.guard_pass2           = cfg.guard_pass2;
    h.enforce_associativity = cfg.enforce_associativity;
    return h;
  }

  namespace {
    json config_json(ExperimentConfig const& cfg, bool with_paths) {
      auto const& f = cfg.forest;
      json        j{
          {"n_values", cfg.n_values},
          {"p", cfg.p},
          {"tables_per_n", cfg.tables_per_n},
          {"seed", cfg.seed},
          {"mode", to_string(cfg.mode)},
          {"tau", cfg.tau},
          {"forest",
           {{"n_trees", f.n_trees},
            {"max_depth",
             f.max_depth == unlimited_depth ? json(nullptr) : json(f.max_depth)},
            {"min_leaf", f.min_leaf},
            {"features_per_split", f.features_per_split},
            {"criterion",
             f.criterion == split_criterion::gini ? "gini" : "entropy"}}},
          {"heal",
           {{"guard_pass2", cfg.guard_pass2},
            {"enforce_associativity", cfg.enforce_associativity},
            {"symmetric_trust", cfg.symmetric_trust},
            {"bilateral_votes", cfg.bilateral_votes},
            {"vote_feature", cfg.vote_feature}}}};
      if (with_paths) {
        j["out_dir"] = cfg.out_dir;
        j["cache"]   = cfg.cache;
      }
      return j;
    }

    void reject_unknown(json const& obj,
                        std::initializer_list<char const*> keys,
                        std::string const& where) {
      for (auto const& [key, value] : obj.items()) {
        if (std::none_of(keys.begin(), keys.end(), [&](char const* k) {
              return key == k;
            })) {
          throw ValidationError(where + ": unknown key \"" + key + "\"");
        }
      }
    }

    template <typename T>
    void optional_field(json const& obj, char const* key, T& out) {
      if (obj.contains(key)) {
        out = detail::required<T>(obj, key);
      }
    }

    ExperimentConfig config_from(json const& j) {
      if (!j.is_object()) {
        throw ValidationError("config: expected a JSON object");
      }
      reject_unknown(j,
                     {"n_values",
                      "p",
                      "tables_per_n",
                      "seed",
                      "mode",
                      "tau",
                      "forest",
                      "heal",
                      "out_dir",
                      "cache"},
                     "config");
      ExperimentConfig cfg;
      optional_field(j, "n_values", cfg.n_values);
      optional_field(j, "p", cfg.p);
      optional_field(j, "tables_per_n", cfg.tables_per_n);
      optional_field(j, "seed", cfg.seed);
      optional_field(j, "tau", cfg.tau);
      optional_field(j, "out_dir", cfg.out_dir);
      optional_field(j, "cache", cfg.cache);
      if (j.contains("mode")) {
        cfg.mode = heal_mode_from_string(detail::required<std::string>(j, "mode"));
      }
      if (j.contains("forest")) {
        auto const& f = j.at("forest");
        if (!f.is_object()) {
          throw ValidationError("config: forest must be an object");
        }
        reject_unknown(f,
                       {"n_trees",
                        "max_depth",
                        "min_leaf",
                        "features_per_split",
                        "criterion"},
                       "config.forest");
        optional_field(f, "n_trees", cfg.forest.n_trees);
        if (f.contains("max_depth")) {
          cfg.forest.max_depth
              = f.at("max_depth").is_null()
                    ? unlimited_depth
                    : detail::required<std::size_t>(f, "max_depth");
        }
        optional_field(f, "min_leaf", cfg.forest.min_leaf);
        optional_field(f, "features_per_split", cfg.forest.features_per_split);
        if (f.contains("criterion")) {
          auto const c = detail::required<std::string>(f, "criterion");
          if (c == "gini") {
            cfg.forest.criterion = split_criterion::gini;
          } else if (c == "entropy") {
            cfg.forest.criterion = split_criterion::entropy;
          } else {
            throw ValidationError("config: unknown criterion \"" + c + "\"");
          }
        }
      }
      if (j.contains("heal")) {
        auto const& h = j.at("heal");
        if (!h.is_object()) {
          throw ValidationError("config: heal must be an object");
        }
        reject_unknown(h,
                       {"guard_pass2",
                        "enforce_associativity",
                        "symmetric_trust",
                        "bilateral_votes",
                        "vote_feature"},
                       "config.heal");
        optional_field(h, "guard_pass2", cfg.guard_pass2);
        optional_field(h, "enforce_associativity", cfg.enforce_associativity);
        optional_field(h, "symmetric_trust", cfg.symmetric_trust);
        optional_field(h, "bilateral_votes", cfg.bilateral_votes);
        optional_field(h, "vote_feature", cfg.vote_feature);
      }
      validate(cfg);
      return cfg;
    }
  }  // namespace

  ExperimentConfig experiment_config_from_json(std::string const& text) {
    json j;
    try {
      j = json::parse(text);
    } catch (json::parse_error const& e) {
      throw ParseError(std::string("config: ") + e.what(), 0);
    }
    return config_from(j);
  }

  std::string experiment_config_to_json(ExperimentConfig const& cfg) {
    return config_json(cfg, true).dump(2);
  }

  ////////////////////////////////////////////////////////////////////////////
  // Run records
  ////////////////////////////////////////////////////////////////////////////

  OrderAggregate aggregate(std::size_t n, std::span<TableSummary const> rows) {
    OrderAggregate a;
    a.n           = n;
    a.test_tables = rows.size();
    if (rows.empty()) {
      return a;
    }
    std::size_t full = 0, baseline = 0, pass1 = 0, with_pass1 = 0;
    double      frac = 0.0, acc = 0.0, cacc = 0.0;
    for (auto const& r : rows) {
      full += r.fully_associative ? 1 : 0;
      baseline += r.baseline_associative ? 1 : 0;
      frac += r.assoc_fraction;
      acc += r.cell_accuracy;
      cacc += r.corrupt_accuracy;
      if (r.pass1_fully_associative) {
        ++with_pass1;
        pass1 += *r.pass1_fully_associative ? 1 : 0;
      }
    }
    auto const count        = static_cast<double>(rows.size());
    a.pct_fully_associative = 100.0 * static_cast<double>(full) / count;
    a.pct_baseline          = 100.0 * static_cast<double>(baseline) / count;
    a.mean_assoc_fraction   = frac / count;
    a.mean_cell_accuracy    = acc / count;
    a.mean_corrupt_accuracy = cacc / count;
    if (with_pass1 == rows.size()) {
      a.pct_pass1 = 100.0 * static_cast<double>(pass1) / count;
    }
    return a;
  }

  namespace {
    json optional_json(std::optional<bool> v) {
      return v ? json(*v) : json(nullptr);
    }
    json optional_json(std::optional<double> v) {
      return v ? json(*v) : json(nullptr);
    }

    json record_body(RunRecord const& r) {
      json per_n = json::array();
      for (auto const& a : r.per_n) {
        per_n.push_back({{"n", a.n},
                         {"train_tables", a.train_tables},
                         {"test_tables", a.test_tables},
                         {"pct_fully_associative", a.pct_fully_associative},
                         {"mean_assoc_fraction", a.mean_assoc_fraction},
                         {"mean_cell_accuracy", a.mean_cell_accuracy},
                         {"mean_corrupt_accuracy", a.mean_corrupt_accuracy},
                         {"pct_baseline", a.pct_baseline},
                         {"pct_pass1", optional_json(a.pct_pass1)}});
      }
      json tables = json::array();
      for (auto const& t : r.tables) {
        tables.push_back(
            {{"n", t.n},
             {"index", t.index},
             {"pair_seed", t.pair_seed},
             {"corrupted", t.corrupted},
             {"baseline_associative", t.baseline_associative},
             {"corrupt_accuracy", t.corrupt_accuracy},
             {"fully_associative", t.fully_associative},
             {"assoc_fraction", t.assoc_fraction},
             {"cell_accuracy", t.cell_accuracy},
             {"pass1_fully_associative", optional_json(t.pass1_fully_associative)}});
      }
      return {{"artifact", "semiheal-run"},
              {"version", r.version},
              {"config", config_json(r.config, false)},
              {"status", r.failed ? "failed" : "ok"},
              {"failure", r.failed ? json(r.failure) : json(nullptr)},
              {"per_n", std::move(per_n)},
              {"tables", std::move(tables)}};
    }

    std::uint64_t fnv1a(std::string const& s) {
      std::uint64_t h = 0xcbf29ce484222325ULL;
      for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
      }
      return h;
    }

    std::string hex(std::uint64_t h) {
      char buf[17];
      std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
      return buf;
    }

    template <typename T>
    std::optional<T> nullable(json const& obj, char const* key) {
      if (!obj.contains(key)) {
        throw ValidationError(std::string("missing field \"") + key + "\"");
      }
      if (obj.at(key).is_null()) {
        return std::nullopt;
      }
      return detail::required<T>(obj, key);
    }
  }  // namespace

  std::uint64_t content_hash(RunRecord const& r) {
    return fnv1a(record_body(r).dump());
  }

  std::string run_record_to_json(RunRecord const& r) {
    auto j                  = record_body(r);
    j["wall_clock_seconds"] = r.wall_clock_seconds;
    j["content_hash"]       = hex(content_hash(r));
    return j.dump();
  }

  RunRecord run_record_from_json(std::string const& line) {
    json j;
    try {
      j = json::parse(line);
    } catch (json::parse_error const& e) {
      throw ParseError(std::string("run record: ") + e.what(), 0);
    }
    try {
      if (detail::required<std::string>(j, "artifact") != "semiheal-run") {
        throw ValidationError("not a run record");
      }
      RunRecord r;
      r.version = detail::required<int>(j, "version");
      if (r.version != run_record_version) {
        throw ValidationError("unsupported run record version "
                              + std::to_string(r.version));
      }
      r.config = config_from(detail::required<json>(j, "config"));
      r.config.out_dir.clear();
      r.config.cache.clear();
      auto const status = detail::required<std::string>(j, "status");
      if (status != "ok" && status != "failed") {
        throw ValidationError("unknown status \"" + status + "\"");
      }
      r.failed = status == "failed";
      if (r.failed) {
        r.failure = detail::required<std::string>(j, "failure");
      }
      for (auto const& a : detail::required<json>(j, "per_n")) {
        OrderAggregate o;
        o.n                     = detail::required<std::size_t>(a, "n");
        o.train_tables          = detail::required<std::size_t>(a, "train_tables");
        o.test_tables           = detail::required<std::size_t>(a, "test_tables");
        o.pct_fully_associative = detail::required<double>(a, "pct_fully_associative");
        o.mean_assoc_fraction   = detail::required<double>(a, "mean_assoc_fraction");
        o.mean_cell_accuracy    = detail::required<double>(a, "mean_cell_accuracy");
        o.mean_corrupt_accuracy = detail::required<double>(a, "mean_corrupt_accuracy");
        o.pct_baseline          = detail::required<double>(a, "pct_baseline");
        o.pct_pass1             = nullable<double>(a, "pct_pass1");
        r.per_n.push_back(o);
      }
      for (auto const& t : detail::required<json>(j, "tables")) {
        TableSummary s;
        s.n                    = detail::required<std::size_t>(t, "n");
        s.index                = detail::required<std::size_t>(t, "index");
        s.pair_seed            = detail::required<std::uint64_t>(t, "pair_seed");
        s.corrupted            = detail::required<std::size_t>(t, "corrupted");
        s.baseline_associative = detail::required<bool>(t, "baseline_associative");
        s.corrupt_accuracy     = detail::required<double>(t, "corrupt_accuracy");
        s.fully_associative    = detail::required<bool>(t, "fully_associative");
        s.assoc_fraction       = detail::required<double>(t, "assoc_fraction");
        s.cell_accuracy        = detail::required<double>(t, "cell_accuracy");
        s.pass1_fully_associative = nullable<bool>(t, "pass1_fully_associative");
        r.tables.push_back(s);
      }
      r.wall_clock_seconds = detail::required<double>(j, "wall_clock_seconds");
      auto const stored    = detail::required<std::string>(j, "content_hash");
      if (stored != hex(content_hash(r))) {
        throw ValidationError("content hash mismatch");
      }
      return r;
    } catch (ParseError const&) {
      throw;
    } catch (ValidationError const& e) {
      throw ParseError(std::string("run record: ") + e.what(), 0);
    }
  }

  RunRecord run_experiment(ExperimentConfig const& cfg,
                           HealObserver const&     observer) {
    validate(cfg);
    auto const start = std::chrono::steady_clock::now();
    RunRecord  record;
    record.config = cfg;
    record.config.out_dir.clear();
    record.config.cache.clear();
    auto const heal_cfg = heal_config(cfg);
    bool const needs_model
        = cfg.mode == heal_mode::hybrid || cfg.mode == heal_mode::ml_only;

    auto const elapsed = [&] {
      return std::chrono::duration<double>(std::chrono::steady_clock::now()
                                           - start)
          .count();
    };

    try {
      for (auto const n : cfg.n_values) {
        auto const order_seed = derive_seed(cfg.seed, n);
        auto const test       = cfg.tables_per_n;
        auto const n_train    = (7 * test + 2) / 3;
        auto const total      = n_train + test;

        GenConfig gen;
        gen.n     = n;
        gen.count = total;
        gen.seed  = derive_seed(order_seed, 1);
        auto const clean = generate(gen).tables;

        std::vector<TablePair> pairs;
        pairs.reserve(total);
        for (std::size_t i = 0; i < total; ++i) {
          pairs.push_back(corrupt(
              clean[i], cfg.p, derive_seed(derive_seed(order_seed, 2), i)));
        }

        std::vector<std::size_t> order(total);
        for (std::size_t i = 0; i < total; ++i) {
          order[i] = i;
        }
        Rng split(derive_seed(order_seed, 3));
        split.shuffle(std::span<std::size_t>(order));
        std::vector<std::size_t> train_idx(order.begin(),
                                           order.begin()
                                               + static_cast<std::ptrdiff_t>(n_train));
        std::vector<std::size_t> test_idx(
            order.begin() + static_cast<std::ptrdiff_t>(n_train), order.end());
        std::sort(train_idx.begin(), train_idx.end());
        std::sort(test_idx.begin(), test_idx.end());

        std::optional<ForestModel> model;
        if (needs_model) {
          std::vector<LabeledCell> data;
          for (auto i : train_idx) {
            auto rows = labeled_cells(pairs[i].corrupt,
                                      pairs[i].corrupted_cells,
                                      i,
                                      heal_cfg.trust,
                                      heal_cfg.votes,
                                      heal_cfg.vote_feature);
            data.insert(data.end(), rows.begin(), rows.end());
          }
          auto params = cfg.forest;
          params.seed = derive_seed(order_seed, 4);
          model       = train(std::move(data), params);
        }

        std::vector<TableSummary> rows;
        rows.reserve(test);
        auto const cells = static_cast<double>(n * n);
        for (auto i : test_idx) {
          auto const& pair   = pairs[i];
          auto const  report = heal(pair, cfg.mode, model ? &*model : nullptr, heal_cfg);
          if (observer) {
            observer(report);
          }
          TableSummary s;
          s.n                    = n;
          s.index                = i;
          s.pair_seed            = pair.seed;
          s.corrupted            = pair.corrupted_cells.size();
          s.baseline_associative = is_associative(pair.corrupt);
          s.corrupt_accuracy
              = 1.0 - static_cast<double>(pair.corrupted_cells.size()) / cells;
          s.fully_associative       = report.fully_associative;
          s.assoc_fraction          = report.associativity_fraction;
          s.cell_accuracy           = report.cell_accuracy;
          s.pass1_fully_associative = report.pass1_fully_associative;
          rows.push_back(s);
        }
        auto agg         = aggregate(n, rows);
        agg.train_tables = n_train;
        record.per_n.push_back(agg);
        record.tables.insert(record.tables.end(), rows.begin(), rows.end());
      }
    } catch (std::exception const& e) {
      record.failed             = true;
      record.failure            = e.what();
      record.wall_clock_seconds = elapsed();
      bool const validation = dynamic_cast<ValidationError const*>(&e) != nullptr;
      throw ExperimentError(e.what(), std::move(record), validation);
    }
    record.wall_clock_seconds = elapsed();
    return record;
  }

  ////////////////////////////////////////////////////////////////////////////
  // Statistics
  ////////////////////////////////////////////////////////////////////////////

  std::size_t exceeds_c_threshold(std::size_t n, double p) {
    if (n < 2) {
      throw ValidationError("exceeds-C: n must be at least 2");
    }
    if (!(p > 0.0 && p < 1.0)) {
      throw ValidationError("exceeds-C: p must lie in (0, 1)");
    }
    // Absorbs rounding, e.g. (1 - 0.15) * 20 = 17.000000000000004.
    auto const c = std::ceil((1.0 - p) * static_cast<double>(n) - 1e-9);
    return std::max<std::size_t>(1, static_cast<std::size_t>(c));
  }

  double exceeds_c_probability(std::size_t n, double p) {
    auto const c  = exceeds_c_threshold(n, p);
    auto const nl = static_cast<long double>(n);
    auto const q  = 1.0L / nl;
    // Neumaier summation of C(n,k) q^k (1-q)^(n-k), k = c..n.
    long double sum = 0.0L, comp = 0.0L;
    for (std::size_t k = c; k <= n; ++k) {
      long double binom = 1.0L;
      for (std::size_t i = 1; i <= k; ++i) {
        binom = binom * static_cast<long double>(n - k + i)
                / static_cast<long double>(i);
      }
      auto const term = binom * std::pow(q, static_cast<long double>(k))
                        * std::pow(1.0L - q, static_cast<long double>(n - k));
      auto const t = sum + term;
      comp += std::fabs(sum) >= std::fabs(term) ? (sum - t) + term
                                                : (term - t) + sum;
      sum = t;
    }
    return static_cast<double>(sum + comp);
  }

  FrequencyReport frequency_report(CayleyTable const& t) {
    if (t.has_masked()) {
      throw IncompleteTableError("frequency report: table has masked cells");
    }
    auto const      n = t.order();
    FrequencyReport r;
    r.n = n;
    std::vector<std::size_t> counts(n, 0);
    for (auto v : t.entries()) {
      ++counts[static_cast<std::size_t>(v)];
    }
    auto const cells   = static_cast<double>(n * n);
    auto const uniform = 1.0 / static_cast<double>(n);
    for (std::size_t v = 0; v < n; ++v) {
      auto const f = static_cast<double>(counts[v]) / cells;
      r.values.push_back({static_cast<Element>(v), counts[v], f, f - uniform});
    }
    return r;
  }

  std::string frequency_report_to_json(FrequencyReport const& r) {
    json values = json::array();
    for (auto const& v : r.values) {
      values.push_back({{"value", v.value},
                        {"count", v.count},
                        {"frequency", v.frequency},
                        {"deviation", v.deviation}});
    }
    return json{{"n", r.n}, {"values", std::move(values)}}.dump();
  }

  ////////////////////////////////////////////////////////////////////////////
  // Cache and export
  ////////////////////////////////////////////////////////////////////////////

  namespace {
    // Hash field of a cache line, without a full parse.
    std::optional<std::string> stored_hash(std::string const& line) {
      try {
        auto const j = json::parse(line);
        if (j.is_object() && j.contains("content_hash")
            && j.at("content_hash").is_string()) {
          return j.at("content_hash").get<std::string>();
        }
      } catch (json::exception const&) {
      }
      return std::nullopt;
    }
  }  // namespace

  bool cache_write(std::filesystem::path const& path, RunRecord const& r) {
    auto const hash = hex(content_hash(r));
    {
      std::ifstream in(path);
      std::string   line;
      while (std::getline(in, line)) {
        if (stored_hash(line) == hash) {
          return false;
        }
      }
    }
    if (path.has_parent_path()) {
      std::filesystem::create_directories(path.parent_path());
    }
    std::ofstream out(path, std::ios::app);
    if (!out) {
      throw std::runtime_error("cache: cannot open " + path.string());
    }
    out << run_record_to_json(r) << '\n';
    if (!out) {
      throw std::runtime_error("cache: write failed on " + path.string());
    }
    return true;
  }

  CacheQueryResult cache_query(std::filesystem::path const& path,
                               CacheFilter const&           filter) {
    CacheQueryResult result;
    std::ifstream    in(path);
    if (!in) {
      return result;
    }
    std::string line;
    while (std::getline(in, line)) {
      if (line.find_first_not_of(" \t\r") == std::string::npos) {
        continue;
      }
      RunRecord r;
      try {
        r = run_record_from_json(line);
      } catch (ValidationError const&) {
        ++result.skipped;
        continue;
      }
      auto const& c = r.config;
      if (filter.n
          && std::find(c.n_values.begin(), c.n_values.end(), *filter.n)
                 == c.n_values.end()) {
        continue;
      }
      if (filter.p && std::fabs(c.p - *filter.p) > 1e-12) {
        continue;
      }
      if (filter.mode && c.mode != *filter.mode) {
        continue;
      }
      result.records.push_back(std::move(r));
    }
    return result;
  }

  ExportPaths export_metrics(std::span<RunRecord const>   records,
                             std::filesystem::path const& dir) {
    for (auto const& r : records) {
      if (r.version != run_record_version) {
        throw ValidationError("export: record schema version "
                              + std::to_string(r.version) + " differs from "
                              + std::to_string(run_record_version));
      }
    }
    std::filesystem::create_directories(dir);
    ExportPaths paths{dir / "metrics.csv", dir / "pass_ablation.csv"};

    auto const fmt = [](double x) {
      char buf[32];
      std::snprintf(buf, sizeof buf, "%.6g", x);
      return std::string(buf);
    };

    std::ofstream metrics(paths.metrics);
    std::ofstream ablation(paths.ablation);
    if (!metrics || !ablation) {
      throw std::runtime_error("export: cannot write into " + dir.string());
    }
    metrics << "n,pct_fully_associative,mean_assoc_fraction,mean_cell_accuracy,"
               "mode\n";
    ablation << "n,baseline,pass1,pass2\n";
    for (auto const& r : records) {
      for (auto const& a : r.per_n) {
        metrics << a.n << ',' << fmt(a.pct_fully_associative) << ','
                << fmt(a.mean_assoc_fraction) << ','
                << fmt(a.mean_cell_accuracy) << ',' << to_string(r.config.mode)
                << '\n';
        if (a.pct_pass1) {
          ablation << a.n << ',' << fmt(a.pct_baseline) << ','
                   << fmt(*a.pct_pass1) << ',' << fmt(a.pct_fully_associative)
                   << '\n';
        }
      }
    }
    if (!metrics || !ablation) {
      throw std::runtime_error("export: write failed");
    }
    return paths;
  }

}  // namespace semiheal
