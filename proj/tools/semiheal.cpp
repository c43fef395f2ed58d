// semiheal: generate, corrupt, inspect and heal semigroup Cayley tables.
//
// Exit status: 0 success, 1 validation error, 2 runtime failure.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "semiheal/algebra.hpp"
#include "semiheal/datagen.hpp"
#include "semiheal/errors.hpp"
#include "semiheal/forest.hpp"
#include "semiheal/healing.hpp"
#include "semiheal/rng.hpp"
#include "semiheal/table_io.hpp"
#include "semiheal/trust.hpp"
#include "semiheal/workbench.hpp"

namespace fs = std::filesystem;
using namespace semiheal;

namespace {

  enum exit_code : int { ok = 0, validation_failure = 1, runtime_failure = 2 };

  struct Globals {
    std::optional<std::uint64_t> seed;
    std::string                  out_dir;
    std::string                  config_path;
  };

  ExperimentConfig load_config(Globals const& g) {
    ExperimentConfig cfg;
    if (!g.config_path.empty()) {
      std::ifstream in(g.config_path);
      if (!in) {
        throw ValidationError("cannot read config " + g.config_path);
      }
      std::stringstream ss;
      ss << in.rdbuf();
      cfg = experiment_config_from_json(ss.str());
    }
    if (g.seed) {
      cfg.seed = *g.seed;
    }
    if (!g.out_dir.empty()) {
      cfg.out_dir = g.out_dir;
    }
    return cfg;
  }

  fs::path output_path(ExperimentConfig const& cfg,
                       std::string const&      explicit_path,
                       char const*             default_name) {
    if (!explicit_path.empty()) {
      return explicit_path;
    }
    fs::create_directories(cfg.out_dir);
    return fs::path(cfg.out_dir) / default_name;
  }

  std::ifstream open_input(std::string const& path) {
    std::ifstream in(path);
    if (!in) {
      throw ValidationError("cannot read " + path);
    }
    return in;
  }

  std::ofstream open_output(fs::path const& path) {
    if (path.has_parent_path()) {
      fs::create_directories(path.parent_path());
    }
    std::ofstream out(path);
    if (!out) {
      throw std::runtime_error("cannot write " + path.string());
    }
    return out;
  }

  bool is_dataset_file(std::string const& path) {
    auto        in = open_input(path);
    std::string line;
    while (std::getline(in, line)) {
      if (line.find_first_not_of(" \t\r") != std::string::npos) {
        return line.find("semiheal-dataset") != std::string::npos;
      }
    }
    return false;
  }

  SeedCell parse_seed_cell(std::string const& s) {
    SeedCell    c;
    long long   i = 0, j = 0, v = 0;
    char        tail = 0;
    if (std::sscanf(s.c_str(), "%lld,%lld,%lld%c", &i, &j, &v, &tail) != 3
        || i < 0 || j < 0 || v < 0) {
      throw ValidationError("seed cell \"" + s + "\" is not i,j,value");
    }
    c.row   = static_cast<std::size_t>(i);
    c.col   = static_cast<std::size_t>(j);
    c.value = static_cast<Element>(v);
    return c;
  }

  struct ForestFlags {
    std::optional<std::size_t> trees, depth, min_leaf, features;
    std::optional<std::string> criterion;
  };

  void add_forest_flags(CLI::App* cmd, ForestFlags& f) {
    cmd->add_option("--trees", f.trees, "Number of trees");
    cmd->add_option("--max-depth", f.depth, "Maximum tree depth");
    cmd->add_option("--min-leaf", f.min_leaf, "Minimum samples per leaf");
    cmd->add_option("--features", f.features, "Features tried per split");
    cmd->add_option("--criterion", f.criterion, "gini or entropy")
        ->check(CLI::IsMember({"gini", "entropy"}));
  }

  void apply_forest_flags(ForestFlags const& f, ExperimentConfig& cfg) {
    if (f.trees) cfg.forest.n_trees = *f.trees;
    if (f.depth) cfg.forest.max_depth = *f.depth;
    if (f.min_leaf) cfg.forest.min_leaf = *f.min_leaf;
    if (f.features) cfg.forest.features_per_split = *f.features;
    if (f.criterion) {
      cfg.forest.criterion = *f.criterion == "gini" ? split_criterion::gini
                                                    : split_criterion::entropy;
    }
  }

  struct HealFlags {
    bool symmetric_trust = false;
    bool bilateral       = false;
    bool no_vote_feature = false;
  };

  void add_heal_flags(CLI::App* cmd, HealFlags& h) {
    cmd->add_flag("--symmetric-trust", h.symmetric_trust,
                  "Also check (ki)j = k(ij) in trust scores");
    cmd->add_flag("--bilateral", h.bilateral,
                  "Collect votes from column decompositions too");
    cmd->add_flag("--no-vote-feature", h.no_vote_feature,
                  "Zero the vote-agreement forest feature");
  }

  void apply_heal_flags(HealFlags const& h, ExperimentConfig& cfg) {
    cfg.symmetric_trust |= h.symmetric_trust;
    cfg.bilateral_votes |= h.bilateral;
    if (h.no_vote_feature) {
      cfg.vote_feature = false;
    }
  }

  void print_aggregates(RunRecord const& r) {
    std::printf("%4s %8s %10s %10s %10s %8s\n",
                "n", "full%", "assoc", "cell_acc", "input_acc", "pass1%");
    for (auto const& a : r.per_n) {
      std::printf("%4zu %8.1f %10.4f %10.4f %10.4f ",
                  a.n,
                  a.pct_fully_associative,
                  a.mean_assoc_fraction,
                  a.mean_cell_accuracy,
                  a.mean_corrupt_accuracy);
      if (a.pct_pass1) {
        std::printf("%8.1f\n", *a.pct_pass1);
      } else {
        std::printf("%8s\n", "-");
      }
    }
  }

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Generate, corrupt and heal finite semigroup Cayley tables",
               "semiheal"};
  app.require_subcommand(1);
  app.fallthrough();

  Globals g;
  app.add_option("--seed", g.seed, "Master seed for every randomized step");
  app.add_option("--out-dir", g.out_dir, "Directory for default outputs");
  app.add_option("--config", g.config_path, "Experiment config (JSON)");

  // gen
  auto*                    gen = app.add_subcommand("gen", "Generate associative tables");
  std::size_t              gen_n     = 0;
  std::size_t              gen_count = 1;
  bool                     gen_distinct = false;
  std::vector<std::string> gen_cells;
  std::string              gen_format = "jsonl";
  std::string              gen_output;
  gen->add_option("--n", gen_n, "Table order")->required();
  gen->add_option("--count", gen_count, "Number of tables");
  gen->add_flag("--distinct", gen_distinct,
                "One table per isomorphism/anti-isomorphism class (n <= 8)");
  gen->add_option("--seed-cell", gen_cells, "Fixed entry i,j,value");
  gen->add_option("--format", gen_format, "jsonl or grid")
      ->check(CLI::IsMember({"jsonl", "grid"}));
  gen->add_option("-o,--output", gen_output, "Output file");

  // corrupt
  auto*       cor = app.add_subcommand("corrupt", "Corrupt tables into a dataset");
  std::string cor_input, cor_output;
  std::optional<double> cor_p;
  cor->add_option("-i,--input", cor_input, "Tables (JSON lines or grids)")
      ->required();
  cor->add_option("--p", cor_p, "Corruption rate");
  cor->add_option("-o,--output", cor_output, "Output dataset");

  // trust
  auto*       tru = app.add_subcommand("trust", "Trust maps of tables or pairs");
  std::string tru_input, tru_output;
  bool        tru_symmetric = false;
  tru->add_option("-i,--input", tru_input, "Tables or dataset")->required();
  tru->add_flag("--symmetric-trust", tru_symmetric,
                "Also check (ki)j = k(ij)");
  tru->add_option("-o,--output", tru_output, "Output file");

  // train
  auto*       trn = app.add_subcommand("train", "Train the corruption detector");
  std::string trn_dataset, trn_output;
  ForestFlags trn_forest;
  HealFlags   trn_heal;
  trn->add_option("-d,--dataset", trn_dataset, "Training dataset")->required();
  trn->add_option("-o,--output", trn_output, "Model file");
  add_forest_flags(trn, trn_forest);
  add_heal_flags(trn, trn_heal);

  // heal
  auto*       hl = app.add_subcommand("heal", "Heal a dataset");
  std::string hl_dataset, hl_model, hl_output, hl_tables;
  std::optional<std::string> hl_mode;
  std::optional<double>      hl_tau;
  HealFlags                  hl_heal;
  hl->add_option("-d,--dataset", hl_dataset, "Dataset to heal")->required();
  hl->add_option("--mode", hl_mode, "det, backtrack, hybrid or ml_only")
      ->check(CLI::IsMember({"det", "backtrack", "hybrid", "ml_only"}));
  hl->add_option("--model", hl_model, "Model for hybrid and ml_only");
  hl->add_option("--tau", hl_tau, "Masking threshold");
  hl->add_option("-o,--output", hl_output, "Report file (JSON lines)");
  hl->add_option("--tables-out", hl_tables, "Healed tables (JSON lines)");
  add_heal_flags(hl, hl_heal);

  // experiment
  auto* ex = app.add_subcommand("experiment", "Run a seeded experiment sweep");
  std::vector<std::size_t>   ex_n;
  std::optional<double>      ex_p, ex_tau;
  std::optional<std::size_t> ex_tables;
  std::optional<std::string> ex_mode;
  std::string                ex_cache, ex_output;
  bool                       ex_no_cache = false;
  ForestFlags                ex_forest;
  HealFlags                  ex_heal;
  ex->add_option("--n-values", ex_n, "Orders to sweep");
  ex->add_option("--p", ex_p, "Corruption rate");
  ex->add_option("--tables", ex_tables, "Test tables per order");
  ex->add_option("--mode", ex_mode, "det, backtrack, hybrid or ml_only")
      ->check(CLI::IsMember({"det", "backtrack", "hybrid", "ml_only"}));
  ex->add_option("--tau", ex_tau, "Masking threshold");
  ex->add_option("--cache", ex_cache, "Run cache (JSON lines)");
  ex->add_flag("--no-cache", ex_no_cache, "Do not touch the cache");
  ex->add_option("-o,--output", ex_output, "Run record file");
  add_forest_flags(ex, ex_forest);
  add_heal_flags(ex, ex_heal);

  // stats
  auto* st = app.add_subcommand("stats", "Binomial tail, value frequencies, cached runs");
  std::optional<std::size_t> st_n;
  std::optional<double>      st_p;
  std::optional<std::string> st_mode;
  std::string                st_tables, st_cache;
  st->add_option("--n", st_n, "Order");
  st->add_option("--p", st_p, "Corruption rate");
  st->add_option("--mode", st_mode, "Filter cached runs by mode")
      ->check(CLI::IsMember({"det", "backtrack", "hybrid", "ml_only"}));
  st->add_option("--tables", st_tables, "Value frequencies of these tables");
  st->add_option("--cache", st_cache, "Summarize cached runs");

  // export
  auto* exp = app.add_subcommand("export", "Write metric CSVs from the cache");
  std::optional<std::size_t> exp_n;
  std::optional<double>      exp_p;
  std::optional<std::string> exp_mode;
  std::string                exp_cache;
  exp->add_option("--cache", exp_cache, "Run cache (JSON lines)");
  exp->add_option("--n", exp_n, "Only runs covering this order");
  exp->add_option("--p", exp_p, "Only runs at this corruption rate");
  exp->add_option("--mode", exp_mode, "Only runs in this mode")
      ->check(CLI::IsMember({"det", "backtrack", "hybrid", "ml_only"}));

  try {
    app.parse(argc, argv);
  } catch (CLI::ParseError const& e) {
    return app.exit(e) == 0 ? ok : validation_failure;
  }

  try {
    auto cfg = load_config(g);

    if (gen->parsed()) {
      GenConfig gc;
      gc.n                = gen_n;
      gc.count            = gen_count;
      gc.seed             = cfg.seed;
      gc.distinct_classes = gen_distinct;
      for (auto const& s : gen_cells) {
        gc.seed_cells.push_back(parse_seed_cell(s));
      }
      auto const result = generate(gc);
      auto const path   = output_path(
          cfg, gen_output, gen_format == "grid" ? "tables.txt" : "tables.jsonl");
      auto out = open_output(path);
      if (gen_format == "grid") {
        for (auto const& t : result.tables) {
          write_grid(out, t);
          out << '\n';
        }
      } else {
        write_tables_jsonl(out, result.tables);
      }
      if (result.shortfall) {
        std::fprintf(stderr,
                     "warning: only %zu of %zu tables exist\n",
                     result.tables.size(),
                     gen_count);
      }
      std::printf("%zu tables -> %s\n", result.tables.size(), path.c_str());
    } else if (cor->parsed()) {
      auto in     = open_input(cor_input);
      auto tables = read_tables(in);
      auto p      = cor_p.value_or(cfg.p);
      std::vector<TablePair> pairs;
      for (std::size_t i = 0; i < tables.size(); ++i) {
        pairs.push_back(corrupt(tables[i], p, derive_seed(cfg.seed, i)));
      }
      auto const path = output_path(cfg, cor_output, "dataset.jsonl");
      auto       out  = open_output(path);
      write_dataset(out, pairs);
      std::printf("%zu pairs -> %s\n", pairs.size(), path.c_str());
    } else if (tru->parsed()) {
      TrustOptions opts{tru_symmetric || cfg.symmetric_trust};
      auto const   path = output_path(cfg, tru_output, "trust.jsonl");
      auto         out  = open_output(path);
      if (is_dataset_file(tru_input)) {
        auto        in    = open_input(tru_input);
        auto const  pairs = read_dataset(in);
        std::size_t separated = 0;
        for (auto const& pair : pairs) {
          out << trust_map_to_json(trust_map(pair.corrupt, opts)) << '\n';
          auto const s = trust_separation(pair, opts);
          separated += s.corrupted_mean < s.clean_mean ? 1 : 0;
        }
        std::printf("%zu trust maps -> %s\n", pairs.size(), path.c_str());
        std::printf("corrupted cells below clean cells in %zu of %zu pairs\n",
                    separated,
                    pairs.size());
      } else {
        auto       in     = open_input(tru_input);
        auto const tables = read_tables(in);
        for (auto const& t : tables) {
          out << trust_map_to_json(trust_map(t, opts)) << '\n';
        }
        std::printf("%zu trust maps -> %s\n", tables.size(), path.c_str());
      }
    } else if (trn->parsed()) {
      apply_forest_flags(trn_forest, cfg);
      apply_heal_flags(trn_heal, cfg);
      validate(cfg);
      auto       in    = open_input(trn_dataset);
      auto const pairs = read_dataset(in);
      auto const hc    = heal_config(cfg);
      std::vector<LabeledCell> data;
      for (std::size_t i = 0; i < pairs.size(); ++i) {
        auto rows = labeled_cells(pairs[i].corrupt,
                                  pairs[i].corrupted_cells,
                                  i,
                                  hc.trust,
                                  hc.votes,
                                  hc.vote_feature);
        data.insert(data.end(), rows.begin(), rows.end());
      }
      auto params = cfg.forest;
      params.seed = cfg.seed;
      auto const model = train(std::move(data), params);
      auto const path  = output_path(cfg, trn_output, "model.json");
      auto       out   = open_output(path);
      save_model(out, model);
      std::printf("%zu trees on %zu cells -> %s\n",
                  model.trees.size(),
                  pairs.size() == 0 ? 0 : pairs.size() * pairs[0].clean.order()
                                              * pairs[0].clean.order(),
                  path.c_str());
    } else if (hl->parsed()) {
      if (hl_mode) cfg.mode = heal_mode_from_string(*hl_mode);
      if (hl_tau) cfg.tau = *hl_tau;
      apply_heal_flags(hl_heal, cfg);
      validate(cfg);
      std::optional<ForestModel> model;
      if (!hl_model.empty()) {
        auto in = open_input(hl_model);
        model   = load_model(in);
      }
      auto       in    = open_input(hl_dataset);
      auto const pairs = read_dataset(in);
      auto const hc    = heal_config(cfg);
      auto const path  = output_path(cfg, hl_output, "heal_reports.jsonl");
      auto const tpath = output_path(cfg, hl_tables, "healed.jsonl");
      auto       out   = open_output(path);
      auto       tout  = open_output(tpath);
      std::size_t full = 0;
      double      acc  = 0.0;
      for (auto const& pair : pairs) {
        auto const r = heal(pair, cfg.mode, model ? &*model : nullptr, hc);
        out << heal_report_to_json(r) << '\n';
        tout << table_to_json(r.healed) << '\n';
        full += r.fully_associative ? 1 : 0;
        acc += r.cell_accuracy;
      }
      std::printf("%s: %zu of %zu fully associative, mean cell accuracy %.4f\n",
                  to_string(cfg.mode).c_str(),
                  full,
                  pairs.size(),
                  pairs.empty() ? 0.0 : acc / static_cast<double>(pairs.size()));
      std::printf("reports -> %s, tables -> %s\n", path.c_str(), tpath.c_str());
    } else if (ex->parsed()) {
      if (!ex_n.empty()) cfg.n_values = ex_n;
      if (ex_p) cfg.p = *ex_p;
      if (ex_tables) cfg.tables_per_n = *ex_tables;
      if (ex_mode) cfg.mode = heal_mode_from_string(*ex_mode);
      if (ex_tau) cfg.tau = *ex_tau;
      if (!ex_cache.empty()) cfg.cache = ex_cache;
      apply_forest_flags(ex_forest, cfg);
      apply_heal_flags(ex_heal, cfg);
      validate(cfg);
      auto const cache_path
          = cfg.cache.empty() ? fs::path(cfg.out_dir) / "cache.jsonl"
                              : fs::path(cfg.cache);
      auto const record_path = output_path(cfg, ex_output, "run.json");
      RunRecord  record;
      int        status = ok;
      try {
        record = run_experiment(cfg);
      } catch (ExperimentError const& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        record = e.partial();
        status = e.validation() ? validation_failure : runtime_failure;
      }
      {
        auto out = open_output(record_path);
        out << run_record_to_json(record) << '\n';
      }
      if (!ex_no_cache) {
        bool const added = cache_write(cache_path, record);
        std::printf("cache %s: %s\n",
                    added ? "appended" : "unchanged (same content hash)",
                    cache_path.c_str());
      }
      print_aggregates(record);
      std::printf("run record -> %s (%.1f s)\n",
                  record_path.c_str(),
                  record.wall_clock_seconds);
      return status;
    } else if (st->parsed()) {
      bool any = false;
      if (st_n) {
        any           = true;
        auto const p  = st_p.value_or(cfg.p);
        std::printf("n=%zu p=%g C=%zu Pr[X>=C]=%.10g\n",
                    *st_n,
                    p,
                    exceeds_c_threshold(*st_n, p),
                    exceeds_c_probability(*st_n, p));
      }
      if (!st_tables.empty()) {
        any     = true;
        auto in = open_input(st_tables);
        for (auto const& t : read_tables(in)) {
          std::printf("%s\n", frequency_report_to_json(frequency_report(t)).c_str());
        }
      }
      if (!st_cache.empty()) {
        any = true;
        CacheFilter f;
        f.p = st_p;
        if (st_mode) f.mode = heal_mode_from_string(*st_mode);
        auto const q = cache_query(st_cache, f);
        if (q.skipped > 0) {
          std::fprintf(stderr, "warning: skipped %zu unreadable cache lines\n",
                       q.skipped);
        }
        for (auto const& r : q.records) {
          std::printf("mode=%s p=%g seed=%llu tables_per_n=%zu%s\n",
                      to_string(r.config.mode).c_str(),
                      r.config.p,
                      static_cast<unsigned long long>(r.config.seed),
                      r.config.tables_per_n,
                      r.failed ? " FAILED" : "");
          print_aggregates(r);
        }
      }
      if (!any) {
        throw ValidationError("stats: give --n, --tables or --cache");
      }
    } else if (exp->parsed()) {
      auto const cache_path
          = !exp_cache.empty()
                ? fs::path(exp_cache)
                : (cfg.cache.empty() ? fs::path(cfg.out_dir) / "cache.jsonl"
                                     : fs::path(cfg.cache));
      CacheFilter f;
      f.n = exp_n;
      f.p = exp_p;
      if (exp_mode) f.mode = heal_mode_from_string(*exp_mode);
      auto const q = cache_query(cache_path, f);
      if (q.skipped > 0) {
        std::fprintf(stderr, "warning: skipped %zu unreadable cache lines\n",
                     q.skipped);
      }
      auto const paths = export_metrics(q.records, cfg.out_dir);
      std::printf("%zu runs -> %s, %s\n",
                  q.records.size(),
                  paths.metrics.c_str(),
                  paths.ablation.c_str());
    }
  } catch (ValidationError const& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return validation_failure;
  } catch (std::exception const& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return runtime_failure;
  }
  return ok;
}
