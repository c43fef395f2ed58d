#pragma once

// Experiment orchestration: seeded sweeps over table orders, aggregate
// metrics, a JSON-lines run cache, and the statistics used to reason about
// vote repair (binomial exceeds-C tail, value frequencies).

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "semiheal/forest.hpp"
#include "semiheal/healing.hpp"
#include "semiheal/table.hpp"

namespace semiheal {

  ////////////////////////////////////////////////////////////////////////////
  // Configuration
  ////////////////////////////////////////////////////////////////////////////

  inline constexpr std::size_t max_experiment_order = 30;

  struct ExperimentConfig {
    std::vector<std::size_t> n_values{3, 4, 5, 6, 7, 8, 9, 10};
    double                   p            = 0.15;
    // Test tables per order; ceil(7/3 * tables_per_n) more are generated for
    // training, so the split is 70/30.
    std::size_t   tables_per_n = 100;
    std::uint64_t seed         = 0;
    heal_mode     mode         = heal_mode::hybrid;
    double        tau          = 0.5;
    // forest.seed is not used; each order trains from a seed derived from
    // the master seed.
    ForestParams forest;
    bool         guard_pass2           = true;
    bool         enforce_associativity = true;
    bool         symmetric_trust       = false;
    bool         bilateral_votes       = false;
    bool         vote_feature          = true;
    // Output paths; not part of a run's identity.
    std::string out_dir = ".";
    std::string cache   = "";

    friend bool operator==(ExperimentConfig const&, ExperimentConfig const&)
        = default;
  };

  // Throws ValidationError.
  void validate(ExperimentConfig const& cfg);

  HealConfig heal_config(ExperimentConfig const& cfg);

  // Missing keys keep their defaults; unknown keys are rejected.
  ExperimentConfig experiment_config_from_json(std::string const& text);
  std::string      experiment_config_to_json(ExperimentConfig const& cfg);

  ////////////////////////////////////////////////////////////////////////////
  // Run records
  ////////////////////////////////////////////////////////////////////////////

  inline constexpr int run_record_version = 1;

  struct TableSummary {
    std::size_t   n     = 0;
    std::size_t   index = 0;  // position in the generated set for this n
    std::uint64_t pair_seed = 0;
    std::size_t   corrupted = 0;
    bool          baseline_associative = false;  // corrupt input
    double        corrupt_accuracy     = 0.0;
    bool          fully_associative    = false;
    double        assoc_fraction       = 0.0;
    double        cell_accuracy        = 0.0;
    std::optional<bool> pass1_fully_associative;

    friend bool operator==(TableSummary const&, TableSummary const&) = default;
  };

  struct OrderAggregate {
    std::size_t n               = 0;
    std::size_t train_tables    = 0;
    std::size_t test_tables     = 0;
    double      pct_fully_associative = 0.0;
    double      mean_assoc_fraction   = 0.0;
    double      mean_cell_accuracy    = 0.0;
    double      mean_corrupt_accuracy = 0.0;
    double      pct_baseline          = 0.0;
    std::optional<double> pct_pass1;  // hybrid only

    friend bool operator==(OrderAggregate const&, OrderAggregate const&)
        = default;
  };

  // Aggregates of one order's test rows, summed in the given order.
  // train_tables is left at 0.
  OrderAggregate aggregate(std::size_t n, std::span<TableSummary const> rows);

  struct RunRecord {
    int                         version = run_record_version;
    ExperimentConfig            config;  // output paths cleared
    std::vector<OrderAggregate> per_n;
    std::vector<TableSummary>   tables;
    bool                        failed = false;
    std::string                 failure;
    double                      wall_clock_seconds = 0.0;

    friend bool operator==(RunRecord const&, RunRecord const&) = default;
  };

  // FNV-1a over the canonical JSON of everything except the wall clock.
  std::uint64_t content_hash(RunRecord const& r);

  // One line of JSON, including "content_hash" as 16 hex digits.
  std::string run_record_to_json(RunRecord const& r);
  // Throws ParseError when malformed or when the stored hash disagrees.
  RunRecord run_record_from_json(std::string const& line);

  // Thrown by run_experiment; carries everything finished before the error.
  class ExperimentError : public std::runtime_error {
   public:
    ExperimentError(std::string const& what, RunRecord partial, bool validation)
        : std::runtime_error(what),
          _partial(std::move(partial)),
          _validation(validation) {}

    RunRecord const& partial() const noexcept {
      return _partial;
    }
    // The cause was a ValidationError.
    bool validation() const noexcept {
      return _validation;
    }

   private:
    RunRecord _partial;
    bool      _validation;
  };

  using HealObserver = std::function<void(HealReport const&)>;

  // For each order: generate train + test tables, corrupt each at p with its
  // own derived seed, split by a seeded shuffle, train a forest when the mode
  // needs one, heal the test tables in index order and aggregate. Everything
  // follows from cfg.seed. The observer, if set, sees every heal report.
  RunRecord run_experiment(ExperimentConfig const& cfg,
                           HealObserver const&     observer = {});

  ////////////////////////////////////////////////////////////////////////////
  // Statistics
  ////////////////////////////////////////////////////////////////////////////

  // C = ceil((1 - p) n), at least 1.
  std::size_t exceeds_c_threshold(std::size_t n, double p);

  // Pr[X >= C] for X ~ Binomial(n, 1/n).
  double exceeds_c_probability(std::size_t n, double p);

  struct ValueFrequency {
    Element     value     = 0;
    std::size_t count     = 0;
    double      frequency = 0.0;
    double      deviation = 0.0;  // frequency - 1/n
  };

  struct FrequencyReport {
    std::size_t                 n = 0;
    std::vector<ValueFrequency> values;  // by value
  };

  // Throws IncompleteTableError on MASKED cells.
  FrequencyReport frequency_report(CayleyTable const& t);
  std::string     frequency_report_to_json(FrequencyReport const& r);

  ////////////////////////////////////////////////////////////////////////////
  // Cache and export
  ////////////////////////////////////////////////////////////////////////////

  // Appends the record unless one with the same content hash is present.
  // Returns whether a line was written.
  bool cache_write(std::filesystem::path const& path, RunRecord const& r);

  struct CacheFilter {
    std::optional<std::size_t> n;  // record covers this order
    std::optional<double>      p;
    std::optional<heal_mode>   mode;
  };

  struct CacheQueryResult {
    std::vector<RunRecord> records;  // file order
    std::size_t            skipped = 0;  // unreadable lines
  };

  // A missing file is an empty cache.
  CacheQueryResult cache_query(std::filesystem::path const& path,
                               CacheFilter const&           filter = {});

  struct ExportPaths {
    std::filesystem::path metrics;   // n,pct_fully_associative,...,mode
    std::filesystem::path ablation;  // n,baseline,pass1,pass2 (hybrid runs)
  };

  // Writes metrics.csv and pass_ablation.csv into dir.
  ExportPaths export_metrics(std::span<RunRecord const>   records,
                             std::filesystem::path const& dir);

}  // namespace semiheal
