// Acceptance suite. Prints one PASS/FAIL line per criterion and exits
// non-zero if any criterion fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "oracles.hpp"
#include "semiheal/algebra.hpp"
#include "semiheal/datagen.hpp"
#include "semiheal/forest.hpp"
#include "semiheal/healing.hpp"
#include "semiheal/rng.hpp"
#include "semiheal/trust.hpp"
#include "semiheal/workbench.hpp"

using namespace semiheal;
namespace fs = std::filesystem;

namespace {

  using Clock = std::chrono::steady_clock;

  double seconds_since(Clock::time_point start) {
    return std::chrono::duration<double>(Clock::now() - start).count();
  }

  int failures = 0;

  void report(int id, char const* name, bool ok, std::string const& detail) {
    std::printf("%s [%2d] %s: %s\n", ok ? "PASS" : "FAIL", id, name, detail.c_str());
    std::fflush(stdout);
    failures += ok ? 0 : 1;
  }

  std::string fmt(char const* f, auto... args) {
    char buf[512];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
  }

  constexpr std::uint64_t master_seed = 20240601;

  ////////////////////////////////////////////////////////////////////////////

  void enumeration_counts() {
    auto const start = Clock::now();
    auto const e2    = enumerate_all(2);
    auto const e3    = enumerate_all(3);
    // Exhaustive oracle over all n^(n^2) tables.
    auto const o2 = oracle::all_semigroups(2);
    auto const o3 = oracle::all_semigroups(3);
    auto const classes2 = count_classes(e2);
    auto const classes3 = count_classes(e3);
    auto const oc2      = oracle::classes(o2);
    auto const oc3      = oracle::classes(o3);
    auto const gen4     = generate({4, 10000, master_seed, {}, true});
    auto const classes4 = count_classes(gen4.tables);
    auto const elapsed  = seconds_since(start);
    bool const ok = e2.size() == o2.size() && e3.size() == o3.size() && e2.size() == 8
                    && e3.size() == 113 && classes2 == oc2 && classes3 == oc3
                    && classes2 == 4 && classes3 == 18 && gen4.tables.size() == 126
                    && classes4 == 126 && elapsed < 60.0;
    report(1, "enumeration golden counts", ok,
           fmt("labeled n=2:%zu (oracle %zu) n=3:%zu (oracle %zu); classes n=2:%zu "
               "(oracle %zu) n=3:%zu (oracle %zu) n=4:%zu; %.2f s",
               e2.size(), o2.size(), e3.size(), o3.size(), classes2, oc2, classes3,
               oc3, classes4, elapsed));
  }

  void binomial_reproduction() {
    auto const  start = Clock::now();
    auto const  p     = exceeds_c_probability(10, 0.15);
    auto const  us    = seconds_since(start) * 1e6;
    auto const  rel   = std::fabs(p - 9.1e-9) / 9.1e-9;
    auto const  exact = static_cast<double>(oracle::binomial_tail(10, 9));
    bool const  ok    = rel <= 0.02 && us < 1000.0 && std::fabs(p - exact) <= 1e-12 * exact;
    report(2, "binomial reproduction", ok,
           fmt("Pr[X>=C](10, 0.15) = %.6g (exact %.6g), relative error to 9.1e-9 = %.3g; "
               "%.1f us", p, exact, rel, us));
  }

  struct OracleTally {
    std::size_t runs = 0;
    std::size_t agree = 0;
    HealObserver observer() {
      return [this](HealReport const& r) {
        ++runs;
        agree += r.fully_associative == oracle::associative(r.healed);
      };
    }
  };

  void trust_discrimination() {
    auto const  start  = Clock::now();
    auto const  tables = generate({5, 100, master_seed + 4, {}, false}).tables;
    std::size_t separated = 0;
    for (std::size_t i = 0; i < tables.size(); ++i) {
      auto const pair = corrupt(tables[i], 0.15, derive_seed(master_seed, i));
      auto const s    = trust_separation(pair);
      separated += s.corrupted_mean < s.clean_mean;
    }
    auto const elapsed = seconds_since(start);
    report(4, "trust discrimination", separated >= 95 && elapsed < 10.0,
           fmt("corrupted mean trust below clean mean in %zu of 100 pairs at n=5, "
               "p=0.15; %.2f s", separated, elapsed));
  }

  ExperimentConfig sweep_config(heal_mode mode, std::size_t tables) {
    ExperimentConfig cfg;
    cfg.n_values     = {3, 4, 5, 6, 7, 8, 9, 10};
    cfg.p            = 0.15;
    cfg.tables_per_n = tables;
    cfg.seed         = master_seed;
    cfg.mode         = mode;
    return cfg;
  }

  std::string series(RunRecord const& r, std::function<double(OrderAggregate const&)> f) {
    std::string s;
    for (auto const& a : r.per_n) {
      s += fmt("%s%zu:%.0f", s.empty() ? "" : " ", a.n, f(a));
    }
    return s;
  }

  void experiment_criteria() {
    OracleTally tally;

    auto start       = Clock::now();
    auto const det   = run_experiment(sweep_config(heal_mode::det, 100), tally.observer());
    auto const det_s = seconds_since(start);

    start            = Clock::now();
    auto const hyb   = run_experiment(sweep_config(heal_mode::hybrid, 100), tally.observer());
    auto const hyb_s = seconds_since(start);

    run_experiment(sweep_config(heal_mode::backtrack, 25), tally.observer());
    run_experiment(sweep_config(heal_mode::ml_only, 25), tally.observer());

    report(3, "oracle consistency", tally.runs >= 500 && tally.agree == tally.runs,
           fmt("fully_associative matched the independent check in %zu of %zu healed "
               "tables across det, backtrack, hybrid and ml_only", tally.agree, tally.runs));

    {
      bool   monotone = true;
      double at7      = 100.0;
      for (std::size_t i = 0; i < det.per_n.size(); ++i) {
        if (i > 0 && det.per_n[i].pct_fully_associative
                         > det.per_n[i - 1].pct_fully_associative + 5.0) {
          monotone = false;
        }
        if (det.per_n[i].n == 7) at7 = det.per_n[i].pct_fully_associative;
      }
      report(5, "deterministic collapse", monotone && at7 <= 10.0 && det_s < 120.0,
             fmt("det %% fully associative by n: %s; n=7: %.0f%%; %.1f s",
                 series(det, [](auto const& a) { return a.pct_fully_associative; }).c_str(),
                 at7, det_s));
    }

    {
      bool dominates = true, pass_order = true;
      for (std::size_t i = 0; i < hyb.per_n.size(); ++i) {
        auto const& h = hyb.per_n[i];
        dominates     = dominates && h.pct_fully_associative >= det.per_n[i].pct_fully_associative;
        pass_order    = pass_order && h.pct_pass1 && h.pct_fully_associative >= *h.pct_pass1;
      }
      report(6, "hybrid dominance", dominates && pass_order,
             fmt("hybrid %s | det %s | pass1 %s",
                 series(hyb, [](auto const& a) { return a.pct_fully_associative; }).c_str(),
                 series(det, [](auto const& a) { return a.pct_fully_associative; }).c_str(),
                 series(hyb, [](auto const& a) { return a.pct_pass1.value_or(-1); }).c_str()));
    }

    {
      bool   ok    = true;
      double min_small = 100.0, at10 = 0.0;
      for (auto const& a : hyb.per_n) {
        if (a.n <= 6) min_small = std::min(min_small, a.pct_fully_associative);
        if (a.n == 10) at10 = a.pct_fully_associative;
      }
      ok = min_small >= 85.0 && at10 >= 40.0;
      report(7, "hybrid reproduction targets", ok,
             fmt("min over n<=6: %.0f%% (>=85), n=10: %.0f%% (>=40); 100 test tables per n; "
                 "%.1f s", min_small, at10, hyb_s));
    }

    {
      double healed = 0.0, input = 0.0;
      std::size_t count = 0;
      bool per_n_ok = true;
      for (auto const& a : hyb.per_n) {
        if (a.n > 6) continue;
        per_n_ok = per_n_ok && a.mean_cell_accuracy >= a.mean_corrupt_accuracy;
      }
      for (auto const& t : hyb.tables) {
        if (t.n > 6) continue;
        healed += t.cell_accuracy;
        input += t.corrupt_accuracy;
        ++count;
      }
      healed /= static_cast<double>(count);
      input /= static_cast<double>(count);
      report(9, "fidelity floor", healed >= input && per_n_ok,
             fmt("mean cell accuracy over n<=6: healed %.4f vs corrupted input %.4f "
                 "(per-n floor %s)", healed, input, per_n_ok ? "held" : "broken"));
    }
  }

  std::string read_without_clock(fs::path const& p) {
    std::ifstream     in(p);
    std::stringstream ss;
    ss << in.rdbuf();
    auto       text = ss.str();
    auto const key  = std::string("\"wall_clock_seconds\":");
    auto const pos  = text.find(key);
    if (pos != std::string::npos) {
      auto end = text.find_first_of(",}", pos + key.size());
      text.erase(pos, end - pos);
    }
    return text;
  }

  void determinism() {
    auto const dir = fs::temp_directory_path() / "semiheal_acceptance_determinism";
    fs::remove_all(dir);
    fs::create_directories(dir);
    {
      std::ofstream cfg(dir / "config.json");
      cfg << R"({"n_values":[3,4,5,6],"p":0.15,"tables_per_n":15,"mode":"hybrid",)"
          << R"("forest":{"n_trees":30}})";
    }
    auto run = [&](char const* name) {
      auto const cmd = std::string(SEMIHEAL_CLI_PATH) + " --seed 99 --config "
                       + (dir / "config.json").string() + " --out-dir " + dir.string()
                       + " experiment --no-cache -o " + (dir / name).string()
                       + " > /dev/null";
      return std::system(cmd.c_str());
    };
    int const  s1 = run("a.json");
    int const  s2 = run("b.json");
    auto const a  = read_without_clock(dir / "a.json");
    auto const b  = read_without_clock(dir / "b.json");
    bool const ok = s1 == 0 && s2 == 0 && !a.empty() && a == b;
    report(8, "determinism", ok,
           fmt("two `experiment` invocations, exit %d/%d, %zu bytes each, %s modulo wall clock",
               s1, s2, a.size(), a == b ? "byte-identical" : "DIFFERENT"));
    fs::remove_all(dir);
  }

  RunRecord random_record(std::mt19937_64& rng) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    RunRecord                              r;
    auto& c        = r.config;
    c.out_dir.clear();
    c.n_values.clear();
    for (std::size_t k = 0, m = 1 + rng() % 4; k < m; ++k) c.n_values.push_back(2 + rng() % 29);
    c.p            = 0.01 + 0.98 * u(rng);
    c.tables_per_n = 1 + rng() % 500;
    c.seed         = rng();
    c.mode         = static_cast<heal_mode>(rng() % 4);
    c.tau          = 0.01 + 0.98 * u(rng);
    c.forest.n_trees            = 1 + rng() % 300;
    c.forest.max_depth          = rng() % 5 == 0 ? unlimited_depth : 1 + rng() % 30;
    c.forest.min_leaf           = 1 + rng() % 10;
    c.forest.features_per_split = 1 + rng() % feature_count;
    c.forest.criterion = rng() % 2 ? split_criterion::gini : split_criterion::entropy;
    c.guard_pass2           = rng() % 2;
    c.enforce_associativity = rng() % 2;
    c.symmetric_trust       = rng() % 2;
    c.bilateral_votes       = rng() % 2;
    c.vote_feature          = rng() % 2;
    for (auto n : c.n_values) {
      OrderAggregate a;
      a.n                     = n;
      a.train_tables          = rng() % 1000;
      a.test_tables           = rng() % 1000;
      a.pct_fully_associative = 100 * u(rng);
      a.mean_assoc_fraction   = u(rng);
      a.mean_cell_accuracy    = u(rng);
      a.mean_corrupt_accuracy = u(rng);
      a.pct_baseline          = 100 * u(rng);
      if (rng() % 2) a.pct_pass1 = 100 * u(rng);
      r.per_n.push_back(a);
      for (std::size_t t = 0, m = rng() % 4; t < m; ++t) {
        TableSummary s;
        s.n                    = n;
        s.index                = rng() % 1000;
        s.pair_seed            = rng();
        s.corrupted            = rng() % 100;
        s.baseline_associative = rng() % 2;
        s.corrupt_accuracy     = u(rng);
        s.fully_associative    = rng() % 2;
        s.assoc_fraction       = u(rng);
        s.cell_accuracy        = u(rng);
        if (rng() % 2) s.pass1_fully_associative = rng() % 2 == 0;
        r.tables.push_back(s);
      }
    }
    if (rng() % 5 == 0) {
      r.failed  = true;
      r.failure = "failure " + std::to_string(rng());
    }
    r.wall_clock_seconds = 1000 * u(rng);
    return r;
  }

  void round_trips() {
    auto const      start = Clock::now();
    std::mt19937_64 rng(master_seed);
    constexpr int   cases = 500;

    int dataset_ok = 0;
    for (int i = 0; i < cases; ++i) {
      std::vector<TablePair> pairs;
      for (std::size_t k = 0, m = 1 + rng() % 3; k < m; ++k) {
        std::size_t const n     = 2 + rng() % 8;
        auto const        clean = generate({n, 1, rng(), {}, false}).tables[0];
        auto const        p     = std::max(0.05, std::min(0.9, (1.0 + static_cast<double>(rng() % 40)) / 50.0));
        if (corruption_count(n, p) == 0) continue;
        pairs.push_back(corrupt(clean, p, rng()));
      }
      std::stringstream ss;
      write_dataset(ss, pairs);
      dataset_ok += read_dataset(ss) == pairs;
    }

    int model_ok = 0;
    for (int i = 0; i < cases; ++i) {
      std::vector<LabeledCell> data;
      std::uniform_real_distribution<double> u(0.0, 1.0);
      for (std::size_t k = 0, m = 20 + rng() % 40; k < m; ++k) {
        LabeledCell c;
        for (auto& x : c.features) x = u(rng);
        c.label = k % 2 == 0 ? 1 : (u(rng) < 0.3);
        c.row   = k;
        data.push_back(c);
      }
      ForestParams params;
      params.n_trees            = 1 + rng() % 5;
      params.max_depth          = rng() % 3 == 0 ? unlimited_depth : 1 + rng() % 8;
      params.min_leaf           = 1 + rng() % 4;
      params.features_per_split = 1 + rng() % feature_count;
      params.seed               = rng();
      params.criterion = rng() % 2 ? split_criterion::gini : split_criterion::entropy;
      auto const        m = train(data, params);
      std::stringstream ss;
      save_model(ss, m);
      model_ok += load_model(ss) == m;
    }

    auto const dir = fs::temp_directory_path() / "semiheal_acceptance_cache";
    fs::remove_all(dir);
    std::vector<RunRecord> written;
    for (int i = 0; i < cases; ++i) {
      auto r = random_record(rng);
      if (cache_write(dir / "cache.jsonl", r)) written.push_back(r);
    }
    auto const q        = cache_query(dir / "cache.jsonl");
    int        cache_ok = 0;
    if (q.records.size() == written.size()) {
      for (std::size_t i = 0; i < written.size(); ++i) cache_ok += q.records[i] == written[i];
    }
    fs::remove_all(dir);

    auto const elapsed = seconds_since(start);
    bool const ok = dataset_ok == cases && model_ok == cases
                    && cache_ok == static_cast<int>(written.size())
                    && written.size() == static_cast<std::size_t>(cases) && q.skipped == 0;
    report(10, "round trips", ok,
           fmt("dataset %d/%d, model %d/%d, cache %d/%d; %.1f s", dataset_ok, cases, model_ok,
               cases, cache_ok, cases, elapsed));
  }

}  // namespace

int main() {
  enumeration_counts();
  binomial_reproduction();
  trust_discrimination();
  experiment_criteria();
  determinism();
  round_trips();
  std::printf("%s: %d criteria failed\n", failures == 0 ? "ACCEPTED" : "REJECTED", failures);
  return failures == 0 ? 0 : 1;
}
