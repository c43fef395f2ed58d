#include "semiheal/healing.hpp"

#include <algorithm>
#include <map>
#include <set>
#include <stdexcept>
#include <tuple>

#include "completion_search.hpp"
#include "json_detail.hpp"
#include "semiheal/errors.hpp"

namespace semiheal {

  namespace {
    std::vector<Cell> sorted_cells(std::vector<Cell> cells) {
      std::sort(cells.begin(), cells.end());
      cells.erase(std::unique(cells.begin(), cells.end()), cells.end());
      return cells;
    }

    void check_cells(CayleyTable const& t, std::vector<Cell> const& cells) {
      for (auto const& c : cells) {
        if (c.row >= t.order() || c.col >= t.order()) {
          throw ValidationError("target cell outside the table");
        }
      }
    }

    Element modal_value(CayleyTable const& t) {
      std::vector<std::size_t> counts(t.order(), 0);
      bool                     any = false;
      for (auto v : t.entries()) {
        if (v != MASKED) {
          ++counts[static_cast<std::size_t>(v)];
          any = true;
        }
      }
      if (!any) {
        return 0;
      }
      return static_cast<Element>(
          std::max_element(counts.begin(), counts.end()) - counts.begin());
    }
  }  // namespace

  CayleyTable deterministic_repair(CayleyTable const&       t,
                                   std::vector<Cell> const& targets,
                                   VoteOptions              opts) {
    check_cells(t, targets);
    auto out = t;
    for (auto const& c : sorted_cells(targets)) {
      auto const winner = vote_tally(out, c.row, c.col, opts).plurality();
      out.set(c, winner.value_or(MASKED));
    }
    return out;
  }

  BacktrackResult backtracking_repair(CayleyTable const&       t,
                                      std::vector<Cell> const& targets,
                                      std::uint64_t            budget,
                                      VoteOptions              opts) {
    if (targets.empty()) {
      throw ValidationError("backtracking_repair: no target cells");
    }
    check_cells(t, targets);
    auto orderer = [opts](CayleyTable const& partial, Cell c) {
      auto ranked = vote_tally(partial, c.row, c.col, opts).ranked();
      std::vector<bool> used(partial.order(), false);
      for (auto v : ranked) {
        used[static_cast<std::size_t>(v)] = true;
      }
      for (std::size_t v = 0; v < partial.order(); ++v) {
        if (!used[v]) {
          ranked.push_back(static_cast<Element>(v));
        }
      }
      return ranked;
    };
    detail::CompletionSearch search(t, sorted_cells(targets), orderer, budget);
    BacktrackResult          result;
    switch (search.next()) {
      case detail::CompletionSearch::status::found:
        result.status = backtrack_status::found;
        result.table  = search.table();
        break;
      case detail::CompletionSearch::status::exhausted:
        result.status = backtrack_status::unsatisfiable;
        break;
      case detail::CompletionSearch::status::budget_exhausted:
        result.status = backtrack_status::budget_exhausted;
        break;
    }
    result.nodes = search.nodes();
    return result;
  }

  ////////////////////////////////////////////////////////////////////////////
  // Masking
  ////////////////////////////////////////////////////////////////////////////

  MaskResult mask_by_probability(CayleyTable const&         t,
                                 std::vector<double> const& probabilities,
                                 double                     tau) {
    auto const n = t.order();
    if (!(tau > 0.0 && tau < 1.0)) {
      throw ValidationError("mask: tau must lie in (0, 1)");
    }
    if (probabilities.size() != n * n) {
      throw ValidationError("mask: probability grid size mismatch");
    }
    MaskResult out{t, {}, probabilities};
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < n; ++j) {
        if (probabilities[i * n + j] >= tau) {
          out.table.set(i, j, MASKED);
          out.masked.push_back(Cell{i, j});
        }
      }
    }
    return out;
  }

  MaskResult mask_by_forest(CayleyTable const& t,
                            ForestModel const& m,
                            TrustMap const&    tm,
                            VoteGrid const&    votes,
                            double             tau) {
    auto const          features = extract_features(t, tm, votes);
    std::vector<double> probs;
    probs.reserve(features.size());
    for (auto const& f : features) {
      probs.push_back(predict_proba(m, f));
    }
    return mask_by_probability(t, probs, tau);
  }

  ////////////////////////////////////////////////////////////////////////////
  // Local healing and merge
  ////////////////////////////////////////////////////////////////////////////

  LocalHealResult local_heal(ClosureSet const& c,
                             TrustMap const&   local_tm,
                             std::size_t       pass_limit) {
    if (!c.subtable) {
      throw ValidationError("local_heal: closure set has no subtable");
    }
    auto const m = c.size();
    if (local_tm.order() != m) {
      throw ValidationError("local_heal: trust map order mismatch");
    }
    if (pass_limit == 0) {
      pass_limit = 10 * m * m * m;
    }
    auto                           sub = *c.subtable;
    std::set<std::vector<Element>> seen;
    LocalHealResult                result{c, false, 0, 0};
    while (result.passes < pass_limit) {
      ++result.passes;
      bool changed = false;
      for (std::size_t a = 0; a < m; ++a) {
        for (std::size_t b = 0; b < m; ++b) {
          for (std::size_t d = 0; d < m; ++d) {
            auto const ab = static_cast<std::size_t>(sub(a, b));
            auto const bd = static_cast<std::size_t>(sub(b, d));
            auto const l  = sub(ab, d);
            auto const r  = sub(a, bd);
            if (l == r) {
              continue;
            }
            if (local_tm.score(ab, d) < local_tm.score(a, bd)) {
              sub.set(ab, d, r);
            } else {
              sub.set(a, bd, l);
            }
            changed = true;
            ++result.changes;
          }
        }
      }
      if (!changed) {
        result.converged   = true;
        result.set.subtable = std::move(sub);
        return result;
      }
      if (!seen.insert({sub.entries().begin(), sub.entries().end()}).second) {
        break;
      }
    }
    result.changes = 0;
    return result;
  }

  Candidate make_candidate(Cell        cell,
                           Element     value,
                           double      p_correct,
                           std::size_t closure_size,
                           double      trust,
                           int         size_penalty_exponent) {
    if (closure_size == 0) {
      throw ValidationError("candidate: closure size must be positive");
    }
    double size_weight = 1.0;
    for (int e = 0; e < size_penalty_exponent; ++e) {
      size_weight /= static_cast<double>(closure_size);
    }
    return Candidate{
        cell, value, p_correct, closure_size, trust,
        p_correct * size_weight * trust};
  }

  CayleyTable merge_candidates(std::size_t n, std::vector<Candidate> cands) {
    std::vector<std::optional<Candidate>> best(n * n);
    auto const better = [](Candidate const& a, Candidate const& b) {
      if (a.weight != b.weight) {
        return a.weight > b.weight;
      }
      if (a.trust != b.trust) {
        return a.trust > b.trust;
      }
      return a.value < b.value;
    };
    for (auto const& c : cands) {
      if (c.cell.row >= n || c.cell.col >= n) {
        throw ValidationError("merge: candidate cell outside the table");
      }
      auto& slot = best[c.cell.row * n + c.cell.col];
      if (!slot || better(c, *slot)) {
        slot = c;
      }
    }
    CayleyTable out(n);
    for (std::size_t k = 0; k < n * n; ++k) {
      if (!best[k]) {
        throw std::logic_error("merge: cell (" + std::to_string(k / n) + ","
                               + std::to_string(k % n)
                               + ") has no candidate");
      }
      out.set(k / n, k % n, best[k]->value);
    }
    return out;
  }

  ////////////////////////////////////////////////////////////////////////////
  // Associativity reconstruction
  ////////////////////////////////////////////////////////////////////////////

  namespace {
    std::vector<Cell> violation_cells(CayleyTable const& t) {
      auto const        n = t.order();
      std::vector<bool> hit(n * n, false);
      for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
          auto const ij = static_cast<std::size_t>(t(i, j));
          for (std::size_t k = 0; k < n; ++k) {
            auto const jk = static_cast<std::size_t>(t(j, k));
            if (t(ij, k) != t(i, jk)) {
              hit[i * n + j]  = true;
              hit[ij * n + k] = true;
              hit[j * n + k]  = true;
              hit[i * n + jk] = true;
            }
          }
        }
      }
      std::vector<Cell> out;
      for (std::size_t c = 0; c < n * n; ++c) {
        if (hit[c]) {
          out.push_back(Cell{c / n, c % n});
        }
      }
      return out;
    }
  }  // namespace

  ReconstructResult reconstruct_associative(
      CayleyTable const&                       t,
      std::vector<double> const&               suspicion,
      std::vector<std::vector<Element>> const& preferences,
      std::uint64_t                            attempt_budget,
      std::uint64_t                            total_budget,
      VoteOptions                              opts) {
    auto const n = t.order();
    if (t.has_masked()) {
      throw ValidationError("reconstruct: table has masked cells");
    }
    if (suspicion.size() != n * n
        || (!preferences.empty() && preferences.size() != n * n)) {
      throw ValidationError("reconstruct: per-cell input size mismatch");
    }
    ReconstructResult result;
    if (is_associative(t)) {
      result.table = t;
      return result;
    }

    auto const by_suspicion = [&](Cell a, Cell b) {
      auto const sa = suspicion[a.row * n + a.col];
      auto const sb = suspicion[b.row * n + b.col];
      return sa != sb ? sa > sb : a < b;
    };
    auto release = violation_cells(t);
    std::sort(release.begin(), release.end(), by_suspicion);
    std::vector<bool> in_release(n * n, false);
    for (auto const& c : release) {
      in_release[c.row * n + c.col] = true;
    }
    std::vector<Cell> rest;
    for (std::size_t c = 0; c < n * n; ++c) {
      if (!in_release[c]) {
        rest.push_back(Cell{c / n, c % n});
      }
    }
    std::sort(rest.begin(), rest.end(), by_suspicion);
    auto const violating = release.size();
    release.insert(release.end(), rest.begin(), rest.end());

    auto orderer = [&](CayleyTable const& partial, Cell c) {
      std::vector<Element> order;
      std::vector<bool>    used(n, false);
      auto const           push = [&](Element v) {
        if (v >= 0 && static_cast<std::size_t>(v) < n
            && !used[static_cast<std::size_t>(v)]) {
          used[static_cast<std::size_t>(v)] = true;
          order.push_back(v);
        }
      };
      push(t(c.row, c.col));
      if (!preferences.empty()) {
        for (auto v : preferences[c.row * n + c.col]) {
          push(v);
        }
      }
      for (auto v : vote_tally(partial, c.row, c.col, opts).ranked()) {
        push(v);
      }
      for (std::size_t v = 0; v < n; ++v) {
        push(static_cast<Element>(v));
      }
      return order;
    };

    std::size_t k = 1;
    while (result.nodes < total_budget) {
      std::vector<Cell> free(release.begin(),
                             release.begin() + static_cast<std::ptrdiff_t>(k));
      std::sort(free.begin(), free.end());
      auto const budget
          = std::min(attempt_budget, total_budget - result.nodes);
      detail::CompletionSearch search(t, std::move(free), orderer, budget);
      auto const status = search.next();
      result.nodes += search.nodes();
      result.freed = k;
      if (status == detail::CompletionSearch::status::found) {
        result.table = search.table();
        return result;
      }
      if (k == release.size()) {
        break;
      }
      k = k < violating ? k + 1 : std::min(release.size(), 2 * k);
    }
    return result;
  }

  ////////////////////////////////////////////////////////////////////////////
  // Pipelines
  ////////////////////////////////////////////////////////////////////////////

  std::string to_string(heal_mode m) {
    switch (m) {
      case heal_mode::det:
        return "det";
      case heal_mode::backtrack:
        return "backtrack";
      case heal_mode::hybrid:
        return "hybrid";
      case heal_mode::ml_only:
        return "ml_only";
    }
    return "unknown";
  }

  heal_mode heal_mode_from_string(std::string const& s) {
    for (auto m : {heal_mode::det,
                   heal_mode::backtrack,
                   heal_mode::hybrid,
                   heal_mode::ml_only}) {
      if (to_string(m) == s) {
        return m;
      }
    }
    throw ValidationError("unknown heal mode \"" + s + "\"");
  }

  std::size_t resolve_residual(CayleyTable& t, VoteOptions opts) {
    auto const  n        = t.order();
    std::size_t resolved = 0;
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < n; ++j) {
        if (t(i, j) != MASKED) {
          continue;
        }
        auto const winner = vote_tally(t, i, j, opts).plurality();
        t.set(i, j, winner ? *winner : modal_value(t));
        ++resolved;
      }
    }
    return resolved;
  }

  namespace {
    HealReport finish(TablePair const&        pair,
                      CayleyTable             healed,
                      std::vector<StageEntry> log,
                      VoteOptions             vopts) {
      auto const residual = resolve_residual(healed, vopts);
      log.push_back({"residual", residual});
      HealReport r{pair, std::move(healed), false, 0.0, 0.0, std::move(log),
                   std::nullopt};
      r.fully_associative      = is_associative(r.healed);
      r.associativity_fraction = associativity_fraction(r.healed);
      auto const n             = static_cast<double>(r.healed.order());
      r.cell_accuracy
          = 1.0
            - static_cast<double>(r.healed.hamming_distance(pair.clean))
                  / (n * n);
      return r;
    }

    std::vector<Cell> low_trust_cells(CayleyTable const& t,
                                      HealConfig const&  cfg) {
      auto const        tm = trust_map(t, cfg.trust);
      std::vector<Cell> out;
      for (std::size_t i = 0; i < t.order(); ++i) {
        for (std::size_t j = 0; j < t.order(); ++j) {
          if (tm.score(i, j) < cfg.det_trust_threshold) {
            out.push_back(Cell{i, j});
          }
        }
      }
      return out;
    }

    VoteGrid feature_votes(CayleyTable const& t, HealConfig const& cfg) {
      return cfg.vote_feature ? vote_grid(t, cfg.votes) : VoteGrid{};
    }

    // Memoized p(correct) and trust for (cell, value) on a fixed table.
    class CandidateScorer {
     public:
      CandidateScorer(CayleyTable const& t,
                      ForestModel const& m,
                      HealConfig const&  cfg)
          : _t(t),
            _m(m),
            _cfg(cfg),
            _tm(trust_map(t, cfg.trust)),
            _votes(feature_votes(t, cfg)) {}

      TrustMap const& trust() const noexcept {
        return _tm;
      }

      std::pair<double, double> score(Cell c, Element v) {
        auto key = std::make_tuple(c.row, c.col, v);
        if (auto it = _memo.find(key); it != _memo.end()) {
          return it->second;
        }
        auto const f = substituted_features(
            _t, _tm, _votes, c.row, c.col, v, _cfg.trust);
        std::pair<double, double> s{1.0 - predict_proba(_m, f), f[3]};
        _memo.emplace(key, s);
        return s;
      }

     private:
      CayleyTable const& _t;
      ForestModel const& _m;
      HealConfig const&  _cfg;
      TrustMap           _tm;
      VoteGrid           _votes;
      std::map<std::tuple<std::size_t, std::size_t, Element>,
               std::pair<double, double>>
          _memo;
    };
  }  // namespace

  HealReport heal_deterministic(TablePair const& pair, HealConfig const& cfg) {
    auto const targets = low_trust_cells(pair.corrupt, cfg);
    auto       healed  = deterministic_repair(pair.corrupt, targets, cfg.votes);
    std::vector<StageEntry> log{
        {"targets", targets.size()},
        {"vote_repair", healed.hamming_distance(pair.corrupt)}};
    return finish(pair, std::move(healed), std::move(log), cfg.votes);
  }

  HealReport heal_backtracking(TablePair const& pair, HealConfig const& cfg) {
    auto const targets = low_trust_cells(pair.corrupt, cfg);
    std::vector<StageEntry> log{{"targets", targets.size()}};
    if (targets.empty()) {
      return finish(pair, pair.corrupt, std::move(log), cfg.votes);
    }
    auto result = backtracking_repair(
        pair.corrupt, targets, cfg.backtrack_budget, cfg.votes);
    if (result.status == backtrack_status::found) {
      log.push_back(
          {"backtrack", result.table->hamming_distance(pair.corrupt)});
      return finish(pair, std::move(*result.table), std::move(log), cfg.votes);
    }
    // No completion within budget: fall back to plain vote repair.
    log.push_back({"backtrack", 0});
    auto healed = deterministic_repair(pair.corrupt, targets, cfg.votes);
    log.push_back({"vote_repair", healed.hamming_distance(pair.corrupt)});
    return finish(pair, std::move(healed), std::move(log), cfg.votes);
  }

  HealReport heal_hybrid(TablePair const&   pair,
                         ForestModel const& m,
                         HealConfig const&  cfg) {
    auto const n = pair.corrupt.order();
    std::vector<StageEntry> log;

    // 1-2: trust, features, masking.
    auto const tm     = trust_map(pair.corrupt, cfg.trust);
    auto const votes  = feature_votes(pair.corrupt, cfg);
    auto const masked = mask_by_forest(pair.corrupt, m, tm, votes, cfg.tau);
    log.push_back({"mask", masked.masked.size()});

    // 3: healing pass 1.
    auto const pass1 = deterministic_repair(masked.table, masked.masked, cfg.votes);
    log.push_back({"pass1_repair",
                   masked.masked.size() - pass1.masked_count()});

    // 4-5: closure sets on the partially healed table.
    CandidateScorer scorer(pass1, m, cfg);
    std::map<std::vector<Element>, ClosureSet> sets;
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < n; ++j) {
        for (std::size_t k = 0; k < n; ++k) {
          auto r = closure_set(pass1, Triple{i, j, k});
          if (r) {
            sets.try_emplace(r.set->members, std::move(*r.set));
          }
        }
      }
    }
    std::vector<Candidate> cands;
    std::size_t            healed_sets = 0;
    for (auto const& [members, set] : sets) {
      auto const local = local_heal(set, trust_map(*set.subtable, cfg.trust));
      if (!local.converged) {
        continue;
      }
      ++healed_sets;
      auto const& sub = *local.set.subtable;
      for (std::size_t a = 0; a < set.size(); ++a) {
        for (std::size_t b = 0; b < set.size(); ++b) {
          Cell const cell{static_cast<std::size_t>(set.global(a)),
                          static_cast<std::size_t>(set.global(b))};
          auto const value = set.global(static_cast<std::size_t>(sub(a, b)));
          auto const [p, trust] = scorer.score(cell, value);
          cands.push_back(make_candidate(
              cell, value, p, set.size(), trust, cfg.size_penalty_exponent));
        }
      }
    }
    log.push_back({"closure_sets", healed_sets});
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < n; ++j) {
        Cell const cell{i, j};
        auto const v = pass1(i, j);
        if (v == MASKED) {
          cands.push_back(Candidate{cell, MASKED, 0.0, max_closure_size, 0.0, 0.0});
          continue;
        }
        auto const [p, trust] = scorer.score(cell, v);
        cands.push_back(make_candidate(
            cell, v, p, max_closure_size, trust, cfg.size_penalty_exponent));
      }
    }

    // 6: healing pass 2.
    std::vector<std::vector<std::pair<double, Element>>> weighted(n * n);
    for (auto const& c : cands) {
      if (c.value != MASKED) {
        weighted[c.cell.row * n + c.cell.col].emplace_back(c.weight, c.value);
      }
    }
    auto pass2 = merge_candidates(n, std::move(cands));
    log.push_back({"pass2_merge", pass2.hamming_distance(pass1)});

    // 7-8, with the pass-1 outcome kept for the ablation.
    auto pass1_resolved = pass1;
    resolve_residual(pass1_resolved, cfg.votes);
    bool const pass1_ok = is_associative(pass1_resolved);

    if (cfg.guard_pass2) {
      auto pass2_resolved = pass2;
      resolve_residual(pass2_resolved, cfg.votes);
      if (count_associative_triples(pass2_resolved)
          < count_associative_triples(pass1_resolved)) {
        log.push_back({"pass2_rejected", pass2.hamming_distance(pass1)});
        pass2 = pass1;
      }
    }
    if (cfg.enforce_associativity) {
      log.push_back({"pass2_residual", resolve_residual(pass2, cfg.votes)});
      if (!is_associative(pass2)) {
        std::vector<std::vector<Element>> prefs(n * n);
        for (std::size_t c = 0; c < n * n; ++c) {
          auto& w = weighted[c];
          std::stable_sort(w.begin(), w.end(), [](auto const& a, auto const& b) {
            return a.first > b.first;
          });
          for (auto const& [weight, value] : w) {
            prefs[c].push_back(value);
          }
        }
        auto const tm2    = trust_map(pass2, cfg.trust);
        auto const feats  = extract_features(pass2, tm2, feature_votes(pass2, cfg));
        std::vector<double> suspicion;
        suspicion.reserve(n * n);
        for (auto const& f : feats) {
          suspicion.push_back(predict_proba(m, f));
        }
        auto const r = reconstruct_associative(pass2,
                                               suspicion,
                                               prefs,
                                               cfg.reconstruct_attempt_budget,
                                               cfg.reconstruct_total_budget,
                                               cfg.votes);
        if (r.table) {
          log.push_back({"reconstruct", r.table->hamming_distance(pass2)});
          pass2 = *r.table;
        } else {
          log.push_back({"reconstruct", 0});
        }
      }
    }
    auto report = finish(pair, std::move(pass2), std::move(log), cfg.votes);
    report.pass1_fully_associative = pass1_ok;
    return report;
  }

  HealReport heal_ml_only(TablePair const&   pair,
                          ForestModel const& m,
                          HealConfig const&  cfg) {
    auto const n      = pair.corrupt.order();
    auto const tm     = trust_map(pair.corrupt, cfg.trust);
    auto const votes  = feature_votes(pair.corrupt, cfg);
    auto const masked = mask_by_forest(pair.corrupt, m, tm, votes, cfg.tau);
    std::vector<StageEntry> log{{"mask", masked.masked.size()}};

    auto       healed   = masked.table;
    auto const local_tm = trust_map(healed, cfg.trust);
    auto const local_votes = feature_votes(healed, cfg);
    for (auto const& c : masked.masked) {
      Element best   = 0;
      double  best_p = 2.0;
      for (std::size_t v = 0; v < n; ++v) {
        auto const f = substituted_features(healed,
                                            local_tm,
                                            local_votes,
                                            c.row,
                                            c.col,
                                            static_cast<Element>(v),
                                            cfg.trust);
        auto const p = predict_proba(m, f);
        if (p < best_p) {
          best_p = p;
          best   = static_cast<Element>(v);
        }
      }
      healed.set(c, best);
    }
    log.push_back({"forest_fill", masked.masked.size()});
    return finish(pair, std::move(healed), std::move(log), cfg.votes);
  }

  HealReport heal(TablePair const&   pair,
                  heal_mode          mode,
                  ForestModel const* m,
                  HealConfig const&  cfg) {
    switch (mode) {
      case heal_mode::det:
        return heal_deterministic(pair, cfg);
      case heal_mode::backtrack:
        return heal_backtracking(pair, cfg);
      case heal_mode::hybrid:
      case heal_mode::ml_only:
        if (m == nullptr) {
          throw ValidationError("heal: mode " + to_string(mode)
                                + " needs a trained model");
        }
        return mode == heal_mode::hybrid ? heal_hybrid(pair, *m, cfg)
                                         : heal_ml_only(pair, *m, cfg);
    }
    throw ValidationError("heal: unknown mode");
  }

  std::string heal_report_to_json(HealReport const& r) {
    using detail::json;
    json log = json::array();
    for (auto const& e : r.stage_log) {
      log.push_back({{"stage", e.name}, {"cells_changed", e.cells_changed}});
    }
    json j{{"pair_seed", r.input.seed},
           {"n", r.healed.order()},
           {"fully_associative", r.fully_associative},
           {"assoc_fraction", r.associativity_fraction},
           {"cell_accuracy", r.cell_accuracy},
           {"stage_log", std::move(log)}};
    if (r.pass1_fully_associative) {
      j["pass1_fully_associative"] = *r.pass1_fully_associative;
    }
    return j.dump();
  }

}  // namespace semiheal
