#pragma once

// Repair of corrupted tables.
//
// The hybrid pipeline runs, in order:
//   1. trust map of the corrupt table
//   2. forest features and masking of cells with P(corrupt) >= tau
//   3. majority-vote repair of the masked cells           (healing pass 1)
//   4. trust map of the partially healed table
//   5. closure sets over all triples: validate, heal locally, collect
//      weighted candidates
//   6. weighted merge of all candidates                   (healing pass 2)
//   7. residual MASKED cells: vote plurality, else the modal value, else 0
//   8. independent final checks
//
// Candidate weight: w = p(correct) * (1/|s|)^e * trust with e = 1 by default.
// p(correct) and trust are evaluated for the candidate's value in its cell.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "semiheal/algebra.hpp"
#include "semiheal/datagen.hpp"
#include "semiheal/forest.hpp"
#include "semiheal/table.hpp"
#include "semiheal/trust.hpp"
#include "semiheal/votes.hpp"

namespace semiheal {

  ////////////////////////////////////////////////////////////////////////////
  // Deterministic repair
  ////////////////////////////////////////////////////////////////////////////

  // Each target, in row-major order, takes the plurality of its tally on the
  // table as updated so far (ties to the lowest value). A target with an
  // empty tally becomes MASKED. Other cells are untouched.
  CayleyTable deterministic_repair(CayleyTable const&       t,
                                   std::vector<Cell> const& targets,
                                   VoteOptions              opts = {});

  enum class backtrack_status { found, unsatisfiable, budget_exhausted };

  struct BacktrackResult {
    backtrack_status           status = backtrack_status::unsatisfiable;
    std::optional<CayleyTable> table;
    std::uint64_t              nodes = 0;
  };

  // Depth-first assignment of the targets in row-major order. Candidates at
  // a cell: voted values by descending count then ascending value, followed
  // by the remaining values ascending. A branch is cut as soon as a fully
  // determined triple fails. budget bounds the number of placements tried.
  BacktrackResult backtracking_repair(CayleyTable const&       t,
                                      std::vector<Cell> const& targets,
                                      std::uint64_t            budget,
                                      VoteOptions              opts = {});

  ////////////////////////////////////////////////////////////////////////////
  // Masking
  ////////////////////////////////////////////////////////////////////////////

  struct MaskResult {
    CayleyTable         table;
    std::vector<Cell>   masked;         // row-major
    std::vector<double> probabilities;  // per cell, row-major
  };

  // Cells with probability >= tau become MASKED. 0 < tau < 1.
  MaskResult mask_by_probability(CayleyTable const&         t,
                                 std::vector<double> const& probabilities,
                                 double                     tau);

  MaskResult mask_by_forest(CayleyTable const& t,
                            ForestModel const& m,
                            TrustMap const&    tm,
                            VoteGrid const&    votes,
                            double             tau);

  ////////////////////////////////////////////////////////////////////////////
  // Subsemigroup healing and merge
  ////////////////////////////////////////////////////////////////////////////

  struct LocalHealResult {
    ClosureSet  set;  // subtable repaired when converged, original otherwise
    bool        converged = false;
    std::size_t passes    = 0;
    std::size_t changes   = 0;
  };

  // Repeated passes over the local triples: where (ab)c != a(bc), the
  // product cell with lower local trust is overwritten by the other side
  // (ties overwrite the a(bc) side). Stops at a pass without changes, or
  // after pass_limit passes (default 10 |s|^3) or a repeated state, in
  // which case the subtable is returned unchanged with converged = false.
  LocalHealResult local_heal(ClosureSet const& c,
                             TrustMap const&   local_tm,
                             std::size_t       pass_limit = 0);

  struct Candidate {
    Cell        cell;
    Element     value        = 0;
    double      p_correct    = 0.0;
    std::size_t closure_size = max_closure_size;
    double      trust        = 0.0;
    double      weight       = 0.0;
  };

  // Fills in weight = p_correct * (1/closure_size)^exponent * trust.
  Candidate make_candidate(Cell        cell,
                           Element     value,
                           double      p_correct,
                           std::size_t closure_size,
                           double      trust,
                           int         size_penalty_exponent = 1);

  // Per cell, the candidate of largest weight; ties go to higher trust, then
  // to the lower value. Throws std::logic_error if a cell has no candidate.
  CayleyTable merge_candidates(std::size_t n, std::vector<Candidate> cands);

  struct ReconstructResult {
    std::optional<CayleyTable> table;  // associative, when found
    std::size_t                freed = 0;
    std::uint64_t              nodes = 0;
  };

  // Smallest-first repair of a complete table: cells read by violated
  // triples are released in order of decreasing suspicion and re-assigned
  // by a completion search in which each released cell tries, in order, its
  // current value, preferences[cell], the values voted on the partial table,
  // then the rest. Releasing grows one cell at a time through the violation
  // cells, then in doubling batches through the remaining cells, until an
  // associative completion is found or total_budget nodes are spent.
  ReconstructResult reconstruct_associative(
      CayleyTable const&                       t,
      std::vector<double> const&               suspicion,
      std::vector<std::vector<Element>> const& preferences,
      std::uint64_t                            attempt_budget,
      std::uint64_t                            total_budget,
      VoteOptions                              opts = {});

  ////////////////////////////////////////////////////////////////////////////
  // Pipelines
  ////////////////////////////////////////////////////////////////////////////

  enum class heal_mode { det, backtrack, hybrid, ml_only };

  std::string         to_string(heal_mode m);
  heal_mode           heal_mode_from_string(std::string const& s);

  struct HealConfig {
    double       tau = 0.5;
    TrustOptions trust;
    VoteOptions  votes;
    // Feed the vote-agreement feature to the forest; zero column otherwise.
    bool         vote_feature          = true;
    int          size_penalty_exponent = 1;
    // Keep the pass-1 table when the merge lowers the associativity count.
    bool         guard_pass2 = true;
    // After the merge, release suspicious cells until the table is
    // associative (reconstruct_associative).
    bool          enforce_associativity = true;
    std::uint64_t reconstruct_attempt_budget = 20000;
    std::uint64_t reconstruct_total_budget   = 400000;
    // det / backtrack target cells with trust below this score.
    double        det_trust_threshold = 1.0;
    std::uint64_t backtrack_budget    = 100000;
  };

  struct StageEntry {
    std::string name;
    std::size_t cells_changed = 0;

    friend bool operator==(StageEntry const&, StageEntry const&) = default;
  };

  struct HealReport {
    TablePair               input;
    CayleyTable             healed;
    bool                    fully_associative      = false;
    double                  associativity_fraction = 0.0;
    double                  cell_accuracy          = 0.0;
    std::vector<StageEntry> stage_log;
    // Hybrid only: whether the pass-1 table (with residual masks resolved)
    // was already associative.
    std::optional<bool> pass1_fully_associative;
  };

  HealReport heal_deterministic(TablePair const& pair, HealConfig const& cfg);
  HealReport heal_backtracking(TablePair const& pair, HealConfig const& cfg);
  HealReport heal_hybrid(TablePair const&   pair,
                         ForestModel const& m,
                         HealConfig const&  cfg);
  // Forest masking, then each masked cell takes the value the forest finds
  // least likely to be corrupt. No subsemigroup pass.
  HealReport heal_ml_only(TablePair const&   pair,
                          ForestModel const& m,
                          HealConfig const&  cfg);

  // Dispatches on mode; hybrid and ml_only need a model.
  HealReport heal(TablePair const&   pair,
                  heal_mode          mode,
                  ForestModel const* m,
                  HealConfig const&  cfg);

  // Resolves MASKED cells in row-major order: vote plurality, else the most
  // frequent value in the table, else 0. Returns the number resolved.
  std::size_t resolve_residual(CayleyTable& t, VoteOptions opts = {});

  // One JSON line: {"pair_seed","fully_associative","assoc_fraction",
  // "cell_accuracy","stage_log":[{"stage","cells_changed"},...]}.
  std::string heal_report_to_json(HealReport const& r);

}  // namespace semiheal
