#pragma once

// Random forest corruption detector: per-cell features, CART trees grown on
// bootstrap resamples with a random feature subset per split, and soft-vote
// probabilities (mean leaf positive fraction).

#include <array>
#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <limits>
#include <string>
#include <vector>

#include "semiheal/table.hpp"
#include "semiheal/trust.hpp"
#include "semiheal/votes.hpp"

namespace semiheal {

  inline constexpr std::size_t feature_count = 12;

  // f0 i/n, f1 j/n, f2 value/n, f3 trust, f4 row mean trust, f5 column mean
  // trust, f6 table mean trust, f7 share of cells holding this value, f8
  // distinct values in the row / n, f9 distinct values in the column / n,
  // f10 share of decomposition votes agreeing with the value, f11 n.
  using CellFeatures = std::array<double, feature_count>;

  std::array<char const*, feature_count> const& feature_names();

  // One feature vector per cell, row-major. votes may be empty (f10 = 0).
  std::vector<CellFeatures> extract_features(CayleyTable const& t,
                                             TrustMap const&    tm,
                                             VoteGrid const&    votes);

  // Features of cell (i, j) as if it held `value`; the rest of the table, the
  // other cells' trust and the votes are taken as given.
  CellFeatures substituted_features(CayleyTable const& t,
                                    TrustMap const&    tm,
                                    VoteGrid const&    votes,
                                    std::size_t        i,
                                    std::size_t        j,
                                    Element            value,
                                    TrustOptions       opts = {});

  struct LabeledCell {
    CellFeatures  features{};
    int           label    = 0;  // 1 = corrupted
    std::uint64_t table_id = 0;
    std::size_t   row      = 0;
    std::size_t   col      = 0;
  };

  enum class split_criterion { gini, entropy };

  inline constexpr std::size_t unlimited_depth
      = std::numeric_limits<std::size_t>::max();

  struct ForestParams {
    std::size_t     n_trees            = 100;
    std::size_t     max_depth          = 12;
    std::size_t     min_leaf           = 2;
    std::size_t     features_per_split = 4;
    std::uint64_t   seed               = 0;
    split_criterion criterion          = split_criterion::gini;

    friend bool operator==(ForestParams const&, ForestParams const&) = default;
  };

  // Flat node storage; node 0 is the root. feature < 0 marks a leaf.
  struct TreeNode {
    int           feature   = -1;
    double        threshold = 0.0;  // go left iff x[feature] <= threshold
    std::uint32_t left      = 0;
    std::uint32_t right     = 0;
    std::uint32_t positive  = 0;
    std::uint32_t total     = 0;

    bool is_leaf() const noexcept {
      return feature < 0;
    }
    friend bool operator==(TreeNode const&, TreeNode const&) = default;
  };

  struct DecisionTree {
    std::vector<TreeNode> nodes;

    // Positive fraction of the leaf reached by x.
    double leaf_fraction(CellFeatures const& x) const;
    std::size_t depth() const;

    friend bool operator==(DecisionTree const&, DecisionTree const&)
        = default;
  };

  struct ForestModel {
    ForestParams              params;
    std::vector<DecisionTree> trees;

    friend bool operator==(ForestModel const&, ForestModel const&) = default;
  };

  // Tree t is grown from its own generator seeded by (params.seed, t). Data is
  // first sorted by (table_id, row, col), so input order does not matter.
  // Throws ValidationError on empty or single-class data.
  ForestModel train(std::vector<LabeledCell> data, ForestParams const& params);

  // Mean over trees of the leaf positive fraction.
  double predict_proba(ForestModel const& m, CellFeatures const& x);

  // Versioned JSON: {"version":1,"hyper":{...},"feature_names":[...],
  // "trees":[nested node objects]}.
  void        save_model(std::ostream& os, ForestModel const& m);
  ForestModel load_model(std::istream& is);

  // Training rows for one table: features of the corrupt table labeled by
  // the corrupted cell set.
  std::vector<LabeledCell> labeled_cells(CayleyTable const&       corrupt,
                                         std::vector<Cell> const& corrupted,
                                         std::uint64_t            table_id,
                                         TrustOptions             trust = {},
                                         VoteOptions              votes = {},
                                         bool use_votes = true);

}  // namespace semiheal
