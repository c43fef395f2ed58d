#include "semiheal/forest.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <numeric>
#include <ostream>
#include <set>
#include <string>

#include "json_detail.hpp"
#include "semiheal/errors.hpp"
#include "semiheal/rng.hpp"

namespace semiheal {

  std::array<char const*, feature_count> const& feature_names() {
    static constexpr std::array<char const*, feature_count> names{
        "row_index",
        "col_index",
        "value",
        "trust",
        "row_mean_trust",
        "col_mean_trust",
        "table_mean_trust",
        "value_frequency",
        "row_distinct",
        "col_distinct",
        "vote_agreement",
        "order"};
    return names;
  }

  ////////////////////////////////////////////////////////////////////////////
  // Features
  ////////////////////////////////////////////////////////////////////////////

  namespace {
    struct TableStats {
      std::vector<std::size_t> value_counts;  // per value
      std::vector<std::size_t> row_distinct;
      std::vector<std::size_t> col_distinct;
    };

    std::size_t distinct_in(std::vector<Element> const& values,
                            std::size_t                 n) {
      std::vector<bool> seen(n, false);
      std::size_t       d = 0;
      for (auto v : values) {
        if (v != MASKED && !seen[static_cast<std::size_t>(v)]) {
          seen[static_cast<std::size_t>(v)] = true;
          ++d;
        }
      }
      return d;
    }

    std::vector<Element> row_values(CayleyTable const& t, std::size_t i) {
      auto r = t.row(i);
      return {r.begin(), r.end()};
    }

    std::vector<Element> col_values(CayleyTable const& t, std::size_t j) {
      std::vector<Element> out;
      for (std::size_t i = 0; i < t.order(); ++i) {
        out.push_back(t(i, j));
      }
      return out;
    }

    TableStats table_stats(CayleyTable const& t) {
      auto const n = t.order();
      TableStats s{std::vector<std::size_t>(n, 0), {}, {}};
      for (auto v : t.entries()) {
        if (v != MASKED) {
          ++s.value_counts[static_cast<std::size_t>(v)];
        }
      }
      for (std::size_t k = 0; k < n; ++k) {
        s.row_distinct.push_back(distinct_in(row_values(t, k), n));
        s.col_distinct.push_back(distinct_in(col_values(t, k), n));
      }
      return s;
    }

    void check_dimensions(CayleyTable const& t,
                          TrustMap const&    tm,
                          VoteGrid const&    votes) {
      auto const n = t.order();
      if (tm.order() != n) {
        throw ValidationError("extract_features: trust map order mismatch");
      }
      if (!votes.empty() && votes.size() != n * n) {
        throw ValidationError("extract_features: vote grid size mismatch");
      }
    }
  }  // namespace

  std::vector<CellFeatures> extract_features(CayleyTable const& t,
                                             TrustMap const&    tm,
                                             VoteGrid const&    votes) {
    check_dimensions(t, tm, votes);
    auto const                n     = t.order();
    auto const                dn    = static_cast<double>(n);
    auto const                stats = table_stats(t);
    std::vector<CellFeatures> out;
    out.reserve(n * n);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < n; ++j) {
        auto const   v = t(i, j);
        CellFeatures f{};
        f[0] = static_cast<double>(i) / dn;
        f[1] = static_cast<double>(j) / dn;
        f[2] = v == MASKED ? 0.0 : static_cast<double>(v) / dn;
        f[3] = tm.score(i, j);
        f[4] = tm.row_mean(i);
        f[5] = tm.col_mean(j);
        f[6] = tm.table_mean();
        f[7] = v == MASKED ? 0.0
                           : static_cast<double>(
                                 stats.value_counts[static_cast<std::size_t>(v)])
                                 / (dn * dn);
        f[8]  = static_cast<double>(stats.row_distinct[i]) / dn;
        f[9]  = static_cast<double>(stats.col_distinct[j]) / dn;
        f[10] = votes.empty() || v == MASKED ? 0.0
                                              : votes[i * n + j].agreement(v);
        f[11] = dn;
        out.push_back(f);
      }
    }
    return out;
  }

  CellFeatures substituted_features(CayleyTable const& t,
                                    TrustMap const&    tm,
                                    VoteGrid const&    votes,
                                    std::size_t        i,
                                    std::size_t        j,
                                    Element            value,
                                    TrustOptions       opts) {
    check_dimensions(t, tm, votes);
    auto const n  = t.order();
    auto const dn = static_cast<double>(n);
    auto       sub = t;
    sub.set(i, j, value);

    auto const   old_score = tm.score(i, j);
    auto const   new_score = static_cast<double>(trust_count_with(
                               t, i, j, value, opts))
                           / tm.denominator();
    auto const   delta     = new_score - old_score;
    std::size_t  same      = 0;
    for (auto v : sub.entries()) {
      same += (v == value && value != MASKED);
    }
    CellFeatures f{};
    f[0]  = static_cast<double>(i) / dn;
    f[1]  = static_cast<double>(j) / dn;
    f[2]  = value == MASKED ? 0.0 : static_cast<double>(value) / dn;
    f[3]  = new_score;
    f[4]  = tm.row_mean(i) + delta / dn;
    f[5]  = tm.col_mean(j) + delta / dn;
    f[6]  = tm.table_mean() + delta / (dn * dn);
    f[7]  = static_cast<double>(same) / (dn * dn);
    f[8]  = static_cast<double>(distinct_in(row_values(sub, i), n)) / dn;
    f[9]  = static_cast<double>(distinct_in(col_values(sub, j), n)) / dn;
    f[10] = votes.empty() || value == MASKED
                ? 0.0
                : votes[i * n + j].agreement(value);
    f[11] = dn;
    return f;
  }

  std::vector<LabeledCell> labeled_cells(CayleyTable const&       corrupt,
                                         std::vector<Cell> const& corrupted,
                                         std::uint64_t            table_id,
                                         TrustOptions             trust,
                                         VoteOptions              vopts,
                                         bool                     use_votes) {
    auto const     n  = corrupt.order();
    auto const     tm = trust_map(corrupt, trust);
    auto const     votes
        = use_votes ? vote_grid(corrupt, vopts) : VoteGrid{};
    auto const     features = extract_features(corrupt, tm, votes);
    std::set<Cell> bad(corrupted.begin(), corrupted.end());
    std::vector<LabeledCell> out;
    out.reserve(n * n);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < n; ++j) {
        out.push_back(LabeledCell{features[i * n + j],
                                  bad.count(Cell{i, j}) ? 1 : 0,
                                  table_id,
                                  i,
                                  j});
      }
    }
    return out;
  }

  ////////////////////////////////////////////////////////////////////////////
  // Trees
  ////////////////////////////////////////////////////////////////////////////

  double DecisionTree::leaf_fraction(CellFeatures const& x) const {
    std::size_t k = 0;
    while (!nodes[k].is_leaf()) {
      auto const& node = nodes[k];
      k = x[static_cast<std::size_t>(node.feature)] <= node.threshold
              ? node.left
              : node.right;
    }
    return static_cast<double>(nodes[k].positive) / nodes[k].total;
  }

  std::size_t DecisionTree::depth() const {
    if (nodes.empty()) {
      return 0;
    }
    std::vector<std::size_t> depth(nodes.size(), 0);
    std::size_t              deepest = 0;
    for (std::size_t k = 0; k < nodes.size(); ++k) {
      deepest = std::max(deepest, depth[k]);
      if (!nodes[k].is_leaf()) {
        depth[nodes[k].left]  = depth[k] + 1;
        depth[nodes[k].right] = depth[k] + 1;
      }
    }
    return deepest;
  }

  namespace {
    double impurity(double pos, double total, split_criterion c) {
      if (total <= 0.0) {
        return 0.0;
      }
      auto const p = pos / total;
      auto const q = 1.0 - p;
      if (c == split_criterion::gini) {
        return 1.0 - p * p - q * q;
      }
      double h = 0.0;
      if (p > 0.0) {
        h -= p * std::log2(p);
      }
      if (q > 0.0) {
        h -= q * std::log2(q);
      }
      return h;
    }

    struct Split {
      int         feature   = -1;
      double      threshold = 0.0;
      double      score     = 0.0;  // weighted child impurity
    };

    class TreeBuilder {
     public:
      TreeBuilder(std::vector<LabeledCell> const& data,
                  ForestParams const&             params,
                  Rng&                            rng)
          : _data(data), _params(params), _rng(rng) {}

      DecisionTree build(std::vector<std::uint32_t> sample) {
        _tree.nodes.clear();
        grow(sample, 0);
        return std::move(_tree);
      }

     private:
      std::uint32_t grow(std::vector<std::uint32_t>& sample,
                         std::size_t                 depth) {
        auto const index = static_cast<std::uint32_t>(_tree.nodes.size());
        _tree.nodes.emplace_back();
        std::uint32_t pos = 0;
        for (auto s : sample) {
          pos += static_cast<std::uint32_t>(_data[s].label);
        }
        auto const total = static_cast<std::uint32_t>(sample.size());
        _tree.nodes[index].positive = pos;
        _tree.nodes[index].total    = total;

        if (pos == 0 || pos == total || depth >= _params.max_depth
            || total < 2 * _params.min_leaf) {
          return index;
        }
        auto const split = choose_split(sample);
        if (split.feature < 0) {
          return index;
        }
        std::vector<std::uint32_t> left, right;
        auto const                 f = static_cast<std::size_t>(split.feature);
        for (auto s : sample) {
          (_data[s].features[f] <= split.threshold ? left : right).push_back(s);
        }
        sample.clear();
        sample.shrink_to_fit();
        auto const l = grow(left, depth + 1);
        auto const r = grow(right, depth + 1);
        auto&      node = _tree.nodes[index];
        node.feature    = split.feature;
        node.threshold  = split.threshold;
        node.left       = l;
        node.right      = r;
        return index;
      }

      // Random subset first; when it admits no valid split the remaining
      // features are tried so that impure nodes above min_leaf always split.
      Split choose_split(std::vector<std::uint32_t> const& sample) {
        std::array<std::size_t, feature_count> order{};
        std::iota(order.begin(), order.end(), 0);
        _rng.shuffle(std::span<std::size_t>(order));
        auto const k = std::clamp<std::size_t>(
            _params.features_per_split, 1, feature_count);
        std::vector<std::size_t> primary(order.begin(), order.begin() + k);
        std::vector<std::size_t> rest(order.begin() + k, order.end());
        std::sort(primary.begin(), primary.end());
        std::sort(rest.begin(), rest.end());
        auto best = best_split(sample, primary);
        if (best.feature < 0 && !rest.empty()) {
          best = best_split(sample, rest);
        }
        return best;
      }

      Split best_split(std::vector<std::uint32_t> const& sample,
                       std::vector<std::size_t> const&   features) {
        Split best;
        auto const m        = sample.size();
        double     pos_all  = 0.0;
        for (auto s : sample) {
          pos_all += _data[s].label;
        }
        std::vector<std::pair<double, int>> column(m);
        for (auto f : features) {
          for (std::size_t r = 0; r < m; ++r) {
            column[r] = {_data[sample[r]].features[f], _data[sample[r]].label};
          }
          std::sort(column.begin(), column.end());
          double pos_left = 0.0;
          for (std::size_t r = 0; r + 1 < m; ++r) {
            pos_left += column[r].second;
            auto const a = column[r].first;
            auto const b = column[r + 1].first;
            if (!(a < b)) {
              continue;
            }
            auto const nl = static_cast<double>(r + 1);
            auto const nr = static_cast<double>(m - r - 1);
            if (r + 1 < _params.min_leaf || m - r - 1 < _params.min_leaf) {
              continue;
            }
            auto const score
                = nl * impurity(pos_left, nl, _params.criterion)
                  + nr * impurity(pos_all - pos_left, nr, _params.criterion);
            if (best.feature < 0 || score < best.score) {
              auto threshold = a + (b - a) / 2.0;
              if (!(threshold < b)) {
                threshold = a;
              }
              best = Split{static_cast<int>(f), threshold, score};
            }
          }
        }
        return best;
      }

      std::vector<LabeledCell> const& _data;
      ForestParams const&             _params;
      Rng&                            _rng;
      DecisionTree                    _tree;
    };

    void validate_params(ForestParams const& p) {
      if (p.n_trees < 1) {
        throw ValidationError("forest: n_trees must be at least 1");
      }
      if (p.max_depth < 1) {
        throw ValidationError("forest: max_depth must be at least 1");
      }
      if (p.min_leaf < 1) {
        throw ValidationError("forest: min_leaf must be at least 1");
      }
      if (p.features_per_split < 1 || p.features_per_split > feature_count) {
        throw ValidationError("forest: features_per_split must be in [1, "
                              + std::to_string(feature_count) + "]");
      }
    }
  }  // namespace

  ForestModel train(std::vector<LabeledCell> data, ForestParams const& params) {
    validate_params(params);
    if (data.empty()) {
      throw ValidationError("train: no training data");
    }
    auto const positives = std::count_if(
        data.begin(), data.end(), [](auto const& c) { return c.label == 1; });
    for (auto const& c : data) {
      if (c.label != 0 && c.label != 1) {
        throw ValidationError("train: labels must be 0 or 1");
      }
    }
    if (positives == 0 || static_cast<std::size_t>(positives) == data.size()) {
      throw ValidationError("train: data must contain both classes");
    }
    std::stable_sort(data.begin(), data.end(), [](auto const& a, auto const& b) {
      return std::tie(a.table_id, a.row, a.col)
             < std::tie(b.table_id, b.row, b.col);
    });

    ForestModel model{params, {}};
    model.trees.reserve(params.n_trees);
    auto const m = data.size();
    for (std::size_t t = 0; t < params.n_trees; ++t) {
      Rng                        rng(derive_seed(params.seed, t));
      std::vector<std::uint32_t> sample(m);
      for (auto& s : sample) {
        s = static_cast<std::uint32_t>(rng.below(m));
      }
      TreeBuilder builder(data, params, rng);
      model.trees.push_back(builder.build(std::move(sample)));
    }
    return model;
  }

  double predict_proba(ForestModel const& m, CellFeatures const& x) {
    if (m.trees.empty()) {
      return 0.0;
    }
    double sum = 0.0;
    for (auto const& tree : m.trees) {
      sum += tree.leaf_fraction(x);
    }
    return sum / static_cast<double>(m.trees.size());
  }

  ////////////////////////////////////////////////////////////////////////////
  // Persistence
  ////////////////////////////////////////////////////////////////////////////

  namespace {
    using detail::json;

    constexpr int model_version = 1;

    json node_to_json(DecisionTree const& tree, std::size_t k) {
      auto const& node = tree.nodes[k];
      json        j{{"positive", node.positive}, {"total", node.total}};
      if (!node.is_leaf()) {
        j["feature"]   = node.feature;
        j["threshold"] = node.threshold;
        j["left"]      = node_to_json(tree, node.left);
        j["right"]     = node_to_json(tree, node.right);
      }
      return j;
    }

    std::uint32_t node_from_json(json const& j, DecisionTree& tree) {
      auto const index = static_cast<std::uint32_t>(tree.nodes.size());
      tree.nodes.emplace_back();
      TreeNode node;
      node.positive = detail::required<std::uint32_t>(j, "positive");
      node.total    = detail::required<std::uint32_t>(j, "total");
      if (node.total == 0 || node.positive > node.total) {
        throw ValidationError("model: invalid node counts");
      }
      if (j.contains("feature")) {
        node.feature   = detail::required<int>(j, "feature");
        node.threshold = detail::required<double>(j, "threshold");
        if (node.feature < 0
            || static_cast<std::size_t>(node.feature) >= feature_count
            || !std::isfinite(node.threshold)) {
          throw ValidationError("model: invalid split");
        }
        node.left  = node_from_json(detail::required<json>(j, "left"), tree);
        node.right = node_from_json(detail::required<json>(j, "right"), tree);
      }
      tree.nodes[index] = node;
      return index;
    }
  }  // namespace

  void save_model(std::ostream& os, ForestModel const& m) {
    if (m.trees.empty()) {
      throw ValidationError("save_model: forest has no trees");
    }
    if (m.trees.size() != m.params.n_trees) {
      throw ValidationError("save_model: tree count disagrees with n_trees");
    }
    json hyper{
        {"n_trees", m.params.n_trees},
        {"max_depth",
         m.params.max_depth == unlimited_depth ? json(nullptr)
                                               : json(m.params.max_depth)},
        {"min_leaf", m.params.min_leaf},
        {"features_per_split", m.params.features_per_split},
        {"seed", m.params.seed},
        {"criterion",
         m.params.criterion == split_criterion::gini ? "gini" : "entropy"}};
    json names = json::array();
    for (auto const* name : feature_names()) {
      names.push_back(name);
    }
    json trees = json::array();
    for (auto const& tree : m.trees) {
      trees.push_back(node_to_json(tree, 0));
    }
    os << json{{"version", model_version},
               {"hyper", std::move(hyper)},
               {"feature_names", std::move(names)},
               {"trees", std::move(trees)}}
              .dump()
       << '\n';
  }

  ForestModel load_model(std::istream& is) {
    json j;
    try {
      j = json::parse(is);
    } catch (json::parse_error const& e) {
      throw ParseError(std::string("model: ") + e.what(), 0);
    }
    try {
      if (detail::required<int>(j, "version") != model_version) {
        throw ValidationError("model: unsupported version");
      }
      auto const& hyper = detail::required<json>(j, "hyper");
      ForestModel m;
      m.params.n_trees   = detail::required<std::size_t>(hyper, "n_trees");
      m.params.max_depth = hyper.at("max_depth").is_null()
                               ? unlimited_depth
                               : hyper.at("max_depth").get<std::size_t>();
      m.params.min_leaf  = detail::required<std::size_t>(hyper, "min_leaf");
      m.params.features_per_split
          = detail::required<std::size_t>(hyper, "features_per_split");
      m.params.seed = detail::required<std::uint64_t>(hyper, "seed");
      auto const crit = detail::required<std::string>(hyper, "criterion");
      if (crit != "gini" && crit != "entropy") {
        throw ValidationError("model: unknown criterion " + crit);
      }
      m.params.criterion
          = crit == "gini" ? split_criterion::gini : split_criterion::entropy;
      auto const names = detail::required<std::vector<std::string>>(
          j, "feature_names");
      auto const& expected = feature_names();
      if (names.size() != feature_count
          || !std::equal(names.begin(), names.end(), expected.begin())) {
        throw ValidationError("model: feature layout mismatch");
      }
      for (auto const& t : detail::required<json>(j, "trees")) {
        DecisionTree tree;
        node_from_json(t, tree);
        m.trees.push_back(std::move(tree));
      }
      if (m.trees.empty() || m.trees.size() != m.params.n_trees) {
        throw ValidationError("model: tree count disagrees with n_trees");
      }
      return m;
    } catch (json::exception const& e) {
      throw ParseError(std::string("model: ") + e.what(), 0);
    }
  }

}  // namespace semiheal
