#include "semiheal/algebra.hpp"

#include <algorithm>
#include <numeric>
#include <set>
#include <string>

#include "semiheal/errors.hpp"

namespace semiheal {

  namespace {
    void require_complete(CayleyTable const& t, char const* op) {
      if (t.has_masked()) {
        throw IncompleteTableError(std::string(op)
                                   + ": table contains MASKED cells");
      }
    }

    inline bool holds(CayleyTable const& t,
                      std::size_t        i,
                      std::size_t        j,
                      std::size_t        k) noexcept {
      return t(static_cast<std::size_t>(t(i, j)), k)
             == t(i, static_cast<std::size_t>(t(j, k)));
    }

    // Both sides known and different.
    inline bool clash(Element lhs, Element rhs) noexcept {
      return lhs != MASKED && rhs != MASKED && lhs != rhs;
    }

    inline Element lookup(CayleyTable const& t, Element a, Element b) noexcept {
      if (a == MASKED || b == MASKED) {
        return MASKED;
      }
      return t(static_cast<std::size_t>(a), static_cast<std::size_t>(b));
    }
  }  // namespace

  bool is_associative(CayleyTable const& t) {
    require_complete(t, "is_associative");
    return !first_violation(t).has_value();
  }

  std::uint64_t count_associative_triples(CayleyTable const& t) {
    require_complete(t, "associativity_fraction");
    auto const    n = t.order();
    std::uint64_t satisfied = 0;
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < n; ++j) {
        for (std::size_t k = 0; k < n; ++k) {
          satisfied += holds(t, i, j, k);
        }
      }
    }
    return satisfied;
  }

  double associativity_fraction(CayleyTable const& t) {
    auto const n = static_cast<double>(t.order());
    return static_cast<double>(count_associative_triples(t)) / (n * n * n);
  }

  std::optional<Triple> first_violation(CayleyTable const& t) {
    require_complete(t, "first_violation");
    auto const n = t.order();
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < n; ++j) {
        for (std::size_t k = 0; k < n; ++k) {
          if (!holds(t, i, j, k)) {
            return Triple{i, j, k};
          }
        }
      }
    }
    return std::nullopt;
  }

  bool cell_consistent(CayleyTable const& t, std::size_t i, std::size_t j) {
    auto const n = t.order();
    auto const x = t(i, j);
    if (x == MASKED) {
      return true;
    }
    auto const ei = static_cast<Element>(i);
    auto const ej = static_cast<Element>(j);
    for (std::size_t m = 0; m < n; ++m) {
      auto const em = static_cast<Element>(m);
      // (i j) m = i (j m)
      if (clash(lookup(t, x, em), lookup(t, ei, lookup(t, ej, em)))) {
        return false;
      }
      // (m i) j = m (i j)
      if (clash(lookup(t, lookup(t, em, ei), ej), lookup(t, em, x))) {
        return false;
      }
    }
    for (std::size_t a = 0; a < n; ++a) {
      for (std::size_t b = 0; b < n; ++b) {
        auto const ab = t(a, b);
        auto const ea = static_cast<Element>(a);
        auto const eb = static_cast<Element>(b);
        // (a b) j = a (b j) with ab = i
        if (ab == ei && clash(x, lookup(t, ea, lookup(t, eb, ej)))) {
          return false;
        }
        // (i a) b = i (a b) with ab = j
        if (ab == ej && clash(lookup(t, lookup(t, ei, ea), eb), x)) {
          return false;
        }
      }
    }
    return true;
  }

  bool partially_consistent(CayleyTable const& t) {
    auto const n = t.order();
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < n; ++j) {
        auto const ij = t(i, j);
        if (ij == MASKED) {
          continue;
        }
        for (std::size_t k = 0; k < n; ++k) {
          auto const lhs = lookup(t, ij, static_cast<Element>(k));
          auto const rhs = lookup(t, static_cast<Element>(i),
                                  t(j, k));
          if (clash(lhs, rhs)) {
            return false;
          }
        }
      }
    }
    return true;
  }

  ////////////////////////////////////////////////////////////////////////////
  // Closure sets
  ////////////////////////////////////////////////////////////////////////////

  bool ClosureSet::contains(Element v) const {
    return std::binary_search(members.begin(), members.end(), v);
  }

  std::size_t ClosureSet::local(Element v) const {
    auto it = std::lower_bound(members.begin(), members.end(), v);
    if (it == members.end() || *it != v) {
      throw ValidationError("element " + std::to_string(v)
                            + " is not a member of the closure set");
    }
    return static_cast<std::size_t>(it - members.begin());
  }

  std::optional<std::vector<Element>> closure_members(CayleyTable const& t,
                                                      Triple             tr) {
    auto const n = t.order();
    if (tr.i >= n || tr.j >= n || tr.k >= n) {
      throw ValidationError("triple index outside table");
    }
    auto const i  = static_cast<Element>(tr.i);
    auto const j  = static_cast<Element>(tr.j);
    auto const k  = static_cast<Element>(tr.k);
    auto const ij = lookup(t, i, j);
    auto const jk = lookup(t, j, k);
    auto const l  = lookup(t, ij, k);
    auto const r  = lookup(t, i, jk);
    if (ij == MASKED || jk == MASKED || l == MASKED || r == MASKED) {
      return std::nullopt;
    }
    std::vector<Element> m{i, j, k, ij, jk, l, r};
    std::sort(m.begin(), m.end());
    m.erase(std::unique(m.begin(), m.end()), m.end());
    return m;
  }

  ClosureResult closure_set(CayleyTable const& t, Triple tr) {
    auto members = closure_members(t, tr);
    if (!members) {
      return {std::nullopt, closure_rejection::masked_entry};
    }
    if (members->size() < min_closure_size
        || members->size() > max_closure_size) {
      return {std::nullopt, closure_rejection::size_out_of_range};
    }
    ClosureSet c{tr, std::move(*members), std::nullopt};
    if (!validate_closure(t, c)) {
      return {std::nullopt, closure_rejection::not_closed};
    }
    c.subtable = extract_subtable(t, c);
    return {std::move(c), closure_rejection::none};
  }

  bool validate_closure(CayleyTable const& t, ClosureSet const& c) {
    for (auto a : c.members) {
      for (auto b : c.members) {
        auto const ab = lookup(t, a, b);
        if (ab == MASKED || !c.contains(ab)) {
          return false;
        }
        for (auto d : c.members) {
          auto const l = lookup(t, ab, d);
          auto const r = lookup(t, a, lookup(t, b, d));
          if (l == MASKED || r == MASKED || !c.contains(l) || !c.contains(r)) {
            return false;
          }
        }
      }
    }
    return true;
  }

  CayleyTable extract_subtable(CayleyTable const& t, ClosureSet const& c) {
    auto const m = c.size();
    CayleyTable sub(m);
    for (std::size_t a = 0; a < m; ++a) {
      for (std::size_t b = 0; b < m; ++b) {
        auto const v = lookup(t, c.members[a], c.members[b]);
        if (v == MASKED || !c.contains(v)) {
          throw ValidationError("closure set is not closed under the table");
        }
        sub.set(a, b, static_cast<Element>(c.local(v)));
      }
    }
    return sub;
  }

  ////////////////////////////////////////////////////////////////////////////
  // Canonical forms
  ////////////////////////////////////////////////////////////////////////////

  namespace {
    // Lowers best to the relabeling of src under perm when that is smaller.
    // The relabeled entry at (p, q) is perm[src[inv[p]][inv[q]]], generated
    // in key order so comparison can stop at the first difference.
    void improve(CayleyTable const&              src,
                 std::vector<std::size_t> const& perm,
                 std::vector<std::size_t> const& inv,
                 std::vector<Element>&           best,
                 bool                            have_best) {
      auto const n    = src.order();
      bool       less = !have_best;
      for (std::size_t p = 0; p < n; ++p) {
        for (std::size_t q = 0; q < n; ++q) {
          auto const v = static_cast<Element>(
              perm[static_cast<std::size_t>(src(inv[p], inv[q]))]);
          auto& slot = best[p * n + q];
          if (!less) {
            if (v > slot) {
              return;
            }
            if (v < slot) {
              less = true;
            }
          }
          if (less) {
            slot = v;
          }
        }
      }
    }
  }  // namespace

  CanonicalForm canonical_form(CayleyTable const& t) {
    require_complete(t, "canonical_form");
    auto const n = t.order();
    if (n > max_canonical_order) {
      throw ValidationError("canonical_form: order " + std::to_string(n)
                            + " exceeds the supported maximum of "
                            + std::to_string(max_canonical_order));
    }
    auto const               opp = opposite(t);
    std::vector<std::size_t> perm(n);
    std::vector<std::size_t> inv(n);
    std::iota(perm.begin(), perm.end(), 0);
    std::vector<Element> best(n * n);
    bool                 have_best = false;
    do {
      for (std::size_t a = 0; a < n; ++a) {
        inv[perm[a]] = a;
      }
      improve(t, perm, inv, best, have_best);
      have_best = true;
      improve(opp, perm, inv, best, have_best);
    } while (std::next_permutation(perm.begin(), perm.end()));
    return CanonicalForm{std::move(best)};
  }

  std::size_t count_classes(std::span<CayleyTable const> tables) {
    if (tables.empty()) {
      return 0;
    }
    auto const n = tables.front().order();
    std::set<CanonicalForm> seen;
    for (auto const& t : tables) {
      if (t.order() != n) {
        throw ValidationError("count_classes: tables of mixed order");
      }
      if (!is_associative(t)) {
        throw ValidationError("count_classes: table is not associative");
      }
      seen.insert(canonical_form(t));
    }
    return seen.size();
  }

}  // namespace semiheal
