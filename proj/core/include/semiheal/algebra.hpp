#pragma once

// Exact algebraic predicates on Cayley tables.
//
// Triples are always visited row-major: i outer, j middle, k inner.
//
// Equivalence classes ("canonical forms") are taken up to isomorphism AND
// anti-isomorphism: two tables are equivalent when a permutation maps one
// onto the other or onto its opposite. With that relation the class counts
// for n = 1..4 are 1, 4, 18, 126, the classical semigroup counts.

#include <compare>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "semiheal/table.hpp"

namespace semiheal {

  // Throws IncompleteTableError if t contains MASKED cells.
  bool is_associative(CayleyTable const& t);

  // Number of triples (i, j, k) with (ij)k = i(jk), out of n^3.
  std::uint64_t count_associative_triples(CayleyTable const& t);

  // count_associative_triples(t) / n^3.
  double associativity_fraction(CayleyTable const& t);

  // The first violated triple in row-major order, if any.
  std::optional<Triple> first_violation(CayleyTable const& t);

  // Partial-table check used by the search routines. MASKED is read as
  // "unassigned": returns false iff some triple that involves cell (i, j)
  // in any of its four lookups is fully determined and violated.
  bool cell_consistent(CayleyTable const& t, std::size_t i, std::size_t j);

  // True iff every fully determined triple holds (MASKED = unassigned).
  bool partially_consistent(CayleyTable const& t);

  ////////////////////////////////////////////////////////////////////////////
  // Closure sets
  ////////////////////////////////////////////////////////////////////////////

  enum class closure_rejection {
    none,
    masked_entry,
    size_out_of_range,
    not_closed,
  };

  inline constexpr std::size_t min_closure_size = 2;
  inline constexpr std::size_t max_closure_size = 5;

  struct ClosureSet {
    Triple base;
    // Sorted ascending, distinct, global labels.
    std::vector<Element> members;
    // Present only when the set is closed under the table's products:
    // subtable(local(a), local(b)) = local(t(a, b)).
    std::optional<CayleyTable> subtable;

    std::size_t size() const noexcept {
      return members.size();
    }
    bool contains(Element v) const;
    // Position of v in members; v must be a member.
    std::size_t local(Element v) const;
    Element global(std::size_t local_index) const {
      return members[local_index];
    }
  };

  struct ClosureResult {
    std::optional<ClosureSet> set;
    closure_rejection         reason = closure_rejection::none;

    explicit operator bool() const noexcept {
      return set.has_value();
    }
  };

  // {i, j, k, ij, jk, (ij)k, i(jk)} for the triple, rejected when a product
  // is MASKED, when the size is outside [2, 5], or when the set is not closed.
  ClosureResult closure_set(CayleyTable const& t, Triple tr);

  // The raw member set of a triple (no size or closure filtering); nullopt if
  // a MASKED entry is hit.
  std::optional<std::vector<Element>> closure_members(CayleyTable const& t,
                                                      Triple             tr);

  // True iff ab, (ab)c and a(bc) lie in members for all members a, b, c.
  // A MASKED product makes the set unverifiable, hence false.
  bool validate_closure(CayleyTable const& t, ClosureSet const& c);

  // Builds the reindexed subtable; c must validate against t.
  CayleyTable extract_subtable(CayleyTable const& t, ClosureSet const& c);

  ////////////////////////////////////////////////////////////////////////////
  // Canonical forms
  ////////////////////////////////////////////////////////////////////////////

  inline constexpr std::size_t max_canonical_order = 8;

  struct CanonicalForm {
    std::vector<Element> key;

    friend auto operator<=>(CanonicalForm const&, CanonicalForm const&)
        = default;
  };

  // Lexicographically least serialization over all relabelings of t and of
  // opposite(t). Brute force over S_n; n <= 8.
  CanonicalForm canonical_form(CayleyTable const& t);

  // Number of distinct canonical forms; all tables associative, same order.
  std::size_t count_classes(std::span<CayleyTable const> tables);

}  // namespace semiheal
