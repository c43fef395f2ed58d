#pragma once

// Reference implementations used as test oracles. Deliberately naive and
// independent of the library's algorithms: plain nested vectors, full triple
// enumeration, exhaustive search.

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <numeric>
#include <random>
#include <set>
#include <vector>

#include "semiheal/table.hpp"

namespace oracle {

  using Grid = std::vector<std::vector<int>>;

  inline Grid grid(semiheal::CayleyTable const& t) {
    Grid g(t.order(), std::vector<int>(t.order()));
    for (std::size_t i = 0; i < t.order(); ++i) {
      for (std::size_t j = 0; j < t.order(); ++j) {
        g[i][j] = t(i, j);
      }
    }
    return g;
  }

  inline std::size_t associative_triples(Grid const& g) {
    std::size_t n = g.size(), ok = 0;
    for (std::size_t a = 0; a < n; ++a)
      for (std::size_t b = 0; b < n; ++b)
        for (std::size_t c = 0; c < n; ++c)
          ok += g[g[a][b]][c] == g[a][g[b][c]];
    return ok;
  }

  inline bool associative(Grid const& g) {
    return associative_triples(g) == g.size() * g.size() * g.size();
  }

  inline bool associative(semiheal::CayleyTable const& t) {
    return associative(grid(t));
  }

  // Every labeled table of order n, filtered by associativity, in
  // lexicographic order of the row-major entries.
  inline std::vector<Grid> all_semigroups(std::size_t n) {
    std::size_t cells = n * n, total = 1;
    for (std::size_t c = 0; c < cells; ++c) total *= n;
    std::vector<Grid> out;
    for (std::size_t code = 0; code < total; ++code) {
      Grid        g(n, std::vector<int>(n));
      std::size_t x = code;
      for (std::size_t c = cells; c-- > 0;) {
        g[c / n][c % n] = static_cast<int>(x % n);
        x /= n;
      }
      if (associative(g)) out.push_back(g);
    }
    return out;
  }

  // Smallest serialization over all relabelings of g and of its transpose.
  inline std::vector<int> canonical(Grid const& g) {
    std::size_t              n = g.size();
    std::vector<std::size_t> perm(n);
    std::iota(perm.begin(), perm.end(), 0);
    std::vector<int> best;
    do {
      for (int flip = 0; flip < 2; ++flip) {
        // h(perm[a], perm[b]) = perm[g(a, b)], with operands swapped on flip.
        std::vector<int> h(n * n);
        for (std::size_t a = 0; a < n; ++a)
          for (std::size_t b = 0; b < n; ++b) {
            int v = flip ? g[b][a] : g[a][b];
            h[perm[a] * n + perm[b]] = static_cast<int>(perm[static_cast<std::size_t>(v)]);
          }
        if (best.empty() || h < best) best = h;
      }
    } while (std::next_permutation(perm.begin(), perm.end()));
    return best;
  }

  inline std::size_t classes(std::vector<Grid> const& gs) {
    std::set<std::vector<int>> seen;
    for (auto const& g : gs) seen.insert(canonical(g));
    return seen.size();
  }

  // Pr[X >= c], X ~ Bin(n, 1/n), as sum_k C(n,k) (n-1)^(n-k) / n^n with the
  // numerator and denominator held exactly.
  inline long double binomial_tail(std::size_t n, std::size_t c) {
    using u128 = unsigned __int128;
    auto pow = [](u128 b, std::size_t e) {
      u128 r = 1;
      while (e--) r *= b;
      return r;
    };
    auto choose = [](std::size_t n, std::size_t k) {
      u128 r = 1;
      for (std::size_t i = 1; i <= k; ++i) r = r * (n - k + i) / i;
      return r;
    };
    u128 num = 0;
    for (std::size_t k = c; k <= n; ++k) num += choose(n, k) * pow(n - 1, n - k);
    return static_cast<long double>(num) / static_cast<long double>(pow(n, n));
  }

  // Checks (ij)k = i(jk) over k, plus (ki)j = k(ij) when symmetric.
  inline std::uint32_t trust_passed(Grid const& g, std::size_t i, std::size_t j,
                                    bool symmetric) {
    std::uint32_t ok = 0;
    for (std::size_t k = 0; k < g.size(); ++k) {
      ok += g[g[i][j]][k] == g[i][g[j][k]];
      if (symmetric) ok += g[g[k][i]][j] == g[k][g[i][j]];
    }
    return ok;
  }

  // Associative completions of the cells in `free` (all other cells fixed).
  inline std::vector<Grid> completions(Grid g, std::vector<semiheal::Cell> const& free) {
    std::vector<Grid> out;
    std::size_t       n = g.size(), total = 1;
    for (std::size_t c = 0; c < free.size(); ++c) total *= n;
    for (std::size_t code = 0; code < total; ++code) {
      std::size_t x = code;
      for (auto const& c : free) {
        g[c.row][c.col] = static_cast<int>(x % n);
        x /= n;
      }
      if (associative(g)) out.push_back(g);
    }
    return out;
  }

  inline semiheal::CayleyTable table(Grid const& g) {
    std::vector<std::vector<semiheal::Element>> rows;
    for (auto const& r : g) rows.emplace_back(r.begin(), r.end());
    return semiheal::CayleyTable::from_rows(rows);
  }

  inline semiheal::CayleyTable random_table(std::size_t n, std::mt19937_64& rng) {
    semiheal::CayleyTable t(n);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j)
        t.set(i, j, static_cast<semiheal::Element>(rng() % n));
    return t;
  }

  // Z_n under addition mod n.
  inline semiheal::CayleyTable cyclic(std::size_t n) {
    semiheal::CayleyTable t(n);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j)
        t.set(i, j, static_cast<semiheal::Element>((i + j) % n));
    return t;
  }

  // Left-zero band: ab = a.
  inline semiheal::CayleyTable left_zero(std::size_t n) {
    semiheal::CayleyTable t(n);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j)
        t.set(i, j, static_cast<semiheal::Element>(i));
    return t;
  }

}  // namespace oracle
