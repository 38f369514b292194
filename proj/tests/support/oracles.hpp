#pragma once

// Test-side reference implementations. They share no code with the library
// beyond the data types they read.

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <boost/multiprecision/cpp_int.hpp>

#include "treekern/formula.hpp"
#include "treekern/graph.hpp"
#include "treekern/tree.hpp"

namespace oracle {

using Big = boost::multiprecision::cpp_int;

// Threshold recurrence with exact arithmetic and no caps.
struct ExactRow {
  Big n;
  Big r;
};

inline Big ipow(const Big& b, const Big& e) {
  Big out = 1;
  for (Big i = 0; i < e; ++i) out *= b;
  return out;
}

inline std::size_t bit_length(const Big& x) { return x == 0 ? 0 : boost::multiprecision::msb(x) + 1; }

// Rows 0..levels, stopping early once N_{i+1} would need more than max_bits bits.
inline std::vector<ExactRow> exact_thresholds(std::size_t levels, unsigned q, unsigned s, unsigned k,
                                              std::size_t max_bits = 4096) {
  std::vector<ExactRow> rows;
  const Big two_k = Big(1) << k;
  Big n = two_k + 1;
  for (std::size_t i = 0; i <= levels; ++i) {
    Big r = q * ipow(n, s);
    rows.push_back({n, r});
    if (i == levels) break;
    if (r > 0 && Big(bit_length(r + 1)) * n > max_bits) break;
    n = two_k * ipow(r + 1, n);
  }
  return rows;
}

// Label-preserving rooted isomorphism by backtracking over child matchings.
inline bool isomorphic_at(const treekern::LabelledTree& a, treekern::NodeId u, const treekern::LabelledTree& b,
                          treekern::NodeId v) {
  if (a.labels(u) != b.labels(v)) return false;
  const auto& ca = a.children(u);
  const auto& cb = b.children(v);
  if (ca.size() != cb.size()) return false;
  std::vector<bool> used(cb.size(), false);
  std::function<bool(std::size_t)> match = [&](std::size_t i) {
    if (i == ca.size()) return true;
    for (std::size_t j = 0; j < cb.size(); ++j) {
      if (used[j] || !isomorphic_at(a, ca[i], b, cb[j])) continue;
      used[j] = true;
      if (match(i + 1)) return true;
      used[j] = false;
    }
    return false;
  };
  return match(0);
}

inline bool isomorphic(const treekern::LabelledTree& a, const treekern::LabelledTree& b) {
  return isomorphic_at(a, a.root(), b, b.root());
}

// Number of edges on a longest simple path, by exhaustive DFS (stops at a Hamiltonian path).
inline std::size_t longest_path(const treekern::Graph& g) {
  if (g.order() == 0) return 0;
  const std::size_t most = g.order() - 1;
  std::size_t best = 0;
  std::vector<bool> on(g.order(), false);
  std::function<void(treekern::Vertex, std::size_t)> dfs = [&](treekern::Vertex v, std::size_t len) {
    best = std::max(best, len);
    on[v] = true;
    for (auto w : g.neighbours(v))
      if (!on[w] && best < most) dfs(w, len + 1);
    on[v] = false;
  };
  for (treekern::Vertex v = 0; v < g.order() && best < most; ++v) dfs(v, 0);
  return best;
}

// Plain Tarskian evaluator: every element, every subset, environments by name.
class NaiveModel {
 public:
  using Rel = std::function<bool(std::size_t, std::size_t)>;
  using Lab = std::function<bool(std::size_t, const std::string&)>;

  NaiveModel(std::size_t n, Rel rel, Lab lab) : n_(n), rel_(std::move(rel)), lab_(std::move(lab)) {}

  static NaiveModel of_tree(const treekern::LabelledTree& t, const treekern::Signature& sig) {
    return NaiveModel(
        t.size(), [&t](std::size_t x, std::size_t y) { return t.parent(y) && *t.parent(y) == x; },
        [&t, &sig](std::size_t x, const std::string& l) {
          auto i = sig.index_of(l);
          return i && ((t.labels(x) >> *i) & 1U);
        });
  }

  static NaiveModel of_graph(const treekern::Graph& g) {
    return NaiveModel(
        g.order(), [&g](std::size_t x, std::size_t y) { return g.adjacent(x, y); },
        [&g](std::size_t x, const std::string& l) {
          const auto& ls = g.vertex_labels(x);
          return std::find(ls.begin(), ls.end(), l) != ls.end();
        });
  }

  bool holds(const treekern::Formula& f) {
    elems_.clear();
    sets_.clear();
    return eval(f);
  }

 private:
  bool eval(const treekern::Formula& f) {
    using treekern::Kind;
    switch (f.kind()) {
      case Kind::True:
        return true;
      case Kind::False:
        return false;
      case Kind::Equal:
        return elems_.at(f.first_var()) == elems_.at(f.second_var());
      case Kind::Related:
        return rel_(elems_.at(f.first_var()), elems_.at(f.second_var()));
      case Kind::Label:
        return lab_(elems_.at(f.first_var()), f.name());
      case Kind::Member:
        return (sets_.at(f.set_var()) >> elems_.at(f.first_var())) & 1U;
      case Kind::Mod: {
        auto size = static_cast<std::uint64_t>(__builtin_popcountll(sets_.at(f.set_var())));
        return size % f.modulus() == f.residue();
      }
      case Kind::Not:
        return !eval(f.lhs());
      case Kind::And:
        return eval(f.lhs()) && eval(f.rhs());
      case Kind::Or:
        return eval(f.lhs()) || eval(f.rhs());
      case Kind::Implies:
        return !eval(f.lhs()) || eval(f.rhs());
      case Kind::ExistsElem:
      case Kind::ForallElem: {
        const bool ex = f.kind() == Kind::ExistsElem;
        auto saved = elems_;
        bool result = !ex;
        for (std::size_t e = 0; e < n_; ++e) {
          elems_[f.bound_var()] = e;
          if (eval(f.body()) == ex) {
            result = ex;
            break;
          }
        }
        elems_ = std::move(saved);
        return result;
      }
      case Kind::ExistsSet:
      case Kind::ForallSet: {
        const bool ex = f.kind() == Kind::ExistsSet;
        auto saved = sets_;
        bool result = !ex;
        for (std::uint64_t mask = 0; mask < (std::uint64_t{1} << n_); ++mask) {
          sets_[f.bound_var()] = mask;
          if (eval(f.body()) == ex) {
            result = ex;
            break;
          }
        }
        sets_ = std::move(saved);
        return result;
      }
    }
    return false;
  }

  std::size_t n_;
  Rel rel_;
  Lab lab_;
  std::map<std::string, std::size_t> elems_;
  std::map<std::string, std::uint64_t> sets_;
};

}  // namespace oracle
