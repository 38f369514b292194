#pragma once

#include <algorithm>
#include <bit>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "treekern/error.hpp"
#include "treekern/formula.hpp"
#include "treekern/tree.hpp"

namespace treekern {

using Vertex = std::size_t;

/// Finite simple undirected graph with optional vertex labels.
class Graph {
 public:
  explicit Graph(std::size_t order = 0) : adj_(order), labels_(order) {}

  std::size_t order() const noexcept { return adj_.size(); }
  std::size_t edge_count() const noexcept { return edges_; }

  void add_edge(Vertex u, Vertex v) {
    check(u);
    check(v);
    if (u == v) throw InvalidInput("loop at vertex " + std::to_string(u + 1));
    auto& nu = adj_[u];
    auto it = std::lower_bound(nu.begin(), nu.end(), v);
    if (it != nu.end() && *it == v)
      throw InvalidInput("duplicate edge " + std::to_string(u + 1) + " " + std::to_string(v + 1));
    nu.insert(it, v);
    auto& nv = adj_[v];
    nv.insert(std::lower_bound(nv.begin(), nv.end(), u), u);
    ++edges_;
  }

  bool adjacent(Vertex u, Vertex v) const {
    const auto& nu = adj_.at(u);
    return std::binary_search(nu.begin(), nu.end(), v);
  }

  const std::vector<Vertex>& neighbours(Vertex v) const { return adj_.at(v); }

  /// Edges as (u, v) with u < v, sorted.
  std::vector<std::pair<Vertex, Vertex>> edges() const {
    std::vector<std::pair<Vertex, Vertex>> out;
    for (Vertex u = 0; u < order(); ++u)
      for (Vertex v : adj_[u])
        if (u < v) out.emplace_back(u, v);
    return out;
  }

  void add_label(Vertex v, const std::string& name) {
    check(v);
    if (!is_name(name)) throw InvalidInput("invalid label '" + name + "'");
    auto& ls = labels_[v];
    if (std::find(ls.begin(), ls.end(), name) == ls.end()) ls.push_back(name);
  }
  const std::vector<std::string>& vertex_labels(Vertex v) const { return labels_.at(v); }

  std::vector<std::string> label_alphabet() const {
    std::set<std::string> names;
    for (const auto& ls : labels_) names.insert(ls.begin(), ls.end());
    return {names.begin(), names.end()};
  }

  Signature signature() const { return Signature(Relation::Edge, label_alphabet()); }

  LabelMask label_mask(Vertex v, const Signature& sig) const {
    LabelMask m = 0;
    for (const auto& l : labels_.at(v)) {
      auto idx = sig.index_of(l);
      if (!idx) throw InvalidInput("label '" + l + "' not in signature");
      m |= LabelMask{1} << *idx;
    }
    return m;
  }

  friend bool operator==(const Graph& a, const Graph& b) { return a.adj_ == b.adj_; }

 private:
  void check(Vertex v) const {
    if (v >= order()) throw InvalidInput("vertex " + std::to_string(v + 1) + " out of range");
  }

  std::vector<std::vector<Vertex>> adj_;
  std::vector<std::vector<std::string>> labels_;
  std::size_t edges_ = 0;
};

namespace detail {

inline std::vector<std::string> split_ws(const std::string& line) {
  std::istringstream in(line);
  std::vector<std::string> out;
  for (std::string tok; in >> tok;) out.push_back(tok);
  return out;
}

inline std::size_t to_count(const std::string& tok, std::size_t line, const char* what) {
  std::size_t pos = 0;
  unsigned long long v = 0;
  try {
    v = std::stoull(tok, &pos);
  } catch (const std::exception&) {
    pos = 0;
  }
  if (pos != tok.size() || tok.empty() || tok[0] == '-')
    throw ParseError(std::string("expected ") + what + ", got '" + tok + "'", line, 1);
  return static_cast<std::size_t>(v);
}

inline bool skip_line(const std::vector<std::string>& toks) {
  return toks.empty() || toks[0] == "c" || toks[0][0] == '#';
}

}  // namespace detail

/// Graph file: "p <n> <m>" (or DIMACS "p edge <n> <m>"), then m lines "e u v"
/// with 1-based vertices, plus optional "l v NAME" label lines. "c" and "#" lines are comments.
inline Graph parse_graph(const std::string& text) {
  std::istringstream in(text);
  std::optional<Graph> g;
  std::size_t declared_edges = 0;
  std::size_t lineno = 0;
  for (std::string line; std::getline(in, line);) {
    ++lineno;
    auto toks = detail::split_ws(line);
    if (detail::skip_line(toks)) continue;
    const std::string& kind = toks[0];
    if (kind == "p") {
      if (g) throw ParseError("duplicate header line", lineno, 1);
      std::size_t first = (toks.size() == 4) ? 2 : 1;
      if (toks.size() != first + 2) throw ParseError("expected 'p <n> <m>'", lineno, 1);
      g.emplace(detail::to_count(toks[first], lineno, "vertex count"));
      declared_edges = detail::to_count(toks[first + 1], lineno, "edge count");
      continue;
    }
    if (!g) throw ParseError("missing 'p <n> <m>' header", lineno, 1);
    try {
      if (kind == "e") {
        if (toks.size() != 3) throw ParseError("expected 'e u v'", lineno, 1);
        std::size_t u = detail::to_count(toks[1], lineno, "vertex");
        std::size_t v = detail::to_count(toks[2], lineno, "vertex");
        if (u == 0 || v == 0) throw ParseError("vertices are 1-based", lineno, 1);
        g->add_edge(u - 1, v - 1);
      } else if (kind == "l") {
        if (toks.size() != 3) throw ParseError("expected 'l v NAME'", lineno, 1);
        std::size_t v = detail::to_count(toks[1], lineno, "vertex");
        if (v == 0) throw ParseError("vertices are 1-based", lineno, 1);
        g->add_label(v - 1, toks[2]);
      } else {
        throw ParseError("unknown line type '" + kind + "'", lineno, 1);
      }
    } catch (const InvalidInput& e) {
      throw ParseError(e.what(), lineno, 1);
    }
  }
  if (!g) throw ParseError("missing 'p <n> <m>' header", lineno == 0 ? 1 : lineno, 1);
  if (g->edge_count() != declared_edges)
    throw ParseError("header declares " + std::to_string(declared_edges) + " edges, found " +
                         std::to_string(g->edge_count()),
                     lineno == 0 ? 1 : lineno, 1);
  return *g;
}

inline std::string to_graph_text(const Graph& g) {
  std::ostringstream out;
  out << "p " << g.order() << ' ' << g.edge_count() << '\n';
  for (auto [u, v] : g.edges()) out << "e " << u + 1 << ' ' << v + 1 << '\n';
  for (Vertex v = 0; v < g.order(); ++v)
    for (const auto& l : g.vertex_labels(v)) out << "l " << v + 1 << ' ' << l << '\n';
  return out.str();
}

// ---------------------------------------------------------------------------
// Elimination forests

/// Rooted forest on V(G); the closure of F must contain every edge of G.
struct EliminationForest {
  std::vector<std::optional<Vertex>> parent;

  std::size_t size() const noexcept { return parent.size(); }

  /// Depth of every vertex (roots have depth 0). Throws on cycles.
  std::vector<std::size_t> depths() const {
    const std::size_t n = parent.size();
    std::vector<std::size_t> depth(n, 0);
    std::vector<int> state(n, 0);
    for (Vertex start = 0; start < n; ++start) {
      std::vector<Vertex> path;
      Vertex v = start;
      while (state[v] == 0 && parent[v]) {
        state[v] = 1;
        path.push_back(v);
        if (*parent[v] >= n) throw InvalidInput("forest parent out of range");
        v = *parent[v];
      }
      if (state[v] == 1) throw InvalidInput("forest contains a cycle");
      std::size_t d = state[v] == 2 ? depth[v] : 0;
      state[v] = 2;
      for (auto it = path.rbegin(); it != path.rend(); ++it) {
        depth[*it] = ++d;
        state[*it] = 2;
      }
    }
    return depth;
  }

  std::size_t height() const {
    auto d = depths();
    return d.empty() ? 0 : *std::max_element(d.begin(), d.end());
  }

  bool is_ancestor(Vertex u, Vertex v) const {
    for (auto p = parent.at(v); p; p = parent.at(*p))
      if (*p == u) return true;
    return false;
  }
};

/// True iff every edge of G joins an ancestor-descendant pair of F.
inline bool closure_contains(const Graph& g, const EliminationForest& f) {
  if (f.size() != g.order()) return false;
  f.depths();
  for (auto [u, v] : g.edges())
    if (!f.is_ancestor(u, v) && !f.is_ancestor(v, u)) return false;
  return true;
}

inline void validate_forest(const Graph& g, const EliminationForest& f) {
  if (f.size() != g.order()) throw InvalidInput("forest does not cover the graph's vertices");
  f.depths();
  for (auto [u, v] : g.edges())
    if (!f.is_ancestor(u, v) && !f.is_ancestor(v, u))
      throw InvalidInput("forest is not a witness: edge " + std::to_string(u + 1) + " " + std::to_string(v + 1) +
                         " is not in its closure");
}

/// Forest file: one line "v p" per vertex, 1-based, p = 0 for roots.
inline EliminationForest parse_forest(const std::string& text, std::size_t order) {
  EliminationForest f;
  f.parent.assign(order, std::nullopt);
  std::vector<bool> seen(order, false);
  std::istringstream in(text);
  std::size_t lineno = 0;
  for (std::string line; std::getline(in, line);) {
    ++lineno;
    auto toks = detail::split_ws(line);
    if (detail::skip_line(toks)) continue;
    if (toks.size() != 2) throw ParseError("expected 'v parent-or-0'", lineno, 1);
    std::size_t v = detail::to_count(toks[0], lineno, "vertex");
    std::size_t p = detail::to_count(toks[1], lineno, "parent");
    if (v == 0 || v > order) throw ParseError("vertex out of range", lineno, 1);
    if (p > order) throw ParseError("parent out of range", lineno, 1);
    if (seen[v - 1]) throw ParseError("vertex listed twice", lineno, 1);
    seen[v - 1] = true;
    if (p != 0) f.parent[v - 1] = p - 1;
  }
  for (Vertex v = 0; v < order; ++v)
    if (!seen[v]) throw ParseError("vertex " + std::to_string(v + 1) + " missing from forest", lineno, 1);
  f.depths();
  return f;
}

inline std::string to_forest_text(const EliminationForest& f) {
  std::ostringstream out;
  for (Vertex v = 0; v < f.size(); ++v) out << v + 1 << ' ' << (f.parent[v] ? *f.parent[v] + 1 : 0) << '\n';
  return out.str();
}

// ---------------------------------------------------------------------------
// Exact tree-depth

struct TreeDepthResult {
  std::size_t depth = 0;
  EliminationForest forest;
};

namespace detail {

// td(S) = max over components; for connected S, 1 + min_v td(S - v). Memoized on subsets.
class TreeDepthSolver {
 public:
  explicit TreeDepthSolver(const Graph& g) : adj_(g.order(), 0) {
    for (Vertex v = 0; v < g.order(); ++v)
      for (Vertex u : g.neighbours(v)) adj_[v] |= std::uint32_t{1} << u;
  }

  std::uint8_t td(std::uint32_t set) {
    if (set == 0) return 0;
    if (std::has_single_bit(set)) return 1;
    if (auto it = memo_.find(set); it != memo_.end()) return it->second;
    auto comps = components(set);
    std::uint8_t best = 0;
    if (comps.size() > 1) {
      for (auto c : comps) best = std::max(best, td(c));
    } else {
      best = 255;
      for (std::uint32_t rest = set; rest; rest &= rest - 1) {
        std::uint32_t bit = rest & (~rest + 1);
        std::uint8_t cand = static_cast<std::uint8_t>(1 + td(set & ~bit));
        if (cand < best) {
          best = cand;
          root_[set] = static_cast<std::uint8_t>(std::countr_zero(bit));
          if (best == 2) break;  // connected with >= 2 vertices
        }
      }
    }
    memo_[set] = best;
    return best;
  }

  void build(std::uint32_t set, std::optional<Vertex> parent, EliminationForest& f) {
    for (auto c : components(set)) {
      Vertex r = std::has_single_bit(c) ? static_cast<Vertex>(std::countr_zero(c)) : root_.at(c);
      f.parent[r] = parent;
      build(c & ~(std::uint32_t{1} << r), r, f);
    }
  }

 private:
  std::vector<std::uint32_t> components(std::uint32_t set) const {
    std::vector<std::uint32_t> out;
    while (set) {
      std::uint32_t comp = set & (~set + 1);
      std::uint32_t frontier = comp;
      while (frontier) {
        std::uint32_t next = 0;
        for (std::uint32_t f = frontier; f; f &= f - 1) next |= adj_[std::countr_zero(f)];
        next &= set & ~comp;
        comp |= next;
        frontier = next;
      }
      out.push_back(comp);
      set &= ~comp;
    }
    return out;
  }

  std::vector<std::uint32_t> adj_;
  std::unordered_map<std::uint32_t, std::uint8_t> memo_;
  std::unordered_map<std::uint32_t, std::uint8_t> root_;
};

}  // namespace detail

/// Exact tree-depth with an optimal elimination forest (exponential; order <= max_order).
inline TreeDepthResult tree_depth_exact(const Graph& g, std::size_t max_order = 20) {
  if (g.order() > max_order || g.order() > 31)
    throw BudgetExceeded("tree_depth_exact: " + std::to_string(g.order()) + " vertices exceed the limit of " +
                         std::to_string(std::min<std::size_t>(max_order, 31)) + "; supply a forest instead");
  TreeDepthResult res;
  res.forest.parent.assign(g.order(), std::nullopt);
  if (g.order() == 0) return res;
  detail::TreeDepthSolver solver(g);
  const std::uint32_t all = g.order() == 32 ? ~std::uint32_t{0} : (std::uint32_t{1} << g.order()) - 1;
  res.depth = solver.td(all);
  solver.build(all, std::nullopt, res.forest);
  return res;
}

}  // namespace treekern
