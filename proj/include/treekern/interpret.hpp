#pragma once

#include <algorithm>
#include <cstddef>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "treekern/checker.hpp"
#include "treekern/error.hpp"
#include "treekern/formula.hpp"
#include "treekern/graph.hpp"
#include "treekern/tree.hpp"

namespace treekern {

enum class Provenance { Td, Shrub };

/// Simple interpretation of a graph in a labelled tree: the graph's vertices
/// are the tree nodes satisfying `domain(domain_var)`, its edges the pairs
/// satisfying `edge(edge_first, edge_second)`. Labels in `kept_labels` mean
/// the same thing on both sides; any other label atom translates to false.
struct Interpretation {
  std::string domain_var = "x";
  Formula domain;
  std::string edge_first = "x";
  std::string edge_second = "y";
  Formula edge;
  std::vector<std::string> kept_labels;
  Provenance provenance = Provenance::Td;
};

namespace detail {

/// Copies a formula, renaming every binder to a fresh name and free variables per `free_map`.
class Instantiator {
 public:
  explicit Instantiator(std::set<std::string>& taken) : taken_(taken) {}

  Formula run(const Formula& f, const std::map<std::string, std::string>& free_map) {
    scope_.clear();
    for (const auto& [from, to] : free_map) scope_.emplace_back(from, to);
    return copy(f);
  }

  std::string fresh(const std::string& base) {
    for (std::size_t i = 1;; ++i) {
      std::string cand = base + std::to_string(i);
      if (taken_.insert(cand).second) return cand;
    }
  }

 private:
  std::string map(const std::string& v) const {
    for (auto it = scope_.rbegin(); it != scope_.rend(); ++it)
      if (it->first == v) return it->second;
    return v;
  }

  Formula copy(const Formula& f) {
    switch (f.kind()) {
      case Kind::True:
      case Kind::False:
        return f;
      case Kind::Equal:
        return Formula::equal(map(f.first_var()), map(f.second_var()));
      case Kind::Related:
        return Formula::related(f.relation(), map(f.first_var()), map(f.second_var()));
      case Kind::Label:
        return Formula::label(f.name(), map(f.first_var()));
      case Kind::Member:
        return Formula::member(map(f.first_var()), map(f.set_var()));
      case Kind::Mod:
        return Formula::mod(f.residue(), f.modulus(), map(f.set_var()));
      case Kind::Not:
        return Formula::negate(copy(f.lhs()));
      case Kind::And:
      case Kind::Or:
      case Kind::Implies: {
        Formula a = copy(f.lhs());
        return Formula::binary(f.kind(), a, copy(f.rhs()));
      }
      default: {
        const bool set = quantifier_sort(f.kind()) == Sort::Set;
        std::string name = fresh(set ? "W" : "w");
        scope_.emplace_back(f.bound_var(), name);
        Formula body = copy(f.body());
        scope_.pop_back();
        return Formula::quantify(f.kind(), name, body);
      }
    }
  }

  std::set<std::string>& taken_;
  std::vector<std::pair<std::string, std::string>> scope_;
};

class Translator {
 public:
  Translator(const Interpretation& interp, const Formula& f)
      : interp_(interp), taken_(variable_names(f)), inst_(taken_), kept_(interp.kept_labels.begin(), interp.kept_labels.end()) {}

  Formula run(const Formula& f) {
    switch (f.kind()) {
      case Kind::True:
      case Kind::False:
      case Kind::Equal:
      case Kind::Member:
      case Kind::Mod:
        return f;
      case Kind::Label:
        return kept_.count(f.name()) ? f : Formula::falsity();
      case Kind::Related:
        if (f.relation() != Relation::Edge)
          throw InvalidInput("atom '" + std::string(relation_name(f.relation())) +
                             "' uses a relation the interpretation does not define");
        return inst_.run(interp_.edge, {{interp_.edge_first, f.first_var()}, {interp_.edge_second, f.second_var()}});
      case Kind::Not:
        return Formula::negate(run(f.lhs()));
      case Kind::And:
      case Kind::Or:
      case Kind::Implies: {
        Formula a = run(f.lhs());
        return Formula::binary(f.kind(), a, run(f.rhs()));
      }
      default:
        break;
    }
    const bool existential = is_existential(f.kind());
    Formula guard;
    if (quantifier_sort(f.kind()) == Sort::Element) {
      guard = domain_at(f.bound_var());
    } else {
      std::string y = inst_.fresh("u");
      guard = Formula::forall(Sort::Element, y,
                              Formula::implies(Formula::member(y, f.bound_var()), domain_at(y)));
    }
    Formula body = run(f.body());
    body = existential ? Formula::conj(guard, body) : Formula::implies(guard, body);
    return Formula::quantify(f.kind(), f.bound_var(), body);
  }

 private:
  Formula domain_at(const std::string& v) { return inst_.run(interp_.domain, {{interp_.domain_var, v}}); }

  const Interpretation& interp_;
  std::set<std::string> taken_;
  Instantiator inst_;
  std::set<std::string> kept_;
};

}  // namespace detail

/// phi^I: quantifiers relativised to the domain formula, edge atoms replaced by the edge formula.
inline Formula translate(const Formula& phi, const Interpretation& interp) {
  return detail::Translator(interp, phi).run(phi);
}

/// Target tree of an interpretation together with where each graph vertex went.
struct InterpretedTree {
  LabelledTree tree;
  Signature signature{Relation::Parent};
  Interpretation interpretation;
  std::vector<NodeId> vertex_node;
};

// ---------------------------------------------------------------------------
// Bounded tree-depth graphs

inline std::string depth_label(std::size_t j) { return "L" + std::to_string(j); }

namespace detail {

// u is a proper ancestor of y at distance at most `dist`, by a downward parent chain.
inline Formula ancestor_within(const std::string& u, const std::string& y, std::size_t dist, std::size_t step = 1) {
  if (dist == 0) return Formula::falsity();
  Formula direct = Formula::related(Relation::Parent, u, y);
  if (dist == 1) return direct;
  std::string z = "z" + std::to_string(step);
  Formula further = Formula::exists(
      Sort::Element, z,
      Formula::conj(Formula::related(Relation::Parent, u, z), ancestor_within(z, y, dist - 1, step + 1)));
  return Formula::disj(direct, further);
}

// x sits at depth j, y carries L_j and lies below x.
inline Formula td_alpha(const std::string& x, const std::string& y, std::size_t levels) {
  std::vector<Formula> cases;
  for (std::size_t j = 1; j <= levels; ++j) {
    std::vector<Formula> parts{Formula::label(depth_label(j), x)};
    for (std::size_t i = j + 1; i <= levels; ++i) parts.push_back(Formula::negate(Formula::label(depth_label(i), x)));
    parts.push_back(Formula::label(depth_label(j), y));
    parts.push_back(ancestor_within(x, y, levels - j));
    cases.push_back(Formula::conj_all(parts));
  }
  return Formula::disj_all(cases);
}

}  // namespace detail

/// Tree of an elimination forest under a fresh root labelled L0. A vertex at
/// root distance j gets L_j, plus L_i for each forest ancestor at distance i
/// it is adjacent to. The graph's own labels are kept.
inline InterpretedTree td_interpret(const Graph& g, const EliminationForest& f) {
  validate_forest(g, f);
  const auto depth = f.depths();
  const std::size_t levels = g.order() == 0 ? 0 : f.height() + 1;

  std::vector<std::string> names = g.label_alphabet();
  for (const auto& n : names)
    for (std::size_t j = 0; j <= levels; ++j)
      if (n == depth_label(j)) throw InvalidInput("graph label '" + n + "' clashes with the depth label");
  std::vector<std::string> kept = names;
  for (std::size_t j = 0; j <= levels; ++j) names.push_back(depth_label(j));
  Signature sig(Relation::Parent, names);
  auto bit = [&](const std::string& l) { return LabelMask{1} << *sig.index_of(l); };

  std::vector<std::vector<Vertex>> kids(g.order());
  std::vector<Vertex> order;
  for (Vertex v = 0; v < g.order(); ++v) {
    if (f.parent[v]) {
      kids[*f.parent[v]].push_back(v);
    } else {
      order.push_back(v);
    }
  }
  InterpretedTree out;
  out.tree = LabelledTree(bit(depth_label(0)));
  out.vertex_node.assign(g.order(), 0);
  for (Vertex v : order) out.vertex_node[v] = out.tree.add_child(0, 0);
  for (std::size_t i = 0; i < order.size(); ++i)
    for (Vertex c : kids[order[i]]) {
      out.vertex_node[c] = out.tree.add_child(out.vertex_node[order[i]], 0);
      order.push_back(c);
    }
  for (Vertex v = 0; v < g.order(); ++v) {
    LabelMask m = g.label_mask(v, sig) | bit(depth_label(depth[v] + 1));
    for (auto a = f.parent[v]; a; a = f.parent[*a])
      if (g.adjacent(v, *a)) m |= bit(depth_label(depth[*a] + 1));
    out.tree.set_labels(out.vertex_node[v], m);
  }

  Interpretation& I = out.interpretation;
  I.provenance = Provenance::Td;
  I.domain = Formula::negate(Formula::label(depth_label(0), "x"));
  I.edge = Formula::conj(Formula::negate(Formula::equal("x", "y")),
                         Formula::disj(detail::td_alpha("x", "y", levels), detail::td_alpha("y", "x", levels)));
  I.kept_labels = kept;
  out.signature = sig;
  return out;
}

// ---------------------------------------------------------------------------
// Tree-models

/// Rooted tree whose leaves all sit at depth d and carry one colour each; two
/// leaves are adjacent iff S(colour, colour, distance) holds.
class TreeModel {
 public:
  TreeModel(LabelledTree tree, std::vector<std::string> colours, std::vector<std::optional<std::size_t>> colour_of)
      : tree_(std::move(tree)), colours_(std::move(colours)), colour_of_(std::move(colour_of)) {
    depth_ = tree_.height();
    for (NodeId v = 0; v < tree_.size(); ++v) {
      if (!tree_.children(v).empty()) {
        if (colour_of_.at(v)) throw InvalidInput("only leaves may carry a colour");
        continue;
      }
      if (tree_.depth(v) != depth_)
        throw InvalidInput("leaf " + std::to_string(v) + " at depth " + std::to_string(tree_.depth(v)) +
                           ", expected every leaf at depth " + std::to_string(depth_));
      if (!colour_of_.at(v) || *colour_of_[v] >= colours_.size())
        throw InvalidInput("leaf " + std::to_string(v) + " has no colour");
      leaves_.push_back(v);
    }
    s_.assign(colours_.size() * colours_.size() * (depth_ + 1), 0);
  }

  const LabelledTree& tree() const noexcept { return tree_; }
  const std::vector<std::string>& colours() const noexcept { return colours_; }
  std::size_t depth() const noexcept { return depth_; }
  /// Leaves in id order; leaf k is graph vertex k.
  const std::vector<NodeId>& leaves() const noexcept { return leaves_; }
  std::size_t colour(NodeId leaf) const { return colour_of_.at(leaf).value(); }

  std::optional<std::size_t> colour_index(const std::string& name) const {
    auto it = std::find(colours_.begin(), colours_.end(), name);
    if (it == colours_.end()) return std::nullopt;
    return static_cast<std::size_t>(it - colours_.begin());
  }

  /// Sets S(c1, c2, 2i) and S(c2, c1, 2i).
  void set_adjacent(std::size_t c1, std::size_t c2, std::size_t i, bool value) {
    if (i < 1 || i > depth_) throw InvalidInput("distance must be even and between 2 and 2d");
    s_.at(index(c1, c2, i)) = value;
    s_.at(index(c2, c1, i)) = value;
  }
  bool adjacent_colours(std::size_t c1, std::size_t c2, std::size_t i) const { return s_.at(index(c1, c2, i)) != 0; }

  /// Height of the lowest common ancestor; leaf distance is twice this.
  std::size_t meet_height(NodeId u, NodeId v) const {
    std::size_t h = 0;
    while (u != v) {
      u = *tree_.parent(u);
      v = *tree_.parent(v);
      ++h;
    }
    return h;
  }

  static std::string colour_label(const std::string& c) { return "C_" + c; }
  static std::string pair_label(std::size_t i, const std::string& c) { return "P_" + std::to_string(i) + "_" + c; }

  /// Graph defined by S; vertex k is leaves()[k], labelled C_<colour>.
  Graph graph() const {
    Graph g(leaves_.size());
    for (std::size_t a = 0; a < leaves_.size(); ++a) {
      g.add_label(a, colour_label(colours_[colour(leaves_[a])]));
      for (std::size_t b = a + 1; b < leaves_.size(); ++b)
        if (adjacent_colours(colour(leaves_[a]), colour(leaves_[b]), meet_height(leaves_[a], leaves_[b])))
          g.add_edge(a, b);
    }
    return g;
  }

 private:
  std::size_t index(std::size_t c1, std::size_t c2, std::size_t i) const {
    return (c1 * colours_.size() + c2) * (depth_ + 1) + i;
  }

  LabelledTree tree_;
  std::vector<std::string> colours_;
  std::vector<std::optional<std::size_t>> colour_of_;
  std::vector<NodeId> leaves_;
  std::size_t depth_ = 0;
  std::vector<char> s_;
};

/// Tree in S-expression form with leaf labels c_<colour>, then lines
/// "s c1 c2 dist 0|1". Unlisted triples are 0.
inline TreeModel parse_tree_model(const std::string& text) {
  std::size_t pos = 0;
  RawTree raw = read_raw_tree(text, &pos);
  std::set<std::string> colour_set;
  std::vector<std::optional<std::string>> leaf_colour(raw.labels.size());
  for (std::size_t v = 0; v < raw.labels.size(); ++v) {
    for (const auto& l : raw.labels[v]) {
      if (l.rfind("c_", 0) != 0 || l.size() == 2)
        throw InvalidInput("tree-model labels must have the form c_<colour>, got '" + l + "'");
      if (leaf_colour[v]) throw InvalidInput("node " + std::to_string(v) + " has more than one colour");
      leaf_colour[v] = l.substr(2);
      colour_set.insert(l.substr(2));
    }
  }
  std::vector<std::string> colours(colour_set.begin(), colour_set.end());
  std::vector<std::optional<std::size_t>> colour_of(raw.labels.size());
  for (std::size_t v = 0; v < raw.labels.size(); ++v)
    if (leaf_colour[v])
      colour_of[v] = static_cast<std::size_t>(std::find(colours.begin(), colours.end(), *leaf_colour[v]) -
                                              colours.begin());
  std::vector<LabelMask> masks(raw.parents.size(), 0);
  TreeModel tm(LabelledTree::from_parents(raw.parents, masks), colours, colour_of);

  std::map<std::tuple<std::size_t, std::size_t, std::size_t>, bool> seen;
  std::istringstream rest(text.substr(pos));
  auto [first_line, col] = detail::line_column(text, pos);
  std::size_t lineno = first_line - 1;
  for (std::string line; std::getline(rest, line);) {
    ++lineno;
    auto toks = detail::split_ws(line);
    if (toks.empty() || toks[0][0] == '#' || toks[0][0] == ';') continue;
    if (toks[0] != "s" || toks.size() != 5) throw ParseError("expected 's c1 c2 dist 0|1'", lineno, 1);
    auto colour = [&](std::string name) {
      if (name.rfind("c_", 0) == 0) name = name.substr(2);
      auto c = tm.colour_index(name);
      if (!c) throw ParseError("unknown colour '" + name + "'", lineno, 1);
      return *c;
    };
    std::size_t c1 = colour(toks[1]);
    std::size_t c2 = colour(toks[2]);
    std::size_t dist = detail::to_count(toks[3], lineno, "distance");
    if (dist % 2 != 0 || dist < 2 || dist > 2 * tm.depth())
      throw ParseError("distance must be even and between 2 and " + std::to_string(2 * tm.depth()), lineno, 1);
    if (toks[4] != "0" && toks[4] != "1") throw ParseError("expected 0 or 1", lineno, 1);
    bool value = toks[4] == "1";
    for (auto key : {std::tuple{c1, c2, dist}, std::tuple{c2, c1, dist}}) {
      auto it = seen.find(key);
      if (it != seen.end() && it->second != value)
        throw ParseError("signature is not symmetric for " + toks[1] + " " + toks[2] + " " + toks[3], lineno, 1);
    }
    seen[{c1, c2, dist}] = value;
    tm.set_adjacent(c1, c2, dist / 2, value);
  }
  return tm;
}

/// Where P_{i,c} labels come from: an actual neighbour of colour c at distance
/// 2i, or S alone.
enum class ShrubLabelRule { Adjacency, Signature };

/// Leaves get C_c for their colour and P_i_c as dictated by `rule`. The
/// domain is the set of leaves; x ~ y iff the meet of x and y has height i and
/// x carries P_i_<colour of y>.
inline InterpretedTree shrub_interpret(const TreeModel& tm, ShrubLabelRule rule = ShrubLabelRule::Adjacency) {
  const std::size_t d = tm.depth();
  std::vector<std::string> names;
  for (const auto& c : tm.colours()) {
    names.push_back(TreeModel::colour_label(c));
    for (std::size_t i = 1; i <= d; ++i) names.push_back(TreeModel::pair_label(i, c));
  }
  if (names.size() > Signature::max_labels) throw InvalidInput("tree-model needs more than 64 labels");
  Signature sig(Relation::Parent, names);
  auto bit = [&](const std::string& l) { return LabelMask{1} << *sig.index_of(l); };

  InterpretedTree out;
  out.tree = tm.tree();
  const auto& leaves = tm.leaves();
  for (NodeId v : leaves) {
    const std::size_t cv = tm.colour(v);
    LabelMask m = bit(TreeModel::colour_label(tm.colours()[cv]));
    for (std::size_t c = 0; c < tm.colours().size(); ++c) {
      for (std::size_t i = 1; i <= d; ++i) {
        if (!tm.adjacent_colours(cv, c, i)) continue;
        bool realised = rule == ShrubLabelRule::Signature;
        for (std::size_t k = 0; !realised && k < leaves.size(); ++k)
          realised = leaves[k] != v && tm.colour(leaves[k]) == c && tm.meet_height(v, leaves[k]) == i;
        if (realised) m |= bit(TreeModel::pair_label(i, tm.colours()[c]));
      }
    }
    out.tree.set_labels(v, m);
  }
  out.vertex_node = leaves;

  Interpretation& I = out.interpretation;
  I.provenance = Provenance::Shrub;
  I.domain = Formula::negate(Formula::exists(Sort::Element, "w", Formula::related(Relation::Parent, "x", "w")));

  // a_i / b_i: i-th ancestors of x / y; the meet has height i iff a_i = b_i and a_{i-1} != b_{i-1}.
  auto anc = [](char base, std::size_t i, const std::string& leaf) {
    return i == 0 ? leaf : std::string(1, base) + std::to_string(i);
  };
  std::vector<Formula> cases;
  for (std::size_t i = 1; i <= d; ++i) {
    std::vector<Formula> colour_cases;
    for (const auto& c : tm.colours())
      colour_cases.push_back(
          Formula::conj(Formula::label(TreeModel::colour_label(c), "y"), Formula::label(TreeModel::pair_label(i, c), "x")));
    cases.push_back(Formula::conj_all({Formula::equal(anc('a', i, "x"), anc('b', i, "y")),
                                       Formula::negate(Formula::equal(anc('a', i - 1, "x"), anc('b', i - 1, "y"))),
                                       Formula::disj_all(colour_cases)}));
  }
  Formula body = Formula::disj_all(cases);
  for (std::size_t i = d; i >= 1; --i)
    body = Formula::exists(Sort::Element, anc('b', i, "y"),
                           Formula::conj(Formula::related(Relation::Parent, anc('b', i, "y"), anc('b', i - 1, "y")), body));
  for (std::size_t i = d; i >= 1; --i)
    body = Formula::exists(Sort::Element, anc('a', i, "x"),
                           Formula::conj(Formula::related(Relation::Parent, anc('a', i, "x"), anc('a', i - 1, "x")), body));
  I.edge = Formula::conj(Formula::negate(Formula::equal("x", "y")), body);
  for (const auto& c : tm.colours()) I.kept_labels.push_back(TreeModel::colour_label(c));
  out.signature = sig;
  return out;
}

// ---------------------------------------------------------------------------
// Graph model checking through a tree

struct GraphCheckOptions {
  KernelCheckOptions kernel;
  ShrubLabelRule shrub_rule = ShrubLabelRule::Adjacency;
  /// Order limit for computing tree-depth when no forest is supplied.
  std::size_t max_exact_td = 20;
};

struct GraphCheckResult {
  bool verdict = false;
  Formula translated;
  std::size_t tree_size = 0;
  std::size_t tree_depth = 0;  // td front-end only
  KernelCheckResult kernel;
};

namespace detail {

inline GraphCheckResult check_interpreted(const InterpretedTree& it, const Formula& phi, const GraphCheckOptions& opts) {
  if (!is_sentence(phi)) throw InvalidInput("check_graph needs a sentence");
  GraphCheckResult res;
  res.translated = translate(phi, it.interpretation);
  res.tree_size = it.tree.size();
  res.kernel = check_with_kernel(it.tree, it.signature, res.translated, opts.kernel);
  res.verdict = res.kernel.verdict;
  return res;
}

}  // namespace detail

/// Graph sentence checked on the tree of an elimination forest (computed
/// exactly when `forest` is empty).
inline GraphCheckResult check_graph_td(const Graph& g, const Formula& phi,
                                       const std::optional<EliminationForest>& forest = std::nullopt,
                                       const GraphCheckOptions& opts = {}) {
  EliminationForest f = forest ? *forest : tree_depth_exact(g, opts.max_exact_td).forest;
  auto res = detail::check_interpreted(td_interpret(g, f), phi, opts);
  res.tree_depth = g.order() == 0 ? 0 : f.height() + 1;
  return res;
}

inline GraphCheckResult check_graph_shrub(const TreeModel& tm, const Formula& phi, const GraphCheckOptions& opts = {}) {
  return detail::check_interpreted(shrub_interpret(tm, opts.shrub_rule), phi, opts);
}

}  // namespace treekern
