#pragma once

#include <algorithm>
#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <tuple>
#include <vector>

#include "treekern/error.hpp"
#include "treekern/formula.hpp"
#include "treekern/graph.hpp"
#include "treekern/tree.hpp"

namespace treekern {

using Element = std::size_t;

/// Finite relational structure with one binary relation and unary labels.
///
/// Trees: parent(x, y) holds iff x is the parent of y. Graphs: edge(x, y) is
/// irreflexive and symmetric.
class FiniteStructure {
 public:
  enum class Shape { Tree, Graph };

  /// Elements are the live nodes of `t`, numbered as in `t.compacted()`.
  static FiniteStructure from_tree(const LabelledTree& t, const Signature& sig) {
    if (sig.relation() != Relation::Parent) throw InvalidInput("tree structure needs the parent signature");
    LabelledTree c = t.compacted();
    FiniteStructure s(Shape::Tree, sig, c.size());
    const LabelMask allowed = sig.size() == 64 ? ~LabelMask{0} : (LabelMask{1} << sig.size()) - 1;
    for (NodeId v = 0; v < c.size(); ++v) {
      if (c.labels(v) & ~allowed) throw InvalidInput("tree label outside the signature");
      s.labels_[v] = c.labels(v);
      s.out_[v] = c.children(v);
      if (auto p = c.parent(v)) s.in_[v].push_back(*p);
    }
    s.finish();
    return s;
  }

  static FiniteStructure from_graph(const Graph& g) { return from_graph(g, g.signature()); }

  static FiniteStructure from_graph(const Graph& g, const Signature& sig) {
    if (sig.relation() != Relation::Edge) throw InvalidInput("graph structure needs the edge signature");
    FiniteStructure s(Shape::Graph, sig, g.order());
    for (Vertex v = 0; v < g.order(); ++v) {
      s.labels_[v] = g.label_mask(v, sig);
      s.out_[v] = g.neighbours(v);
      s.in_[v] = g.neighbours(v);
    }
    s.finish();
    return s;
  }

  Shape shape() const noexcept { return shape_; }
  Relation relation() const noexcept { return sig_.relation(); }
  const Signature& signature() const noexcept { return sig_; }
  std::size_t size() const noexcept { return labels_.size(); }

  LabelMask labels(Element e) const { return labels_.at(e); }
  bool has_label(Element e, std::size_t bit) const { return (labels_.at(e) >> bit) & 1U; }

  bool related(Element x, Element y) const {
    const auto& o = out_.at(x);
    return std::binary_search(o.begin(), o.end(), y);
  }
  /// Sorted lists of y with R(x, y), resp. R(y, x).
  const std::vector<Element>& out(Element x) const { return out_.at(x); }
  const std::vector<Element>& in(Element x) const { return in_.at(x); }

  /// Twin classes: elements with equal labels and equal neighbourhoods (open,
  /// or closed for adjacent graph twins). Swapping two members of a class is an
  /// automorphism.
  const std::vector<std::size_t>& twin_class() const noexcept { return twin_; }
  std::size_t twin_class_count() const noexcept { return twin_count_; }

 private:
  FiniteStructure(Shape shape, Signature sig, std::size_t n)
      : shape_(shape), sig_(std::move(sig)), labels_(n, 0), out_(n), in_(n), twin_(n, 0) {}

  void finish() {
    for (auto& o : out_) std::sort(o.begin(), o.end());
    for (auto& i : in_) std::sort(i.begin(), i.end());
    using Key = std::tuple<LabelMask, std::vector<Element>, std::vector<Element>>;
    std::map<Key, std::vector<Element>> open;
    for (Element e = 0; e < size(); ++e) open[{labels_[e], out_[e], in_[e]}].push_back(e);

    std::vector<std::optional<std::size_t>> cls(size());
    twin_count_ = 0;
    for (const auto& [key, members] : open) {
      if (members.size() < 2) continue;
      for (Element e : members) cls[e] = twin_count_;
      ++twin_count_;
    }
    if (shape_ == Shape::Graph) {
      std::map<std::pair<LabelMask, std::vector<Element>>, std::vector<Element>> closed;
      for (Element e = 0; e < size(); ++e) {
        if (cls[e]) continue;
        auto nb = out_[e];
        nb.insert(std::lower_bound(nb.begin(), nb.end(), e), e);
        closed[{labels_[e], std::move(nb)}].push_back(e);
      }
      for (const auto& [key, members] : closed) {
        if (members.size() < 2) continue;
        for (Element e : members) cls[e] = twin_count_;
        ++twin_count_;
      }
    }
    for (Element e = 0; e < size(); ++e) {
      if (!cls[e]) cls[e] = twin_count_++;
      twin_[e] = *cls[e];
    }
  }

  Shape shape_;
  Signature sig_;
  std::vector<LabelMask> labels_;
  std::vector<std::vector<Element>> out_;
  std::vector<std::vector<Element>> in_;
  std::vector<std::size_t> twin_;
  std::size_t twin_count_ = 0;
};

}  // namespace treekern
