#pragma once

#include <algorithm>
#include <cctype>
#include <compare>
#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "treekern/error.hpp"
#include "treekern/formula.hpp"

namespace treekern {

/// Bit i set = label i of the signature alphabet.
using LabelMask = std::uint64_t;
using NodeId = std::size_t;

/// Rooted, unordered, multi-labelled tree stored as an arena.
///
/// Limbs can be erased (tombstoned); erased nodes keep their ids until
/// `compacted()` renumbers the survivors. Depths and the height are fixed at
/// construction so that levels stay those of the original tree.
class LabelledTree {
 public:
  explicit LabelledTree(LabelMask root_labels = 0) { push(std::nullopt, root_labels); }

  /// Builds a tree from a parent array (`nullopt` marks the root). Ids are kept
  /// when the root is 0 and every parent precedes its children; otherwise
  /// nodes are renumbered in BFS order.
  static LabelledTree from_parents(std::span<const std::optional<NodeId>> parents, std::span<const LabelMask> labels) {
    const std::size_t n = parents.size();
    if (n == 0) throw InvalidInput("tree has no nodes");
    if (labels.size() != n) throw InvalidInput("label list does not match node count");
    std::optional<NodeId> root;
    for (NodeId v = 0; v < n; ++v) {
      if (!parents[v]) {
        if (root) throw InvalidInput("multiple roots");
        root = v;
      } else if (*parents[v] >= n) {
        throw InvalidInput("parent id out of range");
      }
    }
    if (!root) throw InvalidInput("cycle detected (no root)");
    // Every node must reach the root; otherwise it lies on a cycle.
    std::vector<int> state(n, 0);  // 0 unknown, 1 on stack, 2 reaches root
    state[*root] = 2;
    for (NodeId start = 0; start < n; ++start) {
      std::vector<NodeId> path;
      NodeId v = start;
      while (state[v] == 0) {
        state[v] = 1;
        path.push_back(v);
        v = *parents[v];
      }
      if (state[v] == 1) throw InvalidInput("cycle detected");
      for (NodeId u : path) state[u] = 2;
    }
    bool ordered = *root == 0;
    for (NodeId v = 1; ordered && v < n; ++v) ordered = *parents[v] < v;
    if (ordered) {
      LabelledTree t(labels[0]);
      for (NodeId v = 1; v < n; ++v) t.add_child(*parents[v], labels[v]);
      return t;
    }
    // Otherwise renumber in BFS order.
    std::vector<std::vector<NodeId>> kids(n);
    for (NodeId v = 0; v < n; ++v)
      if (parents[v]) kids[*parents[v]].push_back(v);
    LabelledTree t(labels[*root]);
    std::vector<NodeId> new_id(n);
    std::vector<NodeId> order{*root};
    for (std::size_t i = 0; i < order.size(); ++i) {
      for (NodeId c : kids[order[i]]) {
        new_id[c] = t.add_child(new_id[order[i]], labels[c]);
        order.push_back(c);
      }
    }
    return t;
  }

  NodeId add_child(NodeId parent, LabelMask labels) {
    check(parent);
    NodeId id = push(parent, labels);
    nodes_[parent].children.push_back(id);
    return id;
  }

  std::size_t size() const noexcept { return nodes_.size(); }
  std::size_t alive_count() const noexcept { return alive_; }
  NodeId root() const noexcept { return 0; }
  bool alive(NodeId v) const { return nodes_.at(v).alive; }
  std::optional<NodeId> parent(NodeId v) const { return nodes_.at(v).parent; }
  const std::vector<NodeId>& children(NodeId v) const { return nodes_.at(v).children; }
  LabelMask labels(NodeId v) const { return nodes_.at(v).labels; }
  void set_labels(NodeId v, LabelMask m) { nodes_.at(v).labels = m; }
  std::size_t depth(NodeId v) const { return nodes_.at(v).depth; }
  /// Height at construction or last compaction (a single node has height 0).
  std::size_t height() const noexcept { return height_; }
  /// Level = height - depth; the root is at level `height()`.
  std::size_t level(NodeId v) const { return height_ - depth(v); }

  /// Tombstones the subtree rooted at `v` (a limb of its parent).
  void erase_limb(NodeId v) {
    check(v);
    auto p = nodes_[v].parent;
    if (!p) throw InvalidInput("cannot erase the root");
    auto& siblings = nodes_[*p].children;
    siblings.erase(std::find(siblings.begin(), siblings.end(), v));
    std::vector<NodeId> stack{v};
    while (!stack.empty()) {
      NodeId u = stack.back();
      stack.pop_back();
      nodes_[u].alive = false;
      --alive_;
      for (NodeId c : nodes_[u].children) stack.push_back(c);
    }
  }

  /// Live nodes renumbered in increasing id order; depths and height recomputed.
  LabelledTree compacted(std::vector<std::optional<NodeId>>* old_to_new = nullptr) const {
    std::vector<std::optional<NodeId>> map(nodes_.size());
    LabelledTree out(nodes_[0].labels);
    map[0] = 0;
    for (NodeId v = 1; v < nodes_.size(); ++v) {
      if (!nodes_[v].alive) continue;
      // parents always precede children in the arena
      map[v] = out.add_child(*map[*nodes_[v].parent], nodes_[v].labels);
    }
    if (old_to_new) *old_to_new = std::move(map);
    return out;
  }

  /// Live nodes in id order (parents before children).
  std::vector<NodeId> nodes() const {
    std::vector<NodeId> out;
    out.reserve(alive_);
    for (NodeId v = 0; v < nodes_.size(); ++v)
      if (nodes_[v].alive) out.push_back(v);
    return out;
  }

 private:
  struct Node {
    std::optional<NodeId> parent;
    std::vector<NodeId> children;
    LabelMask labels = 0;
    std::size_t depth = 0;
    bool alive = true;
  };

  NodeId push(std::optional<NodeId> parent, LabelMask labels) {
    Node n;
    n.parent = parent;
    n.labels = labels;
    n.depth = parent ? nodes_[*parent].depth + 1 : 0;
    height_ = std::max(height_, n.depth);
    nodes_.push_back(std::move(n));
    ++alive_;
    return nodes_.size() - 1;
  }

  void check(NodeId v) const {
    if (v >= nodes_.size() || !nodes_[v].alive) throw InvalidInput("no such node " + std::to_string(v));
  }

  std::vector<Node> nodes_;
  std::size_t height_ = 0;
  std::size_t alive_ = 0;
};

// ---------------------------------------------------------------------------
// Canonical codes

/// Totally ordered byte string; equal codes <=> l-isomorphic subtrees.
class CanonicalCode {
 public:
  CanonicalCode() = default;
  explicit CanonicalCode(std::string bytes) : bytes_(std::move(bytes)) {}

  const std::string& bytes() const noexcept { return bytes_; }

  friend bool operator==(const CanonicalCode&, const CanonicalCode&) = default;
  friend std::strong_ordering operator<=>(const CanonicalCode& a, const CanonicalCode& b) {
    return a.bytes_.compare(b.bytes_) <=> 0;
  }

 private:
  std::string bytes_;
};

namespace detail {

inline void put_varint(std::string& out, std::uint64_t v) {
  while (v >= 0x80) {
    out.push_back(static_cast<char>((v & 0x7f) | 0x80));
    v >>= 7;
  }
  out.push_back(static_cast<char>(v));
}

// code(v) = varint(#labels) labels... varint(#children) [varint(len) child-code]... with
// labels ascending in alphabet order and child codes sorted.
inline CanonicalCode encode_node(LabelMask labels, std::vector<const CanonicalCode*>& child_codes) {
  std::string out;
  put_varint(out, static_cast<std::uint64_t>(__builtin_popcountll(labels)));
  for (unsigned bit = 0; bit < 64; ++bit)
    if ((labels >> bit) & 1u) put_varint(out, bit);
  std::sort(child_codes.begin(), child_codes.end(), [](auto* a, auto* b) { return *a < *b; });
  put_varint(out, child_codes.size());
  for (const CanonicalCode* c : child_codes) {
    put_varint(out, c->bytes().size());
    out += c->bytes();
  }
  return CanonicalCode(std::move(out));
}

}  // namespace detail

/// Codes of every live node, computed bottom-up; erased nodes get an empty code.
inline std::vector<CanonicalCode> canonical_codes(const LabelledTree& t) {
  std::vector<CanonicalCode> codes(t.size());
  std::vector<const CanonicalCode*> kids;
  for (NodeId v = t.size(); v-- > 0;) {
    if (!t.alive(v)) continue;
    kids.clear();
    for (NodeId c : t.children(v)) kids.push_back(&codes[c]);
    codes[v] = detail::encode_node(t.labels(v), kids);
  }
  return codes;
}

/// Code of the subtree rooted at `v`.
inline CanonicalCode canonical_code(const LabelledTree& t, NodeId v) {
  if (v >= t.size() || !t.alive(v)) throw InvalidInput("no such node " + std::to_string(v));
  // Post-order over the subtree only.
  std::vector<NodeId> order{v};
  for (std::size_t i = 0; i < order.size(); ++i)
    for (NodeId c : t.children(order[i])) order.push_back(c);
  std::map<NodeId, CanonicalCode> codes;
  std::vector<const CanonicalCode*> kids;
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    kids.clear();
    for (NodeId c : t.children(*it)) kids.push_back(&codes.at(c));
    codes.emplace(*it, detail::encode_node(t.labels(*it), kids));
  }
  return codes.at(v);
}

/// Children of `v` grouped by the code of their subtree, ordered by code.
inline std::map<CanonicalCode, std::vector<NodeId>> limb_classes(const LabelledTree& t, NodeId v) {
  std::map<CanonicalCode, std::vector<NodeId>> out;
  for (NodeId c : t.children(v)) out[canonical_code(t, c)].push_back(c);
  for (auto& [code, ids] : out) std::sort(ids.begin(), ids.end());
  return out;
}

inline bool l_isomorphic(const LabelledTree& a, const LabelledTree& b) {
  return canonical_code(a, a.root()) == canonical_code(b, b.root());
}

// ---------------------------------------------------------------------------
// S-expression format:  node := "(" "node" "[" label ("," label)* "]" node* ")"

/// Tree with label names as written in the file, before signature resolution.
struct RawTree {
  std::vector<std::optional<NodeId>> parents;
  std::vector<std::vector<std::string>> labels;
};

namespace detail {

class SexprReader {
 public:
  SexprReader(const std::string& text, std::size_t pos) : text_(text), pos_(pos) {}

  RawTree read_tree() {
    RawTree t;
    skip_ws();
    if (pos_ >= text_.size()) fail("expected '(node'");
    read_node(t, std::nullopt);
    return t;
  }

  void skip_ws() {
    while (pos_ < text_.size()) {
      char c = text_[pos_];
      if (std::isspace(static_cast<unsigned char>(c))) {
        ++pos_;
      } else if (c == ';') {  // comment to end of line
        while (pos_ < text_.size() && text_[pos_] != '\n') ++pos_;
      } else {
        break;
      }
    }
  }

  std::size_t pos() const noexcept { return pos_; }

  [[noreturn]] void fail(const std::string& msg) const { throw parse_error_at(text_, pos_, msg); }

 private:
  void expect(char c) {
    skip_ws();
    if (pos_ >= text_.size() || text_[pos_] != c) fail(std::string("expected '") + c + "'");
    ++pos_;
  }

  std::string name() {
    skip_ws();
    std::size_t start = pos_;
    while (pos_ < text_.size() && (std::isalnum(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '_'))
      ++pos_;
    if (start == pos_) fail("expected name");
    return text_.substr(start, pos_ - start);
  }

  void read_node(RawTree& t, std::optional<NodeId> parent) {
    // Iterative to survive deep trees.
    struct Frame {
      NodeId id;
    };
    std::vector<Frame> stack;
    auto open = [&](std::optional<NodeId> p) {
      expect('(');
      if (name() != "node") fail("expected 'node'");
      expect('[');
      std::vector<std::string> labels;
      skip_ws();
      if (pos_ < text_.size() && text_[pos_] != ']') {
        labels.push_back(name());
        while (true) {
          skip_ws();
          if (pos_ < text_.size() && text_[pos_] == ',') {
            ++pos_;
            labels.push_back(name());
          } else {
            break;
          }
        }
      }
      expect(']');
      t.parents.push_back(p);
      t.labels.push_back(std::move(labels));
      stack.push_back({t.parents.size() - 1});
    };
    open(parent);
    while (!stack.empty()) {
      skip_ws();
      if (pos_ >= text_.size()) fail("unterminated node");
      if (text_[pos_] == ')') {
        ++pos_;
        stack.pop_back();
      } else if (text_[pos_] == '(') {
        open(stack.back().id);
      } else {
        fail("expected '(' or ')'");
      }
    }
  }

  const std::string& text_;
  std::size_t pos_;
};

}  // namespace detail

/// Reads one S-expression tree starting at `*pos`; advances `*pos` past it.
inline RawTree read_raw_tree(const std::string& text, std::size_t* pos) {
  detail::SexprReader r(text, *pos);
  RawTree t = r.read_tree();
  *pos = r.pos();
  return t;
}

/// Label names used anywhere in a raw tree, sorted.
inline std::vector<std::string> raw_label_names(const RawTree& t) {
  std::vector<std::string> out;
  for (const auto& ls : t.labels) out.insert(out.end(), ls.begin(), ls.end());
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

inline LabelledTree build_tree(const RawTree& raw, const Signature& sig) {
  std::vector<LabelMask> masks;
  masks.reserve(raw.labels.size());
  for (const auto& ls : raw.labels) {
    LabelMask m = 0;
    for (const auto& l : ls) {
      auto idx = sig.index_of(l);
      if (!idx) throw InvalidInput("unknown label '" + l + "'");
      m |= LabelMask{1} << *idx;
    }
    masks.push_back(m);
  }
  return LabelledTree::from_parents(raw.parents, masks);
}

/// Whole-file parse: exactly one root node.
inline RawTree parse_raw_tree(const std::string& text) {
  std::size_t pos = 0;
  RawTree t = read_raw_tree(text, &pos);
  detail::SexprReader rest(text, pos);
  rest.skip_ws();
  if (rest.pos() < text.size()) {
    if (text[rest.pos()] == '(') rest.fail("multiple roots");
    rest.fail("unexpected trailing input");
  }
  return t;
}

inline LabelledTree load_tree(const std::string& text, const Signature& sig) {
  return build_tree(parse_raw_tree(text), sig);
}

/// Pretty-printed S-expression of the live part of `t`, one node per line.
inline std::string to_sexpr(const LabelledTree& t, const Signature& sig) {
  std::string out;
  struct Item {
    NodeId v;
    bool close;
  };
  std::vector<Item> stack{{t.root(), false}};
  std::size_t indent = 0;
  while (!stack.empty()) {
    Item it = stack.back();
    stack.pop_back();
    if (it.close) {
      out += ")";
      --indent;
      continue;
    }
    if (!out.empty()) out += "\n" + std::string(2 * indent, ' ');
    out += "(node [";
    bool first = true;
    for (std::size_t i = 0; i < sig.size(); ++i) {
      if (!((t.labels(it.v) >> i) & 1u)) continue;
      if (!first) out += ",";
      out += sig.labels()[i];
      first = false;
    }
    out += "]";
    ++indent;
    stack.push_back({it.v, true});
    const auto& kids = t.children(it.v);
    for (auto c = kids.rbegin(); c != kids.rend(); ++c) stack.push_back({*c, false});
  }
  out += "\n";
  return out;
}

}  // namespace treekern
