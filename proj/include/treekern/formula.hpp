#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <memory>
#include <numeric>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "treekern/error.hpp"

namespace treekern {

/// The single binary relation of a signature.
enum class Relation { Parent, Edge };

inline std::string_view relation_name(Relation r) { return r == Relation::Parent ? "parent" : "edge"; }

/// Label symbols and label sets may use [A-Za-z0-9_].
inline bool is_name(std::string_view s) {
  if (s.empty()) return false;
  return std::all_of(s.begin(), s.end(), [](char c) {
    return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') || c == '_';
  });
}

/// Relation symbol plus a label alphabet kept in lexicographic order.
/// The position of a label in `labels()` is its bit in a LabelMask.
class Signature {
 public:
  static constexpr std::size_t max_labels = 64;

  explicit Signature(Relation relation, std::vector<std::string> labels = {}) : relation_(relation) {
    std::sort(labels.begin(), labels.end());
    for (std::size_t i = 0; i < labels.size(); ++i) {
      if (!is_name(labels[i])) throw InvalidInput("invalid label symbol '" + labels[i] + "'");
      if (i > 0 && labels[i] == labels[i - 1]) throw InvalidInput("duplicate label symbol '" + labels[i] + "'");
    }
    if (labels.size() > max_labels) throw InvalidInput("label alphabet exceeds 64 symbols");
    labels_ = std::move(labels);
  }

  Relation relation() const noexcept { return relation_; }
  const std::vector<std::string>& labels() const noexcept { return labels_; }
  std::size_t size() const noexcept { return labels_.size(); }

  std::optional<std::size_t> index_of(std::string_view label) const {
    auto it = std::lower_bound(labels_.begin(), labels_.end(), label);
    if (it == labels_.end() || *it != label) return std::nullopt;
    return static_cast<std::size_t>(it - labels_.begin());
  }
  bool contains(std::string_view label) const { return index_of(label).has_value(); }

  friend bool operator==(const Signature&, const Signature&) = default;

 private:
  Relation relation_;
  std::vector<std::string> labels_;
};

enum class Sort { Element, Set };

struct Variable {
  std::string name;
  Sort sort = Sort::Element;

  friend auto operator<=>(const Variable&, const Variable&) = default;
};

enum class Kind {
  True,
  False,
  Equal,     // x = y
  Related,   // parent(x, y) / edge(x, y)
  Label,     // lab_L(x)
  Member,    // in(x, X)
  Mod,       // mod[a, b](X)
  Not,
  And,
  Or,
  Implies,
  ExistsElem,
  ForallElem,
  ExistsSet,
  ForallSet,
};

inline bool is_atom(Kind k) { return k <= Kind::Mod; }
inline bool is_quantifier(Kind k) { return k >= Kind::ExistsElem; }
inline bool is_binary(Kind k) { return k == Kind::And || k == Kind::Or || k == Kind::Implies; }
inline bool is_existential(Kind k) { return k == Kind::ExistsElem || k == Kind::ExistsSet; }
inline Sort quantifier_sort(Kind k) {
  return (k == Kind::ExistsSet || k == Kind::ForallSet) ? Sort::Set : Sort::Element;
}
inline Kind quantifier_kind(bool existential, Sort sort) {
  if (sort == Sort::Element) return existential ? Kind::ExistsElem : Kind::ForallElem;
  return existential ? Kind::ExistsSet : Kind::ForallSet;
}

/// Immutable MSO/CMSO syntax tree with shared subterms.
class Formula {
 public:
  Formula() : Formula(make(Kind::True)) {}

  static Formula truth() { return make(Kind::True); }
  static Formula falsity() { return make(Kind::False); }

  static Formula equal(std::string x, std::string y) {
    Node n = blank(Kind::Equal);
    n.first = std::move(x);
    n.second = std::move(y);
    return Formula(std::move(n));
  }
  static Formula related(Relation r, std::string x, std::string y) {
    Node n = blank(Kind::Related);
    n.relation = r;
    n.first = std::move(x);
    n.second = std::move(y);
    return Formula(std::move(n));
  }
  static Formula label(std::string label, std::string x) {
    Node n = blank(Kind::Label);
    n.name = std::move(label);
    n.first = std::move(x);
    return Formula(std::move(n));
  }
  static Formula member(std::string x, std::string set) {
    Node n = blank(Kind::Member);
    n.first = std::move(x);
    n.set = std::move(set);
    return Formula(std::move(n));
  }
  static Formula mod(std::uint64_t a, std::uint64_t b, std::string set) {
    if (b < 1 || a >= b) throw InvalidInput("mod[a,b] requires 0 <= a < b");
    Node n = blank(Kind::Mod);
    n.residue = a;
    n.modulus = b;
    n.set = std::move(set);
    return Formula(std::move(n));
  }
  static Formula negate(Formula f) {
    Node n = blank(Kind::Not);
    n.lhs = std::move(f.node_);
    return Formula(std::move(n));
  }
  static Formula binary(Kind k, Formula a, Formula b) {
    Node n = blank(k);
    n.lhs = std::move(a.node_);
    n.rhs = std::move(b.node_);
    return Formula(std::move(n));
  }
  static Formula conj(Formula a, Formula b) { return binary(Kind::And, std::move(a), std::move(b)); }
  static Formula disj(Formula a, Formula b) { return binary(Kind::Or, std::move(a), std::move(b)); }
  static Formula implies(Formula a, Formula b) { return binary(Kind::Implies, std::move(a), std::move(b)); }
  static Formula quantify(Kind k, std::string var, Formula body) {
    Node n = blank(k);
    n.name = std::move(var);
    n.lhs = std::move(body.node_);
    return Formula(std::move(n));
  }
  static Formula exists(Sort sort, std::string var, Formula body) {
    return quantify(quantifier_kind(true, sort), std::move(var), std::move(body));
  }
  static Formula forall(Sort sort, std::string var, Formula body) {
    return quantify(quantifier_kind(false, sort), std::move(var), std::move(body));
  }

  /// Left fold with `true` for the empty list.
  static Formula conj_all(const std::vector<Formula>& fs) {
    if (fs.empty()) return truth();
    Formula acc = fs.front();
    for (std::size_t i = 1; i < fs.size(); ++i) acc = conj(acc, fs[i]);
    return acc;
  }
  /// Left fold with `false` for the empty list.
  static Formula disj_all(const std::vector<Formula>& fs) {
    if (fs.empty()) return falsity();
    Formula acc = fs.front();
    for (std::size_t i = 1; i < fs.size(); ++i) acc = disj(acc, fs[i]);
    return acc;
  }

  Kind kind() const noexcept { return node_->kind; }
  Relation relation() const noexcept { return node_->relation; }
  /// Label symbol of a Label atom, or bound variable of a quantifier.
  const std::string& name() const noexcept { return node_->name; }
  const std::string& bound_var() const noexcept { return node_->name; }
  const std::string& first_var() const noexcept { return node_->first; }
  const std::string& second_var() const noexcept { return node_->second; }
  const std::string& set_var() const noexcept { return node_->set; }
  std::uint64_t residue() const noexcept { return node_->residue; }
  std::uint64_t modulus() const noexcept { return node_->modulus; }

  /// Operand of Not, left operand of a binary node, body of a quantifier.
  Formula lhs() const { return Formula(node_->lhs); }
  Formula rhs() const { return Formula(node_->rhs); }
  Formula body() const { return Formula(node_->lhs); }

  const void* identity() const noexcept { return node_.get(); }

  friend bool operator==(const Formula& a, const Formula& b) { return equal_nodes(a.node_.get(), b.node_.get()); }

 private:
  struct Node {
    Kind kind = Kind::True;
    Relation relation = Relation::Parent;
    std::string name;
    std::string first;
    std::string second;
    std::string set;
    std::uint64_t residue = 0;
    std::uint64_t modulus = 1;
    std::shared_ptr<const Node> lhs;
    std::shared_ptr<const Node> rhs;
  };

  explicit Formula(Node n) : node_(std::make_shared<const Node>(std::move(n))) {}
  explicit Formula(std::shared_ptr<const Node> n) : node_(std::move(n)) {}
  static Node blank(Kind k) {
    Node n;
    n.kind = k;
    return n;
  }
  static Formula make(Kind k) { return Formula(blank(k)); }

  static bool equal_nodes(const Node* a, const Node* b) {
    if (a == b) return true;
    if (!a || !b) return false;
    if (a->kind != b->kind) return false;
    switch (a->kind) {
      case Kind::True:
      case Kind::False:
        return true;
      case Kind::Equal:
        return a->first == b->first && a->second == b->second;
      case Kind::Related:
        return a->relation == b->relation && a->first == b->first && a->second == b->second;
      case Kind::Label:
        return a->name == b->name && a->first == b->first;
      case Kind::Member:
        return a->first == b->first && a->set == b->set;
      case Kind::Mod:
        return a->residue == b->residue && a->modulus == b->modulus && a->set == b->set;
      case Kind::Not:
        return equal_nodes(a->lhs.get(), b->lhs.get());
      case Kind::And:
      case Kind::Or:
      case Kind::Implies:
        return equal_nodes(a->lhs.get(), b->lhs.get()) && equal_nodes(a->rhs.get(), b->rhs.get());
      default:
        return a->name == b->name && equal_nodes(a->lhs.get(), b->lhs.get());
    }
  }

  std::shared_ptr<const Node> node_;
};

// ---------------------------------------------------------------------------
// Analysis

namespace detail {

inline void collect_free(const Formula& f, std::vector<Variable>& bound, std::set<Variable>& out) {
  auto visit = [&](const std::string& name, Sort sort) {
    Variable v{name, sort};
    if (std::find(bound.begin(), bound.end(), v) == bound.end()) out.insert(std::move(v));
  };
  switch (f.kind()) {
    case Kind::True:
    case Kind::False:
      return;
    case Kind::Equal:
    case Kind::Related:
      visit(f.first_var(), Sort::Element);
      visit(f.second_var(), Sort::Element);
      return;
    case Kind::Label:
      visit(f.first_var(), Sort::Element);
      return;
    case Kind::Member:
      visit(f.first_var(), Sort::Element);
      visit(f.set_var(), Sort::Set);
      return;
    case Kind::Mod:
      visit(f.set_var(), Sort::Set);
      return;
    case Kind::Not:
      collect_free(f.lhs(), bound, out);
      return;
    case Kind::And:
    case Kind::Or:
    case Kind::Implies:
      collect_free(f.lhs(), bound, out);
      collect_free(f.rhs(), bound, out);
      return;
    default:
      bound.push_back(Variable{f.bound_var(), quantifier_sort(f.kind())});
      collect_free(f.body(), bound, out);
      bound.pop_back();
      return;
  }
}

}  // namespace detail

/// Free variables, sorted by (name, sort).
inline std::vector<Variable> free_variables(const Formula& f) {
  std::vector<Variable> bound;
  std::set<Variable> out;
  detail::collect_free(f, bound, out);
  return {out.begin(), out.end()};
}

inline bool is_sentence(const Formula& f) { return free_variables(f).empty(); }

/// Calls `fn` on every node in pre-order.
template <typename Fn>
void for_each_node(const Formula& f, Fn&& fn) {
  fn(f);
  if (f.kind() == Kind::Not || is_quantifier(f.kind())) {
    for_each_node(f.lhs(), fn);
  } else if (is_binary(f.kind())) {
    for_each_node(f.lhs(), fn);
    for_each_node(f.rhs(), fn);
  }
}

struct QuantifierCounts {
  std::size_t elements = 0;  // q
  std::size_t sets = 0;      // s
};

inline QuantifierCounts count_quantifiers(const Formula& f) {
  QuantifierCounts c;
  for_each_node(f, [&](const Formula& g) {
    if (!is_quantifier(g.kind())) return;
    if (quantifier_sort(g.kind()) == Sort::Element)
      ++c.elements;
    else
      ++c.sets;
  });
  return c;
}

inline bool contains_mod(const Formula& f) {
  bool found = false;
  for_each_node(f, [&](const Formula& g) { found = found || g.kind() == Kind::Mod; });
  return found;
}

inline bool contains_set_quantifier(const Formula& f) {
  bool found = false;
  for_each_node(f, [&](const Formula& g) {
    found = found || g.kind() == Kind::ExistsSet || g.kind() == Kind::ForallSet;
  });
  return found;
}

/// Least common multiple of the moduli of all mod atoms; 1 when there are none.
inline std::uint64_t lcm_moduli(const Formula& f) {
  std::uint64_t acc = 1;
  for_each_node(f, [&](const Formula& g) {
    if (g.kind() != Kind::Mod) return;
    std::uint64_t step = g.modulus() / std::gcd(acc, g.modulus());
    std::uint64_t next = 0;
    if (__builtin_mul_overflow(acc, step, &next)) throw InvalidInput("lcm of moduli overflows 64 bits");
    acc = next;
  });
  return acc;
}

/// Label symbols used in the formula, sorted and deduplicated.
inline std::vector<std::string> label_symbols(const Formula& f) {
  std::set<std::string> names;
  for_each_node(f, [&](const Formula& g) {
    if (g.kind() == Kind::Label) names.insert(g.name());
  });
  return {names.begin(), names.end()};
}

/// Every variable name occurring in the formula, bound or free.
inline std::set<std::string> variable_names(const Formula& f) {
  std::set<std::string> names;
  for_each_node(f, [&](const Formula& g) {
    switch (g.kind()) {
      case Kind::Equal:
      case Kind::Related:
        names.insert(g.first_var());
        names.insert(g.second_var());
        break;
      case Kind::Label:
        names.insert(g.first_var());
        break;
      case Kind::Member:
        names.insert(g.first_var());
        names.insert(g.set_var());
        break;
      case Kind::Mod:
        names.insert(g.set_var());
        break;
      default:
        if (is_quantifier(g.kind())) names.insert(g.bound_var());
        break;
    }
  });
  return names;
}

// ---------------------------------------------------------------------------
// Printing (inverse of the parser)

namespace detail {

inline void print(const Formula& f, std::string& out);

inline void print_operand(const Formula& f, std::string& out) {
  if (is_quantifier(f.kind())) {
    out += '(';
    print(f, out);
    out += ')';
  } else {
    print(f, out);
  }
}

inline void print(const Formula& f, std::string& out) {
  switch (f.kind()) {
    case Kind::True:
      out += "true";
      return;
    case Kind::False:
      out += "false";
      return;
    case Kind::Equal:
      out += f.first_var() + " = " + f.second_var();
      return;
    case Kind::Related:
      out += std::string(relation_name(f.relation())) + "(" + f.first_var() + ", " + f.second_var() + ")";
      return;
    case Kind::Label:
      out += "lab_" + f.name() + "(" + f.first_var() + ")";
      return;
    case Kind::Member:
      out += "in(" + f.first_var() + ", " + f.set_var() + ")";
      return;
    case Kind::Mod:
      out += "mod[" + std::to_string(f.residue()) + "," + std::to_string(f.modulus()) + "](" + f.set_var() + ")";
      return;
    case Kind::Not: {
      out += '!';
      Formula g = f.lhs();
      // `!x = y` would re-parse as !(x = y) anyway, but keep it explicit.
      if (g.kind() == Kind::Equal) {
        out += '(';
        print(g, out);
        out += ')';
      } else {
        print_operand(g, out);
      }
      return;
    }
    case Kind::And:
    case Kind::Or:
    case Kind::Implies: {
      const char* op = f.kind() == Kind::And ? " & " : f.kind() == Kind::Or ? " | " : " -> ";
      out += '(';
      print_operand(f.lhs(), out);
      out += op;
      print_operand(f.rhs(), out);
      out += ')';
      return;
    }
    case Kind::ExistsElem:
      out += "E " + f.bound_var() + ". ";
      break;
    case Kind::ForallElem:
      out += "A " + f.bound_var() + ". ";
      break;
    case Kind::ExistsSet:
      out += "ES " + f.bound_var() + ". ";
      break;
    case Kind::ForallSet:
      out += "AS " + f.bound_var() + ". ";
      break;
  }
  print(f.body(), out);
}

}  // namespace detail

/// Serializes in the concrete grammar; `parse(to_string(f))` rebuilds `f`.
inline std::string to_string(const Formula& f) {
  std::string out;
  detail::print(f, out);
  return out;
}

}  // namespace treekern
