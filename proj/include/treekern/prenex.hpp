#pragma once

#include <cstddef>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "treekern/error.hpp"
#include "treekern/formula.hpp"

namespace treekern {

struct PrefixEntry {
  bool existential = true;
  Sort sort = Sort::Element;
  std::string var;

  friend bool operator==(const PrefixEntry&, const PrefixEntry&) = default;
};

/// Quantifier prefix over a quantifier-free matrix.
struct PrenexFormula {
  std::vector<PrefixEntry> prefix;
  Formula matrix;
  std::size_t q = 0;  // element quantifiers in the prefix
  std::size_t s = 0;  // set quantifiers in the prefix

  Formula to_formula() const {
    Formula f = matrix;
    for (auto it = prefix.rbegin(); it != prefix.rend(); ++it)
      f = Formula::quantify(quantifier_kind(it->existential, it->sort), it->var, f);
    return f;
  }
};

/// Negation normal form: implications expanded as !a | b, negations pushed onto atoms.
inline Formula to_nnf(const Formula& f, bool negated = false) {
  switch (f.kind()) {
    case Kind::Not:
      return to_nnf(f.lhs(), !negated);
    case Kind::And:
    case Kind::Or: {
      bool is_and = (f.kind() == Kind::And) != negated;
      Formula a = to_nnf(f.lhs(), negated);
      Formula b = to_nnf(f.rhs(), negated);
      return is_and ? Formula::conj(a, b) : Formula::disj(a, b);
    }
    case Kind::Implies: {
      Formula a = to_nnf(f.lhs(), !negated);
      Formula b = to_nnf(f.rhs(), negated);
      return negated ? Formula::conj(a, b) : Formula::disj(a, b);
    }
    case Kind::ExistsElem:
    case Kind::ForallElem:
    case Kind::ExistsSet:
    case Kind::ForallSet: {
      bool existential = is_existential(f.kind()) != negated;
      return Formula::quantify(quantifier_kind(existential, quantifier_sort(f.kind())), f.bound_var(),
                               to_nnf(f.body(), negated));
    }
    default:
      return negated ? Formula::negate(f) : f;
  }
}

namespace detail {

class ApartRenamer {
 public:
  explicit ApartRenamer(const Formula& f) : taken_(variable_names(f)) {}

  Formula run(const Formula& f) { return rename(f); }

 private:
  struct Binding {
    std::string from;
    std::string to;
  };

  const std::string& lookup(const std::string& name) const {
    for (auto it = scope_.rbegin(); it != scope_.rend(); ++it)
      if (it->from == name) return it->to;
    return name;
  }

  std::string fresh(const std::string& base) {
    for (std::size_t i = 1;; ++i) {
      std::string cand = base + "_" + std::to_string(i);
      if (!taken_.count(cand) && !claimed_.count(cand)) return cand;
    }
  }

  Formula rename(const Formula& f) {
    switch (f.kind()) {
      case Kind::True:
      case Kind::False:
        return f;
      case Kind::Equal:
        return Formula::equal(lookup(f.first_var()), lookup(f.second_var()));
      case Kind::Related:
        return Formula::related(f.relation(), lookup(f.first_var()), lookup(f.second_var()));
      case Kind::Label:
        return Formula::label(f.name(), lookup(f.first_var()));
      case Kind::Member:
        return Formula::member(lookup(f.first_var()), lookup(f.set_var()));
      case Kind::Mod:
        return Formula::mod(f.residue(), f.modulus(), lookup(f.set_var()));
      case Kind::Not:
        return Formula::negate(rename(f.lhs()));
      case Kind::And:
      case Kind::Or:
      case Kind::Implies: {
        Formula a = rename(f.lhs());
        Formula b = rename(f.rhs());
        return Formula::binary(f.kind(), a, b);
      }
      default: {
        const std::string& orig = f.bound_var();
        std::string name = claimed_.count(orig) ? fresh(orig) : orig;
        claimed_.insert(name);
        scope_.push_back({orig, name});
        Formula body = rename(f.body());
        scope_.pop_back();
        return Formula::quantify(f.kind(), name, body);
      }
    }
  }

  std::set<std::string> taken_;
  std::set<std::string> claimed_;
  std::vector<Binding> scope_;
};

inline Formula pull_quantifiers(const Formula& f, std::vector<PrefixEntry>& prefix) {
  if (is_quantifier(f.kind())) {
    prefix.push_back({is_existential(f.kind()), quantifier_sort(f.kind()), f.bound_var()});
    return pull_quantifiers(f.body(), prefix);
  }
  if (f.kind() == Kind::And || f.kind() == Kind::Or) {
    Formula a = pull_quantifiers(f.lhs(), prefix);
    Formula b = pull_quantifiers(f.rhs(), prefix);
    return Formula::binary(f.kind(), a, b);
  }
  return f;
}

}  // namespace detail

/// Renames bound variables so that no two quantifiers bind the same name.
/// The first binder of a name keeps it; later ones get `name_1`, `name_2`, ...
inline Formula rename_apart(const Formula& f) { return detail::ApartRenamer(f).run(f); }

/// Prenex normal form of a sentence (over non-empty domains).
inline PrenexFormula to_prenex(const Formula& sentence) {
  auto free = free_variables(sentence);
  if (!free.empty()) throw InvalidInput("to_prenex: free variable '" + free.front().name + "'");
  Formula apart = rename_apart(to_nnf(sentence));
  PrenexFormula out;
  out.matrix = detail::pull_quantifiers(apart, out.prefix);
  for (const auto& e : out.prefix) (e.sort == Sort::Element ? out.q : out.s) += 1;
  return out;
}

}  // namespace treekern
