#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <map>
#include <numeric>
#include <optional>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include "treekern/error.hpp"
#include "treekern/formula.hpp"
#include "treekern/prenex.hpp"
#include "treekern/reduce.hpp"
#include "treekern/structure.hpp"
#include "treekern/threshold.hpp"
#include "treekern/tree.hpp"

namespace treekern {

/// Values for the free variables of a formula.
struct Assignment {
  std::map<std::string, Element> elements;
  std::map<std::string, std::vector<Element>> sets;
};

struct Budget {
  /// Largest structure on which set quantifiers are expanded.
  std::size_t max_set_domain = 20;
  /// Upper bound on evaluator node visits.
  std::uint64_t max_visits = 100'000'000;
};

struct EvalOptions {
  /// Iterate one element per twin class (refined by the current assignment).
  bool symmetry = true;
  /// For set quantifiers whose scope has no element quantifier, enumerate only
  /// the trace on assigned elements and the cardinality residue.
  bool local_sets = true;
};

struct EvalStats {
  std::uint64_t visits = 0;
};

namespace detail {

class Evaluator {
 public:
  Evaluator(const FiniteStructure& s, const Budget& budget, const EvalOptions& opts)
      : s_(s), budget_(budget), opts_(opts) {}

  bool run(const Formula& f, const Assignment& rho) {
    bind_free(f, rho);
    int root = compile(f);
    return eval(root);
  }

  std::uint64_t visits() const noexcept { return visits_; }

 private:
  struct Op {
    Kind kind = Kind::True;
    int a = -1;  // element slot
    int b = -1;  // element slot (binary atoms) or set slot
    int bit = -1;
    std::uint64_t residue = 0;
    std::uint64_t modulus = 1;
    int lhs = -1;
    int rhs = -1;
    int slot = -1;  // bound slot of a quantifier
    bool used = true;
    bool elem_free_body = false;
    std::uint64_t mod_lcm = 1;
  };

  struct ScopeEntry {
    std::string name;
    Sort sort;
    int slot;
  };

  // --- compilation -------------------------------------------------------

  int new_elem_slot() {
    elem_val_.push_back(0);
    return static_cast<int>(elem_val_.size() - 1);
  }
  int new_set_slot() {
    set_mem_.emplace_back(s_.size(), 0);
    set_size_.push_back(0);
    return static_cast<int>(set_mem_.size() - 1);
  }

  void bind_free(const Formula& f, const Assignment& rho) {
    for (const auto& v : free_variables(f)) {
      if (v.sort == Sort::Element) {
        auto it = rho.elements.find(v.name);
        if (it == rho.elements.end()) throw InvalidInput("unbound variable '" + v.name + "'");
        if (it->second >= s_.size()) throw InvalidInput("element for '" + v.name + "' out of range");
        int slot = new_elem_slot();
        elem_val_[slot] = it->second;
        live_elem_.push_back(slot);
        scope_.push_back({v.name, Sort::Element, slot});
      } else {
        auto it = rho.sets.find(v.name);
        if (it == rho.sets.end()) throw InvalidInput("unbound variable '" + v.name + "'");
        int slot = new_set_slot();
        for (Element e : it->second) {
          if (e >= s_.size()) throw InvalidInput("element in '" + v.name + "' out of range");
          if (!set_mem_[slot][e]) ++set_size_[slot];
          set_mem_[slot][e] = 1;
        }
        live_set_.push_back(slot);
        scope_.push_back({v.name, Sort::Set, slot});
      }
    }
  }

  int lookup(const std::string& name, Sort sort) const {
    for (auto it = scope_.rbegin(); it != scope_.rend(); ++it) {
      if (it->name != name) continue;
      if (it->sort != sort) throw InvalidInput("variable '" + name + "' used with the wrong sort");
      return it->slot;
    }
    throw InvalidInput("unbound variable '" + name + "'");
  }

  int compile(const Formula& f) {
    const int idx = static_cast<int>(ops_.size());
    ops_.emplace_back();
    Op op;
    op.kind = f.kind();
    switch (f.kind()) {
      case Kind::True:
      case Kind::False:
        break;
      case Kind::Equal:
        op.a = lookup(f.first_var(), Sort::Element);
        op.b = lookup(f.second_var(), Sort::Element);
        break;
      case Kind::Related:
        if (f.relation() != s_.relation())
          throw InvalidInput("relation '" + std::string(relation_name(f.relation())) + "' does not match the structure");
        op.a = lookup(f.first_var(), Sort::Element);
        op.b = lookup(f.second_var(), Sort::Element);
        break;
      case Kind::Label: {
        op.a = lookup(f.first_var(), Sort::Element);
        auto bit = s_.signature().index_of(f.name());
        op.bit = bit ? static_cast<int>(*bit) : -1;
        break;
      }
      case Kind::Member:
        op.a = lookup(f.first_var(), Sort::Element);
        op.b = lookup(f.set_var(), Sort::Set);
        break;
      case Kind::Mod:
        op.b = lookup(f.set_var(), Sort::Set);
        op.residue = f.residue();
        op.modulus = f.modulus();
        break;
      case Kind::Not:
        op.lhs = compile(f.lhs());
        break;
      case Kind::And:
      case Kind::Or:
      case Kind::Implies:
        op.lhs = compile(f.lhs());
        op.rhs = compile(f.rhs());
        break;
      default: {
        const Sort sort = quantifier_sort(f.kind());
        op.slot = sort == Sort::Element ? new_elem_slot() : new_set_slot();
        scope_.push_back({f.bound_var(), sort, op.slot});
        op.lhs = compile(f.body());
        scope_.pop_back();
        analyse_body(op, sort, idx + 1, static_cast<int>(ops_.size()));
        break;
      }
    }
    ops_[idx] = op;
    return idx;
  }

  // Body ops occupy a contiguous range since compilation appends in preorder.
  void analyse_body(Op& q, Sort sort, int begin, int end) const {
    q.used = false;
    q.elem_free_body = true;
    q.mod_lcm = 1;
    for (int i = begin; i < end; ++i) {
      const Op& o = ops_[i];
      if (o.kind == Kind::ExistsElem || o.kind == Kind::ForallElem) q.elem_free_body = false;
      if (sort == Sort::Element) {
        bool elem_atom = o.kind == Kind::Equal || o.kind == Kind::Related || o.kind == Kind::Label ||
                         o.kind == Kind::Member;
        bool binary_atom = o.kind == Kind::Equal || o.kind == Kind::Related;
        if (elem_atom && (o.a == q.slot || (binary_atom && o.b == q.slot))) q.used = true;
      } else {
        if ((o.kind == Kind::Member || o.kind == Kind::Mod) && o.b == q.slot) q.used = true;
        if (o.kind == Kind::Mod && o.b == q.slot) q.mod_lcm = std::lcm(q.mod_lcm, o.modulus);
      }
    }
  }

  // --- evaluation --------------------------------------------------------

  void tick() {
    if (++visits_ > budget_.max_visits)
      throw BudgetExceeded("model check exceeded the visit budget of " + std::to_string(budget_.max_visits));
  }

  bool eval(int i) {
    tick();
    const Op& op = ops_[i];
    switch (op.kind) {
      case Kind::True:
        return true;
      case Kind::False:
        return false;
      case Kind::Equal:
        return elem_val_[op.a] == elem_val_[op.b];
      case Kind::Related:
        return s_.related(elem_val_[op.a], elem_val_[op.b]);
      case Kind::Label:
        return op.bit >= 0 && s_.has_label(elem_val_[op.a], static_cast<std::size_t>(op.bit));
      case Kind::Member:
        return set_mem_[op.b][elem_val_[op.a]] != 0;
      case Kind::Mod:
        return set_size_[op.b] % op.modulus == op.residue;
      case Kind::Not:
        return !eval(op.lhs);
      case Kind::And:
        return eval(op.lhs) && eval(op.rhs);
      case Kind::Or:
        return eval(op.lhs) || eval(op.rhs);
      case Kind::Implies:
        return !eval(op.lhs) || eval(op.rhs);
      case Kind::ExistsElem:
      case Kind::ForallElem:
        return element_quantifier(op, op.kind == Kind::ExistsElem);
      case Kind::ExistsSet:
      case Kind::ForallSet:
        return set_quantifier(op, op.kind == Kind::ExistsSet);
    }
    return false;
  }

  std::vector<char> assigned_mask() const {
    std::vector<char> assigned(s_.size(), 0);
    for (int slot : live_elem_) assigned[elem_val_[slot]] = 1;
    return assigned;
  }

  /// Orbit cells of the transpositions that fix the current assignment.
  std::vector<std::vector<Element>> cells() const {
    const std::size_t n = s_.size();
    std::vector<std::vector<Element>> out;
    if (!opts_.symmetry || live_set_.size() > 64 || s_.twin_class_count() == n) {
      out.reserve(n);
      for (Element e = 0; e < n; ++e) out.push_back({e});
      return out;
    }
    auto assigned = assigned_mask();
    std::vector<std::tuple<std::size_t, std::uint64_t, Element>> keys;
    keys.reserve(n);
    for (Element e = 0; e < n; ++e) {
      if (assigned[e]) {
        out.push_back({e});
        continue;
      }
      std::uint64_t bits = 0;
      for (std::size_t j = 0; j < live_set_.size(); ++j)
        if (set_mem_[live_set_[j]][e]) bits |= std::uint64_t{1} << j;
      keys.emplace_back(s_.twin_class()[e], bits, e);
    }
    std::sort(keys.begin(), keys.end());
    for (std::size_t i = 0; i < keys.size(); ++i) {
      if (i == 0 || std::get<0>(keys[i]) != std::get<0>(keys[i - 1]) ||
          std::get<1>(keys[i]) != std::get<1>(keys[i - 1]))
        out.emplace_back();
      out.back().push_back(std::get<2>(keys[i]));
    }
    return out;
  }

  bool element_quantifier(const Op& op, bool existential) {
    if (s_.size() == 0) return !existential;
    if (!op.used) return eval(op.lhs);
    auto cs = cells();
    live_elem_.push_back(op.slot);
    for (const auto& cell : cs) {
      elem_val_[op.slot] = cell.front();
      bool r;
      try {
        r = eval(op.lhs);
      } catch (...) {
        live_elem_.pop_back();
        throw;
      }
      if (r == existential) {
        live_elem_.pop_back();
        return existential;
      }
    }
    live_elem_.pop_back();
    return !existential;
  }

  void set_member(int slot, Element e, bool in) {
    char& m = set_mem_[slot][e];
    if (static_cast<bool>(m) == in) return;
    m = in ? 1 : 0;
    if (in) {
      ++set_size_[slot];
    } else {
      --set_size_[slot];
    }
  }

  void clear_set(int slot) {
    std::fill(set_mem_[slot].begin(), set_mem_[slot].end(), 0);
    set_size_[slot] = 0;
  }

  bool set_quantifier(const Op& op, bool existential) {
    clear_set(op.slot);
    if (!op.used) return eval(op.lhs);
    live_set_.push_back(op.slot);
    struct Pop {
      std::vector<int>& v;
      ~Pop() { v.pop_back(); }
    } pop{live_set_};
    if (opts_.local_sets && op.elem_free_body) {
      auto assigned = assigned_mask();
      std::vector<Element> inside;
      std::vector<Element> outside;
      for (Element e = 0; e < s_.size(); ++e) (assigned[e] ? inside : outside).push_back(e);
      if (inside.size() <= 16) return local_set_quantifier(op, existential, inside, outside);
    }
    return gray_set_quantifier(op, existential);
  }

  // Only the trace on assigned elements and |X| mod L can matter here.
  bool local_set_quantifier(const Op& op, bool existential, const std::vector<Element>& inside,
                            const std::vector<Element>& outside) {
    const std::uint64_t max_extra = std::min<std::uint64_t>(outside.size(), op.mod_lcm - 1);
    for (std::uint64_t mask = 0; mask < (std::uint64_t{1} << inside.size()); ++mask) {
      for (std::uint64_t extra = 0; extra <= max_extra; ++extra) {
        clear_set(op.slot);
        for (std::size_t j = 0; j < inside.size(); ++j)
          if ((mask >> j) & 1U) set_member(op.slot, inside[j], true);
        for (std::uint64_t j = 0; j < extra; ++j) set_member(op.slot, outside[j], true);
        if (eval(op.lhs) == existential) return existential;
      }
    }
    return !existential;
  }

  // Reflected mixed-radix Gray code over per-cell counts: each step adds or
  // removes one element.
  bool gray_set_quantifier(const Op& op, bool existential) {
    const auto cs = cells();
    const std::size_t m = cs.size();
    std::vector<std::size_t> count(m, 0);
    std::vector<int> dir(m, 1);
    while (true) {
      if (eval(op.lhs) == existential) return existential;
      std::size_t j = 0;
      for (; j < m; ++j) {
        long next = static_cast<long>(count[j]) + dir[j];
        if (next >= 0 && next <= static_cast<long>(cs[j].size())) break;
        dir[j] = -dir[j];
      }
      if (j == m) return !existential;
      if (dir[j] > 0) {
        set_member(op.slot, cs[j][count[j]], true);
        ++count[j];
      } else {
        --count[j];
        set_member(op.slot, cs[j][count[j]], false);
      }
    }
  }

  const FiniteStructure& s_;
  Budget budget_;
  EvalOptions opts_;
  std::vector<Op> ops_;
  std::vector<ScopeEntry> scope_;
  std::vector<Element> elem_val_;
  std::vector<std::vector<char>> set_mem_;
  std::vector<std::size_t> set_size_;
  std::vector<int> live_elem_;
  std::vector<int> live_set_;
  std::uint64_t visits_ = 0;
};

}  // namespace detail

/// Truth of `f` in `s` under `rho`. Throws BudgetExceeded past the visit budget.
inline bool eval(const FiniteStructure& s, const Formula& f, const Assignment& rho = {}, const Budget& budget = {},
                 const EvalOptions& opts = {}, EvalStats* stats = nullptr) {
  detail::Evaluator ev(s, budget, opts);
  bool r = ev.run(f, rho);
  if (stats) stats->visits = ev.visits();
  return r;
}

inline bool model_check(const FiniteStructure& s, const Formula& sentence, const Budget& budget = {},
                        const EvalOptions& opts = {}, EvalStats* stats = nullptr) {
  auto free = free_variables(sentence);
  if (!free.empty()) throw InvalidInput("model_check needs a sentence; '" + free.front().name + "' is free");
  if (s.size() > budget.max_set_domain && contains_set_quantifier(sentence))
    throw BudgetExceeded("structure has " + std::to_string(s.size()) +
                         " elements, above the set-quantifier budget of " + std::to_string(budget.max_set_domain) +
                         "; kernelize first or raise the budget");
  return eval(s, sentence, {}, budget, opts, stats);
}

enum class LogicMode { Mso, Cmso };

struct KernelCheckOptions {
  LogicMode mode = LogicMode::Mso;
  Budget budget;
  EvalOptions eval;
  /// Replaces the computed thresholds (level i -> f(i)); CMSO keeps M-tuple deletion.
  std::optional<std::vector<std::uint64_t>> explicit_thresholds;
  ReduceOptions reduce;
};

struct KernelCheckResult {
  bool verdict = false;
  std::size_t original_size = 0;
  std::size_t kernel_size = 0;
  std::vector<std::size_t> deleted_limbs;
  std::size_t q = 0;
  std::size_t s = 0;
  std::size_t t = 0;
  std::uint64_t m = 1;
  LabelledTree kernel;
};

/// Kernelize `tree` for the quantifier counts of `sentence`, then model-check the kernel.
inline KernelCheckResult check_with_kernel(const LabelledTree& tree, const Signature& sig, const Formula& sentence,
                                           const KernelCheckOptions& opts = {}) {
  if (sig.relation() != Relation::Parent) throw InvalidInput("check_with_kernel needs the tree signature");
  const bool has_mod = contains_mod(sentence);
  if (opts.mode == LogicMode::Mso && has_mod) throw InvalidInput("mod atoms need cmso mode");
  PrenexFormula pf = to_prenex(sentence);

  KernelCheckResult res;
  res.q = pf.q;
  res.s = pf.s;
  res.t = sig.size();
  res.m = opts.mode == LogicMode::Cmso ? lcm_moduli(sentence) : 1;

  const std::uint64_t k = res.t + 3 * res.q + res.s;
  ThresholdFn f = opts.explicit_thresholds
                      ? ThresholdFn::explicit_values(*opts.explicit_thresholds,
                                                     opts.mode == LogicMode::Cmso ? res.m : 1)
                  : opts.mode == LogicMode::Cmso ? ThresholdFn::paper_cmso(res.m, res.q, res.s, k)
                                                 : ThresholdFn::paper(res.q, res.s, k);
  ReduceResult red = reduce(tree, f, opts.reduce);
  res.original_size = red.original_size;
  res.kernel_size = red.kernel.size();
  res.deleted_limbs = red.deleted_limbs;
  res.verdict = model_check(FiniteStructure::from_tree(red.kernel, sig), sentence, opts.budget, opts.eval);
  res.kernel = std::move(red.kernel);
  return res;
}

}  // namespace treekern
