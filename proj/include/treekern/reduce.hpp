#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <random>
#include <vector>

#include "treekern/threshold.hpp"
#include "treekern/tree.hpp"

namespace treekern {

struct ReduceOptions {
  /// When set, nodes of equal depth are processed in a shuffled order and
  /// victims are drawn at random instead of taking the largest ids.
  std::optional<std::uint64_t> shuffle_seed;
};

struct ReduceResult {
  LabelledTree kernel;
  std::size_t original_size = 0;
  /// deleted_limbs[l] = limbs removed below nodes at level l (index 0 stays 0).
  std::vector<std::size_t> deleted_limbs;
};

/// f-reduction, bottom-up in one pass.
///
/// For a node at level l (levels of the input tree), each l-isomorphism class
/// of its limbs is cut down while it has more than f(l-1) members, removing
/// `f.tuple_size()` limbs per step. With tuple size 1 this keeps exactly
/// min(p, f(l-1)) members; with tuple size M the survivors keep p mod M.
inline ReduceResult reduce(const LabelledTree& input, const ThresholdFn& f, const ReduceOptions& opts = {}) {
  LabelledTree work = input.compacted();
  const std::size_t h = work.height();
  const BigNat cap = BigNat(work.size()) + 1;
  const std::uint64_t tuple = f.tuple_size();

  std::vector<BigNat> theta(h + 1, cap);
  for (std::size_t l = 1; l <= h; ++l) theta[l] = f.at(l - 1, cap).value;

  ReduceResult res;
  res.original_size = work.size();
  res.deleted_limbs.assign(h + 1, 0);

  // Deepest first; within a depth, id order or a shuffle.
  std::vector<std::vector<NodeId>> by_depth(h + 1);
  for (NodeId v = 0; v < work.size(); ++v) by_depth[work.depth(v)].push_back(v);
  std::mt19937_64 rng(opts.shuffle_seed.value_or(0));
  if (opts.shuffle_seed)
    for (auto& layer : by_depth) std::shuffle(layer.begin(), layer.end(), rng);

  std::vector<CanonicalCode> code(work.size());
  std::vector<const CanonicalCode*> kid_codes;
  for (std::size_t d = h + 1; d-- > 0;) {
    for (NodeId v : by_depth[d]) {
      const std::size_t level = h - d;
      if (!work.children(v).empty()) {
        std::map<CanonicalCode, std::vector<NodeId>> classes;
        for (NodeId c : work.children(v)) classes[code[c]].push_back(c);
        for (auto& [cls_code, members] : classes) {
          const BigNat p = members.size();
          if (p <= theta[level]) continue;
          // Largest count <= theta reachable by removing whole tuples.
          BigNat keep = p;
          if (tuple == 1) {
            keep = theta[level];
          } else {
            BigNat excess = p - theta[level];
            BigNat steps = (excess + tuple - 1) / tuple;
            // a tuple larger than what is left cannot be removed
            if (steps * tuple > p) steps = p / tuple;
            keep = p - steps * tuple;
          }
          const std::size_t remove = static_cast<std::size_t>(p - keep);
          if (opts.shuffle_seed) {
            std::shuffle(members.begin(), members.end(), rng);
          } else {
            std::sort(members.begin(), members.end(), std::greater<>());
          }
          for (std::size_t i = 0; i < remove; ++i) work.erase_limb(members[i]);
          res.deleted_limbs[level] += remove;
        }
      }
      kid_codes.clear();
      for (NodeId c : work.children(v)) kid_codes.push_back(&code[c]);
      code[v] = detail::encode_node(work.labels(v), kid_codes);
      // children codes are no longer needed
      for (NodeId c : work.children(v)) code[c] = CanonicalCode();
    }
  }
  res.kernel = work.compacted();
  return res;
}

/// Parameters of a CMSO sentence relevant to kernelization.
struct CmsoParams {
  std::uint64_t m = 1;  // lcm of the moduli
  std::uint64_t q = 0;
  std::uint64_t s = 0;
  std::uint64_t t = 0;
};

/// M-tuple reduction with thresholds R_i(M+q, s, t+3q+s).
inline ReduceResult reduce_cmso(const LabelledTree& input, const CmsoParams& p, const ReduceOptions& opts = {}) {
  return reduce(input, ThresholdFn::paper_cmso(p.m, p.q, p.s, p.t + 3 * p.q + p.s), opts);
}

}  // namespace treekern
