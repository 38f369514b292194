#pragma once

#include <cstddef>
#include <cstdint>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <boost/multiprecision/cpp_int.hpp>

#include "treekern/error.hpp"

namespace treekern {

using BigNat = boost::multiprecision::cpp_int;

/// min(exact, cap) together with whether the exact value exceeded the cap.
struct Capped {
  BigNat value;
  bool saturated = false;

  friend bool operator==(const Capped&, const Capped&) = default;
};

namespace capped {

inline Capped of(const BigNat& exact, const BigNat& cap) {
  if (exact > cap) return {cap, true};
  return {exact, false};
}

inline bool is_zero(const Capped& a) { return !a.saturated && a.value == 0; }

inline Capped add(const Capped& a, const Capped& b, const BigNat& cap) {
  if (a.saturated || b.saturated) return {cap, true};
  return of(a.value + b.value, cap);
}

inline Capped mul(const Capped& a, const Capped& b, const BigNat& cap) {
  if (is_zero(a) || is_zero(b)) return {0, false};
  if (a.saturated || b.saturated) return {cap, true};
  return of(a.value * b.value, cap);
}

/// base^exp, never materialising anything larger than cap * base.
inline Capped pow(const Capped& base, const Capped& exp, const BigNat& cap) {
  if (is_zero(exp)) return {1, false};
  if (!base.saturated && base.value <= 1) return {base.value, false};
  if (base.saturated || exp.saturated) return {cap, true};
  BigNat result = 1;
  for (BigNat e = 0; e < exp.value; ++e) {
    result *= base.value;
    if (result > cap) return {cap, true};
  }
  return {result, false};
}

}  // namespace capped

/// One row of the threshold recurrence: N_i and R_i = q * N_i^s.
struct ThresholdRow {
  std::size_t level = 0;
  Capped n;
  Capped r;
};

/// Rows 0..levels of
///   N_0 = 2^k + 1,  R_i = q * N_i^s,  N_{i+1} = 2^k * (R_i + 1)^{N_i}
/// with every value capped at `cap`.
inline std::vector<ThresholdRow> threshold_table(std::size_t levels, std::uint64_t q, std::uint64_t s,
                                                 std::uint64_t k, const BigNat& cap) {
  if (cap < 2) throw InvalidInput("threshold cap must be at least 2");
  const Capped cq = capped::of(q, cap);
  const Capped cs = capped::of(s, cap);
  const Capped two_k = capped::pow({2, false}, capped::of(k, cap), cap);
  const Capped one{1, false};
  std::vector<ThresholdRow> rows;
  Capped n = capped::add(two_k, one, cap);
  for (std::size_t i = 0; i <= levels; ++i) {
    Capped r = capped::mul(cq, capped::pow(n, cs, cap), cap);
    rows.push_back({i, n, r});
    if (i == levels) break;
    n = capped::mul(two_k, capped::pow(capped::add(r, one, cap), n, cap), cap);
  }
  return rows;
}

inline Capped threshold_N(std::size_t i, std::uint64_t q, std::uint64_t s, std::uint64_t k, const BigNat& cap) {
  return threshold_table(i, q, s, k, cap).back().n;
}

inline Capped threshold_R(std::size_t i, std::uint64_t q, std::uint64_t s, std::uint64_t k, const BigNat& cap) {
  if (cap < 1) throw InvalidInput("threshold cap must be at least 1");
  // The recurrence needs cap >= 2 internally; re-cap the result afterwards.
  BigNat inner = cap < 2 ? BigNat(2) : cap;
  Capped r = threshold_table(i, q, s, k, inner).back().r;
  if (r.saturated || r.value > cap) return {cap, true};
  return r;
}

/// Level-indexed threshold function f used by f-reduction.
class ThresholdFn {
 public:
  enum class Mode { Paper, PaperCmso, Explicit };

  /// f(i) = R_i(q, s, k).
  static ThresholdFn paper(std::uint64_t q, std::uint64_t s, std::uint64_t k) {
    ThresholdFn f;
    f.mode_ = Mode::Paper;
    f.q_ = q;
    f.s_ = s;
    f.k_ = k;
    return f;
  }

  /// f(i) = R_i(M + q, s, k), applied with M-tuple deletion.
  static ThresholdFn paper_cmso(std::uint64_t m, std::uint64_t q, std::uint64_t s, std::uint64_t k) {
    if (m < 1) throw InvalidInput("modulus lcm must be at least 1");
    ThresholdFn f = paper(q, s, k);
    f.mode_ = Mode::PaperCmso;
    f.m_ = m;
    return f;
  }

  /// f(i) = values[i]; levels past the list are unbounded.
  static ThresholdFn explicit_values(std::vector<std::uint64_t> values, std::uint64_t tuple = 1) {
    for (auto v : values)
      if (v < 1) throw InvalidInput("explicit thresholds must be >= 1");
    if (tuple < 1) throw InvalidInput("tuple size must be at least 1");
    ThresholdFn f;
    f.mode_ = Mode::Explicit;
    f.values_ = std::move(values);
    f.m_ = tuple;
    return f;
  }

  Mode mode() const noexcept { return mode_; }
  std::uint64_t q() const noexcept { return q_; }
  std::uint64_t s() const noexcept { return s_; }
  std::uint64_t k() const noexcept { return k_; }
  /// Number of limbs removed per deletion step (M for CMSO, else 1).
  std::uint64_t tuple_size() const noexcept { return mode_ == Mode::Paper ? 1 : m_; }
  const std::vector<std::uint64_t>& values() const noexcept { return values_; }

  Capped at(std::size_t i, const BigNat& cap) const {
    switch (mode_) {
      case Mode::Paper:
        return threshold_R(i, q_, s_, k_, cap);
      case Mode::PaperCmso:
        return threshold_R(i, m_ + q_, s_, k_, cap);
      case Mode::Explicit:
        if (i >= values_.size()) return {cap, true};
        return capped::of(values_[i], cap);
    }
    return {cap, true};
  }

 private:
  ThresholdFn() = default;

  Mode mode_ = Mode::Paper;
  std::uint64_t q_ = 0;
  std::uint64_t s_ = 0;
  std::uint64_t k_ = 0;
  std::uint64_t m_ = 1;
  std::vector<std::uint64_t> values_;
};

/// Default bit budget for tower values (2^20 bits is ~128 KiB).
inline constexpr std::uint64_t default_bit_limit = std::uint64_t{1} << 20;

/// tow_0(x) = x, tow_{i+1}(x) = 2^{tow_i(x)}.
inline BigNat tower(std::size_t i, BigNat x, std::uint64_t bit_limit = default_bit_limit) {
  for (std::size_t j = 0; j < i; ++j) {
    if (x > bit_limit)
      throw BudgetExceeded("tower: intermediate exponent exceeds the bit budget of " +
                           std::to_string(bit_limit));
    BigNat next = 1;
    next <<= static_cast<unsigned>(x);
    x = std::move(next);
  }
  return x;
}

/// Kernel size bound tow_h[(2^{h+5} - 12) * (t+M+q+s) * (M+q+s)]; M = 0 for plain MSO.
inline BigNat kernel_size_bound(std::size_t h, std::uint64_t t, std::uint64_t q, std::uint64_t s,
                                std::uint64_t m = 0, std::uint64_t bit_limit = default_bit_limit) {
  if (h < 1) throw InvalidInput("kernel_size_bound requires h >= 1");
  if (h > 60) throw BudgetExceeded("kernel_size_bound: height too large");
  BigNat factor = (BigNat(1) << static_cast<unsigned>(h + 5)) - 12;
  BigNat x = factor * (BigNat(t) + m + q + s) * (BigNat(m) + q + s);
  return tower(h, x, bit_limit);
}

/// Tab-separated dump: columns i, N_i, R_i, saturated (1 if either value hit the cap).
inline std::string threshold_tsv(const std::vector<ThresholdRow>& rows) {
  std::ostringstream out;
  out << "i\tN_i\tR_i\tsaturated\n";
  for (const auto& row : rows) {
    out << row.level << '\t' << row.n.value << '\t' << row.r.value << '\t'
        << ((row.n.saturated || row.r.saturated) ? 1 : 0) << '\n';
  }
  return out.str();
}

}  // namespace treekern
