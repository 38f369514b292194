#pragma once

#include <cctype>
#include <charconv>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "treekern/error.hpp"
#include "treekern/formula.hpp"

namespace treekern {

struct ParseResult {
  Formula formula;
  std::vector<Variable> free;
};

namespace detail {

// Recursive-descent parser for the formula grammar:
//
//   expr    := quant | binary
//   quant   := ("E" | "A") elemvar "." expr | ("ES" | "AS") setvar "." expr
//   binary  := unary (("&" | "|" | "->") unary)*     precedence ! > & > | > ->
//   unary   := "!" unary | quant | atom
//   atom    := "parent(" ev "," ev ")" | "edge(" ev "," ev ")" | "lab_" NAME "(" ev ")"
//            | ev "=" ev | "in(" ev "," sv ")" | "mod[" nat "," nat "](" sv ")"
//            | "true" | "false" | "(" expr ")"
//
// A quantifier in operand position extends as far right as possible.
class FormulaParser {
 public:
  FormulaParser(std::string text, Relation relation, const Signature* sig)
      : text_(std::move(text)), relation_(relation), sig_(sig) {}

  Formula parse() {
    Formula f = expr();
    skip_ws();
    if (pos_ != text_.size()) fail("unexpected trailing input");
    return f;
  }

 private:
  enum class Tok { End, Ident, Number, Punct };

  [[noreturn]] void fail(const std::string& msg) const { throw parse_error_at(text_, pos_, msg); }
  [[noreturn]] void fail_at(std::size_t at, const std::string& msg) const { throw parse_error_at(text_, at, msg); }

  void skip_ws() {
    while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
  }

  static bool ident_char(char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_'; }

  std::string_view peek_ident() {
    skip_ws();
    std::size_t end = pos_;
    if (end < text_.size() && std::isalpha(static_cast<unsigned char>(text_[end]))) {
      while (end < text_.size() && ident_char(text_[end])) ++end;
    }
    return std::string_view(text_).substr(pos_, end - pos_);
  }

  std::string take_ident() {
    auto id = peek_ident();
    if (id.empty()) fail("expected identifier");
    pos_ += id.size();
    return std::string(id);
  }

  bool peek_punct(std::string_view p) {
    skip_ws();
    return std::string_view(text_).substr(pos_, p.size()) == p;
  }

  bool accept(std::string_view p) {
    if (!peek_punct(p)) return false;
    pos_ += p.size();
    return true;
  }

  void expect(std::string_view p) {
    if (!accept(p)) fail("expected '" + std::string(p) + "'");
  }

  std::uint64_t number() {
    skip_ws();
    std::size_t start = pos_;
    while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) ++pos_;
    if (start == pos_) fail("expected natural number");
    std::uint64_t v = 0;
    auto res = std::from_chars(text_.data() + start, text_.data() + pos_, v);
    if (res.ec != std::errc()) fail_at(start, "number out of range");
    return v;
  }

  static bool is_keyword(std::string_view id) {
    return id == "E" || id == "A" || id == "ES" || id == "AS" || id == "true" || id == "false" ||
           id == "parent" || id == "edge" || id == "in" || id == "mod" || id.substr(0, 4) == "lab_";
  }

  std::string element_var() {
    skip_ws();
    std::size_t at = pos_;
    std::string id = take_ident();
    if (is_keyword(id)) fail_at(at, "reserved word '" + id + "' used as a variable");
    if (!std::islower(static_cast<unsigned char>(id[0])))
      fail_at(at, "sort mismatch: '" + id + "' is a set variable, element variable required");
    return id;
  }

  std::string set_var() {
    skip_ws();
    std::size_t at = pos_;
    std::string id = take_ident();
    if (is_keyword(id)) fail_at(at, "reserved word '" + id + "' used as a variable");
    if (!std::isupper(static_cast<unsigned char>(id[0])))
      fail_at(at, "sort mismatch: '" + id + "' is an element variable, set variable required");
    return id;
  }

  bool at_quantifier() {
    auto id = peek_ident();
    return id == "E" || id == "A" || id == "ES" || id == "AS";
  }

  Formula expr() {
    if (at_quantifier()) return quant();
    return implication();
  }

  Formula quant() {
    std::string q = take_ident();
    bool existential = q[0] == 'E';
    Sort sort = q.size() == 2 ? Sort::Set : Sort::Element;
    std::string var = sort == Sort::Set ? set_var() : element_var();
    expect(".");
    Formula body = expr();
    return Formula::quantify(quantifier_kind(existential, sort), var, body);
  }

  Formula implication() {
    Formula f = disjunction();
    while (accept("->")) f = Formula::implies(f, disjunction());
    return f;
  }

  Formula disjunction() {
    Formula f = conjunction();
    while (accept("|")) f = Formula::disj(f, conjunction());
    return f;
  }

  Formula conjunction() {
    Formula f = unary();
    while (accept("&")) f = Formula::conj(f, unary());
    return f;
  }

  Formula unary() {
    if (accept("!")) return Formula::negate(unary());
    if (at_quantifier()) return quant();
    return atom();
  }

  Formula atom() {
    skip_ws();
    if (accept("(")) {
      Formula f = expr();
      expect(")");
      return f;
    }
    std::size_t at = pos_;
    std::string id(peek_ident());
    if (id.empty()) fail("expected formula");
    if (id == "true") {
      pos_ += id.size();
      return Formula::truth();
    }
    if (id == "false") {
      pos_ += id.size();
      return Formula::falsity();
    }
    if (id == "parent" || id == "edge") {
      pos_ += id.size();
      Relation r = id == "parent" ? Relation::Parent : Relation::Edge;
      if (r != relation_) fail_at(at, "relation '" + id + "' is not in the signature");
      expect("(");
      std::string x = element_var();
      expect(",");
      std::string y = element_var();
      expect(")");
      return Formula::related(r, x, y);
    }
    if (id.size() > 4 && id.substr(0, 4) == "lab_") {
      pos_ += id.size();
      std::string label = id.substr(4);
      if (sig_ && !sig_->contains(label)) fail_at(at, "unknown label symbol '" + label + "'");
      expect("(");
      std::string x = element_var();
      expect(")");
      return Formula::label(label, x);
    }
    if (id == "in") {
      pos_ += id.size();
      expect("(");
      std::string x = element_var();
      expect(",");
      std::string set = set_var();
      expect(")");
      return Formula::member(x, set);
    }
    if (id == "mod") {
      pos_ += id.size();
      expect("[");
      std::uint64_t a = number();
      expect(",");
      std::uint64_t b = number();
      expect("]");
      if (b < 1 || a >= b) fail_at(at, "mod[a,b] requires 0 <= a < b");
      expect("(");
      std::string set = set_var();
      expect(")");
      return Formula::mod(a, b, set);
    }
    if (is_keyword(id) || !std::islower(static_cast<unsigned char>(id[0]))) {
      if (std::isupper(static_cast<unsigned char>(id[0])) && !is_keyword(id))
        fail_at(at, "sort mismatch: set variable '" + id + "' cannot start an atom");
      fail_at(at, "unexpected '" + id + "'");
    }
    // Equality or an unknown predicate name.
    pos_ += id.size();
    if (peek_punct("(") || peek_punct("[")) fail_at(at, "unknown predicate '" + id + "'");
    expect("=");
    std::string y = element_var();
    return Formula::equal(id, y);
  }

  std::string text_;
  Relation relation_;
  const Signature* sig_;
  std::size_t pos_ = 0;
};

}  // namespace detail

/// Parses a formula, checking label atoms against `sig`.
inline ParseResult parse(const std::string& text, const Signature& sig) {
  detail::FormulaParser p(text, sig.relation(), &sig);
  Formula f = p.parse();
  return ParseResult{f, free_variables(f)};
}

/// Parses without label validation (labels are collected later, e.g. for signature inference).
inline ParseResult parse_unchecked(const std::string& text, Relation relation) {
  detail::FormulaParser p(text, relation, nullptr);
  Formula f = p.parse();
  return ParseResult{f, free_variables(f)};
}

/// Parses a sentence; free variables are an error.
inline Formula parse_sentence(const std::string& text, const Signature& sig) {
  ParseResult r = parse(text, sig);
  if (!r.free.empty()) throw InvalidInput("formula has free variable '" + r.free.front().name + "'");
  return r.formula;
}

/// Rejects label atoms whose symbol is not in `sig`.
inline void check_labels(const Formula& f, const Signature& sig) {
  for (const auto& l : label_symbols(f))
    if (!sig.contains(l)) throw InvalidInput("unknown label symbol '" + l + "'");
}

}  // namespace treekern
