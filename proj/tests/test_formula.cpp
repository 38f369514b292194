#include <gtest/gtest.h>

#include <random>

#include "support/generators.hpp"
#include "support/oracles.hpp"
#include "treekern/checker.hpp"
#include "treekern/parser.hpp"
#include "treekern/prenex.hpp"

using namespace treekern;

namespace {

const Signature tree_sig(Relation::Parent, {"a", "b"});

Formula sentence(const std::string& text) { return parse_sentence(text, tree_sig); }

}  // namespace

TEST(Signature, SortsAndRejectsDuplicates) {
  Signature s(Relation::Edge, {"b", "a"});
  EXPECT_EQ(s.labels(), (std::vector<std::string>{"a", "b"}));
  EXPECT_EQ(*s.index_of("b"), 1u);
  EXPECT_THROW(Signature(Relation::Edge, {"a", "a"}), InvalidInput);
  EXPECT_THROW(Signature(Relation::Edge, {"a-b"}), InvalidInput);
}

TEST(Parse, LabelAtomUnderExists) {
  Formula f = sentence("E x. lab_a(x)");
  ASSERT_EQ(f.kind(), Kind::ExistsElem);
  EXPECT_EQ(f.bound_var(), "x");
  EXPECT_EQ(f.body(), Formula::label("a", "x"));
}

TEST(Parse, ModAtom) {
  Formula f = sentence("ES X. mod[1,2](X)");
  ASSERT_EQ(f.kind(), Kind::ExistsSet);
  EXPECT_EQ(f.body(), Formula::mod(1, 2, "X"));
}

TEST(Parse, UnknownPredicateIsSyntaxError) {
  EXPECT_THROW(parse("AS X. ES Y. all_in(X,Y)", tree_sig), ParseError);
}

TEST(Parse, ErrorsCarryPosition) {
  try {
    parse("E x.\n  lab_a(x) & & true", tree_sig);
    FAIL() << "expected a parse error";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 2u);
    EXPECT_EQ(e.column(), 14u);
  }
}

TEST(Parse, RejectsBadInput) {
  EXPECT_THROW(parse("E x. lab_c(x)", tree_sig), ParseError);         // unknown label
  EXPECT_THROW(parse("E X. lab_a(X)", tree_sig), ParseError);         // sort mismatch
  EXPECT_THROW(parse("ES x. true", tree_sig), ParseError);            // sort mismatch in binder
  EXPECT_THROW(parse("E x. in(x, y)", tree_sig), ParseError);         // set variable expected
  EXPECT_THROW(parse("ES X. mod[2,2](X)", tree_sig), ParseError);     // a >= b
  EXPECT_THROW(parse("E x. E y. edge(x,y)", tree_sig), ParseError);   // wrong relation
  EXPECT_THROW(parse("E x. (lab_a(x)", tree_sig), ParseError);        // unbalanced
  EXPECT_THROW(parse("", tree_sig), ParseError);
  EXPECT_THROW(parse_sentence("lab_a(x)", tree_sig), InvalidInput);  // free variable
}

TEST(Parse, PrecedenceAndAssociativity) {
  Formula f = parse("true | false & false -> false -> true", tree_sig).formula;
  // ((true | (false & false)) -> false) -> true
  Formula expected = Formula::implies(
      Formula::implies(Formula::disj(Formula::truth(), Formula::conj(Formula::falsity(), Formula::falsity())),
                       Formula::falsity()),
      Formula::truth());
  EXPECT_EQ(f, expected);
  EXPECT_EQ(parse("!true & false", tree_sig).formula, Formula::conj(Formula::negate(Formula::truth()), Formula::falsity()));
}

TEST(Parse, FreeVariablesReported) {
  auto r = parse("E x. parent(x, y) & in(y, Z)", tree_sig);
  std::vector<Variable> expected{{"Z", Sort::Set}, {"y", Sort::Element}};
  EXPECT_EQ(r.free, expected);
}

TEST(Printer, RoundTripOnRandomSentences) {
  gen::Rng rng(11);
  for (const auto& prefix : gen::prefixes())
    for (std::size_t m = 0; m < gen::matrix_templates; ++m) {
      Formula f = gen::sentence(rng, prefix, m, Relation::Parent, 2, m % 2 ? 3 : 0);
      std::string text = to_string(f);
      EXPECT_EQ(parse(text, tree_sig).formula, f) << text;
    }
}

TEST(Printer, RoundTripNestedQuantifiersAndNegation) {
  for (const char* text : {"!(x = y)", "(E x. lab_a(x)) & (A y. !lab_b(y))", "!(ES X. AS Y. (in(x, X) -> in(x, Y)))",
                           "E x. E y. (parent(x, y) | x = y)", "AS X. (mod[0,3](X) | !mod[1,3](X))"}) {
    Formula f = parse(text, tree_sig).formula;
    EXPECT_EQ(parse(to_string(f), tree_sig).formula, f) << text;
  }
}

TEST(Analysis, LcmOfModuli) {
  EXPECT_EQ(lcm_moduli(sentence("ES X. ES Y. mod[1,2](X) & mod[0,3](Y)")), 6u);
  EXPECT_EQ(lcm_moduli(sentence("E x. lab_a(x)")), 1u);
  EXPECT_EQ(lcm_moduli(sentence("ES X. mod[1,4](X) & mod[3,6](X)")), 12u);
}

TEST(Analysis, QuantifierCountsAndLabels) {
  Formula f = sentence("E x. ES X. A y. (in(y, X) -> lab_b(y)) & lab_a(x)");
  auto c = count_quantifiers(f);
  EXPECT_EQ(c.elements, 2u);
  EXPECT_EQ(c.sets, 1u);
  EXPECT_EQ(label_symbols(f), (std::vector<std::string>{"a", "b"}));
  EXPECT_TRUE(contains_set_quantifier(f));
  EXPECT_FALSE(contains_mod(f));
}

TEST(Prenex, NegatedExists) {
  PrenexFormula p = to_prenex(sentence("!E x. lab_a(x)"));
  ASSERT_EQ(p.prefix.size(), 1u);
  EXPECT_EQ(p.prefix[0], (PrefixEntry{false, Sort::Element, "x"}));
  EXPECT_EQ(p.matrix, Formula::negate(Formula::label("a", "x")));
  EXPECT_EQ(p.q, 1u);
  EXPECT_EQ(p.s, 0u);
}

TEST(Prenex, RenamesApart) {
  PrenexFormula p = to_prenex(sentence("(E x. lab_a(x)) & (E x. lab_b(x))"));
  ASSERT_EQ(p.prefix.size(), 2u);
  EXPECT_EQ(p.prefix[0].var, "x");
  EXPECT_EQ(p.prefix[1].var, "x_1");
  EXPECT_EQ(p.matrix, Formula::conj(Formula::label("a", "x"), Formula::label("b", "x_1")));
  EXPECT_EQ(p.q, 2u);
}

TEST(Prenex, QuantifierFreeSentence) {
  PrenexFormula p = to_prenex(sentence("true"));
  EXPECT_TRUE(p.prefix.empty());
  EXPECT_EQ(p.q + p.s, 0u);
}

TEST(Prenex, RejectsFreeVariables) {
  EXPECT_THROW(to_prenex(parse("lab_a(x)", tree_sig).formula), InvalidInput);
}

TEST(Prenex, ImplicationsAndSetQuantifiers) {
  PrenexFormula p = to_prenex(sentence("(ES X. E x. in(x, X)) -> AS Y. A y. in(y, Y)"));
  EXPECT_EQ(p.q, 2u);
  EXPECT_EQ(p.s, 2u);
  EXPECT_FALSE(p.prefix[0].existential);  // antecedent flips
  EXPECT_EQ(p.prefix[0].sort, Sort::Set);
}

// Truth preservation, checked against the test-side naive evaluator on small trees.
TEST(Prenex, PreservesTruthOnSmallTrees) {
  gen::Rng rng(3);
  const char* texts[] = {
      "!(E x. lab_a(x)) | (A y. E z. parent(y, z) | lab_b(y))",
      "(E x. A y. !parent(y, x)) & !(ES X. A x. in(x, X))",
      "(AS X. E x. in(x, X)) -> (E x. lab_a(x))",
      "!(A x. (E y. parent(x, y)) -> (E y. parent(x, y) & lab_a(y)))",
      "(E x. lab_a(x)) & (E x. lab_b(x) & (E x. parent(x, x)))",
  };
  for (int trial = 0; trial < 30; ++trial) {
    LabelledTree t = gen::random_tree(rng, gen::uniform(rng, 1, 7), 3, 2);
    auto naive = oracle::NaiveModel::of_tree(t, tree_sig);
    for (const char* text : texts) {
      Formula f = sentence(text);
      Formula p = to_prenex(f).to_formula();
      EXPECT_EQ(naive.holds(f), naive.holds(p)) << text;
    }
  }
}

TEST(Prenex, CountsNeverDrop) {
  gen::Rng rng(5);
  for (const auto& prefix : gen::prefixes()) {
    Formula f = Formula::negate(gen::sentence(rng, prefix, 4, Relation::Parent, 1));
    auto before = count_quantifiers(f);
    PrenexFormula p = to_prenex(f);
    EXPECT_EQ(p.q + p.s, p.prefix.size());
    EXPECT_GE(p.q, before.elements);
    EXPECT_GE(p.s, before.sets);
    auto in_matrix = count_quantifiers(p.matrix);
    EXPECT_EQ(in_matrix.elements + in_matrix.sets, 0u);
  }
}
