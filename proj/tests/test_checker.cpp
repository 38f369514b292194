#include <gtest/gtest.h>

#include "support/generators.hpp"
#include "support/oracles.hpp"
#include "treekern/checker.hpp"
#include "treekern/parser.hpp"

using namespace treekern;

namespace {

const Signature tree_sig(Relation::Parent, {"a", "b"});
const Signature bare(Relation::Parent);

Formula sentence(const std::string& text, const Signature& sig = tree_sig) { return parse_sentence(text, sig); }

FiniteStructure tree_structure(const std::string& sexpr, const Signature& sig = tree_sig) {
  return FiniteStructure::from_tree(load_tree(sexpr, sig), sig);
}

}  // namespace

TEST(Eval, Examples) {
  EXPECT_TRUE(eval(tree_structure("(node [a])"), sentence("E x. lab_a(x)")));
  auto four = FiniteStructure::from_tree(gen::star(3), bare);
  auto five = FiniteStructure::from_tree(gen::star(4), bare);
  Formula even = sentence("ES X. mod[0,2](X) & A y. in(y, X)", bare);
  EXPECT_TRUE(eval(four, even));
  EXPECT_FALSE(eval(five, even));
  EXPECT_FALSE(eval(four, sentence("false", bare)));
  EXPECT_FALSE(eval(tree_structure("(node [a])"), sentence("false")));
}

TEST(Eval, FreeVariables) {
  auto s = tree_structure("(node [] (node [a]) (node [b]))");
  auto f = parse("parent(x, y) & in(y, X)", tree_sig).formula;
  Assignment rho;
  rho.elements = {{"x", 0}, {"y", 2}};
  rho.sets = {{"X", {2}}};
  EXPECT_TRUE(eval(s, f, rho));
  rho.sets["X"] = {1};
  EXPECT_FALSE(eval(s, f, rho));
  rho.elements.erase("y");
  EXPECT_THROW(eval(s, f, rho), InvalidInput);
  rho.elements["y"] = 7;
  EXPECT_THROW(eval(s, f, rho), InvalidInput);
}

TEST(Eval, RelationMismatch) {
  auto s = tree_structure("(node [])");
  EXPECT_THROW(eval(s, parse_sentence("E x. edge(x, x)", Signature(Relation::Edge))), InvalidInput);
}

TEST(ModelCheck, Examples) {
  auto star3 = FiniteStructure::from_tree(gen::star(3), bare);
  EXPECT_TRUE(model_check(star3, sentence("ES X. A y. in(y, X)", bare)));

  auto chain = tree_structure("(node [] (node [] (node [])))");
  EXPECT_TRUE(model_check(chain, sentence("E x. E y. E z. parent(x, y) & parent(y, z)")));
  EXPECT_FALSE(model_check(FiniteStructure::from_tree(gen::star(5), bare),
                           sentence("E x. E y. E z. parent(x, y) & parent(y, z)", bare)));

  auto big = FiniteStructure::from_tree(gen::star(24), bare);
  EXPECT_THROW(model_check(big, sentence("ES X. A y. in(y, X)", bare)), BudgetExceeded);
  // element-only sentences are not subject to the set budget
  EXPECT_TRUE(model_check(big, sentence("A x. E y. parent(x, y) | parent(y, x)", bare)));
  EXPECT_THROW(model_check(big, parse("in(x, X)", bare).formula), InvalidInput);
}

TEST(ModelCheck, VisitBudget) {
  auto s = FiniteStructure::from_tree(gen::star(12), bare);
  Formula f = sentence("AS X. AS Y. E x. in(x, X) -> in(x, Y) | true", bare);
  EvalStats stats;
  EXPECT_TRUE(model_check(s, f, {}, {}, &stats));
  EXPECT_GT(stats.visits, 0u);
  Budget tight;
  tight.max_visits = stats.visits / 2;
  EXPECT_THROW(model_check(s, f, tight), BudgetExceeded);
  tight.max_visits = stats.visits;
  EXPECT_TRUE(model_check(s, f, tight));
}

TEST(ModelCheck, SymmetryCutsWork) {
  auto s = FiniteStructure::from_tree(gen::star(18), bare);
  Formula f = sentence("ES X. ES Y. A x. (in(x, X) | in(x, Y)) & !(in(x, X) & in(x, Y))", bare);
  EvalStats with, without;
  EXPECT_TRUE(model_check(s, f, {}, {}, &with));
  Budget b;
  b.max_visits = 1'000'000'000;
  EvalOptions plain{false, false};
  EXPECT_TRUE(model_check(s, f, b, plain, &without));
  EXPECT_LT(with.visits * 100, without.visits);
}

TEST(ModelCheck, UnknownLabelIsFalse) {
  Signature wide(Relation::Parent, {"a", "b", "c"});
  auto s = FiniteStructure::from_tree(load_tree("(node [a])", tree_sig), tree_sig);
  EXPECT_FALSE(eval(s, parse_sentence("E x. lab_c(x)", wide)));
  EXPECT_TRUE(eval(s, parse_sentence("A x. !lab_c(x)", wide)));
}

// Cross-check against the naive evaluator over every option combination.
TEST(ModelCheck, AgreesWithNaiveEvaluatorOnTrees) {
  gen::Rng rng(21);
  const auto prefixes = gen::prefixes();
  std::size_t trues = 0, total = 0;
  for (int trial = 0; trial < 300; ++trial) {
    const std::size_t t = gen::uniform(rng, 0, 2);
    const Signature sig(Relation::Parent, gen::label_names(t));
    LabelledTree tree = gen::random_tree(rng, gen::uniform(rng, 1, 9), 3, t);
    auto naive = oracle::NaiveModel::of_tree(tree, sig);
    auto s = FiniteStructure::from_tree(tree, sig);
    for (int k = 0; k < 6; ++k) {
      const auto& prefix = prefixes[gen::uniform(rng, 0, prefixes.size() - 1)];
      Formula f = gen::sentence(rng, prefix, gen::uniform(rng, 0, gen::matrix_templates - 1), Relation::Parent, t,
                                gen::coin(rng) ? gen::uniform(rng, 2, 3) : 0);
      const bool expected = naive.holds(f);
      trues += expected;
      ++total;
      for (bool sym : {false, true})
        for (bool local : {false, true})
          ASSERT_EQ(model_check(s, f, {}, EvalOptions{sym, local}), expected)
              << to_string(f) << "\non " << to_sexpr(tree, sig) << "\nsymmetry=" << sym << " local=" << local;
    }
  }
  EXPECT_GT(trues, total / 5);
  EXPECT_LT(trues, total * 4 / 5);
}

TEST(ModelCheck, AgreesWithNaiveEvaluatorOnGraphs) {
  gen::Rng rng(22);
  const auto prefixes = gen::prefixes();
  for (int trial = 0; trial < 200; ++trial) {
    treekern::Graph g = gen::random_graph(rng, gen::uniform(rng, 1, 8), 0.4);
    for (std::size_t v = 0; v < g.order(); ++v)
      if (gen::coin(rng, 0.3)) g.add_label(v, "a");
    const Signature sig(Relation::Edge, {"a"});
    auto s = FiniteStructure::from_graph(g, sig);
    auto naive = oracle::NaiveModel::of_graph(g);
    for (int k = 0; k < 6; ++k) {
      const auto& prefix = prefixes[gen::uniform(rng, 0, prefixes.size() - 1)];
      Formula f = gen::sentence(rng, prefix, gen::uniform(rng, 0, gen::matrix_templates - 1), Relation::Edge, 1,
                                gen::coin(rng) ? 2 : 0);
      ASSERT_EQ(model_check(s, f), naive.holds(f)) << to_string(f) << "\non\n" << to_graph_text(g);
    }
  }
}

// Deeper sentences than the generator produces: three set variables, nested alternation.
TEST(ModelCheck, NestedSentencesAgreeWithNaive) {
  const char* texts[] = {
      "ES X. ES Y. AS Z. (A x. in(x, Z) -> in(x, X) | in(x, Y)) -> (E x. in(x, Z) | true)",
      "AS X. (E x. in(x, X)) -> E x. in(x, X) & A y. in(y, X) & parent(x, y) -> lab_a(y)",
      "ES X. mod[1,3](X) & A x. in(x, X) -> (E y. parent(y, x) & !in(y, X))",
      "E x. AS X. in(x, X) -> (E y. in(y, X) & (x = y | parent(x, y)))",
      "A x. A y. parent(x, y) -> !(lab_a(x) & lab_a(y)) | ES X. in(x, X) & !in(y, X) & mod[0,2](X)",
  };
  gen::Rng rng(23);
  for (int trial = 0; trial < 60; ++trial) {
    LabelledTree tree = gen::random_tree(rng, gen::uniform(rng, 1, 8), 3, 2);
    auto naive = oracle::NaiveModel::of_tree(tree, tree_sig);
    auto s = FiniteStructure::from_tree(tree, tree_sig);
    for (const char* text : texts) {
      Formula f = sentence(text);
      ASSERT_EQ(model_check(s, f), naive.holds(f)) << text << "\non " << to_sexpr(tree, tree_sig);
    }
  }
}

TEST(ModelCheck, NegationFlipsVerdict) {
  gen::Rng rng(24);
  const auto prefixes = gen::prefixes();
  for (int trial = 0; trial < 200; ++trial) {
    LabelledTree tree = gen::random_tree(rng, gen::uniform(rng, 1, 15), 3, 1);
    const Signature sig(Relation::Parent, {"a"});
    auto s = FiniteStructure::from_tree(tree, sig);
    Formula f = gen::sentence(rng, prefixes[gen::uniform(rng, 0, prefixes.size() - 1)],
                              gen::uniform(rng, 0, gen::matrix_templates - 1), Relation::Parent, 1);
    EXPECT_NE(model_check(s, f), model_check(s, Formula::negate(f)));
  }
}

TEST(CheckWithKernel, Examples) {
  auto r = check_with_kernel(gen::star(40), bare, sentence("ES X. E x. in(x, X)", bare));
  EXPECT_TRUE(r.verdict);
  EXPECT_EQ(r.kernel_size, 18u);
  EXPECT_EQ(r.original_size, 41u);
  EXPECT_EQ(r.q, 1u);
  EXPECT_EQ(r.s, 1u);

  EXPECT_TRUE(check_with_kernel(LabelledTree(), bare, sentence("true", bare)).verdict);

  Formula f = sentence("A x. E y. parent(y, x) | parent(x, y)", bare);
  EXPECT_TRUE(check_with_kernel(gen::star(40), bare, f).verdict);
  EXPECT_TRUE(model_check(FiniteStructure::from_tree(gen::star(40), bare), f));
}

TEST(CheckWithKernel, ModAtomsNeedCmso) {
  Formula odd = sentence("ES X. mod[1,2](X) & A y. in(y, X)", bare);
  EXPECT_THROW(check_with_kernel(gen::star(40), bare, odd), InvalidInput);
  KernelCheckOptions cmso;
  cmso.mode = LogicMode::Cmso;
  cmso.budget.max_set_domain = 64;
  // q = 1, s = 1, t = 0, M = 2: threshold R_0(3, 1, 4) = 51
  for (std::size_t leaves = 60; leaves <= 63; ++leaves) {
    auto r = check_with_kernel(gen::star(leaves), bare, odd, cmso);
    EXPECT_EQ(r.verdict, (leaves + 1) % 2 == 1) << leaves;
    EXPECT_EQ(r.m, 2u);
    EXPECT_LE(r.kernel_size, 52u);
    EXPECT_EQ(r.kernel_size % 2, (leaves + 1) % 2);
  }
}

TEST(CheckWithKernel, ExplicitThresholds) {
  KernelCheckOptions opts;
  opts.explicit_thresholds = std::vector<std::uint64_t>{2};
  auto r = check_with_kernel(gen::star(40), bare, sentence("E x. E y. E z. parent(x, y) & parent(x, z) & !(y = z)", bare),
                             opts);
  EXPECT_TRUE(r.verdict);
  EXPECT_EQ(r.kernel_size, 3u);
  EXPECT_EQ(r.deleted_limbs, (std::vector<std::size_t>{0, 38}));
}

TEST(CheckWithKernel, MatchesDirectCheckOnSmallTrees) {
  gen::Rng rng(25);
  const auto prefixes = gen::prefixes();
  for (int trial = 0; trial < 150; ++trial) {
    const std::size_t t = gen::uniform(rng, 0, 1);
    const Signature sig(Relation::Parent, gen::label_names(t));
    LabelledTree tree = gen::coin(rng) ? gen::replicated_tree(rng, gen::uniform(rng, 3, 8), 2, 1, 2, t)
                                        : gen::random_tree(rng, gen::uniform(rng, 1, 12), 2, t);
    auto s = FiniteStructure::from_tree(tree, sig);
    Formula f = gen::sentence(rng, prefixes[gen::uniform(rng, 0, prefixes.size() - 1)],
                              gen::uniform(rng, 0, gen::matrix_templates - 1), Relation::Parent, t);
    auto paper = check_with_kernel(tree, sig, f);
    EXPECT_EQ(paper.verdict, model_check(s, f)) << to_string(f) << "\non " << to_sexpr(tree, sig);
  }
}

// Past the 40-node range the CMSO thresholds (51 and up for q = s = 1, t = 0) start firing.
TEST(CheckWithKernel, CmsoAgreesOnLargeTwinClasses) {
  gen::Rng rng(26);
  std::vector<std::vector<gen::Quant>> prefixes;
  for (const auto& p : gen::prefixes())
    if (p.size() == 2 && (p[0].sort == Sort::Set || p[1].sort == Sort::Set)) prefixes.push_back(p);
  KernelCheckOptions opts;
  opts.mode = LogicMode::Cmso;
  opts.budget.max_set_domain = 400;
  std::size_t reduced = 0;
  for (int trial = 0; trial < 120; ++trial) {
    LabelledTree tree;
    // many twin leaves below a hub at level 1 (threshold f(0)), a few leaves beside it
    const NodeId hub = tree.add_child(0, 0);
    for (std::size_t i = gen::uniform(rng, 70, 140); i > 0; --i) tree.add_child(hub, 0);
    for (std::size_t i = gen::uniform(rng, 0, 3); i > 0; --i) tree.add_child(0, 0);
    Formula f;
    do {
      f = gen::sentence(rng, prefixes[gen::uniform(rng, 0, prefixes.size() - 1)],
                        gen::uniform(rng, 0, gen::matrix_templates - 1), Relation::Parent, 0, gen::uniform(rng, 2, 3));
    } while (!contains_mod(f));
    auto r = check_with_kernel(tree, bare, f, opts);
    reduced += r.kernel_size < r.original_size;
    ASSERT_EQ(r.verdict, model_check(FiniteStructure::from_tree(tree, bare), f, opts.budget))
        << to_string(f) << " with " << tree.size() << " nodes";
  }
  EXPECT_GT(reduced, 60u);
}
