#pragma once

#include <cstdint>
#include <fstream>
#include <functional>
#include <iostream>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "treekern/checker.hpp"
#include "treekern/error.hpp"
#include "treekern/graph.hpp"
#include "treekern/interpret.hpp"
#include "treekern/parser.hpp"
#include "treekern/reduce.hpp"
#include "treekern/threshold.hpp"
#include "treekern/tree.hpp"

namespace treekern::cli {

enum ExitCode : int { kTrue = 0, kFalse = 1, kError = 2 };

namespace detail {

using nlohmann::json;

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InvalidInput("cannot open '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

// Re-raises module errors with the offending file in front.
template <class Fn>
auto with_context(const std::string& where, Fn&& fn) -> decltype(fn()) {
  try {
    return fn();
  } catch (const ParseError& e) {
    throw InvalidInput(where + ":" + e.what());
  } catch (const InvalidInput& e) {
    throw InvalidInput(where + ": " + e.what());
  }
}

inline std::vector<std::uint64_t> read_thresholds(const std::string& path) {
  return with_context(path, [&] {
    std::istringstream in(read_file(path));
    std::vector<std::uint64_t> values;
    std::size_t lineno = 0;
    for (std::string line; std::getline(in, line);) {
      ++lineno;
      auto toks = treekern::detail::split_ws(line);
      for (const auto& tok : toks) {
        if (tok[0] == '#') break;
        values.push_back(treekern::detail::to_count(tok, lineno, "threshold"));
      }
    }
    if (values.empty()) throw InvalidInput("no thresholds given");
    return values;
  });
}

inline Formula sentence_of(const std::string& text, Relation relation) {
  ParseResult r = with_context("formula", [&] { return parse_unchecked(text, relation); });
  if (!r.free.empty()) throw InvalidInput("formula: free variable '" + r.free.front().name + "'");
  return r.formula;
}

inline std::vector<std::string> split_labels(const std::string& list) {
  std::vector<std::string> out;
  std::stringstream in(list);
  for (std::string item; std::getline(in, item, ',');)
    if (!item.empty()) out.push_back(item);
  return out;
}

struct Loaded {
  LabelledTree tree;
  Signature sig{Relation::Parent};
  Formula sentence;
};

// Signature: --labels if given, else labels of the tree and of the formula.
inline Loaded load_tree_and_sentence(const std::string& path, const std::string& formula,
                                     const std::optional<std::string>& labels) {
  Formula phi = sentence_of(formula, Relation::Parent);
  RawTree raw = with_context(path, [&] { return parse_raw_tree(read_file(path)); });
  std::vector<std::string> names;
  if (labels) {
    names = split_labels(*labels);
  } else {
    std::set<std::string> all;
    for (const auto& l : raw_label_names(raw)) all.insert(l);
    for (const auto& l : label_symbols(phi)) all.insert(l);
    names.assign(all.begin(), all.end());
  }
  Signature sig = with_context("--labels", [&] { return Signature(Relation::Parent, names); });
  with_context("formula", [&] {
    check_labels(phi, sig);
    return 0;
  });
  LabelledTree tree = with_context(path, [&] { return build_tree(raw, sig); });
  return {std::move(tree), std::move(sig), std::move(phi)};
}

inline std::string levels_text(const std::vector<std::size_t>& deleted) {
  std::string s;
  for (std::size_t l = 0; l < deleted.size(); ++l) {
    if (l) s += ' ';
    s += std::to_string(l) + ":" + std::to_string(deleted[l]);
  }
  return s.empty() ? "-" : s;
}

struct Common {
  std::string mode = "mso";
  std::size_t budget_n0 = Budget{}.max_set_domain;
  std::uint64_t budget_visits = Budget{}.max_visits;
  std::optional<std::string> thresholds_file;
  std::string format = "text";
  std::optional<std::string> labels;

  KernelCheckOptions kernel_options() const {
    KernelCheckOptions o;
    o.mode = mode == "cmso" ? LogicMode::Cmso : LogicMode::Mso;
    o.budget.max_set_domain = budget_n0;
    o.budget.max_visits = budget_visits;
    if (thresholds_file) o.explicit_thresholds = read_thresholds(*thresholds_file);
    return o;
  }
  bool jsonl() const { return format == "jsonl"; }
};

inline void add_common(CLI::App* sub, Common& c, bool with_labels) {
  sub->add_option("--mode", c.mode, "Logic: mso or cmso")->check(CLI::IsMember({"mso", "cmso"}));
  sub->add_option("--budget-n0", c.budget_n0, "Largest structure on which set quantifiers are expanded")
      ->check(CLI::PositiveNumber);
  sub->add_option("--budget-visits", c.budget_visits, "Evaluator node-visit budget")->check(CLI::PositiveNumber);
  sub->add_option("--thresholds-file", c.thresholds_file, "Explicit thresholds f(0), f(1), ...");
  sub->add_option("--format", c.format, "Output format: text or jsonl")->check(CLI::IsMember({"text", "jsonl"}));
  if (with_labels) sub->add_option("--labels", c.labels, "Comma-separated label alphabet (default: inferred)");
}

inline json kernel_json(const KernelCheckResult& r) {
  return json{{"original_size", r.original_size},
              {"kernel_size", r.kernel_size},
              {"deleted_limbs", r.deleted_limbs},
              {"q", r.q},
              {"s", r.s},
              {"t", r.t},
              {"m", r.m}};
}

inline void kernel_text(std::ostream& out, const KernelCheckResult& r) {
  out << "original size: " << r.original_size << '\n'
      << "kernel size: " << r.kernel_size << '\n'
      << "deleted limbs per level: " << levels_text(r.deleted_limbs) << '\n'
      << "q = " << r.q << ", s = " << r.s << ", t = " << r.t << ", M = " << r.m << '\n';
}

inline int report_verdict(std::ostream& out, const Common& c, const char* command, bool verdict, json extra,
                          const std::function<void()>& text_details) {
  if (c.jsonl()) {
    json j{{"command", command}, {"verdict", verdict}};
    j.update(extra);
    out << j.dump() << '\n';
  } else {
    out << (verdict ? "TRUE" : "FALSE") << '\n';
    text_details();
  }
  return verdict ? kTrue : kFalse;
}

}  // namespace detail

/// Runs one command; returns the process exit code (0 TRUE/success, 1 FALSE, 2 error).
inline int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  using detail::json;
  CLI::App app{"Kernelization-based MSO/CMSO model checking on bounded-height trees"};
  app.name("treekern");
  app.require_subcommand(1);
  int code = kError;

  // check-tree
  detail::Common ct;
  std::string ct_tree, ct_formula;
  auto* check_tree = app.add_subcommand("check-tree", "Decide a sentence on a labelled tree via its kernel");
  check_tree->add_option("tree", ct_tree, "Tree file (S-expression)")->required();
  check_tree->add_option("formula", ct_formula, "Sentence")->required();
  detail::add_common(check_tree, ct, true);
  check_tree->callback([&] {
    auto in = detail::load_tree_and_sentence(ct_tree, ct_formula, ct.labels);
    auto r = check_with_kernel(in.tree, in.sig, in.sentence, ct.kernel_options());
    code = detail::report_verdict(out, ct, "check-tree", r.verdict, detail::kernel_json(r),
                                  [&] { detail::kernel_text(out, r); });
  });

  // kernelize
  detail::Common kz;
  std::string kz_tree, kz_formula;
  std::optional<std::string> kz_output;
  auto* kernelize = app.add_subcommand("kernelize", "Write the reduced tree for a sentence");
  kernelize->add_option("tree", kz_tree, "Tree file (S-expression)")->required();
  kernelize->add_option("formula", kz_formula, "Sentence fixing q, s and M")->required();
  kernelize->add_option("-o,--output", kz_output, "Kernel file (default: stdout)");
  detail::add_common(kernelize, kz, true);
  kernelize->callback([&] {
    auto in = detail::load_tree_and_sentence(kz_tree, kz_formula, kz.labels);
    auto opts = kz.kernel_options();
    if (opts.mode == LogicMode::Mso && contains_mod(in.sentence)) throw InvalidInput("mod atoms need --mode cmso");
    PrenexFormula pf = to_prenex(in.sentence);
    const std::uint64_t m = opts.mode == LogicMode::Cmso ? lcm_moduli(in.sentence) : 1;
    const std::uint64_t k = in.sig.size() + 3 * pf.q + pf.s;
    ThresholdFn f = opts.explicit_thresholds
                        ? ThresholdFn::explicit_values(*opts.explicit_thresholds, m)
                    : opts.mode == LogicMode::Cmso ? ThresholdFn::paper_cmso(m, pf.q, pf.s, k)
                                                   : ThresholdFn::paper(pf.q, pf.s, k);
    ReduceResult r = reduce(in.tree, f);
    std::string text = to_sexpr(r.kernel, in.sig);
    if (kz_output) {
      std::ofstream file(*kz_output, std::ios::binary);
      if (!file) throw InvalidInput("cannot write '" + *kz_output + "'");
      file << text;
      if (kz.jsonl()) {
        out << json{{"command", "kernelize"},
                    {"original_size", r.original_size},
                    {"kernel_size", r.kernel.size()},
                    {"deleted_limbs", r.deleted_limbs}}
                   .dump()
            << '\n';
      } else {
        out << "original size: " << r.original_size << '\n'
            << "kernel size: " << r.kernel.size() << '\n'
            << "deleted limbs per level: " << detail::levels_text(r.deleted_limbs) << '\n';
      }
    } else {
      out << text;
    }
    code = kTrue;
  });

  // thresholds
  std::uint64_t th_q = 0, th_s = 0, th_k = 0, th_m = 0;
  std::size_t th_levels = 2;
  std::string th_cap = "1000000000000000000";
  std::string th_format = "text";
  auto* thresholds = app.add_subcommand("thresholds", "Print the N_i / R_i table");
  thresholds->add_option("--q", th_q, "Element quantifiers")->required();
  thresholds->add_option("--s", th_s, "Set quantifiers")->required();
  thresholds->add_option("--k", th_k, "Exponent k")->required();
  thresholds->add_option("--levels", th_levels, "Last level i");
  thresholds->add_option("--cap", th_cap, "Saturation cap");
  thresholds->add_option("--m", th_m, "Modulus lcm M; prints R_i(M+q, s, k)");
  thresholds->add_option("--format", th_format)->check(CLI::IsMember({"text", "jsonl"}));
  thresholds->callback([&] {
    BigNat cap;
    try {
      cap = BigNat(th_cap);
    } catch (const std::exception&) {
      throw InvalidInput("--cap: not a number: '" + th_cap + "'");
    }
    auto rows = threshold_table(th_levels, th_q + th_m, th_s, th_k, cap);
    if (th_format == "jsonl") {
      for (const auto& r : rows)
        out << json{{"i", r.level},
                    {"N", r.n.value.str()},
                    {"R", r.r.value.str()},
                    {"saturated", r.n.saturated || r.r.saturated}}
                   .dump()
            << '\n';
    } else {
      out << threshold_tsv(rows);
    }
    code = kTrue;
  });

  // bound
  std::size_t bd_h = 1;
  std::uint64_t bd_t = 0, bd_q = 0, bd_s = 0, bd_m = 0, bd_bits = default_bit_limit;
  auto* bound = app.add_subcommand("bound", "Print the kernel size bound");
  bound->add_option("--height", bd_h, "Tree height (>= 1)")->required();
  bound->add_option("--t", bd_t, "Number of labels");
  bound->add_option("--q", bd_q, "Element quantifiers");
  bound->add_option("--s", bd_s, "Set quantifiers");
  bound->add_option("--m", bd_m, "Modulus lcm (0 for plain MSO)");
  bound->add_option("--max-bits", bd_bits, "Refuse values with more bits than this");
  bound->callback([&] {
    out << kernel_size_bound(bd_h, bd_t, bd_q, bd_s, bd_m, bd_bits) << '\n';
    code = kTrue;
  });

  // check-graph
  detail::Common cg;
  std::string cg_graph, cg_formula;
  std::optional<std::string> cg_forest;
  auto* check_graph = app.add_subcommand("check-graph", "Decide a graph sentence through the tree-depth interpretation");
  check_graph->add_option("graph", cg_graph, "Graph file")->required();
  check_graph->add_option("formula", cg_formula, "Sentence over edge(x,y)")->required();
  check_graph->add_option("--forest", cg_forest, "Elimination forest file (default: exact tree-depth)");
  detail::add_common(check_graph, cg, false);
  check_graph->callback([&] {
    Graph g = detail::with_context(cg_graph, [&] { return parse_graph(detail::read_file(cg_graph)); });
    Formula phi = detail::sentence_of(cg_formula, Relation::Edge);
    std::optional<EliminationForest> forest;
    if (cg_forest)
      forest = detail::with_context(*cg_forest, [&] { return parse_forest(detail::read_file(*cg_forest), g.order()); });
    GraphCheckOptions opts;
    opts.kernel = cg.kernel_options();
    auto r = detail::with_context(cg_forest.value_or(cg_graph), [&] { return check_graph_td(g, phi, forest, opts); });
    json extra = detail::kernel_json(r.kernel);
    extra["tree_depth"] = r.tree_depth;
    code = detail::report_verdict(out, cg, "check-graph", r.verdict, extra, [&] {
      out << "forest height + 1: " << r.tree_depth << '\n';
      detail::kernel_text(out, r.kernel);
    });
  });

  // tree-depth
  std::string td_graph;
  std::size_t td_limit = 20;
  bool td_witness = false;
  auto* tree_depth = app.add_subcommand("tree-depth", "Exact tree-depth of a small graph");
  tree_depth->add_option("graph", td_graph, "Graph file")->required();
  tree_depth->add_option("--max-vertices", td_limit, "Refuse larger graphs")->check(CLI::Range(1, 31));
  tree_depth->add_flag("--witness", td_witness, "Also print an optimal elimination forest");
  tree_depth->callback([&] {
    Graph g = detail::with_context(td_graph, [&] { return parse_graph(detail::read_file(td_graph)); });
    auto r = tree_depth_exact(g, td_limit);
    out << "td = " << r.depth << '\n';
    if (td_witness) out << to_forest_text(r.forest);
    code = kTrue;
  });

  // shrub-check
  detail::Common sc;
  std::string sc_model, sc_formula, sc_rule = "adjacency";
  auto* shrub = app.add_subcommand("shrub-check", "Decide a graph sentence on the graph of a tree-model");
  shrub->add_option("model", sc_model, "Tree-model file")->required();
  shrub->add_option("formula", sc_formula, "Sentence over edge(x,y)")->required();
  shrub->add_option("--label-rule", sc_rule, "P-label source: adjacency or signature")
      ->check(CLI::IsMember({"adjacency", "signature"}));
  detail::add_common(shrub, sc, false);
  shrub->callback([&] {
    TreeModel tm = detail::with_context(sc_model, [&] { return parse_tree_model(detail::read_file(sc_model)); });
    Formula phi = detail::sentence_of(sc_formula, Relation::Edge);
    GraphCheckOptions opts;
    opts.kernel = sc.kernel_options();
    opts.shrub_rule = sc_rule == "signature" ? ShrubLabelRule::Signature : ShrubLabelRule::Adjacency;
    auto r = check_graph_shrub(tm, phi, opts);
    json extra = detail::kernel_json(r.kernel);
    extra["vertices"] = tm.leaves().size();
    code = detail::report_verdict(out, sc, "shrub-check", r.verdict, extra, [&] {
      out << "vertices: " << tm.leaves().size() << '\n';
      detail::kernel_text(out, r.kernel);
    });
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int rc = app.exit(e, out, err);
    return rc == 0 ? 0 : kError;
  } catch (const BudgetExceeded& e) {
    err << "budget exceeded: " << e.what() << '\n';
    return kError;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return kError;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kError;
  }
  return code;
}

inline int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  std::vector<const char*> argv{"treekern"};
  for (const auto& a : args) argv.push_back(a.c_str());
  return run(static_cast<int>(argv.size()), argv.data(), out, err);
}

}  // namespace treekern::cli
