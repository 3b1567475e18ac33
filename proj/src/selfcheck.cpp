// Copyright 2026 The cotloop Authors
// SPDX-License-Identifier: Apache-2.0

#include "cotloop/selfcheck.hpp"

#include <chrono>
#include <functional>

#include "cotloop/corpus.hpp"
#include "cotloop/cot_compiler.hpp"
#include "cotloop/errors.hpp"
#include "cotloop/fxp.hpp"
#include "cotloop/gates.hpp"
#include "cotloop/io.hpp"
#include "cotloop/loop_compiler.hpp"

namespace cotloop::check {

const char* fault_name(Fault f) {
  switch (f) {
    case Fault::kNone:
      return "none";
    case Fault::kGateTable:
      return "gate-table";
    case Fault::kSelectorKey:
      return "selector-key";
    case Fault::kCotExpert:
      return "cot-expert";
  }
  return "?";
}

Fault parse_fault(const std::string& s) {
  for (auto f : {Fault::kNone, Fault::kGateTable, Fault::kSelectorKey, Fault::kCotExpert}) {
    if (s == fault_name(f)) return f;
  }
  throw Error(ErrorCode::kParse, "unknown fault '" + s + "'");
}

namespace {

using Clock = std::chrono::steady_clock;

// Truth of a gate on a bit vector.
int gate_oracle(loop::GateKind kind, int k, const std::vector<int>& bits) {
  int ones = 0;
  for (int b : bits) ones += b;
  const int n = static_cast<int>(bits.size());
  switch (kind) {
    case loop::GateKind::kAnd:
      return ones == n ? 1 : 0;
    case loop::GateKind::kOr:
      return ones > 0 ? 1 : 0;
    case loop::GateKind::kNot:
      return 1 - bits[0];
    case loop::GateKind::kMaj:
      return ones >= n / 2 + 1 ? 1 : 0;
    case loop::GateKind::kThreshold:
      return ones >= k ? 1 : 0;
  }
  return -1;
}

std::string selector_check(Fault fault) {
  for (int s = 2; s <= 8; ++s) {
    const std::uint64_t top = (std::uint64_t{1} << s) - 1;
    const auto fmt = fxp::selector_format(s);
    for (std::uint64_t i = 1; i <= top; ++i) {
      for (std::uint64_t j = 1; j <= top; ++j) {
        fxp::Raw v;
        if (fault == Fault::kSelectorKey) {
          // Unscaled keys: the mismatch penalty no longer dominates.
          std::vector<fxp::Raw> q, k;
          for (auto a : fxp::ortho_query(i, s)) q.push_back(fxp::from_int(a, fmt));
          const auto key = fxp::ortho_key(j, s);
          for (auto a : key) k.push_back(fxp::from_int(a / (std::int64_t{1} << (s + 1)), fmt));
          v = fxp::exp(fxp::inner(q, k, fmt), fmt);
        } else {
          v = fxp::selector_value(i, j, s);
        }
        const fxp::Raw want = i == j ? fmt.one() : 0;
        if (v != want) {
          return "s=" + std::to_string(s) + " i=" + std::to_string(i) + " j=" + std::to_string(j) + " gave raw " +
                 std::to_string(v);
        }
      }
    }
  }
  return {};
}

std::string gate_check(Fault fault) {
  using loop::GateKind;
  for (int n = 1; n <= 10; ++n) {
    std::vector<std::pair<std::pair<GateKind, int>, gates::FFWeights>> bank;
    bank.push_back({{GateKind::kAnd, 0}, gates::ff_and(n)});
    bank.push_back({{GateKind::kOr, 0}, gates::ff_or(n)});
    bank.push_back({{GateKind::kMaj, 0}, gates::ff_majority(n)});
    for (int k = 0; k <= n; ++k) bank.push_back({{GateKind::kThreshold, k}, gates::ff_threshold(n, k)});
    if (n == 1) bank.push_back({{GateKind::kNot, 0}, gates::ff_not()});
    if (fault == Fault::kGateTable && n == 3) bank[0].second.b1[0] += 1;
    for (const auto& [spec, w] : bank) {
      for (std::uint64_t mask = 0; mask < (std::uint64_t{1} << n); ++mask) {
        std::vector<int> bits(static_cast<std::size_t>(n));
        for (int b = 0; b < n; ++b) bits[static_cast<std::size_t>(b)] = static_cast<int>((mask >> b) & 1);
        const auto out = gates::ff_eval(w, gates::with_constant_slots(bits));
        const int want = gate_oracle(spec.first, spec.second, bits);
        if (out.size() != 1 || out[0] != want) {
          return std::string(loop::gate_kind_name(spec.first)) + "(n=" + std::to_string(n) +
                 (spec.first == GateKind::kThreshold ? ", k=" + std::to_string(spec.second) : "") +
                 ") wrong on input mask " + std::to_string(mask);
        }
      }
    }
  }
  return {};
}

std::string table_check(std::uint64_t seed) {
  auto rng = make_rng(seed, {0x74});
  for (int trial = 0; trial < 40; ++trial) {
    const std::size_t sigma = 2 + uniform_index(rng, 3);
    graph::LocalFunction f;
    f.arity = 1 + static_cast<int>(uniform_index(rng, 3));
    std::size_t rows = 1;
    for (int c = 0; c < f.arity; ++c) rows *= sigma;
    for (std::size_t r = 0; r < rows; ++r) f.table.push_back(static_cast<graph::Symbol>(uniform_index(rng, sigma)));
    const auto w = gates::table_function(f, sigma);
    for (std::size_t r = 0; r < rows; ++r) {
      std::vector<graph::Symbol> args(static_cast<std::size_t>(f.arity));
      std::size_t rem = r;
      for (int c = f.arity - 1; c >= 0; --c) {
        args[static_cast<std::size_t>(c)] = static_cast<graph::Symbol>(rem % sigma);
        rem /= sigma;
      }
      const auto out = gates::ff_eval(w, gates::concat_onehots(args, sigma));
      for (std::size_t a = 0; a < sigma; ++a) {
        const std::int64_t want = static_cast<graph::Symbol>(a) == f.table[r] ? 1 : 0;
        if (out[a] != want) return "table function trial " + std::to_string(trial) + " row " + std::to_string(r);
      }
    }
  }
  return {};
}

void corrupt_cot_experts(tf::TransformerProgram& p) {
  for (auto& layer : p.layers) {
    if (auto* moe = std::get_if<tf::MoEFF>(&layer.ff)) {
      for (auto& e : moe->experts) {
        std::vector<tf::Triplet> ts = e.w2.triplets();
        for (auto& t : ts) t.value = -t.value;
        e.w2 = tf::Matrix::from_triplets(e.w2.rows(), e.w2.cols(), std::move(ts));
      }
    }
  }
}

std::string cot_check(std::uint64_t seed, Fault fault) {
  corpus::GraphOptions opts;
  opts.max_inputs = 6;
  opts.max_nodes = 20;
  const auto graphs = corpus::graph_corpus(seed, 20, opts);
  for (std::size_t i = 0; i < graphs.size(); ++i) {
    auto c = cot::compile_cot(graphs[i]);
    if (fault == Fault::kCotExpert) corrupt_cot_experts(c.program);
    auto rng = make_rng(seed, {0x78, i});
    const auto r = cot::verify_cot(graphs[i], c, corpus::random_inputs(rng, graphs[i], 16));
    if (!r.pass) {
      return "graph " + std::to_string(i) + ": " + std::to_string(r.mismatches) + " mismatches" +
             (r.examples.empty() || r.examples[0].note.empty() ? "" : " (" + r.examples[0].note + ")");
    }
  }
  return {};
}

std::string loop_check(std::uint64_t seed) {
  corpus::GraphOptions opts;
  opts.max_inputs = 6;
  opts.max_nodes = 20;
  const auto graphs = corpus::graph_corpus(seed, 20, opts);
  for (std::size_t i = 0; i < graphs.size(); ++i) {
    const auto c = loop::compile_looped(graphs[i]);
    auto rng = make_rng(seed, {0x79, i});
    const auto r = loop::verify_looped(graphs[i], c, corpus::random_inputs(rng, graphs[i], 16));
    if (!r.pass) {
      return "graph " + std::to_string(i) + ": " + std::to_string(r.mismatches) + " mismatches, " +
             std::to_string(r.audit_failures) + " audit failures";
    }
  }
  return {};
}

std::string circuit_check(std::uint64_t seed) {
  corpus::CircuitOptions opts;
  opts.max_inputs = 6;
  const auto circuits = corpus::circuit_corpus(seed, 10, opts);
  for (std::size_t i = 0; i < circuits.size(); ++i) {
    const auto cc = loop::compile_circuit_looped(circuits[i]);
    const auto r = loop::verify_circuit(circuits[i], cc, loop::all_bit_vectors(circuits[i].inputs));
    if (!r.pass) return "circuit " + std::to_string(i) + ": " + std::to_string(r.mismatches) + " mismatches";
  }
  return {};
}

std::string expansion_check(std::uint64_t seed) {
  const auto graphs = corpus::graph_corpus(seed, 30);
  for (std::size_t i = 0; i < graphs.size(); ++i) {
    const auto& g = graphs[i];
    const auto gx = graph::strict_layered_expansion(g);
    const auto lx = graph::layerize(gx);
    if (lx.depth() != graph::layerize(g).depth()) return "graph " + std::to_string(i) + ": depth changed";
    for (const auto& node : gx.nodes) {
      for (auto p : node.preds) {
        if (lx.depth_of.at(p) + 1 != lx.depth_of.at(node.id)) {
          return "graph " + std::to_string(i) + ": edge " + std::to_string(p) + "->" + std::to_string(node.id) +
                 " spans layers";
        }
      }
    }
    auto rng = make_rng(seed, {0x65, i});
    for (const auto& x : corpus::random_inputs(rng, g, 16)) {
      if (graph::evaluate(g, x) != graph::evaluate(gx, x)) return "graph " + std::to_string(i) + ": function changed";
    }
  }
  return {};
}

std::string roundtrip_check(std::uint64_t seed) {
  const auto graphs = corpus::graph_corpus(seed, 4);
  for (const auto& g : graphs) {
    const auto c = cot::compile_cot(g);
    const auto j = io::program_to_json(c.program);
    const auto back = io::program_from_json(io::parse_json(j.dump()));
    if (io::program_to_json(back) != j) return "program json does not round-trip";
    if (io::graph_to_json(io::graph_from_json(io::graph_to_json(g))) != io::graph_to_json(g)) {
      return "graph json does not round-trip";
    }
  }
  return {};
}

}  // namespace

SelfcheckReport run_selfcheck(Fault injected, std::uint64_t seed) {
  SelfcheckReport rep;
  const std::vector<std::pair<std::string, std::function<std::string()>>> suite = {
      {"selector_orthogonality", [&] { return selector_check(injected); }},
      {"gate_truth_tables", [&] { return gate_check(injected); }},
      {"table_functions", [&] { return table_check(seed); }},
      {"strict_expansion", [&] { return expansion_check(seed); }},
      {"cot_corpus", [&] { return cot_check(seed, injected); }},
      {"loop_corpus", [&] { return loop_check(seed); }},
      {"circuit_corpus", [&] { return circuit_check(seed); }},
      {"program_roundtrip", [&] { return roundtrip_check(seed); }},
  };
  for (const auto& [name, fn] : suite) {
    const auto t0 = Clock::now();
    CheckResult r;
    r.name = name;
    try {
      r.detail = fn();
      r.pass = r.detail.empty();
    } catch (const Error& e) {
      r.detail = e.what();
      r.pass = false;
    }
    r.seconds = std::chrono::duration<double>(Clock::now() - t0).count();
    rep.checks.push_back(r);
    if (!r.pass) {
      rep.pass = false;
      rep.first_failure = name;
      break;
    }
  }
  return rep;
}

namespace {

// First corpus graph with at least two computed nodes and depth >= 2.
graph::CompGraph pick_graph(std::uint64_t seed) {
  corpus::GraphOptions opts;
  opts.max_inputs = 6;
  opts.max_nodes = 20;
  for (std::size_t i = 0;; ++i) {
    auto g = corpus::graph_corpus(seed + i, 1, opts).front();
    if (cot::cot_step_count(g) >= 2 && graph::layerize(g).depth() >= 2) return g;
  }
}

// Counts inputs where the program's answer differs from the oracle, given a
// runner that throws on detected problems.
template <typename Run, typename Oracle, typename Inputs>
std::size_t wrong_answers(const Inputs& inputs, Run run, Oracle oracle, bool& threw) {
  std::size_t wrong = 0;
  for (const auto& x : inputs) {
    try {
      if (run(x) != oracle(x)) ++wrong;
    } catch (const Error&) {
      threw = true;
    }
  }
  return wrong;
}

}  // namespace

std::vector<FaultCase> run_fault_injection(std::uint64_t seed) {
  std::vector<FaultCase> cases;
  const auto g = pick_graph(seed);
  auto rng = make_rng(seed, {0x66});
  const auto inputs = corpus::random_inputs(rng, g, 32);
  auto oracle = [&](const std::vector<graph::Symbol>& x) { return graph::evaluate(g, x); };

  // A program fault is detected when verification fails; it is silent when
  // the program gives a wrong answer and verification still passes.
  auto cot_case = [&](const std::string& name, const std::function<void(tf::TransformerProgram&)>& corrupt) {
    FaultCase fc;
    fc.name = name;
    auto c = cot::compile_cot(g);
    corrupt(c.program);
    bool threw = false;
    const auto wrong = wrong_answers(
        inputs, [&](const auto& x) { return tf::run_cot(c.program, x, c.program.declared_budget).answer; }, oracle,
        threw);
    const auto r = cot::verify_cot(g, c, inputs);
    fc.detected = !r.pass;
    fc.diagnostic = r.pass ? "none" : (r.trace_mismatches > 0 ? "trace_mismatch" : "answer_mismatch");
    if (!r.examples.empty() && !r.examples[0].note.empty()) fc.detail = r.examples[0].note;
    fc.detail = std::to_string(r.mismatches) + "/" + std::to_string(r.samples) + " inputs flagged" +
                (fc.detail.empty() ? "" : "; " + fc.detail);
    fc.silent_wrong = r.pass ? wrong : 0;
    cases.push_back(fc);
  };

  cot_case("cot_expert_weights", corrupt_cot_experts);
  cot_case("cot_attention_key", [](tf::TransformerProgram& p) {
    // Flat scores: every head averages the whole prefix.
    for (auto& h : p.layers.at(0).heads) h.key = tf::Matrix(h.key.rows(), h.key.cols());
  });
  cot_case("cot_output_projection", [](tf::TransformerProgram& p) {
    std::vector<tf::Triplet> ts = p.output_proj.triplets();
    for (auto& t : ts) t.row = (t.row + 1) % p.output_proj.rows();
    p.output_proj = tf::Matrix::from_triplets(p.output_proj.rows(), p.output_proj.cols(), std::move(ts));
  });

  {
    FaultCase fc;
    fc.name = "loop_positional_row";
    auto c = loop::compile_looped(g);
    for (std::size_t pos = 1; pos <= c.program.pos_embed.positions; ++pos) {
      auto& row = c.program.pos_embed.mutable_row(pos, 1);
      std::fill(row.begin(), row.end(), 0);
    }
    bool threw = false;
    const auto wrong = wrong_answers(
        inputs, [&](const auto& x) { return tf::run_looped(c.program, x, c.program.declared_budget, false).answer; },
        oracle, threw);
    const auto r = loop::verify_looped(g, c, inputs);
    fc.detected = !r.pass;
    fc.diagnostic = r.first_divergent_loop ? "layer_audit" : (r.pass ? "none" : "answer_mismatch");
    fc.detail = r.first_divergent_loop ? "first divergent loop " + std::to_string(*r.first_divergent_loop)
                                       : std::to_string(r.mismatches) + " mismatches";
    fc.silent_wrong = r.pass ? wrong : 0;
    cases.push_back(fc);
  }

  {
    FaultCase fc;
    fc.name = "circuit_gate_bias";
    corpus::CircuitOptions opts;
    opts.max_inputs = 6;
    opts.max_depth = 3;
    const auto circ = corpus::circuit_corpus(seed, 1, opts).front();
    auto cc = loop::compile_circuit_looped(circ);
    auto& ff = std::get<tf::StandardFF>(cc.program.layers.back().ff);
    for (auto& b : ff.b1) b += cc.program.fmt.one();
    const auto all = loop::all_bit_vectors(circ.inputs);
    bool threw = false;
    const auto wrong = wrong_answers(
        all, [&](const auto& x) { return tf::run_looped(cc.program, x, cc.program.declared_budget, false).answer; },
        [&](const auto& x) { return std::vector<int>{circ.evaluate(x)}; }, threw);
    const auto r = loop::verify_circuit(circ, cc, all);
    fc.detected = !r.pass;
    fc.diagnostic = r.first_divergent_loop ? "layer_audit" : (r.pass ? "none" : "answer_mismatch");
    fc.detail = std::to_string(r.mismatches) + "/" + std::to_string(r.samples) + " inputs flagged";
    fc.silent_wrong = r.pass ? wrong : 0;
    cases.push_back(fc);
  }

  {
    // Two entries above 1 - delta: the one-hot step must refuse.
    FaultCase fc;
    fc.name = "onehot_margin";
    const auto fmt = fxp::format_for(4, 3);
    const auto t = gates::onehot_threshold();
    const std::vector<fxp::Raw> y = {fmt.one(), fmt.one() - 1, 0};
    try {
      (void)t.apply(y, fmt, true);
      fc.diagnostic = "none";
    } catch (const Error& e) {
      fc.detected = e.code() == ErrorCode::kMarginViolated;
      fc.diagnostic = error_code_name(e.code());
      fc.detail = e.what();
    }
    cases.push_back(fc);
  }

  {
    FaultCase fc;
    fc.name = "weight_overflow";
    auto c = cot::compile_cot(g);
    c.program.output_proj = c.program.output_proj.with_entry(0, 0, c.program.fmt.raw_limit());
    try {
      c.program.validate();
      fc.diagnostic = "none";
    } catch (const Error& e) {
      fc.detected = e.code() == ErrorCode::kOverflow;
      fc.diagnostic = error_code_name(e.code());
      fc.detail = e.what();
    }
    cases.push_back(fc);
  }

  {
    FaultCase fc;
    fc.name = "budget_too_small";
    const auto c = cot::compile_cot(g);
    try {
      (void)tf::run_program(c.program, inputs.front(), c.program.declared_budget - 1);
      fc.diagnostic = "none";
    } catch (const Error& e) {
      fc.detected = e.code() == ErrorCode::kBudgetTooSmall;
      fc.diagnostic = error_code_name(e.code());
      fc.detail = e.what();
    }
    cases.push_back(fc);
  }

  for (auto fault : {Fault::kGateTable, Fault::kSelectorKey, Fault::kCotExpert}) {
    FaultCase fc;
    fc.name = std::string("selfcheck_") + fault_name(fault);
    const auto rep = run_selfcheck(fault, seed);
    fc.detected = !rep.pass && rep.first_failure.has_value();
    fc.diagnostic = rep.first_failure.value_or("none");
    if (!rep.checks.empty()) fc.detail = rep.checks.back().detail;
    cases.push_back(fc);
  }
  return cases;
}

}  // namespace cotloop::check
