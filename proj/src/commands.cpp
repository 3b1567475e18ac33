// Copyright 2026 The cotloop Authors
// SPDX-License-Identifier: Apache-2.0

#include "cotloop/commands.hpp"

#include <cmath>

#include "cotloop/corpus.hpp"
#include "cotloop/errors.hpp"
#include "cotloop/selfcheck.hpp"

namespace cotloop::cmd {

namespace {

enum class Kind { kGraph, kCircuit, kProgram };

struct Input {
  std::string path;
  std::string hash;
  Json json;
  Kind kind = Kind::kGraph;
};

std::string require_string(const Json& config, const char* key) {
  auto it = config.find(key);
  if (it == config.end() || !it->is_string()) {
    throw Error(ErrorCode::kInvalidArgument, std::string("missing required option '") + key + "'");
  }
  return it->get<std::string>();
}

template <typename T>
T get_or(const Json& config, const char* key, T fallback) {
  auto it = config.find(key);
  if (it == config.end() || it->is_null()) return fallback;
  try {
    return it->get<T>();
  } catch (const nlohmann::json::exception&) {
    throw Error(ErrorCode::kInvalidArgument, std::string("option '") + key + "' has the wrong type");
  }
}

std::optional<std::uint64_t> seed_of(const Json& config) {
  auto it = config.find("seed");
  if (it == config.end() || it->is_null()) return std::nullopt;
  if (!it->is_number_unsigned() && !(it->is_number_integer() && it->get<std::int64_t>() >= 0)) {
    throw Error(ErrorCode::kInvalidArgument, "seed must be a nonnegative integer");
  }
  return it->get<std::uint64_t>();
}

std::uint64_t require_seed(const Json& config, const std::string& command) {
  const auto s = seed_of(config);
  if (!s) throw Error(ErrorCode::kInvalidArgument, command + " is stochastic and needs an explicit seed");
  return *s;
}

Input load_input(const Json& config) {
  Input in;
  in.path = require_string(config, "input");
  const auto text = io::read_file(in.path);
  in.hash = io::hex64(io::fnv1a64(text));
  in.json = io::parse_json(text, in.path);
  if (in.json.is_object() && in.json.contains("format")) {
    in.kind = Kind::kProgram;
  } else if (in.json.is_object() && in.json.contains("gates")) {
    in.kind = Kind::kCircuit;
  } else {
    in.kind = Kind::kGraph;
  }
  return in;
}

io::Manifest manifest(const std::string& command, const std::string& hash, const Json& config) {
  io::Manifest m;
  m.command = command;
  m.input_hash = hash;
  m.seed = seed_of(config);
  m.config = config;
  return m;
}

loop::Precision precision_of(const Json& config) {
  const auto p = get_or<std::string>(config, "precision", "log-bit");
  if (p == "log-bit") return loop::Precision::kLogBit;
  if (p == "constant-bit") return loop::Precision::kConstantBit;
  throw Error(ErrorCode::kInvalidArgument, "precision must be log-bit or constant-bit");
}

cot::CotOptions cot_options(const Json& config) {
  cot::CotOptions o;
  o.fan_in_cap = get_or<int>(config, "fan_in_cap", o.fan_in_cap);
  return o;
}

loop::LoopOptions loop_options(const Json& config) {
  loop::LoopOptions o;
  o.fan_in_cap = get_or<int>(config, "fan_in_cap", o.fan_in_cap);
  o.width = get_or<std::size_t>(config, "width", 0);
  return o;
}

Json program_summary(const tf::TransformerProgram& p) {
  std::size_t heads = 0;
  std::size_t nnz = p.output_proj.nnz();
  for (const auto& l : p.layers) {
    heads += l.heads.size();
    for (const auto& h : l.heads) nnz += h.query.nnz() + h.key.nnz() + h.value.nnz();
    nnz += l.merge.nnz();
  }
  return {{"mode", tf::mode_name(p.mode)},
          {"embed_dim", p.embed_dim},
          {"layers", p.layers.size()},
          {"heads", heads},
          {"attention_nnz", nnz},
          {"fx", {{"integer_bits", p.fmt.integer_bits}, {"fraction_bits", p.fmt.fraction_bits}}},
          {"declared_budget", p.declared_budget},
          {"positions", p.pos_embed.positions},
          {"meta", p.meta}};
}

// Size-versus-depth facts for a graph: |V|, depth, CoT steps and loops.
Json scaling_fields(const graph::CompGraph& g) {
  return {{"size", g.nodes.size()},
          {"depth", graph::layerize(g).depth()},
          {"steps", cot::cot_step_count(g)},
          {"loops", loop::loop_count(g)},
          {"parallel_space", graph::parallel_space(g)}};
}

Json scaling_fields(const loop::ThresholdCircuit& c) {
  return {{"size", static_cast<std::size_t>(c.inputs) + c.gates.size()},
          {"depth", c.depth()},
          {"loops", loop::loop_count(c)}};
}

Json scaling_fields(const tf::TransformerProgram& p) {
  Json j;
  auto meta = [&](const char* k) -> Json {
    auto it = p.meta.find(k);
    return it == p.meta.end() ? Json(nullptr) : Json(it->second);
  };
  j["size"] = meta("nodes");
  j["depth"] = meta("depth");
  if (p.mode == tf::Mode::kCot) {
    j["steps"] = p.declared_budget;
  } else {
    j["loops"] = p.declared_budget;
  }
  return j;
}

std::vector<int> tokens_to_indices(const tf::TransformerProgram& p, const Json& tokens) {
  if (!tokens.is_array()) throw Error(ErrorCode::kParse, "input vector must be an array of tokens");
  std::vector<int> x;
  for (const auto& t : tokens) {
    if (t.is_string()) {
      x.push_back(tf::vocab_index(p, t.get<std::string>()));
    } else if (t.is_number_integer()) {
      x.push_back(tf::vocab_index(p, std::to_string(t.get<std::int64_t>())));
    } else {
      throw Error(ErrorCode::kParse, "token must be a string");
    }
  }
  return x;
}

Json indices_to_tokens(const tf::TransformerProgram& p, std::span<const int> x) {
  Json out = Json::array();
  for (int i : x) out.push_back(p.vocab.at(static_cast<std::size_t>(i)));
  return out;
}

}  // namespace

Json compile(const Json& config) {
  const auto mode = require_string(config, "mode");
  const auto in = load_input(config);
  Json out;
  Json report;
  report["mode"] = mode;
  if (mode == "cot" || mode == "loop") {
    if (in.kind != Kind::kGraph) throw Error(ErrorCode::kInvalidArgument, mode + " mode compiles a graph file");
    const auto g = io::graph_from_json(in.json);
    if (mode == "cot") {
      const auto c = cot::compile_cot(g, cot_options(config));
      out["program"] = io::program_to_json(c.program);
      out["layout"] = io::layout_manifest(c);
      report["program"] = program_summary(c.program);
    } else {
      const auto c = loop::compile_looped(g, loop_options(config));
      out["program"] = io::program_to_json(c.program);
      out["layout"] = io::layout_manifest(c);
      report["program"] = program_summary(c.program);
    }
    report["graph"] = scaling_fields(g);
  } else if (mode == "circuit") {
    if (in.kind != Kind::kCircuit) throw Error(ErrorCode::kInvalidArgument, "circuit mode compiles a circuit file");
    const auto c = io::circuit_from_json(in.json);
    const auto cc = loop::compile_circuit_looped(c, precision_of(config));
    out["program"] = io::program_to_json(cc.program);
    out["layout"] = io::layout_manifest(cc);
    report["program"] = program_summary(cc.program);
    report["circuit"] = scaling_fields(c);
  } else {
    throw Error(ErrorCode::kInvalidArgument, "mode must be cot, loop or circuit");
  }
  report["program_hash"] = io::hex64(io::fnv1a64(io::dump(out["program"])));
  out["report"] = io::make_report(manifest("compile", in.hash, config), std::move(report));
  return out;
}

Json run(const Json& config) {
  const auto in = load_input(config);
  tf::TransformerProgram prog;
  Json body;
  if (in.kind == Kind::kProgram) {
    prog = io::program_from_json(in.json);
    body["scaling"] = scaling_fields(prog);
  } else if (in.kind == Kind::kCircuit) {
    const auto c = io::circuit_from_json(in.json);
    prog = loop::compile_circuit_looped(c, precision_of(config)).program;
    body["scaling"] = scaling_fields(c);
  } else {
    const auto g = io::graph_from_json(in.json);
    const auto mode = get_or<std::string>(config, "mode", "cot");
    if (mode == "cot") {
      prog = cot::compile_cot(g, cot_options(config)).program;
    } else if (mode == "loop") {
      prog = loop::compile_looped(g, loop_options(config)).program;
    } else {
      throw Error(ErrorCode::kInvalidArgument, "graph input runs in cot or loop mode");
    }
    body["scaling"] = scaling_fields(g);
  }
  body["mode"] = tf::mode_name(prog.mode);

  std::vector<std::vector<int>> xs;
  if (config.contains("inputs")) {
    for (const auto& t : config["inputs"]) xs.push_back(tokens_to_indices(prog, t));
  }
  if (config.contains("random")) {
    const auto count = get_or<std::size_t>(config, "random", 0);
    auto rng = make_rng(require_seed(config, "run --random"), {0x72, 0x75, 0x6e});
    const std::size_t n = static_cast<std::size_t>(prog.meta.count("inputs") ? prog.meta.at("inputs") : 0);
    // reserved tokens ("__pad", "__halt", ...) are never inputs
    std::vector<int> symbols;
    for (std::size_t v = 0; v < prog.vocab.size(); ++v) {
      if (prog.vocab[v].rfind("__", 0) != 0) symbols.push_back(static_cast<int>(v));
    }
    if (symbols.empty()) throw Error(ErrorCode::kValidation, "program vocabulary has no input symbols");
    for (std::size_t i = 0; i < count; ++i) {
      std::vector<int> x(n);
      for (auto& t : x) t = symbols[uniform_index(rng, symbols.size())];
      xs.push_back(std::move(x));
    }
  }
  if (xs.empty()) throw Error(ErrorCode::kInvalidArgument, "no inputs given");

  std::optional<std::size_t> budget;
  if (config.contains("budget") && !config["budget"].is_null()) budget = get_or<std::size_t>(config, "budget", 0);
  body["budget"] = budget.value_or(prog.declared_budget);
  body["required_budget"] = prog.declared_budget;
  body["steps_or_loops"] = budget.value_or(prog.declared_budget);
  Json answers = Json::array();
  for (const auto& x : xs) {
    const auto r = tf::run_program(prog, x, budget);
    answers.push_back({{"input", indices_to_tokens(prog, x)}, {"answer", indices_to_tokens(prog, r.answer)}});
  }
  body["answers"] = std::move(answers);
  return io::make_report(manifest("run", in.hash, config), std::move(body));
}

namespace {

// Every input vector when the space is small enough, otherwise a seeded draw.
std::vector<std::vector<graph::Symbol>> graph_inputs(const graph::CompGraph& g, const Json& config, Json& body) {
  const auto samples = get_or<std::size_t>(config, "samples", 64);
  const std::size_t n = g.num_inputs();
  const std::size_t sigma = g.alphabet.size();
  double space = std::pow(static_cast<double>(sigma), static_cast<double>(n));
  if (space <= static_cast<double>(samples)) {
    body["inputs"] = "exhaustive";
    std::vector<std::vector<graph::Symbol>> out;
    std::vector<graph::Symbol> x(n, 0);
    for (std::size_t k = 0; k < static_cast<std::size_t>(space); ++k) {
      out.push_back(x);
      for (std::size_t i = n; i-- > 0;) {
        if (++x[i] < static_cast<graph::Symbol>(sigma)) break;
        x[i] = 0;
      }
    }
    return out;
  }
  body["inputs"] = "random";
  auto rng = make_rng(require_seed(config, "verify on a large input space"), {0x76});
  return corpus::random_inputs(rng, g, samples);
}

Json symbols_json(const graph::CompGraph& g, std::span<const graph::Symbol> x) {
  Json out = Json::array();
  for (auto s : x) {
    if (s >= 0 && static_cast<std::size_t>(s) < g.alphabet.size()) {
      out.push_back(g.alphabet[static_cast<std::size_t>(s)]);
    } else {
      out.push_back(s);
    }
  }
  return out;
}

template <typename Compilation>
bool adopt_program(const Json& config, Compilation& c, Json& body, std::string& hash) {
  if (!config.contains("program") || config["program"].is_null()) return false;
  const auto path = config["program"].get<std::string>();
  const auto text = io::read_file(path);
  hash += "+" + io::hex64(io::fnv1a64(text));
  auto loaded = io::program_from_json(io::parse_json(text, path));
  body["program_matches_compiler"] = io::program_to_json(loaded) == io::program_to_json(c.program);
  c.program = std::move(loaded);
  return true;
}

}  // namespace

Json verify(const Json& config) {
  auto in = load_input(config);
  Json body;
  if (in.kind == Kind::kCircuit) {
    const auto c = io::circuit_from_json(in.json);
    auto cc = loop::compile_circuit_looped(c, precision_of(config));
    adopt_program(config, cc, body, in.hash);
    std::vector<std::vector<int>> xs;
    if (c.inputs <= 16) {
      body["inputs"] = "exhaustive";
      xs = loop::all_bit_vectors(c.inputs);
    } else {
      body["inputs"] = "random";
      auto rng = make_rng(require_seed(config, "verify on a large input space"), {0x76});
      const auto samples = get_or<std::size_t>(config, "samples", 64);
      for (std::size_t i = 0; i < samples; ++i) {
        std::vector<int> x(static_cast<std::size_t>(c.inputs));
        for (auto& b : x) b = static_cast<int>(uniform_index(rng, 2));
        xs.push_back(std::move(x));
      }
    }
    const auto r = loop::verify_circuit(c, cc, xs);
    body["mode"] = "circuit";
    body["pass"] = r.pass;
    body["samples"] = r.samples;
    body["mismatches"] = r.mismatches;
    body["audit_failures"] = r.audit_failures;
    body["first_divergent_loop"] = r.first_divergent_loop ? Json(*r.first_divergent_loop) : Json(nullptr);
    body["loops"] = r.loops;
    body["expected_loops"] = r.expected_loops;
    body["scaling"] = scaling_fields(c);
    body["failing_inputs"] = r.failing_inputs;
    return io::make_report(manifest("verify", in.hash, config), std::move(body));
  }
  if (in.kind != Kind::kGraph) {
    throw Error(ErrorCode::kInvalidArgument, "verify needs the graph or circuit file as --input (pass the program with --program)");
  }
  const auto g = io::graph_from_json(in.json);
  const auto mode = get_or<std::string>(config, "mode", "cot");
  const auto xs = graph_inputs(g, config, body);
  body["mode"] = mode;
  body["scaling"] = scaling_fields(g);
  auto examples_json = [&](const auto& examples) {
    Json out = Json::array();
    for (const auto& e : examples) {
      out.push_back({{"input", symbols_json(g, e.input)},
                     {"expected", symbols_json(g, e.expected)},
                     {"got", symbols_json(g, e.got)},
                     {"note", e.note}});
    }
    return out;
  };
  if (mode == "cot") {
    auto c = cot::compile_cot(g, cot_options(config));
    adopt_program(config, c, body, in.hash);
    const auto r = cot::verify_cot(g, c, xs);
    body["pass"] = r.pass;
    body["samples"] = r.samples;
    body["mismatches"] = r.mismatches;
    body["trace_mismatches"] = r.trace_mismatches;
    body["steps"] = r.steps;
    body["expected_steps"] = r.expected_steps;
    body["examples"] = examples_json(r.examples);
  } else if (mode == "loop") {
    auto c = loop::compile_looped(g, loop_options(config));
    adopt_program(config, c, body, in.hash);
    const auto r = loop::verify_looped(g, c, xs);
    body["pass"] = r.pass;
    body["samples"] = r.samples;
    body["mismatches"] = r.mismatches;
    body["audit_failures"] = r.audit_failures;
    body["first_divergent_loop"] = r.first_divergent_loop ? Json(*r.first_divergent_loop) : Json(nullptr);
    body["loops"] = r.loops;
    body["expected_loops"] = r.expected_loops;
    body["width"] = r.width;
    body["examples"] = examples_json(r.examples);
  } else {
    throw Error(ErrorCode::kInvalidArgument, "verify mode must be cot or loop for graph input");
  }
  if (body.contains("program_matches_compiler") && !body["program_matches_compiler"].get<bool>()) {
    body["note"] = "program differs from a fresh compilation of this graph";
  }
  return io::make_report(manifest("verify", in.hash, config), std::move(body));
}

namespace {

struct RelationInput {
  rel::RelationPtr x;
  std::string hash;
};

RelationInput load_relation_input(const Json& config) {
  const auto path = require_string(config, "input");
  return {io::load_relation(path), io::hex64(io::fnv1a64(io::read_file(path)))};
}

sampler::WeakOracleConfig oracle_config(const Json& config, const rel::Relation& x, std::uint64_t count,
                                        std::uint64_t seed) {
  sampler::WeakOracleConfig cfg;
  cfg.gamma = get_or<double>(config, "gamma", cfg.gamma);
  cfg.seed = seed;
  cfg.failure_mode = sampler::parse_failure_mode(get_or<std::string>(config, "failure_mode", "uniform-garbage"));
  auto it = config.find("alpha");
  if (it != config.end() && it->is_string()) {
    if (it->get<std::string>() != "schedule") throw Error(ErrorCode::kInvalidArgument, "alpha must be a number or 'schedule'");
    cfg.alpha = sampler::alpha_schedule(std::max<std::size_t>(1, x.solution_length()), count);
  } else {
    cfg.alpha = get_or<double>(config, "alpha", cfg.alpha);
  }
  cfg.validate();
  return cfg;
}

Json zero_count_body(const rel::Relation& x) {
  return {{"relation", x.describe()},
          {"brute_count", 0},
          {"count", 0},
          {"sampling", "refused"},
          {"reason", "instance has no solutions"}};
}

}  // namespace

Json sample(const Json& config) {
  const auto seed = require_seed(config, "sample");
  const auto in = load_relation_input(config);
  const auto count = rel::brute_count(*in.x);
  if (count == 0) return io::make_report(manifest("sample", in.hash, config), zero_count_body(*in.x));
  const auto cfg = oracle_config(config, *in.x, count, seed);
  sampler::SampleOptions opts;
  opts.samples = get_or<std::size_t>(config, "samples", 1000);
  opts.epsilon = get_or<double>(config, "epsilon", opts.epsilon);
  opts.delta = get_or<double>(config, "delta", opts.delta);
  opts.p_source = sampler::parse_p_source(get_or<std::string>(config, "p_source", "oracle-exact"));
  const auto rep = sampler::run_sampler(cfg, in.x, opts);
  auto body = io::sampler_report_to_json(rep);
  body["uniform_probability"] = 1.0 / static_cast<double>(count);
  return io::make_report(manifest("sample", in.hash, config), std::move(body));
}

Json count(const Json& config) {
  const auto seed = require_seed(config, "count");
  const auto in = load_relation_input(config);
  const auto exact = rel::brute_count(*in.x);
  if (exact == 0) {
    auto body = zero_count_body(*in.x);
    body.erase("sampling");
    body.erase("reason");
    body["estimates"] = Json::array();
    return io::make_report(manifest("count", in.hash, config), std::move(body));
  }
  const auto runs = get_or<std::size_t>(config, "runs", 1);
  const auto delta = get_or<double>(config, "delta", 0.05);
  Json estimates = Json::array();
  std::size_t within = 0;
  std::size_t zero_paths = 0;
  std::size_t per_token_T = 0;
  double alpha = 0.0;
  for (std::size_t r = 0; r < runs; ++r) {
    const auto cfg = oracle_config(config, *in.x, exact, seed + r);
    alpha = cfg.alpha;
    sampler::MedianModel model(cfg, in.x, delta);
    per_token_T = model.per_token_T();
    try {
      const auto c = sampler::count_estimate(model);
      const double rel_err = c.value / static_cast<double>(exact) - 1.0;
      if (std::abs(rel_err) <= 0.2) ++within;
      estimates.push_back({{"seed", cfg.seed},
                           {"estimate", c.value},
                           {"relative_error", rel_err},
                           {"greedy_path", sampler::word_string(c.greedy_path)}});
    } catch (const Error& e) {
      if (e.code() != ErrorCode::kZeroPath) throw;
      ++zero_paths;
      estimates.push_back({{"seed", cfg.seed}, {"estimate", nullptr}, {"error", e.what()}});
    }
  }
  Json body = {{"relation", in.x->describe()},
               {"brute_count", exact},
               {"alpha", alpha},
               {"gamma", get_or<double>(config, "gamma", 0.25)},
               {"delta", delta},
               {"per_token_T", per_token_T},
               {"runs", runs},
               {"zero_paths", zero_paths},
               {"within_20_percent", static_cast<double>(within) / static_cast<double>(runs)},
               {"estimates", std::move(estimates)}};
  if (runs == 1 && body["estimates"][0].contains("estimate")) body["count_estimate"] = body["estimates"][0]["estimate"];
  return io::make_report(manifest("count", in.hash, config), std::move(body));
}

Json selfcheck(const Json& config) {
  const auto fault = check::parse_fault(get_or<std::string>(config, "fault", "none"));
  const auto seed = seed_of(config).value_or(1);
  const auto rep = check::run_selfcheck(fault, seed);
  Json checks = Json::array();
  for (const auto& c : rep.checks) checks.push_back({{"name", c.name}, {"pass", c.pass}, {"detail", c.detail}});
  Json body = {{"pass", rep.pass},
               {"checks", std::move(checks)},
               {"first_failure", rep.first_failure ? Json(*rep.first_failure) : Json(nullptr)}};
  if (get_or<bool>(config, "faults", false)) {
    Json cases = Json::array();
    bool all = true;
    for (const auto& f : check::run_fault_injection(seed)) {
      all = all && f.detected && f.silent_wrong == 0;
      cases.push_back({{"name", f.name},
                       {"detected", f.detected},
                       {"diagnostic", f.diagnostic},
                       {"silent_wrong", f.silent_wrong},
                       {"detail", f.detail}});
    }
    body["fault_injection"] = std::move(cases);
    body["negative_controls_pass"] = all;
  }
  return io::make_report(manifest("selfcheck", io::hex64(io::fnv1a64(config.dump())), config), std::move(body));
}

Json dispatch(const std::string& command, const Json& config) {
  if (command == "compile") return compile(config);
  if (command == "run") return run(config);
  if (command == "verify") return verify(config);
  if (command == "sample") return sample(config);
  if (command == "count") return count(config);
  if (command == "selfcheck") return selfcheck(config);
  throw Error(ErrorCode::kInvalidArgument, "unknown command '" + command + "'");
}

}  // namespace cotloop::cmd
