// Copyright 2026 The cotloop Authors
// SPDX-License-Identifier: Apache-2.0

#include "cotloop/io.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include "cotloop/errors.hpp"

namespace cotloop::io {

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, "cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::string& path, const std::string& text) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::kIo, "cannot write " + path);
    out << text;
    if (!out) throw Error(ErrorCode::kIo, "short write to " + path);
  }
  if (std::rename(tmp.c_str(), path.c_str()) != 0) {
    std::remove(tmp.c_str());
    throw Error(ErrorCode::kIo, "cannot move output into " + path);
  }
}

namespace {

// 1-based line and column of a byte offset.
std::string locate(const std::string& text, std::size_t byte) {
  std::size_t line = 1;
  std::size_t col = 1;
  for (std::size_t i = 0; i < byte && i < text.size(); ++i) {
    if (text[i] == '\n') {
      ++line;
      col = 1;
    } else {
      ++col;
    }
  }
  return std::to_string(line) + ":" + std::to_string(col);
}

[[noreturn]] void bad(const std::string& where, const std::string& what) {
  throw Error(ErrorCode::kParse, where + ": " + what);
}

const Json& field(const Json& j, const char* key, const std::string& where) {
  if (!j.is_object()) bad(where, "expected an object");
  auto it = j.find(key);
  if (it == j.end()) bad(where, std::string("missing field '") + key + "'");
  return *it;
}

std::int64_t as_int(const Json& j, const std::string& where) {
  if (!j.is_number_integer()) bad(where, "expected an integer");
  return j.get<std::int64_t>();
}

std::string as_string(const Json& j, const std::string& where) {
  if (!j.is_string()) bad(where, "expected a string");
  return j.get<std::string>();
}

const Json& as_array(const Json& j, const std::string& where) {
  if (!j.is_array()) bad(where, "expected an array");
  return j;
}

std::size_t as_size(const Json& j, const std::string& where) {
  const auto v = as_int(j, where);
  if (v < 0) bad(where, "expected a nonnegative integer");
  return static_cast<std::size_t>(v);
}

}  // namespace

Json parse_json(const std::string& text, const std::string& source) {
  try {
    return Json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(ErrorCode::kParse, source + ":" + locate(text, e.byte > 0 ? e.byte - 1 : 0) + " (byte " +
                                       std::to_string(e.byte) + "): " + e.what());
  }
}

Json load_json(const std::string& path) { return parse_json(read_file(path), path); }

std::string dump(const Json& j) { return j.dump(2) + "\n"; }

std::uint64_t fnv1a64(const std::string& bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

// ---- graphs

graph::CompGraph graph_from_json(const Json& j) {
  graph::CompGraph g;
  for (const auto& s : as_array(field(j, "alphabet", "graph"), "alphabet")) g.alphabet.push_back(as_string(s, "alphabet"));
  if (j.contains("functions")) {
    const auto& fs = field(j, "functions", "graph");
    if (!fs.is_object()) bad("functions", "expected an object");
    for (auto it = fs.begin(); it != fs.end(); ++it) {
      const std::string where = "functions." + it.key();
      graph::LocalFunction f;
      f.arity = static_cast<int>(as_int(field(it.value(), "arity", where), where + ".arity"));
      for (const auto& v : as_array(field(it.value(), "table", where), where + ".table")) {
        f.table.push_back(static_cast<graph::Symbol>(as_int(v, where + ".table")));
      }
      g.functions[it.key()] = std::move(f);
    }
  }
  const auto& nodes = as_array(field(j, "nodes", "graph"), "nodes");
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    const std::string where = "nodes[" + std::to_string(i) + "]";
    const auto& nj = nodes[i];
    graph::Node n;
    n.id = as_int(field(nj, "id", where), where + ".id");
    const auto kind = as_string(field(nj, "kind", where), where + ".kind");
    if (kind == "input") {
      n.kind = graph::NodeKind::kInput;
    } else if (kind == "func") {
      n.kind = graph::NodeKind::kFunc;
    } else if (kind == "output") {
      n.kind = graph::NodeKind::kOutput;
    } else {
      bad(where + ".kind", "unknown node kind '" + kind + "'");
    }
    if (nj.contains("fn") && !nj["fn"].is_null()) n.fn = as_string(nj["fn"], where + ".fn");
    if (nj.contains("preds")) {
      for (const auto& p : as_array(nj["preds"], where + ".preds")) n.preds.push_back(as_int(p, where + ".preds"));
    }
    g.nodes.push_back(std::move(n));
  }
  for (const auto& o : as_array(field(j, "outputs", "graph"), "outputs")) g.outputs.push_back(as_int(o, "outputs"));
  return g;
}

Json graph_to_json(const graph::CompGraph& g) {
  Json j;
  j["alphabet"] = g.alphabet;
  j["functions"] = Json::object();
  for (const auto& [label, f] : g.functions) j["functions"][label] = {{"arity", f.arity}, {"table", f.table}};
  j["nodes"] = Json::array();
  for (const auto& n : g.nodes) {
    Json nj = {{"id", n.id}, {"kind", graph::node_kind_name(n.kind)}, {"preds", n.preds}};
    if (n.kind == graph::NodeKind::kFunc) nj["fn"] = n.fn;
    j["nodes"].push_back(std::move(nj));
  }
  j["outputs"] = g.outputs;
  return j;
}

// ---- circuits

loop::ThresholdCircuit circuit_from_json(const Json& j) {
  loop::ThresholdCircuit c;
  c.inputs = static_cast<int>(as_int(field(j, "inputs", "circuit"), "inputs"));
  const auto& gates = as_array(field(j, "gates", "circuit"), "gates");
  for (std::size_t i = 0; i < gates.size(); ++i) {
    const std::string where = "gates[" + std::to_string(i) + "]";
    loop::Gate gt;
    gt.id = as_int(field(gates[i], "id", where), where + ".id");
    try {
      gt.kind = loop::parse_gate_kind(as_string(field(gates[i], "kind", where), where + ".kind"));
    } catch (const Error& e) {
      bad(where + ".kind", e.what());
    }
    if (gates[i].contains("k")) gt.k = static_cast<int>(as_int(gates[i]["k"], where + ".k"));
    for (const auto& p : as_array(field(gates[i], "preds", where), where + ".preds")) {
      gt.preds.push_back(as_int(p, where + ".preds"));
    }
    c.gates.push_back(std::move(gt));
  }
  c.output = as_int(field(j, "output", "circuit"), "output");
  return c;
}

Json circuit_to_json(const loop::ThresholdCircuit& c) {
  Json j;
  j["inputs"] = c.inputs;
  j["gates"] = Json::array();
  for (const auto& gt : c.gates) {
    Json gj = {{"id", gt.id}, {"kind", loop::gate_kind_name(gt.kind)}, {"preds", gt.preds}};
    if (gt.kind == loop::GateKind::kThreshold) gj["k"] = gt.k;
    j["gates"].push_back(std::move(gj));
  }
  j["output"] = c.output;
  return j;
}

// ---- programs

namespace {

Json matrix_to_json(const tf::Matrix& m) {
  Json e = Json::array();
  for (const auto& t : m.triplets()) e.push_back({t.row, t.col, t.value});
  return {{"rows", m.rows()}, {"cols", m.cols()}, {"entries", std::move(e)}};
}

tf::Matrix matrix_from_json(const Json& j, const std::string& where) {
  const auto rows = as_size(field(j, "rows", where), where + ".rows");
  const auto cols = as_size(field(j, "cols", where), where + ".cols");
  std::vector<tf::Triplet> ts;
  for (const auto& e : as_array(field(j, "entries", where), where + ".entries")) {
    if (!e.is_array() || e.size() != 3) bad(where + ".entries", "expected [row, col, value]");
    const auto r = as_size(e[0], where);
    const auto c = as_size(e[1], where);
    if (r >= rows || c >= cols) bad(where + ".entries", "index outside the matrix shape");
    ts.push_back({r, c, as_int(e[2], where)});
  }
  return tf::Matrix::from_triplets(rows, cols, std::move(ts));
}

// Sparse [index, value] pairs of a dense row.
Json sparse_row(const std::vector<tf::Raw>& row) {
  Json out = Json::array();
  for (std::size_t k = 0; k < row.size(); ++k) {
    if (row[k] != 0) out.push_back({k, row[k]});
  }
  return out;
}

std::vector<tf::Raw> dense_row(const Json& j, std::size_t m, const std::string& where) {
  std::vector<tf::Raw> row(m, 0);
  for (const auto& e : as_array(j, where)) {
    if (!e.is_array() || e.size() != 2) bad(where, "expected [index, value]");
    const auto k = as_size(e[0], where);
    if (k >= m) bad(where, "index beyond embed_dim");
    row[k] = as_int(e[1], where);
  }
  return row;
}

Json ff_to_json(const tf::StandardFF& ff) {
  return {{"w1", matrix_to_json(ff.w1)}, {"b1", ff.b1}, {"w2", matrix_to_json(ff.w2)}};
}

tf::StandardFF ff_from_json(const Json& j, const std::string& where) {
  tf::StandardFF ff;
  ff.w1 = matrix_from_json(field(j, "w1", where), where + ".w1");
  for (const auto& b : as_array(field(j, "b1", where), where + ".b1")) ff.b1.push_back(as_int(b, where + ".b1"));
  ff.w2 = matrix_from_json(field(j, "w2", where), where + ".w2");
  return ff;
}

}  // namespace

Json program_to_json(const tf::TransformerProgram& p) {
  Json j;
  j["format"] = kProgramFormat;
  j["mode"] = tf::mode_name(p.mode);
  j["mask"] = p.mask == tf::Mask::kCausal ? "causal" : "full";
  j["fx"] = {{"integer_bits", p.fmt.integer_bits}, {"fraction_bits", p.fmt.fraction_bits}};
  j["embed_dim"] = p.embed_dim;
  j["vocab"] = p.vocab;
  j["answer_length"] = p.answer_length;
  j["declared_budget"] = p.declared_budget;
  j["meta"] = p.meta;
  j["word_embed"] = Json::array();
  for (const auto& r : p.word_embed) j["word_embed"].push_back(sparse_row(r));
  Json pe = {{"loops", p.pos_embed.loops}, {"positions", p.pos_embed.positions}, {"rows", Json::array()}};
  for (const auto& r : p.pos_embed.rows) pe["rows"].push_back(sparse_row(r));
  j["pos_embed"] = std::move(pe);
  j["layers"] = Json::array();
  for (const auto& l : p.layers) {
    Json lj;
    lj["heads"] = Json::array();
    for (const auto& h : l.heads) {
      lj["heads"].push_back(
          {{"query", matrix_to_json(h.query)}, {"key", matrix_to_json(h.key)}, {"value", matrix_to_json(h.value)}});
    }
    lj["merge"] = matrix_to_json(l.merge);
    if (std::holds_alternative<std::monostate>(l.ff)) {
      lj["ff"] = {{"type", "none"}};
    } else if (const auto* s = std::get_if<tf::StandardFF>(&l.ff)) {
      lj["ff"] = ff_to_json(*s);
      lj["ff"]["type"] = "standard";
    } else {
      const auto& moe = std::get<tf::MoEFF>(l.ff);
      Json experts = Json::array();
      for (const auto& e : moe.experts) experts.push_back(ff_to_json(e));
      lj["ff"] = {{"type", "moe"}, {"gate", matrix_to_json(moe.gate)}, {"experts", std::move(experts)}};
    }
    j["layers"].push_back(std::move(lj));
  }
  j["output_proj"] = matrix_to_json(p.output_proj);
  return j;
}

tf::TransformerProgram program_from_json(const Json& j) {
  const auto fmt_tag = as_string(field(j, "format", "program"), "format");
  if (fmt_tag != kProgramFormat) bad("format", "unsupported program format '" + fmt_tag + "'");
  tf::TransformerProgram p;
  const auto mode = as_string(field(j, "mode", "program"), "mode");
  if (mode == "cot") {
    p.mode = tf::Mode::kCot;
  } else if (mode == "looped") {
    p.mode = tf::Mode::kLooped;
  } else {
    bad("mode", "unknown mode '" + mode + "'");
  }
  const auto mask = as_string(field(j, "mask", "program"), "mask");
  if (mask != "causal" && mask != "full") bad("mask", "unknown mask '" + mask + "'");
  p.mask = mask == "causal" ? tf::Mask::kCausal : tf::Mask::kFull;
  const auto& fx = field(j, "fx", "program");
  p.fmt.integer_bits = static_cast<int>(as_int(field(fx, "integer_bits", "fx"), "fx.integer_bits"));
  p.fmt.fraction_bits = static_cast<int>(as_int(field(fx, "fraction_bits", "fx"), "fx.fraction_bits"));
  p.embed_dim = as_size(field(j, "embed_dim", "program"), "embed_dim");
  for (const auto& v : as_array(field(j, "vocab", "program"), "vocab")) p.vocab.push_back(as_string(v, "vocab"));
  p.answer_length = as_size(field(j, "answer_length", "program"), "answer_length");
  p.declared_budget = as_size(field(j, "declared_budget", "program"), "declared_budget");
  if (j.contains("meta")) {
    const auto& meta = j["meta"];
    if (!meta.is_object()) bad("meta", "expected an object");
    for (auto it = meta.begin(); it != meta.end(); ++it) p.meta[it.key()] = as_int(it.value(), "meta." + it.key());
  }
  const auto m = p.embed_dim;
  const auto& we = as_array(field(j, "word_embed", "program"), "word_embed");
  for (std::size_t i = 0; i < we.size(); ++i) p.word_embed.push_back(dense_row(we[i], m, "word_embed[" + std::to_string(i) + "]"));
  const auto& pe = field(j, "pos_embed", "program");
  p.pos_embed.loops = as_size(field(pe, "loops", "pos_embed"), "pos_embed.loops");
  p.pos_embed.positions = as_size(field(pe, "positions", "pos_embed"), "pos_embed.positions");
  const auto& rows = as_array(field(pe, "rows", "pos_embed"), "pos_embed.rows");
  for (std::size_t i = 0; i < rows.size(); ++i) {
    p.pos_embed.rows.push_back(dense_row(rows[i], m, "pos_embed.rows[" + std::to_string(i) + "]"));
  }
  const auto& layers = as_array(field(j, "layers", "program"), "layers");
  for (std::size_t li = 0; li < layers.size(); ++li) {
    const std::string where = "layers[" + std::to_string(li) + "]";
    tf::Layer l;
    const auto& heads = as_array(field(layers[li], "heads", where), where + ".heads");
    for (std::size_t h = 0; h < heads.size(); ++h) {
      const std::string hw = where + ".heads[" + std::to_string(h) + "]";
      l.heads.push_back({matrix_from_json(field(heads[h], "query", hw), hw + ".query"),
                         matrix_from_json(field(heads[h], "key", hw), hw + ".key"),
                         matrix_from_json(field(heads[h], "value", hw), hw + ".value")});
    }
    l.merge = matrix_from_json(field(layers[li], "merge", where), where + ".merge");
    const auto& ff = field(layers[li], "ff", where);
    const auto type = as_string(field(ff, "type", where + ".ff"), where + ".ff.type");
    if (type == "none") {
      l.ff = std::monostate{};
    } else if (type == "standard") {
      l.ff = ff_from_json(ff, where + ".ff");
    } else if (type == "moe") {
      tf::MoEFF moe;
      moe.gate = matrix_from_json(field(ff, "gate", where + ".ff"), where + ".ff.gate");
      const auto& ex = as_array(field(ff, "experts", where + ".ff"), where + ".ff.experts");
      for (std::size_t e = 0; e < ex.size(); ++e) {
        moe.experts.push_back(ff_from_json(ex[e], where + ".ff.experts[" + std::to_string(e) + "]"));
      }
      l.ff = std::move(moe);
    } else {
      bad(where + ".ff.type", "unknown feedforward type '" + type + "'");
    }
    p.layers.push_back(std::move(l));
  }
  p.output_proj = matrix_from_json(field(j, "output_proj", "program"), "output_proj");
  p.validate();
  return p;
}

// ---- layout manifests

namespace {

Json slots_json(const Layout& l) {
  Json out = Json::array();
  for (const auto& s : l.slots()) out.push_back({{"name", s.name}, {"offset", s.offset}, {"width", s.width}});
  return out;
}

}  // namespace

Json layout_manifest(const cot::CotCompilation& c) {
  Json j;
  j["format"] = kLayoutFormat;
  j["mode"] = "cot";
  j["embed_dim"] = c.layout.dim();
  j["slots"] = slots_json(c.layout);
  j["order"] = c.order;
  j["labels"] = c.labels;
  j["position_bits"] = c.position_bits;
  return j;
}

Json layout_manifest(const loop::LoopCompilation& c) {
  Json j;
  j["format"] = kLayoutFormat;
  j["mode"] = "loop";
  j["embed_dim"] = c.program.embed_dim;
  j["slots"] = slots_json(c.position_layout);
  j["block_slots"] = slots_json(c.block_layout);
  j["block_dim"] = c.block_layout.dim();
  j["width"] = c.width;
  j["position_bits"] = c.position_bits;
  j["labels"] = c.labels;
  j["symbols"] = c.symbols;
  Json pl = Json::array();
  for (const auto& [id, at] : c.placement) {
    pl.push_back({{"node", id}, {"position", at.position}, {"block", at.block}, {"layer", c.layers.depth_of.at(id)}});
  }
  j["placement"] = std::move(pl);
  j["expanded_graph"] = graph_to_json(c.expanded);
  return j;
}

Json layout_manifest(const loop::CircuitCompilation& c) {
  Json j;
  j["format"] = kLayoutFormat;
  j["mode"] = "circuit";
  j["embed_dim"] = c.layout.dim();
  j["slots"] = slots_json(c.layout);
  j["node_order"] = c.node_order;
  j["depth"] = c.depth;
  return j;
}

// ---- relations

rel::RelationPtr relation_from_json(const Json& j) {
  const auto kind = as_string(field(j, "relation", "instance"), "relation");
  if (kind == "sat") {
    const auto vars = static_cast<int>(as_int(field(j, "vars", "instance"), "vars"));
    std::vector<std::vector<int>> clauses;
    const auto& cs = as_array(field(j, "clauses", "instance"), "clauses");
    for (std::size_t i = 0; i < cs.size(); ++i) {
      const std::string where = "clauses[" + std::to_string(i) + "]";
      std::vector<int> c;
      for (const auto& lit : as_array(cs[i], where)) c.push_back(static_cast<int>(as_int(lit, where)));
      clauses.push_back(std::move(c));
    }
    return rel::make_sat(vars, std::move(clauses));
  }
  if (kind == "path_independent_set") return rel::make_path(static_cast<int>(as_int(field(j, "k", "instance"), "k")));
  bad("relation", "unknown relation '" + kind + "'");
}

Json relation_to_json(const rel::Relation& x) {
  if (const auto* s = dynamic_cast<const rel::SatInstance*>(&x)) {
    return {{"relation", "sat"}, {"vars", s->vars()}, {"clauses", s->clauses()}};
  }
  if (const auto* p = dynamic_cast<const rel::PathIndepSet*>(&x)) {
    Json j = {{"relation", "path_independent_set"}, {"k", p->k()}};
    if (p->first_blocked()) j["first_blocked"] = true;
    if (p->infeasible()) j["infeasible"] = true;
    return j;
  }
  return {{"relation", x.kind()}, {"describe", x.describe()}};
}

rel::RelationPtr parse_dimacs(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  int vars = -1;
  long declared = -1;
  std::vector<std::vector<int>> clauses;
  std::vector<int> cur;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string where = "dimacs:" + std::to_string(lineno);
    std::istringstream ls(line);
    std::string tok;
    if (!(ls >> tok)) continue;
    if (tok == "c" || tok[0] == 'c' || tok == "%") continue;
    if (tok == "p") {
      std::string fmt;
      if (!(ls >> fmt >> vars >> declared) || fmt != "cnf" || vars < 0 || declared < 0) {
        bad(where, "malformed problem line");
      }
      continue;
    }
    if (vars < 0) bad(where, "clause before the 'p cnf' line");
    for (std::istringstream ts(line); ts >> tok;) {
      int lit = 0;
      try {
        std::size_t used = 0;
        lit = std::stoi(tok, &used);
        if (used != tok.size()) throw std::invalid_argument(tok);
      } catch (const std::exception&) {
        bad(where, "bad literal '" + tok + "'");
      }
      if (lit == 0) {
        clauses.push_back(std::move(cur));
        cur.clear();
      } else {
        if (std::abs(lit) > vars) bad(where, "literal " + tok + " exceeds declared variable count");
        cur.push_back(lit);
      }
    }
  }
  if (vars < 0) bad("dimacs", "missing 'p cnf' line");
  if (!cur.empty()) clauses.push_back(std::move(cur));
  if (static_cast<long>(clauses.size()) != declared) {
    bad("dimacs", "declared " + std::to_string(declared) + " clauses, found " + std::to_string(clauses.size()));
  }
  return rel::make_sat(vars, std::move(clauses));
}

rel::RelationPtr load_relation(const std::string& path) {
  const auto text = read_file(path);
  const auto first = text.find_first_not_of(" \t\r\n");
  if (first != std::string::npos && text[first] == '{') return relation_from_json(parse_json(text, path));
  return parse_dimacs(text);
}

// ---- reports

Json sampler_report_to_json(const sampler::SamplerReport& r) {
  auto opt = [](const auto& v) -> Json { return v ? Json(*v) : Json(nullptr); };
  Json j;
  j["relation"] = r.relation;
  j["gamma"] = r.gamma;
  j["alpha"] = r.alpha;
  j["delta"] = r.delta;
  j["epsilon"] = r.epsilon;
  j["failure_mode"] = r.failure_mode;
  j["p_source"] = r.p_source;
  j["samples_requested"] = r.samples_requested;
  j["accepted"] = r.accepted;
  j["all_rejected"] = r.all_rejected;
  j["trials_used"] = r.trials_used;
  j["N"] = r.N;
  j["per_token_T"] = r.per_token_T;
  j["brute_count"] = opt(r.brute_count);
  j["count_estimate"] = opt(r.count_estimate);
  j["p_hat"] = r.p_hat;
  j["acceptance_rate"] = r.acceptance_rate;
  j["tv_exact"] = opt(r.tv_exact);
  j["tv_empirical"] = opt(r.tv_empirical);
  j["histogram"] = r.histogram;
  return j;
}

Json manifest_to_json(const Manifest& m) {
  return {{"command", m.command},
          {"input_hash", m.input_hash},
          {"seed", m.seed ? Json(*m.seed) : Json(nullptr)},
          {"config", m.config},
          {"format", kReportFormat}};
}

Json make_report(const Manifest& m, Json body) {
  body["format"] = kReportFormat;
  body["manifest"] = manifest_to_json(m);
  return body;
}

}  // namespace cotloop::io
