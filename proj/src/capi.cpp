// Copyright 2026 The cotloop Authors
// SPDX-License-Identifier: Apache-2.0

#include "cotloop/cotloop.h"

#include <algorithm>
#include <cstdlib>
#include <cstring>
#include <new>
#include <optional>
#include <stdexcept>
#include <string>

#include "cotloop/commands.hpp"
#include "cotloop/errors.hpp"
#include "cotloop/io.hpp"

struct cotloop_graph {
  cotloop::graph::CompGraph g;
};
struct cotloop_circuit {
  cotloop::loop::ThresholdCircuit c;
};
struct cotloop_program {
  cotloop::tf::TransformerProgram p;
};
struct cotloop_relation {
  cotloop::rel::RelationPtr x;
};

namespace {

thread_local std::string g_last_error;

struct BufferTooSmall : std::runtime_error {
  using std::runtime_error::runtime_error;
};

cotloop_status status_of(cotloop::ErrorCode code) {
  using cotloop::ErrorCode;
  switch (code) {
    case ErrorCode::kInvalidArgument: return COTLOOP_E_INVALID_ARGUMENT;
    case ErrorCode::kOverflow: return COTLOOP_E_OVERFLOW;
    case ErrorCode::kOutOfRange: return COTLOOP_E_OUT_OF_RANGE;
    case ErrorCode::kParse: return COTLOOP_E_PARSE;
    case ErrorCode::kValidation: return COTLOOP_E_VALIDATION;
    case ErrorCode::kCycle: return COTLOOP_E_CYCLE;
    case ErrorCode::kArity: return COTLOOP_E_ARITY;
    case ErrorCode::kFanIn: return COTLOOP_E_FAN_IN;
    case ErrorCode::kWidth: return COTLOOP_E_WIDTH;
    case ErrorCode::kBudget: return COTLOOP_E_BUDGET;
    case ErrorCode::kBudgetTooSmall: return COTLOOP_E_BUDGET_TOO_SMALL;
    case ErrorCode::kMarginViolated: return COTLOOP_E_MARGIN_VIOLATED;
    case ErrorCode::kCapExceeded: return COTLOOP_E_CAP_EXCEEDED;
    case ErrorCode::kDeadEnd: return COTLOOP_E_DEAD_END;
    case ErrorCode::kEmptySolutionSet: return COTLOOP_E_EMPTY_SOLUTION_SET;
    case ErrorCode::kAllRejected: return COTLOOP_E_ALL_REJECTED;
    case ErrorCode::kZeroPath: return COTLOOP_E_ZERO_PATH;
    case ErrorCode::kConsistency: return COTLOOP_E_CONSISTENCY;
    case ErrorCode::kSupportMismatch: return COTLOOP_E_SUPPORT_MISMATCH;
    case ErrorCode::kIo: return COTLOOP_E_IO;
  }
  return COTLOOP_E_INTERNAL;
}

template <typename Fn>
cotloop_status guard(Fn&& fn) {
  try {
    fn();
    g_last_error.clear();
    return COTLOOP_OK;
  } catch (const cotloop::Error& e) {
    g_last_error = e.what();
    return status_of(e.code());
  } catch (const BufferTooSmall& e) {
    g_last_error = e.what();
    return COTLOOP_E_BUFFER_TOO_SMALL;
  } catch (const std::bad_alloc&) {
    g_last_error = "out of memory";
    return COTLOOP_E_INTERNAL;
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return COTLOOP_E_INTERNAL;
  }
}

void need(const void* p, const char* what) {
  if (p == nullptr) throw cotloop::Error(cotloop::ErrorCode::kInvalidArgument, std::string(what) + " is null");
}

char* copy_string(const std::string& s) {
  auto* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (out == nullptr) throw std::bad_alloc();
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

void put_json(char** dst, const cotloop::io::Json& j) {
  if (dst != nullptr) *dst = copy_string(cotloop::io::dump(j));
}

void copy_out(const std::vector<int>& v, int* out, size_t cap, size_t* len) {
  if (len != nullptr) *len = v.size();
  if (v.size() > cap) {
    throw BufferTooSmall("output buffer holds " + std::to_string(cap) + ", need " + std::to_string(v.size()));
  }
  need(out, "output buffer");
  std::copy(v.begin(), v.end(), out);
}

cotloop::sampler::WeakOracleConfig oracle(const cotloop_sampler_config& c) {
  cotloop::sampler::WeakOracleConfig w;
  w.gamma = c.gamma;
  w.alpha = c.alpha;
  w.seed = c.seed;
  return w;
}

}  // namespace

extern "C" {

const char* cotloop_version(void) { return "0.1.0"; }

const char* cotloop_status_name(cotloop_status status) {
  switch (status) {
    case COTLOOP_OK: return "Ok";
    case COTLOOP_E_BUFFER_TOO_SMALL: return "BufferTooSmall";
    case COTLOOP_E_INTERNAL: return "Internal";
    default: break;
  }
  if (status >= COTLOOP_E_INVALID_ARGUMENT && status <= COTLOOP_E_IO) {
    return cotloop::error_code_name(static_cast<cotloop::ErrorCode>(status - 1));
  }
  return "Unknown";
}

const char* cotloop_last_error(void) { return g_last_error.c_str(); }

void cotloop_string_free(char* s) { std::free(s); }

cotloop_status cotloop_graph_from_json(const char* json, cotloop_graph** out) {
  return guard([&] {
    need(json, "json");
    need(out, "out");
    *out = nullptr;
    auto h = new cotloop_graph{cotloop::io::graph_from_json(cotloop::io::parse_json(json))};
    *out = h;
  });
}

cotloop_status cotloop_graph_load(const char* path, cotloop_graph** out) {
  return guard([&] {
    need(path, "path");
    need(out, "out");
    *out = nullptr;
    *out = new cotloop_graph{cotloop::io::graph_from_json(cotloop::io::load_json(path))};
  });
}

void cotloop_graph_free(cotloop_graph* g) { delete g; }

cotloop_status cotloop_graph_validate(const cotloop_graph* g, int fan_in_cap) {
  return guard([&] {
    need(g, "graph");
    cotloop::graph::ValidationOptions o;
    o.fan_in_cap = fan_in_cap;
    cotloop::graph::require_valid(g->g, o);
  });
}

cotloop_status cotloop_graph_evaluate(const cotloop_graph* g, const int* x, size_t n, int* out, size_t out_cap,
                                      size_t* out_len) {
  return guard([&] {
    need(g, "graph");
    if (n > 0) need(x, "x");
    copy_out(cotloop::graph::evaluate(g->g, std::span<const int>(x, n)), out, out_cap, out_len);
  });
}

cotloop_status cotloop_graph_info(const cotloop_graph* g, char** json_out) {
  return guard([&] {
    need(g, "graph");
    need(json_out, "json_out");
    cotloop::io::Json j = {{"size", g->g.nodes.size()},
                           {"depth", cotloop::graph::layerize(g->g).depth()},
                           {"steps", cotloop::cot::cot_step_count(g->g)},
                           {"loops", cotloop::loop::loop_count(g->g)},
                           {"parallel_space", cotloop::graph::parallel_space(g->g)}};
    put_json(json_out, j);
  });
}

cotloop_status cotloop_circuit_from_json(const char* json, cotloop_circuit** out) {
  return guard([&] {
    need(json, "json");
    need(out, "out");
    *out = nullptr;
    auto c = cotloop::io::circuit_from_json(cotloop::io::parse_json(json));
    c.validate();
    *out = new cotloop_circuit{std::move(c)};
  });
}

void cotloop_circuit_free(cotloop_circuit* c) { delete c; }

cotloop_status cotloop_circuit_evaluate(const cotloop_circuit* c, const int* bits, size_t n, int* out) {
  return guard([&] {
    need(c, "circuit");
    need(out, "out");
    if (n > 0) need(bits, "bits");
    *out = c->c.evaluate(std::span<const int>(bits, n));
  });
}

cotloop_status cotloop_compile_cot(const cotloop_graph* g, int fan_in_cap, cotloop_program** out,
                                   char** layout_json) {
  return guard([&] {
    need(g, "graph");
    need(out, "out");
    *out = nullptr;
    cotloop::cot::CotOptions o;
    o.fan_in_cap = fan_in_cap;
    auto c = cotloop::cot::compile_cot(g->g, o);
    put_json(layout_json, cotloop::io::layout_manifest(c));
    *out = new cotloop_program{std::move(c.program)};
  });
}

cotloop_status cotloop_compile_loop(const cotloop_graph* g, int fan_in_cap, size_t width, cotloop_program** out,
                                    char** layout_json) {
  return guard([&] {
    need(g, "graph");
    need(out, "out");
    *out = nullptr;
    cotloop::loop::LoopOptions o;
    o.fan_in_cap = fan_in_cap;
    o.width = width;
    auto c = cotloop::loop::compile_looped(g->g, o);
    put_json(layout_json, cotloop::io::layout_manifest(c));
    *out = new cotloop_program{std::move(c.program)};
  });
}

cotloop_status cotloop_compile_circuit(const cotloop_circuit* c, int constant_bit, cotloop_program** out,
                                       char** layout_json) {
  return guard([&] {
    need(c, "circuit");
    need(out, "out");
    *out = nullptr;
    auto cc = cotloop::loop::compile_circuit_looped(
        c->c, constant_bit ? cotloop::loop::Precision::kConstantBit : cotloop::loop::Precision::kLogBit);
    put_json(layout_json, cotloop::io::layout_manifest(cc));
    *out = new cotloop_program{std::move(cc.program)};
  });
}

cotloop_status cotloop_program_from_json(const char* json, cotloop_program** out) {
  return guard([&] {
    need(json, "json");
    need(out, "out");
    *out = nullptr;
    *out = new cotloop_program{cotloop::io::program_from_json(cotloop::io::parse_json(json))};
  });
}

cotloop_status cotloop_program_to_json(const cotloop_program* p, char** json_out) {
  return guard([&] {
    need(p, "program");
    need(json_out, "json_out");
    put_json(json_out, cotloop::io::program_to_json(p->p));
  });
}

void cotloop_program_free(cotloop_program* p) { delete p; }

size_t cotloop_program_budget(const cotloop_program* p) { return p == nullptr ? 0 : p->p.declared_budget; }

cotloop_status cotloop_program_run(const cotloop_program* p, const int* x, size_t n, long long budget, int* out,
                                   size_t out_cap, size_t* out_len) {
  return guard([&] {
    need(p, "program");
    if (n > 0) need(x, "x");
    std::optional<std::size_t> b;
    if (budget >= 0) b = static_cast<std::size_t>(budget);
    const auto r = cotloop::tf::run_program(p->p, std::span<const int>(x, n), b);
    copy_out(r.answer, out, out_cap, out_len);
  });
}

cotloop_status cotloop_relation_parse(const char* text, cotloop_relation** out) {
  return guard([&] {
    need(text, "text");
    need(out, "out");
    *out = nullptr;
    const std::string s(text);
    const auto first = s.find_first_not_of(" \t\r\n");
    auto x = first != std::string::npos && s[first] == '{'
                 ? cotloop::io::relation_from_json(cotloop::io::parse_json(s))
                 : cotloop::io::parse_dimacs(s);
    *out = new cotloop_relation{std::move(x)};
  });
}

void cotloop_relation_free(cotloop_relation* r) { delete r; }

cotloop_status cotloop_relation_brute_count(const cotloop_relation* r, uint64_t* out) {
  return guard([&] {
    need(r, "relation");
    need(out, "out");
    *out = cotloop::rel::brute_count(*r->x);
  });
}

cotloop_sampler_config cotloop_sampler_config_default(void) {
  cotloop_sampler_config c;
  c.gamma = 0.25;
  c.alpha = 0.01;
  c.delta = 0.05;
  c.epsilon = 0.1;
  c.seed = 0;
  c.samples = 1000;
  c.estimated_p = 0;
  return c;
}

cotloop_status cotloop_sample(const cotloop_relation* r, const cotloop_sampler_config* cfg, char** report_json) {
  return guard([&] {
    need(r, "relation");
    need(cfg, "config");
    need(report_json, "report_json");
    cotloop::sampler::SampleOptions o;
    o.samples = cfg->samples;
    o.delta = cfg->delta;
    o.epsilon = cfg->epsilon;
    o.p_source = cfg->estimated_p ? cotloop::sampler::PSource::kEstimated : cotloop::sampler::PSource::kOracleExact;
    put_json(report_json, cotloop::io::sampler_report_to_json(cotloop::sampler::run_sampler(oracle(*cfg), r->x, o)));
  });
}

cotloop_status cotloop_count_estimate(const cotloop_relation* r, const cotloop_sampler_config* cfg, double* out) {
  return guard([&] {
    need(r, "relation");
    need(cfg, "config");
    need(out, "out");
    cotloop::sampler::MedianModel model(oracle(*cfg), r->x, cfg->delta);
    *out = cotloop::sampler::count_estimate(model).value;
  });
}

cotloop_status cotloop_command(const char* command, const char* config_json, char** result_json) {
  return guard([&] {
    need(command, "command");
    need(config_json, "config_json");
    need(result_json, "result_json");
    *result_json = nullptr;
    const auto config = cotloop::io::parse_json(config_json, "config");
    if (!config.is_object()) throw cotloop::Error(cotloop::ErrorCode::kInvalidArgument, "config must be an object");
    put_json(result_json, cotloop::cmd::dispatch(command, config));
  });
}

}  // extern "C"
