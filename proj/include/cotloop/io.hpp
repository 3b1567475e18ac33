// Copyright 2026 The cotloop Authors
// SPDX-License-Identifier: Apache-2.0
//
// JSON and DIMACS formats: graphs, circuits, compiled programs, layout
// manifests, relation instances and reports.

#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include <json.hpp>

#include "cotloop/cot_compiler.hpp"
#include "cotloop/graph.hpp"
#include "cotloop/loop_compiler.hpp"
#include "cotloop/relations.hpp"
#include "cotloop/sampler.hpp"
#include "cotloop/tfcore.hpp"

namespace cotloop::io {

using Json = nlohmann::json;

inline constexpr const char* kProgramFormat = "cotloop-program/1";
inline constexpr const char* kLayoutFormat = "cotloop-layout/1";
inline constexpr const char* kReportFormat = "cotloop-report/1";

std::string read_file(const std::string& path);
// Writes through a temporary file and renames it into place.
void write_file(const std::string& path, const std::string& text);

// Throws kParse with the byte offset (and line/column) of the problem.
Json parse_json(const std::string& text, const std::string& source = "<string>");
Json load_json(const std::string& path);
std::string dump(const Json& j);

std::uint64_t fnv1a64(const std::string& bytes);
std::string hex64(std::uint64_t v);

graph::CompGraph graph_from_json(const Json& j);
Json graph_to_json(const graph::CompGraph& g);

loop::ThresholdCircuit circuit_from_json(const Json& j);
Json circuit_to_json(const loop::ThresholdCircuit& c);

Json program_to_json(const tf::TransformerProgram& p);
tf::TransformerProgram program_from_json(const Json& j);

Json layout_manifest(const cot::CotCompilation& c);
Json layout_manifest(const loop::LoopCompilation& c);
Json layout_manifest(const loop::CircuitCompilation& c);

// {"relation": "sat", "vars": V, "clauses": [[...]]} or
// {"relation": "path_independent_set", "k": K}.
rel::RelationPtr relation_from_json(const Json& j);
Json relation_to_json(const rel::Relation& x);
rel::RelationPtr parse_dimacs(const std::string& text);
// JSON if the text starts with '{', DIMACS otherwise.
rel::RelationPtr load_relation(const std::string& path);

Json sampler_report_to_json(const sampler::SamplerReport& r);

struct Manifest {
  std::string command;
  std::string input_hash;
  std::optional<std::uint64_t> seed;
  Json config = Json::object();
};

Json manifest_to_json(const Manifest& m);
// {"manifest": ..., "format": kReportFormat, ...body}
Json make_report(const Manifest& m, Json body);

}  // namespace cotloop::io
