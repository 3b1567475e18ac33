// Copyright 2026 The cotloop Authors
// SPDX-License-Identifier: Apache-2.0
//
// Command-line front end. Builds a JSON config from the flags and hands it to
// the C API; reports go to --out or stdout.

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "cotloop/cotloop.h"

namespace {

using Json = nlohmann::json;

constexpr int kExitFailedCheck = 1;
constexpr int kExitError = 3;

struct CommandError {
  cotloop_status status;
  std::string message;
};

void setup_logging() {
  auto logger = spdlog::stderr_color_mt("cotloop");
  spdlog::set_default_logger(logger);
  spdlog::set_pattern("[%l] %v");
  const char* env = std::getenv("COTLOOP_LOG");
  spdlog::set_level(env ? spdlog::level::from_str(env) : spdlog::level::warn);
}

Json call(const std::string& command, const Json& config) {
  spdlog::debug("{} {}", command, config.dump());
  char* out = nullptr;
  const auto st = cotloop_command(command.c_str(), config.dump().c_str(), &out);
  if (st != COTLOOP_OK) throw CommandError{st, cotloop_last_error()};
  Json j = Json::parse(out);
  cotloop_string_free(out);
  return j;
}

void write_text(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text;
    return;
  }
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw CommandError{COTLOOP_E_IO, "cannot write " + path};
  f << text;
  spdlog::info("wrote {}", path);
}

std::string pretty(const Json& j) { return j.dump(2) + "\n"; }

std::string layout_path(const std::string& out) {
  const std::string ext = ".json";
  if (out.size() > ext.size() && out.compare(out.size() - ext.size(), ext.size(), ext) == 0) {
    return out.substr(0, out.size() - ext.size()) + ".layout.json";
  }
  return out + ".layout.json";
}

// "a,b,a" or "a b a" -> ["a", "b", "a"]
Json split_tokens(const std::string& s) {
  Json out = Json::array();
  std::string cur;
  for (char c : s) {
    if (c == ',' || c == ' ') {
      if (!cur.empty()) out.push_back(cur);
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  if (!cur.empty()) out.push_back(cur);
  return out;
}

struct Flags {
  std::string input;
  std::string out;
  std::string program;
  std::string mode;
  std::string format = "json";
  std::optional<std::uint64_t> seed;
  std::optional<long long> budget;
  std::optional<double> gamma, delta, epsilon;
  std::string alpha;
  std::optional<std::size_t> samples, random, runs, width;
  std::optional<int> fan_in_cap;
  std::string precision;
  std::string failure_mode;
  std::string fault;
  bool faults = false;
  std::vector<std::string> xs;
};

void common(CLI::App* sub, Flags& f, bool needs_input = true) {
  auto* in = sub->add_option("--input,-i", f.input, "Input file");
  if (needs_input) in->required();
  sub->add_option("--out,-o", f.out, "Output path (stdout when omitted)");
  sub->add_option("--format", f.format, "Output format")->check(CLI::IsMember({"json"}));
}

}  // namespace

int main(int argc, char** argv) {
  setup_logging();
  CLI::App app{"cotloop: compile graphs and circuits to fixed-point transformer programs, verify them, "
               "and run the weak-CoT sampler"};
  app.require_subcommand(1);
  app.set_version_flag("--version", cotloop_version());
  Flags f;

  auto* cc = app.add_subcommand("compile-cot", "Compile a graph to a CoT program");
  auto* cl = app.add_subcommand("compile-loop", "Compile a graph to a looped program");
  auto* ci = app.add_subcommand("compile-circuit", "Compile a threshold circuit to a looped program");
  for (auto* s : {cc, cl, ci}) {
    common(s, f);
    s->get_option("--out")->required()->description("Program output path; the layout goes next to it");
    s->add_option("--fan-in-cap", f.fan_in_cap, "Bound on function arity");
  }
  cl->add_option("--width", f.width, "Blocks per position (default ceil(S/n))");
  ci->add_option("--precision", f.precision, "log-bit or constant-bit")
      ->check(CLI::IsMember({"log-bit", "constant-bit"}));

  auto* run = app.add_subcommand("run", "Run a program (or graph/circuit) on inputs");
  common(run, f);
  run->add_option("--x", f.xs, "Input tokens, comma separated; repeatable");
  run->add_option("--random", f.random, "Also run on this many seeded random inputs");
  run->add_option("--seed", f.seed, "Seed");
  run->add_option("--budget", f.budget, "Steps or loops (default: declared)");
  run->add_option("--mode", f.mode, "cot or loop, for graph input");

  auto* ver = app.add_subcommand("verify", "Check a compiled program against the reference evaluator");
  common(ver, f);
  ver->add_option("--program", f.program, "Compiled program to check instead of a fresh compile");
  ver->add_option("--mode", f.mode, "cot or loop, for graph input");
  ver->add_option("--samples", f.samples, "Random inputs when the input space is large");
  ver->add_option("--seed", f.seed, "Seed");
  ver->add_option("--precision", f.precision, "log-bit or constant-bit, for circuits");

  auto* sam = app.add_subcommand("sample", "Almost-uniform sampling with the weak CoT oracle");
  auto* cnt = app.add_subcommand("count", "Approximate counting from the sampler");
  for (auto* s : {sam, cnt}) {
    common(s, f);
    s->add_option("--seed", f.seed, "Seed (required)")->required();
    s->add_option("--gamma", f.gamma, "Oracle advantage in (0, 1/2)");
    s->add_option("--alpha", f.alpha, "Cross-entropy bound, or 'schedule'");
    s->add_option("--delta", f.delta, "Failure probability for the median step");
    s->add_option("--failure-mode", f.failure_mode, "uniform-garbage, antipodal or adversarial-argmax-flip");
  }
  sam->add_option("--epsilon", f.epsilon, "Target total variation");
  sam->add_option("--samples", f.samples, "Number of samples");
  sam->add_option("--mode", f.mode, "oracle-exact or estimated");
  cnt->add_option("--runs", f.runs, "Independent runs with seeds seed, seed+1, ...");

  auto* chk = app.add_subcommand("selfcheck", "Run the embedded invariant suite");
  common(chk, f, false);
  chk->add_option("--inject-fault", f.fault, "Test hook: gate-table, selector-key or cot-expert");
  chk->add_flag("--faults", f.faults, "Also run the fault-injection set");
  chk->add_option("--seed", f.seed, "Corpus seed");

  CLI11_PARSE(app, argc, argv);

  Json cfg = Json::object();
  auto set = [&](const char* key, const auto& v) {
    if (v) cfg[key] = *v;
  };
  auto set_str = [&](const char* key, const std::string& v) {
    if (!v.empty()) cfg[key] = v;
  };
  if (!f.input.empty()) cfg["input"] = f.input;
  set("seed", f.seed);

  try {
    if (cc->parsed() || cl->parsed() || ci->parsed()) {
      cfg["mode"] = cc->parsed() ? "cot" : (cl->parsed() ? "loop" : "circuit");
      set("fan_in_cap", f.fan_in_cap);
      set("width", f.width);
      set_str("precision", f.precision);
      const auto r = call("compile", cfg);
      write_text(f.out, pretty(r["program"]));
      write_text(layout_path(f.out), pretty(r["layout"]));
      auto report = r["report"];
      report["out"] = f.out;
      report["layout_out"] = layout_path(f.out);
      std::cout << pretty(report);
      return 0;
    }
    if (run->parsed()) {
      set_str("mode", f.mode);
      set("random", f.random);
      if (f.budget) {
        if (*f.budget < 0) throw CommandError{COTLOOP_E_INVALID_ARGUMENT, "budget must be nonnegative"};
        cfg["budget"] = *f.budget;
      }
      if (!f.xs.empty()) {
        cfg["inputs"] = Json::array();
        for (const auto& x : f.xs) cfg["inputs"].push_back(split_tokens(x));
      }
      write_text(f.out, pretty(call("run", cfg)));
      return 0;
    }
    if (ver->parsed()) {
      set_str("mode", f.mode);
      set_str("program", f.program);
      set("samples", f.samples);
      set_str("precision", f.precision);
      const auto r = call("verify", cfg);
      write_text(f.out, pretty(r));
      if (!r.value("pass", false)) {
        spdlog::error("verification failed: {} mismatches", r.value("mismatches", 0));
        return kExitFailedCheck;
      }
      return 0;
    }
    if (sam->parsed() || cnt->parsed()) {
      set("gamma", f.gamma);
      set("delta", f.delta);
      set_str("failure_mode", f.failure_mode);
      if (!f.alpha.empty()) {
        if (f.alpha == "schedule") {
          cfg["alpha"] = "schedule";
        } else {
          try {
            cfg["alpha"] = std::stod(f.alpha);
          } catch (const std::exception&) {
            throw CommandError{COTLOOP_E_INVALID_ARGUMENT, "alpha must be a number or 'schedule'"};
          }
        }
      }
      if (sam->parsed()) {
        set("epsilon", f.epsilon);
        set("samples", f.samples);
        set_str("p_source", f.mode);
      } else {
        set("runs", f.runs);
      }
      const auto r = call(sam->parsed() ? "sample" : "count", cfg);
      write_text(f.out, pretty(r));
      if (r.contains("sampling") && r["sampling"] == "refused") spdlog::warn("instance has no solutions; sampling refused");
      return 0;
    }
    if (chk->parsed()) {
      set_str("fault", f.fault);
      if (f.faults) cfg["faults"] = true;
      const auto r = call("selfcheck", cfg);
      write_text(f.out, pretty(r));
      if (!r.value("pass", false)) {
        std::cerr << "selfcheck failed: " << r["first_failure"].get<std::string>() << "\n";
        return kExitFailedCheck;
      }
      if (r.contains("negative_controls_pass") && !r["negative_controls_pass"].get<bool>()) {
        std::cerr << "selfcheck: a fault went undetected\n";
        return kExitFailedCheck;
      }
      return 0;
    }
  } catch (const CommandError& e) {
    std::cerr << "error: " << e.message << "\n";
    return kExitError;
  }
  return 0;
}
